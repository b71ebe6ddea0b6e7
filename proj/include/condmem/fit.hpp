#pragma once

#include <optional>
#include <string>
#include <vector>

#include "condmem/types.hpp"

namespace condmem {

enum class FitModel : std::uint8_t { gaussian, exp_decay, modulated_gaussian, p2c_p22c_pair };

const char* to_string(FitModel model);
/// Throws InvalidParameter for unknown names.
FitModel fit_model_from_string(const std::string& name);

/// Parameter names in order:
///   gaussian            p0, T                 p0 exp(-x^2/T^2)
///   exp_decay           A, Nc                 A exp(-x/Nc)
///   modulated_gaussian  p0, T, V, delta_omega p0 exp(-x^2/T^2)(1 - V cos(delta_omega x))
///   p2c_p22c_pair       pc, Nc                series 0: p22c(x), series 1: p2c(x)
std::vector<std::string> parameter_names(FitModel model);

double evaluate_model(FitModel model, const std::vector<double>& params, double x, int series = 0);

struct DataPoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;  ///< <= 0 selects the Poisson variance max(y, 1)
    int series = 0;
};

struct FitOptions {
    std::optional<std::vector<double>> initial;
    std::vector<bool> fixed;  ///< empty or one flag per parameter
    int max_iterations = 5000;
    /// Profile the chi-square in delta_omega for its doubling interval (modulated model).
    bool profile_delta_omega = true;
};

struct FitResult {
    FitModel model = FitModel::gaussian;
    std::vector<std::string> names;
    std::vector<double> params;
    std::vector<double> errors;  ///< from the chi-square curvature; 0 for fixed parameters
    double chi2 = 0.0;
    int dof = 0;
    double gradient_norm = 0.0;
    bool converged = false;
    int iterations = 0;
    /// Half-width of the delta_omega range where chi2 <= 2 chi2_min, V re-optimized.
    std::optional<double> delta_omega_doubling_error;

    double param(const std::string& name) const;
    double error(const std::string& name) const;
};

/*!
 * Weighted least squares by Levenberg-Marquardt damping on a central-difference
 * Jacobian. Starting values come from `options.initial` or the deterministic
 * initialization of each model. Needs at least free parameters + 3 points.
 *
 * Throws InvalidParameter on too few points, NoConvergence after
 * options.max_iterations, DegenerateJacobian when the Jacobian is not finite
 * or vanishes for a free parameter at the start.
 */
FitResult fit(FitModel model, const std::vector<DataPoint>& data, const FitOptions& options = {});

/// Starting values used when options.initial is absent.
std::vector<double> initial_guess(FitModel model, const std::vector<DataPoint>& data);

double chi_square(FitModel model, const std::vector<double>& params,
                  const std::vector<DataPoint>& data);

std::string to_json(const FitResult& result);

/// delta_omega in rad/ns for a detuning in MHz.
double mhz_to_rad_per_ns(double mhz);
double rad_per_ns_to_mhz(double rad_per_ns);

}  // namespace condmem
