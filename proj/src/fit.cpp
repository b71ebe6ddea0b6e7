#include "condmem/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>

#include <Eigen/Dense>

#include "json.hpp"

#include "condmem/control.hpp"

namespace condmem {
namespace {

constexpr double kRelativeStep = 1e-6;

double variance_of(const DataPoint& p) {
    return p.sigma > 0.0 ? p.sigma * p.sigma : std::max(p.y, 1.0);
}

Eigen::VectorXd residuals(FitModel model, const std::vector<double>& params,
                          const std::vector<DataPoint>& data) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& p = data[i];
        r[static_cast<Eigen::Index>(i)] =
            (p.y - evaluate_model(model, params, p.x, p.series)) / std::sqrt(variance_of(p));
    }
    return r;
}

/// d(residual)/d(param) by central differences, free parameters only.
Eigen::MatrixXd jacobian(FitModel model, const std::vector<double>& params,
                         const std::vector<DataPoint>& data, const std::vector<std::size_t>& free) {
    Eigen::MatrixXd j(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(free.size()));
    for (std::size_t c = 0; c < free.size(); ++c) {
        const std::size_t k = free[c];
        const double h = kRelativeStep * std::max(std::abs(params[k]), 1e-3);
        auto up = params;
        auto down = params;
        up[k] += h;
        down[k] -= h;
        j.col(static_cast<Eigen::Index>(c)) =
            (residuals(model, up, data) - residuals(model, down, data)) / (2.0 * h);
    }
    return j;
}

double gaussian_width_moment(const std::vector<DataPoint>& data) {
    double w = 0.0;
    double m2 = 0.0;
    for (const auto& p : data) {
        if (p.y <= 0.0) continue;
        w += p.y;
        m2 += p.y * p.x * p.x;
    }
    // Second moment of exp(-x^2/T^2) is T^2/2.
    return w > 0.0 ? std::sqrt(2.0 * m2 / w) : 1.0;
}

/// Weighted regression of log(y) on x over points with y > 0: returns (A, decay).
std::pair<double, double> log_linear(const std::vector<DataPoint>& data, int series) {
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& p : data) {
        if (p.series != series || p.y <= 0.0) continue;
        const double w = p.y;  // var(log y) ~ 1/y for counts
        const double ly = std::log(p.y);
        sw += w;
        sx += w * p.x;
        sy += w * ly;
        sxx += w * p.x * p.x;
        sxy += w * p.x * ly;
    }
    const double det = sw * sxx - sx * sx;
    if (sw <= 0.0 || std::abs(det) < 1e-300) return {sw > 0.0 ? std::exp(sy / sw) : 1.0, 10.0};
    const double slope = (sw * sxy - sx * sy) / det;
    const double intercept = (sy - slope * sx) / sw;
    const double decay = slope < 0.0 ? -1.0 / slope : 1e3;
    return {std::exp(intercept), decay};
}

/// Keeps trial points in the physical domain; chi2 is even in T and delta_omega.
void project_to_domain(FitModel model, std::vector<double>& p) {
    if (model != FitModel::modulated_gaussian) return;
    p[1] = std::abs(p[1]);
    p[2] = std::clamp(p[2], 0.0, 1.0);
    p[3] = std::abs(p[3]);
}

struct Solution {
    std::vector<double> params;
    double chi2 = 0.0;
    int iterations = 0;
    double gradient_norm = 0.0;
    Eigen::MatrixXd jtj;
    std::vector<std::size_t> free;
};

Solution levenberg_marquardt(FitModel model, std::vector<double> params,
                             const std::vector<DataPoint>& data, const std::vector<bool>& fixed,
                             int max_iterations) {
    Solution s;
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (fixed.empty() || !fixed[k]) s.free.push_back(k);
    }
    Eigen::VectorXd r = residuals(model, params, data);
    double chi2 = r.squaredNorm();
    if (!std::isfinite(chi2)) throw DegenerateJacobian("fit: model not finite at the starting point");
    double lambda = 1e-3;
    double nu = 2.0;

    for (int it = 1; it <= max_iterations; ++it) {
        const Eigen::MatrixXd j = jacobian(model, params, data, s.free);
        if (!j.allFinite()) throw DegenerateJacobian("fit: Jacobian has non-finite entries");
        if (it == 1 && j.size() > 0 && j.norm() == 0.0) {
            throw DegenerateJacobian("fit: residuals do not depend on any free parameter");
        }
        // r = (y - f)/sigma, so dchi2/dtheta = 2 J^T r and the descent step solves (J^T J) d = -J^T r.
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd g = -(j.transpose() * r);
        s.gradient_norm = g.norm();
        s.jtj = jtj;
        s.iterations = it;
        if (chi2 == 0.0 || s.gradient_norm <= 1e-14 * std::max(1.0, chi2)) break;

        Eigen::VectorXd diag = jtj.diagonal();
        const double floor = 1e-12 * std::max(1.0, diag.maxCoeff());
        diag = diag.cwiseMax(floor);

        bool accepted = false;
        double step_norm = 0.0;
        for (int tries = 0; tries < 60 && !accepted; ++tries) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * diag;
            const Eigen::VectorXd delta = a.ldlt().solve(g);
            if (!delta.allFinite()) {
                lambda *= nu;
                nu *= 2.0;
                continue;
            }
            auto trial = params;
            for (std::size_t c = 0; c < s.free.size(); ++c) {
                trial[s.free[c]] += delta[static_cast<Eigen::Index>(c)];
            }
            project_to_domain(model, trial);
            const Eigen::VectorXd rt = residuals(model, trial, data);
            const double chi2t = rt.squaredNorm();
            // Gain ratio against the linearized model (Nielsen damping update).
            const double predicted = delta.dot(lambda * diag.cwiseProduct(delta) + g);
            if (std::isfinite(chi2t) && chi2t <= chi2) {
                const double drop = chi2 - chi2t;
                const double rho = predicted > 0.0 ? drop / predicted : 1.0;
                params = trial;
                r = rt;
                step_norm = delta.norm();
                accepted = true;
                lambda = std::max(lambda * std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3)), 1e-15);
                nu = 2.0;
                const double scale = std::sqrt(std::inner_product(
                    params.begin(), params.end(), params.begin(), 0.0));
                if (drop <= 1e-15 * std::max(chi2t, 1e-300) && step_norm <= 1e-10 * (scale + 1e-10)) {
                    chi2 = chi2t;
                    s.params = params;
                    s.chi2 = chi2;
                    return s;
                }
                chi2 = chi2t;
            } else {
                lambda *= nu;
                nu *= 2.0;
            }
        }
        if (!accepted) {
            // No downhill step at any damping: a stationary point to machine precision.
            break;
        }
        if (it == max_iterations) {
            throw NoConvergence("fit: no convergence after " + std::to_string(max_iterations) +
                                " iterations");
        }
    }
    s.params = params;
    s.chi2 = chi2;
    return s;
}

std::vector<double> modulated_start(const std::vector<DataPoint>& data) {
    FitOptions gauss_options;
    const FitResult g = fit(FitModel::gaussian, data, gauss_options);
    std::vector<double> best{g.params[0], g.params[1], 0.0, 0.0};
    double best_chi2 = std::numeric_limits<double>::infinity();
    // p0 is linear: take its weighted least-squares value at each grid point.
    for (int t = -6; t <= 6; ++t) {
        const double width = g.params[1] * (1.0 + 0.05 * t);
        for (const double v : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            for (int mhz = 0; mhz <= 10; ++mhz) {
                std::vector<double> p{1.0, width, v, mhz_to_rad_per_ns(mhz)};
                double fy = 0.0;
                double ff = 0.0;
                for (const auto& d : data) {
                    const double f = evaluate_model(FitModel::modulated_gaussian, p, d.x, d.series);
                    fy += f * d.y / variance_of(d);
                    ff += f * f / variance_of(d);
                }
                if (ff <= 0.0) continue;
                p[0] = fy / ff;
                const double c = chi_square(FitModel::modulated_gaussian, p, data);
                if (c < best_chi2) {
                    best_chi2 = c;
                    best = p;
                }
            }
        }
    }
    return best;
}

/// Lowest chi2 at a fixed delta_omega with V re-optimized.
double profile_chi2(const std::vector<DataPoint>& data, std::vector<double> params, double dw) {
    params[3] = dw;
    std::vector<bool> fixed{true, true, false, true};
    return levenberg_marquardt(FitModel::modulated_gaussian, params, data, fixed, FitOptions{}.max_iterations).chi2;
}

double doubling_edge(const std::vector<DataPoint>& data, const std::vector<double>& best,
                     double target, double direction) {
    const double dw0 = best[3];
    const double step = mhz_to_rad_per_ns(0.25);
    double inside = dw0;
    double outside = dw0;
    bool found = false;
    for (int i = 1; i <= 200; ++i) {
        const double dw = dw0 + direction * step * i;
        if (dw < 0.0) return dw0;  // chi2 is even in delta_omega
        if (profile_chi2(data, best, dw) > target) {
            outside = dw;
            found = true;
            break;
        }
        inside = dw;
    }
    if (!found) return inside;
    for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (inside + outside);
        (profile_chi2(data, best, mid) > target ? outside : inside) = mid;
    }
    return 0.5 * (inside + outside);
}

}  // namespace

const char* to_string(FitModel model) {
    switch (model) {
        case FitModel::gaussian: return "gaussian";
        case FitModel::exp_decay: return "exp_decay";
        case FitModel::modulated_gaussian: return "modulated_gaussian";
        case FitModel::p2c_p22c_pair: return "p2c_p22c_pair";
    }
    return "?";
}

FitModel fit_model_from_string(const std::string& name) {
    for (auto m : {FitModel::gaussian, FitModel::exp_decay, FitModel::modulated_gaussian,
                   FitModel::p2c_p22c_pair}) {
        if (name == to_string(m)) return m;
    }
    throw InvalidParameter("model", "unknown fit model '" + name + "'");
}

std::vector<std::string> parameter_names(FitModel model) {
    switch (model) {
        case FitModel::gaussian: return {"p0", "T"};
        case FitModel::exp_decay: return {"A", "Nc"};
        case FitModel::modulated_gaussian: return {"p0", "T", "V", "delta_omega"};
        case FitModel::p2c_p22c_pair: return {"pc", "Nc"};
    }
    return {};
}

double evaluate_model(FitModel model, const std::vector<double>& p, double x, int series) {
    switch (model) {
        case FitModel::gaussian: return p[0] * std::exp(-x * x / (p[1] * p[1]));
        case FitModel::exp_decay: return p[0] * std::exp(-x / p[1]);
        case FitModel::modulated_gaussian:
            return p[0] * std::exp(-x * x / (p[1] * p[1])) * (1.0 - p[2] * std::cos(p[3] * x));
        case FitModel::p2c_p22c_pair:
            return series == 0 ? p22c_model(p[0], p[1], x) : p2c_model(p[0], p[1], x);
    }
    return 0.0;
}

double chi_square(FitModel model, const std::vector<double>& params,
                  const std::vector<DataPoint>& data) {
    return residuals(model, params, data).squaredNorm();
}

std::vector<double> initial_guess(FitModel model, const std::vector<DataPoint>& data) {
    switch (model) {
        case FitModel::gaussian: {
            double peak = 0.0;
            for (const auto& p : data) peak = std::max(peak, p.y);
            return {peak, gaussian_width_moment(data)};
        }
        case FitModel::exp_decay: {
            const auto [a, decay] = log_linear(data, 0);
            return {a, decay};
        }
        case FitModel::modulated_gaussian: return modulated_start(data);
        case FitModel::p2c_p22c_pair: {
            const auto [a, decay] = log_linear(data, 0);
            return {std::sqrt(2.0 * a), decay};
        }
    }
    return {};
}

FitResult fit(FitModel model, const std::vector<DataPoint>& data, const FitOptions& options) {
    const auto names = parameter_names(model);
    if (!options.fixed.empty() && options.fixed.size() != names.size()) {
        throw InvalidParameter("fixed", "needs one flag per parameter");
    }
    const auto n_free = static_cast<std::size_t>(
        std::count(options.fixed.begin(), options.fixed.end(), false) +
        (options.fixed.empty() ? static_cast<std::ptrdiff_t>(names.size()) : 0));
    if (data.size() < n_free + 3) {
        throw InvalidParameter("data", "needs at least 3 more points than free parameters");
    }
    std::vector<double> start = options.initial ? *options.initial : initial_guess(model, data);
    if (start.size() != names.size()) throw InvalidParameter("initial", "wrong parameter count");

    const bool multistart = model == FitModel::modulated_gaussian && options.initial && options.fixed.empty();
    std::optional<Solution> s;
    try {
        s = levenberg_marquardt(model, start, data, options.fixed, options.max_iterations);
    } catch (const NoConvergence&) {
        if (!multistart) throw;
    }
    if (multistart) {
        // Multimodal in (V, delta_omega): also descend from the grid start, keep the lower chi2.
        Solution alt = levenberg_marquardt(model, initial_guess(model, data), data, options.fixed,
                                           options.max_iterations);
        if (!s || alt.chi2 < s->chi2) s = std::move(alt);
    }

    FitResult out;
    out.model = model;
    out.names = names;
    out.params = s->params;
    out.chi2 = s->chi2;
    out.dof = static_cast<int>(data.size()) - static_cast<int>(s->free.size());
    out.gradient_norm = s->gradient_norm;
    out.iterations = s->iterations;
    out.converged = true;
    out.errors.assign(names.size(), 0.0);
    if (s->jtj.size() > 0) {
        const Eigen::MatrixXd cov =
            s->jtj.completeOrthogonalDecomposition().pseudoInverse();
        for (std::size_t c = 0; c < s->free.size(); ++c) {
            const double v = cov(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c));
            out.errors[s->free[c]] = v > 0.0 ? std::sqrt(v) : 0.0;
        }
    }
    if (model == FitModel::modulated_gaussian) {
        // cos is even: report |delta_omega|.
        out.params[3] = std::abs(out.params[3]);
        if (options.profile_delta_omega && out.chi2 > 1e-9) {
            const double target = 2.0 * out.chi2;
            const double hi = doubling_edge(data, out.params, target, +1.0);
            const double lo = doubling_edge(data, out.params, target, -1.0);
            out.delta_omega_doubling_error = std::max(hi - out.params[3], out.params[3] - lo);
        }
    }
    return out;
}

double FitResult::param(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return params[i];
    }
    throw InvalidParameter("name", "no fit parameter '" + name + "'");
}

double FitResult::error(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return errors[i];
    }
    throw InvalidParameter("name", "no fit parameter '" + name + "'");
}

std::string to_json(const FitResult& r) {
    nlohmann::ordered_json j;
    j["model"] = to_string(r.model);
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        j["parameters"][r.names[i]] = {{"value", r.params[i]}, {"error", r.errors[i]}};
    }
    if (r.model == FitModel::modulated_gaussian) {
        j["delta_omega_mhz"] = rad_per_ns_to_mhz(r.params[3]);
        if (r.delta_omega_doubling_error) {
            j["delta_omega_doubling_error_mhz"] = rad_per_ns_to_mhz(*r.delta_omega_doubling_error);
        }
    }
    j["chi2"] = r.chi2;
    j["dof"] = r.dof;
    j["gradient_norm"] = r.gradient_norm;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    return j.dump(2);
}

double mhz_to_rad_per_ns(double mhz) { return 2.0 * std::numbers::pi * mhz * 1e-3; }
double rad_per_ns_to_mhz(double w) { return w / (2.0 * std::numbers::pi * 1e-3); }

}  // namespace condmem
