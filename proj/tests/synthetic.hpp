#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "condmem/control.hpp"
#include "condmem/fit.hpp"

namespace condmem::testing {

/// Poisson-noised orthogonal (Gaussian) and parallel (modulated Gaussian) coincidence
/// histograms over |tau| <= 44 ns in 2 ns bins; `total` orthogonal counts.
struct Eq2Data {
    std::vector<DataPoint> orthogonal;
    std::vector<DataPoint> parallel;
};

inline Eq2Data eq2_data(double total, double T, double V, double dw, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double p0 = total * 2.0 / (std::sqrt(std::numbers::pi) * T);
    Eq2Data d;
    for (int t = -44; t <= 44; t += 2) {
        const double g = p0 * std::exp(-t * t / (T * T));
        std::poisson_distribution<int> po(g);
        std::poisson_distribution<int> pp(g * (1.0 - V * std::cos(dw * t)));
        d.orthogonal.push_back({double(t), double(po(rng))});
        d.parallel.push_back({double(t), double(pp(rng))});
    }
    return d;
}

/// Gaussian fit of the orthogonal histogram fixes p0 and T; V and delta_omega
/// are then fitted to the parallel histogram.
inline FitResult fit_eq2(const Eq2Data& d) {
    const FitResult g = fit(FitModel::gaussian, d.orthogonal);
    FitOptions o;
    o.fixed = {true, true, false, false};
    std::vector<double> start{g.params[0], g.params[1], 0.0, 0.0};
    double best = std::numeric_limits<double>::infinity();
    for (double v : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        for (int mhz = 0; mhz <= 10; ++mhz) {
            const std::vector<double> p{g.params[0], g.params[1], v, mhz_to_rad_per_ns(mhz)};
            const double c = chi_square(FitModel::modulated_gaussian, p, d.parallel);
            if (c < best) {
                best = c;
                start = p;
            }
        }
    }
    o.initial = start;
    return fit(FitModel::modulated_gaussian, d.parallel, o);
}

/// Binomial p22c (series 0) and p2c (series 1) points for `ready` events per N.
inline std::vector<DataPoint> decay_data(double pc, double nc, int n_points, double ready,
                                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<DataPoint> out;
    for (int n = 0; n < n_points; ++n) {
        for (int series : {0, 1}) {
            const double p = series == 0 ? p22c_model(pc, nc, n) : p2c_model(pc, nc, n);
            std::binomial_distribution<long> b(static_cast<long>(ready), p);
            const double k = static_cast<double>(b(rng));
            out.push_back({double(n), k / ready, std::sqrt(std::max(k, 1.0)) / ready, series});
        }
    }
    return out;
}

}  // namespace condmem::testing
