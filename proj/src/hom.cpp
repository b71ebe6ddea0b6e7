#include "condmem/hom.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace condmem {
namespace {

struct Splitter {
    double t;  // intensity transmission to D2a
    double r;
    double split() const { return 2.0 * t * r; }
    double distinguishable_pair() const { return t * t + r * r; }
};

Splitter splitter(const InterferenceConfig& cfg) {
    return {cfg.splitter_ratio, 1.0 - cfg.splitter_ratio};
}

double interference_depth(const InterferenceConfig& cfg) {
    return cfg.polarization == Polarization::parallel ? cfg.xi : 0.0;
}

double left_survival(const InterferenceConfig& cfg) {
    return cfg.polarization == Polarization::orthogonal ? 1.0 - cfg.pol_misalignment_offset : 1.0;
}

}  // namespace

double visibility_from_w(double w) { return 1.0 / (1.0 + w); }

double effective_visibility(double xi, double w) { return xi / (1.0 + w); }

double jitter_overlap(const InterferenceConfig& cfg) {
    const double x = cfg.delta_omega_rad_per_ns * cfg.envelope_width_ns;
    return std::exp(-x * x / 2.0);
}

CoincidenceProbabilities coincidence_probabilities(const Field2Distribution& left,
                                                   const Field2Distribution& right,
                                                   const InterferenceConfig& cfg) {
    const Splitter bs = splitter(cfg);
    const double eta = left_survival(cfg);
    const double pair_split =
        bs.distinguishable_pair() - bs.split() * interference_depth(cfg) * jitter_overlap(cfg);

    CoincidenceProbabilities out;
    out.two_from_left = bs.split() * eta * eta * left.p2;
    out.two_from_right = bs.split() * right.p2;
    out.one_from_each = pair_split * eta * left.p1 * right.p1;
    out.same_detector = (1.0 - bs.split()) * (eta * eta * left.p2 + right.p2) +
                        (1.0 - pair_split) * eta * left.p1 * right.p1;
    return out;
}

ClickProbabilities click_probabilities(const Field2Distribution& left,
                                       const Field2Distribution& right,
                                       const InterferenceConfig& cfg) {
    const Splitter bs = splitter(cfg);
    const double eta = left_survival(cfg);
    const double pair_split =
        bs.distinguishable_pair() - bs.split() * interference_depth(cfg) * jitter_overlap(cfg);

    // Surviving photon number of field 2L after the misalignment loss.
    std::array<double, 3> kl{};
    const std::array<double, 3> nl{left.p0, left.p1, left.p2};
    kl[0] = nl[0] + nl[1] * (1 - eta) + nl[2] * (1 - eta) * (1 - eta);
    kl[1] = nl[1] * eta + nl[2] * 2 * eta * (1 - eta);
    kl[2] = nl[2] * eta * eta;
    const std::array<double, 3> kr{right.p0, right.p1, right.p2};

    ClickProbabilities out{0.0, 0.0, 0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double weight = kl[i] * kr[j];
            if (weight == 0.0) continue;
            const int k = i + j;
            if (k == 0) {
                out.none += weight;
            } else if (i == 1 && j == 1) {
                out.both += weight * pair_split;
                out.a_only += weight * (1.0 - pair_split) / 2.0;
                out.b_only += weight * (1.0 - pair_split) / 2.0;
            } else {
                const double all_a = std::pow(bs.t, k);
                const double all_b = std::pow(bs.r, k);
                out.a_only += weight * all_a;
                out.b_only += weight * all_b;
                out.both += weight * (1.0 - all_a - all_b);
            }
        }
    }
    return out;
}

CrossTrialPeaks cross_trial_peaks(double p1, double w) {
    const double p2 = w * p1 * p1 / 2.0;
    const double mean = p1 + 2.0 * p2;
    return {p1 * p1 / 2.0 + p2, mean * mean, cross_trial_ratio(p1, w)};
}

double cross_trial_ratio(double p1, double w) {
    return 0.5 * (1.0 + w) / (1.0 + 2.0 * w * p1);
}

double cross_trial_ratio_exact(const Field2Distribution& left, const Field2Distribution& right,
                               const InterferenceConfig& cfg) {
    const auto c = click_probabilities(left, right, cfg);
    return c.both / (c.a() * c.b());
}

double coincidence_density(double tau, const CoincidenceDensityParams& p) {
    if (!(p.T > 0.0)) throw InvalidParameter("T", "violates T > 0");
    return p.p0 * std::exp(-tau * tau / (p.T * p.T)) * (1.0 - p.V * std::cos(p.delta_omega * tau));
}

double sample_emission_time(const InterferenceConfig& cfg, CounterStream& stream) {
    return stream.normal() * cfg.envelope_width_ns / std::numbers::sqrt2;
}

DetectionPair sample_detection_times(PhotonOrigin origin, const InterferenceConfig& cfg,
                                     CounterStream& stream) {
    const Splitter bs = splitter(cfg);
    const double depth = interference_depth(cfg);
    // Acceptance a(tau) = (base + sign * amp * cos(dw tau)) / (base + amp).
    double base = 1.0;
    double amp = 0.0;
    double sign = 0.0;
    if (origin == PhotonOrigin::one_from_each) {
        base = bs.distinguishable_pair();
        amp = bs.split() * depth;
        sign = -1.0;
    } else if (origin == PhotonOrigin::one_from_each_bunched) {
        amp = depth;
        sign = 1.0;
    }
    for (int round = 0; round < kRejectionBudget; ++round) {
        DetectionPair pair{sample_emission_time(cfg, stream), sample_emission_time(cfg, stream)};
        if (amp == 0.0) return pair;
        const double accept =
            (base + sign * amp * std::cos(cfg.delta_omega_rad_per_ns * pair.tau())) / (base + amp);
        if (stream.uniform() < accept) return pair;
    }
    throw RejectionBudgetExceeded("sample_detection_times: no pair accepted in 10^4 proposals");
}

}  // namespace condmem
