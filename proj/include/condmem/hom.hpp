#pragma once

#include "condmem/photon_stats.hpp"
#include "condmem/random.hpp"
#include "condmem/types.hpp"

namespace condmem {

/// 1 / (1 + w): visibility ceiling set by the two-photon component.
double visibility_from_w(double w);

/// xi / (1 + w).
double effective_visibility(double xi, double w);

/// E[cos(delta_omega tau)] over the unmodulated tau density, exp(-dw^2 Tc^2 / 2).
double jitter_overlap(const InterferenceConfig& cfg);

/// Leading-order joint-detection probabilities at the two splitter outputs.
struct CoincidenceProbabilities {
    double two_from_left = 0.0;   ///< 2 photons in 2L split to both outputs
    double two_from_right = 0.0;
    double one_from_each = 0.0;   ///< one photon per input, one per output
    double same_detector = 0.0;   ///< both photons leave through the same port

    double both_detectors() const { return two_from_left + two_from_right + one_from_each; }
};

/*!
 * Joint-detection terms to second order in the photon probabilities.
 *
 * Two photons from one source split with probability 2TR. One photon from
 * each source exits through different ports with probability T^2 + R^2 when
 * distinguishable; with parallel polarizations the interference term
 * 2TR xi J is subtracted, J being jitter_overlap(). In the orthogonal setting
 * each photon of field 2L survives with probability 1 - pol_misalignment_offset.
 * Terms of order P1^3 and above are dropped.
 */
CoincidenceProbabilities coincidence_probabilities(const Field2Distribution& left,
                                                   const Field2Distribution& right,
                                                   const InterferenceConfig& cfg);

/// Click statistics of two threshold detectors, exact for the truncated photon model.
struct ClickProbabilities {
    double both = 0.0;
    double a_only = 0.0;
    double b_only = 0.0;
    double none = 1.0;

    double a() const { return both + a_only; }
    double b() const { return both + b_only; }
};

/// Same routing rules as coincidence_probabilities, enumerated over every
/// photon-number pair (n_L, n_R) in {0,1,2}^2; two photons reaching one
/// detector give a single click. Interference acts only on the
/// one-photon-per-input pair. This is the law the Monte Carlo readout samples.
ClickProbabilities click_probabilities(const Field2Distribution& left,
                                       const Field2Distribution& right,
                                       const InterferenceConfig& cfg);

/// Centre peak P1^2/2 + P2, side peak (P1 + 2 P2)^2 and their first-order ratio.
struct CrossTrialPeaks {
    double center = 0.0;
    double side = 0.0;
    double ratio = 0.0;  ///< (1/2)(1 + w)/(1 + 2 w P1)
};

CrossTrialPeaks cross_trial_peaks(double p1, double w);

/// (1/2)(1 + w)/(1 + 2 w P1).
double cross_trial_ratio(double p1, double w);

/// Centre-to-side peak ratio of click_probabilities (same-trial joint click
/// over the product of single-detector click probabilities).
double cross_trial_ratio_exact(const Field2Distribution& left, const Field2Distribution& right,
                               const InterferenceConfig& cfg);

struct CoincidenceDensityParams {
    double p0 = 1.0;
    double T = 1.0;            ///< 1/e half-width, ns
    double V = 0.0;            ///< modulation visibility
    double delta_omega = 0.0;  ///< rad/ns
};

/// p0 exp(-tau^2/T^2) (1 - V cos(delta_omega tau)). Throws InvalidParameter if T <= 0.
double coincidence_density(double tau, const CoincidenceDensityParams& params);

enum class PhotonOrigin : std::uint8_t {
    one_from_each,          ///< one photon per input, exiting through different ports
    two_from_one,           ///< both photons from one source, split
    one_from_each_bunched,  ///< one photon per input, exiting through the same port
};

struct DetectionPair {
    double t_a = 0.0;
    double t_b = 0.0;
    double tau() const { return t_a - t_b; }
};

/// Emission time of one photon, density proportional to exp(-t^2/Tc^2).
double sample_emission_time(const InterferenceConfig& cfg, CounterStream& stream);

/*!
 * Times of a photon pair whose routing has already been decided.
 *
 * For one_from_each with parallel polarization the pair is accepted with
 * probability proportional to T^2 + R^2 - 2TR xi cos(delta_omega tau), so tau
 * carries the modulation of the interference term; bunched pairs carry the
 * complementary 1 + xi cos(delta_omega tau). Times are not quantized.
 * Throws RejectionBudgetExceeded after 10^4 rejected proposals.
 */
DetectionPair sample_detection_times(PhotonOrigin origin, const InterferenceConfig& cfg,
                                     CounterStream& stream);

inline constexpr int kRejectionBudget = 10'000;

}  // namespace condmem
