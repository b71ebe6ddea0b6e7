#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "condmem/hom.hpp"
#include "condmem/types.hpp"

namespace condmem {

/// A counted probability: value = count / denominator, error = sqrt(count) / denominator.
struct Estimate {
    double value = 0.0;
    double error = 0.0;
    double count = 0.0;
    double denominator = 0.0;

    static Estimate counted(double count, double denominator);
};

//---------------------------------------------------------------------------//
// Histograms
//---------------------------------------------------------------------------//

enum class Normalization : std::uint8_t { counts, probability, density };

/// Fixed 2 ns bins centred on even times.
class Histogram {
  public:
    /// Bins centred on lo, lo + 2, ..., hi (both even).
    Histogram(std::int32_t lo_ns, std::int32_t hi_ns);

    void add(std::int32_t t_ns, double weight = 1.0);
    void merge(const Histogram& other);

    std::size_t size() const { return counts_.size(); }
    double center(std::size_t i) const { return lo_ + 2.0 * static_cast<double>(i); }
    std::vector<double> bin_edges() const;
    double count(std::size_t i) const { return counts_[i]; }
    const std::vector<double>& counts() const { return counts_; }
    double total_weight() const { return total_; }
    /// Weight that fell outside the bins.
    double overflow() const { return overflow_; }

    /// Counts divided per the mode. `per` is the probability denominator (e.g. ready events).
    std::vector<double> normalized(Normalization mode, double per = 0.0) const;
    /// Sum of counts with |center| <= halfwidth.
    double integral(double halfwidth) const;

  private:
    std::int32_t lo_;
    std::vector<double> counts_;
    double total_ = 0.0;
    double overflow_ = 0.0;
};

//---------------------------------------------------------------------------//
// Trial accounting
//---------------------------------------------------------------------------//

/// Trials that start with both ensembles idle, rebuilt from the sparse log.
std::uint64_t armed_trials(const EventLog& log);

//---------------------------------------------------------------------------//
// Preparation and joint-detection estimators
//---------------------------------------------------------------------------//

/// Ready events with separation <= N - 1 per armed trial. Throws EmptyLog when
/// the log covers no trials.
Estimate estimate_p11(const EventLog& log, std::uint32_t n);

/// Click on both detectors inside the conditional window, in ready events with
/// separation <= N - 1, per armed trial.
Estimate estimate_p1122(const EventLog& log, std::uint32_t n);

/// Conditional-expectation form of estimate_p1122: sums the model's joint-click
/// probability (full field-2 window) over the same ready events. Removes the
/// readout sampling noise; the error is the counting error of the ready events.
Estimate estimate_p1122_expected(const EventLog& log, std::uint32_t n);

/// p1122(N) / p1122(1), with error from the two counts.
struct Enhancement {
    double value = 0.0;
    double error = 0.0;
};
Enhancement enhancement_ratio(const Estimate& at_n, const Estimate& at_1);

/// Joint click inside the conditional window per ready event at separation exactly N.
Estimate estimate_p22c(const EventLog& log, std::uint32_t n);

/// Click on `detector` alone inside the conditional window per ready event at separation N.
Estimate estimate_p2c(const EventLog& log, std::uint32_t n, Detector detector);

/// Ready events at separation exactly N.
std::uint64_t ready_count(const EventLog& log, std::uint32_t n);

/// Single-click rate of D2b over D2a across all ready events.
Estimate detector_asymmetry(const EventLog& log);

//---------------------------------------------------------------------------//
// Coincidences
//---------------------------------------------------------------------------//

/// same_trial when offset == 0; otherwise D2a of ready event i against D2b of
/// ready event i + offset.
struct PeakSelector {
    int offset = 0;
    static PeakSelector same_trial() { return {0}; }
};

/// tau = t_a - t_b of the selected pairs; counts, with `pairs` the number of
/// ready-event pairs examined.
struct CoincidenceHistogram {
    Histogram histogram;
    std::uint64_t pairs = 0;
};

CoincidenceHistogram coincidence_histogram(const EventLog& log, PeakSelector selector);

/// Coincidences with |tau| <= halfwidth per examined pair.
Estimate peak_probability(const CoincidenceHistogram& h, double tau_halfwidth);

/// Same-trial peak over the mean of the +-1..max_offset side peaks.
struct PeakRatio {
    double value = 0.0;
    double error = 0.0;
    Estimate center;
    Estimate side;
};
PeakRatio cross_trial_ratio(const EventLog& log, int max_offset, double tau_halfwidth);

struct Visibility {
    double value = 0.0;
    double error = 0.0;
    Estimate parallel;
    Estimate orthogonal;
};

/// V = (p_orth - p_par) / p_orth over same-trial coincidences with |tau| <= halfwidth.
/// Throws MismatchedConfigs unless the logs differ only in polarization and seed.
Visibility visibility(const EventLog& parallel, const EventLog& orthogonal, double tau_halfwidth,
                      PeakSelector selector = PeakSelector::same_trial());

/// Visibility from two coincidence histograms already built.
Visibility visibility(const CoincidenceHistogram& parallel, const CoincidenceHistogram& orthogonal,
                      double tau_halfwidth);

//---------------------------------------------------------------------------//
// Wavepackets
//---------------------------------------------------------------------------//

/// Detection-time histogram. Conditional: detections in trials with a field-1
/// herald only. Unconditional: every detection in the field-2 window.
Histogram wavepacket_profile(const EventLog& log, bool conditional);


//---------------------------------------------------------------------------//
// Window-aware expectations for the single-photon model (w = 0, no background)
//---------------------------------------------------------------------------//

/// Probability that one photon's quantized time satisfies |t| <= halfwidth.
double window_acceptance(double envelope_width_ns, double halfwidth_ns);

/// Joint click inside the conditional window for one ready event with the given
/// retrieval probabilities, orthogonal polarization, w = 0.
double p22c_window_oracle(double p_left, double p_right, const RunConfig& config);

/// Click on `detector` alone inside the conditional window, same assumptions.
double p2c_window_oracle(double p_left, double p_right, Detector detector,
                         const RunConfig& config);

}  // namespace condmem
