#include "condmem/analytics.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <utility>

#include "condmem/control.hpp"
#include "condmem/photon_stats.hpp"

namespace condmem {

Estimate Estimate::counted(double count, double denominator) {
    if (denominator <= 0.0) return {0.0, 0.0, count, denominator};
    return {count / denominator, std::sqrt(count) / denominator, count, denominator};
}

//---------------------------------------------------------------------------//
// Histogram
//---------------------------------------------------------------------------//

Histogram::Histogram(std::int32_t lo_ns, std::int32_t hi_ns) : lo_(lo_ns) {
    if (lo_ns % kTimeQuantumNs != 0 || hi_ns % kTimeQuantumNs != 0 || hi_ns < lo_ns) {
        throw InvalidParameter("histogram range", "bounds must be even with lo <= hi");
    }
    counts_.assign(static_cast<std::size_t>((hi_ns - lo_ns) / kTimeQuantumNs + 1), 0.0);
}

void Histogram::add(std::int32_t t_ns, double weight) {
    const std::int32_t q = quantize_time(t_ns);
    const std::int64_t i = (static_cast<std::int64_t>(q) - lo_) / kTimeQuantumNs;
    total_ += weight;
    if (q < lo_ || i >= static_cast<std::int64_t>(counts_.size())) {
        overflow_ += weight;
        return;
    }
    counts_[static_cast<std::size_t>(i)] += weight;
}

void Histogram::merge(const Histogram& other) {
    if (other.lo_ != lo_ || other.counts_.size() != counts_.size()) {
        throw InvalidParameter("histogram range", "cannot merge histograms with different bins");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
    overflow_ += other.overflow_;
}

std::vector<double> Histogram::bin_edges() const {
    std::vector<double> edges;
    edges.reserve(counts_.size() + 1);
    for (std::size_t i = 0; i <= counts_.size(); ++i) edges.push_back(center(i) - 1.0);
    return edges;
}

std::vector<double> Histogram::normalized(Normalization mode, double per) const {
    std::vector<double> out = counts_;
    double scale = 1.0;
    if (mode == Normalization::probability) {
        scale = per > 0.0 ? 1.0 / per : 0.0;
    } else if (mode == Normalization::density) {
        const double in_bins = total_ - overflow_;
        scale = in_bins > 0.0 ? 1.0 / (in_bins * kTimeQuantumNs) : 0.0;
    }
    for (auto& v : out) v *= scale;
    return out;
}

double Histogram::integral(double halfwidth) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (std::abs(center(i)) <= halfwidth) sum += counts_[i];
    }
    return sum;
}

//---------------------------------------------------------------------------//
// Accounting
//---------------------------------------------------------------------------//

namespace {

void require_trials(const EventLog& log) {
    if (log.config.n_trials == 0) throw EmptyLog("log covers no trials");
}

struct Clicks {
    std::optional<std::int32_t> a;
    std::optional<std::int32_t> b;
};

Clicks clicks_of(const TrialRecord& r, double halfwidth) {
    Clicks c;
    for (const auto& d : r.detections) {
        if (std::abs(d.time_ns) > halfwidth) continue;
        (d.detector == Detector::a ? c.a : c.b) = d.time_ns;
    }
    return c;
}

double conditional_halfwidth(const EventLog& log) {
    return log.config.windows.conditional_field2_window_ns / 2.0;
}

double field2_halfwidth(const EventLog& log) { return log.config.windows.field2_window_ns / 2.0; }

std::vector<const TrialRecord*> ready_events(const EventLog& log) {
    std::vector<const TrialRecord*> out;
    for (const auto& r : log.records) {
        if (r.is_ready()) out.push_back(&r);
    }
    return out;
}

}  // namespace

std::uint64_t armed_trials(const EventLog& log) {
    const RunConfig& cfg = log.config;
    if (cfg.mode == RunMode::wavepacket) return cfg.n_trials;
    const std::uint64_t n_max = cfg.effective_n_max();
    std::uint64_t gated = 0;
    std::optional<std::uint64_t> pending;
    for (const auto& r : log.records) {
        switch (r.kind) {
            case EventKind::ready: gated += r.separation(); pending.reset(); break;
            case EventKind::flush_left:
            case EventKind::flush_right: gated += n_max - 1; pending.reset(); break;
            default:
                if ((r.herald_left || r.herald_right) && !pending) pending = r.trial_index;
                break;
        }
    }
    if (pending) gated += cfg.n_trials - 1 - *pending;
    return cfg.n_trials - gated;
}

Estimate estimate_p11(const EventLog& log, std::uint32_t n) {
    require_trials(log);
    double count = 0.0;
    for (const auto* r : ready_events(log)) {
        if (r->separation() + 1 <= n) count += 1.0;
    }
    return Estimate::counted(count, static_cast<double>(armed_trials(log)));
}

Estimate estimate_p1122(const EventLog& log, std::uint32_t n) {
    require_trials(log);
    const double hw = conditional_halfwidth(log);
    double count = 0.0;
    for (const auto* r : ready_events(log)) {
        if (r->separation() + 1 > n) continue;
        const Clicks c = clicks_of(*r, hw);
        if (c.a && c.b) count += 1.0;
    }
    return Estimate::counted(count, static_cast<double>(armed_trials(log)));
}

Estimate estimate_p1122_expected(const EventLog& log, std::uint32_t n) {
    require_trials(log);
    const RunConfig& cfg = log.config;
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> cache;
    auto joint = [&](std::uint32_t al, std::uint32_t ar) {
        const auto key = std::make_pair(al, ar);
        if (const auto it = cache.find(key); it != cache.end()) return it->second;
        const auto& el = cfg.ensemble(Ensemble::left);
        const auto& er = cfg.ensemble(Ensemble::right);
        const auto left = conditional_distribution(retrieval_decay(el.pc, al, el.nc), el.w);
        const auto right = conditional_distribution(retrieval_decay(er.pc, ar, er.nc), er.w);
        const double p = click_probabilities(left, right, cfg.interference).both;
        cache.emplace(key, p);
        return p;
    };
    double sum = 0.0;
    double sum_sq = 0.0;
    double events = 0.0;
    for (const auto* r : ready_events(log)) {
        if (r->separation() + 1 > n) continue;
        const double p = joint(r->age_left, r->age_right);
        sum += p;
        sum_sq += p * p;
        events += 1.0;
    }
    const double denom = static_cast<double>(armed_trials(log));
    if (denom <= 0.0) return {0.0, 0.0, events, denom};
    return {sum / denom, std::sqrt(sum_sq) / denom, events, denom};
}

Enhancement enhancement_ratio(const Estimate& at_n, const Estimate& at_1) {
    if (at_1.value <= 0.0) throw DivisionByZero("enhancement_ratio: empty N = 1 estimate");
    // at_1 counts a subset of at_n; split into disjoint parts so the variances add.
    const double extra = at_n.value - at_1.value;
    const double var_extra = std::max(0.0, at_n.error * at_n.error - at_1.error * at_1.error);
    const double ratio = extra / at_1.value;
    const double rel_1 = at_1.error / at_1.value;
    const double err = std::sqrt(var_extra / (at_1.value * at_1.value) + ratio * ratio * rel_1 * rel_1);
    return {1.0 + ratio, err};
}

std::uint64_t ready_count(const EventLog& log, std::uint32_t n) {
    std::uint64_t count = 0;
    for (const auto* r : ready_events(log)) count += r->separation() == n ? 1 : 0;
    return count;
}

Estimate estimate_p22c(const EventLog& log, std::uint32_t n) {
    require_trials(log);
    const double hw = conditional_halfwidth(log);
    double count = 0.0;
    double events = 0.0;
    for (const auto* r : ready_events(log)) {
        if (r->separation() != n) continue;
        events += 1.0;
        const Clicks c = clicks_of(*r, hw);
        if (c.a && c.b) count += 1.0;
    }
    return Estimate::counted(count, events);
}

Estimate estimate_p2c(const EventLog& log, std::uint32_t n, Detector detector) {
    require_trials(log);
    const double hw = conditional_halfwidth(log);
    double count = 0.0;
    double events = 0.0;
    for (const auto* r : ready_events(log)) {
        if (r->separation() != n) continue;
        events += 1.0;
        const Clicks c = clicks_of(*r, hw);
        const bool a_only = c.a && !c.b;
        const bool b_only = c.b && !c.a;
        if (detector == Detector::a ? a_only : b_only) count += 1.0;
    }
    return Estimate::counted(count, events);
}

Estimate detector_asymmetry(const EventLog& log) {
    require_trials(log);
    const double hw = conditional_halfwidth(log);
    double a = 0.0;
    double b = 0.0;
    for (const auto* r : ready_events(log)) {
        const Clicks c = clicks_of(*r, hw);
        a += c.a ? 1.0 : 0.0;
        b += c.b ? 1.0 : 0.0;
    }
    if (a <= 0.0) return {0.0, 0.0, b, a};
    const double ratio = b / a;
    const double err = b > 0.0 ? ratio * std::sqrt(1.0 / a + 1.0 / b) : 0.0;
    return {ratio, err, b, a};
}

//---------------------------------------------------------------------------//
// Coincidences
//---------------------------------------------------------------------------//

CoincidenceHistogram coincidence_histogram(const EventLog& log, PeakSelector selector) {
    const double hw = field2_halfwidth(log);
    const auto t_max = static_cast<std::int32_t>(std::floor(hw / 2.0)) * 2;
    const std::int32_t span = 2 * t_max;
    CoincidenceHistogram out{Histogram(-span, span), 0};
    std::vector<Clicks> events;
    for (const auto* r : ready_events(log)) events.push_back(clicks_of(*r, hw));
    const auto n = static_cast<std::int64_t>(events.size());
    const std::int64_t k = selector.offset;
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t j = i + k;
        if (j < 0 || j >= n) continue;
        ++out.pairs;
        const auto& ta = events[static_cast<std::size_t>(i)].a;
        const auto& tb = events[static_cast<std::size_t>(j)].b;
        if (ta && tb) out.histogram.add(*ta - *tb);
    }
    return out;
}

Estimate peak_probability(const CoincidenceHistogram& h, double tau_halfwidth) {
    return Estimate::counted(h.histogram.integral(tau_halfwidth), static_cast<double>(h.pairs));
}

PeakRatio cross_trial_ratio(const EventLog& log, int max_offset, double tau_halfwidth) {
    if (max_offset < 1) throw InvalidParameter("max_offset", "violates max_offset >= 1");
    PeakRatio out;
    out.center = peak_probability(coincidence_histogram(log, PeakSelector::same_trial()), tau_halfwidth);
    double count = 0.0;
    double pairs = 0.0;
    for (int k = 1; k <= max_offset; ++k) {
        for (const int s : {k, -k}) {
            const auto h = coincidence_histogram(log, PeakSelector{s});
            count += h.histogram.integral(tau_halfwidth);
            pairs += static_cast<double>(h.pairs);
        }
    }
    out.side = Estimate::counted(count, pairs);
    if (out.side.value <= 0.0 || out.center.value <= 0.0) return out;
    out.value = out.center.value / out.side.value;
    out.error = out.value * std::sqrt(1.0 / out.center.count + 1.0 / out.side.count);
    return out;
}

Visibility visibility(const CoincidenceHistogram& parallel, const CoincidenceHistogram& orthogonal,
                      double tau_halfwidth) {
    Visibility v;
    v.parallel = peak_probability(parallel, tau_halfwidth);
    v.orthogonal = peak_probability(orthogonal, tau_halfwidth);
    if (v.orthogonal.value <= 0.0) throw DivisionByZero("visibility: no orthogonal coincidences");
    const double ratio = v.parallel.value / v.orthogonal.value;
    v.value = 1.0 - ratio;
    const double rel_par = v.parallel.count > 0.0 ? 1.0 / v.parallel.count : 0.0;
    v.error = ratio * std::sqrt(rel_par + 1.0 / v.orthogonal.count);
    return v;
}

Visibility visibility(const EventLog& parallel, const EventLog& orthogonal, double tau_halfwidth,
                      PeakSelector selector) {
    auto normalized = [](RunConfig c) {
        c.interference.polarization = Polarization::orthogonal;
        c.seed = 0;
        c.n_trials = 0;
        c.shards = 1;
        c.threads = 0;
        return c;
    };
    if (parallel.config.interference.polarization != Polarization::parallel ||
        orthogonal.config.interference.polarization != Polarization::orthogonal) {
        throw MismatchedConfigs("visibility needs one parallel and one orthogonal log");
    }
    if (!(normalized(parallel.config) == normalized(orthogonal.config))) {
        throw MismatchedConfigs("paired logs differ in more than polarization, seed and length");
    }
    return visibility(coincidence_histogram(parallel, selector),
                      coincidence_histogram(orthogonal, selector), tau_halfwidth);
}

//---------------------------------------------------------------------------//
// Wavepackets
//---------------------------------------------------------------------------//

Histogram wavepacket_profile(const EventLog& log, bool conditional) {
    const double hw = field2_halfwidth(log);
    const auto span = static_cast<std::int32_t>(std::floor(hw / 2.0)) * 2;
    Histogram h(-span, span);
    for (const auto& r : log.records) {
        if (conditional && !(r.herald_left || r.herald_right)) continue;
        for (const auto& d : r.detections) h.add(d.time_ns);
    }
    return h;
}


double window_acceptance(double envelope_width_ns, double halfwidth_ns) {
    // |2 round(t/2)| <= h  <=>  |t| < 2 floor(h/2) + 1; t ~ N(0, Tc^2/2).
    const double edge = 2.0 * std::floor(halfwidth_ns / 2.0) + 1.0;
    return std::erf(edge / envelope_width_ns);
}

namespace {

struct WindowProbabilities {
    double inner;  ///< inside the conditional window
    double late;   ///< inside the field-2 window, after the conditional one
    double field;  ///< inside the field-2 window
};

WindowProbabilities window_probabilities(const RunConfig& cfg) {
    const double tc = cfg.interference.envelope_width_ns;
    const double g = window_acceptance(tc, cfg.windows.conditional_field2_window_ns / 2.0);
    const double f = window_acceptance(tc, cfg.windows.field2_window_ns / 2.0);
    return {g, (f - g) / 2.0, f};
}

}  // namespace

double p22c_window_oracle(double p_left, double p_right, const RunConfig& cfg) {
    const double t = cfg.interference.splitter_ratio;
    const double g = window_probabilities(cfg).inner;
    return p_left * p_right * 2.0 * t * (1.0 - t) * g * g;
}

double p2c_window_oracle(double p_left, double p_right, Detector detector, const RunConfig& cfg) {
    const double t = cfg.interference.splitter_ratio;
    const double q = detector == Detector::a ? t : 1.0 - t;
    const auto w = window_probabilities(cfg);
    // Two photons at one detector: the earlier one inside the field-2 window clicks.
    const double two_at_q = (w.inner + w.late) * (w.inner + w.late) - w.late * w.late +
                            2.0 * w.inner * (1.0 - w.field);
    const double one = p_left * (1.0 - p_right) + p_right * (1.0 - p_left);
    const double both = p_left * p_right;
    return one * q * w.inner + both * (q * q * two_at_q + 2.0 * q * (1.0 - q) * w.inner * (1.0 - w.inner));
}

}  // namespace condmem
