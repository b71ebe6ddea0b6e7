#include "condmem/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <optional>
#include <thread>

#include "json.hpp"

#include "condmem/config.hpp"
#include "condmem/hom.hpp"
#include "condmem/photon_stats.hpp"
#include "condmem/random.hpp"

namespace condmem {

RunCounters& RunCounters::operator+=(const RunCounters& o) {
    trials += o.trials;
    armed_trials += o.armed_trials;
    heralds_left += o.heralds_left;
    heralds_right += o.heralds_right;
    ready_events += o.ready_events;
    flush_events += o.flush_events;
    readout_events += o.readout_events;
    detections += o.detections;
    background_detections += o.background_detections;
    return *this;
}

RunCounters& RunCounters::operator-=(const RunCounters& o) {
    trials -= o.trials;
    armed_trials -= o.armed_trials;
    heralds_left -= o.heralds_left;
    heralds_right -= o.heralds_right;
    ready_events -= o.ready_events;
    flush_events -= o.flush_events;
    readout_events -= o.readout_events;
    detections -= o.detections;
    background_detections -= o.background_detections;
    return *this;
}

std::array<bool, 2> decode_heralds(double u, double p1_left, double p1_right) {
    const double q_left = 1.0 - p1_left;
    const double q_right = 1.0 - p1_right;
    double edge = q_left * q_right;
    if (u < edge) return {false, false};
    edge += p1_left * q_right;
    if (u < edge) return {true, false};
    edge += q_left * p1_right;
    if (u < edge) return {false, true};
    return {true, true};
}

namespace {

struct Photon {
    double time;
    Detector detector;
    bool background;
};

struct PhotonNumbers {
    int left = 0;
    int right = 0;
};

int sample_source(const EnsembleParams& ens, std::uint32_t age, double survival,
                  CounterStream& rs) {
    const double pc_eff = retrieval_decay(ens.pc, age, ens.nc);
    const auto dist = conditional_distribution(pc_eff, ens.w);
    const int n = sample_photon_number(dist, rs.uniform());
    int kept = 0;
    for (int i = 0; i < n; ++i) kept += rs.uniform() < survival ? 1 : 0;
    return kept;
}

}  // namespace

std::vector<Detection> sample_readout(const RunConfig& cfg, std::uint64_t trial, EventKind kind,
                                      std::uint32_t age_left, std::uint32_t age_right) {
    CounterStream rs(cfg.seed, trial, StreamPurpose::readout);
    const InterferenceConfig& ic = cfg.interference;
    const double eta_left =
        ic.polarization == Polarization::orthogonal ? 1.0 - ic.pol_misalignment_offset : 1.0;

    bool read_left = false;
    bool read_right = false;
    switch (kind) {
        case EventKind::ready: read_left = read_right = true; break;
        case EventKind::flush_left: read_left = true; break;
        case EventKind::flush_right: read_right = true; break;
        case EventKind::readout:
            read_left = cfg.wavepacket_source == Ensemble::left;
            read_right = !read_left;
            break;
        case EventKind::none: return {};
    }

    PhotonNumbers n;
    if (read_left) n.left = sample_source(cfg.ensemble(Ensemble::left), age_left, eta_left, rs);
    if (read_right) n.right = sample_source(cfg.ensemble(Ensemble::right), age_right, 1.0, rs);

    std::array<Photon, 6> photons{};
    std::size_t count = 0;
    const double t_split = ic.splitter_ratio;
    auto route = [&](double u) { return u < t_split ? Detector::a : Detector::b; };

    if (n.left == 1 && n.right == 1) {
        const double split = 2.0 * t_split * (1.0 - t_split);
        const double depth = ic.polarization == Polarization::parallel ? ic.xi : 0.0;
        const double pair_split = t_split * t_split + (1.0 - t_split) * (1.0 - t_split) -
                                  split * depth * jitter_overlap(ic);
        if (rs.uniform() < pair_split) {
            const auto pair = sample_detection_times(PhotonOrigin::one_from_each, ic, rs);
            photons[count++] = {pair.t_a, Detector::a, false};
            photons[count++] = {pair.t_b, Detector::b, false};
        } else {
            const auto pair = sample_detection_times(PhotonOrigin::one_from_each_bunched, ic, rs);
            const Detector port = rs.uniform() < 0.5 ? Detector::a : Detector::b;
            photons[count++] = {pair.t_a, port, false};
            photons[count++] = {pair.t_b, port, false};
        }
    } else {
        for (int i = 0; i < n.left + n.right; ++i) {
            const double t = sample_emission_time(ic, rs);
            photons[count++] = {t, route(rs.uniform()), false};
        }
    }

    const double half_window = cfg.windows.field2_window_ns / 2.0;
    for (const auto e : {Ensemble::left, Ensemble::right}) {
        const bool read = e == Ensemble::left ? read_left : read_right;
        const double rate = cfg.ensemble(e).background_rate;
        if (!read || rate <= 0.0) continue;
        if (rs.uniform() < rate) {
            const double t = (2.0 * rs.uniform() - 1.0) * half_window;
            photons[count++] = {t, route(rs.uniform()), true};
        }
    }

    // Threshold detectors gated by the field-2 window: first photon inside it clicks.
    std::vector<Detection> out;
    for (const auto det : {Detector::a, Detector::b}) {
        std::optional<Photon> first;
        for (std::size_t i = 0; i < count; ++i) {
            const Photon& p = photons[i];
            if (p.detector != det) continue;
            if (std::abs(quantize_time(p.time)) > half_window) continue;
            if (!first || p.time < first->time) first = p;
        }
        if (first) out.push_back({det, quantize_time(first->time), first->background});
    }
    return out;
}

namespace {

struct AltTrack {
    ControlState state;
    bool merged = false;
    std::uint64_t merge_trial = 0;
    RunCounters main_counters;
    std::size_t main_records = 0;
    ControlState main_state;
};

void emit_readout(const RunConfig& cfg, TrialRecord& rec, RunCounters& counters) {
    rec.detections = sample_readout(cfg, rec.trial_index, rec.kind, rec.age_left, rec.age_right);
    counters.detections += rec.detections.size();
    for (const auto& d : rec.detections) counters.background_detections += d.background ? 1 : 0;
}

/// Conditional and baseline modes. `alts`, when given, are advanced in lock-step
/// until each reaches the same control state as the main trajectory.
RangeOutput simulate_control(const RunConfig& cfg, std::uint64_t begin, std::uint64_t end,
                             const ControlState& entry, std::vector<AltTrack>* alts) {
    RangeOutput out;
    out.exit = entry;
    out.exit.trial_index = begin;
    ControlState& state = out.exit;
    RunCounters& counters = out.counters;
    const std::uint32_t n_max = cfg.effective_n_max();
    const double p1l = cfg.ensemble(Ensemble::left).p1;
    const double p1r = cfg.ensemble(Ensemble::right).p1;
    const double quiet = (1.0 - p1l) * (1.0 - p1r);
    std::size_t active = alts ? alts->size() : 0;

    for (std::uint64_t t = begin; t < end; ++t) {
        const double u = herald_uniform(cfg.seed, t);
        const bool armed = state.both_idle();

        if (active > 0) {
            const auto raw = decode_heralds(u, p1l, p1r);
            for (auto& alt : *alts) {
                if (alt.merged) continue;
                const std::array<bool, 2> h{raw[0] && !alt.state.ensembles[0].stored,
                                            raw[1] && !alt.state.ensembles[1].stored};
                alt.state = step(alt.state, h, n_max).state;
            }
        } else if (armed && u < quiet) {
            ++counters.armed_trials;
            continue;
        }

        if (armed) ++counters.armed_trials;
        const auto raw = decode_heralds(u, p1l, p1r);
        const std::array<bool, 2> heralds{raw[0] && !state.ensembles[0].stored,
                                          raw[1] && !state.ensembles[1].stored};
        const auto result = step(state, heralds, n_max);
        state = result.state;

        if (heralds[0] || heralds[1] || result.event.kind != EventKind::none) {
            TrialRecord rec;
            rec.trial_index = t;
            rec.herald_left = heralds[0];
            rec.herald_right = heralds[1];
            rec.kind = result.event.kind;
            rec.age_left = result.event.age_left;
            rec.age_right = result.event.age_right;
            counters.heralds_left += heralds[0];
            counters.heralds_right += heralds[1];
            if (rec.is_ready()) ++counters.ready_events;
            if (rec.is_flush()) ++counters.flush_events;
            if (rec.kind != EventKind::none) emit_readout(cfg, rec, counters);
            out.records.push_back(std::move(rec));
        }

        if (active > 0) {
            for (auto& alt : *alts) {
                if (alt.merged || !alt.state.same_status(state)) continue;
                alt.merged = true;
                alt.merge_trial = t + 1;
                alt.main_counters = counters;
                alt.main_counters.trials = t + 1 - begin;
                alt.main_records = out.records.size();
                alt.main_state = state;
                --active;
            }
        }
    }
    counters.trials = end - begin;
    state.trial_index = end;
    return out;
}

RangeOutput simulate_wavepacket(const RunConfig& cfg, std::uint64_t begin, std::uint64_t end) {
    RangeOutput out;
    const Ensemble src = cfg.wavepacket_source;
    const double p1 = cfg.ensemble(src).p1;
    // Background-only readouts: the source contributes no photons.
    RunConfig dark = cfg;
    dark.ensemble(src).pc = 0.0;
    for (std::uint64_t t = begin; t < end; ++t) {
        const bool herald = herald_uniform(cfg.seed, t) < p1;
        // Non-herald trials still fire the read pulse; only uncorrelated light can appear.
        if (!herald && cfg.ensemble(src).background_rate <= 0.0) continue;
        TrialRecord rec;
        rec.trial_index = t;
        rec.kind = EventKind::readout;
        if (herald) {
            (src == Ensemble::left ? rec.herald_left : rec.herald_right) = true;
            (src == Ensemble::left ? out.counters.heralds_left : out.counters.heralds_right) += 1;
            emit_readout(cfg, rec, out.counters);
        } else {
            emit_readout(dark, rec, out.counters);
            if (rec.detections.empty()) continue;
        }
        ++out.counters.readout_events;
        out.records.push_back(std::move(rec));
    }
    out.counters.trials = end - begin;
    out.counters.armed_trials = end - begin;
    out.exit.trial_index = end;
    return out;
}

std::vector<AltTrack> make_alts(std::uint32_t n_max) {
    std::vector<AltTrack> alts;
    for (std::uint32_t age = 1; age < n_max; ++age) {
        for (std::size_t e = 0; e < 2; ++e) {
            AltTrack alt;
            alt.state.ensembles[e] = EnsembleStatus::holding(age);
            alts.push_back(alt);
        }
    }
    return alts;
}

void append(std::vector<TrialRecord>& into, std::vector<TrialRecord>& part, std::size_t from = 0) {
    into.insert(into.end(), std::make_move_iterator(part.begin() + static_cast<std::ptrdiff_t>(from)),
                std::make_move_iterator(part.end()));
}

void check_conservation(const RunCounters& c, const ControlState& final_state, RunMode mode) {
    if (mode == RunMode::wavepacket) return;
    const std::uint64_t pending = static_cast<std::uint64_t>(final_state.ensembles[0].stored) +
                                  static_cast<std::uint64_t>(final_state.ensembles[1].stored);
    if (c.heralds() != 2 * c.ready_events + c.flush_events + pending) {
        throw ShardMergeMismatch("herald conservation violated after merge: heralds=" +
                                 std::to_string(c.heralds()) + " ready=" +
                                 std::to_string(c.ready_events) + " flush=" +
                                 std::to_string(c.flush_events));
    }
    if (c.readout_events != 0) throw ShardMergeMismatch("readout events in a control-mode run");
}

}  // namespace

RangeOutput simulate_range(const RunConfig& cfg, std::uint64_t begin, std::uint64_t end,
                           const ControlState& entry) {
    if (cfg.mode == RunMode::wavepacket) return simulate_wavepacket(cfg, begin, end);
    return simulate_control(cfg, begin, end, entry, nullptr);
}

RunResult run(const RunConfig& cfg) {
    try {
        validate(cfg);
    } catch (const InvalidParameter& e) {
        throw InvalidConfig(e.field(), e.what());
    }
    const auto start = std::chrono::steady_clock::now();

    const std::uint64_t n_shards = std::max<std::uint64_t>(
        1, std::min<std::uint64_t>(cfg.shards, std::max<std::uint64_t>(cfg.n_trials, 1)));
    const std::uint64_t shard_len = cfg.n_trials / n_shards;
    auto shard_begin = [&](std::uint64_t k) { return k * shard_len; };
    auto shard_end = [&](std::uint64_t k) {
        return k + 1 == n_shards ? cfg.n_trials : (k + 1) * shard_len;
    };

    const bool stitched = cfg.mode != RunMode::wavepacket && n_shards > 1;
    std::vector<RangeOutput> parts(n_shards);
    std::vector<std::vector<AltTrack>> alts(n_shards);

    unsigned workers = cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads;
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_shards)));
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (std::uint64_t k = next++; k < n_shards; k = next++) {
                if (cfg.mode == RunMode::wavepacket) {
                    parts[k] = simulate_wavepacket(cfg, shard_begin(k), shard_end(k));
                    continue;
                }
                if (stitched && k > 0) alts[k] = make_alts(cfg.effective_n_max());
                parts[k] = simulate_control(cfg, shard_begin(k), shard_end(k), ControlState{},
                                            alts[k].empty() ? nullptr : &alts[k]);
            }
        } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    RunResult result;
    result.log.config = cfg;
    // The log describes the experiment; execution settings do not change it.
    result.log.config.shards = 1;
    result.log.config.threads = 0;
    auto& records = result.log.records;
    ControlState entry{};
    for (std::uint64_t k = 0; k < n_shards; ++k) {
        RangeOutput& part = parts[k];
        if (part.counters.trials != shard_end(k) - shard_begin(k)) {
            throw ShardMergeMismatch("shard " + std::to_string(k) + " trial count mismatch");
        }
        if (entry.both_idle()) {
            result.counters += part.counters;
            append(records, part.records);
            entry = part.exit;
            continue;
        }
        // Shard k was simulated from idle; splice in the prefix from the true entry state.
        // alts[k][i] started from starts[i]; its current state may have moved on.
        const AltTrack* match = nullptr;
        const auto starts = make_alts(cfg.effective_n_max());
        for (std::size_t i = 0; i < starts.size() && i < alts[k].size(); ++i) {
            if (starts[i].state.same_status(entry)) match = &alts[k][i];
        }
        if (match == nullptr) {
            throw ShardMergeMismatch("shard " + std::to_string(k) + " has no tracked entry state");
        }
        ControlState from = entry;
        if (!match->merged) {
            RangeOutput redo = simulate_control(cfg, shard_begin(k), shard_end(k), from, nullptr);
            result.counters += redo.counters;
            append(records, redo.records);
            entry = redo.exit;
            continue;
        }
        RangeOutput prefix = simulate_control(cfg, shard_begin(k), match->merge_trial, from, nullptr);
        if (!prefix.exit.same_status(match->main_state)) {
            throw ShardMergeMismatch("shard " + std::to_string(k) + " prefix does not coalesce");
        }
        RunCounters tail = part.counters;
        tail -= match->main_counters;
        result.counters += prefix.counters;
        result.counters += tail;
        append(records, prefix.records);
        append(records, part.records, match->main_records);
        entry = part.exit;
    }
    result.final_state = entry;
    result.final_state.trial_index = cfg.n_trials;
    check_conservation(result.counters, result.final_state, cfg.mode);
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].trial_index <= records[i - 1].trial_index) {
            throw ShardMergeMismatch("records out of order after merge");
        }
    }
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::string summary_json(const RunResult& result) {
    const RunConfig& cfg = result.log.config;
    const RunCounters& c = result.counters;
    nlohmann::ordered_json j;
    j["tool_version"] = kToolVersion;
    j["config_hash"] = config_hash(cfg);
    j["mode"] = to_string(cfg.mode);
    j["seed"] = cfg.seed;
    j["trials"] = c.trials;
    j["armed_trials"] = c.armed_trials;
    j["gated_trials"] = c.gated_trials();
    j["heralds_left"] = c.heralds_left;
    j["heralds_right"] = c.heralds_right;
    j["ready_events"] = c.ready_events;
    j["flush_events"] = c.flush_events;
    j["readout_events"] = c.readout_events;
    j["detections"] = c.detections;
    j["background_detections"] = c.background_detections;
    j["unresolved_heralds"] = result.unresolved();
    j["ready_per_armed_trial"] =
        c.armed_trials > 0 ? static_cast<double>(c.ready_events) / static_cast<double>(c.armed_trials) : 0.0;
    j["elapsed_seconds"] = result.elapsed_seconds;
    j["trials_per_second"] =
        result.elapsed_seconds > 0 ? static_cast<double>(c.trials) / result.elapsed_seconds : 0.0;
    return j.dump(2);
}

}  // namespace condmem
