#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "condmem/control.hpp"
#include "condmem/types.hpp"

namespace condmem {

struct RunCounters {
    std::uint64_t trials = 0;
    std::uint64_t armed_trials = 0;  ///< trials that start with both ensembles idle
    std::uint64_t heralds_left = 0;
    std::uint64_t heralds_right = 0;
    std::uint64_t ready_events = 0;
    std::uint64_t flush_events = 0;
    std::uint64_t readout_events = 0;
    std::uint64_t detections = 0;
    std::uint64_t background_detections = 0;

    std::uint64_t heralds() const { return heralds_left + heralds_right; }
    /// Trials during which one write train was gated off.
    std::uint64_t gated_trials() const { return trials - armed_trials; }

    RunCounters& operator+=(const RunCounters& o);
    RunCounters& operator-=(const RunCounters& o);
    bool operator==(const RunCounters&) const = default;
};

struct RunResult {
    EventLog log;
    RunCounters counters;
    ControlState final_state;
    double elapsed_seconds = 0.0;

    /// Heralds still stored when the run ended.
    std::uint32_t unresolved() const {
        return static_cast<std::uint32_t>(final_state.ensembles[0].stored) +
               static_cast<std::uint32_t>(final_state.ensembles[1].stored);
    }
};

/// Simulates config.n_trials trials. The log is identical for every shard
/// and thread count. Throws InvalidConfig or ShardMergeMismatch.
RunResult run(const RunConfig& config);

/// Trials [begin, end) starting from `entry`; the building block of run().
struct RangeOutput {
    std::vector<TrialRecord> records;
    RunCounters counters;
    ControlState exit;
};

RangeOutput simulate_range(const RunConfig& config, std::uint64_t begin, std::uint64_t end,
                           const ControlState& entry);

/// Readout of one ready, flush or wavepacket event, drawn from the trial's readout stream.
std::vector<Detection> sample_readout(const RunConfig& config, std::uint64_t trial,
                                      EventKind kind, std::uint32_t age_left,
                                      std::uint32_t age_right);

/// Decodes the trial's single herald draw into (herald_L, herald_R).
std::array<bool, 2> decode_heralds(double uniform, double p1_left, double p1_right);

/// Run summary as a JSON document (counts, rates, config hash).
std::string summary_json(const RunResult& result);

}  // namespace condmem
