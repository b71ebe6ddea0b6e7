#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace condmem {

//---------------------------------------------------------------------------//
// Errors
//---------------------------------------------------------------------------//

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A physical or configuration parameter is outside its admissible range.
class InvalidParameter : public Error {
  public:
    InvalidParameter(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

class DivisionByZero : public Error {
  public:
    using Error::Error;
};

/// A herald was delivered to an ensemble whose write train is gated off.
class ProtocolViolation : public Error {
  public:
    using Error::Error;
};

class RejectionBudgetExceeded : public Error {
  public:
    using Error::Error;
};

class InvalidConfig : public Error {
  public:
    InvalidConfig(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

  private:
    std::string key_;
};

class ShardMergeMismatch : public Error {
  public:
    using Error::Error;
};

class ParseError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

class EmptyLog : public Error {
  public:
    using Error::Error;
};

class MismatchedConfigs : public Error {
  public:
    using Error::Error;
};

class NoConvergence : public Error {
  public:
    using Error::Error;
};

class DegenerateJacobian : public Error {
  public:
    using Error::Error;
};

//---------------------------------------------------------------------------//
// Enumerations
//---------------------------------------------------------------------------//

enum class Ensemble : std::uint8_t { left = 0, right = 1 };
enum class Detector : std::uint8_t { a = 0, b = 1 };
enum class Polarization : std::uint8_t { parallel, orthogonal };
enum class RunMode : std::uint8_t { conditional, baseline, wavepacket };

inline constexpr std::size_t index(Ensemble e) { return static_cast<std::size_t>(e); }
inline constexpr std::size_t index(Detector d) { return static_cast<std::size_t>(d); }

//---------------------------------------------------------------------------//
// Physical parameters
//---------------------------------------------------------------------------//

/// Per-node rates of a heralded single-photon memory.
struct EnsembleParams {
    double p1 = 0.0;   ///< field-1 herald probability per trial
    double pc = 0.0;   ///< field-2 detection probability given a fresh herald
    double qc = 0.0;   ///< retrieval efficiency at the ensemble output (informational)
    double q1 = 0.0;   ///< excitation probability into the detection mode (informational)
    double w = 0.0;    ///< two-photon suppression 2 P2 / P1^2
    double g12 = 0.0;  ///< field-1/field-2 cross-correlation (informational)
    double nc = 1.0;   ///< memory coherence time in trials
    double background_rate = 0.0;  ///< uncorrelated field-2 detection per readout

    /// P2 = w pc^2 / 2 for a fresh excitation.
    double two_photon_probability() const { return w * pc * pc / 2.0; }

    bool operator==(const EnsembleParams&) const = default;
};

/// Throws InvalidParameter naming the first violated bound; returns the input.
const EnsembleParams& validate(const EnsembleParams& params);

struct ControlConfig {
    std::uint32_t n_max = 23;
    double trial_duration_ns = 525.0;

    /// Storage timeout, n_max trials.
    double max_storage_ns() const { return n_max * trial_duration_ns; }

    bool operator==(const ControlConfig&) const = default;
};

void validate(const ControlConfig& control);

struct InterferenceConfig {
    double xi = 1.0;                       ///< wavepacket overlap
    double envelope_width_ns = 13.0;       ///< 1/e half-width of each wavepacket density
    double delta_omega_rad_per_ns = 0.0;   ///< detuning between the two sources
    double splitter_ratio = 0.5;           ///< intensity transmission towards D2a
    Polarization polarization = Polarization::orthogonal;
    double pol_misalignment_offset = 0.0;  ///< fractional loss of field 2L, orthogonal setting

    /// 1/e half-width of the detection-time difference density.
    double coincidence_width_ns() const { return std::sqrt(2.0) * envelope_width_ns; }

    bool operator==(const InterferenceConfig&) const = default;
};

void validate(const InterferenceConfig& interference);

/// Electronic and analysis time windows, full widths centred on the wavepacket.
struct AnalysisWindows {
    double field1_window_ns = 80.0;
    double field2_window_ns = 90.0;
    double conditional_field2_window_ns = 44.0;
    double tau_integration_halfwidth_ns = 44.0;

    bool operator==(const AnalysisWindows&) const = default;
};

void validate(const AnalysisWindows& windows);

//---------------------------------------------------------------------------//
// Control state
//---------------------------------------------------------------------------//

/// Idle, or holding an excitation heralded `age` trials before the current one.
struct EnsembleStatus {
    bool stored = false;
    std::uint32_t age = 0;

    static constexpr EnsembleStatus idle() { return {}; }
    static constexpr EnsembleStatus holding(std::uint32_t age) { return {true, age}; }

    bool operator==(const EnsembleStatus&) const = default;
};

struct ControlState {
    std::array<EnsembleStatus, 2> ensembles{};
    std::uint64_t trial_index = 0;

    const EnsembleStatus& operator[](Ensemble e) const { return ensembles[index(e)]; }
    EnsembleStatus& operator[](Ensemble e) { return ensembles[index(e)]; }

    bool both_idle() const { return !ensembles[0].stored && !ensembles[1].stored; }
    bool same_status(const ControlState& other) const { return ensembles == other.ensembles; }
};

//---------------------------------------------------------------------------//
// Event log
//---------------------------------------------------------------------------//

/// Acquisition-card resolution.
inline constexpr int kTimeQuantumNs = 2;

/// Rounds to the nearest multiple of the acquisition resolution.
inline std::int32_t quantize_time(double t_ns) {
    return static_cast<std::int32_t>(std::lround(t_ns / kTimeQuantumNs)) * kTimeQuantumNs;
}

enum class EventKind : std::uint8_t { none, ready, flush_left, flush_right, readout };

struct Detection {
    Detector detector = Detector::a;
    std::int32_t time_ns = 0;  ///< relative to the readout centre, multiple of 2 ns
    bool background = false;

    bool operator==(const Detection&) const = default;
};

struct TrialRecord {
    std::uint64_t trial_index = 0;
    bool herald_left = false;
    bool herald_right = false;
    EventKind kind = EventKind::none;
    std::uint32_t age_left = 0;
    std::uint32_t age_right = 0;
    std::vector<Detection> detections;

    bool is_ready() const { return kind == EventKind::ready; }
    bool is_flush() const {
        return kind == EventKind::flush_left || kind == EventKind::flush_right;
    }
    /// Trials between the two heralds of a ready event.
    std::uint32_t separation() const { return age_left > age_right ? age_left : age_right; }

    bool operator==(const TrialRecord&) const = default;
};

/// Full description of one simulated experiment.
struct RunConfig {
    std::array<EnsembleParams, 2> ensembles{};
    ControlConfig control{};
    InterferenceConfig interference{};
    AnalysisWindows windows{};
    std::uint64_t n_trials = 0;
    std::uint64_t seed = 0;
    std::uint32_t shards = 1;
    std::uint32_t threads = 0;  ///< 0 selects all cores
    RunMode mode = RunMode::conditional;
    Ensemble wavepacket_source = Ensemble::left;

    const EnsembleParams& ensemble(Ensemble e) const { return ensembles[index(e)]; }
    EnsembleParams& ensemble(Ensemble e) { return ensembles[index(e)]; }

    /// Storage limit actually applied by the state machine.
    std::uint32_t effective_n_max() const {
        return mode == RunMode::conditional ? control.n_max : 1u;
    }

    bool operator==(const RunConfig&) const = default;
};

void validate(const RunConfig& config);

/// Sparse per-trial history: only trials with heralds or readouts are kept.
struct EventLog {
    RunConfig config;
    std::vector<TrialRecord> records;

    bool operator==(const EventLog&) const = default;
};

const char* to_string(EventKind kind);
const char* to_string(RunMode mode);
const char* to_string(Polarization pol);
const char* to_string(Ensemble e);

}  // namespace condmem
