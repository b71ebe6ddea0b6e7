#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "condmem/types.hpp"

namespace condmem {

//---------------------------------------------------------------------------//
// Conditional-control state machine
//---------------------------------------------------------------------------//

struct ControlEvent {
    EventKind kind = EventKind::none;
    std::uint32_t age_left = 0;
    std::uint32_t age_right = 0;

    bool operator==(const ControlEvent&) const = default;
};

struct StepResult {
    ControlState state;  ///< ages already advanced to the next trial
    ControlEvent event;
};

/*!
 * Advance the controller by one trial.
 *
 * Input ages count the trials elapsed between an ensemble's herald and the
 * current trial. An idle ensemble that heralds becomes stored with age 0.
 * When both ensembles hold an excitation a ready event is emitted with the
 * current ages and both return to idle. Otherwise a stored ensemble ages by
 * one; reaching n_max it is flushed (event age = n_max) and returns to idle.
 * The returned state is the state at the start of the next trial.
 *
 * A herald on a stored ensemble throws ProtocolViolation: its write train is
 * gated off.
 */
StepResult step(const ControlState& state, std::array<bool, 2> heralds, std::uint32_t n_max);

inline StepResult step(const ControlState& state, std::array<bool, 2> heralds,
                       const ControlConfig& cfg) {
    return step(state, heralds, cfg.n_max);
}

enum class ControlActionKind : std::uint8_t { fire_write, gate_off, fire_read_both, flush };

struct ControlAction {
    ControlActionKind kind;
    Ensemble ensemble = Ensemble::left;  ///< unused for fire_read_both

    bool operator==(const ControlAction&) const = default;
};

/// Pulse-level actions the electronics take for one transition.
std::vector<ControlAction> actions_for(const ControlState& before, std::array<bool, 2> heralds,
                                       const StepResult& result);

//---------------------------------------------------------------------------//
// Preparation probabilities
//---------------------------------------------------------------------------//

/// Probability per armed trial that both ensembles are prepared within N trials:
/// p1 {p1 + 2 sum_{k=1}^{N-1} (1-p1)^k p1}.
double p11_exact(double p1, std::uint32_t n);

/// (2N - 1) p1^2, the p1 << 1 limit.
double p11_small_p1(double p1, std::uint32_t n);

/// (2N - 1) p1^2 pc^2 / 2.
double p1122_ideal(double p1, double pc, std::uint32_t n);

/// p11_exact(p1, N) pc^2 / 2.
double p1122_ideal_exact(double p1, double pc, std::uint32_t n);

/// Joint-detection probability with each waiting term weighted by p22c(k).
double p1122_decohered(double p1, double pc, double nc, std::uint32_t n);

/// (pc^2 / 2) exp(-N / Nc).
double p22c_model(double pc, double nc, double n);

/// (pc + pc exp(-N / Nc)) / 2 - p22c.
double p2c_model(double pc, double nc, double n);

/// p11_exact(p1, N) / p1^2.
double enhancement_f11(double p1, std::uint32_t n);

/// p1122_decohered(N) / p1122_decohered(1).
double enhancement_f1122(double p1, double pc, double nc, std::uint32_t n);

}  // namespace condmem
