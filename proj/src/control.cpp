#include "condmem/control.hpp"

#include <cmath>

namespace condmem {

StepResult step(const ControlState& state, std::array<bool, 2> heralds, std::uint32_t n_max) {
    StepResult out{state, {}};
    auto& ens = out.state.ensembles;
    for (std::size_t i = 0; i < 2; ++i) {
        if (!heralds[i]) continue;
        if (ens[i].stored) {
            throw ProtocolViolation(std::string("herald on gated ensemble ") +
                                    to_string(static_cast<Ensemble>(i)));
        }
        ens[i] = EnsembleStatus::holding(0);
    }

    if (ens[0].stored && ens[1].stored) {
        out.event = {EventKind::ready, ens[0].age, ens[1].age};
        ens = {EnsembleStatus::idle(), EnsembleStatus::idle()};
    } else {
        for (std::size_t i = 0; i < 2; ++i) {
            if (!ens[i].stored) continue;
            const std::uint32_t next = ens[i].age + 1;
            if (next >= n_max) {
                out.event.kind = i == 0 ? EventKind::flush_left : EventKind::flush_right;
                (i == 0 ? out.event.age_left : out.event.age_right) = n_max;
                ens[i] = EnsembleStatus::idle();
            } else {
                ens[i].age = next;
            }
        }
    }
    out.state.trial_index = state.trial_index + 1;
    return out;
}

std::vector<ControlAction> actions_for(const ControlState& before, std::array<bool, 2> heralds,
                                       const StepResult& result) {
    std::vector<ControlAction> actions;
    for (std::size_t i = 0; i < 2; ++i) {
        const auto e = static_cast<Ensemble>(i);
        if (!before.ensembles[i].stored) actions.push_back({ControlActionKind::fire_write, e});
        if (heralds[i] && result.event.kind != EventKind::ready) {
            actions.push_back({ControlActionKind::gate_off, e});
        }
    }
    switch (result.event.kind) {
        case EventKind::ready:
            actions.push_back({ControlActionKind::fire_read_both});
            break;
        case EventKind::flush_left:
            actions.push_back({ControlActionKind::flush, Ensemble::left});
            break;
        case EventKind::flush_right:
            actions.push_back({ControlActionKind::flush, Ensemble::right});
            break;
        default:
            break;
    }
    return actions;
}

double p11_exact(double p1, std::uint32_t n) {
    if (n <= 1) return p1 * p1;
    // sum_{k=1}^{N-1} (1-p1)^k p1 = (1-p1) (1 - (1-p1)^{N-1})
    const double tail = -std::expm1(static_cast<double>(n - 1) * std::log1p(-p1));
    return p1 * p1 + 2.0 * p1 * (1.0 - p1) * tail;
}

double p11_small_p1(double p1, std::uint32_t n) {
    return (2.0 * n - 1.0) * p1 * p1;
}

double p1122_ideal(double p1, double pc, std::uint32_t n) {
    return p11_small_p1(p1, n) * pc * pc / 2.0;
}

double p1122_ideal_exact(double p1, double pc, std::uint32_t n) {
    return p11_exact(p1, n) * pc * pc / 2.0;
}

double p22c_model(double pc, double nc, double n) {
    return pc * pc / 2.0 * std::exp(-n / nc);
}

double p2c_model(double pc, double nc, double n) {
    return (pc + pc * std::exp(-n / nc)) / 2.0 - p22c_model(pc, nc, n);
}

double p1122_decohered(double p1, double pc, double nc, std::uint32_t n) {
    double waiting = 0.0;
    double survive = 1.0;
    for (std::uint32_t k = 1; k < n; ++k) {
        survive *= 1.0 - p1;
        waiting += survive * p1 * p22c_model(pc, nc, k);
    }
    return p1 * (p1 * p22c_model(pc, nc, 0) + 2.0 * waiting);
}

double enhancement_f11(double p1, std::uint32_t n) {
    return p11_exact(p1, n) / (p1 * p1);
}

double enhancement_f1122(double p1, double pc, double nc, std::uint32_t n) {
    return p1122_decohered(p1, pc, nc, n) / p1122_decohered(p1, pc, nc, 1);
}

}  // namespace condmem
