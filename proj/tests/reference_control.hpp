#pragma once

#include <cmath>
#include <optional>

#include "condmem/control.hpp"

namespace condmem::testing {

// Reference semantics in terms of herald trials instead of ages: an excitation
// heralded at trial h is read at trial t with age t - h, and flushed at the
// first trial t with t - h + 1 >= n_max unless the partner arrived.
struct Reference {
    std::uint32_t n_max;
    std::optional<std::uint64_t> herald[2];
    std::uint64_t t = 0;

    // Returns nullopt for a herald on a stored ensemble.
    std::optional<ControlEvent> advance(std::array<bool, 2> h) {
        for (int i = 0; i < 2; ++i) {
            if (h[i] && herald[i]) return std::nullopt;
        }
        for (int i = 0; i < 2; ++i) {
            if (h[i]) herald[i] = t;
        }
        ControlEvent ev;
        if (herald[0] && herald[1]) {
            ev = {EventKind::ready, std::uint32_t(t - *herald[0]), std::uint32_t(t - *herald[1])};
            herald[0].reset();
            herald[1].reset();
        } else {
            for (int i = 0; i < 2; ++i) {
                if (herald[i] && t - *herald[i] + 1 >= n_max) {
                    ev.kind = i == 0 ? EventKind::flush_left : EventKind::flush_right;
                    (i == 0 ? ev.age_left : ev.age_right) = n_max;
                    herald[i].reset();
                }
            }
        }
        ++t;
        return ev;
    }

    ControlState state() const {
        ControlState s;
        for (int i = 0; i < 2; ++i) {
            if (herald[i]) s.ensembles[i] = EnsembleStatus::holding(std::uint32_t(t - *herald[i]));
        }
        s.trial_index = t;
        return s;
    }
};

struct ModelCheck {
    std::uint32_t n_max;
    int max_length;
    std::uint64_t transitions = 0;
    std::uint64_t mismatches = 0;
    std::uint64_t violations = 0;

    void explore(const ControlState& state, const Reference& ref, int depth) {
        if (depth == max_length) return;
        for (int bits = 0; bits < 4; ++bits) {
            const std::array<bool, 2> h{(bits & 1) != 0, (bits & 2) != 0};
            Reference next_ref = ref;
            const auto expected = next_ref.advance(h);
            ++transitions;
            if (!expected) {
                bool threw = false;
                try {
                    step(state, h, n_max);
                } catch (const ProtocolViolation&) {
                    threw = true;
                }
                mismatches += threw ? 0 : 1;
                continue;
            }
            const StepResult r = step(state, h, n_max);
            const ControlState want = next_ref.state();
            if (r.event != *expected || !r.state.same_status(want) ||
                r.state.trial_index != want.trial_index) {
                ++mismatches;
            }
            // Safety: ready only with both stored; nothing held past n_max.
            if (r.event.kind == EventKind::ready &&
                !((state[Ensemble::left].stored || h[0]) && (state[Ensemble::right].stored || h[1]))) {
                ++violations;
            }
            for (const auto& e : r.state.ensembles) {
                if (e.stored && e.age >= n_max) ++violations;
            }
            explore(r.state, next_ref, depth + 1);
        }
    }
};

/// Probability that trial 0 (both ensembles idle) starts a preparation that
/// completes within n trials, by enumerating all 2^(2n) herald patterns.
/// Heralds on stored ensembles cannot occur (the write train is gated) and
/// are dropped.
inline double p11_enumerated(double p1, std::uint32_t n) {
    double total = 0.0;
    const std::uint32_t bits = 2 * n;
    for (std::uint32_t pattern = 0; pattern < (1u << bits); ++pattern) {
        if ((pattern & 3u) == 0) continue;  // trial 0 carries no herald
        int ones = 0;
        for (std::uint32_t b = 0; b < bits; ++b) ones += (pattern >> b) & 1u;
        const double weight = std::pow(p1, ones) * std::pow(1.0 - p1, int(bits) - ones);
        ControlState s{};
        bool ready = false;
        for (std::uint32_t t = 0; t < n && !ready; ++t) {
            std::array<bool, 2> h{((pattern >> (2 * t)) & 1u) != 0, ((pattern >> (2 * t + 1)) & 1u) != 0};
            for (int i = 0; i < 2; ++i) h[i] = h[i] && !s.ensembles[i].stored;
            const auto r = step(s, h, n);
            ready = r.event.kind == EventKind::ready;
            if (r.event.kind != EventKind::none && !ready) break;
            s = r.state;
        }
        if (ready) total += weight;
    }
    return total;
}

}  // namespace condmem::testing
