#include "doctest.h"

#include <cmath>
#include <vector>

#include "condmem/control.hpp"
#include "reference_control.hpp"

using namespace condmem;

TEST_CASE("transition examples") {
    const ControlState idle{};
    auto r = step(idle, {true, true}, 23);
    CHECK(r.event == ControlEvent{EventKind::ready, 0, 0});
    CHECK(r.state.both_idle());

    ControlState s{};
    s[Ensemble::left] = EnsembleStatus::holding(5);
    r = step(s, {false, true}, 23);
    CHECK(r.event == ControlEvent{EventKind::ready, 5, 0});
    CHECK(r.state.both_idle());

    s[Ensemble::left] = EnsembleStatus::holding(22);
    r = step(s, {false, false}, 23);
    CHECK(r.event.kind == EventKind::flush_left);
    CHECK(r.event.age_left == 23);
    CHECK(r.state.both_idle());

    s[Ensemble::left] = EnsembleStatus::holding(3);
    r = step(s, {false, false}, 23);
    CHECK(r.event.kind == EventKind::none);
    CHECK(r.state[Ensemble::left] == EnsembleStatus::holding(4));
    CHECK(r.state.trial_index == 1);

    CHECK_THROWS_AS(step(s, {true, false}, 23), ProtocolViolation);
}

TEST_CASE("pulse-level actions") {
    ControlState s{};
    auto r = step(s, {true, false}, 23);
    auto a = actions_for(s, {true, false}, r);
    CHECK(a == std::vector<ControlAction>{{ControlActionKind::fire_write, Ensemble::left},
                                          {ControlActionKind::gate_off, Ensemble::left},
                                          {ControlActionKind::fire_write, Ensemble::right}});
    const ControlState held = r.state;
    r = step(held, {false, true}, 23);
    a = actions_for(held, {false, true}, r);
    CHECK(a == std::vector<ControlAction>{{ControlActionKind::fire_write, Ensemble::right},
                                          {ControlActionKind::fire_read_both}});
}


TEST_CASE("exhaustive model check against reference semantics") {
    for (std::uint32_t n_max = 1; n_max <= 4; ++n_max) {
        CAPTURE(n_max);
        testing::ModelCheck mc{n_max, 12};
        mc.explore(ControlState{}, testing::Reference{n_max, {}, 0}, 0);
        CHECK(mc.transitions > 0);
        CHECK(mc.mismatches == 0);
        CHECK(mc.violations == 0);
    }
}

TEST_CASE("p11_exact matches herald-pattern enumeration") {
    for (double p1 : {0.001, 0.01, 0.1}) {
        for (std::uint32_t n = 1; n <= 8; ++n) {
            CAPTURE(p1);
            CAPTURE(n);
            CHECK(std::abs(p11_exact(p1, n) - testing::p11_enumerated(p1, n)) <= 1e-12);
        }
    }
}

TEST_CASE("preparation and joint-detection closed forms") {
    CHECK(p11_exact(0.0012, 23) / (0.0012 * 0.0012) == doctest::Approx(44.4).epsilon(1e-3));
    CHECK(enhancement_f11(0.0012, 23) == doctest::Approx(44.398).epsilon(1e-4));
    CHECK(p11_exact(0.37, 1) == doctest::Approx(0.37 * 0.37).epsilon(1e-15));
    CHECK(enhancement_f11(1e-9, 23) == doctest::Approx(45.0).epsilon(1e-6));
    CHECK(p11_small_p1(0.0012, 23) == doctest::Approx(45 * 0.0012 * 0.0012));

    CHECK(p1122_ideal(0.0012, 0.091, 23) == doctest::Approx(2.68e-7).epsilon(2e-3));
    CHECK(p1122_ideal(0.0012, 0.091, 1) == doctest::Approx(0.0012 * 0.0012 * 0.091 * 0.091 / 2));
    CHECK(p1122_decohered(0.0012, 0.091, 1e12, 23) ==
          doctest::Approx(p1122_ideal_exact(0.0012, 0.091, 23)).epsilon(1e-9));

    // 1 + 2 sum_{k=1}^{22} e^{-k/18} without the (1 - p1)^k survival factors.
    double bare = 1.0;
    for (int k = 1; k <= 22; ++k) bare += 2.0 * std::exp(-k / 18.0);
    CHECK(bare == doctest::Approx(25.7).epsilon(2e-3));
    CHECK(enhancement_f1122(1e-12, 0.091, 18, 23) == doctest::Approx(bare).epsilon(1e-9));
    CHECK(enhancement_f1122(0.0012, 0.091, 18, 23) == doctest::Approx(25.42).epsilon(1e-3));

    CHECK(p22c_model(0.091, 18, 0) == doctest::Approx(0.0041405).epsilon(1e-9));
    CHECK(p2c_model(0.091, 18, 0) == doctest::Approx(0.0868595).epsilon(1e-9));
    CHECK(p22c_model(0.091, 18, 1e6) == doctest::Approx(0.0).scale(1.0));
    CHECK(p2c_model(0.091, 18, 1e6) == doctest::Approx(0.0455));
}

TEST_CASE("monotonicity and ideal-memory bound") {
    for (double p1 : {0.0012, 0.01, 0.2}) {
        for (std::uint32_t n = 1; n < 40; ++n) {
            CHECK(p11_exact(p1, n + 1) > p11_exact(p1, n));
            const double ideal = p1122_ideal_exact(p1, 0.091, n);
            const double dec = p1122_decohered(p1, 0.091, 18, n);
            if (n == 1) {
                CHECK(dec == doctest::Approx(ideal).epsilon(1e-14));
            } else {
                CHECK(dec < ideal);
            }
        }
    }
}
