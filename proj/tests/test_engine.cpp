#include "doctest.h"

#include <cmath>
#include <sstream>

#include "json.hpp"

#include "condmem/analytics.hpp"
#include "condmem/engine.hpp"
#include "condmem/event_log.hpp"
#include "condmem/hom.hpp"
#include "condmem/reproduce.hpp"

using namespace condmem;

namespace {

RunConfig small_config(std::uint64_t trials, std::uint64_t seed = 42) {
    RunConfig c = measured_config();
    for (auto& e : c.ensembles) e.p1 = 0.01;
    c.control.n_max = 7;
    c.n_trials = trials;
    c.seed = seed;
    return c;
}

std::string serialized(const EventLog& log) {
    std::ostringstream out;
    write_event_log(out, log);
    return out.str();
}

}  // namespace

TEST_CASE("herald decoding partitions the unit interval") {
    const double p = 0.1;
    CHECK(decode_heralds(0.0, p, p) == std::array<bool, 2>{false, false});
    CHECK(decode_heralds(0.81 - 1e-12, p, p) == std::array<bool, 2>{false, false});
    CHECK(decode_heralds(0.81 + 1e-12, p, p) == std::array<bool, 2>{true, false});
    CHECK(decode_heralds(0.90 + 1e-12, p, p) == std::array<bool, 2>{false, true});
    CHECK(decode_heralds(0.99 + 1e-12, p, p) == std::array<bool, 2>{true, true});
}

TEST_CASE("logs are identical for any shard and thread count") {
    RunConfig c = small_config(200'000);
    c.shards = 1;
    c.threads = 1;
    const RunResult one = run(c);
    const std::string reference = serialized(one.log);
    CHECK(one.log.records.size() > 1000);
    for (std::uint32_t shards : {2u, 8u, 37u}) {
        for (std::uint32_t threads : {1u, 4u}) {
            CAPTURE(shards);
            CAPTURE(threads);
            c.shards = shards;
            c.threads = threads;
            const RunResult r = run(c);
            CHECK(r.counters == one.counters);
            CHECK(r.log == one.log);
            CHECK(serialized(r.log) == reference);
        }
    }
}

TEST_CASE("ranges compose from the exit state") {
    const RunConfig c = small_config(50'000, 9);
    const RangeOutput whole = simulate_range(c, 0, c.n_trials, ControlState{});
    const RangeOutput head = simulate_range(c, 0, 20'011, ControlState{});
    const RangeOutput tail = simulate_range(c, 20'011, c.n_trials, head.exit);
    auto joined = head.records;
    joined.insert(joined.end(), tail.records.begin(), tail.records.end());
    CHECK(joined == whole.records);
    RunCounters sum = head.counters;
    sum += tail.counters;
    CHECK(sum == whole.counters);
}

TEST_CASE("herald conservation and armed-trial accounting") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const RunResult r = run(small_config(300'000, seed));
        const auto& k = r.counters;
        CHECK(k.heralds() == 2 * k.ready_events + k.flush_events + r.unresolved());
        CHECK(k.trials == 300'000);
        CHECK(armed_trials(r.log) == k.armed_trials);
        std::uint64_t previous = 0;
        bool first = true;
        for (const auto& rec : r.log.records) {
            if (!first) CHECK(rec.trial_index > previous);
            first = false;
            previous = rec.trial_index;
            if (rec.is_ready()) CHECK(rec.separation() <= r.log.config.control.n_max - 1);
        }
    }
}

TEST_CASE("baseline equals conditional control with n_max = 1") {
    RunConfig base = small_config(100'000, 5);
    base.mode = RunMode::baseline;
    RunConfig cond = base;
    cond.mode = RunMode::conditional;
    cond.control.n_max = 1;
    const RunResult a = run(base);
    const RunResult b = run(cond);
    CHECK(a.log.records == b.log.records);
    CHECK(a.counters == b.counters);
    for (const auto& rec : a.log.records) {
        if (rec.is_ready()) CHECK(rec.separation() == 0);
    }
}

TEST_CASE("degenerate runs") {
    RunConfig c = small_config(10'000);
    for (auto& e : c.ensembles) e.p1 = 0.0;
    const RunResult quiet = run(c);
    CHECK(quiet.log.records.empty());
    CHECK(quiet.counters.armed_trials == 10'000);

    c.n_trials = 0;
    const RunResult none = run(c);
    CHECK(none.log.records.empty());
    CHECK(none.counters.trials == 0);
}

TEST_CASE("readout sampling matches the click law") {
    // Every trial is ready(0, 0); windows wide enough to accept every photon.
    RunConfig c = measured_config();
    for (auto& e : c.ensembles) {
        e.p1 = 1.0;
        e.pc = 0.3;
        e.w = 0.5;
    }
    c.windows.field2_window_ns = 400;
    c.windows.conditional_field2_window_ns = 400;
    c.n_trials = 400'000;
    for (auto pol : {Polarization::parallel, Polarization::orthogonal}) {
        c.interference.polarization = pol;
        const RunResult r = run(c);
        double both = 0.0;
        double a = 0.0;
        for (const auto& rec : r.log.records) {
            bool ca = false;
            bool cb = false;
            for (const auto& d : rec.detections) (d.detector == Detector::a ? ca : cb) = true;
            both += ca && cb;
            a += ca;
        }
        const auto law = click_probabilities(conditional_distribution(0.3, 0.5),
                                             conditional_distribution(0.3, 0.5), c.interference);
        const double n = static_cast<double>(c.n_trials);
        CHECK(std::abs(both / n - law.both) < 4.0 * std::sqrt(law.both / n));
        CHECK(std::abs(a / n - law.a()) < 4.0 * std::sqrt(law.a() / n));
    }
}

TEST_CASE("wavepacket mode records heralded readouts and clicked background readouts") {
    RunConfig c = measured_config();
    c.mode = RunMode::wavepacket;
    c.n_trials = 100'000;
    for (auto& e : c.ensembles) e.background_rate = 0.01;
    const RunResult r = run(c);
    CHECK(r.counters.armed_trials == c.n_trials);
    for (const auto& rec : r.log.records) {
        CHECK(rec.kind == EventKind::readout);
        CHECK((rec.herald_left || !rec.detections.empty()));
        CHECK(!rec.herald_right);
    }
    CHECK(r.counters.background_detections > 0);
}

TEST_CASE("run summary is valid JSON") {
    const RunResult r = run(small_config(1'000));
    const auto j = nlohmann::json::parse(summary_json(r));
    CHECK(j.contains("config_hash"));
}
