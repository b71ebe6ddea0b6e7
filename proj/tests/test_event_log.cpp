#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "condmem/config.hpp"
#include "condmem/engine.hpp"
#include "condmem/event_log.hpp"
#include "condmem/random.hpp"
#include "condmem/reproduce.hpp"

using namespace condmem;

namespace {

EventLog round_trip(const EventLog& log) {
    std::stringstream s;
    write_event_log(s, log);
    return read_event_log(s);
}

/// Random but well-formed log: increasing trials, at most one click per detector.
EventLog random_log(std::uint64_t seed) {
    CounterStream rs(seed, 0, StreamPurpose::test);
    EventLog log;
    log.config = measured_config();
    log.config.n_trials = 1'000'000;
    log.config.seed = seed;
    std::uint64_t trial = 0;
    const int n = 1 + static_cast<int>(rs.uniform() * 200);
    for (int i = 0; i < n; ++i) {
        trial += 1 + static_cast<std::uint64_t>(rs.uniform() * 1000);
        TrialRecord r;
        r.trial_index = trial;
        r.herald_left = rs.uniform() < 0.5;
        r.herald_right = rs.uniform() < 0.5;
        r.kind = static_cast<EventKind>(static_cast<int>(rs.uniform() * 5));
        r.age_left = static_cast<std::uint32_t>(rs.uniform() * 23);
        r.age_right = static_cast<std::uint32_t>(rs.uniform() * 23);
        for (auto d : {Detector::a, Detector::b}) {
            if (rs.uniform() < 0.4) {
                r.detections.push_back(
                    {d, 2 * static_cast<std::int32_t>(rs.uniform() * 90) - 90, rs.uniform() < 0.2});
            }
        }
        log.records.push_back(r);
    }
    return log;
}

}  // namespace

TEST_CASE("record format") {
    TrialRecord r;
    r.trial_index = 1234;
    r.herald_right = true;
    r.kind = EventKind::ready;
    r.age_left = 5;
    r.detections = {{Detector::a, -4, false}, {Detector::b, 10, true}};
    const std::string line = format_record(r);
    CHECK(line == "1234 0 1 ready 5 0 a:-4,b:10:bg");
    CHECK(parse_record(line) == r);
    CHECK(parse_record("7 1 0 none 0 0 -").detections.empty());
}

TEST_CASE("round-trip property over random logs") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        CAPTURE(seed);
        const EventLog log = random_log(seed);
        CHECK(round_trip(log) == log);
    }
}

TEST_CASE("round-trip of simulated logs") {
    RunConfig c = measured_config();
    c.n_trials = 2'000'000;
    for (auto mode : {RunMode::conditional, RunMode::baseline, RunMode::wavepacket}) {
        c.mode = mode;
        const EventLog log = run(c).log;
        CHECK(round_trip(log) == log);
    }
}

TEST_CASE("file round-trip and header") {
    const auto path = std::filesystem::temp_directory_path() / "condmem_test_events.log";
    const EventLog log = random_log(77);
    save_event_log(path, log);
    CHECK(load_event_log(path) == log);
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first == output_header(log.config));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_event_log(path), IoError);
}

TEST_CASE("malformed logs report the line") {
    const EventLog log = random_log(3);
    std::stringstream s;
    write_event_log(s, log);
    std::string text = s.str();

    auto error_of = [](const std::string& t) {
        std::istringstream in(t);
        try {
            read_event_log(in);
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string("<none>");
    };
    CHECK(error_of(text + "oops\n").find("line ") == 0);
    CHECK(error_of(text + "999999999 0 0 none 0 0 -\n").find("trial index beyond") != std::string::npos);
    CHECK(error_of(text + "1 0 0 none 0 0 -\n").find("not increasing") != std::string::npos);
    CHECK(error_of(text + "999999 0 0 ready 0 0 a:3\n").find("2 ns grid") != std::string::npos);
    CHECK(error_of(text + "999999 0 0 ready 0 0 a:2,a:4\n").find("one click") != std::string::npos);

    const auto at = text.find("#@ seed = ");
    REQUIRE(at != std::string::npos);
    text.insert(at + 10, "1");
    CHECK(error_of(text).find("config_hash") != std::string::npos);
}
