#include "doctest.h"

#include "condmem/config.hpp"
#include "condmem/reproduce.hpp"

using namespace condmem;

TEST_CASE("ensemble validation") {
    EnsembleParams p;
    p.p1 = 0.0012;
    p.pc = 0.085;
    p.w = 0.17;
    p.nc = 18;
    CHECK_NOTHROW(validate(p));

    EnsembleParams zero;
    zero.nc = 1;
    CHECK_NOTHROW(validate(zero));

    EnsembleParams bad;
    bad.pc = 0.9;
    bad.w = 3.0;  // P2 = 1.215 > 1 - 0.9
    try {
        validate(bad);
        FAIL("expected InvalidParameter");
    } catch (const InvalidParameter& e) {
        CHECK(e.field() == "w");
    }

    EnsembleParams neg = p;
    neg.p1 = -0.1;
    CHECK_THROWS_AS(validate(neg), InvalidParameter);
}

TEST_CASE("config text round-trips through the canonical form") {
    const RunConfig c = measured_config();
    const RunConfig back = parse_config(format_config(c));
    CHECK(back == c);
    CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("parse_config applies shared ensemble keys and comments") {
    const RunConfig c = parse_config(
        "# comment\n"
        "ensemble.p1 = 0.01   # both\n"
        "ensemble_r.pc = 0.2\n"
        "interference.polarization = parallel\n"
        "n_trials = 3.36e9\n");
    CHECK(c.ensemble(Ensemble::left).p1 == 0.01);
    CHECK(c.ensemble(Ensemble::right).p1 == 0.01);
    CHECK(c.ensemble(Ensemble::right).pc == 0.2);
    CHECK(c.ensemble(Ensemble::left).pc == 0.0);
    CHECK(c.interference.polarization == Polarization::parallel);
    CHECK(c.n_trials == 3'360'000'000ull);
}

TEST_CASE("malformed config names the offending key") {
    auto key_of = [](const char* text) {
        try {
            parse_config(text);
        } catch (const InvalidConfig& e) {
            return e.key();
        }
        return std::string("<none>");
    };
    CHECK(key_of("ensemble.p1 = abc\n") == "ensemble.p1");
    CHECK(key_of("no_such_key = 1\n") == "no_such_key");
    CHECK(key_of("mode = sometimes\n") == "mode");
    CHECK(key_of("ensemble.p1 = 1.5\n") == "p1");
    CHECK(key_of("n_trials = -3\n") == "n_trials");
}

TEST_CASE("execution settings do not change the hash") {
    RunConfig a = measured_config();
    RunConfig b = a;
    b.shards = 8;
    b.threads = 3;
    CHECK(config_hash(a) == config_hash(b));
    b.seed += 1;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(is_execution_setting("shards"));
    CHECK_FALSE(is_execution_setting("seed"));
}

TEST_CASE("output header carries version and hash") {
    const RunConfig c = measured_config();
    const std::string h = output_header(c);
    CHECK(h.rfind("# ", 0) == 0);
    CHECK(h.find(kToolVersion) != std::string::npos);
    CHECK(h.find(config_hash(c)) != std::string::npos);
}
