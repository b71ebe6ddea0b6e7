#include "doctest.h"

#include <cmath>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "condmem/random.hpp"

using namespace condmem;

TEST_CASE("philox4x32-10 reference vectors") {
    // Known-answer vectors of the Random123 distribution (kat_vectors).
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
          PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                        {0xffffffffu, 0xffffffffu}) ==
          PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                        {0xa4093822u, 0x299f31d0u}) ==
          PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams depend only on key, trial and purpose") {
    CounterStream a(7, 123456789, StreamPurpose::readout);
    CounterStream b(7, 123456789, StreamPurpose::readout);
    CounterStream c(7, 123456789, StreamPurpose::herald);
    CounterStream d(8, 123456789, StreamPurpose::readout);
    bool differs_c = false;
    bool differs_d = false;
    for (int i = 0; i < 32; ++i) {
        const auto x = a.next_u32();
        CHECK(x == b.next_u32());
        differs_c |= x != c.next_u32();
        differs_d |= x != d.next_u32();
    }
    CHECK(differs_c);
    CHECK(differs_d);
    CHECK(herald_uniform(7, 99) == CounterStream(7, 99, StreamPurpose::herald).uniform());
}

TEST_CASE("uniform draws pass a chi-square test") {
    constexpr int kBins = 100;
    constexpr int kDraws = 1'000'000;
    std::vector<double> counts(kBins, 0.0);
    CounterStream s(20070601, 0, StreamPurpose::test);
    for (int i = 0; i < kDraws; ++i) {
        const double u = s.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        counts[static_cast<std::size_t>(u * kBins)] += 1.0;
    }
    const double expected = static_cast<double>(kDraws) / kBins;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const boost::math::chi_squared_distribution<double> dist(kBins - 1);
    CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 1e-3);
}

TEST_CASE("normal draws have unit variance") {
    CounterStream s(3, 0, StreamPurpose::test);
    double sum = 0.0;
    double sq = 0.0;
    constexpr int n = 200'000;
    for (int i = 0; i < n; ++i) {
        const double x = s.normal();
        sum += x;
        sq += x * x;
    }
    CHECK(std::abs(sum / n) < 5.0 / std::sqrt(double(n)));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}
