#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "polydist/rng.hpp"

using namespace polydist;

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Published KAT vectors from the Random123 distribution.
    auto out = Philox4x32::block({0, 0, 0, 0}, 0, 0);
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);

    out = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, 0xffffffffu,
                            0xffffffffu);
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);

    out = Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, 0xa4093822u,
                            0x299f31d0u);
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("streams are pure functions of (seed, stream, counter)") {
    const RandomStream a(42, substream(kStreamSampleX, 3, 1));
    const RandomStream b(42, substream(kStreamSampleX, 3, 1));
    for (std::uint64_t c : {0ull, 1ull, 17ull, 1'000'000ull})
        CHECK(a.uniform(c) == b.uniform(c));

    const RandomStream other(42, substream(kStreamSampleX, 3, 2));
    CHECK(a.uniform(0) != other.uniform(0));
}

TEST_CASE("uniform moments match U[0,1) within CLT bands") {
    const RandomStream s(7, 1);
    const int n = 200'000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform(std::uint64_t(i));
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    // 4-sigma bands: sd(mean) = sqrt(1/12/n)
    CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(var - 1.0 / 12.0) < 4.0 * std::sqrt(1.0 / 180.0 / n));
}

TEST_CASE("normal moments match N(0,1) within CLT bands") {
    const RandomStream s(11, 2);
    const int n = 200'000;
    double sum = 0, sumsq = 0, sum4 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal(std::uint64_t(i));
        sum += z;
        sumsq += z * z;
        sum4 += z * z * z * z;
    }
    CHECK(std::abs(sum / n) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(sumsq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(sum4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));
}
