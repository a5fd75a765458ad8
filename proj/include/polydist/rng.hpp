#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace polydist {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
// A draw is a pure function of (key, counter): no state, so streams can be
// partitioned across workers in any order and still reproduce bit-identically.
struct Philox4x32 {
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    // counter = (c0,c1,c2,c3), key = (k0,k1)
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> x,
                                              std::uint32_t k0, std::uint32_t k1) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t(kMul0) * x[0];
            const std::uint64_t p1 = std::uint64_t(kMul1) * x[2];
            const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
            const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
            x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return x;
    }
};

// 64-bit mixer (splitmix64 finalizer); used to derive substream ids.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t substream(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                               std::uint64_t d = 0) {
    std::uint64_t h = mix64(a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    h = mix64(h ^ d);
    return h;
}

// Stream purposes; combined with (n, j, …) via substream() so every logical
// random source in an experiment has its own counter space.
enum StreamPurpose : std::uint64_t {
    kStreamSampleX = 1,
    kStreamEpsilon = 2,
    kStreamSplitV = 3,
    kStreamSplitU = 4,
    kStreamGauss = 5,
    kStreamSmoothingZ = 6,
    kStreamBootstrap = 7,
    kStreamCondVar = 8,
    kStreamMcTail = 9,
    kStreamCoeffGen = 10,
    kStreamScenario = 11,
};

// One logical random stream: key = (seed, stream id), value = f(counter).
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::array<std::uint32_t, 4> raw(std::uint64_t ctr) const {
        return Philox4x32::block(
            {std::uint32_t(ctr), std::uint32_t(ctr >> 32), std::uint32_t(stream_),
             std::uint32_t(stream_ >> 32)},
            std::uint32_t(seed_), std::uint32_t(seed_ >> 32));
    }

    std::uint64_t bits(std::uint64_t ctr) const {
        const auto w = raw(ctr);
        return (std::uint64_t(w[0]) << 32) | w[1];
    }

    // uniform on [0,1), 53-bit resolution
    double uniform(std::uint64_t ctr) const {
        return double(bits(ctr) >> 11) * 0x1.0p-53;
    }

    // standard normal via Box–Muller; one block per variate
    double normal(std::uint64_t ctr) const {
        const auto w = raw(ctr);
        const std::uint64_t a = (std::uint64_t(w[0]) << 32) | w[1];
        const std::uint64_t b = (std::uint64_t(w[2]) << 32) | w[3];
        const double u1 = (double(a >> 11) + 0.5) * 0x1.0p-53;  // (0,1)
        const double u2 = double(b >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

// Sequential adapter meeting UniformRandomBitGenerator, for the few places a
// std:: distribution is the right tool (e.g. binomial bootstrap resampling).
class SequentialRng {
public:
    using result_type = std::uint64_t;
    explicit SequentialRng(RandomStream s) : stream_(s) {}
    SequentialRng(std::uint64_t seed, std::uint64_t stream) : stream_(seed, stream) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }
    result_type operator()() { return stream_.bits(pos_++); }

private:
    RandomStream stream_;
    std::uint64_t pos_ = 0;
};

}  // namespace polydist
