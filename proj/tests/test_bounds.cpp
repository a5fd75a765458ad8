#include <doctest.h>

#include <cmath>
#include <vector>

#include "polydist/bounds.hpp"
#include "polydist/numerics.hpp"
#include "polydist/polyeval.hpp"
#include "polydist/randvec.hpp"
#include "polydist/rng.hpp"

using namespace polydist;

namespace {

CoefficientCollection all_ones_pairs(int n) {
    CoefficientCollection c(2, 1, 1, n);
    for (int a = 1; a <= n; ++a)
        for (int b = a + 1; b <= n; ++b) c.set({{a, 1, 1}, {b, 1, 1}}, 1.0);
    return c;
}

// Plain re-enumeration of P(Phi(eps) <= theta): loops all states, recomputes
// Phi from scratch.
double brute_tail(const CoefficientCollection& c, double p, double theta) {
    const int n = c.n_max();
    double prob = 0;
    for (std::uint32_t state = 0; state < (1u << n); ++state) {
        double phi = 0;
        for (const auto& [key, value] : c.entries()) {
            double prod = value * value;
            for (const auto& t : key)
                if (!(state & (1u << (t.n - 1)))) {
                    prod = 0;
                    break;
                }
            phi += prod;
        }
        if (phi <= theta) {
            const int w = __builtin_popcount(state);
            prob += std::pow(p, w) * std::pow(1.0 - p, n - w);
        }
    }
    return prob;
}

ConstantsConfig unit_constants() { return {}; }

}  // namespace

TEST_CASE("bound_bernoulli_tail formula and admissibility") {
    const auto c = all_ones_pairs(4);  // [c]^2 = 6, delta = 3
    const double b = bound_bernoulli_tail(c, 0.5, 0.3);
    CHECK(b == doctest::Approx(12.0 * std::exp(-0.09 / 18.0)).epsilon(1e-14));
    CHECK(b == doctest::Approx(11.94).epsilon(1e-3));

    // theta -> 0+ tends to 6d
    CHECK(bound_bernoulli_tail(c, 0.5, 1e-12) == doctest::Approx(12.0).epsilon(1e-10));

    // homogeneity: c -> lambda c, theta -> lambda^2 theta leaves the bound invariant
    const double lambda = 1.7;
    CoefficientCollection cs(2, 1, 1, 4);
    for (const auto& [key, value] : c.entries()) cs.set(key, lambda * value);
    CHECK(bound_bernoulli_tail(cs, 0.5, lambda * lambda * 0.3) ==
          doctest::Approx(b).epsilon(1e-12));

    // admissible interval is (0, (p/2)^d [c]^2) = (0, 0.375)
    CHECK_THROWS_AS((void)bound_bernoulli_tail(c, 0.5, 0.0), std::out_of_range);
    CHECK_THROWS_AS((void)bound_bernoulli_tail(c, 0.5, 0.375), std::out_of_range);
    CHECK_NOTHROW((void)bound_bernoulli_tail(c, 0.5, 0.374));
}

TEST_CASE("exact_bernoulli_tail") {
    const auto c = all_ones_pairs(4);
    // states with at most one active bit have Phi = 0: (1 + 4)/16
    CHECK(exact_bernoulli_tail(c, 0.5, 0.3) == doctest::Approx(0.3125).epsilon(1e-14));
    CHECK(exact_bernoulli_tail(c, 1.0, 0.3) == 0.0);
    CHECK(exact_bernoulli_tail(c, 0.5, 6.0) == 1.0);
    CHECK(exact_bernoulli_tail(c, 0.5, -0.5) == 0.0);

    CoefficientCollection big(1, 1, 1, 25);
    big.set({{25, 1, 1}}, 1.0);
    CHECK_THROWS_WITH_AS((void)exact_bernoulli_tail(big, 0.5, 0.1),
                         doctest::Contains("mc_bernoulli_tail"), std::invalid_argument);
}

TEST_CASE("exact_bernoulli_tail matches brute re-enumeration") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
        const int n = 6 + int(seed % 4);
        const int d = 1 + int(seed % 3);
        auto full = gen_sparse_random(n, d, 1, 1, 0.7, seed);
        CoefficientCollection c(d, 1, 1, n);
        for (const auto& [key, value] : full.entries())
            if (int(key.size()) == d) c.set(key, value);
        if (c.entry_count() == 0) c.set([&] {
            MonomialKey k;
            for (int i = 1; i <= d; ++i) k.push_back({i, 1, 1});
            return k;
        }(), 0.5);
        const double norm_sq = norm_m(c, d) * norm_m(c, d);
        const RandomStream th(seed, 5);
        for (int i = 0; i < 8; ++i) {
            const double theta = th.uniform(std::uint64_t(i)) * 1.2 * norm_sq;
            for (double p : {0.3, 0.8}) {
                CHECK(exact_bernoulli_tail(c, p, theta) ==
                      doctest::Approx(brute_tail(c, p, theta)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("mc_bernoulli_tail") {
    const auto c = all_ones_pairs(4);
    CHECK_THROWS_AS((void)mc_bernoulli_tail(c, 0.5, 0.3, 100, 1), std::invalid_argument);
    const auto mc = mc_bernoulli_tail(c, 0.5, 0.3, 100'000, 1);
    CHECK(mc.ci_low <= 0.3125);
    CHECK(mc.ci_high >= 0.3125);
    CHECK(mc_bernoulli_tail(c, 0.5, 6.0, 10'000, 2).estimate == 1.0);
    const auto again = mc_bernoulli_tail(c, 0.5, 0.3, 100'000, 1);
    CHECK(mc.estimate == again.estimate);
}

TEST_CASE("small-ball dominance on random instances") {
    int pairs = 0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const int n = 8 + int(seed % 5);
        const int d = 1 + int(seed % 3);
        auto full = gen_sparse_random(n, d, 1, 1, 0.6, seed * 11);
        CoefficientCollection c(d, 1, 1, n);
        for (const auto& [key, value] : full.entries())
            if (int(key.size()) == d) c.set(key, value);
        if (c.entry_count() == 0) continue;
        const double norm_sq = norm_m(c, d) * norm_m(c, d);
        for (double p : {0.3, 0.5, 0.8}) {
            const double upper = std::pow(p / 2.0, d) * norm_sq;
            for (int i = 1; i <= 20; ++i) {
                const double theta = upper * double(i) / 21.0;
                const double exact = exact_bernoulli_tail(c, p, theta);
                const double bound = bound_bernoulli_tail(c, p, theta);
                CHECK(exact <= bound + 1e-12);
                ++pairs;
            }
        }
    }
    CHECK(pairs >= 300);
}

TEST_CASE("bound_L1_tail") {
    CoefficientCollection a(1, 1, 1, 1);
    a.set({{1, 1, 1}}, 1.0);  // [a_1] = 1, delta = 1
    const auto t = bound_L1_tail(a, 1.0, 1.0 / 3.0);
    CHECK(t.threshold == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
    CHECK(t.tail == doctest::Approx(6.0 * std::exp(-1.0 / 16.0)).epsilon(1e-14));

    // single tuple: delta = [a]^2 so the tail is 6d exp(-(p/2)^{2d}/4)
    CoefficientCollection s(2, 1, 1, 2);
    s.set({{1, 1, 1}, {2, 1, 1}}, 0.8);
    const auto ts = bound_L1_tail(s, 0.6, 1.0);
    CHECK(ts.tail == doctest::Approx(12.0 * std::exp(-0.25 * std::pow(0.3, 4))).epsilon(1e-13));

    // growing [a]^2 with delta fixed shrinks the tail
    const auto spread10 = gen_uniform_spread(10, 2, 1, 1, 1.0);
    const auto spread40 = gen_uniform_spread(40, 2, 1, 1, 1.0);
    CHECK(bound_L1_tail(spread40, 0.5, 1.0).tail < bound_L1_tail(spread10, 0.5, 1.0).tail);

    CoefficientCollection empty(2, 1, 1, 4);
    CHECK_THROWS(bound_L1_tail(empty, 0.5, 1.0));
}

TEST_CASE("bound_t1 worked example") {
    CoeffStats a{1, 1.0, 1.0, 1.0, 1.0};
    CoeffStats b = a;
    const auto r = bound_t1(1, 1, 1.0, 1.0, 1.0, a, b, 1e-4, unit_constants());
    // C = 4*C_1 + 1 = 5 (C_1 = max(c_0, c_1) = 1)
    CHECK(r.terms.size() == 3);
    CHECK(r.terms[0].value == doctest::Approx(5.0 * 0.01).epsilon(1e-9));
    CHECK(r.terms[1].value == doctest::Approx(12.0 * std::exp(-1.0 / 16.0)).epsilon(1e-12));
    CHECK(r.total == doctest::Approx(0.05 + 24.0 * std::exp(-1.0 / 16.0)).epsilon(1e-9));
    CHECK(r.total == doctest::Approx(0.05 + 22.545).epsilon(1e-4));
    CHECK(r.dk_exponent == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.total == doctest::Approx(r.recompute_total()).epsilon(1e-12));
    CHECK(r.constants_used.at("C_d").source == "default");
    CHECK(r.constants_used.at("C_k").source == "derived");

    // dk = 0 leaves only the exponential terms
    const auto r0 = bound_t1(1, 1, 1.0, 1.0, 1.0, a, b, 0.0, unit_constants());
    CHECK(r0.terms[0].value == 0.0);
    CHECK(r0.total == doctest::Approx(24.0 * std::exp(-1.0 / 16.0)).epsilon(1e-12));
}

TEST_CASE("bound_t1 monotonicity properties") {
    const RandomStream rnd(3, 1);
    for (int i = 0; i < 40; ++i) {
        const int k = 1 + int(rnd.bits(std::uint64_t(4 * i)) % 3);
        const int d = 1 + int(rnd.bits(std::uint64_t(4 * i + 1)) % 3);
        const double dk = rnd.uniform(std::uint64_t(4 * i + 2));
        const double norm = 0.5 + rnd.uniform(std::uint64_t(4 * i + 3));
        CoeffStats a{d, norm, norm, 0.4, 0.4};
        CoeffStats b{d, 1.0, 1.0, 0.3, 0.3};
        const auto c = unit_constants();
        const auto r1 = bound_t1(k, d, 0.5, 0.7, 0.8, a, b, dk, c);
        const auto r2 = bound_t1(k, d, 0.5, 0.7, 0.8, a, b, dk * 1.5 + 1e-6, c);
        CHECK(r2.total >= r1.total);  // nondecreasing in dk
        CoeffStats a_big = a;
        a_big.norm_total *= 1.4;
        const auto r3 = bound_t1(k, d, 0.5, 0.7, 0.8, a_big, b, dk, c);
        CHECK(r3.terms[1].value <= r1.terms[1].value);  // tail shrinks with [a]^2
    }
    CHECK_THROWS(bound_t1(1, 1, 1.0, 1.0, 0.0, CoeffStats{1, 1, 1, 1, 1},
                          CoeffStats{1, 1, 1, 1, 1}, 0.1, unit_constants()));
}

TEST_CASE("bound_t2_shape") {
    CoeffStats a{2, 1.0, 1.0, 0.5, 0.5};
    CoeffStats b{3, 1.0, 1.0, 0.5, 0.5};
    const auto r = bound_t2_shape(3, 2, 3, 1, a, b, 0.01, unit_constants());
    CHECK(r.dk_exponent == doctest::Approx(0.1).epsilon(1e-15));  // 1/(1+3*3*1)

    // doubling dk scales the first term by 2^exponent
    const auto r2 = bound_t2_shape(3, 2, 3, 1, a, b, 0.02, unit_constants());
    CHECK(r2.terms[0].value ==
          doctest::Approx(r.terms[0].value * std::pow(2.0, 0.1)).epsilon(1e-12));

    // dk = 0 with vanishing influence: total -> 0
    CoeffStats tight{2, 1.0, 1.0, 0.0, 0.0};
    const auto r0 = bound_t2_shape(3, 2, 2, 1, tight, tight, 0.0, unit_constants());
    CHECK(r0.total == 0.0);
    CHECK(r.total == doctest::Approx(r.recompute_total()).epsilon(1e-12));
}

TEST_CASE("bound_t3_shape") {
    LevelStats a{1, 2, 1.0, 0.5, 0.0};
    LevelStats b{2, 3, 1.0, 0.5, 0.0};
    const auto r = bound_t3_shape(3, 2, 3, 1, 2, 1, a, b, 0.01, 1.0, unit_constants());
    CHECK(r.dk_exponent == doctest::Approx(1.0 / 7.0).epsilon(1e-15));  // l* = 2

    // zero truncation reduces to the T2 dk term at degrees (l, l'), tails x3
    CoeffStats a2{1, 1.0, 1.0, 0.5, 0.5};
    CoeffStats b2{2, 1.0, 1.0, 0.5, 0.5};
    const auto t2 = bound_t2_shape(3, 1, 2, 1, a2, b2, 0.01, unit_constants());
    CHECK(r.terms[0].value == doctest::Approx(t2.terms[0].value).epsilon(1e-12));
    CHECK(r.terms[1].value == 0.0);
    CHECK(r.terms[2].value == 0.0);
    CHECK(r.terms[3].value == doctest::Approx(3.0 * t2.terms[1].value).epsilon(1e-12));

    // raising the moment cap only grows the truncation terms
    LevelStats at{1, 2, 1.0, 0.5, 0.2};
    LevelStats bt{2, 3, 1.0, 0.5, 0.1};
    const auto rm1 = bound_t3_shape(3, 2, 3, 1, 2, 1, at, bt, 0.01, 1.0, unit_constants());
    const auto rm2 = bound_t3_shape(3, 2, 3, 1, 2, 1, at, bt, 0.01, 2.5, unit_constants());
    CHECK(rm2.terms[0].value == doctest::Approx(rm1.terms[0].value).epsilon(1e-12));
    CHECK(rm2.terms[1].value > rm1.terms[1].value);
    CHECK(rm2.terms[2].value > rm1.terms[2].value);
    CHECK(rm2.terms[3].value == doctest::Approx(rm1.terms[3].value).epsilon(1e-12));

    CHECK_THROWS(bound_t3_shape(3, 2, 3, 2, 2, 1, a, b, 0.01, 1.0, unit_constants()));
}

TEST_CASE("bound_invariance_shape") {
    CoeffStats a{2, 1.0, 1.0, 0.2, 0.2};
    const auto r = bound_invariance_shape(1, 2, a, unit_constants());
    CHECK(r.delta_exponent == doctest::Approx(1.0 / 14.0).epsilon(1e-15));

    CoeffStats half = a;
    half.delta_total *= 0.5;
    const auto rh = bound_invariance_shape(1, 2, half, unit_constants());
    CHECK(rh.total ==
          doctest::Approx(r.total * std::pow(2.0, -1.0 / 14.0)).epsilon(1e-12));

    CoeffStats zero = a;
    zero.delta_total = 0.0;
    CHECK(bound_invariance_shape(1, 2, zero, unit_constants()).total == 0.0);
}

TEST_CASE("bound_cf") {
    CoeffStats a{2, 1.0, 1.0, 0.1, 0.1};
    const double v = bound_cf(100.0, 2, 1, a, unit_constants());
    CHECK(v == doctest::Approx(0.2 + 48.0 * std::exp(-10.0)).epsilon(1e-12));
    CHECK(v == doctest::Approx(0.2021791).epsilon(1e-6));

    // large |t| leaves the tail term only
    CHECK(bound_cf(1e12, 2, 1, a, unit_constants()) ==
          doctest::Approx(48.0 * std::exp(-10.0)).epsilon(1e-5));

    // small |t|: bound exceeds 1 (non-informative there)
    CHECK(bound_cf(1e-6, 2, 1, a, unit_constants()) > 1.0);

    CHECK_THROWS(bound_cf(0.0, 2, 1, a, unit_constants()));
}

TEST_CASE("lemma 4.1 empirical dominance (reduced)") {
    // uniform-V multilinear instances: alpha = 1/3 per-factor variance
    const int n_max = 10, d = 2;
    const double p = 0.5;
    const auto a = gen_uniform_spread(n_max, d, 1, 1, 1.0);
    const SplitLaw mix(p, 1.0, 0.0, ScalarLaw::uniform(-1, 1), ScalarLaw::uniform(-1, 1));
    const auto l1 = bound_L1_tail(a, p, 1.0 / 3.0);

    const Index trials = 2000;
    const auto latents = sample_split(std::vector<SplitLaw>(std::size_t(n_max), mix), n_max,
                                      trials, 33);
    std::size_t below = 0;
    for (Index i = 0; i < trials; ++i) {
        const ArrayXd eps = latents.eps.row(i).transpose();
        const ArrayXd u = latents.u.row(i).transpose();
        const double var = conditional_variance(a, std::vector<SplitLaw>(std::size_t(n_max), mix),
                                                eps, u, 400, 200 + std::uint64_t(i));
        if (var < l1.threshold) ++below;
    }
    const auto ci = wilson_interval(below, std::size_t(trials));
    const double halfwidth = (ci.high - ci.low) / 2.0;
    CHECK(double(below) / double(trials) <= l1.tail + halfwidth);
}

TEST_CASE("constants config validation") {
    ConstantsConfig c;
    CHECK_NOTHROW(c.validate());
    c.C_d = 0.0;
    CHECK_THROWS(c.validate());
    c.C_d = 1.0;
    c.p_vec = 1.5;
    CHECK_THROWS(c.validate());
    c.p_vec = 0.5;
    CHECK_NOTHROW(c.validate());
    CHECK(c.source_of("C_d") == "default");
    c.sources["C_d"] = "calibrated";
    CHECK(c.source_of("C_d") == "calibrated");
}
