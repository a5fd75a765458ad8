#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "polydist/coeffs.hpp"
#include "polydist/numerics.hpp"

using namespace polydist;

namespace {

// Independent brute-force reference: flat loops over entries, plain double sums.
namespace oracle {

double norm_m(const CoefficientCollection& a, int m) {
    if (m == 0) return std::abs(a.constant_term());
    double s = 0;
    for (const auto& [key, v] : a.entries())
        if (int(key.size()) == m) s += v * v;
    return std::sqrt(s);
}

double norm_range(const CoefficientCollection& a, int l, int u) {
    double s = 0;
    for (int m = l; m <= u; ++m) {
        const double nm = oracle::norm_m(a, m);
        s += nm * nm;
    }
    return std::sqrt(s);
}

double influence_m(const CoefficientCollection& a, int m) {
    double best = 0;
    for (int n = 1; n <= a.n_max(); ++n) {
        double s = 0;
        for (const auto& [key, v] : a.entries()) {
            if (int(key.size()) != m) continue;
            for (const auto& t : key)
                if (t.n == n) s += v * v;
        }
        best = std::max(best, s);
    }
    return best;
}

double influence_total(const CoefficientCollection& a) {
    double best = 0;
    for (int n = 1; n <= a.n_max(); ++n) {
        double s = 0;
        for (const auto& [key, v] : a.entries())
            for (const auto& t : key)
                if (t.n == n) s += v * v;
        best = std::max(best, s);
    }
    return best;
}

}  // namespace oracle

MonomialKey key1(int n, int k = 1, int j = 1) { return {{n, k, j}}; }
MonomialKey key2(int n1, int n2) { return {{n1, 1, 1}, {n2, 1, 1}}; }

}  // namespace

TEST_CASE("norm_m basics") {
    CoefficientCollection a(2, 1, 1, 4);
    a.set(key2(1, 2), 3.0);
    CHECK(norm_m(a, 2) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(norm_m(a, 1) == 0.0);
    CHECK(norm_m(a, 0) == 0.0);
    CHECK_THROWS_AS((void)norm_m(a, 3), std::out_of_range);

    CoefficientCollection b(1, 1, 1, 5);
    b.set(key1(1), 1.0);
    b.set(key1(3), 2.0);
    b.set(key1(5), 2.0);
    CHECK(norm_m(b, 1) == doctest::Approx(3.0).epsilon(1e-14));

    // uniform spread over C(4,2)=6 pairs, all entries 1 -> sqrt(6)
    CoefficientCollection c(2, 1, 1, 4);
    for (int n1 = 1; n1 <= 4; ++n1)
        for (int n2 = n1 + 1; n2 <= 4; ++n2) c.set(key2(n1, n2), 1.0);
    CHECK(c.entry_count() == 6);
    CHECK(norm_m(c, 2) == doctest::Approx(oracle::norm_m(c, 2)).epsilon(1e-14));
    CHECK(norm_m(c, 2) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-14));
}

TEST_CASE("norm_range basics") {
    CoefficientCollection a(2, 1, 1, 6);
    a.set(key1(1), 3.0);
    a.set(key2(2, 3), 4.0);
    CHECK(norm_range(a, 1, 2) == doctest::Approx(5.0).epsilon(1e-14));  // 3-4-5
    CHECK_THROWS_AS((void)norm_range(a, 2, 1), std::out_of_range);

    CoefficientCollection b(2, 1, 1, 4);
    b.set(key2(1, 2), 0.7);
    b.set(key2(3, 4), -0.1);
    CHECK(norm_range(b, 0, 2) == doctest::Approx(norm_m(b, 2)).epsilon(1e-14));
}

TEST_CASE("influence basics") {
    CoefficientCollection a(2, 1, 1, 4);
    a.set(key2(1, 2), 3.0);
    CHECK(influence_m(a, 2) == doctest::Approx(9.0).epsilon(1e-14));
    CHECK_THROWS_AS((void)influence_m(a, 0), std::out_of_range);

    CoefficientCollection c(2, 1, 1, 4);
    for (int n1 = 1; n1 <= 4; ++n1)
        for (int n2 = n1 + 1; n2 <= 4; ++n2) c.set(key2(n1, n2), 1.0);
    // every n sits in exactly 3 of the 6 pairs
    CHECK(influence_m(c, 2) == doctest::Approx(3.0).epsilon(1e-14));

    CoefficientCollection b(1, 1, 1, 2);
    b.set(key1(1), 1.0);
    b.set(key1(2), 2.0);
    CHECK(influence_m(b, 1) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("influence_total basics") {
    CoefficientCollection a(2, 1, 1, 4);
    a.set(key2(1, 2), 3.0);
    CHECK(influence_total(a) == doctest::Approx(influence_m(a, 2)).epsilon(1e-14));

    CoefficientCollection b(2, 1, 1, 2);
    b.set(key1(1), 1.0);
    b.set(key2(1, 2), 1.0);
    CHECK(influence_total(b) == doctest::Approx(2.0).epsilon(1e-14));  // n=1 collects both

    CoefficientCollection z(2, 1, 1, 4);
    CHECK(influence_total(z) == 0.0);
}

TEST_CASE("key validation") {
    CoefficientCollection a(2, 2, 2, 4);
    CHECK_THROWS(a.set({{2, 1, 1}, {1, 1, 1}}, 1.0));  // unsorted
    CHECK_THROWS(a.set({{1, 1, 1}, {1, 1, 1}}, 1.0));  // repeated n
    CHECK_THROWS(a.set({{5, 1, 1}}, 1.0));             // n > n_max
    CHECK_THROWS(a.set({{1, 3, 1}}, 1.0));             // k > k_star
    CHECK_THROWS(a.set({{1, 1, 3}}, 1.0));             // j > N
    CHECK_THROWS(a.set({{1, 1, 1}, {2, 1, 1}, {3, 1, 1}}, 1.0));  // m > d
    a.set({{1, 2, 2}, {4, 1, 1}}, 0.5);
    CHECK(a.entry_count() == 1);
    a.set({{1, 2, 2}, {4, 1, 1}}, 0.0);  // zero value erases
    CHECK(a.entry_count() == 0);
}

TEST_CASE("gen_uniform_spread") {
    const auto a = gen_uniform_spread(4, 2, 1, 1, 1.0);
    CHECK(a.entry_count() == 6);
    CHECK(norm_m(a, 2) == doctest::Approx(1.0).epsilon(1e-14));
    for (const auto& [key, v] : a.entries()) CHECK(v == doctest::Approx(1.0 / std::sqrt(6.0)));
    CHECK(influence_m(a, 2) == doctest::Approx(0.5).epsilon(1e-13));  // d/n_max = 2/4

    const auto b = gen_uniform_spread(10, 1, 1, 1, 1.0);
    CHECK(influence_m(b, 1) == doctest::Approx(0.1).epsilon(1e-13));

    const auto c = gen_uniform_spread(3, 3, 1, 1, 0.7);
    CHECK(c.entry_count() == 1);
    CHECK(influence_m(c, 3) == doctest::Approx(0.49).epsilon(1e-13));

    CHECK_THROWS_AS((void)gen_uniform_spread(2, 3, 1, 1, 1.0), std::out_of_range);

    // exact rational identity: influence_m(a,d) * n_max == d * norm_m(a,d)^2,
    // backed by the integer identity C(n-1,d-1) * n == C(n,d) * d
    for (int n = 2; n <= 12; ++n) {
        for (int d = 1; d <= std::min(n, 4); ++d) {
            CHECK(binomial_coefficient(n - 1, d - 1) * n == binomial_coefficient(n, d) * d);
            const auto u = gen_uniform_spread(n, d, 1, 1, 1.0);
            const double lhs = influence_m(u, d) * n;
            const double rhs = d * norm_m(u, d) * norm_m(u, d);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
        }
    }
}

TEST_CASE("gen_sparse_random") {
    const auto a = gen_sparse_random(3, 1, 1, 1, 1.0, 99);
    CHECK(a.entry_count() == 3);

    const auto b1 = gen_sparse_random(12, 3, 2, 2, 0.25, 123);
    const auto b2 = gen_sparse_random(12, 3, 2, 2, 0.25, 123);
    CHECK(b1.entries() == b2.entries());
    const auto b3 = gen_sparse_random(12, 3, 2, 2, 0.25, 124);
    CHECK(b1.entries() != b3.entries());

    // degree-2 layer count within the 99% binomial band around 0.5*C(20,2)
    const auto c = gen_sparse_random(20, 2, 1, 1, 0.5, 7);
    int deg2 = 0;
    for (const auto& [key, v] : c.entries()) deg2 += key.size() == 2;
    const double mean = 0.5 * 190.0;
    const double sd = std::sqrt(190.0 * 0.25);
    CHECK(deg2 >= int(mean - 2.58 * sd));
    CHECK(deg2 <= int(mean + 2.58 * sd) + 1);
}

TEST_CASE("norms and influences agree with brute force on random collections") {
    // (n_max, d, k_star, N, density) picked so collections stay sparse (<= 1e4 entries)
    const struct {
        int n_max, d, k_star, N;
        double density;
    } params[] = {
        {8, 1, 1, 1, 1.0},    {12, 2, 1, 1, 0.5},  {20, 2, 2, 1, 0.2},  {16, 3, 1, 1, 0.1},
        {25, 2, 1, 2, 0.15},  {10, 3, 2, 2, 0.02}, {40, 2, 1, 1, 0.1},  {14, 4, 1, 1, 0.05},
        {30, 1, 3, 3, 0.3},   {9, 2, 2, 2, 0.25},  {50, 2, 1, 1, 0.05}, {11, 3, 1, 2, 0.05},
    };
    int cases = 0;
    std::uint64_t seed = 1;
    for (const auto& prm : params) {
        const int d = prm.d, n_max = prm.n_max, k_star = prm.k_star, N = prm.N;
        auto a = gen_sparse_random(n_max, d, k_star, N, prm.density, seed++);
        a.set_constant_term(double(seed) * 0.25 - 1.0);
        REQUIRE(a.entry_count() <= 10'000);
        for (int m = 0; m <= d; ++m)
            CHECK(norm_m(a, m) == doctest::Approx(oracle::norm_m(a, m)).epsilon(1e-12));
        for (int l = 0; l <= d; ++l)
            for (int u = l; u <= d; ++u)
                CHECK(norm_range(a, l, u) ==
                      doctest::Approx(oracle::norm_range(a, l, u)).epsilon(1e-12));
        for (int m = 1; m <= d; ++m)
            CHECK(influence_m(a, m) == doctest::Approx(oracle::influence_m(a, m)).epsilon(1e-12));
        CHECK(influence_total(a) == doctest::Approx(oracle::influence_total(a)).epsilon(1e-12));

        // layer decomposition and influence/norm dominance
        double sumsq = 0;
        for (int m = 0; m <= d; ++m) sumsq += norm_m(a, m) * norm_m(a, m);
        CHECK(norm_range(a, 0, d) * norm_range(a, 0, d) ==
              doctest::Approx(sumsq).epsilon(1e-12));
        for (int m = 1; m <= d; ++m)
            CHECK(influence_m(a, m) <= norm_m(a, m) * norm_m(a, m) + 1e-15);
        CHECK(influence_total(a) <=
              norm_range(a, 1, d) * norm_range(a, 1, d) + 1e-15);
        ++cases;
    }
    CHECK(cases == 12);
}

TEST_CASE("serialization round trip is exact") {
    auto a = gen_sparse_random(14, 3, 2, 2, 0.2, 5);
    a.set_constant_term(0.1);
    a.set({{1, 2, 1}, {7, 1, 2}}, 1.0 / 3.0);
    a.set({{2, 1, 1}}, 1e-300);
    std::stringstream ss;
    a.save(ss);
    const auto b = CoefficientCollection::load(ss);
    CHECK(b.degree() == a.degree());
    CHECK(b.k_star() == a.k_star());
    CHECK(b.dim() == a.dim());
    CHECK(b.n_max() == a.n_max());
    CHECK(b.constant_term() == a.constant_term());
    REQUIRE(b.entry_count() == a.entry_count());
    CHECK(b.entries() == a.entries());

    // and the serialized text itself is stable
    std::stringstream ss2;
    b.save(ss2);
    std::stringstream ss3;
    a.save(ss3);
    CHECK(ss2.str() == ss3.str());
}

TEST_CASE("load rejects malformed input") {
    std::stringstream missing("2 1 1 4\n2 1 1 1 2 1 1\n");  // value missing
    CHECK_THROWS(CoefficientCollection::load(missing));
    std::stringstream bad("2 1 1 4\n1 1 1 1 zzz\n");
    CHECK_THROWS(CoefficientCollection::load(bad));
}
