#include <doctest.h>

#include <cmath>
#include <vector>

#include "polydist/coeffs.hpp"
#include "polydist/numerics.hpp"
#include "polydist/polyeval.hpp"
#include "polydist/randvec.hpp"

using namespace polydist;

namespace {

// Naive reference evaluator: per-draw loop over entries with std::pow.
ArrayXd naive_evaluate(const CoefficientCollection& a, const SampleMatrix& x,
                       const MomentTable& moments) {
    ArrayXd out(x.count);
    for (Index i = 0; i < x.count; ++i) {
        double q = a.constant_term();
        for (const auto& [key, value] : a.entries()) {
            double prod = value;
            for (const auto& t : key)
                prod *= std::pow(x.at(i, t.n, t.j), t.k) - moments.at(t.n, t.j, t.k);
            q += prod;
        }
        out[i] = q;
    }
    return out;
}

ArrayXd naive_multilinear(const CoefficientCollection& a, const SampleMatrix& x) {
    ArrayXd out(x.count);
    for (Index i = 0; i < x.count; ++i) {
        double q = a.constant_term();
        for (const auto& [key, value] : a.entries()) {
            double prod = value;
            for (const auto& t : key) prod *= x.at(i, t.n, 1);
            q += prod;
        }
        out[i] = q;
    }
    return out;
}

SampleMatrix matrix_from(std::initializer_list<double> row) {
    SampleMatrix m;
    m.count = 1;
    m.n_max = int(row.size());
    m.N = 1;
    m.values.resize(1, m.n_max);
    int c = 0;
    for (double v : row) m.values(0, c++) = v;
    return m;
}

}  // namespace

TEST_CASE("evaluate basics") {
    // degree-0 collection is the constant a_0
    CoefficientCollection c0(0, 1, 1, 1);
    c0.set_constant_term(2.5);
    const auto x = matrix_from({0.3});
    MomentTable none;
    const auto q0 = evaluate(c0, x, none);
    CHECK(q0[0] == 2.5);

    // single linear entry: 2 * (0.5 - 0)
    CoefficientCollection c1(1, 1, 1, 1);
    c1.set({{1, 1, 1}}, 2.0);
    MomentTable m;
    m.set(1, 1, 1, 0.0);
    const auto q1 = evaluate(c1, matrix_from({0.5}), m);
    CHECK(q1[0] == doctest::Approx(1.0).epsilon(1e-15));

    // missing moment names the triple
    CoefficientCollection c2(1, 2, 1, 1);
    c2.set({{1, 2, 1}}, 1.0);
    CHECK_THROWS_WITH_AS((void)evaluate(c2, matrix_from({0.5}), m),
                         doctest::Contains("n=1, k=2, j=1"), std::out_of_range);
}

TEST_CASE("evaluate matches the naive oracle on random instances") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const int n_max = 6, d = 3, k_star = 2, N = 2;
        const auto a = [&] {
            auto g = gen_sparse_random(n_max, d, k_star, N, 0.15, seed);
            g.set_constant_term(0.3);
            return g;
        }();
        const VectorFamily fam(N, ScalarLaw::uniform(-1, 1));
        const auto x = sample(fam, n_max, 500, seed + 10);
        const auto moments = MomentTable::from_family(fam, n_max, k_star);
        const ArrayXd fast = evaluate(a, x, moments);
        const ArrayXd slow = naive_evaluate(a, x, moments);
        for (Index i = 0; i < x.count; ++i)
            CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
    }
}

TEST_CASE("evaluate centering: empirical mean near a_0") {
    const int n_max = 8;
    auto a = gen_sparse_random(n_max, 2, 2, 1, 0.4, 5);
    a.set_constant_term(1.25);
    const VectorFamily fam(1, ScalarLaw::uniform(-1, 1));
    const Index n = 200'000;
    const auto x = sample(fam, n_max, n, 77);
    const auto moments = MomentTable::from_family(fam, n_max, 2);
    const ArrayXd q = evaluate(a, x, moments);
    const double mean = compensated_mean(q);
    const double sd = std::sqrt(sample_variance(q) / double(n));
    CHECK(std::abs(mean - 1.25) < 3.0 * sd);
}

TEST_CASE("evaluate_multilinear basics") {
    CoefficientCollection a(2, 1, 1, 2);
    a.set({{1, 1, 1}, {2, 1, 1}}, 1.0);
    const auto q = evaluate_multilinear(a, matrix_from({2.0, 3.0}));
    CHECK(q[0] == doctest::Approx(6.0).epsilon(1e-15));

    // all X = 1 with uniform-spread entries w: sum = w * C(n, d)
    const auto u = gen_uniform_spread(5, 2, 1, 1, 1.0);
    SampleMatrix ones;
    ones.count = 3;
    ones.n_max = 5;
    ones.N = 1;
    ones.values = ArrayXXd::Ones(3, 5);
    const auto qs = evaluate_multilinear(u, ones);
    const double w = 1.0 / std::sqrt(10.0);
    CHECK(qs[0] == doctest::Approx(w * 10.0).epsilon(1e-13));

    // mixed-degree collections are rejected
    CoefficientCollection bad(2, 1, 1, 3);
    bad.set({{1, 1, 1}, {2, 1, 1}}, 1.0);
    bad.set({{3, 1, 1}}, 1.0);
    CHECK_THROWS_AS((void)evaluate_multilinear(bad, matrix_from({1, 1, 1})),
                    std::invalid_argument);
}

TEST_CASE("evaluate_multilinear matches the naive subset oracle") {
    for (std::uint64_t seed : {4ull, 5ull}) {
        const auto a = gen_sparse_random(9, 3, 1, 1, 0.4, seed);
        CoefficientCollection top(3, 1, 1, 9);
        for (const auto& [key, value] : a.entries())
            if (key.size() == 3) top.set(key, value);
        const VectorFamily fam(1, ScalarLaw::uniform(-1, 1));
        const auto x = sample(fam, 9, 400, seed);
        const ArrayXd fast = evaluate_multilinear(top, x);
        const ArrayXd slow = naive_multilinear(top, x);
        for (Index i = 0; i < x.count; ++i)
            CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
    }
}

TEST_CASE("gaussian chaos evaluation") {
    // coordinate layout: k=2, j=1, N=2 reads block coordinate (2-1)*2 + 1 = 3
    CoefficientCollection a(1, 2, 2, 1);
    a.set({{1, 2, 1}}, 1.0);
    a.set_constant_term(2.0);
    ArrayXXd g(1, 4);
    g << 10, 20, 30, 40;  // block coordinates 1..4 for n = 1
    const auto q = evaluate_gaussian_chaos(a, g);
    CHECK(q[0] == doctest::Approx(2.0 + 30.0).epsilon(1e-15));

    // a_0 only: constant
    CoefficientCollection c0(0, 1, 1, 1);
    c0.set_constant_term(-1.5);
    ArrayXXd g0 = ArrayXXd::Zero(5, 1);
    CHECK((evaluate_gaussian_chaos(c0, g0) == -1.5).all());

    // coordinate out of range
    CoefficientCollection wide(1, 2, 1, 2);
    wide.set({{2, 2, 1}}, 1.0);
    ArrayXXd small = ArrayXXd::Zero(1, 3);
    CHECK_THROWS_AS((void)evaluate_gaussian_chaos(wide, small), std::out_of_range);

    // linear chaos variance equals sum a^2 Var(G)
    const VectorFamily fam(1, ScalarLaw::uniform(-1, 1));
    const auto gc = gaussian_counterpart(fam, 6, 1);
    const auto draws = gc.sample(200'000, 8);
    auto lin = gen_uniform_spread(6, 1, 1, 1, 2.0);
    const ArrayXd s = evaluate_gaussian_chaos(lin, draws);
    const double var = sample_variance(s);
    const double expect = 4.0 / 3.0;  // [a]^2 * Var(uniform)
    CHECK(var == doctest::Approx(expect).epsilon(0.03));
}

TEST_CASE("s0 statistic") {
    CoefficientCollection a(2, 1, 1, 4);
    for (int n1 = 1; n1 <= 4; ++n1)
        for (int n2 = n1 + 1; n2 <= 4; ++n2) a.set({{n1, 1, 1}, {n2, 1, 1}}, 1.0);
    ArrayXd eps(4);
    eps << 1, 1, 0, 0;
    CHECK(s0_statistic(a, eps) == doctest::Approx(1.0).epsilon(1e-14));
    eps.setOnes();
    CHECK(s0_statistic(a, eps) == doctest::Approx(6.0).epsilon(1e-14));  // [a_d]^2
    eps.setZero();
    CHECK(s0_statistic(a, eps) == doctest::Approx(0.0).scale(1));
}

TEST_CASE("conditional variance basics") {
    const SplitLaw unit = split(ScalarLaw::uniform(-1, 1));  // p=1, alpha=1, x0=0

    CoefficientCollection a(1, 1, 1, 1);
    const double c = 1.7;
    a.set({{1, 1, 1}}, c);
    ArrayXd eps(1), u(1);
    eps << 1;
    u << 0;
    const double v = conditional_variance(a, {unit}, eps, u, 40'000, 3);
    CHECK(v == doctest::Approx(c * c / 3.0).epsilon(0.03));

    // eps = 0 freezes everything: variance 0
    eps << 0;
    u << 0.37;
    CHECK(conditional_variance(a, {unit}, eps, u, 100, 3) == doctest::Approx(0.0).scale(1));

    CHECK_THROWS_AS(
        (void)conditional_variance(a, {unit}, eps, u, 1, 3), std::invalid_argument);
}

TEST_CASE("conditional variance lower envelope 3^-d * S0") {
    // multilinear, alpha = 1 mixtures: Var_V[Q] >= (1/3)^d S0(a, eps)
    const SplitLaw mix(0.6, 1.0, 0.0, ScalarLaw::uniform(-1, 1), ScalarLaw::uniform(-1, 1));
    const auto a = gen_uniform_spread(6, 2, 1, 1, 1.0);
    const auto latents = sample_split(std::vector<SplitLaw>(6, mix), 6, 40, 17);
    for (Index draw = 0; draw < 10; ++draw) {
        const ArrayXd eps = latents.eps.row(draw).transpose();
        const ArrayXd u = latents.u.row(draw).transpose();
        const Index budget = 20'000;
        const double var = conditional_variance(a, std::vector<SplitLaw>(6, mix), eps, u,
                                                budget, 100 + std::uint64_t(draw));
        const double s0 = s0_statistic(a, eps);
        // generous 3-sigma allowance on the MC variance estimate
        const double sigma = var * std::sqrt(2.0 / double(budget)) + 1e-6;
        CHECK(var >= std::pow(3.0, -2) * s0 - 3.0 * sigma);
    }
}

TEST_CASE("lemma decomposition: Q = S1 + S2 + S3 with V-orthogonality") {
    // k* = 2, mixture with p < 1; freeze one (eps, U) draw and resample V
    const int n_max = 4, d = 2, k_star = 2;
    const SplitLaw mix(0.6, 1.0, 0.0, ScalarLaw::uniform(-1, 1), ScalarLaw::uniform(-0.5, 1.5));
    auto a = gen_sparse_random(n_max, d, k_star, 1, 0.6, 21);
    a.set_constant_term(0.4);

    const auto latents = sample_split(std::vector<SplitLaw>(std::size_t(n_max), mix), n_max, 8, 23);
    const ArrayXd eps = latents.eps.row(3).transpose();
    const ArrayXd u = latents.u.row(3).transpose();

    const ScalarLaw x_law = ScalarLaw::mixture(mix);
    const ScalarLaw v_law = ScalarLaw::uniform(-1, 1);

    const Index budget = 60'000;
    const RandomStream vs(91, 17);
    ArrayXXd vmat(budget, n_max);
    for (int n = 0; n < n_max; ++n)
        for (Index i = 0; i < budget; ++i)
            vmat(i, n) = v_law.sample(RandomStream(91, substream(17, std::uint64_t(n))),
                                      std::uint64_t(i));

    // E[X^k] and E[V^k]
    std::vector<double> ex(std::size_t(k_star) + 1, 1.0), ev(std::size_t(k_star) + 1, 1.0);
    for (int k = 1; k <= k_star; ++k) {
        ex[std::size_t(k)] = x_law.raw_moment(k);
        ev[std::size_t(k)] = v_law.raw_moment(k);
    }
    const auto ubar = [&](int n, int k) {
        const double e = eps[n - 1];
        return (1.0 - e) * std::pow(u[n - 1], k) + e * ev[std::size_t(k)] - ex[std::size_t(k)];
    };

    ArrayXd q(budget), s1(budget), s3(budget);
    double s2 = a.constant_term();
    for (const auto& [key, value] : a.entries()) {
        double prod = value;
        for (const auto& t : key) prod *= ubar(t.n, t.k);
        s2 += prod;
    }
    for (Index i = 0; i < budget; ++i) {
        double qv = a.constant_term(), s1v = 0;
        for (const auto& [key, value] : a.entries()) {
            double prod = value, top = value;
            for (const auto& t : key) {
                const double centered_v = std::pow(vmat(i, t.n - 1), t.k) - ev[std::size_t(t.k)];
                const double x = eps[t.n - 1] > 0.5 ? vmat(i, t.n - 1) : u[t.n - 1];
                prod *= std::pow(x, t.k) - ex[std::size_t(t.k)];
                top *= eps[t.n - 1] * centered_v;
            }
            qv += prod;
            if (int(key.size()) == d) s1v += top;
        }
        q[i] = qv;
        s1[i] = s1v;
        s3[i] = qv - s1v - s2;
    }

    const double n = double(budget);
    const auto band = [&](const ArrayXd& z) { return 4.0 * std::sqrt(sample_variance(z) / n); };
    CHECK(std::abs(compensated_mean(s1)) < band(s1) + 1e-12);   // E_V S1 = 0
    CHECK(std::abs(compensated_mean(s3)) < band(s3) + 1e-12);   // E_V S3 = 0
    const ArrayXd cross = s1 * s3;
    CHECK(std::abs(compensated_mean(cross)) < band(cross) + 1e-12);  // orthogonality

    // D_V[Q] = E_V[S1^2] + E_V[S3^2]
    const double var_q = sample_variance(q);
    const ArrayXd sum_sq = s1 * s1 + s3 * s3;
    const double rhs = compensated_mean(sum_sq);
    CHECK(var_q == doctest::Approx(rhs).epsilon(4.0 * std::sqrt(2.0 / n) +
                                                4.0 * std::sqrt(sample_variance(sum_sq) / n) /
                                                    std::max(rhs, 1e-12)));
}

TEST_CASE("multilinear variance identity and Thm 2.5 lower bound") {
    // Var(Q_d(a, V)) = (1/3)^d [a]^2 for multilinear a in uniform V
    const auto a = gen_uniform_spread(6, 2, 1, 1, 1.0);
    const VectorFamily fam(1, ScalarLaw::uniform(-1, 1));
    const Index n = 400'000;
    const auto x = sample(fam, 6, n, 31);
    const ArrayXd q = evaluate_multilinear(a, x);
    const double var = sample_variance(q);
    const double expect = 1.0 / 9.0;
    CHECK(var == doctest::Approx(expect).epsilon(3.0 * std::sqrt(30.0 / double(n))));

    // E[Q^2] >= (1/3)^d [a]^2 - 3 sigma (variance lower bound with alpha = 1/3)
    const ArrayXd q2 = q * q;
    const double mean_q2 = compensated_mean(q2);
    const double sigma = std::sqrt(sample_variance(q2) / double(n));
    CHECK(mean_q2 >= std::pow(1.0 / 3.0, 2) * 1.0 - 3.0 * sigma);
}
