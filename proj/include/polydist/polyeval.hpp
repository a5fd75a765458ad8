#pragma once

#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

#include "polydist/coeffs.hpp"
#include "polydist/randvec.hpp"
#include "polydist/sample_matrix.hpp"
#include "polydist/types.hpp"

namespace polydist {

// Injected expectations E[X_{n,j}^k].  Moments are never computed implicitly
// by the evaluators, so analytic and Monte-Carlo moment sources stay
// interchangeable and auditable.
class MomentTable {
public:
    MomentTable() = default;
    static MomentTable from_family(const VectorFamily& family, int n_max, int k_star);

    void set(int n, int j, int k, double value);
    double at(int n, int j, int k) const;  // throws naming the triple when absent

private:
    std::map<std::tuple<int, int, int>, double> values_;
};

// Q_{d,k*}(a, X) per draw: a_0 + sum over keys of a * prod_i (x^{k_i} - E[x^{k_i}]).
ArrayXd evaluate(const CoefficientCollection& a, const SampleMatrix& x,
                 const MomentTable& moments);

// Uncentered multilinear form of §-three: sum a(n_1..n_d) X_{n_1} ... X_{n_d}
// (single top layer, N = k* = 1).
ArrayXd evaluate_multilinear(const CoefficientCollection& a, const SampleMatrix& x);

// S_d(a, G) on matched Gaussian draws; G column layout (n-1)*N*k* + (k-1)*N + (j-1).
ArrayXd evaluate_gaussian_chaos(const CoefficientCollection& a, const ArrayXXd& g);

// S_0(a, eps) = sum over degree-d keys of a_d^2 * prod_i eps_{n_i}.
double s0_statistic(const CoefficientCollection& a, const ArrayXd& eps);

// Monte-Carlo estimate of Var_V[Q(a, X)] with (eps, U) frozen; X_n is
// eps_n*(alpha*V_n + x0) + (1-eps_n)*u_n and only V is resampled.  The V
// stream depends on (seed, n, draw) only, so paired comparisons share draws.
double conditional_variance(const CoefficientCollection& a, const std::vector<SplitLaw>& laws,
                            const ArrayXd& eps, const ArrayXd& u_draw, Index v_budget,
                            std::uint64_t seed);

}  // namespace polydist
