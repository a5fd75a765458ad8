#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "polydist/rng.hpp"
#include "polydist/sample_matrix.hpp"
#include "polydist/types.hpp"

namespace polydist {

struct SplitLaw;

enum class LawKind {
    UniformInterval,
    Gaussian,
    Laplace,
    AtomMixture,
    ExplicitMixture,
    FloorResidual,  // internal: (source density - floor) / (1 - p), built by split()
};

// Scalar law catalog.  Value-semantic and immutable; samplers are pure
// functions of (stream, counter), so concurrent use needs no locking.
class ScalarLaw {
public:
    static ScalarLaw uniform(double lo, double hi);
    static ScalarLaw gaussian(double mean, double sd);
    static ScalarLaw laplace(double loc, double scale);
    static ScalarLaw atoms(std::vector<double> points, std::vector<double> weights);
    static ScalarLaw mixture(SplitLaw split);
    static ScalarLaw floor_residual(const ScalarLaw& source, double omega, double r,
                                    double center, double p);

    LawKind kind() const;
    std::string describe() const;

    bool has_density() const;
    // density where absolutely continuous; nullopt for atomic laws
    std::optional<double> density(double x) const;

    double raw_moment(int k) const;  // E[X^k]
    double mean() const { return raw_moment(1); }
    double variance() const;

    double sample(const RandomStream& stream, std::uint64_t ctr) const;

    const SplitLaw* split_form() const;  // non-null only for ExplicitMixture

private:
    struct Impl;
    explicit ScalarLaw(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

// Witness of the Doeblin condition D(omega, r, R): density >= omega on B_r(center),
// |center| <= R.  Scalar case (N = 1) throughout the constructive catalog.
struct DoeblinWitness {
    double omega;
    double r;
    double R;
    double center;
};

// Constructive representation X = eps*(alpha*V + x0) + (1-eps)*U with
// P(eps = 1) = p and V log-concave (default uniform on [-1,1]).
struct SplitLaw {
    double p;
    double alpha;
    double x0;
    ScalarLaw v_law;
    ScalarLaw u_law;
    bool residual_reachable;  // false when p == 1

    SplitLaw(double p, double alpha, double x0, ScalarLaw v, ScalarLaw u);
    double sample(const RandomStream& stream, std::uint64_t ctr) const;
};

DoeblinWitness certify_doeblin(const ScalarLaw& law);

// p = 2*omega*r, alpha = r, x0 = witness center (§3 recipe); for p = 1 the
// residual is an unreachable point mass.
SplitLaw split(const ScalarLaw& law);

// Independent per-(n, j) scalar laws with a default; every assigned law must
// certify or carry an explicit split.
class VectorFamily {
public:
    VectorFamily(int N, ScalarLaw default_law);
    void assign(int n, int j, ScalarLaw law);
    const ScalarLaw& law(int n, int j) const;
    int dim() const { return N_; }

private:
    static void validate(const ScalarLaw& law);
    int N_;
    ScalarLaw default_;
    std::map<std::pair<int, int>, ScalarLaw> overrides_;
};

// count draws of (X_1, ..., X_{n_max}); column streams are keyed by (n, j) and
// counters by draw index, so any block partition reproduces the same matrix.
SampleMatrix sample(const VectorFamily& family, int n_max, Index count, std::uint64_t seed,
                    Index first_draw = 0, int threads = 1);

struct SplitSample {
    SampleMatrix x;
    ArrayXXd eps;  // count x n_max, values in {0,1}
    ArrayXXd v;    // raw V draws (before alpha*V + x0)
    ArrayXXd u;
};

// Assembled X plus the latent (eps, V, U) streams (N = 1).  `laws` holds either
// one shared SplitLaw or one per n.
SplitSample sample_split(const std::vector<SplitLaw>& laws, int n_max, Index count,
                         std::uint64_t seed, Index first_draw = 0);

// E[X^k] for k = 1..k_star (analytic; these center the polynomial factors).
std::vector<double> centered_power_moments(const ScalarLaw& law, int k_star);

// Matched-covariance Gaussian counterpart of Z_n = (X_{n,j}^k - E X_{n,j}^k),
// coordinate layout (k-1)*N + j.  Covariances are analytic; the sampler uses a
// symmetric square root, so singular covariances are fine.
class GaussianCounterpart {
public:
    GaussianCounterpart(int n_max, int N, int k_star, std::vector<MatrixXd> cov);

    int coords_per_n() const { return N_ * k_star_; }
    int n_max() const { return n_max_; }
    const MatrixXd& covariance(int n) const;

    // count x (n_max * N * k_star); column (n-1)*N*k_star + (k-1)*N + (j-1)
    ArrayXXd sample(Index count, std::uint64_t seed, Index first_draw = 0) const;
    Index col(int n, int k, int j) const {
        return Index(n - 1) * coords_per_n() + Index(k - 1) * N_ + (j - 1);
    }

private:
    int n_max_;
    int N_;
    int k_star_;
    std::vector<MatrixXd> cov_;
    std::vector<MatrixXd> factor_;
};

GaussianCounterpart gaussian_counterpart(const VectorFamily& family, int n_max, int k_star);

}  // namespace polydist
