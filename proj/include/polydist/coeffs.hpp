#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

namespace polydist {

// One factor (X_{n,j})^k of a monomial: vector index n, power k, coordinate j.
struct IndexTriple {
    int n;
    int k;
    int j;
    friend auto operator<=>(const IndexTriple&, const IndexTriple&) = default;
};

// Monomial key: factors sorted by strictly increasing n.
using MonomialKey = std::vector<IndexTriple>;

// Finitely supported coefficient collection a = (a_0, ..., a_d) over monomial
// keys ((n_1,k_1,j_1), ..., (n_m,k_m,j_m)) with n_1 < ... < n_m.  The degree-0
// term is a plain additive scalar.  Immutable once built (by convention: the
// generators and loaders hand out fully built collections).
class CoefficientCollection {
public:
    CoefficientCollection(int d, int k_star, int N, int n_max);

    int degree() const { return d_; }
    int k_star() const { return k_star_; }
    int dim() const { return N_; }
    int n_max() const { return n_max_; }

    double constant_term() const { return a0_; }
    void set_constant_term(double v) { a0_ = v; }

    // Inserts/overwrites one entry.  Unsorted or repeated-n keys are rejected
    // (the paper's sums run over n_1 < ... < n_m only; silently sorting would
    // double count).  A zero value erases the entry.
    void set(const MonomialKey& key, double value);

    double at(const MonomialKey& key) const;  // 0 when absent
    std::size_t entry_count() const { return entries_.size(); }
    const std::map<MonomialKey, double>& entries() const { return entries_; }

    void save(std::ostream& os) const;
    static CoefficientCollection load(std::istream& is);

private:
    int d_;
    int k_star_;
    int N_;
    int n_max_;
    double a0_ = 0.0;
    std::map<MonomialKey, double> entries_;
};

// [a_m]: l2 norm of the degree-m layer; |a_0| for m = 0.
double norm_m(const CoefficientCollection& a, int m);

// [a_{l,u}] = sqrt(sum_{m=l}^{u} [a_m]^2).
double norm_range(const CoefficientCollection& a, int l, int u);

// delta(a_m): max over n of the summed squared degree-m entries containing n.
double influence_m(const CoefficientCollection& a, int m);

// delta(a): max over n of the summed squared entries over all degrees containing n.
double influence_total(const CoefficientCollection& a);

// All degree-d keys over {1..n_max} with k = j = 1 get the same value, scaled
// so that [a_d] = target_norm; then delta(a_d)/[a_d]^2 = d/n_max exactly.
CoefficientCollection gen_uniform_spread(int n_max, int d, int k_star, int N,
                                         double target_norm);

// Every admissible key (all degrees 1..d, all k <= k_star, j <= N) is included
// independently with probability `density`; values are standard normal draws.
// Deterministic per seed.
CoefficientCollection gen_sparse_random(int n_max, int d, int k_star, int N, double density,
                                        std::uint64_t seed);

}  // namespace polydist
