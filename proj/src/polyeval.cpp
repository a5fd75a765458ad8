#include "polydist/polyeval.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "polydist/numerics.hpp"
#include "polydist/rng.hpp"

namespace polydist {

MomentTable MomentTable::from_family(const VectorFamily& family, int n_max, int k_star) {
    MomentTable t;
    for (int n = 1; n <= n_max; ++n)
        for (int j = 1; j <= family.dim(); ++j) {
            const auto m = centered_power_moments(family.law(n, j), k_star);
            for (int k = 1; k <= k_star; ++k) t.set(n, j, k, m[std::size_t(k - 1)]);
        }
    return t;
}

void MomentTable::set(int n, int j, int k, double value) { values_[{n, j, k}] = value; }

double MomentTable::at(int n, int j, int k) const {
    const auto it = values_.find({n, j, k});
    if (it == values_.end())
        throw std::out_of_range("MomentTable: missing moment for (n=" + std::to_string(n) +
                                ", k=" + std::to_string(k) + ", j=" + std::to_string(j) + ")");
    return it->second;
}

namespace {

constexpr Index kEvalBlock = Index(1) << 15;

// Streams draws through in blocks; fill(triple, row0, rows, out) writes the
// per-draw factor column for one (n, k, j).
template <typename Fill>
ArrayXd accumulate_products(const CoefficientCollection& a, Index count, const Fill& fill) {
    ArrayXd out = ArrayXd::Constant(count, a.constant_term());
    std::map<IndexTriple, std::size_t> slots;
    for (const auto& [key, value] : a.entries())
        for (const auto& t : key) slots.try_emplace(t, slots.size());
    std::vector<ArrayXd> cols(slots.size(), ArrayXd(std::min(kEvalBlock, std::max<Index>(count, 1))));
    ArrayXd prod(std::min(kEvalBlock, std::max<Index>(count, 1)));
    for (Index row0 = 0; row0 < count; row0 += kEvalBlock) {
        const Index rows = std::min(kEvalBlock, count - row0);
        for (const auto& [t, s] : slots) fill(t, row0, rows, cols[s]);
        for (const auto& [key, value] : a.entries()) {
            prod.head(rows) = cols[slots.at(key[0])].head(rows);
            for (std::size_t i = 1; i < key.size(); ++i)
                prod.head(rows) *= cols[slots.at(key[i])].head(rows);
            out.segment(row0, rows) += value * prod.head(rows);
        }
    }
    return out;
}

void integer_power_inplace(ArrayXd& out, int k, Index rows) {
    if (k == 1) return;
    const ArrayXd base = out.head(rows);
    for (int i = 1; i < k; ++i) out.head(rows) *= base;
}

}  // namespace

ArrayXd evaluate(const CoefficientCollection& a, const SampleMatrix& x,
                 const MomentTable& moments) {
    if (a.n_max() > x.n_max)
        throw std::invalid_argument("evaluate: collection n_max exceeds sample n_max");
    if (a.dim() != x.N) throw std::invalid_argument("evaluate: dimension mismatch");
    return accumulate_products(
        a, x.count, [&](const IndexTriple& t, Index row0, Index rows, ArrayXd& out) {
            const double mom = moments.at(t.n, t.j, t.k);
            out.head(rows) = x.values.col(x.col(t.n, t.j)).segment(row0, rows);
            integer_power_inplace(out, t.k, rows);
            out.head(rows) -= mom;
        });
}

ArrayXd evaluate_multilinear(const CoefficientCollection& a, const SampleMatrix& x) {
    if (a.dim() != 1 || a.k_star() != 1)
        throw std::invalid_argument("evaluate_multilinear: needs N = k* = 1");
    if (x.N != 1) throw std::invalid_argument("evaluate_multilinear: needs scalar samples");
    if (a.n_max() > x.n_max)
        throw std::invalid_argument("evaluate_multilinear: collection n_max exceeds samples");
    for (const auto& [key, value] : a.entries())
        if (int(key.size()) != a.degree())
            throw std::invalid_argument("evaluate_multilinear: all keys must have size d");
    return accumulate_products(a, x.count,
                               [&](const IndexTriple& t, Index row0, Index rows, ArrayXd& out) {
                                   out.head(rows) =
                                       x.values.col(x.col(t.n, 1)).segment(row0, rows);
                               });
}

ArrayXd evaluate_gaussian_chaos(const CoefficientCollection& a, const ArrayXXd& g) {
    const Index coords = Index(a.dim()) * a.k_star();
    if (g.cols() < Index(a.n_max()) * coords)
        throw std::out_of_range("evaluate_gaussian_chaos: coordinate out of range");
    return accumulate_products(
        a, g.rows(), [&](const IndexTriple& t, Index row0, Index rows, ArrayXd& out) {
            const Index col = Index(t.n - 1) * coords + Index(t.k - 1) * a.dim() + (t.j - 1);
            out.head(rows) = g.col(col).segment(row0, rows);
        });
}

double s0_statistic(const CoefficientCollection& a, const ArrayXd& eps) {
    if (eps.size() < a.n_max())
        throw std::invalid_argument("s0_statistic: eps must cover n <= n_max");
    CompensatedSum s;
    for (const auto& [key, value] : a.entries()) {
        if (int(key.size()) != a.degree()) continue;
        double prod = value * value;
        for (const auto& t : key) prod *= eps[t.n - 1];
        s.add(prod);
    }
    return s.value();
}

double conditional_variance(const CoefficientCollection& a, const std::vector<SplitLaw>& laws,
                            const ArrayXd& eps, const ArrayXd& u_draw, Index v_budget,
                            std::uint64_t seed) {
    if (v_budget < 2) throw std::invalid_argument("conditional_variance: need v_budget >= 2");
    if (a.dim() != 1) throw std::invalid_argument("conditional_variance: needs N = 1");
    if (laws.empty() || (laws.size() != 1 && int(laws.size()) != a.n_max()))
        throw std::invalid_argument("conditional_variance: need one shared law or one per n");
    if (eps.size() < a.n_max() || u_draw.size() < a.n_max())
        throw std::invalid_argument("conditional_variance: eps/u must cover n <= n_max");

    const int n_max = a.n_max();
    MomentTable moments;
    SampleMatrix xm;
    xm.count = v_budget;
    xm.n_max = n_max;
    xm.N = 1;
    xm.values.resize(v_budget, n_max);
    for (int n = 1; n <= n_max; ++n) {
        const SplitLaw& sl = laws[laws.size() == 1 ? 0 : std::size_t(n - 1)];
        const auto mom = centered_power_moments(ScalarLaw::mixture(sl), a.k_star());
        for (int k = 1; k <= a.k_star(); ++k) moments.set(n, 1, k, mom[std::size_t(k - 1)]);
        if (eps[n - 1] > 0.5) {
            const RandomStream vs(seed, substream(kStreamCondVar, std::uint64_t(n)));
            for (Index i = 0; i < v_budget; ++i)
                xm.values(i, n - 1) =
                    sl.alpha * sl.v_law.sample(vs, std::uint64_t(i)) + sl.x0;
        } else {
            xm.values.col(n - 1).setConstant(u_draw[n - 1]);
        }
    }
    const ArrayXd q = evaluate(a, xm, moments);
    return sample_variance(q);
}

}  // namespace polydist
