#include "polydist/bounds.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "polydist/metrics.hpp"
#include "polydist/numerics.hpp"
#include "polydist/rng.hpp"

namespace polydist {

double BoundReport::recompute_total() const {
    CompensatedSum s;
    for (const auto& t : terms) s.add(t.value);
    return s.value();
}

std::string ConstantsConfig::source_of(const std::string& name) const {
    const auto it = sources.find(name);
    return it == sources.end() ? "default" : it->second;
}

void ConstantsConfig::validate() const {
    const auto pos = [](double v, const char* name) {
        if (!(v > 0)) throw std::invalid_argument(std::string("ConstantsConfig: ") + name +
                                                  " must be positive");
    };
    pos(C_d, "C_d");
    pos(C_dd, "C_dd");
    pos(C_shape, "C_shape");
    pos(c_shape, "c_shape");
    pos(C1_cf, "C1_cf");
    pos(c_cf, "c_cf");
    if (alpha_override) pos(*alpha_override, "alpha_override");
    if (p_vec && (!(*p_vec > 0) || *p_vec > 1))
        throw std::invalid_argument("ConstantsConfig: p_vec must be in (0, 1]");
}

CoeffStats coeff_stats(const CoefficientCollection& a) {
    CoeffStats s;
    s.d = a.degree();
    s.norm_total = norm_range(a, 0, a.degree());
    s.norm_top = norm_m(a, a.degree());
    s.delta_total = influence_total(a);
    s.delta_top = a.degree() >= 1 ? influence_m(a, a.degree()) : 0.0;
    return s;
}

LevelStats level_stats(const CoefficientCollection& a, int l) {
    if (l < 1 || l >= a.degree())
        throw std::out_of_range("level_stats: need 1 <= l < d");
    LevelStats s;
    s.l = l;
    s.d = a.degree();
    s.norm_l = norm_m(a, l);
    s.delta_l = influence_m(a, l);
    s.norm_tail = norm_range(a, l + 1, a.degree());
    return s;
}

namespace {

void require_single_layer(const CoefficientCollection& c, const char* who) {
    if (c.degree() < 1) throw std::invalid_argument(std::string(who) + ": needs degree >= 1");
    for (const auto& [key, value] : c.entries())
        if (int(key.size()) != c.degree())
            throw std::invalid_argument(std::string(who) +
                                        ": coefficient table must be a single top layer");
}

// tail = exp(-num/den) with the den = 0 limit handled as 0
double safe_exp_ratio(double num, double den) {
    if (den <= 0.0) return num > 0.0 ? 0.0 : 1.0;
    return std::exp(-num / den);
}

}  // namespace

double bound_bernoulli_tail(const CoefficientCollection& c, double p, double theta) {
    require_single_layer(c, "bound_bernoulli_tail");
    if (!(p > 0) || p > 1) throw std::invalid_argument("bound_bernoulli_tail: p in (0, 1]");
    const int d = c.degree();
    const double norm_sq = norm_m(c, d) * norm_m(c, d);
    if (!(norm_sq > 0)) throw std::invalid_argument("bound_bernoulli_tail: [c] must be positive");
    const double upper = std::pow(p / 2.0, d) * norm_sq;
    if (!(theta > 0) || !(theta < upper))
        throw std::out_of_range("bound_bernoulli_tail: theta outside (0, (p/2)^d [c]^2)");
    const double delta = influence_m(c, d);
    return 6.0 * d * std::exp(-theta * theta / (delta * norm_sq));
}

double exact_bernoulli_tail(const CoefficientCollection& c, double p, double theta) {
    require_single_layer(c, "exact_bernoulli_tail");
    if (!(p > 0) || p > 1) throw std::invalid_argument("exact_bernoulli_tail: p in (0, 1]");
    const int n = c.n_max();
    if (n > 24)
        throw std::invalid_argument(
            "exact_bernoulli_tail: n > 24; use mc_bernoulli_tail for large n");
    const double norm_sq = norm_m(c, c.degree()) * norm_m(c, c.degree());
    if (theta >= norm_sq) return 1.0;  // Phi <= [c]^2 surely
    if (theta < 0.0) return 0.0;       // Phi is a sum of squares

    if (p == 1.0) {
        // eps is surely all ones: Phi = [c]^2 > theta here
        return 0.0;
    }

    // per-bit tuple lists; each tuple tracks how many of its members are off
    struct Tuple {
        double value_sq;
        int missing;
    };
    std::vector<Tuple> tuples;
    tuples.reserve(c.entry_count());
    std::vector<std::vector<std::size_t>> by_bit(static_cast<std::size_t>(n));
    for (const auto& [key, value] : c.entries()) {
        const std::size_t id = tuples.size();
        tuples.push_back({value * value, int(key.size())});
        for (const auto& t : key) by_bit[std::size_t(t.n - 1)].push_back(id);
    }

    std::vector<double> pw(std::size_t(n) + 1);
    for (int w = 0; w <= n; ++w)
        pw[std::size_t(w)] = std::pow(p, w) * std::pow(1.0 - p, n - w);

    CompensatedSum phi;   // current Phi(eps)
    CompensatedSum prob;  // accumulated probability of {Phi <= theta}
    int weight = 0;
    std::uint32_t state = 0;
    prob.add(pw[0]);  // all-zero state: Phi = 0 <= theta

    const std::uint64_t total = std::uint64_t(1) << n;
    for (std::uint64_t i = 1; i < total; ++i) {
        const int b = std::countr_zero(i);
        const std::uint32_t mask = std::uint32_t(1) << b;
        const bool turning_on = !(state & mask);
        state ^= mask;
        if (turning_on) {
            ++weight;
            for (std::size_t id : by_bit[std::size_t(b)])
                if (--tuples[id].missing == 0) phi.add(tuples[id].value_sq);
        } else {
            --weight;
            for (std::size_t id : by_bit[std::size_t(b)])
                if (tuples[id].missing++ == 0) phi.add(-tuples[id].value_sq);
        }
        if (phi.value() <= theta) prob.add(pw[std::size_t(weight)]);
    }
    return std::min(1.0, prob.value());
}

McTail mc_bernoulli_tail(const CoefficientCollection& c, double p, double theta, Index draws,
                         std::uint64_t seed) {
    require_single_layer(c, "mc_bernoulli_tail");
    if (draws < 10'000) throw std::invalid_argument("mc_bernoulli_tail: need draws >= 1e4");
    if (!(p > 0) || p > 1) throw std::invalid_argument("mc_bernoulli_tail: p in (0, 1]");
    const int n = c.n_max();
    const RandomStream bits(seed, substream(kStreamMcTail));
    std::vector<char> eps(static_cast<std::size_t>(n));
    std::size_t hits = 0;
    for (Index i = 0; i < draws; ++i) {
        for (int b = 0; b < n; ++b)
            eps[std::size_t(b)] =
                bits.uniform(std::uint64_t(i) * std::uint64_t(n) + std::uint64_t(b)) < p;
        double phi = 0;
        for (const auto& [key, value] : c.entries()) {
            double prod = value * value;
            for (const auto& t : key)
                if (!eps[std::size_t(t.n - 1)]) {
                    prod = 0;
                    break;
                }
            phi += prod;
        }
        if (phi <= theta) ++hits;
    }
    const auto ci = wilson_interval(hits, std::size_t(draws));
    return {double(hits) / double(draws), ci.low, ci.high, draws};
}

L1Tail bound_L1_tail(const CoefficientCollection& a, double p, double alpha) {
    if (!(p > 0) || p > 1) throw std::invalid_argument("bound_L1_tail: p in (0, 1]");
    if (!(alpha > 0)) throw std::invalid_argument("bound_L1_tail: alpha > 0");
    const int d = a.degree();
    const double norm_top = norm_m(a, d);
    if (!(norm_top > 0)) throw std::invalid_argument("bound_L1_tail: degree-d layer empty");
    const double delta_top = influence_m(a, d);
    const double half_p = p / 2.0;
    L1Tail out;
    out.threshold = 0.5 * std::pow(alpha, d) * std::pow(half_p, d) * norm_top * norm_top;
    out.tail = 6.0 * d *
               safe_exp_ratio(0.25 * std::pow(half_p, 2 * d) * norm_top * norm_top, delta_top);
    return out;
}

BoundReport bound_t1(int k, int d, double alpha, double p, double kappa, const CoeffStats& a,
                     const CoeffStats& b, double dk_value, const ConstantsConfig& constants) {
    if (k < 1 || d < 1) throw std::invalid_argument("bound_t1: need k, d >= 1");
    if (!(kappa > 0)) throw std::invalid_argument("bound_t1: kappa must be positive");
    if (!(alpha > 0) || !(p > 0) || p > 1)
        throw std::invalid_argument("bound_t1: need alpha > 0 and p in (0, 1]");
    if (dk_value < 0) throw std::invalid_argument("bound_t1: negative dk value");
    constants.validate();

    const double Ck = smoothing_constant_max(k);
    const double C = 4.0 * Ck +
                     constants.C_d / (alpha * std::sqrt(p)) * std::pow(kappa, -1.0 / d);
    const double expo = 1.0 / (1.0 + double(k) * d);
    const double p2d = std::pow(p, 2 * d);
    const double pow16 = std::pow(16.0, d);

    BoundReport r;
    r.theorem = "T1";
    r.dk_exponent = expo;
    r.terms.push_back({"dk", "C * dk^(1/(1+kd))", C * std::pow(dk_value, expo)});
    r.terms.push_back({"tail_a", "12d exp(-p^2d [a]^2 / (16^d delta(a)))",
                       12.0 * d * safe_exp_ratio(p2d * a.norm_total * a.norm_total,
                                                 pow16 * a.delta_total)});
    r.terms.push_back({"tail_b", "12d exp(-p^2d [b]^2 / (16^d delta(b)))",
                       12.0 * d * safe_exp_ratio(p2d * b.norm_total * b.norm_total,
                                                 pow16 * b.delta_total)});
    r.total = r.recompute_total();
    r.constants_used["C_k"] = {Ck, "derived"};
    r.constants_used["C_d"] = {constants.C_d, constants.source_of("C_d")};
    r.constants_used["C"] = {C, "derived"};
    r.constants_used["alpha"] = {alpha, "parameter"};
    r.constants_used["p"] = {p, "parameter"};
    r.constants_used["kappa"] = {kappa, "parameter"};
    return r;
}

BoundReport bound_t2_shape(int k, int d, int dprime, int k_star, const CoeffStats& a,
                           const CoeffStats& b, double dk_value,
                           const ConstantsConfig& constants) {
    if (k < 1 || d < 1 || dprime < 1 || k_star < 1)
        throw std::invalid_argument("bound_t2_shape: bad orders");
    if (!(a.norm_top > 0) || !(b.norm_top > 0))
        throw std::invalid_argument("bound_t2_shape: top-layer norms must be positive");
    if (dk_value < 0) throw std::invalid_argument("bound_t2_shape: negative dk value");
    constants.validate();

    const int d_star = std::max(d, dprime);
    const double expo = 1.0 / (1.0 + double(d_star) * k * k_star);
    const double prefactor = std::pow(a.norm_top, -1.0 / (double(d) * k_star)) +
                             std::pow(b.norm_top, -1.0 / (double(dprime) * k_star)) + 1.0;

    BoundReport r;
    r.theorem = "T2";
    r.dk_exponent = expo;
    r.terms.push_back({"dk", "C ([a_d]^-1/(dk*) + [b_d']^-1/(d'k*) + 1) dk^(1/(1+d*kk*))",
                       constants.C_shape * prefactor * std::pow(dk_value, expo)});
    r.terms.push_back({"tail_a", "12d exp(-c [a_d]^2/delta(a_d))",
                       12.0 * d * safe_exp_ratio(constants.c_shape * a.norm_top * a.norm_top,
                                                 a.delta_top)});
    r.terms.push_back({"tail_b", "12d' exp(-c [b_d']^2/delta(b_d'))",
                       12.0 * dprime *
                           safe_exp_ratio(constants.c_shape * b.norm_top * b.norm_top,
                                          b.delta_top)});
    r.total = r.recompute_total();
    r.constants_used["C"] = {constants.C_shape, constants.source_of("C_shape")};
    r.constants_used["c"] = {constants.c_shape, constants.source_of("c_shape")};
    return r;
}

BoundReport bound_t3_shape(int k, int d, int dprime, int l, int lprime, int k_star,
                           const LevelStats& a, const LevelStats& b, double dk_value,
                           double M2kstar, const ConstantsConfig& constants) {
    if (l >= d || lprime >= dprime)
        throw std::invalid_argument("bound_t3_shape: need l < d and l' < d'");
    if (l < 1 || lprime < 1 || k < 1 || k_star < 1)
        throw std::invalid_argument("bound_t3_shape: bad orders");
    if (M2kstar < 1.0) throw std::invalid_argument("bound_t3_shape: moment cap M >= 1");
    if (!(a.norm_l > 0) || !(b.norm_l > 0))
        throw std::invalid_argument("bound_t3_shape: level norms must be positive");
    if (dk_value < 0) throw std::invalid_argument("bound_t3_shape: negative dk value");
    constants.validate();

    const int l_star = std::max(l, lprime);
    const double expo = 1.0 / (1.0 + double(l_star) * k * k_star);
    const double prefactor = std::pow(a.norm_l, -1.0 / (double(l) * k_star)) +
                             std::pow(b.norm_l, -1.0 / (double(lprime) * k_star)) + 1.0;
    const double C = constants.C_shape;

    BoundReport r;
    r.theorem = "T3";
    r.dk_exponent = expo;
    r.terms.push_back({"dk", "C pref dk^(1/(1+l*kk*))",
                       C * prefactor * std::pow(dk_value, expo)});
    r.terms.push_back({"trunc_a", "C pref (1+M)^{d/l} [a_{l+1,d}]^{1/(lk*)}",
                       C * prefactor * std::pow(1.0 + M2kstar, double(d) / l) *
                           std::pow(a.norm_tail, 1.0 / (double(l) * k_star))});
    r.terms.push_back({"trunc_b", "C pref (1+M)^{d'/l'} [b_{l'+1,d'}]^{1/(l'k*)}",
                       C * prefactor * std::pow(1.0 + M2kstar, double(dprime) / lprime) *
                           std::pow(b.norm_tail, 1.0 / (double(lprime) * k_star))});
    r.terms.push_back({"tail_a", "36l exp(-c [a_l]^2/delta(a_l))",
                       36.0 * l * safe_exp_ratio(constants.c_shape * a.norm_l * a.norm_l,
                                                 a.delta_l)});
    r.terms.push_back({"tail_b", "36l' exp(-c [b_l']^2/delta(b_l'))",
                       36.0 * lprime *
                           safe_exp_ratio(constants.c_shape * b.norm_l * b.norm_l, b.delta_l)});
    r.total = r.recompute_total();
    r.constants_used["C"] = {C, constants.source_of("C_shape")};
    r.constants_used["c"] = {constants.c_shape, constants.source_of("c_shape")};
    r.constants_used["M_2k*"] = {M2kstar, "parameter"};
    return r;
}

BoundReport bound_invariance_shape(int k_star, int d, const CoeffStats& a,
                                   const ConstantsConfig& constants) {
    if (k_star < 1 || d < 1) throw std::invalid_argument("bound_invariance_shape: bad orders");
    if (!(a.norm_top > 0))
        throw std::invalid_argument("bound_invariance_shape: [a_d] must be positive");
    constants.validate();

    const double expo = 1.0 / (2.0 + 6.0 * double(d) * k_star);
    const double value = constants.C_shape *
                         (std::pow(a.norm_top, -1.0 / (double(d) * k_star)) + 1.0) *
                         (std::pow(a.norm_total, 2.0 / (1.0 + 3.0 * d * k_star)) + 1.0) *
                         std::pow(a.delta_total, expo);

    BoundReport r;
    r.theorem = "T4";
    r.delta_exponent = expo;
    r.terms.push_back(
        {"invariance", "C ([a_d]^-1/(dk*)+1)([a]^{2/(1+3dk*)}+1) delta(a)^{1/(2+6dk*)}", value});
    r.total = r.recompute_total();
    r.constants_used["C"] = {constants.C_shape, constants.source_of("C_shape")};
    return r;
}

double bound_cf(double t, int d, int k_star, const CoeffStats& a,
                const ConstantsConfig& constants) {
    if (t == 0.0) throw std::invalid_argument("bound_cf: t = 0 is vacuous (|CF(0)| = 1)");
    if (d < 1 || k_star < 1) throw std::invalid_argument("bound_cf: bad orders");
    if (!(a.norm_top > 0)) throw std::invalid_argument("bound_cf: [a_d] must be positive");
    constants.validate();
    const double inv = 1.0 / (double(d) * k_star);
    return 2.0 * constants.C1_cf * std::pow(std::abs(t), -inv) * std::pow(a.norm_top, -inv) +
           24.0 * d *
               safe_exp_ratio(constants.c_cf * a.norm_top * a.norm_top, a.delta_top);
}

}  // namespace polydist
