#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polydist/coeffs.hpp"
#include "polydist/types.hpp"

namespace polydist {

struct TermValue {
    std::string name;
    std::string formula;
    double value;
};

struct ConstantUse {
    double value;
    std::string source;  // paper-explicit | derived | calibrated | default | parameter
};

// Itemized right-hand side of one paper inequality: total is always the plain
// sum of the listed terms, and every constant that entered is recorded.
struct BoundReport {
    std::string theorem;
    std::vector<TermValue> terms;
    double total = 0;
    std::map<std::string, ConstantUse> constants_used;
    double dk_exponent = 0;     // exponent applied to the d_k value (0 when n/a)
    double delta_exponent = 0;  // exponent applied to delta(a) (invariance shape)

    double recompute_total() const;
};

// Home of the paper's existential constants.  Everything defaults to 1; the
// harness records the source tag of every value it feeds in.
struct ConstantsConfig {
    double C_d = 1.0;                      // Thm on shift regularity: C(d)
    double C_dd = 1.0;                     // remark variant: C(d, d')
    std::optional<double> alpha_override;  // variance lower-bound alpha
    double C_shape = 1.0;                  // generic C of the general-case bounds
    double c_shape = 1.0;                  // generic c of the general-case bounds
    double C1_cf = 1.0;                    // CF envelope constant
    double c_cf = 1.0;                     // CF tail constant
    std::optional<double> p_vec;           // split success probability for N > 1
    std::map<std::string, std::string> sources;

    std::string source_of(const std::string& name) const;
    void validate() const;
};

// Norms and influence factors consumed by the bound formulas.
struct CoeffStats {
    int d = 0;
    double norm_total = 0;   // [a]
    double norm_top = 0;     // [a_d]
    double delta_total = 0;  // delta(a)
    double delta_top = 0;    // delta(a_d)
};
CoeffStats coeff_stats(const CoefficientCollection& a);

// Level-l view for the truncated bound.
struct LevelStats {
    int l = 0;
    int d = 0;
    double norm_l = 0;     // [a_l]
    double delta_l = 0;    // delta(a_l)
    double norm_tail = 0;  // [a_{l+1,d}]
};
LevelStats level_stats(const CoefficientCollection& a, int l);

// Small-ball tail bound 6d*exp(-theta^2/(delta(c)*[c]^2)) for the positive
// multilinear Bernoulli form; theta must lie in (0, (p/2)^d [c]^2).
double bound_bernoulli_tail(const CoefficientCollection& c, double p, double theta);

// Exact left-hand side P(Phi(eps) <= theta) by Gray-code enumeration (n <= 24).
double exact_bernoulli_tail(const CoefficientCollection& c, double p, double theta);

struct McTail {
    double estimate;
    double ci_low;   // Wilson 95%
    double ci_high;
    Index draws;
};
McTail mc_bernoulli_tail(const CoefficientCollection& c, double p, double theta, Index draws,
                         std::uint64_t seed);

// Variance-threshold pair of the conditional-variance lemma:
// threshold = alpha^d (p/2)^d [a_d]^2 / 2,  tail = 6d*exp(-(p/2)^{2d}[a_d]^2/(4 delta(a_d))).
struct L1Tail {
    double threshold;
    double tail;
};
L1Tail bound_L1_tail(const CoefficientCollection& a, double p, double alpha);

// N = k* = 1 bound with fully explicit constant C = 4*C_k + (C_d/(alpha sqrt(p))) kappa^{-1/d}.
BoundReport bound_t1(int k, int d, double alpha, double p, double kappa, const CoeffStats& a,
                     const CoeffStats& b, double dk_value, const ConstantsConfig& constants);

// General-case shape with free C, c; d_k exponent 1/(1 + max(d,d')*k*k_star).
BoundReport bound_t2_shape(int k, int d, int dprime, int k_star, const CoeffStats& a,
                           const CoeffStats& b, double dk_value,
                           const ConstantsConfig& constants);

// Truncated shape with the moment cap M_{2k*}; d_k exponent 1/(1 + max(l,l')*k*k_star).
BoundReport bound_t3_shape(int k, int d, int dprime, int l, int lprime, int k_star,
                           const LevelStats& a, const LevelStats& b, double dk_value,
                           double M2kstar, const ConstantsConfig& constants);

// Invariance-principle shape C([a_d]^{-1/(dk*)}+1)([a]^{2/(1+3dk*)}+1) delta(a)^{1/(2+6dk*)}.
BoundReport bound_invariance_shape(int k_star, int d, const CoeffStats& a,
                                   const ConstantsConfig& constants);

// CF envelope 2 C1 |t|^{-1/(dk*)} [a_d]^{-1/(dk*)} + 24d exp(-c [a_d]^2/delta(a_d)).
double bound_cf(double t, int d, int k_star, const CoeffStats& a,
                const ConstantsConfig& constants);

}  // namespace polydist
