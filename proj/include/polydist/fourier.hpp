#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "polydist/bounds.hpp"
#include "polydist/types.hpp"

namespace polydist {

struct CfCurve {
    ArrayXd t;  // sorted grid
    ArrayXd re;
    ArrayXd im;
    ArrayXd abs;
    ArrayXd stderr_;  // per-point standard error of the complex mean
    Index samples_used = 0;

    double noise_floor() const;  // 3/sqrt(count)
    void save_csv(std::ostream& os) const;  // columns t, re, im, abs, stderr
};

ArrayXd geometric_t_grid(double t_lo, double t_hi, int per_decade);

// default grid: 64 points per decade over [1e-1, 1e3]
inline ArrayXd default_t_grid() { return geometric_t_grid(0.1, 1000.0, 64); }

CfCurve empirical_cf(const ArrayXd& samples, const ArrayXd& t_grid, int threads = 1);

struct DecayFit {
    double K = 0;      // upper-envelope intercept: K t^-beta >= |cf| on the fit set
    double beta = 0;
    int points_used = 0;
    double max_log_residual = 0;  // of the least-squares fit, before the envelope shift
    bool power_law_ok = true;     // residual diagnostic
    bool used_peaks = true;
};

// Least-squares of log|cf| vs log t over the window, on the local maxima of
// |cf| (peak picking); falls back to all usable points when the window has
// too few peaks.  Points at or below the noise floor are excluded.
DecayFit decay_fit(const CfCurve& curve, double t_min, double t_max);

// Least C1 with 2 C1 (t [a_d])^{-1/(d k*)} >= |cf| across the usable window.
double fit_cf_constant(const CfCurve& curve, double t_min, double t_max, int d, int k_star,
                       const CoeffStats& a);

struct CfMargin {
    double t;
    double bound;
    double margin;  // bound - |cf|
    double stderr_;
    bool informative;  // bound <= 1 (above that |CF| <= 1 makes it vacuous)
};

struct CfBoundCheck {
    std::vector<CfMargin> margins;
    double min_margin = 0;
    double min_informative_margin = 0;
    bool has_informative = false;
};

CfBoundCheck cf_bound_check(const CfCurve& curve, int d, int k_star, const CoeffStats& a,
                            const ConstantsConfig& constants);

}  // namespace polydist
