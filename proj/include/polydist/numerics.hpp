#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "polydist/types.hpp"

namespace polydist {

// Neumaier compensated accumulator; keeps long sums honest at 1e-12 scales.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("compensated_mean: empty input");
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value() / double(xs.size());
}

inline double compensated_mean(const ArrayXd& xs) {
    return compensated_mean(std::span<const double>(xs.data(), std::size_t(xs.size())));
}

// Two-pass sample variance (unbiased).
inline double sample_variance(const ArrayXd& xs) {
    if (xs.size() < 2) throw std::invalid_argument("sample_variance: need at least 2 values");
    const double m = compensated_mean(xs);
    CompensatedSum s;
    for (Index i = 0; i < xs.size(); ++i) {
        const double d = xs[i] - m;
        s.add(d * d);
    }
    return s.value() / double(xs.size() - 1);
}

inline double standard_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline double standard_normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// Wilson score interval for a binomial proportion.
struct WilsonInterval {
    double low;
    double high;
};

inline WilsonInterval wilson_interval(std::size_t successes, std::size_t trials,
                                      double z = 1.959963984540054) {
    if (trials == 0) throw std::invalid_argument("wilson_interval: zero trials");
    const double n = double(trials);
    const double phat = double(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Ordinary least squares y = intercept + slope * x.
struct LineFit {
    double slope;
    double intercept;
    double max_abs_residual;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need two or more (x, y) pairs");
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double maxres = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        maxres = std::max(maxres, std::abs(y[i] - intercept - slope * x[i]));
    return {slope, intercept, maxres};
}

// q-quantile of a sorted vector (linear interpolation between order statistics).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty input");
    if (q <= 0) return sorted.front();
    if (q >= 1) return sorted.back();
    const double pos = q * double(sorted.size() - 1);
    const std::size_t lo = std::size_t(pos);
    const double frac = pos - double(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-12, int depth = 48) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Adaptive Simpson over an initial uniform partition; resolves integrands
// whose support is much narrower than [a, b].
template <typename F>
double integrate_panels(const F& f, double a, double b, int panels, double tol = 1e-12) {
    CompensatedSum s;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + (b - a) * double(i) / panels;
        const double hi = a + (b - a) * double(i + 1) / panels;
        s.add(adaptive_simpson(f, lo, hi, tol / panels));
    }
    return s.value();
}

inline long long binomial_coefficient(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    long long r = 1;
    for (int i = 1; i <= k; ++i) {
        // exact while intermediate products fit; desk-scale n keeps us far from overflow
        r = r * (n - k + i) / i;
    }
    return r;
}

}  // namespace polydist
