#include "polydist/fourier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "polydist/numerics.hpp"
#include "polydist/parallel.hpp"

namespace polydist {

namespace {

void write_double(std::ostream& os, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
}

}  // namespace

double CfCurve::noise_floor() const {
    return samples_used > 0 ? 3.0 / std::sqrt(double(samples_used)) : 0.0;
}

void CfCurve::save_csv(std::ostream& os) const {
    os << "t,re,im,abs,stderr\n";
    for (Index i = 0; i < t.size(); ++i) {
        write_double(os, t[i]);
        os << ',';
        write_double(os, re[i]);
        os << ',';
        write_double(os, im[i]);
        os << ',';
        write_double(os, abs[i]);
        os << ',';
        write_double(os, stderr_[i]);
        os << '\n';
    }
}

ArrayXd geometric_t_grid(double t_lo, double t_hi, int per_decade) {
    if (!(t_lo > 0) || !(t_hi > t_lo) || per_decade < 1)
        throw std::invalid_argument("geometric_t_grid: bad parameters");
    const int points = int(std::ceil(std::log10(t_hi / t_lo) * per_decade)) + 1;
    ArrayXd grid(points);
    for (int i = 0; i < points; ++i)
        grid[i] = std::min(t_hi, t_lo * std::pow(10.0, double(i) / per_decade));
    return grid;
}

CfCurve empirical_cf(const ArrayXd& samples, const ArrayXd& t_grid, int threads) {
    if (samples.size() == 0) throw std::invalid_argument("empirical_cf: empty sample");
    CfCurve c;
    c.t = t_grid;
    c.re.resize(t_grid.size());
    c.im.resize(t_grid.size());
    c.abs.resize(t_grid.size());
    c.stderr_.resize(t_grid.size());
    c.samples_used = samples.size();
    const double n = double(samples.size());
    parallel_for(std::size_t(t_grid.size()), threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t ti = b; ti < e; ++ti) {
            const double t = t_grid[Index(ti)];
            double sc = 0, ss = 0, scc = 0, sss = 0;
            for (Index i = 0; i < samples.size(); ++i) {
                const double a = t * samples[i];
                const double cv = std::cos(a), sv = std::sin(a);
                sc += cv;
                ss += sv;
                scc += cv * cv;
                sss += sv * sv;
            }
            const double mre = sc / n, mim = ss / n;
            const double vre = std::max(0.0, scc / n - mre * mre);
            const double vim = std::max(0.0, sss / n - mim * mim);
            c.re[Index(ti)] = mre;
            c.im[Index(ti)] = mim;
            c.abs[Index(ti)] = std::hypot(mre, mim);
            c.stderr_[Index(ti)] = std::sqrt((vre + vim) / n);
        }
    });
    for (Index i = 0; i < c.t.size(); ++i)
        if (c.abs[i] > 1.0 + 3.0 * c.stderr_[i] + 1e-12)
            throw std::logic_error("empirical_cf: |value| above 1 beyond noise");
    return c;
}

DecayFit decay_fit(const CfCurve& curve, double t_min, double t_max) {
    std::vector<Index> window;
    for (Index i = 0; i < curve.t.size(); ++i)
        if (curve.t[i] >= t_min && curve.t[i] <= t_max) window.push_back(i);
    if (window.size() < 10)
        throw std::invalid_argument("decay_fit: need at least 10 grid points in the window");

    const double floor = curve.noise_floor();
    std::vector<Index> usable;
    for (Index i : window)
        if (curve.abs[i] > floor) usable.push_back(i);
    if (usable.size() < 10 || usable.size() < window.size() / 2)
        throw std::runtime_error(
            "decay_fit: window dominated by the noise floor; increase the sample count");

    // local maxima of |cf| among consecutive usable points
    std::vector<Index> peaks;
    for (std::size_t k = 1; k + 1 < usable.size(); ++k) {
        const double v = curve.abs[usable[k]];
        if (v > curve.abs[usable[k - 1]] && v >= curve.abs[usable[k + 1]]) peaks.push_back(usable[k]);
    }
    const bool use_peaks = peaks.size() >= 10;
    const auto& pts = use_peaks ? peaks : usable;

    std::vector<double> lx, ly;
    lx.reserve(pts.size());
    ly.reserve(pts.size());
    for (Index i : pts) {
        lx.push_back(std::log(curve.t[i]));
        ly.push_back(std::log(curve.abs[i]));
    }
    const auto fit = fit_line(lx, ly);
    DecayFit out;
    out.beta = -fit.slope;
    out.points_used = int(pts.size());
    out.max_log_residual = fit.max_abs_residual;
    out.power_law_ok = fit.max_abs_residual <= 0.25;
    out.used_peaks = use_peaks;
    // shift the intercept up to an upper envelope over the fit set
    double K = 0;
    for (Index i : pts) K = std::max(K, curve.abs[i] * std::pow(curve.t[i], out.beta));
    out.K = K;
    return out;
}

double fit_cf_constant(const CfCurve& curve, double t_min, double t_max, int d, int k_star,
                       const CoeffStats& a) {
    if (d < 1 || k_star < 1) throw std::invalid_argument("fit_cf_constant: bad orders");
    if (!(a.norm_top > 0)) throw std::invalid_argument("fit_cf_constant: [a_d] must be positive");
    const double floor = curve.noise_floor();
    const double inv = 1.0 / (double(d) * k_star);
    double c1 = 0;
    int used = 0;
    for (Index i = 0; i < curve.t.size(); ++i) {
        if (curve.t[i] < t_min || curve.t[i] > t_max || curve.abs[i] <= floor) continue;
        c1 = std::max(c1, 0.5 * curve.abs[i] * std::pow(curve.t[i] * a.norm_top, inv));
        ++used;
    }
    if (used < 3) throw std::runtime_error("fit_cf_constant: too few usable points");
    return c1;
}

CfBoundCheck cf_bound_check(const CfCurve& curve, int d, int k_star, const CoeffStats& a,
                            const ConstantsConfig& constants) {
    CfBoundCheck out;
    out.margins.reserve(std::size_t(curve.t.size()));
    out.min_margin = std::numeric_limits<double>::infinity();
    out.min_informative_margin = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < curve.t.size(); ++i) {
        if (curve.t[i] == 0.0) continue;
        CfMargin m;
        m.t = curve.t[i];
        m.bound = bound_cf(curve.t[i], d, k_star, a, constants);
        m.margin = m.bound - curve.abs[i];
        m.stderr_ = curve.stderr_[i];
        m.informative = m.bound <= 1.0;
        out.min_margin = std::min(out.min_margin, m.margin);
        if (m.informative) {
            out.has_informative = true;
            out.min_informative_margin = std::min(out.min_informative_margin, m.margin);
        }
        out.margins.push_back(m);
    }
    if (!out.has_informative) out.min_informative_margin = 0.0;
    return out;
}

}  // namespace polydist
