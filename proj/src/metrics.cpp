#include "polydist/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "polydist/numerics.hpp"
#include "polydist/parallel.hpp"
#include "polydist/rng.hpp"

namespace polydist {

namespace {

std::vector<std::int64_t> bin_counts(const ArrayXd& x, const HistogramGrid& g) {
    std::vector<std::int64_t> c(std::size_t(g.bins), 0);
    for (Index i = 0; i < x.size(); ++i) ++c[std::size_t(g.index(x[i]))];
    return c;
}

HistogramGrid plan_grid(const ArrayXd& x, const ArrayXd& y, const TvOptions& opts,
                        std::string* rule) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Index i = 0; i < x.size(); ++i) {
        lo = std::min(lo, x[i]);
        hi = std::max(hi, x[i]);
    }
    for (Index i = 0; i < y.size(); ++i) {
        lo = std::min(lo, y[i]);
        hi = std::max(hi, y[i]);
    }
    const double span = hi - lo;
    HistogramGrid g;
    g.lo = lo;
    if (!(span > 0)) {
        g.bins = 1;
        g.width = 1;
        if (rule) *rule = "degenerate";
        return g;
    }
    int bins;
    if (opts.bins_override > 0) {
        bins = opts.bins_override;
        if (rule) *rule = "override";
    } else {
        // Freedman-Diaconis on the pooled sample, floored and capped
        std::vector<double> pooled;
        pooled.reserve(std::size_t(x.size() + y.size()));
        pooled.insert(pooled.end(), x.data(), x.data() + x.size());
        pooled.insert(pooled.end(), y.data(), y.data() + y.size());
        std::sort(pooled.begin(), pooled.end());
        const double iqr = quantile_sorted(pooled, 0.75) - quantile_sorted(pooled, 0.25);
        const double h = 2.0 * iqr / std::cbrt(double(pooled.size()));
        bins = h > 0 ? int(std::ceil(span / h)) : opts.max_bins;
        bins = std::clamp(bins, opts.min_bins, opts.max_bins);
        if (rule) *rule = "fd";
    }
    g.bins = bins;
    g.width = span / double(bins);
    return g;
}

}  // namespace

double tv_from_counts(const std::vector<std::int64_t>& cx, const std::vector<std::int64_t>& cy) {
    if (cx.size() != cy.size()) throw std::invalid_argument("tv_from_counts: size mismatch");
    std::int64_t nx = 0, ny = 0;
    for (auto c : cx) nx += c;
    for (auto c : cy) ny += c;
    if (nx == 0 || ny == 0) throw std::invalid_argument("tv_from_counts: empty sample");
    double s = 0;
    for (std::size_t i = 0; i < cx.size(); ++i)
        s += std::abs(double(cx[i]) / double(nx) - double(cy[i]) / double(ny));
    return 0.5 * s;
}

DistanceEstimate tv_distance(const ArrayXd& x, const ArrayXd& y, const TvOptions& opts) {
    if (x.size() == 0 || y.size() == 0)
        throw std::invalid_argument("tv_distance: empty sample set");
    std::string rule;
    const HistogramGrid g = plan_grid(x, y, opts, &rule);
    const auto cx = bin_counts(x, g);
    const auto cy = bin_counts(y, g);

    DistanceEstimate est;
    est.value = tv_from_counts(cx, cy);
    est.samples_x = x.size();
    est.samples_y = y.size();
    est.bins = g.bins;
    est.low_sample_warning = std::min(x.size(), y.size()) < 1000;
    est.method = "hist-l1(" + rule + ",bins=" + std::to_string(g.bins) +
                 ",boot=" + std::to_string(opts.bootstrap) + ")";

    if (opts.bootstrap > 0) {
        // multinomial resampling of the bin masses == binning a data resample
        std::vector<double> boots(std::size_t(opts.bootstrap));
        parallel_for(std::size_t(opts.bootstrap), opts.threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t r = b; r < e; ++r) {
                SequentialRng rng(opts.seed, substream(kStreamBootstrap, r));
                auto resample = [&rng](const std::vector<std::int64_t>& counts,
                                       std::int64_t total) {
                    std::vector<std::int64_t> out(counts.size(), 0);
                    std::int64_t left = total;
                    double mass = 1.0;
                    for (std::size_t i = 0; i + 1 < counts.size() && left > 0; ++i) {
                        const double p = double(counts[i]) / double(total);
                        const double cond = mass > 0 ? std::min(1.0, p / mass) : 0.0;
                        std::binomial_distribution<std::int64_t> bin(left, cond);
                        const std::int64_t take = bin(rng);
                        out[i] = take;
                        left -= take;
                        mass -= p;
                    }
                    out.back() = left;
                    return out;
                };
                std::int64_t nx = 0, ny = 0;
                for (auto c : cx) nx += c;
                for (auto c : cy) ny += c;
                boots[r] = tv_from_counts(resample(cx, nx), resample(cy, ny));
            }
        });
        std::vector<double> sorted = boots;
        std::sort(sorted.begin(), sorted.end());
        double mean = 0;
        for (double b : boots) mean += b;
        mean /= double(boots.size());
        double var = 0;
        for (double b : boots) var += (b - mean) * (b - mean);
        var /= double(boots.size() > 1 ? boots.size() - 1 : 1);
        est.stderr_val = std::sqrt(var);
        // percentile interval centered on the point estimate, clamped to keep
        // ci_low <= value <= ci_high and the [0, 1] range
        const double shift = est.value - mean;
        est.ci_low = std::min(est.value,
                              std::max(0.0, quantile_sorted(sorted, 0.025) + shift));
        est.ci_high = std::max(est.value,
                               std::min(1.0, quantile_sorted(sorted, 0.975) + shift));
    } else {
        est.ci_low = est.ci_high = est.value;
    }
    return est;
}

double tv_gaussian_shift(double h) {
    return 2.0 * standard_normal_cdf(std::abs(h) / 2.0) - 1.0;
}

double tv_shifted_stream(const std::function<double(std::uint64_t)>& gen, Index count, double h,
                         double lo, double hi, int bins, int threads) {
    if (count <= 0) throw std::invalid_argument("tv_shifted_stream: empty stream");
    if (!(hi > lo) || bins < 1) throw std::invalid_argument("tv_shifted_stream: bad grid");
    HistogramGrid g;
    g.lo = lo;
    g.bins = bins;
    g.width = (hi - lo) / double(bins);
    const int nthreads = resolve_threads(threads);
    std::vector<std::vector<std::int64_t>> px(static_cast<std::size_t>(nthreads));
    std::vector<std::vector<std::int64_t>> py(static_cast<std::size_t>(nthreads));
    std::atomic<int> slot{0};
    parallel_for(std::size_t(count), nthreads, [&](std::size_t b, std::size_t e) {
        const int my = slot.fetch_add(1);
        auto& cx = px[std::size_t(my)];
        auto& cy = py[std::size_t(my)];
        cx.assign(std::size_t(bins), 0);
        cy.assign(std::size_t(bins), 0);
        for (std::size_t i = b; i < e; ++i) {
            const double v = gen(i);
            ++cx[std::size_t(g.index(v))];
            ++cy[std::size_t(g.index(v + h))];
        }
    });
    std::vector<std::int64_t> cx(std::size_t(bins), 0), cy(std::size_t(bins), 0);
    for (int t = 0; t < nthreads; ++t) {
        if (px[std::size_t(t)].empty()) continue;
        for (int i = 0; i < bins; ++i) {
            cx[std::size_t(i)] += px[std::size_t(t)][std::size_t(i)];
            cy[std::size_t(i)] += py[std::size_t(t)][std::size_t(i)];
        }
    }
    return tv_from_counts(cx, cy);
}

double shift_modulus(const ArrayXd& x, double s, const std::vector<double>& h_grid,
                     const TvOptions& opts) {
    if (s == 0.0) return 0.0;
    if (h_grid.empty()) throw std::invalid_argument("shift_modulus: empty grid");
    bool has_pos = false, has_neg = false;
    for (double h : h_grid) {
        if (std::abs(h) > std::abs(s) + 1e-15)
            throw std::invalid_argument("shift_modulus: grid point outside [-s, s]");
        has_pos = has_pos || std::abs(h - s) <= 1e-15 * std::max(1.0, std::abs(s));
        has_neg = has_neg || std::abs(h + s) <= 1e-15 * std::max(1.0, std::abs(s));
    }
    if (!has_pos || !has_neg)
        throw std::invalid_argument("shift_modulus: grid must include -s and +s");
    double best = 0;
    TvOptions o = opts;
    o.bootstrap = 0;  // the sup over shifts reports a plain value
    for (double h : h_grid) {
        if (h == 0.0) continue;
        const ArrayXd shifted = x + h;
        best = std::max(best, tv_distance(x, shifted, o).value);
    }
    return best;
}

double hermite_he(int k, double x) {
    if (k == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int i = 2; i <= k; ++i) {
        const double next = x * cur - double(i - 1) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

// --- test-function dictionary ---------------------------------------------

namespace {

constexpr double kCertTol = 1e-9;

double scan_sup(const std::function<double(double, int)>& deriv, int order, double lo,
                double hi) {
    const int grid = 4001;
    double sup = 0;
    for (int i = 0; i < grid; ++i) {
        const double t = lo + (hi - lo) * double(i) / double(grid - 1);
        sup = std::max(sup, std::abs(deriv(t, order)));
    }
    return sup;
}

}  // namespace

TestFunctionDictionary::TestFunctionDictionary(int order, std::vector<Member> members)
    : order_(order), members_(std::move(members)) {}

TestFunctionDictionary TestFunctionDictionary::build(int k, double lo, double hi) {
    if (k < 1) throw std::invalid_argument("TestFunctionDictionary: need k >= 1");
    if (!(hi > lo)) throw std::invalid_argument("TestFunctionDictionary: need lo < hi");
    const double span = hi - lo;
    std::vector<Member> members;

    const int centers = 33;
    auto center = [&](int i) { return lo + span * double(i) / double(centers - 1); };

    // slope-1 ramps (admissible for k = 1 only: higher derivatives are not bounded)
    if (k == 1) {
        for (int i = 0; i < centers; ++i) {
            const double c = center(i);
            Member m;
            m.name = "ramp(c=" + std::to_string(c) + ")";
            m.value = [c](double t) { return std::clamp(t - c, -1.0, 1.0); };
            m.derivative = [c](double t, int i2) {
                if (i2 == 0) return std::clamp(t - c, -1.0, 1.0);
                return (t > c - 1.0 && t < c + 1.0) ? 1.0 : 0.0;
            };
            m.order = 1;
            members.push_back(std::move(m));
        }
    }

    // gaussian-smoothed steps gamma*(2*Phi((t-c)/w) - 1), rescaled per order
    const double widths[] = {span / 8.0, span / 16.0, span / 32.0, 1.0};
    for (double w : widths) {
        if (!(w > 0)) continue;
        auto raw = [w](double c) {
            return [c, w](double t, int i) {
                const double z = (t - c) / w;
                if (i == 0) return 2.0 * standard_normal_cdf(z) - 1.0;
                const double sign = (i % 2 == 1) ? 1.0 : -1.0;
                return sign * 2.0 / std::pow(w, i) * hermite_he(i - 1, z) *
                       standard_normal_pdf(z);
            };
        };
        // scale-free sup of each derivative: (2/w^i) * max_z |He_{i-1}(z)| phi(z),
        // taken on a dense z grid with a safety margin
        double sup = 1.0;  // order 0
        for (int i = 1; i <= k; ++i) {
            double m = 0;
            const int zgrid = 48'001;
            for (int zi = 0; zi < zgrid; ++zi) {
                const double z = -12.0 + 24.0 * double(zi) / double(zgrid - 1);
                m = std::max(m, std::abs(hermite_he(i - 1, z)) * standard_normal_pdf(z));
            }
            sup = std::max(sup, 2.0 / std::pow(w, i) * m);
        }
        const double gamma = (1.0 - 1e-5) / std::max(1.0, sup);
        for (int i = 0; i < centers; ++i) {
            const double c = center(i);
            Member m;
            m.name = "step(c=" + std::to_string(c) + ",w=" + std::to_string(w) + ")";
            auto f = raw(c);
            m.value = [f, gamma](double t) { return gamma * f(t, 0); };
            m.derivative = [f, gamma](double t, int i2) { return gamma * f(t, i2); };
            m.order = k;
            members.push_back(std::move(m));
        }
    }

    // sinusoids beta*sin(omega*(t - t0)), beta = 1/max(1, omega^k)
    std::vector<double> omegas = {0.5, 1.0, 2.0, 4.0};
    for (double m2 : {4.0, 8.0, 16.0, 32.0, 64.0}) omegas.push_back(2.0 * std::numbers::pi * m2 / span);
    std::sort(omegas.begin(), omegas.end());
    omegas.erase(std::unique(omegas.begin(), omegas.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 omegas.end());
    for (double omega : omegas) {
        const double beta = 1.0 / std::max(1.0, std::pow(omega, k));
        for (int phase = 0; phase < 2; ++phase) {
            const double t0 = lo - (phase == 0 ? 0.0 : std::numbers::pi / (2.0 * omega));
            Member m;
            m.name = "sin(omega=" + std::to_string(omega) + ",phase=" + std::to_string(phase) +
                     ")";
            m.value = [omega, beta, t0](double t) { return beta * std::sin(omega * (t - t0)); };
            m.derivative = [omega, beta, t0](double t, int i) {
                return beta * std::pow(omega, i) *
                       std::sin(omega * (t - t0) + double(i) * std::numbers::pi / 2.0);
            };
            m.order = k;
            members.push_back(std::move(m));
        }
    }

    // certification: dense scan of every derivative bound
    for (const auto& m : members)
        for (int i = 0; i <= std::min(k, m.order); ++i)
            if (scan_sup(m.derivative, i, lo - span, hi + span) > 1.0 + kCertTol)
                throw std::logic_error("TestFunctionDictionary: member failed certification: " +
                                       m.name);
    return TestFunctionDictionary(k, std::move(members));
}

DistanceEstimate dk_lower(const ArrayXd& x, const ArrayXd& y, int k,
                          const TestFunctionDictionary& dict, int threads) {
    if (dict.size() == 0) throw std::invalid_argument("dk_lower: empty dictionary");
    if (dict.order() < k) throw std::invalid_argument("dk_lower: dictionary order below k");
    if (x.size() == 0 || y.size() == 0) throw std::invalid_argument("dk_lower: empty sample");

    const auto& members = dict.members();
    std::vector<double> diffs(members.size()), se(members.size());
    parallel_for(members.size(), threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t mi = b; mi < e; ++mi) {
            const auto& f = members[mi].value;
            double sx = 0, sxx = 0, sy = 0, syy = 0;
            for (Index i = 0; i < x.size(); ++i) {
                const double v = f(x[i]);
                sx += v;
                sxx += v * v;
            }
            for (Index i = 0; i < y.size(); ++i) {
                const double v = f(y[i]);
                sy += v;
                syy += v * v;
            }
            const double nx = double(x.size()), ny = double(y.size());
            const double mx = sx / nx, my = sy / ny;
            const double vx = std::max(0.0, sxx / nx - mx * mx);
            const double vy = std::max(0.0, syy / ny - my * my);
            diffs[mi] = mx - my;
            se[mi] = std::sqrt(vx / nx + vy / ny);
        }
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < members.size(); ++i)
        if (std::abs(diffs[i]) > std::abs(diffs[best])) best = i;

    DistanceEstimate est;
    est.value = std::abs(diffs[best]);
    est.stderr_val = se[best];
    est.ci_low = std::max(0.0, est.value - 1.96 * se[best]);
    est.ci_high = est.value + 1.96 * se[best];
    est.samples_x = x.size();
    est.samples_y = y.size();
    est.bins = int(dict.size());
    est.low_sample_warning = std::min(x.size(), y.size()) < 1000;
    est.method = "dk-lower(k=" + std::to_string(k) + ",argmax=" + members[best].name + ")";
    return est;
}

DistanceEstimate dk_lower(const ArrayXd& x, const ArrayXd& y, int k, int threads) {
    double lo = std::min(x.minCoeff(), y.minCoeff());
    double hi = std::max(x.maxCoeff(), y.maxCoeff());
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    return dk_lower(x, y, k, TestFunctionDictionary::build(k, lo, hi), threads);
}

double smoothing_constant(int k) {
    if (k < 0 || k > 10) throw std::invalid_argument("smoothing_constant: need 0 <= k <= 10");
    if (k == 0) return 1.0;
    const double L = 16.0;
    const auto integrand = [k](double s) {
        return std::abs(hermite_he(k, s)) * std::exp(-0.5 * s * s);
    };
    const double integral = adaptive_simpson(integrand, -L, L, 1e-13, 56);
    return integral / std::sqrt(2.0 * std::numbers::pi);
}

double smoothing_constant_max(int k) {
    double best = 0;
    for (int i = 0; i <= k; ++i) best = std::max(best, smoothing_constant(i));
    return best;
}

SmoothedTvCheck smoothed_tv_check(const ArrayXd& x, const ArrayXd& y, double eta, int k,
                                  double dk_upper, std::uint64_t z_seed, const TvOptions& opts) {
    if (!(eta > 0.0) || !(eta < 1.0))
        throw std::invalid_argument("smoothed_tv_check: need eta in (0, 1)");
    if (dk_upper < 0) throw std::invalid_argument("smoothed_tv_check: negative dk value");
    const RandomStream z(z_seed, substream(kStreamSmoothingZ));
    ArrayXd xs(x.size()), ys(y.size());
    for (Index i = 0; i < x.size(); ++i) xs[i] = x[i] + eta * z.normal(std::uint64_t(i));
    for (Index i = 0; i < y.size(); ++i) ys[i] = y[i] + eta * z.normal(std::uint64_t(i));
    SmoothedTvCheck out;
    out.lhs = tv_distance(xs, ys, opts);
    out.rhs = smoothing_constant_max(k) * std::pow(eta, -k) * dk_upper;
    return out;
}

}  // namespace polydist
