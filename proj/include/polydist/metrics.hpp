#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "polydist/types.hpp"

namespace polydist {

struct DistanceEstimate {
    double value = 0;
    double stderr_val = 0;
    double ci_low = 0;
    double ci_high = 0;
    std::string method;
    Index samples_x = 0;
    Index samples_y = 0;
    int bins = 0;
    bool low_sample_warning = false;
};

struct TvOptions {
    int min_bins = 100;
    int max_bins = 2000;
    int bins_override = 0;  // 0 = Freedman-Diaconis rule on the pooled sample
    int bootstrap = 200;    // 0 skips the CI
    std::uint64_t seed = 0x7d0;
    int threads = 1;
};

// Shared-grid binning; values outside [lo, hi] clamp into the edge bins.
struct HistogramGrid {
    double lo = 0;
    double width = 1;
    int bins = 1;
    int index(double x) const {
        const int i = int((x - lo) / width);
        return i < 0 ? 0 : (i >= bins ? bins - 1 : i);
    }
};

// 1/2 * sum |p_i - q_i| over the shared grid.
double tv_from_counts(const std::vector<std::int64_t>& cx, const std::vector<std::int64_t>& cy);

// Histogram L1/2 estimate of d_TV with bootstrap CI (multinomial resampling of
// the bin masses, one stream per resample).
DistanceEstimate tv_distance(const ArrayXd& x, const ArrayXd& y, const TvOptions& opts = {});

// Analytic oracle: d_TV(N(0,1), N(h,1)) = 2*Phi(|h|/2) - 1.
double tv_gaussian_shift(double h);

// Streaming variant for shift scans: bins gen(i) and gen(i)+h on an explicit
// grid without materializing the sample; identical to tv_distance with the
// same grid and no bootstrap.
double tv_shifted_stream(const std::function<double(std::uint64_t)>& gen, Index count, double h,
                         double lo, double hi, int bins, int threads = 1);

// D_xi(s) = max over h in grid of tv_distance(x, x+h); the grid must include +-s.
double shift_modulus(const ArrayXd& x, double s, const std::vector<double>& h_grid,
                     const TvOptions& opts = {});

// Smooth test functions with certified sup-norm bounds on derivatives 0..k.
class TestFunctionDictionary {
public:
    struct Member {
        std::string name;
        std::function<double(double)> value;
        std::function<double(double, int)> derivative;  // i-th derivative, i <= order
        int order;
    };

    static TestFunctionDictionary build(int k, double lo, double hi);

    int order() const { return order_; }
    std::size_t size() const { return members_.size(); }
    const std::vector<Member>& members() const { return members_; }

private:
    TestFunctionDictionary(int order, std::vector<Member> members);
    int order_;
    std::vector<Member> members_;
};

// Certified lower bound on d_k by dictionary duality; CI is the CLT band of
// the argmax member.
DistanceEstimate dk_lower(const ArrayXd& x, const ArrayXd& y, int k,
                          const TestFunctionDictionary& dict, int threads = 1);
DistanceEstimate dk_lower(const ArrayXd& x, const ArrayXd& y, int k, int threads = 1);

// c_k = (2*pi)^{-1/2} * integral of |d^k/ds^k e^{-s^2/2}| by adaptive quadrature.
double smoothing_constant(int k);
// C_k = max{c_0, ..., c_k}
double smoothing_constant_max(int k);

// Probabilists' Hermite polynomial He_k (used by the smoothing integrand and
// the smoothed-step dictionary members).
double hermite_he(int k, double x);

struct SmoothedTvCheck {
    DistanceEstimate lhs;  // tv(x + eta Z, y + eta Z), common Z stream
    double rhs;            // C_k * eta^{-k} * dk_upper
};

SmoothedTvCheck smoothed_tv_check(const ArrayXd& x, const ArrayXd& y, double eta, int k,
                                  double dk_upper, std::uint64_t z_seed,
                                  const TvOptions& opts = {});

}  // namespace polydist
