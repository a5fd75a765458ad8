#include "polydist/randvec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "polydist/numerics.hpp"
#include "polydist/parallel.hpp"

namespace polydist {

struct ScalarLaw::Impl {
    LawKind kind;
    double p1 = 0, p2 = 0;  // uniform: lo,hi; gaussian: mean,sd; laplace: loc,scale
    std::vector<double> atom_points, atom_weights;
    std::shared_ptr<const SplitLaw> split;
    // FloorResidual pieces
    std::shared_ptr<const ScalarLaw> source;
    double res_omega = 0, res_r = 0, res_center = 0, res_p = 0;
};

ScalarLaw ScalarLaw::uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("ScalarLaw::uniform: need lo < hi");
    auto impl = std::make_shared<Impl>();
    impl->kind = LawKind::UniformInterval;
    impl->p1 = lo;
    impl->p2 = hi;
    return ScalarLaw(impl);
}

ScalarLaw ScalarLaw::gaussian(double mean, double sd) {
    if (!(sd > 0)) throw std::invalid_argument("ScalarLaw::gaussian: need sd > 0");
    auto impl = std::make_shared<Impl>();
    impl->kind = LawKind::Gaussian;
    impl->p1 = mean;
    impl->p2 = sd;
    return ScalarLaw(impl);
}

ScalarLaw ScalarLaw::laplace(double loc, double scale) {
    if (!(scale > 0)) throw std::invalid_argument("ScalarLaw::laplace: need scale > 0");
    auto impl = std::make_shared<Impl>();
    impl->kind = LawKind::Laplace;
    impl->p1 = loc;
    impl->p2 = scale;
    return ScalarLaw(impl);
}

ScalarLaw ScalarLaw::atoms(std::vector<double> points, std::vector<double> weights) {
    if (points.empty() || points.size() != weights.size())
        throw std::invalid_argument("ScalarLaw::atoms: points/weights size mismatch");
    double total = 0;
    for (double w : weights) {
        if (w < 0) throw std::invalid_argument("ScalarLaw::atoms: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("ScalarLaw::atoms: weights must sum to 1");
    auto impl = std::make_shared<Impl>();
    impl->kind = LawKind::AtomMixture;
    impl->atom_points = std::move(points);
    impl->atom_weights = std::move(weights);
    return ScalarLaw(impl);
}

ScalarLaw ScalarLaw::mixture(SplitLaw split) {
    auto impl = std::make_shared<Impl>();
    impl->kind = LawKind::ExplicitMixture;
    impl->split = std::make_shared<const SplitLaw>(std::move(split));
    return ScalarLaw(impl);
}

ScalarLaw ScalarLaw::floor_residual(const ScalarLaw& source, double omega, double r,
                                    double center, double p) {
    if (!source.has_density())
        throw std::invalid_argument("floor_residual: source must have a density");
    if (!(p > 0) || !(p < 1)) throw std::invalid_argument("floor_residual: need p in (0,1)");
    auto impl = std::make_shared<Impl>();
    impl->kind = LawKind::FloorResidual;
    impl->source = std::make_shared<const ScalarLaw>(source);
    impl->res_omega = omega;
    impl->res_r = r;
    impl->res_center = center;
    impl->res_p = p;
    return ScalarLaw(impl);
}

LawKind ScalarLaw::kind() const { return impl_->kind; }

const SplitLaw* ScalarLaw::split_form() const {
    return impl_->kind == LawKind::ExplicitMixture ? impl_->split.get() : nullptr;
}

std::string ScalarLaw::describe() const {
    std::ostringstream os;
    switch (impl_->kind) {
        case LawKind::UniformInterval:
            os << "uniform " << impl_->p1 << " " << impl_->p2;
            break;
        case LawKind::Gaussian:
            os << "gaussian " << impl_->p1 << " " << impl_->p2;
            break;
        case LawKind::Laplace:
            os << "laplace " << impl_->p1 << " " << impl_->p2;
            break;
        case LawKind::AtomMixture: {
            os << "atoms";
            for (std::size_t i = 0; i < impl_->atom_points.size(); ++i)
                os << " " << impl_->atom_points[i] << " " << impl_->atom_weights[i];
            break;
        }
        case LawKind::ExplicitMixture:
            os << "mixture " << impl_->split->p << " " << impl_->split->alpha << " "
               << impl_->split->x0 << " " << impl_->split->u_law.describe();
            break;
        case LawKind::FloorResidual:
            os << "residual(" << impl_->source->describe() << ", omega=" << impl_->res_omega
               << ")";
            break;
    }
    return os.str();
}

bool ScalarLaw::has_density() const {
    switch (impl_->kind) {
        case LawKind::AtomMixture:
            return false;
        case LawKind::ExplicitMixture:
            return impl_->split->p >= 1.0 || impl_->split->u_law.has_density();
        default:
            return true;
    }
}

std::optional<double> ScalarLaw::density(double x) const {
    switch (impl_->kind) {
        case LawKind::UniformInterval:
            return (x >= impl_->p1 && x <= impl_->p2) ? 1.0 / (impl_->p2 - impl_->p1) : 0.0;
        case LawKind::Gaussian:
            return standard_normal_pdf((x - impl_->p1) / impl_->p2) / impl_->p2;
        case LawKind::Laplace:
            return std::exp(-std::abs(x - impl_->p1) / impl_->p2) / (2.0 * impl_->p2);
        case LawKind::AtomMixture:
            return std::nullopt;
        case LawKind::ExplicitMixture: {
            const SplitLaw& s = *impl_->split;
            const auto fv = s.v_law.density((x - s.x0) / s.alpha);
            const double ball = fv ? *fv / s.alpha : 0.0;
            if (s.p >= 1.0) return ball;
            const auto fu = s.u_law.density(x);
            if (!fu) return std::nullopt;
            return s.p * ball + (1.0 - s.p) * *fu;
        }
        case LawKind::FloorResidual: {
            const double f = *impl_->source->density(x);
            const bool in_ball = std::abs(x - impl_->res_center) <= impl_->res_r;
            const double g = (f - (in_ball ? impl_->res_omega : 0.0)) / (1.0 - impl_->res_p);
            return std::max(0.0, g);
        }
    }
    return std::nullopt;
}

namespace {

double uniform_interval_moment(double lo, double hi, int k) {
    // (hi^{k+1} - lo^{k+1}) / ((k+1)(hi-lo)) via the power-sum form
    double s = 0;
    for (int i = 0; i <= k; ++i) s += std::pow(hi, i) * std::pow(lo, k - i);
    return s / double(k + 1);
}

double gaussian_moment(double mean, double sd, int k) {
    // M_k = mean*M_{k-1} + (k-1)*sd^2*M_{k-2}
    if (k == 0) return 1.0;
    double m_prev = 1.0, m = mean;
    for (int i = 2; i <= k; ++i) {
        const double next = mean * m + double(i - 1) * sd * sd * m_prev;
        m_prev = m;
        m = next;
    }
    return m;
}

double factorial(int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

double laplace_moment(double loc, double scale, int k) {
    // central moments are i!*scale^i for even i, zero for odd
    double s = 0;
    for (int i = 0; i <= k; i += 2)
        s += double(binomial_coefficient(k, i)) * std::pow(loc, k - i) * factorial(i) *
             std::pow(scale, i);
    return s;
}

}  // namespace

double ScalarLaw::raw_moment(int k) const {
    if (k < 0) throw std::invalid_argument("raw_moment: negative order");
    if (k == 0) return 1.0;
    switch (impl_->kind) {
        case LawKind::UniformInterval:
            return uniform_interval_moment(impl_->p1, impl_->p2, k);
        case LawKind::Gaussian:
            return gaussian_moment(impl_->p1, impl_->p2, k);
        case LawKind::Laplace:
            return laplace_moment(impl_->p1, impl_->p2, k);
        case LawKind::AtomMixture: {
            double s = 0;
            for (std::size_t i = 0; i < impl_->atom_points.size(); ++i)
                s += impl_->atom_weights[i] * std::pow(impl_->atom_points[i], k);
            return s;
        }
        case LawKind::ExplicitMixture: {
            const SplitLaw& sp = *impl_->split;
            double ball = 0;  // E[(alpha*V + x0)^k]
            for (int i = 0; i <= k; ++i)
                ball += double(binomial_coefficient(k, i)) * std::pow(sp.alpha, i) *
                        std::pow(sp.x0, k - i) * sp.v_law.raw_moment(i);
            if (sp.p >= 1.0) return ball;
            return sp.p * ball + (1.0 - sp.p) * sp.u_law.raw_moment(k);
        }
        case LawKind::FloorResidual: {
            const double src = impl_->source->raw_moment(k);
            const double ball = uniform_interval_moment(impl_->res_center - impl_->res_r,
                                                        impl_->res_center + impl_->res_r, k);
            return (src - impl_->res_p * ball) / (1.0 - impl_->res_p);
        }
    }
    throw std::logic_error("raw_moment: unknown kind");
}

double ScalarLaw::variance() const {
    const double m1 = raw_moment(1);
    return raw_moment(2) - m1 * m1;
}

double ScalarLaw::sample(const RandomStream& stream, std::uint64_t ctr) const {
    switch (impl_->kind) {
        case LawKind::UniformInterval:
            return impl_->p1 + (impl_->p2 - impl_->p1) * stream.uniform(ctr);
        case LawKind::Gaussian:
            return impl_->p1 + impl_->p2 * stream.normal(ctr);
        case LawKind::Laplace: {
            const double t = stream.uniform(ctr) - 0.5;
            double m = 1.0 - 2.0 * std::abs(t);
            if (m <= 0.0) m = 0x1.0p-53;
            return impl_->p1 - impl_->p2 * (t < 0 ? -1.0 : 1.0) * std::log(m);
        }
        case LawKind::AtomMixture: {
            const double u = stream.uniform(ctr);
            double acc = 0;
            for (std::size_t i = 0; i < impl_->atom_points.size(); ++i) {
                acc += impl_->atom_weights[i];
                if (u < acc) return impl_->atom_points[i];
            }
            return impl_->atom_points.back();
        }
        case LawKind::ExplicitMixture:
            return impl_->split->sample(stream, ctr);
        case LawKind::FloorResidual: {
            // rejection against the source: propose x ~ f, accept with
            // probability 1 - omega*1_ball(x)/f(x); acceptance rate is 1 - p
            const std::uint64_t base = substream(stream.stream(), ctr, 0x524553ull);
            for (std::uint64_t att = 0;; ++att) {
                const RandomStream prop(stream.seed(), substream(base, att, 1));
                const double x = impl_->source->sample(prop, 0);
                if (std::abs(x - impl_->res_center) > impl_->res_r) return x;
                const double f = *impl_->source->density(x);
                const double accept = 1.0 - impl_->res_omega / f;
                const RandomStream coin(stream.seed(), substream(base, att, 2));
                if (coin.uniform(0) < accept) return x;
            }
        }
    }
    throw std::logic_error("sample: unknown kind");
}

SplitLaw::SplitLaw(double p_, double alpha_, double x0_, ScalarLaw v, ScalarLaw u)
    : p(p_), alpha(alpha_), x0(x0_), v_law(std::move(v)), u_law(std::move(u)),
      residual_reachable(p_ < 1.0) {
    if (!(p > 0) || p > 1) throw std::invalid_argument("SplitLaw: need p in (0, 1]");
    if (!(alpha > 0)) throw std::invalid_argument("SplitLaw: need alpha > 0");
    const LawKind k = v_law.kind();
    if (k != LawKind::UniformInterval && k != LawKind::Gaussian && k != LawKind::Laplace)
        throw std::invalid_argument("SplitLaw: v_law must be a log-concave catalog law");
}

double SplitLaw::sample(const RandomStream& stream, std::uint64_t ctr) const {
    const double u_eps = stream.uniform(ctr);
    if (u_eps < p) {
        const RandomStream vs(stream.seed(), substream(stream.stream(), ctr, 1));
        return alpha * v_law.sample(vs, 0) + x0;
    }
    const RandomStream us(stream.seed(), substream(stream.stream(), ctr, 2));
    return u_law.sample(us, 0);
}

DoeblinWitness certify_doeblin(const ScalarLaw& law) {
    DoeblinWitness w{};
    switch (law.kind()) {
        case LawKind::UniformInterval: {
            // constant density 1/(hi-lo) on the interval
            const double width = std::sqrt(12.0 * law.variance());
            w.center = law.raw_moment(1);
            w.r = width / 2.0;
            w.omega = 1.0 / width;
            break;
        }
        case LawKind::Gaussian: {
            // min density on [mean-sd, mean+sd] is attained at the endpoints
            const double sd = std::sqrt(law.variance());
            w.center = law.raw_moment(1);
            w.r = sd;
            w.omega = standard_normal_pdf(1.0) / sd;
            break;
        }
        case LawKind::Laplace: {
            const double scale = std::sqrt(law.variance() / 2.0);
            w.center = law.raw_moment(1);
            w.r = scale;
            w.omega = std::exp(-1.0) / (2.0 * scale);
            break;
        }
        case LawKind::ExplicitMixture: {
            // the eps*(alpha*V + x0) component alone provides the floor
            const SplitLaw& s = *law.split_form();
            const double f_lo = *s.v_law.density(-1.0), f_hi = *s.v_law.density(1.0);
            w.center = s.x0;
            w.r = s.alpha;
            w.omega = s.p * std::min(f_lo, f_hi) / s.alpha;
            break;
        }
        case LawKind::AtomMixture:
            throw std::domain_error(
                "certify_doeblin: atom-only law has no absolutely continuous floor");
        case LawKind::FloorResidual:
            throw std::domain_error("certify_doeblin: floor residual laws are not certified");
    }
    w.R = std::abs(w.center);
    if (w.omega * 2.0 * w.r > 1.0 + 1e-12)
        throw std::logic_error("certify_doeblin: witness mass exceeds 1");
    return w;
}

SplitLaw split(const ScalarLaw& law) {
    if (const SplitLaw* s = law.split_form()) return *s;
    const DoeblinWitness w = certify_doeblin(law);
    const double p_raw = 2.0 * w.omega * w.r;
    const ScalarLaw v = ScalarLaw::uniform(-1.0, 1.0);
    if (p_raw >= 1.0 - 1e-12) {
        // exact representation X = r*V + center; residual is never drawn
        return SplitLaw(1.0, w.r, w.center, v, ScalarLaw::atoms({w.center}, {1.0}));
    }
    return SplitLaw(p_raw, w.r, w.center, v,
                    ScalarLaw::floor_residual(law, w.omega, w.r, w.center, p_raw));
}

VectorFamily::VectorFamily(int N, ScalarLaw default_law)
    : N_(N), default_(std::move(default_law)) {
    if (N < 1) throw std::invalid_argument("VectorFamily: need N >= 1");
    validate(default_);
}

void VectorFamily::validate(const ScalarLaw& law) {
    if (law.kind() == LawKind::ExplicitMixture) return;  // carries its own split
    (void)certify_doeblin(law);
}

void VectorFamily::assign(int n, int j, ScalarLaw law) {
    if (n < 1 || j < 1 || j > N_) throw std::out_of_range("VectorFamily::assign: bad (n, j)");
    validate(law);
    overrides_.insert_or_assign({n, j}, std::move(law));
}

const ScalarLaw& VectorFamily::law(int n, int j) const {
    const auto it = overrides_.find({n, j});
    return it == overrides_.end() ? default_ : it->second;
}

SampleMatrix sample(const VectorFamily& family, int n_max, Index count, std::uint64_t seed,
                    Index first_draw, int threads) {
    if (count < 0 || n_max < 1) throw std::invalid_argument("sample: bad count or n_max");
    SampleMatrix m;
    m.count = count;
    m.n_max = n_max;
    m.N = family.dim();
    m.values.resize(count, Index(n_max) * family.dim());
    const std::size_t cols = std::size_t(n_max) * std::size_t(family.dim());
    parallel_for(cols, threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) {
            const int n = int(c) / family.dim() + 1;
            const int j = int(c) % family.dim() + 1;
            const ScalarLaw& law = family.law(n, j);
            const RandomStream stream(
                seed, substream(kStreamSampleX, std::uint64_t(n), std::uint64_t(j)));
            double* col = m.values.col(Index(c)).data();
            for (Index i = 0; i < count; ++i)
                col[i] = law.sample(stream, std::uint64_t(first_draw + i));
        }
    });
    return m;
}

SplitSample sample_split(const std::vector<SplitLaw>& laws, int n_max, Index count,
                         std::uint64_t seed, Index first_draw) {
    if (laws.empty()) throw std::invalid_argument("sample_split: no laws");
    if (laws.size() != 1 && int(laws.size()) != n_max)
        throw std::invalid_argument("sample_split: need one shared law or one per n");
    SplitSample out;
    out.x.count = count;
    out.x.n_max = n_max;
    out.x.N = 1;
    out.x.values.resize(count, n_max);
    out.eps.resize(count, n_max);
    out.v.resize(count, n_max);
    out.u.resize(count, n_max);
    for (int n = 1; n <= n_max; ++n) {
        const SplitLaw& sl = laws[laws.size() == 1 ? 0 : std::size_t(n - 1)];
        const RandomStream se(seed, substream(kStreamEpsilon, std::uint64_t(n)));
        const RandomStream sv(seed, substream(kStreamSplitV, std::uint64_t(n)));
        const RandomStream su(seed, substream(kStreamSplitU, std::uint64_t(n)));
        for (Index i = 0; i < count; ++i) {
            const std::uint64_t ctr = std::uint64_t(first_draw + i);
            const double eps = se.uniform(ctr) < sl.p ? 1.0 : 0.0;
            const double v = sl.v_law.sample(sv, ctr);
            const double u = sl.u_law.sample(su, ctr);
            out.eps(i, n - 1) = eps;
            out.v(i, n - 1) = v;
            out.u(i, n - 1) = u;
            out.x.values(i, n - 1) = eps > 0.5 ? sl.alpha * v + sl.x0 : u;
        }
    }
    return out;
}

std::vector<double> centered_power_moments(const ScalarLaw& law, int k_star) {
    if (k_star < 1) throw std::invalid_argument("centered_power_moments: need k_star >= 1");
    std::vector<double> out;
    out.reserve(std::size_t(k_star));
    for (int k = 1; k <= k_star; ++k) out.push_back(law.raw_moment(k));
    return out;
}

GaussianCounterpart::GaussianCounterpart(int n_max, int N, int k_star, std::vector<MatrixXd> cov)
    : n_max_(n_max), N_(N), k_star_(k_star), cov_(std::move(cov)) {
    factor_.reserve(cov_.size());
    for (const auto& c : cov_) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(c);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("GaussianCounterpart: eigendecomposition failed");
        const VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        factor_.push_back(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
    }
}

const MatrixXd& GaussianCounterpart::covariance(int n) const {
    if (n < 1 || n > n_max_) throw std::out_of_range("GaussianCounterpart::covariance");
    return cov_[std::size_t(n - 1)];
}

ArrayXXd GaussianCounterpart::sample(Index count, std::uint64_t seed, Index first_draw) const {
    const int M = coords_per_n();
    ArrayXXd out(count, Index(n_max_) * M);
    MatrixXd xi(count, M);
    for (int n = 1; n <= n_max_; ++n) {
        for (int c = 0; c < M; ++c) {
            const RandomStream stream(
                seed, substream(kStreamGauss, std::uint64_t(n), std::uint64_t(c)));
            for (Index i = 0; i < count; ++i)
                xi(i, c) = stream.normal(std::uint64_t(first_draw + i));
        }
        out.middleCols(Index(n - 1) * M, M) = (xi * factor_[std::size_t(n - 1)]).array();
    }
    return out;
}

GaussianCounterpart gaussian_counterpart(const VectorFamily& family, int n_max, int k_star) {
    if (k_star < 1 || n_max < 1)
        throw std::invalid_argument("gaussian_counterpart: bad n_max or k_star");
    const int N = family.dim();
    const int M = N * k_star;
    std::vector<MatrixXd> cov;
    cov.reserve(std::size_t(n_max));
    for (int n = 1; n <= n_max; ++n) {
        MatrixXd c = MatrixXd::Zero(M, M);
        for (int j = 1; j <= N; ++j) {
            const ScalarLaw& law = family.law(n, j);
            std::vector<double> m(std::size_t(2 * k_star) + 1, 1.0);
            for (int k = 1; k <= 2 * k_star; ++k) m[std::size_t(k)] = law.raw_moment(k);
            for (int k1 = 1; k1 <= k_star; ++k1)
                for (int k2 = 1; k2 <= k_star; ++k2) {
                    const Index r = Index(k1 - 1) * N + (j - 1);
                    const Index s = Index(k2 - 1) * N + (j - 1);
                    c(r, s) = m[std::size_t(k1 + k2)] - m[std::size_t(k1)] * m[std::size_t(k2)];
                }
        }
        cov.push_back(std::move(c));
    }
    return GaussianCounterpart(n_max, N, k_star, std::move(cov));
}

}  // namespace polydist
