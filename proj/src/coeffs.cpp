#include "polydist/coeffs.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>

#include "polydist/numerics.hpp"
#include "polydist/rng.hpp"

namespace polydist {

namespace {

void write_double(std::ostream& os, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
}

double parse_double(const std::string& tok) {
    double v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw std::runtime_error("coefficient file: bad number '" + tok + "'");
    return v;
}

}  // namespace

CoefficientCollection::CoefficientCollection(int d, int k_star, int N, int n_max)
    : d_(d), k_star_(k_star), N_(N), n_max_(n_max) {
    if (d < 0 || k_star < 1 || N < 1 || n_max < 0)
        throw std::invalid_argument("CoefficientCollection: bad dimensions");
}

void CoefficientCollection::set(const MonomialKey& key, double value) {
    const int m = int(key.size());
    if (m < 1 || m > d_)
        throw std::out_of_range("CoefficientCollection::set: degree " + std::to_string(m) +
                                " outside [1, " + std::to_string(d_) + "]");
    int prev_n = 0;
    for (const auto& t : key) {
        if (t.n <= prev_n)
            throw std::invalid_argument(
                "CoefficientCollection::set: key must have strictly increasing n");
        if (t.n > n_max_) throw std::out_of_range("CoefficientCollection::set: n exceeds n_max");
        if (t.k < 1 || t.k > k_star_)
            throw std::out_of_range("CoefficientCollection::set: k outside [1, k_star]");
        if (t.j < 1 || t.j > N_)
            throw std::out_of_range("CoefficientCollection::set: j outside [1, N]");
        prev_n = t.n;
    }
    if (value == 0.0)
        entries_.erase(key);
    else
        entries_[key] = value;
}

double CoefficientCollection::at(const MonomialKey& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0.0 : it->second;
}

void CoefficientCollection::save(std::ostream& os) const {
    os << d_ << ' ' << k_star_ << ' ' << N_ << ' ' << n_max_ << '\n';
    os << "0 ";
    write_double(os, a0_);
    os << '\n';
    for (const auto& [key, value] : entries_) {
        os << key.size();
        for (const auto& t : key) os << ' ' << t.n << ' ' << t.k << ' ' << t.j;
        os << ' ';
        write_double(os, value);
        os << '\n';
    }
}

CoefficientCollection CoefficientCollection::load(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("coefficient file: missing header");
    std::istringstream header(line);
    int d, k_star, N, n_max;
    if (!(header >> d >> k_star >> N >> n_max))
        throw std::runtime_error("coefficient file: bad header");
    CoefficientCollection a(d, k_star, N, n_max);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        int m;
        if (!(row >> m)) throw std::runtime_error("coefficient file: bad entry line");
        MonomialKey key;
        key.reserve(std::size_t(std::max(m, 0)));
        for (int i = 0; i < m; ++i) {
            IndexTriple t{};
            if (!(row >> t.n >> t.k >> t.j))
                throw std::runtime_error("coefficient file: truncated key");
            key.push_back(t);
        }
        std::string tok;
        if (!(row >> tok)) throw std::runtime_error("coefficient file: missing value");
        std::string rest;
        if (row >> rest) throw std::runtime_error("coefficient file: trailing tokens");
        const double value = parse_double(tok);
        if (m == 0)
            a.set_constant_term(value);
        else
            a.set(key, value);
    }
    return a;
}

double norm_m(const CoefficientCollection& a, int m) {
    if (m < 0 || m > a.degree())
        throw std::out_of_range("norm_m: degree outside [0, d]");
    if (m == 0) return std::abs(a.constant_term());
    CompensatedSum s;
    for (const auto& [key, value] : a.entries())
        if (int(key.size()) == m) s.add(value * value);
    return std::sqrt(s.value());
}

double norm_range(const CoefficientCollection& a, int l, int u) {
    if (l < 0 || u > a.degree() || l > u)
        throw std::out_of_range("norm_range: need 0 <= l <= u <= d");
    CompensatedSum s;
    if (l == 0) s.add(a.constant_term() * a.constant_term());
    for (const auto& [key, value] : a.entries()) {
        const int m = int(key.size());
        if (m >= l && m <= u) s.add(value * value);
    }
    return std::sqrt(s.value());
}

namespace {

double max_per_n_mass(const CoefficientCollection& a, int m_lo, int m_hi) {
    std::vector<CompensatedSum> per_n(std::size_t(a.n_max()) + 1);
    for (const auto& [key, value] : a.entries()) {
        const int m = int(key.size());
        if (m < m_lo || m > m_hi) continue;
        for (const auto& t : key) per_n[std::size_t(t.n)].add(value * value);
    }
    double best = 0.0;
    for (const auto& s : per_n) best = std::max(best, s.value());
    return best;
}

}  // namespace

double influence_m(const CoefficientCollection& a, int m) {
    if (m < 1 || m > a.degree())
        throw std::out_of_range("influence_m: degree outside [1, d]");
    return max_per_n_mass(a, m, m);
}

double influence_total(const CoefficientCollection& a) {
    if (a.entries().empty()) return 0.0;
    return max_per_n_mass(a, 1, a.degree());
}

CoefficientCollection gen_uniform_spread(int n_max, int d, int k_star, int N,
                                         double target_norm) {
    if (d < 1 || n_max < d)
        throw std::out_of_range("gen_uniform_spread: need n_max >= d >= 1");
    CoefficientCollection a(d, k_star, N, n_max);
    const long long tuples = binomial_coefficient(n_max, d);
    const double value = target_norm / std::sqrt(double(tuples));

    MonomialKey key(static_cast<std::size_t>(d));
    std::vector<int> combo(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) combo[std::size_t(i)] = i + 1;
    while (true) {
        for (int i = 0; i < d; ++i) key[std::size_t(i)] = {combo[std::size_t(i)], 1, 1};
        a.set(key, value);
        int i = d - 1;
        while (i >= 0 && combo[std::size_t(i)] == n_max - (d - 1 - i)) --i;
        if (i < 0) break;
        ++combo[std::size_t(i)];
        for (int t = i + 1; t < d; ++t) combo[std::size_t(t)] = combo[std::size_t(t - 1)] + 1;
    }
    return a;
}

namespace {

// q-th m-subset of {1..n} in lexicographic order.
std::vector<int> unrank_combination(long long q, int n, int m) {
    std::vector<int> out;
    out.reserve(std::size_t(m));
    int c = 1;
    for (int i = 0; i < m; ++i) {
        while (true) {
            const long long count = binomial_coefficient(n - c, m - i - 1);
            if (q < count) break;
            q -= count;
            ++c;
        }
        out.push_back(c);
        ++c;
    }
    return out;
}

}  // namespace

CoefficientCollection gen_sparse_random(int n_max, int d, int k_star, int N, double density,
                                        std::uint64_t seed) {
    if (!(density > 0.0) || density > 1.0)
        throw std::invalid_argument("gen_sparse_random: density must be in (0, 1]");
    if (d < 1 || n_max < 1) throw std::out_of_range("gen_sparse_random: need d >= 1, n_max >= 1");
    CoefficientCollection a(d, k_star, N, n_max);
    const int arity = k_star * N;
    const double log1mp = density < 1.0 ? std::log1p(-density) : 0.0;

    std::uint64_t accepted = 0;
    const RandomStream values(seed, substream(kStreamCoeffGen, 1));
    for (int m = 1; m <= std::min(d, n_max); ++m) {
        long long assign = 1;
        const long long combos = binomial_coefficient(n_max, m);
        for (int i = 0; i < m; ++i) {
            if (assign > (1ll << 62) / (arity * std::max(combos, 1ll)))
                throw std::invalid_argument("gen_sparse_random: admissible space too large");
            assign *= arity;
        }
        const long long total = combos * assign;
        const RandomStream skips(seed, substream(kStreamCoeffGen, 2, std::uint64_t(m)));

        // Visit each admissible key independently with probability `density`
        // via geometric gaps; cost scales with the number of accepted keys.
        long long pos = -1;
        std::uint64_t skip_ctr = 0;
        while (true) {
            long long gap = 0;
            if (density < 1.0) {
                const double u = skips.uniform(skip_ctr++);
                const double g = std::floor(std::log1p(-u) / log1mp);
                gap = g >= double(total) ? total : (long long)(g);
            }
            pos += 1 + gap;
            if (pos >= total) break;
            const long long q = pos / assign;
            long long r = pos % assign;
            const auto combo = unrank_combination(q, n_max, m);
            MonomialKey key(static_cast<std::size_t>(m));
            for (int i = m - 1; i >= 0; --i) {
                const int digit = int(r % arity);
                r /= arity;
                key[std::size_t(i)] = {combo[std::size_t(i)], digit / N + 1, digit % N + 1};
            }
            a.set(key, values.normal(accepted++));
        }
    }
    return a;
}

}  // namespace polydist
