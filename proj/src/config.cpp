#include "polydist/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace polydist {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> tokenize(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double to_double(const std::string& tok, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number '" + tok + "' for " + what);
    }
}

long to_long(const std::string& tok, const std::string& what) {
    try {
        std::size_t used = 0;
        const long v = std::stol(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer '" + tok + "' for " + what);
    }
}

const std::map<std::string, Scenario> kScenarios = {
    {"t1-verify", Scenario::T1Verify},
    {"t2-scaling", Scenario::T2Scaling},
    {"t3-scaling", Scenario::T3Scaling},
    {"invariance", Scenario::Invariance},
    {"bernoulli-tail", Scenario::BernoulliTail},
    {"l1-variance", Scenario::L1Variance},
    {"shift-regularity", Scenario::ShiftRegularity},
    {"cf-decay", Scenario::CfDecay},
    {"estimator-calibration", Scenario::EstimatorCalibration},
};

const std::map<Scenario, std::set<std::string>> kAllowedParams = {
    {Scenario::EstimatorCalibration, {"cases", "h_max"}},
    {Scenario::BernoulliTail, {"instances", "thetas", "mc_draws"}},
    {Scenario::ShiftRegularity, {"d_list", "s_grid"}},
    {Scenario::L1Variance, {"n_list", "trials", "v_budget", "p"}},
    {Scenario::Invariance, {"ladder"}},
    {Scenario::T1Verify,
     {"n", "d", "k_list", "p", "zeta_ladder", "kappa", "calibrate_cd", "family_y"}},
    {Scenario::T2Scaling, {"n", "d", "dprime", "k", "k_star", "zeta_ladder", "family_y"}},
    {Scenario::T3Scaling, {"n", "d", "l", "k", "k_star", "tau_ladder"}},
    {Scenario::CfDecay, {"window_lo", "window_hi", "per_decade", "match_points"}},
};

ScalarLaw parse_law_tokens(const std::vector<std::string>& toks, std::size_t& pos) {
    if (pos >= toks.size()) throw std::invalid_argument("law: missing kind");
    const std::string kind = toks[pos++];
    const auto need = [&](const char* what) {
        if (pos >= toks.size())
            throw std::invalid_argument(std::string("law: missing ") + what + " for " + kind);
        return to_double(toks[pos++], kind);
    };
    if (kind == "uniform") {
        const double lo = need("lo"), hi = need("hi");
        return ScalarLaw::uniform(lo, hi);
    }
    if (kind == "gaussian") {
        const double mean = need("mean"), sd = need("sd");
        return ScalarLaw::gaussian(mean, sd);
    }
    if (kind == "laplace") {
        const double loc = need("loc"), scale = need("scale");
        return ScalarLaw::laplace(loc, scale);
    }
    if (kind == "atoms") {
        std::vector<double> pts, wts;
        while (pos < toks.size()) {
            pts.push_back(need("point"));
            wts.push_back(need("weight"));
        }
        return ScalarLaw::atoms(std::move(pts), std::move(wts));
    }
    if (kind == "mixture") {
        const double p = need("p"), alpha = need("alpha"), x0 = need("x0");
        ScalarLaw residual = parse_law_tokens(toks, pos);
        return ScalarLaw::mixture(
            SplitLaw(p, alpha, x0, ScalarLaw::uniform(-1, 1), std::move(residual)));
    }
    throw std::invalid_argument("law: unknown kind '" + kind + "'");
}

}  // namespace

std::string scenario_name(Scenario s) {
    for (const auto& [name, sc] : kScenarios)
        if (sc == s) return name;
    return "?";
}

Scenario parse_scenario(const std::string& name) {
    const auto it = kScenarios.find(name);
    if (it == kScenarios.end())
        throw std::invalid_argument("config: unknown scenario '" + name + "'");
    return it->second;
}

ScalarLaw parse_law(const std::string& text) {
    const auto toks = tokenize(text);
    std::size_t pos = 0;
    auto law = parse_law_tokens(toks, pos);
    if (pos != toks.size())
        throw std::invalid_argument("law: trailing tokens in '" + text + "'");
    return law;
}

VectorFamily FamilySpec::build() const {
    VectorFamily fam(N, parse_law(default_law));
    for (const auto& [nj, text] : overrides) fam.assign(nj.first, nj.second, parse_law(text));
    return fam;
}

CoefficientCollection CoeffSpec::build() const {
    if (source == "uniform-spread") return gen_uniform_spread(n_max, d, k_star, N, target_norm);
    if (source == "sparse-random")
        return gen_sparse_random(n_max, d, k_star, N, density, gen_seed);
    if (source == "file") {
        std::ifstream in(file);
        if (!in) throw std::invalid_argument("coeffs: cannot open file '" + file + "'");
        return CoefficientCollection::load(in);
    }
    throw std::invalid_argument("coeffs: unknown source '" + source + "'");
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text,
                                              const std::string& origin) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    bool scenario_seen = false;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto where = [&] { return origin + ":" + std::to_string(lineno); };
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: malformed section at " + where());
            section = trim(line.substr(1, line.size() - 2));
            if (section != "constants" && section != "family" && section != "coeffs" &&
                section != "params")
                throw std::invalid_argument("config: unknown section [" + section + "] at " +
                                            where());
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at " + where());
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config: empty key or value at " + where());

        if (section.empty()) {
            if (key == "scenario") {
                cfg.scenario = parse_scenario(value);
                scenario_seen = true;
            } else if (key == "seed") {
                cfg.seed = std::uint64_t(to_long(value, key));
            } else if (key == "samples") {
                cfg.samples = Index(to_long(value, key));
            } else if (key == "bootstrap") {
                cfg.bootstrap = int(to_long(value, key));
            } else if (key == "threads") {
                cfg.threads = int(to_long(value, key));
            } else if (key == "out_dir") {
                cfg.out_dir = value;
            } else if (key == "format") {
                if (value == "csv")
                    cfg.format = ReportFormat::Csv;
                else if (value == "structured")
                    cfg.format = ReportFormat::Structured;
                else
                    throw std::invalid_argument("config: format must be csv|structured at " +
                                                where());
            } else {
                throw std::invalid_argument("config: unknown key '" + key + "' at " + where());
            }
        } else if (section == "constants") {
            if (key == "C_d")
                cfg.constants.C_d = to_double(value, key);
            else if (key == "C_dd")
                cfg.constants.C_dd = to_double(value, key);
            else if (key == "alpha")
                cfg.constants.alpha_override = to_double(value, key);
            else if (key == "C_shape")
                cfg.constants.C_shape = to_double(value, key);
            else if (key == "c_shape")
                cfg.constants.c_shape = to_double(value, key);
            else if (key == "C1_cf")
                cfg.constants.C1_cf = to_double(value, key);
            else if (key == "c_cf")
                cfg.constants.c_cf = to_double(value, key);
            else if (key == "p_vec")
                cfg.constants.p_vec = to_double(value, key);
            else if (key.rfind("source.", 0) == 0)
                cfg.constants.sources[key.substr(7)] = value;
            else
                throw std::invalid_argument("config: unknown constants key '" + key + "' at " +
                                            where());
        } else if (section == "family") {
            if (key == "N")
                cfg.family.N = int(to_long(value, key));
            else if (key == "law")
                cfg.family.default_law = value;
            else if (key.rfind("law.", 0) == 0) {
                const auto rest = key.substr(4);
                const auto dot = rest.find('.');
                if (dot == std::string::npos)
                    throw std::invalid_argument("config: family override needs law.<n>.<j> at " +
                                                where());
                const int n = int(to_long(rest.substr(0, dot), key));
                const int j = int(to_long(rest.substr(dot + 1), key));
                cfg.family.overrides[{n, j}] = value;
            } else
                throw std::invalid_argument("config: unknown family key '" + key + "' at " +
                                            where());
        } else if (section == "coeffs") {
            if (key == "source")
                cfg.coeffs.source = value;
            else if (key == "file")
                cfg.coeffs.file = value;
            else if (key == "n_max")
                cfg.coeffs.n_max = int(to_long(value, key));
            else if (key == "d")
                cfg.coeffs.d = int(to_long(value, key));
            else if (key == "k_star")
                cfg.coeffs.k_star = int(to_long(value, key));
            else if (key == "N")
                cfg.coeffs.N = int(to_long(value, key));
            else if (key == "target_norm")
                cfg.coeffs.target_norm = to_double(value, key);
            else if (key == "density")
                cfg.coeffs.density = to_double(value, key);
            else if (key == "gen_seed")
                cfg.coeffs.gen_seed = std::uint64_t(to_long(value, key));
            else
                throw std::invalid_argument("config: unknown coeffs key '" + key + "' at " +
                                            where());
        } else {  // params
            cfg.params[key] = value;
        }
    }
    if (!scenario_seen) throw std::invalid_argument("config: missing required key 'scenario'");
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    const auto& allowed = kAllowedParams.at(scenario);
    for (const auto& [key, value] : params)
        if (!allowed.count(key))
            throw std::invalid_argument("config: unknown param '" + key + "' for scenario " +
                                        scenario_name(scenario));
    if (samples < 10'000)
        throw std::invalid_argument("config: samples below the 1e4 scenario minimum");
    if (bootstrap < 0 || threads < 0)
        throw std::invalid_argument("config: bootstrap/threads must be nonnegative");
    constants.validate();
    if (coeffs.source == "file" && !std::filesystem::exists(coeffs.file))
        throw std::invalid_argument("config: coefficient file does not exist: " + coeffs.file);
    (void)family.build();  // law texts must parse and certify
    if (coeffs.source != "file") (void)coeffs.build();
    if (param_int("mc_draws", 100'000) < 10'000)
        throw std::invalid_argument("config: mc_draws below the 1e4 minimum");
}

std::string ExperimentConfig::echo() const {
    std::ostringstream os;
    os << "scenario = " << scenario_name(scenario) << "\n";
    os << "seed = " << seed << "\n";
    os << "samples = " << samples << "\n";
    os << "bootstrap = " << bootstrap << "\n";
    os << "threads = " << threads << "\n";
    os << "out_dir = " << out_dir << "\n";
    os << "format = " << (format == ReportFormat::Csv ? "csv" : "structured") << "\n";
    os << "\n[constants]\n";
    os << "C_d = " << constants.C_d << "\n";
    os << "C_dd = " << constants.C_dd << "\n";
    if (constants.alpha_override) os << "alpha = " << *constants.alpha_override << "\n";
    os << "C_shape = " << constants.C_shape << "\n";
    os << "c_shape = " << constants.c_shape << "\n";
    os << "C1_cf = " << constants.C1_cf << "\n";
    os << "c_cf = " << constants.c_cf << "\n";
    if (constants.p_vec) os << "p_vec = " << *constants.p_vec << "\n";
    for (const auto& [name, tag] : constants.sources)
        os << "source." << name << " = " << tag << "\n";
    os << "\n[family]\n";
    os << "N = " << family.N << "\n";
    os << "law = " << family.default_law << "\n";
    for (const auto& [nj, text] : family.overrides)
        os << "law." << nj.first << "." << nj.second << " = " << text << "\n";
    os << "\n[coeffs]\n";
    os << "source = " << coeffs.source << "\n";
    if (!coeffs.file.empty()) os << "file = " << coeffs.file << "\n";
    os << "n_max = " << coeffs.n_max << "\n";
    os << "d = " << coeffs.d << "\n";
    os << "k_star = " << coeffs.k_star << "\n";
    os << "N = " << coeffs.N << "\n";
    os << "target_norm = " << coeffs.target_norm << "\n";
    os << "density = " << coeffs.density << "\n";
    os << "gen_seed = " << coeffs.gen_seed << "\n";
    if (!params.empty()) {
        os << "\n[params]\n";
        for (const auto& [key, value] : params) os << key << " = " << value << "\n";
    }
    return os.str();
}

long ExperimentConfig::param_int(const std::string& key, long def) const {
    const auto it = params.find(key);
    return it == params.end() ? def : to_long(it->second, key);
}

double ExperimentConfig::param_double(const std::string& key, double def) const {
    const auto it = params.find(key);
    return it == params.end() ? def : to_double(it->second, key);
}

bool ExperimentConfig::param_bool(const std::string& key, bool def) const {
    const auto it = params.find(key);
    if (it == params.end()) return def;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::invalid_argument("config: bad bool for '" + key + "'");
}

std::string ExperimentConfig::param_string(const std::string& key,
                                           const std::string& def) const {
    const auto it = params.find(key);
    return it == params.end() ? def : it->second;
}

std::vector<double> ExperimentConfig::param_list(const std::string& key,
                                                 std::vector<double> def) const {
    const auto it = params.find(key);
    if (it == params.end()) return def;
    std::vector<double> out;
    for (const auto& tok : tokenize(it->second)) out.push_back(to_double(tok, key));
    if (out.empty()) throw std::invalid_argument("config: empty list for '" + key + "'");
    return out;
}

}  // namespace polydist
