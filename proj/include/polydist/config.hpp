#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "polydist/bounds.hpp"
#include "polydist/coeffs.hpp"
#include "polydist/randvec.hpp"
#include "polydist/types.hpp"

namespace polydist {

enum class Scenario {
    T1Verify,
    T2Scaling,
    T3Scaling,
    Invariance,
    BernoulliTail,
    L1Variance,
    ShiftRegularity,
    CfDecay,
    EstimatorCalibration,
};

std::string scenario_name(Scenario s);
Scenario parse_scenario(const std::string& name);

enum class ReportFormat { Csv, Structured };

// Law text grammar: "uniform LO HI" | "gaussian MEAN SD" | "laplace LOC SCALE"
// | "atoms X1 W1 [X2 W2 ...]" | "mixture P ALPHA X0 <residual law...>".
ScalarLaw parse_law(const std::string& text);

struct FamilySpec {
    int N = 1;
    std::string default_law = "uniform -1 1";
    std::map<std::pair<int, int>, std::string> overrides;  // (n, j) -> law text

    VectorFamily build() const;
};

struct CoeffSpec {
    std::string source = "uniform-spread";  // uniform-spread | sparse-random | file
    std::string file;
    int n_max = 20;
    int d = 2;
    int k_star = 1;
    int N = 1;
    double target_norm = 1.0;
    double density = 0.1;
    std::uint64_t gen_seed = 1;

    CoefficientCollection build() const;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::EstimatorCalibration;
    std::uint64_t seed = 1;
    Index samples = 1'000'000;
    int bootstrap = 200;
    int threads = 0;  // 0 = hardware concurrency
    std::string out_dir = "out";
    ReportFormat format = ReportFormat::Csv;
    ConstantsConfig constants;
    FamilySpec family;
    CoeffSpec coeffs;
    std::map<std::string, std::string> params;  // per-scenario extras, schema-checked

    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_text(const std::string& text, const std::string& origin);

    void validate() const;  // throws std::invalid_argument with the offending key
    std::string echo() const;  // canonical config text; parseable back

    // typed access to [params] with defaults
    long param_int(const std::string& key, long def) const;
    double param_double(const std::string& key, double def) const;
    bool param_bool(const std::string& key, bool def) const;
    std::string param_string(const std::string& key, const std::string& def) const;
    std::vector<double> param_list(const std::string& key, std::vector<double> def) const;
};

}  // namespace polydist
