#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "polydist/bounds.hpp"
#include "polydist/harness.hpp"
#include "polydist/metrics.hpp"
#include "polydist/report.hpp"

using namespace polydist;

namespace {

void apply_overrides(ExperimentConfig& cfg, long seed, long samples, const std::string& out_dir,
                     long threads, const std::string& format) {
    if (seed >= 0) cfg.seed = std::uint64_t(seed);
    if (samples > 0) cfg.samples = Index(samples);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads >= 0) cfg.threads = int(threads);
    if (format == "csv") cfg.format = ReportFormat::Csv;
    if (format == "structured") cfg.format = ReportFormat::Structured;
}

int do_run(const std::string& config_path, long seed, long samples, const std::string& out_dir,
           long threads, const std::string& format) {
    ExperimentConfig cfg = ExperimentConfig::parse_file(config_path);
    apply_overrides(cfg, seed, samples, out_dir, threads, format);
    cfg.validate();
    const RunResult result = run(cfg);
    for (const auto& c : result.report.checks) {
        std::printf("[%s] %s (%s) %s: lhs=%s rhs=%s margin=%s\n",
                    c.status == "pass"   ? "PASS"
                    : c.status == "fail" ? "FAIL"
                                         : "INFO",
                    c.id.c_str(), c.tier.c_str(), c.name.c_str(), format_double(c.lhs).c_str(),
                    format_double(c.rhs).c_str(), format_double(c.margin).c_str());
    }
    std::printf("%s: %s\n", result.report.all_asserted_passed() ? "OK" : "FAILED",
                (cfg.out_dir + "/checks.csv").c_str());
    return result.exit_code;
}

int do_validate(const std::string& config_path) {
    const ExperimentConfig cfg = ExperimentConfig::parse_file(config_path);
    std::printf("OK: %s (scenario %s)\n", config_path.c_str(),
                scenario_name(cfg.scenario).c_str());
    return 0;
}

int do_constants() {
    std::printf("k,c_k,C_k\n");
    for (int k = 0; k <= 10; ++k)
        std::printf("%d,%s,%s\n", k, format_double(smoothing_constant(k)).c_str(),
                    format_double(smoothing_constant_max(k)).c_str());
    return 0;
}

int do_enumerate_tail(int n, int d, double p, double theta, const std::string& coeff_file,
                      long mc_draws, long mc_seed) {
    CoefficientCollection c = [&] {
        if (!coeff_file.empty()) {
            std::ifstream in(coeff_file);
            if (!in) throw std::invalid_argument("cannot open " + coeff_file);
            return CoefficientCollection::load(in);
        }
        // default: the all-ones table over the C(n, d) index subsets
        CoefficientCollection all(d, 1, 1, n);
        std::vector<int> combo(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) combo[std::size_t(i)] = i + 1;
        while (true) {
            MonomialKey key;
            for (int i = 0; i < d; ++i) key.push_back({combo[std::size_t(i)], 1, 1});
            all.set(key, 1.0);
            int i = d - 1;
            while (i >= 0 && combo[std::size_t(i)] == n - (d - 1 - i)) --i;
            if (i < 0) break;
            ++combo[std::size_t(i)];
            for (int q = i + 1; q < d; ++q) combo[std::size_t(q)] = combo[std::size_t(q - 1)] + 1;
        }
        return all;
    }();
    const double exact = exact_bernoulli_tail(c, p, theta);
    std::printf("exact = %s\n", format_double(exact).c_str());
    const double ns = norm_m(c, c.degree());
    const double upper = std::pow(p / 2.0, c.degree()) * ns * ns;
    if (theta > 0 && theta < upper) {
        std::printf("bound = %s\n", format_double(bound_bernoulli_tail(c, p, theta)).c_str());
    } else {
        std::printf("bound = n/a (theta outside (0, %s))\n", format_double(upper).c_str());
    }
    if (mc_draws > 0) {
        const auto mc = mc_bernoulli_tail(c, p, theta, mc_draws, std::uint64_t(mc_seed));
        std::printf("mc = %s [%s, %s] (%ld draws)\n", format_double(mc.estimate).c_str(),
                    format_double(mc.ci_low).c_str(), format_double(mc.ci_high).c_str(),
                    mc_draws);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polydist: numerical verification lab for stochastic polynomial distances"};
    app.require_subcommand(1);

    std::string config_path, out_dir, format;
    long seed = -1, samples = -1, threads = -1;

    auto* run_cmd = app.add_subcommand("run", "run an experiment config");
    run_cmd->add_option("config", config_path, "experiment config file")->required();
    run_cmd->add_option("--seed", seed, "override the config seed");
    run_cmd->add_option("--samples", samples, "override the per-distribution sample budget");
    run_cmd->add_option("--out-dir", out_dir, "override the output directory");
    run_cmd->add_option("--threads", threads, "worker threads (0 = auto)");
    run_cmd->add_option("--format", format, "report format: csv | structured")
        ->check(CLI::IsMember({"csv", "structured", ""}));

    auto* validate_cmd = app.add_subcommand("validate", "validate an experiment config");
    validate_cmd->add_option("config", config_path, "experiment config file")->required();

    app.add_subcommand("constants", "print the smoothing constants c_k / C_k table");

    int en_n = 4, en_d = 2;
    double en_p = 0.5, en_theta = 0.3;
    std::string en_coeffs;
    long en_mc = 0, en_mc_seed = 1;
    auto* enum_cmd =
        app.add_subcommand("enumerate-tail", "exact Bernoulli small-ball tail oracle");
    enum_cmd->add_option("--n", en_n, "number of Bernoulli variables (<= 24)");
    enum_cmd->add_option("--d", en_d, "monomial degree");
    enum_cmd->add_option("--p", en_p, "success probability");
    enum_cmd->add_option("--theta", en_theta, "threshold");
    enum_cmd->add_option("--coeffs", en_coeffs, "coefficient file (default: all-ones table)");
    enum_cmd->add_option("--mc-draws", en_mc, "also run the Monte-Carlo oracle");
    enum_cmd->add_option("--mc-seed", en_mc_seed, "Monte-Carlo seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("run"))
            return do_run(config_path, seed, samples, out_dir, threads, format);
        if (app.got_subcommand("validate")) return do_validate(config_path);
        if (app.got_subcommand("constants")) return do_constants();
        if (app.got_subcommand("enumerate-tail"))
            return do_enumerate_tail(en_n, en_d, en_p, en_theta, en_coeffs, en_mc, en_mc_seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
