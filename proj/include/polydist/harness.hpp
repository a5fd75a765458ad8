#pragma once

#include "polydist/config.hpp"
#include "polydist/polyeval.hpp"
#include "polydist/report.hpp"

namespace polydist {

struct RunResult {
    RunReport report;
    int exit_code;  // 0 = asserted checks pass, 1 = an asserted check failed
};

// Executes the scenario end-to-end and writes checks.csv (plus report.txt for
// the structured format) and the per-scenario CSVs into cfg.out_dir.
// Configuration problems throw before anything is written.
RunResult run(const ExperimentConfig& cfg);

// Blockwise sample-then-evaluate drivers; memory stays flat in the draw count
// and the result is independent of the block/thread partition.
ArrayXd evaluate_sampled(const CoefficientCollection& a, const VectorFamily& family,
                         const MomentTable& moments, Index count, std::uint64_t seed,
                         int threads);
ArrayXd evaluate_multilinear_sampled(const CoefficientCollection& a, const VectorFamily& family,
                                     Index count, std::uint64_t seed, int threads);
ArrayXd chaos_sampled(const CoefficientCollection& a, const GaussianCounterpart& gc, Index count,
                      std::uint64_t seed, int threads);

// D(s) for f(V) = V^power, V uniform on [-1,1], via the streaming histogram
// (max over the +-s shifts); used by the shift scenario and C(d) calibration.
double shift_modulus_stream(int power, double s, Index count, std::uint64_t seed, int threads);

// Upper-envelope calibration of the shift-regularity constant C(d) from a
// fitted D(s) table: max over s of D(s) * Var(V^d)^{1/(2d)} / s^{1/d}.
double calibrate_shift_constant(int power, const std::vector<double>& s_grid,
                                const std::vector<double>& d_values);

}  // namespace polydist
