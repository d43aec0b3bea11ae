#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aladin/local_solver.hpp"
#include "aladin/runtime.hpp"

namespace aladin {

/// Everything that determines an experiment. Output files embed it.
struct ExperimentSpec {
  std::vector<Variant> variants{std::begin(kAllVariants), std::end(kAllVariants)};
  int L = 25;
  int N = 4;
  std::vector<int> N_list{3, 4, 5, 6};  // timing only
  int iters = 50;
  std::uint64_t seed = 7;
  double rho = 25.0;
  int repetitions = 5;  // timing only
  std::filesystem::path out = "out";
  // Quadratic/affine JSON problem to use instead of the MHE benchmark
  // (convergence only; the initial guess is zero).
  std::optional<std::filesystem::path> problem_file;

  /// Throws ConfigError on values outside their domain.
  void validate() const;
  std::string to_json(int indent = 2) const;
};

struct VariantSummary {
  Variant variant = Variant::AdjointBFGS;
  std::optional<int> iters_to_1e6;  // first k with err_to_ref <= 1e-6
  std::optional<int> iters_to_1e8;
  double final_err = 0.0;
  double best_err = 0.0;
  std::vector<int> trigger_iterations;
  std::int64_t total_coord_ns = 0;
  std::int64_t uplink_per_iter = 0;
  std::int64_t init_uplink_scalars = 0;
  std::size_t local_warnings = 0;
};

struct ConvergenceResult {
  ExperimentSpec spec;
  CentralizedSolution reference;
  std::vector<Trace> traces;  // in spec.variants order
  std::vector<VariantSummary> summaries;
};

/// First iteration whose err_to_ref is at or below `tol`.
std::optional<int> first_below(const Trace& trace, double tol);
VariantSummary summarize(const Trace& trace);

/// Runs every requested variant on one instance against one reference.
/// Runtime failures are rethrown as NumericalError naming the variant.
ConvergenceResult run_convergence(const ExperimentSpec& spec);
/// <dir>/<variant>.csv, <dir>/<variant>.json and <dir>/summary.json.
void write_convergence(const ConvergenceResult& result, const std::filesystem::path& dir);

struct TimingCell {
  int N = 0;
  Variant variant = Variant::AdjointBFGS;
  std::vector<std::int64_t> totals;  // summed coord_wall_ns, one per repetition
  std::int64_t median_total = 0;
  std::int64_t median_iteration = 0;  // over all iterations of all repetitions
};

struct TimingResult {
  ExperimentSpec spec;
  std::vector<TimingCell> cells;

  const TimingCell& at(int N, Variant v) const;
  /// median_total(num) / median_total(den) at N.
  double ratio(int N, Variant num, Variant den) const;
};

/// For each N and variant, `repetitions` runs of `iters` iterations on the
/// MHE benchmark. Repetitions are interleaved across variants so slow drifts
/// in machine load hit every variant alike; one untimed pass warms caches.
TimingResult run_timing(const ExperimentSpec& spec);
/// <dir>/timing.csv and <dir>/timing.json.
void write_timing(const TimingResult& result, const std::filesystem::path& dir);

std::int64_t median(std::vector<std::int64_t> values);

}  // namespace aladin
