#include "aladin/experiments.hpp"

#include <algorithm>
#include <fstream>

#include "aladin/errors.hpp"
#include "aladin/mhe.hpp"
#include "aladin/trace_io.hpp"
#include "json.hpp"

namespace aladin {

namespace {

using nlohmann::json;

struct Instance {
  DistributedProblem problem;
  std::vector<Vec> y0;
};

Instance make_instance(const ExperimentSpec& spec, int N) {
  if (spec.problem_file) {
    Instance inst{load_problem_file(spec.problem_file->string()), {}};
    inst.problem.rho = spec.rho;
    for (const auto& node : inst.problem.nodes) inst.y0.push_back(Vec::Zero(node.n));
    return inst;
  }
  auto bench = mhe::make_benchmark(spec.seed, spec.L, N, spec.rho, {}, std::max(60, spec.L));
  return {std::move(bench.split.problem), std::move(bench.y0)};
}

RunConfig config_for(const ExperimentSpec& spec, Variant v, const std::vector<Vec>& y0) {
  RunConfig cfg;
  cfg.variant = v;
  cfg.max_iters = spec.iters;
  cfg.rho = spec.rho;
  cfg.seed = spec.seed;
  cfg.y0 = y0;
  return cfg;
}

Trace run_variant(const DistributedProblem& problem, const RunConfig& cfg,
                  const std::optional<std::vector<Vec>>& reference) {
  try {
    return run(problem, cfg, reference);
  } catch (const AladinError& e) {
    throw NumericalError("variant " + std::string(variant_name(cfg.variant)) + ": " + e.what());
  }
}

json optional_json(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text << '\n';
}

}  // namespace

void ExperimentSpec::validate() const {
  if (variants.empty()) throw ConfigError("no variants selected");
  if (L < 2) throw ConfigError("L must be at least 2");
  if (!problem_file && (N < 2 || N > L)) throw ConfigError("N must lie in [2, L]");
  for (int n : N_list)
    if (n < 2 || n > L) throw ConfigError("every entry of the N list must lie in [2, L]");
  if (iters < 1) throw ConfigError("iters must be at least 1");
  if (!(rho > 0.0)) throw ConfigError("rho must be positive");
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
}

std::string ExperimentSpec::to_json(int indent) const {
  json j;
  j["variants"] = json::array();
  for (Variant v : variants) j["variants"].push_back(std::string(variant_name(v)));
  j["L"] = L;
  j["N"] = N;
  j["N_list"] = N_list;
  j["iters"] = iters;
  j["seed"] = seed;
  j["rho"] = rho;
  j["repetitions"] = repetitions;
  j["out"] = out.string();
  j["problem_file"] = problem_file ? json(problem_file->string()) : json(nullptr);
  return j.dump(indent);
}

std::optional<int> first_below(const Trace& trace, double tol) {
  for (const auto& r : trace.records)
    if (r.err_to_ref <= tol) return r.k;
  return std::nullopt;
}

VariantSummary summarize(const Trace& trace) {
  VariantSummary s;
  s.variant = trace.variant;
  s.iters_to_1e6 = first_below(trace, 1e-6);
  s.iters_to_1e8 = first_below(trace, 1e-8);
  s.trigger_iterations = trace.trigger_iterations();
  s.init_uplink_scalars = trace.init_uplink_scalars;
  s.local_warnings = trace.warnings.size();
  if (!trace.records.empty()) {
    s.final_err = trace.records.back().err_to_ref;
    s.best_err = s.final_err;
    s.uplink_per_iter = trace.records.front().uplink_scalars;
  }
  for (const auto& r : trace.records) {
    s.total_coord_ns += r.coord_wall_ns;
    s.best_err = std::min(s.best_err, r.err_to_ref);
  }
  return s;
}

ConvergenceResult run_convergence(const ExperimentSpec& spec) {
  spec.validate();
  Instance inst = make_instance(spec, spec.N);
  ConvergenceResult result;
  result.spec = spec;
  result.reference = centralized_solve(inst.problem, stack(inst.y0));
  if (!result.reference.converged)
    throw NumericalError("reference solve stopped at |KKT| = " +
                         std::to_string(result.reference.kkt_residual));
  for (Variant v : spec.variants) {
    result.traces.push_back(
        run_variant(inst.problem, config_for(spec, v, inst.y0), result.reference.x));
    result.summaries.push_back(summarize(result.traces.back()));
  }
  return result;
}

void write_convergence(const ConvergenceResult& result, const std::filesystem::path& dir) {
  for (const auto& trace : result.traces)
    write_trace_files(trace, dir, std::string(variant_name(trace.variant)));

  json j;
  j["spec"] = json::parse(result.spec.to_json());
  j["reference"] = {{"kkt_residual", result.reference.kkt_residual},
                    {"newton_steps", result.reference.newton_steps}};
  j["variants"] = json::array();
  for (const auto& s : result.summaries) {
    j["variants"].push_back({{"variant", std::string(variant_name(s.variant))},
                             {"iters_to_1e-6", optional_json(s.iters_to_1e6)},
                             {"iters_to_1e-8", optional_json(s.iters_to_1e8)},
                             {"final_err", s.final_err},
                             {"best_err", s.best_err},
                             {"trigger_iterations", s.trigger_iterations},
                             {"total_coord_ns", s.total_coord_ns},
                             {"uplink_scalars_per_iter", s.uplink_per_iter},
                             {"init_uplink_scalars", s.init_uplink_scalars},
                             {"local_warnings", s.local_warnings}});
  }
  write_text(dir / "summary.json", j.dump(2));
}

std::int64_t median(std::vector<std::int64_t> values) {
  if (values.empty()) throw DomainError("median of an empty list");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const auto lower = *std::max_element(values.begin(), mid);
  return lower + (*mid - lower) / 2;
}

const TimingCell& TimingResult::at(int N, Variant v) const {
  for (const auto& c : cells)
    if (c.N == N && c.variant == v) return c;
  throw DomainError("no timing cell for N = " + std::to_string(N) + ", variant " +
                    std::string(variant_name(v)));
}

double TimingResult::ratio(int N, Variant num, Variant den) const {
  return static_cast<double>(at(N, num).median_total) /
         static_cast<double>(at(N, den).median_total);
}

TimingResult run_timing(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.problem_file) throw ConfigError("timing runs on the MHE benchmark only");
  TimingResult result;
  result.spec = spec;
  for (int N : spec.N_list) {
    const Instance inst = make_instance(spec, N);
    std::vector<TimingCell> row;
    std::vector<std::vector<std::int64_t>> per_iteration(spec.variants.size());
    for (Variant v : spec.variants) row.push_back(TimingCell{N, v, {}, 0, 0});

    for (Variant v : spec.variants) run_variant(inst.problem, config_for(spec, v, inst.y0), {});
    for (int rep = 0; rep < spec.repetitions; ++rep) {
      for (std::size_t j = 0; j < spec.variants.size(); ++j) {
        const Trace t =
            run_variant(inst.problem, config_for(spec, spec.variants[j], inst.y0), std::nullopt);
        std::int64_t total = 0;
        for (const auto& r : t.records) {
          total += r.coord_wall_ns;
          per_iteration[j].push_back(r.coord_wall_ns);
        }
        row[j].totals.push_back(total);
      }
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j].median_total = median(row[j].totals);
      row[j].median_iteration = median(per_iteration[j]);
      result.cells.push_back(std::move(row[j]));
    }
  }
  return result;
}

void write_timing(const TimingResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string());

  std::ofstream csv(dir / "timing.csv");
  if (!csv) throw ConfigError("cannot write timing.csv");
  csv << "N,variant,median_total_ns,median_iteration_ns";
  for (int r = 1; r <= result.spec.repetitions; ++r) csv << ",rep" << r << "_total_ns";
  csv << '\n';
  for (const auto& c : result.cells) {
    csv << c.N << ',' << variant_name(c.variant) << ',' << c.median_total << ','
        << c.median_iteration;
    for (auto t : c.totals) csv << ',' << t;
    csv << '\n';
  }

  json j;
  j["spec"] = json::parse(result.spec.to_json());
  j["cells"] = json::array();
  for (const auto& c : result.cells)
    j["cells"].push_back({{"N", c.N},
                          {"variant", std::string(variant_name(c.variant))},
                          {"median_total_ns", c.median_total},
                          {"median_iteration_ns", c.median_iteration},
                          {"totals_ns", c.totals}});
  auto has = [&](Variant v) {
    return std::find(result.spec.variants.begin(), result.spec.variants.end(), v) !=
           result.spec.variants.end();
  };
  j["ratios"] = json::array();
  for (int N : result.spec.N_list) {
    json r = {{"N", N}};
    if (has(Variant::RtGaussNewton) && has(Variant::GaussNewton))
      r["rt-gn/gn"] = result.ratio(N, Variant::RtGaussNewton, Variant::GaussNewton);
    if (has(Variant::RtAdjointBFGS) && has(Variant::AdjointBFGS))
      r["rt-abfgs/abfgs"] = result.ratio(N, Variant::RtAdjointBFGS, Variant::AdjointBFGS);
    j["ratios"].push_back(r);
  }
  write_text(dir / "timing.json", j.dump(2));
}

}  // namespace aladin
