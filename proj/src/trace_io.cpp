#include "aladin/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "aladin/errors.hpp"
#include "json.hpp"

namespace aladin {

namespace {

using nlohmann::json;

std::string real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json config_to_json(const RunConfig& cfg) {
  json j;
  j["variant"] = std::string(variant_name(cfg.variant));
  j["max_iters"] = cfg.max_iters;
  j["rho"] = cfg.rho ? json(*cfg.rho) : json(nullptr);
  j["lambda0"] = vec_json(cfg.lambda0);
  j["y0"] = json::array();
  for (const auto& y : cfg.y0) j["y0"].push_back(vec_json(y));
  j["seed"] = cfg.seed;
  j["stop_tol"] = cfg.stop_tol;
  j["gn_eigen_floor"] = cfg.gn_eigen_floor;
  j["bfgs_guard"] = cfg.bfgs_guard;
  j["adjoint_guard"] = cfg.adjoint_guard;
  j["accumulate_diffs"] = cfg.accumulate_diffs;
  j["qp_gradient"] = cfg.qp_gradient == QpGradient::Lagrangian ? "lagrangian" : "objective";
  j["threads"] = cfg.threads;
  j["local"] = {{"kkt_tol", cfg.local_cfg.kkt_tol},
                {"max_newton_steps", cfg.local_cfg.max_newton_steps},
                {"regularization_floor", cfg.local_cfg.regularization_floor},
                {"backtracking", cfg.local_cfg.backtracking},
                {"min_step", cfg.local_cfg.min_step}};
  return j;
}

}  // namespace

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.k << ',' << real(r.err_to_ref) << ',' << real(r.coupling_res) << ','
        << real(r.local_feas) << ',' << (r.triggered ? 1 : 0) << ',' << r.uplink_scalars << ','
        << r.coord_wall_ns << '\n';
  }
}

std::string run_config_json(const RunConfig& cfg, int indent) {
  return config_to_json(cfg).dump(indent);
}

std::string trace_json(const Trace& trace, int indent) {
  json j;
  j["config"] = config_to_json(trace.config);
  j["iterations"] = trace.records.size();
  j["trigger_iterations"] = trace.trigger_iterations();
  j["init_uplink_scalars"] = trace.init_uplink_scalars;
  j["lambda_history"] = json::array();
  for (const auto& r : trace.records) j["lambda_history"].push_back(vec_json(r.lambda));
  j["warnings"] = trace.warnings;
  return j.dump(indent);
}

void write_trace_files(const Trace& trace, const std::filesystem::path& dir,
                       const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::ofstream csv(dir / (stem + ".csv"));
  std::ofstream side(dir / (stem + ".json"));
  if (!csv || !side) throw ConfigError("cannot write trace files under " + dir.string());
  write_trace_csv(trace, csv);
  side << trace_json(trace) << '\n';
}

}  // namespace aladin
