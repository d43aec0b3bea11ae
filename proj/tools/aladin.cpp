#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aladin/errors.hpp"
#include "aladin/experiments.hpp"
#include "aladin/verify.hpp"

namespace {

enum ExitCode { kOk = 0, kVerifyFailed = 1, kUsage = 2, kNumerical = 3 };

std::vector<aladin::Variant> parse_variants(const std::string& text) {
  if (text == "all") return {std::begin(aladin::kAllVariants), std::end(aladin::kAllVariants)};
  std::vector<aladin::Variant> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = aladin::parse_variant(item);
    if (!v) throw aladin::ConfigError("unknown variant '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

void print_convergence(const aladin::ConvergenceResult& r) {
  auto fmt = [](const std::optional<int>& k) { return k ? std::to_string(*k) : std::string("-"); };
  std::printf("reference |KKT| = %.3e after %d Newton steps\n", r.reference.kkt_residual,
              r.reference.newton_steps);
  std::printf("%-9s %8s %8s %12s %12s  triggers\n", "variant", "k<=1e-6", "k<=1e-8", "final err",
              "coord ms");
  for (const auto& s : r.summaries) {
    std::string triggers;
    for (int k : s.trigger_iterations) triggers += (triggers.empty() ? "" : ",") + std::to_string(k);
    std::printf("%-9s %8s %8s %12.3e %12.3f  {%s}\n", std::string(aladin::variant_name(s.variant)).c_str(),
                fmt(s.iters_to_1e6).c_str(), fmt(s.iters_to_1e8).c_str(), s.final_err,
                static_cast<double>(s.total_coord_ns) * 1e-6, triggers.c_str());
  }
}

void print_timing(const aladin::TimingResult& r) {
  std::printf("%-3s %-9s %14s %16s\n", "N", "variant", "median ms", "median iter us");
  for (const auto& c : r.cells)
    std::printf("%-3d %-9s %14.3f %16.2f\n", c.N, std::string(aladin::variant_name(c.variant)).c_str(),
                static_cast<double>(c.median_total) * 1e-6, static_cast<double>(c.median_iteration) * 1e-3);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed ALADIN variants on a time-split moving-horizon estimation benchmark"};
  app.require_subcommand(1);

  aladin::ExperimentSpec spec;
  std::string variants = "all";
  std::string problem;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--L", spec.L, "horizon length")->capture_default_str();
    cmd->add_option("--iters", spec.iters, "ALADIN iterations per run")->capture_default_str();
    cmd->add_option("--seed", spec.seed, "measurement-noise seed")->capture_default_str();
    cmd->add_option("--rho", spec.rho, "proximal weight")->capture_default_str();
    cmd->add_option("--variants", variants, "gn,abfgs,rt-gn,rt-abfgs or all")->capture_default_str();
    cmd->add_option("--out", spec.out, "output directory")->capture_default_str();
  };

  auto* convergence = app.add_subcommand("convergence", "error-to-reference traces per variant");
  add_common(convergence);
  convergence->add_option("--N", spec.N, "sub-windows")->capture_default_str();
  convergence->add_option("--problem", problem, "quadratic/affine JSON problem instead of the MHE benchmark");

  auto* timing = app.add_subcommand("timing", "coordination wall time across N");
  add_common(timing);
  timing->add_option("--N-list", spec.N_list, "sub-window counts")->delimiter(',')->capture_default_str();
  timing->add_option("--repetitions", spec.repetitions, "timed repetitions per cell")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "oracle, quasi-Newton, trigger, accounting and split suites");
  verify->add_option("--seed", spec.seed, "seed for randomized suites")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*verify) {
      aladin::VerifyOptions opts;
      opts.seed = spec.seed;
      opts.on_result = [](const aladin::CheckResult& c) {
        std::printf("%s  %s (%s)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        std::fflush(stdout);
      };
      const auto report = aladin::run_verify(opts);
      if (const auto* f = report.first_failure()) {
        std::fprintf(stderr, "verify failed: %s\n", f->name.c_str());
        return kVerifyFailed;
      }
      std::printf("all %zu checks passed\n", report.checks.size());
      return kOk;
    }

    spec.variants = parse_variants(variants);
    if (!problem.empty()) spec.problem_file = problem;
    if (*convergence) {
      const auto result = aladin::run_convergence(spec);
      aladin::write_convergence(result, spec.out);
      print_convergence(result);
    } else {
      const auto result = aladin::run_timing(spec);
      aladin::write_timing(result, spec.out);
      print_timing(result);
    }
    std::printf("wrote %s\n", spec.out.string().c_str());
    return kOk;
  } catch (const aladin::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const aladin::LayoutError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const aladin::DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  }
}
