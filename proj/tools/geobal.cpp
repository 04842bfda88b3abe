// geobal command-line driver.
//
// Exit codes: 0 success, 1 domain error (violations, infeasible solve, hash
// mismatch), 2 usage error (bad flags, missing files, malformed input).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geobal/geobal.hpp"

namespace fs = std::filesystem;
using namespace geobal;

namespace {

struct Flags {
  std::string manifest;
  std::string state;
  std::vector<std::string> factors;
  int workers = 0;
  std::uint64_t seed = 1;
  std::string out;
  std::string mps_out;
  int countries = 2;
  std::size_t hours = 336;
  double correlation = -0.9;
};

/// A system manifest or a run manifest, told apart by their format field.
struct Input {
  PowerSystemSpec base;
  std::optional<RunManifest> run;
  std::string reference;
};

Input load_input(const std::string& path) {
  if (path.empty()) throw UsageError("--manifest is required");
  const nlohmann::json j = [&]() {
    try {
      return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError(path + ": " + e.what());
    }
  }();
  Input in;
  if (j.is_object() && j.value("format", std::string()) == kRunFormat) {
    in.run = read_run_manifest(path);
    in.base = read_system(in.run->system);
    in.reference = in.run->reference_country;
  } else {
    in.base = read_system(path);
    if (!in.base.countries.empty()) in.reference = in.base.countries.front().code;
  }
  return in;
}

void require_valid(const PowerSystemSpec& spec) {
  const auto v = validate(spec);
  if (v.empty()) return;
  for (const auto& e : v) std::cerr << e.str() << '\n';
  throw Error("system has " + std::to_string(v.size()) + " violation(s)");
}

/// The harmonized system for --state; without --state the system as given.
PowerSystemSpec scenario_spec(const Input& in, const std::string& state,
                              const SolverOptions& options) {
  require_valid(in.base);
  if (state.empty()) return in.base;
  const FactorState s = FactorState::parse(state);
  const bool harmonizes = (s.mask() | factor_bit(Factor::interconnection)) != kAllFactorsMask;
  ReferenceShares shares;
  if (harmonizes) shares = derive_reference_shares(in.base, in.reference, options);
  return apply_factor_state(in.base, s, shares);
}

SolverOptions solver_options(const Input& in) { return in.run ? in.run->solver : SolverOptions{}; }

void print_metrics(const ScenarioMetrics& m) {
  for (int i = 0; i < kMetricCount; ++i)
    std::cout << metric_name(i) << ' ' << format_double(m.total.values[i]) << '\n';
}

void print_shares(const std::vector<FactorDecomposition>& dec) {
  for (const auto& d : dec) {
    std::cout << d.metric << ": INT " << format_double(d.int_value);
    if (d.shares_suppressed) {
      std::cout << " (shares suppressed)\n";
      continue;
    }
    std::cout << ", baseline " << format_double(*d.baseline_share);
    for (const auto& t : d.totals)
      std::cout << ", " << factor_name(t.factor) << ' ' << format_double(*t.share);
    std::cout << '\n';
  }
}

int cmd_validate(const Flags& f) {
  const Input in = load_input(f.manifest);
  require_valid(in.base);
  return 0;
}

int cmd_solve(const Flags& f) {
  const Input in = load_input(f.manifest);
  const SolverOptions opt = solver_options(in);
  const PowerSystemSpec spec = scenario_spec(in, f.state, opt);
  const AssembledLp built = assemble(spec);
  if (!f.mps_out.empty()) write_text(f.mps_out, write_mps(built.lp));
  const SolveResult r = solve(built.lp, opt);
  std::cout << "status " << to_string(r.status) << '\n';
  if (r.status != SolveStatus::optimal) return 1;
  std::cout << "objective " << format_double(r.objective) << '\n';
  const ScenarioMetrics m = extract_metrics(spec, built.lp, r.primal);
  print_metrics(m);
  if (!f.out.empty()) {
    const fs::path dir(f.out);
    write_text(dir / "solution.csv", solution_csv(built.lp, r.primal));
    write_text(dir / "duals.csv", duals_csv(built.lp, r.duals));
    nlohmann::json j = {{"status", to_string(r.status)},
                        {"objective", r.objective},
                        {"iterations", r.iterations},
                        {"spec_hash", spec_hash(spec)},
                        {"total", detail::metrics_to_json(m.total)},
                        {"line_utilization", m.line_utilization}};
    for (const auto& [code, cm] : m.by_country) j["countries"][code] = detail::metrics_to_json(cm);
    write_text(dir / "metrics.json", j.dump(2) + "\n");
  }
  return 0;
}

RunManifest run_manifest(const Flags& f) {
  const Input in = load_input(f.manifest);
  if (!in.run) throw UsageError(f.manifest + " is not a run manifest");
  RunManifest m = *in.run;
  if (f.workers > 0) m.parallelism = f.workers;
  if (!f.factors.empty()) m.design = Design::from_names(f.factors);
  if (!f.out.empty()) m.output_dir = f.out;
  return m;
}

int cmd_sweep(const Flags& f) {
  const RunManifest m = run_manifest(f);
  const SweepOutcome o = resume(m);
  std::cout << "states " << o.ledger.entries.size() << ", solved now " << o.solves << '\n';
  std::cout << "ledger " << (m.output_dir / "ledger.json").string() << '\n';
  if (m.design.contains(1)) print_shares(decompose_metrics(o.ledger.totals(), o.ledger.design));
  return 0;
}

int cmd_factorize(const Flags& f) {
  const Input in = load_input(f.manifest);
  if (!in.run) throw UsageError(f.manifest + " is not a run manifest");
  const RunLedger ledger = read_ledger(in.run->output_dir / "ledger.json");
  const auto dec = decompose_metrics(ledger.totals(), ledger.design);
  const fs::path dir = f.out.empty() ? in.run->output_dir : fs::path(f.out);
  write_text(dir / "decomposition.csv", decomposition_csv(dec));
  nlohmann::json j = {{"fixture", ledger.fixture},
                      {"reference_country", ledger.reference_country},
                      {"manifest_hash", ledger.manifest_hash},
                      {"metrics", nlohmann::json::array()}};
  for (const auto& d : dec) j["metrics"].push_back(to_json(d));
  write_text(dir / "decomposition.json", j.dump(2) + "\n");
  print_shares(dec);
  return 0;
}

int cmd_residual(const Flags& f) {
  const Input in = load_input(f.manifest);
  ResidualReport rep;
  fs::path dir;
  if (in.run) {
    const RunManifest& m = *in.run;
    const SweepContext ctx = load_context(m);
    const RunLedger ledger = read_ledger(m.output_dir / "ledger.json");
    const FactorState s = FactorState::parse(f.state.empty() ? m.residual_scenario : f.state);
    rep = residual_for_state(ctx, ledger, s);
    dir = f.out.empty() ? m.output_dir / "residual" : fs::path(f.out);
  } else {
    const PowerSystemSpec spec = scenario_spec(in, f.state, {});
    const AssembledLp built = assemble(spec);
    const SolveResult r = solve(built.lp);
    if (r.status != SolveStatus::optimal)
      throw Error(std::string("solve is ") + to_string(r.status));
    rep = analyze_residuals(spec, installed_power(built.lp, r.primal),
                            f.state.empty() ? "as-given" : f.state);
    dir = f.out.empty() ? fs::path("residual") : fs::path(f.out);
  }
  write_residual_report(rep, dir);
  std::cout << "events " << rep.events.size() << ", sum of peaks "
            << format_double(rep.coincidence.sum_of_peaks) << ", system peak "
            << format_double(rep.coincidence.system_peak) << '\n';
  return 0;
}

int cmd_synthesize(const Flags& f) {
  if (f.out.empty()) throw UsageError("--out is required");
  const PowerSystemSpec spec = synthesize_system(f.seed, f.countries, f.hours, f.correlation);
  const fs::path dir(f.out);
  write_system(spec, dir);
  RunManifest m;
  m.system = dir / "system.json";
  m.reference_country = spec.countries.front().code;
  m.fixture = "seed-" + std::to_string(f.seed);
  m.output_dir = dir / "sweep";
  m.parallelism = f.workers > 0 ? f.workers : 1;
  if (!f.factors.empty()) m.design = Design::from_names(f.factors);
  write_text(dir / "run.json", to_json(m, dir).dump(2) + "\n");
  std::cout << (dir / "system.json").string() << '\n' << (dir / "run.json").string() << '\n';
  return 0;
}

int cmd_export_lp(const Flags& f) {
  if (f.mps_out.empty() && f.out.empty()) throw UsageError("--mps-out or --out is required");
  const Input in = load_input(f.manifest);
  const PowerSystemSpec spec = scenario_spec(in, f.state, solver_options(in));
  const AssembledLp built = assemble(spec);
  const std::string name = f.state.empty() ? "GEOBAL" : f.state;
  const fs::path path = f.mps_out.empty() ? fs::path(f.out) / "model.mps" : fs::path(f.mps_out);
  write_text(path, write_mps(built.lp, name));
  std::cout << path.string() << ": " << built.lp.num_columns() << " columns, "
            << built.lp.num_rows() << " rows\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Storage and interconnection factor separation on capacity-expansion LPs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GEOBAL_VERSION);
  Flags f;

  auto manifest = [&](CLI::App* sub, const char* what) {
    sub->add_option("--manifest", f.manifest, what)->required();
  };
  auto state = [&](CLI::App* sub) {
    sub->add_option("--state", f.state, "factor state such as f_0, f_23456 or f_123456");
  };

  auto* validate_cmd = app.add_subcommand("validate", "check a system manifest");
  manifest(validate_cmd, "system or run manifest");

  auto* solve_cmd = app.add_subcommand("solve", "build and solve one scenario");
  manifest(solve_cmd, "system or run manifest");
  state(solve_cmd);
  solve_cmd->add_option("--out", f.out, "directory for solution.csv, duals.csv, metrics.json");
  solve_cmd->add_option("--mps-out", f.mps_out, "also write the LP as MPS");

  auto* sweep_cmd = app.add_subcommand("sweep", "solve every state of a run manifest");
  manifest(sweep_cmd, "run manifest");
  sweep_cmd->add_option("--workers", f.workers, "parallel solves (overrides the manifest)")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--factors", f.factors, "comma-separated factors to vary")
      ->delimiter(',');
  sweep_cmd->add_option("--out", f.out, "output directory (overrides the manifest)");

  auto* factorize_cmd = app.add_subcommand("factorize", "decompose a completed ledger");
  manifest(factorize_cmd, "run manifest");
  factorize_cmd->add_option("--out", f.out, "directory for decomposition.csv/.json");

  auto* residual_cmd = app.add_subcommand("residual", "residual-load analytics");
  manifest(residual_cmd, "run manifest (uses its ledger) or system manifest (solves it)");
  state(residual_cmd);
  residual_cmd->add_option("--out", f.out, "output directory");

  auto* synth_cmd = app.add_subcommand("synthesize", "write a synthetic system and run manifest");
  synth_cmd->add_option("--seed", f.seed, "random seed");
  synth_cmd->add_option("--out", f.out, "output directory")->required();
  synth_cmd->add_option("--countries", f.countries, "number of countries")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--hours", f.hours, "horizon in hours");
  synth_cmd->add_option("--correlation", f.correlation, "cross-country wind correlation");
  synth_cmd->add_option("--workers", f.workers, "parallelism written to run.json")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--factors", f.factors, "factors written to run.json")->delimiter(',');

  auto* export_cmd = app.add_subcommand("export-lp", "write the LP of one scenario as MPS");
  manifest(export_cmd, "system or run manifest");
  state(export_cmd);
  export_cmd->add_option("--mps-out", f.mps_out, "MPS path");
  export_cmd->add_option("--out", f.out, "directory for model.mps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*validate_cmd) return cmd_validate(f);
    if (*solve_cmd) return cmd_solve(f);
    if (*sweep_cmd) return cmd_sweep(f);
    if (*factorize_cmd) return cmd_factorize(f);
    if (*residual_cmd) return cmd_residual(f);
    if (*synth_cmd) return cmd_synthesize(f);
    if (*export_cmd) return cmd_export_lp(f);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
