#pragma once

// Factorial sweep: derive reference shares, solve every state of a design on
// a bounded worker pool, persist per-state results and keep a JSON ledger.
//
// Output directory layout:
//   ledger.json               manifest hash, version, one entry per solved state
//   reference_shares.json     shares and provenance of the isolated reference run
//   results/<lp-hash>.csv     optimal column values (column,value)
//   mps/<state>.mps           LP exports, when the manifest asks for them
//   decomposition.csv/.json   factor separation of the four storage metrics
//   interconnection.csv       isolated vs interconnected storage, per country
//   utilization.csv           mean hourly |F| / NTC per line
//   residual/                 residual-load analytics of the designated state
//
// Entries are kept in canonical state order whatever order the workers finish
// in, so ledgers only differ in their wall_time_s fields.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "geobal/factor_state.hpp"
#include "geobal/factorize.hpp"
#include "geobal/harmonize.hpp"
#include "geobal/hash.hpp"
#include "geobal/lp_builder.hpp"
#include "geobal/metrics.hpp"
#include "geobal/mps.hpp"
#include "geobal/residual.hpp"
#include "geobal/solver.hpp"
#include "geobal/system_io.hpp"

#ifndef GEOBAL_VERSION
#define GEOBAL_VERSION "0.0.0"
#endif

namespace geobal {

inline constexpr const char* kRunFormat = "geobal-run/1";
inline constexpr const char* kLedgerFormat = "geobal-ledger/1";

struct RunManifest {
  std::filesystem::path system;  // system manifest, resolved
  std::string reference_country;
  Design design;
  std::string fixture = "default";
  SolverOptions solver;
  std::filesystem::path output_dir;  // resolved
  int parallelism = 1;
  bool write_mps = false;
  std::string residual_scenario = "f_23456";
  std::vector<std::string> residual_exclude;
};

namespace detail {

inline nlohmann::json solver_to_json(const SolverOptions& o) {
  return {{"presolve", o.presolve},
          {"scale", o.scale},
          {"dual", o.simplex.dual},
          {"max_iterations", o.simplex.max_iterations},
          {"primal_tolerance", o.simplex.primal_tolerance},
          {"dual_tolerance", o.simplex.dual_tolerance},
          {"pivot_tolerance", o.simplex.pivot_tolerance},
          {"refactor_interval", o.simplex.refactor_interval},
          {"perturbation", o.simplex.perturbation}};
}

inline SolverOptions solver_from_json(const nlohmann::json& j) {
  require_keys(j,
               {"presolve", "scale", "dual", "max_iterations", "primal_tolerance",
                "dual_tolerance", "pivot_tolerance", "refactor_interval", "perturbation"},
               {}, "solver");
  SolverOptions o;
  o.presolve = get_or(j, "presolve", o.presolve);
  o.scale = get_or(j, "scale", o.scale);
  o.simplex.dual = get_or(j, "dual", o.simplex.dual);
  o.simplex.max_iterations = get_or(j, "max_iterations", o.simplex.max_iterations);
  o.simplex.primal_tolerance = get_or(j, "primal_tolerance", o.simplex.primal_tolerance);
  o.simplex.dual_tolerance = get_or(j, "dual_tolerance", o.simplex.dual_tolerance);
  o.simplex.pivot_tolerance = get_or(j, "pivot_tolerance", o.simplex.pivot_tolerance);
  o.simplex.refactor_interval = get_or(j, "refactor_interval", o.simplex.refactor_interval);
  o.simplex.perturbation = get_or(j, "perturbation", o.simplex.perturbation);
  if (o.simplex.max_iterations < 1 || o.simplex.refactor_interval < 1)
    throw UsageError("solver: iteration limits must be positive");
  return o;
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

}  // namespace detail

/// Paths in the manifest are relative to the manifest's directory.
inline RunManifest read_run_manifest(const std::filesystem::path& path) {
  const nlohmann::json j = detail::parse_json_file(path);
  detail::require_keys(j,
                       {"format", "system", "reference_country", "factors", "fixture", "solver",
                        "output_dir", "parallelism", "write_mps", "residual"},
                       {"format", "system", "reference_country"}, path.string());
  if (j.at("format") != kRunFormat)
    throw UsageError(path.string() + ": format must be " + std::string(kRunFormat));
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  RunManifest m;
  try {
    m.system = resolve(j.at("system").get<std::string>());
    m.reference_country = j.at("reference_country").get<std::string>();
    if (j.contains("factors")) {
      const auto& f = j.at("factors");
      if (f.is_string() && f.get<std::string>() == "all")
        m.design = Design();
      else
        m.design = Design::from_names(f.get<std::vector<std::string>>());
    }
    m.fixture = detail::get_or<std::string>(j, "fixture", m.fixture);
    if (j.contains("solver")) m.solver = detail::solver_from_json(j.at("solver"));
    m.output_dir = resolve(detail::get_or<std::string>(j, "output_dir", "out"));
    m.parallelism = detail::get_or(j, "parallelism", 1);
    m.write_mps = detail::get_or(j, "write_mps", false);
    if (j.contains("residual")) {
      const auto& r = j.at("residual");
      detail::require_keys(r, {"scenario", "exclude"}, {}, "residual");
      m.residual_scenario = detail::get_or<std::string>(r, "scenario", m.residual_scenario);
      m.residual_exclude = detail::get_or(r, "exclude", std::vector<std::string>{});
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  if (m.parallelism < 1) throw UsageError(path.string() + ": parallelism must be at least 1");
  FactorState::parse(m.residual_scenario);
  if (!std::filesystem::exists(m.system))
    throw UsageError(path.string() + ": system manifest " + m.system.string() + " not found");
  return m;
}

inline nlohmann::json to_json(const RunManifest& m, const std::filesystem::path& relative_to) {
  auto rel = [&](const std::filesystem::path& p) {
    return relative_to.empty() ? p.string() : std::filesystem::relative(p, relative_to).string();
  };
  nlohmann::json j = {{"format", kRunFormat},
                      {"system", rel(m.system)},
                      {"reference_country", m.reference_country},
                      {"factors", m.design.names()},
                      {"fixture", m.fixture},
                      {"solver", detail::solver_to_json(m.solver)},
                      {"output_dir", rel(m.output_dir)},
                      {"parallelism", m.parallelism},
                      {"write_mps", m.write_mps},
                      {"residual", {{"scenario", m.residual_scenario},
                                    {"exclude", m.residual_exclude}}}};
  return j;
}

/// Covers everything that changes solve results: the system content, the
/// reference country, the design, the fixture label and the solver options.
/// Paths, parallelism and reporting options are left out.
inline std::string manifest_hash(const RunManifest& m, const PowerSystemSpec& base) {
  const nlohmann::json j = {{"system", spec_hash(base)},
                            {"reference_country", m.reference_country},
                            {"factors", m.design.names()},
                            {"fixture", m.fixture},
                            {"solver", detail::solver_to_json(m.solver)}};
  return sha256_hex(j.dump());
}

struct LedgerEntry {
  FactorState state;
  std::string spec_hash;
  std::string lp_hash;
  std::string status;
  double objective = 0.0;
  long iterations = 0;
  ScenarioMetrics metrics;
  std::string result_file;  // relative to the output directory
  double wall_time_s = 0.0;
};

struct RunLedger {
  std::string format = kLedgerFormat;
  std::string manifest_hash;
  std::string software_version = GEOBAL_VERSION;
  std::string fixture;
  std::string reference_country;
  Design design;
  std::vector<LedgerEntry> entries;  // canonical state order

  const LedgerEntry* find(FactorState s) const {
    for (const auto& e : entries)
      if (e.state == s) return &e;
    return nullptr;
  }
  bool complete() const {
    for (FactorState s : design.states())
      if (!find(s)) return false;
    return true;
  }
  std::map<FactorState, StorageMetrics> totals() const {
    std::map<FactorState, StorageMetrics> out;
    for (const auto& e : entries) out[e.state] = e.metrics.total;
    return out;
  }
};

namespace detail {

inline nlohmann::json metrics_to_json(const StorageMetrics& m) {
  nlohmann::json j = nlohmann::json::object();
  for (int i = 0; i < kMetricCount; ++i) j[std::string(metric_name(i))] = m.values[i];
  return j;
}

inline StorageMetrics metrics_from_json(const nlohmann::json& j) {
  StorageMetrics m;
  for (int i = 0; i < kMetricCount; ++i) m.values[i] = j.at(std::string(metric_name(i))).get<double>();
  return m;
}

}  // namespace detail

inline nlohmann::json to_json(const LedgerEntry& e, bool timing = true) {
  nlohmann::json countries = nlohmann::json::object();
  for (const auto& [code, m] : e.metrics.by_country) countries[code] = detail::metrics_to_json(m);
  nlohmann::json j = {{"state", e.state.str()},
                      {"spec_hash", e.spec_hash},
                      {"lp_hash", e.lp_hash},
                      {"status", e.status},
                      {"objective", e.objective},
                      {"iterations", e.iterations},
                      {"metrics",
                       {{"total", detail::metrics_to_json(e.metrics.total)},
                        {"countries", countries},
                        {"line_utilization", e.metrics.line_utilization}}},
                      {"result_file", e.result_file}};
  if (timing) j["wall_time_s"] = e.wall_time_s;
  return j;
}

inline nlohmann::json to_json(const RunLedger& l, bool timing = true) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : l.entries) entries.push_back(to_json(e, timing));
  return {{"format", l.format},
          {"manifest_hash", l.manifest_hash},
          {"software_version", l.software_version},
          {"fixture", l.fixture},
          {"reference_country", l.reference_country},
          {"factors", l.design.names()},
          {"entries", entries}};
}

inline RunLedger ledger_from_json(const nlohmann::json& j) {
  RunLedger l;
  try {
    detail::require_keys(j,
                         {"format", "manifest_hash", "software_version", "fixture",
                          "reference_country", "factors", "entries"},
                         {"format", "manifest_hash", "factors", "entries"}, "ledger");
    if (j.at("format") != kLedgerFormat) throw UsageError("ledger: unsupported format");
    l.manifest_hash = j.at("manifest_hash").get<std::string>();
    l.software_version = detail::get_or<std::string>(j, "software_version", "");
    l.fixture = detail::get_or<std::string>(j, "fixture", "");
    l.reference_country = detail::get_or<std::string>(j, "reference_country", "");
    l.design = Design::from_names(j.at("factors").get<std::vector<std::string>>());
    for (const auto& je : j.at("entries")) {
      LedgerEntry e;
      e.state = FactorState::parse(je.at("state").get<std::string>());
      e.spec_hash = je.at("spec_hash").get<std::string>();
      e.lp_hash = je.at("lp_hash").get<std::string>();
      e.status = je.at("status").get<std::string>();
      e.objective = je.at("objective").get<double>();
      e.iterations = je.at("iterations").get<long>();
      const auto& m = je.at("metrics");
      e.metrics.total = detail::metrics_from_json(m.at("total"));
      for (auto it = m.at("countries").begin(); it != m.at("countries").end(); ++it)
        e.metrics.by_country[it.key()] = detail::metrics_from_json(it.value());
      e.metrics.line_utilization = m.at("line_utilization").get<std::map<std::string, double>>();
      e.result_file = je.at("result_file").get<std::string>();
      e.wall_time_s = detail::get_or(je, "wall_time_s", 0.0);
      l.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("ledger: ") + e.what());
  }
  return l;
}

inline RunLedger read_ledger(const std::filesystem::path& path) {
  return ledger_from_json(detail::parse_json_file(path));
}

inline void write_ledger(const RunLedger& l, const std::filesystem::path& path) {
  write_text(path, to_json(l).dump(2) + "\n");
}

/// Ledger text with every wall_time_s removed; equal for repeated runs.
inline std::string ledger_text_without_timing(const std::filesystem::path& path) {
  return to_json(read_ledger(path), false).dump(2) + "\n";
}

/// Everything needed to solve one state; shared read-only by the workers.
struct SweepContext {
  PowerSystemSpec base;
  ReferenceShares shares;
  RunManifest manifest;
  std::shared_ptr<BlockCache> blocks = std::make_shared<BlockCache>();
};

inline std::string mps_file_name(FactorState s) { return "mps/" + s.str() + ".mps"; }

/// Builds, exports and solves one state and persists its column values.
inline LedgerEntry solve_state(const SweepContext& ctx, FactorState state) {
  const auto start = std::chrono::steady_clock::now();
  const PowerSystemSpec spec = apply_factor_state(ctx.base, state, ctx.shares);
  LedgerEntry e;
  e.state = state;
  e.spec_hash = spec_hash(spec);
  const AssembledLp built = assemble(spec);
  const std::string mps = write_mps(built.lp, state.str());
  e.lp_hash = sha256_hex(mps);
  const auto& out = ctx.manifest.output_dir;
  if (ctx.manifest.write_mps) write_text(out / mps_file_name(state), mps);
  const SolveResult r = solve(built.lp, ctx.manifest.solver, ctx.blocks.get());
  e.status = to_string(r.status);
  e.objective = r.objective;
  e.iterations = r.iterations;
  if (r.status != SolveStatus::optimal) throw Error("state " + state.str() + " is " + e.status);
  e.metrics = extract_metrics(spec, built.lp, r.primal);
  e.result_file = "results/" + e.lp_hash + ".csv";
  write_text(out / e.result_file, solution_csv(built.lp, r.primal));
  e.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return e;
}

/// Column values of a persisted result.
inline std::vector<std::pair<std::string, double>> read_result_values(
    const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() != 2 || t.header[0] != "column" || t.header[1] != "value")
    throw UsageError(path.string() + ": expected header column,value");
  std::vector<std::pair<std::string, double>> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) out.emplace_back(row[0], parse_double(row[1], path.string()));
  return out;
}

struct InterconnectionComparison {
  struct Row {
    std::string scope;  // country code or "total"
    StorageMetrics isolated, interconnected;
  };
  std::vector<Row> rows;
  std::map<std::string, double> utilization;
};

/// Native isolated vs native interconnected, from the ledger alone.
inline InterconnectionComparison compare_interconnection(const RunLedger& ledger) {
  const FactorState with = FactorState::native();
  const FactorState without(kAllFactorsMask & ~factor_bit(Factor::interconnection));
  const LedgerEntry* a = ledger.find(without);
  const LedgerEntry* b = ledger.find(with);
  if (!a || !b) throw Error("interconnection comparison needs states f_23456 and f_123456");
  InterconnectionComparison out;
  for (const auto& [code, m] : a->metrics.by_country) {
    auto it = b->metrics.by_country.find(code);
    if (it == b->metrics.by_country.end()) throw Error("country " + code + " missing in f_123456");
    out.rows.push_back({code, m, it->second});
  }
  out.rows.push_back({"total", a->metrics.total, b->metrics.total});
  out.utilization = b->metrics.line_utilization;
  return out;
}

inline std::string interconnection_csv(const InterconnectionComparison& c) {
  std::string out = "scope,metric,isolated,interconnected,reduction,relative_reduction\n";
  for (const auto& r : c.rows)
    for (int m = 0; m < kMetricCount; ++m) {
      const double iso = r.isolated.values[m], con = r.interconnected.values[m];
      const double red = iso - con;
      out += r.scope + ',' + std::string(metric_name(m)) + ',' + format_double(iso) + ',' +
             format_double(con) + ',' + format_double(red) + ',' +
             (iso != 0.0 ? format_double(red / iso) : std::string()) + '\n';
    }
  return out;
}

inline std::string utilization_csv(const InterconnectionComparison& c) {
  std::string out = "line,mean_utilization\n";
  for (const auto& [id, u] : c.utilization) out += id + ',' + format_double(u) + '\n';
  return out;
}

/// Residual analytics of one solved state of the ledger.
inline ResidualReport residual_for_state(const SweepContext& ctx, const RunLedger& ledger,
                                         FactorState state) {
  const LedgerEntry* e = ledger.find(state);
  if (!e) throw Error("state " + state.str() + " has not been solved");
  const PowerSystemSpec spec = apply_factor_state(ctx.base, state, ctx.shares);
  const auto values = read_result_values(ctx.manifest.output_dir / e->result_file);
  return analyze_residuals(spec, installed_power(values), state.str(),
                           ctx.manifest.residual_exclude);
}

/// Writes the decomposition, comparison and residual outputs that the ledger
/// supports; a design without interconnection gets no decomposition.
inline void write_reports(const SweepContext& ctx, const RunLedger& ledger) {
  const auto& out = ctx.manifest.output_dir;
  if (ledger.design.contains(1)) {
    const auto dec = decompose_metrics(ledger.totals(), ledger.design);
    write_text(out / "decomposition.csv", decomposition_csv(dec));
    nlohmann::json j = {{"fixture", ledger.fixture},
                        {"reference_country", ledger.reference_country},
                        {"manifest_hash", ledger.manifest_hash}};
    j["metrics"] = nlohmann::json::array();
    for (const auto& d : dec) j["metrics"].push_back(to_json(d));
    write_text(out / "decomposition.json", j.dump(2) + "\n");
    const auto cmp = compare_interconnection(ledger);
    write_text(out / "interconnection.csv", interconnection_csv(cmp));
    write_text(out / "utilization.csv", utilization_csv(cmp));
  }
  const FactorState rs = FactorState::parse(ctx.manifest.residual_scenario);
  if (ledger.find(rs)) write_residual_report(residual_for_state(ctx, ledger, rs), out / "residual");
}

struct SweepHooks {
  /// Called on the worker thread before a state is solved; may throw.
  std::function<void(FactorState)> before_solve;
};

struct SweepOutcome {
  RunLedger ledger;
  int solves = 0;
};

/// Reference shares cached in the output directory when they were derived
/// from the same base system and reference country.
inline ReferenceShares load_or_derive_shares(const RunManifest& m, const PowerSystemSpec& base) {
  const auto path = m.output_dir / "reference_shares.json";
  const std::string h = spec_hash(base);
  if (std::filesystem::exists(path)) {
    ReferenceShares s = reference_shares_from_json(detail::parse_json_file(path));
    if (s.base_spec_hash == h && s.reference_country == m.reference_country) return s;
  }
  ReferenceShares s = derive_reference_shares(base, m.reference_country, m.solver);
  write_text(path, to_json(s).dump(2) + "\n");
  return s;
}

inline SweepContext load_context(const RunManifest& m) {
  SweepContext ctx;
  ctx.manifest = m;
  ctx.base = read_system(m.system);
  if (auto v = validate(ctx.base); !v.empty())
    throw Error("invalid system: " + v.front().str());
  if (!ctx.base.find_country(m.reference_country))
    throw UsageError("reference country " + m.reference_country + " is not part of the system");
  ctx.shares = load_or_derive_shares(m, ctx.base);
  return ctx;
}

/// Solves every state of the design that `previous` lacks. Completed entries
/// are kept as they are. On a failure the remaining queue is dropped, running
/// solves finish, the partial ledger is written and the error is rethrown.
inline SweepOutcome resume(const RunManifest& m, const RunLedger& previous,
                           const SweepHooks& hooks = {}) {
  const SweepContext ctx = load_context(m);
  const std::string mh = manifest_hash(m, ctx.base);
  if (previous.manifest_hash != mh)
    throw Error("ledger was produced by a different manifest (hash mismatch)");

  SweepOutcome outcome;
  RunLedger& ledger = outcome.ledger;
  ledger = previous;
  ledger.software_version = GEOBAL_VERSION;
  const auto states = m.design.states();
  std::vector<FactorState> todo;
  for (FactorState s : states) {
    const LedgerEntry* e = ledger.find(s);
    if (!e || !std::filesystem::exists(m.output_dir / e->result_file)) todo.push_back(s);
  }
  std::erase_if(ledger.entries, [&](const LedgerEntry& e) {
    return std::find(todo.begin(), todo.end(), e.state) != todo.end();
  });

  const auto ledger_path = m.output_dir / "ledger.json";
  auto store = [&](LedgerEntry e) {
    ledger.entries.push_back(std::move(e));
    std::stable_sort(ledger.entries.begin(), ledger.entries.end(),
                     [](const LedgerEntry& a, const LedgerEntry& b) {
                       return canonical_less(a.state.mask(), b.state.mask());
                     });
    write_ledger(ledger, ledger_path);
  };
  write_ledger(ledger, ledger_path);

  struct Done {
    FactorState state;
    std::optional<LedgerEntry> entry;
    std::string error;
  };
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Done> done;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  const int n_workers = std::max(1, std::min<int>(m.parallelism, static_cast<int>(todo.size())));
  int running = todo.empty() ? 0 : n_workers;

  auto worker = [&]() {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) break;
      Done d{todo[i], std::nullopt, {}};
      try {
        if (hooks.before_solve) hooks.before_solve(todo[i]);
        d.entry = solve_state(ctx, todo[i]);
      } catch (const std::exception& ex) {
        d.error = ex.what();
      }
      std::lock_guard lock(mu);
      done.push_back(std::move(d));
      cv.notify_one();
    }
    std::lock_guard lock(mu);
    --running;
    cv.notify_one();
  };

  std::vector<std::jthread> pool;
  for (int w = 0; w < running; ++w) pool.emplace_back(worker);

  std::string first_error;
  std::unique_lock lock(mu);
  while (true) {
    cv.wait(lock, [&]() { return !done.empty() || running == 0; });
    if (done.empty()) break;
    Done d = std::move(done.front());
    done.pop_front();
    lock.unlock();
    if (d.entry) {
      ++outcome.solves;
      store(std::move(*d.entry));
    } else if (first_error.empty()) {
      first_error = d.state.str() + ": " + d.error;
      stop = true;
    }
    lock.lock();
  }
  lock.unlock();
  pool.clear();
  if (!first_error.empty()) throw Error("sweep halted at " + first_error);

  write_reports(ctx, ledger);
  return outcome;
}

/// Fresh sweep: any earlier ledger in the output directory is replaced.
inline SweepOutcome run_sweep(const RunManifest& m, const SweepHooks& hooks = {}) {
  const PowerSystemSpec base = read_system(m.system);
  RunLedger empty;
  empty.manifest_hash = manifest_hash(m, base);
  empty.fixture = m.fixture;
  empty.reference_country = m.reference_country;
  empty.design = m.design;
  return resume(m, empty, hooks);
}

/// Continues the ledger in the output directory, or starts a fresh sweep when
/// there is none.
inline SweepOutcome resume(const RunManifest& m, const SweepHooks& hooks = {}) {
  const auto path = m.output_dir / "ledger.json";
  if (!std::filesystem::exists(path)) return run_sweep(m, hooks);
  return resume(m, read_ledger(path), hooks);
}

}  // namespace geobal
