#include <gtest/gtest.h>

#include "geobal/sweep.hpp"
#include "geobal/synthetic.hpp"
#include "test_support.hpp"

using namespace geobal;
using testing_support::TempDir;

namespace {

RunManifest small_run(const TempDir& dir, std::vector<std::string> factors, int parallelism = 1,
                      const std::string& out = "out") {
  const auto sys = write_system(synthesize_system(31, 2, 24, -0.9), dir / "system");
  RunManifest m;
  m.system = sys;
  m.reference_country = "DE";
  m.design = Design::from_names(factors);
  m.fixture = "test";
  m.output_dir = dir / out;
  m.parallelism = parallelism;
  m.write_mps = true;
  m.residual_scenario = "f_3456";
  return m;
}

}  // namespace

TEST(Manifest, RoundTrip) {
  TempDir dir("manifest");
  RunManifest m = small_run(dir, {"interconnection", "wind"});
  write_text(dir / "run.json", to_json(m, dir.path()).dump(2));
  const RunManifest back = read_run_manifest(dir / "run.json");
  EXPECT_EQ(std::filesystem::canonical(back.system), std::filesystem::canonical(m.system));
  EXPECT_EQ(back.design, m.design);
  EXPECT_EQ(back.residual_scenario, "f_3456");
  EXPECT_EQ(manifest_hash(back, read_system(back.system)), manifest_hash(m, read_system(m.system)));
}

TEST(Manifest, Rejections) {
  TempDir dir("manifest_bad");
  const RunManifest m = small_run(dir, {"wind"});
  nlohmann::json j = to_json(m, dir.path());
  auto rejects = [&](const nlohmann::json& bad) {
    write_text(dir / "bad.json", bad.dump());
    EXPECT_THROW(read_run_manifest(dir / "bad.json"), UsageError) << bad.dump();
  };
  auto k = j;
  k["surprise"] = 1;
  rejects(k);
  k = j;
  k["system"] = "nowhere.json";
  rejects(k);
  k = j;
  k["residual"]["scenario"] = "f_07";
  rejects(k);
  k = j;
  k["parallelism"] = 0;
  rejects(k);
  k = j;
  k["factors"] = {"wind", "wind"};
  rejects(k);
  k = j;
  k["format"] = "other";
  rejects(k);
}

TEST(Manifest, HashIgnoresPathsAndParallelism) {
  TempDir dir("hash");
  RunManifest a = small_run(dir, {"interconnection"});
  RunManifest b = a;
  b.parallelism = 8;
  b.output_dir = dir / "elsewhere";
  const PowerSystemSpec base = read_system(a.system);
  EXPECT_EQ(manifest_hash(a, base), manifest_hash(b, base));
  b.fixture = "other";
  EXPECT_NE(manifest_hash(a, base), manifest_hash(b, base));
}

TEST(Sweep, TwoFactorRunWritesEverything) {
  TempDir dir("sweep");
  const RunManifest m = small_run(dir, {"interconnection", "wind"});
  const SweepOutcome r = run_sweep(m);
  EXPECT_EQ(r.solves, 4);
  EXPECT_TRUE(r.ledger.complete());
  ASSERT_EQ(r.ledger.entries.size(), 4u);
  EXPECT_EQ(r.ledger.entries.front().state.str(), "f_3456");
  EXPECT_EQ(r.ledger.entries.back().state.str(), "f_123456");
  for (const auto& e : r.ledger.entries) {
    EXPECT_EQ(e.status, "optimal");
    EXPECT_TRUE(std::filesystem::exists(m.output_dir / e.result_file));
    EXPECT_TRUE(std::filesystem::exists(m.output_dir / mps_file_name(e.state)));
  }
  for (const char* f : {"ledger.json", "reference_shares.json", "decomposition.csv",
                        "decomposition.json", "interconnection.csv", "utilization.csv",
                        "residual/events.csv"})
    EXPECT_TRUE(std::filesystem::exists(m.output_dir / f)) << f;
  const RunLedger back = read_ledger(m.output_dir / "ledger.json");
  EXPECT_EQ(to_json(back).dump(), to_json(r.ledger).dump());
}

TEST(Sweep, PersistedResultsReproduceMetrics) {
  TempDir dir("reextract");
  const RunManifest m = small_run(dir, {"interconnection", "load"});
  const SweepOutcome r = run_sweep(m);
  const SweepContext ctx = load_context(m);
  for (const auto& e : r.ledger.entries) {
    const PowerSystemSpec spec = apply_factor_state(ctx.base, e.state, ctx.shares);
    const auto values = read_result_values(m.output_dir / e.result_file);
    EXPECT_EQ(extract_metrics(spec, values), e.metrics) << e.state.str();
  }
}

TEST(Sweep, ResumeSolvesOnlyMissingStates) {
  TempDir dir("resume");
  const RunManifest m = small_run(dir, {"interconnection", "solar"});
  run_sweep(m);
  RunLedger l = read_ledger(m.output_dir / "ledger.json");
  l.entries.erase(l.entries.begin() + 2);
  write_ledger(l, m.output_dir / "ledger.json");
  const SweepOutcome again = resume(m);
  EXPECT_EQ(again.solves, 1);
  EXPECT_TRUE(again.ledger.complete());

  const SweepOutcome nothing = resume(m);
  EXPECT_EQ(nothing.solves, 0);
}

TEST(Sweep, ResumeRefusesForeignLedger) {
  TempDir dir("tamper");
  RunManifest m = small_run(dir, {"interconnection"});
  run_sweep(m);
  m.fixture = "changed";
  EXPECT_THROW(resume(m), Error);
}

TEST(Sweep, FailureLeavesPartialLedger) {
  TempDir dir("failure");
  const RunManifest m = small_run(dir, {"interconnection", "wind"});
  SweepHooks hooks;
  hooks.before_solve = [](FactorState s) {
    if (s.str() == "f_23456") throw Error("injected");
  };
  try {
    run_sweep(m, hooks);
    FAIL() << "sweep should halt";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("f_23456"), std::string::npos);
  }
  const RunLedger partial = read_ledger(m.output_dir / "ledger.json");
  EXPECT_FALSE(partial.complete());
  EXPECT_EQ(partial.find(FactorState::parse("f_23456")), nullptr);
  EXPECT_EQ(resume(m).solves, 4 - static_cast<int>(partial.entries.size()));
}

TEST(Sweep, ParallelismDoesNotChangeResults) {
  TempDir dir("parallel");
  const RunManifest a = small_run(dir, {"interconnection", "wind", "hydro"}, 1, "p1");
  RunManifest b = a;
  b.parallelism = 4;
  b.output_dir = dir / "p4";
  run_sweep(a);
  run_sweep(b);
  EXPECT_EQ(ledger_text_without_timing(a.output_dir / "ledger.json"),
            ledger_text_without_timing(b.output_dir / "ledger.json"));
  for (FactorState s : a.design.states())
    EXPECT_EQ(read_text(a.output_dir / mps_file_name(s)), read_text(b.output_dir / mps_file_name(s)));
  EXPECT_EQ(read_text(a.output_dir / "decomposition.csv"), read_text(b.output_dir / "decomposition.csv"));
}

TEST(Sweep, InterconnectionComparisonNeedsBothNativeStates) {
  RunLedger l;
  EXPECT_THROW(compare_interconnection(l), Error);
}
