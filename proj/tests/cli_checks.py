#!/usr/bin/env python3
"""End-to-end checks of the geobal command line.

Usage: cli_checks.py GEOBAL_BINARY [--scipy TOOLS_DIR]

With --scipy only the external-solver cross-check runs.
"""

import csv
import json
import os
import shutil
import subprocess
import sys
import tempfile
import unittest

BIN = None
TOOLS = None


def run(*args, cwd=None):
    return subprocess.run([BIN, *args], capture_output=True, text=True, cwd=cwd)


def synthesize(where, hours=24, countries=2, seed=5):
    r = run("synthesize", "--out", where, "--hours", str(hours), "--countries", str(countries),
            "--seed", str(seed))
    assert r.returncode == 0, r.stderr
    return os.path.join(where, "system.json"), os.path.join(where, "run.json")


def edit_json(path, change):
    with open(path) as fh:
        j = json.load(fh)
    change(j)
    with open(path, "w") as fh:
        json.dump(j, fh, indent=2)


def objective_of(output):
    for line in output.splitlines():
        if line.startswith("objective "):
            return float(line.split()[1])
    raise AssertionError("no objective in output:\n" + output)


class ExitCodes(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp(prefix="geobal_cli_")
        self.system, self.run_manifest = synthesize(os.path.join(self.tmp, "syn"))

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_validate_ok(self):
        self.assertEqual(run("validate", "--manifest", self.system).returncode, 0)
        self.assertEqual(run("validate", "--manifest", self.run_manifest).returncode, 0)

    def test_validate_reports_violations(self):
        edit_json(self.system, lambda j: j["countries"][0].update(yearly_load_total=-1.0))
        r = run("validate", "--manifest", self.system)
        self.assertEqual(r.returncode, 1)
        self.assertIn("yearly load total must be positive", r.stderr)

    def test_malformed_state(self):
        r = run("solve", "--manifest", self.system, "--state", "f_07")
        self.assertEqual(r.returncode, 2)

    def test_unknown_flag(self):
        self.assertEqual(run("solve", "--manifest", self.system, "--bogus").returncode, 2)

    def test_missing_file(self):
        missing = os.path.join(self.tmp, "nope.json")
        self.assertEqual(run("validate", "--manifest", missing).returncode, 2)

    def test_malformed_manifest(self):
        with open(self.system, "w") as fh:
            fh.write("{ broken")
        self.assertEqual(run("validate", "--manifest", self.system).returncode, 2)

    def test_no_subcommand(self):
        self.assertEqual(run().returncode, 2)

    def test_infeasible_solve(self):
        def freeze(j):
            for t in j["technologies"]:
                t["expandable"] = False
        edit_json(self.system, freeze)
        r = run("solve", "--manifest", self.system)
        self.assertEqual(r.returncode, 1)
        self.assertIn("status infeasible", r.stdout)

    def test_solve_writes_outputs(self):
        out = os.path.join(self.tmp, "solved")
        mps = os.path.join(self.tmp, "model.mps")
        r = run("solve", "--manifest", self.run_manifest, "--state", "f_13456", "--out", out,
                "--mps-out", mps)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertIn("status optimal", r.stdout)
        for f in ("solution.csv", "duals.csv", "metrics.json"):
            self.assertTrue(os.path.exists(os.path.join(out, f)), f)
        self.assertTrue(os.path.getsize(mps) > 0)

    def test_export_lp(self):
        path = os.path.join(self.tmp, "x.mps")
        r = run("export-lp", "--manifest", self.system, "--state", "f_123456", "--mps-out", path)
        self.assertEqual(r.returncode, 0, r.stderr)
        with open(path) as fh:
            self.assertTrue(fh.readline().startswith("NAME"))

    def test_reduced_sweep_factorize_residual(self):
        out = os.path.join(self.tmp, "syn", "sweep")
        r = run("sweep", "--manifest", self.run_manifest, "--factors", "interconnection,wind",
                "--workers", "2", "--out", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        with open(os.path.join(out, "ledger.json")) as fh:
            ledger = json.load(fh)
        self.assertEqual([e["state"] for e in ledger["entries"]],
                         ["f_3456", "f_13456", "f_23456", "f_123456"])

        again = run("sweep", "--manifest", self.run_manifest, "--factors", "interconnection,wind",
                    "--out", out)
        self.assertEqual(again.returncode, 0, again.stderr)
        self.assertIn("solved now 0", again.stdout)

        edit_json(self.run_manifest, lambda j: j.update(output_dir="sweep",
                                                         factors=["interconnection", "wind"]))
        dec = os.path.join(self.tmp, "dec")
        r = run("factorize", "--manifest", self.run_manifest, "--out", dec)
        self.assertEqual(r.returncode, 0, r.stderr)
        with open(os.path.join(dec, "decomposition.csv")) as fh:
            rows = list(csv.DictReader(fh))
        totals = [x for x in rows if x["term"] == "total"]
        self.assertEqual({x["subset"] for x in totals}, {"wind"})

        res = os.path.join(self.tmp, "res")
        r = run("residual", "--manifest", self.run_manifest, "--state", "f_23456", "--out", res)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertTrue(os.path.exists(os.path.join(res, "cross_section.csv")))

        r = run("residual", "--manifest", self.run_manifest, "--state", "f_0")
        self.assertEqual(r.returncode, 1)

    def test_foreign_ledger_is_refused(self):
        out = os.path.join(self.tmp, "sweep")
        self.assertEqual(run("sweep", "--manifest", self.run_manifest, "--factors",
                             "interconnection", "--out", out).returncode, 0)
        edit_json(self.run_manifest, lambda j: j.update(fixture="other"))
        r = run("sweep", "--manifest", self.run_manifest, "--factors", "interconnection",
                "--out", out)
        self.assertEqual(r.returncode, 1)
        self.assertIn("hash mismatch", r.stderr)


class AllNegativeResidual(unittest.TestCase):
    def test_header_only_events(self):
        tmp = tempfile.mkdtemp(prefix="geobal_cli_")
        try:
            system, _ = synthesize(os.path.join(tmp, "syn"), hours=12, countries=1)
            base = os.path.dirname(system)

            def saturate(j):
                j["pinned_capacities"] = [
                    {"country": "DE", "technology": "wind_onshore", "power": 10000.0}]
            edit_json(system, saturate)
            with open(os.path.join(base, "cf_wind_onshore.csv")) as fh:
                lines = fh.read().splitlines()
            with open(os.path.join(base, "cf_wind_onshore.csv"), "w") as fh:
                fh.write(lines[0] + "\n")
                for line in lines[1:]:
                    hour = line.split(",")[0]
                    fh.write(f"{hour},1\n")
            out = os.path.join(tmp, "res")
            r = run("residual", "--manifest", system, "--out", out)
            self.assertEqual(r.returncode, 0, r.stderr)
            with open(os.path.join(out, "events.csv")) as fh:
                self.assertEqual(fh.read(), "country,start_hour,end_hour,duration_h,"
                                 "peak_cumulative_mwh,gross_positive_mwh\n")
        finally:
            shutil.rmtree(tmp)


class ExternalSolver(unittest.TestCase):
    def test_objective_matches_highs(self):
        sys.path.insert(0, TOOLS)
        import mps_linprog
        tmp = tempfile.mkdtemp(prefix="geobal_scipy_")
        try:
            system, run_manifest = synthesize(os.path.join(tmp, "syn"), hours=48, countries=3)
            for state in ("f_123456", "f_23456", "f_1"):
                mps = os.path.join(tmp, state + ".mps")
                r = run("solve", "--manifest", run_manifest, "--state", state, "--mps-out", mps)
                self.assertEqual(r.returncode, 0, r.stderr)
                ours = objective_of(r.stdout)
                sol = os.path.join(tmp, state + ".csv")
                self.assertEqual(mps_linprog.main(["mps_linprog.py", mps, sol]), 0)
                _, _, cols, _, cost, *_ = mps_linprog.read_mps(mps)
                with open(sol) as fh:
                    values = {row["column"]: float(row["value"]) for row in csv.DictReader(fh)}
                theirs = sum(cost.get(c, 0.0) * values[c] for c in cols)
                self.assertLessEqual(abs(ours - theirs), 1e-6 * max(1.0, abs(theirs)), state)
        finally:
            shutil.rmtree(tmp)


if __name__ == "__main__":
    BIN = os.path.abspath(sys.argv[1])
    scipy_only = "--scipy" in sys.argv
    if scipy_only:
        TOOLS = os.path.abspath(sys.argv[sys.argv.index("--scipy") + 1])
    loader = unittest.TestLoader()
    if scipy_only:
        suite = loader.loadTestsFromTestCase(ExternalSolver)
    else:
        suite = unittest.TestSuite([loader.loadTestsFromTestCase(ExitCodes),
                                    loader.loadTestsFromTestCase(AllNegativeResidual)])
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    sys.exit(0 if result.wasSuccessful() else 1)
