import csv
import json
import random

import pytest

from prodspec import cli, harness, limitlaw
from prodspec.config import ConfigError, ExperimentConfig, build_config, load_config, parse_config_text
from prodspec.estimator import ProbePoint
from prodspec.linalg import ConvergenceError


def small(**kw):
    base = {"m": 2, "n": 12, "trials": 3, "seed": 5,
            "probes": (ProbePoint(0.5 + 0.5j, 1 + 1j), ProbePoint(1.5, 1j)),
            "sigma_min_z": (0.5,)}
    base.update(kw)
    return build_config(base)


@pytest.fixture(scope="module")
def report():
    return harness.run_experiment(small(), write=False)


class TestRunExperiment:
    def test_records_in_order(self, report):
        assert [r["trial"] for r in report.records] == [0, 1, 2]
        assert all(r["status"] == "ok" for r in report.records)
        assert report.aggregates["trials"] == 3 and report.aggregates["failed"] == 0

    def test_record_fields(self, report):
        r = report.records[0]
        assert set(harness.CSV_COLUMNS) <= set(r)
        assert len(r["stieltjes_errors"]) == 2
        assert r["g_identity_resid"] is not None and r["g_identity_resid"] < 1e-4
        assert r["horn_margin"] >= -1e-10
        assert len(r["radii"]) == 12

    def test_determinism(self, report):
        again = harness.run_experiment(small(), write=False)
        assert harness.dumps_report(again) == harness.dumps_report(report)

    def test_workers_equivalence(self, report):
        par = harness.run_experiment(small(workers=2), write=False)
        assert harness.dumps_report(par) == harness.dumps_report(report)

    def test_seed_changes_output(self, report):
        other = harness.run_experiment(small(seed=6), write=False)
        assert other.records[0]["radial_ks"] != report.records[0]["radial_ks"]

    def test_aggregate_order_independent(self, report):
        recs = list(report.records)
        random.Random(0).shuffle(recs)
        a, b = harness.aggregate(recs), harness.aggregate(report.records)
        for key in harness.AGGREGATED:
            if a[key] is None:
                assert b[key] is None
                continue
            for stat in ("mean", "min", "max", "q10", "q50", "q90"):
                assert a[key][stat] == pytest.approx(b[key][stat], rel=1e-14, abs=1e-300)

    def test_failed_trial_is_kept(self, monkeypatch):
        real = harness.linalg.eigenvalues

        def flaky(a, meta=None):
            if meta and meta.get("trial") == 1:
                raise ConvergenceError("sweep budget exhausted")
            return real(a, meta=meta)

        monkeypatch.setattr(harness.linalg, "eigenvalues", flaky)
        rep = harness.run_experiment(small(), write=False)
        assert rep.records[1]["status"].startswith("failed: ConvergenceError")
        assert rep.aggregates["failed"] == 1
        assert rep.aggregates["radial_ks"]["count"] == 2

    def test_branch_failure_is_kept(self, monkeypatch):
        def boom(*a, **k):
            raise limitlaw.BranchError("step underflow")

        monkeypatch.setattr(harness.limitlaw, "stieltjes_branch", boom)
        rep = harness.run_experiment(small(trials=1), write=False)
        assert "BranchError" in rep.records[0]["status"]

    def test_identity_skipped_for_large_dim(self):
        rep = harness.run_experiment(small(trials=1, identity_max_dim=10), write=False)
        assert rep.records[0]["g_identity_resid"] is None

    def test_truncation(self):
        rep = harness.run_experiment(small(trials=1, n=32, truncation_delta=0.1), write=False)
        assert 0 <= rep.records[0]["truncation_levy"] < 0.2


class TestConfig:
    def test_hash_ignores_non_semantic(self):
        assert small().config_hash() == small(workers=3, output="x", format="csv").config_hash()
        assert small().config_hash() != small(n=13).config_hash()

    def test_parse(self):
        text = """
        # comment
        m = 3
        n=16   # trailing
        sigmas = 1, 2, 0.5
        probes = 0.5+0.5j@2+1j, 1.5@1j
        truncation_delta = none
        """
        v = parse_config_text(text)
        assert v["m"] == 3 and v["n"] == 16 and v["sigmas"] == (1.0, 2.0, 0.5)
        assert v["probes"][0] == ProbePoint(0.5 + 0.5j, 2 + 1j)
        assert v["truncation_delta"] is None

    @pytest.mark.parametrize("text", ["m 2", "bogus = 1", "n = ten", "probes = 0.5", "probes = 1@1-1j"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)

    def test_precedence(self):
        cfg = build_config({"n": 32, "trials": 4}, {"n": 64, "trials": None})
        assert cfg.ensemble.n == 64 and cfg.trials == 4
        assert build_config().ensemble.n == 64 and build_config().trials == 1

    @pytest.mark.parametrize("kw", [{"trials": 0}, {"format": "xml"}, {"m": 2, "sigmas": (1.0,)},
                                    {"truncation_delta": -1.0}, {"dist": "cauchy"}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            build_config(kw)

    def test_checked_in_configs_load(self, configs_dir):
        for p in configs_dir.glob("*.cfg"):
            assert isinstance(build_config(load_config(p)), ExperimentConfig)


class TestSweep:
    def test_single_point(self):
        sw = harness.convergence_sweep(small(trials=1, n_sweep=(8,)), write=False)
        assert sw.ns == [8] and sw.trend_ok and sw.final_below_first

    @pytest.mark.parametrize("ns", [(), (16, 8), (8, 8)])
    def test_invalid(self, ns):
        with pytest.raises(ValueError):
            harness.convergence_sweep(small(n_sweep=ns), write=False)

    def test_export(self, tmp_path):
        sw = harness.convergence_sweep(small(trials=1, n_sweep=(6, 10)), write=False)
        paths = harness.export_sweep(sw, str(tmp_path / "sw"))
        data = json.loads((tmp_path / "sw_sweep.json").read_text())
        assert data["n_sweep"] == [6, 10] and len(data["reports"]) == 2
        assert str(tmp_path / "sw_n6.json") in paths


class TestExport:
    def test_header_only_csv(self, tmp_path):
        empty = harness.Report(config={}, records=[], aggregates=harness.aggregate([]), provenance={})
        harness.export(empty, str(tmp_path / "e"), "csv")
        lines = (tmp_path / "e.csv").read_text().splitlines()
        assert lines == [",".join(harness.CSV_COLUMNS)]

    def test_csv_rows(self, report, tmp_path):
        harness.export(report, str(tmp_path / "r"), "both")
        with open(tmp_path / "r.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        assert float(rows[2]["radial_ks"]) == report.records[2]["radial_ks"]
        assert rows[0]["status"] == "ok"

    def test_json_round_trip(self, report, tmp_path):
        harness.export(report, str(tmp_path / "r"), "json")
        d = json.loads((tmp_path / "r.json").read_text())
        assert d == report.to_dict()
        assert d["schema_version"] == harness.SCHEMA_VERSION
        back = harness.Report.from_dict(d)
        assert harness.dumps_report(back) == harness.dumps_report(report)
        assert "radii" not in d["records"][0]

    def test_histogram_files(self, report, tmp_path):
        paths = harness.export(report, str(tmp_path / "sub" / "r"), "json")
        assert str(tmp_path / "sub" / "r_radius_hist.csv") in paths
        with open(tmp_path / "sub" / "r_radius_hist.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 50
        radii = [x for r in report.records for x in r["radii"]]
        assert sum(int(r["count"]) for r in rows) == sum(x < 1.25 for x in radii)
        with open(tmp_path / "sub" / "r_radial_density.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert float(rows[-1]["radial_cdf"]) == 1.0

    def test_bad_format(self, report, tmp_path):
        with pytest.raises(ValueError):
            harness.export(report, str(tmp_path / "r"), "xml")


class TestCLI:
    def test_simulate(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = cli.main(["simulate", "--m", "2", "--n", "8", "--trials", "2", "--seed", "3",
                         "--out", str(out), "--format", "both"])
        assert code == 0
        assert (tmp_path / "run.csv").exists() and (tmp_path / "run.json").exists()
        assert "trials=2 failed=0" in capsys.readouterr().out

    def test_simulate_with_config(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("m = 1\nn = 8\ntrials = 2\noutput = %s\n" % (tmp_path / "o"))
        assert cli.main(["simulate", "--config", str(cfg)]) == 0
        assert json.loads((tmp_path / "o.json").read_text())["config"]["trials"] == 2

    def test_sweep(self, capsys):
        assert cli.main(["sweep", "--m", "1", "--trials", "1", "--n-sweep", "4,8"]) == 0
        assert "trend_ok" in capsys.readouterr().out

    def test_limit_stdout(self, capsys):
        assert cli.main(["limit", "--m", "2", "--grid", "0:1:5", "--z-mod", "1.0", "--x-grid", "1:2:3"]) == 0
        out = capsys.readouterr().out
        assert "# radial" in out and "# support" in out and "# nu" in out
        assert "1.0,0.0,6.75" in out

    def test_limit_origin_row(self, capsys):
        # radial density at r = 0: 0 for m = 1, 1/sigma for m = 2, inf for m > 2
        for m, expected in ((1, "0.0"), (2, "0.5"), (3, "inf")):
            cli.main(["limit", "--m", str(m), "--sigma", "2", "--grid", "0:1:2", "--z-mod", "0"])
            rows = capsys.readouterr().out.splitlines()
            assert rows[2].split(",")[2] == expected

    def test_limit_files(self, tmp_path):
        assert cli.main(["limit", "--out", str(tmp_path / "lim")]) == 0
        for name in ("radial", "support", "nu"):
            assert (tmp_path / f"lim_{name}.csv").exists()

    @pytest.mark.parametrize("argv", [["simulate", "--m", "0"], ["simulate", "--dist", "cauchy"],
                                      ["bogus"], ["simulate", "--trials", "x"],
                                      ["sweep", "--n-sweep", "8,4"]])
    def test_validation_exit(self, argv):
        assert cli.main(argv) == 1

    def test_io_exit(self, tmp_path):
        assert cli.main(["simulate", "--config", str(tmp_path / "missing.cfg")]) == 3
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert cli.main(["simulate", "--n", "4", "--out", str(blocker / "x")]) == 3

    def test_verify_strict_threshold_exit(self, monkeypatch, capsys):
        from prodspec import verify
        fail = verify.CheckResult("x", False, 1.0, 0.0)
        monkeypatch.setattr(verify, "identity_suite", lambda: [fail])
        monkeypatch.setattr(verify, "plumbing_suite", lambda tmp: [])
        assert cli.main(["verify", "--strict"]) == 2
        assert cli.main(["verify"]) == 0
        assert "[FAIL] x" in capsys.readouterr().out
