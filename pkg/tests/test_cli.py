"""CLI, corpus harness, and plot-data emission."""

import csv
import json
from pathlib import Path

import pytest

from infgrad.cli import main
from infgrad.report import (
    AnalysisRequest,
    GoldenCase,
    builtin_corpus_dir,
    run_corpus,
    run_request,
    strip_volatile,
    summarize_corpus,
)

FAST_CASE = {
    "id": "case-a",
    "provenance": "trivial",
    "request": {"kind": "subdiff", "f": "2*x1"},
    "expected": {"set": {"vertices": [[2.0]], "rays": []}},
}


def write_case(path: Path, obj: dict):
    path.write_text(json.dumps(obj))


class TestRunRequest:
    def test_subdiff_report_shape(self):
        report = run_request(AnalysisRequest(kind="subdiff", f="exp(x1)"))
        assert report["schema"] == 1
        assert report["subgradients"]["set"]["rays"] == [[1.0]]
        assert report["request"]["f"] == "exp(x1)"
        assert "timestamp" in report["meta"]
        assert len(report["duality_residuals"]) == 16

    def test_lipschitz_report(self):
        report = run_request(AnalysisRequest(kind="lipschitz", f="-abs(x1)"))
        assert report["lipschitz"]["verdict"] == "lipschitz_at_infinity"
        got = sorted(v[0] for v in report["subgradients"]["set"]["vertices"])
        assert got == pytest.approx([-1.0, 1.0], abs=1e-6)

    def test_validation_errors(self):
        with pytest.raises(ValueError):
            run_request(AnalysisRequest(kind="subdiff"))
        with pytest.raises(ValueError):
            run_request(AnalysisRequest(kind="nope", f="x1"))


class TestCli:
    def test_subdiff_stdout(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code = main(["subdiff", "--f", "2*x1", "--out", str(out)])
        assert code == 0
        report = json.loads(out.read_text())
        verts = report["subgradients"]["set"]["vertices"]
        assert len(verts) == 1
        assert verts[0][0] == pytest.approx(2.0, abs=1e-9)

    def test_malformed_expression_exit_2(self, capsys):
        assert main(["subdiff", "--f", "exp(x1"]) == 2
        assert "parse error" in capsys.readouterr().err

    def test_capability_exit_3(self, capsys):
        # exact cones on a smooth set are a capability error
        assert main(["cones", "--f", "x1^3"]) == 3

    def test_ladder_flags(self, tmp_path):
        out = tmp_path / "r.json"
        code = main(["subdiff", "--f", "2*x1", "--out", str(out),
                     "--radii", "10,100", "--steps", "0.1,0.01", "--eps", "0.5,0.1",
                     "--samples", "16", "--seed", "3"])
        assert code == 0
        req = json.loads(out.read_text())["request"]
        assert req["cfg"]["radii"] == [10.0, 100.0]
        assert req["cfg"]["seed"] == 3

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"radii": [10.0, 100.0], "samples": 8}))
        out = tmp_path / "r.json"
        assert main(["subdiff", "--f", "2*x1", "--config", str(cfg), "--out", str(out)]) == 0
        assert json.loads(out.read_text())["request"]["cfg"]["samples"] == 8


class TestCorpusHarness:
    def test_shipped_corpus_is_tagged(self):
        for fp in builtin_corpus_dir().glob("*.json"):
            obj = json.loads(fp.read_text())
            assert obj["provenance"] in ("paper", "trivial", "derived-oracle")

    def test_small_corpus_passes(self, tmp_path):
        write_case(tmp_path / "a.json", FAST_CASE)
        results = run_corpus(tmp_path)
        assert all(r.passed for r in results)

    def test_perturbed_expectation_fails_exactly_once(self, tmp_path):
        write_case(tmp_path / "a.json", FAST_CASE)
        bad = json.loads(json.dumps(FAST_CASE))
        bad["id"] = "case-b"
        bad["expected"]["set"]["vertices"] = [[2.5]]
        write_case(tmp_path / "b.json", bad)
        results = run_corpus(tmp_path)
        assert sum(not r.passed for r in results) == 1
        assert main(["corpus", str(tmp_path)]) == 1

    def test_empty_corpus_passes_with_warning(self, tmp_path, capsys):
        assert main(["corpus", str(tmp_path)]) == 0
        assert "0/0" in capsys.readouterr().out

    def test_untagged_case_refused(self, tmp_path):
        bad = json.loads(json.dumps(FAST_CASE))
        del bad["provenance"]
        write_case(tmp_path / "a.json", bad)
        results = run_corpus(tmp_path)
        assert not results[0].passed
        assert "provenance" in results[0].message

    def test_missing_expected_listed_run_continues(self, tmp_path):
        write_case(tmp_path / "a.json", FAST_CASE)
        bad = json.loads(json.dumps(FAST_CASE))
        bad["id"] = "case-b"
        del bad["expected"]
        write_case(tmp_path / "b.json", bad)
        results = run_corpus(tmp_path)
        assert len(results) == 2
        assert sum(r.passed for r in results) == 1
        msgs = [r.message for r in results if not r.passed]
        assert any("expected" in m for m in msgs)

    def test_summary_format(self, tmp_path):
        write_case(tmp_path / "a.json", FAST_CASE)
        text = summarize_corpus(run_corpus(tmp_path))
        assert "[PASS] case-a (trivial)" in text


class TestPlotData:
    def test_csv_and_figure(self, tmp_path):
        out = tmp_path / "plot"
        code = main(["plotdata", "--f", "piecewise(x1 <= 0: 0; else: -x1)", "--out", str(out)])
        assert code == 0
        rows = list(csv.DictReader((tmp_path / "plot.csv").open()))
        assert len(rows) == 16
        residuals = [float(r["residual"]) for r in rows if r["residual"] not in ("", "+inf")]
        assert max(residuals) < 1e-3
        assert (tmp_path / "plot.png").stat().st_size > 0

    def test_unbounded_set_marks_infinite_support(self, tmp_path):
        out = tmp_path / "plot"
        assert main(["plotdata", "--f", "exp(x1)", "--out", str(out)]) == 0
        raw = (tmp_path / "plot.csv").read_text()
        assert "+inf" in raw

    def test_empty_set_support_is_minus_inf(self, tmp_path):
        out = tmp_path / "plot"
        assert main(["plotdata", "--f", "x1^3", "--out", str(out)]) == 0
        raw = (tmp_path / "plot.csv").read_text()
        assert "-inf" in raw

    def test_from_existing_report(self, tmp_path):
        rpt = tmp_path / "r.json"
        # leading-dash expressions need the --f=EXPR form
        assert main(["subdiff", "--f=-abs(x1)", "--out", str(rpt)]) == 0
        assert main(["plotdata", "--report", str(rpt), "--out", str(tmp_path / "p")]) == 0
        assert (tmp_path / "p.csv").exists()


class TestDeterminism:
    def test_identical_seed_identical_report(self):
        req = AnalysisRequest(kind="subdiff", f="-abs(x1)")
        r1 = json.dumps(strip_volatile(run_request(req)), sort_keys=True)
        r2 = json.dumps(strip_volatile(run_request(req)), sort_keys=True)
        assert r1 == r2
