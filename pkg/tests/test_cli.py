import json
from pathlib import Path

import pytest

from odeobs.cli import main
from odeobs.report import render_text

from conftest import model_path

SCHEMA_PATH = Path(__file__).resolve().parent.parent / "schema" / "report-v1.json"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestAnalyze:
    def test_sir_text_verdicts(self, capsys):
        code, out, _ = run(capsys, "analyze", str(model_path("sir")))
        assert code == 0
        assert "R = (R): graphical sufficient" in out
        assert "observable-generic" in out
        assert "I = (I): graphical insufficient" in out
        assert "+ observe {S}: sufficient" in out
        assert "+ observe {I}: sufficient" in out

    def test_mm_reproduces_sensor_story(self, capsys):
        code, out, _ = run(capsys, "analyze", str(model_path("mm")))
        assert code == 0
        assert "minimal sensor sets: {p}" in out
        assert "+ observe {s}: sufficient" in out
        assert "+ observe {c}: sufficient" in out

    def test_missing_file_is_input_error(self, capsys):
        code, _, err = run(capsys, "analyze", "no_such.model")
        assert code == 1
        assert "cannot read" in err

    def test_broken_model_is_input_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.model"
        bad.write_text("model: x\nparams: a\nstates: y\n")
        code, _, err = run(capsys, "analyze", str(bad))
        assert code == 1
        assert "parse error" in err

    def test_reports_byte_identical_across_runs(self, tmp_path, capsys):
        for name in ("sir", "mm", "toy", "lv"):
            paths = []
            for run_idx in (1, 2):
                out_path = tmp_path / f"{name}.{run_idx}.json"
                code, _, _ = run(
                    capsys,
                    "analyze",
                    str(model_path(name)),
                    "--seed",
                    "0",
                    "--json",
                    str(out_path),
                )
                assert code == 0
                paths.append(out_path)
            assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_json_validates_against_shipped_schema(self, tmp_path, capsys):
        jsonschema = pytest.importorskip("jsonschema")
        schema = json.loads(SCHEMA_PATH.read_text())
        for name in ("sir", "mm", "toy", "lv"):
            out_path = tmp_path / f"{name}.json"
            run(capsys, "analyze", str(model_path(name)), "--json", str(out_path))
            jsonschema.validate(json.loads(out_path.read_text()), schema)

    def test_text_summary_is_derived_from_json(self, tmp_path, capsys):
        out_path = tmp_path / "sir.json"
        code, out, _ = run(
            capsys, "analyze", str(model_path("sir")), "--json", str(out_path)
        )
        assert code == 0
        report = json.loads(out_path.read_text())
        assert render_text(report) == out

    def test_seed_changes_sample_points_not_verdicts(self, tmp_path, capsys):
        reports = []
        for seed in ("0", "1"):
            out_path = tmp_path / f"sir.{seed}.json"
            run(
                capsys,
                "analyze",
                str(model_path("sir")),
                "--seed",
                seed,
                "--json",
                str(out_path),
            )
            reports.append(json.loads(out_path.read_text()))
        a, b = reports
        assert a != b  # sample points differ
        for obs_a, obs_b in zip(a["observations"], b["observations"]):
            assert (
                obs_a["assessment"]["observable_generic"]
                == obs_b["assessment"]["observable_generic"]
            )

    def test_explicit_k_flag(self, tmp_path, capsys):
        out_path = tmp_path / "sir.json"
        code, _, _ = run(
            capsys,
            "analyze",
            str(model_path("sir")),
            "--k",
            "4",
            "--json",
            str(out_path),
        )
        assert code == 0
        report = json.loads(out_path.read_text())
        assert report["k"] == 4
        assert report["observations"][0]["assessment"]["k"] == 4


class TestGraph:
    def test_sir_original_structure(self, capsys):
        code, out, _ = run(capsys, "graph", str(model_path("sir")))
        assert code == 0
        assert "R [root=true, penwidth=2];" in out
        assert out.count(" -> ") == 5

    def test_sir_reduced_makes_infected_root(self, capsys):
        code, out, _ = run(capsys, "graph", str(model_path("sir")), "--reduce", "N:I")
        assert code == 0
        assert "I [root=true, penwidth=2];" in out
        assert "R [root=true" not in out

    def test_mm_substrate_reduction_makes_complex_root(self, capsys):
        code, out, _ = run(capsys, "graph", str(model_path("mm")), "--reduce", "S0:c")
        assert code == 0
        assert "c [root=true, penwidth=2];" in out
        assert "p [root=true" not in out

    def test_dot_file_written(self, tmp_path, capsys):
        out_path = tmp_path / "sir.dot"
        code, out, _ = run(
            capsys, "graph", str(model_path("sir")), "--dot", str(out_path)
        )
        assert code == 0 and out == ""
        assert out_path.read_text().startswith("digraph inference {")

    def test_bad_reduce_spec(self, capsys):
        code, _, err = run(capsys, "graph", str(model_path("sir")), "--reduce", "N")
        assert code == 1

    def test_unknown_level(self, capsys):
        code, _, err = run(capsys, "graph", str(model_path("sir")), "--reduce", "Z:I")
        assert code == 1


class TestVerify:
    def test_all_fixtures_exact(self, capsys):
        for name, levels in (
            ("sir", ["N"]),
            ("mm", ["E0", "S0"]),
            ("toy", ["Q0"]),
            ("lv", ["Q0"]),
        ):
            code, out, _ = run(capsys, "verify", str(model_path(name)))
            assert code == 0
            for level in levels:
                assert f"{level} = " in out and ": exact" in out

    def test_refuted_exits_three_with_witness(self, tmp_path, capsys):
        bad = tmp_path / "bad.model"
        bad.write_text(
            "model: bad\n"
            "params: beta, lambda\n"
            "states: S, I, R\n"
            "dS/dt = -beta*S*I\n"
            "dI/dt = beta*S*I - lambda*I\n"
            "dR/dt = lambda*I\n"
            "conserved W: S + I\n"
        )
        code, out, _ = run(capsys, "verify", str(bad))
        assert code == 3
        assert "refuted" in out and "witness" in out


class TestSimulate:
    def test_sir_run_with_csv_and_drift(self, tmp_path, capsys):
        out_path = tmp_path / "sir.csv"
        code, out, _ = run(
            capsys,
            "simulate",
            str(model_path("sir")),
            "--x0",
            "997,3,0",
            "--params",
            "beta=0.0004,lambda=0.04",
            "--dt",
            "0.01",
            "--T",
            "100",
            "--csv",
            str(out_path),
        )
        assert code == 0
        assert "drift N:" in out
        drift = float(out.split("drift N:")[1].strip())
        assert drift < 1e-6
        lines = out_path.read_text().strip().split("\n")
        assert lines[0] == "t,S,I,R"
        assert len(lines) == 10002

    def test_divergence_flagged(self, tmp_path, capsys):
        code, out, _ = run(
            capsys,
            "simulate",
            str(model_path("toy")),
            "--x0",
            "1,1",
            "--params",
            "a=80",
            "--dt",
            "0.1",
            "--T",
            "20",
        )
        assert code == 0
        assert "divergence" in out

    def test_wrong_arity_is_input_error(self, capsys):
        code, _, err = run(
            capsys,
            "simulate",
            str(model_path("sir")),
            "--x0",
            "1,2",
            "--params",
            "beta=1,lambda=1",
            "--dt",
            "0.1",
            "--T",
            "1",
        )
        assert code == 1
        assert "--x0" in err
