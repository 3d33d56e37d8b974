"""End-to-end runs of the command-line interface."""

import json
import pathlib

import pytest

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from preomp.cli import main

SCENARIOS = pathlib.Path(__file__).parent.parent / "scenarios"

ANNOTATED = """\
void work(int i, int j);

void kernel(int n, int m) {
    int i;
    int j;
    #pragma preomp parallel for private(j)
    for (i = 0; i < n; i++) {
        #pragma preomp parallel for
        for (j = 0; j < m; j++)
            work(i, j);
    }
}
"""


def test_transpile_to_stdout(tmp_path, capsys):
    src = tmp_path / "kernel.c"
    src.write_text(ANNOTATED)
    assert main(["transpile", str(src)]) == 0
    out = capsys.readouterr().out
    assert '#include "preomp_rt.h"' in out
    assert "if (preomp_decide(0," in out


def test_transpile_writes_output_and_manifest(tmp_path):
    src = tmp_path / "kernel.c"
    src.write_text(ANNOTATED)
    dest = tmp_path / "kernel.preomp.c"
    assert main(["transpile", str(src), "-o", str(dest), "--mode", "ompif"]) == 0
    text = dest.read_text()
    assert "#pragma omp parallel for private(j) if(preomp_decide(0," in text
    manifest = json.loads((tmp_path / "kernel.preomp.c.manifest").read_text())
    assert [entry["loop_id"] for entry in manifest] == [0, 1]
    assert manifest[0]["mode"] == "ompif"
    assert manifest[1]["depth"] == 1


def test_transpile_reports_diagnostics_and_fails(tmp_path, capsys):
    src = tmp_path / "bad.c"
    src.write_text(
        """\
void f(int n) {
    int i;
    #pragma preomp parallel for
    for (i = n; i > 0; i--)
        i = i;
}
"""
    )
    assert main(["transpile", str(src)]) == 1
    err = capsys.readouterr().err
    assert f"{src}:4:5: error:" in err


def test_transpile_missing_file(capsys):
    assert main(["transpile", "/no/such/file.c"]) == 1
    assert "error:" in capsys.readouterr().err


def test_transpile_parse_error_has_position(tmp_path, capsys):
    src = tmp_path / "broken.c"
    src.write_text("void f(void) {\n    int x\n}\n")
    assert main(["transpile", str(src)]) == 1
    assert f"{src}:3:" in capsys.readouterr().err


def test_simulate_report(tmp_path, capsys):
    assert main(["simulate", str(SCENARIOS / "synth.toml"), "--threads", "16"]) == 0
    report = tomllib.loads(capsys.readouterr().out)
    assert report["threads"] == 16
    assert report["decider"] == "heuristic"
    assert report["total_time"] == pytest.approx(8 * (0.079 + 0.0409))


def test_simulate_trace_and_output_file(tmp_path):
    dest = tmp_path / "run.toml"
    assert (
        main(
            [
                "simulate",
                str(SCENARIOS / "synth.toml"),
                "--threads",
                "16",
                "--decider",
                "profiling",
                "--set",
                "repeats=4",
                "--trace",
                "-o",
                str(dest),
            ]
        )
        == 0
    )
    report = tomllib.loads(dest.read_text())
    assert report["repeats"] == 4
    assert report["trace"][0].startswith("0,0,8,16,0,unprofiled,serial_profiled,")


def test_simulate_csv_sweep(capsys):
    assert (
        main(
            [
                "simulate",
                str(SCENARIOS / "synth.toml"),
                "--threads",
                "2,4,8,16",
                "--decider",
                "heuristic,profiling",
                "--format",
                "csv",
            ]
        )
        == 0
    )
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 9  # header + 4 thread counts x 2 deciders
    assert lines[0].split(",")[:3] == ["threads", "decider", "mode"]


def test_simulate_sweep_needs_csv(capsys):
    assert main(["simulate", str(SCENARIOS / "synth.toml"), "--threads", "2,4"]) == 1
    assert "csv" in capsys.readouterr().err


def test_simulate_threads_env_default(capsys, monkeypatch):
    monkeypatch.setenv("PREOMP_THREADS", "8")
    assert main(["simulate", str(SCENARIOS / "synth.toml")]) == 0
    report = tomllib.loads(capsys.readouterr().out)
    assert report["threads"] == 8


def test_simulate_force_level(capsys):
    assert (
        main(["simulate", str(SCENARIOS / "synth.toml"), "--threads", "6", "--force-level", "0"])
        == 0
    )
    report = tomllib.loads(capsys.readouterr().out)
    assert report["force_level"] == 0
    assert report["region_creates"] == 1


def test_simulate_rejects_bad_override(capsys):
    assert main(["simulate", str(SCENARIOS / "synth.toml"), "--set", "nope=1"]) == 1
    assert "error:" in capsys.readouterr().err


def test_simulate_rejects_bad_threads(capsys):
    assert main(["simulate", str(SCENARIOS / "synth.toml"), "--threads", "two"]) == 1
    assert "--threads" in capsys.readouterr().err


def test_model_prints_both_strategies(capsys):
    assert (
        main(
            [
                "model",
                "--outer-iters", "8",
                "--inner-iters", "16",
                "--t-inner", "1.0",
                "--outer-threads", "6",
                "--inner-threads", "6",
            ]
        )
        == 0
    )
    out = capsys.readouterr().out
    assert "outer_parallel_time = 32.0" in out
    assert "inner_parallel_time = 24.0" in out
    assert "threshold_outer_work" in out


def test_model_sweep_reports_crossing(capsys):
    assert (
        main(
            [
                "model",
                "--outer-iters", "8",
                "--inner-iters", "16",
                "--t-inner", "0.0409",
                "--outer-threads", "8",
                "--inner-threads", "16",
                "--sweep", "0:0.1:0.001",
            ]
        )
        == 0
    )
    out = capsys.readouterr().out
    assert "t_outer,outer_parallel_time,inner_parallel_time" in out
    crossing = float(out.rsplit("crossing = ", 1)[1].strip())
    assert crossing == pytest.approx(0.047, abs=1e-9)


def test_model_rejects_malformed_sweep(capsys):
    assert (
        main(
            [
                "model",
                "--outer-iters", "8",
                "--inner-iters", "16",
                "--t-inner", "1.0",
                "--outer-threads", "4",
                "--inner-threads", "4",
                "--sweep", "backwards",
            ]
        )
        == 1
    )
    assert "START:STOP:STEP" in capsys.readouterr().err
