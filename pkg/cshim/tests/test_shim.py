"""The compiled runtime against the simulator.

Builds the static library, transpiles the benchmark nests, compiles them
with OpenMP, runs them with decision tracing on, and requires the trace to
match the simulator's for the equivalent scenario line for line: same loop
ids, invocation order, trip counts, thread counts, phases, decisions and
reasons.  Benchmark work is sleep-based, so the profiled orderings hold
even on a single busy core.
"""

import os
import shutil
import subprocess
from pathlib import Path

import pytest

from preomp.costsim import LoopLevel, SimProgram, simulate
from preomp.decider import DecisionRecord
from preomp.scenario import load_scenario

CSHIM = Path(__file__).resolve().parents[1]
REPO = CSHIM.parent
SYNTH_SCENARIO = REPO / "scenarios" / "synth.toml"

pytestmark = pytest.mark.skipif(
    shutil.which("gcc") is None or shutil.which("make") is None,
    reason="needs gcc and make",
)


def _run(cmd, **kwargs):
    proc = subprocess.run([str(c) for c in cmd], capture_output=True, text=True, **kwargs)
    if proc.returncode != 0:
        raise AssertionError(
            "command failed: %s\n%s\n%s" % (" ".join(map(str, cmd)), proc.stdout, proc.stderr)
        )
    return proc


@pytest.fixture(scope="module")
def shim_lib():
    _run(["make", "-C", CSHIM, "libpreomp_rt.a"])
    return CSHIM / "libpreomp_rt.a"


@pytest.fixture(scope="module")
def benches(shim_lib, tmp_path_factory):
    """Transpiled and compiled benchmark binaries, one per source nest."""
    transpile = shutil.which("preomp")
    assert transpile, "the preomp console script is not on PATH"
    out = tmp_path_factory.mktemp("bench")
    binaries = {}
    for name, extra in (("synth_nest", []), ("ragged_rows", ["-DBENCH_RAGGED"])):
        generated = out / (name + ".gen.c")
        _run([transpile, "transpile", CSHIM / "bench" / (name + ".c"),
              "--mode", "duplicate", "-o", generated])
        binary = out / name
        _run(["gcc", "-O2", "-fopenmp", "-I%s" % CSHIM, *extra, generated,
              CSHIM / "bench" / "bench_main.c", "-L%s" % CSHIM, "-lpreomp_rt",
              "-o", binary])
        binaries[name] = binary
    return binaries


def sort_trace(records):
    return sorted(records, key=lambda r: (r.loop_id, r.invocation_index))


def lines(records):
    return [r.to_line() for r in records]


def run_bench(binary, tmp_path, decider, threads, repeats, extra_env=None):
    trace_file = tmp_path / ("%s.%s.%d.trace" % (binary.name, decider, threads))
    env = dict(os.environ)
    env["OMP_NUM_THREADS"] = str(threads)
    env["PREOMP_DECIDER"] = decider
    env["PREOMP_TRACE"] = str(trace_file)
    env.update(extra_env or {})
    _run([binary, str(repeats)], env=env)
    records = [
        DecisionRecord.from_line(line)
        for line in trace_file.read_text().splitlines()
        if line.strip()
    ]
    return sort_trace(records)


def synth_trace(decider, threads, repeats, threshold=1.0):
    program = load_scenario(SYNTH_SCENARIO, overrides=("repeats=%d" % repeats,))
    report = simulate(program, threads, decider=decider, threshold=threshold)
    return sort_trace(report.trace)


def ragged_program(repeats):
    # Mirrors bench/ragged_rows.c: only the inner loop is managed and its
    # width follows the row index.
    return SimProgram(
        levels=(
            LoopLevel("rows", count=8, pre_work=0.00079),
            LoopLevel(
                "cols",
                count_table=(16, 16, 16, 16, 24, 24, 24, 24),
                count_by="rows",
                body_work=0.00409,
                parallelisable=True,
            ),
        ),
        repeats=repeats,
    )


def test_selftest_modes(shim_lib):
    _run(["make", "-C", CSHIM, "check"])


@pytest.mark.parametrize("threads", [2, 4, 8, 16])
def test_heuristic_decisions_match_simulator(benches, tmp_path, threads):
    got = run_bench(benches["synth_nest"], tmp_path, "heuristic", threads, repeats=3)
    want = synth_trace("heuristic", threads, repeats=3)
    assert lines(got) == lines(want)


def test_heuristic_switches_level_at_sixteen_threads(benches, tmp_path):
    # 8 outer iterations feed 8 threads but starve 16, where the inner
    # loop's 16 iterations take over
    eight = run_bench(benches["synth_nest"], tmp_path, "heuristic", 8, repeats=1)
    sixteen = run_bench(benches["synth_nest"], tmp_path, "heuristic", 16, repeats=1)
    assert [r.decision for r in eight if r.loop_id == 0] == ["parallel"]
    assert all(r.decision == "serial" for r in eight if r.loop_id == 1)
    assert [r.decision for r in sixteen if r.loop_id == 0] == ["serial"]
    assert all(r.decision == "parallel" for r in sixteen if r.loop_id == 1)


def test_relaxed_profiling_matches_simulator(benches, tmp_path):
    got = run_bench(benches["synth_nest"], tmp_path, "relaxed_profiling", 16, repeats=5)
    want = synth_trace("relaxed_profiling", 16, repeats=5)
    assert lines(got) == lines(want)
    # outer loop: one serial probe, one parallel probe, then it settles on
    # the parallel copy the heuristic alone would never pick at 16 threads
    outer = [r for r in got if r.loop_id == 0]
    assert [r.reason for r in outer] == [
        "profile_serial",
        "profile_parallel",
        "steady_state",
        "steady_state",
        "steady_state",
    ]
    assert all(r.decision == "parallel" for r in outer[2:])


def test_accurate_profiling_matches_simulator(benches, tmp_path):
    # the parallel probe's work count crosses the thread team, so this also
    # pins the cross-thread iteration counting
    got = run_bench(benches["synth_nest"], tmp_path, "profiling", 16, repeats=5)
    want = synth_trace("profiling", 16, repeats=5)
    assert lines(got) == lines(want)
    outer = [r.reason for r in got if r.loop_id == 0]
    assert outer[:2] == ["profile_serial", "profile_parallel"]
    assert outer[2:] == ["steady_state"] * 3


def test_relaxed_invalidation_follows_extent_changes(benches, tmp_path):
    got = run_bench(benches["ragged_rows"], tmp_path, "relaxed_profiling", 16, repeats=2)
    want = simulate(ragged_program(2), 16, decider="relaxed_profiling", threshold=2.0)
    assert lines(got) == lines(sort_trace(want.trace))
    # every width flip restarts the profile cycle on the very next call
    assert [r.reason for r in got] == [
        "profile_serial",
        "profile_parallel",
        "steady_state",
        "steady_state",
    ] * 4


def test_accurate_invalidation_lags_one_run(benches, tmp_path):
    got = run_bench(benches["ragged_rows"], tmp_path, "profiling", 16, repeats=2)
    want = simulate(ragged_program(2), 16, decider="profiling", threshold=2.0)
    assert lines(got) == lines(sort_trace(want.trace))
    # the stale profile answers once more after each width flip, because the
    # mismatch only surfaces when the run's work count comes back
    assert [r.reason for r in got] == [
        "profile_serial",
        "profile_parallel",
        "steady_state",
        "steady_state",
    ] + [
        "steady_state",
        "profile_serial",
        "profile_parallel",
        "steady_state",
    ] * 3


def test_environment_threshold_override_matches_simulator(benches, tmp_path):
    # PREOMP_THRESHOLD=0.4 lets 8 outer iterations pass on 16 threads even
    # though the compiled-in threshold of 1.0 would refuse
    got = run_bench(
        benches["synth_nest"], tmp_path, "heuristic", 16, repeats=2,
        extra_env={"PREOMP_THRESHOLD": "0.4"},
    )
    want = synth_trace("heuristic", 16, repeats=2, threshold=0.4)
    assert lines(got) == lines(want)
    assert [r.decision for r in got if r.loop_id == 0] == ["parallel", "parallel"]


def test_trace_invocations_are_dense(benches, tmp_path):
    got = run_bench(benches["synth_nest"], tmp_path, "heuristic", 8, repeats=2)
    by_loop = {}
    for r in got:
        by_loop.setdefault(r.loop_id, []).append(r.invocation_index)
    assert by_loop[0] == [0, 1]
    assert by_loop[1] == list(range(16))
