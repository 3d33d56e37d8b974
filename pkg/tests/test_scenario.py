"""Scenario loading, --set overrides, and report rendering."""

import pathlib

import pytest

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from preomp.costsim import simulate
from preomp.scenario import (
    apply_overrides,
    build_program,
    load_scenario,
    render_csv,
    render_report,
)

SCENARIOS = pathlib.Path(__file__).parent.parent / "scenarios"


def test_load_synth_scenario():
    program = load_scenario(str(SCENARIOS / "synth.toml"))
    assert [lvl.name for lvl in program.levels] == ["outer", "inner"]
    assert program.levels[0].count == 8
    assert program.levels[0].pre_work == 0.079
    assert program.levels[1].body_work == 0.0409
    assert program.repeats == 1
    assert all(lvl.parallelisable for lvl in program.levels)


def test_load_cfd_scenario():
    program = load_scenario(str(SCENARIOS / "cfd.toml"))
    names = [lvl.name for lvl in program.levels]
    assert names == ["block", "harmonic", "j", "i"]
    j = program.levels[2]
    assert j.count_table == (8, 2496, 8, 2496)
    assert j.count_by == "block"
    assert program.repeats == 5


def test_shipped_scenarios_simulate(tmp_path):
    for path in SCENARIOS.glob("*.toml"):
        program = load_scenario(str(path))
        report = simulate(program, 4)
        assert report.total_time > 0


MINIMAL = {
    "levels": [
        {"name": "outer", "count": 4, "pre_work": 0.5, "parallelisable": True},
        {"name": "inner", "count": 8, "body_work": 0.1, "parallelisable": True},
    ]
}


def test_build_program_defaults():
    program = build_program(dict(MINIMAL))
    assert program.repeats == 1
    assert program.perturbation == 0.0
    assert program.overheads.region_create == 0.0
    assert program.overheads.ompif_serial_region is True


@pytest.mark.parametrize(
    "mutate, path_fragment",
    [
        (lambda d: d.update(repeat=3), r"unknown key 'repeat'"),
        (lambda d: d["levels"][0].update(pre_wrk=1.0), r"levels\[0\]: unknown key 'pre_wrk'"),
        (lambda d: d.setdefault("overheads", {}).update(region=1.0), r"overheads: unknown key 'region'"),
    ],
)
def test_unknown_keys_are_rejected_with_their_path(mutate, path_fragment):
    data = {"levels": [dict(lvl) for lvl in MINIMAL["levels"]]}
    mutate(data)
    with pytest.raises(ValueError, match=path_fragment):
        build_program(data)


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d.update(repeats="five"), "repeats"),
        (lambda d: d["levels"][0].update(count=2.5), "count"),
        (lambda d: d["levels"][0].update(count=True), "count"),
        (lambda d: d["levels"][0].pop("name"), "name"),
        (lambda d: d.update(levels=[]), "at least one loop level"),
    ],
)
def test_type_errors_are_descriptive(mutate, message):
    data = {"levels": [dict(lvl) for lvl in MINIMAL["levels"]]}
    mutate(data)
    with pytest.raises(ValueError, match=message):
        build_program(data)


def test_overrides_change_nested_values():
    data = {"repeats": 1, "levels": [dict(lvl) for lvl in MINIMAL["levels"]]}
    apply_overrides(data, ["repeats=10", "levels.0.count=64", "levels.1.parallelisable=false"])
    assert data["repeats"] == 10
    assert data["levels"][0]["count"] == 64
    assert data["levels"][1]["parallelisable"] is False


def test_overrides_require_existing_keys():
    data = {"repeats": 1, "levels": [dict(lvl) for lvl in MINIMAL["levels"]]}
    with pytest.raises(ValueError, match="levels.5"):
        apply_overrides(data, ["levels.5.count=3"])
    with pytest.raises(ValueError, match="typo"):
        apply_overrides(data, ["typo=3"])
    with pytest.raises(ValueError, match="="):
        apply_overrides(data, ["repeats"])


def test_load_scenario_with_overrides(tmp_path):
    program = load_scenario(str(SCENARIOS / "synth.toml"), overrides=["repeats=7"])
    assert program.repeats == 7


def test_render_report_is_valid_toml():
    program = build_program(dict(MINIMAL))
    report = simulate(program, 4, decider="profiling")
    text = render_report(report, include_trace=True)
    parsed = tomllib.loads(text)
    assert parsed["threads"] == 4
    assert parsed["decider"] == "profiling"
    assert parsed["total_time"] == report.total_time
    assert parsed["levels"] == ["outer", "inner"]
    assert parsed["per_level_visit_counts"]["inner"] == report.per_level_visit_counts["inner"]
    assert len(parsed["trace"]) == len(report.trace)


def test_render_report_omits_trace_by_default():
    program = build_program(dict(MINIMAL))
    report = simulate(program, 4)
    parsed = tomllib.loads(render_report(report))
    assert "trace" not in parsed


def test_render_csv_one_row_per_report():
    program = build_program(dict(MINIMAL))
    reports = [simulate(program, t) for t in (1, 2, 4)]
    lines = render_csv(reports).strip().splitlines()
    assert lines[0].startswith("threads,decider,mode,")
    assert len(lines) == 4
    assert lines[1].split(",")[0] == "1"
    # total_time column survives a float round-trip unharmed
    header = lines[0].split(",")
    column = header.index("total_time")
    assert float(lines[3].split(",")[column]) == reports[2].total_time
