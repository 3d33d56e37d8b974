"""Scenario files and report rendering.

A scenario is a TOML document describing one loop nest:

    repeats = 5
    perturbation = 0.0

    [overheads]
    region_create = 0.0
    decision_call = 0.0
    instrument_call = 0.0
    ompif_serial_region = true

    [[levels]]
    name = "outer"
    count = 8              # or: count_table = [8, 2496], count_by = "block"
    pre_work = 0.079
    parallelisable = true

Unknown keys are rejected with their path so typos surface instead of
silently simulating a different experiment.
"""

from __future__ import annotations

import csv
import io
from typing import Any, Dict, Iterable, List, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .costsim import LoopLevel, OverheadModel, SimProgram, SimReport

_TOP_KEYS = {"repeats", "perturbation", "overheads", "levels"}
_OVERHEAD_KEYS = {"region_create", "decision_call", "instrument_call", "ompif_serial_region"}
_LEVEL_KEYS = {"name", "count", "count_table", "count_by", "pre_work", "body_work", "parallelisable"}


def load_scenario(path: str, overrides: Sequence[str] = ()) -> SimProgram:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    if overrides:
        apply_overrides(data, overrides)
    return build_program(data)


def build_program(data: Dict[str, Any]) -> SimProgram:
    _check_keys(data, _TOP_KEYS, "scenario")
    if "levels" not in data:
        raise ValueError("scenario: missing required key 'levels'")
    levels_data = data["levels"]
    if not isinstance(levels_data, list) or not all(isinstance(lv, dict) for lv in levels_data):
        raise ValueError("scenario: 'levels' must be an array of tables")
    levels = [_build_level(lv, f"levels[{i}]") for i, lv in enumerate(levels_data)]
    overheads = _build_overheads(data.get("overheads", {}))
    return SimProgram(
        levels=tuple(levels),
        repeats=_expect_int(data.get("repeats", 1), "repeats"),
        perturbation=_expect_number(data.get("perturbation", 0.0), "perturbation"),
        overheads=overheads,
    )


def _build_level(data: Dict[str, Any], path: str) -> LoopLevel:
    _check_keys(data, _LEVEL_KEYS, path)
    if "name" not in data or not isinstance(data["name"], str):
        raise ValueError(f"{path}: 'name' is required and must be a string")
    count_table = None
    if "count_table" in data:
        table = data["count_table"]
        if not isinstance(table, list) or not all(_is_int(c) for c in table):
            raise ValueError(f"{path}.count_table: must be an array of integers")
        count_table = tuple(table)
    count_by = data.get("count_by")
    if count_by is not None and not isinstance(count_by, str):
        raise ValueError(f"{path}.count_by: must be a level name")
    return LoopLevel(
        name=data["name"],
        count=_expect_int(data["count"], f"{path}.count") if "count" in data else None,
        count_table=count_table,
        count_by=count_by,
        pre_work=_expect_number(data.get("pre_work", 0.0), f"{path}.pre_work"),
        body_work=_expect_number(data.get("body_work", 0.0), f"{path}.body_work"),
        parallelisable=_expect_bool(data.get("parallelisable", False), f"{path}.parallelisable"),
    )


def _build_overheads(data: Dict[str, Any]) -> OverheadModel:
    if not isinstance(data, dict):
        raise ValueError("overheads: must be a table")
    _check_keys(data, _OVERHEAD_KEYS, "overheads")
    return OverheadModel(
        region_create=_expect_number(data.get("region_create", 0.0), "overheads.region_create"),
        decision_call=_expect_number(data.get("decision_call", 0.0), "overheads.decision_call"),
        instrument_call=_expect_number(data.get("instrument_call", 0.0), "overheads.instrument_call"),
        ompif_serial_region=_expect_bool(
            data.get("ompif_serial_region", True), "overheads.ompif_serial_region"
        ),
    )


def _check_keys(data: Dict[str, Any], allowed: set, path: str) -> None:
    for key in data:
        if key not in allowed:
            raise ValueError(f"{path}: unknown key {key!r}")


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _expect_int(value: Any, path: str) -> int:
    if not _is_int(value):
        raise ValueError(f"{path}: expected an integer, got {value!r}")
    return value


def _expect_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _expect_bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ValueError(f"{path}: expected a boolean, got {value!r}")
    return value


# --- command-line overrides ---


def apply_overrides(data: Dict[str, Any], assignments: Sequence[str]) -> Dict[str, Any]:
    """Apply ``key=value`` assignments (dotted paths, list indices numeric:
    ``levels.1.count=32``) onto the raw scenario mapping, in order."""
    for assignment in assignments:
        key, sep, raw = assignment.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"override {assignment!r} is not of the form key=value")
        _assign(data, key.strip(), _parse_value(raw.strip()))
    return data


def _parse_value(raw: str) -> Any:
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def _assign(data: Any, dotted: str, value: Any) -> None:
    node = data
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = _descend(node, part, dotted)
    leaf = parts[-1]
    if isinstance(node, list):
        node[_list_index(leaf, node, dotted)] = value
    elif isinstance(node, dict):
        if leaf not in node:
            raise ValueError(f"override {dotted!r}: scenario has no key {leaf!r}")
        node[leaf] = value
    else:
        raise ValueError(f"override {dotted!r}: {leaf!r} cannot be assigned into a scalar")


def _descend(node: Any, part: str, dotted: str) -> Any:
    if isinstance(node, list):
        return node[_list_index(part, node, dotted)]
    if isinstance(node, dict):
        if part not in node:
            raise ValueError(f"override {dotted!r}: scenario has no key {part!r}")
        return node[part]
    raise ValueError(f"override {dotted!r}: cannot descend into {part!r}")


def _list_index(part: str, node: List[Any], dotted: str) -> int:
    if not part.isdigit():
        raise ValueError(f"override {dotted!r}: list index expected, got {part!r}")
    index = int(part)
    if index >= len(node):
        raise ValueError(f"override {dotted!r}: index {index} out of range")
    return index


# --- report rendering ---


def _toml_scalar(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return repr(value)


def render_report(report: SimReport, include_trace: bool = False) -> str:
    """Render a simulation report as TOML text."""
    lines = [
        f"total_time = {_toml_scalar(report.total_time)}",
        f"threads = {report.threads}",
        f"decider = {_toml_scalar(report.decider)}",
        f"mode = {_toml_scalar(report.mode)}",
        f"threshold = {_toml_scalar(report.threshold)}",
        f"repeats = {report.repeats}",
        f"decision_calls = {report.decision_calls}",
        f"bookkeeping_ops = {report.bookkeeping_ops}",
        f"region_creates = {report.region_creates}",
    ]
    if report.force_level is not None:
        lines.append(f"force_level = {report.force_level}")
    lines.append(f"levels = [{', '.join(_toml_scalar(n) for n in report.levels)}]")
    lines.append(f"site_levels = [{', '.join(_toml_scalar(n) for n in report.site_levels)}]")
    if include_trace:
        lines.append("trace = [")
        for record in report.trace:
            lines.append(f"  {_toml_scalar(record.to_line())},")
        lines.append("]")
    for table, mapping in (
        ("per_level_visit_counts", report.per_level_visit_counts),
        ("per_level_parallel_counts", report.per_level_parallel_counts),
        ("invalidations", report.invalidations),
    ):
        lines.append("")
        lines.append(f"[{table}]")
        for name, value in mapping.items():
            lines.append(f"{_toml_scalar(name)} = {value}")
    return "\n".join(lines) + "\n"


def render_csv(reports: Iterable[SimReport]) -> str:
    """One row per simulation, for plotting time-vs-threads curves."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        [
            "threads",
            "decider",
            "mode",
            "threshold",
            "repeats",
            "total_time",
            "decision_calls",
            "bookkeeping_ops",
            "region_creates",
        ]
    )
    for report in reports:
        writer.writerow(
            [
                report.threads,
                report.decider,
                report.mode,
                report.threshold,
                report.repeats,
                repr(report.total_time),
                report.decision_calls,
                report.bookkeeping_ops,
                report.region_creates,
            ]
        )
    return buf.getvalue()
