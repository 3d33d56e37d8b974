"""Directive-driven loop parallelisation toolkit.

Annotate C loops with ``#pragma preomp parallel for``, transpile them into
OpenMP code that defers the serial/parallel choice to run time, and study
the decision policies under a deterministic virtual-time simulator.
"""

from .costsim import (
    LoopLevel,
    OverheadModel,
    SimProgram,
    SimReport,
    analytic_inner,
    analytic_outer,
    simulate,
    sweep_crossing,
    threshold_outer_work,
)
from .decider import (
    DecisionRecord,
    Decision,
    DeciderKind,
    LoopProfileState,
    Phase,
    ThreadContext,
    decide,
    heuristic_decide,
    profiling_decide,
    record_timing,
)
from .descriptors import (
    DescriptorError,
    LoopDescriptor,
    extract_descriptors,
    iteration_count,
    static_iteration_count,
    validate,
)
from .diagnostics import Diagnostic, ParseError, TransformError, has_errors
from .emit import EmittedUnit, ManifestEntry, emit_c
from .parser import parse_unit
from .scenario import build_program, load_scenario, render_csv, render_report
from .transform import GenerationMode, strip_instrumentation, transform, transpile_source

__version__ = "0.1.0"

__all__ = [
    "Decision",
    "DecisionRecord",
    "DeciderKind",
    "DescriptorError",
    "Diagnostic",
    "EmittedUnit",
    "GenerationMode",
    "LoopDescriptor",
    "LoopLevel",
    "LoopProfileState",
    "ManifestEntry",
    "OverheadModel",
    "ParseError",
    "Phase",
    "SimProgram",
    "SimReport",
    "ThreadContext",
    "TransformError",
    "analytic_inner",
    "analytic_outer",
    "build_program",
    "decide",
    "emit_c",
    "extract_descriptors",
    "has_errors",
    "heuristic_decide",
    "iteration_count",
    "load_scenario",
    "parse_unit",
    "profiling_decide",
    "record_timing",
    "render_csv",
    "render_report",
    "simulate",
    "static_iteration_count",
    "strip_instrumentation",
    "sweep_crossing",
    "threshold_outer_work",
    "transform",
    "transpile_source",
    "validate",
    "__version__",
]
