"""Virtual-time execution of declarative loop nests, plus the closed-form
cost model it is validated against.

The simulator runs a nest of loop levels under deterministic simulated time:
parallel execution is modeled arithmetically (a level run on T threads costs
its most loaded static chunk), decisions are made by the reference deciders,
and every configured overhead is charged as virtual duration.  Profiling
deciders therefore "measure" simulated times that already include region and
instrumentation costs, which is what makes their behaviour worth studying.

Closed-form model, for a two-level nest with ``o`` outer and ``i`` inner
iterations, ``t_o`` work between the loops and ``t_i`` work per innermost
iteration:

* parallelising the outer loop on ``To`` threads costs
  ``ceil(o/To) * (t_o + i*t_i)``;
* parallelising the inner loop on ``Ti`` threads costs
  ``o * (t_o + ceil(i/Ti)*t_i)``;
* the break-even amount of inter-loop work below which the inner strategy
  wins is ``i*t_i * (1/To - 1/Ti) / (1 - 1/To)``.

On uniform nests with divisible chunks the simulator reproduces the first
two formulas bit-for-bit; tests rely on that, so aggregation here uses
``math.fsum`` (an exact sum of equal addends rounds to the same float as the
product).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .decider import (
    REASON_FORCED,
    DecisionRecord,
    Decision,
    DeciderKind,
    LoopProfileState,
    heuristic_decide,
    profiling_decide,
    record_timing,
)
from .transform import GenerationMode


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class OverheadModel:
    """Virtual durations charged by the machinery around the loops.

    ``ompif_serial_region`` models the OpenMP behaviour where a parallel-for
    construct with a false ``if`` clause still sets up its (one-thread)
    region: when set, ompif-mode sites pay ``region_create`` on serial
    decisions too.
    """

    region_create: float = 0.0
    decision_call: float = 0.0
    instrument_call: float = 0.0
    ompif_serial_region: bool = True

    def __post_init__(self) -> None:
        for name in ("region_create", "decision_call", "instrument_call"):
            if getattr(self, name) < 0:
                raise ValueError(f"overhead {name} must be >= 0")


@dataclass(frozen=True)
class LoopLevel:
    """One loop of the nest.

    Exactly one of ``count`` / ``count_table`` must be given.  A table is
    indexed by the current iteration of the enclosing level named by
    ``count_by`` (the immediately enclosing level when omitted), which is how
    per-block extent changes are expressed.  ``pre_work`` is charged once per
    iteration before descending (only meaningful on non-innermost levels);
    ``body_work`` is the per-iteration cost of the innermost level.
    """

    name: str
    count: Optional[int] = None
    count_table: Optional[Tuple[int, ...]] = None
    count_by: Optional[str] = None
    pre_work: float = 0.0
    body_work: float = 0.0
    parallelisable: bool = False

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("loop level needs a name")
        if (self.count is None) == (self.count_table is None):
            raise ValueError(f"level {self.name!r}: give exactly one of count / count_table")
        if self.count is not None and self.count < 0:
            raise ValueError(f"level {self.name!r}: count must be >= 0")
        if self.count_table is not None:
            object.__setattr__(self, "count_table", tuple(self.count_table))
            if not self.count_table:
                raise ValueError(f"level {self.name!r}: count_table must not be empty")
            if any(c < 0 for c in self.count_table):
                raise ValueError(f"level {self.name!r}: counts must be >= 0")
        if self.count_by is not None and self.count_table is None:
            raise ValueError(f"level {self.name!r}: count_by only makes sense with count_table")
        if self.pre_work < 0 or self.body_work < 0:
            raise ValueError(f"level {self.name!r}: work durations must be >= 0")

    @property
    def max_count(self) -> int:
        if self.count is not None:
            return self.count
        return max(self.count_table)


@dataclass(frozen=True)
class SimProgram:
    """A loop-nest scenario: outermost timing loop (``repeats``), the nest
    itself, the overhead constants, and an optional additive perturbation
    charged inside every profiled run's measured window."""

    levels: Tuple[LoopLevel, ...]
    repeats: int = 1
    perturbation: float = 0.0
    overheads: OverheadModel = field(default_factory=OverheadModel)

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise ValueError("scenario needs at least one loop level")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.perturbation < 0:
            raise ValueError("perturbation must be >= 0")
        names = [lvl.name for lvl in self.levels]
        if len(set(names)) != len(names):
            raise ValueError("loop level names must be unique")
        last = len(self.levels) - 1
        for idx, lvl in enumerate(self.levels):
            if idx == last and lvl.pre_work != 0:
                raise ValueError(f"innermost level {lvl.name!r} must have pre_work = 0")
            if idx != last and lvl.body_work != 0:
                raise ValueError(f"non-innermost level {lvl.name!r} must have body_work = 0")
            if lvl.count_table is not None:
                if idx == 0:
                    raise ValueError(f"level {lvl.name!r}: the outermost level cannot be table-driven")
                key = lvl.count_by if lvl.count_by is not None else names[idx - 1]
                if key not in names[:idx]:
                    raise ValueError(
                        f"level {lvl.name!r}: count_by must name an enclosing level, not {key!r}"
                    )
                driver = self.levels[names.index(key)]
                if len(lvl.count_table) < driver.max_count:
                    raise ValueError(
                        f"level {lvl.name!r}: count_table has {len(lvl.count_table)} entries "
                        f"but level {key!r} runs up to {driver.max_count} iterations"
                    )

    def table_driver_index(self, idx: int) -> Optional[int]:
        lvl = self.levels[idx]
        if lvl.count_table is None:
            return None
        key = lvl.count_by if lvl.count_by is not None else self.levels[idx - 1].name
        return next(i for i, l in enumerate(self.levels) if l.name == key)


@dataclass
class SimReport:
    total_time: float
    threads: int
    decider: str
    mode: str
    threshold: float
    repeats: int
    force_level: Optional[int]
    levels: Tuple[str, ...]
    site_levels: Tuple[str, ...]
    per_level_visit_counts: Dict[str, int]
    per_level_parallel_counts: Dict[str, int]
    decision_calls: int
    bookkeeping_ops: int
    region_creates: int
    invalidations: Dict[str, int]
    trace: List[DecisionRecord]


def analytic_outer(outer_iters: int, inner_iters: int, t_outer: float, t_inner: float, outer_threads: int) -> float:
    """Nest cost with the outer loop split across ``outer_threads``."""
    if outer_iters <= 0 or inner_iters <= 0 or outer_threads < 1:
        raise ValueError("iteration and thread counts must be positive")
    return _ceil_div(outer_iters, outer_threads) * (t_outer + inner_iters * t_inner)


def analytic_inner(outer_iters: int, inner_iters: int, t_outer: float, t_inner: float, inner_threads: int) -> float:
    """Nest cost with the inner loop split across ``inner_threads``."""
    if outer_iters <= 0 or inner_iters <= 0 or inner_threads < 1:
        raise ValueError("iteration and thread counts must be positive")
    return outer_iters * (t_outer + _ceil_div(inner_iters, inner_threads) * t_inner)


def threshold_outer_work(inner_iters: int, t_inner: float, outer_threads: int, inner_threads: int) -> float:
    """Largest inter-loop work for which parallelising the inner loop still
    beats parallelising the outer loop (break-even point of the two costs,
    assuming divisible chunks)."""
    if outer_threads < 2:
        raise ValueError("outer thread count must be at least 2; the break-even point is undefined for 1")
    if inner_threads < 1:
        raise ValueError("inner thread count must be positive")
    return inner_iters * t_inner * (1 / outer_threads - 1 / inner_threads) / (1 - 1 / outer_threads)


def simulate(
    program: SimProgram,
    threads: int,
    decider: DeciderKind | str = DeciderKind.HEURISTIC,
    mode: GenerationMode | str = GenerationMode.DUPLICATE,
    threshold: float = 1.0,
    force_level: Optional[int] = None,
) -> SimReport:
    """Run the scenario under virtual time and report totals plus the full
    decision trace.

    ``force_level`` pins the strategy instead of consulting a decider: the
    given level index runs parallel on every visit, every other site runs
    serial.  That is how the analytic formulas are reproduced and compared.
    """
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    kind = DeciderKind(decider)
    gen_mode = GenerationMode(mode)
    if force_level is not None:
        if not 0 <= force_level < len(program.levels):
            raise ValueError(f"force_level {force_level} out of range")
        if not program.levels[force_level].parallelisable:
            raise ValueError(f"level {program.levels[force_level].name!r} carries no directive")
    sim = _Simulation(program, threads, kind, gen_mode, threshold, force_level)
    return sim.run()


class _Simulation:
    def __init__(
        self,
        program: SimProgram,
        threads: int,
        kind: DeciderKind,
        mode: GenerationMode,
        threshold: float,
        force_level: Optional[int],
    ) -> None:
        self.program = program
        self.threads = threads
        self.kind = kind
        self.mode = mode
        self.threshold = threshold
        self.force_level = force_level
        self.site_of_level: Dict[int, int] = {}
        for idx, lvl in enumerate(program.levels):
            if lvl.parallelisable:
                self.site_of_level[idx] = len(self.site_of_level)
        self.states = {sid: LoopProfileState() for sid in self.site_of_level.values()}
        self.invocations = {sid: 0 for sid in self.site_of_level.values()}
        self.table_driver = [program.table_driver_index(i) for i in range(len(program.levels))]
        self.trace: List[DecisionRecord] = []
        self.visit_counts = {lvl.name: 0 for lvl in program.levels}
        self.parallel_counts = {lvl.name: 0 for lvl in program.levels}
        self.decision_calls = 0
        self.bookkeeping_ops = 0
        self.region_creates = 0
        self.indices = [0] * len(program.levels)

    def run(self) -> SimReport:
        repeat_times = [self._visit(0, 0)[0] for _ in range(self.program.repeats)]
        site_names = tuple(self.program.levels[idx].name for idx in sorted(self.site_of_level))
        return SimReport(
            total_time=math.fsum(repeat_times),
            threads=self.threads,
            decider=self.kind.value,
            mode=self.mode.value,
            threshold=self.threshold,
            repeats=self.program.repeats,
            force_level=self.force_level,
            levels=tuple(lvl.name for lvl in self.program.levels),
            site_levels=site_names,
            per_level_visit_counts=dict(self.visit_counts),
            per_level_parallel_counts=dict(self.parallel_counts),
            decision_calls=self.decision_calls,
            bookkeeping_ops=self.bookkeeping_ops,
            region_creates=self.region_creates,
            invalidations={
                self.program.levels[idx].name: self.states[sid].invalidations
                for idx, sid in self.site_of_level.items()
            },
            trace=self.trace,
        )

    def _count_for(self, idx: int) -> int:
        lvl = self.program.levels[idx]
        if lvl.count is not None:
            return lvl.count
        return lvl.count_table[self.indices[self.table_driver[idx]]]

    def _visit(self, idx: int, parallel_depth: int) -> Tuple[float, int]:
        """Execute one visit of level ``idx``; returns (duration, innermost units)."""
        program = self.program
        lvl = program.levels[idx]
        overheads = program.overheads
        count = self._count_for(idx)
        self.visit_counts[lvl.name] += 1

        decision: Optional[Decision] = None
        state: Optional[LoopProfileState] = None
        decision_cost = 0.0
        if lvl.parallelisable:
            sid = self.site_of_level[idx]
            invocation = self.invocations[sid]
            self.invocations[sid] = invocation + 1
            self.decision_calls += 1
            decision_cost = overheads.decision_call
            outer_active = parallel_depth > 0
            if self.force_level is not None:
                decision = Decision.PARALLEL if idx == self.force_level else Decision.SERIAL
                phase_str, reason = "none", REASON_FORCED
            elif self.kind is DeciderKind.HEURISTIC:
                decision, reason = heuristic_decide(count, self.threads, self.threshold, outer_active)
                phase_str = "none"
            else:
                state = self.states[sid]
                phase_str = state.phase.value
                decision, reason = profiling_decide(
                    state,
                    count,
                    self.threads,
                    self.threshold,
                    outer_active,
                    relaxed=self.kind is DeciderKind.RELAXED_PROFILING,
                )
            self.trace.append(
                DecisionRecord(
                    loop_id=sid,
                    invocation_index=invocation,
                    iters=count,
                    threads=self.threads,
                    outer_active=outer_active,
                    decider_phase=phase_str,
                    decision=decision.value,
                    reason=reason,
                )
            )

        runs_parallel = decision is not None and decision.runs_parallel
        if runs_parallel:
            self.parallel_counts[lvl.name] += 1

        region_cost = 0.0
        if lvl.parallelisable and self.threads > 1:
            if runs_parallel or (self.mode is GenerationMode.OMPIF and overheads.ompif_serial_region):
                self.region_creates += 1
                region_cost = overheads.region_create

        team = self.threads if runs_parallel else 1
        innermost = idx == len(program.levels) - 1
        if innermost:
            units = count
            run_time = _ceil_div(count, team) * lvl.body_work if count else 0.0
        else:
            child_depth = parallel_depth + 1 if runs_parallel else parallel_depth
            costs: List[float] = []
            units = 0
            for k in range(count):
                self.indices[idx] = k
                child_time, child_units = self._visit(idx + 1, child_depth)
                costs.append(lvl.pre_work + child_time)
                units += child_units
            if team > 1:
                base, extra = divmod(count, team)
                run_time = 0.0
                start = 0
                for t in range(team):
                    size = base + 1 if t < extra else base
                    chunk = math.fsum(costs[start : start + size])
                    start += size
                    if chunk > run_time:
                        run_time = chunk
            else:
                run_time = math.fsum(costs)

        profiled = decision is not None and decision.profiled
        perturbation = program.perturbation if profiled else 0.0
        # The window a profiled run measures: region spawn + the loop itself
        # (+ perturbation); the site's own decide/instrument calls sit outside.
        measured = region_cost + run_time + perturbation

        instrument_ops = 0
        if self.force_level is None:
            if self.kind is DeciderKind.PROFILING:
                instrument_ops = 2
            elif self.kind is DeciderKind.RELAXED_PROFILING and profiled:
                instrument_ops = 2
        self.bookkeeping_ops += instrument_ops
        instrument_cost = instrument_ops * overheads.instrument_call

        if state is not None:
            if self.kind is DeciderKind.PROFILING:
                record_timing(state, decision, measured if profiled else None, units, self.kind)
            elif profiled:
                record_timing(state, decision, measured, count, self.kind)

        return decision_cost + instrument_cost + measured, units


def sweep_crossing(
    template: SimProgram,
    threads_outer: int,
    threads_inner: int,
    t_outer_range: Iterable[float],
) -> float:
    """Smallest grid value of inter-loop work at which the forced-outer
    strategy stops losing to the forced-inner one (ties count as crossed).

    The template must be a two-level nest with both levels parallelisable
    and zero overheads; the grid must be ascending.
    """
    if len(template.levels) != 2:
        raise ValueError("crossing sweeps need a two-level scenario")
    overheads = template.overheads
    if overheads.region_create or overheads.decision_call or overheads.instrument_call:
        raise ValueError("crossing sweeps need a zero-overhead scenario")
    for t_outer in t_outer_range:
        program = replace(
            template,
            levels=(replace(template.levels[0], pre_work=t_outer), template.levels[1]),
        )
        outer_total = simulate(program, threads_outer, force_level=0).total_time
        inner_total = simulate(program, threads_inner, force_level=1).total_time
        if outer_total <= inner_total:
            return t_outer
    raise ValueError("t_outer grid does not bracket the crossing point")
