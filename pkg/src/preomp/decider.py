"""Runtime parallelisation decisions, in reference form.

Three decision policies choose between serial and parallel execution of an
annotated loop each time it is reached:

* ``heuristic`` — parallelise iff ``iterations / threads >= threshold``.
  Stateless apart from the "am I already inside a parallel region" check.
* ``profiling`` — when the heuristic would refuse, time one serial run and
  one parallel run, then keep whichever was faster.  The loop's work is
  measured as the number of innermost iteration units executed beneath it;
  if that measure changes between runs the stored timings describe a
  different workload and are thrown away.
* ``relaxed_profiling`` — like ``profiling`` but the work measure is the
  loop's own iteration count, which is available before the run starts, so
  invalidation happens at decision time rather than one run late.

Every decision comes out serial when an enclosing loop already went
parallel: one level of parallelism at a time.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Tuple


class DeciderKind(str, enum.Enum):
    HEURISTIC = "heuristic"
    PROFILING = "profiling"
    RELAXED_PROFILING = "relaxed_profiling"


class Phase(enum.Enum):
    """Profiling progress for one loop: nothing timed, serial timed, both timed."""

    UNPROFILED = "unprofiled"
    SERIAL_TIMED = "serial_timed"
    BOTH_TIMED = "both_timed"


class Decision(enum.Enum):
    SERIAL = "serial"
    PARALLEL = "parallel"
    SERIAL_PROFILED = "serial_profiled"
    PARALLEL_PROFILED = "parallel_profiled"

    @property
    def runs_parallel(self) -> bool:
        return self in (Decision.PARALLEL, Decision.PARALLEL_PROFILED)

    @property
    def profiled(self) -> bool:
        return self in (Decision.SERIAL_PROFILED, Decision.PARALLEL_PROFILED)


# Reasons are a closed vocabulary because traces get diffed across
# implementations; don't invent new strings casually.
REASON_OUTER_ACTIVE = "outer_active"
REASON_NO_ITERATIONS = "no_iterations"
REASON_THRESHOLD_PASS = "threshold_pass"
REASON_THRESHOLD_FAIL = "threshold_fail"
REASON_PROFILE_SERIAL = "profile_serial"
REASON_PROFILE_PARALLEL = "profile_parallel"
REASON_STEADY_STATE = "steady_state"
REASON_FORCED = "forced"


@dataclass
class LoopProfileState:
    """Mutable per-loop profiling record."""

    phase: Phase = Phase.UNPROFILED
    work_measure: Optional[int] = None
    serial_time: Optional[float] = None
    parallel_time: Optional[float] = None
    invalidations: int = 0

    def invalidate(self) -> None:
        self.phase = Phase.UNPROFILED
        self.work_measure = None
        self.serial_time = None
        self.parallel_time = None
        self.invalidations += 1


def heuristic_decide(
    iters: int, threads: int, threshold: float, outer_active: bool
) -> Tuple[Decision, str]:
    if threads < 1:
        raise ValueError(f"thread count must be positive, got {threads}")
    if outer_active:
        return Decision.SERIAL, REASON_OUTER_ACTIVE
    if iters <= 0:
        return Decision.SERIAL, REASON_NO_ITERATIONS
    if iters / threads >= threshold:
        return Decision.PARALLEL, REASON_THRESHOLD_PASS
    return Decision.SERIAL, REASON_THRESHOLD_FAIL


def profiling_decide(
    state: LoopProfileState,
    iters: int,
    threads: int,
    threshold: float,
    outer_active: bool,
    relaxed: bool = False,
) -> Tuple[Decision, str]:
    """Profiling decision; pair every profiled decision with a
    :func:`record_timing` call once the run finishes."""
    quick, reason = heuristic_decide(iters, threads, threshold, outer_active)
    if quick is Decision.PARALLEL or reason != REASON_THRESHOLD_FAIL:
        return quick, reason
    if relaxed and state.phase is not Phase.UNPROFILED and iters != state.work_measure:
        state.invalidate()
    if state.phase is Phase.UNPROFILED:
        if relaxed:
            state.work_measure = iters
        return Decision.SERIAL_PROFILED, REASON_PROFILE_SERIAL
    if state.phase is Phase.SERIAL_TIMED:
        return Decision.PARALLEL_PROFILED, REASON_PROFILE_PARALLEL
    if state.parallel_time < state.serial_time:
        return Decision.PARALLEL, REASON_STEADY_STATE
    return Decision.SERIAL, REASON_STEADY_STATE


def record_timing(
    state: LoopProfileState,
    decision: Decision,
    duration: Optional[float],
    work: int,
    kind: DeciderKind = DeciderKind.PROFILING,
) -> None:
    """Feed one finished run back into the loop's profile.

    The accurate profiler calls this after *every* run because the work
    measure is only known once the run's inner loops have counted their
    iterations; a mismatch against the stored measure discards the profile.
    The relaxed profiler validates its measure up front, so only profiled
    runs report here.
    """
    if kind is DeciderKind.HEURISTIC:
        return
    if kind is DeciderKind.PROFILING:
        if state.work_measure is not None and work != state.work_measure:
            state.invalidate()
            return
    if decision is Decision.SERIAL_PROFILED:
        state.serial_time = duration
        state.work_measure = work
        state.phase = Phase.SERIAL_TIMED
    elif decision is Decision.PARALLEL_PROFILED:
        state.parallel_time = duration
        state.phase = Phase.BOTH_TIMED


def decide(
    kind: DeciderKind,
    state: Optional[LoopProfileState],
    iters: int,
    threads: int,
    threshold: float,
    outer_active: bool,
) -> Tuple[Decision, str]:
    if kind is DeciderKind.HEURISTIC:
        return heuristic_decide(iters, threads, threshold, outer_active)
    if state is None:
        raise ValueError("profiling deciders need per-loop state")
    return profiling_decide(
        state,
        iters,
        threads,
        threshold,
        outer_active,
        relaxed=kind is DeciderKind.RELAXED_PROFILING,
    )


@dataclass(slots=True)
class DecisionRecord:
    """One line of a decision trace."""

    loop_id: int
    invocation_index: int
    iters: int
    threads: int
    outer_active: bool
    decider_phase: str
    decision: str
    reason: str

    def to_line(self) -> str:
        return ",".join(
            (
                str(self.loop_id),
                str(self.invocation_index),
                str(self.iters),
                str(self.threads),
                "1" if self.outer_active else "0",
                self.decider_phase,
                self.decision,
                self.reason,
            )
        )

    @classmethod
    def from_line(cls, line: str) -> "DecisionRecord":
        parts = line.strip().split(",")
        if len(parts) != 8:
            raise ValueError(f"malformed trace line: {line!r}")
        return cls(
            loop_id=int(parts[0]),
            invocation_index=int(parts[1]),
            iters=int(parts[2]),
            threads=int(parts[3]),
            outer_active=parts[4] == "1",
            decider_phase=parts[5],
            decision=parts[6],
            reason=parts[7],
        )


class ThreadContext:
    """Tracks how deep into decision-managed parallel regions execution is.

    Mirrors what the enter/exit instrumentation maintains at run time: a
    loop's decision must come out serial whenever any enclosing managed
    loop is currently running its parallel version.
    """

    def __init__(self) -> None:
        self.parallel_depth = 0
        self._stack: list[tuple[int, bool]] = []

    @property
    def outer_active(self) -> bool:
        return self.parallel_depth > 0

    def enter_loop(self, loop_id: int, parallel: bool) -> None:
        self._stack.append((loop_id, parallel))
        if parallel:
            self.parallel_depth += 1

    def exit_loop(self, loop_id: int) -> None:
        if not self._stack:
            raise RuntimeError(f"exit without matching enter for loop {loop_id}")
        top_id, parallel = self._stack.pop()
        if top_id != loop_id:
            raise RuntimeError(f"mismatched loop exit: expected {top_id}, got {loop_id}")
        if parallel:
            self.parallel_depth -= 1
