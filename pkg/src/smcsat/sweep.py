"""Threshold sweeps: locate the feasibility boundary of one predicate.

Re-solves the problem at evenly spaced thresholds, stopping at the first
infeasible point; the last feasible threshold and its model are the "best
plan". Every step is a fresh solve: learned clauses from probabilistic
conflicts depend on the threshold, so reuse across steps would be unsound.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .solver import SmcProblem, SolveResult, SolveStatus, SolverConfig, Stats, solve
from .formula import Var


@dataclass(frozen=True)
class SweepPoint:
    q: float
    status: SolveStatus
    stats: Stats


@dataclass(frozen=True)
class SweepResult:
    best_threshold: float | None
    best_model: dict[Var, bool] | None
    trace: tuple[SweepPoint, ...]

    @property
    def feasible(self) -> bool:
        return self.best_threshold is not None

    def flip_count(self) -> int:
        """Number of status changes along the trace (1 = single clean flip)."""
        flips = 0
        for prev, cur in zip(self.trace, self.trace[1:]):
            if cur.status is not prev.status:
                flips += 1
        return flips


def with_threshold(p: SmcProblem, predicate_index: int, q: float) -> SmcProblem:
    """Copy of the problem with one predicate's threshold replaced."""
    preds = list(p.predicates)
    preds[predicate_index] = replace(preds[predicate_index], threshold=q)
    return SmcProblem(cnf=p.cnf, predicates=tuple(preds))


def sweep(
    p: SmcProblem,
    predicate_index: int,
    direction: str = "up",
    step: float = 1e-2,
    lo: float = 0.0,
    hi: float = 1.0,
    config: SolverConfig | None = None,
) -> SweepResult:
    """Linear threshold sweep with early exit at the first infeasible step.

    Direction "up" walks lo, lo+step, ... and tightens a lower-bound style
    predicate; "down" mirrors from hi. The threshold is interpreted in the
    predicate's own threshold mode at every step.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if lo >= hi:
        raise ValueError("lo must be below hi")
    if not 0 <= predicate_index < len(p.predicates):
        raise ValueError(f"predicate index {predicate_index} out of range")
    if direction not in ("up", "down"):
        raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")

    n_steps = int((hi - lo) / step + 1e-9)
    if direction == "up":
        thresholds = [lo + i * step for i in range(n_steps + 1)]
    else:
        thresholds = [hi - i * step for i in range(n_steps + 1)]

    best_q: float | None = None
    best_model: dict[Var, bool] | None = None
    trace: list[SweepPoint] = []
    for q in thresholds:
        result: SolveResult = solve(with_threshold(p, predicate_index, q), config)
        trace.append(SweepPoint(q, result.status, result.stats))
        if result.status is not SolveStatus.SAT:
            break
        best_q = q
        best_model = result.model
    return SweepResult(best_q, best_model, tuple(trace))
