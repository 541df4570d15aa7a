"""CDCL search over CNF plus marginal-probability predicates.

Each predicate links a literal b to an inequality between a circuit's
marginal mass (shared formula variables fixed, the rest summed out) and a
threshold. During propagation the solver narrows each predicate's root
bounds as shared variables get assigned; once the bounds decide the
inequality it propagates b or raises a conflict, learning a clause over the
assigned shared variables. With bound tracking disabled, predicates are
checked exactly and only when fully assigned, which reproduces the naive
solver-plus-inference loop as an ablation baseline.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from .circuit import BoundState, Circuit, NumericMode, marginal, partition
from .formula import CnfFormula, Lit, PartialAssignment, Var


class Comparator(enum.Enum):
    GE = "ge"
    GT = "gt"
    LE = "le"
    LT = "lt"


class ThresholdMode(enum.Enum):
    ABSOLUTE = "absolute"
    PARTITION_FRACTION = "partition_fraction"


@dataclass(frozen=True)
class PredicateSpec:
    """One probabilistic predicate: b <=> (marginal cmp threshold).

    `shared_map` sends circuit variables to formula variables (injective);
    unmapped circuit variables are latent and always marginalized. A missing
    `b` makes the predicate hard: the inequality must hold.
    """

    circuit: Circuit
    shared_map: dict[int, Var]
    cmp: Comparator
    threshold: float
    threshold_mode: ThresholdMode = ThresholdMode.ABSOLUTE
    b: Lit | None = None

    def __post_init__(self) -> None:
        if len(set(self.shared_map.values())) != len(self.shared_map):
            raise ValueError("shared map is not injective")
        for cvar in self.shared_map:
            if cvar < 0 or cvar >= self.circuit.num_vars:
                raise ValueError(f"shared circuit variable {cvar} out of range")
        if self.b == 0:
            raise ValueError("b literal must be nonzero")

    def resolved_threshold(self, mode: NumericMode = NumericMode.LINEAR) -> float:
        """Threshold in the numeric mode's value space."""
        if mode is NumericMode.LINEAR:
            if self.threshold_mode is ThresholdMode.PARTITION_FRACTION:
                return self.threshold * partition(self.circuit)
            return self.threshold
        if self.threshold < 0.0:
            raise ValueError("log mode requires nonnegative thresholds")
        log_t = math.log(self.threshold) if self.threshold > 0.0 else -math.inf
        if self.threshold_mode is ThresholdMode.PARTITION_FRACTION:
            return log_t + partition(self.circuit, NumericMode.LOG)
        return log_t


@dataclass(frozen=True)
class SmcProblem:
    cnf: CnfFormula
    predicates: tuple[PredicateSpec, ...] = ()

    def __post_init__(self) -> None:
        for i, pred in enumerate(self.predicates):
            for fvar in pred.shared_map.values():
                if fvar < 1 or fvar > self.cnf.num_vars:
                    raise ValueError(f"predicate {i}: formula variable {fvar} out of range")
            if pred.b is not None and abs(pred.b) > self.cnf.num_vars:
                raise ValueError(f"predicate {i}: b literal {pred.b} out of range")


class SolveStatus(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    BUDGET = "budget-exhausted"


@dataclass
class SolverConfig:
    ulw_enabled: bool = True
    numeric_mode: NumericMode = NumericMode.LINEAR
    seed: int = 0
    activity_decay: float = 0.95
    restart_base: int = 100
    max_conflicts: int | None = None
    max_seconds: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.activity_decay <= 1.0:
            raise ValueError("activity decay must be in (0, 1]")
        if self.restart_base < 1:
            raise ValueError("restart base must be positive")
        if self.max_conflicts is not None and self.max_conflicts < 0:
            raise ValueError("conflict budget must be nonnegative")
        if self.max_seconds is not None and self.max_seconds < 0:
            raise ValueError("time budget must be nonnegative")


@dataclass
class Stats:
    decisions: int = 0
    boolean_propagations: int = 0
    boolean_conflicts: int = 0
    prob_conflicts: int = 0
    prob_entailments: int = 0
    learned_clauses: int = 0
    restarts: int = 0
    max_decision_level: int = 0
    wall_time: float = 0.0

    @property
    def conflicts(self) -> int:
        return self.boolean_conflicts + self.prob_conflicts

    def as_dict(self) -> dict:
        return {
            "decisions": self.decisions,
            "boolean_propagations": self.boolean_propagations,
            "boolean_conflicts": self.boolean_conflicts,
            "prob_conflicts": self.prob_conflicts,
            "prob_entailments": self.prob_entailments,
            "learned_clauses": self.learned_clauses,
            "restarts": self.restarts,
            "max_decision_level": self.max_decision_level,
            "wall_time": self.wall_time,
        }


@dataclass
class SolveResult:
    status: SolveStatus
    model: dict[Var, bool] | None
    stats: Stats


class PredicateEval(enum.Enum):
    ENTAILED_TRUE = "entailed-true"
    ENTAILED_FALSE = "entailed-false"
    UNDECIDED = "undecided"
    CONFLICT = "conflict"


def cmp_holds(cmp: Comparator, value: float, threshold: float) -> bool:
    """Exact comparison of an inference value against a threshold."""
    if cmp is Comparator.GE:
        return value >= threshold
    if cmp is Comparator.GT:
        return value > threshold
    if cmp is Comparator.LE:
        return value <= threshold
    return value < threshold


def inequality_status(cmp: Comparator, threshold: float, lb: float, ub: float) -> bool | None:
    """True/False when the root bounds decide the inequality, else None."""
    if cmp is Comparator.GE:
        if lb >= threshold:
            return True
        if ub < threshold:
            return False
    elif cmp is Comparator.GT:
        if lb > threshold:
            return True
        if ub <= threshold:
            return False
    elif cmp is Comparator.LE:
        if ub <= threshold:
            return True
        if lb > threshold:
            return False
    else:
        if ub < threshold:
            return True
        if lb >= threshold:
            return False
    return None


def evaluate_predicate(
    cmp: Comparator,
    threshold: float,
    lb: float,
    ub: float,
    b_value: bool | None,
) -> PredicateEval:
    """Combine bound entailment with the current b status.

    Hard predicates pass b_value=True. An entailment that contradicts an
    assigned b is a conflict; one matching or deciding b is reported so the
    caller can propagate b and mark the predicate settled.
    """
    status = inequality_status(cmp, threshold, lb, ub)
    if status is None:
        return PredicateEval.UNDECIDED
    if b_value is not None and b_value != status:
        return PredicateEval.CONFLICT
    return PredicateEval.ENTAILED_TRUE if status else PredicateEval.ENTAILED_FALSE


def probabilistic_clause(implied: Lit | None, assigned_shared: Iterable[Lit]) -> list[Lit]:
    """Clause recording a predicate entailment or conflict.

    `assigned_shared` holds the predicate's currently assigned shared
    variables as true literals; the clause negates each of them, prefixed
    by the implied/complemented b literal when the predicate is soft.
    """
    clause = [] if implied is None else [implied]
    clause.extend(-lit for lit in assigned_shared)
    return clause


def luby(i: int) -> int:
    """The i-th term (1-based) of the Luby restart sequence."""
    x = i - 1
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x %= size
    return 1 << seq


class _PredState:
    """Solver-side bookkeeping for one predicate."""

    def __init__(self, spec: PredicateSpec, index: int, mode: NumericMode, ulw: bool):
        self.spec = spec
        self.index = index
        self.shared_items = sorted((cvar, fvar) for cvar, fvar in spec.shared_map.items())
        self.bounds = BoundState(spec.circuit, spec.shared_map.keys(), mode) if ulw else None
        self.resolved_q = spec.resolved_threshold(mode)
        self.decided_level: int | None = None
        self.dirty = True
        # re-entailments after backtracking rebuild identical reason clauses;
        # cache them so the database is not flooded with duplicates
        self.reason_cache: dict[tuple[Lit, ...], int] = {}


class CdclSolver:
    """Single-use solver instance; build one per solve call."""

    def __init__(self, problem: SmcProblem, config: SolverConfig | None = None):
        self.problem = problem
        self.cfg = config or SolverConfig()
        self.mode = self.cfg.numeric_mode
        nv = problem.cnf.num_vars
        self.num_vars = nv
        self.pa = PartialAssignment(nv)
        self.reason: list[int | None] = [None] * (nv + 1)
        self.clauses: list[list[Lit]] = []
        self.watches: dict[Lit, list[int]] = {}
        for v in range(1, nv + 1):
            self.watches[v] = []
            self.watches[-v] = []
        self.activity = [0.0] * (nv + 1)
        self.var_inc = 1.0
        self.phase = [False] * (nv + 1)
        self.stats = Stats()
        self.ok = True
        self._initial_units: list[tuple[Lit, int]] = []
        for clause in problem.cnf.clauses:
            self._add_clause(list(clause))
        self.num_original = len(self.clauses)
        for pred in problem.predicates:
            pred.circuit.require_valid()
        self.preds = [
            _PredState(p, i, self.mode, self.cfg.ulw_enabled)
            for i, p in enumerate(problem.predicates)
        ]
        # formula var -> [(predicate index, circuit var)]
        self.shared_occ: dict[Var, list[tuple[int, int]]] = {}
        for ps in self.preds:
            for cvar, fvar in ps.shared_items:
                self.shared_occ.setdefault(fvar, []).append((ps.index, cvar))
        self.qhead = 0
        self.pred_qhead = 0

    # ------------------------------------------------------------------ db

    def _add_clause(self, lits: list[Lit]) -> int | None:
        """Attach an original clause; returns its index (None for empties)."""
        if not lits:
            self.ok = False
            return None
        idx = len(self.clauses)
        self.clauses.append(lits)
        if len(lits) == 1:
            self._initial_units.append((lits[0], idx))
        else:
            self.watches[lits[0]].append(idx)
            self.watches[lits[1]].append(idx)
        return idx

    def _add_derived(self, lits: list[Lit]) -> int:
        """Attach a learned or predicate-reason clause.

        lits[0] must be the asserting/implied literal; the second watch is
        the deepest-assigned remaining literal so the watch invariant
        survives backtracking.
        """
        idx = len(self.clauses)
        self.clauses.append(lits)
        self.stats.learned_clauses += 1
        if len(lits) >= 2:
            deepest = max(range(1, len(lits)), key=lambda i: self.pa.level(abs(lits[i])))
            lits[1], lits[deepest] = lits[deepest], lits[1]
            self.watches[lits[0]].append(idx)
            self.watches[lits[1]].append(idx)
        return idx

    # --------------------------------------------------------- propagation

    def _enqueue(self, lit: Lit, reason_idx: int | None) -> bool:
        val = self.pa.lit_value(lit)
        if val is True:
            return True
        if val is False:
            return False
        self.pa.assign(lit)
        self.reason[abs(lit)] = reason_idx
        return True

    def _propagate_bool(self) -> int | None:
        """Watched-literal unit propagation; returns a falsified clause index."""
        while self.qhead < len(self.pa.trail):
            p = self.pa.trail[self.qhead]
            self.qhead += 1
            old = self.watches[-p]
            kept: list[int] = []
            for pos, idx in enumerate(old):
                cl = self.clauses[idx]
                if cl[0] == -p:
                    cl[0], cl[1] = cl[1], cl[0]
                first = self.pa.lit_value(cl[0])
                if first is True:
                    kept.append(idx)
                    continue
                moved = False
                for k in range(2, len(cl)):
                    if self.pa.lit_value(cl[k]) is not False:
                        cl[1], cl[k] = cl[k], cl[1]
                        self.watches[cl[1]].append(idx)
                        moved = True
                        break
                if moved:
                    continue
                kept.append(idx)
                if first is False:
                    kept.extend(old[pos + 1 :])
                    self.watches[-p] = kept
                    self.qhead = len(self.pa.trail)
                    return idx
                self.pa.assign(cl[0])
                self.reason[abs(cl[0])] = idx
                self.stats.boolean_propagations += 1
            self.watches[-p] = kept
        return None

    def _pred_bounds(self, ps: _PredState) -> tuple[float, float] | None:
        """Current (ub, lb) for a predicate, or None when not yet available."""
        if ps.bounds is not None:
            return ps.bounds.root_bounds()
        values: dict[int, bool] = {}
        for cvar, fvar in ps.shared_items:
            val = self.pa.value(fvar)
            if val is None:
                return None
            values[cvar] = val
        m = marginal(ps.spec.circuit, values, self.mode)
        return m, m

    def _assigned_shared_lits(self, ps: _PredState) -> list[Lit]:
        out = []
        for _, fvar in ps.shared_items:
            val = self.pa.value(fvar)
            if val is not None:
                out.append(fvar if val else -fvar)
        return out

    def _b_value(self, ps: _PredState) -> bool | None:
        if ps.spec.b is None:
            return True
        return self.pa.lit_value(ps.spec.b)

    def propagate(self) -> list[Lit] | None:
        """Run Boolean and predicate propagation to fixpoint.

        Returns a conflict clause (as literals) or None. Predicate-implied
        b literals are enqueued with materialized reason clauses and Boolean
        propagation is re-run until nothing changes.
        """
        while True:
            confl = self._propagate_bool()
            if confl is not None:
                self.stats.boolean_conflicts += 1
                return list(self.clauses[confl])
            if not self.preds:
                return None
            while self.pred_qhead < len(self.pa.trail):
                lit = self.pa.trail[self.pred_qhead]
                self.pred_qhead += 1
                for pi, cvar in self.shared_occ.get(abs(lit), ()):
                    ps = self.preds[pi]
                    if ps.decided_level is not None:
                        continue
                    if ps.bounds is not None and ps.bounds.status[cvar] is None:
                        ps.bounds.assign(cvar, lit > 0, self.pa.current_level)
                    ps.dirty = True
            progressed = False
            for ps in self.preds:
                if ps.decided_level is not None or not ps.dirty:
                    continue
                ps.dirty = False
                bounds = self._pred_bounds(ps)
                if bounds is None:
                    continue
                ub, lb = bounds
                outcome = evaluate_predicate(
                    ps.spec.cmp, ps.resolved_q, lb, ub, self._b_value(ps)
                )
                if outcome is PredicateEval.UNDECIDED:
                    continue
                if outcome is PredicateEval.CONFLICT:
                    self.stats.prob_conflicts += 1
                    implied = None
                    if ps.spec.b is not None:
                        status = inequality_status(ps.spec.cmp, ps.resolved_q, lb, ub)
                        implied = ps.spec.b if status else -ps.spec.b
                    return probabilistic_clause(implied, self._assigned_shared_lits(ps))
                ps.decided_level = self.pa.current_level
                if ps.spec.b is not None and self.pa.lit_value(ps.spec.b) is None:
                    implied = (
                        ps.spec.b
                        if outcome is PredicateEval.ENTAILED_TRUE
                        else -ps.spec.b
                    )
                    reason = probabilistic_clause(implied, self._assigned_shared_lits(ps))
                    key = tuple(reason)
                    idx = ps.reason_cache.get(key)
                    if idx is None:
                        idx = self._add_derived(reason)
                        ps.reason_cache[key] = idx
                    assigned = self._enqueue(implied, idx)
                    assert assigned
                    self.stats.prob_entailments += 1
                    progressed = True
            if not progressed:
                return None

    # ------------------------------------------------------------ conflicts

    def _bump(self, var: Var) -> None:
        self.activity[var] += self.var_inc
        if self.activity[var] > 1e100:
            for v in range(1, self.num_vars + 1):
                self.activity[v] *= 1e-100
            self.var_inc *= 1e-100

    def analyze(self, conflict: Sequence[Lit]) -> tuple[list[Lit], int]:
        """First-UIP conflict analysis; returns (learned clause, backjump level).

        The learned clause's first literal is the asserting one. Must only
        be called for conflicts above decision level 0.
        """
        level = self.pa.current_level
        seen = [False] * (self.num_vars + 1)
        tail: list[Lit] = []
        counter = 0
        reason_lits: Sequence[Lit] = conflict
        p: Lit | None = None
        idx = len(self.pa.trail) - 1
        while True:
            for q in reason_lits:
                if p is not None and q == p:
                    continue
                v = abs(q)
                if not seen[v] and self.pa.level(v) > 0:
                    seen[v] = True
                    self._bump(v)
                    if self.pa.level(v) >= level:
                        counter += 1
                    else:
                        tail.append(q)
            while not seen[abs(self.pa.trail[idx])]:
                idx -= 1
            p = self.pa.trail[idx]
            idx -= 1
            counter -= 1
            if counter == 0:
                break
            reason_idx = self.reason[abs(p)]
            assert reason_idx is not None, "resolved a decision before the UIP"
            reason_lits = self.clauses[reason_idx]
        learned = [-p] + tail
        backjump = 0
        if tail:
            backjump = max(self.pa.level(abs(q)) for q in tail)
        return learned, backjump

    def backtrack(self, level: int) -> None:
        """Undo assignments, bound updates and settled flags above `level`."""
        removed = self.pa.backtrack_to(level)
        for lit in removed:
            var = abs(lit)
            self.phase[var] = lit > 0
            self.reason[var] = None
        self.qhead = min(self.qhead, len(self.pa.trail))
        self.pred_qhead = min(self.pred_qhead, len(self.pa.trail))
        for ps in self.preds:
            if ps.bounds is not None:
                ps.bounds.backtrack_bounds(level)
            if ps.decided_level is not None and ps.decided_level > level:
                ps.decided_level = None
                ps.dirty = True

    def decide(self) -> Lit:
        """Pick the unassigned variable with highest activity, saved phase."""
        best: Var | None = None
        best_act = -1.0
        for v in range(1, self.num_vars + 1):
            if self.pa.value(v) is None and self.activity[v] > best_act:
                best = v
                best_act = self.activity[v]
        assert best is not None
        lit = best if self.phase[best] else -best
        self.pa.new_decision_level()
        self.pa.assign(lit)
        self.reason[best] = None
        self.stats.decisions += 1
        self.stats.max_decision_level = max(self.stats.max_decision_level, self.pa.current_level)
        return lit

    # ---------------------------------------------------------------- main

    def solve(self) -> SolveResult:
        start = time.monotonic()
        try:
            status, model = self._search(start)
        finally:
            self.stats.wall_time = time.monotonic() - start
        return SolveResult(status, model, self.stats)

    def _out_of_budget(self, start: float) -> bool:
        if self.cfg.max_conflicts is not None and self.stats.conflicts > self.cfg.max_conflicts:
            return True
        if self.cfg.max_seconds is not None and time.monotonic() - start > self.cfg.max_seconds:
            return True
        return False

    def _search(self, start: float) -> tuple[SolveStatus, dict[Var, bool] | None]:
        if not self.ok:
            return SolveStatus.UNSAT, None
        for lit, idx in self._initial_units:
            if not self._enqueue(lit, idx):
                return SolveStatus.UNSAT, None
        conflicts_since_restart = 0
        restart_limit = self.cfg.restart_base * luby(self.stats.restarts + 1)
        while True:
            conflict = self.propagate()
            if conflict is not None:
                if self.pa.current_level == 0:
                    return SolveStatus.UNSAT, None
                learned, backjump = self.analyze(conflict)
                self.backtrack(backjump)
                if len(learned) == 1:
                    self.clauses.append(learned)
                    self.stats.learned_clauses += 1
                    idx = len(self.clauses) - 1
                else:
                    idx = self._add_derived(learned)
                assigned = self._enqueue(learned[0], idx)
                assert assigned
                self.var_inc /= self.cfg.activity_decay
                conflicts_since_restart += 1
                if self._out_of_budget(start):
                    return SolveStatus.BUDGET, None
                continue
            if self.pa.num_assigned() == self.num_vars:
                for ps in self.preds:
                    assert ps.decided_level is not None, "predicate unsettled at full assignment"
                return SolveStatus.SAT, self.pa.as_model()
            if self._out_of_budget(start):
                return SolveStatus.BUDGET, None
            if conflicts_since_restart >= restart_limit:
                self.stats.restarts += 1
                conflicts_since_restart = 0
                restart_limit = self.cfg.restart_base * luby(self.stats.restarts + 1)
                if self.pa.current_level > 0:
                    self.backtrack(0)
            self.decide()


def solve(problem: SmcProblem, config: SolverConfig | None = None) -> SolveResult:
    """Solve an SMC problem; deterministic for a fixed problem and config."""
    return CdclSolver(problem, config).solve()
