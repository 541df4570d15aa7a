"""Probabilistic circuits: file format, validation, inference, bound tracking.

A circuit is a DAG of leaf, product and sum nodes in topological file order
(children precede parents, root is the last node). Smoothness (sum children
share a scope) and decomposability (product children have disjoint scopes)
make marginal queries a single bottom-up pass. Circuits may be unnormalized;
the total mass plays the role of the partition function.

``BoundState`` maintains, per node, an upper and lower bound on the marginal
mass under a partial assignment of the shared (decision) variables, updating
incrementally along leaf-to-root paths and undoing by decision level.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Union

CircuitVar = int


class PcFormatError(ValueError):
    """Raised on malformed circuit files."""


class CircuitStructureError(ValueError):
    """Raised when an operation requires smoothness/decomposability and it fails."""


@dataclass(frozen=True)
class BernoulliLeaf:
    var: CircuitVar
    w_true: float
    w_false: float


@dataclass(frozen=True)
class IndicatorLeaf:
    var: CircuitVar
    sign: bool


@dataclass(frozen=True)
class ConstantLeaf:
    value: float


@dataclass(frozen=True)
class ProductNode:
    children: tuple[int, ...]


@dataclass(frozen=True)
class SumNode:
    children: tuple[tuple[float, int], ...]  # (weight, child id)


Node = Union[BernoulliLeaf, IndicatorLeaf, ConstantLeaf, ProductNode, SumNode]


class NumericMode(enum.Enum):
    LINEAR = "linear"
    LOG = "log"


def _log_add(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


class _Arith:
    """Commutative-semiring primitives for one numeric mode."""

    def __init__(self, mode: NumericMode):
        self.mode = mode
        if mode is NumericMode.LINEAR:
            self.zero = 0.0
            self.one = 1.0
            self.add: Callable[[float, float], float] = lambda a, b: a + b
            self.mul: Callable[[float, float], float] = lambda a, b: a * b
        else:
            self.zero = -math.inf
            self.one = 0.0
            self.add = _log_add
            self.mul = lambda a, b: a + b

    def weight(self, w: float) -> float:
        if self.mode is NumericMode.LINEAR:
            return w
        return math.log(w) if w > 0.0 else -math.inf


_ARITH = {mode: _Arith(mode) for mode in NumericMode}


def node_children(node: Node) -> tuple[int, ...]:
    if isinstance(node, ProductNode):
        return node.children
    if isinstance(node, SumNode):
        return tuple(c for _, c in node.children)
    return ()


@dataclass(frozen=True)
class ValidationReport:
    smooth: bool
    decomposable: bool
    violations: tuple[tuple[str, int], ...]

    @property
    def ok(self) -> bool:
        return self.smooth and self.decomposable


class Circuit:
    """Immutable probabilistic circuit with precomputed scopes and parents."""

    def __init__(self, num_vars: int, nodes: Iterable[Node]):
        self.num_vars = num_vars
        self.nodes: tuple[Node, ...] = tuple(nodes)
        if not self.nodes:
            raise PcFormatError("circuit has no nodes")
        self.root = len(self.nodes) - 1
        self.scopes: list[frozenset[CircuitVar]] = []
        self.parents: list[list[int]] = [[] for _ in self.nodes]
        leaves: dict[CircuitVar, list[int]] = {}
        for nid, node in enumerate(self.nodes):
            if isinstance(node, (BernoulliLeaf, IndicatorLeaf)):
                if node.var < 0 or node.var >= num_vars:
                    raise PcFormatError(f"node {nid}: variable {node.var} out of range")
                self.scopes.append(frozenset((node.var,)))
                leaves.setdefault(node.var, []).append(nid)
            elif isinstance(node, ConstantLeaf):
                self.scopes.append(frozenset())
            else:
                scope: set[CircuitVar] = set()
                for child in node_children(node):
                    if child < 0 or child >= nid:
                        raise PcFormatError(f"node {nid}: child {child} is not an earlier node")
                    scope |= self.scopes[child]
                    self.parents[child].append(nid)
                self.scopes.append(frozenset(scope))
        self.leaves_of_var: dict[CircuitVar, tuple[int, ...]] = {
            v: tuple(ids) for v, ids in leaves.items()
        }
        self._report: ValidationReport | None = None

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Circuit)
            and self.num_vars == other.num_vars
            and self.nodes == other.nodes
        )

    def __repr__(self) -> str:
        return f"Circuit(num_vars={self.num_vars}, num_nodes={len(self.nodes)})"

    def scope(self, nid: int) -> frozenset[CircuitVar]:
        return self.scopes[nid]

    def require_valid(self) -> None:
        report = validate(self)
        if not report.ok:
            raise CircuitStructureError(
                f"circuit is not smooth+decomposable: {list(report.violations)[:4]}"
            )


def validate(c: Circuit) -> ValidationReport:
    """Check smoothness and decomposability; reports offending node ids."""
    if c._report is not None:
        return c._report
    violations: list[tuple[str, int]] = []
    smooth = True
    decomposable = True
    for nid, node in enumerate(c.nodes):
        if isinstance(node, SumNode):
            child_scopes = {c.scopes[child] for _, child in node.children}
            if len(child_scopes) > 1:
                smooth = False
                violations.append(("smoothness", nid))
        elif isinstance(node, ProductNode):
            seen: set[CircuitVar] = set()
            for child in node.children:
                if seen & c.scopes[child]:
                    decomposable = False
                    violations.append(("decomposability", nid))
                    break
                seen |= c.scopes[child]
    report = ValidationReport(smooth, decomposable, tuple(violations))
    c._report = report
    return report


def _inner_value(node: Node, values: list[float], ar: _Arith) -> float:
    """Combine child values for a product/sum node.

    Shared by batch evaluation and incremental bound updates so that a
    fully assigned bound state reproduces marginal() bit-for-bit.
    """
    if isinstance(node, ProductNode):
        acc = ar.one
        for child in node.children:
            acc = ar.mul(acc, values[child])
        return acc
    assert isinstance(node, SumNode)
    acc = ar.zero
    for w, child in node.children:
        acc = ar.add(acc, ar.mul(ar.weight(w), values[child]))
    return acc


def _leaf_marginal_value(node: Node, assignment: dict[CircuitVar, bool], ar: _Arith) -> float:
    if isinstance(node, ConstantLeaf):
        return ar.weight(node.value)
    if isinstance(node, BernoulliLeaf):
        val = assignment.get(node.var)
        if val is None:
            return ar.add(ar.weight(node.w_true), ar.weight(node.w_false))
        return ar.weight(node.w_true if val else node.w_false)
    assert isinstance(node, IndicatorLeaf)
    val = assignment.get(node.var)
    if val is None:
        return ar.one
    return ar.one if val == node.sign else ar.zero


def _evaluate(c: Circuit, leaf_value: Callable[[Node], float], ar: _Arith) -> float:
    values = [ar.zero] * len(c.nodes)
    for nid, node in enumerate(c.nodes):
        if isinstance(node, (BernoulliLeaf, IndicatorLeaf, ConstantLeaf)):
            values[nid] = leaf_value(node)
        else:
            values[nid] = _inner_value(node, values, ar)
    return values[c.root]


def evaluate_joint(
    c: Circuit,
    assignment: dict[CircuitVar, bool],
    mode: NumericMode = NumericMode.LINEAR,
) -> float:
    """Evaluate the root at a full assignment of the circuit variables."""
    c.require_valid()
    for var in range(c.num_vars):
        if var in c.leaves_of_var and var not in assignment:
            raise ValueError(f"variable {var} unassigned in joint query")
    ar = _ARITH[mode]
    return _evaluate(c, lambda node: _leaf_marginal_value(node, assignment, ar), ar)


def marginal(
    c: Circuit,
    assignment: dict[CircuitVar, bool] | None = None,
    mode: NumericMode = NumericMode.LINEAR,
) -> float:
    """Marginal mass of a partial assignment; unassigned variables are summed out."""
    c.require_valid()
    assignment = assignment or {}
    ar = _ARITH[mode]
    return _evaluate(c, lambda node: _leaf_marginal_value(node, assignment, ar), ar)


def partition(c: Circuit, mode: NumericMode = NumericMode.LINEAR) -> float:
    """Total mass: the marginal of the empty assignment."""
    return marginal(c, {}, mode)


class BoundState:
    """Per-node upper/lower bounds on the root marginal under partial assignment.

    Variables in `shared` may be assigned True/False one at a time; all other
    variables are latent and always marginalized. Each assignment updates only
    the nodes on paths from the touched leaves to the root and records their
    previous bounds in a trail frame so backtracking restores them bit-exactly.
    """

    def __init__(
        self,
        circuit: Circuit,
        shared: Iterable[CircuitVar],
        mode: NumericMode = NumericMode.LINEAR,
    ):
        circuit.require_valid()
        self.circuit = circuit
        self.shared = frozenset(shared)
        for var in self.shared:
            if var < 0 or var >= circuit.num_vars:
                raise ValueError(f"shared variable {var} out of range")
        self.mode = mode
        self._ar = _ARITH[mode]
        self.status: dict[CircuitVar, bool | None] = {v: None for v in self.shared}
        self.ub: list[float] = [0.0] * len(circuit.nodes)
        self.lb: list[float] = [0.0] * len(circuit.nodes)
        # frames: (level, var, [(node id, previous ub, previous lb), ...])
        self._frames: list[tuple[int, CircuitVar, list[tuple[int, float, float]]]] = []
        self.decided_level: int | None = None
        self.decided_value: bool | None = None
        for nid, node in enumerate(circuit.nodes):
            u, l = self._node_bounds(nid, node)
            self.ub[nid] = u
            self.lb[nid] = l

    def _leaf_weights(self, node: Node) -> tuple[float, float]:
        ar = self._ar
        if isinstance(node, BernoulliLeaf):
            return ar.weight(node.w_true), ar.weight(node.w_false)
        assert isinstance(node, IndicatorLeaf)
        return (ar.one, ar.zero) if node.sign else (ar.zero, ar.one)

    def _node_bounds(self, nid: int, node: Node) -> tuple[float, float]:
        ar = self._ar
        if isinstance(node, ConstantLeaf):
            v = ar.weight(node.value)
            return v, v
        if isinstance(node, (BernoulliLeaf, IndicatorLeaf)):
            wt, wf = self._leaf_weights(node)
            if node.var not in self.shared:
                mass = ar.add(wt, wf)
                return mass, mass
            val = self.status[node.var]
            if val is None:
                return max(wt, wf), min(wt, wf)
            w = wt if val else wf
            return w, w
        u = _inner_value(node, self.ub, ar)
        l = _inner_value(node, self.lb, ar)
        return u, l

    def assign(self, var: CircuitVar, val: bool, level: int) -> tuple[float, float]:
        """Fix a shared variable; returns the new (root ub, root lb)."""
        if var not in self.shared:
            raise ValueError(f"variable {var} is not shared")
        if self.status[var] is not None:
            raise ValueError(f"variable {var} already assigned")
        saved: list[tuple[int, float, float]] = []
        self._frames.append((level, var, saved))
        self.status[var] = val
        pending: list[int] = []
        queued: set[int] = set()

        def touch(nid: int, u: float, l: float) -> None:
            saved.append((nid, self.ub[nid], self.lb[nid]))
            self.ub[nid] = u
            self.lb[nid] = l
            for parent in self.circuit.parents[nid]:
                if parent not in queued:
                    queued.add(parent)
                    heapq.heappush(pending, parent)

        for nid in self.circuit.leaves_of_var.get(var, ()):
            u, l = self._node_bounds(nid, self.circuit.nodes[nid])
            if u != self.ub[nid] or l != self.lb[nid]:
                touch(nid, u, l)
        # Ascending id order guarantees all updated children of a node settle
        # before the node itself is recomputed (ids are topological, and new
        # work is only ever pushed above the id being processed).
        while pending:
            nid = heapq.heappop(pending)
            u, l = self._node_bounds(nid, self.circuit.nodes[nid])
            if u == self.ub[nid] and l == self.lb[nid]:
                continue
            touch(nid, u, l)
        return self.root_bounds()

    def backtrack_bounds(self, level: int) -> None:
        """Pop all trail frames above `level`, restoring saved bounds exactly."""
        while self._frames and self._frames[-1][0] > level:
            _, var, saved = self._frames.pop()
            for nid, old_ub, old_lb in reversed(saved):
                self.ub[nid] = old_ub
                self.lb[nid] = old_lb
            self.status[var] = None
        if self.decided_level is not None and self.decided_level > level:
            self.decided_level = None
            self.decided_value = None

    def root_bounds(self) -> tuple[float, float]:
        return self.ub[self.circuit.root], self.lb[self.circuit.root]

    def assigned_vars(self) -> list[CircuitVar]:
        return [var for _, var, _ in self._frames]


def init_bounds(
    c: Circuit,
    shared: Iterable[CircuitVar],
    mode: NumericMode = NumericMode.LINEAR,
) -> BoundState:
    """One bottom-up pass computing initial bounds for every node."""
    return BoundState(c, shared, mode)


def parse_pc(text: str) -> Circuit:
    """Parse the PC text format.

    Header ``pc <num_nodes> <num_vars>``, then one node per line in
    topological order: ``l <var> <w_true> <w_false>``, ``i <var> <sign>``,
    ``c <value>``, ``p <k> <c1> ... <ck>``, ``s <k> <w1> <c1> ... <wk> <ck>``.
    Blank lines and ``#`` comments are ignored.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise PcFormatError("empty circuit document")
    header = lines[0].split()
    if len(header) != 3 or header[0] != "pc":
        raise PcFormatError(f"malformed header: {lines[0]!r}")
    try:
        num_nodes, num_vars = int(header[1]), int(header[2])
    except ValueError as exc:
        raise PcFormatError(f"malformed header: {lines[0]!r}") from exc
    if len(lines) - 1 != num_nodes:
        raise PcFormatError(f"header declares {num_nodes} nodes, found {len(lines) - 1}")

    def parse_weight(tok: str, nid: int) -> float:
        try:
            w = float(tok)
        except ValueError as exc:
            raise PcFormatError(f"node {nid}: bad number {tok!r}") from exc
        if not math.isfinite(w) or w < 0.0:
            raise PcFormatError(f"node {nid}: negative or non-finite weight {tok}")
        return w

    nodes: list[Node] = []
    for nid, line in enumerate(lines[1:]):
        toks = line.split()
        tag = toks[0]
        try:
            if tag == "l":
                if len(toks) != 4:
                    raise PcFormatError(f"node {nid}: expected 'l <var> <w_true> <w_false>'")
                var = int(toks[1])
                node: Node = BernoulliLeaf(var, parse_weight(toks[2], nid), parse_weight(toks[3], nid))
            elif tag == "i":
                if len(toks) != 3:
                    raise PcFormatError(f"node {nid}: expected 'i <var> <sign>'")
                node = IndicatorLeaf(int(toks[1]), toks[2] == "1")
            elif tag == "c":
                if len(toks) != 2:
                    raise PcFormatError(f"node {nid}: expected 'c <value>'")
                node = ConstantLeaf(parse_weight(toks[1], nid))
            elif tag == "p":
                k = int(toks[1])
                children = [int(t) for t in toks[2:]]
                if len(children) != k:
                    raise PcFormatError(f"node {nid}: product child count mismatch")
                node = ProductNode(tuple(children))
            elif tag == "s":
                k = int(toks[1])
                rest = toks[2:]
                if len(rest) != 2 * k:
                    raise PcFormatError(f"node {nid}: sum arity mismatch")
                pairs = tuple(
                    (parse_weight(rest[2 * j], nid), int(rest[2 * j + 1])) for j in range(k)
                )
                node = SumNode(pairs)
            else:
                raise PcFormatError(f"node {nid}: unknown node tag {tag!r}")
        except ValueError as exc:
            raise PcFormatError(f"node {nid}: {exc}") from exc
        for child in node_children(node):
            if child >= nid:
                raise PcFormatError(f"node {nid}: forward or self child reference {child}")
            if child < 0:
                raise PcFormatError(f"node {nid}: negative child id {child}")
        nodes.append(node)
    return Circuit(num_vars, nodes)


def write_pc(c: Circuit) -> str:
    """Serialize a circuit; round-trips through parse_pc."""
    lines = [f"pc {len(c.nodes)} {c.num_vars}"]
    for node in c.nodes:
        if isinstance(node, BernoulliLeaf):
            lines.append(f"l {node.var} {node.w_true!r} {node.w_false!r}")
        elif isinstance(node, IndicatorLeaf):
            lines.append(f"i {node.var} {1 if node.sign else 0}")
        elif isinstance(node, ConstantLeaf):
            lines.append(f"c {node.value!r}")
        elif isinstance(node, ProductNode):
            lines.append("p " + " ".join(str(x) for x in (len(node.children),) + node.children))
        else:
            parts = [str(len(node.children))]
            for w, child in node.children:
                parts.append(repr(w))
                parts.append(str(child))
            lines.append("s " + " ".join(parts))
    return "\n".join(lines) + "\n"
