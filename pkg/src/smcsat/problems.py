"""Instance generators, application encoders and manifest assembly."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .circuit import (
    BernoulliLeaf,
    Circuit,
    IndicatorLeaf,
    parse_pc,
)
from .factorgraph import Factor, FactorGraph, compile_factor_graph, parse_uai
from .formula import CnfFormula, Lit, Var, parse_dimacs
from .solver import Comparator, PredicateSpec, SmcProblem, ThresholdMode


class ManifestError(ValueError):
    """Raised on malformed manifest documents."""


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    colors: int = 3

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid dimensions must be positive")
        if self.colors < 2:
            raise ValueError("need at least 2 colors")

    @property
    def num_vars(self) -> int:
        return self.rows * self.cols * self.colors


def gen_kcolor(g: GridSpec, shuffle_seed: int | None = None) -> CnfFormula:
    """k-coloring of a grid graph as CNF.

    Node (r, c) gets one variable per color; a node takes exactly one color
    and grid-adjacent nodes never share one. `shuffle_seed` optionally
    applies a seeded permutation to the variable names.
    """
    k = g.colors

    def var(r: int, c: int, color: int) -> Var:
        return (r * g.cols + c) * k + color + 1

    clauses: list[tuple[Lit, ...]] = []
    for r in range(g.rows):
        for c in range(g.cols):
            node_vars = [var(r, c, i) for i in range(k)]
            clauses.append(tuple(node_vars))
            for a, b in combinations(node_vars, 2):
                clauses.append((-a, -b))
    for r in range(g.rows):
        for c in range(g.cols):
            for dr, dc in ((0, 1), (1, 0)):
                r2, c2 = r + dr, c + dc
                if r2 < g.rows and c2 < g.cols:
                    for i in range(k):
                        clauses.append((-var(r, c, i), -var(r2, c2, i)))
    formula = CnfFormula(g.num_vars, tuple(clauses))
    if shuffle_seed is not None:
        formula = shuffle_variables(formula, shuffle_seed)
    return formula


def shuffle_variables(f: CnfFormula, seed: int) -> CnfFormula:
    """Apply a seeded permutation to variable names, keeping polarities."""
    rng = random.Random(seed)
    perm = list(range(1, f.num_vars + 1))
    rng.shuffle(perm)
    mapping = {old: new for old, new in zip(range(1, f.num_vars + 1), perm)}
    clauses = tuple(
        tuple((1 if lit > 0 else -1) * mapping[abs(lit)] for lit in clause)
        for clause in f.clauses
    )
    return CnfFormula(f.num_vars, clauses)


def exactly_k(vars: Sequence[Var], k: int) -> list[tuple[Lit, ...]]:
    """Binomial exactly-k encoding over the given variables (no auxiliaries)."""
    n = len(vars)
    if k < 0 or k > n:
        raise ValueError(f"k={k} out of range for {n} variables")
    clauses: list[tuple[Lit, ...]] = []
    for subset in combinations(vars, k + 1):
        clauses.append(tuple(-v for v in subset))
    for subset in combinations(vars, n - k + 1):
        clauses.append(tuple(subset))
    return clauses


@dataclass(frozen=True)
class LayeredNetwork:
    """Fully connected adjacent layers; every edge is one decision variable."""

    layer_sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least two layers")
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError("layer sizes must be positive")

    @property
    def num_edges(self) -> int:
        return sum(a * b for a, b in zip(self.layer_sizes, self.layer_sizes[1:]))

    def edge_var(self, interface: int, u: int, v: int) -> Var:
        base = sum(a * b for a, b in zip(self.layer_sizes[:interface], self.layer_sizes[1 : interface + 1]))
        return base + u * self.layer_sizes[interface + 1] + v + 1

    def downstream_edges(self, layer: int, node: int) -> list[Var]:
        return [self.edge_var(layer, node, v) for v in range(self.layer_sizes[layer + 1])]

    def upstream_edges(self, layer: int, node: int) -> list[Var]:
        return [self.edge_var(layer - 1, u, node) for u in range(self.layer_sizes[layer - 1])]


def encode_supply_chain(
    net: LayeredNetwork,
    k_up: int | None = 2,
    k_down: int | None = 2,
) -> CnfFormula:
    """Cardinality constraints on trades: every node buys from exactly `k_up`
    upstream suppliers and sells to exactly `k_down` downstream demanders.

    The first layer carries no upstream constraint and the last layer no
    downstream constraint; passing None skips that side entirely.
    """
    clauses: list[tuple[Lit, ...]] = []
    sizes = net.layer_sizes
    for layer in range(1, len(sizes)):
        if k_up is None:
            break
        for node in range(sizes[layer]):
            edges = net.upstream_edges(layer, node)
            if len(edges) < k_up:
                raise ValueError(
                    f"layer {layer} node {node}: {len(edges)} upstream neighbors < k_up={k_up}"
                )
            clauses.extend(exactly_k(edges, k_up))
    for layer in range(len(sizes) - 1):
        if k_down is None:
            break
        for node in range(sizes[layer]):
            edges = net.downstream_edges(layer, node)
            if len(edges) < k_down:
                raise ValueError(
                    f"layer {layer} node {node}: {len(edges)} downstream neighbors < k_down={k_down}"
                )
            clauses.extend(exactly_k(edges, k_down))
    return CnfFormula(net.num_edges, tuple(clauses))


@dataclass(frozen=True)
class GraphSpec:
    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("need at least one node")
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "GraphSpec":
        return cls(n, frozenset((min(u, v), max(u, v)) for u, v in edges))

    def adjacent(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges


def parse_edge_list(text: str, n: int | None = None) -> GraphSpec:
    """Read `u v` edge lines (0-based); n defaults to max index + 1."""
    edges = []
    max_node = -1
    for raw in text.splitlines():
        line = raw.split("#")[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"bad edge line {raw!r}")
        u, v = int(parts[0]), int(parts[1])
        edges.append((u, v))
        max_node = max(max_node, u, v)
    if n is None:
        n = max_node + 1 if max_node >= 0 else 1
    return GraphSpec.from_edges(n, edges)


def encode_hamiltonian_path(g: GraphSpec) -> CnfFormula:
    """Order-based Hamiltonian path encoding with n^2 variables.

    Variable (i, j) means position i of the path is city j. Exactly one
    city per position, exactly one position per city, and consecutive
    positions may only hold adjacent cities. Models are in bijection with
    directed Hamiltonian paths.
    """
    n = g.n

    def var(pos: int, city: int) -> Var:
        return pos * n + city + 1

    clauses: list[tuple[Lit, ...]] = []
    for pos in range(n):
        clauses.extend(exactly_k([var(pos, j) for j in range(n)], 1))
    for city in range(n):
        clauses.extend(exactly_k([var(i, city) for i in range(n)], 1))
    for pos in range(n - 1):
        for u in range(n):
            for v in range(n):
                if u != v and not g.adjacent(u, v):
                    clauses.append((-var(pos, u), -var(pos + 1, v)))
    return CnfFormula(n * n, tuple(clauses))


def decode_hamiltonian_path(g: GraphSpec, model: dict[Var, bool]) -> list[int]:
    """Recover the visiting order from a model of encode_hamiltonian_path."""
    n = g.n
    path = []
    for pos in range(n):
        cities = [j for j in range(n) if model[pos * n + j + 1]]
        if len(cities) != 1:
            raise ValueError(f"position {pos} holds {len(cities)} cities")
        path.append(cities[0])
    return path


def gen_random_bn(
    n: int,
    max_parents: int = 5,
    edge_fraction: float = 0.5,
    seed: int = 0,
) -> FactorGraph:
    """Random Bayesian network over n binary variables.

    Parents are drawn topologically with at most `max_parents` per node and
    a total edge count of about `edge_fraction` of the maximum possible.
    Conditional tables are uniform draws normalized per parent configuration.
    """
    if n < 1:
        raise ValueError("need at least one variable")
    rng = random.Random(seed)
    capacity = sum(min(i, max_parents) for i in range(n))
    target = round(edge_fraction * capacity)
    candidates = [(p, child) for child in range(n) for p in range(child)]
    rng.shuffle(candidates)
    parents: dict[int, list[int]] = {i: [] for i in range(n)}
    taken = 0
    for p, child in candidates:
        if taken >= target:
            break
        if len(parents[child]) < max_parents:
            parents[child].append(p)
            taken += 1
    factors = []
    for child in range(n):
        ps = tuple(sorted(parents[child]))
        table: list[float] = []
        for _ in range(1 << len(ps)):
            wt, wf = rng.random(), rng.random()
            s = wt + wf
            if s == 0.0:
                wt, wf, s = 0.5, 0.5, 1.0
            table.extend((wt / s, wf / s))
        factors.append(Factor(ps + (child,), tuple(table)))
    return FactorGraph("BAYES", n, (2,) * n, tuple(factors))


def marginalize_false_circuit(c: Circuit) -> Circuit:
    """Reinterpret False assignments as "don't care".

    Every leaf keeps its True weight but its False weight becomes the
    leaf's total mass, so evaluating the result at a selection vector x
    yields the original circuit's marginal with evidence v=True for every
    selected v and everything unselected summed out. This turns a
    disaster/survival model over components into a circuit whose joint at
    x is the success probability of the selected component set.
    """
    nodes = []
    for node in c.nodes:
        if isinstance(node, BernoulliLeaf):
            nodes.append(BernoulliLeaf(node.var, node.w_true, node.w_true + node.w_false))
        elif isinstance(node, IndicatorLeaf):
            wt = 1.0 if node.sign else 0.0
            nodes.append(BernoulliLeaf(node.var, wt, 1.0))
        else:
            nodes.append(node)
    return Circuit(c.num_vars, nodes)


def select_shared_vars(
    circuit_num_vars: int,
    formula_num_vars: int,
    seed: int,
) -> dict[int, Var]:
    """Random shared-variable map for synthetic SMC instances.

    The shared count is the lesser of half the circuit's variables and all
    of the formula's variables; both sides are drawn uniformly at random.
    """
    rng = random.Random(seed)
    count = min(circuit_num_vars // 2, formula_num_vars)
    cvars = sorted(rng.sample(range(circuit_num_vars), count))
    fvars = rng.sample(range(1, formula_num_vars + 1), count)
    return dict(zip(cvars, fvars))


_CMP_VALUES = {c.value for c in Comparator}
_MODE_VALUES = {m.value for m in ThresholdMode}


def build_manifest(
    cnf: str,
    predicates: Sequence[dict],
    base_dir: str | Path | None = None,
) -> dict:
    """Assemble and validate a manifest document (JSON-serializable dict)."""
    doc = {"cnf": str(cnf), "predicates": []}
    base = Path(base_dir) if base_dir is not None else None

    def check_path(p: str) -> None:
        if base is not None and not (base / p).exists():
            raise ManifestError(f"referenced file does not exist: {p}")

    check_path(doc["cnf"])
    for i, desc in enumerate(predicates):
        entry: dict = {}
        has_circuit = "circuit" in desc
        has_uai = "uai" in desc
        if has_circuit == has_uai:
            raise ManifestError(f"predicate {i}: exactly one of 'circuit' or 'uai' required")
        if has_circuit:
            entry["circuit"] = str(desc["circuit"])
            check_path(entry["circuit"])
        else:
            entry["uai"] = str(desc["uai"])
            check_path(entry["uai"])
            if "order" in desc:
                entry["order"] = [int(x) for x in desc["order"]]
        shared = {int(k): int(v) for k, v in desc.get("shared", {}).items()}
        if len(set(shared.values())) != len(shared):
            raise ManifestError(f"predicate {i}: shared map is not injective")
        entry["shared"] = {str(k): v for k, v in sorted(shared.items())}
        if desc.get("b") is not None:
            b = int(desc["b"])
            if b == 0:
                raise ManifestError(f"predicate {i}: b literal must be nonzero")
            entry["b"] = b
        cmp = str(desc.get("cmp", "ge"))
        if cmp not in _CMP_VALUES:
            raise ManifestError(f"predicate {i}: unknown comparator {cmp!r}")
        entry["cmp"] = cmp
        entry["threshold"] = float(desc["threshold"])
        mode = str(desc.get("threshold_mode", "absolute"))
        if mode not in _MODE_VALUES:
            raise ManifestError(f"predicate {i}: unknown threshold mode {mode!r}")
        entry["threshold_mode"] = mode
        doc["predicates"].append(entry)
    return doc


def save_manifest(doc: dict, path: str | Path) -> None:
    path = Path(path)
    build_manifest(doc["cnf"], doc["predicates"], base_dir=path.parent)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def load_manifest(path: str | Path) -> SmcProblem:
    """Load a manifest into an SmcProblem; paths resolve next to the manifest."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
    base = path.parent
    if "cnf" not in doc:
        raise ManifestError(f"{path}: missing 'cnf' field")
    cnf_path = base / doc["cnf"]
    if not cnf_path.exists():
        raise ManifestError(f"{path}: CNF file not found: {doc['cnf']}")
    cnf = parse_dimacs(cnf_path.read_text())
    predicates = []
    for i, entry in enumerate(doc.get("predicates", [])):
        if "circuit" in entry:
            pc_path = base / entry["circuit"]
            if not pc_path.exists():
                raise ManifestError(f"{path}: circuit file not found: {entry['circuit']}")
            circuit = parse_pc(pc_path.read_text())
        elif "uai" in entry:
            uai_path = base / entry["uai"]
            if not uai_path.exists():
                raise ManifestError(f"{path}: UAI file not found: {entry['uai']}")
            fg = parse_uai(uai_path.read_text())
            circuit = compile_factor_graph(fg, order=entry.get("order"))
        else:
            raise ManifestError(f"{path}: predicate {i} has neither 'circuit' nor 'uai'")
        shared = {int(k): int(v) for k, v in entry.get("shared", {}).items()}
        predicates.append(
            PredicateSpec(
                circuit=circuit,
                shared_map=shared,
                cmp=Comparator(entry.get("cmp", "ge")),
                threshold=float(entry["threshold"]),
                threshold_mode=ThresholdMode(entry.get("threshold_mode", "absolute")),
                b=entry.get("b"),
            )
        )
    return SmcProblem(cnf=cnf, predicates=tuple(predicates))
