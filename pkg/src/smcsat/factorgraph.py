"""Discrete factor graphs: UAI parsing, enumeration, circuit compilation.

Only binary variables are supported. Factor tables follow the convention
that the *last* scope variable varies fastest and, for each variable, the
True entry comes before the False entry (index bit 0 = True, 1 = False).

``compile_factor_graph`` is a deliberately naive Shannon-expansion compiler
producing smooth, decomposable circuits; it is meant for small models, with
externally compiled circuits supplied in PC format for anything larger.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .circuit import (
    Circuit,
    ConstantLeaf,
    IndicatorLeaf,
    Node,
    ProductNode,
    SumNode,
)


class UaiFormatError(ValueError):
    """Raised on malformed or unsupported UAI input."""


@dataclass(frozen=True)
class Factor:
    scope: tuple[int, ...]
    table: tuple[float, ...]

    def value(self, assignment: dict[int, bool]) -> float:
        idx = 0
        for var in self.scope:
            idx = (idx << 1) | (0 if assignment[var] else 1)
        return self.table[idx]


@dataclass(frozen=True)
class FactorGraph:
    kind: str  # MARKOV or BAYES; metadata only, both are factor products
    num_vars: int
    cardinalities: tuple[int, ...]
    factors: tuple[Factor, ...]


def parse_uai(text: str) -> FactorGraph:
    """Parse the UAI file format restricted to binary variables."""
    tokens = text.split()
    pos = 0

    def next_token(what: str) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise UaiFormatError(f"unexpected end of input, expected {what}")
        tok = tokens[pos]
        pos += 1
        return tok

    def next_int(what: str) -> int:
        tok = next_token(what)
        try:
            return int(tok)
        except ValueError as exc:
            raise UaiFormatError(f"expected integer {what}, got {tok!r}") from exc

    def next_float(what: str) -> float:
        tok = next_token(what)
        try:
            val = float(tok)
        except ValueError as exc:
            raise UaiFormatError(f"expected number {what}, got {tok!r}") from exc
        if not math.isfinite(val) or val < 0.0:
            raise UaiFormatError(f"negative or non-finite table entry {tok}")
        return val

    kind = next_token("network kind").upper()
    if kind not in ("MARKOV", "BAYES"):
        raise UaiFormatError(f"unknown network kind {kind!r}")
    num_vars = next_int("variable count")
    if num_vars < 1:
        raise UaiFormatError("variable count must be positive")
    cards = tuple(next_int(f"cardinality of variable {i}") for i in range(num_vars))
    for i, card in enumerate(cards):
        if card != 2:
            raise UaiFormatError(f"variable {i} has cardinality {card}; only binary supported")
    num_factors = next_int("factor count")
    scopes: list[tuple[int, ...]] = []
    for f in range(num_factors):
        k = next_int(f"scope size of factor {f}")
        if k < 1:
            raise UaiFormatError(f"factor {f}: empty scope")
        scope = tuple(next_int(f"scope var of factor {f}") for _ in range(k))
        if len(set(scope)) != len(scope):
            raise UaiFormatError(f"factor {f}: repeated variable in scope")
        for var in scope:
            if var < 0 or var >= num_vars:
                raise UaiFormatError(f"factor {f}: variable {var} out of range")
        scopes.append(scope)
    factors: list[Factor] = []
    for f, scope in enumerate(scopes):
        count = next_int(f"table size of factor {f}")
        if count != 1 << len(scope):
            raise UaiFormatError(
                f"factor {f}: table size {count} does not match scope of {len(scope)} vars"
            )
        table = tuple(next_float(f"table entry of factor {f}") for _ in range(count))
        factors.append(Factor(scope, table))
    if pos != len(tokens):
        raise UaiFormatError(f"trailing tokens after factor tables: {tokens[pos]!r}")
    return FactorGraph(kind, num_vars, cards, tuple(factors))


def write_uai(fg: FactorGraph) -> str:
    """Serialize a factor graph; round-trips through parse_uai."""
    lines = [fg.kind, str(fg.num_vars), " ".join(str(c) for c in fg.cardinalities)]
    lines.append(str(len(fg.factors)))
    for factor in fg.factors:
        lines.append(" ".join(str(x) for x in (len(factor.scope),) + factor.scope))
    for factor in fg.factors:
        lines.append(str(len(factor.table)))
        lines.append(" ".join(repr(v) for v in factor.table))
    return "\n".join(lines) + "\n"


def enumerate_marginal(
    fg: FactorGraph,
    assignment: dict[int, bool] | None = None,
    cap: int = 24,
) -> float:
    """Sum of the factor product over all completions of `assignment`."""
    assignment = assignment or {}
    free = [v for v in range(fg.num_vars) if v not in assignment]
    if len(free) > cap:
        raise ValueError(f"{len(free)} free variables exceed enumeration cap {cap}")
    total = 0.0
    values = dict(assignment)
    for mask in range(1 << len(free)):
        for bit, var in enumerate(free):
            values[var] = bool((mask >> bit) & 1)
        prod = 1.0
        for factor in fg.factors:
            prod *= factor.value(values)
            if prod == 0.0:
                break
        total += prod
    return total


def compile_factor_graph(
    fg: FactorGraph,
    order: Sequence[int] | None = None,
    memoize: bool = True,
    cap: int = 20,
) -> Circuit:
    """Compile a factor graph into a smooth, decomposable circuit.

    Shannon expansion along `order` (default: ascending variable index):
    each variable becomes a weight-1 binary sum whose branches multiply an
    indicator for the decided value, constants for factors completed at
    this step, and the sub-circuit over the remaining variables. Equal
    sub-problems are shared by memoizing on the decided prefix projected
    onto the variables still referenced by pending factors.
    """
    if fg.num_vars > cap:
        raise ValueError(f"{fg.num_vars} variables exceed compile cap {cap}")
    if order is None:
        order = tuple(range(fg.num_vars))
    else:
        order = tuple(order)
        if sorted(order) != list(range(fg.num_vars)):
            raise ValueError("order must be a permutation of all variables")

    position = {var: i for i, var in enumerate(order)}
    # Factor completes at the step its latest-ordered scope variable is decided.
    completes_at: dict[int, list[Factor]] = {}
    for factor in fg.factors:
        completes_at.setdefault(max(position[v] for v in factor.scope), []).append(factor)
    # After finishing step i, a decided variable stays relevant while some
    # factor completing later mentions it.
    relevant_after: list[frozenset[int]] = []
    for depth in range(fg.num_vars + 1):
        keep: set[int] = set()
        for step, facs in completes_at.items():
            if step >= depth:
                for factor in facs:
                    keep.update(v for v in factor.scope if position[v] < depth)
        relevant_after.append(frozenset(keep))

    nodes: list[Node] = []
    memo: dict[tuple[int, tuple[tuple[int, bool], ...]], int] = {}

    def emit(node: Node) -> int:
        nodes.append(node)
        return len(nodes) - 1

    def build(depth: int, context: dict[int, bool]) -> int:
        key = (depth, tuple(sorted(context.items())))
        if memoize and key in memo:
            return memo[key]
        var = order[depth]
        branches: list[tuple[float, int]] = []
        for val in (True, False):
            extended = dict(context)
            extended[var] = val
            children = [emit(IndicatorLeaf(var, val))]
            for factor in completes_at.get(depth, ()):
                children.append(emit(ConstantLeaf(factor.value(extended))))
            if depth + 1 < fg.num_vars:
                sub_context = {v: extended[v] for v in relevant_after[depth + 1] if v in extended}
                children.append(build(depth + 1, sub_context))
            branches.append((1.0, emit(ProductNode(tuple(children)))))
        nid = emit(SumNode(tuple(branches)))
        if memoize:
            memo[key] = nid
        return nid

    root = build(0, {})
    assert root == len(nodes) - 1
    return Circuit(fg.num_vars, nodes)
