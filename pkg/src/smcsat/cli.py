"""Command-line interface: solve, verify, oracle, gen, compile, sweep, bench, pc.

Solver-style exit codes: 10 satisfiable, 20 unsatisfiable, 30 budget
exhausted, 0/2 for verification pass/fail, 1 for usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import circuit as pc
from .circuit import NumericMode
from .factorgraph import compile_factor_graph, parse_uai, write_uai
from .formula import parse_dimacs, write_dimacs
from .oracle import brute_solve, verify
from .problems import (
    GridSpec,
    LayeredNetwork,
    build_manifest,
    encode_hamiltonian_path,
    encode_supply_chain,
    gen_kcolor,
    gen_random_bn,
    load_manifest,
    marginalize_false_circuit,
    parse_edge_list,
    save_manifest,
    select_shared_vars,
)
from .solver import SolveResult, SolveStatus, SolverConfig, solve
from .sweep import sweep as run_sweep

EXIT_SAT = 10
EXIT_UNSAT = 20
EXIT_BUDGET = 30
EXIT_VERIFY_FAIL = 2
EXIT_ERROR = 1

BENCH_COLUMNS = [
    "instance",
    "q",
    "status",
    "decisions",
    "propagations",
    "bool_conflicts",
    "prob_conflicts",
    "learned",
    "restarts",
    "wall_ms",
]


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        ulw_enabled=not getattr(args, "no_ulw", False),
        numeric_mode=NumericMode(getattr(args, "mode", "linear")),
        seed=getattr(args, "seed", 0),
        max_conflicts=getattr(args, "budget_conflicts", None),
        max_seconds=getattr(args, "budget_seconds", None),
    )


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--no-ulw", action="store_true", help="disable bound propagation")
    parser.add_argument("--mode", choices=["linear", "log"], default="linear")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--stats", action="store_true", help="print c stat lines")
    parser.add_argument("--budget-conflicts", type=int, default=None)
    parser.add_argument("--budget-seconds", type=float, default=None)


def _print_result(result: SolveResult, show_stats: bool, out) -> int:
    if show_stats:
        for name, value in result.stats.as_dict().items():
            print(f"c stat {name} {value}", file=out)
    if result.status is SolveStatus.SAT:
        print("s SATISFIABLE", file=out)
        assert result.model is not None
        lits = [v if result.model[v] else -v for v in sorted(result.model)]
        print("v " + " ".join(str(l) for l in lits) + " 0", file=out)
        return EXIT_SAT
    if result.status is SolveStatus.UNSAT:
        print("s UNSATISFIABLE", file=out)
        return EXIT_UNSAT
    print("s UNKNOWN", file=out)
    return EXIT_BUDGET


def _read_model_file(path: str) -> dict[int, bool]:
    model: dict[int, bool] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line.startswith("v"):
            continue
        for tok in line[1:].split():
            lit = int(tok)
            if lit == 0:
                continue
            model[abs(lit)] = lit > 0
    if not model:
        raise ValueError(f"no v-lines found in {path}")
    return model


def _write_text(path: str, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


def cmd_solve(args: argparse.Namespace, out) -> int:
    problem = load_manifest(args.manifest)
    result = solve(problem, _solver_config(args))
    return _print_result(result, args.stats, out)


def cmd_verify(args: argparse.Namespace, out) -> int:
    problem = load_manifest(args.manifest)
    model = _read_model_file(args.model)
    mode = NumericMode(args.mode)
    report = verify(problem, model, mode)
    for i, ok in enumerate(report.clause_ok):
        if not ok:
            print(f"clause {i} violated", file=out)
    for check in report.predicate_checks:
        print(
            f"predicate {check.index} marginal={check.marginal!r} "
            f"{check.cmp.value} {check.resolved_threshold!r} holds={check.holds} "
            f"b={check.b_value} {'ok' if check.consistent else 'inconsistent'}",
            file=out,
        )
    if report.passed:
        print("verdict PASS", file=out)
        return 0
    print("verdict FAIL", file=out)
    return EXIT_VERIFY_FAIL


def cmd_oracle(args: argparse.Namespace, out) -> int:
    problem = load_manifest(args.manifest)
    result = brute_solve(problem, cap=args.cap, mode=NumericMode(args.mode))
    print(f"c models {result.model_count}", file=out)
    if result.status is SolveStatus.SAT:
        print("s SATISFIABLE", file=out)
        model = result.models[0]
        lits = [v if model[v] else -v for v in sorted(model)]
        print("v " + " ".join(str(l) for l in lits) + " 0", file=out)
        return EXIT_SAT
    print("s UNSATISFIABLE", file=out)
    return EXIT_UNSAT


def _gen_kcolor(args: argparse.Namespace, out) -> int:
    formula = gen_kcolor(GridSpec(args.rows, args.cols, args.colors), args.shuffle_seed)
    _write_text(args.output, write_dimacs(formula))
    print(f"wrote {args.output} ({formula.num_vars} vars, {formula.num_clauses} clauses)", file=out)
    return 0


def _gen_bn(args: argparse.Namespace, out) -> int:
    fg = gen_random_bn(args.n, args.max_parents, args.edge_fraction, args.seed)
    _write_text(args.output, write_uai(fg))
    print(f"wrote {args.output} ({fg.num_vars} vars, {len(fg.factors)} factors)", file=out)
    return 0


def _relative_to(path: Path, base: Path) -> str:
    try:
        return str(path.resolve().relative_to(base.resolve()))
    except ValueError:
        return str(path)


def _gen_supply(args: argparse.Namespace, out) -> int:
    sizes = tuple(int(x) for x in args.layers.split(","))
    net = LayeredNetwork(sizes)
    formula = encode_supply_chain(net, args.k_up, args.k_down)
    _write_text(args.output, write_dimacs(formula))
    print(f"wrote {args.output} ({formula.num_vars} edge vars)", file=out)
    if args.manifest is None:
        return 0
    # Full bundle: disaster BN over the edges, success circuit, manifest.
    manifest_path = Path(args.manifest)
    stem = manifest_path.with_suffix("")
    fg = gen_random_bn(net.num_edges, seed=args.disaster_seed)
    uai_path = Path(f"{stem}.uai")
    _write_text(str(uai_path), write_uai(fg))
    success = marginalize_false_circuit(compile_factor_graph(fg))
    pc_path = Path(f"{stem}.pc")
    _write_text(str(pc_path), pc.write_pc(success))
    shared = {cvar: cvar + 1 for cvar in range(net.num_edges)}
    doc = build_manifest(
        _relative_to(Path(args.output), manifest_path.parent),
        [
            {
                "circuit": _relative_to(pc_path, manifest_path.parent),
                "shared": shared,
                "cmp": args.cmp,
                "threshold": args.threshold,
                "threshold_mode": args.threshold_mode,
            }
        ],
        base_dir=manifest_path.parent,
    )
    save_manifest(doc, manifest_path)
    print(f"wrote {uai_path}, {pc_path}, {manifest_path}", file=out)
    return 0


def _gen_hampath(args: argparse.Namespace, out) -> int:
    graph = parse_edge_list(Path(args.graph).read_text(), args.nodes)
    formula = encode_hamiltonian_path(graph)
    _write_text(args.output, write_dimacs(formula))
    print(f"wrote {args.output} ({graph.n} cities, {formula.num_vars} vars)", file=out)
    return 0


def _gen_smc(args: argparse.Namespace, out) -> int:
    cnf_path = Path(args.cnf)
    formula = parse_dimacs(cnf_path.read_text())
    manifest_path = Path(args.output)
    if args.circuit is not None:
        model_path = Path(args.circuit)
        circ = pc.parse_pc(model_path.read_text())
        entry: dict = {"circuit": _relative_to(model_path, manifest_path.parent)}
    else:
        model_path = Path(args.uai)
        fg = parse_uai(model_path.read_text())
        circ = compile_factor_graph(fg, order=args.order)
        entry = {"uai": _relative_to(model_path, manifest_path.parent)}
        if args.order is not None:
            entry["order"] = args.order
    shared = select_shared_vars(circ.num_vars, formula.num_vars, args.seed)
    entry.update(
        {
            "shared": shared,
            "cmp": args.cmp,
            "threshold": args.threshold,
            "threshold_mode": args.threshold_mode,
        }
    )
    if args.b is not None:
        entry["b"] = args.b
    doc = build_manifest(
        _relative_to(cnf_path, manifest_path.parent), [entry], base_dir=manifest_path.parent
    )
    save_manifest(doc, manifest_path)
    print(f"wrote {manifest_path} ({len(shared)} shared vars)", file=out)
    return 0


def cmd_compile(args: argparse.Namespace, out) -> int:
    fg = parse_uai(Path(args.uai).read_text())
    order = [int(x) for x in args.order.split(",")] if args.order else None
    circ = compile_factor_graph(fg, order=order)
    _write_text(args.output, pc.write_pc(circ))
    print(f"wrote {args.output} ({len(circ.nodes)} nodes)", file=out)
    return 0


def cmd_sweep(args: argparse.Namespace, out) -> int:
    problem = load_manifest(args.manifest)
    result = run_sweep(
        problem,
        args.predicate,
        direction=args.direction,
        step=args.step,
        lo=args.lo,
        hi=args.hi,
        config=_solver_config(args),
    )
    if args.trace is not None:
        with open(args.trace, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["q", "status", "decisions", "conflicts", "wall_time"])
            for point in result.trace:
                writer.writerow(
                    [
                        point.q,
                        point.status.value,
                        point.stats.decisions,
                        point.stats.conflicts,
                        point.stats.wall_time,
                    ]
                )
    if not result.feasible:
        print("no feasible threshold in range", file=out)
        return EXIT_UNSAT
    print(f"best threshold {result.best_threshold}", file=out)
    assert result.best_model is not None
    lits = [v if result.best_model[v] else -v for v in sorted(result.best_model)]
    print("v " + " ".join(str(l) for l in lits) + " 0", file=out)
    return 0


def _bench_row(path: Path, config: SolverConfig) -> list:
    problem = load_manifest(path)
    result = solve(problem, config)
    q = problem.predicates[0].threshold if problem.predicates else ""
    stats = result.stats
    return [
        path.name,
        q,
        result.status.value,
        stats.decisions,
        stats.boolean_propagations,
        stats.boolean_conflicts,
        stats.prob_conflicts,
        stats.learned_clauses,
        stats.restarts,
        round(stats.wall_time * 1000.0, 3),
    ]


def cmd_bench(args: argparse.Namespace, out) -> int:
    suite = sorted(Path(args.suite).glob("*.json"))
    config = _solver_config(args)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(lambda p: _bench_row(p, config), suite))
    else:
        rows = [_bench_row(p, config) for p in suite]
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(BENCH_COLUMNS)
    writer.writerows(rows)
    text = buf.getvalue()
    if args.csv is not None:
        _write_text(args.csv, text)
        print(f"wrote {args.csv} ({len(rows)} instances)", file=out)
    else:
        out.write(text)
    return 0


def _parse_assignment(spec: str) -> dict[int, bool]:
    values: dict[int, bool] = {}
    if not spec:
        return values
    for item in spec.split(","):
        var, _, val = item.partition("=")
        values[int(var)] = val.strip() in ("1", "true", "True", "t")
    return values


def cmd_pc(args: argparse.Namespace, out) -> int:
    circ = pc.parse_pc(Path(args.file).read_text())
    if args.action == "validate":
        report = pc.validate(circ)
        print(f"smooth {report.smooth}", file=out)
        print(f"decomposable {report.decomposable}", file=out)
        for kind, nid in report.violations:
            print(f"violation {kind} node {nid}", file=out)
        return 0 if report.ok else EXIT_VERIFY_FAIL
    mode = NumericMode(args.mode)
    if args.action == "partition":
        print(repr(pc.partition(circ, mode)), file=out)
        return 0
    assignment = _parse_assignment(args.assign or "")
    if args.action == "eval":
        print(repr(pc.evaluate_joint(circ, assignment, mode)), file=out)
    else:
        print(repr(pc.marginal(circ, assignment, mode)), file=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smcsat")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve an SMC manifest")
    p_solve.add_argument("manifest")
    _add_solver_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="check a model against a manifest")
    p_verify.add_argument("manifest")
    p_verify.add_argument("model")
    p_verify.add_argument("--mode", choices=["linear", "log"], default="linear")
    p_verify.set_defaults(func=cmd_verify)

    p_oracle = sub.add_parser("oracle", help="brute-force solve an SMC manifest")
    p_oracle.add_argument("manifest")
    p_oracle.add_argument("--cap", type=int, default=24)
    p_oracle.add_argument("--mode", choices=["linear", "log"], default="linear")
    p_oracle.set_defaults(func=cmd_oracle)

    p_gen = sub.add_parser("gen", help="generate instances")
    gen_sub = p_gen.add_subparsers(dest="generator", required=True)

    g_kcolor = gen_sub.add_parser("kcolor")
    g_kcolor.add_argument("--rows", type=int, required=True)
    g_kcolor.add_argument("--cols", type=int, required=True)
    g_kcolor.add_argument("--colors", type=int, default=3)
    g_kcolor.add_argument("--shuffle-seed", type=int, default=None)
    g_kcolor.add_argument("-o", "--output", required=True)
    g_kcolor.set_defaults(func=_gen_kcolor)

    g_bn = gen_sub.add_parser("bn")
    g_bn.add_argument("-n", type=int, required=True)
    g_bn.add_argument("--max-parents", type=int, default=5)
    g_bn.add_argument("--edge-fraction", type=float, default=0.5)
    g_bn.add_argument("--seed", type=int, default=0)
    g_bn.add_argument("-o", "--output", required=True)
    g_bn.set_defaults(func=_gen_bn)

    g_supply = gen_sub.add_parser("supply")
    g_supply.add_argument("--layers", required=True, help="comma-separated layer sizes")
    g_supply.add_argument("--k-up", type=int, default=2)
    g_supply.add_argument("--k-down", type=int, default=2)
    g_supply.add_argument("-o", "--output", required=True)
    g_supply.add_argument("--manifest", default=None, help="also emit disaster BN + manifest")
    g_supply.add_argument("--disaster-seed", type=int, default=0)
    g_supply.add_argument("--threshold", type=float, default=0.0)
    g_supply.add_argument("--threshold-mode", default="absolute")
    g_supply.add_argument("--cmp", default="ge")
    g_supply.set_defaults(func=_gen_supply)

    g_ham = gen_sub.add_parser("hampath")
    g_ham.add_argument("--graph", required=True, help="edge list file, `u v` per line")
    g_ham.add_argument("--nodes", type=int, default=None)
    g_ham.add_argument("-o", "--output", required=True)
    g_ham.set_defaults(func=_gen_hampath)

    g_smc = gen_sub.add_parser("smc")
    g_smc.add_argument("--cnf", required=True)
    src = g_smc.add_mutually_exclusive_group(required=True)
    src.add_argument("--circuit")
    src.add_argument("--uai")
    g_smc.add_argument("--order", type=int, nargs="*", default=None)
    g_smc.add_argument("--threshold", type=float, required=True)
    g_smc.add_argument("--threshold-mode", default="partition_fraction")
    g_smc.add_argument("--cmp", default="ge")
    g_smc.add_argument("--b", type=int, default=None)
    g_smc.add_argument("--seed", type=int, default=0)
    g_smc.add_argument("-o", "--output", required=True)
    g_smc.set_defaults(func=_gen_smc)

    p_compile = sub.add_parser("compile", help="compile a UAI model to a circuit")
    p_compile.add_argument("uai")
    p_compile.add_argument("--order", default=None, help="comma-separated variable order")
    p_compile.add_argument("-o", "--output", required=True)
    p_compile.set_defaults(func=cmd_compile)

    p_sweep = sub.add_parser("sweep", help="threshold sweep on one predicate")
    p_sweep.add_argument("manifest")
    p_sweep.add_argument("--predicate", type=int, default=0)
    p_sweep.add_argument("--direction", choices=["up", "down"], default="up")
    p_sweep.add_argument("--step", type=float, default=1e-2)
    p_sweep.add_argument("--lo", type=float, default=0.0)
    p_sweep.add_argument("--hi", type=float, default=1.0)
    p_sweep.add_argument("--trace", default=None, help="write per-step CSV here")
    _add_solver_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_bench = sub.add_parser("bench", help="run a directory of manifests")
    p_bench.add_argument("suite")
    mode_group = p_bench.add_mutually_exclusive_group()
    mode_group.add_argument("--with-ulw", dest="no_ulw", action="store_false")
    mode_group.add_argument("--without-ulw", dest="no_ulw", action="store_true")
    p_bench.set_defaults(no_ulw=False)
    p_bench.add_argument("--csv", default=None)
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--mode", choices=["linear", "log"], default="linear")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--budget-conflicts", dest="budget_conflicts", type=int, default=None)
    p_bench.add_argument("--budget-seconds", dest="budget_seconds", type=float, default=None)
    p_bench.set_defaults(func=cmd_bench)

    p_pc = sub.add_parser("pc", help="circuit utilities")
    p_pc.add_argument("action", choices=["validate", "eval", "marginal", "partition"])
    p_pc.add_argument("file")
    p_pc.add_argument("--assign", default=None, help="e.g. 0=1,3=0")
    p_pc.add_argument("--mode", choices=["linear", "log"], default="linear")
    p_pc.set_defaults(func=cmd_pc)

    return parser


def main(argv: list[str] | None = None, out=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = out or sys.stdout
    try:
        return args.func(args, out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
