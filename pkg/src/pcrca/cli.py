"""Command-line front end.

Every command prints an aligned text report by default; ``--format records``
prints one JSON object per line instead. Timings appear only in text output
so that records are reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .canonical import canonical_space, decode_table_text
from .distribution import JointTable, estimate_distribution
from .errors import FileFormatError, PcrcaError
from .graph import CausalGraph, c_components, validate_graph
from .io import (
    dump_distribution,
    graph_from_dict,
    load_yaml,
    read_dataset,
    read_distribution,
    write_dataset,
    write_records,
)
from .metrics import (
    MetricKind,
    ScalarizationKind,
    SolveOptions,
    counterfactual_graph,
    evaluate_metric,
)
from .program import build_program
from .rca import RcaConfig, default_workers, run_rca
from .solve import DEFAULT_BUDGET, Tolerances, sample_oracle

DEFAULT_SEED = 0


# -- input helpers -----------------------------------------------------------------


def load_graph(spec: str) -> CausalGraph:
    """Graph from a YAML file (plain graph or narrative fixture) or a bundled model id."""
    path = Path(spec)
    if not path.exists():
        from .bench.models import MODELS, model

        if spec in MODELS:
            return model(spec)
        raise FileFormatError(f"no such file: {spec}")
    doc = load_yaml(path)
    if isinstance(doc, dict) and "graph" in doc:
        doc = doc["graph"]
    g = graph_from_dict(doc, str(path))
    validate_graph(g)
    return g


def load_distribution(spec: str, smoothing: float) -> JointTable:
    """YAML joint table, or a CSV dataset turned into empirical frequencies."""
    path = Path(spec)
    if not path.exists():
        raise FileFormatError(f"no such file: {spec}")
    if path.suffix.lower() == ".csv":
        return estimate_distribution(read_dataset(path), smoothing)
    return read_distribution(path)


def load_narrative(spec: str):
    from .bench.narratives import bundled
    from .bench.narratives import load_narrative as _load

    path = Path(spec)
    if path.exists():
        return _load(path)
    if "/" in spec:
        model_id, nid = spec.split("/", 1)
        try:
            return bundled(model_id, nid)
        except KeyError as e:
            raise FileFormatError(str(e.args[0])) from None
    raise FileFormatError(f"no such fixture: {spec} (use a file or MODEL/NARRATIVE such as M1/N1)")


def solve_options(args, use_reduction: bool = True) -> SolveOptions:
    return SolveOptions(
        use_reduction=use_reduction,
        budget=args.budget,
        tolerances=Tolerances(pivot=args.pivot_tol, feasibility=args.feas_tol),
        method=args.method,
        seed=args.seed,
    )


def table(rows: Sequence[Sequence[str]], header: Sequence[str] | None = None) -> str:
    body = [list(map(str, r)) for r in rows]
    if header is not None:
        body = [list(header)] + body
    if not body:
        return ""
    widths = [max(len(r[i]) for r in body) for i in range(len(body[0]))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in body]
    if header is not None:
        lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def fmt(x: float) -> str:
    return "nan" if isinstance(x, float) and math.isnan(x) else f"{x:.6f}"


def emit(args, records: list[dict], text: str) -> None:
    if args.format == "records":
        write_records(records, sys.stdout)
    else:
        sys.stdout.write(text.rstrip("\n") + "\n")


# -- commands ----------------------------------------------------------------------


def cmd_validate(args) -> int:
    g = load_graph(args.graph)
    comps = c_components(g)
    rows = []
    records = []
    for c in comps:
        card = canonical_space(g, c).cardinality
        rows.append([c.exogenous, "{" + ", ".join(c.members) + "}", str(card)])
        records.append(
            {"command": "validate", "exogenous": c.exogenous, "members": list(c.members), "cardinality": card}
        )
    n_edges = len(g.edges)
    text = [
        f"graph: {len(g.endogenous)} endogenous, {len(g.exogenous)} exogenous, {n_edges} edges",
        f"{len(comps)} c-component{'s' if len(comps) != 1 else ''}",
        table(rows, ["exogenous", "members", "canonical states"]),
    ]
    emit(args, records, "\n".join(text))
    return 0


def cmd_bounds(args) -> int:
    g = load_graph(args.graph)
    dist = load_distribution(args.data, args.smoothing)
    r = evaluate_metric(g, dist, args.metric, args.cause, args.effect, solve_options(args, not args.no_reduce))
    oracle = sample_oracle(r.program, args.oracle, args.seed) if args.oracle else None
    rec = {
        "command": "bounds",
        "metric": str(r.metric),
        "cause": r.cause,
        "effect": r.effect,
        "lower": r.lower,
        "upper": r.upper,
        "denominator": r.program.denominator,
        "degree": r.degree,
        "dimensions": [p.dimension for p in r.program.polytopes],
        "vertices": dict(r.interval.vertex_counts),
        "reduction": r.reduction.summary(),
        "event": r.program.event,
    }
    if oracle is not None:
        rec.update(oracle_lower=oracle.lower, oracle_upper=oracle.upper, oracle_contained=r.interval.contains(oracle))
    lines = [
        f"{r.metric}({r.cause} -> {r.effect}) in [{fmt(r.lower)}, {fmt(r.upper)}]",
        f"event: {r.program.event}",
        f"reduction: {r.reduction.summary()}",
        f"objective degree {r.degree}; polytopes "
        + (", ".join(f"{p.exo}:{p.dimension}" for p in r.program.polytopes) or "none"),
        "vertices: " + (", ".join(f"{k}:{v}" for k, v in r.interval.vertex_counts.items()) or "none"),
    ]
    for name, side in (("argmin", r.interval.argmin), ("argmax", r.interval.argmax)):
        if side:
            lines.append(f"{name}: " + "; ".join(f"{k} support {sum(1 for x in v if x > 1e-12)}" for k, v in side.items()))
    if oracle is not None:
        ok = "contained" if r.interval.contains(oracle) else "NOT contained"
        lines.append(f"sample oracle ({args.oracle} points): [{fmt(oracle.lower)}, {fmt(oracle.upper)}] {ok}")
    lines.append("timing: " + ", ".join(f"{k} {v * 1000:.1f} ms" for k, v in r.timing.items()))
    emit(args, [rec], "\n".join(lines))
    return 0


def cmd_rca(args) -> int:
    g = load_graph(args.graph)
    dist = load_distribution(args.data, args.smoothing)
    cfg = RcaConfig(
        alpha=args.alpha,
        w=args.w,
        metric=args.metric,
        scalarization=args.scalarization,
        include_pruned_parent=args.include_pruned_parent,
        solve=solve_options(args),
    )
    target = args.target
    if target is None:
        from .bench.models import MODELS

        target = MODELS[args.graph]["target"] if args.graph in MODELS else None
    if target is None:
        raise FileFormatError("--target is required")
    rep = run_rca(g, dist, target, cfg, args.workers)
    records = []
    rows = []
    for e in rep.table.entries:
        records.append(
            {"command": "rca", "kind": "score", "node": e.node, "lower": e.lower, "upper": e.upper,
             "score": e.scalar, "error": e.error}
        )  # fmt: skip
        rows.append([e.node, fmt(e.lower), fmt(e.upper), fmt(e.scalar), e.error or ""])
    paths = rep.paths[: args.top] if args.top else rep.paths
    prow = []
    for i, p in enumerate(paths, 1):
        records.append({"command": "rca", "kind": "path", "rank": i, "path": list(p.path), "score": p.score})
        prow.append([str(i), f"{p.score:.6f}", " -> ".join(p.path)])
    text = [
        f"target {target}; metric {cfg.metric}/{cfg.scalarization}; alpha {cfg.alpha:g}; w {cfg.w:g}",
        table(rows, ["node", "lower", "upper", "score", "note"]),
        "",
        table(prow, ["rank", "score", "path"]),
    ]
    if rep.top_root is not None:
        text.append(f"\ntop root: {rep.top_root}")
    emit(args, records, "\n".join(text))
    return 0


def cmd_simulate(args) -> int:
    from .bench.scm import exact_joint, simulate

    n = load_narrative(args.fixture)
    if args.exact:
        text = dump_distribution(exact_joint(n.scm))
        out = open(args.output, "w") if args.output else sys.stdout
        try:
            out.write(text)
        finally:
            if args.output:
                out.close()
        return 0
    data = simulate(n.scm, args.n, args.seed)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            write_dataset(data, fh)
        print(f"wrote {len(data)} rows for {n.key} to {args.output}", file=sys.stderr)
    else:
        write_dataset(data, sys.stdout)
    return 0


def cmd_experiment(args) -> int:
    from .bench.experiment import run_experiment

    cfg = RcaConfig(alpha=args.alpha, w=args.w, solve=solve_options(args))
    m = run_experiment(
        models=args.models or None,
        narratives=args.narratives or None,
        metrics=args.metrics,
        scalarizations=args.scalarizations,
        cfg=cfg,
        n=args.n,
        seed=args.seed,
        smoothing=args.smoothing,
        workers=args.workers,
    )
    emit(args, [{"command": "experiment", **r} for r in m.records()], m.to_table())
    return 0


def cmd_example3(args) -> int:
    from . import example3

    results = example3.reproduce(
        use_reduction=not args.no_reduce,
        oracle_samples=args.oracle if args.oracle else 0,
        seed=args.seed,
        options=solve_options(args),
    )
    lines = [
        "input: raw vector with entries 3 and 11 corrected, read as (S, X, Y, Z); "
        + ("reduction on" if not args.no_reduce else "reduction off, T added"),
    ]
    ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        ok &= r.passed
        lo, hi = r.reported
        elo, ehi = r.expected
        line = f"{r.metric:<4} [{lo:.6f}, {hi:.6f}]  expected [{elo}, {ehi}]  {status}"
        if r.metric is MetricKind.PN:
            line += f"  (conditional PN [{r.interval.lower:.6f}, {r.interval.upper:.6f}], P(X=1,Y=1) = {r.denominator:.5f})"
        lines.append(line)
        lines.append(f"     degree {r.degree}, polytope dimensions {list(r.dimensions)}, {r.seconds * 1000:.1f} ms")
        if r.oracle is not None:
            inside = "contained" if r.oracle_contained else "NOT contained"
            ok &= bool(r.oracle_contained)
            lines.append(f"     sample oracle [{r.oracle.lower:.6f}, {r.oracle.upper:.6f}] {inside}")
    emit(args, [{"command": "reproduce-example3", **r.record()} for r in results], "\n".join(lines))
    return 0 if ok else 1


def cmd_canonical(args) -> int:
    g = load_graph(args.graph)
    comps = c_components(g)
    if args.component:
        comps = [c for c in comps if c.exogenous == args.component or args.component in c.members]
        if not comps:
            raise FileFormatError(f"no c-component matches {args.component!r}")
    chunks = []
    records = []
    for c in comps:
        s = canonical_space(g, c)
        if s.cardinality > args.max_states:
            chunks.append(f"component {{{', '.join(c.members)}}}: {s.cardinality} states (over --max-states)")
        else:
            chunks.append(decode_table_text(s))
        records.append({"command": "canonical", "exogenous": c.exogenous, "members": list(c.members),
                        "cardinality": s.cardinality})  # fmt: skip
    emit(args, records, "\n".join(chunks))
    return 0


def cmd_cfgraph(args) -> int:
    from .cfgraph import reduce

    g = load_graph(args.graph)
    cg = counterfactual_graph(g, args.metric, args.cause, args.effect)
    summary = "none"
    if args.data:
        cg, rep = reduce(cg, load_distribution(args.data, args.smoothing))
        summary = rep.summary()
    rec = {"command": "cfgraph", "graph": cg.to_text(), "reduction": summary}
    emit(args, [rec], cg.to_text() + f"# reduction: {summary}\n")
    return 0


def cmd_program(args) -> int:
    from .cfgraph import reduce

    g = load_graph(args.graph)
    dist = load_distribution(args.data, args.smoothing)
    cg = counterfactual_graph(g, args.metric, args.cause, args.effect)
    if not args.no_reduce:
        cg, _ = reduce(cg, dist)
    prog = build_program(cg, dist)
    text = prog.to_text(include_objective=not args.no_objective)
    emit(args, [{"command": "program", "program": text}], text)
    return 0


# -- parser ------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _metric(text: str) -> MetricKind:
    try:
        return MetricKind.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _scalarization(text: str) -> ScalarizationKind:
    try:
        return ScalarizationKind.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "records"), default="table", help="output style")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--budget", type=_positive_int, default=DEFAULT_BUDGET, help="max vertex combinations")
    common.add_argument("--pivot-tol", type=_nonneg_float, default=Tolerances().pivot, help="pivot tolerance")
    common.add_argument("--feas-tol", type=_nonneg_float, default=Tolerances().feasibility, help="feasibility tolerance")
    common.add_argument("--method", choices=("effective", "vertices"), default="effective", help="optimizer")
    common.add_argument(
        "--smoothing", type=_nonneg_float, default=None, help="additive smoothing for CSV data (default 0; 1 for experiment)"
    )
    common.add_argument(
        "--workers", type=_positive_int, default=None, help="worker processes (default $PCRCA_WORKERS or 1)"
    )

    p = argparse.ArgumentParser(prog="pcrca", description="Bounds on probabilities of causation and root-cause ranking.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check a graph and list its c-components")
    s.add_argument("graph", help="graph YAML file or bundled model id (M1, M2, M3)")
    s.set_defaults(func=cmd_validate)

    def cause_effect(s, metric_default=MetricKind.PN):
        s.add_argument("--metric", type=_metric, default=metric_default, help="PN, PS, PNS, wPN or wPS")
        s.add_argument("--cause", required=True)
        s.add_argument("--effect", required=True)

    s = sub.add_parser("bounds", parents=[common], help="tight interval for one probability of causation")
    s.add_argument("graph")
    s.add_argument("data", help="distribution YAML or CSV dataset")
    cause_effect(s)
    s.add_argument("--no-reduce", action="store_true", help="skip the ancestor reduction")
    s.add_argument("--oracle", type=_positive_int, metavar="N", help="also report a sampled inner interval")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("rca", parents=[common], help="score ancestors of a target and rank causal paths")
    s.add_argument("graph")
    s.add_argument("data")
    s.add_argument("--target", help="effect node (defaults to the bundled model's target)")
    s.add_argument("--metric", type=_metric, default=MetricKind.PN)
    s.add_argument("--scalarization", type=_scalarization, default=ScalarizationKind.MINIMUM)
    s.add_argument("--alpha", type=float, default=2.0, help="pruning factor, > 1 (inf disables pruning)")
    s.add_argument("--w", type=float, default=2.0, help="weight of the path head, >= 1")
    s.add_argument("--include-pruned-parent", action="store_true", help="end pruned paths at the pruned parent")
    s.add_argument("--top", type=int, default=0, help="show only the first K paths")
    s.set_defaults(func=cmd_rca)

    s = sub.add_parser("simulate", parents=[common], help="sample a dataset from a narrative fixture")
    s.add_argument("fixture", help="fixture YAML or MODEL/NARRATIVE such as M1/N1")
    s.add_argument("-n", type=int, default=10_000, help="rows to draw")
    s.add_argument("-o", "--output", help="output file (default stdout)")
    s.add_argument("--exact", action="store_true", help="write the exact joint distribution instead")
    s.set_defaults(func=cmd_simulate)

    from .bench.experiment import DEFAULT_SAMPLES

    s = sub.add_parser("experiment", parents=[common], help="ranking matrix over the bundled narratives")
    s.add_argument("--models", nargs="*", default=[], help="subset of M1 M2 M3")
    s.add_argument("--narratives", nargs="*", default=[], help="subset such as N1 or M2/N3")
    s.add_argument("--metrics", nargs="+", type=_metric, default=list(MetricKind))
    s.add_argument("--scalarizations", nargs="+", type=_scalarization, default=[ScalarizationKind.MINIMUM])
    s.add_argument("-n", type=int, default=DEFAULT_SAMPLES, help="rows simulated per narrative")
    s.add_argument("--alpha", type=float, default=2.0)
    s.add_argument("--w", type=float, default=2.0)
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("reproduce-example3", parents=[common], help="built-in PN/PNS worked example")
    s.add_argument("--no-reduce", action="store_true")
    s.add_argument("--oracle", type=_positive_int, nargs="?", const=20_000, metavar="N")
    s.set_defaults(func=cmd_example3)

    s = sub.add_parser("canonical", parents=[common], help="debug: canonical mechanism tables")
    s.add_argument("graph")
    s.add_argument("--component", help="exogenous name or member of one component")
    s.add_argument("--max-states", type=int, default=4096)
    s.set_defaults(func=cmd_canonical)

    s = sub.add_parser("cfgraph", parents=[common], help="debug: counterfactual graph")
    s.add_argument("graph")
    cause_effect(s)
    s.add_argument("--data", help="reduce using this distribution")
    s.set_defaults(func=cmd_cfgraph)

    s = sub.add_parser("program", parents=[common], help="debug: constraints and objective")
    s.add_argument("graph")
    s.add_argument("data")
    cause_effect(s)
    s.add_argument("--no-reduce", action="store_true")
    s.add_argument("--no-objective", action="store_true", help="omit the expanded polynomial")
    s.set_defaults(func=cmd_program)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", None) is None:
        args.workers = default_workers()
    if args.smoothing is None:
        # parent-parser actions are shared, so per-command defaults are resolved here
        from .bench.experiment import DEFAULT_SMOOTHING

        args.smoothing = DEFAULT_SMOOTHING if args.command == "experiment" else 0.0
    try:
        if hasattr(args, "alpha"):
            RcaConfig(alpha=args.alpha, w=args.w)
        return args.func(args)
    except PcrcaError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
