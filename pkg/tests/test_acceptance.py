"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import time

import numpy as np
import pytest

from pcrca import example3
from pcrca.bench.experiment import run_experiment
from pcrca.bench.narratives import bundled_narratives
from pcrca.bench.scm import (
    FullScm,
    cause_effect_pairs,
    exact_joint,
    ground_truth_metric,
    random_graph,
    random_scm,
)
from pcrca.canonical import canonical_space
from pcrca.cfgraph import build_pn_ps_graph, build_pns_graph, reduce
from pcrca.cli import main
from pcrca.distribution import component_product
from pcrca.graph import c_components
from pcrca.io import dump_distribution, dump_graph
from pcrca.metrics import MetricKind, SolveOptions, evaluate_metric
from pcrca.rca import NodeScore, PcScoreTable, RcaConfig, path_score, rank_paths
from pcrca.solve import sample_oracle


@pytest.fixture
def report(capsys):
    def emit(criterion: str, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
        assert ok, detail

    return emit


def test_c1_worked_example(report):
    t0 = time.perf_counter()
    results = {r.metric: r for r in example3.reproduce()}
    seconds = time.perf_counter() - t0
    pn, pns = results[MetricKind.PN], results[MetricKind.PNS]
    ok = pn.passed and pns.passed and seconds < 5
    detail = (
        f"PN [{pn.reported[0]:.6f}, {pn.reported[1]:.6f}] vs [0.175, 0.245], "
        f"PNS [{pns.reported[0]:.6f}, {pns.reported[1]:.6f}] vs [0.35, 0.49], tol 1e-3, {seconds:.2f} s"
    )
    report("C1 worked example bounds", ok, detail)


def _mediator_scm(rng):
    g = example3.graph()
    priors = {c.exogenous: rng.dirichlet(np.ones(canonical_space(g, c).cardinality)) for c in c_components(g)}
    return FullScm.canonical(g, priors)


def test_c2_reduction_soundness(report):
    rng = np.random.default_rng(20240601)
    checks, worst, bad = 0, 0.0, []
    for i in range(50):
        scm = random_scm(rng)
        assert len(scm.graph.endogenous) <= 6 and len(scm.graph.exogenous) <= 3
        dist = exact_joint(scm)
        pairs = cause_effect_pairs(scm.graph)
        x, y = pairs[int(rng.integers(len(pairs)))]
        for m in (MetricKind.PN, MetricKind.PS, MetricKind.PNS):
            a = evaluate_metric(scm.graph, dist, m, x, y, SolveOptions(use_reduction=True)).interval
            b = evaluate_metric(scm.graph, dist, m, x, y, SolveOptions(use_reduction=False)).interval
            diff = max(abs(a.lower - b.lower), abs(a.upper - b.upper))
            worst = max(worst, diff)
            checks += 1
            if diff > 1e-6:
                bad.append((i, str(m), x, y, diff))
    removed_ok = 0
    shapes = 10
    for _ in range(shapes):
        scm = _mediator_scm(rng)
        dist = exact_joint(scm)
        for cg in (build_pn_ps_graph(scm.graph, "X", 0, "Y"), build_pns_graph(scm.graph, "X", "Y")):
            _, rep = reduce(cg, dist)
            removed_ok += rep.removed_exogenous == {"U5", "U6"}
    ok = not bad and removed_ok == 2 * shapes
    detail = (
        f"{checks - len(bad)}/{checks} interval pairs agree (worst {worst:.1e}, tol 1e-6) on 50 random models; "
        f"U5,U6 removed exactly in {removed_ok}/{2 * shapes} mediator-shaped graphs"
    )
    report("C2 reduction soundness", ok, detail)


def test_c3_oracle_containment(report):
    rng = np.random.default_rng(777)
    cases, inside, oracle_ok, total = 0, 0, 0, 0
    misses = []
    for i in range(100):
        scm = random_scm(rng)
        dist = exact_joint(scm)
        pairs = cause_effect_pairs(scm.graph)
        x, y = pairs[int(rng.integers(len(pairs)))]
        case_ok = True
        for m in MetricKind:
            r = evaluate_metric(scm.graph, dist, m, x, y)
            truth = ground_truth_metric(scm, m, x, y)
            hit = r.lower - 1e-8 <= truth <= r.upper + 1e-8
            inner = sample_oracle(r.program, 1000, seed=i)
            contained = r.interval.contains(inner, 1e-9)
            total += 1
            oracle_ok += contained
            if not hit:
                misses.append((i, str(m), x, y, truth, r.lower, r.upper))
            case_ok &= hit
        cases += 1
        inside += case_ok
    ok = inside == cases and oracle_ok == total
    detail = f"truth inside interval for all five metrics in {inside}/{cases} SCMs; oracle contained {oracle_ok}/{total}"
    if misses:
        detail += f"; first miss {misses[0]}"
    report("C3 oracle containment", ok, detail)


def test_c4_fixture_factorization(report):
    worst, count = 0.0, 0
    for n in bundled_narratives():
        t = exact_joint(n.scm)
        worst = max(worst, float(np.max(np.abs(component_product(n.graph, t) - t.tensor))))
        count += 1
    report("C4 c-component factorization", worst < 1e-9, f"{count} fixtures, worst deviation {worst:.1e} (tol 1e-9)")


def test_c5_objective_degree(report):
    r = evaluate_metric(example3.graph(), example3.distribution(), MetricKind.PN, "X", "Y")
    dims = [p.dimension for p in r.program.polytopes]
    ok = r.program.objective.degree == 2 and sorted(dims) == [8, 16] and len(dims) == 2
    report("C5 objective degree", ok, f"degree {r.program.objective.degree}, polytope dimensions {dims}")


def test_c6_rca_recovery(capsys, report):
    m = run_experiment(cfg=RcaConfig(alpha=2, w=2), seed=0)
    hits, scored = m.recovered(MetricKind.PN)
    pn_rows = {(r.model, r.narrative) for r in m.rows if not r.latent_truth and r.cell("PN").status == "match"}
    sufficiency = (MetricKind.PS, MetricKind.PNS, MetricKind.WPS)
    contrast = sorted(
        f"{r.model}/{r.narrative} ({s}: {r.cell(s).root})"
        for r in m.rows
        for s in sufficiency
        if (r.model, r.narrative) in pn_rows and r.cell(s).status == "miss"
    )
    ok = hits >= 9 and scored == 9 and bool(contrast)
    detail = f"PN/minimum recovered {hits}/{scored}; sufficiency-based misses that PN recovers: {', '.join(contrast) or 'none'}"
    with capsys.disabled():
        print("\n" + m.to_table())
    report("C6 RCA recovery", ok, detail)


def _all_paths(g, y):
    out = []

    def walk(v, suffix):
        ps = g.endogenous_parents(v)
        if not ps:
            if len(suffix) > 1:
                out.append(tuple(suffix))
            return
        for p in ps:
            walk(p, [p] + suffix)

    walk(y, [y])
    return out


def test_c7_unpruned_ranking(report):
    rng = np.random.default_rng(99)
    same = 0
    for _ in range(50):
        n = int(rng.integers(2, 11))
        g = random_graph(rng, n, int(rng.integers(1, n + 1)), max_in=3)
        y = g.endogenous[-1]
        scores = {v: float(rng.uniform()) for v in g.endogenous if v != y}
        table = PcScoreTable(y, MetricKind.PN, "minimum", tuple(NodeScore(v, s, s, s) for v, s in scores.items()))
        cfg = RcaConfig(alpha=float("inf"), w=2.0)
        got = [(p.path, p.score) for p in rank_paths(g, table, y, cfg)]
        want = sorted(((p, path_score(p, scores, 2.0)) for p in _all_paths(g, y)), key=lambda r: (-r[1], r[0]))
        same += [p for p, _ in got] == [p for p, _ in want] and all(
            abs(a - b) <= 1e-12 for (_, a), (_, b) in zip(got, want)
        )
    report("C7 unpruned ranking equals enumeration", same == 50, f"{same}/50 random DAGs with <= 10 nodes agree")


def _cli(capsys, argv):
    code = main([str(a) for a in argv])
    out, _ = capsys.readouterr()
    return code, out


def test_c8_determinism(capsys, tmp_path, report):
    g = tmp_path / "g.yaml"
    g.write_text(dump_graph(example3.graph()))
    d = tmp_path / "d.yaml"
    d.write_text(dump_distribution(example3.distribution()))
    data = tmp_path / "m1.csv"
    assert main(["simulate", "M1/N1", "-n", "20000", "--seed", "2", "-o", str(data)]) == 0
    capsys.readouterr()
    commands = [
        ["validate", g],
        ["bounds", g, d, "--cause", "X", "--effect", "Y", "--metric", "PNS", "--oracle", "1000"],
        ["rca", "M1", data, "--smoothing", "1"],
        ["simulate", "M2/N3", "-n", "5000"],
        ["experiment", "--models", "M1", "-n", "20000"],
        ["reproduce-example3", "--oracle", "1000"],
        ["canonical", g, "--component", "U1"],
        ["cfgraph", g, "--cause", "X", "--effect", "Y", "--data", d],
        ["program", g, d, "--cause", "X", "--effect", "Y"],
    ]
    stable = 0
    for cmd in commands:
        outs = set()
        for workers in (1, 1, 2):
            code, out = _cli(capsys, cmd + ["--format", "records", "--seed", "11", "--workers", str(workers)])
            outs.add((code, out))
        stable += len(outs) == 1 and next(iter(outs))[0] == 0
    report(
        "C8 determinism",
        stable == len(commands),
        f"{stable}/{len(commands)} commands byte-identical across 2 runs and worker counts 1 and 2",
    )
