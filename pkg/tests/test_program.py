import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcrca import example3
from pcrca.bench.scm import (
    FullScm,
    cause_effect_pairs,
    exact_joint,
    ground_truth_metric,
    random_graph,
)
from pcrca.cfgraph import (
    CounterfactualGraph,
    build_pn_ps_graph,
    build_pns_graph,
    reduce,
)
from pcrca.distribution import query
from pcrca.errors import ZeroConditioningEvent
from pcrca.graph import CausalGraph
from pcrca.metrics import MetricKind, counterfactual_graph
from pcrca.program import (
    build_constraints,
    build_denominator,
    build_objective,
    build_program,
)


@pytest.fixture
def pn_program(mediator_graph, example_dist):
    cg, _ = reduce(build_pn_ps_graph(mediator_graph, "X", 0, "Y"), example_dist)
    return build_program(cg, example_dist)


def test_reduced_pn_shape(pn_program):
    assert [p.dimension for p in pn_program.polytopes] == [8, 16]
    assert pn_program.degree == 2
    assert pn_program.objective.degree == 2


def test_unreduced_pn_shape(mediator_graph):
    dist = example3.distribution(include_t=True)
    prog = build_program(build_pn_ps_graph(mediator_graph, "X", 0, "Y"), dist)
    assert sorted(p.dimension for p in prog.polytopes) == [2, 4, 8, 16]
    assert prog.degree == 4


def test_constraint_rhs_products(pn_program, example_dist):
    u1, u2 = pn_program.polytopes
    d = example_dist
    for label, b in zip(u1.labels[:-1], u1.rhs[:-1]):
        x, y, z = (int(c) for c in label)
        want = query(d, {"Y": y}, {"X": x, "Z": z}) * query(d, {"X": x})
        assert b == pytest.approx(want, abs=1e-12)
    for label, b in zip(u2.labels[:-1], u2.rhs[:-1]):
        s, x, z = (int(c) for c in label)
        assert b == pytest.approx(query(d, {"Z": z}, {"S": s, "X": x}), abs=1e-12)
    assert len(u1.labels) == 9 and len(u2.labels) == 9


def test_rows_group_into_configurations(pn_program):
    # rows sharing the non-member part of the scope sum to one
    u2 = pn_program.polytopes[1]
    for s, x in itertools.product((0, 1), repeat=2):
        total = sum(b for lab, b in zip(u2.labels, u2.rhs) if lab[:2] == f"{s}{x}")
        assert total == pytest.approx(1.0)


def test_singleton_parentless_polytope():
    g = CausalGraph.from_edges(["X", "Y"], ["U", "V"], [("U", "X"), ("V", "Y"), ("X", "Y")])
    scm = FullScm(g, {"U": np.array([0.3, 0.7]), "V": np.array([0.5, 0.5])}, {"X": [[0], [1]], "Y": [[0, 1], [1, 0]]})
    dist = exact_joint(scm)
    (px,) = [p for p in build_constraints(build_pn_ps_graph(g, "X", 0, "Y"), dist) if p.exo == "U"]
    assert px.dimension == 2
    assert len(px.rhs) == 3
    assert px.rhs[1] == pytest.approx(0.7)


def test_golden_pn_objective(pn_program, example_dist):
    gamma = query(example_dist, {"S": 1})
    assert gamma == pytest.approx(0.25)
    poly = pn_program.objective
    assert poly.variables == ("U1", "U2")
    coefs = {c for c, _ in poly.terms}
    assert coefs <= {gamma, 1 - gamma, 1.0}
    # only U1 states with X=1 whose Y responds to Z can carry the PN event
    assert {m["U1"] for _, m in poly.monomials()} == {5, 6}
    assert len(poly.terms) == 14


def test_denominators(pn_program, mediator_graph, example_dist):
    assert pn_program.denominator == pytest.approx(query(example_dist, {"X": 1, "Y": 1}))
    pns, _ = reduce(build_pns_graph(mediator_graph, "X", "Y"), example_dist)
    assert build_denominator(pns, example_dist) == 1.0


def test_zero_mass_conditioning():
    g = CausalGraph.from_edges(["X", "Y"], [], [("X", "Y")])
    scm = FullScm(g.with_explicit_noise(), {"U_X": np.array([1.0]), "U_Y": np.array([1.0])}, {"X": [[0]], "Y": [[0, 1]]})
    dist = exact_joint(scm)
    with pytest.raises(ZeroConditioningEvent):
        build_program(build_pn_ps_graph(g, "X", 0, "Y"), dist)


def test_single_exogenous_is_linear():
    g = CausalGraph.from_edges(["X", "Y"], ["U"], [("U", "X"), ("U", "Y"), ("X", "Y")])
    rng = np.random.default_rng(3)
    scm = FullScm.canonical(g, {"U": rng.dirichlet(np.ones(8))})
    prog = build_program(build_pns_graph(g, "X", "Y"), exact_joint(scm))
    assert prog.degree == 1


def test_contradictory_event_gives_zero_polynomial():
    g = CausalGraph.from_edges(["X", "Y"], ["U"], [("U", "X"), ("U", "Y"), ("X", "Y")])
    cg = build_pn_ps_graph(g, "X", 0, "Y")
    x = cg.node("X")
    bad = CounterfactualGraph(
        cg.source, cg.family, cg.cause, cg.effect, cg.nodes, cg.exogenous, cg.parents, cg.exo_parent,
        cg.intervened, cg.query + ((x, 0),), cg.conditioning,
    )  # fmt: skip
    assert build_objective(bad).terms == ()


def _canonical_scm(seed):
    rng = np.random.default_rng(seed)
    ne = int(rng.integers(2, 5))
    g = random_graph(rng, ne, int(rng.integers(1, min(3, ne) + 1)))
    from pcrca.canonical import canonical_space
    from pcrca.graph import c_components

    priors = {c.exogenous: rng.dirichlet(np.ones(canonical_space(g, c).cardinality)) for c in c_components(g)}
    return FullScm.canonical(g, priors)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_true_point_is_feasible_and_exact(seed):
    scm = _canonical_scm(seed)
    g = scm.graph
    dist = exact_joint(scm)
    pairs = cause_effect_pairs(g)
    if not pairs:
        return
    for x, y in pairs[:2]:
        for metric in MetricKind:
            cg = counterfactual_graph(g, metric, x, y)
            try:
                prog = build_program(cg, dist)
            except ZeroConditioningEvent:
                continue
            qs = {p.exo: scm.priors[p.exo] for p in prog.polytopes}
            for p in prog.polytopes:
                assert p.residual(qs[p.exo]) < 1e-9
            truth = ground_truth_metric(scm, metric, x, y)
            assert prog.evaluate(qs) == pytest.approx(truth, abs=1e-9)
            assert prog.objective.evaluate(qs) == pytest.approx(truth * prog.denominator, abs=1e-9)
            for c, _ in prog.objective.terms:
                assert 0 <= c <= 1 + 1e-12
