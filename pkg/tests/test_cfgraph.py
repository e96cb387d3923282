import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from pcrca.bench.scm import cause_effect_pairs, exact_joint, random_scm
from pcrca.cfgraph import (
    build_interventional_graph,
    build_pn_ps_graph,
    build_pns_graph,
    reduce,
)
from pcrca.graph import CausalGraph


def names(cg):
    return {n.name for n in cg.nodes}


def test_interventional_prunes_non_ancestors(mediator_graph):
    cg = build_interventional_graph(mediator_graph, "X", 1, "Y")
    assert names(cg) == {"S", "T", "X_{X=1}", "Z_{X=1}", "Y_{X=1}"}
    assert set(cg.exogenous) == {"U1", "U2", "U5", "U6"}
    assert cg.intervened[cg.node("X_{X=1}")] == 1
    assert cg.exo_parent.get(cg.node("X_{X=1}")) is None


def test_confounded_twin(confounded):
    cg = build_pn_ps_graph(confounded, "X", 0, "Y")
    assert names(cg) == {"X", "Z", "Y", "X_{X=0}", "Z_{X=0}", "Y_{X=0}"}
    assert set(cg.exogenous) == {"U1", "U2"}
    assert {n.name for n in cg.children_of_exo("U2")} == {"Z", "Z_{X=0}"}


def test_chain_twin():
    g = CausalGraph.from_edges(["X", "Y"], [], [("X", "Y")])
    cg = build_pn_ps_graph(g, "X", 0, "Y")
    assert names(cg) == {"X", "Y", "X_{X=0}", "Y_{X=0}"}
    y_noise = cg.exo_parent[cg.node("Y")]
    assert cg.exo_parent[cg.node("Y_{X=0}")] == y_noise


def test_mediator_twin_and_reduction(mediator_graph, example_dist):
    cg = build_pn_ps_graph(mediator_graph, "X", 0, "Y")
    assert names(cg) == {"X", "S", "T", "Z", "Y", "X_{X=0}", "Z_{X=0}", "Y_{X=0}"}
    assert cg.node("S").shared and cg.node("T").shared
    reduced, report = reduce(cg, example_dist)
    assert report.removed_exogenous == {"U5", "U6"}
    assert {n.name for n in report.separator} == {"S"}
    assert {n.name for n in report.removed_endogenous} == {"T"}
    assert set(reduced.exogenous) == {"U1", "U2"}
    assert reduced.degree == 2


def test_pns_reduction_matches_twin_shape(mediator_graph, example_dist):
    reduced, report = reduce(build_pns_graph(mediator_graph, "X", "Y"), example_dist)
    assert report.removed_exogenous == {"U5", "U6"}
    assert names(reduced) == {"S", "X_{X=1}", "Z_{X=1}", "Y_{X=1}", "X_{X=0}", "Z_{X=0}", "Y_{X=0}"}


def test_confounded_twin_is_irreducible(confounded, example_dist):
    cg = build_pn_ps_graph(confounded, "X", 0, "Y")
    reduced, report = reduce(cg, example_dist.marginal(("X", "Y", "Z")))
    assert report.empty
    assert set(reduced.exogenous) == {"U1", "U2"}


def _check_invariants(g, cg):
    anchors = set(cg.anchors)
    for n in cg.nodes:
        assert n in anchors or n in cg.ancestors(anchors)
    x = cg.cause
    for n in cg.nodes:
        if n.shared:
            assert n.base not in g.descendants([x], include_self=True)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_random_graph_invariants(seed):
    rng = np.random.default_rng(seed)
    scm = random_scm(rng)
    g = scm.graph
    dist = exact_joint(scm)
    for x, y in cause_effect_pairs(g)[:3]:
        for cg in (build_pn_ps_graph(g, x, 0, y), build_pns_graph(g, x, y), build_interventional_graph(g, x, 1, y)):
            _check_invariants(g, cg)
            reduced, _ = reduce(cg, dist)
            kept = set(reduced.nodes)
            assert set(cg.anchors) <= kept
            assert set(cg.intervened) <= kept
            assert len(reduced.exogenous) <= len(cg.exogenous)
