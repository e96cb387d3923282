import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcrca.bench.scm import random_graph
from pcrca.canonical import MechanismTable, apply, canonical_space, decode, encode
from pcrca.errors import IndexOutOfRange, MissingParentValue
from pcrca.graph import CausalGraph, c_components, component_of


@pytest.fixture
def spaces(mediator_graph):
    g = mediator_graph
    return canonical_space(g, component_of(g, "X")), canonical_space(g, component_of(g, "Z"))


def test_cardinalities(spaces):
    u1, u2 = spaces
    assert u1.cardinality == 8
    assert u2.cardinality == 16


def test_parentless_singleton():
    g = CausalGraph.from_edges(["A"], ["U"], [("U", "A")])
    assert canonical_space(g, c_components(g)[0]).cardinality == 2


def test_z_mechanism_bits(spaces):
    _, u2 = spaces
    for k in range(16):
        bits = [(k >> (3 - i)) & 1 for i in range(4)]
        for i, (s, x) in enumerate(itertools.product((0, 1), repeat=2)):
            assert apply(u2, k, "Z", {"S": s, "X": x}) == bits[i]
    assert apply(u2, 5, "Z", {"S": 0, "X": 1}) == 1


def test_confounded_pair_table(spaces):
    u1, _ = spaces
    for j in range(8):
        x = decode(u1, j, "X").outputs
        assert x == ((1,) if j >= 4 else (0,))
        y = decode(u1, j, "Y").outputs
        assert y == [(0, 0), (0, 1), (1, 0), (1, 1)][j % 4]
    assert decode(u1, 1, "Y").outputs == (0, 1)
    assert decode(u1, 5, "X").outputs == (1,)
    assert apply(u1, 0, "Y", {"Z": 1}) == 0
    assert apply(u1, 3, "Y", {"Z": 0}) == 1


def test_out_of_range(spaces):
    u1, _ = spaces
    with pytest.raises(IndexOutOfRange):
        decode(u1, 8, "X")
    with pytest.raises(IndexOutOfRange):
        apply(u1, -1, "X", {})


def test_missing_parent(spaces):
    _, u2 = spaces
    with pytest.raises(MissingParentValue):
        apply(u2, 3, "Z", {"S": 1})
    with pytest.raises(MissingParentValue):
        MechanismTable("Z", ("S", "X"), (0, 1, 1, 0))({"X": 0})


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_encode_decode_roundtrip(seed):
    rng = np.random.default_rng(seed)
    ne = int(rng.integers(1, 6))
    g = random_graph(rng, ne, int(rng.integers(1, ne + 1)))
    for c in c_components(g):
        s = canonical_space(g, c)
        states = range(s.cardinality) if s.cardinality <= 256 else rng.integers(0, s.cardinality, 256)
        for u in states:
            tables = {v: decode(s, int(u), v) for v in c.members}
            assert encode(s, tables) == u


def test_uniform_weights_give_distribution(spaces):
    u1, _ = spaces
    joint = np.zeros(4)
    for j in range(u1.cardinality):
        x = apply(u1, j, "X", {})
        y = apply(u1, j, "Y", {"Z": 1})
        joint[2 * x + y] += 1 / u1.cardinality
    assert joint.sum() == pytest.approx(1.0)
    assert np.all((joint >= 0) & (joint <= 1))
