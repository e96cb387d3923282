import io

import numpy as np
import pytest

from pcrca.distribution import Dataset, JointTable
from pcrca.errors import FileFormatError
from pcrca.io import (
    distribution_from_dict,
    dump_distribution,
    dump_graph,
    format_record,
    graph_from_dict,
    parse_dataset,
    parse_yaml,
    read_records,
    write_dataset,
    write_records,
)


def test_graph_roundtrip(mediator_graph):
    g = graph_from_dict(parse_yaml(dump_graph(mediator_graph)))
    assert g.nodes == mediator_graph.nodes
    assert set(g.edges) == set(mediator_graph.edges)


def test_edge_forms():
    doc = parse_yaml("nodes: [A, B, C, {name: U, kind: exogenous}]\nedges: ['A -> B', [B, C], {from: U, to: A}]\n")
    g = graph_from_dict(doc)
    assert set(g.edges) == {("A", "B"), ("B", "C"), ("U", "A")}
    assert g.exogenous == ("U",)


def test_bad_edge_location():
    text = "nodes: [A, B]\nedges:\n  - [A, B]\n  - 42\n"
    with pytest.raises(FileFormatError) as e:
        graph_from_dict(parse_yaml(text, "g.yaml"), "g.yaml")
    assert e.value.line == 4
    assert "g.yaml:4" in str(e.value)


def test_unknown_node_location():
    text = "nodes: [A]\nedges:\n  - [A, B]\n"
    with pytest.raises(FileFormatError) as e:
        graph_from_dict(parse_yaml(text))
    assert e.value.line == 3


def test_yaml_syntax_error():
    with pytest.raises(FileFormatError) as e:
        parse_yaml("nodes: [A\nedges: []\n")
    assert e.value.line is not None


def test_distribution_roundtrip():
    t = JointTable(("A", "B"), np.array([0.1, 0.2, 0.3, 0.4]))
    back = distribution_from_dict(parse_yaml(dump_distribution(t)))
    assert back.variables == t.variables
    assert np.array_equal(back.probabilities, t.probabilities)


def test_unquoted_assignment_keys_rejected():
    text = "variables: [A, B]\nprobabilities:\n  - [01, 0.5]\n  - ['10', 0.5]\n"
    with pytest.raises(FileFormatError) as e:
        distribution_from_dict(parse_yaml(text))
    assert e.value.line == 3


def test_bad_distribution_sum():
    with pytest.raises(FileFormatError):
        distribution_from_dict(parse_yaml("variables: [A]\nprobabilities: [0.2, 0.2]\n"))


def test_dataset_roundtrip():
    d = Dataset(("A", "B"), np.array([[0, 1], [1, 1]]))
    buf = io.StringIO()
    write_dataset(d, buf)
    back = parse_dataset(buf.getvalue())
    assert back.columns == d.columns and np.array_equal(back.rows, d.rows)


def test_dataset_bad_cell():
    with pytest.raises(FileFormatError) as e:
        parse_dataset("A,B\n0,1\n1,2\n")
    assert (e.value.line, e.value.column) == (3, 2)


def test_records_roundtrip():
    recs = [{"b": 1.5, "a": [1, 2], "n": float("nan")}, {"x": np.float64(0.25), "k": np.int64(3)}]
    buf = io.StringIO()
    write_records(recs, buf)
    back = list(read_records(io.StringIO(buf.getvalue())))
    assert back == [{"a": [1, 2], "b": 1.5, "n": None}, {"k": 3, "x": 0.25}]
    assert format_record({"b": 1, "a": 2}) == '{"a":2,"b":1}'


def test_bad_record_line():
    with pytest.raises(FileFormatError):
        list(read_records(io.StringIO('{"a": 1}\nnot json\n')))
