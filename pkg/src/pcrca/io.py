"""File formats: YAML graphs and distributions, CSV datasets, JSON-lines records.

Parse errors carry the line and column of the offending YAML node.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

import numpy as np
import yaml

from .distribution import Dataset, JointTable
from .errors import DistributionError, FileFormatError
from .graph import ENDOGENOUS, EXOGENOUS, CausalGraph


class _LDict(dict):
    mark = None
    marks: dict


class _LList(list):
    mark = None
    marks: list


_scalar_ctor = yaml.constructor.SafeConstructor()


def _convert(node: yaml.Node):
    if isinstance(node, yaml.MappingNode):
        out = _LDict()
        out.mark = node.start_mark
        out.marks = {}
        for k, v in node.value:
            key = _convert(k)
            if isinstance(key, (list, dict)):
                raise FileFormatError("mapping keys must be scalars", k.start_mark.line + 1, k.start_mark.column + 1)
            out[key] = _convert(v)
            out.marks[key] = v.start_mark
        return out
    if isinstance(node, yaml.SequenceNode):
        out = _LList(_convert(v) for v in node.value)
        out.mark = node.start_mark
        out.marks = [v.start_mark for v in node.value]
        return out
    return _scalar_ctor.construct_object(node)


def parse_yaml(text: str, source: str | None = None) -> Any:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as e:
        m = e.problem_mark
        raise FileFormatError(e.problem or str(e), m.line + 1 if m else None, m.column + 1 if m else None, source)
    if node is None:
        raise FileFormatError("empty document", 1, 1, source)
    try:
        return _convert(node)
    except FileFormatError as e:
        raise FileFormatError(e.message, e.line, e.column, source) from None


def load_yaml(path) -> Any:
    path = Path(path) if not hasattr(path, "read_text") else path
    return parse_yaml(path.read_text(), str(getattr(path, "name", path)))


def _where(container, key=None):
    mark = None
    if key is not None and hasattr(container, "marks"):
        try:
            mark = container.marks[key]
        except (KeyError, IndexError, TypeError):
            mark = None
    if mark is None:
        mark = getattr(container, "mark", None)
    if mark is None:
        return None, None
    return mark.line + 1, mark.column + 1


def _fail(msg, container, key=None, source=None):
    line, col = _where(container, key)
    raise FileFormatError(msg, line, col, source)


# -- graphs -------------------------------------------------------------------------


def graph_from_dict(doc: Mapping, source: str | None = None) -> CausalGraph:
    if not isinstance(doc, dict):
        _fail("graph document must be a mapping", doc, source=source)
    for key in ("nodes", "edges"):
        if key not in doc:
            _fail(f"missing field {key!r}", doc, source=source)
    nodes = []
    raw_nodes = doc["nodes"]
    if not isinstance(raw_nodes, list):
        _fail("'nodes' must be a list", doc, "nodes", source)
    for i, item in enumerate(raw_nodes):
        if isinstance(item, dict):
            if "name" not in item:
                _fail("node entry needs a 'name'", raw_nodes, i, source)
            name, kind = item["name"], item.get("kind", ENDOGENOUS)
        elif isinstance(item, list) and len(item) == 2:
            name, kind = item
        elif isinstance(item, str):
            name, kind = item, ENDOGENOUS
        else:
            _fail("node must be a name, a [name, kind] pair or a mapping", raw_nodes, i, source)
        if kind not in (ENDOGENOUS, EXOGENOUS):
            _fail(f"unknown node kind {kind!r}", raw_nodes, i, source)
        nodes.append((str(name), kind))
    edges = []
    raw_edges = doc["edges"]
    if not isinstance(raw_edges, list):
        _fail("'edges' must be a list", doc, "edges", source)
    for i, item in enumerate(raw_edges):
        if isinstance(item, dict) and "from" in item and "to" in item:
            a, b = item["from"], item["to"]
        elif isinstance(item, list) and len(item) == 2:
            a, b = item
        elif isinstance(item, str) and "->" in item:
            a, b = (s.strip() for s in item.split("->", 1))
        else:
            _fail("edge must be [from, to], {from:, to:} or 'A -> B'", raw_edges, i, source)
        edges.append((str(a), str(b)))
    order = doc.get("order")
    if order is not None and not isinstance(order, list):
        _fail("'order' must be a list", doc, "order", source)
    names = {n for n, _ in nodes}
    for i, (a, b) in enumerate(edges):
        for n in (a, b):
            if n not in names:
                _fail(f"edge refers to unknown node {n!r}", raw_edges, i, source)
    return CausalGraph(tuple(nodes), tuple(edges), tuple(map(str, order)) if order else None)


def read_graph(path) -> CausalGraph:
    path = Path(path)
    return graph_from_dict(load_yaml(path), str(path))


def graph_to_dict(g: CausalGraph) -> dict:
    out = {
        "nodes": [{"name": n, "kind": k} for n, k in g.nodes],
        "edges": [[a, b] for a, b in g.edges],
    }
    if g.order is not None:
        out["order"] = list(g.order)
    return out


def dump_graph(g: CausalGraph) -> str:
    return yaml.safe_dump(graph_to_dict(g), sort_keys=False, default_flow_style=None)


# -- distributions ---------------------------------------------------------------------


def distribution_from_dict(doc, default_variables=None, source: str | None = None) -> JointTable:
    if not isinstance(doc, dict):
        _fail("distribution document must be a mapping", doc, source=source)
    variables = doc.get("variables", default_variables)
    if variables is None:
        _fail("missing field 'variables'", doc, source=source)
    variables = tuple(str(v) for v in variables)
    raw = doc.get("probabilities")
    if raw is None:
        _fail("missing field 'probabilities'", doc, source=source)
    try:
        if isinstance(raw, dict):
            for k in raw:
                if not isinstance(k, str):
                    _fail("assignment keys must be quoted strings such as '0101'", raw, k, source)
            return JointTable.from_mapping(variables, dict(raw))
        if isinstance(raw, list) and raw and all(isinstance(r, list) for r in raw):
            mapping = {}
            for i, pair in enumerate(raw):
                if len(pair) != 2:
                    _fail("entries must be [assignment, probability]", raw, i, source)
                if not isinstance(pair[0], str):
                    _fail("assignments must be quoted strings such as '0101'", raw, i, source)
                key = pair[0]
                if key in mapping:
                    _fail(f"assignment {key!r} listed twice", raw, i, source)
                mapping[key] = float(pair[1])
            return JointTable.from_mapping(variables, mapping)
        if isinstance(raw, list):
            return JointTable(variables, np.array([float(v) for v in raw]))
    except DistributionError as e:
        line, col = _where(doc, "probabilities")
        raise FileFormatError(str(e), line, col, source) from None
    _fail("'probabilities' must be a list or a mapping", doc, "probabilities", source)


def read_distribution(path, default_variables=None) -> JointTable:
    path = Path(path)
    return distribution_from_dict(load_yaml(path), default_variables, str(path))


def dump_distribution(t: JointTable) -> str:
    lines = [f"variables: [{', '.join(t.variables)}]", "probabilities:"]
    for key, p in t.items():
        lines.append(f'  - ["{key}", {p!r}]')
    return "\n".join(lines) + "\n"


# -- datasets ----------------------------------------------------------------------------


def parse_dataset(text: str, source: str | None = None) -> Dataset:
    reader = csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FileFormatError("empty dataset file", 1, 1, source) from None
    header = [h.strip() for h in header]
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise FileFormatError(f"expected {len(header)} cells, found {len(row)}", lineno, 1, source)
        vals = []
        for col, cell in enumerate(row, start=1):
            cell = cell.strip()
            if cell not in ("0", "1"):
                raise FileFormatError(f"cell {cell!r} is not 0 or 1", lineno, col, source)
            vals.append(int(cell))
        rows.append(vals)
    arr = np.array(rows, dtype=np.uint8).reshape(len(rows), len(header))
    return Dataset(tuple(header), arr)


def read_dataset(path) -> Dataset:
    path = Path(path)
    return parse_dataset(path.read_text(), str(path))


def write_dataset(d: Dataset, stream) -> None:
    stream.write(",".join(d.columns) + "\n")
    for row in d.rows:
        stream.write(",".join(str(int(v)) for v in row) + "\n")


# -- records ---------------------------------------------------------------------------


def _jsonable(value):
    if isinstance(value, float):
        if math.isnan(value):
            return None
        return value
    if isinstance(value, (np.floating,)):
        return _jsonable(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


def format_record(record: Mapping) -> str:
    return json.dumps(_jsonable(dict(record)), sort_keys=True, separators=(",", ":"))


def write_records(records: Iterable[Mapping], stream) -> None:
    for r in records:
        stream.write(format_record(r) + "\n")


def read_records(stream) -> Iterator[dict]:
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError as e:
            raise FileFormatError(e.msg, lineno, e.colno) from None
