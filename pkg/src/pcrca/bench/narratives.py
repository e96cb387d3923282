"""Failure narratives: conditional probability tables compiled into full SCMs.

A node ``V`` with table ``p(cfg) = P(V=1 | parents)`` becomes the mechanism
``V = [eps_V < p(cfg)]`` with ``eps_V`` uniform on [0, 1). Only the interval
of ``eps_V`` between consecutive distinct table values matters, so the noise
is a finite variable. Children of a latent exogenous node share its binary
value and keep their own noise terms; the product is the node's state space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from typing import Mapping

import numpy as np

from ..graph import CausalGraph
from .models import model as model_graph
from .scm import FullScm


@dataclass(frozen=True)
class NodeCpt:
    """``P(V=1 | cfg)`` over endogenous parents then, if present, the latent parent."""

    variable: str
    parents: tuple[str, ...]
    table: Mapping[str, float]

    def prob(self, bits: tuple[int, ...]) -> float:
        return float(self.table["".join(map(str, bits))])


@dataclass(frozen=True, eq=False)
class Narrative:
    id: str
    model: str
    ground_truth: str
    latent_truth: bool
    description: str
    graph: CausalGraph
    latent_priors: Mapping[str, float]
    cpts: Mapping[str, NodeCpt]
    target: str

    @cached_property
    def scm(self) -> FullScm:
        return compile_narrative(self)

    @property
    def key(self) -> str:
        return f"{self.model}/{self.id}"


def _intervals(values) -> np.ndarray:
    cuts = sorted(set([0.0, 1.0] + [float(v) for v in values]))
    return np.array(cuts)


def compile_narrative(n: Narrative) -> FullScm:
    g = n.graph
    full = g.with_explicit_noise()
    priors: dict[str, np.ndarray] = {}
    mechs: dict[str, np.ndarray] = {}
    for u in full.exogenous:
        children = [v for v in full.endogenous if full.exogenous_parent(v) == u]
        latent = u in g.exogenous
        h_states = (0, 1) if latent else (0,)
        h_prior = (1.0 - n.latent_priors[u], n.latent_priors[u]) if latent else (1.0,)
        cuts = {v: _intervals(n.cpts[v].table.values()) for v in children}
        widths = {v: np.diff(cuts[v]) for v in children}
        states = list(itertools.product(h_states, *[range(len(widths[v])) for v in children]))
        prior = np.array(
            [h_prior[s[0]] * np.prod([widths[v][k] for v, k in zip(children, s[1:])]) for s in states]
        )
        keep = prior > 0
        states = [s for s, k in zip(states, keep) if k]
        priors[u] = prior[keep] / prior[keep].sum()
        for ci, v in enumerate(children):
            cpt = n.cpts[v]
            endo = full.endogenous_parents(v)
            table = np.zeros((len(states), 1 << len(endo)), dtype=np.uint8)
            for si, s in enumerate(states):
                # eps_V lies in [cuts[k], cuts[k+1]); V = 1 iff the whole interval is below p
                upper = cuts[v][s[1 + ci] + 1]
                for cfg in range(1 << len(endo)):
                    bits = tuple((cfg >> (len(endo) - 1 - i)) & 1 for i in range(len(endo)))
                    if latent:
                        bits = bits + (s[0],)
                    table[si, cfg] = 1 if upper <= cpt.prob(bits) + 1e-15 else 0
            mechs[v] = table
    return FullScm(full, priors, mechs)


def narrative_from_dict(doc: Mapping, graph: CausalGraph | None = None) -> Narrative:
    from ..io import graph_from_dict

    g = graph if graph is not None else graph_from_dict(doc["graph"])
    mech = doc["mechanisms"]
    latent = {}
    cpts = {}
    for name, spec in mech.items():
        if name in g.exogenous:
            latent[name] = float(spec["prior"])
            continue
        parents = tuple(spec.get("parents", ()))
        expected = g.endogenous_parents(name) + tuple(g.exogenous_parents(name))
        if parents != expected:
            raise ValueError(f"{name}: parents {parents} do not match graph parents {expected}")
        p = spec["p"]
        if not isinstance(p, Mapping):
            p = {"": p}
        table = {str(k): float(v) for k, v in p.items()}
        for bits in itertools.product("01", repeat=len(parents)):
            key = "".join(bits)
            if key not in table:
                raise ValueError(f"{name}: missing probability for parent configuration {key!r}")
            if not 0.0 <= table[key] <= 1.0:
                raise ValueError(f"{name}: probability for {key!r} outside [0, 1]")
        cpts[name] = NodeCpt(name, parents, table)
    for v in g.endogenous:
        if v not in cpts:
            raise ValueError(f"no mechanism for {v!r}")
    for u in g.exogenous:
        if u not in latent:
            raise ValueError(f"no prior for latent {u!r}")
    return Narrative(
        id=str(doc["narrative"]),
        model=str(doc["model"]),
        ground_truth=str(doc["ground_truth"]),
        latent_truth=bool(doc.get("latent_truth", False)),
        description=str(doc.get("description", "")).strip(),
        graph=g,
        latent_priors=latent,
        cpts=cpts,
        target=str(doc["target"]),
    )


def load_narrative(path) -> Narrative:
    from ..io import load_yaml

    return narrative_from_dict(load_yaml(path))


def bundled_narratives() -> list[Narrative]:
    root = resources.files("pcrca.bench") / "fixtures"
    out = []
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".yaml"):
            out.append(load_narrative(entry))
    out.sort(key=lambda n: (n.model, n.id))
    return out


def bundled(model_id: str, narrative_id: str) -> Narrative:
    for n in bundled_narratives():
        if n.model == model_id and n.id == narrative_id:
            return n
    raise KeyError(f"no bundled narrative {model_id}/{narrative_id}")


def check_graph(n: Narrative) -> bool:
    """True when the fixture's graph matches the model definition."""
    ref = model_graph(n.model)
    return set(ref.nodes) == set(n.graph.nodes) and set(ref.edges) == set(n.graph.edges)
