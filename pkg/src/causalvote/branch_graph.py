"""Branch graph of the voting graph and the weak-loops check.

Branches: ``P``; ``A<q>_lost``, ``A<q>_ch``, ``A<q>_pr`` for every party; one
``X[row]`` per allowed assignment; ``F``.  Arrows:

solid
    for a graph arrow ``N -> M``, from a branch of ``N`` to a branch of ``M``
    when some allowed assignment is compatible with both and the arrow,
    restricted to such assignments, spans more than one dimension;
green (dashed)
    from a bifurcating branch ``b`` to ``b2`` when changing only ``b``'s
    bifurcation choice, with ``b`` occurring both times, changes whether
    ``b2`` occurs;
red (dashed)
    from a branch to ``F`` when its occurrence depends on the reverse
    bifurcation choice at ``F``.

Weak loops hold when every cycle is made of green arrows only.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import networkx as nx
import numpy as np

from .routed_graph import RoutedGraph, build_gamma, party_node
from .validity import ChoiceRelation, VerdictReport, choice_relation
from .vote_model import PartyStatus

__all__ = [
    "ArrowKind",
    "Branch",
    "BranchGraph",
    "build_branch_graph",
    "layer",
    "check_weak_loops",
    "check_branch_lemmas",
]


class ArrowKind(enum.Enum):
    SOLID = "solid"
    GREEN = "green"
    RED = "red"


class Branch(NamedTuple):
    """A branch of one node; ``label`` is a status name, an X row, or ``""``."""

    node: str
    label: object = ""

    def __str__(self):
        if self.node == "X":
            return f"X[{self.label}]"
        return f"{self.node}_{self.label}" if self.label != "" else self.node

    @property
    def is_party(self) -> bool:
        return self.node.startswith("A")

    @property
    def status(self) -> PartyStatus:
        return PartyStatus(("lost", "ch", "pr").index(self.label))


P = Branch("P")
F = Branch("F")


def party_branch(q: int, status: PartyStatus) -> Branch:
    return Branch(party_node(q), status.short)


def layer(b: Branch) -> int:
    """Layer of a branch: past 0, losers and chancellors 1, station 2, presidents 3, future 4."""
    if b.node == "P":
        return 0
    if b.node == "F":
        return 4
    if b.node == "X":
        return 2
    return 3 if b.label == "pr" else 1


@dataclass(frozen=True)
class BranchGraph:
    nodes: tuple[Branch, ...]
    edges: frozenset[tuple[Branch, Branch, ArrowKind]]

    def edges_of(self, kind: ArrowKind) -> list[tuple[Branch, Branch]]:
        return sorted((u, v) for u, v, k in self.edges if k is kind)

    def with_edge(self, source: Branch, target: Branch, kind: ArrowKind) -> "BranchGraph":
        """Copy of the graph with one extra arrow."""
        return BranchGraph(self.nodes, self.edges | {(source, target, kind)})

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.nodes)
        for u, v, k in self.edges:
            g.add_edge(u, v, key=k)
        return g

    def summary(self) -> dict:
        return {
            "branches": len(self.nodes),
            "solid": len(self.edges_of(ArrowKind.SOLID)),
            "green": len(self.edges_of(ArrowKind.GREEN)),
            "red": len(self.edges_of(ArrowKind.RED)),
        }


def _solid_edges(graph: RoutedGraph, rel: ChoiceRelation) -> set:
    table = rel.table
    rows = np.arange(len(table))
    by_status = {
        party_branch(q, s): np.flatnonzero(table.statuses[:, q] == s)
        for q in range(graph.params.n)
        for s in PartyStatus
    }

    def rows_of(b: Branch) -> np.ndarray:
        if b.node in ("P", "F"):
            return rows
        if b.node == "X":
            return np.array([b.label])
        return by_status[b]

    def branches_of(node: str) -> list[Branch]:
        if node in ("P", "F"):
            return [Branch(node)]
        if node == "X":
            return [Branch("X", r) for r in range(len(table))]
        q = int(node[1:]) - 1
        return [party_branch(q, s) for s in PartyStatus]

    edges = set()
    for arrow in graph.arrows:
        values = table.project(arrow.indices)
        dims = np.array([arrow.dim(tuple(int(b) for b in row)) for row in values])
        weights = 1 << np.arange(len(arrow.indices), dtype=np.int64)
        codes = np.unique(values.astype(np.int64) @ weights, return_inverse=True)[1]
        for b in branches_of(arrow.source):
            for b2 in branches_of(arrow.target):
                if b.node == "X" or b2.node == "X":
                    # the station branch pins a single assignment
                    x_row = b.label if b.node == "X" else b2.label
                    other = b2 if b.node == "X" else b
                    compatible = other.node in ("P", "F") or x_row in rows_of(other)
                    if compatible and dims[x_row] > 1:
                        edges.add((b, b2, ArrowKind.SOLID))
                    continue
                both = np.intersect1d(rows_of(b), rows_of(b2), assume_unique=True)
                if not len(both):
                    continue
                _, first = np.unique(codes[both], return_index=True)
                if dims[both[first]].sum() > 1:
                    edges.add((b, b2, ArrowKind.SOLID))
    return edges


def _green_edges(rel: ChoiceRelation) -> set:
    n = rel.params.n
    if not rel.is_function:
        raise ValueError("green arrows are read off a functional choice relation")
    shape = rel.owner.shape
    owner = rel.owner
    statuses = rel.table.statuses[owner]  # shape + (n,)
    edges = set()
    for q in range(n):
        for status, axis in ((PartyStatus.LOST, 2 * q), (PartyStatus.CHANCELLOR, 2 * q + 1)):
            b = party_branch(q, status)

            def grouped(arr):
                return np.moveaxis(arr, axis, -1).reshape(-1, shape[axis])

            mask = grouped(statuses[..., q] == status)
            for k in range(n):
                st_k = grouped(statuses[..., k])
                for s2 in PartyStatus:
                    occ = st_k == s2
                    varies = np.any(mask & occ, axis=1) & np.any(mask & ~occ, axis=1)
                    if varies.any():
                        edges.add((b, party_branch(k, s2), ArrowKind.GREEN))
            own = grouped(owner)
            big = np.iinfo(own.dtype).max
            lo = np.where(mask, own, big).min(axis=1)
            hi = np.where(mask, own, -1).max(axis=1)
            varying = (hi >= 0) & (lo != hi)
            targets = np.unique(own[varying][mask[varying]])
            for r in targets:
                edges.add((b, Branch("X", int(r)), ArrowKind.GREEN))
    return edges


def _red_edges(rel: ChoiceRelation) -> set:
    table = rel.table
    edges = set()
    size = len(table)
    for q in range(rel.params.n):
        for s in PartyStatus:
            hits = int(np.count_nonzero(table.statuses[:, q] == s))
            if 0 < hits < size:
                edges.add((party_branch(q, s), F, ArrowKind.RED))
    if size > 1:
        for r in range(size):
            edges.add((Branch("X", r), F, ArrowKind.RED))
    return edges


def build_branch_graph(graph: RoutedGraph | None = None, rel: ChoiceRelation | None = None) -> BranchGraph:
    graph = build_gamma() if graph is None else graph
    rel = choice_relation(graph) if rel is None else rel
    n = graph.params.n
    nodes = (
        [P]
        + [party_branch(q, s) for q in range(n) for s in PartyStatus]
        + [Branch("X", r) for r in range(len(rel.table))]
        + [F]
    )
    edges = _solid_edges(graph, rel) | _green_edges(rel) | _red_edges(rel)
    return BranchGraph(tuple(nodes), frozenset(edges))


def _cycle_through(g: nx.DiGraph, u: Branch, v: Branch) -> list[str]:
    if u == v:
        return [str(u), str(u)]
    path = nx.shortest_path(g, v, u)
    return [str(u)] + [str(x) for x in path]


def check_weak_loops(bg: BranchGraph) -> VerdictReport:
    """Every cycle must consist of green arrows; layers must be respected."""
    g = bg.to_networkx()
    simple = nx.DiGraph(g)
    component = {}
    sccs = list(nx.strongly_connected_components(simple))
    for idx, comp in enumerate(sccs):
        for b in comp:
            component[b] = idx

    bad_cycles = []
    kinds_in_cycles: dict[str, int] = {}
    for u, v, k in sorted(bg.edges, key=lambda e: (str(e[0]), str(e[1]), e[2].value)):
        if component[u] != component[v] and u != v:
            continue
        kinds_in_cycles[k.value] = kinds_in_cycles.get(k.value, 0) + 1
        if k is not ArrowKind.GREEN and len(bad_cycles) < 5:
            sub = simple.subgraph(sccs[component[u]])
            bad_cycles.append({"arrow": [str(u), str(v), k.value], "cycle": _cycle_through(sub, u, v)})

    layer_violations = []
    for u, v, k in bg.edges:
        ok = layer(u) <= layer(v) if k is ArrowKind.GREEN else layer(u) < layer(v)
        if not ok:
            layer_violations.append([str(u), str(v), k.value])
    layer_violations.sort()

    cyclic = [c for c in sccs if len(c) > 1 or any(simple.has_edge(b, b) for b in c)]
    passed = not any(k != ArrowKind.GREEN.value for k in kinds_in_cycles) and not layer_violations
    return VerdictReport(
        "weak_loops",
        passed=passed,
        details={
            **bg.summary(),
            "cyclic_components": len(cyclic),
            "largest_cyclic_component": max((len(c) for c in cyclic), default=0),
            "arrows_on_cycles": dict(sorted(kinds_in_cycles.items())),
            "layer_violations": layer_violations[:10],
        },
        counterexamples=bad_cycles,
    )


def check_branch_lemmas(bg: BranchGraph) -> dict[str, bool]:
    """Direct checks of the three structural facts behind weak loops.

    * no solid arrow from a station branch to a loser or chancellor branch;
    * no solid arrow from a president branch to a station branch;
    * green arrows start only at loser/chancellor branches, red arrows end only at ``F``.
    """
    solid = bg.edges_of(ArrowKind.SOLID)
    green = bg.edges_of(ArrowKind.GREEN)
    red = bg.edges_of(ArrowKind.RED)
    return {
        "no_solid_station_to_lost_or_ch": not any(
            u.node == "X" and v.is_party and v.label in ("lost", "ch") for u, v in solid
        ),
        "no_solid_president_to_station": not any(
            u.is_party and u.label == "pr" and v.node == "X" for u, v in solid
        ),
        "green_from_lost_or_ch_only": all(u.is_party and u.label in ("lost", "ch") for u, _ in green),
        "red_into_future_only": all(v == F for _, v in red),
    }
