"""The routed graph of the voting process.

Nodes are ``P`` (global past), one node per party, ``X`` (the counting
station) and ``F`` (global future).  Arrows carry index variables; each value
of an arrow's indices labels a sector, and every reachable sector gets a
linear dimension.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .vote_model import AllowedTable, GlobalAssignment, ModelParams, PartyStatus, allowed_table

__all__ = [
    "DimensionChoice",
    "Arrow",
    "RoutedGraph",
    "party_node",
    "build_gamma",
    "arrow_sector_of",
]

_STATUS_SECTORS = tuple(s.bits for s in PartyStatus)


def party_node(q: int) -> str:
    """Node id of party ``q`` (0-indexed in, 1-indexed name out)."""
    return f"A{q + 1}"


@dataclass(frozen=True)
class DimensionChoice:
    """Sector dimensions for every arrow kind.

    The defaults are the smallest choice that still lets the sender reach the
    receiver: everything one-dimensional except the president sector on the
    party-to-future arrows and the unsectorised past-to-party arrows.
    """

    past_to_party: int = 4
    party_to_future: Mapping[tuple[int, int], int] = field(
        default_factory=lambda: {(0, 0): 1, (1, 0): 1, (0, 1): 4}
    )
    party_to_station: int = 1
    station_to_party: int = 1
    station_to_future: int = 1

    def __post_init__(self):
        for name in ("past_to_party", "party_to_station", "station_to_party", "station_to_future"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        dims = dict(self.party_to_future)
        missing = [s for s in _STATUS_SECTORS if s not in dims]
        if missing:
            raise ValueError(f"party_to_future has no dimension for reachable sectors {missing}")
        if any(not isinstance(d, int) or d < 1 for d in dims.values()):
            raise ValueError("party_to_future dimensions must be positive integers")
        object.__setattr__(self, "party_to_future", MappingProxyType(dims))

    @property
    def is_default(self) -> bool:
        return self == DimensionChoice()

    def __eq__(self, other):
        if not isinstance(other, DimensionChoice):
            return NotImplemented
        return (
            self.past_to_party == other.past_to_party
            and dict(self.party_to_future) == dict(other.party_to_future)
            and self.party_to_station == other.party_to_station
            and self.station_to_party == other.station_to_party
            and self.station_to_future == other.station_to_future
        )

    def __hash__(self):
        return hash((
            self.past_to_party,
            tuple(sorted(self.party_to_future.items())),
            self.party_to_station,
            self.station_to_party,
            self.station_to_future,
        ))


@dataclass(frozen=True)
class Arrow:
    """One arrow of the routed graph.

    ``sector_dims`` maps each reachable value of ``indices`` (a tuple of bits,
    in ``indices`` order) to its dimension.  Arrows without indices have the
    single sector ``()``.
    """

    source: str
    target: str
    indices: tuple[tuple, ...]
    sector_dims: Mapping[tuple[int, ...], int] = field(repr=False)

    @property
    def key(self) -> tuple[str, str]:
        return self.source, self.target

    def dim(self, sector: tuple[int, ...]) -> int:
        return self.sector_dims[sector]

    def total_dim(self, sectors=None) -> int:
        sectors = self.sector_dims if sectors is None else sectors
        return sum(self.sector_dims[s] for s in sectors)

    def to_json(self, list_sectors: bool = True) -> dict:
        doc = {
            "source": self.source,
            "target": self.target,
            "indices": [_index_name(i) for i in self.indices],
            "sector_count": len(self.sector_dims),
        }
        if list_sectors:
            doc["sectors"] = [
                {"value": list(s), "dim": d} for s, d in sorted(self.sector_dims.items())
            ]
        else:
            doc["dims"] = sorted(set(self.sector_dims.values()))
        return doc


def _index_name(index: tuple) -> str:
    name, *where = index
    if len(where) == 2:
        return f"{name}[{where[0] + 1}->{where[1] + 1}]"
    return f"{name}[{where[0] + 1}]"


def party_vote_indices(p: ModelParams, q: int) -> tuple[tuple, ...]:
    """The ``v^q`` indices: chancellor votes then president votes of ``q``."""
    return tuple(("v_ch", q, k) for k in p.others(q)) + tuple(("v_pr", q, k) for k in p.others(q))


def status_indices(q: int) -> tuple[tuple, ...]:
    return ("l_ch", q), ("l_pr", q)


def all_indices(p: ModelParams) -> tuple[tuple, ...]:
    votes = tuple(i for q in range(p.n) for i in party_vote_indices(p, q))
    return votes + tuple(i for q in range(p.n) for i in status_indices(q))


def arrow_sector_of(a: GlobalAssignment, arrow: Arrow) -> tuple[int, ...]:
    """Project ``a`` onto the indices carried by ``arrow``."""
    return tuple(a.value(i) for i in arrow.indices)


@dataclass(frozen=True)
class RoutedGraph:
    params: ModelParams
    dims: DimensionChoice
    nodes: tuple[str, ...]
    arrows: tuple[Arrow, ...]

    def arrow(self, source: str, target: str) -> Arrow:
        for arrow in self.arrows:
            if arrow.key == (source, target):
                return arrow
        raise KeyError((source, target))

    def arrows_into(self, node: str) -> tuple[Arrow, ...]:
        return tuple(a for a in self.arrows if a.target == node)

    def arrows_from(self, node: str) -> tuple[Arrow, ...]:
        return tuple(a for a in self.arrows if a.source == node)

    def to_json(self) -> dict:
        p = self.params
        return {
            "n": p.n,
            "threshold": p.threshold,
            "mutation": p.mutation,
            "nodes": list(self.nodes),
            "arrows": [
                a.to_json(list_sectors=a.target != "F" or a.source != "X") for a in self.arrows
            ],
        }


def build_gamma(p: ModelParams = ModelParams(), dims: DimensionChoice | None = None) -> RoutedGraph:
    """Build the routed graph for ``p.n`` parties with sector dimensions ``dims``.

    Reachable sectors are read off the allowed assignments, so the X-incident
    arrows only declare sectors some allowed assignment actually uses.
    """
    dims = DimensionChoice() if dims is None else dims
    table = allowed_table(p)

    def reachable(indices, dim) -> dict:
        # pack each row into an integer; sorting void rows is much slower
        weights = 1 << np.arange(len(indices), dtype=np.int64)
        codes = np.unique(table.project(indices).astype(np.int64) @ weights)
        return {tuple(int(c >> j) & 1 for j in range(len(indices))): dim for c in codes}

    nodes = ("P",) + tuple(party_node(q) for q in range(p.n)) + ("X", "F")
    arrows = []
    for q in range(p.n):
        arrows.append(Arrow("P", party_node(q), (), {(): dims.past_to_party}))
    for q in range(p.n):
        indices = party_vote_indices(p, q) + (("l_pr", q),)
        arrows.append(Arrow(party_node(q), "X", indices, reachable(indices, dims.party_to_station)))
    for q in range(p.n):
        indices = status_indices(q)
        arrows.append(Arrow("X", party_node(q), indices, reachable(indices, dims.station_to_party)))
    for q in range(p.n):
        indices = status_indices(q)
        sectors = {s: dims.party_to_future[s] for s in reachable(indices, 1)}
        arrows.append(Arrow(party_node(q), "F", indices, sectors))
    arrows.append(Arrow("X", "F", all_indices(p), _AllowedSectors(table, dims.station_to_future)))
    return RoutedGraph(p, dims, nodes, tuple(arrows))


class _AllowedSectors(Mapping):
    """Sector dims of the station-to-future arrow: one sector per allowed assignment.

    Materialised lazily; the table can hold hundreds of thousands of rows.
    """

    def __init__(self, table: AllowedTable, dim: int):
        self._table = table
        self._dim = dim
        self._keys = None

    def _materialise(self) -> dict:
        if self._keys is None:
            rows = self._table.project(all_indices(self._table.params))
            self._keys = {tuple(int(b) for b in row): i for i, row in enumerate(rows)}
        return self._keys

    def row_of(self, sector: tuple[int, ...]) -> int:
        return self._materialise()[sector]

    def __getitem__(self, sector):
        self._materialise()[sector]
        return self._dim

    def __iter__(self):
        return iter(self._materialise())

    def values(self):
        return [self._dim] * len(self)

    def __len__(self):
        return len(self._table)
