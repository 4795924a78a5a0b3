"""Branched routes of every node, in augmented form.

An augmented route is a partial function: it takes a node's input sector
values together with its bifurcation choices and returns the output sector
values together with flags telling which branch occurred.  Applications
outside the domain return :data:`UNDEFINED` instead of raising, because the
choice relation has to quantify over them.
"""
from __future__ import annotations

from typing import Iterable, Iterator, NamedTuple, Sequence

from .vote_model import AllowedTable, GlobalAssignment, ModelParams, PartyStatus, allowed_table

__all__ = [
    "UNDEFINED",
    "AllowedAssignments",
    "BifurcationChoice",
    "BranchStatus",
    "PartyRouteOutput",
    "PartyRoute",
    "StationOutput",
    "StationRoute",
    "PastRoute",
    "FutureRoute",
    "party_aug_route",
    "station_aug_route",
    "terminal_routes",
]


class _Undefined:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEFINED"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (_Undefined, ())


#: Result of applying a route outside its domain.
UNDEFINED = _Undefined()


class BifurcationChoice(NamedTuple):
    """Chancellor-vote target if the party lost, president-vote target if chancellor."""

    lost: int
    ch: int

    def is_valid_for(self, q: int, n: int) -> bool:
        return all(0 <= k < n and k != q for k in self)


class BranchStatus(NamedTuple):
    lost: int
    ch: int
    pr: int

    @classmethod
    def of(cls, status: PartyStatus) -> "BranchStatus":
        return cls(*(int(status == s) for s in PartyStatus))

    @property
    def status(self) -> PartyStatus:
        if sum(self) != 1:
            raise ValueError(f"{self} does not flag exactly one branch")
        return PartyStatus(self.index(1))


class PartyRouteOutput(NamedTuple):
    l: tuple[int, int]
    v_ch: tuple[int, ...]
    v_pr: tuple[int, ...]
    j: BranchStatus


def _delta(n: int, k: int | None) -> tuple[int, ...]:
    return tuple(int(m == k) for m in range(n))


class PartyRoute:
    """Augmented route of party ``q``: three branches, two of them bifurcating.

    A loser emits one chancellor vote at ``i.lost``, a chancellor emits one
    president vote at ``i.ch``, a president emits no vote.  The status is
    echoed unchanged; ``(1, 1)`` is outside the domain.
    """

    def __init__(self, q: int, p: ModelParams):
        if not 0 <= q < p.n:
            raise ValueError(f"party {q} out of range for n={p.n}")
        self.q = q
        self.params = p
        self.node = f"A{q + 1}"

    def __repr__(self):
        return f"PartyRoute(q={self.q}, n={self.params.n})"

    def apply(self, l: tuple[int, int], i: BifurcationChoice) -> PartyRouteOutput | _Undefined:
        n = self.params.n
        i = BifurcationChoice(*i)
        if not i.is_valid_for(self.q, n):
            return UNDEFINED
        try:
            status = PartyStatus.from_bits(*l)
        except ValueError:
            return UNDEFINED
        zeros = _delta(n, None)
        if status is PartyStatus.LOST:
            v_ch, v_pr = _delta(n, i.lost), zeros
        elif status is PartyStatus.CHANCELLOR:
            v_ch, v_pr = zeros, _delta(n, i.ch)
        else:
            v_ch, v_pr = zeros, zeros
        return PartyRouteOutput(status.bits, v_ch, v_pr, BranchStatus.of(status))

    def choices(self) -> Iterator[BifurcationChoice]:
        others = self.params.others(self.q)
        for lost in others:
            for ch in others:
                yield BifurcationChoice(lost, ch)

    def domain(self) -> Iterator[tuple[tuple[int, int], BifurcationChoice]]:
        for status in PartyStatus:
            for i in self.choices():
                yield status.bits, i

    def bifurcation_sizes(self) -> dict[PartyStatus, int]:
        """Number of distinct non-augmented outputs reachable from each branch."""
        sizes = {}
        for status in PartyStatus:
            outs = {self.apply(status.bits, i)[:3] for i in self.choices()}
            sizes[status] = len(outs)
        return sizes

    def max_reverse_fanout(self) -> int:
        """Largest number of inputs sharing one (non-augmented) output."""
        preimages: dict = {}
        for l, i in self.domain():
            preimages.setdefault(self.apply(l, i)[:3], set()).add(l)
        return max(len(v) for v in preimages.values())


def party_aug_route(q: int, p: ModelParams = ModelParams()) -> PartyRoute:
    return PartyRoute(q, p)


class StationOutput(NamedTuple):
    assignment: GlobalAssignment
    row: int
    size: int

    @property
    def z(self) -> tuple[int, ...]:
        """One-hot occurrence vector over the allowed assignments."""
        return tuple(int(k == self.row) for k in range(self.size))


class AllowedAssignments(Sequence):
    """Read-only sequence of allowed assignments, in row order.

    Wraps either an :class:`AllowedTable` (rows are built on demand) or an
    explicit collection.
    """

    def __init__(self, allowed: AllowedTable | Iterable[GlobalAssignment]):
        if isinstance(allowed, AllowedTable):
            self._table = allowed
            self._items = None
            self._rows = None
        else:
            self._table = None
            self._items = tuple(allowed)
            self._rows = {a: row for row, a in enumerate(self._items)}

    def __len__(self) -> int:
        return len(self._table) if self._table is not None else len(self._items)

    def __getitem__(self, row):
        if self._table is None:
            return self._items[row]
        if isinstance(row, slice):
            return [self[r] for r in range(*row.indices(len(self)))]
        if not -len(self) <= row < len(self):
            raise IndexError(row)
        return self._table.assignment(row % len(self))

    def row_of(self, a: GlobalAssignment) -> int | None:
        if self._table is not None:
            return self._table.row_of(a)
        return self._rows.get(a)

    def __contains__(self, a) -> bool:
        return isinstance(a, GlobalAssignment) and self.row_of(a) is not None


class StationRoute:
    """Augmented route of the counting station: identity on allowed assignments.

    There are no bifurcations; the extra output records which allowed
    assignment occurred, as row ``row`` of ``allowed``.
    """

    node = "X"

    def __init__(self, allowed: AllowedTable | Iterable[GlobalAssignment]):
        self.allowed = AllowedAssignments(allowed)
        if not len(self.allowed):
            raise ValueError("station route needs at least one allowed assignment")

    def apply(self, a: GlobalAssignment) -> StationOutput | _Undefined:
        row = self.allowed.row_of(a)
        if row is None:
            return UNDEFINED
        return StationOutput(a, row, len(self.allowed))

    def domain(self) -> AllowedAssignments:
        return self.allowed

    def max_reverse_fanout(self) -> int:
        return 1


def station_aug_route(allowed: AllowedTable | Iterable[GlobalAssignment]) -> StationRoute:
    return StationRoute(allowed)


class PastRoute:
    """The global past has no indices: its route is the trivial function."""

    node = "P"

    def apply(self, inputs: tuple = ()) -> tuple | _Undefined:
        return () if inputs == () else UNDEFINED

    def max_reverse_fanout(self) -> int:
        return 1


class FutureRoute:
    """The global future accepts any consistent allowed input; one branch, no outputs.

    Its input is the X-to-F assignment plus the status pair on every
    party-to-F arrow.  Read backwards, the single branch bifurcates over all
    allowed assignments.
    """

    node = "F"

    def __init__(self, allowed: AllowedTable | Iterable[GlobalAssignment]):
        self.allowed = AllowedAssignments(allowed)

    def apply(self, assignment: GlobalAssignment, party_statuses=None) -> tuple | _Undefined:
        if assignment not in self.allowed:
            return UNDEFINED
        if party_statuses is not None:
            if tuple(party_statuses) != tuple(assignment.status_bits(q) for q in range(assignment.n)):
                return UNDEFINED
        return ()

    def reverse_choices(self) -> AllowedAssignments:
        """Bifurcation choices of the single branch in the reverse graph."""
        return self.allowed

    def max_reverse_fanout(self) -> int:
        return len(self.allowed)


def terminal_routes(p: ModelParams = ModelParams()) -> tuple[PastRoute, FutureRoute]:
    table = allowed_table(p)
    return PastRoute(), FutureRoute(table)
