"""Classical execution of the voting process.

Every channel here is diagonal in the preferred basis, so a channel is just a
table from input labels to a distribution over output labels, with exact
:class:`~fractions.Fraction` weights.  Composing the node channels and
tracing out every arrow then amounts to summing over the labels carried on
the station-to-party arrows and keeping the terms where the station sends
back the statuses the parties started from.

Label layout (parties 0-indexed, vote vectors dense over all ``n`` parties):

``u``
    basis label on the past-to-party leg, ``0 <= u < dims.past_to_party``.
``l``
    status pair ``(l_ch, l_pr)`` on the station-to-party leg.
``x``
    party-to-station label ``(v_ch, v_pr, l_pr)``.
``f``
    party-to-future label ``(l_ch, l_pr, u)``.

A party channel maps ``(aux_in, u, l)`` to ``(aux_out, x, f)``.  For the
route-tracking channel ``aux_in`` is the bifurcation choice and ``aux_out``
the branch flags; for an instrument ``aux_in`` is ``()`` and ``aux_out`` the
outcome bit.
"""
from __future__ import annotations

import itertools
import weakref
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple, Sequence

from .routed_graph import DimensionChoice, RoutedGraph, build_gamma, party_node
from .routes import (
    UNDEFINED,
    BifurcationChoice,
    BranchStatus,
    FutureRoute,
    PartyRoute,
    PastRoute,
    StationRoute,
    terminal_routes,
)
from .vote_model import GlobalAssignment, ModelParams, PartyStatus, allowed_table

__all__ = [
    "NodeChannel",
    "InstrumentSettings",
    "Instrument",
    "FixedChannels",
    "ExecutionResult",
    "RouteViolation",
    "party_channel",
    "party_instrument",
    "instrument_choice",
    "fixed_channels",
    "route_violations",
    "check_route_following",
    "compose_superchannel",
    "compose_many",
    "execute_choices",
]

ONE = Fraction(1)


class RouteViolation(ValueError):
    """A channel has a transition its node's route does not allow."""

    def __init__(self, node: str, transition, reason: str):
        super().__init__(f"{node}: {reason}: {transition!r}")
        self.node = node
        self.transition = transition
        self.reason = reason


@dataclass(frozen=True)
class NodeChannel:
    """Diagonal channel of one node.

    ``table[label]`` is a tuple of ``(output_label, weight)`` pairs.  Labels
    absent from the table are outside the channel's domain.
    """

    node: str
    table: Mapping = field(repr=False)

    def apply(self, label) -> tuple:
        return self.table.get(label, ())

    def __len__(self) -> int:
        return len(self.table)

    @property
    def is_deterministic(self) -> bool:
        return all(len(outs) == 1 and outs[0][1] == 1 for outs in self.table.values())

    def is_normalized(self) -> bool:
        return all(sum(w for _, w in outs) == 1 for outs in self.table.values())


def _onehot(n: int, k: int | None) -> tuple[int, ...]:
    return tuple(int(m == k) for m in range(n))


def _future_u(status: PartyStatus, u: int, dims: DimensionChoice) -> int:
    # u survives on the party-to-future leg only where that sector can hold it
    return u if dims.party_to_future[status.bits] >= dims.past_to_party else 0


def _party_outputs(q: int, n: int, status: PartyStatus, choice: BifurcationChoice, u: int, dims):
    zeros = _onehot(n, None)
    if status is PartyStatus.LOST:
        v_ch, v_pr = _onehot(n, choice.lost), zeros
    elif status is PartyStatus.CHANCELLOR:
        v_ch, v_pr = zeros, _onehot(n, choice.ch)
    else:
        v_ch, v_pr = zeros, zeros
    l_ch, l_pr = status.bits
    return (v_ch, v_pr, l_pr), (l_ch, l_pr, _future_u(status, u, dims))


@lru_cache(maxsize=None)
def party_channel(q: int, p: ModelParams = ModelParams(), dims: DimensionChoice | None = None) -> NodeChannel:
    """Route-tracking channel of party ``q``: auxiliary choice in, branch flags out."""
    dims = DimensionChoice() if dims is None else dims
    route = PartyRoute(q, p)
    table = {}
    for status in PartyStatus:
        for choice in route.choices():
            for u in range(dims.past_to_party):
                x, f = _party_outputs(q, p.n, status, choice, u, dims)
                table[(choice, u, status.bits)] = ((BranchStatus.of(status), x, f), ONE),
    return NodeChannel(party_node(q), table)


class InstrumentSettings(NamedTuple):
    """Classical settings of one party: input bit, sender and (possibly dummy) receiver."""

    I: int
    Q_send: int
    Q_rec: int


def instrument_choice(settings: InstrumentSettings, q: int, n: int) -> BifurcationChoice:
    """Vote targets party ``q`` uses under ``settings``.

    Losers vote the sender in as chancellor; a chancellor votes for the
    receiver when its bit is 1 and for the receiver's successor otherwise.
    Targets that would be ``q`` itself are moved to a neighbouring party: the
    sender's loser vote (never cast, since the sender always wins) goes to
    ``Q_send + 1``; a decoy that lands on the sender goes one step further;
    a non-sender's dummy that lands on itself goes to ``q + 1``.
    """
    I, send, rec = settings
    if I not in (0, 1):
        raise ValueError(f"input bit must be 0 or 1, got {I}")
    for name, who in (("Q_send", send), ("Q_rec", rec)):
        if not 0 <= who < n:
            raise ValueError(f"{name}={who} out of range for n={n}")
    if q == send and rec == send:
        raise ValueError("the sender cannot also be the receiver")
    lost = (send + 1) % n if q == send else send
    ch = (rec + 1 - I) % n
    if ch == q:
        ch = (rec + 2) % n if q == send else (q + 1) % n
    return BifurcationChoice(lost, ch)


@dataclass(frozen=True)
class Instrument:
    """Instrument of party ``q``: a party channel with no auxiliary input and the outcome as auxiliary output."""

    settings: InstrumentSettings
    q: int
    choice: BifurcationChoice
    channel: NodeChannel = field(repr=False)

    def outcome(self, l: tuple[int, int], u: int = 0) -> int:
        ((aux, _x, _f), _w), = self.channel.apply(((), u, tuple(l)))
        return aux

    def kraus_labels(self) -> list[tuple]:
        """Input labels, one per Kraus operator."""
        return sorted(self.channel.table)


def party_instrument(
    settings: InstrumentSettings | tuple,
    q: int,
    p: ModelParams = ModelParams(),
    dims: DimensionChoice | None = None,
) -> Instrument:
    """The instrument party ``q`` runs under ``settings``.

    Outcome 1 exactly when the party ends up president.  The past label
    ``u`` is passed on to the future only in the president branch under the
    default dimensions; the other future sectors are one-dimensional.
    """
    dims = DimensionChoice() if dims is None else dims
    settings = InstrumentSettings(*settings)
    choice = instrument_choice(settings, q, p.n)
    table = {}
    for status in PartyStatus:
        for u in range(dims.past_to_party):
            x, f = _party_outputs(q, p.n, status, choice, u, dims)
            outcome = int(status is PartyStatus.PRESIDENT)
            table[((), u, status.bits)] = ((outcome, x, f), ONE),
    return Instrument(settings, q, choice, NodeChannel(party_node(q), table))


class _Discard(Mapping):
    """Table of the future's channel: every allowed input is traced out.

    Keys are ``(assignment, party_to_future_labels)``; iteration lists the
    assignments only, with ``None`` for the party legs.
    """

    def __init__(self, future: FutureRoute):
        self._future = future

    def __getitem__(self, label):
        assignment, f_labels = label
        statuses = tuple(tuple(f[:2]) for f in f_labels) if f_labels is not None else None
        if self._future.apply(assignment, statuses) is UNDEFINED:
            raise KeyError(label)
        return (((), ONE),)

    def get(self, label, default=None):
        try:
            return self[label]
        except KeyError:
            return default

    def __iter__(self):
        return ((a, None) for a in self._future.reverse_choices())

    def __len__(self):
        return len(self._future.reverse_choices())


@dataclass(frozen=True, eq=False)
class FixedChannels:
    past: NodeChannel
    station: NodeChannel
    future: NodeChannel


def _uniform_past(p: ModelParams, dims: DimensionChoice) -> NodeChannel:
    labels = list(itertools.product(range(dims.past_to_party), repeat=p.n))
    w = Fraction(1, len(labels))
    return NodeChannel("P", {(): tuple((u, w) for u in labels)})


@lru_cache(maxsize=None)
def _fixed_channels(p: ModelParams, dims: DimensionChoice) -> FixedChannels:
    table = allowed_table(p)
    bits = table.bits()
    v_ch, v_pr = bits["v_ch"].tolist(), bits["v_pr"].tolist()
    l_ch, l_pr = bits["l_ch"].tolist(), bits["l_pr"].tolist()
    station = {}
    for row in range(len(table)):
        x = tuple(
            (tuple(v_ch[row][q]), tuple(v_pr[row][q]), l_pr[row][q]) for q in range(p.n)
        )
        l_out = tuple(zip(l_ch[row], l_pr[row]))
        station[x] = (((l_out, row), ONE),)
    _, future = terminal_routes(p)
    return FixedChannels(
        past=_uniform_past(p, dims),
        station=NodeChannel("X", station),
        future=NodeChannel("F", _Discard(future)),
    )


def fixed_channels(graph: RoutedGraph | None = None) -> FixedChannels:
    """Channels of the past, the station and the future.

    The past is uniformly random on every leg, the station forwards each
    allowed input unchanged (reporting the statuses back and the assignment
    to the future), and the future discards everything.
    """
    graph = build_gamma() if graph is None else graph
    return _fixed_channels(graph.params, graph.dims)


def route_violations(channel, route, limit: int = 10) -> list[dict]:
    """Transitions of ``channel`` that ``route`` forbids, plus uncovered domain points.

    ``channel`` is a party :class:`NodeChannel`, an :class:`Instrument`, the
    station or past channel, or the future channel; ``route`` the matching
    augmented route.
    """
    found: list[dict] = []

    def bad(transition, reason):
        found.append({"transition": repr(transition), "reason": reason})
        return len(found) >= limit

    if isinstance(route, PartyRoute):
        fixed = channel.choice if isinstance(channel, Instrument) else None
        node_channel = channel.channel if isinstance(channel, Instrument) else channel
        for (aux_in, u, l), outs in node_channel.table.items():
            choice = fixed if fixed is not None else aux_in
            if fixed is not None and aux_in != ():
                if bad((aux_in, u, l), "instrument with an auxiliary input"):
                    break
                continue
            expected = route.apply(l, choice)
            for (aux_out, x, f), w in outs:
                if w == 0:
                    continue
                if expected is UNDEFINED:
                    reason = "input outside the route's domain"
                elif x != (expected.v_ch, expected.v_pr, expected.l[1]):
                    reason = "party-to-station output not allowed"
                elif tuple(f[:2]) != expected.l:
                    reason = "party-to-future sector not allowed"
                elif fixed is None and aux_out != expected.j:
                    reason = "branch flags disagree with the route"
                elif fixed is not None and aux_out != expected.j.pr:
                    reason = "outcome is not the president flag"
                else:
                    continue
                if bad(((aux_in, u, l), (aux_out, x, f)), reason):
                    return found
        if isinstance(channel, Instrument):
            domain = {((), l) for l, _ in route.domain()}
        else:
            domain = {(i, l) for l, i in route.domain()}
        covered = {(aux_in, l) for aux_in, _, l in node_channel.table}
        for missing in sorted(domain - covered):
            if bad(missing, "no transition for a practical input"):
                break
        return found

    if isinstance(route, StationRoute):
        seen = set()
        for x, outs in channel.table.items():
            for (l_out, row), w in outs:
                a = route.allowed[row] if 0 <= row < len(route.allowed) else None
                if a is None or route.apply(a) is UNDEFINED:
                    reason = "station output outside the allowed assignments"
                elif tuple(a.status_bits(q) for q in range(a.n)) != tuple(l_out) or _station_key(a) != x:
                    reason = "station output differs from its input"
                else:
                    seen.add(row)
                    continue
                if bad((x, (l_out, row)), reason):
                    return found
        for row in sorted(set(range(len(route.allowed))) - seen)[:limit]:
            if bad(row, "no transition for an allowed assignment"):
                break
        return found

    if isinstance(route, PastRoute):
        if set(channel.table) != {()}:
            bad(sorted(channel.table), "the past has no inputs")
        elif not channel.is_normalized():
            bad((), "weights do not sum to one")
        return found

    if isinstance(route, FutureRoute):
        for a in route.reverse_choices():
            if channel.apply((a, None)) != (((), ONE),):
                if bad(a, "future does not discard an allowed assignment"):
                    break
        return found

    raise TypeError(f"no route check for {type(route).__name__}")


def _station_key(a: GlobalAssignment) -> tuple:
    return tuple((a.v_ch[q], a.v_pr[q], a.l_pr[q]) for q in range(a.n))


def check_route_following(channel, route) -> bool:
    return not route_violations(channel, route, limit=1)


class ExecutionResult(NamedTuple):
    """One outcome of a run: auxiliary outputs of every party, the realised assignment and its weight."""

    aux: tuple
    row: int
    assignment: GlobalAssignment
    weight: Fraction

    @property
    def statuses(self) -> tuple[PartyStatus, ...]:
        return tuple(PartyStatus.from_bits(*self.assignment.status_bits(q)) for q in range(self.assignment.n))

    def to_json(self) -> dict:
        return {
            "aux": [_aux_json(a) for a in self.aux],
            "assignment": self.assignment.to_json(),
            "statuses": [s.short for s in self.statuses],
            "probability": str(self.weight),
        }


def _aux_json(a):
    if isinstance(a, BranchStatus):
        return a.status.short
    return a


_VERIFIED_FIXED: "weakref.WeakSet[FixedChannels]" = weakref.WeakSet()


def _verify(graph: RoutedGraph, parties: Sequence, fixed: FixedChannels) -> None:
    p = graph.params
    if len(parties) != p.n:
        raise ValueError(f"expected {p.n} party channels, got {len(parties)}")
    checks = [(c, PartyRoute(q, p)) for q, c in enumerate(parties)]
    if fixed not in _VERIFIED_FIXED:
        table = allowed_table(p)
        past, future = terminal_routes(p)
        checks += [
            (fixed.past, past),
            (fixed.station, StationRoute(table)),
            (fixed.future, future),
        ]
    for channel, route in checks:
        problems = route_violations(channel, route, limit=1)
        if problems:
            node = channel.channel.node if isinstance(channel, Instrument) else channel.node
            raise RouteViolation(node, problems[0]["transition"], problems[0]["reason"])
    _VERIFIED_FIXED.add(fixed)


def _party_table(channel) -> Mapping:
    return channel.channel.table if isinstance(channel, Instrument) else channel.table


def _compose(graph: RoutedGraph, parties: Sequence, aux_inputs: Sequence, fixed: FixedChannels) -> tuple[ExecutionResult, ...]:
    p = graph.params
    n = p.n
    tables = [_party_table(c) for c in parties]
    (past_outs,) = [fixed.past.table[()]]
    u_values = range(graph.dims.past_to_party)
    status_bits = [s.bits for s in PartyStatus]
    table = allowed_table(p)

    # per party and incoming status: the (aux_out, x, f) reached for every u
    per_party = []
    for q in range(n):
        by_l = {}
        for l in status_bits:
            by_u = {}
            for u in u_values:
                outs = tables[q].get((aux_inputs[q], u, l), ())
                if len(outs) != 1 or outs[0][1] != 1:
                    raise ValueError(f"party {q} channel is not deterministic on {(aux_inputs[q], u, l)!r}")
                by_u[u] = outs[0][0]
            by_l[l] = by_u
        per_party.append(by_l)

    totals: dict[tuple, Fraction] = {}
    for l_vec in itertools.product(status_bits, repeat=n):
        maps = [per_party[q][l_vec[q]] for q in range(n)]
        u_free = all(len({out[:2] for out in m.values()}) == 1 for m in maps)
        if u_free:
            # the station and the auxiliary outputs never see u; sum it out
            terms = [(tuple(m[0] for m in maps), ONE)]
        else:
            terms = [(tuple(maps[q][u_vec[q]] for q in range(n)), w) for u_vec, w in past_outs]
        for outs, w in terms:
            x_vec = tuple(o[1] for o in outs)
            for (l_back, row), w_x in fixed.station.apply(x_vec):
                if tuple(l_back) != l_vec:
                    continue
                a = table.assignment(row)
                f_vec = tuple(o[2] for o in outs)
                for _, w_f in fixed.future.apply((a, f_vec)):
                    key = (tuple(o[0] for o in outs), row)
                    totals[key] = totals.get(key, 0) + w * w_x * w_f
    return tuple(
        ExecutionResult(aux, row, table.assignment(row), Fraction(w))
        for (aux, row), w in sorted(totals.items(), key=lambda kv: (kv[0][1], repr(kv[0][0])))
        if w
    )


def compose_superchannel(
    graph: RoutedGraph,
    parties: Sequence,
    aux_inputs: Sequence | None = None,
    fixed: FixedChannels | None = None,
) -> tuple[ExecutionResult, ...]:
    """Plug the party channels into the process and run it on one auxiliary input.

    Parameters
    ----------
    graph
        The routed graph; fixes ``n`` and the sector dimensions.
    parties
        One channel per party, either route-tracking channels
        (:func:`party_channel`) or :class:`Instrument` objects.
    aux_inputs
        Auxiliary input of every party: its bifurcation choice for
        route-tracking channels, ``()`` for instruments (the default).
    fixed
        Past, station and future channels; :func:`fixed_channels` by default.

    Returns
    -------
    tuple of ExecutionResult
        Every outcome with non-zero weight.  The weights sum to one.

    Raises
    ------
    RouteViolation
        If some channel does not follow its node's augmented route.
    """
    fixed = fixed_channels(graph) if fixed is None else fixed
    aux_inputs = tuple(() for _ in parties) if aux_inputs is None else tuple(aux_inputs)
    _verify(graph, parties, fixed)
    return _compose(graph, parties, aux_inputs, fixed)


def compose_many(
    graph: RoutedGraph,
    parties: Sequence,
    inputs: Iterable[Sequence],
    fixed: FixedChannels | None = None,
) -> list[tuple[ExecutionResult, ...]]:
    """:func:`compose_superchannel` over many auxiliary inputs, checking routes once."""
    fixed = fixed_channels(graph) if fixed is None else fixed
    _verify(graph, parties, fixed)
    return [_compose(graph, parties, tuple(i), fixed) for i in inputs]


def execute_choices(graph: RoutedGraph, inputs: Iterable[Sequence[BifurcationChoice]]) -> list[tuple[ExecutionResult, ...]]:
    """Run the route-tracking channels of every party on each choice vector."""
    p = graph.params
    parties = [party_channel(q, p, graph.dims) for q in range(p.n)]
    inputs = [tuple(BifurcationChoice(*c) for c in i) for i in inputs]
    return compose_many(graph, parties, inputs)
