"""Bi-univocality of the voting graph.

The choice relation maps every vector of bifurcation choices (one
``(lost, ch)`` pair per party) to the branches that occur.  It is computed
from the allowed assignments: an allowed assignment is compatible with a
choice vector iff every loser's vote equals its ``lost`` choice and the
chancellor's vote equals its ``ch`` choice.  Each assignment therefore claims
an axis-aligned box of choice vectors, and the relation is a function iff
the boxes tile the whole input space exactly once.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .routed_graph import RoutedGraph, build_gamma
from .routes import BifurcationChoice, BranchStatus, party_aug_route, terminal_routes
from .vote_model import AllowedTable, GlobalAssignment, ModelParams, PartyStatus, allowed_table

__all__ = [
    "MAX_EXHAUSTIVE_INPUTS",
    "ChoiceOutput",
    "ChoiceRelation",
    "Scenario",
    "VerdictReport",
    "choice_relation",
    "check_univocality",
    "check_univocality_sampled",
    "compatible_rows",
    "classify_input",
    "scenario_memberships",
    "check_partition",
    "check_route_agreement",
    "check_co_univocality",
    "encode_input",
    "decode_input",
    "input_count",
]

#: Largest choice space swept exhaustively (the n=5 space has 4**10 points).
MAX_EXHAUSTIVE_INPUTS = 1 << 26

ChoiceInput = Sequence[BifurcationChoice]


def input_count(p: ModelParams) -> int:
    return (p.n - 1) ** (2 * p.n)


def _digit(q: int, k: int) -> int:
    # position of k among the parties other than q
    return k if k < q else k - 1


def _party(q: int, d):
    return d + (d >= q)


def encode_input(i: ChoiceInput, p: ModelParams) -> int:
    """Flat index of a choice vector; coordinates ordered ``lost^0, ch^0, lost^1, ...``."""
    if len(i) != p.n:
        raise ValueError(f"choice vector has {len(i)} entries, expected {p.n}")
    digits = []
    for q, choice in enumerate(i):
        choice = BifurcationChoice(*choice)
        if not choice.is_valid_for(q, p.n):
            raise ValueError(f"invalid bifurcation choice {choice} for party {q}")
        digits += [_digit(q, choice.lost), _digit(q, choice.ch)]
    return int(np.ravel_multi_index(digits, (p.n - 1,) * (2 * p.n)))


def decode_input(index: int, p: ModelParams) -> tuple[BifurcationChoice, ...]:
    digits = np.unravel_index(index, (p.n - 1,) * (2 * p.n))
    return tuple(
        BifurcationChoice(int(_party(q, digits[2 * q])), int(_party(q, digits[2 * q + 1])))
        for q in range(p.n)
    )


def _render_input(i: ChoiceInput) -> list[dict]:
    return [{"lost": c.lost + 1, "ch": c.ch + 1} for c in i]


class ChoiceOutput(NamedTuple):
    """Branch flags of every party plus the row of the occurring allowed assignment."""

    j: tuple[BranchStatus, ...]
    row: int
    size: int

    @property
    def z(self) -> tuple[int, ...]:
        return tuple(int(k == self.row) for k in range(self.size))


@dataclass(frozen=True)
class VerdictReport:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    counterexamples: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "details": self.details,
            "counterexamples": self.counterexamples,
        }


class ChoiceRelation:
    """The choice relation of the voting graph, tabulated over every input.

    ``counts[i]`` is the number of allowed assignments compatible with choice
    vector ``i`` and ``owner[i]`` the row of one of them (``-1`` if none).
    Both arrays have one axis per bifurcation coordinate.
    """

    def __init__(self, table: AllowedTable):
        p = table.params
        size = input_count(p)
        if size > MAX_EXHAUSTIVE_INPUTS:
            raise ValueError(
                f"{size} choice vectors for n={p.n}; exhaustive tabulation is limited to "
                f"{MAX_EXHAUSTIVE_INPUTS}"
            )
        self.params = p
        self.table = table
        shape = (p.n - 1,) * (2 * p.n)
        counts = np.zeros(shape, dtype=np.int16)
        owner = np.full(shape, -1, dtype=np.int32)
        for row, box in enumerate(self._boxes()):
            counts[box] += 1
            owner[box] = row
        counts.setflags(write=False)
        owner.setflags(write=False)
        self.counts = counts
        self.owner = owner

    def _boxes(self):
        n = self.params.n
        free = slice(None)
        for statuses, targets in zip(self.table.statuses, self.table.targets):
            box = []
            for q in range(n):
                s, t = int(statuses[q]), int(targets[q])
                box.append(_digit(q, t) if s == PartyStatus.LOST else free)
                box.append(_digit(q, t) if s == PartyStatus.CHANCELLOR else free)
            yield tuple(box)

    @property
    def is_function(self) -> bool:
        return bool(np.all(self.counts == 1))

    def compatible_rows(self, i: ChoiceInput) -> np.ndarray:
        """Rows of every allowed assignment compatible with ``i`` (direct scan)."""
        return compatible_rows(self.table, i)

    def output_of_row(self, row: int) -> ChoiceOutput:
        j = tuple(BranchStatus.of(PartyStatus(int(s))) for s in self.table.statuses[row])
        return ChoiceOutput(j, int(row), len(self.table))

    def outputs(self, i: ChoiceInput) -> list[ChoiceOutput]:
        i = tuple(BifurcationChoice(*c) for c in i)
        return [self.output_of_row(r) for r in self.compatible_rows(i)]

    def __call__(self, i: ChoiceInput) -> ChoiceOutput:
        """The unique output for ``i``; raises ``ValueError`` if there is not exactly one."""
        flat = encode_input(i, self.params)
        count = int(self.counts.flat[flat])
        if count != 1:
            raise ValueError(f"choice vector has {count} outputs, the relation is not a function there")
        return self.output_of_row(int(self.owner.flat[flat]))

    def statuses(self) -> np.ndarray:
        """``(inputs, n)`` status codes of the occurring assignment, flat input order."""
        if not self.is_function:
            raise ValueError("statuses per input only make sense when the relation is a function")
        return self.table.statuses[self.owner.ravel()]


def compatible_rows(table: AllowedTable, i: ChoiceInput) -> np.ndarray:
    """Rows of ``table`` whose losers and chancellors voted as ``i`` prescribes."""
    st, tg = table.statuses, table.targets
    ok = np.ones(len(st), dtype=bool)
    for q, choice in enumerate(i):
        choice = BifurcationChoice(*choice)
        ok &= (st[:, q] != PartyStatus.LOST) | (tg[:, q] == choice.lost)
        ok &= (st[:, q] != PartyStatus.CHANCELLOR) | (tg[:, q] == choice.ch)
    return np.flatnonzero(ok)


def choice_relation(graph: RoutedGraph | ModelParams) -> ChoiceRelation:
    p = graph.params if isinstance(graph, RoutedGraph) else graph
    return ChoiceRelation(allowed_table(p))


def check_univocality(rel: ChoiceRelation) -> VerdictReport:
    counts = rel.counts.ravel()
    empty = np.flatnonzero(counts == 0)
    multi = np.flatnonzero(counts > 1)
    counterexamples = []
    for flat in list(empty[:3]) + list(multi[:3]):
        counterexamples.append({
            "input": _render_input(decode_input(int(flat), rel.params)),
            "outputs": int(counts[flat]),
        })
    return VerdictReport(
        "univocality",
        passed=bool(len(empty) == 0 and len(multi) == 0),
        details={
            "inputs": int(counts.size),
            "single_valued": int(np.count_nonzero(counts == 1)),
            "empty": int(len(empty)),
            "multi_valued": int(len(multi)),
            "allowed_assignments": len(rel.table),
        },
        counterexamples=counterexamples,
    )


@dataclass(frozen=True)
class Scenario:
    """Which of the three scenarios a choice vector falls in.

    ``kind`` is ``"lost"`` (nobody elected), ``"ch"`` (``q`` chancellor, no
    president) or ``"pr"`` (``q`` chancellor, ``q2`` president).
    """

    kind: str
    q: int | None = None
    q2: int | None = None

    def __str__(self):
        if self.kind == "lost":
            return "Lost"
        if self.kind == "ch":
            return f"Chancellor({self.q + 1})"
        return f"ChancellorAndPresident({self.q + 1}, {self.q2 + 1})"


def scenario_memberships(i: ChoiceInput, p: ModelParams) -> list[Scenario]:
    """Every scenario class whose defining condition ``i`` satisfies."""
    n, t = p.n, p.threshold
    lost = [c.lost for c in i]
    ch = [c.ch for c in i]
    pointers = [lost.count(k) for k in range(n)]
    found = []
    if all(c < t for c in pointers):
        found.append(Scenario("lost"))
    for q in range(n):
        if pointers[q] == t and lost[ch[q]] == q:
            found.append(Scenario("ch", q))
        for q2 in range(n):
            if q2 == q:
                continue
            backers = sum(1 for k in range(n) if k not in (q, q2) and lost[k] == q)
            if backers >= t and ch[q] == q2:
                found.append(Scenario("pr", q, q2))
    return found


def classify_input(i: ChoiceInput, p: ModelParams = ModelParams()) -> Scenario:
    """The unique scenario class of ``i``.

    Raises ``ValueError`` if the classes fail to partition the input space at
    ``i`` (never the case for odd ``n``).
    """
    i = tuple(BifurcationChoice(*c) for c in i)
    found = scenario_memberships(i, p)
    if len(found) != 1:
        raise ValueError(f"choice vector lies in {len(found)} scenario classes: {found}")
    return found[0]


def _class_masks(p: ModelParams) -> dict[Scenario, np.ndarray]:
    n, t = p.n, p.threshold
    digits = np.indices((p.n - 1,) * (2 * n), dtype=np.int8).reshape(2 * n, -1)
    lost = np.stack([_party(q, digits[2 * q]) for q in range(n)])
    ch = np.stack([_party(q, digits[2 * q + 1]) for q in range(n)])
    pointers = np.stack([(lost == k).sum(axis=0) for k in range(n)])
    cols = np.arange(lost.shape[1])
    masks = {Scenario("lost"): np.all(pointers < t, axis=0)}
    for q in range(n):
        masks[Scenario("ch", q)] = (pointers[q] == t) & (lost[ch[q], cols] == q)
    for q in range(n):
        for q2 in range(n):
            if q2 != q:
                backers = pointers[q] - (lost[q2] == q)
                masks[Scenario("pr", q, q2)] = (backers >= t) & (ch[q] == q2)
    return masks


def check_partition(rel: ChoiceRelation) -> VerdictReport:
    """Exhaustively check that the scenario classes partition the inputs.

    Also checks that each class produces the branches its scenario names:
    everybody lost; ``q`` chancellor and nobody president; ``q`` chancellor
    and exactly ``q2`` president.
    """
    p = rel.params
    masks = _class_masks(p)
    membership = sum(m.astype(np.int16) for m in masks.values())
    sizes = {str(s): int(m.sum()) for s, m in masks.items()}
    lost_total = sizes["Lost"]
    ch_total = sum(v for k, v in sizes.items() if k.startswith("Chancellor("))
    pr_total = sum(v for k, v in sizes.items() if k.startswith("ChancellorAndPresident"))

    disagreements = []
    if rel.is_function:
        st = rel.statuses()
        for s, m in masks.items():
            if not m.any():
                continue
            sub = st[m]
            if s.kind == "lost":
                ok = np.all(sub == PartyStatus.LOST, axis=1)
            else:
                expected_pr = np.zeros(p.n, dtype=bool)
                if s.kind == "pr":
                    expected_pr[s.q2] = True
                ok = (sub[:, s.q] == PartyStatus.CHANCELLOR) & np.all(
                    (sub == PartyStatus.PRESIDENT) == expected_pr, axis=1
                )
            bad = np.flatnonzero(m)[~ok]
            if len(bad):
                disagreements.append({
                    "scenario": str(s),
                    "count": int(len(bad)),
                    "input": _render_input(decode_input(int(bad[0]), p)),
                })

    uncovered = np.flatnonzero(membership == 0)
    overlapping = np.flatnonzero(membership > 1)
    counterexamples = [
        {"input": _render_input(decode_input(int(f), p)), "classes": int(membership[f])}
        for f in list(uncovered[:3]) + list(overlapping[:3])
    ]
    return VerdictReport(
        "partition",
        passed=bool(
            rel.is_function and not len(uncovered) and not len(overlapping) and not disagreements
        ),
        details={
            "inputs": int(membership.size),
            "lost": lost_total,
            "chancellor": ch_total,
            "chancellor_and_president": pr_total,
            "sum": lost_total + ch_total + pr_total,
            "uncovered": int(len(uncovered)),
            "overlapping": int(len(overlapping)),
            "scenario_disagreements": disagreements,
            "class_sizes": sizes,
        },
        counterexamples=counterexamples,
    )


def _sampled_tally(args) -> tuple[dict, list]:
    p, inputs = args
    table = allowed_table(p)
    st, tg = table.statuses, table.targets
    # lost_ok[q][k]: rows where party q's vote is compatible with choosing k
    lost_ok = [[(st[:, q] != PartyStatus.LOST) | (tg[:, q] == k) for k in range(p.n)] for q in range(p.n)]
    ch_ok = [[(st[:, q] != PartyStatus.CHANCELLOR) | (tg[:, q] == k) for k in range(p.n)] for q in range(p.n)]
    tally = {"single_valued": 0, "empty": 0, "multi_valued": 0, "scenario_disagreements": 0}
    bad = []
    for i in inputs:
        ok = np.ones(len(st), dtype=bool)
        for q, c in enumerate(i):
            ok &= lost_ok[q][c.lost]
            ok &= ch_ok[q][c.ch]
        rows = np.flatnonzero(ok)
        found = scenario_memberships(i, p)
        if len(rows) != 1:
            tally["empty" if len(rows) == 0 else "multi_valued"] += 1
            bad.append({"input": _render_input(i), "outputs": int(len(rows))})
            continue
        tally["single_valued"] += 1
        if len(found) != 1 or not _scenario_matches(found[0], st[rows[0]]):
            tally["scenario_disagreements"] += 1
            bad.append({"input": _render_input(i), "scenarios": [str(s) for s in found]})
    return tally, bad[:5]


def check_univocality_sampled(
    p: ModelParams, count: int, seed: int = 0, parallelism: int = 1
) -> VerdictReport:
    """Univocality and scenario agreement on ``count`` uniformly drawn inputs.

    For choice spaces too large to tabulate.  Each input is checked by a
    direct scan of the allowed assignments, and its single output must show
    the branches named by its scenario class.  The sample is fixed by
    ``seed``; splitting it over ``parallelism`` processes does not change
    the report.
    """
    inputs = sample_inputs(p, count, seed)
    chunks = [(p, inputs[k::parallelism]) for k in range(parallelism)]
    if parallelism == 1:
        parts = [_sampled_tally(chunks[0])]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            parts = list(pool.map(_sampled_tally, chunks))
    tally = {k: sum(t[k] for t, _ in parts) for k in parts[0][0]}
    bad = sorted((b for _, bs in parts for b in bs), key=repr)
    return VerdictReport(
        "univocality",
        passed=tally["single_valued"] == count and not tally["scenario_disagreements"],
        details={
            "inputs": count,
            "exhaustive": False,
            "seed": seed,
            **tally,
            "allowed_assignments": len(allowed_table(p)),
        },
        counterexamples=bad[:5],
    )


def _scenario_matches(s: Scenario, statuses) -> bool:
    statuses = [PartyStatus(int(x)) for x in statuses]
    if s.kind == "lost":
        return all(x is PartyStatus.LOST for x in statuses)
    presidents = [k for k, x in enumerate(statuses) if x is PartyStatus.PRESIDENT]
    expected = [s.q2] if s.kind == "pr" else []
    return statuses[s.q] is PartyStatus.CHANCELLOR and presidents == expected


def check_route_agreement(p: ModelParams) -> VerdictReport:
    """Re-derive every allowed assignment from the party routes.

    For each allowed assignment, feeding each party its status and the vote
    it cast as bifurcation choice must reproduce that party's vote rows, and
    the flagged branch must be the party's status.
    """
    table = allowed_table(p)
    routes = [party_aug_route(q, p) for q in range(p.n)]
    bad = []
    for row in range(len(table)):
        a = table.assignment(row)
        for q, route in enumerate(routes):
            s, t = PartyStatus(int(table.statuses[row, q])), int(table.targets[row, q])
            spare = p.others(q)[0]
            choice = BifurcationChoice(
                t if s is PartyStatus.LOST else spare,
                t if s is PartyStatus.CHANCELLOR else spare,
            )
            out = route.apply(a.status_bits(q), choice)
            if not out or out.v_ch != a.v_ch[q] or out.v_pr != a.v_pr[q] or out.j != BranchStatus.of(s):
                bad.append({"row": row, "party": q + 1})
                break
    return VerdictReport(
        "route_agreement",
        passed=not bad,
        details={"assignments": len(table), "mismatches": len(bad)},
        counterexamples=bad[:3],
    )


def check_co_univocality(graph: RoutedGraph | None = None) -> VerdictReport:
    """Univocality of the reversed graph.

    Reversed, only the future node bifurcates, over the allowed assignments.
    Each such choice must fix the branch of every node: one status per
    party, one station branch, and no other node may bifurcate in reverse.
    """
    graph = build_gamma() if graph is None else graph
    p = graph.params
    table = allowed_table(p)
    past, future = terminal_routes(p)
    routes = [party_aug_route(q, p) for q in range(p.n)]
    fanouts = {route.node: route.max_reverse_fanout() for route in routes}
    fanouts["P"] = past.max_reverse_fanout()
    fanouts["X"] = 1
    reverse_bifurcating = sorted(node for node, f in fanouts.items() if f > 1)

    problems = []
    branch_vectors = set()
    for row in range(len(table)):
        a = table.assignment(row)
        try:
            statuses = tuple(PartyStatus.from_bits(*a.status_bits(q)) for q in range(p.n))
        except ValueError as exc:
            problems.append({"row": row, "error": str(exc)})
            continue
        if future.apply(a) != ():
            problems.append({"row": row, "error": "future route rejects assignment"})
        branch_vectors.add((statuses, row))

    passed = not problems and not reverse_bifurcating and len(branch_vectors) == len(table)
    return VerdictReport(
        "co_univocality",
        passed=passed,
        details={
            "reverse_choices": len(future.reverse_choices()),
            "reverse_bifurcating_nodes_other_than_F": reverse_bifurcating,
            "branch_vectors": len(branch_vectors),
        },
        counterexamples=problems[:3],
    )


def branch_vector(a: GlobalAssignment, table: AllowedTable) -> dict[str, object]:
    """Branch occurring at every node when ``a`` is the reverse choice at the future."""
    vec: dict[str, object] = {"P": "", "F": ""}
    for q in range(a.n):
        vec[f"A{q + 1}"] = PartyStatus.from_bits(*a.status_bits(q)).short
    vec["X"] = table.row_of(a)
    return vec


def sample_inputs(p: ModelParams, count: int, seed: int = 0) -> list[tuple[BifurcationChoice, ...]]:
    """``count`` choice vectors drawn uniformly (with replacement)."""
    rng = np.random.default_rng(seed)
    flats = rng.integers(0, input_count(p), size=count)
    return [decode_input(int(f), p) for f in flats]


def iter_inputs(p: ModelParams) -> Iterable[tuple[BifurcationChoice, ...]]:
    for flat in range(input_count(p)):
        yield decode_input(flat, p)
