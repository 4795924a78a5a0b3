"""Votes, statuses and the constraint system of the chancellor/president election.

Parties are labelled ``0 .. n-1``.  A :class:`GlobalAssignment` is a dense bit
table holding every vote ``v_ch[q][k]``, ``v_pr[q][k]`` (``q`` votes for ``k``)
and every status bit ``l_ch[q]``, ``l_pr[q]``.  The four constraints are

* a party is chancellor iff it receives at least ``threshold`` chancellor votes;
* a party is president iff it receives a president vote from a chancellor
  that keeps ``threshold`` chancellor votes once the voted party's own
  chancellor vote is discarded;
* a party casts exactly one chancellor vote iff it holds neither title;
* a party casts exactly one president vote iff it is chancellor.

All sums are natural-number sums.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "MUTATIONS",
    "ModelParams",
    "PartyStatus",
    "GlobalAssignment",
    "AllowedTable",
    "LemmaResult",
    "LemmaReport",
    "check_constraints",
    "allowed_table",
    "enumerate_allowed",
    "status_of",
    "check_lemmas",
]

#: Deliberately broken constraint systems, used as negative controls.
MUTATIONS = {
    "drop-majority-recheck": "president rule ignores whether the chancellor keeps a majority",
    "lower-threshold": "chancellor threshold lowered by one vote",
}


@dataclass(frozen=True)
class ModelParams:
    """Party count and (optionally) a named mutation of the constraint system."""

    n: int = 5
    mutation: str | None = None

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 5:
            raise ValueError(f"party count must be an integer >= 5, got {self.n!r}")
        if self.mutation is not None and self.mutation not in MUTATIONS:
            raise ValueError(
                f"unknown mutation {self.mutation!r}; expected one of {sorted(MUTATIONS)}"
            )

    @property
    def threshold(self) -> int:
        t = math.ceil(self.n / 2)
        if self.mutation == "lower-threshold":
            t -= 1
        return t

    @property
    def recheck_majority(self) -> bool:
        return self.mutation != "drop-majority-recheck"

    def others(self, q: int) -> tuple[int, ...]:
        return tuple(k for k in range(self.n) if k != q)


class PartyStatus(enum.IntEnum):
    LOST = 0
    CHANCELLOR = 1
    PRESIDENT = 2

    @property
    def bits(self) -> tuple[int, int]:
        """The ``(l_ch, l_pr)`` pair of this status."""
        return _STATUS_BITS[self]

    @property
    def short(self) -> str:
        return ("lost", "ch", "pr")[self]

    @classmethod
    def from_bits(cls, l_ch: int, l_pr: int) -> "PartyStatus":
        try:
            return _BITS_STATUS[(l_ch, l_pr)]
        except KeyError:
            raise ValueError(
                f"status bits {(l_ch, l_pr)} do not name a status "
                "(a party cannot be chancellor and president at once)"
            ) from None


_STATUS_BITS = {
    PartyStatus.LOST: (0, 0),
    PartyStatus.CHANCELLOR: (1, 0),
    PartyStatus.PRESIDENT: (0, 1),
}
_BITS_STATUS = {bits: status for status, bits in _STATUS_BITS.items()}


def _bit_matrix(rows, n: int, name: str) -> tuple[tuple[int, ...], ...]:
    rows = tuple(tuple(int(b) for b in row) for row in rows)
    if len(rows) != n or any(len(row) != n for row in rows):
        raise ValueError(f"{name} must be an {n}x{n} bit table")
    for q, row in enumerate(rows):
        if any(b not in (0, 1) for b in row):
            raise ValueError(f"{name} entries must be bits")
        if row[q]:
            raise ValueError(f"{name} contains a self-vote by party {q}")
    return rows


def _bit_vector(values, n: int, name: str) -> tuple[int, ...]:
    values = tuple(int(b) for b in values)
    if len(values) != n or any(b not in (0, 1) for b in values):
        raise ValueError(f"{name} must be {n} bits")
    return values


@dataclass(frozen=True)
class GlobalAssignment:
    """Values of every vote and status index for ``n`` parties.

    ``v_ch[q][k] == 1`` means party ``q`` votes for ``k`` as chancellor.  The
    diagonal is always zero: self-votes do not exist as indices.
    """

    n: int
    v_ch: tuple[tuple[int, ...], ...]
    v_pr: tuple[tuple[int, ...], ...]
    l_ch: tuple[int, ...]
    l_pr: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "v_ch", _bit_matrix(self.v_ch, self.n, "v_ch"))
        object.__setattr__(self, "v_pr", _bit_matrix(self.v_pr, self.n, "v_pr"))
        object.__setattr__(self, "l_ch", _bit_vector(self.l_ch, self.n, "l_ch"))
        object.__setattr__(self, "l_pr", _bit_vector(self.l_pr, self.n, "l_pr"))

    @classmethod
    def from_votes(
        cls,
        n: int,
        ch_votes: Mapping[int, int] = None,
        pr_votes: Mapping[int, int] = None,
        statuses: Mapping[int, PartyStatus] = None,
    ) -> "GlobalAssignment":
        """Build an assignment from sparse vote and status listings.

        Parties absent from ``statuses`` are :attr:`PartyStatus.LOST`.
        """
        v_ch = [[0] * n for _ in range(n)]
        v_pr = [[0] * n for _ in range(n)]
        for q, k in (ch_votes or {}).items():
            v_ch[q][k] = 1
        for q, k in (pr_votes or {}).items():
            v_pr[q][k] = 1
        l_ch = [0] * n
        l_pr = [0] * n
        for q, status in (statuses or {}).items():
            l_ch[q], l_pr[q] = PartyStatus(status).bits
        return cls(n, v_ch, v_pr, l_ch, l_pr)

    @classmethod
    def from_branches(cls, statuses: Iterable[int], targets: Iterable[int]) -> "GlobalAssignment":
        """Build an assignment from per-party branch choices.

        A lost party casts its chancellor vote for ``targets[q]``, a chancellor
        casts its president vote for ``targets[q]``, a president casts nothing.
        """
        statuses = [PartyStatus(int(s)) for s in statuses]
        targets = [int(t) for t in targets]
        n = len(statuses)
        ch = {q: targets[q] for q in range(n) if statuses[q] is PartyStatus.LOST}
        pr = {q: targets[q] for q in range(n) if statuses[q] is PartyStatus.CHANCELLOR}
        return cls.from_votes(n, ch, pr, dict(enumerate(statuses)))

    @classmethod
    def _trusted(cls, n, v_ch, v_pr, l_ch, l_pr) -> "GlobalAssignment":
        # rows of an allowed table are already valid bit tuples
        obj = object.__new__(cls)
        for name, value in (("n", n), ("v_ch", v_ch), ("v_pr", v_pr), ("l_ch", l_ch), ("l_pr", l_pr)):
            object.__setattr__(obj, name, value)
        return obj

    def value(self, index: tuple) -> int:
        """Look up one index variable, e.g. ``("v_ch", q, k)`` or ``("l_pr", q)``."""
        name, *where = index
        if name == "v_ch":
            return self.v_ch[where[0]][where[1]]
        if name == "v_pr":
            return self.v_pr[where[0]][where[1]]
        if name == "l_ch":
            return self.l_ch[where[0]]
        if name == "l_pr":
            return self.l_pr[where[0]]
        raise KeyError(index)

    def status_bits(self, q: int) -> tuple[int, int]:
        return self.l_ch[q], self.l_pr[q]

    def branches(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Inverse of :meth:`from_branches` for assignments with valid statuses.

        Returns ``(statuses, targets)`` with ``-1`` as the target of a party
        that casts no vote.
        """
        statuses, targets = [], []
        for q in range(self.n):
            status = status_of(self, q)
            row = self.v_ch[q] if status is PartyStatus.LOST else self.v_pr[q]
            cast = [k for k, b in enumerate(row) if b]
            statuses.append(int(status))
            targets.append(cast[0] if len(cast) == 1 else -1)
        return tuple(statuses), tuple(targets)

    def to_json(self) -> dict:
        """1-indexed rendering of the cast votes and titles."""
        ch = {str(q + 1): k + 1 for q in range(self.n) for k in range(self.n) if self.v_ch[q][k]}
        pr = {str(q + 1): k + 1 for q in range(self.n) for k in range(self.n) if self.v_pr[q][k]}
        return {
            "chancellor_votes": ch,
            "president_votes": pr,
            "l_ch": list(self.l_ch),
            "l_pr": list(self.l_pr),
        }


def check_constraints(a: GlobalAssignment, p: ModelParams) -> bool:
    """True iff ``a`` satisfies all four election constraints under ``p``."""
    if a.n != p.n:
        raise ValueError(f"assignment has {a.n} parties but the model has {p.n}")
    n, t = p.n, p.threshold
    received = [sum(a.v_ch[k][q] for k in range(n)) for q in range(n)]
    for q in range(n):
        if a.l_ch[q] != int(received[q] >= t):
            return False
        pres = 0
        for k in range(n):
            if k == q or not a.v_pr[k][q]:
                continue
            if p.recheck_majority:
                pres += int(received[k] - a.v_ch[q][k] >= t)
            else:
                pres += 1
        if a.l_pr[q] != pres:
            return False
        if sum(a.v_ch[q]) != (1 - a.l_ch[q]) * (1 - a.l_pr[q]):
            return False
        if sum(a.v_pr[q]) != a.l_ch[q]:
            return False
    return True


@dataclass(frozen=True)
class AllowedTable:
    """Allowed assignments as two ``(count, n)`` integer arrays.

    ``statuses`` holds :class:`PartyStatus` codes, ``targets`` the vote cast by
    each party (``-1`` for presidents).  Rows are sorted lexicographically by
    ``(statuses, targets)`` so row numbers are stable identifiers.
    """

    params: ModelParams
    statuses: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.statuses)

    def assignment(self, row: int) -> GlobalAssignment:
        cached = self.__dict__.get("_assignments")
        if cached is None:
            b = self.bits()
            n = self.params.n
            cached = [
                GlobalAssignment._trusted(
                    n, tuple(map(tuple, vc)), tuple(map(tuple, vp)), tuple(lc), tuple(lp)
                )
                for vc, vp, lc, lp in zip(
                    b["v_ch"].tolist(), b["v_pr"].tolist(), b["l_ch"].tolist(), b["l_pr"].tolist()
                )
            ]
            object.__setattr__(self, "_assignments", cached)
        return cached[row]

    def bits(self) -> dict[str, np.ndarray]:
        """Dense bit arrays ``v_ch``/``v_pr`` of shape ``(count, n, n)`` and ``l_ch``/``l_pr`` of shape ``(count, n)``."""
        cached = self.__dict__.get("_bits")
        if cached is None:
            n = self.params.n
            onehot = (self.targets[:, :, None] == np.arange(n)).astype(np.int8)
            lost = (self.statuses == PartyStatus.LOST)[:, :, None]
            ch = (self.statuses == PartyStatus.CHANCELLOR)[:, :, None]
            cached = {
                "v_ch": onehot * lost,
                "v_pr": onehot * ch,
                "l_ch": (self.statuses == PartyStatus.CHANCELLOR).astype(np.int8),
                "l_pr": (self.statuses == PartyStatus.PRESIDENT).astype(np.int8),
            }
            object.__setattr__(self, "_bits", cached)
        return cached

    def project(self, indices) -> np.ndarray:
        """Values of ``indices`` in every row, as a ``(count, len(indices))`` array."""
        bits = self.bits()
        cols = []
        for name, *where in indices:
            cols.append(bits[name][(slice(None), *where)])
        if not cols:
            return np.zeros((len(self), 0), dtype=np.int8)
        return np.stack(cols, axis=1)

    def row_of(self, a: GlobalAssignment) -> int | None:
        """Row number of ``a``, or ``None`` if it is not in the table."""
        cached = self.__dict__.get("_assignment_index")
        if cached is None:
            cached = {self.assignment(row): row for row in range(len(self))}
            object.__setattr__(self, "_assignment_index", cached)
        return cached.get(a)


def _status_vector_feasible(counts: np.ndarray, t: int) -> bool:
    # Every chancellor needs t chancellor votes, all cast by distinct losers;
    # every president needs one president vote, cast by a distinct chancellor.
    lost, ch, pr = counts
    return ch * t <= lost and pr <= ch


@lru_cache(maxsize=None)
def allowed_table(p: ModelParams) -> AllowedTable:
    """Enumerate the allowed assignments of ``p`` as an :class:`AllowedTable`.

    Each party picks a branch (lost with a chancellor-vote target, chancellor
    with a president-vote target, or president), which settles the
    vote-count constraints; the status constraints are then checked on whole
    batches of candidates at once.
    """
    n, t = p.n, p.threshold
    others = [np.array(p.others(q)) for q in range(n)]
    found_s, found_t = [], []
    for status_vec in itertools.product(range(3), repeat=n):
        status_vec = np.array(status_vec)
        if not _status_vector_feasible(np.bincount(status_vec, minlength=3), t):
            continue
        voters = [q for q in range(n) if status_vec[q] != PartyStatus.PRESIDENT]
        grids = np.meshgrid(*[others[q] for q in voters], indexing="ij")
        targets = np.full((grids[0].size if grids else 1, n), -1, dtype=np.int64)
        for q, g in zip(voters, grids):
            targets[:, q] = g.ravel()

        is_lost = status_vec == PartyStatus.LOST
        is_ch = status_vec == PartyStatus.CHANCELLOR
        is_pr = status_vec == PartyStatus.PRESIDENT
        # received[m, k]: chancellor votes received by k in candidate m
        ch_votes = (targets[:, :, None] == np.arange(n)) & is_lost[None, :, None]
        received = ch_votes.sum(axis=1)
        ok = np.all((received >= t) == is_ch[None, :], axis=1)

        pr_votes = (targets[:, :, None] == np.arange(n)) & is_ch[None, :, None]
        if p.recheck_majority:
            # kept[m, k, q]: chancellor k still has t votes once q's vote is discarded
            kept = (received[:, :, None] - ch_votes.transpose(0, 2, 1)) >= t
            pres = (pr_votes & kept).sum(axis=1)
        else:
            pres = pr_votes.sum(axis=1)
        ok &= np.all(pres == is_pr[None, :], axis=1)

        if ok.any():
            found_t.append(targets[ok])
            found_s.append(np.broadcast_to(status_vec, (int(ok.sum()), n)))
    if found_s:
        statuses = np.concatenate(found_s)
        targets = np.concatenate(found_t)
        order = np.lexsort(np.concatenate([targets, statuses], axis=1).T[::-1])
        statuses, targets = statuses[order], targets[order]
    else:
        statuses = np.zeros((0, n), dtype=np.int64)
        targets = np.zeros((0, n), dtype=np.int64)
    statuses.setflags(write=False)
    targets.setflags(write=False)
    return AllowedTable(p, statuses, targets)


def enumerate_allowed(p: ModelParams) -> tuple[GlobalAssignment, ...]:
    """All assignments satisfying the constraints, in :class:`AllowedTable` row order."""
    table = allowed_table(p)
    return tuple(table.assignment(row) for row in range(len(table)))


def status_of(a: GlobalAssignment, q: int) -> PartyStatus:
    """Status of party ``q``; raises ``ValueError`` on the forbidden ``(1, 1)``."""
    return PartyStatus.from_bits(*a.status_bits(q))


@dataclass(frozen=True)
class LemmaResult:
    name: str
    statement: str
    passed: bool
    counterexample: GlobalAssignment | None = None

    def to_json(self) -> dict:
        return {
            "statement": self.statement,
            "passed": self.passed,
            "counterexample": None if self.counterexample is None else self.counterexample.to_json(),
        }


@dataclass(frozen=True)
class LemmaReport:
    results: tuple[LemmaResult, ...]
    checked: int

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> LemmaResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "checked": self.checked,
            "lemmas": {r.name: r.to_json() for r in self.results},
        }


_LEMMAS = (
    (
        "no_chancellor_no_president",
        "if there is no chancellor, there is no president",
        lambda a: any(a.l_ch) or not any(a.l_pr),
    ),
    ("at_most_one_chancellor", "at most one chancellor", lambda a: sum(a.l_ch) <= 1),
    (
        "no_double_title",
        "no party is chancellor and president at once",
        lambda a: all(c * p == 0 for c, p in zip(a.l_ch, a.l_pr)),
    ),
    ("at_most_one_president", "at most one president", lambda a: sum(a.l_pr) <= 1),
)


def check_lemmas(assignments: Iterable[GlobalAssignment]) -> LemmaReport:
    """Check the four structural lemmas, keeping the first counterexample of each."""
    counterexamples: dict[str, GlobalAssignment] = {}
    checked = 0
    for a in assignments:
        checked += 1
        for name, _, holds in _LEMMAS:
            if name not in counterexamples and not holds(a):
                counterexamples[name] = a
    results = tuple(
        LemmaResult(name, statement, name not in counterexamples, counterexamples.get(name))
        for name, statement, _ in _LEMMAS
    )
    return LemmaReport(results, checked)
