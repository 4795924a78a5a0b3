"""The causal game: one sender, one receiver, one bit.

The referee picks a sender and a receiver and gives every party an input bit.
Everyone learns who the sender is, but only the sender learns the receiver.
The game is won when the receiver's guess equals the sender's bit.

Two strategy families are scored here with exact rationals: the voting
process with every party running :func:`~causalvote.process_exec.party_instrument`,
and forwarding along a fixed causal order.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .process_exec import ExecutionResult, InstrumentSettings, compose_superchannel, party_instrument
from .routed_graph import RoutedGraph, build_gamma
from .vote_model import ModelParams

__all__ = [
    "RefereeConfig",
    "CausalOrder",
    "ProcessOutcome",
    "GameReport",
    "fraction_str",
    "referee_configs",
    "play_process_strategy",
    "play_dco_forwarding",
    "dco_success_probability",
    "exhaustive_game_audit",
    "check_dummy_invariance",
]

HALF = Fraction(1, 2)


def fraction_str(x: Fraction) -> str:
    """Render as ``num/den`` even for integers, so ``1`` reads ``1/1``."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class RefereeConfig:
    """What the referee hands out.

    ``dummies[q]`` is the receiver label shown to non-sender ``q``; the
    sender's entry is ignored and replaced by the true receiver.
    """

    inputs: tuple[int, ...]
    Q_send: int
    Q_rec: int
    dummies: tuple[int, ...]

    def __post_init__(self):
        n = len(self.inputs)
        if len(self.dummies) != n:
            raise ValueError("one dummy receiver per party is required")
        if any(b not in (0, 1) for b in self.inputs):
            raise ValueError("inputs must be bits")
        for who in (self.Q_send, self.Q_rec, *self.dummies):
            if not 0 <= who < n:
                raise ValueError(f"party label {who} out of range for n={n}")
        if self.Q_send == self.Q_rec:
            raise ValueError("sender and receiver must differ")

    @classmethod
    def canonical(cls, n: int, send: int, rec: int, bit: int) -> "RefereeConfig":
        """Sender holds ``bit``, everyone else 0, dummy receivers ``q + 1``."""
        inputs = tuple(bit if q == send else 0 for q in range(n))
        return cls(inputs, send, rec, tuple((q + 1) % n for q in range(n)))

    @property
    def n(self) -> int:
        return len(self.inputs)

    @property
    def bit(self) -> int:
        return self.inputs[self.Q_send]

    def settings(self, q: int) -> InstrumentSettings:
        """What party ``q`` is told; only the sender sees the real receiver."""
        rec = self.Q_rec if q == self.Q_send else self.dummies[q]
        return InstrumentSettings(self.inputs[q], self.Q_send, rec)

    def to_json(self) -> dict:
        return {
            "Q_send": self.Q_send + 1,
            "Q_rec": self.Q_rec + 1,
            "I_send": self.bit,
            "inputs": list(self.inputs),
            "dummies": [d + 1 for d in self.dummies],
        }


def referee_configs(n: int = 5) -> list[RefereeConfig]:
    """All sender/receiver/bit combinations with canonical dummies."""
    return [
        RefereeConfig.canonical(n, s, r, bit)
        for s in range(n)
        for r in range(n)
        if s != r
        for bit in (0, 1)
    ]


@dataclass(frozen=True)
class CausalOrder:
    """A fixed total order of the parties, earliest first."""

    order: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError(f"{self.order} is not a permutation of 0..{len(self.order) - 1}")

    def position(self, q: int) -> int:
        return self.order.index(q)

    def precedes(self, a: int, b: int) -> bool:
        return self.position(a) < self.position(b)

    @classmethod
    def all(cls, n: int) -> list["CausalOrder"]:
        return [cls(perm) for perm in itertools.permutations(range(n))]


@dataclass(frozen=True)
class ProcessOutcome:
    config: RefereeConfig
    guess: int
    probability: Fraction
    results: tuple[ExecutionResult, ...] = field(repr=False)

    @property
    def success(self) -> bool:
        return self.probability == 1

    def to_json(self) -> dict:
        (first, *_) = self.results
        return {
            "config": self.config.to_json(),
            "assignment": first.assignment.to_json(),
            "statuses": [s.short for s in first.statuses],
            "outcomes": list(first.aux),
            "guess": self.guess,
            "success_probability": fraction_str(self.probability),
        }


def play_process_strategy(cfg: RefereeConfig, graph: RoutedGraph | None = None) -> ProcessOutcome:
    """Run the voting process with every party on its instrument.

    The receiver's guess is its outcome, i.e. whether it became president.
    ``probability`` is the exact chance that the guess equals the sender's bit.
    """
    graph = build_gamma(ModelParams(cfg.n)) if graph is None else graph
    p = graph.params
    if p.n != cfg.n:
        raise ValueError(f"config has {cfg.n} parties, graph has {p.n}")
    parties = [party_instrument(cfg.settings(q), q, p, graph.dims) for q in range(p.n)]
    results = compose_superchannel(graph, parties)
    win = sum((r.weight for r in results if r.aux[cfg.Q_rec] == cfg.bit), Fraction(0))
    guesses = {r.aux[cfg.Q_rec] for r in results}
    guess = guesses.pop() if len(guesses) == 1 else -1
    return ProcessOutcome(cfg, guess, win, results)


def play_dco_forwarding(order: CausalOrder, cfg: RefereeConfig) -> Fraction:
    """Expected success of forwarding along ``order``.

    A sender earlier than the receiver passes the bit down the chain and the
    receiver copies it.  Otherwise the receiver guesses a fair coin; both
    guesses are scored and averaged.
    """
    if len(order.order) != cfg.n:
        raise ValueError("order and config disagree on the number of parties")
    if order.precedes(cfg.Q_send, cfg.Q_rec):
        return Fraction(1)
    return sum((HALF * (guess == cfg.bit) for guess in (0, 1)), Fraction(0))


def dco_success_probability(order: CausalOrder) -> Fraction:
    """Forwarding success averaged over uniform sender/receiver pairs and sender bits."""
    configs = referee_configs(len(order.order))
    return sum((play_dco_forwarding(order, c) for c in configs), Fraction(0)) / len(configs)


@dataclass(frozen=True)
class GameReport:
    n: int
    process: tuple[ProcessOutcome, ...] = field(repr=False)
    dco: tuple[tuple[CausalOrder, Fraction], ...] = field(repr=False)

    @property
    def process_probability(self) -> Fraction:
        return sum((o.probability for o in self.process), Fraction(0)) / len(self.process)

    @property
    def dco_probability(self) -> Fraction:
        """Uniform mixture over the audited orders."""
        return sum((pr for _, pr in self.dco), Fraction(0)) / len(self.dco)

    @property
    def passed(self) -> bool:
        return self.process_probability == 1 and all(pr == Fraction(3, 4) for _, pr in self.dco)

    def to_json(self, trace: bool = False) -> dict:
        dco_values = sorted({pr for _, pr in self.dco})
        doc = {
            "n": self.n,
            "process": {
                "configs": len(self.process),
                "successes": sum(o.success for o in self.process),
                "probability": fraction_str(self.process_probability),
            },
            "dco": {
                "orders": len(self.dco),
                "probability": fraction_str(self.dco_probability),
                "distinct_order_values": [fraction_str(v) for v in dco_values],
            },
            "passed": self.passed,
        }
        if trace:
            doc["process"]["traces"] = [o.to_json() for o in self.process]
        return doc


def _play_chunk(args) -> list[ProcessOutcome]:
    n, configs = args
    graph = build_gamma(ModelParams(n))
    return [play_process_strategy(c, graph) for c in configs]


def _dco_chunk(orders: Sequence[CausalOrder]) -> list[tuple[CausalOrder, Fraction]]:
    return [(o, dco_success_probability(o)) for o in orders]


def _chunks(items: list, k: int) -> list[list]:
    return [items[i::k] for i in range(k)]


def _unchunk(parts: list[list], total: int) -> list:
    out = [None] * total
    for offset, part in enumerate(parts):
        out[offset::len(parts)] = part
    return out


def exhaustive_game_audit(n: int = 5, parallelism: int = 1) -> GameReport:
    """Score the process on every referee config and forwarding on every order.

    Work is split round-robin across ``parallelism`` processes and stitched
    back in the original order, so the report does not depend on it.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be at least 1")
    configs = referee_configs(n)
    orders = CausalOrder.all(n)
    if parallelism == 1:
        process = _play_chunk((n, configs))
        dco = _dco_chunk(orders)
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            cfg_parts = _chunks(configs, parallelism)
            ord_parts = _chunks(orders, parallelism)
            process = _unchunk(list(pool.map(_play_chunk, [(n, c) for c in cfg_parts])), len(configs))
            dco = _unchunk(list(pool.map(_dco_chunk, ord_parts)), len(orders))
    return GameReport(n, tuple(process), tuple(dco))


def check_dummy_invariance(
    send: int, rec: int, bit: int, n: int = 5, graph: RoutedGraph | None = None
) -> tuple[bool, int]:
    """Does the receiver's guess survive every choice of non-sender dummies?

    Returns the verdict and the number of dummy assignments tried.
    """
    graph = build_gamma(ModelParams(n)) if graph is None else graph
    base = RefereeConfig.canonical(n, send, rec, bit)
    others = [q for q in range(n) if q != send]
    guesses = set()
    tried = 0
    for values in itertools.product(range(n), repeat=len(others)):
        dummies = list(base.dummies)
        for q, d in zip(others, values):
            dummies[q] = d
        cfg = RefereeConfig(base.inputs, send, rec, tuple(dummies))
        out = play_process_strategy(cfg, graph)
        guesses.add((out.guess, out.probability))
        tried += 1
    return len(guesses) == 1 and guesses.pop() == (bit, Fraction(1)), tried
