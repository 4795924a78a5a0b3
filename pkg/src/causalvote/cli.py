"""Command-line front end.

``describe`` prints the routed graph, ``validate`` runs every validity check
and ``game`` scores both strategies.  Output is JSON on stdout (or
``--output``).  Exit codes: 0 all checks pass, 1 a check failed, 2 bad usage.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from .branch_graph import build_branch_graph, check_branch_lemmas, check_weak_loops
from .game import exhaustive_game_audit
from .routed_graph import build_gamma
from .validity import (
    MAX_EXHAUSTIVE_INPUTS,
    VerdictReport,
    check_co_univocality,
    check_partition,
    check_univocality,
    check_univocality_sampled,
    choice_relation,
    input_count,
)
from .vote_model import MUTATIONS, ModelParams, PartyStatus, allowed_table, check_lemmas, enumerate_allowed

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    n: int = 5
    output: str | None = None
    parallelism: int = 1
    seed: int = 0
    samples: int = 1000
    trace: bool = False
    mutate: str | None = None

    def __post_init__(self):
        if self.n < 5:
            raise UsageError(f"--n must be at least 5, got {self.n}")
        if self.parallelism < 1:
            raise UsageError(f"--parallelism must be at least 1, got {self.parallelism}")
        if self.samples < 1:
            raise UsageError(f"--samples must be at least 1, got {self.samples}")

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.n, self.mutate)


def _dims_summary(graph) -> dict:
    dims = graph.dims
    by_lpr: dict[int, set] = {}
    for (l_ch, l_pr), d in dims.party_to_future.items():
        by_lpr.setdefault(l_pr, set()).add(d)
    return {
        "past_to_party": dims.past_to_party,
        "party_to_station": dims.party_to_station,
        "station_to_party": dims.station_to_party,
        "station_to_future": dims.station_to_future,
        "party_to_future_by_l_pr": {str(k): sorted(v)[0] if len(v) == 1 else sorted(v) for k, v in sorted(by_lpr.items())},
    }


def cmd_describe(cfg: RunConfig) -> tuple[int, dict]:
    graph = build_gamma(cfg.params)
    doc = graph.to_json()
    doc["dimensions"] = _dims_summary(graph)
    return EXIT_OK, doc


def _skipped(name: str, reason: str) -> VerdictReport:
    return VerdictReport(name, passed=False, details={"skipped": reason})


def cmd_validate(cfg: RunConfig) -> tuple[int, dict]:
    p = cfg.params
    graph = build_gamma(p)
    table = allowed_table(p)
    counts = {s.short: int((table.statuses == s).any(axis=1).sum()) for s in PartyStatus}
    lemmas = check_lemmas(enumerate_allowed(p))

    verdicts: dict[str, VerdictReport] = {}
    exhaustive = input_count(p) <= MAX_EXHAUSTIVE_INPUTS
    if exhaustive:
        rel = choice_relation(graph)
        verdicts["univocality"] = check_univocality(rel)
        verdicts["partition"] = check_partition(rel)
    else:
        rel = None
        verdicts["univocality"] = check_univocality_sampled(p, cfg.samples, cfg.seed, cfg.parallelism)
    verdicts["co_univocality"] = check_co_univocality(graph)
    if rel is not None and rel.is_function:
        bg = build_branch_graph(graph, rel)
        loops = check_weak_loops(bg)
        structural = check_branch_lemmas(bg)
        loops = VerdictReport(
            loops.name,
            loops.passed and all(structural.values()),
            {**loops.details, "structural": structural},
            loops.counterexamples,
        )
        verdicts["weak_loops"] = loops
    elif rel is None:
        verdicts["weak_loops"] = _skipped("weak_loops", "needs the exhaustively tabulated choice relation")
    else:
        verdicts["weak_loops"] = _skipped("weak_loops", "choice relation is not a function")

    passed = lemmas.passed and all(v.passed for v in verdicts.values())
    doc = {
        "n": p.n,
        "threshold": p.threshold,
        "mutation": p.mutation,
        "allowed": {
            "count": len(table),
            "with_chancellor": counts["ch"],
            "with_president": counts["pr"],
        },
        "lemmas": lemmas.to_json(),
        "verdicts": {k: v.to_json() for k, v in verdicts.items()},
        "exhaustive": exhaustive,
        "passed": passed,
    }
    return (EXIT_OK if passed else EXIT_FAIL), doc


def cmd_game(cfg: RunConfig) -> tuple[int, dict]:
    if cfg.mutate is not None:
        raise UsageError("--mutate applies to validate only")
    report = exhaustive_game_audit(cfg.n, cfg.parallelism)
    return (EXIT_OK if report.passed else EXIT_FAIL), report.to_json(trace=cfg.trace)


COMMANDS = {"describe": cmd_describe, "validate": cmd_validate, "game": cmd_game}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causalvote", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("describe", "print the routed graph"),
        ("validate", "check bi-univocality and weak loops"),
        ("game", "score the process and forwarding strategies"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--n", type=int, default=5, help="number of parties (>= 5)")
        cmd.add_argument("--output", help="write JSON here instead of stdout")
        cmd.add_argument("--parallelism", type=int, default=1, help="worker processes")
        cmd.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
        cmd.add_argument("--samples", type=int, default=1000, help="sample size when a sweep is too large")
        cmd.add_argument("--trace", action="store_true", help="include per-configuration traces")
        cmd.add_argument("--mutate", choices=sorted(MUTATIONS), help="break the constraint system on purpose")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            n=args.n,
            output=args.output,
            parallelism=args.parallelism,
            seed=args.seed,
            samples=args.samples,
            trace=args.trace,
            mutate=args.mutate,
        )
        code, doc = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        parser.error(str(exc))
    text = json.dumps(doc, indent=2) + "\n"
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
