import json
from fractions import Fraction

import hypothesis.strategies as st
import pytest
from hypothesis import given, settings

from causalvote.game import (
    CausalOrder,
    RefereeConfig,
    check_dummy_invariance,
    dco_success_probability,
    exhaustive_game_audit,
    fraction_str,
    play_dco_forwarding,
    play_process_strategy,
    referee_configs,
)
from causalvote.routed_graph import build_gamma
from causalvote.vote_model import ModelParams

IDENTITY = CausalOrder((0, 1, 2, 3, 4))


def test_bit_one_makes_receiver_president(gamma):
    out = play_process_strategy(RefereeConfig.canonical(5, 0, 2, 1), gamma)
    assert out.guess == 1 and out.success
    (r,) = out.results
    assert [s.short for s in r.statuses] == ["ch", "lost", "pr", "lost", "lost"]


def test_bit_zero_elects_decoy(gamma):
    out = play_process_strategy(RefereeConfig.canonical(5, 0, 2, 0), gamma)
    assert out.guess == 0 and out.success
    (r,) = out.results
    assert [s.short for s in r.statuses] == ["ch", "lost", "lost", "pr", "lost"]


def test_all_forty_configurations_win(gamma):
    configs = referee_configs(5)
    assert len(configs) == 40
    for cfg in configs:
        out = play_process_strategy(cfg, gamma)
        assert out.probability == 1, cfg


def test_non_senders_never_see_receiver():
    cfg = RefereeConfig((0, 1, 0, 1, 0), 1, 3, (4, 4, 4, 4, 4))
    for q in range(5):
        s = cfg.settings(q)
        assert s.Q_send == 1
        assert s.Q_rec == (3 if q == 1 else 4)


def test_dummy_receivers_do_not_matter(gamma):
    ok, tried = check_dummy_invariance(1, 3, 0, graph=gamma)
    assert ok and tried == 5**4


@pytest.mark.parametrize("kwargs", [
    dict(inputs=(0,) * 5, Q_send=2, Q_rec=2, dummies=(0,) * 5),
    dict(inputs=(0, 2, 0, 0, 0), Q_send=0, Q_rec=1, dummies=(0,) * 5),
    dict(inputs=(0,) * 5, Q_send=0, Q_rec=5, dummies=(0,) * 5),
    dict(inputs=(0,) * 5, Q_send=0, Q_rec=1, dummies=(0,) * 4),
])
def test_invalid_configs(kwargs):
    with pytest.raises(ValueError):
        RefereeConfig(**kwargs)


def test_forwarding_examples():
    assert play_dco_forwarding(IDENTITY, RefereeConfig.canonical(5, 0, 4, 1)) == 1
    assert play_dco_forwarding(IDENTITY, RefereeConfig.canonical(5, 4, 0, 1)) == Fraction(1, 2)
    assert play_dco_forwarding(IDENTITY, RefereeConfig.canonical(5, 4, 0, 0)) == Fraction(1, 2)


@given(st.permutations(range(5)))
def test_half_the_pairs_can_forward(perm):
    order = CausalOrder(tuple(perm))
    pairs = [(s, r) for s in range(5) for r in range(5) if s != r]
    forward = sum(order.precedes(s, r) for s, r in pairs)
    assert forward == len(pairs) - forward == 10


def test_every_order_scores_three_quarters():
    orders = CausalOrder.all(5)
    assert len(orders) == 120
    assert {dco_success_probability(o) for o in orders} == {Fraction(3, 4)}


@settings(max_examples=20, deadline=None)
@given(st.integers(5, 7).flatmap(lambda n: st.permutations(range(n))))
def test_three_quarters_for_other_party_counts(perm):
    assert dco_success_probability(CausalOrder(tuple(perm))) == Fraction(3, 4)


def test_orders_must_be_permutations():
    with pytest.raises(ValueError):
        CausalOrder((0, 1, 1, 3, 4))


def test_audit_report():
    report = exhaustive_game_audit()
    doc = report.to_json()
    assert doc["process"] == {"configs": 40, "successes": 40, "probability": "1/1"}
    assert doc["dco"]["orders"] == 120
    assert doc["dco"]["probability"] == "3/4"
    assert report.dco_probability == Fraction(3, 4) < 1
    assert report.passed
    json.dumps(report.to_json(trace=True))


def test_audit_independent_of_parallelism():
    a = exhaustive_game_audit(parallelism=1).to_json(trace=True)
    b = exhaustive_game_audit(parallelism=3).to_json(trace=True)
    assert a == b


def test_process_wins_with_seven_parties():
    configs = referee_configs(7)
    assert len(configs) == 7 * 6 * 2
    graph = build_gamma(ModelParams(7))
    for cfg in configs[::7]:
        assert play_process_strategy(cfg, graph).probability == 1, cfg


def test_fraction_rendering():
    assert fraction_str(Fraction(1)) == "1/1"
    assert fraction_str(Fraction(6, 8)) == "3/4"
