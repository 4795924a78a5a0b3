import dataclasses
from fractions import Fraction

import hypothesis.strategies as st
import pytest
from hypothesis import given, settings

from causalvote.process_exec import (
    FixedChannels,
    InstrumentSettings,
    NodeChannel,
    RouteViolation,
    check_route_following,
    compose_superchannel,
    execute_choices,
    fixed_channels,
    instrument_choice,
    party_channel,
    party_instrument,
    route_violations,
)
from causalvote.routed_graph import DimensionChoice, build_gamma
from causalvote.routes import BifurcationChoice, BranchStatus, PartyRoute, StationRoute, terminal_routes
from causalvote.validity import sample_inputs
from causalvote.vote_model import ModelParams

ZERO = (0,) * 5


def onehot(k):
    return tuple(int(m == k) for m in range(5))


def run_instrument(inst, l, u):
    ((out, w),) = inst.channel.apply(((), u, l))
    assert w == 1
    return out


def test_chancellor_votes_for_receiver_when_bit_is_one():
    # sender 1, receiver 3 (0-indexed 0 and 2)
    inst = party_instrument(InstrumentSettings(1, 0, 2), 0)
    outcome, x, f = run_instrument(inst, (1, 0), 2)
    assert x == (ZERO, onehot(2), 0)
    assert outcome == 0
    # the chancellor sector towards the future is one-dimensional, so u is dropped
    assert f == (1, 0, 0)


def test_u_survives_where_the_future_sector_is_wide():
    dims = DimensionChoice(party_to_future={(0, 0): 1, (1, 0): 4, (0, 1): 4})
    inst = party_instrument(InstrumentSettings(1, 0, 2), 0, dims=dims)
    _, _, f = run_instrument(inst, (1, 0), 2)
    assert f == (1, 0, 2)


def test_chancellor_votes_decoy_when_bit_is_zero():
    inst = party_instrument(InstrumentSettings(0, 0, 2), 0)
    _, x, _ = run_instrument(inst, (1, 0), 0)
    assert x == (ZERO, onehot(3), 0)


@pytest.mark.parametrize("settings", [(0, 0, 2), (1, 3, 1), (1, 4, 0)])
@pytest.mark.parametrize("u", range(4))
def test_president_branch(settings, u):
    for q in range(5):
        inst = party_instrument(settings, q)
        outcome, x, f = run_instrument(inst, (0, 1), u)
        assert outcome == 1
        assert x == (ZERO, ZERO, 1)
        assert f == (0, 1, u)


def test_losers_vote_for_sender():
    for q in range(1, 5):
        inst = party_instrument(InstrumentSettings(0, 0, 2), q)
        _, x, _ = run_instrument(inst, (0, 0), 1)
        assert x == (onehot(0), ZERO, 0)


def test_self_votes_are_remapped():
    n = 5
    # the sender's own loser vote would be itself
    assert instrument_choice(InstrumentSettings(1, 2, 4), 2, n).lost == 3
    # decoy rec+1 lands on the sender: one step further
    assert instrument_choice(InstrumentSettings(0, 3, 2), 3, n).ch == 4
    # a non-sender's dummy pointing at itself
    assert instrument_choice(InstrumentSettings(1, 0, 3), 3, n).ch == 4
    assert instrument_choice(InstrumentSettings(0, 0, 2), 3, n).ch == 4


def test_sender_cannot_be_receiver():
    with pytest.raises(ValueError):
        party_instrument((1, 2, 2), 2)
    with pytest.raises(ValueError):
        party_instrument((2, 0, 1), 0)


settings_strategy = st.builds(InstrumentSettings, st.integers(0, 1), st.integers(0, 4), st.integers(0, 4))


@settings(max_examples=200, deadline=None)
@given(settings_strategy, st.integers(0, 4))
def test_instruments_follow_party_route(s, q):
    if s.Q_send == s.Q_rec and q == s.Q_send:
        return
    inst = party_instrument(s, q)
    assert q not in inst.choice
    assert check_route_following(inst, PartyRoute(q, ModelParams()))


def test_kraus_labels_cover_input_basis():
    inst = party_instrument((1, 0, 2), 3)
    labels = inst.kraus_labels()
    assert len(labels) == len(set(labels)) == 3 * 4
    assert all(len(inst.channel.apply(l)) == 1 for l in labels)
    assert inst.channel.is_deterministic and inst.channel.is_normalized()


def test_self_voting_instrument_is_caught():
    inst = party_instrument((1, 0, 2), 1)
    table = dict(inst.channel.table)
    for u in range(4):
        table[((), u, (0, 0))] = ((0, (onehot(1), ZERO, 0), (0, 0, 0)), Fraction(1)),
    corrupt = dataclasses.replace(inst, channel=NodeChannel("A2", table))
    route = PartyRoute(1, ModelParams())
    assert not check_route_following(corrupt, route)
    assert route_violations(corrupt, route)[0]["reason"] == "party-to-station output not allowed"


def test_party_channel_follows_route():
    for q in range(5):
        assert check_route_following(party_channel(q), PartyRoute(q, ModelParams()))


def test_station_channel_follows_station_route(gamma, table):
    fixed = fixed_channels(gamma)
    allowed = [table.assignment(r) for r in range(len(table))]
    assert check_route_following(fixed.station, StationRoute(allowed))
    assert len(fixed.station) == 964
    assert fixed.station.is_deterministic


def test_station_forwards_chancellor_president_assignment(gamma, table):
    fixed = fixed_channels(gamma)
    row = next(r for r in range(len(table)) if (table.statuses[r] == [1, 0, 0, 0, 2]).all())
    a = table.assignment(row)
    x = tuple((a.v_ch[q], a.v_pr[q], a.l_pr[q]) for q in range(5))
    ((l_back, out_row), w), = fixed.station.apply(x)
    assert out_row == row and w == 1
    assert l_back == ((1, 0), (0, 0), (0, 0), (0, 0), (0, 1))


def test_past_is_uniform_on_each_leg(gamma):
    past = fixed_channels(gamma).past
    (outs,) = [past.apply(())]
    assert sum(w for _, w in outs) == 1
    for q in range(5):
        marginal = {}
        for u, w in outs:
            marginal[u[q]] = marginal.get(u[q], 0) + w
        assert marginal == {u: Fraction(1, 4) for u in range(4)}


def test_future_discards(gamma, params):
    fixed = fixed_channels(gamma)
    _, future = terminal_routes(params)
    assert check_route_following(fixed.future, future)
    a = next(iter(future.reverse_choices()))
    assert fixed.future.apply((a, None)) == (((), Fraction(1)),)


def elect_1_pick_5():
    return (
        BifurcationChoice(2, 4),
        BifurcationChoice(0, 2),
        BifurcationChoice(0, 3),
        BifurcationChoice(0, 4),
        BifurcationChoice(1, 2),
    )


def test_composition_on_chancellor_president_input(gamma):
    (results,) = execute_choices(gamma, [elect_1_pick_5()])
    (r,) = results
    assert r.weight == 1
    assert r.aux[4] == BranchStatus(0, 0, 1)
    assert r.aux[0] == BranchStatus(0, 1, 0)


def test_composition_does_not_depend_on_u(gamma):
    parties = [party_channel(q) for q in range(5)]
    base = fixed_channels(gamma)
    reference = compose_superchannel(gamma, parties, elect_1_pick_5(), base)
    for u in range(4):
        point = NodeChannel("P", {(): (((u,) * 5, Fraction(1)),)})
        fixed = FixedChannels(point, base.station, base.future)
        assert compose_superchannel(gamma, parties, elect_1_pick_5(), fixed) == reference


def test_composition_weights_normalised(gamma, params):
    for results in execute_choices(gamma, sample_inputs(params, 50, seed=11)):
        assert sum(r.weight for r in results) == 1
        assert all(isinstance(r.weight, Fraction) for r in results)


def test_composition_agrees_with_choice_relation(gamma, rel, params):
    inputs = sample_inputs(params, 200, seed=5)
    for i, results in zip(inputs, execute_choices(gamma, inputs)):
        expected = rel(i)
        assert len(results) == 1
        assert results[0].aux == expected.j and results[0].row == expected.row


def test_route_violation_is_rejected(gamma):
    parties = [party_channel(q) for q in range(5)]
    table = dict(parties[2].table)
    key = next(k for k in table if k[2] == (0, 1))
    table[key] = (((BranchStatus(0, 0, 1), ((0,) * 5, (0,) * 5, 0), (0, 1, 0)), Fraction(1)),)
    parties[2] = NodeChannel("A3", table)
    with pytest.raises(RouteViolation) as err:
        compose_superchannel(gamma, parties, elect_1_pick_5())
    assert err.value.node == "A3"
    assert "party-to-station" in err.value.reason


def test_wrong_party_count(gamma):
    with pytest.raises(ValueError):
        compose_superchannel(gamma, [party_channel(q) for q in range(4)])


def test_trace_json(gamma):
    (results,) = execute_choices(gamma, [elect_1_pick_5()])
    doc = results[0].to_json()
    assert doc["probability"] == "1"
    assert doc["statuses"] == ["ch", "lost", "lost", "lost", "pr"]
