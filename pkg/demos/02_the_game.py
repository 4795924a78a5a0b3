"""
The guessing game
=================

A referee picks a sender and a receiver and hands the sender one bit.  The
receiver must output that bit.  Under any fixed causal order the best the
parties can do on average is 3/4; the election process wins every round.
"""
from causalvote.game import CausalOrder, RefereeConfig, exhaustive_game_audit, play_process_strategy
from causalvote.routed_graph import build_gamma
from causalvote.vote_model import ModelParams

graph = build_gamma(ModelParams(5))

# %% one round: party 1 sends bit 1 to party 3
cfg = RefereeConfig.canonical(5, 0, 2, 1)
outcome = play_process_strategy(cfg, graph)
print("guess", outcome.guess, "probability", outcome.probability)
print("statuses", [s.short for s in outcome.results[0].statuses])

# %% every configuration and every fixed order
report = exhaustive_game_audit(5)
print("process strategy:", report.to_json()["process"])
print("best fixed-order strategy:", report.to_json()["dco"])

# %% forwarding only works when the sender precedes the receiver
order = CausalOrder((0, 1, 2, 3, 4))
print("1 before 5:", order.precedes(0, 4), " 5 before 1:", order.precedes(4, 0))
