"""
An election, step by step
=========================

Five parties vote.  A party that collects a majority of chancellor votes
becomes chancellor and then names a president.  This script enumerates the
allowed outcomes, feeds one choice vector through the choice relation and
then through the composed process, and checks the two agree.
"""
from collections import Counter

from causalvote.process_exec import execute_choices
from causalvote.routed_graph import build_gamma
from causalvote.routes import BifurcationChoice
from causalvote.validity import choice_relation, classify_input
from causalvote.vote_model import ModelParams, PartyStatus, allowed_table

p = ModelParams(5)
table = allowed_table(p)
print(f"n={p.n}, threshold={p.threshold}, allowed assignments: {len(table)}")

# how many allowed assignments elect nobody, a chancellor only, or both titles
kinds = Counter(
    "both" if (row == PartyStatus.PRESIDENT).any()
    else "chancellor" if (row == PartyStatus.CHANCELLOR).any()
    else "nobody"
    for row in table.statuses
)
print(dict(kinds))

# %% parties 2, 3 and 4 back party 1, who names party 5 (0-indexed below)
choices = (
    BifurcationChoice(2, 4),
    BifurcationChoice(0, 2),
    BifurcationChoice(0, 3),
    BifurcationChoice(0, 4),
    BifurcationChoice(1, 2),
)
print("scenario:", classify_input(choices, p))

graph = build_gamma(p)
rel = choice_relation(graph)
out = rel(choices)
print("choice relation:", [j.status.short for j in out.j], "row", out.row)

# %% the same input pushed through the composed channels
(results,) = execute_choices(graph, [choices])
for r in results:
    print("composed process:", r.to_json())
assert results[0].aux == out.j and results[0].row == out.row
