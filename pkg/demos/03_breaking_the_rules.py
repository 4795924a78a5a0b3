"""
Breaking the rules
==================

The consistency checks are only useful if they can fail.  Here the
constraint system is weakened in two ways, and the party count is made even.
Each change breaks the requirement that every choice vector produce exactly
one outcome.
"""
from causalvote.validity import check_univocality, check_univocality_sampled, choice_relation
from causalvote.vote_model import MUTATIONS, ModelParams, allowed_table

for name, what in sorted(MUTATIONS.items()):
    p = ModelParams(5, name)
    report = check_univocality(choice_relation(p))
    d = report.details
    print(f"{name} ({what})")
    print(f"  allowed {len(allowed_table(p))}, empty {d['empty']}, multi-valued {d['multi_valued']}")

# %% even n: two parties can each collect exactly half the votes
report = check_univocality_sampled(ModelParams(6), 500, seed=1)
print("n=6 sampled:", {k: report.details[k] for k in ("inputs", "empty", "multi_valued")})
print("first counterexample:", report.counterexamples[0])
