"""Comparing systems: Markovian bisimilarity and its run-based variants."""
from rmpc.bisim import (
    RatedLts, colored_trace, fbmb_check, ftabmb_equivalent, mb_equivalent, runs_of,
)
from rmpc.syntax import parse_term


def lts(text):
    return RatedLts.from_term(parse_term(text))


par, cho = lts("<a,1>.0 |[]| <b,2>.0"), lts("<a,1>.<b,2>.0 + <b,2>.<a,1>.0")
split, total = lts("<a,1>.0 + <a,2>.0"), lts("<a,3>.0")

# %% The expansion law holds for all three relations
print(mb_equivalent(par, cho).describe())
print(ftabmb_equivalent(par, cho).describe())
print(fbmb_check(par, cho, 4).describe())

# %% Summing rates of equal moves: fine for mb and ftabmb, not for fbmb
print(mb_equivalent(split, total).describe())
print(ftabmb_equivalent(split, total).describe())
print(fbmb_check(split, total, 3).describe())

# %% Colored traces: runs with states replaced by their classes
v = mb_equivalent(par, cho)
for side, l in enumerate((par, cho)):
    for run in runs_of(l, 2):
        if len(run) == 2:
            print(f"system {side}:", colored_trace(run, v.partition, side))
