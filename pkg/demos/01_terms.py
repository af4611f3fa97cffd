"""Writing, checking and normalizing terms.

A term is a tree of prefixes <action,rate>, choices (+) and parallel
compositions |[sync]|. Prefixes that have already fired carry a key [i].
"""
from rmpc.syntax import (
    canonicalize_keys, check_well_formed, format_term, keys_of, parse_model, parse_term,
)

# %% Parse and pretty-print
t = parse_term("<a,1>.<b,1.5>.0 + <c,0.7>.0")
print("parsed:", format_term(t))
print("tree:  ", t)

# %% Keys record the past
done = parse_term("<a,1>[4].<b,1.5>[9].0 + <c,0.7>.0")
print("keys:", sorted(keys_of(done)))
print("canonical keys:", format_term(canonicalize_keys(done)))

# %% Not every keyed term makes sense
for text in ["<a,1>[1].0 + <b,1>[2].0", "<a,1>[1].<b,1>[1].0", "<a,1>.<b,1>[2].0"]:
    for d in check_well_formed(parse_term(text)):
        print(f"{text:28s} -> {d}")

# %% Model files use non-recursive definitions
system, defs = parse_model("""
def A = <b1,1>.0 |[]| <b2,1>.0
def B = <b1,2>.0 + <b2,3>.0
system = A |[b1,b2]| (B |[]| B)
""")
print("protein network:", format_term(system))
