"""Conflict, concurrency, diamonds and causally equivalent computations."""
from rmpc import corpus
from rmpc.causality import (
    Computation, causal_set, causally_equivalent, complete_diamond, conflicting, normalize_parabolic,
)
from rmpc.semantics import backward_transitions, forward_transitions
from rmpc.syntax import parse_term

# %% Causes of a key
t = parse_term("<a,1>[1].(<b,1>[2].0 |[]| <c,1>[3].<d,1>[4].0)")
print("causes of key 4:", sorted(causal_set(t, 4)))

# %% Two kinds of conflict
fw, bk = forward_transitions(parse_term("<b,1>[1].<a,1>.0")) + backward_transitions(parse_term("<b,1>[1].<a,1>.0"))
print("doing a vs undoing its cause b:", conflicting(fw, bk))
left, right = forward_transitions(parse_term("<a,1>.0 + <a,1>.0"))
print("two sides of one choice:", conflicting(left, right))

# %% Concurrent steps close a diamond
ta, tb = forward_transitions(parse_term("<a,1>.0 |[]| <b,1>.0"))
tb2, ta2 = complete_diamond(ta, tb)
print("a then b:", ta, "//", tb2)
print("b then a:", tb, "//", ta2)

# %% Undoing can always be moved to the front
start = parse_term("<a,1>.0 |[]| <b,1>.0")
a = forward_transitions(start)[0]
b = [x for x in forward_transitions(a.target) if x.label.action == "b"][0]
undo_a = [x for x in backward_transitions(b.target) if x.label.action == "a"][0]
w = Computation(start, [a, b, undo_a])
n = normalize_parabolic(w)
print("computation:", [str(s.label) for s in w.steps])
print("normal form:", [str(s.label) for s in n.steps])
print("equivalent (checked by rewriting too):", causally_equivalent(w, n, audit=True))

# %% Protein network: two unbinding orders
net = corpus.load("protein")
b1 = [x for x in forward_transitions(net) if x.label.action == "b1"][0]
b2 = [x for x in forward_transitions(b1.target) if x.label.action == "b2"][0]
top = b2.target
orders = []
for first, second in [(2, 1), (1, 2)]:
    s1 = [x for x in backward_transitions(top) if x.label.key == first][0]
    s2 = [x for x in backward_transitions(s1.target) if x.label.key == second][0]
    orders.append(Computation(top, [s1, s2]))
print("both orders return to Net:", all(w.end == net for w in orders))
print("causally equivalent:", causally_equivalent(*orders, audit=True))
