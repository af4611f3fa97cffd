"""Forward and backward transitions, and the explored state space."""
from rmpc.semantics import RatePolicy, all_transitions, explore
from rmpc.syntax import format_term, parse_term

# %% One step at a time
t = parse_term("<a,2>.0 |[a]| <a,3>.0")
for tr in all_transitions(t):
    print("from the start:", tr)           # synchronization: rate 2 * 3
after = all_transitions(t)[0].target
for tr in all_transitions(after):
    print("and back again:", tr)

# %% Backward rates come from a policy
slow_undo = RatePolicy({"a": 0.25})
print([str(tr.label) for tr in all_transitions(parse_term("<a,2>[1].0"), slow_undo)])

# %% The interleaving diamond versus its sequential expansion
for text in ["<a,1>.0 |[]| <b,2>.0", "<a,1>.<b,2>.0 + <b,2>.<a,1>.0"]:
    lts = explore(parse_term(text))
    print(f"\n{text}: {len(lts.states)} states, "
          f"{len(lts.forward_edges())} forward / {len(lts.backward_edges())} backward")
    for i, s in enumerate(lts.states):
        print(f"  s{i} = {format_term(s)}")

# %% Graphviz export (forward solid, backward dashed)
print(explore(parse_term("<a,1>.0 |[]| <b,2>.0")).to_dot())
