"""Two-phase commit rollback and the protein network, driven like the CLI does."""
from rmpc import corpus
from rmpc.cli import _load_script, run_script
from rmpc.causality import causally_equivalent
from rmpc.semantics import canonical
from rmpc.syntax import format_term

# %% Two-phase commit: vote, abort, and roll everything back
twopc = corpus.load("twopc")
steps, _ = _load_script(str(corpus.path("twopc-abort.trace.json")))
w = run_script(twopc, steps)
for s in w.steps:
    print(s.label)
print("valid:", w.is_valid(), "| back at the start:", canonical(w.end) == canonical(twopc))

# %% More participants (state space grows quickly)
from rmpc.semantics import explore
from rmpc.syntax import parse_model
for m in (1, 2, 3):
    print(f"2PC with {m} participant(s):", len(explore(parse_model(corpus.twopc_source(m))[0]).states), "states")

# %% Protein network: bind twice, unbind in either order
net = corpus.load("protein")
runs = []
for name in ("protein-undo-21.trace.json", "protein-undo-12.trace.json"):
    s, _ = _load_script(str(corpus.path(name)))
    runs.append(run_script(net, s))
    print(name, "->", format_term(runs[-1].end) == format_term(net))
print("same computation up to causal equivalence:", causally_equivalent(*runs, audit=True))
