"""The underlying Markov chain: steady state, time reversibility, product form."""
import json

import numpy as np

from rmpc import corpus
from rmpc.markov import (
    Ctmc, build_ctmc, check_product_form, check_time_reversibility, classify_syntax,
    forward_tree_check, reverse_ctmc, state_metrics, steady_state,
)
from rmpc.semantics import RatePolicy
from rmpc.syntax import parse_term

# %% Racing actions
c = build_ctmc(parse_term("<a,1>.0 |[]| <b,2>.0"))
m = state_metrics(c, 0)
print(f"exit rate {m.exit_rate}, mean sojourn {m.mean_sojourn:.3f}, jumps {m.by_action()}")

# %% Equal forward and backward rates: uniform and reversible
fig1 = corpus.load("fig1")
c = build_ctmc(fig1)
pi = steady_state(c)
print("pi =", np.round(pi.probabilities, 6))
print(check_time_reversibility(c, pi).to_text(c))

# %% Any backward table keeps a sequential process reversible (tree-shaped chain)
c2 = build_ctmc(fig1, RatePolicy({"c": 2.0}))
print("tree-shaped:", forward_tree_check(c2),
      "reversible:", check_time_reversibility(c2, steady_state(c2)).verdict)

# %% ...but a chain with a genuine cycle need not be
naive = Ctmc.from_json(json.loads(corpus.path("fig1-naive.ctmc.json").read_text()))
print(check_time_reversibility(naive, steady_state(naive)).to_text(naive))

# %% The reversed chain
two = build_ctmc(parse_term("<a,2>.0"), RatePolicy({"a": 2.0}))
pi2 = steady_state(two)
print("pi =", pi2.probabilities, "reversal changes nothing:",
      np.allclose(reverse_ctmc(two, pi2).generator, two.generator))

# %% Product form for independent components
rep = check_product_form(parse_term("<a,1>.0"), parse_term("<b,2>.0"))
print(f"product form holds: {rep.holds} on {rep.composed_size} states (deviation {rep.max_deviation:.1e})")

# %% The case studies
for name in ("twopc", "protein"):
    t = corpus.load(name)
    c = build_ctmc(t)
    print(f"{name}: {c.n} states, class {classify_syntax(t)}, "
          f"reversible {check_time_reversibility(c, steady_state(c)).verdict}")
