"""Random models for property suites and experiments."""
from __future__ import annotations

import random

from .bisim import RatedLts
from .causality import Computation
from .semantics import EQUAL, RatePolicy, all_transitions
from .syntax import NIL, Choice, Parallel, Prefix, Term, prefix_paths

ACTIONS = ("a", "b", "c")
RATES = (0.5, 1.0, 1.5, 2.0, 3.0)


def _rng(seed_or_rng) -> random.Random:
    if isinstance(seed_or_rng, random.Random):
        return seed_or_rng
    return random.Random(seed_or_rng)


def random_standard_term(rng, max_prefixes: int = 6, max_parallel: int = 2,
                         actions=ACTIONS, sync_probability: float = 0.5) -> Term:
    """A random key-free term with at most the given numbers of prefixes and parallel operators."""
    rng = _rng(rng)
    budget = rng.randint(1, max_prefixes)
    return _gen(rng, budget, rng.randint(0, max_parallel), actions, sync_probability)


def _gen(rng, n: int, npar: int, actions, sync_p) -> Term:
    if n == 0:
        return NIL
    kinds = ["prefix"]
    if n >= 2:
        kinds.append("choice")
        if npar > 0:
            kinds += ["parallel", "parallel"]
    kind = rng.choice(kinds)
    if kind == "prefix":
        return Prefix(rng.choice(actions), rng.choice(RATES), None, _gen(rng, n - 1, npar, actions, sync_p))
    k = rng.randint(1, n - 1)
    if kind == "choice":
        lpar = rng.randint(0, npar)
        return Choice(_gen(rng, k, lpar, actions, sync_p), _gen(rng, n - k, npar - lpar, actions, sync_p))
    rest = npar - 1
    lpar = rng.randint(0, rest)
    sync = frozenset(a for a in actions if rng.random() < sync_p / len(actions) * 1.5)
    return Parallel(_gen(rng, k, lpar, actions, sync_p), _gen(rng, n - k, rest - lpar, actions, sync_p), sync)


def random_sequential_term(rng, max_prefixes: int = 6, actions=ACTIONS) -> Term:
    return random_standard_term(rng, max_prefixes, 0, actions)


def random_pprime_term(rng, components: int = 2, max_prefixes: int = 4, actions=ACTIONS) -> Term:
    """Parallel composition of sequential components (parallel only at top level)."""
    rng = _rng(rng)
    t = random_sequential_term(rng, max_prefixes, actions)
    for _ in range(components - 1):
        sync = frozenset(a for a in actions if rng.random() < 0.3)
        t = Parallel(t, random_sequential_term(rng, max_prefixes, actions), sync)
    return t


def random_policy(rng, actions=ACTIONS, low: float = 0.1, high: float = 10.0) -> RatePolicy:
    """Per-action backward multipliers drawn uniformly from [low, high]."""
    rng = _rng(rng)
    return RatePolicy({a: rng.uniform(low, high) for a in actions}, rng.uniform(low, high))


def term_actions(t: Term) -> list:
    return sorted({p.action for _, p in prefix_paths(t)})


def random_computation(rng, start: Term, length: int, policy=EQUAL) -> Computation:
    """Random walk over forward and backward transitions from ``start``."""
    rng = _rng(rng)
    steps = []
    cur = start
    for _ in range(length):
        options = all_transitions(cur, policy, check=False)
        if not options:
            break
        tr = rng.choice(options)
        steps.append(tr)
        cur = tr.target
    return Computation(start, steps)


def random_rated_lts(rng, max_states: int = 8, actions=("a", "b"), max_depth: int = 3,
                     max_out: int = 3) -> RatedLts:
    """Random rooted system whose states all lie within ``max_depth`` moves of the root."""
    rng = _rng(rng)
    n = rng.randint(1, max_states)
    depth = [0] + [None] * (n - 1)
    moves = []
    for s in range(1, n):
        parents = [p for p in range(s) if depth[p] < max_depth]
        p = rng.choice(parents)
        depth[s] = depth[p] + 1
        moves.append((p, rng.choice(actions), rng.choice(RATES), s))
    for _ in range(rng.randint(0, n)):
        s = rng.randrange(n)
        if sum(1 for m in moves if m[0] == s) < max_out:
            moves.append((s, rng.choice(actions), rng.choice(RATES), rng.randrange(n)))
    return RatedLts([f"q{i}" for i in range(n)], moves, 0)


def bisimilar_variant(rng, lts: RatedLts) -> RatedLts:
    """A Markovian-bisimilar copy: states permuted, some moves split, some states duplicated."""
    rng = _rng(rng)
    n = lts.n
    # duplicate a random subset of states; the copy inherits all outgoing moves
    dup = [s for s in range(n) if rng.random() < 0.3]
    copy_of = {s: n + k for k, s in enumerate(dup)}
    total = n + len(dup)
    moves = []
    for s, a, r, t in lts.moves:
        for src in [s] + ([copy_of[s]] if s in copy_of else []):
            tgt = copy_of[t] if t in copy_of and rng.random() < 0.5 else t
            if rng.random() < 0.3:
                # split into two moves whose rates sum to r, possibly towards copies
                frac = rng.choice((0.25, 0.5))
                tgt2 = copy_of.get(t, t) if rng.random() < 0.5 else t
                moves += [(src, a, r * frac, tgt), (src, a, r * (1 - frac), tgt2)]
            else:
                moves.append((src, a, r, tgt))
    perm = list(range(total))
    rng.shuffle(perm)
    inv_names = [None] * total
    for old, new in enumerate(perm):
        inv_names[new] = f"p{old}"
    moved = [(perm[s], a, r, perm[t]) for s, a, r, t in moves]
    rng.shuffle(moved)
    return RatedLts(inv_names, moved, perm[lts.initial])


def perturbed_variant(rng, lts: RatedLts) -> RatedLts:
    """Copy of ``lts`` with one move's rate or action changed."""
    rng = _rng(rng)
    if not lts.moves:
        return RatedLts(["x0", "x1"], [(0, "a", 1.0, 1)], 0)
    moves = list(lts.moves)
    k = rng.randrange(len(moves))
    s, a, r, t = moves[k]
    if rng.random() < 0.5:
        moves[k] = (s, a, r + rng.choice((0.5, 1.0)), t)
    else:
        moves[k] = (s, "z", r, t)
    return RatedLts(list(lts.states), moves, lts.initial)
