"""
The action-labelled CTMC underlying a term, and its numerical analysis.

States are key-canonical terms; each explored transition becomes one move
with its key dropped. The generator sums the rates of all moves between two
states regardless of action or direction.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import connected_components

from .semantics import BACKWARD, DEFAULT_MAX_STATES, EQUAL, FORWARD, canonical, explore
from .syntax import Choice, Nil, Parallel, Prefix, Term, format_term, has_parallel, is_standard

__all__ = [
    "Move", "Ctmc", "SteadyState", "ReversibilityReport", "ProductFormReport",
    "TruncatedChainError", "NotErgodicError",
    "build_ctmc", "state_metrics", "is_ergodic", "steady_state",
    "check_time_reversibility", "reverse_ctmc", "classify_syntax",
    "check_product_form", "forward_tree_check",
]

DEFAULT_TOL = 1e-9
DEFAULT_CYCLE_BOUND = 6


class TruncatedChainError(RuntimeError):
    pass


class NotErgodicError(ValueError):
    pass


@dataclass(frozen=True)
class Move:
    source: int
    direction: str
    action: str
    rate: float
    target: int


@dataclass
class Ctmc:
    """Finite action-labelled CTMC.

    ``states`` may be terms (for chains built from a model) or any labels
    (for hand-built chains).
    """
    states: list
    moves: list
    initial: int = 0
    truncated: bool = False

    def __post_init__(self):
        n = len(self.states)
        for m in self.moves:
            if not (0 <= m.source < n and 0 <= m.target < n):
                raise ValueError(f"move {m} refers to an unknown state")
            if not m.rate > 0:
                raise ValueError(f"move {m} has a nonpositive rate")
        self._generator = None

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def generator(self) -> np.ndarray:
        if self._generator is None:
            q = np.zeros((self.n, self.n))
            for m in self.moves:
                if m.source != m.target:
                    q[m.source, m.target] += m.rate
            np.fill_diagonal(q, 0.0)
            np.fill_diagonal(q, -q.sum(axis=1))
            self._generator = q
        return self._generator

    @classmethod
    def from_moves(cls, states, moves, initial=0) -> "Ctmc":
        """Hand-built chain from ``(source, direction, action, rate, target)`` tuples.

        Sources and targets may be state labels or indices.
        """
        states = list(states)
        index = {s: i for i, s in enumerate(states)}

        def idx(x):
            return index[x] if x in index else int(x)

        built = [Move(idx(s), d, a, float(r), idx(t)) for s, d, a, r, t in moves]
        return cls(states, built, idx(initial))

    def state_name(self, i: int) -> str:
        s = self.states[i]
        return format_term(s) if isinstance(s, (Nil, Prefix, Choice, Parallel)) else str(s)

    def forward_moves(self) -> list:
        return [m for m in self.moves if m.direction == FORWARD]

    def to_json(self) -> dict:
        return {
            "states": [self.state_name(i) for i in range(self.n)],
            "initial": self.initial,
            "truncated": self.truncated,
            "moves": [{"source": m.source, "direction": m.direction, "action": m.action,
                       "rate": m.rate, "target": m.target} for m in self.moves],
            "generator": self.generator.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Ctmc":
        moves = [Move(m["source"], m.get("direction", FORWARD), m["action"], float(m["rate"]), m["target"])
                 for m in data["moves"]]
        return cls(list(data["states"]), moves, data.get("initial", 0))


def build_ctmc(t0: Term, policy=EQUAL, max_states: int = DEFAULT_MAX_STATES) -> Ctmc:
    """Quotient the explored transition system of ``t0`` to its CTMC."""
    lts = explore(t0, policy, max_states)
    moves = [Move(e.source, e.transition.label.direction, e.transition.label.action,
                  e.transition.label.rate, e.target) for e in lts.edges]
    return Ctmc(list(lts.states), moves, 0, lts.truncated)


def _require_complete(c: Ctmc) -> None:
    if c.truncated:
        raise TruncatedChainError("chain was truncated during exploration; numeric analysis refused")


@dataclass(frozen=True)
class StateMetrics:
    exit_rate: float
    mean_sojourn: float
    jump_probabilities: tuple    # (move, probability) pairs

    def by_action(self) -> dict:
        out = {}
        for m, p in self.jump_probabilities:
            out[m.action] = out.get(m.action, 0.0) + p
        return out


def state_metrics(c: Ctmc, s: int) -> StateMetrics:
    """Exit rate, mean sojourn time and jump probabilities of state ``s``."""
    out = [m for m in c.moves if m.source == s]
    exit_rate = math.fsum(m.rate for m in out)
    if exit_rate == 0:
        return StateMetrics(0.0, math.inf, ())
    return StateMetrics(exit_rate, 1.0 / exit_rate, tuple((m, m.rate / exit_rate) for m in out))


def is_ergodic(c: Ctmc) -> bool:
    """True iff the move graph is a single strongly connected component."""
    if c.n <= 1:
        return True
    adj = (c.generator != 0).astype(np.int8)
    np.fill_diagonal(adj, 0)
    ncomp, _ = connected_components(adj, directed=True, connection="strong")
    return ncomp == 1


@dataclass(frozen=True)
class SteadyState:
    probabilities: np.ndarray
    residual: float

    def __getitem__(self, i):
        return self.probabilities[i]

    def __len__(self):
        return len(self.probabilities)

    def to_csv(self, c: Ctmc) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["state", "probability"])
        for i, p in enumerate(self.probabilities):
            w.writerow([c.state_name(i), repr(float(p))])
        return buf.getvalue()


def steady_state(c: Ctmc, tol: float = DEFAULT_TOL) -> SteadyState:
    """Solve pi Q = 0 with sum(pi) = 1 by a dense direct solve.

    The last balance equation is replaced by the normalisation constraint.
    """
    _require_complete(c)
    if not is_ergodic(c):
        raise NotErgodicError("chain is not irreducible; steady state is not unique")
    n = c.n
    if n == 1:
        return SteadyState(np.ones(1), 0.0)
    q = c.generator
    a = q.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as err:
        raise RuntimeError("singular balance system for an ergodic chain") from err
    residual = float(np.max(np.abs(pi @ q)))
    if residual > tol * max(1.0, float(np.max(np.abs(q)))):
        raise RuntimeError(f"steady-state residual {residual:.3g} exceeds tolerance {tol:g}")
    return SteadyState(pi, residual)


@dataclass
class ReversibilityReport:
    verdict: bool
    max_detailed_balance_residual: float
    failing_pairs: list = field(default_factory=list)    # (s, s', pi(s)q(s,s'), pi(s')q(s',s))
    failing_cycles: list = field(default_factory=list)   # (cycle, forward product, reverse product)
    cycles_checked: int = 0
    kolmogorov_verdict: bool = True

    def to_text(self, c: Optional[Ctmc] = None) -> str:
        name = c.state_name if c is not None else str
        lines = [f"time reversible: {'yes' if self.verdict else 'no'}",
                 f"max detailed-balance residual: {self.max_detailed_balance_residual:.3e}",
                 f"simple cycles checked (Kolmogorov): {self.cycles_checked}"]
        for s, t, lhs, rhs in self.failing_pairs:
            lines.append(f"  balance fails: pi({name(s)}) q = {lhs:.6g} vs pi({name(t)}) q = {rhs:.6g}")
        for cyc, fw, bw in self.failing_cycles:
            lines.append(f"  cycle {' -> '.join(name(s) for s in cyc)}: products {fw:.6g} vs {bw:.6g}")
        return "\n".join(lines)


def _simple_cycles(q: np.ndarray, max_len: int):
    """Simple cycles of length 3..max_len in the undirected support of ``q``."""
    g = nx.Graph()
    g.add_nodes_from(range(q.shape[0]))
    rows, cols = np.nonzero(q)
    g.add_edges_from((int(i), int(j)) for i, j in zip(rows, cols) if i != j)
    for cyc in nx.simple_cycles(g, length_bound=max_len):
        if len(cyc) >= 3:
            # fixed orientation: smallest state first, then its smaller neighbour
            k = cyc.index(min(cyc))
            cyc = cyc[k:] + cyc[:k]
            if cyc[-1] < cyc[1]:
                cyc = [cyc[0]] + cyc[:0:-1]
            yield cyc


def check_time_reversibility(c: Ctmc, pi: SteadyState, tol: float = DEFAULT_TOL,
                             max_cycle_len: int = DEFAULT_CYCLE_BOUND) -> ReversibilityReport:
    """Detailed balance on all pairs, audited by Kolmogorov's cycle criterion."""
    q = c.generator.copy()
    np.fill_diagonal(q, 0.0)
    p = np.asarray(pi.probabilities)
    flow = p[:, None] * q
    diff = np.abs(flow - flow.T)
    max_res = float(diff.max()) if c.n else 0.0
    failing_pairs = [(int(i), int(j), float(flow[i, j]), float(flow[j, i]))
                     for i, j in zip(*np.nonzero(diff > tol)) if i < j]
    failing_cycles = []
    checked = 0
    for cyc in _simple_cycles(q, max_cycle_len):
        checked += 1
        fw = math.prod(q[cyc[k], cyc[(k + 1) % len(cyc)]] for k in range(len(cyc)))
        bw = math.prod(q[cyc[(k + 1) % len(cyc)], cyc[k]] for k in range(len(cyc)))
        if abs(fw - bw) > tol * max(1.0, fw, bw):
            failing_cycles.append((cyc, fw, bw))
    failing_cycles.sort()
    verdict = max_res <= tol and not failing_cycles
    return ReversibilityReport(verdict, max_res, failing_pairs, failing_cycles, checked,
                               not failing_cycles)


def reverse_ctmc(c: Ctmc, pi: SteadyState) -> Ctmc:
    """Time-reversed chain: each move i->j becomes j->i at rate pi(i)/pi(j) * q(i,j)."""
    if not is_ergodic(c):
        raise NotErgodicError("time reversal needs an ergodic chain")
    p = pi.probabilities
    flip = {FORWARD: BACKWARD, BACKWARD: FORWARD}
    moves = [Move(m.target, flip.get(m.direction, m.direction), m.action,
                  float(p[m.source] / p[m.target] * m.rate), m.source) for m in c.moves]
    return Ctmc(list(c.states), moves, c.initial, c.truncated)


def classify_syntax(t: Term) -> str:
    """'sequential' (no parallel), 'pPrime' (parallel only outside prefix and choice) or 'general'."""
    if not has_parallel(t):
        return "sequential"

    def top_level_only(u) -> bool:
        if isinstance(u, Parallel):
            return top_level_only(u.left) and top_level_only(u.right)
        return not has_parallel(u)

    return "pPrime" if top_level_only(t) else "general"


def forward_tree_check(c: Ctmc) -> bool:
    """Forward moves form a tree rooted at the initial state, each matched by one reverse move."""
    fwd = c.forward_moves()
    if len(fwd) != c.n - 1:
        return False
    parents = {}
    for m in fwd:
        if m.target in parents or m.target == c.initial:
            return False
        parents[m.target] = m.source
    # every state reaches the root through parents
    for s in range(c.n):
        seen = set()
        while s != c.initial:
            if s in seen or s not in parents:
                return False
            seen.add(s)
            s = parents[s]
    back = [m for m in c.moves if m.direction == BACKWARD]
    return sorted((m.target, m.source) for m in back) == sorted((m.source, m.target) for m in fwd)


@dataclass
class ProductFormReport:
    holds: bool
    preconditions_ok: bool
    cartesian: bool
    max_deviation: float = math.nan
    reason: str = ""
    component_sizes: tuple = ()
    composed_size: int = 0


def check_product_form(r1: Term, r2: Term, sync=frozenset(), policy=EQUAL,
                       tol: float = DEFAULT_TOL, max_states: int = DEFAULT_MAX_STATES) -> ProductFormReport:
    """Check the product-form factorisation of the steady state of ``r1 |[sync]| r2``."""
    if not (is_standard(r1) and is_standard(r2)):
        raise ValueError("product-form check needs standard components")
    sequential = classify_syntax(r1) == "sequential" and classify_syntax(r2) == "sequential"
    equal = getattr(policy, "is_equal", False)
    preconditions_ok = equal or sequential
    c1 = build_ctmc(r1, policy, max_states)
    c2 = build_ctmc(r2, policy, max_states)
    c = build_ctmc(Parallel(r1, r2, frozenset(sync)), policy, max_states)
    for chain in (c1, c2, c):
        _require_complete(chain)
    sizes = (c1.n, c2.n)
    if not preconditions_ok:
        return ProductFormReport(False, False, False, reason="neither equal backward rates nor sequential components",
                                 component_sizes=sizes, composed_size=c.n)
    idx1 = {s: i for i, s in enumerate(c1.states)}
    idx2 = {s: i for i, s in enumerate(c2.states)}
    pairs = []
    for s in c.states:
        pairs.append((idx1.get(canonical(s.left)), idx2.get(canonical(s.right))))
    full = {(i, j) for i in range(c1.n) for j in range(c2.n)}
    cartesian = None not in {x for pr in pairs for x in pr} and len(pairs) == len(full) and set(pairs) == full
    if not cartesian:
        return ProductFormReport(False, True, False, reason="reachable states are not the full Cartesian product",
                                 component_sizes=sizes, composed_size=c.n)
    pi, p1, p2 = steady_state(c, tol), steady_state(c1, tol), steady_state(c2, tol)
    dev = max(abs(pi[k] - p1[i] * p2[j]) for k, (i, j) in enumerate(pairs))
    return ProductFormReport(bool(dev <= tol), True, True, float(dev), "" if dev <= tol else "steady state does not factorise",
                             sizes, c.n)


def ctmc_to_json_text(c: Ctmc) -> str:
    return json.dumps(c.to_json(), indent=2)
