"""
Markovian bisimilarity and its run-based forward/backward variants.

All three relations work on the forward moves of an action-labelled CTMC;
backward moves are the same edges traversed the other way and never enter
the comparison.

``mb_equivalent`` is exact (partition refinement to a fixpoint). The
run-based relations live on the infinite set of runs, so ``fbmb_check``
refines the runs of length at most ``k`` and reports the depth it reached.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

from .markov import Ctmc, build_ctmc
from .semantics import DEFAULT_MAX_STATES, EQUAL, FORWARD
from .syntax import Term

__all__ = [
    "RatedLts", "Run", "Partition", "BisimVerdict",
    "rate_to_class", "mb_partition", "mb_equivalent", "fbmb_check",
    "ftabmb_equivalent", "run_bisim_check", "colored_trace", "runs_of",
    "rateo", "ratei", "transi", "mb_rounds",
]

RATE_TOL = 1e-12


@dataclass
class RatedLts:
    """Forward fragment of an action-labelled CTMC: moves are ``(source, action, rate, target)``."""
    states: list
    moves: list
    initial: int = 0

    def __post_init__(self):
        self.moves = [tuple(m) for m in self.moves]
        n = len(self.states)
        for s, a, r, t in self.moves:
            if not r > 0:
                raise ValueError(f"move {(s, a, r, t)} has a nonpositive rate")
            if not (0 <= s < n and 0 <= t < n):
                raise ValueError(f"move {(s, a, r, t)} refers to an unknown state")
        self._out = [[] for _ in range(n)]
        for m in self.moves:
            self._out[m[0]].append(m)

    @property
    def n(self) -> int:
        return len(self.states)

    def out(self, s: int) -> list:
        return self._out[s]

    @classmethod
    def from_ctmc(cls, c: Ctmc) -> "RatedLts":
        return cls([c.state_name(i) for i in range(c.n)],
                   [(m.source, m.action, m.rate, m.target) for m in c.moves if m.direction == FORWARD],
                   c.initial)

    @classmethod
    def from_term(cls, t: Term, max_states: int = DEFAULT_MAX_STATES) -> "RatedLts":
        c = build_ctmc(t, EQUAL, max_states)
        if c.truncated:
            raise RuntimeError("state space truncated; bisimulation needs the full chain")
        return cls.from_ctmc(c)


@dataclass
class Partition:
    blocks: list            # list of frozensets of carrier elements

    def block_of(self) -> dict:
        return {x: i for i, b in enumerate(self.blocks) for x in b}

    def as_set(self) -> frozenset:
        return frozenset(frozenset(b) for b in self.blocks)

    def to_json(self, name=str) -> dict:
        return {f"B{i}": sorted(name(x) for x in b) for i, b in enumerate(self.blocks)}


@dataclass
class BisimVerdict:
    relation: str
    equivalent: bool
    depth: Optional[int] = None          # run-based relations only
    witness: Optional[tuple] = None      # (action, block, rate of side 1, rate of side 2, ...)
    partition: Optional[Partition] = None

    def __bool__(self) -> bool:
        return self.equivalent

    def describe(self) -> str:
        if self.depth is None:
            head = f"{self.relation}: {'equivalent' if self.equivalent else 'distinguished'}"
        elif self.equivalent:
            head = f"{self.relation}: equivalent-up-to-depth {self.depth}"
        else:
            head = f"{self.relation}: distinguished at {self.depth}"
        if self.witness and not self.equivalent:
            head += f" (witness {self.witness})"
        return head


def rate_to_class(lts: RatedLts, s: int, action: str, block) -> float:
    """Multiset sum of rates of ``action``-moves from ``s`` into ``block``."""
    return math.fsum(r for _, a, r, t in lts.out(s) if a == action and t in block)


# --------------------------------------------------------------------------
# Generic signature refinement
# --------------------------------------------------------------------------

def _close(x: float, y: float, tol: float) -> bool:
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


def _same(sig1: dict, sig2: dict, tol: float) -> bool:
    if sig1.keys() != sig2.keys():
        return False
    return all(_close(sig1[k], sig2[k], tol) for k in sig1)


def _refinement_rounds(n: int, signature, tol: float):
    """Yield the partition after each refinement round until it is stable.

    ``signature(x, block)`` maps an element to a dict of reals; elements of
    one block stay together iff their signatures agree within ``tol``.
    """
    block = [0] * n
    count = 1
    while True:
        sigs = [signature(x, block) for x in range(n)]
        groups = {}             # old block -> [(representative signature, new id)]
        new_block = [0] * n
        next_id = 0
        for x in range(n):
            reps = groups.setdefault(block[x], [])
            for rep_sig, bid in reps:
                if _same(rep_sig, sigs[x], tol):
                    new_block[x] = bid
                    break
            else:
                reps.append((sigs[x], next_id))
                new_block[x] = next_id
                next_id += 1
        block = new_block
        yield block
        if next_id == count:
            return
        count = next_id


def _refine(n: int, signature, tol: float) -> list:
    block = [0] * n
    for block in _refinement_rounds(n, signature, tol):
        pass
    return block


def _witness(sig1: dict, sig2: dict, tol: float):
    for key in sorted(set(sig1) | set(sig2), key=repr):
        a, b = sig1.get(key, 0.0), sig2.get(key, 0.0)
        if not _close(a, b, tol):
            return key + (a, b)
    return None


# --------------------------------------------------------------------------
# Markovian bisimilarity on states
# --------------------------------------------------------------------------

def _union(l1: RatedLts, l2: RatedLts):
    carrier = [(0, s) for s in range(l1.n)] + [(1, s) for s in range(l2.n)]
    out = [[(a, r, t) for _, a, r, t in l1.out(s)] for s in range(l1.n)]
    out += [[(a, r, t + l1.n) for _, a, r, t in l2.out(s)] for s in range(l2.n)]
    return carrier, out


def _mb_signature(out):
    def sig(x, block):
        d = {}
        for a, r, t in out[x]:
            k = (a, block[t])
            d[k] = d.get(k, 0.0) + r
        return d
    return sig


def _blocks_to_partition(carrier, block) -> Partition:
    groups = {}
    for x, b in zip(carrier, block):
        groups.setdefault(b, set()).add(x)
    return Partition([frozenset(groups[b]) for b in sorted(groups)])


def mb_partition(lts: RatedLts, tol: float = RATE_TOL) -> Partition:
    """Coarsest Markovian bisimulation on the states of one system."""
    out = [[(a, r, t) for _, a, r, t in lts.out(s)] for s in range(lts.n)]
    block = _refine(lts.n, _mb_signature(out), tol)
    return _blocks_to_partition(list(range(lts.n)), block)


def mb_equivalent(l1: RatedLts, l2: RatedLts, tol: float = RATE_TOL) -> BisimVerdict:
    """Markovian bisimilarity of the two initial states.

    The partition is over the disjoint union; carrier elements are
    ``(0, state)`` and ``(1, state)``.
    """
    carrier, out = _union(l1, l2)
    sig = _mb_signature(out)
    block = _refine(len(carrier), sig, tol)
    i1, i2 = l1.initial, l2.initial + l1.n
    eq = block[i1] == block[i2]
    witness = None if eq else _witness(sig(i1, block), sig(i2, block), tol)
    return BisimVerdict("mb", eq, None, witness, _blocks_to_partition(carrier, block))


def mb_rounds(l1: RatedLts, l2: RatedLts, tol: float = RATE_TOL) -> Optional[int]:
    """Refinement round in which the two initial states separate (None if never)."""
    carrier, out = _union(l1, l2)
    i1, i2 = l1.initial, l2.initial + l1.n
    for k, block in enumerate(_refinement_rounds(len(carrier), _mb_signature(out), tol), 1):
        if block[i1] != block[i2]:
            return k
    return None


# --------------------------------------------------------------------------
# Runs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Run:
    origin: int
    path: tuple = ()        # ((state, action, rate, state), ...)

    @property
    def first(self) -> int:
        return self.origin

    @property
    def last(self) -> int:
        return self.path[-1][3] if self.path else self.origin

    def __len__(self) -> int:
        return len(self.path)

    def extend(self, move) -> "Run":
        if move[0] != self.last:
            raise ValueError("move does not continue the run")
        return Run(self.origin, self.path + (tuple(move),))


def runs_of(lts: RatedLts, depth: int, origin: Optional[int] = None) -> list:
    """All runs of length <= ``depth`` from ``origin``, shortest first."""
    origin = lts.initial if origin is None else origin
    level = [Run(origin)]
    out = list(level)
    for _ in range(depth):
        level = [r.extend(m) for r in level for m in lts.out(r.last)]
        out += level
    return out


def rateo(lts: RatedLts, run: Run, action: str, block) -> float:
    """Total rate of run transitions from ``run`` into ``block`` (a set of runs) via ``action``."""
    return math.fsum(m[2] for m in lts.out(run.last) if m[1] == action and run.extend(m) in block)


def ratei(run: Run, action: str, block) -> float:
    """Total rate of run transitions into ``run`` from ``block`` via ``action``.

    A run has at most one incoming run transition, from its immediate prefix.
    """
    if not run.path:
        return 0.0
    _, a, r, _ = run.path[-1]
    return r if a == action and Run(run.origin, run.path[:-1]) in block else 0.0


def transi(run: Run, action: str, block) -> int:
    return 1 if ratei(run, action, block) > 0 else 0


def _run_carrier(systems, depth):
    runs = []          # (system index, Run)
    parent = []        # index of immediate prefix run, or -1
    children = []      # list of (child index, action, rate)
    for sysid, lts in enumerate(systems):
        base = len(runs)
        runs.append((sysid, Run(lts.initial)))
        parent.append(-1)
        children.append([])
        frontier = [base]
        for _ in range(depth):
            nxt = []
            for ridx in frontier:
                run = runs[ridx][1]
                for m in lts.out(run.last):
                    runs.append((sysid, run.extend(m)))
                    parent.append(ridx)
                    children.append([])
                    children[ridx].append((len(runs) - 1, m[1], m[2]))
                    nxt.append(len(runs) - 1)
            frontier = nxt
    return runs, parent, children


def run_bisim_check(l1: RatedLts, l2: RatedLts, depth: int, incoming: str = "rate",
                    tol: float = RATE_TOL):
    """Refine runs of length <= ``depth`` from both initial states.

    ``incoming`` is ``"rate"`` (total incoming rate, fbmb) or ``"exists"``
    (0/1 existence of an incoming run transition, ftabmb). Runs of maximal
    length are compared on incoming moves only. Returns ``(equal, witness,
    blocks, runs)``.
    """
    runs, parent, children = _run_carrier((l1, l2), depth)

    def sig(x, block):
        d = {}
        run = runs[x][1]
        if len(run) < depth:
            for c, a, r in children[x]:
                k = ("out", a, block[c])
                d[k] = d.get(k, 0.0) + r
        else:
            d[("frontier",)] = 1.0
        if parent[x] >= 0:
            _, a, r, _ = run.path[-1]
            d[("in", a, block[parent[x]])] = r if incoming == "rate" else 1.0
        return d

    block = _refine(len(runs), sig, tol)
    root2 = next(i for i, (s, r) in enumerate(runs) if s == 1 and not r.path)
    eq = block[0] == block[root2]
    witness = None if eq else _witness(sig(0, block), sig(root2, block), tol)
    return eq, witness, block, runs


def fbmb_check(l1: RatedLts, l2: RatedLts, depth: int, tol: float = RATE_TOL) -> BisimVerdict:
    """Bounded forward-and-backward Markovian bisimilarity.

    Tries depths 1..``depth`` and reports the first at which the initial runs
    are separated, or ``equivalent-up-to-depth``.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    for d in range(1, depth + 1):
        eq, witness, _, _ = run_bisim_check(l1, l2, d, "rate", tol)
        if not eq:
            return BisimVerdict("fbmb", False, d, witness)
    return BisimVerdict("fbmb", True, depth)


def ftabmb_equivalent(l1: RatedLts, l2: RatedLts, audit_depth: int = 4,
                      tol: float = RATE_TOL) -> BisimVerdict:
    """Forward and time-abstract backward Markovian bisimilarity.

    Decided through Markovian bisimilarity, with which it coincides. The
    run-based refinement to ``audit_depth`` is run alongside; a disagreement
    that the depth bound cannot explain raises ``AssertionError``.
    """
    if audit_depth < 1:
        raise ValueError("audit depth must be at least 1")
    mb = mb_equivalent(l1, l2, tol)
    runs_eq, witness, _, _ = run_bisim_check(l1, l2, audit_depth, "exists", tol)
    if mb.equivalent and not runs_eq:
        raise AssertionError(f"ftabmb audit separates mb-equivalent states (witness {witness})")
    if not mb.equivalent and runs_eq:
        rounds = mb_rounds(l1, l2, tol)
        if rounds is not None and rounds <= audit_depth:
            raise AssertionError("ftabmb audit misses a distinction found by mb within the audit depth")
    return BisimVerdict("ftabmb", mb.equivalent, None, mb.witness, mb.partition)


def colored_trace(run: Run, partition: Partition, system: Optional[int] = None) -> list:
    """Replace every state on the run's path by its block index.

    ``system`` selects the side (0 or 1) when the partition came from
    ``mb_equivalent``; leave it None for a single-system partition.
    """
    where = partition.block_of()

    def blk(s):
        return where[(system, s) if system is not None else s]

    return [(blk(s), a, r, blk(t)) for s, a, r, t in run.path]


def partition_to_json_text(p: Partition) -> str:
    return json.dumps(p.to_json(), indent=2)
