"""
Causal structure of computations: causal sets, conflict and concurrency of
coinitial transitions, diamond completion, parabolic normal forms, and
causal equivalence.

Steps of a computation are identified across rewrites by their *event*
(direction, action, fired prefix paths). Because transitions never change
the shape of a term, an event names the same prefixes in every state, and a
rewritten computation is rebuilt by replaying its events from the start.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .semantics import (
    EQUAL, FORWARD, Transition, backward_transitions, canonical, forward_transitions,
)
from .syntax import Choice, Nil, Prefix, Term, format_term, keys_of, subterm

__all__ = [
    "causal_set", "conflicting", "concurrent", "find_diamond", "complete_diamond",
    "Computation", "replay", "normalize_parabolic", "causally_equivalent",
    "rewrite_equivalent", "NotCoinitialError", "DiamondError",
]


class NotCoinitialError(ValueError):
    pass


class DiamondError(RuntimeError):
    pass


def causal_set(t: Term, i: int) -> frozenset:
    """Keys of ``t`` that caused key ``i``."""
    if isinstance(t, Nil):
        return frozenset()
    if isinstance(t, Prefix):
        if t.key is None:
            return frozenset()
        if t.key == i or i not in keys_of(t.continuation):
            return frozenset()
        return frozenset({t.key}) | causal_set(t.continuation, i)
    return causal_set(t.left, i) | causal_set(t.right, i)


def _check_coinitial(t1: Transition, t2: Transition) -> None:
    if t1.source != t2.source:
        raise NotCoinitialError("transitions do not share a source")


def _undoes_a_cause(fw: Transition, bk: Transition) -> bool:
    return bk.label.key in causal_set(fw.target, fw.label.key)


def _split_at_choice(source: Term, p1: tuple, p2: tuple) -> bool:
    n = 0
    while n < len(p1) and n < len(p2) and p1[n] == p2[n]:
        n += 1
    if n == len(p1) or n == len(p2):
        return False
    return isinstance(subterm(source, p1[:n]), Choice)


def conflicting(t1: Transition, t2: Transition) -> bool:
    """True iff two coinitial transitions are in conflict.

    Conflicts: a backward step undoing a cause of a forward step's key; two
    forward steps coming from the two operands of one choice; two forward
    steps firing a common prefix (competing synchronizations).
    """
    _check_coinitial(t1, t2)
    if t1.is_forward and not t2.is_forward:
        return _undoes_a_cause(t1, t2)
    if t2.is_forward and not t1.is_forward:
        return _undoes_a_cause(t2, t1)
    if not t1.is_forward:
        return False
    if set(t1.provenance) & set(t2.provenance):
        return True
    return any(_split_at_choice(t1.source, p1, p2) for p1 in t1.provenance for p2 in t2.provenance)


def concurrent(t1: Transition, t2: Transition) -> bool:
    return not conflicting(t1, t2)


def _find_event(t: Term, event: tuple, policy) -> Optional[Transition]:
    direction = event[0]
    candidates = forward_transitions(t, check=False) if direction == FORWARD else \
        backward_transitions(t, policy, check=False)
    for tr in candidates:
        if tr.event == event:
            return tr
    return None


def find_diamond(t1: Transition, t2: Transition, policy=EQUAL):
    """Search for cofinal completions ``(t2', t1')`` of a coinitial pair.

    ``t2'`` leaves ``t1.target`` firing the same prefixes as ``t2``; ``t1'``
    leaves ``t2.target`` firing those of ``t1``. Returns None when either is
    missing or their targets differ up to key renaming.
    """
    _check_coinitial(t1, t2)
    t2p = _find_event(t1.target, t2.event, policy)
    t1p = _find_event(t2.target, t1.event, policy)
    if t2p is None or t1p is None:
        return None
    if canonical(t2p.target) != canonical(t1p.target):
        return None
    return t2p, t1p


def complete_diamond(t1: Transition, t2: Transition, policy=EQUAL):
    if conflicting(t1, t2):
        raise ValueError("transitions are in conflict; no diamond is expected")
    found = find_diamond(t1, t2, policy)
    if found is None:
        raise DiamondError(f"no diamond for concurrent pair {t1} / {t2}")
    return found


# --------------------------------------------------------------------------
# Computations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Computation:
    start: Term
    steps: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        prev = self.start
        for k, st in enumerate(self.steps):
            if st.source != prev:
                raise ValueError(f"step {k} is not composable with its predecessor")
            prev = st.target

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def end(self) -> Term:
        return self.steps[-1].target if self.steps else self.start

    @property
    def events(self) -> tuple:
        return tuple(s.event for s in self.steps)

    def is_valid(self, policy=EQUAL) -> bool:
        """Every step is a transition derivable from its source."""
        for st in self.steps:
            if st.is_forward:
                try:
                    options = forward_transitions(st.source, key=st.label.key)
                except ValueError:
                    return False
            else:
                options = backward_transitions(st.source, policy)
            if st not in options:
                return False
        return True

    def is_parabolic(self) -> bool:
        seen_forward = False
        for st in self.steps:
            if st.is_forward:
                seen_forward = True
            elif seen_forward:
                return False
        return True

    def to_json(self) -> dict:
        return {"start": format_term(self.start), "steps": [s.label.to_json() for s in self.steps]}

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def replay(start: Term, events, policy=EQUAL) -> Optional[Computation]:
    """Rebuild a computation from its events; None if some step is disabled."""
    steps = []
    cur = start
    for ev in events:
        tr = _find_event(cur, ev, policy)
        if tr is None:
            return None
        steps.append(tr)
        cur = tr.target
    return Computation(start, steps)


def _is_inverse(e1: tuple, e2: tuple) -> bool:
    return e1[0] != e2[0] and e1[1:] == e2[1:]


def _swap_ok(steps, i: int, policy) -> bool:
    """Can steps i, i+1 be exchanged by one diamond?"""
    t1, t2p = steps[i], steps[i + 1]
    t2 = _find_event(t1.source, t2p.event, policy)
    if t2 is None or conflicting(t1, t2):
        return False
    found = find_diamond(t1, t2, policy)
    return found is not None and canonical(found[1].target) == canonical(t2p.target)


def normalize_parabolic(w: Computation, policy=EQUAL) -> Computation:
    """Causally equivalent computation with every backward step first.

    Cancels the leftmost adjacent inverse pair when one exists, otherwise
    swaps the leftmost forward-then-backward pair through a diamond.
    """
    events = list(w.events)
    while True:
        comp = replay(w.start, events, policy)
        if comp is None:
            raise DiamondError("rewritten computation no longer replays")
        steps = comp.steps
        for i in range(len(steps) - 1):
            if _is_inverse(steps[i].event, steps[i + 1].event):
                del events[i:i + 2]
                break
        else:
            for i in range(len(steps) - 1):
                if steps[i].is_forward and not steps[i + 1].is_forward:
                    if not _swap_ok(steps, i, policy):
                        raise DiamondError(f"forward step {steps[i]} cannot commute with {steps[i + 1]}")
                    events[i], events[i + 1] = events[i + 1], events[i]
                    break
            else:
                return comp


def causally_equivalent(w1: Computation, w2: Computation, policy=EQUAL, *,
                        audit: bool = False, budget: int = 10_000) -> bool:
    """Decide causal equivalence: coinitial and cofinal up to key renaming.

    With ``audit=True`` the verdict is cross-checked against an explicit
    rewrite search; a disagreement raises ``AssertionError``.
    """
    verdict = canonical(w1.start) == canonical(w2.start) and canonical(w1.end) == canonical(w2.end)
    if audit:
        searched = rewrite_equivalent(w1, w2, policy, budget=budget)
        if searched is not None and searched != verdict:
            raise AssertionError(f"causal equivalence audit disagrees: endpoints={verdict}, rewrites={searched}")
    return verdict


def _rewrite_closure(start: Term, events: tuple, policy, budget: int):
    seen = {events}
    queue = deque([events])
    while queue:
        ev = queue.popleft()
        comp = replay(start, ev, policy)
        steps = comp.steps
        succ = []
        for i in range(len(steps) - 1):
            if _is_inverse(ev[i], ev[i + 1]):
                succ.append(ev[:i] + ev[i + 2:])
            elif _swap_ok(steps, i, policy):
                succ.append(ev[:i] + (ev[i + 1], ev[i]) + ev[i + 2:])
        for nxt in succ:
            if nxt not in seen:
                if len(seen) >= budget:
                    return None
                seen.add(nxt)
                queue.append(nxt)
    return seen


def rewrite_equivalent(w1: Computation, w2: Computation, policy=EQUAL, *, budget: int = 10_000):
    """Search for a common rewrite of two computations.

    Rewrites are swaps of adjacent concurrent steps and cancellation of
    adjacent inverse pairs. Returns None if ``budget`` rewrite states are
    exhausted before the closures are complete.
    """
    if canonical(w1.start) != canonical(w2.start):
        return False
    start = canonical(w1.start)
    ev1, ev2 = tuple(w1.events), tuple(w2.events)
    if replay(start, ev1, policy) is None or replay(start, ev2, policy) is None:
        raise ValueError("computation does not replay from its start")
    c1 = _rewrite_closure(start, ev1, policy, budget)
    c2 = _rewrite_closure(start, ev2, policy, budget)
    if c1 is None or c2 is None:
        return None
    return not c1.isdisjoint(c2)
