"""
Forward and backward transitions, and state-space exploration.

Each forward step picks one representative fresh key per call, the smallest
positive integer not already used in the source term. Both premises of a
synchronization therefore see the same key. Backward steps undo an existing
key. Every transition records the AST paths of the prefixes that fired
(one path, or one per participant of a synchronization).
"""
from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .syntax import (
    Choice, IllFormedTermError, Nil, Parallel, Prefix, Term,
    canonical_key_map, check_well_formed, format_term, is_standard, keys_of,
    rename_keys,
)

log = logging.getLogger(__name__)

FORWARD = "fw"
BACKWARD = "bk"
DEFAULT_MAX_STATES = 10_000


# --------------------------------------------------------------------------
# Backward-rate policies
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RatePolicy:
    """Backward rate = multiplier(action) * forward rate.

    The default instance (no table, default 1) is the equal-rates policy.
    """
    multipliers: tuple = ()
    default: float = 1.0

    def __post_init__(self):
        if isinstance(self.multipliers, dict):
            object.__setattr__(self, "multipliers", tuple(sorted(self.multipliers.items())))
        for action, m in self.multipliers:
            if not m > 0:
                raise ValueError(f"multiplier for {action!r} must be positive, got {m}")
        if not self.default > 0:
            raise ValueError(f"default multiplier must be positive, got {self.default}")

    def multiplier(self, action: str) -> float:
        return dict(self.multipliers).get(action, self.default)

    def __call__(self, action: str, rate: float) -> float:
        return self.multiplier(action) * rate

    @property
    def is_equal(self) -> bool:
        return self.default == 1.0 and all(m == 1.0 for _, m in self.multipliers)

    @classmethod
    def from_mapping(cls, table: dict) -> "RatePolicy":
        """Build from ``{"action": multiplier, ..., "default": m}``."""
        table = dict(table)
        default = float(table.pop("default", 1.0))
        return cls({a: float(m) for a, m in table.items()}, default)

    def to_mapping(self) -> dict:
        out = dict(self.multipliers)
        out["default"] = self.default
        return out


EQUAL = RatePolicy()

Policy = Callable[[str, float], float]


# --------------------------------------------------------------------------
# Transitions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionLabel:
    direction: str
    action: str
    rate: float
    key: int

    def __post_init__(self):
        if self.direction not in (FORWARD, BACKWARD):
            raise ValueError(f"direction must be {FORWARD!r} or {BACKWARD!r}")
        if not self.rate > 0:
            raise ValueError("label rate must be positive")

    @property
    def is_forward(self) -> bool:
        return self.direction == FORWARD

    def __str__(self) -> str:
        arrow = "->" if self.is_forward else "~>"
        return f"{arrow}<{self.action},{self.rate:g}>[{self.key}]"

    def to_json(self) -> dict:
        return {"direction": self.direction, "action": self.action, "rate": self.rate, "key": self.key}


@dataclass(frozen=True)
class Transition:
    source: Term
    label: TransitionLabel
    target: Term
    provenance: tuple = field(default=())   # sorted tuple of AST paths

    @property
    def is_forward(self) -> bool:
        return self.label.is_forward

    @property
    def event(self) -> tuple:
        """Key-independent identity of the step: direction, action, fired prefixes."""
        return (self.label.direction, self.label.action, self.provenance)

    def __str__(self) -> str:
        return f"{format_term(self.source)} {self.label} {format_term(self.target)}"


def fresh_key(t: Term) -> int:
    used = keys_of(t)
    k = 1
    while k in used:
        k += 1
    return k


def _require_well_formed(t: Term) -> None:
    diags = check_well_formed(t)
    if diags:
        raise IllFormedTermError(diags)


def _shift(paths, step):
    return tuple((step,) + p for p in paths)


def _fw(t: Term, key: int) -> list:
    """Forward derivations as (action, rate, target, paths)."""
    if isinstance(t, Nil):
        return []
    if isinstance(t, Prefix):
        if t.key is None:
            # Act1
            if is_standard(t.continuation):
                return [(t.action, t.rate, Prefix(t.action, t.rate, key, t.continuation), ((),))]
            return []
        if key == t.key:
            return []
        # Act2
        return [(a, r, Prefix(t.action, t.rate, t.key, tgt), _shift(ps, 0))
                for a, r, tgt, ps in _fw(t.continuation, key)]
    if isinstance(t, Choice):
        out = []
        if is_standard(t.right):
            out += [(a, r, Choice(tgt, t.right), _shift(ps, 0)) for a, r, tgt, ps in _fw(t.left, key)]
        if is_standard(t.left):
            out += [(a, r, Choice(t.left, tgt), _shift(ps, 1)) for a, r, tgt, ps in _fw(t.right, key)]
        return out
    # Parallel
    left, right = _fw(t.left, key), _fw(t.right, key)
    out = []
    right_keys, left_keys = keys_of(t.right), keys_of(t.left)
    for a, r, tgt, ps in left:
        if a not in t.sync and key not in right_keys:
            out.append((a, r, Parallel(tgt, t.right, t.sync), _shift(ps, 0)))
    for a, r, tgt, ps in right:
        if a not in t.sync and key not in left_keys:
            out.append((a, r, Parallel(t.left, tgt, t.sync), _shift(ps, 1)))
    # Coo
    for a, r, ltgt, lps in left:
        if a not in t.sync:
            continue
        for b, s, rtgt, rps in right:
            if b == a:
                out.append((a, r * s, Parallel(ltgt, rtgt, t.sync), _shift(lps, 0) + _shift(rps, 1)))
    return out


def _bk(t: Term, policy: Policy) -> list:
    """Backward derivations as (action, backward rate, key, target, paths)."""
    if isinstance(t, Nil):
        return []
    if isinstance(t, Prefix):
        if t.key is None:
            return []
        if is_standard(t.continuation):
            # Act1r
            return [(t.action, policy(t.action, t.rate), t.key,
                     Prefix(t.action, t.rate, None, t.continuation), ((),))]
        # Act2r
        return [(a, r, k, Prefix(t.action, t.rate, t.key, tgt), _shift(ps, 0))
                for a, r, k, tgt, ps in _bk(t.continuation, policy) if k != t.key]
    if isinstance(t, Choice):
        out = []
        if is_standard(t.right):
            out += [(a, r, k, Choice(tgt, t.right), _shift(ps, 0)) for a, r, k, tgt, ps in _bk(t.left, policy)]
        if is_standard(t.left):
            out += [(a, r, k, Choice(t.left, tgt), _shift(ps, 1)) for a, r, k, tgt, ps in _bk(t.right, policy)]
        return out
    left, right = _bk(t.left, policy), _bk(t.right, policy)
    right_keys, left_keys = keys_of(t.right), keys_of(t.left)
    out = []
    for a, r, k, tgt, ps in left:
        if a not in t.sync and k not in right_keys:
            out.append((a, r, k, Parallel(tgt, t.right, t.sync), _shift(ps, 0)))
    for a, r, k, tgt, ps in right:
        if a not in t.sync and k not in left_keys:
            out.append((a, r, k, Parallel(t.left, tgt, t.sync), _shift(ps, 1)))
    for a, r, k, ltgt, lps in left:
        if a not in t.sync:
            continue
        for b, s, j, rtgt, rps in right:
            if b == a and j == k:
                out.append((a, r * s, k, Parallel(ltgt, rtgt, t.sync), _shift(lps, 0) + _shift(rps, 1)))
    return out


def forward_transitions(t: Term, key: Optional[int] = None, *, check: bool = True) -> list:
    """All forward transitions of ``t``, one per bundle.

    ``key`` overrides the fresh-key choice; it must not already occur in ``t``.
    """
    if check:
        _require_well_formed(t)
    if key is None:
        key = fresh_key(t)
    elif key in keys_of(t):
        raise ValueError(f"key {key} is not fresh in {format_term(t)}")
    return [Transition(t, TransitionLabel(FORWARD, a, r, key), tgt, tuple(sorted(ps)))
            for a, r, tgt, ps in _fw(t, key)]


def backward_transitions(t: Term, policy: Policy = EQUAL, *, check: bool = True) -> list:
    if check:
        _require_well_formed(t)
    return [Transition(t, TransitionLabel(BACKWARD, a, r, k), tgt, tuple(sorted(ps)))
            for a, r, k, tgt, ps in _bk(t, policy)]


def all_transitions(t: Term, policy: Policy = EQUAL, *, check: bool = True) -> list:
    """Forward transitions then backward ones, each in leftmost-derivation order."""
    if check:
        _require_well_formed(t)
    return forward_transitions(t, check=False) + backward_transitions(t, policy, check=False)


def canonical(t: Term) -> Term:
    """Key-canonical form of a term already known to be well formed."""
    return rename_keys(t, canonical_key_map(t))


# --------------------------------------------------------------------------
# Exploration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LtsEdge:
    source: int
    transition: Transition
    target: int


@dataclass
class Lts:
    """Explored transition system over key-canonical states.

    ``edges[k].transition`` is derived from ``states[edges[k].source]``; its raw
    target equals ``states[edges[k].target]`` up to key renaming.
    """
    initial: Term
    states: list
    edges: list
    truncated: bool = False
    diagnostics: list = field(default_factory=list)

    @property
    def transitions(self) -> list:
        return [e.transition for e in self.edges]

    def index(self, t: Term) -> int:
        return self._index[canonical(t)]

    def __post_init__(self):
        self._index = {s: i for i, s in enumerate(self.states)}

    def forward_edges(self) -> list:
        return [e for e in self.edges if e.transition.is_forward]

    def backward_edges(self) -> list:
        return [e for e in self.edges if not e.transition.is_forward]

    def to_json(self) -> dict:
        return {
            "initial": 0,
            "truncated": self.truncated,
            "states": [format_term(s) for s in self.states],
            "transitions": [
                {"source": e.source, "target": e.target, **e.transition.label.to_json(),
                 "provenance": [list(p) for p in e.transition.provenance]}
                for e in self.edges
            ],
        }

    def to_dot(self) -> str:
        lines = ["digraph lts {", "  rankdir=LR;", '  node [shape=box, fontname="monospace"];']
        for i, s in enumerate(self.states):
            text = format_term(s).replace('"', '\\"')
            extra = ", penwidth=2" if i == 0 else ""
            lines.append(f'  s{i} [label="{text}"{extra}];')
        for e in self.edges:
            lab = e.transition.label
            style = "solid" if lab.is_forward else "dashed"
            lines.append(f'  s{e.source} -> s{e.target} [label="{lab.action},{lab.rate:g}", style={style}];')
        lines.append("}")
        return "\n".join(lines)


def explore(t0: Term, policy: Policy = EQUAL, max_states: int = DEFAULT_MAX_STATES) -> Lts:
    """Breadth-first closure of ``all_transitions`` over key-canonical states.

    Stops adding states once ``max_states`` are known; the result is then
    flagged ``truncated`` and carries a diagnostic.
    """
    if max_states < 1:
        raise ValueError("max_states must be positive")
    _require_well_formed(t0)
    start = canonical(t0)
    states = [start]
    index = {start: 0}
    edges = []
    truncated = False
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for tr in all_transitions(states[i], policy, check=False):
            tgt = canonical(tr.target)
            j = index.get(tgt)
            if j is None:
                if len(states) >= max_states:
                    truncated = True
                    continue
                j = len(states)
                index[tgt] = j
                states.append(tgt)
                queue.append(j)
            edges.append(LtsEdge(i, tr, j))
    diagnostics = []
    if truncated:
        msg = f"state limit {max_states} reached; exploration truncated"
        log.warning(msg)
        diagnostics.append(msg)
    return Lts(start, states, edges, truncated, diagnostics)


def lts_to_json_text(lts: Lts) -> str:
    return json.dumps(lts.to_json(), indent=2)
