"""
Command-line front end.

    rmpc parse FILE
    rmpc explore FILE [--format text|json|dot]
    rmpc analyze FILE            (.rmpc model or .ctmc.json chain)
    rmpc bisim FILE_A FILE_B [mb|ftabmb|fbmb]
    rmpc trace FILE SCRIPT [--reference SCRIPT]
    rmpc corpus [NAME] [--participants M]

Exit codes: 0 success / property holds, 1 property fails, 2 usage, parse or
well-formedness error, 3 state limit reached. A FILE that does not exist on
disk is looked up in the bundled corpus (``rmpc parse twopc``).
"""
from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import corpus
from .bisim import RatedLts, fbmb_check, ftabmb_equivalent, mb_equivalent
from .causality import Computation, causally_equivalent
from .markov import (
    DEFAULT_CYCLE_BOUND, DEFAULT_TOL, Ctmc, NotErgodicError, build_ctmc,
    check_time_reversibility, classify_syntax, forward_tree_check, steady_state,
)
from .semantics import (
    BACKWARD, DEFAULT_MAX_STATES, EQUAL, FORWARD, RatePolicy, backward_transitions,
    canonical, explore, forward_transitions,
)
from .syntax import (
    IllFormedTermError, RmpcSyntaxError, check_well_formed, format_term, parse_model, prefix_paths,
)

EXIT_OK, EXIT_FAILS, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3

log = logging.getLogger("rmpc")


class UsageError(Exception):
    """Bad input file, script or option value; reported with exit code 2."""


class LimitReached(Exception):
    """State budget exhausted; reported with exit code 3."""


@dataclass(frozen=True)
class Config:
    policy: str = "equal"
    max_states: int = DEFAULT_MAX_STATES
    tol: float = DEFAULT_TOL
    cycle_bound: int = DEFAULT_CYCLE_BOUND
    depth: int = 4
    format: str = "text"
    seed: int = 0

    def __post_init__(self):
        for name in ("max_states", "tol", "cycle_bound", "depth"):
            if not getattr(self, name) > 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")

    @classmethod
    def from_args(cls, ns) -> "Config":
        return cls(ns.policy, ns.max_states, ns.tol, ns.cycle_bound, ns.depth, ns.format, ns.seed)

    def rate_policy(self, actions=()) -> RatePolicy:
        """Resolve ``--policy``: ``equal``, ``random`` (seeded) or a JSON table file."""
        if self.policy == "equal":
            return EQUAL
        if self.policy == "random":
            rng = random.Random(self.seed)
            return RatePolicy({a: rng.uniform(0.1, 10.0) for a in sorted(actions)}, rng.uniform(0.1, 10.0))
        path = _resolve(self.policy)
        try:
            table = json.loads(path.read_text())
            return RatePolicy.from_mapping(table)
        except (json.JSONDecodeError, TypeError, ValueError, AttributeError) as exc:
            raise UsageError(f"{self.policy}: bad policy table: {exc}") from exc


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _resolve(name: str) -> Path:
    p = Path(name)
    if p.is_file():
        return p
    try:
        return Path(str(corpus.path(name)))
    except FileNotFoundError:
        raise UsageError(f"{name}: no such file") from None


def _load_term(name: str):
    path = _resolve(name)
    try:
        t = parse_model(path.read_text())[0]
    except OSError as exc:
        raise UsageError(f"{name}: {exc}") from exc
    diags = check_well_formed(t)
    if diags:
        raise IllFormedTermError(diags)
    return t


def _is_chain_file(name: str) -> bool:
    return name.endswith(".json")


def _load_chain(name: str) -> Ctmc:
    try:
        return Ctmc.from_json(json.loads(_resolve(name).read_text()))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{name}: bad chain file: {exc}") from exc


def _actions(t) -> list:
    return sorted({p.action for _, p in prefix_paths(t)})


def _build(t, cfg: Config) -> Ctmc:
    c = build_ctmc(t, cfg.rate_policy(_actions(t)), cfg.max_states)
    if c.truncated:
        raise LimitReached(f"state limit {cfg.max_states} reached")
    return c


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")
    sys.stdout.flush()


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_parse(ns, cfg: Config) -> int:
    t = _load_term(ns.file)
    text = format_term(canonical(t))
    if cfg.format == "json":
        _emit(json.dumps({"term": text}))
    else:
        _emit(text)
    return EXIT_OK


def _lts_text(lts) -> str:
    lines = [f"{len(lts.states)} states, {len(lts.edges)} transitions"]
    lines += [f"  s{i}: {format_term(s)}" for i, s in enumerate(lts.states)]
    for e in lts.edges:
        lines.append(f"  s{e.source} {e.transition.label} s{e.target}")
    return "\n".join(lines)


def cmd_explore(ns, cfg: Config) -> int:
    t = _load_term(ns.file)
    lts = explore(t, cfg.rate_policy(_actions(t)), cfg.max_states)
    if cfg.format == "json":
        _emit(json.dumps(lts.to_json(), indent=2))
    elif cfg.format == "dot":
        _emit(lts.to_dot())
    else:
        _emit(_lts_text(lts))
    if lts.truncated:
        print(f"warning: {lts.diagnostics[0]}", file=sys.stderr)
        return EXIT_LIMIT
    return EXIT_OK


def cmd_analyze(ns, cfg: Config) -> int:
    extra = {}
    if _is_chain_file(ns.file):
        c = _load_chain(ns.file)
    else:
        t = _load_term(ns.file)
        c = _build(t, cfg)
        extra = {"syntax_class": classify_syntax(t), "forward_tree": forward_tree_check(c)}
    try:
        pi = steady_state(c, cfg.tol)
    except NotErgodicError as exc:
        # complete builds of this calculus are always strongly connected
        raise RuntimeError(f"internal error: {exc}") from exc
    rep = check_time_reversibility(c, pi, cfg.tol, cfg.cycle_bound)
    if cfg.format == "json":
        _emit(json.dumps({
            "states": [c.state_name(i) for i in range(c.n)],
            "steady_state": [float(p) for p in pi.probabilities],
            "residual": pi.residual,
            "reversible": rep.verdict,
            "kolmogorov": rep.kolmogorov_verdict,
            "max_detailed_balance_residual": rep.max_detailed_balance_residual,
            "cycles_checked": rep.cycles_checked,
            "failing_cycles": [{"cycle": [c.state_name(s) for s in cyc], "forward_product": fw,
                                "backward_product": bw} for cyc, fw, bw in rep.failing_cycles],
            **extra,
        }, indent=2))
    else:
        lines = [f"{c.n} states"]
        lines += [f"  pi({c.state_name(i)}) = {p:.10g}" for i, p in enumerate(pi.probabilities)]
        lines.append(rep.to_text(c))
        lines += [f"{k.replace('_', ' ')}: {v}" for k, v in extra.items()]
        _emit("\n".join(lines))
    return EXIT_OK if rep.verdict else EXIT_FAILS


def _rated(name: str, cfg: Config) -> RatedLts:
    if _is_chain_file(name):
        return RatedLts.from_ctmc(_load_chain(name))
    return RatedLts.from_ctmc(_build(_load_term(name), cfg))


def cmd_bisim(ns, cfg: Config) -> int:
    l1, l2 = _rated(ns.file_a, cfg), _rated(ns.file_b, cfg)
    if ns.relation == "mb":
        v = mb_equivalent(l1, l2, cfg.tol)
    elif ns.relation == "ftabmb":
        v = ftabmb_equivalent(l1, l2, cfg.depth, cfg.tol)
    else:
        v = fbmb_check(l1, l2, cfg.depth, cfg.tol)
    if cfg.format == "json":
        _emit(json.dumps({"relation": v.relation, "equivalent": v.equivalent, "depth": v.depth,
                          "witness": None if v.witness is None else [str(x) for x in v.witness]}))
    else:
        _emit(v.describe())
    return EXIT_OK if v.equivalent else EXIT_FAILS


def _load_script(name: str) -> tuple:
    path = _resolve(name)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{name}: bad trace script: {exc}") from exc
    steps = data["steps"] if isinstance(data, dict) else data
    ref = data.get("reference") if isinstance(data, dict) else None
    if ref is not None and not Path(ref).is_absolute():
        ref = str(path.parent / ref)
    for k, st in enumerate(steps):
        if st.get("direction") not in (FORWARD, BACKWARD) or "action" not in st:
            raise UsageError(f"{name}: step {k} needs a direction ('fw'/'bk') and an action")
    return steps, ref


class _StepError(Exception):
    def __init__(self, index, step, enabled):
        super().__init__(f"step {index} {step} is not enabled")
        self.index, self.step, self.enabled = index, step, enabled


def run_script(start, steps, policy=EQUAL) -> Computation:
    """Resolve script steps one by one against the current term.

    A step names a direction and an action, optionally a key and an
    ``index`` choosing among several matching transitions (default 0).
    """
    cur, done = start, []
    for k, st in enumerate(steps):
        key = st.get("key")
        if st["direction"] == FORWARD:
            try:
                options = forward_transitions(cur, key=key, check=False)
            except ValueError:
                options = []
        else:
            options = [tr for tr in backward_transitions(cur, policy, check=False)
                       if key is None or tr.label.key == key]
        options = [tr for tr in options if tr.label.action == st["action"]]
        idx = st.get("index", 0)
        if not 0 <= idx < len(options):
            enabled = forward_transitions(cur, check=False) + backward_transitions(cur, policy, check=False)
            raise _StepError(k, st, enabled)
        tr = options[idx]
        done.append(tr)
        cur = tr.target
    return Computation(start, done)


def cmd_trace(ns, cfg: Config) -> int:
    t = _load_term(ns.file)
    policy = cfg.rate_policy(_actions(t))
    steps, ref = _load_script(ns.script)
    ref = ns.reference or ref
    try:
        w = run_script(t, steps, policy)
    except _StepError as exc:
        _emit(f"error: {exc}")
        _emit("enabled moves:")
        for tr in exc.enabled:
            _emit(f"  {tr.label}")
        return EXIT_FAILS
    report = {
        "start": format_term(t),
        "terms": [format_term(s.target) for s in w.steps],
        "canonical_terms": [format_term(canonical(s.target)) for s in w.steps],
        "labels": [str(s.label) for s in w.steps],
        "valid": w.is_valid(policy),
        "returned_to_start": canonical(w.end) == canonical(t),
    }
    ok = report["valid"]
    if ref is not None:
        rsteps, _ = _load_script(ref)
        try:
            wr = run_script(t, rsteps, policy)
        except _StepError as exc:
            _emit(f"error in reference script: {exc}")
            return EXIT_FAILS
        eq = causally_equivalent(w, wr, policy, audit=True)
        report["causally_equivalent_to_reference"] = eq
        ok = ok and eq
    if cfg.format == "json":
        _emit(json.dumps(report, indent=2))
    else:
        lines = [f"start: {report['start']}"]
        lines += [f"{lab}  {term}" for lab, term in zip(report["labels"], report["terms"])]
        lines.append(f"valid computation: {'yes' if report['valid'] else 'no'}")
        lines.append(f"returned to start: {'yes' if report['returned_to_start'] else 'no'}")
        if "causally_equivalent_to_reference" in report:
            lines.append(f"causally equivalent to reference: "
                         f"{'yes' if report['causally_equivalent_to_reference'] else 'no'}")
        _emit("\n".join(lines))
    return EXIT_OK if ok else EXIT_FAILS


def cmd_corpus(ns, cfg: Config) -> int:
    """Print a bundled model; ``twopc`` honours ``--participants``."""
    if ns.name is None:
        _emit("\n".join(corpus.MODELS))
        return EXIT_OK
    if ns.name == "twopc" and ns.participants != 2:
        if ns.participants > 2:
            print(f"warning: the state space grows exponentially with the participant count "
                  f"(--max-states {cfg.max_states} applies to later analyses)", file=sys.stderr)
        try:
            _emit(corpus.twopc_source(ns.participants))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        return EXIT_OK
    _emit(_resolve(ns.name).read_text())
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--policy", default="equal",
                        help="backward rates: 'equal', 'random' (seeded) or a JSON table file")
    common.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--cycle-bound", type=int, default=DEFAULT_CYCLE_BOUND,
                        help="longest simple cycle checked by the Kolmogorov audit")
    common.add_argument("--depth", type=int, default=4, help="run depth for fbmb/ftabmb")
    common.add_argument("--format", choices=("text", "json", "dot"), default="text")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rmpc", description="Reversible Markovian process workbench")
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("parse", parents=[common], help="check and pretty-print a model")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_parse)
    sp = sub.add_parser("explore", parents=[common], help="export the transition system")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_explore)
    sp = sub.add_parser("analyze", parents=[common], help="steady state and time reversibility")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_analyze)
    sp = sub.add_parser("bisim", parents=[common], help="compare two models")
    sp.add_argument("file_a")
    sp.add_argument("file_b")
    sp.add_argument("relation", nargs="?", choices=("mb", "ftabmb", "fbmb"), default="mb")
    sp.set_defaults(func=cmd_bisim)
    sp = sub.add_parser("trace", parents=[common], help="replay a computation script")
    sp.add_argument("file")
    sp.add_argument("script")
    sp.add_argument("--reference", help="second script to compare for causal equivalence")
    sp.set_defaults(func=cmd_trace)
    sp = sub.add_parser("corpus", parents=[common], help="list or print bundled models")
    sp.add_argument("name", nargs="?")
    sp.add_argument("--participants", type=int, default=2, help="participant count for twopc")
    sp.set_defaults(func=cmd_corpus)
    return p


def main(argv: Optional[list] = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.ERROR,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = Config.from_args(ns)
        return ns.func(ns, cfg)
    except RmpcSyntaxError as exc:
        print(f"{getattr(ns, 'file', '')}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IllFormedTermError as exc:
        print(f"{getattr(ns, 'file', '')}: ill-formed term", file=sys.stderr)
        for d in exc.diagnostics:
            print(f"  {d}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LimitReached as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT


if __name__ == "__main__":
    sys.exit(main())
