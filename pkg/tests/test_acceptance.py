"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``; the summary
lines are written straight to the terminal.
"""
import json
import random
import time
from collections import Counter
from itertools import permutations

import numpy as np
import pytest

from rmpc import corpus
from rmpc.bisim import RatedLts, fbmb_check, ftabmb_equivalent, mb_equivalent, ratei, run_bisim_check, runs_of
from rmpc.causality import (
    Computation, causally_equivalent, complete_diamond, concurrent, conflicting,
    find_diamond, replay, rewrite_equivalent,
)
from rmpc.cli import _load_script, run_script
from rmpc.generators import (
    bisimilar_variant, perturbed_variant, random_computation, random_policy,
    random_rated_lts, random_sequential_term, random_standard_term,
)
from rmpc.markov import (
    Ctmc, build_ctmc, check_product_form, check_time_reversibility, forward_tree_check, steady_state,
)
from rmpc.semantics import (
    BACKWARD, EQUAL, FORWARD, all_transitions, canonical, explore,
)
from rmpc.syntax import parse_term

SEED = 20240611


def report(capsys, number, ok, detail, elapsed, bound):
    within = elapsed < bound
    status = "PASS" if ok and within else "FAIL"
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {status}: {detail} ({elapsed:.2f} s, bound {bound} s)")
    assert ok, detail
    assert within, f"took {elapsed:.2f} s, bound {bound} s"


@pytest.fixture(scope="module")
def term_corpus():
    """200 random standard terms (<= 6 prefixes, <= 2 parallel operators) with their explorations."""
    rng = random.Random(SEED)
    terms = [random_standard_term(rng, max_prefixes=6, max_parallel=2) for _ in range(200)]
    return [(t, explore(t, EQUAL, max_states=500)) for t in terms]


def _directed(lts, direction):
    return Counter((e.source, e.transition.label.action, e.transition.label.rate, e.target)
                   for e in lts.edges if e.transition.label.direction == direction)


def test_criterion_01_loop_lemma(capsys, term_corpus):
    start = time.perf_counter()
    bad = []
    for t, lts in term_corpus:
        fw, bk = _directed(lts, FORWARD), _directed(lts, BACKWARD)
        flipped = Counter({(j, a, r, i): n for (i, a, r, j), n in fw.items()})
        ok = flipped == bk and all(n == 1 for n in fw.values())
        # raw terms: each step has exactly one inverse with the same key
        for e in lts.edges:
            tr = e.transition
            inverse = [x for x in all_transitions(tr.target)
                       if x.label.direction != tr.label.direction and x.label.key == tr.label.key
                       and x.label.action == tr.label.action and x.target == tr.source]
            ok = ok and len(inverse) == 1
        if lts.truncated or not ok:
            bad.append(t)
    elapsed = time.perf_counter() - start
    edges = sum(len(l.edges) for _, l in term_corpus)
    report(capsys, 1, not bad, f"loop lemma on 200 terms / {edges} transitions, {len(bad)} violations",
           elapsed, 30)


def test_criterion_02_uniform_steady_state(capsys, term_corpus):
    start = time.perf_counter()
    worst = 0.0
    for t, lts in term_corpus:
        c = build_ctmc(t, EQUAL, max_states=500)
        pi = steady_state(c).probabilities
        worst = max(worst, float(np.max(np.abs(pi - 1.0 / c.n))))
    elapsed = time.perf_counter() - start
    report(capsys, 2, worst <= 1e-9, f"max |pi(s) - 1/n| = {worst:.2e} (tol 1e-9)", elapsed, 30)


def test_criterion_03_time_reversibility_equal_rates(capsys, term_corpus):
    start = time.perf_counter()
    worst, failing, cycles = 0.0, 0, 0
    for t, _ in term_corpus:
        c = build_ctmc(t, EQUAL, max_states=500)
        rep = check_time_reversibility(c, steady_state(c), tol=1e-9, max_cycle_len=6)
        worst = max(worst, rep.max_detailed_balance_residual)
        failing += len(rep.failing_cycles)
        cycles += rep.cycles_checked
    elapsed = time.perf_counter() - start
    report(capsys, 3, worst <= 1e-9 and failing == 0,
           f"max balance residual {worst:.2e}; {cycles} cycles (len <= 6) checked, {failing} fail",
           elapsed, 60)


def test_criterion_04_time_reversibility_sequential(capsys):
    start = time.perf_counter()
    rng = random.Random(SEED + 4)
    not_rev = not_tree = 0
    for _ in range(100):
        t = random_sequential_term(rng, max_prefixes=6)
        c = build_ctmc(t, random_policy(rng, low=0.1, high=10.0))
        not_rev += not check_time_reversibility(c, steady_state(c)).verdict
        not_tree += not forward_tree_check(c)
    elapsed = time.perf_counter() - start
    report(capsys, 4, not_rev == 0 and not_tree == 0,
           f"100 sequential terms, random multipliers: {not_rev} not reversible, {not_tree} not tree-shaped",
           elapsed, 30)


def test_criterion_05_kolmogorov_counterexample(capsys):
    start = time.perf_counter()
    # lambda = mu = gamma = 1, backward: lambda = mu = 1, gamma = 2
    c = Ctmc.from_moves(["s0", "s1", "s2"], [
        ("s0", FORWARD, "a", 1.0, "s1"), ("s1", FORWARD, "b", 1.0, "s2"), ("s0", FORWARD, "c", 1.0, "s2"),
        ("s1", BACKWARD, "a", 1.0, "s0"), ("s2", BACKWARD, "b", 1.0, "s1"), ("s2", BACKWARD, "c", 2.0, "s0"),
    ])
    shipped = Ctmc.from_json(json.loads(corpus.path("fig1-naive.ctmc.json").read_text()))
    assert np.allclose(shipped.generator, c.generator)
    rep = check_time_reversibility(c, steady_state(c))
    ok = (not rep.verdict and len(rep.failing_cycles) == 1
          and len(rep.failing_cycles[0][0]) == 3
          and sorted(rep.failing_cycles[0][1:]) == [1.0, 2.0])
    elapsed = time.perf_counter() - start
    cyc, fw, bw = rep.failing_cycles[0] if rep.failing_cycles else ((), 0, 0)
    report(capsys, 5, ok, f"verdict {rep.verdict}; cycle {cyc} products {fw:g} vs {bw:g}", elapsed, 1)


def test_criterion_06_product_form(capsys):
    start = time.perf_counter()
    rep = check_product_form(parse_term("<a,1>.0"), parse_term("<b,2>.0"), frozenset(), EQUAL, tol=1e-9)
    ok = rep.holds and rep.cartesian and rep.composed_size == 4 and rep.max_deviation <= 1e-9
    elapsed = time.perf_counter() - start
    report(capsys, 6, ok, f"Cartesian {rep.cartesian} on {rep.composed_size} states, "
                          f"max |pi - pi1*pi2| = {rep.max_deviation:.2e}", elapsed, 1)


def test_criterion_07_diamond_conflict(capsys, term_corpus):
    start = time.perf_counter()
    pairs = conflicts = violations = backward_conflicts = 0
    for _, lts in term_corpus:
        for s in lts.states:
            trs = all_transitions(s)
            for i, t1 in enumerate(trs):
                for t2 in trs[i + 1:]:
                    pairs += 1
                    if conflicting(t1, t2):
                        conflicts += 1
                        violations += find_diamond(t1, t2) is not None
                    else:
                        try:
                            complete_diamond(t1, t2)
                        except Exception:
                            violations += 1
                    if not t1.is_forward and not t2.is_forward and not concurrent(t1, t2):
                        backward_conflicts += 1
    elapsed = time.perf_counter() - start
    report(capsys, 7, violations == 0 and backward_conflicts == 0,
           f"{pairs} coinitial pairs ({conflicts} conflicting): {violations} xor violations, "
           f"{backward_conflicts} conflicting backward pairs", elapsed, 60)


def _equivalent_variant(rng, w, policy=EQUAL):
    """A computation built from w by swaps that replay, optionally with a do/undo pair inserted."""
    events = list(w.events)
    orders = list(permutations(range(len(events)))) if len(events) <= 5 else [tuple(range(len(events)))]
    rng.shuffle(orders)
    for order in orders[:30]:
        cand = replay(w.start, [events[k] for k in order], policy)
        if cand is not None and canonical(cand.end) == canonical(w.end):
            events = list(cand.events)
            break
    comp = replay(w.start, events, policy)
    if rng.random() < 0.5:
        k = rng.randrange(len(events) + 1)
        mid = replay(w.start, events[:k], policy).end
        options = all_transitions(mid, policy)
        if options:
            step = rng.choice(options)
            inv = next(x for x in all_transitions(step.target, policy)
                       if x.label.direction != step.label.direction and x.event[1:] == step.event[1:])
            comp = replay(w.start, events[:k] + [step.event, inv.event] + events[k:], policy)
    return comp


def test_criterion_08_causal_consistency(capsys):
    start = time.perf_counter()
    rng = random.Random(SEED + 8)
    agree = disagree = undecided = positives = 0
    for i in range(100):
        t = random_standard_term(rng)
        w = random_computation(rng, t, rng.randint(0, 5))
        v = _equivalent_variant(rng, w) if i % 2 == 0 else random_computation(rng, t, rng.randint(0, 5))
        decided = causally_equivalent(w, v)
        searched = rewrite_equivalent(w, v, budget=10_000)
        positives += decided
        if searched is None:
            undecided += 1
        elif searched == decided:
            agree += 1
        else:
            disagree += 1
    elapsed = time.perf_counter() - start
    report(capsys, 8, disagree == 0 and undecided == 0,
           f"100 pairs ({positives} equivalent): {agree} agree, {disagree} disagree, "
           f"{undecided} over budget", elapsed, 60)


def test_criterion_09_bisimulation_triple(capsys):
    start = time.perf_counter()
    par = RatedLts.from_term(parse_term("<a,1>.0 |[]| <b,2>.0"))
    cho = RatedLts.from_term(parse_term("<a,1>.<b,2>.0 + <b,2>.<a,1>.0"))
    split = RatedLts.from_term(parse_term("<a,1>.0 + <a,2>.0"))
    total = RatedLts.from_term(parse_term("<a,3>.0"))
    fa = fbmb_check(par, cho, 4)
    fb = fbmb_check(split, total, 4)
    every = set(runs_of(split, 1)) | set(runs_of(total, 1))
    incoming = sorted(ratei(r, "a", every) for l in (split, total) for r in runs_of(l, 1) if len(r) == 1)
    ok_a = mb_equivalent(par, cho).equivalent and ftabmb_equivalent(par, cho).equivalent \
        and fa.equivalent and fa.depth == 4
    ok_b = mb_equivalent(split, total).equivalent and ftabmb_equivalent(split, total).equivalent \
        and not fb.equivalent and fb.depth == 1 and incoming == [1, 2, 3]
    elapsed = time.perf_counter() - start
    report(capsys, 9, ok_a and ok_b,
           f"(a) {fa.describe()}; (b) {fb.describe().split(' (')[0]}, incoming rates {incoming}",
           elapsed, 5)


def test_criterion_10_ftabmb_mb_coincidence(capsys):
    start = time.perf_counter()
    rng = random.Random(SEED + 10)
    agree = equivalent = 0
    for i in range(100):
        l = random_rated_lts(rng, max_states=8, max_depth=3)
        other = bisimilar_variant(rng, l) if i % 2 == 0 else perturbed_variant(rng, l)
        mb = mb_equivalent(l, other).equivalent
        runs, _, _, _ = run_bisim_check(l, other, 5, incoming="exists")
        agree += runs == mb
        equivalent += mb
    elapsed = time.perf_counter() - start
    report(capsys, 10, agree == 100, f"{agree}/100 pairs agree ({equivalent} mb-equivalent)", elapsed, 60)


def test_criterion_11_corpus_replay(capsys):
    start = time.perf_counter()
    twopc = corpus.load("twopc")
    steps, _ = _load_script(str(corpus.path("twopc-abort.trace.json")))
    w = run_script(twopc, steps)
    forward = [s.label.key for s in w.steps[:6]]
    ok_2pc = w.is_valid() and canonical(w.end) == canonical(twopc) and w.end == twopc \
        and forward == [1, 2, 3, 4, 5, 6]
    net = corpus.load("protein")
    s12, _ = _load_script(str(corpus.path("protein-undo-12.trace.json")))
    s21, _ = _load_script(str(corpus.path("protein-undo-21.trace.json")))
    w12, w21 = run_script(net, s12), run_script(net, s21)
    bound = run_script(net, s12[:2]).end
    r12, r21 = Computation(bound, w12.steps[2:]), Computation(bound, w21.steps[2:])
    ok_net = w12.end == net and w21.end == net and causally_equivalent(r12, r21, audit=True)
    elapsed = time.perf_counter() - start
    report(capsys, 11, ok_2pc and ok_net,
           f"2PC rollback returns to start: {ok_2pc}; protein undo orders reach Net and are "
           f"causally equivalent: {ok_net}", elapsed, 5)
