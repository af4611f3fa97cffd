import json
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmpc import corpus
from rmpc.generators import random_policy, random_pprime_term
from rmpc.markov import (
    Ctmc, NotErgodicError, TruncatedChainError, build_ctmc, check_product_form,
    check_time_reversibility, classify_syntax, ctmc_to_json_text, forward_tree_check,
    is_ergodic, reverse_ctmc, state_metrics, steady_state,
)
from rmpc.semantics import BACKWARD, EQUAL, FORWARD, RatePolicy
from rmpc.syntax import parse_term

from conftest import sequential_terms, standard_terms

P = parse_term
FIG1 = "<a,1>.<b,1>.0 + <c,1>.0"


def naive_fig1(lam=1.0, mu=1.0, gamma=1.0, lam_b=1.0, mu_b=1.0, gamma_b=2.0):
    """The three-state chart in which both terminated states are one."""
    return Ctmc.from_moves(["s0", "s1", "s2"], [
        ("s0", FORWARD, "a", lam, "s1"), ("s1", FORWARD, "b", mu, "s2"), ("s0", FORWARD, "c", gamma, "s2"),
        ("s1", BACKWARD, "a", lam_b, "s0"), ("s2", BACKWARD, "b", mu_b, "s1"), ("s2", BACKWARD, "c", gamma_b, "s0"),
    ])


# --- building ------------------------------------------------------------------

def test_fig1_chain():
    c = build_ctmc(P(FIG1))
    assert c.n == 4
    fw = sorted((m.action, m.rate) for m in c.forward_moves())
    assert fw == [("a", 1), ("b", 1), ("c", 1)]
    for m in c.forward_moves():
        back = [b for b in c.moves if b.direction == BACKWARD and (b.source, b.target) == (m.target, m.source)]
        assert len(back) == 1 and back[0].rate == m.rate


def test_nil_chain():
    c = build_ctmc(P("0"))
    assert c.n == 1 and c.moves == []
    assert np.all(c.generator == 0)


def test_sync_blocked_chain():
    # both initial actions are synchronized and differ, so nothing moves
    assert build_ctmc(P("<a,1>.0 |[a,b]| <b,1>.0")).n == 1
    # with b outside the sync set the right component moves on its own
    assert build_ctmc(P("<a,1>.0 |[a]| <b,1>.0")).n == 2


def test_state_metrics():
    c = build_ctmc(P("<a,1>.0 |[]| <b,2>.0"))
    m = state_metrics(c, 0)
    assert m.exit_rate == 3 and m.mean_sojourn == pytest.approx(1 / 3)
    assert m.by_action() == pytest.approx({"a": 1 / 3, "b": 2 / 3})
    z = state_metrics(build_ctmc(P("0")), 0)
    assert z.exit_rate == 0 and math.isinf(z.mean_sojourn)


@given(standard_terms)
def test_exit_rate_is_forward_plus_backward(t):
    c = build_ctmc(t, max_states=200)
    for s in range(c.n):
        fw = sum(m.rate for m in c.moves if m.source == s and m.direction == FORWARD)
        bk = sum(m.rate for m in c.moves if m.source == s and m.direction == BACKWARD)
        assert state_metrics(c, s).exit_rate == pytest.approx(fw + bk)


@given(standard_terms)
def test_generator_rows_sum_to_zero(t):
    q = build_ctmc(t, max_states=200).generator
    assert np.all(np.abs(q.sum(axis=1)) <= 1e-12)


def test_json_round_trip():
    c = build_ctmc(P(FIG1))
    back = Ctmc.from_json(json.loads(ctmc_to_json_text(c)))
    assert np.allclose(back.generator, c.generator)


# --- ergodicity ----------------------------------------------------------------

def test_ergodicity():
    assert is_ergodic(build_ctmc(P(FIG1)))
    assert not is_ergodic(Ctmc.from_moves(["x", "y"], [("x", FORWARD, "a", 1.0, "y")]))
    assert is_ergodic(Ctmc(["only"], []))


@given(standard_terms)
def test_built_chains_are_ergodic(t):
    c = build_ctmc(t, max_states=200)
    assert c.truncated or is_ergodic(c)


# --- steady state --------------------------------------------------------------

def test_fig1_uniform():
    pi = steady_state(build_ctmc(P(FIG1)))
    assert np.allclose(pi.probabilities, 0.25, atol=1e-12)


def test_two_state_policy():
    c = build_ctmc(P("<a,2>.0"), RatePolicy({"a": 2.0}))
    assert steady_state(c).probabilities == pytest.approx([2 / 3, 1 / 3])


def test_nil_steady_state():
    assert list(steady_state(build_ctmc(P("0"))).probabilities) == [1.0]


def test_steady_state_refusals():
    with pytest.raises(TruncatedChainError):
        steady_state(build_ctmc(P(FIG1), max_states=2))
    with pytest.raises(NotErgodicError):
        steady_state(Ctmc.from_moves(["x", "y"], [("x", FORWARD, "a", 1.0, "y")]))


@given(standard_terms)
def test_uniform_law(t):
    c = build_ctmc(t, EQUAL, max_states=200)
    if c.truncated:
        return
    assert np.max(np.abs(steady_state(c).probabilities - 1 / c.n)) <= 1e-9


def test_csv_export():
    c = build_ctmc(P("<a,2>.0"), RatePolicy({"a": 2.0}))
    lines = steady_state(c).to_csv(c).strip().splitlines()
    assert lines[0] == "state,probability" and len(lines) == 3


# --- reversibility -------------------------------------------------------------

def test_fig1_reversible_equal_rates():
    c = build_ctmc(P(FIG1))
    rep = check_time_reversibility(c, steady_state(c))
    assert rep.verdict and rep.kolmogorov_verdict


def test_fig1_model_reversible_for_any_table():
    # the derived chart is a tree, so any backward table keeps it reversible
    c = build_ctmc(P(FIG1), RatePolicy({"c": 2.0}))
    assert forward_tree_check(c)
    assert check_time_reversibility(c, steady_state(c)).verdict


def test_kolmogorov_counterexample():
    c = naive_fig1()
    rep = check_time_reversibility(c, steady_state(c))
    assert not rep.verdict and not rep.kolmogorov_verdict
    (cyc, fw, bw), = rep.failing_cycles
    assert len(cyc) == 3
    assert {fw, bw} == {2.0, 1.0}
    assert "products 2 vs 1" in rep.to_text(c)


def test_naive_chart_balanced_when_products_agree():
    c = naive_fig1(gamma_b=1.0)
    assert check_time_reversibility(c, steady_state(c)).verdict


@given(standard_terms)
def test_equal_rates_reversible(t):
    c = build_ctmc(t, EQUAL, max_states=200)
    if c.truncated:
        return
    rep = check_time_reversibility(c, steady_state(c))
    assert rep.max_detailed_balance_residual <= 1e-9 and rep.verdict


@given(sequential_terms, st.integers(0, 2**16))
def test_sequential_reversible_any_policy(t, seed):
    pol = random_policy(random.Random(seed))
    c = build_ctmc(t, pol)
    assert forward_tree_check(c)
    rep = check_time_reversibility(c, steady_state(c))
    assert rep.verdict


@settings(max_examples=30)
@given(st.integers(0, 2**16))
def test_pprime_reversible_any_policy(seed):
    rng = random.Random(seed)
    t = random_pprime_term(rng, components=2, max_prefixes=3)
    c = build_ctmc(t, random_policy(rng), max_states=300)
    if c.truncated:
        return
    assert check_time_reversibility(c, steady_state(c)).verdict


@settings(max_examples=40)
@given(standard_terms, st.integers(0, 2**16))
def test_balance_and_kolmogorov_agree(t, seed):
    c = build_ctmc(t, random_policy(random.Random(seed)), max_states=60)
    if c.truncated:
        return
    rep = check_time_reversibility(c, steady_state(c), tol=1e-9, max_cycle_len=60)
    assert (rep.max_detailed_balance_residual <= 1e-9) == rep.kolmogorov_verdict


# --- reversed chain --------------------------------------------------------------

def test_reverse_of_reversible_is_itself():
    c = build_ctmc(P("<a,2>.0"), RatePolicy({"a": 2.0}))
    r = reverse_ctmc(c, steady_state(c))
    assert np.allclose(r.generator, c.generator)


def test_reverse_of_naive_chart_differs():
    c = naive_fig1()
    r = reverse_ctmc(c, steady_state(c))
    assert not np.allclose(r.generator, c.generator)
    assert np.allclose(steady_state(r).probabilities, steady_state(c).probabilities)


@given(standard_terms, st.integers(0, 2**16))
def test_reverse_twice(t, seed):
    c = build_ctmc(t, random_policy(random.Random(seed)), max_states=200)
    if c.truncated:
        return
    r = reverse_ctmc(c, steady_state(c))
    rr = reverse_ctmc(r, steady_state(r))
    assert np.allclose(rr.generator, c.generator, atol=1e-9)


# --- classification and product form ------------------------------------------------

@pytest.mark.parametrize("text,kind", [
    ("<a,1>.<b,1>.0 + <c,1>.0", "sequential"),
    ("(<a,1>.0 + <b,1>.0) |[]| <c,1>.0", "pPrime"),
    ("<a,1>.(<b,1>.0 |[]| <c,1>.0)", "general"),
])
def test_classify(text, kind):
    assert classify_syntax(P(text)) == kind


def test_forward_tree_fails_on_diamond():
    assert not forward_tree_check(build_ctmc(P("<a,1>.0 |[]| <b,1>.0")))


def test_product_form_independent():
    rep = check_product_form(P("<a,1>.0"), P("<b,2>.0"))
    assert rep.holds and rep.cartesian and rep.composed_size == 4
    assert rep.max_deviation <= 1e-9


def test_product_form_sync_not_cartesian():
    rep = check_product_form(P("<a,1>.0"), P("<a,2>.0"), {"a"})
    assert not rep.cartesian and not rep.holds


def test_product_form_nil():
    rep = check_product_form(P("0"), P("0"))
    assert rep.holds and rep.composed_size == 1


def test_product_form_precondition():
    rep = check_product_form(P("<a,1>.(<b,1>.0 |[]| <c,1>.0)"), P("<d,1>.0"), policy=RatePolicy({"a": 3.0}))
    assert not rep.preconditions_ok and not rep.holds


def test_corpus_chains_reversible():
    for name in ("twopc", "protein"):
        c = build_ctmc(corpus.load(name))
        assert check_time_reversibility(c, steady_state(c)).verdict
