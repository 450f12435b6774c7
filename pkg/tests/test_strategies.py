from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from memdp import corpus, mdp as mdpa
from memdp.chain import exact_probs
from memdp.endcomp import dec_decompose
from memdp.errors import NotDistinguishing
from memdp.model import memoryless, uniform, validate_strategy
from memdp.strategies import (Alternating, Memoryless, compile_strategy, compose_switching,
                              dec_sampling_strategy, distinguishing_edge, mgec_K, mix, sampler_K)

F = Fraction


def test_sampler_K_values():
    assert sampler_K(F(1, 100), F(1, 2), F(4, 5)) == 103
    assert sampler_K(F(1, 10), F(1, 2), F(4, 5)) == 52
    assert sampler_K(1, F(1, 2), F(4, 5)) == 0


def test_mgec_K_values():
    assert mgec_K(F(1, 20), F(1, 2)) == 5
    assert mgec_K(1, F(1, 2)) == 0
    assert mgec_K(F(1, 20), 1) == 1


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 1000), st.integers(2, 1000))
def test_sampler_K_monotone(a, b):
    e1, e2 = F(1, min(a, b)), F(1, max(a, b))
    assert sampler_K(e2, F(1, 3), F(2, 3)) >= sampler_K(e1, F(1, 3), F(2, 3))


def _unachievable():
    m, phi, _ = corpus.load("unachievable")
    dec = [d for d in dec_decompose(m) if d.distinguishing][0]
    opt = {i: mdpa.optimal_choice(m.env(i), phi) for i in (1, 2)}
    return m, phi, dec, opt


def _binomial_errors(K, d1, d2):
    # guess 2 iff the observed frequency is strictly closer to d2
    wrong1 = sum(F(comb(K, k)) * d1 ** k * (1 - d1) ** (K - k)
                 for k in range(K + 1) if abs(F(k, K) - d1) > abs(F(k, K) - d2))
    wrong2 = sum(F(comb(K, k)) * d2 ** k * (1 - d2) ** (K - k)
                 for k in range(K + 1) if abs(F(k, K) - d1) <= abs(F(k, K) - d2))
    return wrong1, wrong2


def test_distinguishing_edge_choice():
    m, _, dec, _ = _unachievable()
    assert distinguishing_edge(m, dec.sub) == ("s", "a", "t", F(1, 2), F(4, 5))
    p, _, _ = corpus.load("parity")
    d = [x for x in dec_decompose(p) if x.distinguishing][0]
    # equal gaps: the edge leaving s2 wins over the self-loop
    assert distinguishing_edge(p, d.sub) == ("s2", "a", "s3", F(1, 2), F(3, 4))


def test_sampler_exact_misclassification():
    m, phi, dec, opt = _unachievable()
    eps = F(1, 10)
    sm = dec_sampling_strategy(m, dec, eps, opt[1], opt[2])
    assert validate_strategy(sm, m) == []
    K = sm.sampler.K
    assert len(sm.memory) <= (K + 1) ** 2 + 2
    p1, p2 = exact_probs(m, sm, phi, "s")
    w1, w2 = _binomial_errors(K, F(1, 2), F(4, 5))
    # winning in environment i means guessing i: the two routes must agree exactly
    assert 1 - p1 == w1 and 1 - p2 == w2
    assert w1 <= eps and w2 <= eps


def test_sampler_rejects_equal_edge():
    m, _, dec, opt = _unachievable()
    with pytest.raises(NotDistinguishing):
        dec_sampling_strategy(m, dec, F(1, 10), opt[1], opt[2], edge=("t", "a", "s"))
    p, _, _ = corpus.load("parity")
    nd = [x for x in dec_decompose(p) if not x.trivial and not x.distinguishing][0]
    with pytest.raises(NotDistinguishing):
        dec_sampling_strategy(p, nd, F(1, 10), opt[1], opt[2])


def test_sampler_guess_ties_to_env1():
    m, _, dec, opt = _unachievable()
    smp = dec_sampling_strategy(m, dec, F(1, 10), opt[1], opt[2]).sampler
    assert smp.guess(0, 0) == 1
    assert smp.guess(20, 13) == 1
    assert smp.guess(20, 14) == 2


def test_mix_and_memoryless():
    c1 = {"s": {"a": F(1)}}
    c2 = {"s": {"b": F(1)}}
    assert mix(c1, c2, ["s"]) == {"s": {"a": F(1, 2), "b": F(1, 2)}}
    m, phi, _ = corpus.load("randomization_required")
    sm = compile_strategy(Memoryless({s: uniform(m.enabled[s]) for s in m.states}), m)
    assert sm.memory == ("m0",)
    assert exact_probs(m, sm, phi, "s") == (F(1, 2), F(1, 2))


def test_alternating_is_pure():
    m, _, _ = corpus.load("randomization_required")
    c1 = {s: {m.enabled[s][0]: F(1)} for s in m.states}
    c2 = {s: {m.enabled[s][-1]: F(1)} for s in m.states}
    sm = compile_strategy(Alternating(c1, c2, 2), m)
    assert len(sm.memory) == 4
    assert all(len(row) == 1 for row in sm.table.values())


def _outer_inner():
    m, phi, _ = corpus.load("randomization_required")
    outer = memoryless({s: {m.enabled[s][0]: F(1)} for s in m.states})
    inner = memoryless({s: {m.enabled[s][-1]: F(1)} for s in m.states})
    return m, phi, outer, inner


def test_switching_never_triggers():
    m, phi, outer, inner = _outer_inner()
    sm = compose_switching(outer, lambda s, k: None, {"T": inner})
    assert exact_probs(m, sm, phi, "s") == exact_probs(m, outer, phi, "s")


def test_switching_at_start():
    m, phi, outer, inner = _outer_inner()
    sm = compose_switching(outer, lambda s, k: "T", {"T": inner})
    assert exact_probs(m, sm, phi, "s") == exact_probs(m, inner, phi, "s")
    assert validate_strategy(sm, m) == []
