import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from memdp import corpus
from memdp.chain import (exact_objective_prob, exact_probs, monte_carlo, posterior_ratio,
                         product_chain, wilson_interval)
from memdp.errors import InconsistentHistory
from memdp.model import Objective, memoryless, uniform

from oracles import float_chain_reach, random_memdp

F = Fraction


def _uniform(m):
    return memoryless({s: uniform(m.enabled[s]) for s in m.states})


def test_uniform_on_randomization_required():
    m, phi, _ = corpus.load("randomization_required")
    assert exact_probs(m, _uniform(m), phi, "s") == (F(1, 2), F(1, 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_rows_are_distributions(seed):
    m = random_memdp(seed, revealed=False)
    chain = product_chain(m.env(1), _uniform(m), m.states[0])
    for row in chain.rows.values():
        assert sum(row.values()) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([1, 2]))
def test_exact_matches_float_iteration(seed, env):
    m = random_memdp(seed, revealed=False)
    phi = Objective.reach(m.target)
    chain = product_chain(m.env(env), _uniform(m), m.states[0])
    exact = exact_objective_prob(chain, phi)
    goal = {n for n in chain.rows if n[0] in m.target}
    approx = float_chain_reach(chain.rows, goal)
    start = sum(float(p) * approx[n] for n, p in chain.initial.items())
    assert abs(float(exact) - start) < 1e-6


def test_safety_is_complement_of_reach():
    m, _, _ = corpus.load("aspositive")
    sm = _uniform(m)
    safe = {"s", "t"}
    bad = set(m.states) - safe
    for i in (1, 2):
        chain = product_chain(m.env(i), sm, "s")
        assert exact_objective_prob(chain, Objective.safety(safe)) == 1 - exact_objective_prob(chain, Objective.reach(bad))


def test_monte_carlo_is_deterministic():
    m, phi, _ = corpus.load("randomization_required")
    a = monte_carlo(m.env(1), _uniform(m), phi, "s", 1000, 10, seed=3)
    b = monte_carlo(m.env(1), _uniform(m), phi, "s", 1000, 10, seed=3)
    assert a == b
    assert a.low <= 0.5 <= a.high


def test_monte_carlo_rejects_zero_horizon():
    m, phi, _ = corpus.load("randomization_required")
    with pytest.raises(ValueError):
        monte_carlo(m.env(1), _uniform(m), phi, "s", 10, 0, seed=0)


def test_wilson_reference():
    z = 2.5758293035489004
    n, k = 200, 37
    p = k / n
    centre = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
    lo, hi = wilson_interval(k, n)
    assert abs(lo - (centre - half)) < 1e-12 and abs(hi - (centre + half)) < 1e-12
    lo, hi = wilson_interval(0, 50)
    assert lo == pytest.approx(0.0, abs=1e-12) and 0 < hi < 1


@pytest.mark.parametrize("k", [0, 1, 3, 7])
def test_posterior_ratio_inf_memory(k):
    m, _, _ = corpus.load("inf_memory")
    h = ["s"]
    for _ in range(k):
        h += ["a", "t", "a", "s"]
    h += ["a", "u"]
    assert posterior_ratio(m, h) == F(5, 8) ** k * F(5, 2)


def test_posterior_ratio_revealing():
    m, _, _ = corpus.load("revealed")
    s, a = "s", "a"
    only1 = [t for t in m.delta[0][(s, a)] if t not in m.delta[1][(s, a)]][0]
    assert posterior_ratio(m, [s, a, only1]) == math.inf


def test_posterior_ratio_inconsistent():
    m, _, _ = corpus.load("inf_memory")
    with pytest.raises(InconsistentHistory):
        posterior_ratio(m, ["s", "a", "w"])
