from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from memdp import corpus, mdp as mdpa
from memdp.chain import exact_objective_prob, product_chain
from memdp.model import Mdp, Objective, build_memdp
from memdp.quantitative import gen_product_partition

from oracles import brute_as_reach_mdp, brute_mec_states, random_memdp, value_iteration


def _single(states, delta):
    enabled = {}
    for s, a in delta:
        enabled.setdefault(s, []).append(a)
    return Mdp(tuple(states), {s: tuple(v) for s, v in enabled.items()}, delta)


def test_absorbing_state_is_trivial_mec():
    m = _single(["x"], {("x", "a"): {"x": Fraction(1)}})
    assert mdpa.mec_decompose(m) == [{"x": frozenset({"a"})}]


def test_lsreach_env2_mec():
    m, _, _ = corpus.load("lsreach")
    mecs = mdpa.mec_decompose(m.env(2))
    st_ = [ec for ec in mecs if "s" in ec]
    assert st_ and {"s", "t"} <= set(st_[0]) and "a" in st_[0]["s"]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([1, 2]))
def test_mec_matches_brute_force(seed, env):
    m = random_memdp(seed, max_states=5, revealed=False)
    got = {frozenset(ec) for ec in mdpa.mec_decompose(m.env(env))}
    assert got == brute_mec_states(m, env - 1)
    for ec in mdpa.mec_decompose(m.env(env)):
        assert mdpa.is_end_component(m.env(env), ec)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([1, 2]))
def test_as_reach_matches_brute_force(seed, env):
    m = random_memdp(seed, revealed=False)
    win = mdpa.as_reach(m.env(env), m.target)
    for s in m.states:
        assert (s in win) == brute_as_reach_mdp(m, env - 1, m.target, s)


def test_aspositive_as_sets():
    m, phi, _ = corpus.load("aspositive")
    for i in (1, 2):
        assert mdpa.winning_states(m.env(i), phi) == {"s", "t", "u"}


def test_target_state_wins():
    m, phi, _ = corpus.load("randomization_required")
    assert "u" in mdpa.winning_states(m.env(1), phi)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([1, 2]))
def test_values_match_value_iteration(seed, env):
    m = random_memdp(seed, revealed=False)
    phi = Objective.reach(m.target)
    val = mdpa.optimal_value(m.env(env), phi)
    vi = value_iteration(m, env - 1, m.target)
    for s in m.states:
        assert abs(float(val[s]) - vi[s]) < 1e-6
        assert 0 <= val[s] <= 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([1, 2]))
def test_bellman_optimality_exact(seed, env):
    m = random_memdp(seed, revealed=False)
    mi = m.env(env)
    val = mdpa.optimal_value(mi, Objective.reach(m.target))
    for s in m.states:
        if s in m.target or val[s] == 0:
            continue
        best = max(sum(p * val[t] for t, p in mi.delta[(s, a)].items()) for a in mi.enabled[s])
        assert best == val[s]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(["reach", "safety", "parity"]))
def test_optimal_strategy_attains_value(seed, kind):
    m = random_memdp(seed, revealed=False)
    phi = {"reach": Objective.reach(m.target), "safety": Objective.safety(m.target),
           "parity": Objective.parity(m.priority)}[kind]
    for env in (1, 2):
        mi = m.env(env)
        val = mdpa.optimal_value(mi, phi)
        sm = mdpa.optimal_memoryless_strategy(mi, phi)
        assert sm.size == 1
        for s in m.states:
            assert exact_objective_prob(product_chain(mi, sm, s), phi) == val[s]


def test_value_monotone_in_target():
    m = random_memdp(7, revealed=False)
    small = mdpa.optimal_value(m.env(1), Objective.reach(m.target))
    big = mdpa.optimal_value(m.env(1), Objective.reach(set(m.target) | {m.states[0]}))
    assert all(big[s] >= small[s] for s in m.states)


def test_gadget_pure_a_chain():
    inst = gen_product_partition([2, 3, 6])
    m = inst.model
    # keep only action a: the single remaining path has probability 1/2 * 1/3 * 1/6
    d = {k: v for k, v in m.delta[0].items() if k[1] == "a"}
    mi = _single(m.states, d)
    assert mdpa.optimal_value(mi, Objective.reach(inst.target))["s1"] == Fraction(1, 36)


def test_safety_is_sure_safety():
    m = build_memdp(["s", "t", "bad"], ["a"],
                    {("s", "a"): {"t": Fraction(1, 2), "bad": Fraction(1, 2)}, ("t", "a"): {"t": 1},
                     ("bad", "a"): {"bad": 1}},
                    {("s", "a"): {"t": Fraction(1, 2), "bad": Fraction(1, 2)}, ("t", "a"): {"t": 1},
                     ("bad", "a"): {"bad": 1}})
    assert mdpa.winning_states(m.env(1), Objective.safety({"s", "t"})) == {"t"}


@pytest.mark.parametrize("prio, expected", [(0, 1), (1, 0)])
def test_ec_parity_single_state(prio, expected):
    m = _single(["x"], {("x", "a"): {"x": Fraction(1)}})
    win, choice = mdpa.ec_parity_winning(m, {"x": frozenset({"a"})}, {"x": prio})
    assert win == expected
    assert (choice is not None) == bool(expected)


def test_ec_parity_two_states():
    m = _single(["x", "y"], {("x", "a"): {"y": Fraction(1)}, ("y", "a"): {"x": Fraction(1)}})
    ec = {"x": frozenset({"a"}), "y": frozenset({"a"})}
    win, choice = mdpa.ec_parity_winning(m, ec, {"x": 0, "y": 1})
    assert win == 1


def test_ec_parity_support_invariant():
    # same supports, different probabilities: same answer
    for p in (Fraction(1, 2), Fraction(1, 9)):
        m = _single(["x", "y"], {("x", "a"): {"x": p, "y": 1 - p}, ("y", "a"): {"x": Fraction(1)},
                                 ("y", "b"): {"y": Fraction(1)}})
        ec = {"x": frozenset({"a"}), "y": frozenset({"a", "b"})}
        win, choice = mdpa.ec_parity_winning(m, ec, {"x": 1, "y": 2})
        assert win == 1
        assert choice["y"] == {"b": 1}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_winning_states_support_invariant(seed):
    m = random_memdp(seed, revealed=False)
    phi = Objective.parity(m.priority)
    # reweight every distribution while keeping the supports
    d = {k: {t: Fraction(1, len(v)) for t in v} for k, v in m.delta[0].items()}
    m2 = Mdp(m.states, m.enabled, d)
    assert mdpa.winning_states(m.env(1), phi) == mdpa.winning_states(m2, phi)
