import itertools
import math
from decimal import Decimal, localcontext
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from memdp import corpus
from memdp.chain import exact_probs
from memdp.errors import InvalidZeroSet, TooLarge
from memdp.model import Objective, build_memdp, memoryless
from memdp.quantitative import (Feasible, NotFoundAtTolerance, achievable, build_system,
                                enumerate_pure, gap_decide, gen_product_partition, memory_bound_N,
                                mixture_machine, quantitative_safety, solve_system)

F = Fraction


def _one_state():
    return build_memdp(["s", "T"], ["a"], {("s", "a"): {"T": 1}, ("T", "a"): {"T": 1}},
                       {("s", "a"): {"T": 1}, ("T", "a"): {"T": 1}}, target=["T"])


@pytest.mark.parametrize("K", [1, 2, 3])
@pytest.mark.parametrize("name", ["randomization_required", "aspositive", "unachievable"])
def test_counts_closed_form(name, K):
    m, phi, _ = corpus.load(name)
    sys = build_system(m, phi.target, K, (F(1, 2), F(1, 2)))
    nS = len(m.states)
    assert sys.num_value_clauses == 2 * nS * K
    assert sys.num_simplex_clauses == nS * K
    assert sys.num_variables == 2 * nS * K + sum(len(m.enabled[s]) for s in m.states) * K * K
    assert len(sys.clauses) == 3 * nS * K + 2
    assert sys.clauses[-2:] == [f"x[{sys.start},0] >= 1/2", f"y[{sys.start},0] >= 1/2"]


def test_trivial_system_feasible():
    m = _one_state()
    res = solve_system(build_system(m, {"T"}, 1, (1, 1), start="s"))
    assert isinstance(res, Feasible)
    assert res.values == (1, 1)
    assert res.strategy.table[("s", "m0")] == {("a", "m0"): 1}


def test_randomization_required_feasible():
    m, phi, _ = corpus.load("randomization_required")
    res = solve_system(build_system(m, phi.target, 1, (F(1, 2), F(1, 2)), start="s"))
    assert isinstance(res, Feasible)
    assert res.values == (F(1, 2), F(1, 2))
    assert exact_probs(m, res.strategy, phi, "s") == res.values


def test_invalid_zero_set():
    m, phi, _ = corpus.load("randomization_required")
    with pytest.raises(InvalidZeroSet):
        build_system(m, phi.target, 1, (0, 0), zero_sets=({"u"}, set()))
    with pytest.raises(ValueError):
        build_system(m, phi.target, 0, (0, 0))


def test_gadget_pure_solution():
    inst = gen_product_partition([2, 3, 6])
    m = inst.model
    res = solve_system(build_system(m, inst.target, 1, (F(1, 6), F(1, 6)), start="s1"))
    assert isinstance(res, Feasible)
    assert res.values == (F(1, 6), F(1, 6))
    assert exact_probs(m, res.strategy, Objective.reach(inst.target), "s1") == res.values


def test_gadget_mixtures_beat_sqrt_w():
    # randomizing between complementary partitions lifts both values above sqrt(W)
    inst = gen_product_partition([2, 3, 6])
    alpha = F(1, 6) + F(1, 25)
    res = solve_system(build_system(inst.model, inst.target, 1, (alpha, alpha), start="s1"), restarts=16)
    assert isinstance(res, Feasible)
    assert all(v >= alpha for v in res.values)
    sample = enumerate_pure(inst.model, inst.target, "s1")
    w = achievable(sample, (F(5, 18), F(5, 18)))
    assert w is not None
    vals = exact_probs(inst.model, mixture_machine(sample, w), Objective.reach(inst.target), "s1")
    assert all(v >= F(5, 18) for v in vals)


def test_gadget_above_hull_not_found():
    inst = gen_product_partition([2, 3, 6])
    # the best symmetric point mixes (1, 1/36) and (1/36, 1) and is 37/72
    alpha = F(3, 5)
    res = solve_system(build_system(inst.model, inst.target, 1, (alpha, alpha), start="s1"), restarts=16)
    assert isinstance(res, NotFoundAtTolerance)
    assert achievable(enumerate_pure(inst.model, inst.target, "s1"), (alpha, alpha)) is None


def test_pure_values_counterexample_a():
    m, phi, _ = corpus.load("randomization_required")
    sample = enumerate_pure(m, phi.target, "s")
    assert sample.values == {(F(1), F(0)), (F(0), F(1))}
    w = achievable(sample, (F(1, 2), F(1, 2)))
    assert w is not None
    sm = mixture_machine(sample, w)
    assert exact_probs(m, sm, phi, "s") == (F(1, 2), F(1, 2))


@pytest.mark.parametrize("vals", [(2, 3, 6), (2, 2), (3, 5), (1, 4, 2)])
def test_gadget_product_formula(vals):
    inst = gen_product_partition(vals)
    sample = enumerate_pure(inst.model, inst.target, "s1")
    expected = set()
    for mask in itertools.product([0, 1], repeat=len(vals)):
        in_s = [v for v, b in zip(vals, mask) if b]
        out_s = [v for v, b in zip(vals, mask) if not b]
        expected.add((F(1, math.prod(out_s)), F(1, math.prod(in_s))))
    assert sample.values == expected
    for v, sm in sample.points:
        assert exact_probs(inst.model, sm, Objective.reach(inst.target), "s1") == v


def test_empty_target_values():
    inst = gen_product_partition([2, 3])
    assert enumerate_pure(inst.model, set(), "s1").values == {(F(0), F(0))}


def test_enumerate_rejects_cycles_and_size():
    m, phi, _ = corpus.load("unachievable")
    with pytest.raises(TooLarge):
        enumerate_pure(m, phi.target, "s")
    inst = gen_product_partition([2] * 12)
    with pytest.raises(TooLarge):
        enumerate_pure(inst.model, inst.target, "s1", bound=100)


def _in_hull(point, pts):
    # exact 2-D hull membership through triangles (degenerate ones cover segments)
    for a, b, c in itertools.combinations_with_replacement(pts, 3):
        det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
        if det != 0:
            l1 = ((point[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (point[1] - a[1])) / det
            l2 = ((b[0] - a[0]) * (point[1] - a[1]) - (point[0] - a[0]) * (b[1] - a[1])) / det
            if l1 >= 0 and l2 >= 0 and l1 + l2 <= 1:
                return True
        else:
            for u, w in ((a, b), (a, c), (b, c)):
                cross = (w[0] - u[0]) * (point[1] - u[1]) - (point[0] - u[0]) * (w[1] - u[1])
                if cross == 0 and min(u[0], w[0]) <= point[0] <= max(u[0], w[0]) \
                        and min(u[1], w[1]) <= point[1] <= max(u[1], w[1]):
                    return True
    return False


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=3, max_size=3))
def test_mixing_closure(weights):
    inst = gen_product_partition([2, 3, 4])
    m = inst.model
    choice = {s: {"a": F(1)} for s in m.states}
    for k, w in enumerate(weights):
        q = F(w, 8)
        choice[f"s{k + 1}"] = {a: p for a, p in (("a", q), ("b", 1 - q)) if p}
    vals = exact_probs(m, memoryless(choice), Objective.reach(inst.target), "s1")
    pts = list(enumerate_pure(m, inst.target, "s1").values)
    assert _in_hull(vals, pts)


def _eta_half():
    return build_memdp(["x", "y"], ["a"],
                       {("x", "a"): {"x": F(1, 2), "y": F(1, 2)}, ("y", "a"): {"y": 1}},
                       {("x", "a"): {"y": F(1)}, ("y", "a"): {"y": 1}})


def test_memory_bound_reference():
    m = _eta_half()
    with localcontext() as ctx:
        ctx.prec = 80
        inv_e = 1 / Decimal(1).exp()
    N, p, eta, _ = memory_bound_N(m, inv_e)
    assert (p, eta) == (F(1, 2), F(1, 2))
    assert N == 3 ** 512


def test_memory_bound_eps_one():
    assert memory_bound_N(_eta_half(), 1)[0] == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.integers(2, 60))
def test_memory_bound_monotone(a, b):
    m = _eta_half()
    lo, hi = sorted((a, b))
    assert memory_bound_N(m, F(1, hi))[0] >= memory_bound_N(m, F(1, lo))[0]


def test_memory_bound_eta_undefined():
    N, _, eta, diag = memory_bound_N(_one_state(), F(1, 10))
    assert N == 1 and eta is None and diag


def test_gap_gadget_yes():
    inst = gen_product_partition([2, 3, 6])
    res = gap_decide(inst.model, inst.target, (F(1, 6), F(1, 6)), F(1, 100), s0="s1")
    assert res.verdict == "Yes"
    vals = exact_probs(inst.model, res.strategy, Objective.reach(inst.target), "s1")
    assert vals == res.values and all(v >= F(1, 6) - F(1, 100) for v in vals)


def test_gap_limit_sure_route():
    m, phi, _ = corpus.load("unachievable")
    res = gap_decide(m, phi.target, (1, 1), F(1, 10), s0="s")
    assert res.verdict == "Yes" and res.route == "limit-sure"
    assert all(v >= F(9, 10) for v in res.values)


def test_gap_no_via_oracle():
    m, phi, _ = corpus.load("randomization_required")
    res = gap_decide(m, phi.target, (1, 1), F(1, 4), s0="s", restarts=8)
    assert res.verdict == "No" and res.route == "oracle"


def test_gap_unknown_when_oracle_unavailable():
    m, phi, _ = corpus.load("inf_memory")
    res = gap_decide(m, phi.target, (1, 1), F(1, 10), s0="s", restarts=4)
    assert res.verdict == "Unknown"


def test_safety_complement():
    m, phi, _ = corpus.load("randomization_required")
    safe = set(m.states) - phi.target
    res = quantitative_safety(m, safe, (F(1, 2), F(1, 2)), F(1, 100), s0="s")
    assert res.verdict == "Yes"
    reach = exact_probs(m, res.strategy, phi, "s")
    assert res.values == (1 - reach[0], 1 - reach[1])
    assert all(v >= F(1, 2) - F(1, 100) for v in res.values)


def test_all_safe_model():
    m = _one_state()
    res = quantitative_safety(m, set(m.states), (1, 1), F(1, 10), s0="s")
    assert res.verdict == "Yes" and res.values == (1, 1)


def test_gadget_safety_side():
    inst = gen_product_partition([2, 3, 6])
    # staying out of the target with probability >= 1 - 1/6 in both environments
    res = quantitative_safety(inst.model, set(inst.model.states) - inst.target,
                              (F(5, 6), F(5, 6)), F(1, 100), s0="s1")
    assert res.verdict == "Yes"


def test_product_partition_flags():
    inst = gen_product_partition([2, 3, 6])
    assert inst.V == 36 and inst.yes
    assert inst.sqrt_W == F(1, 6) and inst.eps_bound == F(1, 24)
    assert inst.thresholds == (F(1, 6), F(1, 6))
    assert not gen_product_partition([2]).yes
    assert gen_product_partition([2]).sqrt_W is None
    with pytest.raises(ValueError):
        gen_product_partition([])
