"""Acceptance criteria 1-9. Each test records one PASS/FAIL line that the
terminal summary prints; running this file as a script prints them too."""
import time
from fractions import Fraction

from memdp import corpus
from memdp.chain import exact_probs, product_chain, simulate_chain
from memdp.cli import run
from memdp.endcomp import build_bar, build_hat, dec_decompose
from memdp.model import Objective, memoryless, parse_memdp, parse_strategy, uniform
from memdp.preprocess import absorb_objective_states, to_revealed_form
from memdp.qualitative import decide_almost_sure, decide_limit_sure, limit_sure_strategy
from memdp.quantitative import Feasible, achievable, build_system, enumerate_pure, solve_system
from memdp.strategies import dec_sampling_strategy
from memdp import mdp as mdpa

from oracles import brute_as_parity, brute_as_reach, brute_ecs, random_memdp

F = Fraction
ONE = (F(1), F(1))


def _fmt(pair):
    return "(" + ", ".join(str(x) for x in pair) + ")" if pair is not None else "none"


def _record(acc, n, ok, detail):
    acc[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_1(acceptance, tmp_path, capsys):
    t0 = time.perf_counter()
    out = tmp_path / "w.strat"
    code = run(["check", "corpus:aspositive", "--mode", "almost-sure", "--objective", "reach",
                "--start", "s", "--witness", str(out), "--exit-status"])
    capsys.readouterr()
    m, phi, _ = corpus.load("aspositive")
    sm = parse_strategy(out.read_text())
    probs = exact_probs(m, sm, phi, "s")
    dt = time.perf_counter() - t0
    ok = code == 0 and sm.size == 1 and probs == ONE and dt < 1
    _record(acceptance, 1, ok, f"verdict Yes={code == 0} memoryless={sm.size == 1} probs={_fmt(probs)} {dt:.2f}s")


def test_criterion_2(acceptance):
    t0 = time.perf_counter()
    m, phi, _ = corpus.load("unachievable")
    a = decide_almost_sure(m, phi, "s")
    ls = decide_limit_sure(m, phi, "s")
    details = []
    ok = not a.yes and ls.yes
    for eps in (F(1, 10), F(1, 100)):
        probs = exact_probs(m, ls.witness(eps), phi, "s")
        ok = ok and all(p >= 1 - eps for p in probs)
        details.append(f"eps={eps}: ({float(probs[0]):.5f}, {float(probs[1]):.5f})")
    dt = time.perf_counter() - t0
    ok = ok and dt < 5
    _record(acceptance, 2, ok, f"AS={a.verdict} LS={ls.verdict} " + " ".join(details) + f" {dt:.2f}s")


def test_criterion_3(acceptance):
    m, phi, _ = corpus.load("randomization_required")
    res = solve_system(build_system(m, phi.target, 1, (F(1, 2), F(1, 2)), start="s"))
    probs = exact_probs(m, res.strategy, phi, "s") if isinstance(res, Feasible) else None
    values = enumerate_pure(m, phi.target, "s").values
    ok = probs == (F(1, 2), F(1, 2)) and values == {(F(1), F(0)), (F(0), F(1))}
    _record(acceptance, 3, ok, f"solver probs={_fmt(probs)} pure values={[_fmt(v) for v in sorted(values)]}")


def test_criterion_4(acceptance, tmp_path, capsys):
    gadget = tmp_path / "gadget.memdp"
    run(["gen", "product-partition", "2", "3", "6", "--out", str(gadget)])
    wit = tmp_path / "q.strat"
    code = run(["quant", str(gadget), "--memory", "1", "--alpha", "1/6", "1/6", "--witness", str(wit),
                "--exit-status"])
    capsys.readouterr()
    m, phi = parse_memdp(gadget.read_text())
    probs = exact_probs(m, parse_strategy(wit.read_text()), phi, "s1") if code == 0 else None
    sample = enumerate_pure(m, phi.target, "s1")
    clause1 = probs == (F(1, 6), F(1, 6))
    clause2 = len(sample.points) == 8 and achievable(sample, (F(1, 6), F(1, 6))) is not None
    delta = F(1, 1000)
    alpha = F(1, 6) + F(1, 24) + delta
    w = achievable(sample, (alpha, alpha))
    clause3 = w is None
    detail = f"quant probs={_fmt(probs)} pure={len(sample.points)} infeasible at 1/6+1/24+{delta}: {clause3}"
    if w is not None:
        mix = " + ".join(f"{lam}*{_fmt(sample.points[j][0])}" for j, lam in w.items())
        detail += f" (the mixture {mix} meets it)"
    _record(acceptance, 4, clause1 and clause2 and clause3, detail)


def test_criterion_5(acceptance):
    t0 = time.perf_counter()
    total = agree = 0
    for seed in range(200):
        m = random_memdp(seed, max_states=5, max_actions=2, revealed=True)
        s0 = m.states[0]
        for phi, oracle in ((Objective.reach(m.target), brute_as_reach(m, m.target, s0)),
                            (Objective.parity(m.priority), brute_as_parity(m, m.priority, s0))):
            d = decide_almost_sure(m, phi, s0)
            total += 1
            agree += d.yes == oracle
            if d.yes:
                agree -= exact_probs(m, d.witness, phi, s0) != ONE
    dt = time.perf_counter() - t0
    _record(acceptance, 5, agree == total and dt < 60, f"{agree}/{total} agree {dt:.1f}s")


def _transient_oracle(m):
    ecs = {i: [st for st, _ in brute_ecs(m, i)] for i in (0, 1)}
    for i in (0, 1):
        for st in ecs[i]:
            if len(st) == 1 and m.is_absorbing(next(iter(st))):
                continue
            if any(o <= st and not (len(o) == 1 and m.is_absorbing(next(iter(o)))) for o in ecs[1 - i]):
                return False
    return True


def test_criterion_6(acceptance):
    t0 = time.perf_counter()
    good = 0
    for seed in range(100):
        m = random_memdp(seed, max_states=5, revealed=False)
        phi = Objective.reach(m.target)
        rev = to_revealed_form(absorb_objective_states(m, phi), phi)
        h = build_hat(rev.model, rev.objective)
        good += _transient_oracle(h.model)
    dt = time.perf_counter() - t0
    _record(acceptance, 6, good == 100, f"{good}/100 transient {dt:.1f}s")


def test_criterion_7(acceptance):
    t0 = time.perf_counter()
    m, phi, e = corpus.load("unachievable")
    edge = tuple(e.fields["sampler-edge"].split())
    dec = [d for d in dec_decompose(m) if d.distinguishing][0]
    opt = {i: mdpa.optimal_choice(m.env(i), phi) for i in (1, 2)}
    ok = True
    details = []
    for eps in (F(1, 10), F(1, 100)):
        sm = dec_sampling_strategy(m, dec, eps, opt[1], opt[2], edge=edge)
        # opt_i wins surely in M_i and loses surely in the other, so the
        # misclassification probability is exactly one minus the reach value
        p1, p2 = exact_probs(m, sm, phi, "s")
        err = (1 - p1, 1 - p2)
        ok = ok and err[0] <= eps and err[1] <= eps
        details.append(f"eps={eps} K={sm.sampler.K} err=({float(err[0]):.6f}, {float(err[1]):.6f})")
        if eps == F(1, 100):
            ok = ok and sm.sampler.K == 103
    dt = time.perf_counter() - t0
    _record(acceptance, 7, ok and dt < 30, " ".join(details) + f" {dt:.1f}s")


def test_criterion_8(acceptance):
    m, phi, e = corpus.load("parity")
    bar = build_bar(m, phi)
    target_ok = bar.objective.target == {"s4", "s9", "__tD0__0", "__WD__0"}
    same = all(decide_limit_sure(m, phi, s).verdict
               == decide_limit_sure(bar.model, bar.objective, bar.mapping.forward[s]).verdict
               for s in m.states)
    eps = F(1, 10)
    probs = exact_probs(m, limit_sure_strategy(m, phi, eps, "s2"), phi, "s2")
    wit = all(p >= 1 - eps for p in probs)
    _record(acceptance, 8, target_ok and same and wit,
            f"target={sorted(bar.objective.target)} verdicts agree={same} "
            f"s2 witness=({float(probs[0]):.5f}, {float(probs[1]):.5f})")


def _corpus_pairs():
    pairs = []
    for name in corpus.names():
        m, phi, e = corpus.load(name)
        starts = [e.start] + ([e.fields["start-alt"]] if "start-alt" in e.fields else [])
        for s0 in starts:
            pairs.append((f"{name}/{s0}/uniform", m, phi, s0,
                          memoryless({s: uniform(m.enabled[s]) for s in m.states})))
            a = decide_almost_sure(m, phi, s0)
            if a.yes:
                pairs.append((f"{name}/{s0}/almost-sure", m, phi, s0, a.witness))
                continue
            ls = decide_limit_sure(m, phi, s0)
            if ls.yes:
                pairs.append((f"{name}/{s0}/limit-sure", m, phi, s0, ls.witness(F(1, 10))))
    return pairs


def test_criterion_9(acceptance):
    t0 = time.perf_counter()
    worst = (101, "")
    n = 0
    for label, m, phi, s0, sm in _corpus_pairs():
        exact = exact_probs(m, sm, phi, s0)
        for i in (1, 2):
            chain = product_chain(m.env(i), sm, s0)
            hits = 0
            for seed in range(100):
                est = simulate_chain(chain, phi, 10 ** 4, 2000, seed)
                hits += est.low <= float(exact[i - 1]) <= est.high
            n += 1
            worst = min(worst, (hits, f"{label}/env{i}"))
    dt = time.perf_counter() - t0
    _record(acceptance, 9, worst[0] >= 95,
            f"{n} pairs, worst {worst[0]}/100 inside the 99% interval ({worst[1]}) {dt:.0f}s")


if __name__ == "__main__":
    import sys

    import pytest

    sys.exit(pytest.main([__file__, "-q", "-s"]))
