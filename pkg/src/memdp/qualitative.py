"""Almost-sure and limit-sure decision procedures with witness synthesis."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Optional, Tuple, Union

from . import mdp as mdpa
from .chain import exact_probs
from .endcomp import build_bar, build_hat, build_tilde
from .errors import NotLimitSureYes
from .model import Mdp, Memdp, Objective, StrategyMachine, memoryless, uniform
from .preprocess import (TransformResult, absorb_objective_states, require_revealed,
                         revealed_winning, to_revealed_form, union_mdp)
from .strategies import (Alternating, HatLift, Memoryless, RevealLift, TildeLift, compile_strategy,
                         compose_switching, mgec_K, mix)


@dataclass
class Decision:
    verdict: str
    witness: Union[StrategyMachine, Callable[..., StrategyMachine], None] = None
    certificate: Dict[str, frozenset] = field(default_factory=dict)

    @property
    def yes(self) -> bool:
        return self.verdict == "Yes"


def _sub_memdp(m: Memdp, keep: set, allowed=None) -> Memdp:
    """Sub-MEMDP on ``keep`` using actions whose union support stays inside."""
    enabled = {}
    for s in m.states:
        if s not in keep:
            continue
        acts = tuple(a for a in m.enabled[s] if m.post(s, a) <= keep and (allowed is None or a in allowed[s]))
        enabled[s] = acts
    d = tuple({(s, a): m.delta[i][(s, a)] for s in enabled for a in enabled[s]} for i in (0, 1))
    rev = None
    if m.revealed is not None:
        rev = (m.revealed[0] & keep, m.revealed[1] & keep)
    return Memdp(tuple(s for s in m.states if s in keep), m.actions, enabled, d, revealed=rev,
                 target=m.target, safe=m.safe, priority=m.priority)


def _uniform_as(mi: Mdp, target) -> Dict[str, Dict[str, Fraction]]:
    """Uniform choice over actions that keep to the almost-sure set; this wins
    almost surely from every state of that set."""
    win = mdpa.as_reach(mi, target)
    out = {}
    for s in mi.states:
        acts = [a for a in mi.enabled[s] if mi.post(s, a) <= win] if s in win else []
        out[s] = uniform(acts or mi.enabled[s])
    return out


def _pure_as(mi: Mdp, target) -> Dict[str, Dict[str, Fraction]]:
    """Pure memoryless almost-sure strategy: inside the winning set pick an
    action that stays there and moves one layer closer to the target."""
    win = mdpa.as_reach(mi, target)
    out = {}
    layer = set(target) & win
    for s in layer:
        out[s] = {mi.enabled[s][0]: Fraction(1)}
    changed = True
    while changed:
        changed = False
        for s in mi.states:
            if s in out or s not in win:
                continue
            for a in mi.enabled[s]:
                post = mi.post(s, a)
                if post <= win and post & layer:
                    out[s] = {a: Fraction(1)}
                    break
        new = set(out) - layer
        if new:
            layer |= new
            changed = True
    for s in mi.states:
        out.setdefault(s, {mi.enabled[s][0]: Fraction(1)})
    return out


def algorithm1(m: Memdp, target, s0: str):
    """Almost-sure reachability on a revealed model with absorbing targets.

    Returns (yes, choice, certificate) where ``choice`` is a memoryless
    mixture of the two environments' almost-sure strategies on M'.
    """
    require_revealed(m)
    phi = Objective.reach(target)
    rphi = revealed_winning(m, phi)
    u = (mdpa.as_reach(m.env(1), target) & mdpa.as_reach(m.env(2), target)) | rphi
    z = mdpa.sure_safe(union_mdp(m), u)
    cert = {"U": frozenset(u), "M'": frozenset(z), "R^Phi": frozenset(rphi)}
    if s0 not in z:
        return False, None, cert
    sub = _sub_memdp(m, z)
    ok = all(s0 in mdpa.as_reach(sub.env(i), target) for i in (1, 2))
    if not ok:
        return False, None, cert
    c = {i: _uniform_as(sub.env(i), target) for i in (1, 2)}
    choice = mix(c[1], c[2], sub.states)
    for s in m.states:
        if s not in choice:
            choice[s] = uniform(m.enabled[s])
    return True, (choice, c), cert


def _opt_choices(m: Memdp, phi: Objective):
    return {i: mdpa.optimal_choice(m.env(i), phi) for i in (1, 2)}


def _reveal(m: Memdp, phi: Objective) -> TransformResult:
    return to_revealed_form(m, phi)


def _lift_reveal(inner, rev: TransformResult, m: Memdp, phi: Objective):
    split = rev.info.get("split", {})
    if not split:
        return inner
    return RevealLift(inner, split, _opt_choices(m, phi))


def _finish(lazy, m: Memdp, phi: Objective, s0: str) -> StrategyMachine:
    return compile_strategy(lazy, m, [s0])


def _project_memoryless(choice, m: Memdp, phi: Objective, s0: str, goal=Fraction(1)):
    """Use the revealed-model mixture directly on ``m`` when that is exactly enough."""
    sm = memoryless({s: choice[s] for s in m.states})
    if all(p >= goal for p in exact_probs(m, sm, phi, s0)):
        return sm
    return None


# --------------------------------------------------------------- almost sure


def decide_almost_sure(m: Memdp, phi: Objective, s0: str, alternate: bool = False) -> Decision:
    if phi.kind == "reach":
        return _as_reach(m, phi, s0, alternate)
    if phi.kind == "safety":
        return _as_safety(m, phi, s0)
    return _as_parity(m, phi, s0)


def _as_reach(m: Memdp, phi: Objective, s0: str, alternate: bool) -> Decision:
    mabs = absorb_objective_states(m, phi)
    rev = _reveal(mabs, phi)
    yes, data, cert = algorithm1(rev.model, rev.objective.target, s0)
    if not yes:
        return Decision("No", None, cert)
    choice, parts = data
    if alternate:
        mr = rev.model
        z = cert["M'"]
        sub = _sub_memdp(mr, set(z))
        pure = [{**{s: {mr.enabled[s][0]: Fraction(1)} for s in mr.states}, **_pure_as(sub.env(i), rev.objective.target)}
                for i in (1, 2)]
        inner = Alternating(pure[0], pure[1], len(mr.states))
        sm = _finish(_lift_reveal(inner, rev, mabs, phi), m, phi, s0)
        return Decision("Yes", sm, cert)
    sm = _project_memoryless(choice, m, phi, s0)
    if sm is None:
        sm = _finish(_lift_reveal(Memoryless(choice), rev, mabs, phi), m, phi, s0)
    return Decision("Yes", sm, cert)


def _safe_core(mrev: Memdp, phi: Objective):
    rphi = revealed_winning(mrev, phi)
    unrevealed = mrev.unrevealed()
    allowed = {s for s in unrevealed if s in phi.target} | rphi
    union = union_mdp(mrev)
    z = mdpa.sure_safe(union, allowed)
    return z, rphi


def _as_safety(m: Memdp, phi: Objective, s0: str) -> Decision:
    mabs = absorb_objective_states(m, phi)
    rev = _reveal(mabs, phi)
    mr = rev.model
    z, rphi = _safe_core(mr, phi)
    cert = {"Z": frozenset(z), "R^Phi": frozenset(rphi)}
    if s0 not in z:
        return Decision("No", None, cert)
    union = union_mdp(mr)
    choice = {}
    for s in mr.states:
        acts = [a for a in mr.enabled[s] if union.post(s, a) <= z] if s in z else []
        choice[s] = uniform(acts or mr.enabled[s])
    sm = _project_memoryless(choice, m, phi, s0)
    if sm is None:
        sm = _finish(_lift_reveal(Memoryless(choice), rev, mabs, phi), m, phi, s0)
    return Decision("Yes", sm, cert)


def algorithm2(m: Memdp, phi: Objective, s0: str):
    """Almost-sure parity on a revealed model. Returns (yes, machine, certificate)."""
    require_revealed(m)
    prio = phi.priorities
    rphi = revealed_winning(m, phi)
    u = (mdpa.as_parity(m.env(1), prio) & mdpa.as_parity(m.env(2), prio)) | rphi
    z = mdpa.sure_safe(union_mdp(m), u)
    cert = {"U": frozenset(u), "M'": frozenset(z), "R^Phi": frozenset(rphi)}
    if s0 not in z:
        cert.update({"T1": frozenset(), "T2": frozenset()})
        return False, None, cert
    sub = _sub_memdp(m, z)
    tsets = {}
    ecs = {}
    for i in (1, 2):
        mi = sub.env(i)
        ts = set()
        for ec in mdpa.mec_decompose(mi):
            win, choice = mdpa.ec_parity_winning(mi, ec, prio)
            if win:
                ts |= ec.keys()
                ecs.setdefault(i, []).append((ec, choice))
        tsets[i] = ts
    cert["T1"], cert["T2"] = frozenset(tsets[1]), frozenset(tsets[2])
    goal = tsets[1] | tsets[2]
    reach = Objective.reach(goal)
    sub_abs = absorb_objective_states(sub, reach)
    yes, data, _ = algorithm1(sub_abs, goal, s0)
    if not yes:
        return False, None, cert
    choice, _ = data
    outer = memoryless({s: choice[s] if s in choice else uniform(m.enabled[s]) for s in m.states})
    inner = {}
    which = {}
    for i in (1, 2):
        for k, (ec, ch) in enumerate(ecs.get(i, ())):
            key = f"T{i}_{k}"
            # the other environment may leave the component, but only into revealed sinks
            inner[key] = memoryless({**{s: uniform(m.enabled[s]) for s in m.states}, **ch})
            for s in ec:
                if i == 1 or s not in tsets[1]:
                    which[s] = key
    sm = compose_switching(outer, lambda s, _m: which.get(s), inner)
    return True, sm, cert


def _as_parity(m: Memdp, phi: Objective, s0: str) -> Decision:
    rev = _reveal(m, phi)
    yes, sm, cert = algorithm2(rev.model, rev.objective, s0)
    if not yes:
        return Decision("No", None, cert)
    if rev.info.get("split"):
        sm = _finish(_lift_reveal(sm, rev, m, phi), m, phi, s0)
    return Decision("Yes", sm, cert)


# --------------------------------------------------------------- limit sure


@dataclass
class LimitSurePlan:
    """Everything needed to instantiate limit-sure witnesses for any epsilon."""

    source: Memdp
    phi: Objective
    s0: str
    absorbed: Memdp
    rev: TransformResult
    hat: TransformResult
    tilde: TransformResult
    choice: dict
    components: int


def _ls_reach_plan(m: Memdp, phi: Objective, s0: str):
    mabs = absorb_objective_states(m, phi)
    rev = _reveal(mabs, phi)
    hat = build_hat(rev.model, rev.objective)
    tilde = build_tilde(hat.model, hat.objective)
    s_t = tilde.mapping.forward[hat.mapping.forward[s0]]
    yes, data, cert = algorithm1(tilde.model, tilde.objective.target, s_t)
    cert = dict(cert)
    cert["W"] = frozenset(s for s in m.states
                          if tilde.mapping.forward[hat.mapping.forward[s]] in cert["M'"])
    if not yes:
        return None, cert
    comps = sum(1 for r in hat.info["decs"] if r["dec"].distinguishing) + len(tilde.info["mgecs"])
    plan = LimitSurePlan(m, phi, s0, mabs, rev, hat, tilde, data[0], comps)
    return plan, cert


def _stay_choices(hat: TransformResult, phi: Objective):
    src = hat.info["source"]
    out = {}
    for r in hat.info["decs"]:
        sub = r["dec"].sub
        ch = None
        if phi.kind == "parity":
            win, ch = mdpa.ec_parity_winning(src.env(1), sub, phi.priorities)
        if ch is None:
            ch = {s: uniform(a for a in src.enabled[s] if a in sub[s]) for s in sub}
        out[r["n"]] = ch
    return out


def _ls_reach_lazy(plan: LimitSurePlan, epsilon, escape=None, parity_hat=None, parity_phi=None):
    eps_each = Fraction(epsilon) / max(1, plan.components)
    hat, tilde, rev = plan.hat, plan.tilde, plan.rev
    mhat = hat.model
    K = mgec_K(eps_each, mhat.smallest_probability())
    sigma = Memoryless(plan.choice)
    on_hat = TildeLift(sigma, tilde, K, _opt_choices(mhat, hat.objective))
    on_rev = HatLift(on_hat, hat, eps_each, _opt_choices(rev.model, rev.objective),
                     _stay_choices(hat, rev.objective))
    return _lift_reveal(on_rev, rev, plan.absorbed, plan.phi)


def decide_limit_sure(m: Memdp, phi: Objective, s0: str) -> Decision:
    """Limit-sure verdict; on Yes the witness maps epsilon to a strategy.

    When the objective also holds almost surely, the almost-sure witness is
    returned for every epsilon since it is both smaller and exact.
    """
    d = _decide_limit_sure(m, phi, s0)
    if d.yes and phi.kind != "safety":
        a = decide_almost_sure(m, phi, s0)
        if a.yes:
            sm = a.witness
            d.witness = lambda epsilon=None: sm
    return d


def _decide_limit_sure(m: Memdp, phi: Objective, s0: str) -> Decision:
    if phi.kind == "safety":
        d = _as_safety(m, phi, s0)
        if d.yes:
            sm = d.witness
            return Decision("Yes", lambda epsilon=None: sm, d.certificate)
        return d
    if phi.kind == "reach":
        plan, cert = _ls_reach_plan(m, phi, s0)
        if plan is None:
            return Decision("No", None, cert)
        return Decision("Yes", lambda epsilon: compile_strategy(_ls_reach_lazy(plan, epsilon), m, [s0]), cert)
    return _ls_parity(m, phi, s0)


def _ls_parity(m: Memdp, phi: Objective, s0: str) -> Decision:
    bar = build_bar(m, phi)
    sbar = bar.mapping.forward[s0]
    plan, cert = _ls_reach_plan(bar.model, bar.objective, sbar)
    cert = dict(cert)
    cert["W"] = frozenset(s for s in m.states if bar.mapping.forward[s] in cert.get("W", ()))
    if plan is None:
        return Decision("No", None, cert)
    hat = bar.info["hat"]
    escape = bar.info["escape"]
    opt = _opt_choices(m, phi)

    def witness(epsilon):
        on_bar = _ls_reach_lazy(plan, Fraction(epsilon) / 2)
        lazy = HatLift(on_bar, hat, Fraction(epsilon) / 2, opt, _stay_choices(hat, phi), escape)
        return compile_strategy(lazy, m, [s0])

    return Decision("Yes", witness, cert)


def limit_sure_strategy(m: Memdp, phi: Objective, epsilon, s0: Optional[str] = None) -> StrategyMachine:
    """epsilon-optimal witness for a limit-sure Yes instance."""
    starts = [s0] if s0 is not None else list(m.states)
    for s in starts:
        d = decide_limit_sure(m, phi, s)
        if not d.yes:
            raise NotLimitSureYes(f"limit-sure {phi.kind} fails from {s}")
    if s0 is None:
        raise ValueError("a start state is required")
    return d.witness(epsilon)


def witness_check(m: Memdp, phi: Objective, sm, s0: str, bound) -> Tuple[Tuple[Fraction, Fraction], bool]:
    probs = exact_probs(m, sm, phi, s0)
    return probs, all(p >= Fraction(bound) for p in probs)
