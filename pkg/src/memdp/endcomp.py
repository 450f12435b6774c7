"""Double end components and the contraction transformations hat, tilde and bar."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import mdp as mdpa
from .errors import RequiresNormalForm, RequiresTrivialDecs
from .model import Mdp, Memdp, Objective
from .preprocess import (StateMapping, TransformResult, annotate, objective_states_absorbing,
                         require_revealed, revealed_winning, union_mdp)


@dataclass
class Dec:
    sub: mdpa.SubMdp
    distinguishing: bool
    frontier: Tuple[Tuple[str, str], ...]
    trivial: bool

    @property
    def states(self):
        return frozenset(self.sub)


@dataclass
class GoodEndComponent:
    env: int
    sub: mdpa.SubMdp

    @property
    def states(self):
        return frozenset(self.sub)


def common_mdp(m: Memdp) -> Mdp:
    """Environment-1 MDP keeping only actions whose support is the same in both."""
    enabled = {s: tuple(a for a in m.enabled[s] if m.same_support(s, a)) for s in m.states}
    delta = {(s, a): m.delta[0][(s, a)] for s in m.states for a in enabled[s]}
    return Mdp(m.states, enabled, delta)


def dec_decompose(m: Memdp) -> List[Dec]:
    """Maximal double end components, ordered by their first state."""
    common = common_mdp(m)
    sub = {s: frozenset(acts) for s, acts in common.enabled.items() if acts}
    out = []
    for ec in mdpa.mec_decompose(common, sub):
        dist = any(m.delta[0][(s, a)] != m.delta[1][(s, a)] for s, acts in ec.items() for a in acts)
        frontier = tuple((s, a) for s in m.states if s in ec for a in m.enabled[s] if a not in ec[s])
        trivial = len(ec) == 1 and m.is_absorbing(next(iter(ec)))
        out.append(Dec(ec, dist, frontier, trivial))
    return out


def _index(m: Memdp):
    return {s: k for k, s in enumerate(m.states)}


def _merge(dist, redirect) -> Dict[str, Fraction]:
    out: Dict[str, Fraction] = {}
    for t, p in dist.items():
        u = redirect.get(t, t)
        out[u] = out.get(u, 0) + p
    return out


def _order(states, idx):
    return sorted(states, key=idx.get)


# ------------------------------------------------------------------------- hat


def build_hat(m: Memdp, phi: Objective) -> TransformResult:
    """Contract every non-trivial maximal DEC.

    Requires revealed form with absorbing objective states.
    """
    if phi.kind not in ("reach", "safety"):
        raise ValueError("build_hat takes a reach or safety objective; use build_bar for parity")
    try:
        require_revealed(m)
    except Exception as exc:
        raise RequiresNormalForm(str(exc)) from None
    if not objective_states_absorbing(m, phi):
        raise RequiresNormalForm("objective states must be absorbing")
    return _hat(m, phi)


def _stay_value(m: Memdp, dec: Dec, phi: Objective) -> Fraction:
    if phi.kind == "reach":
        return Fraction(int(all(s in phi.target for s in dec.sub)))
    if phi.kind == "safety":
        return Fraction(int(all(s in phi.target for s in dec.sub)))
    return Fraction(mdpa.ec_parity_winning(m.env(1), dec.sub, phi.priorities)[0])


def _hat(m: Memdp, phi: Objective) -> TransformResult:
    idx = _index(m)
    decs = [d for d in dec_decompose(m) if not d.trivial]
    decs.sort(key=lambda d: min(idx[s] for s in d.sub))
    values = {i: mdpa.optimal_value(m.env(i), phi) for i in (1, 2)}
    owner: Dict[str, int] = {}
    for n, d in enumerate(decs):
        for s in d.sub:
            owner[s] = n
    redirect = {s: f"__sD__{owner[s]}" for s in owner}
    loop_action = m.actions[0]
    states: List[str] = []
    for s in m.states:
        if s not in owner:
            states.append(s)
        elif min(decs[owner[s]].sub, key=idx.get) == s:
            states.append(redirect[s])
    enabled: Dict[str, Tuple[str, ...]] = {}
    d1: Dict = {}
    d2: Dict = {}
    actions = list(m.actions)
    for s in m.states:
        if s in owner:
            continue
        enabled[s] = m.enabled[s]
        for a in m.enabled[s]:
            d1[(s, a)] = _merge(m.delta[0][(s, a)], redirect)
            d2[(s, a)] = _merge(m.delta[1][(s, a)], redirect)
    kinds: Dict[str, str] = {}
    ann: Dict[str, Tuple[Fraction, Fraction]] = {}
    fresh_sinks = []
    extra_r = {1: set(), 2: set()}
    records = []
    for n, dec in enumerate(decs):
        sd, w, l, stay = f"__sD__{n}", f"__WD__{n}", f"__LD__{n}", f"__stay__{n}"
        first = min(dec.sub, key=idx.get)
        kinds[sd] = "ContractedDec"
        actions.append(stay)
        if dec.distinguishing:
            v = (values[1][first], values[2][first])
            acts = [stay]
        else:
            vs = _stay_value(m, dec, phi)
            v = (vs, vs)
            acts = [stay]
        ann[sd] = v
        dist = [{}, {}]
        for i in (0, 1):
            if v[i] > 0:
                dist[i][w] = v[i]
            if v[i] < 1:
                dist[i][l] = 1 - v[i]
        d1[(sd, stay)], d2[(sd, stay)] = dist
        for sink, kind, good in ((w, "WinSink", True), (l, "LoseSink", False)):
            envs = [i for i in (1, 2) if sink in dist[i - 1]]
            if not envs:
                continue
            fresh_sinks.append(sink)
            kinds[sink] = kind
            ann[sink] = (Fraction(int(good)), Fraction(int(good)))
            if len(envs) == 1:
                extra_r[envs[0]].add(sink)
        frontier_names = {}
        if not dec.distinguishing:
            for f, a in dec.frontier:
                name = f"{f}.{a}"
                frontier_names[name] = (f, a)
                acts.append(name)
                if name not in actions:
                    actions.append(name)
                d1[(sd, name)] = _merge(m.delta[0][(f, a)], redirect)
                d2[(sd, name)] = _merge(m.delta[1][(f, a)], redirect)
        enabled[sd] = tuple(acts)
        records.append({"n": n, "dec": dec, "sD": sd, "W": w, "L": l, "stay": stay,
                        "frontier": frontier_names, "values": v})
    for sink in fresh_sinks:
        states.append(sink)
        enabled[sink] = (loop_action,)
        d1[(sink, loop_action)] = {sink: Fraction(1)}
        d2[(sink, loop_action)] = {sink: Fraction(1)}
    obj = _hat_objective(m, phi, records, owner, set(states))
    revealed = None
    if m.revealed is not None:
        revealed = tuple(frozenset((m.revealed[i - 1] - owner.keys()) | extra_r[i]) for i in (1, 2))
    out = Memdp(tuple(states), tuple(actions), enabled, (d1, d2), revealed=revealed)
    out = annotate(out, obj)
    mapping = StateMapping({s: redirect.get(s, s) for s in m.states}, kinds)
    res = TransformResult(out, obj, mapping, ann)
    res.info["decs"] = records
    res.info["source"] = m
    res.info["objective"] = phi
    return res


def _hat_objective(m: Memdp, phi: Objective, records, owner, present) -> Objective:
    # sinks that no stay action can reach are never created
    if phi.kind == "reach":
        return Objective.reach(({s for s in phi.target if s not in owner} | {r["W"] for r in records}) & present)
    if phi.kind == "safety":
        safe = {s for s in phi.target if s not in owner} | {r["W"] for r in records}
        safe |= {r["sD"] for r in records if all(s in phi.target for s in r["dec"].sub)}
        return Objective.safety(safe & present)
    pr = {s: p for s, p in phi.priorities.items() if s not in owner}
    top = max(phi.priorities.values())
    top_odd = top if top % 2 else top + 1
    for r in records:
        pr[r["sD"]] = top_odd
        pr[r["W"]] = 0
        pr[r["L"]] = 1
    return Objective.parity({s: p for s, p in pr.items() if s in present})


def hat_is_transient(res: TransformResult) -> bool:
    """Every MEC of M^_i is a trivial DEC or contains no end component of M^_{3-i}."""
    m = res.model
    for i in (1, 2):
        mi, mo = m.env(i), m.env(3 - i)
        for ec in mdpa.mec_decompose(mi):
            if len(ec) == 1 and m.is_absorbing(next(iter(ec))):
                continue
            # an end component of the other environment inside ec would be
            # an end component of the restriction of that environment to ec
            inner = {s: frozenset(a for a in m.enabled[s] if mo.post(s, a) <= ec.keys()) for s in ec}
            inner = {s: acts for s, acts in inner.items() if acts}
            if inner and mdpa.mec_decompose(mo, inner):
                return False
    return True


# ----------------------------------------------------------------------- tilde


def _require_trivial_decs(m: Memdp):
    bad = [d for d in dec_decompose(m) if not d.trivial]
    if bad:
        raise RequiresTrivialDecs(f"non-trivial DEC on states {sorted(bad[0].sub)}")


def mgec_compute(m: Memdp, phi: Objective, i: int) -> List[GoodEndComponent]:
    """Maximal good end components of M_i for a reachability objective."""
    _require_trivial_decs(m)
    require_revealed(m)
    rphi = revealed_winning(m, phi)
    r_other = m.revealed[2 - i]
    rphi_other = rphi & r_other
    union = union_mdp(m)
    mi, mo = m.env(i), m.env(3 - i)
    u = set()
    for d in mdpa.mec_decompose(mi):
        sub = mdpa.restrict(union, set(d) | r_other)
        u |= mdpa.sure_safe(sub, set(d) | rphi_other) & set(d)
    ok = rphi_other | u
    sub = {}
    for s in m.states:
        if s not in u:
            continue
        acts = frozenset(a for a in m.enabled[s] if mi.post(s, a) <= u and mo.post(s, a) <= ok)
        if acts:
            sub[s] = acts
    out = []
    for ec in mdpa.mec_decompose(mi, sub):
        if mdpa.is_end_component(mo, ec):
            # a DEC, hence an absorbing state here; good only when already winning
            if all(s in phi.target for s in ec):
                out.append(GoodEndComponent(i, ec))
        else:
            out.append(GoodEndComponent(i, ec))
    return out


def build_tilde(m: Memdp, phi: Objective) -> TransformResult:
    """Contract maximal good end components into fresh absorbing states t_D."""
    if phi.kind != "reach":
        raise ValueError("build_tilde takes a reachability objective")
    _require_trivial_decs(m)
    idx = _index(m)
    comps = []
    for i in (1, 2):
        found = [g for g in mgec_compute(m, phi, i) if not (len(g.sub) == 1 and m.is_absorbing(next(iter(g.sub))))]
        found.sort(key=lambda g: tuple(sorted(g.sub)))
        comps.extend(found)
    marked: Dict[str, str] = {}
    records = []
    target = set(phi.target)
    kinds = {}
    for n, g in enumerate(comps):
        td = f"__tD__{n}"
        mine = [s for s in _order(g.sub, idx) if s not in marked]
        if not mine:
            continue
        for s in mine:
            marked[s] = td
        win = set(g.sub) <= mdpa.winning_states(m.env(g.env), phi)
        if win:
            target.add(td)
        kinds[td] = "TDstate"
        records.append({"n": n, "gec": g, "tD": td, "marked": frozenset(mine), "winning": win})
    loop_action = m.actions[0]
    states = [s for s in m.states if s not in marked] + [r["tD"] for r in records]
    enabled = {}
    d1, d2 = {}, {}
    for s in m.states:
        if s in marked:
            continue
        enabled[s] = m.enabled[s]
        for a in m.enabled[s]:
            d1[(s, a)] = _merge(m.delta[0][(s, a)], marked)
            d2[(s, a)] = _merge(m.delta[1][(s, a)], marked)
    for r in records:
        td = r["tD"]
        enabled[td] = (loop_action,)
        d1[(td, loop_action)] = {td: Fraction(1)}
        d2[(td, loop_action)] = {td: Fraction(1)}
    obj = Objective.reach(target - marked.keys())
    revealed = tuple(frozenset(m.revealed[i] - marked.keys()) for i in (0, 1))
    out = annotate(Memdp(tuple(states), m.actions, enabled, (d1, d2), revealed=revealed), obj)
    res = TransformResult(out, obj, StateMapping({s: marked.get(s, s) for s in m.states}, kinds))
    res.info["mgecs"] = records
    res.info["source"] = m
    return res


# ------------------------------------------------------------------------- bar


def build_bar(m: Memdp, phi: Objective) -> TransformResult:
    """Parity to reachability: contract DECs, then offer at every state of a
    non-trivial MEC of M^_i an action a_D that settles the game in a fresh
    sink t_D^0 (even) or t_D^1 (odd)."""
    if phi.kind != "parity":
        raise ValueError("build_bar takes a parity objective")
    hat = _hat(m.copy_with(revealed=None), phi)
    mh = hat.model
    idx = {s: k for k, s in enumerate(mh.states)}
    values = {i: mdpa.optimal_value(m.env(i), phi) for i in (1, 2)}
    rep = {}
    for s in m.states:
        rep.setdefault(hat.mapping.forward[s], s)
    states = list(mh.states)
    enabled = {s: list(a) for s, a in mh.enabled.items()}
    d1, d2 = dict(mh.delta[0]), dict(mh.delta[1])
    actions = list(mh.actions)
    pr = dict(hat.objective.priorities)
    kinds = dict(hat.mapping.kinds)
    ann = dict(hat.values)
    records = []
    n = 0
    loop_action = m.actions[0]
    for i in (1, 2):
        ecs = mdpa.mec_decompose(mh.env(i))
        ecs.sort(key=lambda ec: min(idx[s] for s in ec))
        for ec in ecs:
            if len(ec) == 1 and mh.is_absorbing(next(iter(ec))):
                continue
            t0, t1, ad = f"__tD0__{n}", f"__tD1__{n}", f"__aD__{n}"
            actions.append(ad)
            for s in _order(ec, idx):
                v = values[i][rep[s]]
                here = {}
                if v > 0:
                    here[t0] = v
                if v < 1:
                    here[t1] = 1 - v
                there = {t1: Fraction(1)}
                enabled[s].append(ad)
                if i == 1:
                    d1[(s, ad)], d2[(s, ad)] = here, there
                else:
                    d1[(s, ad)], d2[(s, ad)] = there, here
            for t, p, kind in ((t0, 0, "TD0"), (t1, 1, "TD1")):
                states.append(t)
                enabled[t] = [loop_action]
                d1[(t, loop_action)] = {t: Fraction(1)}
                d2[(t, loop_action)] = {t: Fraction(1)}
                pr[t] = p
                kinds[t] = kind
            records.append({"n": n, "env": i, "mec": ec, "t0": t0, "t1": t1, "aD": ad})
            n += 1
    enabled = {s: tuple(a) for s, a in enabled.items()}
    pre = Memdp(tuple(states), tuple(actions), enabled, (d1, d2))
    goal = {s for s in states if pr[s] % 2 == 0 and pre.is_absorbing(s)}
    obj = Objective.reach(goal)
    out = annotate(pre, obj).copy_with(priority=pr)
    res = TransformResult(out, obj, StateMapping(dict(hat.mapping.forward), kinds), ann)
    res.info["hat"] = hat
    res.info["bars"] = records
    res.info["escape"] = {r["aD"]: r["env"] for r in records}
    res.info["parity"] = Objective.parity(pr)
    return res


# ------------------------------------------------------------- history reduce


def reduce_history(h: Sequence[str], ctx: TransformResult) -> List[str]:
    """Rewrite a history s0 a0 s1 ... sn of the original model into M^ terms.

    The history is truncated at the first state of a distinguishing MDEC, and
    every stretch inside a non-distinguishing MDEC collapses to s_D, keeping
    only frontier actions (named ``f.a``).
    """
    recs = {}
    for r in ctx.info.get("decs", ()):
        for s in r["dec"].sub:
            recs[s] = r
    out: List[str] = []
    n = len(h)
    k = 0
    while k < n:
        s = h[k]
        a = h[k + 1] if k + 1 < n else None
        r = recs.get(s)
        if r is None:
            out.append(s)
            if a is not None:
                out.append(a)
            k += 2
            continue
        if r["dec"].distinguishing:
            out.append(r["sD"])
            break
        if a is None:
            out.append(r["sD"])
            break
        if a not in r["dec"].sub[s]:
            out.extend([r["sD"], f"{s}.{a}"])
        k += 2
    return out
