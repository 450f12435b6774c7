"""Normal forms: absorbing objective states, revealed form, and the union MDP."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

from . import mdp as mdpa
from .errors import RequiresRevealedForm, ValidationError
from .model import Mdp, Memdp, Objective, revealed_violations


@dataclass
class StateMapping:
    """Original state -> transformed state, plus the kind of every fresh state."""

    forward: Dict[str, str]
    kinds: Dict[str, str] = field(default_factory=dict)

    def lines(self):
        for s, t in self.forward.items():
            yield f"{s} -> {t} {self.kinds.get(t, 'Original')}"
        for t, k in self.kinds.items():
            if t not in self.forward.values():
                yield f"- -> {t} {k}"


@dataclass
class TransformResult:
    model: Memdp
    objective: Objective
    mapping: StateMapping
    values: Dict[str, Tuple[Fraction, Fraction]] = field(default_factory=dict)
    info: dict = field(default_factory=dict)


def union_mdp(m: Memdp) -> Mdp:
    """Single MDP whose supports are the union of both environments (uniform)."""
    delta = {}
    for s, a in m.pairs():
        sup = [t for t in m.states if t in m.delta[0][(s, a)] or t in m.delta[1][(s, a)]]
        q = Fraction(1, len(sup))
        delta[(s, a)] = {t: q for t in sup}
    return Mdp(m.states, m.enabled, delta)


def annotate(m: Memdp, phi: Objective) -> Memdp:
    """Copy of ``m`` whose annotations describe ``phi``."""
    if phi.kind == "reach":
        return m.copy_with(target=phi.target, safe=None, priority=None)
    if phi.kind == "safety":
        return m.copy_with(target=None, safe=phi.target, priority=None)
    return m.copy_with(target=None, safe=None, priority=dict(phi.priorities))


def absorb_objective_states(m: Memdp, phi: Objective) -> Memdp:
    """Make every target (reach) or unsafe (safety) state absorbing."""
    if phi.kind == "reach":
        sinks = set(phi.target)
    elif phi.kind == "safety":
        sinks = set(m.states) - set(phi.target)
    else:
        raise ValueError("absorb_objective_states expects a reach or safety objective")
    d1, d2 = dict(m.delta[0]), dict(m.delta[1])
    for s in sinks:
        for a in m.enabled[s]:
            d1[(s, a)] = {s: Fraction(1)}
            d2[(s, a)] = {s: Fraction(1)}
    return m.copy_with(delta=(d1, d2))


def objective_states_absorbing(m: Memdp, phi: Objective) -> bool:
    if phi.kind == "reach":
        return all(m.is_absorbing(s) for s in phi.target)
    if phi.kind == "safety":
        return all(m.is_absorbing(s) for s in m.states if s not in phi.target)
    return True


def _fresh_annotation(phi: Objective, good: str, bad: str) -> Objective:
    if phi.kind == "reach":
        return Objective.reach(phi.target | {good})
    if phi.kind == "safety":
        return Objective.safety(phi.target | {good})
    pr = dict(phi.priorities)
    pr[good], pr[bad] = 0, 1
    return Objective.parity(pr)


def to_revealed_form(m: Memdp, phi: Objective) -> TransformResult:
    """Bring ``m`` into revealed form.

    A state entered only through i-revealing edges (for one fixed i) that is
    already absorbing in both environments joins R_i as is. Every other
    i-revealing edge (s, a, t) is split between a fresh winning sink
    ``__top_i__<n>`` with mass delta_i(s,a,t) * Val(M_i, t) and a losing sink
    ``__bot_i__<n>`` with the remaining mass.
    """
    ident = StateMapping({s: s for s in m.states})
    if m.revealed is not None and not revealed_violations(m):
        return TransformResult(annotate(m, phi), phi, ident)
    incoming: Dict[str, set] = {s: set() for s in m.states}
    for s, a in m.pairs():
        for t in m.post(s, a):
            if t == s:
                continue
            for i in (1, 2):
                if t in m.delta[i - 1][(s, a)] and t not in m.delta[2 - i][(s, a)]:
                    incoming[t].add(i)
                    break
            else:
                incoming[t].add(0)
    keep = {1: set(), 2: set()}
    for t, kinds in incoming.items():
        if len(kinds) == 1 and 0 not in kinds and m.is_absorbing(t):
            keep[next(iter(kinds))].add(t)
    values = {i: mdpa.optimal_value(m.env(i), phi) for i in (1, 2)}
    states = list(m.states)
    enabled = dict(m.enabled)
    d = [dict(m.delta[0]), dict(m.delta[1])]
    kinds: Dict[str, str] = {}
    split: Dict[tuple, Tuple[Optional[str], Optional[str]]] = {}
    rev = {1: set(keep[1]), 2: set(keep[2])}
    obj = phi
    count = 0
    loop_action = m.actions[0]
    for i in (1, 2):
        for s, a in m.pairs():
            edges = [t for t in m.states if t in m.delta[i - 1][(s, a)] and t not in m.delta[2 - i][(s, a)]]
            edges = [t for t in edges if t not in keep[i]]
            if not edges:
                continue
            dist = dict(d[i - 1][(s, a)])
            for t in edges:
                mass = dist.pop(t)
                v = values[i][t]
                top, bot = f"__top_{i}__{count}", f"__bot_{i}__{count}"
                count += 1
                used_top = used_bot = None
                if mass * v != 0:
                    dist[top] = mass * v
                    used_top = top
                if mass * (1 - v) != 0:
                    dist[bot] = mass * (1 - v)
                    used_bot = bot
                for x, kind in ((used_top, f"Top_{i}"), (used_bot, f"Bot_{i}")):
                    if x is None:
                        continue
                    states.append(x)
                    enabled[x] = (loop_action,)
                    for j in (0, 1):
                        d[j][(x, loop_action)] = {x: Fraction(1)}
                    kinds[x] = kind
                    rev[i].add(x)
                obj = _fresh_annotation(obj, top, bot)
                split[(i, s, a, t)] = (used_top, used_bot)
            d[i - 1][(s, a)] = dist
    # zero-mass sinks were never created
    if obj.kind == "parity":
        obj = Objective.parity({s: obj.priorities[s] for s in states})
    elif obj.kind == "reach":
        obj = Objective.reach(obj.target & set(states))
    else:
        obj = Objective.safety(obj.target & set(states))
    out = Memdp(
        tuple(states), m.actions, enabled, (d[0], d[1]),
        revealed=(frozenset(rev[1]), frozenset(rev[2])),
    )
    out = annotate(out, obj)
    problems = revealed_violations(out)
    if problems:
        raise ValidationError(problems)
    res = TransformResult(out, obj, StateMapping({s: s for s in m.states}, kinds))
    res.info["split"] = split
    res.values = {x: (Fraction(1), Fraction(1)) if k.startswith("Top") else (Fraction(0), Fraction(0))
                  for x, k in kinds.items()}
    return res


def require_revealed(m: Memdp):
    if m.revealed is None:
        raise RequiresRevealedForm("model carries no revealed partition")
    problems = revealed_violations(m)
    if problems:
        raise RequiresRevealedForm("; ".join(problems))


def revealed_winning(m: Memdp, phi: Objective) -> set:
    """R^Phi: revealed states of R_i that win Phi almost surely in M_i."""
    require_revealed(m)
    out = set()
    for i in (1, 2):
        r = m.revealed[i - 1]
        out |= mdpa.winning_states(m.env(i), phi) & r
    return out
