"""Single-environment MDP analysis: end components, qualitative winning sets,
optimal values and optimal memoryless strategies.

Sub-MDPs are plain dicts ``state -> frozenset(actions)``.
"""
from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx

from .linalg import reach_probabilities
from .model import Mdp, Objective, StrategyMachine, memoryless, uniform

SubMdp = Dict[str, FrozenSet[str]]


def full_sub(m: Mdp) -> SubMdp:
    return {s: frozenset(m.enabled[s]) for s in m.states}


def restrict(m: Mdp, states: Iterable[str]) -> Mdp:
    """Maximal sub-MDP on ``states``: actions leaving the set are dropped, and
    states left without actions are removed until nothing changes."""
    keep = set(states)
    while True:
        enabled = {s: tuple(a for a in m.enabled[s] if m.post(s, a) <= keep) for s in m.states if s in keep}
        bad = {s for s, acts in enabled.items() if not acts}
        if not bad:
            break
        keep -= bad
    delta = {(s, a): m.delta[(s, a)] for s in enabled for a in enabled[s]}
    return Mdp(tuple(s for s in m.states if s in keep), enabled, delta)


def sub_to_mdp(m: Mdp, sub: SubMdp) -> Mdp:
    enabled = {s: tuple(a for a in m.enabled[s] if a in sub[s]) for s in m.states if s in sub}
    delta = {(s, a): m.delta[(s, a)] for s in enabled for a in enabled[s]}
    return Mdp(tuple(s for s in m.states if s in sub), enabled, delta)


def _graph(m: Mdp, sub: SubMdp) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(sub)
    for s, acts in sub.items():
        for a in acts:
            for t in m.delta[(s, a)]:
                g.add_edge(s, t)
    return g


def mec_decompose(m: Mdp, sub: Optional[SubMdp] = None) -> List[SubMdp]:
    """Maximal end components of ``m`` (optionally inside the sub-MDP ``sub``).

    Repeatedly splits into SCCs and removes actions whose support leaves the
    SCC of their source, until stable. Output is ordered by the first state
    of each component in ``m.states``.
    """
    cur = {s: set(acts) for s, acts in (sub or full_sub(m)).items()}
    while True:
        changed = False
        for s in list(cur):
            for a in list(cur[s]):
                if not m.post(s, a) <= cur.keys():
                    cur[s].discard(a)
                    changed = True
        for s in [s for s, acts in cur.items() if not acts]:
            del cur[s]
            changed = True
        comp_of = {}
        for k, comp in enumerate(nx.strongly_connected_components(_graph(m, cur))):
            for s in comp:
                comp_of[s] = k
        for s in list(cur):
            for a in list(cur[s]):
                if any(comp_of[t] != comp_of[s] for t in m.post(s, a)):
                    cur[s].discard(a)
                    changed = True
        if not changed:
            break
    groups: Dict[int, SubMdp] = {}
    for s in m.states:
        if s in cur:
            groups.setdefault(comp_of[s], {})[s] = frozenset(cur[s])
    return list(groups.values())


def is_end_component(m: Mdp, sub: SubMdp) -> bool:
    if not sub or any(not acts for acts in sub.values()):
        return False
    for s, acts in sub.items():
        for a in acts:
            if a not in m.enabled.get(s, ()) or not m.post(s, a) <= sub.keys():
                return False
    return nx.is_strongly_connected(_graph(m, sub))


# ----------------------------------------------------------------- qualitative


def _backward(m: Mdp, sub: SubMdp, goal: set) -> set:
    pred: Dict[str, set] = {}
    for s, acts in sub.items():
        for a in acts:
            for t in m.delta[(s, a)]:
                pred.setdefault(t, set()).add(s)
    seen = set(goal)
    todo = deque(seen)
    while todo:
        t = todo.popleft()
        for s in pred.get(t, ()):
            if s not in seen:
                seen.add(s)
                todo.append(s)
    return seen


def as_reach(m: Mdp, target: Iterable[str]) -> set:
    """Almost-sure reachability winning states."""
    target = set(target) & set(m.states)
    x = set(m.states)
    while True:
        sub = {s: frozenset(a for a in m.enabled[s] if m.post(s, a) <= x) for s in x if s not in target}
        y = _backward(m, sub, target) & (x | target)
        if y == x:
            return x
        x = y


def positive_reach(m: Mdp, target: Iterable[str]) -> set:
    return _backward(m, full_sub(m), set(target) & set(m.states))


def sure_safe(m: Mdp, safe: Iterable[str]) -> set:
    """Greatest set inside ``safe`` that some strategy never leaves."""
    x = set(safe) & set(m.states)
    while True:
        y = {s for s in x if any(m.post(s, a) <= x for a in m.enabled[s])}
        if y == x:
            return x
        x = y


def parity_winning_ecs(m: Mdp, prio) -> List[Tuple[SubMdp, int]]:
    """End components that are almost-surely parity winning, with the even
    priority they guarantee. Each is a MEC of ``m`` restricted to priorities
    at least k that contains a state of priority k."""
    out = []
    for k in sorted({v for v in prio.values() if v % 2 == 0}):
        sub = restrict(m, [s for s in m.states if prio[s] >= k])
        for ec in mec_decompose(sub):
            if any(prio[s] == k for s in ec):
                out.append((ec, k))
    return out


def as_parity(m: Mdp, prio) -> set:
    win = set()
    for ec, _ in parity_winning_ecs(m, prio):
        win |= ec.keys()
    return as_reach(m, win)


def winning_states(m: Mdp, phi: Objective) -> set:
    """Almost-sure winning states (sure winning for safety)."""
    if phi.kind == "reach":
        return as_reach(m, phi.target)
    if phi.kind == "safety":
        return sure_safe(m, phi.target)
    return as_parity(m, phi.priorities)


# ---------------------------------------------------------------- quantitative


def _policy_values(m: Mdp, policy: Dict[str, str], target: set) -> Dict[str, Fraction]:
    rows = {s: (m.delta[(s, policy[s])] if s not in target else {s: Fraction(1)}) for s in m.states}
    return reach_probabilities(rows, target)


def reach_values(m: Mdp, target: Iterable[str]) -> Tuple[Dict[str, Fraction], Dict[str, str]]:
    """Exact maximal reachability values and a pure memoryless optimal policy.

    Policy iteration with exact evaluation (states that cannot reach the
    target under the policy get 0) converges to the least fixpoint. The final
    policy is chosen among value-preserving actions by decreasing graph
    distance to the target, which keeps it optimal inside end components.
    """
    target = set(target) & set(m.states)
    policy = {s: m.enabled[s][0] for s in m.states}
    val = _policy_values(m, policy, target)
    while True:
        improved = False
        for s in m.states:
            if s in target:
                continue
            best, best_a = val[s], policy[s]
            for a in m.enabled[s]:
                q = sum(p * val[t] for t, p in m.delta[(s, a)].items())
                if q > best:
                    best, best_a = q, a
            if best_a != policy[s]:
                policy[s] = best_a
                improved = True
        if not improved:
            break
        val = _policy_values(m, policy, target)
    # attractor over optimal actions
    layer = {t: 0 for t in target}
    frontier = set(target)
    opt = {
        s: [a for a in m.enabled[s] if sum(p * val[t] for t, p in m.delta[(s, a)].items()) == val[s]]
        for s in m.states if s not in target
    }
    d = 0
    while frontier:
        d += 1
        nxt = set()
        for s, acts in opt.items():
            if s in layer or val[s] == 0:
                continue
            for a in acts:
                if any(t in frontier for t in m.delta[(s, a)]):
                    layer[s] = d
                    policy[s] = a
                    nxt.add(s)
                    break
        frontier = nxt
    return val, policy


def optimal_value(m: Mdp, phi: Objective) -> Dict[str, Fraction]:
    return _optimal(m, phi)[0]


def _optimal(m: Mdp, phi: Objective):
    if phi.kind == "reach":
        val, pol = reach_values(m, phi.target)
        return val, {s: {pol[s]: Fraction(1)} for s in m.states}
    if phi.kind == "safety":
        z = sure_safe(m, phi.target)
        safe = set(phi.target)
        # unsafe states absorb: runs through them are lost
        stopped = Mdp(
            m.states,
            {s: (m.enabled[s] if s in safe else m.enabled[s][:1]) for s in m.states},
            {**m.delta, **{(s, m.enabled[s][0]): {s: Fraction(1)} for s in m.states if s not in safe}},
        )
        val, pol = reach_values(stopped, z)
        choice = {s: {pol[s]: Fraction(1)} for s in m.states}
        for s in z:
            a = next(a for a in m.enabled[s] if m.post(s, a) <= z)
            choice[s] = {a: Fraction(1)}
        return val, choice
    ecs = parity_winning_ecs(m, phi.priorities)
    inside: Dict[str, Dict[str, Fraction]] = {}
    for ec, _ in ecs:
        for s, acts in ec.items():
            if s not in inside:
                inside[s] = uniform(a for a in m.enabled[s] if a in acts)
    val, pol = reach_values(m, inside)
    choice = {s: inside.get(s) or {pol[s]: Fraction(1)} for s in m.states}
    return val, choice


def optimal_choice(m: Mdp, phi: Objective) -> Dict[str, Dict[str, Fraction]]:
    """Memoryless optimal action distributions (pure except inside parity ECs)."""
    return _optimal(m, phi)[1]


def optimal_memoryless_strategy(m: Mdp, phi: Objective) -> StrategyMachine:
    return memoryless(optimal_choice(m, phi))


def ec_parity_winning(m: Mdp, ec: SubMdp, prio) -> Tuple[int, Optional[Dict[str, Dict[str, Fraction]]]]:
    """Decide whether the end component ``ec`` has a compatible strategy that
    wins parity almost surely; the witness is memoryless."""
    sub = sub_to_mdp(m, ec)
    for inner, _ in parity_winning_ecs(sub, prio):
        choice = {}
        for s in sub.states:
            acts = inner[s] if s in inner else ec[s]
            choice[s] = uniform(a for a in sub.enabled[s] if a in acts)
        return 1, choice
    return 0, None
