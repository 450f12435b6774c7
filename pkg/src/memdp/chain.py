"""Markov chains induced by finite-memory strategies: exact analysis,
Monte-Carlo estimation and likelihood ratios of histories."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Hashable, List, Sequence, Tuple

import numpy as np

from .errors import InconsistentHistory
from .linalg import bottom_sccs, reach_probabilities
from .model import Mdp, Memdp, Objective

Node = Tuple[str, Hashable]

WILSON_Z99 = 2.5758293035489004


@dataclass
class ProductChain:
    initial: Dict[Node, Fraction]
    rows: Dict[Node, Dict[Node, Fraction]]
    by_action: Dict[Node, Dict[str, Dict[Node, Fraction]]]

    @property
    def states(self):
        return list(self.rows)


def product_chain(m: Mdp, sm, s0: str) -> ProductChain:
    """Reachable part of the chain M^sigma from s0.

    Mass from (s, k) via a to (t, k2) is sigma_a(s,k)(a) * delta(s,a,t) *
    sigma_u(s,k,a)(k2); ``sm`` may be a StrategyMachine or a lazy strategy.
    """
    init = {(s0, k): Fraction(p) for k, p in sm.initial().items()}
    rows: Dict[Node, Dict[Node, Fraction]] = {}
    by_action: Dict[Node, Dict[str, Dict[Node, Fraction]]] = {}
    todo = deque(init)
    seen = set(init)
    while todo:
        node = todo.popleft()
        s, k = node
        row: Dict[Node, Fraction] = {}
        acts: Dict[str, Dict[Node, Fraction]] = {}
        for (a, k2), q in sm.joint(s, k).items():
            if q == 0:
                continue
            if a not in m.enabled[s]:
                raise ValueError(f"strategy plays {a} at {s} where it is not enabled")
            for t, p in m.delta[(s, a)].items():
                nxt = (t, k2)
                mass = q * p
                row[nxt] = row.get(nxt, 0) + mass
                acts.setdefault(a, {})
                acts[a][nxt] = acts[a].get(nxt, 0) + mass
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        rows[node] = row
        by_action[node] = acts
    return ProductChain(init, rows, by_action)


def _weighted(chain: ProductChain, val) -> Fraction:
    return sum((p * val[n] for n, p in chain.initial.items()), Fraction(0))


def exact_objective_prob(chain: ProductChain, phi: Objective) -> Fraction:
    """Exact probability of ``phi`` in the chain from its initial distribution."""
    if phi.kind == "reach":
        goal = [n for n in chain.rows if n[0] in phi.target]
        return _weighted(chain, reach_probabilities(chain.rows, goal))
    if phi.kind == "safety":
        bad = [n for n in chain.rows if n[0] not in phi.target]
        return 1 - _weighted(chain, reach_probabilities(chain.rows, bad))
    good = set()
    for b in bottom_sccs(chain.rows):
        if min(phi.priorities[n[0]] for n in b) % 2 == 0:
            good |= b
    return _weighted(chain, reach_probabilities(chain.rows, good))


def exact_probs(m: Memdp, sm, phi: Objective, s0: str) -> Tuple[Fraction, Fraction]:
    """Exact objective probabilities of ``sm`` in both environments."""
    return tuple(exact_objective_prob(product_chain(m.env(i), sm, s0), phi) for i in (1, 2))


def wilson_interval(successes: int, n: int, z: float = WILSON_Z99) -> Tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    ph = successes / n
    den = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class Estimate:
    value: float
    low: float
    high: float
    runs: int
    successes: int


def monte_carlo(m: Mdp, sm, phi: Objective, s0: str, runs: int, horizon: int, seed: int) -> Estimate:
    """Seeded simulation of the product chain.

    Reach is scored by hitting the target within ``horizon`` steps, safety by
    never leaving the safe set, parity by the minimal priority seen in the
    second half of the run (an approximation of the infinitely-often set).
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    return simulate_chain(product_chain(m, sm, s0), phi, runs, horizon, seed)


def simulate_chain(chain: ProductChain, phi: Objective, runs: int, horizon: int, seed: int) -> Estimate:
    """Monte-Carlo runs of an already built product chain; see ``monte_carlo``."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    nodes = list(chain.rows)
    index = {n: k for k, n in enumerate(nodes)}
    succ: List[int] = []
    cum: List[float] = []
    for k, n in enumerate(nodes):
        acc = 0.0
        items = list(chain.rows[n].items())
        for j, (t, p) in enumerate(items):
            acc += float(p)
            succ.append(index[t])
            # shift each row by its index so a single searchsorted serves all rows
            cum.append(k + (1.0 if j == len(items) - 1 else min(acc, 1.0)))
    cum_a = np.asarray(cum)
    succ_a = np.asarray(succ, dtype=np.int64)
    absorbing = np.array([chain.rows[n] == {n: 1} for n in nodes])
    states = [n[0] for n in nodes]
    rng = np.random.default_rng(seed)
    init_nodes = list(chain.initial)
    init_p = np.array([float(chain.initial[n]) for n in init_nodes])
    init_p = init_p / init_p.sum()
    pos = np.asarray([index[init_nodes[j]] for j in rng.choice(len(init_nodes), size=runs, p=init_p)])
    if phi.kind == "parity":
        prio = np.array([phi.priorities[s] for s in states])
        best = np.full(runs, np.iinfo(np.int64).max)
        cutoff = horizon // 2
    else:
        inside = np.array([(s in phi.target) for s in states])
        hit = inside[pos].copy() if phi.kind == "reach" else ~inside[pos]
    for step in range(horizon):
        u = rng.random(runs)
        pos = succ_a[np.searchsorted(cum_a, pos + u, side="right")]
        if phi.kind == "parity":
            if step >= cutoff:
                best = np.minimum(best, prio[pos])
        elif phi.kind == "reach":
            hit |= inside[pos]
        else:
            hit |= ~inside[pos]
        if absorbing[pos].all():
            if phi.kind == "parity":
                best = np.minimum(best, prio[pos])
            break
    if phi.kind == "parity":
        ok = (best % 2 == 0)
    elif phi.kind == "reach":
        ok = hit
    else:
        ok = ~hit
    k = int(ok.sum())
    lo, hi = wilson_interval(k, runs)
    return Estimate(k / runs, lo, hi, runs, k)


def posterior_ratio(m: Memdp, history: Sequence[str]):
    """P_1(h) / P_2(h) for a history s0 a0 s1 ... sn; ``math.inf`` when P_2(h) = 0."""
    p = [Fraction(1), Fraction(1)]
    for k in range(0, len(history) - 2, 2):
        s, a, t = history[k], history[k + 1], history[k + 2]
        for i in (0, 1):
            p[i] *= m.delta[i].get((s, a), {}).get(t, Fraction(0))
    if p[0] == 0 and p[1] == 0:
        raise InconsistentHistory("history has probability zero in both environments")
    if p[1] == 0:
        return math.inf
    return p[0] / p[1]
