"""Quantitative thresholds: the K-memory bilinear system, a multistart
feasibility solver, pure-strategy oracles and the product-partition gadget."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from . import mdp as mdpa
from .chain import exact_probs
from .endcomp import dec_decompose
from .errors import InvalidZeroSet, TooLarge
from .model import Memdp, Objective, StrategyMachine, build_memdp

Pair = Tuple[Fraction, Fraction]


# ------------------------------------------------------------------ system


@dataclass
class BilinearSystem:
    """Clauses of the K-memory system for two environments.

    ``x[(s, k)]`` and ``y[(s, k)]`` are the reach values in M_1 and M_2,
    ``p[(s, k)]`` lists the strategy unknowns (a, k2) of memory state (s, k).
    """

    model: Memdp
    target: frozenset
    K: int
    alphas: Pair
    zero_sets: Tuple[frozenset, frozenset]
    start: str
    sense: str = ">="
    x: List[Tuple[str, int]] = field(default_factory=list)
    y: List[Tuple[str, int]] = field(default_factory=list)
    p: Dict[Tuple[str, int], List[Tuple[str, int]]] = field(default_factory=dict)
    clauses: List[str] = field(default_factory=list)

    @property
    def num_variables(self) -> int:
        return len(self.x) + len(self.y) + sum(len(v) for v in self.p.values())

    @property
    def num_value_clauses(self) -> int:
        return len(self.x) + len(self.y)

    @property
    def num_simplex_clauses(self) -> int:
        return len(self.p)


def _default_zero_set(m: Memdp, target, i: int) -> frozenset:
    return frozenset(set(m.states) - mdpa.positive_reach(m.env(i), target))


def build_system(m: Memdp, target, K: int, alphas, zero_sets=None, start: Optional[str] = None,
                 sense: str = ">=") -> BilinearSystem:
    if K < 1:
        raise ValueError("memory size must be at least 1")
    if sense not in (">=", "<="):
        raise ValueError("sense must be >= or <=")
    target = frozenset(target)
    if zero_sets is None:
        zero_sets = (_default_zero_set(m, target, 1), _default_zero_set(m, target, 2))
    zero_sets = (frozenset(zero_sets[0]), frozenset(zero_sets[1]))
    for i, z in enumerate(zero_sets, 1):
        if z & target:
            raise InvalidZeroSet(f"zero set of environment {i} meets the target: {sorted(z & target)}")
    start = start if start is not None else m.states[0]
    alphas = (Fraction(alphas[0]), Fraction(alphas[1]))
    sys = BilinearSystem(m, target, K, alphas, zero_sets, start, sense)
    mem = range(K)
    for s in m.states:
        for k in mem:
            sys.x.append((s, k))
            sys.y.append((s, k))
            sys.p[(s, k)] = [(a, k2) for a in m.enabled[s] for k2 in mem]
    for var, i in (("x", 0), ("y", 1)):
        for s in m.states:
            for k in mem:
                if s in target:
                    sys.clauses.append(f"{var}[{s},{k}] = 1")
                elif s in zero_sets[i]:
                    sys.clauses.append(f"{var}[{s},{k}] = 0")
                else:
                    terms = []
                    for a in m.enabled[s]:
                        for t, q in m.delta[i][(s, a)].items():
                            for k2 in mem:
                                terms.append(f"{q}*p[{s},{k}]({a},{k2})*{var}[{t},{k2}]")
                    sys.clauses.append(f"{var}[{s},{k}] = " + " + ".join(terms))
    for (s, k), opts in sys.p.items():
        sys.clauses.append(" + ".join(f"p[{s},{k}]({a},{k2})" for a, k2 in opts) + " = 1")
    rel = sense
    sys.clauses.append(f"x[{start},0] {rel} {alphas[0]}")
    sys.clauses.append(f"y[{start},0] {rel} {alphas[1]}")
    return sys


# ------------------------------------------------------------------ solver


@dataclass
class Feasible:
    strategy: StrategyMachine
    values: Pair
    restart: int


@dataclass
class NotFoundAtTolerance:
    best: Tuple[float, float]
    restarts: int


class _Numeric:
    """Float encoding of a system: options (a, k2) grouped by free node (s, k)."""

    def __init__(self, sys: BilinearSystem):
        m = sys.model
        self.sys = sys
        K = sys.K
        free = [(s, k) for s in m.states for k in range(K)
                if s not in sys.target]
        self.nodes = free
        self.index = {n: j for j, n in enumerate(free)}
        opts, owner = [], []
        for n in free:
            for o in sys.p[n]:
                opts.append((n, o))
                owner.append(self.index[n])
        self.opts = opts
        self.owner = np.asarray(owner, dtype=np.int64)
        self.groups = [np.flatnonzero(self.owner == j) for j in range(len(free))]
        nN, nO = len(free), len(opts)
        self.C = [np.zeros((nO, nN)), np.zeros((nO, nN))]
        self.c = [np.zeros(nO), np.zeros(nO)]
        self.dead = [np.zeros(nN, dtype=bool), np.zeros(nN, dtype=bool)]
        for i in (0, 1):
            for (s, k), j in self.index.items():
                self.dead[i][j] = s in sys.zero_sets[i]
            for o, ((s, k), (a, k2)) in enumerate(opts):
                for t, q in m.delta[i][(s, a)].items():
                    if t in sys.target:
                        self.c[i][o] += float(q)
                    elif t not in sys.zero_sets[i]:
                        self.C[i][o, self.index[(t, k2)]] += float(q)
        self.start = self.index.get((sys.start, 0))

    def evaluate(self, p: np.ndarray, i: int):
        nN = len(self.nodes)
        Q = np.zeros((nN, nN))
        np.add.at(Q, self.owner, p[:, None] * self.C[i])
        r = np.zeros(nN)
        np.add.at(r, self.owner, p * self.c[i])
        live = ~self.dead[i]
        # nodes that cannot reach the target under the current support have value 0
        good = (r > 0) & live
        adj = (Q > 1e-15) & live[:, None]
        while True:
            nxt = good | (adj[:, good].any(axis=1) & live)
            if (nxt == good).all():
                break
            good = nxt
        x = np.zeros(nN)
        z = np.zeros(nN)
        if good[self.start]:
            g = np.flatnonzero(good)
            A = np.eye(len(g)) - Q[np.ix_(g, g)]
            x[g] = np.linalg.solve(A, r[g])
            e = np.zeros(len(g))
            e[np.searchsorted(g, self.start)] = 1.0
            z[g] = np.linalg.solve(A.T, e)
        else:
            # still credit options that would reach a live region
            z[self.start] = 1.0
        grad = z[self.owner] * (self.C[i] @ x + self.c[i])
        return x[self.start], grad

    def project(self, p: np.ndarray) -> np.ndarray:
        out = p.copy()
        for g in self.groups:
            v = out[g]
            u = np.sort(v)[::-1]
            css = np.cumsum(u) - 1.0
            rho = np.nonzero(u - css / (np.arange(len(u)) + 1) > 0)[0][-1]
            theta = css[rho] / (rho + 1.0)
            out[g] = np.maximum(v - theta, 0.0)
        return out


def _machine(sys: BilinearSystem, num: _Numeric, probs: Dict[int, Fraction]) -> StrategyMachine:
    m = sys.model
    mem = tuple(f"m{k}" for k in range(sys.K))
    table = {}
    for s in m.states:
        for k in range(sys.K):
            if (s, k) in num.index:
                row = {}
                for o in num.groups[num.index[(s, k)]]:
                    q = probs[int(o)]
                    if q:
                        a, k2 = num.opts[o][1]
                        row[(a, f"m{k2}")] = q
            else:
                row = {(m.enabled[s][0], f"m{k}"): Fraction(1)}
            table[(s, f"m{k}")] = row
    return StrategyMachine(mem, {"m0": Fraction(1)}, table)


_DENOMS = (1, 2, 3, 4, 5, 6, 8, 10, 12, 16, 20, 24, 32, 36, 48, 64, 100, 128, 1000, 10 ** 4, 10 ** 6)


def _candidates(num: _Numeric, p: np.ndarray):
    """Rational strategies near ``p``: the pure rounding first, then snaps to
    increasingly fine denominators."""
    pure = {}
    for g in num.groups:
        best = int(g[np.argmax(p[g])])
        for o in g:
            pure[int(o)] = Fraction(int(o == best))
    yield pure
    seen = set()
    for D in _DENOMS:
        cand = {}
        ok = True
        for g in num.groups:
            vals = [Fraction(float(p[o])).limit_denominator(D) for o in g]
            j = int(np.argmax(p[g]))
            vals[j] = 1 - (sum(vals) - vals[j])
            if vals[j] < 0:
                ok = False
                break
            for o, v in zip(g, vals):
                cand[int(o)] = v
        if not ok:
            continue
        key = tuple(sorted(cand.items()))
        if key in seen:
            continue
        seen.add(key)
        yield cand


def _meets(vals: Pair, alphas: Pair, sense: str) -> bool:
    if sense == ">=":
        return vals[0] >= alphas[0] and vals[1] >= alphas[1]
    return vals[0] <= alphas[0] and vals[1] <= alphas[1]


def solve_system(sys: BilinearSystem, restarts: int = 64, tolerance: float = 1e-9, seed: int = 0,
                 iterations: int = 400, pure_limit: int = 256):
    """Projected-gradient multistart on the value of the induced chains.

    Systems with at most ``pure_limit`` pure strategies are first searched
    exhaustively over those. Every accepted answer is checked with exact rational chain analysis, so a
    Feasible result is always sound; NotFoundAtTolerance proves nothing.
    """
    m, alphas, sense = sys.model, sys.alphas, sys.sense
    phi = Objective.reach(sys.target)
    sign = 1.0 if sense == ">=" else -1.0
    if sys.start in sys.target:
        vals = (Fraction(1), Fraction(1))
        if _meets(vals, alphas, sense):
            num = _Numeric(sys)
            return Feasible(_machine(sys, num, next(_candidates(num, np.ones(len(num.opts))))), vals, 0)
        return NotFoundAtTolerance((1.0, 1.0), 0)
    num = _Numeric(sys)
    tried = set()
    # small systems: try every pure strategy first, simplest witnesses win
    sizes = [len(g) for g in num.groups]
    if math.prod(sizes) <= pure_limit:
        for combo in itertools.product(*num.groups):
            cand = {o: Fraction(0) for o in range(len(num.opts))}
            for o in combo:
                cand[int(o)] = Fraction(1)
            tried.add(tuple(sorted(cand.items())))
            sm = _machine(sys, num, cand)
            vals = exact_probs(m, sm, phi, sys.start)
            if _meets(vals, alphas, sense):
                return Feasible(sm, vals, 0)
    rng = np.random.default_rng(seed)
    a1, a2 = float(alphas[0]), float(alphas[1])
    best_overall = (-math.inf, (0.0, 0.0))
    for r in range(max(1, restarts)):
        if r == 0:
            p = np.zeros(len(num.opts))
            for g in num.groups:
                p[g] = 1.0 / len(g)
        else:
            p = np.zeros(len(num.opts))
            for g in num.groups:
                p[g] = rng.dirichlet(np.full(len(g), 0.5))
        best = (-math.inf, p, (0.0, 0.0))
        for it in range(iterations):
            v1, g1 = num.evaluate(p, 0)
            v2, g2 = num.evaluate(p, 1)
            s1, s2 = sign * (v1 - a1), sign * (v2 - a2)
            slack = min(s1, s2)
            if slack > best[0]:
                best = (slack, p.copy(), (v1, v2))
            if slack >= -tolerance:
                break
            if s1 < s2 - 1e-4:
                g = g1
            elif s2 < s1 - 1e-4:
                g = g2
            else:
                g = g1 + g2
            g = sign * g
            scale = np.max(np.abs(g))
            if scale < 1e-14:
                break
            lr = 0.3 * (0.99 ** it) + 1e-3
            p = num.project(p + lr * g / scale)
        if best[0] > best_overall[0]:
            best_overall = (best[0], best[2])
        if best[0] < -1e-2:
            continue
        for cand in _candidates(num, best[1]):
            key = tuple(sorted(cand.items()))
            if key in tried:
                continue
            tried.add(key)
            sm = _machine(sys, num, cand)
            vals = exact_probs(m, sm, phi, sys.start)
            if _meets(vals, alphas, sense):
                return Feasible(sm, vals, r)
    return NotFoundAtTolerance(best_overall[1], max(1, restarts))


# ------------------------------------------------------------------ oracle


@dataclass
class ParetoSample:
    points: List[Tuple[Pair, StrategyMachine]]

    @property
    def values(self) -> set:
        return {v for v, _ in self.points}


def is_acyclic(m: Memdp) -> bool:
    g = nx.DiGraph()
    g.add_nodes_from(m.states)
    for s, a in m.pairs():
        g.add_edges_from((s, t) for t in m.post(s, a) if t != s)
    return nx.is_directed_acyclic_graph(g)


def enumerate_pure(m: Memdp, target, s0: Optional[str] = None, bound: int = 4096) -> ParetoSample:
    """Exact values of every pure strategy of an acyclic MEMDP from ``s0``.

    Histories are unfolded into a tree whose nodes repeat across self-loops,
    so a pure strategy picks one action per node; on models where each state
    has a single history this is the set of pure memoryless strategies.
    """
    if not is_acyclic(m):
        raise TooLarge("pure-strategy oracle needs an acyclic model")
    target = frozenset(target)
    s0 = s0 if s0 is not None else m.states[0]
    nodes = [(s0, None)]
    children: List[Dict[str, int]] = [{}]
    todo = [0]
    while todo:
        j = todo.pop()
        s = nodes[j][0]
        if s in target:
            continue
        for a in m.enabled[s]:
            for t in sorted(m.post(s, a), key=m.states.index):
                if t != s and t not in children[j]:
                    children[j][t] = len(nodes)
                    nodes.append((t, j))
                    children.append({})
                    todo.append(len(nodes) - 1)
                    if len(nodes) > bound:
                        raise TooLarge(f"history tree exceeds {bound} nodes")
    active = [j for j, (s, _) in enumerate(nodes) if s not in target]
    total = 1
    for j in active:
        total *= len(m.enabled[nodes[j][0]])
        if total > bound:
            raise TooLarge(f"more than {bound} pure strategies")
    points = []
    for combo in itertools.product(*(m.enabled[nodes[j][0]] for j in active)):
        act = dict(zip(active, combo))
        vals = tuple(_tree_value(m, target, nodes, children, act, i) for i in (0, 1))
        points.append((vals, _tree_machine(m, target, nodes, children, act)))
    return ParetoSample(points)


def _tree_value(m, target, nodes, children, act, i) -> Fraction:
    memo = {}

    def val(j):
        if j in memo:
            return memo[j]
        s = nodes[j][0]
        if s in target:
            return Fraction(1)
        d = m.delta[i][(s, act[j])]
        stay = d.get(s, Fraction(0))
        if stay == 1:
            out = Fraction(0)
        else:
            out = sum((q * val(children[j][t]) for t, q in d.items() if t != s), Fraction(0)) / (1 - stay)
        memo[j] = out
        return out

    return val(0)


def _tree_machine(m, target, nodes, children, act) -> StrategyMachine:
    # memory is the current tree node; the node of a successor is derived on arrival
    table = {}
    for j, (s, _) in enumerate(nodes):
        cands = [(s, j)] + [(t, c) for t, c in children[j].items()]
        for t, c in cands:
            if t in target:
                a = m.enabled[t][0]
            else:
                a = act[c]
            table[(t, f"n{j}")] = {(a, f"n{c}"): Fraction(1)}
    return StrategyMachine(tuple(f"n{j}" for j in range(len(nodes))), {"n0": Fraction(1)}, table)


def achievable(sample: ParetoSample, alphas, sense: str = ">="):
    """Weights (dict index -> lambda) of a mixture of at most two sample points
    meeting ``alphas``, or None. In two dimensions the closure of the hull is
    spanned by segments, so pairs suffice."""
    alphas = (Fraction(alphas[0]), Fraction(alphas[1]))
    pts = [v for v, _ in sample.points]
    for j, v in enumerate(pts):
        if _meets(v, alphas, sense):
            return {j: Fraction(1)}
    for j, k in itertools.combinations(range(len(pts)), 2):
        lo, hi = Fraction(0), Fraction(1)
        for c in (0, 1):
            # lambda * u + (1 - lambda) * w  (sense) alpha
            u, w = pts[j][c], pts[k][c]
            coef, rhs = u - w, alphas[c] - w
            if sense == "<=":
                coef, rhs = -coef, -rhs
            if coef > 0:
                lo = max(lo, rhs / coef)
            elif coef < 0:
                hi = min(hi, rhs / coef)
            elif rhs > 0:
                lo, hi = Fraction(1), Fraction(0)
        if lo <= hi:
            return {j: lo, k: 1 - lo}
    return None


def mixture_machine(sample: ParetoSample, weights: Dict[int, Fraction]) -> StrategyMachine:
    memory, init, table = [], {}, {}
    for j, lam in weights.items():
        if lam == 0:
            continue
        sm = sample.points[j][1]
        memory.extend(f"p{j}.{x}" for x in sm.memory)
        for x, q in sm.init.items():
            init[f"p{j}.{x}"] = lam * q
        for (s, x), row in sm.table.items():
            table[(s, f"p{j}.{x}")] = {(a, f"p{j}.{x2}"): q for (a, x2), q in row.items()}
    return StrategyMachine(tuple(memory), init, table)


# ------------------------------------------------------------------ gap


@dataclass
class GapResult:
    verdict: str
    strategy: Optional[StrategyMachine] = None
    values: Optional[Pair] = None
    route: str = ""
    memory: int = 0


def _clamp(q: Fraction) -> Fraction:
    return min(Fraction(1), max(Fraction(0), q))


def gap_decide(m: Memdp, target, alphas, epsilon, memory_override: Optional[int] = 1,
               s0: Optional[str] = None, seed: int = 0, restarts: int = 64, sense: str = ">=",
               oracle_bound: int = 4096) -> GapResult:
    """epsilon-gap threshold problem for reachability (``sense`` '>=') or for
    keeping the reach probability low (``sense`` '<=')."""
    from .qualitative import decide_limit_sure

    target = frozenset(target)
    s0 = s0 if s0 is not None else m.states[0]
    alphas = (Fraction(alphas[0]), Fraction(alphas[1]))
    epsilon = Fraction(epsilon)
    sgn = 1 if sense == ">=" else -1
    relaxed = (_clamp(alphas[0] - sgn * epsilon), _clamp(alphas[1] - sgn * epsilon))
    phi = Objective.reach(target)
    # limit-sure witnesses achieve 1 - eps, which meets every relaxed threshold
    if sense == ">=" and epsilon > 0:
        d = decide_limit_sure(m, phi, s0)
        if d.yes:
            sm = d.witness(epsilon)
            vals = exact_probs(m, sm, phi, s0)
            if _meets(vals, relaxed, sense):
                return GapResult("Yes", sm, vals, "limit-sure")
    if sense == "<=" and epsilon > 0:
        d = decide_limit_sure(m, Objective.safety(set(m.states) - target), s0)
        if d.yes:
            sm = d.witness(epsilon)
            vals = exact_probs(m, sm, phi, s0)
            if _meets(vals, relaxed, sense):
                return GapResult("Yes", sm, vals, "limit-sure")
    if 0 < epsilon < 1:
        base, e_int = memory_exponent(m, epsilon)[:2]
        # the bound is astronomically large for any useful epsilon; avoid building it
        N = base ** e_int if e_int * math.log2(base) < 64 else None
    elif epsilon >= 1:
        N = 1
    else:
        N = None
    if memory_override is None:
        K = N if N is not None else 1
    else:
        K = memory_override if N is None else min(memory_override, N)
    K = max(1, min(K, 64))
    sys = build_system(m, target, K, relaxed, start=s0, sense=sense)
    res = solve_system(sys, restarts=restarts, seed=seed)
    if isinstance(res, Feasible):
        return GapResult("Yes", res.strategy, res.values, "solver", K)
    try:
        sample = enumerate_pure(m, target, s0, bound=oracle_bound)
    except TooLarge:
        return GapResult("Unknown", route="solver", memory=K)
    w = achievable(sample, relaxed, sense)
    if w is not None:
        sm = mixture_machine(sample, w)
        return GapResult("Yes", sm, exact_probs(m, sm, phi, s0), "oracle", K)
    if achievable(sample, alphas, sense) is None:
        return GapResult("No", route="oracle", memory=K)
    return GapResult("Unknown", route="oracle", memory=K)


def quantitative_safety(m: Memdp, safe, alphas, epsilon, memory_override: Optional[int] = 1,
                        s0: Optional[str] = None, seed: int = 0, restarts: int = 64) -> GapResult:
    """P[Safe] >= alpha is P[Reach(unsafe)] <= 1 - alpha."""
    unsafe = frozenset(set(m.states) - set(safe))
    lam = (1 - Fraction(alphas[0]), 1 - Fraction(alphas[1]))
    res = gap_decide(m, unsafe, lam, epsilon, memory_override, s0, seed, restarts, sense="<=")
    if res.values is not None:
        res.values = (1 - res.values[0], 1 - res.values[1])
    return res


# ------------------------------------------------------------------ bounds


def memory_bound_N(m: Memdp, epsilon):
    """(N, p, eta, diagnostics) with N = (|S|+|A|)^ceil(4|S|^3|A|^2 ln^3(1/eps) / (p^|S| eta^2))."""
    base, e_int, p, eta, diag = memory_exponent(m, epsilon)
    return base ** e_int, p, eta, diag


def memory_exponent(m: Memdp, epsilon):
    """(|S|+|A|, integer exponent, p, eta, diagnostics) of the memory bound."""
    diag = []
    nS, nA = len(m.states), len(m.actions)
    p = m.smallest_probability()
    eta = None
    for s, a in m.pairs():
        d1, d2 = m.delta[0][(s, a)], m.delta[1][(s, a)]
        for t in set(d1) | set(d2):
            diff = abs(d1.get(t, Fraction(0)) - d2.get(t, Fraction(0)))
            if diff > 0 and (eta is None or diff < eta):
                eta = diff
    if any(not d.trivial for d in dec_decompose(m)):
        diag.append("model has non-trivial double end components")
    if eta is None:
        diag.append("no distributions differ; eta undefined, N set to 1")
        return nS + nA, 0, p, None, diag
    with localcontext() as ctx:
        ctx.prec = 80
        if isinstance(epsilon, Decimal):
            eps = epsilon
        elif isinstance(epsilon, float):
            eps = Decimal(repr(epsilon))
        else:
            q = Fraction(epsilon)
            eps = Decimal(q.numerator) / Decimal(q.denominator)
        if eps >= 1:
            return nS + nA, 0, p, eta, diag
        log = (1 / eps).ln()
        den = (Decimal(p.numerator) / Decimal(p.denominator)) ** nS * (Decimal(eta.numerator) / Decimal(eta.denominator)) ** 2
        expo = 4 * Decimal(nS) ** 3 * Decimal(nA) ** 2 * log ** 3 / den
        near = expo.to_integral_value()
        if abs(expo - near) < Decimal("1e-9"):
            e_int = int(near)
        else:
            e_int = int(expo.to_integral_value(rounding="ROUND_CEILING"))
    return nS + nA, e_int, p, eta, diag


# ------------------------------------------------------------------ gadget


@dataclass
class HardnessInstance:
    values: Tuple[int, ...]
    V: int
    W: Fraction
    model: Memdp
    yes: bool
    sqrt_W: Optional[Fraction] = None
    eps_bound: Optional[Fraction] = None
    thresholds: Optional[Pair] = None

    @property
    def target(self):
        return self.model.target


def gen_product_partition(values: Sequence[int]) -> HardnessInstance:
    vals = tuple(int(v) for v in values)
    if not vals or any(v < 1 for v in vals):
        raise ValueError("need at least one positive integer")
    n = len(vals)
    chain = [f"s{k}" for k in range(1, n + 2)]
    states = chain + ["bot"]
    d1, d2 = {}, {}
    for k, v in enumerate(vals):
        s, nxt = chain[k], chain[k + 1]
        lossy = {nxt: Fraction(1, v)}
        if v > 1:
            lossy["bot"] = 1 - Fraction(1, v)
        d1[(s, "a")], d1[(s, "b")] = dict(lossy), {nxt: Fraction(1)}
        d2[(s, "a")], d2[(s, "b")] = {nxt: Fraction(1)}, dict(lossy)
    for s in (chain[-1], "bot"):
        d1[(s, "a")] = {s: Fraction(1)}
        d2[(s, "a")] = {s: Fraction(1)}
    model = build_memdp(states, ("a", "b"), d1, d2, target=[chain[-1]])
    V = math.prod(vals)
    W = Fraction(1, V)
    root = math.isqrt(V)
    yes = False
    if root * root == V:
        for mask in range(1 << n):
            if math.prod(v for k, v in enumerate(vals) if mask >> k & 1) == root:
                yes = True
                break
    inst = HardnessInstance(vals, V, W, model, yes)
    if root * root == V:
        inst.sqrt_W = Fraction(1, root)
        inst.eps_bound = inst.sqrt_W / 4
        inst.thresholds = (inst.sqrt_W, inst.sqrt_W)
    return inst
