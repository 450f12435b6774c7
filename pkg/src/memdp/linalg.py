"""Exact rational linear algebra and absorption probabilities for finite chains."""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Hashable, Iterable, List, Mapping, Sequence

import networkx as nx

Row = Mapping[Hashable, Fraction]


def solve_linear(a: List[List[Fraction]], b: List[Fraction]) -> List[Fraction]:
    """Gauss-Jordan elimination over the rationals. ``a`` must be non-singular."""
    n = len(a)
    m = [list(map(Fraction, row)) + [Fraction(rhs)] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        m[col], m[piv] = m[piv], m[col]
        pr = m[col]
        inv = 1 / pr[col]
        if inv != 1:
            for k in range(col, n + 1):
                pr[k] *= inv
        for r in range(n):
            if r == col:
                continue
            f = m[r][col]
            if f:
                row = m[r]
                for k in range(col, n + 1):
                    if pr[k]:
                        row[k] -= f * pr[k]
    return [m[r][n] for r in range(n)]


def backward_reach(rows: Mapping[Hashable, Row], goal: Iterable[Hashable]) -> set:
    """Nodes with a positive-probability path into ``goal``."""
    pred: Dict[Hashable, list] = {}
    for u, row in rows.items():
        for v, p in row.items():
            if p:
                pred.setdefault(v, []).append(u)
    seen = set(goal)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for u in pred.get(v, ()):
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return seen


def reach_probabilities(rows: Mapping[Hashable, Row], goal: Iterable[Hashable]) -> Dict[Hashable, Fraction]:
    """Exact probability of eventually hitting ``goal`` from every node.

    Nodes that cannot reach the goal get 0; the rest are solved SCC by SCC in
    reverse topological order, so each linear system stays small.
    """
    goal = set(goal)
    can = backward_reach(rows, goal)
    val: Dict[Hashable, Fraction] = {u: Fraction(0) for u in rows}
    for g in goal:
        val[g] = Fraction(1)
    live = [u for u in rows if u in can and u not in goal]
    if not live:
        return val
    g = nx.DiGraph()
    g.add_nodes_from(live)
    live_set = set(live)
    for u in live:
        for v, p in rows[u].items():
            if p and v in live_set:
                g.add_edge(u, v)
    cond = nx.condensation(g)
    for c in reversed(list(nx.topological_sort(cond))):
        comp = list(cond.nodes[c]["members"])
        if len(comp) == 1:
            u = comp[0]
            row = rows[u]
            loop = Fraction(row.get(u, 0))
            rhs = sum((Fraction(p) * val[v] for v, p in row.items() if v != u), Fraction(0))
            val[u] = rhs / (1 - loop)
            continue
        idx = {u: k for k, u in enumerate(comp)}
        n = len(comp)
        a = [[Fraction(0)] * n for _ in range(n)]
        b = [Fraction(0)] * n
        for u in comp:
            i = idx[u]
            a[i][i] += 1
            for v, p in rows[u].items():
                if v in idx:
                    a[i][idx[v]] -= p
                else:
                    b[i] += p * val[v]
        for u, x in zip(comp, solve_linear(a, b)):
            val[u] = x
    return val


def bottom_sccs(rows: Mapping[Hashable, Row], nodes: Sequence[Hashable] = None) -> List[set]:
    """Bottom strongly connected components of the chain graph."""
    g = nx.DiGraph()
    g.add_nodes_from(nodes if nodes is not None else rows)
    for u, row in rows.items():
        for v, p in row.items():
            if p:
                g.add_edge(u, v)
    cond = nx.condensation(g)
    return [set(cond.nodes[c]["members"]) for c in cond.nodes if cond.out_degree(c) == 0]
