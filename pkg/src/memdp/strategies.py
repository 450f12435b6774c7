"""Strategy constructors: memoryless mixes, the environment-learning sampler,
switching composition, and the lifts that carry strategies from transformed
models back to the model they came from.

Lifts and samplers are *lazy* machines: they expose ``initial()`` and
``joint(state, memory)`` over arbitrary hashable memory values, and
``compile_strategy`` turns one into a finite ``StrategyMachine`` by exploring the
(state, memory) pairs reachable in either environment.
"""
from __future__ import annotations

import math
from collections import deque
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Callable, Dict, Hashable, Iterable, Mapping, Optional, Tuple

from .errors import NotDistinguishing
from .model import Mdp, Memdp, StrategyMachine, uniform

Rows = Dict[Tuple[str, Hashable], Fraction]


def _ln(q) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 60
        if isinstance(q, Fraction):
            return Decimal(q.numerator).ln() - Decimal(q.denominator).ln()
        return Decimal(q).ln()


def _ceil(x: Decimal) -> int:
    return int(x.to_integral_value(rounding="ROUND_CEILING"))


def sampler_K(epsilon, d1, d2) -> int:
    """Samples needed so that the midpoint test errs with probability <= epsilon."""
    epsilon = Fraction(epsilon)
    if epsilon >= 1:
        return 0
    gap = Fraction(d2) - Fraction(d1)
    with localcontext() as ctx:
        ctx.prec = 60
        val = 2 * _ln(1 / epsilon) / (Decimal(gap.numerator) / Decimal(gap.denominator)) ** 2
    return _ceil(val)


def mgec_K(epsilon, p) -> int:
    """Plays of leaving-capable actions before giving up on the other environment."""
    epsilon, p = Fraction(epsilon), Fraction(p)
    if epsilon >= 1:
        return 0
    if p >= 1:
        return 1
    with localcontext() as ctx:
        ctx.prec = 60
        val = _ln(epsilon) / _ln(1 - p)
    return _ceil(val)


def _scale(rows: Mapping, q: Fraction, out: Dict) -> None:
    for k, p in rows.items():
        out[k] = out.get(k, 0) + p * q


def _choice_rows(choice: Mapping[str, Fraction], mem) -> Rows:
    return {(a, mem): p for a, p in choice.items()}


class Memoryless:
    """Lazy view of a state -> action-distribution map."""

    def __init__(self, choice: Mapping[str, Mapping[str, Fraction]]):
        self.choice = choice

    def initial(self):
        return {0: Fraction(1)}

    def joint(self, s, m):
        return _choice_rows(self.choice[s], 0)


def mix(c1: Mapping, c2: Mapping, states: Iterable[str]) -> Dict[str, Dict[str, Fraction]]:
    """Pointwise 1/2-1/2 mixture of two memoryless choices."""
    out = {}
    for s in states:
        d: Dict[str, Fraction] = {}
        for c in (c1, c2):
            for a, p in c[s].items():
                d[a] = d.get(a, 0) + p / 2
        out[s] = d
    return out


class Alternating:
    """Pure finite-memory variant: follow c1 for ``period`` steps, then c2, and so on."""

    def __init__(self, c1, c2, period: int):
        self.c = (c1, c2)
        self.period = max(1, period)

    def initial(self):
        return {0: Fraction(1)}

    def joint(self, s, m):
        nxt = (m + 1) % (2 * self.period)
        return _choice_rows(self.c[m // self.period][s], nxt)


def compile_strategy(strategy, model, starts: Optional[Iterable[str]] = None, names: str = "m") -> StrategyMachine:
    """Explore a lazy strategy over ``model`` (a Memdp or an Mdp) and rename its
    memory to ``<names><k>`` in discovery order."""
    if isinstance(model, Memdp):
        deltas = (model.delta[0], model.delta[1])
        states = model.states
    else:
        deltas = (model.delta,)
        states = model.states
    starts = list(states) if starts is None else list(starts)
    init = strategy.initial()
    ids: Dict[Hashable, str] = {}

    def name(mem):
        if mem not in ids:
            ids[mem] = f"{names}{len(ids)}"
        return ids[mem]

    table = {}
    todo = deque()
    seen = set()
    for mem in init:
        name(mem)
        for s in starts:
            if (s, mem) not in seen:
                seen.add((s, mem))
                todo.append((s, mem))
    while todo:
        s, mem = todo.popleft()
        rows = strategy.joint(s, mem)
        entry = {}
        for (a, mem2), p in rows.items():
            if p == 0:
                continue
            key = (a, name(mem2))
            entry[key] = entry.get(key, 0) + p
            for d in deltas:
                for t in d[(s, a)]:
                    if (t, mem2) not in seen:
                        seen.add((t, mem2))
                        todo.append((t, mem2))
        table[(s, ids[mem])] = entry
    memory = tuple(ids[m] for m in ids)
    return StrategyMachine(memory, {ids[m]: Fraction(p) for m, p in init.items()}, table)


# ----------------------------------------------------------------- switching


def compose_switching(outer: StrategyMachine, trigger: Callable[[str, str], Optional[str]],
                      inner: Mapping[str, StrategyMachine]) -> StrategyMachine:
    """Behave as ``outer`` until ``trigger(state, memory)`` names an inner
    machine, then hand over to it for the rest of the run."""
    memory = [f"o.{m}" for m in outer.memory]
    for key, sm in inner.items():
        memory.extend(f"{key}.{m}" for m in sm.memory)
    table = {}
    for (s, m), row in outer.table.items():
        key = trigger(s, m)
        if key is None:
            table[(s, f"o.{m}")] = {(a, f"o.{m2}"): p for (a, m2), p in row.items()}
            continue
        sm = inner[key]
        entry: Dict = {}
        for mi, q in sm.init.items():
            for (a, m2), p in sm.table[(s, mi)].items():
                k = (a, f"{key}.{m2}")
                entry[k] = entry.get(k, 0) + p * q
        table[(s, f"o.{m}")] = entry
    for key, sm in inner.items():
        for (s, m), row in sm.table.items():
            table[(s, f"{key}.{m}")] = {(a, f"{key}.{m2}"): p for (a, m2), p in row.items()}
    init = {f"o.{m}": p for m, p in outer.init.items()}
    return StrategyMachine(tuple(memory), init, table)


# ------------------------------------------------------------------- sampler


def distinguishing_edge(m: Memdp, sub) -> Tuple[str, str, str, Fraction, Fraction]:
    """Edge (s, a, t) inside the DEC whose probability differs the most across
    environments; ties go to edges leaving s, then to model order."""
    idx = {s: k for k, s in enumerate(m.states)}
    best = None
    for s in sorted(sub, key=idx.get):
        for a in m.enabled[s]:
            if a not in sub[s]:
                continue
            d1, d2 = m.delta[0][(s, a)], m.delta[1][(s, a)]
            for t in sorted(set(d1) | set(d2), key=idx.get):
                x, y = d1.get(t, Fraction(0)), d2.get(t, Fraction(0))
                if x == y:
                    continue
                key = (-abs(x - y), t == s)
                if best is None or key < best[0]:
                    best = (key, (s, a, t, x, y))
    if best is None:
        raise NotDistinguishing("no action of the component has different distributions")
    return best[1]


class Sampler:
    """Explore the DEC uniformly, always playing a at s; count the plays of
    (s, a) and the arrivals in t, then commit to the optimal memoryless
    strategy of the environment whose probability is closer to the observed
    frequency.

    Memory is ("c", c, ct, pending) while sampling and ("opt", g) afterwards.
    A play of a at s sets ``pending``; the arrival is counted one step later
    because the update cannot see the successor.
    """

    def __init__(self, sub, edge, K: int, opt1, opt2):
        self.sub = sub
        self.s, self.a, self.t, self.d1, self.d2 = edge
        self.K = K
        self.opt = {1: opt1, 2: opt2}

    def initial(self):
        return {("c", 0, 0, 0): Fraction(1)}

    def guess(self, c: int, ct: int) -> int:
        if c == 0:
            return 1
        r = Fraction(ct, c)
        return 1 if abs(r - self.d1) <= abs(r - self.d2) else 2

    def joint(self, s, mem):
        if mem[0] == "opt":
            return _choice_rows(self.opt[mem[1]][s], mem)
        _, c, ct, pend = mem
        if pend:
            c += 1
            ct += int(s == self.t)
        if c >= self.K or s not in self.sub:
            g = self.guess(c, ct)
            return _choice_rows(self.opt[g][s], ("opt", g))
        if s == self.s:
            return {(self.a, ("c", c, ct, 1)): Fraction(1)}
        return _choice_rows(uniform(self.sub[s]), ("c", c, ct, 0))


def dec_sampling_strategy(m: Memdp, dec, epsilon, opt1, opt2, edge=None) -> StrategyMachine:
    """Finite machine for the sampler on a distinguishing DEC.

    Memory ``c<c>_<ct>_<pending>`` while sampling, ``opt1``/``opt2`` after the
    guess. ``opt1``/``opt2`` are memoryless choices over all states.
    """
    sub = dec.sub if hasattr(dec, "sub") else dec
    if hasattr(dec, "distinguishing") and not dec.distinguishing:
        raise NotDistinguishing("the component has identical distributions in both environments")
    if edge is None:
        edge = distinguishing_edge(m, sub)
    else:
        s, a, t = edge[:3]
        edge = (s, a, t, m.delta[0][(s, a)].get(t, Fraction(0)), m.delta[1][(s, a)].get(t, Fraction(0)))
        if edge[3] == edge[4]:
            raise NotDistinguishing(f"edge {s} {a} {t} has equal probabilities")
    K = sampler_K(epsilon, edge[3], edge[4])
    smp = Sampler(sub, edge, K, opt1, opt2)
    return _sampler_machine(m, smp)


def _sampler_machine(m: Memdp, smp: Sampler) -> StrategyMachine:
    def mname(mem):
        return f"opt{mem[1]}" if mem[0] == "opt" else f"c{mem[1]}_{mem[2]}_{mem[3]}"

    table = {}
    mems = [("c", c, ct, p) for c in range(max(smp.K, 1)) for ct in range(c + 1) for p in (0, 1)]
    for mem in mems:
        for s in m.states:
            if s in smp.sub:
                table[(s, mname(mem))] = {(a, mname(m2)): p for (a, m2), p in smp.joint(s, mem).items()}
    for g in (1, 2):
        for s in m.states:
            table[(s, f"opt{g}")] = {(a, f"opt{g}"): p for a, p in smp.opt[g][s].items()}
    memory = tuple(mname(x) for x in mems) + ("opt1", "opt2")
    sm = StrategyMachine(memory, {"c0_0_0": Fraction(1)}, table)
    sm.sampler = smp  # type: ignore[attr-defined]
    return sm


# --------------------------------------------------------------------- lifts


def _opt_rows(opt, g, s):
    return _choice_rows(opt[g][s], ("opt", g))


class RevealLift:
    """Run a strategy of the revealed-form model on the original model.

    Memory remembers the last (state, action) when that pair owns a split
    revealing edge; arriving through such an edge identifies the environment,
    after which the optimal memoryless strategy of that environment is used.
    """

    def __init__(self, inner, split: Mapping[tuple, tuple], opt):
        self.inner = inner
        self.opt = opt
        self.split_pairs = {(s, a) for (_, s, a, _) in split}
        self.split = set(split)

    def initial(self):
        return {("i", m, None, None): p for m, p in self.inner.initial().items()}

    def joint(self, s, mem):
        if mem[0] == "opt":
            return _opt_rows(self.opt, mem[1], s)
        _, m, ls, la = mem
        if ls is not None:
            for i in (1, 2):
                if (i, ls, la, s) in self.split:
                    return _opt_rows(self.opt, i, s)
        out: Rows = {}
        for (a, m2), p in self.inner.joint(s, m).items():
            key = (a, ("i", m2, s, a) if (s, a) in self.split_pairs else ("i", m2, None, None))
            out[key] = out.get(key, 0) + p
        return out


class HatLift:
    """Run a strategy of M^ (DECs contracted) on the model it was built from.

    Inside a distinguishing DEC the sampler takes over and then commits to an
    optimal strategy. Inside a non-distinguishing DEC the contracted choice is
    drawn once: a frontier action ``f.a`` is realised by walking uniformly in
    the DEC to f and playing a; the stay action keeps to the DEC forever.
    Actions listed in ``escape`` (the bar construction's a_D) switch to the
    optimal strategy of the given environment.
    """

    def __init__(self, inner, hat, epsilon, opt, stay_choice, escape=None):
        self.inner = inner
        self.opt = opt
        self.escape = dict(escape or {})
        self.rec = {}
        self.samplers = {}
        src = hat.info["source"]
        for r in hat.info["decs"]:
            for s in r["dec"].sub:
                self.rec[s] = r
            if r["dec"].distinguishing:
                edge = distinguishing_edge(src, r["dec"].sub)
                K = sampler_K(epsilon, edge[3], edge[4])
                self.samplers[r["n"]] = Sampler(r["dec"].sub, edge, K, opt[1], opt[2])
        self.stay_choice = stay_choice

    def initial(self):
        return {("o", m): p for m, p in self.inner.initial().items()}

    def _nav(self, s, r, fa, m2):
        f, a = r["frontier"][fa]
        if s == f:
            return {(a, ("o", m2)): Fraction(1)}
        return _choice_rows(uniform(r["dec"].sub[s]), ("nav", r["n"], fa, m2))

    def _outer(self, s, state, m):
        out: Rows = {}
        for (a, m2), q in self.inner.joint(state, m).items():
            if a in self.escape:
                _scale(_opt_rows(self.opt, self.escape[a], s), q, out)
            elif state == s:
                out[(a, ("o", m2))] = out.get((a, ("o", m2)), 0) + q
            else:
                r = self.rec[s]
                if a == r["stay"]:
                    _scale(_choice_rows(self.stay_choice[r["n"]][s], ("stay", r["n"])), q, out)
                else:
                    _scale(self._nav(s, r, a, m2), q, out)
        return out

    def joint(self, s, mem):
        kind = mem[0]
        if kind == "opt":
            return _opt_rows(self.opt, mem[1], s)
        if kind == "dec":
            smp = self.samplers[mem[1]]
            rows = smp.joint(s, mem[2])
            return {(a, m2 if m2[0] == "opt" else ("dec", mem[1], m2)): p for (a, m2), p in rows.items()}
        if kind == "stay":
            return _choice_rows(self.stay_choice[mem[1]][s], mem)
        if kind == "nav":
            return self._nav(s, self.rec[s], mem[2], mem[3])
        m = mem[1]
        r = self.rec.get(s)
        if r is None:
            return self._outer(s, s, m)
        if r["dec"].distinguishing:
            return self.joint(s, ("dec", r["n"], ("c", 0, 0, 0)))
        return self._outer(s, r["sD"], m)


class TildeLift:
    """Run a strategy of M~ (good end components contracted) on its source.

    On reaching a marked state the uniform strategy of the component takes
    over; after K plays of actions that may leave the component in the other
    environment it switches to the optimal strategy of the component's
    environment.
    """

    def __init__(self, inner, tilde, K: int, opt):
        self.inner = inner
        self.opt = opt
        self.K = K
        src: Memdp = tilde.info["source"]
        self.rec = {}
        self.comp = {}
        for r in tilde.info["mgecs"]:
            g = r["gec"]
            other = src.env(3 - g.env)
            leave = {s: frozenset(a for a in g.sub[s] if not other.post(s, a) <= g.sub.keys()) for s in g.sub}
            self.comp[r["n"]] = (g, leave)
            for s in r["marked"]:
                self.rec[s] = r["n"]
        self.src = src

    def initial(self):
        return {("o", m): p for m, p in self.inner.initial().items()}

    def joint(self, s, mem):
        kind = mem[0]
        if kind == "opt":
            return _opt_rows(self.opt, mem[1], s)
        if kind == "gec":
            _, n, count = mem
            g, leave = self.comp[n]
            if count >= self.K:
                return _opt_rows(self.opt, g.env, s)
            if s not in g.sub:
                # only the other environment can leave the component
                return _opt_rows(self.opt, 3 - g.env, s)
            out: Rows = {}
            acts = [a for a in self.src.enabled[s] if a in g.sub[s]]
            q = Fraction(1, len(acts))
            for a in acts:
                c2 = min(self.K, count + int(a in leave[s]))
                out[(a, ("gec", n, c2))] = q
            return out
        n = self.rec.get(s)
        if n is not None:
            return self.joint(s, ("gec", n, 0))
        return {(a, ("o", m2)): p for (a, m2), p in self.inner.joint(s, mem[1]).items()}
