"""Domain model: MEMDPs, single-environment MDPs, objectives and strategy machines.

Also hosts the two line-oriented text formats (models and strategies).
Every probability is a ``fractions.Fraction``; distributions are plain dicts
holding only positive entries that sum to exactly one.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Tuple

from .errors import SyntaxError, ValidationError

FORMAT_VERSION = 1

Dist = Dict[str, Fraction]
Pair = Tuple[str, str]

_IDENT = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_.$\-]*$")
_DECIMAL = re.compile(r"^(\d+)(?:\.(\d*))?$|^\.(\d+)$")
_RATIO = re.compile(r"^(\d+)/(\d+)$")


def parse_prob(token: str) -> Fraction:
    """Read ``p/q`` or a plain decimal exactly. Scientific notation is refused."""
    m = _RATIO.match(token)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            raise ValueError("zero denominator")
        return Fraction(num, den)
    m = _DECIMAL.match(token)
    if m:
        if m.group(3) is not None:
            return Fraction(int(m.group(3)), 10 ** len(m.group(3)))
        whole, frac = m.group(1), m.group(2) or ""
        return Fraction(int(whole + frac), 10 ** len(frac))
    raise ValueError(f"not a probability literal: {token!r}")


def fmt_prob(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def support(d: Mapping) -> FrozenSet:
    return frozenset(k for k, v in d.items() if v != 0)


def dist_ok(d: Mapping) -> bool:
    return bool(d) and all(v > 0 for v in d.values()) and sum(d.values()) == 1


def uniform(items: Iterable) -> dict:
    items = list(dict.fromkeys(items))
    q = Fraction(1, len(items))
    return {x: q for x in items}


def normalize_dist(d: Mapping) -> dict:
    """Drop zero entries; the result must still sum to one."""
    return {k: Fraction(v) for k, v in d.items() if v != 0}


@dataclass
class Mdp:
    """A single-environment MDP. Used for M_i, the union MDP and sub-models."""

    states: Tuple[str, ...]
    enabled: Dict[str, Tuple[str, ...]]
    delta: Dict[Pair, Dist]

    def succ(self, s: str, a: str) -> Dist:
        return self.delta[(s, a)]

    def post(self, s: str, a: str) -> FrozenSet[str]:
        return frozenset(self.delta[(s, a)])

    def is_absorbing(self, s: str) -> bool:
        return all(self.delta[(s, a)] == {s: 1} for a in self.enabled[s])

    def smallest_probability(self) -> Fraction:
        return min(p for d in self.delta.values() for p in d.values())


@dataclass
class Memdp:
    """Two environments over a shared state space and shared enabled actions.

    ``revealed`` optionally records (R1, R2); the unrevealed states are the rest.
    ``target``, ``safe`` and ``priority`` are objective annotations carried over
    from the text format.
    """

    states: Tuple[str, ...]
    actions: Tuple[str, ...]
    enabled: Dict[str, Tuple[str, ...]]
    delta: Tuple[Dict[Pair, Dist], Dict[Pair, Dist]]
    revealed: Optional[Tuple[FrozenSet[str], FrozenSet[str]]] = None
    target: Optional[FrozenSet[str]] = None
    safe: Optional[FrozenSet[str]] = None
    priority: Optional[Dict[str, int]] = None

    def env(self, i: int) -> Mdp:
        return Mdp(self.states, self.enabled, self.delta[i - 1])

    def pairs(self):
        for s in self.states:
            for a in self.enabled[s]:
                yield s, a

    def post(self, s: str, a: str) -> FrozenSet[str]:
        return frozenset(self.delta[0][(s, a)]) | frozenset(self.delta[1][(s, a)])

    def same_support(self, s: str, a: str) -> bool:
        return set(self.delta[0][(s, a)]) == set(self.delta[1][(s, a)])

    def is_absorbing(self, s: str) -> bool:
        return all(self.delta[i][(s, a)] == {s: 1} for i in (0, 1) for a in self.enabled[s])

    def revealing_edges(self, i: int):
        """Edges (s, a, t) present in environment i only."""
        d, o = self.delta[i - 1], self.delta[2 - i]
        for s, a in self.pairs():
            for t in d[(s, a)]:
                if t not in o[(s, a)]:
                    yield s, a, t

    def smallest_probability(self) -> Fraction:
        return min(p for i in (0, 1) for d in self.delta[i].values() for p in d.values())

    def unrevealed(self) -> FrozenSet[str]:
        if self.revealed is None:
            return frozenset(self.states)
        return frozenset(self.states) - self.revealed[0] - self.revealed[1]

    def copy_with(self, **kw) -> "Memdp":
        return replace(self, **kw)


@dataclass(frozen=True)
class Objective:
    """Reach(T), Safe(T) (runs that only visit T) or a parity condition."""

    kind: str
    target: FrozenSet[str] = frozenset()
    priorities: Optional[Mapping[str, int]] = None

    def __post_init__(self):
        if self.kind not in ("reach", "safety", "parity"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        object.__setattr__(self, "target", frozenset(self.target))

    @staticmethod
    def reach(target: Iterable[str]) -> "Objective":
        return Objective("reach", frozenset(target))

    @staticmethod
    def safety(safe: Iterable[str]) -> "Objective":
        return Objective("safety", frozenset(safe))

    @staticmethod
    def parity(priorities: Mapping[str, int]) -> "Objective":
        return Objective("parity", frozenset(), dict(priorities))

    def __hash__(self):
        pr = tuple(sorted(self.priorities.items())) if self.priorities else None
        return hash((self.kind, self.target, pr))


def objective_of(m: Memdp, kind: Optional[str] = None) -> Objective:
    """Build the objective of the requested kind from the model annotations."""
    if kind is None:
        kind = "parity" if m.priority else "safety" if m.safe is not None else "reach"
    if kind == "reach":
        if m.target is None:
            raise ValidationError("model has no 'target' line")
        return Objective.reach(m.target)
    if kind == "safety":
        if m.safe is None:
            raise ValidationError("model has no 'safe' line")
        return Objective.safety(m.safe)
    if not m.priority:
        raise ValidationError("model has no 'priority' line")
    return Objective.parity(m.priority)


# --------------------------------------------------------------------- parsing


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _ident(tok: str, lineno: int) -> str:
    if not _IDENT.match(tok):
        raise SyntaxError(lineno, f"bad identifier {tok!r}")
    return tok


def parse_memdp(text) -> Tuple[Memdp, Optional[Objective]]:
    """Parse and validate a model. Returns the model and its default objective."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    states = actions = None
    target = safe = None
    priority: Optional[Dict[str, int]] = None
    revealed = None
    envs: Dict[int, Dict[Pair, Dist]] = {}
    cur = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        toks = line.split()
        head = toks[0]
        if head == "format":
            if len(toks) != 3 or toks[1] != "memdp" or toks[2] != str(FORMAT_VERSION):
                raise SyntaxError(lineno, "unsupported format header")
        elif head == "states":
            if states is not None or len(toks) < 2:
                raise SyntaxError(lineno, "'states' must appear once with at least one id")
            states = [_ident(t, lineno) for t in toks[1:]]
        elif head == "actions":
            if actions is not None or len(toks) < 2:
                raise SyntaxError(lineno, "'actions' must appear once with at least one id")
            actions = [_ident(t, lineno) for t in toks[1:]]
        elif head == "target":
            target = frozenset(_ident(t, lineno) for t in toks[1:])
        elif head == "safe":
            safe = frozenset(_ident(t, lineno) for t in toks[1:])
        elif head == "priority":
            priority = {}
            for t in toks[1:]:
                if "=" not in t:
                    raise SyntaxError(lineno, f"expected <id>=<nat>, got {t!r}")
                k, v = t.split("=", 1)
                if not v.isdigit():
                    raise SyntaxError(lineno, f"priority must be a natural number, got {v!r}")
                priority[_ident(k, lineno)] = int(v)
        elif head == "revealed":
            if len(toks) < 2 or toks[1] not in ("1", "2"):
                raise SyntaxError(lineno, "expected 'revealed <1|2> <id>*'")
            if revealed is None:
                revealed = {1: frozenset(), 2: frozenset()}
            revealed[int(toks[1])] = revealed[int(toks[1])] | {_ident(t, lineno) for t in toks[2:]}
        elif head == "env":
            if len(toks) != 2 or toks[1] not in ("1", "2"):
                raise SyntaxError(lineno, "expected 'env 1' or 'env 2'")
            cur = int(toks[1])
            if cur in envs:
                raise SyntaxError(lineno, f"environment {cur} declared twice")
            envs[cur] = {}
        else:
            if cur is None:
                raise SyntaxError(lineno, f"unexpected {head!r} before any 'env' header")
            if len(toks) != 4:
                raise SyntaxError(lineno, "expected '<state> <action> <state> <prob>'")
            s, a, t = (_ident(x, lineno) for x in toks[:3])
            try:
                p = parse_prob(toks[3])
            except ValueError as exc:
                raise SyntaxError(lineno, str(exc)) from None
            d = envs[cur].setdefault((s, a), {})
            if t in d:
                raise SyntaxError(lineno, f"duplicate transition {s} {a} {t}")
            d[t] = p
    if states is None:
        raise SyntaxError(0, "missing 'states' line")
    if actions is None:
        raise SyntaxError(0, "missing 'actions' line")
    problems = []
    for i in (1, 2):
        if i not in envs:
            problems.append(f"missing environment {i}")
    if problems:
        raise ValidationError(problems)
    m = build_memdp(
        states, actions, envs[1], envs[2],
        target=target, safe=safe, priority=priority,
        revealed=(revealed[1], revealed[2]) if revealed else None,
        check=False,
    )
    problems = validate(m)
    if problems:
        raise ValidationError(problems)
    try:
        obj = objective_of(m)
    except ValidationError:
        obj = None
    return m, obj


def build_memdp(states, actions, delta1, delta2, *, target=None, safe=None, priority=None,
                revealed=None, check=True) -> Memdp:
    """Assemble a model from two transition maps keyed by (state, action)."""
    states = tuple(states)
    actions = tuple(actions)
    order = {a: k for k, a in enumerate(actions)}
    used = {}
    for (s, a) in list(delta1) + list(delta2):
        used.setdefault(s, set()).add(a)
    enabled = {s: tuple(sorted(used.get(s, ()), key=lambda a: order.get(a, len(order)))) for s in states}
    for s in used:
        if s not in enabled:
            enabled[s] = tuple(sorted(used[s], key=lambda a: order.get(a, len(order))))
    d1 = {k: {t: Fraction(p) for t, p in v.items()} for k, v in delta1.items()}
    d2 = {k: {t: Fraction(p) for t, p in v.items()} for k, v in delta2.items()}
    m = Memdp(
        states, actions, enabled, (d1, d2),
        revealed=(frozenset(revealed[0]), frozenset(revealed[1])) if revealed else None,
        target=frozenset(target) if target is not None else None,
        safe=frozenset(safe) if safe is not None else None,
        priority=dict(priority) if priority else None,
    )
    if check:
        problems = validate(m)
        if problems:
            raise ValidationError(problems)
    return m


def validate(m: Memdp) -> list:
    """Return the list of violated invariants (empty when the model is valid)."""
    out = []
    known_s = set(m.states)
    known_a = set(m.actions)
    if len(known_s) != len(m.states):
        out.append("duplicate state names")
    if len(known_a) != len(m.actions):
        out.append("duplicate action names")
    for s in m.enabled:
        if s not in known_s:
            out.append(f"unknown state {s!r}")
    for s in m.states:
        if not m.enabled.get(s):
            out.append(f"state {s!r} has an empty enabled set")
    for i in (0, 1):
        for (s, a), d in m.delta[i].items():
            if s not in known_s:
                out.append(f"env {i + 1}: unknown state {s!r}")
                continue
            if a not in known_a:
                out.append(f"env {i + 1}: unknown action {a!r}")
            for t, p in d.items():
                if t not in known_s:
                    out.append(f"env {i + 1}: unknown state {t!r} in {s} {a}")
                if p <= 0:
                    out.append(f"env {i + 1}: non-positive probability for {s} {a} {t}")
            total = sum(d.values())
            if total != 1:
                out.append(f"env {i + 1}: distribution of {s} {a} sums to {fmt_prob(total)}")
    keys1, keys2 = set(m.delta[0]), set(m.delta[1])
    for s, a in sorted(keys1 - keys2):
        out.append(f"pair {s} {a} listed in env 1 but not env 2")
    for s, a in sorted(keys2 - keys1):
        out.append(f"pair {s} {a} listed in env 2 but not env 1")
    for name, ann in (("target", m.target), ("safe", m.safe)):
        for s in sorted(ann or ()):
            if s not in known_s:
                out.append(f"{name}: unknown state {s!r}")
    if m.priority:
        for s in m.priority:
            if s not in known_s:
                out.append(f"priority: unknown state {s!r}")
        for s in m.states:
            if s not in m.priority:
                out.append(f"priority missing for state {s!r}")
    if m.revealed is not None and not out:
        out.extend(revealed_violations(m))
    return out


def revealed_violations(m: Memdp, part=None) -> list:
    """Check the revealed-form partition: revealed states absorbing in both
    environments, i-revealing edges lead into R_i, and edges into R_i are
    i-revealing."""
    r1, r2 = part if part is not None else m.revealed
    out = []
    if r1 & r2:
        out.append(f"revealed form: R1 and R2 overlap on {sorted(r1 & r2)}")
    for r, i in ((r1, 1), (r2, 2)):
        for s in sorted(r):
            if s not in m.enabled:
                out.append(f"revealed form: unknown state {s!r}")
            elif not m.is_absorbing(s):
                out.append(f"revealed form: R{i} state {s!r} is not absorbing in both environments")
    for i, r in ((1, r1), (2, r2)):
        for s, a, t in m.revealing_edges(i):
            if t not in r:
                out.append(f"revealed form: {i}-revealing edge ({s},{a},{t}) does not lead into R{i}")
    for s, a in m.pairs():
        for i, r in ((1, r1), (2, r2)):
            for t in m.post(s, a):
                if t in r and t != s:
                    if not (t in m.delta[i - 1][(s, a)] and t not in m.delta[2 - i][(s, a)]):
                        out.append(f"revealed form: edge ({s},{a},{t}) enters R{i} but is not {i}-revealing")
    return out


def format_memdp(m: Memdp) -> str:
    """Serialize a model in the text format (stable ordering)."""
    lines = [f"format memdp {FORMAT_VERSION}", "states " + " ".join(m.states), "actions " + " ".join(m.actions)]
    if m.target is not None:
        lines.append("target " + " ".join(s for s in m.states if s in m.target))
    if m.safe is not None:
        lines.append("safe " + " ".join(s for s in m.states if s in m.safe))
    if m.priority:
        lines.append("priority " + " ".join(f"{s}={m.priority[s]}" for s in m.states))
    if m.revealed is not None:
        for i in (1, 2):
            lines.append(f"revealed {i} " + " ".join(s for s in m.states if s in m.revealed[i - 1]))
    idx = {s: k for k, s in enumerate(m.states)}
    for i in (1, 2):
        lines.append(f"env {i}")
        for s, a in m.pairs():
            d = m.delta[i - 1][(s, a)]
            for t in sorted(d, key=idx.get):
                lines.append(f"{s} {a} {t} {fmt_prob(d[t])}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ strategies


@dataclass
class StrategyMachine:
    """A stochastic Moore machine stored as joint next-action/update entries.

    ``table[(s, m)]`` maps ``(a, m2)`` to sigma_a(s, m)(a) * sigma_u(s, m, a)(m2).
    Entries may be omitted for (state, memory) pairs that are never reached.
    """

    memory: Tuple[str, ...]
    init: Dict[str, Fraction]
    table: Dict[Tuple[str, str], Dict[Tuple[str, str], Fraction]] = field(default_factory=dict)

    # the lazy-machine protocol shared with the strategy constructors
    def initial(self):
        return self.init

    def joint(self, s, m):
        return self.table[(s, m)]

    def next_action(self, s: str, m: str) -> Dict[str, Fraction]:
        out: Dict[str, Fraction] = {}
        for (a, _), p in self.table[(s, m)].items():
            out[a] = out.get(a, 0) + p
        return out

    def update(self, a: str, s: str, m: str) -> Dict[str, Fraction]:
        row = self.table[(s, m)]
        pa = sum(p for (b, _), p in row.items() if b == a)
        if pa == 0:
            raise KeyError(f"action {a} is never played at ({s}, {m})")
        return {m2: p / pa for (b, m2), p in row.items() if b == a}

    @property
    def size(self) -> int:
        return len(self.memory)


def memoryless(choice: Mapping[str, Mapping[str, Fraction]], mem: str = "m0") -> StrategyMachine:
    """Wrap a map state -> action distribution as a one-memory machine."""
    table = {(s, mem): {(a, mem): Fraction(p) for a, p in d.items() if p != 0} for s, d in choice.items()}
    return StrategyMachine((mem,), {mem: Fraction(1)}, table)


def validate_strategy(sm: StrategyMachine, m: Optional[Memdp] = None) -> list:
    out = []
    mem = set(sm.memory)
    if not dist_ok(sm.init):
        out.append("initial memory distribution is not a distribution")
    for k in sm.init:
        if k not in mem:
            out.append(f"init refers to undeclared memory {k!r}")
    for (s, k), row in sm.table.items():
        if k not in mem:
            out.append(f"undeclared memory {k!r}")
        if not dist_ok(row):
            out.append(f"entries of ({s}, {k}) do not form a distribution")
        for (a, k2) in row:
            if k2 not in mem:
                out.append(f"undeclared memory {k2!r}")
            if m is not None and s in m.enabled and a not in m.enabled[s]:
                out.append(f"action {a!r} not enabled at {s!r}")
        if m is not None and s not in m.enabled:
            out.append(f"unknown state {s!r}")
    return out


def format_strategy(sm: StrategyMachine) -> str:
    lines = [f"format strategy {FORMAT_VERSION}", "memory " + " ".join(sm.memory)]
    lines.append("init " + " ".join(f"{k}={fmt_prob(p)}" for k, p in sm.init.items()))
    for (s, k), row in sm.table.items():
        for (a, k2), p in row.items():
            lines.append(f"act {s} {k} {a} {k2} {fmt_prob(p)}")
    return "\n".join(lines) + "\n"


def parse_strategy(text) -> StrategyMachine:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    memory = None
    init = None
    table: Dict[Tuple[str, str], Dict[Tuple[str, str], Fraction]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        toks = line.split()
        head = toks[0]
        if head == "format":
            if len(toks) != 3 or toks[1] != "strategy" or toks[2] != str(FORMAT_VERSION):
                raise SyntaxError(lineno, "unsupported format header")
        elif head == "memory":
            if memory is not None or len(toks) < 2:
                raise SyntaxError(lineno, "'memory' must appear once with at least one id")
            memory = tuple(_ident(t, lineno) for t in toks[1:])
        elif head == "init":
            init = {}
            for t in toks[1:]:
                if "=" not in t:
                    raise SyntaxError(lineno, f"expected <mem>=<prob>, got {t!r}")
                k, v = t.split("=", 1)
                try:
                    init[_ident(k, lineno)] = parse_prob(v)
                except ValueError as exc:
                    raise SyntaxError(lineno, str(exc)) from None
        elif head == "act":
            if len(toks) != 6:
                raise SyntaxError(lineno, "expected 'act <state> <mem> <action> <mem> <prob>'")
            s, k, a, k2 = (_ident(x, lineno) for x in toks[1:5])
            try:
                p = parse_prob(toks[5])
            except ValueError as exc:
                raise SyntaxError(lineno, str(exc)) from None
            row = table.setdefault((s, k), {})
            if (a, k2) in row:
                raise SyntaxError(lineno, "duplicate entry")
            row[(a, k2)] = p
        else:
            raise SyntaxError(lineno, f"unexpected keyword {head!r}")
    if memory is None:
        raise SyntaxError(0, "missing 'memory' line")
    if init is None:
        raise SyntaxError(0, "missing 'init' line")
    sm = StrategyMachine(memory, init, table)
    problems = validate_strategy(sm)
    if problems:
        raise ValidationError(problems)
    return sm
