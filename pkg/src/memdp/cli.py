"""Command-line front end."""
from __future__ import annotations

import argparse
import os
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from . import corpus
from .chain import exact_probs, monte_carlo
from .errors import MemdpError
from .model import (Memdp, Objective, format_memdp, format_strategy, objective_of, parse_memdp,
                    parse_prob, parse_strategy, validate_strategy)
from .report import Report

EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 64, 65, 70
VERDICT_STATUS = {"Yes": 0, "No": 1, "Unknown": 3}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _prob(text: str) -> Fraction:
    try:
        return parse_prob(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _default_seed() -> int:
    raw = os.environ.get("MEMDP_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"MEMDP_SEED must be an integer, got {raw!r}") from None


def _read_model(path: str):
    if path.startswith("corpus:"):
        return parse_memdp(corpus.model_text(path[len("corpus:"):]))
    try:
        return parse_memdp(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


class InputError(Exception):
    pass


def _objective(m: Memdp, kind: Optional[str]) -> Objective:
    return objective_of(m, kind)


def _start(m: Memdp, s: Optional[str]) -> str:
    s = s if s is not None else m.states[0]
    if s not in m.states:
        raise InputError(f"unknown start state {s!r}")
    return s


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _common(p, objective=True, start=True):
    p.add_argument("model", help="model file, or corpus:<name>")
    if objective:
        p.add_argument("--objective", choices=("reach", "safety", "parity"))
    if start:
        p.add_argument("--start")
    p.add_argument("--report", action="store_true", help="structured key/value output")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="memdp", description="Strategy synthesis for two-environment MDPs")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="decide almost-sure or limit-sure objectives")
    _common(c)
    c.add_argument("--mode", choices=("almost-sure", "limit-sure"), default="almost-sure")
    c.add_argument("--witness", help="write the witness strategy here")
    c.add_argument("--epsilon", type=_prob, default=Fraction(1, 100), help="epsilon for limit-sure witnesses")
    c.add_argument("--alternate", action="store_true", help="pure alternating witness for almost-sure reach")
    c.add_argument("--exit-status", action="store_true")

    s = sub.add_parser("synth", help="write a witness strategy")
    _common(s)
    s.add_argument("--mode", choices=("almost-sure", "limit-sure"), default="almost-sure")
    s.add_argument("--epsilon", type=_prob, default=Fraction(1, 100))
    s.add_argument("--out", default="-")

    q = sub.add_parser("quant", help="quantitative threshold problem")
    _common(q)
    q.add_argument("--alpha1", type=_prob)
    q.add_argument("--alpha2", type=_prob)
    q.add_argument("--alpha", type=_prob, nargs=2, metavar=("A1", "A2"))
    q.add_argument("--memory", type=int, default=1)
    q.add_argument("--epsilon", type=_prob, default=Fraction(0))
    q.add_argument("--seed", type=int)
    q.add_argument("--restarts", type=int, default=64)
    q.add_argument("--witness")
    q.add_argument("--exit-status", action="store_true")

    t = sub.add_parser("transform", help="emit a transformed model and its state mapping")
    _common(t, start=False)
    g = t.add_mutually_exclusive_group(required=True)
    for flag in ("absorb", "revealed", "hat", "tilde", "bar"):
        g.add_argument(f"--{flag}", action="store_const", const=flag, dest="kind")
    t.add_argument("--out", default="-")
    t.add_argument("--mapping")

    sm = sub.add_parser("simulate", help="Monte-Carlo estimate of a strategy")
    _common(sm)
    sm.add_argument("--env", type=int, choices=(1, 2), required=True)
    sm.add_argument("--strategy", required=True)
    sm.add_argument("--runs", type=int, default=10000)
    sm.add_argument("--seed", type=int)
    sm.add_argument("--horizon", type=int, default=1000)

    a = sub.add_parser("analyze", help="exact probabilities of a strategy")
    _common(a)
    a.add_argument("--strategy", required=True)
    a.add_argument("--exact", action="store_true", default=True)

    gen = sub.add_parser("gen", help="generate instances")
    gsub = gen.add_subparsers(dest="family", required=True, parser_class=_Parser)
    pp = gsub.add_parser("product-partition")
    pp.add_argument("values", type=int, nargs="+")
    pp.add_argument("--out", default="-")

    cp = sub.add_parser("corpus", help="bundled instances")
    csub = cp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    lst = csub.add_parser("list")
    show = csub.add_parser("show")
    show.add_argument("name")
    mat = csub.add_parser("materialize")
    mat.add_argument("name")
    mat.add_argument("--dir", default=".")
    for cpar in (lst, mat):
        cpar.add_argument("--report", action="store_true", help="structured key/value output")

    v = sub.add_parser("validate", help="validate a model and optionally a strategy")
    v.add_argument("model")
    v.add_argument("--strategy")
    v.add_argument("--report", action="store_true")
    return p


# ------------------------------------------------------------------ commands


def _cmd_check(args, rep: Report):
    from .qualitative import decide_almost_sure, decide_limit_sure

    m, _ = _read_model(args.model)
    phi = _objective(m, args.objective)
    s0 = _start(m, args.start)
    rep.add("command", "check").add("mode", args.mode).add("objective", phi.kind).add("start", s0)
    if args.mode == "almost-sure":
        d = decide_almost_sure(m, phi, s0, alternate=args.alternate)
        sm = d.witness
    else:
        d = decide_limit_sure(m, phi, s0)
        sm = d.witness(args.epsilon) if d.yes else None
        rep.add("epsilon", args.epsilon)
    rep.add("verdict", d.verdict)
    for k, val in d.certificate.items():
        rep.add(f"cert.{k}", val)
    if sm is not None:
        v1, v2 = exact_probs(m, sm, phi, s0)
        rep.add("memory", sm.size).add("prob.env1", v1).add("prob.env2", v2)
        if args.witness:
            _write(args.witness, format_strategy(sm))
            rep.add("witness", args.witness)
    return d.verdict


def _cmd_synth(args, rep: Report):
    from .qualitative import decide_almost_sure, decide_limit_sure

    m, _ = _read_model(args.model)
    phi = _objective(m, args.objective)
    s0 = _start(m, args.start)
    d = decide_almost_sure(m, phi, s0) if args.mode == "almost-sure" else decide_limit_sure(m, phi, s0)
    rep.add("command", "synth").add("mode", args.mode).add("verdict", d.verdict)
    if not d.yes:
        raise InputError(f"{args.mode} {phi.kind} does not hold from {s0}; no witness")
    sm = d.witness if args.mode == "almost-sure" else d.witness(args.epsilon)
    text = format_strategy(sm)
    if args.out == "-":
        sys.stdout.write(text)
        return None
    _write(args.out, text)
    v1, v2 = exact_probs(m, sm, phi, s0)
    rep.add("memory", sm.size).add("prob.env1", v1).add("prob.env2", v2).add("witness", args.out)
    return d.verdict


def _cmd_quant(args, rep: Report):
    from .quantitative import gap_decide, quantitative_safety

    m, _ = _read_model(args.model)
    phi = _objective(m, args.objective)
    s0 = _start(m, args.start)
    if args.alpha is not None:
        alphas = tuple(args.alpha)
    elif args.alpha1 is not None and args.alpha2 is not None:
        alphas = (args.alpha1, args.alpha2)
    else:
        raise UsageError("give --alpha A1 A2 or both --alpha1 and --alpha2")
    if args.memory < 1:
        raise UsageError("--memory must be at least 1")
    seed = args.seed if args.seed is not None else _default_seed()
    rep.add("command", "quant").add("objective", phi.kind).add("start", s0)
    rep.add("alpha1", alphas[0]).add("alpha2", alphas[1]).add("epsilon", args.epsilon).add("seed", seed)
    if phi.kind == "reach":
        res = gap_decide(m, phi.target, alphas, args.epsilon, args.memory, s0, seed, args.restarts)
    elif phi.kind == "safety":
        res = quantitative_safety(m, phi.target, alphas, args.epsilon, args.memory, s0, seed, args.restarts)
    else:
        raise InputError("quant supports reach and safety objectives")
    rep.add("verdict", res.verdict).add("route", res.route or "-").add("memory", res.memory)
    if res.strategy is not None:
        rep.add("prob.env1", res.values[0]).add("prob.env2", res.values[1])
        if args.witness:
            _write(args.witness, format_strategy(res.strategy))
            rep.add("witness", args.witness)
    return res.verdict


def _cmd_transform(args, rep: Report):
    from .endcomp import build_bar, build_hat, build_tilde
    from .preprocess import StateMapping, TransformResult, absorb_objective_states, to_revealed_form

    m, _ = _read_model(args.model)
    phi = _objective(m, args.objective)
    if args.kind == "absorb":
        out = absorb_objective_states(m, phi)
        res = TransformResult(out, phi, StateMapping({s: s for s in m.states}))
    else:
        fn = {"revealed": to_revealed_form, "hat": build_hat, "tilde": build_tilde, "bar": build_bar}[args.kind]
        res = fn(m, phi)
    text = format_memdp(res.model)
    _write(args.out, text)
    if args.mapping:
        _write(args.mapping, "\n".join(res.mapping.lines()) + "\n")
    if args.out != "-":
        rep.add("command", "transform").add("kind", args.kind).add("states", len(res.model.states))
        rep.add("out", args.out)
        if args.mapping:
            rep.add("mapping", args.mapping)
    return None


def _load_strategy(path: str, m: Memdp):
    try:
        sm = parse_strategy(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    problems = validate_strategy(sm, m)
    if problems:
        raise InputError("; ".join(problems))
    return sm


def _cmd_simulate(args, rep: Report):
    m, _ = _read_model(args.model)
    phi = _objective(m, args.objective)
    s0 = _start(m, args.start)
    sm = _load_strategy(args.strategy, m)
    if args.runs < 1 or args.horizon < 1:
        raise UsageError("--runs and --horizon must be positive")
    seed = args.seed if args.seed is not None else _default_seed()
    est = monte_carlo(m.env(args.env), sm, phi, s0, args.runs, args.horizon, seed)
    rep.add("command", "simulate").add("env", args.env).add("objective", phi.kind).add("start", s0)
    rep.add("runs", est.runs).add("seed", seed).add("horizon", args.horizon)
    rep.add("successes", est.successes).add("estimate", f"{est.value:.6f}")
    rep.add("wilson99", f"{est.low:.6f} {est.high:.6f}")
    return None


def _cmd_analyze(args, rep: Report):
    m, _ = _read_model(args.model)
    phi = _objective(m, args.objective)
    s0 = _start(m, args.start)
    sm = _load_strategy(args.strategy, m)
    v1, v2 = exact_probs(m, sm, phi, s0)
    rep.add("command", "analyze").add("objective", phi.kind).add("start", s0)
    rep.add("prob.env1", v1).add("prob.env2", v2)
    return None


def _cmd_gen(args, rep: Report):
    from .quantitative import gen_product_partition

    if any(v < 1 for v in args.values):
        raise UsageError("values must be positive integers")
    inst = gen_product_partition(args.values)
    header = [f"# product-partition instance for values {' '.join(map(str, inst.values))}",
              f"# V = {inst.V}; partition exists: {'yes' if inst.yes else 'no'}"]
    if inst.thresholds is not None:
        header.append(f"# thresholds {inst.thresholds[0]} {inst.thresholds[1]}; eps bound {inst.eps_bound}")
    _write(args.out, "\n".join(header) + "\n" + format_memdp(inst.model))
    return None


def _cmd_corpus(args, rep: Report):
    if args.action == "list":
        for n in corpus.names():
            e = corpus.entry(n)
            rep.add("entry", f"{n} {e.objective} start={e.start} almost-sure={e.expect('almost-sure')} "
                             f"limit-sure={e.expect('limit-sure')}")
    elif args.action == "show":
        sys.stdout.write(corpus.model_text(args.name))
        sys.stdout.write(corpus.manifest_text(args.name))
    else:
        for path in corpus.materialize(args.name, args.dir):
            rep.add("file", str(path))
    return None


def _cmd_validate(args, rep: Report):
    m, _ = _read_model(args.model)
    rep.add("command", "validate").add("model", "ok").add("states", len(m.states))
    if args.strategy:
        sm = _load_strategy(args.strategy, m)
        rep.add("strategy", "ok").add("memory", sm.size)
    return None


COMMANDS = {
    "check": _cmd_check, "synth": _cmd_synth, "quant": _cmd_quant, "transform": _cmd_transform,
    "simulate": _cmd_simulate, "analyze": _cmd_analyze, "gen": _cmd_gen, "corpus": _cmd_corpus,
    "validate": _cmd_validate,
}


def run(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    rep = Report()
    try:
        args = build_parser().parse_args(argv)
        t0 = time.perf_counter()
        verdict = COMMANDS[args.cmd](args, rep)
        if rep.entries:
            if args.cmd not in ("corpus", "gen"):
                rep.add("seconds", f"{time.perf_counter() - t0:.3f}")
            sys.stdout.write(rep.emit() if getattr(args, "report", False) else rep.human())
        if verdict is not None and getattr(args, "exit_status", False):
            return VERDICT_STATUS[verdict]
        return 0
    except UsageError as exc:
        sys.stderr.write(f"memdp: usage error: {exc}\n")
        return EXIT_USAGE
    except (MemdpError, InputError) as exc:
        sys.stderr.write(f"memdp: input error: {exc}\n")
        return EXIT_INPUT
    except SystemExit as exc:
        # --help exits through argparse
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"memdp: internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


def main(argv: Optional[List[str]] = None):
    sys.exit(run(argv))
