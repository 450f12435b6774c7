"""Line-delimited key/value reports.

Format: a header line ``memdp-report <version>`` followed by one
``<key> <value>`` line per entry. Keys contain no whitespace; values are
free text to the end of the line (rationals are written as p/q). Keys may
repeat, and entry order is preserved.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Tuple

from .errors import SyntaxError
from .model import fmt_prob

SCHEMA = "memdp-report"
VERSION = 1


def _value(v) -> str:
    if isinstance(v, Fraction):
        return fmt_prob(v)
    if isinstance(v, (set, frozenset)):
        return " ".join(sorted(str(x) for x in v)) or "-"
    if isinstance(v, (list, tuple)):
        return " ".join(_value(x) for x in v) or "-"
    text = str(v)
    return text if text else "-"


@dataclass
class Report:
    entries: List[Tuple[str, str]] = field(default_factory=list)

    def add(self, key: str, value) -> "Report":
        if not key or any(c.isspace() for c in key):
            raise ValueError(f"bad report key {key!r}")
        text = _value(value).replace("\n", " ")
        self.entries.append((key, text))
        return self

    def get(self, key: str, default=None):
        for k, v in self.entries:
            if k == key:
                return v
        return default

    def get_all(self, key: str) -> List[str]:
        return [v for k, v in self.entries if k == key]

    def emit(self) -> str:
        lines = [f"{SCHEMA} {VERSION}"] + [f"{k} {v}" for k, v in self.entries]
        return "\n".join(lines) + "\n"

    def human(self) -> str:
        width = max((len(k) for k, _ in self.entries), default=0)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in self.entries) + "\n"


def parse_report(text: str) -> Report:
    lines = text.splitlines()
    if not lines or lines[0].split() != [SCHEMA, str(VERSION)]:
        raise SyntaxError(1, f"expected header '{SCHEMA} {VERSION}'")
    rep = Report()
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        parts = line.split(" ", 1)
        if len(parts) != 2 or not parts[0]:
            raise SyntaxError(lineno, "expected '<key> <value>'")
        rep.entries.append((parts[0], parts[1]))
    return rep


def from_pairs(pairs: Iterable[Tuple[str, object]]) -> Report:
    rep = Report()
    for k, v in pairs:
        rep.add(k, v)
    return rep
