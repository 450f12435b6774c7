"""Bundled example instances and their expected verdicts."""
from __future__ import annotations

import configparser
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .errors import UnknownCorpusEntry
from .model import Memdp, Objective, objective_of, parse_memdp


@dataclass
class Entry:
    name: str
    model_file: str
    start: str
    objective: str
    fields: Dict[str, str]

    def expect(self, mode: str) -> Optional[str]:
        return self.fields.get(mode)


def _root():
    return resources.files("memdp") / "corpus"


def _manifest() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string(_root().joinpath("manifest.ini").read_text())
    return cp


def names() -> List[str]:
    return list(_manifest().sections())


def entry(name: str) -> Entry:
    cp = _manifest()
    if name not in cp:
        raise UnknownCorpusEntry(f"no corpus entry named {name!r}; known: {', '.join(cp.sections())}")
    sec = dict(cp[name])
    return Entry(name, sec["model"], sec["start"], sec["objective"], sec)


def model_text(name: str) -> str:
    return _root().joinpath(entry(name).model_file).read_text()


def load(name: str) -> Tuple[Memdp, Objective, Entry]:
    e = entry(name)
    m, _ = parse_memdp(model_text(name))
    return m, objective_of(m, e.objective), e


def manifest_text(name: str) -> str:
    e = entry(name)
    lines = [f"[{name}]"] + [f"{k} = {v}" for k, v in e.fields.items()]
    return "\n".join(lines) + "\n"


def materialize(name: str, outdir) -> List[Path]:
    """Write the model and its manifest into ``outdir``; returns the paths."""
    e = entry(name)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    model = out / e.model_file
    model.write_text(model_text(name))
    man = out / f"{name}.manifest"
    man.write_text(manifest_text(name))
    return [model, man]
