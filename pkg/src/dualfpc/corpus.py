"""Bundled example programs.

The last definition in each ``corpus/<name>.dfpc`` file is the program;
earlier definitions are helpers.  Most files name it after the file.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Optional

from .ops import OpRegistry
from .program import Program
from .surface import SourceFile, parse


def corpus_dir() -> Path:
    return Path(str(resources.files(__package__) / "corpus"))


def corpus_names() -> list[str]:
    return sorted(p.stem for p in corpus_dir().glob("*.dfpc"))


def corpus_path(name: str) -> Path:
    path = corpus_dir() / f"{name}.dfpc"
    if not path.exists():
        raise KeyError(f"no corpus program {name!r}")
    return path


def corpus_file(name: str, ops: Optional[OpRegistry] = None) -> SourceFile:
    return parse(corpus_path(name).read_text(encoding="utf-8"), ops)


def corpus_program(name: str, ops: Optional[OpRegistry] = None) -> Program:
    f = corpus_file(name, ops)
    return Program.from_file(f, f.defs[-1].name, ops)


def differentiable_programs() -> list[Program]:
    """Corpus programs whose input and output are both data types."""
    progs = []
    for name in corpus_names():
        p = corpus_program(name)
        if p.is_differentiable_shape:
            progs.append(p)
    return progs
