"""The bundled example programs and their manifest."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .syntax import SourceProgram, parse, pretty
from .terms import Term
from .transforms import compile_program
from .typecheck import is_program, kind_check

CORPUS_DIR = Path(str(resources.files("statl") / "corpus"))
MANIFEST = CORPUS_DIR / "manifest.json"

# the compiled form of this program is bundled as its own entry
COMPILED_SOURCE = "bern_score"

# programs whose meaning is the error point (1, ()), fixed by hand
ERROR_BRANCH = frozenset({"zero_mass_norm", "periodic_stat", "reducible_stat"})


def digest(t: Term) -> str:
    """sha256 of the canonical surface form."""
    return hashlib.sha256(pretty(t).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    kind: str
    program: bool
    expects_error_branch: bool
    digest: str

    @property
    def path(self) -> Path:
        return CORPUS_DIR / f"{self.name}.statl"

    def load(self) -> Term:
        return parse(SourceProgram.from_file(self.path))


def corpus_manifest() -> list[CorpusEntry]:
    data = json.loads(MANIFEST.read_text(encoding="utf-8"))
    return [CorpusEntry(**e) for e in data["programs"]]


def load(name: str) -> Term:
    return parse(SourceProgram.from_file(CORPUS_DIR / f"{name}.statl"))


def programs() -> list[CorpusEntry]:
    return [e for e in corpus_manifest() if e.program]


def regenerate(directory: Path = CORPUS_DIR) -> list[dict]:
    """Rewrite the compiled entry and the manifest from the source files."""
    compiled = compile_program(load(COMPILED_SOURCE))
    (directory / f"{COMPILED_SOURCE}_compiled.statl").write_text(
        "# Output of the compiler on bern_score, kept as an input program.\n" + pretty(compiled) + "\n",
        encoding="utf-8")
    entries = []
    for path in sorted(directory.glob("*.statl")):
        t = parse(SourceProgram.from_file(path))
        kind, _ = kind_check([], t)
        entries.append({"name": path.stem, "kind": kind.label, "program": is_program(t),
                        "expects_error_branch": path.stem in ERROR_BRANCH, "digest": digest(t)})
    (directory / "manifest.json").write_text(json.dumps({"programs": entries}, indent=2) + "\n",
                                             encoding="utf-8")
    return entries


if __name__ == "__main__":
    for e in regenerate():
        print(e["name"], e["kind"], e["digest"][:12])
