"""Linguistic bias cues: lexicon loading and cue-vector extraction.

Five lexicon families signal biased or uncertain language: assertive
verbs, factive verbs, hedges, implicative verbs, and report verbs.  A
document's cue vector is the per-family occurrence count over its
cleaned tokens, either raw or normalized by token count.  Hedges may be
multi-word phrases, matched as contiguous token runs; all other families
are single words.

The bundled lexicons under ``baitscore/lexicons/`` are assembled from
the classic sources named in each file header.  They are plain data
files: edit or replace them to change what counts as a cue.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

#: Fixed family order of every cue vector.
FAMILIES = ("assertive", "factive", "hedges", "implicative", "report")

_FILENAMES = {family: f"{family}.txt" for family in FAMILIES}


class Normalization(str, Enum):
    RAW_COUNT = "raw_count"
    PER_TOKEN = "per_token"


class LexiconError(ValueError):
    """Missing or unusable lexicon file."""


@dataclass(frozen=True)
class CueLexicons:
    """One lowercase entry set per family; phrases only in hedges."""

    assertive: frozenset[str]
    factive: frozenset[str]
    hedges: frozenset[str]
    implicative: frozenset[str]
    report: frozenset[str]

    def family(self, name: str) -> frozenset[str]:
        return getattr(self, name)

    def fingerprint(self) -> str:
        """Stable content hash, recorded next to trained models."""
        import hashlib

        digest = hashlib.sha256()
        for name in FAMILIES:
            for entry in sorted(self.family(name)):
                digest.update(f"{name}:{entry}\n".encode())
        return digest.hexdigest()[:16]


@dataclass(frozen=True)
class CueVector:
    """Per-family cue intensities in the fixed FAMILIES order."""

    values: tuple[float, float, float, float, float]
    normalization: Normalization

    def as_list(self) -> list[float]:
        return list(self.values)


def _read_entries(path: Path) -> list[str]:
    entries = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip().lower()
            if line and not line.startswith("#"):
                entries.append(line)
    return entries


def load_lexicons(directory: str | Path) -> CueLexicons:
    """Load the five family files from a directory.

    Each family lives in ``<family>.txt`` (one entry per line, '#'
    comments ignored).  A missing or empty file is an error naming the
    family, so a half-configured directory cannot load silently.
    """
    directory = Path(directory)
    sets = {}
    for family, filename in _FILENAMES.items():
        path = directory / filename
        if not path.is_file():
            raise LexiconError(f"{family} lexicon missing: expected {path}")
        entries = _read_entries(path)
        if not entries:
            raise LexiconError(f"{family} lexicon at {path} has no entries")
        sets[family] = frozenset(entries)
        log.info("lexicon %s: %d entries", family, len(sets[family]))
    return CueLexicons(**sets)


def default_lexicon_dir() -> Path:
    """Directory of the lexicons bundled with the package."""
    return Path(resources.files("baitscore") / "lexicons")


def load_default_lexicons() -> CueLexicons:
    return load_lexicons(default_lexicon_dir())


def _count_family(tokens: Sequence[str], entries: frozenset[str]) -> int:
    words = set()
    phrases = []
    for entry in entries:
        if " " in entry:
            phrases.append(tuple(entry.split()))
        else:
            words.add(entry)
    count = sum(1 for tok in tokens if tok in words)
    for phrase in phrases:
        k = len(phrase)
        count += sum(
            1 for i in range(len(tokens) - k + 1) if tuple(tokens[i : i + k]) == phrase
        )
    return count


def extract_cues(
    tokens: Sequence[str],
    lexicons: CueLexicons,
    normalization: Normalization = Normalization.PER_TOKEN,
) -> CueVector:
    """Count lexicon hits per family over already-cleaned tokens.

    Raw counts are integers; per-token counts divide by max(1, len(tokens))
    so every value stays in [0, 1] and document length cannot dominate.
    """
    counts = [float(_count_family(tokens, lexicons.family(f))) for f in FAMILIES]
    if normalization is Normalization.PER_TOKEN:
        denom = float(max(1, len(tokens)))
        counts = [c / denom for c in counts]
    return CueVector(values=tuple(counts), normalization=normalization)


def cue_block(
    documents: Iterable[Sequence[str]],
    lexicons: CueLexicons,
    normalization: Normalization = Normalization.PER_TOKEN,
) -> list[list[float]]:
    """Cue vectors for a document batch, as plain rows for model input."""
    return [extract_cues(toks, lexicons, normalization).as_list() for toks in documents]
