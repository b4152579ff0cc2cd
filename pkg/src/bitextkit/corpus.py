"""Text normalization, sentence segmentation, deduplication, and the shared data model.

Input formats: plain text (one paragraph per line) and JSONL records
{"id", "text", "lang", "source_tag"}. Output: JSONL sentence records and
TSV bitext (src TAB tgt TAB score TAB origin).
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

SENTENCE_TERMINATORS = frozenset(".!?…;")

ORIGIN_GOLD = "gold"
ORIGIN_MINED = "mined"
ORIGIN_BACK_TRANSLATED = "back_translated"
ORIGIN_SELF_TRAINED = "self_trained"
VALID_ORIGINS = frozenset(
    {ORIGIN_GOLD, ORIGIN_MINED, ORIGIN_BACK_TRANSLATED, ORIGIN_SELF_TRAINED}
)


@dataclass(frozen=True)
class Sentence:
    id: str
    text: str
    lang: Optional[str] = None
    char_len: int = 0
    source_tag: str = ""

    @classmethod
    def make(cls, id: str, text: str, lang: Optional[str] = None,
             source_tag: str = "") -> "Sentence":
        """Build a Sentence with normalized text and a consistent char_len."""
        norm = normalize(text)
        return cls(id=id, text=norm, lang=lang, char_len=len(norm),
                   source_tag=source_tag)


@dataclass
class Document:
    id: str
    lang: str
    sentences: list[Sentence] = field(default_factory=list)


@dataclass
class DocumentPair:
    src_doc: Document
    tgt_doc: Document

    def __post_init__(self):
        if self.src_doc.lang == self.tgt_doc.lang:
            raise ValueError("document pair must span two languages")


@dataclass
class ParallelPair:
    src: Sentence
    tgt: Sentence
    score: Optional[float] = None
    origin: str = ORIGIN_GOLD

    def __post_init__(self):
        if self.origin not in VALID_ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")
        if (self.score is not None) != (self.origin == ORIGIN_MINED):
            raise ValueError("score must be present iff origin == mined")


def normalize(text: str) -> str:
    """Canonical composed form, control chars removed, whitespace collapsed."""
    text = unicodedata.normalize("NFC", text)
    out = []
    for ch in text:
        if ch.isspace():
            out.append(" ")
        elif unicodedata.category(ch) in ("Cc", "Cf"):
            continue
        else:
            out.append(ch)
    return " ".join("".join(out).split())


def default_abbreviations() -> frozenset[str]:
    """Shipped Russian/Erzya abbreviation list (lowercased, with trailing dot)."""
    data = resources.files("bitextkit").joinpath("data/abbreviations.txt")
    abbrevs = set()
    for line in data.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            abbrevs.add(line.lower())
    return frozenset(abbrevs)


def load_abbreviations(path: str | Path) -> frozenset[str]:
    abbrevs = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            abbrevs.add(line.lower())
    return frozenset(abbrevs)


def segment_sentences(text: str, lang_hint: Optional[str] = None,
                      abbreviations: Optional[frozenset[str]] = None,
                      id_prefix: str = "s", source_tag: str = "") -> list[Sentence]:
    """Rule-based splitter: break after terminal punctuation followed by
    whitespace and an uppercase/digit start, except after known abbreviations."""
    if abbreviations is None:
        abbreviations = default_abbreviations()
    text = normalize(text)
    if not text:
        return []

    breaks = []
    for i, ch in enumerate(text):
        if ch not in SENTENCE_TERMINATORS:
            continue
        if i + 1 >= len(text) or text[i + 1] != " ":
            continue
        j = i + 2
        if j >= len(text):
            continue
        nxt = text[j]
        if not (nxt.isupper() or nxt.isdigit()):
            continue
        if ch == ".":
            start = text.rfind(" ", 0, i) + 1
            word = text[start:i + 1].lower()
            if word in abbreviations:
                continue
        breaks.append(i + 1)

    pieces = []
    prev = 0
    for b in breaks:
        pieces.append(text[prev:b].strip())
        prev = b
    pieces.append(text[prev:].strip())
    pieces = [p for p in pieces if p]

    return [
        Sentence.make(f"{id_prefix}{i}", p, lang=lang_hint, source_tag=source_tag)
        for i, p in enumerate(pieces)
    ]


def deduplicate(sentences: Iterable[Sentence]) -> list[Sentence]:
    """Drop exact-text duplicates (case-sensitive), keeping first occurrences."""
    seen = set()
    out = []
    for s in sentences:
        if s.text in seen:
            continue
        seen.add(s.text)
        out.append(s)
    return out


# ---------------------------------------------------------------------------
# I/O

def sentence_to_record(s: Sentence) -> dict:
    return {"id": s.id, "text": s.text, "lang": s.lang,
            "source_tag": s.source_tag}


def sentence_from_record(rec: dict) -> Sentence:
    return Sentence.make(id=str(rec["id"]), text=rec["text"],
                         lang=rec.get("lang"),
                         source_tag=rec.get("source_tag", ""))


def read_jsonl_sentences(path: str | Path) -> list[Sentence]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {e}") from e
            if "text" not in rec:
                raise ValueError(f"{path}:{lineno}: missing 'text' field")
            rec.setdefault("id", f"{Path(path).stem}:{lineno}")
            out.append(sentence_from_record(rec))
    return out


def write_jsonl_sentences(sentences: Iterable[Sentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(json.dumps(sentence_to_record(s), ensure_ascii=False) + "\n")


def read_text_paragraphs(path: str | Path) -> list[str]:
    """Plain-text input: one paragraph per line; blank lines skipped."""
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f if line.strip()]


def write_bitext_tsv(pairs: Iterable[ParallelPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            score = "" if p.score is None else f"{p.score:.6f}"
            f.write(f"{p.src.text}\t{p.tgt.text}\t{score}\t{p.origin}\n")


def read_bitext_tsv(path: str | Path, src_lang: Optional[str] = None,
                    tgt_lang: Optional[str] = None) -> list[ParallelPair]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise ValueError(f"{path}:{lineno}: expected at least 2 columns")
            src_text, tgt_text = cols[0], cols[1]
            score = float(cols[2]) if len(cols) > 2 and cols[2] else None
            origin = cols[3] if len(cols) > 3 and cols[3] else (
                ORIGIN_MINED if score is not None else ORIGIN_GOLD)
            out.append(ParallelPair(
                src=Sentence.make(f"{lineno}:src", src_text, lang=src_lang),
                tgt=Sentence.make(f"{lineno}:tgt", tgt_text, lang=tgt_lang),
                score=score, origin=origin))
    return out
