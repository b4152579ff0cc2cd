"""Candidate reranking by target-language word proportion.

Picks, among alternative translations, the one with the largest fraction of
words recognized as the target language, countering source-language copying.
Ties keep the best original beam rank.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .corpus import Sentence
from .langid import LangIdModel, word_language_proportion


@dataclass
class CandidateSet:
    source: Sentence
    candidates: list[str]
    target_lang: str

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("empty candidate list")


def rerank_candidates(cset: CandidateSet,
                      model: LangIdModel) -> tuple[int, str, float]:
    proportions = [word_language_proportion(model, c, cset.target_lang)
                   for c in cset.candidates]
    best = max(range(len(proportions)), key=lambda i: (proportions[i], -i))
    return best, cset.candidates[best], proportions[best]


def rerank_jsonl(in_path: str | Path, out_path: str | Path,
                 model: LangIdModel) -> int:
    """Input lines {"source", "candidates", "target_lang"}; output adds
    {"chosen", "proportion"}. Returns the number of records processed."""
    n = 0
    with open(in_path, encoding="utf-8") as fin, \
            open(out_path, "w", encoding="utf-8") as fout:
        for lineno, line in enumerate(fin, 1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            cset = CandidateSet(
                source=Sentence.make(f"{lineno}", rec["source"]),
                candidates=list(rec["candidates"]),
                target_lang=rec["target_lang"])
            idx, _, prop = rerank_candidates(cset, model)
            rec["chosen"] = idx
            rec["proportion"] = prop
            fout.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    return n
