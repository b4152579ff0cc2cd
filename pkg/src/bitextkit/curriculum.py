"""Four-step alternating back-translation / self-training scheduler.

Each call to next_batch advances a 1..4 step cycle and emits training pairs
for the low-resource target language against the pivot and one auxiliary
language, in both directions. Examples whose target side is model-generated
are self-training and carry the down-weighting coefficient (0.05); examples
whose source side is model-generated are back-translation and carry 1.0.
Translation itself is behind a pluggable interface; identity and
dictionary-lookup stubs are provided for testing.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

import numpy as np

from .corpus import ParallelPair, Sentence
from .langid import LangIdModel
from .rerank import CandidateSet, rerank_candidates

log = logging.getLogger(__name__)

SELF_TRAIN_WEIGHT = 0.05
BACK_TRANSLATION_WEIGHT = 1.0
N_DIVERSE_CANDIDATES = 5


class TranslatorInterface(Protocol):
    def translate(self, text: str, src_lang: str, tgt_lang: str) -> str: ...

    def translate_diverse(self, text: str, src_lang: str, tgt_lang: str,
                          n: int) -> list[str]: ...


class IdentityTranslator:
    """Returns the input unchanged; the simplest deterministic stub."""

    def translate(self, text, src_lang, tgt_lang):
        return text

    def translate_diverse(self, text, src_lang, tgt_lang, n):
        return [text] * n


class DictTranslator:
    """Word-by-word lookup from a mapping {"src-tgt": {word: word}};
    unknown words pass through."""

    def __init__(self, tables: dict[str, dict[str, str]]):
        self.tables = tables

    @classmethod
    def from_file(cls, path: str | Path) -> "DictTranslator":
        with open(path, encoding="utf-8") as f:
            return cls(json.load(f))

    def translate(self, text, src_lang, tgt_lang):
        table = self.tables.get(f"{src_lang}-{tgt_lang}", {})
        out = " ".join(table.get(w, w) for w in text.split())
        return out if out else text

    def translate_diverse(self, text, src_lang, tgt_lang, n):
        return [self.translate(text, src_lang, tgt_lang)] * n


@dataclass
class DataSources:
    parallel_target_pivot: list[ParallelPair]
    parallel_pivot_aux: dict[str, list[tuple[str, str]]]
    mono_target: list[Sentence]


@dataclass
class TrainingExample:
    src_lang: str
    tgt_lang: str
    src_text: str
    tgt_text: str
    loss_weight: float
    step: int
    synthetic_side: str  # "source" | "target" | "none"

    def __post_init__(self):
        if self.loss_weight not in (SELF_TRAIN_WEIGHT, BACK_TRANSLATION_WEIGHT):
            raise ValueError("loss_weight must be 1.0 or 0.05")
        if (self.synthetic_side == "target") != \
                (self.loss_weight == SELF_TRAIN_WEIGHT):
            raise ValueError("self-training weight applies iff the target "
                             "side is synthetic")


class _EpochSampler:
    """Uniform sampling without replacement; reshuffles at epoch boundaries."""

    def __init__(self, items: list, rng: np.random.Generator, name: str):
        if not items:
            raise ValueError(f"empty source list: {name}")
        self.items = items
        self.rng = rng
        self.name = name
        self.order: list[int] = []

    def next(self):
        if not self.order:
            self.order = list(self.rng.permutation(len(self.items)))
            log.info("epoch boundary for source %s", self.name)
        return self.items[self.order.pop()]


def step1_select(candidates: list[str], langid_model: Optional[LangIdModel],
                 target_lang: str) -> str:
    """Choose the candidate with the largest target-language word proportion;
    without a model, keep the first (best original beam rank)."""
    if not candidates:
        raise ValueError("empty candidate list")
    if langid_model is None:
        return candidates[0]
    cset = CandidateSet(source=Sentence.make("cand", candidates[0]),
                        candidates=candidates, target_lang=target_lang)
    _, chosen, _ = rerank_candidates(cset, langid_model)
    return chosen


class CurriculumScheduler:
    def __init__(self, sources: DataSources, translator: TranslatorInterface,
                 langid_model: Optional[LangIdModel] = None, seed: int = 0,
                 target_lang: str = "myv", pivot_lang: str = "ru"):
        self.sources = sources
        self.translator = translator
        self.langid_model = langid_model
        self.target_lang = target_lang
        self.pivot_lang = pivot_lang
        self.rng = np.random.default_rng(seed)
        self.step = 0  # last emitted step, cycles 1..4

        pivot_aux_flat = [
            (lang, pair)
            for lang in sorted(sources.parallel_pivot_aux)
            for pair in sources.parallel_pivot_aux[lang]
        ]
        self.aux_langs = sorted(sources.parallel_pivot_aux)
        if not self.aux_langs:
            raise ValueError("no auxiliary languages configured")
        self._pivot_aux = _EpochSampler(pivot_aux_flat, self.rng, "pivot_aux")
        self._gold = _EpochSampler(sources.parallel_target_pivot, self.rng,
                                   "parallel_target_pivot")
        self._mono = _EpochSampler(sources.mono_target, self.rng,
                                   "mono_target")

    def _sample_aux_lang(self) -> str:
        return self.aux_langs[int(self.rng.integers(len(self.aux_langs)))]

    def _emit(self, step, src_lang, tgt_lang, src_text, tgt_text,
              synthetic_side) -> TrainingExample:
        weight = (SELF_TRAIN_WEIGHT if synthetic_side == "target"
                  else BACK_TRANSLATION_WEIGHT)
        return TrainingExample(src_lang=src_lang, tgt_lang=tgt_lang,
                               src_text=src_text, tgt_text=tgt_text,
                               loss_weight=weight, step=step,
                               synthetic_side=synthetic_side)

    def _pairs_around_synthetic_target_text(self, step: int, tgt_text: str,
                                            pivot_text: str, aux_lang: str,
                                            aux_text: str) -> list[TrainingExample]:
        """All four directions pairing a synthetic target-language text with
        gold pivot and auxiliary texts."""
        t, p = self.target_lang, self.pivot_lang
        return [
            self._emit(step, t, p, tgt_text, pivot_text, "source"),
            self._emit(step, p, t, pivot_text, tgt_text, "target"),
            self._emit(step, t, aux_lang, tgt_text, aux_text, "source"),
            self._emit(step, aux_lang, t, aux_text, tgt_text, "target"),
        ]

    def next_batch(self) -> list[TrainingExample]:
        self.step = self.step % 4 + 1
        step = self.step
        t, p = self.target_lang, self.pivot_lang

        if step == 1:
            aux_lang, (pivot_text, aux_text) = self._pivot_aux.next()
            candidates = self.translator.translate_diverse(
                pivot_text, p, t, N_DIVERSE_CANDIDATES)
            chosen = step1_select(candidates, self.langid_model, t)
            return self._pairs_around_synthetic_target_text(
                step, chosen, pivot_text, aux_lang, aux_text)

        if step == 2:
            aux_lang, (pivot_text, aux_text) = self._pivot_aux.next()
            synth = self.translator.translate(aux_text, aux_lang, t)
            return self._pairs_around_synthetic_target_text(
                step, synth, pivot_text, aux_lang, aux_text)

        if step == 3:
            gold = self._gold.next()
            tgt_text, pivot_text = gold.src.text, gold.tgt.text
            aux_lang = self._sample_aux_lang()
            synth_aux = self.translator.translate(tgt_text, t, aux_lang)
            return [
                self._emit(step, t, p, tgt_text, pivot_text, "none"),
                self._emit(step, p, t, pivot_text, tgt_text, "none"),
                self._emit(step, t, aux_lang, tgt_text, synth_aux, "target"),
                self._emit(step, aux_lang, t, synth_aux, tgt_text, "source"),
            ]

        mono = self._mono.next()
        aux_lang = self._sample_aux_lang()
        synth_aux = self.translator.translate(mono.text, t, aux_lang)
        synth_pivot = self.translator.translate(mono.text, t, p)
        return [
            self._emit(step, t, p, mono.text, synth_pivot, "target"),
            self._emit(step, p, t, synth_pivot, mono.text, "source"),
            self._emit(step, t, aux_lang, mono.text, synth_aux, "target"),
            self._emit(step, aux_lang, t, synth_aux, mono.text, "source"),
        ]


def example_to_record(ex: TrainingExample) -> dict:
    return {"src_lang": ex.src_lang, "tgt_lang": ex.tgt_lang,
            "src_text": ex.src_text, "tgt_text": ex.tgt_text,
            "loss_weight": ex.loss_weight, "step": ex.step,
            "synthetic_side": ex.synthetic_side}


def write_stream(scheduler: CurriculumScheduler, steps: int,
                 path: str | Path) -> int:
    """Emit `steps` batches as JSONL; returns the number of examples."""
    n = 0
    with open(path, "w", encoding="utf-8") as f:
        for _ in range(steps):
            for ex in scheduler.next_batch():
                f.write(json.dumps(example_to_record(ex),
                                   ensure_ascii=False) + "\n")
                n += 1
    return n
