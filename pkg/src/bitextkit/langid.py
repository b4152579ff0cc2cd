"""Hashed character-n-gram linear classifier for language identification.

Features are word unigrams (for words above a corpus-count cutoff) plus hashed
character n-grams of boundary-marked tokens. A text is encoded as the mean of
its feature embeddings; a bias-free linear layer over that mean feeds a
softmax. Training is plain SGD with a linearly decaying learning rate and is
bit-for-bit deterministic for a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np

MODEL_MAGIC = "LIDM1"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(s: str) -> int:
    """FNV-1a 64-bit hash of the UTF-8 encoding; stable across platforms."""
    h = _FNV_OFFSET
    for b in s.encode("utf-8"):
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


@dataclass
class LangIdConfig:
    ngram_min: int = 1
    ngram_max: int = 4
    buckets: int = 200_000
    dim: int = 64
    lr0: float = 0.05
    epochs: int = 100
    min_word_count: int = 100
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.ngram_min <= self.ngram_max):
            raise ValueError("need 1 <= ngram_min <= ngram_max")
        if self.buckets <= 0 or self.dim <= 0:
            raise ValueError("buckets and dim must be positive")
        if self.lr0 <= 0 or self.epochs < 1:
            raise ValueError("lr0 must be > 0 and epochs >= 1")


@dataclass(frozen=True)
class LabeledText:
    text: str
    label: str


@dataclass
class LangIdModel:
    labels: list[str]
    word_vocab: dict[str, int]
    feature_embeddings: np.ndarray  # (|word_vocab| + buckets, dim) float32
    output_weights: np.ndarray      # (|labels|, dim) float32
    config: LangIdConfig
    _label_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.labels) != len(set(self.labels)):
            raise ValueError("duplicate labels")
        self._label_index = {l: i for i, l in enumerate(self.labels)}


def extract_features(text: str, word_vocab: dict[str, int],
                     config: LangIdConfig) -> list[int]:
    """Feature index multiset: known-word indices plus hashed char n-gram
    indices (offset past the word vocabulary) of '<token>' for each token."""
    n_words = len(word_vocab)
    feats = []
    for tok in text.split():
        idx = word_vocab.get(tok)
        if idx is not None:
            feats.append(idx)
        marked = "<" + tok + ">"
        for n in range(config.ngram_min, config.ngram_max + 1):
            for i in range(len(marked) - n + 1):
                gram = marked[i:i + n]
                feats.append(n_words + fnv1a64(gram) % config.buckets)
    return feats


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _hidden(model_E: np.ndarray, feats: list[int], dim: int) -> np.ndarray:
    if not feats:
        return np.zeros(dim, dtype=model_E.dtype)
    return model_E[feats].mean(axis=0)


def train(data: list[LabeledText], config: LangIdConfig) -> LangIdModel:
    if not data:
        raise ValueError("no training data")
    labels = sorted({d.label for d in data})
    if len(labels) < 2:
        raise ValueError("degenerate label set")
    label_index = {l: i for i, l in enumerate(labels)}

    word_counts: dict[str, int] = {}
    for d in data:
        for tok in d.text.split():
            word_counts[tok] = word_counts.get(tok, 0) + 1
    word_vocab = {w: i for i, w in enumerate(sorted(
        w for w, c in word_counts.items() if c >= config.min_word_count))}

    rng = np.random.default_rng(config.seed)
    n_rows = len(word_vocab) + config.buckets
    E = rng.uniform(-1.0 / config.dim, 1.0 / config.dim,
                    size=(n_rows, config.dim)).astype(np.float32)
    W = np.zeros((len(labels), config.dim), dtype=np.float32)

    feats_cache = [extract_features(d.text, word_vocab, config) for d in data]
    targets = np.array([label_index[d.label] for d in data])

    total_updates = config.epochs * len(data)
    t = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(data))
        for i in order:
            lr = config.lr0 * (1.0 - t / total_updates)
            t += 1
            feats = feats_cache[i]
            if not feats:
                continue
            h = E[feats].mean(axis=0)
            p = _softmax((W @ h).astype(np.float64))
            g = p.astype(np.float32)
            g[targets[i]] -= 1.0
            grad_h = W.T @ g
            W -= lr * np.outer(g, h)
            np.add.at(E, feats, -lr * grad_h / len(feats))

    return LangIdModel(labels=labels, word_vocab=word_vocab,
                       feature_embeddings=E, output_weights=W, config=config)


def mean_loss(model: LangIdModel, data: list[LabeledText]) -> float:
    """Mean softmax cross-entropy of the model on labeled data."""
    total = 0.0
    for d in data:
        feats = extract_features(d.text, model.word_vocab, model.config)
        h = _hidden(model.feature_embeddings, feats, model.config.dim)
        p = _softmax((model.output_weights @ h).astype(np.float64))
        total += -np.log(max(p[model._label_index[d.label]], 1e-12))
    return total / len(data)


def predict(model: LangIdModel, text: str, k: int = 1) -> list[tuple[str, float]]:
    if k < 1:
        raise ValueError("k must be >= 1")
    feats = extract_features(text, model.word_vocab, model.config)
    h = _hidden(model.feature_embeddings, feats, model.config.dim)
    p = _softmax((model.output_weights @ h).astype(np.float64))
    order = sorted(range(len(model.labels)), key=lambda i: (-p[i], i))
    return [(model.labels[i], float(p[i])) for i in order[:k]]


def word_language_proportion(model: LangIdModel, text: str, target: str) -> float:
    """Fraction of whitespace tokens whose top-1 prediction, classified in
    isolation, equals the target language. Empty text yields 0."""
    if target not in model._label_index:
        raise ValueError(f"language {target!r} not in model labels")
    tokens = text.split()
    if not tokens:
        return 0.0
    hits = sum(1 for tok in tokens if predict(model, tok, 1)[0][0] == target)
    return hits / len(tokens)


def temperature_sample(corpus_sizes: dict[str, int], exponent: float = 0.2,
                       total: int = 1, seed: int = 0) -> dict[str, int]:
    """Multinomial per-language sample counts with p(lang) proportional to
    size^exponent. Deterministic given seed."""
    if not corpus_sizes:
        raise ValueError("no languages")
    if total <= 0:
        raise ValueError("total must be > 0")
    if any(c <= 0 for c in corpus_sizes.values()):
        raise ValueError("corpus sizes must be > 0")
    langs = sorted(corpus_sizes)
    weights = np.array([float(corpus_sizes[l]) ** exponent for l in langs])
    probs = weights / weights.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(total, probs)
    return {l: int(c) for l, c in zip(langs, counts)}


def temperature_probabilities(corpus_sizes: dict[str, int],
                              exponent: float = 0.2) -> dict[str, float]:
    if not corpus_sizes:
        raise ValueError("no languages")
    langs = sorted(corpus_sizes)
    weights = np.array([float(corpus_sizes[l]) ** exponent for l in langs])
    probs = weights / weights.sum()
    return {l: float(p) for l, p in zip(langs, probs)}


# ---------------------------------------------------------------------------
# Model file: text header (magic, labels, config, vocab, shapes) followed by
# dense little-endian float32 blocks for the two matrices.

def save_model(model: LangIdModel, path: str | Path) -> None:
    header = {
        "labels": model.labels,
        "config": asdict(model.config),
        "words": sorted(model.word_vocab, key=model.word_vocab.get),
        "shapes": {
            "feature_embeddings": list(model.feature_embeddings.shape),
            "output_weights": list(model.output_weights.shape),
        },
    }
    with open(path, "wb") as f:
        f.write((MODEL_MAGIC + "\n").encode("utf-8"))
        f.write((json.dumps(header, ensure_ascii=False) + "\n").encode("utf-8"))
        f.write(np.ascontiguousarray(
            model.feature_embeddings, dtype="<f4").tobytes())
        f.write(np.ascontiguousarray(
            model.output_weights, dtype="<f4").tobytes())


def load_model(path: str | Path) -> LangIdModel:
    with open(path, "rb") as buf:
        magic = buf.readline().decode("utf-8").rstrip("\n")
        if magic != MODEL_MAGIC:
            raise ValueError(f"{path}: not a langid model file "
                             f"(magic {magic!r}, expected {MODEL_MAGIC!r})")
        header = json.loads(buf.readline().decode("utf-8"))
        config = LangIdConfig(**header["config"])
        e_shape = tuple(header["shapes"]["feature_embeddings"])
        w_shape = tuple(header["shapes"]["output_weights"])
        E = np.frombuffer(buf.read(4 * e_shape[0] * e_shape[1]),
                          dtype="<f4").reshape(e_shape).copy()
        W = np.frombuffer(buf.read(4 * w_shape[0] * w_shape[1]),
                          dtype="<f4").reshape(w_shape).copy()
    word_vocab = {w: i for i, w in enumerate(header["words"])}
    return LangIdModel(labels=header["labels"], word_vocab=word_vocab,
                       feature_embeddings=E, output_weights=W, config=config)
