"""Co-occurrence alignment weights and embedding initialization for new tokens.

The alignment weight between a target token and a source token is
n_joint^2 / (n_src * n_tgt), counted presence-based over parallel pairs.
New-token embeddings are weighted averages of aligned source-token vectors.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def count_tokenize(text: str) -> list[str]:
    """Deterministic stand-in tokenizer for counting: lowercase, split on
    whitespace and punctuation."""
    return _WORD_RE.findall(text.lower())


@dataclass
class AlignmentStats:
    n_src: Counter
    n_tgt: Counter
    n_joint: Counter  # keyed by (src_token, tgt_token)


@dataclass
class EmbeddingMatrix:
    tokens: list[str]
    vectors: np.ndarray
    d: int

    def __post_init__(self):
        if len(self.tokens) != len(set(self.tokens)):
            raise ValueError("duplicate tokens in embedding matrix")
        if self.vectors.shape != (len(self.tokens), self.d):
            raise ValueError("embedding matrix shape mismatch")
        self._index = {t: i for i, t in enumerate(self.tokens)}

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def row(self, token: str) -> np.ndarray:
        return self.vectors[self._index[token]]


def cooccurrence_counts(pairs: Iterable,
                        tokenizer_src: Callable[[str], list[str]] = count_tokenize,
                        tokenizer_tgt: Callable[[str], list[str]] = count_tokenize,
                        ) -> AlignmentStats:
    """Presence-based counts: a token counts once per sentence regardless of
    repeats. Accepts ParallelPair objects or (src_text, tgt_text) tuples."""
    n_src: Counter = Counter()
    n_tgt: Counter = Counter()
    n_joint: Counter = Counter()
    for pair in pairs:
        if isinstance(pair, tuple):
            src_text, tgt_text = pair
        else:
            src_text, tgt_text = pair.src.text, pair.tgt.text
        src_toks = set(tokenizer_src(src_text))
        tgt_toks = set(tokenizer_tgt(tgt_text))
        for s in src_toks:
            n_src[s] += 1
        for t in tgt_toks:
            n_tgt[t] += 1
        for s in src_toks:
            for t in tgt_toks:
                n_joint[(s, t)] += 1
    return AlignmentStats(n_src=n_src, n_tgt=n_tgt, n_joint=n_joint)


def alignment_weight(stats: AlignmentStats, t_src: str, t_tgt: str) -> float:
    ns = stats.n_src.get(t_src, 0)
    nt = stats.n_tgt.get(t_tgt, 0)
    if ns <= 0 or nt <= 0:
        raise ValueError(f"unseen token: {t_src!r} / {t_tgt!r}")
    nj = stats.n_joint.get((t_src, t_tgt), 0)
    return (nj * nj) / (ns * nt)


def init_embedding(new_token: str, stats: AlignmentStats,
                   source_embeddings: EmbeddingMatrix,
                   min_weight: float = 0.05) -> np.ndarray:
    """Weighted average of source-token vectors with alignment weight >=
    min_weight; falls back to the unweighted mean of all rows when no source
    token qualifies."""
    if len(source_embeddings.tokens) == 0:
        raise ValueError("empty source embeddings")
    weights = []
    vectors = []
    for (s, t), nj in stats.n_joint.items():
        if t != new_token or nj == 0:
            continue
        ns = stats.n_src.get(s, 0)
        nt = stats.n_tgt.get(new_token, 0)
        if ns <= 0 or nt <= 0:
            continue
        w = (nj * nj) / (ns * nt)
        if w >= min_weight and s in source_embeddings:
            weights.append(w)
            vectors.append(source_embeddings.row(s))
    if not weights:
        return source_embeddings.vectors.mean(axis=0)
    w = np.asarray(weights, dtype=np.float64)
    v = np.asarray(vectors, dtype=np.float64)
    return (w[:, None] * v).sum(axis=0) / w.sum()


# ---------------------------------------------------------------------------
# Plain-text vector format: first line "count dim", then "token v1 ... vd".

def write_embeddings(emb: EmbeddingMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(emb.tokens)} {emb.d}\n")
        for tok, vec in zip(emb.tokens, emb.vectors):
            vals = " ".join(f"{v:.6g}" for v in vec)
            f.write(f"{tok} {vals}\n")


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: bad header, expected 'count dim'")
        count, dim = int(header[0]), int(header[1])
        tokens = []
        rows = np.empty((count, dim), dtype=np.float64)
        for i in range(count):
            parts = f.readline().rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}: row {i} has wrong dimension")
            tokens.append(parts[0])
            rows[i] = [float(x) for x in parts[1:]]
    return EmbeddingMatrix(tokens=tokens, vectors=rows, d=dim)
