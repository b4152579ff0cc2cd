"""Bitext mining: length-scaled cosine similarity, neighbor-margin
penalization, monotone DP alignment, and per-source thresholding.

Mining is strictly local: candidates come from one paired document (or the
two language partitions of a single document), never from a global index.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import (Document, DocumentPair, ParallelPair, Sentence,
                     ORIGIN_MINED, read_jsonl_sentences)
from .embinit import read_embeddings
from . import langid as langid_mod

log = logging.getLogger(__name__)


@dataclass
class MiningConfig:
    threshold: float  # per-source, manually tuned; no default on purpose
    k_neighbors: int = 4
    alpha: float = 0.5

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")


@dataclass
class AlignedPath:
    pairs: list[tuple[int, int, float]]
    total: float


def raw_similarity(emb_a: np.ndarray, emb_b: np.ndarray,
                   len_a: int, len_b: int) -> float:
    """Cosine similarity scaled by the short-to-long length ratio."""
    if len_a <= 0 or len_b <= 0:
        raise ValueError("sentence lengths must be positive")
    na = float(np.linalg.norm(emb_a))
    nb = float(np.linalg.norm(emb_b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("degenerate embedding (zero vector)")
    cos = float(np.dot(emb_a, emb_b)) / (na * nb)
    return cos * min(len_a, len_b) / max(len_a, len_b)


def margin_penalize(S: np.ndarray, k: int, alpha: float) -> np.ndarray:
    """Subtract alpha times the mean of each cell's row and column top-k
    averages. k is clamped to the matrix size."""
    S = np.asarray(S, dtype=np.float64)
    if S.size == 0:
        return S.copy()
    m, n = S.shape
    k = min(k, m, n)
    row_top = np.sort(S, axis=1)[:, n - k:].mean(axis=1)
    col_top = np.sort(S, axis=0)[m - k:, :].mean(axis=0)
    return S - alpha * (row_top[:, None] + col_top[None, :]) / 2.0


def align_dp(S: np.ndarray) -> AlignedPath:
    """Maximum-sum strictly monotone one-to-one matching.

    f(i,j) = max(f(i-1,j), f(i,j-1), f(i-1,j-1) + S(i-1,j-1)); skipping is
    free, so negative-score pairs never enter the optimum. Traceback prefers
    the diagonal on ties, then the row skip.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.size == 0:
        return AlignedPath(pairs=[], total=0.0)
    m, n = S.shape
    f = np.zeros((m + 1, n + 1))
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            f[i, j] = max(f[i - 1, j], f[i, j - 1],
                          f[i - 1, j - 1] + S[i - 1, j - 1])
    pairs = []
    i, j = m, n
    while i > 0 and j > 0:
        if f[i, j] == f[i - 1, j - 1] + S[i - 1, j - 1]:
            pairs.append((i - 1, j - 1, float(S[i - 1, j - 1])))
            i -= 1
            j -= 1
        elif f[i, j] == f[i - 1, j]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return AlignedPath(pairs=pairs, total=float(f[m, n]))


def similarity_matrix(src_sents: list[Sentence], tgt_sents: list[Sentence],
                      embeddings: dict[str, np.ndarray]) -> np.ndarray:
    S = np.empty((len(src_sents), len(tgt_sents)))
    for sid in [s.id for s in src_sents] + [t.id for t in tgt_sents]:
        if sid not in embeddings:
            raise KeyError(f"missing embedding for sentence {sid!r}")
    for i, s in enumerate(src_sents):
        for j, t in enumerate(tgt_sents):
            S[i, j] = raw_similarity(embeddings[s.id], embeddings[t.id],
                                     s.char_len, t.char_len)
    return S


def mine_document_pair(pair: DocumentPair,
                       embeddings: dict[str, np.ndarray],
                       config: MiningConfig,
                       stats: Optional["MiningStats"] = None,
                       ) -> list[ParallelPair]:
    src_sents = pair.src_doc.sentences
    tgt_sents = pair.tgt_doc.sentences
    if not src_sents or not tgt_sents:
        return []
    S = similarity_matrix(src_sents, tgt_sents, embeddings)
    S_pen = margin_penalize(S, config.k_neighbors, config.alpha)
    path = align_dp(S_pen)
    out = []
    accepted = rejected = 0
    for i, j, score in path.pairs:
        if stats is not None:
            stats.scores.append(score)
        if score >= config.threshold:
            out.append(ParallelPair(src=src_sents[i], tgt=tgt_sents[j],
                                    score=score, origin=ORIGIN_MINED))
            accepted += 1
        else:
            rejected += 1
    if stats is not None:
        stats.per_doc.append({
            "src_doc": pair.src_doc.id, "tgt_doc": pair.tgt_doc.id,
            "accepted": accepted, "rejected": rejected,
        })
    return out


def mine_within_document(doc: Document, langid_model, src_lang: str,
                         tgt_lang: str, embeddings: dict[str, np.ndarray],
                         config: MiningConfig,
                         stats: Optional["MiningStats"] = None,
                         ) -> list[ParallelPair]:
    """Partition a mixed-language document by top-1 language prediction into
    two virtual documents (order preserved) and mine across them."""
    src_sents, tgt_sents = [], []
    for s in doc.sentences:
        top = langid_mod.predict(langid_model, s.text, 1)[0][0]
        if top == src_lang:
            src_sents.append(s)
        elif top == tgt_lang:
            tgt_sents.append(s)
    if not src_sents or not tgt_sents:
        return []
    pair = DocumentPair(
        src_doc=Document(id=f"{doc.id}#{src_lang}", lang=src_lang,
                         sentences=src_sents),
        tgt_doc=Document(id=f"{doc.id}#{tgt_lang}", lang=tgt_lang,
                         sentences=tgt_sents))
    return mine_document_pair(pair, embeddings, config, stats=stats)


@dataclass
class MiningStats:
    per_doc: list[dict] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)

    def report(self, bins: int = 20) -> dict:
        hist: dict = {"bin_edges": [], "counts": []}
        if self.scores:
            counts, edges = np.histogram(np.asarray(self.scores), bins=bins)
            hist = {"bin_edges": [round(float(e), 6) for e in edges],
                    "counts": [int(c) for c in counts]}
        return {
            "documents": self.per_doc,
            "accepted_total": sum(d["accepted"] for d in self.per_doc),
            "rejected_total": sum(d["rejected"] for d in self.per_doc),
            "score_histogram": hist,
        }


def _dedup_pairs(pairs: list[ParallelPair]) -> list[ParallelPair]:
    # A matched pair may recur across overlapping documents; keep the first.
    seen = set()
    out = []
    for p in pairs:
        key = (p.src.text, p.tgt.text)
        if key not in seen:
            seen.add(key)
            out.append(p)
    return out


def _load_doc(path: str | Path, lang: str = "",
              doc_id: Optional[str] = None) -> Document:
    sents = read_jsonl_sentences(path)
    if not lang and sents and sents[0].lang:
        lang = sents[0].lang
    return Document(id=doc_id or str(path), lang=lang or "und",
                    sentences=sents)


def mine_from_manifest(manifest_path: str | Path, emb_path: str | Path,
                       config: MiningConfig, langid_model=None,
                       src_lang: str = "", tgt_lang: str = "",
                       threads: int = 1,
                       ) -> tuple[list[ParallelPair], MiningStats]:
    """Manifest lines: {"src_doc": path, "tgt_doc": path} for paired documents
    or {"doc": path, "mode": "within"} for single mixed-language documents.
    Paths are resolved relative to the manifest. Documents are independent
    work units; with threads > 1 they are mined concurrently, with results
    merged in manifest order so output is identical to the sequential run."""
    emb_matrix = read_embeddings(emb_path)
    embeddings = {t: emb_matrix.row(t) for t in emb_matrix.tokens}
    base = Path(manifest_path).parent

    jobs = []
    with open(manifest_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            job = json.loads(line)
            if job.get("mode") == "within":
                if langid_model is None or not src_lang or not tgt_lang:
                    raise ValueError(
                        f"{manifest_path}:{lineno}: within-document mining "
                        "needs a langid model and both language codes")
            elif "src_doc" not in job or "tgt_doc" not in job:
                raise ValueError(f"{manifest_path}:{lineno}: unknown job {job}")
            jobs.append(job)

    def run_job(job) -> tuple[list[ParallelPair], MiningStats]:
        local = MiningStats()
        if job.get("mode") == "within":
            doc = _load_doc(base / job["doc"], doc_id=job["doc"])
            pairs = mine_within_document(doc, langid_model, src_lang,
                                         tgt_lang, embeddings, config,
                                         stats=local)
        else:
            pair = DocumentPair(
                src_doc=_load_doc(base / job["src_doc"], src_lang or "src",
                                  doc_id=job["src_doc"]),
                tgt_doc=_load_doc(base / job["tgt_doc"], tgt_lang or "tgt",
                                  doc_id=job["tgt_doc"]))
            pairs = mine_document_pair(pair, embeddings, config, stats=local)
        return pairs, local

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run_job, jobs))
    else:
        results = [run_job(j) for j in jobs]

    stats = MiningStats()
    all_pairs: list[ParallelPair] = []
    for pairs, local in results:
        all_pairs.extend(pairs)
        stats.per_doc.extend(local.per_doc)
        stats.scores.extend(local.scores)
    return _dedup_pairs(all_pairs), stats


def write_mining_report(stats: MiningStats, out_dir: str | Path) -> None:
    """Structured report plus a score-histogram figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = stats.report()
    with open(out_dir / "mining_report.json", "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(6, 4))
    if stats.scores:
        ax.hist(stats.scores, bins=20, edgecolor="black")
    ax.set_xlabel("penalized score")
    ax.set_ylabel("pairs")
    ax.set_title("Mined pair score distribution")
    fig.tight_layout()
    fig.savefig(out_dir / "score_histogram.png", dpi=120)
    plt.close(fig)
