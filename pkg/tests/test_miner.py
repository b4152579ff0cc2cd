import numpy as np
import pytest

from bitextkit.corpus import Document, DocumentPair, Sentence
from bitextkit.miner import (AlignedPath, MiningConfig, MiningStats, align_dp,
                             margin_penalize, mine_document_pair,
                             mine_within_document, raw_similarity)

from synth import brute_force_alignment, make_noisy_bitext, unit


class TestRawSimilarity:
    def test_identical_equal_lengths(self):
        v = np.array([1.0, 2.0, 3.0])
        assert raw_similarity(v, v, 10, 10) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert raw_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0]),
                              5, 5) == pytest.approx(0.0)

    def test_length_ratio_scaling(self):
        # cos 0.8 between unit vectors, lengths 10 and 20 -> 0.4
        a = np.array([1.0, 0.0])
        b = np.array([0.8, 0.6])
        assert raw_similarity(a, b, 10, 20) == pytest.approx(0.4)

    def test_zero_vector_error(self):
        with pytest.raises(ValueError, match="degenerate embedding"):
            raw_similarity(np.zeros(3), np.ones(3), 5, 5)

    def test_nonpositive_length_error(self):
        with pytest.raises(ValueError):
            raw_similarity(np.ones(3), np.ones(3), 0, 5)


class TestMarginPenalize:
    def test_alpha_zero_identity(self):
        S = np.array([[0.3, 0.7], [0.1, 0.9]])
        assert np.allclose(margin_penalize(S, 2, 0.0), S)

    def test_hand_arithmetic(self):
        S = np.array([[0.9, 0.1], [0.2, 0.8]])
        P = margin_penalize(S, 1, 1.0)
        assert P[0, 0] == pytest.approx(0.0)
        assert P[1, 1] == pytest.approx(0.8 - (0.8 + 0.8) / 2)

    def test_constant_matrix_zeroed(self):
        S = np.full((4, 5), 0.37)
        assert np.allclose(margin_penalize(S, 3, 1.0), 0.0)

    def test_k_clamped(self):
        S = np.array([[0.5, 0.5]])
        out = margin_penalize(S, 10, 1.0)
        assert out.shape == S.shape

    def test_row_argmax_preserved_with_full_k(self):
        # adding a constant to a row must not change that row's argmax
        rng = np.random.default_rng(0)
        S = rng.uniform(-1, 1, size=(5, 5))
        S2 = S.copy()
        S2[2] += 0.3
        P = margin_penalize(S2, 5, 1.0)
        assert np.argmax(P[2]) == np.argmax(S2[2])


class TestAlignDp:
    def test_diagonal_dominance(self):
        path = align_dp(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert [(i, j) for i, j, _ in path.pairs] == [(0, 0), (1, 1)]
        assert path.total == pytest.approx(2.0)

    def test_all_negative_empty(self):
        path = align_dp(np.full((3, 3), -0.5))
        assert path.pairs == []
        assert path.total == 0.0

    def test_empty_matrix(self):
        path = align_dp(np.empty((0, 0)))
        assert path.pairs == [] and path.total == 0.0

    def test_matches_brute_force_on_random_matrices(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            m, n = rng.integers(1, 6, size=2)
            S = rng.uniform(-1, 1, size=(m, n))
            assert align_dp(S).total == pytest.approx(
                brute_force_alignment(S), abs=1e-12)

    def test_monotone_one_to_one(self):
        rng = np.random.default_rng(7)
        S = rng.uniform(-1, 1, size=(8, 8))
        pairs = align_dp(S).pairs
        rows = [i for i, _, _ in pairs]
        cols = [j for _, j, _ in pairs]
        assert rows == sorted(rows) and len(set(rows)) == len(rows)
        assert cols == sorted(cols) and len(set(cols)) == len(cols)

    def test_invariant_under_all_negative_row(self):
        rng = np.random.default_rng(9)
        S = rng.uniform(-1, 1, size=(5, 5))
        extended = np.vstack([S, np.full((1, 5), -2.0)])
        assert align_dp(extended).total == pytest.approx(align_dp(S).total)
        extended = np.hstack([S, np.full((5, 1), -2.0)])
        assert align_dp(extended).total == pytest.approx(align_dp(S).total)

    def test_negative_pairs_never_in_path(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            S = rng.uniform(-1, 1, size=(6, 6))
            assert all(s >= 0 for _, _, s in align_dp(S).pairs)


def _doc(prefix, texts, lang):
    return Document(id=prefix, lang=lang, sentences=[
        Sentence.make(f"{prefix}:{i}", t, lang=lang)
        for i, t in enumerate(texts)])


class TestMineDocumentPair:
    def _perfect_fixture(self, n=4):
        texts = [f"sent {i} text here" for i in range(n)]
        src = _doc("s", texts, "src")
        tgt = _doc("t", texts, "tgt")
        emb = {}
        eye = np.eye(n)
        for i in range(n):
            emb[f"s:{i}"] = eye[i]
            emb[f"t:{i}"] = eye[i]
        return DocumentPair(src_doc=src, tgt_doc=tgt), emb

    def test_perfect_signal_identity_alignment(self):
        pair, emb = self._perfect_fixture()
        out = mine_document_pair(pair, emb,
                                 MiningConfig(threshold=0.1, alpha=0.5))
        assert [(p.src.id, p.tgt.id) for p in out] == \
            [(f"s:{i}", f"t:{i}") for i in range(4)]
        for p in out:
            assert p.origin == "mined" and p.score is not None

    def test_threshold_dominance(self):
        pair, emb = self._perfect_fixture()
        out = mine_document_pair(pair, emb,
                                 MiningConfig(threshold=99.0, alpha=0.5))
        assert out == []

    def test_missing_embedding_error(self):
        pair, emb = self._perfect_fixture()
        del emb["t:2"]
        with pytest.raises(KeyError, match="t:2"):
            mine_document_pair(pair, emb, MiningConfig(threshold=0.1))

    def test_output_strictly_monotone(self):
        rng = np.random.default_rng(21)
        texts = [f"text number {i}" for i in range(10)]
        pair = DocumentPair(src_doc=_doc("a", texts, "src"),
                            tgt_doc=_doc("b", texts, "tgt"))
        emb = {f"{d}:{i}": unit(rng.normal(size=8))
               for d in "ab" for i in range(10)}
        out = mine_document_pair(pair, emb,
                                 MiningConfig(threshold=-10.0, alpha=0.5))
        src_order = [int(p.src.id.split(":")[1]) for p in out]
        tgt_order = [int(p.tgt.id.split(":")[1]) for p in out]
        assert src_order == sorted(src_order)
        assert tgt_order == sorted(tgt_order)

    def test_synthetic_noise_precision(self):
        doc_pairs, emb, truth = make_noisy_bitext(n_docs=30, seed=3)
        config = MiningConfig(threshold=0.4, alpha=0.5, k_neighbors=4)
        mined = []
        for dp in doc_pairs:
            mined.extend(mine_document_pair(dp, emb, config))
        assert mined
        hits = sum(1 for p in mined if (p.src.id, p.tgt.id) in truth)
        assert hits / len(mined) >= 0.9


class TestMineWithinDocument:
    def test_alternating_languages(self, two_lang_model):
        # alternating sentences from the two synthetic alphabets, with
        # matched embeddings for consecutive (aa, bb) sentences
        rng = np.random.default_rng(4)
        sents = []
        emb = {}
        n = 5
        for i in range(n):
            base = unit(rng.normal(size=8))
            sents.append(Sentence.make(f"m:{2*i}", "abcd efgh abce",
                                       lang=None))
            emb[f"m:{2*i}"] = base
            sents.append(Sentence.make(f"m:{2*i+1}", "ijkl mnop ijkm",
                                       lang=None))
            emb[f"m:{2*i+1}"] = base
        doc = Document(id="m", lang="und", sentences=sents)
        out = mine_within_document(doc, two_lang_model, "aa", "bb", emb,
                                   MiningConfig(threshold=0.2, alpha=0.5))
        assert len(out) == n
        assert [(p.src.id, p.tgt.id) for p in out] == \
            [(f"m:{2*i}", f"m:{2*i+1}") for i in range(n)]

    def test_monolingual_document_empty(self, two_lang_model):
        sents = [Sentence.make(f"m:{i}", "abcd efgh") for i in range(4)]
        doc = Document(id="m", lang="und", sentences=sents)
        out = mine_within_document(doc, two_lang_model, "aa", "bb",
                                   {s.id: np.ones(4) for s in sents},
                                   MiningConfig(threshold=0.0))
        assert out == []

    def test_single_pair(self, two_lang_model):
        sents = [Sentence.make("m:0", "abcd efgh"),
                 Sentence.make("m:1", "ijkl mnop")]
        doc = Document(id="m", lang="und", sentences=sents)
        emb = {"m:0": np.array([1.0, 0.0]), "m:1": np.array([1.0, 0.0])}
        out = mine_within_document(doc, two_lang_model, "aa", "bb", emb,
                                   MiningConfig(threshold=0.1, alpha=0.5,
                                                k_neighbors=1))
        assert len(out) == 1


def test_mining_stats_report():
    stats = MiningStats()
    stats.per_doc.append({"src_doc": "a", "tgt_doc": "b",
                          "accepted": 3, "rejected": 1})
    stats.scores.extend([0.1, 0.5, 0.6, 0.7])
    rep = stats.report()
    assert rep["accepted_total"] == 3
    assert rep["rejected_total"] == 1
    assert sum(rep["score_histogram"]["counts"]) == 4
