"""Acceptance suite: one test per release criterion, each printing a
PASS line (run with -s or check captured output)."""

import itertools
import time
from collections import Counter

import numpy as np
import pytest

from bitextkit.cli import main
from bitextkit.curriculum import write_stream
from bitextkit.embinit import (AlignmentStats, EmbeddingMatrix,
                               alignment_weight, cooccurrence_counts,
                               init_embedding)
from bitextkit.langid import (LabeledText, predict, temperature_sample, train)
from bitextkit.metrics import corpus_bleu, corpus_chrf_pp
from bitextkit.miner import MiningConfig, align_dp, mine_document_pair
from bitextkit.reports import AnnotationRecord, aggregate_annotations
from bitextkit.subword import END_OF_WORD, apply_bpe, learn_bpe

from conftest import ALPHABETS, make_corpus, make_text, small_config
from pipeline_fixture import OUTPUT_FILES, build_workspace
from synth import make_noisy_bitext
from test_curriculum import make_scheduler


def _pass(name):
    print(f"ACCEPTANCE {name}: PASS")


def exhaustive_optimum(S):
    """Independent oracle: enumerate every strictly monotone one-to-one
    matching directly. Sequential left-fold sums match the DP's fold order,
    so equality can be exact."""
    m, n = S.shape
    best = 0.0
    for k in range(1, min(m, n) + 1):
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                total = sum(S[i, j] for i, j in zip(rows, cols))
                if total > best:
                    best = total
    return best


def test_dp_alignment_oracle():
    rng = np.random.default_rng(2024)
    start = time.monotonic()
    for _ in range(1000):
        m = int(rng.integers(1, 7))
        n = int(rng.integers(1, 7))
        S = rng.uniform(-1.0, 1.0, size=(m, n))
        assert align_dp(S).total == exhaustive_optimum(S)
    elapsed = time.monotonic() - start
    assert elapsed < 10.0, f"DP oracle took {elapsed:.1f}s"
    _pass("dp-alignment-oracle")


def test_mining_precision():
    start = time.monotonic()
    doc_pairs, emb, truth = make_noisy_bitext(
        n_docs=200, n_true=8, unpaired_frac=0.2, sigma=0.1, seed=77)
    config = MiningConfig(threshold=0.4, alpha=0.5, k_neighbors=4)
    mined = []
    for dp in doc_pairs:
        mined.extend(mine_document_pair(dp, emb, config))
    assert mined
    hits = sum(1 for p in mined if (p.src.id, p.tgt.id) in truth)
    precision = hits / len(mined)
    elapsed = time.monotonic() - start
    assert precision >= 0.90, f"precision {precision:.3f}"
    assert elapsed < 30.0, f"mining took {elapsed:.1f}s"
    _pass(f"mining-precision ({precision:.3f}, {len(mined)} pairs)")


def test_bleu():
    assert corpus_bleu(["a b c d"], ["a b c d"]).score == \
        pytest.approx(100.0, abs=1e-9)
    assert corpus_bleu(["a b c d e f g h"],
                       ["a b c d x y z w"]).score == \
        pytest.approx(34.57, abs=0.01)
    assert corpus_bleu(["a b c q e"], ["a b c d e"]).score == 0.0
    _pass("bleu")


def test_chrf_pp():
    assert corpus_chrf_pp(["кот на ковре"], ["кот на ковре"]).score == \
        pytest.approx(100.0)
    assert corpus_chrf_pp([""], ["cat sat"]).score == 0.0
    # 50.625: pre-build manual enumeration of char 1-6 and word 1-2 gram
    # multiset overlaps for "cat sat" vs "cat sap"
    assert corpus_chrf_pp(["cat sat"], ["cat sap"]).score == \
        pytest.approx(50.625, abs=1e-6)
    _pass("chrfpp")


def test_langid_disjoint_alphabets():
    data = make_corpus(["aa", "bb", "cc"], 400, seed=21)
    model = train(data, small_config(seed=5))
    rng = np.random.default_rng(22)
    correct = total = 0
    for lang in ("aa", "bb", "cc"):
        for _ in range(200):
            total += 1
            if predict(model, make_text(ALPHABETS[lang], rng), 1)[0][0] \
                    == lang:
                correct += 1
    acc = correct / total
    assert acc >= 0.99, f"accuracy {acc:.3f}"
    _pass(f"langid-disjoint (acc {acc:.3f})")


def _overlap_text(own_words, shared_words, rng, shared_frac=0.3):
    words = []
    for _ in range(int(rng.integers(5, 10))):
        pool = shared_words if rng.random() < shared_frac else own_words
        words.append(pool[int(rng.integers(len(pool)))])
    return " ".join(words)


def test_langid_overlapping_vocabulary():
    rng = np.random.default_rng(31)
    vocab_a = [make_text(ALPHABETS["aa"], rng, 1) for _ in range(70)]
    vocab_b = [make_text(ALPHABETS["bb"], rng, 1) for _ in range(70)]
    shared = [make_text(ALPHABETS["aa"] + ALPHABETS["bb"], rng, 1)
              for _ in range(60)]
    data = []
    for _ in range(600):
        data.append(LabeledText(_overlap_text(vocab_a, shared, rng), "aa"))
        data.append(LabeledText(_overlap_text(vocab_b, shared, rng), "bb"))
    model = train(data, small_config(seed=8))
    correct = total = 0
    for _ in range(300):
        total += 2
        if predict(model, _overlap_text(vocab_a, shared, rng), 1)[0][0] \
                == "aa":
            correct += 1
        if predict(model, _overlap_text(vocab_b, shared, rng), 1)[0][0] \
                == "bb":
            correct += 1
    acc = correct / total
    assert acc >= 0.90, f"accuracy {acc:.3f}"
    _pass(f"langid-overlap (acc {acc:.3f})")


def test_langid_training_determinism():
    data = make_corpus(["aa", "bb"], 80, seed=41)
    cfg = small_config(epochs=3, seed=17)
    m1 = train(data, cfg)
    m2 = train(data, cfg)
    assert np.array_equal(m1.feature_embeddings, m2.feature_embeddings)
    assert np.array_equal(m1.output_weights, m2.output_weights)
    _pass("langid-determinism")


def test_temperature_sampling():
    counts = temperature_sample({"A": 100_000, "B": 32}, exponent=1 / 5,
                                total=100_000, seed=123)
    assert counts["A"] / 100_000 == pytest.approx(10 / 12, abs=0.02)
    assert counts["B"] / 100_000 == pytest.approx(2 / 12, abs=0.02)
    _pass("temperature-sampling")


def test_embedding_init():
    # exclusive co-occurrence reproduces the source vector exactly
    stats = cooccurrence_counts([("исток", "лисьмапря")] * 5)
    emb = EmbeddingMatrix(tokens=["исток", "шум"],
                          vectors=np.array([[0.25, -1.5, 3.0],
                                            [9.0, 9.0, 9.0]]), d=3)
    vec = init_embedding("лисьмапря", stats, emb)
    assert np.array_equal(vec, np.array([0.25, -1.5, 3.0]))

    from collections import Counter as C
    w = alignment_weight(AlignmentStats(n_src=C({"s": 4}), n_tgt=C({"t": 8}),
                                        n_joint=C({("s", "t"): 4})),
                         "s", "t")
    assert w == 0.5

    rng = np.random.default_rng(55)
    src_tokens = [f"s{i}" for i in range(5)]
    for _ in range(1000):
        pairs = []
        for _ in range(int(rng.integers(2, 10))):
            k = int(rng.integers(1, 4))
            src = " ".join(rng.choice(src_tokens, size=k, replace=False))
            pairs.append((src, "t"))
        stats = cooccurrence_counts(pairs)
        vectors = rng.normal(size=(5, 4))
        emb = EmbeddingMatrix(tokens=src_tokens, vectors=vectors, d=4)
        vec = init_embedding("t", stats, emb, min_weight=0.05)
        assert np.all(vec >= vectors.min(axis=0) - 1e-12)
        assert np.all(vec <= vectors.max(axis=0) + 1e-12)
    _pass("embedding-init")


def test_bpe():
    merges = learn_bpe(["aaab"] * 3, min_count=3)
    assert (merges[0].left, merges[0].right) == ("a", "a")

    corpus = ["шумбрат велесь паро", "паро валске шумбрат"] * 10
    learned = learn_bpe(corpus, min_count=2)
    assert learned == learn_bpe(corpus, min_count=2)  # tie-break determinism
    for line in corpus:
        for word in line.split():
            toks = apply_bpe(learned, word)
            assert "".join(toks).replace(END_OF_WORD, "") == word
    _pass("bpe")


def test_curriculum():
    sched = make_scheduler(seed=99)
    hist = Counter()
    for _ in range(400):
        batch = sched.next_batch()
        hist[batch[0].step] += 1
        for ex in batch:
            if ex.synthetic_side == "target":
                assert ex.loss_weight == 0.05
            else:
                assert ex.loss_weight == 1.0
    assert hist == {1: 100, 2: 100, 3: 100, 4: 100}
    _pass("curriculum-histogram")


def test_curriculum_replay(tmp_path):
    p1, p2 = tmp_path / "s1.jsonl", tmp_path / "s2.jsonl"
    write_stream(make_scheduler(seed=2718), 100, p1)
    write_stream(make_scheduler(seed=2718), 100, p2)
    assert p1.read_bytes() == p2.read_bytes()
    _pass("curriculum-replay")


def test_annotation_aggregation():
    records = [AnnotationRecord("p1", f"a{i}", s)
               for i, s in enumerate([2, 5, 5])]
    records += [AnnotationRecord("p2", f"a{i}", s)
                for i, s in enumerate([3, 3, 4])]
    out = aggregate_annotations(records)
    assert out.mean_pessimistic == 2.5
    assert out.acceptance_rate == 0.5
    _pass("annotation-aggregation")


def test_end_to_end_pipeline(tmp_path):
    start = time.monotonic()
    dir_a, dir_b = tmp_path / "a", tmp_path / "b"
    dir_a.mkdir()
    dir_b.mkdir()
    assert main(["pipeline", "run", "--config",
                 str(build_workspace(dir_a))]) == 0
    assert main(["pipeline", "run", "--config",
                 str(build_workspace(dir_b))]) == 0
    for name in OUTPUT_FILES:
        assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes(), \
            f"{name} differs between runs"
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    _pass(f"end-to-end ({elapsed:.1f}s)")
