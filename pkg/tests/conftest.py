import numpy as np
import pytest

from bitextkit.langid import LabeledText, LangIdConfig, train

# Disjoint alphabets so the synthetic languages are perfectly separable by
# character n-grams.
ALPHABETS = {
    "aa": "abcdefgh",
    "bb": "ijklmnop",
    "cc": "qrstuvwx",
}


def make_word(alphabet, rng, lo=3, hi=7):
    length = int(rng.integers(lo, hi))
    return "".join(rng.choice(list(alphabet), size=length))


def make_text(alphabet, rng, n_words=None):
    n = n_words or int(rng.integers(4, 9))
    return " ".join(make_word(alphabet, rng) for _ in range(n))


def make_corpus(langs, n_per_lang, seed=0):
    rng = np.random.default_rng(seed)
    data = []
    for lang in langs:
        for _ in range(n_per_lang):
            data.append(LabeledText(text=make_text(ALPHABETS[lang], rng),
                                    label=lang))
    return data


def small_config(**overrides) -> LangIdConfig:
    params = dict(buckets=2000, dim=16, epochs=8, min_word_count=1,
                  lr0=0.1, seed=7)
    params.update(overrides)
    return LangIdConfig(**params)


@pytest.fixture(scope="session")
def two_lang_model():
    """Tiny deterministic model over the 'aa' and 'bb' synthetic languages."""
    data = make_corpus(["aa", "bb"], 300, seed=11)
    return train(data, small_config())


@pytest.fixture(scope="session")
def three_lang_model():
    data = make_corpus(["aa", "bb", "cc"], 300, seed=13)
    return train(data, small_config())
