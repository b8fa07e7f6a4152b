"""Synthetic corpora with known structure, for tests and experiments."""

from __future__ import annotations

import itertools

import numpy as np

from .corpus import Document, DocumentSet
from .textprep import EncodedCorpus, PrepRules, Vocabulary, build_vocabulary, encode_corpus


def planted_corpus(
    n_topics: int = 5,
    words_per_topic: int = 10,
    n_docs: int = 500,
    doc_len: int = 50,
    doc_alpha: float = 0.2,
    seed: int = 0,
) -> tuple[EncodedCorpus, list[set[int]]]:
    """Corpus drawn from topics with disjoint vocabularies.

    Topic t owns word ids [t*w, (t+1)*w); each document mixes topics via
    a sparse Dirichlet so recovery is well-posed. Returns the encoded
    corpus and the planted word-id set per topic.
    """
    rng = np.random.default_rng(seed)
    m = n_topics * words_per_topic
    docs = []
    for _ in range(n_docs):
        theta = rng.dirichlet(np.full(n_topics, doc_alpha))
        zs = rng.choice(n_topics, size=doc_len, p=theta)
        words = zs * words_per_topic + rng.integers(0, words_per_topic, size=doc_len)
        docs.append(words.astype(np.int32))
    vocab_words = [f"w{idx:04d}" for idx in range(m)]
    vocab = Vocabulary(words=tuple(vocab_words), rules_fingerprint="synthetic")
    ec = EncodedCorpus(
        docs=tuple(docs),
        doc_ids=tuple(f"d{i:05d}" for i in range(n_docs)),
        vocab_size=m,
        vocab_fingerprint=vocab.fingerprint(),
    )
    planted = [set(range(t * words_per_topic, (t + 1) * words_per_topic)) for t in range(n_topics)]
    return ec, planted


def best_permutation_mass(phi: np.ndarray, planted: list[set[int]]) -> list[float]:
    """Per-topic phi mass on its planted words, under the best topic matching."""
    k = phi.shape[0]
    if k != len(planted):
        raise ValueError("phi rows must match the planted topic count")
    mass = np.array([[phi[t, sorted(p)].sum() for p in planted] for t in range(k)])
    best, best_masses = -1.0, None
    for perm in itertools.permutations(range(k)):
        masses = [mass[perm[j], j] for j in range(k)]
        total = sum(masses)
        if total > best:
            best, best_masses = total, masses
    return [float(x) for x in best_masses]


def random_story_set(n_docs: int = 50, seed: int = 0, tag: str = "workplace") -> DocumentSet:
    """Small synthetic story corpus with natural-language-ish texts."""
    rng = np.random.default_rng(seed)
    themes = [
        "boss meeting office promotion salary manager team project".split(),
        "customer shop counter till shift uniform manager tip".split(),
        "train bus street walking comment whistle stranger commute".split(),
        "interview job role experience question panel qualified".split(),
    ]
    docs = []
    for i in range(n_docs):
        words = themes[int(rng.integers(0, len(themes)))]
        length = int(rng.integers(15, 40))
        text = " ".join(str(words[j]) for j in rng.integers(0, len(words), size=length))
        docs.append(Document(id=f"s{i:04d}", text=text.capitalize() + ".", tags=frozenset({tag})))
    return DocumentSet(tuple(docs))


def encode_story_set(ds: DocumentSet, rules: PrepRules | None = None):
    rules = rules or PrepRules()
    vocab = build_vocabulary(ds, rules)
    return vocab, encode_corpus(ds, vocab, rules)
