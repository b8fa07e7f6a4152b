"""Turn raw stories into token-id sequences.

Preprocessing is deliberately minimal: lowercase, keep maximal runs of
letter characters (digits and punctuation act as separators, so
"2nd-rate" yields "nd", "rate"), drop short tokens and stoplisted
words. No stemming, ever — surface forms are kept verbatim.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import DocumentSet
from .errors import DegenerateCorpusError, OovTokenError, RulesMismatchError
from .fingerprint import fingerprint_obj

# Maximal runs of Unicode letters: \w without digits or underscore.
_LETTER_RUN = re.compile(r"[^\W\d_]+", re.UNICODE)

DEFAULT_STOPLIST_RESOURCE = "stoplist_en.txt"


def load_stoplist(path=None) -> frozenset[str]:
    """Read a newline-separated stoplist ('#' comments), lowercased."""
    if path is None:
        text = resources.files("storymine.data").joinpath(DEFAULT_STOPLIST_RESOURCE).read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in text.splitlines():
        word = line.split("#", 1)[0].strip().lower()
        if word:
            words.add(word)
    return frozenset(words)


@dataclass(frozen=True)
class PrepRules:
    """Preprocessing knobs; the fingerprint pins them in downstream artifacts."""

    lowercase: bool = True
    min_token_len: int = 2
    stoplist: frozenset[str] = field(default_factory=load_stoplist)
    stem: bool = False

    def __post_init__(self):
        if self.stem:
            raise ValueError("stemming is not supported; stem must stay False")
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")
        bad = [w for w in self.stoplist if w != w.lower()]
        if bad:
            raise ValueError(f"stoplist entries must be lowercase, got e.g. {sorted(bad)[:3]}")
        object.__setattr__(self, "stoplist", frozenset(self.stoplist))

    def fingerprint(self) -> str:
        return fingerprint_obj(
            {
                "lowercase": self.lowercase,
                "min_token_len": self.min_token_len,
                "stoplist": sorted(self.stoplist),
                "stem": self.stem,
                "token_pattern": "letter-runs",
            }
        )


def tokenize(text: str, rules: PrepRules) -> list[str]:
    """Lowercase letter-run tokens of ``text``, stoplist removed, order kept."""
    if rules.lowercase:
        text = text.lower()
    return [
        tok
        for tok in _LETTER_RUN.findall(text)
        if len(tok) >= rules.min_token_len and tok not in rules.stoplist
    ]


@dataclass(frozen=True)
class Vocabulary:
    """Lexicographically ordered word list with its inverse index."""

    words: tuple[str, ...]
    rules_fingerprint: str

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        if list(self.words) != sorted(set(self.words)):
            raise ValueError("vocabulary words must be unique and sorted ascending")
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.words)})

    @property
    def index(self) -> dict[str, int]:
        return self._index  # type: ignore[attr-defined]

    @property
    def size(self) -> int:
        return len(self.words)

    def fingerprint(self) -> str:
        return fingerprint_obj({"words": list(self.words), "rules": self.rules_fingerprint})


@dataclass(frozen=True)
class EncodedCorpus:
    """Token-id sequences, one per document, under a closed vocabulary."""

    docs: tuple[np.ndarray, ...]
    doc_ids: tuple[str, ...]
    vocab_size: int
    vocab_fingerprint: str

    def __post_init__(self):
        object.__setattr__(self, "docs", tuple(np.asarray(d, dtype=np.int32) for d in self.docs))
        object.__setattr__(self, "doc_ids", tuple(self.doc_ids))
        if len(self.docs) != len(self.doc_ids):
            raise ValueError("docs and doc_ids must be parallel")
        for seq in self.docs:
            if seq.size and (seq.min() < 0 or seq.max() >= self.vocab_size):
                raise ValueError("token id out of vocabulary range")

    @property
    def n_docs(self) -> int:
        return len(self.docs)

    @property
    def total_tokens(self) -> int:
        return int(sum(len(d) for d in self.docs))

    @property
    def doc_lengths(self) -> np.ndarray:
        return np.array([len(d) for d in self.docs], dtype=np.int64)

    def fingerprint(self) -> str:
        return fingerprint_obj(
            {
                "doc_ids": list(self.doc_ids),
                "docs": [seq.tolist() for seq in self.docs],
                "vocab": self.vocab_fingerprint,
            }
        )

    def term_counts(self) -> np.ndarray:
        """Document-term count matrix (n_docs x vocab_size)."""
        dtm = np.zeros((self.n_docs, self.vocab_size), dtype=np.int64)
        for d, seq in enumerate(self.docs):
            np.add.at(dtm[d], seq, 1)
        return dtm


def build_vocabulary(ds: DocumentSet, rules: PrepRules) -> Vocabulary:
    """Union of all tokens over all documents, sorted ascending."""
    seen: set[str] = set()
    for doc in ds.documents:
        seen.update(tokenize(doc.text, rules))
    if not seen:
        raise DegenerateCorpusError("every document tokenizes to nothing under these rules")
    return Vocabulary(words=tuple(sorted(seen)), rules_fingerprint=rules.fingerprint())


def encode_corpus(ds: DocumentSet, vocab: Vocabulary, rules: PrepRules) -> EncodedCorpus:
    """Map every document to its token-id sequence (closed vocabulary)."""
    if vocab.rules_fingerprint != rules.fingerprint():
        raise RulesMismatchError("vocabulary was built under different preprocessing rules")
    index = vocab.index
    docs = []
    for doc in ds.documents:
        ids = []
        for tok in tokenize(doc.text, rules):
            if tok not in index:
                raise OovTokenError(f"token {tok!r} in document {doc.id!r} is not in the vocabulary")
            ids.append(index[tok])
        docs.append(np.asarray(ids, dtype=np.int32))
    return EncodedCorpus(
        docs=tuple(docs),
        doc_ids=tuple(ds.ids),
        vocab_size=vocab.size,
        vocab_fingerprint=vocab.fingerprint(),
    )
