"""Topic weights, rankings, and the report tables coders review.

A topic's weight is its summed document proportions normalized by the
total over all topics:

    weight[t] = sum_d theta[d][t] / sum_t' sum_d theta[d][t']

Since theta rows sum to 1 the denominator is just the document count.
Reports rank topics by descending weight and list the top words and
top stories per topic, with deterministic tie-breaking (ascending
word / doc id / topic index) so repeated exports are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import DocumentSet
from .errors import FingerprintMismatchError
from .gibbs import TopicModel
from .textprep import Vocabulary

REPORT_FORMAT_VERSION = 1


def topic_weights(theta: np.ndarray) -> np.ndarray:
    """Normalized per-topic weight vector; sums to 1 within 1e-12."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size == 0:
        raise ValueError("theta is empty")
    if not np.allclose(theta.sum(axis=1), 1.0, rtol=0, atol=1e-9):
        raise ValueError("theta rows must sum to 1")
    summed = theta.sum(axis=0)
    return summed / summed.sum()


def top_words(phi_row: np.ndarray, vocab: Vocabulary, count: int = 10) -> list[tuple[str, float]]:
    """Highest-probability words, descending; ties break on the word."""
    if count < 1:
        raise ValueError("count must be >= 1")
    pairs = sorted(zip(vocab.words, phi_row), key=lambda wp: (-wp[1], wp[0]))
    return [(w, float(p)) for w, p in pairs[:count]]


def top_documents(theta_col: np.ndarray, doc_ids, count: int = 20) -> list[tuple[str, float]]:
    """Highest-proportion documents, descending; ties break on the id."""
    if count < 1:
        raise ValueError("count must be >= 1")
    pairs = sorted(zip(doc_ids, theta_col), key=lambda dp: (-dp[1], dp[0]))
    return [(d, float(p)) for d, p in pairs[:count]]


@dataclass(frozen=True)
class TopicSummary:
    topic_index: int
    rank: int
    weight: float
    top_words: tuple[tuple[str, float], ...]
    top_docs: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class TopicReport:
    """Per-topic summaries in rank order plus the fingerprints they came from."""

    summaries: tuple[TopicSummary, ...]
    model_fingerprint: str
    vocab_fingerprint: str
    corpus_fingerprint: str
    words_per_topic: int
    docs_per_topic: int

    def __post_init__(self):
        ranks = [s.rank for s in self.summaries]
        if ranks != list(range(1, len(self.summaries) + 1)):
            raise ValueError("summaries must be ordered rank 1..k")
        weights = [s.weight for s in self.summaries]
        if any(weights[i] < weights[i + 1] for i in range(len(weights) - 1)):
            raise ValueError("weights must be non-increasing in rank")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1 within 1e-9")

    @property
    def k(self) -> int:
        return len(self.summaries)

    def by_topic_index(self, topic_index: int) -> TopicSummary:
        for s in self.summaries:
            if s.topic_index == topic_index:
                return s
        raise KeyError(f"no topic with index {topic_index}")


def build_report(
    model: TopicModel, vocab: Vocabulary, doc_ids, words: int = 10, docs: int = 20
) -> TopicReport:
    """Rank topics by weight and collect their top words and stories."""
    if vocab.fingerprint() != model.vocab_fingerprint:
        raise FingerprintMismatchError("vocabulary does not match the model's vocab fingerprint")
    doc_ids = list(doc_ids)
    if len(doc_ids) != model.theta.shape[0]:
        raise ValueError("doc_ids length must match theta rows")
    weights = topic_weights(model.theta)
    order = sorted(range(model.k), key=lambda t: (-weights[t], t))
    summaries = []
    for rank, t in enumerate(order, start=1):
        summaries.append(
            TopicSummary(
                topic_index=t,
                rank=rank,
                weight=float(weights[t]),
                top_words=tuple(top_words(model.phi[t], vocab, words)),
                top_docs=tuple(top_documents(model.theta[:, t], doc_ids, docs)),
            )
        )
    return TopicReport(
        summaries=tuple(summaries),
        model_fingerprint=model.fingerprint(),
        vocab_fingerprint=model.vocab_fingerprint,
        corpus_fingerprint=model.corpus_fingerprint,
        words_per_topic=words,
        docs_per_topic=docs,
    )


def report_to_json(report: TopicReport) -> str:
    obj = {
        "format_version": REPORT_FORMAT_VERSION,
        "model_fingerprint": report.model_fingerprint,
        "vocab_fingerprint": report.vocab_fingerprint,
        "corpus_fingerprint": report.corpus_fingerprint,
        "words_per_topic": report.words_per_topic,
        "docs_per_topic": report.docs_per_topic,
        "summaries": [
            {
                "topic_index": s.topic_index,
                "rank": s.rank,
                "weight": s.weight,
                "top_words": [[w, p] for w, p in s.top_words],
                "top_docs": [[d, p] for d, p in s.top_docs],
            }
            for s in report.summaries
        ],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def report_from_json(text: str) -> TopicReport:
    obj = json.loads(text)
    if obj.get("format_version") != REPORT_FORMAT_VERSION:
        raise ValueError(f"unsupported report format_version {obj.get('format_version')!r}")
    return TopicReport(
        summaries=tuple(
            TopicSummary(
                topic_index=s["topic_index"],
                rank=s["rank"],
                weight=s["weight"],
                top_words=tuple((w, p) for w, p in s["top_words"]),
                top_docs=tuple((d, p) for d, p in s["top_docs"]),
            )
            for s in obj["summaries"]
        ),
        model_fingerprint=obj["model_fingerprint"],
        vocab_fingerprint=obj["vocab_fingerprint"],
        corpus_fingerprint=obj["corpus_fingerprint"],
        words_per_topic=obj["words_per_topic"],
        docs_per_topic=obj["docs_per_topic"],
    )


def topic_table_markdown(report: TopicReport, labels: dict[int, str] | None = None) -> str:
    """Ranked topic table: rank, label (human-assigned), weight, top words."""
    labels = labels or {}
    lines = [
        "| Rank | Label | Weight | Top Words |",
        "| --- | --- | --- | --- |",
    ]
    for s in report.summaries:
        words = " ".join(w for w, _ in s.top_words)
        lines.append(f"| {s.rank} | {labels.get(s.topic_index, '')} | {s.weight:.4f} | {words} |")
    return "\n".join(lines) + "\n"


def topic_table_csv(report: TopicReport, labels: dict[int, str] | None = None) -> str:
    labels = labels or {}
    lines = ["rank,label,weight,top_words"]
    for s in report.summaries:
        words = " ".join(w for w, _ in s.top_words)
        label = labels.get(s.topic_index, "").replace(",", ";")
        lines.append(f"{s.rank},{label},{s.weight:.4f},{words}")
    return "\n".join(lines) + "\n"


def top_stories_markdown(report: TopicReport, ds: DocumentSet) -> str:
    """Per-topic top-story listing for coder review; text kept verbatim."""
    by_id = {d.id: d for d in ds.documents}
    chunks = []
    for s in report.summaries:
        chunks.append(f"## Rank {s.rank} (topic {s.topic_index}, weight {s.weight:.4f})\n")
        chunks.append("Top words: " + " ".join(w for w, _ in s.top_words) + "\n")
        for doc_id, p in s.top_docs:
            doc = by_id.get(doc_id)
            text = doc.text if doc else "(story text unavailable)"
            quoted = "\n".join("> " + line for line in text.splitlines() or [""])
            chunks.append(f"- **{doc_id}** (p = {p:.4f})\n\n{quoted}\n")
    return "\n".join(chunks)
