"""Collapsed Gibbs sampling for latent Dirichlet allocation.

The sampler integrates out the topic-word and document-topic
distributions and resamples one token assignment at a time from

    P(z_i = t | z_-i, w) ∝ (n_wt + β) / (n_t + mβ) · (n_dt + α)

where all counts exclude token i. Point estimates of the two output
matrices are posterior means over the final state:

    phi[t][w]   = (n_wt + β) / (n_t + mβ)      rows sum to 1
    theta[d][t] = (n_dt + α) / (n_d + tα)      rows sum to 1

Everything is driven by one seeded RNG stream in document order then
position order, with cumulative-sum inverse-CDF sampling and
lower-index tie-breaking, so a (corpus, hyperparams) pair fully
determines the output bit pattern. The inner loops are numba-compiled
when numba is available; the pure-Python fallback is numerically
identical, just slow.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fingerprint import fingerprint_obj
from .textprep import EncodedCorpus

logger = logging.getLogger(__name__)

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        return deco(args[0]) if args and callable(args[0]) else deco


MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    """Sampler constants. alpha is symmetric per-topic: alpha_sum / k."""

    k: int
    alpha_sum: float = 5.0
    beta: float = 0.01
    iterations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.alpha_sum <= 0 or self.beta <= 0:
            raise ValueError("alpha_sum and beta must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def alpha(self) -> float:
        return self.alpha_sum / self.k

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "alpha_sum": self.alpha_sum,
            "beta": self.beta,
            "iterations": self.iterations,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Hyperparams":
        return cls(**obj)


@dataclass
class SamplerState:
    """Mutable Gibbs state: flat token arrays plus the count matrices.

    Tokens are stored flat in document order; ``doc_offsets[d]`` slices
    document d. Counts are always recomputable from ``z``.
    """

    hyper: Hyperparams
    token_word: np.ndarray  # (N,) int32
    token_doc: np.ndarray  # (N,) int32
    doc_offsets: np.ndarray  # (n_docs + 1,) int64
    doc_lengths: np.ndarray  # (n_docs,) int64
    vocab_size: int
    z: np.ndarray  # (N,) int32
    n_wk: np.ndarray  # (m, k) int64
    n_dk: np.ndarray  # (n_docs, k) int64
    n_k: np.ndarray  # (k,) int64
    rng: np.random.Generator
    sweep_count: int = 0
    vocab_fingerprint: str = ""
    corpus_fingerprint: str = ""

    @property
    def n_docs(self) -> int:
        return len(self.doc_lengths)

    @property
    def total_tokens(self) -> int:
        return len(self.token_word)

    def assignments_for_doc(self, d: int) -> np.ndarray:
        return self.z[self.doc_offsets[d] : self.doc_offsets[d + 1]]


def _flatten(ec: EncodedCorpus):
    lengths = ec.doc_lengths
    offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    n = int(offsets[-1])
    token_word = np.empty(n, dtype=np.int32)
    token_doc = np.empty(n, dtype=np.int32)
    for d, seq in enumerate(ec.docs):
        token_word[offsets[d] : offsets[d + 1]] = seq
        token_doc[offsets[d] : offsets[d + 1]] = d
    return token_word, token_doc, offsets, lengths


def recount(state: SamplerState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rebuild (n_wk, n_dk, n_k) from scratch out of z; the consistency oracle."""
    k = state.hyper.k
    n_wk = np.zeros((state.vocab_size, k), dtype=np.int64)
    n_dk = np.zeros((state.n_docs, k), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    for w, d, t in zip(state.token_word, state.token_doc, state.z):
        n_wk[w, t] += 1
        n_dk[d, t] += 1
        n_k[t] += 1
    return n_wk, n_dk, n_k


def init_state(ec: EncodedCorpus, h: Hyperparams) -> SamplerState:
    """Assign every token a uniform random topic and build the counts."""
    if ec.vocab_size < 1:
        raise ValueError("encoded corpus has an empty vocabulary")
    token_word, token_doc, offsets, lengths = _flatten(ec)
    if h.k > len(token_word):
        warnings.warn(f"k={h.k} exceeds the corpus token count {len(token_word)}", stacklevel=2)
    rng = np.random.default_rng(h.seed)
    z = rng.integers(0, h.k, size=len(token_word), dtype=np.int32)
    state = SamplerState(
        hyper=h,
        token_word=token_word,
        token_doc=token_doc,
        doc_offsets=offsets,
        doc_lengths=lengths,
        vocab_size=ec.vocab_size,
        z=z,
        n_wk=np.zeros((ec.vocab_size, h.k), dtype=np.int64),
        n_dk=np.zeros((len(lengths), h.k), dtype=np.int64),
        n_k=np.zeros(h.k, dtype=np.int64),
        rng=rng,
        vocab_fingerprint=ec.vocab_fingerprint,
        corpus_fingerprint=ec.fingerprint(),
    )
    state.n_wk, state.n_dk, state.n_k = recount(state)
    return state


def _sweep_kernel(token_word, token_doc, z, n_wk, n_dk, n_k, alpha, beta, m, k, uniforms):
    # One full sweep; uniforms[i] drives the draw for token i. Selection is
    # cumulative-sum inverse CDF with boundary ties resolved to the lower index.
    beta_sum = m * beta
    probs = np.empty(k, dtype=np.float64)
    for i in range(token_word.shape[0]):
        w = token_word[i]
        d = token_doc[i]
        old = z[i]
        n_wk[w, old] -= 1
        n_dk[d, old] -= 1
        n_k[old] -= 1
        total = 0.0
        for t in range(k):
            p = (n_wk[w, t] + beta) / (n_k[t] + beta_sum) * (n_dk[d, t] + alpha)
            probs[t] = p
            total += p
        target = uniforms[i] * total
        acc = 0.0
        new = k - 1
        for t in range(k):
            acc += probs[t]
            if target <= acc:
                new = t
                break
        z[i] = new
        n_wk[w, new] += 1
        n_dk[d, new] += 1
        n_k[new] += 1


_sweep_kernel_py = _sweep_kernel
if _HAVE_NUMBA:
    _sweep_kernel = njit(cache=True, nogil=True)(_sweep_kernel)


def gibbs_sweep(state: SamplerState, _kernel=None) -> SamplerState:
    """Resample every token once, in document order then position order."""
    uniforms = state.rng.random(state.total_tokens)
    kernel = _kernel or _sweep_kernel
    kernel(
        state.token_word,
        state.token_doc,
        state.z,
        state.n_wk,
        state.n_dk,
        state.n_k,
        state.hyper.alpha,
        state.hyper.beta,
        state.vocab_size,
        state.hyper.k,
        uniforms,
    )
    state.sweep_count += 1
    return state


def conditional_distribution(state: SamplerState, d: int, i: int) -> np.ndarray:
    """Exact collapsed conditional over topics for token i of document d.

    Counts exclude the token itself; the returned vector is normalized.
    """
    if not 0 <= d < state.n_docs:
        raise IndexError(f"document index {d} out of range")
    if not 0 <= i < state.doc_lengths[d]:
        raise IndexError(f"position {i} out of range for document {d}")
    pos = int(state.doc_offsets[d]) + i
    w = int(state.token_word[pos])
    t_old = int(state.z[pos])
    h = state.hyper
    n_wk = state.n_wk[w].astype(np.float64).copy()
    n_dk = state.n_dk[d].astype(np.float64).copy()
    n_k = state.n_k.astype(np.float64).copy()
    n_wk[t_old] -= 1
    n_dk[t_old] -= 1
    n_k[t_old] -= 1
    probs = (n_wk + h.beta) / (n_k + state.vocab_size * h.beta) * (n_dk + h.alpha)
    return probs / probs.sum()


def estimate_distributions(state: SamplerState, hyper: Hyperparams | None = None):
    """Posterior-mean (phi, theta) from the current counts.

    Empty documents get the smoothed-uniform theta row 1/k.
    """
    h = hyper or state.hyper
    phi = (state.n_wk.T + h.beta) / (state.n_k[:, None] + state.vocab_size * h.beta)
    theta = (state.n_dk + h.alpha) / (state.doc_lengths[:, None] + h.k * h.alpha)
    return phi, theta


@dataclass(frozen=True)
class TopicModel:
    """Trained model: P(word|topic) rows and P(topic|doc) rows."""

    phi: np.ndarray  # (k, m)
    theta: np.ndarray  # (n_docs, k)
    hyper: Hyperparams
    vocab_fingerprint: str
    corpus_fingerprint: str

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=np.float64))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.float64))
        if self.phi.shape[0] != self.hyper.k or self.theta.shape[1] != self.hyper.k:
            raise ValueError("matrix shapes disagree with k")
        for name, mat in (("phi", self.phi), ("theta", self.theta)):
            if not np.allclose(mat.sum(axis=1), 1.0, rtol=0, atol=1e-9):
                raise ValueError(f"{name} rows must sum to 1 within 1e-9")
            if mat.min() <= 0.0 or mat.max() > 1.0:
                raise ValueError(f"{name} entries must lie in (0, 1]")

    @property
    def k(self) -> int:
        return self.hyper.k

    def fingerprint(self) -> str:
        return fingerprint_obj(
            {
                "hyper": self.hyper.to_dict(),
                "vocab": self.vocab_fingerprint,
                "corpus": self.corpus_fingerprint,
                "phi_sha": fingerprint_obj(self.phi.tolist()),
                "theta_sha": fingerprint_obj(self.theta.tolist()),
            }
        )


def train(ec: EncodedCorpus, h: Hyperparams, return_state: bool = False, log_every: int = 0):
    """Run init plus h.iterations sweeps and estimate the output matrices."""
    state = init_state(ec, h)
    for sweep in range(h.iterations):
        gibbs_sweep(state)
        if log_every and (sweep + 1) % log_every == 0:
            logger.info("sweep %d/%d", sweep + 1, h.iterations)
    phi, theta = estimate_distributions(state)
    model = TopicModel(
        phi=phi,
        theta=theta,
        hyper=h,
        vocab_fingerprint=state.vocab_fingerprint,
        corpus_fingerprint=state.corpus_fingerprint,
    )
    return (model, state) if return_state else model


def corpus_log_prob(ec: EncodedCorpus, phi: np.ndarray, theta: np.ndarray) -> float:
    """Point-estimate corpus log-probability: sum of log(theta_d . phi[:, w])."""
    total = 0.0
    for d, seq in enumerate(ec.docs):
        if len(seq):
            total += float(np.log(theta[d] @ phi[:, seq]).sum())
    return total


def model_to_json(model: TopicModel, z: list[np.ndarray] | None = None) -> str:
    """Versioned JSON artifact; floats keep full double precision."""
    obj = {
        "format_version": MODEL_FORMAT_VERSION,
        "hyper": model.hyper.to_dict(),
        "vocab_fingerprint": model.vocab_fingerprint,
        "corpus_fingerprint": model.corpus_fingerprint,
        "phi": model.phi.tolist(),
        "theta": model.theta.tolist(),
    }
    if z is not None:
        obj["z"] = [np.asarray(seq).tolist() for seq in z]
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def model_from_json(text: str) -> TopicModel:
    obj = json.loads(text)
    if obj.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {obj.get('format_version')!r}")
    return TopicModel(
        phi=np.asarray(obj["phi"], dtype=np.float64),
        theta=np.asarray(obj["theta"], dtype=np.float64),
        hyper=Hyperparams.from_dict(obj["hyper"]),
        vocab_fingerprint=obj["vocab_fingerprint"],
        corpus_fingerprint=obj["corpus_fingerprint"],
    )


def save_model(model: TopicModel, path, z=None) -> None:
    Path(path).write_text(model_to_json(model, z), encoding="utf-8")


def load_model(path) -> TopicModel:
    return model_from_json(Path(path).read_text(encoding="utf-8"))
