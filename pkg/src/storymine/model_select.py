"""Choose the topic count by held-out log-likelihood over a K grid.

The corpus is split by document into train/test once; each grid point
trains its own model (seed = base seed XOR k) and scores the test
documents by fold-in: test-side topic assignments are Gibbs-sampled
with the trained topic-word rows frozen, test thetas are estimated
from post-burn counts, and the held-out score is

    total = sum over test tokens of log( theta_d . phi[:, w] ).

The grid argmax wins; ties go to the smallest k.
"""

from __future__ import annotations

import concurrent.futures
import io
from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyCorpusError, FingerprintMismatchError, SweepError
from .gibbs import Hyperparams, TopicModel, _HAVE_NUMBA, corpus_log_prob, njit, train
from .textprep import EncodedCorpus

_SEED_MASK = 2**64 - 1


@dataclass(frozen=True)
class SplitSpec:
    """Document-level train/test split parameters."""

    train_fraction: float = 0.75
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class FoldInSpec:
    """Fold-in evaluation parameters for held-out scoring."""

    sweeps: int = 200
    burn: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1 or not 0 <= self.burn < self.sweeps:
            raise ValueError("need sweeps >= 1 and 0 <= burn < sweeps")


def _subset(ec: EncodedCorpus, idx: np.ndarray) -> EncodedCorpus:
    return EncodedCorpus(
        docs=tuple(ec.docs[i] for i in idx),
        doc_ids=tuple(ec.doc_ids[i] for i in idx),
        vocab_size=ec.vocab_size,
        vocab_fingerprint=ec.vocab_fingerprint,
    )


def split_corpus(ec: EncodedCorpus, spec: SplitSpec) -> tuple[EncodedCorpus, EncodedCorpus]:
    """Disjoint document partition, deterministic for a fixed seed.

    Relative document order is preserved inside each side; the
    vocabulary (built on the full corpus) is shared.
    """
    if sum(1 for d in ec.docs if len(d)) < 2:
        raise EmptyCorpusError("need at least 2 nonempty documents to split")
    n = ec.n_docs
    n_train = int(n * spec.train_fraction)
    if not 1 <= n_train <= n - 1:
        raise EmptyCorpusError(f"fraction {spec.train_fraction} leaves an empty partition for {n} docs")
    perm = np.random.default_rng(spec.seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return _subset(ec, train_idx), _subset(ec, test_idx)


def _foldin_kernel(token_word, token_doc, z, phi, n_dk, alpha, k, uniforms):
    # Same per-token update as the training sweep, but phi stays frozen.
    probs = np.empty(k, dtype=np.float64)
    for i in range(token_word.shape[0]):
        w = token_word[i]
        d = token_doc[i]
        old = z[i]
        n_dk[d, old] -= 1
        total = 0.0
        for t in range(k):
            p = phi[t, w] * (n_dk[d, t] + alpha)
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
        n_dk[d, new] += 1


if _HAVE_NUMBA:
    _foldin_kernel = njit(cache=True, nogil=True)(_foldin_kernel)


def heldout_log_likelihood(
    model: TopicModel, test: EncodedCorpus, foldin: FoldInSpec = FoldInSpec()
) -> tuple[float, float]:
    """Held-out (total, per_word) log-likelihood of the test documents."""
    if model.vocab_fingerprint != test.vocab_fingerprint:
        raise FingerprintMismatchError("model and test corpus disagree on the vocabulary")
    if test.n_docs == 0 or test.total_tokens == 0:
        raise EmptyCorpusError("test split has no tokens to score")
    k = model.k
    alpha = model.hyper.alpha
    lengths = test.doc_lengths
    offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    n_tokens = int(offsets[-1])
    token_word = np.empty(n_tokens, dtype=np.int32)
    token_doc = np.empty(n_tokens, dtype=np.int32)
    for d, seq in enumerate(test.docs):
        token_word[offsets[d] : offsets[d + 1]] = seq
        token_doc[offsets[d] : offsets[d + 1]] = d

    rng = np.random.default_rng(foldin.seed)
    z = rng.integers(0, k, size=n_tokens, dtype=np.int32)
    n_dk = np.zeros((test.n_docs, k), dtype=np.int64)
    for d, t in zip(token_doc, z):
        n_dk[d, t] += 1

    acc = np.zeros_like(n_dk)
    for sweep in range(foldin.sweeps):
        uniforms = rng.random(n_tokens)
        _foldin_kernel(token_word, token_doc, z, model.phi, n_dk, alpha, k, uniforms)
        if sweep >= foldin.burn:
            acc += n_dk

    n_samples = foldin.sweeps - foldin.burn
    theta = (acc / n_samples + alpha) / (lengths[:, None] + k * alpha)
    total = corpus_log_prob(test, model.phi, theta)
    return total, total / n_tokens


@dataclass(frozen=True)
class SweepResult:
    """Held-out scores per grid point and the winning topic count."""

    grid: tuple[int, ...]
    total_loglik: tuple[float, ...]
    per_word_loglik: tuple[float, ...]
    seeds: tuple[int, ...]
    chosen_k: int

    def __post_init__(self):
        if not (len(self.grid) == len(self.total_loglik) == len(self.per_word_loglik) == len(self.seeds)):
            raise ValueError("grid and log-likelihood lists must be parallel")
        best = int(np.argmax(self.total_loglik))
        if self.chosen_k != self.grid[best]:
            raise ValueError("chosen_k must attain the maximum total log-likelihood (ties to smallest k)")


def derive_seed(base_seed: int, k: int) -> int:
    return (base_seed ^ k) & _SEED_MASK


def _run_grid_point(train_ec, test_ec, h_base, foldin_sweeps, foldin_burn, k):
    seed_k = derive_seed(h_base.seed, k)
    h_k = replace(h_base, k=k, seed=seed_k)
    model = train(train_ec, h_k)
    foldin = FoldInSpec(sweeps=foldin_sweeps, burn=foldin_burn, seed=(seed_k + 1) & _SEED_MASK)
    total, per_word = heldout_log_likelihood(model, test_ec, foldin)
    return {"k": k, "total": total, "per_word": per_word, "seed": seed_k}


def sweep_topic_counts(
    ec: EncodedCorpus,
    grid: list[int],
    spec: SplitSpec,
    h_base: Hyperparams,
    foldin_sweeps: int = 200,
    foldin_burn: int = 100,
    workers: int = 1,
) -> SweepResult:
    """Train and score one model per grid point; argmax picks chosen_k.

    Grid points are independent (per-k derived seeds), so parallel and
    serial execution produce the identical SweepResult. A failed point
    aborts the sweep; rows finished so far ride along on the error.
    """
    if not grid:
        raise ValueError("grid must be nonempty")
    if list(grid) != sorted(set(grid)):
        raise ValueError("grid must be strictly increasing")
    train_ec, test_ec = split_corpus(ec, spec)
    rows: list[dict] = []
    try:
        if workers > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_run_grid_point, train_ec, test_ec, h_base, foldin_sweeps, foldin_burn, k)
                    for k in grid
                ]
                for fut in futures:
                    rows.append(fut.result())
        else:
            for k in grid:
                rows.append(_run_grid_point(train_ec, test_ec, h_base, foldin_sweeps, foldin_burn, k))
    except Exception as exc:
        raise SweepError(f"grid point failed: {exc}", partial=rows) from exc
    totals = [r["total"] for r in rows]
    return SweepResult(
        grid=tuple(grid),
        total_loglik=tuple(totals),
        per_word_loglik=tuple(r["per_word"] for r in rows),
        seeds=tuple(r["seed"] for r in rows),
        chosen_k=grid[int(np.argmax(totals))],
    )


def sweep_to_csv(result: SweepResult) -> str:
    """Plot-ready table, one row per grid point, chosen_k in the footer."""
    out = io.StringIO()
    out.write("k,total_loglik,per_word_loglik,seed\n")
    for k, total, pw, seed in zip(result.grid, result.total_loglik, result.per_word_loglik, result.seeds):
        out.write(f"{k},{total!r},{pw!r},{seed}\n")
    out.write(f"# chosen_k = {result.chosen_k}\n")
    return out.getvalue()


def plot_sweep(result: SweepResult, path) -> None:
    """Line plot of held-out log-likelihood against the topic count."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(result.grid, result.total_loglik, marker="o")
    ax.axvline(result.chosen_k, color="grey", linestyle="--", linewidth=1)
    ax.set_xlabel("number of topics")
    ax.set_ylabel("held-out log-likelihood")
    ax.set_title(f"chosen k = {result.chosen_k}")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)
