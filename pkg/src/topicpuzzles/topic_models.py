"""Topic dictionary induction from a document-term matrix.

Three interchangeable models produce an N x K dictionary of topic columns:

* ``lsa_fit``       -- truncated SVD via a seeded randomized range finder
* ``lda_fit``       -- latent Dirichlet allocation by collapsed Gibbs sampling
* ``dict_learn_fit``-- online sparse dictionary learning with an l1 or
                       group-l2 coefficient penalty and recency weighting

``extract_top_k`` then truncates each topic to its k most significant words.
"""

from __future__ import annotations

import json
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .corpus import RAW_COUNT, DocTermMatrix

MODEL_LSA = "lsa"
MODEL_LDA = "lda"
MODEL_DICTLEARN = "dictlearn"

# Desk-scale defaults; production-size corpora in the reference setting use
# many more topics.
DEFAULT_NUM_TOPICS = 400
DEFAULT_TOP_K = 4

L1 = "l1"
GROUP_L2 = "group-l2"


@dataclass
class TopicDictionary:
    """An N x K matrix of topic columns plus the metadata needed to
    reproduce and persist the fit."""

    weights: np.ndarray
    model: str
    meta: dict = field(default_factory=dict)
    vocab: list[str] | None = None
    singular_values: np.ndarray | None = None

    @property
    def n_words(self):
        return self.weights.shape[0]

    @property
    def n_topics(self):
        return self.weights.shape[1]

    def validate(self):
        """Check the per-model column invariants; raises ValueError."""
        w = self.weights
        norms = np.linalg.norm(w, axis=0)
        if np.any(norms == 0.0):
            raise ValueError("topic dictionary contains an all-zero column")
        if self.model == MODEL_LDA:
            sums = w.sum(axis=0)
            if np.any(w < 0) or np.any(np.abs(sums - 1.0) > 1e-9):
                raise ValueError("lda columns must be probability vectors")
        elif self.model == MODEL_DICTLEARN:
            if np.any(norms > 1.0 + 1e-12):
                raise ValueError("dictlearn columns must have norm <= 1")
        return self


@dataclass(frozen=True)
class LdaConfig:
    n_topics: int
    alpha: float = 0.1
    beta: float = 0.01
    iterations: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.n_topics < 1:
            raise ValueError("n_topics must be >= 1")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass(frozen=True)
class DictLearnConfig:
    n_topics: int
    kappa: float = 0.1
    rho: float = 0.0
    regularizer: str = L1
    groups: tuple[tuple[int, ...], ...] | None = None
    n_groups: int = 2
    epochs: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n_topics < 1:
            raise ValueError("n_topics must be >= 1")
        if self.kappa <= 0:
            raise ValueError("kappa must be > 0")
        if self.rho < 0:
            raise ValueError("rho must be >= 0")
        if self.regularizer not in (L1, GROUP_L2):
            raise ValueError(f"unknown regularizer {self.regularizer!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def resolved_groups(self):
        if self.regularizer == L1:
            return None
        if self.groups is not None:
            return self.groups
        return contiguous_groups(self.n_topics, self.n_groups)


def contiguous_groups(n, n_groups):
    """Partition indices 0..n-1 into n_groups contiguous near-equal blocks."""
    if not 1 <= n_groups <= n:
        raise ValueError(f"n_groups must be in [1, {n}], got {n_groups}")
    bounds = np.linspace(0, n, n_groups + 1).astype(int)
    return tuple(
        tuple(range(bounds[g], bounds[g + 1])) for g in range(n_groups)
    )


@dataclass
class SparseCode:
    """Coefficients of one document against a dictionary, with the achieved
    value of the penalized least-squares objective."""

    coeffs: np.ndarray
    objective: float


def _as_matrix(X):
    if isinstance(X, DocTermMatrix):
        return X.matrix, list(X.vocab.words)
    return X, None


# ---------------------------------------------------------------------------
# LSA
# ---------------------------------------------------------------------------


def lsa_fit(X, n_topics, seed=0, n_power_iters=16, oversampling=8):
    """Top-K left singular vectors of X by seeded randomized subspace
    iteration, sign-normalized so each column's largest-magnitude entry
    is positive. Singular values are attached in descending order.

    Raises ValueError when n_topics exceeds min(N, M) or the effective
    numerical rank of X.
    """
    A, vocab = _as_matrix(X)
    n, m = A.shape
    if not 1 <= n_topics <= min(n, m):
        raise ValueError(
            f"n_topics must be in [1, {min(n, m)}] for a {n}x{m} matrix, "
            f"got {n_topics}"
        )
    rng = np.random.default_rng(seed)
    width = min(n_topics + oversampling, m)
    omega = rng.standard_normal((m, width))
    q, _ = np.linalg.qr(A @ omega)
    for _ in range(n_power_iters):
        w, _ = np.linalg.qr(A.T @ q)
        q, _ = np.linalg.qr(A @ w)
    b = (A.T @ q).T
    ub, s, _ = np.linalg.svd(b, full_matrices=False)
    tol = s[0] * max(n, m) * np.finfo(np.float64).eps if s.size else 0.0
    effective_rank = int(np.sum(s > tol))
    if effective_rank < n_topics:
        raise ValueError(
            f"requested {n_topics} topics but the matrix has effective "
            f"rank {effective_rank}"
        )
    u = q @ ub[:, :n_topics]
    for j in range(n_topics):
        peak = np.argmax(np.abs(u[:, j]))
        if u[peak, j] < 0:
            u[:, j] = -u[:, j]
    return TopicDictionary(
        weights=u,
        model=MODEL_LSA,
        meta={
            "n_topics": n_topics,
            "seed": seed,
            "n_power_iters": n_power_iters,
            "oversampling": oversampling,
        },
        vocab=vocab,
        singular_values=s[:n_topics].copy(),
    )


# ---------------------------------------------------------------------------
# LDA
# ---------------------------------------------------------------------------

LdaState = namedtuple("LdaState", "sweep word_topic topic_counts doc_topic")


def _token_stream(matrix):
    """Flatten a raw-count matrix into parallel word/doc index lists,
    column by column with rows ascending (deterministic)."""
    m = matrix.tocsc()
    m.sort_indices()
    words, docs = [], []
    indptr, indices, data = m.indptr, m.indices, m.data
    for j in range(m.shape[1]):
        for p in range(indptr[j], indptr[j + 1]):
            count = int(round(data[p]))
            words.extend([int(indices[p])] * count)
            docs.extend([j] * count)
    return words, docs


def lda_fit(X, config, sweep_hook=None):
    """Collapsed Gibbs sampling over token-topic assignments.

    Topics are the posterior-mean word distributions
    (count(word, topic) + beta) / (count(topic) + N*beta), averaged over
    the final 20% of sweeps. Deterministic for a fixed seed.

    ``sweep_hook(state)`` is called after every sweep with copies of the
    count tables (an LdaState), for diagnostics and invariant checks.
    """
    if not isinstance(X, DocTermMatrix):
        raise TypeError("lda_fit requires a DocTermMatrix")
    if X.weighting != RAW_COUNT:
        raise ValueError(
            f"lda_fit requires raw counts for token-level sampling, "
            f"got {X.weighting!r} weighting"
        )
    n, m = X.matrix.shape
    if m == 0 or n == 0:
        raise ValueError("empty document-term matrix")
    k = config.n_topics
    alpha, beta = config.alpha, config.beta
    nbeta = n * beta
    words, docs = _token_stream(X.matrix)
    n_tokens = len(words)
    rng = np.random.default_rng(config.seed)
    z = [int(t) for t in rng.integers(0, k, n_tokens)]

    n_wt = [[0] * k for _ in range(n)]
    n_dt = [[0] * k for _ in range(m)]
    n_t = [0] * k
    for idx in range(n_tokens):
        t = z[idx]
        n_wt[words[idx]][t] += 1
        n_dt[docs[idx]][t] += 1
        n_t[t] += 1

    n_avg = max(1, config.iterations // 5)
    avg_start = config.iterations - n_avg
    phi_acc = np.zeros((n, k))
    rand = rng.random
    p = [0.0] * k
    topics = range(k)
    for sweep in range(config.iterations):
        for idx in range(n_tokens):
            w = words[idx]
            d = docs[idx]
            t_old = z[idx]
            nw = n_wt[w]
            nd = n_dt[d]
            nw[t_old] -= 1
            nd[t_old] -= 1
            n_t[t_old] -= 1
            total = 0.0
            for t in topics:
                pt = (nw[t] + beta) * (nd[t] + alpha) / (n_t[t] + nbeta)
                p[t] = pt
                total += pt
            u = rand() * total
            acc = 0.0
            t_new = k - 1
            for t in topics:
                acc += p[t]
                if u < acc:
                    t_new = t
                    break
            z[idx] = t_new
            nw[t_new] += 1
            nd[t_new] += 1
            n_t[t_new] += 1
        if sweep_hook is not None:
            sweep_hook(
                LdaState(
                    sweep=sweep,
                    word_topic=np.array(n_wt, dtype=np.int64),
                    topic_counts=np.array(n_t, dtype=np.int64),
                    doc_topic=np.array(n_dt, dtype=np.int64),
                )
            )
        if sweep >= avg_start:
            counts = np.array(n_wt, dtype=np.float64)
            totals = np.array(n_t, dtype=np.float64)
            phi_acc += (counts + beta) / (totals + nbeta)

    weights = phi_acc / n_avg
    return TopicDictionary(
        weights=weights,
        model=MODEL_LDA,
        meta={
            "n_topics": k,
            "alpha": alpha,
            "beta": beta,
            "iterations": config.iterations,
            "seed": config.seed,
        },
        vocab=list(X.vocab.words),
    )


# ---------------------------------------------------------------------------
# Sparse coding and dictionary learning
# ---------------------------------------------------------------------------


def _penalty(alpha, kappa, regularizer, groups):
    if regularizer == L1:
        return kappa * float(np.sum(np.abs(alpha)))
    return kappa * sum(float(np.linalg.norm(alpha[list(g)])) for g in groups)


def _objective(alpha, gram, b, xx, kappa, regularizer, groups):
    quad = 0.5 * (xx - 2.0 * float(b @ alpha) + float(alpha @ gram @ alpha))
    return quad + _penalty(alpha, kappa, regularizer, groups)


def sparse_code(
    x,
    dictionary,
    kappa,
    regularizer=L1,
    groups=None,
    tol=1e-8,
    max_iter=1000,
):
    """Minimize 0.5*||x - D a||^2 + kappa*Omega(a).

    Coordinate descent for the l1 penalty, block coordinate descent with
    group soft-thresholding for group-l2. Starts from a = 0 and descends
    monotonically, so the achieved objective never exceeds 0.5*||x||^2.
    Iterates until the objective improves by less than ``tol``.
    """
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    d = dictionary.weights if isinstance(dictionary, TopicDictionary) else dictionary
    d = np.asarray(d, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).ravel()
    k = d.shape[1]
    if regularizer == GROUP_L2:
        if groups is None:
            groups = contiguous_groups(k, 2)
    elif regularizer != L1:
        raise ValueError(f"unknown regularizer {regularizer!r}")

    gram = d.T @ d
    b = d.T @ x
    xx = float(x @ x)
    alpha = np.zeros(k)
    prev = 0.5 * xx

    if regularizer == L1:
        diag = np.diag(gram)
        for _ in range(max_iter):
            for j in range(k):
                if diag[j] <= 1e-15:
                    continue
                r = b[j] - float(gram[j] @ alpha) + diag[j] * alpha[j]
                a = abs(r) - kappa
                alpha[j] = np.sign(r) * a / diag[j] if a > 0 else 0.0
            cur = _objective(alpha, gram, b, xx, kappa, regularizer, groups)
            if abs(prev - cur) < tol:
                prev = cur
                break
            prev = cur
    else:
        idx = [np.asarray(g, dtype=int) for g in groups]
        lips = []
        for g in idx:
            sub = gram[np.ix_(g, g)]
            lips.append(max(float(np.linalg.eigvalsh(sub)[-1]), 1e-15))
        for _ in range(max_iter):
            for g, lg in zip(idx, lips):
                grad = gram[g] @ alpha - b[g]
                y = alpha[g] - grad / lg
                nrm = float(np.linalg.norm(y))
                scale = max(0.0, 1.0 - kappa / (lg * nrm)) if nrm > 0 else 0.0
                alpha[g] = y * scale
            cur = _objective(alpha, gram, b, xx, kappa, regularizer, groups)
            if abs(prev - cur) < tol:
                prev = cur
                break
            prev = cur

    return SparseCode(coeffs=alpha, objective=float(prev))


def recency_weights(n_docs, rho):
    """Per-document weights (i/M)^rho for i = 1..M; all ones at rho = 0."""
    return ((np.arange(1, n_docs + 1)) / n_docs) ** rho


def dictionary_objective(X, dictionary, kappa, regularizer=L1, rho=0.0, groups=None):
    """Weighted empirical sparse-coding cost of a dictionary over a corpus:
    sum_i (i/M)^rho * l(x_i, D) / sum_j (j/M)^rho, with l computed fresh
    by ``sparse_code`` for every document."""
    A, _ = _as_matrix(X)
    m = A.shape[1]
    w = recency_weights(m, rho)
    total = 0.0
    for i in range(m):
        x = _dense_column(A, i)
        total += w[i] * sparse_code(x, dictionary, kappa, regularizer, groups).objective
    return total / float(np.sum(w))


def _dense_column(A, j):
    col = A[:, j]
    if hasattr(col, "toarray"):
        return col.toarray().ravel()
    return np.asarray(col).ravel()


def dict_learn_fit(X, config):
    """Online dictionary learning: alternate sparse coding of each document
    (in index order) with one projected block-coordinate update of the
    dictionary from recency-weighted sufficient statistics.

    Columns are projected onto the unit Euclidean ball; statistics
    accumulate across epochs. Deterministic for a fixed seed.
    """
    A, vocab = _as_matrix(X)
    n, m = A.shape
    if m == 0:
        raise ValueError("empty document-term matrix")
    k = config.n_topics
    groups = config.resolved_groups()
    rng = np.random.default_rng(config.seed)
    d = rng.standard_normal((n, k))
    d /= np.linalg.norm(d, axis=0, keepdims=True)

    stat_a = np.zeros((k, k))
    stat_b = np.zeros((n, k))
    w = recency_weights(m, config.rho)
    for _ in range(config.epochs):
        for i in range(m):
            x = _dense_column(A, i)
            code = sparse_code(x, d, config.kappa, config.regularizer, groups)
            a = code.coeffs
            stat_a += w[i] * np.outer(a, a)
            stat_b += w[i] * np.outer(x, a)
            for j in range(k):
                ajj = stat_a[j, j]
                if ajj <= 1e-12:
                    continue
                u = d[:, j] + (stat_b[:, j] - d @ stat_a[:, j]) / ajj
                nrm = float(np.linalg.norm(u))
                d[:, j] = u / max(1.0, nrm)
    return TopicDictionary(
        weights=d,
        model=MODEL_DICTLEARN,
        meta={
            "n_topics": k,
            "kappa": config.kappa,
            "rho": config.rho,
            "regularizer": config.regularizer,
            "n_groups": config.n_groups,
            "epochs": config.epochs,
            "seed": config.seed,
        },
        vocab=vocab,
    )


# ---------------------------------------------------------------------------
# Topic word sets
# ---------------------------------------------------------------------------


@dataclass
class TopicWordSet:
    """The k most significant word indices of one topic, weights descending."""

    topic_index: int
    word_indices: tuple[int, ...]
    weights: tuple[float, ...]


def extract_top_k(dictionary, k):
    """Keep each topic's k most significant words.

    Significance is |entry| for LSA (columns are signed) and the raw entry
    for LDA and dictionary learning. Ties break toward the lower word index.
    """
    n = dictionary.n_words
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    out = []
    indices = np.arange(n)
    for t in range(dictionary.n_topics):
        col = dictionary.weights[:, t]
        sig = np.abs(col) if dictionary.model == MODEL_LSA else col
        order = np.lexsort((indices, -sig))[:k]
        out.append(
            TopicWordSet(
                topic_index=t,
                word_indices=tuple(int(i) for i in order),
                weights=tuple(float(sig[i]) for i in order),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

MODEL_FORMAT = "topic-dictionary"
MODEL_VERSION = 1


def save_topic_dictionary(dictionary, path):
    """Versioned JSON header plus a dense column-major weight payload;
    round-trips bit-exactly."""
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "model": dictionary.model,
        "n_words": dictionary.n_words,
        "n_topics": dictionary.n_topics,
        "config": dictionary.meta,
        "seed": dictionary.meta.get("seed"),
        "vocab": dictionary.vocab,
        "singular_values": (
            None
            if dictionary.singular_values is None
            else [float(v) for v in dictionary.singular_values]
        ),
        "weights": [float(v) for v in dictionary.weights.flatten(order="F")],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_topic_dictionary(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a topic dictionary file")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported version {payload.get('version')}")
    weights = np.array(payload["weights"], dtype=np.float64).reshape(
        (payload["n_words"], payload["n_topics"]), order="F"
    )
    sv = payload.get("singular_values")
    return TopicDictionary(
        weights=weights,
        model=payload["model"],
        meta=payload.get("config", {}),
        vocab=payload.get("vocab"),
        singular_values=None if sv is None else np.array(sv, dtype=np.float64),
    )
