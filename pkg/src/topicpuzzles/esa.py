"""Explicit semantic analysis: per-word concept vectors over a concept
repository, and pairwise word relatedness as the cosine of those vectors.

The index is built once (single writer) and immutable afterwards; the
similarity provider is safe for concurrent readers because every value is a
pure function of the index, so racing computations of the same pair agree.
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .corpus import (
    DEFAULT_TOKENIZER,
    TokenizerConfig,
    build_doc_term_matrix,
    build_vocabulary,
    tfidf_transform,
)

DEFAULT_TRUNCATION = 1000


@dataclass(frozen=True)
class EsaConfig:
    """Concept-index construction policy. ``max_concepts_per_word`` truncates
    each word's vector to its largest-weight concepts."""

    max_concepts_per_word: int = DEFAULT_TRUNCATION
    min_df: int = 1
    max_df_ratio: float = 1.0
    tokenizer: TokenizerConfig = DEFAULT_TOKENIZER


class EsaIndex:
    """Per-word sparse TF-IDF concept vectors.

    ``vectors`` maps a word to (concept positions ascending, positive
    weights). Words whose vectors would be empty are simply absent.
    """

    def __init__(self, concept_ids, vectors, truncation=DEFAULT_TRUNCATION):
        self.concept_ids = list(concept_ids)
        self.vectors = {}
        self.norms = {}
        for word, (ids, weights) in vectors.items():
            ids = np.asarray(ids, dtype=np.int64)
            weights = np.asarray(weights, dtype=np.float64)
            if ids.size == 0:
                continue
            order = np.argsort(ids)
            ids, weights = ids[order], weights[order]
            self.vectors[word] = (ids, weights)
            self.norms[word] = float(np.linalg.norm(weights))
        self.truncation = truncation

    @property
    def n_concepts(self):
        return len(self.concept_ids)

    def __contains__(self, word):
        return word in self.vectors

    def __len__(self):
        return len(self.vectors)

    def words(self):
        """Indexed words in lexicographic order."""
        return sorted(self.vectors)

    def vector(self, word):
        return self.vectors.get(word)


def build_esa_index(concepts, config=EsaConfig()):
    """Index a concept repository: each word's vector holds its TF-IDF weight
    in every concept document, truncated to the top ``max_concepts_per_word``
    concepts by weight (ties to the lower concept id). Deterministic."""
    concepts = list(concepts)
    if not concepts:
        raise ValueError("empty concept corpus")
    vocab = build_vocabulary(
        concepts, config.min_df, config.max_df_ratio, config.tokenizer
    )
    dtm = build_doc_term_matrix(concepts, vocab, config.tokenizer)
    weighted = tfidf_transform(dtm)
    csr = weighted.matrix.tocsr()
    csr.sort_indices()
    vectors = {}
    limit = config.max_concepts_per_word
    for i, word in enumerate(vocab.words):
        start, end = csr.indptr[i], csr.indptr[i + 1]
        if start == end:
            continue
        ids = csr.indices[start:end].astype(np.int64)
        weights = csr.data[start:end].astype(np.float64)
        if ids.size > limit:
            order = np.lexsort((ids, -weights))[:limit]
            ids, weights = ids[order], weights[order]
        vectors[word] = (ids, weights)
    return EsaIndex(weighted.doc_ids, vectors, truncation=limit)


class SimilarityProvider:
    """Serves pairwise word relatedness from an EsaIndex, lazily and with a
    bounded memo of computed pairs.

    Values are cosines of nonnegative vectors, so they lie in [0, 1];
    s(w, w) = 1 for indexed words. Unindexed words yield 0 and are recorded
    in ``missing_words`` instead of raising, so downstream sampling loops
    degrade gracefully.
    """

    def __init__(self, index, vocabulary=None, memo_size=1 << 20):
        self.index = index
        self.vocabulary = list(vocabulary) if vocabulary is not None else None
        self.missing_words = set()
        self._memo = OrderedDict()
        self._memo_size = memo_size

    def is_indexed(self, word):
        return word in self.index

    def relatedness(self, word_a, word_b):
        """Cosine of the two concept vectors; 0 if either is missing."""
        va = self.index.vector(word_a)
        vb = self.index.vector(word_b)
        if va is None or vb is None:
            if va is None:
                self.missing_words.add(word_a)
            if vb is None:
                self.missing_words.add(word_b)
            return 0.0
        if word_a == word_b:
            return 1.0
        key = (word_a, word_b) if word_a < word_b else (word_b, word_a)
        memo = self._memo
        if key in memo:
            memo.move_to_end(key)
            return memo[key]
        ids_a, w_a = self.index.vectors[key[0]]
        ids_b, w_b = self.index.vectors[key[1]]
        _, ia, ib = np.intersect1d(
            ids_a, ids_b, assume_unique=True, return_indices=True
        )
        if ia.size == 0:
            value = 0.0
        else:
            dot = float(w_a[ia] @ w_b[ib])
            value = dot / (self.index.norms[key[0]] * self.index.norms[key[1]])
            value = min(value, 1.0)
        if len(memo) >= self._memo_size:
            memo.popitem(last=False)
        memo[key] = value
        return value

    def word_for_index(self, i):
        if self.vocabulary is None:
            raise ValueError("similarity provider has no vocabulary attached")
        return self.vocabulary[i]

    def relatedness_by_index(self, i, j):
        return self.relatedness(self.word_for_index(i), self.word_for_index(j))

    def similarity_submatrix(self, words):
        """Symmetric relatedness matrix over a word set (indices into the
        attached vocabulary, or word strings); unit diagonal for indexed
        words, zero for missing ones."""
        resolved = [
            w if isinstance(w, str) else self.word_for_index(int(w)) for w in words
        ]
        size = len(resolved)
        out = np.zeros((size, size))
        for i in range(size):
            out[i, i] = 1.0 if self.is_indexed(resolved[i]) else 0.0
            for j in range(i + 1, size):
                value = self.relatedness(resolved[i], resolved[j])
                out[i, j] = value
                out[j, i] = value
        return out


ESA_FORMAT = "esa-index"
ESA_VERSION = 1


def save_esa_index(index, path):
    """Versioned JSON header plus per-word (concept id, weight) lists sorted
    by concept id; round-trips bit-exactly."""
    payload = {
        "format": ESA_FORMAT,
        "version": ESA_VERSION,
        "n_concepts": index.n_concepts,
        "concept_ids": index.concept_ids,
        "truncation": index.truncation,
        "vectors": {
            word: [[int(c), float(w)] for c, w in zip(ids, weights)]
            for word, (ids, weights) in sorted(index.vectors.items())
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_esa_index(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != ESA_FORMAT:
        raise ValueError(f"{path}: not an ESA index file")
    if payload.get("version") != ESA_VERSION:
        raise ValueError(f"{path}: unsupported version {payload.get('version')}")
    vectors = {
        word: (
            np.array([e[0] for e in entries], dtype=np.int64),
            np.array([e[1] for e in entries], dtype=np.float64),
        )
        for word, entries in payload["vectors"].items()
    }
    return EsaIndex(
        payload["concept_ids"], vectors, truncation=payload["truncation"]
    )
