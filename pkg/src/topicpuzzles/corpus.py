"""Corpus ingestion: tokenization, vocabulary construction, and sparse
document-term matrices with optional TF-IDF weighting.

All builders are deterministic: the same documents and config produce
bit-identical vocabularies and matrices. Built structures are treated as
immutable afterwards and are safe to share across threads.
"""

from __future__ import annotations

import json
import re
import warnings
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

RAW_COUNT = "raw-count"
TFIDF = "tfidf"

STOPWORDS_VERSION = "en-v1"

# Bundled English stopword list (function words, auxiliaries, reporting
# verbs). Filtering is optional: pass stopwords=frozenset() to keep them.
STOPWORDS_EN = frozenset(
    """
    a about above after again against all almost also although always am an and
    any are around as at back be became because been before being below between
    both but by came can cannot could did do does doing done down during each
    either enough even ever every few for from further get got had has have
    having he her here hers herself him himself his how i if in into is it its
    itself just least less let like made make many may me might more most much
    must my myself never no nor not now of off often on once only onto or other
    our ours ourselves out over own per put rather said same say says see shall
    she should since so some still such than that the their theirs them
    themselves then there these they this those through to too under until up
    upon us very was we well were what when where whether which while who whom
    why will with within without would yet you your yours yourself yourselves
    """.split()
)


class CorpusFormatError(ValueError):
    """Raised for malformed corpus input files."""

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


class EmptyVocabularyError(ValueError):
    """Raised when document-frequency filtering removes every word."""


@dataclass(frozen=True)
class Document:
    """A raw input document. Ids must be unique within a corpus."""

    id: str
    text: str


@dataclass(frozen=True)
class TokenizerConfig:
    """Tokenization policy: lowercasing, token pattern, stopwords, min length.

    The default pattern takes maximal runs of alphabetic characters, so
    digits and punctuation split tokens.
    """

    lowercase: bool = True
    token_pattern: str = r"[A-Za-z]+"
    stopwords: frozenset[str] = STOPWORDS_EN
    min_token_len: int = 2


DEFAULT_TOKENIZER = TokenizerConfig()


@lru_cache(maxsize=64)
def _compiled(pattern):
    return re.compile(pattern)


def tokenize(text, config=DEFAULT_TOKENIZER):
    """Split raw text into word tokens, preserving order.

    Lowercases (if configured), extracts tokens by the configured pattern,
    then drops tokens shorter than the minimum length and stopwords.
    Empty input yields an empty list.
    """
    if config.lowercase:
        text = text.lower()
    tokens = _compiled(config.token_pattern).findall(text)
    return [
        t
        for t in tokens
        if len(t) >= config.min_token_len and t not in config.stopwords
    ]


@dataclass
class Vocabulary:
    """Word-to-index bijection with per-word document frequencies.

    Indices are assigned in lexicographic word order so that identical
    corpora index identically across runs and platforms.
    """

    words: list[str]
    doc_freq: list[int]
    n_docs: int

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def word_index(self, word):
        return self.index[word]


def _check_unique_ids(docs):
    seen = set()
    for doc in docs:
        if doc.id in seen:
            raise ValueError(f"duplicate document id: {doc.id!r}")
        seen.add(doc.id)


def build_vocabulary(docs, min_df=1, max_df_ratio=1.0, config=DEFAULT_TOKENIZER):
    """Build the vocabulary of words with document frequency in
    [min_df, max_df_ratio * n_docs].

    Raises EmptyVocabularyError if the filters remove every word.
    """
    if min_df < 1:
        raise ValueError(f"min_df must be >= 1, got {min_df}")
    if not 0.0 < max_df_ratio <= 1.0:
        raise ValueError(f"max_df_ratio must be in (0, 1], got {max_df_ratio}")
    docs = list(docs)
    _check_unique_ids(docs)
    df = Counter()
    for doc in docs:
        df.update(set(tokenize(doc.text, config)))
    max_df = max_df_ratio * len(docs)
    kept = sorted(w for w, c in df.items() if min_df <= c <= max_df)
    if not kept:
        raise EmptyVocabularyError(
            f"no words survive document-frequency filtering "
            f"(min_df={min_df}, max_df_ratio={max_df_ratio}, n_docs={len(docs)})"
        )
    return Vocabulary(words=kept, doc_freq=[df[w] for w in kept], n_docs=len(docs))


@dataclass
class DocTermMatrix:
    """Sparse word-by-document weight matrix (words are rows).

    All stored entries are positive; documents left with no in-vocabulary
    tokens are dropped at build time, so there are no all-zero columns.
    """

    matrix: sp.csc_matrix
    vocab: Vocabulary
    doc_ids: list[str]
    weighting: str = RAW_COUNT

    @property
    def n_words(self):
        return self.matrix.shape[0]

    @property
    def n_docs(self):
        return self.matrix.shape[1]


def build_doc_term_matrix(docs, vocab, config=DEFAULT_TOKENIZER):
    """Count in-vocabulary word occurrences per document into a sparse matrix.

    Documents with no in-vocabulary tokens are dropped (with a warning)
    rather than kept as zero columns.
    """
    docs = list(docs)
    _check_unique_ids(docs)
    rows, cols, data = [], [], []
    doc_ids = []
    for doc in docs:
        counts = Counter(
            vocab.index[t] for t in tokenize(doc.text, config) if t in vocab.index
        )
        if not counts:
            warnings.warn(
                f"document {doc.id!r} has no in-vocabulary tokens and was dropped"
            )
            continue
        j = len(doc_ids)
        doc_ids.append(doc.id)
        for i in sorted(counts):
            rows.append(i)
            cols.append(j)
            data.append(float(counts[i]))
    matrix = sp.csc_matrix(
        (data, (rows, cols)), shape=(len(vocab), len(doc_ids)), dtype=np.float64
    )
    matrix.sort_indices()
    return DocTermMatrix(matrix=matrix, vocab=vocab, doc_ids=doc_ids)


def tfidf_transform(dtm):
    """Reweight a raw-count matrix to tf * ln(n_docs / df).

    Words occurring in every document get idf 0 and their entries are
    removed, so stored entries stay positive; no new nonzeros appear.
    """
    if dtm.weighting != RAW_COUNT:
        raise ValueError(f"tfidf_transform requires raw counts, got {dtm.weighting!r}")
    m = dtm.matrix.tocoo()
    df = dtm.matrix.getnnz(axis=1)
    idf = np.zeros(dtm.n_words)
    present = df > 0
    idf[present] = np.log(dtm.n_docs / df[present])
    data = m.data * idf[m.row]
    out = sp.csc_matrix((data, (m.row, m.col)), shape=m.shape, dtype=np.float64)
    out.eliminate_zeros()
    out.sort_indices()
    return DocTermMatrix(
        matrix=out, vocab=dtm.vocab, doc_ids=list(dtm.doc_ids), weighting=TFIDF
    )


def load_corpus_jsonl(path):
    """Read a JSON-lines corpus: one object per line with `id` and `text`.

    Raises CorpusFormatError naming the offending line on malformed input,
    and on empty or duplicate-id corpora.
    """
    docs = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(
                    f"line {lineno}: invalid JSON ({exc.msg})", lineno
                ) from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(f"line {lineno}: expected an object", lineno)
            for key in ("id", "text"):
                if key not in record:
                    raise CorpusFormatError(
                        f"line {lineno}: missing field {key!r}", lineno
                    )
                if not isinstance(record[key], str):
                    raise CorpusFormatError(
                        f"line {lineno}: field {key!r} must be a string", lineno
                    )
            if record["id"] in seen:
                raise CorpusFormatError(
                    f"line {lineno}: duplicate document id {record['id']!r}", lineno
                )
            seen.add(record["id"])
            docs.append(Document(id=record["id"], text=record["text"]))
    if not docs:
        raise CorpusFormatError(f"no documents in {path}")
    return docs


def save_corpus_jsonl(docs, path):
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"id": doc.id, "text": doc.text}, sort_keys=True))
            fh.write("\n")


DTM_FORMAT = "doc-term-matrix"
DTM_VERSION = 1


def save_doc_term_matrix(dtm, path):
    """Persist a matrix as a versioned JSON header plus (row, col, value)
    triplets in column-major order. Round-trips bit-exactly."""
    m = dtm.matrix
    triplets = []
    indptr, indices, data = m.indptr, m.indices, m.data
    for j in range(m.shape[1]):
        for p in range(indptr[j], indptr[j + 1]):
            triplets.append([int(indices[p]), j, float(data[p])])
    payload = {
        "format": DTM_FORMAT,
        "version": DTM_VERSION,
        "weighting": dtm.weighting,
        "n_words": dtm.n_words,
        "n_docs": dtm.n_docs,
        "vocab": list(dtm.vocab.words),
        "doc_freq": list(dtm.vocab.doc_freq),
        "vocab_n_docs": dtm.vocab.n_docs,
        "doc_ids": list(dtm.doc_ids),
        "triplets": triplets,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_doc_term_matrix(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != DTM_FORMAT:
        raise ValueError(f"{path}: not a document-term matrix file")
    if payload.get("version") != DTM_VERSION:
        raise ValueError(f"{path}: unsupported version {payload.get('version')}")
    rows = [t[0] for t in payload["triplets"]]
    cols = [t[1] for t in payload["triplets"]]
    data = [t[2] for t in payload["triplets"]]
    matrix = sp.csc_matrix(
        (data, (rows, cols)),
        shape=(payload["n_words"], payload["n_docs"]),
        dtype=np.float64,
    )
    matrix.sort_indices()
    vocab = Vocabulary(
        words=list(payload["vocab"]),
        doc_freq=list(payload["doc_freq"]),
        n_docs=payload["vocab_n_docs"],
    )
    return DocTermMatrix(
        matrix=matrix,
        vocab=vocab,
        doc_ids=list(payload["doc_ids"]),
        weighting=payload["weighting"],
    )
