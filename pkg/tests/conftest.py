import numpy as np
import pytest

from topicpuzzles.corpus import build_doc_term_matrix, build_vocabulary
from topicpuzzles.synthetic import planted_topic_corpus


@pytest.fixture(scope="session")
def planted():
    """The pure planted corpus: 8 topics x 10 disjoint words, 400 docs of
    50 single-topic tokens. Returns (docs, per-topic words, vocab, matrix)."""
    docs, topics = planted_topic_corpus(seed=7)
    vocab = build_vocabulary(docs)
    dtm = build_doc_term_matrix(docs, vocab)
    return docs, topics, vocab, dtm


@pytest.fixture(scope="session")
def planted_mixed():
    """Planted corpus with 15% background tokens, giving cross-topic word
    pairs small but nonzero relatedness (usable difficulty midband)."""
    docs, topics = planted_topic_corpus(seed=3, background_fraction=0.15)
    vocab = build_vocabulary(docs)
    dtm = build_doc_term_matrix(docs, vocab)
    return docs, topics, vocab, dtm


def make_sparse_planted_instance(seed, n=20, k=6, m=50, atoms_per_doc=2):
    """X = D* A* with unit-norm ground-truth atoms and sparse coefficients."""
    rng = np.random.default_rng(seed)
    dstar = rng.standard_normal((n, k))
    dstar /= np.linalg.norm(dstar, axis=0)
    astar = np.zeros((k, m))
    for j in range(m):
        chosen = rng.choice(k, size=atoms_per_doc, replace=False)
        astar[chosen, j] = rng.standard_normal(atoms_per_doc)
    return dstar @ astar, dstar, astar
