"""Synthetic corpora with planted topic structure, for desk-scale
experiments and pipeline verification. The generator knows the ground
truth, so planted-topic recovery can be checked exactly."""

from __future__ import annotations

import string

import numpy as np

from .corpus import Document


def planted_vocabulary(n_topics=8, words_per_topic=10):
    """Disjoint per-topic word lists. Words are synthetic four-letter
    strings (e.g. 'aabb') that survive the default tokenizer."""
    if n_topics > 26 or words_per_topic > 26:
        raise ValueError("at most 26 topics and 26 words per topic")
    letters = string.ascii_lowercase
    return [
        [letters[t] * 2 + letters[i] * 2 for i in range(words_per_topic)]
        for t in range(n_topics)
    ]


def planted_topic_corpus(
    n_topics=8,
    words_per_topic=10,
    n_docs=400,
    tokens_per_doc=50,
    seed=0,
    background_fraction=0.0,
):
    """Documents drawn from a single planted topic each (topics cycle over
    documents). With background_fraction > 0, that fraction of tokens is
    drawn uniformly from the full vocabulary instead, which gives word
    pairs from different topics small but nonzero co-occurrence.

    Returns (documents, per-topic word lists).
    """
    if not 0.0 <= background_fraction < 1.0:
        raise ValueError("background_fraction must be in [0, 1)")
    topics = planted_vocabulary(n_topics, words_per_topic)
    all_words = [w for topic in topics for w in topic]
    rng = np.random.default_rng(seed)
    docs = []
    for j in range(n_docs):
        topic_words = topics[j % n_topics]
        tokens = []
        for _ in range(tokens_per_doc):
            if background_fraction > 0.0 and rng.random() < background_fraction:
                tokens.append(all_words[int(rng.integers(0, len(all_words)))])
            else:
                tokens.append(topic_words[int(rng.integers(0, len(topic_words)))])
        docs.append(Document(id=f"doc{j:04d}", text=" ".join(tokens)))
    return docs, topics
