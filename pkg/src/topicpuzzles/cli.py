"""Command-line front end for the puzzle-generation pipeline.

Subcommands mirror the pipeline stages: ``ingest`` a corpus, ``train`` a
topic model, ``index`` a concept repository, ``extract-sets`` consistent
sets, ``generate`` a puzzle bank, and ``eval-yield`` consistent-set counts
over a threshold grid.

Every command is a pure function of its inputs, flags, and seed: repeated
runs produce byte-identical outputs. Exit codes: 0 success, 2 usage or
input error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from . import consistency, corpus, esa, puzzles, topic_models

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    """Bad flags or malformed input files."""


class InternalError(Exception):
    """A pipeline invariant failed to hold."""


@dataclass
class YieldCurve:
    """Consistent-set counts per model over an increasing threshold grid."""

    deltas: list[float]
    counts: dict[str, list[int]]

    def validate(self):
        for model, counts in self.counts.items():
            if any(b > a for a, b in zip(counts, counts[1:])):
                raise InternalError(
                    f"consistent-set counts for {model} are not "
                    f"non-increasing over the delta grid: {counts}"
                )
        return self

    def as_csv(self):
        models = list(self.counts)
        lines = ["delta," + ",".join(models)]
        for row, delta in enumerate(self.deltas):
            lines.append(
                f"{delta:g},"
                + ",".join(str(self.counts[m][row]) for m in models)
            )
        return "\n".join(lines) + "\n"


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise UsageError(f"config {path} must contain a JSON object")
    return config


def _setting(args, config, key, default):
    """Flag > config file > default."""
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _tokenizer_config(args, config):
    kwargs = {}
    if _setting(args, config, "keep-stopwords", False):
        kwargs["stopwords"] = frozenset()
    min_token_len = _setting(args, config, "min-token-len", None)
    if min_token_len is not None:
        kwargs["min_token_len"] = int(min_token_len)
    return corpus.TokenizerConfig(**kwargs) if kwargs else corpus.DEFAULT_TOKENIZER


def cmd_ingest(args):
    config = _load_config(args.config)
    docs = corpus.load_corpus_jsonl(args.corpus)
    tokenizer = _tokenizer_config(args, config)
    vocab = corpus.build_vocabulary(
        docs,
        min_df=int(_setting(args, config, "min-df", 1)),
        max_df_ratio=float(_setting(args, config, "max-df-ratio", 1.0)),
        config=tokenizer,
    )
    dtm = corpus.build_doc_term_matrix(docs, vocab, tokenizer)
    if _setting(args, config, "tfidf", False):
        dtm = corpus.tfidf_transform(dtm)
    corpus.save_doc_term_matrix(dtm, args.out)
    print(
        f"ingested {dtm.n_docs} documents, vocabulary {dtm.n_words} words, "
        f"weighting {dtm.weighting}"
    )
    return EXIT_OK


def cmd_train(args):
    config = _load_config(args.config)
    dtm = corpus.load_doc_term_matrix(args.matrix)
    n_topics = int(_setting(args, config, "num-topics", topic_models.DEFAULT_NUM_TOPICS))
    seed = int(_setting(args, config, "seed", 0))
    if args.model == topic_models.MODEL_LSA:
        model = topic_models.lsa_fit(dtm, n_topics, seed=seed)
    elif args.model == topic_models.MODEL_LDA:
        lda_config = topic_models.LdaConfig(
            n_topics=n_topics,
            alpha=float(_setting(args, config, "alpha", 0.1)),
            beta=float(_setting(args, config, "beta", 0.01)),
            iterations=int(_setting(args, config, "iterations", 200)),
            seed=seed,
        )
        model = topic_models.lda_fit(dtm, lda_config)
    else:
        dl_config = topic_models.DictLearnConfig(
            n_topics=n_topics,
            kappa=float(_setting(args, config, "kappa", 0.1)),
            rho=float(_setting(args, config, "rho", 0.0)),
            regularizer=_setting(args, config, "regularizer", topic_models.L1),
            n_groups=int(_setting(args, config, "n-groups", 2)),
            epochs=int(_setting(args, config, "epochs", 5)),
            seed=seed,
        )
        model = topic_models.dict_learn_fit(dtm, dl_config)
    model.validate()
    topic_models.save_topic_dictionary(model, args.out)
    print(f"trained {model.model} model: {model.n_words} words x {model.n_topics} topics")
    return EXIT_OK


def cmd_index(args):
    config = _load_config(args.config)
    concepts = corpus.load_corpus_jsonl(args.concepts)
    esa_config = esa.EsaConfig(
        max_concepts_per_word=int(
            _setting(args, config, "max-concepts-per-word", esa.DEFAULT_TRUNCATION)
        ),
        min_df=int(_setting(args, config, "min-df", 1)),
        max_df_ratio=float(_setting(args, config, "max-df-ratio", 1.0)),
        tokenizer=_tokenizer_config(args, config),
    )
    index = esa.build_esa_index(concepts, esa_config)
    esa.save_esa_index(index, args.out)
    print(f"indexed {len(index)} words over {index.n_concepts} concepts")
    return EXIT_OK


def cmd_extract_sets(args):
    config = _load_config(args.config)
    model = topic_models.load_topic_dictionary(args.model)
    if model.vocab is None:
        raise UsageError(f"model {args.model} carries no vocabulary")
    index = esa.load_esa_index(args.index)
    provider = esa.SimilarityProvider(index, vocabulary=model.vocab)
    k = int(_setting(args, config, "top-k", topic_models.DEFAULT_TOP_K))
    delta = float(_setting(args, config, "delta", 0.1))
    if not 0.0 <= delta < 1.0:
        raise UsageError(f"delta must be in [0, 1), got {delta}")
    sets = topic_models.extract_top_k(model, k)
    kept = consistency.identify_consistent_sets(sets, provider, delta)
    consistency.save_consistent_sets(kept, args.out)
    print(f"{len(kept)} of {len(sets)} candidate sets consistent at delta={delta}")
    return EXIT_OK


def _resolve_band(args, config):
    eta1 = _setting(args, config, "eta1", None)
    eta2 = _setting(args, config, "eta2", None)
    name = _setting(args, config, "band", None)
    if eta1 is not None or eta2 is not None:
        if eta1 is None or eta2 is None:
            raise UsageError("--eta1 and --eta2 must be given together")
        try:
            return puzzles.DifficultyBand(float(eta1), float(eta2), name or "custom")
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if name is None:
        name = "beginner"
    if name not in puzzles.BAND_PRESETS:
        raise UsageError(
            f"unknown band {name!r}; presets: {sorted(puzzles.BAND_PRESETS)}"
        )
    return puzzles.BAND_PRESETS[name]


def cmd_generate(args):
    config = _load_config(args.config)
    sets = consistency.load_consistent_sets(args.sets)
    index = esa.load_esa_index(args.index)
    provider = esa.SimilarityProvider(index)
    vocab = index.words()
    band = _resolve_band(args, config)
    kinds_value = _setting(
        args, config, "kinds",
        f"{puzzles.ODD_ONE_OUT},{puzzles.CHOOSE_RELATED},{puzzles.SEPARATE_TOPICS}",
    )
    kinds = [k.strip() for k in kinds_value.split(",") if k.strip()]
    known = {puzzles.ODD_ONE_OUT, puzzles.CHOOSE_RELATED, puzzles.SEPARATE_TOPICS}
    unknown = set(kinds) - known
    if unknown:
        raise UsageError(f"unknown puzzle kinds: {sorted(unknown)}")
    eta2_cross = _setting(args, config, "eta2-cross", None)
    max_attempts = _setting(args, config, "max-attempts", None)
    bank, skipped = puzzles.generate_puzzle_bank(
        sets,
        provider,
        vocab,
        band,
        kinds=kinds,
        master_seed=int(_setting(args, config, "seed", 0)),
        n_distractors=int(_setting(args, config, "n-distractors", 3)),
        eta2_cross=None if eta2_cross is None else float(eta2_cross),
        max_attempts=None if max_attempts is None else int(max_attempts),
    )
    puzzles.save_puzzle_bank(bank, args.out, include_solutions=True)
    if args.no_solutions:
        public = _no_solutions_path(args.out)
        puzzles.save_puzzle_bank(bank, public, include_solutions=False)
        print(f"solutions withheld in {public}")
    exhausted = sum(1 for s in skipped if isinstance(s, puzzles.Exhausted))
    rejected = len(skipped) - exhausted
    print(
        f"generated {len(bank)} puzzles from {len(sets)} consistent sets "
        f"(band {band.eta1}..{band.eta2}); exhausted {exhausted}, "
        f"rejected {rejected}"
    )
    return EXIT_OK


def _no_solutions_path(path):
    if path.endswith(".jsonl"):
        return path[: -len(".jsonl")] + ".nosolutions.jsonl"
    return path + ".nosolutions"


def cmd_eval_yield(args):
    config = _load_config(args.config)
    dtm = corpus.load_doc_term_matrix(args.matrix)
    index = esa.load_esa_index(args.index)
    provider = esa.SimilarityProvider(index, vocabulary=list(dtm.vocab.words))
    grid = [float(v) for v in args.delta_grid.split(",") if v.strip()]
    if not grid:
        raise UsageError("empty delta grid")
    if any(not 0.0 <= d < 1.0 for d in grid):
        raise UsageError("delta grid values must be in [0, 1)")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("delta grid must be strictly increasing")
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    known = {
        topic_models.MODEL_LSA,
        topic_models.MODEL_LDA,
        topic_models.MODEL_DICTLEARN,
    }
    unknown = set(models) - known
    if unknown:
        raise UsageError(f"unknown models: {sorted(unknown)}")
    k = int(_setting(args, config, "top-k", topic_models.DEFAULT_TOP_K))
    n_topics = int(_setting(args, config, "num-topics", topic_models.DEFAULT_NUM_TOPICS))
    seed = int(_setting(args, config, "seed", 0))
    model_configs = config.get("models", {})

    curve = {}
    for name in models:
        overrides = model_configs.get(name, {})
        if name == topic_models.MODEL_LSA:
            model = topic_models.lsa_fit(
                dtm, int(overrides.get("num-topics", n_topics)),
                seed=int(overrides.get("seed", seed)),
            )
        elif name == topic_models.MODEL_LDA:
            model = topic_models.lda_fit(
                dtm,
                topic_models.LdaConfig(
                    n_topics=int(overrides.get("num-topics", n_topics)),
                    alpha=float(
                        overrides.get("alpha", _setting(args, config, "alpha", 0.1))
                    ),
                    beta=float(
                        overrides.get("beta", _setting(args, config, "beta", 0.01))
                    ),
                    iterations=int(
                        overrides.get(
                            "iterations", _setting(args, config, "iterations", 200)
                        )
                    ),
                    seed=int(overrides.get("seed", seed)),
                ),
            )
        else:
            model = topic_models.dict_learn_fit(
                dtm,
                topic_models.DictLearnConfig(
                    n_topics=int(overrides.get("num-topics", n_topics)),
                    kappa=float(
                        overrides.get("kappa", _setting(args, config, "kappa", 0.1))
                    ),
                    rho=float(
                        overrides.get("rho", _setting(args, config, "rho", 0.0))
                    ),
                    epochs=int(
                        overrides.get("epochs", _setting(args, config, "epochs", 5))
                    ),
                    seed=int(overrides.get("seed", seed)),
                ),
            )
        sets = topic_models.extract_top_k(model, k)
        curve[name] = [
            len(consistency.identify_consistent_sets(sets, provider, delta))
            for delta in grid
        ]

    table = YieldCurve(deltas=grid, counts=curve).validate().as_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(table)
    print(table, end="")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="topicpuzzles",
        description="Generate word puzzles from topic dictionaries",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON config file; flags override it")
    shared.add_argument("--seed", type=int, help="master random seed (default 0)")

    p = sub.add_parser("ingest", parents=[shared], help="corpus JSONL -> matrix")
    p.add_argument("--corpus", required=True, help="JSON-lines corpus path")
    p.add_argument("--out", required=True, help="output matrix path")
    p.add_argument("--min-df", type=int)
    p.add_argument("--max-df-ratio", type=float)
    p.add_argument("--min-token-len", type=int)
    p.add_argument("--keep-stopwords", action="store_const", const=True)
    p.add_argument("--tfidf", action="store_const", const=True,
                   help="apply TF-IDF weighting after counting")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", parents=[shared], help="matrix -> topic model")
    p.add_argument("--model", required=True,
                   choices=["lsa", "lda", "dictlearn"])
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--num-topics", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--kappa", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--regularizer", choices=["l1", "group-l2"])
    p.add_argument("--n-groups", type=int)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("index", parents=[shared],
                       help="concept corpus JSONL -> ESA index")
    p.add_argument("--concepts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-concepts-per-word", type=int)
    p.add_argument("--min-df", type=int)
    p.add_argument("--max-df-ratio", type=float)
    p.add_argument("--min-token-len", type=int)
    p.add_argument("--keep-stopwords", action="store_const", const=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("extract-sets", parents=[shared],
                       help="model + index -> consistent sets")
    p.add_argument("--model", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--top-k", type=int, help="words per topic set (default 4)")
    p.add_argument("--delta", type=float, help="consistency threshold (default 0.1)")
    p.set_defaults(func=cmd_extract_sets)

    p = sub.add_parser("generate", parents=[shared],
                       help="consistent sets + index -> puzzle bank")
    p.add_argument("--sets", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--band", help="difficulty preset: beginner or intermediate")
    p.add_argument("--eta1", type=float)
    p.add_argument("--eta2", type=float)
    p.add_argument("--kinds", help="comma-separated puzzle kinds")
    p.add_argument("--n-distractors", type=int)
    p.add_argument("--eta2-cross", type=float)
    p.add_argument("--max-attempts", type=int)
    p.add_argument("--no-solutions", action="store_true",
                   help="also write a bank with solutions withheld")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval-yield", parents=[shared],
                       help="consistent-set counts over a delta grid")
    p.add_argument("--matrix", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--models", default="lsa,lda,dictlearn")
    p.add_argument("--delta-grid", required=True,
                   help="comma-separated strictly increasing thresholds")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--top-k", type=int)
    p.add_argument("--num-topics", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--kappa", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_eval_yield)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, corpus.CorpusFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
