import json

import pytest

from topicpuzzles.cli import main
from topicpuzzles.corpus import Document, save_corpus_jsonl
from topicpuzzles.synthetic import planted_topic_corpus

TINY_DOCS = [
    Document("d1", "vote election candidate vote ballot vote election"),
    Document("d2", "election candidate parliament vote ballot"),
    Document("d3", "wizard wand spell wizard dragon spell"),
    Document("d4", "wand spell dragon wizard wand"),
    Document("d5", "candidate parliament election ballot"),
    Document("d6", "dragon spell wand wizard dragon"),
]


@pytest.fixture
def corpus_path(tmp_path):
    path = tmp_path / "corpus.jsonl"
    save_corpus_jsonl(TINY_DOCS, path)
    return str(path)


@pytest.fixture
def pipeline(tmp_path, corpus_path):
    """Run ingest + index once; return the paths dict."""
    matrix = str(tmp_path / "matrix.json")
    index = str(tmp_path / "index.json")
    assert main(["ingest", "--corpus", corpus_path, "--out", matrix]) == 0
    assert main(["index", "--concepts", corpus_path, "--out", index]) == 0
    return {"tmp": tmp_path, "corpus": corpus_path, "matrix": matrix, "index": index}


class TestIngest:
    def test_valid_corpus(self, tmp_path, corpus_path, capsys):
        out = str(tmp_path / "matrix.json")
        assert main(["ingest", "--corpus", corpus_path, "--out", out]) == 0
        assert "ingested 6 documents" in capsys.readouterr().out
        payload = json.loads(open(out).read())
        assert payload["n_docs"] == 6
        assert payload["weighting"] == "raw-count"

    def test_missing_text_field_exits_2_names_line(self, tmp_path, capsys):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "text": "fine words here"}\n{"id": "b"}\n')
        code = main(["ingest", "--corpus", str(path), "--out", str(tmp_path / "m.json")])
        assert code == 2
        assert "line 2" in capsys.readouterr().err

    def test_empty_file_exits_2(self, tmp_path, capsys):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        code = main(["ingest", "--corpus", str(path), "--out", str(tmp_path / "m.json")])
        assert code == 2

    def test_tfidf_flag(self, tmp_path, corpus_path):
        out = str(tmp_path / "matrix.json")
        assert main(["ingest", "--corpus", corpus_path, "--out", out, "--tfidf"]) == 0
        assert json.loads(open(out).read())["weighting"] == "tfidf"


class TestTrain:
    def test_lsa_deterministic_files(self, pipeline):
        out1 = str(pipeline["tmp"] / "m1.json")
        out2 = str(pipeline["tmp"] / "m2.json")
        args = ["train", "--model", "lsa", "--matrix", pipeline["matrix"],
                "--num-topics", "2", "--seed", "5"]
        assert main(args + ["--out", out1]) == 0
        assert main(args + ["--out", out2]) == 0
        assert open(out1, "rb").read() == open(out2, "rb").read()

    def test_lda_deterministic_files(self, pipeline):
        out1 = str(pipeline["tmp"] / "l1.json")
        out2 = str(pipeline["tmp"] / "l2.json")
        args = ["train", "--model", "lda", "--matrix", pipeline["matrix"],
                "--num-topics", "2", "--iterations", "15", "--seed", "5"]
        assert main(args + ["--out", out1]) == 0
        assert main(args + ["--out", out2]) == 0
        assert open(out1, "rb").read() == open(out2, "rb").read()

    def test_lsa_k_too_large_exits_2(self, pipeline, capsys):
        code = main(["train", "--model", "lsa", "--matrix", pipeline["matrix"],
                     "--out", str(pipeline["tmp"] / "m.json"),
                     "--num-topics", "99"])
        assert code == 2
        assert "n_topics" in capsys.readouterr().err

    def test_lda_on_tfidf_exits_2(self, tmp_path, corpus_path, capsys):
        matrix = str(tmp_path / "tfidf.json")
        assert main(["ingest", "--corpus", corpus_path, "--out", matrix, "--tfidf"]) == 0
        code = main(["train", "--model", "lda", "--matrix", matrix,
                     "--out", str(tmp_path / "m.json"), "--num-topics", "2",
                     "--iterations", "5"])
        assert code == 2
        assert "raw counts" in capsys.readouterr().err

    def test_dictlearn_trains(self, pipeline):
        out = str(pipeline["tmp"] / "dl.json")
        assert main(["train", "--model", "dictlearn", "--matrix", pipeline["matrix"],
                     "--out", out, "--num-topics", "2", "--epochs", "2"]) == 0
        assert json.loads(open(out).read())["model"] == "dictlearn"


class TestExtractSets:
    def train_lda(self, pipeline):
        model = str(pipeline["tmp"] / "lda.json")
        assert main(["train", "--model", "lda", "--matrix", pipeline["matrix"],
                     "--out", model, "--num-topics", "2", "--iterations", "40",
                     "--seed", "1"]) == 0
        return model

    def test_delta_recorded_in_records(self, pipeline):
        model = self.train_lda(pipeline)
        sets = str(pipeline["tmp"] / "sets.jsonl")
        assert main(["extract-sets", "--model", model, "--index", pipeline["index"],
                     "--out", sets, "--top-k", "3", "--delta", "0.25"]) == 0
        records = [json.loads(l) for l in open(sets)]
        assert records, "expected at least one consistent set"
        assert all(r["delta"] == 0.25 for r in records)

    def test_near_maximal_delta_yields_nothing(self, pipeline):
        model = self.train_lda(pipeline)
        sets = str(pipeline["tmp"] / "sets99.jsonl")
        assert main(["extract-sets", "--model", model, "--index", pipeline["index"],
                     "--out", sets, "--top-k", "3", "--delta", "0.99"]) == 0
        assert open(sets).read() == ""

    def test_defaults_are_k4_delta01(self, pipeline, capsys):
        model = self.train_lda(pipeline)
        sets = str(pipeline["tmp"] / "setsdef.jsonl")
        assert main(["extract-sets", "--model", model, "--index", pipeline["index"],
                     "--out", sets]) == 0
        assert "delta=0.1" in capsys.readouterr().out
        for record in (json.loads(l) for l in open(sets)):
            assert len(record["words"]) == 4
            assert record["delta"] == 0.1


class TestGenerate:
    def make_sets(self, pipeline):
        model = str(pipeline["tmp"] / "lda.json")
        sets = str(pipeline["tmp"] / "sets.jsonl")
        assert main(["train", "--model", "lda", "--matrix", pipeline["matrix"],
                     "--out", model, "--num-topics", "2", "--iterations", "40",
                     "--seed", "1"]) == 0
        assert main(["extract-sets", "--model", model, "--index", pipeline["index"],
                     "--out", sets, "--top-k", "3", "--delta", "0.1"]) == 0
        return sets

    def test_deterministic_bank(self, pipeline):
        sets = self.make_sets(pipeline)
        b1 = str(pipeline["tmp"] / "bank1.jsonl")
        b2 = str(pipeline["tmp"] / "bank2.jsonl")
        args = ["generate", "--sets", sets, "--index", pipeline["index"],
                "--eta1", "0.01", "--eta2", "0.9", "--seed", "3"]
        assert main(args + ["--out", b1]) == 0
        assert main(args + ["--out", b2]) == 0
        assert open(b1, "rb").read() == open(b2, "rb").read()

    def test_no_solutions_writes_second_file(self, pipeline):
        sets = self.make_sets(pipeline)
        bank = str(pipeline["tmp"] / "bank.jsonl")
        assert main(["generate", "--sets", sets, "--index", pipeline["index"],
                     "--out", bank, "--eta1", "0.01", "--eta2", "0.9",
                     "--no-solutions"]) == 0
        public = bank.replace(".jsonl", ".nosolutions.jsonl")
        records = [json.loads(l) for l in open(public)]
        assert records
        assert all("solution" not in r for r in records)

    def test_unknown_band_exits_2(self, pipeline, capsys):
        sets = self.make_sets(pipeline)
        code = main(["generate", "--sets", sets, "--index", pipeline["index"],
                     "--out", str(pipeline["tmp"] / "b.jsonl"), "--band", "expert"])
        assert code == 2
        assert "unknown band" in capsys.readouterr().err

    def test_summary_reports_exhausted(self, pipeline, capsys):
        sets = self.make_sets(pipeline)
        bank = str(pipeline["tmp"] / "bank.jsonl")
        # unreachable narrow band high up: everything exhausts
        assert main(["generate", "--sets", sets, "--index", pipeline["index"],
                     "--out", bank, "--eta1", "0.985", "--eta2", "0.99",
                     "--max-attempts", "16"]) == 0
        out = capsys.readouterr().out
        assert "exhausted" in out


class TestEvalYield:
    def test_counts_non_increasing_and_csv(self, pipeline, capsys):
        csv_path = str(pipeline["tmp"] / "yield.csv")
        assert main(["eval-yield", "--matrix", pipeline["matrix"],
                     "--index", pipeline["index"],
                     "--models", "lsa,lda",
                     "--delta-grid", "0.0,0.2,0.4",
                     "--num-topics", "2", "--iterations", "30",
                     "--top-k", "3", "--out", csv_path]) == 0
        lines = open(csv_path).read().strip().splitlines()
        assert lines[0] == "delta,lsa,lda"
        rows = [line.split(",") for line in lines[1:]]
        assert [r[0] for r in rows] == ["0", "0.2", "0.4"]
        for col in (1, 2):
            counts = [int(r[col]) for r in rows]
            assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_non_increasing_grid_exits_2(self, pipeline, capsys):
        code = main(["eval-yield", "--matrix", pipeline["matrix"],
                     "--index", pipeline["index"], "--models", "lsa",
                     "--delta-grid", "0.2,0.1", "--num-topics", "2"])
        assert code == 2
        assert "strictly increasing" in capsys.readouterr().err

    def test_single_cell_agrees_with_extract_sets(self, pipeline, capsys):
        model = str(pipeline["tmp"] / "lda.json")
        sets = str(pipeline["tmp"] / "sets.jsonl")
        assert main(["train", "--model", "lda", "--matrix", pipeline["matrix"],
                     "--out", model, "--num-topics", "2", "--iterations", "30",
                     "--seed", "0"]) == 0
        assert main(["extract-sets", "--model", model, "--index", pipeline["index"],
                     "--out", sets, "--top-k", "3", "--delta", "0.1"]) == 0
        n_sets = len(open(sets).read().splitlines())
        capsys.readouterr()
        assert main(["eval-yield", "--matrix", pipeline["matrix"],
                     "--index", pipeline["index"], "--models", "lda",
                     "--delta-grid", "0.1", "--num-topics", "2",
                     "--iterations", "30", "--top-k", "3", "--seed", "0"]) == 0
        table = capsys.readouterr().out.strip().splitlines()
        assert table[-1] == f"0.1,{n_sets}"

    def test_zero_grid_counts_positive_bottleneck_sets(self, pipeline, capsys):
        model = str(pipeline["tmp"] / "lda.json")
        sets = str(pipeline["tmp"] / "sets0.jsonl")
        assert main(["train", "--model", "lda", "--matrix", pipeline["matrix"],
                     "--out", model, "--num-topics", "2", "--iterations", "30",
                     "--seed", "2"]) == 0
        assert main(["extract-sets", "--model", model, "--index", pipeline["index"],
                     "--out", sets, "--top-k", "3", "--delta", "0.0"]) == 0
        records = [json.loads(l) for l in open(sets)]
        assert all(r["score"] > 0 for r in records)
        capsys.readouterr()
        assert main(["eval-yield", "--matrix", pipeline["matrix"],
                     "--index", pipeline["index"], "--models", "lda",
                     "--delta-grid", "0.0", "--num-topics", "2",
                     "--iterations", "30", "--top-k", "3", "--seed", "2"]) == 0
        table = capsys.readouterr().out.strip().splitlines()
        assert table[-1] == f"0,{len(records)}"

    def test_unknown_model_exits_2(self, pipeline, capsys):
        code = main(["eval-yield", "--matrix", pipeline["matrix"],
                     "--index", pipeline["index"], "--models", "bert",
                     "--delta-grid", "0.1"])
        assert code == 2

    def test_invariant_violation_exits_3(self, pipeline, capsys, monkeypatch):
        import topicpuzzles.cli as cli_module

        calls = []

        def rigged(sets, provider, delta):
            calls.append(delta)
            return list(range(len(calls)))  # counts grow with delta: invalid

        monkeypatch.setattr(
            cli_module.consistency, "identify_consistent_sets", rigged
        )
        code = main(["eval-yield", "--matrix", pipeline["matrix"],
                     "--index", pipeline["index"], "--models", "lsa",
                     "--delta-grid", "0.0,0.2", "--num-topics", "2"])
        assert code == 3
        assert "non-increasing" in capsys.readouterr().err


class TestYieldCurveType:
    def test_validate_accepts_monotone(self):
        from topicpuzzles.cli import YieldCurve

        curve = YieldCurve(deltas=[0.0, 0.1], counts={"lsa": [5, 3]})
        assert curve.validate() is curve
        assert curve.as_csv() == "delta,lsa\n0,5\n0.1,3\n"

    def test_validate_rejects_increase(self):
        from topicpuzzles.cli import InternalError, YieldCurve

        curve = YieldCurve(deltas=[0.0, 0.1], counts={"lsa": [3, 5]})
        with pytest.raises(InternalError):
            curve.validate()


class TestConfigFile:
    def test_flags_override_config(self, pipeline, capsys):
        config = pipeline["tmp"] / "config.json"
        config.write_text(json.dumps({"top-k": 3, "delta": 0.5}))
        model = str(pipeline["tmp"] / "lda.json")
        sets = str(pipeline["tmp"] / "sets.jsonl")
        assert main(["train", "--model", "lda", "--matrix", pipeline["matrix"],
                     "--out", model, "--num-topics", "2", "--iterations", "30"]) == 0
        # config supplies top-k=3 and delta=0.5; flag overrides delta
        assert main(["extract-sets", "--model", model, "--index", pipeline["index"],
                     "--out", sets, "--config", str(config),
                     "--delta", "0.1"]) == 0
        records = [json.loads(l) for l in open(sets)]
        assert records
        assert all(len(r["words"]) == 3 for r in records)
        assert all(r["delta"] == 0.1 for r in records)

    def test_missing_config_exits_2(self, pipeline, capsys):
        code = main(["extract-sets", "--model", "x", "--index", pipeline["index"],
                     "--out", "y", "--config", "/nonexistent.json"])
        assert code == 2


class TestEndToEndPlanted:
    def test_full_pipeline_on_mixed_planted_corpus(self, tmp_path):
        docs, _ = planted_topic_corpus(
            n_topics=4, n_docs=80, tokens_per_doc=40, seed=5,
            background_fraction=0.15,
        )
        corpus_file = tmp_path / "planted.jsonl"
        save_corpus_jsonl(docs, corpus_file)
        matrix = str(tmp_path / "matrix.json")
        index = str(tmp_path / "index.json")
        model = str(tmp_path / "model.json")
        sets = str(tmp_path / "sets.jsonl")
        bank = str(tmp_path / "bank.jsonl")
        assert main(["ingest", "--corpus", str(corpus_file), "--out", matrix]) == 0
        assert main(["index", "--concepts", str(corpus_file), "--out", index]) == 0
        assert main(["train", "--model", "lda", "--matrix", matrix, "--out", model,
                     "--num-topics", "4", "--iterations", "60", "--seed", "0"]) == 0
        assert main(["extract-sets", "--model", model, "--index", index,
                     "--out", sets]) == 0
        assert main(["generate", "--sets", sets, "--index", index, "--out", bank,
                     "--eta1", "0.02", "--eta2", "0.6", "--seed", "0"]) == 0
        records = [json.loads(l) for l in open(bank)]
        assert records, "pipeline produced no puzzles"
