import json

import pytest

from helpers import make_citation
from pubtagger import LabelVocabulary, Partition, write_corpus
from pubtagger.cli import main

POS_WORDS = ["assay", "cohort", "trial", "plasma", "genome"]
NEG_WORDS = ["review", "survey", "history", "opinion", "summary"]


def tiny_corpus(n=40):
    """Two disjoint, lexically separable classes of n/2 citations each."""
    citations = []
    for i in range(n):
        review = i % 2 == 0
        words = (NEG_WORDS if review else POS_WORDS) * 3
        citations.append(
            make_citation(
                f"c{i:03d}",
                labels={"Review"} if review else {"Journal Article"},
                title=" ".join(words[:4]),
                abstract=" ".join(words[i % 5 :] + words[: i % 5]),
            )
        )
    return citations


@pytest.fixture
def workspace(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(tiny_corpus(), corpus)
    vocab = tmp_path / "vocab.json"
    LabelVocabulary(
        {"Journal Article": 20, "Review": 20}, base_label="Journal Article"
    ).save(vocab)
    return tmp_path


def run(argv):
    return main([str(a) for a in argv])


class TestExitCodes:
    def test_unknown_flag_is_a_usage_error(self, workspace, caplog):
        code = run(
            ["stats", "--corpus", workspace / "corpus.jsonl", "--no-such-flag"]
        )
        assert code == 1
        assert any("no-such-flag" in r.message for r in caplog.records)

    def test_unknown_subcommand_is_a_usage_error(self):
        assert run(["transmogrify"]) == 1

    def test_no_subcommand_prints_help(self, capsys):
        assert run([]) == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_missing_corpus_file(self, tmp_path):
        assert run(["stats", "--corpus", tmp_path / "nope.jsonl"]) == 1

    def test_malformed_corpus_line_is_a_data_error(self, tmp_path, caplog):
        path = tmp_path / "bad.jsonl"
        good = json.dumps(make_citation("c1").to_json())
        path.write_text(good + "\n{broken\n")
        assert run(["stats", "--corpus", path]) == 2
        assert any("line 2" in r.message for r in caplog.records)

    def test_corrupt_scorer_is_a_backend_error(self, workspace):
        blob = workspace / "junk.ptsc"
        blob.write_bytes(b"XXXX not a scorer")
        code = run(
            [
                "tag",
                "--corpus",
                workspace / "corpus.jsonl",
                "--vocabulary",
                workspace / "vocab.json",
                "--scorer",
                blob,
            ]
        )
        assert code == 3

    def test_empty_input_is_fine(self, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        assert run(["stats", "--corpus", empty]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["total_citations"] == 0


class TestCorpusCommands:
    def test_normalize_writes_clean_citations(self, tmp_path, capsys):
        src = tmp_path / "raw.jsonl"
        write_corpus(
            [make_citation("c1", title="A <b>bold</b> claim™", abstract="x  y")],
            src,
        )
        assert run(["normalize", "--corpus", src]) == 0
        row = json.loads(capsys.readouterr().out.strip())
        assert row["title"] == "A bold claim(TM)"
        assert row["abstract"] == "x y"

    def test_stats_writes_vocab_bootstrap(self, workspace, capsys):
        out_vocab = workspace / "auto-vocab.json"
        code = run(
            [
                "stats",
                "--corpus",
                workspace / "corpus.jsonl",
                "--write-vocab",
                out_vocab,
                "--base-label",
                "Journal Article",
            ]
        )
        assert code == 0
        loaded = LabelVocabulary.load(out_vocab)
        assert loaded.base_label == "Journal Article"
        assert set(loaded.labels) == {"Journal Article", "Review"}
        stats = json.loads(capsys.readouterr().out)
        assert stats["per_label_count"]["Journal Article"] == 20
        assert stats["per_label_count"]["Review"] == 20
        assert stats["tags_per_citation_histogram"] == {"1": 40}

    def test_stats_write_vocab_conflicts_with_vocabulary(self, workspace):
        code = run(
            [
                "stats",
                "--corpus",
                workspace / "corpus.jsonl",
                "--vocabulary",
                workspace / "vocab.json",
                "--write-vocab",
                workspace / "other.json",
            ]
        )
        assert code == 1

    def test_correlate_emits_a_square_matrix(self, workspace, capsys):
        code = run(
            [
                "correlate",
                "--corpus",
                workspace / "corpus.jsonl",
                "--vocabulary",
                workspace / "vocab.json",
            ]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["labels"] == ["Journal Article", "Review"]
        assert len(payload["values"]) == 2
        assert all(len(row) == 2 for row in payload["values"])
        # disjoint labels on a balanced corpus are perfectly anti-correlated
        assert payload["values"][0][1] == pytest.approx(-1.0)


class TestSplitCommand:
    def test_split_writes_a_partition(self, workspace):
        out = workspace / "partition.json"
        code = run(
            [
                "split",
                "--corpus",
                workspace / "corpus.jsonl",
                "--ratios",
                "0.8,0.1,0.1",
                "--seed",
                "7",
                "--output",
                out,
            ]
        )
        assert code == 0
        partition = Partition.load(out)
        assert len(partition.train) == 32
        assert len(partition.eval) == 4
        assert len(partition.test) == 4
        assert partition.seed == 7

    def test_bad_ratio_text_is_a_usage_error(self, workspace):
        code = run(
            ["split", "--corpus", workspace / "corpus.jsonl", "--ratios", "most,some"]
        )
        assert code == 1

    def test_verify_failure_exits_two_but_still_writes(self, tmp_path, caplog):
        # 10 bearers of a rare label cannot spread over 50/25/25 within a hair
        citations = [
            make_citation(f"c{i}", labels={"Rare"} if i < 10 else {"Common"})
            for i in range(20)
        ]
        src = tmp_path / "skew.jsonl"
        write_corpus(citations, src)
        vocab_path = tmp_path / "vocab.json"
        LabelVocabulary({"Common": 10, "Rare": 10}, base_label="Common").save(vocab_path)
        out = tmp_path / "partition.json"
        code = run(
            [
                "split",
                "--corpus",
                src,
                "--ratios",
                "0.5,0.25,0.25",
                "--vocabulary",
                vocab_path,
                "--verify-tolerance",
                "0.0001",
                "--output",
                out,
            ]
        )
        assert code == 2
        assert out.exists()
        assert any("exceed" in r.message for r in caplog.records)


class TestBinaryDatasets:
    def test_writes_one_file_per_label(self, workspace):
        out_dir = workspace / "datasets"
        code = run(
            [
                "binary-datasets",
                "--corpus",
                workspace / "corpus.jsonl",
                "--vocabulary",
                workspace / "vocab.json",
                "--output-dir",
                out_dir,
            ]
        )
        assert code == 0
        files = sorted(p.name for p in out_dir.glob("*.json"))
        assert files == ["journal_article.json", "review.json"]

    def test_impossible_label_is_skipped_with_a_warning(self, tmp_path, caplog):
        # every citation bears the label: no negatives exist
        citations = [make_citation(f"c{i}", labels={"Everywhere"}) for i in range(6)]
        src = tmp_path / "all.jsonl"
        write_corpus(citations, src)
        vocab_path = tmp_path / "vocab.json"
        LabelVocabulary({"Everywhere": 6}, base_label="Everywhere").save(vocab_path)
        out_dir = tmp_path / "datasets"
        code = run(
            [
                "binary-datasets",
                "--corpus",
                src,
                "--vocabulary",
                vocab_path,
                "--output-dir",
                out_dir,
            ]
        )
        assert code == 0
        assert not list(out_dir.glob("*.json"))
        assert any("Everywhere" in r.message for r in caplog.records)


@pytest.fixture
def trained(workspace):
    partition = workspace / "partition.json"
    assert (
        run(
            [
                "split",
                "--corpus",
                workspace / "corpus.jsonl",
                "--ratios",
                "0.8,0.1,0.1",
                "--output",
                partition,
            ]
        )
        == 0
    )
    model = workspace / "model.ptsc"
    code = run(
        [
            "train-ref",
            "--corpus",
            workspace / "corpus.jsonl",
            "--vocabulary",
            workspace / "vocab.json",
            "--partition",
            partition,
            "--epochs",
            "3",
            "--hash-dim",
            "4096",
            "--output",
            model,
        ]
    )
    assert code == 0
    return model


class TestModelRound:
    def test_train_tag_evaluate(self, workspace, trained, capsys):
        predictions = workspace / "predictions.jsonl"
        code = run(
            [
                "tag",
                "--corpus",
                workspace / "corpus.jsonl",
                "--vocabulary",
                workspace / "vocab.json",
                "--scorer",
                trained,
                "--output",
                predictions,
            ]
        )
        assert code == 0
        rows = [json.loads(l) for l in predictions.read_text().splitlines()]
        assert len(rows) == 40
        assert all(set(r) == {"id", "tags", "provenance"} for r in rows)

        code = run(
            [
                "evaluate",
                "--corpus",
                workspace / "corpus.jsonl",
                "--predictions",
                predictions,
                "--vocabulary",
                workspace / "vocab.json",
                "--format",
                "json",
            ]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert set(report["per_label"]) == {"Journal Article", "Review"}
        # the two classes are lexically separable, so the round trip is strong
        assert report["micro"]["f1"] > 0.9

    def test_tag_dump_inputs(self, workspace, trained):
        dump = workspace / "inputs.jsonl"
        out = workspace / "tags.jsonl"
        code = run(
            [
                "tag",
                "--corpus",
                workspace / "corpus.jsonl",
                "--vocabulary",
                workspace / "vocab.json",
                "--scorer",
                trained,
                "--dump-inputs",
                dump,
                "--output",
                out,
            ]
        )
        assert code == 0
        dumped = [json.loads(l) for l in dump.read_text().splitlines()]
        assert len(dumped) == 40
        assert all(set(d) == {"id", "text", "truncated"} for d in dumped)
        assert all("<1>" in d["text"] and "<2>" in d["text"] for d in dumped)

    def test_tag_is_deterministic_across_worker_counts(self, workspace, trained):
        outputs = []
        for workers in ("1", "3"):
            out = workspace / f"tags-{workers}.jsonl"
            code = run(
                [
                    "tag",
                    "--corpus",
                    workspace / "corpus.jsonl",
                    "--vocabulary",
                    workspace / "vocab.json",
                    "--scorer",
                    trained,
                    "--workers",
                    workers,
                    "--output",
                    out,
                ]
            )
            assert code == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_tune_thresholds_output(self, workspace, trained, capsys):
        code = run(
            [
                "tune-thresholds",
                "--corpus",
                workspace / "corpus.jsonl",
                "--vocabulary",
                workspace / "vocab.json",
                "--scorer",
                trained,
            ]
        )
        assert code == 0
        thresholds = json.loads(capsys.readouterr().out)
        assert set(thresholds) <= {"Journal Article", "Review"}
        assert all(0.0 <= t <= 1.0 for t in thresholds.values())

    def test_binary_dataset_training(self, workspace):
        out_dir = workspace / "datasets"
        assert (
            run(
                [
                    "binary-datasets",
                    "--corpus",
                    workspace / "corpus.jsonl",
                    "--vocabulary",
                    workspace / "vocab.json",
                    "--label",
                    "Review",
                    "--output-dir",
                    out_dir,
                ]
            )
            == 0
        )
        model = workspace / "review.ptsc"
        code = run(
            [
                "train-ref",
                "--corpus",
                workspace / "corpus.jsonl",
                "--vocabulary",
                workspace / "vocab.json",
                "--binary-dataset",
                out_dir / "review.json",
                "--epochs",
                "3",
                "--hash-dim",
                "4096",
                "--output",
                model,
            ]
        )
        assert code == 0
        from pubtagger import load_scorer

        descriptor = load_scorer(model).descriptor()
        assert descriptor.kind == "binary"
        assert descriptor.vocabulary == ("Review",)


class TestSweepAndBench:
    def test_sweep_prints_thirty_rows(self, workspace, trained, capsys):
        code = run(
            [
                "sweep",
                "--corpus",
                workspace / "corpus.jsonl",
                "--vocabulary",
                workspace / "vocab.json",
                "--scorer",
                trained,
                "--format",
                "json",
            ]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["rows"]) == 30
        assert "definition" in payload

    def test_bench_with_stub_ensemble(self, capsys):
        code = run(["bench", "--stub-ensemble", "4", "--n", "64", "--format", "json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["citations"] == 64
        assert len(payload["per_scorer_seconds"]) == 4

    def test_bench_with_stub_monolithic(self, capsys):
        code = run(["bench", "--stub-monolithic", "8", "--n", "32"])
        assert code == 0
        assert "citations processed: 32" in capsys.readouterr().out

    def test_bench_rejects_stub_plus_scorer(self, workspace, trained):
        code = run(
            ["bench", "--stub-ensemble", "2", "--scorer", trained, "--n", "16"]
        )
        assert code == 1

    def test_bench_needs_some_scorer(self):
        assert run(["bench", "--n", "16"]) == 1
