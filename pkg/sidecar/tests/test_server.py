"""Server behavior: model loading, the wire protocol, and the CLI surface.

The protocol tests drive a real served subprocess through the tagging
package's RemoteScorer client, which is the interface production traffic
uses.  Raw-pipe tests cover the malformed-request paths a well-behaved
client never exercises.
"""

from __future__ import annotations

import argparse
import json
import re
import shlex
import shutil
import subprocess
import sys
import threading

import pytest

from pubtagger.assembler import ModelInput
from pubtagger.remote import RemoteScorer

from pt_sidecar.cli import parse_listen
from pt_sidecar.model import SidecarError, TransformerScorer

from conftest import LABELS

WORDS = ("the", "a", "study", "of", "gene", "therapy", "review", "trial")


def sample_text(i: int) -> str:
    picks = [WORDS[(i >> k) % len(WORDS)] for k in range(3)]
    return f"j01<1>{picks[0]} {picks[1]}<2>{picks[2]} {i % 10}"


def mi(cid: str, text: str) -> ModelInput:
    return ModelInput(citation_id=cid, text=text, token_count=0, truncated=False)


def stdio_address(model_dir: str, *extra: str) -> str:
    parts = [shlex.quote(sys.executable), "-m", "pt_sidecar", "--model", shlex.quote(model_dir)]
    parts.extend(extra)
    return "stdio:" + " ".join(parts)


@pytest.fixture(scope="module")
def direct(model_dir: str) -> TransformerScorer:
    return TransformerScorer(model_dir)


@pytest.fixture(scope="module")
def served(model_dir: str):
    with RemoteScorer(stdio_address(model_dir)) as scorer:
        yield scorer


class TestTransformerScorer:
    def test_descriptor_shape(self, direct: TransformerScorer, model_dir: str):
        descriptor = direct.descriptor()
        assert descriptor["name"] == "checkpoint"
        assert descriptor["kind"] == "monolithic"
        assert descriptor["vocabulary"] == LABELS
        assert descriptor["validation_metrics"] is None

    def test_scores_cover_vocabulary_within_unit_interval(self, direct: TransformerScorer):
        rows = direct.score([sample_text(i) for i in range(5)])
        assert len(rows) == 5
        for row in rows:
            assert sorted(row) == sorted(LABELS)
            assert all(0.0 <= value <= 1.0 for value in row.values())

    def test_deterministic_on_cpu(self, direct: TransformerScorer):
        text = sample_text(3)
        assert direct.score([text]) == direct.score([text])

    def test_batching_does_not_change_scores(self, model_dir: str, direct: TransformerScorer):
        texts = [sample_text(i) for i in range(7)]
        small = TransformerScorer(model_dir, batch_size=3)
        batched = small.score(texts)
        singles = [direct.score([text])[0] for text in texts]
        for got, want in zip(batched, singles):
            for label in LABELS:
                # padding changes the matmul shapes, so allow float noise
                assert got[label] == pytest.approx(want[label], abs=1e-6)

    def test_separators_are_ordinary_text(self, direct: TransformerScorer):
        row = direct.score(["j01<1>a study of gene therapy<2>the review"])[0]
        assert sorted(row) == sorted(LABELS)

    def test_empty_batch(self, direct: TransformerScorer):
        assert direct.score([]) == []

    def test_long_text_is_truncated(self, model_dir: str):
        scorer = TransformerScorer(model_dir, max_length=8)
        row = scorer.score(["gene therapy " * 500])[0]
        assert all(0.0 <= value <= 1.0 for value in row.values())

    def test_validation_metrics_passthrough(self, model_dir: str, tmp_path):
        target = tmp_path / "with-metrics"
        shutil.copytree(model_dir, target)
        metrics = {"Review": {"precision": 0.91, "recall": 0.83, "f1": 0.868}}
        (target / "validation_metrics.json").write_text(json.dumps(metrics), encoding="utf-8")
        scorer = TransformerScorer(str(target))
        assert scorer.descriptor()["validation_metrics"] == metrics

    def test_corrupt_validation_metrics_rejected(self, model_dir: str, tmp_path):
        target = tmp_path / "bad-metrics"
        shutil.copytree(model_dir, target)
        (target / "validation_metrics.json").write_text("{not json", encoding="utf-8")
        with pytest.raises(SidecarError, match="cannot read"):
            TransformerScorer(str(target))

    def test_missing_directory(self, tmp_path):
        with pytest.raises(SidecarError, match="does not exist"):
            TransformerScorer(str(tmp_path / "nowhere"))

    def test_directory_without_model(self, tmp_path):
        (tmp_path / "notes.txt").write_text("not a checkpoint", encoding="utf-8")
        with pytest.raises(SidecarError, match="cannot load model"):
            TransformerScorer(str(tmp_path))

    def test_bad_batch_size(self, model_dir: str):
        with pytest.raises(SidecarError, match="batch size"):
            TransformerScorer(model_dir, batch_size=0)

    def test_bad_device(self, model_dir: str):
        with pytest.raises(SidecarError, match="device"):
            TransformerScorer(model_dir, device="warp-core")


class TestStdioChannel:
    def test_handshake_descriptor(self, served: RemoteScorer):
        descriptor = served.descriptor()
        assert descriptor.name == "checkpoint"
        assert descriptor.kind == "monolithic"
        assert descriptor.vocabulary == tuple(LABELS)

    def test_served_scores_match_direct(self, served: RemoteScorer, direct: TransformerScorer):
        texts = [sample_text(i) for i in range(6)]
        got = served.score_batch([mi(f"c{i}", text) for i, text in enumerate(texts)])
        want = [direct.score([text])[0] for text in texts]
        for vector, expected in zip(got, want):
            for label in LABELS:
                assert vector.scores[label] == pytest.approx(expected[label], abs=1e-9)

    def test_hundred_requests_in_order(self, served: RemoteScorer, direct: TransformerScorer):
        inputs = [mi(f"c{i:03d}", sample_text(i)) for i in range(100)]
        vectors = served.score_batch(inputs)
        assert [v.citation_id for v in vectors] == [m.citation_id for m in inputs]
        # spot-check the payloads, not just the ids
        for i in (0, 37, 99):
            expected = direct.score([inputs[i].text])[0]
            for label in LABELS:
                assert vectors[i].scores[label] == pytest.approx(expected[label], abs=1e-9)

    def test_empty_batch(self, served: RemoteScorer):
        assert served.score_batch([]) == []

    def test_batch_size_and_name_flags_stay_local(
        self, model_dir: str, served: RemoteScorer
    ):
        """Serving flags may rename the descriptor but never change scores."""
        address = stdio_address(model_dir, "--batch-size", "1", "--name", "tiny-override")
        texts = [sample_text(i) for i in range(4)]
        with RemoteScorer(address) as other:
            assert other.descriptor().name == "tiny-override"
            assert other.descriptor().vocabulary == tuple(LABELS)
            got = other.score_batch([mi(f"r{i}", text) for i, text in enumerate(texts)])
        want = served.score_batch([mi(f"r{i}", text) for i, text in enumerate(texts)])
        for vector, expected in zip(got, want):
            for label in LABELS:
                assert vector.scores[label] == pytest.approx(expected.scores[label], abs=1e-6)


@pytest.fixture(scope="module")
def channel(model_dir: str):
    process = subprocess.Popen(
        [sys.executable, "-m", "pt_sidecar", "--model", model_dir],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
        encoding="utf-8",
        bufsize=1,
    )
    handshake = json.loads(process.stdout.readline())
    yield process, handshake
    process.stdin.close()
    process.wait(timeout=30)


class TestRawProtocol:
    """Byte-level conformance, including requests no sane client sends."""

    def ask(self, process: subprocess.Popen, line: str) -> dict:
        process.stdin.write(line + "\n")
        process.stdin.flush()
        return json.loads(process.stdout.readline())

    def test_server_speaks_first(self, channel):
        _, handshake = channel
        assert handshake["protocol_version"] == 1
        assert handshake["descriptor"]["vocabulary"] == LABELS

    def test_pipelined_requests_answered_in_order(self, channel):
        process, _ = channel
        for i in range(100):
            process.stdin.write(json.dumps({"id": f"p{i:03d}", "text": sample_text(i)}) + "\n")
        process.stdin.flush()
        answered = [json.loads(process.stdout.readline()) for _ in range(100)]
        assert [r["id"] for r in answered] == [f"p{i:03d}" for i in range(100)]
        assert all("scores" in r for r in answered)

    def test_malformed_json_gets_error_and_channel_survives(self, channel):
        process, _ = channel
        response = self.ask(process, "{this is not json")
        assert response["id"] is None
        assert "not valid JSON" in response["error"]
        follow_up = self.ask(process, json.dumps({"id": "after", "text": "gene"}))
        assert follow_up["id"] == "after"
        assert "scores" in follow_up

    def test_non_object_request(self, channel):
        process, _ = channel
        response = self.ask(process, "[1, 2, 3]")
        assert response == {"id": None, "error": "request must be a JSON object"}

    def test_missing_id(self, channel):
        process, _ = channel
        response = self.ask(process, json.dumps({"text": "gene"}))
        assert response["id"] is None
        assert "'id'" in response["error"]

    def test_non_string_text_keeps_request_id(self, channel):
        process, _ = channel
        response = self.ask(process, json.dumps({"id": "q7", "text": 5}))
        assert response == {"id": "q7", "error": "request needs a string 'text'"}

    def test_blank_lines_are_ignored(self, channel):
        process, _ = channel
        process.stdin.write("\n   \n")
        response = self.ask(process, json.dumps({"id": "b1", "text": "trial"}))
        assert response["id"] == "b1"


@pytest.fixture(scope="module")
def tcp_server(model_dir: str):
    process = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "pt_sidecar",
            "--model",
            model_dir,
            "--listen",
            "tcp:127.0.0.1:0",
        ],
        stderr=subprocess.PIPE,
        text=True,
        encoding="utf-8",
    )
    lines: list[str] = []
    found = threading.Event()
    port_holder: list[int] = []

    def drain() -> None:
        # keep draining after the match so logging never blocks the server
        for line in process.stderr:
            lines.append(line)
            match = re.search(r"listening on tcp:[^:]+:(\d+)", line)
            if match and not found.is_set():
                port_holder.append(int(match.group(1)))
                found.set()

    collector = threading.Thread(target=drain, daemon=True)
    collector.start()
    if not found.wait(timeout=120):
        process.kill()
        pytest.fail(f"server never announced its port; stderr: {''.join(lines)}")
    yield f"tcp:127.0.0.1:{port_holder[0]}"
    process.terminate()
    process.wait(timeout=30)


class TestTcpChannel:
    def test_round_trip(self, tcp_server: str, direct: TransformerScorer):
        with RemoteScorer(tcp_server) as scorer:
            assert scorer.descriptor().vocabulary == tuple(LABELS)
            texts = [sample_text(i) for i in range(10)]
            vectors = scorer.score_batch([mi(f"t{i}", text) for i, text in enumerate(texts)])
            for vector, text in zip(vectors, texts):
                expected = direct.score([text])[0]
                for label in LABELS:
                    assert vector.scores[label] == pytest.approx(expected[label], abs=1e-9)

    def test_second_connection_gets_its_own_channel(self, tcp_server: str):
        with RemoteScorer(tcp_server) as first, RemoteScorer(tcp_server) as second:
            a = first.score_batch([mi("a", sample_text(1))])
            b = second.score_batch([mi("b", sample_text(2))])
            c = first.score_batch([mi("c", sample_text(3))])
        assert [v.citation_id for v in a + b + c] == ["a", "b", "c"]


class TestCliErrors:
    def run(self, *argv: str) -> subprocess.CompletedProcess:
        return subprocess.run(
            [sys.executable, "-m", "pt_sidecar", *argv],
            capture_output=True,
            text=True,
            timeout=120,
        )

    def test_missing_model_directory_exits_nonzero(self, tmp_path):
        result = self.run("--model", str(tmp_path / "nowhere"))
        assert result.returncode == 1
        assert "does not exist" in result.stderr

    def test_unloadable_model_exits_nonzero(self, tmp_path):
        (tmp_path / "weights.bin").write_bytes(b"\x00\x01 not a checkpoint")
        result = self.run("--model", str(tmp_path))
        assert result.returncode == 1
        assert "cannot load model" in result.stderr

    def test_bad_listen_value(self, tmp_path):
        result = self.run("--model", str(tmp_path), "--listen", "carrier-pigeon:coop:1")
        assert result.returncode == 2
        assert "usage" in result.stderr


class TestParseListen:
    def test_stdio(self):
        assert parse_listen("stdio") == ("stdio",)

    def test_tcp(self):
        assert parse_listen("tcp:127.0.0.1:8080") == ("tcp", "127.0.0.1", 8080)

    def test_tcp_port_zero_allowed(self):
        assert parse_listen("tcp:0.0.0.0:0") == ("tcp", "0.0.0.0", 0)

    def test_tcp_ipv6_host(self):
        assert parse_listen("tcp:::1:9000") == ("tcp", "::1", 9000)

    @pytest.mark.parametrize(
        "value",
        ["tcp:", "tcp:host", "tcp:host:", "tcp::1234", "tcp:host:notaport",
         "tcp:host:70000", "udp:host:1", ""],
    )
    def test_malformed(self, value: str):
        with pytest.raises(argparse.ArgumentTypeError, match="listen|tcp|port"):
            parse_listen(value)
