"""Trace serialization: round-trips, wire format, and parse errors."""

import json

import numpy as np
import pytest

from resdec import (
    ParseError,
    SyntheticTaskSpec,
    Trace,
    TraceHeader,
    generate_trace,
    load_trace,
    read_trace,
    save_trace,
    traces_equal,
    write_trace,
)
from resdec.records import ORIGIN_GENERATED, ORIGIN_PREFILL, StepRecord
from resdec.traceio import TRACE_FORMAT


def _tiny_trace(with_prefill=False):
    records = []
    if with_prefill:
        records.append(
            StepRecord(
                step_index=0,
                origin=ORIGIN_PREFILL,
                token_ids=np.array([2, 0]),
                logits=np.array([-0.5, -1.5]),
                floor_logit=-1.5,
            )
        )
    records.append(
        StepRecord(
            step_index=1,
            origin=ORIGIN_GENERATED,
            token_ids=np.array([1, 3]),
            logits=np.array([-0.25, -2.0]),
            floor_logit=-2.0,
            chosen_token=1,
        )
    )
    header = TraceHeader(
        vocab_size=8, top_m=4, label=1, answer_step=1, source="test:tiny"
    )
    return Trace(header=header, records=records)


class TestRoundTrip:
    def test_tiny_trace(self, tmp_path):
        path = tmp_path / "t.jsonl"
        trace = _tiny_trace(with_prefill=True)
        write_trace(trace, path)
        back = read_trace(path)
        assert traces_equal(trace, back)

    def test_simulator_trace_exact(self, tmp_path):
        path = tmp_path / "sim.jsonl"
        trace = generate_trace(SyntheticTaskSpec(), seed=4)
        write_trace(trace, path)
        back = read_trace(path)
        assert traces_equal(trace, back)
        for ra, rb in zip(trace.records, back.records):
            np.testing.assert_array_equal(ra.logits, rb.logits)  # bitwise

    def test_write_is_byte_stable(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        trace = generate_trace(SyntheticTaskSpec(), seed=9)
        write_trace(trace, a)
        write_trace(trace, b)
        assert a.read_bytes() == b.read_bytes()

    def test_aliases_match(self, tmp_path):
        assert save_trace is write_trace
        assert load_trace is read_trace


class TestWireFormat:
    def test_header_line(self, tmp_path):
        path = tmp_path / "t.jsonl"
        write_trace(_tiny_trace(), path)
        lines = path.read_text().splitlines()
        head = json.loads(lines[0])
        assert head == {
            "format": TRACE_FORMAT,
            "vocab_size": 8,
            "top_m": 4,
            "label": 1,
            "answer_step": 1,
            "source": "test:tiny",
        }

    def test_record_lines(self, tmp_path):
        path = tmp_path / "t.jsonl"
        write_trace(_tiny_trace(with_prefill=True), path)
        lines = path.read_text().splitlines()
        assert json.loads(lines[1]) == {
            "step": 0,
            "origin": "prefill",
            "topk": [[2, -0.5], [0, -1.5]],
            "chosen": None,
        }
        assert json.loads(lines[2])["origin"] == "gen"

    def test_unix_newlines(self, tmp_path):
        path = tmp_path / "t.jsonl"
        write_trace(_tiny_trace(), path)
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")


class TestParseErrors:
    def _write(self, tmp_path, lines):
        path = tmp_path / "bad.jsonl"
        path.write_text("\n".join(lines) + "\n")
        return path

    def _good_header(self):
        return json.dumps(
            {"format": TRACE_FORMAT, "vocab_size": 8, "top_m": 4,
             "label": None, "answer_step": None, "source": "t"}
        )

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        with pytest.raises(ParseError, match="line 1"):
            read_trace(path)

    def test_invalid_json_reports_line_number(self, tmp_path):
        path = self._write(tmp_path, [self._good_header(), "{not json"])
        with pytest.raises(ParseError, match="line 2"):
            read_trace(path)

    def test_wrong_format_tag(self, tmp_path):
        path = self._write(
            tmp_path, [json.dumps({"format": "other/9", "vocab_size": 8, "top_m": 4})]
        )
        with pytest.raises(ParseError, match="unsupported format"):
            read_trace(path)

    def test_missing_header_field(self, tmp_path):
        path = self._write(tmp_path, [json.dumps({"format": TRACE_FORMAT})])
        with pytest.raises(ParseError, match="line 1"):
            read_trace(path)

    def test_malformed_record_reports_line(self, tmp_path):
        path = self._write(
            tmp_path,
            [self._good_header(), json.dumps({"step": 1, "origin": "gen"})],
        )
        with pytest.raises(ParseError, match="line 2"):
            read_trace(path)

    def test_token_id_outside_vocab(self, tmp_path):
        rec = {"step": 1, "origin": "gen", "topk": [[8, -0.1]], "chosen": None}
        path = self._write(tmp_path, [self._good_header(), json.dumps(rec)])
        with pytest.raises(ParseError, match="vocab_size"):
            read_trace(path)

    def test_topk_longer_than_header(self, tmp_path):
        rec = {
            "step": 1,
            "origin": "gen",
            "topk": [[i, -float(i)] for i in range(5)],
            "chosen": None,
        }
        path = self._write(tmp_path, [self._good_header(), json.dumps(rec)])
        with pytest.raises(ParseError, match="top_m"):
            read_trace(path)

    def test_unsorted_topk_rejected(self, tmp_path):
        rec = {"step": 1, "origin": "gen", "topk": [[0, -2.0], [1, -1.0]],
               "chosen": None}
        path = self._write(tmp_path, [self._good_header(), json.dumps(rec)])
        with pytest.raises(ParseError, match="line 2"):
            read_trace(path)

    def test_answer_step_without_record(self, tmp_path):
        head = json.dumps(
            {"format": TRACE_FORMAT, "vocab_size": 8, "top_m": 4,
             "label": 1, "answer_step": 5, "source": "t"}
        )
        rec = {"step": 1, "origin": "gen", "topk": [[0, -0.5]], "chosen": 0}
        path = self._write(tmp_path, [head, json.dumps(rec)])
        with pytest.raises(ParseError, match="answer_step"):
            read_trace(path)
