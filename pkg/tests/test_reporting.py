"""Tests for resdec.reporting: cell formatting, stable writers, figures."""

import json

import numpy as np

from resdec import DecodeConfig, SyntheticTaskSpec
from resdec.bench import build_bench_trace, run_bench
from resdec.harness import sweep_rows
from resdec.metrics import jsd_profile, offset_accuracy
from resdec.reporting import (
    figure_path_for,
    format_cell,
    render_accuracy_bars,
    render_bench,
    render_jsd_profile,
    render_offset_accuracy,
    render_sweep,
    write_csv,
    write_json,
)
from resdec.synthetic import generate_trace

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class TestFormatCell:
    def test_bool_before_float(self):
        # bool is a subclass of int, so its branch must win the dispatch.
        assert format_cell(True) == "1"
        assert format_cell(False) == "0"
        assert format_cell(np.True_) == "1"
        assert format_cell(np.False_) == "0"

    def test_floats_use_repr(self):
        assert format_cell(0.1) == "0.1"
        assert format_cell(1 / 3) == "0.3333333333333333"
        assert format_cell(np.float64(2.5)) == "2.5"
        assert format_cell(1.0) == "1.0"

    def test_ints(self):
        assert format_cell(42) == "42"
        assert format_cell(np.int64(-3)) == "-3"

    def test_none_is_empty(self):
        assert format_cell(None) == ""

    def test_strings_pass_through(self):
        assert format_cell("greedy") == "greedy"


class TestWriters:
    def test_csv_bytes(self, tmp_path):
        path = tmp_path / "out.csv"
        write_csv(path, ["name", "value", "flag"], [["a", 0.5, True], ["b", None, False]])
        assert path.read_bytes() == b"name,value,flag\na,0.5,1\nb,,0\n"

    def test_csv_byte_stable(self, tmp_path):
        rows = [[i, i / 7, i % 2 == 0] for i in range(10)]
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        write_csv(first, ["i", "x", "even"], rows)
        write_csv(second, ["i", "x", "even"], rows)
        assert first.read_bytes() == second.read_bytes()

    def test_json_sorted_keys_lf(self, tmp_path):
        path = tmp_path / "out.json"
        write_json(path, {"zebra": 1, "apple": [1, 2], "mid": {"b": 2, "a": 1}})
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")
        assert raw.index(b"apple") < raw.index(b"mid") < raw.index(b"zebra")
        assert json.loads(raw) == {"zebra": 1, "apple": [1, 2], "mid": {"b": 2, "a": 1}}

    def test_figure_path_swaps_suffix(self, tmp_path):
        assert figure_path_for("results/sweep.csv").name == "sweep.png"
        assert figure_path_for(tmp_path / "report.json") == tmp_path / "report.png"


def _assert_png(path):
    data = path.read_bytes()
    assert data[: len(_PNG_MAGIC)] == _PNG_MAGIC
    assert len(data) > 1000


class TestFigures:
    def test_accuracy_bars(self, tmp_path):
        path = tmp_path / "acc.png"
        render_accuracy_bars({"resdec": 1.0, "regular": 0.4}, "trial accuracy", path)
        _assert_png(path)

    def test_sweep(self, tmp_path):
        rows = sweep_rows(
            SyntheticTaskSpec(),
            alphas=[0.0, 0.5],
            betas=[0.1],
            pool_sizes=[8],
            windows=[8],
            strategies=["greedy"],
            n=2,
            top_m=12,
        )
        path = tmp_path / "sweep.png"
        render_sweep(rows, path)
        _assert_png(path)

    def test_offset_accuracy(self, tmp_path):
        spec = SyntheticTaskSpec()
        traces = [generate_trace(spec, seed) for seed in range(4)]
        report = offset_accuracy(traces, {spec.answer_token, spec.hallucination_token})
        path = tmp_path / "offsets.png"
        render_offset_accuracy(report, path)
        _assert_png(path)

    def test_jsd_profile(self, tmp_path):
        spec = SyntheticTaskSpec()
        profile = jsd_profile([generate_trace(spec, seed) for seed in range(4)], pool_k=8)
        path = tmp_path / "profile.png"
        render_jsd_profile(profile, path)
        _assert_png(path)

    def test_bench(self, tmp_path):
        trace = build_bench_trace(vocab_size=128, n_tokens=20, top_m=32, seed=0)
        report = run_bench(trace, DecodeConfig(pool_k=16, top_m=32), repetitions=1, warmup=0)
        path = tmp_path / "bench.png"
        render_bench(report, path)
        _assert_png(path)
