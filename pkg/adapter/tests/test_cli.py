"""Tests for the command-line front door (argument handling and exit codes)."""

import json

import pytest

from resdec_adapter.cli import EXIT_FAILURE, EXIT_OK, main

from conftest import PROMPT


class TestCli:
    def test_version_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "0.1.0" in capsys.readouterr().out

    def test_missing_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_bad_prompt_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["dump", "--model", "x", "--prompt", "1,zap", "--steps", "4", "-o", "t.jsonl"])
        assert exc.value.code == 2

    def test_empty_prompt_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["dump", "--model", "x", "--prompt", ",", "--steps", "4", "-o", "t.jsonl"])
        assert exc.value.code == 2

    def test_dump_writes_a_trace(self, model_dir, tmp_path, capsys):
        out = tmp_path / "cli.jsonl"
        code = main(
            [
                "dump",
                "--model",
                model_dir,
                "--prompt",
                ",".join(str(t) for t in PROMPT),
                "--steps",
                "4",
                "-o",
                str(out),
                "--top-m",
                "8",
                "--window",
                "2",
            ]
        )
        assert code == EXIT_OK
        lines = out.read_text(encoding="utf-8").splitlines()
        assert json.loads(lines[0])["format"] == "resdec-trace/1"
        assert len(lines) == 1 + 2 + 4

    def test_missing_checkpoint_fails_cleanly(self, tmp_path, capsys):
        code = main(
            [
                "dump",
                "--model",
                str(tmp_path / "nope"),
                "--prompt",
                "1,2",
                "--steps",
                "2",
                "-o",
                str(tmp_path / "t.jsonl"),
            ]
        )
        assert code == EXIT_FAILURE
        assert "error:" in capsys.readouterr().err

    def test_invalid_config_fails_cleanly(self, tmp_path, capsys):
        code = main(
            [
                "dump",
                "--model",
                str(tmp_path),
                "--top-m",
                "0",
                "--prompt",
                "1,2",
                "--steps",
                "2",
                "-o",
                str(tmp_path / "t.jsonl"),
            ]
        )
        assert code == EXIT_FAILURE
        assert "top_m" in capsys.readouterr().err
