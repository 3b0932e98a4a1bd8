"""Shared fixtures and hooks for the adapter suite.

A tiny randomly initialized checkpoint (fixed seed, built once per session)
stands in for a real language model so everything runs offline and fast.
Tests marked ``@pytest.mark.acceptance(name, detail)`` assert one release
criterion each; their outcomes are echoed as one line per criterion after
the normal pytest summary so a teed log carries explicit verdicts.
"""

import pytest
import torch
from transformers import GPT2Config, GPT2LMHeadModel

MODEL_SEED = 20260816
VOCAB_SIZE = 97
PROMPT = [3, 14, 15, 92, 6, 53]


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory) -> str:
    torch.manual_seed(MODEL_SEED)
    config = GPT2Config(
        vocab_size=VOCAB_SIZE,
        n_positions=128,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=0,
        eos_token_id=0,
    )
    path = tmp_path_factory.mktemp("checkpoint") / "tiny-lm"
    GPT2LMHeadModel(config).save_pretrained(path)
    return str(path)


_RESULTS: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(name, detail): test asserts one named acceptance "
        "criterion; its outcome is echoed in the terminal summary",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    name = marker.args[0]
    detail = marker.args[1] if len(marker.args) > 1 else ""
    if hasattr(report, "wasxfail"):
        status = "FAIL (expected)" if report.skipped else "PASS (unexpectedly)"
    elif report.passed:
        status = "PASS"
    elif report.failed:
        status = "FAIL"
    else:
        status = "SKIPPED"
    _RESULTS[name] = (status, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, (status, detail) in _RESULTS.items():
        suffix = f" — {detail}" if detail else ""
        terminalreporter.write_line(f"ACCEPTANCE: {status:<15s} {name}{suffix}")
