"""Trace file format: one JSON object per line, header first.

Header: {"format":"resdec-trace/1","vocab_size":int,"top_m":int,
"label":int|null,"answer_step":int|null,"source":string}
Records: {"step":int,"origin":"prefill"|"gen","topk":[[id,logprob],...],
"chosen":int|null} with logprobs normalized (nats) and topk sorted by
descending logprob. UTF-8, LF line endings. Round trips are lossless
(floats serialize via shortest-repr).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from resdec.errors import OrderingError, ParseError, ResDecError
from resdec.records import ORIGIN_GENERATED, ORIGIN_PREFILL, StepRecord

TRACE_FORMAT = "resdec-trace/1"

_ORIGIN_TO_WIRE = {ORIGIN_PREFILL: "prefill", ORIGIN_GENERATED: "gen"}
_WIRE_TO_ORIGIN = {"prefill": ORIGIN_PREFILL, "gen": ORIGIN_GENERATED}


@dataclass
class TraceHeader:
    vocab_size: int
    top_m: int
    label: int | None = None
    answer_step: int | None = None
    source: str = ""


@dataclass(eq=False)
class Trace:
    header: TraceHeader
    records: list[StepRecord] = field(default_factory=list)

    @property
    def vocab_size(self) -> int:
        return self.header.vocab_size

    @property
    def label(self) -> int | None:
        return self.header.label

    @property
    def answer_step(self) -> int | None:
        return self.header.answer_step

    def generated_records(self) -> list[StepRecord]:
        return [r for r in self.records if r.origin == ORIGIN_GENERATED]

    def prefill_records(self) -> list[StepRecord]:
        return [r for r in self.records if r.origin == ORIGIN_PREFILL]

    def record_at_step(self, step: int) -> StepRecord:
        for rec in self.records:
            if rec.step_index == step:
                return rec
        raise KeyError(f"no record at step {step}")


def _check_order(records: list[StepRecord]) -> None:
    seen_generated = False
    prev_prefill: int | None = None
    prev_gen: int | None = None
    for rec in records:
        if rec.origin == ORIGIN_PREFILL:
            if seen_generated:
                raise OrderingError("prefill record after generated records")
            if prev_prefill is not None and rec.step_index <= prev_prefill:
                raise OrderingError(f"prefill steps out of order at {rec.step_index}")
            prev_prefill = rec.step_index
        else:
            seen_generated = True
            if prev_gen is not None and rec.step_index <= prev_gen:
                raise OrderingError(f"generated steps out of order at {rec.step_index}")
            prev_gen = rec.step_index


def write_trace(trace: Trace, path) -> None:
    h = trace.header
    _check_order(trace.records)
    lines = [
        json.dumps(
            {
                "format": TRACE_FORMAT,
                "vocab_size": h.vocab_size,
                "top_m": h.top_m,
                "label": h.label,
                "answer_step": h.answer_step,
                "source": h.source,
            },
            separators=(",", ":"),
            ensure_ascii=False,
        )
    ]
    for rec in trace.records:
        lines.append(
            json.dumps(
                {
                    "step": rec.step_index,
                    "origin": _ORIGIN_TO_WIRE[rec.origin],
                    "topk": [[int(i), float(v)] for i, v in zip(rec.token_ids, rec.logits)],
                    "chosen": rec.chosen_token,
                },
                separators=(",", ":"),
                ensure_ascii=False,
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_json_line(line: str, lineno: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"line {lineno}: expected a JSON object")
    return obj


def read_trace(path) -> Trace:
    with open(path, "r", encoding="utf-8") as fh:
        raw_lines = fh.read().split("\n")
    if raw_lines and raw_lines[-1] == "":
        raw_lines.pop()
    if not raw_lines:
        raise ParseError("line 1: missing header")

    head = _parse_json_line(raw_lines[0], 1)
    if head.get("format") != TRACE_FORMAT:
        raise ParseError(f"line 1: unsupported format {head.get('format')!r}")
    try:
        header = TraceHeader(
            vocab_size=int(head["vocab_size"]),
            top_m=int(head["top_m"]),
            label=None if head.get("label") is None else int(head["label"]),
            answer_step=None if head.get("answer_step") is None else int(head["answer_step"]),
            source=str(head.get("source", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"line 1: malformed header ({exc!r})") from exc

    records: list[StepRecord] = []
    for lineno, line in enumerate(raw_lines[1:], start=2):
        obj = _parse_json_line(line, lineno)
        try:
            origin = _WIRE_TO_ORIGIN[obj["origin"]]
            topk = obj["topk"]
            ids = np.array([int(pair[0]) for pair in topk], dtype=np.int64)
            vals = np.array([float(pair[1]) for pair in topk], dtype=np.float64)
            chosen = obj.get("chosen")
            rec = StepRecord(
                step_index=int(obj["step"]),
                origin=origin,
                token_ids=ids,
                logits=vals,
                floor_logit=float(vals[-1]) if vals.size else 0.0,
                chosen_token=None if chosen is None else int(chosen),
            )
        except OrderingError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"line {lineno}: malformed record ({exc!r})") from exc
        except ResDecError as exc:
            raise ParseError(f"line {lineno}: invalid record ({exc})") from exc
        if ids.size > header.top_m:
            raise ParseError(f"line {lineno}: topk longer than header top_m")
        if np.any(ids >= header.vocab_size):
            raise ParseError(f"line {lineno}: token id outside vocab_size")
        records.append(rec)

    _check_order(records)
    if header.answer_step is not None and records:
        steps = {r.step_index for r in records}
        if header.answer_step not in steps:
            raise ParseError("header answer_step has no matching record")
    return Trace(header=header, records=records)


def traces_equal(a: Trace, b: Trace) -> bool:
    """Structural equality (exact float match)."""
    if (
        a.header.vocab_size != b.header.vocab_size
        or a.header.top_m != b.header.top_m
        or a.header.label != b.header.label
        or a.header.answer_step != b.header.answer_step
        or a.header.source != b.header.source
        or len(a.records) != len(b.records)
    ):
        return False
    for ra, rb in zip(a.records, b.records):
        if (
            ra.step_index != rb.step_index
            or ra.origin != rb.origin
            or ra.chosen_token != rb.chosen_token
            or ra.floor_logit != rb.floor_logit
            or not np.array_equal(ra.token_ids, rb.token_ids)
            or not np.array_equal(ra.logits, rb.logits)
        ):
            return False
    return True


# Naming used elsewhere in the package.
save_trace = write_trace
load_trace = read_trace
