"""Sparse per-step logit records and the bounded history buffer they live in.

A record keeps the top-M normalized logits of one step; tokens that fell
outside the retained set are reconstructed with the fill rule
(floor_logit - 1.0). Generated records live in a ring of fixed capacity;
prompt-phase records are kept separately (the last `capacity` positions)
and back-fill short windows early in generation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from resdec.errors import ConfigError, DimensionError, EmptyHistory, OrderingError
from resdec.pooling import top_k_by_score

ORIGIN_PREFILL = "prefill"
ORIGIN_GENERATED = "generated"

# A token absent from a record scores this far below the smallest retained
# logit: just under the record's resolution floor, but finite.
MISSING_FILL_OFFSET = 1.0


@dataclass
class StepRecord:
    """Top-M slice of one step's normalized logits.

    `token_ids`/`logits` are parallel arrays ordered by (logit descending,
    token id ascending); ids are unique; `floor_logit` is the smallest
    retained logit. Prefill steps have step_index <= 0, generated >= 1.
    """

    step_index: int
    origin: str
    token_ids: np.ndarray
    logits: np.ndarray
    floor_logit: float
    chosen_token: int | None = None
    _ids_ascending: np.ndarray = field(default=None, repr=False, compare=False)
    _logits_by_id: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.token_ids = np.asarray(self.token_ids, dtype=np.int64)
        self.logits = np.asarray(self.logits, dtype=np.float64)
        if self.origin not in (ORIGIN_PREFILL, ORIGIN_GENERATED):
            raise ConfigError(f"unknown record origin {self.origin!r}")
        if self.origin == ORIGIN_PREFILL and self.step_index > 0:
            raise OrderingError("prefill records must have step_index <= 0")
        if self.origin == ORIGIN_GENERATED and self.step_index < 1:
            raise OrderingError("generated records must have step_index >= 1")
        if self.token_ids.ndim != 1 or self.token_ids.shape != self.logits.shape:
            raise DimensionError("token_ids and logits must be parallel 1-D arrays")
        if self.token_ids.size == 0:
            raise DimensionError("a record must retain at least one entry")
        if not np.all(np.isfinite(self.logits)):
            raise DimensionError("record logits must be finite")
        if np.any(self.token_ids < 0):
            raise DimensionError("token ids must be nonnegative")
        dlog = np.diff(self.logits)
        if np.any(dlog > 0):
            raise DimensionError("record entries must be sorted by descending logit")
        tied = dlog == 0
        if np.any(tied) and not np.all(np.diff(self.token_ids)[tied] > 0):
            raise DimensionError("equal-logit entries must be sorted by ascending id")
        if np.unique(self.token_ids).size != self.token_ids.size:
            raise DimensionError("record token ids must be unique")
        if self.floor_logit > float(self.logits[-1]):
            raise DimensionError("floor_logit exceeds a retained logit")

    def _id_index(self) -> tuple[np.ndarray, np.ndarray]:
        if self._ids_ascending is None:
            order = np.argsort(self.token_ids, kind="stable")
            object.__setattr__(self, "_ids_ascending", self.token_ids[order])
            object.__setattr__(self, "_logits_by_id", self.logits[order])
        return self._ids_ascending, self._logits_by_id

    def pool_logits(self, pool_ids) -> np.ndarray:
        """Logits for `pool_ids` (in pool order); absent tokens take
        floor_logit - 1.0."""
        ids_sorted, logits_by_id = self._id_index()
        pool = np.asarray(pool_ids, dtype=np.int64)
        pos = np.searchsorted(ids_sorted, pool)
        pos_clipped = np.minimum(pos, ids_sorted.size - 1)
        found = ids_sorted[pos_clipped] == pool
        out = np.where(found, logits_by_id[pos_clipped], self.floor_logit - MISSING_FILL_OFFSET)
        return out

    def dense_logits(self, vocab_size: int, missing: float | None = None) -> np.ndarray:
        """Expand to a dense vector; absent tokens take `missing`
        (default: the fill rule)."""
        if np.any(self.token_ids >= vocab_size):
            raise DimensionError("record token id outside the vocabulary")
        fill = self.floor_logit - MISSING_FILL_OFFSET if missing is None else missing
        out = np.full(vocab_size, fill, dtype=np.float64)
        out[self.token_ids] = self.logits
        return out


def record_from_dense(
    step_index: int,
    origin: str,
    logprobs: np.ndarray,
    top_m: int,
    chosen_token: int | None = None,
) -> StepRecord:
    """Build a top-M record from a dense normalized logit vector."""
    if top_m < 1:
        raise ConfigError(f"top_m must be >= 1, got {top_m}")
    lp = np.asarray(logprobs, dtype=np.float64)
    ids = top_k_by_score(lp, top_m)
    vals = lp[ids]
    finite = np.isfinite(vals)
    if not np.all(finite):
        # Excluded (-inf) tokens carry no information worth retaining.
        ids, vals = ids[finite], vals[finite]
        if ids.size == 0:
            raise DimensionError("no finite logits to retain")
    return StepRecord(
        step_index=step_index,
        origin=origin,
        token_ids=ids,
        logits=vals,
        floor_logit=float(vals[-1]),
        chosen_token=chosen_token,
    )


class HistoryBuffer:
    """Ring of generated records plus a never-evicted prefill tail."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._generated: deque[StepRecord] = deque(maxlen=capacity)
        self._prefill: deque[StepRecord] = deque(maxlen=capacity)

    @property
    def generated_count(self) -> int:
        return len(self._generated)

    @property
    def prefill_count(self) -> int:
        return len(self._prefill)

    def newest_step(self) -> int | None:
        if self._generated:
            return self._generated[-1].step_index
        if self._prefill:
            return self._prefill[-1].step_index
        return None

    def push(self, rec: StepRecord) -> None:
        """Store a record; evicts the oldest generated record beyond
        capacity. Records must arrive in step order, prefill first."""
        if rec.origin == ORIGIN_PREFILL:
            if self._generated:
                raise OrderingError("prefill record pushed after generation started")
            if self._prefill and rec.step_index <= self._prefill[-1].step_index:
                raise OrderingError(
                    f"prefill step {rec.step_index} not after {self._prefill[-1].step_index}"
                )
            self._prefill.append(rec)
            return
        newest = self._generated[-1].step_index if self._generated else 0
        if rec.step_index <= newest:
            raise OrderingError(f"generated step {rec.step_index} not after {newest}")
        self._generated.append(rec)

    def window(self, t: int, w: int) -> list[StepRecord]:
        """Up to `w` most recent records with step_index < t, oldest first.

        Generated records are preferred; the prefill tail back-fills when
        generation is short. Errors when nothing qualifies.
        """
        if w < 2:
            raise ConfigError(f"window width must be >= 2, got {w}")
        gen = [r for r in self._generated if r.step_index < t]
        out = gen[-w:]
        need = w - len(out)
        if need > 0:
            pre = [r for r in self._prefill if r.step_index < t]
            out = pre[-need:] + out
        if not out:
            raise EmptyHistory(f"no history records before step {t}")
        return out

    def all_records(self) -> list[StepRecord]:
        return list(self._prefill) + list(self._generated)
