"""Deterministic parallel trial execution.

Trial ``k`` of a task always draws from ``substream(seed, stream_key, N, k)``
so results do not depend on the number of workers or their scheduling.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..rng import seed_words, substream

__all__ = ["stream_key", "ResultSink", "run_trials", "TooManyFailures"]

MAX_FAILURE_RATE = 0.001


class TooManyFailures(RuntimeError):
    pass


def stream_key(label: str) -> int:
    return zlib.crc32(label.encode())


@dataclass
class ResultSink:
    """Append-only collection of per-trial rows; merge-on-close sorts by key."""

    rows: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def add(self, key, row):
        if key in self.rows:
            raise KeyError(f"duplicate trial {key}")
        self.rows[key] = row

    def merge(self, other: "ResultSink") -> "ResultSink":
        out = ResultSink(dict(self.rows), list(self.failures))
        for k, v in other.rows.items():
            out.add(k, v)
        out.failures.extend(other.failures)
        return out

    def ordered(self) -> list:
        return [self.rows[k] for k in sorted(self.rows)]


def _chunks(n, parts):
    parts = max(1, min(parts, n))
    bounds = [round(i * n / parts) for i in range(parts + 1)]
    return [range(bounds[i], bounds[i + 1]) for i in range(parts)]


def run_trials(fn, trials: int, seed: int, label: str, N: int, threads: int = 1, recoverable=()) -> ResultSink:
    """Run ``fn(k, rng) -> dict`` for ``k in range(trials)``.

    Exceptions of the ``recoverable`` types are counted as failures; more
    than 0.1% of failed trials raises :class:`TooManyFailures`.
    """
    key = stream_key(label)

    def work(block):
        sink = ResultSink()
        for k in block:
            try:
                row = fn(k, substream(seed, key, N, k))
            except recoverable as exc:
                sink.failures.append((k, repr(exc)))
                continue
            row.setdefault("trial", k)
            row.setdefault("N", N)
            row["seed_lo"], row["seed_hi"] = seed_words(seed, key, N, k)
            sink.add(k, row)
        return sink

    blocks = _chunks(trials, threads)
    if threads == 1:
        partials = [work(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(work, blocks))
    total = ResultSink()
    for p in partials:
        total = total.merge(p)
    if len(total.failures) > MAX_FAILURE_RATE * trials:
        raise TooManyFailures(f"{len(total.failures)} of {trials} trials failed for {label!r} at N={N}")
    return total
