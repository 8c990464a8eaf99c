"""Lightweight counters on the training code path.

The online serving phase must never run training math. These counters are
bumped by the training-side operations (posterior updates, loss evaluations,
split selection) so tests and operators can assert that a serving process
leaves them untouched.
"""

from __future__ import annotations

import threading
from collections import Counter


class TrainingCounters:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._counts: Counter[str] = Counter()

    def bump(self, name: str, k: int = 1) -> None:
        with self._lock:
            self._counts[name] += k

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return dict(self._counts)

    def reset(self) -> None:
        with self._lock:
            self._counts.clear()


counters = TrainingCounters()
