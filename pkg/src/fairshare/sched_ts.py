"""Generic UNIX time-share scheduler.

Round-robin over a single run queue ordered by a decayed recent-CPU
priority (lower is better)::

    priority = base + cpu_weight * recent_cpu + nice_weight * nice

clamped above at ``levels - 1``. The running process gains one unit of
recent_cpu per tick; every second all recent_cpu values are multiplied by
``decay_per_s``. A process whose quantum expires goes to the back of its
priority level. Ownership never enters a decision.

With ``sleep_reset`` (the default) a process that wakes from a real sleep
starts with recent_cpu at zero, the usual interactive boost. Without it the
per-process decay alone equalises CPU rates between processes and short
interactive transactions gain nothing over long ones.

Priorities of waiting processes only move at the once-a-second decay, so
the heap is rebuilt there and nowhere else; the per-tick rescan is
implicit.
"""

from __future__ import annotations

import heapq
from typing import TYPE_CHECKING

from .domain import TsParams

if TYPE_CHECKING:
    from .simcore import Process

BASE_PRIORITY = 0.0
DECAY_PERIOD_MS = 1000


def ts_priority(recent_cpu: float, nice: int, params: TsParams) -> float:
    p = BASE_PRIORITY + params.cpu_weight * recent_cpu + params.nice_weight * nice
    return min(p, params.levels - 1)


class TimeShareScheduler:
    policy = "ts"

    def __init__(self, params: TsParams, n_users: int, tick_ms: int = 10, quantum_ms: int = 10):
        self.params = params
        self.tick_ms = tick_ms
        self.quantum_ms = quantum_ms
        self.p_active = [0] * n_users
        self.procs: list[Process] = []
        self._heap: list[tuple[float, int, Process]] = []
        self._seq = 0

    def register(self, proc: "Process") -> None:
        proc.recent_cpu = 0.0
        self.procs.append(proc)

    def priority(self, proc: "Process") -> float:
        return ts_priority(proc.recent_cpu, proc.nice, self.params)

    def _push(self, proc: "Process") -> None:
        self._seq += 1
        proc.seq = self._seq
        heapq.heappush(self._heap, (self.priority(proc), self._seq, proc))

    # engine hooks

    def wake(self, proc: "Process", slept_ms: int | None = None) -> None:
        """Queue ``proc``; with ``sleep_reset`` a real sleep forgives its recent_cpu.

        ``slept_ms=0`` marks a process that went straight back to the run
        queue, which keeps its history.
        """
        self.p_active[proc.uid] += 1
        if self.params.sleep_reset and (slept_ms is None or slept_ms > 0):
            proc.recent_cpu = 0.0
        self._push(proc)

    def block(self, proc: "Process") -> None:
        self.p_active[proc.uid] -= 1

    def has_ready(self) -> bool:
        return bool(self._heap)

    def has_held(self) -> bool:
        return False

    def select_next(self, t: int = 0) -> "Process | None":
        """Best priority wins, FIFO among equals; None means idle."""
        if not self._heap:
            return None
        proc = heapq.heappop(self._heap)[2]
        proc.quantum_left = self.quantum_ms
        return proc

    def on_tick(self, proc: "Process", t: int = 0) -> None:
        proc.recent_cpu += 1.0
        proc.quantum_left -= self.tick_ms

    def on_quantum_expiry(self, proc: "Process") -> None:
        proc.quantum_left = self.quantum_ms
        self._push(proc)

    def decay_recent_cpu(self) -> None:
        d = self.params.decay_per_s
        for p in self.procs:
            p.recent_cpu *= d
        self._heap = [(self.priority(p), seq, p) for _, seq, p in self._heap]
        heapq.heapify(self._heap)

    def periodic(self, t: int) -> None:
        if t > 0 and t % DECAY_PERIOD_MS == 0:
            self.decay_recent_cpu()

    def next_boundary(self, t: int) -> int:
        return (t // DECAY_PERIOD_MS + 1) * DECAY_PERIOD_MS

    def ready(self) -> list["Process"]:
        """Waiting processes in dispatch order."""
        return [p for _, _, p in sorted(self._heap, key=lambda e: e[:2])]
