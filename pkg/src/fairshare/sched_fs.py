"""Two-level fair-share scheduler.

User level, every ``usage_window_ms``::

    usage[u] = usage[u] * decay_usage + cost[u];  cost[u] = 0

where each tick a user runs charges ``cost[u] += tick_ms / shares[u]``.

Process level, every ``pri_window_ms`` all processes (sleeping ones too)
forget part of their priority::

    sharepri[k] *= pri_a * nice[k] + pri_b

and every tick the running user's priority grows by
``usage[u] * p_active[u]``, where ``p_active`` counts the user's ready or
running processes. How that increment lands on processes is selectable:

``user`` (default)
    the running user's debt ``usage[u] * p_active[u] / shares[u]`` is spread
    evenly over its ``p_active`` processes, so each gains
    ``usage[u] / shares[u]``. Every process carries the user's debt, the
    dispatcher equalises ``(f_u / shares_u)**2`` across users and CPU
    fractions settle proportional to shares whatever the process counts.
``running``
    only the process on the CPU gains ``usage[u] * p_active[u] / shares[u]``.
    Same equilibrium on average, but a user whose processes each run less
    than once per ``pri_window_ms`` sees their priority decay to nothing
    between turns and drifts above its share.
``all_ready``
    every ready or running process gains ``usage[u] * p_active[u]`` whether
    or not its user ran. Which process ran has no effect on priorities, so
    control only acts at the usage window and consumption oscillates well
    away from the share split.

Dispatch picks the minimum ``sharepri``, FIFO among equals. Each user has
its own heap; queued processes store ``sharepri - offset[u]`` so a per-user
increment is one addition, and equal priorities stay bit-for-bit equal.
"""

from __future__ import annotations

import heapq
from collections import deque
from typing import TYPE_CHECKING, Sequence

from .domain import FsParams

if TYPE_CHECKING:
    from .simcore import Process

_LIVE = ("ready", "running")


class FairShareScheduler:
    policy = "fs"

    def __init__(
        self,
        params: FsParams,
        shares: Sequence[int],
        tick_ms: int = 10,
        quantum_ms: int = 10,
        caps: Sequence[float | None] | None = None,
    ):
        n = len(shares)
        self.params = params
        self.tick_ms = tick_ms
        self.quantum_ms = quantum_ms
        self.shares = list(shares)
        self.usage = [0.0] * n
        self.cost = [0.0] * n
        self.p_active = [0] * n
        self.procs: list[Process] = []
        self._heaps: list[list[tuple[float, int, Process]]] = [[] for _ in range(n)]
        self._offset = [0.0] * n
        # largest key queued per user since it last went idle; in lazy modes a
        # wakeup or requeue never lands ahead of it, so a user's own processes
        # take turns round-robin while the debt decides between users
        self._tail = [float("-inf")] * n
        self._seq = 0
        self._mode = params.adjust
        self._lazy = params.adjust != "running"  # live processes hold sharepri as key + offset

        # cap accounting: start times of busy ticks inside the trailing usage window
        self.caps = list(caps) if caps is not None else [None] * n
        self._capped = [c is not None and c < 1.0 for c in self.caps]
        self._budget = [
            c * params.usage_window_ms if c is not None else float("inf") for c in self.caps
        ]
        self._busy_ticks: list[deque[int]] = [deque() for _ in range(n)]
        self._now = 0

    def register(self, proc: "Process") -> None:
        proc.sharepri = 0.0
        proc._key = 0.0
        proc._off = 0.0
        self.procs.append(proc)

    def sharepri(self, proc: "Process") -> float:
        if self._lazy and proc.state in _LIVE:
            return proc._key + self._offset[proc.uid]
        return proc.sharepri

    def _materialize(self) -> None:
        if not self._lazy:
            return
        for p in self.procs:
            if p.state in _LIVE:
                p.sharepri = p._key + self._offset[p.uid]

    # user level

    def charge_tick(self, uid: int) -> None:
        self.cost[uid] += self.tick_ms / self.shares[uid]

    def decay_usage(self) -> None:
        d = self.params.decay_usage
        for u in range(len(self.usage)):
            self.usage[u] *= d
            self.usage[u] += self.cost[u]
            self.cost[u] = 0.0

    # process level

    def decay_sharepri(self) -> None:
        pa, pb = self.params.pri_a, self.params.pri_b
        self._materialize()
        for p in self.procs:
            p.sharepri *= pa * p.nice + pb
            p._key = p.sharepri
            p._off = 0.0
        for uid, heap in enumerate(self._heaps):
            self._offset[uid] = 0.0
            heap[:] = [(p._key, seq, p) for _, seq, p in heap]
            heapq.heapify(heap)
            self._tail[uid] = max((k for k, _, _ in heap), default=float("-inf"))

    def tick_adjust(self, running: "Process | None") -> None:
        if running is None:
            return
        uid = running.uid
        if self._mode == "user":
            self._offset[uid] += self.usage[uid] / self.shares[uid]
        elif self._mode == "running":
            running.sharepri += self.usage[uid] * self.p_active[uid] / self.shares[uid]
        else:
            for u, n in enumerate(self.p_active):
                if n:
                    self._offset[u] += self.usage[u] * n

    # capping

    def eligible(self, uid: int, t: int | None = None) -> bool:
        """False while one more tick would push the user over its cap."""
        if not self._capped[uid]:
            return True
        t = self._now if t is None else t
        q = self._busy_ticks[uid]
        horizon = t - self.params.usage_window_ms
        while q and q[0] < horizon:
            q.popleft()
        return (len(q) + 1) * self.tick_ms <= self._budget[uid] + 1e-9

    def has_held(self) -> bool:
        return any(
            self._capped[u] and self._heaps[u] and not self.eligible(u)
            for u in range(len(self._heaps))
        )

    # engine hooks

    def _push(self, proc: "Process") -> None:
        if self._lazy:
            uid = proc.uid
            if proc._key < self._tail[uid]:
                proc._key = self._tail[uid]
            else:
                self._tail[uid] = proc._key
        self._seq += 1
        proc.seq = self._seq
        heapq.heappush(self._heaps[proc.uid], (proc._key, self._seq, proc))

    def wake(self, proc: "Process", slept_ms: int | None = None) -> None:
        self.p_active[proc.uid] += 1
        if not self._lazy:
            proc._key = proc.sharepri
        elif proc._off != self._offset[proc.uid]:
            proc._key = proc.sharepri - self._offset[proc.uid]
        self._push(proc)

    def block(self, proc: "Process") -> None:
        if self._lazy:
            proc.sharepri = proc._key + self._offset[proc.uid]
            proc._off = self._offset[proc.uid]
        self.p_active[proc.uid] -= 1
        if not self.p_active[proc.uid]:
            self._tail[proc.uid] = float("-inf")

    def has_ready(self) -> bool:
        return any(self._heaps)

    def select_next(self, t: int | None = None) -> "Process | None":
        """Lowest sharepri among eligible users' queued processes, or None."""
        if t is not None:
            self._now = t
        best = None
        best_key = None
        for uid, heap in enumerate(self._heaps):
            if not heap or (self._capped[uid] and not self.eligible(uid)):
                continue
            key = (heap[0][0] + self._offset[uid], heap[0][1])
            if best_key is None or key < best_key:
                best, best_key = uid, key
        if best is None:
            return None
        proc = heapq.heappop(self._heaps[best])[2]
        proc.quantum_left = self.quantum_ms
        return proc

    def on_tick(self, proc: "Process", t: int | None = None) -> None:
        uid = proc.uid
        self.charge_tick(uid)
        self.tick_adjust(proc)
        proc.quantum_left -= self.tick_ms
        if self._capped[uid]:
            self._busy_ticks[uid].append(self._now if t is None else t)

    def on_quantum_expiry(self, proc: "Process") -> None:
        proc.quantum_left = self.quantum_ms
        if not self._lazy:
            proc._key = proc.sharepri
        self._push(proc)

    def periodic(self, t: int) -> None:
        self._now = t
        if t <= 0:
            return
        if t % self.params.usage_window_ms == 0:
            self.decay_usage()
        if t % self.params.pri_window_ms == 0:
            self.decay_sharepri()

    def next_boundary(self, t: int) -> int:
        uw, pw = self.params.usage_window_ms, self.params.pri_window_ms
        return min((t // uw + 1) * uw, (t // pw + 1) * pw)

    def ready(self, uid: int) -> list["Process"]:
        return [p for _, _, p in sorted(self._heaps[uid], key=lambda e: e[:2])]
