"""Deterministic tick-resolution simulation of closed interactive workloads.

Every process loops forever: think, then demand CPU, then think again.
A transaction's response time runs from the instant it becomes ready to
the end of the tick in which its demand is exhausted; think time is
excluded. Wakeups land on tick boundaries (think times round up). A
demand that ends part way through a tick releases the CPU for the rest of
that tick, which is booked as idle.

Each process owns a ``random.Random`` stream seeded from a hash of
``(seed, user, index)``, so adding processes to one user never perturbs
another user's draws.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .domain import Scenario, check_scenario
from .entitlements import dynamic_entitlements, static_entitlements
from .sched_fs import FairShareScheduler
from .sched_ts import TimeShareScheduler

THINKING, READY, RUNNING = "thinking", "ready", "running"


class Process:
    __slots__ = (
        "pid", "uid", "owner", "nice", "state", "demand_left", "txn_start", "txn_demand",
        "rng", "seq", "quantum_left", "recent_cpu", "sharepri", "_key", "_off", "waiting_since",
        "ran", "_draw_demand", "_draw_think",
    )

    def __init__(self, pid: str, uid: int, owner: str, nice: int = 0):
        self.pid = pid
        self.uid = uid
        self.owner = owner
        self.nice = nice
        self.state = THINKING
        self.demand_left = 0.0
        self.txn_start = 0
        self.txn_demand = 0.0
        self.rng: random.Random | None = None
        self.seq = 0
        self.quantum_left = 0
        self.recent_cpu = 0.0
        self.sharepri = 0.0
        self._key = 0.0
        self._off = 0.0
        self.waiting_since = 0
        self.ran = 0.0

    def __repr__(self) -> str:
        return f"Process({self.pid!r}, {self.state})"


def stream_seed(seed: int, user: str, index: int) -> int:
    digest = hashlib.blake2b(f"{seed}:{user}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _sampler(dist: str, mean: float, rng: random.Random):
    if dist == "exponential" and mean > 0:
        rate = 1.0 / mean
        return lambda: rng.expovariate(rate)
    return lambda: mean


@dataclass(frozen=True)
class MetricRecord:
    entity: str
    start_ms: int
    end_ms: int
    busy_ms: float
    transactions_completed: int
    resp_sum_ms: float
    resp_samples: tuple[float, ...] = ()


@dataclass(frozen=True)
class UserStats:
    user: str
    group: str
    processes: int
    shares: int
    entitlement_static: float
    entitlement_dynamic: float
    busy_ms: float
    transactions: int
    util: float
    tps: float
    work_tput_ms_per_s: float
    resp_mean_ms: float | None
    resp_p95_ms: float | None
    mean_in_cpu: float
    max_ready_wait_ms: int
    run_busy_ms: float
    run_completed_demand_ms: float
    run_inflight_ms: float
    preemptions: int = 0


@dataclass(frozen=True)
class GroupStats:
    group: str
    processes: int
    shares: int
    util: float
    tps: float
    work_tput_ms_per_s: float
    resp_mean_ms: float | None
    resp_p95_ms: float | None


@dataclass(frozen=True)
class SimReport:
    scenario: str
    policy: str
    seed: int
    measured_ms: int
    busy_ms: float
    idle_ms: float
    total_utilization: float
    users: tuple[UserStats, ...]
    groups: tuple[GroupStats, ...]
    windows: tuple[MetricRecord, ...] = ()
    held_idle_ms: float = 0.0
    config: Scenario | None = field(default=None, compare=True)

    def user(self, name: str) -> UserStats:
        for u in self.users:
            if u.user == name:
                return u
        raise KeyError(name)

    def group(self, name: str) -> GroupStats:
        for g in self.groups:
            if g.group == name:
                return g
        raise KeyError(name)


def _p95(samples: Sequence[float]) -> float | None:
    if not samples:
        return None
    return float(np.percentile(np.asarray(samples, dtype=float), 95))


def _mean(total: float, n: int) -> float | None:
    return total / n if n else None


def make_scheduler(s: Scenario, shares: Sequence[int], caps: Sequence[float | None]):
    c = s.scheduler
    if c.policy == "ts":
        return TimeShareScheduler(c.ts, len(shares), c.tick_ms, c.quantum_ms)
    if not s.allocation.capping_enabled:
        caps = [None] * len(shares)
    return FairShareScheduler(c.fs, shares, c.tick_ms, c.quantum_ms, caps)


def run(scenario: Scenario) -> SimReport:
    """Simulate ``scenario`` and summarise the post-warmup interval."""
    s = check_scenario(scenario)
    alloc = s.allocation
    users = alloc.users
    names = [u.name for u in users]
    uid_of = {n: i for i, n in enumerate(names)}
    n_users = len(users)
    tick = s.scheduler.tick_ms
    end, warm = s.duration_ms, s.warmup_ms

    sched = make_scheduler(s, [u.shares for u in users], [u.cap for u in users])
    work = s.workload.as_dict()

    procs: list[Process] = []
    wakeups: list[tuple[int, int, Process]] = []
    for name in names:
        w = work.get(name)
        if w is None:
            continue
        for k in range(w.processes):
            p = Process(f"{name}#{k}", uid_of[name], name, w.nice)
            p.rng = random.Random(stream_seed(s.seed, name, k))
            p._draw_demand = _sampler(w.demand_dist, w.demand_ms, p.rng)
            p._draw_think = _sampler(w.think_dist, w.think_ms, p.rng)
            sched.register(p)
            procs.append(p)
            first = math.ceil(p._draw_think() / tick) * tick
            wakeups.append((first, len(procs), p))
    heapq.heapify(wakeups)
    wake_order = len(procs)

    # measured accumulators
    busy = [0.0] * n_users
    txns = [0] * n_users
    resp_sum = [0.0] * n_users
    samples: list[list[float]] = [[] for _ in range(n_users)]
    census_ms = [0.0] * n_users
    max_wait = [0] * n_users
    # whole-run accounting
    run_busy = [0.0] * n_users
    run_done = [0.0] * n_users
    idle = 0.0
    idle_measured = 0.0
    held_measured = 0.0  # idle while work was queued but capped off
    preempted = [0] * n_users

    window_edges = list(range(warm, end, s.window_ms)) + [end]
    windows: list[MetricRecord] = []
    w_start = warm
    w_busy = [0.0] * n_users
    w_txn = [0] * n_users
    w_resp = [0.0] * n_users
    w_samples: list[list[float]] = [[] for _ in range(n_users)]
    edge_i = 0 if warm > 0 else 1

    p_active = sched.p_active
    next_periodic = sched.next_boundary(0)
    running: Process | None = None
    t = 0

    def close_window(at: int) -> None:
        nonlocal w_start
        for i, name in enumerate(names):
            windows.append(MetricRecord(
                name, w_start, at, w_busy[i], w_txn[i], w_resp[i], tuple(w_samples[i])
            ))
            w_busy[i] = 0.0
            w_txn[i] = 0
            w_resp[i] = 0.0
            w_samples[i] = []
        w_start = at

    while t < end:
        if t == next_periodic:
            sched.periodic(t)
            next_periodic = sched.next_boundary(t)
        while edge_i < len(window_edges) and window_edges[edge_i] <= t:
            if window_edges[edge_i] > warm:
                close_window(window_edges[edge_i])
            edge_i += 1
        while wakeups and wakeups[0][0] <= t:
            _, _, p = heapq.heappop(wakeups)
            slept = t - p.waiting_since  # waiting_since holds the block time while thinking
            p.state = READY
            p.txn_start = t
            p.waiting_since = t
            p.txn_demand = p._draw_demand()
            p.demand_left = p.txn_demand
            p.ran = 0.0
            sched.wake(p, slept)

        measuring = t >= warm
        if running is None:
            running = sched.select_next(t)
            if running is not None:
                running.state = RUNNING
                wait = t - running.waiting_since
                if measuring and wait > max_wait[running.uid]:
                    max_wait[running.uid] = wait
        if running is None:
            nxt = min(end, next_periodic)
            if wakeups:
                nxt = min(nxt, wakeups[0][0])
            if edge_i < len(window_edges):
                nxt = min(nxt, window_edges[edge_i])
            if sched.has_held():
                nxt = min(nxt, t + tick)
            nxt = max(nxt, t + tick) if nxt <= t else nxt
            span = nxt - t
            idle += span
            if measuring:
                idle_measured += span
                if sched.has_ready():
                    held_measured += span
                for i in range(n_users):
                    if p_active[i]:
                        census_ms[i] += p_active[i] * span
            t = nxt
            continue

        p = running
        uid = p.uid
        used = p.demand_left if p.demand_left < tick else tick
        p.demand_left -= used
        p.ran += used
        run_busy[uid] += used
        if used < tick:
            idle += tick - used
            if measuring:
                idle_measured += tick - used
        if measuring:
            busy[uid] += used
            w_busy[uid] += used
            for i in range(n_users):
                if p_active[i]:
                    census_ms[i] += p_active[i] * tick
        sched.on_tick(p, t)
        t += tick

        if p.demand_left <= 1e-9:
            resp = t - p.txn_start
            run_done[uid] += p.txn_demand
            if measuring:
                txns[uid] += 1
                resp_sum[uid] += resp
                samples[uid].append(resp)
                w_txn[uid] += 1
                w_resp[uid] += resp
                w_samples[uid].append(resp)
            p.state = THINKING
            p.waiting_since = t
            sched.block(p)
            wake_order += 1
            heapq.heappush(wakeups, (t + math.ceil(p._draw_think() / tick) * tick, wake_order, p))
            running = None
        elif p.quantum_left <= 0:
            p.state = READY
            p.waiting_since = t
            if measuring:
                preempted[uid] += 1
            sched.on_quantum_expiry(p)
            running = None

    while edge_i < len(window_edges):
        if window_edges[edge_i] > warm:
            close_window(window_edges[edge_i])
        edge_i += 1

    inflight = [0.0] * n_users
    for p in procs:
        if p.state != THINKING:
            inflight[p.uid] += p.ran

    return _summarise(s, busy, txns, resp_sum, samples, census_ms, max_wait,
                      run_busy, run_done, inflight, windows, preempted,
                      idle_measured, held_measured)


def _summarise(s, busy, txns, resp_sum, samples, census_ms, max_wait,
               run_busy, run_done, inflight, windows, preempted,
               idle_ms, held_ms) -> SimReport:
    alloc = s.allocation
    measured = s.duration_ms - s.warmup_ms
    secs = measured / 1000.0
    work = s.workload.as_dict()
    static = static_entitlements(alloc)
    active = s.active_users
    dynamic = dynamic_entitlements(alloc, active) if active else None

    users = []
    for i, u in enumerate(alloc.users):
        w = work.get(u.name)
        users.append(UserStats(
            user=u.name,
            group=u.group,
            processes=w.processes if w else 0,
            shares=u.shares,
            entitlement_static=static[u.name].static_e,
            entitlement_dynamic=dynamic[u.name].dynamic_e if dynamic else 0.0,
            busy_ms=busy[i],
            transactions=txns[i],
            util=busy[i] / measured,
            tps=txns[i] / secs,
            work_tput_ms_per_s=busy[i] / secs,
            resp_mean_ms=_mean(resp_sum[i], txns[i]),
            resp_p95_ms=_p95(samples[i]),
            mean_in_cpu=census_ms[i] / measured,
            max_ready_wait_ms=max_wait[i],
            run_busy_ms=run_busy[i],
            run_completed_demand_ms=run_done[i],
            run_inflight_ms=inflight[i],
            preemptions=preempted[i],
        ))

    groups = []
    for g in alloc.groups:
        idx = [i for i, u in enumerate(alloc.users) if u.group == g.name]
        gb = sum(busy[i] for i in idx)
        gt = sum(txns[i] for i in idx)
        gs = [x for i in idx for x in samples[i]]
        groups.append(GroupStats(
            group=g.name,
            processes=sum(users[i].processes for i in idx),
            shares=g.shares,
            util=gb / measured,
            tps=gt / secs,
            work_tput_ms_per_s=gb / secs,
            resp_mean_ms=_mean(sum(resp_sum[i] for i in idx), gt),
            resp_p95_ms=_p95(gs),
        ))

    total_busy = sum(busy)
    return SimReport(
        scenario=s.name,
        policy=s.scheduler.policy,
        seed=s.seed,
        measured_ms=measured,
        busy_ms=total_busy,
        idle_ms=idle_ms,
        total_utilization=total_busy / measured,
        users=tuple(users),
        groups=tuple(groups),
        windows=tuple(windows),
        held_idle_ms=held_ms,
        config=s,
    )


def sweep(scenario: Scenario, n_processes: Iterable[int], users: Iterable[str] | None = None,
          jobs: int = 1) -> list[SimReport]:
    """One run per process count, applied to every user in ``users``.

    ``users`` defaults to the users with a non-zero process count in the
    scenario. All points share the scenario seed.
    """
    counts = list(n_processes)
    if not counts:
        raise ValueError("empty process range")
    targets = list(users) if users is not None else sorted(scenario.active_users)
    points = [scenario.with_processes({u: n for u in targets}) for n in counts]
    if jobs > 1 and len(points) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, points))
    return [run(p) for p in points]


@dataclass(frozen=True)
class Degradation:
    user: str
    resp_ts_ms: float | None
    resp_fs_ms: float | None
    ratio: float | None


@dataclass(frozen=True)
class PolicyComparison:
    ts: SimReport
    fs: SimReport
    degradation: tuple[Degradation, ...]

    def ratio(self, user: str) -> float | None:
        for d in self.degradation:
            if d.user == user:
                return d.ratio
        raise KeyError(user)


def degradation_table(before: SimReport, after: SimReport) -> tuple[Degradation, ...]:
    rows = []
    for b in before.users:
        a = after.user(b.user)
        ratio = None
        if b.resp_mean_ms and a.resp_mean_ms is not None:
            ratio = a.resp_mean_ms / b.resp_mean_ms
        rows.append(Degradation(b.user, b.resp_mean_ms, a.resp_mean_ms, ratio))
    return tuple(rows)


def compare_policies(scenario: Scenario, ts: Scenario | None = None,
                     fs: Scenario | None = None) -> PolicyComparison:
    """Run the workload under time-share and fair-share; ratio = resp_FS / resp_TS."""
    ts_report = run(ts if ts is not None else scenario.with_policy("ts"))
    fs_report = run(fs if fs is not None else scenario.with_policy("fs"))
    return PolicyComparison(ts_report, fs_report, degradation_table(ts_report, fs_report))
