"""Analytic look-ahead for share allocations.

Each user is one closed class: ``N`` processes, mean CPU demand ``D`` per
transaction and mean think time ``Z``.

Fair-share. A class alone on the CPU would use ``d = U_mva(N, D, Z)``
(exact single-class mean-value analysis). The CPU is then divided by
weighted max-min water-filling: every class gets its share-weighted slice,
classes that need less than their slice (or are capped below it) keep only
what they need, and the surplus is spread over the rest in proportion to
shares, repeatedly, until nothing moves. A class held below its standalone
demand runs at ``X = a / D`` and its response follows from the interactive
response law ``R = N / X - Z``; a satisfied class keeps its standalone
response time.

Time-share. Ownership is invisible, so the CPU is modelled as a single
processor-sharing station visited by every class and solved with
Schweitzer's approximate multiclass mean-value analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .domain import Group, Scenario, ShareAllocation, User, check_scenario
from .entitlements import EntitlementTable, NoActiveSharesError, effective_entitlements

MAX_ITERATIONS = 10_000
TOLERANCE = 1e-6


class PlannerConvergenceError(RuntimeError):
    """The fixed point did not settle; ``residual`` is the last change seen."""

    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(f"{message} (after {iterations} iterations, residual {residual:.3g})")
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class UserPlan:
    user: str
    group: str
    processes: int
    entitlement: float
    util: float
    resp_mean_ms: float | None
    tps: float

    @property
    def work_tput_ms_per_s(self) -> float:
        return self.util * 1000.0


@dataclass(frozen=True)
class PlanReport:
    scenario: str
    policy: str
    active: tuple[str, ...]
    users: tuple[UserPlan, ...]
    entitlements: EntitlementTable
    iterations: int
    residual: float

    @property
    def total_utilization(self) -> float:
        return sum(u.util for u in self.users)

    def user(self, name: str) -> UserPlan:
        for u in self.users:
            if u.user == name:
                return u
        raise KeyError(name)


@dataclass(frozen=True)
class PlanDelta:
    hypothesis: int
    user: str
    d_entitlement: float
    d_util: float
    d_resp_ms: float | None
    resp_ratio: float | None


@dataclass(frozen=True)
class WhatIf:
    """Reports in hypothesis order; deltas are taken against the first."""

    reports: tuple[PlanReport, ...]
    deltas: tuple[PlanDelta, ...]

    def __iter__(self):
        return iter(self.reports)

    def __len__(self) -> int:
        return len(self.reports)

    def __getitem__(self, i: int) -> PlanReport:
        return self.reports[i]


# --------------------------------------------------------------------------
# queueing pieces


def mva_single(n: int, demand: float, think: float) -> tuple[float, float]:
    """Exact MVA for one closed class at one queue: (utilization, response)."""
    if n <= 0 or demand <= 0:
        return 0.0, 0.0
    q = 0.0
    r = x = 0.0
    for k in range(1, n + 1):
        r = demand * (1.0 + q)
        x = k / (r + think)
        q = x * r
    return x * demand, r


def water_fill(
    bounds: Sequence[float],
    weights: Sequence[float],
    capacity: float = 1.0,
    max_iter: int = MAX_ITERATIONS,
) -> tuple[list[float], int, float]:
    """Weighted max-min split of ``capacity`` under per-class upper bounds.

    Returns (allocations, iterations, residual). Every round hands the
    remaining capacity to the open classes by weight and closes those whose
    bound is reached; it stops once a round closes nobody.
    """
    n = len(bounds)
    alloc = [0.0] * n
    open_ = [i for i in range(n) if bounds[i] > 0 and weights[i] > 0]
    remaining = capacity
    residual = math.inf
    for it in range(1, max_iter + 1):
        if not open_ or remaining <= 0:
            return alloc, it - 1, 0.0
        level = remaining / sum(weights[i] for i in open_)
        done = [i for i in open_ if bounds[i] <= weights[i] * level]
        if not done:
            for i in open_:
                alloc[i] = weights[i] * level
            return alloc, it, 0.0
        for i in done:
            alloc[i] = bounds[i]
            remaining -= bounds[i]
        residual = max(bounds[i] for i in done)
        open_ = [i for i in open_ if i not in done]
    raise PlannerConvergenceError("water-filling did not settle", max_iter, residual)


def schweitzer(
    n: Sequence[int],
    demand: Sequence[float],
    think: Sequence[float],
    tol: float = TOLERANCE,
    max_iter: int = MAX_ITERATIONS,
) -> tuple[list[float], list[float], int, float]:
    """Approximate multiclass MVA for one processor-sharing queue.

    Returns (utilizations, responses, iterations, residual).
    """
    k = len(n)
    live = [i for i in range(k) if n[i] > 0 and demand[i] > 0]
    q = [0.0] * k
    for i in live:
        q[i] = n[i] * demand[i] / (demand[i] + think[i])
    util = [0.0] * k
    resp = [0.0] * k
    residual = math.inf
    for it in range(1, max_iter + 1):
        total = sum(q)
        new_util = [0.0] * k
        for i in live:
            resp[i] = demand[i] * (1.0 + total - q[i] / n[i])
            x = n[i] / (resp[i] + think[i])
            q[i] = x * resp[i]
            new_util[i] = x * demand[i]
        residual = max((abs(a - b) for a, b in zip(new_util, util)), default=0.0)
        util = new_util
        if residual < tol:
            return util, resp, it, residual
    raise PlannerConvergenceError("time-share MVA did not converge", max_iter, residual)


# --------------------------------------------------------------------------
# public operations


def _classes(s: Scenario, active: frozenset[str]):
    work = s.workload.as_dict()
    out = []
    for u in s.allocation.users:
        w = work.get(u.name)
        n = w.processes if (w is not None and u.name in active) else 0
        out.append((u, n, w.demand_ms if w else 0.0, w.think_ms if w else 0.0))
    return out


def predict(scenario: Scenario, active: Iterable[str] | None = None) -> PlanReport:
    """Predicted utilization, response and throughput per user.

    ``active`` names the users or groups with work; the default is every
    user that has processes. Users outside it are idle.
    """
    s = check_scenario(scenario)
    alloc = s.allocation
    if active is None:
        names = s.active_users
        if not names:
            raise NoActiveSharesError("no active shares")
    else:
        names = alloc.resolve(active)
        if not names:
            raise NoActiveSharesError("no active shares")
    table = effective_entitlements(alloc, names)
    classes = _classes(s, names)

    if s.scheduler.policy == "fs":
        utils, resps, iters, residual = _fair_share(alloc, classes)
    else:
        n = [c[1] for c in classes]
        utils, resps, iters, residual = schweitzer(n, [c[2] for c in classes], [c[3] for c in classes])
        total = sum(utils)
        if total > 1.0:
            utils = [x / total for x in utils]

    rows = []
    for (u, n, d, _z), util, r in zip(classes, utils, resps):
        util = max(0.0, util)
        tps = util * 1000.0 / d if d > 0 else 0.0
        rows.append(UserPlan(
            u.name, u.group, n, table[u.name].effective_e, util,
            r if n > 0 else None, tps,
        ))
    return PlanReport(
        s.name, s.scheduler.policy, tuple(sorted(names)), tuple(rows), table, iters, residual
    )


def _fair_share(alloc: ShareAllocation, classes):
    bounds, weights, alone = [], [], []
    for u, n, d, z in classes:
        util, r = mva_single(n, d, z)
        if alloc.capping_enabled and u.cap is not None:
            util = min(util, u.cap)
        bounds.append(util)
        weights.append(float(u.shares) if n > 0 else 0.0)
        alone.append(r)
    got, iters, residual = water_fill(bounds, weights)
    resps = []
    for (u, n, d, z), a, b, r in zip(classes, got, bounds, alone):
        if n == 0 or a <= 0:
            resps.append(0.0)
            continue
        standalone_u = mva_single(n, d, z)[0]
        if a >= standalone_u - 1e-12:
            resps.append(r)
        else:
            resps.append(max(r, n * d / a - z))
    return got, resps, iters, residual


def what_if(scenario: Scenario, active_sets: Sequence[Iterable[str] | None]) -> WhatIf:
    """One prediction per hypothetical active set, compared with the first."""
    if not active_sets:
        raise ValueError("no hypotheses")
    reports = tuple(predict(scenario, a) for a in active_sets)
    base = reports[0]
    deltas = []
    for h, rep in enumerate(reports):
        for b, u in zip(base.users, rep.users):
            dr = ratio = None
            if b.resp_mean_ms is not None and u.resp_mean_ms is not None:
                dr = u.resp_mean_ms - b.resp_mean_ms
                ratio = u.resp_mean_ms / b.resp_mean_ms if b.resp_mean_ms > 0 else None
            deltas.append(PlanDelta(
                h, u.user, u.entitlement - b.entitlement, u.util - b.util, dr, ratio
            ))
    return WhatIf(reports, tuple(deltas))


# --------------------------------------------------------------------------
# share suggestions

# Fair-share control is only good to a few percent, so a pool finer than
# whole percentages buys nothing.
PRECISION_POOL = 100


@dataclass(frozen=True)
class Suggestion:
    allocation: ShareAllocation
    shares: dict[str, int] = field(hash=False)
    measured: dict[str, float] = field(default_factory=dict, hash=False)
    pointless_precision: bool = False
    wiggle_room: tuple[str, ...] = ()  # users whose entitlement exceeds their measured fraction
    notes: tuple[str, ...] = ()


def suggest_shares(
    measured: Mapping[str, float],
    pool: int = 100,
    resp_max: Mapping[str, float] | None = None,
    groups: Mapping[str, str] | None = None,
) -> Suggestion:
    """Turn measured CPU fractions into a first share allocation.

    ``measured`` is in priority order: on equal consumption the user listed
    first wins the rounding residue. ``groups`` maps users to group names;
    by default every user gets a group of its own named ``grp_<user>``.
    """
    names = list(measured)
    if not names:
        raise ValueError("no users measured")
    values = [float(measured[n]) for n in names]
    if any(not math.isfinite(v) or v < 0 for v in values):
        raise ValueError("measured fractions must be finite and non-negative")
    total = sum(values)
    if total <= 0:
        raise ValueError("all measurements are zero")
    if not isinstance(pool, int) or isinstance(pool, bool) or pool < len(names):
        raise ValueError(f"pool {pool!r} must be an integer of at least {len(names)}")

    shares = [max(1, math.floor(pool * v / total + 0.5)) for v in values]
    # biggest consumers first, listing order breaks ties
    order = sorted(range(len(names)), key=lambda i: (-values[i], i))
    residue = pool - sum(shares)
    if residue > 0:
        shares[order[0]] += residue
    while residue < 0:
        for i in order:
            if shares[i] > 1:
                shares[i] -= 1
                residue += 1
                break

    fractions = [v / total for v in values]
    wiggle: tuple[str, ...] = ()
    notes = []
    if resp_max is not None:
        wiggle = tuple(
            n for n, sh, f in zip(names, shares, fractions) if sh / pool > f + 1e-12
        )
        for n in wiggle:
            target = resp_max.get(n)
            extra = f" (worst time-share response {target:g} ms)" if target is not None else ""
            notes.append(f"{n}: entitlement above measured consumption{extra}")
    precision = pool > PRECISION_POOL
    if precision:
        notes.append(f"pool {pool} resolves finer than the scheduler can deliver; 100 is enough")

    group_of = dict(groups) if groups else {n: f"grp_{n}" for n in names}
    missing = [n for n in names if n not in group_of]
    if missing:
        raise ValueError(f"no group for {', '.join(missing)}")
    gshares: dict[str, int] = {}
    for n, sh in zip(names, shares):
        gshares[group_of[n]] = gshares.get(group_of[n], 0) + sh
    allocation = ShareAllocation(
        pool,
        tuple(Group(g, v) for g, v in gshares.items()),
        tuple(User(n, group_of[n], sh) for n, sh in zip(names, shares)),
    )
    return Suggestion(
        allocation, dict(zip(names, shares)), dict(zip(names, values)),
        precision, wiggle, tuple(notes),
    )
