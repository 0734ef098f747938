"""Shared vocabulary: share trees, workloads, scheduler config, scenarios.

Also home of the scenario file grammar. A scenario file is line oriented;
every non-blank, non-comment line is a bracketed section header followed
by ``key=value`` pairs::

    [pool] total=100 capping=false
    [group.DBMS] shares=60
    [user.usrA] group=Users shares=6 cap=0.06
    [workload.usrA] processes=10 demand_ms=500 think_ms=1000 demand_dist=fixed think_dist=exponential
    [scheduler] policy=fs quantum_ms=10 tick_ms=10
    [sim] duration_ms=600000 warmup_ms=60000 seed=42

Unknown sections and keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping

POLICIES = ("ts", "fs")
DISTRIBUTIONS = ("fixed", "exponential")
FS_ADJUST_MODES = ("running", "user", "all_ready")
NICE_MIN, NICE_MAX = -19, 19


class ScenarioError(ValueError):
    """Malformed scenario text or an invalid scenario value."""

    def __init__(self, message: str, violations: tuple["Violation", ...] = ()):
        super().__init__(message)
        self.violations = violations


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class Group:
    name: str
    shares: int


@dataclass(frozen=True)
class User:
    name: str
    group: str
    shares: int
    cap: float | None = None


@dataclass(frozen=True)
class ShareAllocation:
    """Two-level share tree. Users partition their group's shares."""

    pool_total: int
    groups: tuple[Group, ...]
    users: tuple[User, ...]
    capping_enabled: bool = False

    def user(self, name: str) -> User:
        for u in self.users:
            if u.name == name:
                return u
        raise KeyError(name)

    def group(self, name: str) -> Group:
        for g in self.groups:
            if g.name == name:
                return g
        raise KeyError(name)

    @property
    def user_names(self) -> tuple[str, ...]:
        return tuple(u.name for u in self.users)

    def members(self, group: str) -> tuple[str, ...]:
        return tuple(u.name for u in self.users if u.group == group)

    def resolve(self, names: Iterable[str]) -> frozenset[str]:
        """Expand a mix of user and group names into user names."""
        out: set[str] = set()
        users = set(self.user_names)
        groups = {g.name for g in self.groups}
        for name in names:
            if name in users:
                out.add(name)
            elif name in groups:
                out.update(self.members(name))
            else:
                raise KeyError(f"unknown user or group {name!r}")
        return frozenset(out)


@dataclass(frozen=True)
class UserWorkload:
    processes: int
    demand_ms: float
    think_ms: float = 0.0
    demand_dist: str = "fixed"
    think_dist: str = "fixed"
    nice: int = 0


@dataclass(frozen=True)
class WorkloadSpec:
    """Closed interactive workload, one entry per user."""

    users: tuple[tuple[str, UserWorkload], ...]

    def get(self, user: str) -> UserWorkload | None:
        for name, w in self.users:
            if name == user:
                return w
        return None

    def as_dict(self) -> dict[str, UserWorkload]:
        return dict(self.users)


@dataclass(frozen=True)
class TsParams:
    levels: int = 60
    cpu_weight: float = 0.5
    decay_per_s: float = 0.5
    nice_weight: float = 1.0
    sleep_reset: bool = True


@dataclass(frozen=True)
class FsParams:
    usage_window_ms: int = 4000
    pri_window_ms: int = 1000
    decay_usage: float = 0.5
    pri_a: float = 0.01
    pri_b: float = 0.5
    adjust: str = "user"

    def pri_decay(self, nice: int) -> float:
        return self.pri_a * nice + self.pri_b


@dataclass(frozen=True)
class SchedulerConfig:
    policy: str = "fs"
    quantum_ms: int = 10
    tick_ms: int = 10
    ts: TsParams = field(default_factory=TsParams)
    fs: FsParams = field(default_factory=FsParams)


@dataclass(frozen=True)
class Scenario:
    allocation: ShareAllocation
    workload: WorkloadSpec
    scheduler: SchedulerConfig
    duration_ms: int
    warmup_ms: int = 0
    seed: int = 0
    name: str = "scenario"
    window_ms: int = 10000

    def with_policy(self, policy: str) -> "Scenario":
        return replace(self, scheduler=replace(self.scheduler, policy=policy))

    def with_processes(self, counts: Mapping[str, int]) -> "Scenario":
        users = tuple(
            (name, replace(w, processes=int(counts[name])) if name in counts else w)
            for name, w in self.workload.users
        )
        return replace(self, workload=WorkloadSpec(users))

    def restrict(self, active: Iterable[str]) -> "Scenario":
        """Zero the process count of every user outside ``active``.

        ``active`` may name users or groups.
        """
        keep = self.allocation.resolve(active)
        return self.with_processes(
            {name: 0 for name, _ in self.workload.users if name not in keep}
        )

    def cpu_bound(self) -> "Scenario":
        """Same scenario with every think time removed."""
        users = tuple(
            (name, replace(w, think_ms=0.0, think_dist="fixed"))
            for name, w in self.workload.users
        )
        return replace(self, workload=WorkloadSpec(users))

    @property
    def active_users(self) -> frozenset[str]:
        return frozenset(n for n, w in self.workload.users if w.processes > 0)


# --------------------------------------------------------------------------
# validation


def _is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x: Any) -> bool:
    return (
        isinstance(x, (int, float))
        and not isinstance(x, bool)
        and math.isfinite(float(x))
    )


def _validate_allocation(a: Any, out: list[Violation]) -> None:
    if not isinstance(a, ShareAllocation):
        out.append(Violation("allocation.type", "allocation is not a ShareAllocation"))
        return
    if not _is_int(a.pool_total) or a.pool_total <= 0:
        out.append(Violation("pool.total", f"pool total {a.pool_total!r} is not a positive integer"))
    if not isinstance(a.capping_enabled, bool):
        out.append(Violation("pool.capping", "capping must be true or false"))

    groups: dict[str, int] = {}
    for g in a.groups if isinstance(a.groups, tuple) else ():
        if not isinstance(g, Group) or not isinstance(g.name, str) or not g.name:
            out.append(Violation("group.name", f"bad group entry {g!r}"))
            continue
        if g.name in groups:
            out.append(Violation("group.duplicate", f"group {g.name} declared twice"))
        if not _is_int(g.shares) or g.shares <= 0:
            out.append(Violation("group.shares", f"group {g.name} shares {g.shares!r} not a positive integer"))
            groups[g.name] = 0
        else:
            groups[g.name] = g.shares
    if not isinstance(a.groups, tuple) or not a.groups:
        out.append(Violation("group.missing", "no groups declared"))
    if groups and _is_int(a.pool_total):
        total = sum(groups.values())
        if total != a.pool_total:
            out.append(Violation("group.sum", f"group shares sum {total} ≠ pool {a.pool_total}"))

    seen: set[str] = set()
    per_group: dict[str, int] = {name: 0 for name in groups}
    for u in a.users if isinstance(a.users, tuple) else ():
        if not isinstance(u, User) or not isinstance(u.name, str) or not u.name:
            out.append(Violation("user.name", f"bad user entry {u!r}"))
            continue
        if u.name in seen:
            out.append(Violation("user.duplicate", f"user {u.name} declared twice"))
        if u.name in groups:
            out.append(Violation("user.name_clash", f"user {u.name} reuses a group name"))
        seen.add(u.name)
        if not isinstance(u.group, str) or u.group not in groups:
            out.append(Violation("user.group", f"user {u.name} names unknown group {u.group!r}"))
        if not _is_int(u.shares) or u.shares <= 0:
            out.append(Violation("user.shares", f"user {u.name} shares {u.shares!r} not a positive integer"))
        elif isinstance(u.group, str) and u.group in per_group:
            per_group[u.group] += u.shares
        if u.cap is not None and (not _is_real(u.cap) or not 0.0 < u.cap <= 1.0):
            out.append(Violation("user.cap", f"user {u.name} cap {u.cap!r} out of (0,1]"))
    if not isinstance(a.users, tuple) or not a.users:
        out.append(Violation("user.missing", "no users declared"))
    for name, got in per_group.items():
        if groups[name] and got != groups[name]:
            out.append(Violation(
                "user.sum",
                f"users of group {name} hold {got} shares ≠ group shares {groups[name]}",
            ))


def _validate_workload(s: Any, out: list[Violation]) -> None:
    w = s.workload
    if not isinstance(w, WorkloadSpec) or not isinstance(w.users, tuple):
        out.append(Violation("workload.type", "workload is not a WorkloadSpec"))
        return
    known = set()
    if isinstance(s.allocation, ShareAllocation) and isinstance(s.allocation.users, tuple):
        known = {u.name for u in s.allocation.users if isinstance(u, User) and isinstance(u.name, str)}
    seen: set[str] = set()
    for entry in w.users:
        if not (isinstance(entry, tuple) and len(entry) == 2 and isinstance(entry[1], UserWorkload)):
            out.append(Violation("workload.entry", f"bad workload entry {entry!r}"))
            continue
        name, uw = entry
        if not isinstance(name, str) or not name:
            out.append(Violation("workload.user", f"bad workload user name {name!r}"))
            continue
        if name in seen:
            out.append(Violation("workload.duplicate", f"workload for {name} declared twice"))
        seen.add(name)
        if name not in known:
            out.append(Violation("workload.user", f"workload names unknown user {name!r}"))
        if not _is_int(uw.processes) or uw.processes < 0:
            out.append(Violation("workload.processes", f"{name}: processes {uw.processes!r} must be an integer ≥ 0"))
        if not _is_real(uw.demand_ms) or uw.demand_ms <= 0:
            out.append(Violation("workload.demand", f"{name}: demand_ms {uw.demand_ms!r} must be > 0"))
        if not _is_real(uw.think_ms) or uw.think_ms < 0:
            out.append(Violation("workload.think", f"{name}: think_ms {uw.think_ms!r} must be ≥ 0"))
        for key, dist in (("demand_dist", uw.demand_dist), ("think_dist", uw.think_dist)):
            if dist not in DISTRIBUTIONS:
                out.append(Violation("workload.dist", f"{name}: {key} {dist!r} not one of {DISTRIBUTIONS}"))
        if not _is_int(uw.nice) or not NICE_MIN <= uw.nice <= NICE_MAX:
            out.append(Violation("workload.nice", f"{name}: nice {uw.nice!r} outside [-19,19]"))


def _validate_scheduler(c: Any, out: list[Violation]) -> None:
    if not isinstance(c, SchedulerConfig):
        out.append(Violation("scheduler.type", "scheduler is not a SchedulerConfig"))
        return
    if c.policy not in POLICIES:
        out.append(Violation("scheduler.policy", f"policy {c.policy!r} not one of {POLICIES}"))
    tick_ok = _is_int(c.tick_ms) and c.tick_ms > 0
    if not tick_ok:
        out.append(Violation("scheduler.tick", f"tick_ms {c.tick_ms!r} must be a positive integer"))
    if not _is_int(c.quantum_ms) or c.quantum_ms <= 0 or (tick_ok and c.quantum_ms % c.tick_ms):
        out.append(Violation("scheduler.quantum", f"quantum_ms {c.quantum_ms!r} must be a positive multiple of tick_ms"))

    ts = c.ts
    if not isinstance(ts, TsParams):
        out.append(Violation("ts.type", "ts params missing"))
    else:
        if not _is_int(ts.levels) or ts.levels < 2:
            out.append(Violation("ts.levels", f"levels {ts.levels!r} must be ≥ 2"))
        if not _is_real(ts.decay_per_s) or not 0.0 <= ts.decay_per_s < 1.0:
            out.append(Violation("ts.decay", f"decay_per_s {ts.decay_per_s!r} outside [0,1)"))
        for key in ("cpu_weight", "nice_weight"):
            v = getattr(ts, key)
            if not _is_real(v) or v < 0:
                out.append(Violation(f"ts.{key}", f"{key} {v!r} must be a real ≥ 0"))

    fs = c.fs
    if not isinstance(fs, FsParams):
        out.append(Violation("fs.type", "fs params missing"))
        return
    for key in ("usage_window_ms", "pri_window_ms"):
        v = getattr(fs, key)
        if not _is_int(v) or v <= 0 or (tick_ok and v % c.tick_ms):
            out.append(Violation(f"fs.{key}", f"{key} {v!r} must be a positive multiple of tick_ms"))
    if not _is_real(fs.decay_usage) or not 0.0 <= fs.decay_usage < 1.0:
        out.append(Violation("fs.decay_usage", f"decay_usage {fs.decay_usage!r} outside [0,1)"))
    if not (_is_real(fs.pri_a) and _is_real(fs.pri_b)):
        out.append(Violation("fs.pri_decay", "pri_a and pri_b must be reals"))
    else:
        lo = min(fs.pri_decay(NICE_MIN), fs.pri_decay(NICE_MAX))
        hi = max(fs.pri_decay(NICE_MIN), fs.pri_decay(NICE_MAX))
        if lo < 0.0 or hi > 1.0:
            out.append(Violation(
                "fs.pri_decay",
                f"pri_a*nice+pri_b spans [{lo:g},{hi:g}] over nice -19..19, must stay in [0,1]",
            ))
    if fs.adjust not in FS_ADJUST_MODES:
        out.append(Violation("fs.adjust", f"adjust {fs.adjust!r} not one of {FS_ADJUST_MODES}"))


def validate_scenario(s: Any) -> list[Violation]:
    """Every invariant violation in ``s``; empty when the scenario is valid."""
    out: list[Violation] = []
    if not isinstance(s, Scenario):
        return [Violation("scenario.type", f"not a Scenario: {type(s).__name__}")]
    _validate_allocation(s.allocation, out)
    _validate_workload(s, out)
    _validate_scheduler(s.scheduler, out)

    dur_ok = _is_int(s.duration_ms) and s.duration_ms > 0
    if not dur_ok:
        out.append(Violation("sim.duration", f"duration_ms {s.duration_ms!r} must be a positive integer"))
    if not _is_int(s.warmup_ms) or s.warmup_ms < 0:
        out.append(Violation("sim.warmup", f"warmup_ms {s.warmup_ms!r} must be an integer ≥ 0"))
    elif dur_ok and s.warmup_ms >= s.duration_ms:
        out.append(Violation("sim.warmup", f"warmup_ms {s.warmup_ms} must be < duration_ms {s.duration_ms}"))
    tick = s.scheduler.tick_ms if isinstance(s.scheduler, SchedulerConfig) else None
    if _is_int(tick) and tick > 0:
        for key in ("duration_ms", "warmup_ms", "window_ms"):
            v = getattr(s, key)
            if _is_int(v) and v % tick:
                out.append(Violation(f"sim.{key}", f"{key} {v} is not a multiple of tick_ms {tick}"))
    if not _is_int(s.window_ms) or s.window_ms <= 0:
        out.append(Violation("sim.window", f"window_ms {s.window_ms!r} must be a positive integer"))
    if not _is_int(s.seed) or not 0 <= s.seed < 2**64:
        out.append(Violation("sim.seed", f"seed {s.seed!r} must be an integer in [0, 2^64)"))
    if not isinstance(s.name, str) or not s.name or any(ch.isspace() for ch in s.name):
        out.append(Violation("scenario.name", f"name {s.name!r} must be non-empty without whitespace"))
    return out


def check_scenario(s: Scenario) -> Scenario:
    """Return ``s`` unchanged or raise ScenarioError listing the violations."""
    violations = validate_scenario(s)
    if violations:
        raise ScenarioError(
            "invalid scenario:\n  " + "\n  ".join(map(str, violations)),
            tuple(violations),
        )
    return s


# --------------------------------------------------------------------------
# scenario file grammar

_SECTION_KEYS: dict[str, dict[str, type]] = {
    "scenario": {"name": str},
    "pool": {"total": int, "capping": bool},
    "group": {"shares": int},
    "user": {"group": str, "shares": int, "cap": float},
    "workload": {
        "processes": int, "demand_ms": float, "think_ms": float,
        "demand_dist": str, "think_dist": str, "nice": int,
    },
    "scheduler": {"policy": str, "quantum_ms": int, "tick_ms": int},
    "ts": {
        "levels": int, "cpu_weight": float, "decay_per_s": float, "nice_weight": float,
        "sleep_reset": bool,
    },
    "fs": {
        "usage_window_ms": int, "pri_window_ms": int, "decay_usage": float,
        "pri_a": float, "pri_b": float, "adjust": str,
    },
    "sim": {"duration_ms": int, "warmup_ms": int, "seed": int, "window_ms": int},
}
_NAMED_SECTIONS = ("group", "user", "workload")


def _convert(kind: type, raw: str, where: str) -> Any:
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw, 10)
        if kind is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError(raw)
            return value
        return raw
    except ValueError:
        raise ScenarioError(f"{where}: cannot read {raw!r} as {kind.__name__}") from None


def _split_section(header: str, where: str) -> tuple[str, str | None]:
    kind, dot, name = header.partition(".")
    if kind not in _SECTION_KEYS:
        raise ScenarioError(f"{where}: unknown section [{header}]")
    if kind in _NAMED_SECTIONS:
        if not dot or not name:
            raise ScenarioError(f"{where}: section [{kind}] needs a name, e.g. [{kind}.x]")
        return kind, name
    if dot:
        raise ScenarioError(f"{where}: section [{kind}] takes no name")
    return kind, None


def _tokenize(text: str) -> dict[tuple[str, str | None], dict[str, str]]:
    sections: dict[tuple[str, str | None], dict[str, str]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"line {lineno}"
        if not body.startswith("[") or "]" not in body:
            raise ScenarioError(f"{where}: expected '[section] key=value ...'")
        header, rest = body[1:].split("]", 1)
        key = _split_section(header.strip(), where)
        entries = sections.setdefault(key, {})
        for token in rest.split():
            k, eq, v = token.partition("=")
            if not eq or not k:
                raise ScenarioError(f"{where}: expected key=value, got {token!r}")
            if k not in _SECTION_KEYS[key[0]]:
                raise ScenarioError(f"{where}: unknown key {k!r} in [{header.strip()}]")
            if k in entries:
                raise ScenarioError(f"{where}: key {k!r} repeated in [{header.strip()}]")
            entries[k] = v
    return sections


def apply_overrides(
    sections: dict[tuple[str, str | None], dict[str, str]],
    overrides: Iterable[str],
) -> None:
    """Apply ``section.key=value`` overrides, e.g. ``workload.usrA.processes=20``."""
    for item in overrides:
        path, eq, value = item.partition("=")
        head, dot, key = path.rpartition(".")
        if not eq or not dot or not head or not key:
            raise ScenarioError(f"override {item!r}: expected section.key=value")
        kind, name = _split_section(head, f"override {item!r}")
        if key not in _SECTION_KEYS[kind]:
            raise ScenarioError(f"override {item!r}: unknown key {key!r}")
        if name is not None and (kind, name) not in sections:
            raise ScenarioError(f"override {item!r}: no section [{head}] in scenario")
        sections.setdefault((kind, name), {})[key] = value


def _typed(sections, kind: str, name: str | None = None) -> dict[str, Any]:
    where = f"[{kind}{'.' + name if name else ''}]"
    raw = sections.get((kind, name), {})
    return {k: _convert(_SECTION_KEYS[kind][k], v, where) for k, v in raw.items()}


def _require(d: dict[str, Any], key: str, where: str) -> Any:
    if key not in d:
        raise ScenarioError(f"{where}: missing required key {key!r}")
    return d[key]


def _build(sections) -> Scenario:
    pool = _typed(sections, "pool")
    groups = tuple(
        Group(name, _require(_typed(sections, "group", name), "shares", f"[group.{name}]"))
        for kind, name in sections if kind == "group"
    )
    users = []
    for kind, name in sections:
        if kind != "user":
            continue
        d = _typed(sections, "user", name)
        where = f"[user.{name}]"
        users.append(User(name, _require(d, "group", where), _require(d, "shares", where), d.get("cap")))
    workloads = []
    for kind, name in sections:
        if kind != "workload":
            continue
        d = _typed(sections, "workload", name)
        where = f"[workload.{name}]"
        workloads.append((name, UserWorkload(
            processes=_require(d, "processes", where),
            demand_ms=_require(d, "demand_ms", where),
            think_ms=d.get("think_ms", 0.0),
            demand_dist=d.get("demand_dist", "fixed"),
            think_dist=d.get("think_dist", "fixed"),
            nice=d.get("nice", 0),
        )))
    sched = _typed(sections, "scheduler")
    sim = _typed(sections, "sim")
    meta = _typed(sections, "scenario")
    return Scenario(
        allocation=ShareAllocation(
            pool_total=_require(pool, "total", "[pool]"),
            groups=groups,
            users=tuple(users),
            capping_enabled=pool.get("capping", False),
        ),
        workload=WorkloadSpec(tuple(workloads)),
        scheduler=SchedulerConfig(
            policy=sched.get("policy", "fs"),
            quantum_ms=sched.get("quantum_ms", 10),
            tick_ms=sched.get("tick_ms", 10),
            ts=TsParams(**_typed(sections, "ts")),
            fs=FsParams(**_typed(sections, "fs")),
        ),
        duration_ms=_require(sim, "duration_ms", "[sim]"),
        warmup_ms=sim.get("warmup_ms", 0),
        seed=sim.get("seed", 0),
        name=meta.get("name", "scenario"),
        window_ms=sim.get("window_ms", 10000),
    )


def parse_scenario(text: str, overrides: Iterable[str] = ()) -> Scenario:
    """Parse scenario text. Does not validate; see ``check_scenario``."""
    sections = _tokenize(text)
    apply_overrides(sections, overrides)
    return _build(sections)


def load_scenario(path: str | Path, overrides: Iterable[str] = ()) -> Scenario:
    path = Path(path)
    sections = _tokenize(path.read_text())
    sections.setdefault(("scenario", None), {}).setdefault("name", path.stem)
    apply_overrides(sections, overrides)
    return _build(sections)


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _line(header: str, pairs: Iterable[tuple[str, Any]]) -> str:
    return " ".join([f"[{header}]", *(f"{k}={_fmt(v)}" for k, v in pairs)])


def emit_scenario(s: Scenario) -> str:
    """Serialize ``s``; ``parse_scenario(emit_scenario(s)) == s``."""
    a, c = s.allocation, s.scheduler
    lines = [
        _line("scenario", [("name", s.name)]),
        _line("pool", [("total", a.pool_total), ("capping", a.capping_enabled)]),
    ]
    lines += [_line(f"group.{g.name}", [("shares", g.shares)]) for g in a.groups]
    for u in a.users:
        pairs: list[tuple[str, Any]] = [("group", u.group), ("shares", u.shares)]
        if u.cap is not None:
            pairs.append(("cap", float(u.cap)))
        lines.append(_line(f"user.{u.name}", pairs))
    for name, w in s.workload.users:
        lines.append(_line(f"workload.{name}", [
            ("processes", w.processes), ("demand_ms", float(w.demand_ms)),
            ("think_ms", float(w.think_ms)), ("demand_dist", w.demand_dist),
            ("think_dist", w.think_dist), ("nice", w.nice),
        ]))
    lines.append(_line("scheduler", [
        ("policy", c.policy), ("quantum_ms", c.quantum_ms), ("tick_ms", c.tick_ms),
    ]))
    lines.append(_line("ts", [
        ("levels", c.ts.levels), ("cpu_weight", float(c.ts.cpu_weight)),
        ("decay_per_s", float(c.ts.decay_per_s)), ("nice_weight", float(c.ts.nice_weight)),
        ("sleep_reset", c.ts.sleep_reset),
    ]))
    lines.append(_line("fs", [
        ("usage_window_ms", c.fs.usage_window_ms), ("pri_window_ms", c.fs.pri_window_ms),
        ("decay_usage", float(c.fs.decay_usage)), ("pri_a", float(c.fs.pri_a)),
        ("pri_b", float(c.fs.pri_b)), ("adjust", c.fs.adjust),
    ]))
    lines.append(_line("sim", [
        ("duration_ms", s.duration_ms), ("warmup_ms", s.warmup_ms),
        ("seed", s.seed), ("window_ms", s.window_ms),
    ]))
    return "\n".join(lines) + "\n"


BUNDLED_DIR = Path(__file__).parent / "scenarios"


def bundled_scenarios() -> dict[str, Path]:
    """Shipped scenario files keyed by stem."""
    return {p.stem: p for p in sorted(BUNDLED_DIR.glob("*.scn"))}


def find_scenario(ref: str | Path) -> Path:
    """Resolve a path, falling back to a bundled scenario name."""
    path = Path(ref)
    if path.exists():
        return path
    bundled = bundled_scenarios()
    stem = path.stem if path.suffix == ".scn" else str(ref)
    if stem in bundled:
        return bundled[stem]
    raise FileNotFoundError(f"no scenario file {str(ref)!r} (bundled: {', '.join(bundled)})")
