"""Share-to-entitlement algebra.

Static entitlements divide by the whole pool. Dynamic entitlements divide
by the shares of *active* users only, so an idle user's shares are lent to
everyone still running. Caps clamp the dynamic value; the clamped-off part
is left idle, never handed to other users.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .domain import ScenarioError, ShareAllocation, Violation, _validate_allocation


class NoActiveSharesError(ValueError):
    pass


@dataclass(frozen=True)
class Entitlement:
    user: str
    group: str
    shares: int
    static_e: float
    dynamic_e: float
    effective_e: float
    active: bool
    cap: float | None = None


@dataclass(frozen=True)
class EntitlementTable:
    rows: tuple[Entitlement, ...]
    groups: tuple[tuple[str, float, float, float], ...]  # (group, static, dynamic, effective)
    capping_enabled: bool = False

    def __getitem__(self, name: str) -> Entitlement:
        for r in self.rows:
            if r.user == name:
                return r
        raise KeyError(name)

    def group(self, name: str) -> tuple[float, float, float]:
        for g, s, d, e in self.groups:
            if g == name:
                return s, d, e
        raise KeyError(name)

    def column(self, attr: str) -> dict[str, float]:
        return {r.user: getattr(r, attr) for r in self.rows}

    @property
    def idle_fraction(self) -> float:
        """CPU left unused when every active user demands without limit."""
        return max(0.0, 1.0 - sum(r.effective_e for r in self.rows))


def _checked(alloc: ShareAllocation) -> ShareAllocation:
    out: list[Violation] = []
    _validate_allocation(alloc, out)
    if out:
        raise ScenarioError(
            "invalid allocation:\n  " + "\n  ".join(map(str, out)), tuple(out)
        )
    return alloc


def _table(alloc: ShareAllocation, active: frozenset[str], clamp: bool) -> EntitlementTable:
    active_total = sum(u.shares for u in alloc.users if u.name in active)
    rows = []
    for u in alloc.users:
        static = u.shares / alloc.pool_total
        dynamic = u.shares / active_total if u.name in active else 0.0
        effective = dynamic
        if clamp and alloc.capping_enabled and u.cap is not None:
            effective = min(dynamic, u.cap)
        rows.append(Entitlement(u.name, u.group, u.shares, static, dynamic, effective, u.name in active, u.cap))

    groups = []
    for g in alloc.groups:
        members = [r for r in rows if r.group == g.name]
        groups.append((
            g.name,
            g.shares / alloc.pool_total,
            sum(r.dynamic_e for r in members),
            sum(r.effective_e for r in members),
        ))
    return EntitlementTable(tuple(rows), tuple(groups), alloc.capping_enabled)


def _active_set(alloc: ShareAllocation, active: Iterable[str] | None) -> frozenset[str]:
    if active is None:
        return frozenset(alloc.user_names)
    names = alloc.resolve(active)
    if not names:
        raise NoActiveSharesError("no active shares")
    return names


def static_entitlements(alloc: ShareAllocation) -> EntitlementTable:
    """Everyone active: each user's shares over the pool total."""
    _checked(alloc)
    return _table(alloc, frozenset(alloc.user_names), clamp=False)


def dynamic_entitlements(
    alloc: ShareAllocation, active: Iterable[str] | None = None
) -> EntitlementTable:
    """Entitlements renormalized over the shares of ``active`` users.

    ``active`` may mix user and group names; ``None`` means everyone.
    """
    _checked(alloc)
    return _table(alloc, _active_set(alloc, active), clamp=False)


def effective_entitlements(
    alloc: ShareAllocation, active: Iterable[str] | None = None
) -> EntitlementTable:
    """Dynamic entitlements clamped at each user's cap when capping is on."""
    _checked(alloc)
    return _table(alloc, _active_set(alloc, active), clamp=True)

