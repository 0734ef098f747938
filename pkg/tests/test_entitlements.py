import pytest
from hypothesis import given, settings, strategies as st

from fairshare.domain import Group, ScenarioError, ShareAllocation, User
from fairshare.entitlements import (
    NoActiveSharesError,
    dynamic_entitlements,
    effective_entitlements,
    static_entitlements,
)
import oracles

CONSOLIDATION = ShareAllocation(
    100,
    (Group("DBMS", 60), Group("Web", 10), Group("Users", 30)),
    (
        User("dbms", "DBMS", 60), User("web", "Web", 10),
        User("usrA", "Users", 6), User("usrB", "Users", 5), User("usrC", "Users", 19),
    ),
)
SOLO = ShareAllocation(
    100, (Group("Budget", 10), Group("Rest", 90)),
    (User("capped", "Budget", 10, cap=0.10), User("other", "Rest", 90)),
)


def test_static_groups_and_users():
    t = static_entitlements(CONSOLIDATION)
    assert [round(t.group(g)[0], 12) for g in ("DBMS", "Web", "Users")] == [0.60, 0.10, 0.30]
    assert abs(t["usrA"].static_e - 0.06) < 1e-12
    assert abs(t["usrB"].static_e - 0.05) < 1e-12
    assert abs(t["usrC"].static_e - 0.19) < 1e-12


def test_single_user_holds_whole_pool():
    alloc = ShareAllocation(7, (Group("g", 7),), (User("u", "g", 7),))
    assert static_entitlements(alloc)["u"].static_e == 1.0


def test_dbms_inactive_renormalizes():
    t = dynamic_entitlements(CONSOLIDATION, ["Web", "Users"])
    expect = {"dbms": 0.0, "web": 0.25, "usrA": 0.15, "usrB": 0.125, "usrC": 0.475}
    for name, e in expect.items():
        assert abs(t[name].dynamic_e - e) < 1e-12
    oracle = oracles.entitlements({u.name: u.shares for u in CONSOLIDATION.users},
                                  {"web", "usrA", "usrB", "usrC"})
    for name, e in oracle.items():
        assert abs(t[name].dynamic_e - float(e)) < 1e-12


def test_all_active_dynamic_equals_static():
    t = dynamic_entitlements(CONSOLIDATION)
    for r in t.rows:
        assert r.dynamic_e == pytest.approx(r.static_e, abs=1e-15)


def test_sole_active_user_gets_everything_unless_capped():
    assert dynamic_entitlements(SOLO, ["capped"])["capped"].dynamic_e == 1.0
    uncapped = effective_entitlements(SOLO, ["capped"])
    assert uncapped["capped"].effective_e == 1.0  # capping disabled in SOLO
    on = ShareAllocation(SOLO.pool_total, SOLO.groups, SOLO.users, capping_enabled=True)
    t = effective_entitlements(on, ["capped"])
    assert t["capped"].effective_e == pytest.approx(0.10)
    assert t.idle_fraction == pytest.approx(0.90)


def test_empty_active_set_rejected():
    with pytest.raises(NoActiveSharesError, match="no active shares"):
        dynamic_entitlements(CONSOLIDATION, [])


def test_invalid_allocation_rejected():
    bad = ShareAllocation(100, (Group("g", 90),), (User("u", "g", 90),))
    with pytest.raises(ScenarioError):
        static_entitlements(bad)


# ---- properties over generated allocations


@st.composite
def allocations(draw):
    n = draw(st.integers(1, 8))
    shares = draw(st.lists(st.integers(1, 1000), min_size=n, max_size=n))
    caps = draw(st.lists(st.none() | st.floats(0.001, 1.0), min_size=n, max_size=n))
    names = [f"u{i}" for i in range(n)]
    users = tuple(User(nm, f"g{i}", sh, cap) for i, (nm, sh, cap) in enumerate(zip(names, shares, caps)))
    groups = tuple(Group(f"g{i}", sh) for i, sh in enumerate(shares))
    alloc = ShareAllocation(sum(shares), groups, users, draw(st.booleans()))
    active = draw(st.sets(st.sampled_from(names), min_size=1))
    return alloc, active


@settings(max_examples=1500)
@given(allocations())
def test_dynamic_matches_exact_oracle_and_sums_to_one(case):
    alloc, active = case
    t = dynamic_entitlements(alloc, active)
    exact = oracles.entitlements({u.name: u.shares for u in alloc.users}, active)
    for r in t.rows:
        assert abs(r.dynamic_e - float(exact[r.user])) < 1e-12
        if r.active:
            assert r.dynamic_e >= r.static_e - 1e-12
    assert abs(sum(r.dynamic_e for r in t.rows if r.active) - 1.0) < 1e-12
    if len(active) == len(alloc.users):
        assert all(abs(r.dynamic_e - r.static_e) < 1e-12 for r in t.rows)
    elif any(u.shares for u in alloc.users if u.name not in active):
        assert all(r.dynamic_e > r.static_e for r in t.rows if r.active)


@settings(max_examples=1500)
@given(allocations(), st.data())
def test_removing_a_user_never_lowers_others(case, data):
    alloc, active = case
    if len(active) < 2:
        return
    gone = data.draw(st.sampled_from(sorted(active)))
    before = dynamic_entitlements(alloc, active)
    after = dynamic_entitlements(alloc, active - {gone})
    for name in active - {gone}:
        assert after[name].dynamic_e >= before[name].dynamic_e - 1e-15


@settings(max_examples=1000)
@given(allocations(), st.integers(2, 50))
def test_scale_invariance(case, k):
    alloc, active = case
    scaled = ShareAllocation(
        alloc.pool_total * k,
        tuple(Group(g.name, g.shares * k) for g in alloc.groups),
        tuple(User(u.name, u.group, u.shares * k, u.cap) for u in alloc.users),
        alloc.capping_enabled,
    )
    a, b = effective_entitlements(alloc, active), effective_entitlements(scaled, active)
    for x, y in zip(a.rows, b.rows):
        assert abs(x.static_e - y.static_e) < 1e-12
        assert abs(x.dynamic_e - y.dynamic_e) < 1e-12
        assert abs(x.effective_e - y.effective_e) < 1e-12
    best = lambda t: max(t.rows, key=lambda r: (r.dynamic_e, r.user)).user  # noqa: E731
    assert best(a) == best(b)


@settings(max_examples=1000)
@given(allocations())
def test_cap_clamp(case):
    alloc, active = case
    t = effective_entitlements(alloc, active)
    for r in t.rows:
        if alloc.capping_enabled and r.cap is not None:
            assert r.effective_e == min(r.dynamic_e, r.cap)
            assert r.effective_e <= r.cap
        else:
            assert r.effective_e == r.dynamic_e
    assert sum(r.effective_e for r in t.rows) <= 1.0 + 1e-12


@given(allocations())
def test_unit_caps_are_identity(case):
    alloc, active = case
    ones = ShareAllocation(
        alloc.pool_total, alloc.groups,
        tuple(User(u.name, u.group, u.shares, 1.0) for u in alloc.users), True,
    )
    t = effective_entitlements(ones, active)
    assert all(r.effective_e == r.dynamic_e for r in t.rows)
