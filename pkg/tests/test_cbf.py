"""Barrier constraints and projections against independent oracles."""
import numpy as np
import pytest

from hapticshield.cbf import (
    CbfGains,
    HalfspaceConstraint,
    InfeasibleDegenerate,
    NotConverged,
    build_constraint,
    project_halfspace,
    project_intersection,
)
from hapticshield.geometry import Plane, SphereMargin, Superellipsoid, UavState

from oracles import (
    assert_no_feasible_point_beats,
    enumerate_projection,
    fd_barrier_lhs,
)


def test_gains_validate():
    with pytest.raises(ValueError):
        CbfGains(k1=0.0)
    with pytest.raises(ValueError):
        CbfGains(k2=-1.0)


def test_plane_constraint_hand_example():
    # hovering one meter above a floor while sinking at 1 m/s, unit gains
    # k1 = 1, k2 = 2: the curvature term is zero, h = 1, dh/dt = -1,
    # so a = (0,0,1) and b = -(1*1 + 2*(-1)) = 1.
    floor = Plane(center=(0, 0, -1), normal=(0, 0, 1))
    st = UavState(q=(0, 0, 0), qdot=(0, 0, -1))
    c = build_constraint(floor, st, CbfGains(k1=1.0, k2=2.0))
    np.testing.assert_allclose(c.a, [0, 0, 1])
    assert c.b == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_constraint_matches_time_difference_oracle(seed):
    # a . u - b must equal the second-order barrier expression measured by
    # differencing h along the actual constant-input arc (no analytic
    # derivatives on the oracle side)
    rng = np.random.default_rng(100 + seed)
    fields = [
        Plane(center=rng.normal(size=3), normal=_unit(rng)),
        Superellipsoid(
            center=rng.normal(size=3),
            scale=rng.uniform(0.5, 2.0, size=3),
            exponent=int(rng.choice([2, 4])),
        ),
        SphereMargin(center=rng.normal(size=3), d_min=rng.uniform(0.5, 2.0)),
    ]
    gains = CbfGains(k1=rng.uniform(0.5, 6.0), k2=rng.uniform(0.5, 6.0))
    for f in fields:
        for _ in range(40):
            q = f.center + _unit(rng) * rng.uniform(0.5, 2.5)
            st = UavState(q=q, qdot=rng.normal(scale=2.0, size=3))
            u = rng.normal(scale=3.0, size=3)
            c = build_constraint(f, st, gains)
            lhs = float(c.a @ u) - c.b
            ref = fd_barrier_lhs(f, st, u, gains)
            assert lhs == pytest.approx(ref, rel=1e-3, abs=1e-3)


def _unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


# -- single halfspace --------------------------------------------------------


def test_halfspace_inactive_returns_reference():
    c = HalfspaceConstraint(a=(0, 0, 1), b=-5.0)
    res = project_halfspace((0.3, -1.0, 0.2), c)
    assert not res.active
    assert res.violation == 0.0
    np.testing.assert_allclose(res.u_safe, [0.3, -1.0, 0.2])


def test_halfspace_active_example():
    c = HalfspaceConstraint(a=(0, 0, 1), b=1.0)
    res = project_halfspace((0, 0, 0), c)
    np.testing.assert_allclose(res.u_safe, [0, 0, 1])
    assert res.active
    assert res.violation == pytest.approx(1.0)


def test_halfspace_degenerate_raises():
    c = HalfspaceConstraint(a=(0, 0, 0), b=1.0)
    with pytest.raises(InfeasibleDegenerate):
        project_halfspace((0, 0, 0), c)


def test_halfspace_against_enumeration_oracle():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        a = rng.normal(size=3) * rng.uniform(0.1, 3.0)
        c = HalfspaceConstraint(a=a, b=float(rng.normal(scale=2.0)))
        u_ref = rng.normal(scale=2.0, size=3)
        res = project_halfspace(u_ref, c)
        ref = enumerate_projection(u_ref, [c])
        np.testing.assert_allclose(res.u_safe, ref, atol=1e-6)
        assert float(c.a @ res.u_safe) >= c.b - 1e-9
        # projecting twice changes nothing
        again = project_halfspace(res.u_safe, c)
        np.testing.assert_allclose(again.u_safe, res.u_safe, atol=1e-12)


def test_halfspace_optimality_by_sampling():
    rng = np.random.default_rng(8)
    for _ in range(50):
        c = HalfspaceConstraint(a=rng.normal(size=3), b=float(rng.normal()))
        u_ref = rng.normal(scale=2.0, size=3)
        res = project_halfspace(u_ref, c)
        assert_no_feasible_point_beats(u_ref, [c], res.u_safe, rng, n=200)


# -- intersections -----------------------------------------------------------


def test_orthogonal_intersection_example():
    cs = [
        HalfspaceConstraint(a=(1, 0, 0), b=1.0),
        HalfspaceConstraint(a=(0, 1, 0), b=1.0),
    ]
    res = project_intersection((0, 0, 0), cs)
    np.testing.assert_allclose(res.u_safe, [1, 1, 0], atol=1e-7)
    assert res.active


def test_single_constraint_reduces_to_halfspace():
    rng = np.random.default_rng(9)
    for _ in range(50):
        c = HalfspaceConstraint(a=rng.normal(size=3), b=float(rng.normal()))
        u = rng.normal(size=3)
        lone = project_intersection(u, [c])
        direct = project_halfspace(u, c)
        np.testing.assert_allclose(lone.u_safe, direct.u_safe, atol=1e-12)


def test_intersection_against_enumeration_oracle():
    rng = np.random.default_rng(10)
    for _ in range(200):
        m = int(rng.integers(1, 4))
        cs = [
            HalfspaceConstraint(
                a=rng.normal(size=3) * rng.uniform(0.2, 2.0),
                b=float(rng.normal(scale=1.5)),
            )
            for _ in range(m)
        ]
        u_ref = rng.normal(scale=2.0, size=3)
        ref = enumerate_projection(u_ref, cs)
        if ref is None:
            with pytest.raises(NotConverged):
                project_intersection(u_ref, cs)
            continue
        res = project_intersection(u_ref, cs)
        np.testing.assert_allclose(res.u_safe, ref, atol=1e-6)
        for c in cs:
            assert float(c.a @ res.u_safe) >= c.b - 1e-7
        # idempotence
        again = project_intersection(res.u_safe, cs)
        np.testing.assert_allclose(again.u_safe, res.u_safe, atol=1e-6)


def test_intersection_agrees_with_halfspace_when_one_active():
    rng = np.random.default_rng(11)
    seen = 0
    while seen < 40:
        cs = [
            HalfspaceConstraint(a=rng.normal(size=3), b=float(rng.normal()))
            for _ in range(3)
        ]
        u_ref = rng.normal(scale=2.0, size=3)
        ref = enumerate_projection(u_ref, cs)
        if ref is None:
            continue
        violated = [c for c in cs if float(c.a @ u_ref) < c.b]
        active_at_opt = [
            c for c in cs if abs(float(c.a @ ref) - c.b) < 1e-8
        ]
        if len(violated) != 1 or len(active_at_opt) != 1:
            continue
        res = project_intersection(u_ref, cs)
        direct = project_halfspace(u_ref, active_at_opt[0])
        np.testing.assert_allclose(res.u_safe, direct.u_safe, atol=1e-6)
        seen += 1


def test_empty_intersection_raises_with_diagnostics():
    cs = [
        HalfspaceConstraint(a=(0, 0, 1), b=1.0),
        HalfspaceConstraint(a=(0, 0, -1), b=1.0),  # u_z <= -1 and u_z >= 1
    ]
    with pytest.raises(NotConverged) as exc:
        project_intersection((0, 0, 0), cs)
    assert exc.value.residual > 0.1
    assert exc.value.best.shape == (3,)


def test_degenerate_member_constraint():
    good = HalfspaceConstraint(a=(1, 0, 0), b=1.0)
    vacuous = HalfspaceConstraint(a=(0, 0, 0), b=-2.0)  # 0 >= -2 always
    res = project_intersection((0, 0, 0), [good, vacuous])
    np.testing.assert_allclose(res.u_safe, [1, 0, 0], atol=1e-9)
    hopeless = HalfspaceConstraint(a=(0, 0, 0), b=2.0)
    with pytest.raises(InfeasibleDegenerate):
        project_intersection((0, 0, 0), [good, hopeless])


def test_violation_reports_distance_moved():
    rng = np.random.default_rng(12)
    for _ in range(100):
        cs = [
            HalfspaceConstraint(a=_unit(rng), b=float(rng.normal()))
            for _ in range(2)
        ]
        u_ref = rng.normal(size=3)
        try:
            res = project_intersection(u_ref, cs)
        except NotConverged:
            continue
        assert res.violation == pytest.approx(
            float(np.linalg.norm(res.u_safe - u_ref)), abs=1e-12
        )
        assert res.active == (res.violation > 1e-12)
