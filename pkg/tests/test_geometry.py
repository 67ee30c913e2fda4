"""Safety fields: values, analytic derivatives vs finite differences, dynamics."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hapticshield.geometry import (
    DegeneratePoint,
    Plane,
    SphereMargin,
    Superellipsoid,
    UavState,
    eval_h,
    grad_h,
    hess_h,
    step_dynamics,
)

from oracles import fd_gradient, fd_hessian


def test_plane_values():
    p = Plane(center=(0, 0, 1), normal=(0, 0, 1))
    assert eval_h(p, (0, 0, 3)) == pytest.approx(2.0)
    assert eval_h(p, (5, -2, 1)) == pytest.approx(0.0)
    assert eval_h(p, (0, 0, 0)) == pytest.approx(-1.0)
    np.testing.assert_allclose(grad_h(p, (9, 9, 9)), [0, 0, 1])
    np.testing.assert_allclose(hess_h(p, (9, 9, 9)), np.zeros((3, 3)))


def test_plane_requires_unit_normal():
    with pytest.raises(ValueError):
        Plane(center=(0, 0, 0), normal=(0, 0, 2))


def test_superellipsoid_sphere_case():
    s = Superellipsoid(center=(0, 0, 0), scale=(1, 1, 1), exponent=2)
    assert eval_h(s, (2, 0, 0)) == pytest.approx(3.0)
    assert eval_h(s, (1, 0, 0)) == pytest.approx(0.0)
    assert eval_h(s, (0, 0, 0)) == pytest.approx(-1.0)


def test_superellipsoid_gradient_example():
    # frozen from the central-difference oracle; also checked against it below
    s = Superellipsoid(center=(0, 0, 0), scale=(1, 2, 1), exponent=4)
    q = (0.5, 1.0, 0.0)
    np.testing.assert_allclose(grad_h(s, q), [0.5, 0.25, 0.0], atol=1e-12)
    np.testing.assert_allclose(grad_h(s, q), fd_gradient(s, q), rtol=1e-4, atol=1e-7)


def test_superellipsoid_rejects_odd_or_small_exponent():
    for bad in (1, 3, 0, -2):
        with pytest.raises(ValueError):
            Superellipsoid(center=(0, 0, 0), scale=(1, 1, 1), exponent=bad)
    with pytest.raises(ValueError):
        Superellipsoid(center=(0, 0, 0), scale=(1, 0, 1), exponent=2)


def test_sphere_margin_values_and_curvature():
    f = SphereMargin(center=(0, 0, 0), d_min=1.0)
    q = (2.0, 0.0, 0.0)
    assert eval_h(f, q) == pytest.approx(1.0)
    np.testing.assert_allclose(grad_h(f, q), [1, 0, 0], atol=1e-12)
    # curvature of the distance field: (I - r r^T)/||q - c||
    np.testing.assert_allclose(hess_h(f, q), np.diag([0.0, 0.5, 0.5]), atol=1e-12)


def test_sphere_margin_degenerate_at_center():
    f = SphereMargin(center=(1, 2, 3), d_min=0.5)
    with pytest.raises(DegeneratePoint):
        grad_h(f, (1, 2, 3))
    with pytest.raises(DegeneratePoint):
        hess_h(f, (1, 2, 3))


def _unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _probe_point(field, rng):
    """A query point near the field but away from derivative singularities
    and away from the steep far tail of high-exponent fields (there the
    field values grow like |q/a|^6 and finite differences lose all their
    significant digits to cancellation)."""
    if isinstance(field, Superellipsoid):
        return field.center + field.scale * rng.uniform(-1.6, 1.6, size=3)
    offset = _unit(rng) * rng.uniform(0.3, 2.5)
    return field.center + offset


@pytest.mark.parametrize(
    "family,seed", [("plane", 11), ("superellipsoid", 22), ("sphere", 33)]
)
def test_derivatives_match_finite_differences(family, seed):
    rng = np.random.default_rng(seed)
    checked = 0
    while checked < 1000:
        f = {
            "plane": lambda: Plane(center=rng.normal(size=3), normal=_unit(rng)),
            "superellipsoid": lambda: Superellipsoid(
                center=rng.normal(size=3),
                scale=rng.uniform(0.4, 2.0, size=3),
                exponent=int(rng.choice([2, 4, 6])),
            ),
            "sphere": lambda: SphereMargin(
                center=rng.normal(size=3), d_min=rng.uniform(0.3, 2.0)
            ),
        }[family]()
        q = _probe_point(f, rng)
        g = grad_h(f, q)
        H = hess_h(f, q)
        np.testing.assert_allclose(g, fd_gradient(f, q), rtol=1e-4, atol=1e-6)
        np.testing.assert_allclose(H, fd_hessian(f, q), rtol=1e-3, atol=5e-4)
        np.testing.assert_allclose(H, H.T)  # symmetry comes with the math
        checked += 1


def test_eval_rejects_nonfinite():
    p = Plane(center=(0, 0, 0), normal=(0, 0, 1))
    with pytest.raises(ValueError):
        eval_h(p, (np.nan, 0, 0))


# -- dynamics ---------------------------------------------------------------


def test_constant_push_approximates_parabola():
    s = UavState(q=(0, 0, 0), qdot=(0, 0, 0))
    for _ in range(100):
        s = step_dynamics(s, (1, 0, 0), dt=0.01)
    # discrete semi-implicit sum: dt^2 * N(N+1)/2 = 0.505 for the unit push
    assert s.q[0] == pytest.approx(0.505, abs=1e-12)
    assert abs(s.q[0] - 0.5) <= 1e-2  # near the exact 0.5 t^2
    assert s.q[1] == 0 and s.q[2] == 0


def test_velocity_clamp_keeps_direction():
    s = UavState(q=(0, 0, 0), qdot=(0, 0, 0))
    s = step_dynamics(s, (1000, 1000, 0), dt=0.01, v_max=5.0)
    assert np.linalg.norm(s.qdot) == pytest.approx(5.0)
    assert s.qdot[0] == pytest.approx(s.qdot[1])


@settings(max_examples=200, deadline=None)
@given(
    v=st.lists(st.floats(-10, 10), min_size=3, max_size=3),
    u=st.lists(st.floats(-50, 50), min_size=3, max_size=3),
    dt=st.floats(1e-4, 0.1),
)
def test_speed_never_exceeds_cap(v, u, dt):
    s0 = UavState(q=(0, 0, 0), qdot=(0, 0, 0))
    s0 = step_dynamics(s0, v, dt=1.0, v_max=1e9)  # set an arbitrary velocity
    s = step_dynamics(UavState(q=s0.q, qdot=np.clip(s0.qdot, -5, 5)), u, dt=dt)
    assert np.linalg.norm(s.qdot) <= 5.0 + 1e-12


def test_step_rejects_bad_dt():
    s = UavState(q=(0, 0, 0), qdot=(0, 0, 0))
    for dt in (0.0, -0.1, np.nan):
        with pytest.raises(ValueError):
            step_dynamics(s, (0, 0, 0), dt=dt)
