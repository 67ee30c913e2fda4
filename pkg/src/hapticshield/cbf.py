"""Control-barrier constraints and safe-input projections.

For the double integrator x = [q, qdot], qddot = u, a safety field h(q) has
relative degree two, so the barrier condition with gain row K = [k1, k2] is

    Lf^2 h + Lg Lf h . u + k1*h + k2*Lf h >= 0

with Lf h = grad_h . qdot, Lf^2 h = qdot^T hess_h qdot and Lg Lf h = grad_h.
Collecting terms gives one linear halfspace in the acceleration input:

    a . u >= b,    a = grad_h(q),
                   b = -(qdot^T hess_h qdot + k1*h + k2*(grad_h . qdot)).

The safe input closest to a reference u_ref is then a Euclidean projection:
onto a single halfspace it is closed form, onto an intersection of
halfspaces it is computed with Dykstra's alternating projections (plain
alternating projections find *a* feasible point; Dykstra's correction
vectors make the limit the actual nearest point).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import SafetyField, UavState, as_vec3, eval_h, grad_h, hess_h

#: gradients shorter than this are treated as degenerate (no usable direction)
EPS_GRADIENT = 1e-9


class InfeasibleDegenerate(ValueError):
    """A violated constraint has no usable gradient direction."""


class NotConverged(RuntimeError):
    """Dykstra did not reach a feasible fixed point.

    Signals an empty or ill-conditioned intersection. Carries the best
    iterate and its worst signed violation so callers can decide on a
    fallback policy.
    """

    def __init__(self, message: str, best: np.ndarray, residual: float):
        super().__init__(message)
        self.best = best
        self.residual = residual


@dataclass(frozen=True)
class CbfGains:
    """Gain row K = [k1, k2] applied to [h, dh/dt]. Both must be positive."""

    k1: float = 4.0
    k2: float = 4.0

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError(f"gains must be positive, got k1={self.k1} k2={self.k2}")


@dataclass(frozen=True)
class HalfspaceConstraint:
    """Feasible set {u : a . u >= b} for one field at one state."""

    a: np.ndarray
    b: float
    obstacle_id: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "a", as_vec3(self.a))
        if not np.isfinite(self.b):
            raise ValueError(f"constraint offset must be finite, got {self.b}")
        object.__setattr__(self, "b", float(self.b))

    def satisfied_by(self, u, slack: float = 0.0) -> bool:
        return float(self.a @ as_vec3(u)) >= self.b - slack


@dataclass(frozen=True)
class SafeInput:
    """Projection result: the safe input, whether the constraint bound it,
    and how far the reference had to move (violation = ||u_safe - u_ref||)."""

    u_safe: np.ndarray
    active: bool
    violation: float

    def __post_init__(self):
        object.__setattr__(self, "u_safe", as_vec3(self.u_safe))


def build_constraint(
    field: SafetyField,
    state: UavState,
    gains: CbfGains = CbfGains(),
    obstacle_id: Optional[int] = None,
) -> HalfspaceConstraint:
    """Second-order barrier constraint of one field at the current state.

    May raise DegeneratePoint from the field derivatives (e.g. querying a
    sphere-margin field exactly at its center).
    """
    g = grad_h(field, state.q)
    H = hess_h(field, state.q)
    h = eval_h(field, state.q)
    qd = state.qdot
    b = -(float(qd @ H @ qd) + gains.k1 * h + gains.k2 * float(g @ qd))
    return HalfspaceConstraint(a=g, b=b, obstacle_id=obstacle_id)


def project_halfspace(u_ref, c: HalfspaceConstraint) -> SafeInput:
    """Closest point to u_ref in {u : a . u >= b}.

    Inactive constraints return u_ref unchanged. Active ones move along the
    constraint normal by the deficit:

        u_safe = u_ref + (b - a . u_ref)/||a||^2 * a

    Raises InfeasibleDegenerate when the constraint is violated but
    ||a|| <= EPS_GRADIENT, i.e. there is no direction that can fix it.
    """
    u = as_vec3(u_ref)
    s = float(c.a @ u)
    if s >= c.b:
        return SafeInput(u_safe=u, active=False, violation=0.0)
    na2 = float(c.a @ c.a)
    if na2 <= EPS_GRADIENT**2:
        raise InfeasibleDegenerate(
            f"violated constraint with near-zero gradient (||a||^2={na2:.3e})"
        )
    u_safe = u + ((c.b - s) / na2) * c.a
    violation = float(np.linalg.norm(u_safe - u))
    return SafeInput(u_safe=u_safe, active=violation > 1e-12, violation=violation)


def project_intersection(
    u_ref,
    cs: Sequence[HalfspaceConstraint],
    tol: float = 1e-9,
    max_sweeps: int = 10_000,
) -> SafeInput:
    """Nearest point to u_ref in the intersection of all halfspaces.

    Dykstra's scheme keeps one correction vector p_i per constraint:

        y      = x + p_i
        x_new  = P_i(y)
        p_i    = y - x_new

    and sweeps the constraints cyclically. For halfspaces each P_i is the
    closed-form projection above. Convergence is declared when a full sweep
    moves the iterate by less than ``tol`` *and* the iterate is feasible;
    a stalled infeasible iterate (the signature of an empty intersection,
    where plain iterates cycle between the nearest boundary points) or
    hitting ``max_sweeps`` raises NotConverged with the best iterate.

    Constraints with near-zero gradients are vacuous when already satisfied
    at u = anything (b <= 0) and hopeless otherwise; the former are dropped,
    the latter raise InfeasibleDegenerate up front.
    """
    u = as_vec3(u_ref)
    if len(cs) == 0:
        raise ValueError("need at least one constraint")

    for c in cs:
        if float(c.a @ c.a) <= EPS_GRADIENT**2 and c.b > 0:
            raise InfeasibleDegenerate(
                f"degenerate constraint can never hold (b={c.b:.3e} > 0, a~0)"
            )
    # a ~ 0 with b <= 0 means 0 >= b always holds; drop as vacuous
    live = [c for c in cs if float(c.a @ c.a) > EPS_GRADIENT**2]

    if not live:
        return SafeInput(u_safe=u, active=False, violation=0.0)
    if len(live) == 1:
        return project_halfspace(u, live[0])

    A = np.stack([c.a for c in live])
    b = np.array([c.b for c in live])
    na2 = np.einsum("ij,ij->i", A, A)
    na = np.sqrt(na2)

    x = u.copy()
    p = np.zeros_like(A)
    for _ in range(max_sweeps):
        x_prev = x.copy()
        for i in range(len(live)):
            y = x + p[i]
            s = float(A[i] @ y)
            if s < b[i]:
                x = y + ((b[i] - s) / na2[i]) * A[i]
            else:
                x = y
            p[i] = y - x
        if float(np.linalg.norm(x - x_prev)) < tol:
            residual = float(np.max((b - A @ x) / na))
            if residual <= 1e-7:
                violation = float(np.linalg.norm(x - u))
                return SafeInput(
                    u_safe=x, active=violation > 1e-12, violation=violation
                )
            raise NotConverged(
                f"iterate stalled while infeasible (residual {residual:.3e}); "
                "intersection is empty or ill-conditioned",
                best=x,
                residual=residual,
            )
    residual = float(np.max((b - A @ x) / na))
    raise NotConverged(
        f"no fixed point within {max_sweeps} sweeps (residual {residual:.3e})",
        best=x,
        residual=residual,
    )
