"""Averaging change of variables for the linearized system.

The linearization v' = A(t, mu) v is transformed with

    v1 = (1 + mu*a(t)) u1,      v2 = mu*b(t) u1 + mu*u2,

where b is the negated zero-mean antiderivative of phi_hat and a is the
zero-mean antiderivative of b.  The transformed system reads

    u' = mu * (U1 + U2(t, mu) + mu^2 U3(t, mu)) u,

with a constant averaged part U1, a zero-average oscillatory part U2 and a
small remainder U3.  Both a and b are exact trigonometric series here, so no
integrator error enters the certificate constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import LinearizedSystem
from .periodic_signal import (
    PeriodicSignal,
    QuadratureGrid,
    integrate,
    zero_mean_antiderivative,
)

__all__ = [
    "AveragingTransform",
    "TransformedSystem",
    "BogolyubovResult",
    "build_transform",
    "mean_phi_a",
    "build_u1",
    "u1_is_hurwitz",
    "bogolyubov_condition",
    "build_u2_u3",
    "s_matrix",
]


@dataclass(frozen=True)
class AveragingTransform:
    """Periodic zero-mean pair (a, b) with a' = b and b' = -phi_hat."""

    a: PeriodicSignal
    b: PeriodicSignal
    grid: QuadratureGrid
    c_const: float = 1.0


def build_transform(lin: LinearizedSystem, grid: QuadratureGrid) -> AveragingTransform:
    """Construct a(t), b(t) by exact antidifferentiation of the forcing.

    Mean subtraction replaces the integration-offset choice: the zero-mean
    antiderivative coincides with integrating from the (existence-only)
    offsets that make the averages vanish.
    """
    if grid.period != lin.period:
        raise ValueError("grid period must match the system period")
    b = zero_mean_antiderivative(lin.phi_hat).scaled(-1.0)
    a = zero_mean_antiderivative(b)
    return AveragingTransform(a=a, b=b, grid=grid)


def mean_phi_a(lin: LinearizedSystem, tr: AveragingTransform) -> float:
    """(1/T) * integral over one period of phi_hat(t) * a(t)."""
    phi = lin.phi_hat
    a = tr.a
    T = lin.period
    return integrate(lambda t: phi.eval(t) * a.eval(t), 0.0, T, tr.grid) / T


def build_u1(lin: LinearizedSystem, tr: AveragingTransform) -> np.ndarray:
    m = mean_phi_a(lin, tr)
    return np.array([[0.0, 1.0], [-lin.beta_hat - m, -lin.alpha]])


def u1_is_hurwitz(u1: np.ndarray) -> bool:
    """Exact 2x2 criterion: spectrum in the open left half-plane iff trace < 0 < det."""
    u1 = np.asarray(u1, dtype=float)
    tr = u1[0, 0] + u1[1, 1]
    det = u1[0, 0] * u1[1, 1] - u1[0, 1] * u1[1, 0]
    return tr < 0.0 and det > 0.0


class BogolyubovResult(NamedTuple):
    holds: bool
    lhs: float
    rhs: float


def bogolyubov_condition(lin: LinearizedSystem, grid: QuadratureGrid) -> BogolyubovResult:
    """Averaged stability test for the linearized equation.

    holds iff

        (1/T) int_0^T ( int_0^tau phi_hat )^2 dtau
            >  ( (1/T) int_0^T tau phi_hat(tau) dtau )^2  -  beta_hat,

    which guarantees asymptotic stability for all sufficiently small mu > 0.
    For the vibrated pendulum this reduces to the classical condition
    a^2 omega^2 > 2 g l on the pivot oscillation.
    """
    if not lin.alpha > 0.0:
        raise ValueError("condition requires alpha > 0")
    T = lin.period
    B = zero_mean_antiderivative(lin.phi_hat)
    b0 = B.eval(0.0)
    lhs = integrate(lambda t: (B.eval(t) - b0) ** 2, 0.0, T, grid) / T
    m1 = integrate(lambda t: t * lin.phi_hat.eval(t), 0.0, T, grid) / T
    rhs = m1 * m1 - lin.beta_hat
    return BogolyubovResult(holds=bool(lhs > rhs), lhs=float(lhs), rhs=float(rhs))


@dataclass(frozen=True)
class TransformedSystem:
    """Evaluable pieces of u' = mu*(U1 + U2(t,mu) + mu^2 U3(t,mu)) u."""

    u1: np.ndarray
    mean_phi_a: float
    mu: float
    lin: LinearizedSystem
    tr: AveragingTransform

    def u2_at(self, t) -> np.ndarray:
        """U2(t, mu); shape (2, 2) for scalar t, (n, 2, 2) for array t."""
        t = np.asarray(t, dtype=float)
        a = self.tr.a.eval(t)
        b = self.tr.b.eval(t)
        phi = self.lin.phi_hat.eval(t)
        mu = self.mu
        z = np.zeros_like(t)
        e21 = (
            -self.lin.alpha * b
            - mu * self.lin.beta_hat * a
            - phi * a
            + self.mean_phi_a
        )
        out = np.stack(
            [
                np.stack([z, -mu * a], axis=-1),
                np.stack([e21, (mu * a - 1.0) * b], axis=-1),
            ],
            axis=-2,
        )
        return out

    def u3_at(self, t) -> np.ndarray:
        """U3(t, mu); first column is identically zero."""
        t = np.asarray(t, dtype=float)
        a = self.tr.a.eval(t)
        b = self.tr.b.eval(t)
        denom = 1.0 + self.mu * a
        z = np.zeros_like(t)
        out = np.stack(
            [
                np.stack([z, a * a / denom], axis=-1),
                np.stack([z, -a * a * b / denom], axis=-1),
            ],
            axis=-2,
        )
        return out

    def u_total_at(self, t) -> np.ndarray:
        """U1 + U2(t,mu) + mu^2 U3(t,mu)."""
        return self.u1 + self.u2_at(t) + self.mu ** 2 * self.u3_at(t)

    def mu_u_entries(self):
        """Fast scalar closure returning the entries of mu*U(t, mu)."""
        mu = self.mu
        a_fn = self.tr.a.eval_fn()
        b_fn = self.tr.b.eval_fn()
        phi_fn = self.lin.phi_hat.eval_fn()
        alpha = self.lin.alpha
        beta_hat = self.lin.beta_hat
        m = self.mean_phi_a
        u11_0, u12_0 = self.u1[0]
        u21_0, u22_0 = self.u1[1]
        mu2 = mu * mu

        def entries(t: float):
            a = a_fn(t)
            b = b_fn(t)
            phi = phi_fn(t)
            denom = 1.0 + mu * a
            a2 = a * a
            m11 = mu * u11_0
            m12 = mu * (u12_0 - mu * a + mu2 * a2 / denom)
            m21 = mu * (u21_0 - alpha * b - mu * beta_hat * a - phi * a + m)
            m22 = mu * (u22_0 + (mu * a - 1.0) * b - mu2 * a2 * b / denom)
            return m11, m12, m21, m22

        return entries


def build_u2_u3(lin: LinearizedSystem, tr: AveragingTransform, mu: float) -> TransformedSystem:
    """Assemble the transformed system at parameter mu.

    Fails when 1 + mu*a(t) is not positive on the grid, because the change
    of variables degenerates there (this cannot happen for
    mu <= 1/(phi_max*T^2)).
    """
    if not mu > 0.0:
        raise ValueError("mu must be positive")
    pts = np.concatenate([tr.grid.nodes, tr.grid.midpoints])
    if np.min(1.0 + mu * tr.a.eval(pts)) <= 0.0:
        raise ValueError(
            f"transform degenerates: 1 + mu*a(t) <= 0 on the grid at mu={mu}"
        )
    return TransformedSystem(
        u1=build_u1(lin, tr),
        mean_phi_a=mean_phi_a(lin, tr),
        mu=mu,
        lin=lin,
        tr=tr,
    )


def s_matrix(tr: AveragingTransform, mu: float, t) -> np.ndarray:
    """Change-of-variables matrix S(t) with v = S(t) u.

    S = [[1 + mu*a, 0], [mu*b, mu]]; shape (2, 2) or (n, 2, 2).
    """
    t = np.asarray(t, dtype=float)
    a = tr.a.eval(t)
    b = tr.b.eval(t)
    z = np.zeros_like(t)
    one = np.ones_like(t)
    return np.stack(
        [
            np.stack([1.0 + mu * a, z], axis=-1),
            np.stack([mu * b, mu * one], axis=-1),
        ],
        axis=-2,
    )
