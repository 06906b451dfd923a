"""Matrizants, monodromy spectra and periodic Lyapunov solutions.

For the linear T-periodic system v' = A(t) v, asymptotic stability is
equivalent to the monodromy matrix Y(T) having spectrum inside the unit
disk, and also to solvability of the periodic Lyapunov boundary value
problem

    H' + H A(t) + A(t)^T H = -I,    H(0) = H(T) > 0.

The positive periodic solution is the tail integral

    H(t) = (Y(t)^T)^{-1} ( int_t^inf Y(s)^T Y(s) ds ) Y(t)^{-1},

which at t = 0 collapses to the 2x2 discrete Lyapunov equation
X = M^T X M + Q with M = Y(T) and Q = int_0^T Y^T Y ds.  Everything here is
dimension 2, so eigenvalues, inverses and the small Lyapunov solves are
closed-form linear algebra.

Two numerical hazards near the certified parameter range are handled
explicitly:

* multipliers sit within ~1e-8 of the unit circle and the one-period
  discriminant underflows double precision; the spectral radius is
  extracted by scaled repeated squaring, which unwinds the rotation until
  the eigenstructure is resolvable;
* the Lyapunov solution in original coordinates has condition of order
  1/mu^2, so the certificate path solves the problem in averaged
  coordinates (where the solution is well conditioned) and maps back
  through the closed-form change of variables, keeping h_min and h_max at
  full relative accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .averaging import AveragingTransform, build_u2_u3, u1_is_hurwitz
from .model import LinearizedSystem, system_matrix_entries

__all__ = [
    "Matrizant",
    "PeriodicLyapunovSolution",
    "UnstableSystemError",
    "matrizant",
    "spectral_radius_monodromy",
    "spectral_radius_from_deviation",
    "deviation_matrizant",
    "solve_constant_lyapunov",
    "solve_periodic_lyapunov",
    "solve_periodic_lyapunov_scaled",
    "spectral_radius_linear_system",
    "truncated_lyapunov_sum",
    "krein_envelope",
    "bvp_residual",
    "spectral_norm_2x2",
    "sym_eig_bounds",
]


class UnstableSystemError(RuntimeError):
    """Raised when a positive periodic Lyapunov solution does not exist."""


# ---------------------------------------------------------------------------
# small dense helpers


def spectral_norm_2x2(m) -> float:
    """Operator 2-norm via the closed-form largest Gram eigenvalue."""
    m = np.asarray(m, dtype=float)
    g11 = m[0, 0] ** 2 + m[1, 0] ** 2
    g22 = m[0, 1] ** 2 + m[1, 1] ** 2
    g12 = m[0, 0] * m[0, 1] + m[1, 0] * m[1, 1]
    lam = 0.5 * (g11 + g22 + math.hypot(g11 - g22, 2.0 * g12))
    return math.sqrt(max(lam, 0.0))


def sym_eig_bounds(h11, h12, h22, det=None):
    """(lambda_min, lambda_max) of a symmetric 2x2, vectorized.

    The max eigenvalue uses the cancellation-free discriminant
    (h11-h22)^2 + 4 h12^2; the min eigenvalue is recovered from the
    determinant, which the caller may supply from a better-conditioned
    source than the entry products.
    """
    h11 = np.asarray(h11, dtype=float)
    h12 = np.asarray(h12, dtype=float)
    h22 = np.asarray(h22, dtype=float)
    if det is None:
        det = h11 * h22 - h12 * h12
    tr = h11 + h22
    root = np.hypot(h11 - h22, 2.0 * h12)
    lmax = 0.5 * (tr + root)
    lmin = np.where(lmax != 0.0, det / np.where(lmax != 0.0, lmax, 1.0), 0.5 * (tr - root))
    return lmin, lmax


def _inv_2x2_nodes(Y: np.ndarray) -> np.ndarray:
    det = Y[:, 0, 0] * Y[:, 1, 1] - Y[:, 0, 1] * Y[:, 1, 0]
    if np.min(np.abs(det)) <= 1e-14:
        raise ArithmeticError("matrizant determinant fell below the 1e-14 guard")
    inv = np.empty_like(Y)
    inv[:, 0, 0] = Y[:, 1, 1] / det
    inv[:, 0, 1] = -Y[:, 0, 1] / det
    inv[:, 1, 0] = -Y[:, 1, 0] / det
    inv[:, 1, 1] = Y[:, 0, 0] / det
    return inv


def _sandwich(L: np.ndarray, Mid: np.ndarray) -> np.ndarray:
    """L^T Mid L per node."""
    return np.einsum("nji,njk,nkl->nil", L, Mid, L)


# ---------------------------------------------------------------------------
# matrizants


@dataclass(frozen=True)
class Matrizant:
    """Fundamental matrix Y(t) on a uniform grid over [0, T], Y(0) = I."""

    times: np.ndarray
    Y: np.ndarray
    step: float

    @property
    def monodromy(self) -> np.ndarray:
        return self.Y[-1]


def _entries_fn(A):
    """Normalize a matrix callable to a flat 4-tuple closure."""
    probe = A(0.0)
    if isinstance(probe, tuple) and len(probe) == 4:
        return A

    def entries(t: float):
        m = np.asarray(A(t), dtype=float)
        return m[0, 0], m[0, 1], m[1, 0], m[1, 1]

    return entries


def matrizant(A, T: float, n_steps: int = 4096) -> Matrizant:
    """Classical RK4 integration of Y' = A(t) Y, Y(0) = I, fixed step T/n_steps.

    ``A`` maps t to a 2x2 array or to a flat (a11, a12, a21, a22) tuple.
    """
    if n_steps < 64:
        raise ValueError("n_steps must be at least 64")
    ent = _entries_fn(A)
    h = T / n_steps
    out = np.empty((n_steps + 1, 4))
    y11, y12, y21, y22 = 1.0, 0.0, 0.0, 1.0
    out[0] = (y11, y12, y21, y22)

    def rhs(t, y11, y12, y21, y22):
        a11, a12, a21, a22 = ent(t)
        return (
            a11 * y11 + a12 * y21,
            a11 * y12 + a12 * y22,
            a21 * y11 + a22 * y21,
            a21 * y12 + a22 * y22,
        )

    sixth = h / 6.0
    half = 0.5 * h
    for i in range(n_steps):
        t = i * h
        k1 = rhs(t, y11, y12, y21, y22)
        k2 = rhs(
            t + half,
            y11 + half * k1[0],
            y12 + half * k1[1],
            y21 + half * k1[2],
            y22 + half * k1[3],
        )
        k3 = rhs(
            t + half,
            y11 + half * k2[0],
            y12 + half * k2[1],
            y21 + half * k2[2],
            y22 + half * k2[3],
        )
        k4 = rhs(
            t + h,
            y11 + h * k3[0],
            y12 + h * k3[1],
            y21 + h * k3[2],
            y22 + h * k3[3],
        )
        y11 += sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        y12 += sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        y21 += sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
        y22 += sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3])
        out[i + 1] = (y11, y12, y21, y22)

    times = np.arange(n_steps + 1) * h
    return Matrizant(times=times, Y=out.reshape(-1, 2, 2), step=h)


def deviation_matrizant(entries, T: float, n_steps: int = 4096):
    """Integrate Z' = W(t)(I + Z), Z(0) = 0, so that Y = I + Z exactly.

    Used when W is small (averaged systems at small mu): storing the
    deviation instead of Y itself keeps absolute roundoff at the scale of
    Z rather than at the scale of the identity, which is what makes
    one-period stability margins of order mu resolvable.
    """
    if n_steps < 64:
        raise ValueError("n_steps must be at least 64")
    h = T / n_steps
    out = np.empty((n_steps + 1, 4))
    z11 = z12 = z21 = z22 = 0.0
    out[0] = (0.0, 0.0, 0.0, 0.0)

    def rhs(t, z11, z12, z21, z22):
        w11, w12, w21, w22 = entries(t)
        return (
            w11 * (1.0 + z11) + w12 * z21,
            w11 * z12 + w12 * (1.0 + z22),
            w21 * (1.0 + z11) + w22 * z21,
            w21 * z12 + w22 * (1.0 + z22),
        )

    sixth = h / 6.0
    half = 0.5 * h
    for i in range(n_steps):
        t = i * h
        k1 = rhs(t, z11, z12, z21, z22)
        k2 = rhs(
            t + half,
            z11 + half * k1[0],
            z12 + half * k1[1],
            z21 + half * k1[2],
            z22 + half * k1[3],
        )
        k3 = rhs(
            t + half,
            z11 + half * k2[0],
            z12 + half * k2[1],
            z21 + half * k2[2],
            z22 + half * k2[3],
        )
        k4 = rhs(
            t + h,
            z11 + h * k3[0],
            z12 + h * k3[1],
            z21 + h * k3[2],
            z22 + h * k3[3],
        )
        z11 += sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        z12 += sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        z21 += sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
        z22 += sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3])
        out[i + 1] = (z11, z12, z21, z22)

    times = np.arange(n_steps + 1) * h
    return times, out.reshape(-1, 2, 2)


# ---------------------------------------------------------------------------
# spectra

_DISC_TOL = 1e-9
_MAX_DOUBLINGS = 60


def _radius_if_resolved(m11, m12, m21, m22):
    """Closed-form 2x2 spectral radius plus a resolution flag.

    The flag is False when the discriminant is numerically indistinguishable
    from zero, i.e. when the two eigenvalues cannot be separated in double
    precision; |tr|/2 (the double-root modulus) is returned as the estimate.
    """
    tr = m11 + m22
    det = m11 * m22 - m12 * m21
    disc = tr * tr - 4.0 * det
    scale = tr * tr + 4.0 * abs(det)
    if abs(disc) <= _DISC_TOL * scale:
        return 0.5 * abs(tr), False
    if disc > 0.0:
        return 0.5 * (abs(tr) + math.sqrt(disc)), True
    # complex pair: |lambda|^2 = det (> tr^2/4 >= 0 here)
    return math.sqrt(det), True


def _robust_spectral_radius(M: np.ndarray) -> float:
    """Spectral radius of a real 2x2 by scaled repeated squaring.

    rho(M) = rho(M^(2^j))^(1/2^j); squaring separates multiplier pairs that
    hug the unit circle (slow Floquet rotation) far beyond what one-shot
    eigenvalue extraction resolves.  Matrices are renormalized at every
    squaring and the log of the scale is accumulated.
    """
    n = np.array(M, dtype=float)
    logc = 0.0
    k = 1
    for _ in range(_MAX_DOUBLINGS):
        r, resolved = _radius_if_resolved(n[0, 0], n[0, 1], n[1, 0], n[1, 1])
        if resolved:
            break
        p = n @ n
        s = float(np.max(np.abs(p)))
        if s == 0.0:
            return 0.0
        n = p / s
        logc = 2.0 * logc + math.log(s)
        k *= 2
    else:
        r, _ = _radius_if_resolved(n[0, 0], n[0, 1], n[1, 0], n[1, 1])
    if r == 0.0:
        return 0.0
    if k == 1:
        return r
    return math.exp((logc + math.log(r)) / k)


def spectral_radius_monodromy(m: Matrizant) -> float:
    """Largest Floquet multiplier modulus of the monodromy matrix Y(T)."""
    return _robust_spectral_radius(m.monodromy)


def spectral_radius_from_deviation(Z: np.ndarray) -> float:
    """Spectral radius of I + Z computed from Z directly.

    For M = I + Z the characteristic discriminant of M equals that of Z,
    so eigenvalues are 1 + lambda(Z) with lambda(Z) computed at the scale
    of Z: no cancellation against the identity occurs even when Z is tiny.
    """
    tr = Z[0, 0] + Z[1, 1]
    det = Z[0, 0] * Z[1, 1] - Z[0, 1] * Z[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        root = math.sqrt(disc)
        l1 = 0.5 * (tr + root)
        l2 = 0.5 * (tr - root)
        return max(abs(1.0 + l1), abs(1.0 + l2))
    re = 0.5 * tr
    im2 = -0.25 * disc
    return math.sqrt((1.0 + re) ** 2 + im2)


# ---------------------------------------------------------------------------
# Lyapunov solves

_E_BASIS = (
    np.array([[1.0, 0.0], [0.0, 0.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]),
    np.array([[0.0, 0.0], [0.0, 1.0]]),
)


def _vec_sym(m) -> np.ndarray:
    return np.array([m[0, 0], 0.5 * (m[0, 1] + m[1, 0]), m[1, 1]])


def _mat_sym(x) -> np.ndarray:
    return np.array([[x[0], x[1]], [x[1], x[2]]])


def solve_constant_lyapunov(u1: np.ndarray) -> np.ndarray:
    """Unique symmetric positive-definite H with H U1 + U1^T H = -I.

    Solved exactly as a 3x3 linear system in (h11, h12, h22); fails on
    non-Hurwitz input, where no positive solution exists.
    """
    u1 = np.asarray(u1, dtype=float)
    if not u1_is_hurwitz(u1):
        raise ValueError("constant Lyapunov equation needs a Hurwitz matrix")
    cols = [_vec_sym(e @ u1 + u1.T @ e) for e in _E_BASIS]
    a = np.column_stack(cols)
    x = np.linalg.solve(a, np.array([-1.0, 0.0, -1.0]))
    return _mat_sym(x)


def _refined_solve(a: np.ndarray, rhs_fn, x0: np.ndarray, rounds: int = 2) -> np.ndarray:
    """Iterative refinement with the residual accumulated in extended precision."""
    x = x0
    for _ in range(rounds):
        r = rhs_fn(x)
        if not np.all(np.isfinite(r)):
            break
        x = x + np.linalg.solve(a, r.astype(float))
    return x


def solve_discrete_lyapunov_2x2(M: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """X = M^T X M + Q for symmetric Q, direct 3x3 solve plus refinement."""
    M = np.asarray(M, dtype=float)
    Q = np.asarray(Q, dtype=float)
    cols = [_vec_sym(e - M.T @ e @ M) for e in _E_BASIS]
    a = np.column_stack(cols)
    x0 = np.linalg.solve(a, _vec_sym(Q))
    ml = M.astype(np.longdouble)
    ql = Q.astype(np.longdouble)

    def residual(x):
        xl = _mat_sym(x).astype(np.longdouble)
        r = ql - (xl - ml.T @ xl @ ml)
        return _vec_sym(r)

    return _mat_sym(_refined_solve(a, residual, x0))


def _solve_discrete_lyapunov_deviation(Z: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """X = M^T X M + Q with M = I + Z, posed at the scale of Z.

    Rearranged as Z^T X + X Z + Z^T X Z = -Q the identity cancels
    analytically, which drops the condition number of the 3x3 system from
    norm(M)^2/(1-rho^2) to roughly norm(Z)/(1-rho^2).
    """
    Z = np.asarray(Z, dtype=float)
    Q = np.asarray(Q, dtype=float)
    cols = [_vec_sym(Z.T @ e + e @ Z + Z.T @ e @ Z) for e in _E_BASIS]
    a = np.column_stack(cols)
    x0 = np.linalg.solve(a, _vec_sym(-Q))
    zl = Z.astype(np.longdouble)
    ql = Q.astype(np.longdouble)

    def residual(x):
        xl = _mat_sym(x).astype(np.longdouble)
        r = -ql - (zl.T @ xl + xl @ zl + zl.T @ xl @ zl)
        return _vec_sym(r)

    return _mat_sym(_refined_solve(a, residual, x0))


def truncated_lyapunov_sum(M: np.ndarray, Q: np.ndarray, doublings: int) -> np.ndarray:
    """Partial sum  sum_{k=0}^{2^doublings - 1} (M^T)^k Q M^k  by doubling.

    This is the tail-integral representation of the periodic Lyapunov
    solution truncated after 2^doublings periods, evaluated exactly through
    the periodicity identity Y(t + kT) = Y(t) Y(T)^k.  Serves as the
    independent oracle for the discrete Lyapunov solve.
    """
    s = np.array(Q, dtype=float)
    mk = np.array(M, dtype=float)
    for _ in range(doublings):
        s = s + mk.T @ s @ mk
        mk = mk @ mk
    return s


# ---------------------------------------------------------------------------
# periodic Lyapunov solutions


@dataclass(frozen=True)
class _UFactor:
    """Averaged-coordinate factorization H = S^{-T} H_u S^{-1} at the nodes."""

    H_u: np.ndarray
    p: np.ndarray  # 1 + mu*a at the nodes
    b: np.ndarray
    mu: float


@dataclass(frozen=True)
class PeriodicLyapunovSolution:
    """Grid-sampled positive periodic solution of H' + HA + A^T H = -I.

    ``H`` holds the node values in the original (y, y') coordinates.  When
    ``factor`` is present the solution came from the averaged-coordinate
    solve and quadratic forms are evaluated through it, because the direct
    entries lose the small eigenvalue to cancellation at small mu.
    """

    times: np.ndarray
    H: np.ndarray
    mu: float
    h_min: float
    h_max: float
    hmin_nodes: np.ndarray
    hnorm_nodes: np.ndarray
    spectral_radius: float
    factor: _UFactor | None = None

    @property
    def period(self) -> float:
        return float(self.times[-1])

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    # conservative piecewise-constant extensions: per step, norm from the
    # larger adjacent node and min eigenvalue from the smaller one
    @property
    def hnorm_steps(self) -> np.ndarray:
        return np.maximum(self.hnorm_nodes[:-1], self.hnorm_nodes[1:])

    @property
    def hmin_steps(self) -> np.ndarray:
        return np.minimum(self.hmin_nodes[:-1], self.hmin_nodes[1:])

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        T = self.period
        k = np.floor(t / T)
        s = t - k * T
        j = np.clip(np.floor(s / self.step).astype(int), 0, self.n_steps - 1)
        frac = s - j * self.step
        return k, j, frac

    def hnorm_at(self, t):
        _, j, _ = self._locate(t)
        return self.hnorm_steps[j]

    def hmin_at(self, t):
        _, j, _ = self._locate(t)
        return self.hmin_steps[j]

    def inv_norm_integral(self, t):
        """Conservative  int_0^t ds / ||H(s)||  with periodic extension."""
        k, j, frac = self._locate(t)
        inv_step = self.step / self.hnorm_steps
        cum = np.concatenate([[0.0], np.cumsum(inv_step)])
        return k * cum[-1] + cum[j] + frac / self.hnorm_steps[j]

    def node_index(self, t: float) -> int:
        s = float(t) % self.period
        return int(round(s / self.step)) % self.n_steps

    def value(self, t: float, v) -> float:
        """Quadratic form <H(t mod T) v, v>, evaluated stably."""
        return self.value_at_node(self.node_index(t), v)

    def value_at_node(self, i: int, v) -> float:
        v = np.asarray(v, dtype=float)
        if self.factor is not None:
            fa = self.factor
            w1 = v[0] / fa.p[i]
            w2 = -fa.b[i] * v[0] / fa.p[i] + v[1] / fa.mu
            hu = fa.H_u[i]
            return float(
                hu[0, 0] * w1 * w1 + 2.0 * hu[0, 1] * w1 * w2 + hu[1, 1] * w2 * w2
            )
        h = self.H[i]
        return float(h[0, 0] * v[0] ** 2 + 2.0 * h[0, 1] * v[0] * v[1] + h[1, 1] * v[1] ** 2)


def _nodes_eigs(H: np.ndarray, det=None):
    return sym_eig_bounds(H[:, 0, 0], H[:, 0, 1], H[:, 1, 1], det=det)


def solve_periodic_lyapunov(A, T: float, n_steps: int = 4096, mu: float = float("nan")) -> PeriodicLyapunovSolution:
    """Positive T-periodic solution of H' + HA + A^T H = -I on the grid.

    The monodromy spectrum must lie strictly inside the unit disk;
    otherwise no positive periodic solution exists and
    :class:`UnstableSystemError` is raised.  Direct-coordinate solve,
    adequate while the solution's condition number is moderate; the
    certificate pipeline uses :func:`solve_periodic_lyapunov_scaled`.
    """
    mz = matrizant(A, T, n_steps)
    rho = _robust_spectral_radius(mz.monodromy)
    if rho >= 1.0 - 1e-9:
        raise UnstableSystemError(
            f"monodromy spectral radius {rho:.12g} is not inside the unit disk"
        )
    Y = mz.Y
    integrand = np.einsum("nji,njk->nik", Y, Y)  # Y^T Y
    G = cumulative_simpson(integrand, dx=mz.step, axis=0, initial=0.0)
    Q = G[-1]
    X = solve_discrete_lyapunov_2x2(mz.monodromy, Q)
    invY = _inv_2x2_nodes(Y)
    H = _sandwich(invY, X[None, :, :] - G)
    H = 0.5 * (H + np.transpose(H, (0, 2, 1)))
    hmin_nodes, hnorm_nodes = _nodes_eigs(H)
    if np.min(hmin_nodes) <= 0.0:
        raise UnstableSystemError("periodic Lyapunov solution lost positivity")
    return PeriodicLyapunovSolution(
        times=mz.times,
        H=H,
        mu=mu,
        h_min=float(np.min(hmin_nodes)),
        h_max=float(np.max(hnorm_nodes)),
        hmin_nodes=hmin_nodes,
        hnorm_nodes=hnorm_nodes,
        spectral_radius=rho,
    )


def solve_periodic_lyapunov_scaled(
    lin: LinearizedSystem,
    tr: AveragingTransform,
    mu: float,
    n_steps: int = 4096,
) -> PeriodicLyapunovSolution:
    """Same solution as :func:`solve_periodic_lyapunov` for v' = A(t,mu) v,
    computed through the averaging change of variables.

    With v = S(t) u the v-problem with right-hand side -I becomes a
    u-problem with right-hand side -S^T S; its solution H_u is well
    conditioned for all certified mu, and H = S^{-T} H_u S^{-1} is mapped
    back entry by entry.  Eigenvalue extremes use det H = det H_u/(p mu)^2,
    which keeps h_min meaningful even when h_max/h_min ~ 1/mu^2.
    """
    ts = build_u2_u3(lin, tr, mu)
    T = lin.period
    times, Z = deviation_matrizant(ts.mu_u_entries(), T, n_steps)
    rho = spectral_radius_from_deviation(Z[-1])
    if rho >= 1.0 - 1e-9:
        raise UnstableSystemError(
            f"monodromy spectral radius {rho:.12g} is not inside the unit disk "
            f"at mu={mu}"
        )
    a_nodes = tr.a.eval(times)
    b_nodes = tr.b.eval(times)
    p_nodes = 1.0 + mu * a_nodes

    # C_u = S^T S
    Cu = np.empty((len(times), 2, 2))
    Cu[:, 0, 0] = p_nodes ** 2 + (mu * b_nodes) ** 2
    Cu[:, 0, 1] = Cu[:, 1, 0] = mu * mu * b_nodes
    Cu[:, 1, 1] = mu * mu

    Y = Z + np.eye(2)
    integrand = np.einsum("nji,njk,nkl->nil", Y, Cu, Y)
    Gu = cumulative_simpson(integrand, dx=times[1] - times[0], axis=0, initial=0.0)
    Qu = Gu[-1]
    Xu = _solve_discrete_lyapunov_deviation(Z[-1], Qu)

    invY = _inv_2x2_nodes(Y)
    Hu = _sandwich(invY, Xu[None, :, :] - Gu)
    Hu = 0.5 * (Hu + np.transpose(Hu, (0, 2, 1)))

    hu11, hu12, hu22 = Hu[:, 0, 0], Hu[:, 0, 1], Hu[:, 1, 1]
    H = np.empty_like(Hu)
    H[:, 0, 0] = (hu11 - 2.0 * b_nodes * hu12 + b_nodes ** 2 * hu22) / p_nodes ** 2
    H[:, 0, 1] = H[:, 1, 0] = (hu12 - b_nodes * hu22) / (p_nodes * mu)
    H[:, 1, 1] = hu22 / mu ** 2

    det_hu = hu11 * hu22 - hu12 ** 2
    det_h = det_hu / (p_nodes * mu) ** 2
    hmin_nodes, hnorm_nodes = _nodes_eigs(H, det=det_h)
    if np.min(det_h) <= 0.0 or np.min(hmin_nodes) <= 0.0:
        raise UnstableSystemError("periodic Lyapunov solution lost positivity")

    return PeriodicLyapunovSolution(
        times=times,
        H=H,
        mu=mu,
        h_min=float(np.min(hmin_nodes)),
        h_max=float(np.max(hnorm_nodes)),
        hmin_nodes=hmin_nodes,
        hnorm_nodes=hnorm_nodes,
        spectral_radius=rho,
        factor=_UFactor(H_u=Hu, p=p_nodes, b=b_nodes, mu=mu),
    )


def spectral_radius_linear_system(
    lin: LinearizedSystem,
    tr: AveragingTransform,
    mu: float,
    n_steps: int = 4096,
) -> float:
    """Monodromy spectral radius of v' = A(t,mu) v at one parameter value.

    Uses the averaged deviation form while the change of variables is
    nondegenerate (best precision near the unit circle) and falls back to
    the direct matrizant with squaring-based extraction for large mu.
    """
    try:
        ts = build_u2_u3(lin, tr, mu)
    except ValueError:
        mz = matrizant(system_matrix_entries(lin, mu), lin.period, n_steps)
        return spectral_radius_monodromy(mz)
    _, Z = deviation_matrizant(ts.mu_u_entries(), lin.period, n_steps)
    return spectral_radius_from_deviation(Z[-1])


# ---------------------------------------------------------------------------
# decay envelope and residual diagnostics


def krein_envelope(sol: PeriodicLyapunovSolution, y0_norm_sq: float, t):
    """Exponential decay envelope for ||y(t)||^2 along the linear flow.

    envelope(t) = (||H(0)|| / h_min(t)) * ||y(0)||^2
                  * exp( - int_0^t ds / ||H(s)|| ),

    with h_min(t) and ||H(s)|| extended T-periodically from the grid and
    interpolated piecewise-constantly in the conservative direction (max of
    adjacent nodes for the norm, min for the smallest eigenvalue).
    """
    if y0_norm_sq < 0.0:
        raise ValueError("y0_norm_sq must be >= 0")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("envelope is defined for t >= 0")
    h0 = sol.hnorm_nodes[0]
    env = (h0 / sol.hmin_at(t)) * y0_norm_sq * np.exp(-sol.inv_norm_integral(t))
    return env if env.ndim else float(env)


def bvp_residual(sol: PeriodicLyapunovSolution, A) -> float:
    """Scaled sup-norm residual of H' + HA + A^T H + I at interior nodes.

    H' is formed by central differences; each node residual is divided by
    1 + ||H|| so the figure stays meaningful when the solution itself is
    large (small-mu regime).
    """
    ent = _entries_fn(A)
    n = len(sol.times)
    Amat = np.empty((n, 2, 2))
    for i, t in enumerate(sol.times):
        a11, a12, a21, a22 = ent(float(t))
        Amat[i, 0, 0] = a11
        Amat[i, 0, 1] = a12
        Amat[i, 1, 0] = a21
        Amat[i, 1, 1] = a22
    H = sol.H
    dH = (H[2:] - H[:-2]) / (2.0 * sol.step)
    mid_H = H[1:-1]
    mid_A = Amat[1:-1]
    R = dH + mid_H @ mid_A + np.transpose(mid_A, (0, 2, 1)) @ mid_H + np.eye(2)
    norms = np.array([spectral_norm_2x2(r) for r in R])
    scale = 1.0 + sol.hnorm_nodes[1:-1]
    return float(np.max(norms / scale))
