"""Shared fixtures: the canonical vibrated-pendulum instance and its pipeline."""

import math

import pytest
from hypothesis import strategies as st

from mathieu_cert import (
    MathieuModel,
    Nonlinearity,
    PeriodicSignal,
    QuadratureGrid,
    build_transform,
    build_u1,
    compute_bound_chain,
    linearize,
    solve_constant_lyapunov,
    solve_periodic_lyapunov_scaled,
)

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def pendulum_model():
    return MathieuModel(
        alpha=0.1,
        beta=0.25,
        phi=PeriodicSignal(TWO_PI, ((1, 0.0, -1.0),)),
        f=Nonlinearity("pendulum_sine"),
        gamma=math.pi,
    )


@pytest.fixture(scope="session")
def lin(pendulum_model):
    return linearize(pendulum_model)


@pytest.fixture(scope="session")
def grid(lin):
    return QuadratureGrid(lin.period, 2048)


@pytest.fixture(scope="session")
def transform(lin, grid):
    return build_transform(lin, grid)


@pytest.fixture(scope="session")
def u1(lin, transform):
    return build_u1(lin, transform)


@pytest.fixture(scope="session")
def h1(u1):
    return solve_constant_lyapunov(u1)


@pytest.fixture(scope="session")
def chain(lin, transform, u1, h1):
    return compute_bound_chain(lin, transform, u1, h1)


@pytest.fixture(scope="session")
def sol_small_mu(lin, transform, chain):
    """Lyapunov solution at mu0/2, the canonical certified operating point."""
    return solve_periodic_lyapunov_scaled(lin, transform, chain.mu0 / 2.0, 4096)


@pytest.fixture(scope="session")
def sol_moderate_mu(lin, transform):
    """Well-conditioned operating point used for oracle comparisons."""
    return solve_periodic_lyapunov_scaled(lin, transform, 0.01, 4096)


def signal_strategy(period=TWO_PI, max_harmonics=3, max_k=5, max_amp=2.0):
    amp = st.floats(-max_amp, max_amp, allow_nan=False, allow_infinity=False)

    def build(ks, amps):
        return PeriodicSignal(
            period, tuple((k, c, s) for k, (c, s) in zip(ks, amps))
        )

    ks = st.lists(st.integers(1, max_k), min_size=1, max_size=max_harmonics, unique=True)
    return ks.flatmap(
        lambda kk: st.tuples(*[st.tuples(amp, amp) for _ in kk]).map(
            lambda amps: build(kk, amps)
        )
    )
