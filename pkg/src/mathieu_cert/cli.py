"""Command-line front end: certify, margins, simulate, sweep.

Exit code protocol (scriptable batch studies rely on it):

    0   certified asymptotically stable at the requested mu
    1   malformed input or failed validation
    2   mu lies outside the certified range (0, mu0]; spectral radius is
        still reported
    3   the averaged stability condition fails (no certificate for any mu)

JSON output carries a top-level ``"schema": 1``.  CSV uses '.' decimals,
',' separators, one header row and '#'-prefixed comment lines.  Identical
inputs and flags produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .averaging import (
    bogolyubov_condition,
    build_transform,
    build_u1,
    build_u2_u3,
)
from .bounds import compute_bound_chain
from .floquet_lyapunov import (
    UnstableSystemError,
    bvp_residual,
    matrizant,
    solve_constant_lyapunov,
    solve_periodic_lyapunov_scaled,
    spectral_radius_linear_system,
)
from .model import (
    MathieuModel,
    PendulumParams,
    linearize,
    model_from_dict,
    model_to_dict,
    pendulum_reduce,
    quadratic_remainder_bound,
    shift_to_zero,
    system_matrix_entries,
)
from .periodic_signal import QuadratureGrid
from .robustness import (
    Perturbation,
    attraction_certificate,
    decay_envelope,
    envelope_rate_integrals,
    linear_budget,
    nonlinear_budget,
    perturbation_from_dict,
    q_of_mu,
    q_tilde,
)
from .simulate import integrate, nonlinear_system

__all__ = ["main", "build_certificate", "Certificate"]

DEFAULT_RHO_PENDULUM = math.pi / 2.0


@dataclass(frozen=True)
class Certificate:
    """Assembled certificate payload plus the exit status it implies."""

    payload: dict
    exit_code: int


def _budget_dict(b) -> dict:
    return {
        "level": b.level,
        "budget_phi_sup": b.budget_phi_sup,
        "budget_coeff": b.budget_coeff,
        "max_sup_d_phi_hat": b.budget_phi_sup / b.mu,
        "h_max": b.h_max,
    }


def build_certificate(
    model: MathieuModel,
    mu: float,
    pert: Perturbation | None = None,
    rho: float | None = None,
    grid_n: int = 2048,
    steps: int = 4096,
    mu_cap: float = 1.0,
) -> Certificate:
    """Run the full certification pipeline for one model at one mu."""
    if not mu > 0.0:
        raise ValueError("mu must be positive")
    lin = linearize(model)
    grid = QuadratureGrid(lin.period, grid_n)
    tr = build_transform(lin, grid)
    bog = bogolyubov_condition(lin, grid)
    payload: dict = {
        "schema": 1,
        "tool_version": __version__,
        "model": model_to_dict(model),
        "mu": mu,
        "grid": {"quadrature_n": grid_n, "steps_per_period": steps},
        "bogolyubov": {"holds": bog.holds, "lhs": bog.lhs, "rhs": bog.rhs},
        "spectral_radius_at_mu": spectral_radius_linear_system(lin, tr, mu, steps),
    }
    if not bog.holds:
        return Certificate(payload=payload, exit_code=3)

    u1 = build_u1(lin, tr)
    h1 = solve_constant_lyapunov(u1)
    chain = compute_bound_chain(lin, tr, u1, h1, mu_cap=mu_cap)
    payload["bound_chain"] = chain.as_dict()
    if mu > chain.mu0:
        return Certificate(payload=payload, exit_code=2)

    sol = solve_periodic_lyapunov_scaled(lin, tr, mu, steps)
    payload["spectral_radius_at_mu"] = sol.spectral_radius
    payload["lyapunov"] = {
        "h_min": sol.h_min,
        "h_max": sol.h_max,
        "bvp_residual_scaled": bvp_residual(sol, system_matrix_entries(lin, mu)),
    }
    b_lin = linear_budget(sol)
    b_nonlin = nonlinear_budget(sol)
    payload["budgets"] = {
        "linear": _budget_dict(b_lin),
        "nonlinear": _budget_dict(b_nonlin),
    }
    if pert is not None:
        payload["budgets"]["perturbation"] = {
            "admissible_linear": b_lin.is_admissible(pert, grid),
            "admissible_nonlinear": b_nonlin.is_admissible(pert, grid),
            "mu_sup_d_phi_hat": mu * pert.sup_d_phi_hat(grid),
            "mu_coeff_combo": mu * (abs(pert.d_beta_hat) * mu + abs(pert.d_alpha)),
        }

    g = shift_to_zero(model)
    rho_eff = rho
    if rho_eff is None and g.kind == "pendulum_sine":
        rho_eff = DEFAULT_RHO_PENDULUM
    p = quadratic_remainder_bound(g, rho_eff)
    q = q_of_mu(model, pert, p, mu, grid)
    payload["nonlinearity"] = {
        "p": p,
        "rho": rho_eff,
        "q_mu": q,
        "q_tilde": q_tilde(q, sol.h_max),
    }
    budgets_hold = pert is None or b_nonlin.is_admissible(pert, grid)
    if budgets_hold:
        cert = attraction_certificate(sol, q, p, rho_eff)
        payload["attraction"] = cert.as_dict()
        rates = envelope_rate_integrals(sol, pert or Perturbation.zero(), mu)
        payload["envelope"] = {
            "prefactor_over_v0_lyapunov": 4.0 / sol.h_min,
            "rate_per_period": rates,
        }
    else:
        payload["attraction"] = None
        payload["envelope"] = None
    return Certificate(payload=payload, exit_code=0)


# ---------------------------------------------------------------------------
# input loading


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read JSON file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object at top level")
    return data


_PENDULUM_KEYS = {"length_l", "gravity_g", "friction_lambda", "amplitude_a", "frequency_omega"}


def load_model(path: str) -> tuple[MathieuModel, float | None]:
    """Load a model file; pendulum physical-parameter files also fix mu = a/l."""
    data = _load_json(path)
    if _PENDULUM_KEYS.issubset(data.keys()):
        params = PendulumParams(
            length_l=float(data["length_l"]),
            gravity_g=float(data["gravity_g"]),
            friction_lambda=float(data["friction_lambda"]),
            amplitude_a=float(data["amplitude_a"]),
            frequency_omega=float(data["frequency_omega"]),
        )
        model, mu = pendulum_reduce(params)
        return model, mu
    return model_from_dict(data), None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return {math.inf: "inf", -math.inf: "-inf"}.get(obj, "nan")
    return obj


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump_json(payload: dict, out: str | None) -> None:
    _emit(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n", out)


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, object]]:
    rows: list[tuple[str, object]] = []
    for k in sorted(d.keys(), key=str):
        v = d[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            rows.extend(_flatten(v, key + "."))
        else:
            rows.append((key, v))
    return rows


def _dump_flat_csv(payload: dict, out: str | None) -> None:
    lines = ["key,value"]
    for k, v in _flatten(_jsonable(payload)):
        lines.append(f"{k},{json.dumps(v)}")
    _emit("\n".join(lines) + "\n", out)


# ---------------------------------------------------------------------------
# grid specs for sweeps


def parse_grid_spec(spec: str) -> np.ndarray:
    """Grid specs: 'a,b,c' literal, 'lin:start:stop:n' or 'log:start:stop:n'."""
    spec = spec.strip()
    if not spec:
        return np.array([])
    if spec.startswith(("lin:", "log:")):
        kind, rest = spec.split(":", 1)
        parts = rest.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad grid spec {spec!r}: expected {kind}:start:stop:n")
        start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ValueError("grid spec needs n >= 1")
        if kind == "lin":
            return np.linspace(start, stop, n)
        if start <= 0.0 or stop <= 0.0:
            raise ValueError("log grid endpoints must be positive")
        return np.geomspace(start, stop, n)
    return np.array([float(x) for x in spec.split(",") if x.strip() != ""])


# ---------------------------------------------------------------------------
# subcommands


def _cmd_certify(args) -> int:
    model, derived_mu = load_model(args.model)
    mu = args.mu if args.mu is not None else derived_mu
    if mu is None:
        raise ValueError("--mu is required for model files (pendulum files derive it)")
    pert = None
    if args.pert:
        pert = perturbation_from_dict(_load_json(args.pert), model)
    cert = build_certificate(
        model, mu, pert=pert, rho=args.rho, grid_n=args.grid, steps=args.steps
    )
    if args.dump_transform:
        _dump_transform(model, mu, args.grid, args.dump_transform)
    if args.dump_lyapunov and cert.exit_code == 0:
        _dump_lyapunov(model, mu, args.steps, args.grid, args.dump_lyapunov)
    if args.dump_matrizant:
        _dump_matrizant(model, mu, args.steps, args.dump_matrizant)
    if args.format == "csv":
        _dump_flat_csv(cert.payload, args.out)
    else:
        _dump_json(cert.payload, args.out)
    return cert.exit_code


def _cmd_margins(args) -> int:
    model, derived_mu = load_model(args.model)
    mu = args.mu if args.mu is not None else derived_mu
    if mu is None:
        raise ValueError("--mu is required for model files (pendulum files derive it)")
    cert = build_certificate(model, mu, grid_n=args.grid, steps=args.steps)
    if cert.exit_code != 0:
        _dump_json(cert.payload, args.out)
        return cert.exit_code
    payload = {
        "schema": 1,
        "tool_version": __version__,
        "mu": mu,
        "h_max": cert.payload["lyapunov"]["h_max"],
        "budgets": cert.payload["budgets"],
    }
    if args.format == "csv":
        _dump_flat_csv(payload, args.out)
    else:
        _dump_json(payload, args.out)
    return 0


def _fmt(x: float) -> str:
    return repr(float(x))


def _cmd_simulate(args) -> int:
    model, derived_mu = load_model(args.model)
    mu = args.mu if args.mu is not None else derived_mu
    if mu is None:
        raise ValueError("--mu is required for model files (pendulum files derive it)")
    pert = None
    if args.pert:
        pert = perturbation_from_dict(_load_json(args.pert), model)
    cert = build_certificate(
        model, mu, pert=pert, rho=args.rho, grid_n=args.grid, steps=args.steps
    )
    if cert.exit_code != 0:
        _dump_json(cert.payload, args.out)
        return cert.exit_code

    lin = linearize(model)
    grid = QuadratureGrid(lin.period, args.grid)
    tr = build_transform(lin, grid)
    sol = solve_periodic_lyapunov_scaled(lin, tr, mu, args.steps)
    g = shift_to_zero(model)
    system = nonlinear_system(model.alpha, model.beta, model.phi, g, mu, pert)
    traj = integrate(system, args.y0, args.y1, args.t_end, args.steps, args.stride)

    v0 = np.array([args.y0, args.y1])
    psi0 = sol.value_at_node(0, v0)
    attraction = cert.payload.get("attraction")
    in_lyap = attraction is not None and psi0 <= attraction["lyapunov_radius_sq"]
    in_euclid = (
        attraction is not None
        and (
            attraction["euclid_radius"] is None
            or math.hypot(args.y0, args.y1) <= attraction["euclid_radius"]
        )
    )
    env_ok = attraction is not None and in_lyap and in_euclid
    if env_ok:
        env = decay_envelope(
            sol, pert or Perturbation.zero(), psi0, traj.times, "nonlinear"
        )
    else:
        env = np.full_like(traj.times, math.nan)

    lines = [
        f"# mathieu-cert simulate schema=1 tool_version={__version__}",
        f"# mu={_fmt(mu)} y0={_fmt(args.y0)} y1={_fmt(args.y1)} t_end={_fmt(traj.times[-1])}",
        f"# system={traj.system_tag} steps_per_period={args.steps} stride={args.stride}",
        f"# initial_lyapunov_value={_fmt(psi0)}",
        f"# inside_lyapunov_region={str(in_lyap).lower()} inside_euclid_region={str(in_euclid).lower()}",
        f"# envelope_certified={str(env_ok).lower()} diverged={str(traj.diverged).lower()}",
        "t,y,y_prime,lyapunov_value,envelope,margin",
    ]
    for i, t in enumerate(traj.times):
        y, yp = traj.states[i]
        psi = sol.value(float(t), traj.states[i])
        e = env[i]
        margin = e - (y * y + yp * yp)
        lines.append(
            f"{_fmt(t)},{_fmt(y)},{_fmt(yp)},{_fmt(psi)},{_fmt(e)},{_fmt(margin)}"
        )
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_sweep(args) -> int:
    model, _ = load_model(args.model)
    mu_grid = parse_grid_spec(args.mu_grid)
    beta_grid = parse_grid_spec(args.beta_grid)
    if np.any(mu_grid <= 0.0) or np.any(beta_grid <= 0.0):
        raise ValueError("sweep grids must be positive")
    lines = [
        f"# mathieu-cert sweep schema=1 tool_version={__version__}",
        "beta,mu,spectral_radius,certified_by_mu0",
    ]
    for beta in sorted(float(b) for b in beta_grid):
        model_b = replace(model, beta=beta)
        lin = linearize(model_b)
        grid = QuadratureGrid(lin.period, args.grid)
        tr = build_transform(lin, grid)
        bog = bogolyubov_condition(lin, grid)
        mu0 = -math.inf
        if bog.holds:
            u1 = build_u1(lin, tr)
            h1 = solve_constant_lyapunov(u1)
            mu0 = compute_bound_chain(lin, tr, u1, h1).mu0
        for mu in sorted(float(m) for m in mu_grid):
            rho = spectral_radius_linear_system(lin, tr, mu, args.steps)
            certified = bog.holds and mu <= mu0
            lines.append(f"{_fmt(beta)},{_fmt(mu)},{_fmt(rho)},{str(certified).lower()}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------
# debug dumps


def _dump_transform(model: MathieuModel, mu: float, grid_n: int, path: str) -> None:
    lin = linearize(model)
    grid = QuadratureGrid(lin.period, grid_n)
    tr = build_transform(lin, grid)
    ts = build_u2_u3(lin, tr, mu)
    nodes = grid.nodes
    payload = {
        "schema": 1,
        "mu": mu,
        "u1": ts.u1.tolist(),
        "mean_phi_a": ts.mean_phi_a,
        "t": nodes.tolist(),
        "u2": ts.u2_at(nodes).tolist(),
        "u3": ts.u3_at(nodes).tolist(),
    }
    _dump_json(payload, path)


def _dump_lyapunov(model: MathieuModel, mu: float, steps: int, grid_n: int, path: str) -> None:
    lin = linearize(model)
    grid = QuadratureGrid(lin.period, grid_n)
    tr = build_transform(lin, grid)
    sol = solve_periodic_lyapunov_scaled(lin, tr, mu, steps)
    lines = ["t,h11,h12,h22,h_min_t,h_norm_t"]
    for i, t in enumerate(sol.times):
        h = sol.H[i]
        lines.append(
            f"{_fmt(t)},{_fmt(h[0, 0])},{_fmt(h[0, 1])},{_fmt(h[1, 1])},"
            f"{_fmt(sol.hmin_nodes[i])},{_fmt(sol.hnorm_nodes[i])}"
        )
    _emit("\n".join(lines) + "\n", path)


def _dump_matrizant(model: MathieuModel, mu: float, steps: int, path: str) -> None:
    lin = linearize(model)
    mz = matrizant(system_matrix_entries(lin, mu), lin.period, steps)
    lines = ["t,y11,y12,y21,y22"]
    for i, t in enumerate(mz.times):
        y = mz.Y[i]
        lines.append(
            f"{_fmt(t)},{_fmt(y[0, 0])},{_fmt(y[0, 1])},{_fmt(y[1, 0])},{_fmt(y[1, 1])}"
        )
    _emit("\n".join(lines) + "\n", path)


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which collides with the
    # "outside certified range" status; remap to the input-error code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser, need_mu: bool = True) -> None:
    p.add_argument("--model", required=True, help="model or pendulum-parameter JSON file")
    if need_mu:
        p.add_argument("--mu", type=float, default=None, help="small parameter value")
    p.add_argument("--grid", type=int, default=2048, help="quadrature panels per period")
    p.add_argument("--steps", type=int, default=4096, help="integrator steps per period")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mathieu-cert", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mathieu-cert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="full stability certificate at one mu")
    _add_common(p)
    p.add_argument("--pert", default=None, help="perturbation JSON file")
    p.add_argument("--rho", type=float, default=None, help="quadratic remainder radius")
    p.add_argument("--dump-transform", default=None, help="write U1/U2/U3 grids as JSON")
    p.add_argument("--dump-lyapunov", default=None, help="write H(t) grid as CSV")
    p.add_argument("--dump-matrizant", default=None, help="write Y(t) grid as CSV")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("margins", help="perturbation budgets at one mu")
    _add_common(p)
    p.set_defaults(func=_cmd_margins)

    p = sub.add_parser("simulate", help="nonlinear trajectory with envelope columns")
    _add_common(p)
    p.add_argument("--pert", default=None, help="perturbation JSON file")
    p.add_argument("--rho", type=float, default=None, help="quadratic remainder radius")
    p.add_argument("--y0", type=float, required=True, help="initial deviation")
    p.add_argument("--y1", type=float, required=True, help="initial velocity")
    p.add_argument("--t-end", type=float, required=True, dest="t_end")
    p.add_argument("--stride", type=int, default=16, help="record every Nth step")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="spectral-radius chart over (beta, mu)")
    _add_common(p, need_mu=False)
    p.add_argument("--mu-grid", required=True, dest="mu_grid", help="e.g. log:1e-4:1e-1:20")
    p.add_argument("--beta-grid", required=True, dest="beta_grid", help="e.g. lin:0.1:0.6:11")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage error (1) or --version/--help (0)
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, UnstableSystemError, ArithmeticError) as exc:
        print(f"mathieu-cert: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
