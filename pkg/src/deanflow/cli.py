"""Command-line front end: ``deanflow {basic-flow,critical,bifurcation,simulate,render}``.

Parameters come from an optional flat ``key = value`` config file; every key
can be overridden with ``--key value``. Exit codes: 0 ok, 1 other error,
2 invalid geometry, 3 degenerate critical point, 4 non-positive gamma,
5 integration blow-up.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry
from .dynamics import (
    BlowUpError,
    SimulationConfig,
    assemble,
    default_truncation,
    integrate,
    random_initial,
    steady_state,
)
from .fields_io import NoFlowError, count_cells, evaluate_velocity, export
from .geometry import FluidParameters, GeometryError
from .linear_stability import (
    DegenerateCriticalPoint,
    branch_eigenvalues,
    critical_lambda_of_m,
    critical_point,
    pes_check,
)
from .nonlinear_reduction import GammaNonPositive, equilibrium_amplitude, gamma_coefficient
from .spectral_basis import plus

log = logging.getLogger("deanflow")

EXIT_OK, EXIT_OTHER, EXIT_GEOMETRY, EXIT_DEGENERATE, EXIT_GAMMA, EXIT_BLOWUP = 0, 1, 2, 3, 4, 5

# key -> (parser, default); order fixes the layout of run.txt
KEYS = {
    "R1": (float, 100.0),
    "R2": (float, 101.0),
    "rho": (float, 1.0),
    "nu": (float, 1.0),
    "dp_dtheta0": (float, 0.0),
    "L": (float, 2.0),
    "M": (int, None),
    "N": (int, None),
    "dt": (float, None),
    "t_end": (float, 400.0),
    "scheme": (str, "IMEX_EXP"),
    "seed": (int, 0),
    "steady_tol": (float, 1e-10),
    "out_dir": (str, "out"),
    "lambda_ratio": (float, None),
    "eps": (str, "-0.05,0.02,0.04,0.08"),
    "m_max": (int, 12),
    "nr": (int, 41),
    "nz": (int, 81),
}


class ConfigError(ValueError):
    pass


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


@dataclass(frozen=True)
class RunConfig:
    params: FluidParameters
    truncation: tuple | None
    sim: SimulationConfig
    out_dir: Path
    lambda_ratio: float | None
    eps: tuple
    m_max: int
    nr: int
    nz: int
    raw: dict

    @classmethod
    def resolve(cls, overrides: dict) -> "RunConfig":
        raw = {}
        for key, (conv, default) in KEYS.items():
            val = overrides.get(key)
            if val is None or val == "":
                raw[key] = default
            else:
                try:
                    raw[key] = conv(val)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key}: {val!r}") from exc
        params = FluidParameters(raw["R1"], raw["R2"], raw["rho"], raw["nu"],
                                 raw["dp_dtheta0"], raw["L"])
        params.validate()
        trunc = None
        if raw["M"] is not None or raw["N"] is not None:
            M0, N0 = default_truncation(critical_point(raw["L"]).m0)
            trunc = (raw["M"] or M0, raw["N"] or N0)
        sim = SimulationConfig(dt=raw["dt"], t_end=raw["t_end"], scheme=raw["scheme"].upper(),
                               steady_tol=raw["steady_tol"], seed=raw["seed"])
        try:
            eps = tuple(float(e) for e in str(raw["eps"]).split(",") if e.strip())
        except ValueError as exc:
            raise ConfigError(f"bad eps list {raw['eps']!r}") from exc
        if raw["nr"] < 2 or raw["nz"] < 2 or raw["m_max"] < 2:
            raise ConfigError("nr, nz >= 2 and m_max >= 2 required")
        return cls(params, trunc, sim, Path(raw["out_dir"]), raw["lambda_ratio"], eps,
                   raw["m_max"], raw["nr"], raw["nz"], raw)

    def manifest(self) -> str:
        return "".join(f"{k} = {'' if self.raw[k] is None else self.raw[k]}\n" for k in KEYS)


def _num(x) -> float | int | None:
    if x is None:
        return None
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(x)


class Report:
    """Collects ordered key/value lines; printed as text or JSON with the same numbers."""

    def __init__(self, command):
        self.data = {"command": command}

    def __setitem__(self, key, value):
        self.data[key] = value

    def emit(self, as_json: bool, stream=None):
        stream = stream or sys.stdout
        if as_json:
            json.dump(self.data, stream, indent=2, default=_num)
            stream.write("\n")
            return
        for key, value in self.data.items():
            if isinstance(value, list) and value and isinstance(value[0], dict):
                stream.write(f"{key}:\n")
                cols = list(value[0])
                stream.write("  " + "  ".join(f"{c:>22}" for c in cols) + "\n")
                for row in value:
                    stream.write("  " + "  ".join(f"{_fmt(row[c]):>22}" for c in cols) + "\n")
            else:
                stream.write(f"{key}: {_fmt(value)}\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _prepare_out(cfg: RunConfig) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "run.txt").write_text(cfg.manifest(), encoding="utf-8")
    return cfg.out_dir


# ---------------------------------------------------------------------------


def cmd_basic_flow(cfg: RunConfig) -> Report:
    p = cfg.params
    rep = Report("basic-flow")
    const = geometry.profile_constants(p)
    unit = 1.0 / (2 * p.rho * p.nu)
    shape = lambda r: r * math.log(r) + const.A * r + const.B / r  # noqa: E731
    rep["A"] = const.A
    rep["B"] = const.B
    rep["bc_residual_R1"] = abs(shape(p.R1) - p.R2**2) / p.R2**2
    rep["bc_residual_R2"] = abs(shape(p.R2) - p.R1**2) / p.R1**2
    rep["u_theta_R1"] = unit * p.dp_dtheta0 * shape(p.R1)
    rep["u_theta_R2"] = unit * p.dp_dtheta0 * shape(p.R2)
    lim_t, lim_r = geometry.coefficient_narrow_gap(p)
    rows = []
    for r in np.linspace(p.R1, p.R2, 5):
        ct, cr = geometry.coefficient_exact(p, const, r)
        rows.append({"r": float(r), "c_theta": ct, "c_theta_lim": lim_t, "c_r": cr, "c_r_lim": lim_r})
    rep["coefficients"] = rows
    rep["gap_ratio"] = p.gap / p.R1
    rep["asymptotics_trusted"] = p.asymptotics_trusted
    rep["lambda"] = geometry.lambda_parameter(p)
    rep["branch_swapped"] = geometry.branch_swapped(rep.data["lambda"])
    return rep


def cmd_critical(cfg: RunConfig) -> Report:
    L = cfg.params.L
    rep = Report("critical")
    rep["L"] = L
    rep["lambda_m"] = [{"m": m, "lambda_m": critical_lambda_of_m(m, L)}
                       for m in range(1, cfg.m_max + 1)]
    cp = critical_point(L)
    if cp.degenerate:
        raise DegenerateCriticalPoint(L, cp.tied)
    rep["m0"] = cp.m0
    rep["lambda0"] = cp.lambda0
    rep["degenerate"] = cp.degenerate
    rep["runner_up_gap"] = cp.runner_up_gap
    pes = pes_check(L, 0.01)
    rep["pes_pattern"] = "".join(pes.pattern)
    rep["pes_others_stable"] = pes.others_stable
    rep["pes_safe_delta"] = pes.safe_delta
    return rep


def _truncation(cfg, m0):
    return cfg.truncation or default_truncation(m0)


def cmd_bifurcation(cfg: RunConfig, write_tensor: bool = False) -> Report:
    L = cfg.params.L
    out = _prepare_out(cfg)
    cp = critical_point(L)
    if cp.degenerate:
        raise DegenerateCriticalPoint(L, cp.tied)
    trunc = _truncation(cfg, cp.m0)
    result = gamma_coefficient(cp.m0, L, cp.lambda0, trunc)
    rep = Report("bifurcation")
    rep["L"] = L
    rep["m0"] = cp.m0
    rep["lambda0"] = cp.lambda0
    rep["truncation"] = list(trunc)
    rep["gamma"] = result.gamma
    rep["a"] = result.amplitude_coefficient
    rep["gamma_convergence"] = result.convergence
    rep["gamma_m_gt_1_only"] = result.gamma_literal
    rep["pes_safe_delta"] = cp.runner_up_gap
    system = assemble(L, cp.lambda0, trunc)
    if write_tensor:
        system.tensor.write_text(out / "tensor.txt")
    crit = plus(cp.m0, 1)
    c = system.position(crit)
    rows = []
    for eps in cfg.eps:
        lam = cp.lambda0 * (1 + eps)
        s = system.at_lambda(lam)
        sims = []
        for sign in (1, -1):
            y0 = np.zeros(s.size)
            y0[c] = 0.01 * sign
            ss = steady_state(s, y0, cfg.sim)
            if not ss.converged:
                log.warning("steady state at eps=%g sign=%d did not converge (residual %g)",
                            eps, sign, ss.residual)
            sims.append(0.0 if ss.at_rest else ss.coordinate(crit))
        amps = equilibrium_amplitude(lam, result)
        rows.append({"lambda": lam, "beta1": branch_eigenvalues(cp.m0, 1, L, lam)[0],
                     "y_pred": amps.y_plus, "y_sim_plus": sims[0], "y_sim_minus": sims[1]})
    rep["sweep"] = rows
    with open(out / "bifurcation.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "beta1", "y_pred", "y_sim_plus", "y_sim_minus"])
        for row in rows:
            w.writerow([f"{row[k]:.17g}" for k in ("lambda", "beta1", "y_pred",
                                                   "y_sim_plus", "y_sim_minus")])
    return rep


def _run_pipeline(cfg: RunConfig):
    p = cfg.params
    cp = critical_point(p.L)
    if cp.degenerate:
        raise DegenerateCriticalPoint(p.L, cp.tied)
    if cfg.lambda_ratio is not None:
        lam = cfg.lambda_ratio * cp.lambda0
    else:
        lam = geometry.lambda_parameter(p)
    system = assemble(p.L, lam, _truncation(cfg, cp.m0))
    y0 = random_initial(system, np.random.default_rng(cfg.sim.seed), norm=0.1)
    dt = cfg.sim.dt or system.default_dt(cfg.sim.scheme)
    n_steps = max(1, int(round(cfg.sim.t_end / dt)))
    sim = SimulationConfig(dt=dt, t_end=cfg.sim.t_end, scheme=cfg.sim.scheme,
                           steady_tol=cfg.sim.steady_tol, seed=cfg.sim.seed,
                           sample_every=max(1, n_steps // 1000))
    traj = integrate(system, y0, sim)
    return cp, lam, system, y0, traj


def _summarize(rep, cfg, cp, lam, system, y0, traj):
    y = traj.final
    n0, n1 = float(np.linalg.norm(y0)), float(np.linalg.norm(y))
    rep["L"] = cfg.params.L
    rep["lambda"] = lam
    rep["lambda0"] = cp.lambda0
    rep["m0"] = cp.m0
    rep["t_end"] = float(traj.times[-1])
    rep["initial_norm"] = n0
    rep["final_norm"] = n1
    rep["final_energy"] = float(traj.energy[-1])
    rep["critical_coordinate"] = float(y[system.position(plus(cp.m0, 1))])
    rest = n1 < 1e-6 * n0
    rep["summary"] = "decayed to rest state" if rest else "bifurcated state"
    grid = evaluate_velocity(system.to_field(y), cfg.nr, cfg.nz, cfg.params.L)
    try:
        rep["cells"] = None if rest else count_cells(grid)
    except NoFlowError:
        rep["cells"] = None
    return grid


def cmd_simulate(cfg: RunConfig) -> Report:
    out = _prepare_out(cfg)
    cp, lam, system, y0, traj = _run_pipeline(cfg)
    traj.write_csv(out / "trajectory.csv")
    rep = Report("simulate")
    _summarize(rep, cfg, cp, lam, system, y0, traj)
    return rep


def cmd_render(cfg: RunConfig) -> Report:
    out = _prepare_out(cfg)
    cp, lam, system, y0, traj = _run_pipeline(cfg)
    rep = Report("render")
    grid = _summarize(rep, cfg, cp, lam, system, y0, traj)
    export(grid, "CSV", out / "field.csv")
    export(grid, "SVG", out / "psi.svg")
    return rep


COMMANDS = {
    "basic-flow": cmd_basic_flow,
    "critical": cmd_critical,
    "bifurcation": cmd_bifurcation,
    "simulate": cmd_simulate,
    "render": cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deanflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("-v", "--verbose", action="store_true")
        for key in KEYS:
            sp.add_argument(f"--{key}", dest=f"key_{key}", default=None)
        if name == "bifurcation":
            sp.add_argument("--tensor", action="store_true",
                            help="also write the interaction tensor to tensor.txt")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        values = read_config(args.config) if args.config else {}
        for key in KEYS:
            v = getattr(args, f"key_{key}")
            if v is not None:
                values[key] = v
        cfg = RunConfig.resolve(values)
        if args.command == "bifurcation":
            rep = cmd_bifurcation(cfg, write_tensor=args.tensor)
        else:
            rep = COMMANDS[args.command](cfg)
        rep.emit(args.json)
        return EXIT_OK
    except GeometryError as exc:
        print(f"error: invalid geometry: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except DegenerateCriticalPoint as exc:
        print(f"error: {exc}; tied m values {exc.tied[0]} and {exc.tied[1]}", file=sys.stderr)
        return EXIT_DEGENERATE
    except GammaNonPositive as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GAMMA
    except BlowUpError as exc:
        print(f"error: integration blew up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
