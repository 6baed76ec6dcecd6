"""Truncated Galerkin system, time integration and steady-state experiments."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .linear_stability import critical_point, mode_eigenvalue
from .nonlinear_reduction import InteractionTensor
from .spectral_basis import ModeIndex, SpectralField, plus

BLOWUP_NORM = 1e6


class BlowUpError(FloatingPointError):
    """State norm exceeded the blow-up guard."""

    def __init__(self, t, norm, dt):
        self.t, self.norm, self.dt = t, norm, dt
        super().__init__(f"|u|={norm:.3g} > {BLOWUP_NORM:g} at t={t:.6g}; "
                         f"reduce dt (now {dt:g}) or enlarge the truncation")


class Scheme(str, enum.Enum):
    IMEX_EXP = "IMEX_EXP"
    RK4 = "RK4"


@dataclass(frozen=True)
class SimulationConfig:
    dt: float | None = None
    t_end: float = 100.0
    scheme: Scheme = Scheme.IMEX_EXP
    steady_tol: float = 1e-10
    seed: int = 0
    sample_every: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.steady_tol > 0:
            raise ValueError("steady_tol must be positive")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")


@dataclass
class GalerkinSystem:
    """``dy_j/dt = beta_j y_j - sum_{k,l} T[k, l, j] y_k y_l`` in the eigenbasis."""

    L: float
    lam: float
    modes: list
    beta: np.ndarray
    tensor: InteractionTensor
    _pos: dict = field(default=None, repr=False)

    @property
    def truncation(self):
        return self.tensor.truncation

    @property
    def size(self) -> int:
        return len(self.modes)

    def position(self, idx: ModeIndex) -> int:
        if self._pos is None:
            self._pos = {m: i for i, m in enumerate(self.modes)}
        return self._pos[idx]

    def linear_matrix(self) -> np.ndarray:
        return np.diag(self.beta)

    def rhs(self, y: np.ndarray) -> np.ndarray:
        return self.beta * y - self.tensor.advect(y)

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        return np.diag(self.beta) - self.tensor.jacobian(y)

    def energy_rate(self, y: np.ndarray) -> float:
        """``sum_j beta_j y_j^2``, the exact rate of change of ``|u|^2 / 2``."""
        return float(np.dot(self.beta, y * y))

    def at_lambda(self, lam: float) -> "GalerkinSystem":
        beta = np.array([mode_eigenvalue(i, self.L, lam) for i in self.modes])
        return GalerkinSystem(self.L, lam, self.modes, beta, self.tensor)

    def linearized(self) -> "GalerkinSystem":
        return GalerkinSystem(self.L, self.lam, self.modes, self.beta, self.tensor.zeroed())

    def to_field(self, y) -> SpectralField:
        return SpectralField.from_vector(self.modes, y, self.truncation)

    def to_vector(self, u: SpectralField) -> np.ndarray:
        M, N = self.truncation
        if u.truncation[0] > M or u.truncation[1] > N:
            extra = [i for i, v in u.coefficients.items() if v and (i.m > M or i.n > N)]
            if extra:
                raise ValueError(f"field has modes outside truncation {self.truncation}: {extra}")
        return u.vector(self.modes)

    def residual(self, u: SpectralField) -> float:
        """Norm of the steady-state residual ``L_lambda u + G(u)`` projected on the truncation."""
        return float(np.linalg.norm(self.rhs(self.to_vector(u))))

    def default_dt(self, scheme: "Scheme" = None) -> float:
        """0.05, or a tenth of the fastest growth time if that is shorter.

        The exponential factor integrates every linear rate exactly, so the
        stiff diffusive tail only limits RK4 (``|beta| dt <= 2``).
        """
        growth = float(np.max(self.beta))
        dt = min(0.05, 0.1 / growth) if growth > 0 else 0.05
        if scheme is not None and Scheme(scheme) is Scheme.RK4:
            dt = min(dt, 2.0 / float(np.max(np.abs(self.beta))))
        return dt


def default_truncation(m0: int) -> tuple[int, int]:
    return 2 * m0 + 6, 8


def assemble(L: float, lam: float, truncation=None, tensor: InteractionTensor | None = None
             ) -> GalerkinSystem:
    """Galerkin system for the modes ``m <= M``, ``n <= N``.

    A prebuilt ``tensor`` for the same ``(L, truncation)`` may be passed to
    reuse the assembly across values of lambda.
    """
    if truncation is None:
        truncation = default_truncation(critical_point(L).m0)
    M, N = truncation
    if M < 1 or N < 1:
        raise ValueError(f"truncation must be at least (1, 1), got {truncation}")
    if tensor is None:
        tensor = InteractionTensor.assemble(M, N, L)
    elif tensor.truncation != (M, N) or tensor.L != L:
        raise ValueError("tensor does not match the requested truncation / L")
    modes = tensor.modes
    beta = np.array([mode_eigenvalue(i, L, lam) for i in modes])
    return GalerkinSystem(L, lam, modes, beta, tensor)


# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    modes: list
    truncation: tuple
    times: np.ndarray
    states: np.ndarray  # (samples, modes)

    @property
    def energy(self) -> np.ndarray:
        return 0.5 * np.sum(self.states**2, axis=1)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def snapshot(self, i: int) -> SpectralField:
        return SpectralField.from_vector(self.modes, self.states[i], self.truncation)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "energy"] + [f"y[{m.branch.name},{m.m},{m.n}]" for m in self.modes])
            for t, e, y in zip(self.times, self.energy, self.states):
                w.writerow([f"{t:.17g}", f"{e:.17g}"] + [f"{v:.17g}" for v in y])


class _Stepper:
    def __init__(self, system: GalerkinSystem, dt: float, scheme: Scheme):
        self.system, self.dt, self.scheme = system, dt, scheme
        if scheme is Scheme.IMEX_EXP:
            z = system.beta * dt
            self.expo = np.exp(z)
            # dt * phi_1(z) with the z -> 0 limit handled
            with np.errstate(invalid="ignore", divide="ignore"):
                self.phi = np.where(np.abs(z) > 1e-12, np.expm1(z) / system.beta, dt)

    def __call__(self, y):
        s = self.system
        if self.scheme is Scheme.IMEX_EXP:
            return self.expo * y - self.phi * s.tensor.advect(y)
        dt = self.dt
        k1 = s.rhs(y)
        k2 = s.rhs(y + 0.5 * dt * k1)
        k3 = s.rhs(y + 0.5 * dt * k2)
        k4 = s.rhs(y + dt * k3)
        return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _initial_vector(system, initial):
    if isinstance(initial, SpectralField):
        return system.to_vector(initial).copy()
    y = np.array(initial, dtype=float)
    if y.shape != (system.size,):
        raise ValueError(f"initial vector has shape {y.shape}, expected ({system.size},)")
    return y


def integrate(system: GalerkinSystem, initial, config: SimulationConfig) -> Trajectory:
    """Fixed-step integration from ``initial`` to ``config.t_end``."""
    dt = config.dt or system.default_dt(config.scheme)
    n_steps = max(1, int(round(config.t_end / dt)))
    step = _Stepper(system, dt, config.scheme)
    y = _initial_vector(system, initial)
    times, states = [0.0], [y.copy()]
    for i in range(1, n_steps + 1):
        y = step(y)
        norm = float(np.linalg.norm(y))
        if not norm <= BLOWUP_NORM:
            raise BlowUpError(i * dt, norm, dt)
        if i % config.sample_every == 0 or i == n_steps:
            times.append(i * dt)
            states.append(y.copy())
    return Trajectory(system.modes, system.truncation, np.array(times), np.array(states))


@dataclass(frozen=True)
class SteadyState:
    state: SpectralField
    converged: bool
    residual: float
    t: float
    at_rest: bool = False

    def coordinate(self, idx: ModeIndex) -> float:
        return self.state[idx]


def steady_state(system: GalerkinSystem, initial, config: SimulationConfig,
                 check_every: int = 10) -> SteadyState:
    """Integrate until ``|dy/dt| < steady_tol |y|`` or ``t_end``.

    A run whose norm drops below ``steady_tol`` times the initial norm is
    reported as converged to the rest state.
    """
    dt = config.dt or system.default_dt(config.scheme)
    n_steps = max(1, int(round(config.t_end / dt)))
    step = _Stepper(system, dt, config.scheme)
    y = _initial_vector(system, initial)
    norm0 = float(np.linalg.norm(y))
    converged = at_rest = norm0 == 0.0
    i = 0
    if converged:
        n_steps = 0
    for i in range(1, n_steps + 1):
        y = step(y)
        if i % check_every:
            continue
        norm = float(np.linalg.norm(y))
        if not norm <= BLOWUP_NORM:
            raise BlowUpError(i * dt, norm, dt)
        if norm < config.steady_tol * norm0:
            converged = at_rest = True
            break
        res = float(np.linalg.norm(system.rhs(y)))
        if res < config.steady_tol * norm:
            converged = True
            break
    res = float(np.linalg.norm(system.rhs(y)))
    return SteadyState(system.to_field(y), converged, res, i * dt, at_rest)


def random_initial(system: GalerkinSystem, rng: np.random.Generator, norm: float = 0.1) -> np.ndarray:
    """Random coefficients decaying like ``1 / (m^2 + n^2)``, rescaled to ``norm``."""
    decay = np.array([1.0 / (i.m**2 + i.n**2) for i in system.modes])
    y = rng.standard_normal(system.size) * decay
    return y * (norm / np.linalg.norm(y))


def reflect_z(system: GalerkinSystem, y: np.ndarray) -> np.ndarray:
    """Coefficients of the mirror image ``z -> L - z`` (each mode picks up ``(-1)^m``)."""
    signs = np.array([(-1.0) ** i.m for i in system.modes])
    return signs * y


@dataclass
class BasinReport:
    plus: int = 0
    minus: int = 0
    rest: int = 0
    other: int = 0  # non-zero endpoints with vanishing critical coordinate
    unconverged: int = 0
    endpoints: list = field(default_factory=list)
    signs: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.signs)

    def distinct_endpoints(self, rtol: float = 1e-6) -> list:
        """Converged non-zero endpoints grouped up to ``rtol`` relative distance."""
        reps = []
        for y in self.endpoints:
            if y is None or np.linalg.norm(y) < 1e-8:
                continue
            if not any(np.linalg.norm(y - r) <= rtol * np.linalg.norm(r) for r in reps):
                reps.append(y)
        return reps


def basin_experiment(system: GalerkinSystem, n_seeds: int, config: SimulationConfig,
                     norm: float = 0.1, critical: ModeIndex | None = None,
                     initials=None) -> BasinReport:
    """Classify endpoints from seeded random initials by the sign of the critical coordinate.

    Seeds are ``config.seed + i`` for ``i < n_seeds``; ``initials`` overrides them.
    """
    if critical is None:
        critical = plus(critical_point(system.L).m0, 1)
    c = system.position(critical)
    report = BasinReport()
    if initials is None:
        initials = [random_initial(system, np.random.default_rng(config.seed + i), norm)
                    for i in range(n_seeds)]
    for y0 in initials:
        ss = steady_state(system, y0, config)
        y = system.to_vector(ss.state)
        yc = y[c]
        scale = max(float(np.linalg.norm(y)), 1e-300)
        if not ss.converged:
            report.unconverged += 1
            report.signs.append(None)
            report.endpoints.append(None)
            continue
        if ss.at_rest or scale < 1e-8:
            report.rest += 1
            report.signs.append(0)
        elif abs(yc) < 1e-8 * scale:
            report.other += 1
            report.signs.append(0)
        elif yc > 0:
            report.plus += 1
            report.signs.append(1)
        else:
            report.minus += 1
            report.signs.append(-1)
        report.endpoints.append(y)
    return report
