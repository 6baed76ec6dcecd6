"""Linear stability of the basic flow: modal 2x2 problem, critical curve, PES."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral_basis import (
    Branch,
    ModeIndex,
    QuadratureGrid,
    SpectralField,
    evaluate_components,
    laplacian_eigenvalue,
    plus,
    vector_mode,
)

DEFAULT_M_MAX = 64
DEGENERACY_RTOL = 1e-9
_M_MAX_CEILING = 1 << 16


class DegenerateCriticalPoint(ValueError):
    """Two axial wavenumbers attain the minimal critical lambda."""

    def __init__(self, L, tied):
        self.L = L
        self.tied = tied
        super().__init__(f"degenerate critical point at L={L}: m={tied} tie within "
                         f"{DEGENERACY_RTOL:g} relative (see critical_point)")


@dataclass(frozen=True)
class EigenPair:
    index: ModeIndex
    beta: float
    lambda_used: float


@dataclass(frozen=True)
class CriticalPoint:
    m0: int
    lambda0: float
    degenerate: bool
    runner_up_gap: float
    runner_up_m: int
    L: float

    @property
    def tied(self) -> tuple[int, int]:
        return tuple(sorted((self.m0, self.runner_up_m)))


def coupling_factor(m, n, L):
    """``1 / sqrt(1 + n^2 L^2 / m^2)``."""
    return 1.0 / np.sqrt(1.0 + (np.asarray(n) * L / np.asarray(m)) ** 2)


def reduced_matrix(m: int, n: int, L: float, lam: float) -> np.ndarray:
    lmn = laplacian_eigenvalue(m, n, L)
    return np.array([[lmn, lam / (1.0 + n**2 * L**2 / m**2)], [lam, lmn]])


def branch_eigenvalues(m: int, n: int, L: float, lam: float) -> tuple[float, float]:
    lmn = laplacian_eigenvalue(m, n, L)
    if m == 0:
        return lmn, lmn
    shift = lam * float(coupling_factor(m, n, L))
    return lmn + shift, lmn - shift


def mode_eigenvalue(index: ModeIndex, L: float, lam: float) -> float:
    """Growth rate of a single basis field."""
    if index.branch is Branch.THETA_MEAN:
        return laplacian_eigenvalue(0, index.n, L)
    b1, b2 = branch_eigenvalues(index.m, index.n, L, lam)
    return b1 if index.branch is Branch.PLUS else b2


def eigenpairs(modes, L: float, lam: float) -> list[EigenPair]:
    return [EigenPair(i, mode_eigenvalue(i, L, lam), lam) for i in modes]


def critical_lambda_of_m(m, L: float):
    """Value of lambda at which ``beta^1_{m,1}`` vanishes."""
    m = np.asarray(m, dtype=float)
    out = math.pi**2 * np.sqrt(1.0 + L**2 / m**2) * (1.0 + m**2 / L**2)
    return float(out) if out.ndim == 0 else out


def _scan(L, m_max):
    # lambda_m depends on m/L only and is convex in m; grow the scan until the tail rises
    while True:
        ms = np.arange(1, m_max + 1)
        vals = critical_lambda_of_m(ms, L)
        if m_max >= 2 and vals[-1] > vals[-2] and int(np.argmin(vals)) < m_max - 1:
            return ms, vals
        if m_max >= _M_MAX_CEILING:
            raise ValueError(f"lambda_m still decreasing at m_max={m_max}; increase m_max")
        m_max *= 2


def critical_point(L: float, m_max: int = DEFAULT_M_MAX, auto_extend: bool = True) -> CriticalPoint:
    """Minimizer ``m0`` of ``lambda_m`` over ``1..m_max`` and the critical ``lambda0``."""
    if L <= 0:
        raise ValueError("L must be positive")
    if auto_extend:
        ms, vals = _scan(L, max(m_max, 2))
    else:
        ms = np.arange(1, m_max + 1)
        vals = critical_lambda_of_m(ms, L)
        if m_max < 2 or not vals[-1] > vals[-2]:
            raise ValueError(f"lambda_m not increasing at m_max={m_max}; increase m_max")
    order = np.argsort(vals, kind="stable")
    best, second = int(order[0]), int(order[1])
    lam0 = float(vals[best])
    gap = float((vals[second] - lam0) / lam0)
    return CriticalPoint(
        m0=int(ms[best]), lambda0=lam0, degenerate=gap <= DEGENERACY_RTOL,
        runner_up_gap=gap, runner_up_m=int(ms[second]), L=L,
    )


def first_eigenvalue(lam: float, L: float, m_max: int = DEFAULT_M_MAX, n_max: int = 16,
                     include_mean: bool = True):
    """Largest growth rate over all branches, ``m <= m_max`` and ``n <= n_max``.

    Returns ``(beta_1, ModeIndex)``. Mean-flow modes (rate ``-pi^2``) win only
    while every PLUS rate is below ``-pi^2``, i.e. for small ``lam``; pass
    ``include_mean=False`` to scan the coupled branches alone.
    """
    ms = np.arange(1, m_max + 1)[:, None]
    ns = np.arange(1, n_max + 1)[None, :]
    lmn = -math.pi**2 * (ms**2 / L**2 + ns**2)
    shift = lam * coupling_factor(ms, ns, L)
    b1 = lmn + shift
    b2 = lmn - shift
    candidates = [
        (float(b1.max()), np.unravel_index(np.argmax(b1), b1.shape), Branch.PLUS),
        (float(b2.max()), np.unravel_index(np.argmax(b2), b2.shape), Branch.MINUS),
    ]
    if include_mean:
        candidates.append((-math.pi**2, None, Branch.THETA_MEAN))
    beta, where, branch = max(candidates, key=lambda c: c[0])
    if branch is Branch.THETA_MEAN:
        return beta, ModeIndex(0, 1, branch)
    return beta, ModeIndex(int(where[0]) + 1, int(where[1]) + 1, branch)


@dataclass(frozen=True)
class PESReport:
    L: float
    m0: int
    lambda0: float
    delta_frac: float
    beta_below: float
    beta_at: float
    beta_above: float
    others_max_above: float
    safe_delta: float

    @property
    def pattern(self) -> tuple[str, str, str]:
        def sign(b, tol=0.0):
            return "0" if abs(b) <= tol else ("+" if b > 0 else "-")
        return sign(self.beta_below), sign(self.beta_at, 1e-9), sign(self.beta_above)

    @property
    def others_stable(self) -> bool:
        return self.others_max_above < 0

    @property
    def ok(self) -> bool:
        return self.pattern == ("-", "0", "+") and self.others_stable


def pes_check(L: float, delta_frac: float, m_max: int = DEFAULT_M_MAX, n_max: int = 8) -> PESReport:
    """Check the exchange-of-stabilities sign pattern around ``lambda0``.

    ``safe_delta`` is the largest relative excursion above ``lambda0`` before
    any other mode crosses zero.
    """
    if not 0 < delta_frac < 1:
        raise ValueError("delta_frac must lie in (0, 1)")
    cp = critical_point(L, m_max)
    if cp.degenerate:
        raise DegenerateCriticalPoint(L, cp.tied)
    m0, lam0 = cp.m0, cp.lambda0
    beta = lambda lam: branch_eigenvalues(m0, 1, L, lam)[0]

    lam_hi = lam0 * (1 + delta_frac)
    ms = np.arange(1, max(m_max, 2 * m0 + 2) + 1)[:, None]
    ns = np.arange(1, n_max + 1)[None, :]
    lmn = -math.pi**2 * (ms**2 / L**2 + ns**2)
    shift = lam_hi * coupling_factor(ms, ns, L)
    b1 = lmn + shift
    b1[m0 - 1, 0] = -np.inf
    others = max(float(b1.max()), float((lmn - shift).max()), -math.pi**2)

    # plus-branch (m, n) crosses zero at lambda = -lmn / coupling; minus/mean never do
    crossing = -lmn / coupling_factor(ms, ns, L)
    crossing[m0 - 1, 0] = np.inf
    safe = float(crossing.min() / lam0 - 1.0)
    return PESReport(L, m0, lam0, delta_frac, beta(lam0 * (1 - delta_frac)), beta(lam0),
                     beta(lam_hi), others, safe)


def leray_project_theta(m: int, n: int, L: float) -> tuple[float, float]:
    """Leray projection of ``(e_mn, 0)`` onto divergence-free fields.

    Returns the ``(r, z)`` amplitudes of the projected field against
    ``(e_mn, ebar_mn)``. For ``m = 0`` there is no divergence-free partner and
    the projection vanishes.
    """
    if m == 0:
        return 0.0, 0.0
    k = n * L / m
    d = 1.0 / (1.0 + k * k)
    return d, -k * d


def apply_linear_operator(field: SpectralField, L: float, lam: float):
    """``L_lambda u = Laplacian u + lambda (P(u_theta, 0), u_r)`` mode by mode.

    The result is returned as component amplitude arrays ``(A_r, A_theta, A_z)``
    in the same layout as :meth:`SpectralField.component_arrays`, because the
    coupling term is not itself expanded in the vector basis.
    """
    M, N = field.truncation
    Ar, At, Az = field.component_arrays(L)
    n = np.arange(N + 1)[:, None]
    m = np.arange(M + 1)[None, :]
    lap = -math.pi**2 * (m**2 / L**2 + n**2)
    out_r, out_t, out_z = lap * Ar, lap * At, lap * Az
    for mm in range(1, M + 1):
        for nn in range(1, N + 1):
            pr, pz = leray_project_theta(mm, nn, L)
            out_r[nn, mm] += lam * pr * At[nn, mm]
            out_z[nn, mm] += lam * pz * At[nn, mm]
    out_t += lam * Ar
    return out_r, out_t, out_z


def operator_residual(index: ModeIndex, L: float, lam: float, grid: QuadratureGrid) -> float:
    """Pointwise sup of ``|L_lambda f - beta f|`` for one normalized basis field."""
    field = SpectralField.single(index, 1.0)
    beta = mode_eigenvalue(index, L, lam)
    u = evaluate_components(field, grid.rho, grid.z, L, derivatives=2)
    # coupling term evaluated from its projected amplitudes
    vm = vector_mode(index, L)
    pr, pz = leray_project_theta(index.m, index.n, L)
    proj_r = lam * pr * vm.c_theta
    proj_z = lam * pz * vm.c_theta
    zc = np.cos(index.m * math.pi * grid.z / L)
    zs = np.sin(index.m * math.pi * grid.z / L)
    rs = np.sin(index.n * math.pi * grid.rho)
    rc = np.cos(index.n * math.pi * grid.rho)
    res_r = u["lap_ur"] + proj_r * np.outer(rs, zc) - beta * u["ur"]
    res_t = u["lap_uth"] + lam * u["ur"] - beta * u["uth"]
    res_z = u["lap_uz"] + proj_z * np.outer(rc, zs) - beta * u["uz"]
    return float(max(np.abs(res_r).max(), np.abs(res_t).max(), np.abs(res_z).max()))


def critical_mode(L: float, m_max: int = DEFAULT_M_MAX) -> ModeIndex:
    cp = critical_point(L, m_max)
    if cp.degenerate:
        raise DegenerateCriticalPoint(L, cp.tied)
    return plus(cp.m0, 1)
