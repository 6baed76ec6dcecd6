"""Advective interaction tensor and the pitchfork reduction onto the critical mode.

Tensor entries are ``T[j, k, l] = <(f_j . grad) f_k, f_l>`` with advecting
components ``(u_r, u_z)``. The Galerkin nonlinearity is ``-(u . grad) u``,
so the slaved response of mode ``j`` to a critical amplitude ``y`` is
``y_j = T[c, c, j] y**2 / beta_j`` and the reduced equation reads
``dy/dt = beta_c y - gamma y**3`` with
``gamma = sum_j -T[c, c, j]**2 / beta_j``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .linear_stability import (
    DegenerateCriticalPoint,
    branch_eigenvalues,
    critical_point,
    mode_eigenvalue,
)
from .spectral_basis import (
    ModeIndex,
    QuadratureGrid,
    SpectralField,
    evaluate_components,
    plus,
    truncation_modes,
    vector_mode,
)

log = logging.getLogger(__name__)


class GammaNonPositive(ArithmeticError):
    """The reduced cubic coefficient came out <= 0."""


class SlavedModeDegenerate(ArithmeticError):
    """A slaved mode has zero growth rate, so it cannot be eliminated."""


# ---------------------------------------------------------------------------
# exact triple integrals of trig products on [0, 1]


def _int_cos(j):
    return (j == 0).astype(float)


def _int_sin(j):
    j = np.asarray(j)
    odd = (j % 2) != 0
    safe = np.where(odd, j, 1)
    return np.where(odd, 2.0 / (math.pi * safe), 0.0)


def _prod2(k1, a, k2, b):
    if k1 == "c" and k2 == "c":
        return [(0.5, "c", a - b), (0.5, "c", a + b)]
    if k1 == "s" and k2 == "s":
        return [(0.5, "c", a - b), (-0.5, "c", a + b)]
    if k1 == "s" and k2 == "c":
        return [(0.5, "s", a + b), (0.5, "s", a - b)]
    return [(0.5, "s", a + b), (-0.5, "s", a - b)]


def triple_integral(kinds: str, a, b, c):
    """``int_0^1 g1(a pi x) g2(b pi x) g3(c pi x) dx`` for integer frequencies.

    ``kinds`` is a 3-letter string over ``{'s', 'c'}`` (sine / cosine).
    Arguments broadcast.
    """
    a, b, c = (np.asarray(x, dtype=np.int64) for x in (a, b, c))
    total = 0.0
    for w1, k1, f1 in _prod2(kinds[0], a, kinds[1], b):
        for w2, k2, f2 in _prod2(k1, f1, kinds[2], c):
            total = total + w1 * w2 * (_int_cos(f2) if k2 == "c" else _int_sin(f2))
    return total


# ---------------------------------------------------------------------------


class _ModeTable:
    def __init__(self, modes, L):
        self.modes = list(modes)
        self.L = L
        vms = [vector_mode(i, L) for i in self.modes]
        self.m = np.array([i.m for i in self.modes], dtype=np.int64)
        self.n = np.array([i.n for i in self.modes], dtype=np.int64)
        self.cr = np.array([v.c_r for v in vms])
        self.ct = np.array([v.c_theta for v in vms])
        self.cz = np.array([v.c_z for v in vms])


def _entries(tab: _ModeTable, j, k, l):
    """Closed-form tensor values for broadcastable position arrays into ``tab``."""
    L = tab.L
    mj, mk, ml = tab.m[j], tab.m[k], tab.m[l]
    nj, nk, nl = tab.n[j], tab.n[k], tab.n[l]
    pi = math.pi
    Z_ccc = L * triple_integral("ccc", mj, mk, ml)
    Z_css = L * triple_integral("css", mj, mk, ml)
    Z_ssc = L * triple_integral("ssc", mj, mk, ml)
    Z_scs = L * triple_integral("scs", mj, mk, ml)
    R_scs = triple_integral("scs", nj, nk, nl)
    R_ssc = triple_integral("ssc", nj, nk, nl)
    R_css = triple_integral("css", nj, nk, nl)
    R_ccc = triple_integral("ccc", nj, nk, nl)
    dr = nk * pi
    dz = mk * pi / L
    cr, ct, cz = tab.cr, tab.ct, tab.cz
    # u_r d_r acting on (r, theta) then z, u_z d_z acting on (r, theta) then z
    val = cr[j] * (cr[k] * cr[l] + ct[k] * ct[l]) * dr * R_scs * Z_ccc
    val = val + cr[j] * cz[k] * cz[l] * (-dr) * R_ssc * Z_css
    val = val + cz[j] * (cr[k] * cr[l] + ct[k] * ct[l]) * (-dz) * R_css * Z_ssc
    val = val + cz[j] * cz[k] * cz[l] * dz * R_ccc * Z_scs
    return val


def interaction_values(modes_j, modes_k, modes_l, L):
    """Dense block ``T[j, k, l]`` for three lists of modes (closed form)."""
    union = sorted(set(modes_j) | set(modes_k) | set(modes_l))
    pos = {m: i for i, m in enumerate(union)}
    tab = _ModeTable(union, L)
    j = np.array([pos[m] for m in modes_j])[:, None, None]
    k = np.array([pos[m] for m in modes_k])[None, :, None]
    l = np.array([pos[m] for m in modes_l])[None, None, :]
    return np.broadcast_to(_entries(tab, j, k, l), (len(modes_j), len(modes_k), len(modes_l)))


@dataclass
class InteractionTensor:
    """Sparse ``T[j, k, l]`` over the modes of a truncation."""

    modes: list
    truncation: tuple
    L: float
    j: np.ndarray
    k: np.ndarray
    l: np.ndarray
    values: np.ndarray
    _matrix: object = field(default=None, repr=False)

    @classmethod
    def assemble(cls, M: int, N: int, L: float, modes=None, drop_tol: float = 1e-14):
        modes = list(modes) if modes is not None else truncation_modes(M, N)
        tab = _ModeTable(modes, L)
        n = len(modes)
        kk = np.arange(n)[:, None]
        ll = np.arange(n)[None, :]
        J, K, Lx, V = [], [], [], []
        for jj in range(n):  # fixed order keeps the assembly deterministic
            block = _entries(tab, jj, kk, ll)
            scale = np.abs(block).max() if block.size else 0.0
            nzk, nzl = np.nonzero(np.abs(block) > drop_tol * max(scale, 1.0))
            J.append(np.full(nzk.size, jj))
            K.append(nzk)
            Lx.append(nzl)
            V.append(block[nzk, nzl])
        return cls(modes, (M, N), L, np.concatenate(J), np.concatenate(K),
                   np.concatenate(Lx), np.concatenate(V))

    @property
    def size(self) -> int:
        return len(self.modes)

    @property
    def nnz(self) -> int:
        return self.values.size

    def dense(self) -> np.ndarray:
        n = self.size
        T = np.zeros((n, n, n))
        T[self.j, self.k, self.l] = self.values
        return T

    def matrix(self):
        """CSR operator ``Q`` with ``Q @ kron(y, y) = sum_jk T[j,k,l] y_j y_k``."""
        if self._matrix is None:
            n = self.size
            self._matrix = sparse.csr_matrix(
                (self.values, (self.l, self.j * n + self.k)), shape=(n, n * n))
        return self._matrix

    def advect(self, y: np.ndarray) -> np.ndarray:
        """Projected advection ``<(u . grad) u, f_l>`` of ``u = sum y_j f_j``."""
        return self.matrix() @ np.kron(y, y)

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        """Derivative of :meth:`advect` at ``y``."""
        n = self.size
        Jm = np.zeros((n, n))
        np.add.at(Jm, (self.l, self.j), self.values * y[self.k])
        np.add.at(Jm, (self.l, self.k), self.values * y[self.j])
        return Jm

    def zeroed(self) -> "InteractionTensor":
        e = np.array([], dtype=np.int64)
        return InteractionTensor(self.modes, self.truncation, self.L, e, e, e, np.array([]))

    def triples(self):
        """Entries as ``(j_label, k_label, l_label, value)`` in assembly order."""
        for a, b, c, v in zip(self.j, self.k, self.l, self.values):
            yield self.modes[a], self.modes[b], self.modes[c], float(v)

    def write_text(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("# j k l value\n")
            for a, b, c, v in self.triples():
                fh.write(f"{a} {b} {c} {v:.17g}\n")


# ---------------------------------------------------------------------------


def _union_truncation(*fields_):
    return (max(f.truncation[0] for f in fields_), max(f.truncation[1] for f in fields_))


def trilinear(u: SpectralField, v: SpectralField, w: SpectralField, grid: QuadratureGrid) -> float:
    """``int (u_r d_r + u_z d_z) v . w`` over the box by quadrature."""
    M, N = _union_truncation(u, v, w)
    grid.check_resolves(M, N)
    uu = evaluate_components(u, grid.rho, grid.z, grid.L)
    vv = evaluate_components(v, grid.rho, grid.z, grid.L, derivatives=1)
    ww = evaluate_components(w, grid.rho, grid.z, grid.L)
    integrand = 0.0
    for c in ("ur", "uth", "uz"):
        integrand = integrand + (uu["ur"] * vv[c + "_r"] + uu["uz"] * vv[c + "_z"]) * ww[c]
    return grid.integrate(integrand)


def trilinear_exact(u: SpectralField, v: SpectralField, w: SpectralField, L: float) -> float:
    """Closed-form counterpart of :func:`trilinear` from the tensor entries."""
    mu, mv, mw = (sorted(f.coefficients) for f in (u, v, w))
    if not (mu and mv and mw):
        return 0.0
    T = interaction_values(mu, mv, mw, L)
    return float(np.einsum("jkl,j,k,l->", T, u.vector(mu), v.vector(mv), w.vector(mw)))


def quadrature_tensor(modes, L: float, grid: QuadratureGrid) -> np.ndarray:
    """Dense tensor by quadrature of analytically differentiated modes."""
    M = max(i.m for i in modes)
    N = max(i.n for i in modes)
    grid.check_resolves(M, N)
    ev = [evaluate_components(SpectralField.single(i, 1.0, (M, N)), grid.rho, grid.z, L, 1)
          for i in modes]
    ur = np.stack([e["ur"] for e in ev])
    uz = np.stack([e["uz"] for e in ev])
    W = grid.weights
    T = np.zeros((len(modes),) * 3)
    for c in ("ur", "uth", "uz"):
        vr = np.stack([e[c + "_r"] for e in ev])
        vz = np.stack([e[c + "_z"] for e in ev])
        wc = np.stack([e[c] for e in ev]) * W
        T += np.einsum("jab,kab,lab->jkl", ur, vr, wc)
        T += np.einsum("jab,kab,lab->jkl", uz, vz, wc)
    return T


# ---------------------------------------------------------------------------


def critical_self_interaction(m0: int, L: float, truncation) -> SpectralField:
    """Coefficients ``T[c, c, j]`` of the critical mode's self-advection, ``j != c``."""
    M, N = truncation
    crit = plus(m0, 1)
    targets = [i for i in truncation_modes(M, N) if i != crit]
    vals = interaction_values([crit], [crit], targets, L)[0, 0]
    return SpectralField(dict(zip(targets, vals)), (M, N))


@dataclass(frozen=True)
class BifurcationResult:
    m0: int
    lambda0: float
    L: float
    gamma: float
    slaved: SpectralField
    truncation: tuple
    convergence: float
    gamma_literal: float

    @property
    def amplitude_coefficient(self) -> float:
        return 1.0 / math.sqrt(self.gamma)

    @property
    def critical(self) -> ModeIndex:
        return plus(self.m0, 1)

    @property
    def literal_reading_differs(self) -> bool:
        """Whether dropping ``m <= 1`` slaved modes changes gamma beyond the truncation error."""
        return abs(self.gamma_literal - self.gamma) > self.convergence * abs(self.gamma)

    def slope(self) -> float:
        """Predicted ``d(y^2) / d lambda`` at onset."""
        return 1.0 / (self.gamma * math.sqrt(1.0 + self.L**2 / self.m0**2))


def _gamma_terms(m0, L, lambda0, truncation):
    forcing = critical_self_interaction(m0, L, truncation)
    slaved, terms = {}, {}
    for idx in sorted(forcing.coefficients):
        t = forcing[idx]
        beta = mode_eigenvalue(idx, L, lambda0)
        if beta == 0.0 or abs(beta) < 1e-12:
            if t == 0.0:
                continue
            raise SlavedModeDegenerate(f"slaved mode {idx} has beta=0 at lambda={lambda0}")
        if beta > 0 and t != 0.0:
            log.warning("slaved mode %s is unstable (beta=%g) at lambda=%g", idx, beta, lambda0)
        slaved[idx] = t / beta
        terms[idx] = -t * t / beta
    return slaved, terms


def gamma_sum(terms: dict, order=None) -> float:
    """Sum of per-mode gamma contributions in a fixed (sorted) or given order."""
    keys = sorted(terms) if order is None else list(order)
    return float(math.fsum(terms[k] for k in keys))


def gamma_coefficient(m0: int, L: float, lambda0: float | None = None, truncation=(8, 8),
                      check_convergence: bool = True) -> BifurcationResult:
    """Cubic coefficient of the reduced pitchfork and the slaved-mode response.

    ``convergence`` is the relative change of gamma when both truncation
    limits are doubled.
    """
    cp = critical_point(L)
    if cp.degenerate:
        raise DegenerateCriticalPoint(L, cp.tied)
    if lambda0 is None:
        lambda0 = cp.lambda0
    slaved, terms = _gamma_terms(m0, L, lambda0, truncation)
    gamma = gamma_sum(terms)
    if not gamma > 0:
        raise GammaNonPositive(f"gamma={gamma!r} <= 0: reduction contradicts gamma > 0")
    literal = gamma_sum({k: v for k, v in terms.items() if k.m > 1})
    conv = float("nan")
    if check_convergence:
        M, N = truncation
        _, terms2 = _gamma_terms(m0, L, lambda0, (2 * M, 2 * N))
        conv = abs(gamma_sum(terms2) - gamma) / gamma
    result = BifurcationResult(m0, lambda0, L, gamma, SpectralField(slaved, truncation),
                               tuple(truncation), conv, literal)
    if check_convergence and result.literal_reading_differs:
        log.info("gamma over m>1 only (%g) differs from the full sum (%g)", literal, gamma)
    return result


@dataclass(frozen=True)
class Amplitudes:
    y_plus: float
    y_minus: float
    subcritical: bool


def equilibrium_amplitude(lam: float, result: BifurcationResult, L: float | None = None) -> Amplitudes:
    L = result.L if L is None else L
    beta = branch_eigenvalues(result.m0, 1, L, lam)[0]
    if lam <= result.lambda0 or beta <= 0:
        return Amplitudes(0.0, 0.0, True)
    y = math.sqrt(beta / result.gamma)
    return Amplitudes(y, -y, False)


def bifurcated_state(lam: float, result: BifurcationResult, sign: int = 1) -> SpectralField:
    """Second-order approximation of the bifurcated equilibrium on the ``sign`` side."""
    amps = equilibrium_amplitude(lam, result)
    if amps.subcritical:
        raise ValueError(f"lambda={lam} is not above lambda0={result.lambda0}")
    y = amps.y_plus if sign > 0 else amps.y_minus
    state = result.slaved * (y * y)
    coeffs = dict(state.coefficients)
    coeffs[result.critical] = y
    return SpectralField(coeffs, result.truncation)
