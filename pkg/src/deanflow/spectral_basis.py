"""Divergence-free trigonometric eigenbasis of the free-boundary Laplacian.

Coordinates are ``rho = r - r1`` in ``[0, 1]`` (the gap is the unit length)
and ``z`` in ``[0, L]``. Scalar modes come in two classes:

* ``W1``: ``cos(m pi z / L) sin(n pi rho)`` carries ``u_r`` and ``u_theta``;
* ``W2``: ``sin(m pi z / L) cos(n pi rho)`` carries ``u_z``.

A vector mode combines them with coefficients ``(c_r, c_theta, c_z)``. For
``m >= 1`` there are two branches (PLUS/MINUS) per ``(m, n)``, the
eigenvectors of the reduced 2x2 problem. For ``m = 0`` only the azimuthal
mean-flow mode ``(0, sin(n pi rho), 0)`` survives the constraints.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np


class Branch(enum.IntEnum):
    THETA_MEAN = 0
    PLUS = 1
    MINUS = 2


class ScalarKind(enum.Enum):
    W1 = "W1"
    W2 = "W2"


@dataclass(frozen=True, order=True)
class ModeIndex:
    m: int
    n: int
    branch: Branch

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"radial wavenumber must be >= 1, got n={self.n}")
        if self.branch is Branch.THETA_MEAN:
            if self.m != 0:
                raise ValueError("THETA_MEAN modes have m = 0")
        elif self.m < 1:
            raise ValueError(f"{self.branch.name} modes need m >= 1")

    def label(self) -> str:
        return f"{self.branch.name}_{self.m}_{self.n}"

    @classmethod
    def parse(cls, label: str) -> "ModeIndex":
        name, m, n = label.rsplit("_", 2)
        return cls(int(m), int(n), Branch[name])

    def __str__(self):
        return self.label()


def plus(m: int, n: int) -> ModeIndex:
    return ModeIndex(m, n, Branch.PLUS)


def minus(m: int, n: int) -> ModeIndex:
    return ModeIndex(m, n, Branch.MINUS)


def theta_mean(n: int) -> ModeIndex:
    return ModeIndex(0, n, Branch.THETA_MEAN)


def truncation_modes(M: int, N: int) -> list[ModeIndex]:
    """All modes with ``m <= M`` and ``n <= N`` in canonical order (m, n, branch)."""
    modes = []
    for m in range(M + 1):
        for n in range(1, N + 1):
            if m == 0:
                modes.append(theta_mean(n))
            else:
                modes.append(plus(m, n))
                modes.append(minus(m, n))
    return modes


def laplacian_eigenvalue(m: int, n: int, L: float) -> float:
    return -math.pi**2 * (m**2 / L**2 + n**2)


def scalar_mode_value(kind: ScalarKind | str, m: int, n: int, rho, z, L: float):
    """Value of a scalar eigenfunction at local radius ``rho = r - r1`` and ``z``."""
    kind = ScalarKind(kind)
    if kind is ScalarKind.W1:
        return np.cos(m * math.pi * np.asarray(z) / L) * np.sin(n * math.pi * np.asarray(rho))
    return np.sin(m * math.pi * np.asarray(z) / L) * np.cos(n * math.pi * np.asarray(rho))


@dataclass(frozen=True)
class VectorMode:
    """Normalized coefficients of one basis field.

    ``norm`` is the L2 norm of the un-normalized field with unit azimuthal
    coefficient; ``c_*`` already include the ``1 / norm`` rescaling.
    """

    index: ModeIndex
    c_r: float
    c_theta: float
    c_z: float
    norm: float

    @property
    def raw(self) -> tuple[float, float, float]:
        return self.c_r * self.norm, self.c_theta * self.norm, self.c_z * self.norm


def mode_shape(index: ModeIndex, L: float) -> tuple[float, float, float]:
    """Un-normalized ``(c_r, c_theta, c_z)`` with unit azimuthal coefficient."""
    if index.branch is Branch.THETA_MEAN:
        return 0.0, 1.0, 0.0
    k = index.n * L / index.m
    s = 1.0 / math.sqrt(1.0 + k * k)
    sign = 1.0 if index.branch is Branch.PLUS else -1.0
    return sign * s, 1.0, -sign * k * s


def _scalar_norm_sq(m: int, L: float) -> float:
    # int_0^1 sin^2(n pi rho) = 1/2 ; int_0^L cos^2 = L/2 (m >= 1) or L (m = 0)
    return 0.5 * (L if m == 0 else 0.5 * L)


def vector_mode(index: ModeIndex, L: float) -> VectorMode:
    cr, ct, cz = mode_shape(index, L)
    w = _scalar_norm_sq(index.m, L)
    # the W2 factor is identically zero for m = 0, its coefficient is zero there too
    norm = math.sqrt(w * (cr * cr + ct * ct + cz * cz))
    return VectorMode(index, cr / norm, ct / norm, cz / norm, norm)


class SpectralField:
    """Finite expansion ``sum_j y_j f_j`` in the normalized vector basis."""

    def __init__(self, coefficients: Mapping[ModeIndex, float] | None = None,
                 truncation: tuple[int, int] = (1, 1)):
        self.truncation = (int(truncation[0]), int(truncation[1]))
        M, N = self.truncation
        coeffs = {}
        for idx, val in (coefficients or {}).items():
            if idx.m > M or idx.n > N:
                raise ValueError(f"mode {idx} outside truncation {self.truncation}")
            coeffs[idx] = float(val)
        self.coefficients = coeffs

    @classmethod
    def from_vector(cls, modes: Iterable[ModeIndex], y, truncation) -> "SpectralField":
        return cls(dict(zip(modes, np.asarray(y, dtype=float))), truncation)

    @classmethod
    def single(cls, index: ModeIndex, value: float = 1.0, truncation=None) -> "SpectralField":
        truncation = truncation or (index.m, index.n)
        return cls({index: value}, truncation)

    def __getitem__(self, idx: ModeIndex) -> float:
        return self.coefficients.get(idx, 0.0)

    def vector(self, modes: Iterable[ModeIndex]) -> np.ndarray:
        return np.array([self[idx] for idx in modes], dtype=float)

    def with_truncation(self, truncation) -> "SpectralField":
        return SpectralField(self.coefficients, truncation)

    def _combine(self, other: "SpectralField", a: float, b: float) -> "SpectralField":
        trunc = (max(self.truncation[0], other.truncation[0]),
                 max(self.truncation[1], other.truncation[1]))
        out = {k: a * v for k, v in self.coefficients.items()}
        for k, v in other.coefficients.items():
            out[k] = out.get(k, 0.0) + b * v
        return SpectralField(out, trunc)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, scalar: float):
        return SpectralField({k: scalar * v for k, v in self.coefficients.items()}, self.truncation)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def norm(self) -> float:
        """L2 norm, exact because the basis is orthonormal."""
        return math.sqrt(sum(v * v for v in self.coefficients.values()))

    def component_arrays(self, L: float):
        """Physical amplitudes of each scalar mode, as ``[n, m]`` arrays.

        Returns ``(A_r, A_theta, A_z)``; ``A_r[n, m]`` multiplies
        ``cos(m pi z/L) sin(n pi rho)`` and ``A_z[n, m]`` multiplies
        ``sin(m pi z/L) cos(n pi rho)``.
        """
        M, N = self.truncation
        shape = (N + 1, M + 1)
        Ar, At, Az = np.zeros(shape), np.zeros(shape), np.zeros(shape)
        for idx, y in self.coefficients.items():
            vm = vector_mode(idx, L)
            Ar[idx.n, idx.m] += y * vm.c_r
            At[idx.n, idx.m] += y * vm.c_theta
            Az[idx.n, idx.m] += y * vm.c_z
        return Ar, At, Az

    def __repr__(self):
        nz = {str(k): v for k, v in sorted(self.coefficients.items()) if v != 0.0}
        return f"SpectralField(truncation={self.truncation}, {nz})"


def _simpson_weights(n_points: int, h: float) -> np.ndarray:
    w = np.ones(n_points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def _trapezoid_weights(n_points: int, h: float) -> np.ndarray:
    w = np.full(n_points, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class QuadratureGrid:
    """Composite Simpson in ``rho`` times composite trapezoid in ``z``.

    With ``nr - 1`` intervals Simpson integrates ``cos(j pi rho)`` exactly for
    ``j < nr - 1``; the trapezoid rule with ``nz - 1`` intervals is exact for
    ``cos(j pi z / L)`` unless ``j`` is a multiple of ``2 (nz - 1)``.
    """

    nr: int
    nz: int
    L: float

    def __post_init__(self):
        if self.nr < 3 or (self.nr - 1) % 2:
            raise ValueError("nr must be odd and >= 3 (Simpson needs an even interval count)")
        if self.nz < 2:
            raise ValueError("nz must be >= 2")

    @classmethod
    def for_truncation(cls, M: int, N: int, L: float, refine: int = 1) -> "QuadratureGrid":
        nr = 4 * max(N, 1) * refine + 1
        nz = 4 * max(M, 1) * refine + 1
        return cls(nr, nz, L)

    @cached_property
    def rho(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nr)

    @cached_property
    def z(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.nz)

    @cached_property
    def weights(self) -> np.ndarray:
        wr = _simpson_weights(self.nr, 1.0 / (self.nr - 1))
        wz = _trapezoid_weights(self.nz, self.L / (self.nz - 1))
        return np.outer(wr, wz)

    def check_resolves(self, M: int, N: int) -> None:
        if self.nr - 1 < 4 * N or self.nz - 1 < 4 * M:
            raise ValueError(
                f"quadrature grid {self.nr}x{self.nz} too coarse for truncation ({M},{N}); "
                f"need at least {4 * N + 1}x{4 * M + 1} samples"
            )

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(self.weights * values))


def _trig_tables(M, N, rho, z, L):
    n = np.arange(N + 1)[:, None] * math.pi
    m = np.arange(M + 1)[:, None] * math.pi / L
    return (np.sin(n * rho[None, :]), np.cos(n * rho[None, :]),
            np.sin(m * z[None, :]), np.cos(m * z[None, :]), n, m)


def evaluate_components(field: SpectralField, rho, z, L: float, derivatives: int = 0):
    """Velocity components on the tensor grid ``rho x z`` by exact trig sums.

    ``derivatives`` selects how much is returned: 0 gives ``ur, uth, uz``;
    1 adds first partials (``ur_r``, ``ur_z``, ...); 2 adds the Laplacian of
    each component (``lap_ur``, ...). Arrays have shape ``(len(rho), len(z))``.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    M, N = field.truncation
    Ar, At, Az = field.component_arrays(L)
    Rs, Rc, Zs, Zc, kn, km = _trig_tables(M, N, rho, z, L)

    def synth(R, C, Z):
        return R.T @ C @ Z

    out = {
        "ur": synth(Rs, Ar, Zc),
        "uth": synth(Rs, At, Zc),
        "uz": synth(Rc, Az, Zs),
    }
    if derivatives >= 1:
        out.update(
            ur_r=synth(kn * Rc, Ar, Zc), ur_z=synth(Rs, Ar, -km * Zs),
            uth_r=synth(kn * Rc, At, Zc), uth_z=synth(Rs, At, -km * Zs),
            uz_r=synth(-kn * Rs, Az, Zs), uz_z=synth(Rc, Az, km * Zc),
        )
    if derivatives >= 2:
        lap = -(kn**2) - (km.T**2)  # [n, m] eigenvalue table
        out.update(
            lap_ur=synth(Rs, lap * Ar, Zc),
            lap_uth=synth(Rs, lap * At, Zc),
            lap_uz=synth(Rc, lap * Az, Zs),
        )
    return out


def _grid_components(field: SpectralField, grid: QuadratureGrid, derivatives=0):
    M, N = field.truncation
    grid.check_resolves(M, N)
    return evaluate_components(field, grid.rho, grid.z, grid.L, derivatives)


def inner_product(a: SpectralField, b: SpectralField, grid: QuadratureGrid) -> float:
    """L2 inner product of two velocity fields by quadrature."""
    trunc = (max(a.truncation[0], b.truncation[0]), max(a.truncation[1], b.truncation[1]))
    ua = _grid_components(a.with_truncation(trunc), grid)
    ub = _grid_components(b.with_truncation(trunc), grid)
    integrand = ua["ur"] * ub["ur"] + ua["uth"] * ub["uth"] + ua["uz"] * ub["uz"]
    return grid.integrate(integrand)


def inner_product_exact(a: SpectralField, b: SpectralField, L: float) -> float:
    """Same inner product from trig orthogonality of the scalar modes."""
    trunc = (max(a.truncation[0], b.truncation[0]), max(a.truncation[1], b.truncation[1]))
    Aa = a.with_truncation(trunc).component_arrays(L)
    Ab = b.with_truncation(trunc).component_arrays(L)
    w = np.full((trunc[1] + 1, trunc[0] + 1), 0.25 * L)
    w[:, 0] = 0.5 * L
    wz = w.copy()
    wz[:, 0] = 0.0  # sin(0) vanishes
    return float(np.sum(w * (Aa[0] * Ab[0] + Aa[1] * Ab[1]) + wz * Aa[2] * Ab[2]))


def gram_matrix(modes: list[ModeIndex], L: float, grid: QuadratureGrid | None = None) -> np.ndarray:
    """Gram matrix of normalized basis fields, by quadrature when ``grid`` is given."""
    M = max(i.m for i in modes)
    N = max(i.n for i in modes)
    if grid is None:
        G = np.empty((len(modes), len(modes)))
        fields = [SpectralField.single(i, 1.0, (M, N)) for i in modes]
        for a, fa in enumerate(fields):
            for b, fb in enumerate(fields):
                G[a, b] = inner_product_exact(fa, fb, L)
        return G
    grid.check_resolves(M, N)
    comps = [evaluate_components(SpectralField.single(i, 1.0, (M, N)), grid.rho, grid.z, L)
             for i in modes]
    stack = np.stack([np.stack([c["ur"], c["uth"], c["uz"]]) for c in comps])
    weighted = stack * grid.weights[None, None]
    return np.einsum("acij,bcij->ab", weighted, stack)


def divergence_residual(field: SpectralField, grid: QuadratureGrid) -> float:
    """Sup over the grid of ``|d u_r / d rho + d u_z / dz|``."""
    if not field.coefficients:
        return 0.0
    u = evaluate_components(field, grid.rho, grid.z, grid.L, derivatives=1)
    return float(np.max(np.abs(u["ur_r"] + u["uz_z"])))


def boundary_residual(field: SpectralField, L: float, samples: int = 33) -> float:
    """Largest violation of the free-boundary conditions on the four box edges.

    Walls ``rho = 0, 1``: ``u_r = u_theta = 0`` and ``d u_z / d rho = 0``.
    Ends ``z = 0, L``: ``u_z = 0`` and ``d u_r / dz = d u_theta / dz = 0``.
    """
    s_rho = np.linspace(0.0, 1.0, samples)
    s_z = np.linspace(0.0, L, samples)
    walls = evaluate_components(field, np.array([0.0, 1.0]), s_z, L, derivatives=1)
    ends = evaluate_components(field, s_rho, np.array([0.0, L]), L, derivatives=1)
    worst = 0.0
    for key in ("ur", "uth", "uz_r"):
        worst = max(worst, float(np.max(np.abs(walls[key]))))
    for key in ("uz", "ur_z", "uth_z"):
        worst = max(worst, float(np.max(np.abs(ends[key]))))
    return worst
