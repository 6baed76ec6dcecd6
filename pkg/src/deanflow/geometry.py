"""Physical parameters, the basic swirl profile and the control parameter.

This is the only module that handles dimensional quantities. Everything
downstream works in the non-dimensional narrow-gap model where lengths are
scaled by the gap width ``l = R2 - R1``, times by ``l**2 / nu``, velocities
by ``nu / l`` and pressures by ``rho * nu**2 / l**2``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

#: Gap-to-radius ratio below which the narrow-gap coefficients are trusted.
ASYMPTOTIC_GAP_RATIO = 0.1


class GeometryError(ValueError):
    """Raised for inadmissible cylinder geometries or radii outside the gap."""


@dataclass(frozen=True)
class FluidParameters:
    R1: float
    R2: float
    rho: float = 1.0
    nu: float = 1.0
    dp_dtheta0: float = 0.0
    L: float = 2.0

    def __post_init__(self):
        if not (self.R1 > 0 and self.R2 >= self.R1):
            raise GeometryError(f"need 0 < R1 <= R2, got R1={self.R1}, R2={self.R2}")
        if self.rho <= 0 or self.nu <= 0 or self.L <= 0:
            raise GeometryError("rho, nu and L must be positive")

    @property
    def gap(self) -> float:
        return self.R2 - self.R1

    @property
    def admissible(self) -> bool:
        """Narrow-gap admissibility ``l <= (R1 + R2) / 2`` with a non-empty gap."""
        return 0 < self.gap <= 0.5 * (self.R1 + self.R2)

    @property
    def asymptotics_trusted(self) -> bool:
        return self.admissible and self.gap / self.R1 <= ASYMPTOTIC_GAP_RATIO

    def validate(self) -> None:
        if self.R1 == self.R2:
            raise GeometryError("degenerate annulus: R1 == R2")
        if not self.admissible:
            raise GeometryError(
                f"gap l={self.gap} violates the narrow-gap condition l <= (R1+R2)/2"
            )


@dataclass(frozen=True)
class ProfileConstants:
    A: float
    B: float


def profile_constants(params: FluidParameters) -> ProfileConstants:
    """Constants ``A``, ``B`` of the basic profile ``r ln r + A r + B / r``.

    They are fixed by the wall values ``R2**2`` at ``r = R1`` and ``R1**2``
    at ``r = R2`` (in units of ``(dp/dtheta)_0 / (2 rho nu)``).
    """
    R1, R2 = float(params.R1), float(params.R2)
    if R1 == R2:
        raise GeometryError("degenerate annulus: R1 == R2")
    # Same closed forms rearranged so that nearly equal radii do not cancel.
    log_ratio = math.log1p((R2 - R1) / R1)
    rr = R1 * R2 / (R1 + R2)
    A = -(math.log(R2) + R1**2 * log_ratio / ((R2 - R1) * (R2 + R1)) + rr)
    B = R1**2 * R2**2 * log_ratio / ((R2 - R1) * (R2 + R1)) + rr * (R2**2 + R1 * R2 + R1**2)
    return ProfileConstants(A, B)


def _check_radius(params: FluidParameters, r):
    r = np.asarray(r, dtype=float)
    tol = 1e-12 * params.R2
    if np.any(r < params.R1 - tol) or np.any(r > params.R2 + tol):
        raise GeometryError(f"radius outside [{params.R1}, {params.R2}]")
    return r


def basic_velocity(params: FluidParameters, constants: ProfileConstants, r):
    """Azimuthal speed of the steady pressure-driven basic flow at radius ``r``."""
    r = _check_radius(params, r)
    prefactor = params.dp_dtheta0 / (2.0 * params.rho * params.nu)
    u = prefactor * (r * np.log(r) + constants.A * r + constants.B / r)
    return float(u) if u.ndim == 0 else u


def basic_pressure_gradient(params: FluidParameters, constants: ProfileConstants, r):
    """Diagnostic radial pressure gradient ``rho * u_theta(r)**2 / r`` of the basic flow."""
    u = basic_velocity(params, constants, r)
    return params.rho * np.asarray(u) ** 2 / np.asarray(r, dtype=float)


def coefficient_exact(params: FluidParameters, constants: ProfileConstants, r):
    """Radius-dependent coupling coefficients before the narrow-gap limit.

    Returns ``(ln r + A + 1/2, ln r + A + B / r**2)``: the factor multiplying
    ``u_r`` in the azimuthal equation and the factor multiplying ``u_theta``
    in the radial equation.
    """
    r = _check_radius(params, r)
    c_theta = np.log(r) + constants.A + 0.5
    c_r = np.log(r) + constants.A + constants.B / r**2
    if c_theta.ndim == 0:
        return float(c_theta), float(c_r)
    return c_theta, c_r


def coefficient_narrow_gap(params: FluidParameters) -> tuple[float, float]:
    rr = params.R1 * params.R2 / (params.R1 + params.R2)
    return -rr, 2.0 * rr


def lambda_parameter(params: FluidParameters) -> float:
    """Control parameter ``lambda = dp * sqrt(2) * R1 R2 / (R1 + R2)``.

    ``dp_dtheta0`` and the radii are taken as already non-dimensional (pressure
    in units of ``rho nu^2 / l^2``, radii in gap units). A negative value
    (reversed pressure gradient) is returned unchanged; the growing branch is
    then the MINUS one, see :func:`branch_swapped`.
    """
    R1, R2 = params.R1, params.R2
    lam = params.dp_dtheta0 * math.sqrt(2.0) * R1 * R2 / (R1 + R2)
    if lam < 0:
        log.warning("lambda=%g < 0: PLUS/MINUS branch roles swap; analyse |lambda|", lam)
    return lam


def branch_swapped(lam: float) -> bool:
    return lam < 0
