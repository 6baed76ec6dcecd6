"""Physical-space evaluation of spectral states, vortex counting and file export."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import contourpy
import numpy as np

from .spectral_basis import SpectralField, evaluate_components

ZERO_RTOL = 1e-8
N_LEVELS = 11


class NoFlowError(ValueError):
    """The streamfunction vanishes identically."""


@dataclass(frozen=True)
class FieldGrid:
    r: np.ndarray
    z: np.ndarray
    u_r: np.ndarray
    u_theta: np.ndarray
    u_z: np.ndarray
    psi: np.ndarray
    L: float
    r1: float = 0.0

    def __post_init__(self):
        shape = (self.r.size, self.z.size)
        for name in ("u_r", "u_theta", "u_z", "psi"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")


def _sample(nr, nz, L):
    if nr < 2 or nz < 2:
        raise ValueError("need nr, nz >= 2")
    return np.linspace(0.0, 1.0, nr), np.linspace(0.0, L, nz)


def streamfunction_on(field: SpectralField, rho, z, L: float) -> np.ndarray:
    """``psi`` with ``u_r = d psi/dz`` and ``u_z = -d psi/dr``; zero on all edges."""
    M, N = field.truncation
    Ar, _, _ = field.component_arrays(L)
    m = np.arange(M + 1)
    scale = np.zeros(M + 1)
    scale[1:] = L / (math.pi * m[1:])  # m = 0 modes carry no u_r
    Rs = np.sin(np.arange(N + 1)[:, None] * math.pi * np.asarray(rho)[None, :])
    Zs = np.sin(m[:, None] * math.pi * np.asarray(z)[None, :] / L)
    return Rs.T @ (Ar * scale[None, :]) @ Zs


def streamfunction(field: SpectralField, nr: int, nz: int, L: float) -> np.ndarray:
    rho, z = _sample(nr, nz, L)
    return streamfunction_on(field, rho, z, L)


def evaluate_velocity(field: SpectralField, nr: int, nz: int, L: float, r1: float = 0.0) -> FieldGrid:
    """Sample the velocity and streamfunction on a uniform ``nr x nz`` grid."""
    rho, z = _sample(nr, nz, L)
    u = evaluate_components(field, rho, z, L)
    psi = streamfunction_on(field, rho, z, L)
    return FieldGrid(r1 + rho, z, u["ur"], u["uth"], u["uz"], psi, L, r1)


def midgap_profile(grid: FieldGrid) -> np.ndarray:
    """``psi`` along ``r = r1 + 1/2``, interpolated linearly between rows if needed."""
    target = grid.r1 + 0.5
    i = int(np.searchsorted(grid.r, target))
    if i < grid.r.size and math.isclose(grid.r[i], target, abs_tol=1e-12):
        return grid.psi[i]
    lo, hi = i - 1, i
    w = (target - grid.r[lo]) / (grid.r[hi] - grid.r[lo])
    return (1 - w) * grid.psi[lo] + w * grid.psi[hi]


def count_cells(grid: FieldGrid) -> int:
    """Number of sign regions of ``psi`` along the mid-gap line."""
    peak = float(np.max(np.abs(grid.psi)))
    if peak == 0.0:
        raise NoFlowError("no flow: psi vanishes identically")
    line = midgap_profile(grid)
    signs = np.sign(np.where(np.abs(line) <= ZERO_RTOL * peak, 0.0, line))
    signs = signs[signs != 0]
    if signs.size == 0:
        return 0
    return int(1 + np.count_nonzero(np.diff(signs)))


def contour_levels(grid: FieldGrid) -> np.ndarray:
    """``N_LEVELS`` levels symmetric about zero spanning ``(-max|psi|, max|psi|)``."""
    peak = float(np.max(np.abs(grid.psi)))
    half = N_LEVELS // 2
    return peak * np.arange(-half, half + 1) / (half + 1)


def contour_lines(grid: FieldGrid, levels=None):
    """``[(level, [polyline, ...]), ...]`` with polylines as ``(k, 2)`` arrays of ``(z, r)``."""
    levels = contour_levels(grid) if levels is None else levels
    gen = contourpy.contour_generator(grid.z, grid.r, grid.psi, name="serial",
                                      line_type=contourpy.LineType.Separate)
    return [(float(lv), [np.asarray(p) for p in gen.lines(lv)]) for lv in levels]


def _is_closed(line: np.ndarray, tol: float = 1e-12) -> bool:
    return line.shape[0] > 2 and bool(np.all(np.abs(line[0] - line[-1]) <= tol))


def closed_loops(grid: FieldGrid, level: float) -> int:
    return sum(_is_closed(p) for _, lines in contour_lines(grid, [level]) for p in lines)


def innermost_loop_count(grid: FieldGrid) -> int:
    """Closed contours at the extreme non-empty positive and negative levels combined."""
    total = 0
    lv = contour_levels(grid)
    for side in (lv[lv > 0][::-1], lv[lv < 0]):
        for level in side:
            n = closed_loops(grid, level)
            if n:
                total += n
                break
    return total


def _csv_text(grid: FieldGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "z", "u_r", "u_theta", "u_z", "psi"])
    for i, r in enumerate(grid.r):
        for j, z in enumerate(grid.z):
            w.writerow([f"{v:.17g}" for v in (r, z, grid.u_r[i, j], grid.u_theta[i, j],
                                               grid.u_z[i, j], grid.psi[i, j])])
    return buf.getvalue()


def _svg_text(grid: FieldGrid, scale: float = 200.0, margin: float = 20.0) -> str:
    width = grid.L * scale + 2 * margin
    height = (grid.r[-1] - grid.r[0]) * scale + 2 * margin

    def xy(pt):
        z, r = pt
        return margin + z * scale, height - margin - (r - grid.r[0]) * scale

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2f}" height="{height:.2f}" '
        f'viewBox="0 0 {width:.2f} {height:.2f}">',
        f'<rect x="{margin:.2f}" y="{margin:.2f}" width="{grid.L * scale:.2f}" '
        f'height="{height - 2 * margin:.2f}" fill="none" stroke="black" stroke-width="2"/>',
    ]
    if np.max(np.abs(grid.psi)) > 0:
        for level, lines in contour_lines(grid):
            if level > 0:
                style = 'stroke="#c0392b"'
            elif level < 0:
                style = 'stroke="#2e86c1" stroke-dasharray="4 3"'
            else:
                style = 'stroke="#7f8c8d"'
            for line in lines:
                pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in map(xy, line))
                tag = "polygon" if _is_closed(line) else "polyline"
                out.append(f'<{tag} data-level="{level:.6e}" points="{pts}" fill="none" '
                           f'{style} stroke-width="1"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export(grid: FieldGrid, fmt: str, path) -> Path:
    """Write ``grid`` as CSV or SVG; output is byte-identical for identical input."""
    fmt = fmt.upper()
    if fmt == "CSV":
        text = _csv_text(grid)
    elif fmt == "SVG":
        text = _svg_text(grid)
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {fmt} output to {path}: {exc}") from exc
    return path
