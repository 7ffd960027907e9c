"""Uniform 2D grids, sampled wave fields, Simpson overlaps and the binary dump."""

from __future__ import annotations

import enum
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from ..errors import GridMismatch

DEFAULT_POINTS = 256
MIN_POINTS = 16
GAUSSIAN_WIDTHS = 8.0


class WaveFrame(enum.IntEnum):
    TRANSFORMED = 0
    ORIGINAL = 1


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int = DEFAULT_POINTS
    ny: int = DEFAULT_POINTS

    def __post_init__(self):
        if self.nx < MIN_POINTS or self.ny < MIN_POINTS:
            raise ValueError(f"grid needs at least {MIN_POINTS} points per axis, got {self.nx}x{self.ny}")
        bounds = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(b) for b in bounds):
            raise ValueError(f"grid extents must be finite, got {bounds}")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError(f"grid extents must be increasing, got {bounds}")

    @classmethod
    def square(cls, half_width: float, points: int = DEFAULT_POINTS) -> "Grid":
        return cls(-half_width, half_width, -half_width, half_width, points, points)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X1, X2)`` arrays of shape ``(nx, ny)``; the first index runs along x."""
        return np.meshgrid(self.x, self.y, indexing="ij")


@dataclass(frozen=True, eq=False)
class WaveField:
    """Complex samples on a grid at one time. ``values[i, j]`` sits at ``(x_i, y_j)``."""

    grid: Grid
    values: np.ndarray
    t: float
    frame: WaveFrame

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.nx, self.grid.ny):
            raise GridMismatch(f"values shape {values.shape} does not match grid {self.grid.nx}x{self.grid.ny}")
        if not np.all(np.isfinite(values)):
            raise ValueError("wave field contains non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "frame", WaveFrame(self.frame))

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm(self) -> float:
        return float(grid_overlap(self, self).real)


def _check_same(a: WaveField, b: WaveField):
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")
    if a.t != b.t:
        raise GridMismatch(f"times differ: {a.t} vs {b.t}")


def integrate_grid(grid: Grid, values: np.ndarray) -> complex:
    """2D composite Simpson quadrature, y first then x."""
    return complex(simpson(simpson(values, x=grid.y, axis=1), x=grid.x))


def grid_overlap(a: WaveField, b: WaveField) -> complex:
    """``<a|b>`` by 2D Simpson quadrature."""
    _check_same(a, b)
    return integrate_grid(a.grid, np.conj(a.values) * b.values)


def thread_count() -> int:
    """Worker count from ``MAGNETOSC_THREADS`` (default 1)."""
    raw = os.environ.get("MAGNETOSC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def sample(
    func: Callable[[np.ndarray, np.ndarray], np.ndarray],
    grid: Grid,
    t: float,
    frame: WaveFrame,
    threads: int | None = None,
) -> WaveField:
    """Evaluate ``func(X1, X2)`` on the grid, split by rows across threads.

    Each grid point is computed by the same elementwise expression whatever
    the split, so the result does not depend on the number of threads.
    """
    X1, X2 = grid.mesh()
    threads = thread_count() if threads is None else max(1, threads)
    if threads == 1:
        values = func(X1, X2)
    else:
        rows = np.array_split(np.arange(grid.nx), threads)
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda r: func(X1[r], X2[r]), [r for r in rows if r.size]))
        values = np.concatenate(parts, axis=0)
    return WaveField(grid, values, float(t), frame)


def auto_half_widths(rho_max: tuple[float, float], hbar: float, scale: tuple[float, float] = (1.0, 1.0)):
    """Half-widths covering eight Gaussian widths along each axis.

    ``scale`` divides the width, e.g. ``sqrt(m_i)`` for original coordinates.
    """
    return tuple(GAUSSIAN_WIDTHS * r * math.sqrt(hbar) / s for r, s in zip(rho_max, scale))


# --------------------------------------------------------------------------
# binary dump
#
# little-endian header, 72 bytes:
#   8s  magic b"MAGWAVE\0"
#   u32 version (1)
#   u32 frame (0 transformed, 1 original)
#   u32 nx, u32 ny
#   i32 n1, i32 n2 (-1 when not applicable)
#   f64 x_min, x_max, y_min, y_max, t
# followed by nx*ny complex128 values (real, imag float64 pairs), row-major,
# element (i, j) at (x_i, y_j) with i the slow index.

MAGIC = b"MAGWAVE\0"
VERSION = 1
HEADER = struct.Struct("<8sIIIIii5d")


def write_binary(path, field: WaveField, n=(-1, -1)) -> None:
    g = field.grid
    header = HEADER.pack(
        MAGIC, VERSION, int(field.frame), g.nx, g.ny, int(n[0]), int(n[1]),
        g.x_min, g.x_max, g.y_min, g.y_max, field.t,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<c16").tobytes())


def read_binary(path) -> tuple[WaveField, tuple[int, int]]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, frame, nx, ny, n1, n2, x0, x1, y0, y1, t = HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise ValueError(f"{path}: not a version-{VERSION} wave dump")
    body = raw[HEADER.size :]
    if len(body) != 16 * nx * ny:
        raise ValueError(f"{path}: expected {16 * nx * ny} data bytes, found {len(body)}")
    values = np.frombuffer(body, dtype="<c16").reshape(nx, ny)
    return WaveField(Grid(x0, x1, y0, y1, nx, ny), values, t, WaveFrame(frame)), (n1, n2)
