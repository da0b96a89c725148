"""Periodic phase-space grids and the fields living on them.

The grid covers the box [-L_x, L_x) x [-L_v, L_v) with power-of-two point
counts so spectral operations are cheap; fields are plain real arrays with
cell-volume quadrature. Binary export uses little-endian float64 records with
a short header plus a text manifest, shared with the particle snapshots.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PhaseGrid:
    """Periodic d=1 phase-space grid: n_x x n_v points on [-L_x,L_x)x[-L_v,L_v)."""

    n_x: int
    n_v: int
    box_x: float
    box_v: float

    def __post_init__(self):
        if self.n_x < 8 or self.n_v < 8:
            raise ValueError("grid needs at least 8 points per axis")
        if not (_is_pow2(self.n_x) and _is_pow2(self.n_v)):
            raise ValueError("grid point counts must be powers of two")
        if self.box_x <= 0.0 or self.box_v <= 0.0:
            raise ValueError("box half-widths must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.box_x / self.n_x

    @property
    def dv(self) -> float:
        return 2.0 * self.box_v / self.n_v

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dv

    def x_nodes(self) -> np.ndarray:
        return -self.box_x + self.dx * np.arange(self.n_x)

    def v_nodes(self) -> np.ndarray:
        return -self.box_v + self.dv * np.arange(self.n_v)

    def k_x(self) -> np.ndarray:
        """Angular frequencies along x (FFT layout)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_x, d=self.dx)

    def k_v(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_v, d=self.dv)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_nodes(), self.v_nodes(), indexing="ij")


@dataclass
class GridField:
    """Real-valued samples on a PhaseGrid (shape n_x x n_v)."""

    values: np.ndarray
    grid: PhaseGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_x, self.grid.n_v):
            raise ValueError(
                f"field shape {self.values.shape} does not match grid "
                f"({self.grid.n_x}, {self.grid.n_v})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite entries")

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def check_density(self, tol: float = 1e-12) -> None:
        if self.values.min() < -tol:
            raise ValueError(
                f"density has negative cells below -{tol}: min={self.values.min()}"
            )

    def copy(self) -> "GridField":
        return GridField(self.values.copy(), self.grid)


def gaussian_field(grid: PhaseGrid, sigma_x: float = 0.25, sigma_v: float = 0.5,
                   mean_x: float = 0.0, mean_v: float = 0.0) -> GridField:
    """Separable Gaussian probability density sampled on the grid."""
    xx, vv = grid.mesh()
    val = (
        np.exp(-0.5 * ((xx - mean_x) / sigma_x) ** 2)
        / (sigma_x * math.sqrt(2.0 * math.pi))
        * np.exp(-0.5 * ((vv - mean_v) / sigma_v) ** 2)
        / (sigma_v * math.sqrt(2.0 * math.pi))
    )
    return GridField(val, grid)


def save_field(field: GridField, path: str | Path, t: float = 0.0) -> None:
    """Flat binary dump: header (n_x, n_v, t as float64) then row-major values,
    all little-endian float64, plus a JSON sidecar manifest."""
    path = Path(path)
    header = np.array([field.grid.n_x, field.grid.n_v, t], dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(field.values.astype("<f8").tobytes())
    manifest = {
        "format": "grid-field",
        "dtype": "<f8",
        "n_x": field.grid.n_x,
        "n_v": field.grid.n_v,
        "box_x": field.grid.box_x,
        "box_v": field.grid.box_v,
        "t": t,
    }
    path.with_suffix(path.suffix + ".manifest").write_text(
        json.dumps(manifest, indent=2) + "\n"
    )


def load_field(path: str | Path) -> tuple[GridField, float]:
    path = Path(path)
    manifest = json.loads(path.with_suffix(path.suffix + ".manifest").read_text())
    raw = np.fromfile(path, dtype="<f8")
    n_x, n_v, t = int(raw[0]), int(raw[1]), float(raw[2])
    grid = PhaseGrid(n_x=n_x, n_v=n_v, box_x=manifest["box_x"], box_v=manifest["box_v"])
    values = raw[3:].reshape(n_x, n_v)
    return GridField(values, grid), t


def save_field_csv(field: GridField, path: str | Path) -> None:
    """CSV export for small grids: columns x, v, value."""
    xx, vv = field.grid.mesh()
    data = np.column_stack([xx.ravel(), vv.ravel(), field.values.ravel()])
    np.savetxt(path, data, delimiter=",", header="x,v,value", comments="")
