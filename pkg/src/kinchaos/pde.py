"""Deterministic d=1 reference solver for the nonlinear kinetic Fokker-Planck
equation

    du/dt + v du/dx + div_v((b * u) u) = -(-Laplace_v)^(alpha/2) u

with the exact Fourier free propagator and two nonlinear modes: Strang
splitting (primary) and a Duhamel-Picard fixed-point iteration (validation,
short horizons only).

The free semigroup acts in frequency as

    out(k_x, k_v) = exp(-int_0^t |k_v + u k_x|^alpha du) * in(k_x, k_v + t k_x)

where the frequency shear is realized by the exact physical-space phase factor
exp(-i k_x t v) (band-limited interpolation), so no lattice-alignment of t is
required.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridField, PhaseGrid
from .kernels import KernelSpec
from .norms import convolve_field, kernel_table


class CflError(RuntimeError):
    """Raised when the drift CFL condition max|B| dt <= dv is violated."""


@dataclass(frozen=True)
class PdeConfig:
    dt: float
    dealias: bool = False
    picard_iters: int = 0
    eps_sing: float = 0.0
    window_frac: float = 0.125

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.picard_iters < 0:
            raise ValueError("picard_iters must be >= 0")


@dataclass
class SpectralState:
    spectrum: np.ndarray  # complex, (n_x, n_v), FFT layout
    grid: PhaseGrid
    time: float

    def mass(self) -> float:
        """Total mass is the zero-frequency coefficient times cell volume."""
        return float(self.spectrum[0, 0].real) * self.grid.cell_volume

    def to_field(self) -> GridField:
        return GridField(np.fft.ifft2(self.spectrum).real, self.grid)


def _stable_exponent(kx: np.ndarray, kv: np.ndarray, t: float, alpha: float) -> np.ndarray:
    """int_0^t |k_v + u k_x|^alpha du in closed form."""
    if t == 0.0:
        return np.zeros(np.broadcast_shapes(kx.shape, kv.shape))
    hi = kv + t * kx
    # antiderivative of |w|^alpha is sign(w) |w|^(alpha+1) / (alpha+1)
    prim = lambda w: np.sign(w) * np.abs(w) ** (alpha + 1.0) / (alpha + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        gen = (prim(hi) - prim(kv)) / kx
    return np.where(kx == 0.0, t * np.abs(kv) ** alpha, gen)


def _shear(values: np.ndarray, grid: PhaseGrid, t: float) -> np.ndarray:
    """Exact band-limited shear f(x, v) -> f(x - t v, v)."""
    if t == 0.0:
        return values
    kx = grid.k_x()[:, None]
    v = grid.v_nodes()[None, :]
    spec_x = np.fft.fft(values, axis=0)
    return np.fft.ifft(spec_x * np.exp(-1j * kx * t * v), axis=0).real


def free_propagate(f: GridField, t: float, alpha: float) -> GridField:
    """Exact free kinetic semigroup P_t (shear then stable multiplier)."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return f.copy()
    sheared = _shear(f.values, f.grid, t)
    kx, kv = np.meshgrid(f.grid.k_x(), f.grid.k_v(), indexing="ij")
    mult = np.exp(-_stable_exponent(kx, kv, t, alpha))
    out = np.fft.ifft2(np.fft.fft2(sheared) * mult).real
    return GridField(out, f.grid)


def convolve_drift(
    u: GridField, k: KernelSpec, eps_sing: float = 0.0, window_frac: float = 0.125,
    table: np.ndarray | None = None,
) -> GridField:
    """Drift field B = b * u by periodic spectral convolution with the
    windowed kernel table (precompute the table for repeated calls)."""
    if table is None:
        table = kernel_table(k, u.grid, eps_sing=eps_sing, window_frac=window_frac)
    return convolve_field(u, table)


def _upwind_flux_divergence(u: np.ndarray, b: np.ndarray, dv: float) -> np.ndarray:
    """Conservative first-order upwind discretization of d/dv (B u), periodic
    in v; exact telescoping mass conservation."""
    b_face = 0.5 * (b + np.roll(b, -1, axis=1))  # face j+1/2
    upwind = np.where(b_face > 0.0, u, np.roll(u, -1, axis=1))
    flux = b_face * upwind
    return (flux - np.roll(flux, 1, axis=1)) / dv


def _dealias_mask(grid: PhaseGrid) -> np.ndarray:
    kx = np.abs(np.fft.fftfreq(grid.n_x)) <= 1.0 / 3.0
    kv = np.abs(np.fft.fftfreq(grid.n_v)) <= 1.0 / 3.0
    return np.outer(kx, kv)


def solve(
    mu0: GridField,
    k: KernelSpec,
    alpha: float,
    horizon: float,
    cfg: PdeConfig,
    snapshot_times: tuple | None = None,
) -> tuple[list[tuple[float, GridField]], dict]:
    """Strang splitting: half free transport, half exact fractional diffusion,
    a Heun (second-order) step of the conservative upwind drift flux, then the
    mirrored halves. Mass is conserved by construction.

    Returns (snapshots, diagnostics) with negative-mass warnings and the CFL
    margin; violating max|B| dt > dv is a hard error.
    """
    grid = mu0.grid
    n_steps = max(1, int(round(horizon / cfg.dt)))
    dt = horizon / n_steps
    if snapshot_times is None:
        snapshot_times = (horizon,)
    snap_steps = {int(round(t / dt)): round(t / dt) * dt for t in snapshot_times}
    kv = grid.k_v()[None, :]
    diff_half = np.exp(-0.5 * dt * np.abs(kv) ** alpha)
    table = None
    if k.variant != "zero":
        table = kernel_table(k, grid, eps_sing=cfg.eps_sing, window_frac=cfg.window_frac)
    mask = _dealias_mask(grid) if cfg.dealias else None
    u = mu0.values.copy()
    diagnostics = {"negative_mass_warnings": [], "max_cfl": 0.0}
    snapshots: list[tuple[float, GridField]] = []
    if 0 in snap_steps:
        snapshots.append((0.0, GridField(u.copy(), grid)))

    def drift_rhs(uv: np.ndarray) -> np.ndarray:
        b = convolve_field(GridField(uv, grid), table).values
        cfl = float(np.max(np.abs(b))) * dt / grid.dv
        diagnostics["max_cfl"] = max(diagnostics["max_cfl"], cfl)
        if cfl > 1.0:
            raise CflError(f"drift CFL violated: max|B| dt / dv = {cfl:.3f} > 1")
        return -_upwind_flux_divergence(uv, b, grid.dv)

    for s in range(n_steps):
        u = _shear(u, grid, 0.5 * dt)
        u = np.fft.ifft(np.fft.fft(u, axis=1) * diff_half, axis=1).real
        if table is not None:
            k1 = drift_rhs(u)
            k2 = drift_rhs(u + dt * k1)
            u = u + 0.5 * dt * (k1 + k2)
        u = np.fft.ifft(np.fft.fft(u, axis=1) * diff_half, axis=1).real
        u = _shear(u, grid, 0.5 * dt)
        if mask is not None:
            u = np.fft.ifft2(np.fft.fft2(u) * mask).real
        if u.min() < -1e-8:
            diagnostics["negative_mass_warnings"].append(
                {"step": s, "t": (s + 1) * dt, "min": float(u.min())}
            )
        if (s + 1) in snap_steps:
            snapshots.append((snap_steps[s + 1], GridField(u.copy(), grid)))
    return snapshots, diagnostics


def _div_v_spectral(values: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    kv = grid.k_v()[None, :]
    return np.fft.ifft(1j * kv * np.fft.fft(values, axis=1), axis=1).real


def duhamel_picard(
    mu0: GridField,
    k: KernelSpec,
    alpha: float,
    horizon: float,
    iters: int,
    n_time: int = 16,
    eps_sing: float = 0.0,
    window_frac: float = 0.125,
) -> tuple[GridField, dict]:
    """Picard iteration of the mild formulation

        u_t = P_t mu0 - int_0^t P_{t-s} div_v((b * u_s) u_s) ds

    with spectral div_v and trapezoid time quadrature. Returns the final
    iterate at the horizon plus diagnostics: the sup-norm gaps between
    successive iterates and a non-contraction flag (gap not decreasing after
    three iterations — the fixed point only contracts on short horizons).
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    grid = mu0.grid
    ts = np.linspace(0.0, horizon, n_time + 1)
    ds = ts[1] - ts[0]
    free = [free_propagate(mu0, float(t), alpha).values for t in ts]
    table = None
    if k.variant != "zero":
        table = kernel_table(k, grid, eps_sing=eps_sing, window_frac=window_frac)
    current = [f.copy() for f in free]
    gaps: list[float] = []
    for _ in range(iters):
        if table is None:
            gaps.append(0.0)
            break
        fluxes = [
            _div_v_spectral(
                convolve_field(GridField(u, grid), table).values * u, grid
            )
            for u in current
        ]
        new = []
        for i, t in enumerate(ts):
            acc = free[i].copy()
            if i > 0:
                w = np.full(i + 1, ds)
                w[0] = w[-1] = 0.5 * ds
                for j in range(i + 1):
                    if w[j] == 0.0:
                        continue
                    prop = free_propagate(
                        GridField(fluxes[j], grid), float(t - ts[j]), alpha
                    ).values
                    acc -= w[j] * prop
            new.append(acc)
        gaps.append(max(float(np.max(np.abs(n - c))) for n, c in zip(new, current)))
        current = new
    non_contraction = len(gaps) > 3 and gaps[-1] >= gaps[-2] >= gaps[-3]
    diagnostics = {"iterate_gaps": gaps, "non_contraction": bool(non_contraction)}
    return GridField(current[-1], grid), diagnostics
