"""Mollified empirical densities and all error norms on the phase grid.

Covers the mixed position-velocity L^p norms, the anisotropic dyadic block
decomposition and Besov norms (d=1), the composite time-weighted error norm
combining a Besov term with the sup norm of the kernel-convolved error, and
total variation. Frequency shells use the anisotropic distance
|xi|_a = |xi_x|^(1/(1+alpha)) + |xi_v| matching the kinetic scaling a=(1+alpha,1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import get_core
from .grid import GridField, PhaseGrid
from .kernels import (
    KernelSpec,
    MollifierSpec,
    _bump_mass,
    kernel_eval,
    smoothstep,
)
from .params import INF, ModelParams, DerivedRates
from .particles import ParticleEnsemble


class LeakedMassError(RuntimeError):
    """Raised when too many particles deposit outside the grid box."""


def mollified_empirical_density(
    state: ParticleEnsemble,
    m: MollifierSpec,
    n_moll: int,
    t: float,
    grid: PhaseGrid,
    leak_threshold: float = 0.05,
) -> tuple[GridField, float]:
    """u^N_t(z) = (1/N) sum_i Gamma_t phi_N(Z_i - z) at the grid nodes.

    Deposition loops only over nodes inside each particle's mollifier support.
    Returns (field, leaked fraction); a leaked fraction above the threshold
    (particles whose support was not fully contained in the box) is an error.
    """
    if state.dim != 1:
        raise NotImplementedError("grid densities are d=1 only")
    out = np.zeros((grid.n_x, grid.n_v))
    core = get_core()
    leaked = core.deposit_1d(
        np.ascontiguousarray(state.positions[:, 0]),
        np.ascontiguousarray(state.velocities[:, 0]),
        t,
        m.scale(n_moll),
        m.alpha,
        m.r_x,
        m.r_v,
        _bump_mass(),
        -grid.box_x,
        grid.dx,
        -grid.box_v,
        grid.dv,
        out,
    )
    frac = leaked / state.n
    if frac > leak_threshold:
        raise LeakedMassError(
            f"{leaked}/{state.n} particles leak outside the grid box"
        )
    return GridField(out / state.n, grid), frac


def _axis_norm(values: np.ndarray, p: float, weight: float, axis: int) -> np.ndarray:
    if p == INF:
        return np.max(np.abs(values), axis=axis)
    return (np.sum(np.abs(values) ** p, axis=axis) * weight) ** (1.0 / p)


def mixed_lp_norm(f: GridField, p: tuple) -> float:
    """Iterated norm: L^{p_x} in position inside L^{p_v} in velocity."""
    px, pv = p
    inner = _axis_norm(f.values, px, f.grid.dx, axis=0)  # function of v
    return float(_axis_norm(inner, pv, f.grid.dv, axis=0))


@dataclass(frozen=True)
class AnisoIndex:
    alpha: float

    @property
    def a(self) -> tuple[float, float]:
        return (1.0 + self.alpha, 1.0)

    def distance(self, x, v) -> np.ndarray:
        """|z|_a = |x|^(1/(1+alpha)) + |v|; 1-homogeneous under the kinetic
        dilation z -> (lambda^(1+alpha) x, lambda v)."""
        return np.abs(x) ** (1.0 / (1.0 + self.alpha)) + np.abs(v)


@dataclass
class BlockDecomposition:
    blocks: list  # GridField, j = 0..j_max
    cutoffs: list  # symbol arrays on the frequency lattice
    j_max: int


def grid_j_max(grid: PhaseGrid, aniso: AnisoIndex) -> int:
    """Largest resolved shell: floor(log2 of the min anisotropic Nyquist
    radius) minus one; shells above are grid artifacts."""
    kx_max = math.pi / grid.dx
    kv_max = math.pi / grid.dv
    r_nyq = min(kx_max ** (1.0 / (1.0 + aniso.alpha)), kv_max)
    return int(math.floor(math.log2(r_nyq))) - 1


def _shell_symbols(grid: PhaseGrid, aniso: AnisoIndex) -> tuple[list[np.ndarray], int]:
    j_max = grid_j_max(grid, aniso)
    if j_max < 3:
        raise ValueError(
            f"grid resolves only j_max={j_max} anisotropic shells (need >= 3)"
        )
    kx, kv = np.meshgrid(grid.k_x(), grid.k_v(), indexing="ij")
    r = aniso.distance(kx, kv)
    # chi_j(r) = smoothstep(2^-j r): 1 inside radius 2^j, 0 outside 2^(j+1)
    chis = [smoothstep(r / 2.0 ** j) for j in range(j_max)]
    symbols = [chis[0]]
    for j in range(1, j_max):
        symbols.append(chis[j] - chis[j - 1])
    # the last block is the remainder, so the partition sums to 1 exactly
    symbols.append(1.0 - chis[j_max - 1])
    return symbols, j_max


def aniso_block_decompose(f: GridField, aniso: AnisoIndex) -> BlockDecomposition:
    """Dyadic anisotropic frequency-shell projections R^a_j f, j = 0..j_max.

    The symbols form an exact partition of unity on the frequency lattice, so
    the blocks sum back to f to rounding error.
    """
    symbols, j_max = _shell_symbols(f.grid, aniso)
    spec = np.fft.fft2(f.values)
    blocks = [
        GridField(np.fft.ifft2(spec * sym).real, f.grid) for sym in symbols
    ]
    return BlockDecomposition(blocks=blocks, cutoffs=symbols, j_max=j_max)


def besov_norm(
    f: GridField, s: float, q: float, p: tuple, aniso: AnisoIndex,
    decomposition: BlockDecomposition | None = None,
) -> float:
    """Anisotropic Besov norm: ell^q over shells j of 2^(js) |R^a_j f|_p,
    truncated at the grid's resolved j_max (q = inf is the supremum)."""
    dec = decomposition if decomposition is not None else aniso_block_decompose(f, aniso)
    terms = np.array(
        [2.0 ** (j * s) * mixed_lp_norm(blk, p) for j, blk in enumerate(dec.blocks)]
    )
    if q == INF:
        return float(terms.max())
    return float((terms ** q).sum() ** (1.0 / q))


def kernel_table(
    k: KernelSpec,
    grid: PhaseGrid,
    eps_sing: float = 0.0,
    window_frac: float = 0.125,
) -> np.ndarray:
    """Interaction kernel sampled on the grid box, smoothly windowed to zero
    near the boundary (the kernel is not periodic; the window width is the
    knob whose bias is probed by box-doubling)."""
    xx, vv = grid.mesh()
    if k.variant == "riesz_cutoff":
        r = np.abs(xx)
        sign = np.where(xx >= 0.0, 1.0, -1.0)
        xs = np.where(r < eps_sing, sign * max(eps_sing, grid.dx * 1e-9), xx)
        vals = kernel_eval(k, xs[..., None], vv[..., None])[..., 0]
        vals = np.where(r == 0.0, 0.0, vals)
    else:
        vals = kernel_eval(k, xx[..., None], vv[..., None])[..., 0]
    if window_frac > 0.0:
        wx = smoothstep(
            1.0 + (np.abs(xx) / grid.box_x - (1.0 - window_frac)) / window_frac
        )
        wv = smoothstep(
            1.0 + (np.abs(vv) / grid.box_v - (1.0 - window_frac)) / window_frac
        )
        vals = vals * wx * wv
    return vals


def convolve_field(f: GridField, table: np.ndarray) -> GridField:
    """Periodic spectral convolution (b * f) with a kernel table sampled on
    the centered box (internally rotated to FFT order)."""
    tab = np.fft.ifftshift(table)
    conv = np.fft.ifft2(np.fft.fft2(f.values) * np.fft.fft2(tab)).real
    return GridField(conv * f.grid.cell_volume, f.grid)


def s_beta_error_norm(
    f: GridField,
    params: ModelParams,
    rates: DerivedRates,
    t: float,
    k: KernelSpec,
    eps_sing: float = 0.0,
    window_frac: float = 0.125,
) -> dict:
    """Composite error norm at time t:

        (1 ^ t)^((beta-beta0)/alpha) |f|_{B^{0,1}_{p0;a}}
      + (1 ^ t)^((beta+gap)/alpha)   |b * f|_inf.

    Returns the two weighted components and their sum.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    aniso = AnisoIndex(params.alpha)
    tmin = min(1.0, t)
    w_besov = tmin ** ((params.beta - params.beta0) / params.alpha)
    w_binf = tmin ** ((params.beta + rates.gap) / params.alpha)
    c_besov = w_besov * besov_norm(f, 0.0, 1.0, params.p0, aniso)
    if k.variant == "zero":
        c_binf = 0.0
    else:
        tab = kernel_table(k, f.grid, eps_sing=eps_sing, window_frac=window_frac)
        conv = convolve_field(f, tab)
        c_binf = w_binf * float(np.max(np.abs(conv.values)))
    return {
        "component_besov": c_besov,
        "component_binf": c_binf,
        "total": c_besov + c_binf,
    }


def tv_distance(f: GridField, g: GridField) -> float:
    """Half the L^1 distance between densities on the same grid."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return 0.5 * float(np.abs(f.values - g.values).sum() * f.grid.cell_volume)


def overlap_integral(f: GridField, g: GridField) -> float:
    """Integral of min(f, g); for unit masses, tv = 1 - overlap."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return float(np.minimum(f.values, g.values).sum() * f.grid.cell_volume)
