"""Interaction kernels, the anisotropic mollifier family, and their convolution.

The mollified interaction is evaluated by Gauss-Legendre quadrature over the
mollifier support; time enters only through node shifts (the kinetic shear
moves quadrature nodes, never rebuilds grids), so the evaluation is exact in t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

INF = math.inf


class SingularEvaluationError(ValueError):
    """Raised when a singular kernel is evaluated at its singularity."""


def smoothstep(r):
    """C-infinity cutoff: 1 for r <= 1, 0 for r >= 2, monotone between."""
    r = np.asarray(r, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        lo = np.where(r > 1.0, np.exp(-1.0 / np.maximum(r - 1.0, 1e-300)), 0.0)
        hi = np.where(r < 2.0, np.exp(-1.0 / np.maximum(2.0 - r, 1e-300)), 0.0)
    out = np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, hi / (hi + lo)))
    return out if out.shape else float(out)


@dataclass(frozen=True)
class KernelSpec:
    """Interaction kernel b(x, v) -> R^d.

    variants:
      zero            -- no interaction
      smooth_bounded  -- closed-form smooth odd-in-x profile (see `profile`)
      riesz_cutoff    -- -gamma (s-d) x |x|^(s-d-2) chi(|v|/M), chi radial
      velocity_only   -- profile over v only (x auxiliary)

    besov_meta (betab, pb) feeds the rate calculus, never the evaluation.
    """

    variant: str
    dim: int
    gamma: float = 1.0
    s: float = 2.0
    cutoff_scale: float = 1.0
    profile: str = "rational"
    betab: float = 0.0
    pb: tuple = (INF, INF)

    def __post_init__(self):
        if self.variant not in ("zero", "smooth_bounded", "riesz_cutoff", "velocity_only"):
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        if self.variant == "riesz_cutoff":
            if self.gamma == 0.0:
                raise ValueError("riesz_cutoff needs gamma != 0")
            if not (0.0 < self.s < self.dim + 1):
                raise ValueError(f"riesz exponent s={self.s} out of range")
            if self.cutoff_scale <= 0.0:
                raise ValueError("cutoff_scale must be > 0")


def kernel_eval(k: KernelSpec, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Force at a phase point; vectorized over leading axes of x, v."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if k.variant == "zero":
        return np.zeros_like(x)
    if k.variant == "smooth_bounded":
        r2 = np.sum(x * x, axis=-1, keepdims=True) + np.sum(v * v, axis=-1, keepdims=True)
        if k.profile == "rational":
            return -k.gamma * x / (1.0 + r2)
        if k.profile == "gaussian":
            return -k.gamma * x * np.exp(-0.5 * r2)
        raise ValueError(f"unknown smooth profile {k.profile!r}")
    if k.variant == "velocity_only":
        v2 = np.sum(v * v, axis=-1, keepdims=True)
        return -k.gamma * v / (1.0 + v2)
    # riesz_cutoff
    rx = np.sqrt(np.sum(x * x, axis=-1, keepdims=True))
    if np.any(rx == 0.0):
        raise SingularEvaluationError("riesz kernel evaluated at x = 0")
    chi = smoothstep(np.sqrt(np.sum(v * v, axis=-1, keepdims=True)) / k.cutoff_scale)
    return -k.gamma * (k.s - k.dim) * x * rx ** (k.s - k.dim - 2.0) * chi


@lru_cache(maxsize=None)
def _bump_mass() -> float:
    val, _ = quad(lambda u: math.exp(-1.0 / (1.0 - u * u)), -1.0, 1.0, limit=200)
    return val


def bump(u):
    """Normalized smooth bump on (-1, 1): integrates to 1, symmetric, C-infinity."""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        val = np.where(inside, np.exp(-1.0 / np.maximum(1.0 - u * u, 1e-300)), 0.0)
    return val / _bump_mass()


@dataclass(frozen=True)
class MollifierSpec:
    """The zeta-scaled symmetric mollifier family.

    The base density is a tensor product of normalized bumps with per-axis
    half-widths r_x = 2^-(1+alpha) and r_v = 1/2, which keeps the support of
    the base inside a fixed anisotropic ball; the scaled family then has
    anisotropic support radius proportional to N^-zeta.
    """

    alpha: float
    dim: int
    zeta: float
    quad_order: int = 8

    def __post_init__(self):
        if not (0.0 < self.zeta <= 1.0):
            raise ValueError(f"zeta must be in (0, 1], got {self.zeta}")
        if self.quad_order < 2:
            raise ValueError("quad_order must be >= 2")

    @property
    def r_x(self) -> float:
        return 0.5 ** (1.0 + self.alpha)

    @property
    def r_v(self) -> float:
        return 0.5

    def scale(self, n_particles: int) -> float:
        return float(n_particles) ** self.zeta

    def support_radii(self, n_particles: int) -> tuple[float, float]:
        """Per-axis support half-widths of phi_N in x and in v."""
        lam = self.scale(n_particles)
        return self.r_x * lam ** -(1.0 + self.alpha), self.r_v / lam

    def aniso_support_constant(self) -> float:
        """C such that supp(phi_N) lies in the anisotropic ball of radius
        C N^-zeta."""
        d = self.dim
        return (math.sqrt(d) * self.r_x) ** (1.0 / (1.0 + self.alpha)) + math.sqrt(d) * self.r_v


def base_density(m: MollifierSpec, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """The unscaled base bump phi(y, w); vectorized over leading axes."""
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    fy = np.prod(bump(y / m.r_x) / m.r_x, axis=-1)
    fw = np.prod(bump(w / m.r_v) / m.r_v, axis=-1)
    return fy * fw


def mollifier_eval(m: MollifierSpec, n_particles: int, t: float, x, v):
    """Transported mollifier Gamma_t phi_N at (x, v); vectorized."""
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    if t < 0.0:
        raise ValueError("t must be >= 0")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    lam = m.scale(n_particles)
    amp = lam ** ((2.0 + m.alpha) * m.dim)
    return amp * base_density(m, lam ** (1.0 + m.alpha) * (x - t * v), lam * v)


@lru_cache(maxsize=32)
def _base_quadrature(alpha: float, dim: int, zeta: float, order: int):
    """Tensor-product Gauss-Legendre rule over the base mollifier support.

    Returns (nodes_x, nodes_v, weights) with weights already multiplied by the
    base density, so sum(w_q f(y_q, w_q)) approximates integral of f phi.
    """
    m = MollifierSpec(alpha=alpha, dim=dim, zeta=zeta, quad_order=order)
    pts, wts = np.polynomial.legendre.leggauss(order)
    ax_x = pts * m.r_x
    awx = wts * m.r_x
    ax_v = pts * m.r_v
    awv = wts * m.r_v
    grids = np.meshgrid(*([ax_x] * dim + [ax_v] * dim), indexing="ij")
    wgrids = np.meshgrid(*([awx] * dim + [awv] * dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    ny, nw = nodes[:, :dim], nodes[:, dim:]
    weights = weights * base_density(m, ny, nw)
    keep = weights != 0.0
    ny, nw, weights = ny[keep], nw[keep], weights[keep]
    # normalize so the induced atomic measure is an exact probability: the
    # convolution then reproduces constants exactly at any quadrature order
    weights = weights / weights.sum()
    return ny, nw, weights


def scaled_quadrature(m: MollifierSpec, n_particles: int):
    """Quadrature rule of phi_N: base nodes shrunk by the anisotropic scaling."""
    ny, nw, w = _base_quadrature(m.alpha, m.dim, m.zeta, m.quad_order)
    lam = m.scale(n_particles)
    return ny * lam ** -(1.0 + m.alpha), nw / lam, w


def default_eps_sing(m: MollifierSpec, n_particles: int) -> float:
    """Capping radius for singular kernels: a tenth of the x-support of phi_N."""
    return 0.1 * m.support_radii(n_particles)[0]


def mollified_kernel_eval(
    k: KernelSpec,
    m: MollifierSpec,
    n_particles: int,
    t: float,
    x,
    v,
    eps_sing: float | None = None,
):
    """b^N_t at phase points: quadrature of b against the transported mollifier.

    x, v may carry leading batch axes. Returns (forces, capped_count) where
    capped_count is the number of kernel evaluations replaced by the capped
    value at radius eps_sing.
    """
    if t < 0.0:
        raise ValueError("t must be >= 0")
    single = np.asarray(x).ndim == 1
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    ny, nw, wq = scaled_quadrature(m, n_particles)
    if eps_sing is None:
        eps_sing = default_eps_sing(m, n_particles)
    out = np.zeros_like(x)
    capped = 0
    for q in range(len(wq)):
        xa = x - ny[q] - t * nw[q]
        va = v - nw[q]
        if k.variant == "riesz_cutoff":
            r = np.sqrt(np.sum(xa * xa, axis=-1, keepdims=True))
            small = r < eps_sing
            capped += int(np.count_nonzero(small))
            with np.errstate(divide="ignore", invalid="ignore"):
                unit = np.where(r > 0.0, xa / np.maximum(r, 1e-300), 0.0)
            xa = np.where(small, unit * eps_sing, xa)
            # exactly-at-zero arguments contribute nothing (odd kernel)
            zero = r == 0.0
            val = kernel_eval(k, np.where(zero, eps_sing, xa), va)
            val = np.where(zero, 0.0, val)
        else:
            val = kernel_eval(k, xa, va)
        out += wq[q] * val
    return (out[0] if single else out), capped
