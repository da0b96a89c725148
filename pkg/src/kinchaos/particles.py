"""N-particle simulation of the moderately interacting kinetic system.

Dynamics (explicit Euler-Maruyama): for each particle i,

    X_i += V_i dt
    V_i += drift_i dt + dL_i,   drift_i = (1/N) sum_j b^N_t(Z_i - Z_j)

with the self term j = i included (finite after mollification, zero for odd
kernels) and the drift always evaluated on the pre-step snapshot. Noise draws
come from counter-based streams keyed by (seed, replica, step) with particle i
pinned to row i, so trajectories are pure functions of (seed, replica, config)
and particle 1 consumes identical noise in runs at different N.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._backend import get_core
from .grid import GridField, PhaseGrid
from .kernels import KernelSpec, MollifierSpec, default_eps_sing, scaled_quadrature
from .noise import NoiseSpec, _generator, sample_increments


class SimulationFault(RuntimeError):
    """Raised when particle coordinates become non-finite."""


@dataclass
class ParticleEnsemble:
    positions: np.ndarray  # (N, d)
    velocities: np.ndarray  # (N, d)
    time: float
    replica: int

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        if self.positions.shape != self.velocities.shape:
            raise ValueError("positions and velocities must have equal shapes")
        if self.positions.shape[0] < 1:
            raise ValueError("need at least one particle")
        self.check_finite()

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def check_finite(self) -> None:
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.velocities))):
            raise SimulationFault(f"non-finite coordinates at t={self.time}")

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(
            self.positions.copy(), self.velocities.copy(), self.time, self.replica
        )


@dataclass(frozen=True)
class InitialLaw:
    """Initial law on phase space.

    variants:
      gaussian_product -- independent normal coordinates (mean, diagonal cov)
      uniform_box      -- uniform on a product of intervals
      grid_density     -- d=1 law sampled from a GridField density
    """

    variant: str
    dim: int = 1
    mean: tuple = (0.0, 0.0)
    cov_diag: tuple = (1.0, 1.0)
    bounds: tuple = ((0.0, 1.0), (0.0, 1.0))
    density: GridField | None = None

    def __post_init__(self):
        if self.variant not in ("gaussian_product", "uniform_box", "grid_density"):
            raise ValueError(f"unknown initial law {self.variant!r}")
        if self.variant == "grid_density":
            if self.density is None:
                raise ValueError("grid_density law needs a density field")
            if self.dim != 1:
                raise ValueError("grid_density law is d=1 only")
            if self.density.values.min() < 0.0:
                raise ValueError("grid_density law has negative mass cells")


@dataclass(frozen=True)
class SimConfig:
    dt: float
    horizon: float
    snapshot_times: tuple = ()
    drift_mode: str = "interacting"

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.horizon < 0.0:
            raise ValueError("horizon must be nonnegative")
        if self.drift_mode not in ("interacting", "external-field"):
            raise ValueError(f"unknown drift mode {self.drift_mode!r}")
        snapped = tuple(
            round(t / self.dt) * self.dt for t in sorted(self.snapshot_times)
        )
        object.__setattr__(self, "snapshot_times", snapped)

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def snapshot_steps(self) -> list[int]:
        return sorted({int(round(t / self.dt)) for t in self.snapshot_times})


def init_ensemble(law: InitialLaw, n: int, replica: int, seed: int) -> ParticleEnsemble:
    """N i.i.d. draws from the initial law; row i is independent of n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = law.dim
    gen = _generator(seed, replica, 0, "init")
    if law.variant == "gaussian_product":
        mean = np.asarray(law.mean, dtype=float)
        std = np.sqrt(np.asarray(law.cov_diag, dtype=float))
        z = gen.standard_normal(size=(n, 2 * d))
        z = mean + std * z
        return ParticleEnsemble(z[:, :d], z[:, d:], 0.0, replica)
    if law.variant == "uniform_box":
        b = np.asarray(law.bounds, dtype=float)
        u = gen.uniform(size=(n, 2 * d))
        z = b[:, 0] + (b[:, 1] - b[:, 0]) * u
        return ParticleEnsemble(z[:, :d], z[:, d:], 0.0, replica)
    # grid_density: sample cells by mass, uniform jitter within the cell
    dens = law.density
    g = dens.grid
    probs = dens.values.ravel()
    total = probs.sum()
    if total <= 0.0:
        raise ValueError("grid_density law has zero total mass")
    cells = gen.choice(probs.size, size=n, p=probs / total)
    jitter = gen.uniform(size=(n, 2))
    ix, iv = np.unravel_index(cells, dens.values.shape)
    x = -g.box_x + (ix + jitter[:, 0]) * g.dx
    v = -g.box_v + (iv + jitter[:, 1]) * g.dv
    return ParticleEnsemble(x[:, None], v[:, None], 0.0, replica)


_KID = {
    ("zero", None): 0,
    ("smooth_bounded", "rational"): 1,
    ("smooth_bounded", "gaussian"): 2,
    ("velocity_only", None): 3,
    ("riesz_cutoff", None): 4,
}


def kernel_kid(k: KernelSpec) -> int:
    profile = k.profile if k.variant == "smooth_bounded" else None
    return _KID[(k.variant, profile)]


def pairwise_drift(
    state: ParticleEnsemble,
    k: KernelSpec,
    m: MollifierSpec,
    n_moll: int,
    eps_sing: float | None = None,
    targets: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[np.ndarray, int]:
    """Mean mollified force from the ensemble: (1/N) sum_j b^N_t(z - Z_j).

    Targets default to the particles themselves. Sources are summed in sorted
    phase-space order so the result is invariant under particle permutations.
    Returns (drift (n_t, d), capped singular evaluation count).
    """
    if state.dim != 1:
        raise NotImplementedError("pairwise drift is specialized to d=1")
    if eps_sing is None:
        eps_sing = default_eps_sing(m, n_moll)
    xs = state.positions[:, 0]
    vs = state.velocities[:, 0]
    order = np.lexsort((vs, xs))
    xs, vs = np.ascontiguousarray(xs[order]), np.ascontiguousarray(vs[order])
    if targets is None:
        xt, vt = state.positions[:, 0], state.velocities[:, 0]
    else:
        xt, vt = targets
    xt = np.ascontiguousarray(xt, dtype=float)
    vt = np.ascontiguousarray(vt, dtype=float)
    ny, nw, wq = scaled_quadrature(m, n_moll)
    out = np.zeros(len(xt))
    core = get_core()
    capped = core.pairwise_drift_1d(
        xt, vt, xs, vs, state.time,
        np.ascontiguousarray(ny[:, 0]), np.ascontiguousarray(nw[:, 0]),
        np.ascontiguousarray(wq),
        kernel_kid(k), k.gamma, k.s, k.cutoff_scale, eps_sing, out,
    )
    return out[:, None], int(capped)


@dataclass
class DriftField:
    """Time-indexed external drift B_s(x, v) on a d=1 phase grid.

    Queries use the nearest snapshot in time and bilinear interpolation in
    phase space; points outside the box are clamped to the boundary value and
    counted as excursions. Queried times outside [times[0], times[-1]] (up to
    half a snapshot spacing) are a hard coverage error.
    """

    times: np.ndarray  # (nt,)
    values: np.ndarray  # (nt, n_x, n_v)
    grid: PhaseGrid
    excursions: int = field(default=0, compare=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.times), self.grid.n_x, self.grid.n_v):
            raise ValueError("drift field shape mismatch")
        if len(self.times) < 1 or np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing and nonempty")

    def eval(self, t: float, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        slack = 0.5 * (np.diff(self.times).max() if len(self.times) > 1 else self.times[0] + 1.0)
        if t < self.times[0] - slack or t > self.times[-1] + slack:
            raise ValueError(f"drift field does not cover t={t}")
        it = int(np.argmin(np.abs(self.times - t)))
        plane = self.values[it]
        g = self.grid
        fx = (np.asarray(x, dtype=float) - (-g.box_x)) / g.dx
        fv = (np.asarray(v, dtype=float) - (-g.box_v)) / g.dv
        out_of_box = (fx < 0) | (fx > g.n_x - 1) | (fv < 0) | (fv > g.n_v - 1)
        self.excursions += int(np.count_nonzero(out_of_box))
        fx = np.clip(fx, 0.0, g.n_x - 1.0)
        fv = np.clip(fv, 0.0, g.n_v - 1.0)
        ix = np.minimum(fx.astype(int), g.n_x - 2)
        iv = np.minimum(fv.astype(int), g.n_v - 2)
        tx = fx - ix
        tv = fv - iv
        return (
            plane[ix, iv] * (1 - tx) * (1 - tv)
            + plane[ix + 1, iv] * tx * (1 - tv)
            + plane[ix, iv + 1] * (1 - tx) * tv
            + plane[ix + 1, iv + 1] * tx * tv
        )


def step(
    state: ParticleEnsemble,
    k: KernelSpec,
    m: MollifierSpec,
    n_moll: int,
    noise: NoiseSpec,
    dt: float,
    seed: int,
    step_index: int | None = None,
    external: DriftField | None = None,
) -> tuple[ParticleEnsemble, int]:
    """One Euler-Maruyama step; returns (new state, capped-evaluation count)."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if step_index is None:
        step_index = int(round(state.time / dt))
    if external is not None:
        drift = external.eval(
            state.time, state.positions[:, 0], state.velocities[:, 0]
        )[:, None]
        capped = 0
    elif k.variant == "zero":
        drift = np.zeros_like(state.velocities)
        capped = 0
    else:
        drift, capped = pairwise_drift(state, k, m, n_moll)
    dl = sample_increments(noise, dt, state.replica, step_index, state.n, seed)
    new = ParticleEnsemble(
        state.positions + state.velocities * dt,
        state.velocities + drift * dt + dl,
        state.time + dt,
        state.replica,
    )
    return new, capped


def simulate(
    law: InitialLaw,
    n: int,
    k: KernelSpec,
    m: MollifierSpec,
    noise: NoiseSpec,
    config: SimConfig,
    replica: int,
    seed: int,
) -> tuple[list[tuple[float, ParticleEnsemble]], dict]:
    """Run the system to the horizon, recording snapshots.

    Returns (snapshots, diagnostics) with diagnostics holding the total capped
    singular-evaluation count.
    """
    state = init_ensemble(law, n, replica, seed)
    snap_steps = set(config.snapshot_steps())
    snapshots: list[tuple[float, ParticleEnsemble]] = []
    capped_total = 0
    if 0 in snap_steps:
        snapshots.append((0.0, state.copy()))
    for s in range(config.n_steps):
        state, capped = step(state, k, m, n, noise, config.dt, seed, step_index=s)
        capped_total += capped
        if (s + 1) in snap_steps:
            snap = state.copy()
            snap.time = (s + 1) * config.dt  # avoid accumulated rounding
            snapshots.append((snap.time, snap))
    return snapshots, {"capped_evaluations": capped_total}


def simulate_coupled(
    law: InitialLaw,
    n: int,
    k: KernelSpec,
    m: MollifierSpec,
    noise: NoiseSpec,
    config: SimConfig,
    reference: DriftField,
    replica: int,
    seed: int,
) -> dict:
    """Couple particle 1 of the interacting system to a one-particle copy
    driven by the reference drift field, identical initial draw and noise.

    Returns a dict with the two paths on the snapshot grid, the sup distance
    over snapshots, and the boundary-excursion count of the field queries.
    """
    state = init_ensemble(law, n, replica, seed)
    limit = ParticleEnsemble(
        state.positions[:1].copy(), state.velocities[:1].copy(), 0.0, replica
    )
    snap_steps = set(config.snapshot_steps())
    path_sys: list[tuple[float, np.ndarray]] = []
    path_lim: list[tuple[float, np.ndarray]] = []

    def record():
        zs = np.concatenate([state.positions[0], state.velocities[0]])
        zl = np.concatenate([limit.positions[0], limit.velocities[0]])
        path_sys.append((state.time, zs))
        path_lim.append((limit.time, zl))

    excursions0 = reference.excursions
    if 0 in snap_steps:
        record()
    capped_total = 0
    for s in range(config.n_steps):
        if k.variant == "zero":
            drift = np.zeros_like(state.velocities)
            capped = 0
        else:
            drift, capped = pairwise_drift(state, k, m, n)
        capped_total += capped
        lim_drift = reference.eval(
            limit.time, limit.positions[:, 0], limit.velocities[:, 0]
        )[:, None]
        dl = sample_increments(noise, config.dt, replica, s, n, seed)
        state = ParticleEnsemble(
            state.positions + state.velocities * config.dt,
            state.velocities + drift * config.dt + dl,
            state.time + config.dt,
            replica,
        )
        limit = ParticleEnsemble(
            limit.positions + limit.velocities * config.dt,
            limit.velocities + lim_drift * config.dt + dl[:1],
            limit.time + config.dt,
            replica,
        )
        if (s + 1) in snap_steps:
            record()
    sup_dist = max(
        float(np.linalg.norm(zs - zl)) for (_, zs), (_, zl) in zip(path_sys, path_lim)
    ) if path_sys else 0.0
    return {
        "sup_distance": sup_dist,
        "path_system": path_sys,
        "path_limit": path_lim,
        "excursions": reference.excursions - excursions0,
        "capped_evaluations": capped_total,
    }


def save_snapshot(state: ParticleEnsemble, path: str | Path) -> None:
    """Flat binary record (little-endian float64): header (N, d, t), then
    positions row-major, then velocities; JSON sidecar manifest."""
    path = Path(path)
    header = np.array([state.n, state.dim, state.time], dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(state.positions.astype("<f8").tobytes())
        fh.write(state.velocities.astype("<f8").tobytes())
    manifest = {
        "format": "particle-snapshot",
        "dtype": "<f8",
        "n": state.n,
        "dim": state.dim,
        "t": state.time,
        "replica": state.replica,
    }
    path.with_suffix(path.suffix + ".manifest").write_text(
        json.dumps(manifest, indent=2) + "\n"
    )


def load_snapshot(path: str | Path) -> ParticleEnsemble:
    path = Path(path)
    manifest = json.loads(path.with_suffix(path.suffix + ".manifest").read_text())
    raw = np.fromfile(path, dtype="<f8")
    n, d, t = int(raw[0]), int(raw[1]), float(raw[2])
    body = raw[3:].reshape(2, n, d)
    return ParticleEnsemble(body[0], body[1], t, manifest.get("replica", 0))
