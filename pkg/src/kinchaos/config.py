"""Flat text configuration: one `section.key = value` per line.

The typed key registry below is the single source of truth for names,
defaults, and help text; the CLI help and the documentation are generated
from it, and unknown keys are hard errors. Pairs are comma-separated with
`inf` allowed; lists are comma-separated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .grid import PhaseGrid
from .kernels import KernelSpec, MollifierSpec
from .params import INF, ModelParams
from .particles import InitialLaw, SimConfig
from .pde import PdeConfig


class ConfigError(ValueError):
    """Raised for unknown keys or unparsable values."""


def _parse_float(s: str) -> float:
    s = s.strip().lower()
    if s in ("inf", "+inf", "infinity"):
        return INF
    return float(s)


def _parse_pair(s: str) -> tuple:
    parts = [p for p in s.split(",") if p.strip()]
    if len(parts) != 2:
        raise ConfigError(f"expected two comma-separated values, got {s!r}")
    return (_parse_float(parts[0]), _parse_float(parts[1]))


def _parse_floats(s: str) -> tuple:
    return tuple(_parse_float(p) for p in s.split(",") if p.strip())


def _parse_ints(s: str) -> tuple:
    return tuple(int(p) for p in s.split(",") if p.strip())


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


_PARSERS = {
    "float": _parse_float,
    "int": lambda s: int(s.strip()),
    "str": lambda s: s.strip(),
    "bool": _parse_bool,
    "pair": _parse_pair,
    "floats": _parse_floats,
    "ints": _parse_ints,
}

# key -> (type, default, help)
REGISTRY: dict[str, tuple[str, object, str]] = {
    "model.alpha": ("float", 2.0, "stability index of the driving noise, in (1, 2]"),
    "model.dim": ("int", 1, "spatial dimension d"),
    "model.p0": ("pair", (1.0, 1.0), "integrability pair of the initial density"),
    "model.beta0": ("float", -0.01, "regularity of the initial density, in (-1, 0)"),
    "model.pb": ("pair", (INF, INF), "integrability pair of the kernel"),
    "model.betab": ("float", -0.01, "regularity of the kernel, <= 0"),
    "model.zeta": ("float", 0.169, "mollification order, in (0, 1]"),
    "model.beta": ("float", 0.9, "error-norm smoothness index"),
    "model.horizon": ("float", 0.25, "final time T of the experiments"),
    "model.epsilon": ("float", 0.01, "slack in the optimal-rate balance"),
    "kernel.variant": ("str", "smooth_bounded",
                       "zero | smooth_bounded | riesz_cutoff | velocity_only"),
    "kernel.gamma": ("float", 1.0, "interaction intensity"),
    "kernel.s": ("float", 0.5, "singularity exponent of the Riesz force"),
    "kernel.M": ("float", 1.0, "velocity cutoff scale of the Riesz force"),
    "kernel.profile": ("str", "rational", "smooth profile: rational | gaussian"),
    "mollifier.zeta": ("float", 0.169, "mollification order (mirrors model.zeta)"),
    "mollifier.quad_order": ("int", 3, "Gauss-Legendre points per axis"),
    "grid.n_x": ("int", 4096, "grid points along x (power of two)"),
    "grid.n_v": ("int", 512, "grid points along v (power of two)"),
    "grid.box_x": ("float", 0.75, "half-width of the x box"),
    "grid.box_v": ("float", 4.0, "half-width of the v box"),
    "sim.dt": ("float", 0.025, "particle time step"),
    "sim.snapshot_times": ("floats", (0.125, 0.25), "snapshot times"),
    "pde.dt": ("float", 0.0125, "reference-solver time step"),
    "pde.dealias": ("bool", False, "apply the 2/3 dealiasing rule"),
    "pde.picard_iters": ("int", 0, "0 = splitting mode, >= 1 = Picard mode"),
    "pde.window_frac": ("float", 0.125, "kernel-table boundary window fraction"),
    "pde.eps_sing": ("float", 0.0, "capping radius for singular kernel tables"),
    "initial.variant": ("str", "gaussian_product",
                        "gaussian_product | uniform_box | grid_density"),
    "initial.mean": ("pair", (0.0, 0.0), "mean of the Gaussian initial law"),
    "initial.cov_diag": ("pair", (0.0144, 0.1225), "diagonal covariance"),
    "initial.bounds_x": ("pair", (0.0, 1.0), "x bounds of the uniform box"),
    "initial.bounds_v": ("pair", (0.0, 1.0), "v bounds of the uniform box"),
    "experiment.mode": ("str", "sampling",
                        "moderate | weak | strong | sampling | mollifier_scaling"),
    "experiment.n_values": ("ints", (128, 256, 512, 1024, 2048, 4096, 8192),
                            "particle-count ladder"),
    "experiment.replicas": ("int", 200, "independent replicas per N"),
    "experiment.moment_order": ("int", 2, "m of the replica L^m statistic"),
    "experiment.fixed_scale": ("float", 2.0, "fixed bandwidth of the sampling mode"),
    "experiment.bandwidths": ("floats", (), "weak-mode bandwidth sweep (empty = auto)"),
    "experiment.leak_threshold": ("float", 0.05, "max tolerated leaked-mass fraction"),
}


def default_config() -> dict:
    return {k: v for k, (_, v, _) in REGISTRY.items()}


def parse_value(key: str, raw: str):
    if key not in REGISTRY:
        raise ConfigError(f"unknown config key: {key}")
    typ = REGISTRY[key][0]
    try:
        return _PARSERS[typ](raw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc


def parse_config_text(text: str, base: dict | None = None) -> dict:
    cfg = dict(base) if base is not None else default_config()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, raw = stripped.split("=", 1)
        cfg[key.strip()] = parse_value(key.strip(), raw)
    return cfg


def load_config(path: str | Path | None, overrides: list[str] | None = None) -> dict:
    """Load defaults, then the file, then `--set section.key=value` overrides
    (last write wins)."""
    cfg = default_config()
    if path is not None:
        cfg = parse_config_text(Path(path).read_text(), base=cfg)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override must look like section.key=value: {item!r}")
        key, raw = item.split("=", 1)
        cfg[key.strip()] = parse_value(key.strip(), raw)
    return cfg


def config_reference() -> str:
    """Key reference generated from the registry (the CLI help embeds this)."""
    lines = []
    for key, (typ, default, help_text) in REGISTRY.items():
        lines.append(f"  {key} ({typ}, default {default!r}): {help_text}")
    return "\n".join(lines)


def make_model(cfg: dict) -> ModelParams:
    return ModelParams(
        alpha=cfg["model.alpha"],
        dim=cfg["model.dim"],
        p0=cfg["model.p0"],
        beta0=cfg["model.beta0"],
        pb=cfg["model.pb"],
        betab=cfg["model.betab"],
        zeta=cfg["model.zeta"],
        beta=cfg["model.beta"],
        horizon=cfg["model.horizon"],
    )


def make_kernel(cfg: dict) -> KernelSpec:
    return KernelSpec(
        variant=cfg["kernel.variant"],
        dim=cfg["model.dim"],
        gamma=cfg["kernel.gamma"],
        s=cfg["kernel.s"],
        cutoff_scale=cfg["kernel.M"],
        profile=cfg["kernel.profile"],
        betab=cfg["model.betab"],
        pb=cfg["model.pb"],
    )


def make_mollifier(cfg: dict) -> MollifierSpec:
    return MollifierSpec(
        alpha=cfg["model.alpha"],
        dim=cfg["model.dim"],
        zeta=cfg["mollifier.zeta"],
        quad_order=cfg["mollifier.quad_order"],
    )


def make_grid(cfg: dict) -> PhaseGrid:
    return PhaseGrid(
        n_x=cfg["grid.n_x"],
        n_v=cfg["grid.n_v"],
        box_x=cfg["grid.box_x"],
        box_v=cfg["grid.box_v"],
    )


def make_initial(cfg: dict) -> InitialLaw:
    return InitialLaw(
        variant=cfg["initial.variant"],
        dim=cfg["model.dim"],
        mean=cfg["initial.mean"],
        cov_diag=cfg["initial.cov_diag"],
        bounds=(cfg["initial.bounds_x"], cfg["initial.bounds_v"]),
    )


def make_sim(cfg: dict) -> SimConfig:
    return SimConfig(
        dt=cfg["sim.dt"],
        horizon=cfg["model.horizon"],
        snapshot_times=cfg["sim.snapshot_times"],
    )


def make_pde(cfg: dict) -> PdeConfig:
    return PdeConfig(
        dt=cfg["pde.dt"],
        dealias=cfg["pde.dealias"],
        picard_iters=cfg["pde.picard_iters"],
        eps_sing=cfg["pde.eps_sing"],
        window_frac=cfg["pde.window_frac"],
    )


def make_plan(cfg: dict, seed: int, mode: str | None = None):
    from .experiments import ExperimentPlan

    bandwidths = cfg["experiment.bandwidths"] or None
    return ExperimentPlan(
        mode=mode or cfg["experiment.mode"],
        n_values=cfg["experiment.n_values"],
        replicas=cfg["experiment.replicas"],
        model=make_model(cfg),
        kernel=make_kernel(cfg),
        mollifier=make_mollifier(cfg),
        initial=make_initial(cfg),
        times=cfg["sim.snapshot_times"],
        moment_order=cfg["experiment.moment_order"],
        grid=make_grid(cfg),
        pde=make_pde(cfg),
        sim_dt=cfg["sim.dt"],
        seed=seed,
        bandwidths=bandwidths,
        fixed_scale=cfg["experiment.fixed_scale"],
        leak_threshold=cfg["experiment.leak_threshold"],
        epsilon=cfg["model.epsilon"],
    )
