"""Model parameters, admissibility checks, and closed-form rate exponents.

All exponent arithmetic is exact in the integrability indices: an infinite
index is represented by ``math.inf`` so that ``1/inf == 0.0`` holds exactly
in IEEE arithmetic (no large-float surrogates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

INF = math.inf

Pair = tuple[float, float]


class ParameterError(ValueError):
    """Raised when a parameter tuple violates an admissibility condition."""


def _check_pair(p: Pair, name: str) -> None:
    for comp in p:
        if not (1.0 <= comp <= INF):
            raise ParameterError(f"{name} components must lie in [1, inf], got {p}")


@dataclass(frozen=True)
class ModelParams:
    """Parameter tuple of the kinetic model and its error calculus.

    alpha   -- stability index of the driving noise, in (1, 2]
    dim     -- spatial dimension d (phase space is 2d-dimensional)
    p0      -- integrability pair (p_x, p_v) of the initial density
    beta0   -- regularity index of the initial density, in (-1, 0)
    pb      -- integrability pair of the interaction kernel
    betab   -- regularity index of the kernel, <= 0
    zeta    -- mollification order, in (0, 1]
    beta    -- smoothness index of the error norm, >= 0
    horizon -- final time T of the experiments (user-chosen; the theory's
               horizon is non-constructive, so T is config, not derived)
    """

    alpha: float
    dim: int
    p0: Pair
    beta0: float
    pb: Pair
    betab: float
    zeta: float = 0.2
    beta: float = 0.5
    horizon: float = 0.5

    def __post_init__(self):
        if not (1.0 < self.alpha <= 2.0):
            raise ParameterError(f"alpha must be in (1, 2], got {self.alpha}")
        if self.dim < 1 or self.dim != int(self.dim):
            raise ParameterError(f"dim must be a positive integer, got {self.dim}")
        if not (-1.0 < self.beta0 < 0.0):
            raise ParameterError(f"beta0 must be in (-1, 0), got {self.beta0}")
        if self.betab > 0.0:
            raise ParameterError(f"betab must be <= 0, got {self.betab}")
        if not (0.0 < self.zeta <= 1.0):
            raise ParameterError(f"zeta must be in (0, 1], got {self.zeta}")
        if self.beta < 0.0:
            raise ParameterError(f"beta must be >= 0, got {self.beta}")
        if self.horizon <= 0.0:
            raise ParameterError(f"horizon must be > 0, got {self.horizon}")
        _check_pair(self.p0, "p0")
        _check_pair(self.pb, "pb")

    @property
    def aniso(self) -> Pair:
        """Scaling vector (1 + alpha, 1) of the kinetic dynamics."""
        return (1.0 + self.alpha, 1.0)


def aniso_dim_over(alpha: float, dim: int, p: Pair) -> float:
    """The anisotropic dimension count a . d/p = (1+alpha)d/p_x + d/p_v."""
    return (1.0 + alpha) * dim / p[0] + dim / p[1]


def a_index(alpha: float, dim: int, p: Pair, q: Pair) -> float:
    """Integrability cost A_{p,q} = a . (d/p - d/q) of passing from L^p to L^q."""
    return aniso_dim_over(alpha, dim, p) - aniso_dim_over(alpha, dim, q)


def gap(alpha: float, dim: int, p0: Pair, beta0: float, pb: Pair, betab: float) -> float:
    """The admissibility gap: a.d/p0 - beta0 + a.d/pb - betab - (2+alpha)d."""
    return (
        aniso_dim_over(alpha, dim, p0)
        - beta0
        + aniso_dim_over(alpha, dim, pb)
        - betab
        - (2.0 + alpha) * dim
    )


def conjugate(p: Pair) -> Pair:
    """Componentwise Hoelder conjugate, with 1' = inf and inf' = 1 exact."""

    def conj(x: float) -> float:
        if x == 1.0:
            return INF
        if x == INF:
            return 1.0
        return x / (x - 1.0)

    return (conj(p[0]), conj(p[1]))


@dataclass(frozen=True)
class DerivedRates:
    """Closed-form exponents derived from a ModelParams tuple."""

    gap: float
    m_alpha: float
    theta_alpha: float
    beta_max: float
    zeta_star: float
    rate_exponent: float
    epsilon: float


def m_exponent(alpha: float, p0: Pair) -> float:
    """Limit-theorem exponent 1 / ((p_x0 ^ p_v0 ^ 2) v alpha)."""
    return 1.0 / max(min(p0[0], p0[1], 2.0), alpha)


def theta_exponent(alpha: float, dim: int, p0: Pair, pb: Pair, betab: float) -> float:
    """Norm-cost exponent: max of the sampling and the kernel contributions."""
    one = (1.0, 1.0)
    p0_or_alpha = (max(p0[0], alpha), max(p0[1], alpha))
    sampling = a_index(alpha, dim, one, p0_or_alpha)
    kernel = aniso_dim_over(alpha, dim, pb) - (1.0 + alpha) * betab
    return max(sampling, kernel)


def beta_upper_bound(alpha: float, beta0: float, lam: float) -> float:
    """Largest admissible error-norm smoothness for the given gap."""
    if alpha == 2.0:
        return 1.0 - lam
    return min(alpha - 1.0 - lam, (alpha + beta0 - lam) / 2.0)


def _check_p0_regime(alpha: float, p0: Pair) -> bool:
    return (p0[0] > alpha and p0[1] > alpha) or (alpha == 2.0 and p0 == (1.0, 1.0))


def derive_rates(params: ModelParams, epsilon: float = 0.01) -> DerivedRates:
    """Compute every closed-form exponent of the convergence-rate calculus.

    Raises ParameterError when the gap falls outside (0, alpha-1), when beta
    exceeds its admissible bound, or when the integrability regime is not
    covered (needs p0 > alpha componentwise, or alpha = 2 with p0 = (1,1)).
    """
    if epsilon <= 0.0:
        raise ParameterError("epsilon must be positive")
    a, d = params.alpha, params.dim
    lam = gap(a, d, params.p0, params.beta0, params.pb, params.betab)
    if not (0.0 < lam < a - 1.0):
        raise ParameterError(f"gap {lam:.6g} outside the admissible range (0, {a - 1:.6g})")
    if not _check_p0_regime(a, params.p0):
        raise ParameterError(
            f"p0={params.p0} not admissible: need p0 > ({a},{a}) componentwise "
            f"or (alpha, p0) = (2, (1,1))"
        )
    m = m_exponent(a, params.p0)
    theta = theta_exponent(a, d, params.p0, params.pb, params.betab)
    bmax = beta_upper_bound(a, params.beta0, lam)
    if params.beta >= bmax:
        raise ParameterError(f"beta={params.beta} must be < beta_max={bmax:.6g}")
    zeta_star = (1.0 - m - epsilon) / (theta + params.beta)
    rate = params.beta * (1.0 - m - epsilon) / (theta + params.beta)
    return DerivedRates(
        gap=lam,
        m_alpha=m,
        theta_alpha=theta,
        beta_max=bmax,
        zeta_star=zeta_star,
        rate_exponent=rate,
        epsilon=epsilon,
    )


def rate_at_zeta(params: ModelParams, rates: DerivedRates, zeta: float) -> float:
    """Theoretical decay exponent min(beta*zeta, 1 - m - zeta*theta - eps) at a
    mollification order possibly different from the balanced one."""
    return min(
        params.beta * zeta,
        1.0 - rates.m_alpha - zeta * rates.theta_alpha - rates.epsilon,
    )


def riesz_rate(alpha: float, dim: int, s: float) -> float:
    """Optimal decay exponent for the velocity-cutoff Riesz interaction.

    Admissible singularity range: s in (1, d ^ (d/alpha + 1)).
    """
    if not (1.0 < alpha <= 2.0):
        raise ParameterError(f"alpha must be in (1, 2], got {alpha}")
    s_hi = min(dim, dim / alpha + 1.0)
    if not (1.0 < s < s_hi):
        raise ParameterError(f"s={s} outside the admissible range (1, {s_hi:.6g})")
    denom = (alpha - 1.0) + (alpha - 1.0) * dim / alpha + (alpha + 1.0) * (dim - s + 1.0)
    return ((alpha - 1.0) / denom) * (1.0 - 1.0 / alpha)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    required: str


@dataclass(frozen=True)
class HypothesisReport:
    satisfied: bool
    checks: tuple[Check, ...]
    regime: str  # kinetic | kinetic-riesz | nondegenerate
    effective: dict = field(default_factory=dict)

    def failed_names(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]


def riesz_besov_index(alpha: float, dim: int, s: float, px_b: float) -> float:
    """Negative regularity of the Riesz force in the anisotropic scale:
    (alpha+1)(d/p_xb - d + s - 1), valid for p_xb > d/(d-s+1)."""
    return (alpha + 1.0) * (dim / px_b - dim + s - 1.0)


def validate_hypothesis(params: ModelParams, kernel=None) -> HypothesisReport:
    """Formula-level validation of the well-posedness hypotheses.

    Never raises on a failed condition; each condition becomes a report
    entry. For Riesz kernels (betab, pb) are auto-filled from the kernel's
    singularity exponent and the configured p_xb. Velocity-only kernels are
    checked against the reduced non-degenerate conditions instead.
    """
    a, d = params.alpha, params.dim
    checks: list[Check] = []
    effective: dict = {}

    variant = getattr(kernel, "variant", None)
    if variant == "velocity_only":
        # x becomes auxiliary: scalar indices p0 = p_v0, pb = p_vb.
        p0, pb = params.p0[1], params.pb[1]
        lam = d / p0 + d / pb - d - params.beta0 - params.betab
        effective["gap"] = lam
        checks.append(Check("gap_positive", lam > 0.0, lam, "> 0"))
        checks.append(Check("gap_below_alpha_minus_1", lam < a - 1.0, lam, f"< {a - 1}"))
        checks.append(
            Check("duality", 1.0 / p0 + 1.0 / pb >= 1.0, 1.0 / p0 + 1.0 / pb, ">= 1")
        )
        checks.append(Check("p0_above_alpha", p0 > a, p0, f"> {a}"))
        return HypothesisReport(
            satisfied=all(c.passed for c in checks),
            checks=tuple(checks),
            regime="nondegenerate",
            effective=effective,
        )

    if variant == "riesz_cutoff":
        s = kernel.s
        px_b = params.pb[0]
        betab = riesz_besov_index(a, d, s, px_b)
        pb = params.pb
        effective["betab"] = betab
        px_lo = d / (d - s + 1.0) if d - s + 1.0 > 0 else INF
        checks.append(Check("pxb_above_riesz_floor", px_b > px_lo, px_b, f"> {px_lo:.6g}"))
        s_hi = min(d, d / a + 1.0)
        checks.append(Check("singularity_range", 1.0 < s < s_hi, s, f"in (1, {s_hi:.6g})"))
        regime = "kinetic-riesz"
    else:
        betab = params.betab
        pb = params.pb
        regime = "kinetic"

    lam = gap(a, d, params.p0, params.beta0, pb, betab)
    effective["gap"] = lam
    checks.append(Check("gap_positive", lam > 0.0, lam, "> 0"))
    checks.append(Check("gap_below_alpha_minus_1", lam < a - 1.0, lam, f"< {a - 1}"))
    dual_x = 1.0 / params.p0[0] + 1.0 / pb[0]
    dual_v = 1.0 / params.p0[1] + 1.0 / pb[1]
    checks.append(Check("duality_x", dual_x >= 1.0, dual_x, ">= 1"))
    checks.append(Check("duality_v", dual_v >= 1.0, dual_v, ">= 1"))
    dichotomy = _check_p0_regime(a, params.p0)
    checks.append(
        Check("p0_regime", dichotomy, params.p0[0], f"p0 > {a} or (alpha,p0)=(2,(1,1))")
    )
    return HypothesisReport(
        satisfied=all(c.passed for c in checks),
        checks=tuple(checks),
        regime=regime,
        effective=effective,
    )
