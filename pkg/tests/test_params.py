"""Rate-calculus unit tests: closed-form identities, admissibility checks,
monotonicity, and the boundary behaviour of the Riesz exponent."""

import math

import pytest

from kinchaos.params import (
    INF,
    ModelParams,
    ParameterError,
    a_index,
    aniso_dim_over,
    beta_upper_bound,
    conjugate,
    derive_rates,
    gap,
    m_exponent,
    rate_at_zeta,
    riesz_besov_index,
    riesz_rate,
    theta_exponent,
    validate_hypothesis,
)
from kinchaos.kernels import KernelSpec


def preset(**kw) -> ModelParams:
    base = dict(
        alpha=2.0, dim=1, p0=(1.0, 1.0), beta0=-0.01, pb=(INF, INF),
        betab=-0.01, zeta=0.169, beta=0.9, horizon=0.25,
    )
    base.update(kw)
    return ModelParams(**base)


def test_gap_reduces_to_regularities_for_conjugate_pairs():
    # p0 = (1,1), pb = (inf,inf): the integrability terms cancel exactly
    for alpha, d in [(2.0, 1), (1.5, 2), (1.3, 3)]:
        lam = gap(alpha, d, (1.0, 1.0), -0.3, (INF, INF), -0.2)
        assert lam == pytest.approx(0.3 + 0.2, abs=1e-14)


def test_m_exponent_values():
    assert m_exponent(2.0, (1.0, 1.0)) == pytest.approx(0.5, abs=1e-15)
    assert m_exponent(1.5, (1.6, 1.6)) == pytest.approx(0.625, abs=1e-15)
    assert m_exponent(2.0, (3.0, 3.0)) == pytest.approx(0.5, abs=1e-15)
    assert m_exponent(1.5, (4.0, 4.0)) == pytest.approx(0.5, abs=1e-15)


def test_theta_exponent_default_preset_is_2d():
    for d in (1, 2, 3):
        theta = theta_exponent(2.0, d, (1.0, 1.0), (INF, INF), 0.0)
        assert theta == pytest.approx(2.0 * d, abs=1e-14)


def test_derive_rates_default_preset_closed_form():
    rates = derive_rates(preset(), epsilon=0.01)
    assert rates.m_alpha == pytest.approx(0.5, abs=1e-12)
    assert rates.theta_alpha == pytest.approx(2.0, abs=1e-12)
    assert rates.zeta_star == pytest.approx((1 - 0.5 - 0.01) / (2.0 + 0.9), abs=1e-12)
    assert rates.rate_exponent == pytest.approx(0.9 * rates.zeta_star, abs=1e-12)


def test_rate_balance_identity_at_zeta_star():
    # At the balanced zeta the two error branches agree to rounding.
    for beta in (0.3, 0.5, 0.9):
        params = preset(beta=beta)
        rates = derive_rates(params, epsilon=0.01)
        left = beta * rates.zeta_star
        right = 1.0 - rates.m_alpha - rates.zeta_star * rates.theta_alpha - 0.01
        assert left == pytest.approx(right, abs=1e-12)
        assert rate_at_zeta(params, rates, rates.zeta_star) == pytest.approx(
            left, abs=1e-12
        )


def test_rate_limit_one_over_4d_plus_2():
    # beta -> beta_max = 1 - gap, epsilon -> 0, gap -> 0 gives 1/(4d+2).
    for d in (1, 2, 3):
        params = ModelParams(
            alpha=2.0, dim=d, p0=(1.0, 1.0), beta0=-1e-7, pb=(INF, INF),
            betab=-1e-7, zeta=0.2, beta=1.0 - 3e-7, horizon=0.25,
        )
        rates = derive_rates(params, epsilon=1e-9)
        assert rates.rate_exponent == pytest.approx(1.0 / (4 * d + 2), abs=1e-5)


def test_beta_above_bound_rejected():
    with pytest.raises(ParameterError, match="beta"):
        derive_rates(preset(beta=0.99))


def test_beta_upper_bound_ordering():
    # alpha = 2: bound is 1 - gap; alpha < 2: the min of two branches.
    assert beta_upper_bound(2.0, -0.3, 0.4) == pytest.approx(0.6)
    b = beta_upper_bound(1.5, -0.3, 0.1)
    assert b == pytest.approx(min(0.4, (1.5 - 0.3 - 0.1) / 2.0))
    # tightening the gap can only lower the bound
    for alpha in (1.5, 2.0):
        bounds = [beta_upper_bound(alpha, -0.3, lam) for lam in (0.05, 0.2, 0.4)]
        assert bounds == sorted(bounds, reverse=True)


def test_gap_outside_range_rejected():
    with pytest.raises(ParameterError, match="gap"):
        derive_rates(preset(beta0=-0.6, betab=-0.6))  # gap = 1.2 > alpha-1
    with pytest.raises(ParameterError, match="gap"):
        derive_rates(preset(alpha=1.5, p0=(1.6, 1.6), beta0=-0.9, betab=0.0,
                            pb=(INF, INF), beta=0.05))


def test_p0_regime_dichotomy():
    # alpha = 1.5 with p0 = (1,1) is outside the covered regime
    with pytest.raises(ParameterError, match="p0"):
        derive_rates(preset(alpha=1.5, beta=0.1))
    # p0 > alpha componentwise is fine for alpha < 2 (gap needs rough data)
    rates = derive_rates(
        preset(alpha=1.5, p0=(1.6, 1.6), beta0=-0.8, betab=-0.6, beta=0.1)
    )
    assert rates.m_alpha == pytest.approx(0.625, abs=1e-12)


def test_gap_monotone_in_regularities():
    lams = [gap(2.0, 1, (1.0, 1.0), b0, (INF, INF), -0.1) for b0 in
            (-0.05, -0.2, -0.5)]
    assert lams == sorted(lams)  # rougher initial data -> larger gap


def test_conjugate_exactness():
    assert conjugate((1.0, INF)) == (INF, 1.0)
    assert conjugate((2.0, 4.0)) == (2.0, pytest.approx(4.0 / 3.0))
    p = (1.7, 3.2)
    q = conjugate(p)
    assert 1.0 / p[0] + 1.0 / q[0] == pytest.approx(1.0, abs=1e-15)


def test_a_index_antisymmetry_and_zero():
    assert a_index(2.0, 1, (2.0, 2.0), (2.0, 2.0)) == 0.0
    assert a_index(1.5, 2, (1.0, 1.0), (2.0, 2.0)) == pytest.approx(
        -a_index(1.5, 2, (2.0, 2.0), (1.0, 1.0))
    )


def test_aniso_dim_over_inf_is_zero():
    assert aniso_dim_over(2.0, 3, (INF, INF)) == 0.0


def test_riesz_rate_closed_form_value():
    assert riesz_rate(2.0, 3, 2.0) == pytest.approx(1.0 / 17.0, abs=1e-12)


def test_riesz_rate_monotone_in_singularity():
    # the closed form is increasing in s on the admissible interval
    vals = [riesz_rate(2.0, 3, s) for s in (1.2, 1.6, 2.0, 2.4)]
    assert vals == sorted(vals)
    # and decreasing in dimension at fixed s
    dims = [riesz_rate(2.0, d, 1.5) for d in (2, 3, 4)]
    assert dims == sorted(dims, reverse=True)


def test_riesz_rate_boundaries_rejected():
    with pytest.raises(ParameterError):
        riesz_rate(2.0, 3, 1.0)
    with pytest.raises(ParameterError):
        riesz_rate(2.0, 3, 2.5)  # s_hi = min(3, 3/2+1) = 2.5
    with pytest.raises(ParameterError):
        riesz_rate(1.0, 3, 1.5)


def test_riesz_besov_index_boundary_gap_zero():
    # alpha=2, d=3, s=2, p_xb=inf: betab = 3(s-d+... ) gives gap exactly 0,
    # which the validator must flag as failing the positivity check.
    betab = riesz_besov_index(2.0, 3, 2.0, INF)
    assert betab == pytest.approx(-6.0)
    # smooth initial data (p0 = (inf, inf)) pushes the effective gap below 0
    params = ModelParams(
        alpha=2.0, dim=3, p0=(INF, INF), beta0=-1e-9, pb=(INF, INF),
        betab=0.0, zeta=0.2, beta=0.1, horizon=0.25,
    )
    kernel = KernelSpec(variant="riesz_cutoff", dim=3, gamma=1.0, s=2.0)
    report = validate_hypothesis(params, kernel)
    assert report.regime == "kinetic-riesz"
    assert not report.satisfied
    assert "gap_positive" in report.failed_names()
    # rough initial data (p0 = (1, 1)) overshoots the upper gap bound instead
    rough = ModelParams(
        alpha=2.0, dim=3, p0=(1.0, 1.0), beta0=-1e-9, pb=(INF, INF),
        betab=0.0, zeta=0.2, beta=0.1, horizon=0.25,
    )
    report2 = validate_hypothesis(rough, kernel)
    assert not report2.satisfied
    assert "gap_below_alpha_minus_1" in report2.failed_names()


def test_validate_hypothesis_default_preset_satisfied():
    report = validate_hypothesis(preset(), KernelSpec("smooth_bounded", 1))
    assert report.regime == "kinetic"
    assert report.satisfied
    assert report.effective["gap"] == pytest.approx(0.02, abs=1e-14)


def test_validate_hypothesis_velocity_only_regime():
    params = preset(p0=(1.0, 4.0), pb=(INF, 1.0), beta0=-0.05, betab=-0.05)
    report = validate_hypothesis(params, KernelSpec("velocity_only", 1))
    assert report.regime == "nondegenerate"
    # scalar gap: d/p_v0 + d/p_vb - d - beta0 - betab
    assert report.effective["gap"] == pytest.approx(0.25 + 1.0 - 1.0 + 0.1, abs=1e-14)
    assert report.satisfied
    names = [c.name for c in report.checks]
    assert "p0_above_alpha" in names


def test_validate_never_raises_on_bad_combination():
    params = preset(alpha=1.5, beta=0.1)  # alpha=1.5 with p0=(1,1): not covered
    report = validate_hypothesis(params, KernelSpec("smooth_bounded", 1))
    assert not report.satisfied
    assert "p0_regime" in report.failed_names()


def test_model_params_validation_errors():
    for kw in (
        dict(alpha=1.0), dict(alpha=2.5), dict(beta0=0.0), dict(beta0=-1.0),
        dict(betab=0.5), dict(zeta=0.0), dict(zeta=1.5), dict(beta=-0.1),
        dict(horizon=0.0), dict(p0=(0.5, 1.0)),
    ):
        with pytest.raises(ParameterError):
            preset(**kw)


def test_rate_at_zeta_piecewise():
    params = preset()
    rates = derive_rates(params)
    small = rate_at_zeta(params, rates, 0.05)
    assert small == pytest.approx(0.9 * 0.05, abs=1e-14)  # beta branch active
    large = rate_at_zeta(params, rates, 0.24)
    assert large == pytest.approx(1 - 0.5 - 0.24 * 2 - 0.01, abs=1e-14)


def test_aniso_vector():
    assert preset().aniso == (3.0, 1.0)
    assert preset(alpha=1.5, p0=(1.6, 1.6), beta=0.1).aniso == (2.5, 1.0)


def test_m_theta_independent_of_epsilon():
    r1 = derive_rates(preset(), epsilon=0.01)
    r2 = derive_rates(preset(), epsilon=0.05)
    assert r1.m_alpha == r2.m_alpha and r1.theta_alpha == r2.theta_alpha
    assert r2.zeta_star < r1.zeta_star  # more slack, smaller balanced zeta


def test_gap_infinite_p_is_finite():
    assert math.isfinite(gap(2.0, 1, (1.0, 1.0), -0.1, (INF, INF), 0.0))
