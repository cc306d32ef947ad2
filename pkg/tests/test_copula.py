"""Mixture-CDF evaluation/inversion and the conditional copula draw."""

import numpy as np
import pytest
from scipy import integrate, stats

from edpmediate.copula import (
    InversionError,
    MixtureCdf,
    SensitivitySpec,
    conditional_copula_draw,
    draw_rho,
    invert_mixture_cdf,
    mixture_cdf_eval,
)


def simple_mix(weights, means, variances, t_df=None, t_loc=0.0, t_scale=1.0):
    return MixtureCdf.from_components(weights, means, variances, t_df, t_loc, t_scale)


def test_single_normal_component_reduces_to_phi():
    mix = simple_mix([1.0], [2.0], [4.0])
    vs = np.linspace(-4, 8, 40)
    assert np.allclose(mix.eval(vs), stats.norm.cdf(vs, loc=2.0, scale=2.0), atol=1e-14)


def test_symmetric_two_component_midpoint():
    mix = simple_mix([0.5, 0.5], [-1.0, 1.0], [1.0, 1.0])
    assert mixture_cdf_eval(mix, 0.0) == pytest.approx(0.5, abs=1e-14)


def test_three_component_cdf_matches_quadrature():
    w = [0.5, 0.3, 0.2]
    mu = [-2.0, 0.5, 3.0]
    var = [0.5, 2.0, 1.0]
    mix = simple_mix(w, mu, var)

    def dens(x):
        return sum(wi * stats.norm.pdf(x, mi, np.sqrt(vi)) for wi, mi, vi in zip(w, mu, var))

    for v in (-3.0, -0.5, 1.2, 4.0):
        quad, _ = integrate.quad(dens, -np.inf, v)
        assert mix.eval(np.array([v]))[0] == pytest.approx(quad, abs=1e-8)


def test_cdf_with_t_component_matches_quadrature():
    with pytest.raises(ValueError):
        simple_mix([0.6, 0.3], [0.0], [1.0], t_df=4.0)

    mix = simple_mix([0.6, 0.4], [0.0], [1.0], t_df=4.0, t_loc=1.0, t_scale=2.0)

    def dens(x):
        return 0.6 * stats.norm.pdf(x) + 0.4 * stats.t.pdf(x, 4.0, loc=1.0, scale=2.0)

    for v in (-2.0, 0.3, 2.5):
        quad, _ = integrate.quad(dens, -np.inf, v)
        assert mix.eval(np.array([v]))[0] == pytest.approx(quad, abs=1e-8)


def test_cdf_monotone_on_random_grids():
    rng = np.random.default_rng(0)
    for _ in range(5):
        k = rng.integers(1, 5)
        w = rng.dirichlet(np.ones(k + 1))
        mix = simple_mix(
            w, rng.normal(0, 3, k), rng.uniform(0.2, 3.0, k), t_df=4.0,
            t_loc=rng.normal(), t_scale=rng.uniform(0.5, 2.0),
        )
        grid = np.sort(rng.normal(0, 6, 200))
        vals = mix.eval(grid)
        assert np.all(np.diff(vals) >= -1e-15)


def test_inversion_simple_cases():
    mix = simple_mix([1.0], [0.0], [1.0])
    assert invert_mixture_cdf(mix, 0.5, 1e-10) == pytest.approx(0.0, abs=1e-8)
    assert invert_mixture_cdf(mix, 0.975, 1e-12) == pytest.approx(1.959963985, abs=1e-6)


def test_inversion_roundtrip_on_random_mixture():
    rng = np.random.default_rng(7)
    w = rng.dirichlet(np.ones(4))
    mix = simple_mix(w, [-3.0, -0.5, 1.0, 4.0], [0.3, 1.0, 2.0, 0.5])
    v = rng.normal(0, 3, size=100)
    u = mix.eval(v) if mix.batch > 1 else np.array([mix.eval(np.array([x]))[0] for x in v])
    u = np.clip(u, 1e-12, 1 - 1e-12)
    back = mix.invert(u, eps_tol=1e-10)
    assert np.max(np.abs(back - v)) < 1e-6
    assert mix.last_eval_count <= 200


def test_inversion_eval_budget_and_errors():
    mix = simple_mix([0.5, 0.5], [-50.0, 50.0], [0.01, 0.01])
    out = mix.invert(np.array([0.25, 0.75]), eps_tol=1e-8)
    assert mix.last_eval_count <= 200
    assert out[0] < 0 < out[1]
    with pytest.raises(ValueError):
        mix.invert(np.array([0.0]), 1e-8)
    with pytest.raises(ValueError):
        mix.invert(np.array([1.0]), 1e-8)


def test_batched_rows_match_scalar_path():
    w = np.array([[0.2, 0.8], [0.7, 0.3]])
    means = np.array([[-1.0, 2.0], [0.5, 1.0]])
    sds = np.array([1.0, 0.5])
    mix = MixtureCdf(weights=w, means=means, sds=sds)
    vals = mix.eval(np.array([0.3, -0.2]))
    for b in range(2):
        single = MixtureCdf(weights=w[b : b + 1], means=means[b : b + 1], sds=sds)
        assert vals[b] == pytest.approx(single.eval(np.array([[0.3, -0.2][b]]))[0], abs=1e-14)


def test_conditional_draw_rho_zero_is_counterfactual_marginal():
    rng = np.random.default_rng(21)
    n = 100_000
    same = simple_mix([1.0], [0.0], [1.0])
    counter = simple_mix([0.4, 0.6], [-1.0, 2.0], [0.5, 1.0])

    def tile(mix, n):
        return MixtureCdf(
            weights=np.repeat(mix.weights, n, axis=0),
            means=np.repeat(mix.means, n, axis=0),
            sds=mix.sds,
        )

    v_obs = rng.standard_normal(n)
    draws = conditional_copula_draw(v_obs, tile(same, n), tile(counter, n), 0.0, rng)
    ks = stats.kstest(draws, lambda x: counter.eval(np.asarray(x))).statistic
    assert ks < 0.01


def test_conditional_draw_comonotone_limit():
    rng = np.random.default_rng(5)
    n = 20_000
    std = simple_mix([1.0], [0.0], [1.0])

    def tile(mix, n):
        return MixtureCdf(
            weights=np.repeat(mix.weights, n, axis=0),
            means=np.repeat(mix.means, n, axis=0),
            sds=mix.sds,
        )

    v_obs = np.clip(rng.standard_normal(n), -2, 2)
    # at rho the copula residual sd is sqrt(1-rho^2), so P(|v'-v| < 0.1) is
    # about Phi(0.1/sd): ~0.974 at rho=0.999 and ~0.998 at rho=0.9995
    draws = conditional_copula_draw(v_obs, tile(std, n), tile(std, n), 0.999, rng, eps_tol=1e-10)
    assert (np.abs(draws - v_obs) < 0.1).mean() > 0.97
    draws2 = conditional_copula_draw(v_obs, tile(std, n), tile(std, n), 0.9995, rng, eps_tol=1e-10)
    assert (np.abs(draws2 - v_obs) < 0.1).mean() > 0.99


def test_conditional_draw_gaussian_case_moments():
    # standard normal margins + Gaussian copula = bivariate normal:
    # v' | v=1, rho=0.5 ~ N(0.5, 0.75)
    rng = np.random.default_rng(11)
    n = 1_000_000
    std = simple_mix([1.0], [0.0], [1.0])

    def tile(mix, n):
        return MixtureCdf(
            weights=np.repeat(mix.weights, n, axis=0),
            means=np.repeat(mix.means, n, axis=0),
            sds=mix.sds,
        )

    draws = conditional_copula_draw(np.ones(n), tile(std, n), tile(std, n), 0.5, rng, eps_tol=1e-9)
    se_mean = draws.std() / np.sqrt(n)
    assert abs(draws.mean() - 0.5) < 3 * se_mean
    var_se = draws.var() * np.sqrt(2.0 / n)
    assert abs(draws.var() - 0.75) < 3 * var_se + 1e-4


def test_conditional_draw_rho_reflection_symmetry():
    # symmetric margins: draws at rho and -rho are reflections through 0
    rng1 = np.random.default_rng(3)
    rng2 = np.random.default_rng(3)
    n = 50_000
    sym = simple_mix([0.5, 0.5], [-1.5, 1.5], [0.7, 0.7])

    def tile(mix, n):
        return MixtureCdf(
            weights=np.repeat(mix.weights, n, axis=0),
            means=np.repeat(mix.means, n, axis=0),
            sds=mix.sds,
        )

    v_obs = np.full(n, 0.8)
    a = conditional_copula_draw(v_obs, tile(sym, n), tile(sym, n), 0.6, rng1)
    b = conditional_copula_draw(v_obs, tile(sym, n), tile(sym, n), -0.6, rng2)
    ks = stats.kstest(a, -b).statistic
    assert ks < 0.015


def test_sample_matches_cdf():
    rng = np.random.default_rng(9)
    mix = simple_mix(
        [0.45, 0.25, 0.2, 0.1], [-2.0, 0.0, 2.0], [0.5, 1.0, 0.25],
        t_df=6.0, t_loc=0.0, t_scale=1.5,
    )
    n = 100_000
    tiled = MixtureCdf(
        weights=np.repeat(mix.weights, n, axis=0),
        means=np.repeat(mix.means, n, axis=0),
        sds=mix.sds,
        t_df=6.0,
        t_loc=np.zeros(n),
        t_scale=np.full(n, 1.5),
    )
    draws = tiled.sample(rng)
    ks = stats.kstest(draws, lambda x: mix.eval(np.asarray(x))).statistic
    assert ks < 0.01


def test_draw_rho_kinds():
    rng = np.random.default_rng(0)
    assert draw_rho(SensitivitySpec("fixed", value=0.0), rng) == 0.0
    u = draw_rho(SensitivitySpec("uniform", lo=-1.0, hi=0.0), rng, size=100_000)
    assert abs(u.mean() + 0.5) < 3 * u.std() / np.sqrt(u.size)
    assert u.min() >= -1.0 and u.max() <= 0.0
    t = draw_rho(SensitivitySpec("triangular", a=0.0, c=1.0, b=1.0), rng, size=100_000)
    assert abs(t.mean() - 2.0 / 3.0) < 3 * t.std() / np.sqrt(t.size)
    with pytest.raises(ValueError):
        SensitivitySpec("fixed", value=1.0)
    with pytest.raises(ValueError):
        SensitivitySpec("uniform", lo=0.5, hi=0.5)
    with pytest.raises(ValueError):
        SensitivitySpec("triangular", a=1.0, c=0.0, b=0.5)
    with pytest.raises(ValueError):
        SensitivitySpec("beta")


def test_rho_bounds_enforced_in_conditional_draw():
    std = simple_mix([1.0], [0.0], [1.0])
    with pytest.raises(ValueError):
        conditional_copula_draw(np.zeros(1), std, std, 1.0, np.random.default_rng(0))
