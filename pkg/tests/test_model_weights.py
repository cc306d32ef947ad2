"""Mixture-weight families vs independent transcriptions, plus local likelihoods."""

import numpy as np
import pytest
from scipy import integrate
from scipy.special import logsumexp

from edpmediate.data import ObservedRecord
from edpmediate.model import (
    XClusterParams,
    YClusterParams,
    expected_y,
    joint_loglik,
    lambda_v_weights,
    lambda_y_weights,
    loglik_m,
    loglik_v,
    loglik_x,
    loglik_y,
    mediator_mixture_weights,
    partition_log_prior,
)
from helpers_states import (
    make_draw,
    oracle_lambda_v,
    oracle_lambda_y,
    oracle_mediator,
    two_cluster_draw,
)

POINT = dict(m=0.4, v=-0.3, z=1, c=np.array([1.0, 0.2]))


def test_lambda_y_matches_oracle():
    draw = two_cluster_draw()
    lw, norm = lambda_y_weights(POINT["m"], POINT["v"], POINT["z"], POINT["c"], draw)
    oracle = oracle_lambda_y(draw, POINT["m"], POINT["v"], POINT["z"], POINT["c"])
    assert lw.shape == (3,)
    assert np.allclose(np.exp(lw), oracle, rtol=1e-10)
    assert norm == pytest.approx(np.log(oracle.sum()), rel=1e-10)


def test_lambda_v_matches_oracle():
    draw = two_cluster_draw()
    lw, _ = lambda_v_weights(POINT["z"], POINT["c"], draw)
    oracle = oracle_lambda_v(draw, POINT["z"], POINT["c"])
    assert lw.shape == (4,)
    assert np.allclose(np.exp(lw), oracle, rtol=1e-10)


def test_mediator_weights_match_oracle():
    draw = two_cluster_draw()
    lw, _ = mediator_mixture_weights(POINT["v"], POINT["z"], POINT["c"], draw)
    oracle = oracle_mediator(draw, POINT["v"], POINT["z"], POINT["c"])
    assert np.allclose(np.exp(lw), oracle, rtol=1e-10)


def test_no_v_variant_matches_oracle():
    draw = two_cluster_draw(include_v=False)
    lw, _ = lambda_y_weights(POINT["m"], None, POINT["z"], POINT["c"], draw)
    oracle = oracle_lambda_y(draw, POINT["m"], None, POINT["z"], POINT["c"])
    assert np.allclose(np.exp(lw), oracle, rtol=1e-10)
    lw_m, _ = mediator_mixture_weights(None, POINT["z"], POINT["c"], draw)
    assert np.allclose(np.exp(lw_m), oracle_mediator(draw, None, POINT["z"], POINT["c"]), rtol=1e-10)


def test_weights_normalize_to_one():
    draw = two_cluster_draw()
    for lw, norm in (
        lambda_y_weights(POINT["m"], POINT["v"], POINT["z"], POINT["c"], draw),
        lambda_v_weights(POINT["z"], POINT["c"], draw),
        mediator_mixture_weights(POINT["v"], POINT["z"], POINT["c"], draw),
    ):
        assert np.exp(lw - norm).sum() == pytest.approx(1.0, abs=1e-12)


def test_vanishing_concentration_pins_single_cluster():
    draw = two_cluster_draw(alpha_theta=1e-12, alpha_omega=1e-12)
    one = make_draw(
        n_rl=[6],
        owner=[0],
        beta_y=draw.beta_y[:1],
        sig2_y=draw.sig2_y[:1],
        beta_m=draw.beta_m[:1],
        sig2_m=draw.sig2_m[:1],
        beta_v=draw.beta_v[:1],
        sig2_v=draw.sig2_v[:1],
        pi=draw.pi[:1],
        mu=draw.mu[:1],
        tau2=draw.tau2[:1],
        c_binary=(True, False),
        alpha_theta=1e-14,
        alpha_omega=1e-14,
    )
    lw, norm = lambda_y_weights(POINT["m"], POINT["v"], POINT["z"], POINT["c"], one)
    probs = np.exp(lw - norm)
    assert probs[0] == pytest.approx(1.0, abs=1e-10)
    lw_v, norm_v = lambda_v_weights(POINT["z"], POINT["c"], one)
    assert np.exp(lw_v - norm_v)[0] == pytest.approx(1.0, abs=1e-10)


def test_empty_state_puts_all_mass_on_new_component():
    draw = make_draw(
        n_rl=np.zeros(0, dtype=int),
        owner=np.zeros(0, dtype=int),
        beta_y=np.zeros((0, 6)),
        sig2_y=np.zeros(0),
        beta_m=np.zeros((0, 5)),
        sig2_m=np.zeros(0),
        beta_v=np.zeros((0, 4)),
        sig2_v=np.zeros(0),
        pi=np.zeros((0, 2)),
        mu=np.zeros((0, 1)),
        tau2=np.zeros((0, 1)),
        c_binary=(True, False),
    )
    lw, norm = lambda_y_weights(POINT["m"], POINT["v"], POINT["z"], POINT["c"], draw)
    assert lw.shape == (1,)
    assert np.exp(lw - norm)[0] == pytest.approx(1.0, abs=1e-14)
    # and the conditional mean falls back to the base-measure regression mean
    assert expected_y(POINT["m"], POINT["v"], POINT["z"], POINT["c"], draw) == pytest.approx(0.0)


def test_subcluster_label_permutation_invariance():
    draw = two_cluster_draw()
    perm = [1, 0, 2]
    permuted = make_draw(
        n_rl=draw.n_rl[perm],
        owner=draw.owner[perm],
        beta_y=draw.beta_y,
        sig2_y=draw.sig2_y,
        beta_m=draw.beta_m,
        sig2_m=draw.sig2_m,
        beta_v=draw.beta_v[perm],
        sig2_v=draw.sig2_v[perm],
        pi=draw.pi[perm],
        mu=draw.mu[perm],
        tau2=draw.tau2[perm],
        c_binary=(True, False),
        alpha_theta=draw.alpha_theta,
        alpha_omega=draw.alpha_omega,
    )
    lw, _ = lambda_v_weights(POINT["z"], POINT["c"], draw)
    lw_p, _ = lambda_v_weights(POINT["z"], POINT["c"], permuted)
    assert np.allclose(sorted(lw[:-1]), sorted(lw_p[:-1]), rtol=1e-12)
    assert lw[-1] == pytest.approx(lw_p[-1], rel=1e-12)
    ly, _ = lambda_y_weights(POINT["m"], POINT["v"], POINT["z"], POINT["c"], draw)
    ly_p, _ = lambda_y_weights(POINT["m"], POINT["v"], POINT["z"], POINT["c"], permuted)
    assert np.allclose(ly, ly_p, rtol=1e-12)


def test_lambda_y_v_integral_matches_quadrature():
    # alpha_omega -> 0 makes the subcluster bracket purely Gaussian, so the
    # v-integral of the cluster weight has a closed form
    draw = two_cluster_draw(alpha_omega=1e-13)
    m, z, c = 0.2, 1, np.array([1.0, -0.4])
    l = 0

    def lam_l(v):
        lw, _ = lambda_y_weights(m, v, z, c, draw)
        return np.exp(lw[l])

    quad_val, _ = integrate.quad(lam_l, -40, 40, limit=300)
    # closed form: integrate N(m; a + b v, s2m) N(v; mu_s, s2v) over v per subcluster
    from edpmediate.data import design_m, design_v
    from helpers_states import oracle_fx

    total = 0.0
    for s in np.where(draw.owner == l)[0]:
        xv = design_v(z, np.atleast_2d(c))[0]
        mu_v = xv @ draw.beta_v[s]
        bm = draw.beta_m[l]
        # m-design is (1, v, z, c): split the v coefficient out
        a = bm[0] + bm[2] * z + bm[3:] @ c
        b = bm[1]
        mean = a + b * mu_v
        var = draw.sig2_m[l] + b * b * draw.sig2_v[s]
        dens = np.exp(-0.5 * ((m - mean) ** 2 / var + np.log(2 * np.pi * var)))
        total += (
            draw.n_l[l] / (draw.alpha_theta + draw.n)
            * draw.n_rl[s] / (draw.alpha_omega + draw.n_l[l])
            * dens * oracle_fx(draw, s, z, c)
        )
    assert quad_val == pytest.approx(total, rel=1e-6)


REC = ObservedRecord(y=1.2, m=0.4, v=-0.3, z=1, c=(1.0, 0.2))


def test_loglik_zero_residual():
    params = YClusterParams(
        beta_y=np.array([1.2, 0.0, 0.0, 0.0, 0.0, 0.0]),
        sigma_y_sq=1.0,
        beta_m=np.array([0.4, 0.0, 0.0, 0.0, 0.0]),
        sigma_m_sq=1.0,
    )
    assert loglik_y(params, REC) == pytest.approx(-0.5 * np.log(2 * np.pi), abs=1e-12)
    assert loglik_m(params, REC) == pytest.approx(-0.5 * np.log(2 * np.pi), abs=1e-12)


def test_loglik_x_all_binary_half():
    rec = ObservedRecord(y=0.0, m=0.0, v=0.0, z=1, c=(1.0, 0.0, 1.0))
    params = XClusterParams(
        beta_v=np.zeros(5), sigma_v_sq=1.0,
        pi=np.full(4, 0.5), mu=np.zeros(0), tau_sq=np.zeros(0),
    )
    assert loglik_x(params, rec, np.array([True] * 3)) == pytest.approx(4 * np.log(0.5))


def test_loglik_sum_matches_oracle_product():
    from scipy import stats

    draw = two_cluster_draw()
    yp = draw.y_params(0)
    xp = draw.x_params(0)
    rec = REC
    total = (
        loglik_y(yp, rec) + loglik_m(yp, rec) + loglik_v(xp, rec)
        + loglik_x(xp, rec, np.array([True, False]))
    )
    from edpmediate.data import design_m, design_v, design_y

    c = np.atleast_2d(np.asarray(rec.c, dtype=float))
    dens = (
        stats.norm.pdf(rec.y, design_y(rec.m, rec.v, rec.z, c)[0] @ yp.beta_y, np.sqrt(yp.sigma_y_sq))
        * stats.norm.pdf(rec.m, design_m(rec.v, rec.z, c)[0] @ yp.beta_m, np.sqrt(yp.sigma_m_sq))
        * stats.norm.pdf(rec.v, design_v(rec.z, c)[0] @ xp.beta_v, np.sqrt(xp.sigma_v_sq))
        * (xp.pi[0] if rec.z else 1 - xp.pi[0])
        * (xp.pi[1] if rec.c[0] else 1 - xp.pi[1])
        * stats.norm.pdf(rec.c[1], xp.mu[0], np.sqrt(xp.tau_sq[0]))
    )
    assert total == pytest.approx(np.log(dens), rel=1e-10)


def test_loglik_missing_field_raises():
    params = YClusterParams(np.zeros(6), 1.0, np.zeros(5), 1.0)
    rec = ObservedRecord(y=None, m=0.1, v=0.0, z=0, c=(0.0, 0.0))
    with pytest.raises(ValueError):
        loglik_y(params, rec)


def test_joint_loglik_single_cluster_and_permutation():
    from edpmediate.data import MediationData

    draw = two_cluster_draw()
    rng = np.random.default_rng(0)
    n = draw.n
    data = MediationData.from_arrays(
        y=rng.normal(size=n), m=rng.normal(size=n), v=rng.normal(size=n),
        z=rng.integers(0, 2, n), c=np.column_stack([rng.integers(0, 2, n), rng.normal(size=n)]),
        c_binary=[True, False], standardize=False,
    )
    labels = rng.integers(0, 2, n)
    sub = np.where(labels == 0, rng.integers(0, 2, n), 2)
    draw.y_label, draw.x_label = labels, sub
    base = joint_loglik(draw, data)
    assert np.isfinite(base)
    # permuting cluster labels (swap 0 and 1, with their subclusters) is a no-op
    perm_draw = two_cluster_draw()
    order = [2, 0, 1]
    perm_draw.beta_y = draw.beta_y[[1, 0]]
    perm_draw.sig2_y = draw.sig2_y[[1, 0]]
    perm_draw.beta_m = draw.beta_m[[1, 0]]
    perm_draw.sig2_m = draw.sig2_m[[1, 0]]
    perm_draw.n_l = draw.n_l[[1, 0]]
    perm_draw.owner = np.array([1 - draw.owner[s] for s in order])
    perm_draw.beta_v = draw.beta_v[order]
    perm_draw.sig2_v = draw.sig2_v[order]
    perm_draw.pi = draw.pi[order]
    perm_draw.mu = draw.mu[order]
    perm_draw.tau2 = draw.tau2[order]
    perm_draw.n_rl = draw.n_rl[order]
    relabel = {0: 1, 1: 2, 2: 0}
    perm_draw.y_label = 1 - labels
    perm_draw.x_label = np.array([relabel[s] for s in sub])
    assert joint_loglik(perm_draw, data) == pytest.approx(base, rel=1e-12)


def test_partition_log_prior_sums_to_one_over_small_instances():
    # total prior mass over all nested partitions of 3 items equals 1
    from helpers_nested import nested_partitions

    total = []
    for nested in nested_partitions(3):
        n_l = np.array([sum(len(s) for s in cl) for cl in nested], dtype=float)
        n_rl = np.array([len(s) for cl in nested for s in cl], dtype=float)
        owner = np.concatenate([np.full(len(cl), i) for i, cl in enumerate(nested)])
        total.append(partition_log_prior(n_l, n_rl, owner, 0.7, 1.9))
    assert np.exp(logsumexp(total)) == pytest.approx(1.0, rel=1e-10)
