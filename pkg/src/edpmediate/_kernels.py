"""JIT-compiled Gibbs-sweep kernels.

The sampler's inner loops (per-subject nested reassignment with auxiliary
components, per-cluster conjugate refresh, missing-data augmentation) run as
numba kernels over flat state arrays. Cluster rows live in capacity arrays
sized n+1; deletion is swap-with-last plus label fixup, so active labels stay
contiguous. All randomness uses numba's internal RandomState, seeded once per
chain through ``seed_kernels`` for determinism.

Design-row layouts (column order):
  outcome  (1, M, [V], Z, C)
  mediator (1, [V], Z, C)
  confounder (1, Z, C)
Binary marginal slots are ordered (Z, binary covariates); continuous marginal
slots follow ``cont_idx`` order.
"""

from __future__ import annotations

from math import log, log1p, sqrt

import numpy as np
from numba import njit

_LOG_2PI = float(np.log(2.0 * np.pi))
_PI_EPS = 1e-12


@njit(cache=True)
def seed_kernels(seed):
    np.random.seed(seed)


@njit(cache=True, inline="always")
def _ll_norm(x, mean, var):
    d = x - mean
    return -0.5 * (_LOG_2PI + np.log(var) + d * d / var)


@njit(cache=True)
def _dot(a, b, p):
    s = 0.0
    for k in range(p):
        s += a[k] * b[k]
    return s


@njit(cache=True)
def _chol_lower(a, out, p):
    """In-place lower Cholesky; returns False when not numerically PD."""
    for i in range(p):
        for j in range(i + 1):
            s = a[i, j]
            for k in range(j):
                s -= out[i, k] * out[j, k]
            if i == j:
                if s <= 1e-300:
                    return False
                out[i, i] = sqrt(s)
            else:
                out[i, j] = s / out[j, j]
        for j in range(i + 1, p):
            out[i, j] = 0.0
    return True


@njit(cache=True)
def _chol_solve(low, b, out, p):
    """Solve (L L^T) x = b."""
    for i in range(p):
        s = b[i]
        for k in range(i):
            s -= low[i, k] * out[k]
        out[i] = s / low[i, i]
    for i in range(p - 1, -1, -1):
        s = out[i]
        for k in range(i + 1, p):
            s -= low[k, i] * out[k]
        out[i] = s / low[i, i]


@njit(cache=True)
def _upper_solve(low, b, out, p):
    """Solve L^T x = b for the coefficient draw."""
    for i in range(p - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, p):
            s -= low[k, i] * out[k]
        out[i] = s / low[i, i]


@njit(cache=True)
def _draw_reg_prior(m0, cov_chol, shape, rate, beta_out, p):
    """(beta, sigma2) from a NIG prior given chol of the coefficient covariance."""
    s2 = rate / np.random.gamma(shape, 1.0)
    sd = sqrt(s2)
    for i in range(p):
        beta_out[i] = m0[i]
    for k in range(p):
        zk = np.random.standard_normal()
        for i in range(k, p):
            beta_out[i] += sd * cov_chol[i, k] * zk
    return s2


@njit(cache=True)
def _draw_marginals_prior(pi_row, mu_row, tau_row, pi_a, pi_b, c_m0, c_prec, c_shape, c_rate, nbt, ncc):
    for b in range(nbt):
        p = np.random.beta(pi_a, pi_b)
        if p < _PI_EPS:
            p = _PI_EPS
        elif p > 1.0 - _PI_EPS:
            p = 1.0 - _PI_EPS
        pi_row[b] = p
    for q in range(ncc):
        t2 = c_rate / np.random.gamma(c_shape, 1.0)
        tau_row[q] = t2
        mu_row[q] = c_m0 + sqrt(t2 / c_prec) * np.random.standard_normal()


@njit(cache=True, inline="always")
def _ll_marginals(bits, cvals, pi_row, mu_row, tau_row, nbt, ncc):
    out = 0.0
    for b in range(nbt):
        out += bits[b] * log(pi_row[b]) + (1.0 - bits[b]) * log1p(-pi_row[b])
    for q in range(ncc):
        out += _ll_norm(cvals[q], mu_row[q], tau_row[q])
    return out


@njit(cache=True)
def _build_rows(i, m_arr, v_arr, z_arr, C, include_v, xy, xm, xv, bits, cvals, bin_idx, cont_idx):
    p_c = C.shape[1]
    xy[0] = 1.0
    xy[1] = m_arr[i]
    off = 2
    if include_v:
        xy[2] = v_arr[i]
        off = 3
    xy[off] = z_arr[i]
    for q in range(p_c):
        xy[off + 1 + q] = C[i, q]
    xm[0] = 1.0
    offm = 1
    if include_v:
        xm[1] = v_arr[i]
        offm = 2
    xm[offm] = z_arr[i]
    for q in range(p_c):
        xm[offm + 1 + q] = C[i, q]
    xv[0] = 1.0
    xv[1] = z_arr[i]
    for q in range(p_c):
        xv[2 + q] = C[i, q]
    bits[0] = z_arr[i]
    for b in range(bin_idx.size):
        bits[1 + b] = C[i, bin_idx[b]]
    for q in range(cont_idx.size):
        cvals[q] = C[i, cont_idx[q]]


@njit(cache=True)
def _copy_sub_row(dst, src, beta_v, sig2_v, pi, mu, tau2, include_v):
    if include_v:
        for k in range(beta_v.shape[1]):
            beta_v[dst, k] = beta_v[src, k]
        sig2_v[dst] = sig2_v[src]
    for k in range(pi.shape[1]):
        pi[dst, k] = pi[src, k]
    for k in range(mu.shape[1]):
        mu[dst, k] = mu[src, k]
        tau2[dst, k] = tau2[src, k]


@njit(cache=True)
def alloc_sweep(
    y, m, v, z, C, bin_idx, cont_idx,
    y_lab, x_lab,
    beta_y, sig2_y, beta_m, sig2_m, nl,
    owner, beta_v, sig2_v, pi, mu, tau2, nrl,
    K, S,
    alpha_t, alpha_w, m_aux, include_v,
    y_m0, y_cov_chol, y_shape, y_rate,
    m_m0, m_cov_chol, m_shape, m_rate,
    v_m0, v_cov_chol, v_shape, v_rate,
    pi_a, pi_b, c_m0, c_prec, c_shape, c_rate,
):
    """One full reassignment scan; returns the updated (K, S)."""
    n = y.size
    p_y = beta_y.shape[1]
    p_m = beta_m.shape[1]
    p_v = beta_v.shape[1]
    nbt = pi.shape[1]
    ncc = mu.shape[1]

    xy = np.empty(p_y)
    xm = np.empty(p_m)
    xv = np.empty(p_v)
    bits = np.empty(nbt)
    cvals = np.empty(ncc)

    cand_cap = (n + 1) * (m_aux + 1) + m_aux + 4
    cand_logw = np.empty(cand_cap)
    cand_l = np.empty(cand_cap, dtype=np.int64)
    cand_s = np.empty(cand_cap, dtype=np.int64)

    ay_beta_y = np.empty((m_aux, p_y))
    ay_sig_y = np.empty(m_aux)
    ay_beta_m = np.empty((m_aux, p_m))
    ay_sig_m = np.empty(m_aux)
    ay_beta_v = np.empty((m_aux, p_v))
    ay_sig_v = np.empty(m_aux)
    ay_pi = np.empty((m_aux, nbt))
    ay_mu = np.empty((m_aux, ncc))
    ay_tau = np.empty((m_aux, ncc))

    # auxiliary subcluster parameters are shared across clusters within one
    # subject update (the augmentation is cluster-agnostic), so only m_aux
    # fresh omega draws are needed per subject
    as_beta_v = np.empty((m_aux, p_v))
    as_sig_v = np.empty(m_aux)
    as_pi = np.empty((m_aux, nbt))
    as_mu = np.empty((m_aux, ncc))
    as_tau = np.empty((m_aux, ncc))
    as_ll = np.empty(m_aux)

    log_m_aux = log(float(m_aux))

    for i in range(n):
        l0 = y_lab[i]
        s0 = x_lab[i]
        nl[l0] -= 1
        nrl[s0] -= 1
        stash_y = False
        stash_sub_owner = -1

        if nl[l0] == 0:
            # subject was a singleton cluster: its parameters become aux slot 0
            stash_y = True
            for k in range(p_y):
                ay_beta_y[0, k] = beta_y[l0, k]
            ay_sig_y[0] = sig2_y[l0]
            for k in range(p_m):
                ay_beta_m[0, k] = beta_m[l0, k]
            ay_sig_m[0] = sig2_m[l0]
            if include_v:
                for k in range(p_v):
                    ay_beta_v[0, k] = beta_v[s0, k]
                ay_sig_v[0] = sig2_v[s0]
            for k in range(nbt):
                ay_pi[0, k] = pi[s0, k]
            for k in range(ncc):
                ay_mu[0, k] = mu[s0, k]
                ay_tau[0, k] = tau2[s0, k]
            # remove the (only) subcluster, then the cluster
            last = S - 1
            if s0 != last:
                _copy_sub_row(s0, last, beta_v, sig2_v, pi, mu, tau2, include_v)
                owner[s0] = owner[last]
                nrl[s0] = nrl[last]
                for j in range(n):
                    if x_lab[j] == last:
                        x_lab[j] = s0
            S -= 1
            lastk = K - 1
            if l0 != lastk:
                for k in range(p_y):
                    beta_y[l0, k] = beta_y[lastk, k]
                sig2_y[l0] = sig2_y[lastk]
                for k in range(p_m):
                    beta_m[l0, k] = beta_m[lastk, k]
                sig2_m[l0] = sig2_m[lastk]
                nl[l0] = nl[lastk]
                for j in range(n):
                    if y_lab[j] == lastk:
                        y_lab[j] = l0
                for s in range(S):
                    if owner[s] == lastk:
                        owner[s] = l0
            K -= 1
        elif nrl[s0] == 0:
            # subject was a singleton subcluster: omega becomes shared aux slot 0
            stash_sub_owner = l0
            if include_v:
                for k in range(p_v):
                    as_beta_v[0, k] = beta_v[s0, k]
                as_sig_v[0] = sig2_v[s0]
            for k in range(nbt):
                as_pi[0, k] = pi[s0, k]
            for k in range(ncc):
                as_mu[0, k] = mu[s0, k]
                as_tau[0, k] = tau2[s0, k]
            last = S - 1
            if s0 != last:
                _copy_sub_row(s0, last, beta_v, sig2_v, pi, mu, tau2, include_v)
                owner[s0] = owner[last]
                nrl[s0] = nrl[last]
                for j in range(n):
                    if x_lab[j] == last:
                        x_lab[j] = s0
            S -= 1

        # fresh auxiliary parameters (slot 0 may hold a recycled singleton)
        for j in range(m_aux):
            if j == 0 and stash_sub_owner >= 0:
                continue
            if include_v:
                as_sig_v[j] = _draw_reg_prior(v_m0, v_cov_chol, v_shape, v_rate, as_beta_v[j], p_v)
            _draw_marginals_prior(
                as_pi[j], as_mu[j], as_tau[j],
                pi_a, pi_b, c_m0, c_prec, c_shape, c_rate, nbt, ncc,
            )
        for t in range(m_aux):
            if t == 0 and stash_y:
                continue
            ay_sig_y[t] = _draw_reg_prior(y_m0, y_cov_chol, y_shape, y_rate, ay_beta_y[t], p_y)
            ay_sig_m[t] = _draw_reg_prior(m_m0, m_cov_chol, m_shape, m_rate, ay_beta_m[t], p_m)
            if include_v:
                ay_sig_v[t] = _draw_reg_prior(v_m0, v_cov_chol, v_shape, v_rate, ay_beta_v[t], p_v)
            _draw_marginals_prior(
                ay_pi[t], ay_mu[t], ay_tau[t],
                pi_a, pi_b, c_m0, c_prec, c_shape, c_rate, nbt, ncc,
            )

        _build_rows(i, m, v, z, C, include_v, xy, xm, xv, bits, cvals, bin_idx, cont_idx)
        for j in range(m_aux):
            as_ll[j] = _ll_marginals(bits, cvals, as_pi[j], as_mu[j], as_tau[j], nbt, ncc)
            if include_v:
                as_ll[j] += _ll_norm(v[i], _dot(xv, as_beta_v[j], p_v), as_sig_v[j])

        nc = 0
        for l in range(K):
            a_ll = _ll_norm(y[i], _dot(xy, beta_y[l], p_y), sig2_y[l]) + _ll_norm(
                m[i], _dot(xm, beta_m[l], p_m), sig2_m[l]
            )
            base = log(float(nl[l])) - log(alpha_w + nl[l]) + a_ll
            for s in range(S):
                if owner[s] == l:
                    w = base + log(float(nrl[s])) + _ll_marginals(bits, cvals, pi[s], mu[s], tau2[s], nbt, ncc)
                    if include_v:
                        w += _ll_norm(v[i], _dot(xv, beta_v[s], p_v), sig2_v[s])
                    cand_logw[nc] = w
                    cand_l[nc] = l
                    cand_s[nc] = s
                    nc += 1
            for j in range(m_aux):
                cand_logw[nc] = base + log(alpha_w) - log_m_aux + as_ll[j]
                cand_l[nc] = l
                cand_s[nc] = -1 - j
                nc += 1
        for t in range(m_aux):
            w = (
                log(alpha_t)
                - log_m_aux
                + _ll_norm(y[i], _dot(xy, ay_beta_y[t], p_y), ay_sig_y[t])
                + _ll_norm(m[i], _dot(xm, ay_beta_m[t], p_m), ay_sig_m[t])
                + _ll_marginals(bits, cvals, ay_pi[t], ay_mu[t], ay_tau[t], nbt, ncc)
            )
            if include_v:
                w += _ll_norm(v[i], _dot(xv, ay_beta_v[t], p_v), ay_sig_v[t])
            cand_logw[nc] = w
            cand_l[nc] = -1 - t
            cand_s[nc] = -1 - t
            nc += 1

        mx = cand_logw[0]
        for idx in range(1, nc):
            if cand_logw[idx] > mx:
                mx = cand_logw[idx]
        tot = 0.0
        for idx in range(nc):
            cand_logw[idx] = np.exp(cand_logw[idx] - mx)
            tot += cand_logw[idx]
        u = np.random.random() * tot
        acc = 0.0
        pick = nc - 1
        for idx in range(nc):
            acc += cand_logw[idx]
            if u <= acc:
                pick = idx
                break

        l_sel = cand_l[pick]
        s_sel = cand_s[pick]
        if l_sel >= 0:
            if s_sel >= 0:
                y_lab[i] = l_sel
                x_lab[i] = s_sel
                nl[l_sel] += 1
                nrl[s_sel] += 1
            else:
                j = -1 - s_sel
                if include_v:
                    for k in range(p_v):
                        beta_v[S, k] = as_beta_v[j, k]
                    sig2_v[S] = as_sig_v[j]
                for k in range(nbt):
                    pi[S, k] = as_pi[j, k]
                for k in range(ncc):
                    mu[S, k] = as_mu[j, k]
                    tau2[S, k] = as_tau[j, k]
                owner[S] = l_sel
                nrl[S] = 1
                y_lab[i] = l_sel
                x_lab[i] = S
                nl[l_sel] += 1
                S += 1
        else:
            t = -1 - l_sel
            for k in range(p_y):
                beta_y[K, k] = ay_beta_y[t, k]
            sig2_y[K] = ay_sig_y[t]
            for k in range(p_m):
                beta_m[K, k] = ay_beta_m[t, k]
            sig2_m[K] = ay_sig_m[t]
            nl[K] = 1
            if include_v:
                for k in range(p_v):
                    beta_v[S, k] = ay_beta_v[t, k]
                sig2_v[S] = ay_sig_v[t]
            for k in range(nbt):
                pi[S, k] = ay_pi[t, k]
            for k in range(ncc):
                mu[S, k] = ay_mu[t, k]
                tau2[S, k] = ay_tau[t, k]
            owner[S] = K
            nrl[S] = 1
            y_lab[i] = K
            x_lab[i] = S
            K += 1
            S += 1

    return K, S


@njit(cache=True)
def _nig_refresh(
    members, X, resp, prec0, m0, quad0, shape0, rate0,
    cov_chol0, beta_out, p,
):
    """Draw (beta, sigma2) from the NIG full conditional of one regression.

    Returns (sigma2, fallback_flag); falls back to a prior draw when the
    posterior precision is numerically singular.
    """
    cnt = members.size
    prec_n = np.empty((p, p))
    for a in range(p):
        for b in range(p):
            prec_n[a, b] = prec0[a, b]
    rhs = np.empty(p)
    for a in range(p):
        s = 0.0
        for b in range(p):
            s += prec0[a, b] * m0[b]
        rhs[a] = s
    yty = 0.0
    for t in range(cnt):
        i = members[t]
        yi = resp[i]
        yty += yi * yi
        for a in range(p):
            xa = X[i, a]
            rhs[a] += xa * yi
            for b in range(a + 1):
                prec_n[a, b] += xa * X[i, b]
    for a in range(p):
        for b in range(a + 1, p):
            prec_n[a, b] = prec_n[b, a]

    low = np.empty((p, p))
    if not _chol_lower(prec_n, low, p):
        s2 = _draw_reg_prior(m0, cov_chol0, shape0, rate0, beta_out, p)
        return s2, 1
    mn = np.empty(p)
    _chol_solve(low, rhs, mn, p)
    quad_n = 0.0
    for a in range(p):
        s = 0.0
        for b in range(p):
            s += prec_n[a, b] * mn[b]
        quad_n += mn[a] * s
    an = shape0 + 0.5 * cnt
    bn = rate0 + 0.5 * (yty + quad0 - quad_n)
    if not np.isfinite(bn) or bn <= 0.0:
        s2 = _draw_reg_prior(m0, cov_chol0, shape0, rate0, beta_out, p)
        return s2, 1
    s2 = bn / np.random.gamma(an, 1.0)
    zeta = np.empty(p)
    for a in range(p):
        zeta[a] = np.random.standard_normal()
    delta = np.empty(p)
    _upper_solve(low, zeta, delta, p)
    sd = sqrt(s2)
    for a in range(p):
        beta_out[a] = mn[a] + sd * delta[a]
    return s2, 0


@njit(cache=True)
def refresh_sweep(
    y, m, v, z, C, bin_idx, cont_idx,
    y_lab, x_lab,
    beta_y, sig2_y, beta_m, sig2_m, nl,
    owner, beta_v, sig2_v, pi, mu, tau2, nrl,
    K, S, include_v,
    y_prec, y_m0, y_quad0, y_shape, y_rate, y_cov_chol,
    m_prec, m_m0, m_quad0, m_shape, m_rate, m_cov_chol,
    v_prec, v_m0, v_quad0, v_shape, v_rate, v_cov_chol,
    pi_a, pi_b, c_m0, c_prec, c_shape, c_rate,
    Xy, Xm, Xv,
):
    """Conjugate refresh of every cluster and subcluster; returns fallback count."""
    n = y.size
    p_y = beta_y.shape[1]
    p_m = beta_m.shape[1]
    p_v = beta_v.shape[1]
    nbt = pi.shape[1]
    ncc = mu.shape[1]
    p_c = C.shape[1]

    for i in range(n):
        Xy[i, 0] = 1.0
        Xy[i, 1] = m[i]
        off = 2
        if include_v:
            Xy[i, 2] = v[i]
            off = 3
        Xy[i, off] = z[i]
        for q in range(p_c):
            Xy[i, off + 1 + q] = C[i, q]
        Xm[i, 0] = 1.0
        offm = 1
        if include_v:
            Xm[i, 1] = v[i]
            offm = 2
        Xm[i, offm] = z[i]
        for q in range(p_c):
            Xm[i, offm + 1 + q] = C[i, q]
        Xv[i, 0] = 1.0
        Xv[i, 1] = z[i]
        for q in range(p_c):
            Xv[i, 2 + q] = C[i, q]

    fallbacks = 0
    # counting sort of members by cluster label
    start = np.zeros(K + 1, dtype=np.int64)
    for i in range(n):
        start[y_lab[i] + 1] += 1
    for l in range(K):
        start[l + 1] += start[l]
    order = np.empty(n, dtype=np.int64)
    fill = start.copy()
    for i in range(n):
        order[fill[y_lab[i]]] = i
        fill[y_lab[i]] += 1
    for l in range(K):
        mem = order[start[l]:start[l + 1]]
        s2, fb = _nig_refresh(mem, Xy, y, y_prec, y_m0, y_quad0, y_shape, y_rate, y_cov_chol, beta_y[l], p_y)
        sig2_y[l] = s2
        fallbacks += fb
        s2, fb = _nig_refresh(mem, Xm, m, m_prec, m_m0, m_quad0, m_shape, m_rate, m_cov_chol, beta_m[l], p_m)
        sig2_m[l] = s2
        fallbacks += fb

    starts = np.zeros(S + 1, dtype=np.int64)
    for i in range(n):
        starts[x_lab[i] + 1] += 1
    for s in range(S):
        starts[s + 1] += starts[s]
    orders = np.empty(n, dtype=np.int64)
    fills = starts.copy()
    for i in range(n):
        orders[fills[x_lab[i]]] = i
        fills[x_lab[i]] += 1
    for s in range(S):
        mem = orders[starts[s]:starts[s + 1]]
        cnt = mem.size
        if include_v:
            s2, fb = _nig_refresh(mem, Xv, v, v_prec, v_m0, v_quad0, v_shape, v_rate, v_cov_chol, beta_v[s], p_v)
            sig2_v[s] = s2
            fallbacks += fb
        # binary marginals: slot 0 is the treatment column
        for bcol in range(nbt):
            ones = 0.0
            for t in range(cnt):
                i = mem[t]
                ones += z[i] if bcol == 0 else C[i, bin_idx[bcol - 1]]
            p_draw = np.random.beta(pi_a + ones, pi_b + cnt - ones)
            if p_draw < _PI_EPS:
                p_draw = _PI_EPS
            elif p_draw > 1.0 - _PI_EPS:
                p_draw = 1.0 - _PI_EPS
            pi[s, bcol] = p_draw
        for q in range(ncc):
            tot = 0.0
            totsq = 0.0
            for t in range(cnt):
                val = C[mem[t], cont_idx[q]]
                tot += val
                totsq += val * val
            prec_post = c_prec + cnt
            mean_post = (c_prec * c_m0 + tot) / prec_post
            a_post = c_shape + 0.5 * cnt
            b_post = c_rate + 0.5 * (totsq + c_prec * c_m0 * c_m0 - prec_post * mean_post * mean_post)
            if b_post <= 0.0:
                b_post = c_rate
            t2 = b_post / np.random.gamma(a_post, 1.0)
            tau2[s, q] = t2
            mu[s, q] = mean_post + sqrt(t2 / prec_post) * np.random.standard_normal()
    return fallbacks


@njit(cache=True)
def impute_sweep(
    y, m, v, z, C, bin_idx, cont_idx,
    y_mis, m_mis, v_mis, c_mis_bin, any_mis,
    y_lab, x_lab,
    beta_y, sig2_y, beta_m, sig2_m,
    owner, beta_v, sig2_v, pi, mu, tau2,
    include_v,
):
    """Redraw missing fields from their exact full conditionals.

    ``c_mis_bin`` flags missing binary covariates as positions into
    ``bin_idx`` (shape (n, n_binary)); continuous covariates are required to
    be fully observed upstream. ``any_mis`` is the per-row any-missing flag.
    """
    n = y.size
    p_y = beta_y.shape[1]
    p_m = beta_m.shape[1]
    p_v = beta_v.shape[1]
    nbt = pi.shape[1]
    ncc = mu.shape[1]
    xy = np.empty(p_y)
    xm = np.empty(p_m)
    xv = np.empty(p_v)
    bits = np.empty(nbt)
    cvals = np.empty(ncc)
    iy_v = 2
    im_v = 1

    for i in range(n):
        if not any_mis[i]:
            continue
        l = y_lab[i]
        s = x_lab[i]
        if y_mis[i]:
            _build_rows(i, m, v, z, C, include_v, xy, xm, xv, bits, cvals, bin_idx, cont_idx)
            y[i] = np.random.normal(_dot(xy, beta_y[l], p_y), sqrt(sig2_y[l]))
        if m_mis[i]:
            _build_rows(i, m, v, z, C, include_v, xy, xm, xv, bits, cvals, bin_idx, cont_idx)
            a = beta_y[l, 1]
            yhat = _dot(xy, beta_y[l], p_y)
            r = y[i] - (yhat - a * m[i])
            mu_m = _dot(xm, beta_m[l], p_m)
            prec = 1.0 / sig2_m[l] + a * a / sig2_y[l]
            mean = (mu_m / sig2_m[l] + a * r / sig2_y[l]) / prec
            m[i] = np.random.normal(mean, sqrt(1.0 / prec))
        if v_mis[i] and include_v:
            _build_rows(i, m, v, z, C, include_v, xy, xm, xv, bits, cvals, bin_idx, cont_idx)
            a1 = beta_y[l, iy_v]
            a2 = beta_m[l, im_v]
            r1 = y[i] - (_dot(xy, beta_y[l], p_y) - a1 * v[i])
            r2 = m[i] - (_dot(xm, beta_m[l], p_m) - a2 * v[i])
            mu_v = _dot(xv, beta_v[s], p_v)
            prec = 1.0 / sig2_v[s] + a1 * a1 / sig2_y[l] + a2 * a2 / sig2_m[l]
            num = mu_v / sig2_v[s] + a1 * r1 / sig2_y[l] + a2 * r2 / sig2_m[l]
            v[i] = np.random.normal(num / prec, sqrt(1.0 / prec))
        for bpos in range(nbt - 1):
            if not c_mis_bin[i, bpos]:
                continue
            q = bin_idx[bpos]
            lp0 = 0.0
            lp1 = 0.0
            for val in range(2):
                C[i, q] = float(val)
                _build_rows(i, m, v, z, C, include_v, xy, xm, xv, bits, cvals, bin_idx, cont_idx)
                lp = val * log(pi[s, 1 + bpos]) + (1 - val) * log1p(-pi[s, 1 + bpos])
                lp += _ll_norm(y[i], _dot(xy, beta_y[l], p_y), sig2_y[l])
                lp += _ll_norm(m[i], _dot(xm, beta_m[l], p_m), sig2_m[l])
                if include_v:
                    lp += _ll_norm(v[i], _dot(xv, beta_v[s], p_v), sig2_v[s])
                if val == 0:
                    lp0 = lp
                else:
                    lp1 = lp
            p1 = 1.0 / (1.0 + np.exp(lp0 - lp1))
            C[i, q] = 1.0 if np.random.random() < p1 else 0.0
    return 0
