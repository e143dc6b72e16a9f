"""Compiled inner loops: subset expansion and single-site Gibbs chains.

Everything here is deterministic given its explicit seed arguments. The
expansion kernel walks all pinned subsets in size order (Gosper's hack
inside each size class) and accumulates in log space with a running-max
rescale, so pinning weights spanning hundreds of orders of magnitude stay
finite. The chain kernels keep heights of pinned sites at exactly zero, so
neighbor sums need no case split.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LOG_2PI = float(np.log(2.0 * np.pi))
LOG_2 = float(np.log(2.0))

STATUS_OK = 0
STATUS_NOT_PD = 1
STATUS_ENVELOPE = 2


@njit(cache=True, nogil=True)
def mixed_expansion(A, eta, log_eps):
    """Sum over all pinned subsets of the Gaussian mixed measure.

    A is the dense precision matrix of the full volume (n <= ~22), eta the
    field vector, log_eps = log(pinning strength). Returns
    (log_z, pin_prob, mean, second_moment, status).
    """
    n = A.shape[0]
    one = np.int64(1)
    total = one << n

    run_max = -np.inf
    norm = 0.0
    pin_acc = np.zeros(n)
    mean_acc = np.zeros(n)
    m2_acc = np.zeros(n)

    C = np.zeros((n, n))
    Zb = np.zeros((n, n))
    yv = np.zeros(n)
    mv = np.zeros(n)
    gd = np.zeros(n)
    didx = np.zeros(n, dtype=np.int64)

    for k in range(n + 1):
        mask = (one << k) - one
        while True:
            s = n - k
            t = 0
            for i in range(n):
                if ((mask >> i) & one) == 0:
                    didx[t] = i
                    t += 1
            if s > 0:
                ok = True
                for j in range(s):
                    acc = A[didx[j], didx[j]]
                    for p in range(j):
                        acc -= C[j, p] * C[j, p]
                    if acc <= 0.0:
                        ok = False
                        break
                    cjj = np.sqrt(acc)
                    C[j, j] = cjj
                    for i2 in range(j + 1, s):
                        acc2 = A[didx[i2], didx[j]]
                        for p in range(j):
                            acc2 -= C[i2, p] * C[j, p]
                        C[i2, j] = acc2 / cjj
                if not ok:
                    return (np.nan, pin_acc, mean_acc, m2_acc, STATUS_NOT_PD)
                logdet = 0.0
                for j in range(s):
                    logdet += np.log(C[j, j])
                logdet *= 2.0
                quad = 0.0
                for i2 in range(s):
                    acc = eta[didx[i2]]
                    for p in range(i2):
                        acc -= C[i2, p] * yv[p]
                    yv[i2] = acc / C[i2, i2]
                    quad += yv[i2] * yv[i2]
                for i2 in range(s - 1, -1, -1):
                    acc = yv[i2]
                    for p in range(i2 + 1, s):
                        acc -= C[p, i2] * mv[p]
                    mv[i2] = acc / C[i2, i2]
                for j in range(s):
                    Zb[j, j] = 1.0 / C[j, j]
                    for i2 in range(j + 1, s):
                        acc = 0.0
                        for p in range(j, i2):
                            acc -= C[i2, p] * Zb[p, j]
                        Zb[i2, j] = acc / C[i2, i2]
                for j in range(s):
                    acc = 0.0
                    for i2 in range(j, s):
                        acc += Zb[i2, j] * Zb[i2, j]
                    gd[j] = acc
                log_z_sub = 0.5 * s * LOG_2PI - 0.5 * logdet + 0.5 * quad
            else:
                log_z_sub = 0.0
            logw = k * log_eps + log_z_sub
            if logw > run_max:
                if run_max > -np.inf:
                    r = np.exp(run_max - logw)
                    norm *= r
                    for i2 in range(n):
                        pin_acc[i2] *= r
                        mean_acc[i2] *= r
                        m2_acc[i2] *= r
                run_max = logw
            w = np.exp(logw - run_max)
            norm += w
            for i2 in range(n):
                if ((mask >> i2) & one) == one:
                    pin_acc[i2] += w
            for j in range(s):
                site = didx[j]
                mean_acc[site] += w * mv[j]
                m2_acc[site] += w * (gd[j] + mv[j] * mv[j])
            if k == 0:
                break
            c = mask & (-mask)
            r2 = mask + c
            nxt = (((r2 ^ mask) >> 2) // c) | r2
            if nxt >= total:
                break
            mask = nxt
    log_z = run_max + np.log(norm)
    inv = 1.0 / norm
    for i2 in range(n):
        pin_acc[i2] *= inv
        mean_acc[i2] *= inv
        m2_acc[i2] *= inv
    return (log_z, pin_acc, mean_acc, m2_acc, STATUS_OK)


@njit(cache=True, nogil=True, inline="always")
def _pot_value(kind, param, t):
    if kind == 0:
        return 0.5 * param * t * t
    a = np.abs(t)
    return 0.5 * param * t * t + (1.0 - param) * (a + np.log1p(np.exp(-2.0 * a)) - LOG_2)


@njit(cache=True, nogil=True, inline="always")
def _pot_slope(kind, param, t):
    if kind == 0:
        return param * t
    return param * t + (1.0 - param) * np.tanh(t)


@njit(cache=True, nogil=True, inline="always")
def _sigmoid(t):
    if t >= 0.0:
        return 1.0 / (1.0 + np.exp(-t))
    e = np.exp(t)
    return e / (1.0 + e)


@njit(cache=True, nogil=True)
def _local_energy(kind, param, nbr_heights, m, inv4d, eta_i, x):
    acc = 0.0
    for q in range(m):
        acc += _pot_value(kind, param, x - nbr_heights[q])
    return inv4d * acc - eta_i * x


@njit(cache=True, nogil=True)
def run_chain(nbrs, eta, d, kind, param, c_minus, c_plus, epsilon, seed,
              burnin, thin, batch_size, n_batches):
    """Systematic-scan Gibbs chain; returns per-batch sums of the observables.

    Output arrays are (n_batches, n): sums over kept sweeps of phi, phi^2 and
    the pinned indicator. The chain runs exactly burnin + thin*batch_size*
    n_batches sweeps from the all-unpinned zero configuration.
    """
    n = eta.shape[0]
    np.random.seed(seed)
    phi = np.zeros(n)
    pinned = np.zeros(n, dtype=np.bool_)
    inv4d = 1.0 / (4.0 * d)
    gauss = kind == 0
    a_g = 0.5 * param
    sd_g = 1.0 / np.sqrt(a_g)
    w_g = param * inv4d
    half_log_g = 0.5 * np.log(2.0 * np.pi / a_g)
    log_eps = np.log(epsilon) if epsilon > 0.0 else -np.inf

    # general-potential machinery: envelope curvature and mass grid
    a_env = 0.5 * c_minus
    sd_env = 1.0 / np.sqrt(a_env)
    half = np.sqrt(156.4 / c_minus) if c_minus > 0.0 else 1.0
    step = np.sqrt(2.0 / c_plus) / 6.0 if c_plus > 0.0 else 1.0
    n_grid = int(2.0 * half / step) + 2

    bs_phi = np.zeros((n_batches, n))
    bs_phi2 = np.zeros((n_batches, n))
    bs_pin = np.zeros((n_batches, n))
    nbr_heights = np.zeros(2 * d)

    total_kept = batch_size * n_batches
    kept = 0
    sweep = 0
    while kept < total_kept:
        for i in range(n):
            m = 2 * d
            ssum = 0.0
            for q in range(m):
                j = nbrs[i, q]
                h = phi[j] if j >= 0 else 0.0
                nbr_heights[q] = h
                ssum += h
            do_pin = False
            if gauss:
                b = w_g * ssum + eta[i]
                if epsilon > 0.0:
                    tlog = log_eps - (half_log_g + 0.5 * b * b / a_g)
                    if np.random.random() < _sigmoid(tlog):
                        do_pin = True
                if do_pin:
                    pinned[i] = True
                    phi[i] = 0.0
                else:
                    pinned[i] = False
                    phi[i] = b / a_g + sd_g * np.random.normal()
            else:
                # minimizer of the local energy by strongly-convex descent
                x = phi[i]
                lip = 0.5 * c_plus
                for _ in range(200):
                    gp = inv4d * 0.0
                    acc = 0.0
                    for q in range(m):
                        acc += _pot_slope(kind, param, x - nbr_heights[q])
                    gp = inv4d * acc - eta[i]
                    dx = gp / lip
                    x -= dx
                    if np.abs(dx) < 1e-13 * (1.0 + np.abs(x)):
                        break
                g_star = _local_energy(kind, param, nbr_heights, m, inv4d, eta[i], x)
                if epsilon > 0.0:
                    # continuous mass by trapezoid around the minimizer
                    mass = 0.0
                    for gdx in range(n_grid):
                        xg = x - half + step * gdx
                        mass += np.exp(-(_local_energy(kind, param, nbr_heights, m, inv4d, eta[i], xg) - g_star))
                    log_mass = -g_star + np.log(mass * step)
                    g_zero = _local_energy(kind, param, nbr_heights, m, inv4d, eta[i], 0.0)
                    tlog = (log_eps - g_zero) - log_mass
                    if np.random.random() < _sigmoid(tlog):
                        do_pin = True
                if do_pin:
                    pinned[i] = True
                    phi[i] = 0.0
                else:
                    pinned[i] = False
                    accepted = False
                    for _ in range(10000):
                        z = x + sd_env * np.random.normal()
                        gz = _local_energy(kind, param, nbr_heights, m, inv4d, eta[i], z)
                        log_ratio = -(gz - g_star) + 0.5 * a_env * (z - x) * (z - x)
                        if log_ratio > 1e-9:
                            return bs_phi, bs_phi2, bs_pin, sweep, STATUS_ENVELOPE
                        if np.log(np.random.random()) < log_ratio:
                            phi[i] = z
                            accepted = True
                            break
                    if not accepted:
                        return bs_phi, bs_phi2, bs_pin, sweep, STATUS_ENVELOPE
        sweep += 1
        if sweep > burnin and ((sweep - burnin - 1) % thin) == 0:
            bidx = kept // batch_size
            for i in range(n):
                bs_phi[bidx, i] += phi[i]
                bs_phi2[bidx, i] += phi[i] * phi[i]
                if pinned[i]:
                    bs_pin[bidx, i] += 1.0
            kept += 1
    return bs_phi, bs_phi2, bs_pin, sweep, STATUS_OK


@njit(cache=True, nogil=True)
def run_chain_samples(nbrs, eta, d, curvature, epsilon, seed, burnin, thin, n_samples):
    """Gaussian chain returning kept height snapshots, (n_samples, n)."""
    n = eta.shape[0]
    np.random.seed(seed)
    phi = np.zeros(n)
    inv4d = 1.0 / (4.0 * d)
    a_g = 0.5 * curvature
    sd_g = 1.0 / np.sqrt(a_g)
    w_g = curvature * inv4d
    half_log_g = 0.5 * np.log(2.0 * np.pi / a_g)
    log_eps = np.log(epsilon) if epsilon > 0.0 else -np.inf
    out = np.zeros((n_samples, n))
    kept = 0
    sweep = 0
    while kept < n_samples:
        for i in range(n):
            ssum = 0.0
            for q in range(2 * d):
                j = nbrs[i, q]
                if j >= 0:
                    ssum += phi[j]
            b = w_g * ssum + eta[i]
            do_pin = False
            if epsilon > 0.0:
                tlog = log_eps - (half_log_g + 0.5 * b * b / a_g)
                if np.random.random() < _sigmoid(tlog):
                    do_pin = True
            if do_pin:
                phi[i] = 0.0
            else:
                phi[i] = b / a_g + sd_g * np.random.normal()
        sweep += 1
        if sweep > burnin and ((sweep - burnin - 1) % thin) == 0:
            for i in range(n):
                out[kept, i] = phi[i]
            kept += 1
    return out


@njit(cache=True, nogil=True)
def run_chain_pin_patterns(nbrs, eta, d, curvature, epsilon, seed, burnin, thin, n_samples):
    """Gaussian chain recording the pinned-site bit pattern; n <= 20 sites."""
    n = eta.shape[0]
    np.random.seed(seed)
    phi = np.zeros(n)
    pinned = np.zeros(n, dtype=np.bool_)
    inv4d = 1.0 / (4.0 * d)
    a_g = 0.5 * curvature
    sd_g = 1.0 / np.sqrt(a_g)
    w_g = curvature * inv4d
    half_log_g = 0.5 * np.log(2.0 * np.pi / a_g)
    log_eps = np.log(epsilon) if epsilon > 0.0 else -np.inf
    counts = np.zeros(1 << n, dtype=np.int64)
    kept = 0
    sweep = 0
    while kept < n_samples:
        for i in range(n):
            ssum = 0.0
            for q in range(2 * d):
                j = nbrs[i, q]
                if j >= 0:
                    ssum += phi[j]
            b = w_g * ssum + eta[i]
            do_pin = False
            if epsilon > 0.0:
                tlog = log_eps - (half_log_g + 0.5 * b * b / a_g)
                if np.random.random() < _sigmoid(tlog):
                    do_pin = True
            if do_pin:
                pinned[i] = True
                phi[i] = 0.0
            else:
                pinned[i] = False
                phi[i] = b / a_g + sd_g * np.random.normal()
        sweep += 1
        if sweep > burnin and ((sweep - burnin - 1) % thin) == 0:
            pid = 0
            for i in range(n):
                if pinned[i]:
                    pid |= 1 << i
            counts[pid] += 1
            kept += 1
    return counts
