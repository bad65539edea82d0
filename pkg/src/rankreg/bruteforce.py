"""Literal O(n^2) reference implementations.

These evaluate the defining double sums of the rank transform and of every
influence column term by term, with no sorting or prefix-sum tricks.  They
exist as correctness oracles for the accelerated paths in
:mod:`rankreg.ranks` and :mod:`rankreg.inference` (the two must agree to
1e-10) and as the slow side of the kernel benchmark.  Do not use them on
large samples.
"""

import numpy as np

from .inference import InfluenceRows
from .ranks import check_omega, comparison_kernel

__all__ = [
    "rank_transform_pairwise",
    "influence_rows_pairwise",
]


def _kernel_row(t, data, omega):
    """Vector of K(t, data_j) over j for one evaluation point t."""
    return omega * (t <= data) + (1.0 - omega) * (t < data)


def rank_transform_pairwise(sample, omega=1.0):
    """Ranks by the defining kernel average: (1/n) sum_j K(s_j, s_i) + (1-omega)/n."""
    omega = check_omega(omega)
    arr = np.asarray(sample, dtype=np.float64).reshape(-1)
    n = arr.size
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += comparison_kernel(arr[j], arr[i], omega)
        out[i] = acc / n + (1.0 - omega) / n
    return out


def _xi1_columns(fit, d, gamma, tau, delta):
    rx, W = fit.ranks_x, d.w
    p = W.shape[1]
    cols = [rx - W @ gamma]
    for l in range(p):
        others = np.delete(np.arange(p), l)
        cols.append(W[:, l] - tau[l] * rx - W[:, others] @ delta[l])
    return cols


def _ranked_regressor_pairwise(fit, d):
    n = d.n
    omega = fit.omega
    W = d.w
    p = W.shape[1]
    rho = fit.slope
    eps = fit.residuals
    w_beta = W @ fit.beta
    w_gamma = W @ fit.gamma
    xi1 = _xi1_columns(fit, d, fit.gamma, fit.tau, fit.delta)
    ranked_outcome = fit.spec == "rank-rank"
    names = ["rank(x)"] + list(d.w_names)
    psi = np.empty((n, 1 + p))
    scales = np.array([float(np.mean(c * c)) for c in xi1])
    for i in range(n):
        kx = _kernel_row(d.x[i], d.x, omega)
        ky = _kernel_row(d.y[i], d.y, omega) if ranked_outcome else None
        for l in range(1 + p):
            c = xi1[l]
            h1 = eps[i] * c[i]
            if ranked_outcome:
                h2 = float(np.sum((ky - rho * kx - w_beta) * c)) / n
            else:
                h2 = float(np.sum((d.y - rho * kx - w_beta) * c)) / n
            if l == 0:
                h3 = float(np.sum(eps * (kx - w_gamma))) / n
            else:
                j = l - 1
                others = np.delete(np.arange(p), j)
                xi3 = W[:, j] - fit.tau[j] * kx - W[:, others] @ fit.delta[j]
                h3 = float(np.sum(eps * xi3)) / n
            psi[i, l] = (h1 + h2 + h3) / scales[l]
    return InfluenceRows(psi=psi, names=names, scales=scales)


def _grouped_pairwise(fit, d):
    n = d.n
    omega = fit.omega
    W = d.w
    p = W.shape[1]
    n_g = d.n_groups
    names = fit.coef_names
    q = (1 + p) * n_g
    psi = np.empty((n, q))
    scales = np.empty(q)
    for g in range(n_g):
        mask = (d.group_index == g).astype(np.float64)
        rho_g = fit.slope[g]
        beta_g = fit.beta[g]
        eps_g = (fit.ranks_y - rho_g * fit.ranks_x - W @ beta_g) * mask
        w_beta = W @ beta_g
        w_gamma = W @ fit.gamma[g]
        xi1 = _xi1_columns(fit, d, fit.gamma[g], fit.tau[g], fit.delta[g])
        for l in range(1 + p):
            scales[l * n_g + g] = float(np.mean(mask * xi1[l] ** 2))
        for i in range(n):
            kx = _kernel_row(d.x[i], d.x, omega)
            ky = _kernel_row(d.y[i], d.y, omega)
            for l in range(1 + p):
                c = xi1[l]
                h1 = eps_g[i] * c[i]
                h2 = float(np.sum(mask * (ky - rho_g * kx - w_beta) * c)) / n
                if l == 0:
                    h3 = float(np.sum(eps_g * (kx - w_gamma))) / n
                else:
                    j = l - 1
                    others = np.delete(np.arange(p), j)
                    xi3 = W[:, j] - fit.tau[g][j] * kx - W[:, others] @ fit.delta[g][j]
                    h3 = float(np.sum(eps_g * xi3)) / n
                psi[i, l * n_g + g] = (h1 + h2 + h3) / scales[l * n_g + g]
    return InfluenceRows(psi=psi, names=names, scales=scales)


def _rank_level_pairwise(fit, d):
    n = d.n
    omega = fit.omega
    W = d.w
    p = W.shape[1]
    eps = fit.residuals
    w_beta = W @ fit.beta
    psi = np.empty((n, p))
    scales = np.empty(p)
    for l in range(p):
        others = np.delete(np.arange(p), l)
        nu_l = W[:, l] - W[:, others] @ fit.delta[l]
        scales[l] = float(np.mean(nu_l * nu_l))
        for i in range(n):
            ky = _kernel_row(d.y[i], d.y, omega)
            h1 = eps[i] * nu_l[i]
            h2 = float(np.sum((ky - w_beta) * nu_l)) / n
            psi[i, l] = (h1 + h2) / scales[l]
    return InfluenceRows(psi=psi, names=list(d.w_names), scales=scales)


def influence_rows_pairwise(fit, data=None):
    """Influence rows by the literal pairwise definition (test oracle)."""
    d = fit.data if data is None else data
    if fit.spec in ("rank-rank", "level-rank"):
        return _ranked_regressor_pairwise(fit, d)
    if fit.spec == "rank-rank-group":
        return _grouped_pairwise(fit, d)
    if fit.spec == "rank-level":
        return _rank_level_pairwise(fit, d)
    raise ValueError(f"unknown specification {fit.spec!r}")
