"""Vectorized reference kernels for the ANFIS hot loops."""

import numpy as np


def normalized_firing(X, centers, sigmas, rules):
    """Normalized firing strengths over the full grid rule base.

    On a complete grid the total firing strength factorizes into a product
    of per-input membership sums, so each normalized strength is a product
    of per-input normalized memberships. Returns ``(wbar, log_total)``;
    rows with ``log_total == -inf`` (or below the caller's threshold) are
    silent and their ``wbar`` is meaningless.
    """
    n_rows, n_in = X.shape
    m = centers.shape[1]
    d = X[:, :, None] - centers[None, :, :]
    mu = np.exp(-(d * d) / (2.0 * sigmas * sigmas)[None, :, :])
    tot = mu.sum(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_total = np.log(tot).sum(axis=1)
        mubar = mu / tot[:, :, None]
    wbar = np.ones((n_rows, 1))
    for j in range(n_in):
        wbar = (wbar[:, :, None] * mubar[:, j, None, :]).reshape(n_rows, -1)
    return wbar, log_total


def design_matrix(wbar, X):
    """Row t is kron(wbar[t], [x_t, 1])."""
    n_rows = X.shape[0]
    xe = np.empty((n_rows, X.shape[1] + 1))
    xe[:, :-1] = X
    xe[:, -1] = 1.0
    return (wbar[:, :, None] * xe[:, None, :]).reshape(n_rows, -1)


def premise_grad(X, centers, sigmas, wbar, F, y, coef, rules):
    """Gradient of a loss with dLoss/dy_t = coef[t] w.r.t. centres and widths."""
    n_rows, n_in = X.shape
    m = centers.shape[1]
    G = (coef[:, None] * (F - y[:, None]) * wbar).reshape((n_rows,) + (m,) * n_in)
    gc = np.zeros_like(centers)
    gs = np.zeros_like(sigmas)
    axes = tuple(range(1, n_in + 1))
    for j in range(n_in):
        g = G.sum(axis=tuple(a for a in axes if a != j + 1))  # (n_rows, m)
        d = X[:, j, None] - centers[j]
        gc[j] = (g * d).sum(axis=0) / sigmas[j] ** 2
        gs[j] = (g * d * d).sum(axis=0) / sigmas[j] ** 3
    return gc, gs
