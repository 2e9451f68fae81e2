"""Loop kernels compiled with numba; same contracts as ``_numpy``."""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def normalized_firing(X, centers, sigmas, rules):
    n_rows, n_in = X.shape
    m = centers.shape[1]
    n_rules = rules.shape[0]
    wbar = np.empty((n_rows, n_rules))
    log_total = np.empty(n_rows)
    mubar = np.empty((n_in, m))
    for t in range(n_rows):
        lt = 0.0
        for j in range(n_in):
            tot = 0.0
            for k in range(m):
                d = X[t, j] - centers[j, k]
                mubar[j, k] = math.exp(-(d * d) / (2.0 * sigmas[j, k] * sigmas[j, k]))
                tot += mubar[j, k]
            if tot > 0.0:
                lt += math.log(tot)
                for k in range(m):
                    mubar[j, k] /= tot
            else:
                lt = -np.inf
        log_total[t] = lt
        for r in range(n_rules):
            p = 1.0
            for j in range(n_in):
                p *= mubar[j, rules[r, j]]
            wbar[t, r] = p
    return wbar, log_total


@njit(cache=True)
def design_matrix(wbar, X):
    n_rows, n_in = X.shape
    n_rules = wbar.shape[1]
    width = n_in + 1
    A = np.empty((n_rows, n_rules * width))
    for t in range(n_rows):
        for r in range(n_rules):
            w = wbar[t, r]
            base = r * width
            for j in range(n_in):
                A[t, base + j] = w * X[t, j]
            A[t, base + n_in] = w
    return A


@njit(cache=True)
def premise_grad(X, centers, sigmas, wbar, F, y, coef, rules):
    n_rows, n_in = X.shape
    m = centers.shape[1]
    n_rules = rules.shape[0]
    gc = np.zeros((n_in, m))
    gs = np.zeros((n_in, m))
    acc = np.empty((n_in, m))
    for t in range(n_rows):
        acc[:, :] = 0.0
        for r in range(n_rules):
            v = coef[t] * (F[t, r] - y[t]) * wbar[t, r]
            for j in range(n_in):
                acc[j, rules[r, j]] += v
        for j in range(n_in):
            for k in range(m):
                d = X[t, j] - centers[j, k]
                s = sigmas[j, k]
                gc[j, k] += acc[j, k] * d / (s * s)
                gs[j, k] += acc[j, k] * d * d / (s * s * s)
    return gc, gs
