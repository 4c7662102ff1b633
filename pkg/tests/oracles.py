"""Independent scalar-loop reference implementations used by the tests.

Deliberately naive: plain Python loops and ``math`` only, no package code.
"""

import math

import numpy as np


def rel_loop(y, y_hat):
    y, y_hat = np.ravel(y).tolist(), np.ravel(y_hat).tolist()
    return math.fsum(abs(a - b) / a for a, b in zip(y, y_hat)) / len(y)


def rms_loop(y, y_hat):
    y, y_hat = np.ravel(y).tolist(), np.ravel(y_hat).tolist()
    return math.sqrt(math.fsum((a - b) ** 2 for a, b in zip(y, y_hat)) / len(y))


def log10_loop(y, y_hat):
    y, y_hat = np.ravel(y).tolist(), np.ravel(y_hat).tolist()
    return math.fsum(abs(math.log10(a) - math.log10(b)) for a, b in zip(y, y_hat)) / len(y)


def delta_loop(y, y_hat, i):
    y, y_hat = np.ravel(y).tolist(), np.ravel(y_hat).tolist()
    thresh = 1.25**i
    hits = sum(1 for a, b in zip(y, y_hat) if max(a / b, b / a) < thresh)
    return hits / len(y)


def ssim_loop(a, b, size=11, sigma=1.5, data_range=1.0):
    """Wang et al. SSIM over valid window positions, single plane."""
    a = np.asarray(a, dtype=float).tolist()
    b = np.asarray(b, dtype=float).tolist()
    half = (size - 1) / 2.0
    g = [math.exp(-((i - half) ** 2) / (2 * sigma * sigma)) for i in range(size)]
    gs = math.fsum(g)
    w = [[g[i] * g[j] / (gs * gs) for j in range(size)] for i in range(size)]
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    h, wd = len(a), len(a[0])
    vals = []
    for y0 in range(h - size + 1):
        for x0 in range(wd - size + 1):
            cells = [(w[i][j], a[y0 + i][x0 + j], b[y0 + i][x0 + j]) for i in range(size) for j in range(size)]
            ma = math.fsum(wt * p for wt, p, _ in cells)
            mb = math.fsum(wt * q for wt, _, q in cells)
            va = math.fsum(wt * (p - ma) ** 2 for wt, p, _ in cells)
            vb = math.fsum(wt * (q - mb) ** 2 for wt, _, q in cells)
            cov = math.fsum(wt * (p - ma) * (q - mb) for wt, p, q in cells)
            vals.append(((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
    return math.fsum(vals) / len(vals)


def scatter_double_loop(clean, depth, k, gamma, cutoff=3.0, mode="verbatim", eps=0.25):
    """Literal O(N^2) sum over (target, source) pairs."""
    h, w = depth.shape
    out = np.zeros((h, w, 3))
    for c in range(3):
        for sy in range(h):
            for sx in range(w):
                src = k[sy, sx, c] * clean[sy, sx, c]
                sigma = gamma[c] * depth[sy, sx]
                if sigma < eps:
                    out[sy, sx, c] += src
                    continue
                pref = 1 / (2 * math.pi * sigma) if mode == "verbatim" else 1 / (2 * math.pi * sigma * sigma)
                r = math.floor(cutoff * sigma)
                for ty in range(h):
                    for tx in range(w):
                        if abs(ty - sy) <= r and abs(tx - sx) <= r:
                            d2 = (ty - sy) ** 2 + (tx - sx) ** 2
                            out[ty, tx, c] += src * pref * math.exp(-d2 / (2 * sigma * sigma))
    return out


def central_difference(f, theta, h=1e-5):
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (f(up) - f(dn)) / (2 * h)
    return grad
