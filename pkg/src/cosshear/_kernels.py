"""Nodal hot loops: energy densities with partial derivatives, the slope
operator and its transpose, and the dense BFGS inverse-Hessian update.

Each kernel exists twice, as a numba ``njit`` loop and as vectorized numpy.
The numba path is used when numba imports and ``COSSHEAR_DISABLE_NUMBA`` is
unset; both paths are kept importable for tests and the benchmark.
"""

from __future__ import annotations

import os

import numpy as np

_disabled = os.getenv("COSSHEAR_DISABLE_NUMBA", "").lower() in {"1", "true", "yes"}

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None

USE_NUMBA = nb is not None and not _disabled


def _njit(fn):
    if nb is None:
        return fn
    return nb.njit(cache=True)(fn)


# --------------------------------------------------------------------------
# numpy reference path
# --------------------------------------------------------------------------

def full_terms_np(p, a, ap, mu, mu_c, l_c):
    s = np.sin(a)
    c = np.cos(a)
    A = s * p - 2.0 * (1.0 - c)  # sin(a) u' - 4 sin^2(a/2)
    B = c * p - 2.0 * s
    curv = 4.0 * l_c * l_c
    W = 0.5 * mu * (curv * ap * ap + p * p + A * A) + 0.5 * mu_c * B * B
    Wp = mu * (p + A * s) + mu_c * B * c
    Wa = mu * A * B - mu_c * B * (s * p + 2.0 * c)
    Wap = mu * curv * ap
    return W, Wp, Wa, Wap


def reduced_terms_np(p, a, ap, mu, mu_c, l_c, higher):
    curv = 4.0 * l_c * l_c
    d = a * (a - p)
    Wmu = 0.5 * mu * (curv * ap * ap + p * p + d * d)
    Wp = mu * (p - a * a * (a - p))
    Wa = mu * a * (a - p) * (2.0 * a - p)
    if higher:
        k = 0.5 * (2.0 - a * a) * p - (6.0 * a - a ** 3) / 3.0
        W = Wmu + 0.5 * mu_c * k * k
        Wp = Wp + mu_c * k * 0.5 * (2.0 - a * a)
        Wa = Wa + mu_c * k * (a * a - a * p - 2.0)
    else:
        W = Wmu + 0.5 * mu_c * (
            (1.0 - a * a) * p * p + (8.0 * a * a / 3.0 - 4.0) * a * p
            + 4.0 * a * a - 4.0 * a ** 4 / 3.0
        )
        Wp = Wp + mu_c * ((1.0 - a * a) * p + 4.0 * a ** 3 / 3.0 - 2.0 * a)
        Wa = Wa + mu_c * (-a * p * p + (4.0 * a * a - 2.0) * p + 4.0 * a - 8.0 * a ** 3 / 3.0)
    Wap = mu * curv * ap
    return W, Wp, Wa, Wap


def ddx_np(f, h):
    g = np.empty_like(f)
    g[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    g[0] = (f[1] - f[0]) / h
    g[-1] = (f[-1] - f[-2]) / h
    return g


def ddx_T_np(g, h):
    out = np.zeros_like(g)
    half = g[1:-1] / (2.0 * h)
    out[2:] += half
    out[:-2] -= half
    out[1] += g[0] / h
    out[0] -= g[0] / h
    out[-1] += g[-1] / h
    out[-2] -= g[-1] / h
    return out


def bfgs_update_np(H, s, y):
    rho = 1.0 / (y @ s)
    Hy = H @ y
    yHy = y @ Hy
    H -= rho * (np.outer(s, Hy) + np.outer(Hy, s))
    H += (rho * rho * yHy + rho) * np.outer(s, s)
    return H


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

@_njit
def full_terms_nb(p, a, ap, mu, mu_c, l_c):
    n = p.shape[0]
    W = np.empty(n)
    Wp = np.empty(n)
    Wa = np.empty(n)
    Wap = np.empty(n)
    curv = 4.0 * l_c * l_c
    for i in range(n):
        s = np.sin(a[i])
        c = np.cos(a[i])
        A = s * p[i] - 2.0 * (1.0 - c)
        B = c * p[i] - 2.0 * s
        W[i] = 0.5 * mu * (curv * ap[i] * ap[i] + p[i] * p[i] + A * A) + 0.5 * mu_c * B * B
        Wp[i] = mu * (p[i] + A * s) + mu_c * B * c
        Wa[i] = mu * A * B - mu_c * B * (s * p[i] + 2.0 * c)
        Wap[i] = mu * curv * ap[i]
    return W, Wp, Wa, Wap


@_njit
def reduced_terms_nb(p, a, ap, mu, mu_c, l_c, higher):
    n = p.shape[0]
    W = np.empty(n)
    Wp = np.empty(n)
    Wa = np.empty(n)
    Wap = np.empty(n)
    curv = 4.0 * l_c * l_c
    for i in range(n):
        x = a[i]
        q = p[i]
        d = x * (x - q)
        w = 0.5 * mu * (curv * ap[i] * ap[i] + q * q + d * d)
        wp = mu * (q - x * x * (x - q))
        wa = mu * x * (x - q) * (2.0 * x - q)
        if higher:
            k = 0.5 * (2.0 - x * x) * q - (6.0 * x - x * x * x) / 3.0
            w += 0.5 * mu_c * k * k
            wp += mu_c * k * 0.5 * (2.0 - x * x)
            wa += mu_c * k * (x * x - x * q - 2.0)
        else:
            w += 0.5 * mu_c * (
                (1.0 - x * x) * q * q + (8.0 * x * x / 3.0 - 4.0) * x * q
                + 4.0 * x * x - 4.0 * x ** 4 / 3.0
            )
            wp += mu_c * ((1.0 - x * x) * q + 4.0 * x ** 3 / 3.0 - 2.0 * x)
            wa += mu_c * (-x * q * q + (4.0 * x * x - 2.0) * q + 4.0 * x - 8.0 * x ** 3 / 3.0)
        W[i] = w
        Wp[i] = wp
        Wa[i] = wa
        Wap[i] = mu * curv * ap[i]
    return W, Wp, Wa, Wap


@_njit
def ddx_nb(f, h):
    n = f.shape[0]
    g = np.empty(n)
    for i in range(1, n - 1):
        g[i] = (f[i + 1] - f[i - 1]) / (2.0 * h)
    g[0] = (f[1] - f[0]) / h
    g[n - 1] = (f[n - 1] - f[n - 2]) / h
    return g


@_njit
def ddx_T_nb(g, h):
    n = g.shape[0]
    out = np.zeros(n)
    for i in range(1, n - 1):
        v = g[i] / (2.0 * h)
        out[i + 1] += v
        out[i - 1] -= v
    out[1] += g[0] / h
    out[0] -= g[0] / h
    out[n - 1] += g[n - 1] / h
    out[n - 2] -= g[n - 1] / h
    return out


@_njit
def bfgs_update_nb(H, s, y):
    n = s.shape[0]
    ys = 0.0
    for i in range(n):
        ys += y[i] * s[i]
    rho = 1.0 / ys
    Hy = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += H[i, j] * y[j]
        Hy[i] = acc
    yHy = 0.0
    for i in range(n):
        yHy += y[i] * Hy[i]
    beta = rho * rho * yHy + rho
    for i in range(n):
        for j in range(n):
            H[i, j] += beta * s[i] * s[j] - rho * (s[i] * Hy[j] + Hy[i] * s[j])
    return H


if USE_NUMBA:
    full_terms = full_terms_nb
    reduced_terms = reduced_terms_nb
    ddx = ddx_nb
    ddx_T = ddx_T_nb
    bfgs_update = bfgs_update_nb
else:
    full_terms = full_terms_np
    reduced_terms = reduced_terms_np
    ddx = ddx_np
    ddx_T = ddx_T_np
    bfgs_update = bfgs_update_np
