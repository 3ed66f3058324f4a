"""Closed-form catalogue of homogeneous critical points, second-variation
tests, the critical couple modulus, the flat-quartic case and the rescaling
check of the argmin over rotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import integrand_full, integrand_reduced
from .state import Params

__all__ = [
    "eta",
    "eta_inv",
    "CandidateAngles",
    "candidates",
    "second_variation_density",
    "legendre_margin",
    "LocalMinReport",
    "local_min_report",
    "mu_c_crit",
    "energy_level",
    "f_derivatives",
    "f_fourth_at_alpha2",
    "gamma_special",
    "w_new",
    "scaling_argmin_check",
    "local_minima",
    "best_constant_angle",
]

_ETA_HI = math.pi - 1e-9


def eta(alpha):
    """4 sin^2(a/2) / sin(a)."""
    a = np.asarray(alpha, dtype=float)
    s = np.sin(a)
    if np.any(s == 0.0):
        raise ValueError("eta is undefined where sin(alpha) = 0; use the limit 0 at alpha -> 0")
    out = 4.0 * np.sin(0.5 * a) ** 2 / s
    return float(out) if out.ndim == 0 else out


def _eta_prime(a: float) -> float:
    # eta = 2 tan(a/2) on (0, pi), so eta' = 1 + eta^2/4
    e = 4.0 * math.sin(0.5 * a) ** 2 / math.sin(a)
    return 1.0 + 0.25 * e * e


def eta_inv(gamma: float, tol: float = 1e-12) -> float:
    """Unique alpha in [0, pi) with eta(alpha) = gamma (bisection, then Newton polish)."""
    gamma = float(gamma)
    if gamma < 0 or not math.isfinite(gamma):
        raise ValueError(f"eta_inv needs finite gamma >= 0, got {gamma}")
    if gamma == 0.0:
        return 0.0
    lo, hi = 0.0, _ETA_HI
    if eta(hi) < gamma:
        raise ValueError(f"gamma={gamma} exceeds the bracket of eta_inv")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if eta(mid) < gamma:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10:
            break
    a = 0.5 * (lo + hi)
    for _ in range(20):
        r = eta(a) - gamma
        if abs(r) <= tol * max(1.0, gamma):
            break
        step = r / _eta_prime(a)
        a_new = a - step
        if not (lo <= a_new <= hi):
            break
        a = a_new
    return a


@dataclass(frozen=True)
class CandidateAngles:
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float | None


def candidates(p: Params, k: int = 0) -> CandidateAngles:
    g = p.gamma
    ratio = (p.mu - p.mu_c) / p.mu
    a4 = math.acos(ratio) if abs(ratio) <= 1.0 else None
    return CandidateAngles(
        alpha1=2.0 * math.pi * k,
        alpha2=math.atan(0.5 * g),
        alpha3=eta_inv(g),
        alpha4=a4,
    )


def second_variation_density(u_prime, alpha, p: Params):
    """W_aa at zero length scale."""
    c, s = np.cos(alpha), np.sin(alpha)
    B = c * u_prime - 2.0 * s
    Cc = s * u_prime + 2.0 * c
    A = s * u_prime - 4.0 * np.sin(0.5 * alpha) ** 2
    return (p.mu - p.mu_c) * B ** 2 + p.mu_c * Cc ** 2 - p.mu * A * Cc


def legendre_margin(p: Params) -> float:
    """2 mu + (mu_c - mu) sqrt(gamma^2 + 4); positive iff W_aa(gamma, alpha2) > 0."""
    return 2.0 * p.mu + (p.mu_c - p.mu) * math.sqrt(p.gamma ** 2 + 4.0)


@dataclass(frozen=True)
class LocalMinReport:
    angle: float
    w_aa: float
    is_local_min: bool
    status: str
    energy_level: float


def local_min_report(angle: float, p: Params, atol: float = 1e-12) -> LocalMinReport:
    """Legendre test at the homogeneous state (gamma x, angle).

    ``status`` is ``strict`` for w_aa > atol, ``indeterminate`` when |w_aa| <= atol
    (second variation cannot decide) and ``not_minimum`` otherwise.
    """
    w = float(second_variation_density(p.gamma, angle, p))
    if w > atol:
        status = "strict"
    elif w >= -atol:
        status = "indeterminate"
    else:
        status = "not_minimum"
    level = float(integrand_full(p.gamma, angle, 0.0, p.with_(l_c=0.0)))
    return LocalMinReport(angle=float(angle), w_aa=w, is_local_min=w > 0,
                          status=status, energy_level=level)


def mu_c_crit(mu: float, gamma: float) -> float:
    if not mu > 0:
        raise ValueError("mu must be positive")
    return mu * (1.0 - 2.0 / math.sqrt(gamma ** 2 + 4.0))


def energy_level(case: str, p: Params) -> float:
    """Energy of the homogeneous local minimizer in each parameter regime."""
    g2 = p.gamma ** 2
    if case == "muc_zero":
        if p.mu_c != 0:
            raise ValueError("case muc_zero requires mu_c = 0")
        return 0.5 * p.mu * g2
    if case == "mu_eq_muc":
        if not math.isclose(p.mu, p.mu_c, rel_tol=1e-12):
            raise ValueError("case mu_eq_muc requires mu = mu_c")
    elif case == "general":
        if legendre_margin(p) <= 0:
            raise ValueError(
                "Legendre condition 2mu + (mu_c - mu) sqrt(gamma^2 + 4) > 0 fails; "
                "the homogeneous alpha2 state is not a local minimizer"
            )
    else:
        raise ValueError(f"unknown case {case!r}")
    r = math.sqrt(g2 + 4.0)
    return p.mu * (g2 + 4.0 - 2.0 * r)


def f_derivatives(a, p: Params, gamma: float | None = None):
    """f(a) = W(gamma, a) at zero length scale and its first four derivatives."""
    g = p.gamma if gamma is None else gamma
    mu, mc = p.mu, p.mu_c
    c, s = np.cos(a), np.sin(a)
    B = g * c - 2.0 * s
    C = g * s + 2.0 * c
    f = 0.5 * mu * g * g + 0.5 * mu * (g * s - 4.0 * np.sin(0.5 * a) ** 2) ** 2 + 0.5 * mc * B ** 2
    f1 = B * ((mu - mc) * C - 2.0 * mu)
    f2 = (mu - mc) * (B ** 2 - C ** 2) + 2.0 * mu * C
    f3 = B * (2.0 * mu - 4.0 * (mu - mc) * C)
    f4 = 4.0 * (mu - mc) * (C ** 2 - B ** 2) - 2.0 * mu * C
    return f, f1, f2, f3, f4


def f_fourth_at_alpha2(p: Params) -> float:
    """12 mu^2 / (mu - mu_c), the quartic coefficient in the flat case."""
    if p.mu == p.mu_c:
        raise ValueError("closed form requires mu != mu_c")
    return 12.0 * p.mu ** 2 / (p.mu - p.mu_c)


def gamma_special(mu: float, mu_c: float) -> float:
    """The shear amount at which alpha4 coincides with alpha2."""
    if not (0.0 < mu_c < mu):
        raise ValueError(f"gamma_special needs 0 < mu_c < mu, got mu={mu}, mu_c={mu_c}")
    return 2.0 * math.sqrt(mu_c * (2.0 * mu - mu_c)) / (mu - mu_c)


def w_new(alpha, u_prime, mu: float, mu_c: float, scale: float = 1.0):
    """mu|sym(R^T (t F) - 1)|^2 + mu_c|skew(R^T (t F) - 1)|^2 for the shear F and
    the rotation about e2, with t = ``scale``."""
    c, s = np.cos(alpha), np.sin(alpha)
    t = scale
    sym2 = (t * c - 1.0) ** 2 + (t - 1.0) ** 2 + (t * (s * u_prime + c) - 1.0) ** 2 \
        + 0.5 * (t * c * u_prime) ** 2
    skw2 = 0.5 * (t * (c * u_prime - 2.0 * s)) ** 2
    return mu * sym2 + mu_c * skw2


def scaling_argmin_check(u_prime: float, p: Params, scan=None):
    """Argmin over the angle of the original and of the rescaled rotation energy.

    For mu_c >= mu the comparison energy is W_{1,1}(R; F); otherwise W_{1,0}(R; tF)
    with t = (mu - mu_c)/mu.
    """
    if scan is None:
        scan = np.arange(-math.pi, math.pi, 1e-4)
    scan = np.asarray(scan, dtype=float)
    orig = w_new(scan, u_prime, p.mu, p.mu_c)
    if p.mu_c >= p.mu:
        resc = w_new(scan, u_prime, 1.0, 1.0)
    else:
        resc = w_new(scan, u_prime, 1.0, 0.0, scale=(p.mu - p.mu_c) / p.mu)
    return float(scan[np.argmin(orig)]), float(scan[np.argmin(resc)])


def local_minima(values, grid=None):
    """Indices (or grid locations) of strict interior discrete local minima.

    Plateaus count once, at their first index.
    """
    v = np.asarray(values, dtype=float)
    idx = []
    i = 1
    n = len(v)
    while i < n - 1:
        if v[i] < v[i - 1]:
            j = i
            while j + 1 < n and v[j + 1] == v[i]:
                j += 1
            if j + 1 < n and v[j + 1] > v[i]:
                idx.append(i)
            i = j + 1
        else:
            i += 1
    idx = np.array(idx, dtype=np.int64)
    if grid is None:
        return idx
    return np.asarray(grid)[idx]


def _golden(fn, lo, hi, tol=1e-13):
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - inv * (hi - lo)
    d = lo + inv * (hi - lo)
    fc, fd = fn(c), fn(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - inv * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv * (hi - lo)
            fd = fn(d)
    return 0.5 * (lo + hi)


def best_constant_angle(p: Params, kind: str = "full", form: str | None = None,
                        lo: float = -math.pi / 2, hi: float = math.pi / 2,
                        step: float = 1e-3) -> tuple[float, float]:
    """Global minimizer over constant angles of the homogeneous density W(gamma, a).

    Returns (angle, density).  Ties are resolved toward the smaller |angle|.
    """
    q = p.with_(l_c=0.0)
    if kind == "full":
        fn = lambda a: float(integrand_full(p.gamma, a, 0.0, q, form or "quadratic"))
    else:
        fn = lambda a: float(integrand_reduced(p.gamma, a, 0.0, q, form or "wred3"))
    grid = np.arange(lo, hi + step, step)
    vals = np.array([fn(a) for a in grid])
    i = int(np.argmin(vals + 1e-15 * np.abs(grid)))
    a = _golden(fn, grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)])
    return a, fn(a)
