"""Dense BFGS minimization of the discrete energy, Jacobian-free Newton-GMRES
for the zero-length-scale algebraic system, and seeded two-well initial states.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .analysis import volume_fraction
from .discretize import BoundarySpec, DofMap, NewtonPacking
from .model import energy, objective
from .state import Grid, Params, ShearState

log = logging.getLogger(__name__)

__all__ = [
    "SolveOptions",
    "SolveReport",
    "GmresInfo",
    "gmres",
    "minimize_bfgs",
    "newton_residual",
    "solve_newton_gmres",
    "init_microstructure",
    "perturb_angles",
]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 20000
    grad_tol: float = 1e-8
    fd_delta: float | None = None
    gmres_restart: int = 200
    gmres_tol: float = 1e-10
    gmres_max_iters: int = 2000
    line_search: str = "wolfe"
    seed: int = 0
    c1: float = 1e-4
    c2: float = 0.9
    h0: str = "scaled_identity"

    def __post_init__(self):
        if not (self.grad_tol > 0 and self.gmres_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.fd_delta is not None and not self.fd_delta > 0:
            raise ValueError("fd_delta must be positive")
        if self.h0 not in ("scaled_identity", "hessian"):
            raise ValueError(f"unknown initial inverse Hessian {self.h0!r}")
        if self.line_search not in ("wolfe", "armijo"):
            raise ValueError(f"unknown line search {self.line_search!r}")

    def with_(self, **changes) -> "SolveOptions":
        return replace(self, **changes)


@dataclass
class SolveReport:
    state: ShearState
    energy: float
    iterations: int
    theta: float
    converged: bool
    method: str
    grad_norm: float | None = None
    residual_norm: float | None = None
    message: str = ""
    n_free: int = 0
    func_evals: int = 0
    history: list = field(default_factory=list, repr=False)
    extra: dict = field(default_factory=dict)

    @property
    def norm(self) -> float:
        return self.grad_norm if self.grad_norm is not None else self.residual_norm


# --------------------------------------------------------------------------
# GMRES
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GmresInfo:
    converged: bool
    iterations: int
    residual_norm: float
    stagnated: bool


def gmres(matvec, rhs, opts: SolveOptions | None = None, x0=None, return_info: bool = False):
    """Restarted GMRES with Givens rotations; converged when
    ||A x - b|| <= gmres_tol * ||b||."""
    opts = opts or SolveOptions()
    b = np.asarray(rhs, dtype=float)
    n = b.size
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        info = GmresInfo(True, 0, 0.0, False)
        return (x, info) if return_info else x
    target = opts.gmres_tol * bnorm
    m = max(1, min(opts.gmres_restart, n))
    total = 0
    r = b - matvec(x) if x0 is not None else b.copy()
    beta = np.linalg.norm(r)
    stagnated = False
    while True:
        if beta <= target:
            break
        if total >= opts.gmres_max_iters:
            break
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        e = np.zeros(m + 1)
        e[0] = beta
        V[0] = r / beta
        k_used = 0
        for j in range(m):
            w = matvec(V[j])
            for i in range(j + 1):  # modified Gram-Schmidt
                H[i, j] = w @ V[i]
                w = w - H[i, j] * V[i]
            H[j + 1, j] = np.linalg.norm(w)
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = math.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                k_used = j
                break
            cs[j] = H[j, j] / denom
            sn[j] = H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            e[j + 1] = -sn[j] * e[j]
            e[j] = cs[j] * e[j]
            total += 1
            k_used = j + 1
            if abs(e[j + 1]) <= target or total >= opts.gmres_max_iters:
                break
            nxt = np.linalg.norm(w)
            if nxt <= 1e-14 * denom:  # lucky breakdown: the Krylov space is invariant
                break
            V[j + 1] = w / nxt
        if k_used == 0:
            stagnated = True
            break
        y = np.linalg.solve(np.triu(H[:k_used, :k_used]), e[:k_used])
        x = x + V[:k_used].T @ y
        r = b - matvec(x)
        new_beta = np.linalg.norm(r)
        if new_beta >= beta * (1.0 - 1e-12) and new_beta > target:
            stagnated = True
            beta = new_beta
            break
        beta = new_beta
    info = GmresInfo(beta <= target, total, float(beta), stagnated)
    return (x, info) if return_info else x


# --------------------------------------------------------------------------
# line searches
# --------------------------------------------------------------------------

def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic interpolant on [a, b], or None."""
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    rad = d1 * d1 - ga * gb
    if rad < 0:
        return None
    d2 = math.copysign(math.sqrt(rad), b - a)
    denom = gb - ga + 2.0 * d2
    if denom == 0:
        return None
    return b - (b - a) * (gb + d2 - d1) / denom


# Relative size below which energy differences are treated as rounding noise.
_FLAT = 1e-13


def _approx_ok(f, g, f0, g0, c2, eps_f):
    """Approximate Wolfe acceptance: once the energy change is at rounding level,
    sufficient decrease cannot be resolved, so accept a point that keeps the
    energy within eps_f and meets the strong curvature condition."""
    return f - f0 <= eps_f and abs(f - f0) <= eps_f and abs(g) <= -c2 * g0


def _wolfe(phi, f0, g0, c1, c2, step0=1.0, max_eval=40):
    """Strong-Wolfe line search with cubic-interpolation zoom.

    ``phi(t)`` returns (f, directional derivative, payload).  Returns
    (t, f, payload) or None on failure.
    """
    t_prev, f_prev, g_prev = 0.0, f0, g0
    t = step0
    n_eval = 0
    best = None
    eps_f = _FLAT * abs(f0)
    while n_eval < max_eval:
        f, g, pay = phi(t)
        n_eval += 1
        if not math.isfinite(f):
            t = 0.5 * (t_prev + t)
            continue
        if best is None or f < best[1]:
            best = (t, f, pay)
        if _approx_ok(f, g, f0, g0, c2, eps_f):
            return t, f, pay
        if f > f0 + c1 * t * g0 or (n_eval > 1 and f >= f_prev):
            return _zoom(phi, t_prev, f_prev, g_prev, t, f, g, f0, g0, c1, c2, max_eval - n_eval, best)
        if abs(g) <= -c2 * g0:
            return t, f, pay
        if g >= 0:
            return _zoom(phi, t, f, g, t_prev, f_prev, g_prev, f0, g0, c1, c2, max_eval - n_eval, best)
        t_prev, f_prev, g_prev = t, f, g
        t = 2.0 * t
    return None


def _zoom(phi, lo, flo, glo, hi, fhi, ghi, f0, g0, c1, c2, budget, best):
    for _ in range(max(budget, 1)):
        t = _cubic_min(lo, flo, glo, hi, fhi, ghi)
        a, b = min(lo, hi), max(lo, hi)
        width = b - a
        if t is None or not (a + 0.1 * width <= t <= b - 0.1 * width):
            t = 0.5 * (lo + hi)
        f, g, pay = phi(t)
        if _approx_ok(f, g, f0, g0, c2, _FLAT * abs(f0)):
            return t, f, pay
        if f > f0 + c1 * t * g0 or f >= flo:
            hi, fhi, ghi = t, f, g
        else:
            if abs(g) <= -c2 * g0:
                return t, f, pay
            if g * (hi - lo) >= 0:
                hi, fhi, ghi = lo, flo, glo
            lo, flo, glo = t, f, g
        if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
            break
    # accept a point with sufficient decrease even if curvature was not reached
    if best is not None and best[1] < f0 + c1 * best[0] * g0 and best[0] > 0:
        return best
    if flo < f0 and lo > 0:
        return lo, flo, None
    return None


def _armijo(phi, f0, g0, c1, step0=1.0, max_eval=60):
    t = step0
    for _ in range(max_eval):
        f, _, pay = phi(t)
        if math.isfinite(f) and f <= f0 + c1 * t * g0:
            return t, f, pay
        t *= 0.5
    return None


# --------------------------------------------------------------------------
# BFGS
# --------------------------------------------------------------------------

def _inverse_hessian_fd(grad, x, rel_floor: float = 1e-10) -> np.ndarray:
    """Inverse of the central-difference Hessian of ``grad`` at ``x`` with
    eigenvalues replaced by max(|lambda|, floor) so the result is SPD."""
    n = x.size
    Hs = np.empty((n, n))
    step = 1e-6 * max(1.0, float(np.max(np.abs(x)))) if n else 1e-6
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        Hs[i] = (grad(x + e) - grad(x - e)) / (2.0 * step)
    Hs = 0.5 * (Hs + Hs.T)
    lam, Q = np.linalg.eigh(Hs)
    floor = rel_floor * max(float(np.max(np.abs(lam))), 1e-300)
    lam = np.maximum(np.abs(lam), floor)
    return (Q / lam) @ Q.T


def minimize_bfgs(init: ShearState, p: Params, bc: BoundarySpec, kind: str = "full",
                  opts: SolveOptions | None = None, form: str | None = None,
                  callback=None) -> SolveReport:
    """Dense BFGS on the free DOFs of ``bc``.

    The inverse Hessian starts as I/||g0|| and is rescaled by s'y/y'y after the
    first accepted step.  Updates with s'y <= 1e-12 are skipped.  A failed line
    search resets the inverse Hessian once before giving up.
    """
    opts = opts or SolveOptions()
    dofs = DofMap(init.grid, bc)
    x = dofs.pack(init)
    n = dofs.size
    evals = [0]

    def fg(z):
        evals[0] += 1
        return objective(z, dofs, p, kind, form)

    f, g = fg(x)
    history = [f]
    gnorm = float(np.max(np.abs(g))) if n else 0.0

    def initial_inverse():
        if opts.h0 == "hessian":
            return _inverse_hessian_fd(lambda z: fg(z)[1], x)
        return np.eye(n) / max(np.linalg.norm(g), 1e-300)

    H = initial_inverse()
    first = opts.h0 != "hessian"
    resets = 0
    message = "max iterations reached"
    it = 0
    converged = gnorm <= opts.grad_tol
    if converged:
        message = "initial state already stationary"
    while not converged and it < opts.max_iters:
        d = -(H @ g)
        slope0 = float(d @ g)
        if not slope0 < 0:
            H = np.eye(n) / max(np.linalg.norm(g), 1e-300)
            d = -(H @ g)
            slope0 = float(d @ g)

        def phi(t, _x=x, _d=d):
            ft, gt = fg(_x + t * _d)
            return ft, float(gt @ _d), gt

        if opts.line_search == "wolfe":
            res = _wolfe(phi, f, slope0, opts.c1, opts.c2)
        else:
            res = _armijo(phi, f, slope0, opts.c1)
        if res is None or res[0] <= 0:
            if resets == 0:
                resets += 1
                H = initial_inverse()
                first = opts.h0 != "hessian"
                continue
            message = "line search failed"
            break
        t, f_new, g_new = res
        if g_new is None:
            f_new, g_new = fg(x + t * d)
        s = t * d
        y = g_new - g
        x = x + s
        f, g = f_new, g_new
        history.append(f)
        it += 1
        resets = 0
        gnorm = float(np.max(np.abs(g)))
        if callback is not None:
            callback(it, f, gnorm)
        sy = float(s @ y)
        if sy > 1e-12:
            if first:
                H = np.eye(n) * (sy / float(y @ y))
                first = False
            K.bfgs_update(H, s, y)
        if gnorm <= opts.grad_tol:
            converged = True
            message = "gradient tolerance reached"
    state = dofs.unpack(x)
    return SolveReport(
        state=state,
        energy=float(f),
        iterations=it,
        theta=volume_fraction(state.alpha, state.grid),
        converged=bool(converged),
        method="bfgs",
        grad_norm=gnorm,
        message=message,
        n_free=n,
        func_evals=evals[0],
        history=history,
    )


# --------------------------------------------------------------------------
# Newton-GMRES on the algebraic limit system
# --------------------------------------------------------------------------

def newton_residual(x, pack: NewtonPacking) -> np.ndarray:
    """G(x): angle equation and slope equation at interior nodes, then the
    definition of zeta from the end slope u'(0)."""
    u, a, zeta = pack.split(x)
    h = pack.grid.h
    up = (u[2:] - u[:-2]) / (2.0 * h)
    ai = a[1:-1]
    lim1 = ai * (ai - up) * (ai - 0.5 * up)
    lim2 = (up - zeta) * (up + up ** 3 / 8.0 - zeta)
    ad = pack.alpha_d
    zdef = zeta - ((1.0 + ad * ad) * (u[1] - u[0]) / h - ad ** 3)
    return np.concatenate([lim1, lim2, [zdef]])


def solve_newton_gmres(init: ShearState, p: Params, theta: float | None = None,
                       opts: SolveOptions | None = None, tol: float = 1e-10,
                       max_newton: int = 100) -> SolveReport:
    """Newton iteration on G(x) = 0 over 2N-3 unknowns with FD-matvec GMRES.

    The volume fraction enters through ``init`` (see ``init_microstructure``);
    the measured fraction of the result is reported together with its defect
    against ``theta``.  The symmetry u'(0) = u'(1) of the limit boundary set is
    reported as a diagnostic, not imposed.
    """
    if p.l_c != 0 or p.mu_c != 0:
        raise ValueError("Newton-GMRES solves the limit system with l_c = 0 and mu_c = 0")
    if theta is not None and not (0.0 <= theta <= 1.0):
        raise ValueError("theta must lie in [0, 1]")
    opts = opts or SolveOptions()
    g = init.grid
    pack = NewtonPacking(g, p.gamma, p.alpha_d)
    u0 = np.array(init.u)
    u0[0], u0[-1] = 0.0, p.gamma
    zeta0 = (1.0 + p.alpha_d ** 2) * (u0[1] - u0[0]) / g.h - p.alpha_d ** 3
    x = np.concatenate([u0[1:-1], init.alpha[1:-1], [zeta0]])
    G = newton_residual(x, pack)
    rnorm = float(np.max(np.abs(G)))
    history = [rnorm]
    it = 0
    rejections = 0
    lin_its = 0
    message = "max Newton iterations reached"
    converged = rnorm <= tol
    while not converged and it < max_newton:
        xn = float(np.linalg.norm(x))

        def matvec(d, _x=x, _G=G, _xn=xn):
            dn = np.linalg.norm(d)
            if dn == 0.0:
                return np.zeros_like(d)
            if opts.fd_delta is None:
                delta = math.sqrt(_EPS) * (1.0 + _xn) / dn
            else:
                delta = opts.fd_delta / dn
            return (newton_residual(_x + delta * d, pack) - _G) / delta

        dx, info = gmres(matvec, -G, opts, return_info=True)
        lin_its += info.iterations
        g2 = float(np.linalg.norm(G))
        lam = 1.0
        accepted = False
        while lam >= 1e-4:
            x_try = x + lam * dx
            G_try = newton_residual(x_try, pack)
            if np.linalg.norm(G_try) <= (1.0 - 1e-4 * lam) * g2:
                accepted = True
                break
            lam *= 0.5
        it += 1
        if not accepted:
            rejections += 1
            if rejections >= 3:
                message = "stagnation: Newton step rejected repeatedly"
                break
            continue
        rejections = 0
        x, G = x_try, G_try
        rnorm = float(np.max(np.abs(G)))
        history.append(rnorm)
        if rnorm <= tol:
            converged = True
            message = "residual tolerance reached"
    state, zeta = pack.unpack(x)
    th = volume_fraction(state.alpha, g)
    q = p.with_(l_c=0.0, mu_c=0.0)
    up = (state.u[2:] - state.u[:-2]) / (2.0 * g.h)
    s0 = (state.u[1] - state.u[0]) / g.h
    s1 = (state.u[-1] - state.u[-2]) / g.h
    extra = {
        "zeta": zeta,
        "linear_iterations": lin_its,
        "symmetry_defect": float(s0 - s1),
        "theta_target": theta,
        "theta_defect": None if theta is None else float(abs(th - theta)),
        "central_slopes": up,
    }
    return SolveReport(
        state=state,
        energy=energy(state, q, "reduced"),
        iterations=it,
        theta=th,
        converged=bool(converged),
        method="newton-gmres",
        residual_norm=rnorm,
        message=message,
        n_free=pack.size,
        history=history,
        extra=extra,
    )


# --------------------------------------------------------------------------
# initial states
# --------------------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def init_microstructure(g: Grid, gamma: float, theta: float, seed: int = 0,
                        end_alpha: float | None = None, tol: float = 0.05) -> ShearState:
    """Two-well start: u is the affine shear, alpha is 0 on a seeded random set of
    nodes and gamma elsewhere, sized so that the trapezoid measure of {alpha = 0}
    is within half a cell of ``theta``.

    Node selection draws a permutation of the interior nodes from a PCG64
    generator seeded with ``seed``.  ``end_alpha`` fixes the two end angles (for
    Dirichlet data); otherwise both ends take 0 when theta >= 1/2 and gamma
    otherwise.
    """
    if not (0.0 <= theta <= 1.0):
        raise ValueError("theta must lie in [0, 1]")
    n = g.n
    if end_alpha is None:
        end = 0.0 if theta >= 0.5 else float(gamma)
    else:
        end = float(end_alpha)
    e = 1.0 if abs(end) <= tol else 0.0
    k = int(np.clip(round(theta * (n - 1) - e), 0, n - 2))
    alpha = np.full(n, float(gamma))
    alpha[0] = alpha[-1] = end
    chosen = 1 + _rng(seed).permutation(n - 2)[:k]
    alpha[chosen] = 0.0
    return ShearState(g, gamma * g.nodes, alpha)


def perturb_angles(state: ShearState, amplitude: float, seed: int = 0,
                   interior_only: bool = True) -> ShearState:
    """Add seeded Gaussian noise of the given amplitude to the angle field."""
    noise = amplitude * _rng(seed).standard_normal(state.grid.n)
    if interior_only:
        noise[0] = noise[-1] = 0.0
    return ShearState(state.grid, state.u, state.alpha + noise)
