"""Energy densities of the 1D Cosserat shear problem, the discrete energy and
its analytic gradient, the double-well potential split and a 3x3 cross-check
of the shear ansatz.

Scalar-level functions broadcast over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .discretize import BoundarySpec, DofMap, slope, trapezoid
from .state import Grid, Params, ShearState

__all__ = [
    "Params",
    "Grid",
    "ShearState",
    "PotentialSplit",
    "integrand_full",
    "integrand_reduced",
    "energy",
    "energy_density",
    "energy_gradient",
    "objective",
    "potential_split",
    "integrand_3d_check",
]

FULL_FORMS = ("quadratic", "direct")
REDUCED_FORMS = ("wred3", "wred2", "wred")


def integrand_full(u_prime, alpha, alpha_prime, p: Params, form: str = "quadratic"):
    """Density W(u', alpha, alpha') of the exact energy.

    ``direct`` is the expanded trigonometric form, ``quadratic`` the
    sum-of-squares rearrangement; both agree identically.
    """
    up = np.asarray(u_prime, dtype=float)
    a = np.asarray(alpha, dtype=float)
    ap = np.asarray(alpha_prime, dtype=float)
    curv = 2.0 * p.l_c ** 2 * ap ** 2
    if form == "quadratic":
        bulk = up ** 2 + (np.sin(a) * up - 4.0 * np.sin(0.5 * a) ** 2) ** 2
        couple = (np.cos(a) * up - 2.0 * np.sin(a)) ** 2
        return p.mu * curv + 0.5 * p.mu * bulk + 0.5 * p.mu_c * couple
    if form == "direct":
        c, s = np.cos(a), np.sin(a)
        bulk = 2.0 * (c - 1.0) ** 2 + 0.5 * (1.0 + s ** 2) * up ** 2 + 2.0 * (c - 1.0) * s * up
        couple = c ** 2 * (2.0 * np.tan(a) - up) ** 2
        return p.mu * (curv + bulk) + 0.5 * p.mu_c * couple
    raise ValueError(f"unknown full form {form!r}; expected one of {FULL_FORMS}")


def integrand_reduced(u_prime, alpha, alpha_prime, p: Params, form: str = "wred3"):
    """Density of the third-order reduced energy in one of its three representations."""
    up = np.asarray(u_prime, dtype=float)
    a = np.asarray(alpha, dtype=float)
    ap = np.asarray(alpha_prime, dtype=float)
    curv = 2.0 * p.l_c ** 2 * ap ** 2
    if form == "wred":
        mu_part = curv + 0.5 * (1.0 + a ** 2) * up ** 2 + 0.5 * a ** 4 - a ** 3 * up
        c_part = 2.0 * (0.5 * up - a) * (0.5 * up - a - a ** 2 / 6.0 * (3.0 * up - 2.0 * a))
        return p.mu * mu_part + p.mu_c * c_part
    mu_part = p.mu * curv + 0.5 * p.mu * (up ** 2 + (a * (a - up)) ** 2)
    if form == "wred2":
        c_part = (
            (1.0 - a ** 2) * up ** 2 + (8.0 * a ** 2 / 3.0 - 4.0) * a * up
            + 4.0 * a ** 2 - 4.0 * a ** 4 / 3.0
        )
        return mu_part + 0.5 * p.mu_c * c_part
    if form == "wred3":
        k = 0.5 * (2.0 - a ** 2) * up - (6.0 * a - a ** 3) / 3.0
        return mu_part + 0.5 * p.mu_c * k ** 2
    raise ValueError(f"unknown reduced form {form!r}; expected one of {REDUCED_FORMS}")


def _default_form(kind: str, form: str | None) -> str:
    if kind == "full":
        form = form or "quadratic"
        if form not in FULL_FORMS:
            raise ValueError(f"form {form!r} does not belong to the full energy")
    elif kind == "reduced":
        form = form or "wred3"
        if form not in REDUCED_FORMS:
            raise ValueError(f"form {form!r} does not belong to the reduced energy")
    else:
        raise ValueError(f"unknown energy kind {kind!r}; expected 'full' or 'reduced'")
    return form


def _nodal_terms(u, alpha, grid: Grid, p: Params, kind: str, form: str):
    """Nodal slopes and integrand partials (W, W_p, W_a, W_a')."""
    up = K.ddx(np.ascontiguousarray(u, dtype=float), grid.h)
    ap = K.ddx(np.ascontiguousarray(alpha, dtype=float), grid.h)
    a = np.ascontiguousarray(alpha, dtype=float)
    if kind == "full":
        terms = K.full_terms(up, a, ap, p.mu, p.mu_c, p.l_c)
    else:
        terms = K.reduced_terms(up, a, ap, p.mu, p.mu_c, p.l_c, form != "wred2")
    return up, ap, terms


def energy_density(state: ShearState, p: Params, kind: str = "full", form: str | None = None):
    form = _default_form(kind, form)
    g = state.grid
    up = slope(state.u, g)
    ap = slope(state.alpha, g)
    if kind == "full":
        return integrand_full(up, state.alpha, ap, p, form)
    return integrand_reduced(up, state.alpha, ap, p, form)


def energy(state: ShearState, p: Params, kind: str = "full", form: str | None = None) -> float:
    """Trapezoid-rule energy with slopes from the energy's difference operator."""
    if state.grid.n < 3:
        raise ValueError("energy needs at least 3 nodes")
    return trapezoid(energy_density(state, p, kind, form), state.grid)


def nodal_gradient(u, alpha, grid: Grid, p: Params, kind: str = "full", form: str | None = None):
    """Energy and its partial derivatives with respect to every nodal value."""
    form = _default_form(kind, form)
    if form in ("direct", "wred"):
        # algebraically identical to the fast representations
        form = "quadratic" if kind == "full" else "wred2"
    _, _, (W, Wp, Wa, Wap) = _nodal_terms(u, alpha, grid, p, kind, form)
    w = grid.weights
    E = float(w @ W)
    gu = K.ddx_T(w * Wp, grid.h)
    ga = w * Wa + K.ddx_T(w * Wap, grid.h)
    return E, gu, ga


def objective(x, dofs: DofMap, p: Params, kind: str = "full", form: str | None = None):
    """(energy, gradient) as a function of the packed free vector."""
    u = dofs.fill_u(x)
    a = dofs.fill_alpha(u, x)
    E, gu, ga = nodal_gradient(u, a, dofs.grid, p, kind, form)
    return E, dofs.pullback(gu, ga, u)


def energy_gradient(state: ShearState, p: Params, kind: str = "full",
                    bc: BoundarySpec | None = None, form: str | None = None):
    """Gradient of the discrete energy over the free DOFs of ``bc``, as nodal fields.

    Entries of constrained or eliminated nodes are zero.  Without ``bc`` the plain
    nodal partials are returned.
    """
    E, gu, ga = nodal_gradient(state.u, state.alpha, state.grid, p, kind, form)
    if bc is None:
        return gu, ga
    dofs = DofMap(state.grid, bc)
    return dofs.to_fields(dofs.pullback(gu, ga, state.u))


@dataclass(frozen=True)
class PotentialSplit:
    phi: float
    q: float

    def combined(self, mu: float, mu_c: float):
        return mu * self.phi + mu_c * self.q


def potential_split(alpha, u_prime) -> PotentialSplit:
    """The two double-well potentials of the reduced angle equation."""
    a = np.asarray(alpha, dtype=float)
    up = np.asarray(u_prime, dtype=float)
    phi = (a * (a - up)) ** 2 / 8.0
    q = (0.5 * (2.0 - a ** 2) * up - (6.0 * a - a ** 3) / 3.0) ** 2 / 8.0
    return PotentialSplit(phi=phi, q=q)


def deformation_gradient(u_prime: float) -> np.ndarray:
    F = np.eye(3)
    F[0, 2] = u_prime
    return F


def microrotation(alpha: float) -> np.ndarray:
    c, s = np.cos(alpha), np.sin(alpha)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def integrand_3d_check(u_prime: float, alpha: float, p: Params, parts: bool = False):
    """mu |sym(R^T F - 1)|^2 + mu_c |skew(R^T F - 1)|^2 built from 3x3 matrices.

    With ``parts=True`` returns (total, |sym|^2, |skew|^2, det(R^T F)).
    """
    if p.l_c != 0:
        raise ValueError("3D cross-check is defined for l_c = 0 only")
    Ubar = microrotation(alpha).T @ deformation_gradient(u_prime)
    E = Ubar - np.eye(3)
    sym = 0.5 * (E + E.T)
    skw = 0.5 * (E - E.T)
    s2 = float(np.sum(sym * sym))
    k2 = float(np.sum(skw * skw))
    total = p.mu * s2 + p.mu_c * k2
    if parts:
        return total, s2, k2, float(np.linalg.det(Ubar))
    return total
