"""Euler-Lagrange residuals of the full and reduced problems, force stresses,
and the zero-length-scale algebraic system.

Residuals are nodal.  Interior entries hold the differential equation, the two
end entries hold the boundary-condition defects of an optional ``bc`` (zero
when no spec is given).

Two discretizations are offered.  The literal one uses three-point second
differences exactly as the equations are written.  The conservative one takes
central differences of the nodal stress and couple fluxes; it coincides with
the gradient of the discrete energy up to a factor (see ``el_residual_full``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .discretize import BoundarySpec, boundary_slopes, second_diff, slope
from .state import Params, ShearState

__all__ = [
    "ElResidual",
    "ZetaConstant",
    "stress_full",
    "stress_reduced",
    "stress_field",
    "cell_stress",
    "el_residual_full",
    "el_residual_reduced",
    "algebraic_residual",
]


@dataclass(frozen=True)
class ElResidual:
    force: np.ndarray
    moment: np.ndarray

    def interior_max(self) -> float:
        if len(self.force) <= 2:
            return 0.0
        return float(max(np.max(np.abs(self.force[1:-1])), np.max(np.abs(self.moment[1:-1]))))

    def max(self) -> float:
        return float(max(np.max(np.abs(self.force)), np.max(np.abs(self.moment))))


@dataclass(frozen=True)
class ZetaConstant:
    zeta: float

    @classmethod
    def from_slope(cls, u_prime0: float, alpha_d: float) -> "ZetaConstant":
        return cls((1.0 + alpha_d ** 2) * u_prime0 - alpha_d ** 3)

    @classmethod
    def from_state(cls, state: ShearState, alpha_d: float) -> "ZetaConstant":
        s0, _ = boundary_slopes(state.u, state.grid)
        return cls.from_slope(s0, alpha_d)


def stress_full(u_prime, alpha, p: Params):
    """Force stress dW/du' of the exact density."""
    s, c = np.sin(alpha), np.cos(alpha)
    return (p.mu * (u_prime + s * (s * u_prime - 4.0 * np.sin(0.5 * alpha) ** 2))
            + p.mu_c * c * (c * u_prime - 2.0 * s))


def stress_reduced(u_prime, alpha, p: Params, form: str = "wred3"):
    """Force stress dW_red/du'; ``form`` selects the wred3 or wred2 coupling part."""
    a = np.asarray(alpha, dtype=float)
    mu_part = p.mu * (u_prime - a ** 2 * (a - u_prime))
    if form == "wred3":
        k = 0.5 * (2.0 - a ** 2) * u_prime - (6.0 * a - a ** 3) / 3.0
        return mu_part + p.mu_c * 0.5 * (2.0 - a ** 2) * k
    if form in ("wred2", "wred"):
        return mu_part + p.mu_c * ((1.0 - a ** 2) * u_prime + 4.0 * a ** 3 / 3.0 - 2.0 * a)
    raise ValueError(f"unknown reduced form {form!r}")


def stress_field(state: ShearState, p: Params, kind: str = "full", form: str | None = None):
    """Nodal stress using the energy's slope operator."""
    up = slope(state.u, state.grid)
    if kind == "full":
        return stress_full(up, state.alpha, p)
    return stress_reduced(up, state.alpha, p, form or "wred3")


def cell_stress(state: ShearState, p: Params, kind: str = "full", form: str | None = None):
    """Stress averaged over each cell, (tau_i + tau_{i+1})/2.

    With central slopes nodal stress can alternate between even and odd nodes even
    at a discrete critical point; these cell averages are what the discrete force
    balance actually makes constant.
    """
    tau = stress_field(state, p, kind, form)
    return 0.5 * (tau[1:] + tau[:-1])


def _bc_entries(force, moment, state, bc):
    if bc is None:
        force[0] = force[-1] = moment[0] = moment[-1] = 0.0
        return
    d = bc.defects(state)
    force[0], force[-1] = d["u0"], d["u1"]
    moment[0], moment[-1] = d["alpha0"], d["alpha1"]


def _central(f, h):
    out = np.zeros_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    return out


def el_residual_full(state: ShearState, p: Params, bc: BoundarySpec | None = None,
                     conservative: bool = False) -> ElResidual:
    """Force and moment balance of the exact energy.

    Literal: force = [2mu + (mu_c - mu)cos^2 a] u'' - rhs1, moment = 4 mu L_c^2 a'' - rhs2.
    Conservative: force = D(tau), moment = D(4 mu L_c^2 a') - W_a, which equal
    -g_u/h and -g_a/h of the discrete energy gradient at interior nodes.
    """
    g = state.grid
    u, a = state.u, state.alpha
    mu, mc, lc = p.mu, p.mu_c, p.l_c
    if conservative:
        up = slope(u, g)
        ap = slope(a, g)
        _, Wp, Wa, Wap = K.full_terms(up, np.ascontiguousarray(a), ap, mu, mc, lc)
        force = _central(Wp, g.h)
        moment = _central(Wap, g.h) - Wa
    else:
        if g.n < 5:
            raise ValueError("literal residuals need at least 5 nodes")
        up = slope(u, g)
        ap = slope(a, g)
        upp = second_diff(u, g)
        app = second_diff(a, g)
        s, c = np.sin(a), np.cos(a)
        rhs1 = 2.0 * (mc - mu) * (s * c * up + c * c - s * s) * ap + 2.0 * mu * c * ap
        force = (2.0 * mu + (mc - mu) * c * c) * upp - rhs1
        B = c * up - 2.0 * s
        A = s * up - 4.0 * np.sin(0.5 * a) ** 2
        rhs2 = B * ((mu - mc) * A - 2.0 * mc)
        moment = 4.0 * mu * lc ** 2 * app - rhs2
    _bc_entries(force, moment, state, bc)
    return ElResidual(force, moment)


def el_residual_reduced(state: ShearState, p: Params, include_underlined: bool = True,
                        bc: BoundarySpec | None = None, conservative: bool = False) -> ElResidual:
    """Force and moment balance of the reduced energy.

    ``include_underlined`` keeps the higher-order terms that belong to the wred3
    representation; without them the equations are those of wred2.  The force
    follows the written sign convention, force = -d(tau_red)/dx, and the moment
    equals (W_a - 4 mu L_c^2 a'')/4.  In conservative mode they equal +g_u/h and
    +g_a/(4h) of the discrete energy gradient.
    """
    g = state.grid
    u, a = state.u, state.alpha
    mu, mc, lc = p.mu, p.mu_c, p.l_c
    U = 1.0 if include_underlined else 0.0
    if conservative:
        up = slope(u, g)
        ap = slope(a, g)
        _, Wp, Wa, Wap = K.reduced_terms(up, np.ascontiguousarray(a), ap, mu, mc, lc,
                                         include_underlined)
        force = -_central(Wp, g.h)
        moment = 0.25 * (Wa - _central(Wap, g.h))
    else:
        if g.n < 5:
            raise ValueError("literal residuals need at least 5 nodes")
        up = slope(u, g)
        ap = slope(a, g)
        upp = second_diff(u, g)
        app = second_diff(a, g)
        lhs = -(mu * (1.0 + a ** 2) + mc * (1.0 - a ** 2 + U * 0.25 * a ** 4)) * upp
        rhs = ((4.0 * mc - 3.0 * mu) * a ** 2 * ap + 2.0 * (mu - mc) * a * ap * up
               - 2.0 * mc * ap + U * mc * a ** 3 * (up - 5.0 * a / 6.0) * ap)
        force = lhs - rhs
        moment = (mu * (-lc ** 2 * app + 0.5 * a ** 3 - 0.75 * a ** 2 * up + 0.25 * a * up ** 2)
                  + mc * (-0.25 * a * up ** 2 + a ** 2 * up - 2.0 * a ** 3 / 3.0 + a - 0.5 * up)
                  + U * mc * (a ** 3 * up ** 2 / 8.0 - 5.0 * a ** 4 * up / 24.0 + a ** 5 / 12.0))
    _bc_entries(force, moment, state, bc)
    return ElResidual(force, moment)


def algebraic_residual(state: ShearState, p: Params, zeta) -> ElResidual:
    """Nodal residuals of the zero-length-scale system (mu_c = 0, L_c = 0)."""
    if p.l_c != 0 or p.mu_c != 0:
        raise ValueError("the algebraic limit system requires l_c = 0 and mu_c = 0")
    z = zeta.zeta if isinstance(zeta, ZetaConstant) else float(zeta)
    up = slope(state.u, state.grid)
    a = state.alpha
    force = (up - z) * (up + up ** 3 / 8.0 - z)
    moment = a * (a - up) * (a - 0.5 * up)
    return ElResidual(force, moment)
