"""Finite differences, trapezoidal quadrature and boundary/DOF bookkeeping.

Two slope operators live here.  ``diff`` is the general-purpose one (central
interior, second-order one-sided ends).  ``slope`` uses first-order one-sided
ends and is what the discrete energy is built on: under the trapezoid rule its
weighted sum telescopes to ``u(1) - u(0)``, so the affine shear stays the exact
discrete minimizer of the ``|u'|^2`` term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .state import Grid, ShearState, make_grid

__all__ = [
    "make_grid",
    "diff",
    "slope",
    "second_diff",
    "trapezoid",
    "BoundarySpec",
    "DofMap",
    "dof_pack",
    "dof_unpack",
    "NewtonPacking",
]

BC_KINDS = ("dirichlet_alpha", "consistent", "consistent_reduced")


def _check_len(f, grid: Grid) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n,):
        raise ValueError(f"field has shape {f.shape}, grid expects ({grid.n},)")
    return f


def diff(f, grid: Grid, edge_order: int = 2) -> np.ndarray:
    """Nodal derivative: central inside, one-sided of order ``edge_order`` at the ends."""
    f = _check_len(f, grid)
    if edge_order == 1:
        return K.ddx(np.ascontiguousarray(f), grid.h)
    return np.gradient(f, grid.h, edge_order=edge_order)


def slope(f, grid: Grid) -> np.ndarray:
    """The derivative used by the discrete energy (first-order ends)."""
    return diff(f, grid, edge_order=1)


def second_diff(f, grid: Grid) -> np.ndarray:
    """Three-point second difference inside, zero at the two end nodes."""
    f = _check_len(f, grid)
    out = np.zeros_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / grid.h ** 2
    return out


def trapezoid(density, grid: Grid) -> float:
    d = _check_len(density, grid)
    return float(grid.h * (0.5 * d[0] + d[1:-1].sum() + 0.5 * d[-1]))


def boundary_slopes(u, grid: Grid) -> tuple[float, float]:
    """One-sided end slopes u'(0), u'(1) as seen by the coupling conditions."""
    u = np.asarray(u, dtype=float)
    return (u[1] - u[0]) / grid.h, (u[-1] - u[-2]) / grid.h


@dataclass(frozen=True)
class BoundarySpec:
    """Constraint set of a solve.

    ``kind`` is one of ``dirichlet_alpha`` (prescribed end angle ``alpha_d``),
    ``consistent`` (u' = 2 tan(alpha) at both ends) or ``consistent_reduced``
    (u' = 2 alpha).  ``symmetry`` imposes u'(0) = u'(1); ``slope`` additionally
    prescribes the common end slope.  u(0) = 0 and u(1) = gamma always.
    """

    kind: str = "dirichlet_alpha"
    symmetry: bool = False
    alpha_d: float = 0.0
    gamma: float = 0.8
    slope: float | None = None

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}; expected one of {BC_KINDS}")
        if self.slope is not None and not self.symmetry:
            object.__setattr__(self, "symmetry", True)

    def end_angle(self, s):
        """Boundary angle implied by an end slope ``s`` (coupled kinds only)."""
        if self.kind == "consistent":
            return np.arctan(0.5 * s)
        if self.kind == "consistent_reduced":
            return 0.5 * s
        return self.alpha_d

    def end_angle_ds(self, s):
        if self.kind == "consistent":
            return 0.5 / (1.0 + 0.25 * s * s)
        if self.kind == "consistent_reduced":
            return 0.5
        return 0.0

    def defects(self, state: ShearState) -> dict:
        """Violations of every identity this spec demands (all zero when feasible)."""
        g = state.grid
        u, a = state.u, state.alpha
        s0, s1 = boundary_slopes(u, g)
        out = {"u0": u[0], "u1": u[-1] - self.gamma}
        if self.kind == "consistent":
            out["alpha0"] = s0 - 2.0 * np.tan(a[0])
            out["alpha1"] = s1 - 2.0 * np.tan(a[-1])
        elif self.kind == "consistent_reduced":
            out["alpha0"] = s0 - 2.0 * a[0]
            out["alpha1"] = s1 - 2.0 * a[-1]
        else:
            out["alpha0"] = a[0] - self.alpha_d
            out["alpha1"] = a[-1] - self.alpha_d
        if self.symmetry:
            out["symmetry"] = s0 - s1
        if self.slope is not None:
            out["slope"] = s0 - self.slope
        return {k: float(v) for k, v in out.items()}


class DofMap:
    """Packing of the free unknowns of one (grid, boundary spec) pair.

    The free vector is ``[u at free nodes..., alpha at free nodes...]``.  Interior
    u values are free except those eliminated by symmetry (u[N-2] = gamma - u[1])
    or fixed by a prescribed slope; interior angles are always free and the end
    angles are synthesized from the spec.
    """

    def __init__(self, grid: Grid, bc: BoundarySpec):
        n = grid.n
        self.grid = grid
        self.bc = bc
        u_free = list(range(1, n - 1))
        self._mirror = False
        if bc.slope is not None:
            if n < 5:
                raise ValueError("a prescribed end slope needs at least 5 nodes")
            u_free = [i for i in u_free if i not in (1, n - 2)]
        elif bc.symmetry:
            if n == 3:
                # u[1] neighbours both ends, so symmetry pins it to gamma/2
                u_free = []
            else:
                u_free.remove(n - 2)
                self._mirror = True
        self.u_idx = np.array(u_free, dtype=np.int64)
        self.a_idx = np.arange(1, n - 1, dtype=np.int64)
        self.n_u = len(self.u_idx)
        self.size = self.n_u + len(self.a_idx)

    def __repr__(self):
        return f"DofMap(n={self.grid.n}, kind={self.bc.kind!r}, symmetry={self.bc.symmetry}, size={self.size})"

    def fill_u(self, x):
        g, bc = self.grid, self.bc
        n = g.n
        u = np.zeros(n)
        u[-1] = bc.gamma
        u[self.u_idx] = x[: self.n_u]
        if bc.slope is not None:
            u[1] = g.h * bc.slope
            u[n - 2] = bc.gamma - g.h * bc.slope
        elif self._mirror:
            u[n - 2] = bc.gamma - u[1]
        elif bc.symmetry and n == 3:
            u[1] = 0.5 * bc.gamma
        return u

    def fill_alpha(self, u, x):
        bc = self.bc
        a = np.empty(self.grid.n)
        a[1:-1] = x[self.n_u:]
        s0, s1 = boundary_slopes(u, self.grid)
        a[0] = bc.end_angle(s0)
        a[-1] = bc.end_angle(s1)
        return a

    def unpack(self, x) -> ShearState:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise ValueError(f"free vector must have length {self.size}, got {x.shape}")
        u = self.fill_u(x)
        return ShearState(self.grid, u, self.fill_alpha(u, x))

    def pack(self, state: ShearState) -> np.ndarray:
        if state.grid.n != self.grid.n:
            raise ValueError("state and DofMap live on different grids")
        return np.concatenate([state.u[self.u_idx], state.alpha[self.a_idx]])

    def pullback(self, gu, ga, u) -> np.ndarray:
        """Chain rule from nodal partials (all nodes) to the free vector."""
        g, bc = self.grid, self.bc
        n = g.n
        gu = np.array(gu, dtype=float)
        if bc.kind != "dirichlet_alpha":
            s0, s1 = boundary_slopes(u, g)
            gu[1] += ga[0] * bc.end_angle_ds(s0) / g.h
            gu[n - 2] -= ga[-1] * bc.end_angle_ds(s1) / g.h
        if self._mirror:
            gu[1] -= gu[n - 2]
        return np.concatenate([gu[self.u_idx], np.asarray(ga)[self.a_idx]])

    def to_fields(self, gx) -> tuple[np.ndarray, np.ndarray]:
        """Place a free-vector quantity back on the nodes, zeros elsewhere."""
        fu = np.zeros(self.grid.n)
        fa = np.zeros(self.grid.n)
        fu[self.u_idx] = gx[: self.n_u]
        fa[self.a_idx] = gx[self.n_u:]
        return fu, fa


def dof_pack(state: ShearState, bc: BoundarySpec) -> np.ndarray:
    return DofMap(state.grid, bc).pack(state)


def dof_unpack(x, bc: BoundarySpec, grid: Grid) -> ShearState:
    return DofMap(grid, bc).unpack(x)


class NewtonPacking:
    """Unknown vector of the algebraic limit system: interior u, interior alpha
    and the constant zeta, 2N - 3 entries in total.

    The end angles are fixed to ``alpha_d`` and u(0) = 0, u(1) = gamma.
    """

    def __init__(self, grid: Grid, gamma: float, alpha_d: float = 0.0):
        self.grid = grid
        self.gamma = float(gamma)
        self.alpha_d = float(alpha_d)
        self.size = 2 * grid.n - 3

    def pack(self, state: ShearState, zeta: float) -> np.ndarray:
        return np.concatenate([state.u[1:-1], state.alpha[1:-1], [zeta]])

    def split(self, x):
        m = self.grid.n - 2
        u = np.empty(self.grid.n)
        u[0] = 0.0
        u[-1] = self.gamma
        u[1:-1] = x[:m]
        a = np.empty(self.grid.n)
        a[0] = a[-1] = self.alpha_d
        a[1:-1] = x[m:2 * m]
        return u, a, float(x[-1])

    def unpack(self, x) -> tuple[ShearState, float]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise ValueError(f"vector must have length {self.size}, got {x.shape}")
        u, a, zeta = self.split(x)
        return ShearState(self.grid, u, a), zeta
