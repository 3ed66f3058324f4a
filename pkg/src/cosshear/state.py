"""Immutable carriers shared by every module: material parameters, grid, nodal state."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class Params:
    """Material and loading constants of the shear problem.

    ``alpha_d`` is the Dirichlet microrotation angle, used only by Dirichlet-type
    boundary specifications.
    """

    mu: float = 1.0
    mu_c: float = 0.0
    l_c: float = 0.0
    gamma: float = 0.8
    alpha_d: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.mu_c < 0:
            raise ValueError(f"mu_c must be non-negative, got {self.mu_c}")
        if self.l_c < 0:
            raise ValueError(f"l_c must be non-negative, got {self.l_c}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")

    def with_(self, **changes) -> "Params":
        return replace(self, **changes)


@dataclass(frozen=True)
class Grid:
    """Uniform mesh of [0, 1] with ``n`` nodes."""

    n: int
    nodes: np.ndarray = field(repr=False, compare=False)
    h: float = field(compare=False)

    @property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights; they sum to one."""
        w = np.full(self.n, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w


def make_grid(n: int) -> Grid:
    n = int(n)
    if n < 3:
        raise ValueError(f"grid needs at least 3 nodes, got {n}")
    nodes = np.linspace(0.0, 1.0, n)
    nodes.setflags(write=False)
    return Grid(n=n, nodes=nodes, h=1.0 / (n - 1))


@dataclass(frozen=True)
class ShearState:
    """Nodal deformation ``u`` and microrotation angle ``alpha`` on one grid."""

    grid: Grid
    u: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        a = np.array(self.alpha, dtype=float)
        if u.shape != (self.grid.n,) or a.shape != (self.grid.n,):
            raise ValueError(
                f"fields must have shape ({self.grid.n},), got {u.shape} and {a.shape}"
            )
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(a))):
            raise ValueError("state fields must be finite")
        u.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "alpha", a)

    @classmethod
    def homogeneous(cls, grid: Grid, gamma: float, alpha: float = 0.0) -> "ShearState":
        """The affine shear u = gamma*x with a constant angle."""
        return cls(grid, gamma * grid.nodes, np.full(grid.n, float(alpha)))
