"""Microstructure diagnostics: volume fraction, atomic histograms of the angle,
amplified deformation, sawtooth metrics and energy gaps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .state import Grid, Params, ShearState, make_grid

__all__ = [
    "volume_fraction",
    "YoungHistogram",
    "young_histogram",
    "u_scale",
    "interior_mask",
    "alpha_level",
    "slope_clusters",
    "MicrostructureReport",
    "microstructure_report",
    "homogeneous_reference",
    "energy_gap",
]

ATOM_TOL = 0.05
BOUNDARY_FRACTION = 0.05


def _grid_for(values, grid: Grid | None) -> Grid:
    return grid if grid is not None else make_grid(len(values))


def volume_fraction(alpha, grid: Grid | None = None, tol: float = ATOM_TOL) -> float:
    """Trapezoid measure of the set where |alpha| <= tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    a = np.asarray(alpha, dtype=float)
    g = _grid_for(a, grid)
    return float(np.clip(g.weights[np.abs(a) <= tol].sum(), 0.0, 1.0))


def interior_mask(n: int, fraction: float = BOUNDARY_FRACTION) -> np.ndarray:
    """Nodes outside the first and last ``fraction`` of the grid (ends always excluded)."""
    m = max(1, int(math.ceil(fraction * n)))
    mask = np.zeros(n, dtype=bool)
    mask[m:n - m] = True
    if not mask.any():
        mask[1:-1] = True
    return mask


@dataclass(frozen=True)
class YoungHistogram:
    bin_edges: np.ndarray
    masses: np.ndarray
    theta_hat: float
    concentration: float
    concentration_all: float


def young_histogram(alpha, gamma: float, bins: int = 40, tol: float = ATOM_TOL,
                    grid: Grid | None = None,
                    boundary_fraction: float = BOUNDARY_FRACTION) -> YoungHistogram:
    """Measure-weighted histogram of nodal angles plus the mass near the atoms {0, gamma}.

    ``concentration`` counts interior nodes outside the boundary layers;
    ``concentration_all`` uses the full trapezoid measure.
    """
    if bins < 2:
        raise ValueError("need at least two bins")
    a = np.asarray(alpha, dtype=float)
    g = _grid_for(a, grid)
    w = g.weights
    edges = np.linspace(a.min() - tol, a.max() + tol, bins + 1)
    masses, _ = np.histogram(a, bins=edges, weights=w)
    masses = masses / masses.sum()
    near = np.minimum(np.abs(a), np.abs(a - gamma)) <= tol
    mask = interior_mask(g.n, boundary_fraction)
    return YoungHistogram(
        bin_edges=edges,
        masses=masses,
        theta_hat=volume_fraction(a, g, tol),
        concentration=float(near[mask].mean()),
        concentration_all=float(w[near].sum()),
    )


def u_scale(state: ShearState, gamma: float) -> np.ndarray:
    """gamma z + N (u - gamma z): deviations from the affine shear amplified by N."""
    z = state.grid.nodes
    return gamma * z + state.grid.n * (state.u - gamma * z)


def alpha_level(state: ShearState, boundary_fraction: float = BOUNDARY_FRACTION) -> float:
    """Median angle away from the boundary layers."""
    return float(np.median(state.alpha[interior_mask(state.grid.n, boundary_fraction)]))


def slope_clusters(slopes, iters: int = 100):
    """Two-means clustering of a 1D sample; returns (centers, labels)."""
    s = np.asarray(slopes, dtype=float)
    lo, hi = float(s.min()), float(s.max())
    if hi - lo <= 1e-12 * max(1.0, abs(hi)):
        return np.array([lo]), np.zeros(len(s), dtype=np.int64)
    c = np.array([lo, hi])
    labels = np.zeros(len(s), dtype=np.int64)
    for _ in range(iters):
        labels = (np.abs(s - c[1]) < np.abs(s - c[0])).astype(np.int64)
        new = np.array([s[labels == k].mean() if np.any(labels == k) else c[k] for k in (0, 1)])
        if np.allclose(new, c, rtol=0, atol=1e-15):
            break
        c = new
    return c, labels


@dataclass(frozen=True)
class MicrostructureReport:
    theta: float
    concentration: float
    slope_levels: tuple
    sign_changes: int
    stress_spread: float
    energy_gap: float
    alpha_level: float
    max_deviation: float


def homogeneous_reference(p: Params, grid: Grid, kind: str = "full", bc=None,
                          form: str | None = None) -> ShearState:
    """The affine shear with the best constant interior angle and boundary angles
    taken from ``bc`` (consistent kinds use the end slopes gamma)."""
    from .analytic import best_constant_angle

    a_best, _ = best_constant_angle(p, kind, form)
    alpha = np.full(grid.n, a_best)
    if bc is not None:
        alpha[0] = alpha[-1] = bc.end_angle(p.gamma)
    return ShearState(grid, p.gamma * grid.nodes, alpha)


def energy_gap(state: ShearState, p: Params, kind: str = "full", bc=None,
               form: str | None = None) -> float:
    from .model import energy

    ref = homogeneous_reference(p, state.grid, kind, bc, form)
    return energy(state, p, kind, form) - energy(ref, p, kind, form)


def microstructure_report(state: ShearState, p: Params, kind: str = "full", bc=None,
                          form: str | None = None, tol: float = ATOM_TOL) -> MicrostructureReport:
    from .residual import cell_stress

    g = state.grid
    cells = np.diff(state.u) / g.h
    centers, labels = slope_clusters(cells)
    if len(centers) == 2 and abs(centers[1] - centers[0]) > 1e-8 * max(1.0, abs(p.gamma)):
        changes = int(np.count_nonzero(np.diff(labels)))
        levels = tuple(float(c) for c in centers)
    else:
        changes = 0
        levels = (float(np.mean(cells)),)
    tau = cell_stress(state, p, kind, form)
    inner = tau[1:-1] if len(tau) > 2 else tau
    spread = float(np.max(np.abs(inner - inner.mean())))
    hist = young_histogram(state.alpha, p.gamma, tol=tol, grid=g)
    return MicrostructureReport(
        theta=volume_fraction(state.alpha, g, tol),
        concentration=hist.concentration,
        slope_levels=levels,
        sign_changes=changes,
        stress_spread=spread,
        energy_gap=float(energy_gap(state, p, kind, bc, form)),
        alpha_level=alpha_level(state),
        max_deviation=float(np.max(np.abs(state.u - p.gamma * g.nodes))),
    )
