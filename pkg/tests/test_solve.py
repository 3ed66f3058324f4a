from __future__ import annotations

import math

import numpy as np
import pytest

from cosshear import Params, ShearState, make_grid
from cosshear.analysis import volume_fraction
from cosshear.discretize import BoundarySpec
from cosshear.model import energy, energy_gradient
from cosshear.presets import initial_state
from cosshear.solve import (
    SolveOptions,
    gmres,
    init_microstructure,
    minimize_bfgs,
    newton_residual,
    perturb_angles,
    solve_newton_gmres,
)
from cosshear.discretize import NewtonPacking


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(max_iters=0)
    with pytest.raises(ValueError):
        SolveOptions(line_search="bogus")
    with pytest.raises(ValueError):
        SolveOptions(h0="bogus")
    assert SolveOptions().with_(grad_tol=1e-3).grad_tol == 1e-3


# -- GMRES -------------------------------------------------------------------

def test_gmres_solves_nonsymmetric_system(rng):
    n = 60
    A = np.eye(n) * 4 + rng.normal(size=(n, n)) / math.sqrt(n)
    b = rng.normal(size=n)
    x, info = gmres(lambda v: A @ v, b, SolveOptions(gmres_tol=1e-12), return_info=True)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b)
    assert info.converged


def test_gmres_with_restarts(rng):
    n = 80
    A = np.diag(np.linspace(1, 50, n)) + 0.1 * rng.normal(size=(n, n))
    b = rng.normal(size=n)
    x = gmres(lambda v: A @ v, b, SolveOptions(gmres_restart=10, gmres_max_iters=5000, gmres_tol=1e-10))
    assert np.linalg.norm(A @ x - b) <= 1e-8 * np.linalg.norm(b)


def test_gmres_zero_rhs():
    x = gmres(lambda v: 2 * v, np.zeros(5))
    np.testing.assert_array_equal(x, 0.0)


def test_gmres_lucky_breakdown():
    x, info = gmres(lambda v: 3.0 * v, np.ones(10), return_info=True)
    np.testing.assert_allclose(x, 1 / 3, rtol=1e-13)
    assert info.iterations == 1


# -- BFGS --------------------------------------------------------------------

@pytest.mark.parametrize("h0", ["scaled_identity", "hessian"])
def test_bfgs_recovers_homogeneous_minimizer(h0):
    p = Params(mu=1, mu_c=1, gamma=0.8, l_c=0.1)
    g = make_grid(31)
    bc = BoundarySpec("consistent", gamma=0.8)
    init = initial_state("near-zero", g, p, seed=3)
    rep = minimize_bfgs(init, p, bc, "full", SolveOptions(grad_tol=1e-9, h0=h0))
    assert rep.converged, rep.message
    assert rep.energy == pytest.approx(0.331868154292396775, abs=1e-8)
    np.testing.assert_allclose(rep.state.alpha, math.atan(0.4), atol=1e-6)
    assert rep.history[0] >= rep.history[-1]
    assert all(b <= a + 1e-14 for a, b in zip(rep.history, rep.history[1:]))


def test_bfgs_armijo_and_callback():
    p = Params(mu=1, mu_c=0.5, gamma=0.8, l_c=0.2)
    g = make_grid(15)
    seen = []
    rep = minimize_bfgs(initial_state("near-zero", g, p), p, BoundarySpec("consistent", gamma=0.8), "full",
                        SolveOptions(line_search="armijo", grad_tol=1e-8, h0="hessian"),
                        callback=lambda it, f, gn: seen.append(it))
    assert rep.converged
    assert seen == list(range(1, rep.iterations + 1))


def test_bfgs_stationary_start_returns_immediately():
    p = Params(mu=1, mu_c=1, gamma=0.8)
    s = ShearState.homogeneous(make_grid(11), 0.8, math.atan(0.4))
    rep = minimize_bfgs(s, p, BoundarySpec("consistent", gamma=0.8))
    assert rep.converged and rep.iterations == 0


def test_bfgs_result_gradient_matches_report():
    p = Params(mu=1, mu_c=0.3, gamma=0.8, l_c=0.05)
    bc = BoundarySpec("consistent", gamma=0.8)
    rep = minimize_bfgs(initial_state("near-zero", make_grid(25), p), p, bc, "full",
                        SolveOptions(grad_tol=1e-9, h0="hessian"))
    gu, ga = energy_gradient(rep.state, p, "full", bc)
    assert max(np.max(np.abs(gu)), np.max(np.abs(ga))) == pytest.approx(rep.grad_norm, rel=1e-10, abs=1e-15)
    assert energy(rep.state, p) == pytest.approx(rep.energy, rel=1e-14)


def test_bfgs_is_deterministic():
    p = Params(mu=1, mu_c=0.0, gamma=0.8)
    g = make_grid(23)
    bc = BoundarySpec("dirichlet_alpha", alpha_d=0.1, gamma=0.8)
    init = init_microstructure(g, 0.8, 0.5, seed=7, end_alpha=0.1)
    a = minimize_bfgs(init, p, bc, "reduced", SolveOptions(h0="hessian"))
    b = minimize_bfgs(init, p, bc, "reduced", SolveOptions(h0="hessian"))
    np.testing.assert_array_equal(a.state.u, b.state.u)
    np.testing.assert_array_equal(a.state.alpha, b.state.alpha)


# -- initial states ----------------------------------------------------------

@pytest.mark.parametrize("n", [23, 59, 150])
@pytest.mark.parametrize("theta", [0.0, 0.3, 0.5, 0.8, 1.0])
def test_microstructure_init_fraction(n, theta):
    s = init_microstructure(make_grid(n), 0.8, theta, seed=1, end_alpha=0.0 if theta > 0.5 else None)
    assert abs(volume_fraction(s.alpha) - theta) <= 1.0 / (n - 1) + 1e-12
    assert set(np.unique(s.alpha[1:-1])) <= {0.0, 0.8}


def test_microstructure_init_seeded():
    g = make_grid(40)
    a = init_microstructure(g, 0.8, 0.5, seed=5).alpha
    b = init_microstructure(g, 0.8, 0.5, seed=5).alpha
    c = init_microstructure(g, 0.8, 0.5, seed=6).alpha
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(ValueError):
        init_microstructure(g, 0.8, 1.5)


def test_microstructure_init_reference_pattern():
    # frozen PCG64 draw so the selection stays reproducible across releases
    s = init_microstructure(make_grid(11), 0.8, 0.5, seed=0)
    assert (np.flatnonzero(s.alpha[1:-1] == 0.0) + 1).tolist() == [3, 5, 6, 7]
    s = init_microstructure(make_grid(23), 0.8, 0.5, seed=0)
    assert np.flatnonzero(s.alpha == 0.0).tolist() == [0, 3, 4, 5, 7, 11, 12, 13, 17, 19, 20, 22]


def test_perturb_angles():
    s = ShearState.homogeneous(make_grid(9), 0.8, 0.2)
    t = perturb_angles(s, 1e-3, seed=2)
    assert t.alpha[0] == 0.2 and t.alpha[-1] == 0.2
    assert 0 < np.max(np.abs(t.alpha - 0.2)) < 1e-2


# -- Newton-GMRES ------------------------------------------------------------

def test_newton_residual_zero_at_known_solutions():
    g = make_grid(11)
    pk = NewtonPacking(g, 0.8, 0.0)
    s = ShearState.homogeneous(g, 0.8, 0.0)
    assert np.max(np.abs(newton_residual(pk.pack(s, 0.8), pk))) <= 1e-14


@pytest.mark.parametrize("theta,alpha_d", [(1.0, 0.0), (0.5, 0.1)])
def test_newton_converges(theta, alpha_d):
    p = Params(mu=1, mu_c=0, gamma=0.8, alpha_d=alpha_d)
    g = make_grid(59)
    init = perturb_angles(init_microstructure(g, 0.8, theta, seed=3, end_alpha=alpha_d), 0.02, seed=4)
    rep = solve_newton_gmres(init, p, theta, SolveOptions(), tol=1e-10)
    assert rep.converged, rep.message
    assert rep.residual_norm <= 1e-10
    assert rep.extra["theta_defect"] <= 1.0 / (g.n - 1) + 1e-12
    assert rep.n_free == 2 * g.n - 3


def test_newton_insensitive_to_fd_step():
    p = Params(mu=1, mu_c=0, gamma=0.8, alpha_d=0.1)
    g = make_grid(23)
    init = perturb_angles(init_microstructure(g, 0.8, 0.5, seed=3, end_alpha=0.1), 0.02, seed=4)
    sols = [solve_newton_gmres(init, p, 0.5, SolveOptions(fd_delta=d)).state.u for d in (1e-6, 1e-7, 1e-8)]
    for s in sols[1:]:
        np.testing.assert_allclose(s, sols[0], atol=1e-9)


def test_newton_rejects_regularized_problem():
    with pytest.raises(ValueError):
        solve_newton_gmres(ShearState.homogeneous(make_grid(5), 0.8), Params(l_c=0.1))


def test_gmres_identity_one_iteration(rng):
    b = rng.normal(size=7)
    x, info = gmres(lambda v: v, b, return_info=True)
    np.testing.assert_allclose(x, b, rtol=1e-14)
    assert info.iterations == 1


def test_gmres_matches_dense_lu(rng):
    A = 5 * np.eye(50) + rng.normal(size=(50, 50)) * 0.2
    b = rng.normal(size=50)
    np.testing.assert_allclose(gmres(lambda v: A @ v, b), np.linalg.solve(A, b), atol=1e-8)


def test_gmres_restarted_laplacian():
    n = 100
    A = 2.2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    b = np.ones(n)
    x, info = gmres(lambda v: A @ v, b, SolveOptions(gmres_restart=10, gmres_tol=1e-8), return_info=True)
    assert info.iterations <= 200
    assert np.linalg.norm(A @ x - b) <= 1e-8 * np.linalg.norm(b) * 1.01


def test_bfgs_stationary_alpha2_start():
    p = Params(mu=1, mu_c=1, gamma=0.8)
    init = initial_state("homogeneous", make_grid(41), p)
    rep = minimize_bfgs(init, p, BoundarySpec("consistent", gamma=0.8), "full", SolveOptions(grad_tol=1e-9))
    assert rep.iterations <= 2
    assert rep.energy == pytest.approx(0.331868, abs=1e-6)


def test_bfgs_zero_shear():
    p = Params(mu=1, mu_c=0.3, gamma=0.0, l_c=0.1)
    g = make_grid(21)
    init = perturb_angles(ShearState.homogeneous(g, 0.0, 0.0), 1e-2, seed=1)
    rep = minimize_bfgs(init, p, BoundarySpec("consistent", gamma=0.0), "full", SolveOptions(grad_tol=1e-10, h0="hessian"))
    assert rep.converged
    assert rep.energy <= 1e-14
    assert np.max(np.abs(rep.state.alpha)) <= 1e-6


def test_extreme_fractions():
    g = make_grid(15)
    one = init_microstructure(g, 0.8, 1.0)
    zero = init_microstructure(g, 0.8, 0.0)
    assert np.all(one.alpha == 0.0) and np.all(zero.alpha == 0.8)
    np.testing.assert_allclose(one.u, 0.8 * g.nodes)


def test_newton_homogeneous_and_sawtooth_roots():
    p = Params(mu=1, mu_c=0, gamma=0.8)
    g = make_grid(59)
    rep = solve_newton_gmres(init_microstructure(g, 0.8, 1.0), p, 1.0)
    assert rep.residual_norm <= 1e-10
    np.testing.assert_allclose(rep.state.u, 0.8 * g.nodes, atol=1e-10)
    np.testing.assert_allclose(rep.state.alpha, 0.0, atol=1e-10)

    # with alpha_d = 0 both slope roots coincide, so the sawtooth needs alpha_d > 0
    q = p.with_(alpha_d=0.1)
    init = perturb_angles(init_microstructure(g, 0.8, 0.5, seed=3, end_alpha=0.1), 0.02, seed=4)
    rep = solve_newton_gmres(init, q, 0.5)
    assert rep.residual_norm <= 1e-8
    up = rep.extra["central_slopes"]
    a = rep.state.alpha[1:-1]
    assert np.max(np.minimum(np.abs(a), np.abs(a - up))) <= 1e-6
    cells = np.diff(rep.state.u) / g.h
    centers = np.unique(np.round(cells, 6))
    assert len(centers) == 2 and np.count_nonzero(np.diff(cells) != 0) > 40
