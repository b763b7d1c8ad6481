"""Error-estimator tests.

The two breakdown routes (term-restricted assembly vs longhand quadrature)
share no kernel code, so their agreement to roundoff pins the signs and
product rules of every estimator integrand.  Galerkin orthogonality is the
other anchor: with the dual computed in the primal space itself the whole
estimate must collapse to numerical zero.
"""

import numpy as np
import pytest

from epmhd.cases import HartmannParams
from epmhd.estimator import (
    ErrorBreakdown,
    algebraic_breakdown,
    estimate_qoi_error,
    magnetic_divergence_norm,
    quadrature_breakdown,
)
from epmhd.forms import MhdConfig, QoISpec, qoi_value
from epmhd.mesh import crossed_mesh
from epmhd.solvers import adjoint_solve, newton_solve
from epmhd.space import FEFunction, ProductSpace, enriched_space


def random_pair(n=3, degrees=(2, 1, 1), seed=11, with_force=True):
    """An arbitrary smooth-ish state and an arbitrary enriched dual."""
    rng = np.random.default_rng(seed)
    space = ProductSpace(crossed_mesh(n), degrees)
    rich = enriched_space(space)
    state = FEFunction(space, rng.normal(scale=0.7, size=space.n_dofs))
    dual = FEFunction(rich, rng.normal(size=rich.n_dofs))
    force = None
    if with_force:
        force = lambda p: np.column_stack([np.sin(3 * p[:, 0]), p[:, 1] ** 2])
    cfg = MhdConfig(Re=7.0, Re_m=3.0, kappa=1.8, body_force=force)
    return state, dual, cfg


def test_breakdown_routes_agree_on_random_data():
    state, dual, cfg = random_pair()
    a = algebraic_breakdown(state, dual, cfg)
    q = quadrature_breakdown(state, dual, cfg)
    scale = max(abs(a.e_mom), abs(a.e_con), abs(a.e_mag), 1.0)
    assert abs(a.e_mom - q.e_mom) < 1e-12 * scale
    assert abs(a.e_con - q.e_con) < 1e-12 * scale
    assert abs(a.e_mag - q.e_mag) < 1e-12 * scale


def test_breakdown_routes_agree_on_solved_state():
    hp = HartmannParams()
    cfg = MhdConfig(Re=hp.Re, Re_m=hp.Re_m, kappa=hp.kappa)
    space = ProductSpace(crossed_mesh(6), (2, 1, 1))
    sol, _ = newton_solve(space, cfg, hp.velocity_data, hp.magnetic_data)
    dual, _ = adjoint_solve(sol, cfg, QoISpec("u_x", (-0.25, 0.5, -0.25, 0.25)))
    a = algebraic_breakdown(sol, dual, cfg)
    q = quadrature_breakdown(sol, dual, cfg)
    assert abs(a.total - q.total) < 1e-13


def test_breakdown_is_linear_in_the_dual():
    state, dual, cfg = random_pair(seed=4)
    one = algebraic_breakdown(state, dual, cfg)
    # Doubling the dual doubles each part, except for the body-force term,
    # so drop the force to make the whole functional homogeneous.
    cfg0 = MhdConfig(Re=cfg.Re, Re_m=cfg.Re_m, kappa=cfg.kappa)
    one = algebraic_breakdown(state, dual, cfg0)
    two = algebraic_breakdown(state, FEFunction(dual.space, 2 * dual.coeffs), cfg0)
    assert np.allclose(
        [two.e_mom, two.e_con, two.e_mag],
        [2 * one.e_mom, 2 * one.e_con, 2 * one.e_mag], rtol=1e-12)


def test_galerkin_orthogonality_collapses_same_space_estimate():
    hp = HartmannParams()
    cfg = MhdConfig(Re=hp.Re, Re_m=hp.Re_m, kappa=hp.kappa)
    space = ProductSpace(crossed_mesh(6), (2, 1, 1))
    sol, _ = newton_solve(space, cfg, hp.velocity_data, hp.magnetic_data)
    spec = QoISpec("u_x", (-0.25, 0.5, -0.25, 0.25))
    dual, _ = adjoint_solve(sol, cfg, spec, enrich=False)
    eta = algebraic_breakdown(sol, dual, cfg).total
    assert abs(eta) < 1e-9 * (1.0 + abs(qoi_value(spec, sol)))


def test_channel_effectivity_is_near_one():
    hp = HartmannParams()
    cfg = MhdConfig(Re=hp.Re, Re_m=hp.Re_m, kappa=hp.kappa)
    space = ProductSpace(crossed_mesh(8), (2, 1, 1))
    sol, _ = newton_solve(space, cfg, hp.velocity_data, hp.magnetic_data)
    spec = QoISpec("u_x", (-0.25, 0.5, -0.25, 0.25))
    err = hp.qoi_exact(spec.box) - qoi_value(spec, sol)
    breakdown, dual, seconds = estimate_qoi_error(sol, cfg, spec)
    assert dual.space.degrees == (3, 2, 2)
    assert seconds > 0.0
    assert 0.7 < breakdown.total / err < 1.2


def test_exact_linearization_stays_close_to_computational():
    hp = HartmannParams()
    cfg = MhdConfig(Re=hp.Re, Re_m=hp.Re_m, kappa=hp.kappa)
    space = ProductSpace(crossed_mesh(6), (2, 1, 1))
    sol, _ = newton_solve(space, cfg, hp.velocity_data, hp.magnetic_data)
    spec = QoISpec("u_x", (-0.25, 0.5, -0.25, 0.25))
    exact = FEFunction(space, space.interpolate(
        velocity=hp.velocity, magnetic=hp.magnetic, pressure=hp.pressure))
    comp, _, _ = estimate_qoi_error(sol, cfg, spec)
    avg, _, _ = estimate_qoi_error(sol, cfg, spec, secondary=exact)
    # The averaged linearization shifts the estimate only by the quadratic
    # remainder, which is far below the estimate itself on this mesh.
    assert abs(avg.total - comp.total) < 0.05 * abs(comp.total)


def test_magnetic_divergence_norm_against_closed_form():
    # b = (x^2, x y) has div b = 3x, whose L2 norm over the unit box
    # centered at the origin is sqrt(3/4).
    space = ProductSpace(crossed_mesh(4), (2, 2, 1))
    coeffs = space.interpolate(
        magnetic=lambda p: np.column_stack([p[:, 0] ** 2, p[:, 0] * p[:, 1]]))
    norm = magnetic_divergence_norm(FEFunction(space, coeffs))
    assert abs(norm - np.sqrt(0.75)) < 1e-12


def test_breakdown_total_matches_parts():
    bd = ErrorBreakdown(e_mom=1.0, e_con=-2.5, e_mag=0.25)
    assert bd.total == pytest.approx(-1.25)


def test_mesh_mismatch_is_rejected():
    state, _, cfg = random_pair()
    other = ProductSpace(crossed_mesh(2), (3, 2, 2))
    alien = FEFunction(other, np.zeros(other.n_dofs))
    with pytest.raises(ValueError):
        algebraic_breakdown(state, alien, cfg)
    with pytest.raises(ValueError):
        quadrature_breakdown(state, alien, cfg)
