import numpy as np
import pytest

from epmhd.cases import HartmannParams
from epmhd.forms import (
    ALL_TERMS,
    LinearizationState,
    MhdConfig,
    QoISpec,
    assemble_adjoint_matrix,
    assemble_jacobian,
    assemble_residual,
    evaluate_fields,
    qoi_load_vector,
    qoi_value,
)
from epmhd.linalg import apply_dirichlet
from epmhd.mesh import crossed_mesh
from epmhd.space import FEFunction, ProductSpace, constrained_dofs

CFG = MhdConfig(Re=16.0, Re_m=16.0, kappa=1.0)


def random_state(space, seed, scale=0.5):
    rng = np.random.default_rng(seed)
    return FEFunction(space, scale * rng.normal(size=space.n_dofs))


def test_zero_state_has_zero_residual():
    space = ProductSpace(crossed_mesh(2), (2, 1, 1))
    r = assemble_residual(space, FEFunction(space, np.zeros(space.n_dofs)), CFG)
    assert np.max(np.abs(r)) == 0.0


def test_constant_body_force_residual():
    # with a zero state the residual reduces to -(f, v); compare against the
    # basis integrals that the whole-domain qoi load vector provides
    space = ProductSpace(crossed_mesh(3), (2, 1, 1))
    cfg = MhdConfig(Re=16.0, Re_m=16.0,
                    body_force=lambda p: np.tile([2.0, -3.0], (len(p), 1)))
    r = assemble_residual(space, FEFunction(space, np.zeros(space.n_dofs)), cfg)
    lx = qoi_load_vector(space, QoISpec("u_x", (-0.5, 0.5, -0.5, 0.5)))
    ly = qoi_load_vector(space, QoISpec("u_y", (-0.5, 0.5, -0.5, 0.5)))
    assert np.max(np.abs(r + 2.0 * lx - 3.0 * ly)) < 1e-14
    sl = space.component_slice("u_x")
    assert np.max(np.abs(r[sl] + 2.0 * lx[sl])) < 1e-14


@pytest.mark.parametrize("degrees,n", [((2, 1, 1), 3), ((3, 2, 2), 2)])
def test_jacobian_matches_finite_differences(degrees, n):
    space = ProductSpace(crossed_mesh(n), degrees)
    state = random_state(space, 0)
    jac = assemble_jacobian(space, state, CFG)
    rng = np.random.default_rng(1)
    eps = 1e-6
    for _ in range(10):
        d = rng.normal(size=space.n_dofs)
        d /= np.linalg.norm(d)
        rp = assemble_residual(space, FEFunction(space, state.coeffs + eps * d), CFG)
        rm = assemble_residual(space, FEFunction(space, state.coeffs - eps * d), CFG)
        fd = (rp - rm) / (2 * eps)
        jd = jac @ d
        assert np.linalg.norm(fd - jd) < 1e-6 * max(1.0, np.linalg.norm(jd))


@pytest.mark.parametrize("degrees,n", [((2, 1, 1), 3), ((3, 2, 2), 2)])
def test_adjoint_is_transpose_of_midpoint_jacobian(degrees, n):
    space = ProductSpace(crossed_mesh(n), degrees)
    s1 = random_state(space, 2)
    s2 = random_state(space, 3)
    mid = FEFunction(space, 0.5 * (s1.coeffs + s2.coeffs))
    jac = assemble_jacobian(space, mid, CFG)
    adj = assemble_adjoint_matrix(space, LinearizationState(s1, s2), CFG)
    dofs = constrained_dofs(space)
    zeros = np.zeros(len(dofs))
    jac_el, _ = apply_dirichlet(jac, np.zeros(space.n_dofs), dofs, zeros)
    adj_el, _ = apply_dirichlet(adj, np.zeros(space.n_dofs), dofs, zeros)
    diff = (adj_el - jac_el.T).tocoo()
    scale = np.max(np.abs(jac_el.data)) if jac_el.nnz else 1.0
    assert (np.max(np.abs(diff.data)) if diff.nnz else 0.0) < 1e-12 * scale


def test_adjoint_computational_linearization_is_self_midpoint():
    space = ProductSpace(crossed_mesh(2), (2, 1, 1))
    s1 = random_state(space, 4)
    a_self = assemble_adjoint_matrix(space, LinearizationState(s1), CFG)
    a_pair = assemble_adjoint_matrix(space, LinearizationState(s1, s1), CFG)
    assert abs(a_self - a_pair).max() < 1e-13


class _PolyState:
    """Quadratic analytic fields, reproduced exactly by P2+ interpolation."""

    def velocity(self, p):
        return np.column_stack([p[:, 0] ** 2 - p[:, 1], p[:, 0] * p[:, 1]])

    def velocity_grad(self, p):
        g = np.zeros((len(p), 2, 2))
        g[:, 0, 0] = 2 * p[:, 0]
        g[:, 0, 1] = -1.0
        g[:, 1, 0] = p[:, 1]
        g[:, 1, 1] = p[:, 0]
        return g

    def magnetic(self, p):
        return np.column_stack([p[:, 1] ** 2 + 1.0, p[:, 0] - p[:, 1]])

    def magnetic_grad(self, p):
        g = np.zeros((len(p), 2, 2))
        g[:, 0, 1] = 2 * p[:, 1]
        g[:, 1, 0] = 1.0
        g[:, 1, 1] = -1.0
        return g


def test_analytic_linearization_state_matches_interpolant():
    space = ProductSpace(crossed_mesh(2), (3, 2, 2))
    s1 = random_state(space, 5)
    poly = _PolyState()
    interp = FEFunction(space, space.interpolate(velocity=poly.velocity,
                                                 magnetic=poly.magnetic))
    a_exact = assemble_adjoint_matrix(space, LinearizationState(s1, poly), CFG)
    a_interp = assemble_adjoint_matrix(space, LinearizationState(s1, interp), CFG)
    assert abs(a_exact - a_interp).max() < 1e-12


def test_term_toggle_is_additive():
    space = ProductSpace(crossed_mesh(2), (2, 2, 1))
    state = random_state(space, 6)
    full = assemble_jacobian(space, state, CFG)
    wo = assemble_jacobian(space, state, CFG.without_terms("magnetic_div"))
    only = assemble_jacobian(
        space, state,
        MhdConfig(Re=16.0, Re_m=16.0, terms=frozenset({"magnetic_div"})))
    assert abs(full - wo - only).max() < 1e-13
    r_full = assemble_residual(space, state, CFG)
    r_wo = assemble_residual(space, state, CFG.without_terms("magnetic_div"))
    r_only = assemble_residual(
        space, state, MhdConfig(Re=16.0, Re_m=16.0, terms=frozenset({"magnetic_div"})))
    assert np.max(np.abs(r_full - r_wo - r_only)) < 1e-13


def test_evaluate_fields_curl_example():
    # b = (y^2, 0) has scalar curl -2y
    space = ProductSpace(crossed_mesh(3), (2, 2, 1))
    coeffs = space.interpolate(magnetic=lambda p: np.column_stack(
        [p[:, 1] ** 2, np.zeros(len(p))]))
    _, phys, fields = evaluate_fields(FEFunction(space, coeffs))
    curl = fields["gb"][..., 1, 0] - fields["gb"][..., 0, 1]
    assert np.max(np.abs(curl + 2 * phys[..., 1])) < 1e-12


def test_qoi_constant_field_gives_box_area():
    space = ProductSpace(crossed_mesh(3), (2, 1, 1))
    ones = FEFunction(space, space.interpolate(
        velocity=lambda p: np.column_stack([np.ones(len(p)), np.zeros(len(p))])))
    for box in [(-0.25, 0.5, -0.25, 0.25), (-0.2, 0.3, -0.1, 0.45)]:
        spec = QoISpec("u_x", box)
        area = (box[1] - box[0]) * (box[3] - box[2])
        assert abs(qoi_value(spec, ones) - area) < 1e-14
        assert abs(qoi_value(QoISpec("u_x", box, normalize=True), ones) - 1.0) < 1e-13


def test_qoi_polynomial_exact_on_misaligned_box():
    # the box edges cross cell interiors of the n = 3 mesh; clipping must
    # still integrate the quadratic exactly
    space = ProductSpace(crossed_mesh(3), (2, 1, 1))
    fn = FEFunction(space, space.interpolate(
        velocity=lambda p: np.column_stack([p[:, 0] ** 2 * 1.0, p[:, 1] * 0.0])))
    # store x^2 in u_x; use an odd box
    box = (-0.2, 0.3, -0.1, 0.45)
    exact = ((0.3 ** 3 - (-0.2) ** 3) / 3) * (0.45 - (-0.1))
    assert abs(qoi_value(QoISpec("u_x", box), fn) - exact) < 1e-14


def test_qoi_pressure_component():
    space = ProductSpace(crossed_mesh(2), (2, 1, 1))
    fn = FEFunction(space, space.interpolate(pressure=lambda p: 2 * p[:, 1]))
    val = qoi_value(QoISpec("p", (-0.5, 0.5, 0.0, 0.5)), fn)
    assert abs(val - 0.25) < 1e-14


def test_qoi_load_vector_localized_to_component_block():
    space = ProductSpace(crossed_mesh(2), (2, 1, 1))
    load = qoi_load_vector(space, QoISpec("b_y", (-0.25, 0.25, 0.0, 0.5)))
    sl = space.component_slice("b_y")
    mask = np.zeros(space.n_dofs, dtype=bool)
    mask[sl] = True
    assert np.max(np.abs(load[~mask])) == 0.0
    assert np.max(np.abs(load[mask])) > 0.0


def test_qoi_spec_validation():
    with pytest.raises(ValueError):
        QoISpec("u_z", (-0.25, 0.25, 0.0, 0.5))
    with pytest.raises(ValueError):
        QoISpec("u_x", (0.25, -0.25, 0.0, 0.5))
    with pytest.raises(ValueError):
        QoISpec("u_x", (-0.25, 0.75, 0.0, 0.5))


def test_config_validation():
    with pytest.raises(ValueError):
        MhdConfig(Re=0.0, Re_m=1.0)
    with pytest.raises(ValueError):
        MhdConfig(Re=1.0, Re_m=1.0, terms=frozenset({"viscous", "wibble"}))
    assert MhdConfig(Re=2.0, Re_m=1.0).with_re(7.0).Re == 7.0
    assert ALL_TERMS - MhdConfig(Re=1.0, Re_m=1.0).without_terms("lorentz").terms == {"lorentz"}


def test_residual_requires_shared_mesh():
    space_a = ProductSpace(crossed_mesh(2), (2, 1, 1))
    space_b = ProductSpace(crossed_mesh(2), (2, 1, 1))
    with pytest.raises(ValueError):
        assemble_residual(space_a, FEFunction(space_b, np.zeros(space_b.n_dofs)), CFG)
