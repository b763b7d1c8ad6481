"""Self-contained structural checks runnable from the command line.

Each check returns (name, passed, detail).  They are cheap enough to run on
every install and pin the properties the error estimator depends on: the
adjoint operator being the exact transpose of the Jacobian, the Jacobian
matching finite differences of the residual, the estimate collapsing under
Galerkin orthogonality, and the magnetic divergence decreasing under
refinement.
"""

from __future__ import annotations

import numpy as np

from .cases import HartmannParams
from .estimator import algebraic_breakdown
from .forms import (
    LinearizationState,
    MhdConfig,
    QoISpec,
    assemble_adjoint_matrix,
    assemble_jacobian,
    assemble_residual,
    qoi_value,
)
from .mesh import crossed_mesh
from .solvers import adjoint_solve, newton_solve
from .space import FEFunction, ProductSpace, constrained_dofs
from .bench import divergence_history

CHANNEL_QOI = QoISpec("u_x", (-0.25, 0.5, -0.25, 0.25))


def _channel(n, degrees):
    hp = HartmannParams()
    cfg = MhdConfig(Re=hp.Re, Re_m=hp.Re_m, kappa=hp.kappa)
    space = ProductSpace(crossed_mesh(n), degrees)
    sol, _ = newton_solve(space, cfg, hp.velocity_data, hp.magnetic_data)
    return hp, cfg, sol


def check_adjoint_transpose(n=8, degrees=(2, 1, 1), tol=1e-10):
    """Adjoint matrix at the solution equals the Jacobian transpose.

    The adjoint kernels are written in integrated-by-parts form, so the
    identity holds on the rows and columns whose basis functions carry no
    boundary data; constrained dofs are excluded before comparing.
    """
    _, cfg, sol = _channel(n, degrees)
    space = sol.space
    J = assemble_jacobian(space, sol, cfg)
    A = assemble_adjoint_matrix(space, LinearizationState(sol, None), cfg)
    free = np.setdiff1d(np.arange(space.n_dofs),
                        constrained_dofs(space, pin_pressure=False))
    gap = (A - J.T).tocsr()[free][:, free].tocoo()
    rel = (abs(gap.data).max() if gap.nnz else 0.0) / abs(J.data).max()
    name = f"adjoint == jacobian^T on {degrees}, n={n}"
    return name, rel < tol, f"relative gap {rel:.2e}"


def check_fd_jacobian(n=4, degrees=(2, 1, 1), directions=10, seed=0, tol=1e-6):
    """Directional finite differences of the residual match the Jacobian."""
    _, cfg, sol = _channel(n, degrees)
    space = sol.space
    rng = np.random.default_rng(seed)
    J = assemble_jacobian(space, sol, cfg)
    worst = 0.0
    eps = 1e-6
    for _ in range(directions):
        v = rng.normal(size=space.n_dofs)
        v /= np.linalg.norm(v)
        plus = FEFunction(space, sol.coeffs + eps * v)
        minus = FEFunction(space, sol.coeffs - eps * v)
        fd = (assemble_residual(space, plus, cfg)
              - assemble_residual(space, minus, cfg)) / (2 * eps)
        jv = J @ v
        worst = max(worst, np.linalg.norm(fd - jv) / np.linalg.norm(jv))
    name = f"finite-difference jacobian, {directions} directions"
    return name, worst < tol, f"worst relative gap {worst:.2e}"


def check_galerkin_orthogonality(n=6, degrees=(2, 1, 1), tol=1e-9):
    """Same-space dual weights make the whole estimate vanish."""
    _, cfg, sol = _channel(n, degrees)
    dual, _ = adjoint_solve(sol, cfg, CHANNEL_QOI, enrich=False)
    eta = algebraic_breakdown(sol, dual, cfg).total
    bound = tol * (1.0 + abs(qoi_value(CHANNEL_QOI, sol)))
    name = "galerkin orthogonality collapses same-space estimate"
    return name, abs(eta) < bound, f"|eta| = {abs(eta):.2e} (bound {bound:.2e})"


def check_magnetic_divergence_decreases(sizes=(4, 8, 16), degrees=(2, 1, 1)):
    """The L2 norm of div b_h falls monotonically under refinement."""
    norms = divergence_history(HartmannParams(), degrees, sizes)
    ok = all(b < a for a, b in zip(norms, norms[1:]))
    name = "magnetic divergence decreases under refinement"
    detail = " -> ".join(f"{v:.3e}" for v in norms)
    return name, ok, detail


def run_all(seed=0):
    checks = [
        check_adjoint_transpose(n=8, degrees=(2, 1, 1)),
        check_adjoint_transpose(n=4, degrees=(3, 2, 2)),
        check_fd_jacobian(seed=seed),
        check_galerkin_orthogonality(),
        check_magnetic_divergence_decreases(),
    ]
    return checks
