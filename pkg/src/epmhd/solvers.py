"""Newton solver for the penalized MHD system, plus the dual solve.

The primal problem is solved by a full Newton iteration.  Essential
conditions are imposed by lifting the boundary data into the initial guess
and keeping every correction homogeneous on the constrained dofs, so each
iterate satisfies the boundary conditions exactly.  Convergence is measured
on the free (unconstrained) part of the residual.

The dual problem linearizes the operator at a state pair's midpoint,
transposes it, and is solved on the degree-raised space with homogeneous
versions of the primal constraints and a quantity-of-interest load.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .forms import (
    LinearizationState,
    MhdConfig,
    QoISpec,
    assemble_adjoint_matrix,
    assemble_jacobian,
    assemble_residual,
    qoi_load_vector,
)
from .linalg import apply_dirichlet, solve_direct
from .space import (
    FEFunction,
    ProductSpace,
    constrained_dofs,
    enriched_space,
    magnetic_tangential_dirichlet,
    velocity_dirichlet,
)


@dataclass
class NewtonReport:
    converged: bool
    iterations: int
    residual_norms: list = field(default_factory=list)
    seconds: float = 0.0


def boundary_conditions(space: ProductSpace, velocity_data, magnetic_data,
                        pin_pressure=True):
    """Constrained dof ids and prescribed values for the primal problem.

    Velocity is fixed on every wall, the wall-tangential magnetic component
    likewise, and one pressure dof is pinned to zero to fix the constant
    mode left undetermined by all-Dirichlet velocity conditions.
    """
    du, vu = velocity_dirichlet(space, velocity_data)
    db, vb = magnetic_tangential_dirichlet(space, magnetic_data)
    dofs = [du, db]
    vals = [vu, vb]
    if pin_pressure:
        dofs.append(np.array([space.offsets["p"]]))
        vals.append(np.zeros(1))
    dofs = np.concatenate(dofs)
    vals = np.concatenate(vals)
    order = np.argsort(dofs)
    return dofs[order], vals[order]


def newton_solve(space: ProductSpace, cfg: MhdConfig, velocity_data, magnetic_data,
                 initial=None, abs_tol=1e-10, rel_tol=1e-12, max_iter=25,
                 pin_pressure=True, permc_spec="COLAMD"):
    """Solve the stationary system by Newton's method.

    initial may carry coefficients from a nearby solve (its boundary entries
    are overwritten by the lifted data).  Returns (solution, report); the
    report records the free-dof residual norm before each correction and
    after the last one.
    """
    t0 = time.perf_counter()
    dofs, vals = boundary_conditions(space, velocity_data, magnetic_data, pin_pressure)
    free = np.ones(space.n_dofs, dtype=bool)
    free[dofs] = False

    coeffs = np.zeros(space.n_dofs) if initial is None else np.array(initial, dtype=float)
    if coeffs.shape != (space.n_dofs,):
        raise ValueError("initial guess has the wrong length for this space")
    coeffs[dofs] = vals

    zero_vals = np.zeros(len(dofs))
    norms = []
    converged = False
    for it in range(max_iter + 1):
        state = FEFunction(space, coeffs)
        residual = assemble_residual(space, state, cfg)
        rnorm = float(np.linalg.norm(residual[free]))
        norms.append(rnorm)
        if not np.isfinite(rnorm):
            break
        if rnorm <= abs_tol + rel_tol * norms[0]:
            converged = True
            break
        if it == max_iter:
            break
        jac = assemble_jacobian(space, state, cfg)
        A, rhs = apply_dirichlet(jac, -residual, dofs, zero_vals)
        coeffs = coeffs + solve_direct(A, rhs, permc_spec=permc_spec)

    report = NewtonReport(converged, len(norms) - 1, norms, time.perf_counter() - t0)
    return FEFunction(space, coeffs), report


def homotopy_solve(space: ProductSpace, cfg: MhdConfig, velocity_data, magnetic_data,
                   schedule, **newton_kwargs):
    """Reynolds-number continuation: solve the schedule in order, warm-starting
    each stage from the previous solution.  The last entry must match cfg.Re.

    Returns (solution, reports), one report per stage.  Raises if any stage
    fails to converge, since later stages would then start from garbage.
    """
    schedule = [float(r) for r in schedule]
    if not schedule or schedule[-1] != cfg.Re:
        raise ValueError("continuation schedule must end at the target Re")
    solution, reports = None, []
    for Re in schedule:
        initial = None if solution is None else solution.coeffs
        solution, report = newton_solve(
            space, cfg.with_re(Re), velocity_data, magnetic_data,
            initial=initial, **newton_kwargs)
        reports.append(report)
        if not report.converged:
            raise RuntimeError(
                f"continuation stalled at Re={Re:g} "
                f"(residual {report.residual_norms[-1]:.3e} after {report.iterations} steps)")
    return solution, reports


def adjoint_solve(solution: FEFunction, cfg: MhdConfig, qoi: QoISpec,
                  secondary=None, pin_pressure=True, permc_spec="COLAMD",
                  enrich=True):
    """Dual solve, by default on the degree-raised space.

    secondary picks the second state of the linearization pair: None uses the
    discrete solution alone, an exact-solution object (velocity/magnetic plus
    gradients) gives the midpoint linearization.  enrich=False keeps the dual
    in the primal space, where the weighted residual collapses to roundoff by
    Galerkin orthogonality.  Returns (dual, seconds).
    """
    t0 = time.perf_counter()
    rich = enriched_space(solution.space) if enrich else solution.space
    A = assemble_adjoint_matrix(rich, LinearizationState(solution, secondary), cfg)
    load = qoi_load_vector(rich, qoi)
    dofs = constrained_dofs(rich, pin_pressure=pin_pressure)
    A, rhs = apply_dirichlet(A, load, dofs, np.zeros(len(dofs)))
    dual = solve_direct(A, rhs, permc_spec=permc_spec)
    return FEFunction(rich, dual), time.perf_counter() - t0
