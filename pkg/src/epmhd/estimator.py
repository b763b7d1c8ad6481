"""Goal-oriented error estimation by dual-weighted residuals.

The quantity-of-interest error J(u) - J(u_h) is estimated by weighting the
primal residual with a discrete dual solution and splitting it into three
physically labeled parts:

    e_mom : momentum imbalance    (f,phi) - viscous - convection
                                  + pressure coupling + Lorentz force
    e_con : mass imbalance        -(div u_h, pi)
    e_mag : magnetic imbalance    induction coupling minus the curl and
                                  divergence penalty terms

Their sum is the error estimate.  Two evaluation routes are provided on
purpose: `algebraic_breakdown` reuses the weak-form assembly and dots the
term-restricted residual vectors with the dual coefficients, while
`quadrature_breakdown` writes every integrand out longhand and integrates
it directly.  The routes share no kernel code; tests require them to agree
to roundoff, which guards both against sign and product-rule mistakes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .elements import assembly_exactness, triangle_rule
from .forms import (
    CONTINUITY_TERMS,
    MAGNETIC_TERMS,
    MOMENTUM_TERMS,
    MhdConfig,
    _eval_function,
    _iter_batches,
    assemble_residual,
    evaluate_fields,
)
from .solvers import adjoint_solve
from .space import FEFunction


@dataclass(frozen=True)
class ErrorBreakdown:
    e_mom: float
    e_con: float
    e_mag: float

    @property
    def total(self) -> float:
        return self.e_mom + self.e_con + self.e_mag


def _check_pair(solution: FEFunction, dual: FEFunction):
    if solution.space.mesh is not dual.space.mesh:
        raise ValueError("solution and dual must live on the same mesh")


def algebraic_breakdown(solution: FEFunction, dual: FEFunction,
                        cfg: MhdConfig) -> ErrorBreakdown:
    """Dual-weighted residual split via term-restricted weak-form assembly.

    Each part is minus the group's residual tested against the dual: the
    body force belongs to the momentum group, so a discrete solution of the
    full system has all three parts small against same-space duals.
    """
    _check_pair(solution, dual)
    no_force = dataclasses.replace(cfg, body_force=None)
    groups = (
        dataclasses.replace(cfg, terms=cfg.terms & MOMENTUM_TERMS),
        dataclasses.replace(no_force, terms=cfg.terms & CONTINUITY_TERMS),
        dataclasses.replace(no_force, terms=cfg.terms & MAGNETIC_TERMS),
    )
    parts = [-float(assemble_residual(dual.space, solution, g) @ dual.coeffs)
             for g in groups]
    return ErrorBreakdown(*parts)


def quadrature_breakdown(solution: FEFunction, dual: FEFunction,
                         cfg: MhdConfig) -> ErrorBreakdown:
    """The same three parts by direct quadrature of longhand integrands.

    Uses the assembly rule of the combined space pair, so every polynomial
    integrand is integrated exactly and the result matches the algebraic
    route up to roundoff.
    """
    _check_pair(solution, dual)
    nu, k, eta = 1.0 / cfg.Re, cfg.kappa, cfg.kappa / cfg.Re_m
    rule = triangle_rule(assembly_exactness(
        *solution.space.degrees, *dual.space.degrees))
    degrees = set(solution.space.degrees) | set(dual.space.degrees)
    need_phys = cfg.body_force is not None
    e_mom = e_con = e_mag = 0.0
    for batch in _iter_batches(solution.space.mesh, degrees, rule, need_phys):
        z = _eval_function(solution, batch)
        d = _eval_function(dual, batch)
        u, gu, b, gb, p = z["u"], z["gu"], z["b"], z["gb"], z["p"]
        phi, gphi, beta, gbeta, pi = d["u"], d["gu"], d["b"], d["gb"], d["p"]

        mom = -nu * np.einsum("cqij,cqij->cq", gu, gphi)
        conv = np.einsum("cqij,cqj->cqi", gu, u)
        mom -= np.einsum("cqi,cqi->cq", conv, phi)
        mom += p * (gphi[..., 0, 0] + gphi[..., 1, 1])
        curl_b = gb[..., 1, 0] - gb[..., 0, 1]
        mom += k * curl_b * (b[..., 0] * phi[..., 1] - b[..., 1] * phi[..., 0])
        if need_phys:
            f = np.asarray(cfg.body_force(batch.phys.reshape(-1, 2))).reshape(
                *batch.phys.shape[:2], 2)
            mom += np.einsum("cqi,cqi->cq", f, phi)
        e_mom += float(batch.w.ravel() @ mom.ravel())

        e_con -= float(batch.w.ravel() @
                       ((gu[..., 0, 0] + gu[..., 1, 1]) * pi).ravel())

        # gradient of the scalar u x b by the product rule
        s_x = (gu[..., 0, 0] * b[..., 1] + u[..., 0] * gb[..., 1, 0]
               - gu[..., 1, 0] * b[..., 0] - u[..., 1] * gb[..., 0, 0])
        s_y = (gu[..., 0, 1] * b[..., 1] + u[..., 0] * gb[..., 1, 1]
               - gu[..., 1, 1] * b[..., 0] - u[..., 1] * gb[..., 0, 1])
        mag = k * (s_y * beta[..., 0] - s_x * beta[..., 1])
        curl_beta = gbeta[..., 1, 0] - gbeta[..., 0, 1]
        mag -= eta * curl_b * curl_beta
        mag -= eta * ((gb[..., 0, 0] + gb[..., 1, 1])
                      * (gbeta[..., 0, 0] + gbeta[..., 1, 1]))
        e_mag += float(batch.w.ravel() @ mag.ravel())
    return ErrorBreakdown(e_mom, e_con, e_mag)


def estimate_qoi_error(solution: FEFunction, cfg: MhdConfig, qoi,
                       secondary=None, **adjoint_kwargs):
    """Dual solve plus weighting in one call.

    Returns (breakdown, dual, adjoint_seconds).  secondary=None linearizes
    the dual operator at the discrete solution; passing an exact-solution
    object linearizes at the midpoint of the pair instead.
    """
    dual, seconds = adjoint_solve(solution, cfg, qoi, secondary=secondary,
                                  **adjoint_kwargs)
    return algebraic_breakdown(solution, dual, cfg), dual, seconds


def magnetic_divergence_norm(fn: FEFunction) -> float:
    """L2 norm of div b_h, the quantity the divergence penalty suppresses."""
    w, _, fields = evaluate_fields(fn)
    div_b = fields["gb"][..., 0, 0] + fields["gb"][..., 1, 1]
    return float(np.sqrt(w.ravel() @ (div_b ** 2).ravel()))
