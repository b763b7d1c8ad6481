"""Weak forms for stationary incompressible MHD with an exact divergence
penalty on the magnetic field, their linearization, the averaged adjoint
form, and box quantities of interest.

All vector calculus is the planar embedding: curls of in-plane fields are
scalars (dv_y/dx - dv_x/dy), crosses of two in-plane fields are scalars
(v_x w_y - v_y w_x), and a scalar r crossed back into the plane gives
r * (-w_y, w_x).  The nonlinear terms are at most quadratic, so the
averaged linearization along the segment between two states equals the
Jacobian at the midpoint state; the adjoint kernels below are the formal
transposes of that midpoint Jacobian, integrated by parts so no boundary
terms remain for admissible test functions.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .elements import assembly_exactness, reference_element, triangle_rule
from .linalg import SparseSystem
from .mesh import cell_geometry
from .space import COMPONENTS, FEFunction, ProductSpace

ALL_TERMS = frozenset({
    "viscous", "convection", "pressure", "continuity",
    "lorentz", "induction", "magnetic_curl", "magnetic_div",
})
MOMENTUM_TERMS = frozenset({"viscous", "convection", "pressure", "lorentz"})
CONTINUITY_TERMS = frozenset({"continuity"})
MAGNETIC_TERMS = frozenset({"induction", "magnetic_curl", "magnetic_div"})

_VAL, _DX, _DY = 0, 1, 2
_CHUNK = 1024


@dataclass(frozen=True)
class MhdConfig:
    Re: float
    Re_m: float
    kappa: float = 1.0
    body_force: object = None        # callable (m, 2) points -> (m, 2), or None
    terms: frozenset = ALL_TERMS

    def __post_init__(self):
        if self.Re <= 0 or self.Re_m <= 0 or self.kappa <= 0:
            raise ValueError("Re, Re_m, and kappa must be positive")
        unknown = set(self.terms) - ALL_TERMS
        if unknown:
            raise ValueError(f"unknown weak-form terms: {sorted(unknown)}")

    def with_re(self, Re):
        return dataclasses.replace(self, Re=float(Re))

    def without_terms(self, *names):
        return dataclasses.replace(self, terms=self.terms - set(names))


@dataclass(frozen=True)
class QoISpec:
    """Average or integral of one solution component over an axis-aligned box."""

    component: str
    box: tuple
    normalize: bool = False

    def __post_init__(self):
        if self.component not in COMPONENTS:
            raise ValueError(f"unknown component {self.component!r}")
        x0, x1, y0, y1 = self.box
        if not (x0 < x1 and y0 < y1):
            raise ValueError("qoi box must have positive extent")
        if min(x0, y0) < -0.5 - 1e-12 or max(x1, y1) > 0.5 + 1e-12:
            raise ValueError("qoi box must lie inside the computational square")

    @property
    def area(self):
        x0, x1, y0, y1 = self.box
        return (x1 - x0) * (y1 - y0)


class LinearizationState:
    """State pair whose midpoint drives the adjoint linearization.

    secondary may be None (linearize about the discrete solution itself),
    another FEFunction on the same mesh, or an object with velocity,
    velocity_grad, magnetic, magnetic_grad methods (an exact solution).
    """

    def __init__(self, primal: FEFunction, secondary=None):
        if secondary is not None and isinstance(secondary, FEFunction):
            if secondary.space.mesh is not primal.space.mesh:
                raise ValueError("linearization states must share a mesh")
        self.primal = primal
        self.secondary = secondary

    def spaces(self):
        out = [self.primal.space]
        if isinstance(self.secondary, FEFunction):
            out.append(self.secondary.space)
        return out


_ref_cache = {}


def _ref_tab(degree, rule):
    key = (degree, rule.exactness)
    if key not in _ref_cache:
        _ref_cache[key] = reference_element(degree).tabulate(rule.points)
    return _ref_cache[key]


class _Batch:
    """Geometry and tabulations for a contiguous range of cells."""

    def __init__(self, mesh, rule, degrees, c0, c1, det, inv, jac, v0, need_phys):
        self.c0, self.c1 = c0, c1
        self.rule = rule
        self.w = det[c0:c1, None] * rule.weights[None, :]
        self._tab = {}
        for d in set(degrees):
            vals, gref = _ref_tab(d, rule)
            gphys = np.einsum("bqe,ced->cbqd", gref, inv[c0:c1])
            self._tab[d] = (vals, gphys)
        self.phys = None
        if need_phys:
            self.phys = v0[c0:c1, None, :] + np.einsum(
                "cde,qe->cqd", jac[c0:c1], rule.points
            )

    def tab(self, degree):
        return self._tab[degree]

    def arr(self, degree, part):
        vals, gphys = self._tab[degree]
        return vals if part == _VAL else gphys[..., part - 1]


def _iter_batches(mesh, degrees, rule, need_phys=False, chunk=_CHUNK):
    jac, det, inv = cell_geometry(mesh)
    v0 = mesh.vertices[mesh.cells[:, 0]]
    for c0 in range(0, mesh.n_cells, chunk):
        c1 = min(c0 + chunk, mesh.n_cells)
        yield _Batch(mesh, rule, degrees, c0, c1, det, inv, jac, v0, need_phys)


def _eval_function(fn: FEFunction, batch: _Batch):
    """Velocity, magnetic, and pressure values/gradients at batch points."""
    sp = fn.space

    def comp(name):
        cd = sp.cell_dofs(name)[batch.c0:batch.c1]
        c = fn.coeffs[cd]
        vals, gphys = batch.tab(sp.component_degree[name])
        return c @ vals, np.einsum("cb,cbqd->cqd", c, gphys)

    ux, gux = comp("u_x")
    uy, guy = comp("u_y")
    bx, gbx = comp("b_x")
    by, gby = comp("b_y")
    p, _ = comp("p")
    return {
        "u": np.stack([ux, uy], axis=-1),
        "gu": np.stack([gux, guy], axis=-2),
        "b": np.stack([bx, by], axis=-1),
        "gb": np.stack([gbx, gby], axis=-2),
        "p": p,
    }


def _eval_analytic(obj, batch: _Batch):
    pts = batch.phys.reshape(-1, 2)
    shape = batch.phys.shape[:2]
    return {
        "u": np.asarray(obj.velocity(pts)).reshape(*shape, 2),
        "gu": np.asarray(obj.velocity_grad(pts)).reshape(*shape, 2, 2),
        "b": np.asarray(obj.magnetic(pts)).reshape(*shape, 2),
        "gb": np.asarray(obj.magnetic_grad(pts)).reshape(*shape, 2, 2),
    }


def _mean_fields(lin: LinearizationState, batch: _Batch):
    a = _eval_function(lin.primal, batch)
    if lin.secondary is None:
        return a
    if isinstance(lin.secondary, FEFunction):
        b = _eval_function(lin.secondary, batch)
    else:
        b = _eval_analytic(lin.secondary, batch)
    return {k: 0.5 * (a[k] + b[k]) for k in ("u", "gu", "b", "gb")}


def _add(slots, tf, uf, tp, up, coef):
    block = slots.setdefault((tf, uf), {})
    block[(tp, up)] = block.get((tp, up), 0.0) + coef


def _radd(slots, comp, part, coef):
    parts = slots.setdefault(comp, {})
    parts[part] = parts.get(part, 0.0) + coef


def _residual_slots(fields, cfg: MhdConfig, f_vals):
    """Coefficient arrays multiplying test values/gradients per component."""
    u, gu = fields["u"], fields["gu"]
    b, gb = fields["b"], fields["gb"]
    p = fields["p"]
    nu = 1.0 / cfg.Re
    eta = cfg.kappa / cfg.Re_m
    k = cfg.kappa
    curl_b = gb[..., 1, 0] - gb[..., 0, 1]
    div_u = gu[..., 0, 0] + gu[..., 1, 1]
    div_b = gb[..., 0, 0] + gb[..., 1, 1]
    slots = {}
    if "viscous" in cfg.terms:
        _radd(slots, "u_x", _DX, nu * gu[..., 0, 0])
        _radd(slots, "u_x", _DY, nu * gu[..., 0, 1])
        _radd(slots, "u_y", _DX, nu * gu[..., 1, 0])
        _radd(slots, "u_y", _DY, nu * gu[..., 1, 1])
    if "convection" in cfg.terms:
        _radd(slots, "u_x", _VAL, u[..., 0] * gu[..., 0, 0] + u[..., 1] * gu[..., 0, 1])
        _radd(slots, "u_y", _VAL, u[..., 0] * gu[..., 1, 0] + u[..., 1] * gu[..., 1, 1])
    if "pressure" in cfg.terms:
        _radd(slots, "u_x", _DX, -p)
        _radd(slots, "u_y", _DY, -p)
    if "continuity" in cfg.terms:
        _radd(slots, "p", _VAL, div_u)
    if "lorentz" in cfg.terms:
        # -kappa ((curl b) x b) . v
        _radd(slots, "u_x", _VAL, k * curl_b * b[..., 1])
        _radd(slots, "u_y", _VAL, -k * curl_b * b[..., 0])
    if "induction" in cfg.terms:
        # -kappa (curl(u x b)) . c with u x b scalar
        s_x = (gu[..., 0, 0] * b[..., 1] + u[..., 0] * gb[..., 1, 0]
               - gu[..., 1, 0] * b[..., 0] - u[..., 1] * gb[..., 0, 0])
        s_y = (gu[..., 0, 1] * b[..., 1] + u[..., 0] * gb[..., 1, 1]
               - gu[..., 1, 1] * b[..., 0] - u[..., 1] * gb[..., 0, 1])
        _radd(slots, "b_x", _VAL, -k * s_y)
        _radd(slots, "b_y", _VAL, k * s_x)
    if "magnetic_curl" in cfg.terms:
        _radd(slots, "b_x", _DY, -eta * curl_b)
        _radd(slots, "b_y", _DX, eta * curl_b)
    if "magnetic_div" in cfg.terms:
        _radd(slots, "b_x", _DX, eta * div_b)
        _radd(slots, "b_y", _DY, eta * div_b)
    if f_vals is not None:
        _radd(slots, "u_x", _VAL, -f_vals[..., 0])
        _radd(slots, "u_y", _VAL, -f_vals[..., 1])
    return slots


def _jacobian_slots(fields, cfg: MhdConfig):
    """(test comp, trial comp) -> (test part, trial part) -> coefficient."""
    u, gu = fields["u"], fields["gu"]
    b, gb = fields["b"], fields["gb"]
    nu = 1.0 / cfg.Re
    eta = cfg.kappa / cfg.Re_m
    k = cfg.kappa
    curl_b = gb[..., 1, 0] - gb[..., 0, 1]
    slots = {}
    if "viscous" in cfg.terms:
        for c in ("u_x", "u_y"):
            _add(slots, c, c, _DX, _DX, nu)
            _add(slots, c, c, _DY, _DY, nu)
    if "convection" in cfg.terms:
        _add(slots, "u_x", "u_x", _VAL, _VAL, gu[..., 0, 0])
        _add(slots, "u_x", "u_x", _VAL, _DX, u[..., 0])
        _add(slots, "u_x", "u_x", _VAL, _DY, u[..., 1])
        _add(slots, "u_x", "u_y", _VAL, _VAL, gu[..., 0, 1])
        _add(slots, "u_y", "u_x", _VAL, _VAL, gu[..., 1, 0])
        _add(slots, "u_y", "u_y", _VAL, _VAL, gu[..., 1, 1])
        _add(slots, "u_y", "u_y", _VAL, _DX, u[..., 0])
        _add(slots, "u_y", "u_y", _VAL, _DY, u[..., 1])
    if "pressure" in cfg.terms:
        _add(slots, "u_x", "p", _DX, _VAL, -1.0)
        _add(slots, "u_y", "p", _DY, _VAL, -1.0)
    if "continuity" in cfg.terms:
        _add(slots, "p", "u_x", _VAL, _DX, 1.0)
        _add(slots, "p", "u_y", _VAL, _DY, 1.0)
    if "lorentz" in cfg.terms:
        _add(slots, "u_x", "b_x", _VAL, _DY, -k * b[..., 1])
        _add(slots, "u_x", "b_y", _VAL, _DX, k * b[..., 1])
        _add(slots, "u_x", "b_y", _VAL, _VAL, k * curl_b)
        _add(slots, "u_y", "b_x", _VAL, _DY, k * b[..., 0])
        _add(slots, "u_y", "b_x", _VAL, _VAL, -k * curl_b)
        _add(slots, "u_y", "b_y", _VAL, _DX, -k * b[..., 0])
    if "induction" in cfg.terms:
        # velocity perturbation inside u x b
        _add(slots, "b_x", "u_x", _VAL, _DY, -k * b[..., 1])
        _add(slots, "b_x", "u_x", _VAL, _VAL, -k * gb[..., 1, 1])
        _add(slots, "b_x", "u_y", _VAL, _DY, k * b[..., 0])
        _add(slots, "b_x", "u_y", _VAL, _VAL, k * gb[..., 0, 1])
        _add(slots, "b_y", "u_x", _VAL, _DX, k * b[..., 1])
        _add(slots, "b_y", "u_x", _VAL, _VAL, k * gb[..., 1, 0])
        _add(slots, "b_y", "u_y", _VAL, _DX, -k * b[..., 0])
        _add(slots, "b_y", "u_y", _VAL, _VAL, -k * gb[..., 0, 0])
        # magnetic perturbation inside u x b
        _add(slots, "b_x", "b_x", _VAL, _VAL, k * gu[..., 1, 1])
        _add(slots, "b_x", "b_x", _VAL, _DY, k * u[..., 1])
        _add(slots, "b_x", "b_y", _VAL, _VAL, -k * gu[..., 0, 1])
        _add(slots, "b_x", "b_y", _VAL, _DY, -k * u[..., 0])
        _add(slots, "b_y", "b_x", _VAL, _VAL, -k * gu[..., 1, 0])
        _add(slots, "b_y", "b_x", _VAL, _DX, -k * u[..., 1])
        _add(slots, "b_y", "b_y", _VAL, _VAL, k * gu[..., 0, 0])
        _add(slots, "b_y", "b_y", _VAL, _DX, k * u[..., 0])
    if "magnetic_curl" in cfg.terms:
        _add(slots, "b_x", "b_x", _DY, _DY, eta)
        _add(slots, "b_x", "b_y", _DY, _DX, -eta)
        _add(slots, "b_y", "b_x", _DX, _DY, -eta)
        _add(slots, "b_y", "b_y", _DX, _DX, eta)
    if "magnetic_div" in cfg.terms:
        _add(slots, "b_x", "b_x", _DX, _DX, eta)
        _add(slots, "b_x", "b_y", _DX, _DY, eta)
        _add(slots, "b_y", "b_x", _DY, _DX, eta)
        _add(slots, "b_y", "b_y", _DY, _DY, eta)
    return slots


def _adjoint_slots(mean, cfg: MhdConfig):
    """Adjoint kernels at the midpoint state; rows are primal-trial
    components tested against, columns are adjoint unknowns."""
    um, gum = mean["u"], mean["gu"]
    bm, gbm = mean["b"], mean["gb"]
    nu = 1.0 / cfg.Re
    eta = cfg.kappa / cfg.Re_m
    k = cfg.kappa
    div_um = gum[..., 0, 0] + gum[..., 1, 1]
    curl_bm = gbm[..., 1, 0] - gbm[..., 0, 1]
    slots = {}
    if "viscous" in cfg.terms:
        for c in ("u_x", "u_y"):
            _add(slots, c, c, _DX, _DX, nu)
            _add(slots, c, c, _DY, _DY, nu)
    if "convection" in cfg.terms:
        # transposed-gradient, advective, and compressibility parts
        _add(slots, "u_x", "u_x", _VAL, _VAL, gum[..., 0, 0] - div_um)
        _add(slots, "u_x", "u_x", _VAL, _DX, -um[..., 0])
        _add(slots, "u_x", "u_x", _VAL, _DY, -um[..., 1])
        _add(slots, "u_x", "u_y", _VAL, _VAL, gum[..., 1, 0])
        _add(slots, "u_y", "u_x", _VAL, _VAL, gum[..., 0, 1])
        _add(slots, "u_y", "u_y", _VAL, _VAL, gum[..., 1, 1] - div_um)
        _add(slots, "u_y", "u_y", _VAL, _DX, -um[..., 0])
        _add(slots, "u_y", "u_y", _VAL, _DY, -um[..., 1])
    if "pressure" in cfg.terms:
        _add(slots, "u_x", "p", _DX, _VAL, 1.0)
        _add(slots, "u_y", "p", _DY, _VAL, 1.0)
    if "continuity" in cfg.terms:
        _add(slots, "p", "u_x", _VAL, _DX, -1.0)
        _add(slots, "p", "u_y", _VAL, _DY, -1.0)
    if "lorentz" in cfg.terms:
        # -kappa (bm x curl beta) . v
        _add(slots, "u_x", "b_x", _VAL, _DY, k * bm[..., 1])
        _add(slots, "u_x", "b_y", _VAL, _DX, -k * bm[..., 1])
        _add(slots, "u_y", "b_x", _VAL, _DY, -k * bm[..., 0])
        _add(slots, "u_y", "b_y", _VAL, _DX, k * bm[..., 0])
    if "induction" in cfg.terms:
        # -kappa (curl(bm x phi) - (curl bm) x phi) . c
        _add(slots, "b_x", "u_x", _VAL, _VAL, k * gbm[..., 1, 1])
        _add(slots, "b_x", "u_x", _VAL, _DY, k * bm[..., 1])
        _add(slots, "b_x", "u_y", _VAL, _VAL, -k * (curl_bm + gbm[..., 0, 1]))
        _add(slots, "b_x", "u_y", _VAL, _DY, -k * bm[..., 0])
        _add(slots, "b_y", "u_x", _VAL, _VAL, k * (curl_bm - gbm[..., 1, 0]))
        _add(slots, "b_y", "u_x", _VAL, _DX, -k * bm[..., 1])
        _add(slots, "b_y", "u_y", _VAL, _VAL, k * gbm[..., 0, 0])
        _add(slots, "b_y", "u_y", _VAL, _DX, k * bm[..., 0])
        # +kappa (um x curl beta) . c
        _add(slots, "b_x", "b_x", _VAL, _DY, -k * um[..., 1])
        _add(slots, "b_x", "b_y", _VAL, _DX, k * um[..., 1])
        _add(slots, "b_y", "b_x", _VAL, _DY, k * um[..., 0])
        _add(slots, "b_y", "b_y", _VAL, _DX, -k * um[..., 0])
    if "magnetic_curl" in cfg.terms:
        _add(slots, "b_x", "b_x", _DY, _DY, eta)
        _add(slots, "b_x", "b_y", _DY, _DX, -eta)
        _add(slots, "b_y", "b_x", _DX, _DY, -eta)
        _add(slots, "b_y", "b_y", _DX, _DX, eta)
    if "magnetic_div" in cfg.terms:
        _add(slots, "b_x", "b_x", _DX, _DX, eta)
        _add(slots, "b_x", "b_y", _DX, _DY, eta)
        _add(slots, "b_y", "b_x", _DY, _DX, eta)
        _add(slots, "b_y", "b_y", _DY, _DY, eta)
    return slots


def _bilinear_local(batch, deg_test, deg_trial, block):
    n_i = batch.tab(deg_test)[0].shape[0]
    n_j = batch.tab(deg_trial)[0].shape[0]
    ncc = batch.w.shape[0]
    local = np.zeros((ncc, n_i, n_j))
    for (tp, up), coef in block.items():
        cw = batch.w * coef
        ti = batch.arr(deg_test, tp)
        uj = batch.arr(deg_trial, up)
        weighted = cw[:, None, :] * (ti[None] if ti.ndim == 2 else ti)
        local += weighted @ (uj.T if uj.ndim == 2 else uj.transpose(0, 2, 1))
    return local


def _assembly_rule(*spaces):
    degrees = [d for sp in spaces for d in sp.degrees]
    return triangle_rule(assembly_exactness(*degrees))


def assemble_residual(test_space: ProductSpace, state: FEFunction, cfg: MhdConfig,
                      chunk=_CHUNK):
    """Weak residual of the state, tested against test_space functions.

    The test space may be richer than the state's own space; both must share
    the mesh.  The body force enters with a negative sign, so a solution has
    residual zero.
    """
    if test_space.mesh is not state.space.mesh:
        raise ValueError("test space and state must share a mesh")
    rule = _assembly_rule(test_space, state.space)
    degrees = set(test_space.degrees) | set(state.space.degrees)
    need_phys = cfg.body_force is not None
    out = np.zeros(test_space.n_dofs)
    for batch in _iter_batches(test_space.mesh, degrees, rule, need_phys, chunk):
        fields = _eval_function(state, batch)
        f_vals = None
        if need_phys:
            f_vals = np.asarray(cfg.body_force(batch.phys.reshape(-1, 2))).reshape(
                *batch.phys.shape[:2], 2)
        slots = _residual_slots(fields, cfg, f_vals)
        for comp, parts in slots.items():
            deg = test_space.component_degree[comp]
            acc = 0.0
            for part, coef in parts.items():
                cw = batch.w * coef
                arr = batch.arr(deg, part)
                acc = acc + (cw @ arr.T if arr.ndim == 2
                             else np.einsum("cq,cbq->cb", cw, arr))
            np.add.at(out, test_space.cell_dofs(comp)[batch.c0:batch.c1], acc)
    return out


def _assemble_bilinear(space: ProductSpace, slots_of_batch, extra_degrees=(),
                       need_phys=False, chunk=_CHUNK):
    rule = triangle_rule(assembly_exactness(*space.degrees, *extra_degrees))
    degrees = set(space.degrees) | set(extra_degrees)
    system = SparseSystem(space.n_dofs)
    for batch in _iter_batches(space.mesh, degrees, rule, need_phys, chunk):
        slots = slots_of_batch(batch)
        for (tf, uf), block in sorted(slots.items()):
            local = _bilinear_local(
                batch, space.component_degree[tf], space.component_degree[uf], block)
            rows = space.cell_dofs(tf)[batch.c0:batch.c1]
            cols = space.cell_dofs(uf)[batch.c0:batch.c1]
            system.add_triplets(
                np.broadcast_to(rows[:, :, None], local.shape),
                np.broadcast_to(cols[:, None, :], local.shape),
                local,
            )
        system.compress_pending()
    return system.matrix()


def assemble_jacobian(space: ProductSpace, state: FEFunction, cfg: MhdConfig,
                      chunk=_CHUNK):
    """Exact derivative of the weak residual at the given state."""
    if space is not state.space:
        raise ValueError("jacobian is assembled on the state's own space")
    return _assemble_bilinear(
        space, lambda batch: _jacobian_slots(_eval_function(state, batch), cfg),
        chunk=chunk)


def assemble_adjoint_matrix(space: ProductSpace, lin: LinearizationState,
                            cfg: MhdConfig, chunk=_CHUNK):
    """Adjoint operator on the given (usually enriched) space, linearized at
    the midpoint of the state pair."""
    extra = [d for sp in lin.spaces() for d in sp.degrees]
    need_phys = lin.secondary is not None and not isinstance(lin.secondary, FEFunction)
    return _assemble_bilinear(
        space, lambda batch: _adjoint_slots(_mean_fields(lin, batch), cfg),
        extra_degrees=extra, need_phys=need_phys, chunk=chunk)


def _clip_polygon(poly, axis, bound, keep_low):
    out = []
    m = len(poly)
    for i in range(m):
        cur, nxt = poly[i], poly[(i + 1) % m]
        cin = (cur[axis] <= bound) if keep_low else (cur[axis] >= bound)
        nin = (nxt[axis] <= bound) if keep_low else (nxt[axis] >= bound)
        if cin:
            out.append(cur)
        if cin != nin:
            t = (bound - cur[axis]) / (nxt[axis] - cur[axis])
            out.append(cur + t * (nxt - cur))
    return out


def _clip_triangle_to_box(tri, box):
    x0, x1, y0, y1 = box
    poly = [np.asarray(v, dtype=float) for v in tri]
    for axis, bound, keep_low in ((0, x0, False), (0, x1, True),
                                  (1, y0, False), (1, y1, True)):
        poly = _clip_polygon(poly, axis, bound, keep_low)
        if len(poly) < 3:
            return []
    return poly


def _polygon_area(poly):
    a = 0.0
    for i in range(len(poly)):
        x0c, y0c = poly[i]
        x1c, y1c = poly[(i + 1) % len(poly)]
        a += x0c * y1c - x1c * y0c
    return 0.5 * a


def qoi_load_vector(space: ProductSpace, spec: QoISpec):
    """Vector L with L . coeffs = qoi; cells cut by the box boundary are
    integrated exactly by clipping and re-triangulating."""
    mesh = space.mesh
    comp = spec.component
    deg = space.component_degree[comp]
    el = reference_element(deg)
    rule = triangle_rule(deg)
    jac, det, inv = cell_geometry(mesh)
    x0, x1, y0, y1 = spec.box
    tol = 1e-12

    verts = mesh.vertices[mesh.cells]
    vin = ((verts[..., 0] >= x0 - tol) & (verts[..., 0] <= x1 + tol)
           & (verts[..., 1] >= y0 - tol) & (verts[..., 1] <= y1 + tol))
    full = vin.all(axis=1)
    bmin, bmax = verts.min(axis=1), verts.max(axis=1)
    outside = ((bmax[:, 0] <= x0 + tol) | (bmin[:, 0] >= x1 - tol)
               | (bmax[:, 1] <= y0 + tol) | (bmin[:, 1] >= y1 - tol))
    cut = np.where(~full & ~outside)[0]

    out = np.zeros(space.n_dofs)
    cell_dofs = space.cell_dofs(comp)
    vals, _ = _ref_tab(deg, rule)
    if np.any(full):
        w = det[full, None] * rule.weights[None, :]
        np.add.at(out, cell_dofs[full], w @ vals.T)
    for c in cut:
        poly = _clip_triangle_to_box(verts[c], spec.box)
        if not poly or abs(_polygon_area(poly)) < tol * det[c]:
            continue
        p0 = poly[0]
        for kth in range(1, len(poly) - 1):
            e1 = poly[kth] - p0
            e2 = poly[kth + 1] - p0
            sub_det = e1[0] * e2[1] - e1[1] * e2[0]
            if abs(sub_det) < tol * det[c]:
                continue
            pts = p0[None, :] + rule.points @ np.stack([e1, e2])
            ref = (pts - mesh.vertices[mesh.cells[c, 0]]) @ inv[c].T
            sub_vals, _ = el.tabulate(ref)
            out[cell_dofs[c]] += (sub_det * rule.weights) @ sub_vals.T
    if spec.normalize:
        out /= spec.area
    return out


def qoi_value(spec: QoISpec, fn: FEFunction) -> float:
    return float(qoi_load_vector(fn.space, spec) @ fn.coeffs)


def evaluate_fields(fn: FEFunction, exactness=None):
    """Quadrature-point weights, positions, and field samples for the whole
    mesh; a convenience for diagnostics and tests on small problems."""
    rule = triangle_rule(exactness if exactness is not None
                         else assembly_exactness(*fn.space.degrees))
    ws, phys, fields = [], [], []
    for batch in _iter_batches(fn.space.mesh, set(fn.space.degrees), rule, True):
        ws.append(batch.w)
        phys.append(batch.phys)
        fields.append(_eval_function(fn, batch))
    merged = {k: np.concatenate([f[k] for f in fields]) for k in fields[0]}
    return np.concatenate(ws), np.concatenate(phys), merged
