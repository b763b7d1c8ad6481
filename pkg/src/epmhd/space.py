"""Scalar Lagrange DOF layouts and the mixed (velocity, magnetic, pressure) space.

Global scalar DOFs are ordered vertices, then edge interiors (edge-major,
low vertex toward high vertex), then cell interiors.  The mixed space is
component-major: [u_x | u_y | b_x | b_y | p].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import reference_element
from .mesh import SIDES, Mesh, cell_geometry

COMPONENTS = ("u_x", "u_y", "b_x", "b_y", "p")

# tangential direction on an axis-aligned wall
TANGENTIAL_COMPONENT = {"left": "b_y", "right": "b_y", "bottom": "b_x", "top": "b_x"}

_LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


@dataclass(frozen=True)
class ScalarLayout:
    degree: int
    n_dofs: int
    cell_dofs: np.ndarray             # (n_cells, n_basis) int32
    node_coords: np.ndarray           # (n_dofs, 2)
    side_dofs: dict                   # side name -> sorted dof ids on that wall


def scalar_layout(mesh: Mesh, degree: int) -> ScalarLayout:
    el = reference_element(degree)
    k = degree
    cells = mesh.cells
    nc, nv = mesh.n_cells, mesh.n_vertices

    pairs = np.concatenate([cells[:, [a, b]] for a, b in _LOCAL_EDGES])
    edges, inverse = np.unique(np.sort(pairs, axis=1), axis=0, return_inverse=True)
    edge_of = inverse.reshape(3, nc).T    # (nc, 3) global edge per local edge
    ne = len(edges)
    n_edge = k - 1
    n_int = (k - 1) * (k - 2) // 2
    n_dofs = nv + n_edge * ne + n_int * nc

    cell_dofs = np.empty((nc, el.n_basis), dtype=np.int32)
    cell_dofs[:, :3] = cells
    for le, (a, b) in enumerate(_LOCAL_EDGES):
        if n_edge == 0:
            break
        base = nv + edge_of[:, le] * n_edge
        idx = np.arange(n_edge)
        fwd = (cells[:, a] < cells[:, b])[:, None]
        cell_dofs[:, 3 + le * n_edge: 3 + (le + 1) * n_edge] = (
            base[:, None] + np.where(fwd, idx, n_edge - 1 - idx)
        )
    if n_int:
        base = nv + ne * n_edge + np.arange(nc, dtype=np.int64) * n_int
        cell_dofs[:, 3 + 3 * n_edge:] = base[:, None] + np.arange(n_int)

    node_coords = np.empty((n_dofs, 2))
    node_coords[:nv] = mesh.vertices
    if n_edge:
        va = mesh.vertices[edges[:, 0]]
        vb = mesh.vertices[edges[:, 1]]
        t = (np.arange(1, k) / k)[None, :, None]
        node_coords[nv: nv + ne * n_edge] = (va[:, None] + t * (vb - va)[:, None]).reshape(-1, 2)
    if n_int:
        jac, _, _ = cell_geometry(mesh)
        ref_int = el.nodes[3 + 3 * n_edge:]
        v0 = mesh.vertices[cells[:, 0]]
        mapped = v0[:, None, :] + np.einsum("cde,ie->cid", jac, ref_int)
        node_coords[nv + ne * n_edge:] = mapped.reshape(-1, 2)

    side_dofs = {}
    for side_idx, side in enumerate(SIDES):
        sel = mesh.boundary_sides == side_idx
        dofs = []
        for c, e in zip(mesh.boundary_cells[sel], mesh.boundary_edges[sel]):
            a, b = _LOCAL_EDGES[e]
            dofs.extend((cells[c, a], cells[c, b]))
            if n_edge:
                start = nv + edge_of[c, e] * n_edge
                dofs.extend(range(start, start + n_edge))
        side_dofs[side] = np.unique(np.asarray(dofs, dtype=np.int64))

    return ScalarLayout(k, n_dofs, cell_dofs, node_coords, side_dofs)


class ProductSpace:
    """Mixed space with Lagrange degrees (k_u, k_b, k_p) on a shared mesh."""

    def __init__(self, mesh: Mesh, degrees):
        ku, kb, kp = (int(d) for d in degrees)
        for d in (ku, kb, kp):
            if not 1 <= d <= 4:
                raise ValueError(f"component degree {d} outside the supported range 1..4")
        if ku < 2 or ku < kp + 1:
            raise ValueError(
                f"velocity/pressure pair (P{ku}, P{kp}) is not inf-sup stable; "
                "need k_u >= 2 and k_u >= k_p + 1"
            )
        self.mesh = mesh
        self.degrees = (ku, kb, kp)
        self._layouts = {}
        for d in self.degrees:
            if d not in self._layouts:
                self._layouts[d] = scalar_layout(mesh, d)
        self.component_degree = {"u_x": ku, "u_y": ku, "b_x": kb, "b_y": kb, "p": kp}
        self.offsets = {}
        pos = 0
        for comp in COMPONENTS:
            self.offsets[comp] = pos
            pos += self.layout(comp).n_dofs
        self.n_dofs = pos

    def layout(self, comp: str) -> ScalarLayout:
        return self._layouts[self.component_degree[comp]]

    def component_slice(self, comp: str) -> slice:
        off = self.offsets[comp]
        return slice(off, off + self.layout(comp).n_dofs)

    def cell_dofs(self, comp: str) -> np.ndarray:
        """Global mixed-space dof ids per cell for one component."""
        return self.layout(comp).cell_dofs + self.offsets[comp]

    def interpolate(self, velocity=None, magnetic=None, pressure=None) -> np.ndarray:
        """Nodal interpolation; callables take (m, 2) points and return
        (m, 2) vectors (velocity, magnetic) or (m,) scalars (pressure)."""
        coeffs = np.zeros(self.n_dofs)
        if velocity is not None:
            vals = np.asarray(velocity(self.layout("u_x").node_coords))
            coeffs[self.component_slice("u_x")] = vals[:, 0]
            coeffs[self.component_slice("u_y")] = vals[:, 1]
        if magnetic is not None:
            vals = np.asarray(magnetic(self.layout("b_x").node_coords))
            coeffs[self.component_slice("b_x")] = vals[:, 0]
            coeffs[self.component_slice("b_y")] = vals[:, 1]
        if pressure is not None:
            coeffs[self.component_slice("p")] = np.asarray(pressure(self.layout("p").node_coords))
        return coeffs


@dataclass
class FEFunction:
    space: ProductSpace
    coeffs: np.ndarray

    def component(self, comp: str) -> np.ndarray:
        return self.coeffs[self.space.component_slice(comp)]


def enriched_space(space: ProductSpace) -> ProductSpace:
    """Same mesh, every component degree raised by one."""
    return ProductSpace(space.mesh, tuple(d + 1 for d in space.degrees))


def velocity_dirichlet(space: ProductSpace, data) -> tuple[np.ndarray, np.ndarray]:
    """Both velocity components constrained on every wall.

    data(points, side) -> (m, 2) prescribed velocity.
    """
    layout = space.layout("u_x")
    dofs, values = [], []
    for side in SIDES:
        ids = layout.side_dofs[side]
        vals = np.asarray(data(layout.node_coords[ids], side))
        for comp, col in (("u_x", 0), ("u_y", 1)):
            dofs.append(ids + space.offsets[comp])
            values.append(vals[:, col])
    return _merge_constraints(np.concatenate(dofs), np.concatenate(values))


def magnetic_tangential_dirichlet(space: ProductSpace, data) -> tuple[np.ndarray, np.ndarray]:
    """Tangential magnetic component constrained per wall; corners get both.

    data(points, side) -> (m, 2) prescribed field; only the wall-tangential
    component is used on each wall.
    """
    layout = space.layout("b_x")
    dofs, values = [], []
    for side in SIDES:
        comp = TANGENTIAL_COMPONENT[side]
        ids = layout.side_dofs[side]
        vals = np.asarray(data(layout.node_coords[ids], side))
        dofs.append(ids + space.offsets[comp])
        values.append(vals[:, 0 if comp == "b_x" else 1])
    return _merge_constraints(np.concatenate(dofs), np.concatenate(values))


def constrained_dofs(space: ProductSpace, pin_pressure=True) -> np.ndarray:
    """All dofs that carry essential conditions: the full velocity trace,
    the tangential magnetic trace, and one pinned pressure dof (the pure
    Dirichlet velocity problem only determines pressure up to a constant)."""
    zero = lambda p, side: np.zeros((len(p), 2))
    du, _ = velocity_dirichlet(space, zero)
    db, _ = magnetic_tangential_dirichlet(space, zero)
    parts = [du, db]
    if pin_pressure:
        parts.append(np.array([space.offsets["p"]]))
    return np.unique(np.concatenate(parts))


def _merge_constraints(dofs, values):
    """Deduplicate repeated constraints, enforcing agreement at shared dofs."""
    order = np.argsort(dofs, kind="stable")
    dofs, values = dofs[order], values[order]
    keep = np.ones(len(dofs), dtype=bool)
    keep[1:] = dofs[1:] != dofs[:-1]
    dup = ~keep
    if np.any(dup):
        prev = np.maximum.accumulate(np.where(keep, np.arange(len(dofs)), -1))
        if not np.allclose(values[dup], values[prev[dup]], atol=1e-12):
            raise ValueError("conflicting Dirichlet values at shared boundary dofs")
    return dofs[keep], values[keep]
