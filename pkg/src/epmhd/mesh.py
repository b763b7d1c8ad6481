"""Crossed triangular meshes of the square [-1/2, 1/2]^2.

Each of the n x n grid cells is split into four triangles around its
centroid, so a mesh has (n+1)^2 + n^2 vertices and 4 n^2 cells with
longest edge h = 1/n.  Vertex and cell ordering is deterministic:
grid vertices first (x fastest), then centroids, and the four
triangles of a grid cell appear bottom, right, top, left.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIDES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray        # (n_vertices, 2) float
    cells: np.ndarray           # (n_cells, 3) int, counterclockwise
    boundary_cells: np.ndarray  # (n_facets,) cell owning each boundary facet
    boundary_edges: np.ndarray  # (n_facets,) local edge index, 0..2
    boundary_sides: np.ndarray  # (n_facets,) index into SIDES
    n: int                      # subdivisions per axis

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_cells(self):
        return self.cells.shape[0]


def crossed_mesh(n: int) -> Mesh:
    """Build the crossed mesh with n subdivisions per axis."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"subdivision count must be a positive integer, got {n!r}")
    n = int(n)

    ticks = np.linspace(-0.5, 0.5, n + 1)
    gx, gy = np.meshgrid(ticks, ticks, indexing="xy")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    mids = 0.5 * (ticks[:-1] + ticks[1:])
    cx, cy = np.meshgrid(mids, mids, indexing="xy")
    centroids = np.column_stack([cx.ravel(), cy.ravel()])
    vertices = np.vstack([grid, centroids])

    nv_grid = (n + 1) ** 2
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    i = i.ravel()
    j = j.ravel()
    v00 = j * (n + 1) + i
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    m = nv_grid + j * n + i

    # four triangles per grid cell: bottom, right, top, left
    cells = np.empty((4 * n * n, 3), dtype=np.int64)
    cells[0::4] = np.column_stack([v00, v10, m])
    cells[1::4] = np.column_stack([v10, v11, m])
    cells[2::4] = np.column_stack([v11, v01, m])
    cells[3::4] = np.column_stack([v01, v00, m])

    # boundary facets: local edge 0 (vertices 0-1) of the wall-adjacent triangle
    rng = np.arange(n)
    bc, bs = [], []
    bc.append(4 * (rng * n + 0) + 3)        # left wall, j = 0..n-1
    bs.append(np.full(n, SIDES.index("left")))
    bc.append(4 * (rng * n + (n - 1)) + 1)  # right wall
    bs.append(np.full(n, SIDES.index("right")))
    bc.append(4 * (0 * n + rng) + 0)        # bottom wall, i = 0..n-1
    bs.append(np.full(n, SIDES.index("bottom")))
    bc.append(4 * ((n - 1) * n + rng) + 2)  # top wall
    bs.append(np.full(n, SIDES.index("top")))
    boundary_cells = np.concatenate(bc)
    boundary_sides = np.concatenate(bs)
    boundary_edges = np.zeros_like(boundary_cells)

    return Mesh(vertices, cells, boundary_cells, boundary_edges, boundary_sides, n)


def mesh_size(mesh: Mesh) -> float:
    """Longest edge over all cells (equals 1/n for crossed meshes)."""
    p = mesh.vertices[mesh.cells]
    e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]])
    return float(np.sqrt((e ** 2).sum(axis=-1)).max())


def cell_geometry(mesh: Mesh):
    """Affine map data per cell: Jacobian, |det|, and inverse.

    The reference triangle has vertices (0,0), (1,0), (0,1); columns of the
    Jacobian are the two physical edge vectors leaving vertex 0.
    """
    p = mesh.vertices[mesh.cells]
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if np.any(det <= 0):
        raise ValueError("mesh contains a degenerate or clockwise cell")
    inv = np.empty_like(jac)
    inv[:, 0, 0] = jac[:, 1, 1]
    inv[:, 0, 1] = -jac[:, 0, 1]
    inv[:, 1, 0] = -jac[:, 1, 0]
    inv[:, 1, 1] = jac[:, 0, 0]
    inv /= det[:, None, None]
    return jac, det, inv


def dump(mesh: Mesh) -> str:
    """Plain-text serialization; load() inverts it exactly."""
    out = [f"n {mesh.n}"]
    out += [f"v {float(x)!r} {float(y)!r}" for x, y in mesh.vertices]
    out += [f"c {a} {b} {c}" for a, b, c in mesh.cells]
    out += [
        f"f {c} {e} {s}"
        for c, e, s in zip(mesh.boundary_cells, mesh.boundary_edges, mesh.boundary_sides)
    ]
    return "\n".join(out) + "\n"


def load(text: str) -> Mesh:
    n = None
    verts, cells, facets = [], [], []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        tag, *rest = line.split()
        if tag == "n":
            n = int(rest[0])
        elif tag == "v":
            verts.append([float(rest[0]), float(rest[1])])
        elif tag == "c":
            cells.append([int(r) for r in rest])
        elif tag == "f":
            facets.append([int(r) for r in rest])
        else:
            raise ValueError(f"unknown record {tag!r} in mesh text")
    if n is None or not verts or not cells:
        raise ValueError("incomplete mesh text")
    facets = np.asarray(facets, dtype=np.int64).reshape(-1, 3)
    return Mesh(
        np.asarray(verts),
        np.asarray(cells, dtype=np.int64),
        facets[:, 0],
        facets[:, 1],
        facets[:, 2],
        n,
    )
