"""Sparse system accumulation, Dirichlet elimination, and direct solves."""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.io import mmwrite
from scipy.sparse.linalg import splu


class SingularSystemError(RuntimeError):
    """Direct factorization hit a zero or numerically unusable pivot."""

    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = [] if rows is None else list(rows)


class SparseSystem:
    """Triplet accumulator producing a CSC matrix with summed duplicates."""

    def __init__(self, n_dofs: int):
        if n_dofs < 1:
            raise ValueError("system must have at least one unknown")
        self.n = int(n_dofs)
        self.rhs = np.zeros(self.n)
        self._merged = None
        self._rows, self._cols, self._vals = [], [], []

    def accumulate(self, i: int, j: int, value: float):
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(f"entry ({i}, {j}) outside {self.n}x{self.n} system")
        self._rows.append(np.asarray([i], dtype=np.int32))
        self._cols.append(np.asarray([j], dtype=np.int32))
        self._vals.append(np.asarray([value]))

    def add_triplets(self, rows, cols, values):
        """Bulk accumulation; duplicates are summed on compression."""
        rows = np.asarray(rows, dtype=np.int32).ravel()
        cols = np.asarray(cols, dtype=np.int32).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if not (rows.size == cols.size == values.size):
            raise ValueError("triplet arrays must have matching lengths")
        self._rows.append(rows)
        self._cols.append(cols)
        self._vals.append(values)

    def compress_pending(self):
        """Fold pending triplets into the merged matrix to bound memory."""
        if not self._rows:
            return
        chunk = sparse.csc_matrix(
            (np.concatenate(self._vals), (np.concatenate(self._rows), np.concatenate(self._cols))),
            shape=(self.n, self.n),
        )
        self._rows, self._cols, self._vals = [], [], []
        self._merged = chunk if self._merged is None else self._merged + chunk

    def add_rhs(self, dofs, values):
        np.add.at(self.rhs, np.asarray(dofs).ravel(), np.asarray(values).ravel())

    def matrix(self) -> sparse.csc_matrix:
        self.compress_pending()
        if self._merged is None:
            self._merged = sparse.csc_matrix((self.n, self.n))
        return self._merged


def apply_dirichlet(A, b, dofs, values):
    """Impose x[dofs] = values by symmetric elimination.

    Constrained rows become identity rows with the value on the right-hand
    side, and constrained columns are folded into the right-hand side, so a
    symmetric block stays symmetric.  The input matrix is consumed.
    """
    A = A.tocsc()
    n = A.shape[0]
    dofs = np.asarray(dofs, dtype=np.int64).ravel()
    values = np.asarray(values, dtype=float).ravel()
    if len(np.unique(dofs)) != len(dofs):
        raise ValueError("repeated dof in Dirichlet constraint list")
    b = np.array(b, dtype=float, copy=True)
    if np.any(values != 0.0):
        lift = np.zeros(n)
        lift[dofs] = values
        b -= A @ lift
    free = np.ones(n, dtype=bool)
    free[dofs] = False
    col_of = np.repeat(np.arange(n), np.diff(A.indptr))
    A.data[~(free[A.indices] & free[col_of])] = 0.0
    A.eliminate_zeros()
    ind = np.zeros(n)
    ind[dofs] = 1.0
    A = (A + sparse.diags(ind)).tocsc()
    b[dofs] = values
    return A, b


def _singular_diagnostics(A, original):
    A = A.tocsr()
    empty = np.where(np.diff(A.indptr) == 0)[0]
    diag = A.diagonal()
    zero_diag = np.where(diag == 0.0)[0]
    rows = sorted(set(empty[:5]) | set(zero_diag[:5]))
    hints = []
    if len(empty):
        hints.append(f"{len(empty)} empty rows (first: {empty[:5].tolist()})")
    if len(zero_diag):
        hints.append(f"{len(zero_diag)} zero diagonal entries (first: {zero_diag[:5].tolist()})")
    detail = "; ".join(hints) if hints else "no structurally zero pivot found"
    return SingularSystemError(f"singular system: {original}; {detail}", rows=rows)


def solve_direct(A, b, rtol=1e-11, permc_spec="COLAMD"):
    """Sparse LU solve with a relative-residual guarantee."""
    A = A.tocsc()
    b = np.asarray(b, dtype=float)
    try:
        lu = splu(A, permc_spec=permc_spec)
        x = lu.solve(b)
    except RuntimeError as exc:
        raise _singular_diagnostics(A, exc) from exc
    finally:
        lu = None
    if not np.all(np.isfinite(x)):
        raise _singular_diagnostics(A, "factorization produced non-finite values")
    scale = np.sqrt(np.dot(A.data, A.data)) * np.linalg.norm(x) + np.linalg.norm(b)
    resid = np.linalg.norm(A @ x - b)
    if resid > rtol * max(scale, 1e-300):
        raise RuntimeError(
            f"direct solve residual {resid:.3e} exceeds {rtol:.1e} * {scale:.3e}"
        )
    return x


def export_matrix_market(A, b, path_prefix: str):
    """Write system.mtx / system_rhs.mtx next to the given prefix."""
    mmwrite(f"{path_prefix}.mtx", A.tocoo())
    mmwrite(f"{path_prefix}_rhs.mtx", np.asarray(b).reshape(-1, 1))
    return f"{path_prefix}.mtx", f"{path_prefix}_rhs.mtx"
