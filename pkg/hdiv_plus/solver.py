"""Sparse direct solver for hdiv-plus."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .const import RESIDUAL_TOL
from .exceptions import SingularSystemError
from .helpers.logging_utils import get_summarizing_logger

_LOGGER = get_summarizing_logger(__name__)


@dataclass(frozen=True, slots=True, eq=False)
class SparseMatrix:
    """Square CSR matrix with a symmetry flag."""

    matrix: sparse.csr_matrix
    symmetric: bool = False

    def __post_init__(self) -> None:
        """Drop explicit zeros and check squareness."""
        rows, cols = self.matrix.shape
        if rows != cols:
            raise SingularSystemError(f"matrix is not square: {self.matrix.shape}")
        self.matrix.eliminate_zeros()

    @classmethod
    def from_triplets(
        cls,
        rows: Sequence[int] | np.ndarray,
        cols: Sequence[int] | np.ndarray,
        values: Sequence[float] | np.ndarray,
        size: int,
        symmetric: bool = False,
    ) -> SparseMatrix:
        """Sum duplicate (row, col, value) entries into a CSR matrix."""
        coo = sparse.coo_matrix((values, (rows, cols)), shape=(size, size))
        return cls(coo.tocsr(), symmetric)

    @property
    def dimension(self) -> int:
        """Return the number of rows."""
        return int(self.matrix.shape[0])

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x


def factor_and_solve(matrix: SparseMatrix, rhs: np.ndarray) -> np.ndarray:
    """Solve A x = b by SuperLU with one step of iterative refinement.

    Raises:
        SingularSystemError: if the factorization fails or the relative
            residual exceeds the tolerance.
    """
    b = np.asarray(rhs, dtype=float)
    if b.shape != (matrix.dimension,):
        raise SingularSystemError(
            f"right-hand side of shape {b.shape} for a system of size {matrix.dimension}"
        )
    ordering = "MMD_AT_PLUS_A" if matrix.symmetric else "COLAMD"
    try:
        lu = splu(matrix.matrix.tocsc(), permc_spec=ordering)
    except RuntimeError as err:
        raise SingularSystemError(f"factorization failed: {err}") from err

    # Singularity is signaled even when the solution is trivially zero
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros_like(b)

    x = lu.solve(b)
    x += lu.solve(b - matrix @ x)
    residual = float(np.linalg.norm(b - matrix @ x)) / b_norm
    if not np.isfinite(residual) or residual > RESIDUAL_TOL:
        raise SingularSystemError(
            f"relative residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}"
        )
    _LOGGER.debug(
        "Solved system of size %d (nnz %d, fill %d): residual %.2e",
        matrix.dimension,
        matrix.matrix.nnz,
        lu.L.nnz + lu.U.nnz,
        residual,
    )
    return x
