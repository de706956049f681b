"""Sparse symmetric systems and SPD solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ivem.errors import NumericalFailure

DENSE_LIMIT = 2000
# relative residual; with Jacobi-scaled condition numbers near 1e4 this keeps
# the solution error around 1e-9
DEFAULT_TOL = 1e-12


@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray

    def __post_init__(self):
        A = sp.csr_matrix(self.matrix)
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        self.matrix = A
        self.rhs = np.asarray(self.rhs, dtype=float)
        if A.shape[0] != A.shape[1] or A.shape[0] != len(self.rhs):
            raise ValueError(f"shape mismatch: matrix {A.shape}, rhs {self.rhs.shape}")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def asymmetry(self) -> float:
        """``max|A - A^T| / max|A|``."""
        A = self.matrix
        scale = abs(A).max() if A.nnz else 1.0
        diff = A - A.T
        return float(abs(diff).max() / scale) if diff.nnz else 0.0


@dataclass
class CGReport:
    iterations: int
    residual: float
    converged: bool
    min_ritz: float | None = None
    history: list[float] = field(default_factory=list)


def cg_solve(system: SparseSystem, tol: float = DEFAULT_TOL, maxiter: int | None = None, x0=None, ritz: bool = False):
    """Jacobi-preconditioned conjugate gradients.

    Returns ``(x, CGReport)``; ``tol`` bounds ``|Ax - b| / |b|``. With ``ritz``
    the smallest eigenvalue of the Lanczos matrix of the preconditioned operator
    is reported (a lower-end estimate of its spectrum).
    """
    A, b = system.matrix, system.rhs
    n = system.dimension
    if maxiter is None:
        maxiter = 10 * max(n, 1)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), CGReport(0, 0.0, True, None)
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise NumericalFailure("non-positive diagonal entry; matrix is not SPD")
    dinv = 1.0 / diag
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = dinv * r
    p = z.copy()
    rz = float(r @ z)
    alphas, betas = [], []
    history = []
    res = float(np.linalg.norm(r)) / bnorm
    k = 0
    while res > tol and k < maxiter:
        Ap = A @ p
        pAp = float(p @ Ap)
        if not np.isfinite(pAp) or pAp <= 0.0:
            raise NumericalFailure(f"CG breakdown at iteration {k}: p^T A p = {pAp}", res, k)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = dinv * r
        rz_new = float(r @ z)
        beta = rz_new / rz
        p = z + beta * p
        rz = rz_new
        alphas.append(alpha)
        betas.append(beta)
        k += 1
        res = float(np.linalg.norm(r)) / bnorm
        history.append(res)
        if not np.isfinite(res):
            raise NumericalFailure("non-finite residual in CG", res, k)
    if res > tol:
        raise NumericalFailure(f"CG did not converge in {k} iterations (residual {res:.3e})", res, k)
    true_res = float(np.linalg.norm(b - A @ x)) / bnorm
    min_ritz = _lanczos_min(alphas, betas) if ritz and alphas else None
    return x, CGReport(k, true_res, True, min_ritz, history)


def _lanczos_min(alphas, betas) -> float:
    m = len(alphas)
    diag = np.empty(m)
    off = np.empty(max(m - 1, 0))
    for j in range(m):
        diag[j] = 1.0 / alphas[j] + (betas[j - 1] / alphas[j - 1] if j > 0 else 0.0)
        if j < m - 1:
            off[j] = np.sqrt(betas[j]) / alphas[j]
    return float(scipy.linalg.eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0])


def dense_solve(system: SparseSystem, max_size: int = DENSE_LIMIT) -> np.ndarray:
    """Cholesky solve; a failed factorisation means the matrix is not SPD."""
    n = system.dimension
    if n > max_size:
        raise ValueError(f"dense fallback limited to N <= {max_size}, got {n}")
    return cholesky_solve(system.matrix.toarray(), system.rhs)


def cholesky_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Cholesky failed: {exc}") from exc
    return scipy.linalg.cho_solve(factor, b)


def is_positive_definite(A) -> bool:
    """Cholesky witness of positive definiteness."""
    owned = sp.issparse(A)
    dense = A.toarray() if owned else np.asarray(A, dtype=float)
    try:
        scipy.linalg.cholesky(dense, lower=True, overwrite_a=owned, check_finite=not owned)
    except np.linalg.LinAlgError:
        return False
    return True


def dump_matrix(A) -> str:
    """Coordinate text format, one ``i j value`` line per stored entry."""
    coo = sp.coo_matrix(A)
    order = np.lexsort((coo.col, coo.row))
    return "".join(f"{i} {j} {v:.17e}\n" for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]))


def solve(system: SparseSystem, method: str = "cg", tol: float = DEFAULT_TOL):
    if method == "cg":
        return cg_solve(system, tol=tol)
    if method == "dense":
        x = dense_solve(system, max_size=np.inf)
        res = float(np.linalg.norm(system.rhs - system.matrix @ x) / max(np.linalg.norm(system.rhs), 1e-300))
        return x, CGReport(0, res, True)
    raise ValueError(f"unknown solver {method!r}")
