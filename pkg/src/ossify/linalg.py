"""Sparse symmetric solves: Jacobi-preconditioned conjugate gradients,
optionally constrained to the orthogonal complement of the rigid-body modes
(the computable form of the quotient-space elasticity solve)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .validation import SolverError


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float        # final |r|
    rhs_norm: float        # |b|, the reference for the relative tolerance
    converged: bool


def rigid_body_modes(nodes: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the six rigid displacement fields on the nodes.

    Rows are the modes, columns the 3*n displacement DOFs; rotations are the
    linearized ones w(x) = A x with A antisymmetric.
    """
    n = len(nodes)
    modes = np.zeros((6, 3 * n))
    for k in range(3):
        modes[k, k::3] = 1.0
    # rotations about the three axes
    x, y, z = nodes[:, 0], nodes[:, 1], nodes[:, 2]
    modes[3, 1::3], modes[3, 2::3] = -z, y
    modes[4, 0::3], modes[4, 2::3] = z, -x
    modes[5, 0::3], modes[5, 1::3] = -y, x
    # Gram-Schmidt; the translations are already orthogonal to each other
    q, _ = np.linalg.qr(modes.T)
    return q.T


def project_out(modes: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Remove the span of the (orthonormal) mode rows from v."""
    return v - modes.T @ (modes @ v)


def jacobi_cg(matrix: sparse.csr_matrix, rhs: np.ndarray, tol: float,
              max_iter: int, x0: np.ndarray | None = None,
              modes: np.ndarray | None = None) -> CGResult:
    """Solve the SPD (or rigid-mode-singular) system by preconditioned CG.

    Convergence is |r| <= tol * |b|.  When `modes` is given, every iterate is
    re-orthogonalized against them, returning the minimum-norm representative
    of the quotient-space solution; the right-hand side must already be
    compatible (orthogonal to the modes).
    """
    rhs = np.asarray(rhs, dtype=float)
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0 and x0 is None:
        return CGResult(np.zeros_like(rhs), 0, 0.0, 0.0, True)

    diag = matrix.diagonal()
    if np.any(diag <= 0):
        raise SolverError("matrix diagonal has non-positive entries; "
                          "system is not SPD after boundary elimination")
    inv_diag = 1.0 / diag

    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=float)
    if modes is not None:
        x = project_out(modes, x)
    r = rhs - matrix @ x
    if modes is not None:
        r = project_out(modes, r)
    target = tol * max(rhs_norm, np.finfo(float).tiny)

    res = float(np.linalg.norm(r))
    if res <= target:
        return CGResult(x, 0, res, rhs_norm, True)

    z = inv_diag * r
    if modes is not None:
        z = project_out(modes, z)
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, max_iter + 1):
        Ap = matrix @ p
        pAp = float(p @ Ap)
        if pAp <= 0:
            raise SolverError("conjugate gradients broke down (p'Ap <= 0); "
                              "matrix is not positive definite on this subspace",
                              residual=res, iterations=it)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if modes is not None:
            x = project_out(modes, x)
            r = project_out(modes, r)
        res = float(np.linalg.norm(r))
        if res <= target:
            return CGResult(x, it, res, rhs_norm, True)
        z = inv_diag * r
        if modes is not None:
            z = project_out(modes, z)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"CG did not converge in {max_iter} iterations (|r|/|b| = {res / rhs_norm:.3e})",
        residual=res, iterations=max_iter)
