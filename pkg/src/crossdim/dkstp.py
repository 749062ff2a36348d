"""Dimension-keeping semi-tensor product of matrices.

The product of an m x n by a p x q matrix replicates columns of the left
and rows of the right factor up to t = lcm(n, p), multiplies, and scales
by n/t; the result is always m x q.  It coincides with the ordinary
product when n = p, and factors through an n x p "bridge" matrix that is
exactly the cross-dimensional projector from dimension p onto n.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericFailure

__all__ = ["bridge", "dk_product", "dk_apply", "op_vnorm"]

POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000


def _as_matrix(M) -> np.ndarray:
    a = np.asarray(M, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("expected a nonempty 2-d matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def bridge(n: int, p: int) -> np.ndarray:
    """The n x p bridge matrix (n/t)(I_n (x) ones(t/n)^T)(I_p (x) ones(t/p))."""
    if n < 1 or p < 1:
        raise ValueError("dimensions must be positive")
    t = math.lcm(n, p)
    left = np.kron(np.eye(n), np.ones((1, t // n)))
    right = np.kron(np.eye(p), np.ones((t // p, 1)))
    return (n / t) * (left @ right)


def dk_product(M, N, weighted: bool = True) -> np.ndarray:
    """Dimension-keeping semi-tensor product, defined for all shapes.

    With ``weighted`` (the default and the variant used throughout this
    package) the product carries the n/t normalization and equals
    ``M @ bridge(n, p) @ N``.  The unweighted variant is exposed for
    diagnostics only; it drops the scale factor and does not satisfy the
    bridge identity.
    """
    A, B = _as_matrix(M), _as_matrix(N)
    n, p = A.shape[1], B.shape[0]
    t = math.lcm(n, p)
    left = np.kron(A, np.ones((1, t // n)))
    right = np.kron(B, np.ones((t // p, 1)))
    out = left @ right
    if weighted:
        out *= n / t
    return out


def dk_apply(M, x) -> np.ndarray:
    """Apply a matrix to a vector of any length via the dimension-keeping product."""
    v = np.asarray(x, dtype=float).reshape(-1, 1)
    return dk_product(M, v).ravel()


def _lambda_max(G: np.ndarray) -> tuple[float, int]:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Falls back to a full symmetric eigendecomposition when the iteration
    stalls or converges below the diagonal lower bound.
    """
    n = G.shape[0]
    if n == 1:
        return float(G[0, 0]), 0
    diag_floor = float(G.diagonal().max())
    # Fixed-seed start vector: deterministic, and never orthogonal to the
    # top eigenspace in practice.
    v = np.random.default_rng(0x5EED).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = float(v @ G @ v)
    for it in range(1, POWER_MAX_ITER + 1):
        w = G @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0, it
        v = w / nw
        new = float(v @ G @ v)
        if abs(new - lam) <= POWER_TOL * max(1.0, abs(new)):
            if new >= diag_floor - POWER_TOL * max(1.0, abs(new)):
                return new, it
            break  # converged to a non-top eigenpair; use the fallback
        lam = new
    try:
        return float(np.linalg.eigvalsh(G)[-1]), POWER_MAX_ITER
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(
            "eigenvalue iteration did not converge",
            operation="op_vnorm",
            iterations=POWER_MAX_ITER,
        ) from exc


def op_vnorm(A) -> float:
    """Operator norm of a matrix acting on the cross-dimensional space.

    For an m x n matrix this is sqrt((n/m) lambda_max(A^T A)); it bounds
    ``v_norm(dk_apply(A, x)) / v_norm(x)`` over vectors of every dimension,
    with equality approached along the top right-singular direction.
    """
    M = _as_matrix(A)
    m, n = M.shape
    lam, _ = _lambda_max(M.T @ M)
    return math.sqrt(max(lam, 0.0) * n / m)
