"""Dense numerical kernel: uniform grids, difference matrices, symmetric
eigensolves, scalar bisection, and bordered linear solves.

All operators act on vectors of nodal values with homogeneous Dirichlet
closure: values beyond the last node on either side are taken to be zero.
The first-derivative matrix is exactly antisymmetric and the
second-derivative matrix exactly symmetric, bit for bit, which is what
lets higher-level assembly produce exactly symmetric operators.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg as sla

from .errors import EigFailure, InvalidGrid, NoBracket, SingularBorder

__all__ = [
    "Grid",
    "EigPairs",
    "build_grid",
    "diff1",
    "diff2",
    "sym_eigs",
    "bisect",
    "bordered_solve",
    "symmetrize",
]

_EPS = float(np.finfo(float).eps)

# Residual contract of sym_eigs: ||M v - lam v|| <= _EIG_TOL * max|M_ij| * order.
_EIG_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform symmetric grid on [-half_width, half_width].

    ``spacing`` is ``2 * half_width / (n - 1)`` and ``nodes[i]`` is
    ``-half_width + i * spacing``; the node set is symmetric about zero
    to machine precision.
    """

    half_width: float
    n: int
    spacing: float
    nodes: np.ndarray


def build_grid(half_width: float, n: int) -> Grid:
    """Build a uniform grid with ``n`` nodes spanning ``[-L, L]``."""
    half_width = float(half_width)
    if not np.isfinite(half_width) or half_width <= 0.0:
        raise InvalidGrid(f"half_width must be positive and finite, got {half_width}")
    if n < 3:
        raise InvalidGrid(f"need at least 3 nodes, got {n}")
    nodes = np.linspace(-half_width, half_width, n)
    nodes.setflags(write=False)
    return Grid(half_width=half_width, n=int(n), spacing=2.0 * half_width / (n - 1), nodes=nodes)


def diff1(grid: Grid) -> np.ndarray:
    """Central first-derivative matrix with Dirichlet closure.

    The stencil is ``(v[i+1] - v[i-1]) / (2h)`` at every row; out-of-range
    neighbours are zero.  The result D satisfies ``D.T == -D`` exactly.
    """
    off = 0.5 / grid.spacing
    band = np.full(grid.n - 1, off)
    return np.diag(band, 1) + np.diag(-band, -1)


def diff2(grid: Grid) -> np.ndarray:
    """Second-derivative matrix ``(v[i+1] - 2 v[i] + v[i-1]) / h**2`` with
    Dirichlet closure; exactly symmetric."""
    h2 = grid.spacing * grid.spacing
    main = np.full(grid.n, -2.0 / h2)
    band = np.full(grid.n - 1, 1.0 / h2)
    return np.diag(main) + np.diag(band, 1) + np.diag(band, -1)


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Average a matrix with its transpose.

    Used after triple products such as ``D1.T @ C @ D1`` whose exact
    symmetry holds in exact arithmetic but picks up rounding skew from
    the two matrix multiplies; the average is bitwise symmetric.
    """
    return 0.5 * (matrix + matrix.T)


@dataclass(frozen=True, eq=False)
class EigPairs:
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray


def sym_eigs(matrix: np.ndarray, count: int) -> EigPairs:
    """Lowest ``count`` eigenpairs of a symmetric matrix.

    Parameters
    ----------
    matrix : (n, n) ndarray
        Exactly symmetric; asymmetric input raises ``ValueError``.
    count : int
        Number of eigenpairs, ``1 <= count <= n``.

    Raises
    ------
    EigFailure
        If the LAPACK solve fails or any returned pair misses the
        residual bound ``1e-9 * max|M| * n``.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    order = matrix.shape[0]
    if not 1 <= count <= order:
        raise ValueError(f"count must be in [1, {order}], got {count}")
    if not np.array_equal(matrix, matrix.T):
        raise ValueError("matrix is not exactly symmetric")
    try:
        values, vectors = sla.eigh(
            matrix, subset_by_index=(0, count - 1), check_finite=False
        )
    except (sla.LinAlgError, ValueError) as exc:
        raise EigFailure(f"symmetric eigensolve failed: {exc}") from exc
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(vectors))):
        raise EigFailure("eigensolver returned non-finite output")
    tol = _EIG_TOL * float(np.abs(matrix).max()) * order
    resid = matrix @ vectors - vectors * values
    worst = float(np.linalg.norm(resid, axis=0).max())
    if worst > tol:
        raise EigFailure(f"eigenpair residual {worst:.3e} exceeds contract {tol:.3e}")
    return EigPairs(values=values, vectors=vectors)


def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Root of a scalar function by bisection.

    Requires a sign change on ``[lo, hi]`` (a zero at either endpoint
    counts and is returned directly); never evaluates ``f`` outside the
    interval.  Stops when the bracket is narrower than ``tol`` or
    floating-point midpoints are exhausted.
    """
    lo = float(lo)
    hi = float(hi)
    if not hi > lo:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    flo = float(f(lo))
    if flo == 0.0:
        return lo
    fhi = float(f(hi))
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise NoBracket(f"no sign change on [{lo}, {hi}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = float(f(mid))
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi)


def bordered_solve(
    matrix: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    r: np.ndarray,
    s: float,
) -> tuple[np.ndarray, float]:
    """Solve the bordered system ``[[M, b], [c^T, 0]] [w; mu] = [r; s]``.

    The augmented matrix is factored by dense LU; a 1-norm condition
    estimate worse than ``1 / sqrt(eps)`` raises :class:`SingularBorder`,
    as does a residual above ``1e-10`` relative to the problem scale.

    Returns
    -------
    (w, mu) : (ndarray, float)
    """
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    b = np.asarray(b, dtype=float).reshape(n)
    c = np.asarray(c, dtype=float).reshape(n)
    r = np.asarray(r, dtype=float).reshape(n)
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = matrix
    aug[:n, n] = b
    aug[n, :n] = c
    rhs = np.concatenate([r, [float(s)]])
    anorm = float(np.abs(aug).sum(axis=0).max())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            lu, piv = sla.lu_factor(aug, check_finite=False)
        except (sla.LinAlgError, ValueError) as exc:
            raise SingularBorder(f"LU factorization failed: {exc}") from exc
        rcond, info = sla.lapack.dgecon(lu, anorm)
    if info != 0 or not np.isfinite(rcond) or rcond < np.sqrt(_EPS):
        raise SingularBorder(
            f"augmented matrix condition estimate {1.0 / max(rcond, 1e-300):.3e} "
            f"exceeds {1.0 / np.sqrt(_EPS):.3e}"
        )
    sol = sla.lu_solve((lu, piv), rhs, check_finite=False)
    if not np.all(np.isfinite(sol)):
        raise SingularBorder("bordered solve produced non-finite values")
    resid = float(np.abs(aug @ sol - rhs).max())
    scale = anorm * float(np.abs(sol).max()) + float(np.abs(rhs).max())
    if resid > 1e-10 * max(scale, 1.0):
        raise SingularBorder(f"bordered residual {resid:.3e} exceeds 1e-10 * {scale:.3e}")
    return sol[:n], float(sol[n])
