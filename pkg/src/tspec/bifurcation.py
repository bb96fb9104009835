"""Continuation of the unstable branch out of the kernel point and an
independent pencil eigensolver for cross-validation.

The branch solves ``G(V, k, sigma) = (L(k) - sigma A(k))(phi + V) = 0``
with the orthogonality constraint ``(V, phi) = 0``, marching in ``sigma``
with a bordered Newton iteration.  The pencil solver attacks
``sigma A(k) U = L(k) U`` directly by shift-invert iteration and never
inverts ``A`` on its own, which may be singular.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NewtonDiverged, NoConvergence, ShiftSingular
from .numgrid import Grid, bordered_solve
from .opcore import OperatorFamily

__all__ = [
    "BranchPoint",
    "Branch",
    "PencilSolution",
    "GrowthSample",
    "residual_G",
    "branch_jacobian",
    "trace_branch",
    "pencil_eigen_near",
    "growth_curve",
]

# Orthogonality drift allowed in a converged point, relative to ||V||.
_ORTHO_TOL = 1e-12

# Shift perturbation retries before giving up on a singular shifted solve.
_SHIFT_RETRIES = 3


@dataclass(frozen=True, eq=False)
class BranchPoint:
    """One converged point: growth rate, wavenumber, correction ``V``
    orthogonal to ``phi``, full mode ``U = phi + V``, and the residual
    norm recomputed from freshly assembled matrices."""

    sigma: float
    k: float
    V: np.ndarray
    U: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class Branch:
    """Kernel point data plus the traced points ordered by growth rate."""

    k0: float
    phi: np.ndarray
    points: list[BranchPoint]


@dataclass(frozen=True, eq=False)
class PencilSolution:
    """Converged pencil eigenpair with its fresh-assembly residual."""

    sigma: float
    U: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class GrowthSample:
    """Growth rate at one wavenumber; ``sigma`` and ``residual`` are None
    when the solver did not converge there."""

    k: float
    sigma: float | None
    residual: float | None


def residual_G(
    fam: OperatorFamily,
    grid: Grid,
    phi: np.ndarray,
    V: np.ndarray,
    k: float,
    sigma: float,
) -> np.ndarray:
    """Branch residual ``(L(k) - sigma A(k)) (phi + V)``, assembled fresh."""
    u = phi + V
    out = fam.assemble_L(k) @ u
    if sigma != 0.0:
        out = out - sigma * (fam.assemble_A(k) @ u)
    return out


def branch_jacobian(
    fam: OperatorFamily,
    grid: Grid,
    phi: np.ndarray,
    V: np.ndarray,
    k: float,
    sigma: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Derivative of the branch residual in ``(V, k)``.

    Returns ``M = L(k) - sigma A(k)`` and the ``k``-column
    ``b = L'(k)(phi + V)``; the pencil weight carries no ``k`` dependence
    for any shipped family, so its derivative drops out.
    """
    m = fam.assemble_L(k) - sigma * fam.assemble_A(k)
    b = fam.assemble_Lprime(k) @ (phi + V)
    return m, b


def _converged_point(
    fam, grid, phi, sigma, k, V, tol
) -> BranchPoint:
    """Re-project, recompute the residual fresh, and package the point."""
    V = V - (phi @ V) * phi
    res = float(np.linalg.norm(residual_G(fam, grid, phi, V, k, sigma)))
    return BranchPoint(sigma=float(sigma), k=float(k), V=V, U=phi + V, residual=res)


def _newton_point(
    fam, grid, phi, sigma, k, V, tol, max_iter
) -> BranchPoint:
    for _ in range(max_iter):
        g = residual_G(fam, grid, phi, V, k, sigma)
        drift = abs(phi @ V)
        if np.linalg.norm(g) <= tol and drift <= _ORTHO_TOL * max(
            np.linalg.norm(V), 1.0
        ):
            point = _converged_point(fam, grid, phi, sigma, k, V, tol)
            if point.residual <= tol:
                return point
        m, b = branch_jacobian(fam, grid, phi, V, k, sigma)
        step, dk = bordered_solve(m, b, phi, -g, -(phi @ V))
        V = V + step
        k = k + float(dk)
    point = _converged_point(fam, grid, phi, sigma, k, V, tol)
    if point.residual <= tol:
        return point
    raise NewtonDiverged(
        f"no contraction at sigma = {sigma:.6g} after {max_iter} iterations "
        f"(residual {point.residual:.3e}, tolerance {tol:.3e}); refine the schedule"
    )


def trace_branch(
    fam: OperatorFamily,
    grid: Grid,
    k0: float,
    phi: np.ndarray,
    sigma_schedule,
    tol_branch: float | None = None,
    *,
    max_iter: int = 25,
    start: BranchPoint | None = None,
) -> Branch:
    """March the branch through the given growth rates.

    The schedule must begin at 0 (departing from the kernel point) unless
    ``start`` supplies a previously converged point to warm-start from,
    which permits re-tracing a schedule in reverse.  Points come back
    ordered by growth rate regardless of traversal order.  Raises
    :class:`NewtonDiverged` when a step fails to contract.
    """
    schedule = [float(s) for s in np.atleast_1d(np.asarray(sigma_schedule, dtype=float))]
    if not schedule:
        raise ValueError("empty growth-rate schedule")
    if start is None and schedule[0] != 0.0:
        raise ValueError(
            "schedule must start at 0 unless a warm-start point is supplied"
        )
    phi = np.asarray(phi, dtype=float)
    phi = phi / np.linalg.norm(phi)
    tol = float(tol_branch) if tol_branch is not None else 1e-8 * fam.scale
    if start is None:
        k_warm, v_warm = float(k0), np.zeros_like(phi)
    else:
        k_warm, v_warm = start.k, start.V.copy()
    points = []
    for sigma in schedule:
        point = _newton_point(fam, grid, phi, sigma, k_warm, v_warm, tol, max_iter)
        points.append(point)
        k_warm, v_warm = point.k, point.V
    points.sort(key=lambda p: p.sigma)
    return Branch(k0=float(k0), phi=phi, points=points)


def _shifted_solve(l_mat, a_mat, sigma, rhs, scale):
    """LU solve of ``(L - sigma A) y = rhs`` with shift perturbation when
    the factorization is unusable; returns the shift actually used."""
    for attempt in range(_SHIFT_RETRIES + 1):
        m = l_mat - sigma * a_mat
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                lu, piv = sla.lu_factor(m, check_finite=False)
                y = sla.lu_solve((lu, piv), rhs, check_finite=False)
        except sla.LinAlgError:
            y = None
        if y is not None and np.all(np.isfinite(y)) and np.linalg.norm(y) > 0.0:
            return y, sigma
        sigma = sigma * (1.0 + 1e-3) + 1e-8 * scale
    raise ShiftSingular(
        f"shifted operator stayed singular after {_SHIFT_RETRIES} perturbed retries"
    )


def pencil_eigen_near(
    fam: OperatorFamily,
    grid: Grid,
    k: float,
    sigma_guess: float,
    x0: np.ndarray,
    *,
    tol: float | None = None,
    max_iter: int = 200,
) -> PencilSolution:
    """Shift-invert iteration on ``sigma A(k) U = L(k) U`` near the guess.

    Each sweep solves ``(L - sigma_m A) y = A x_m`` and updates ``sigma``
    by least squares, ``sigma = (Ax)^T (Lx) / ||Ax||**2``; the classical
    Rayleigh quotient is useless here because ``x^T A x = 0`` for the
    antisymmetric weight.  Raises :class:`ShiftSingular` when perturbed
    shifts cannot make the solve usable and :class:`NoConvergence` when
    the residual never meets its bound.
    """
    l_mat = fam.assemble_L(k)
    a_mat = fam.assemble_A(k)
    # The default bound follows the matrix magnitude but is capped: a
    # fourth-order stencil grows like 1/h**4 under refinement, and an
    # uncapped bound would certify stale eigenpairs on fine grids.
    tol = float(tol) if tol is not None else min(1e-7 * fam.scale, 1e-3)
    x = np.asarray(x0, dtype=float)
    norm = np.linalg.norm(x)
    if norm == 0.0:
        raise ValueError("zero start vector")
    x = x / norm
    sigma = float(sigma_guess)

    def refine_sigma(vec):
        av = a_mat @ vec
        denom = av @ av
        if denom <= 0.0:
            return sigma
        return float(av @ (l_mat @ vec)) / denom

    res = np.linalg.norm(l_mat @ x - sigma * (a_mat @ x))
    if res <= tol:
        sigma = refine_sigma(x)
        return _package_pencil(fam, k, sigma, x, tol)
    for _ in range(max_iter):
        y, sigma = _shifted_solve(l_mat, a_mat, sigma, a_mat @ x, fam.scale)
        x = y / np.linalg.norm(y)
        sigma = refine_sigma(x)
        res = np.linalg.norm(l_mat @ x - sigma * (a_mat @ x))
        if res <= tol:
            return _package_pencil(fam, k, sigma, x, tol)
    raise NoConvergence(
        f"pencil iteration at k = {k:.6g} stalled with residual {res:.3e} "
        f"(bound {tol:.3e}) after {max_iter} sweeps"
    )


def _package_pencil(fam, k, sigma, x, tol) -> PencilSolution:
    """Recompute the residual from fresh assemblies before returning."""
    l_fresh = fam.assemble_L(k)
    a_fresh = fam.assemble_A(k)
    res = float(np.linalg.norm(l_fresh @ x - sigma * (a_fresh @ x)))
    if res > tol:
        raise NoConvergence(
            f"fresh-assembly residual {res:.3e} exceeds bound {tol:.3e} at k = {k:.6g}"
        )
    return PencilSolution(sigma=float(sigma), U=x, residual=res)


def growth_curve(
    fam: OperatorFamily,
    grid: Grid,
    k0: float,
    phi: np.ndarray,
    k_samples,
    *,
    branch: Branch | None = None,
    tol: float | None = None,
    seed_sigma: float = 0.02,
    seed_steps: int = 8,
) -> list[GrowthSample]:
    """Growth rates across the unstable band ``0 < k < k0``.

    Samples are solved from the band edge inward, each pencil solve seeded
    by the previous one (a square-root extrapolation of sigma and the last
    converged mode).  The first seed comes from a short traced branch,
    either the one passed in or one traced here.  A sample where the
    solver fails is reported with ``sigma = None`` rather than dropped or
    fabricated.
    """
    ks = sorted({float(k) for k in np.atleast_1d(np.asarray(k_samples, dtype=float))})
    if not ks:
        return []
    if ks[0] <= 0.0 or ks[-1] >= k0:
        raise ValueError(f"samples must lie strictly inside (0, {k0:.6g})")
    if branch is None or len(branch.points) < 2:
        schedule = np.linspace(0.0, seed_sigma, seed_steps + 1)
        branch = trace_branch(fam, grid, k0, phi, schedule)
    tip = branch.points[-1]
    prev_sigma, prev_k, prev_u = tip.sigma, tip.k, tip.U
    samples: list[GrowthSample] = []
    for k in reversed(ks):
        gap = max(k0 - prev_k, 1e-12)
        guess = max(prev_sigma * np.sqrt((k0 - k) / gap), 1e-4)
        sol = None
        try:
            sol = pencil_eigen_near(fam, grid, k, guess, prev_u, tol=tol)
            if sol.sigma < 0.0:
                sol = pencil_eigen_near(fam, grid, k, -sol.sigma, sol.U, tol=tol)
        except (ShiftSingular, NoConvergence):
            sol = None
        if sol is None or sol.sigma <= 0.0:
            samples.append(GrowthSample(k=k, sigma=None, residual=None))
            continue
        samples.append(GrowthSample(k=k, sigma=sol.sigma, residual=sol.residual))
        prev_sigma, prev_k, prev_u = sol.sigma, k, sol.U
    samples.reverse()
    return samples
