"""Wavenumber-parametrized operator families and their spectral checks.

A family packages assemblers for the self-adjoint operator ``L(k)``, its
derivative ``L'(k)``, and the (antisymmetric) pencil weight ``A(k)``,
together with an optional closed-form floor for the essential spectrum.
On top of that sit the four hypothesis checks (h1-h4), the search for
the kernel wavenumber ``k0`` where the smallest eigenvalue first reaches
zero, and block-Schur utilities for two-component operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg as sla

from .errors import (
    HypEulerViolated,
    KernelNotSimple,
    NoNegativeDirection,
    NoSignChange,
    SaturatedCount,
    SingularBlock,
)
from .numgrid import EigPairs, Grid, bisect, sym_eigs, symmetrize

__all__ = [
    "TAU_NEG_DEFAULT",
    "TAU_KER_DEFAULT",
    "ALPHA_REQUIRED_DEFAULT",
    "TAU_GAP_DEFAULT",
    "KERNEL_GAP_FACTOR",
    "OperatorFamily",
    "SpectralReport",
    "HypothesisOptions",
    "H1Evidence",
    "H2Evidence",
    "H3Evidence",
    "H4Evidence",
    "HypothesisReport",
    "FindK0Result",
    "BlockOperator",
    "lambda_min",
    "spectral_report",
    "count_negative",
    "find_k0",
    "check_hypotheses",
    "schur_quadratic",
    "schur_complement",
    "lprime_fd_error",
]

# Threshold below which an eigenvalue at k = 0 counts as genuinely negative.
# It must sit above the spurious near-zero modes of the discretization
# (Dirichlet truncation gives a cluster of order (pi / (2L))**2 ~ 1.5e-3,
# and the wide first-difference product dips to about -2.7e-3 on the
# deepest shipped potential) yet well below the smallest true ground
# eigenvalue across the shipped families, about -8e-2.
TAU_NEG_DEFAULT = 5e-3

# Width of the kernel window at k0 and the residual bound on the kernel
# vector; the rest of the spectrum must clear the window by this factor.
TAU_KER_DEFAULT = 1e-6
KERNEL_GAP_FACTOR = 10.0

# Uniform positivity margin required of L(k) at the scan-limit probe.
ALPHA_REQUIRED_DEFAULT = 0.05

# Minimal separation between the single negative eigenvalue at k = 0 and
# the rest of the spectrum.
TAU_GAP_DEFAULT = 1e-2


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """Assemblers for one wavenumber-parametrized operator pencil.

    ``assemble_L(k)`` must return an exactly symmetric matrix and
    ``assemble_A(k)`` an exactly antisymmetric one, both of order
    ``dim_factor * n`` on the grid the family was built for.
    ``essential_floor(k)``, when present, is a lower bound for the
    essential spectrum of ``L(k)``; it must be positive for ``k != 0``.

    ``k_square_weight`` records the exact dependence
    ``L(k) = L(0) + k**2 * W`` when the family has one: a positive float
    means ``W = w * I``, a positive vector means ``W = diag(w)``.  The
    kernel-wavenumber search exploits it; ``None`` falls back to the
    generic scan.

    ``scale`` is the magnitude of the largest entry of ``L(0)`` and
    normalizes residual-type tolerances downstream.
    """

    name: str
    dim_factor: int
    assemble_L: Callable[[float], np.ndarray]
    assemble_Lprime: Callable[[float], np.ndarray]
    assemble_A: Callable[[float], np.ndarray]
    essential_floor: Callable[[float], float] | None
    k_scan_max: float
    scale: float
    k_square_weight: float | np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """Low-lying spectrum of L(k) with negativity bookkeeping.

    ``n_negative`` counts eigenvalues below ``-tau``; ``saturated`` is
    set when every computed eigenvalue is below ``-tau``, meaning the
    count is only a lower bound.  ``gap`` is the distance from the
    near-zero cluster (``|lam| <= tau``) to the nearest eigenvalue
    outside it, or from zero when the cluster is empty.
    """

    k: float
    low_eigs: np.ndarray
    n_negative: int
    tau: float
    gap: float
    saturated: bool


@dataclass(frozen=True)
class HypothesisOptions:
    """Tunable thresholds for :func:`check_hypotheses`.

    ``kernel`` optionally carries ``(k0, vector)`` from a previous
    kernel search so that h3 can also certify positivity of the
    ``L'(k0)`` quadratic form on the kernel direction.
    """

    alpha_required: float = ALPHA_REQUIRED_DEFAULT
    tau_neg: float = TAU_NEG_DEFAULT
    tau_gap: float = TAU_GAP_DEFAULT
    floor_samples: int = 16
    lprime_samples: int = 16
    eig_count: int = 8
    kernel: tuple[float, np.ndarray] | None = None


@dataclass(frozen=True, eq=False)
class H1Evidence:
    k_probe: float
    lambda_min_at_probe: float
    alpha_required: float
    passed: bool


@dataclass(frozen=True, eq=False)
class H2Evidence:
    k_samples: np.ndarray
    floors: np.ndarray | None
    passed: bool
    note: str = ""


@dataclass(frozen=True, eq=False)
class H3Evidence:
    k_samples: np.ndarray
    min_eig_lprime: float
    kernel_quadratic_form: float | None
    passed: bool


@dataclass(frozen=True, eq=False)
class H4Evidence:
    n_negative_at_0: int
    lambda_neg: float | None
    gap: float | None
    passed: bool


@dataclass(frozen=True, eq=False)
class HypothesisReport:
    h1: H1Evidence
    h2: H2Evidence
    h3: H3Evidence
    h4: H4Evidence
    overall: bool


@dataclass(frozen=True, eq=False)
class FindK0Result:
    """Kernel wavenumber, unit kernel vector, and the certifying report."""

    k0: float
    kernel: np.ndarray
    report: SpectralReport


def lambda_min(fam: OperatorFamily, grid: Grid, k: float) -> float:
    """Smallest eigenvalue of ``L(k)``."""
    return float(sym_eigs(fam.assemble_L(float(k)), 1).values[0])


def _make_report(k: float, values: np.ndarray, tau: float, order: int) -> SpectralReport:
    n_negative = int(np.count_nonzero(values < -tau))
    saturated = n_negative == values.size
    inside = np.abs(values) <= tau
    outside = ~inside
    if not outside.any():
        gap = math.inf
    elif inside.any():
        gap = float(np.abs(values[outside]).min() - np.abs(values[inside]).max())
    else:
        gap = float(np.abs(values[outside]).min())
    return SpectralReport(
        k=float(k),
        low_eigs=values,
        n_negative=n_negative,
        tau=float(tau),
        gap=gap,
        saturated=saturated,
    )


def spectral_report(
    fam: OperatorFamily,
    grid: Grid,
    k: float,
    *,
    tau: float = TAU_NEG_DEFAULT,
    count: int = 8,
) -> SpectralReport:
    """Report on the ``count`` lowest eigenvalues of ``L(k)``."""
    matrix = fam.assemble_L(float(k))
    count = min(count, matrix.shape[0])
    pairs = sym_eigs(matrix, count)
    return _make_report(k, pairs.values, tau, matrix.shape[0])


def count_negative(
    fam: OperatorFamily,
    grid: Grid,
    k: float,
    tau: float = TAU_NEG_DEFAULT,
    *,
    count: int = 8,
) -> int:
    """Number of eigenvalues of ``L(k)`` below ``-tau``.

    Raises :class:`SaturatedCount` when all ``count`` computed
    eigenvalues are below the threshold, since the true number may then
    be larger.
    """
    report = spectral_report(fam, grid, k, tau=tau, count=count)
    if report.saturated:
        raise SaturatedCount(
            f"all {count} computed eigenvalues lie below -{tau:.3e}; request more"
        )
    return report.n_negative


def _certify_kernel(
    fam: OperatorFamily,
    k0: float,
    tau_neg: float,
    tau_ker: float,
    eig_count: int,
) -> FindK0Result:
    """Recompute the spectrum at k0 and certify a one-dimensional kernel."""
    matrix = fam.assemble_L(k0)
    count = min(eig_count, matrix.shape[0])
    pairs = sym_eigs(matrix, count)
    inside = np.flatnonzero(np.abs(pairs.values) <= tau_ker)
    if inside.size != 1:
        raise KernelNotSimple(
            f"{inside.size} eigenvalues inside the kernel window "
            f"[-{tau_ker:.1e}, {tau_ker:.1e}] at k0 = {k0:.12g}"
        )
    report = _make_report(k0, pairs.values, tau_ker, matrix.shape[0])
    if report.gap < KERNEL_GAP_FACTOR * tau_ker:
        raise KernelNotSimple(
            f"spectral gap {report.gap:.3e} at k0 = {k0:.12g} is below "
            f"{KERNEL_GAP_FACTOR} * tau_ker = {KERNEL_GAP_FACTOR * tau_ker:.3e}"
        )
    kernel = np.ascontiguousarray(pairs.vectors[:, inside[0]])
    kernel /= np.linalg.norm(kernel)
    resid = float(np.linalg.norm(matrix @ kernel))
    if resid > tau_ker:
        raise KernelNotSimple(
            f"kernel residual {resid:.3e} at k0 = {k0:.12g} exceeds tau_ker"
        )
    return FindK0Result(k0=float(k0), kernel=kernel, report=report)


def find_k0(
    fam: OperatorFamily,
    grid: Grid,
    tol: float = 1e-8,
    *,
    tau_neg: float = TAU_NEG_DEFAULT,
    tau_ker: float = TAU_KER_DEFAULT,
    scan_points: int = 64,
    eig_count: int = 8,
) -> FindK0Result:
    """Minimal ``k0 > 0`` where the smallest eigenvalue of L(k) reaches zero.

    Requires a genuinely negative direction at ``k = 0``
    (:class:`NoNegativeDirection` otherwise).  When the family declares
    its exact ``k**2`` structure the crossing is solved in closed form:
    with ``L(k) = L(0) + k**2 w I`` the smallest eigenvalue is
    ``lam_0 + w k**2``, and with ``L(k) = L(0) + k**2 diag(w)``,
    ``w > 0``, the crossing is the most negative eigenvalue ``mu`` of
    the congruent matrix ``diag(w)**-1/2 L(0) diag(w)**-1/2`` via
    ``k0 = sqrt(-mu)``.  Families without declared structure are scanned
    on ``scan_points`` mesh points up to ``k_scan_max`` for the first
    sign change and then bisected to ``tol``.

    Every path re-solves the spectrum at the located ``k0`` and certifies
    that exactly one eigenvalue lies in ``[-tau_ker, tau_ker]`` with the
    rest separated by ``KERNEL_GAP_FACTOR * tau_ker``
    (:class:`KernelNotSimple` otherwise).
    """
    pairs0 = sym_eigs(fam.assemble_L(0.0), 1)
    lam0 = float(pairs0.values[0])
    if not lam0 < -tau_neg:
        raise NoNegativeDirection(
            f"smallest eigenvalue at k=0 is {lam0:.6e}, not below -{tau_neg:.1e}"
        )
    kmax = float(fam.k_scan_max)
    weight = fam.k_square_weight

    if isinstance(weight, (int, float)) and float(weight) > 0.0:
        k0 = math.sqrt(-lam0 / float(weight))
        if k0 > kmax:
            raise NoSignChange(
                f"crossing at k = {k0:.6g} lies beyond k_scan_max = {kmax:g}"
            )
    elif isinstance(weight, np.ndarray) and weight.size and np.all(weight > 0.0):
        inv_sqrt = 1.0 / np.sqrt(weight)
        congruent = fam.assemble_L(0.0) * inv_sqrt[:, None] * inv_sqrt[None, :]
        congruent = symmetrize(congruent)
        mu0 = float(sym_eigs(congruent, 1).values[0])
        if mu0 >= 0.0:
            raise NoNegativeDirection(
                f"weighted pencil has no negative eigenvalue (mu = {mu0:.3e})"
            )
        k0 = math.sqrt(-mu0)
        if k0 > kmax:
            raise NoSignChange(
                f"crossing at k = {k0:.6g} lies beyond k_scan_max = {kmax:g}"
            )
    else:
        mesh = np.linspace(0.0, kmax, scan_points)
        k_lo, f_lo = 0.0, lam0
        bracket = None
        for k in mesh[1:]:
            f_k = lambda_min(fam, grid, float(k))
            if f_k >= 0.0:
                bracket = (k_lo, float(k))
                break
            k_lo, f_lo = float(k), f_k
        if bracket is None:
            raise NoSignChange(
                f"smallest eigenvalue stays below zero up to k_scan_max = {kmax:g}"
            )
        k0 = bisect(lambda k: lambda_min(fam, grid, k), bracket[0], bracket[1], tol)

    return _certify_kernel(fam, float(k0), tau_neg, tau_ker, eig_count)


def _lprime_min_eig(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of L'(k); diagonal matrices short-circuit."""
    diag = np.diag(matrix)
    if np.count_nonzero(matrix - np.diag(diag)) == 0:
        return float(diag.min())
    return float(sym_eigs(matrix, 1).values[0])


def check_hypotheses(
    fam: OperatorFamily,
    grid: Grid,
    opts: HypothesisOptions | None = None,
) -> HypothesisReport:
    """Evaluate the four spectral hypotheses for one family.

    h1: uniform positivity at the probe ``k = k_scan_max``, requiring
    the smallest eigenvalue to clear ``alpha_required``.
    h2: positivity of the essential-spectrum floor on sampled ``k != 0``
    (fails when the family provides no floor, or the floor raises
    :class:`HypEulerViolated`).
    h3: nonnegativity of ``L'(k)`` on sampled ``k > 0``, plus strict
    positivity of its quadratic form on a supplied kernel vector.
    h4: exactly one eigenvalue below ``-tau_neg`` at ``k = 0``,
    separated from the rest by more than ``tau_gap``.

    The report is deterministic: identical inputs give identical output.
    """
    opts = opts or HypothesisOptions()
    kmax = float(fam.k_scan_max)

    probe = lambda_min(fam, grid, kmax)
    h1 = H1Evidence(
        k_probe=kmax,
        lambda_min_at_probe=probe,
        alpha_required=opts.alpha_required,
        passed=bool(probe >= opts.alpha_required),
    )

    floor_ks = np.linspace(kmax / opts.floor_samples, kmax, opts.floor_samples)
    if fam.essential_floor is None:
        h2 = H2Evidence(
            k_samples=floor_ks,
            floors=None,
            passed=False,
            note="no essential-spectrum floor available",
        )
    else:
        try:
            floors = np.array([float(fam.essential_floor(k)) for k in floor_ks])
        except HypEulerViolated as exc:
            h2 = H2Evidence(k_samples=floor_ks, floors=None, passed=False, note=str(exc))
        else:
            h2 = H2Evidence(
                k_samples=floor_ks,
                floors=floors,
                passed=bool(np.all(floors > 0.0)),
            )

    lp_ks = np.linspace(kmax / opts.lprime_samples, kmax, opts.lprime_samples)
    lp_min = min(_lprime_min_eig(fam.assemble_Lprime(float(k))) for k in lp_ks)
    kernel_qf = None
    h3_pass = lp_min >= 0.0
    if opts.kernel is not None:
        k0, vec = opts.kernel
        vec = np.asarray(vec, dtype=float)
        kernel_qf = float(vec @ (fam.assemble_Lprime(float(k0)) @ vec))
        h3_pass = h3_pass and kernel_qf > 0.0
    h3 = H3Evidence(
        k_samples=lp_ks,
        min_eig_lprime=float(lp_min),
        kernel_quadratic_form=kernel_qf,
        passed=bool(h3_pass),
    )

    try:
        n_neg = count_negative(fam, grid, 0.0, opts.tau_neg, count=opts.eig_count)
        report0 = spectral_report(fam, grid, 0.0, tau=opts.tau_neg, count=opts.eig_count)
    except SaturatedCount:
        h4 = H4Evidence(n_negative_at_0=opts.eig_count, lambda_neg=None, gap=None, passed=False)
    else:
        lam_neg = float(report0.low_eigs[0]) if n_neg >= 1 else None
        gap = (
            float(report0.low_eigs[1] - report0.low_eigs[0])
            if report0.low_eigs.size >= 2
            else None
        )
        h4 = H4Evidence(
            n_negative_at_0=n_neg,
            lambda_neg=lam_neg,
            gap=gap,
            passed=bool(n_neg == 1 and gap is not None and gap > opts.tau_gap),
        )

    overall = h1.passed and h2.passed and h3.passed and h4.passed
    return HypothesisReport(h1=h1, h2=h2, h3=h3, h4=h4, overall=bool(overall))


@dataclass(frozen=True, eq=False)
class BlockOperator:
    """Two-by-two block form ``[[L1, A12], [A12^T, L2]]`` with symmetric
    diagonal blocks."""

    L1: np.ndarray
    L2: np.ndarray
    A12: np.ndarray

    def __post_init__(self) -> None:
        n1 = self.L1.shape[0]
        n2 = self.L2.shape[0]
        if self.L1.shape != (n1, n1) or self.L2.shape != (n2, n2):
            raise ValueError("diagonal blocks must be square")
        if self.A12.shape != (n1, n2):
            raise ValueError(
                f"coupling block shape {self.A12.shape} does not match ({n1}, {n2})"
            )
        if not np.array_equal(self.L1, self.L1.T):
            raise ValueError("L1 block is not exactly symmetric")
        if not np.array_equal(self.L2, self.L2.T):
            raise ValueError("L2 block is not exactly symmetric")

    def full_matrix(self) -> np.ndarray:
        n1 = self.L1.shape[0]
        n2 = self.L2.shape[0]
        full = np.zeros((n1 + n2, n1 + n2))
        full[:n1, :n1] = self.L1
        full[:n1, n1:] = self.A12
        full[n1:, :n1] = self.A12.T
        full[n1:, n1:] = self.L2
        return full


def _solve_block(block: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        out = sla.solve(block, rhs, assume_a="sym", check_finite=False)
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularBlock(f"diagonal block solve failed: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise SingularBlock("diagonal block solve produced non-finite values")
    return out


def schur_quadratic(blocks: BlockOperator, U: np.ndarray) -> tuple[float, float]:
    """Quadratic form of the block operator, directly and via elimination.

    Returns ``(direct, factored)`` where ``direct = U^T (B U)`` on the
    assembled matrix and ``factored`` eliminates the second component:

        (B U, U) = ((L1 - A12 L2^-1 A12^T) U1, U1)
                   + (L2 (U2 + L2^-1 A12^T U1), U2 + L2^-1 A12^T U1)

    The two must agree to rounding; the identity is the basis for
    reducing two-component operators to their first block.
    """
    n1 = blocks.L1.shape[0]
    n2 = blocks.L2.shape[0]
    U = np.asarray(U, dtype=float).reshape(n1 + n2)
    u1, u2 = U[:n1], U[n1:]
    direct = float(U @ (blocks.full_matrix() @ U))
    t = _solve_block(blocks.L2, blocks.A12.T @ u1)
    y = u2 + t
    factored = float(
        u1 @ (blocks.L1 @ u1) - u1 @ (blocks.A12 @ t) + y @ (blocks.L2 @ y)
    )
    return direct, factored


def schur_complement(blocks: BlockOperator) -> np.ndarray:
    """First-block Schur complement ``L1 - A12 L2^-1 A12^T``.

    Symmetrized by averaging with its transpose to kill rounding skew.
    """
    t = _solve_block(blocks.L2, blocks.A12.T)
    return symmetrize(blocks.L1 - blocks.A12 @ t)


def lprime_fd_error(fam: OperatorFamily, k: float, delta: float) -> float:
    """Max-entry error of the central difference of ``assemble_L`` against
    ``assemble_Lprime`` at ``k``; used to validate family derivatives."""
    fd = (fam.assemble_L(k + delta) - fam.assemble_L(k - delta)) / (2.0 * delta)
    return float(np.abs(fd - fam.assemble_Lprime(k)).max())
