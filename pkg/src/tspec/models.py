"""Shipped operator families: the fourth-order line-soliton pencil, the
Euler-Korteweg two-component pencil around a dark profile, and the
two-block pencil around the black (stationary) profile.

Each builder evaluates its coefficient functions on a grid, assembles
exactly symmetric matrices from the difference operators in
:mod:`tspec.numgrid`, and returns an :class:`~tspec.opcore.OperatorFamily`
carrying the exact ``k**2`` structure of the family.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import (
    BadProfileFile,
    HypEulerViolated,
    InvalidSpeed,
    ProfileNotPositive,
)
from .numgrid import Grid, diff1, diff2, symmetrize
from .opcore import OperatorFamily

__all__ = [
    "KPIParams",
    "GPBlackParams",
    "EKParams",
    "Profile",
    "kpi_profile",
    "kpi_family",
    "gp_dark_profile",
    "gp_dark_ek_params",
    "ek_params_from_profile",
    "ek_family",
    "ek_essential_floor",
    "hypeuler_check",
    "ek_schur_M",
    "gp_black_family",
    "load_profile_csv",
]

# Largest admissible deviation of a profile from its far-field limits at
# the grid boundary; beyond this the Dirichlet truncation is inconsistent.
_TAIL_TOL = 1e-8


def _flux_form(w: np.ndarray, grid: Grid) -> np.ndarray:
    """Compact symmetric discretization of ``-d/dx w(x) d/dx`` with Dirichlet
    closure, interface coefficients by arithmetic mean.

    The wide product ``D1.T @ diag(w) @ D1`` hops two nodes at a time, so on
    its own it decouples the odd and even sublattices and doubles every
    eigenvalue; the compact stencil couples neighbors and keeps the discrete
    spectrum simple where the differential operator's is.
    """
    mid = 0.5 * (w[:-1] + w[1:])
    diag = np.empty(grid.n)
    diag[0] = w[0] + mid[0]
    diag[-1] = mid[-1] + w[-1]
    diag[1:-1] = mid[:-1] + mid[1:]
    h2 = grid.spacing * grid.spacing
    out = np.diag(diag / h2)
    off = mid / h2
    idx = np.arange(grid.n - 1)
    out[idx, idx + 1] = -off
    out[idx + 1, idx] = -off
    return out


@dataclass(frozen=True)
class KPIParams:
    """Line-soliton family parameters: nonlinearity power and grid defaults."""

    p: int = 2
    grid_half_width: float = 40.0
    grid_n: int = 1024
    k_scan_max: float = 4.0

    def __post_init__(self) -> None:
        if self.p not in (2, 3, 4):
            raise ValueError(f"nonlinearity power must be 2, 3, or 4, got {self.p}")


@dataclass(frozen=True)
class GPBlackParams:
    """Black-profile family parameters (speed is identically zero)."""

    grid_half_width: float = 30.0
    grid_n: int = 1024
    k_scan_max: float = 3.0


@dataclass(frozen=True, eq=False)
class Profile:
    """Density/velocity profile with analytic or interpolated derivatives.

    ``source`` is ``"closed-form"`` or ``"tabulated"``; tabulated profiles
    carry the ``domain`` their splines are valid on.
    """

    rho: Callable[[np.ndarray], np.ndarray]
    drho: Callable[[np.ndarray], np.ndarray]
    d2rho: Callable[[np.ndarray], np.ndarray]
    u: Callable[[np.ndarray], np.ndarray]
    source: str
    domain: tuple[float, float] | None = None


@dataclass(frozen=True, eq=False)
class EKParams:
    """Euler-Korteweg family: bulk pressure law g0, capillarity K, wave
    speed, profile, and far-field state."""

    g0: Callable[[float], float]
    g0_prime: Callable[[float], float]
    Kcap: Callable[[np.ndarray], np.ndarray]
    Kcap_prime: Callable[[np.ndarray], np.ndarray]
    Kcap_dprime: Callable[[np.ndarray], np.ndarray]
    c: float
    profile: Profile
    rho_inf: float
    u_inf: float
    k_scan_max: float = 4.0
    grid_half_width: float = 40.0
    grid_n: int = 1024


def kpi_profile(p: int, x: np.ndarray | float) -> np.ndarray | float:
    """Closed-form line-soliton profile ``Q``.

    ``Q(x) = ((p+1)/2)**(1/(p-1)) * sech((p-1) x / 2)**(2/(p-1))`` solves
    ``-Q'' + Q - Q**p = 0`` and decays exponentially.
    """
    if p not in (2, 3, 4):
        raise ValueError(f"nonlinearity power must be 2, 3, or 4, got {p}")
    amp = ((p + 1) / 2.0) ** (1.0 / (p - 1))
    arg = 0.5 * (p - 1) * np.asarray(x, dtype=float)
    out = amp * (1.0 / np.cosh(arg)) ** (2.0 / (p - 1))
    return float(out) if np.isscalar(x) else out


def kpi_family(params: KPIParams, grid: Grid) -> OperatorFamily:
    """Fourth-order pencil of the line soliton.

    ``L(k) = D1^T (-D2 + I - diag(p Q**(p-1))) D1 + k**2 I`` with
    ``L'(k) = 2k I`` and pencil weight ``A = -D1``; the essential
    spectrum of ``L(k)`` starts at ``k**2``.
    """
    d1 = diff1(grid)
    d2 = diff2(grid)
    q = kpi_profile(params.p, grid.nodes)
    inner = -d2 + np.eye(grid.n) - np.diag(params.p * q ** (params.p - 1))
    base = symmetrize(d1.T @ inner @ d1)
    eye = np.eye(grid.n)
    neg_d1 = -d1
    neg_d1.setflags(write=False)

    def assemble_l(k: float) -> np.ndarray:
        return base + (k * k) * eye

    def assemble_lprime(k: float) -> np.ndarray:
        return (2.0 * k) * eye

    def assemble_a(k: float) -> np.ndarray:
        return neg_d1

    return OperatorFamily(
        name=f"kpi-p{params.p}",
        dim_factor=1,
        assemble_L=assemble_l,
        assemble_Lprime=assemble_lprime,
        assemble_A=assemble_a,
        essential_floor=lambda k: k * k,
        k_scan_max=params.k_scan_max,
        scale=float(np.abs(base).max()),
        k_square_weight=1.0,
    )


def gp_dark_profile(c: float, z: np.ndarray | float) -> tuple:
    """Dark-profile density and velocity at speed ``0 < |c| < 1``.

    ``rho(z) = c**2 + (1 - c**2) tanh(z sqrt(1 - c**2))**2`` and
    ``u(z) = -c (1 - c**2) (1 - tanh(z sqrt(1-c**2))**2) / rho(z)``;
    the mass flux ``rho (u - c)`` is identically ``-c``.
    """
    if not 0.0 < abs(c) < 1.0:
        raise InvalidSpeed(f"dark profile requires 0 < |c| < 1, got c = {c}")
    kappa = math.sqrt(1.0 - c * c)
    th = np.tanh(kappa * np.asarray(z, dtype=float))
    rho = c * c + (1.0 - c * c) * th * th
    u = -c * (1.0 - c * c) * (1.0 - th * th) / rho
    if np.isscalar(z):
        return float(rho), float(u)
    return rho, u


def _dark_like_profile(c: float) -> Profile:
    """Closed-form profile ``rho = c**2 + (1-c**2) tanh(kappa z)**2`` with
    ``kappa = sqrt(|1 - c**2|)`` and ``u = c - c / rho``.

    For ``|c| < 1`` this is the dark profile; for ``|c| >= 1`` no wave
    exists and the same formula yields a smooth positive bump used only
    to demonstrate hypothesis failure.
    """
    kappa2 = 1.0 - c * c
    kappa = math.sqrt(abs(kappa2))

    def rho(z):
        th = np.tanh(kappa * np.asarray(z, dtype=float))
        return c * c + kappa2 * th * th

    def drho(z):
        th = np.tanh(kappa * np.asarray(z, dtype=float))
        return 2.0 * kappa2 * kappa * th * (1.0 - th * th)

    def d2rho(z):
        th = np.tanh(kappa * np.asarray(z, dtype=float))
        sech2 = 1.0 - th * th
        return 2.0 * kappa2 * kappa * kappa * (sech2 * sech2 - 2.0 * th * th * sech2)

    def u(z):
        return c - c / rho(z)

    return Profile(rho=rho, drho=drho, d2rho=d2rho, u=u, source="closed-form")


def _gp_instance_kwargs() -> dict:
    """Quantum-hydrodynamic coefficient functions: g0(rho) = rho - 1 and
    K(rho) = 1 / (4 rho)."""
    return dict(
        g0=lambda r: r - 1.0,
        g0_prime=lambda r: np.ones_like(np.asarray(r, dtype=float))
        if not np.isscalar(r)
        else 1.0,
        Kcap=lambda r: 0.25 / np.asarray(r, dtype=float),
        Kcap_prime=lambda r: -0.25 / np.asarray(r, dtype=float) ** 2,
        Kcap_dprime=lambda r: 0.5 / np.asarray(r, dtype=float) ** 3,
    )


def gp_dark_ek_params(
    c: float,
    *,
    k_scan_max: float = 4.0,
    grid_half_width: float = 40.0,
    grid_n: int = 1024,
) -> EKParams:
    """Euler-Korteweg parameters for the dark profile at speed ``c``.

    ``c = 0`` is rejected (the density would vanish; use the black-profile
    family instead).  ``|c| >= 1`` is accepted but carries the surrogate
    bump profile of :func:`_dark_like_profile`, which exists solely so the
    hypothesis checker can exhibit the far-field failure at such speeds.
    """
    if c == 0.0:
        raise InvalidSpeed("speed 0 has a vanishing density; use the black-profile family")
    return EKParams(
        c=float(c),
        profile=_dark_like_profile(float(c)),
        rho_inf=1.0,
        u_inf=0.0,
        k_scan_max=k_scan_max,
        grid_half_width=grid_half_width,
        grid_n=grid_n,
        **_gp_instance_kwargs(),
    )


def ek_params_from_profile(
    profile: Profile,
    c: float,
    *,
    k_scan_max: float = 4.0,
    grid_half_width: float = 40.0,
    grid_n: int = 1024,
) -> EKParams:
    """Euler-Korteweg parameters for a tabulated profile with the
    quantum-hydrodynamic coefficient functions.

    The far-field state is read off the right edge of the tabulation.
    """
    if profile.domain is None:
        raise BadProfileFile("tabulated profile carries no domain")
    right = profile.domain[1]
    return EKParams(
        c=float(c),
        profile=profile,
        rho_inf=float(np.asarray(profile.rho(right))),
        u_inf=float(np.asarray(profile.u(right))),
        k_scan_max=k_scan_max,
        grid_half_width=grid_half_width,
        grid_n=grid_n,
        **_gp_instance_kwargs(),
    )


def hypeuler_check(params: EKParams) -> bool:
    """Far-field hyperbolicity: ``rho_inf g0'(rho_inf) > (u_inf - c)**2``."""
    gp = float(np.asarray(params.g0_prime(params.rho_inf)))
    return params.rho_inf * gp > (params.u_inf - params.c) ** 2


def ek_essential_floor(params: EKParams, k: float) -> float:
    """Infimum over the longitudinal frequency of the smaller symbol root.

    The far-field symbol is a 2x2 Hermitian matrix whose eigenvalues
    solve ``mu**2 - s mu + p = 0`` with

        s = (K_inf + rho_inf) (k**2 + xi**2) + g0'
        p = rho_inf K_inf (k**2 + xi**2)**2 + rho_inf g0' k**2
            + (rho_inf g0' - (u_inf - c)**2) xi**2

    The smaller root is scanned over ``xi`` and refined with a bounded
    minimizer.  Raises :class:`HypEulerViolated` when the far-field
    hyperbolicity condition fails, since the floor then dips negative.
    """
    if not hypeuler_check(params):
        raise HypEulerViolated(
            f"rho_inf g0' = {params.rho_inf * float(np.asarray(params.g0_prime(params.rho_inf))):.6g} "
            f"does not exceed (u_inf - c)**2 = {(params.u_inf - params.c) ** 2:.6g}"
        )
    rho_inf = params.rho_inf
    k_inf = float(np.asarray(params.Kcap(rho_inf)))
    gp = float(np.asarray(params.g0_prime(rho_inf)))
    drift2 = (params.u_inf - params.c) ** 2
    kk = float(k) * float(k)

    def smaller_root(xi):
        xi = np.asarray(xi, dtype=float)
        w = kk + xi * xi
        s = (k_inf + rho_inf) * w + gp
        p = rho_inf * k_inf * w * w + rho_inf * gp * kk + (rho_inf * gp - drift2) * xi * xi
        disc = np.maximum(s * s - 4.0 * p, 0.0)
        return 0.5 * (s - np.sqrt(disc))

    xi_max = 8.0 * (1.0 + abs(float(k)))
    mesh = np.linspace(0.0, xi_max, 2001)
    vals = smaller_root(mesh)
    best = int(np.argmin(vals))
    floor = float(vals[best])
    lo = mesh[max(best - 1, 0)]
    hi = mesh[min(best + 1, mesh.size - 1)]
    if hi > lo:
        res = minimize_scalar(
            lambda xi: float(smaller_root(xi)), bounds=(lo, hi), method="bounded"
        )
        if res.fun < floor:
            floor = float(res.fun)
    return floor


def _eval_profile_on_grid(params: EKParams, grid: Grid) -> tuple[np.ndarray, ...]:
    profile = params.profile
    if profile.domain is not None:
        lo, hi = profile.domain
        if grid.nodes[0] < lo or grid.nodes[-1] > hi:
            raise BadProfileFile(
                f"tabulated profile spans [{lo:g}, {hi:g}] but the grid needs "
                f"[{grid.nodes[0]:g}, {grid.nodes[-1]:g}]"
            )
    rho = np.asarray(profile.rho(grid.nodes), dtype=float)
    drho = np.asarray(profile.drho(grid.nodes), dtype=float)
    d2rho = np.asarray(profile.d2rho(grid.nodes), dtype=float)
    u = np.asarray(profile.u(grid.nodes), dtype=float)
    if not np.all(rho > 0.0):
        raise ProfileNotPositive(
            f"density profile dips to {rho.min():.6g} on the grid"
        )
    tail = max(
        abs(rho[0] - params.rho_inf),
        abs(rho[-1] - params.rho_inf),
        abs(u[0] - params.u_inf),
        abs(u[-1] - params.u_inf),
    )
    if tail > _TAIL_TOL:
        raise BadProfileFile(
            f"profile misses its far-field limits by {tail:.3e} at the grid "
            f"boundary (tolerance {_TAIL_TOL:g}); enlarge the domain"
        )
    return rho, drho, d2rho, u


def _ek_zeroth_order(params: EKParams, rho, drho, d2rho) -> np.ndarray:
    """Zeroth-order coefficient of the first block:
    ``m = K'(rho) rho'' + K''(rho) rho'**2 / 2 - g0'(rho)``."""
    kp = np.asarray(params.Kcap_prime(rho), dtype=float)
    kpp = np.asarray(params.Kcap_dprime(rho), dtype=float)
    gp = np.asarray(params.g0_prime(rho), dtype=float)
    return kp * d2rho + 0.5 * kpp * drho * drho - gp


def ek_family(params: EKParams, grid: Grid) -> OperatorFamily:
    """Two-component Euler-Korteweg pencil around the stored profile.

    Blocks (with ``w = u - c`` evaluated on the grid):

        L(k) = [[ -d/dx K d/dx + k**2 K - m ,  diag(w) D1        ],
                [ (diag(w) D1)^T            ,  -d/dx rho d/dx + k**2 rho ]]

    ``L'(k) = 2k diag(K, rho)`` and ``A = [[0, -I], [I, 0]]``.  The
    divergence-form terms use the compact flux stencil of
    :func:`_flux_form`; the full matrix is exactly symmetric.
    """
    rho, drho, d2rho, u = _eval_profile_on_grid(params, grid)
    n = grid.n
    d1 = diff1(grid)
    kvals = np.asarray(params.Kcap(rho), dtype=float)
    if not np.all(kvals > 0.0):
        raise ProfileNotPositive("capillarity coefficient is not positive on the grid")
    m = _ek_zeroth_order(params, rho, drho, d2rho)
    l11 = _flux_form(kvals, grid) - np.diag(m)
    l22 = _flux_form(rho, grid)
    coupling = (u - params.c)[:, None] * d1
    eye = np.eye(n)
    a_mat = np.zeros((2 * n, 2 * n))
    a_mat[:n, n:] = -eye
    a_mat[n:, :n] = eye
    a_mat.setflags(write=False)
    weight = np.concatenate([kvals, rho])

    def assemble_l(k: float) -> np.ndarray:
        kk = k * k
        full = np.zeros((2 * n, 2 * n))
        full[:n, :n] = l11 + np.diag(kk * kvals)
        full[n:, n:] = l22 + np.diag(kk * rho)
        full[:n, n:] = coupling
        full[n:, :n] = coupling.T
        return full

    def assemble_lprime(k: float) -> np.ndarray:
        return np.diag(2.0 * k * weight)

    def assemble_a(k: float) -> np.ndarray:
        return a_mat

    scale_mat = assemble_l(0.0)
    return OperatorFamily(
        name=f"ek-c{params.c:g}",
        dim_factor=2,
        assemble_L=assemble_l,
        assemble_Lprime=assemble_lprime,
        assemble_A=assemble_a,
        essential_floor=lambda k: ek_essential_floor(params, k),
        k_scan_max=params.k_scan_max,
        scale=float(np.abs(scale_mat).max()),
        k_square_weight=weight,
    )


def ek_schur_M(params: EKParams, grid: Grid) -> np.ndarray:
    """Reduced first-block operator obtained by eliminating the second
    component at ``k = 0``:

        M = -d/dx K(rho) d/dx - m - (u - c)**2 / rho

    assembled from the closed form rather than by numerically inverting
    the second block, which is singular on the line.  The profile
    derivative ``rho'`` lies in its kernel.
    """
    rho, drho, d2rho, u = _eval_profile_on_grid(params, grid)
    kvals = np.asarray(params.Kcap(rho), dtype=float)
    m = _ek_zeroth_order(params, rho, drho, d2rho)
    drift = (u - params.c) ** 2 / rho
    return _flux_form(kvals, grid) - np.diag(m) - np.diag(drift)


def gp_black_family(params: GPBlackParams, grid: Grid) -> OperatorFamily:
    """Two-block pencil around the black profile ``tanh(x)``.

    ``L1(k) = (-D2 + k**2)/2 + diag(3 tanh**2 - 1)`` acts on the real
    part, ``L2(k) = (-D2 + k**2)/2 - diag(1 - tanh**2)`` on the
    imaginary part; ``L'(k) = k I`` and ``A = [[0, -I], [I, 0]]``.  The
    essential spectrum of both blocks starts at ``k**2 / 2``.
    """
    n = grid.n
    psi = np.tanh(grid.nodes)
    half_kin = 0.5 * (-diff2(grid))
    l1 = half_kin + np.diag(3.0 * psi * psi - 1.0)
    l2 = half_kin - np.diag(1.0 - psi * psi)
    eye2 = np.eye(2 * n)
    a_mat = np.zeros((2 * n, 2 * n))
    a_mat[:n, n:] = -np.eye(n)
    a_mat[n:, :n] = np.eye(n)
    a_mat.setflags(write=False)

    def assemble_l(k: float) -> np.ndarray:
        shift = 0.5 * k * k
        full = np.zeros((2 * n, 2 * n))
        full[:n, :n] = l1
        full[n:, n:] = l2
        full[np.arange(2 * n), np.arange(2 * n)] += shift
        return full

    def assemble_lprime(k: float) -> np.ndarray:
        return k * eye2

    def assemble_a(k: float) -> np.ndarray:
        return a_mat

    scale_mat = assemble_l(0.0)
    return OperatorFamily(
        name="gp-black",
        dim_factor=2,
        assemble_L=assemble_l,
        assemble_Lprime=assemble_lprime,
        assemble_A=assemble_a,
        essential_floor=lambda k: 0.5 * k * k,
        k_scan_max=params.k_scan_max,
        scale=float(np.abs(scale_mat).max()),
        k_square_weight=0.5,
    )


def load_profile_csv(path) -> Profile:
    """Read a tabulated profile from a CSV file with header ``x,rho,u``.

    The abscissa must be strictly increasing and the density strictly
    positive; cubic splines provide the interpolants and the density
    derivatives.  Malformed content raises :class:`BadProfileFile`.
    """
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise BadProfileFile(f"{path}: empty file") from None
            if [col.strip() for col in header] != ["x", "rho", "u"]:
                raise BadProfileFile(
                    f"{path}: expected header 'x,rho,u', got {','.join(header)!r}"
                )
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 3:
                    raise BadProfileFile(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
                try:
                    rows.append([float(col) for col in row])
                except ValueError as exc:
                    raise BadProfileFile(f"{path}:{lineno}: {exc}") from None
    except OSError as exc:
        raise BadProfileFile(f"{path}: {exc}") from exc
    data = np.asarray(rows, dtype=float)
    if data.shape[0] < 4:
        raise BadProfileFile(f"{path}: need at least 4 samples for cubic interpolation")
    x, rho, u = data[:, 0], data[:, 1], data[:, 2]
    if not np.all(np.diff(x) > 0.0):
        raise BadProfileFile(f"{path}: abscissa is not strictly increasing")
    if not np.all(rho > 0.0):
        raise BadProfileFile(f"{path}: density must be strictly positive")
    rho_spline = CubicSpline(x, rho)
    u_spline = CubicSpline(x, u)
    return Profile(
        rho=rho_spline,
        drho=rho_spline.derivative(1),
        d2rho=rho_spline.derivative(2),
        u=u_spline,
        source="tabulated",
        domain=(float(x[0]), float(x[-1])),
    )
