"""Branch continuation and shifted pencil solves, on a reduced grid so
each Newton step stays cheap."""

import numpy as np
import pytest

from tspec import (
    GPBlackParams,
    NewtonDiverged,
    SingularBorder,
    NoConvergence,
    branch_jacobian,
    build_grid,
    find_k0,
    gp_black_family,
    growth_curve,
    pencil_eigen_near,
    residual_G,
    trace_branch,
)


@pytest.fixture(scope="module")
def small():
    grid = build_grid(30.0, 256)
    fam = gp_black_family(GPBlackParams(grid_n=256), grid)
    return fam, grid, find_k0(fam, grid)


def test_residual_small_at_kernel_point(small):
    fam, grid, res = small
    g = residual_G(fam, grid, res.kernel, np.zeros_like(res.kernel), res.k0, 0.0)
    assert np.linalg.norm(g) <= 1e-6


def test_residual_vanishes_when_state_cancels(small):
    fam, grid, res = small
    g = residual_G(fam, grid, res.kernel, -res.kernel, 0.7, 0.3)
    assert np.abs(g).max() == 0.0


def test_jacobian_blocks_match_assemblies(small):
    fam, grid, res = small
    phi = res.kernel
    v = 0.01 * np.roll(phi, 3)
    m, b = branch_jacobian(fam, grid, phi, v, 0.8, 0.05)
    np.testing.assert_allclose(m, fam.assemble_L(0.8) - 0.05 * fam.assemble_A(0.8), atol=0)
    np.testing.assert_allclose(b, fam.assemble_Lprime(0.8) @ (phi + v), atol=0)


def test_residual_is_affine_in_growth_rate(small):
    fam, grid, res = small
    phi = res.kernel
    v = 0.01 * np.roll(phi, 5)
    delta = 1e-4
    fd = (
        residual_G(fam, grid, phi, v, 0.8, 0.05 + delta)
        - residual_G(fam, grid, phi, v, 0.8, 0.05 - delta)
    ) / (2.0 * delta)
    expected = -fam.assemble_A(0.8) @ (phi + v)
    np.testing.assert_allclose(fd, expected, atol=1e-9)


def test_zero_schedule_returns_base_point(small):
    fam, grid, res = small
    branch = trace_branch(fam, grid, res.k0, res.kernel, [0.0])
    assert len(branch.points) == 1
    point = branch.points[0]
    assert point.sigma == 0.0
    assert point.k == pytest.approx(res.k0, abs=1e-10)
    assert np.linalg.norm(point.V) <= 1e-10
    assert point.residual <= 1e-8 * fam.scale


def test_branch_march_invariants(small):
    fam, grid, res = small
    schedule = np.linspace(0.0, 0.02, 6)
    branch = trace_branch(fam, grid, res.k0, res.kernel, schedule)
    tol = 1e-8 * fam.scale
    sigmas = [p.sigma for p in branch.points]
    np.testing.assert_allclose(sigmas, schedule, atol=0)
    ks = np.array([p.k for p in branch.points])
    assert np.all(np.diff(ks) < 0.0)
    phi = branch.phi
    for point in branch.points:
        assert point.residual <= tol
        assert abs(phi @ point.V) <= 1e-12 * max(1.0, np.linalg.norm(point.V))
        fresh = residual_G(fam, grid, phi, point.V, point.k, point.sigma)
        assert np.linalg.norm(fresh) <= tol


def test_branch_retrace_in_reverse_agrees(small):
    fam, grid, res = small
    schedule = np.linspace(0.0, 0.02, 6)
    tol = 1e-9 * fam.scale
    forward = trace_branch(fam, grid, res.k0, res.kernel, schedule, tol)
    backward = trace_branch(
        fam, grid, res.k0, res.kernel, schedule[::-1], tol, start=forward.points[-1]
    )
    for f, b in zip(forward.points, backward.points):
        assert f.sigma == b.sigma
        assert abs(f.k - b.k) < 1e-6
        assert np.linalg.norm(f.V - b.V) < 1e-5


def test_branch_rejects_bad_schedules(small):
    fam, grid, res = small
    with pytest.raises(ValueError):
        trace_branch(fam, grid, res.k0, res.kernel, [])
    with pytest.raises(ValueError):
        trace_branch(fam, grid, res.k0, res.kernel, [0.01, 0.02])


def test_branch_divergence_raises(small):
    fam, grid, res = small
    with pytest.raises((NewtonDiverged, SingularBorder)):
        trace_branch(fam, grid, res.k0, res.kernel, [0.0, 1e6], max_iter=6)


def test_pencil_accepts_kernel_point(small):
    fam, grid, res = small
    sol = pencil_eigen_near(fam, grid, res.k0, 0.0, res.kernel)
    assert abs(sol.sigma) <= 1e-5
    assert sol.residual <= 1e-3


def test_pencil_recovers_branch_tip(small):
    fam, grid, res = small
    branch = trace_branch(fam, grid, res.k0, res.kernel, np.linspace(0.0, 0.02, 6))
    tip = branch.points[-1]
    rng = np.random.default_rng(61)
    start = tip.U + 0.05 * rng.standard_normal(tip.U.size)
    sol = pencil_eigen_near(fam, grid, tip.k, tip.sigma * 1.1, start)
    assert abs(sol.sigma - tip.sigma) <= 1e-4 * (1.0 + tip.sigma)


def test_pencil_finds_mirror_eigenvalue(small):
    """The pencil spectrum is symmetric under sign reversal, so seeding at
    the negated growth rate converges to its mirror."""
    fam, grid, res = small
    branch = trace_branch(fam, grid, res.k0, res.kernel, np.linspace(0.0, 0.02, 6))
    tip = branch.points[-1]
    sol = pencil_eigen_near(fam, grid, tip.k, -tip.sigma, tip.U[::-1].copy())
    assert sol.sigma == pytest.approx(-tip.sigma, abs=1e-4)


def test_pencil_unreachable_tolerance(small):
    fam, grid, res = small
    branch = trace_branch(fam, grid, res.k0, res.kernel, np.linspace(0.0, 0.02, 6))
    tip = branch.points[-1]
    with pytest.raises(NoConvergence):
        pencil_eigen_near(fam, grid, tip.k, tip.sigma, tip.U, tol=1e-18, max_iter=8)


def test_growth_band_validation(small):
    fam, grid, res = small
    for bad in ([0.0], [-0.1], [res.k0], [res.k0 + 0.1]):
        with pytest.raises(ValueError):
            growth_curve(fam, grid, res.k0, res.kernel, bad)
    assert growth_curve(fam, grid, res.k0, res.kernel, []) == []


def test_growth_small_curve(small):
    fam, grid, res = small
    ks = [0.3 * res.k0, 0.55 * res.k0, 0.8 * res.k0]
    curve = growth_curve(fam, grid, res.k0, res.kernel, ks)
    assert [s.k for s in curve] == sorted(ks)
    for sample in curve:
        assert sample.sigma is not None and sample.sigma > 0.0
        assert sample.residual is not None and sample.residual <= 1e-3


def test_growth_reports_unreachable_samples(small):
    fam, grid, res = small
    curve = growth_curve(fam, grid, res.k0, res.kernel, [0.5 * res.k0], tol=1e-18)
    assert len(curve) == 1
    assert curve[0].sigma is None
    assert curve[0].residual is None
