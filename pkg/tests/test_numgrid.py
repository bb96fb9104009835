"""Grid construction, difference stencils, bisection, and the bordered
linear solver."""

import numpy as np
import pytest

from tspec import (
    InvalidGrid,
    NoBracket,
    SingularBorder,
    bisect,
    bordered_solve,
    build_grid,
    diff1,
    diff2,
    sym_eigs,
    symmetrize,
)


def test_build_grid_nodes_and_spacing():
    grid = build_grid(40.0, 5)
    assert grid.n == 5
    assert grid.spacing == 20.0
    np.testing.assert_array_equal(grid.nodes, [-40.0, -20.0, 0.0, 20.0, 40.0])


def test_build_grid_nodes_are_read_only():
    grid = build_grid(10.0, 9)
    with pytest.raises(ValueError):
        grid.nodes[0] = 99.0


@pytest.mark.parametrize("half_width,n", [(40.0, 2), (40.0, 0), (0.0, 64), (-1.0, 64)])
def test_build_grid_rejects_degenerate_input(half_width, n):
    with pytest.raises(InvalidGrid):
        build_grid(half_width, n)


def test_diff1_is_exactly_antisymmetric():
    grid = build_grid(12.0, 64)
    d1 = diff1(grid)
    assert np.array_equal(d1.T, -d1)
    off = 1.0 / (2.0 * grid.spacing)
    assert d1[0, 1] == off
    assert d1[1, 0] == -off
    assert np.count_nonzero(d1) == 2 * (grid.n - 1)


def test_diff2_is_exactly_symmetric_tridiagonal():
    grid = build_grid(12.0, 64)
    d2 = diff2(grid)
    assert np.array_equal(d2.T, d2)
    h2 = grid.spacing**2
    assert np.allclose(np.diag(d2), -2.0 / h2)
    assert np.allclose(np.diag(d2, 1), 1.0 / h2)
    assert np.count_nonzero(d2) == grid.n + 2 * (grid.n - 1)


def test_diff2_spectrum_matches_closed_form():
    """The zero-endpoint second-difference matrix has a known spectrum:
    eigenvalues of -diff2 are (4/h^2) sin^2(j pi / (2(n+1)))."""
    grid = build_grid(10.0, 40)
    n, h = grid.n, grid.spacing
    computed = np.sort(np.linalg.eigvalsh(-diff2(grid)))
    j = np.arange(1, n + 1)
    exact = (4.0 / h**2) * np.sin(j * np.pi / (2.0 * (n + 1))) ** 2
    np.testing.assert_allclose(computed, exact, rtol=1e-12)


def test_diff1_second_order_on_decaying_field():
    errs = []
    for n in (256, 512):
        grid = build_grid(20.0, n)
        f = 1.0 / np.cosh(grid.nodes)
        exact = -np.tanh(grid.nodes) / np.cosh(grid.nodes)
        errs.append(np.abs(diff1(grid) @ f - exact).max())
    assert errs[0] / errs[1] > 3.7


def test_symmetrize_output_is_bitwise_symmetric():
    rng = np.random.default_rng(7)
    m = rng.standard_normal((31, 31))
    s = symmetrize(m)
    assert np.array_equal(s, s.T)
    np.testing.assert_allclose(s, 0.5 * (m + m.T), rtol=0, atol=0)
    assert np.array_equal(symmetrize(s), s)


def test_sym_eigs_matches_full_decomposition():
    rng = np.random.default_rng(11)
    m = symmetrize(rng.standard_normal((60, 60)))
    pairs = sym_eigs(m, 5)
    full = np.linalg.eigvalsh(m)
    np.testing.assert_allclose(pairs.values, full[:5], atol=1e-12 * np.abs(m).max())
    for i in range(5):
        v = pairs.vectors[:, i]
        assert abs(np.linalg.norm(v) - 1.0) < 1e-12
        assert np.linalg.norm(m @ v - pairs.values[i] * v) < 1e-10 * np.abs(m).max()


def test_sym_eigs_rejects_bad_requests():
    m = np.eye(4)
    with pytest.raises(ValueError):
        sym_eigs(m, 0)
    with pytest.raises(ValueError):
        sym_eigs(m, 5)
    with pytest.raises(ValueError):
        sym_eigs(np.triu(np.ones((4, 4))), 2)


def test_bisect_locates_interior_root():
    root = bisect(np.cos, 0.0, 3.0, 1e-12)
    assert abs(root - np.pi / 2.0) < 1e-11


def test_bisect_never_leaves_the_bracket():
    seen = []

    def f(x):
        seen.append(x)
        return x - 0.7

    bisect(f, 0.0, 2.0, 1e-10)
    assert min(seen) >= 0.0
    assert max(seen) <= 2.0


def test_bisect_returns_endpoint_zero():
    assert bisect(lambda x: x - 1.0, 1.0, 2.0, 1e-10) == 1.0
    assert bisect(lambda x: x - 2.0, 1.0, 2.0, 1e-10) == 2.0


def test_bisect_requires_a_sign_change():
    with pytest.raises(NoBracket):
        bisect(lambda x: 1.0 + x * x, -1.0, 1.0, 1e-10)
    with pytest.raises(ValueError):
        bisect(np.cos, 2.0, 1.0, 1e-10)


def test_bordered_solve_well_posed_system():
    rng = np.random.default_rng(23)
    n = 50
    m = symmetrize(rng.standard_normal((n, n))) + (n + 1) * np.eye(n)
    b = rng.standard_normal(n)
    c = rng.standard_normal(n)
    r = rng.standard_normal(n)
    s = 0.37
    w, mu = bordered_solve(m, b, c, r, s)
    scale = np.abs(m).max()
    assert np.abs(m @ w + mu * b - r).max() < 1e-10 * scale
    assert abs(c @ w - s) < 1e-10


def test_bordered_solve_handles_singular_diagonal_block():
    """The border can make the augmented system solvable even when the
    leading block alone is singular."""
    w, mu = bordered_solve(np.zeros((1, 1)), [1.0], [1.0], [2.0], 3.0)
    assert w[0] == pytest.approx(3.0)
    assert mu == pytest.approx(2.0)


def test_bordered_solve_rejects_singular_augmented_matrix():
    with pytest.raises(SingularBorder):
        bordered_solve(np.zeros((2, 2)), [1.0, 0.0], [0.0, 1.0], [0.0, 0.0], 0.0)


def test_bordered_solve_rejects_bad_shapes():
    with pytest.raises(ValueError):
        bordered_solve(np.zeros((2, 3)), [1.0, 0.0], [0.0, 1.0], [0.0, 0.0], 0.0)
