"""Full-resolution validation battery.

One test per shipped guarantee, at production grid sizes and the stated
tolerances.  Each test finishes by printing a single verdict line with
the measured quantities, so a verbose run doubles as a checklist.
"""

import csv
import time

import numpy as np
import pytest
import scipy.linalg as sla

from tspec import (
    BlockOperator,
    GPBlackParams,
    HypothesisOptions,
    KPIParams,
    build_grid,
    check_hypotheses,
    ek_family,
    ek_params_from_profile,
    ek_schur_M,
    find_k0,
    gp_black_family,
    gp_dark_ek_params,
    gp_dark_profile,
    growth_curve,
    hypeuler_check,
    kpi_family,
    load_profile_csv,
    pencil_eigen_near,
    residual_G,
    schur_quadratic,
    sym_eigs,
    symmetrize,
    trace_branch,
)


def cosine(a, b):
    return abs(float(a @ b)) / (np.linalg.norm(a) * np.linalg.norm(b))


def test_criterion_01_block_elimination_identity():
    rng = np.random.default_rng(2026)
    t0 = time.monotonic()
    worst = 0.0
    for _ in range(100):
        l1 = symmetrize(rng.standard_normal((40, 40)))
        root = rng.standard_normal((40, 40))
        l2 = root @ root.T + 40.0 * np.eye(40)
        a12 = rng.standard_normal((40, 40))
        blocks = BlockOperator(L1=l1, L2=l2, A12=a12)
        u = rng.standard_normal(80)
        direct, factored = schur_quadratic(blocks, u)
        rel = abs(direct - factored) / max(1.0, abs(direct))
        worst = max(worst, rel)
        assert rel <= 1e-10
    elapsed = time.monotonic() - t0
    print(f"criterion 1: PASS (100 trials, worst relative defect {worst:.2e}, {elapsed:.2f}s)")


def test_criterion_02_black_soliton_closed_form_spectrum(gpb, gpb_k0):
    """The two diagonal blocks at zero transverse wavenumber are solvable
    reflectionless-well problems: ground states (0, sech^2) and
    (-1/2, sech)."""
    fam, grid = gpb
    n = grid.n
    mat = fam.assemble_L(0.0)
    first = sym_eigs(np.ascontiguousarray(mat[:n, :n]), 1)
    second = sym_eigs(np.ascontiguousarray(mat[n:, n:]), 1)
    sech = 1.0 / np.cosh(grid.nodes)
    assert abs(first.values[0]) <= 1e-3
    assert cosine(first.vectors[:, 0], sech**2) >= 0.999
    assert abs(second.values[0] + 0.5) <= 1e-3
    assert cosine(second.vectors[:, 0], sech) >= 0.999
    assert abs(gpb_k0.k0 - 1.0) <= 0.01
    assert cosine(gpb_k0.kernel[n:], sech) >= 0.999
    assert np.linalg.norm(gpb_k0.kernel[:n]) <= 1e-3
    print(
        "criterion 2: PASS (block grounds "
        f"{first.values[0]:+.2e} and {second.values[0]:+.6f}, k0 = {gpb_k0.k0:.6f})"
    )


def test_criterion_03_translation_kernel_identities(gpb, ek_half):
    fam, grid = gpb
    n = grid.n
    mat = fam.assemble_L(0.0)
    sech = 1.0 / np.cosh(grid.nodes)
    psi_prime = sech**2
    psi_prime = psi_prime / np.linalg.norm(psi_prime)
    r1 = np.linalg.norm(mat[:n, :n] @ psi_prime)
    assert r1 <= 1e-3 * fam.scale

    profile = np.tanh(grid.nodes)
    profile = profile / np.linalg.norm(profile)
    image = mat[n:, n:] @ profile
    image[:5] = 0.0
    image[-5:] = 0.0
    r2 = np.linalg.norm(image)
    assert r2 <= 1e-3 * fam.scale

    ek_fam, ek_grid, params = ek_half
    m = ek_schur_M(params, ek_grid)
    dr = params.profile.drho(ek_grid.nodes)
    dr = dr / np.linalg.norm(dr)
    r3 = np.linalg.norm(m @ dr)
    assert r3 <= 1e-4 * ek_fam.scale
    print(
        f"criterion 3: PASS (residuals {r1:.2e}, {r2:.2e} vs {1e-3 * fam.scale:.2e}; "
        f"{r3:.2e} vs {1e-4 * ek_fam.scale:.2e})"
    )


def test_criterion_04_hypothesis_battery(kpi2, ek_half, gpb):
    cases = {"kpi p=2": kpi2, "ek c=0.5": ek_half[:2], "gp-black": gpb}
    for p in (3, 4):
        grid = build_grid(40.0, 1024)
        cases[f"kpi p={p}"] = (kpi_family(KPIParams(p=p), grid), grid)
    for c in (0.3, 0.8):
        grid = build_grid(40.0, 1024)
        cases[f"ek c={c}"] = (ek_family(gp_dark_ek_params(c), grid), grid)
    for name, (fam, grid) in cases.items():
        report = check_hypotheses(fam, grid)
        assert report.overall, f"{name}: {report}"
        assert report.h4.n_negative_at_0 == 1, name

    supersonic = gp_dark_ek_params(1.2)
    assert not hypeuler_check(supersonic)
    grid = build_grid(40.0, 1024)
    fam = ek_family(supersonic, grid)
    report = check_hypotheses(fam, grid)
    assert not report.h2.passed
    assert not report.overall
    print(
        "criterion 4: PASS (7 families pass h1-h4 with a simple negative "
        "direction; supersonic speed fails h2)"
    )


def test_criterion_05_wavenumber_monotonicity(kpi2, ek_half, gpb):
    ks = [0.0, 0.5, 1.0, 2.0]
    worst = np.inf
    for fam, grid in (kpi2, ek_half[:2], gpb):
        mats = {k: fam.assemble_L(k) for k in ks}
        for i, k1 in enumerate(ks):
            for k2 in ks[i + 1 :]:
                low = float(sym_eigs(symmetrize(mats[k2] - mats[k1]), 1).values[0])
                assert low >= -1e-12 * fam.scale, (fam.name, k1, k2, low)
                worst = min(worst, low)
    print(f"criterion 5: PASS (18 ordered pairs, smallest increment eigenvalue {worst:.2e})")


def test_criterion_06_kernel_wavenumber_grid_stability(kpi2_k0):
    base = kpi2_k0.k0
    drifts = []
    for half_width, n in ((40.0, 2048), (60.0, 1536)):
        grid = build_grid(half_width, n)
        fam = kpi_family(KPIParams(p=2, grid_half_width=half_width, grid_n=n), grid)
        other = find_k0(fam, grid).k0
        drift = abs(other - base) / base
        drifts.append(drift)
        assert drift <= 0.01
    print(
        f"criterion 6: PASS (k0 = {base:.6f}; refinement drift {drifts[0]:.2e}, "
        f"wider-domain drift {drifts[1]:.2e})"
    )


def test_criterion_07_branch_certification(kpi2, kpi2_k0, ek_half, ek_half_k0, gpb, gpb_k0):
    schedule = np.linspace(0.0, 0.05, 21)
    summaries = []
    for (fam, grid), res in (
        (kpi2, kpi2_k0),
        (ek_half[:2], ek_half_k0),
        (gpb, gpb_k0),
    ):
        tol = 1e-8 * fam.scale
        branch = trace_branch(fam, grid, res.k0, res.kernel, schedule)
        assert len(branch.points) == 21
        phi = branch.phi
        ratios = []
        for point in branch.points:
            fresh = residual_G(fam, grid, phi, point.V, point.k, point.sigma)
            assert np.linalg.norm(fresh) <= tol
            assert abs(phi @ point.V) <= 1e-12 * max(1.0, np.linalg.norm(point.V))
            if point.sigma > 0.0:
                ratios.append(np.linalg.norm(point.V) / point.sigma)
        ratios = np.array(ratios)
        assert np.all(np.isfinite(ratios))
        assert ratios.max() / ratios.min() <= 2.0
        tip = branch.points[-1]
        sol = pencil_eigen_near(fam, grid, tip.k, tip.sigma, tip.U)
        assert abs(sol.sigma - tip.sigma) <= 1e-4 * (1.0 + tip.sigma)
        summaries.append(f"{fam.name} C<={ratios.max():.2f}")
    print(f"criterion 7: PASS (20 steps each; linear-response bounds {', '.join(summaries)})")


def test_criterion_08_pencil_sign_symmetry():
    configs = [
        (gp_black_family(GPBlackParams(grid_n=100), build_grid(30.0, 100)), 30.0, 100, 0.6),
        (kpi_family(KPIParams(grid_n=200), build_grid(40.0, 200)), 40.0, 200, 0.25),
        (ek_family(gp_dark_ek_params(0.5, grid_n=100), build_grid(40.0, 100)), 40.0, 100, 0.4),
    ]
    worst = 0.0
    for fam, _, _, k in configs:
        l_mat = fam.assemble_L(k)
        a_mat = fam.assemble_A(k)
        w, _ = sla.eig(l_mat, a_mat, homogeneous_eigvals=True)
        alpha = np.asarray(w[0]).ravel()
        beta = np.asarray(w[1]).ravel()
        keep = np.abs(beta) > 1e-10 * np.max(np.abs(alpha) + np.abs(beta))
        sig = alpha[keep] / beta[keep]
        assert l_mat.shape[0] <= 200
        pair_err = np.abs(sig[:, None] + sig[None, :]).min(axis=1).max()
        worst = max(worst, float(pair_err))
        assert pair_err <= 1e-8, fam.name
    print(f"criterion 8: PASS (3 truncations, worst sign-pairing defect {worst:.2e})")


def test_criterion_09_growth_band_profile(gpb, gpb_k0, kpi2, kpi2_k0):
    fam, grid = gpb
    k0 = gpb_k0.k0
    edge = k0 - 0.015
    ks = [0.3, 0.5, 0.7, 0.9, edge]
    curve = growth_curve(fam, grid, k0, gpb_k0.kernel, ks, tol=1e-4)
    sigmas = {s.k: s.sigma for s in curve}
    assert all(v is not None and v > 0.0 for v in sigmas.values())
    assert sigmas[edge] == min(sigmas.values())
    assert sigmas[edge] < sigmas[0.9]
    assert sigmas[edge] <= 0.05 * fam.scale

    kfam, kgrid = kpi2
    kks = [0.24, 0.28, 0.30, 0.34]
    coarse = growth_curve(kfam, kgrid, kpi2_k0.k0, kpi2_k0.kernel, kks, tol=1e-4)
    fine_grid = build_grid(40.0, 2048)
    fine_fam = kpi_family(KPIParams(p=2, grid_n=2048), fine_grid)
    fine_res = find_k0(fine_fam, fine_grid)
    fine = growth_curve(fine_fam, fine_grid, fine_res.k0, fine_res.kernel, kks, tol=1e-4)
    drifts = []
    for a, b in zip(coarse, fine):
        assert a.sigma is not None and b.sigma is not None
        drift = abs(a.sigma - b.sigma) / a.sigma
        drifts.append(drift)
        assert drift <= 0.01
    print(
        f"criterion 9: PASS (band closes: sigma({edge:.3f}) = {sigmas[edge]:.3f}; "
        f"refinement drift <= {max(drifts):.2e})"
    )


def test_criterion_10_tabulated_profile_agreement(tmp_path, ek_half_k0):
    z = np.linspace(-40.0, 40.0, 4001)
    rho, u = gp_dark_profile(0.5, z)
    path = tmp_path / "dark_c05.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "rho", "u"])
        for row in zip(z, rho, u):
            writer.writerow([format(v, ".17g") for v in row])
    params = ek_params_from_profile(load_profile_csv(path), 0.5)
    grid = build_grid(params.grid_half_width, params.grid_n)
    fam = ek_family(params, grid)
    tabulated = find_k0(fam, grid).k0
    rel = abs(tabulated - ek_half_k0.k0) / ek_half_k0.k0
    assert rel <= 0.005
    print(
        f"criterion 10: PASS (tabulated k0 = {tabulated:.8f} vs closed-form "
        f"{ek_half_k0.k0:.8f}, relative gap {rel:.2e})"
    )
