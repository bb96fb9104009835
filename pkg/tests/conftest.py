"""Shared fixtures for the full-resolution operator families.

The assemblies and kernel searches at production grid sizes are the
expensive part of the suite, so they are built once per session and
shared between the unit modules and the acceptance module.
"""

import numpy as np
import pytest

from tspec import (
    GPBlackParams,
    KPIParams,
    build_grid,
    ek_family,
    find_k0,
    gp_black_family,
    gp_dark_ek_params,
    kpi_family,
)


@pytest.fixture(scope="session")
def kpi2():
    """Line-soliton family, quadratic nonlinearity, production grid."""
    params = KPIParams(p=2)
    grid = build_grid(params.grid_half_width, params.grid_n)
    return kpi_family(params, grid), grid


@pytest.fixture(scope="session")
def kpi2_k0(kpi2):
    fam, grid = kpi2
    return find_k0(fam, grid)


@pytest.fixture(scope="session")
def gpb():
    """Black-profile two-component family, production grid."""
    params = GPBlackParams()
    grid = build_grid(params.grid_half_width, params.grid_n)
    return gp_black_family(params, grid), grid


@pytest.fixture(scope="session")
def gpb_k0(gpb):
    fam, grid = gpb
    return find_k0(fam, grid)


@pytest.fixture(scope="session")
def ek_half():
    """Capillary two-component family at wave speed one half."""
    params = gp_dark_ek_params(0.5)
    grid = build_grid(params.grid_half_width, params.grid_n)
    return ek_family(params, grid), grid, params


@pytest.fixture(scope="session")
def ek_half_k0(ek_half):
    fam, grid, _ = ek_half
    return find_k0(fam, grid)
