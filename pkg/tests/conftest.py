"""Shared fixtures.

The expensive artifacts (branch sweeps at the default resolution, the
low-resolution evolution runs) are computed once per session and shared
between the unit tests and the acceptance suite.
"""

import numpy as np
import pytest

import screwbif as sb

EVOLUTION_N = 48  # smallest grid whose branch profile tracks the screw
                  # motion to ~1e-12, leaving RK4 error visible for the
                  # dt-convergence study


@pytest.fixture(scope="session")
def grid256():
    return sb.Grid(1.0, 256)


@pytest.fixture(scope="session")
def grid128():
    return sb.Grid(1.0, 128)


@pytest.fixture(scope="session")
def sweep_k2(grid256):
    return sb.sweep_branch(2, 1.0, 0.05, 6, grid=grid256)


@pytest.fixture(scope="session")
def sweep_k3(grid256):
    return sb.sweep_branch(3, 1.0, 0.05, 6, grid=grid256)


@pytest.fixture(scope="session")
def point_k2_002(grid256):
    return sb.solve_branch_point(2, 1.0, 0.02, grid=grid256)


@pytest.fixture(scope="session")
def mono_k2_002(grid256):
    return sb.monolithic_crosscheck(2, 1.0, 0.02, grid=grid256)


@pytest.fixture(scope="session")
def evo_grid():
    return sb.Grid(1.0, EVOLUTION_N)


@pytest.fixture(scope="session")
def evo_point(evo_grid):
    return sb.solve_branch_point(2, 1.0, 0.02, grid=evo_grid)


@pytest.fixture(scope="session")
def tracking_study(evo_point, evo_grid):
    """Integrate the branch profile to t=5 at the step bound and its half.

    Returns (dts, errors) of the sup-norm mismatch against the rigid
    screw motion of the same profile.
    """
    y = evo_point.curve()
    sp = sb.ScrewParams(1.0, evo_point.omega, evo_point.c, evo_point.v_axial)
    bound = 0.2 * (evo_grid.L / evo_grid.N) ** 2
    dts, errs = [], []
    for fac in (1.0, 0.5):
        n_steps = int(np.ceil(5.0 / (bound * fac)))
        dt = 5.0 / n_steps
        states = sb.integrate(y, 5.0, dt, n_out=3)
        ref = sb.screw_evaluate(y, sp, states[-1].t).array
        dts.append(dt)
        errs.append(float(np.max(np.abs(states[-1].curve.array - ref))))
    return dts, errs


@pytest.fixture(scope="session")
def drift_k2(evo_point, evo_grid):
    bound = 0.2 * (evo_grid.L / evo_grid.N) ** 2
    n_steps = int(np.ceil(10.0 / bound))
    return sb.drift_report(evo_point, 10.0, 10.0 / n_steps, n_out=41)
