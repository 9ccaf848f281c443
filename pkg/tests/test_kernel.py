"""Stepping kernel: tableau constants, dense output, backend parity."""

import os
import subprocess
import sys

import numpy as np
import pytest

import ellipsax
from ellipsax import Ellipsoid, IntegratorOptions, integrate_geodesic
from ellipsax._kernel import BACKEND, tableau
from ellipsax.geometry import project_to_ellipsoid, random_unit_tangent


def test_tableau_matches_reference_pair():
    """Coefficients agree with the published Dormand-Prince 5(4) pair as
    shipped in scipy (independent transcription)."""
    from scipy.integrate._ivp.rk import RK45

    assert np.allclose(tableau.C, RK45.C, rtol=0, atol=0)
    assert np.allclose(tableau.A, RK45.A, rtol=0, atol=0)
    assert np.allclose(tableau.B, RK45.B, rtol=0, atol=0)
    assert np.allclose(tableau.E, RK45.E, rtol=0, atol=0)
    assert np.allclose(tableau.P, RK45.P, rtol=0, atol=0)


def test_tableau_consistency_conditions():
    assert abs(tableau.B.sum() - 1.0) < 1e-15
    # each stage's row sums to its node
    for i in range(1, 6):
        assert abs(tableau.A[i, :i].sum() - tableau.C[i]) < 1e-15
    # dense-output polynomial reproduces the endpoint: the theta = 1
    # weights recover B on the six step stages and zero on the FSAL stage
    w_end = tableau.P @ np.ones(4)
    assert np.allclose(w_end[:6], tableau.B, atol=1e-14)
    assert abs(w_end[6]) < 1e-14


def test_dense_output_against_great_circle():
    E = Ellipsoid(np.array([4.0, 4.0, 4.0, 4.0]))
    x0 = np.array([2.0, 0.0, 0.0, 0.0])
    xi0 = np.array([0.0, 1.0, 0.0, 0.0])
    traj = integrate_geodesic(E, x0, xi0, 10.0)
    ts = np.linspace(0.0, 10.0, 257)
    states = traj.state(ts)
    # closed form: x(t) = x0 cos(t/2) + 2 xi0 sin(t/2), unit speed
    ref_x = (np.outer(np.cos(ts / 2.0), x0)
             + np.outer(2.0 * np.sin(ts / 2.0), xi0))
    ref_v = (np.outer(-0.5 * np.sin(ts / 2.0), x0)
             + np.outer(np.cos(ts / 2.0), xi0))
    assert np.max(np.abs(states[:, :4] - ref_x)) < 1e-10
    assert np.max(np.abs(states[:, 4:] - ref_v)) < 1e-10


def test_projection_controls_constraint_drift():
    E = Ellipsoid(np.array([3.0, 2.0, 1.0]))
    x0 = project_to_ellipsoid(E, np.array([1.0, 1.0, 1.0]))
    xi0 = random_unit_tangent(E, x0, seed=4)
    on = integrate_geodesic(E, x0, xi0, 20.0)
    off = integrate_geodesic(E, x0, xi0, 20.0,
                             options=IntegratorOptions(projection_every=0))
    drift_on = np.max(np.abs(on.constraint_residuals()))
    drift_off = np.max(np.abs(off.constraint_residuals()))
    assert drift_on < 5e-15
    assert drift_off < 1e-8          # still tiny, just not machine-level
    assert drift_on < drift_off


def test_backend_is_reported():
    assert BACKEND in ("compiled", "python")
    assert ellipsax.BACKEND == BACKEND


def _run_in_subprocess(force_py):
    code = (
        "import numpy as np, sys\n"
        "import ellipsax as ex\n"
        "E = ex.Ellipsoid(np.array([3.0, 2.0, 1.0]))\n"
        "x0 = ex.project_to_ellipsoid(E, np.array([1.0, 1.0, 1.0]))\n"
        "xi0 = ex.random_unit_tangent(E, x0, seed=5)\n"
        "traj = ex.integrate_geodesic(E, x0, xi0, 5.0)\n"
        "s = traj.state(np.linspace(0.0, 5.0, 51))\n"
        "print(ex.BACKEND)\n"
        "np.savetxt(sys.stdout, s.ravel()[None], fmt='%.17e')\n"
    )
    env = dict(os.environ)
    env.pop("ELLIPSAX_FORCE_PY", None)
    if force_py:
        env["ELLIPSAX_FORCE_PY"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    lines = out.stdout.strip().splitlines()
    return lines[0], np.array(lines[1].split(), dtype=float)


@pytest.mark.skipif(BACKEND != "compiled",
                    reason="needs the compiled stepper to compare against")
def test_backend_parity():
    """Pure-python fallback reproduces the compiled kernel.

    The two backends perform the same arithmetic in different orders, so
    agreement is to rounding amplified by the flow, not bitwise.
    """
    b1, s1 = _run_in_subprocess(force_py=False)
    b2, s2 = _run_in_subprocess(force_py=True)
    assert b1 == "compiled" and b2 == "python"
    assert np.max(np.abs(s1 - s2)) < 1e-8


def test_max_steps_failure_carries_partial():
    E = Ellipsoid(np.array([3.0, 2.0, 1.0]))
    x0 = project_to_ellipsoid(E, np.array([1.0, 1.0, 1.0]))
    xi0 = random_unit_tangent(E, x0, seed=6)
    from ellipsax import IntegrationFailureError
    with pytest.raises(IntegrationFailureError) as err:
        integrate_geodesic(E, x0, xi0, 50.0,
                           options=IntegratorOptions(max_steps=10))
    partial = err.value.partial
    assert partial is not None
    assert partial.status_label == "max-steps-exceeded"
    assert 0.0 < partial.t_end < 50.0


def test_options_validation():
    with pytest.raises(Exception):
        IntegratorOptions(rel_tol=-1.0)
    with pytest.raises(Exception):
        IntegratorOptions(max_step=0.0)
