"""Inverse-square potential flow and the doubled-axis reduction."""

import csv
import math

import numpy as np
import pytest

from ellipsax import (
    BarrierProximityError,
    Ellipsoid,
    InvalidInputError,
    InvalidMultiplicitiesError,
    angular_momentum,
    integrate_geodesic,
    integrate_rosochatius,
    lift_211,
    project_to_ellipsoid,
    project_to_tangent,
    random_unit_tangent,
    reduce_211,
    reduce_states,
    rosochatius_energy,
    tangent_frame,
    umbilic_points,
    umbilic_return_experiment,
    write_experiment_csv,
)

E321 = Ellipsoid(np.array([3.0, 2.0, 1.0]))
E3321 = Ellipsoid(np.array([3.0, 3.0, 2.0, 1.0]))


def test_energy_value_and_conservation():
    u = umbilic_points(E321)[0]
    fr = tangent_frame(E321, u)
    v0 = (fr[0] + 0.3 * fr[1]) / np.linalg.norm(fr[0] + 0.3 * fr[1])
    j = 0.4
    e0 = rosochatius_energy(E321, u, v0, j)
    assert math.isclose(e0, 0.5 + 0.5 * j * j / u[0] ** 2, rel_tol=1e-14)
    traj = integrate_rosochatius(E321, u, v0, j, 30.0)
    en = traj.energies()
    assert np.max(np.abs(en - en[0])) / en[0] < 1e-10


def test_j_zero_is_the_geodesic_flow():
    x0 = project_to_ellipsoid(E321, np.array([1.0, 1.0, 1.0]))
    xi0 = random_unit_tangent(E321, x0, seed=21)
    tg = integrate_geodesic(E321, x0, xi0, 15.0)
    tr = integrate_rosochatius(E321, x0, xi0, 0.0, 15.0)
    ts = np.linspace(0.0, 15.0, 151)
    assert np.max(np.abs(tg.state(ts) - tr.state(ts))) < 1e-13


def test_angular_momentum_conserved_on_doubled_axes():
    """J = x1 v2 - x2 v1 is a first integral when alpha_1 = alpha_2."""
    rng = np.random.default_rng(22)
    ts = np.linspace(0.0, 12.0, 61)
    for _ in range(5):
        x0 = project_to_ellipsoid(E3321, rng.standard_normal(4))
        v0 = random_unit_tangent(E3321, x0, rng=rng)
        traj = integrate_geodesic(E3321, x0, v0, 12.0)
        states = traj.state(ts)
        J = states[:, 0] * states[:, 5] - states[:, 1] * states[:, 4]
        assert np.max(np.abs(J - J[0])) < 1e-10


def test_reduce_lift_round_trip():
    rng = np.random.default_rng(23)
    x0 = project_to_ellipsoid(E3321, rng.standard_normal(4))
    v0 = random_unit_tangent(E3321, x0, rng=rng)
    red = reduce_211(E3321, x0, v0)
    assert np.allclose(red.ellipsoid.alphas, [3.0, 2.0, 1.0])
    assert math.isclose(red.j, angular_momentum(x0, v0), rel_tol=1e-14)
    # r' and the transverse speed satisfy r'^2 + (J/r)^2 = v1^2 + v2^2
    r = red.y[0]
    assert math.isclose(red.w[0] ** 2 + (red.j / r) ** 2,
                        v0[0] ** 2 + v0[1] ** 2, rel_tol=1e-12)
    phase = math.atan2(x0[1], x0[0])
    x_back, v_back = lift_211(E3321, red.y, red.w, red.j, phase=phase)
    assert np.max(np.abs(x_back - x0)) < 1e-14
    assert np.max(np.abs(v_back - v0)) < 1e-14


def test_reduced_flow_matches_reduced_states():
    """Reducing the ambient geodesic samples equals integrating the
    reduced inverse-square system directly."""
    rng = np.random.default_rng(24)
    x0 = project_to_ellipsoid(E3321, rng.standard_normal(4))
    v0 = random_unit_tangent(E3321, x0, rng=rng)
    traj = integrate_geodesic(E3321, x0, v0, 10.0)
    ts = np.linspace(0.0, 10.0, 101)
    red_samples = reduce_states(E3321, traj.state(ts))
    r0 = reduce_211(E3321, x0, v0)
    reduced = integrate_rosochatius(r0.ellipsoid, r0.y, r0.w, r0.j, 10.0)
    assert np.max(np.abs(red_samples - reduced.state(ts))) < 1e-8


def test_reduction_needs_leading_double_axis():
    rng = np.random.default_rng(25)
    E = Ellipsoid(np.array([4.0, 3.0, 2.0, 1.0]))
    x0 = project_to_ellipsoid(E, rng.standard_normal(4))
    v0 = random_unit_tangent(E, x0, rng=rng)
    with pytest.raises(InvalidMultiplicitiesError):
        reduce_211(E, x0, v0)


def test_barrier_halt_carries_partial_trajectory():
    # head toward the x1 = 0 plane with a tiny j: the barrier guard stops
    # the run before the potential blows up
    x0 = project_to_ellipsoid(E321, np.array([0.05, 1.0, 0.5]))
    v = project_to_tangent(E321, x0, np.array([-1.0, 0.0, 0.0]))
    v /= np.linalg.norm(v)
    with pytest.raises(BarrierProximityError) as err:
        integrate_rosochatius(E321, x0, v, 1e-6, 5.0)
    partial = err.value.partial
    assert partial is not None
    assert partial.status_label == "barrier-halt"
    assert abs(partial.position(partial.t_end)[0]) < 2e-4


def test_rejects_bad_initial_data():
    x0 = project_to_ellipsoid(E321, np.array([1.0, 1.0, 1.0]))
    v0 = random_unit_tangent(E321, x0, seed=26)
    with pytest.raises(InvalidInputError):
        integrate_rosochatius(E321, 1.02 * x0, v0, 0.1, 1.0)
    with pytest.raises(InvalidInputError):
        integrate_rosochatius(E321, x0, np.zeros(3), 0.1, 1.0)
    # starting on the barrier plane with j != 0 is rejected up front
    u = project_to_ellipsoid(E321, np.array([0.0, 1.0, 1.0]))
    w = random_unit_tangent(E321, u, seed=27)
    with pytest.raises(BarrierProximityError):
        integrate_rosochatius(E321, u, w, 0.5, 1.0)


def test_umbilic_return_experiment_schema(tmp_path):
    js = [0.0, 0.25]
    report = umbilic_return_experiment(E321, js, num_directions=6,
                                       t_max=25.0)
    assert len(report.rows) == 12
    summary = report.summary()
    assert [s["j"] for s in summary] == js
    # j = 0 is the geodesic case: common return time tight across directions
    assert summary[0]["num_tight"] == 6
    assert summary[0]["time_spread"] < 1e-5
    assert abs(summary[0]["time_mean"] - 8.7377525710) < 1e-6
    # the doc dict round-trips through json
    import json
    json.dumps(report.to_dict())

    p1 = tmp_path / "a.csv"
    p2 = tmp_path / "b.csv"
    write_experiment_csv(report, p1)
    write_experiment_csv(report, p2)
    assert p1.read_bytes() == p2.read_bytes()
    with open(p1) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["j", "direction_index", "return_time",
                       "miss_distance", "halted_flag"]
    assert len(rows) - 1 == 12
    assert {r[4] for r in rows[1:]} <= {"0", "1"}


def test_experiment_requires_triaxial():
    with pytest.raises(InvalidInputError):
        umbilic_return_experiment(E3321, [0.0], num_directions=4)
