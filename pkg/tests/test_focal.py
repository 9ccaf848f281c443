"""Self-focal scans, umbilic points, direction grids, isometry transport."""

import json
import math

import numpy as np
import pytest

from ellipsax import (
    Ellipsoid,
    InvalidInputError,
    InvalidIsometryError,
    InvalidMultiplicitiesError,
    NoUmbilicFoundError,
    VERDICT_EVIDENCE,
    VERDICT_NOT,
    count_small_deviations,
    direction_grid,
    embed_slice,
    project_to_ellipsoid,
    return_map,
    return_map_derivative,
    scan_self_focal,
    special_focal_point,
    tangent_frame,
    transport_directions,
    umbilic_defect,
    umbilic_points,
    validate_isometry,
)

E321 = Ellipsoid(np.array([3.0, 2.0, 1.0]))
E4321 = Ellipsoid(np.array([4.0, 3.0, 2.0, 1.0]))
E3221 = Ellipsoid(np.array([3.0, 2.0, 2.0, 1.0]))


def test_umbilic_points_closed_form():
    pts = umbilic_points(E321)
    assert pts.shape == (4, 3)
    u1 = math.sqrt(3.0 * (3.0 - 2.0) / (3.0 - 1.0))
    u3 = math.sqrt(1.0 * (2.0 - 1.0) / (3.0 - 1.0))
    assert np.allclose(np.abs(pts), [[u1, 0.0, u3]] * 4, atol=1e-15)
    signs = {(np.sign(p[0]), np.sign(p[2])) for p in pts}
    assert len(signs) == 4
    for p in pts:
        assert abs(E321.constraint(p)) < 1e-14


def test_umbilic_defect_oracle():
    """The closed form agrees with the curvature-spread characterization."""
    for p in umbilic_points(E321):
        assert umbilic_defect(E321, p) < 1e-12
    generic = project_to_ellipsoid(E321, np.array([1.0, 1.0, 1.0]))
    assert umbilic_defect(E321, generic) > 0.1


def test_umbilic_points_respect_axis_order():
    Eperm = Ellipsoid(np.array([1.0, 3.0, 2.0]))    # same body, axes relabeled
    pts = umbilic_points(Eperm)
    for p in pts:
        assert abs(Eperm.constraint(p)) < 1e-14
        assert umbilic_defect(Eperm, p) < 1e-12
        assert p[2] == 0.0                  # the alpha = 2 axis is index 2 here


def test_umbilic_points_rejections():
    with pytest.raises(NoUmbilicFoundError):
        umbilic_points(Ellipsoid(np.array([1.0, 1.0, 1.0])))
    with pytest.raises(NoUmbilicFoundError):
        umbilic_points(E4321)


def test_special_focal_point_pattern():
    sp = special_focal_point(E3221)
    assert np.allclose(sp, [math.sqrt(1.5), 0.0, 0.0, math.sqrt(0.5)],
                       atol=1e-14)
    with pytest.raises(InvalidMultiplicitiesError):
        special_focal_point(E4321)
    with pytest.raises(InvalidMultiplicitiesError):
        special_focal_point(Ellipsoid(np.array([2.0, 2.0, 2.0, 1.0])))


def test_embed_slice():
    emb = embed_slice(E4321, [0, 2, 3])
    assert np.allclose(emb.sub.alphas, [4.0, 2.0, 1.0])
    y = project_to_ellipsoid(emb.sub, np.array([1.0, 1.0, 1.0]))
    x = emb.point(y)
    assert x.shape == (4,)
    assert x[1] == 0.0
    assert abs(E4321.constraint(x)) < 1e-14
    assert np.allclose(emb.restrict(x), y)
    with pytest.raises(InvalidInputError):
        embed_slice(E4321, [0, 0, 1])
    with pytest.raises(InvalidInputError):
        embed_slice(E4321, [0, 1])


def test_direction_grid_properties():
    rng = np.random.default_rng(41)
    for E in (E321, E4321):
        x = project_to_ellipsoid(E, rng.standard_normal(E.n))
        D = direction_grid(E, x, num=24)
        assert D.shape == (24, E.n)
        assert np.allclose(np.linalg.norm(D, axis=1), 1.0, atol=1e-13)
        assert np.max(np.abs(D @ (E.ainv * x))) < 1e-13
        # deterministic
        assert np.array_equal(D, direction_grid(E, x, num=24))
    x = project_to_ellipsoid(E321, np.array([1.0, 1.0, 1.0]))
    Dr = direction_grid(E321, x, num=8, num_random=5, seed=2)
    assert Dr.shape == (13, 3)
    # the planar grid starts at the frame's first leg (theta = 0)
    fr = tangent_frame(E321, x)
    assert np.allclose(Dr[0], fr[0], atol=1e-14)


def test_transport_and_isometry_validation():
    phi = 1.1
    g = np.eye(4)
    g[1, 1] = math.cos(phi)
    g[1, 2] = -math.sin(phi)
    g[2, 1] = math.sin(phi)
    g[2, 2] = math.cos(phi)
    validate_isometry(E3221, g)

    x = project_to_ellipsoid(E3221, np.array([1.0, 1.0, 0.5, 1.0]))
    D = direction_grid(E3221, x, num=6)
    TD = transport_directions(g, D)
    assert np.allclose(TD, D @ g.T)
    assert np.max(np.abs(TD @ (E3221.ainv * (g @ x)))) < 1e-12

    with pytest.raises(InvalidIsometryError):
        validate_isometry(E3221, 2.0 * np.eye(4))
    with pytest.raises(InvalidIsometryError):
        validate_isometry(E4321, g)     # rotates non-equal axes


def test_scan_sphere_all_directions_return():
    E = Ellipsoid(np.array([2.0, 2.0, 2.0]))
    x = project_to_ellipsoid(E, np.array([1.0, -1.0, 0.5]))
    rep = scan_self_focal(E, x, t_max=10.0, num_directions=12)
    assert rep.verdict == VERDICT_EVIDENCE
    assert rep.num_tight == 12
    # radius sqrt(2): period 2 pi sqrt(2)
    assert abs(rep.time_mean - 2.0 * math.pi * math.sqrt(2.0)) < 1e-8
    assert rep.common_return_time is not None


def test_scan_generic_point_not_focal():
    x = project_to_ellipsoid(E4321, np.array([1.0, -0.7, 1.3, 0.4]))
    rep = scan_self_focal(E4321, x, t_max=18.0, num_directions=16)
    assert rep.verdict == VERDICT_NOT
    assert rep.time_spread > 1e-2
    assert rep.common_return_time is None


def test_scan_threads_do_not_change_results():
    u = umbilic_points(E321)[0]
    r1 = scan_self_focal(E321, u, t_max=12.0, num_directions=8, threads=1)
    r2 = scan_self_focal(E321, u, t_max=12.0, num_directions=8, threads=4)
    for a, b in zip(r1.records, r2.records):
        assert a.time == b.time
        assert a.miss == b.miss
    assert r1.verdict == r2.verdict


def test_scan_report_serializes():
    u = umbilic_points(E321)[0]
    rep = scan_self_focal(E321, u, t_max=12.0, num_directions=8)
    doc = rep.to_dict()
    text = json.dumps(doc, sort_keys=True)
    assert "verdict" in doc and doc["verdict"] == VERDICT_EVIDENCE
    assert len(doc["records"]) == 8
    # byte-identical across repeated scans (determinism contract)
    rep2 = scan_self_focal(E321, u, t_max=12.0, num_directions=8)
    assert json.dumps(rep2.to_dict(), sort_keys=True) == text


def test_count_small_deviations():
    u = umbilic_points(E321)[0]
    rep = scan_self_focal(E321, u, t_max=12.0, num_directions=64)
    n_small = count_small_deviations(rep, 0.1)
    assert n_small == 4          # the two axis directions, both signs
    assert count_small_deviations(rep, math.pi + 0.1) == 64


def test_return_map_fixed_directions():
    u = umbilic_points(E321)[0]
    out0, t0, miss0 = return_map(E321, u, 0.0, t_max=12.0)
    assert miss0 < 1e-9
    assert abs(t0 - 8.7377525710) < 1e-6
    assert min(abs(out0), abs(out0 - 2.0 * math.pi)) < 1e-6
    outpi, tpi, misspi = return_map(E321, u, math.pi, t_max=12.0)
    assert misspi < 1e-9
    assert abs(outpi - math.pi) < 1e-6
    # generic angles move
    outg, _, _ = return_map(E321, u, 0.8, t_max=12.0)
    assert abs(outg - 0.8) > 0.05


def test_return_map_derivative_reversibility():
    """The twisted map's slopes at the two fixed directions are mutually
    inverse (time reversal conjugates the map to its inverse)."""
    u = umbilic_points(E321)[0]
    d0 = return_map_derivative(E321, u, 0.0, t_max=12.0)
    dpi = return_map_derivative(E321, u, math.pi, t_max=12.0)
    assert d0 > 1.0 + 0.01
    assert dpi < 1.0 - 0.01
    assert abs(d0 * dpi - 1.0) < 1e-3


def test_return_map_needs_three_axes():
    x = project_to_ellipsoid(E4321, np.array([1.0, 1.0, 1.0, 1.0]))
    with pytest.raises(InvalidInputError):
        return_map(E4321, x, 0.0, t_max=5.0)
