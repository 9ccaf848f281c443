"""Spectral invariants: Lax matrix, Jacobi eigensolver, Phi/Q forms,
confocal tangency, ellipsoidal coordinates, and eigenvalue variations."""

import math
import warnings

import numpy as np
import pytest

from ellipsax import (
    DegeneracyAnomalyWarning,
    Ellipsoid,
    InvalidInputError,
    PoleOfQError,
    admissible_variation_basis,
    b_matrix,
    confocal_tangency,
    contact_point_and_normal,
    eigenvalue_variation,
    ellipsoidal_coordinates,
    fd_eigenvalue_variation,
    integrate_geodesic,
    jacobi_eigh,
    lax_matrix,
    lax_residual,
    lax_spectrum,
    moment_map,
    nonzero_eigenvalues_along,
    phi_identity_residual,
    phi_z,
    project_to_ellipsoid,
    q_form,
    random_unit_tangent,
    spectrum_of,
    tangent_frame,
    umbilic_points,
    variation_jacobian,
)

E321 = Ellipsoid(np.array([3.0, 2.0, 1.0]))
E4321 = Ellipsoid(np.array([4.0, 3.0, 2.0, 1.0]))


def _sample(E, rng):
    x = project_to_ellipsoid(E, rng.standard_normal(E.n))
    xi = random_unit_tangent(E, x, rng=rng)
    return x, xi


# ---------------------------------------------------------------------------
# eigensolver
# ---------------------------------------------------------------------------

def test_jacobi_against_lapack():
    """Cross-check the cyclic Jacobi solver against numpy.linalg.eigh."""
    rng = np.random.default_rng(100)
    for n in (3, 4, 5, 8):
        for _ in range(10):
            M = rng.standard_normal((n, n))
            M = 0.5 * (M + M.T)
            vals, vecs = jacobi_eigh(M)
            ref_vals, ref_vecs = np.linalg.eigh(M)
            scale = max(1.0, np.max(np.abs(ref_vals)))
            assert np.max(np.abs(vals - ref_vals)) < 1e-12 * scale
            # eigenvectors agree up to sign
            overlaps = np.abs(np.einsum("ij,ij->j", vecs, ref_vecs))
            assert np.min(overlaps) > 1.0 - 1e-10
            # residual check independent of any reference
            assert np.max(np.abs(M @ vecs - vecs * vals)) < 1e-12 * scale


def test_jacobi_diagonal_and_signs():
    vals, vecs = jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(vals, [1.0, 2.0, 3.0])
    # deterministic sign convention: largest component positive
    assert np.all(vecs[np.argmax(np.abs(vecs), axis=0),
                       np.arange(3)] > 0.0)


def test_jacobi_rejects_asymmetric():
    with pytest.raises(InvalidInputError):
        jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


# ---------------------------------------------------------------------------
# Lax matrix
# ---------------------------------------------------------------------------

def test_lax_matrix_symmetric_with_expected_kernel():
    rng = np.random.default_rng(101)
    for _ in range(20):
        x, xi = _sample(E4321, rng)
        L = lax_matrix(E4321, x, xi)
        assert np.allclose(L, L.T, atol=1e-14)
        assert np.max(np.abs(L @ xi)) < 1e-12
        nvec = E4321.ainv * x
        assert np.max(np.abs(L @ nvec)) < 1e-12


def test_spectrum_keeps_n_minus_2_eigenvalues():
    rng = np.random.default_rng(102)
    x, xi = _sample(E4321, rng)
    sp = lax_spectrum(E4321, x, xi)
    assert sp.nonzero.shape == (2,)
    assert sp.kernel_dim == 2
    assert sp.nonzero[0] <= sp.nonzero[1]
    assert sp.anomaly is False


def test_spectrum_anomaly_warning():
    M = np.diag([0.0, 0.0, 0.0, 5.0])
    with pytest.warns(DegeneracyAnomalyWarning):
        sp = spectrum_of(M)
    assert sp.anomaly is True


def test_conjugation_equivariance():
    """L(gx, g xi) = g L(x, xi) g^T for an isometry g of the ellipsoid."""
    E = Ellipsoid(np.array([3.0, 2.0, 2.0, 1.0]))
    rng = np.random.default_rng(103)
    x, xi = _sample(E, rng)
    phi = 0.83
    g = np.eye(4)
    g[1, 1] = math.cos(phi)
    g[1, 2] = -math.sin(phi)
    g[2, 1] = math.sin(phi)
    g[2, 2] = math.cos(phi)
    L = lax_matrix(E, x, xi)
    Lg = lax_matrix(E, g @ x, g @ xi)
    assert np.max(np.abs(Lg - g @ L @ g.T)) < 1e-13


def test_b_matrix_entries_verbatim():
    rng = np.random.default_rng(104)
    x = rng.standard_normal(4)
    y = rng.standard_normal(4)
    B = b_matrix(E4321, x, y)
    a = E4321.alphas
    for i in range(4):
        for j in range(4):
            expected = -(x[i] * y[j] - x[j] * y[i]) / (a[i] * a[j])
            assert math.isclose(B[i, j], expected, abs_tol=1e-15)
    assert np.allclose(B, -B.T, atol=1e-15)


# ---------------------------------------------------------------------------
# invariance along the flow
# ---------------------------------------------------------------------------

def test_eigenvalues_frozen_along_geodesics():
    rng = np.random.default_rng(105)
    times = np.linspace(0.0, 15.0, 16)
    for _ in range(5):
        x, xi = _sample(E4321, rng)
        traj = integrate_geodesic(E4321, x, xi, 15.0)
        lam = nonzero_eigenvalues_along(E4321, traj, times)
        drift = np.max(np.abs(lam - lam[0]) / np.abs(lam[0]))
        assert drift < 1e-9


def test_lax_equation_needs_moser_momentum():
    """dL/dt = [B, L] closes with the time-normalized second argument;
    the plain unit-speed pairing leaves an O(1) defect."""
    rng = np.random.default_rng(106)
    x, xi = _sample(E4321, rng)
    traj = integrate_geodesic(E4321, x, xi, 4.0)
    assert lax_residual(E4321, traj, 2.0) < 1e-6

    h = 1e-5
    t = 2.0

    def L_at(tt):
        s = traj.state(tt)
        return lax_matrix(E4321, s[:4], s[4:])

    dL = (L_at(t + h) - L_at(t - h)) / (2.0 * h)
    s = traj.state(t)
    xt, vt = s[:4], s[4:]
    B_plain = b_matrix(E4321, xt, vt)
    Lt = L_at(t)
    defect = np.max(np.abs(dL - (B_plain @ Lt - Lt @ B_plain)))
    assert defect > 1e-2


def test_moment_map_at_umbilic_is_middle_alpha():
    u = umbilic_points(E321)[0]
    fr = tangent_frame(E321, u)
    for th in (0.0, 0.9, 2.4, 4.0):
        xi = math.cos(th) * fr[0] + math.sin(th) * fr[1]
        m = moment_map(E321, u, xi)
        assert m.shape == (1,)
        assert abs(m[0] - 2.0) < 1e-12


def test_moment_map_varies_at_generic_point():
    x = project_to_ellipsoid(E321, np.array([1.0, 1.0, 1.0]))
    rng = np.random.default_rng(107)
    vals = [moment_map(E321, x, random_unit_tangent(E321, x, rng=rng))[0]
            for _ in range(32)]
    assert max(vals) - min(vals) > 1e-3


# ---------------------------------------------------------------------------
# Q / Phi apparatus
# ---------------------------------------------------------------------------

def test_q_form_hand_value():
    # Q_0(x, x) = <(0 - A)^-1 x, x> = -|x|_A^2 = -1 on the surface
    x = np.array([math.sqrt(3.0), 0.0, 0.0])
    assert math.isclose(q_form(E321, 0.0, x), -1.0, abs_tol=1e-15)
    with pytest.raises(PoleOfQError):
        q_form(E321, 2.0, x)


def test_phi_identity_random():
    rng = np.random.default_rng(108)
    for _ in range(300):
        x, xi = _sample(E4321, rng)
        z = rng.uniform(-2.0, 6.0)
        if abs(z) < 0.05 or np.min(np.abs(E4321.alphas - z)) < 0.05:
            continue
        res = phi_identity_residual(E4321, x, xi, z)
        assert res < 1e-10 * max(1.0, abs(phi_z(E4321, x, xi, z)))


def test_tangency_discriminant_equals_minus_phi():
    """b^2 - ac = -Phi_z for every regular z, not only at eigenvalues."""
    rng = np.random.default_rng(109)
    for _ in range(50):
        x, xi = _sample(E4321, rng)
        z = rng.uniform(-2.0, 6.0)
        if np.min(np.abs(E4321.alphas - z)) < 0.05:
            continue
        td = confocal_tangency(E4321, x, xi, z)
        disc = td.b ** 2 - td.a * td.c
        assert abs(disc + phi_z(E4321, x, xi, z)) < 1e-10 * td.scale


def test_tangency_and_normal_alignment():
    rng = np.random.default_rng(110)
    for _ in range(30):
        x, xi = _sample(E4321, rng)
        sp = lax_spectrum(E4321, x, xi)
        for k, lam in enumerate(sp.nonzero):
            td = confocal_tangency(E4321, x, xi, float(lam))
            assert abs(td.residual) < 1e-9 * td.scale
            contact, nrm = contact_point_and_normal(E4321, x, xi, float(lam))
            # contact point lies on the confocal quadric z = lam
            q = q_form(E4321, float(lam), contact)
            assert abs(1.0 + q) < 1e-9
            assert abs(abs(nrm @ sp.nonzero_vectors[:, k]) - 1.0) < 1e-9


# ---------------------------------------------------------------------------
# ellipsoidal coordinates
# ---------------------------------------------------------------------------

def test_ellipsoidal_coordinates_hand_values():
    x = np.array([math.sqrt(3.0), 0.0, 0.0])
    assert np.allclose(ellipsoidal_coordinates(E321, x), [1.0, 2.0],
                       atol=1e-13)
    u = umbilic_points(E321)[0]
    assert np.allclose(ellipsoidal_coordinates(E321, u), [1.5, 2.0],
                       atol=1e-13)


def test_interlacing_random():
    rng = np.random.default_rng(111)
    asort = np.sort(E4321.alphas)
    for _ in range(200):
        x = project_to_ellipsoid(E4321, rng.standard_normal(4))
        z = ellipsoidal_coordinates(E4321, x)
        assert np.all(z[:-1] <= z[1:])
        assert np.all(asort[:-1] - 1e-10 <= z)
        assert np.all(z <= asort[1:] + 1e-10)


def test_coordinates_on_permuted_axes():
    """User axis order does not affect the coordinate values."""
    Eperm = Ellipsoid(np.array([1.0, 3.0, 2.0]))
    rng = np.random.default_rng(112)
    for _ in range(10):
        x = project_to_ellipsoid(E321, rng.standard_normal(3))
        xp = x[[2, 0, 1]]
        assert np.allclose(ellipsoidal_coordinates(E321, x),
                           ellipsoidal_coordinates(Eperm, xp), atol=1e-12)


# ---------------------------------------------------------------------------
# first variation
# ---------------------------------------------------------------------------

def test_admissible_basis_properties():
    rng = np.random.default_rng(113)
    x, xi = _sample(E4321, rng)
    basis = admissible_variation_basis(E4321, x, xi)
    assert basis.shape == (2 * 4 - 3, 2 * 4)
    assert np.allclose(basis @ basis.T, np.eye(5), atol=1e-13)
    ainv = E4321.ainv
    for row in basis:
        xd, xid = row[:4], row[4:]
        assert abs(np.dot(ainv * x, xd)) < 1e-13
        assert abs(np.dot(ainv * x, xid) + np.dot(ainv * xd, xi)) < 1e-13
        assert abs(np.dot(xi, xid)) < 1e-13


def test_variation_matches_finite_differences():
    rng = np.random.default_rng(114)
    for _ in range(30):
        x, xi = _sample(E4321, rng)
        basis = admissible_variation_basis(E4321, x, xi)
        c = rng.standard_normal(basis.shape[0])
        c /= np.linalg.norm(c)
        row = c @ basis
        xd, xid = row[:4], row[4:]
        a = eigenvalue_variation(E4321, x, xi, xd, xid)
        f = fd_eigenvalue_variation(E4321, x, xi, xd, xid, step=1e-5)
        assert np.linalg.norm(a - f) < 1e-6 * np.linalg.norm(f)


def test_vertical_variation_reduced_formula():
    """With xdot = 0 the variation reduces to
    lambda_dot = -2 <xidot, phi> <(A - x x^T) phi, xi>."""
    rng = np.random.default_rng(115)
    x, xi = _sample(E4321, rng)
    # admissible vertical variation: orthogonal to both A^-1 x and xi
    v = rng.standard_normal(4)
    nvec = E4321.ainv * x
    basis = np.linalg.svd(np.vstack([nvec, xi]))[2][2:]
    xid = basis.T @ (basis @ v)
    sp = lax_spectrum(E4321, x, xi)
    got = eigenvalue_variation(E4321, x, xi, np.zeros(4), xid)
    A = np.diag(E4321.alphas)
    for k in range(2):
        phi = sp.nonzero_vectors[:, k]
        expected = -2.0 * np.dot(xid, phi) * np.dot(
            (A - np.outer(x, x)) @ phi, xi)
        assert abs(got[k] - expected) < 1e-12


def test_variation_jacobian_full_rank():
    rng = np.random.default_rng(116)
    for _ in range(10):
        x, xi = _sample(E4321, rng)
        J = variation_jacobian(E4321, x, xi)
        assert J.shape == (2, 5)
        sv = np.linalg.svd(J, compute_uv=False)
        assert sv[-1] > 1e-6
        Jfd = variation_jacobian(E4321, x, xi, method="fd")
        assert np.max(np.abs(J - Jfd)) < 1e-6
