"""Lax matrix, its spectrum, confocal quadrics and first variations.

For a unit cotangent point (x, xi) of the ellipsoid, the Lax matrix is

    L(x, xi) = P_xi (A - x (x)) P_xi,     P_xi = I - xi (xi),

whose kernel on-shell is exactly span{xi, A^{-1}x} and whose n-2 nonzero
eigenvalues are invariant under the geodesic flow.  The nonzero
eigenvalues are the parameters z at which the line x + t*xi is tangent to
the confocal quadric  sum_i p_i^2/(alpha_i - z) = 1, and the associated
eigenvectors are the quadric normals at the contact points.

Conventions fixed here once (and verified by the identity and tangency
tests):

* Q_z(a, b) = <(z - A)^{-1} a, b>, so the confocal quadric is the level
  set 1 + Q_z(x) = 0.
* Phi_z(x, xi) = (|xi|^2 / z) det(L - z) / det(A - z); with the two
  kernel eigenvalues factored out analytically this is the spectral
  product ``PHI_PRODUCT_SIGN * |xi|^2 * z * prod(lam_j - z) / prod(alpha_i - z)``
  and satisfies  Phi_z = Q_z(xi)(1 + Q_z(x)) - Q_z(x, xi)^2  exactly.
* The Lax equation holds in the flow's own (unit-speed) time with the
  rescaled momentum w = xi / |A^{-1}x|^2:   dL/dt = [B(x, w), L].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneracyAnomalyWarning,
    InvalidInputError,
    MultiplicityWarning,
    NoContactError,
    NumericalFailureError,
    PoleOfQError,
)
from .geometry import Ellipsoid, project_to_ellipsoid, unit_normal

__all__ = [
    "LaxSpectrum",
    "PHI_PRODUCT_SIGN",
    "admissible_variation_basis",
    "b_matrix",
    "confocal_tangency",
    "contact_point_and_normal",
    "eigenvalue_variation",
    "ellipsoidal_coordinates",
    "fd_eigenvalue_variation",
    "jacobi_eigh",
    "lax_matrix",
    "lax_residual",
    "lax_spectrum",
    "moment_map",
    "phi_identity_residual",
    "phi_z",
    "q_form",
    "spectrum_of",
    "variation_jacobian",
]

#: sign of the spectral product form of Phi_z, fixed so that
#: Phi_z = Q_z(xi)(1 + Q_z(x)) - Q_z(x, xi)^2 holds identically (the
#: tangency discriminant is then exactly -Phi_z).
PHI_PRODUCT_SIGN = +1.0

#: relative tolerance classifying Lax eigenvalues as kernel
KERNEL_TOL = 1e-10

#: relative gap below which nonzero eigenvalues count as clustered
CLUSTER_TOL = 1e-8


def lax_matrix(E: Ellipsoid, x, xi) -> np.ndarray:
    """L(x, xi) = P_xi (A - x (x) x) P_xi with xi normalized (degree 0)."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    nrm = np.linalg.norm(xi)
    if nrm == 0.0:
        raise InvalidInputError("xi must be nonzero")
    u = xi / nrm
    M = np.diag(E.alphas) - np.outer(x, x)
    Mu = M @ u
    # P M P expanded to avoid building the projector
    L = M - np.outer(u, Mu) - np.outer(Mu, u) + (u @ Mu) * np.outer(u, u)
    return 0.5 * (L + L.T)


def b_matrix(E: Ellipsoid, x, y) -> np.ndarray:
    """Moser's antisymmetric B(x,y) = -(alpha_i^-1 alpha_j^-1 (x_i y_j - x_j y_i))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u = E.ainv * x
    w = E.ainv * y
    return np.outer(w, u) - np.outer(u, w)


def jacobi_eigh(M, tol: float = 1e-13, max_sweeps: int = 64):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns (w, V) with eigenvalues ascending and eigenvectors in the
    columns of V.  Sweeps run until the off-diagonal Frobenius norm drops
    below ``tol * max(1, ||M||_F)``.  Chosen over LAPACK for this package
    because the matrices are tiny and the rotations give eigenvectors
    orthonormal to machine precision.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError("need a square matrix")
    n = A.shape[0]
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(A).max()))):
        raise InvalidInputError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    if n == 1:
        return A[0, :1].copy(), V
    norm_f = float(np.linalg.norm(A))
    thresh = tol * max(1.0, norm_f)
    for _sweep in range(max_sweeps):
        off = float(np.linalg.norm(A - np.diag(np.diag(A))))
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-3 * thresh / (n * n):
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J  (columns then rows), V <- V J
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.5 * (A[p, q] + A[q, p])
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        raise NumericalFailureError("Jacobi sweeps did not converge")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    V = V[:, order]
    # deterministic sign: largest-magnitude component of each vector positive
    for j in range(n):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return w, V


@dataclass(frozen=True)
class LaxSpectrum:
    """Eigendecomposition of a Lax matrix with kernel bookkeeping.

    ``eigenvalues`` ascending with ``vectors`` in matching columns;
    ``nonzero`` are the n-2 eigenvalues of largest magnitude, ascending;
    ``nonzero_vectors`` the matching eigenvectors (columns).  ``anomaly``
    is set when the kernel dimension differs from 2 (degeneracy anomaly,
    reported but not fatal).
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    kernel_tol: float
    kernel_dim: int
    nonzero: np.ndarray
    nonzero_vectors: np.ndarray
    anomaly: bool


def spectrum_of(L: np.ndarray, kernel_tol: float | None = None,
                warn: bool = True) -> LaxSpectrum:
    """Classified spectrum of a (symmetric) Lax matrix."""
    w, V = jacobi_eigh(L)
    n = w.size
    norm_f = float(np.linalg.norm(L))
    ktol = KERNEL_TOL * norm_f if kernel_tol is None else kernel_tol
    kernel_dim = int(np.sum(np.abs(w) < ktol))
    # the n-2 largest-magnitude eigenvalues, kept in ascending order
    by_mag = np.argsort(np.abs(w), kind="stable")
    keep = np.sort(by_mag[2:]) if n >= 2 else np.array([], dtype=int)
    anomaly = kernel_dim != 2
    if anomaly and warn:
        warnings.warn(
            f"Lax kernel dimension {kernel_dim} != 2 (|lambda| < {ktol:.2e})",
            DegeneracyAnomalyWarning, stacklevel=2)
    return LaxSpectrum(
        eigenvalues=w, vectors=V, kernel_tol=ktol, kernel_dim=kernel_dim,
        nonzero=w[keep], nonzero_vectors=V[:, keep], anomaly=anomaly)


def lax_spectrum(E: Ellipsoid, x, xi, warn: bool = True) -> LaxSpectrum:
    return spectrum_of(lax_matrix(E, x, xi), warn=warn)


def _elementary_symmetric(vals: np.ndarray) -> np.ndarray:
    """e_1..e_k of the k values (e_0 = 1 dropped)."""
    e = np.zeros(vals.size + 1)
    e[0] = 1.0
    for v in vals:
        e[1:] = e[1:] + v * e[:-1]
    return e[1:]


def moment_map(E: Ellipsoid, x, xi) -> np.ndarray:
    """Eigenvalue moment map: elementary symmetric functions e_1..e_{n-2}
    of the nonzero Lax eigenvalues (flow invariants)."""
    return _elementary_symmetric(lax_spectrum(E, x, xi, warn=False).nonzero)


# ---------------------------------------------------------------------------
# confocal quadrics
# ---------------------------------------------------------------------------

def q_form(E: Ellipsoid, z: float, a, b=None) -> float:
    """Q_z(a, b) = <(z - A)^{-1} a, b>  (b defaults to a)."""
    a = np.asarray(a, dtype=float)
    b = a if b is None else np.asarray(b, dtype=float)
    d = z - E.alphas
    if np.min(np.abs(d)) < 1e-12 * max(1.0, abs(z), float(E.alphas.max())):
        raise PoleOfQError(f"z={z} is (numerically) a squared semi-axis")
    return float((a / d) @ b)


def _tangency_quadratic(E: Ellipsoid, x, xi, lam: float):
    """Coefficients of q(t) = <(A-lam)^{-1}(x+t xi), x+t xi> - 1 = a t^2 + 2 b t + c."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    d = E.alphas - lam
    if np.min(np.abs(d)) < 1e-12 * max(1.0, abs(lam), float(E.alphas.max())):
        raise PoleOfQError(f"lambda={lam} is (numerically) a squared semi-axis")
    a = float((xi / d) @ xi)
    b = float((x / d) @ xi)
    c = float((x / d) @ x) - 1.0
    return a, b, c


@dataclass(frozen=True)
class TangencyData:
    """Discriminant data of the line x + t*xi against the quadric at lam."""

    lam: float
    a: float
    b: float
    c: float

    @property
    def residual(self) -> float:
        """b^2 - a c; zero exactly at tangency (equals -Phi_lam for unit xi)."""
        return self.b * self.b - self.a * self.c

    @property
    def scale(self) -> float:
        return max(1.0, self.b * self.b, abs(self.a * self.c))


def confocal_tangency(E: Ellipsoid, x, xi, lam: float) -> TangencyData:
    a, b, c = _tangency_quadratic(E, x, xi, lam)
    return TangencyData(float(lam), a, b, c)


def contact_point_and_normal(E: Ellipsoid, x, xi, lam: float,
                             eigenvector=None, align_tol: float = 1e-7):
    """Contact point of the tangent line with the quadric at lam, and the
    quadric's unit normal there.

    When ``eigenvector`` (the lam-eigenvector of L) is supplied, the
    normal is checked to be parallel to it within ``align_tol``.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    td = confocal_tangency(E, x, xi, lam)
    if abs(td.a) < 1e-12 * td.scale:
        raise NoContactError("line is asymptotic to the quadric (a ~ 0)")
    tstar = -td.b / td.a
    p = x + tstar * xi
    grad = p / (E.alphas - lam)
    nrm = np.linalg.norm(grad)
    if nrm == 0.0:
        raise NoContactError("degenerate contact gradient")
    normal = grad / nrm
    if eigenvector is not None:
        phi = np.asarray(eigenvector, dtype=float)
        phi = phi / np.linalg.norm(phi)
        mis = 1.0 - abs(float(normal @ phi))
        if mis > align_tol:
            raise NumericalFailureError(
                f"contact normal misaligned with eigenvector: 1-|cos| = {mis:.3e}")
    return p, normal


def phi_z(E: Ellipsoid, x, xi, z: float) -> float:
    """Phi_z(x, xi) = (|xi|^2/z) det(L - z)/det(A - z), via the nonzero
    spectrum (the kernel contributes the z^2 that cancels the 1/z)."""
    xi = np.asarray(xi, dtype=float)
    d = E.alphas - z
    if np.min(np.abs(d)) < 1e-12 * max(1.0, abs(z), float(E.alphas.max())):
        raise PoleOfQError(f"z={z} is (numerically) a squared semi-axis")
    lam = lax_spectrum(E, x, xi, warn=False).nonzero
    num = float(np.prod(lam - z))
    den = float(np.prod(d))
    return PHI_PRODUCT_SIGN * float(xi @ xi) * z * num / den


def phi_identity_residual(E: Ellipsoid, x, xi, z: float) -> float:
    """|Phi_z - (Q_z(xi)(1 + Q_z(x)) - Q_z(x,xi)^2)|, the Moser identity."""
    lhs = phi_z(E, x, xi, z)
    rhs = (q_form(E, z, xi) * (1.0 + q_form(E, z, x))
           - q_form(E, z, x, xi) ** 2)
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# ellipsoidal (generalized Jacobi) coordinates
# ---------------------------------------------------------------------------

def ellipsoidal_coordinates(E: Ellipsoid, x, root_tol: float = 1e-14) -> np.ndarray:
    """The n-1 roots of R(z; x) = sum_j x_j^2 prod_{i != j} (alpha_i - z),
    ascending.  They interlace the sorted alpha_j; a root equals an alpha
    exactly when the corresponding coordinate (or axis gap) degenerates.
    """
    from scipy.optimize import brentq

    x = np.asarray(x, dtype=float)
    if x.shape != (E.n,):
        raise InvalidInputError(f"x must have length {E.n}")
    if not np.any(x != 0.0):
        raise InvalidInputError("x must be nonzero")

    vals, counts = np.unique(E.alphas, return_counts=True)
    weights = np.array([float(np.sum(x[E.alphas == v] ** 2)) for v in vals])

    roots: list[float] = []
    # repeated axes contribute their value with multiplicity c-1
    for v, c in zip(vals, counts):
        roots.extend([float(v)] * (int(c) - 1))
    # axes with zero weight are exact roots of the simple-support factor
    support = weights > 0.0
    roots.extend(float(v) for v in vals[~support])

    bsup = vals[support]
    wsup = weights[support]

    def T(z):
        return float(np.sum(wsup / (bsup - z)))

    for lo, hi in zip(bsup[:-1], bsup[1:]):
        # T runs from -inf to +inf on (lo, hi); shrink eps until bracketed
        eps = 1e-8 * (hi - lo)
        for _ in range(60):
            if T(lo + eps) < 0.0 < T(hi - eps):
                break
            eps *= 0.25
        else:
            # the root is pinned against an endpoint to machine precision
            roots.append(float(lo if T(0.5 * (lo + hi)) > 0 else hi))
            continue
        z = brentq(T, lo + eps, hi - eps, xtol=root_tol,
                   rtol=4.0 * np.finfo(float).eps)
        roots.append(float(z))

    out = np.sort(np.array(roots))
    if out.size != E.n - 1:  # pragma: no cover - structural guarantee
        raise NumericalFailureError("ellipsoidal coordinate count mismatch")
    return out


# ---------------------------------------------------------------------------
# first variation of the Lax eigenvalues
# ---------------------------------------------------------------------------

def _check_admissible(E, x, xi, xdot, xidot, tol):
    g1 = abs(float((E.ainv * x) @ xdot))
    g2 = abs(float((E.ainv * x) @ xidot) + float((E.ainv * xdot) @ xi))
    g3 = abs(float(xi @ xidot))
    bound = tol * max(1.0, float(np.linalg.norm(xdot)), float(np.linalg.norm(xidot)))
    if max(g1, g2, g3) > bound:
        raise InvalidInputError(
            f"variation not admissible: residuals ({g1:.2e}, {g2:.2e}, {g3:.2e})")


def eigenvalue_variation(E: Ellipsoid, x, xi, xdot, xidot,
                         spectrum: LaxSpectrum | None = None,
                         tol_admissible: float = 1e-8) -> np.ndarray:
    """First variation of the nonzero Lax eigenvalues along an admissible
    variation (xdot, xidot) of the unit cotangent point (x, xi):

        lam' = -2 ( <xi', phi> <(A - x(x)x) phi, xi> + <x', phi> <x, phi> )

    per unit eigenvector phi.  Clustered eigenvalues (relative gap below
    CLUSTER_TOL) get the subspace-averaged variation and a
    MultiplicityWarning.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    xidot = np.asarray(xidot, dtype=float)
    _check_admissible(E, x, xi, xdot, xidot, tol_admissible)
    sp = spectrum or lax_spectrum(E, x, xi, warn=False)
    M = np.diag(E.alphas) - np.outer(x, x)
    out = np.empty(sp.nonzero.size)
    for j in range(sp.nonzero.size):
        phi = sp.nonzero_vectors[:, j]
        out[j] = -2.0 * (float(xidot @ phi) * float((M @ phi) @ xi)
                         + float(xdot @ phi) * float(x @ phi))
    # subspace averaging over clusters
    lam = sp.nonzero
    scale = max(1.0, float(np.max(np.abs(lam))) if lam.size else 1.0)
    j = 0
    while j < lam.size - 1:
        k = j
        while k + 1 < lam.size and abs(lam[k + 1] - lam[k]) < CLUSTER_TOL * scale:
            k += 1
        if k > j:
            avg = float(np.mean(out[j:k + 1]))
            out[j:k + 1] = avg
            warnings.warn(
                f"eigenvalues {lam[j:k + 1]} clustered; variation averaged",
                MultiplicityWarning, stacklevel=2)
        j = k + 1
    return out


def admissible_variation_basis(E: Ellipsoid, x, xi) -> np.ndarray:
    """Orthonormal basis (rows, length 2n) of the admissible variations

        <A^{-1}x, x'> = 0,  <A^{-1}x, xi'> + <A^{-1}x', xi> = 0,  <xi, xi'> = 0,

    the tangent space of S* E at (x, xi); dimension 2n - 3.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    n = E.n
    M = np.zeros((3, 2 * n))
    M[0, :n] = E.ainv * x
    M[1, :n] = E.ainv * xi
    M[1, n:] = E.ainv * x
    M[2, n:] = xi
    _u, s, vt = np.linalg.svd(M)
    null = vt[3:]
    # deterministic signs
    for row in null:
        i = int(np.argmax(np.abs(row)))
        if row[i] < 0:
            row *= -1.0
    return null


def _retraction(E: Ellipsoid, x, xi, xdot, xidot, s: float):
    """Curve on S*E through (x, xi) with derivative (xdot, xidot) at s=0."""
    xs = project_to_ellipsoid(E, x + s * xdot)
    nh = unit_normal(E, xs)
    v = (xi + s * xidot)
    v = v - nh * float(nh @ v)
    return xs, v / np.linalg.norm(v)


def fd_eigenvalue_variation(E: Ellipsoid, x, xi, xdot, xidot,
                            step: float = 1e-5,
                            spectrum: LaxSpectrum | None = None) -> np.ndarray:
    """Central-difference derivative of the nonzero eigenvalues along the
    retraction curve, branch-matched to the base eigenvectors by maximal
    overlap (safe under crossings)."""
    sp = spectrum or lax_spectrum(E, x, xi, warn=False)

    def branch(s):
        xs, xis = _retraction(E, x, xi, xdot, xidot, s)
        sps = lax_spectrum(E, xs, xis, warn=False)
        lam = np.empty(sp.nonzero.size)
        for j in range(sp.nonzero.size):
            overlaps = np.abs(sp.nonzero_vectors[:, j] @ sps.nonzero_vectors)
            lam[j] = sps.nonzero[int(np.argmax(overlaps))]
        return lam

    return (branch(step) - branch(-step)) / (2.0 * step)


def variation_jacobian(E: Ellipsoid, x, xi, method: str = "analytic",
                       step: float = 1e-6) -> np.ndarray:
    """(n-2) x (2n-3) Jacobian of the nonzero eigenvalues with respect to
    the admissible variation basis; full rank n-2 at generic points."""
    basis = admissible_variation_basis(E, x, xi)
    sp = lax_spectrum(E, x, xi, warn=False)
    n = E.n
    cols = []
    for row in basis:
        xdot, xidot = row[:n], row[n:]
        if method == "analytic":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", MultiplicityWarning)
                cols.append(eigenvalue_variation(E, x, xi, xdot, xidot,
                                                 spectrum=sp))
        elif method == "fd":
            cols.append(fd_eigenvalue_variation(E, x, xi, xdot, xidot,
                                                step=step, spectrum=sp))
        else:
            raise InvalidInputError(f"unknown method {method!r}")
    return np.array(cols).T


# ---------------------------------------------------------------------------
# along-trajectory checks
# ---------------------------------------------------------------------------

def lax_residual(E: Ellipsoid, traj, t: float, fd_step: float = 1e-5) -> float:
    """Frobenius norm of dL/dt - [B(x, w), L] at time t along a trajectory.

    dL/dt is a central difference with the given step.  The flow is
    unit-speed, so the Lax equation holds with the rescaled momentum
    w = xi / |A^{-1}x|^2 (Moser's time normalization); B is evaluated
    there.
    """
    n = E.n

    def L_at(tt):
        s = traj.state(tt)
        return lax_matrix(E, s[:n], s[n:])

    s0 = traj.state(t)
    x, v = s0[:n], s0[n:]
    xi = v / np.linalg.norm(v)
    w = xi / float((E.ainv * x) @ (E.ainv * x))
    B = b_matrix(E, x, w)
    L0 = lax_matrix(E, x, xi)
    Ldot = (L_at(t + fd_step) - L_at(t - fd_step)) / (2.0 * fd_step)
    return float(np.linalg.norm(Ldot - (B @ L0 - L0 @ B)))


def nonzero_eigenvalues_along(E: Ellipsoid, traj, times) -> np.ndarray:
    """Nonzero Lax eigenvalues (ascending) at each of the given times."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n = E.n
    out = np.empty((times.size, n - 2))
    for i, t in enumerate(times):
        s = traj.state(float(t))
        out[i] = lax_spectrum(E, s[:n], s[n:], warn=False).nonzero
    return out
