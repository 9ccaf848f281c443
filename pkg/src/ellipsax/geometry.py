"""Core geometry of the ellipsoid E_A = {x : <A^{-1}x, x> = 1}.

The ellipsoid is encoded by the squared semi-axes alpha_j (the diagonal of
the positive matrix A), kept in the caller's coordinate order.  A sorted
view together with the sorting permutation and the multiplicity table is
exposed for the routines that care about the axis-degeneracy structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstraintViolationError,
    DegenerateInputError,
    InvalidInputError,
    NumericalFailureError,
    UnsupportedDimensionError,
)

__all__ = [
    "Ellipsoid",
    "PhasePoint",
    "ShapeReport",
    "make_ellipsoid",
    "phase_point",
    "project_to_ellipsoid",
    "project_to_tangent",
    "random_unit_tangent",
    "shape_operator",
    "tangent_frame",
    "unit_normal",
]

#: default tolerance for the on-shell constraint checks
TOL_CONSTRAINT = 1e-9


def _as_vector(v, n=None, name="vector"):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InvalidInputError(f"{name} must have length {n}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class Ellipsoid:
    """Ellipsoid with squared semi-axes ``alphas`` (user coordinate order)."""

    alphas: np.ndarray

    def __post_init__(self):
        arr = _as_vector(self.alphas, name="alphas")
        if arr.size < 3:
            raise UnsupportedDimensionError(
                f"need ambient dimension >= 3, got {arr.size}")
        if np.any(arr <= 0):
            raise InvalidInputError("squared semi-axes must be positive")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "alphas", arr)

    @classmethod
    def from_semi_axes(cls, semi_axes) -> "Ellipsoid":
        a = _as_vector(semi_axes, name="semi_axes")
        return cls(a * a)

    # -- basic views ---------------------------------------------------

    @property
    def n(self) -> int:
        return self.alphas.size

    @property
    def ainv(self) -> np.ndarray:
        return 1.0 / self.alphas

    @property
    def semi_axes(self) -> np.ndarray:
        return np.sqrt(self.alphas)

    @property
    def sort_order(self) -> np.ndarray:
        """Permutation p with ``alphas[p]`` non-decreasing (stable)."""
        return np.argsort(self.alphas, kind="stable")

    @property
    def alphas_sorted(self) -> np.ndarray:
        return self.alphas[self.sort_order]

    @property
    def multiplicities(self) -> tuple[tuple[float, int], ...]:
        """Distinct squared semi-axes with multiplicities, ascending."""
        vals, counts = np.unique(self.alphas, return_counts=True)
        return tuple((float(v), int(c)) for v, c in zip(vals, counts))

    @property
    def is_sphere(self) -> bool:
        return len(self.multiplicities) == 1

    @property
    def geometric_mean_semi_axis(self) -> float:
        return float(np.exp(0.5 * np.mean(np.log(self.alphas))))

    # -- constraint ----------------------------------------------------

    def constraint(self, x) -> float:
        """<A^{-1}x, x> - 1 (zero on the ellipsoid)."""
        x = _as_vector(x, self.n, "x")
        return float((self.ainv * x) @ x - 1.0)

    def __repr__(self):
        return f"Ellipsoid(alphas={self.alphas.tolist()})"


def make_ellipsoid(alphas) -> Ellipsoid:
    """Ellipsoid from squared semi-axes (thin constructor wrapper)."""
    return Ellipsoid(np.asarray(alphas, dtype=float))


@dataclass(frozen=True)
class PhasePoint:
    """Validated unit-cotangent point (x on E, xi unit and tangent at x)."""

    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        for name in ("x", "xi"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def phase_point(E: Ellipsoid, x, xi, tol: float = TOL_CONSTRAINT) -> PhasePoint:
    """Validate (x, xi) against E within ``tol`` and freeze it.

    Checks the three on-shell conditions: x on the ellipsoid, xi unit
    length, and xi tangent (orthogonal to the unnormalized normal A^{-1}x).
    """
    x = _as_vector(x, E.n, "x")
    xi = _as_vector(xi, E.n, "xi")
    c = abs(E.constraint(x))
    if c > tol:
        raise ConstraintViolationError(f"|<A^-1 x, x> - 1| = {c:.3e} > {tol:.1e}")
    s = abs(float(xi @ xi) - 1.0)
    if s > tol:
        raise ConstraintViolationError(f"||xi|^2 - 1| = {s:.3e} > {tol:.1e}")
    t = abs(float((E.ainv * x) @ xi))
    if t > tol * max(1.0, float(np.linalg.norm(E.ainv * x))):
        raise ConstraintViolationError(f"|<A^-1 x, xi>| = {t:.3e} > tolerance")
    return PhasePoint(x, xi)


def unit_normal(E: Ellipsoid, x) -> np.ndarray:
    """Outward unit normal A^{-1}x / |A^{-1}x| at a point of E."""
    x = _as_vector(x, E.n, "x")
    g = E.ainv * x
    nrm = np.linalg.norm(g)
    if nrm == 0.0:
        raise DegenerateInputError("normal undefined at the origin")
    return g / nrm


def project_to_ellipsoid(E: Ellipsoid, y) -> np.ndarray:
    """Radial projection y -> y / sqrt(<A^{-1}y, y>)."""
    y = _as_vector(y, E.n, "y")
    q = float((E.ainv * y) @ y)
    if q <= 0.0:
        raise DegenerateInputError("cannot project the origin to the ellipsoid")
    return y / np.sqrt(q)


def project_to_tangent(E: Ellipsoid, x, v) -> np.ndarray:
    """Orthogonal projection of v onto the tangent space T_x E."""
    v = _as_vector(v, E.n, "v")
    n = unit_normal(E, x)
    return v - n * float(n @ v)


def tangent_frame(E: Ellipsoid, x) -> np.ndarray:
    """Deterministic orthonormal basis of T_x E, rows of shape (n-1, n).

    Built from the Householder reflection that maps the unit normal onto
    the coordinate axis it is most aligned with; at points lying in a
    coordinate hyperplane this yields frame vectors aligned with the
    symmetry (e.g. the out-of-plane coordinate axis itself).
    """
    n = unit_normal(E, x)
    dim = E.n
    a = int(np.argmax(np.abs(n)))
    v = n.copy()
    v[a] -= np.copysign(1.0, n[a])
    H = np.eye(dim) - 2.0 * np.outer(v, v) / float(v @ v)
    rows = [H[:, i] for i in range(dim) if i != a]
    return np.array(rows)


def random_unit_tangent(E: Ellipsoid, x, rng=None, seed=None) -> np.ndarray:
    """Uniform random unit tangent vector at x (seeded and reproducible)."""
    if rng is None:
        rng = np.random.default_rng(seed)
    x = _as_vector(x, E.n, "x")
    n = unit_normal(E, x)
    for _ in range(64):
        v = rng.standard_normal(E.n)
        v -= n * float(n @ v)
        nrm = np.linalg.norm(v)
        if nrm > 1e-12:
            return v / nrm
    raise NumericalFailureError("could not draw a tangent direction")  # pragma: no cover


@dataclass(frozen=True)
class ShapeReport:
    """Second-fundamental-form data of E at a point (outward normal).

    ``matrix`` is the shape operator in the rows of ``frame`` (tangent_frame
    output); ``principal_curvatures`` ascending; ``principal_directions``
    has the associated unit tangent vectors as rows (ambient coordinates);
    ``umbilic_defect`` = kappa_max - kappa_min.
    """

    point: np.ndarray
    frame: np.ndarray
    matrix: np.ndarray
    principal_curvatures: np.ndarray
    principal_directions: np.ndarray
    umbilic_defect: float


def shape_operator(E: Ellipsoid, x) -> ShapeReport:
    """Shape operator of E at x with respect to the outward unit normal.

    With the ellipsoid as a level set of f(x) = <A^{-1}x, x>, the second
    fundamental form on tangent vectors is II(v, w) = <A^{-1}v, w>/|A^{-1}x|;
    the unit sphere therefore gets principal curvatures +1.
    """
    from .lax import jacobi_eigh  # local import: geometry stays light

    x = _as_vector(x, E.n, "x")
    fr = tangent_frame(E, x)
    scale = 1.0 / np.linalg.norm(E.ainv * x)
    M = scale * (fr * E.ainv) @ fr.T
    M = 0.5 * (M + M.T)
    kappa, V = jacobi_eigh(M)
    directions = V.T @ fr
    return ShapeReport(
        point=x.copy(),
        frame=fr,
        matrix=M,
        principal_curvatures=kappa,
        principal_directions=directions,
        umbilic_defect=float(kappa[-1] - kappa[0]),
    )
