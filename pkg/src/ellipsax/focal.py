"""Self-focal point detection by geodesic return scans.

A point x is *self-focal with common return time T* when every unit-speed
geodesic leaving x passes through x again at the same time T.  The scan
integrates a grid of directions, finds each trajectory's close approaches
to the start point, and classifies the point from the spread of the
candidate return times:

* ``self-focal-evidence``  -- every direction re-enters the return radius
  and the relative spread of the return times is below ``focal_tol``;
* ``not-self-focal``       -- the relative spread of the closest-approach
  times exceeds ``separation_tol``;
* ``inconclusive``         -- anything in between.

Each direction's candidate is its first approach inside the return
radius when one exists, and otherwise its overall closest approach.

On a triaxial ellipsoid the four umbilic points are the classical
examples; with a repeated axis, points on the symmetry-reduced umbilic
locus inherit the property.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidInputError,
    InvalidIsometryError,
    NoUmbilicFoundError,
    UnsupportedDimensionError,
)
from .flow import (
    IntegratorOptions,
    closest_approaches,
    default_return_radius,
    integrate_geodesic,
)
from .geometry import Ellipsoid, shape_operator, tangent_frame

__all__ = [
    "DirectionReturn",
    "SelfFocalReport",
    "SliceEmbedding",
    "VERDICT_EVIDENCE",
    "VERDICT_INCONCLUSIVE",
    "VERDICT_NOT",
    "count_small_deviations",
    "direction_grid",
    "embed_slice",
    "return_map",
    "return_map_derivative",
    "scan_self_focal",
    "special_focal_point",
    "transport_directions",
    "umbilic_defect",
    "umbilic_points",
    "validate_isometry",
]

VERDICT_EVIDENCE = "self-focal-evidence"
VERDICT_NOT = "not-self-focal"
VERDICT_INCONCLUSIVE = "inconclusive"

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


# ---------------------------------------------------------------------------
# umbilic points
# ---------------------------------------------------------------------------

def umbilic_points(E: Ellipsoid) -> np.ndarray:
    """The four umbilic points of a triaxial ellipsoid (rows, user axis
    order).

    With semi-axes squared a1 > a2 > a3 the umbilics sit in the plane of
    the largest and smallest axes at

        u1 = sqrt(a1 (a1 - a2) / (a1 - a3)),   u2 = 0,
        u3 = sqrt(a3 (a2 - a3) / (a1 - a3)),

    where the two principal curvatures coincide.  Raises
    NoUmbilicFoundError unless n == 3 with distinct axes.
    """
    if E.n != 3:
        raise NoUmbilicFoundError(
            f"umbilic points are computed for n=3 only (got n={E.n})")
    order = np.argsort(-E.alphas, kind="stable")
    a1, a2, a3 = E.alphas[order]
    if not (a1 > a2 > a3):
        raise NoUmbilicFoundError("umbilic points need three distinct axes")
    u1 = math.sqrt(a1 * (a1 - a2) / (a1 - a3))
    u3 = math.sqrt(a3 * (a2 - a3) / (a1 - a3))
    pts = np.empty((4, 3))
    for k, (s1, s3) in enumerate(((1, 1), (1, -1), (-1, 1), (-1, -1))):
        sorted_pt = np.array([s1 * u1, 0.0, s3 * u3])
        pt = np.empty(3)
        pt[order] = sorted_pt
        pts[k] = pt
    return pts


def umbilic_defect(E: Ellipsoid, x) -> float:
    """Spread (max - min) of the principal curvatures at x; zero exactly
    at umbilic points."""
    return shape_operator(E, x).umbilic_defect


# ---------------------------------------------------------------------------
# coordinate-slice embeddings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SliceEmbedding:
    """A coordinate sub-ellipsoid {x_i = 0 for i not in indices} of E.

    The slice is totally geodesic: geodesics of the sub-ellipsoid, pushed
    forward with ``point``/``tangent``, are geodesics of the ambient one.
    """

    ambient: Ellipsoid
    indices: tuple

    @property
    def sub(self) -> Ellipsoid:
        return Ellipsoid(self.ambient.alphas[list(self.indices)])

    def point(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        x = np.zeros(self.ambient.n)
        x[list(self.indices)] = y
        return x

    tangent = point  # linear embedding: same action on vectors

    def restrict(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float)[list(self.indices)]


def embed_slice(E: Ellipsoid, indices) -> SliceEmbedding:
    """Embedding handle for the coordinate slice spanned by ``indices``."""
    idx = tuple(int(i) for i in indices)
    if len(set(idx)) != len(idx):
        raise InvalidInputError("slice indices must be distinct")
    if any(i < 0 or i >= E.n for i in idx):
        raise InvalidInputError(f"slice indices must lie in [0, {E.n})")
    if len(idx) < 3:
        raise UnsupportedDimensionError("slice needs at least 3 coordinates")
    return SliceEmbedding(E, idx)


def special_focal_point(E: Ellipsoid) -> np.ndarray:
    """The distinguished point (u_1, 0, ..., 0, u_n) of an ellipsoid whose
    middle squared semi-axis is repeated (multiplicity pattern 1, n-2, 1
    in descending axis order).

    It is the umbilic of the three-distinct-axis cross section, lifted
    with zero middle block, and every geodesic from it returns to it at a
    common time.  Coordinates are returned in user axis order.
    """
    from .errors import InvalidMultiplicitiesError

    mult = E.multiplicities          # ascending distinct values
    if len(mult) != 3 or mult[0][1] != 1 or mult[2][1] != 1 \
            or mult[1][1] != E.n - 2:
        raise InvalidMultiplicitiesError(
            "need exactly three distinct squared semi-axes with the middle "
            f"one repeated n-2 times; got {mult}")
    a_min, a_mid, a_max = mult[0][0], mult[1][0], mult[2][0]
    i_max = int(np.nonzero(E.alphas == a_max)[0][0])
    i_min = int(np.nonzero(E.alphas == a_min)[0][0])
    E3 = Ellipsoid(np.array([a_max, a_mid, a_min]))
    u3 = umbilic_points(E3)[0]       # (+, 0, +) in descending order
    u = np.zeros(E.n)
    u[i_max] = u3[0]
    u[i_min] = u3[2]
    return u


# ---------------------------------------------------------------------------
# direction grids
# ---------------------------------------------------------------------------

def direction_grid(E: Ellipsoid, x, num: int = 64, num_random: int = 0,
                   seed: int = 0) -> np.ndarray:
    """Deterministic grid of ``num`` unit tangent directions at x, plus
    ``num_random`` seeded random ones.

    n=3 uses equally spaced angles in the tangent frame (theta = 0
    included), n=4 a Fibonacci sphere, higher dimensions seeded Gaussian
    samples.  Rows are unit vectors tangent to the ellipsoid at x.
    """
    if num < 1:
        raise InvalidInputError("num must be positive")
    x = np.asarray(x, dtype=float)
    frame = tangent_frame(E, x)            # (n-1, n) orthonormal rows
    n = E.n
    if n == 3:
        thetas = 2.0 * math.pi * np.arange(num) / num
        coeffs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    elif n == 4:
        k = np.arange(num)
        z = 1.0 - 2.0 * (k + 0.5) / num
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = k * GOLDEN_ANGLE
        coeffs = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    else:
        rng = np.random.default_rng(seed)
        coeffs = rng.standard_normal((num, n - 1))
        coeffs /= np.linalg.norm(coeffs, axis=1, keepdims=True)
    dirs = coeffs @ frame
    if num_random:
        rng = np.random.default_rng(seed + 1)
        extra = rng.standard_normal((num_random, n - 1))
        extra /= np.linalg.norm(extra, axis=1, keepdims=True)
        dirs = np.vstack([dirs, extra @ frame])
    return dirs


def transport_directions(g, dirs) -> np.ndarray:
    """Push a direction grid forward through an isometry g."""
    return np.asarray(dirs, dtype=float) @ np.asarray(g, dtype=float).T


def validate_isometry(E: Ellipsoid, g, tol: float = 1e-12) -> np.ndarray:
    """Check that g is orthogonal and preserves the ellipsoid (commutes
    with A); returns g as an array or raises InvalidIsometryError."""
    g = np.asarray(g, dtype=float)
    if g.shape != (E.n, E.n):
        raise InvalidIsometryError(f"isometry must be {E.n}x{E.n}")
    scale = max(1.0, float(E.alphas.max()))
    if np.max(np.abs(g.T @ g - np.eye(E.n))) > tol * scale:
        raise InvalidIsometryError("matrix is not orthogonal")
    A = np.diag(E.alphas)
    if np.max(np.abs(g @ A @ g.T - A)) > tol * scale:
        raise InvalidIsometryError("matrix does not preserve the ellipsoid")
    return g


# ---------------------------------------------------------------------------
# the scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DirectionReturn:
    """Candidate return event of a single scan direction."""

    index: int
    direction: np.ndarray
    time: float          # candidate return time (nan when no minimum found)
    miss: float          # distance to the start point there (inf when none)
    tight: bool          # miss < return_radius
    deviation: float     # angle between return and launch directions (rad)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "direction": [float(c) for c in self.direction],
            "time": float(self.time),
            "miss": float(self.miss),
            "tight": bool(self.tight),
            "deviation": float(self.deviation),
        }


@dataclass(frozen=True)
class SelfFocalReport:
    """Outcome of a self-focal scan at one base point."""

    point: np.ndarray
    verdict: str
    records: tuple
    return_radius: float
    focal_tol: float
    separation_tol: float
    t_max: float
    time_mean: float
    time_spread: float       # relative: (max - min) / mean
    num_tight: int
    max_miss: float

    @property
    def common_return_time(self):
        """Mean candidate return time, or None unless the scan produced
        self-focal evidence (a non-focal point has no common time)."""
        if self.verdict != VERDICT_EVIDENCE:
            return None
        return self.time_mean

    def to_dict(self) -> dict:
        return {
            "point": [float(c) for c in self.point],
            "verdict": self.verdict,
            "return_radius": float(self.return_radius),
            "focal_tol": float(self.focal_tol),
            "separation_tol": float(self.separation_tol),
            "t_max": float(self.t_max),
            "time_mean": float(self.time_mean),
            "time_spread": float(self.time_spread),
            "num_tight": int(self.num_tight),
            "num_directions": len(self.records),
            "max_miss": float(self.max_miss),
            "records": [r.to_dict() for r in self.records],
        }


def _angle_between(u, v) -> float:
    """Angle between unit vectors, accurate down to ~1e-16 rad.

    Uses |u - v| = 2 sin(theta/2) instead of acos(<u,v>), whose precision
    floor is ~sqrt(eps) near parallel vectors.
    """
    chord = float(np.linalg.norm(np.asarray(u) - np.asarray(v)))
    return 2.0 * math.asin(min(1.0, 0.5 * chord))


def _scan_one(E, x, d, t_max, radius, options):
    traj = integrate_geodesic(E, x, d, t_max, options=options)
    events = closest_approaches(E, x, d, t_max, options=options,
                                trajectory=traj)
    if not events:
        return math.nan, math.inf, False, math.nan
    tight = [ev for ev in events if ev.miss_distance < radius]
    ev = tight[0] if tight else min(events, key=lambda e: e.miss_distance)
    dev = _angle_between(ev.terminal_direction, d)
    return ev.time, ev.miss_distance, bool(tight), dev


def scan_self_focal(E: Ellipsoid, x, t_max: float | None = None,
                    num_directions: int = 64, num_random: int = 0,
                    seed: int = 0, return_radius: float | None = None,
                    focal_tol: float = 1e-5, separation_tol: float = 1e-2,
                    options: IntegratorOptions | None = None,
                    directions: np.ndarray | None = None,
                    threads: int = 1) -> SelfFocalReport:
    """Scan geodesic returns to x over a grid of launch directions.

    ``directions`` overrides the generated grid (rows must be unit
    tangents at x).  ``threads`` > 1 integrates directions in a worker
    pool; results are deterministic regardless of the thread count.
    """
    x = np.asarray(x, dtype=float)
    if t_max is None:
        t_max = 4.0 * math.pi * E.geometric_mean_semi_axis
    radius = default_return_radius(E) if return_radius is None else float(return_radius)
    if directions is None:
        directions = direction_grid(E, x, num=num_directions,
                                    num_random=num_random, seed=seed)
    else:
        directions = np.asarray(directions, dtype=float)
    opts = options or IntegratorOptions()

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(
                lambda d: _scan_one(E, x, d, t_max, radius, opts), directions))
    else:
        rows = [_scan_one(E, x, d, t_max, radius, opts) for d in directions]

    records = tuple(
        DirectionReturn(index=i, direction=directions[i].copy(), time=t,
                        miss=m, tight=tight, deviation=dev)
        for i, (t, m, tight, dev) in enumerate(rows))

    times = np.array([r.time for r in records])
    valid = times[np.isfinite(times)]
    if valid.size:
        mean = float(np.mean(valid))
        spread = float((np.max(valid) - np.min(valid)) / abs(mean)) if mean else math.inf
    else:
        mean, spread = math.nan, math.inf
    num_tight = sum(r.tight for r in records)
    max_miss = max((r.miss for r in records), default=math.inf)

    all_returned = valid.size == len(records)
    if all_returned and num_tight == len(records) and spread < focal_tol:
        verdict = VERDICT_EVIDENCE
    elif spread > separation_tol:
        verdict = VERDICT_NOT
    else:
        verdict = VERDICT_INCONCLUSIVE

    return SelfFocalReport(
        point=x.copy(), verdict=verdict, records=records,
        return_radius=radius, focal_tol=focal_tol,
        separation_tol=separation_tol, t_max=float(t_max),
        time_mean=mean, time_spread=spread, num_tight=num_tight,
        max_miss=float(max_miss))


def count_small_deviations(report: SelfFocalReport, max_angle: float) -> int:
    """Number of scan directions whose return deviates from the launch
    direction by at most ``max_angle`` radians."""
    return sum(1 for r in report.records
               if math.isfinite(r.deviation) and r.deviation <= max_angle)


# ---------------------------------------------------------------------------
# the angular return map (n = 3)
# ---------------------------------------------------------------------------

def return_map(E: Ellipsoid, x, theta: float, t_max: float | None = None,
               return_radius: float | None = None,
               options: IntegratorOptions | None = None):
    """Return-direction angle of the geodesic launched at angle theta.

    Angles are measured in the deterministic tangent frame at x.  Returns
    ``(theta_out, time, miss)`` for the candidate return event (first
    tight approach, else closest).  n = 3 only.
    """
    if E.n != 3:
        raise UnsupportedDimensionError("the angular return map needs n=3")
    x = np.asarray(x, dtype=float)
    if t_max is None:
        t_max = 4.0 * math.pi * E.geometric_mean_semi_axis
    radius = default_return_radius(E) if return_radius is None else float(return_radius)
    frame = tangent_frame(E, x)
    d = math.cos(theta) * frame[0] + math.sin(theta) * frame[1]
    opts = options or IntegratorOptions()
    traj = integrate_geodesic(E, x, d, t_max, options=opts)
    events = closest_approaches(E, x, d, t_max, options=opts, trajectory=traj)
    if not events:
        return math.nan, math.nan, math.inf
    tight = [ev for ev in events if ev.miss_distance < radius]
    ev = tight[0] if tight else min(events, key=lambda e: e.miss_distance)
    v = ev.terminal_direction
    theta_out = math.atan2(float(v @ frame[1]), float(v @ frame[0]))
    return theta_out, ev.time, ev.miss_distance


def return_map_derivative(E: Ellipsoid, x, theta: float, step: float = 1e-5,
                          t_max: float | None = None,
                          return_radius: float | None = None,
                          options: IntegratorOptions | None = None) -> float:
    """Central-difference derivative d theta_out / d theta of the angular
    return map, with branch unwrapping across the 2 pi seam."""
    tp, _, _ = return_map(E, x, theta + step, t_max=t_max,
                          return_radius=return_radius, options=options)
    tm, _, _ = return_map(E, x, theta - step, t_max=t_max,
                          return_radius=return_radius, options=options)
    if not (math.isfinite(tp) and math.isfinite(tm)):
        raise InvalidInputError("return map undefined near theta")
    diff = tp - tm
    while diff > math.pi:
        diff -= 2.0 * math.pi
    while diff < -math.pi:
        diff += 2.0 * math.pi
    return diff / (2.0 * step)
