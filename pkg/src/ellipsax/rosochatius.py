"""Rosochatius flow on the ellipsoid and the (2,1,1) symmetry reduction.

The Rosochatius system adds the inverse-square potential

    V(x) = j^2 / (2 x_1^2)

to the free motion constrained to the ellipsoid.  It arises here as the
reduction of geodesic flow on an ellipsoid with a *leading double axis*
(alphas[0] == alphas[1]): rotating the (x_1, x_2) pair is an isometry,
the angular momentum J = x_1 v_2 - x_2 v_1 is conserved, and in the
cylindrical radius r = sqrt(x_1^2 + x_2^2) the motion is the Rosochatius
flow with j = J on the lower-dimensional ellipsoid whose first squared
semi-axis is the doubled value.

Trajectories live on the energy shell |v|^2/2 + V(x) = E0 rather than on
the unit-speed shell; the integrator's projection rescales the speed to
sqrt(2 (E0 - V)).  Integration halts with BarrierProximityError when the
orbit comes within ``barrier_min`` of the singular plane {x_1 = 0}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernel import tableau as tb
from .errors import (
    BarrierProximityError,
    ConstraintViolationError,
    DegenerateInputError,
    IntegrationFailureError,
    InvalidInputError,
    InvalidMultiplicitiesError,
    ReductionInconsistencyError,
)
from .flow import IntegratorOptions, Trajectory, _run_kernel
from .geometry import Ellipsoid

__all__ = [
    "ExperimentRow",
    "Reduction211",
    "UmbilicReturnReport",
    "angular_momentum",
    "default_barrier_min",
    "integrate_rosochatius",
    "lift_211",
    "reduce_211",
    "reduce_states",
    "rosochatius_energy",
    "umbilic_return_experiment",
    "write_experiment_csv",
]


def rosochatius_energy(E: Ellipsoid, x, v, j: float) -> float:
    """|v|^2 / 2 + j^2 / (2 x_1^2)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    e = 0.5 * float(v @ v)
    if j != 0.0:
        e += 0.5 * j * j / float(x[0]) ** 2
    return e


def default_barrier_min(E: Ellipsoid) -> float:
    """1e-4 times the smallest semi-axis."""
    return 1e-4 * float(np.min(E.semi_axes))


def integrate_rosochatius(E: Ellipsoid, x0, v0, j: float, t_max: float,
                          options: IntegratorOptions | None = None,
                          barrier_min: float | None = None) -> Trajectory:
    """Integrate the Rosochatius flow from (x0, v0) with coupling j.

    v0 need not be unit; the conserved energy is taken from the initial
    state.  For j = 0 this is exactly the geodesic flow (up to the speed
    normalization of the caller's v0).
    """
    options = options or IntegratorOptions()
    if t_max <= 0:
        raise InvalidInputError("t_max must be positive")
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if x0.shape != (E.n,) or v0.shape != (E.n,):
        raise InvalidInputError(f"state vectors must have length {E.n}")
    c = abs(E.constraint(x0))
    if c > options.tol_constraint:
        raise ConstraintViolationError(f"x0 off the ellipsoid by {c:.3e}")
    speed = float(np.linalg.norm(v0))
    if speed == 0.0:
        raise InvalidInputError("v0 must be nonzero")
    tang = abs(float((E.ainv * x0) @ v0))
    if tang > options.tol_constraint * speed:
        raise ConstraintViolationError(f"v0 not tangent: <A^-1 x, v> = {tang:.3e}")
    bmin = default_barrier_min(E) if barrier_min is None else float(barrier_min)
    if j != 0.0 and abs(float(x0[0])) <= bmin:
        raise BarrierProximityError(
            f"x_1 = {x0[0]:.3e} starts inside the barrier margin {bmin:.3e}")
    jsq = float(j) * float(j)
    traj = _run_kernel(E, x0, v0, t_max, options, jsq=jsq,
                       barrier_min=bmin if jsq > 0.0 else 0.0)
    if traj.status == tb.STATUS_BARRIER:
        err = BarrierProximityError(
            f"orbit reached |x_1| <= {bmin:.3e} at t = {traj.t_end:.6g}")
        err.partial = traj
        raise err
    if traj.status != tb.STATUS_OK:
        raise IntegrationFailureError(
            f"integrator stopped at t={traj.t_end:.6g} ({traj.status_label})",
            partial=traj)
    return traj


# ---------------------------------------------------------------------------
# (2,1,1) reduction
# ---------------------------------------------------------------------------

def angular_momentum(x, v, a: int = 0, b: int = 1) -> float:
    """J = x_a v_b - x_b v_a."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(x[a] * v[b] - x[b] * v[a])


@dataclass(frozen=True)
class Reduction211:
    """Reduced data of a state on an ellipsoid with a leading double axis."""

    ellipsoid: Ellipsoid   # reduced, first axis is the doubled value
    y: np.ndarray          # (r, x_3, ..., x_n)
    w: np.ndarray          # (r', v_3, ..., v_n)
    j: float               # conserved angular momentum in the (1,2) plane


def _require_leading_double_axis(E: Ellipsoid) -> None:
    if E.n < 3:
        raise InvalidMultiplicitiesError("reduction needs ambient n >= 3")
    a0, a1 = float(E.alphas[0]), float(E.alphas[1])
    if abs(a0 - a1) > 1e-12 * max(a0, a1):
        raise InvalidMultiplicitiesError(
            "reduction requires alphas[0] == alphas[1] (leading double axis); "
            "relabel axes first")


def reduce_211(E: Ellipsoid, x, v) -> Reduction211:
    """Reduce a tangent state by the rotational symmetry of the leading
    double axis.  The radius r = sqrt(x_1^2 + x_2^2) must be positive."""
    _require_leading_double_axis(E)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    r = math.hypot(float(x[0]), float(x[1]))
    if r == 0.0:
        raise DegenerateInputError("reduction undefined on the axis r = 0")
    j = angular_momentum(x, v)
    rdot = (float(x[0]) * float(v[0]) + float(x[1]) * float(v[1])) / r
    y = np.concatenate([[r], x[2:]])
    w = np.concatenate([[rdot], v[2:]])
    E_red = Ellipsoid(np.concatenate([[E.alphas[0]], E.alphas[2:]]))
    return Reduction211(E_red, y, w, j)


def lift_211(E: Ellipsoid, y, w, j: float, phase: float = 0.0):
    """Inverse of reduce_211 at a chosen rotation phase: embeds the
    reduced state (y, w) with angular momentum j back into the ambient
    ellipsoid.  Returns (x, v)."""
    _require_leading_double_axis(E)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if y.shape != (E.n - 1,) or w.shape != (E.n - 1,):
        raise InvalidInputError(f"reduced vectors must have length {E.n - 1}")
    r = float(y[0])
    if r <= 0.0:
        raise DegenerateInputError("lift needs r > 0")
    cp, sp = math.cos(phase), math.sin(phase)
    x = np.concatenate([[r * cp, r * sp], y[1:]])
    vr, vt = float(w[0]), j / r
    v = np.concatenate([[vr * cp - vt * sp, vr * sp + vt * cp], w[1:]])
    return x, v


def reduce_states(E: Ellipsoid, states, j_tol: float = 1e-8):
    """Vectorized reduction of sampled ambient states, shape (m, 2n) ->
    (m, 2(n-1)), checking that J stays constant along the sample.

    Raises ReductionInconsistencyError when J drifts beyond ``j_tol``
    relative to max(1, |J_0|)."""
    _require_leading_double_axis(E)
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n = E.n
    x, v = states[:, :n], states[:, n:]
    J = x[:, 0] * v[:, 1] - x[:, 1] * v[:, 0]
    j0 = float(J[0])
    drift = float(np.max(np.abs(J - j0)))
    if drift > j_tol * max(1.0, abs(j0)):
        raise ReductionInconsistencyError(
            f"angular momentum drifts by {drift:.3e} along the sample")
    r = np.hypot(x[:, 0], x[:, 1])
    if np.any(r == 0.0):
        raise DegenerateInputError("reduction undefined on the axis r = 0")
    rdot = (x[:, 0] * v[:, 0] + x[:, 1] * v[:, 1]) / r
    out = np.empty((states.shape[0], 2 * (n - 1)))
    out[:, 0] = r
    out[:, 1:n - 1] = x[:, 2:]
    out[:, n - 1] = rdot
    out[:, n:] = v[:, 2:]
    return out


# ---------------------------------------------------------------------------
# umbilic return experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentRow:
    """One (coupling, launch direction) cell of the umbilic return grid."""

    j: float
    direction_index: int
    return_time: float      # candidate return time to the umbilic (nan: none)
    miss_distance: float    # distance to the umbilic there (inf: none)
    tight: bool             # miss < return_radius
    halted: bool            # integration stopped at the barrier


@dataclass(frozen=True)
class UmbilicReturnReport:
    """Return statistics of Rosochatius orbits launched from the umbilic.

    For each coupling j, ``num_directions`` unit-speed launches leave the
    umbilic point (the total energy 1/2 + j^2/(2 u_1^2) is therefore
    equalized across directions within each row).  Whether the return
    times share a common value for j != 0 is recorded, not judged.
    """

    alphas: np.ndarray
    point: np.ndarray
    j_values: tuple
    num_directions: int
    t_max: float
    return_radius: float
    rows: tuple

    def summary(self) -> list:
        """Per-j dict of return-time statistics over the directions."""
        out = []
        for j in self.j_values:
            rows = [r for r in self.rows if r.j == j]
            times = np.array([r.return_time for r in rows])
            valid = times[np.isfinite(times)]
            mean = float(np.mean(valid)) if valid.size else math.nan
            spread = (float((np.max(valid) - np.min(valid)) / abs(mean))
                      if valid.size and mean else math.inf)
            out.append({
                "j": float(j),
                "num_directions": len(rows),
                "num_tight": sum(r.tight for r in rows),
                "num_halted": sum(r.halted for r in rows),
                "time_mean": mean,
                "time_spread": spread,
                "max_miss": float(max((r.miss_distance for r in rows),
                                      default=math.inf)),
            })
        return out

    def to_dict(self) -> dict:
        return {
            "alphas": [float(a) for a in self.alphas],
            "point": [float(c) for c in self.point],
            "j_values": [float(j) for j in self.j_values],
            "num_directions": int(self.num_directions),
            "t_max": float(self.t_max),
            "return_radius": float(self.return_radius),
            "summary": self.summary(),
            "rows": [
                {
                    "j": float(r.j),
                    "direction_index": int(r.direction_index),
                    "return_time": float(r.return_time),
                    "miss_distance": float(r.miss_distance),
                    "tight": bool(r.tight),
                    "halted": bool(r.halted),
                }
                for r in self.rows
            ],
        }


def umbilic_return_experiment(E: Ellipsoid, j_values, num_directions: int = 16,
                              t_max: float | None = None,
                              return_radius: float | None = None,
                              options: IntegratorOptions | None = None) -> UmbilicReturnReport:
    """Launch equal-speed Rosochatius orbits from the umbilic point for
    each coupling j and record their returns to it.

    Per direction the candidate event is the first approach inside the
    return radius when one exists, else the overall closest approach.
    Barrier halts are recorded per direction, never fatal.
    """
    from .flow import closest_approaches, default_return_radius
    from .focal import umbilic_points
    from .geometry import tangent_frame

    if E.n != 3:
        raise InvalidInputError("the umbilic return experiment needs n = 3")
    u = umbilic_points(E)[0]
    if t_max is None:
        t_max = 4.0 * math.pi * E.geometric_mean_semi_axis
    radius = default_return_radius(E) if return_radius is None else float(return_radius)
    opts = options or IntegratorOptions()
    frame = tangent_frame(E, u)
    thetas = 2.0 * math.pi * np.arange(num_directions) / num_directions
    rows = []
    for j in j_values:
        for i, th in enumerate(thetas):
            v = math.cos(th) * frame[0] + math.sin(th) * frame[1]
            halted = False
            try:
                traj = integrate_rosochatius(E, u, v, float(j), float(t_max),
                                             options=opts)
            except BarrierProximityError as err:
                traj = err.partial
                halted = True
            if traj is None or traj.num_steps == 0:
                rows.append(ExperimentRow(float(j), i, math.nan, math.inf,
                                          False, halted))
                continue
            events = closest_approaches(E, u, v, t_max, options=opts,
                                        trajectory=traj)
            if not events:
                rows.append(ExperimentRow(float(j), i, math.nan, math.inf,
                                          False, halted))
                continue
            tight = [ev for ev in events if ev.miss_distance < radius]
            ev = tight[0] if tight else min(events,
                                            key=lambda e: e.miss_distance)
            rows.append(ExperimentRow(float(j), i, float(ev.time),
                                      float(ev.miss_distance), bool(tight),
                                      halted))
    return UmbilicReturnReport(
        alphas=E.alphas.copy(), point=u, j_values=tuple(float(j) for j in j_values),
        num_directions=int(num_directions), t_max=float(t_max),
        return_radius=radius, rows=tuple(rows))


def write_experiment_csv(report: UmbilicReturnReport, path) -> None:
    """Rows j, direction_index, return_time, miss_distance, halted_flag."""
    import csv

    def _rows(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "direction_index", "return_time", "miss_distance",
                    "halted_flag"])
        for r in report.rows:
            w.writerow([repr(r.j), r.direction_index, repr(r.return_time),
                        repr(r.miss_distance), int(r.halted)])

    if hasattr(path, "write"):
        _rows(path)
    else:
        with open(path, "w", newline="") as fh:
            _rows(fh)
