"""Geodesic flow on the ellipsoid: unit-speed ODE, trajectories, returns.

The equations of motion are

    x'' = -nu A^{-1} x,   nu = <A^{-1}x', x'> / |A^{-1}x|^2,

which preserve the constraint <A^{-1}x, x> = 1 and the speed |x'|.  The
integrator is an adaptive embedded Runge-Kutta 5(4) pair with a quartic
dense output; every ``projection_every`` accepted steps the state is
re-projected onto the constraint manifold (radial projection of x,
tangent projection of x', unit-speed renormalization).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from . import _kernel
from ._kernel import tableau as tb
from .errors import IntegrationFailureError, InvalidInputError
from .geometry import Ellipsoid, PhasePoint, phase_point

__all__ = [
    "IntegratorOptions",
    "ReturnEvent",
    "Trajectory",
    "closest_approaches",
    "exp_map",
    "first_return",
    "integrate_geodesic",
    "write_trajectory_csv",
]


@dataclass(frozen=True)
class IntegratorOptions:
    """Tolerances and knobs of the adaptive integrator.

    rel_tol / abs_tol are the usual mixed error weights; projection_every
    counts accepted steps between constraint projections (0 disables);
    event_refine_tol is the absolute time tolerance of the return-event
    root polish; events closer than event_merge_tol are merged (the one
    with the smaller miss distance is kept).
    """

    rel_tol: float = 1e-11
    abs_tol: float = 1e-13
    max_step: float = 0.5
    projection_every: int = 1
    max_steps: int = 2_000_000
    event_refine_tol: float = 1e-12
    event_merge_tol: float = 1e-6
    tol_constraint: float = 1e-9

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise InvalidInputError("tolerances must be positive")
        if self.max_step <= 0:
            raise InvalidInputError("max_step must be positive")
        if self.projection_every < 0:
            raise InvalidInputError("projection_every must be >= 0")


_STATUS_LABEL = {
    tb.STATUS_OK: "ok",
    tb.STATUS_BARRIER: "barrier-halt",
    tb.STATUS_UNDERFLOW: "step-underflow",
    tb.STATUS_MAXSTEPS: "max-steps-exceeded",
}


class Trajectory:
    """Dense-output trajectory of the geodesic (or Rosochatius) flow."""

    def __init__(self, E: Ellipsoid, ts, ys, ks, hs, status, options,
                 jsq=0.0):
        self.E = E
        self.ts = ts
        self.ys = ys
        self.ks = ks
        self.hs = hs
        self.status = int(status)
        self.options = options
        self.jsq = float(jsq)
        for arr in (ts, ys, ks, hs):
            arr.setflags(write=False)

    # -- basic views ----------------------------------------------------

    @property
    def n(self) -> int:
        return self.E.n

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    @property
    def status_label(self) -> str:
        return _STATUS_LABEL.get(self.status, f"status-{self.status}")

    @property
    def num_steps(self) -> int:
        return len(self.hs)

    # -- dense output ---------------------------------------------------

    def state(self, t):
        """Dense-output state(s) at time(s) t, shape (..., 2n)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if len(self.hs) == 0:
            out = np.broadcast_to(self.ys[0], t_arr.shape + (2 * self.n,)).copy()
            return out[0] if np.isscalar(t) or np.ndim(t) == 0 else out
        idx = np.clip(np.searchsorted(self.ts, t_arr, side="right") - 1,
                      0, len(self.hs) - 1)
        th = (t_arr - self.ts[idx]) / self.hs[idx]
        powers = np.stack([th, th ** 2, th ** 3, th ** 4], axis=-1)
        wts = powers @ tb.P.T                       # (m, 7)
        out = self.ys[idx] + self.hs[idx, None] * np.einsum(
            "mj,mjd->md", wts, self.ks[idx])
        return out[0] if np.ndim(t) == 0 else out

    def position(self, t):
        s = self.state(t)
        return s[..., :self.n]

    def velocity(self, t):
        s = self.state(t)
        return s[..., self.n:]

    # -- diagnostics ------------------------------------------------------

    def constraint_residuals(self) -> np.ndarray:
        """|<A^{-1}x, x> - 1| at the accepted nodes."""
        x = self.ys[:, :self.n]
        return np.abs(np.einsum("ij,ij->i", x * self.E.ainv, x) - 1.0)

    def speed_residuals(self) -> np.ndarray:
        """||x'| - 1| at the accepted nodes (meaningful for unit-speed runs)."""
        v = self.ys[:, self.n:]
        return np.abs(np.linalg.norm(v, axis=1) - 1.0)

    def energies(self) -> np.ndarray:
        """|v|^2/2 + j^2/(2 x_1^2) at the accepted nodes."""
        x = self.ys[:, :self.n]
        v = self.ys[:, self.n:]
        e = 0.5 * np.einsum("ij,ij->i", v, v)
        if self.jsq > 0.0:
            e = e + 0.5 * self.jsq / (x[:, 0] ** 2)
        return e


def _run_kernel(E, x0, xi0, t_max, options, jsq=0.0, barrier_min=0.0):
    y0 = np.concatenate([np.asarray(x0, float), np.asarray(xi0, float)])
    status, ts, ys, ks, hs = _kernel.integrate_raw(
        E.ainv, y0, float(t_max), options.rel_tol, options.abs_tol,
        options.max_step, options.projection_every, float(jsq),
        float(barrier_min), options.max_steps)
    return Trajectory(E, ts, ys, ks, hs, status, options, jsq=jsq)


def integrate_geodesic(E: Ellipsoid, x0, xi0, t_max: float,
                       options: IntegratorOptions | None = None) -> Trajectory:
    """Integrate the unit-speed geodesic from the validated point (x0, xi0)."""
    options = options or IntegratorOptions()
    if t_max <= 0:
        raise InvalidInputError("t_max must be positive")
    pp = phase_point(E, x0, xi0, tol=options.tol_constraint)
    traj = _run_kernel(E, pp.x, pp.xi, t_max, options)
    if traj.status != tb.STATUS_OK:
        raise IntegrationFailureError(
            f"integrator stopped at t={traj.t_end:.6g} ({traj.status_label})",
            partial=traj)
    return traj


def exp_map(E: Ellipsoid, x0, xi0, t: float,
            options: IntegratorOptions | None = None) -> PhasePoint:
    """Geodesic endpoint G^t(x0, xi0); t = 0 returns the input point."""
    if t == 0.0:
        return phase_point(E, x0, xi0)
    traj = integrate_geodesic(E, x0, xi0, t, options)
    s = traj.state(t)
    x, v = s[:E.n], s[E.n:]
    return PhasePoint(x, v / np.linalg.norm(v))


@dataclass(frozen=True)
class ReturnEvent:
    """A local minimum of the distance to the launch point.

    time: refined event time; miss_distance: |x(t*) - x0|;
    terminal_direction: unit velocity at t*.
    """

    time: float
    miss_distance: float
    terminal_direction: np.ndarray


def _distance_minima(traj: Trajectory, x0: np.ndarray, t_lo: float,
                     refine_tol: float, merge_tol: float,
                     samples_per_step: int = 4):
    """All local minima of |x(t) - x0| on (t_lo, t_end], refined by brentq.

    Minima are located as sign changes (- to +) of
    f'(t) = 2 <x(t) - x0, x'(t)> on a dense-output sampling grid with
    ``samples_per_step`` points per accepted step.
    """
    n = traj.n
    if len(traj.hs) == 0:
        return []
    # sampling grid: step nodes plus interior dense-output points
    theta = np.arange(1, samples_per_step + 1) / samples_per_step
    tgrid = (traj.ts[:-1, None] + traj.hs[:, None] * theta[None, :]).ravel()
    tgrid = np.concatenate([[traj.ts[0]], tgrid])
    states = traj.state(tgrid)
    g = 2.0 * np.einsum("ij,ij->i", states[:, :n] - x0, states[:, n:])

    def gfun(t):
        s = traj.state(float(t))
        return 2.0 * float((s[:n] - x0) @ s[n:])

    events = []
    sign_flip = np.nonzero((g[:-1] < 0.0) & (g[1:] >= 0.0))[0]
    for i in sign_flip:
        ta, tcb = float(tgrid[i]), float(tgrid[i + 1])
        if tcb <= t_lo:
            continue
        try:
            tstar = brentq(gfun, ta, tcb, xtol=refine_tol,
                           rtol=4.0 * np.finfo(float).eps)
        except ValueError:  # pragma: no cover - bracket failure is defensive
            continue
        if tstar <= t_lo:
            continue
        s = traj.state(tstar)
        miss = float(np.linalg.norm(s[:n] - x0))
        xi_T = s[n:] / np.linalg.norm(s[n:])
        events.append(ReturnEvent(float(tstar), miss, xi_T))
    # merge events closer than merge_tol, keeping the smaller miss
    merged: list[ReturnEvent] = []
    for ev in events:
        if merged and ev.time - merged[-1].time < merge_tol:
            if ev.miss_distance < merged[-1].miss_distance:
                merged[-1] = ev
        else:
            merged.append(ev)
    return merged


def default_return_radius(E: Ellipsoid) -> float:
    """1e-3 times the geometric-mean semi-axis."""
    return 1e-3 * E.geometric_mean_semi_axis


def closest_approaches(E: Ellipsoid, x0, xi0, t_max: float,
                       options: IntegratorOptions | None = None,
                       trajectory: Trajectory | None = None):
    """Every local minimum of the distance to x0 along the geodesic."""
    options = options or IntegratorOptions()
    traj = trajectory or integrate_geodesic(E, x0, xi0, t_max, options)
    # exclude the trivial minimum at launch: skip a short initial window
    t_lo = min(0.25, 0.01 * t_max)
    return _distance_minima(traj, np.asarray(x0, float), t_lo,
                            options.event_refine_tol, options.event_merge_tol)


def first_return(E: Ellipsoid, x0, xi0, t_max: float,
                 options: IntegratorOptions | None = None,
                 return_radius: float | None = None,
                 trajectory: Trajectory | None = None):
    """Return events with miss_distance < return_radius, ordered by time.

    An empty list (no qualifying event before t_max) is not an error.
    """
    if return_radius is None:
        return_radius = default_return_radius(E)
    events = closest_approaches(E, x0, xi0, t_max, options,
                                trajectory=trajectory)
    return [ev for ev in events if ev.miss_distance < return_radius]


def write_trajectory_csv(traj: Trajectory, path, sample_dt: float | None = None):
    """Write t, x_1..x_n, xi_1..xi_n, constraint_residual, speed_residual.

    Rows are the integrator's accepted nodes, or a uniform grid when
    ``sample_dt`` is given.  Floats are written with repr (round-trip
    exact), so re-runs with identical settings produce identical bytes.
    """
    n = traj.n
    if sample_dt is None:
        times = traj.ts
        states = traj.ys
    else:
        times = np.arange(0.0, traj.t_end + 0.5 * sample_dt, sample_dt)
        times = times[times <= traj.t_end]
        states = traj.state(times)
    x = states[:, :n]
    v = states[:, n:]
    cres = np.abs(np.einsum("ij,ij->i", x * traj.E.ainv, x) - 1.0)
    sres = np.abs(np.linalg.norm(v, axis=1) - 1.0)
    header = (["t"] + [f"x_{i+1}" for i in range(n)]
              + [f"xi_{i+1}" for i in range(n)]
              + ["constraint_residual", "speed_residual"])

    def _rows(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(len(times)):
            row = ([repr(float(times[i]))]
                   + [repr(float(u)) for u in states[i]]
                   + [repr(float(cres[i])), repr(float(sres[i]))])
            writer.writerow(row)

    if hasattr(path, "write"):
        _rows(path)
    else:
        with open(path, "w", newline="") as fh:
            _rows(fh)


def options_with(options: IntegratorOptions | None, **kwargs) -> IntegratorOptions:
    """Copy of ``options`` (or the defaults) with fields replaced."""
    return replace(options or IntegratorOptions(), **kwargs)
