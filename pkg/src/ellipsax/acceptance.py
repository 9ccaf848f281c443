"""Numbered verification battery behind the ``suite`` CLI command.

Each criterion is a self-contained, deterministically seeded check of one
documented property of the flow or the spectral apparatus, with an
explicit quantitative threshold.  ``run_suite`` executes them in order
and prints one PASS/FAIL line per criterion; the final criterion audits
the battery itself (wall clock and report determinism).

The checks are intentionally independent of the unit-test suite so they
can run from an installed package alone.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import focal, lax, rosochatius
from .flow import IntegratorOptions, integrate_geodesic
from .geometry import (
    Ellipsoid,
    project_to_ellipsoid,
    random_unit_tangent,
    tangent_frame,
)

__all__ = ["CRITERIA", "CriterionResult", "run_criterion", "run_suite"]


@dataclass(frozen=True)
class CriterionResult:
    cid: int
    name: str
    passed: bool
    measured: str
    threshold: str
    runtime: float
    details: dict

    def one_line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] {self.cid:02d} {self.name:<24s} "
                f"measured {self.measured}  (threshold {self.threshold}; "
                f"{self.runtime:.1f}s)")


def _rand_onshell(E, rng):
    x = project_to_ellipsoid(E, rng.standard_normal(E.n))
    xi = random_unit_tangent(E, x, rng=rng)
    return x, xi


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def _c01_sphere_pole(threads=1):
    """Sphere: every direction returns at 2*pi with its launch direction."""
    E = Ellipsoid(np.array([1.0, 1.0, 1.0, 1.0]))
    rng = np.random.default_rng(2027)
    x0 = project_to_ellipsoid(E, rng.standard_normal(4))
    rep = focal.scan_self_focal(E, x0, t_max=13.0, num_directions=64,
                                threads=threads)
    times = np.array([r.time for r in rep.records])
    devs = np.array([r.deviation for r in rep.records])
    dt = float(np.max(np.abs(times - 2.0 * math.pi)))
    dd = float(np.max(devs))
    ok = (rep.verdict == focal.VERDICT_EVIDENCE and dt < 1e-8 and dd < 1e-8)
    return CriterionResult(
        1, "sphere-pole", ok,
        f"|t-2pi| <= {dt:.2e}, deviation <= {dd:.2e}, verdict {rep.verdict}",
        "1e-8 / 1e-8 / self-focal-evidence", 0.0,
        {"max_time_error": dt, "max_deviation": dd, "verdict": rep.verdict})


def _c02_umbilic_focal(threads=1):
    """Triaxial umbilic: common return time, but a twisted direction map."""
    E = Ellipsoid(np.array([3.0, 2.0, 1.0]))
    u = focal.umbilic_points(E)[0]
    rep = focal.scan_self_focal(E, u, t_max=12.0, num_directions=64,
                                threads=threads)
    n_small = focal.count_small_deviations(rep, 0.1)
    n_large = len(rep.records) - n_small
    ok = (rep.verdict == focal.VERDICT_EVIDENCE
          and rep.time_spread < 1e-5 and n_large >= 60)
    return CriterionResult(
        2, "umbilic-self-focal", ok,
        f"spread {rep.time_spread:.2e}, {n_large}/64 deviate > 0.1 rad, "
        f"T = {rep.time_mean:.6f}",
        "spread < 1e-5, >= 60/64 deviating", 0.0,
        {"time_spread": rep.time_spread, "common_time": rep.time_mean,
         "num_deviating": n_large, "verdict": rep.verdict})


def _c03_return_map_twist(threads=1):
    """Exactly two fixed directions; the angular map has slope != 1."""
    E = Ellipsoid(np.array([3.0, 2.0, 1.0]))
    u = focal.umbilic_points(E)[0]
    rep = focal.scan_self_focal(E, u, t_max=12.0, num_directions=256,
                                threads=threads)
    devs = np.array([r.deviation for r in rep.records])
    n_fixed = int(np.sum(devs < 1e-6))
    rng = np.random.default_rng(5)
    thetas = rng.uniform(0.2, math.pi - 0.2, 8)
    dists = []
    for th in thetas:
        dphi = focal.return_map_derivative(E, u, float(th), step=1e-5,
                                           t_max=12.0)
        dists.append(abs(dphi - 1.0))
    min_dist = float(min(dists))
    ok = n_fixed == 2 and min_dist > 0.01
    return CriterionResult(
        3, "return-map-twist", ok,
        f"{n_fixed} fixed directions, min |dPhi - 1| = {min_dist:.3f}",
        "exactly 2 fixed; |dPhi - 1| > 0.01", 0.0,
        {"num_fixed": n_fixed, "derivative_distances": dists})


def _c04_lax_isospectral(threads=1):
    """Eigenvalues frozen along 100 long geodesics; Lax bracket closes."""
    E = Ellipsoid(np.array([4.0, 3.0, 2.0, 1.0]))
    rng = np.random.default_rng(42)
    worst_drift = 0.0
    worst_res = 0.0
    times = np.linspace(0.0, 50.0, 26)
    for _ in range(100):
        x, xi = _rand_onshell(E, rng)
        traj = integrate_geodesic(E, x, xi, 50.0)
        lam = lax.nonzero_eigenvalues_along(E, traj, times)
        worst_drift = max(worst_drift,
                          float(np.max(np.abs(lam - lam[0]) / np.abs(lam[0]))))
        for t in (5.0, 25.0, 45.0):
            worst_res = max(worst_res, lax.lax_residual(E, traj, t))
    ok = worst_drift < 1e-8 and worst_res < 1e-6
    return CriterionResult(
        4, "lax-isospectral", ok,
        f"drift {worst_drift:.2e}, bracket residual {worst_res:.2e}",
        "1e-8 / 1e-6", 0.0,
        {"worst_drift": worst_drift, "worst_residual": worst_res})


def _c05_moment_constancy(threads=1):
    """Moment map constant over directions at the umbilic (value alpha_2),
    and visibly non-constant at a generic point."""
    E = Ellipsoid(np.array([3.0, 2.0, 1.0]))
    u = focal.umbilic_points(E)[0]
    fr = tangent_frame(E, u)
    vals = []
    for th in 2.0 * math.pi * np.arange(128) / 128:
        xi = math.cos(th) * fr[0] + math.sin(th) * fr[1]
        vals.append(lax.moment_map(E, u, xi)[0])
    vals = np.array(vals)
    spread_u = float(vals.max() - vals.min())
    eig_err = float(np.max(np.abs(vals - 2.0)))
    xg = project_to_ellipsoid(E, np.array([1.0, 1.0, 1.0]))
    rng = np.random.default_rng(7)
    vals2 = np.array([lax.moment_map(E, xg, random_unit_tangent(E, xg, rng=rng))[0]
                      for _ in range(128)])
    spread_g = float(vals2.max() - vals2.min())
    ok = spread_u < 1e-8 and eig_err < 1e-8 and spread_g > 1e-3
    return CriterionResult(
        5, "moment-constancy", ok,
        f"umbilic spread {spread_u:.2e}, |eig - 2| {eig_err:.2e}, "
        f"generic spread {spread_g:.2e}",
        "1e-8 / 1e-8 / > 1e-3", 0.0,
        {"umbilic_spread": spread_u, "eig_error": eig_err,
         "generic_spread": spread_g})


def _c06_multiaxial_scan(threads=1):
    """Four distinct axes: no base point shows a common return time."""
    E = Ellipsoid(np.array([4.0, 3.0, 2.0, 1.0]))
    pts = []
    for omit in range(4):
        keep = [i for i in range(4) if i != omit]
        emb = focal.embed_slice(E, keep)
        pts.append(emb.point(focal.umbilic_points(emb.sub)[0]))
    rng = np.random.default_rng(20260815)
    while len(pts) < 20:
        pts.append(project_to_ellipsoid(E, rng.standard_normal(4)))
    spreads = []
    verdicts = []
    for p in pts:
        rep = focal.scan_self_focal(E, p, t_max=18.7, num_directions=32,
                                    threads=threads)
        spreads.append(rep.time_spread)
        verdicts.append(rep.verdict)
    min_spread = float(min(spreads))
    ok = min_spread > 1e-2 and all(v == focal.VERDICT_NOT for v in verdicts)
    return CriterionResult(
        6, "multiaxial-no-focal", ok,
        f"min spread {min_spread:.3f} over 20 points",
        "> 1e-2, all not-self-focal", 0.0,
        {"min_spread": min_spread, "spreads": spreads})


def _c07_special_point(threads=1):
    """Repeated middle axis: the lifted umbilic is self-focal, and a
    0.05-perturbed neighbor is not."""
    E = Ellipsoid(np.array([3.0, 2.0, 2.0, 1.0]))
    u = focal.special_focal_point(E)
    rep = focal.scan_self_focal(E, u, t_max=25.0, num_directions=64,
                                threads=threads)
    d = random_unit_tangent(E, u, seed=1)
    up = project_to_ellipsoid(E, u + 0.05 * d)
    rep2 = focal.scan_self_focal(E, up, t_max=25.0, num_directions=64,
                                 threads=threads)
    ok = (rep.verdict == focal.VERDICT_EVIDENCE and rep.time_spread < 1e-5
          and rep2.time_spread > 1e-2)
    return CriterionResult(
        7, "special-point-focal", ok,
        f"spread {rep.time_spread:.2e} (T = {rep.time_mean:.6f}); "
        f"perturbed spread {rep2.time_spread:.3f}",
        "< 1e-5; perturbed > 1e-2", 0.0,
        {"time_spread": rep.time_spread, "common_time": rep.time_mean,
         "perturbed_spread": rep2.time_spread,
         "perturbed_verdict": rep2.verdict})


def _c08_phi_identity(threads=1):
    """Spectral product form of Phi_z equals its resolvent expression."""
    E = Ellipsoid(np.array([4.0, 3.0, 2.0, 1.0]))
    rng = np.random.default_rng(12345)
    worst = 0.0
    for _ in range(1000):
        x, xi = _rand_onshell(E, rng)
        while True:
            z = rng.uniform(-2.0, 6.0)
            if abs(z) > 0.05 and np.min(np.abs(E.alphas - z)) > 0.05:
                break
        phi = lax.phi_z(E, x, xi, z)
        res = lax.phi_identity_residual(E, x, xi, z) / max(1.0, abs(phi))
        worst = max(worst, res)
    ok = worst < 1e-10
    return CriterionResult(
        8, "phi-identity", ok, f"worst residual {worst:.2e}",
        "< 1e-10 x max(1, |Phi|)", 0.0, {"worst_residual": worst})


def _c09_tangency_normals(threads=1):
    """Nonzero eigenvalues mark tangent confocal quadrics; eigenvectors
    are the quadric normals at the contact points."""
    E = Ellipsoid(np.array([4.0, 3.0, 2.0, 1.0]))
    rng = np.random.default_rng(123)
    worst_t = 0.0
    worst_a = 0.0
    for _ in range(100):
        x, xi = _rand_onshell(E, rng)
        sp = lax.lax_spectrum(E, x, xi)
        for jj, lam in enumerate(sp.nonzero):
            td = lax.confocal_tangency(E, x, xi, float(lam))
            worst_t = max(worst_t, abs(td.residual) / td.scale)
            _, nrm = lax.contact_point_and_normal(E, x, xi, float(lam))
            phi = sp.nonzero_vectors[:, jj]
            worst_a = max(worst_a, 1.0 - abs(float(nrm @ phi)))
    ok = worst_t < 1e-9 and worst_a < 1e-7
    return CriterionResult(
        9, "tangency-normals", ok,
        f"tangency {worst_t:.2e}, alignment {worst_a:.2e}",
        "1e-9 / 1e-7", 0.0,
        {"worst_tangency": worst_t, "worst_alignment": worst_a})


def _c10_interlacing(threads=1):
    """Ellipsoidal coordinates interlace the squared semi-axes."""
    E = Ellipsoid(np.array([4.0, 3.0, 2.0, 1.0]))
    rng = np.random.default_rng(777)
    asort = np.sort(E.alphas)
    worst = -math.inf
    for _ in range(1000):
        x = project_to_ellipsoid(E, rng.standard_normal(4))
        z = lax.ellipsoidal_coordinates(E, x)
        worst = max(worst, float(np.max(asort[:-1] - z)),
                    float(np.max(z - asort[1:])))
    ok = worst <= 1e-10
    return CriterionResult(
        10, "interlacing", ok, f"worst violation {worst:.2e}", "<= 1e-10",
        0.0, {"worst_violation": worst})


def _c11_first_variation(threads=1):
    """Analytic eigenvalue derivative matches finite differences; the
    derivative map has full rank."""
    E = Ellipsoid(np.array([4.0, 3.0, 2.0, 1.0]))
    rng = np.random.default_rng(4242)
    worst_rel = 0.0
    for _ in range(200):
        x, xi = _rand_onshell(E, rng)
        basis = lax.admissible_variation_basis(E, x, xi)
        c = rng.standard_normal(basis.shape[0])
        c /= np.linalg.norm(c)
        row = c @ basis
        xd, xid = row[:E.n], row[E.n:]
        a = lax.eigenvalue_variation(E, x, xi, xd, xid)
        f = lax.fd_eigenvalue_variation(E, x, xi, xd, xid, step=1e-5)
        # norm-relative: single components may pass through zero, where a
        # per-component quotient would only measure the FD truncation floor
        worst_rel = max(worst_rel,
                        float(np.linalg.norm(a - f) / np.linalg.norm(f)))
    worst_sv = math.inf
    for _ in range(50):
        x, xi = _rand_onshell(E, rng)
        J = lax.variation_jacobian(E, x, xi)
        worst_sv = min(worst_sv,
                       float(np.linalg.svd(J, compute_uv=False)[-1]))
    ok = worst_rel < 1e-6 and worst_sv > 1e-6
    return CriterionResult(
        11, "first-variation", ok,
        f"rel err {worst_rel:.2e}, min sigma {worst_sv:.2e}",
        "< 1e-6; sigma > 1e-6", 0.0,
        {"worst_rel_error": worst_rel, "min_singular_value": worst_sv})


def _c12_isometry_orbit(threads=1):
    """Rotating the doubled axes moves scan results along the orbit
    without changing them."""
    E = Ellipsoid(np.array([3.0, 2.0, 2.0, 1.0]))
    rng = np.random.default_rng(2026)
    x0 = project_to_ellipsoid(E, rng.standard_normal(4))
    D = focal.direction_grid(E, x0, num=32)
    base = focal.scan_self_focal(E, x0, t_max=12.0, directions=D,
                                 threads=threads)
    worst = 0.0
    verdict_ok = True
    for phi in np.linspace(0.3, 2.8, 5):
        g = np.eye(4)
        c, s = math.cos(phi), math.sin(phi)
        g[1, 1] = c
        g[1, 2] = -s
        g[2, 1] = s
        g[2, 2] = c
        focal.validate_isometry(E, g)
        rep = focal.scan_self_focal(E, g @ x0, t_max=12.0,
                                    directions=focal.transport_directions(g, D),
                                    threads=threads)
        worst = max(worst, abs(rep.time_mean - base.time_mean))
        verdict_ok = verdict_ok and rep.verdict == base.verdict
    ok = worst < 1e-6 and verdict_ok
    return CriterionResult(
        12, "isometry-orbit", ok,
        f"max |d mean-time| {worst:.2e}, verdicts agree: {verdict_ok}",
        "< 1e-6", 0.0, {"worst_mean_diff": worst, "verdicts_agree": verdict_ok})


def _c13_rosochatius(threads=1):
    """Inverse-square flow: conserved energy, exact j = 0 reduction to
    geodesics, consistency of the doubled-axis reduction, and the
    umbilic return grid report."""
    E3 = Ellipsoid(np.array([3.0, 2.0, 1.0]))
    u = focal.umbilic_points(E3)[0]
    fr = tangent_frame(E3, u)
    v0 = fr[0] + 0.3 * fr[1]
    v0 /= np.linalg.norm(v0)
    traj = rosochatius.integrate_rosochatius(E3, u, v0, 0.3, 50.0)
    en = traj.energies()
    drift = float(np.max(np.abs(en - en[0])) / en[0])

    x0 = project_to_ellipsoid(E3, np.array([1.0, 1.0, 1.0]))
    xi0 = random_unit_tangent(E3, x0, seed=3)
    ts = np.linspace(0.0, 20.0, 201)
    tg = integrate_geodesic(E3, x0, xi0, 20.0)
    tr = rosochatius.integrate_rosochatius(E3, x0, xi0, 0.0, 20.0)
    d0 = float(np.max(np.linalg.norm(tg.state(ts) - tr.state(ts), axis=1)))

    E4 = Ellipsoid(np.array([3.0, 3.0, 2.0, 1.0]))
    rng = np.random.default_rng(11)
    x4, v4 = _rand_onshell(E4, rng)
    traj4 = integrate_geodesic(E4, x4, v4, 20.0)
    red = rosochatius.reduce_states(E4, traj4.state(ts))
    r0 = rosochatius.reduce_211(E4, x4, v4)
    trajr = rosochatius.integrate_rosochatius(r0.ellipsoid, r0.y, r0.w,
                                              r0.j, 20.0)
    dred = float(np.max(np.linalg.norm(red - trajr.state(ts), axis=1)))

    report = rosochatius.umbilic_return_experiment(
        E3, np.linspace(0.0, 0.6, 7), num_directions=16, t_max=25.0)
    summ = report.summary()
    complete = (len(report.rows) == 7 * 16
                and all(s["num_directions"] == 16 for s in summ))
    j0 = summ[0]
    j0_ok = (j0["num_tight"] == 16 and j0["time_spread"] < 1e-5
             and abs(j0["time_mean"] - 8.7377525710) < 1e-6)
    ok = drift < 1e-8 and d0 < 1e-9 and dred < 1e-7 and complete and j0_ok
    return CriterionResult(
        13, "rosochatius", ok,
        f"energy drift {drift:.2e}, j=0 match {d0:.2e}, reduction {dred:.2e}, "
        f"report rows {len(report.rows)}",
        "1e-8 / 1e-9 / 1e-7 / 7x16 rows", 0.0,
        {"energy_drift": drift, "j0_match": d0, "reduction": dred,
         "summary": summ})


CRITERIA = {
    1: ("sphere-pole", _c01_sphere_pole),
    2: ("umbilic-self-focal", _c02_umbilic_focal),
    3: ("return-map-twist", _c03_return_map_twist),
    4: ("lax-isospectral", _c04_lax_isospectral),
    5: ("moment-constancy", _c05_moment_constancy),
    6: ("multiaxial-no-focal", _c06_multiaxial_scan),
    7: ("special-point-focal", _c07_special_point),
    8: ("phi-identity", _c08_phi_identity),
    9: ("tangency-normals", _c09_tangency_normals),
    10: ("interlacing", _c10_interlacing),
    11: ("first-variation", _c11_first_variation),
    12: ("isometry-orbit", _c12_isometry_orbit),
    13: ("rosochatius", _c13_rosochatius),
}

#: wall-clock budget for the whole battery, seconds (criterion 14)
SUITE_BUDGET_SECONDS = 900.0


def run_criterion(cid: int, threads: int = 1) -> CriterionResult:
    name, fn = CRITERIA[cid]
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = fn(threads=threads)
    dt = time.perf_counter() - t0
    return CriterionResult(res.cid, res.name, res.passed, res.measured,
                           res.threshold, dt, res.details)


def _determinism_check() -> bool:
    """Two identically configured scans must serialize to identical bytes."""
    E = Ellipsoid(np.array([3.0, 2.0, 1.0]))
    u = focal.umbilic_points(E)[0]

    def blob():
        rep = focal.scan_self_focal(E, u, t_max=12.0, num_directions=16)
        return json.dumps(rep.to_dict(), sort_keys=True).encode()

    return blob() == blob()


def run_suite(only=None, threads: int = 1, stream=None):
    """Run the selected criteria (all by default) plus the battery audit.

    ``only``: comma-separated tokens matched against criterion ids and
    name substrings.  Returns the list of CriterionResult.
    """
    tokens = None
    if only:
        tokens = [t.strip().lower() for t in str(only).split(",") if t.strip()]

    def selected(cid, name):
        if tokens is None:
            return True
        return any(t == str(cid) or t in name for t in tokens)

    results = []
    t0 = time.perf_counter()
    for cid in sorted(CRITERIA):
        name, _fn = CRITERIA[cid]
        if not selected(cid, name):
            continue
        res = run_criterion(cid, threads=threads)
        results.append(res)
        if stream is not None:
            print(res.one_line(), file=stream, flush=True)
    elapsed = time.perf_counter() - t0

    if selected(14, "suite-audit"):
        det = _determinism_check()
        ok = elapsed < SUITE_BUDGET_SECONDS and det
        res14 = CriterionResult(
            14, "suite-audit", ok,
            f"wall clock {elapsed:.1f}s, reports deterministic: {det}",
            f"< {SUITE_BUDGET_SECONDS:.0f}s; deterministic", elapsed,
            {"wall_clock": elapsed, "deterministic": det,
             "criteria_run": [r.cid for r in results]})
        results.append(res14)
        if stream is not None:
            print(res14.one_line(), file=stream, flush=True)
    return results
