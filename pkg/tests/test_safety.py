"""Worst-case source geometry, exclusion-disk unions, and certified steps."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmcap.safety import (
    DiskUnion,
    StepConstraints,
    disk_step_cap,
    global_step_bound,
    implied_floors,
    robot_influence_band,
    step_bound_primary,
    straight_wall_intensity,
    virtual_source_distance,
    wall_distance_bound,
)
from swarmcap.signals import SensorFrame, SignalKernel, sensor_positions
from swarmcap.world import symmetric_sensor_angles
from oracles import (
    mp_global_step_bound,
    mp_influence_band,
    mp_virtual_source_distance,
    sweep_step_intervals,
    sweep_virtual_source_distance,
)

R_R = 0.25


# ---------------------------------------------------------------------------
# closed forms vs oracles


def test_virtual_source_distance_reference_value():
    # r_r = 0.5, p = 4 sensors -> half gap pi/4, reading 2.0
    got = virtual_source_distance(2.0, 0.5, math.pi / 4)
    assert math.isclose(got, mp_virtual_source_distance(2.0, 0.5, math.pi / 4), rel_tol=1e-12)
    assert math.isclose(got, 2.322056, abs_tol=5e-7)
    sweep = sweep_virtual_source_distance(2.0, 0.5, math.pi / 4, n=40001)
    assert math.isclose(got, sweep, abs_tol=1e-4)


@given(st.floats(min_value=0.2, max_value=10.0),
       st.floats(min_value=0.05, max_value=1.0),
       st.floats(min_value=0.05, max_value=math.pi / 2))
def test_virtual_source_distance_against_mpmath(d_sk, r_r, half_gap):
    if d_sk < r_r * math.sin(half_gap):
        with pytest.raises(ValueError):
            virtual_source_distance(d_sk, r_r, half_gap)
        return
    got = virtual_source_distance(d_sk, r_r, half_gap)
    assert math.isclose(got, mp_virtual_source_distance(d_sk, r_r, half_gap), rel_tol=1e-12)


def test_virtual_source_is_a_lower_bound_on_true_distance():
    # any actual source position consistent with the reading sits at least
    # this far from the body center
    rng = np.random.default_rng(8)
    for _ in range(300):
        r_r = rng.uniform(0.1, 0.6)
        half_gap = rng.uniform(0.1, math.pi / 3)
        ang = rng.uniform(-half_gap, half_gap)
        dist = rng.uniform(r_r + 0.2, 8.0)
        src = np.array([dist * math.cos(ang), dist * math.sin(ang)])
        sensor = np.array([r_r, 0.0])
        d_sk = float(np.hypot(*(src - sensor)))
        bound = virtual_source_distance(d_sk, r_r, half_gap)
        assert bound <= dist + 1e-9


def test_step_bound_primary_keeps_distance():
    # post-step center must stay >= R from every source on the implied circle
    d_sk, R, r_r = 3.0, 1.0, 0.5
    for delta in (0.0, 0.3, 1.0, 2.0):
        step = step_bound_primary(d_sk, R, r_r, delta)
        if step == 0.0:
            continue
        sensor = np.array([r_r * math.cos(delta), r_r * math.sin(delta)])
        end = np.array([step, 0.0])
        for ang in np.linspace(0, 2 * math.pi, 3000):
            src = sensor + d_sk * np.array([math.cos(ang), math.sin(ang)])
            assert np.hypot(*(end - src)) >= R - 1e-9


def test_disk_step_cap_matches_interval_sweep():
    got = disk_step_cap(2.5, 0.4, 1.2)
    ref = sweep_step_intervals(2.5, 0.4, 1.2, 6.0, resolution=1e-4)
    assert math.isclose(got, ref[0][1], abs_tol=5e-4)
    # ray missing the disk is unconstrained
    assert disk_step_cap(2.5, math.pi / 2, 1.2) == math.inf
    # already at or inside the keep-out: no step
    assert disk_step_cap(1.0, 0.0, 1.2) == 0.0


def test_global_step_bound_reference_values():
    got = global_step_bound(0.5, 1.5, 8)
    assert math.isclose(got, mp_global_step_bound(0.5, 1.5, 8), rel_tol=1e-12)
    assert math.isclose(got, 0.453194, abs_tol=5e-7)
    # degenerate: two sensors, safe distance equal to body radius
    got = global_step_bound(0.5, 0.5, 2)
    assert math.isclose(got, mp_global_step_bound(0.5, 0.5, 2), rel_tol=1e-12)


def test_influence_band_reference_values():
    lo, hi = robot_influence_band(0.5, 1.5, 8, 0.4)
    rlo, rhi = mp_influence_band(0.5, 1.5, 8, 0.4)
    assert math.isclose(lo, rlo, rel_tol=1e-12)
    assert math.isclose(hi, rhi, rel_tol=1e-12)
    assert math.isclose(lo, 1.85555, abs_tol=5e-6)
    assert math.isclose(hi, 1.96194, abs_tol=5e-6)


def test_influence_band_is_nonempty_for_design_points():
    # the admissible cutoff window must be open for every sensor count the
    # sweeps use, at the step the baseline runs with
    for p in range(3, 9):
        d_max = 0.9 * global_step_bound(0.25, 0.6, p)
        lo, hi = robot_influence_band(0.25, 0.6, p, d_max)
        assert lo < hi


# ---------------------------------------------------------------------------
# wall inversion


def test_wall_distance_bound_inverts_straight_wall_profile():
    k = SignalKernel("inverse-square", C=0.8, beta=1.2)
    for a in (0.2, 0.5, 0.9, 1.1):
        z = straight_wall_intensity(a, k)
        assert math.isclose(wall_distance_bound(z, k), a, rel_tol=1e-6)
    assert wall_distance_bound(0.0, k) == k.beta


def test_wall_distance_bound_is_conservative_for_corners():
    # a corner reading exceeds the straight-wall reading at equal distance,
    # so the inverted bound underestimates the true distance
    from swarmcap.signals import boundary_intensity

    k = SignalKernel("inverse-square", C=0.8, beta=1.2)
    boundary = (24.0, 24.0)
    for px, py in ((0.5, 0.5), (0.8, 1.0), (0.3, 0.7)):
        z = boundary_intensity(px, py, boundary, k)
        true_d = min(px, py, boundary[0] - px, boundary[1] - py)
        assert wall_distance_bound(z, k) <= true_d + 1e-9


# ---------------------------------------------------------------------------
# exclusion-disk unions


def brute_clearance(union: DiskUnion, q, n_angles=720, n_radii=400, r_max=None):
    """Distance from q to the nearest uncovered point, by dense polar grid."""
    c, r = union.centers, union.radii
    covered_q = bool((np.hypot(q[0] - c[:, 0], q[1] - c[:, 1]) < r).any())
    if not covered_q:
        return 0.0
    if r_max is None:
        r_max = float(r.max()) * 2.5
    best = r_max
    for rad in np.linspace(0, r_max, n_radii)[1:]:
        if rad >= best:
            break
        ang = np.linspace(0, 2 * math.pi, n_angles, endpoint=False)
        px = q[0] + rad * np.cos(ang)
        py = q[1] + rad * np.sin(ang)
        cov = np.zeros(len(ang), dtype=bool)
        for (cx, cy), rr in zip(c, r):
            cov |= np.hypot(px - cx, py - cy) < rr
        if not cov.all():
            best = rad
            break
    return best


@given(st.integers(min_value=1, max_value=7), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=60, deadline=None)
def test_clearance_matches_brute_force(k, seed):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-2, 2, (k, 2))
    radii = rng.uniform(0.3, 2.0, k)
    union = DiskUnion(centers, radii, 0.5)
    q = rng.uniform(-2, 2, 2)
    exact = float(union.clearance(np.array([q]))[0])
    ref = brute_clearance(union, q)
    # brute resolution: radial step of the polar grid
    assert abs(exact - ref) < 2.5 * (float(radii.max()) * 2.5) / 400


@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=200, deadline=None)
def test_scalar_and_batch_clearance_agree(k, seed):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-3, 3, (k, 2))
    radii = rng.uniform(0.1, 2.5, k)
    union = DiskUnion(centers, radii, 0.4)
    q = rng.uniform(-3, 3, 2)
    batch = float(union.clearance(np.array([q]))[0])
    scalar = union.clearance_point(float(q[0]), float(q[1]))
    assert math.isclose(batch, scalar, rel_tol=1e-12, abs_tol=1e-12)


@given(st.integers(min_value=1, max_value=7), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=100, deadline=None)
def test_clearance_certifies_a_covered_ball(k, seed):
    # every point strictly inside the clearance radius is covered
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-2, 2, (k, 2))
    radii = rng.uniform(0.3, 2.0, k)
    union = DiskUnion(centers, radii, 0.5)
    q = rng.uniform(-2, 2, 2)
    cl = float(union.clearance(np.array([q]))[0])
    if cl <= 0.0:
        return
    ang = np.linspace(0, 2 * math.pi, 720, endpoint=False)
    for frac in (0.25, 0.7, 0.999999):
        px = q[0] + frac * cl * np.cos(ang)
        py = q[1] + frac * cl * np.sin(ang)
        cov = np.zeros(len(ang), dtype=bool)
        for (cx, cy), rr in zip(union.centers, union.radii):
            cov |= np.hypot(px - cx, py - cy) < rr + 1e-9
        assert cov.all()


def test_implied_floors_silent_and_loud():
    k = SignalKernel("inverse-square", C=1.0, beta=0.71)
    z = np.array([0.0, 4.0, 0.0])
    floors = implied_floors(k, z)
    assert floors[0] == 0.71 and floors[2] == 0.71
    assert math.isclose(floors[1], 0.5, rel_tol=1e-12)  # sqrt(1/4)
    # floors never exceed the cutoff even for tiny readings
    floors = implied_floors(k, np.array([1e-9]))
    assert floors[0] == 0.71


# ---------------------------------------------------------------------------
# joint step certification


KERNELS = {
    "g": SignalKernel("inverse-square", C=1.0, beta=40.0),
    "r": SignalKernel("inverse-square", C=1.0, beta=0.71),
    "o": SignalKernel("inverse-square", C=1.0, beta=1.6),
    "e": SignalKernel("inverse-square", C=0.8, beta=1.2),
}
SAFE = {"g": 1.0, "r": 0.6, "o": 1.0, "e": 0.6}
D_MAX = 0.09


def frame_from_sources(center, heading, p, sources):
    """Noiseless unoccluded frame over explicit per-kind source lists, with
    the boundary pushed far away so e stays silent unless provided."""
    body = np.asarray(symmetric_sensor_angles(p))
    pos = sensor_positions(center, heading, R_R, body)
    readings = {}
    for kind in ("g", "r", "o"):
        pts = np.asarray(sources.get(kind, np.empty((0, 2))), dtype=float).reshape(-1, 2)
        z = np.zeros(p)
        for cx, cy in pts:
            z += KERNELS[kind].evaluate(np.hypot(pos[:, 0] - cx, pos[:, 1] - cy))
        readings[kind] = z
    readings["e"] = np.asarray(sources.get("e", np.zeros(p)), dtype=float)
    return SensorFrame(center=tuple(center), heading=heading, radius=R_R,
                       body_angles=body, positions=pos, readings=readings)


def constraints(frame):
    return StepConstraints(frame, KERNELS, SAFE, D_MAX)


def test_certified_steps_never_violate_true_distance():
    """Against randomized true source layouts: walk every certified step to
    its endpoint and measure real distances. Certification must be sound for
    any source placement consistent with the readings, in particular the
    true one."""
    rng = np.random.default_rng(17)
    checked = 0
    while checked < 250:
        center = rng.uniform(-1, 1, 2)
        robots = rng.uniform(-2.5, 2.5, (rng.integers(0, 4), 2))
        obstacles = rng.uniform(-3, 3, (rng.integers(0, 3), 2))
        keep = {"r": SAFE["r"], "o": SAFE["o"]}
        ok = all(np.hypot(*(center - q)) > keep["r"] + 1e-6 for q in robots) and all(
            np.hypot(*(center - q)) > keep["o"] + 1e-6 for q in obstacles
        )
        if not ok:
            continue
        frame = frame_from_sources(center, rng.uniform(0, 6.28), 5,
                                   {"r": robots, "o": obstacles})
        con = constraints(frame)
        thetas = rng.uniform(0, 2 * math.pi, 40)
        steps = con.evaluate(thetas, 0.09)
        for th, sp in zip(thetas, steps):
            if sp <= 0:
                continue
            end = center + sp * np.array([math.cos(th), math.sin(th)])
            for q in robots:
                # the neighbor may also move d_max toward us
                assert np.hypot(*(end - q)) >= SAFE["r"] + D_MAX - 1e-9
            for q in obstacles:
                assert np.hypot(*(end - q)) >= SAFE["o"] - 1e-9
        checked += 1


def test_mixed_frame_matches_exhaustive_cap():
    """Certified cap along single bearings equals an exhaustive grid walk of
    the same union geometry (the certifier's own floors), within bisection
    resolution."""
    rng = np.random.default_rng(23)
    for _ in range(40):
        center = rng.uniform(-0.5, 0.5, 2)
        robots = rng.uniform(-1.6, 1.6, (2, 2))
        if min(np.hypot(*(center - q)) for q in robots) < SAFE["r"] + 0.05:
            continue
        frame = frame_from_sources(center, 0.0, 5, {"r": robots})
        con = constraints(frame)
        theta = float(rng.uniform(0, 2 * math.pi))
        cap = 0.09
        got = con.evaluate_one(theta, cap)
        # grid walk against the same exclusion unions
        u = np.array([math.cos(theta), math.sin(theta)])
        lengths = np.linspace(0.0, cap, 2000)
        pts = center[None, :] + lengths[:, None] * u[None, :]
        ok = np.ones(len(lengths), dtype=bool)
        for g in con.groups:
            ok &= g.clearance(pts) >= g.keep_out
        admissible = lengths[ok]
        ref = float(admissible.max()) if len(admissible) else 0.0
        # certified result may be below the grid optimum (bisection stops
        # early) but must never exceed it, and must be close
        assert got <= ref + cap / 1999 + 1e-12
        assert got >= ref - cap / 8 - 1e-12


def test_approach_cap_stops_at_the_keep_out_edge():
    """Walking straight at a heard neighbor, the certified step is exactly
    the gap between the current position and the keep-out surface, and the
    endpoint itself is certified against every group."""
    center = np.array([0.0, 0.0])
    q = np.array([0.75, 0.0])
    frame = frame_from_sources(center, 0.0, 5, {"r": np.array([q])})
    con = constraints(frame)
    cap = 0.09
    step = con.evaluate_one(0.0, cap)
    # implied floor understates 0.75 a little (aggregation is conservative),
    # so the certified gap is at most the true 0.06 and close to it
    assert 0.0 < step <= 0.75 - (SAFE["r"] + D_MAX) + 1e-9
    assert step >= 0.02
    end = center + step * np.array([1.0, 0.0])
    for g in con.groups:
        assert float(g.clearance(end[None, :])[0]) >= g.keep_out - 1e-9


def test_iso_margin_certifies_every_direction():
    rng = np.random.default_rng(31)
    for _ in range(50):
        center = rng.uniform(-0.5, 0.5, 2)
        robots = rng.uniform(-1.8, 1.8, (2, 2))
        if min(np.hypot(*(center - q)) for q in robots) < SAFE["r"] + 0.02:
            continue
        frame = frame_from_sources(center, 0.0, 5, {"r": robots})
        con = constraints(frame)
        iso = min(con.iso)
        if iso <= 0:
            continue
        step = min(iso, 0.09)
        ang = np.linspace(0, 2 * math.pi, 100, endpoint=False)
        caps = con.evaluate(ang, step)
        assert (caps >= step - 1e-9).all()


def test_worst_margin_reports_negative_without_refusing():
    # a robot whose aggregate readings claim a violation still gets a ranking
    center = np.array([0.0, 0.0])
    crowd = np.array([[0.55, 0.0], [-0.52, 0.1], [0.1, 0.56], [-0.1, -0.54]])
    frame = frame_from_sources(center, 0.0, 5, {"r": crowd})
    con = constraints(frame)
    thetas = np.linspace(0, 2 * math.pi, 72, endpoint=False)
    worst = con.worst_margin(thetas, 0.02)
    assert len(worst) == 72
    assert np.isfinite(worst).all()
    # all step certification refuses here (inside someone's keep-out)
    assert con.evaluate(thetas, 0.09).max() == 0.0
    assert worst.min() < 0.0


def test_silent_iso_matches_explicit_computation():
    # the all-silent fast path must agree with a from-scratch union build at
    # an arbitrary heading
    for heading in (0.0, 0.37, 2.1):
        frame = frame_from_sources(np.array([7.0, 5.0]), heading, 5, {})
        con = constraints(frame)
        for g, iso in zip(con.groups, con.iso):
            explicit = g.clearance_point(7.0, 5.0) - g.keep_out
            assert math.isclose(iso, explicit, rel_tol=0, abs_tol=1e-9)
