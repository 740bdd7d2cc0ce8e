"""Design-bound formulas against arbitrary-precision and bisection oracles."""

import math
from dataclasses import replace

import mpmath as mp
import numpy as np
import pytest

from swarmcap.bounds import (
    check_condition1,
    check_condition2,
    min_obstacle_separation,
    min_safe_radius,
    min_target_separation,
    sensor_coverage_radius,
    target_separation_bisection,
    target_separation_cases,
    target_separation_chaining,
    validate_all,
)
from swarmcap.signals import SignalKernel
from swarmcap.world import load_scenario
from oracles import (
    mp_min_safe_radius,
    mp_obstacle_separation,
    mp_target_separation_caseI,
    mp_target_separation_caseII,
)

INV = SignalKernel("inverse-square", C=1.0, beta=40.0)


def test_condition1_reference_values():
    ok, v = check_condition1(0.5, math.pi / 4)  # p = 8 symmetric
    assert ok
    assert math.isclose(v, math.sqrt(2) * 0.5 * math.sin(math.pi / 8), rel_tol=1e-12)
    assert math.isclose(v, 0.270598, abs_tol=5e-7)
    ok, v = check_condition1(2.0, math.pi)
    assert not ok
    assert math.isclose(v, 2.0 * math.sqrt(2.0), rel_tol=1e-12)


def test_condition2_fails_when_range_reaches_the_singularity():
    ok, worst, at = check_condition2(INV, 0.5, 4, 0.01, 3.0)
    assert not ok
    assert at < 0.2
    # healthy range passes
    ok, worst, _ = check_condition2(INV, 0.25, 5, 0.7, 12.0)
    assert ok
    assert worst <= 1.0


def test_condition2_matches_direct_evaluation():
    # worst ratio over the sampled range equals a dense recomputation
    d = np.arange(0.5, 8.0, 1e-3)
    delta_h = 2.0 * 0.25 * math.sin(math.pi / 5)
    ratio = (INV.hessian_norm(d) * delta_h / math.sqrt(2)) / INV.gradient_magnitude(d)
    _, worst, at = check_condition2(INV, 0.25, 5, 0.5, 8.0)
    assert math.isclose(worst, float(ratio.max()), rel_tol=1e-9)
    assert math.isclose(at, float(d[np.argmax(ratio)]), abs_tol=2e-3)


def test_min_safe_radius_reference():
    got = min_safe_radius(0.5, 8)
    assert math.isclose(got, mp_min_safe_radius(0.5, 8), rel_tol=1e-12)
    assert math.isclose(got, 0.811797, abs_tol=5e-7)


def test_obstacle_separation_reference():
    got = min_obstacle_separation(1.0, 0.5, 1.5, 8, 0.4)
    assert math.isclose(got, mp_obstacle_separation(1.0, 0.5, 1.5, 8, 0.4), rel_tol=1e-12)
    assert math.isclose(got, 5.51110, abs_tol=5e-5)


def test_target_separation_closed_form_matches_bisection():
    rng = np.random.default_rng(0)
    for _ in range(200):
        r_safe = rng.uniform(0.4, 2.0)
        r_encap = r_safe * rng.uniform(1.3, 4.0)
        m = int(rng.integers(2, 7))
        C = rng.uniform(0.3, 5.0)
        k = SignalKernel("inverse-square", C=C, beta=1e6)
        near_c, far_c = target_separation_cases(k, m, r_safe, r_encap)
        near_b, far_b = target_separation_bisection(k, m, r_safe, r_encap)
        assert math.isclose(near_c, near_b, rel_tol=1e-8)
        assert math.isclose(far_c, far_b, rel_tol=1e-8)


def test_target_separation_against_independent_roots():
    near, far = target_separation_cases(INV, 3, 1.0, 2.0)
    assert math.isclose(near, mp_target_separation_caseI(1.0, 3, 1.0, 2.0), rel_tol=1e-10)
    assert math.isclose(far, mp_target_separation_caseII(1.0, 3, 1.0, 2.0), rel_tol=1e-10)
    assert math.isclose(near, 2.317267512016699, rel_tol=1e-12)
    assert math.isclose(far, 3.317267512016699, rel_tol=1e-12)


def test_separation_thresholds_actually_separate_gradients():
    """At the computed separation the defining inequalities hold with
    equality; slightly wider passes strictly, slightly narrower fails."""
    m, r_safe, r_encap = 3, 1.0, 2.0
    g = INV.gradient_magnitude
    near, far = target_separation_cases(INV, m, r_safe, r_encap)
    for D, fn in (
        (near, lambda D: g(r_safe) - (m - 1) * g(D - r_safe) - g(r_encap)),
        (far, lambda D: g(r_safe) - g(r_encap) - (m - 1) * g(D - r_encap)),
    ):
        assert abs(fn(D)) < 1e-9
        assert fn(D * 1.01) > 0.0
        assert fn(D * 0.99) < 0.0


def test_chaining_counts_both_rings_and_bodies():
    got = target_separation_chaining(2.0, 1.0, 0.25, 5, 0.09)
    adj = math.sqrt(1.0 + 0.25**2 - 2 * 0.25 * math.cos(math.pi / 5))
    assert math.isclose(got, 2 * 2.0 + 2 * (0.25 + adj) + 0.09, rel_tol=1e-12)
    # binding rule is the max of the three
    k = INV
    assert min_target_separation(k, 3, 1.0, 2.0, 0.25, 5, 0.09) == max(
        *target_separation_cases(k, 3, 1.0, 2.0),
        target_separation_chaining(2.0, 1.0, 0.25, 5, 0.09),
    )


def test_sensor_coverage_radius_is_law_of_cosines():
    got = sensor_coverage_radius(0.6, 0.18, 0.25, 5)
    D = 0.78
    ref = math.sqrt(D * D + 0.0625 - 2 * D * 0.25 * math.cos(math.pi / 5))
    assert math.isclose(got, ref, rel_tol=1e-12)


# ---------------------------------------------------------------------------
# scenario-level checker


def _baseline():
    with open("scenarios/baseline.json") as fh:
        return load_scenario(fh.read())


def test_validate_all_passes_baseline():
    checks = validate_all(_baseline())
    assert len(checks) >= 10
    assert all(c.passed for c in checks), [c.name for c in checks if not c.passed]


def test_validate_all_names_are_stable_identifiers():
    names = [c.name for c in validate_all(_baseline())]
    assert len(names) == len(set(names))
    assert all(n == n.lower() and " " not in n for n in names)


def test_validate_all_flags_close_targets():
    s = _baseline()
    # drag target 1 toward target 0 until below the separation bound
    t0, t1 = s.targets[0], s.targets[1]
    c0 = np.array(t0.center)
    c1 = np.array(t1.center)
    kern = SignalKernel.from_spec(s.kernels["g"])
    need = min_target_separation(kern, 3, t0.safe_radius, t0.encap_radius,
                                 s.robots[0].radius, s.robots[0].p, s.task.max_step)
    new1 = tuple(c0 + (c1 - c0) / np.linalg.norm(c1 - c0) * (need * 0.99))
    targets = (t0, replace(t1, center=new1), s.targets[2])
    bad = replace(s, targets=targets)
    failing = [c for c in validate_all(bad) if not c.passed]
    assert any("target" in c.name and "separation" in c.name for c in failing), (
        [c.name for c in failing]
    )


def test_validate_all_flags_oversized_step():
    s = _baseline()
    bad = replace(s, task=replace(s.task, max_step=1.0))
    failing = [c.name for c in validate_all(bad) if not c.passed]
    assert failing
