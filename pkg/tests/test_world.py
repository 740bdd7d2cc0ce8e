"""Scenario schema, validation, and generation."""

import json
import math

import pytest

from swarmcap.bounds import min_target_separation, validate_all
from swarmcap.signals import SignalKernel
from swarmcap.world import (
    ScenarioError,
    load_scenario,
    random_scenario,
    scenario_to_document,
    symmetric_sensor_angles,
    validate_geometry,
    with_sensor_count,
)

BASELINE = "scenarios/baseline.json"


def _read(path):
    with open(path) as fh:
        return fh.read()


def test_baseline_document_shape():
    s = load_scenario(_read(BASELINE))
    assert len(s.robots) == 18
    assert len(s.targets) == 3
    assert len(s.obstacles) == 6
    assert s.task.max_ticks == 1500
    assert all(t.quota == 6 for t in s.targets)
    assert validate_geometry(s) == []
    assert all(c.passed for c in validate_all(s))


def test_document_roundtrip_is_stable():
    doc1 = scenario_to_document(load_scenario(_read(BASELINE)))
    doc2 = scenario_to_document(load_scenario(doc1))
    assert doc1 == doc2


def test_unknown_key_rejected():
    doc = json.loads(_read(BASELINE))
    doc["frobnicate"] = 1
    with pytest.raises(ScenarioError, match="frobnicate"):
        load_scenario(json.dumps(doc))


def test_missing_required_key_names_field():
    doc = json.loads(_read(BASELINE))
    del doc["targets"][0]["center"]
    with pytest.raises(ScenarioError, match="center"):
        load_scenario(json.dumps(doc))


def test_malformed_json_is_a_scenario_error():
    with pytest.raises(ScenarioError):
        load_scenario("{not json")


def test_bad_task_values_rejected():
    doc = json.loads(_read(BASELINE))
    doc["task"]["max_ticks"] = -5
    with pytest.raises(ScenarioError, match="max_ticks"):
        load_scenario(json.dumps(doc))
    doc = json.loads(_read(BASELINE))
    doc["task"]["occlusion_eta"] = 1.5
    with pytest.raises(ScenarioError, match="occlusion"):
        load_scenario(json.dumps(doc))
    doc = json.loads(_read(BASELINE))
    doc["task"]["scheduler"] = "half-duplex"
    with pytest.raises(ScenarioError, match="scheduler"):
        load_scenario(json.dumps(doc))


def test_symmetric_sensor_angles():
    for p in range(3, 12):
        a = symmetric_sensor_angles(p)
        assert len(a) == p
        gaps = [(a[(i + 1) % p] - a[i]) % (2.0 * math.pi) for i in range(p)]
        assert all(math.isclose(g, 2.0 * math.pi / p, abs_tol=1e-12) for g in gaps)


def test_random_scenario_counts_and_validity():
    s = random_scenario((18, 3, 6), rng_seed=7)
    assert (len(s.robots), len(s.targets), len(s.obstacles)) == (18, 3, 6)
    assert validate_geometry(s) == []
    assert all(c.passed for c in validate_all(s))
    # quota splits the swarm evenly
    assert sum(t.quota for t in s.targets) == 18


def test_random_scenario_is_deterministic_in_seed():
    a = scenario_to_document(random_scenario((12, 2, 3), rng_seed=11))
    b = scenario_to_document(random_scenario((12, 2, 3), rng_seed=11))
    c = scenario_to_document(random_scenario((12, 2, 3), rng_seed=12))
    assert a == b
    assert a != c


def test_large_scenario_places():
    s = random_scenario((100, 15, 10), rng_seed=1)
    assert (len(s.robots), len(s.targets), len(s.obstacles)) == (100, 15, 10)
    assert validate_geometry(s) == []


def test_impossible_packing_fails():
    # 50 targets in a 10x10 box cannot honor the multi-target separation
    with pytest.raises(ScenarioError):
        random_scenario((2, 50, 0), rng_seed=0, boundary=(10.0, 10.0))


def test_with_sensor_count_rewrites_every_robot():
    s = load_scenario(_read(BASELINE))
    s7 = with_sensor_count(s, 7)
    assert all(r.p == 7 for r in s7.robots)
    assert len(s7.robots) == len(s.robots)
    # placement and task untouched
    assert s7.robots[0].center == s.robots[0].center
    assert s7.task == s.task


def test_separation_bound_feeds_generation():
    s = load_scenario(_read(BASELINE))
    kern = SignalKernel.from_spec(s.kernels["g"])
    t = s.targets[0]
    need = min_target_separation(
        kern, len(s.targets), t.safe_radius, t.encap_radius,
        s.robots[0].radius, s.robots[0].p, s.task.max_step,
    )
    for i in range(len(s.targets)):
        for j in range(i + 1, len(s.targets)):
            ci, cj = s.targets[i].center, s.targets[j].center
            assert math.hypot(ci[0] - cj[0], ci[1] - cj[1]) >= need - 1e-9
