"""Deterministic 2D swarm simulator and parameter validator for decentralized
multi-source encapsulation with minimalist robots.

The package is organized one module per concern:

- ``geometry``  — circle/angle primitives shared by everything else
- ``world``     — scenario types, loading, geometric validation, random generation
- ``signals``   — signal kernels, superposed fields, sensing with noise/occlusion
- ``safety``    — virtual-source construction and step-size safety bounds
- ``gradients`` — simplex gradients, error bound, bearing estimate, zone labels
- ``policy``    — the per-tick reactive control law
- ``bounds``    — deployment-parameter checks and separation bounds
- ``engine``    — tick loop, encapsulation events, metrics
- ``cli``       — run / sweep / validate command-line front end
"""

from swarmcap.world import (
    Scenario,
    RobotSpec,
    TargetSpec,
    ObstacleSpec,
    TaskParams,
    load_scenario,
    scenario_to_document,
    validate_geometry,
    random_scenario,
)
from swarmcap.signals import SignalKernel, SensorFrame
from swarmcap.engine import Metrics, run

__all__ = [
    "Scenario",
    "RobotSpec",
    "TargetSpec",
    "ObstacleSpec",
    "TaskParams",
    "SignalKernel",
    "SensorFrame",
    "Metrics",
    "load_scenario",
    "scenario_to_document",
    "validate_geometry",
    "random_scenario",
    "run",
]
