"""Simplex gradient estimation from sensor intensities and the zone logic
built on top of it.

A robot never differentiates anything analytically; it fits a plane through
the intensities at three adjacent sensors (the strongest one and its two ring
neighbors) and uses that plane's slope as the field gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from swarmcap.signals import SensorFrame, SignalKernel


def simplex_gradient(frame: SensorFrame, kind: str) -> tuple[float, float, int]:
    """Least-degenerate local gradient estimate: plane fit through the
    strongest sensor (the base) and its two ring neighbors. Returns
    (gx, gy, base_index). Three distinct points on a circle are never
    collinear, so the 2x2 system is well posed for p >= 3."""
    z = frame.readings[kind]
    base = int(np.argmax(z))
    lo = (base - 1) % frame.p
    hi = (base + 1) % frame.p
    x0, y0 = frame.positions[base]
    a11 = frame.positions[lo, 0] - x0
    a12 = frame.positions[lo, 1] - y0
    a21 = frame.positions[hi, 0] - x0
    a22 = frame.positions[hi, 1] - y0
    b1 = float(z[lo] - z[base])
    b2 = float(z[hi] - z[base])
    det = a11 * a22 - a12 * a21
    if abs(det) < 1e-15:
        raise ValueError("degenerate sensor simplex")
    gx = (b1 * a22 - b2 * a12) / det
    gy = (a11 * b2 - a21 * b1) / det
    return gx, gy, base


def simplex_diameter(frame: SensorFrame, base: int) -> float:
    """Longest edge from the base vertex of the estimation simplex."""
    lo = (base - 1) % frame.p
    hi = (base + 1) % frame.p
    x0, y0 = frame.positions[base]
    d1 = math.hypot(frame.positions[lo, 0] - x0, frame.positions[lo, 1] - y0)
    d2 = math.hypot(frame.positions[hi, 0] - x0, frame.positions[hi, 1] - y0)
    return max(d1, d2)


def gradient_error_bound(lipschitz: float, delta_h: float, k: int = 2) -> float:
    """Worst-case norm error of a k-point simplex gradient of a field whose
    gradient is lipschitz-continuous: sqrt(k) * L * delta_h / 2."""
    return math.sqrt(k) * lipschitz * delta_h / 2.0


def los_direction(frame: SensorFrame, kind: str) -> tuple[float, float, int]:
    """(bearing of steepest intensity ascent, gradient magnitude, base index).
    The bearing points at the strongest source to within the estimation
    error; callers gate on zone before trusting it."""
    gx, gy, base = simplex_gradient(frame, kind)
    mag = math.hypot(gx, gy)
    return math.atan2(gy, gx) % (2.0 * math.pi), mag, base


@dataclass(frozen=True)
class ZoneInfo:
    zone: str  # dead | secondary | ring | safety_violation
    inner: bool  # ring only: estimated magnitude already beyond the overshoot guard
    magnitude: float
    base: int


def classify_zone(
    frame: SensorFrame,
    kernel_g: SignalKernel,
    r_safe: float,
    r_encap: float,
    d_max: float,
) -> ZoneInfo:
    """Behavioral region from target-field intensities alone.

    dead: no target intensity at any sensor. secondary: gradient estimate
    below the single-source magnitude at the outer ring radius. ring: between
    the outer and inner thresholds; the inner flag marks estimates past the
    overshoot guard radius r_encap - d_max. safety_violation: at or above the
    inner threshold."""
    z = frame.readings["g"]
    base = int(np.argmax(z))
    if z[base] <= 0.0:
        return ZoneInfo("dead", False, 0.0, base)
    gx, gy, base = simplex_gradient(frame, "g")
    mag = math.hypot(gx, gy)
    if mag >= kernel_g.gradient_magnitude(r_safe):
        return ZoneInfo("safety_violation", True, mag, base)
    if mag < kernel_g.gradient_magnitude(r_encap):
        return ZoneInfo("secondary", False, mag, base)
    inner = mag > kernel_g.gradient_magnitude(r_encap - d_max)
    return ZoneInfo("ring", inner, mag, base)
