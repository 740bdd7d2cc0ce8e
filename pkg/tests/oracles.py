"""Independent oracles for derived values.

Everything here is deliberately written against first principles (arbitrary
precision arithmetic, finite differences, dense sweeps, Monte Carlo), never
by calling the package code under test, so agreement is evidence rather than
tautology.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np

mp.mp.dps = 50


# ---------------------------------------------------------------------------
# arbitrary-precision closed forms


def mp_virtual_source_distance(d_sk, r_r, half_gap) -> float:
    d_sk, r_r, half_gap = mp.mpf(d_sk), mp.mpf(r_r), mp.mpf(half_gap)
    return float(r_r * mp.cos(half_gap) + mp.sqrt(d_sk**2 - (r_r * mp.sin(half_gap)) ** 2))


def mp_global_step_bound(r_r, r_safe, p) -> float:
    r_r, r_safe = mp.mpf(r_r), mp.mpf(r_safe)
    c = mp.cos(mp.pi / p)
    chord = mp.sqrt(r_safe**2 + r_r**2 - 2 * r_r * r_safe * c)
    return float((r_safe + r_r * c) / 2 - chord / 2)


def mp_influence_band(r_r, r_safe, p, d_max) -> tuple[float, float]:
    r_r, r_safe, d_max = mp.mpf(r_r), mp.mpf(r_safe), mp.mpf(d_max)
    c = mp.cos(mp.pi / p)
    chord = mp.sqrt(r_safe**2 + r_r**2 - 2 * r_r * r_safe * c)
    return float(chord + 2 * d_max), float(r_safe + r_r * c)


def mp_min_safe_radius(r_r, p) -> float:
    r_r = mp.mpf(r_r)
    return float(3 * mp.sqrt(2) * r_r * mp.sin(mp.pi / p))


def mp_obstacle_separation(r_o, r_r, r_o_safe, p, d_max) -> float:
    r_o, r_r, r_o_safe, d_max = mp.mpf(r_o), mp.mpf(r_r), mp.mpf(r_o_safe), mp.mpf(d_max)
    adj = mp.sqrt(r_o_safe**2 + r_r**2 - 2 * r_r * r_o_safe * mp.cos(mp.pi / p))
    return float(2 * r_o + 2 * (r_r + adj) + d_max)


def mp_point_signal(C, d) -> float:
    return float(mp.mpf(C) / mp.mpf(d) ** 2)


# ---------------------------------------------------------------------------
# the two worst-case target-field inequalities, solved independently
#
# Both are gradient-magnitude conditions on the ring of one target when the
# other m-1 targets sit at separation D.  Write g(d) for the single-source
# gradient magnitude (inverse-square field: g(d) = 2C/d^3).
#
# Near-side dominance (worst case: all others directly opposite, eroding the
# home pull at the inner radius): the depleted inner gradient must still beat
# the undepleted outer one,
#   g(r_safe) - (m-1) * g(D - r_safe)  >  g(r_encap)
# Far-side non-dominance (worst case: all others stacked behind the outer
# radius, inflating the pull there): the inflated outer gradient must stay
# below the inner one,
#   g(r_encap) + (m-1) * g(D - r_encap)  <  g(r_safe)
#
# Each residual below is (lhs - rhs) of the corresponding inequality and is
# strictly increasing in D, so the feasibility threshold is its unique root.


def eq7_residual(D, C, m, r_safe, r_encap):
    g = lambda d: 2 * mp.mpf(C) / mp.mpf(d) ** 3
    return g(r_safe) - (m - 1) * g(mp.mpf(D) - r_safe) - g(r_encap)


def eq8_residual(D, C, m, r_safe, r_encap):
    g = lambda d: 2 * mp.mpf(C) / mp.mpf(d) ** 3
    return g(r_safe) - g(r_encap) - (m - 1) * g(mp.mpf(D) - r_encap)


def bisect_root(fn, lo, hi, iters=200) -> float:
    lo, hi = mp.mpf(lo), mp.mpf(hi)
    flo = fn(lo)
    for _ in range(iters):
        mid = (lo + hi) / 2
        fm = fn(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return float((lo + hi) / 2)


def mp_target_separation_caseI(C, m, r_safe, r_encap) -> float:
    """Root of the near-side dominance residual, by bisection.

    The closed form D = r_safe * (1 + ((m-1) / (1 - (r_safe/r_encap)^3))^(1/3))
    must agree with this; for m=3, r_safe=1, r_encap=2 the root is 2.31729..."""
    if m <= 1:
        return 0.0
    return bisect_root(
        lambda D: eq7_residual(D, C, m, r_safe, r_encap), r_safe * (1 + 1e-9), r_safe * 1e6
    )


def mp_target_separation_caseII(C, m, r_safe, r_encap) -> float:
    """Root of the far-side non-dominance residual, by bisection.

    Closed form D = r_encap * (1 + ((m-1) / ((r_encap/r_safe)^3 - 1))^(1/3));
    for m=3, r_safe=1, r_encap=2 the root is 3.317268..."""
    if m <= 1:
        return 0.0
    return bisect_root(
        lambda D: eq8_residual(D, C, m, r_safe, r_encap), r_encap * (1 + 1e-9), r_encap * 1e6
    )


# ---------------------------------------------------------------------------
# finite differences


def fd_gradient(fn, x, y, h=1e-5) -> tuple[float, float]:
    gx = (fn(x + h, y) - fn(x - h, y)) / (2 * h)
    gy = (fn(x, y + h) - fn(x, y - h)) / (2 * h)
    return gx, gy


def fd_hessian(fn, x, y, h=1e-4) -> np.ndarray:
    fxx = (fn(x + h, y) - 2 * fn(x, y) + fn(x - h, y)) / h**2
    fyy = (fn(x, y + h) - 2 * fn(x, y) + fn(x, y - h)) / h**2
    fxy = (fn(x + h, y + h) - fn(x + h, y - h) - fn(x - h, y + h) + fn(x - h, y - h)) / (4 * h**2)
    return np.array([[fxx, fxy], [fxy, fyy]])


def spectral_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2))


# ---------------------------------------------------------------------------
# dense sweeps


def sweep_virtual_source_distance(d_sk, r_r, half_gap, n=200001) -> float:
    """Minimum possible center-to-source distance given a reading that puts
    the source at exactly d_sk from the sensor, with the source known to lie
    within half_gap (angularly) of the sensor's bearing as seen from the
    robot center. Dense sweep over candidate source angles."""
    sensor = np.array([r_r, 0.0])
    best = math.inf
    for ang in np.linspace(-half_gap, half_gap, n):
        # source on the circle of radius d_sk around the sensor, at the
        # angular position (about the sensor) that puts it at body angle ang
        # seen from the center and *beyond* the sensor; the nearest
        # consistent position is along the ray from center at angle ang at
        # center distance t solving |t*u - sensor| = d_sk (larger root).
        ux, uy = math.cos(ang), math.sin(ang)
        b = sensor[0] * ux + sensor[1] * uy
        disc = b * b - (r_r * r_r - d_sk * d_sk)
        if disc < 0:
            continue
        t = b + math.sqrt(disc)
        best = min(best, t)
    return best


def sweep_step_intervals(b0, psi, keep_out, d_max, resolution=1e-4) -> list[tuple[float, float]]:
    """Admissible step distances in [0, d_max] keeping the post-step point
    outside the keep-out disk, by brute-force sweep."""
    cx, cy = b0 * math.cos(psi), b0 * math.sin(psi)
    out: list[tuple[float, float]] = []
    start = None
    steps = np.arange(0.0, d_max + resolution, resolution)
    for d in steps:
        ok = math.hypot(d - cx, -cy) >= keep_out
        if ok and start is None:
            start = d
        elif not ok and start is not None:
            out.append((start, prev))
            start = None
        prev = d
    if start is not None:
        out.append((start, steps[-1]))
    return out


def max_safe_step_brute(sources: list[tuple[float, float, float]], theta, d_max, resolution=1e-5) -> float:
    """Largest d in [0, d_max] (contiguous from 0) with the post-step origin
    point at distance >= keep_out from every source disk (cx, cy, keep_out)."""
    ux, uy = math.cos(theta), math.sin(theta)
    d = 0.0
    while d <= d_max + 1e-12:
        px, py = d * ux, d * uy
        if any(math.hypot(px - cx, py - cy) < keep - 1e-12 for cx, cy, keep in sources):
            return max(0.0, d - resolution)
        d += resolution
    return d_max


# ---------------------------------------------------------------------------
# Monte Carlo for the truncated noise model


def truncated_gaussian_moments(sigma, n=200000, seed=0) -> tuple[float, float]:
    """(mean, rms) of n ~ N(0, sigma^2) resampled until n <= 1."""
    if sigma == 0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    out = np.empty(n)
    filled = 0
    while filled < n:
        draw = rng.normal(0.0, sigma, size=n)
        draw = draw[draw <= 1.0]
        take = min(len(draw), n - filled)
        out[filled : filled + take] = draw[:take]
        filled += take
    return float(out.mean()), float(np.sqrt((out**2).mean()))


# ---------------------------------------------------------------------------
# simplex gradient reference (straight least-squares on the affine model)


def simplex_gradient_reference(points, values) -> np.ndarray:
    """Gradient of the exact affine interpolant through three (point, value)
    samples, via a generic linear solve on [1 x y] coefficients."""
    A = np.array([[1.0, px, py] for px, py in points])
    coef = np.linalg.solve(A, np.asarray(values, dtype=float))
    return coef[1:]


def spearman_rho(xs, ys) -> float:
    """Spearman rank correlation without scipy.stats (independent check)."""
    xr = np.argsort(np.argsort(xs)).astype(float)
    yr = np.argsort(np.argsort(ys)).astype(float)
    xc = xr - xr.mean()
    yc = yr - yr.mean()
    denom = math.sqrt(float((xc**2).sum() * (yc**2).sum()))
    return float((xc * yc).sum() / denom) if denom else 0.0
