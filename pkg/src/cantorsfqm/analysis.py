"""Parameter scans and the derived diagnostics built on them.

Scans are evaluated in fixed-size chunks of the k grid.  Chunk boundaries do
not depend on the worker count, so parallel and sequential runs give
bit-identical arrays.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks, peak_widths

from .errors import InputError
from .geometry import PotentialSpec, barrier_height
from .scattering import transmission_curve

CHUNK = 4096


@dataclass(frozen=True)
class Scan1D:
    alpha: float
    k: np.ndarray
    T: np.ndarray
    R: np.ndarray
    log10_T: np.ndarray
    spec: PotentialSpec | None = None


@dataclass(frozen=True)
class ScanGrid:
    alphas: np.ndarray
    ks: np.ndarray
    values: np.ndarray  # (len(alphas), len(ks)), alpha-major
    spec: PotentialSpec | None = None

    def __post_init__(self):
        if self.values.shape != (len(self.alphas), len(self.ks)):
            raise InputError("ScanGrid values must have shape (len(alphas), len(ks))")

    def row(self, i: int) -> Scan1D:
        T = self.values[i]
        return Scan1D(float(self.alphas[i]), self.ks, T, 1.0 - T, np.log10(T), self.spec)


@dataclass(frozen=True)
class KInterval:
    k_lo: float
    k_hi: float
    quality: float

    def __post_init__(self):
        if not self.k_lo < self.k_hi:
            raise InputError(f"interval needs k_lo < k_hi, got [{self.k_lo}, {self.k_hi}]")

    @property
    def width(self) -> float:
        return self.k_hi - self.k_lo


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    alpha: float
    log10k: np.ndarray
    log10R: np.ndarray
    envelope: np.ndarray = field(repr=False)  # bool mask of the per-bin maxima
    bins_used: int = 0

    @property
    def expected_slope(self) -> float:
        return -4.0 * (self.alpha - 1.0) / self.alpha

    def summary(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "expected_slope": self.expected_slope,
            "alpha": self.alpha,
            "bins_used": self.bins_used,
            # same fit with the axis taken as sqrt(E) = k^(alpha/2)
            "slope_vs_sqrt_energy": self.slope * 2.0 / self.alpha,
        }


def _chunk(args):
    spec, alpha, ks = args
    c = transmission_curve(spec, alpha, ks)
    return c["T"], c["R"], c["log10_T"]


def evaluate(spec: PotentialSpec, alpha: float, ks, workers: int = 1):
    """``(T, R, log10_T)`` on ``ks``; chunked so the result ignores ``workers``."""
    ks = np.asarray(ks, dtype=float)
    jobs = [(spec, alpha, ks[i : i + CHUNK]) for i in range(0, ks.size, CHUNK)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, jobs))
    else:
        parts = [_chunk(j) for j in jobs]
    if not parts:
        empty = np.empty(0)
        return empty, empty, empty
    return tuple(np.concatenate(p) for p in zip(*parts))


def _check_range(k_lo: float, k_hi: float, n: int) -> None:
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise InputError(f"need n >= 2 grid points, got {n}")
    if not (math.isfinite(k_lo) and math.isfinite(k_hi) and 0 < k_lo < k_hi):
        raise InputError(f"need 0 < k_lo < k_hi, got [{k_lo}, {k_hi}]")


def k_grid(k_lo: float, k_hi: float, n: int) -> np.ndarray:
    _check_range(k_lo, k_hi, n)
    return np.linspace(k_lo, k_hi, int(n))


def scan_1d(spec: PotentialSpec, alpha: float, k_lo: float, k_hi: float, n: int, workers: int = 1) -> Scan1D:
    ks = k_grid(k_lo, k_hi, n)
    T, R, lt = evaluate(spec, alpha, ks, workers)
    return Scan1D(float(alpha), ks, T, R, lt, spec)


def scan_2d(
    spec: PotentialSpec,
    alpha_lo: float,
    alpha_hi: float,
    n_alpha: int,
    k_lo: float,
    k_hi: float,
    n_k: int,
    workers: int = 1,
) -> ScanGrid:
    """Transmission over an ``alpha x k`` grid; one row per Levy index."""
    if isinstance(n_alpha, bool) or int(n_alpha) != n_alpha or n_alpha < 1:
        raise InputError(f"need n_alpha >= 1, got {n_alpha}")
    if n_alpha == 1:
        if not 1 < alpha_lo <= 2:
            raise InputError(f"need 1 < alpha <= 2, got {alpha_lo}")
        alphas = np.array([float(alpha_lo)])
    else:
        if not 1 < alpha_lo < alpha_hi <= 2:
            raise InputError(f"need 1 < alpha_lo < alpha_hi <= 2, got [{alpha_lo}, {alpha_hi}]")
        alphas = np.linspace(alpha_lo, alpha_hi, int(n_alpha))
    ks = k_grid(k_lo, k_hi, n_k)
    jobs = [(spec, float(a), ks[i : i + CHUNK]) for a in alphas for i in range(0, ks.size, CHUNK)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, jobs))
    else:
        parts = [_chunk(j) for j in jobs]
    values = np.concatenate([p[0] for p in parts]).reshape(len(alphas), ks.size)
    return ScanGrid(alphas, ks, values, spec)


def resonance_peaks(k, T, threshold: float = 0.99) -> list[tuple[float, float]]:
    """Interior local maxima with ``T >= threshold`` and their half-prominence widths.

    Flat stretches with no strict rise (e.g. ``T = 1`` everywhere) give no peaks.
    """
    k = np.asarray(k, dtype=float)
    T = np.asarray(T, dtype=float)
    if k.size < 3:
        return []
    idx, _ = find_peaks(T, height=threshold)
    if idx.size == 0:
        return []
    _, _, left, right = peak_widths(T, idx, rel_height=0.5)
    pos = np.arange(k.size)
    kl = np.interp(left, pos, k)
    kr = np.interp(right, pos, k)
    return [(float(k[i]), float(b - a)) for i, a, b in zip(idx, kl, kr)]


def band_valleys(k, T, threshold: float = 1e-3, min_width: float | None = None) -> list[KInterval]:
    """Maximal runs of grid points with ``T < threshold`` at least ``min_width`` wide.

    ``min_width`` defaults to 1% of the scanned range.
    """
    k = np.asarray(k, dtype=float)
    T = np.asarray(T, dtype=float)
    if k.size == 0:
        return []
    if min_width is None:
        min_width = 0.01 * (k[-1] - k[0])
    low = np.concatenate(([False], T < threshold, [False]))
    edges = np.flatnonzero(np.diff(low.astype(np.int8)))
    out = []
    for a, b in zip(edges[::2], edges[1::2]):  # run covers indices a..b-1
        lo, hi = k[a], k[b - 1]
        if hi > lo and hi - lo >= min_width:
            out.append(KInterval(float(lo), float(hi), float(T[a:b].max())))
    return out


def _y_transform(log10_T: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log10(-log10_T)


def saturation_metric(
    spec: PotentialSpec, G_a: int, G_b: int, alpha: float, ks, workers: int = 1
) -> float:
    """``max |y_Ga - y_Gb|`` with ``y = log10(-log10 T)``, skipping points where ``T = 1``."""
    if G_a > G_b:
        raise InputError(f"need G_a <= G_b, got {G_a}, {G_b}")
    ks = np.asarray(ks, dtype=float)
    la = evaluate(spec.with_stage(G_a), alpha, ks, workers)[2]
    lb = la if G_a == G_b else evaluate(spec.with_stage(G_b), alpha, ks, workers)[2]
    keep = (la < 0) & (lb < 0)
    if not keep.any():
        raise InputError("saturation metric undefined: T = 1 at every grid point")
    return float(np.max(np.abs(_y_transform(la[keep]) - _y_transform(lb[keep]))))


def _require_area(spec: PotentialSpec) -> None:
    if spec.height_policy != "area":
        raise InputError("this diagnostic needs area-preserving heights (height_policy='area')")


def scaling_fit(
    spec: PotentialSpec,
    alpha: float,
    k_lo: float,
    k_hi: float,
    n: int = 16000,
    n_bins: int = 20,
    workers: int = 1,
) -> ScalingFit:
    """Power-law fit of the upper envelope of ``R(k)`` in log-log coordinates.

    ``R`` is taken per log-spaced bin at its maximum, which removes the zeros of
    the oscillating factor; a straight line is fitted to the bin maxima.
    """
    _require_area(spec)
    _check_range(k_lo, k_hi, n)
    if n_bins < 1:
        raise InputError("need n_bins >= 1")
    V_G = barrier_height(spec)
    if k_lo**alpha < 10.0 * V_G:
        raise InputError(
            f"scaling fit needs E >> V_G: k_lo^alpha = {k_lo**alpha:.6g} < 10 V_G = {10 * V_G:.6g}"
        )
    ks = np.geomspace(k_lo, k_hi, int(n))
    _, R, _ = evaluate(spec, alpha, ks, workers)
    with np.errstate(divide="ignore"):
        lk = np.log10(ks)
        lr = np.log10(R)

    edges = np.linspace(lk[0], lk[-1], int(n_bins) + 1)
    which = np.clip(np.searchsorted(edges, lk, side="right") - 1, 0, n_bins - 1)
    envelope = np.zeros(ks.size, dtype=bool)
    for b in range(n_bins):
        members = np.flatnonzero(which == b)
        if members.size == 0:
            continue
        best = members[np.argmax(R[members])]
        if R[best] > 0:
            envelope[best] = True
    used = int(envelope.sum())
    if used < 5:
        raise InputError(f"scaling fit needs at least 5 populated bins, got {used}")
    slope, intercept = np.polyfit(lk[envelope], lr[envelope], 1)
    return ScalingFit(float(slope), float(intercept), float(alpha), lk, lr, envelope, used)


def reflection_convergence(
    spec: PotentialSpec, alpha: float, G_a: int, G_b: int, ks, workers: int = 1
) -> float:
    """``max |R_Ga - R_Gb| / max(R_Ga, 1e-300)`` over the grid."""
    _require_area(spec)
    ks = np.asarray(ks, dtype=float)
    ra = evaluate(spec.with_stage(G_a), alpha, ks, workers)[1]
    rb = ra if G_a == G_b else evaluate(spec.with_stage(G_b), alpha, ks, workers)[1]
    if ks.size == 0:
        return 0.0
    return float(np.max(np.abs(ra - rb) / np.maximum(ra, 1e-300)))
