"""Brute-force transmission: multiply one transfer matrix per barrier.

Nothing here uses the Bloch-phase machinery or the closed-form spacings; the
only inputs are barrier positions, widths and heights.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Iterable

from .errors import InputError
from .geometry import SegmentLayout
from .scattering import (
    ScatteringResult,
    TransferMatrix,
    WaveContext,
    barrier_matrix,
    scattering_coefficients,
)

MAX_BARRIERS = 2**20


@dataclass(frozen=True)
class PlacedBarrier:
    start: float
    width: float
    height: float

    def __post_init__(self):
        if not self.width > 0:
            raise InputError(f"barrier width must be > 0, got {self.width}")

    @property
    def end(self) -> float:
        return self.start + self.width


def shift_matrix(M: TransferMatrix, ctx: WaveContext, x0: float) -> TransferMatrix:
    """Transfer matrix of the same scatterer translated by ``x0``.

    Moving the scatterer to ``x0`` multiplies the local amplitudes by
    ``diag(e^{ikx0}, e^{-ikx0})``, so the translated matrix is ``D^-1 M D``.
    """
    ph = cmath.exp(2j * ctx.k * x0)
    return TransferMatrix(M.m11, M.m12 / ph, M.m21 * ph, M.m22)


def barriers_from_layout(layout: SegmentLayout) -> list[PlacedBarrier]:
    return [PlacedBarrier(float(a), float(b - a), layout.height) for a, b in layout.segments]


def _validated(barriers: Iterable[PlacedBarrier]) -> list[PlacedBarrier]:
    items = list(barriers)
    if len(items) > MAX_BARRIERS:
        raise InputError(f"{len(items)} barriers exceed the oracle limit {MAX_BARRIERS}")
    for left, right in zip(items, items[1:]):
        if right.start < left.end:
            raise InputError(
                f"barriers overlap or are unsorted: [{left.start}, {left.end}) and [{right.start}, {right.end})"
            )
    return items


def total_matrix(barriers, ctx: WaveContext) -> TransferMatrix:
    """Left-to-right product over barriers in increasing ``x``."""
    if isinstance(barriers, SegmentLayout):
        barriers = barriers_from_layout(barriers)
    total = TransferMatrix.identity()
    for b in _validated(barriers):
        total = total @ shift_matrix(barrier_matrix(ctx, b.height, b.width), ctx, b.start)
    return total


def brute_force_transmission(barriers, ctx: WaveContext) -> ScatteringResult:
    return scattering_coefficients(total_matrix(barriers, ctx))
