"""Cantor-family barrier layouts.

A layout at stage ``G`` is obtained from the interval ``[0, L)`` by removing,
at every stage ``j``, the middle fraction ``rho ** -(a1 + a2 * j)`` of each
remaining segment.  ``(a1, a2) = (1, 0)`` is the general Cantor family and
``(0, 1)`` the general Smith-Volterra-Cantor family.

Closed forms are available for those two families; any other ``(a1, a2)`` is
handled by the stage recursion only.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError, ResourceLimitError

DEFAULT_MAX_G = 20


def max_stage() -> int:
    """Stage cap for explicit layouts; ``SFQM_MAX_G`` overrides the default."""
    raw = os.environ.get("SFQM_MAX_G")
    if raw is None:
        return DEFAULT_MAX_G
    try:
        value = int(raw)
    except ValueError:
        raise InputError(f"SFQM_MAX_G must be an integer, got {raw!r}") from None
    if value < 0:
        raise InputError("SFQM_MAX_G must be non-negative")
    return value


@dataclass(frozen=True)
class PotentialFamily:
    a1: float
    a2: float

    def __post_init__(self):
        if self.a1 < 0 or self.a2 < 0:
            raise InputError("family exponents a1, a2 must be non-negative")
        if self.a1 == 0 and self.a2 == 0:
            raise InputError("family exponents a1 and a2 cannot both be zero")
        object.__setattr__(self, "a1", float(self.a1))
        object.__setattr__(self, "a2", float(self.a2))

    @property
    def kind(self) -> str:
        if (self.a1, self.a2) == (1.0, 0.0):
            return "cantor"
        if (self.a1, self.a2) == (0.0, 1.0):
            return "svc"
        return "general"

    @property
    def label(self) -> str:
        if self.kind != "general":
            return self.kind
        return f"general:{self.a1:g},{self.a2:g}"

    def exponent(self, j: int) -> float:
        return self.a1 + self.a2 * j

    @classmethod
    def parse(cls, text: str) -> "PotentialFamily":
        """Accepts ``cantor``, ``svc`` or ``general:a1,a2``."""
        name = text.strip().lower()
        if name in ("cantor", "gc"):
            return CANTOR
        if name in ("svc", "gsvc"):
            return SVC
        if name.startswith("general:"):
            try:
                a1, a2 = (float(v) for v in name.split(":", 1)[1].split(","))
            except ValueError:
                raise InputError(f"cannot parse family {text!r}; expected general:a1,a2") from None
            return cls(a1, a2)
        raise InputError(f"unknown family {text!r}")


CANTOR = PotentialFamily(1.0, 0.0)
SVC = PotentialFamily(0.0, 1.0)

HEIGHT_POLICIES = ("fixed", "area")


@dataclass(frozen=True)
class PotentialSpec:
    family: PotentialFamily
    rho: float
    L: float = 1.0
    V0: float = 0.0
    G: int = 0
    height_policy: str = "fixed"

    def __post_init__(self):
        if not isinstance(self.family, PotentialFamily):
            raise InputError("family must be a PotentialFamily")
        if not (math.isfinite(self.rho) and self.rho > 1):
            raise InputError(f"rho must be > 1, got {self.rho}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise InputError(f"L must be > 0, got {self.L}")
        if not (math.isfinite(self.V0) and self.V0 >= 0):
            raise InputError(f"V0 must be >= 0, got {self.V0}")
        if isinstance(self.G, bool) or int(self.G) != self.G or self.G < 0:
            raise InputError(f"G must be a non-negative integer, got {self.G}")
        if self.height_policy not in HEIGHT_POLICIES:
            raise InputError(f"height_policy must be one of {HEIGHT_POLICIES}")
        object.__setattr__(self, "G", int(self.G))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "V0", float(self.V0))

    def with_stage(self, G: int) -> "PotentialSpec":
        return PotentialSpec(self.family, self.rho, self.L, self.V0, G, self.height_policy)

    def as_dict(self) -> dict:
        return {
            "family": self.family.label,
            "rho": self.rho,
            "L": self.L,
            "V0": self.V0,
            "G": self.G,
            "height_policy": self.height_policy,
        }


def q_pochhammer(a: float, lam: float, n: int) -> float:
    """``prod_{i=0}^{n-1} (1 - a * lam**i)``; the empty product is 1."""
    if n < 0:
        raise InputError("q_pochhammer needs n >= 0")
    out = 1.0
    term = a
    for _ in range(n):
        out *= 1.0 - term
        term *= lam
    return out


def removal_fraction(family: PotentialFamily, rho: float, j: int) -> float:
    """Middle fraction removed from every segment at stage ``j``."""
    return rho ** -family.exponent(j)


def stage_lengths(spec: PotentialSpec, upto: int | None = None) -> list[float]:
    """Segment lengths ``l_0..l_upto`` by the stage recursion."""
    upto = spec.G if upto is None else upto
    lengths = [spec.L]
    for j in range(1, upto + 1):
        f = removal_fraction(spec.family, spec.rho, j)
        lengths.append(lengths[-1] * (1.0 - f) / 2.0)
    return lengths


def _resolve(spec: PotentialSpec, method: str) -> str:
    if method == "auto":
        return "closed" if spec.family.kind in ("cantor", "svc") else "recursive"
    if method == "closed" and spec.family.kind == "general":
        raise InputError("closed forms exist only for the cantor and svc families")
    if method not in ("closed", "recursive"):
        raise InputError(f"unknown method {method!r}")
    return method


def _check_stage_index(spec: PotentialSpec, j: int) -> None:
    if not 1 <= j <= spec.G:
        raise InputError(f"stage index j={j} outside 1..{spec.G}")


def segment_length(spec: PotentialSpec, method: str = "auto") -> float:
    method = _resolve(spec, method)
    if method == "recursive":
        return stage_lengths(spec)[-1]
    rho, L, G = spec.rho, spec.L, spec.G
    if spec.family.kind == "cantor":
        return ((rho - 1) / (2 * rho)) ** G * L
    return L / 2**G * q_pochhammer(1 / rho, 1 / rho, G)


def gap_length(spec: PotentialSpec, j: int, method: str = "auto") -> float:
    """Width of the gaps opened at stage ``j``."""
    _check_stage_index(spec, j)
    method = _resolve(spec, method)
    rho, L = spec.rho, spec.L
    if method == "recursive":
        return stage_lengths(spec, j - 1)[-1] * removal_fraction(spec.family, rho, j)
    if spec.family.kind == "cantor":
        return ((rho - 1) / (2 * rho)) ** (j - 1) * L / rho
    return L / (rho**j * 2 ** (j - 1)) * q_pochhammer(1 / rho, 1 / rho, j - 1)


def spacing(spec: PotentialSpec, j: int, method: str = "auto") -> float:
    """Distance between the two copies combined at repetition level ``j``.

    Level 1 pairs two single barriers, level ``G`` pairs the two halves of
    the whole layout.
    """
    _check_stage_index(spec, j)
    method = _resolve(spec, method)
    rho, L, G = spec.rho, spec.L, spec.G
    if method == "recursive":
        m = G + 1 - j
        lengths = stage_lengths(spec, m)
        return lengths[m] + lengths[m - 1] * removal_fraction(spec.family, rho, m)
    if spec.family.kind == "cantor":
        x = (rho - 1) / (2 * rho)
        y = (rho + 1) / (2 * rho)
        return x ** (G - j) * y * L
    m = G + 1 - j
    return L / 2**m * (1 + rho**-m) * q_pochhammer(1 / rho, 1 / rho, G - j)


def barrier_height(spec: PotentialSpec, method: str = "auto") -> float:
    """Per-segment height: ``V0`` or the area-preserving ``L V0 / (2^G l_G)``."""
    if spec.height_policy == "fixed":
        return spec.V0
    method = _resolve(spec, method)
    rho, G = spec.rho, spec.G
    if method == "recursive":
        return spec.L * spec.V0 / (2**G * segment_length(spec, "recursive"))
    if spec.family.kind == "cantor":
        return (rho / (rho - 1)) ** G * spec.V0
    return spec.V0 / q_pochhammer(1 / rho, 1 / rho, G)


@dataclass(frozen=True)
class SegmentLayout:
    spec: PotentialSpec
    segments: np.ndarray  # shape (2**G, 2), half-open [start, end)
    segment_length: float
    gaps: tuple[float, ...]
    spacings: tuple[float, ...]
    height: float

    @property
    def count(self) -> int:
        return len(self.segments)

    def to_json_dict(self) -> dict:
        return {
            "family": self.spec.family.label,
            "rho": self.spec.rho,
            "L": self.spec.L,
            "V_G": self.height,
            "G": self.spec.G,
            "l_G": self.segment_length,
            "gaps": list(self.gaps),
            "spacings": list(self.spacings),
            "segments": self.segments.tolist(),
        }


def _decimal_fraction(x: float) -> Fraction:
    # shortest round-trip decimal, so rho=2.1 means 21/10 rather than its binary neighbour
    return Fraction(repr(float(x)))


def _exact_fraction(spec: PotentialSpec, j: int) -> Fraction:
    e = spec.family.exponent(j)
    if float(e).is_integer():
        return _decimal_fraction(spec.rho) ** -int(e)
    return _decimal_fraction(removal_fraction(spec.family, spec.rho, j))


def build_layout(spec: PotentialSpec, max_g: int | None = None) -> SegmentLayout:
    """Explicit intervals by repeated middle removal.

    Endpoints are carried as exact rationals (integer numerators over a common
    denominator) and rounded once, so e.g. the rho=3 layouts land on the
    nearest doubles.
    """
    cap = max_stage() if max_g is None else max_g
    if spec.G > cap:
        raise ResourceLimitError(f"G={spec.G} exceeds the layout cap {cap} (set SFQM_MAX_G)")

    G = spec.G
    lengths = [_decimal_fraction(spec.L)]
    for j in range(1, G + 1):
        lengths.append(lengths[-1] * (1 - _exact_fraction(spec, j)) / 2)
    denom = math.lcm(*(x.denominator for x in lengths))
    ints = [x.numerator * (denom // x.denominator) for x in lengths]

    # every segment at stage j-1 keeps [a, a + l_j) and [a + l_{j-1} - l_j, a + l_{j-1})
    starts = [0]
    for j in range(1, G + 1):
        shift = ints[j - 1] - ints[j]
        starts = [c for a in starts for c in (a, a + shift)]
    width = ints[G]
    arr = np.array([(a / denom, (a + width) / denom) for a in starts], dtype=float)

    return SegmentLayout(
        spec=spec,
        segments=arr,
        segment_length=segment_length(spec),
        gaps=tuple(gap_length(spec, j) for j in range(1, G + 1)),
        spacings=tuple(spacing(spec, j) for j in range(1, G + 1)),
        height=barrier_height(spec),
    )
