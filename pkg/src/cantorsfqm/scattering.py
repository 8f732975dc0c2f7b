"""Transfer matrices and transmission through Cantor-family barriers.

Conventions: plane waves ``A e^{ikx} + B e^{-ikx}`` on the left are related to
``C e^{ikx} + D e^{-ikx}`` on the right by ``(A, B) = M (C, D)``.  The free
wavevector ``k`` and the energy are tied by ``E = D_alpha hbar^alpha k^alpha``.
Inside a barrier of height ``V`` the wavevector is
``q = ((E - V) / (D_alpha hbar^alpha))^(1/alpha)`` above the barrier and
``q = i ((V - E) / (D_alpha hbar^alpha))^(1/alpha)`` below it; the wavefunction
and its first derivative are matched at each interface.

Cantor-family transmission is evaluated through the Bloch-phase sequence
``zeta_1..zeta_G`` of the doubly repeated unit cells,
``T_G = 1 / (1 + 4^G |M12|^2 prod zeta_i^2)``.  All magnitudes that can grow
like ``exp(kappa * width)`` are carried in log form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import geometry
from .errors import InputError, InvariantError, ResourceLimitError
from .geometry import PotentialSpec

LN10 = math.log(10.0)


@dataclass(frozen=True)
class WaveContext:
    alpha: float
    k: float
    D_alpha: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (1.0 < self.alpha <= 2.0):
            raise InputError(f"Levy index must satisfy 1 < alpha <= 2, got {self.alpha}")
        if not (math.isfinite(self.k) and self.k > 0):
            raise InputError(f"wavevector k must be > 0, got {self.k}")
        if not (self.D_alpha > 0 and self.hbar > 0):
            raise InputError("D_alpha and hbar must be positive")

    @property
    def E(self) -> float:
        return self.D_alpha * self.hbar**self.alpha * self.k**self.alpha


@dataclass(frozen=True)
class TransferMatrix:
    m11: complex
    m12: complex
    m21: complex
    m22: complex

    @classmethod
    def identity(cls) -> "TransferMatrix":
        return cls(1 + 0j, 0j, 0j, 1 + 0j)

    @classmethod
    def from_array(cls, a) -> "TransferMatrix":
        a = np.asarray(a, dtype=complex)
        return cls(complex(a[0, 0]), complex(a[0, 1]), complex(a[1, 0]), complex(a[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=complex)

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    @property
    def det(self) -> complex:
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def phase(self) -> float:
        """``arg(m22)``."""
        return float(np.angle(self.m22))

    def invariant_residuals(self) -> dict[str, float]:
        """Residuals of the Hermitian-barrier identities, scaled by ``max(1, |m22|^2)``.

        The identities involve differences of numbers of size ``|m22|^2``, so
        in double precision they can only hold to ``eps * |m22|^2``.  The
        entries are normalised by ``max(1, |m22|)`` first to avoid overflow.
        """
        root = max(1.0, abs(self.m22))
        if not math.isfinite(root):
            return dict.fromkeys(("conj_diag", "conj_offdiag", "det", "modulus"), math.inf)
        n11, n12, n21, n22 = (x / root for x in (self.m11, self.m12, self.m21, self.m22))
        floor = 1.0 / (root * root)
        return {
            "conj_diag": abs(n11 - n22.conjugate()),
            "conj_offdiag": abs(n21 - n12.conjugate()),
            "det": abs(n11 * n22 - n12 * n21 - floor),
            "modulus": abs(abs(n22) ** 2 - abs(n12) ** 2 - floor),
        }

    def check_invariants(self, tol: float = 1e-10) -> None:
        bad = {k: v for k, v in self.invariant_residuals().items() if not v <= tol}
        if bad:
            raise InvariantError(f"transfer-matrix invariants violated: {bad}")


@dataclass(frozen=True)
class ScatteringResult:
    t: complex
    r: complex
    T: float
    R: float
    log10_T: float
    r_right: complex | None = None

    def check_unitarity(self, tol: float = 1e-10) -> None:
        if not (0.0 <= self.T <= 1.0 + tol and abs(self.T + self.R - 1.0) <= tol):
            raise InvariantError(f"unitarity violated: T={self.T!r}, R={self.R!r}")


@dataclass(frozen=True)
class ZetaSequence:
    """Bloch phases ``zeta_1..zeta_G``.

    ``values`` may overflow to +-inf deep in the tunnelling regime; ``log_abs``
    (natural log of ``|zeta_j|``) and ``signs`` stay finite.
    """

    values: np.ndarray
    log_abs: np.ndarray
    signs: np.ndarray

    def __len__(self):
        return len(self.values)


# ---------------------------------------------------------------------------
# single barrier


def wavevector_inside(ctx: WaveContext, V: float) -> complex:
    if V < 0:
        raise InputError("barrier height must be >= 0")
    scale = ctx.D_alpha * ctx.hbar**ctx.alpha
    diff = (ctx.E - V) / scale
    if diff > 0:
        return complex(diff ** (1 / ctx.alpha), 0.0)
    if diff < 0:
        return complex(0.0, (-diff) ** (1 / ctx.alpha))
    return 0j


def _barrier_scaled(k, alpha, V, b, D_alpha=1.0, hbar=1.0):
    """Vectorised single-barrier elements ``(m11, m12) = (u11, u12) * exp(lnscale)``.

    With ``c = cos(qb)``, ``S = sin(qb)/q`` and ``P = q sin(qb)`` (all real in
    both branches), ``m11 = e^{ikb}[c - i(P/k + kS)/2]`` and
    ``m12 = i(kS - P/k)/2 e^{-ikb}``.  Below the barrier the common factor
    ``e^{kappa b}`` is pulled out so thick barriers do not overflow.
    """
    k = np.asarray(k, dtype=float)
    scale = D_alpha * hbar**alpha
    diff = (D_alpha * hbar**alpha * k**alpha - V) / scale
    mag = np.abs(diff) ** (1.0 / alpha)
    x = mag * b
    above = diff >= 0

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        # propagating: q = mag
        c_p = np.cos(x)
        s_p = b * np.sinc(x / np.pi)
        p_p = mag * np.sin(x)
        # evanescent: q = i*mag, factor e^{x} removed
        em = -np.expm1(-2.0 * x)  # 1 - e^{-2x}
        c_e = 0.5 * (2.0 - em)
        s_e = np.where(x > 0, b * em / (2.0 * np.where(x > 0, x, 1.0)), b)
        p_e = -0.5 * mag * em

    c = np.where(above, c_p, c_e)
    S = np.where(above, s_p, s_e)
    P = np.where(above, p_p, p_e)
    lnscale = np.where(above, 0.0, x)

    u11 = np.exp(1j * k * b) * (c - 0.5j * (P / k + k * S))
    u12 = 0.5j * (k * S - P / k) * np.exp(-1j * k * b)
    if V == 0:
        # no barrier; q = k only up to rounding of (k^alpha)^(1/alpha)
        u11 = np.ones_like(u11)
        u12 = np.zeros_like(u12)
    return u11, u12, lnscale


def barrier_matrix(ctx: WaveContext, V: float, b: float) -> TransferMatrix:
    """Transfer matrix of a rectangular barrier of height ``V`` on ``[0, b]``."""
    if not b > 0:
        raise InputError("barrier width must be > 0")
    if V < 0:
        raise InputError("barrier height must be >= 0")
    u11, u12, lnscale = _barrier_scaled(ctx.k, ctx.alpha, V, b, ctx.D_alpha, ctx.hbar)
    lnmax = float(lnscale) + math.log(max(abs(complex(u11)), abs(complex(u12))))
    if lnmax > 709.0:
        raise ResourceLimitError(
            f"single-barrier matrix exceeds double range (ln|m22| = {lnmax:.1f}); "
            "the Cantor-family routes work in log scale"
        )
    f = math.exp(float(lnscale))
    m11 = complex(u11) * f
    m12 = complex(u12) * f
    return TransferMatrix(m11, m12, m12.conjugate(), m11.conjugate())


def scattering_coefficients(M: TransferMatrix) -> ScatteringResult:
    if M.m22 == 0 or not np.isfinite(abs(M.m22)):
        raise InvariantError(f"m22 = {M.m22!r} cannot yield scattering coefficients")
    t = 1.0 / M.m22
    r = -M.m21 / M.m22
    T = abs(t) ** 2
    return ScatteringResult(
        t=t,
        r=r,
        T=T,
        R=abs(r) ** 2,
        log10_T=-2.0 * math.log10(abs(M.m22)),
        r_right=M.m12 / M.m22,
    )


# ---------------------------------------------------------------------------
# periodic composition


def chebyshev_U(n: int, x):
    """Chebyshev polynomial of the second kind by forward recurrence (``n >= -1``)."""
    if n < -1:
        raise InputError("chebyshev_U needs n >= -1")
    prev, cur = 0.0 * x, 1.0 + 0.0 * x
    if n == -1:
        return prev
    for _ in range(n):
        prev, cur = cur, 2.0 * x * cur - prev
    return cur


def bloch_phase(M: TransferMatrix, ctx: WaveContext, s: float) -> float:
    """Half trace of ``M`` followed by free propagation over ``s``.

    Raises InvariantError if the complex half-trace has an imaginary part
    above 1e-10 (relative to ``|m22|``), which signals a non-Hermitian input.
    """
    if not s > 0:
        raise InputError("cell separation s must be > 0")
    ks = ctx.k * s
    half_trace = 0.5 * (M.m11 * np.exp(-1j * ks) + M.m22 * np.exp(1j * ks))
    if abs(half_trace.imag) > 1e-10 * max(1.0, abs(M.m22)):
        raise InvariantError(f"Bloch phase has imaginary residue {half_trace.imag:.3e}")
    return M.m22.real * math.cos(ks) - M.m22.imag * math.sin(ks)


def periodic_matrix(M: TransferMatrix, N: int, ctx: WaveContext, s: float) -> TransferMatrix:
    """Transfer matrix of ``N`` copies of ``M`` whose left edges are ``s`` apart."""
    if N < 1:
        raise InputError("periodic_matrix needs N >= 1")
    if N == 1:
        return M
    z = bloch_phase(M, ctx, s)
    u1 = chebyshev_U(N - 1, z)
    u2 = chebyshev_U(N - 2, z)
    ks = ctx.k * s
    return TransferMatrix(
        (M.m11 * np.exp(-1j * ks) * u1 - u2) * np.exp(1j * ks * N),
        M.m12 * u1 * np.exp(-1j * ks * (N - 1)),
        M.m21 * u1 * np.exp(1j * ks * (N - 1)),
        (M.m22 * np.exp(1j * ks) * u1 - u2) * np.exp(-1j * ks * N),
    )


def transmission_general(
    M: TransferMatrix, Ns: Sequence[int], ss: Sequence[float], ctx: WaveContext
) -> float:
    """Transmission of a nested periodic arrangement (cell ``M`` repeated ``Ns[0]``
    times at spacing ``ss[0]``, that block repeated ``Ns[1]`` times at ``ss[1]``, ...)."""
    if len(Ns) != len(ss):
        raise InputError(f"Ns and ss differ in length ({len(Ns)} vs {len(ss)})")
    if any(n < 1 for n in Ns) or any(not s > 0 for s in ss):
        raise InputError("need every N_i >= 1 and s_i > 0")
    cell = M
    weight = abs(M.m12) ** 2
    for n, s in zip(Ns, ss):
        z = bloch_phase(cell, ctx, s)
        weight *= chebyshev_U(n - 1, z) ** 2
        cell = periodic_matrix(cell, n, ctx, s)
    return 1.0 / (1.0 + weight)


# ---------------------------------------------------------------------------
# Cantor-family closed forms


def _x_ratio(rho: float) -> float:
    return (rho - 1) / (2 * rho)


def eta1(spec: PotentialSpec, j: int, method: str = "auto") -> float:
    """``sum_{p<j} s_p - s_j``; always negative."""
    if not 1 <= j <= spec.G:
        raise InputError(f"eta1 index j={j} outside 1..{spec.G}")
    kind = spec.family.kind
    rho, L, G = spec.rho, spec.L, spec.G
    if method == "auto":
        method = "closed" if kind != "general" else "layout"
    if method == "layout":
        return -(geometry.segment_length(spec) + geometry.gap_length(spec, G - j + 1))
    if method != "closed" or kind == "general":
        raise InputError(f"no closed form for method={method!r}, family={kind}")
    if kind == "cantor":
        x = _x_ratio(rho)
        return -(L * x**G + L / rho * x ** (G - j))
    qp = geometry.q_pochhammer
    return -(L / 2**G * qp(1 / rho, 1 / rho, G) + L / 2 ** (G - j) * qp(1 / rho, 1 / rho, G - j) / rho ** (G - j + 1))


def eta2(spec: PotentialSpec, j: int, r: int, method: str = "auto") -> float:
    """``eta1(j) - eta1(r)`` (``= g_{G-r+1} - g_{G-j+1}``); ``r == j`` gives 0."""
    if not (1 <= r <= j <= spec.G):
        raise InputError(f"eta2 needs 1 <= r <= j <= G, got j={j}, r={r}")
    kind = spec.family.kind
    rho, L, G = spec.rho, spec.L, spec.G
    if method == "auto":
        method = "closed" if kind != "general" else "layout"
    if method == "layout":
        if r == j:
            return 0.0
        return geometry.gap_length(spec, G - r + 1) - geometry.gap_length(spec, G - j + 1)
    if method != "closed" or kind == "general":
        raise InputError(f"no closed form for method={method!r}, family={kind}")
    if kind == "cantor":
        x = _x_ratio(rho)
        return L / rho * x ** (G - r - j) * (x**j - x**r)
    qp = geometry.q_pochhammer
    tr = 2 * rho
    return 2 * L / tr ** (G + 1) * (tr**r * qp(1 / rho, 1 / rho, G - r) - tr**j * qp(1 / rho, 1 / rho, G - j))


@dataclass
class _CantorState:
    """Scaled state of the stage-by-stage composition for an array of k."""

    log_m12: np.ndarray  # ln|M12| of the single barrier
    zeta_sign: np.ndarray  # (G, n)
    zeta_log: np.ndarray  # (G, n)
    m22_phase: np.ndarray  # unit-modulus phase of the composed M22
    m22_log: np.ndarray  # ln|composed M22|
    m12_phase: np.ndarray  # unit-modulus phase of the composed M12
    log_x: np.ndarray  # ln(4^G |M12|^2 prod zeta^2)


def _stage_geometry(spec: PotentialSpec) -> tuple[float, float, list[float]]:
    l_G = geometry.segment_length(spec)
    V_G = geometry.barrier_height(spec)
    ss = [geometry.spacing(spec, j) for j in range(1, spec.G + 1)]
    return l_G, V_G, ss


def _compose(spec: PotentialSpec, alpha: float, k, D_alpha=1.0, hbar=1.0) -> _CantorState:
    k = np.atleast_1d(np.asarray(k, dtype=float))
    l_G, V_G, ss = _stage_geometry(spec)
    u11, u12, lnscale = _barrier_scaled(k, alpha, V_G, l_G, D_alpha, hbar)
    u22 = np.conj(u11)

    with np.errstate(divide="ignore"):
        log_m12 = np.log(np.abs(u12)) + lnscale
    mod22 = np.abs(u22)
    w = u22 / mod22
    lam = np.log(mod22) + lnscale
    m12_phase = np.exp(1j * np.angle(u12))

    G = spec.G
    zsign = np.empty((G, k.size))
    zlog = np.empty((G, k.size))
    log_x = G * math.log(4.0) + 2.0 * log_m12
    for j, s in enumerate(ss):
        e = np.exp(1j * k * s)
        rz = (w * e).real  # zeta_j = rz * exp(lam), |rz| <= 1
        with np.errstate(divide="ignore"):
            zlog[j] = np.log(np.abs(rz)) + lam
        zsign[j] = np.sign(rz)
        log_x = log_x + 2.0 * zlog[j]
        # (M22)_j = e^{2 lam} [2 w rz e^{-iks} - e^{-2iks - 2 lam}]
        bracket = 2.0 * w * rz * np.conj(e) - np.exp(-2.0 * lam) * np.conj(e * e)
        mod = np.abs(bracket)
        w = bracket / mod
        lam = 2.0 * lam + np.log(mod)
        m12_phase = m12_phase * np.where(rz < 0, -1.0, 1.0) * np.conj(e)
    return _CantorState(log_m12, zsign, zlog, w, lam, m12_phase, log_x)


def zeta_sequence_recursive(spec: PotentialSpec, ctx: WaveContext) -> ZetaSequence:
    if spec.G < 1:
        raise InputError("the Bloch-phase sequence needs G >= 1")
    st = _compose(spec, ctx.alpha, ctx.k, ctx.D_alpha, ctx.hbar)
    signs = st.zeta_sign[:, 0]
    logs = st.zeta_log[:, 0]
    with np.errstate(over="ignore"):
        values = signs * np.exp(logs)
    return ZetaSequence(values=values, log_abs=logs, signs=signs)


def zeta_sequence_series(spec: PotentialSpec, ctx: WaveContext) -> ZetaSequence:
    """Bloch phases from the explicit series in ``eta1``/``eta2``.

    Plain double arithmetic; kept as an independent validation route.
    """
    if spec.G < 1:
        raise InputError("the Bloch-phase sequence needs G >= 1")
    l_G, V_G, _ = _stage_geometry(spec)
    M = barrier_matrix(ctx, V_G, l_G)
    mod, phi = abs(M.m22), M.phase
    k = ctx.k
    zetas: list[float] = []
    for j in range(1, spec.G + 1):
        lead = 2 ** (j - 1) * mod * math.cos(phi - k * eta1(spec, j)) * math.prod(zetas)
        tail = 0.0
        for r in range(1, j):
            tail += 2 ** (j - r - 1) * math.cos(k * eta2(spec, j, r)) * math.prod(zetas[r:])
        zetas.append(lead - tail)
    values = np.array(zetas)
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(values))
    return ZetaSequence(values=values, log_abs=logs, signs=np.sign(values))


def _coefficients(log_x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``T``, ``R`` and ``log10 T`` from ``log_x = ln(R / T)``."""
    lse = np.logaddexp(0.0, log_x)
    return np.exp(-lse), np.exp(log_x - lse), -lse / LN10


def _result_from_log_x(log_x: float, m22_phase: complex, m12_phase: complex) -> ScatteringResult:
    # t = 1/M22, r_l = -conj(M12)/M22, r_r = M12/M22, with M21 = conj(M12)
    T, R, log10_T = (float(v[0]) for v in _coefficients(np.array([log_x])))
    inv = m22_phase.conjugate()
    return ScatteringResult(
        t=inv * math.sqrt(T),
        r=-m12_phase.conjugate() * inv * math.sqrt(R),
        T=T,
        R=R,
        log10_T=log10_T,
        r_right=m12_phase * inv * math.sqrt(R),
    )


def transmission(spec: PotentialSpec, ctx: WaveContext) -> ScatteringResult:
    """Transmission through the stage-``G`` layout of ``spec``.

    ``G = 0`` is the single barrier ``[0, L]``; otherwise the doubly-repeated
    composition formula is used with the recursive Bloch-phase route.
    """
    st = _compose(spec, ctx.alpha, ctx.k, ctx.D_alpha, ctx.hbar)
    log_x = float(st.log_x[0]) if spec.G else 2.0 * float(st.log_m12[0])
    return _result_from_log_x(log_x, complex(st.m22_phase[0]), complex(st.m12_phase[0]))


def transmission_curve(spec: PotentialSpec, alpha: float, ks, D_alpha=1.0, hbar=1.0) -> dict[str, np.ndarray]:
    """Vectorised ``T``, ``R`` and ``log10 T`` over an array of wavevectors."""
    ks = np.asarray(ks, dtype=float)
    if not (1.0 < alpha <= 2.0):
        raise InputError(f"Levy index must satisfy 1 < alpha <= 2, got {alpha}")
    if ks.size and not np.all(ks > 0):
        raise InputError("wavevectors must be > 0")
    st = _compose(spec, alpha, ks, D_alpha, hbar)
    log_x = st.log_x if spec.G else 2.0 * st.log_m12
    T, R, log10_T = _coefficients(log_x)
    return {"T": T, "R": R, "log10_T": log10_T}
