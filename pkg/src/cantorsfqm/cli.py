"""Command-line front end.

Every file written embeds the parsed run configuration: as a ``# config:``
comment line for CSV, or a ``config`` field for JSON.  Errors go to stderr as
``ERROR <code>: <message>`` with exit codes 1 (input), 2 (invariant) and
3 (resource limit).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    band_valleys,
    k_grid,
    resonance_peaks,
    saturation_metric,
    scaling_fit,
    scan_1d,
    scan_2d,
)
from .errors import InputError, InvariantError, SFQMError
from .export import csv_text, fmt, json_text, read_csv
from .geometry import HEIGHT_POLICIES, PotentialFamily, PotentialSpec, build_layout
from .oracle import brute_force_transmission
from .scattering import WaveContext, transmission, zeta_sequence_recursive

UNITARITY_TOL = 1e-10


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _potential_args(p, family_required=True):
    p.add_argument("--family", required=family_required, help="cantor | svc | general:a1,a2")
    p.add_argument("--rho", type=float, default=3.0)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--V", "--V0", dest="V", type=float, default=0.0, help="barrier height (V0 for --height-policy area)")
    p.add_argument("--G", type=int, default=0)
    p.add_argument("--height-policy", choices=HEIGHT_POLICIES, default="fixed")


def _krange_args(p, n_default=2000, kmin=None, kmax=None):
    p.add_argument("--kmin", type=float, required=kmin is None, default=kmin)
    p.add_argument("--kmax", type=float, required=kmax is None, default=kmax)
    p.add_argument("--n", type=int, default=n_default)


def _output_args(p, formats=("csv", "json")):
    p.add_argument("--output", "--out", dest="output", help="output file (default: stdout)")
    p.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cantorsfqm", description="Tunneling through Cantor-family potentials with a fractional dispersion.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="reserved; not supported yet")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("layout", help="explicit segment layout")
    _potential_args(p)
    _output_args(p)

    p = sub.add_parser("transmit", help="T, R and the Bloch phases at one (alpha, k)")
    _potential_args(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--k", type=float, required=True)
    _output_args(p, ("text", "json"))

    p = sub.add_parser("scan1d", help="T(k) at fixed alpha")
    _potential_args(p)
    p.add_argument("--alpha", type=float, required=True)
    _krange_args(p)
    p.add_argument("--workers", type=int, default=1)
    _output_args(p)

    p = sub.add_parser("scan2d", help="T over an alpha-k grid")
    _potential_args(p)
    p.add_argument("--alpha-min", type=float, required=True)
    p.add_argument("--alpha-max", type=float, required=True)
    p.add_argument("--n-alpha", type=int, default=50)
    _krange_args(p)
    p.add_argument("--workers", type=int, default=1)
    _output_args(p)

    for name, thr, what in (("peaks", 0.99, "resonance peaks"), ("bands", 1e-3, "low-transmission valleys")):
        p = sub.add_parser(name, help=f"{what} of a scan, computed inline or read from --input")
        _potential_args(p, family_required=False)
        p.add_argument("--input", help="scan1d CSV to analyse instead of scanning")
        p.add_argument("--alpha", type=float)
        p.add_argument("--kmin", type=float)
        p.add_argument("--kmax", type=float)
        p.add_argument("--n", type=int, default=2000)
        p.add_argument("--threshold", type=float, default=thr)
        if name == "bands":
            p.add_argument("--min-width", type=float, help="default: 1%% of the scanned k range")
        p.add_argument("--workers", type=int, default=1)
        _output_args(p, ("csv", "json"))

    p = sub.add_parser("scaling", help="envelope power-law fit of R(k)")
    _potential_args(p)
    p.add_argument("--alpha", type=float, required=True)
    _krange_args(p, n_default=16000)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", "--out", dest="output", help="CSV of log10k,log10R,bin_envelope")
    p.add_argument("--summary", help="JSON summary file (default: stdout)")

    p = sub.add_parser("saturate", help="saturation metric between two stages")
    _potential_args(p)
    p.add_argument("--G-a", type=int, required=True)
    p.add_argument("--G-b", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    _krange_args(p)
    p.add_argument("--region", choices=("all", "above", "below"), default="all", help="restrict to E > V or E < V")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", "--out", dest="output")

    p = sub.add_parser("oracle-check", help="compare the closed form against the brute-force product")
    _potential_args(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--grid", action="store_true", help="uniform grid instead of random samples")
    p.add_argument("--kmin", type=float, default=0.5)
    p.add_argument("--kmax", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--output", "--out", dest="output")
    return parser


def _spec(args) -> PotentialSpec:
    if args.family is None:
        raise InputError("--family is required")
    return PotentialSpec(PotentialFamily.parse(args.family), args.rho, args.L, args.V, args.G, args.height_policy)


def _workers(args) -> int:
    w = getattr(args, "workers", 1)
    if w < 1:
        raise InputError(f"--workers must be >= 1, got {w}")
    return w


def _config(args) -> dict:
    # where the file lands is not part of what was computed
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "output"}
    cfg["version"] = __version__
    return cfg


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="")


def _cmd_layout(args):
    lay = build_layout(_spec(args))
    cfg = _config(args)
    if args.format == "json":
        return _emit(json_text(lay.to_json_dict(), cfg), args.output)
    rows = ((i, a, b) for i, (a, b) in enumerate(lay.segments))
    _emit(csv_text(("index", "start", "end"), rows, cfg), args.output)


def _cmd_transmit(args):
    spec = _spec(args)
    ctx = WaveContext(args.alpha, args.k)
    res = transmission(spec, ctx)
    res.check_unitarity(UNITARITY_TOL)
    zetas = zeta_sequence_recursive(spec, ctx).values if spec.G else np.empty(0)
    if args.format == "json":
        payload = {"T": res.T, "R": res.R, "log10_T": res.log10_T, "zeta": zetas}
        return _emit(json_text(payload, _config(args)), args.output)
    lines = [f"T={fmt(res.T)}", f"R={fmt(res.R)}"]
    lines += [f"zeta_{j}={fmt(z)}" for j, z in enumerate(zetas, 1)]
    _emit("\n".join(lines) + "\n", args.output)


def _check_scan(T, R=None):
    if not np.all((T >= 0) & (T <= 1)):
        raise InvariantError("transmission outside [0, 1]")
    if R is not None and np.any(np.abs(T + R - 1) > UNITARITY_TOL):
        raise InvariantError("T + R deviates from 1 beyond tolerance")


def _cmd_scan1d(args):
    s = scan_1d(_spec(args), args.alpha, args.kmin, args.kmax, args.n, _workers(args))
    _check_scan(s.T, s.R)
    cfg = _config(args)
    if args.format == "json":
        return _emit(json_text({"k": s.k, "T": s.T, "R": s.R}, cfg), args.output)
    _emit(csv_text(("k", "T", "R"), zip(s.k, s.T, s.R), cfg), args.output)


def _cmd_scan2d(args):
    g = scan_2d(_spec(args), args.alpha_min, args.alpha_max, args.n_alpha, args.kmin, args.kmax, args.n, _workers(args))
    _check_scan(g.values)
    cfg = _config(args)
    if args.format == "json":
        return _emit(json_text({"alphas": g.alphas, "ks": g.ks, "T": g.values}, cfg), args.output)
    rows = ((a, k, t) for a, row in zip(g.alphas, g.values) for k, t in zip(g.ks, row))
    _emit(csv_text(("alpha", "k", "T"), rows, cfg), args.output)


def _scan_table(args):
    if args.input is not None:
        try:
            header, data = read_csv(Path(args.input).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read scan file {args.input}: {exc}") from None
        if header[:2] != ["k", "T"]:
            raise InputError(f"{args.input} is not a scan1d CSV (header {header})")
        k, T = data[:, 0], data[:, 1]
        if np.any(np.diff(k) <= 0):
            raise InputError("scan table must be sorted by increasing k")
        return k, T
    missing = [f for f in ("alpha", "kmin", "kmax") if getattr(args, f) is None]
    if missing:
        raise InputError("inline scan needs " + ", ".join("--" + m for m in missing) + " (or --input)")
    s = scan_1d(_spec(args), args.alpha, args.kmin, args.kmax, args.n, _workers(args))
    return s.k, s.T


def _cmd_peaks(args):
    k, T = _scan_table(args)
    peaks = resonance_peaks(k, T, args.threshold)
    cfg = _config(args)
    if args.format == "json":
        payload = {"k_peak": [p for p, _ in peaks], "width": [w for _, w in peaks]}
        return _emit(json_text(payload, cfg), args.output)
    _emit(csv_text(("k_peak", "width"), peaks, cfg), args.output)


def _cmd_bands(args):
    k, T = _scan_table(args)
    valleys = band_valleys(k, T, args.threshold, args.min_width)
    rows = [(v.k_lo, v.k_hi, v.quality) for v in valleys]
    cfg = _config(args)
    if args.format == "json":
        payload = {"valleys": [dict(zip(("k_lo", "k_hi", "maxT"), r)) for r in rows]}
        return _emit(json_text(payload, cfg), args.output)
    _emit(csv_text(("k_lo", "k_hi", "maxT"), rows, cfg), args.output)


def _cmd_scaling(args):
    fit = scaling_fit(_spec(args), args.alpha, args.kmin, args.kmax, args.n, args.bins, _workers(args))
    cfg = _config(args)
    if args.output is not None:
        rows = zip(fit.log10k, fit.log10R, fit.envelope.astype(int))
        _emit(csv_text(("log10k", "log10R", "bin_envelope"), rows, cfg), args.output)
    _emit(json_text(fit.summary(), cfg), args.summary)


def _cmd_saturate(args):
    spec = _spec(args)
    ks = k_grid(args.kmin, args.kmax, args.n)
    if args.region != "all":
        E = ks**args.alpha
        ks = ks[E > spec.V0] if args.region == "above" else ks[E < spec.V0]
        if ks.size == 0:
            raise InputError(f"no grid points with E {args.region} V")
    metric = saturation_metric(spec, args.G_a, args.G_b, args.alpha, ks, _workers(args))
    _emit(json_text({"metric": metric, "points": int(ks.size)}, _config(args)), args.output)


def _cmd_oracle_check(args):
    spec = _spec(args)
    if args.samples < 1:
        raise InputError("--samples must be >= 1")
    if not 0 < args.kmin < args.kmax:
        raise InputError("need 0 < kmin < kmax")
    if args.grid:
        ks = np.linspace(args.kmin, args.kmax, args.samples)
    else:
        rng = np.random.default_rng(args.seed)
        # uniform on (kmin, kmax]
        ks = args.kmax - (args.kmax - args.kmin) * rng.random(args.samples)
    layout = build_layout(spec)
    worst = 0.0
    for k in ks:
        ctx = WaveContext(args.alpha, float(k))
        worst = max(worst, abs(transmission(spec, ctx).T - brute_force_transmission(layout, ctx).T))
    ok = worst <= args.tol
    _emit(f"max_abs_dT={fmt(worst)}\n{'PASS' if ok else 'FAIL'}\n", args.output)
    if not ok:
        raise InvariantError(f"oracle mismatch {worst:.3e} exceeds tolerance {args.tol:.3e}")


COMMANDS = {
    "layout": _cmd_layout,
    "transmit": _cmd_transmit,
    "scan1d": _cmd_scan1d,
    "scan2d": _cmd_scan2d,
    "peaks": _cmd_peaks,
    "bands": _cmd_bands,
    "scaling": _cmd_scaling,
    "saturate": _cmd_saturate,
    "oracle-check": _cmd_oracle_check,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.config is not None:
            raise InputError("--config is reserved and not supported in this version")
        COMMANDS[args.command](args)
    except SFQMError as exc:
        _report(exc.exit_code, exc)
        return exc.exit_code
    except MemoryError:
        _report(3, "out of memory")
        return 3
    except (ArithmeticError, FloatingPointError) as exc:
        _report(2, exc)
        return 2
    return 0


def _report(code: int, msg) -> None:
    text = " ".join(str(msg).split())
    print(f"ERROR {code}: {text}", file=sys.stderr)


def main(argv=None):
    sys.exit(run(argv))

