"""Command-line pipeline for open-baker experiments.

Each subcommand maps onto one library operation, writes its CSV/JSON
artifacts into --outdir, and records a RunManifest JSON naming every
output with its SHA-256.  Given identical arguments (and seed, where one
applies) the artifact files are byte-identical across reruns; only the
manifest's wall_time_s field varies.

Exit codes: 0 success, 2 ill-posed input (validation), 3 numerical
failure.  Rational inputs are "p/q" tokens; decimal tokens are accepted
only where no exact-arithmetic guarantee is at stake (purely spectral
commands), and are parsed as exact decimal fractions, never binary
floats.  Dimension ranges use start:stop:step (stop inclusive); values
failing the N*ell_i divisibility requirement are skipped and listed in
the manifest.

The environment variable OQMAP_THREADS caps the worker pool used to fan
out independent dimensions (radius-scan, weyl-fit).
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .classical import (
    BakerSpec,
    cantor_dimension,
    escape_report,
    spec_digest,
    thermo_report,
    validate_spec,
)
from .errors import NumericalError, ValidationError
from .phasespace import CoherentFrame, husimi_report
from .quantize import (
    QuantizationConfig,
    apply_diagonal_phases,
    quantize_open,
    walsh_open,
)
from .serialize import (
    fmt_float,
    sha256_file,
    write_counts_csv,
    write_husimi_csv,
    write_husimi_pgm,
    write_intervals_csv,
    write_json,
    write_matrix,
    write_matrix_csv,
    write_spectrum_csv,
)
from .spectral import (
    count_profile,
    effective_hamiltonian,
    eigen_decompose,
    trapped_quasiprojector,
    weyl_fit,
)

__all__ = ["main", "build_parser", "exit_code_for"]


# ---------------------------------------------------------------------------
# token parsing
# ---------------------------------------------------------------------------

def parse_rational(token: str, allow_decimal: bool) -> Fraction:
    """Parse 'p/q', an integer, or (where allowed) an exact decimal."""
    token = token.strip()
    try:
        if "/" in token:
            num, den = token.split("/")
            return Fraction(int(num), int(den))
        if any(c in token for c in ".eE"):
            if not allow_decimal:
                raise ValidationError(
                    f"decimal token {token!r} not accepted here; "
                    f"use an exact p/q rational")
            return Fraction(token)  # exact decimal, not a binary float
        return Fraction(int(token))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"cannot parse rational token {token!r}") from exc


def parse_partition(text: str, allow_decimal: bool) -> Tuple[Fraction, ...]:
    return tuple(parse_rational(tok, allow_decimal)
                 for tok in text.split(",") if tok.strip())


def parse_keep(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ValidationError(f"cannot parse keep set {text!r}") from exc


def parse_bloch(text: str) -> Tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValidationError(f"bloch phases must be 'tx,txi', got {text!r}")
    try:
        tx, txi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ValidationError(f"cannot parse bloch phases {text!r}") from exc
    return tx, txi


def parse_dimensions(text: str) -> List[int]:
    """A single N or an inclusive start:stop:step range."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            values = [int(parts[0])]
        elif len(parts) == 3:
            start, stop, step = (int(p) for p in parts)
            if step < 1 or stop < start:
                raise ValueError
            values = list(range(start, stop + 1, step))
        else:
            raise ValueError
    except ValueError:
        raise ValidationError(
            f"dimension range must be N or start:stop:step, got {text!r}")
    if not values or values[0] < 1:
        raise ValidationError(f"dimensions must be >= 1, got {text!r}")
    return values


def parse_float_grid(text: str) -> np.ndarray:
    """lo:hi:count linear grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid must be lo:hi:count, got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ValidationError(f"cannot parse grid {text!r}") from exc
    if count < 1:
        raise ValidationError(f"grid needs >= 1 points, got {count}")
    return np.linspace(lo, hi, count)


def _spec_from_args(args, allow_decimal: bool) -> BakerSpec:
    return validate_spec(parse_partition(args.partition, allow_decimal),
                         parse_keep(args.keep))


def _worker_count(jobs: int) -> int:
    env = os.environ.get("OQMAP_THREADS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError as exc:
            raise ValidationError(f"OQMAP_THREADS={env!r} is not an integer") from exc
        if cap < 1:
            raise ValidationError(f"OQMAP_THREADS must be >= 1, got {cap}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, jobs))


# ---------------------------------------------------------------------------
# manifest plumbing
# ---------------------------------------------------------------------------

def _echo_parameters(args) -> Dict[str, object]:
    skip = {"func"}
    echo = {}
    for key, value in vars(args).items():
        if key in skip:
            continue
        echo[key] = str(value) if isinstance(value, Path) else value
    return echo


def _finish(outdir: Path, command: str, args, digest: Optional[str],
            seed: Optional[int], started: float, outputs: Sequence[Path],
            skipped: Sequence[int] = ()) -> None:
    manifest = {
        "tool": "oqmap",
        "version": __version__,
        "command": command,
        "parameters": _echo_parameters(args),
        "spec_digest": digest,
        "seed": seed,
        "wall_time_s": time.perf_counter() - started,
        "outputs": [{"path": p.name, "sha256": sha256_file(p),
                     "bytes": p.stat().st_size} for p in outputs],
        "skipped_dimensions": list(skipped),
    }
    write_json(outdir / f"{command.replace('-', '_')}_manifest.json", manifest)


def _outdir(args) -> Path:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_thermo(args) -> None:
    started = time.perf_counter()
    out = _outdir(args)
    spec = _spec_from_args(args, allow_decimal=False)
    s_grid = parse_float_grid(args.s_grid) if args.s_grid else None
    report = thermo_report(spec, s_grid)
    payload = {
        "spec_digest": spec_digest(spec),
        "partition": list(spec.partition),
        "keep": list(spec.keep),
        "s_grid": list(report.s_grid),
        "pressure_values": list(report.values),
        "nu": report.nu,
        "gamma_cl": report.gamma_cl,
        "h_top": report.h_top,
        "g_half": report.g_half,
        "g_cl": report.g_cl,
        "convexity_ok": report.convexity_ok,
    }
    outputs = [write_json(out / "thermo.json", payload)]
    _finish(out, "thermo", args, spec_digest(spec), None, started, outputs)


def cmd_escape(args) -> None:
    started = time.perf_counter()
    out = _outdir(args)
    spec = _spec_from_args(args, allow_decimal=False)
    report = escape_report(spec, args.horizon)
    payload = {
        "spec_digest": spec_digest(spec),
        "partition": list(spec.partition),
        "keep": list(spec.keep),
        "horizon": report.horizon,
        "escaped_volumes": list(report.escaped_volumes),
        "survivor_volume": report.survivor_volume,
        "survivor_interval_count": len(report.survivor_intervals),
    }
    outputs = [
        write_json(out / "escape.json", payload),
        write_intervals_csv(out / "escape_intervals.csv",
                            report.survivor_intervals),
    ]
    _finish(out, "escape", args, spec_digest(spec), None, started, outputs)


def _quantize(spec: BakerSpec, N: int, bloch: Tuple[float, float]):
    return quantize_open(spec, QuantizationConfig(N, bloch))


def cmd_spectrum(args) -> None:
    started = time.perf_counter()
    out = _outdir(args)
    spec = _spec_from_args(args, allow_decimal=True)
    bloch = parse_bloch(args.bloch)
    quantization = _quantize(spec, args.N, bloch)
    spectrum = eigen_decompose(quantization.open_map)
    outputs = [write_spectrum_csv(out / "spectrum.csv", spectrum.eigenvalues)]
    if args.dump_matrix:
        outputs.append(write_matrix(out / "spectrum_matrix.bin",
                                    quantization.open_map.matrix))
        if args.N <= 64:
            outputs.append(write_matrix_csv(out / "spectrum_matrix.csv",
                                            quantization.open_map.matrix))
    payload = {
        "spec_digest": spec_digest(spec),
        "N": args.N,
        "bloch": list(bloch),
        "kind": quantization.open_map.kind,
        "backward_error": spectrum.backward_error,
        "spectral_radius": float(np.abs(spectrum.eigenvalues).max()),
        "eigenvalue_count": spectrum.dimension,
    }
    outputs.append(write_json(out / "spectrum.json", payload))
    _finish(out, "spectrum", args, spec_digest(spec), None, started, outputs)


def cmd_count(args) -> None:
    started = time.perf_counter()
    out = _outdir(args)
    spec = _spec_from_args(args, allow_decimal=True)
    bloch = parse_bloch(args.bloch)
    nu = args.nu if args.nu is not None else cantor_dimension(spec)
    spectrum = eigen_decompose(_quantize(spec, args.N, bloch).open_map)
    report = count_profile(spectrum, parse_float_grid(args.r_grid), nu)
    outputs = [
        write_counts_csv(out / "count.csv", report.radii, report.counts,
                         report.rescaled),
        write_json(out / "count.json", {
            "spec_digest": spec_digest(spec),
            "N": args.N,
            "bloch": list(bloch),
            "nu": report.nu,
            "backward_error": spectrum.backward_error,
            "spectral_radius": report.spectral_radius,
        }),
    ]
    _finish(out, "count", args, spec_digest(spec), None, started, outputs)


def _admissible(spec: BakerSpec, dims: Sequence[int]) -> Tuple[List[int], List[int]]:
    good, skipped = [], []
    for N in dims:
        if all((ell * N).denominator == 1 for ell in spec.lengths):
            good.append(N)
        else:
            skipped.append(N)
    return good, skipped


def cmd_radius_scan(args) -> None:
    started = time.perf_counter()
    out = _outdir(args)
    spec = _spec_from_args(args, allow_decimal=True)
    bloch = parse_bloch(args.bloch)
    dims, skipped = _admissible(spec, parse_dimensions(args.N))
    report = thermo_report(spec)
    g_half, g_cl = report.g_half, report.g_cl

    def radius_of(N: int) -> Tuple[int, float]:
        spectrum = eigen_decompose(_quantize(spec, N, bloch).open_map)
        return N, float(np.abs(spectrum.eigenvalues).max())

    radii: Dict[int, float] = {}
    if dims:
        with ThreadPoolExecutor(max_workers=_worker_count(len(dims))) as pool:
            for N, r in pool.map(radius_of, dims):
                radii[N] = r

    lines = ["N,r_sp,g_half,g_cl"]
    for N in dims:
        lines.append(f"{N},{fmt_float(radii[N])},{fmt_float(g_half)},"
                     f"{fmt_float(g_cl)}")
    csv_path = out / "radius_scan.csv"
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _finish(out, "radius-scan", args, spec_digest(spec), None, started,
            [csv_path], skipped)


def cmd_weyl_fit(args) -> None:
    started = time.perf_counter()
    out = _outdir(args)
    spec = _spec_from_args(args, allow_decimal=True)
    bloch = parse_bloch(args.bloch)
    dims, skipped = _admissible(spec, parse_dimensions(args.N))
    radius = args.radius
    if not 0.0 < radius <= 1.1:
        raise ValidationError(f"radius must lie in (0, 1.1], got {radius}")

    def count_at(N: int) -> Tuple[int, int]:
        spectrum = eigen_decompose(_quantize(spec, N, bloch).open_map)
        return N, int(np.count_nonzero(np.abs(spectrum.eigenvalues) >= radius))

    samples: List[Tuple[int, int]] = []
    if dims:
        with ThreadPoolExecutor(max_workers=_worker_count(len(dims))) as pool:
            samples = sorted(pool.map(count_at, dims))

    fit = weyl_fit(samples, radius)
    lines = ["N,count"]
    for N, c in samples:
        lines.append(f"{N},{c}")
    csv_path = out / "weyl_fit_samples.csv"
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    outputs = [
        csv_path,
        write_json(out / "weyl_fit.json", {
            "spec_digest": spec_digest(spec),
            "radius": fit.radius,
            "nu_hat": fit.nu_hat,
            "nu_classical": cantor_dimension(spec),
            "log_prefactor": fit.log_prefactor,
            "residual_stderr": fit.residual_stderr,
            "samples_used": [list(s) for s in fit.samples_used],
            "samples_dropped": [list(s) for s in fit.samples_dropped],
        }),
    ]
    _finish(out, "weyl-fit", args, spec_digest(spec), None, started,
            outputs, skipped)


def cmd_walsh(args) -> None:
    started = time.perf_counter()
    out = _outdir(args)
    keep = parse_keep(args.keep)
    model = walsh_open(args.branches, keep, args.word_length)
    qmap = model.open_map
    if args.phases_seed is not None:
        qmap = apply_diagonal_phases(qmap, seed=args.phases_seed)
    spectrum = eigen_decompose(qmap)
    moduli = np.abs(spectrum.eigenvalues)
    n = len(model.keep)
    r_c = float(abs(np.linalg.det(model.omega_tilde))) ** (1.0 / n)
    payload = {
        "branches": args.branches,
        "keep": list(model.keep),
        "word_length": args.word_length,
        "dimension": model.dimension,
        "phases_seed": args.phases_seed,
        "threshold": args.threshold,
        "nontrivial_count": int(np.count_nonzero(moduli > args.threshold)),
        "spectral_radius": float(moduli.max()),
        "radius_bound": n / math.sqrt(args.branches),
        "r_c": r_c,
        "omega_tilde_eigenvalues": list(np.linalg.eigvals(model.omega_tilde)),
        "backward_error": spectrum.backward_error,
    }
    outputs = [
        write_spectrum_csv(out / "walsh_spectrum.csv", spectrum.eigenvalues),
        write_json(out / "walsh.json", payload),
    ]
    _finish(out, "walsh", args, qmap.digest, args.phases_seed, started, outputs)


def cmd_effective(args) -> None:
    started = time.perf_counter()
    out = _outdir(args)
    spec = _spec_from_args(args, allow_decimal=False)
    bloch = parse_bloch(args.bloch)
    config = QuantizationConfig(args.N, bloch)
    quantization = quantize_open(spec, config)
    quasi = trapped_quasiprojector(spec, config, args.level)
    probes = [args.probe_radius * np.exp(2j * np.pi * j / args.probe_count)
              for j in range(args.probe_count)]
    report = effective_hamiltonian(quantization.open_map, quasi.diagonal,
                                   probes, args.radius, m_max=args.m_max)
    lines = ["index,eig_re,eig_im,root_re,root_im,distance"]
    for i, (eig, root) in enumerate(zip(report.outer_eigenvalues,
                                        report.refined_roots)):
        lines.append(f"{i},{fmt_float(eig.real)},{fmt_float(eig.imag)},"
                     f"{fmt_float(root.real)},{fmt_float(root.imag)},"
                     f"{fmt_float(abs(eig - root))}")
    csv_path = out / "effective_roots.csv"
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    payload = {
        "spec_digest": spec_digest(spec),
        "N": args.N,
        "bloch": list(bloch),
        "cover_level": args.level,
        "projector_rank": report.projector_rank,
        "bulk_spectral_radius": report.bulk_spectral_radius,
        "radius": report.radius,
        "probes": list(report.probes),
        "identity_rel_errors": list(report.identity_rel_errors),
        "max_identity_rel_error": report.max_identity_rel_error,
        "outer_count": len(report.outer_eigenvalues),
        "matched": len(report.match_distances),
        "max_match_distance": max(report.match_distances, default=0.0),
        "unmatched": report.unmatched,
        "clustered": report.clustered,
        "residual_norms": list(report.residual_norms),
    }
    outputs = [csv_path, write_json(out / "effective.json", payload)]
    _finish(out, "effective", args, spec_digest(spec), None, started, outputs)


def cmd_husimi(args) -> None:
    started = time.perf_counter()
    out = _outdir(args)
    spec = _spec_from_args(args, allow_decimal=False)
    bloch = parse_bloch(args.bloch)
    quantization = _quantize(spec, args.N, bloch)
    spectrum = eigen_decompose(quantization.open_map, want_vectors=True)
    if not 0 <= args.mode_rank < spectrum.dimension:
        raise ValidationError(
            f"mode rank {args.mode_rank} outside 0..{spectrum.dimension - 1}")
    mode = spectrum.vectors[:, args.mode_rank]
    mode = mode / np.linalg.norm(mode)
    eigenvalue = complex(spectrum.eigenvalues[args.mode_rank])

    thicken = args.thicken
    eps = (3.0 / math.sqrt(2.0 * math.pi * args.N) if thicken == "auto"
           else float(thicken))
    frame = CoherentFrame(args.N, bloch)
    report = husimi_report(mode, frame, args.grid, spec, args.level, eps)
    modulus = abs(eigenvalue)
    payload = {
        "spec_digest": spec_digest(spec),
        "N": args.N,
        "bloch": list(bloch),
        "mode_rank": args.mode_rank,
        "eigenvalue": eigenvalue,
        "modulus": modulus,
        "lifetime": math.inf if modulus == 0 else -2.0 * math.log(modulus),
        "grid": args.grid,
        "cover_level": args.level,
        "thickening": report.thickening,
        "mass_near_kplus": report.mass_near_kplus,
        "area_fraction": report.area_fraction,
        "enhancement_ratio": report.enhancement_ratio,
        "backward_error": spectrum.backward_error,
    }
    outputs = [
        write_husimi_csv(out / "husimi.csv", report.field),
        write_husimi_pgm(out / "husimi.pgm", report.field),
        write_json(out / "husimi.json", payload),
    ]
    _finish(out, "husimi", args, spec_digest(spec), None, started, outputs)


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, partition: bool = True) -> None:
    if partition:
        p.add_argument("--partition", required=True,
                       help="comma-separated partition points 0,...,1 "
                            "as p/q rationals")
        p.add_argument("--keep", required=True,
                       help="comma-separated kept rectangle indices")
    p.add_argument("--outdir", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oqmap",
        description="numerical laboratory for open baker maps and their "
                    "quantizations")
    parser.add_argument("--version", action="version",
                        version=f"oqmap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thermo", help="pressure curve, dimension, decay rate")
    _add_common(p)
    p.add_argument("--s-grid", default=None, help="pressure grid lo:hi:count")
    p.set_defaults(func=cmd_thermo)

    p = sub.add_parser("escape", help="exact escape-set volumes")
    _add_common(p)
    p.add_argument("--horizon", type=int, required=True)
    p.set_defaults(func=cmd_escape)

    p = sub.add_parser("spectrum", help="eigenvalues of the open quantum map")
    _add_common(p)
    p.add_argument("--N", type=int, required=True, help="quantum dimension")
    p.add_argument("--bloch", default="0,0", help="boundary phases tx,txi")
    p.add_argument("--dump-matrix", action="store_true",
                   help="also write the open map matrix (binary; CSV if N<=64)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("count", help="eigenvalue counts over a radius grid")
    _add_common(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--bloch", default="0,0")
    p.add_argument("--r-grid", default="0.05:1.0:20")
    p.add_argument("--nu", type=float, default=None,
                   help="rescaling exponent (default: trapped-set dimension /2 "
                        "exponent of the x-Cantor set)")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("radius-scan",
                       help="spectral radius against N with pressure bounds")
    _add_common(p)
    p.add_argument("--N", required=True, help="range start:stop:step")
    p.add_argument("--bloch", default="0,0")
    p.set_defaults(func=cmd_radius_scan)

    p = sub.add_parser("weyl-fit", help="fit the fractal Weyl exponent")
    _add_common(p)
    p.add_argument("--N", required=True, help="range start:stop:step")
    p.add_argument("--radius", type=float, required=True,
                   help="count eigenvalues with modulus >= radius")
    p.add_argument("--bloch", default="0,0")
    p.set_defaults(func=cmd_weyl_fit)

    p = sub.add_parser("walsh", help="Walsh tensor model spectrum")
    p.add_argument("--branches", type=int, required=True, help="symbol count D")
    p.add_argument("--keep", required=True)
    p.add_argument("--word-length", type=int, required=True, help="k, N = D^k")
    p.add_argument("--phases-seed", type=int, default=None,
                   help="seed for a random diagonal phase perturbation")
    p.add_argument("--threshold", type=float, default=1e-8,
                   help="modulus above which an eigenvalue counts as nontrivial")
    p.add_argument("--outdir", default=".")
    p.set_defaults(func=cmd_walsh)

    p = sub.add_parser("effective",
                       help="Schur-complement reduction onto the trapped cover")
    _add_common(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--bloch", default="0,0")
    p.add_argument("--level", type=int, required=True, help="cover level m")
    p.add_argument("--radius", type=float, required=True,
                   help="annulus |lambda| >= radius to re-derive from det E")
    p.add_argument("--probe-radius", type=float, default=1.5)
    p.add_argument("--probe-count", type=int, default=8)
    p.add_argument("--m-max", type=int, default=6,
                   help="residual norms ||(I-Pi)M^m|| reported for m=1..m_max")
    p.set_defaults(func=cmd_effective)

    p = sub.add_parser("husimi", help="Husimi field of one eigenmode")
    _add_common(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--bloch", default="0,0")
    p.add_argument("--mode-rank", type=int, default=0,
                   help="eigenmode index in descending-modulus order")
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--level", type=int, default=4, help="K+ cover level")
    p.add_argument("--thicken", default="auto",
                   help="strip thickening; 'auto' = three coherent widths "
                        "3/sqrt(2 pi N)")
    p.set_defaults(func=cmd_husimi)

    return parser


def exit_code_for(exc: BaseException) -> int:
    """Exit-code mapping: validation -> 2, numerical -> 3."""
    if isinstance(exc, ValidationError):
        return 2
    if isinstance(exc, NumericalError):
        return 3
    if isinstance(exc, ValueError):
        return 2
    raise exc


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValidationError, NumericalError, ValueError) as exc:
        print(f"oqmap: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
