"""Batch front end: run any experiment from flags or a JSON manifest and emit
CSV/JSON data and PGM/PPM images, plus a run report with output checksums.

Usage:
    lab <experiment> [--manifest FILE] [--set key=value]... [--out-dir DIR]
        [--threads N] [--seed S]

Flags override manifest keys.  Outputs are byte-deterministic for a fixed
manifest and seed, independent of the thread count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .curves import CurveD, product_series, rank_slope
from .encoders import (apply_basin_palette, apply_escape_palette, encode_csv,
                       encode_pgm, encode_ppm)
from .flows import (LorenzParams, hh_section, lorenz_attractor,
                    lorenz_fixed_points)
from .fractals import GridJob, Viewport, render_tiles
from .lattice import (FputParams, KdvParams, detect_pulses, fput_simulate,
                      kdv_simulate, recurrence_time, two_soliton_field)
from .maps import (HenonParams, bifurcation_diagram, henon_fixed_points,
                   henon_orbit)
from .reaction_diffusion import TuringParams, pattern_stats, turing_simulate
from .schema import EXPERIMENTS, SchemaError, validate_params


def _quantize(values: np.ndarray) -> np.ndarray:
    """Deterministic 8-bit quantization over the data range."""
    lo = float(values.min())
    hi = float(values.max())
    if hi <= lo:
        return np.zeros(values.shape, dtype=np.int64)
    return np.floor((values - lo) / (hi - lo) * 255.0 + 0.5).astype(np.int64)


def _run_lorenz(p, seed, threads):
    traj = lorenz_attractor(LorenzParams(p["sigma"], p["r"], p["b"]),
                            [p["x0"], p["y0"], p["z0"]], p["dt"],
                            p["transient_steps"], p["sample_steps"])
    x, y, z = traj.states.T
    csv = encode_csv([("t", traj.times), ("x", x), ("y", y), ("z", z)])
    info = {
        "fixed_points": [list(fp) for fp in
                         lorenz_fixed_points(LorenzParams(p["sigma"], p["r"],
                                                          p["b"]))],
        "bounds": {"x": [float(x.min()), float(x.max())],
                   "y": [float(y.min()), float(y.max())],
                   "z": [float(z.min()), float(z.max())]},
        "samples": len(traj),
    }
    return {"csv": csv, "json": _json_bytes(info)}


def _run_henon_heiles(p, seed, threads):
    section = hh_section(p["energy"], p["n_seeds"], p["n_crossings"],
                         p["dt"], p["seed_rule"])
    pts = section.points
    csv = encode_csv([("t", section.crossing_times),
                      ("y", pts[:, 0] if len(pts) else []),
                      ("py", pts[:, 1] if len(pts) else [])])
    info = {"energy": section.energy, "seeds": section.seed_count,
            "skipped_seeds": section.skipped_seeds, "points": len(pts)}
    return {"csv": csv, "json": _json_bytes(info)}


def _run_fput(p, seed, threads):
    params = FputParams(p["n_masses"], p["alpha"], p["dt"])
    _, series = fput_simulate(params, p["init_mode"], p["amplitude"],
                              p["t_end"], p["record_dt"])
    cols = [("t", series.times)]
    cols += [(f"E{k}", series.energies[:, k - 1])
             for k in range(1, series.k_max + 1)]
    rec = recurrence_time(series, p["init_mode"], 0.95)
    share = series.share(p["init_mode"])
    info = {"recurrence_time": rec, "min_share": float(share.min()),
            "final_share": float(share[-1])}
    return {"csv": encode_csv(cols), "json": _json_bytes(info)}


def _run_kdv(p, seed, threads):
    params = KdvParams(delta=p["delta"], dx=p["dx"], dt=p["dt"],
                       length=p["length"])
    if p["init"] == "cosine":
        init = np.cos(math.pi * params.grid())
    else:
        init = two_soliton_field(params)
    hist = kdv_simulate(params, init, p["t_end"], p["record_dt"])
    cols = [("t", hist.times)]
    cols += [(f"v{i}", hist.fields[:, i]) for i in range(params.n_cells)]
    pulses = detect_pulses(hist.fields[-1], params.dx, p["min_pulse_height"])
    info = {
        "pulses": [{"position": pos, "height": h} for pos, h in pulses],
        "mass_drift": float(abs(hist.fields[-1].sum() - hist.fields[0].sum())),
        "records": len(hist.times),
    }
    return {"csv": encode_csv(cols),
            "pgm": encode_pgm(_quantize(hist.fields), 255),
            "json": _json_bytes(info)}


def _run_turing(p, seed, threads):
    params = TuringParams(A=p["A"], B=p["B"], dt=p["dt"], dx=p["dx"],
                          nx=p["nx"], ny=p["ny"],
                          cross_diffusion=p["cross_diffusion"])
    snaps = turing_simulate(params, seed, p["noise_amp"], p["n_steps"],
                            p["record_every"])
    times = [i * p["record_every"] * p["dt"] for i in range(len(snaps))]
    stats = [pattern_stats(u) for u, _ in snaps]
    csv = encode_csv([("t", times),
                      ("mean_u", [s[0] for s in stats]),
                      ("std_u", [s[1] for s in stats]),
                      ("min_u", [s[2] for s in stats]),
                      ("max_u", [s[3] for s in stats])])
    final = snaps[-1][0].values
    info = {"final_stats": dict(zip(("mean", "std", "min", "max"),
                                    pattern_stats(snaps[-1][0]))),
            "snapshots": len(snaps)}
    return {"pgm": encode_pgm(_quantize(final), 255), "csv": csv,
            "json": _json_bytes(info)}


def _run_logistic(p, seed, threads):
    cloud = bifurcation_diagram(p["r_min"], p["r_max"], p["n_r"],
                                p["transient"], p["samples"], p["x0"])
    csv = encode_csv([("r", cloud.points[:, 0]), ("x", cloud.points[:, 1])])
    info = {"points": len(cloud.points), "r_min": cloud.r_min,
            "r_max": cloud.r_max}
    return {"csv": csv, "json": _json_bytes(info)}


def _run_henon(p, seed, threads):
    pts = henon_orbit(HenonParams(p["a"], p["b"]), p["x0"], p["y0"],
                      p["transient"], p["n"])
    csv = encode_csv([("x", pts[:, 0]), ("y", pts[:, 1])])
    info = {"fixed_points": henon_fixed_points(HenonParams(p["a"], p["b"]))}
    return {"csv": csv, "json": _json_bytes(info)}


def _viewport_of(p) -> Viewport:
    return Viewport(center=complex(p["center_re"], p["center_im"]),
                    width=p["width"], pixel_cols=p["pixel_cols"],
                    pixel_rows=p["pixel_rows"])


def _run_escape(kind, p, threads):
    job = GridJob(kind=kind, viewport=_viewport_of(p), max_iter=p["max_iter"],
                  c=complex(p.get("c_re", 0.0), p.get("c_im", 0.0)),
                  smooth=p["smooth"])
    grid = render_tiles(job, tile_size=p["tile_size"], workers=threads)
    counts8 = np.minimum(grid.counts, p["max_iter"]) * 255 // p["max_iter"]
    layer = grid.smooth if grid.smooth is not None else grid.counts
    rgb = apply_escape_palette(p["palette"], layer, p["max_iter"])
    inside = int((grid.counts == p["max_iter"]).sum())
    info = {"max_iter": p["max_iter"], "non_escaped_pixels": inside,
            "pixels": int(grid.counts.size)}
    return {"pgm": encode_pgm(counts8.astype(np.int64), 255),
            "ppm": encode_ppm(rgb), "json": _json_bytes(info)}


def _run_newton(p, seed, threads):
    job = GridJob(kind="newton", viewport=_viewport_of(p),
                  max_iter=p["max_iter"], tol=p["tol"])
    basins = render_tiles(job, tile_size=p["tile_size"], workers=threads)
    shade = (basins.labels + 1) * 85       # -1..2 -> 0, 85, 170, 255
    rgb = apply_basin_palette(p["palette"], basins.labels, basins.iterations,
                              p["max_iter"])
    info = {"perturbed_zero_seeds": basins.meta["perturbed_zero_seeds"],
            "unconverged": int((basins.labels == -1).sum())}
    return {"pgm": encode_pgm(shade.astype(np.int64), 255),
            "ppm": encode_ppm(rgb), "json": _json_bytes(info)}


def _run_bsd(p, seed, threads):
    series = product_series(CurveD(p["d"]), p["x_max"],
                            projective=p["projective"])
    csv = encode_csv([("p", series.primes.astype(float)),
                      ("log_product", series.log_products)])
    fit = rank_slope(series, p["p_min"])
    info = {"d": p["d"], "slope": fit.slope, "intercept": fit.intercept,
            "residual": fit.residual, "p_min": fit.p_min_used,
            "bad_primes": series.bad_primes}
    return {"csv": csv, "json": _json_bytes(info)}


_RUNNERS = {
    "lorenz": _run_lorenz,
    "henon-heiles": _run_henon_heiles,
    "fput": _run_fput,
    "kdv": _run_kdv,
    "turing": _run_turing,
    "logistic": _run_logistic,
    "henon": _run_henon,
    "julia": lambda p, s, t: _run_escape("julia", p, t),
    "mandelbrot": lambda p, s, t: _run_escape("mandelbrot", p, t),
    "newton": _run_newton,
    "bsd": _run_bsd,
}


def _json_bytes(payload: Any) -> bytes:
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode()


def run_experiment(experiment: str, params: dict[str, Any], seed: int = 0,
                   threads: int = 1) -> dict[str, bytes]:
    """Validate params and produce every output kind as bytes."""
    full = validate_params(experiment, params)
    return _RUNNERS[experiment](full, seed, threads)


def run_manifest(manifest: dict[str, Any], out_dir: str | Path,
                 threads: int = 1) -> dict[str, Any]:
    """Execute one manifest: write requested outputs plus run_report.json.

    The report carries normalized parameters, the package version and a
    sha256 per output; it contains nothing time- or machine-dependent so
    reruns are byte-identical.
    """
    experiment = manifest.get("experiment")
    if not isinstance(experiment, str) or experiment not in EXPERIMENTS:
        raise SchemaError(
            f"manifest.experiment must be one of {sorted(EXPERIMENTS)}, "
            f"got {experiment!r}", field_name="experiment",
            experiment=str(experiment))
    seed = int(manifest.get("seed", 0))
    params = validate_params(experiment, manifest.get("params", {}))
    spec = EXPERIMENTS[experiment]
    outputs = manifest.get("outputs") or [
        {"kind": kind, "path": f"{experiment}.{kind}"}
        for kind in spec.output_kinds
    ]
    for entry in outputs:
        if entry.get("kind") not in spec.output_kinds:
            raise SchemaError(
                f"{experiment}: output kind {entry.get('kind')!r} not in "
                f"{spec.output_kinds}", field_name="outputs",
                experiment=experiment)

    produced = _RUNNERS[experiment](params, seed, threads)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_outputs = []
    for entry in outputs:
        payload = produced[entry["kind"]]
        path = out_dir / entry["path"]
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
        report_outputs.append({
            "kind": entry["kind"],
            "path": entry["path"],
            "bytes": len(payload),
            "sha256": hashlib.sha256(payload).hexdigest(),
        })
    report = {
        "experiment": experiment,
        "seed": seed,
        "params": params,
        "version": __version__,
        "outputs": report_outputs,
    }
    (out_dir / "run_report.json").write_bytes(_json_bytes(report))
    return report


def _registry_epilog() -> str:
    lines = ["experiments and parameters:"]
    for name, spec in EXPERIMENTS.items():
        lines.append(f"  {name}: {spec.doc}")
        for p in spec.params:
            heat = "hot" if p.hot else "cold"
            default = "required" if (p.required and p.default is None) \
                else f"default {p.default!r}"
            lines.append(f"      {p.name} ({p.kind}, {heat}, {default})")
        lines.append(f"      outputs: {', '.join(spec.output_kinds)}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lab",
        description="Run a numerical experiment and write its artifacts.",
        epilog=_registry_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("experiment", choices=sorted(EXPERIMENTS),
                        metavar="experiment",
                        help=f"one of: {', '.join(sorted(EXPERIMENTS))}")
    parser.add_argument("--manifest", type=Path,
                        help="JSON manifest; flags override its keys")
    parser.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="KEY=VALUE",
                        help="override one parameter (repeatable)")
    parser.add_argument("--out-dir", type=Path, default=Path("."),
                        help="directory for outputs and the run report")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("LAB_THREADS", "1")),
                        help="worker threads (env LAB_THREADS)")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for experiments that draw noise")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        manifest: dict[str, Any] = {}
        if args.manifest is not None:
            manifest = json.loads(args.manifest.read_text())
        manifest.setdefault("experiment", args.experiment)
        if manifest["experiment"] != args.experiment:
            raise SchemaError(
                f"manifest experiment {manifest['experiment']!r} != "
                f"command line {args.experiment!r}",
                field_name="experiment", experiment=args.experiment)
        params = dict(manifest.get("params", {}))
        for item in args.overrides:
            if "=" not in item:
                raise SchemaError(f"--set expects KEY=VALUE, got {item!r}")
            key, _, value = item.partition("=")
            params[key] = value
        manifest["params"] = params
        if args.seed is not None:
            manifest["seed"] = args.seed
        report = run_manifest(manifest, args.out_dir, threads=args.threads)
    except SchemaError as err:
        json.dump({"error": "schema", "experiment": err.experiment,
                   "field": err.field, "message": str(err)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 2
    except Exception as err:  # simulation/runtime failure
        json.dump({"error": type(err).__name__, "message": str(err)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
