"""Command-line driver: simulate, fit, pipeline, report.

``simulate`` writes scan CSVs plus a manifest; ``fit`` reads them back and
writes the extraction results as JSON; ``pipeline`` chains the two, adds
the configured pass/fail checks, and writes a report; ``report`` renders
one or two report files as the summary table.

Exit codes: 0 success, 1 a report check failed, 2 validation problem,
3 fit failure, 4 I/O or file-format problem.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from typing import Dict, List, Optional, Sequence
from pathlib import Path

from . import dispersion, estimate, mzi, simkit
from .config import ExperimentConfig, load_config
from .errors import (
    ConfigError,
    DomainError,
    FileFormatError,
    FitFailureError,
    SppDecohError,
)

# Simulation stream ids, keeping decay scans, fringe scans and the g2 run
# on disjoint RNG streams under the single config seed.
DECAY_SCAN_BASE = 0
FRINGE_SCAN_BASE = 100
G2_SCAN_ID = 200

MANIFEST_NAME = "manifest.json"
FITS_NAME = "fits.json"
REPORT_NAME = "report.json"

REPORT_ROWS = (
    ("Gamma1 [1/s]", "gamma1_s", "gamma1_s_std"),
    ("Gamma2* [1/s]", "gamma2_star_s", "gamma2_star_s_std"),
    ("Gamma2 [1/s]", "gamma2_s", "gamma2_s_std"),
    ("T1 [s]", "T1_s", "T1_s_std"),
    ("T2* [s]", "T2_star_s", "T2_star_s_std"),
    ("T2 [s]", "T2_s", "T2_s_std"),
)


def _config_sha256(path: str) -> str:
    with open(path, "rb") as handle:
        return hashlib.sha256(handle.read()).hexdigest()


def _write_json(record: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(record, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _read_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}:{exc.lineno}: not valid JSON: {exc.msg}")


def _load_manifest(out_dir: Path, config_hash: str) -> dict:
    path = out_dir / MANIFEST_NAME
    if path.exists():
        manifest = _read_json(path)
        if manifest.get("config_sha256") == config_hash:
            return manifest
    return {"config_sha256": config_hash, "files": []}


def _merge_entries(manifest: dict, kind: str, entries: List[dict]) -> None:
    kept = [e for e in manifest["files"] if e.get("kind") != kind]
    manifest["files"] = kept + entries


# ---------------------------------------------------------------------------
# simulate

def run_simulate(
    config: ExperimentConfig, kind: str, out_dir: Path, config_hash: str
) -> dict:
    """Write the requested scan CSVs and update the manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _load_manifest(out_dir, config_hash)
    manifest["seed"] = config.seed
    manifest["regime"] = config.regime
    kinds = ("decay", "fringe", "g2") if kind == "all" else (kind,)
    geom = mzi.StageGeometry(scale=config.stage_scale, wavelength=config.lambda0)
    positions = config.stage.positions()

    if "decay" in kinds:
        entries = []
        for i in range(config.decay.n_scans):
            scan = simkit.simulate_decay_scan(
                config.truth,
                config.decay.lengths(),
                base_rate=config.decay_rate,
                integration_time=config.integration,
                regime=config.regime,
                seed=config.seed,
                scan_id=DECAY_SCAN_BASE + i,
            )
            name = f"decay_{i:02d}.csv"
            simkit.write_decay_csv(scan, out_dir / name)
            entries.append({"kind": "decay", "path": name})
        _merge_entries(manifest, "decay", entries)

    if "fringe" in kinds:
        entries = []
        i_in = config.fringe_rate * config.integration
        for i, waveguide in enumerate(config.waveguides):
            scan = simkit.simulate_fringe_scan(
                config.truth,
                config.gamma_int,
                waveguide,
                positions,
                geom,
                i_in=i_in,
                seed=config.seed,
                reflectance=config.reflectance,
                transmittance=config.transmittance,
                g2p=config.gamma2_prime,
                k_spp=config.k_spp,
                regime=config.regime,
                scan_id=FRINGE_SCAN_BASE + i,
            )
            name = f"fringe_{waveguide.label}.csv"
            simkit.write_fringe_csv(scan, out_dir / name)
            entries.append({
                "kind": "fringe",
                "path": name,
                "label": waveguide.label,
                "length_um": estimate.round9(waveguide.length * 1e6),
            })
        _merge_entries(manifest, "fringe", entries)

    if "g2" in kinds:
        if config.source is None:
            raise ConfigError(
                "kind=g2 requires a [source] section in the config"
            )
        counts = simkit.simulate_g2_counts(
            config.source, config.g2_integration, config.seed,
            scan_id=G2_SCAN_ID,
        )
        simkit.write_g2_csv(counts, out_dir / "g2.csv")
        _merge_entries(manifest, "g2", [{"kind": "g2", "path": "g2.csv"}])

    _write_json(manifest, out_dir / MANIFEST_NAME)
    return manifest


# ---------------------------------------------------------------------------
# fit

def _stage(label: str, exc: SppDecohError):
    return type(exc)(f"[{label}] {exc}")


def _pooled_decay_scan(out_dir: Path, manifest: dict, regime: str) -> simkit.DecayScan:
    """Sum repeated decay scans per length; Poisson totals stay Poisson."""
    entries = [e for e in manifest["files"] if e["kind"] == "decay"]
    if not entries:
        raise DomainError("manifest lists no decay scans; run simulate first")
    totals: Dict[float, List[float]] = {}
    for entry in entries:
        scan = simkit.read_decay_csv(out_dir / entry["path"], regime=regime)
        for point in scan.points:
            bucket = totals.setdefault(point.length, [0, 0.0])
            bucket[0] += point.counts
            bucket[1] += point.integration_time
    points = tuple(
        simkit.DecayPoint(length, int(counts), time)
        for length, (counts, time) in sorted(totals.items())
    )
    return simkit.DecayScan(regime=regime, points=points)


def run_fit(config: ExperimentConfig, out_dir: Path, config_hash: str) -> dict:
    """Extract all parameters from the CSVs listed in the manifest."""
    manifest = _read_json(out_dir / MANIFEST_NAME)
    if manifest.get("config_sha256") != config_hash:
        raise ConfigError(
            f"{out_dir / MANIFEST_NAME} was produced by a different config"
        )
    vg = config.truth.group_velocity

    try:
        decay_scan = _pooled_decay_scan(out_dir, manifest, config.regime)
        decay_fit = estimate.fit_exponential_decay(decay_scan, vg)
    except SppDecohError as exc:
        raise _stage("decay-fit", exc) from exc

    fringe_entries = [e for e in manifest["files"] if e["kind"] == "fringe"]
    if not fringe_entries:
        raise DomainError("manifest lists no fringe scans; run simulate first")
    fringe_records = []
    line_points = []
    for index, entry in enumerate(fringe_entries):
        length = entry["length_um"] * 1e-6
        # Arm dampings for the fit come from the measured propagation
        # length, the way a calibration would supply them.
        gt1 = length / decay_fit.propagation_length
        knowns = simkit.FringeKnowns(
            reflectance=config.reflectance,
            transmittance=config.transmittance,
            g1p=mzi.balance_free_arm(gt1, config.gamma2_prime),
            g2p=config.gamma2_prime,
            gt1=gt1,
        )
        points = simkit.read_fringe_points(out_dir / entry["path"])
        scan = simkit.FringeScan(
            waveguide=simkit.WaveguideSpec(length=length, label=entry["label"]),
            regime=config.regime,
            points=tuple(points),
            knowns=knowns,
        )
        try:
            mc = estimate.monte_carlo_fringe(
                scan,
                n_instances=config.mc_instances,
                seed=config.seed + index,
                lambda0=config.lambda0,
            )
        except SppDecohError as exc:
            raise _stage(f"fringe-fit {entry['label']}", exc) from exc
        fringe_records.append(estimate.mc_record(mc, length))
        if mc.std is None:
            raise DomainError(
                "mc.n_instances must be >= 2 to weight the line fit"
            )
        line_points.append((length, mc.mean, mc.std))

    try:
        line = estimate.fit_gamma_eff_line(line_points)
        # A truly undamped sample can fit to a slightly negative slope;
        # clamp at the physical boundary so the summary stays defined.
        summary = estimate.summarize(
            decay_fit.gamma1,
            decay_fit.gamma1_std,
            max(line.slope, 0.0),
            line.slope_std,
            vg,
            regime=config.regime,
        )
    except SppDecohError as exc:
        raise _stage("line-fit", exc) from exc

    fits = {
        "config_sha256": config_hash,
        "seed": config.seed,
        "regime": config.regime,
        "decay": estimate.decay_fit_record(decay_fit),
        "fringes": fringe_records,
        "line": estimate.line_fit_record(line),
        "summary": estimate.summary_record(summary),
    }

    g2_entries = [e for e in manifest["files"] if e["kind"] == "g2"]
    if g2_entries:
        counts = simkit.read_g2_csv(out_dir / g2_entries[0]["path"])
        fits["g2"] = {
            "value": estimate.round9(simkit.estimate_g2(counts)),
            "n_herald": counts.n_herald,
            "n_abc": counts.n_abc,
        }

    _write_json(fits, out_dir / FITS_NAME)
    return fits


# ---------------------------------------------------------------------------
# pipeline

def _overlap_value(config: ExperimentConfig) -> float:
    if config.overlap.gvd is not None:
        gvd = config.overlap.gvd
    else:
        table = dispersion.stripe_waveguide_table()
        gvd = dispersion.gvd_coefficient(table)
    spec = dispersion.WavepacketSpec.from_fwhm(
        config.overlap.delta_lambda, config.lambda0
    )
    return dispersion.overlap_after_propagation(
        spec, config.overlap.length, gvd
    )


def _build_checks(config: ExperimentConfig, fits: dict, overlap: float) -> List[dict]:
    checks = [{
        "name": "overlap",
        "value": estimate.round9(overlap),
        "min": config.overlap.min_overlap,
        "passed": bool(overlap >= config.overlap.min_overlap),
    }]
    expected = config.checks
    if expected is not None:
        l_um = fits["decay"]["L_um"]
        target_um = expected.l_target * 1e6
        checks.append({
            "name": "L_um",
            "value": l_um,
            "target": estimate.round9(target_um),
            "tol": estimate.round9(expected.l_tol_rel * target_um),
            "passed": bool(
                abs(l_um - target_um) <= expected.l_tol_rel * target_um
            ),
        })
        slope = fits["line"]["slope_per_um"]
        slope_std = fits["line"]["slope_per_um_std"]
        target_slope = expected.slope_target * 1e-6
        tol = expected.slope_tol_stds * slope_std
        checks.append({
            "name": "slope_per_um",
            "value": slope,
            "target": estimate.round9(target_slope),
            "tol": estimate.round9(tol),
            "passed": bool(abs(slope - target_slope) <= tol),
        })
        t2 = fits["summary"]["T2_s"]
        checks.append({
            "name": "T2_s",
            "value": t2,
            "target": estimate.round9(expected.t2_target),
            "tol": estimate.round9(expected.t2_tol_rel * expected.t2_target),
            "passed": bool(
                abs(t2 - expected.t2_target)
                <= expected.t2_tol_rel * expected.t2_target
            ),
        })
        if expected.g2_expected is not None and "g2" in fits:
            value = fits["g2"]["value"]
            tol = expected.g2_tol if expected.g2_tol is not None else 0.01
            checks.append({
                "name": "g2",
                "value": value,
                "target": expected.g2_expected,
                "tol": tol,
                "passed": bool(abs(value - expected.g2_expected) <= tol),
            })
    return checks


def run_pipeline(config: ExperimentConfig, out_dir: Path, config_hash: str) -> dict:
    """simulate -> fit -> checks; returns the report record."""
    if config.source is None:
        run_simulate(config, "decay", out_dir, config_hash)
        run_simulate(config, "fringe", out_dir, config_hash)
    else:
        run_simulate(config, "all", out_dir, config_hash)
    fits = run_fit(config, out_dir, config_hash)
    overlap = _overlap_value(config)
    checks = _build_checks(config, fits, overlap)
    report = dict(fits)
    report["overlap"] = {
        "value": estimate.round9(overlap),
        "min": config.overlap.min_overlap,
    }
    report["checks"] = checks
    report["passed"] = bool(all(c["passed"] for c in checks))
    _write_json(report, out_dir / REPORT_NAME)
    return report


# ---------------------------------------------------------------------------
# report

def _format_value(value, std) -> str:
    if value is None:
        return "-"
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if std is None or (isinstance(std, float) and math.isinf(std)):
        return f"{value:.4g}"
    return f"{value:.4g} +- {std:.2g}"


def render_report(records: Sequence[dict]) -> str:
    """Fixed-layout table: one row per quantity, one column per regime.

    Rows, in order: Gamma1, Gamma2*, Gamma2, T1, T2*, T2. The first column
    is 14 characters, each regime column 26.
    """
    for record in records:
        if "summary" not in record:
            raise FileFormatError("report record has no 'summary' section")
    header = "quantity".ljust(14) + "".join(
        str(r["summary"].get("regime", "?")).rjust(26) for r in records
    )
    lines = [header]
    for label, key, std_key in REPORT_ROWS:
        row = label.ljust(14)
        for record in records:
            summary = record["summary"]
            row += _format_value(summary.get(key), summary.get(std_key)).rjust(26)
        lines.append(row)
    for record in records:
        if "g2" in record:
            lines.append(
                f"g2 ({record['summary'].get('regime', '?')}): "
                f"{record['g2']['value']:.4g}"
            )
        if "overlap" in record:
            lines.append(
                f"overlap ({record['summary'].get('regime', '?')}): "
                f"{record['overlap']['value']:.4g}"
            )
    return "\n".join(lines)


def run_report(paths: Sequence[str]) -> str:
    records = [_read_json(path) for path in paths]
    return render_report(records)


# ---------------------------------------------------------------------------
# argument parsing and dispatch

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sppdecoh",
        description="Simulate and analyze plasmon interferometry experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="TOML experiment file")
            p.add_argument("--seed", type=int, default=None,
                           help="override the config seed")
            p.add_argument("--regime", choices=("classical", "quantum"),
                           default=None, help="override the config regime")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--json", action="store_true",
                       help="echo the resulting record as JSON on stdout")

    p_sim = sub.add_parser("simulate", help="write synthetic scan CSVs")
    p_sim.add_argument("kind", nargs="?", default="all",
                       choices=("decay", "fringe", "g2", "all"))
    add_common(p_sim)

    p_fit = sub.add_parser("fit", help="fit previously simulated scans")
    add_common(p_fit)

    p_pipe = sub.add_parser("pipeline", help="simulate, fit and check")
    add_common(p_pipe)

    p_rep = sub.add_parser("report", help="render report files as a table")
    p_rep.add_argument("paths", nargs="+", help="report or fits JSON files")
    p_rep.add_argument("--json", action="store_true",
                       help="echo the merged records as JSON on stdout")
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "report":
        records = [_read_json(path) for path in args.paths]
        if args.json:
            print(json.dumps(records, indent=2, sort_keys=True))
        else:
            print(render_report(records))
        return 0

    config = load_config(
        args.config, seed_override=args.seed, regime_override=args.regime
    )
    config_hash = _config_sha256(args.config)
    out_dir = Path(args.out)

    if args.command == "simulate":
        manifest = run_simulate(config, args.kind, out_dir, config_hash)
        if args.json:
            print(json.dumps(manifest, indent=2, sort_keys=True))
        else:
            print(f"wrote {len(manifest['files'])} files to {out_dir}")
        return 0

    if args.command == "fit":
        fits = run_fit(config, out_dir, config_hash)
        if args.json:
            print(json.dumps(fits, indent=2, sort_keys=True))
        else:
            summary = fits["summary"]
            print(f"T1 = {summary['T1_s']:.4g} s, T2 = {summary['T2_s']:.4g} s")
        return 0

    if args.command == "pipeline":
        report = run_pipeline(config, out_dir, config_hash)
        if args.json:
            print(json.dumps(report, indent=2, sort_keys=True))
        else:
            print(render_report([report]))
            for check in report["checks"]:
                status = "pass" if check["passed"] else "FAIL"
                print(f"check {check['name']}: {status}")
        return 0 if report["passed"] else 1

    raise ConfigError(f"unknown command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FitFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FileFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
