"""Command line entry point: ``plasmonhom {simulate,analyze,characterize,theory}``.

Exit codes: 0 success, 2 config error, 3 data error, 4 assertion failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import analysis, plotting
from .config import ConfigError, load_config, parse_duration, with_overrides
from .events import detection_probabilities, simulate_scan
from .plasmonics import (FitError, bragg_lookup, fit_propagation_length, read_bragg_table,
                         read_propagation_samples)
from .tagfile import TagFileError, read_metadata, write_htag
from .wavepacket import coincidence_probability, overlap

log = logging.getLogger("plasmonhom")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_ASSERT = 0, 2, 3, 4
HOUR = 3600.0


class DataError(Exception):
    pass


def _duration_arg(text):
    try:
        return parse_duration(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load(args):
    cfg = load_config(args.config)
    overrides = {"seed": getattr(args, "seed", None), "duration": getattr(args, "duration", None)}
    if getattr(args, "window", None) is not None:
        overrides["window"] = args.window
    return with_overrides(cfg, **overrides)


def _simulate_one(job):
    path, handle, meta = job
    write_htag(path, handle.stream(), meta)
    return str(path)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    src = cfg.source_config()
    jobs = []
    for delay, handle in simulate_scan(src, cfg.scan()):
        meta = {
            "index": handle.index,
            "delay_s": delay,
            "seed": cfg.seed,
            "duration_s": cfg.duration,
            "window_s": cfg.window,
            "delta_omega": src.profile.delta_omega,
            "pair_rate": src.pair_rate,
            "config": {k: v for k, v in cfg.to_dict().items() if k != "base_dir"},
        }
        jobs.append((out / f"tags_d{handle.index}.htag", handle, meta))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            written = list(pool.map(_simulate_one, jobs))
    else:
        written = [_simulate_one(j) for j in jobs]
    log.info("wrote %d tag files to %s", len(written), out)
    return EXIT_OK


def _expand(paths):
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.htag")))
        elif p.exists():
            files.append(p)
        else:
            raise DataError(f"{p}: no such file")
    if not files:
        raise DataError("no tag files given")
    return files


def cmd_analyze(args) -> int:
    files = _expand(args.tags)
    metas = [read_metadata(f) for f in files]
    window = args.window if args.window is not None else float(metas[0].get("window_s", 2e-9))
    items = [(float(m["delay_s"]), f) for m, f in zip(metas, files)]
    points = analysis.analyze_scan(items, window, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [p.row() for p in points]
    analysis.write_curve_csv(out / "dip.csv", rows)

    fit = None
    extra = {"window_s": window, "n_points": len(points)}
    try:
        guess = metas[0].get("delta_omega")
        fit = analysis.fit_dip(analysis.fit_points(points), guess)
    except (ValueError, FitError) as exc:
        log.warning("dip fit failed: %s", exc)
        payload = dict.fromkeys(("n_max", "visibility", "sigma_visibility", "delta_omega",
                                 "coherence_time_ps", "delay_offset_ps", "chi2_reduced"))
        payload.update(verdict=analysis.CLASSICAL, fit_error=str(exc), **extra)
        (out / "fit.json").write_text(json.dumps(payload, indent=2) + "\n")
    else:
        if fit.warnings:
            extra["warnings"] = list(fit.warnings)
        analysis.write_fit_json(out / "fit.json", fit, extra)
        print(f"V = {fit.visibility:.3f} ± {fit.sigma_visibility:.3f}  "
              f"tau_c = {fit.coherence_time / 1e-12:.3f} ps  verdict: {fit.verdict}")
    if not args.no_plots:
        singles = ([p.result.singles_B1 for p in points], [p.result.singles_B2 for p in points])
        plotting.plot_dip(rows, out / "dip.png", fit=fit, singles=singles)
    if args.assert_quantum and (fit is None or fit.verdict != analysis.QUANTUM):
        print("assertion failed: visibility does not exceed the classical bound", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def cmd_characterize(args) -> int:
    if args.bragg is None and args.propagation is None:
        raise ConfigError("give --bragg and/or --propagation")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = {}
    bragg = samples = fit = None
    if args.bragg is not None:
        bragg = read_bragg_table(args.bragg)
        T, R = bragg_lookup(bragg, args.wavelength)
        result.update(wavelength_nm=args.wavelength, T=T, R=R)
    if args.propagation is not None:
        samples = read_propagation_samples(args.propagation)
        fit = fit_propagation_length(samples)
        result.update(propagation_length_um=fit[0], amplitude=fit[1],
                      sigma_propagation_length_um=fit[2])
    (out / "characterization.json").write_text(json.dumps(result, indent=2) + "\n")
    if not args.no_plots:
        plotting.plot_characterization(out / "characterization.png", bragg=bragg,
                                       query=args.wavelength if bragg else None,
                                       propagation=samples, fit=fit)
    print(json.dumps(result))
    return EXIT_OK


def theory_rows(cfg):
    """Expected (noise-free) dip rows on the configured scan grid."""
    src = cfg.source_config()
    rows = []
    for delay in cfg.scan():
        mu = overlap(src.profile, delay, src.mode_overlap).mu
        probs = detection_probabilities(src.bs, mu, src.loss, src.source)
        if src.source == "pairs":
            p11 = coincidence_probability(src.profile, delay, src.bs, src.loss, src.mode_overlap)
        else:
            p11 = probs[(1, 1)]
        r1 = src.pair_rate * (probs[(1, 0)] + probs[(1, 1)]) + src.detector.dark_rate
        r2 = src.pair_rate * (probs[(0, 1)] + probs[(1, 1)]) + src.detector.dark_rate
        true = src.pair_rate * p11 * HOUR
        acc = analysis.accidental_rate(r1, r2, cfg.window) * HOUR
        rows.append({"delay_ps": delay / 1e-12, "rate_cph": true, "sigma_cph": 0.0,
                     "raw_cph": true + acc, "accidental_cph": acc})
    return rows


def cmd_theory(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = theory_rows(cfg)
    analysis.write_curve_csv(out / "theory.csv", rows)
    if not args.no_plots:
        plotting.plot_theory(rows, out / "theory.png")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plasmonhom", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True,
                           help="config file, or a shipped default: paper_plasmonic, paper_photonic")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--no-plots", action="store_true", help="skip PNG figures")

    p = sub.add_parser("simulate", help="write one HTAG file per scan delay")
    common(p)
    p.add_argument("--seed", type=lambda s: int(s, 0))
    p.add_argument("--duration", type=_duration_arg, help="override per-delay duration, e.g. 60s")
    p.add_argument("--window", type=_duration_arg)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="coincidences, accidentals, dip fit")
    p.add_argument("tags", nargs="+", help="HTAG files or directories")
    common(p, config=False)
    p.add_argument("--window", type=_duration_arg, help="full coincidence window, e.g. 2ns")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--assert-quantum", action="store_true",
                   help="exit 4 unless V - sigma_V > 0.5")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("characterize", help="splitting ratio and propagation length")
    common(p, config=False)
    p.add_argument("--bragg", help="CSV: wavelength_nm,transmission")
    p.add_argument("--wavelength", type=float, default=808.0, help="query wavelength in nm")
    p.add_argument("--propagation", help="CSV: length_um,intensity")
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("theory", help="analytic dip on the configured scan grid")
    common(p)
    p.add_argument("--window", type=_duration_arg)
    p.set_defaults(func=cmd_theory)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, TagFileError, FitError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
