"""Command-line entry point.

Subcommands
-----------
score   score one clean/enhanced WAV pair and print a JSON report
enhance run spectral subtraction or the oracle Wiener filter on WAV files
run     run a batch experiment described by a config file
fit     calibrate observer or logistic parameters from a CSV of pairs
srt     recompute summary, SRT and bias tables from a results CSV
corpus  write a synthetic word corpus for trying things out

Exit status is 0 on success, 2 when some inputs or trials failed and 1 on
usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from typing import List, Optional

import numpy as np

from .evaluation import DegenerateDataError, fit_logistic, fit_observer
from .experiment import (AlgorithmSpec, ConfigError, ExperimentConfig, analyze_rows,
                         emit_plots, load_human, read_results_csv, run_experiment,
                         with_overrides, write_tables)
from .frontend import analyze, design_filterbank
from .metric import VARIANTS, GediConfig, score_variants
from .signal_io import (AudioFormatError, level_to_rms, load_wav, normalize_level, rms,
                        save_wav)
from .synth import write_corpus

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2
log = logging.getLogger("gedi")


def _variants(arg: Optional[str]) -> tuple:
    if arg in (None, "both"):
        return VARIANTS
    return (arg.replace("-", "_"),)


def _dump_bands(path, signal, cfg: GediConfig) -> str:
    """Band signals: a channel row, a center-frequency row, then one row per sample."""
    fb = design_filterbank(cfg.filterbank)
    if rms(signal) > 0:
        signal = normalize_level(signal, level_to_rms(cfg.level_db))
    out = analyze(fb, signal)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["channel"] + list(range(out.bands.shape[0])))
        w.writerow(["center_freq_hz"] + [repr(float(f)) for f in out.center_freqs])
        for n, col in enumerate(out.bands.T):
            w.writerow([n] + [f"{v:.9g}" for v in col])
    return path


def _dump(result_by_variant: dict, out_dir: str, signals=None,
          cfg: Optional[GediConfig] = None) -> List[str]:
    """Write filterbank layout, band signals and modulation power tensors as CSV."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, sig in (signals or {}).items():
        paths.append(_dump_bands(os.path.join(out_dir, f"bands_{name}.csv"), sig, cfg))
    first = next(iter(result_by_variant.values()))
    path = os.path.join(out_dir, "filterbank.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["channel", "center_hz", "weight"])
        for i, (f, wt) in enumerate(zip(first.center_freqs, first.weights)):
            w.writerow([i, repr(float(f)), repr(float(wt))])
    paths.append(path)
    for variant, res in result_by_variant.items():
        path = os.path.join(out_dir, f"modulation_{variant}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["channel", "filter", "frame", "P_S", "P_D"])
            S, D = res.powers.S, res.powers.D
            if variant == "gedi":
                for i in range(S.shape[0]):
                    for j in range(S.shape[1]):
                        w.writerow([i, j, 0, repr(float(S[i, j])), repr(float(D[i, j]))])
            else:
                for j, (sj, dj) in enumerate(zip(S, D)):
                    for i in range(sj.shape[0]):
                        for t in range(sj.shape[1]):
                            w.writerow([i, j, t, repr(float(sj[i, t])), repr(float(dj[i, t]))])
        paths.append(path)
    return paths


def cmd_score(args) -> int:
    clean = load_wav(args.clean)
    enhanced = load_wav(args.enhanced)
    cfg = GediConfig(weighting_enabled=not args.no_weight, noise=args.noise)
    results = score_variants(clean, enhanced, cfg, _variants(args.variant))
    report = {"clean": args.clean, "enhanced": args.enhanced,
              "weighting": not args.no_weight, "noise": args.noise,
              "results": {v: r.as_dict() for v, r in results.items()}}
    if args.dump_dir:
        report["dumped"] = _dump(results, args.dump_dir,
                                 {"clean": clean, "enhanced": enhanced}, cfg)
    text = json.dumps(report, indent=2)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "score.json"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_enhance(args) -> int:
    alg = AlgorithmSpec.parse(args.algorithm)
    noisy = load_wav(args.noisy)
    noise = load_wav(args.noise) if args.noise else None
    clean = load_wav(args.clean) if args.clean else None
    if alg.kind == "ss" and noise is None:
        raise ConfigError("spectral subtraction needs --noise (a noise estimate)")
    if alg.kind == "wiener" and (noise is None or clean is None):
        raise ConfigError("the oracle Wiener filter needs --clean and --noise")
    enhanced = alg.apply(noisy, clean, noise)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.noisy))[0]
    path = os.path.join(out, f"{stem}_enhanced.wav")
    clipped = save_wav(path, enhanced)
    report = {"algorithm": alg.name, "output": path, "clipped_samples": clipped}
    if clean is not None:
        cfg = GediConfig(weighting_enabled=not args.no_weight)
        res = score_variants(clean, enhanced, cfg, _variants(args.variant))
        report["results"] = {v: r.as_dict() for v, r in res.items()}
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    variants = _variants(args.variant) if args.variant else None
    cfg = with_overrides(cfg, output_dir=args.out, base_seed=args.seed, variants=variants,
                         weighting=False if args.no_weight else None, workers=args.workers)
    result = run_experiment(cfg)
    for row in result.srt_rows:
        srt = "undefined" if row["srt_db"] is None else f"{row['srt_db']:.2f} dB"
        print(f"{row['variant']:8s} {row['algorithm']:28s} SRT {srt}")
    print(f"{len(result.rows)} rows written to {result.files['results']}")
    if result.failures:
        print(f"{len(result.failures)} failures, see {cfg.output_dir}/failures.log",
              file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _read_pairs(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    try:
        return np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def cmd_fit(args) -> int:
    data = _read_pairs(args.data)
    if args.kind == "observer":
        p = fit_observer([tuple(r[:2]) for r in data])
        out = {"k": p.k, "sigma_s": p.sigma_s, "m": p.m, "mu_n": p.mu_n, "sigma_n": p.sigma_n}
    elif args.kind == "stoi":
        p = fit_logistic([tuple(r[:2]) for r in data], "stoi")
        out = {"a": p.a, "b": p.b}
    else:
        p = fit_logistic([tuple(r[:3]) for r in data], "haspi")
        out = {"B": p.B, "C": p.C, "A_high": p.A_high}
    text = json.dumps({"kind": args.kind, "params": out}, indent=2)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"fit_{args.kind}.json"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_srt(args) -> int:
    rows = read_results_csv(args.results)
    if args.variant:
        rows = [r for r in rows if r.variant in _variants(args.variant)]
    if not rows:
        raise ConfigError("no result rows to analyse")
    human = load_human(args.human) if args.human else None
    summary, srt_rows, bias_rows = analyze_rows(rows, human)
    out = args.out or os.path.dirname(os.path.abspath(args.results))
    write_tables(out, summary, srt_rows, bias_rows)
    emit_plots(summary, out, args.noise)
    print(f"{'variant':8s} {'algorithm':28s} {'SRT dB':>8s} {'dSRT dB':>8s} {'bias %':>8s}")
    bias = {(b["variant"], b["algorithm"]): b for b in bias_rows}
    for r in srt_rows:
        b = bias[(r["variant"], r["algorithm"])]

        def f(v):
            return "-" if v is None else f"{v:.2f}"
        print(f"{r['variant']:8s} {r['algorithm']:28s} {f(r['srt_db']):>8s} "
              f"{f(r['delta_srt_db']):>8s} {f(b['mean_difference']):>8s}")
    return EXIT_OK


def cmd_corpus(args) -> int:
    paths = write_corpus(args.directory, args.n, seed=args.seed or 0)
    print(f"wrote {len(paths)} files to {args.directory}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gedi", description="GEDI / mr-GEDI intelligibility "
                                     "prediction and enhancement experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, variant=True, weight=True, seed=True):
        if variant:
            p.add_argument("--variant", choices=("gedi", "mr-gedi", "mr_gedi", "both"))
        if weight:
            p.add_argument("--no-weight", action="store_true",
                           help="disable the ERB channel weighting")
        if seed:
            p.add_argument("--seed", type=int, help="base seed")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("score", help="score a clean/enhanced pair")
    p.add_argument("clean")
    p.add_argument("enhanced")
    p.add_argument("--noise", choices=("pink", "babble"), default="pink",
                   help="which calibrated observer to use")
    p.add_argument("--dump-dir", help="write filterbank and modulation tensors as CSV")
    common(p, seed=False)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("enhance", help="enhance a noisy WAV")
    p.add_argument("noisy")
    p.add_argument("--algorithm", default="ss", help="e.g. ss:alpha=1.0 or wiener:epsilon=0.1")
    p.add_argument("--noise", help="noise WAV (estimate for ss, true noise for wiener)")
    p.add_argument("--clean", help="clean WAV; also scores the output")
    common(p, seed=False)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("run", help="run a batch experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int)
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fit", help="calibrate mapping parameters")
    p.add_argument("--data", required=True,
                   help="CSV with a header: sdr_env,percent | d,percent | c,a_high,percent")
    p.add_argument("--kind", choices=("observer", "stoi", "haspi"), default="observer")
    common(p, variant=False, weight=False, seed=False)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("srt", help="SRT, bias and plots from a results CSV")
    p.add_argument("results")
    p.add_argument("--human", help="CSV of human curves: algorithm,snr_db,percent")
    p.add_argument("--noise", default="pink", help="label used in plot names")
    common(p, weight=False, seed=False)
    p.set_defaults(func=cmd_srt)

    p = sub.add_parser("corpus", help="write synthetic words as WAV files")
    p.add_argument("directory")
    p.add_argument("-n", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, AudioFormatError, DegenerateDataError, FileNotFoundError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
