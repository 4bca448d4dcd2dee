"""Command-line entry point: ``ecgsqa <subcommand> ...``.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments
from .config import SEED_ENV, load_config, parse_list
from .errors import ConfigError, DataError, EcgSqaError, FormatError
from .ml.metrics import format_table
from .signal_io import (
    AnnotationSet,
    EcgRecord,
    load_annotations,
    load_record,
    load_report,
    save_annotations,
    save_record,
)
from .synth import (
    SNR_OFF_DB,
    CorpusSpec,
    NstSchedule,
    build_corpus,
    nst_mix,
    save_corpus,
    synth_noise,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _env_seed(default=0):
    text = os.environ.get(SEED_ENV, "").strip()
    if not text:
        return default
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {text!r}") from None


def _weights(text):
    out = {}
    for item in parse_list(text):
        kind, _, w = item.partition("=")
        try:
            out[kind.strip()] = float(w) if w else 1.0
        except ValueError:
            raise ConfigError(f"bad noise weight {item!r}") from None
    return out


def _run_config(args):
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if args.output_dir is not None:
        overrides.append(f"run.output_dir={Path(args.output_dir).resolve()}")
    if getattr(args, "jobs", None) is not None:
        overrides.append(f"run.jobs={args.jobs}")
    cfg = load_config(args.config, overrides)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)  # flag beats the environment
    return cfg


# ------------------------------------------------------------- commands

def cmd_ingest(args):
    try:
        data = np.loadtxt(args.source, delimiter=args.delimiter, skiprows=args.skip_rows,
                          usecols=args.column, ndmin=1, dtype=float)
    except (ValueError, IndexError) as exc:
        raise FormatError(args.source, f"cannot parse samples ({exc})") from None
    record_id = args.id or Path(args.source).stem
    record = EcgRecord(data, args.fs, record_id=record_id, units=args.units)
    stem = Path(args.out) / record_id
    save_record(record, stem)
    if args.annotations:
        ann = load_annotations(args.annotations, record_id)
        ann.validate_length(len(record))
        save_annotations(ann, stem.with_suffix(".ann"))
    print(f"{stem}.ecg: {len(record)} samples at {args.fs:g} Hz")
    return 0


def _block(text):
    lo, sep, hi = text.partition(":")
    try:
        return (float(lo), float(hi)) if sep else float(lo)
    except ValueError:
        raise ConfigError(f"bad block length {text!r}") from None


def cmd_synth(args):
    snr = tuple(SNR_OFF_DB if s == "off" else float(s) for s in parse_list(args.snr))
    spec = CorpusSpec(
        name=args.name,
        n_records=args.n_records,
        duration_s=args.duration,
        fs=args.fs,
        hr_range=(args.hr_min, args.hr_max),
        jitter_range=(0.0, args.jitter_max),
        noise_weights=_weights(args.noise),
        mode=args.mode,
        snr_db=snr,
        lead_in_s=args.lead_in,
        block_s=_block(args.block),
        seed=args.seed if args.seed is not None else _env_seed(),
    )
    corpus = build_corpus(spec)
    save_corpus(corpus, args.out)
    print(f"{args.out}: {len(corpus)} records")
    return 0


def cmd_nst(args):
    clean = load_record(args.record)
    seed = args.seed if args.seed is not None else _env_seed()
    noise = np.zeros(len(clean))
    for i, (kind, w) in enumerate(_weights(args.noise).items()):
        noise += w * synth_noise(kind, len(clean) / clean.fs, clean.fs, seed + i)[: len(clean)]
    schedule = NstSchedule(args.lead_in, args.block, args.snr)
    mixed, ann = nst_mix(clean, noise, schedule)
    out = Path(args.out)
    mixed = EcgRecord(mixed.samples, mixed.fs, out.name, mixed.channel, mixed.units)
    save_record(mixed, out)
    save_annotations(AnnotationSet(out.name, ann.spans), out.with_suffix(".ann"))
    print(f"{out}.ecg: {len(ann.spans)} noisy blocks at {args.snr:g} dB")
    return 0


def cmd_pipeline(args):
    cfg = _run_config(args)
    _, summary = experiments.cmd_pipeline(cfg, args.dump_peaks)
    sys.stdout.write(summary)
    return 0


def cmd_within(args):
    cfg = _run_config(args)
    if args.pooled:
        cfg = replace(cfg, pooled=True)
    if args.group_by_record:
        cfg = replace(cfg, group_by_record=True)
    experiments.cmd_within(cfg)
    sys.stdout.write((cfg.output_dir / "within.txt").read_text(encoding="utf-8"))
    return 0


def cmd_cross(args):
    cfg = _run_config(args)
    mode = args.mode or (cfg.experiment if cfg.experiment in ("combined", "holdout") else "all")
    blocks = experiments.CROSS_BLOCKS if mode == "all" else (mode,)
    experiments.cmd_cross(cfg, blocks)
    sys.stdout.write((cfg.output_dir / "cross.txt").read_text(encoding="utf-8"))
    return 0


def cmd_sweep(args):
    cfg = _run_config(args)
    windows = parse_list(args.windows, float) if args.windows is not None else None
    if args.windows is not None and not windows:
        raise ConfigError("empty window list")
    experiments.cmd_sweep_window(cfg, windows)
    sys.stdout.write((cfg.output_dir / "sweep.txt").read_text(encoding="utf-8"))
    return 0


def cmd_report(args):
    out = Path(args.output_dir)
    paths = sorted((out / "reports").glob("*.json"))
    if not paths:
        raise DataError(f"{out}: no reports found")
    rows = [((p.stem,), load_report(p)) for p in paths]
    text = format_table(rows, ("Report",))
    (out / "report.txt").write_text(text, encoding="utf-8")
    experiments._write_csv(
        out / "report.csv",
        ["report", *experiments.CSV_METRICS, "n_samples"],
        [[name, *experiments._metric_cells(r), r.n_samples] for (name,), r in rows],
    )
    sys.stdout.write(text)
    if not args.no_figures:
        from .plotting import render_figures

        for p in render_figures(out):
            print(f"wrote {p}")
    return 0


# --------------------------------------------------------------- parser

def _experiment_args(p):
    p.add_argument("-c", "--config", required=True, help="INI run config")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                   help="override a config value (repeatable)")
    p.add_argument("--seed", type=int, help=f"overrides the config seed and {SEED_ENV}")
    p.add_argument("--output-dir", help="overrides run.output_dir")
    p.add_argument("--jobs", type=int, help="worker processes for feature extraction")


def build_parser():
    parser = _Parser(prog="ecgsqa", description="ECG signal quality assessment from HRV features.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="convert a delimited text column to .ecg/.meta")
    p.add_argument("source")
    p.add_argument("--fs", type=float, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--id", help="record id (default: source file stem)")
    p.add_argument("--column", type=int, default=0)
    p.add_argument("--delimiter", default=None, help="default: whitespace")
    p.add_argument("--skip-rows", type=int, default=0)
    p.add_argument("--units", default="mV")
    p.add_argument("--annotations", help="'start end label' span file to copy alongside")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic noise-stress corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="synth")
    p.add_argument("--n-records", type=int, default=10)
    p.add_argument("--duration", type=float, default=300.0)
    p.add_argument("--fs", type=float, default=360.0)
    p.add_argument("--hr-min", type=float, default=50.0)
    p.add_argument("--hr-max", type=float, default=120.0)
    p.add_argument("--jitter-max", type=float, default=5.0, help="RR jitter upper bound (%%)")
    p.add_argument("--noise", default="muscle_artifact=1,electrode_motion=1",
                   help="KIND=WEIGHT list")
    p.add_argument("--mode", choices=("joint", "single"), default="joint")
    p.add_argument("--snr", default="0,-6", help="SNR list in dB, cycled per record; 'off' = clean")
    p.add_argument("--lead-in", type=float, default=30.0)
    p.add_argument("--block", default="20", help="block length in s, or LO:HI drawn per record")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("nst", help="mix synthetic noise into a clean record")
    p.add_argument("record")
    p.add_argument("--out", required=True, help="output record stem")
    p.add_argument("--noise", default="electrode_motion", help="KIND[=WEIGHT] list")
    p.add_argument("--snr", type=float, default=0.0)
    p.add_argument("--lead-in", type=float, default=300.0)
    p.add_argument("--block", type=float, default=120.0)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_nst)

    p = sub.add_parser("pipeline", help="extract feature tables")
    _experiment_args(p)
    p.add_argument("--dump-peaks", metavar="DIR", help="write detected R peaks per record")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("within", help="within-dataset k-fold cross-validation")
    _experiment_args(p)
    p.add_argument("--pooled", action="store_true", help="score pooled out-of-fold predictions")
    p.add_argument("--group-by-record", action="store_true", help="keep each record in one fold")
    p.set_defaults(func=cmd_within)

    p = sub.add_parser("cross", help="cross-dataset, combined and holdout runs")
    _experiment_args(p)
    p.add_argument("--mode", choices=("all", *experiments.CROSS_BLOCKS))
    p.set_defaults(func=cmd_cross)

    p = sub.add_parser("sweep-window", help="within-dataset CV across window lengths")
    _experiment_args(p)
    p.add_argument("--windows", help="comma-separated window lengths in seconds")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="summarize reports and render PNG figures")
    p.add_argument("output_dir")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except EcgSqaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    except Exception as exc:  # pragma: no cover - last resort
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
