"""Command-line front end.

Verbs: ``gen``, ``analyze``, ``replay``, ``grid``, ``sweep``, ``suggest``.
Every verb writes CSV; exit status is 0 on success and 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import dataset_io, synth
from .evaluation import run_grid, run_one, sweep
from .model import InvalidEventError
from .strategies import ALGORITHMS, DEFAULT_CONFIGS, parse_strategy_spec, suggest_params

log = logging.getLogger("reorderbuf")


def _load(path: str, columns: list[str] | None):
    mapping = {}
    for item in columns or []:
        canon, _, name = item.partition("=")
        if not name:
            raise ValueError(f"--column expects canonical=header, got {item!r}")
        mapping[canon] = name
    return dataset_io.read_dataset(path, mapping or None)


def _dataset_id(path: str) -> str:
    return Path(path).stem


def cmd_gen(args: argparse.Namespace) -> None:
    if args.spec:
        spec = synth.read_spec(args.spec)
    elif args.preset:
        spec = synth.preset(args.preset)
    else:
        raise ValueError("gen needs --preset or --spec")
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    events = synth.generate(spec)
    dataset_io.write_dataset(events, args.out)
    if args.spec_out:
        synth.write_spec(spec, args.spec_out)
    log.info("wrote %d events to %s", len(events), args.out)


def cmd_analyze(args: argparse.Namespace) -> None:
    events = _load(args.dataset, args.column)
    summary = dataset_io.summarize(events)
    if args.out:
        dataset_io.write_summary(summary, args.out)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(("field", "value"))
        w.writerows(summary.as_rows())


def cmd_replay(args: argparse.Namespace) -> None:
    events = _load(args.dataset, args.column)
    algorithm, cfg = parse_strategy_spec(args.algo)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_one(_dataset_id(args.dataset), events, algorithm, cfg, keep_emissions=True)
    dataset_io.write_emission_log(result.emissions, out / "emissions.csv")
    dataset_io.write_buffer_series(result.buffer_series, out / "buffer_series.csv")
    dataset_io.write_metrics([result], out / "metrics.csv")


def cmd_grid(args: argparse.Namespace) -> None:
    datasets = {_dataset_id(p): _load(p, args.column) for p in args.dataset}
    if args.algo:
        algorithms = dict(parse_strategy_spec(a) for a in args.algo)
    else:
        algorithms = DEFAULT_CONFIGS
    results = run_grid(datasets, algorithms, workers=args.workers)
    dataset_io.write_metrics(results, args.out)
    for r in results:
        if r.error:
            log.error("%s/%s: %s", r.dataset, r.algorithm, r.error)


def cmd_sweep(args: argparse.Namespace) -> None:
    events = _load(args.dataset, args.column)
    algorithm, cfg = parse_strategy_spec(args.algo)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    results = sweep(_dataset_id(args.dataset), events, algorithm, args.param, values, cfg)
    dataset_io.write_metrics(results, args.out)


def cmd_suggest(args: argparse.Namespace) -> None:
    events = _load(args.dataset, args.column)
    if args.limit:
        events = events[: args.limit]
    configs = suggest_params(e.full_proc_ms for e in events)
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("algorithm", "parameter", "value"))
        for algorithm in ALGORITHMS:
            for name, value in configs[algorithm].params_for(algorithm).items():
                w.writerow((algorithm, name, value))
    finally:
        if fh is not sys.stdout:
            fh.close()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reorderbuf", description="Out-of-order event compensation with dynamic buffers."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def dataset_arg(p, multiple=False):
        if multiple:
            p.add_argument("--dataset", required=True, action="append", help="dataset CSV (repeatable)")
        else:
            p.add_argument("--dataset", required=True, help="dataset CSV")
        p.add_argument(
            "--column",
            action="append",
            metavar="CANON=HEADER",
            help="map a canonical column to the file's header name",
        )

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--preset", help="G-1 .. G-12")
    p.add_argument("--spec", help="key=value workload file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--spec-out", help="also write the resolved workload spec")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("analyze", help="summarize a dataset")
    dataset_arg(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("replay", help="replay one dataset with one algorithm")
    dataset_arg(p)
    p.add_argument("--algo", required=True, help="e.g. name=bsttda,window_n=600,offset_ms=350")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("grid", help="run algorithms x datasets")
    dataset_arg(p, multiple=True)
    p.add_argument("--algo", action="append", help="strategy spec (repeatable); default: all seven")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("sweep", help="vary one parameter")
    dataset_arg(p)
    p.add_argument("--algo", required=True)
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("suggest", help="starting parameters from a sample")
    dataset_arg(p)
    p.add_argument("--limit", type=int, default=0, help="use only the first N arrivals")
    p.add_argument("--out")
    p.set_defaults(func=cmd_suggest)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (ValueError, KeyError, InvalidEventError, OSError) as exc:
        print(f"reorderbuf {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
