"""Command-line entry point: ``turntrack {simulate,filter,predict,report}``.

Exit codes: 0 success, 2 configuration error, 3 I/O or parse error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, NonMonotoneTime, NumericalError, ParseError
from .pipeline import (
    RunConfig,
    ingest_measurements,
    load_config,
    report_from_files,
    run_samples,
    write_outputs,
    write_prediction_csv,
    write_track_csv,
)
from .simulator import simulate

log = logging.getLogger("turntrack")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


def _config(args) -> RunConfig:
    return load_config(args.config, seed=args.seed, output=args.out)


def _require_out(cfg: RunConfig) -> Path:
    if cfg.output is None:
        raise ConfigError("an output directory is required (--out or \"output\" in the config)")
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if cfg.input is not None:
        samples = ingest_measurements(cfg.input)
    else:
        samples = simulate(cfg.scenario)
    result = run_samples(samples, cfg)
    _require_out(cfg)
    write_outputs(result, cfg)
    print(result.metrics.format())
    return EXIT_OK


def cmd_filter(args) -> int:
    cfg = replace(_config(args), input=Path(args.input))
    out = _require_out(cfg)
    result = run_samples(ingest_measurements(cfg.input), cfg)
    write_track_csv(out / "track.csv", result.samples, result.steps)
    print(result.metrics.format())
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = replace(_config(args), input=Path(args.input))
    out = _require_out(cfg)
    result = run_samples(ingest_measurements(cfg.input), cfg)
    write_prediction_csv(out / "predictions.csv", result.predictions)
    print(result.metrics.format())
    return EXIT_OK


def cmd_report(args) -> int:
    print(report_from_files(args.track, args.predictions).format())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="turntrack", description="Coordinated-turn target tracking and prediction.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug output to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="scenario seed (overrides the config)")

    p = sub.add_parser("simulate", help="generate a scenario, filter and predict it, write all outputs")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("filter", help="replay a measurement file and write the filtered track")
    p.add_argument("input", help="track CSV with at least t,meas_e,meas_n")
    common(p)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("predict", help="replay a measurement file and write predictions")
    p.add_argument("input", help="track CSV with at least t,meas_e,meas_n")
    common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="compute metrics from written files")
    p.add_argument("track", help="track CSV")
    p.add_argument("--predictions", help="prediction CSV")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (ParseError, NonMonotoneTime) as exc:
        log.error("input error: %s", exc)
        return EXIT_IO
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
