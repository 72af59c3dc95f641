"""End-to-end runs: samples in, filtered track, predictions and metrics out.

File formats (comma separated, one header line, numbers written with 17
significant digits so they round-trip exactly):

track file::

    t,truth_e,truth_n,meas_e,meas_n,filt_e,filt_n,dropped

Missing values are empty fields. Dropout rows have empty ``meas_*`` and
``dropped=1``. Only ``t``, ``meas_e`` and ``meas_n`` are required on input.

prediction file::

    issued_t,horizon_step,pred_t,pred_e,pred_n
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .core import as_mat2
from .ekf import DEFAULT_Q, DT_TOLERANCE, MAX_SUBSTEP, NoiseConfig
from .errors import AlignmentError, ConfigError, DegenerateIncrements, LengthMismatch, NonMonotoneTime, NonUniformSampling, ParseError
from .evolution import DEFAULT_WINDOW, CenterMode, ObservationWindow
from .predictor import PredictedTrajectory, PredictionConfig, predict_horizon
from .simulator import RNG_ALGORITHM, ScenarioConfig, TrackSample, simulate
from .tracker import Tracker, TrackStep

TRACK_HEADER = ("t", "truth_e", "truth_n", "meas_e", "meas_n", "filt_e", "filt_n", "dropped")
PREDICTION_HEADER = ("issued_t", "horizon_step", "pred_t", "pred_e", "pred_n")

#: Measurement covariance used for replayed files when none is configured (m^2).
DEFAULT_REPLAY_R = 1.0
R_FLOOR = 1e-12


# -- configuration ------------------------------------------------------------


@dataclass(frozen=True)
class FilterConfig:
    q: Any = DEFAULT_Q
    r: Any = None
    r_amplification: float = 4.0
    p0: Any = None
    joseph: bool = False
    max_substep: float = MAX_SUBSTEP


@dataclass(frozen=True)
class EvolutionConfig:
    window: int = DEFAULT_WINDOW
    center_mode: str = CenterMode.MIDPOINT_CORRECTED.value
    stride: int | None = None


@dataclass(frozen=True)
class RunConfig:
    """Everything needed for one deterministic run.

    Exactly one of ``scenario`` and ``input`` drives the run; ``input`` wins
    when both are given.
    """

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    input: Path | None = None
    filter: FilterConfig = field(default_factory=FilterConfig)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    prediction: PredictionConfig = field(default_factory=PredictionConfig)
    prediction_source: str = "filtered"
    output: Path | None = None

    def noise(self) -> NoiseConfig:
        """Filter noise; ``R`` defaults to the amplified scenario noise."""
        fc = self.filter
        try:
            if fc.r is not None:
                R = as_mat2(fc.r, "filter.r")
            elif self.input is not None:
                R = DEFAULT_REPLAY_R * np.eye(2)
            else:
                var = fc.r_amplification * self.scenario.noise_sigma**2
                R = max(var, R_FLOOR) * np.eye(2)
            return NoiseConfig(as_mat2(fc.q, "filter.q"), R)
        except ValueError as exc:
            raise ConfigError(f"filter: {exc}") from exc

    def tracker(self) -> Tracker:
        try:
            return Tracker(
                self.noise(),
                window=self.evolution.window,
                center_mode=self.evolution.center_mode,
                P0=self.filter.p0,
                joseph=self.filter.joseph,
                max_substep=self.filter.max_substep,
                stride=self.evolution.stride,
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"evolution/filter: {exc}") from exc


_SCENARIO_ALIASES = {"halfwidth": "radius", "radius_or_halfwidth": "radius", "param_rate": "speed", "speed_or_param_rate": "speed"}


def _build(cls, raw: Any, where: str, aliases: dict[str, str] | None = None):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected an object, got {type(raw).__name__}")
    names = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        name = (aliases or {}).get(key, key)
        if name not in names:
            raise ConfigError(f"{where}.{key}: unknown field")
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(raw: dict[str, Any], *, seed: int | None = None, output: str | Path | None = None) -> RunConfig:
    """Validate a JSON-style config document; every field has a default."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    known = {"scenario", "input", "filter", "evolution", "prediction", "output"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{key}: unknown field")
    scenario_raw = dict(raw.get("scenario") or {})
    if seed is not None:
        scenario_raw["seed"] = seed
    scenario = _build(ScenarioConfig, scenario_raw, "scenario", _SCENARIO_ALIASES)
    prediction_raw = dict(raw.get("prediction") or {})
    source = prediction_raw.pop("source", "filtered")
    if source not in ("filtered", "raw"):
        raise ConfigError(f"prediction.source: must be 'filtered' or 'raw'; got {source!r}")
    evolution = _build(EvolutionConfig, raw.get("evolution"), "evolution")
    try:
        CenterMode(evolution.center_mode)
    except ValueError as exc:
        raise ConfigError(f"evolution.center_mode: {exc}") from exc
    out = output if output is not None else raw.get("output")
    cfg = RunConfig(
        scenario=scenario,
        input=Path(raw["input"]) if raw.get("input") else None,
        filter=_build(FilterConfig, raw.get("filter"), "filter"),
        evolution=evolution,
        prediction=_build(PredictionConfig, prediction_raw, "prediction"),
        prediction_source=source,
        output=Path(out) if out else None,
    )
    cfg.tracker()
    return cfg


def load_config(path: str | Path | None, **overrides) -> RunConfig:
    if path is None:
        return config_from_dict({}, **overrides)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw, **overrides)


# -- metrics --------------------------------------------------------------------


class HorizonError(NamedTuple):
    steps: int
    mean: float
    max: float


@dataclass(frozen=True)
class MetricsReport:
    """Run summary. RMSE fields are ``None`` when truth is unavailable."""

    rmse_raw: float | None
    rmse_filtered: float | None
    prediction_error_by_horizon: list[HorizonError]
    dropout_count: int
    samples: int = 0
    predictions_issued: int = 0

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["prediction_error_by_horizon"] = [h._asdict() for h in self.prediction_error_by_horizon]
        return d

    def format(self) -> str:
        def g(x):
            return "n/a" if x is None else f"{x:.6g}"

        lines = [
            f"samples            {self.samples}",
            f"dropouts           {self.dropout_count}",
            f"rmse_raw           {g(self.rmse_raw)}",
            f"rmse_filtered      {g(self.rmse_filtered)}",
            f"predictions        {self.predictions_issued}",
        ]
        for h in self.prediction_error_by_horizon:
            lines.append(f"horizon {h.steps:3d}        mean {h.mean:.6g}  max {h.max:.6g}")
        return "\n".join(lines)


def rmse(series_a: ArrayLike, series_b: ArrayLike) -> float:
    """Root mean squared Euclidean distance between paired 2-D points."""
    a = np.asarray(series_a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(series_b, dtype=np.float64).reshape(-1, 2)
    if len(a) != len(b):
        raise LengthMismatch(f"series lengths differ: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise LengthMismatch("series are empty")
    d = a - b
    return float(np.sqrt(np.mean(d[:, 0] ** 2 + d[:, 1] ** 2)))


def prediction_error_profile(
    predictions: Sequence[PredictedTrajectory],
    truth_t: ArrayLike,
    truth_pos: ArrayLike,
    *,
    dt_tolerance: float = DT_TOLERANCE,
) -> list[HorizonError]:
    """Mean and max distance to truth for each horizon step across predictions.

    Raises:
        AlignmentError: a predicted timestamp has no truth sample within
            ``dt_tolerance``.
    """
    truth_t = np.asarray(truth_t, dtype=np.float64)
    truth_pos = np.asarray(truth_pos, dtype=np.float64).reshape(-1, 2)
    per_step: dict[int, list[float]] = {}
    for pred in predictions:
        idx = np.searchsorted(truth_t, pred.times)
        for h, (t, i, p) in enumerate(zip(pred.times, idx, pred.positions), start=1):
            cands = [j for j in (i - 1, i) if 0 <= j < len(truth_t)]
            j = min(cands, key=lambda j: abs(truth_t[j] - t)) if cands else None
            if j is None or abs(truth_t[j] - t) > dt_tolerance:
                raise AlignmentError(f"no truth sample within {dt_tolerance:g} s of predicted t={t!r}")
            per_step.setdefault(h, []).append(math.hypot(*(p - truth_pos[j])))
    return [HorizonError(h, float(np.mean(e)), float(np.max(e))) for h, e in sorted(per_step.items())]


# -- running --------------------------------------------------------------------


@dataclass
class RunResult:
    samples: list[TrackSample]
    steps: list[TrackStep]
    predictions: list[PredictedTrajectory]
    metrics: MetricsReport


def run_samples(samples: Sequence[TrackSample], cfg: RunConfig) -> RunResult:
    """Filter and predict over ``samples`` in order and compute metrics."""
    tracker = cfg.tracker()
    pcfg = cfg.prediction
    window = ObservationWindow(max(3, pcfg.window_len))
    steps: list[TrackStep] = []
    predictions: list[PredictedTrajectory] = []
    for sample in samples:
        step = tracker.step(sample.t, sample.measurement)
        steps.append(step)
        source = step.estimate if cfg.prediction_source == "filtered" else sample.measurement
        if source is None:
            continue
        window = window.push(sample.t, source)
        if len(window) >= pcfg.window_len:
            try:
                predictions.append(predict_horizon(window, pcfg))
            except (DegenerateIncrements, NonUniformSampling):
                pass
    metrics = compute_metrics(samples, steps, predictions)
    return RunResult(list(samples), steps, predictions, metrics)


def compute_metrics(
    samples: Sequence[TrackSample],
    steps: Sequence[TrackStep],
    predictions: Sequence[PredictedTrajectory],
) -> MetricsReport:
    """Metrics over samples with both truth and a measurement.

    Predictions reaching past the last truth sample are left out of the
    horizon profile.
    """
    dropouts = sum(s.measurement is None for s in samples)
    have_truth = [s.truth is not None for s in samples]
    rmse_raw = rmse_filt = None
    profile: list[HorizonError] = []
    if samples and all(have_truth):
        used = [i for i, s in enumerate(samples) if s.measurement is not None and steps[i].estimate is not None]
        if used:
            truth = np.array([samples[i].truth for i in used])
            rmse_raw = rmse([samples[i].measurement for i in used], truth)
            rmse_filt = rmse([steps[i].estimate for i in used], truth)
        truth_t = np.array([s.t for s in samples])
        truth_pos = np.array([s.truth for s in samples])
        in_range = [p for p in predictions if p.times[-1] <= truth_t[-1] + DT_TOLERANCE]
        profile = prediction_error_profile(in_range, truth_t, truth_pos)
    return MetricsReport(rmse_raw, rmse_filt, profile, dropouts, len(samples), len(predictions))


def run_scenario(cfg: RunConfig) -> MetricsReport:
    """Generate or load samples, run them, and write outputs if configured."""
    samples = ingest_measurements(cfg.input) if cfg.input is not None else simulate(cfg.scenario)
    result = run_samples(samples, cfg)
    if cfg.output is not None:
        write_outputs(result, cfg)
    return result.metrics


# -- files ----------------------------------------------------------------------


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.17g}"


def _pair(v) -> tuple[str, str]:
    return ("", "") if v is None else (_fmt(float(v[0])), _fmt(float(v[1])))


def write_track_csv(path: str | Path, samples: Sequence[TrackSample], steps: Sequence[TrackStep] | None = None) -> None:
    """Write the track file; ``steps`` supplies the filtered columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACK_HEADER)
        for i, s in enumerate(samples):
            filt = steps[i].estimate if steps is not None else None
            w.writerow((_fmt(s.t), *_pair(s.truth), *_pair(s.measurement), *_pair(filt), int(s.measurement is None)))


def write_prediction_csv(path: str | Path, predictions: Iterable[PredictedTrajectory]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTION_HEADER)
        for p in predictions:
            for h, (t, pos) in enumerate(zip(p.times, p.positions), start=1):
                w.writerow((_fmt(p.start_t), h, _fmt(float(t)), *_pair(pos)))


def write_outputs(result: RunResult, cfg: RunConfig) -> None:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    write_track_csv(out / "track.csv", result.samples, result.steps)
    write_prediction_csv(out / "predictions.csv", result.predictions)
    doc = {"rng": RNG_ALGORITHM, "seed": cfg.scenario.seed, "metrics": result.metrics.to_dict()}
    (out / "metrics.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _parse_float(text: str, column: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{column}: not a number: {text!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"{column}: non-finite value {text!r}", line)
    return value


def _parse_pair(row: dict[str, str], e: str, n: str, line: int):
    a, b = (row.get(e) or "").strip(), (row.get(n) or "").strip()
    if not a and not b:
        return None
    if not a or not b:
        raise ParseError(f"{e}/{n}: only one coordinate given", line)
    return np.array([_parse_float(a, e, line), _parse_float(b, n, line)])


def ingest_measurements(path: str | Path) -> list[TrackSample]:
    """Read a track file as samples.

    Raises:
        ParseError: malformed row, with its 1-based line number.
        NonMonotoneTime: timestamps not strictly increasing.
        OSError: the file cannot be read.
    """
    samples: list[TrackSample] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError("empty file", 1)
        missing = {"t", "meas_e", "meas_n"} - set(reader.fieldnames)
        if missing:
            raise ParseError(f"missing columns: {', '.join(sorted(missing))}", 1)
        last_t = None
        for row in reader:
            line = reader.line_num
            t = _parse_float((row.get("t") or "").strip(), "t", line)
            if last_t is not None and t <= last_t:
                raise NonMonotoneTime(f"t={t!r} does not exceed previous {last_t!r}", line)
            last_t = t
            dropped_text = (row.get("dropped") or "0").strip() or "0"
            if dropped_text not in ("0", "1"):
                raise ParseError(f"dropped: expected 0 or 1, got {dropped_text!r}", line)
            meas = _parse_pair(row, "meas_e", "meas_n", line)
            if dropped_text == "1":
                meas = None
            elif meas is None:
                raise ParseError("measurement missing on a row not marked dropped", line)
            truth = _parse_pair(row, "truth_e", "truth_n", line)
            samples.append(TrackSample(t, truth, meas))
    return samples


def read_track_csv(path: str | Path) -> tuple[list[TrackSample], list[np.ndarray | None]]:
    """Samples plus the filtered column of a track file."""
    samples = ingest_measurements(path)
    filtered: list[np.ndarray | None] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            filtered.append(_parse_pair(row, "filt_e", "filt_n", reader.line_num))
    return samples, filtered


def read_prediction_csv(path: str | Path) -> list[PredictedTrajectory]:
    groups: dict[float, list[tuple[int, float, float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(PREDICTION_HEADER) - set(reader.fieldnames):
            raise ParseError(f"expected columns {','.join(PREDICTION_HEADER)}", 1)
        for row in reader:
            line = reader.line_num
            issued = _parse_float(row["issued_t"], "issued_t", line)
            try:
                h = int(row["horizon_step"])
            except ValueError:
                raise ParseError(f"horizon_step: not an integer: {row['horizon_step']!r}", line) from None
            vals = [_parse_float(row[c], c, line) for c in ("pred_t", "pred_e", "pred_n")]
            groups.setdefault(issued, []).append((h, *vals))
    out = []
    for issued, rows in groups.items():
        rows.sort()
        out.append(
            PredictedTrajectory(issued, np.array([r[1] for r in rows]), np.array([[r[2], r[3]] for r in rows]))
        )
    return out


def report_from_files(track_path: str | Path, predictions_path: str | Path | None = None) -> MetricsReport:
    """Recompute metrics from written track and prediction files."""
    samples, filtered = read_track_csv(track_path)
    steps = [TrackStep(s.t, s.measurement, f, None, None, None) for s, f in zip(samples, filtered)]
    predictions = read_prediction_csv(predictions_path) if predictions_path else []
    return compute_metrics(samples, steps, predictions)
