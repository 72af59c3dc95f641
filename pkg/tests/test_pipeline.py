import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from turntrack.errors import AlignmentError, ConfigError, LengthMismatch, NonMonotoneTime, ParseError
from turntrack.pipeline import (
    PREDICTION_HEADER,
    TRACK_HEADER,
    config_from_dict,
    ingest_measurements,
    load_config,
    prediction_error_profile,
    read_prediction_csv,
    report_from_files,
    rmse,
    run_samples,
    run_scenario,
    write_track_csv,
)
from turntrack.predictor import PredictedTrajectory
from turntrack.simulator import RNG_ALGORITHM, ScenarioConfig, TrackSample, simulate

finite = st.floats(-1e6, 1e6, allow_nan=False)


class TestRmse:
    def test_identical(self):
        assert rmse([(1, 2), (3, 4)], [(1, 2), (3, 4)]) == 0.0

    def test_constant_offset(self):
        a = np.random.default_rng(0).normal(size=(10, 2))
        assert rmse(a + (3, 4), a) == pytest.approx(5.0, rel=1e-12)

    def test_two_samples(self):
        assert rmse([(0, 0), (2, 0)], [(0, 0), (0, 0)]) == pytest.approx(math.sqrt(2))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            rmse([(0, 0)], [(0, 0), (1, 1)])
        with pytest.raises(LengthMismatch):
            rmse([], [])

    @given(arrays(np.float64, (5, 2), elements=finite), arrays(np.float64, (5, 2), elements=finite))
    def test_symmetric(self, a, b):
        assert rmse(a, b) == rmse(b, a)


class TestProfile:
    t = 0.1 * np.arange(10)
    p = np.column_stack([np.arange(10.0), np.zeros(10)])

    def test_perfect(self):
        preds = [PredictedTrajectory(self.t[k], self.t[k + 1 : k + 4], self.p[k + 1 : k + 4]) for k in range(5)]
        prof = prediction_error_profile(preds, self.t, self.p)
        assert [h.steps for h in prof] == [1, 2, 3]
        assert all(h.mean == 0 and h.max == 0 for h in prof)

    def test_aggregation(self):
        preds = [
            PredictedTrajectory(0.0, self.t[1:3], self.p[1:3] + (0, 1)),
            PredictedTrajectory(0.1, self.t[2:4], self.p[2:4] + (0, 3)),
        ]
        prof = prediction_error_profile(preds, self.t, self.p)
        assert prof[0].mean == pytest.approx(2.0) and prof[0].max == pytest.approx(3.0)

    def test_unaligned(self):
        with pytest.raises(AlignmentError):
            prediction_error_profile([PredictedTrajectory(0.0, np.array([0.15]), np.zeros((1, 2)))], self.t, self.p)
        with pytest.raises(AlignmentError):
            prediction_error_profile([PredictedTrajectory(0.9, np.array([1.0]), np.zeros((1, 2)))], self.t, self.p)


class TestIngest:
    def test_two_rows(self, tmp_path):
        f = tmp_path / "m.csv"
        f.write_text("t,meas_e,meas_n\n0,1,2\n0.1,3,4\n")
        samples = ingest_measurements(f)
        assert len(samples) == 2
        np.testing.assert_array_equal(samples[1].measurement, (3, 4))
        assert samples[0].truth is None

    def test_nan_line(self, tmp_path):
        f = tmp_path / "m.csv"
        f.write_text("t,meas_e,meas_n\n0,1,2\n0.1,nan,4\n")
        with pytest.raises(ParseError, match="line 3"):
            ingest_measurements(f)

    def test_out_of_order(self, tmp_path):
        f = tmp_path / "m.csv"
        f.write_text("t,meas_e,meas_n\n0.2,1,2\n0.1,3,4\n")
        with pytest.raises(NonMonotoneTime) as info:
            ingest_measurements(f)
        assert info.value.line == 3

    def test_missing_column(self, tmp_path):
        f = tmp_path / "m.csv"
        f.write_text("t,meas_e\n0,1\n")
        with pytest.raises(ParseError):
            ingest_measurements(f)

    def test_dropout_row(self, tmp_path):
        f = tmp_path / "m.csv"
        f.write_text("t,meas_e,meas_n,dropped\n0,1,2,0\n0.1,,,1\n")
        assert ingest_measurements(f)[1].measurement is None

    def test_unmarked_empty_row(self, tmp_path):
        f = tmp_path / "m.csv"
        f.write_text("t,meas_e,meas_n\n0,1,2\n0.1,,\n")
        with pytest.raises(ParseError):
            ingest_measurements(f)

    def test_round_trip(self, tmp_path):
        samples = simulate(ScenarioConfig(noise_sigma=0.37, dropout_prob=0.3, steps=200, seed=4, dt=0.1 / 3))
        f = tmp_path / "track.csv"
        write_track_csv(f, samples)
        assert f.read_text().splitlines()[0] == ",".join(TRACK_HEADER)
        back = ingest_measurements(f)
        for a, b in zip(samples, back):
            assert a.t == b.t
            assert np.array_equal(a.truth, b.truth)
            if a.measurement is None:
                assert b.measurement is None
            else:
                assert np.array_equal(a.measurement, b.measurement)


class TestConfig:
    def test_minimal(self):
        cfg = config_from_dict({"scenario": {"kind": "circle"}})
        assert cfg.scenario.radius == 10.0
        np.testing.assert_allclose(cfg.noise().R, 4 * 0.25 * np.eye(2))

    def test_aliases(self):
        cfg = config_from_dict({"scenario": {"kind": "lemniscate", "halfwidth": 7, "param_rate": 0.3}})
        assert (cfg.scenario.radius, cfg.scenario.speed) == (7, 0.3)

    def test_seed_override(self):
        assert config_from_dict({"scenario": {"seed": 1}}, seed=9).scenario.seed == 9

    @pytest.mark.parametrize(
        "doc",
        [
            {"bogus": 1},
            {"scenario": {"kind": "square"}},
            {"scenario": {"radius_m": 3}},
            {"filter": {"q": -1}},
            {"filter": {"r": [[1, 2], [0, 1]]}},
            {"evolution": {"center_mode": "sideways"}},
            {"prediction": {"horizon_steps": 0}},
            {"prediction": {"source": "oracle"}},
            [],
        ],
    )
    def test_rejects(self, doc):
        with pytest.raises(ConfigError):
            config_from_dict(doc)

    def test_noiseless_r_floor(self):
        cfg = config_from_dict({"scenario": {"noise_sigma": 0}})
        assert cfg.noise().R[0, 0] == 1e-12

    def test_bad_json(self, tmp_path):
        f = tmp_path / "c.json"
        f.write_text("{")
        with pytest.raises(ConfigError):
            load_config(f)


class TestRun:
    def test_noiseless_circle(self):
        cfg = config_from_dict({"scenario": {"noise_sigma": 0, "steps": 100}, "filter": {"q": 0}})
        m = run_scenario(cfg)
        assert m.rmse_filtered < 1e-3
        assert all(h.mean < 1e-6 for h in m.prediction_error_by_horizon)

    def test_dropout_count(self):
        cfg = config_from_dict({"scenario": {"dropout_prob": 0.2, "steps": 600, "seed": 3}})
        m = run_scenario(cfg)
        assert abs(m.dropout_count - 120) <= 5 * math.sqrt(600 * 0.2 * 0.8)
        values = [m.rmse_raw, m.rmse_filtered] + [x for h in m.prediction_error_by_horizon for x in (h.mean, h.max)]
        assert all(math.isfinite(v) and v >= 0 for v in values)

    def test_outputs_deterministic(self, tmp_path):
        for name in ("a", "b"):
            run_scenario(config_from_dict({"scenario": {"seed": 7, "steps": 200}}, output=tmp_path / name))
        for f in ("track.csv", "predictions.csv", "metrics.json"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
        doc = json.loads((tmp_path / "a" / "metrics.json").read_text())
        assert doc["rng"] == RNG_ALGORITHM
        assert (tmp_path / "a" / "predictions.csv").read_text().splitlines()[0] == ",".join(PREDICTION_HEADER)

    def test_report_matches_run(self, tmp_path):
        cfg = config_from_dict({"scenario": {"seed": 5, "steps": 200, "dropout_prob": 0.1}}, output=tmp_path)
        m = run_scenario(cfg)
        r = report_from_files(tmp_path / "track.csv", tmp_path / "predictions.csv")
        assert r.rmse_raw == m.rmse_raw and r.rmse_filtered == m.rmse_filtered
        assert r.dropout_count == m.dropout_count
        assert r.prediction_error_by_horizon == m.prediction_error_by_horizon

    def test_prediction_round_trip(self, tmp_path):
        cfg = config_from_dict({"scenario": {"steps": 60}}, output=tmp_path)
        res = run_samples(simulate(cfg.scenario), cfg)
        from turntrack.pipeline import write_prediction_csv

        write_prediction_csv(tmp_path / "p.csv", res.predictions)
        back = sorted(read_prediction_csv(tmp_path / "p.csv"), key=lambda p: p.start_t)
        assert len(back) == len(res.predictions)
        for a, b in zip(res.predictions, back):
            assert a.start_t == b.start_t
            np.testing.assert_array_equal(a.times, b.times)
            np.testing.assert_array_equal(a.positions, b.positions)

    def test_raw_prediction_source(self):
        cfg = config_from_dict({"scenario": {"steps": 100, "dropout_prob": 0.2}, "prediction": {"source": "raw"}})
        res = run_samples(simulate(cfg.scenario), cfg)
        assert res.metrics.predictions_issued > 0

    def test_replay_without_truth(self, tmp_path):
        samples = [TrackSample(s.t, None, s.measurement) for s in simulate(ScenarioConfig(steps=50))]
        write_track_csv(tmp_path / "m.csv", samples)
        cfg = config_from_dict({"input": str(tmp_path / "m.csv")})
        m = run_scenario(cfg)
        assert m.rmse_raw is None and m.samples == 50
        assert cfg.noise().R[0, 0] == 1.0
