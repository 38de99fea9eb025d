"""File formats, strict config parsing, and report serialization."""

import json
import math

import numpy as np
import pytest

from spinfid import traceio
from spinfid.dynamics import TraceSeries
from spinfid.errors import ParseError, ValidationError


def sample_trace():
    t = np.array([0.0, 0.1e-12, 1.0e-12, 2.7e-12, 1.0 / 3.0 * 1e-11])
    v = np.array([1.0, -0.123456789012345678, 1e-17, math.pi, -7.25])
    return TraceSeries(times=t, values=v)


class TestTraceRoundTrip:
    def test_save_load_exact(self, tmp_path):
        path = tmp_path / "t.csv"
        original = sample_trace()
        traceio.save_trace(original, path)
        loaded = traceio.load_trace(path)
        assert np.array_equal(loaded.values, original.values)
        assert np.array_equal(loaded.times, original.times)

    def test_header_line(self, tmp_path):
        path = tmp_path / "t.csv"
        traceio.save_trace(sample_trace(), path)
        lines = path.read_text().splitlines()
        assert lines[0] == "# spinfid-trace v1"
        assert lines[1] == "time_ps,signal"

    def test_three_row_file(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("# spinfid-trace v1\ntime_ps,signal\n0,1.5\n1,0.5\n2,0.25\n")
        assert len(traceio.load_trace(path)) == 3

    def test_duplicate_time_names_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("# spinfid-trace v1\ntime_ps,signal\n0,1\n1,2\n1,3\n")
        with pytest.raises(ValidationError, match=":5"):
            traceio.load_trace(path)

    def test_empty_data_section(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("# spinfid-trace v1\ntime_ps,signal\n")
        with pytest.raises(ValidationError, match="no samples"):
            traceio.load_trace(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("time,signal\n0,1\n")
        with pytest.raises(ParseError, match=":1"):
            traceio.load_trace(path)

    def test_non_numeric_row_names_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("# spinfid-trace v1\ntime_ps,signal\n0,1\nx,2\n")
        with pytest.raises(ParseError, match=":4"):
            traceio.load_trace(path)

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("# spinfid-trace v1\ntime_ps,signal\n0,1,2\n")
        with pytest.raises(ParseError):
            traceio.load_trace(path)


class TestShotsAndRelaxation:
    def test_shots_round_trip(self, tmp_path):
        path = tmp_path / "s.csv"
        records = [(0.0, 1.25, -1.25), (0.0, 1.5, -0.5), (1e-12, 0.5, -0.5)]
        traceio.save_shots(path, records)
        loaded = traceio.load_shots(path)
        assert loaded == records

    def test_shots_header_checked(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("# spinfid-trace v1\ntime_ps,left,right\n")
        with pytest.raises(ParseError):
            traceio.load_shots(path)

    def test_relaxation_with_and_without_sigma(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("# spinfid-relaxation v1\ntemperature_k,time_ps\n5,1e6\n10,1e5\n")
        temps, times, sigmas = traceio.load_relaxation(path)
        assert sigmas is None
        assert times[0] == pytest.approx(1e6 * 1e-12)
        path.write_text(
            "# spinfid-relaxation v1\ntemperature_k,time_ps,sigma_ps\n5,1e6,1e4\n"
        )
        temps, times, sigmas = traceio.load_relaxation(path)
        assert sigmas[0] == pytest.approx(1e4 * 1e-12)


class TestConfigParsing:
    def test_defaults_are_schema_valid(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps(traceio.default_config_dict()))
        traceio.load_config_file(path)

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"experiments": {}}))
        with pytest.raises(ValidationError, match="experiments"):
            traceio.load_config_file(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"experiment": {"field_telsa": 1.0}}))
        with pytest.raises(ValidationError, match="field_telsa"):
            traceio.load_config_file(path)

    def test_invalid_json_is_parse_error(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            traceio.load_config_file(path)

    def test_merge_overrides_by_section(self):
        merged = traceio.merge_config(traceio.default_config_dict(),
                                      {"experiment": {"field_tesla": 5.0}})
        assert merged["experiment"]["field_tesla"] == 5.0
        assert merged["experiment"]["g_iso"] == 1.74

    def test_resolve_experiment_builds_valid_config(self):
        cfg = traceio.resolve_experiment(traceio.default_config_dict())
        assert cfg.field.magnitude == 0.0
        assert cfg.g.iso == 1.74
        assert cfg.decoherence.member_t2(1.0) == pytest.approx(8.60e-12, rel=1e-9)

    def test_resolve_modulation(self):
        mod = traceio.resolve_modulation(traceio.default_config_dict())
        assert mod.pem_frequency == 50176.0


class TestReports:
    def test_round_trip_byte_identical(self, tmp_path):
        report = traceio.build_report("simulate", traceio.default_config_dict(),
                                      {"x": 1.25, "nested": {"y": [1, 2, 3.5]}})
        text = traceio.dump_report(report)
        assert traceio.dump_report(json.loads(text)) == text

    def test_non_finite_floats_sanitized(self):
        report = traceio.build_report("fit", {}, {"a": math.nan, "b": math.inf})
        parsed = json.loads(traceio.dump_report(report))
        assert parsed["payload"]["a"] is None
        assert parsed["payload"]["b"] == "inf"

    def test_provenance_hash_present(self, tmp_path):
        path = tmp_path / "input.csv"
        path.write_text("data")
        report = traceio.build_report("fit", {}, {}, [path])
        digest = report["provenance"][str(path)]
        assert len(digest) == 64
        path2 = tmp_path / "other.csv"
        path2.write_text("data")
        assert traceio.sha256_file(path2) == digest

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        path = tmp_path / "out.json"
        traceio.write_report({"k": 1}, path)
        assert path.exists()
        assert list(tmp_path.glob("*.tmp")) == []
