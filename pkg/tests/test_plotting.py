"""Figure emission: determinism and input validation."""

import numpy as np
import pytest

from spinfid import plotting
from spinfid.dynamics import TraceSeries
from spinfid.errors import ValidationError


def sample_trace(seed=0):
    t = np.linspace(0, 30e-12, 120)
    rng = np.random.default_rng(seed)
    return TraceSeries(times=t, values=np.exp(-t / 8e-12) + 0.02 * rng.standard_normal(t.size))


def test_single_trace_svg_byte_stable(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    plotting.plot_trace(sample_trace(), a)
    plotting.plot_trace(sample_trace(), b)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes().lstrip().startswith(b"<?xml")


def test_empty_trace_rejected(tmp_path):
    empty = TraceSeries(times=np.array([]), values=np.array([]))
    with pytest.raises(ValidationError):
        plotting.plot_trace(empty, tmp_path / "x.svg")
    with pytest.raises(ValidationError):
        plotting.plot_trace_overlay([], [], tmp_path / "x.svg")


def test_overlay_with_legend(tmp_path):
    traces = [sample_trace(0), sample_trace(1)]
    path = tmp_path / "overlay.svg"
    plotting.plot_trace_overlay(traces, ["a", "b"], path)
    content = path.read_text()
    assert "<svg" in content


def test_regression_plot_rejects_empty(tmp_path):
    with pytest.raises(ValidationError):
        plotting.plot_regression([], [], None, [], [], "x", "y", tmp_path / "r.svg")
