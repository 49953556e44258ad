"""Tests for SVG rendering of written tables"""
import numpy as np
import pytest

from echolab.exceptions import TableFormatError
from echolab.plot_service import PlotKind, PlotService
from echolab.table_writer import Table, write_table

plots = PlotService()


def _write(tmp_path, columns, rows, summary=None):
    manifest = {"config": {"name": "demo"}, "summary": summary or {}}
    return write_table(tmp_path / "demo.csv", Table(columns, rows, manifest))


def test_fidelity_plot(tmp_path):
    t = np.linspace(0, 6, 13)
    rows = [{"t": s, "f_semi": np.exp(-s), "f_exact": np.exp(-s), "ehrenfest_flag": s > 5} for s in t]
    path = _write(tmp_path, ["t", "f_semi", "f_exact", "ehrenfest_flag"], rows)
    out = plots.emit_plot(path, PlotKind.FIDELITY)
    assert out.name == "demo.fidelity.svg"
    assert out.read_text(encoding="utf-8").lstrip().startswith("<?xml")


def test_rho_plot_with_annotations(tmp_path):
    t = np.linspace(0, 40, 81)
    rows = [{"t": s, "rho": np.cos(s) ** 2, "envelope": 1.0} for s in t]
    summary = {"window": [10.0, 20.0], "revival_peak": {"t": 31.4, "rho": 0.99}}
    path = _write(tmp_path, ["t", "rho", "envelope"], rows, summary)
    out = plots.emit_plot(path, "rho", tmp_path / "figures" / "rho.svg")
    assert out.exists()


def test_convergence_plot(tmp_path):
    rows = [{"hbar": h, "max_err": 0.3 * h ** 0.5} for h in (0.1, 0.05, 0.025)]
    out = plots.emit_plot(_write(tmp_path, ["hbar", "max_err"], rows), PlotKind.CONVERGENCE)
    assert "slope 0.50" in out.read_text(encoding="utf-8")


def test_convergence_plot_needs_two_points(tmp_path):
    rows = [{"hbar": 0.1, "max_err": 0.1}, {"hbar": 0.05, "max_err": float("nan")}]
    with pytest.raises(TableFormatError):
        plots.emit_plot(_write(tmp_path, ["hbar", "max_err"], rows), PlotKind.CONVERGENCE)


def test_missing_columns_raise(tmp_path):
    path = _write(tmp_path, ["t", "f_semi"], [{"t": 0.0, "f_semi": 1.0}])
    with pytest.raises(TableFormatError):
        plots.emit_plot(path, PlotKind.FIDELITY)
    with pytest.raises(TableFormatError):
        plots.emit_plot(path, PlotKind.RHO)
