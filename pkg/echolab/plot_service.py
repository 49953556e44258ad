"""
Plot Service
Static SVG figures rendered from written tables: return probability, fidelity and convergence fits
"""
import enum
import logging
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from echolab.exceptions import TableFormatError  # noqa: E402
from echolab.table_writer import Table, read_table  # noqa: E402

logger = logging.getLogger(__name__)


class PlotKind(str, enum.Enum):
    RHO = "rho"
    FIDELITY = "fidelity"
    CONVERGENCE = "convergence"


REQUIRED_COLUMNS = {
    PlotKind.RHO: ["t", "rho"],
    PlotKind.FIDELITY: ["t", "f_semi", "f_exact"],
    PlotKind.CONVERGENCE: ["hbar", "max_err"],
}


# Keep labels as SVG text rather than glyph outlines
SVG_RC = {"svg.fonttype": "none"}


class PlotService:
    """Renders one figure per table"""

    def __init__(self, figsize=(8, 5)):
        self.figsize = figsize

    def emit_plot(
        self,
        table_path: Union[str, Path],
        kind: PlotKind,
        out_path: Optional[Union[str, Path]] = None,
    ) -> Path:
        """
        Render a table as an SVG next to it (or at out_path)

        Args:
            table_path: CSV written by write_table
            kind: which figure to draw
            out_path: destination; defaults to <table>.<kind>.svg

        Returns:
            Path of the written SVG
        """
        kind = PlotKind(kind)
        table = read_table(table_path)
        table.require(REQUIRED_COLUMNS[kind])
        out_path = Path(out_path) if out_path else Path(table_path).with_suffix(f".{kind.value}.svg")

        with plt.rc_context(SVG_RC):
            self._render(kind, table, Path(table_path).stem, out_path)
        logger.info(f"✓ Wrote {kind.value} plot to {out_path}")
        return out_path

    def _render(self, kind: PlotKind, table: Table, default_title: str, out_path: Path) -> None:
        fig, ax = plt.subplots(figsize=self.figsize)
        try:
            {
                PlotKind.RHO: self._draw_rho,
                PlotKind.FIDELITY: self._draw_fidelity,
                PlotKind.CONVERGENCE: self._draw_convergence,
            }[kind](ax, table)
            ax.set_title(table.manifest.get("config", {}).get("name", default_title))
            fig.tight_layout()
            out_path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(out_path, format="svg")
        finally:
            plt.close(fig)

    # ==================== FIGURES ====================

    @staticmethod
    def _summary(table: Table) -> dict:
        summary = table.manifest.get("summary") or {}
        # Sweeps keep one summary per hbar; annotate the first
        if summary and all(isinstance(v, dict) for v in summary.values()):
            return next(iter(summary.values()))
        return summary

    def _draw_rho(self, ax, table: Table):
        t = table.column("t")
        order = np.argsort(t)
        ax.plot(t[order], table.column("rho")[order], lw=0.8, label=r"$\rho(t)$")
        if "envelope" in table.columns:
            ax.plot(t[order], table.column("envelope")[order], "k--", lw=0.8, label="envelope")

        summary = self._summary(table)
        window = summary.get("window")
        if window:
            ax.axvspan(window[0], window[1], color="tab:orange", alpha=0.15, label="collapse window")
        peak = summary.get("revival_peak")
        if peak:
            ax.annotate(
                f"revival ρ={peak['rho']:.3f}",
                xy=(peak["t"], peak["rho"]),
                xytext=(0.6, 0.9),
                textcoords="axes fraction",
                arrowprops={"arrowstyle": "->"},
            )
        ax.set_xlabel("t")
        ax.set_ylabel("return probability")
        ax.legend(loc="upper right")

    def _draw_fidelity(self, ax, table: Table):
        t = table.column("t")
        ax.plot(t, table.column("f_semi"), label="semiclassical")
        exact = table.column("f_exact")
        if np.any(np.isfinite(exact)):
            ax.plot(t, exact, "--", label="exact")
        if "ehrenfest_flag" in table.columns:
            flagged = table.column("ehrenfest_flag") > 0
            if np.any(flagged):
                ax.axvline(t[np.argmax(flagged)], color="grey", ls=":", label="Ehrenfest flag")
        ax.set_xlabel("t")
        ax.set_ylabel("fidelity")
        ax.legend()

    def _draw_convergence(self, ax, table: Table):
        h = table.column("hbar")
        err = table.column("max_err")
        keep = np.isfinite(err) & (err > 0)
        if np.sum(keep) < 2:
            raise TableFormatError("Convergence plot needs at least two finite errors")
        ax.loglog(h[keep], err[keep], "o", label="max error")

        slope, intercept = np.polyfit(np.log(h[keep]), np.log(err[keep]), 1)
        grid = np.geomspace(h[keep].min(), h[keep].max(), 50)
        ax.loglog(grid, np.exp(intercept) * grid ** slope, "-", label=f"slope {slope:.2f}")
        ax.set_xlabel("ħ")
        ax.set_ylabel("max |f_semi − f_exact|")
        ax.legend()


# Global plot service instance
plot_service = PlotService()
