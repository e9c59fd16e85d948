"""Minimal deterministic line plots for the reproduction CSVs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def line_plot(path, x, series: dict, xlabel: str, ylabel: str, title: str = "",
              logy: bool = False, hline: float | None = None) -> None:
    """Write an SVG with one line per entry of ``series`` (NaN gaps allowed).

    The hash salt and missing date keep the file byte-identical across runs.
    """
    with plt.rc_context({"svg.hashsalt": "splitwit", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        styles = ["-", "--", "-.", ":"]
        for i, (label, y) in enumerate(series.items()):
            ax.plot(x, np.asarray(y, dtype=float), styles[i % len(styles)], marker=".",
                    label=label)
        if hline is not None:
            ax.axhline(hline, color="0.5", lw=0.8)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
