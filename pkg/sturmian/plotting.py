# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0

"""Deterministic SVG scatter plots.

Points are never joined by lines: neighbouring samples of a spectrum are not
known to belong to one continuous branch.
"""

from pathlib import Path
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib import rc_context  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from public import public  # noqa: E402

FIGSIZE = (6.4, 4.8)
MARKER_SIZE = 1.0
HASH_SALT = "sturmian"

GROUP_COLORS: Dict[str, str] = {
    "left": "tab:red",
    "right": "tab:blue",
    "unknown": "tab:gray",
}
DEFAULT_COLOR = "black"


@public
def scatter_svg(
    path: Path,
    x: Sequence[float],
    y: Sequence[float],
    *,
    groups: Optional[Sequence[str]] = None,
    xlabel: str = "",
    ylabel: str = "",
    title: str = "",
) -> None:
    """Write a scatter plot of ``(x, y)`` to *path*; equal input, equal bytes.

    With *groups*, each distinct group gets its own color and legend entry.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with rc_context({"svg.hashsalt": HASH_SALT, "svg.fonttype": "path"}):
        figure = Figure(figsize=FIGSIZE)
        ax = figure.add_subplot()
        if groups is None:
            ax.scatter(x, y, s=MARKER_SIZE, c=DEFAULT_COLOR, linewidths=0)
        else:
            groups = np.asarray(groups, dtype=str)
            for group in sorted(set(groups.tolist())):
                mask = groups == group
                ax.scatter(
                    x[mask],
                    y[mask],
                    s=MARKER_SIZE,
                    c=GROUP_COLORS.get(group, DEFAULT_COLOR),
                    linewidths=0,
                    label=group,
                )
            if len(groups):
                ax.legend(loc="upper right", markerscale=4)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        figure.savefig(path, format="svg", metadata={"Date": None})
