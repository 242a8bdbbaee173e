"""PNG rendering of scenario tables.

Line tables are drawn as one curve per (group, y column); map tables (x, p,
value on a regular grid) are drawn with pcolormesh. The Agg backend is used
so no display is needed.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _groups(columns, rows, group):
    if not group:
        return {"": rows}
    keys = group.split("/")
    idx = [columns.index(k) for k in keys]
    out = {}
    for r in rows:
        label = ", ".join(f"{k}={r[i]}" for k, i in zip(keys, idx))
        out.setdefault(label, []).append(r)
    return out


def render_table(table, path: str | Path, title: str | None = None) -> Path:
    """Write ``table`` (a presets.Table with a PlotSpec) to ``path`` as PNG."""
    spec = table.plot
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.2), dpi=110)
    cols = table.columns
    if spec.kind == "map":
        arr = np.array([[r[0], r[1], r[2]] for r in table.rows], dtype=float)
        xs, ps = np.unique(arr[:, 0]), np.unique(arr[:, 1])
        Z = arr[:, 2].reshape(ps.size, xs.size)
        lim = np.max(np.abs(Z)) or 1.0
        m = ax.pcolormesh(xs, ps, Z, cmap="RdBu_r", vmin=-lim, vmax=lim, shading="auto")
        fig.colorbar(m, ax=ax, label=cols[2])
        ax.set_xlabel(spec.xlabel or cols[0])
        ax.set_ylabel(spec.ylabel or cols[1])
        ax.set_aspect("equal")
    else:
        xi = cols.index(spec.x)
        for label, rows in _groups(cols, table.rows, spec.group).items():
            x = np.array([r[xi] for r in rows], dtype=float)
            for y in spec.y:
                yv = np.array([r[cols.index(y)] for r in rows], dtype=float)
                if np.all(np.isnan(yv)):
                    continue
                name = ", ".join(s for s in (label, y if len(spec.y) > 1 else "") if s)
                ax.plot(x, yv, label=name or None, lw=1.2)
        ax.set_xlabel(spec.xlabel or spec.x)
        ax.set_ylabel(spec.ylabel or (spec.y[0] if len(spec.y) == 1 else "value"))
        if spec.logx:
            ax.set_xscale("log")
        if spec.logy:
            ax.set_yscale("log")
        handles, _ = ax.get_legend_handles_labels()
        if 1 < len(handles) <= 12:
            ax.legend(fontsize=7)
    ax.set_title(title or table.name, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path
