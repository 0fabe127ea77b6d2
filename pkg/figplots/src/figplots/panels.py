"""Panel rendering: fixed layouts keyed by panel kind.

Kinds
-----
``psd``      normalized joint PSD overlay, log y, with the shot-noise line
``sweep``    minimum force noise (solid, left axis) and bandwidth (dashed,
             right axis) versus the sweep variable, log-log
``efsr``     force resolution versus integration time, log-log, with a
             -1/4 slope guide line
``contour``  resolution over the (splitting, time) plane with labeled
             level lines

Color convention: entangled = red, classical = black, optimal = blue,
single-sensor references = gray.

Rendering is deterministic: fixed SVG hash salt, no embedded creation
date, text kept as text (no font paths), so identical CSV input yields
byte-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("svg")
matplotlib.rcParams.update({
    "svg.hashsalt": "figplots",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "figure.figsize": (4.8, 3.4),
    "figure.dpi": 100,
})

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402
import yaml  # noqa: E402

PANEL_KINDS = ("psd", "sweep", "efsr", "contour")

COLORS = {
    "entangled": "red",
    "classical": "black",
    "optimal": "blue",
    "single_classical": "gray",
}


@dataclass(frozen=True)
class PanelSpec:
    """One panel: source CSV, kind, output name and optional labels."""

    kind: str
    csv: Path
    out: str
    title: str = ""
    xscale: str = ""
    yscale: str = ""

    def __post_init__(self):
        if self.kind not in PANEL_KINDS:
            raise ValueError(f"unknown panel kind {self.kind!r}; expected one of {PANEL_KINDS}")
        object.__setattr__(self, "csv", Path(self.csv))
        if not self.csv.exists():
            raise FileNotFoundError(f"panel CSV does not exist: {self.csv}")


def load_panel_specs(path) -> list:
    """Parse a YAML panel-spec file: a mapping with a ``panels`` list."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict) or "panels" not in raw:
        raise ValueError(f"{path}: spec must be a mapping with a 'panels' list")
    base = Path(path).parent
    specs = []
    for entry in raw["panels"]:
        entry = dict(entry)
        entry["csv"] = base / entry["csv"]
        specs.append(PanelSpec(**entry))
    return specs


def read_csv(path: Path):
    """Parse a CSV with '#' comments; returns (columns, rows array).

    Malformed rows raise with the offending 1-based line number; a file
    without data rows is an error so no empty figure can be emitted.
    """
    columns = None
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split(",")
        if columns is None:
            columns = [p.strip() for p in parts]
            continue
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ValueError(f"{path}: row {lineno}: unparseable value ({exc})") from exc
        if len(rows[-1]) != len(columns):
            raise ValueError(f"{path}: row {lineno}: expected {len(columns)} fields")
    if columns is None:
        raise ValueError(f"{path}: no header row")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return columns, np.asarray(rows)


def _kind_color(column: str) -> str:
    for kind in ("single_classical", "entangled", "classical", "optimal"):
        if column.endswith(kind):
            return COLORS[kind]
    return "tab:purple"


def _kind_label(column: str) -> str:
    for kind in ("single_classical", "entangled", "classical", "optimal"):
        if column.endswith(kind):
            return kind.replace("_", " ")
    return column


def _save(fig, out_path: Path) -> None:
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render(spec: PanelSpec, out_dir) -> Path:
    """Render one panel; returns the written SVG path."""
    columns, data = read_csv(spec.csv)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / spec.out
    fig, ax = plt.subplots()
    if spec.kind == "psd":
        _panel_psd(ax, columns, data)
    elif spec.kind == "sweep":
        _panel_sweep(ax, columns, data)
    elif spec.kind == "efsr":
        _panel_efsr(ax, columns, data)
    else:
        _panel_contour(ax, columns, data)
    if spec.title:
        ax.set_title(spec.title)
    if spec.xscale:
        ax.set_xscale(spec.xscale)
    if spec.yscale:
        ax.set_yscale(spec.yscale)
    fig.tight_layout()
    _save(fig, out_path)
    return out_path


def _panel_psd(ax, columns, data):
    if columns[0] != "freq_hz":
        raise ValueError(f"psd panel expects a freq_hz first column, got {columns[0]}")
    freq_mhz = data[:, 0] / 1e6
    for j, col in enumerate(columns[1:], start=1):
        ax.plot(freq_mhz, data[:, j], color=_kind_color(col), lw=1.0, label=_kind_label(col))
    ax.axhline(1.0, color="0.6", lw=0.8, zorder=0, label="shot-noise level")
    ax.set_yscale("log")
    ax.set_xlabel("frequency (MHz)")
    ax.set_ylabel("joint PSD / joint SNL")
    ax.legend(fontsize=7, loc="upper right")


def _split_metric(columns):
    kinds = []
    for col in columns:
        if col.startswith("smin_n2_per_hz_"):
            kinds.append(col[len("smin_n2_per_hz_"):])
    if not kinds:
        raise ValueError("sweep panel: no smin_n2_per_hz_* columns found")
    return kinds


def _panel_sweep(ax, columns, data):
    x = data[:, 0]
    twin = ax.twinx()
    for kind in _split_metric(columns):
        color = _kind_color(f"_{kind}")
        noise = np.sqrt(data[:, columns.index(f"smin_n2_per_hz_{kind}")])
        bw = data[:, columns.index(f"bandwidth_hz_{kind}")]
        ax.plot(x, noise, color=color, lw=1.2, label=_kind_label(kind))
        twin.plot(x, bw, color=color, lw=1.0, ls="--")
    ax.set_xscale("log")
    ax.set_yscale("log")
    twin.set_yscale("log")
    ax.set_xlabel(columns[0])
    ax.set_ylabel("minimum force noise (N/rtHz), solid")
    twin.set_ylabel("3-dB bandwidth (Hz), dashed")
    ax.legend(fontsize=7, loc="upper center")


def _panel_efsr(ax, columns, data):
    if columns[0] != "t_s":
        raise ValueError(f"efsr panel expects a t_s first column, got {columns[0]}")
    t = data[:, 0]
    cols = [c for c in columns if c.startswith("efsr_n_") and "per_rthz" not in c]
    if not cols:
        raise ValueError("efsr panel: no efsr_n_* columns found")
    for col in cols:
        y = data[:, columns.index(col)]
        ax.plot(t, y, color=_kind_color(col), lw=1.2, label=_kind_label(col))
    # -1/4 slope guide anchored above the first curve
    y0 = data[0, columns.index(cols[0])] * 1.6
    ax.plot(t, y0 * (t / t[0]) ** -0.25, color="0.6", lw=0.8, ls=":", label="slope -1/4")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("integration time (s)")
    ax.set_ylabel("force resolution (N)")
    ax.legend(fontsize=7, loc="upper right")


def _panel_contour(ax, columns, data):
    for need in ("delta_omega_hz", "t_s", "efsr_n"):
        if need not in columns:
            raise ValueError(f"contour panel: missing column {need}")
    if "probe_index" in columns:
        sel = data[:, columns.index("probe_index")] == data[0, columns.index("probe_index")]
        data = data[sel]
    dom = np.unique(data[:, columns.index("delta_omega_hz")])
    t = np.unique(data[:, columns.index("t_s")])
    if dom.size < 2 or t.size < 2:
        raise ValueError("contour panel: need at least a 2x2 (splitting, time) grid")
    z = np.full((dom.size, t.size), np.nan)
    for row in data:
        i = np.searchsorted(dom, row[columns.index("delta_omega_hz")])
        j = np.searchsorted(t, row[columns.index("t_s")])
        z[i, j] = row[columns.index("efsr_n")]
    cs = ax.contour(t, dom, z, levels=7, colors="black", linewidths=0.8)
    ax.clabel(cs, fontsize=6, fmt="%.2e")
    ax.set_xscale("log")
    ax.set_xlabel("integration time (s)")
    ax.set_ylabel("resonance splitting (Hz)")
