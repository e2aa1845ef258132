"""Render comparison panels from trajectory CSVs emitted by the delaysafe CLI."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# Trajectory CSV schema of the simulator CLI; the sole interface to it.
TRAJECTORY_COLUMNS = (
    "t", "D", "v", "v_L", "a_L", "u_cmd", "u_applied", "d", "d_hat",
    "h", "h_delta", "Dp", "vp", "vLp", "u_ideal", "margin",
)

EGO_COLOR = "tab:purple"
LEAD_COLOR = "tab:red"
IDEAL_COLOR = "tab:green"
EGO_STYLES = ("-", "--", "-.", ":")


class SchemaError(ValueError):
    """The CSV header does not match the simulator's trajectory schema."""


@dataclass(frozen=True)
class RunArtifact:
    path: Path
    label: str
    summary_path: Path | None = None


def _check_header(path, header: list[str]) -> None:
    expected = list(TRAJECTORY_COLUMNS)
    if header == expected:
        return
    for i, name in enumerate(expected):
        if i >= len(header):
            raise SchemaError(f"{path}: missing column '{name}'")
        if header[i] != name:
            raise SchemaError(
                f"{path}: column {i} is '{header[i]}', expected '{name}'"
            )
    raise SchemaError(f"{path}: unexpected extra column '{header[len(expected)]}'")


def load_run(path) -> dict[str, np.ndarray]:
    """Read one trajectory CSV into named columns, validating the schema."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty CSV")
        _check_header(path, header)
        rows = [[float(v) for v in row] for row in reader]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.asarray(rows)
    return {name: data[:, i] for i, name in enumerate(TRAJECTORY_COLUMNS)}


def render(artifacts: list[RunArtifact], out_path) -> Path:
    """
    Four comparison panels across runs: distance vs the moving safe bound,
    speeds, control inputs vs the ideal input, and the barrier traces with the
    effective disturbance. Lead quantities in red, ego runs in purple with one
    line style per run, ideal-input traces in thin green.
    """
    if not artifacts:
        raise ValueError("need at least one run to render")
    runs = [(art, load_run(art.path)) for art in artifacts]

    fig, axes = plt.subplots(2, 2, figsize=(11.0, 7.5), sharex=True)
    (ax_d, ax_v), (ax_u, ax_h) = axes

    for i, (art, cols) in enumerate(runs):
        style = EGO_STYLES[i % len(EGO_STYLES)]
        t = cols["t"]
        ax_d.plot(t, cols["D"], style, color=EGO_COLOR, label=f"D ({art.label})")
        # h = D - D_sf - T v, so D - h is the moving safe bound D_sf + T v
        ax_d.plot(t, cols["D"] - cols["h"], style, color="0.4", lw=0.9,
                  label=f"safe bound ({art.label})")
        ax_v.plot(t, cols["v"], style, color=EGO_COLOR, label=f"v ({art.label})")
        ax_u.plot(t, cols["u_cmd"], style, color=EGO_COLOR, label=f"u ({art.label})")
        ax_u.plot(t, cols["u_ideal"], style, color=IDEAL_COLOR, lw=0.8,
                  label=f"u ideal ({art.label})")
        ax_h.plot(t, cols["h"], style, color=EGO_COLOR, label=f"h ({art.label})")
        ax_h.plot(t, cols["h_delta"], style, color=EGO_COLOR, lw=0.9, alpha=0.45,
                  label=f"h_delta ({art.label})")
        ax_h.plot(t, cols["d_hat"], style, color=IDEAL_COLOR, lw=0.8,
                  label=f"d_hat ({art.label})")

    lead_t, lead_v = runs[0][1]["t"], runs[0][1]["v_L"]
    ax_v.plot(lead_t, lead_v, "-", color=LEAD_COLOR, lw=1.2, label="v_L (lead)")
    ax_h.axhline(0.0, color="k", lw=0.6)

    ax_d.set_ylabel("distance [m]")
    ax_v.set_ylabel("speed [m/s]")
    ax_u.set_ylabel("acceleration [m/s$^2$]")
    ax_h.set_ylabel("barrier [m] / disturbance [m/s$^2$]")
    for ax in (ax_u, ax_h):
        ax.set_xlabel("time [s]")
    for ax in axes.flat:
        ax.grid(True, ls=":", alpha=0.5)
        ax.legend(fontsize=7, ncol=1, loc="best")

    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path)
    plt.close(fig)
    return out_path
