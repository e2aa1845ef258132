import csv
import math
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from delaysafe_plots.cli import main
from delaysafe_plots.render import (
    TRAJECTORY_COLUMNS,
    RunArtifact,
    SchemaError,
    load_run,
    render,
)


def synth_csv(path, n=60, braking=True):
    """Small schema-conformant trajectory: cruise then brake."""
    dt = 0.05
    rows = []
    D, v, vL = 45.0, 20.0, 20.0
    for k in range(n):
        t = k * dt
        aL = -6.0 if braking and 1.0 <= t < 1.5 else 0.0
        u = -1.0 if t >= 0.5 else 0.0
        h = D - 3.0 - 2.0 * v
        rows.append([t, D, v, vL, aL, u, u, 0.0, 0.1 * math.sin(t), h, h,
                     D, v, vL, u * 0.9, 0.8])
        vL = max(0.0, vL + aL * dt)
        v = v + u * dt
        D = D + (vL - v) * dt
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        writer.writerows(rows)
    return path


def test_load_run_roundtrip(tmp_path):
    path = synth_csv(tmp_path / "run.csv")
    cols = load_run(path)
    assert set(cols) == set(TRAJECTORY_COLUMNS)
    assert len(cols["t"]) == 60
    assert cols["t"][1] == pytest.approx(0.05)


def test_render_single_run(tmp_path):
    path = synth_csv(tmp_path / "run.csv")
    out = render([RunArtifact(path, "run")], tmp_path / "fig.png")
    assert out.exists() and out.stat().st_size > 0


def test_render_two_runs_and_formats(tmp_path):
    a = synth_csv(tmp_path / "baseline.csv")
    b = synth_csv(tmp_path / "predictor.csv", braking=False)
    for ext in ("png", "svg"):
        out = render([RunArtifact(a, "baseline"), RunArtifact(b, "predictor")],
                     tmp_path / f"fig.{ext}")
        assert out.exists() and out.stat().st_size > 0


def test_render_is_read_only(tmp_path):
    path = synth_csv(tmp_path / "run.csv")
    before = path.read_bytes()
    render([RunArtifact(path, "run")], tmp_path / "fig.png")
    assert path.read_bytes() == before


def test_schema_mismatch_names_offending_column(tmp_path):
    path = synth_csv(tmp_path / "bad.csv")
    text = path.read_text().replace("u_cmd", "u_command", 1)
    path.write_text(text)
    with pytest.raises(SchemaError, match="u_cmd"):
        load_run(path)


def test_missing_column_detected(tmp_path):
    path = tmp_path / "short.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS[:-1])
        writer.writerow([0.0] * (len(TRAJECTORY_COLUMNS) - 1))
    with pytest.raises(SchemaError, match="margin"):
        load_run(path)


def test_cli_renders(tmp_path, capsys):
    a = synth_csv(tmp_path / "a.csv")
    out = tmp_path / "fig.png"
    assert main([str(a), "--out", str(out)]) == 0
    assert out.exists() and out.stat().st_size > 0


def test_cli_schema_mismatch_exits_nonzero(tmp_path, capsys):
    path = synth_csv(tmp_path / "bad.csv")
    path.write_text(path.read_text().replace("d_hat", "dhat", 1))
    code = main([str(path), "--out", str(tmp_path / "fig.png")])
    assert code != 0
    assert "d_hat" in capsys.readouterr().err


def test_cli_empty_csv_exits_nonzero(tmp_path, capsys):
    path = tmp_path / "empty.csv"
    path.write_text("")
    assert main([str(path), "--out", str(tmp_path / "fig.png")]) != 0


def test_cli_header_only_csv_exits_nonzero(tmp_path, capsys):
    path = tmp_path / "header.csv"
    path.write_text(",".join(TRAJECTORY_COLUMNS) + "\n")
    assert main([str(path), "--out", str(tmp_path / "fig.png")]) != 0


def test_cli_label_count_mismatch(tmp_path, capsys):
    a = synth_csv(tmp_path / "a.csv")
    assert main([str(a), "--labels", "x", "y", "--out", str(tmp_path / "f.png")]) == 1


def _sim_cli():
    exe = shutil.which("delaysafe")
    if exe:
        return [exe]
    return [sys.executable, "-m", "delaysafe.cli"]


def test_end_to_end_with_simulator_cli(tmp_path):
    # drive the primary through its public CLI, then render the emitted CSVs
    csvs = []
    for name in ("baseline_no_predictor", "predictor_nominal"):
        out = tmp_path / f"{name}.csv"
        proc = subprocess.run(
            _sim_cli() + ["run", "--controller", name, "--out", str(out),
                          "--t-end", "2.0"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        csvs.append(out)
    fig = tmp_path / "comparison.png"
    code = main([str(csvs[0]), str(csvs[1]),
                 "--labels", "baseline", "predictor", "--out", str(fig)])
    assert code == 0
    assert fig.stat().st_size > 0
