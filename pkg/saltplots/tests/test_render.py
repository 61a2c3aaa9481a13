import json

import pytest

from saltplots import PlotInputError, render
from saltplots.cli import main

SWEEP_CSV = """sweep_value,q_1,q_2,v_1,v_2,word_id
-0.02,0.1,0.2,0.0,0.0,0
-0.01,0.11,0.21,0.0,0.0,0
0.0,0.12,0.22,0.0,0.0,1
0.01,0.13,0.23,0.0,0.0,2
0.02,0.14,0.24,0.0,0.0,2
"""

SAMPLES_CSV = """t,q_1,v_1,mode_bitmask
0.0,1.0,0.0,0
0.5,0.875,-0.5,0
1.0,0.5,-1.0,0
1.5,0.0,0.0,1
"""

SENS_JSON = {
    "model": "demo",
    "finite_difference": {"max_rel_error": 3.2e-9},
    "word_independence": {"passed": True},
}


@pytest.fixture
def sweep_file(tmp_path):
    p = tmp_path / "sweep.csv"
    p.write_text(SWEEP_CSV)
    return p


def test_sweep_panel_renders(tmp_path, sweep_file):
    out = tmp_path / "panel.png"
    report = render({
        "panel": "sweep-outcome",
        "sweep_csv": str(sweep_file),
        "outcome": "q_1",
        "output": str(out),
    })
    assert out.exists()
    assert report["n_points"] == 5
    assert [t["row"] for t in report["word_transitions"]] == [2, 3]


def test_missing_outcome_column_named(tmp_path, sweep_file):
    with pytest.raises(PlotInputError, match="q_9"):
        render({
            "panel": "sweep-outcome",
            "sweep_csv": str(sweep_file),
            "outcome": "q_9",
            "output": str(tmp_path / "x.png"),
        })


def test_header_only_csv_exits_1(tmp_path, capsys):
    p = tmp_path / "empty.csv"
    p.write_text("sweep_value,q_1,v_1,word_id\n")
    job = tmp_path / "job.json"
    job.write_text(json.dumps({
        "panel": "sweep-outcome", "sweep_csv": str(p),
        "output": str(tmp_path / "x.png"),
    }))
    assert main(["render", "--job", str(job)]) == 1
    assert "no data rows" in capsys.readouterr().err


def test_unknown_panel_exits_1(tmp_path):
    job = tmp_path / "job.json"
    job.write_text(json.dumps({"panel": "pie", "output": "x.png"}))
    assert main(["render", "--job", str(job)]) == 1


@pytest.mark.parametrize("suffix", ["png", "svg"])
def test_rendering_is_deterministic(tmp_path, sweep_file, suffix):
    outs = []
    for name in (f"a.{suffix}", f"b.{suffix}"):
        out = tmp_path / name
        render({
            "panel": "sweep-outcome",
            "sweep_csv": str(sweep_file),
            "outcome": "q_1",
            "output": str(out),
        })
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_trajectory_fan(tmp_path):
    runs = []
    for k in range(2):
        p = tmp_path / f"run{k}.csv"
        p.write_text(SAMPLES_CSV)
        runs.append({"samples_csv": str(p)})
    out = tmp_path / "fan.png"
    report = render({
        "panel": "trajectory-fan", "runs": runs,
        "x": "t", "y": "q_1", "output": str(out),
    })
    assert out.exists() and report["n_runs"] == 2


def test_sensitivity_error_panel(tmp_path):
    p = tmp_path / "sens.json"
    p.write_text(json.dumps(SENS_JSON))
    out = tmp_path / "err.png"
    report = render({
        "panel": "sensitivity-error", "reports": [str(p)], "output": str(out),
    })
    assert out.exists()
    assert report["errors"] == [3.2e-9]
    assert report["word_independence_passed"] == [True]
