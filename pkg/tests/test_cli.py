import json

import numpy as np
from click.testing import CliRunner

from photonmesh import load_unitary
from photonmesh.cli import main


def run(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def test_haar_compile_reconstruct_roundtrip(tmp_path):
    u_path = tmp_path / "u.json"
    mesh_path = tmp_path / "mesh.json"
    v_path = tmp_path / "v.json"
    assert run(["haar", "-n", "8", "--seed", "7", "-o", str(u_path)]).exit_code == 0
    result = run(["compile", "-i", str(u_path), "-o", str(mesh_path)])
    assert result.exit_code == 0
    assert "28 cells" in result.output
    assert run(["reconstruct", "-i", str(mesh_path), "-o", str(v_path)]).exit_code == 0
    u, v = load_unitary(u_path), load_unitary(v_path)
    assert np.max(np.abs(u - v)) <= 1e-10


def test_compile_rejects_non_unitary(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 2, "re": [[1, 0], [0, 2]], "im": [[0, 0], [0, 0]]}))
    result = CliRunner().invoke(main, ["compile", "-i", str(bad), "-o", str(tmp_path / "m.json")])
    assert result.exit_code == 2
    assert "error:" in result.output
    # --no-check skips loading validation but decompose still refuses
    result = CliRunner().invoke(
        main, ["compile", "-i", str(bad), "--no-check", "-o", str(tmp_path / "m.json")]
    )
    assert result.exit_code == 2


def test_model_and_simulate(tmp_path):
    model_path = tmp_path / "model.json"
    u_path = tmp_path / "u.json"
    mesh_path = tmp_path / "mesh.json"
    assert run(["model", "ideal", "-n", "4", "-o", str(model_path)]).exit_code == 0
    run(["haar", "-n", "4", "--seed", "1", "-o", str(u_path)])
    run(["compile", "-i", str(u_path), "-o", str(mesh_path)])
    result = run(
        ["simulate", "-m", str(model_path), "-s", str(mesh_path), "--input", "0"]
    )
    assert result.exit_code == 0
    lines = result.output.strip().splitlines()
    assert lines[0] == "port,power_w"
    powers = [float(line.split(",")[1]) for line in lines[1:]]
    assert len(powers) == 4
    # lossless device conserves the 1 mW default input power
    assert sum(powers) == 0.001 or abs(sum(powers) - 0.001) < 1e-15
    csv_path = tmp_path / "powers.csv"
    result = run(
        ["simulate", "-m", str(model_path), "-s", str(mesh_path), "--input", "0",
         "-o", str(csv_path)]
    )
    assert result.exit_code == 0
    assert csv_path.read_text().startswith("port,power_w")


def test_model_paper_kind(tmp_path):
    model_path = tmp_path / "paper.json"
    result = run(["model", "paper", "--seed", "3", "-o", str(model_path)])
    assert result.exit_code == 0
    doc = json.loads(model_path.read_text())
    assert doc["n"] == 12
    assert len(doc["cells"]) == 66


def test_experiment_report_and_figures(tmp_path):
    model_path = tmp_path / "model.json"
    report_path = tmp_path / "report.json"
    run(["model", "paper", "--seed", "0", "-o", str(model_path)])
    result = run(
        ["experiment", "-m", str(model_path), "-n", "5", "--seed", "1234",
         "-o", str(report_path), "--histogram", "0.005"]
    )
    assert result.exit_code == 0
    assert "F = " in result.output
    doc = json.loads(report_path.read_text())
    assert doc["count"] == 5
    hist_csv = tmp_path / "report_hist.csv"
    hist_png = tmp_path / "report_hist.png"
    assert hist_csv.exists() and hist_png.exists()
    assert hist_csv.read_text().startswith("bin_left,bin_right,count")
    assert hist_png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_experiment_reports_byte_identical(tmp_path):
    model_path = tmp_path / "model.json"
    run(["model", "paper", "--seed", "0", "-o", str(model_path)])
    p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
    for p in (p1, p2):
        assert run(
            ["experiment", "-m", str(model_path), "-n", "4", "--seed", "9", "-o", str(p)]
        ).exit_code == 0
    assert p1.read_bytes() == p2.read_bytes()


def test_calibrate_store_scans_and_figures(tmp_path):
    model_path = tmp_path / "model.json"
    store_path = tmp_path / "cal.json"
    scans_dir = tmp_path / "scans"
    run(["model", "ideal", "-n", "3", "-o", str(model_path)])
    result = run(
        ["calibrate", "-m", str(model_path), "-o", str(store_path),
         "--scans-dir", str(scans_dir), "--figures"]
    )
    assert result.exit_code == 0
    store = json.loads(store_path.read_text())
    assert store["device"]["n"] == 3
    assert len(store["insertion_loss_db"]) == 3
    csvs = sorted(scans_dir.glob("actuator_*.csv"))
    assert len(csvs) >= 5  # one per calibratable actuator
    assert csvs[0].read_text().startswith("voltage,port_0")
    assert (tmp_path / "cal_loss.csv").exists()
    assert (tmp_path / "cal_loss.png").exists()


def test_missing_input_file_is_usage_error(tmp_path):
    result = CliRunner().invoke(main, ["compile", "-i", str(tmp_path / "nope.json"),
                                       "-o", str(tmp_path / "m.json")])
    assert result.exit_code != 0
