import csv
import io
import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from cml.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run_cli(tmp_path, experiment, config, *extra):
    path = tmp_path / f"{experiment}.json"
    path.write_text(json.dumps(config))
    out = tmp_path / "report.out"
    code = main([experiment, "--config", str(path), "--out", str(out), *extra])
    return code, (out.read_text() if out.exists() else None)


def riesz_config(K, value="1"):
    return {
        "spec": {"base": {"kind": "power", "b": 4, "K": max(K, 1)}, "coeffs": {"kind": "constant", "value": value}, "K": K},
        "window": 20,
    }


def table(report):
    return {row["n"]: row["coefficient"] for row in json.loads(report)["derived"]["coefficients"]}


def test_riesz_table(tmp_path):
    code, out = run_cli(tmp_path, "riesz", riesz_config(3))
    assert code == 0
    t = table(out)
    assert t[4] == "1/2" and t[20] == "1/4"
    # oracle: products of halves over the balanced digits of n in base 4
    assert t[0] == "1" and t[5] == "1/4" and t[19] == "1/8" and 2 not in t


def test_riesz_empty_product(tmp_path):
    code, out = run_cli(tmp_path, "riesz", riesz_config(0))
    assert code == 0
    assert table(out) == {0: "1"}


def test_riesz_bad_coefficient(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "riesz", riesz_config(3, value="3"))
    assert code == 2
    assert "out of (-1,1]" in capsys.readouterr().err


def test_gap_minimum_half(tmp_path):
    corpus = [{"atoms": [{"p": 0, "q": 1, "re": "1"}]}, {"atoms": [{"p": 0, "q": 1, "re": "1/2"}]}]
    code, out = run_cli(tmp_path, "gap", {"corpus": corpus, "window": 50})
    assert code == 0
    assert json.loads(out)["derived"]["corpus_minimum"] == 0.5


def test_gap_empty_corpus(tmp_path):
    code, _ = run_cli(tmp_path, "gap", {"corpus": [], "window": 50})
    assert code == 2


def test_wiener_first_average(tmp_path):
    m = {"atoms": [{"p": 0, "q": 1, "re": "1/2"}, {"p": 1, "q": 2, "re": "1/2"}]}
    code, out = run_cli(tmp_path, "wiener", {"measure": m, "Ns": [2, 10]})
    assert code == 0
    rows = json.loads(out)["derived"]["rows"]
    assert rows[0]["N"] == 2 and rows[0]["average"] == "3/5"


def test_idem_q2(tmp_path):
    code, out = run_cli(tmp_path, "idem", {"q_min": 2, "q_max": 2})
    assert code == 0
    row = json.loads(out)["derived"]["summary"][0]
    assert row["count"] == 4 and row["idempotent"] and row["transform_indicator"]


def test_obstruct_witness(tmp_path):
    code, out = run_cli(tmp_path, "obstruct", {"alpha": 1.0, "B": 10, "M": 50})
    assert code == 0
    assert json.loads(out)["derived"]["m"] == 44


def test_obstruct_rational_alpha_is_input_error(tmp_path):
    code, _ = run_cli(tmp_path, "obstruct", {"alpha": 1.5707963267948966, "B": 10, "M": 50})
    assert code == 2


def test_nonsep_identical_branches(tmp_path):
    code, _ = run_cli(tmp_path, "nonsep", {"branches": ["011", "011"], "base": 4})
    assert code == 2


def test_missing_config_file(tmp_path):
    assert main(["riesz", "--config", str(tmp_path / "absent.json")]) == 2


@pytest.mark.parametrize("name", sorted(p.stem for p in CONFIGS.glob("*.json")))
def test_bundled_configs_pass_and_are_deterministic(tmp_path, name):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main([name, "--config", str(CONFIGS / f"{name}.json"), "--out", str(a)]) == 0
    assert main([name, "--config", str(CONFIGS / f"{name}.json"), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    report = json.loads(a.read_text())
    assert report["wall_time"] is None
    assert report["checks"] and all(c["verdict"] in ("pass", "inconclusive") for c in report["checks"])


def test_gap_parallel_matches_serial(tmp_path):
    cfg = str(CONFIGS / "gap.json")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gap", "--config", cfg, "--out", str(a)]) == 0
    assert main(["gap", "--config", cfg, "--out", str(b), "--parallel"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_csv_format(tmp_path):
    code, out = run_cli(tmp_path, "riesz", riesz_config(3), "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {"n": "4", "coefficient": "1/2"} in rows


def test_window_override(tmp_path):
    code, out = run_cli(tmp_path, "riesz", riesz_config(3), "--window", "5")
    assert code == 0
    assert max(table(out)) == 5


def test_timing_flag_records_wall_time(tmp_path):
    code, out = run_cli(tmp_path, "riesz", riesz_config(2), "--timing")
    assert code == 0
    assert json.loads(out)["wall_time"] >= 0


def test_console_script():
    exe = shutil.which("cml")
    cmd = [exe] if exe else [sys.executable, "-m", "cml.cli"]
    proc = subprocess.run([*cmd, "obstruct", "--config", str(CONFIGS / "obstruct.json")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["derived"]["s"] == 7
