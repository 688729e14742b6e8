import json
import re
import subprocess
import sys
from pathlib import Path

import pytest

from slowgrowth.cli import EXPERIMENTS, ConfigError, dump_json, main, parse_config, run, series_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_list_experiments(capsys):
    assert main(["--list-experiments"]) == 0
    out = capsys.readouterr().out
    for name in ("prop1-growth", "twist-growth", "pendulum-action", "flux-linearity", "gamma",
                 "index-table", "floer-ranks", "variation", "intersections"):
        assert name in out
    assert set(EXPERIMENTS) >= {"prop1-growth", "intersections"}


def test_missing_command_is_a_config_error():
    assert main([]) == 2


@pytest.mark.parametrize("text, line", [
    ("experiment: twist-growth\nschedule:\n  n_max: -4\n", 3),
    ("experiment: gamma\ntol:\n  rel_tol: 0\n", 3),
    ("experiment: gamma\nbogus: 1\n", 2),
    ("experiment: floer-ranks\nmodel:\n  name: S\n  colour: red\n", 4),
    ("experiment: floer-ranks\nschedule:\n  m_max: two\n", 3),
    ("experiment: variation\nschedule:\n  deltas: [0.25, 0.6]\n", 3),
    ("experiment: nonsense\n", 1),
    ("seed: 1\n", 1),
])
def test_config_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_malformed_config_exits_2(tmp_path, capsys):
    path = _write(tmp_path, "experiment: twist-growth\nschedule:\n  n_max: -1\n")
    assert main(["run", str(path), "--out", str(tmp_path)]) == 2
    assert "line 3" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_index_table_exits_0(tmp_path):
    assert main(["run", str(CONFIGS / "index-table.yaml"), "--out", str(tmp_path), "--quiet"]) == 0
    report = json.loads((tmp_path / "index-table.json").read_text())
    assert report["schema_version"] == 1
    assert report["passed"] and all(v["passed"] for v in report["verdicts"])
    assert [v["name"].split(":")[0] for v in report["verdicts"]] == ["S", "RP", "CP", "HP", "CaP2"]
    assert main(["run", str(CONFIGS / "index-table-quotients.yaml"), "--out", str(tmp_path),
                 "--quiet"]) == 0


def test_floer_ranks_totals(tmp_path):
    report, code = run(CONFIGS / "floer-ranks.yaml", tmp_path)
    assert code == 0
    totals = [v for n, v, _ in report.series["S_2"]]
    assert totals == [2, 4, 6, 8, 10]


def test_csv_output_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["run", str(CONFIGS / "twist-cylinder.yaml"), "--out", str(out), "--quiet"]) == 0
    files = sorted(p.name for p in a.glob("*.csv"))
    assert files
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    header = (a / files[0]).read_text().splitlines()[0]
    assert header == "n,value,richardson_error"


def test_floats_have_17_significant_digits():
    assert dump_json({"x": 0.1}) == '{\n  "x": 0.10000000000000001\n}'
    assert json.loads(dump_json({"a": [1, 2.5, None, True], "s": 'q"\n'})) == {
        "a": [1, 2.5, None, True], "s": 'q"\n'}
    text = series_csv([(1, 1 / 3, 0.0)])
    assert text.splitlines()[1] == "1,0.33333333333333331,0"


def test_report_verdicts_recomputable_from_series(tmp_path):
    report, code = run(CONFIGS / "twist-cylinder.yaml", tmp_path)
    data = json.loads((tmp_path / "twist-cylinder.json").read_text())
    rows = data["series"]["volume"]
    late = [r["value"] / r["n"] for r in rows if r["n"] >= 256]
    assert all(abs(v - 2.0) / 2.0 <= 0.05 for v in late)
    assert code == 0 and data["seed"] == 2


def test_budget_exhaustion_exits_3(tmp_path):
    text = (CONFIGS / "twist-cylinder.yaml").read_text().replace(
        "  ratio_rel: 0.05", "  ratio_rel: 0.05\n  max_vertices: 200")
    path = _write(tmp_path, text)
    assert main(["run", str(path), "--out", str(tmp_path), "--quiet"]) == 3
    data = json.loads((tmp_path / "twist-cylinder.json").read_text())
    assert data["status"] == "budget_exhausted"
    assert data["series"]["volume"]


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "slowgrowth.cli", "run",
                           str(CONFIGS / "variation.yaml"), "--out", str(tmp_path)],
                          capture_output=True, text=True, timeout=100)
    assert proc.returncode == 0
    assert re.search(r"variation: complete, (\d+)/\1 verdicts pass", proc.stdout)
