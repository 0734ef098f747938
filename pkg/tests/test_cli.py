import csv
import io
import json
import subprocess
import sys

import pytest

from fairshare.cli import REPORT_COLUMNS, emit_plot_data, main, parse_document, parse_range
from fairshare.domain import bundled_scenarios, find_scenario, load_scenario, validate_scenario

SHORT = ["--set", "sim.duration_ms=5000", "--set", "sim.warmup_ms=0"]


@pytest.fixture
def cli(tmp_path):
    def invoke(*argv):
        out = tmp_path / "out"
        out.unlink(missing_ok=True)
        rc = main([*argv, "--output", str(out)])
        return rc, out.read_text() if out.exists() else ""
    return invoke


def csv_rows(text):
    return list(csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#")))


def test_entitle_dbms_inactive(cli):
    rc, text = cli("entitle", "-s", "consolidation", "--inactive", "DBMS")
    assert rc == 0
    for user, pct in [("web", "25.00%"), ("usrA", "15.00%"), ("usrB", "12.50%"), ("usrC", "47.50%")]:
        (line,) = [ln for ln in text.splitlines() if ln.startswith(user + " ")]
        assert line.split()[5] == pct


def test_entitle_csv_exact(cli):
    rc, text = cli("entitle", "-s", "consolidation", "--active", "Web,Users", "--format", "csv")
    rows = {r["user"]: r for r in csv_rows(text)}
    assert float(rows["usrC"]["dynamic"]) == 0.475
    assert rows["dbms"]["active"] == "false"


def test_sweep_csv_has_one_row_per_user_and_point(cli):
    rc, text = cli("sweep", "-s", "fairshare9010", "--processes", "1..50:7", "--format", "csv", *SHORT)
    assert rc == 0
    rows = csv_rows(text)
    assert len(rows) == 2 * len(range(1, 51, 7))
    assert tuple(rows[0]) == REPORT_COLUMNS


def test_sweep_accepts_user_subset(cli):
    rc, text = cli("sweep", "-s", "fairshare9010", "--processes", "2", "--users", "light",
                   "--format", "csv", *SHORT)
    rows = {r["user"]: r for r in csv_rows(text)}
    assert rows["light"]["processes"] == "2" and rows["heavy"]["processes"] == "20"


def test_empty_sweep_prints_header_only(cli):
    rc, text = cli("sweep", "-s", "loophole", "--processes", "", "--format", "csv", "--no-header")
    assert rc == 0
    assert text.strip() == ",".join(REPORT_COLUMNS)
    assert emit_plot_data([], "csv") == (",".join(REPORT_COLUMNS) + "\n").encode()


def test_no_header_output_is_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"o{i}.csv"
        assert main(["simulate", "-s", "loophole", "--format", "csv", "--no-header",
                     "--output", str(path), *SHORT]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert not outs[0].startswith(b"#")


def test_header_names_the_scenario(cli):
    rc, text = cli("simulate", "-s", "loophole", "--format", "csv", *SHORT)
    assert text.startswith("# fairshare simulate")
    assert "seed=42" in text.splitlines()[1]


def test_compare_has_degradation_column(cli):
    rc, text = cli("compare", "-s", "loophole", "--processes", "5", "--format", "csv",
                   "--set", "sim.duration_ms=20000", "--set", "sim.warmup_ms=0")
    assert rc == 0
    rows = {r["user"]: r for r in csv_rows(text)}
    light = rows["light"]
    assert float(light["degradation"]) == pytest.approx(
        float(light["resp_fs_ms"]) / float(light["resp_ts_ms"]), rel=1e-3)


def test_json_round_trip(cli):
    rc, text = cli("simulate", "-s", "capdemo", "--format", "json", *SHORT)
    report = parse_document(text)
    assert report.scenario == "capdemo"
    assert json.loads(emit_plot_data(report, "json")) == json.loads(text)
    rc, text = cli("sweep", "-s", "loophole", "--processes", "1,2", "--format", "structured", *SHORT)
    reports = parse_document(text)
    assert [r.users[0].processes for r in reports] == [1, 2]
    assert not text.startswith("#")


def test_format_from_environment(cli, monkeypatch):
    monkeypatch.setenv("FAIRSHARE_FORMAT", "csv")
    rc, text = cli("entitle", "-s", "consolidation", "--no-header")
    assert text.startswith("user,group,shares")
    rc, text = cli("entitle", "-s", "consolidation", "--no-header", "--format", "table")
    assert text.startswith("user  group")


def test_plan_and_what_if(cli):
    rc, text = cli("plan", "-s", "consolidation", "--format", "csv")
    assert rc == 0
    rows = {r["user"]: r for r in csv_rows(text)}
    assert float(rows["dbms"]["util"]) == pytest.approx(0.6)
    rc, text = cli("what-if", "-s", "consolidation", "-H", "usrA,usrB", "-H", "all", "--format", "csv")
    rows = [r for r in csv_rows(text) if r["hypothesis"] == "1" and r["user"] in ("usrA", "usrB")]
    assert all(8 <= float(r["resp_ratio"]) <= 12 for r in rows)


def test_suggest(cli):
    rc, text = cli("suggest", "--measured", "A=0.45,B=0.30,C=0.25", "--format", "csv")
    assert rc == 0
    assert {r["user"]: int(r["shares"]) for r in csv_rows(text)} == {"A": 45, "B": 30, "C": 25}
    rc, _ = cli("suggest", "--measured", "A=0,B=0")
    assert rc == 3


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["simulate", "-s", "loophole", "--frobnicate"],
    ["sweep", "-s", "loophole", "--processes", "1..x"],
    ["sweep", "-s", "loophole", "--processes", "-3"],
    ["simulate", "-s", "loophole", "--format", "xml"],
])
def test_usage_errors_exit_2(cli, argv):
    assert cli(*argv)[0] == 2


@pytest.mark.parametrize("argv", [
    ["simulate", "-s", "loophole", "--set", "sim.duration_ms=-5"],
    ["simulate", "-s", "loophole", "--set", "nope.x=1"],
    ["simulate", "-s", "/no/such/file.scn"],
    ["entitle", "-s", "consolidation", "--inactive", "nobody"],
    ["plan", "-s", "consolidation", "--active", ""],
])
def test_invalid_input_exits_3(cli, argv):
    assert cli(*argv)[0] == 3


def test_unwritable_output_exits_4(tmp_path):
    target = tmp_path / "missing-dir" / "out.csv"
    assert main(["entitle", "-s", "consolidation", "--output", str(target)]) == 4


def test_parse_range_forms():
    assert parse_range("1..5") == [1, 2, 3, 4, 5]
    assert parse_range("1..50:10") == [1, 11, 21, 31, 41]
    assert parse_range("1,2,5") == [1, 2, 5]
    assert parse_range("") == []


@pytest.mark.parametrize("name", bundled_scenarios())
def test_bundled_scenarios_validate(name, cli):
    assert validate_scenario(load_scenario(find_scenario(name))) == []
    assert cli("entitle", "-s", name)[0] == 0


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "fairshare.cli", "entitle", "-s", "capdemo",
                           "--format", "csv", "--no-header"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("user,group")
