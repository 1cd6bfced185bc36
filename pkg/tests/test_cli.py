import json
import subprocess
import sys
from pathlib import Path

import pytest

from cartan_forge.catalog import NAMES
from cartan_forge.cli import build_parser, main

ROOT = Path(__file__).resolve().parents[1]
DEMO = str(ROOT / "geometries" / "sphere2_demo.json")
MEDIUM = str(ROOT / "geometries" / "staircase_medium.json")

RUNS = [
    ["check", DEMO],
    ["curvature", "catalog:sphere2"],
    ["curvature", "catalog:staircase"],
    ["transport", DEMO, "--format", "both"],
    ["geodesic", DEMO, "--format", "both"],
    ["autoparallel", MEDIUM, "--format", "both", "--step", "1e-2"],
    ["holonomy", DEMO],
    ["einstein", "catalog:diag4"],
    ["einstein", "catalog:mink-torsion"],
    ["einstein", "catalog:staircase"],
    ["cosserat", MEDIUM, "--format", "both"],
    ["verify", DEMO],
    ["catalog", "list"],
    ["catalog", "export", "sphere3_tele"],
    ["catalog", "verify", "sphere3_tele"],
]


def run(argv, out):
    return main(list(argv) + ["--out", str(out)])


def snapshot(d: Path) -> dict:
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


@pytest.mark.parametrize("argv", RUNS, ids=[" ".join(a[:2]).replace(str(ROOT), "") for a in RUNS])
def test_byte_determinism(argv, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(argv, a) == 0
    assert run(argv, b) == 0
    sa, sb = snapshot(a), snapshot(b)
    assert sa and sa == sb
    for name, data in sa.items():
        if name.endswith(".json"):
            doc = json.loads(data)
            assert doc.get("schema_version") == "1.0" or "coframe" in doc


def test_curvature_report(tmp_path):
    assert run(["curvature", "catalog:sphere2(2)"], tmp_path) == 0
    doc = json.loads((tmp_path / "sphere2.curvature.json").read_text())
    assert doc["curvature_components"]["A^1_212"] == "r^(-2)"
    assert doc["parameters"]["r"] == 2.0
    assert doc["flatness"]["rotational"] == "not-flat"


def test_holonomy_report_schema(tmp_path):
    assert run(["holonomy", DEMO], tmp_path) == 0
    doc = json.loads((tmp_path / "sphere2_demo.holonomy.json").read_text())
    assert {"rotation", "translation", "loop_area"} <= doc.keys()
    assert len(doc["rotation"]) == 2


def test_trajectory_csv_header(tmp_path):
    assert run(["geodesic", DEMO, "--format", "csv"], tmp_path) == 0
    lines = (tmp_path / "sphere2_demo.geodesic.csv").read_text().splitlines()
    assert lines[0] == "t,x1,x2,v1,v2"
    assert len(lines) == 1002


def test_float_format(tmp_path):
    assert run(["geodesic", DEMO], tmp_path) == 0
    text = (tmp_path / "sphere2_demo.geodesic.json").read_text()
    doc = json.loads(text)
    assert '"t_end": 1.000000000000e+00' in text
    assert doc["steps"] == 1000


def test_catalog_verify_exit_codes(tmp_path, capsys):
    for name in NAMES:
        assert run(["catalog", "verify", name], tmp_path) == 0, name
    assert run(["catalog", "verify", "sphere2-corrupted"], tmp_path) == 1
    assert "FAIL sphere2-corrupted scalar_curvature" in capsys.readouterr().out


@pytest.mark.parametrize("name", NAMES)
def test_export_reload_reproduces(name, tmp_path):
    assert run(["catalog", "export", name], tmp_path / "exp") == 0
    exported = tmp_path / "exp" / f"{name}.json"
    assert run(["curvature", str(exported)], tmp_path / "file") == 0
    assert run(["curvature", f"catalog:{name}"], tmp_path / "cat") == 0
    stem = json.loads(exported.read_text())["name"]
    a = (tmp_path / "file" / f"{stem}.curvature.json").read_bytes()
    b = (tmp_path / "cat" / f"{stem}.curvature.json").read_bytes()
    assert a == b


def write(tmp_path, doc) -> str:
    p = tmp_path / "g.json"
    p.write_text(json.dumps(doc))
    return str(p)


BASE = {
    "dimension": 2,
    "coordinates": ["x", "y"],
    "signature": [1, 1],
    "coframe": [["1", "0"], ["0", "1"]],
    "connection": "levi-civita",
}


def test_bad_signature_exit_two(tmp_path, capsys):
    path = write(tmp_path, {**BASE, "signature": [1, 1, 1]})
    assert run(["check", path], tmp_path) == 2
    assert "signature" in capsys.readouterr().err


def test_unknown_symbol_exit_two(tmp_path, capsys):
    path = write(tmp_path, {**BASE, "coframe": [["1", "0"], ["0", "q*x"]]})
    assert run(["check", path], tmp_path) == 2
    assert "coframe[1][1]" in capsys.readouterr().err


def test_non_metric_connection_exit_two(tmp_path, capsys):
    conn = [[["0", "0"], ["1", "0"]], [["1", "0"], ["0", "0"]]]
    path = write(tmp_path, {**BASE, "connection": conn})
    assert run(["check", path], tmp_path) == 2
    assert "connection" in capsys.readouterr().err


def test_missing_file_exit_two(tmp_path):
    assert run(["check", str(tmp_path / "nope.json")], tmp_path) == 2


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["explode"])
    assert exc.value.code == 2


def test_domain_exit_is_failure(tmp_path):
    argv = ["geodesic", "catalog:flat2", "--x0", "0.9,0", "--v0", "1,0", "--t-end", "1", "--step", "1e-2"]
    assert run(argv, tmp_path) == 1


def test_cosserat_csv_input(tmp_path):
    assert run(["cosserat", MEDIUM, "--format", "csv"], tmp_path) == 0
    from cartan_forge.cosserat import write_medium_csv
    from cartan_forge.geometry_file import load_geometry

    M, _ = load_geometry(MEDIUM).medium
    write_medium_csv(M, tmp_path / "nodes.csv")
    assert run(["cosserat", "--csv", str(tmp_path / "nodes.csv")], tmp_path) == 0
    doc = json.loads((tmp_path / "nodes.cosserat.json").read_text())
    assert doc["mode"] == "array"
    assert doc["torque_residual"]["max_norm"] == pytest.approx(1.0)


def test_env_var_sets_default_out(monkeypatch, tmp_path):
    monkeypatch.setenv("CARTAN_FORGE_OUT", str(tmp_path / "env"))
    args = build_parser().parse_args(["check", DEMO])
    assert args.out == str(tmp_path / "env")


def test_console_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "cartan_forge.cli", "catalog", "list", "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert r.returncode == 0
    assert r.stdout.split() == list(NAMES)
