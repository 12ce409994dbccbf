import json

import pytest

from bellpoly import cli, io

from conftest import table2_ineq


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_vertices_command(tmp_path, capsys):
    assert run("vertices", "--n", 4, "--out", tmp_path) == cli.EXIT_OK
    assert "n=4: 68 of <=70" in capsys.readouterr().out
    summary = json.loads((tmp_path / "vertices_summary.json").read_text())
    assert summary["vertices"] == 68 and len(summary["merged_non_rotational"]) == 2


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run("facets", "--n", 3, "--out", d) == 0
        assert run("classify", "--n", 3, "--out", d) == 0
    for name in ("facets.jsonl", "facets.csv", "classes.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_table_n3_matches_golden(tmp_path, capsys):
    assert run("table", "--n", 3, "--starts", 5, "--out", tmp_path) == cli.EXIT_OK
    rows = io.read_class_csv(tmp_path / "table.csv")
    assert len(rows) == 6
    assert (tmp_path / "golden_diff.txt").read_text() == "no differences\n"
    flags = json.loads((tmp_path / "table_flags.json").read_text())
    assert [f["trivial"] for f in flags] == [True] * 5 + [False]


def test_golden_difference_exit_code(tmp_path):
    assert run("table", "--n", 3, "--starts", 2, "--tol", 1e-9, "--out", tmp_path) == cli.EXIT_GOLDEN
    assert "beta_Q" in (tmp_path / "golden_diff.txt").read_text()


def test_nsbound_command(tmp_path, capsys):
    assert run("nsbound", "--row", 70, "--out", tmp_path) == 0
    assert "beta_N = 44/3" in capsys.readouterr().out
    cert = json.loads((tmp_path / "ns_certificate.json").read_text())
    assert cert["beta_n"] == "44/3"


def test_nsbound_from_file_and_coeffs(tmp_path, capsys):
    path = tmp_path / "q.json"
    io.write_inequality(path, table2_ineq(64))
    assert run("nsbound", "--ineq", path, "--out", tmp_path) == 0
    assert "beta_N = 10" in capsys.readouterr().out
    assert run("nsbound", "--n", 3, "--coeffs=-1,-3,-1,1,2,3", "--out", tmp_path) == 0
    assert "beta_C = 9  beta_N = 13" in capsys.readouterr().out


def test_qbound_command(tmp_path):
    assert run("qbound", "--table1-row", 6, "--starts", 5, "--out", tmp_path) == 0
    data = json.loads((tmp_path / "qbound.json").read_text())
    assert data["free"]["beta"] == pytest.approx(10.017, abs=1e-3)


def test_seesaw_command(tmp_path, capsys):
    assert run("seesaw", "--row", 66, "--D", 3, "--seeds", 2, "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "seesaw_D3.json").read_text())
    assert rep["D"] == 3
    assert "best beta" in capsys.readouterr().out


def test_dmin_command(tmp_path, capsys):
    from bellpoly.symmetry import classify
    table = classify([table2_ineq(66)])
    csv_path = tmp_path / "t.csv"
    csv_path.write_text(io.class_table_csv(table, {0: {"beta_q": 16.584938}}))
    assert run("dmin", "--table", csv_path, "--D-max", 3, "--seeds", 8, "--out", tmp_path) == 0
    assert "d_min <= 3" in capsys.readouterr().out
    assert "1,3," in (tmp_path / "dmin.csv").read_text()


def test_state_commands(capsys):
    assert run("gme", "--state", "w3", "--symmetric", "--starts", 5) == 0
    out = capsys.readouterr().out
    assert "E_G = 0.555556" in out and "1-max|overlap| = 0.333333" in out
    assert run("chsh-check", "--state", "psi5") == 0
    assert "all two-site reductions CHSH-local" in capsys.readouterr().out


@pytest.mark.parametrize("argv, code", [
    (["nsbound", "--coeffs", "1,2"], cli.EXIT_INPUT),
    (["nsbound", "--n", 3, "--coeffs", "1,2"], cli.EXIT_INPUT),
    (["nsbound", "--row", 999], cli.EXIT_INPUT),
    (["nsbound", "--ineq", "/nonexistent.json"], cli.EXIT_INPUT),
    (["vertices"], cli.EXIT_INPUT),
    (["vertices", "--n", 6], cli.EXIT_RESOURCE),
    (["qbound", "--n", 9, "--coeffs", ",".join(["1"] * 18)], cli.EXIT_RESOURCE),
    (["gme", "--state", "nosuchstate"], cli.EXIT_INPUT),
    (["vertices", "--n", 3, "--tol", -1], cli.EXIT_INPUT),
    (["vertices", "--n", "three"], cli.EXIT_INPUT),
    (["nosuchcommand"], cli.EXIT_INPUT),
])
def test_exit_codes(argv, code, tmp_path):
    assert run(*argv, "--out", tmp_path) == code
