import csv
import io
import json
import subprocess
import sys

import pytest

from doublephase.cli import main

from oracles import closed_form_lam1


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#")))


def test_eig1_1d(capsys):
    code, out, _ = run(capsys, "eig1", "--dim", "1", "--n", "3", "--r", "2")
    assert code == 0
    (row,) = rows(out)
    assert float(row["lam1"]) == pytest.approx(9.372583, rel=1e-6)
    assert list(row) == ["r", "n", "dim", "lam1", "residual", "iters"]


def test_eig1_2d(capsys):
    code, out, _ = run(capsys, "eig1", "--dim", "2", "--n", "3,3", "--r", "2")
    assert code == 0
    (row,) = rows(out)
    assert row["n"] == "3x3"
    assert float(row["lam1"]) == pytest.approx(18.745166, rel=1e-6)


def test_eig1_bad_n_is_usage_error(capsys):
    code, _, err = run(capsys, "eig1", "--dim", "1", "--n", "0", "--r", "2")
    assert code == 2
    assert "usage" in err


def test_eig1_nonconvergence(capsys):
    code, out, _ = run(capsys, "eig1", "--dim", "1", "--n", "31", "--r", "3", "--max-iter", "1")
    assert code == 3
    assert rows(out)


def test_eig1_dump(capsys, tmp_path):
    path = tmp_path / "u1.csv"
    code, _, _ = run(capsys, "eig1", "--dim", "1", "--n", "5", "--r", "2", "--dump", str(path))
    assert code == 0
    table = rows(path.read_text())
    assert list(table[0]) == ["index", "x", "value"]
    assert len(table) == 5 and all(float(r["value"]) > 0 for r in table)


def test_solve_infeasible(capsys):
    code, out, err = run(capsys, "solve", "--dim", "1", "--n", "31", "--alpha", "1", "--beta", "1",
                         "--p", "1.5", "--q", "2", "--lambda", "4")
    assert code == 4
    assert out == ""
    reported = float(err.rsplit("=", 1)[1])
    assert reported == pytest.approx(closed_form_lam1(31), rel=1e-8)


@pytest.mark.parametrize("p, q, branch", [(1.5, 2, "nehari"), (3, 2, "coercive")])
def test_solve_json(capsys, p, q, branch):
    lam = 2 * closed_form_lam1(31)
    code, out, _ = run(capsys, "solve", "--dim", "1", "--n", "31", "--alpha", "1", "--beta", "1",
                       "--p", str(p), "--q", str(q), "--lambda", repr(lam), "--format", "json")
    assert code == 0
    report = json.loads(out)
    assert report["branch"] == branch
    assert report["converged"] is True
    assert report["weak_residual"] < 1e-6
    assert (report["m_lambda"] > 0) == (branch == "nehari")
    assert len(report["u_hat"]) == 31


def test_solve_json_round_trip(capsys):
    from doublephase.energy import EnergyParams
    from doublephase.mesh import build_mesh
    from doublephase.nehari import solve

    lam = 2 * closed_form_lam1(15)
    _, out, _ = run(capsys, "solve", "--dim", "1", "--n", "15", "--alpha", "1", "--beta", "1",
                    "--p", "1.5", "--q", "2", "--lambda", repr(lam), "--format", "json")
    report = json.loads(out)
    res = solve(EnergyParams(1.0, 1.0, 1.5, 2.0, lam), build_mesh(1, 15))
    assert report["m_lambda"] == res.m_lambda
    assert report["weak_residual"] == res.weak_residual
    assert report["u_hat"] == res.u_hat.values.tolist()


def test_solve_csv_columns(capsys):
    lam = 2 * closed_form_lam1(15)
    code, out, _ = run(capsys, "solve", "--dim", "1", "--n", "15", "--alpha", "1", "--beta", "1",
                       "--p", "2", "--q", "4", "--lambda", repr(10 * lam))
    assert code == 0
    (row,) = rows(out)
    assert list(row) == ["branch", "lambda", "threshold", "m_lambda", "constraint_residual",
                         "weak_residual", "iterations", "converged", "sign_changes"]
    assert row["converged"] == "true"


def test_scan_flips_once(capsys):
    lam = closed_form_lam1(31)
    code, out, _ = run(capsys, "scan", "--dim", "1", "--n", "31", "--alpha", "1", "--beta", "0.5",
                       "--p", "1.5", "--q", "2", "--lambda-min", repr(0.3 * lam),
                       "--lambda-max", repr(1.6 * lam), "--lambda-steps", "8")
    assert code == 0
    flags = [r["feasible"] == "true" for r in rows(out)]
    assert sum(a != b for a, b in zip(flags, flags[1:])) == 1
    meta = dict(line[2:].strip().split("=", 1) for line in out.splitlines() if line.startswith("# "))
    assert abs(float(meta["threshold_estimate"]) - 0.5 * lam) <= 1e-3 * lam
    assert meta["monotone"] == "true"


def test_scan_bad_range(capsys):
    code, _, _ = run(capsys, "scan", "--dim", "1", "--n", "3", "--alpha", "1", "--beta", "0.5",
                     "--p", "1.5", "--q", "2", "--lambda-min", "5", "--lambda-max", "1",
                     "--lambda-steps", "3")
    assert code == 2


def test_sweep_endpoints(capsys):
    code, out, _ = run(capsys, "sweep-beta", "--dim", "1", "--n", "3", "--p", "1.5",
                       "--betas", "0.25,0.5,0.75", "--K", "3")
    assert code == 0
    ends = [float(r["endpoint"]) for r in rows(out)]
    assert ends == pytest.approx([2.3431, 4.6863, 7.0294], abs=1e-4)
    block = [line for line in out.splitlines() if line.startswith("# ")]
    assert block[0] == "# linear_spectrum_at_one (beta=1)"
    vals = [float(line[2:].split(",")[1]) for line in block[2:]]
    assert vals == pytest.approx([9.3726, 32.0, 54.627], rel=1e-4)


def test_sweep_rejects_spectrum_for_q_not_2(capsys):
    code, _, _ = run(capsys, "sweep-beta", "--dim", "1", "--n", "3", "--p", "1.5", "--q", "3",
                     "--betas", "0.5", "--K", "2")
    assert code == 2


def test_check_passes(capsys):
    code, out, _ = run(capsys, "check", "--dim", "1", "--n", "15", "--alpha", "1", "--beta", "1",
                       "--p", "1.5", "--q", "2", "--format", "json")
    assert code == 0
    names = {r["check"] for r in json.loads(out) if r["passed"]}
    assert {"homogeneity", "green_identity", "gradient_fd", "weak_residual"} <= names


def test_check_infeasible(capsys):
    code, _, _ = run(capsys, "check", "--dim", "1", "--n", "15", "--alpha", "1", "--beta", "1",
                     "--p", "3", "--q", "2", "--lambda", "1.0")
    assert code == 4


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "doublephase", "eig1", "--dim", "1", "--n", "3",
                          "--r", "2"], capture_output=True, text=True, check=True).stdout
    assert "9.3725830020" in out
