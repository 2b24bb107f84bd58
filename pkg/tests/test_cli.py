import json
from fractions import Fraction

import pytest

from qcube.cli import EXIT_CONFIG, EXIT_OK, EXIT_VIOLATION, main
from qcube.graphs import graph_from_text
from qcube.signs import SignFunction


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sample_eps_round_trips(capsys):
    code, out, _ = run(capsys, "sample-eps", "--n", "5", "--q", "1/2", "--seed", "4")
    assert code == EXIT_OK
    eps = SignFunction.from_text(out)
    assert eps.n == 5 and eps.q == Fraction(1, 2) and eps.seed == 4


def test_build_graph_from_eps_file(capsys, tmp_path):
    _, text, _ = run(capsys, "sample-eps", "--n", "4", "--q", "0")
    path = tmp_path / "eps.txt"
    path.write_text(text)
    code, out, _ = run(capsys, "build-graph", "--eps", str(path), "--k", "2")
    assert code == EXIT_OK
    g = graph_from_text(out)
    assert (g.n, g.k, len(g.edges)) == (4, 2, 48)


def test_moments_json(capsys):
    code, out, _ = run(capsys, "moments", "--n", "6", "--q", "1", "--k", "1", "--mmax", "4", "--format", "json")
    assert code == EXIT_OK
    rows = json.loads(out)["rows"]
    assert rows[4]["exact"] == "8/3" and rows[4]["limit"] == "3"


def test_limit_moments(capsys):
    code, out, _ = run(capsys, "limit-moments", "--q", "0,1", "--mmax", "4")
    assert code == EXIT_OK and out.startswith("m,q,moment_numerator,moment_denominator")
    code, out, _ = run(capsys, "limit-moments", "--q", "q", "--mmax", "6")
    assert code == EXIT_OK and "6,5,6,3,1" in out.splitlines()


def test_converge_exit_codes(capsys, tmp_path):
    code, _, _ = run(capsys, "converge", "--n", "4,8", "--q", "1", "--k", "1", "--mmax", "4", "--samples", "1")
    assert code == EXIT_OK
    out = tmp_path / "trend.csv"
    code, _, _ = run(capsys, "converge", "--n", "4", "--q", "0", "--k", "1", "--mmax", "4", "--trends", "--out", str(out))
    assert code == EXIT_VIOLATION
    assert out.read_text().startswith("q,k,m,n_values")


def test_converge_joint(capsys):
    code, out, _ = run(capsys, "converge-joint", "--word", "1,2,1", "--n", "4,8", "--q", "1", "--samples", "1")
    assert code == EXIT_OK and "X1,X2,X1" in out


def test_recurrence_and_suites(capsys):
    assert run(capsys, "recurrence-check", "--n", "5", "--k", "1,2,3", "--q", "1/2")[0] == EXIT_OK
    assert run(capsys, "khinchine", "--n", "5", "--k", "2", "--p", "4", "--samples", "5")[0] == EXIT_OK
    assert run(capsys, "hypercontract", "--n", "4", "--samples", "5")[0] == EXIT_OK
    code, out, _ = run(capsys, "xy-gap", "--n", "4,6,8", "--k", "1", "--q", "1", "--samples", "1", "--trends")
    assert code == EXIT_OK and "True" in out
    code, out, _ = run(capsys, "clt-z", "--n", "200", "--k", "1", "--q", "0", "--samples", "2000")
    assert code in (EXIT_OK, EXIT_VIOLATION) and "variance_rel_error" in out


def test_spectrum(capsys):
    code, out, _ = run(capsys, "spectrum", "--n", "4", "--q", "1", "--bins", "5")
    assert code == EXIT_OK
    counts = [int(line.split(",")[2]) for line in out.splitlines()[1:]]
    assert sum(counts) == 16


@pytest.mark.parametrize("argv", [
    ["nope"],
    ["converge", "--n", "x"],
    ["converge", "--q", "3"],
    ["moments", "--n", "4,5"],
    ["moments", "--q", "q"],
    ["hypercontract", "--t", "0"],
    ["converge-joint", "--word", "Z1"],
    ["moments", "--n", "3", "--k", "4"],
    ["clt-z", "--q", "-1", "--k", "1"],
])
def test_configuration_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == EXIT_CONFIG


def test_help_exits_ok(capsys):
    assert run(capsys, "--help")[0] == EXIT_OK
