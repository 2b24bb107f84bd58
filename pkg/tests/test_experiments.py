import math
from fractions import Fraction

import numpy as np
import pytest

from qcube import babyfock as bf
from qcube import experiments as ex
from qcube.qcomb import q_integer, z_mean_variance
from qcube.report import Report, emit_report, load_report, table_csv
from qcube.signs import constant_sign_function, rng_for

from conftest import random_eps


def small_config(**kw):
    base = dict(qs=[Fraction(1, 2)], n_grid=[4, 6], k_values=[1, 2], m_max=4, samples=2, seed=3)
    base.update(kw)
    return ex.ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ex.ConfigError):
        small_config(qs=[2])
    with pytest.raises(ex.ConfigError):
        small_config(n_grid=[30])
    with pytest.raises(ex.ConfigError):
        small_config(k_values=[9])
    with pytest.raises(ex.ConfigError):
        small_config(samples=0)
    with pytest.raises(ex.ConfigError):
        small_config(aggregate="mean")
    assert small_config(qs=[0.5]).qs == [Fraction(1, 2)]


def test_default_threads(monkeypatch):
    monkeypatch.setenv(ex.THREADS_ENV, "4")
    assert ex.default_threads() == 4
    monkeypatch.setenv(ex.THREADS_ENV, "junk")
    assert ex.default_threads() == 1
    monkeypatch.delenv(ex.THREADS_ENV)
    assert ex.default_threads() == 1


def test_bosonic_convergence_cells():
    rep = ex.run_convergence(small_config(qs=[1], n_grid=[4, 8], k_values=[1, 2], samples=1))
    cells = {(r["k"], r["m"], r["n"]): r for r in rep.rows}
    for n in (4, 8):
        assert Fraction(cells[1, 4, n]["gap"]) == Fraction(2, n)
        assert Fraction(cells[1, 4, n]["finite"]) == 3 - Fraction(2, n)
        assert cells[1, 3, n]["finite"] == cells[1, 3, n]["limit"] == "0"
        assert cells[2, 1, n]["gap"] == "0"
    assert rep.verify_gaps()
    trend = next(t for t in rep.trends if (t["k"], t["m"]) == (1, 4))
    assert trend["passed"] and float(trend["exponent"]) == pytest.approx(-1)


def test_verify_gaps_detects_tampering():
    rep = ex.run_convergence(small_config())
    assert rep.verify_gaps()
    rep.rows[0]["gap"] = "1/7"
    assert not rep.verify_gaps()


def test_convergence_skips_large_k():
    rep = ex.run_convergence(small_config(n_grid=[2, 4], k_values=[3], m_max=2))
    skipped = [r for r in rep.rows if r["status"] != "ok"]
    assert {r["n"] for r in skipped} == {2}
    assert all(r["status"].startswith("skipped") for r in skipped)


def test_trend_row_rules():
    assert ex.trend_row({}, [8, 12, 16], [0, 0, 0])["passed"]
    assert not ex.trend_row({}, [8, 12, 16], [1, 2, 0.5])["passed"]
    assert not ex.trend_row({}, [8, 12, 16], [1, 0.99, 0.98])["passed"]
    assert ex.trend_row({}, [8, 12, 16], [Fraction(1, 8), Fraction(1, 12), Fraction(1, 16)])["passed"]
    assert ex.decay_fit([2, 4, 8], [1, 0.25, 1 / 16]) == pytest.approx(-2)
    assert ex.decay_fit([2, 4], [0, 1]) is None


def test_joint_word_bosonic():
    rep = ex.run_joint_convergence(small_config(qs=[1], n_grid=[4, 8], samples=1), "1,2,1")
    for r in rep.rows:
        assert Fraction(r["finite"]) == 2 - Fraction(2, r["n"])
        assert r["limit"] == "2" and r["k"] == "X1,X2,X1"


def test_joint_word_matches_direct_moment():
    cfg = small_config(n_grid=[6], samples=1)
    rep = ex.run_joint_convergence(cfg, ["X1", "Y1", "X1"])
    eps = ex.sample_eps(6, Fraction(1, 2), cfg.seed, "conv", 0)
    x1, y1 = bf.build_Xnk(eps, 1), bf.build_Ynk(eps, 1)
    assert Fraction(rep.rows[0]["finite"]) == bf.mixed_vacuum_moment([x1, y1, x1]).exact()
    assert rep.rows[0]["limit"] == "0"


def test_parse_word():
    assert ex.parse_word("1,2,1") == [("X", 1), ("X", 2), ("X", 1)]
    assert ex.parse_word(["y2", 3]) == [("Y", 2), ("X", 3)]
    for bad in ("", "Z1", "1,a"):
        with pytest.raises(ex.ConfigError):
            ex.parse_word(bad)


def test_exact_identity_checks(eps):
    assert ex.check_commutation(eps) == 0
    assert ex.check_hermite_base(eps) == 0
    for k in range(1, min(4, eps.n)):
        assert ex.check_recurrence(eps, k) == 0
    with pytest.raises(ValueError):
        ex.check_recurrence(eps, eps.n)


@pytest.mark.parametrize("n, k", [(6, 1), (8, 2), (7, 3)])
def test_xy_gap_bosonic(n, k):
    eps = constant_sign_function(n, 1)
    assert ex.xy_gap_squared(eps, k, 1) == Fraction(k, n) ** 2 * ex.x_norm_squared(eps, k)
    assert ex.x_norm_squared(eps, k) == Fraction(math.factorial(k) ** 2 * math.comb(n, k), n**k)


def test_xy_gap_p2_agrees_with_singular_values(eps):
    for k in (1, 2):
        exact = math.sqrt(ex.xy_gap_squared(eps, k, Fraction(1, 2)))
        assert ex.xy_difference_norm(eps, k, Fraction(1, 2), 2) == pytest.approx(exact, rel=1e-10)


def test_check_xy_gap_report():
    rep = ex.check_xy_gap(small_config(n_grid=[4, 6, 8], samples=2))
    assert {(t["q"], t["k"]) for t in rep.trends} == {("1/2", 1), ("1/2", 2)}
    assert len(rep.rows) == 2 * 3 * 2
    assert "note" in rep.metadata


def test_khinchine_single_word_is_flat(eps):
    x = bf.AlgebraElement(eps, {0b11: 1.0})
    sv = bf.singular_values(x)
    assert bf.norm_from_eigenvalues(sv, 6) == pytest.approx(bf.norm_from_eigenvalues(sv, 2))
    res = ex.check_khinchine(eps, 2, 4, 10, rng_for(0, "t"))
    assert res.passed and 1 <= res.worst_ratio <= 3
    with pytest.raises(ValueError):
        ex.check_khinchine(eps, 2, 1.5, 1, rng_for(0, "t"))


def test_hypercontractivity_admissibility(eps):
    t0 = 0.5 * math.log(3)
    assert ex.hypercontractive_admissible(2, 4, t0)
    assert not ex.hypercontractive_admissible(2, 4, t0 - 0.01)
    with pytest.raises(ValueError):
        ex.check_hypercontractivity(eps, 2, 4, 0.0, 1, rng_for(0, "h"))
    with pytest.raises(ValueError):
        ex.check_hypercontractivity(eps, 4, 2, 1.0, 1, rng_for(0, "h"))
    res = ex.check_hypercontractivity(eps, 2, 4, t0, 10, rng_for(0, "h"))
    assert res.passed and res.trials == 10


def test_hypercontractivity_scalar_is_tight(eps):
    x = bf.AlgebraElement(eps, {0: 2.0})
    assert bf.lp_norm(bf.ou_semigroup(1.0, x), 4) == pytest.approx(bf.lp_norm(x, 2))


def test_z_numerators_extremes():
    n = 50
    for k in (1, 2, 3):
        assert (ex.sample_z_numerators(k, 1, n, 7, 0) == (k + 1) * (n - k)).all()
    assert (ex.sample_z_numerators(1, -1, n, 7, 0) == 0).all()
    assert (ex.sample_z_numerators(2, -1, n, 7, 0) == n - 2).all()


def test_z_numerators_chunking_is_deterministic():
    a = ex.sample_z_numerators(2, Fraction(1, 2), 40, 1200, 9)
    b = ex.sample_z_numerators(2, Fraction(1, 2), 40, 1200, 9)
    assert np.array_equal(a, b)
    assert np.array_equal(a[:500], ex.sample_z_numerators(2, Fraction(1, 2), 40, 500, 9))


def test_z_numerator_mean():
    k, q, n, samples = 2, Fraction(1, 2), 30, 20000
    nz = ex.sample_z_numerators(k, q, n, samples, 4)
    exact = float((n - k) * q_integer(k + 1, q))
    assert abs(nz.mean() - exact) < 4 * nz.std() / math.sqrt(samples)


def test_clt_bosonic_has_zero_variance():
    r = ex.clt_z_experiment(2, 1, 100, 50, 0)
    assert r["variance"] == pytest.approx(0, abs=1e-20) and r["mean"] == pytest.approx(0.98)
    assert r["mean_ok"] and r["variance_ok"]
    with pytest.raises(ZeroDivisionError):
        ex.clt_z_experiment(1, -1, 100, 10, 0)


def test_clt_target_uses_certified_variance():
    r = ex.clt_z_experiment(1, 0, 400, 2000, 1)
    _, sigma2 = z_mean_variance(1, 0)
    assert r["sigma2"] == "1" and sigma2 == 1 and r["target_variance"] == 1.0
    assert r["variance_rel_error"] < 0.15


def test_reports_reproducible_across_threads():
    for run in (ex.run_convergence, ex.check_xy_gap):
        one = run(small_config(threads=1)).to_json()
        three = run(small_config(threads=3)).to_json()
        assert one == three
    w1 = ex.run_joint_convergence(small_config(threads=1), "1,2,1").to_csv()
    w3 = ex.run_joint_convergence(small_config(threads=3), "1,2,1").to_csv()
    assert w1 == w3


def test_report_serialization(tmp_path):
    empty = Report(kind="x", columns=["a", "b"])
    assert empty.to_csv() == "a,b\n"
    assert empty.trends_csv() == "\n"
    rep = ex.run_convergence(small_config(samples=1))
    path = tmp_path / "r.json"
    emit_report(rep, "json", path)
    assert load_report(path) == rep
    assert Report.from_json(rep.to_json()).to_json() == rep.to_json()
    assert rep.to_csv().splitlines()[0] == ",".join(ex.CONVERGENCE_COLUMNS)
    with pytest.raises(ValueError):
        emit_report(rep, "xml")
    assert table_csv(["a"], [{"a": 1, "extra": 2}]) == "a\n1\n"


def test_decimal_rendering():
    assert ex.dec(Fraction(1, 3)) == "0.333333333333333"
    assert ex.dec(Fraction(2, 3)) == "0.666666666666667"
    assert ex.frac_str(Fraction(4, 2)) == "2" and ex.frac_str(Fraction(-3, 6)) == "-1/2"


@pytest.mark.slow
def test_rms_convergence_trend():
    """Aggregating gaps by RMS over more samples shows the decay robustly."""
    cfg = ex.ExperimentConfig(
        qs=[Fraction(-1, 2), Fraction(0), Fraction(1, 2)], n_grid=[6, 10, 16],
        k_values=[1, 2, 3], m_max=4, samples=30, seed=0, aggregate="rms", threads=4,
    )
    rep = ex.run_convergence(cfg)
    checked = [t for t in rep.trends if t["m"] in (2, 4) and (t["k"] * t["m"]) % 2 == 0 and (t["k"], t["m"]) != (3, 4)]
    assert len(checked) == 3 * 5
    assert all(t["passed"] for t in checked), [t for t in checked if not t["passed"]]


@pytest.mark.slow
def test_rms_xy_gap_trend():
    """With RMS over 30 samples the X - Y gap decreases on a wider n grid."""
    cfg = ex.ExperimentConfig(
        qs=[Fraction(-1, 2), Fraction(0), Fraction(1, 2)], n_grid=[6, 10, 16],
        k_values=[1, 2], samples=30, seed=0, aggregate="rms", threads=4,
    )
    rep = ex.check_xy_gap(cfg)
    assert len(rep.trends) == 6
    assert all(t["passed"] for t in rep.trends), [t for t in rep.trends if not t["passed"]]
