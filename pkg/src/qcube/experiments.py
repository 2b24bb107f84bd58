"""Convergence sweeps, exact identity checks, inequality suites and Z-statistic experiments.

All experiment cells draw their sign functions from streams keyed by
``(seed, cell coordinates)`` and are reassembled in key order, so a report
does not depend on how many worker threads computed it.
"""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import babyfock as bf
from .qcomb import limit_moment, q_integer, z_mean_variance
from .report import Report
from .signs import SignFunction, SignLaw, as_rational_q, format_q, rng_for, sample_sign_function

THREADS_ENV = "QCUBE_THREADS"
DECAY_EXPONENT_MAX = -0.3
RELATIVE_TOL = 1e-9

NOTE_AE = (
    "almost-everywhere statements are reported per sign sample and as medians over "
    "samples; no single sign function is selected"
)


class ConfigError(ValueError):
    pass


class PropertyViolation(AssertionError):
    pass


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class ExperimentConfig:
    qs: list = field(default_factory=lambda: [Fraction(0)])
    n_grid: list = field(default_factory=lambda: [8, 12, 16])
    k_values: list = field(default_factory=lambda: [1])
    m_max: int = 4
    samples: int = 3
    seed: int = 0
    eigen_cap: int = bf.DEFAULT_EIGEN_CAP
    matrix_free_cap: int = bf.DEFAULT_MATRIX_FREE_CAP
    k_cap: int = bf.DEFAULT_K_CAP
    threads: int = 1
    aggregate: str = "median"

    def __post_init__(self):
        self.qs = [as_rational_q(q) for q in self.qs]
        self.n_grid = sorted(int(n) for n in self.n_grid)
        self.k_values = sorted(int(k) for k in self.k_values)
        if not self.qs or not self.n_grid or not self.k_values:
            raise ConfigError("q, n and k grids must be nonempty")
        if any(not -1 <= q <= 1 for q in self.qs):
            raise ConfigError("q values must lie in [-1, 1]")
        if self.n_grid[0] < 1 or self.n_grid[-1] > self.matrix_free_cap:
            raise ConfigError(f"n grid must lie in 1..{self.matrix_free_cap}")
        if self.k_values[0] < 1 or self.k_values[-1] > self.k_cap:
            raise ConfigError(f"k values must lie in 1..{self.k_cap}")
        if self.m_max < 0 or self.samples < 1:
            raise ConfigError("m_max must be >= 0 and samples >= 1")
        if self.m_max * self.k_values[-1] > 64:
            raise ConfigError("m_max * k_max above 64 is not supported")
        self.threads = max(1, int(self.threads))
        if self.aggregate not in AGGREGATES:
            raise ConfigError(f"aggregate must be one of {sorted(AGGREGATES)}")


def _map(fn, keys, threads):
    """Evaluate ``fn`` on each key; results come back in key order."""
    if threads <= 1:
        return [fn(key) for key in keys]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, keys))


def sample_eps(n: int, q, seed: int, *coords) -> SignFunction:
    return sample_sign_function(n, SignLaw(q, seed), format_q(q), *coords)


def frac_str(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def dec(x) -> str:
    return bf.render_decimal(_frac_decimal(x) if isinstance(x, Fraction) else x)


def _frac_decimal(x: Fraction):
    from decimal import Decimal, localcontext

    with localcontext() as ctx:
        ctx.prec = 40
        return Decimal(x.numerator) / Decimal(x.denominator)


# -- convergence --------------------------------------------------------------


def _rms(xs):
    return math.sqrt(sum(float(x) ** 2 for x in xs) / len(xs))


AGGREGATES = {"median": statistics.median, "rms": _rms}


def decay_fit(ns, gaps):
    """Log-log slope of the positive gaps against n (None if fewer than two)."""
    pts = [(math.log(n), math.log(float(g))) for n, g in zip(ns, gaps) if g > 0]
    if len(pts) < 2:
        return None
    xs, ys = zip(*pts)
    return float(np.polyfit(xs, ys, 1)[0])


def trend_row(key: dict, ns, medians) -> dict:
    monotone = all(b <= a for a, b in zip(medians, medians[1:]))
    exponent = decay_fit(ns, medians)
    decays = exponent is None and medians[-1] == 0 or (
        exponent is not None and exponent <= DECAY_EXPONENT_MAX
    )
    row = dict(key)
    row.update(
        n_values=" ".join(str(n) for n in ns),
        aggregated_gaps=" ".join(dec(g) for g in medians),
        monotone=monotone,
        exponent="none" if exponent is None else f"{exponent:.6f}",
        passed=bool(monotone and decays),
    )
    return row


CONVERGENCE_COLUMNS = [
    "q", "k", "m", "n", "sample", "numerator", "h", "scale",
    "finite", "finite_decimal", "limit", "limit_decimal", "gap", "gap_decimal", "status",
]


class ConvergenceReport(Report):
    def verify_gaps(self) -> bool:
        """Recompute |finite - limit| from the stored exact fields."""
        for row in self.rows:
            if row["status"] != "ok":
                continue
            gap = abs(Fraction(row["finite"]) - Fraction(row["limit"]))
            if gap != Fraction(row["gap"]):
                return False
        return True

    @property
    def passed(self) -> bool:
        return all(t["passed"] for t in self.trends)


def _cell_row(q, label, m, n, sample, moment: bf.Moment, limit):
    finite = moment.exact()
    gap = abs(finite - limit)
    return dict(
        q=format_q(q), k=label, m=m, n=n, sample=sample,
        numerator=str(moment.numerator), h=moment.h, scale=frac_str(moment.scale),
        finite=frac_str(finite), finite_decimal=moment.decimal(),
        limit=frac_str(limit), limit_decimal=dec(limit),
        gap=frac_str(gap), gap_decimal=dec(gap), status="ok",
    )


def _skip_row(q, label, m, n, sample, reason):
    row = {c: "" for c in CONVERGENCE_COLUMNS}
    row.update(q=format_q(q), k=label, m=m, n=n, sample=sample, status=f"skipped: {reason}")
    return row


def run_convergence(config: ExperimentConfig) -> ConvergenceReport:
    """tau(X_{n,k}^m) against tau(H_k(G_q)^m) over the whole grid."""
    keys = [(q, n, s) for q in config.qs for n in config.n_grid for s in range(config.samples)]

    def cell(key):
        q, n, s = key
        eps = sample_eps(n, q, config.seed, "conv", s)
        rows = []
        for k in config.k_values:
            if k > n:
                rows += [_skip_row(q, k, m, n, s, "k > n") for m in range(1, config.m_max + 1)]
                continue
            moments = bf.power_moments(bf.build_Xnk(eps, k), config.m_max)
            for m in range(1, config.m_max + 1):
                rows.append(_cell_row(q, k, m, n, s, moments[m], limit_moment([k] * m, q)))
        return rows

    rows = [r for chunk in _map(cell, keys, config.threads) for r in chunk]
    rows.sort(key=lambda r: (Fraction(r["q"]), r["k"], r["m"], r["n"], r["sample"]))
    report = ConvergenceReport(
        kind="convergence", columns=CONVERGENCE_COLUMNS, rows=rows,
        metadata=dict(seed=config.seed, samples=config.samples, aggregate=config.aggregate, note=NOTE_AE),
    )
    report.trends = _trends(rows, config, lambda r: (r["q"], r["k"], r["m"]))
    return report


def _trends(rows, config, group):
    groups: dict = {}
    for r in rows:
        if r["status"] == "ok":
            groups.setdefault(group(r), {}).setdefault(r["n"], []).append(Fraction(r["gap"]))
    trends = []
    for key, by_n in groups.items():
        ns = sorted(by_n)
        agg = AGGREGATES[config.aggregate]
        medians = [agg(by_n[n]) for n in ns]
        q, label, m = key
        trends.append(trend_row(dict(q=q, k=label, m=m), ns, medians))
    return trends


def parse_word(word):
    """``"1,2,1"`` or ``["X1", "Y2"]`` -> list of (kind, degree)."""
    if isinstance(word, str):
        word = [w for w in word.replace(" ", "").split(",") if w]
    out = []
    for w in word:
        if isinstance(w, int) or (isinstance(w, str) and w.isdigit()):
            out.append(("X", int(w)))
        elif isinstance(w, str) and w[:1].upper() in "XY" and w[1:].isdigit():
            out.append((w[0].upper(), int(w[1:])))
        else:
            raise ConfigError(f"bad word entry {w!r}")
    if not out:
        raise ConfigError("empty word")
    return out


def run_joint_convergence(config: ExperimentConfig, word) -> ConvergenceReport:
    """Mixed vacuum moment of a word of X/Y operators against the H-word limit."""
    letters = parse_word(word)
    label = ",".join(f"{kind}{d}" for kind, d in letters)
    degrees = [d for _, d in letters]
    if max(degrees) > config.k_cap or min(degrees) < 1:
        raise ConfigError(f"word degrees must lie in 1..{config.k_cap}")
    keys = [(q, n, s) for q in config.qs for n in config.n_grid for s in range(config.samples)]

    def cell(key):
        q, n, s = key
        if any(d > (n if kind == "X" else n - 1) for kind, d in letters):
            return [_skip_row(q, label, len(letters), n, s, "degree too large for n")]
        eps = sample_eps(n, q, config.seed, "conv", s)
        ops = {}
        for kind, d in letters:
            if (kind, d) not in ops:
                ops[kind, d] = bf.build_Xnk(eps, d) if kind == "X" else bf.build_Ynk(eps, d, q)
        moment = bf.mixed_vacuum_moment([ops[x] for x in letters])
        return [_cell_row(q, label, len(letters), n, s, moment, limit_moment(degrees, q))]

    rows = [r for chunk in _map(cell, keys, config.threads) for r in chunk]
    rows.sort(key=lambda r: (Fraction(r["q"]), r["n"], r["sample"]))
    report = ConvergenceReport(
        kind="joint-convergence", columns=CONVERGENCE_COLUMNS, rows=rows,
        metadata=dict(
            seed=config.seed, samples=config.samples, aggregate=config.aggregate,
            word=label, note=NOTE_AE,
        ),
    )
    report.trends = _trends(rows, config, lambda r: (r["q"], r["k"], r["m"]))
    return report


# -- exact identities ---------------------------------------------------------


def _basis(n):
    return np.eye(1 << n, dtype=np.int64)


def check_commutation(eps: SignFunction) -> int:
    """Max deviation of gamma_i gamma_j - eps(i,j) gamma_j gamma_i - 2 delta_ij I on all basis vectors."""
    E = _basis(eps.n)
    worst = 0
    for i in range(1, eps.n + 1):
        gi = bf.gamma_apply_array(eps, i, E)
        for j in range(1, eps.n + 1):
            gj = bf.gamma_apply_array(eps, j, E)
            lhs = bf.gamma_apply_array(eps, i, gj)
            rhs = eps(i, j) * bf.gamma_apply_array(eps, j, gi) + 2 * (i == j) * E
            worst = max(worst, int(np.abs(lhs - rhs).max()))
    return worst


def check_recurrence(eps: SignFunction, k: int) -> int:
    """Max deviation of the q-free recurrence on all basis vectors (0 expected).

    sum^(k+1) = sum^(k) sum^(1) - sum^(k-1) n Z(.) word, i.e. the integer
    form of X_{n,k+1} = X_{n,k} X_{n,1} - [k]_q Y_{n,k-1}.
    """
    if not 1 <= k <= eps.n - 1:
        raise ValueError(f"need 1 <= k <= n - 1, got k={k}, n={eps.n}")
    E = _basis(eps.n)
    x1 = bf.build_Xnk(eps, 1)
    xk = bf.build_Xnk(eps, k)
    xk1 = bf.build_Xnk(eps, k + 1)
    zk = bf.WordSumOperator(eps, bf.z_weighted_terms(eps, k - 1), h=k + 1, k=k - 1)
    dev = xk1.apply_array(E) - (xk.apply_array(x1.apply_array(E)) - zk.apply_array(E))
    return int(np.abs(dev).max())


def check_hermite_base(eps: SignFunction) -> int:
    """Max deviation of X_{n,2} = X_{n,1}^2 - I in integer form."""
    n = eps.n
    E = _basis(n)
    x1 = bf.build_Xnk(eps, 1)
    dev = bf.build_Xnk(eps, 2).apply_array(E) - (x1.apply_array(x1.apply_array(E)) - n * E)
    return int(np.abs(dev).max())


# -- X - Y gap ----------------------------------------------------------------


def xy_gap_squared(eps: SignFunction, k: int, q) -> Fraction:
    """``tau((X_{n,k} - Y_{n,k})^2)`` exactly."""
    n = eps.n
    q = Fraction(q)
    bracket = q_integer(k + 1, q)
    if bracket == 0:
        raise ZeroDivisionError(f"[{k + 1}]_q vanishes at q={q}")
    one = bf.vacuum(n).coeffs
    vx = bf.build_Xnk(eps, k).apply_array(one).astype(object)
    vy = bf.build_Ynk(eps, k, q_free=True).apply_array(one).astype(object)
    a, b = bracket.numerator, bracket.denominator
    diff = a * n * vx - b * vy
    return Fraction(int(np.dot(diff, diff)), a * a * n ** (k + 2))


def x_norm_squared(eps: SignFunction, k: int) -> Fraction:
    one = bf.vacuum(eps.n).coeffs
    vx = bf.build_Xnk(eps, k).apply_array(one)
    return Fraction(bf._exact_dot(vx, vx), eps.n**k)


def xy_difference_norm(eps: SignFunction, k: int, q, p: float, cap: int = bf.DEFAULT_EIGEN_CAP) -> float:
    """``||X_{n,k} - Y_{n,k}||_p`` from singular values (any p >= 1)."""
    if eps.n > cap:
        raise ValueError(f"n={eps.n} exceeds the dense eigen cap {cap}")
    D = bf.build_Xnk(eps, k).value_matrix() - bf.build_Ynk(eps, k, q).value_matrix()
    return bf.norm_from_eigenvalues(np.linalg.svd(D, compute_uv=False), p)


XY_COLUMNS = ["q", "k", "n", "sample", "p", "norm_sq", "norm", "norm_times_sqrt_n"]


def check_xy_gap(config: ExperimentConfig, p: float = 2) -> Report:
    """||X_{n,k} - Y_{n,k}||_p per sample, with the aggregated trend over n."""
    keys = [
        (q, k, n, s)
        for q in config.qs for k in config.k_values for n in config.n_grid
        for s in range(config.samples) if k <= n - 1
    ]

    def cell(key):
        q, k, n, s = key
        eps = sample_eps(n, q, config.seed, "xy", s)
        if p == 2:
            sq = xy_gap_squared(eps, k, q)
            norm = math.sqrt(sq)
            sq_s = frac_str(sq)
        else:
            norm = xy_difference_norm(eps, k, q, p, config.eigen_cap)
            sq_s = ""
        return dict(
            q=format_q(q), k=k, n=n, sample=s, p=p, norm_sq=sq_s,
            norm=f"{norm:.15g}", norm_times_sqrt_n=f"{norm * math.sqrt(n):.15g}",
        )

    rows = _map(cell, keys, config.threads)
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["q"], r["k"]), {}).setdefault(r["n"], []).append(float(r["norm"]))
    trends = []
    for (q, k), by_n in groups.items():
        ns = sorted(by_n)
        med = [AGGREGATES[config.aggregate](by_n[n]) for n in ns]
        decreasing = all(b < a for a, b in zip(med, med[1:]))
        trends.append(dict(
            q=q, k=k, n_values=" ".join(map(str, ns)),
            aggregated_norms=" ".join(f"{x:.15g}" for x in med),
            decreasing=decreasing, passed=decreasing,
        ))
    return Report(
        kind="xy-gap", columns=XY_COLUMNS, rows=rows, trends=trends,
        metadata=dict(seed=config.seed, samples=config.samples, p=p, aggregate=config.aggregate, note=NOTE_AE),
    )


# -- inequality suites --------------------------------------------------------


@dataclass
class SuiteResult:
    passed: bool
    trials: int
    worst_ratio: float
    violations: list = field(default_factory=list)


def check_khinchine(eps: SignFunction, k: int, p: float, trials: int, rng: np.random.Generator) -> SuiteResult:
    """||X||_2 <= ||X||_p <= (p-1)^(k/2) ||X||_2 on random degree-k elements."""
    if p < 2:
        raise ValueError("the Khinchine suite needs p >= 2")
    bound = (p - 1) ** (k / 2)
    worst = 0.0
    bad = []
    for t in range(trials):
        x = bf.random_homogeneous_element(eps, k, rng)
        sv = bf.singular_values(x, cap=max(eps.n, bf.DEFAULT_EIGEN_CAP))
        n2 = bf.norm_from_eigenvalues(sv, 2)
        npp = bf.norm_from_eigenvalues(sv, p)
        ratio = npp / n2
        worst = max(worst, ratio)
        if ratio < 1 - RELATIVE_TOL or ratio > bound * (1 + RELATIVE_TOL):
            bad.append((t, ratio))
    return SuiteResult(not bad, trials, worst, bad)


def hypercontractive_admissible(p: float, r: float, t: float) -> bool:
    return math.exp(-2 * t) <= (p - 1) / (r - 1) * (1 + 1e-12)


def check_hypercontractivity(
    eps: SignFunction, p: float, r: float, t: float, trials: int, rng: np.random.Generator
) -> SuiteResult:
    """||P_t X||_r <= ||X||_p on random elements, for admissible t only."""
    if not 1 < p < r:
        raise ValueError("need 1 < p < r")
    if t < 0 or not hypercontractive_admissible(p, r, t):
        raise ValueError(f"exp(-2t) > (p-1)/(r-1) at t={t}; only the contractive range is checked")
    cap = max(eps.n, bf.DEFAULT_EIGEN_CAP)
    worst = 0.0
    bad = []
    for trial in range(trials):
        x = bf.random_element(eps, rng)
        lhs = bf.lp_norm(bf.ou_semigroup(t, x), r, cap)
        rhs = bf.lp_norm(x, p, cap)
        ratio = lhs / rhs
        worst = max(worst, ratio)
        if ratio > 1 + RELATIVE_TOL:
            bad.append((trial, ratio))
    return SuiteResult(not bad, trials, worst, bad)


# -- Z statistic CLT ----------------------------------------------------------


def sample_z_numerators(k: int, q, n: int, samples: int, seed: int, chunk: int = 500) -> np.ndarray:
    """``n * Z(1..k)`` for independent sign draws.

    Z only reads eps(i, i_j) for i outside the tuple; those (n - k) * k
    entries are distinct pairs and so are drawn i.i.d. directly.
    """
    law = SignLaw(q, seed)
    out = np.empty(samples, dtype=np.int64)
    for start in range(0, samples, chunk):
        size = min(chunk, samples - start)
        rng = rng_for(seed, "clt", k, format_q(q), n, start)
        signs = law.draw(rng, (size, n - k, k))
        suffix = np.cumprod(signs[:, :, ::-1], axis=2, dtype=np.int64)
        out[start:start + size] = suffix.sum(axis=(1, 2)) + (n - k)
    return out


def clt_z_experiment(k: int, q, n: int, samples: int, seed: int) -> dict:
    """Empirical law of sqrt(n) (Z / [k+1]_q - 1) against N(0, sigma^2 / [k+1]_q^2)."""
    q = Fraction(q)
    bracket = q_integer(k + 1, q)
    if bracket == 0:
        raise ZeroDivisionError(f"[{k + 1}]_q vanishes at q={q}")
    nz = sample_z_numerators(k, q, n, samples, seed)
    ratio = nz / n / float(bracket)
    stat = math.sqrt(n) * (ratio - 1)
    mean = float(ratio.mean())
    se = float(ratio.std(ddof=1) / math.sqrt(samples))
    # from the integer numerators, so a degenerate law gives exactly 0
    var = float(nz.astype(float).var(ddof=1)) / (n * float(bracket) ** 2)
    _, sigma2 = z_mean_variance(k, q)
    target = float(sigma2 / bracket**2)
    exact_mean = (n - k) / n
    centered = stat - stat.mean()
    m2 = float(np.mean(centered**2))
    kurt = float(np.mean(centered**4) / m2**2) if m2 > 0 else None
    rel = abs(var - target) / target if target > 0 else (0.0 if var == 0 else math.inf)
    return dict(
        k=k, q=format_q(q), n=n, samples=samples, seed=seed,
        mean=mean, standard_error=se, exact_mean=exact_mean,
        mean_gap_in_se=abs(mean - exact_mean) / se if se > 0 else 0.0,
        mean_gap_to_one_in_se=abs(mean - 1) / se if se > 0 else None,
        variance=var, sigma2=frac_str(sigma2), target_variance=target,
        variance_rel_error=rel, standardized_fourth_moment=kurt,
        mean_ok=se == 0 and mean == exact_mean or abs(mean - exact_mean) <= 3 * se,
        variance_ok=rel <= 0.05,
    )
