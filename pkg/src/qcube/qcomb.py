"""Exact limit-law combinatorics for the q-Gaussian variable.

Everything here is exact: numbers are ``Fraction`` and symbolic results are
:class:`QPolynomial` (integer polynomials in q).  Functions that take ``q``
accept either a rational or the symbolic generator :data:`Q`.
"""

from __future__ import annotations

import csv
import io
import itertools
from fractions import Fraction
from functools import lru_cache
from math import factorial, prod


class QPolynomial:
    """Integer-coefficient polynomial in q, coefficients stored low degree first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        c = [int(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs = tuple(c)

    @classmethod
    def _lift(cls, other):
        if isinstance(other, QPolynomial):
            return other
        if isinstance(other, int) or (isinstance(other, Fraction) and other.denominator == 1):
            return cls((int(other),))
        return NotImplemented

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return QPolynomial([x + (b[i] if i < len(b) else 0) for i, x in enumerate(a)])

    __radd__ = __add__

    def __neg__(self):
        return QPolynomial([-x for x in self.coeffs])

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        if not self.coeffs or not other.coeffs:
            return QPolynomial()
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(other.coeffs):
                    out[i + j] += x * y
        return QPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = QPolynomial((1,))
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return False
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __call__(self, q):
        q = Fraction(q)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * q + c
        return acc

    def __repr__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for d, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if d == 0:
                terms.append(str(c))
            else:
                mon = "q" if d == 1 else f"q^{d}"
                terms.append(mon if c == 1 else f"{c}*{mon}")
        return " + ".join(terms)


Q = QPolynomial((0, 1))


def _coerce_q(q):
    return q if isinstance(q, QPolynomial) else Fraction(q)


def q_integer(k: int, q):
    """``[k]_q = 1 + q + ... + q^(k-1)``, always as a sum so that q = 1 is regular."""
    if k < 0:
        raise ValueError("k must be non-negative")
    q = _coerce_q(q)
    acc = q * 0
    term = q * 0 + 1
    for _ in range(k):
        acc = acc + term
        term = term * q
    return acc


def q_factorial(k: int, q):
    q = _coerce_q(q)
    acc = q * 0 + 1
    for j in range(1, k + 1):
        acc = acc * q_integer(j, q)
    return acc


class PolynomialInX:
    """Polynomial in one variable x whose coefficients live in an exact ring."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = list(coeffs)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        self.coeffs = c

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __add__(self, other):
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        return PolynomialInX([x + b[i] if i < len(b) else x for i, x in enumerate(a)])

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return PolynomialInX([c * x for x in self.coeffs])

    def shift(self):
        """Multiply by x."""
        return PolynomialInX([0 * self.coeffs[0]] + self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, PolynomialInX):
            return self.scale(other)
        zero = 0 * self.coeffs[0]
        out = [zero] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            for j, y in enumerate(other.coeffs):
                out[i + j] = out[i + j] + x * y
        return PolynomialInX(out)

    def __eq__(self, other):
        return isinstance(other, PolynomialInX) and self.coeffs == other.coeffs

    def __repr__(self):
        return f"PolynomialInX({self.coeffs!r})"


def hermite_polys(k: int, q) -> list[PolynomialInX]:
    """``[H_0, ..., H_k]`` from ``x H_j = H_{j+1} + [j]_q H_{j-1}``."""
    q = _coerce_q(q)
    one = q * 0 + 1
    polys = [PolynomialInX([one])]
    if k >= 1:
        polys.append(PolynomialInX([one * 0, one]))
    for j in range(1, k):
        polys.append(polys[j].shift() - polys[j - 1].scale(q_integer(j, q)))
    return polys[: k + 1]


def hermite_coeffs(k: int, q) -> PolynomialInX:
    return hermite_polys(k, q)[k]


def pair_partitions(size: int):
    """Yield all pair partitions of ``{1..size}`` as tuples of (a, b) with a < b.

    The smallest unpaired point is matched with each remaining point in turn.
    """
    if size < 0 or size % 2:
        raise ValueError("pair partitions need an even, non-negative size")

    def rec(points):
        if not points:
            yield ()
            return
        a, rest = points[0], points[1:]
        for idx, b in enumerate(rest):
            for tail in rec(rest[:idx] + rest[idx + 1:]):
                yield ((a, b),) + tail

    yield from rec(tuple(range(1, size + 1)))


def crossing_number(pp) -> int:
    return sum(
        1
        for (a, b), (c, d) in itertools.combinations(pp, 2)
        if a < c < b < d or c < a < d < b
    )


@lru_cache(maxsize=None)
def crossing_histogram(m: int) -> tuple:
    """``hist[c]`` = number of pair partitions of {1..m} with c crossings."""
    if m % 2:
        return ()
    hist = {}
    for pp in pair_partitions(m):
        c = crossing_number(pp)
        hist[c] = hist.get(c, 0) + 1
    return tuple(hist.get(c, 0) for c in range(max(hist) + 1))


def q_gaussian_moment(m: int, q):
    """``tau(G_q^m)``: 0 for odd m, else the sum of q^crossings over pair partitions."""
    if m < 0:
        raise ValueError("m must be non-negative")
    if isinstance(q, QPolynomial):
        return QPolynomial(crossing_histogram(m)) if m % 2 == 0 else QPolynomial()
    q = Fraction(q)
    if m % 2:
        return Fraction(0)
    return sum((c * q**d for d, c in enumerate(crossing_histogram(m))), Fraction(0))


def jacobi_moment(m: int, q):
    """Moments from the truncated Jacobi matrix with squared off-diagonals ``[h]_q``.

    Independent of the pair-partition route: ``(T^m)_{00}`` where T steps up
    with weight 1 and down from height h with weight ``[h]_q``; heights above
    m/2 can never return to 0 and are truncated.
    """
    q = _coerce_q(q)
    zero = q * 0
    top = m // 2 + 1
    down = [q_integer(h, q) for h in range(top + 1)]
    v = [zero] * (top + 1)
    v[0] = zero + 1
    for _ in range(m):
        w = [zero] * (top + 1)
        for h, x in enumerate(v):
            if x == 0:
                continue
            if h + 1 <= top:
                w[h + 1] = w[h + 1] + x
            if h >= 1:
                w[h - 1] = w[h - 1] + x * down[h]
        v = w
    return v[0]


def jacobi_moment_float(m: int, q: float) -> float:
    """Same oracle through an explicit float tridiagonal matrix with sqrt([h]_q)."""
    import numpy as np

    size = m // 2 + 2
    off = [float(q_integer(h, Fraction(q))) ** 0.5 for h in range(1, size)]
    J = np.diag(off, 1) + np.diag(off, -1)
    return float(np.linalg.matrix_power(J, m)[0, 0])


def moment_functional(poly: PolynomialInX, q):
    """Apply ``P -> tau(P(G_q))`` coefficientwise."""
    q = _coerce_q(q)
    acc = q * 0
    for d, c in enumerate(poly.coeffs):
        if d % 2 == 0 and c != 0:
            acc = acc + c * q_gaussian_moment(d, q)
    return acc


def limit_moment(degrees, q):
    """``tau(H_{k_1}(G_q) ... H_{k_r}(G_q))``; the factors commute."""
    degrees = list(degrees)
    if any(d < 0 for d in degrees):
        raise ValueError("degrees must be non-negative")
    q = _coerce_q(q)
    if sum(degrees) % 2:
        return q * 0
    hs = hermite_polys(max(degrees, default=0), q)
    poly = PolynomialInX([q * 0 + 1])
    for d in degrees:
        poly = poly * hs[d]
    return moment_functional(poly, q)


def z_mean_variance(k: int, q):
    """Mean and variance of one summand W of the Z statistic.

    ``W = sum_{j=1}^{k+1} T_j`` with ``T_j`` the suffix products of k i.i.d.
    signs of mean q, so ``E[T_j T_j'] = q^|j-j'|``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    q = _coerce_q(q)
    mean = q_integer(k + 1, q)
    second = (k + 1) + sum((2 * (k + 1 - d) * q**d for d in range(1, k + 1)), q * 0)
    return mean, second - mean * mean


def z_variance_as_printed(k: int, q):
    """The variance expression with a j-independent exponent q^k in every term.

    Kept only to be compared against :func:`z_exhaustive`; it agrees with
    the exhaustive value for k = 1 or q in {0, 1} and nowhere else in general.
    """
    q = _coerce_q(q)
    mean = q_integer(k + 1, q)
    second = (k + 1) + sum((2 * (k + 1 - j) * q**k for j in range(1, k + 1)), q * 0)
    return second - mean * mean


def z_exhaustive(k: int, q):
    """Brute-force mean/variance of W over all 2^k sign assignments."""
    q = Fraction(q)
    p_plus, p_minus = (1 + q) / 2, (1 - q) / 2
    e1 = e2 = Fraction(0)
    for signs in itertools.product((1, -1), repeat=k):
        weight = prod(p_plus if s > 0 else p_minus for s in signs)
        w = sum(prod(signs[j:]) for j in range(k + 1))
        e1 += weight * w
        e2 += weight * w * w
    return e1, e2 - e1 * e1


def double_factorial(m: int) -> int:
    return prod(range(m, 0, -2)) if m > 0 else 1


def catalan(j: int) -> int:
    return factorial(2 * j) // (factorial(j + 1) * factorial(j))


def moment_table_csv(ms, qs) -> str:
    """CSV rows ``m,q,moment_numerator,moment_denominator``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "q", "moment_numerator", "moment_denominator"])
    for q in qs:
        for m in ms:
            v = q_gaussian_moment(m, q)
            w.writerow([m, str(Fraction(q)), v.numerator, v.denominator])
    return buf.getvalue()


def symbolic_moment_table_csv(ms) -> str:
    """CSV rows ``m,c0,c1,...`` of integer coefficients in q."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    rows = [(m, q_gaussian_moment(m, Q).coeffs) for m in ms]
    width = max((len(c) for _, c in rows), default=0)
    w.writerow(["m"] + [f"c{d}" for d in range(width)])
    for m, c in rows:
        w.writerow([m] + list(c) + [0] * (width - len(c)))
    return buf.getvalue()
