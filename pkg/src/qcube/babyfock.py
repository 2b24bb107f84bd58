"""The 2^n-dimensional baby Fock space of a sign function and its operators.

Vectors are coefficient arrays indexed by subset bitmasks.  Operators keep an
*integer action* together with a normalization tag ``h`` and a rational
prefactor ``scale``; the operator they stand for is

    scale * (integer action) / n ** (h / 2)

so that vacuum moments stay exact integers even when n^(k/2) is irrational.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from ._bits import all_vertices, indices_of, mask_of
from .qcomb import q_integer
from .signs import SignFunction, vertex_sign, vertex_sign_table

INT_LIMIT = 2**62

DEFAULT_EIGEN_CAP = 12
DEFAULT_MATRIX_FREE_CAP = 20
DEFAULT_K_CAP = 4


# -- vectors ------------------------------------------------------------------


def _is_exact(a: np.ndarray) -> bool:
    return a.dtype.kind in "iuO"


@dataclass(frozen=True, eq=False)
class FockVector:
    """Coefficients of a vector in H, indexed by subset bitmask."""

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.shape != (1 << self.n,):
            raise ValueError(f"a FockVector for n={self.n} needs {1 << self.n} coefficients")
        object.__setattr__(self, "coeffs", c)

    @property
    def exact(self) -> bool:
        return _is_exact(self.coeffs)

    def __getitem__(self, mask: int):
        return self.coeffs[mask]

    def __add__(self, other: "FockVector") -> "FockVector":
        _same_n(self, other)
        return FockVector(self.n, self.coeffs + other.coeffs)

    def __sub__(self, other: "FockVector") -> "FockVector":
        _same_n(self, other)
        return FockVector(self.n, self.coeffs - other.coeffs)

    def __mul__(self, c) -> "FockVector":
        if isinstance(c, Fraction) and c.denominator != 1:
            return FockVector(self.n, self.coeffs.astype(object) * c)
        return FockVector(self.n, self.coeffs * c)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (
            isinstance(other, FockVector)
            and self.n == other.n
            and bool(np.all(self.coeffs == other.coeffs))
        )

    def inner(self, other: "FockVector"):
        """Real inner product; exact when both sides are exact."""
        _same_n(self, other)
        if self.exact and other.exact:
            return _exact_dot(self.coeffs, other.coeffs)
        return float(np.dot(self.coeffs.astype(float), other.coeffs.astype(float)))

    def to_text(self) -> str:
        lines = []
        for mask, value in enumerate(self.coeffs):
            if value != 0:
                lines.append(f"{mask} {_format_scalar(value)}")
        return f"# n={self.n}\n" + "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "FockVector":
        lines = text.strip().splitlines()
        if not lines or not lines[0].startswith("# n="):
            raise ValueError("FockVector text must start with '# n=<n>'")
        n = int(lines[0][4:])
        values = {}
        for lineno, line in enumerate(lines[1:], start=2):
            try:
                mask_s, value_s = line.split()
                mask = int(mask_s)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: expected 'bitmask value'") from exc
            if not 0 <= mask < 1 << n:
                raise ValueError(f"line {lineno}: bitmask {mask} out of range")
            values[mask] = _parse_scalar(value_s)
        kinds = {type(v) for v in values.values()}
        if kinds <= {int}:
            coeffs = np.zeros(1 << n, dtype=np.int64)
            if any(abs(v) >= INT_LIMIT for v in values.values()):
                coeffs = coeffs.astype(object)
        elif float in kinds:
            coeffs = np.zeros(1 << n)
        else:
            coeffs = np.array([Fraction(0)] * (1 << n), dtype=object)
        for mask, v in values.items():
            coeffs[mask] = v
        return cls(n, coeffs)


def _format_scalar(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _parse_scalar(s: str):
    if any(c in s for c in ".eEn"):
        return float(s)
    f = Fraction(s)
    return f.numerator if f.denominator == 1 else f


def _same_n(a, b):
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: n={a.n} vs n={b.n}")


def _exact_dot(a: np.ndarray, b: np.ndarray):
    if a.dtype == object or b.dtype == object:
        return sum((x * y for x, y in zip(a.tolist(), b.tolist())), 0)
    bound = int(np.abs(a).max(initial=0)) * int(np.abs(b).max(initial=0)) * len(a)
    if bound < INT_LIMIT:
        return int(np.dot(a, b))
    return sum(x * y for x, y in zip(a.tolist(), b.tolist()))


def vacuum(n: int, dtype=np.int64) -> FockVector:
    if n < 1:
        raise ValueError("n must be positive")
    c = np.zeros(1 << n, dtype=dtype)
    c[0] = 1
    return FockVector(n, c)


def basis_vector(n: int, mask: int, dtype=np.int64) -> FockVector:
    c = np.zeros(1 << n, dtype=dtype)
    c[mask] = 1
    return FockVector(n, c)


# -- gamma operators and words ------------------------------------------------


def _vertex_tables(eps: SignFunction) -> np.ndarray:
    cache = eps.__dict__.get("_vertex_tables")
    if cache is None:
        cache = np.stack([vertex_sign_table(eps, i) for i in range(1, eps.n + 1)])
        object.__setattr__(eps, "_vertex_tables", cache)
    return cache


def subset_sign_table(eps: SignFunction, mask: int) -> np.ndarray:
    """Sign picked up by the sorted word gamma_J acting on every basis vector.

    Flipping a larger index never changes the sign of a smaller one, so this
    is just the product of the vertex signs of the members of J.
    """
    tables = _vertex_tables(eps)
    s = np.ones(1 << eps.n, dtype=np.int8)
    for j in indices_of(mask):
        s = s * tables[j - 1]
    return s


def _permute_apply(arr: np.ndarray, signs: np.ndarray, mask: int) -> np.ndarray:
    idx = all_vertices(int(math.log2(arr.shape[0]))) ^ mask
    if arr.ndim == 2:
        signs = signs[:, None]
    return (signs * arr)[idx]


def gamma_apply(eps: SignFunction, i: int, v: FockVector) -> FockVector:
    """Left multiplication by x_i: x_A -> vertex_sign(A, i) x_{A xor {i}}."""
    if v.n != eps.n:
        raise ValueError(f"dimension mismatch: eps has n={eps.n}, vector n={v.n}")
    if not 1 <= i <= eps.n:
        raise IndexError(f"index {i} out of range 1..{eps.n}")
    return FockVector(v.n, gamma_apply_array(eps, i, v.coeffs))


def gamma_apply_array(eps: SignFunction, i: int, arr: np.ndarray) -> np.ndarray:
    """:func:`gamma_apply` on a raw array whose first axis runs over bitmasks."""
    return _permute_apply(arr, _vertex_tables(eps)[i - 1], 1 << (i - 1))


def word_apply(eps: SignFunction, word, v: FockVector) -> FockVector:
    """Apply gamma_{w_1} ... gamma_{w_r}, rightmost factor first."""
    for i in reversed(tuple(word)):
        v = gamma_apply(eps, i, v)
    return v


@dataclass(frozen=True)
class WordNormalForm:
    sign: int
    subset: int


def word_normal_form(eps: SignFunction, word) -> WordNormalForm:
    """Bubble-sort a word of distinct indices, collecting eps(p, r) per swap."""
    w = list(word)
    if len(set(w)) != len(w):
        raise ValueError(f"word {tuple(word)} repeats an index")
    for i in w:
        if not 1 <= i <= eps.n:
            raise IndexError(f"index {i} out of range 1..{eps.n}")
    sign = 1
    for end in range(len(w) - 1, 0, -1):
        for a in range(end):
            if w[a] > w[a + 1]:
                sign *= eps(w[a], w[a + 1])
                w[a], w[a + 1] = w[a + 1], w[a]
    return WordNormalForm(sign, mask_of(w))


_INVERSIONS: dict[int, list] = {}


def _permutation_inversions(k: int):
    """Each permutation of positions 0..k-1 with its inverted position pairs."""
    if k not in _INVERSIONS:
        table = []
        for perm in itertools.permutations(range(k)):
            inv = [
                (min(perm[a], perm[b]), max(perm[a], perm[b]))
                for a, b in itertools.combinations(range(k), 2)
                if perm[a] > perm[b]
            ]
            table.append((perm, inv))
        _INVERSIONS[k] = table
    return _INVERSIONS[k]


def permutation_sum(eps: SignFunction, subset) -> int:
    """``sum_sigma eps(sigma, J)`` over all orderings of the sorted subset J."""
    J = sorted(subset)
    s = eps.signs
    total = 0
    for _, inv in _permutation_inversions(len(J)):
        sign = 1
        for a, b in inv:
            sign *= s[J[a] - 1, J[b] - 1]
        total += int(sign)
    return total


# -- operators ----------------------------------------------------------------


class LinearOperator:
    """Integer action on H plus the normalization ``scale / n^(h/2)``."""

    n: int
    k: int
    h: int
    scale: Fraction
    self_adjoint: bool
    label: str

    def apply_array(self, arr: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def row_bound(self) -> int:
        """Upper bound on the l1 norm of any column of the integer action."""
        raise NotImplementedError

    def apply(self, v: FockVector) -> FockVector:
        if v.n != self.n:
            raise ValueError(f"dimension mismatch: operator n={self.n}, vector n={v.n}")
        return FockVector(self.n, self.apply_array(v.coeffs))

    __call__ = apply

    def _work_dtype(self, arr: np.ndarray):
        if arr.dtype.kind == "f":
            return np.float64
        if arr.dtype == object:
            return object
        peak = int(np.abs(arr).max(initial=0))
        return np.int64 if peak * self.row_bound() < INT_LIMIT else object

    def to_dense(self) -> np.ndarray:
        """Matrix of the integer action (column = image of a basis vector)."""
        eye = np.eye(1 << self.n, dtype=np.int64)
        return self.apply_array(eye)

    def value_matrix(self) -> np.ndarray:
        """Float matrix of the normalized operator."""
        return self.to_dense().astype(float) * self.value_factor()

    def value_factor(self) -> float:
        return float(self.scale) / self.n ** (self.h / 2)

    def sparse_entries(self):
        """``(source, target, integer weight)`` for every nonzero entry."""
        m = sp.coo_matrix(self.to_dense())
        return sorted((int(c), int(r), int(w)) for r, c, w in zip(m.row, m.col, m.data) if w)

    def export_sparse(self) -> str:
        lines = [f"{self.n} {self.k} {self.h}"]
        lines += [f"{s} {t} {w}" for s, t, w in self.sparse_entries()]
        return "\n".join(lines) + "\n"


class WordSumOperator(LinearOperator):
    """Integer action ``sum_J c(J) gamma_J`` over sorted subsets J."""

    def __init__(self, eps, terms, h, k, scale=Fraction(1), self_adjoint=True, label=""):
        self.eps = eps
        self.n = eps.n
        self.terms = tuple((int(m), int(c)) for m, c in terms if c != 0)
        self.h = h
        self.k = k
        self.scale = Fraction(scale)
        self.self_adjoint = self_adjoint
        self.label = label

    def row_bound(self) -> int:
        return sum(abs(c) for _, c in self.terms)

    def apply_array(self, arr: np.ndarray) -> np.ndarray:
        dtype = self._work_dtype(arr)
        v = arr.astype(dtype)
        idx = all_vertices(self.n)
        out = np.zeros(arr.shape, dtype=dtype)
        if dtype is object:
            out[...] = 0
        for mask, c in self.terms:
            s = subset_sign_table(self.eps, mask)
            w = s.astype(np.int64) * c if dtype is not object else s.astype(object) * c
            if v.ndim == 2:
                w = w[:, None]
            out += (w * v)[idx ^ mask]
        return out

    def to_dense(self) -> np.ndarray:
        size = 1 << self.n
        idx = all_vertices(self.n)
        dtype = np.int64 if self.row_bound() < INT_LIMIT else object
        M = np.zeros((size, size), dtype=dtype)
        for mask, c in self.terms:
            M[idx ^ mask, idx] += c * subset_sign_table(self.eps, mask).astype(dtype)
        return M


class SparseOperator(LinearOperator):
    """Integer action given by an explicit sparse matrix (row = target)."""

    def __init__(self, n, matrix, h=0, k=0, scale=Fraction(1), self_adjoint=True, label=""):
        self.n = n
        self.matrix = sp.csr_matrix(matrix, dtype=np.int64)
        if self.matrix.shape != (1 << n, 1 << n):
            raise ValueError("sparse matrix has the wrong shape")
        self.h = h
        self.k = k
        self.scale = Fraction(scale)
        self.self_adjoint = self_adjoint
        self.label = label

    def row_bound(self) -> int:
        col = np.asarray(abs(self.matrix).sum(axis=0)).ravel()
        return int(col.max(initial=0))

    def apply_array(self, arr: np.ndarray) -> np.ndarray:
        dtype = self._work_dtype(arr)
        if dtype is not object:
            return np.asarray(self.matrix @ arr.astype(dtype))
        coo = self.matrix.tocoo()
        out = np.zeros(arr.shape, dtype=object)
        out[...] = 0
        for r, c, w in zip(coo.row, coo.col, coo.data):
            out[r] = out[r] + int(w) * arr[c]
        return out

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @classmethod
    def from_text(cls, text: str) -> "SparseOperator":
        lines = text.strip().splitlines()
        n, k, h = (int(x) for x in lines[0].split())
        rows, cols, vals = [], [], []
        for lineno, line in enumerate(lines[1:], start=2):
            try:
                s, t, w = (int(x) for x in line.split())
            except ValueError as exc:
                raise ValueError(f"line {lineno}: expected 'source target weight'") from exc
            rows.append(t)
            cols.append(s)
            vals.append(w)
        size = 1 << n
        m = sp.coo_matrix((vals, (rows, cols)), shape=(size, size), dtype=np.int64)
        return cls(n, m, h=h, k=k)


def identity_operator(eps: SignFunction) -> WordSumOperator:
    return WordSumOperator(eps, [(0, 1)], h=0, k=0, label="I")


def _check_k(eps: SignFunction, k: int, upper: int):
    if k < 1:
        raise ValueError("k must be at least 1 (the identity is identity_operator)")
    if k > upper:
        raise ValueError(f"k={k} exceeds the allowed maximum {upper} for n={eps.n}")


def build_Xnk(eps: SignFunction, k: int) -> WordSumOperator:
    """X_{n,k}: sum over ordered distinct k-tuples of gamma words, over n^(k/2).

    Grouped by sorted subset J with coefficient ``sum_sigma eps(sigma, J)``.
    """
    n = eps.n
    _check_k(eps, k, n)
    terms = [
        (mask_of(J), permutation_sum(eps, J))
        for J in itertools.combinations(range(1, n + 1), k)
    ]
    return WordSumOperator(eps, terms, h=k, k=k, label=f"X{k}")


def z_numerator(eps: SignFunction, tup) -> int:
    """``n * Z(i_1..i_k)``: sum over i outside the tuple of its suffix products."""
    t = np.asarray(tup, dtype=np.int64) - 1
    if len(set(t.tolist())) != len(t):
        raise ValueError(f"tuple {tuple(tup)} repeats an index")
    if len(t) and (t.min() < 0 or t.max() >= eps.n):
        raise IndexError(f"tuple {tuple(tup)} out of range 1..{eps.n}")
    outside = np.setdiff1d(np.arange(eps.n), t)
    if len(t) == 0:
        return int(len(outside))
    block = eps.signs[np.ix_(outside, t)].astype(np.int64)
    suffix = np.cumprod(block[:, ::-1], axis=1)
    return int(suffix.sum() + len(outside))


def z_statistic(eps: SignFunction, tup) -> Fraction:
    return Fraction(z_numerator(eps, tup), eps.n)


def z_weighted_terms(eps: SignFunction, k: int):
    """Per sorted subset J: ``sum_sigma eps(sigma, J) * n Z(J_sigma)``; k = 0 allowed."""
    n = eps.n
    s = eps.signs
    terms = []
    for J in itertools.combinations(range(1, n + 1), k):
        total = 0
        for perm, inv in _permutation_inversions(k):
            sign = 1
            for a, b in inv:
                sign *= s[J[a] - 1, J[b] - 1]
            total += int(sign) * z_numerator(eps, [J[p] for p in perm])
        terms.append((mask_of(J), total))
    return terms


def build_Ynk(eps: SignFunction, k: int, q=None, q_free: bool = False) -> WordSumOperator:
    """Y_{n,k}: like X_{n,k} with each tuple weighted by Z / [k+1]_q.

    The stored integer action is ``sum n Z(tuple) gamma_word`` with tag
    ``h = k + 2``; the prefactor ``1 / [k+1]_q`` is kept separately in
    ``scale`` (or left at 1 when ``q_free``). For k >= 2 the Z weight of a
    tuple and of its reversal differ, so the operator is not self-adjoint.
    """
    n = eps.n
    _check_k(eps, k, n - 1)
    scale = Fraction(1)
    if not q_free:
        q = eps.q if q is None else Fraction(q)
        if q is None:
            raise ValueError("q is needed for the [k+1]_q prefactor; pass q or q_free=True")
        bracket = q_integer(k + 1, q)
        if bracket == 0:
            raise ZeroDivisionError(f"[{k + 1}]_q vanishes at q={q}; use q_free=True")
        scale = 1 / bracket
    return WordSumOperator(
        eps, z_weighted_terms(eps, k), h=k + 2, k=k, scale=scale,
        self_adjoint=k == 1, label=f"Y{k}",
    )


def operator_apply(op: LinearOperator, v: FockVector) -> FockVector:
    return op.apply(v)


# -- moments ------------------------------------------------------------------


@dataclass(frozen=True)
class Moment:
    """Exact value ``numerator * scale / n^(h/2)``."""

    numerator: int
    h: int
    n: int
    scale: Fraction = Fraction(1)

    def exact(self) -> Fraction:
        if self.numerator == 0:
            return Fraction(0)
        if self.h % 2:
            raise ValueError("odd half-power with a nonzero numerator is irrational")
        return Fraction(self.numerator) * self.scale / Fraction(self.n) ** (self.h // 2)

    def __float__(self):
        return float(self.decimal_value())

    def decimal_value(self, digits: int = 40) -> Decimal:
        with localcontext() as ctx:
            ctx.prec = digits
            num = Decimal(self.numerator) * Decimal(self.scale.numerator) / Decimal(self.scale.denominator)
            return num / Decimal(self.n).sqrt() ** self.h if self.h % 2 else num / Decimal(self.n) ** (self.h // 2)

    def decimal(self) -> str:
        return render_decimal(self.decimal_value())


def render_decimal(x) -> str:
    """15 significant digits."""
    x = x if isinstance(x, Decimal) else Decimal(repr(float(x)))
    return "0" if x == 0 else f"{x:.15g}"


def vacuum_moment(op: LinearOperator, m: int) -> Moment:
    """``tau(op^m)`` exactly, as integer numerator with tag ``m * h``.

    Self-adjoint operators use ``tau(X^(a+b)) = <X^a 1, X^b 1>``, which
    halves the number of applications.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    scale = op.scale**m
    v = vacuum(op.n).coeffs
    if op.self_adjoint and m >= 2:
        b = m // 2
        for _ in range(b):
            v = op.apply_array(v)
        w = op.apply_array(v) if m % 2 else v
        num = _exact_dot(v, w)
    else:
        for _ in range(m):
            v = op.apply_array(v)
        num = int(v[0])
    return Moment(int(num), m * op.h, op.n, scale)


def power_moments(op: LinearOperator, m_max: int) -> list[Moment]:
    """``[tau(op^0), ..., tau(op^m_max)]`` for a self-adjoint operator.

    Only ``ceil(m_max / 2)`` applications are needed: the vacuum images
    ``X^j 1`` are kept and paired.
    """
    if not op.self_adjoint:
        return [vacuum_moment(op, m) for m in range(m_max + 1)]
    images = [vacuum(op.n).coeffs]
    for _ in range((m_max + 1) // 2):
        images.append(op.apply_array(images[-1]))
    out = []
    for m in range(m_max + 1):
        a, b = (m + 1) // 2, m // 2
        out.append(Moment(int(_exact_dot(images[a], images[b])), m * op.h, op.n, op.scale**m))
    return out


def mixed_vacuum_moment(ops) -> Moment:
    """``tau(op_1 ... op_r)``, applying right to left to the vacuum."""
    ops = list(ops)
    if not ops:
        return Moment(1, 0, 1)
    n = ops[0].n
    if any(op.n != n for op in ops):
        raise ValueError("operators act on different spaces")
    v = vacuum(n).coeffs
    scale = Fraction(1)
    h = 0
    for op in reversed(ops):
        v = op.apply_array(v)
        scale *= op.scale
        h += op.h
    return Moment(int(v[0]), h, n, scale)


def number_operator_apply(v: FockVector) -> FockVector:
    sizes = np.bitwise_count(all_vertices(v.n)).astype(np.int64)
    return FockVector(v.n, v.coeffs * sizes)


# -- algebra elements and norms -----------------------------------------------


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """``sum_A c_A gamma_A`` for a fixed sign function; identified with X 1."""

    eps: SignFunction
    coeffs: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.eps.n

    def vector(self) -> FockVector:
        exact = all(isinstance(c, (int, Fraction)) for c in self.coeffs.values())
        arr = np.zeros(1 << self.n, dtype=object if exact else float)
        if exact:
            arr[...] = 0
        for mask, c in self.coeffs.items():
            arr[mask] = c
        return FockVector(self.n, arr)

    @classmethod
    def from_vector(cls, eps: SignFunction, v: FockVector) -> "AlgebraElement":
        return cls(eps, {int(m): v.coeffs[m] for m in np.flatnonzero(v.coeffs)})

    def vacuum_expectation(self):
        return self.coeffs.get(0, 0)

    def left_multiplication(self) -> np.ndarray:
        """Dense float matrix of ``Y -> X Y`` on H."""
        size = 1 << self.n
        idx = all_vertices(self.n)
        M = np.zeros((size, size))
        for mask, c in self.coeffs.items():
            M[idx ^ mask, idx] += float(c) * subset_sign_table(self.eps, mask)
        return M

    def is_self_adjoint(self) -> bool:
        M = self.left_multiplication()
        return bool(np.allclose(M, M.T))


def random_homogeneous_element(eps: SignFunction, k: int, rng: np.random.Generator) -> AlgebraElement:
    """Standard Gaussian coefficients on every degree-k word gamma_A."""
    masks = [mask_of(J) for J in itertools.combinations(range(1, eps.n + 1), k)]
    return AlgebraElement(eps, dict(zip(masks, rng.standard_normal(len(masks)).tolist())))


def random_element(eps: SignFunction, rng: np.random.Generator) -> AlgebraElement:
    """Standard Gaussian coefficients on all 2^n basis words."""
    size = 1 << eps.n
    return AlgebraElement(eps, dict(zip(range(size), rng.standard_normal(size).tolist())))


def word_adjoint_sign(eps: SignFunction, mask: int) -> int:
    """``s`` with ``gamma_A^* = s gamma_A``: reversing the sorted word."""
    J = indices_of(mask)
    return word_normal_form(eps, tuple(reversed(J))).sign


def ou_semigroup(t: float, x: AlgebraElement) -> AlgebraElement:
    """``c_A -> exp(-t |A|) c_A``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return AlgebraElement(x.eps, dict(x.coeffs))
    return AlgebraElement(
        x.eps, {m: math.exp(-t * m.bit_count()) * float(c) for m, c in x.coeffs.items()}
    )


def _dense_values(obj, cap: int) -> np.ndarray:
    if obj.n > cap:
        raise ValueError(f"n={obj.n} exceeds the dense eigen cap {cap}")
    if isinstance(obj, AlgebraElement):
        return obj.left_multiplication()
    return obj.value_matrix()


def spectrum(obj, cap: int = DEFAULT_EIGEN_CAP) -> np.ndarray:
    """Sorted eigenvalues (with repetition) of a self-adjoint operator or element."""
    M = _dense_values(obj, cap)
    if not np.allclose(M, M.T):
        raise ValueError("spectrum needs a self-adjoint input")
    return np.linalg.eigvalsh(M)


def singular_values(obj, cap: int = DEFAULT_EIGEN_CAP) -> np.ndarray:
    """Singular values of the left multiplication, i.e. the spectrum of |x|."""
    return np.linalg.svd(_dense_values(obj, cap), compute_uv=False)


def norm_from_eigenvalues(evals: np.ndarray, p: float) -> float:
    if p < 1:
        raise ValueError("p must be at least 1")
    return float(np.mean(np.abs(evals) ** p) ** (1.0 / p))


def lp_norm(obj, p: float, cap: int = DEFAULT_EIGEN_CAP) -> float:
    """``tau(|x|^p)^(1/p)`` through the normalized matrix trace.

    The vacuum state is the normalized trace on the span of the words gamma_A
    (gamma_A has zero diagonal for A nonempty), so the singular values of
    the 2^n x 2^n matrix give the norm; for self-adjoint input these are the
    absolute eigenvalues.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    return norm_from_eigenvalues(singular_values(obj, cap), p)


def multiplicities(evals: np.ndarray, tol: float = 1e-8):
    """Group sorted eigenvalues into ``(value, multiplicity)`` clusters."""
    out = []
    for x in np.sort(evals):
        if out and abs(x - out[-1][0]) <= tol:
            v, m = out[-1]
            out[-1] = (v, m + 1)
        else:
            out.append((float(x), 1))
    return out


def histogram(evals: np.ndarray, bins="fd"):
    """``(bin_left, bin_right, count)`` rows; Freedman-Diaconis by default."""
    evals = np.asarray(evals, dtype=float)
    if evals.size == 0:
        return []
    if np.ptp(evals) == 0:
        edges = np.array([evals[0] - 0.5, evals[0] + 0.5])
    else:
        edges = np.histogram_bin_edges(evals, bins=bins)
    counts, edges = np.histogram(evals, bins=edges)
    return [(float(a), float(b), int(c)) for a, b, c in zip(edges[:-1], edges[1:], counts)]
