"""Random choice-of-sign functions and the vertex sign products built from them."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._bits import all_vertices, below, parity, sign_array


def as_rational_q(q) -> Fraction:
    """Coerce ``q`` to an exact rational; floats are read through their repr."""
    if isinstance(q, Fraction):
        return q
    if isinstance(q, (int, np.integer)):
        return Fraction(int(q))
    if isinstance(q, str):
        return Fraction(q.strip())
    return Fraction(repr(float(q)))


def format_q(q) -> str:
    q = as_rational_q(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def rng_for(seed: int, *coords) -> np.random.Generator:
    """Counter-based generator keyed by ``seed`` and a coordinate tuple.

    Coordinates may be ints or strings (strings are hashed with crc32), so
    every experiment cell draws from its own stream regardless of the order
    in which cells are evaluated.
    """
    key = tuple(zlib.crc32(c.encode()) if isinstance(c, str) else int(c) for c in coords)
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SignLaw:
    q: Fraction
    seed: int = 0

    def __post_init__(self):
        q = as_rational_q(self.q)
        if not -1 <= q <= 1:
            raise ValueError(f"q must lie in [-1, 1], got {q}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def p_plus(self) -> Fraction:
        return (1 + self.q) / 2

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        """i.i.d. signs with P(+1) = (1 + q) / 2, exact for rational q."""
        p = self.p_plus
        if p.denominator < 2**62:
            u = rng.integers(0, p.denominator, size=size, dtype=np.int64)
            plus = u < p.numerator
        else:
            plus = rng.random(size) < float(p)
        return np.where(plus, 1, -1).astype(np.int8)


@dataclass(frozen=True, eq=False)
class SignFunction:
    """Symmetric ``n x n`` table of +-1 with -1 on the diagonal.

    ``row_masks[i - 1]`` has bit ``j - 1`` set exactly when eps(i, j) = -1.
    """

    n: int
    signs: np.ndarray
    q: Fraction | None = None
    seed: int | None = None
    row_masks: tuple = field(init=False)

    def __post_init__(self):
        s = np.asarray(self.signs, dtype=np.int8)
        if self.n < 1 or s.shape != (self.n, self.n):
            raise ValueError(f"sign table must be {self.n}x{self.n}")
        if not np.all(np.abs(s) == 1):
            raise ValueError("signs must be +-1")
        if not np.array_equal(s, s.T):
            raise ValueError("sign table must be symmetric")
        if not np.all(np.diag(s) == -1):
            raise ValueError("diagonal of a sign table must be -1")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)
        masks = []
        for row in s:
            m = 0
            for j in np.flatnonzero(row == -1):
                m |= 1 << int(j)
            masks.append(m)
        object.__setattr__(self, "row_masks", tuple(masks))

    def __call__(self, i: int, j: int) -> int:
        return int(self.signs[i - 1, j - 1])

    def __eq__(self, other):
        return (
            isinstance(other, SignFunction)
            and self.n == other.n
            and np.array_equal(self.signs, other.signs)
        )

    def __hash__(self):
        return hash((self.n, self.signs.tobytes()))

    def to_text(self) -> str:
        q = "none" if self.q is None else format_q(self.q)
        seed = "none" if self.seed is None else str(self.seed)
        lines = [f"n={self.n} q={q} seed={seed}"]
        for i in range(self.n - 1):
            lines.append("".join("+" if v > 0 else "-" for v in self.signs[i, i + 1:]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SignFunction":
        lines = [ln.strip() for ln in text.strip().splitlines()]
        try:
            header = dict(tok.split("=", 1) for tok in lines[0].split())
            n = int(header["n"])
        except (IndexError, KeyError, ValueError) as exc:
            raise ValueError(f"bad sign-function header: {lines[:1]!r}") from exc
        rows = lines[1:]
        if len(rows) != n - 1:
            raise ValueError(f"expected {n - 1} sign rows, got {len(rows)}")
        s = -np.ones((n, n), dtype=np.int8)
        for i, row in enumerate(rows):
            if len(row) != n - 1 - i or set(row) - {"+", "-"}:
                raise ValueError(f"line {i + 2}: malformed sign row {row!r}")
            vals = np.array([1 if c == "+" else -1 for c in row], dtype=np.int8)
            s[i, i + 1:] = vals
            s[i + 1:, i] = vals
        q = None if header.get("q", "none") == "none" else as_rational_q(header["q"])
        seed = None if header.get("seed", "none") == "none" else int(header["seed"])
        return cls(n, s, q=q, seed=seed)


def sample_sign_function(n: int, law: SignLaw, *coords) -> SignFunction:
    """Draw the off-diagonal signs i.i.d. from ``law`` and mirror them.

    Entries are consumed row by row of the lower triangle, so the sample
    for ``n`` is the leading block of the sample for any larger n under the
    same ``(seed, coords)``: one stream is one infinite sign array.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = rng_for(law.seed, "eps", *coords)
    rows, cols = np.tril_indices(n, -1)
    s = -np.ones((n, n), dtype=np.int8)
    draws = law.draw(rng, len(rows))
    s[rows, cols] = draws
    s[cols, rows] = draws
    return SignFunction(n, s, q=law.q, seed=law.seed)


def restrict(eps: SignFunction, n: int) -> SignFunction:
    """The sign function on the first ``n`` indices."""
    if not 1 <= n <= eps.n:
        raise ValueError(f"cannot restrict n={eps.n} to {n}")
    return SignFunction(n, eps.signs[:n, :n], q=eps.q, seed=eps.seed)


def constant_sign_function(n: int, value: int) -> SignFunction:
    if n < 1:
        raise ValueError("n must be positive")
    if value not in (1, -1):
        raise ValueError("value must be +1 or -1")
    s = np.full((n, n), value, dtype=np.int8)
    np.fill_diagonal(s, -1)
    return SignFunction(n, s, q=Fraction(value))


def _check_index(eps: SignFunction, i: int):
    if not 1 <= i <= eps.n:
        raise IndexError(f"index {i} out of range 1..{eps.n}")


def vertex_sign(eps: SignFunction, r: int, i: int) -> int:
    """Product of eps(i, j) over j < i with bit j set in ``r``."""
    _check_index(eps, i)
    return -1 if parity(eps.row_masks[i - 1] & r & below(i)) else 1


def vertex_sign_table(eps: SignFunction, i: int) -> np.ndarray:
    """``vertex_sign(eps, r, i)`` for every vertex ``r`` of the n-cube."""
    _check_index(eps, i)
    return sign_array(all_vertices(eps.n) & (eps.row_masks[i - 1] & below(i)))
