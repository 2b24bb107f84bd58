"""Distance-k graphs of the n-cube and the sign-weighted graphs built on them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ._bits import all_vertices, indices_of, mask_of
from .babyfock import SparseOperator, permutation_sum, subset_sign_table
from .signs import SignFunction, as_rational_q, format_q, vertex_sign

DEFAULT_GRAPH_CAP = 16

# vertex e of the state phi_e(B) = B_ee: the empty set, i.e. the vacuum
ROOT_VERTEX = 0


class GraphFormatError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    k: int
    edges: tuple
    q: Fraction | None = None
    seed: int | None = None
    eps: SignFunction | None = None

    def __post_init__(self):
        edges = tuple((int(u), int(v), Fraction(w)) for u, v, w in self.edges)
        object.__setattr__(self, "edges", edges)
        _validate(self.n, self.k, edges)

    @property
    def zero_edges(self):
        """Edges of the distance-k graph whose weight cancelled to 0."""
        return tuple((u, v) for u, v, w in self.edges if w == 0)

    def weight(self, u: int, v: int) -> Fraction:
        u, v = min(u, v), max(u, v)
        for a, b, w in self.edges:
            if (a, b) == (u, v):
                return w
        raise KeyError((u, v))

    def __eq__(self, other):
        return (
            isinstance(other, WeightedGraph)
            and (self.n, self.k, self.edges) == (other.n, other.k, other.edges)
            and self.q == other.q
            and self.seed == other.seed
        )


def _validate(n, k, edges, lines=None):
    seen = set()
    for pos, (u, v, w) in enumerate(edges):
        where = f"line {lines[pos]}: " if lines else f"edge {pos}: "
        if not (0 <= u < v < 1 << n):
            raise GraphFormatError(f"{where}need 0 <= u < v < 2^{n}, got {u}, {v}")
        if (u ^ v).bit_count() != k:
            raise GraphFormatError(f"{where}vertices {u}, {v} are not at distance {k}")
        if (u, v) in seen:
            raise GraphFormatError(f"{where}duplicate edge {u}-{v}")
        if k and (factorial(k) % w.denominator):
            raise GraphFormatError(f"{where}weight {w} has a denominator not dividing {k}!")
        seen.add((u, v))


def _check_nk(n, k):
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")


def distance_k_edges(n: int, k: int):
    """All pairs ``u < v`` of n-cube vertices at Hamming distance exactly k."""
    _check_nk(n, k)
    masks = [mask_of(J) for J in itertools.combinations(range(1, n + 1), k)]
    return sorted((u, u ^ m) for u in range(1 << n) for m in masks if u < u ^ m)


def distance_k_edge_count(n: int, k: int) -> int:
    return (1 << (n - 1)) * comb(n, k)


def edge_weight(eps: SignFunction, r: int, J) -> Fraction:
    """Weight at endpoint r of the edge flipping the coordinates in J.

    ``(1/k!) * sum_sigma eps(sigma, J) * prod_l vertex_sign(r, j_l)``.
    """
    J = indices_of(J) if isinstance(J, int) else list(J)
    if not J or sorted(set(J)) != J or J[0] < 1 or J[-1] > eps.n:
        raise ValueError(f"malformed subset {J}")
    sign = 1
    for j in J:
        sign *= vertex_sign(eps, r, j)
    return Fraction(permutation_sum(eps, J) * sign, factorial(len(J)))


def build_weighted_distance_k_graph(
    eps: SignFunction, k: int, cap: int = DEFAULT_GRAPH_CAP
) -> WeightedGraph:
    """Weighted graph whose adjacency matrix is (1/k!) sum over distinct k-tuples of gamma words.

    Each weight is evaluated at both endpoints; a disagreement raises.
    """
    n = eps.n
    _check_nk(n, k)
    if n > cap:
        raise ValueError(f"n={n} exceeds the graph cap {cap}")
    verts = all_vertices(n)
    us, vs, ws = [], [], []
    for J in itertools.combinations(range(1, n + 1), k):
        mask = mask_of(J)
        c = permutation_sum(eps, J)
        signs = subset_sign_table(eps, mask).astype(np.int64)
        lower = verts < (verts ^ mask)
        u = verts[lower]
        v = u ^ mask
        if not np.array_equal(c * signs[u], c * signs[v]):
            raise RuntimeError(f"edge weights for J={J} depend on the endpoint")
        us.append(u)
        vs.append(v)
        ws.append(c * signs[u])
    u, v, w = (np.concatenate(a) for a in (us, vs, ws))
    order = np.lexsort((v, u))
    kf = factorial(k)
    edges = tuple(
        (int(a), int(b), Fraction(int(x), kf)) for a, b, x in zip(u[order], v[order], w[order])
    )
    return WeightedGraph(n, k, edges, q=eps.q, seed=eps.seed, eps=eps)


def adjacency_operator(g: WeightedGraph) -> SparseOperator:
    """Symmetric adjacency; the integer action is k! times the weights."""
    kf = factorial(g.k) if g.k else 1
    size = 1 << g.n
    rows, cols, vals = [], [], []
    for u, v, w in g.edges:
        x = w * kf
        if x.denominator != 1:
            raise ValueError(f"weight {w} is not a multiple of 1/{kf}")
        if x:
            rows += [u, v]
            cols += [v, u]
            vals += [int(x), int(x)]
    m = sp.coo_matrix((vals, (rows, cols)), shape=(size, size), dtype=np.int64)
    return SparseOperator(g.n, m, h=0, k=g.k, scale=Fraction(1, kf), label=f"A{g.k}")


def graph_to_text(g: WeightedGraph) -> str:
    q = "none" if g.q is None else format_q(g.q)
    seed = "none" if g.seed is None else str(g.seed)
    lines = [f"# qcube n={g.n} k={g.k} q={q} seed={seed}"]
    lines += [f"{u} {v} {w.numerator}/{w.denominator}" for u, v, w in g.edges]
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> WeightedGraph:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# qcube "):
        raise GraphFormatError("line 1: expected '# qcube n=<n> k=<k> q=<q> seed=<seed>'")
    try:
        header = dict(tok.split("=", 1) for tok in lines[0][len("# qcube "):].split())
        n, k = int(header["n"]), int(header["k"])
    except (KeyError, ValueError) as exc:
        raise GraphFormatError(f"line 1: malformed header {lines[0]!r}") from exc
    edges, linenos = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        try:
            if len(parts) != 3 or "/" not in parts[2]:
                raise ValueError
            edges.append((int(parts[0]), int(parts[1]), Fraction(parts[2])))
        except ValueError as exc:
            raise GraphFormatError(f"line {lineno}: expected 'u v num/den', got {line!r}") from exc
        linenos.append(lineno)
    edges_t = tuple(edges)
    _validate(n, k, edges_t, linenos)
    q = None if header.get("q", "none") == "none" else as_rational_q(header["q"])
    seed = None if header.get("seed", "none") == "none" else int(header["seed"])
    return WeightedGraph(n, k, edges_t, q=q, seed=seed)


def export_graph(g: WeightedGraph, destination) -> None:
    Path(destination).write_text(graph_to_text(g))


def import_graph(source) -> WeightedGraph:
    return graph_from_text(Path(source).read_text())
