"""The Bruhat-Tits tree of PGL2(Q_p) and the action of an inert torus on it.

A vertex is the homothety class of a lattice with column basis
[[p^a, b], [0, 1]], where b is a rational with p-power denominator taken
modulo p^a Z_p.  For a <= 0 most classes have b = 0, but not all: the
neighbours of (-1, 0) include (0, j/p).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .padic import (
    NormOneGroup,
    QuadExtElem,
    norm_one_generator,
    residue,
    smallest_nonresidue,
    valuation,
)

Matrix = tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]


def as_matrix(m: Sequence[Sequence[int | Fraction]]) -> Matrix:
    (a, b), (c, d) = m
    return (Fraction(a), Fraction(b)), (Fraction(c), Fraction(d))


def mat_mul(x: Matrix, y: Matrix) -> Matrix:
    (a, b), (c, d) = x
    (e, f), (g, h) = y
    return (a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h)


def mat_det(x: Matrix) -> Fraction:
    (a, b), (c, d) = x
    return a * d - b * c


def mat_inv(x: Matrix) -> Matrix:
    (a, b), (c, d) = x
    det = a * d - b * c
    if det == 0:
        raise ValueError("singular matrix")
    return (d / det, -b / det), (-c / det, a / det)


IDENTITY: Matrix = as_matrix([[1, 0], [0, 1]])


def reduce_mod_power(r: Fraction, p: int, a: int) -> Fraction:
    """Canonical representative of r modulo p^a Z_p (digits below p^a only)."""
    r = Fraction(r)
    if r == 0:
        return Fraction(0)
    e = valuation(r, p)
    if e >= a:
        return Fraction(0)
    w = r / Fraction(p) ** e
    digits = residue(w, p ** (a - e))
    return Fraction(digits) * Fraction(p) ** e


@dataclass(frozen=True, order=True)
class TreeVertex:
    p: int
    a: int
    b: Fraction = Fraction(0)

    @property
    def parity(self) -> int:
        return self.a % 2

    def basis(self) -> Matrix:
        return (Fraction(self.p) ** self.a, self.b), (Fraction(0), Fraction(1))

    def __repr__(self) -> str:
        return f"v({self.a}; {self.b})"


@dataclass(frozen=True, order=True)
class TreeEdge:
    src: TreeVertex
    dst: TreeVertex

    def reverse(self) -> TreeEdge:
        return TreeEdge(self.dst, self.src)

    def __repr__(self) -> str:
        return f"{self.src!r}->{self.dst!r}"


def standard_vertex(p: int) -> TreeVertex:
    return TreeVertex(p, 0, Fraction(0))


def standard_edge(p: int) -> TreeEdge:
    """The edge from the standard vertex towards infinity; its reverse has ball Z_p."""
    return TreeEdge(standard_vertex(p), TreeVertex(p, -1, Fraction(0)))


def vertex_normalize(basis: Sequence[Sequence[int | Fraction]], p: int) -> TreeVertex:
    """Normal form of the lattice spanned by the columns of ``basis``."""
    (x1, x2), (y1, y2) = as_matrix(basis)
    if x1 * y2 - x2 * y1 == 0:
        raise ValueError("singular basis")
    # put a bottom entry of least valuation in the second column
    if y1 != 0 and (y2 == 0 or valuation(y1, p) < valuation(y2, p)):
        x1, x2, y1, y2 = x2, x1, y2, y1
    q = y1 / y2
    x1 -= q * x2
    e = valuation(x1, p)
    f = valuation(y2, p)
    unit_y = y2 / Fraction(p) ** f
    xb = x2 / unit_y
    a = e - f
    return TreeVertex(p, a, reduce_mod_power(xb / Fraction(p) ** f, p, a))


def neighbors(v: TreeVertex) -> list[TreeVertex]:
    p = v.p
    step = Fraction(p) ** v.a
    out = [TreeVertex(p, v.a + 1, reduce_mod_power(v.b + step * j, p, v.a + 1)) for j in range(p)]
    out.append(TreeVertex(p, v.a - 1, reduce_mod_power(v.b, p, v.a - 1)))
    return out


def outgoing_edges(v: TreeVertex) -> list[TreeEdge]:
    return [TreeEdge(v, w) for w in neighbors(v)]


def distance(v: TreeVertex, w: TreeVertex) -> int:
    """Difference of the elementary-divisor exponents of one basis relative to the other."""
    rel = mat_mul(mat_inv(v.basis()), w.basis())
    entries = [x for row in rel for x in row if x != 0]
    d1 = min(valuation(x, v.p) for x in entries)
    d2 = valuation(mat_det(rel), v.p) - d1
    return d2 - d1


def act(g: Sequence[Sequence[int | Fraction]], x: TreeVertex | TreeEdge) -> TreeVertex | TreeEdge:
    g = as_matrix(g)
    if mat_det(g) == 0:
        raise ValueError("singular matrix")
    if isinstance(x, TreeEdge):
        return TreeEdge(act(g, x.src), act(g, x.dst))
    return _act_vertex(g, x)


@lru_cache(maxsize=200_000)
def _act_vertex(g: Matrix, v: TreeVertex) -> TreeVertex:
    return vertex_normalize(mat_mul(g, v.basis()), v.p)


def ball(center: TreeVertex, radius: int) -> list[TreeVertex]:
    """All vertices within the given distance, in breadth-first order."""
    seen = {center}
    order = [center]
    frontier = [center]
    for _ in range(radius):
        nxt = []
        for v in frontier:
            for w in neighbors(v):
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
                    order.append(w)
        frontier = nxt
    return order


# ---------------------------------------------------------------- torus

@dataclass(frozen=True)
class TorusData:
    """Image of Q_p(sqrt(u))^x in GL2(Q_p): sqrt(u) maps to g [[0,u],[1,0]] g^-1.

    ``level`` is the depth of the tower used to pick the generator of the
    cyclic quotients; everything at levels n <= level is compatible.
    """

    p: int
    g: Matrix = IDENTITY
    level: int = 4
    u: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "u", smallest_nonresidue(self.p))
        object.__setattr__(self, "g", as_matrix(self.g))
        if mat_det(self.g) == 0:
            raise ValueError("singular conjugating matrix")

    @property
    def embedding(self) -> Matrix:
        m0 = as_matrix([[0, self.u], [1, 0]])
        return mat_mul(mat_mul(self.g, m0), mat_inv(self.g))

    def element_matrix(self, a: int | Fraction, b: int | Fraction) -> Matrix:
        (m11, m12), (m21, m22) = self.embedding
        a, b = Fraction(a), Fraction(b)
        return (a + b * m11, b * m12), (b * m21, a + b * m22)

    def fixed_points(self, prec: int) -> tuple[QuadExtElem, QuadExtElem]:
        """(tau, conj(tau)) with tau = g . sqrt(u)."""
        (al, be), (ga, de) = self.g
        s = QuadExtElem.sqrt_u(self.p, prec)
        tau = (s * al + be) / (s * ga + de)
        return tau, tau.conj()

    @property
    def generator(self) -> tuple[int, int]:
        """Norm-one generator gamma at the top level; coordinates of the alpha's."""
        return norm_one_generator(self.p, self.level)

    def group(self, n: int) -> NormOneGroup:
        self._check_level(n)
        return NormOneGroup(self.p, n, self.generator)

    def order(self, n: int) -> int:
        return (self.p + 1) * self.p ** (n - 1)

    def _check_level(self, n: int) -> None:
        if not 1 <= n <= self.level:
            raise ValueError(f"level {n} outside 1..{self.level}")

    def acting_element(self) -> tuple[int, int]:
        """rho = 1 + gamma, a unit with rho / conj(rho) = gamma."""
        a, b = self.generator
        mod = self.p ** self.level
        return (1 + a) % mod, b % mod

    def rho_power_matrix(self, j: int) -> Matrix:
        return _rho_power_matrix(self, j % self.order(self.level))


@lru_cache(maxsize=None)
def _rho_powers(torus: TorusData) -> list[tuple[int, int]]:
    mod = torus.p ** torus.level
    a, b = torus.acting_element()
    out = [(1, 0)]
    for _ in range(torus.order(torus.level) - 1):
        x, y = out[-1]
        out.append(((x * a + torus.u * y * b) % mod, (x * b + y * a) % mod))
    return out


@lru_cache(maxsize=None)
def _rho_power_matrix(torus: TorusData, j: int) -> Matrix:
    a, b = _rho_powers(torus)[j]
    return torus.element_matrix(a, b)


def torus_fixed_vertex(t: TorusData) -> TreeVertex:
    return vertex_normalize(t.g, t.p)


def torus_act(t: TorusData, j: int, x: TreeVertex | TreeEdge) -> TreeVertex | TreeEdge:
    """Action of rho^j on a vertex or edge."""
    return act(t.rho_power_matrix(j), x)


def sphere(t: TorusData, n: int) -> list[TreeVertex]:
    if n < 1:
        raise ValueError("n must be positive")
    center = torus_fixed_vertex(t)
    prev, frontier = {center}, {center}
    for _ in range(n):
        nxt = {w for v in frontier for w in neighbors(v)} - prev
        prev, frontier = frontier, nxt
    return sorted(frontier)


def minimal_target(edges: list[TreeEdge]) -> TreeEdge:
    return min(edges, key=lambda e: e.dst)


def consecutive_edges(t: TorusData, n: int,
                      selector: Callable[[list[TreeEdge]], TreeEdge] = minimal_target) -> list[TreeEdge]:
    """Non-backtracking path e_1, ..., e_n leaving the torus-fixed vertex."""
    if n < 1:
        raise ValueError("n must be positive")
    path: list[TreeEdge] = []
    v = torus_fixed_vertex(t)
    back = None
    for _ in range(n):
        choices = [e for e in outgoing_edges(v) if e.dst != back]
        e = selector(choices)
        path.append(e)
        back, v = v, e.dst
    return path


def all_paths(t: TorusData, n: int) -> list[tuple[TreeEdge, ...]]:
    """Every non-backtracking path of length n from the fixed vertex."""
    paths = [(e,) for e in outgoing_edges(torus_fixed_vertex(t))]
    for _ in range(n - 1):
        paths = [path + (e,) for path in paths for e in outgoing_edges(path[-1].dst)
                 if e.dst != path[-1].src]
    return paths


def level_edges(t: TorusData, n: int) -> list[TreeEdge]:
    """The orbit rho^j e_n, j = 0 .. |G_n| - 1, in that order."""
    t._check_level(n)
    e_n = consecutive_edges(t, n)[-1]
    return [torus_act(t, j, e_n) for j in range(t.order(n))]


def stabilizer_index(t: TorusData, n: int) -> int:
    """Index in the torus (mod its level-``level`` congruence subgroup) of the
    stabilizer of e_n, counted by brute force over the whole finite quotient."""
    e_n = consecutive_edges(t, n)[-1]
    total = t.order(t.level)
    fixing = sum(1 for j in range(total) if torus_act(t, j, e_n) == e_n)
    return total // fixing


# ---------------------------------------------------------------- edge functions

@dataclass
class EdgeFunction:
    """Finitely supported function on oriented edges; zero values are dropped."""

    values: dict[TreeEdge, object]

    def __post_init__(self):
        self.values = {e: v for e, v in self.values.items() if not _is_zero(v)}

    def __call__(self, e: TreeEdge, zero=0):
        return self.values.get(e, zero)

    def support(self) -> set[TreeEdge]:
        return set(self.values)

    def map_values(self, fn: Callable) -> EdgeFunction:
        return EdgeFunction({e: fn(v) for e, v in self.values.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, EdgeFunction) or self.support() != other.support():
            return False
        return all(np.array_equal(np.asarray(v), np.asarray(other.values[e])) for e, v in self.values.items())


def _is_zero(v) -> bool:
    return not np.any(np.asarray(v))


def up_operator(g: EdgeFunction, include_backtrack: bool = False) -> EdgeFunction:
    """(U_p g)(e) = sum of g(e') over edges e' leaving t(e).

    By default the backtracking edge e' = reverse(e) is left out, leaving p
    terms; ``include_backtrack`` gives the p + 1 term sum.
    """
    out: dict[TreeEdge, object] = {}
    for e_prime, val in g.values.items():
        w = e_prime.src
        for x in neighbors(w):
            e = TreeEdge(x, w)
            if not include_backtrack and e == e_prime.reverse():
                continue
            out[e] = out[e] + val if e in out else val
    return EdgeFunction(out)


def up_operator_adjoint(g: EdgeFunction) -> EdgeFunction:
    """Transpose of ``up_operator``: pushes each value onto the p continuations."""
    out: dict[TreeEdge, object] = {}
    for e, val in g.values.items():
        w = e.dst
        for x in neighbors(w):
            if x == e.src:
                continue
            e2 = TreeEdge(w, x)
            out[e2] = out[e2] + val if e2 in out else val
    return EdgeFunction(out)


def torus_orbit_series(t: TorusData, n: int, toward_center: bool = True) -> EdgeFunction:
    """h_n = sum over sigma in G_n of [sigma] * [sigma . e_n], values in Z[G_n].

    With ``toward_center`` the orbit edges are reversed so they point at the
    fixed vertex; that is the orientation under which U_p(h_n) projects
    h_{n+1}.  The outward series pairs with ``up_operator_adjoint`` instead.
    """
    h = t.order(n)
    values = {}
    for j, e in enumerate(level_edges(t, n)):
        vec = np.zeros(h, dtype=np.int64)
        vec[j] = 1
        values[e.reverse() if toward_center else e] = vec
    return EdgeFunction(values)


def project_group_ring(vec: np.ndarray, p: int) -> np.ndarray:
    """Z[G_{n+1}] -> Z[G_n] along reduction of exponents mod |G_n|."""
    h = len(vec) // p
    return np.asarray(vec).reshape(p, h).sum(axis=0)

