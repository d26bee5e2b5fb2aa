"""Compact opens of P^1(Q_p) attached to edges, coverings by torus orbits,
the Steinberg module at finite level, and harmonic measures.

Points of P^1(Q_p) are ``Fraction`` values or ``None`` for infinity.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .padic import valuation
from .tree import (
    TorusData,
    TreeEdge,
    TreeVertex,
    act,
    as_matrix,
    ball,
    level_edges,
    outgoing_edges,
    reduce_mod_power,
    torus_fixed_vertex,
)

Point = Fraction | None

# Swaps the standard vertex with its neighbour towards infinity; used to
# realize the opposite orientation of the standard edge.
def orientation_swap(p: int):
    return as_matrix([[0, 1], [p, 0]])


@dataclass(frozen=True, order=True)
class BoundaryBall:
    """{x : val(x - c) >= m}, or its complement (which contains infinity)."""

    p: int
    center: Fraction
    radius: int
    exterior: bool = False

    @classmethod
    def make(cls, p: int, center: int | Fraction, radius: int, exterior: bool = False) -> BoundaryBall:
        return cls(p, reduce_mod_power(Fraction(center), p, radius), radius, exterior)

    def contains(self, x: Point) -> bool:
        if x is None:
            return self.exterior
        d = Fraction(x) - self.center
        inside = d == 0 or valuation(d, self.p) >= self.radius
        return inside != self.exterior

    def complement(self) -> BoundaryBall:
        return BoundaryBall(self.p, self.center, self.radius, not self.exterior)

    def sample(self) -> Point:
        """Canonical sample: the center, or infinity for an exterior ball."""
        return None if self.exterior else self.center

    def __repr__(self) -> str:
        core = f"B({self.center}, {self.radius})"
        return f"P1 - {core}" if self.exterior else core


def mobius(g, x: Point) -> Point:
    (a, b), (c, d) = as_matrix(g)
    if x is None:
        return None if c == 0 else a / c
    den = c * x + d
    if den == 0:
        return None
    return (a * x + b) / den


def ball_of_edge(e: TreeEdge, orientation: int = 1) -> BoundaryBall:
    """U_e: the ends reached by leaving s(e) through t(e).

    With ``orientation=-1`` the boundary is recoordinatized by t -> 1/(p t),
    which exchanges the roles of the standard edge and its reverse.
    """
    if orientation == -1:
        e = act(orientation_swap(e.src.p), e)
    elif orientation != 1:
        raise ValueError("orientation must be +1 or -1")
    s, t = e.src, e.dst
    if t.a == s.a + 1:
        return BoundaryBall(s.p, t.b, t.a)
    return BoundaryBall(s.p, s.b, s.a, exterior=True)


def edge_of_ball(b: BoundaryBall) -> TreeEdge:
    p, m = b.p, b.radius
    inner = TreeEdge(TreeVertex(p, m - 1, reduce_mod_power(b.center, p, m - 1)),
                     TreeVertex(p, m, reduce_mod_power(b.center, p, m)))
    return inner.reverse() if b.exterior else inner


def ball_image(g, b: BoundaryBall) -> BoundaryBall:
    """Image of a ball under a Mobius transformation, via the edge it comes from."""
    return ball_of_edge(act(g, edge_of_ball(b)))


def star_partition(v: TreeVertex, orientation: int = 1) -> list[BoundaryBall]:
    return [ball_of_edge(e, orientation) for e in outgoing_edges(v)]


def covering(t: TorusData, n: int, orientation: int = 1) -> list[BoundaryBall]:
    """C_n: the balls of the torus orbit of e_n, in orbit order."""
    return [ball_of_edge(e, orientation) for e in level_edges(t, n)]


def p1_points(p: int, n: int) -> list[Point]:
    """Representatives of P^1(Z/p^n): x for x mod p^n, then 1/(p y) for y mod p^(n-1)."""
    pts: list[Point] = [Fraction(x) for x in range(p ** n)]
    pts.append(None)
    pts.extend(Fraction(1, p * y) for y in range(1, p ** (n - 1)))
    return pts


# ---------------------------------------------------------------- Steinberg

FormalEdgeSum = dict[TreeEdge, int]


def steinberg_delta(v: TreeVertex) -> FormalEdgeSum:
    return {e: 1 for e in outgoing_edges(v)}


@dataclass(frozen=True)
class SteinbergElem:
    """A function on a finite set of boundary points, normalized to vanish at infinity."""

    points: tuple[Point, ...]
    values: tuple[int, ...]
    modulus: int | None = None

    def is_zero(self) -> bool:
        return not any(self.values)


def steinberg_ev(x: FormalEdgeSum, points: Sequence[Point], modulus: int | None = None,
                 orientation: int = 1) -> SteinbergElem:
    """Sum of c_e * 1_{U_e}, sampled on ``points`` and taken modulo constants."""
    pts = tuple(points)
    vals = [0] * len(pts)
    for e, c in x.items():
        if c == 0:
            continue
        b = ball_of_edge(e, orientation)
        for i, pt in enumerate(pts):
            if b.contains(pt):
                vals[i] += c
    base = vals[pts.index(None)] if None in pts else vals[0]
    vals = [v - base for v in vals]
    if modulus is not None:
        vals = [v % modulus for v in vals]
    return SteinbergElem(pts, tuple(vals), modulus)


# ---------------------------------------------------------------- measures

class InsufficientDepth(LookupError):
    """The measure is not stored that far from the fixed vertex."""


class HarmonicMeasure:
    """Values on the torus-level edges 1..depth (outward), extended by
    mu(reverse e) = -mu(e).  Values live in any additive group; when a
    ``modulus`` is given they are reduced after every operation."""

    def __init__(self, torus: TorusData, depth: int, levels: list[list], modulus: int | None = None):
        self.torus = torus
        self.depth = depth
        self.modulus = modulus
        self.levels = levels
        self._values: dict[TreeEdge, object] = {}
        for n in range(1, depth + 1):
            for e, val in zip(level_edges(torus, n), levels[n - 1]):
                self._values[e] = self._reduce(val)

    def _reduce(self, val):
        return val % self.modulus if self.modulus is not None else val

    def __call__(self, e: TreeEdge):
        if e in self._values:
            return self._values[e]
        if e.reverse() in self._values:
            return self._reduce(-self._values[e.reverse()])
        raise InsufficientDepth(f"{e} lies beyond the stored depth {self.depth}")

    def edges(self) -> list[TreeEdge]:
        return list(self._values)

    def level(self, n: int) -> list:
        if not 1 <= n <= self.depth:
            raise InsufficientDepth(f"level {n} not stored (depth {self.depth})")
        return self.levels[n - 1]

    def __add__(self, other: HarmonicMeasure) -> HarmonicMeasure:
        depth = min(self.depth, other.depth)
        levels = [[self._reduce(x + y) for x, y in zip(a, b)]
                  for a, b in zip(self.levels[:depth], other.levels[:depth])]
        return HarmonicMeasure(self.torus, depth, levels, self.modulus)

    def vertex_defects(self) -> dict[TreeVertex, object]:
        """Star sums at interior vertices that fail to vanish."""
        bad = {}
        for v in ball(torus_fixed_vertex(self.torus), self.depth - 1):
            total = sum((self(e) for e in outgoing_edges(v)), start=0 * self(outgoing_edges(v)[0]))
            total = self._reduce(total)
            if np.any(np.asarray(total)):
                bad[v] = total
        return bad


def measure_from_sphere_values(t: TorusData, n: int, values: Sequence, modulus: int | None = None) -> HarmonicMeasure:
    """The harmonic measure whose level-n values (orbit order) are ``values``.

    Coarser levels are forced by harmonicity: the value on rho^i e_m is the sum
    over its level-n descendants rho^(i + s |G_m|) e_n.
    """
    h = t.order(n)
    if len(values) != h:
        raise ValueError(f"expected {h} values, got {len(values)}")
    arr = np.array([np.asarray(v) for v in values], dtype=object if modulus is None else np.int64)
    total = arr.sum(axis=0)
    if modulus is not None:
        total = total % modulus
    if np.any(total != 0):
        raise ValueError("values must sum to zero")
    levels = []
    for m in range(1, n + 1):
        hm = t.order(m)
        coarse = arr.reshape((h // hm, hm) + arr.shape[1:]).sum(axis=0)
        if modulus is not None:
            coarse = coarse % modulus
        levels.append([_unwrap(x) for x in coarse])
    return HarmonicMeasure(t, n, levels, modulus)


def _unwrap(x):
    return x.item() if isinstance(x, np.ndarray) and x.ndim == 0 else x
