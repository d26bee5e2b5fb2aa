"""Multiplicative integration of (t - tau)/(t - conj tau) against harmonic
measures, and Kolyvagin derivatives of synthetic trace-compatible systems.

Level n carries the cyclic group G_n = Z/|G_n|, |G_n| = (p+1) p^(n-1),
identified with the torus quotient through rho^j, rho = 1 + gamma.  An
element of the induced module A[G_n], A = (Z/p^k)^r, is an integer array of
shape (|G_n|, r); row g holds the coefficient of [g].

The alpha coordinate of a norm-one element is its exponent with respect to a
generator, reduced modulo p^(n-1) so that only the pro-p part survives.
Which generator is used is the ``convention``: +1 takes gamma = rho/conj(rho)
(the map x -> x^(1 - sigma)), -1 takes its inverse.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .boundary import (
    BoundaryBall,
    HarmonicMeasure,
    InsufficientDepth,
    Point,
    ball_of_edge,
    measure_from_sphere_values,
    orientation_swap,
)
from .padic import NormOneElem, PrecisionError, QuadExtElem, valuation
from .tree import TorusData, level_edges, mat_inv


def group_order(p: int, n: int) -> int:
    return 1 if n == 0 else (p + 1) * p ** (n - 1)


# ---------------------------------------------------------------- point systems

@dataclass
class PointSystem:
    p: int
    k: int
    depth: int
    rank: int
    levels: list[np.ndarray]

    def __post_init__(self):
        mod = self.p ** self.k
        fixed = []
        for n, arr in enumerate(self.levels, start=1):
            arr = np.asarray(arr, dtype=np.int64) % mod
            if arr.shape != (group_order(self.p, n), self.rank):
                raise ValueError(f"level {n} has shape {arr.shape}")
            fixed.append(arr)
        if len(fixed) != self.depth:
            raise ValueError("number of levels must equal depth")
        self.levels = fixed

    @property
    def modulus(self) -> int:
        return self.p ** self.k

    def level(self, n: int) -> np.ndarray:
        return self.levels[n - 1]

    @classmethod
    def zero(cls, p: int, k: int, depth: int, rank: int = 1) -> PointSystem:
        return cls(p, k, depth, rank, [np.zeros((group_order(p, n), rank), dtype=np.int64)
                                       for n in range(1, depth + 1)])

    @classmethod
    def from_unnormalized(cls, p: int, k: int, rank: int, raw: Sequence[np.ndarray], a_p: int) -> PointSystem:
        """Scale level n by a_p^(-n); raw levels satisfy Trace(P_{n+1}) = a_p P_n."""
        if a_p not in (1, -1):
            raise ValueError("a_p must be +1 or -1")
        levels = [np.asarray(x, dtype=np.int64) * a_p ** n for n, x in enumerate(raw, start=1)]
        return cls(p, k, len(levels), rank, levels)


def trace_down(arr: np.ndarray, p: int) -> np.ndarray:
    """A[G_{n+1}] -> A[G_n]: sum over the fibres of reduction mod |G_n|."""
    h = arr.shape[0] // p
    return arr.reshape((p, h) + arr.shape[1:]).sum(axis=0)


def inflate(arr: np.ndarray, p: int, times: int) -> np.ndarray:
    """A[G_n] -> A[G_{n+times}]: each [g] goes to the sum of its preimages."""
    return np.tile(arr, (p ** times,) + (1,) * (arr.ndim - 1))


def translate(arr: np.ndarray, j: int) -> np.ndarray:
    """Action of the generator power j: [g] -> [g + j]."""
    return np.roll(arr, j, axis=0)


@dataclass
class ValidationReport:
    ok: bool
    level: int | None = None
    detail: str = ""


def validate_point_system(ps: PointSystem) -> ValidationReport:
    mod = ps.modulus
    if np.any(ps.level(1).sum(axis=0) % mod):
        return ValidationReport(False, 1, "trace from level 1 to level 0 is nonzero")
    for n in range(1, ps.depth):
        if np.any((trace_down(ps.level(n + 1), ps.p) - ps.level(n)) % mod):
            return ValidationReport(False, n + 1, f"trace from level {n + 1} differs from level {n}")
    return ValidationReport(True)


def spread_point_system(p: int, k: int, depth: int, rank: int = 1,
                        rng: np.random.Generator | None = None,
                        top: np.ndarray | None = None) -> PointSystem:
    """Trace-compatible system from a top level with zero total trace.

    Without ``top`` a random one is drawn and its first row adjusted.
    """
    mod = p ** k
    h = group_order(p, depth)
    if top is None:
        rng = np.random.default_rng() if rng is None else rng
        top = rng.integers(0, mod, size=(h, rank))
        top[0] = (top[0] - top.sum(axis=0)) % mod
    top = np.asarray(top, dtype=np.int64).reshape(h, rank) % mod
    if np.any(top.sum(axis=0) % mod):
        raise ValueError("top level must have zero trace to level 0")
    levels = [top]
    for _ in range(depth - 1):
        levels.append(trace_down(levels[-1], p) % mod)
    return PointSystem(p, k, depth, rank, levels[::-1])


# ---------------------------------------------------------------- boundary function

def f_psi(t: Point, torus: TorusData, prec: int) -> NormOneElem:
    """(t - tau)/(t - conj tau), correct modulo p^prec."""
    if t is None:
        return NormOneElem(QuadExtElem.from_rationals(torus.p, prec, 1))
    work = prec + 8 + 2 * abs(valuation(t, torus.p)) if t != 0 else prec + 8
    for _ in range(4):
        tau, tau_bar = torus.fixed_points(work)
        num, den = tau * (-1) + Fraction(t), tau_bar * (-1) + Fraction(t)
        try:
            y = num / den
            if y.absolute_precision() >= prec:
                return NormOneElem(QuadExtElem(y.p, prec, y.u, 0, y.a % y.p ** prec, y.b % y.p ** prec))
        except PrecisionError:
            pass
        work *= 2
    raise PrecisionError(f"could not evaluate the boundary function at {t}")


def mobius_A_psi(t: Point, torus: TorusData, prec: int) -> NormOneElem:
    """Sends (tau, conj tau, infinity) to (0, infinity, 1); same formula as f_psi."""
    return f_psi(t, torus, prec)


def standard_sampler(ball: BoundaryBall) -> Point:
    return ball.sample()


def shifted_sampler(shift: int = 1) -> Callable[[BoundaryBall], Point]:
    """Another point of each ball: a p-adic step of the ball's size from the center."""
    def sample(ball: BoundaryBall) -> Point:
        step = Fraction(ball.p) ** ball.radius * shift
        if not ball.exterior:
            return ball.center + step
        # a point outside B(c, m): move the center by p^(m-1) * unit
        return ball.center + Fraction(ball.p) ** (ball.radius - 1) * (1 + ball.p * shift)
    return sample


# ---------------------------------------------------------------- integration

@dataclass
class TensorValue:
    """An element of A (x) (alpha-coordinate group Z/p^precision)."""

    coeffs: np.ndarray
    precision: int
    p: int

    def __eq__(self, other) -> bool:
        if not isinstance(other, TensorValue) or other.precision != self.precision:
            return NotImplemented
        mod = self.p ** self.precision
        return bool(np.array_equal(np.asarray(self.coeffs) % mod, np.asarray(other.coeffs) % mod))

    def reduce(self, precision: int) -> TensorValue:
        return TensorValue(np.asarray(self.coeffs) % self.p ** precision, precision, self.p)

    def is_zero(self) -> bool:
        return not np.any(np.asarray(self.coeffs) % self.p ** self.precision)


def integrate_mult(mu: HarmonicMeasure, f: Callable[[Point], NormOneElem], m: int,
                   level: int | None = None,
                   sampler: Callable[[BoundaryBall], Point] = standard_sampler,
                   convention: int = 1, orientation: int = 1) -> TensorValue:
    """Riemann product of f(t_U)^mu(U) over the covering C_level, as an
    alpha-coordinate vector modulo p^m.

    The coarsest usable level is m + 1; finer levels must give the same value.
    """
    torus = mu.torus
    p = torus.p
    n = m + 1 if level is None else level
    if n < m + 1:
        raise ValueError(f"level {n} too coarse for precision p^{m}")
    if n > mu.depth:
        raise InsufficientDepth(f"precision p^{m} needs measure depth {n}, have {mu.depth}")
    group = torus.group(n)
    mod = p ** m
    total = None
    for e, val in zip(level_edges(torus, n), mu.level(n)):
        t = sampler(ball_of_edge(e, orientation))
        coord = convention * group.p_part_log(f(t).residue_pair(n))
        term = np.asarray(val, dtype=object) * coord
        total = term if total is None else total + term
    coeffs = np.asarray(total % mod, dtype=np.int64)
    return TensorValue(coeffs, m, p)


def boundary_function(torus: TorusData, prec: int, orientation: int = 1) -> Callable[[Point], NormOneElem]:
    """f_psi in the boundary coordinate matching ``orientation``.

    For orientation -1 the fixed points are moved by t -> 1/(p t) and the
    formula is applied to those; it differs from f_psi o (1/(p t)) by a
    constant, which harmonic measures do not see.
    """
    if orientation == 1:
        return lambda t: f_psi(t, torus, prec)
    w = orientation_swap(torus.p)
    moved = TorusData(torus.p, _mat_mul(mat_inv(w), torus.g), torus.level)
    return lambda t: f_psi(t, moved, prec)


def _mat_mul(x, y):
    (a, b), (c, d) = x
    (e, f), (g, h) = y
    return (a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h)


# ---------------------------------------------------------------- Kolyvagin derivatives

@dataclass
class DerivedLevel:
    n: int
    raw: np.ndarray          # sum_j j * rho^j P_n with integer exponents, mod p^k
    value: np.ndarray        # raw reduced to the coordinate precision
    precision: int           # min(n - 1, k)


def kolyvagin_derivative(ps: PointSystem, n: int) -> DerivedLevel:
    """D_n = sum_j (rho^j . P_n) (x) j, computed as a cyclic convolution with the ramp."""
    if not 1 <= n <= ps.depth:
        raise ValueError(f"level {n} outside 1..{ps.depth}")
    P = ps.level(n)
    h = P.shape[0]
    # D[x] = sum_g P[g] * ((x - g) mod h)
    ramp = (np.arange(h)[:, None] - np.arange(h)[None, :]) % h
    raw = (ramp @ P) % ps.modulus
    prec = min(n - 1, ps.k)
    return DerivedLevel(n, raw, raw % ps.p ** prec, prec)


@dataclass
class DerivedInvariant:
    p: int
    k: int
    ladder: list[DerivedLevel]
    value: TensorValue
    stable_level: int | None
    certificate: list[tuple[int, bool]]
    convention: int = 1
    multiplier: int = 1
    eigen_sign: int | None = None
    notes: list[str] = field(default_factory=list)


def mock_invariant(ps: PointSystem, convention: int = 1, multiplier: int = 1,
                   a_p: int | None = None, eps: int | None = None) -> DerivedInvariant:
    """The Kolyvagin-derivative ladder and its stabilized value.

    The value is placed in A[G_N] (x) Z/p^min(N-1, k), N the depth, and carries
    the sign -convention so that it lines up with ``integrate_mult`` of f_psi
    against ``measure_from_point_system``.  The ord_p(q) ``multiplier`` is
    recorded, never applied.
    """
    validation = validate_point_system(ps)
    if not validation.ok:
        raise ValueError(f"invalid point system: {validation.detail}")
    p, depth = ps.p, ps.depth
    ladder = [kolyvagin_derivative(ps, n) for n in range(1, depth + 1)]
    certificate = []
    for lo, hi in zip(ladder, ladder[1:]):
        mod = p ** lo.precision
        same = np.array_equal(inflate(lo.raw, p, 1) % mod, hi.raw % mod)
        certificate.append((hi.n, bool(same)))
    top = ladder[-1]
    sign = -convention
    value = TensorValue((sign * top.value.reshape(-1)) % p ** top.precision, top.precision, p)
    stable = ps.k + 1 if depth >= ps.k + 1 else None
    inv = DerivedInvariant(p, ps.k, ladder, value, stable, certificate, convention, multiplier)
    if a_p is not None and eps is not None:
        inv.eigen_sign = -a_p * eps
    if stable is None:
        inv.notes.append(f"depth {depth} determines the invariant only mod p^{top.precision}")
    return inv


def measure_from_point_system(ps: PointSystem, torus: TorusData) -> HarmonicMeasure:
    """mu(U_{rho^j e_N}) = rho^j . P_N, valued in A[G_N] flattened."""
    if torus.p != ps.p:
        raise ValueError("prime mismatch")
    P = ps.level(ps.depth)
    values = [translate(P, j).reshape(-1) for j in range(P.shape[0])]
    return measure_from_sphere_values(torus, ps.depth, values, ps.modulus)
