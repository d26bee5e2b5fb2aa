"""Elliptic curves over Q at desk scale: point counts, reduction types,
quadratic twists, root numbers and central L-values."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .padic import factorize, is_prime, kronecker, legendre, primes_up_to, valuation


@dataclass(frozen=True)
class CurveModel:
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    conductor: int
    label: str = ""
    asserted: tuple[tuple[str, str], ...] = ()

    @property
    def b2(self) -> int:
        return self.a1 ** 2 + 4 * self.a2

    @property
    def b4(self) -> int:
        return 2 * self.a4 + self.a1 * self.a3

    @property
    def b6(self) -> int:
        return self.a3 ** 2 + 4 * self.a6

    @property
    def b8(self) -> int:
        a1, a2, a3, a4, a6 = self.ainvs
        return a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4

    @property
    def c4(self) -> int:
        return self.b2 ** 2 - 24 * self.b4

    @property
    def c6(self) -> int:
        return -self.b2 ** 3 + 36 * self.b2 * self.b4 - 216 * self.b6

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @property
    def ainvs(self) -> tuple[int, int, int, int, int]:
        return self.a1, self.a2, self.a3, self.a4, self.a6

    def flag(self, name: str) -> str | None:
        return dict(self.asserted).get(name)

    def validate(self) -> list[str]:
        """Violations of the model identities and of the conductor pattern."""
        problems = []
        if 4 * self.b8 != self.b2 * self.b6 - self.b4 ** 2:
            problems.append("4 b8 != b2 b6 - b4^2")
        if 1728 * self.discriminant != self.c4 ** 3 - self.c6 ** 2:
            problems.append("1728 disc != c4^3 - c6^2")
        disc = self.discriminant
        if disc == 0:
            problems.append("singular curve")
            return problems
        if self.conductor <= 0:
            problems.append("conductor must be positive")
            return problems
        for ell, e in factorize(self.conductor).items():
            if ell == 2 or e > 1:
                continue
            if disc % ell:
                problems.append(f"{ell} divides the conductor but not the discriminant")
            elif self.c4 % ell == 0:
                problems.append(f"{ell} || conductor but reduction is not multiplicative")
        for ell in factorize(disc):
            if self.conductor % ell and ell > 3:
                problems.append(f"{ell} divides the discriminant but not the conductor")
        for ell in factorize(disc):
            if ell == 2:
                continue
            if self.c4 % ell ** 4 == 0 and self.c6 % ell ** 6 == 0:
                problems.append(f"model is not minimal at {ell}")
        return problems


def curve_from_c4c6(c4: int, c6: int, conductor: int, label: str = "") -> CurveModel:
    """An integral Weierstrass model with the given invariants (Kraus conditions)."""
    if (c4 ** 3 - c6 ** 2) % 1728 or c4 ** 3 == c6 ** 2:
        raise ValueError("invariants do not define an elliptic curve")
    if c6 % 9 == 0 and c6 % 27 != 0:
        raise ValueError("Kraus condition at 3 fails")
    ok2 = c6 % 4 == 3 or (c4 % 16 == 0 and c6 % 32 in (0, 8))
    if not ok2:
        raise ValueError("Kraus condition at 2 fails")
    b2 = (-c6) % 12
    if b2 > 6:
        b2 -= 12
    b4 = (b2 * b2 - c4) // 24
    b6 = (-b2 ** 3 + 36 * b2 * b4 - c6) // 216
    a1 = b2 % 2
    a2 = (b2 - a1) // 4
    a3 = b6 % 2
    a4 = (b4 - a1 * a3) // 2
    a6 = (b6 - a3) // 4
    curve = CurveModel(a1, a2, a3, a4, a6, conductor, label)
    if (curve.c4, curve.c6) != (c4, c6):
        raise ValueError("no integral model with these invariants")
    return curve


# ---------------------------------------------------------------- point counts

def _count_trace(E: CurveModel, ell: int) -> int:
    """ell + 1 - #E(F_ell), the singular point included; the model must be
    minimal at ell for this to be a_ell at a bad prime."""
    a1, a2, a3, a4, a6 = (c % ell for c in E.ainvs)
    if ell == 2:
        affine = sum(1 for x in range(2) for y in range(2)
                     if (y * y + a1 * x * y + a3 * y - x ** 3 - a2 * x * x - a4 * x - a6) % 2 == 0)
        return ell - affine
    total = 0
    for x in range(ell):
        # y^2 + (a1 x + a3) y - rhs = 0 has 1 + legendre(disc) roots
        lin = a1 * x + a3
        rhs = x * x * x + a2 * x * x + a4 * x + a6
        total += legendre(lin * lin + 4 * rhs, ell)
    return -total


def ap_count(E: CurveModel, ell: int) -> int:
    if not is_prime(ell):
        raise ValueError(f"{ell} is not prime")
    if E.conductor % ell == 0 or E.discriminant % ell == 0:
        raise ValueError(f"{ell} is a bad prime for {E.label or E.ainvs}")
    return _count_trace(E, ell)


@dataclass(frozen=True)
class ReductionInfo:
    p: int
    kind: str          # good, split-mult, nonsplit-mult, additive
    a_p: int
    tate_val: int


def reduction_type(E: CurveModel, p: int) -> ReductionInfo:
    if p in (2, 3):
        raise ValueError("reduction types at 2 and 3 are not supported")
    disc = E.discriminant
    if disc % p:
        return ReductionInfo(p, "good", _count_trace(E, p), 0)
    if E.c4 % p == 0:
        return ReductionInfo(p, "additive", 0, 0)
    split = legendre(-E.c6, p) == 1
    return ReductionInfo(p, "split-mult" if split else "nonsplit-mult", 1 if split else -1, valuation(disc, p))


def bad_ap(E: CurveModel, ell: int) -> int:
    """a_ell at a prime dividing the conductor."""
    if E.conductor % (ell * ell) == 0:
        return 0
    if ell >= 5:
        return reduction_type(E, ell).a_p
    return _count_trace(E, ell)


def is_fundamental(D: int) -> bool:
    if D == 1:
        return True
    if D % 4 == 1:
        return _squarefree(D)
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and _squarefree(m)
    return False


def _squarefree(n: int) -> bool:
    return n != 0 and all(e == 1 for e in factorize(n).values())


def quadratic_twist(E: CurveModel, D: int) -> CurveModel:
    """The twist by the character of Q(sqrt(D)); (c4, c6) -> (c4 D^2, c6 D^3).

    The conductor is N D^2, valid when D is prime to N (the only case needed).
    """
    if not is_fundamental(D):
        raise ValueError(f"{D} is not a fundamental discriminant")
    if D == 1:
        return E
    if math.gcd(D, E.conductor) != 1:
        raise ValueError("twisting by a discriminant that shares primes with N is not supported")
    label = f"{E.label}^({D})" if E.label else ""
    return curve_from_c4c6(E.c4 * D * D, E.c6 * D ** 3, E.conductor * D * D, label)


# ---------------------------------------------------------------- root numbers

def _require_semistable(E: CurveModel) -> None:
    if not _squarefree(E.conductor):
        raise ValueError("root numbers are computed only for semistable curves")


def root_number(E: CurveModel) -> int:
    """-prod w_ell, w_ell = -1 at split and +1 at nonsplit primes."""
    _require_semistable(E)
    eps = -1
    for ell in factorize(E.conductor):
        eps *= -bad_ap(E, ell)
    return eps


def root_number_twist(E: CurveModel, D: int) -> int:
    """eps(E^D) = eps(E) chi_D(-N) for D prime to the semistable conductor N."""
    if math.gcd(D, E.conductor) != 1:
        raise ValueError("D must be prime to the conductor")
    return root_number(E) * kronecker(D, E.conductor) * (1 if D > 0 else -1)


def root_number_over_K(E: CurveModel, D: int) -> int:
    return root_number(E) * root_number_twist(E, D)


def delta_p(E: CurveModel, p: int) -> int:
    info = reduction_type(E, p)
    if info.kind not in ("split-mult", "nonsplit-mult"):
        raise ValueError(f"{p} is not a multiplicative prime")
    return 1 if info.a_p == 1 else 0


def mod_p_ramified_at(E: CurveModel, ell: int, p: int) -> bool:
    """Tate-curve criterion: p does not divide ord_ell(disc); a sufficient condition."""
    if E.conductor % ell or E.conductor % (ell * ell) == 0:
        raise ValueError(f"{ell} must divide the conductor exactly once")
    return valuation(E.discriminant, ell) % p != 0


# ---------------------------------------------------------------- L-values

def an_coefficients(E: CurveModel, bound: int) -> list[int]:
    """a_1 .. a_bound (index 0 unused) by multiplicativity."""
    a = [0] * (bound + 1)
    a[1] = 1 if bound >= 1 else 0
    for ell in primes_up_to(bound):
        if E.conductor % ell == 0:
            ap = bad_ap(E, ell)
            powers = [1, ap]
            while ell ** len(powers) <= bound:
                powers.append(powers[-1] * ap)
        else:
            ap = _count_trace(E, ell)
            powers = [1, ap]
            while ell ** len(powers) <= bound:
                powers.append(ap * powers[-1] - ell * powers[-2])
        # fill multiplicatively: a_{m ell^e} = a_m a_{ell^e} for ell not dividing m
        for m in range(1, bound // ell + 1):
            if m % ell == 0 or a[m] == 0:
                continue
            q, e = ell, 1
            while m * q <= bound:
                a[m * q] = a[m] * powers[e]
                q *= ell
                e += 1
    return a


@dataclass
class LValue:
    value: float
    bound: float
    terms: int
    root_number: int
    exact_zero: bool = False

    def vanishes(self, threshold: float) -> bool:
        return self.exact_zero or abs(self.value) + self.bound < threshold

    def nonvanishing(self, threshold: float) -> bool:
        return not self.exact_zero and abs(self.value) - self.bound > threshold


MAX_TERMS = 10 ** 6


def l_value(E: CurveModel, tolerance: float = 1e-6, eps: int | None = None) -> LValue:
    """L(E, 1) by the rapidly converging series, with a rigorous tail bound.

    Uses |a_n| <= d(n) sqrt(n) <= 2n, so the tail past M is at most
    (1 + eps) * 2 * r^(M+1) / (1 - r) with r = exp(-2 pi / sqrt(N)).
    """
    if eps is None:
        eps = root_number(E)
    if eps == -1:
        return LValue(0.0, 0.0, 0, -1, exact_zero=True)
    N = E.conductor
    r = math.exp(-2 * math.pi / math.sqrt(N))
    M = 1
    while 4 * r ** (M + 1) / (1 - r) >= tolerance:
        M += 1
        if M > MAX_TERMS:
            raise ArithmeticError("tail bound not achievable within the term cap")
    a = an_coefficients(E, M)
    total = math.fsum(a[n] / n * r ** n for n in range(1, M + 1))
    bound = 4 * r ** (M + 1) / (1 - r)
    return LValue(2 * total, bound, M, 1)


@lru_cache(maxsize=None)
def _cached_twist(E: CurveModel, D: int) -> CurveModel:
    return quadratic_twist(E, D)


def l_value_over_K(E: CurveModel, D: int, tolerance: float = 1e-6) -> tuple[LValue, LValue]:
    """(L(E, 1), L(E^D, 1)); their product is L(E/K, 1)."""
    twist = _cached_twist(E, D)
    return l_value(E, tolerance), l_value(twist, tolerance, eps=root_number_twist(E, D))
