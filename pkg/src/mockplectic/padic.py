"""Exact p-adic arithmetic at fixed precision.

Covers Z/p^k, Q_p with valuation, the unramified quadratic extension
Q_p(sqrt(u)) with u the least quadratic non-residue, its norm-one subgroup,
and the integer helpers the rest of the package leans on.

Precision is relative for nonzero values: ``PadicElem(p, k, v, w)`` means
p^v * w with w a unit known modulo p^k.  A zero value carries an infinite
valuation flag (``val is None``) and its ``k`` is the absolute precision,
i.e. the value is only known to be divisible by p^k.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from sympy import factorint, isprime, primerange
from sympy.ntheory import sqrt_mod


class PrecisionError(ArithmeticError):
    """Raised when an operation would return a value with no correct digits."""


# ---------------------------------------------------------------- integers

def is_prime(n: int) -> bool:
    return bool(isprime(n))


def primes_up_to(bound: int) -> list[int]:
    return list(primerange(2, bound + 1))


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of a nonzero integer as {prime: exponent}; sign dropped."""
    if n == 0:
        raise ValueError("cannot factor 0")
    return {int(q): int(e) for q, e in factorint(abs(n)).items() if q > 1}


def valuation(x: int | Fraction, p: int) -> int:
    x = Fraction(x)
    if x == 0:
        raise ValueError("valuation of 0 is infinite")
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def val_unit(x: int | Fraction, p: int) -> tuple[int, Fraction]:
    """Split x = p^v * w with w a p-adic unit."""
    v = valuation(x, p)
    w = Fraction(x) / Fraction(p) ** v
    return v, (w.numerator if w.denominator == 1 else w)


def residue(x: int | Fraction, modulus: int) -> int:
    """Image of a p-integral rational in Z/modulus."""
    x = Fraction(x)
    return x.numerator * pow(x.denominator, -1, modulus) % modulus


def legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for n >= 1, multiplicative in both arguments."""
    if n <= 0:
        raise ValueError("n must be positive")
    result = 1
    # strip the 2-part of n first: (a/2) depends on a mod 8
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            result = -result
    # Jacobi symbol for the odd part via reciprocity
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


@lru_cache(maxsize=None)
def smallest_nonresidue(p: int) -> int:
    for u in range(2, p):
        if legendre(u, p) == -1:
            return u
    raise ValueError(f"no non-residue mod {p}")


def _check_prime(p: int) -> None:
    if p < 5 or not is_prime(p):
        raise ValueError(f"p must be a prime >= 5, got {p}")


def _strip(p: int, *xs: int) -> tuple[int, tuple[int, ...]]:
    """Remove the common p-power from nonnegative residues (not all zero)."""
    w = 0
    while all(x % p == 0 for x in xs):
        xs = tuple(x // p for x in xs)
        w += 1
    return w, xs


# ---------------------------------------------------------------- Q_p

@dataclass(frozen=True)
class PadicElem:
    p: int
    k: int
    val: int | None
    unit: int = 0

    def __post_init__(self):
        if self.val is not None:
            if self.k <= 0:
                raise PrecisionError("nonzero value with no precision")
            if self.unit % self.p == 0:
                raise ValueError("unit part must be invertible mod p")

    @classmethod
    def from_rational(cls, x: int | Fraction, p: int, k: int) -> PadicElem:
        x = Fraction(x)
        if x == 0:
            return cls(p, k, None, 0)
        v, w = val_unit(x, p)
        return cls(p, k, v, residue(w, p ** k))

    @classmethod
    def zero(cls, p: int, k: int) -> PadicElem:
        return cls(p, k, None, 0)

    def is_zero(self) -> bool:
        return self.val is None

    def absolute_precision(self) -> int:
        return self.k if self.val is None else self.val + self.k

    def _coerce(self, other) -> PadicElem:
        if isinstance(other, PadicElem):
            if other.p != self.p:
                raise ValueError("mixed primes")
            return other
        return PadicElem.from_rational(other, self.p, self.absolute_precision() + 64)

    def __neg__(self) -> PadicElem:
        if self.val is None:
            return self
        return PadicElem(self.p, self.k, self.val, -self.unit % self.p ** self.k)

    def __add__(self, other) -> PadicElem:
        o = self._coerce(other)
        p = self.p
        prec = min(self.absolute_precision(), o.absolute_precision())
        terms = [x for x in (self, o) if x.val is not None and x.val < prec]
        if not terms:
            return PadicElem.zero(p, prec)
        v = min(x.val for x in terms)
        mod = p ** (prec - v)
        s = sum(x.unit * p ** (x.val - v) for x in terms) % mod
        if s == 0:
            return PadicElem.zero(p, prec)
        w, (s,) = _strip(p, s)
        rel = prec - v - w
        return PadicElem(p, rel, v + w, s % p ** rel)

    __radd__ = __add__

    def __sub__(self, other) -> PadicElem:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> PadicElem:
        return self._coerce(other) - self

    def __mul__(self, other) -> PadicElem:
        o = self._coerce(other)
        if self.val is None or o.val is None:
            prec = 0
            for x, y in ((self, o), (o, self)):
                if x.val is None:
                    prec = max(prec, x.k + (y.val if y.val is not None else y.k))
            return PadicElem.zero(self.p, prec)
        k = min(self.k, o.k)
        return PadicElem(self.p, k, self.val + o.val, self.unit * o.unit % self.p ** k)

    __rmul__ = __mul__

    def inverse(self) -> PadicElem:
        if self.val is None:
            raise PrecisionError("inverse of an element indistinguishable from 0")
        return PadicElem(self.p, self.k, -self.val, pow(self.unit, -1, self.p ** self.k))

    def __truediv__(self, other) -> PadicElem:
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other) -> PadicElem:
        return self._coerce(other) * self.inverse()

    def __pow__(self, e: int) -> PadicElem:
        if e < 0:
            return self.inverse() ** (-e)
        if self.val is None:
            return self if e else PadicElem(self.p, self.k, 0, 1)
        return PadicElem(self.p, self.k, self.val * e, pow(self.unit, e, self.p ** self.k))

    def to_fraction(self) -> Fraction:
        if self.val is None:
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.p) ** self.val

    def equals(self, other, prec: int | None = None) -> bool:
        """Equality modulo p^prec (default: the common absolute precision)."""
        diff = self - self._coerce(other)
        if prec is None:
            return diff.val is None
        return diff.val is None and diff.k >= prec or diff.val is not None and diff.val >= prec

    def __repr__(self) -> str:
        if self.val is None:
            return f"O({self.p}^{self.k})"
        return f"{self.unit}*{self.p}^{self.val} + O({self.p}^{self.val + self.k})"


# ---------------------------------------------------------------- K_p

@dataclass(frozen=True)
class QuadExtElem:
    """p^val * (a + b*sqrt(u)) with (a, b) mod p^k, not both divisible by p."""

    p: int
    k: int
    u: int
    val: int | None
    a: int = 0
    b: int = 0

    def __post_init__(self):
        if self.val is not None:
            if self.k <= 0:
                raise PrecisionError("nonzero value with no precision")
            if self.a % self.p == 0 and self.b % self.p == 0:
                raise ValueError("coordinates must not both be divisible by p")

    @classmethod
    def from_rationals(cls, p: int, k: int, x: int | Fraction = 0,
                       y: int | Fraction = 0, u: int | None = None) -> QuadExtElem:
        u = smallest_nonresidue(p) if u is None else u
        x, y = Fraction(x), Fraction(y)
        if x == 0 and y == 0:
            return cls(p, k, u, None)
        v = min(valuation(z, p) for z in (x, y) if z != 0)
        scale = Fraction(p) ** v
        mod = p ** k
        return cls(p, k, u, v, residue(x / scale, mod), residue(y / scale, mod))

    @classmethod
    def sqrt_u(cls, p: int, k: int) -> QuadExtElem:
        return cls.from_rationals(p, k, 0, 1)

    def is_zero(self) -> bool:
        return self.val is None

    def absolute_precision(self) -> int:
        return self.k if self.val is None else self.val + self.k

    def _coerce(self, other) -> QuadExtElem:
        if isinstance(other, QuadExtElem):
            if (other.p, other.u) != (self.p, self.u):
                raise ValueError("mixed fields")
            return other
        if isinstance(other, PadicElem):
            if other.val is None:
                return QuadExtElem(self.p, other.k, self.u, None)
            return QuadExtElem(self.p, other.k, self.u, other.val, other.unit, 0)
        return QuadExtElem.from_rationals(self.p, self.absolute_precision() + 64, other, 0, self.u)

    def coords(self) -> tuple[PadicElem, PadicElem]:
        """The base-field coordinates (x, y) of x + y*sqrt(u)."""
        if self.val is None:
            z = PadicElem.zero(self.p, self.k)
            return z, z
        out = []
        for c in (self.a, self.b):
            if c == 0:
                out.append(PadicElem.zero(self.p, self.val + self.k))
            else:
                w, (c,) = _strip(self.p, c)
                out.append(PadicElem(self.p, self.k - w, self.val + w, c % self.p ** (self.k - w)))
        return out[0], out[1]

    def conj(self) -> QuadExtElem:
        if self.val is None:
            return self
        return QuadExtElem(self.p, self.k, self.u, self.val, self.a, -self.b % self.p ** self.k)

    def norm(self) -> PadicElem:
        if self.val is None:
            return PadicElem.zero(self.p, 2 * self.k)
        mod = self.p ** self.k
        return PadicElem(self.p, self.k, 2 * self.val, (self.a * self.a - self.u * self.b * self.b) % mod)

    def __neg__(self) -> QuadExtElem:
        if self.val is None:
            return self
        mod = self.p ** self.k
        return QuadExtElem(self.p, self.k, self.u, self.val, -self.a % mod, -self.b % mod)

    def __add__(self, other) -> QuadExtElem:
        o = self._coerce(other)
        p = self.p
        prec = min(self.absolute_precision(), o.absolute_precision())
        terms = [x for x in (self, o) if x.val is not None and x.val < prec]
        if not terms:
            return QuadExtElem(p, prec, self.u, None)
        v = min(x.val for x in terms)
        mod = p ** (prec - v)
        sa = sum(x.a * p ** (x.val - v) for x in terms) % mod
        sb = sum(x.b * p ** (x.val - v) for x in terms) % mod
        if sa == 0 and sb == 0:
            return QuadExtElem(p, prec, self.u, None)
        w, (sa, sb) = _strip(p, sa, sb)
        rel = prec - v - w
        return QuadExtElem(p, rel, self.u, v + w, sa % p ** rel, sb % p ** rel)

    __radd__ = __add__

    def __sub__(self, other) -> QuadExtElem:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> QuadExtElem:
        return self._coerce(other) - self

    def __mul__(self, other) -> QuadExtElem:
        o = self._coerce(other)
        if self.val is None or o.val is None:
            prec = 0
            for x, y in ((self, o), (o, self)):
                if x.val is None:
                    prec = max(prec, x.k + (y.val if y.val is not None else y.k))
            return QuadExtElem(self.p, prec, self.u, None)
        k = min(self.k, o.k)
        mod = self.p ** k
        a = (self.a * o.a + self.u * self.b * o.b) % mod
        b = (self.a * o.b + self.b * o.a) % mod
        # a product of units is a unit because the extension is unramified
        return QuadExtElem(self.p, k, self.u, self.val + o.val, a, b)

    __rmul__ = __mul__

    def inverse(self) -> QuadExtElem:
        if self.val is None:
            raise PrecisionError("inverse of an element indistinguishable from 0")
        mod = self.p ** self.k
        n_inv = pow((self.a * self.a - self.u * self.b * self.b) % mod, -1, mod)
        return QuadExtElem(self.p, self.k, self.u, -self.val, self.a * n_inv % mod, -self.b * n_inv % mod)

    def __truediv__(self, other) -> QuadExtElem:
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other) -> QuadExtElem:
        return self._coerce(other) * self.inverse()

    def __pow__(self, e: int) -> QuadExtElem:
        if e < 0:
            return self.inverse() ** (-e)
        result = QuadExtElem.from_rationals(self.p, self.k, 1, 0, self.u)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def in_base_field(self) -> bool:
        return self.val is None or self.b == 0

    def residue_pair(self, n: int) -> tuple[int, int]:
        """(a, b) mod p^n for an integral element known to precision >= n."""
        if self.val is None:
            if self.k < n:
                raise PrecisionError(f"zero known only mod p^{self.k}")
            return 0, 0
        if self.val < 0:
            raise ValueError("element is not integral")
        if self.val + self.k < n:
            raise PrecisionError(f"need precision {n}, have {self.val + self.k}")
        mod = self.p ** n
        scale = self.p ** self.val
        return self.a * scale % mod, self.b * scale % mod

    def equals(self, other, prec: int | None = None) -> bool:
        diff = self - self._coerce(other)
        if prec is None:
            return diff.val is None
        return diff.val is None and diff.k >= prec or diff.val is not None and diff.val >= prec

    def __repr__(self) -> str:
        if self.val is None:
            return f"O({self.p}^{self.k})"
        return f"{self.p}^{self.val}*({self.a} + {self.b}*sqrt({self.u})) + O({self.p}^{self.val + self.k})"


@dataclass(frozen=True)
class NormOneElem:
    """An element of K_p with norm 1 at its working precision."""

    x: QuadExtElem

    def __post_init__(self):
        n = self.x.norm()
        if self.x.val != 0 or not n.equals(1, self.x.k):
            raise ValueError(f"{self.x} does not have norm one")

    def __mul__(self, other: NormOneElem) -> NormOneElem:
        return NormOneElem(self.x * other.x)

    def inverse(self) -> NormOneElem:
        return NormOneElem(self.x.conj())

    def __pow__(self, e: int) -> NormOneElem:
        return NormOneElem(self.x ** e)

    def residue_pair(self, n: int) -> tuple[int, int]:
        return self.x.residue_pair(n)

    def equals(self, other: NormOneElem, prec: int | None = None) -> bool:
        return self.x.equals(other.x, prec)


def norm_one_project(y: QuadExtElem) -> NormOneElem:
    """y / conj(y); kills exactly the base field."""
    if y.val is None:
        raise PrecisionError("cannot project an element indistinguishable from 0")
    return NormOneElem(y / y.conj())


# ---------------------------------------------------------------- norm-one group mod p^n

def _prime_divisors(n: int) -> list[int]:
    return sorted(factorize(n))


def _mul_pair(x: tuple[int, int], y: tuple[int, int], u: int, mod: int) -> tuple[int, int]:
    return (x[0] * y[0] + u * x[1] * y[1]) % mod, (x[0] * y[1] + x[1] * y[0]) % mod


def _pow_pair(x: tuple[int, int], e: int, u: int, mod: int) -> tuple[int, int]:
    result = (1 % mod, 0)
    while e:
        if e & 1:
            result = _mul_pair(result, x, u, mod)
        x = _mul_pair(x, x, u, mod)
        e >>= 1
    return result


@lru_cache(maxsize=None)
def norm_one_generator(p: int, n: int) -> tuple[int, int]:
    """Least (a, b) in lexicographic order with a^2 - u b^2 = 1 generating the
    norm-one units of O/p^n, a cyclic group of order (p+1) p^(n-1)."""
    _check_prime(p)
    u = smallest_nonresidue(p)
    mod = p ** n
    order = (p + 1) * p ** (n - 1)
    cofactors = [order // q for q in _prime_divisors(order)]
    inv_u = pow(u, -1, mod)
    for a in range(mod):
        target = (a * a - 1) * inv_u % mod
        roots = sqrt_mod(target, mod, all_roots=True) if target else [0]
        for b in sorted(int(r) for r in roots):
            if (a * a - u * b * b) % mod != 1:
                continue
            if all(_pow_pair((a, b), c, u, mod) != (1 % mod, 0) for c in cofactors):
                return a, b
    raise ArithmeticError("norm-one group is not cyclic")  # unreachable for odd p


class NormOneGroup:
    """The cyclic group of norm-one units of O/p^n with a chosen generator.

    ``log`` returns the exponent of an element with respect to the generator.
    """

    def __init__(self, p: int, n: int, generator: tuple[int, int] | None = None):
        _check_prime(p)
        self.p, self.n = p, n
        self.u = smallest_nonresidue(p)
        self.modulus = p ** n
        self.order = (p + 1) * p ** (n - 1)
        if generator is None:
            generator = norm_one_generator(p, n)
        self.generator = (generator[0] % self.modulus, generator[1] % self.modulus)
        self._powers: list[tuple[int, int]] = []
        x = (1 % self.modulus, 0)
        for _ in range(self.order):
            self._powers.append(x)
            x = _mul_pair(x, self.generator, self.u, self.modulus)
        self._log = {x: j for j, x in enumerate(self._powers)}
        if len(self._log) != self.order:
            raise ValueError(f"{generator} does not generate the norm-one group mod {p}^{n}")

    def power(self, j: int) -> tuple[int, int]:
        return self._powers[j % self.order]

    def log(self, pair: tuple[int, int]) -> int:
        key = (pair[0] % self.modulus, pair[1] % self.modulus)
        try:
            return self._log[key]
        except KeyError:
            raise ValueError(f"{pair} is not a norm-one unit mod {self.p}^{self.n}") from None

    def p_part_log(self, pair: tuple[int, int]) -> int:
        """Exponent modulo p^(n-1): the prime-to-p torsion is killed."""
        return self.log(pair) % self.p ** (self.n - 1)
