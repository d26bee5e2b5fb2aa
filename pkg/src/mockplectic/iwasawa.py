"""Truncated Iwasawa algebra (Z/p^k)[T]/(T^n), kappa classes built from
point systems, bipartite reciprocity data and the Selmer rank bookkeeping."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .integrate import PointSystem, translate, validate_point_system

DEFAULT_TRUNCATION = 4


def binomial(j: int, i: int) -> int:
    """j choose i for any integer j (the coefficient of T^i in (1+T)^j)."""
    if j >= 0:
        return comb(j, i)
    # C(j, i) = (-1)^i C(i - j - 1, i)
    return (-1) ** i * comb(i - j - 1, i)


@dataclass(frozen=True)
class IwasawaElem:
    p: int
    k: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        mod = self.p ** self.k
        object.__setattr__(self, "coeffs", tuple(int(c) % mod for c in self.coeffs))

    @property
    def n(self) -> int:
        return len(self.coeffs)

    @property
    def modulus(self) -> int:
        return self.p ** self.k

    @classmethod
    def zero(cls, p: int, k: int, n: int = DEFAULT_TRUNCATION) -> IwasawaElem:
        return cls(p, k, (0,) * n)

    @classmethod
    def one(cls, p: int, k: int, n: int = DEFAULT_TRUNCATION) -> IwasawaElem:
        return cls(p, k, (1,) + (0,) * (n - 1))

    @classmethod
    def T(cls, p: int, k: int, n: int = DEFAULT_TRUNCATION) -> IwasawaElem:
        return cls(p, k, tuple(1 if i == 1 else 0 for i in range(n)))

    @classmethod
    def group_like(cls, p: int, k: int, j: int, n: int = DEFAULT_TRUNCATION) -> IwasawaElem:
        """(1 + T)^j truncated."""
        return cls(p, k, tuple(binomial(j, i) for i in range(n)))

    def _check(self, other: IwasawaElem) -> None:
        if (self.p, self.k, self.n) != (other.p, other.k, other.n):
            raise ValueError("incompatible truncations")

    def __add__(self, other: IwasawaElem) -> IwasawaElem:
        self._check(other)
        return IwasawaElem(self.p, self.k, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> IwasawaElem:
        return IwasawaElem(self.p, self.k, tuple(-a for a in self.coeffs))

    def __sub__(self, other: IwasawaElem) -> IwasawaElem:
        return self + (-other)

    def __mul__(self, other) -> IwasawaElem:
        if isinstance(other, int):
            return IwasawaElem(self.p, self.k, tuple(a * other for a in self.coeffs))
        self._check(other)
        n = self.n
        out = [0] * n
        for i, a in enumerate(self.coeffs):
            if a:
                for j in range(n - i):
                    out[i + j] += a * other.coeffs[j]
        return IwasawaElem(self.p, self.k, tuple(out))

    __rmul__ = __mul__

    def augmentation(self) -> int:
        return self.coeffs[0]

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_unit(self) -> bool:
        return self.coeffs[0] % self.p != 0


def ord_I(x: IwasawaElem) -> int:
    """Least i with a nonzero T^i coefficient; the truncation length if x = 0."""
    for i, c in enumerate(x.coeffs):
        if c:
            return i
    return x.n


def determinant(M: list[list[IwasawaElem]]) -> IwasawaElem:
    """Leibniz expansion; fine for the small presentations used here."""
    size = len(M)
    if any(len(row) != size for row in M):
        raise ValueError("matrix is not square")
    p, k, n = M[0][0].p, M[0][0].k, M[0][0].n
    total = IwasawaElem.zero(p, k, n)
    for perm in itertools.permutations(range(size)):
        sign = _perm_sign(perm)
        term = IwasawaElem.one(p, k, n)
        for i, j in enumerate(perm):
            term = term * M[i][j]
        total = total + term * sign
    return total


def _perm_sign(perm: tuple[int, ...]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def fitting_ord_I(M: list[list[IwasawaElem]]) -> int:
    """ord_I of the 0th Fitting ideal of a square presentation (its determinant)."""
    return ord_I(determinant(M))


def fitting_ord_I_minors(M: list[list[IwasawaElem]]) -> int:
    """For a presentation with more relations than generators: least ord_I over
    the maximal minors, an upper-bound surrogate for the characteristic order."""
    rows, cols = len(M), len(M[0])
    if rows < cols:
        raise ValueError("fewer relations than generators: the Fitting ideal is zero")
    return min(ord_I(determinant([M[i] for i in sub])) for sub in itertools.combinations(range(rows), cols))


# ---------------------------------------------------------------- kappa classes

@dataclass
class KappaClass:
    """sum_j (rho^j . P_n) (x) (1+T)^j, coefficients in A[G_n]; shape (n_trunc, |G_n|, r)."""

    p: int
    k: int
    level: int
    coeffs: np.ndarray
    multiplier: int
    a_p: int

    @property
    def truncation(self) -> int:
        return self.coeffs.shape[0]

    def augmentation(self) -> np.ndarray:
        return self.coeffs[0]

    def T_coefficient(self) -> np.ndarray:
        return self.coeffs[1]

    def scaled(self) -> np.ndarray:
        """multiplier * kappa; the ord_p(q) factor applied explicitly."""
        return self.coeffs * self.multiplier % self.p ** self.k

    def ord_I(self) -> int:
        for i, c in enumerate(self.coeffs):
            if np.any(c):
                return i
        return self.truncation


def kappa_from_system(ps: PointSystem, a_p: int, tate_val: int,
                      n_trunc: int = DEFAULT_TRUNCATION, level: int | None = None) -> KappaClass:
    """The kappa class of a (normalized) point system at ``level``.

    The a_p^(-n) normalization is assumed to be already folded into ``ps``
    (see ``PointSystem.from_unnormalized``); ``a_p`` is kept for the sign
    bookkeeping.  ``tate_val`` becomes the multiplier.
    """
    report = validate_point_system(ps)
    if not report.ok:
        raise ValueError(f"invalid point system: {report.detail}")
    if a_p not in (1, -1):
        raise ValueError("a_p must be +1 or -1 at a multiplicative prime")
    n = ps.depth if level is None else level
    P = ps.level(n)
    h = P.shape[0]
    mod = ps.modulus
    coeffs = np.zeros((n_trunc,) + P.shape, dtype=np.int64)
    for j in range(h):
        shifted = translate(P, j)
        for i in range(n_trunc):
            c = binomial(j, i) % mod
            if c:
                coeffs[i] = (coeffs[i] + c * shifted) % mod
    return KappaClass(ps.p, ps.k, n, coeffs, tate_val, a_p)


# ---------------------------------------------------------------- bipartite data

Index = frozenset


@dataclass
class BipartiteData:
    """kappa_m (vectors) for indefinite m, lambda_m (IwasawaElem) for definite m,
    and localization matrices loc[(m, l)] from the space of kappa_m to the
    coefficient vectors of Lambda / (p^k, T^d)."""

    p: int
    k: int
    primes: tuple[int, ...]
    kappas: dict[Index, np.ndarray] = field(default_factory=dict)
    lambdas: dict[Index, IwasawaElem] = field(default_factory=dict)
    locs: dict[tuple[Index, int], np.ndarray] = field(default_factory=dict)

    def parity(self, m: Index) -> str:
        return "definite" if len(m) % 2 else "indefinite"

    def indices(self) -> set[Index]:
        return set(self.kappas) | set(self.lambdas)


@dataclass
class BipartiteReport:
    checked: int
    failures: list[tuple[tuple[int, ...], int, str]]

    @property
    def ok(self) -> bool:
        return not self.failures


def _loc_apply(data: BipartiteData, n: Index, ell: int) -> IwasawaElem | None:
    if n not in data.kappas or (n, ell) not in data.locs:
        return None
    vec = data.locs[(n, ell)] @ data.kappas[n] % data.p ** data.k
    return IwasawaElem(data.p, data.k, tuple(int(c) for c in vec))


def validate_bipartite(data: BipartiteData) -> BipartiteReport:
    """Check loc_l(kappa_{ml}) = lambda_m (ml indefinite) and
    loc_l(kappa_m) = lambda_{ml} (ml definite) wherever the data are present."""
    for m in data.indices():
        expected = "definite" if len(m) % 2 else "indefinite"
        if (m in data.kappas and expected != "indefinite") or (m in data.lambdas and expected != "definite"):
            raise ValueError(f"parity tag inconsistent for {sorted(m)}")
    failures = []
    checked = 0
    for m in sorted(data.indices(), key=lambda s: (len(s), sorted(s))):
        for ell in data.primes:
            if ell in m:
                continue
            n = m | {ell}
            if n not in data.indices():
                continue
            if data.parity(n) == "indefinite":
                image, target = _loc_apply(data, n, ell), data.lambdas.get(m)
                relation = "loc(kappa_ml) = lambda_m"
            else:
                image, target = _loc_apply(data, m, ell), data.lambdas.get(n)
                relation = "loc(kappa_m) = lambda_ml"
            if image is None or target is None:
                continue
            checked += 1
            if image != target:
                failures.append((tuple(sorted(m)), ell, relation))
    return BipartiteReport(checked, failures)


def check_reduction(high: BipartiteData, low: BipartiteData) -> list[tuple[int, ...]]:
    """Indices whose data at precision k_high do not reduce to the data at k_low."""
    if low.k > high.k or low.p != high.p:
        raise ValueError("need the same p and k_low <= k_high")
    mod = low.p ** low.k
    bad = []
    for m, vec in high.kappas.items():
        if m in low.kappas and np.any((vec - low.kappas[m]) % mod):
            bad.append(tuple(sorted(m)))
    for m, lam in high.lambdas.items():
        if m in low.lambdas and any((a - b) % mod for a, b in zip(lam.coeffs, low.lambdas[m].coeffs)):
            bad.append(tuple(sorted(m)))
    return sorted(bad)


def synthetic_bipartite(p: int, k: int, primes: tuple[int, ...], rank: int = 3, d: int = DEFAULT_TRUNCATION,
                        rng: np.random.Generator | None = None) -> BipartiteData:
    """A consistent instance: random kappas and lambdas, with one column of
    each localization matrix back-solved so every reciprocity law holds."""
    rng = np.random.default_rng() if rng is None else rng
    mod = p ** k
    data = BipartiteData(p, k, tuple(primes))
    subsets = [frozenset(c) for r in range(len(primes) + 1) for c in itertools.combinations(primes, r)]
    for m in subsets:
        if len(m) % 2 == 0:
            vec = rng.integers(0, mod, size=rank)
            vec[0] = 1  # a unit coordinate makes the back-solve possible
            data.kappas[m] = vec
        else:
            data.lambdas[m] = IwasawaElem(p, k, tuple(int(x) for x in rng.integers(0, mod, size=d)))
    for n in data.kappas:
        for ell in primes:
            definite = n - {ell} if ell in n else n | {ell}
            target = np.array(data.lambdas[definite].coeffs, dtype=np.int64)
            mat = rng.integers(0, mod, size=(d, rank))
            mat[:, 0] = (target - mat[:, 1:] @ data.kappas[n][1:]) % mod
            data.locs[(n, ell)] = mat
    return data


# ---------------------------------------------------------------- rank bookkeeping

class RankBoundRefused(ValueError):
    """kappa vanishes in the truncation, so no bound follows."""


@dataclass
class RankReport:
    ord_kappa: int
    char_order_bound: int
    rank_bound: int
    verdict: str


def rank_bound(ord_kappa: int | None, truncation: int | None = None) -> RankReport:
    """rank X_G <= 1 + ord_I(char) <= 1 + 2 ord_I(kappa)."""
    if ord_kappa is None or ord_kappa < 0 or (truncation is not None and ord_kappa >= truncation):
        raise RankBoundRefused("kappa is zero in the truncation; no bound")
    bound = 1 + 2 * ord_kappa
    return RankReport(ord_kappa, 2 * ord_kappa, bound, f"r_p(E/K) <= {bound}")


@dataclass
class SplitTable:
    eps: int
    a_p: int
    forced_sign: int
    candidates: list[tuple[int, int]]
    maxima: dict[tuple[int, int], int] = field(default_factory=dict)


def selmer_split_table(eps: int, a_p: int, deltas: tuple[int, int] | None = None,
                       r_total: int = 2) -> SplitTable:
    """(r+, r-) with r+ + r- = r_total, each of parity matching eps, and
    r >= 1 on the side forced by the sign -a_p eps."""
    if eps not in (1, -1) or a_p not in (1, -1):
        raise ValueError("eps and a_p must be +1 or -1")
    forced = -a_p * eps
    cands = []
    for r_plus in range(r_total + 1):
        r_minus = r_total - r_plus
        if any((-1) ** r != eps for r in (r_plus, r_minus)):
            continue
        if (r_plus if forced == 1 else r_minus) < 1:
            continue
        cands.append((r_plus, r_minus))
    table = SplitTable(eps, a_p, forced, cands)
    if deltas is not None:
        for c in cands:
            table.maxima[c] = max(c[0] + deltas[0], c[1] + deltas[1])
    return table
