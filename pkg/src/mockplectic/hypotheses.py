"""Imaginary quadratic field data, the factorization N = p N+ N-, the
hypothesis checklist, the admissible-prime sieve and level-raising tables."""
from __future__ import annotations

from dataclasses import dataclass, field

from .curves import (
    CurveModel,
    _count_trace,
    bad_ap,
    is_fundamental,
    mod_p_ramified_at,
    reduction_type,
    root_number_over_K,
)
from .padic import factorize, is_prime, kronecker, primes_up_to

EXCLUDED_DISCRIMINANTS = (-3, -4)


@dataclass(frozen=True)
class FieldData:
    D: int

    def __post_init__(self):
        if self.D >= 0 or not is_fundamental(self.D):
            raise ValueError(f"{self.D} is not a negative fundamental discriminant")

    @property
    def extra_units(self) -> bool:
        return self.D in EXCLUDED_DISCRIMINANTS

    def splitting(self, ell: int) -> str:
        s = kronecker(self.D, ell)
        return {1: "split", -1: "inert", 0: "ramified"}[s]


@dataclass(frozen=True)
class Factorization:
    p: int
    n_plus: int
    n_minus: int
    witness: tuple[tuple[int, str], ...]

    def recompose(self) -> int:
        return self.p * self.n_plus * self.n_minus


def factor_N(E: CurveModel, K: FieldData, p: int) -> Factorization:
    N = E.conductor
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if N % p or N % (p * p) == 0:
        raise ValueError(f"{p} must divide the conductor exactly once")
    n_plus, n_minus = 1, 1
    witness = []
    for ell, e in sorted(factorize(N // p).items()):
        kind = K.splitting(ell)
        witness.append((ell, kind))
        if kind == "ramified":
            raise ValueError(f"{ell} divides N and ramifies in K")
        if kind == "inert":
            if e > 1:
                raise ValueError(f"inert prime {ell} divides N to order {e}")
            n_minus *= ell
        else:
            n_plus *= ell ** e
    witness.append((p, K.splitting(p)))
    return Factorization(p, n_plus, n_minus, tuple(sorted(witness)))


# ---------------------------------------------------------------- checklist

@dataclass
class CheckLine:
    name: str
    status: str      # PASS, FAIL or ASSERTED
    detail: str

    def __str__(self) -> str:
        return f"{self.name}: {self.status} - {self.detail}"


@dataclass
class HypothesisReport:
    lines: list[CheckLine] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(line.status != "FAIL" for line in self.lines)

    def status(self, name: str) -> str:
        return next(line.status for line in self.lines if line.name == name)

    def __str__(self) -> str:
        return "\n".join(str(line) for line in self.lines)


def check_hypotheses(E: CurveModel, D: int, p: int, asserted: dict[str, str] | None = None) -> HypothesisReport:
    asserted = dict(E.asserted) | (asserted or {})
    rep = HypothesisReport()

    def add(name: str, ok: bool, detail: str) -> None:
        rep.lines.append(CheckLine(name, "PASS" if ok else "FAIL", detail))

    add("p_at_least_5", p >= 5 and is_prime(p), f"p = {p}")
    try:
        K = FieldData(D)
    except ValueError as exc:
        add("field", False, str(exc))
        return rep
    add("p_inert", K.splitting(p) == "inert", f"kronecker({D}, {p}) = {kronecker(D, p)}")
    if p >= 5:
        info = reduction_type(E, p)
        add("multiplicative_at_p", info.kind in ("split-mult", "nonsplit-mult") and E.conductor % (p * p) != 0,
            f"{info.kind}, a_p = {info.a_p}")
    ramified = [ell for ell in factorize(E.conductor) if K.splitting(ell) == "ramified"]
    add("N_unramified_in_K", not ramified, f"ramified primes dividing N: {ramified or 'none'}")
    fac = None
    if not ramified and E.conductor % p == 0 and E.conductor % (p * p) != 0:
        try:
            fac = factor_N(E, K, p)
        except ValueError as exc:
            add("N_minus_squarefree_even", False, str(exc))
    if fac is not None:
        parts = factorize(fac.n_minus) if fac.n_minus > 1 else {}
        even = len(parts) % 2 == 0 and all(e == 1 for e in parts.values())
        add("N_minus_squarefree_even", even, f"N+ = {fac.n_plus}, N- = {fac.n_minus}, {len(parts)} prime factors")
    add("K_not_excluded", not K.extra_units, f"D = {D}")
    try:
        eps_K = root_number_over_K(E, D)
        add("root_number_over_K", eps_K == 1, f"eps(E/K) = {eps_K:+d}")
    except ValueError as exc:
        add("root_number_over_K", False, str(exc))
    if fac is not None:
        bad = []
        for ell in factorize(fac.n_minus) if fac.n_minus > 1 else {}:
            if (ell * ell - 1) % p == 0 and not mod_p_ramified_at(E, ell, p):
                bad.append(ell)
        add("ramified_at_N_minus", not bad,
            f"sufficient criterion p !| ord_l(disc); failing primes: {bad or 'none'}")
    surj = asserted.get("surjective")
    rep.lines.append(CheckLine("mod_p_surjective", "ASSERTED" if surj else "FAIL",
                               f"user assertion: {surj}" if surj else "not asserted"))
    return rep


# ---------------------------------------------------------------- admissible primes

@dataclass(frozen=True)
class AdmissiblePrime:
    ell: int
    k: int
    sign: int


def admissible_sign(a_ell: int, ell: int, p: int, k: int) -> int | None:
    """The unique eps with a_ell = eps (ell + 1) mod p^k, if any."""
    mod = p ** k
    hits = [eps for eps in (1, -1) if (a_ell - eps * (ell + 1)) % mod == 0]
    if len(hits) == 1:
        return hits[0]
    return None


def admissible_sieve(E: CurveModel, D: int, p: int, k: int, bound: int = 10 ** 4,
                     start: int = 2) -> list[AdmissiblePrime]:
    K = FieldData(D)
    out = []
    for ell in primes_up_to(bound):
        if ell < start or (E.conductor * p) % ell == 0:
            continue
        if (ell * ell - 1) % p == 0 or K.splitting(ell) != "inert":
            continue
        sign = admissible_sign(_count_trace(E, ell), ell, p, k)
        if sign is not None:
            out.append(AdmissiblePrime(ell, k, sign))
    return out


def classify_product(primes) -> str:
    primes = list(primes)
    if len(set(primes)) != len(primes):
        raise ValueError("products of admissible primes must be squarefree")
    return "definite" if len(primes) % 2 else "indefinite"


def level_raising_eigensystem(E: CurveModel, D: int, p: int, k: int,
                              m: dict[int, int], bound: int = 100) -> dict[str, int]:
    """Eigenvalues mod p^k: T_q -> a_q off Nm, U_q -> a_q on N, U_l -> eps_l on m.

    ``m`` maps each admissible prime to its claimed sign.
    """
    K = FieldData(D)
    mod = p ** k
    for ell, sign in m.items():
        if (E.conductor * p) % ell == 0 or (ell * ell - 1) % p == 0 or K.splitting(ell) != "inert":
            raise ValueError(f"{ell} is not admissible")
        if admissible_sign(_count_trace(E, ell), ell, p, k) != sign:
            raise ValueError(f"{ell} is not admissible with sign {sign:+d}")
    table = {}
    for q in sorted(set(primes_up_to(bound)) | set(m)):
        if q in m:
            table[f"U_{q}"] = m[q] % mod
        elif E.conductor % q == 0:
            table[f"U_{q}"] = bad_ap(E, q) % mod
        else:
            table[f"T_{q}"] = _count_trace(E, q) % mod
    return table
