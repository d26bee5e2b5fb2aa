import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mockplectic.integrate import PointSystem, kolyvagin_derivative, spread_point_system
from mockplectic.iwasawa import (
    BipartiteData,
    IwasawaElem,
    RankBoundRefused,
    binomial,
    check_reduction,
    determinant,
    fitting_ord_I,
    fitting_ord_I_minors,
    kappa_from_system,
    ord_I,
    rank_bound,
    selmer_split_table,
    synthetic_bipartite,
    validate_bipartite,
)

P, K, N = 5, 2, 4
coeffs = st.lists(st.integers(0, P ** K - 1), min_size=N, max_size=N)


def elem(c):
    return IwasawaElem(P, K, tuple(c))


@settings(max_examples=150, deadline=None)
@given(coeffs, coeffs, coeffs)
def test_ring_laws(a, b, c):
    x, y, z = elem(a), elem(b), elem(c)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x * y == y * x
    assert x + (-x) == IwasawaElem.zero(P, K, N)
    assert x * IwasawaElem.one(P, K, N) == x


@pytest.mark.parametrize("j", [-7, -1, 0, 1, 2, 5, 29, 150])
def test_group_like_matches_iterated_products(j):
    one_plus_T = IwasawaElem.one(P, K, N) + IwasawaElem.T(P, K, N)
    inverse = IwasawaElem(P, K, tuple((-1) ** i for i in range(N)))
    assert one_plus_T * inverse == IwasawaElem.one(P, K, N)
    want = IwasawaElem.one(P, K, N)
    for _ in range(abs(j)):
        want = want * (one_plus_T if j > 0 else inverse)
    g = IwasawaElem.group_like(P, K, j, N)
    assert g == want
    assert g.augmentation() == 1


def test_binomial_for_negative_top():
    assert [binomial(-1, i) for i in range(4)] == [1, -1, 1, -1]
    assert binomial(-3, 2) == 6


def test_ord_I_examples():
    assert ord_I(IwasawaElem.one(P, K, N)) == 0
    assert ord_I(elem([0, 1, 1, 0])) == 1
    assert ord_I(IwasawaElem.zero(P, K, N)) == N


@settings(max_examples=100, deadline=None)
@given(coeffs, coeffs, st.integers(0, 2), st.integers(0, 1))
def test_ord_I_is_additive_for_unit_leading_parts(a, b, s, t):
    a = [1 + P * (a[0] // P)] + a[1:]
    b = [1 + P * (b[0] // P)] + b[1:]
    Tpow = lambda n: IwasawaElem(P, K, tuple(1 if i == n else 0 for i in range(N)))
    x, y = elem(a) * Tpow(s), elem(b) * Tpow(t)
    assert ord_I(x * y) == ord_I(x) + ord_I(y)


def test_fitting_examples():
    one, zero, T = IwasawaElem.one(P, K, N), IwasawaElem.zero(P, K, N), IwasawaElem.T(P, K, N)
    assert fitting_ord_I([[one, zero], [zero, one]]) == 0
    assert fitting_ord_I([[T, zero], [zero, T]]) == 2
    with pytest.raises(ValueError):
        fitting_ord_I([[T, zero]])
    assert fitting_ord_I_minors([[T, zero], [zero, T], [one, zero]]) == 1


def _random_matrix(rng, size):
    return [[elem(rng.integers(0, P ** K, size=N)) for _ in range(size)] for _ in range(size)]


def test_fitting_order_is_invariant_under_elementary_operations():
    rng = np.random.default_rng(8)
    for trial in range(20):
        size = 2 + trial % 2
        M = _random_matrix(rng, size)
        # multiply a row by T to get nontrivial orders
        M[0] = [x * IwasawaElem.T(P, K, N) for x in M[0]]
        before = fitting_ord_I(M)
        c = elem(rng.integers(0, P ** K, size=N))
        i, j = 0, 1
        rowop = [row[:] for row in M]
        rowop[i] = [x + c * y for x, y in zip(M[i], M[j])]
        colop = [row[:] for row in M]
        for row in colop:
            row[j] = row[j] + c * row[i]
        swapped = [M[1], M[0]] + M[2:]
        assert fitting_ord_I(rowop) == before
        assert fitting_ord_I(colop) == before
        assert fitting_ord_I(swapped) == before
        assert determinant(swapped) == -determinant(M)


# ---------------------------------------------------------------- kappa classes

def _systems(count, depth=2, rank=2, seed=0):
    rng = np.random.default_rng(seed)
    return [spread_point_system(P, K, depth, rank, rng) for _ in range(count)]


def test_zero_system_gives_zero_class():
    kappa = kappa_from_system(PointSystem.zero(P, K, 2, 2), -1, 1)
    assert not np.any(kappa.coeffs)
    assert kappa.ord_I() == kappa.truncation


def test_kappa_has_zero_augmentation_and_derivative_T_coefficient():
    for ps in _systems(30):
        for tate_val in (1, 2, 3):
            kappa = kappa_from_system(ps, a_p=-1, tate_val=tate_val)
            assert not np.any(kappa.augmentation())
            D = kolyvagin_derivative(ps, ps.depth).raw
            assert np.array_equal(kappa.T_coefficient(), D)
            assert np.array_equal(kappa.scaled()[1], tate_val * D % ps.modulus)
            assert kappa.multiplier == tate_val


def test_kappa_coefficients_against_the_defining_sum():
    ps = _systems(1, rank=1)[0]
    kappa = kappa_from_system(ps, 1, 1)
    P2 = ps.level(2)
    h = P2.shape[0]
    for i in range(N):
        want = np.zeros_like(P2)
        for j in range(h):
            want = want + binomial(j, i) * np.roll(P2, j, axis=0)
        assert np.array_equal(kappa.coeffs[i], want % ps.modulus)


def test_kappa_is_linear():
    a, b = _systems(2, seed=3)
    total = PointSystem(P, K, 2, 2, [x + y for x, y in zip(a.levels, b.levels)])
    ka, kb, kt = (kappa_from_system(s, -1, 1) for s in (a, b, total))
    assert np.array_equal(kt.coeffs, (ka.coeffs + kb.coeffs) % P ** K)


def test_kappa_rejects_invalid_systems():
    ps = _systems(1)[0]
    ps.levels[1][0, 0] += 1
    with pytest.raises(ValueError):
        kappa_from_system(ps, -1, 1)
    with pytest.raises(ValueError):
        kappa_from_system(_systems(1)[0], 3, 1)


# ---------------------------------------------------------------- rank bookkeeping

def test_rank_bounds():
    assert rank_bound(1).rank_bound == 3
    assert rank_bound(0).rank_bound == 1
    assert rank_bound(2).rank_bound == 5
    r = rank_bound(1)
    assert r.rank_bound == 1 + r.char_order_bound
    with pytest.raises(RankBoundRefused):
        rank_bound(4, truncation=4)
    with pytest.raises(RankBoundRefused):
        rank_bound(None)


def test_split_tables():
    # sign -a_p eps = +1 in both cases below
    assert selmer_split_table(-1, 1).candidates == [(1, 1)]
    assert selmer_split_table(1, -1).candidates == [(2, 0)]
    assert selmer_split_table(1, 1).candidates == [(0, 2)]
    t = selmer_split_table(-1, 1, deltas=(1, 0))
    assert t.maxima == {(1, 1): 2}
    with pytest.raises(ValueError):
        selmer_split_table(0, 1)


def test_split_table_against_enumeration():
    for eps in (1, -1):
        for a_p in (1, -1):
            forced = -a_p * eps
            want = [(r, 2 - r) for r in range(3)
                    if (-1) ** r == eps and (-1) ** (2 - r) == eps and (r if forced == 1 else 2 - r) >= 1]
            assert selmer_split_table(eps, a_p).candidates == want


# ---------------------------------------------------------------- bipartite systems

PRIMES = (293, 317, 613)


def test_empty_data_passes():
    rep = validate_bipartite(BipartiteData(P, K, PRIMES))
    assert rep.ok and rep.checked == 0


def test_consistent_instance_passes():
    data = synthetic_bipartite(P, K, PRIMES, rng=np.random.default_rng(0))
    rep = validate_bipartite(data)
    assert rep.ok
    # every (m, l) with l not in m and both indices present: 2^3 subsets * 3 primes / 2
    assert rep.checked == 12


def _expected_witnesses(data, m):
    """Pairs (m', l) whose relation reads the perturbed lambda_m."""
    out = set()
    for ell in data.primes:
        if ell in m:
            out.add((tuple(sorted(m - {ell})), ell))
        else:
            out.add((tuple(sorted(m)), ell))
    return out


@pytest.mark.parametrize("trial", range(10))
def test_single_perturbations_are_caught_with_witnesses(trial):
    rng = np.random.default_rng(100 + trial)
    data = synthetic_bipartite(P, K, PRIMES, rng=rng)
    definite = sorted(data.lambdas, key=sorted)
    m = definite[trial % len(definite)]
    lam = data.lambdas[m]
    data.lambdas[m] = lam + IwasawaElem(P, K, tuple(1 if i == trial % N else 0 for i in range(N)))
    rep = validate_bipartite(data)
    assert not rep.ok
    assert {(w, ell) for w, ell, _ in rep.failures} == _expected_witnesses(data, m)


def test_perturbed_localization_is_caught():
    data = synthetic_bipartite(P, K, PRIMES, rng=np.random.default_rng(7))
    key = (frozenset({293, 317}), 613)
    data.locs[key] = data.locs[key].copy()
    data.locs[key][0, 0] += 1
    rep = validate_bipartite(data)
    assert [(w, ell) for w, ell, _ in rep.failures] == [((293, 317), 613)]


def test_parity_tags_are_enforced():
    data = BipartiteData(P, K, PRIMES)
    data.kappas[frozenset({293})] = np.zeros(3, dtype=np.int64)
    with pytest.raises(ValueError):
        validate_bipartite(data)


def test_reduction_across_precisions():
    rng = np.random.default_rng(1)
    high = synthetic_bipartite(P, 3, PRIMES, rng=rng)
    low = BipartiteData(P, 1, PRIMES)
    low.kappas = {m: v % P for m, v in high.kappas.items()}
    low.lambdas = {m: IwasawaElem(P, 1, lam.coeffs) for m, lam in high.lambdas.items()}
    low.locs = {key: M % P for key, M in high.locs.items()}
    assert check_reduction(high, low) == []
    assert validate_bipartite(low).ok
    m = next(iter(low.lambdas))
    low.lambdas[m] = low.lambdas[m] + IwasawaElem.one(P, 1, N)
    assert check_reduction(high, low) == [tuple(sorted(m))]
