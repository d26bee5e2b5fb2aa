import numpy as np
import pytest

from mockplectic.boundary import InsufficientDepth, measure_from_sphere_values
from mockplectic.integrate import (
    PointSystem,
    boundary_function,
    f_psi,
    group_order,
    inflate,
    integrate_mult,
    kolyvagin_derivative,
    measure_from_point_system,
    mock_invariant,
    shifted_sampler,
    spread_point_system,
    trace_down,
    translate,
    validate_point_system,
)
from mockplectic.padic import NormOneElem, QuadExtElem
from mockplectic.tree import TorusData

P = 5
TORUS = TorusData(P)


def _systems(count, depth, k=2, rank=1, seed=0):
    rng = np.random.default_rng(seed)
    return [spread_point_system(P, k, depth, rank, rng) for _ in range(count)]


def _brute_derivative(ps, n):
    """sum_j j * (rho^j . P_n), the translate written out as an index shift."""
    P_n = ps.level(n)
    h = P_n.shape[0]
    out = np.zeros_like(P_n)
    for x in range(h):
        for j in range(h):
            out[x] += j * P_n[(x - j) % h]
    return out % ps.modulus


# ---------------------------------------------------------------- point systems

def test_group_orders():
    assert [group_order(P, n) for n in range(4)] == [1, 6, 30, 150]


def test_spread_systems_are_valid_and_perturbations_are_located():
    for ps in _systems(10, 3, rank=2):
        assert validate_point_system(ps).ok
        bad = PointSystem(ps.p, ps.k, ps.depth, ps.rank, [lvl.copy() for lvl in ps.levels])
        bad.levels[1][3, 0] += 1
        report = validate_point_system(bad)
        assert not report.ok and report.level == 2


def test_nonzero_top_trace_is_rejected():
    top = np.zeros((30, 1), dtype=np.int64)
    top[0] = 1
    with pytest.raises(ValueError):
        spread_point_system(P, 2, 2, top=top)


def test_unnormalized_input_is_rescaled():
    ps = _systems(1, 3)[0]
    raw = [lvl * (-1) ** n for n, lvl in enumerate(ps.levels, start=1)]
    # raw satisfies Trace(P_{n+1}) = -P_n
    for n in (1, 2):
        assert not np.any((trace_down(raw[n], P) + raw[n - 1]) % 25)
    again = PointSystem.from_unnormalized(P, 2, 1, raw, a_p=-1)
    assert all(np.array_equal(a, b) for a, b in zip(again.levels, ps.levels))


def test_module_maps():
    arr = np.arange(30).reshape(30, 1)
    assert np.array_equal(trace_down(inflate(trace_down(arr, P), P, 1), P), P * trace_down(arr, P))
    assert np.array_equal(translate(arr, 1)[1], arr[0])


# ---------------------------------------------------------------- Kolyvagin derivatives

@pytest.mark.parametrize("n", [1, 2])
def test_derivative_matches_the_double_sum(n):
    for ps in _systems(50, 2, rank=2, seed=n):
        assert np.array_equal(kolyvagin_derivative(ps, n).raw, _brute_derivative(ps, n))


def test_derivative_is_fixed_modulo_its_precision():
    for ps in _systems(20, 3, k=3):
        for n in (1, 2, 3):
            d = kolyvagin_derivative(ps, n)
            mod = P ** d.precision
            assert np.array_equal(translate(d.raw, 1) % mod, d.raw % mod)


def test_derivative_of_a_translate():
    """D(rho . P) = rho . D(P) + sum_j rho^j P (the trace, zero here)."""
    for ps in _systems(10, 2):
        moved = PointSystem(P, 2, 2, 1, [translate(lvl, 1) for lvl in ps.levels])
        for n in (1, 2):
            assert np.array_equal(kolyvagin_derivative(moved, n).raw, translate(kolyvagin_derivative(ps, n).raw, 1))


def test_ladder_certificates_hold():
    for ps in _systems(10, 4, k=3, seed=9):
        inv = mock_invariant(ps)
        assert all(ok for _, ok in inv.certificate)
        assert inv.stable_level == 4
        assert inv.value.precision == 3


def test_shallow_ladder_is_flagged():
    inv = mock_invariant(_systems(1, 2, k=2)[0])
    assert inv.stable_level is None and inv.notes


def test_multiplier_and_sign_are_recorded():
    ps = _systems(1, 2)[0]
    inv = mock_invariant(ps, multiplier=2, a_p=-1, eps=-1)
    assert inv.multiplier == 2 and inv.eigen_sign == -1
    plain = mock_invariant(ps)
    assert np.array_equal(inv.value.coeffs, plain.value.coeffs)


def test_invalid_system_is_rejected():
    ps = _systems(1, 2)[0]
    ps.levels[0][0, 0] += 1
    with pytest.raises(ValueError):
        mock_invariant(ps)


# ---------------------------------------------------------------- integration

def _random_measure(rng, depth, modulus=25):
    h = group_order(P, depth)
    vals = rng.integers(0, modulus, size=h)
    vals[0] = (vals[0] - vals.sum()) % modulus
    return measure_from_sphere_values(TORUS, depth, list(vals), modulus)


def test_constant_function_integrates_to_the_identity():
    rng = np.random.default_rng(2)
    c = NormOneElem(QuadExtElem(P, 6, TORUS.u, 0, *TORUS.generator))
    for _ in range(50):
        mu = _random_measure(rng, 3)
        assert integrate_mult(mu, lambda t: c, 2).is_zero()


def test_sampler_and_refinement_stability_at_p_squared():
    rng = np.random.default_rng(4)
    f = boundary_function(TORUS, 4)
    for _ in range(5):
        mu = _random_measure(rng, 4)
        base = integrate_mult(mu, f, 2)
        assert integrate_mult(mu, f, 2, level=4) == base
        assert integrate_mult(mu, f, 2, sampler=shifted_sampler(1)) == base
        assert integrate_mult(mu, f, 2, level=4, sampler=shifted_sampler(3)) == base


def test_integral_is_additive_in_the_measure():
    rng = np.random.default_rng(6)
    f = boundary_function(TORUS, 4)
    for _ in range(10):
        a, b = _random_measure(rng, 3), _random_measure(rng, 3)
        total = integrate_mult(a + b, f, 2)
        parts = integrate_mult(a, f, 2).coeffs + integrate_mult(b, f, 2).coeffs
        assert np.array_equal(total.coeffs, parts % 25)


def test_precision_needs_depth():
    mu = _random_measure(np.random.default_rng(0), 2)
    with pytest.raises(InsufficientDepth):
        integrate_mult(mu, boundary_function(TORUS, 4), 2)
    with pytest.raises(ValueError):
        integrate_mult(mu, boundary_function(TORUS, 4), 2, level=2)


def test_boundary_function_has_norm_one_and_conjugate_symmetry():
    tau, tau_bar = TORUS.fixed_points(6)
    for t in [0, 1, 7, None]:
        v = f_psi(t, TORUS, 4)
        assert v.x.norm().equals(1, 4)
    assert tau.conj().equals(tau_bar)


@pytest.mark.parametrize("convention", [1, -1])
@pytest.mark.parametrize("orientation", [1, -1])
@pytest.mark.parametrize("depth", [2, 3])
def test_two_routes_agree(convention, orientation, depth):
    """Riemann product of f_psi against the synthesized measure equals the
    stabilized derivative, at the precision the depth supports."""
    m = depth - 1
    f = boundary_function(TORUS, m + 2, orientation)
    for ps in _systems(20 if depth == 2 else 8, depth, rank=1, seed=depth + 10 * (convention + 1)):
        mu = measure_from_point_system(ps, TORUS)
        riemann = integrate_mult(mu, f, m, convention=convention, orientation=orientation)
        inv = mock_invariant(ps, convention=convention)
        assert riemann == inv.value.reduce(m)


def test_two_routes_agree_under_the_shifted_sampler():
    f = boundary_function(TORUS, 4)
    for ps in _systems(5, 3, seed=21):
        mu = measure_from_point_system(ps, TORUS)
        riemann = integrate_mult(mu, f, 2, sampler=shifted_sampler(2))
        assert riemann == mock_invariant(ps).value.reduce(2)
