import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diskfactor.boundary_functions import BoundaryFunction, constant, one_minus_z, polynomial, power
from diskfactor.circle_numerics import TWO_PI, CirclePoint, ClosedBoundarySet, uniform_grid
from diskfactor.errors import NotDivisibleError, SingularEvaluationError
from diskfactor.factorization import (
    InnerFunction,
    SingularMeasure,
    ZeroList,
    blaschke,
    blaschke_eval,
    counting_function,
    divide_by_inner,
    fill_invalid,
    fpr1_profile,
    fpr2_check,
    fpr2_sweep,
    inner_part,
    outer_from_log_modulus,
    outer_part,
    random_inner,
    restrict_singular,
    singular_inner_eval,
)
from diskfactor.moduli import holder, log_modulus

disk_point = st.tuples(st.floats(0.0, 0.95), st.floats(0.0, TWO_PI)).map(lambda p: p[0] * np.exp(1j * p[1]))
zeros = st.lists(disk_point, min_size=1, max_size=4)


def atom(theta, mass):
    return InnerFunction(singular=SingularMeasure(((CirclePoint(theta), mass),)))


def times_inner(f, U, name="Uf"):
    return BoundaryFunction.from_callable(lambda z: U(z, at_atom=0.0) * f(z), f.n, name)


# ---------------------------------------------------------------- inner functions


def test_zero_list_validation():
    with pytest.raises(ValueError):
        ZeroList(((1.0, 1),))
    with pytest.raises(ValueError):
        ZeroList(((0.5, 0),))
    assert list(ZeroList(((0.5, 2),)).expanded()) == [0.5, 0.5]


@given(zeros, st.floats(0.0, TWO_PI))
def test_blaschke_unimodular_on_circle(a, t):
    B = ZeroList(tuple((x, 1) for x in a))
    assert abs(blaschke_eval(B, np.exp(1j * t))) == pytest.approx(1.0, abs=1e-12)
    for x in a:
        assert abs(blaschke_eval(B, x)) < 1e-12


def test_blaschke_factor_normalization():
    # (|a|/a)(a - z)/(1 - conj(a) z) is |a| at the origin; the factor for a = 0 is z
    assert blaschke_eval(ZeroList(((0.5j, 1),)), 0.0) == pytest.approx(0.5)
    assert blaschke_eval(ZeroList(((0.0, 2),)), 0.3) == pytest.approx(0.09)


@given(st.floats(0.01, 10.0), st.floats(0.0, 0.99))
def test_singular_inner_radial_closed_form(m, r):
    S = SingularMeasure(((CirclePoint(0.0), m),))
    assert singular_inner_eval(S, r) == pytest.approx(math.exp(-m / TWO_PI * (1 + r) / (1 - r)), rel=1e-12)


def test_singular_inner_at_atom():
    S = SingularMeasure(((CirclePoint(1.0), 2.0),))
    with pytest.raises(SingularEvaluationError):
        singular_inner_eval(S, np.exp(1j))
    assert singular_inner_eval(S, np.exp(1j), at_atom=0.0) == 0.0
    assert abs(singular_inner_eval(S, np.exp(2j))) == pytest.approx(1.0)
    assert singular_inner_eval(S, 0.0) == pytest.approx(math.exp(-2.0 / TWO_PI))


def test_singular_measure_validation():
    with pytest.raises(ValueError):
        SingularMeasure(((0.0, -1.0),))
    with pytest.raises(ValueError):
        SingularMeasure(((0.0, 1.0), (TWO_PI, 1.0)))


@given(st.integers(0, 10_000))
def test_inner_json_round_trip(seed):
    U = random_inner(np.random.default_rng(seed))
    assert not U.is_trivial
    assert InnerFunction.from_json(U.to_json()) == U


def test_restrict_singular():
    m = SingularMeasure(((CirclePoint(0.0), 1.0), (CirclePoint(2.0), 1.0)))
    K = ClosedBoundarySet.from_closed_arcs([(0.0, 1.0)])
    assert restrict_singular(m, K).thetas.tolist() == [0.0]
    assert len(restrict_singular(m, K.complement)) == 1
    assert len(restrict_singular(m, ClosedBoundarySet.empty_set())) == 0


# ---------------------------------------------------------------- outer functions


def test_outer_of_constant():
    O = outer_from_log_modulus(np.full(64, 0.7))
    assert O(0.3j) == pytest.approx(math.exp(0.7))
    assert not O.clip_mask.any()


@given(st.lists(st.complex_numbers(max_magnitude=0.45, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=2))
def test_outer_of_zero_free_polynomial(c):
    # p = 1 + sum c_k z^k has no zeros in the closed disk, so O_p = p / p(0) * |p(0)|
    p = polynomial([1.0, *c], 256)
    O = outer_part(p)
    z = np.array([0.0, 0.5, -0.3 + 0.6j, 0.9j])
    np.testing.assert_allclose(np.abs(O(z)), np.abs(p(z)), rtol=1e-12)
    assert O(0.0).imag == pytest.approx(0.0, abs=1e-14) and O(0.0).real > 0
    np.testing.assert_allclose(np.abs(O.boundary_values()), np.abs(p.values), rtol=1e-12)


@given(st.integers(0, 10_000))
def test_outer_is_multiplicative_in_log_modulus(seed):
    rng = np.random.default_rng(seed)
    u1 = rng.normal(size=64)
    u2 = rng.normal(size=64)
    z = 0.5 * np.exp(1j * rng.random())
    both = outer_from_log_modulus(u1 + u2)
    assert both(z) == pytest.approx(outer_from_log_modulus(u1)(z) * outer_from_log_modulus(u2)(z), rel=1e-12)


def test_outer_with_boundary_zero():
    n = 4096
    t = uniform_grid(n)
    with np.errstate(divide="ignore"):
        u = np.log(np.abs(1 - np.exp(1j * t)))
    O = outer_from_log_modulus(u)
    assert O.clip_mask.sum() == 1
    assert O.log_abs_at_zero == pytest.approx(0.0, abs=1e-10)
    z = np.array([0.0, 0.5, 0.9, -0.9, 0.6 + 0.6j])
    np.testing.assert_allclose(O(z), 1 - z, rtol=1e-7)


def test_outer_csv():
    O = outer_from_log_modulus(np.log(np.abs(polynomial([2, 1], 8).values)))
    buf = io.StringIO()
    O.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "k,theta,u,u_conjugate,clipped_flag" and len(lines) == 9


def test_outer_power():
    p = polynomial([2, 1], 64)
    O = outer_part(p)
    assert O.power(2.0)(0.4) == pytest.approx(O(0.4) ** 2)


def test_fill_invalid():
    v = np.arange(8, dtype=complex)
    bad = np.zeros(8, bool)
    bad[3] = True
    v[3] = 100
    assert fill_invalid(v, bad)[3] == 3


# ---------------------------------------------------------------- inner part and division


@given(zeros)
def test_inner_part_recovers_blaschke(a):
    n = 2048
    B = blaschke(*a)
    f = times_inner(one_minus_z(n), B)
    ip = inner_part(f)
    assert ip.max_deviation <= 1e-6
    # U = c B with a unimodular constant c
    ratio = ip.U.values[~ip.flagged] / B(np.exp(1j * uniform_grid(n)))[~ip.flagged]
    assert np.max(np.abs(ratio - ratio[0])) < 1e-6
    assert abs(ratio[0]) == pytest.approx(1.0, abs=1e-6)


def test_inner_part_of_outer_function_is_constant():
    ip = inner_part(power(0.5, 1024))
    vals = ip.U.values[~ip.flagged]
    assert np.max(np.abs(vals - vals[0])) < 1e-12


@given(zeros, st.sampled_from(["holder", "log"]))
def test_divide_by_blaschke(a, kind):
    n = 1024
    w = holder(0.5) if kind == "holder" else log_modulus(1.0)
    U = blaschke(*a)
    g = one_minus_z(n)
    res = divide_by_inner(times_inner(g, U), U, w, pair_budget=1000)
    np.testing.assert_allclose(res.quotient.values, g.values, atol=1e-9)
    assert np.isfinite(res.fpr_ratio) and 0 < res.fpr_ratio <= 50


def test_divide_by_singular_factor():
    n = 1024
    U = atom(0.0, 1.0)
    g = polynomial([1, -3, 3, -1], n)  # (1 - z)^3
    res = divide_by_inner(times_inner(g, U), U, holder(0.5), pair_budget=1000)
    np.testing.assert_allclose(res.quotient.values[1:], g.values[1:], atol=1e-9)


def test_non_divisible_controls():
    n = 1024
    with pytest.raises(NotDivisibleError):
        divide_by_inner(one_minus_z(n), blaschke(0.0), holder(0.5))
    with pytest.raises(NotDivisibleError):
        divide_by_inner(polynomial([1, -3, 3, -1], n), atom(0.0, 1.0), holder(0.5))
    with pytest.raises(NotDivisibleError):
        divide_by_inner(constant(1.0, n), blaschke(0.5), holder(0.5))


# ---------------------------------------------------------------- counting function and radial bounds


def test_counting_function_closed_forms():
    assert counting_function(blaschke(0.0), 1.3) == pytest.approx(1.0)
    # atom of mass m at 1 seen from -1: m / (pi * 4)
    assert counting_function(atom(0.0, 2.0), math.pi) == pytest.approx(2.0 / (4 * math.pi))
    with pytest.raises(SingularEvaluationError):
        counting_function(atom(0.0, 2.0), 0.0)


@given(st.floats(0.01, 0.99), st.floats(0.0, TWO_PI))
def test_fpr2_origin_zero(rho, xi):
    # U = z: |U(rho xi)| = rho <= exp(-(1 - rho)/8) since a = 1 and d = 1
    r = fpr2_check(blaschke(0.0), xi, rho)
    assert r.applicable and r.holds
    assert r.lhs == pytest.approx(rho)
    assert r.rhs == pytest.approx(math.exp(-(1 - rho) / 8))


def test_fpr2_precondition():
    r = fpr2_check(blaschke(0.9), 0.0, 0.5)
    assert not r.applicable and r.holds is None
    with pytest.raises(ValueError):
        fpr2_check(InnerFunction(), 0.0, 0.5)


@given(st.integers(0, 10_000))
def test_fpr2_sweep_holds(seed):
    results = fpr2_sweep(seed, 20)
    assert all(r.applicable and r.holds for *_, r in results)
    for U, xi, rho, r in results:
        assert 1 - rho <= r.distance


def test_fpr1_profile_closed_form():
    # along theta = 0, f(1) = 0 and |O(rho)| = 1 - rho, so r = (1 - rho)^{1/2}
    table = fpr1_profile(one_minus_z(4096), holder(0.5), [0.5, 0.9, 0.99])
    np.testing.assert_allclose(table.values[:, 0], np.sqrt([0.5, 0.1, 0.01]), rtol=1e-10)
    assert table.decreasing


def test_fpr1_profile_constant():
    table = fpr1_profile(constant(2.0, 256), holder(0.5), [0.5, 0.9])
    assert not table.values.any() and table.decreasing
