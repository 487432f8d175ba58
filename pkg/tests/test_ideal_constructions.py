import io
import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diskfactor.boundary_functions import BoundaryFunction, constant, one_minus_z, polynomial
from diskfactor.circle_numerics import TWO_PI, ArcUnion, ClosedBoundarySet, gamma_exhaustion, uniform_grid
from diskfactor.errors import EmptySetError, SpecError
from diskfactor.factorization import InnerFunction, blaschke, outer_part
from diskfactor.ideal_constructions import (
    ConvergenceTable,
    Scenario,
    carleson_integral,
    convergence_table,
    log_sine_integral,
    mollifier_scenario,
    parse_set,
    phi_mollifier,
    psi_mollifier,
    run_scenario,
    scenario_catalog,
    standard_membership,
    truncated_outer,
)
from diskfactor.moduli import holder, log_modulus

point_sets = st.lists(st.floats(0.0, TWO_PI - 1e-3), min_size=1, max_size=6, unique=True)


def refined_carleson(E, m):
    """Midpoint rule for (1/2pi) int log(1/d) on m cells; d is a chord to E's points."""
    t = (np.arange(m) + 0.5) * TWO_PI / m
    pts = np.exp(1j * np.array(E.endpoints()))
    d = np.min(np.abs(np.exp(1j * t)[:, None] - pts[None, :]), axis=1)
    return float(np.mean(-np.log(d)))


# ---------------------------------------------------------------- truncated outer functions


def test_truncated_outer_extremes():
    f = polynomial([2, 1, 0.5], 256)
    O = outer_part(f)
    empty = truncated_outer(f, ArcUnion(()))
    np.testing.assert_allclose(empty.boundary_values(), 1.0)
    full = truncated_outer(f, ClosedBoundarySet.from_points([1.0]).complement)
    np.testing.assert_allclose(full.boundary_values(), O.boundary_values(), rtol=1e-12)


@given(point_sets, st.integers(0, 6))
def test_truncated_outer_multiplicative(pts, N):
    f = polynomial([1, -1], 512)  # vanishes at the grid node theta = 0
    E = ClosedBoundarySet.from_points(pts)
    G = gamma_exhaustion(E, N)
    O = outer_part(f)
    prod = truncated_outer(O, G).boundary_values() * truncated_outer(O, G, complement=True).boundary_values()
    ok = ~O.clip_mask
    np.testing.assert_allclose(prod[ok], O.boundary_values()[ok], rtol=1e-10)


# ---------------------------------------------------------------- mollifiers


def test_psi_closed_form_values():
    d = 0.3
    psi = psi_mollifier([0.0], d, 64)
    assert psi(1.0) == 0
    assert psi(-1.0) == pytest.approx(2 / (2 + d))
    assert np.max(np.abs(psi_mollifier([0.0], 1e8, 64).values)) < 1e-7


@given(st.lists(st.floats(0.0, TWO_PI), min_size=1, max_size=4), st.floats(1e-6, 100.0), st.integers(0, 1000))
def test_psi_bounded_by_one(pts, delta, seed):
    rng = np.random.default_rng(seed)
    z = np.sqrt(rng.random(10_000)) * np.exp(TWO_PI * 1j * rng.random(10_000))
    psi = psi_mollifier(pts, delta, 64)
    assert np.max(np.abs(psi(z))) <= 1.0 + 1e-12
    for t in pts:
        # z conj(a) - 1 is only zero to rounding, then divided by delta
        assert abs(psi(np.exp(1j * t))) < 1e-15 / delta


def test_phi_zeros_and_range():
    eps = 0.1
    phi = phi_mollifier(0.5, 2.0, eps, 0.01, 64)
    assert abs(phi(np.exp(1j * (0.5 + eps)))) < 1e-12
    assert abs(phi(np.exp(1j * (2.0 - eps)))) < 1e-12
    phi0 = phi_mollifier(0.5, 2.0, 0.0, 0.01, 64)
    assert abs(phi0(np.exp(0.5j))) < 1e-12 and abs(phi0(np.exp(2.0j))) < 1e-12
    with pytest.raises(ValueError):
        phi_mollifier(0.5, 2.0, 1.0, 0.01, 64)


def test_phi_pointwise_limit():
    z = np.exp(1.2j)
    a, b = np.exp(0.5j), np.exp(2.0j)
    for d in (1e-1, 1e-2, 1e-3, 1e-4):
        want = ((z * np.conj(a) - 1) / (z * np.conj(a) - 1 - d)) * ((z * np.conj(b) - 1) / (z * np.conj(b) - 1 - d))
        assert phi_mollifier(0.5, 2.0, 0.0, d, 64)(z) == pytest.approx(want, rel=1e-14)
    assert abs(phi_mollifier(0.5, 2.0, 0.0, 1e-4, 64)(z) - 1) < 1e-3


# ---------------------------------------------------------------- convergence tables


def test_identical_family_has_zero_gaps():
    f = one_minus_z(128)
    table = convergence_table([(1, f), (2, f)], f, holder(0.5))
    assert not table.total_gap.any() and table.decay_ok


def test_table_validation_and_csv():
    with pytest.raises(ValueError):
        ConvergenceTable([1, 3, 2], [0, 0, 0], [0, 0, 0])
    table = ConvergenceTable([0.1, 0.01], [1.0, 0.05], [2.0, 0.1])
    buf = io.StringIO()
    table.write_csv(buf, header={"seed": 1})
    buf.seek(0)
    assert buf.getvalue().startswith("# {")
    back = ConvergenceTable.read_csv(buf)
    np.testing.assert_array_equal(back.total_gap, table.total_gap)
    assert back.decay_ok and back.monotone


@pytest.mark.parametrize("w", [holder(0.5), log_modulus(1.0)])
def test_mollifier_scenario(w):
    assert mollifier_scenario(one_minus_z(1024), [0.0], w, seed=0, pair_budget=1000).passed
    assert not mollifier_scenario(constant(1.0, 1024), [0.0], w, seed=0, pair_budget=1000).passed


@given(st.lists(st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=3).filter(lambda c: abs(sum(c)) > 0.1))
def test_mollifier_gate_tracks_vanishing(c):
    n = 1024
    q = polynomial(c, n)
    vanishing = one_minus_z(n) * q
    assert mollifier_scenario(vanishing, [0.0], holder(0.5), seed=0, pair_budget=1000).passed
    # q(1) = sum(c) != 0: the mollified functions stay away from q in sup norm
    assert not mollifier_scenario(q, [0.0], holder(0.5), seed=0, pair_budget=1000).passed


# ---------------------------------------------------------------- Carleson integrals


@given(st.floats(1e-6, math.pi))
def test_log_sine_integral_is_clausen(x):
    assert log_sine_integral(x) == pytest.approx(float(mpmath.clsin(2, x)), abs=1e-14)


def test_carleson_examples():
    assert carleson_integral(ClosedBoundarySet.from_points([0.0])).value == pytest.approx(0.0, abs=1e-4)
    assert carleson_integral(ClosedBoundarySet.whole_circle()).divergent
    assert carleson_integral(ClosedBoundarySet.from_closed_arcs([(0.0, 0.1)])).divergent
    with pytest.raises(EmptySetError):
        carleson_integral(ClosedBoundarySet.empty_set())
    two = carleson_integral(ClosedBoundarySet.from_points([0.0, math.pi])).value
    assert two == pytest.approx(2 / math.pi * float(mpmath.catalan), abs=1e-14)


@given(point_sets)
def test_carleson_matches_refined_quadrature(pts):
    E = ClosedBoundarySet.from_points(pts)
    coarse, fine = refined_carleson(E, 2**16), refined_carleson(E, 2**17)
    assert abs(fine - coarse) <= 1e-4
    assert carleson_integral(E).value == pytest.approx(fine, abs=1e-4)


@given(point_sets, point_sets)
def test_carleson_monotone_under_enlargement(a, b):
    small = ClosedBoundarySet.from_points(a)
    big = ClosedBoundarySet.from_points(a + b)
    assert carleson_integral(small).value <= carleson_integral(big).value + 1e-6


# ---------------------------------------------------------------- membership


def test_membership_examples():
    n = 1024
    one = ClosedBoundarySet.from_points([0.0])
    assert standard_membership(one_minus_z(n), one, InnerFunction()).member
    rep = standard_membership(constant(1.0, n), one, InnerFunction())
    assert not rep.member and not rep.vanishes and rep.divisible
    B = blaschke(0.5)
    f = BoundaryFunction.from_callable(lambda z: B(z) * (1 - z), n)
    assert standard_membership(f, one, B).member
    rep = standard_membership(one_minus_z(n), one, B)
    assert not rep.member and rep.vanishes and not rep.divisible


# ---------------------------------------------------------------- sets and scenarios


def test_parse_set():
    assert parse_set("points:1").endpoints() == [0.0]
    assert parse_set("points:1,-1").endpoints() == pytest.approx([0.0, math.pi])
    assert len(parse_set("roots:4").complement) == 4
    assert parse_set("arcs:0~1,3~3").measure == pytest.approx(1.0)
    assert parse_set("full").is_whole_circle and parse_set("empty").empty
    for bad in ("points:2", "nothing", "arcs:1"):
        with pytest.raises(SpecError):
            parse_set(bad)


def test_scenario_json_round_trip():
    for sc in scenario_catalog("prop1", 512, seed=3):
        back = Scenario.from_json(json.loads(json.dumps(sc.to_json())))
        assert back == sc
    with pytest.raises(SpecError):
        Scenario.from_json({"g": "oneminusz"})
    with pytest.raises(SpecError):
        Scenario.from_json({"g": "oneminusz", "E": "points:1", "kind": "prop3", "rho": 3})


@pytest.mark.parametrize("kind", ["prop1", "prop3"])
def test_catalog_outcomes(kind):
    for sc in scenario_catalog(kind, 1024):
        res = run_scenario(sc, pair_budget=1000)
        assert res.passed == (not sc.negative_control), sc.name
        assert len(res.profiles) == sc.gamma_N - sc.start_N + 1


def test_scenario_with_log_modulus():
    sc = Scenario("log", "prop1", "oneminusz", ClosedBoundarySet.from_points([0.0]), omega="log:1", grid_n=1024)
    assert run_scenario(sc, pair_budget=1000).passed


def test_stalled_exhaustion_gap_constant():
    sc = scenario_catalog("prop1", 512)[-1]
    res = run_scenario(sc, pair_budget=1000)
    assert np.ptp(res.table.total_gap) == 0.0
    assert uniform_grid(512).size == 512
