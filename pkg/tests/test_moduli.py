import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diskfactor.errors import DegenerateModulusError, ModulusDataError, SpecError
from diskfactor.moduli import (
    Modulus,
    condition3_estimate,
    default_grid,
    eta_estimate,
    holder,
    log_modulus,
    tabulated,
    tabulated_from_csv,
    validate_modulus,
)


def chi_condition3_closed_form(alpha, t):
    # chi(t^2) / chi(t) = ((L + 1) / (2L + 1))^alpha with L = |log t|, t < 1
    L = abs(math.log(t))
    return ((L + 1) / (2 * L + 1)) ** alpha


def test_from_spec_round_trip():
    for spec in ("holder:0.5", "log:1.0"):
        assert Modulus.from_spec(spec).spec == spec
    for bad in ("holder:x", "sqrt:2", "holder:-1", "csv:/no/such/file.csv"):
        with pytest.raises(SpecError):
            Modulus.from_spec(bad)


def test_log_modulus_values():
    w = log_modulus(1.0)
    assert w(0.0) == 0.0
    assert w(1.0) == 1.0
    assert w(math.e**-2) == pytest.approx(1 / 3)


def test_default_grid_contains_one():
    g = default_grid()
    assert 1.0 in g and g[0] == pytest.approx(1e-12) and g[-1] == pytest.approx(2.0)


@given(st.floats(0.05, 0.95), st.floats(1.0, 2.0))
def test_holder_eta_is_one(alpha, rho):
    assert eta_estimate(holder(alpha), rho).value == pytest.approx(1.0, abs=1e-12)


def test_log_eta_attained_at_one():
    est = eta_estimate(log_modulus(1.0), 2.0)
    assert est.value == pytest.approx(1.0, abs=1e-9)
    assert est.argmin == 1.0


@given(st.floats(0.1, 2.5))
def test_log_condition3_matches_closed_form(alpha):
    est = condition3_estimate(log_modulus(alpha))
    assert est.value == pytest.approx(chi_condition3_closed_form(alpha, 1e-12), rel=1e-9)
    assert 2**-alpha <= est.value <= 2**-alpha * 1.05
    values = [v for _, v in est.trend]
    assert np.all(np.diff(values) <= 1e-15)


def test_holder_condition3_fails():
    est = condition3_estimate(holder(0.5))
    assert est.value == pytest.approx(1e-6, rel=1e-6)
    # the trend drifts to zero with the floor: condition (3) refuted
    assert est.trend[-1][1] < 1e-3 * est.trend[0][1]


def test_eta_rejects_rho_out_of_range():
    with pytest.raises(ValueError):
        eta_estimate(holder(0.5), 2.5)


def test_validate_holder_half():
    assert validate_modulus(holder(0.5)).passed


def test_validate_lipschitz_is_not_unbounded():
    rep = validate_modulus(holder(1.0))
    assert not rep["ratio_unbounded"].passed
    assert rep["ratio_nonincreasing"].passed


def test_validate_superlinear_fails_ratio():
    rep = validate_modulus(holder(1.5))
    assert not rep["ratio_nonincreasing"].passed


def test_log_two_ratio_violation_interval():
    # chi_2(t)/t increases exactly on (1/e, 1)
    chk = validate_modulus(log_modulus(2.0))["ratio_nonincreasing"]
    assert not chk.passed
    lo, hi = chk.interval
    assert lo == pytest.approx(math.exp(-1), rel=1e-2)
    assert hi == pytest.approx(1.0, rel=1e-2)
    assert lo < 0.9 < hi


def test_log_modulus_decreases_past_one():
    chk = validate_modulus(log_modulus(1.0))["nondecreasing"]
    assert not chk.passed
    assert chk.interval[0] >= 1.0 - 1e-12


def test_tabulated_modulus():
    buf = io.StringIO("t,omega\n0.5,0.7\n1,1\n2,1.4\n")
    w = tabulated_from_csv(buf)
    assert w(0.0) == 0.0
    assert w(0.75) == pytest.approx(0.85)
    assert w.family == "tabulated"


def test_bad_tabulated_values():
    with pytest.raises(ModulusDataError):
        validate_modulus(tabulated([0.5, 1.0], [-1.0, 1.0]))


def test_degenerate_modulus():
    w = tabulated([0.5, 1.0, 2.0], [0.0, 1.0, 1.0])
    with pytest.raises(DegenerateModulusError):
        eta_estimate(w, 1.5)
