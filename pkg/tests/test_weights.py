import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zkstrip.errors import ConfigurationError
from zkstrip.eigenbasis import build_basis
from zkstrip.weights import (
    WeightKind, check_admissible, make_weight, weighted_l2, weighted_l2_modal,
)


class _FieldStub:
    def __init__(self, modal, x):
        self.modal = modal
        self.x = x


def test_make_weight_examples():
    arctan = make_weight("arctan")
    r, d1, _, _ = arctan.derivatives(0.0)
    assert r == pytest.approx(1.0, abs=1e-15)
    assert d1 == pytest.approx(2.0 / np.pi, abs=1e-15)

    exp = make_weight("exponential", 0.5)
    r, d1, _, _ = exp.derivatives(1.0)
    assert r == pytest.approx(np.e, rel=1e-15)
    assert d1 == pytest.approx(np.e, rel=1e-15)

    pw = make_weight("power", 1.0)
    r, d1, _, _ = pw.derivatives(3.0)
    assert r == pytest.approx(16.0, rel=1e-15)
    assert d1 == pytest.approx(8.0, rel=1e-15)


def test_make_weight_rejects_bad_alpha():
    for kind in ("exponential", "power"):
        with pytest.raises(ConfigurationError):
            make_weight(kind, 0.0)
        with pytest.raises(ConfigurationError):
            make_weight(kind, None)
    with pytest.raises(ConfigurationError):
        make_weight("nope")


def test_admissibility_constants():
    cert = check_admissible(make_weight("exponential", 0.7), x_max=50.0)
    assert cert.passed
    assert cert.constant(1) == pytest.approx(1.4, rel=1e-12)

    # power alpha=1: |rho'|/rho = 2/(1+x), maximized at x=0
    cert = check_admissible(make_weight("power", 1.0), x_max=50.0)
    assert cert.passed
    assert cert.constant(1) == pytest.approx(2.0, rel=1e-9)

    cert = check_admissible(make_weight("unit"), x_max=10.0)
    assert cert.passed
    assert cert.constant(1) == 0.0


@pytest.mark.parametrize("kind,alpha", [
    ("exponential", 0.4), ("power", 1.5), ("arctan", None), ("unit", None),
])
@pytest.mark.parametrize("s", [0.5, 2.0])
def test_powers_remain_admissible(kind, alpha, s):
    w = make_weight(kind, alpha).power(s)
    cert = check_admissible(w, x_max=100.0)
    assert cert.passed
    assert all(np.isfinite(c) for c in cert.ratios)


def test_power_derivative_matches_finite_difference():
    # chain-rule sanity for rho^s against a central difference oracle
    w = make_weight("arctan").power(2.0)
    x = np.array([0.3, 1.7, 9.0])
    h = 1e-6
    fd = (w.rho(x + h) - w.rho(x - h)) / (2 * h)
    assert w.derivatives(x)[1] == pytest.approx(fd, rel=1e-8)


def test_weighted_l2_analytic_values():
    basis = build_basis("a", np.pi, 4)
    x = np.linspace(0, 40, 4001)
    modal = np.zeros((len(x), 4))
    modal[:, 0] = np.exp(-x)

    field = _FieldStub(modal, x)
    # rho = 1: integral of e^{-2x} is 1/2
    assert weighted_l2(field, make_weight("unit")) == pytest.approx(1 / np.sqrt(2), rel=1e-4)
    # rho = e^{x}: integral of e^{-x} is 1
    half_exp = make_weight("exponential", 0.25)  # e^{2*0.25 x} = e^{x/2}... use power trick
    w_ex = make_weight("exponential", 0.5)       # rho = e^{x}
    assert weighted_l2(field, w_ex) == pytest.approx(1.0, rel=1e-4)

    assert weighted_l2(_FieldStub(np.zeros_like(modal), x), w_ex) == 0.0


@settings(max_examples=20, deadline=None)
@given(c=st.floats(-100, 100, allow_nan=False))
def test_weighted_l2_homogeneity(c):
    x = np.linspace(0, 10, 301)
    modal = np.outer(np.exp(-x), [1.0, 0.3])
    w = make_weight("arctan")
    base = weighted_l2_modal(modal, x, w)
    assert weighted_l2_modal(c * modal, x, w) == pytest.approx(abs(c) * base, rel=1e-12, abs=1e-12)


def test_exponential_exact_derivative_relation():
    # rho' = 2 alpha rho exactly for the exponential family
    w = make_weight("exponential", 1.3)
    x = np.linspace(0, 5, 64)
    r, d1, _, _ = w.derivatives(x)
    assert np.max(np.abs(d1 - 2 * 1.3 * r)) == 0.0
