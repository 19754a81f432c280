import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from zkstrip.errors import ConfigurationError, ShapeError
from zkstrip.eigenbasis import (
    BoundaryCase, analyze, build_basis, steklov_lambda1, synthesize,
)

CASES = ["a", "b", "c", "d"]


@pytest.mark.parametrize("case", CASES)
@pytest.mark.parametrize("L", [1.0, np.pi, 5.0])
def test_orthonormality(case, L):
    basis = build_basis(case, L, 32)
    gram = basis.psi.T @ (basis.weights[:, None] * basis.psi)
    assert np.abs(gram - np.eye(32)).max() <= 1e-10


@pytest.mark.parametrize("case", CASES)
def test_eigen_residual(case):
    basis = build_basis(case, 2.7, 24)
    y = np.linspace(0, 2.7, 301)
    for l in range(1, 25):
        resid = -basis.eval_psi_d2(l, y) - basis.lambdas[l - 1] * basis.eval_psi(l, y)
        assert np.abs(resid).max() <= 1e-8


def test_endpoint_conditions():
    L = 1.9
    a = build_basis("a", L, 10)
    b = build_basis("b", L, 10)
    c = build_basis("c", L, 10)
    d = build_basis("d", L, 10)
    for l in range(1, 11):
        assert abs(a.eval_psi(l, 0.0)) <= 1e-12
        assert abs(a.eval_psi(l, L)) <= 1e-12 * (1 + a.lambdas[l - 1])
        assert abs(b.eval_psi_d1(l, 0.0)) <= 1e-12
        assert abs(b.eval_psi_d1(l, L)) <= 1e-10 * (1 + b.lambdas[l - 1])
        assert abs(c.eval_psi(l, 0.0)) <= 1e-12
        assert abs(c.eval_psi_d1(l, L)) <= 1e-10 * (1 + c.lambdas[l - 1])
        assert abs(d.eval_psi(l, 0.0) - d.eval_psi(l, L)) <= 1e-10
        assert abs(d.eval_psi_d1(l, 0.0) - d.eval_psi_d1(l, L)) <= 1e-9 * (1 + d.lambdas[l - 1])


def test_closed_form_examples():
    a = build_basis("a", np.pi, 4)
    assert a.lambdas[0] == pytest.approx(1.0, abs=1e-14)
    y = np.array([0.3, 1.1, 2.0])
    assert a.eval_psi(1, y) == pytest.approx(np.sqrt(2 / np.pi) * np.sin(y), abs=1e-14)

    b = build_basis("b", np.pi, 4)
    assert b.lambdas[0] == 0.0
    assert b.eval_psi(1, y) == pytest.approx(1 / np.sqrt(np.pi) * np.ones(3), abs=1e-14)

    c = build_basis("c", np.pi, 4)
    assert c.lambdas[0] == pytest.approx(0.25, abs=1e-14)
    assert c.eval_psi(1, y) == pytest.approx(np.sqrt(2 / np.pi) * np.sin(y / 2), abs=1e-14)


def test_lambdas_sorted_nonnegative():
    for case in CASES:
        basis = build_basis(case, 3.3, 17)
        assert np.all(np.diff(basis.lambdas) >= 0)
        assert np.all(basis.lambdas >= 0)


def test_build_errors():
    with pytest.raises(ConfigurationError):
        build_basis("a", -1.0, 4)
    with pytest.raises(ConfigurationError):
        build_basis("a", 1.0, 0)
    with pytest.raises(ConfigurationError):
        BoundaryCase.parse("e")


def test_analyze_basis_vectors():
    basis = build_basis("a", np.pi, 8)
    coeffs = analyze(basis.psi[:, 1], basis)
    expect = np.zeros(8)
    expect[1] = 1.0
    assert coeffs == pytest.approx(expect, abs=1e-12)
    assert analyze(np.zeros(basis.n_nodes), basis) == pytest.approx(np.zeros(8))


@pytest.mark.parametrize("case", CASES)
def test_analyze_linear_combination_against_quadrature(case):
    # independent oracle: adaptive quadrature of the closed-form integrand
    basis = build_basis(case, 2.0, 6)
    phi = lambda y: 3.0 * basis.eval_psi(1, y) + 2.0 * basis.eval_psi(3, y)
    oracle = np.array([
        quad(lambda y: phi(y) * basis.eval_psi(l, y), 0.0, 2.0, limit=200)[0]
        for l in range(1, 7)
    ])
    assert oracle == pytest.approx([3, 0, 2, 0, 0, 0], abs=1e-9)
    coeffs = analyze(phi(basis.nodes), basis)
    assert coeffs == pytest.approx(oracle, abs=1e-9)


def test_analyze_shape_error():
    basis = build_basis("a", 1.0, 4)
    with pytest.raises(ShapeError):
        analyze(np.zeros(basis.n_nodes + 1), basis)
    with pytest.raises(ShapeError):
        synthesize(np.zeros(5), basis)


@settings(max_examples=25, deadline=None)
@given(
    case=st.sampled_from(CASES),
    seed=st.integers(0, 2**31),
)
def test_round_trip_property(case, seed):
    basis = build_basis(case, np.pi, 12)
    coeffs = np.random.default_rng(seed).standard_normal(12)
    back = analyze(synthesize(coeffs, basis), basis)
    assert np.abs(back - coeffs).max() <= 1e-10


def test_synthesize_short_coeffs():
    basis = build_basis("a", np.pi, 6)
    vals = synthesize(np.array([1.0]), basis)
    assert vals == pytest.approx(basis.psi[:, 0], abs=1e-14)


def test_steklov_values():
    assert steklov_lambda1(build_basis("a", np.pi, 4)) == pytest.approx(1.0, abs=1e-13)
    assert steklov_lambda1(build_basis("c", np.pi, 4)) == pytest.approx(0.25, abs=1e-13)
    assert steklov_lambda1(build_basis("b", 2.2, 4)) == 0.0
    # matches the sharp Poincare constants L^2/pi^2 and 4 L^2/pi^2
    for L in (1.0, 2.5):
        assert steklov_lambda1(build_basis("a", L, 2)) == pytest.approx(np.pi**2 / L**2)
        assert steklov_lambda1(build_basis("c", L, 2)) == pytest.approx(np.pi**2 / (4 * L**2))


@pytest.mark.parametrize("case", ["a", "c"])
def test_discrete_steklov_inequality(case):
    # <phi, phi> <= (1/lambda_1) <phi', phi'> with equality on mode 1
    basis = build_basis(case, 1.7, 10)
    rng = np.random.default_rng(5)
    lam1 = steklov_lambda1(basis)
    for _ in range(20):
        c = rng.standard_normal(10)
        norm_sq = float(c @ c)
        grad_sq = float((basis.lambdas * c) @ c)
        assert norm_sq <= grad_sq / lam1 + 1e-12 * norm_sq
    e1 = np.zeros(10)
    e1[0] = 1.0
    assert float((basis.lambdas * e1) @ e1) / lam1 == pytest.approx(1.0, rel=1e-13)


def _product_coeffs(case, L, l_max, factor):
    basis = build_basis(case, L, l_max)
    dea = basis.dealias(factor)
    rng = np.random.default_rng(11)
    cu, cv = rng.standard_normal(l_max), rng.standard_normal(l_max)
    u = lambda y: sum(cu[i] * basis.eval_psi(i + 1, y) for i in range(l_max))
    v = lambda y: sum(cv[i] * basis.eval_psi(i + 1, y) for i in range(l_max))
    got = analyze(u(dea.nodes) * v(dea.nodes), dea)[:l_max]
    oracle = np.array([
        quad(lambda y: u(y) * v(y) * basis.eval_psi(l, y), 0.0, L, limit=300)[0]
        for l in range(1, l_max + 1)
    ])
    return got, oracle


@pytest.mark.parametrize("case", ["b", "d"])
def test_dealias_rule_exact_for_product_closed_families(case):
    # cosine and periodic families are closed under products, so the 3/2-rule
    # analysis equals the continuum Galerkin coefficients exactly
    got, oracle = _product_coeffs(case, 1.3, 5, 1.5)
    assert got == pytest.approx(oracle, abs=2e-9)


@pytest.mark.parametrize("case", ["a", "c"])
def test_dealias_analysis_converges_for_sine_families(case):
    # sine-family products leave the modal span; the padded analysis is
    # pseudo-spectral and approaches the Galerkin projection as the rule grows
    errs = []
    for factor in (1.5, 3.0, 6.0, 12.0):
        got, oracle = _product_coeffs(case, 1.3, 5, factor)
        errs.append(np.abs(got - oracle).max())
    assert errs[0] < 0.1
    assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-4
