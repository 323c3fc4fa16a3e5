import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fvsolve import csbasis
from fvsolve.csbasis import (
    BasisSpec,
    cross_l_matrix,
    cs_function,
    gauss_laguerre,
    integrate,
    inverse_r_matrix,
    kinetic_matrix,
    overlap_matrix,
    power_r_matrix,
    radial_matrix,
    screened_coulomb_matrix,
)
from fvsolve.errors import DomainError
from oracles import GRID, closed_forms, entry_scale, laguerre_series

N = 30


# ---------------------------------------------------------------------------
# basis functions
# ---------------------------------------------------------------------------


def test_function_vanishes_at_origin():
    for n in range(5):
        assert cs_function(n, BasisSpec(2, 0.7, 5), 0.0) == 0.0


def test_function_ground_state_value():
    assert cs_function(0, BasisSpec(0, 1.0, 0), 1.0) == pytest.approx(2 / math.e, rel=1e-14)


def test_function_matches_series_oracle():
    n, l, b, r = 3, 1, 0.7, 2.5
    x = 2 * b * r
    norm = math.sqrt(math.factorial(n) / math.factorial(n + 2 * l + 1))
    ref = norm * x ** (l + 1) * math.exp(-x / 2) * laguerre_series(n, 2 * l + 1, x)
    assert cs_function(n, BasisSpec(l, b, n), r) == pytest.approx(ref, rel=1e-12)


def test_function_rejects_negative_radius():
    with pytest.raises(DomainError):
        cs_function(0, BasisSpec(0, 1.0, 0), -1.0)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 12),
    st.integers(0, 3),
    st.sampled_from([0.3, 1.0, 4.0]),
    st.floats(0.05, 1.0),
)
def test_sturm_liouville_identity(n, l, b, t):
    spec = BasisSpec(l, b, n)
    # sample where the function lives: up to ~ (n + l + 1) / b
    r = 0.2 / b + t * 2 * (n + l + 2) / b
    h = 1e-4 / b
    f = lambda x: cs_function(n, spec, x)
    f0 = f(r)
    d2 = (f(r + h) - 2 * f0 + f(r - h)) / (h * h)
    lhs = (-d2 + l * (l + 1) * f0 / r**2 + b * b * f0) * r
    rhs = 2 * b * (n + l + 1) * f0
    peak = max(abs(f(x)) for x in np.linspace(0.01, 3 * (n + l + 2) / b, 200))
    scale = 2 * b * (n + l + 1) * peak
    assert abs(lhs - rhs) <= 1e-6 * scale


# ---------------------------------------------------------------------------
# closed forms against quadrature
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("l, b", GRID)
def test_closed_forms_match_quadrature(l, b):
    spec = BasisSpec(l, b, N)
    for name, mat, ref in closed_forms(spec):
        A = mat.data
        scale = entry_scale(ref)
        err = np.max(np.abs(A - ref) / scale)
        assert err <= 1e-11, f"{name}: relative error {err:.2e}"


@pytest.mark.parametrize("l, b", GRID)
def test_declared_bandwidths_are_tight(l, b):
    spec = BasisSpec(l, b, N)
    n = np.arange(N + 1)
    off = np.abs(n[:, None] - n[None, :])
    for name, mat, ref in closed_forms(spec):
        w = mat.bandwidth
        scale = entry_scale(ref)
        assert np.all(mat.data[off > w] == 0), name
        assert np.max(np.abs(ref[off > w]) / scale[off > w], initial=0) < 1e-13, name
        assert np.any(mat.data[off == w] != 0), name


@pytest.mark.parametrize("l, b", GRID)
def test_overlap_is_positive_definite(l, b):
    S = overlap_matrix(BasisSpec(l, b, N)).data
    assert np.array_equal(S, S.T)
    np.linalg.cholesky(S)


def test_overlap_examples():
    S = overlap_matrix(BasisSpec(0, 1.0, 3)).data
    assert S[0, 0] == pytest.approx(1.0)
    assert S[1, 0] == pytest.approx(-math.sqrt(2) / 2)
    assert S[2, 0] == 0.0


def test_inverse_r_examples():
    spec = BasisSpec(2, 1.7, 6)
    M = inverse_r_matrix(spec).data
    assert M[0, 0] == 1 and M[4, 4] == 1 and M[2, 5] == 0


def test_kinetic_examples():
    T = kinetic_matrix(BasisSpec(0, 1.0, 2), mass=1.0).data
    assert T[0, 0] == pytest.approx(0.5)
    assert T[0, 1] == pytest.approx(math.sqrt(2) / 4)


@pytest.mark.parametrize("l", [0, 1, 3])
def test_kinetic_diagonal_is_linear_in_scale(l):
    # T_nn = b (n + l + 1) / 2m, so doubling b doubles the diagonal
    a = np.diag(kinetic_matrix(BasisSpec(l, 0.8, 10)).data)
    c = np.diag(kinetic_matrix(BasisSpec(l, 1.6, 10)).data)
    assert np.allclose(c, 2 * a, rtol=1e-14)


def test_power_examples():
    spec = BasisSpec(0, 1.0, 5)
    R1 = power_r_matrix(spec, 1).data
    R2 = power_r_matrix(spec, 2).data
    assert R1[0, 0] == pytest.approx(1.5)
    assert R2[0, 0] == pytest.approx(3.0)
    assert R1[0, 3] == 0.0


def test_power_rejects_unknown_exponent():
    with pytest.raises(DomainError):
        power_r_matrix(BasisSpec(0, 1.0, 3), 7)


# ---------------------------------------------------------------------------
# quadrature matrices
# ---------------------------------------------------------------------------


def test_screened_coulomb_examples():
    spec = BasisSpec(0, 1.0, 8)
    M = screened_coulomb_matrix(spec, 1.0).data
    assert M[0, 0] == pytest.approx(4 / 9, rel=1e-13)
    assert np.max(np.abs(M - M.T)) <= 1e-13


def test_screened_coulomb_small_screening_limit():
    # exp(-ar)/r = 1/r - a + O(a^2 r), so (M - I)/a tends to -S
    spec = BasisSpec(1, 0.6, 10)
    S = overlap_matrix(spec).data
    for a in (1e-6, 1e-8):
        M = screened_coulomb_matrix(spec, a).data
        assert np.max(np.abs(M - np.eye(spec.size))) <= 1.01 * a * np.max(np.abs(S))
        assert np.max(np.abs((M - np.eye(spec.size)) / a + S)) <= 1e-3 * np.max(np.abs(S))


def test_screened_coulomb_rejects_nonpositive_screening():
    with pytest.raises(DomainError):
        screened_coulomb_matrix(BasisSpec(0, 1.0, 3), 0.0)


def test_cross_l_zero_function():
    bra, ket = BasisSpec(1, 1.0, 4), BasisSpec(0, 1.0, 4)
    M = cross_l_matrix(bra, ket, lambda r: np.zeros_like(r)).data
    assert not np.any(M)


def test_cross_l_inverse_r_consistency():
    spec = BasisSpec(2, 0.9, 12)
    M = cross_l_matrix(spec, spec, lambda r: np.ones_like(r), origin_power=-1).data
    assert np.max(np.abs(M - np.eye(spec.size))) <= 1e-12


def test_cross_l_coulomb_derivative_against_doubled_order():
    bra, ket = BasisSpec(1, 1.0, 10), BasisSpec(0, 1.0, 10)
    one = lambda r: np.ones_like(r)
    M = cross_l_matrix(bra, ket, one, origin_power=-2).data
    M2 = cross_l_matrix(bra, ket, one, origin_power=-2, order=2 * csbasis.default_order(10)).data
    assert np.max(np.abs(M - M2)) <= 1e-11 * np.max(np.abs(M2))
    # n = n' = 0 directly: N1 (2r)^2 e^-r r^-2 N0 2r e^-r = 8 N1 r e^-2r, N1 = 1/sqrt(6)
    assert M[0, 0] == pytest.approx(8 / math.sqrt(6) / 4, rel=1e-13)


def test_cross_l_rejects_nonintegrable_singularity():
    spec = BasisSpec(0, 1.0, 3)
    with pytest.raises(DomainError):
        cross_l_matrix(spec, spec, lambda r: np.ones_like(r), origin_power=-3)


def test_rotated_basis_matrices_are_complex_symmetric():
    spec = BasisSpec(0, 2.0, 10, theta=0.1)
    S = overlap_matrix(spec).data
    V = radial_matrix(spec, spec, -1, 1.0)
    assert np.iscomplexobj(S) and np.iscomplexobj(V)
    assert np.allclose(V, V.T, atol=1e-13)
    assert np.allclose(V, screened_coulomb_matrix(spec, 1.0, check=False).data)


# ---------------------------------------------------------------------------
# integration rule
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "alpha, beta, f, ref",
    [
        (0.0, 1.0, lambda r: np.ones_like(r), 1.0),
        (3.0, 2.0, lambda r: np.ones_like(r), 0.375),
        (1.0, 1.0, np.sin, 0.5),
    ],
)
def test_integrate_examples(alpha, beta, f, ref):
    assert integrate(f, gauss_laguerre(60, alpha, beta)) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 3.5, 9.0])
@pytest.mark.parametrize("beta", [0.6, 1.0, 8.0])
def test_rule_reproduces_gamma_integral(alpha, beta):
    rule = gauss_laguerre(90, alpha, beta)
    ref = math.gamma(alpha + 1) / beta ** (alpha + 1)
    assert integrate(lambda r: np.ones_like(r), rule) == pytest.approx(ref, rel=1e-13)


def test_integrate_rejects_nan():
    with pytest.raises(DomainError):
        integrate(lambda r: np.full_like(r, np.nan), gauss_laguerre(5))
