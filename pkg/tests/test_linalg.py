import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fvsolve.errors import BracketError, ConvergenceError, DimensionError, SingularMatrixError
from fvsolve.linalg import (
    BlockTridiagonalOperator,
    RootBracket,
    as_matrix,
    banded_corner_inverse,
    continued_fraction_corner,
    doubling_limit,
    find_complex_root,
    find_real_root,
    find_real_roots,
    log_determinant,
    lu_determinant,
    refined_inverse,
    richardson,
    solve_linear,
    wynn_epsilon,
)


def laplace_det(m):
    m = np.asarray(m)
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    return sum(
        (-1) ** j * m[0, j] * laplace_det(np.delete(np.delete(m, 0, 0), j, 1)) for j in range(n)
    )


def toeplitz_operator(block_size=1, diag=2.0, off=-1.0):
    B = block_size

    def tail(start, stop):
        k = stop - start
        D = np.broadcast_to(diag * np.eye(B), (k, B, B)).copy()
        U = np.broadcast_to(off * np.eye(B), (k, B, B)).copy()
        return D, U, U.copy()

    return BlockTridiagonalOperator(B, tail_rule=tail)


# ---------------------------------------------------------------------------
# determinants and solves
# ---------------------------------------------------------------------------


def test_determinant_examples():
    assert lu_determinant(np.eye(5)) == pytest.approx(1.0)
    assert lu_determinant([[2, 1], [1, 2]]) == pytest.approx(3.0)


def test_determinant_matches_laplace_oracle():
    rng = np.random.default_rng(7)
    m = rng.uniform(-1, 1, (6, 6))
    ref = laplace_det(m)
    assert abs(lu_determinant(m) - ref) <= 1e-12 * abs(ref)


def test_determinant_rejects_non_square():
    with pytest.raises(DimensionError):
        lu_determinant(np.ones((2, 3)))


def test_as_matrix_rejects_non_finite():
    with pytest.raises(Exception):
        as_matrix([[1.0, np.nan]])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_determinant_is_multiplicative(seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 1, (5, 5)) + 1j * rng.uniform(-1, 1, (5, 5))
    B = rng.uniform(-1, 1, (5, 5)) + 1j * rng.uniform(-1, 1, (5, 5))
    lhs = lu_determinant(A @ B)
    rhs = lu_determinant(A) * lu_determinant(B)
    assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_log_determinant_agrees_with_determinant():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
    phase, logabs = log_determinant(m)
    assert phase * math.exp(logabs) == pytest.approx(lu_determinant(m), rel=1e-12)


def test_solve_examples():
    b = np.array([[1.0], [2.0], [3.0]])
    assert np.allclose(solve_linear(np.eye(3), b), b)
    x = solve_linear(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
    assert np.allclose(x, [1.0, 1.0])


def test_solve_multiply_back():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rhs = rng.normal(size=(8, 3))
    x = solve_linear(m, rhs)
    assert np.max(np.abs(m @ x - rhs)) <= 1e-10 * np.max(np.abs(rhs))


def test_solve_singular_reports_pivot():
    with pytest.raises(SingularMatrixError) as info:
        solve_linear(np.array([[1.0, 1.0], [-1.0, -1.0]]), np.ones(2))
    assert info.value.pivot >= 0


def test_solve_dimension_mismatch():
    with pytest.raises(DimensionError):
        solve_linear(np.eye(3), np.ones(4))


# ---------------------------------------------------------------------------
# continued fraction
# ---------------------------------------------------------------------------


def test_corner_with_zero_coupling_is_blockwise_inverse():
    rng = np.random.default_rng(5)
    D = [rng.normal(size=(2, 2)) + 3 * np.eye(2) for _ in range(3)]
    Z = [np.zeros((2, 2)) for _ in range(3)]

    def tail(start, stop):
        k = stop - start
        return (
            np.broadcast_to(np.eye(2), (k, 2, 2)).copy(),
            np.zeros((k, 2, 2)),
            np.zeros((k, 2, 2)),
        )

    op = BlockTridiagonalOperator(2, D, Z, Z, tail)
    G, _ = continued_fraction_corner(op, 3)
    for i in range(3):
        s = slice(2 * i, 2 * i + 2)
        assert np.allclose(G[s, s], np.linalg.inv(D[i]), atol=1e-13)
    assert np.allclose(G[0:2, 2:4], 0)


def test_toeplitz_fixed_point():
    # x = 1/(2 - x) has the double root 1; the recursion converges like 1/K
    G, depth = continued_fraction_corner(toeplitz_operator(), 1, tol=1e-12)
    assert G[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert depth >= 32


def test_corner_matches_large_truncation():
    op = toeplitz_operator(diag=2.5)
    G, _ = continued_fraction_corner(op, 4)
    n = 2000
    T = 2.5 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    ref = np.linalg.inv(T)[:4, :4]
    assert np.max(np.abs(G - ref)) <= 1e-10


def test_corner_residual_on_prefix():
    rng = np.random.default_rng(2)
    B = 2
    base = rng.normal(size=(B, B)) * 0.2

    def tail(start, stop):
        idx = np.arange(start, stop)[:, None, None]
        D = (3.0 + 0.01 * idx) * np.eye(B) + base
        U = -np.broadcast_to(np.eye(B), D.shape).copy()
        return D, U, U.copy()

    op = BlockTridiagonalOperator(B, tail_rule=tail)
    tol = 1e-12
    G, depth = continued_fraction_corner(op, 3, tol=tol)
    # rebuild the prefix with the exact tail from a much deeper recursion
    n = 3 + 400
    D, U, L = op.blocks(0, n)
    M = np.zeros((n * B, n * B))
    for i in range(n):
        M[i * B:(i + 1) * B, i * B:(i + 1) * B] = D[i]
        if i + 1 < n:
            M[i * B:(i + 1) * B, (i + 1) * B:(i + 2) * B] = U[i]
            M[(i + 1) * B:(i + 2) * B, i * B:(i + 1) * B] = L[i]
    ref = np.linalg.inv(M)[:3 * B, :3 * B]
    assert np.max(np.abs(G - ref)) <= 10 * tol


def test_corner_requires_blocks():
    with pytest.raises(DimensionError):
        continued_fraction_corner(toeplitz_operator(), 0)


def test_doubling_limit_nonconvergence_carries_history():
    with pytest.raises(ConvergenceError) as info:
        doubling_limit(lambda k: np.array([2.0 + math.sin(k)]), tol=1e-12, max_depth=256)
    assert info.value.history


def test_doubling_limit_accelerates_algebraic_tail():
    value, depth = doubling_limit(lambda k: np.array([1.0 + 1.0 / k + 0.5 / k**2]), tol=1e-12)
    assert value[0] == pytest.approx(1.0, abs=1e-11)
    assert depth <= 4096


def test_doubling_limit_fixed_depth_replays_schedule():
    f = lambda k: np.array([1.0 + 1.0 / k])
    value, depth = doubling_limit(f, tol=1e-12)
    again, depth2 = doubling_limit(f, tol=1e-12, fixed_depth=depth)
    assert depth2 == depth
    assert np.array_equal(value, again)


def test_richardson_removes_power_terms():
    seq = [np.array(2.0 + 3.0 / k + 5.0 / k**2) for k in (8, 16, 32)]
    assert float(richardson(seq, (1, 2))) == pytest.approx(2.0, abs=1e-13)


def test_wynn_epsilon_sums_geometric_series():
    partial = np.cumsum([0.5**k for k in range(7)])
    est = wynn_epsilon([np.array(x) for x in partial])
    assert float(np.real(est)) == pytest.approx(2.0, abs=1e-12)


def test_banded_corner_inverse_matches_dense():
    rng = np.random.default_rng(9)
    n, bw = 40, 2
    A = np.zeros((n, n))
    for k in range(-bw, bw + 1):
        A += np.diag(rng.normal(size=n - abs(k)), k)
    A += 6 * np.eye(n)
    ab = np.zeros((2 * bw + 1, n))
    for k in range(-bw, bw + 1):
        d = np.diag(A, k)
        if k >= 0:
            ab[bw - k, k:] = d
        else:
            ab[bw - k, :n + k] = d
    ref = np.linalg.inv(A)
    corner = banded_corner_inverse(ab, bw, bw)
    assert corner.shape == (bw, bw)
    assert np.allclose(corner, ref[:bw, :bw], atol=1e-13)


def test_refined_inverse_reduces_residual():
    rng = np.random.default_rng(4)
    Q, _ = np.linalg.qr(rng.normal(size=(30, 30)))
    M = Q @ np.diag(np.logspace(0, 9, 30)) @ Q.T
    X = refined_inverse(M)
    assert np.max(np.abs(M @ X - np.eye(30))) < 1e-6
    assert X.dtype == M.dtype


# ---------------------------------------------------------------------------
# root finders
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "f, lo, hi, root",
    [
        (lambda x: x - 1, 0.0, 2.0, 1.0),
        (lambda x: x * x - 2, 1.0, 2.0, math.sqrt(2)),
        (math.cos, 1.0, 2.0, math.pi / 2),
    ],
)
def test_real_root_examples(f, lo, hi, root):
    r = find_real_root(f, RootBracket.from_function(f, lo, hi), tol=1e-12)
    assert r == pytest.approx(root, abs=1e-8)


def test_real_root_needs_sign_change():
    with pytest.raises(BracketError):
        RootBracket.from_function(lambda x: x * x + 1, -1.0, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 3))
def test_real_root_is_locally_minimal(shift, scale):
    f = lambda x: scale * math.tanh(x - shift)
    tol = 1e-10
    r = find_real_root(f, RootBracket.from_function(f, shift - 7, shift + 6), tol=tol)
    assert abs(f(r)) <= max(abs(f(r + tol)), abs(f(r - tol)))


def test_vectorised_roots_match_scalar():
    shifts = np.array([0.3, -1.2, 2.5, 0.0])
    f = lambda x, which: np.sin(x - shifts[which])
    lo, hi = shifts - 1.0, shifts + 1.3
    roots = find_real_roots(f, lo, hi, f(lo, np.arange(4)), f(hi, np.arange(4)), tol=1e-13)
    assert np.allclose(roots, shifts, atol=1e-12)


@pytest.mark.parametrize(
    "f, guess, root",
    [
        (lambda z: z * z + 1, 0.2 + 0.8j, 1j),
        (lambda z: z - (3 - 2j), 0.0, 3 - 2j),
        (lambda z: cmath.exp(z) - 2, 1.0, math.log(2)),
    ],
)
def test_complex_root_examples(f, guess, root):
    z = find_complex_root(f, guess, tol=1e-13)
    assert abs(z - root) <= 1e-10


def test_complex_root_scale_invariant():
    f = lambda z: z**3 - 2 * z + 2
    k = 3.7 - 1.1j
    z1 = find_complex_root(f, 0.5 + 0.5j, tol=1e-14)
    z2 = find_complex_root(lambda z: k * f(z), 0.5 + 0.5j, tol=1e-14)
    assert abs(z1 - z2) <= 1e-10


def test_complex_root_reports_history():
    with pytest.raises(ConvergenceError) as info:
        find_complex_root(lambda z: cmath.exp(z), 0.0, max_iter=5)
    assert len(info.value.history) >= 2
