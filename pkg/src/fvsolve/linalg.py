"""Dense and block-structured complex linear algebra.

Everything here is a pure function of its inputs.  Matrices are plain
``numpy`` arrays (real or complex); block operators may carry leading batch
dimensions so that many energies can be pushed through one recursion.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import (
    BracketError,
    ConvergenceError,
    DimensionError,
    DomainError,
    SingularMatrixError,
)

__all__ = [
    "as_matrix",
    "lu_determinant",
    "log_determinant",
    "solve_linear",
    "BlockTridiagonalOperator",
    "continued_fraction_tail",
    "doubling_limit",
    "richardson",
    "banded_corner_inverse",
    "refined_inverse",
    "continued_fraction_corner",
    "wynn_epsilon",
    "RootBracket",
    "find_real_root",
    "find_real_roots",
    "find_complex_root",
]

DEFAULT_CF_TOL = 1e-12
DEFAULT_CF_MAX_DEPTH = 200_000


def as_matrix(m, *, square: bool = False) -> np.ndarray:
    """Validate ``m`` as a finite 2-d array with at least one row and column."""
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-d matrix, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix contains NaN or Inf entries")
    if a.dtype.kind not in "fc":
        a = a.astype(float)
    return a


def _lu(m: np.ndarray):
    # callers inspect the pivots themselves, so scipy's singularity warning is noise
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    perm_sign = (-1) ** int(np.count_nonzero(piv != np.arange(piv.size)))
    return lu, piv, perm_sign


def lu_determinant(m) -> complex:
    """Determinant by partially pivoted LU."""
    a = as_matrix(m, square=True)
    lu, _, sign = _lu(a)
    return complex(sign * np.prod(np.diag(lu)))


def log_determinant(m) -> tuple[complex, float]:
    """Return ``(phase, log|det m|)`` so that ``det m = phase * exp(logabs)``.

    Matrices built from relativistic blocks easily overflow a plain
    determinant; the split keeps the magnitude in log form.  A singular
    matrix yields ``(0, -inf)``.
    """
    a = as_matrix(m, square=True)
    lu, _, sign = _lu(a)
    d = np.diag(lu)
    mags = np.abs(d)
    if np.any(mags == 0):
        return 0j, -math.inf
    phase = complex(sign * np.prod(d / mags))
    return phase, float(np.sum(np.log(mags)))


def solve_linear(m, rhs, *, rcond: float | None = None) -> np.ndarray:
    """Solve ``m @ x = rhs``.

    Raises :class:`SingularMatrixError` when the smallest LU pivot falls below
    ``rcond * max pivot`` (default: n * machine epsilon).
    """
    a = as_matrix(m, square=True)
    b = np.asarray(rhs)
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"rhs has {b.shape[0]} rows, matrix has {a.shape[0]}")
    lu, piv, _ = _lu(a)
    pivots = np.abs(np.diag(lu))
    scale = pivots.max()
    if rcond is None:
        rcond = a.shape[0] * np.finfo(float).eps
    if scale == 0 or pivots.min() <= rcond * scale:
        raise SingularMatrixError(
            "matrix is singular to working precision", pivot=float(pivots.min())
        )
    x = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
    return x[:, 0] if vector else x


# ---------------------------------------------------------------------------
# block tridiagonal operators and the matrix continued fraction
# ---------------------------------------------------------------------------

TailRule = Callable[[int, int], "tuple[np.ndarray, np.ndarray, np.ndarray]"]


@dataclass(frozen=True)
class BlockTridiagonalOperator:
    """Semi-infinite block tridiagonal operator.

    ``diagonal[i]`` is block (i, i), ``upper[i]`` block (i, i+1) and
    ``lower[i]`` block (i+1, i).  Blocks beyond the stored prefix come from
    ``tail_rule(start, stop)``, which returns stacks ``(D, U, L)`` of shape
    ``(stop - start, *batch, B, B)``.  Leading batch dimensions (for example
    one entry per energy) are carried through every recursion unchanged.
    """

    block_size: int
    diagonal: Sequence[np.ndarray] = ()
    upper: Sequence[np.ndarray] = ()
    lower: Sequence[np.ndarray] = ()
    tail_rule: TailRule | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.block_size < 1:
            raise DimensionError("block_size must be >= 1")
        for name in ("diagonal", "upper", "lower"):
            for blk in getattr(self, name):
                if np.shape(blk)[-2:] != (self.block_size, self.block_size):
                    raise DimensionError(
                        f"{name} block of shape {np.shape(blk)} does not match "
                        f"block_size {self.block_size}"
                    )
        if not (len(self.diagonal) == len(self.upper) == len(self.lower)):
            raise DimensionError("stored prefixes must have equal length")
        if self.tail_rule is None and not self.diagonal:
            raise DimensionError("operator needs stored blocks or a tail_rule")

    @property
    def stored(self) -> int:
        return len(self.diagonal)

    def blocks(self, start: int, stop: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Stacks of diagonal/upper/lower blocks for indices ``start..stop-1``."""
        key = (start, stop)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        parts = []
        if start < self.stored:
            k = min(stop, self.stored)
            parts.append(
                tuple(
                    np.stack([np.asarray(x) for x in seq[start:k]])
                    for seq in (self.diagonal, self.upper, self.lower)
                )
            )
            start = k
        if start < stop:
            if self.tail_rule is None:
                raise DimensionError(
                    f"block {start} requested beyond stored prefix without a tail_rule"
                )
            parts.append(tuple(np.asarray(x) for x in self.tail_rule(start, stop)))
        if len(parts) == 1:
            out = parts[0]
        else:
            out = tuple(np.concatenate([p[j] for p in parts]) for j in range(3))
        if len(self._cache) > 8:
            self._cache.clear()
        self._cache[key] = out
        return out


def _backward_recursion(op: BlockTridiagonalOperator, start: int, depth: int) -> np.ndarray:
    """C_i = D_i - U_i C_{i+1}^{-1} L_i from i = start+depth-1 down to start."""
    D, U, L = op.blocks(start, start + depth)
    C = D[-1]
    for j in range(depth - 2, -1, -1):
        try:
            C = D[j] - U[j] @ np.linalg.solve(C, L[j])
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(
                f"singular continued-fraction block at depth index {start + j + 1}",
                pivot=0.0,
                index=start + j + 1,
            ) from exc
    return C


def banded_corner_inverse(ab: np.ndarray, bw: int, corner: int) -> np.ndarray:
    """Top-left ``corner`` x ``corner`` block of the inverse of a band matrix.

    ``ab`` is LAPACK band storage with ``bw`` sub- and super-diagonals,
    ``ab[bw + i - j, j] = M[i, j]``.  Partial pivoting makes this the stable
    equivalent of the block backward recursion on the same truncated matrix.
    """
    n = ab.shape[1]
    rhs = np.zeros((n, corner), dtype=ab.dtype)
    rhs[np.arange(corner), np.arange(corner)] = 1.0
    try:
        x = scipy.linalg.solve_banded((bw, bw), ab, rhs, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"singular truncated tail ({exc})", pivot=0.0) from exc
    return x[:corner]


def refined_inverse(M: np.ndarray) -> np.ndarray:
    """Inverse of a (stack of) square matrices with one refinement step.

    The residual I - M X is formed in extended precision, which removes
    most of the round-off that a plain inverse leaves for condition numbers
    up to about 1/sqrt(eps).
    """
    M = np.asarray(M)
    X = np.linalg.inv(M)
    ext = np.clongdouble if np.iscomplexobj(X) else np.longdouble
    eye = np.eye(M.shape[-1], dtype=ext)
    R = eye - M.astype(ext) @ X.astype(ext)
    return (X.astype(ext) + X.astype(ext) @ R).astype(X.dtype)


def wynn_epsilon(seq: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise Wynn epsilon extrapolation of a sequence of arrays."""
    s = [np.asarray(x, dtype=complex) for x in seq]
    if len(s) < 3:
        return s[-1]
    prev = [np.zeros_like(s[0]) for _ in range(len(s) + 1)]
    cur = list(s)
    best = s[-1]
    k = 0
    while len(cur) > 1:
        diffs = [cur[i + 1] - cur[i] for i in range(len(cur) - 1)]
        # a column that has settled to round-off ends the table
        if any(np.all(np.abs(d) <= 4 * np.finfo(float).eps * np.abs(cur[-1])) for d in diffs):
            break
        nxt = []
        for i, diff in enumerate(diffs):
            with np.errstate(divide="ignore", invalid="ignore"):
                inv = np.where(diff == 0, 0, 1.0 / np.where(diff == 0, 1, diff))
            nxt.append(prev[i + 1] + inv)
        prev, cur = cur, nxt
        k += 1
        if k % 2 == 0 and cur:
            best = cur[-1]
    return best


def _rel_change(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(b))), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b))) / scale


def richardson(seq: Sequence[np.ndarray], exponents: Sequence[float]) -> np.ndarray:
    """Richardson table for values at depths K, 2K, 4K, ...

    Column j removes an error term proportional to K^(-exponents[j]); it
    needs ``len(exponents) + 1`` trailing values.
    """
    R = [np.asarray(x) for x in seq[-(len(exponents) + 1):]]
    for p in exponents:
        R = [R[i] + (R[i] - R[i - 1]) / (2.0**p - 1.0) for i in range(1, len(R))]
    return R[-1]


ACCEL_WINDOW = 8
STALL_STEPS = 3


def _families(exponents) -> list[Sequence[float]]:
    """``exponents`` is one ladder of error exponents or a sequence of ladders."""
    if len(exponents) and np.ndim(exponents[0]) > 0:
        return list(exponents)
    return [exponents]


def _accelerated(iterates: Sequence[np.ndarray], exponents) -> list[np.ndarray]:
    """Plain, Wynn and Richardson estimates (one per exponent ladder) from the trailing iterates."""
    last = iterates[-ACCEL_WINDOW:]
    out = [np.asarray(last[-1])]
    if len(last) >= 3:
        w = wynn_epsilon(last)
        out.append(w if np.iscomplexobj(last[-1]) else w.real)
        for ladder in _families(exponents):
            out.append(richardson(last, ladder[: len(last) - 1]))
    return out


def _best_estimate(iterates, measure, exponents) -> tuple[float, np.ndarray]:
    """The estimate whose change since the previous depth is smallest.

    Depends on the iterates alone, so an adaptive run and a replay to the
    same depth make the same choice.
    """
    now = _accelerated(iterates, exponents)
    before = _accelerated(iterates[:-1], exponents)
    best = (math.inf, now[0])
    for k, value in enumerate(now):
        ref = before[k] if k < len(before) else before[0]
        change = _rel_change(measure(value), measure(ref))
        if change < best[0]:
            best = (change, value)
    return best


def _replay(evaluate, initial_depth: int, depth: int, measure, exponents) -> np.ndarray:
    """Reproduce the value returned by the doubling schedule that ended at ``depth``."""
    depths = [depth]
    while depths[-1] // 2 >= max(2, initial_depth) and depths[-1] % 2 == 0:
        depths.append(depths[-1] // 2)
    depths = depths[::-1][-(ACCEL_WINDOW + 1):]
    iterates = [evaluate(d) for d in depths]
    if len(iterates) < 2:
        return iterates[-1]
    return _best_estimate(iterates, measure, exponents)[1]


def doubling_limit(
    evaluate: Callable[[int], np.ndarray],
    tol: float = DEFAULT_CF_TOL,
    max_depth: int = DEFAULT_CF_MAX_DEPTH,
    initial_depth: int = 32,
    measure: Callable[[np.ndarray], np.ndarray] | None = None,
    fixed_depth: int | None = None,
    noise_floor: float = 1000.0,
    exponents: Sequence[float] | Sequence[Sequence[float]] = (1, 2, 3, 4),
) -> tuple[np.ndarray, int]:
    """Limit of ``evaluate(K)`` as K grows, by doubling K.

    K is doubled until the value changes by less than ``tol`` (relative max
    norm of ``measure(value)``).  Quantities that converge algebraically in K
    shrink geometrically along the doubling sequence, so each step also forms
    Wynn epsilon and Richardson extrapolations (error terms K^-p for p in
    ``exponents``) of the trailing iterates and accepts whichever estimate
    has settled best; several ladders of exponents may be given, each
    yielding its own candidate.  Extrapolation amplifies
    round-off: once the best change has come within ``noise_floor * tol``
    and then grows again or stops improving, the best estimate so far is
    returned.  Passing
    ``fixed_depth`` skips the adaptive loop and replays the schedule ending
    at that depth, so a depth reported by an adaptive call reproduces the
    same value.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    measure = measure or (lambda c: c)
    if fixed_depth is not None:
        return _replay(evaluate, initial_depth, fixed_depth, measure, exponents), fixed_depth
    depth = max(2, initial_depth)
    iterates = [evaluate(depth)]
    best: tuple[float, np.ndarray, int] | None = None
    stale = 0
    while True:
        new_depth = 2 * depth
        if new_depth > max_depth:
            if best is not None and best[0] < noise_floor * tol:
                return best[1], best[2]
            last = best[0] if best else float("nan")
            raise ConvergenceError(
                f"continued fraction not converged within depth {max_depth} "
                f"(best relative change {last:.3e})",
                history=[measure(x) for x in iterates[-2:]],
            )
        iterates.append(evaluate(new_depth))
        iterates = iterates[-(ACCEL_WINDOW + 1):]
        depth = new_depth
        change, value = _best_estimate(iterates, measure, exponents)
        if change < tol:
            return value, depth
        if best is not None and best[0] < noise_floor * tol:
            if change > 2 * best[0] or stale >= STALL_STEPS:
                return best[1], best[2]
        if best is None or change < 0.5 * best[0]:
            stale = 0
        else:
            stale += 1
        if best is None or change < best[0]:
            best = (change, value, depth)


def continued_fraction_tail(
    op: BlockTridiagonalOperator,
    start: int,
    tol: float = DEFAULT_CF_TOL,
    max_depth: int = DEFAULT_CF_MAX_DEPTH,
    initial_depth: int = 32,
    measure: Callable[[np.ndarray], np.ndarray] | None = None,
    fixed_depth: int | None = None,
) -> tuple[np.ndarray, int]:
    """Converged tail block ``C_start`` of the backward recursion.

    The recursion is started at depth K with ``C_K = D_K``; K follows the
    schedule of :func:`doubling_limit`.
    """
    return doubling_limit(
        lambda d: _backward_recursion(op, start, d), tol, max_depth, initial_depth,
        measure, fixed_depth,
    )


def continued_fraction_corner(
    op: BlockTridiagonalOperator,
    corner_blocks: int,
    tol: float = DEFAULT_CF_TOL,
    max_depth: int = DEFAULT_CF_MAX_DEPTH,
    initial_depth: int = 32,
) -> tuple[np.ndarray, int]:
    """Top-left ``corner_blocks`` x ``corner_blocks`` block corner of ``op^{-1}``.

    The prefix matrix has its last diagonal block replaced by the converged
    continued fraction, then is inverted densely.  Returns the corner and the
    tail depth that met ``tol``.
    """
    if corner_blocks < 1:
        raise DimensionError("corner_blocks must be >= 1")
    D, U, L = op.blocks(0, corner_blocks)
    B = op.block_size

    def prefix_with(C_tail):
        last = D[-1] - U[-1] @ np.linalg.solve(C_tail, L[-1])
        batch = D.shape[1:-2]
        n = corner_blocks * B
        M = np.zeros(batch + (n, n), dtype=np.result_type(D, C_tail))
        for i in range(corner_blocks):
            s = slice(i * B, (i + 1) * B)
            M[..., s, s] = last if i == corner_blocks - 1 else D[i]
            if i + 1 < corner_blocks:
                t = slice((i + 1) * B, (i + 2) * B)
                M[..., s, t] = U[i]
                M[..., t, s] = L[i]
        return M

    def corner(C_tail):
        try:
            return np.linalg.inv(prefix_with(C_tail))
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError("prefix matrix is singular", index=corner_blocks) from exc

    C, depth = continued_fraction_tail(
        op, corner_blocks, tol=tol, max_depth=max_depth,
        initial_depth=initial_depth, measure=corner,
    )
    return corner(C), depth


# ---------------------------------------------------------------------------
# scalar root finders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise BracketError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")
        if not (self.f_lo * self.f_hi < 0):
            raise BracketError(
                f"no sign change on [{self.lo}, {self.hi}]: f = {self.f_lo}, {self.f_hi}"
            )

    @classmethod
    def from_function(cls, f: Callable[[float], float], lo: float, hi: float) -> "RootBracket":
        return cls(lo, hi, float(f(lo)), float(f(hi)))


def find_real_root(f: Callable[[float], float], bracket: RootBracket, tol: float = 1e-12) -> float:
    """Zero of ``f`` inside ``bracket`` by Brent's bisection-safeguarded secant."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    r = scipy.optimize.brentq(f, bracket.lo, bracket.hi, xtol=tol, rtol=4 * np.finfo(float).eps)
    return float(r)


def find_real_roots(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    f_lo: np.ndarray,
    f_hi: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> np.ndarray:
    """Refine many sign-change brackets at once (Illinois regula falsi).

    ``f(x, which)`` evaluates the brackets with indices ``which`` at the
    abscissae ``x``, so each iteration costs one vectorized call.  Every bracket keeps its sign
    change; iteration stops once all widths are below ``tol``.
    """
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    flo, fhi = np.array(f_lo, dtype=float), np.array(f_hi, dtype=float)
    if np.any(lo >= hi) or np.any(flo * fhi > 0):
        raise BracketError("every bracket needs lo < hi and a sign change")
    side = np.zeros(len(lo), dtype=int)
    # widths below a few ulps of the abscissa cannot be resolved
    tol = np.maximum(tol, 8 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi)))
    done = (hi - lo) <= tol
    exact = np.full(len(lo), np.nan)
    for _ in range(max_iter):
        act = np.flatnonzero(~done)
        if not len(act):
            break
        a, b, fa, fb = lo[act], hi[act], flo[act], fhi[act]
        t = tol[act]
        with np.errstate(divide="ignore", invalid="ignore"):
            x = (a * fb - b * fa) / (fb - fa)
        # a secant point hugging an end is nudged half a tolerance inward,
        # which usually closes the bracket on the next step
        x = np.where(np.isfinite(x), x, 0.5 * (a + b))
        x = np.where(x <= a + 0.25 * t, a + 0.5 * t, x)
        x = np.where(x >= b - 0.25 * t, b - 0.5 * t, x)
        fx = np.asarray(f(x, act), dtype=float)
        zero = fx == 0
        exact[act[zero]] = x[zero]
        done[act[zero]] = True
        left = (np.sign(fx) == np.sign(fa)) & ~zero
        right = ~left & ~zero
        # Illinois: halve the stale end value when the same side moves twice
        stale_hi = left & (side[act] == 1)
        stale_lo = right & (side[act] == -1)
        lo[act[left]], flo[act[left]] = x[left], fx[left]
        hi[act[right]], fhi[act[right]] = x[right], fx[right]
        fhi[act[stale_hi]] *= 0.5
        flo[act[stale_lo]] *= 0.5
        side[act[left]] = 1
        side[act[right]] = -1
        done |= (hi - lo) <= tol
    else:
        raise ConvergenceError(f"bracket refinement did not reach width {np.max(tol)}")
    out = np.where(np.isnan(exact), np.where(np.abs(flo) <= np.abs(fhi), lo, hi), exact)
    return out


def find_complex_root(
    f: Callable[[complex], complex],
    guess: complex,
    tol: float = 1e-12,
    max_iter: int = 100,
    step: complex | None = None,
    xtol: float | None = None,
) -> complex:
    """Muller's method from three points placed around ``guess``.

    Stops when ``|f(z)| <= tol`` or when the step shrinks below ``xtol``
    (default ``1e-15 * max(1, |z|)``).
    """
    z2 = complex(guess)
    h = step if step is not None else 1e-3 * max(1.0, abs(z2))
    z0, z1 = z2 - h, z2 + h
    f0, f1, f2 = f(z0), f(z1), f(z2)
    history = [(z2, f2)]
    for _ in range(max_iter):
        if abs(f2) <= tol:
            return z2
        h1, h2 = z1 - z0, z2 - z1
        d1 = (f1 - f0) / h1
        d2 = (f2 - f1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        disc = cmath.sqrt(b * b - 4 * a * f2)
        den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
        if den == 0:
            dz = h2 if h2 != 0 else 1e-8
        else:
            dz = -2 * f2 / den
        z0, z1, z2 = z1, z2, z2 + dz
        f0, f1, f2 = f1, f2, f(z2)
        history.append((z2, f2))
        if not (cmath.isfinite(z2) and cmath.isfinite(f2)):
            break
        lim = xtol if xtol is not None else 1e-15 * max(1.0, abs(z2))
        if abs(dz) <= lim:
            return z2
    raise ConvergenceError(
        f"Muller iteration did not converge in {max_iter} steps from {guess}",
        history=history,
    )
