"""Coulomb-Sturmian radial basis and its matrix elements.

The basis functions are

    phi_n(r) = sqrt(n! / (n+2l+1)!) (2br)^(l+1) exp(-br) L_n^(2l+1)(2br),

normalised so that <n|1/r|n'> = delta_nn'.  With x = 2br every power of r
becomes a power of the Laguerre Jacobi matrix X (multiplication by x in the
orthonormal Laguerre basis), which gives the banded closed forms used here:

    <n| r^k |n'> = (X^(k+1))_nn' / (2b)^(k+1).

Anything that is not a polynomial in r goes through generalized
Gauss-Laguerre quadrature whose weight absorbs both the origin power and the
exponential decay of the integrand, so products of basis functions with
r^p exp(-a r) are integrated exactly.

A basis may carry a rotation angle ``theta``; its complex scale b exp(-i theta)
is equivalent to complex scaling r -> r exp(i theta) and is used to expose
resonances.  All formulas below are written for complex b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import AccuracyError, DomainError

__all__ = [
    "BasisSpec",
    "QuadratureRule",
    "RadialMatrix",
    "gauss_laguerre",
    "cs_function",
    "laguerre_jacobi",
    "overlap_matrix",
    "inverse_r_matrix",
    "kinetic_matrix",
    "power_r_matrix",
    "radial_matrix",
    "screened_coulomb_matrix",
    "cross_l_matrix",
    "integrate",
    "default_order",
]


@dataclass(frozen=True)
class BasisSpec:
    l: int
    b: float
    n_max: int
    theta: float = 0.0

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 0:
            raise DomainError(f"l must be a non-negative integer, got {self.l}")
        if not self.b > 0:
            raise DomainError(f"basis scale b must be positive, got {self.b}")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise DomainError(f"n_max must be a non-negative integer, got {self.n_max}")
        if not 0 <= self.theta < math.pi / 4:
            raise DomainError(f"rotation angle must lie in [0, pi/4), got {self.theta}")

    @property
    def size(self) -> int:
        return self.n_max + 1

    @property
    def scale(self) -> complex | float:
        """b, or the rotated b exp(-i theta) for a complex-scaled basis."""
        if self.theta == 0:
            return float(self.b)
        return self.b * complex(math.cos(self.theta), -math.sin(self.theta))

    @property
    def is_complex(self) -> bool:
        return self.theta != 0

    def with_l(self, l: int) -> "BasisSpec":
        return BasisSpec(l, self.b, self.n_max, self.theta)

    def with_size(self, n_max: int) -> "BasisSpec":
        return BasisSpec(self.l, self.b, n_max, self.theta)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule for int_0^inf r^alpha exp(-beta r) g(r) dr.

    ``nodes`` are physical radii; ``sqrt_weights`` are the square roots of the
    Gauss-Laguerre weights (kept as roots so that products of two basis
    functions can be formed without overflowing).  ``beta`` may be complex,
    in which case the nodes lie on the ray s / beta.
    """

    order: int
    alpha: float
    beta: complex | float
    nodes: np.ndarray
    sqrt_weights: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return self.sqrt_weights**2

    @property
    def jacobian(self) -> complex | float:
        return self.beta ** (-(self.alpha + 1))


@lru_cache(maxsize=64)
def _gl_standard(order: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(order, dtype=float)
    diag = 2 * k + alpha + 1
    off = np.sqrt(k[1:] * (k[1:] + alpha))
    x = eigh_tridiagonal(diag, off, eigvals_only=True)
    # Christoffel weights 1/sum p_k(x)^2 keep full relative accuracy where the
    # eigenvector components of the Jacobi matrix have only absolute accuracy
    p_prev = np.zeros_like(x)
    p_cur = np.full_like(x, math.exp(-0.5 * gammaln(alpha + 1)))
    total = p_cur**2
    log_scale = np.zeros_like(x)
    for j in range(order - 1):
        nxt = ((x - (2 * j + alpha + 1)) * p_cur - off[j - 1] * p_prev if j else
               (x - (alpha + 1)) * p_cur) / off[j]
        p_prev, p_cur = p_cur, nxt
        total = total + p_cur**2
        big = np.abs(p_cur) > 1e100
        if np.any(big):
            p_prev[big] *= 1e-100
            p_cur[big] *= 1e-100
            total[big] *= 1e-200
            log_scale[big] += 100 * math.log(10)
    sw = np.exp(-0.5 * np.log(total) - log_scale)
    x.setflags(write=False)
    sw.setflags(write=False)
    return x, sw


def gauss_laguerre(order: int, alpha: float = 0.0, beta: complex | float = 1.0) -> QuadratureRule:
    """Generalized Gauss-Laguerre rule mapped to r = s / beta (nodes by Golub-Welsch, Christoffel weights)."""
    if order < 1:
        raise DomainError("quadrature order must be >= 1")
    if alpha <= -1:
        raise DomainError(f"Laguerre exponent must exceed -1, got {alpha}")
    s, sw = _gl_standard(int(order), float(alpha))
    return QuadratureRule(int(order), float(alpha), beta, s / beta, sw)


def integrate(f: Callable[[np.ndarray], np.ndarray], rule: QuadratureRule) -> complex | float:
    """int_0^inf r^alpha exp(-beta r) f(r) dr with the given rule."""
    vals = np.asarray(f(rule.nodes))
    if np.any(np.isnan(vals)):
        raise DomainError("integrand is NaN at a quadrature node")
    total = np.sum(rule.weights * vals) * rule.jacobian
    return total if np.iscomplexobj(total) else float(total)


def default_order(n_max: int) -> int:
    return 3 * (n_max + 20)


def _normalisation(n_max: int, l: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    return np.exp(0.5 * (gammaln(n + 1) - gammaln(n + 2 * l + 2)))


def _laguerre_rows(n_max: int, alpha: float, x: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Rows L_0..L_nmax of L_n^(alpha)(x), each multiplied by ``start``.

    Forward three-term recurrence; the common factor keeps large-x values
    from overflowing.
    """
    x = np.asarray(x)
    out = np.empty((n_max + 1,) + x.shape, dtype=np.result_type(x, start, float))
    out[0] = start
    if n_max >= 1:
        out[1] = start * (1 + alpha - x)
    for n in range(1, n_max):
        out[n + 1] = ((2 * n + 1 + alpha - x) * out[n] - (n + alpha) * out[n - 1]) / (n + 1)
    return out


def _reduced_functions(spec: BasisSpec, r: np.ndarray, factor: np.ndarray) -> np.ndarray:
    """phi_n(r) / (r^(l+1) exp(-b r)) times ``factor``, shape (n_max+1, len(r))."""
    b = spec.scale
    norm = _normalisation(spec.n_max, spec.l) * (2 * b) ** (spec.l + 1)
    rows = _laguerre_rows(spec.n_max, 2 * spec.l + 1, 2 * b * r, factor)
    return norm[:, None] * rows


def cs_function(n: int, spec: BasisSpec, r):
    """Value of the n-th Coulomb-Sturmian function at radius ``r``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError("radius must be non-negative")
    if n < 0:
        raise DomainError("radial index must be non-negative")
    b = spec.scale
    x = 2 * b * r_arr
    # exp(-x/2) folded into the recurrence start
    rows = _laguerre_rows(n, 2 * spec.l + 1, x, np.exp(-x / 2))
    norm = math.exp(0.5 * (gammaln(n + 1) - gammaln(n + 2 * spec.l + 2)))
    val = norm * x ** (spec.l + 1) * rows[n]
    return val.item() if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class RadialMatrix:
    """Matrix of a radial operator between two Coulomb-Sturmian bases.

    ``bandwidth`` is the half-bandwidth in radial index, or ``None`` for a
    full matrix.
    """

    data: np.ndarray
    kind: str
    bra: BasisSpec
    ket: BasisSpec
    bandwidth: int | None = None

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)

    @property
    def shape(self):
        return self.data.shape


def laguerre_jacobi(size: int, l: int):
    """Diagonal and off-diagonal of the Jacobi matrix of x for L^(2l+1)."""
    n = np.arange(size, dtype=float)
    diag = 2 * n + 2 * l + 2
    off = -np.sqrt((n[:-1] + 1) * (n[:-1] + 2 * l + 2))
    return diag, off


def _jacobi_power_band(n_lo: int, n_hi: int, l: int, power: int) -> np.ndarray:
    """Band of X^power for rows n_lo..n_hi-1 as an array (rows, 2*power+1).

    Column k holds the element (n, n + k - power).  Rows near n=0 have
    out-of-range columns set to zero.
    """
    pad = power
    lo = max(0, n_lo - pad)
    hi = n_hi + pad
    size = hi - lo
    d, e = laguerre_jacobi(hi, l)
    d, e = d[lo:], e[lo:]
    # banded product by repeated multiplication of band arrays
    band = np.zeros((size, 1))
    band[:, 0] = 1.0
    width = 0
    for _ in range(power):
        new = np.zeros((size, 2 * width + 3))
        for k in range(-width, width + 1):
            col = band[:, k + width]  # element (i, i+k)
            # (X B)(i, i+k') = sum_j X(i, j) B(j, i+k') ; X(i,i)=d_i, X(i,i+-1)=e
            # left multiply: row i of X B = d_i B(i,:) + e_{i-1} B(i-1,:) + e_i B(i+1,:)
            new[:, k + width + 1] += d * col
            # from row i+1: X(i, i+1)=e_i times B(i+1, i+1+k) -> (i, i+1+k)
            new[:-1, k + width + 2] += e * col[1:]
            # from row i-1: X(i, i-1)=e_{i-1} times B(i-1, i-1+k) -> (i, i-1+k)
            new[1:, k + width] += e * col[:-1]
        band = new
        width += 1
    rows = band[n_lo - lo : n_lo - lo + (n_hi - n_lo)]
    # zero out columns that fall before index 0 (they were never real)
    idx = np.arange(n_lo, n_hi)[:, None] + np.arange(-power, power + 1)[None, :]
    rows = np.where(idx >= 0, rows, 0.0)
    return rows


def _band_to_dense(band: np.ndarray, size: int) -> np.ndarray:
    width = (band.shape[1] - 1) // 2
    out = np.zeros((size, size), dtype=band.dtype)
    for k in range(-width, width + 1):
        i = np.arange(max(0, -k), min(size, size - k))
        out[i, i + k] = band[i, k + width]
    return out


def power_band(l: int, b, k: int, n_lo: int, n_hi: int) -> np.ndarray:
    """Band of <n|r^k|n'> for rows n_lo..n_hi-1; half-bandwidth k+1 (k >= -1)."""
    if k < -1:
        raise DomainError("closed-form powers start at r^-1")
    return _jacobi_power_band(n_lo, n_hi, l, k + 1) / (2 * b) ** (k + 1)


def kinetic_band(l: int, b, n_lo: int, n_hi: int, mass: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    n = np.arange(n_lo, n_hi)
    band = -(b * b) * power_band(l, b, 0, n_lo, n_hi)
    band = band.astype(np.result_type(band, b))
    band[:, 1] += 2 * b * (n + l + 1)
    return hbar**2 / (2 * mass) * band


def overlap_matrix(spec: BasisSpec) -> RadialMatrix:
    """<n|n'>: tridiagonal, diagonal (n+l+1)/b."""
    data = _band_to_dense(power_band(spec.l, spec.scale, 0, 0, spec.size), spec.size)
    return RadialMatrix(data, "overlap", spec, spec, 1)


def inverse_r_matrix(spec: BasisSpec) -> RadialMatrix:
    return RadialMatrix(np.eye(spec.size), "inverse_r", spec, spec, 0)


def kinetic_matrix(spec: BasisSpec, mass: float = 1.0, hbar: float = 1.0) -> RadialMatrix:
    """(hbar^2/2m) <n| -d^2/dr^2 + l(l+1)/r^2 |n'>.

    Uses the Sturmian equation of the basis:
    (hbar^2/2m) [2b(n+l+1) delta - b^2 S].
    """
    if not mass > 0:
        raise DomainError("mass must be positive")
    band = kinetic_band(spec.l, spec.scale, 0, spec.size, mass, hbar)
    return RadialMatrix(_band_to_dense(band, spec.size), "kinetic", spec, spec, 1)


def power_r_matrix(spec: BasisSpec, power: int) -> RadialMatrix:
    """<n|r^power|n'> for power = -1..4 (half-bandwidth power + 1)."""
    if power not in (-1, 0, 1, 2, 3, 4):
        raise DomainError(f"unsupported power {power}")
    band = power_band(spec.l, spec.scale, power, 0, spec.size)
    return RadialMatrix(_band_to_dense(band, spec.size), f"r^{power}", spec, spec, power + 1)


def radial_matrix(
    bra: BasisSpec,
    ket: BasisSpec,
    power: float = 0.0,
    decay: float = 0.0,
    g: Callable[[np.ndarray], np.ndarray] | None = None,
    order: int | None = None,
) -> np.ndarray:
    """int_0^inf phi_n^bra(r) r^power exp(-decay r) g(r) phi_n'^ket(r) dr.

    The Laguerre weight takes the origin exponent l+l'+2+power and the decay
    b+b'+decay, so the rule is exact whenever ``g`` is a polynomial of degree
    below 2*order - n - n'.
    """
    alpha = bra.l + ket.l + 2 + power
    if alpha <= -1:
        raise DomainError(
            f"integrand behaves like r^{alpha} at the origin and is not integrable"
        )
    if decay < 0:
        raise DomainError("decay must be non-negative")
    if order is None:
        order = default_order(max(bra.n_max, ket.n_max))
    beta = bra.scale + ket.scale + decay
    rule = gauss_laguerre(order, alpha, beta)
    r = rule.nodes
    factor = rule.sqrt_weights
    if g is not None:
        gv = np.asarray(g(r))
        if np.any(~np.isfinite(gv)):
            raise DomainError("radial function is not finite at a quadrature node")
        A = _reduced_functions(bra, r, factor * gv)
    else:
        A = _reduced_functions(bra, r, factor)
    B = _reduced_functions(ket, r, factor)
    out = (A @ B.T) * rule.jacobian
    if not (bra.is_complex or ket.is_complex or np.iscomplexobj(out)):
        out = out.real if np.iscomplexobj(out) else out
    return out


def screened_coulomb_matrix(spec: BasisSpec, a: float, order: int | None = None, check: bool = True) -> RadialMatrix:
    """<n| exp(-a r)/r |n'> by quadrature matched to the decay 2b + a.

    With ``check`` the result is compared against a rule of doubled order and
    an :class:`AccuracyError` is raised if they disagree beyond 1e-9.
    """
    if not a > 0:
        raise DomainError("screening constant must be positive")
    if order is None:
        order = default_order(spec.n_max)
    m = radial_matrix(spec, spec, -1, a, order=order)
    if check:
        m2 = radial_matrix(spec, spec, -1, a, order=2 * order)
        err = np.max(np.abs(m - m2))
        if err > 1e-9 * max(1.0, np.max(np.abs(m2))):
            raise AccuracyError(f"screened Coulomb quadrature unstable (difference {err:.2e})")
    return RadialMatrix(m, "screened", spec, spec, None)


def cross_l_matrix(
    bra: BasisSpec,
    ket: BasisSpec,
    f: Callable[[np.ndarray], np.ndarray],
    origin_power: float = 0.0,
    decay: float = 0.0,
    order: int | None = None,
) -> RadialMatrix:
    """<n, bra| f |n', ket> for a radial function f(r) = r^p exp(-a r) h(r).

    ``f`` is passed already divided by ``r**origin_power * exp(-decay*r)``,
    i.e. as the smooth remainder h.  This keeps singular functions such as
    dV/dr = -Z/r^2 exactly integrable.
    """
    data = radial_matrix(bra, ket, origin_power, decay, f, order)
    return RadialMatrix(data, "cross_l", bra, ket, None)
