"""Radial vector and scalar potential models.

A model is two lists of typed terms: the vector potential V (enters like the
time component of a four-potential) and the scalar potential.  The scalar
list either gives S, with the effective scalar U = S + S^2/(2mc^2) formed on
demand, or gives U directly (``scalar_is_effective``).

For the solver every potential is split into

* long-range pieces, polynomial in r (powers -1..4), which have closed-form
  banded matrices and go into the reference Green's operator, and
* short-range pieces of the form c * r^p * exp(-a r) * h(r), which are
  represented in a truncated basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DomainError

__all__ = [
    "PotentialTerm",
    "PotentialModel",
    "Piece",
    "LongRange",
    "SplitModel",
    "coulomb",
    "screened",
    "linear",
    "quadratic",
    "tabulated",
    "load_table",
    "parse_terms",
    "format_terms",
    "effective_scalar",
    "evaluate",
    "vector_derivative",
    "split",
]

KINDS = ("coulomb", "screened", "linear", "quadratic", "tabulated")


@dataclass(frozen=True)
class PotentialTerm:
    """One radial term.

    coulomb: strength/r; screened: strength*exp(-a r)/r; linear: strength*r;
    quadratic: strength*r^2; tabulated: cubic spline through ``samples``
    (zero beyond the last sample, constant below the first).
    """

    kind: str
    strength: float = 1.0
    a: float = 0.0
    samples: tuple[tuple[float, float], ...] = ()
    source: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown potential term kind {self.kind!r}")
        if self.kind == "screened" and not self.a > 0:
            raise DomainError("screened term needs a > 0")
        if self.kind == "tabulated":
            r = [s[0] for s in self.samples]
            if len(r) < 4:
                raise DomainError("tabulated term needs at least 4 samples")
            if any(b <= a for a, b in zip(r, r[1:])):
                raise DomainError("tabulated samples must be strictly increasing in r")

    # spline construction is cheap but not free; cache on the instance
    @property
    def spline(self) -> CubicSpline:
        sp = self.__dict__.get("_spline")
        if sp is None:
            r, v = np.array(self.samples, dtype=float).T
            sp = CubicSpline(r, self.strength * v)
            object.__setattr__(self, "_spline", sp)
        return sp

    def _table_eval(self, r, nu=0):
        r = np.asarray(r, dtype=float)
        lo, hi = self.samples[0][0], self.samples[-1][0]
        out = self.spline(np.clip(r, lo, hi), nu)
        if nu == 0:
            return np.where(r > hi, 0.0, out)
        return np.where((r > hi) | (r < lo), 0.0, out)

    def value(self, r):
        k = self.kind
        if k == "coulomb":
            return self.strength / r
        if k == "screened":
            return self.strength * np.exp(-self.a * r) / r
        if k == "linear":
            return self.strength * r
        if k == "quadratic":
            return self.strength * r * r
        return self._table_eval(r)

    def derivative(self, r):
        k = self.kind
        if k == "coulomb":
            return -self.strength / (r * r)
        if k == "screened":
            return -self.strength * np.exp(-self.a * r) * (1 + self.a * r) / (r * r)
        if k == "linear":
            return self.strength * np.ones_like(np.asarray(r, dtype=float))
        if k == "quadratic":
            return 2 * self.strength * r
        return self._table_eval(r, 1)


def coulomb(z: float) -> PotentialTerm:
    return PotentialTerm("coulomb", z)


def screened(strength: float, a: float) -> PotentialTerm:
    return PotentialTerm("screened", strength, a)


def linear(alpha: float) -> PotentialTerm:
    return PotentialTerm("linear", alpha)


def quadratic(alpha: float) -> PotentialTerm:
    return PotentialTerm("quadratic", alpha)


def tabulated(samples, strength: float = 1.0, source: str | None = None) -> PotentialTerm:
    samples = tuple((float(r), float(v)) for r, v in samples)
    return PotentialTerm("tabulated", strength, samples=samples, source=source)


def load_table(path: str) -> PotentialTerm:
    """Two-column whitespace-separated file of r, value (``#`` comments)."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] < 2:
        raise ConfigError(f"table {path} needs two columns")
    return tabulated(data[:, :2], source=path)


def _merge(terms: Iterable[PotentialTerm]) -> tuple[PotentialTerm, ...]:
    merged: dict[str, float] = {}
    rest = []
    for t in terms:
        if t.kind in ("coulomb", "linear", "quadratic"):
            merged[t.kind] = merged.get(t.kind, 0.0) + t.strength
        else:
            rest.append(t)
    out = [PotentialTerm(k, v) for k, v in merged.items()]
    order = {k: i for i, k in enumerate(KINDS)}
    out.sort(key=lambda t: order[t.kind])
    return tuple(out) + tuple(rest)


@dataclass(frozen=True)
class PotentialModel:
    vector_terms: tuple[PotentialTerm, ...] = ()
    scalar_terms: tuple[PotentialTerm, ...] = ()
    scalar_is_effective: bool = False

    def __post_init__(self):
        object.__setattr__(self, "vector_terms", _merge(self.vector_terms))
        object.__setattr__(self, "scalar_terms", _merge(self.scalar_terms))

    def reversed_vector(self) -> "PotentialModel":
        """Same model with V -> -V."""
        flipped = tuple(
            PotentialTerm(t.kind, -t.strength, t.a, t.samples, t.source) for t in self.vector_terms
        )
        return PotentialModel(flipped, self.scalar_terms, self.scalar_is_effective)

    @property
    def is_empty(self) -> bool:
        return not self.vector_terms and not self.scalar_terms


def _sum(terms: Sequence[PotentialTerm], r):
    total = np.zeros_like(np.asarray(r, dtype=float))
    for t in terms:
        total = total + t.value(r)
    return total


def effective_scalar(S: Callable, mass: float, c: float) -> Callable:
    """U(r) = S(r) + S(r)^2 / (2 m c^2)."""
    if not (mass > 0 and c > 0):
        raise DomainError("mass and c must be positive")
    k = 1.0 / (2 * mass * c * c)

    def U(r):
        s = S(r)
        return s + k * s * s

    return U


def _check_r(r):
    if np.any(np.asarray(r) <= 0):
        raise DomainError("potentials are evaluated at r > 0 only")


def evaluate(model: PotentialModel, part: str, r, mass: float = 1.0, c: float = 137.036):
    """Sum of the terms of ``part`` ('vector', 'scalar' or 'effective') at r."""
    _check_r(r)
    if part == "vector":
        out = _sum(model.vector_terms, r)
    elif part == "scalar":
        out = _sum(model.scalar_terms, r)
    elif part == "effective":
        if model.scalar_is_effective:
            out = _sum(model.scalar_terms, r)
        else:
            out = effective_scalar(lambda x: _sum(model.scalar_terms, x), mass, c)(r)
    else:
        raise DomainError(f"unknown potential part {part!r}")
    return float(out) if np.ndim(out) == 0 else out


def vector_derivative(model: PotentialModel, r):
    _check_r(r)
    total = np.zeros_like(np.asarray(r, dtype=float))
    for t in model.vector_terms:
        total = total + t.derivative(r)
    return float(total) if np.ndim(total) == 0 else total


# ---------------------------------------------------------------------------
# long/short split
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Piece:
    """coef * r^power * exp(-decay r) * h(r); ``h`` None means h = 1."""

    coef: float
    power: int
    decay: float = 0.0
    h: Callable | None = None
    complex_ok: bool = True

    def __call__(self, r):
        out = self.coef * r**self.power * np.exp(-self.decay * r)
        return out if self.h is None else out * self.h(r)

    def times(self, other: "Piece") -> "Piece":
        if self.h is None and other.h is None:
            h = None
        elif other.h is None:
            h = self.h
        elif self.h is None:
            h = other.h
        else:
            h1, h2 = self.h, other.h
            h = lambda r: h1(r) * h2(r)  # noqa: E731
        return Piece(
            self.coef * other.coef, self.power + other.power, self.decay + other.decay,
            h, self.complex_ok and other.complex_ok,
        )

    def scaled(self, k: float) -> "Piece":
        return Piece(self.coef * k, self.power, self.decay, self.h, self.complex_ok)


def _pieces(term: PotentialTerm) -> list[Piece]:
    k = term.kind
    if k == "coulomb":
        return [Piece(term.strength, -1)]
    if k == "screened":
        return [Piece(term.strength, -1, term.a)]
    if k == "linear":
        return [Piece(term.strength, 1)]
    if k == "quadratic":
        return [Piece(term.strength, 2)]
    return [Piece(1.0, 0, 0.0, term._table_eval, complex_ok=False)]


def _derivative_pieces(term: PotentialTerm) -> list[Piece]:
    k = term.kind
    if k == "coulomb":
        return [Piece(-term.strength, -2)]
    if k == "screened":
        A, a = term.strength, term.a
        return [Piece(-A, -2, a), Piece(-A * a, -1, a)]
    if k == "linear":
        return [Piece(term.strength, 0)]
    if k == "quadratic":
        return [Piece(2 * term.strength, 1)]
    return [Piece(1.0, 0, 0.0, lambda r, t=term: t._table_eval(r, 1), complex_ok=False)]


def _is_polynomial(p: Piece) -> bool:
    return p.h is None and p.decay == 0 and -1 <= p.power <= 4


def _collect(pieces: Iterable[Piece]) -> tuple[dict[int, float], list[Piece]]:
    poly: dict[int, float] = {}
    short: list[Piece] = []
    for p in pieces:
        if p.coef == 0:
            continue
        if _is_polynomial(p):
            poly[p.power] = poly.get(p.power, 0.0) + p.coef
        else:
            short.append(p)
    return {k: v for k, v in sorted(poly.items()) if v != 0}, short


@dataclass(frozen=True)
class LongRange:
    """Polynomial coefficients (power -> coefficient) of V and U."""

    vector: dict[int, float] = field(default_factory=dict)
    scalar: dict[int, float] = field(default_factory=dict)

    @property
    def coulomb(self) -> float:
        return self.vector.get(-1, 0.0)

    @property
    def linear(self) -> float:
        return self.scalar.get(1, 0.0)

    @property
    def quadratic(self) -> float:
        return self.scalar.get(2, 0.0)

    def bandwidth(self) -> int:
        """Radial half-bandwidth of the reference matrix (overlap/kinetic give 1)."""
        powers = list(self.vector) + list(self.scalar)
        return max([1] + [p + 1 for p in powers])

    def evaluate(self, part: str, r):
        coeffs = self.vector if part == "vector" else self.scalar
        r = np.asarray(r, dtype=float)
        return sum((c * r**p for p, c in coeffs.items()), np.zeros_like(r))


@dataclass(frozen=True)
class SplitModel:
    long_range: LongRange
    vector_short: tuple[Piece, ...]
    scalar_short: tuple[Piece, ...]
    coupling: tuple[Piece, ...]

    @staticmethod
    def _eval(pieces, r):
        r = np.asarray(r, dtype=float)
        return sum((p(r) for p in pieces), np.zeros_like(r))

    def short_vector(self, r):
        return self._eval(self.vector_short, r)

    def short_scalar(self, r):
        return self._eval(self.scalar_short, r)

    def coupling_function(self, r):
        return self._eval(self.coupling, r)

    def vector(self, r):
        return self.long_range.evaluate("vector", r) + self.short_vector(r)

    def scalar(self, r):
        return self.long_range.evaluate("scalar", r) + self.short_scalar(r)

    @property
    def supports_complex_scaling(self) -> bool:
        return all(p.complex_ok for p in self.vector_short + self.scalar_short + self.coupling)


def split(
    model: PotentialModel, mass: float = 1.0, c: float = 137.036, coulomb_short: bool = False
) -> SplitModel:
    """Separate long-range polynomial parts from short-range remainders.

    S^2/(2mc^2) is expanded exactly term by term, so polynomial S yields
    polynomial U.  The coupling function dV/dr is kept whole and always
    treated as short range.  ``coulomb_short`` moves the vector 1/r term to
    the short-range side as well, for reference problems that would fall to
    the centre.
    """
    v_pieces = [p for t in model.vector_terms for p in _pieces(t)]
    s_pieces = [p for t in model.scalar_terms for p in _pieces(t)]
    if model.scalar_is_effective:
        u_pieces = s_pieces
    else:
        k = 1.0 / (2 * mass * c * c)
        u_pieces = list(s_pieces)
        for i, p in enumerate(s_pieces):
            for j, q in enumerate(s_pieces):
                if j < i:
                    continue
                u_pieces.append(p.times(q).scaled(k if i == j else 2 * k))
    v_long, v_short = _collect(v_pieces)
    if coulomb_short and -1 in v_long:
        v_short.insert(0, Piece(v_long.pop(-1), -1))
    u_long, u_short = _collect(u_pieces)
    coupling = [p for t in model.vector_terms for p in _derivative_pieces(t)]
    return SplitModel(
        LongRange(v_long, u_long), tuple(v_short), tuple(u_short), tuple(coupling)
    )


# ---------------------------------------------------------------------------
# configuration syntax
# ---------------------------------------------------------------------------


def parse_terms(text: str) -> tuple[PotentialTerm, ...]:
    """Parse ``coulomb 92, screened -240 1, linear 1, table path.dat``."""
    terms = []
    for chunk in text.split(","):
        words = chunk.split()
        if not words:
            continue
        kind, args = words[0].lower(), words[1:]
        try:
            if kind == "coulomb" and len(args) == 1:
                terms.append(coulomb(float(args[0])))
            elif kind == "screened" and len(args) == 2:
                terms.append(screened(float(args[0]), float(args[1])))
            elif kind == "linear" and len(args) == 1:
                terms.append(linear(float(args[0])))
            elif kind == "quadratic" and len(args) == 1:
                terms.append(quadratic(float(args[0])))
            elif kind == "table" and len(args) == 1:
                terms.append(load_table(args[0]))
            else:
                raise ConfigError(f"cannot parse potential term {chunk.strip()!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad number in potential term {chunk.strip()!r}") from exc
    return tuple(terms)


def format_terms(terms: Sequence[PotentialTerm]) -> str:
    out = []
    for t in terms:
        if t.kind == "screened":
            out.append(f"screened {t.strength!r} {t.a!r}")
        elif t.kind == "tabulated":
            out.append(f"table {t.source}")
        else:
            out.append(f"{t.kind} {t.strength!r}")
    return ", ".join(out)
