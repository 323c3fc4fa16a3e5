"""Spectral drivers: bound-state scans, resonances, convergence scans and a
dense diagonalization oracle.

Bound states are located as zeros of the spectral determinant
F(E) = det(Gi(E) - V_short) on a real energy grid.  F is finite at the
eigenvalues of the long-range reference, which matters when V_short vanishes
(then every bound state is a reference eigenvalue and D(E) = 1 identically).
F does have poles where the continued-fraction tail is singular; a sign
change across such a pole is recognised after refinement because |F| grows
instead of vanishing.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from . import csbasis
from .csbasis import BasisSpec
from .errors import ConvergenceError, DomainError, FVError, ResourceError
from .fvcore import (
    P_BLOCK,
    ChannelSpace,
    FVProblem,
    PhysicalSystem,
    channel_norms,
    coupling_strength,
    greens_data,
    null_vector,
    spectral_determinant,
)
from .linalg import find_complex_root, find_real_roots, log_determinant
from .potentials import Piece, PotentialModel, _derivative_pieces, _pieces

log = logging.getLogger(__name__)

__all__ = [
    "SearchWindow",
    "SpectralResult",
    "ConvergenceReport",
    "find_bound_states",
    "find_resonance",
    "schrodinger_reference",
    "converge",
    "oracle_diagonalize",
    "oracle_matrices",
    "greens_residual",
]

ORACLE_MAX_DIM = 2000


@dataclass(frozen=True)
class SearchWindow:
    """Real energy interval scanned for bound states (reporting convention)."""

    e_min: float
    e_max: float
    grid_points: int = 200
    refine_tol: float = 1e-10

    def __post_init__(self):
        if not self.e_min < self.e_max:
            raise DomainError("search window needs e_min < e_max")
        if self.grid_points < 8:
            raise DomainError("search window needs at least 8 grid points")
        if not self.refine_tol > 0:
            raise DomainError("refine_tol must be positive")

    def grid(self) -> np.ndarray:
        return np.linspace(self.e_min, self.e_max, self.grid_points)


@dataclass(frozen=True)
class SpectralResult:
    energy: complex
    kind: str
    determinant_residual: float
    n_max: int
    b: float
    cf_depth: int
    channel: str
    dominant_l: int | None = None
    multiplicity: int = 1
    channel_weights: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("bound", "resonance"):
            raise DomainError(f"unknown result kind {self.kind!r}")

    @property
    def basis(self) -> tuple[int, float]:
        return self.n_max, self.b


# ---------------------------------------------------------------------------
# determinant evaluation
# ---------------------------------------------------------------------------


def _default_threads(threads: int | None) -> int:
    return max(1, threads if threads else (os.cpu_count() or 1))


def _chunks(values: np.ndarray, parts: int) -> list[np.ndarray]:
    parts = max(1, min(parts, len(values)))
    return [c for c in np.array_split(values, parts) if len(c)]


# continued-fraction depth: one int, or one per channel
Depth = int | tuple[int, ...]


def _deepest(depth: Depth) -> int:
    return max(depth) if isinstance(depth, tuple) else depth


def _evaluate(problem: FVProblem, energies: np.ndarray, threads: int, depth: Depth):
    """Phase and log|F| at fixed continued-fraction depth, fanned out over threads."""
    energies = np.asarray(energies, dtype=float)
    if not len(energies):
        return np.empty(0, dtype=complex), np.empty(0)
    chunks = _chunks(energies, threads)
    if len(chunks) == 1:
        ph, lg, _ = spectral_determinant(problem, energies, depth)
        return ph, lg
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda e: spectral_determinant(problem, e, depth), chunks))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _probe_depth(problem: FVProblem, window: SearchWindow) -> Depth:
    """Continued-fraction depth converged at a few energies spread over the window."""
    probes = np.linspace(window.e_min, window.e_max, 7)
    _, _, depth = spectral_determinant(problem, probes)
    return depth


def _dominant(problem: FVProblem, roots: Sequence[float], depth: Depth):
    out = []
    for r in roots:
        try:
            y = null_vector(problem, r, depth)
        except FVError:
            out.append((None, ()))
            continue
        norms = channel_norms(problem, y)
        total = sum(w * w for w in norms) or 1.0
        out.append((problem.channel.ls[int(np.argmax(norms))], tuple(w * w / total for w in norms)))
    return out


REAL_AXIS_TOL = 1e-14
SUBTHRESHOLD_IMAG = 1e-6
# round-off in F limits Im E to roughly this fraction of the total energy
WIDTH_RESOLUTION = 1e-12
SUBGRID = 16
PAIR_DROP = 3.0
TOUCH_DROP = 25.0  # ln units: |F| must fall by ~1e-11 to count as an even-order zero


def find_bound_states(
    problem: FVProblem,
    window: SearchWindow,
    threads: int | None = None,
    depth: Depth | None = None,
) -> list[SpectralResult]:
    """Real zeros of the spectral determinant inside ``window``.

    The continued-fraction depth is converged at a few probe energies and
    then held fixed, so F is one smooth function over the whole scan.  Sign
    changes of Re F are refined together; brackets that turn out to straddle
    a pole of F are dropped.  Local minima of |F| without a sign change are
    resolved on a finer subgrid, which catches close pairs and even-order
    zeros.
    """
    threads = _default_threads(threads)
    if depth is None:
        depth = _probe_depth(problem, window)
    grid = window.grid()
    phases, logs = _evaluate(problem, grid, threads, depth)
    if np.max(np.abs(np.imag(phases))) > 1e-6:
        log.debug("determinant has a non-negligible imaginary part on the real axis")
    E = list(grid)
    ph = list(phases)
    lg = list(logs)
    # refine the neighbourhood of |F| minima that show no sign change
    extra = []
    for k in range(1, len(grid) - 1):
        if logs[k] < logs[k - 1] and logs[k] < logs[k + 1]:
            s = np.sign(np.real(phases[k - 1:k + 2]))
            if s[0] == s[1] == s[2]:
                extra.append(np.linspace(grid[k - 1], grid[k + 1], SUBGRID + 2)[1:-1])
    if extra:
        sub = np.concatenate(extra)
        sp, sl = _evaluate(problem, sub, threads, depth)
        E += list(sub)
        ph += list(sp)
        lg += list(sl)
    order = np.argsort(E)
    E = np.asarray(E)[order]
    ph = np.asarray(ph)[order]
    lg = np.asarray(lg)[order]
    sign = np.sign(np.real(ph))

    roots: list[tuple[float, float]] = []
    brackets = []
    for k in range(len(E) - 1):
        if sign[k] == 0:
            roots.append((E[k], 0.0))
        elif sign[k] * sign[k + 1] < 0:
            brackets.append((E[k], E[k + 1], np.real(ph[k]), lg[k], np.real(ph[k + 1]), lg[k + 1]))
    # a deep minimum of |F| without a sign change hides a close pair or a double zero
    for k in range(1, len(E) - 1):
        if not (sign[k - 1] == sign[k] == sign[k + 1] != 0):
            continue
        if lg[k] > min(lg[k - 1], lg[k + 1]) - PAIR_DROP:
            continue
        ref = lg[k]

        def g(x):
            p, l = _evaluate(problem, [x], threads, depth)
            return sign[k] * np.real(p[0]) * math.exp(min(l[0] - ref, 700.0))

        m = minimize_scalar(g, bounds=(E[k - 1], E[k + 1]), method="bounded",
                            options={"xatol": window.refine_tol})
        pm, lm = _evaluate(problem, [m.x], threads, depth)
        if np.sign(np.real(pm[0])) == -sign[k]:
            brackets.append((E[k - 1], m.x, np.real(ph[k - 1]), lg[k - 1], np.real(pm[0]), lm[0]))
            brackets.append((m.x, E[k + 1], np.real(pm[0]), lm[0], np.real(ph[k + 1]), lg[k + 1]))
        elif lm[0] < min(lg[k - 1], lg[k + 1]) - TOUCH_DROP:
            res = math.exp(lm[0] - max(lg[k - 1], lg[k + 1]))
            roots += [(float(m.x), res), (float(m.x), res)]
    if brackets:
        a, b, pa, la, pb, lb = (np.array(c, dtype=float) for c in zip(*brackets))
        ref = np.maximum(la, lb)

        def f(x, which):
            p, l = _evaluate(problem, x, threads, depth)
            return np.real(p) * np.exp(np.minimum(l - ref[which], 700.0))

        fa = np.sign(pa) * np.exp(la - ref)
        fb = np.sign(pb) * np.exp(lb - ref)
        found = find_real_roots(f, a, b, fa, fb, window.refine_tol)
        _, lr = _evaluate(problem, found, threads, depth)
        for r, l, l0, l1 in zip(found, lr, la, lb):
            # a sign change across a pole of F is not a zero
            if l < min(l0, l1):
                roots.append((float(r), math.exp(l - max(l0, l1))))
    roots.sort()
    merged: list[list] = []
    for r, res in roots:
        if merged and abs(r - merged[-1][0]) <= window.refine_tol:
            merged[-1][2] += 1
            continue
        merged.append([r, res, 1])
    labels = _dominant(problem, [m[0] for m in merged], depth)
    return [
        SpectralResult(
            complex(r, 0.0), "bound", float(res), problem.basis.n_max, problem.basis.b,
            _deepest(depth), problem.channel.label(), dom, mult, weights,
        )
        for (r, res, mult), (dom, weights) in zip(merged, labels)
    ]


def find_resonance(
    problem: FVProblem,
    guess: complex,
    theta: float | None = None,
    tol: float = 1e-12,
    max_iter: int = 60,
) -> SpectralResult:
    """Complex zero of F near ``guess`` (Im guess <= 0).

    The basis is rotated, b -> b exp(-i theta), which continues the Green's
    operator onto the unphysical sheet; ``theta`` defaults to the problem's
    own rotation, or 0.1 if the problem is unrotated.
    """
    guess = complex(guess)
    if guess.imag > 0:
        raise DomainError("resonance guess must lie in the lower half plane")
    if theta is None:
        theta = problem.basis.theta or 0.1
    rotated = problem.with_basis(replace(problem.basis, theta=theta))
    # converge the depth around the guess, then hold it so F stays smooth
    probes = guess + np.array([-1.0, 0.0, 1.0]) * max(1e-3, abs(guess.imag))
    _, ref_logs, depth = spectral_determinant(rotated, probes)
    ref = float(ref_logs[1])

    def f(z):
        ph, lg, _ = spectral_determinant(rotated, [z], depth)
        return complex(ph[0]) * math.exp(min(lg[0] - ref, 700.0))

    try:
        z = find_complex_root(f, guess, tol=tol, max_iter=max_iter,
                              xtol=1e-14 * max(1.0, abs(guess)))
    except ConvergenceError as exc:
        raise ConvergenceError(f"resonance search from {guess} failed: {exc}", exc.history, guess) from exc
    residual = abs(f(z))
    kind = "resonance"
    polished = _polish_bound(problem, z)
    if polished is not None:
        log.warning("resonance search from %s found a bound state at %s", guess, polished)
        return SpectralResult(
            complex(polished, 0.0), "bound", float(residual), problem.basis.n_max,
            problem.basis.b, _deepest(depth), problem.channel.label(),
        )
    if abs(z.imag) < REAL_AXIS_TOL:
        log.warning("resonance search from %s converged to the real axis; reported as bound", guess)
        kind = "bound"
        z = complex(z.real, 0.0)
    elif z.imag > 0:
        scale = abs(z) + (problem.system.rest_energy if problem.channel.relativistic else 0.0)
        if z.imag > WIDTH_RESOLUTION * max(1.0, scale):
            raise ConvergenceError(f"resonance search from {guess} left the lower half plane at {z}", [z], guess)
        log.warning("width of the state at %s is below the attainable resolution; reported as bound", z)
        kind = "bound"
        z = complex(z.real, 0.0)
    return SpectralResult(
        z, kind, float(residual), problem.basis.n_max, problem.basis.b, _deepest(depth),
        problem.channel.label(),
    )


def _below_threshold(problem: FVProblem, x: float) -> bool:
    """True if real energy ``x`` lies in a gap of the continuous spectrum."""
    lr = problem.split.long_range
    if any(c > 0 for p, c in lr.scalar.items() if p >= 1) or any(
        c > 0 for p, c in lr.vector.items() if p >= 1
    ):
        return True  # confinement: the spectrum is discrete
    total = x + problem.energy_shift
    if problem.channel.relativistic:
        mc2 = problem.system.rest_energy
        return -mc2 < total < mc2
    return total < 0


def _polish_bound(problem: FVProblem, z: complex, tol: float = 1e-12) -> float | None:
    """Real zero of the unrotated F next to a near-axis root inside a spectral gap.

    No resonance lives below threshold, so a root found there with a tiny
    imaginary part is a bound state displaced by the rotated-basis
    truncation.  Returns None if no sign change is found nearby.
    """
    x = z.real
    if abs(z.imag) > SUBTHRESHOLD_IMAG * max(1.0, abs(z)) or not _below_threshold(problem, x):
        return None
    h = max(100 * abs(z.imag), 1e-9 * max(1.0, abs(x)))
    for _ in range(4):
        probes = np.array([x - h, x + h])
        if not all(_below_threshold(problem, e) for e in probes):
            return None
        ph, lg, depth = spectral_determinant(problem, probes)
        if np.real(ph[0]) * np.real(ph[1]) < 0:
            ref = float(np.max(lg))

            def f(e, which):
                p, l, _ = spectral_determinant(problem, e, depth)
                return np.real(p) * np.exp(np.minimum(l - ref, 700.0))

            fa = np.real(ph[:1]) * np.exp(lg[:1] - ref)
            fb = np.real(ph[1:]) * np.exp(lg[1:] - ref)
            return float(find_real_roots(f, probes[:1], probes[1:], fa, fb, tol)[0])
        h *= 10
    return None


def schrodinger_reference(
    model: PotentialModel,
    l: int,
    spec: BasisSpec,
    window: SearchWindow,
    system: PhysicalSystem | None = None,
    threads: int | None = None,
) -> list[SpectralResult]:
    """Nonrelativistic bound states of p^2/2m + U + V through the same pipeline."""
    problem = FVProblem(system or PhysicalSystem(), ChannelSpace("schrodinger", l=l), model, spec.with_l(l))
    return find_bound_states(problem, window, threads)


# ---------------------------------------------------------------------------
# convergence scans
# ---------------------------------------------------------------------------


@dataclass
class ConvergenceReport:
    """Lowest energies over a grid of basis sizes and scales.

    ``rows`` holds (N, b, energy or None); ``converged[b]`` is True when two
    consecutive N at that b agree to ``tol``.
    """

    rows: list[tuple[int, float, float | None]]
    converged: dict[float, bool]
    tol: float
    recommended: tuple[int, float] | None = None
    errors: list[str] = field(default_factory=list)
    results: list[SpectralResult | None] = field(default_factory=list)


def converge(
    problem: FVProblem,
    n_list: Sequence[int],
    b_list: Sequence[float],
    window: SearchWindow,
    threads: int | None = None,
) -> ConvergenceReport:
    """Lowest level in ``window`` for every (N, b) pair.

    Parameters
    ----------
    problem : FVProblem
        Template; its basis scale and size are replaced per run.
    n_list, b_list : sequence
        Basis sizes and scales to scan.
    window : SearchWindow
        Search window; ``window.refine_tol`` is the plateau tolerance.
    threads : int, optional
        Forwarded to :func:`find_bound_states`.

    Returns
    -------
    ConvergenceReport
        ``recommended`` is the smallest N that reached a plateau, with its b.
        Runs that fail numerically are recorded in ``errors``.
    """
    if not n_list or not b_list:
        raise DomainError("convergence scan needs at least one N and one b")
    rows: list[tuple[int, float, float | None]] = []
    results: list[SpectralResult | None] = []
    errors: list[str] = []
    converged: dict[float, bool] = {}
    recommended = None
    for b in b_list:
        prev = None
        hit = None
        for N in sorted(n_list):
            pr = problem.with_basis(BasisSpec(problem.basis.l, b, N, problem.basis.theta))
            try:
                res = find_bound_states(pr, window, threads)
            except FVError as exc:
                errors.append(f"N={N} b={b}: {exc}")
                res = []
            e = res[0].energy.real if res else None
            rows.append((N, b, e))
            results.append(res[0] if res else None)
            if hit is None and e is not None and prev is not None and abs(e - prev[1]) <= window.refine_tol:
                hit = prev[0]
            prev = (N, e) if e is not None else None
        converged[b] = hit is not None
        if hit is not None and (recommended is None or hit < recommended[0]):
            recommended = (hit, b)
    return ConvergenceReport(rows, converged, window.refine_tol, recommended, errors, results)


# ---------------------------------------------------------------------------
# dense oracle
# ---------------------------------------------------------------------------


def _term_pieces(model: PotentialModel, mass: float, c: float):
    vec = [p for t in model.vector_terms for p in _pieces(t)]
    sca = [p for t in model.scalar_terms for p in _pieces(t)]
    if sca and not model.scalar_is_effective:
        k = 1.0 / (2 * mass * c**2)
        sca = sca + [p.times(q).scaled(k) for p in sca for q in sca]
    der = [p for t in model.vector_terms for p in _derivative_pieces(t)]
    return vec, sca, der


def _local(bra: BasisSpec, ket: BasisSpec, pieces: Sequence[Piece], order) -> np.ndarray:
    dtype = complex if (bra.is_complex or ket.is_complex) else float
    out = np.zeros((bra.size, ket.size), dtype=dtype)
    for p in pieces:
        out = out + p.coef * csbasis.radial_matrix(bra, ket, p.power, p.decay, p.h, order)
    return out


def oracle_matrices(problem: FVProblem, n_max: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Dense (H, S) of the full truncated problem, energies in reporting convention.

    Every potential matrix is integrated by quadrature straight from the
    model terms; nothing is split and no continued fraction is involved.
    """
    spec = problem.basis if n_max is None else problem.basis.with_size(n_max)
    ch = problem.channel
    cd = ch.components
    dim = spec.size * ch.component_dim
    if dim > ORACLE_MAX_DIM:
        raise ResourceError(f"oracle dimension {dim} exceeds {ORACLE_MAX_DIM}")
    sysm = problem.system
    mc2 = sysm.rest_energy
    shift = problem.energy_shift
    vec, sca, der = _term_pieces(problem.model, sysm.mass, sysm.c)
    order = problem.quadrature_order
    specs = [spec.with_l(l) for l in ch.ls]
    size = spec.size * cd
    H = np.zeros((dim, dim), dtype=complex)
    S = np.zeros((dim, dim), dtype=complex)
    for i, s in enumerate(specs):
        ov = csbasis.overlap_matrix(s).data
        K = csbasis.kinetic_matrix(s, sysm.mass, sysm.hbar).data
        V = _local(s, s, vec, order)
        U = _local(s, s, sca, order)
        blk = slice(i * size, (i + 1) * size)
        if cd == 1:
            H[blk, blk] = K + U + V
            S[blk, blk] = ov
        else:
            rest = np.diag([mc2 - shift, -mc2 - shift])
            H[blk, blk] = np.kron(K + U, P_BLOCK) + np.kron(ov, rest) + np.kron(V, np.eye(2))
            S[blk, blk] = np.kron(ov, np.eye(2))
    if ch.kind == "fv12":
        lp, lm = specs
        amp = -1j * sysm.hbar / (2 * sysm.mass * sysm.c) * coupling_strength("+-")
        H[:size, size:] = amp * np.kron(_local(lp, lm, der, order), P_BLOCK)
        H[size:, :size] = amp * np.kron(_local(lm, lp, der, order), P_BLOCK)
    return H, S


def oracle_diagonalize(
    problem: FVProblem,
    n_max: int | None = None,
    window: tuple[complex, complex] | SearchWindow | None = None,
    imag_tol: float | None = None,
) -> list[complex]:
    """Eigenvalues of the dense truncated problem, sorted by real part.

    ``window`` restricts the real part; for an unrotated basis eigenvalues
    with |Im| above ``imag_tol`` (default 1e-6 relative) are discarded.
    """
    H, S = oracle_matrices(problem, n_max)
    w = scipy.linalg.eigvals(H, S)
    w = w[np.isfinite(w)]
    if window is not None:
        lo, hi = (window.e_min, window.e_max) if isinstance(window, SearchWindow) else window
        w = w[(w.real >= np.real(lo)) & (w.real <= np.real(hi))]
    if not problem.basis.is_complex:
        tol = 1e-6 if imag_tol is None else imag_tol
        w = w[np.abs(w.imag) <= tol * np.maximum(1.0, np.abs(w.real))]
        w = w.real.astype(complex)
    return sorted((complex(x) for x in w), key=lambda z: (z.real, z.imag))


def greens_residual(problem: FVProblem, E, depth: Depth | None = None) -> float:
    """Row-sum norm of J(E) G(E) - I on the prefix, in scaled rows.

    J carries the converged tail correction.  Antiparticle rows are divided
    by 2mc^2 as everywhere else, so round-off in the rest-mass terms is not
    amplified by the reporting scale.
    """
    data = greens_data(problem, [E], depth)
    J = data.inverse[0]
    G = data.greens()[0] / data.row_scale[None, :]
    # extended precision keeps the product's own round-off out of the measure
    ext = np.clongdouble if np.iscomplexobj(J) or np.iscomplexobj(G) else np.longdouble
    R = J.astype(ext) @ G.astype(ext) - np.eye(G.shape[0], dtype=ext)
    return float(np.max(np.sum(np.abs(R), axis=1)))


def spectral_log_ratio(problem: FVProblem, E, depth: Depth | None = None) -> float:
    """log|D(E)| = log|F(E)| - log|det Gi(E)|."""
    data = greens_data(problem, [E], depth)
    _, lf, _ = spectral_determinant(problem, [E], data.depth)
    _, lg = log_determinant(data.inverse[0])
    return float(lf[0] - lg)
