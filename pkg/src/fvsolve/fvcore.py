"""Projected FV0 / FV1/2 Hamiltonians, the reference Green's corner and D(E).

Conventions
-----------
Within one orbital channel the basis vector index is ``n * cd + k`` with
radial index n and FV component k (cd = 1 for Schroedinger, 2 for FV).  For
spin-1/2 the two spin-orbit channels l+ = j - 1/2 and l- = j + 1/2 are
stacked, l+ first.

The reference (long-range) problem is banded in the radial index and is
inverted by a matrix continued fraction; short-range potentials and the spin
coupling are represented in the truncated basis 0..N.  With J(E) = E S - H0
and Gi(E) the inverse of the Green's corner (the Schur complement of the
infinite J onto 0..N),

    D(E) = det(I - G V_short)        (Fredholm determinant)
    F(E) = det(Gi - V_short)         (spectral determinant, no poles from G)

both vanish at the eigenvalues of H0 + V_short.  Energies handed to the
functions here follow the problem's reporting convention: for relativistic
kinds the rest energy mc^2 is subtracted unless ``report_relative`` is off.
The FV rows of antiparticle components are scaled by 1/(2mc^2) internally,
which leaves every determinant zero unchanged and keeps the continued
fraction well balanced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import csbasis
from .csbasis import BasisSpec
from .errors import AssemblyError, ConvergenceError, DomainError, SingularMatrixError
from .linalg import (
    DEFAULT_CF_MAX_DEPTH,
    DEFAULT_CF_TOL,
    BlockTridiagonalOperator,
    banded_corner_inverse,
    refined_inverse,
    doubling_limit,
    log_determinant,
)
from .potentials import Piece, PotentialModel, SplitModel, split

__all__ = [
    "PhysicalSystem",
    "ChannelSpace",
    "FVProblem",
    "project_channels",
    "coupling_strength",
    "P_BLOCK",
    "M_BLOCK",
    "LongRangeChannel",
    "assemble_long_range",
    "assemble_short_range",
    "ShortRangeMatrix",
    "GreensCorner",
    "greens_data",
    "greens_corner",
    "fredholm_determinant",
    "spectral_determinant",
    "null_vector",
]

P_BLOCK = np.array([[1.0, 1.0], [-1.0, -1.0]])  # tau3 + i tau2
M_BLOCK = np.array([[1.0, 0.0], [0.0, -1.0]])  # tau3

KINDS = ("schrodinger", "fv0", "fv12")


@dataclass(frozen=True)
class PhysicalSystem:
    mass: float = 1.0
    c: float = 137.036
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and self.c > 0 and self.hbar > 0):
            raise DomainError("mass, c and hbar must be positive")

    @property
    def rest_energy(self) -> float:
        return self.mass * self.c**2


def project_channels(j: float) -> tuple[int, int]:
    """Orbital momenta (l+, l-) = (j - 1/2, j + 1/2) of the spin-orbit pair."""
    twice = 2 * j
    if j < 0.5 or abs(twice - round(twice)) > 1e-12 or round(twice) % 2 != 1:
        raise DomainError(f"j must be a positive half-integer, got {j}")
    lp = int(round(j - 0.5))
    return lp, lp + 1


def coupling_strength(direction: str = "+-") -> float:
    """Angular matrix element <Phi(-+)| e_r.sigma |Phi(+-)>.

    e_r.sigma maps each spin-orbit state onto its partner with unit
    amplitude, in both directions, and has no diagonal element (it is
    parity odd).  ``direction`` is '+-', '-+', '++' or '--'.
    """
    if direction in ("+-", "-+"):
        return 1.0
    if direction in ("++", "--"):
        return 0.0
    raise DomainError(f"unknown channel pair {direction!r}")


@dataclass(frozen=True)
class ChannelSpace:
    kind: str
    l: int | None = None
    j: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown problem kind {self.kind!r}")
        if self.kind == "fv12":
            if self.j is None:
                raise DomainError("fv12 needs j")
            project_channels(self.j)
        else:
            if self.l is None or int(self.l) != self.l or self.l < 0:
                raise DomainError(f"{self.kind} needs a non-negative integer l")

    @property
    def ls(self) -> tuple[int, ...]:
        if self.kind == "fv12":
            return project_channels(self.j)
        return (int(self.l),)

    @property
    def components(self) -> int:
        """FV components per orbital channel."""
        return 1 if self.kind == "schrodinger" else 2

    @property
    def component_dim(self) -> int:
        return self.components * len(self.ls)

    @property
    def relativistic(self) -> bool:
        return self.kind != "schrodinger"

    def label(self) -> str:
        if self.kind == "fv12":
            lp, lm = self.ls
            return f"fv12 j={_half(self.j)} (l+={lp}, l-={lm})"
        return f"{self.kind} l={self.l}"


def _half(j: float) -> str:
    return f"{int(round(2 * j))}/2"


@dataclass(frozen=True)
class FVProblem:
    system: PhysicalSystem
    channel: ChannelSpace
    model: PotentialModel
    basis: BasisSpec
    report_relative: bool = True
    cf_tol: float = DEFAULT_CF_TOL
    cf_max_depth: int = DEFAULT_CF_MAX_DEPTH
    quadrature_order: int | None = None
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.basis.is_complex and not self.split.supports_complex_scaling:
            raise AssemblyError("tabulated potentials cannot be used with a rotated basis")

    @cached_property
    def split(self) -> SplitModel:
        return split(self.model, self.system.mass, self.system.c, self.supercritical)

    @property
    def supercritical(self) -> bool:
        """True if the vector Coulomb tail alone makes a relativistic channel fall to the centre.

        The FV0 radial equation carries -(Z/hbar c)^2 / r^2, so the reference
        problem loses its ground state once (Z/hbar c)^2 >= (l + 1/2)^2.  The
        Coulomb term is then handled in the truncated basis instead.
        """
        if not self.channel.relativistic:
            return False
        z = sum(t.strength for t in self.model.vector_terms if t.kind == "coulomb")
        alpha2 = (z / (self.system.hbar * self.system.c)) ** 2
        return any(alpha2 >= (l + 0.5) ** 2 for l in self.channel.ls)

    @property
    def energy_shift(self) -> float:
        """Total energy = reported energy + energy_shift."""
        if self.channel.relativistic and self.report_relative:
            return self.system.rest_energy
        return 0.0

    @property
    def bases(self) -> tuple[BasisSpec, ...]:
        return tuple(self.basis.with_l(l) for l in self.channel.ls)

    @property
    def n(self) -> int:
        return self.basis.size

    @property
    def dim(self) -> int:
        return self.n * self.channel.component_dim

    @property
    def row_scale(self) -> np.ndarray:
        """Per-component row scaling applied to J and V (1 for particles)."""
        if self.channel.components == 1:
            return np.ones(1)
        return np.array([1.0, 1.0 / (2 * self.system.rest_energy)])

    def with_basis(self, basis: BasisSpec) -> "FVProblem":
        return FVProblem(
            self.system, self.channel, self.model, basis, self.report_relative,
            self.cf_tol, self.cf_max_depth, self.quadrature_order,
        )

    def with_model(self, model: PotentialModel) -> "FVProblem":
        return FVProblem(
            self.system, self.channel, model, self.basis, self.report_relative,
            self.cf_tol, self.cf_max_depth, self.quadrature_order,
        )


# ---------------------------------------------------------------------------
# long range: banded J(E) per channel
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LongRangeChannel:
    """Banded reference operator J(E) = E*S - H0 for one orbital channel.

    ``band(n_lo, n_hi)`` returns the affine pieces (A, H) with
    J = eps*A - H, each of shape (rows, 2w+1, cd, cd) where column k of the
    second axis is radial offset k - w.
    """

    problem: FVProblem
    spec: BasisSpec

    @property
    def width(self) -> int:
        return self.problem.split.long_range.bandwidth()

    @property
    def cd(self) -> int:
        return self.problem.channel.components

    def band(self, n_lo: int, n_hi: int) -> tuple[np.ndarray, np.ndarray]:
        pr = self.problem
        w = self.width
        l, b = self.spec.l, self.spec.scale
        sysm = pr.system
        lr = pr.split.long_range

        def padded(arr):
            # pad a band of half-width h to half-width w
            h = (arr.shape[1] - 1) // 2
            out = np.zeros((arr.shape[0], 2 * w + 1), dtype=np.result_type(arr, float))
            out[:, w - h : w + h + 1] = arr
            return out

        S = padded(csbasis.power_band(l, b, 0, n_lo, n_hi))
        K = padded(csbasis.kinetic_band(l, b, n_lo, n_hi, sysm.mass, sysm.hbar))
        for p, coef in lr.scalar.items():
            K = K + coef * padded(csbasis.power_band(l, b, p, n_lo, n_hi))
        V = np.zeros_like(K)
        for p, coef in lr.vector.items():
            V = V + coef * padded(csbasis.power_band(l, b, p, n_lo, n_hi))

        cd = self.cd
        shape = S.shape + (cd, cd)
        A = np.zeros(shape, dtype=S.dtype)
        H = np.zeros(shape, dtype=np.result_type(S, K))
        if cd == 1:
            A[..., 0, 0] = S
            H[..., 0, 0] = K + V
            return A, H
        mc2 = sysm.rest_energy
        shift = pr.energy_shift
        scale = pr.row_scale
        # H - shift*S for H = P K + tau3 mc^2 S + V
        H[..., 0, 0] = K + (mc2 - shift) * S + V
        H[..., 0, 1] = K
        H[..., 1, 0] = -K
        H[..., 1, 1] = -K + (-mc2 - shift) * S + V
        A[..., 0, 0] = S
        A[..., 1, 1] = S
        A *= scale[:, None]
        H *= scale[:, None]
        return A, H

    def dense(self, n_lo: int, n_hi: int) -> tuple[np.ndarray, np.ndarray]:
        """Dense (A, H) for the radial index range (rows and columns)."""
        A, H = self.band(n_lo, n_hi)
        return _band_dense(A, self.width), _band_dense(H, self.width)

    def tail_operator(self, energies: np.ndarray, start_radial: int) -> BlockTridiagonalOperator:
        w, cd = self.width, self.cd
        B = w * cd
        eps = np.asarray(energies)

        def rule(i0: int, i1: int):
            n_lo = start_radial + i0 * w
            n_hi = start_radial + (i1 + 1) * w
            A, H = self.band(n_lo, n_hi)
            Ad, Au, Al = _band_blocks(A, w, i1 - i0)
            Hd, Hu, Hl = _band_blocks(H, w, i1 - i0)
            e = eps[None, :, None, None]
            return (
                e * Ad[:, None] - Hd[:, None],
                e * Au[:, None] - Hu[:, None],
                e * Al[:, None] - Hl[:, None],
            )

        return BlockTridiagonalOperator(B, tail_rule=rule)


def _band_dense(band: np.ndarray, w: int) -> np.ndarray:
    rows, _, cd, _ = band.shape
    out = np.zeros((rows * cd, rows * cd), dtype=band.dtype)
    for k in range(-w, w + 1):
        i = np.arange(max(0, -k), min(rows, rows - k))
        for a in range(cd):
            for c in range(cd):
                out[i * cd + a, (i + k) * cd + c] = band[i, k + w, a, c]
    return out


def _band_blocks(band: np.ndarray, w: int, nblocks: int):
    """Split a radial band (rows >= (nblocks+1)*w) into block-tridiagonal stacks."""
    cd = band.shape[-1]
    B = w * cd
    D = np.zeros((nblocks, B, B), dtype=band.dtype)
    U = np.zeros_like(D)
    L = np.zeros_like(D)
    base = np.arange(nblocks) * w
    for a in range(w):
        rows = base + a
        for a2 in range(w):
            sa, sb = slice(a * cd, (a + 1) * cd), slice(a2 * cd, (a2 + 1) * cd)
            k = a2 - a  # diagonal block offset
            D[:, sa, sb] = band[rows, k + w]
            k = w + a2 - a  # upper block: column base + w + a2
            if k <= w:
                U[:, sa, sb] = band[rows, k + w]
            k = a2 - (w + a)  # lower block: row base + w + a, column base + a2
            if k >= -w:
                L[:, sa, sb] = band[rows + w, k + w]
    return D, U, L


def assemble_long_range(problem: FVProblem) -> tuple[LongRangeChannel, ...]:
    """One banded reference operator per orbital channel."""
    specs = problem.bases
    if len({(s.b, s.n_max, s.theta) for s in specs}) != 1:
        raise AssemblyError("channel bases must share b, N and rotation")
    return tuple(LongRangeChannel(problem, s) for s in specs)


# ---------------------------------------------------------------------------
# short range
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShortRangeMatrix:
    """V_short in the truncated basis (unscaled rows).

    ``blocks[(i, k)]`` is the radial matrix block between channels i and k
    before the component structure is applied; ``data`` is the assembled
    matrix of dimension component_dim * (N+1).
    """

    data: np.ndarray
    vector: tuple[np.ndarray, ...]
    scalar: tuple[np.ndarray, ...]
    coupling: tuple[np.ndarray, ...]

    @property
    def is_zero(self) -> bool:
        return not np.any(self.data)


def _piece_matrix(bra: BasisSpec, ket: BasisSpec, pieces: Sequence[Piece], order) -> np.ndarray:
    dtype = complex if (bra.is_complex or ket.is_complex) else float
    out = np.zeros((bra.size, ket.size), dtype=dtype)
    for p in pieces:
        out = out + p.coef * csbasis.radial_matrix(bra, ket, p.power, p.decay, p.h, order)
    return out


def assemble_short_range(problem: FVProblem) -> ShortRangeMatrix:
    sp = problem.split
    specs = problem.bases
    order = problem.quadrature_order
    cd = problem.channel.components
    n = problem.n
    vs = tuple(_piece_matrix(s, s, sp.vector_short, order) for s in specs)
    us = tuple(_piece_matrix(s, s, sp.scalar_short, order) for s in specs)
    blocks = []
    for V, U in zip(vs, us):
        if cd == 1:
            blocks.append(U + V)
        else:
            blocks.append(np.kron(U, P_BLOCK) + np.kron(V, np.eye(2)))
    dtype = np.result_type(*blocks, float)
    coupling: tuple[np.ndarray, ...] = ()
    if problem.channel.kind == "fv12":
        lp, lm = specs
        m_pm = _piece_matrix(lp, lm, sp.coupling, order)
        m_mp = _piece_matrix(lm, lp, sp.coupling, order)
        coupling = (m_pm, m_mp)
        sysm = problem.system
        fac = -1j * sysm.hbar / (2 * sysm.mass * sysm.c)
        amp = fac * coupling_strength("+-")
        size = cd * n
        full = np.zeros((2 * size, 2 * size), dtype=complex)
        full[:size, :size] = blocks[0]
        full[size:, size:] = blocks[1]
        full[:size, size:] = amp * np.kron(m_pm, P_BLOCK)
        full[size:, :size] = amp * np.kron(m_mp, P_BLOCK)
        data = full
    else:
        data = blocks[0].astype(dtype)
    return ShortRangeMatrix(data, vs, us, coupling)


# ---------------------------------------------------------------------------
# Green's corner
# ---------------------------------------------------------------------------


@dataclass
class GreensCorner:
    """Inverse Green's corner for a batch of energies (scaled rows).

    ``inverse`` has shape (nE, dim, dim) and equals Dl * G^{-1}, where Dl is
    the component row scaling; ``depth`` is the continued-fraction depth in
    radial indices, a tuple with one entry per channel when there are several.
    """

    energies: np.ndarray
    inverse: np.ndarray
    row_scale: np.ndarray
    depth: int | tuple[int, ...]
    prefix: np.ndarray  # Dl * J_prefix (no tail correction)

    def greens(self) -> np.ndarray:
        """The unscaled Green's corner G for each energy."""
        return refined_inverse(self.inverse) * self.row_scale[None, None, :]


def _tail_band(ch: LongRangeChannel, start: int, depth: int) -> tuple[np.ndarray, np.ndarray, int]:
    """LAPACK band storage (A, H) of the reference truncated to radial rows start..start+depth-1."""
    cd, w = ch.cd, ch.width
    bw = (w + 1) * cd - 1
    memo = ch.problem._memo
    key = ("tail", ch.spec.l, start)
    hit = memo.get(key)
    if hit is None or hit[2] < depth:
        A, H = ch.band(start, start + depth)
        size = depth * cd
        abA = np.zeros((2 * bw + 1, size), dtype=A.dtype)
        abH = np.zeros((2 * bw + 1, size), dtype=H.dtype)
        r = np.arange(depth)
        for k in range(-w, w + 1):
            rr = r[(r + k >= 0) & (r + k < depth)]
            for a in range(cd):
                for c in range(cd):
                    row = bw + a - c - k * cd
                    col = (rr + k) * cd + c
                    abA[row, col] = A[rr, k + w, a, c]
                    abH[row, col] = H[rr, k + w, a, c]
        hit = (abA, abH, depth)
        memo[key] = hit
    abA, abH, full = hit
    size = depth * cd
    abA, abH = abA[:, :size].copy(), abH[:, :size].copy()
    if full > depth:
        # drop couplings to rows beyond the truncation
        for d in range(1, bw + 1):
            abA[bw + d, size - d:] = 0
            abH[bw + d, size - d:] = 0
    return abA, abH, bw


def _tail_greens(ch: LongRangeChannel, eps: np.ndarray, start: int, depth: int) -> np.ndarray:
    """Leading w*cd corner of the inverse of the truncated tail, per energy."""
    abA, abH, bw = _tail_band(ch, start, depth)
    B = ch.width * ch.cd
    dtype = np.result_type(abA, abH, eps)
    out = np.empty((len(eps), B, B), dtype=dtype)
    for i, e in enumerate(eps):
        out[i] = banded_corner_inverse(e * abA - abH, bw, B)
    return out


def _tail_exponents(ch: LongRangeChannel) -> tuple[tuple[float, ...], ...]:
    """Error exponent ladders of the truncated tail: K^-(2 lam + 1), then half-integer or integer steps.

    lam = l, except that a long-range Coulomb term in a relativistic channel
    lowers the barrier to lam (lam + 1) = l (l + 1) - (Z / hbar c)^2.
    """
    pr, l = ch.problem, ch.spec.l
    lead = 2 * l + 1.0
    z = pr.split.long_range.coulomb
    if pr.channel.relativistic and z:
        lead = 2 * math.sqrt((l + 0.5) ** 2 - (z / (pr.system.hbar * pr.system.c)) ** 2)
    return tuple(lead + 0.5 * j for j in range(5)), tuple(lead + j for j in range(5))


def _channel_schur(
    ch: LongRangeChannel,
    energies: np.ndarray,
    tol: float,
    max_depth: int,
    depth: int | None,
):
    pr = ch.problem
    n = pr.n
    w, cd = ch.width, ch.cd
    eps = energies
    A, H = ch.dense(0, n)
    Jpp = eps[:, None, None] * A[None] - H[None]
    initial = w * max(16, -(-(n + 16) // w))
    # coupling of the last w radial indices of the prefix to the first tail block
    Ab, Hb = ch.band(n - w if n >= w else 0, n + w)
    _, Au, Al = _band_blocks_offset(Ab, Hb, eps, w, n)
    rows = slice((n - w) * cd if n >= w else 0, n * cd)
    try:
        corr, used = doubling_limit(
            lambda d: Au @ _tail_greens(ch, eps, n, d) @ Al, tol=tol,
            max_depth=max(max_depth, 4 * initial), initial_depth=initial, fixed_depth=depth,
            exponents=_tail_exponents(ch),
        )
    except ConvergenceError as exc:
        raise ConvergenceError(str(exc), exc.history, energy=eps) from exc
    Gi = Jpp.astype(np.result_type(Jpp, corr)).copy()
    Gi[:, rows, rows] -= corr
    return Gi, Jpp, used


def _band_blocks_offset(A, H, eps, w, n):
    """Coupling blocks between prefix rows max(0,n-w)..n-1 and tail rows n..n+w-1."""
    cd = A.shape[-1]
    n_lo = max(0, n - w)
    pre = n - n_lo
    up = np.zeros((len(eps), pre * cd, w * cd), dtype=np.result_type(A, H, eps))
    lo = np.zeros((len(eps), w * cd, pre * cd), dtype=up.dtype)
    e = eps[:, None, None]
    for a in range(pre):
        for a2 in range(w):
            k = (n + a2) - (n_lo + a)
            if k <= w:
                blk = e * A[a, k + w][None] - H[a, k + w][None]
                up[:, a * cd:(a + 1) * cd, a2 * cd:(a2 + 1) * cd] = blk
                row = pre + a2
                blk2 = e * A[row, -k + w][None] - H[row, -k + w][None]
                lo[:, a2 * cd:(a2 + 1) * cd, a * cd:(a + 1) * cd] = blk2
    return None, up, lo


def greens_data(
    problem: FVProblem, energies, depth: int | tuple[int, ...] | None = None
) -> GreensCorner:
    """Continued-fraction Green's corner data for a batch of energies.

    ``depth`` replays a previously reported depth: an int for all channels or
    one entry per channel.
    """
    eps = np.atleast_1d(np.asarray(energies))
    if problem.basis.is_complex or np.iscomplexobj(eps):
        eps = eps.astype(complex)
    channels = assemble_long_range(problem)
    parts, prefixes, depths = [], [], []
    per = depth if isinstance(depth, tuple) else (depth,) * len(channels)
    for ch, d in zip(channels, per):
        Gi, Jpp, used = _channel_schur(ch, eps, problem.cf_tol, problem.cf_max_depth, d)
        parts.append(Gi)
        prefixes.append(Jpp)
        depths.append(used)
    if len(parts) == 1:
        inv, pre = parts[0], prefixes[0]
    else:
        inv = _block_diag_batch(parts)
        pre = _block_diag_batch(prefixes)
    scale = np.tile(problem.row_scale, problem.n * len(channels))
    return GreensCorner(eps, inv, scale, depths[0] if len(depths) == 1 else tuple(depths), pre)


def _block_diag_batch(mats):
    nE = mats[0].shape[0]
    size = sum(m.shape[-1] for m in mats)
    out = np.zeros((nE, size, size), dtype=np.result_type(*mats))
    k = 0
    for m in mats:
        d = m.shape[-1]
        out[:, k:k + d, k:k + d] = m
        k += d
    return out


def greens_corner(problem: FVProblem, E) -> np.ndarray:
    """G(E): the (component_dim * (N+1))^2 corner of J(E)^{-1}."""
    try:
        data = greens_data(problem, [E])
        return data.greens()[0]
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"{exc} at E = {E}", exc.pivot, exc.index) from exc


def _scaled_short(problem: FVProblem, short: ShortRangeMatrix | None) -> np.ndarray:
    if short is None:
        short = problem._memo.get("short")
        if short is None:
            short = assemble_short_range(problem)
            problem._memo["short"] = short
    scale = np.tile(problem.row_scale, problem.n * len(problem.channel.ls))
    return short.data * scale[:, None]


def fredholm_determinant(problem: FVProblem, E, short: ShortRangeMatrix | None = None) -> complex:
    """D(E) = det(I - G(E) V_short)."""
    data = greens_data(problem, [E])
    Vs = _scaled_short(problem, short)
    if not np.any(Vs):
        return 1.0 + 0j
    M = np.eye(Vs.shape[0]) - np.linalg.solve(data.inverse[0], Vs)
    phase, logabs = log_determinant(M)
    return complex(phase * math.exp(logabs)) if logabs > -math.inf else 0j


def spectral_determinant(
    problem: FVProblem, energies, depth: int | tuple[int, ...] | None = None,
    short: ShortRangeMatrix | None = None,
) -> tuple[np.ndarray, np.ndarray, int | tuple[int, ...]]:
    """(phase, log|F|, depth) of F(E) = det(Gi(E) - V_short) for a batch.

    F differs from D by the factor det(Gi); it has the same zeros plus the
    eigenvalues of the reference problem, and no poles there.
    """
    data = greens_data(problem, energies, depth)
    Vs = _scaled_short(problem, short)
    M = data.inverse - Vs[None]
    phases = np.empty(len(data.energies), dtype=complex)
    logs = np.empty(len(data.energies))
    for i in range(len(data.energies)):
        phases[i], logs[i] = log_determinant(M[i])
    return phases, logs, data.depth


def null_vector(problem: FVProblem, E, depth: int | tuple[int, ...] | None = None) -> np.ndarray:
    """Coefficient vector y with (Gi(E) - V_short) y = 0 (smallest singular vector)."""
    data = greens_data(problem, [E], depth)
    M = data.inverse[0] - _scaled_short(problem, None)
    _, _, vh = np.linalg.svd(M)
    return vh[-1].conj()


def channel_norms(problem: FVProblem, y: np.ndarray) -> list[float]:
    """Overlap-weighted norm of each orbital channel block of ``y``."""
    cd = problem.channel.components
    size = problem.n * cd
    out = []
    for i, spec in enumerate(problem.bases):
        S = csbasis.overlap_matrix(spec).data
        Sfull = np.kron(S, np.eye(cd))
        part = y[i * size:(i + 1) * size]
        out.append(float(np.sqrt(abs(np.real(np.conj(part) @ (Sfull @ part))))))
    return out
