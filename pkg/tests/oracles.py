"""Independent reference computations shared by the test modules."""

import math

import numpy as np
from scipy.special import eval_genlaguerre, gammaln, roots_genlaguerre

from fvsolve.csbasis import BasisSpec, inverse_r_matrix, kinetic_matrix, overlap_matrix, power_r_matrix
from fvsolve.fvcore import ChannelSpace, FVProblem, PhysicalSystem
from fvsolve.potentials import PotentialModel

ORACLE_ORDER = 72
GRID = [(l, b) for l in range(4) for b in (0.3, 1.0, 4.0)]


def _norm(n, l):
    return math.exp(0.5 * (gammaln(n + 1) - gammaln(n + 2 * l + 2)))


def laguerre_series(n, alpha, x):
    """L_n^(alpha)(x) from its explicit coefficients."""
    return sum(
        (-1) ** k * math.comb(n + alpha, n - k) * x**k / math.factorial(k) for k in range(n + 1)
    )


def quadrature_moment(l, b, power, n_max, order=ORACLE_ORDER):
    """<n|r^power|n'> for n, n' <= n_max from scipy's Gauss-Laguerre rule.

    With x = 2br the integrand is x^(2l+2+power) e^-x L_n L_n' times constants.
    """
    alpha = 2 * l + 2 + power
    x, w = roots_genlaguerre(order, alpha)
    n = np.arange(n_max + 1)
    L = np.array([eval_genlaguerre(k, 2 * l + 1, x) for k in n])
    N = np.array([_norm(k, l) for k in n])
    M = (L * w) @ L.T
    return np.outer(N, N) * M * (2 * b) ** (2 * l + 2) / (2 * b) ** (alpha + 1)


def quadrature_kinetic(l, b, n_max, mass=1.0, order=ORACLE_ORDER):
    """(1/2m) int [phi_n' phi_n'' + l(l+1) phi_n phi_n' / r^2] dr.

    phi_n = N (2b)^(l+1) r^(l+1) e^-br L_n(2br), so phi_n' = N (2b)^(l+1) r^l e^-br q_n(r)
    with q_n = (l+1-br) L_n - 2br L_(n-1)^(2l+2).  Both terms carry the weight r^2l e^-2br.
    """
    x, w = roots_genlaguerre(order, 2 * l)
    r = x / (2 * b)
    n = np.arange(n_max + 1)
    L = np.array([eval_genlaguerre(k, 2 * l + 1, x) for k in n])
    dL = np.array(
        [-eval_genlaguerre(k - 1, 2 * l + 2, x) if k else np.zeros_like(x) for k in n]
    )
    q = (l + 1 - b * r) * L + r * 2 * b * dL
    N = np.array([_norm(k, l) for k in n]) * (2 * b) ** (l + 1)
    grad = (q * w) @ q.T
    cent = l * (l + 1) * ((L * w) @ L.T)
    jac = (2 * b) ** -(2 * l + 1)
    return np.outer(N, N) * (grad + cent) * jac / (2 * mass)


def closed_forms(spec):
    """(name, closed-form BandMatrix, quadrature reference) for every moment."""
    yield "overlap", overlap_matrix(spec), quadrature_moment(spec.l, spec.b, 0, spec.n_max)
    yield "inverse_r", inverse_r_matrix(spec), quadrature_moment(spec.l, spec.b, -1, spec.n_max)
    yield "kinetic", kinetic_matrix(spec), quadrature_kinetic(spec.l, spec.b, spec.n_max)
    for k in (1, 2, 3, 4):
        yield f"r^{k}", power_r_matrix(spec, k), quadrature_moment(spec.l, spec.b, k, spec.n_max)


def entry_scale(M):
    """sqrt(|M_nn M_n'n'|), the natural size of entry (n, n') of a Gram-like matrix."""
    d = np.sqrt(np.abs(np.diag(M)))
    return np.outer(d, d)


def klein_gordon_level(n_r, l, z=1.0, c=137.036, mass=1.0):
    a = z / c
    s = math.sqrt((l + 0.5) ** 2 - a * a)
    return mass * c * c * (1 + (a / (n_r + 0.5 + s)) ** 2) ** -0.5 - mass * c * c


def dirac_level(n_r, kappa, z=1.0, c=137.036, mass=1.0):
    a = z / c
    s = math.sqrt(kappa * kappa - a * a)
    return mass * c * c * (1 + (a / (n_r + s)) ** 2) ** -0.5 - mass * c * c


def make_problem(kind, vector=(), scalar=(), l=0, j=0.5, n_max=40, b=0.5, c=137.036,
                 effective=False, **kw):
    """FVProblem shorthand used across the test modules."""
    channel = ChannelSpace(kind, j=j) if kind == "fv12" else ChannelSpace(kind, l=l)
    model = PotentialModel(tuple(vector), tuple(scalar), effective)
    base_l = channel.ls[0]
    return FVProblem(PhysicalSystem(c=c), channel, model, BasisSpec(base_l, b, n_max), **kw)
