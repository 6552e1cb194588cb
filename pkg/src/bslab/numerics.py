"""Quadrature, dense eigensolvers, bracketed roots and a radial ODE oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import (
    AccuracyError,
    BracketError,
    ConditioningError,
    DomainError,
    InputError,
)

EIG_TOL = 1e-10
ROOT_TOL = 1e-10
OVERLAP_CUTOFF = 1e-12
MAX_CONDITION = 1e14


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    a: float
    b: float

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.nodes)))


@lru_cache(maxsize=64)
def _legendre_reference(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(n, a=-1.0, b=1.0):
    """Gauss-Legendre rule with ``n`` nodes mapped to [a, b]."""
    if int(n) != n or n < 1:
        raise DomainError(f"number of nodes must be a positive integer, got {n!r}")
    if not a < b:
        raise DomainError(f"need a < b, got [{a}, {b}]")
    x, w = _legendre_reference(int(n))
    half = 0.5 * (b - a)
    return QuadratureRule(half * x + 0.5 * (a + b), half * w, float(a), float(b))


def composite_gauss_legendre(breaks, n_per_panel):
    """Concatenate Gauss-Legendre panels between consecutive ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    if np.any(np.diff(breaks) <= 0):
        raise DomainError("panel breaks must be strictly increasing")
    rules = [gauss_legendre(n_per_panel, lo, hi) for lo, hi in zip(breaks[:-1], breaks[1:])]
    return QuadratureRule(
        np.concatenate([q.nodes for q in rules]),
        np.concatenate([q.weights for q in rules]),
        float(breaks[0]),
        float(breaks[-1]),
    )


@dataclass(frozen=True)
class EigSolution:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    condition: float = 1.0
    rank: int | None = None


def _check_symmetric(A, what="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"{what} must be square, got shape {A.shape}")
    scale = np.linalg.norm(A, ord="fro")
    if np.linalg.norm(A - A.T, ord="fro") > 1e-12 * max(scale, 1e-300):
        raise InputError(f"{what} is not symmetric within 1e-12 relative")
    return 0.5 * (A + A.T)


def sym_eig_top(A, count=1, tol=EIG_TOL):
    """Top ``count`` eigenpairs of a dense symmetric matrix, descending."""
    A = _check_symmetric(A)
    n = A.shape[0]
    count = min(int(count), n)
    if count < 1:
        raise DomainError("count must be >= 1")
    vals, vecs = scipy.linalg.eigh(A, subset_by_index=[n - count, n - 1])
    vals, vecs = vals[::-1], vecs[:, ::-1]
    res = np.linalg.norm(A @ vecs - vecs * vals, axis=0)
    scale = max(np.linalg.norm(A, ord=2) if n <= 64 else np.abs(vals).max(initial=0.0), 1.0)
    if np.any(res > tol * scale):
        raise AccuracyError(f"eigen residual {res.max():.2e} exceeds tol {tol:.1e}")
    return EigSolution(vals, vecs, res)


def gen_sym_eig_min(H, S, tol=EIG_TOL, prune=False, cutoff=OVERLAP_CUTOFF):
    """Smallest solution of H v = lam S v with S-normalised v.

    Without pruning the problem is reduced through the Cholesky factor of S
    and an ill-conditioned S (condition > 1e14 after unit-diagonal scaling)
    is refused. With ``prune=True`` the overlap is diagonalised and
    directions with relative eigenvalue below ``cutoff`` are dropped
    (canonical orthogonalisation); ``rank`` records what survived.
    """
    H = _check_symmetric(H, "H")
    S = _check_symmetric(S, "S")
    if H.shape != S.shape:
        raise InputError("H and S must have equal shapes")
    d = np.diag(S)
    if np.any(d <= 0):
        raise ConditioningError("overlap has non-positive diagonal; prune the basis")
    scale = 1.0 / np.sqrt(d)
    Sn = S * np.outer(scale, scale)
    Hn = H * np.outer(scale, scale)
    s_vals, s_vecs = np.linalg.eigh(Sn)
    s_max = s_vals[-1]
    condition = s_max / s_vals[0] if s_vals[0] > 0 else math.inf

    if prune:
        keep = s_vals > cutoff * s_max
        X = s_vecs[:, keep] / np.sqrt(s_vals[keep])
        Hp = X.T @ Hn @ X
        vals, vecs = np.linalg.eigh(0.5 * (Hp + Hp.T))
        vn = X @ vecs[:, :1]
        rank = int(keep.sum())
        # condition of the subspace that is actually used
        condition = s_max / s_vals[keep][0]
    else:
        if condition > MAX_CONDITION:
            raise ConditioningError(
                f"overlap condition number {condition:.2e} exceeds {MAX_CONDITION:.0e}; "
                "prune the basis (prune=True) or drop near-duplicate functions"
            )
        try:
            L = np.linalg.cholesky(Sn)
        except np.linalg.LinAlgError as exc:
            raise ConditioningError("overlap is not positive definite; prune the basis") from exc
        tmp = scipy.linalg.solve_triangular(L, Hn, lower=True)
        C = scipy.linalg.solve_triangular(L, tmp.T, lower=True)
        vals, vecs = np.linalg.eigh(0.5 * (C + C.T))
        vn = scipy.linalg.solve_triangular(L.T, vecs[:, :1], lower=False)
        rank = S.shape[0]

    v = vn * scale[:, None]
    v /= math.sqrt(float(v[:, 0] @ S @ v[:, 0]))
    lam = vals[:1]
    res = np.linalg.norm(H @ v - (S @ v) * lam, axis=0)
    ref = max(abs(lam[0]), 1.0) * np.linalg.norm(S @ v)
    if not prune and res[0] > tol * ref * max(1.0, condition * 1e-6):
        raise AccuracyError(f"generalized eigen residual {res[0]:.2e} too large")
    return EigSolution(lam, v, res, condition=condition, rank=rank)


def brent_root(f, lo, hi, tol=ROOT_TOL, rtol=4 * np.finfo(float).eps):
    """Root of ``f`` inside a sign-changing bracket [lo, hi]."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo:.3e}, {fhi:.3e}")
    return float(scipy.optimize.brentq(f, lo, hi, xtol=tol, rtol=rtol, maxiter=500))


def bisect_root(f, lo, hi, tol=ROOT_TOL):
    """Plain bisection; kept as an independent cross-check for :func:`brent_root`."""
    flo = f(lo)
    if np.sign(flo) == np.sign(f(hi)):
        raise BracketError(f"no sign change on [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- radial ODE oracle -------------------------------------------------------

@dataclass(frozen=True)
class RadialSolution:
    u: float
    du: float
    nodes: int

    @property
    def log_derivative(self):
        return self.du / self.u


def _rk4_step(u, du, g0, gh, g1, h):
    # u'' = g u written as a first-order system
    k1u, k1v = du, g0 * u
    k2u, k2v = du + 0.5 * h * k1v, gh * (u + 0.5 * h * k1u)
    k3u, k3v = du + 0.5 * h * k2v, gh * (u + 0.5 * h * k2u)
    k4u, k4v = du + h * k3v, g1 * (u + h * k3u)
    return (
        u + h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u),
        du + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v),
    )


def _numerov_segment(g_of_r, r0, r1, u0, du0, n):
    """Propagate u'' = g u from r0 to r1 in n uniform Numerov steps.

    Start is one RK4 step; the end derivative uses a one-sided fourth-order
    formula so that segments can be chained across jumps of g.
    Returns the solution values at the n new nodes and u'(r1).
    """
    h = (r1 - r0) / n
    r = r0 + h * np.arange(n + 1)
    # evaluate the last node just inside the segment: a jump of g at r1 belongs to the next one
    r[-1] = np.nextafter(r1, r0)
    g = g_of_r(r)
    g_half = float(g_of_r(np.array([r0 + 0.5 * h]))[0])
    u1, du1 = _rk4_step(u0, du0, g[0], g_half, g[1], h)
    # summed form: z = (1 - h^2 g/12) u has second difference h^2 g u; carrying the
    # first difference explicitly keeps round-off growth near O(n) instead of O(n^2)
    a = (1.0 - (h * h / 12.0) * g).tolist()
    hg = (h * h * g).tolist()
    u = [0.0] * (n + 1)
    u[0], u[1] = u0, u1
    z = a[1] * u1
    dz = z - a[0] * u0
    for i in range(1, n):
        dz += hg[i] * u[i]
        z += dz
        u[i + 1] = z / a[i + 1]
    if n >= 2:
        w = g[-3:] * np.array(u[-3:])
        wp = (3 * w[2] - 4 * w[1] + w[0]) / (2 * h)
        wpp = (w[2] - 2 * w[1] + w[0]) / (h * h)
        du_end = (u[-1] - u[-2]) / h + 0.5 * h * w[2] - h * h / 6.0 * wp + h ** 3 / 24.0 * wpp
    else:
        du_end = du1
    return u[1:], du_end


def _count_sign_changes(values):
    v = np.asarray(values)
    v = v[v != 0.0]
    return int(np.count_nonzero(np.signbit(v[1:]) != np.signbit(v[:-1])))


def _radial_solve(potential, energy, r_max, steps, coupling=1.0):
    breaks = [0.0]
    support = getattr(potential, "support", None)
    if support is not None and 0.0 < support < r_max:
        breaks.append(support)
    breaks.append(r_max)

    def g_of_r(r):
        return -coupling * np.asarray(potential(r), dtype=float) - energy

    u, du = 0.0, 1.0
    values = []
    for r0, r1 in zip(breaks[:-1], breaks[1:]):
        n = max(4, int(round(steps * (r1 - r0) / r_max)))
        seg, du = _numerov_segment(g_of_r, r0, r1, u, du, n)
        values.extend(seg)
        u = seg[-1]
    return RadialSolution(u, du, _count_sign_changes(values))


def radial_solution(potential, energy, r_max, steps=4000, coupling=1.0, tol=1e-7, check=True):
    """Outward solution of -u'' - coupling V u = E u with u(0)=0, u'(0)=1.

    Returns (u, u', interior node count) at ``r_max``. With ``check`` the
    step is halved and the two results compared; a relative disagreement in
    u or u' above ``tol`` (relative to max(|u|, r_max |u'|)) raises
    :class:`AccuracyError`.
    """
    if energy > 0:
        raise DomainError("radial oracle handles E <= 0 only")
    if not r_max > 0:
        raise DomainError("r_max must be positive")
    coarse = _radial_solve(potential, energy, r_max, steps, coupling)
    if not check:
        return coarse
    fine = _radial_solve(potential, energy, r_max, 2 * steps, coupling)
    ref = max(abs(fine.u), r_max * abs(fine.du), 1e-300)
    err = max(abs(fine.u - coarse.u), r_max * abs(fine.du - coarse.du)) / ref
    if err > tol:
        raise AccuracyError(
            f"radial integration with {steps} steps has relative error ~{err:.1e} > {tol:.1e}"
        )
    return fine


def radial_integrate(potential, energy, r_max, steps=4000, coupling=1.0, tol=1e-7):
    """Log-derivative u'/u at ``r_max`` and the interior node count."""
    sol = radial_solution(potential, energy, r_max, steps, coupling, tol)
    return sol.log_derivative, sol.nodes
