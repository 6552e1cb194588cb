"""Two-body Birman-Schwinger operator in the s-wave sector.

For a radial potential V the operator sqrt(V) (-Lap + k^2)^{-1} sqrt(V)
restricted to spherically symmetric functions acts on reduced radial
functions phi(r) (phi_3d = phi / (sqrt(4 pi) r)) through the kernel

    G_k(r, r') = (exp(-k|r - r'|) - exp(-k(r + r'))) / (2k),   G_0 = min(r, r').

It is discretised by a Nystrom rule on a Gauss-Legendre grid. The kernel
has a kink on the diagonal which limits plain Nystrom to O(N^-2); the
default build adds the singularity-subtraction diagonal

    V(r_i) * (int_a^b G_k(r_i, r') dr' - sum_j w_j G_k(r_i, r_j))

which keeps the matrix symmetric and restores O(N^-4) convergence.
Eigenvectors carry the quadrature weights, v_i = sqrt(w_i) phi(r_i).
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import numerics
from .errors import (
    AccuracyError,
    BracketError,
    ConsistencyError,
    DegeneracyError,
    DomainError,
    RangeError,
    SingularityError,
)
from .model import PairPotential

DEFAULT_N = 400
GAP_MIN = 0.05
THRESHOLD_TOL = 1e-6


def radial_grid(p, n=DEFAULT_N, r_max=None):
    """Gauss-Legendre grid on [0, r_max] suited to ``p``.

    Square wells are discretised on their support only, since the
    integrand vanishes beyond it and a jump inside a panel would spoil the
    quadrature order.
    """
    if r_max is None:
        r_max = p.default_r_max
    if p.support is not None:
        r_max = min(r_max, p.support)
    return numerics.gauss_legendre(n, 0.0, r_max)


def green_kernel(k, r, rp):
    """s-wave Green's function of -d^2/dr^2 + k^2 with Dirichlet condition at 0."""
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    lo = np.minimum(r, rp)
    hi = np.maximum(r, rp)
    if k == 0:
        return lo
    # sinh(k lo) exp(-k hi) / k without overflow or cancellation
    return -np.expm1(-2.0 * k * lo) * np.exp(-k * (hi - lo)) / (2.0 * k)


def green_row_integral(k, r, a, b):
    """int_a^b G_k(r, r') dr' for a <= r <= b, in closed form."""
    r = np.asarray(r, dtype=float)
    if k == 0:
        return 0.5 * (r * r - a * a) + r * (b - r)
    inner = np.expm1(-k * (r - a)) * np.expm1(-k * (r + a))
    outer = np.expm1(-2.0 * k * r) * np.expm1(-k * (b - r))
    return (inner + outer) / (2.0 * k * k)


@dataclass(frozen=True)
class BSMatrix:
    k: float
    grid: numerics.QuadratureRule
    entries: np.ndarray
    potential: PairPotential
    corrected: bool = True

    @property
    def n(self):
        return self.entries.shape[0]


def build_bs_matrix(p, k, grid, corrected=True):
    """Nystrom matrix of L(k) for potential ``p`` on ``grid``."""
    if not k >= 0:
        raise DomainError(f"momentum k must be >= 0, got {k!r}")
    if p.support is None and grid.b < 20.0 / p.b2:
        warnings.warn(
            f"grid ends at {grid.b:g} < 20/b2 = {20.0 / p.b2:g}; potential tail is truncated",
            stacklevel=2,
        )
    r, w = grid.nodes, grid.weights
    v = p(r)
    s = np.sqrt(w * v)
    G = green_kernel(k, r[:, None], r[None, :])
    M = s[:, None] * G * s[None, :]
    # the kernel formula is symmetric only up to rounding
    M = 0.5 * (M + M.T)
    if corrected:
        c = green_row_integral(k, r, grid.a, grid.b) - G @ w
        M[np.diag_indices_from(M)] += v * c
    return BSMatrix(float(k), grid, M, p, corrected)


def top_eigenpairs(bs, count=2):
    return numerics.sym_eig_top(bs.entries, count=count)


def mu_max(p, k, grid):
    """Dominant eigenvalue of L(k)."""
    return float(top_eigenpairs(build_bs_matrix(p, k, grid), 1).eigenvalues[0])


# --- coupling threshold --------------------------------------------------------

@dataclass(frozen=True)
class ThresholdResult:
    lambda_cr: float
    mu_max: float
    lambda_oracle: float | None
    oracle_bracket: tuple | None
    n: int
    r_max: float

    @property
    def discrepancy(self):
        if self.lambda_oracle is None:
            return None
        return abs(self.lambda_cr - self.lambda_oracle) / self.lambda_cr


# lambda_cr * depth * range^2 for each shape: pi^2/4, (j_01 / 2)^2 and a value
# computed once with this module and the shooting oracle (agreement 1e-8)
REFERENCE_THRESHOLD = {
    "square-well": math.pi ** 2 / 4.0,
    "exponential": float(special.jn_zeros(0, 1)[0] / 2.0) ** 2,
    "gaussian": 2.6840046196,
}


def threshold_estimate(p):
    """Tabulated lambda_cr of ``p`` at unit coupling; no discretisation involved."""
    return REFERENCE_THRESHOLD[p.shape] / (p.depth * p.range_ ** 2)


def oracle_steps(p, r_max):
    """Numerov step count used by the shooting cross-checks."""
    per_range = 2000 if p.support is not None else 500
    return int(per_range * max(1.0, math.ceil(r_max / p.range_)))


def _refined_root(make_f, lo, hi, steps, tol):
    """Root with ``steps`` and again with ``2*steps``; the spread estimates the error."""
    root = numerics.brent_root(make_f(steps), lo, hi, tol=1e-15 * hi, rtol=1e-14)
    width = max(1e-6 * root, 1e-13)
    f2 = make_f(2 * steps)
    a, b = max(lo, root - width), min(hi, root + width)
    try:
        root2 = numerics.brent_root(f2, a, b, tol=1e-15 * hi, rtol=1e-14)
    except BracketError:
        root2 = numerics.brent_root(f2, lo, hi, tol=1e-15 * hi, rtol=1e-14)
    if abs(root2 - root) > tol * abs(root2):
        raise AccuracyError(
            f"shooting root moved by {abs(root2 - root) / abs(root2):.1e} when the step was halved"
        )
    return root2


def shooting_threshold(p, r_max=None, steps=None):
    """lambda_cr from the sign change of u'(r_max) of the zero-energy solution.

    Returns (lambda_cr, (lo, hi)) where [lo, hi] is the bracket found by
    scanning lambda upward from a small value.
    """
    p = p.with_coupling(1.0)
    if r_max is None:
        r_max = p.default_r_max
    if steps is None:
        steps = oracle_steps(p, r_max)

    def make_du(n):
        return lambda lam: numerics.radial_solution(p, 0.0, r_max, n, coupling=lam, check=False).du

    du = make_du(steps)
    lo = 0.05 / (p.depth * p.range_ ** 2)
    if du(lo) <= 0:
        raise ConsistencyError("zero-energy solution already turns over at the smallest scan coupling")
    hi = lo
    for _ in range(200):
        hi = lo * 1.25
        if du(hi) <= 0:
            break
        lo = hi
    else:
        raise ConsistencyError("no zero-energy threshold found by the shooting scan")
    return _refined_root(make_du, lo, hi, steps, 1e-9), (lo, hi)


def coupling_threshold(p, grid=None, tol=THRESHOLD_TOL, oracle=True):
    """Critical multiplier lambda_cr = 1 / mu_max(L(0)) of ``p`` (taken at coupling 1).

    With ``oracle`` the value is cross-checked against the shooting
    threshold; a relative disagreement above ``10 * tol`` raises
    :class:`ConsistencyError`.
    """
    p = p.with_coupling(1.0)
    if p.depth <= 0:
        raise DomainError("threshold of a zero potential does not exist")
    if grid is None:
        grid = radial_grid(p)
    mu = mu_max(p, 0.0, grid)
    if mu <= 0:
        raise DomainError("L(0) has no positive eigenvalue")
    lam = 1.0 / mu
    lam_o, bracket = None, None
    if oracle:
        lam_o, bracket = shooting_threshold(p, r_max=grid.b)
        if abs(lam - lam_o) > 10.0 * tol * lam:
            raise ConsistencyError(
                f"Birman-Schwinger threshold {lam:.12g} and shooting threshold {lam_o:.12g} disagree"
            )
    return ThresholdResult(lam, mu, lam_o, bracket, len(grid), grid.b)


def tune_to_threshold(p, grid=None, oracle=False):
    """Copy of ``p`` with its coupling set to the critical multiplier."""
    return p.with_coupling(coupling_threshold(p, grid, oracle=oracle).lambda_cr)


# --- resonance function and a ----------------------------------------------------

@dataclass(frozen=True)
class ResonanceData:
    lambda_cr: float
    u0: np.ndarray
    a: float
    rho0_est: float
    mu0: float
    gap: float
    grid: numerics.QuadratureRule = field(repr=False)
    potential: PairPotential = field(repr=False)

    def phi(self):
        """Reduced radial resonance function phi(r_i) at the grid nodes."""
        return self.u0 / np.sqrt(self.grid.weights)


def _sign_normalise(v):
    v = np.asarray(v, dtype=float).copy()
    if v.sum() < 0:
        v = -v
    return v / np.linalg.norm(v)


def _a_value(u0, p, grid):
    r, w = grid.nodes, grid.weights
    return float(np.dot(np.sqrt(w) * r * np.sqrt(p(r)), u0)) ** 2


def estimate_rho0(p, grid, gap_min=GAP_MIN, k_max=None, rtol=1e-3):
    """Largest k (up to ``k_max``) whose dominant eigenvalue keeps a gap >= gap_min."""
    if k_max is None:
        k_max = 50.0 * p.b2

    def gap(k):
        vals = top_eigenpairs(build_bs_matrix(p, k, grid), 2).eigenvalues
        return vals[0] - vals[1]

    if gap(0.0) < gap_min:
        return 0.0
    lo = 1e-3 * p.b2
    if gap(lo) < gap_min:
        return numerics.bisect_root(lambda k: gap(k) - gap_min, 0.0, lo, tol=rtol * lo)
    hi = lo
    while hi < k_max:
        hi = min(2.0 * lo, k_max)
        if gap(hi) < gap_min:
            return numerics.bisect_root(lambda k: gap(k) - gap_min, lo, hi, tol=rtol * lo)
        lo = hi
    return float(k_max)


def resonance_function(p, grid=None, gap_min=GAP_MIN):
    """Dominant eigenpair of L(0) for ``p`` tuned to its threshold coupling."""
    if grid is None:
        grid = radial_grid(p)
    sol = top_eigenpairs(build_bs_matrix(p, 0.0, grid), 2)
    mu0, mu1 = sol.eigenvalues
    if abs(mu0 - 1.0) > 1e-8:
        raise DomainError(f"potential is not at threshold: top eigenvalue of L(0) is {mu0:.12g}")
    if mu0 - mu1 < 1e-8:
        raise DegeneracyError("top eigenvalue of L(0) is degenerate; discretisation is broken")
    u0 = _sign_normalise(sol.eigenvectors[:, 0])
    rho0 = estimate_rho0(p, grid, gap_min)
    return ResonanceData(
        lambda_cr=p.coupling,
        u0=u0,
        a=_a_value(u0, p, grid),
        rho0_est=rho0,
        mu0=float(mu0),
        gap=float(mu0 - mu1),
        grid=grid,
        potential=p,
    )


def a_coefficient(rd, p=None):
    """a = (int_0^inf r sqrt(V(r)) phi_0(r) dr)^2, the s-wave form of (phi_0, sqrt V)^2 / 4pi."""
    p = rd.potential if p is None else p
    a = _a_value(rd.u0, p, rd.grid)
    if not a > 0:
        raise ConsistencyError(f"a-coefficient is not positive: {a}")
    return a


# --- mu(k) and the W(k) decomposition --------------------------------------------

@dataclass(frozen=True)
class MuCurve:
    k: np.ndarray
    mu: np.ndarray
    gap: np.ndarray
    slope: float
    intercept: float
    residual: float
    window: tuple


def _sweep(fn, ks, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, ks))
    return [fn(k) for k in ks]


def _check_range(k_samples, rho0):
    ks = np.asarray(k_samples, dtype=float)
    if np.any(ks <= 0):
        raise RangeError("k samples must be positive")
    if rho0 is not None and np.any(ks >= rho0):
        raise RangeError(f"k samples must stay below rho0_est = {rho0:.4g}")
    return ks


def mu_curve(p, k_samples, grid=None, window=(1e-3, 1e-2), rho0=None, workers=None):
    """Sample mu(k) and fit a line over ``window``."""
    if grid is None:
        grid = radial_grid(p)
    ks = _check_range(k_samples, rho0)

    def sample(k):
        vals = top_eigenpairs(build_bs_matrix(p, k, grid), 2).eigenvalues
        return vals[0], vals[0] - vals[1]

    out = np.array(_sweep(sample, ks, workers))
    mu, gap = out[:, 0], out[:, 1]
    inside = (ks >= window[0]) & (ks <= window[1])
    if inside.sum() < 2:
        raise RangeError(f"need at least two samples inside the fit window {window}")
    coef = np.polyfit(ks[inside], mu[inside], 1)
    resid = mu[inside] - np.polyval(coef, ks[inside])
    return MuCurve(ks, mu, gap, float(coef[0]), float(coef[1]),
                   float(np.sqrt(np.mean(resid ** 2))), tuple(window))


@dataclass(frozen=True)
class WDecomposition:
    k: np.ndarray
    norm_w: np.ndarray
    norm_z: np.ndarray
    mu: np.ndarray
    a: float

    @property
    def pole_ratio(self):
        """||W(k)|| a k, which tends to 1 as k -> 0."""
        return self.norm_w * self.a * self.k


def projector(u0):
    return np.outer(u0, u0)


def w_decomposition(p, k_samples, grid=None, rd=None, workers=None):
    """Spectral norms of W(k) = (1 - L(k))^{-1} and Z(k) = W(k) - P0/(a k)."""
    if grid is None:
        grid = rd.grid if rd is not None else radial_grid(p)
    if rd is None:
        rd = resonance_function(p, grid)
    ks = _check_range(k_samples, rd.rho0_est)
    a = rd.a
    P0 = projector(rd.u0)
    n = len(grid)
    # discretisation floor of 1 - mu(k): below it 1 - L(k) cannot be trusted
    floor = max(10.0 * abs(rd.mu0 - 1.0), 1e-12)

    def sample(k):
        M = build_bs_matrix(p, k, grid).entries
        mu = float(np.linalg.eigvalsh(M)[-1])
        if 1.0 - mu <= floor:
            raise SingularityError(
                f"1 - L(k) is numerically singular at k={k:g}",
                smallest_trustworthy_k=100.0 * floor / a,
            )
        W = np.linalg.solve(np.eye(n) - M, np.eye(n))
        W = 0.5 * (W + W.T)
        Z = W - P0 / (a * k)
        return (np.abs(np.linalg.eigvalsh(W)).max(), np.abs(np.linalg.eigvalsh(Z)).max(), mu)

    out = np.array(_sweep(sample, ks, workers))
    return WDecomposition(ks, out[:, 0], out[:, 1], out[:, 2], a)


# --- binding energies --------------------------------------------------------------

@dataclass(frozen=True)
class BoundState:
    energy: float
    kappa: float
    kappa_oracle: float | None

    @property
    def discrepancy(self):
        if self.kappa_oracle is None:
            return None
        return abs(self.kappa - self.kappa_oracle) / self.kappa


def shooting_kappa(p, r_max=None, steps=None):
    """Ground-state decay constant from matching u' + kappa u = 0 at r_max."""
    if r_max is None:
        r_max = p.default_r_max
    if steps is None:
        steps = oracle_steps(p, r_max)

    def make_match(n):
        def match(kappa):
            s = numerics.radial_solution(p, -kappa * kappa, r_max, n, check=False)
            return (s.du + kappa * s.u) / max(abs(s.u), abs(s.du), 1e-300)
        return match

    match = make_match(steps)
    k_top = math.sqrt(p.strength) * 1.01
    ladder = k_top * np.logspace(0, -9, 181)
    if match(ladder[0]) <= 0:
        raise ConsistencyError("matching function is not positive above the deepest possible binding")
    for lo, hi in zip(ladder[1:], ladder[:-1]):
        if match(lo) <= 0:
            return _refined_root(make_match, lo, hi, steps, 1e-8)
    return None


def binding_energy(p, grid=None, lambda_cr=None, oracle=True, tol=1e-5):
    """Ground-state energy -kappa^2 of -Lap - V, or None if there is no bound state.

    kappa solves mu_max(L(kappa)) = 1 for the potential as given. With
    ``oracle`` kappa is recomputed by shooting and a relative disagreement
    above ``tol`` raises :class:`ConsistencyError`.
    """
    if grid is None:
        grid = radial_grid(p)
    mu0 = mu_max(p, 0.0, grid)
    if lambda_cr is not None and p.coupling <= lambda_cr:
        return None
    if mu0 <= 1.0 + 1e-13:
        return None

    def f(kappa):
        return mu_max(p, kappa, grid) - 1.0

    hi = 1e-3 * p.b2
    lo = 0.0
    while f(hi) > 0:
        lo, hi = hi, 2.0 * hi
    kappa = numerics.brent_root(f, lo, hi, tol=1e-15 * hi, rtol=1e-14)
    kappa_o = None
    if oracle:
        kappa_o = shooting_kappa(p, r_max=grid.b)
        if kappa_o is None or abs(kappa - kappa_o) > tol * kappa:
            raise ConsistencyError(f"Birman-Schwinger kappa {kappa:.12g} vs shooting {kappa_o}")
    return BoundState(-kappa * kappa, kappa, kappa_o)
