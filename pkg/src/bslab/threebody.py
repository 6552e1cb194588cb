"""Correlated-Gaussian variational solver for

    H(Theta, Lambda) = -Lap_x - Lap_y - V12 - Theta V13 - Lambda V23

in the mass-scaled Jacobi frame of pair (1, 2). Trial functions are the
L = 0 forms exp(-1/2 xi^T (A (x) I_3) xi) with xi = (x, y) and A a 2x2 SPD
matrix. With C = A_m + A_n,

    S_mn = (2 pi)^3 / det(C)^{3/2}
    T_mn = 3 tr(A_m C^{-1} A_n) S_mn

and a pair separation r = c^T xi is Gaussian distributed with variance
c^T C^{-1} c per Cartesian component, which reduces every potential
element to a one-dimensional radial average.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from . import numerics, twobody
from .errors import (
    AccuracyError,
    ConvergenceError,
    DomainError,
    InputError,
)
from .model import MassConfig, PairPotential, arrangement_rotation, pair_coefficients

PAIRS = ((1, 2), (1, 3), (2, 3))
TOL_BIND = 1e-6


# --- basis -----------------------------------------------------------------------

def ladder(lo, hi, n):
    """Geometric ladder of ``n`` widths from ``lo`` to ``hi``."""
    if n == 1:
        return np.array([math.sqrt(lo * hi)])
    return np.geomspace(lo, hi, n)


@dataclass(frozen=True)
class BasisRecipe:
    """Widths (in working length units) for each Jacobi arrangement.

    For every arrangement (k, l) the basis contains diag(1/b^2, 1/beta^2)
    written in that arrangement's Jacobi pair and rotated into the (1, 2)
    frame, for every b in the pair ladder and beta in the spectator ladder.
    With ``max_ratio`` set, combinations with b > max_ratio * beta are
    skipped: a wide pair around a tight spectator is already covered by the
    other arrangements, and dropping it roughly halves the basis.
    """

    pair_min: float = 0.3
    pair_max: float = 3000.0
    pair_count: int = 15
    spectator_min: float = 0.3
    spectator_max: float = 3000.0
    spectator_count: int = 15
    arrangements: tuple = PAIRS
    max_ratio: float | None = 1.0

    def widths(self):
        return (
            ladder(self.pair_min, self.pair_max, self.pair_count),
            ladder(self.spectator_min, self.spectator_max, self.spectator_count),
        )

    def doubled(self):
        """Recipe with roughly twice as many functions, sharing the same span."""
        return BasisRecipe(
            self.pair_min, self.pair_max, int(round(self.pair_count * math.sqrt(2))),
            self.spectator_min, self.spectator_max, int(round(self.spectator_count * math.sqrt(2))),
            self.arrangements, self.max_ratio,
        )

    def key(self, masses):
        payload = json.dumps({"recipe": asdict(self), "masses": asdict(masses)}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class GaussianBasis:
    forms: np.ndarray
    recipe: BasisRecipe | None = None

    def __post_init__(self):
        A = np.asarray(self.forms, dtype=float)
        if A.ndim != 3 or A.shape[1:] != (2, 2) or len(A) < 1:
            raise InputError("forms must have shape (n, 2, 2) with n >= 1")
        if not np.allclose(A, np.swapaxes(A, 1, 2), rtol=1e-13, atol=0):
            raise InputError("every form must be symmetric")
        if np.any(_eig2(A)[0] <= 0):
            raise InputError("every form must be positive definite")

    def __len__(self):
        return len(self.forms)

    def subset(self, index):
        return GaussianBasis(self.forms[np.asarray(index)], self.recipe)

    def permuted(self, perm):
        return GaussianBasis(self.forms[np.asarray(perm)], self.recipe)


def build_basis(recipe, masses):
    b_pair, b_spec = recipe.widths()
    forms = []
    for pair in recipe.arrangements:
        T = arrangement_rotation(masses, pair)
        for b in b_pair:
            for beta in b_spec:
                if recipe.max_ratio is not None and b > recipe.max_ratio * beta:
                    continue
                D = np.diag([1.0 / b ** 2, 1.0 / beta ** 2])
                A = T.T @ D @ T
                forms.append(0.5 * (A + A.T))
    return GaussianBasis(np.array(forms), recipe)


def cached_basis(recipe, masses, cache_dir=None):
    """:func:`build_basis`, stored as ``basis-<hash>.npz`` under ``cache_dir``."""
    if cache_dir is None:
        return build_basis(recipe, masses)
    path = Path(cache_dir) / f"basis-{recipe.key(masses)}.npz"
    if path.exists():
        with np.load(path) as data:
            return GaussianBasis(data["forms"], recipe)
    basis = build_basis(recipe, masses)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp.npz")
    np.savez(tmp, forms=basis.forms)
    tmp.replace(path)
    return basis


# --- 2x2 helpers ---------------------------------------------------------------------

def _det2(C):
    return C[..., 0, 0] * C[..., 1, 1] - C[..., 0, 1] * C[..., 1, 0]


def _inv2(C, det=None):
    if det is None:
        det = _det2(C)
    inv = np.empty_like(C)
    inv[..., 0, 0] = C[..., 1, 1]
    inv[..., 1, 1] = C[..., 0, 0]
    inv[..., 0, 1] = -C[..., 0, 1]
    inv[..., 1, 0] = -C[..., 1, 0]
    return inv / det[..., None, None]


def _eig2(C):
    """Eigenvalues (lo, hi) of symmetric 2x2 forms, stable for wide spreads."""
    a, b, c = C[..., 0, 0], C[..., 0, 1], C[..., 1, 1]
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    hi = mean + rad
    det = a * c - b * b
    lo = np.where(hi > 0, det / np.where(hi > 0, hi, 1.0), mean - rad)
    return lo, hi


# --- matrix elements ---------------------------------------------------------------------

_MAXWELL = numerics.gauss_legendre(96, 0.0, 14.0)


def gaussian_average(p, variance):
    """<V(|r|)> for r ~ N(0, variance I_3), vectorised over ``variance``."""
    var = np.asarray(variance, dtype=float)
    R = p.range_
    if p.shape == "gaussian":
        return p.strength * (1.0 + 2.0 * var / R ** 2) ** -1.5
    if p.shape == "square-well":
        return p.strength * special.gammainc(1.5, R ** 2 / (2.0 * var))
    # exponential: Maxwell-distributed |r| = sigma t
    t, w = _MAXWELL.nodes, _MAXWELL.weights
    sigma = np.sqrt(var)[..., None]
    dens = math.sqrt(2.0 / math.pi) * t ** 2 * np.exp(-0.5 * t ** 2)
    return p.strength * np.sum(w * dens * np.exp(-sigma * t / R), axis=-1)


@dataclass(frozen=True)
class MatrixElements:
    S: np.ndarray
    T: np.ndarray
    V: dict

    def hamiltonian(self, theta, lam):
        H = self.T - self.V[(1, 2)] - theta * self.V[(1, 3)] - lam * self.V[(2, 3)]
        return 0.5 * (H + H.T)


def matrix_elements(basis, masses, potentials):
    """Overlap, kinetic and per-pair potential matrices (potentials enter with + sign)."""
    A = basis.forms
    C = A[:, None] + A[None, :]
    det = _det2(C)
    if np.any(det <= 0) or np.any(C[..., 0, 0] <= 0):
        raise InputError("A_m + A_n is not positive definite; the basis is corrupted")
    Ci = _inv2(C, det)
    S = (2.0 * math.pi) ** 3 / det ** 1.5
    ACA = np.einsum("mij,mnjk,nkl->mnil", A, Ci, A)
    T = 3.0 * (ACA[..., 0, 0] + ACA[..., 1, 1]) * S
    frame = pair_coefficients(masses)
    V = {}
    for pair in PAIRS:
        p = potentials.get(pair)
        if p is None or p.strength == 0:
            V[pair] = np.zeros_like(S)
            continue
        c = frame.vector(*pair)
        var = np.einsum("i,mnij,j->mn", c, Ci, c)
        V[pair] = gaussian_average(p, var) * S
    sym = lambda X: 0.5 * (X + X.T)
    return MatrixElements(sym(S), sym(T), {k: sym(v) for k, v in V.items()})


def hamiltonian_elements(basis, masses, potentials, theta, lam):
    """(H, S) for H(Theta, Lambda); ``potentials`` maps pair tuples to PairPotential."""
    me = matrix_elements(basis, masses, potentials)
    return me.hamiltonian(theta, lam), me.S


# --- ground state -------------------------------------------------------------------------

@dataclass(frozen=True)
class VariationalResult:
    energy: float
    coefficients: np.ndarray
    condition: float
    size: int
    rank: int


def ground_state(H, S, prune=True, cutoff=numerics.OVERLAP_CUTOFF):
    """Lowest Rayleigh-Ritz value; an upper bound to inf spec(H)."""
    sol = numerics.gen_sym_eig_min(H, S, prune=prune, cutoff=cutoff)
    c = sol.eigenvectors[:, 0]
    if not np.all(np.isfinite(c)):
        raise ConvergenceError("non-finite ground-state coefficients")
    return VariationalResult(float(sol.eigenvalues[0]), c, float(sol.condition), len(c), int(sol.rank))


# --- spreading ------------------------------------------------------------------------------

def _theta_rule(per_panel, panels):
    # panels crowd both ends of [0, pi/2] where strongly anisotropic forms concentrate
    g = np.geomspace(1e-7, 0.5, panels)
    breaks = np.unique(np.concatenate([[0.0], g, 1.0 - g, [1.0]])) * (0.5 * math.pi)
    return numerics.composite_gauss_legendre(breaks, per_panel)


_THETA_FINE = _theta_rule(8, 32)
_THETA_COARSE = _theta_rule(6, 24)


def ball_integrals(B, R, rule=_THETA_FINE):
    """int_{|xi| < R} exp(-1/2 xi^T (B (x) I_3) xi) d^6 xi for an array of 2x2 forms.

    After rotating B to diagonal form (beta_1, beta_2), split xi into
    |x| = rho cos(t), |y| = rho sin(t); the rho integral is a regularised
    lower incomplete gamma function of order 3 and t is integrated
    numerically.
    """
    b1, b2 = _eig2(np.asarray(B, dtype=float))
    t, w = rule.nodes, rule.weights
    ct2, st2 = np.cos(t) ** 2, np.sin(t) ** 2
    shape = b1.shape
    b1, b2 = b1.ravel(), b2.ravel()
    out = np.empty(b1.shape)
    step = max(1, 2_000_000 // len(t))
    for lo in range(0, len(b1), step):
        sl = slice(lo, lo + step)
        x = 0.5 * R * R * (b1[sl, None] * ct2 + b2[sl, None] * st2)
        small = x < 1e-3
        safe = np.where(small, 1.0, x)
        # P(3, x) / x^3 from its series where the library value loses relative accuracy
        ratio = np.where(small, 1.0 / 6.0 - x / 8.0 + x * x / 20.0, special.gammainc(3.0, safe) / safe ** 3)
        out[sl] = (ratio * (w * ct2 * st2)).sum(axis=-1)
    return 128.0 * math.pi ** 2 * (0.5 * R * R) ** 3 * out.reshape(shape)


@dataclass(frozen=True)
class Spreading:
    inside: dict
    xi2: float


@dataclass(frozen=True)
class SpreadingKernel:
    """Basis-pair matrices whose quadratic forms give the spreading metrics.

    Ball integrals depend only on the basis and the radius, so a scan builds
    them once and each point costs a few matrix-vector products. ``coarse``
    holds the same ball matrices on a cheaper angular rule for the
    convergence check, or is None when the check is off.
    """

    S: np.ndarray
    xi2: np.ndarray
    inside: dict
    coarse: dict | None = None


def _pair_matrix(n, iu, values):
    M = np.zeros((n, n))
    M[iu] = values
    return M + np.triu(M, 1).T


def spreading_kernel(basis, R, check=True):
    radii = np.atleast_1d(np.asarray(R, dtype=float))
    if np.any(radii <= 0):
        raise DomainError("ball radius must be positive")
    A = basis.forms
    n = len(A)
    iu = np.triu_indices(n)
    B = A[iu[0]] + A[iu[1]]
    det = _det2(B)
    S = (2.0 * math.pi) ** 3 / det ** 1.5
    Bi = _inv2(B, det)
    xi2 = 3.0 * (Bi[:, 0, 0] + Bi[:, 1, 1]) * S
    inside = {float(r): _pair_matrix(n, iu, ball_integrals(B, r)) for r in radii}
    coarse = None
    if check:
        coarse = {float(r): _pair_matrix(n, iu, ball_integrals(B, r, _THETA_COARSE)) for r in radii}
    return SpreadingKernel(_pair_matrix(n, iu, S), _pair_matrix(n, iu, xi2), inside, coarse)


def spreading_metric(vr, basis, R, check=True, kernel=None):
    """Probability inside the 6D ball |xi| < R and the closed-form <|xi|^2>.

    ``R`` may be a scalar or a sequence; the result maps each radius to I_R.
    Pass a prebuilt :class:`SpreadingKernel` to reuse it across a scan.
    """
    radii = [float(r) for r in np.atleast_1d(np.asarray(R, dtype=float))]
    if (kernel is None or any(r not in kernel.inside for r in radii)
            or (check and kernel.coarse is None)):
        kernel = spreading_kernel(basis, radii, check)
    c = vr.coefficients
    norm = float(c @ kernel.S @ c)
    xi2 = float(c @ kernel.xi2 @ c) / norm
    inside = {}
    for r in radii:
        val = float(c @ kernel.inside[r] @ c) / norm
        if check:
            diff = abs(float(c @ kernel.coarse[r] @ c) / norm - val)
            if diff > 1e-8:
                raise AccuracyError(f"ball integral not converged at R={r:g}: {diff:.1e}")
        inside[r] = val
    return Spreading(inside, xi2)


# --- two-body sub-thresholds and scans ---------------------------------------------------

def two_body_subthresholds(masses, potentials, grid_n=twobody.DEFAULT_N, oracle=False):
    """Critical Theta (pair 1,3) and Lambda (pair 2,3) multipliers.

    Pair (k, l) in its own Jacobi coordinate sees -Lap - g V(alpha_kl x)
    with alpha_kl = 1/sqrt(2 mu_kl), so its threshold is that of the
    rescaled potential.
    """
    out = []
    for pair in ((1, 3), (2, 3)):
        p = potentials[pair].with_coupling(1.0).scaled(masses.pair_alpha(*pair))
        grid = twobody.radial_grid(p, grid_n)
        out.append(twobody.coupling_threshold(p, grid, oracle=oracle).lambda_cr)
    return tuple(out)


def pin_pair12(masses, potentials, grid_n=twobody.DEFAULT_N):
    """Copy of ``potentials`` with V12 at its zero-energy threshold."""
    p = potentials[(1, 2)].with_coupling(1.0)
    scaled = p.scaled(masses.alpha)
    lam = twobody.coupling_threshold(scaled, twobody.radial_grid(scaled, grid_n), oracle=False).lambda_cr
    out = dict(potentials)
    out[(1, 2)] = p.with_coupling(lam)
    return out


@dataclass(frozen=True)
class ScanRecord:
    theta: float
    lam: float
    energy: float
    inside: dict
    xi2: float
    basis_n: int
    rank: int
    cond_s: float


def _solve_point(me, theta, lam, basis, radii, kernel=None):
    vr = ground_state(me.hamiltonian(theta, lam), me.S)
    if radii is None:
        sp = Spreading({}, float("nan"))
    else:
        sp = spreading_metric(vr, basis, radii, kernel=kernel)
    return ScanRecord(theta, lam, vr.energy, sp.inside, sp.xi2, len(basis), vr.rank, vr.condition)


def energy_at(me, theta, lam):
    return ground_state(me.hamiltonian(theta, lam), me.S).energy


def find_onset(me, f_energy, lo, hi, tol_bind=TOL_BIND, rtol=1e-6):
    """Bisection for the coupling where E_gr crosses -tol_bind, E(lo) above and E(hi) below."""
    g = lambda t: f_energy(t) + tol_bind
    if g(lo) < 0 or g(hi) >= 0:
        return None
    return numerics.bisect_root(g, lo, hi, tol=rtol * hi)


def empirical_epsilon(me, theta_cr, lam_cr, tol_bind=TOL_BIND, fraction=0.5, samples=21):
    """Largest diagonal coupling t = Theta/Theta_cr = Lambda/Lambda_cr that stays unbound,
    scaled by ``fraction`` for safety. Returns (epsilon, onset) in Theta units.
    """
    ts = np.linspace(0.0, 1.0, samples)
    f = lambda t: energy_at(me, t * theta_cr, t * lam_cr)
    prev = 0.0
    for t in ts[1:]:
        if f(t) < -tol_bind:
            onset = find_onset(me, f, prev, t, tol_bind)
            return fraction * onset * theta_cr, onset * theta_cr
        prev = t
    return fraction * theta_cr, None


@dataclass(frozen=True)
class ThetaScan:
    records: list
    theta0: float | None
    epsilon: float
    lam: float
    theta_cr: float


def theta_scan(theta_grid, lam, basis, masses, potentials, radii=(5.0,), tol_bind=TOL_BIND,
               monotone_tol=1e-9, workers=None, me=None):
    """E_gr and spreading diagnostics along ``theta_grid`` at fixed Lambda.

    Theta_0, the bisection-refined point where E_gr first drops below
    -tol_bind, is located between the last unbound and first bound grid
    points. A rise of E_gr with Theta beyond ``monotone_tol`` signals an
    unconverged basis and raises :class:`ConvergenceError`.
    """
    grid = np.asarray(theta_grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise DomainError("theta grid must be strictly increasing")
    if me is None:
        me = matrix_elements(basis, masses, potentials)

    kernel = spreading_kernel(basis, radii) if radii is not None else None
    task = lambda th: _solve_point(me, th, lam, basis, radii, kernel)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(task, grid))
    else:
        records = [task(th) for th in grid]

    energies = np.array([r.energy for r in records])
    scale = max(1.0, np.abs(energies).max())
    if np.any(np.diff(energies) > monotone_tol * scale):
        raise ConvergenceError("E_gr increases with Theta; the basis is too small")
    theta0 = None
    bound = np.nonzero(energies < -tol_bind)[0]
    if len(bound) and bound[0] > 0:
        i = bound[0]
        theta0 = find_onset(me, lambda th: energy_at(me, th, lam), grid[i - 1], grid[i], tol_bind)
    return ThetaScan(records, theta0, float(grid[0]), lam, float(grid[-1]))
