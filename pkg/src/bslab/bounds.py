"""Numerical checks of three auxiliary estimates.

* the logarithmic divergence of
      J(z) = int_{|p| <= eps0} |g^(p)|^2 / (p^2 + z^2)^{3/2} d^3p
  as z -> 0 for nonnegative radial g, together with its explicit lower bound;
* the heat-kernel bound on the six-dimensional free resolvent kernel
  G_0(xi, 1) of (-Lap + 1)^{-1};
* the elementary inequality
      exp(-delta |x - x'|) / |x - x'| >= exp(-2 delta |x|) / (2 |x|)
  for |x| >= R0 >= |x'|.

The Fourier convention is g^(p) = int exp(i p.y) g(y) d^3y, so g^(0) = ||g||_1
for nonnegative g.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import numerics
from .errors import AccuracyError, DomainError

PROFILE_KINDS = ("gaussian", "exponential", "box")


@dataclass(frozen=True)
class RadialProfile:
    """Nonnegative radial test function g(|y|) = amplitude * f(|y| / width)."""

    kind: str
    amplitude: float = 1.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise DomainError(f"unknown profile {self.kind!r}; expected one of {PROFILE_KINDS}")
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise DomainError("profile amplitude must be positive (g must not vanish)")
        if not (math.isfinite(self.width) and self.width > 0):
            raise DomainError("profile width must be positive")

    def __call__(self, r):
        s = np.asarray(r, dtype=float) / self.width
        if self.kind == "gaussian":
            f = np.exp(-s * s)
        elif self.kind == "exponential":
            f = np.exp(-s)
        else:
            f = np.where(s < 1.0, 1.0, 0.0)
        return self.amplitude * f

    @property
    def cutoff(self):
        """Radius past which g is negligible (or zero)."""
        return self.width * {"gaussian": 9.0, "exponential": 50.0, "box": 1.0}[self.kind]

    def l1_norm(self):
        """||g||_1 in closed form."""
        w3 = self.width ** 3
        if self.kind == "gaussian":
            return self.amplitude * math.pi ** 1.5 * w3
        if self.kind == "exponential":
            return self.amplitude * 8.0 * math.pi * w3
        return self.amplitude * 4.0 * math.pi * w3 / 3.0

    def fourier_exact(self, p):
        """Closed-form transform; used only as a self-test of the quadrature path."""
        p = np.asarray(p, dtype=float)
        a, w = self.amplitude, self.width
        if self.kind == "gaussian":
            return a * math.pi ** 1.5 * w ** 3 * np.exp(-0.25 * (p * w) ** 2)
        if self.kind == "exponential":
            return a * 8.0 * math.pi * w ** 3 / (1.0 + (p * w) ** 2) ** 2
        x = p * w
        safe = np.where(x == 0, 1.0, x)
        val = 4.0 * math.pi * w ** 3 * (np.sin(safe) - safe * np.cos(safe)) / safe ** 3
        return a * np.where(x == 0, 4.0 * math.pi * w ** 3 / 3.0, val)


def _radial_rule(profile, panels=24, per_panel=16):
    return numerics.composite_gauss_legendre(np.linspace(0.0, profile.cutoff, panels + 1), per_panel)


def fourier_radial(profile, p, rule=None):
    """g^(p) = (4 pi / p) int r sin(p r) g(r) dr by Gauss-Legendre quadrature."""
    rule = rule or _radial_rule(profile)
    r, w = rule.nodes, rule.weights
    p = np.atleast_1d(np.asarray(p, dtype=float))
    # r^2 sinc(p r) keeps the p -> 0 limit regular
    kern = r * r * np.sinc(np.outer(p, r) / math.pi)
    return 4.0 * math.pi * kern @ (w * profile(r))


def quarter_tail_radius(profile):
    """Smallest r with int_{|y| > r} g = ||g||_1 / 4."""
    target = 0.75 * _partial_mass(profile, profile.cutoff)
    # first crossing on a scan, then refine inside that cell
    xs = np.linspace(0.0, profile.cutoff, 401)
    ms = np.array([_partial_mass(profile, x) for x in xs])
    i = int(np.argmax(ms >= target))
    if i == 0:
        return 0.0
    return numerics.brent_root(lambda x: _partial_mass(profile, x) - target, xs[i - 1], xs[i], tol=1e-12)


def _partial_mass(profile, x):
    if x <= 0:
        return 0.0
    breaks = np.linspace(0.0, min(x, profile.cutoff), 9)
    rule = numerics.composite_gauss_legendre(breaks, 16)
    r = rule.nodes
    return float(rule.weights @ (4.0 * math.pi * r * r * profile(r)))


def _j_rule(z, eps0, per_panel):
    # geometric panels resolve the p ~ z scale and the logarithmic range above it
    lo = min(1e-3 * z, 0.5 * eps0)
    breaks = np.concatenate([[0.0], np.geomspace(lo, eps0, max(8, int(4 * math.log10(eps0 / lo)) + 1))])
    return numerics.composite_gauss_legendre(breaks, per_panel)


def lemma3_integral(profile, eps0, z, tol=1e-8):
    """J(z) over the ball |p| <= eps0, by radial quadrature in p."""
    if not (math.isfinite(z) and z > 0):
        raise DomainError(f"z must be positive, got {z!r}")
    if not (math.isfinite(eps0) and eps0 > 0):
        raise DomainError(f"eps0 must be positive, got {eps0!r}")
    vals = []
    for per_panel in (12, 16):
        rule = _j_rule(z, eps0, per_panel)
        p = rule.nodes
        g = fourier_radial(profile, p)
        vals.append(4.0 * math.pi * float(rule.weights @ (p * p * g * g / (p * p + z * z) ** 1.5)))
    if abs(vals[1] - vals[0]) > tol * abs(vals[1]):
        raise AccuracyError(f"J quadrature not converged at z={z:g}: {abs(vals[1] - vals[0]):.1e}")
    return vals[1]


def ball_log_integral(eps, z):
    """int_{|p| < eps} (p^2 + z^2)^{-3/2} d^3p in closed form."""
    return 4.0 * math.pi * (math.asinh(eps / z) - eps / math.hypot(eps, z))


def lemma3_lower_bound(profile, eps0, z, r=None):
    """||g||_1^2 / 64 times the bare integral over |p| < min(eps0, pi / (3 r))."""
    if r is None:
        r = quarter_tail_radius(profile)
    eps = eps0 if r == 0 else min(eps0, math.pi / (3.0 * r))
    return profile.l1_norm() ** 2 / 64.0 * ball_log_integral(eps, z)


@dataclass(frozen=True)
class DivergenceReport:
    z: np.ndarray
    J: np.ndarray
    lower_bound: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    expected_slope: float

    @property
    def slope_error(self):
        return abs(self.slope - self.expected_slope) / self.expected_slope

    @property
    def bound_margin(self):
        """Smallest J / lower_bound over the samples; >= 1 means the bound holds."""
        return float(np.min(self.J / self.lower_bound))

    @property
    def increasing(self):
        """J strictly increases as z decreases."""
        order = np.argsort(self.z)[::-1]
        return bool(np.all(np.diff(self.J[order]) > 0))

    def rows(self):
        return [(float(z), float(j), float(lb)) for z, j, lb in zip(self.z, self.J, self.lower_bound)]


def divergence_report(profile, eps0=1.0, z_samples=None, workers=None):
    """J over ``z_samples`` (default 1e-1 .. 1e-5) with a fit of J against ln(1/z)."""
    z = np.asarray(z_samples if z_samples is not None else np.geomspace(1e-1, 1e-5, 9), dtype=float)
    task = lambda zz: lemma3_integral(profile, eps0, float(zz))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            J = np.array(list(pool.map(task, z)))
    else:
        J = np.array([task(zz) for zz in z])
    r = quarter_tail_radius(profile)
    lb = np.array([lemma3_lower_bound(profile, eps0, float(zz), r) for zz in z])
    x = np.log(1.0 / z)
    fit = np.polyfit(x, J, 1)
    resid = J - np.polyval(fit, x)
    r2 = 1.0 - float(resid @ resid) / float(np.sum((J - J.mean()) ** 2))
    g0 = float(fourier_radial(profile, 0.0)[0])
    return DivergenceReport(z, J, lb, float(fit[0]), float(fit[1]), r2, 4.0 * math.pi * g0 * g0)


# --- six-dimensional resolvent kernel --------------------------------------------------

def _log_t_integral(log_integrand, peak, epsrel):
    """int_0^inf exp(log_integrand(t)) dt via t = e^u, split at the integrand peak."""
    f = lambda u: math.exp(log_integrand(math.exp(u)) + u)
    u0 = math.log(peak)
    total = 0.0
    for a, b in ((u0 - 60.0, u0), (u0, u0 + 60.0)):
        val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=epsrel, limit=200)
        total += val
    return total


def heat_identity(epsrel=1e-12):
    """int_0^inf t^-3 exp(-3 / (16 t)) dt, which equals 256/9."""
    return _log_t_integral(lambda t: -3.0 * math.log(t) - 3.0 / (16.0 * t), 3.0 / 32.0, epsrel)


def green6d(xi, epsrel=1e-12):
    """G_0(xi, 1) for -Lap + 1 in six dimensions from the heat-kernel form

        (4 pi)^3 |xi|^4 exp(|xi|/2) G_0 = int t^-3 exp(|xi|/2 - t |xi|^2 - 1/(4t)) dt.
    """
    if not (math.isfinite(xi) and xi > 0):
        raise DomainError(f"|xi| must be positive, got {xi!r}")
    h = 0.5 * xi
    log_f = lambda t: -3.0 * math.log(t) + h - t * xi * xi - 0.25 / t
    # maximum of the log integrand in u = ln t
    peak = (-2.0 + math.sqrt(4.0 + xi * xi)) / (2.0 * xi * xi)
    inner = _log_t_integral(log_f, peak, epsrel)
    return inner / ((4.0 * math.pi) ** 3 * xi ** 4 * math.exp(h))


def green6d_exact(xi):
    """Closed form (2 pi)^-3 |xi|^-2 K_2(|xi|) used as an independent oracle."""
    return special.kv(2, xi) / ((2.0 * math.pi) ** 3 * xi * xi)


def green_bound(xi, constant=4.0 / (9.0 * math.pi)):
    """constant * |xi|^-4 exp(-|xi|/2); pass 4/(9 pi^3) for the sharp heat-kernel constant."""
    return constant * np.asarray(xi, dtype=float) ** -4 * np.exp(-0.5 * np.asarray(xi, dtype=float))


SHARP_GREEN_CONSTANT = 4.0 / (9.0 * math.pi ** 3)


@dataclass(frozen=True)
class GreenReport:
    xi: np.ndarray
    g0: np.ndarray
    bound: np.ndarray

    @property
    def violations(self):
        return int(np.sum(self.g0 > self.bound))

    def rows(self):
        return [(float(x), float(g), float(b)) for x, g, b in zip(self.xi, self.g0, self.bound)]


def green_report(xi_samples=None, constant=4.0 / (9.0 * math.pi), workers=None):
    xi = np.asarray(xi_samples if xi_samples is not None else np.geomspace(0.1, 20.0, 200), dtype=float)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            g = np.array(list(pool.map(green6d, xi)))
    else:
        g = np.array([green6d(float(x)) for x in xi])
    return GreenReport(xi, g, green_bound(xi, constant))


# --- two-point inequality -------------------------------------------------------------

def zabyv_ratio(x, xp, delta):
    """LHS / RHS of exp(-delta|x-x'|)/|x-x'| >= exp(-2 delta|x|)/(2|x|), vectorised over rows."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xp = np.atleast_2d(np.asarray(xp, dtype=float))
    d = np.linalg.norm(x - xp, axis=-1)
    n = np.linalg.norm(x, axis=-1)
    # far points overflow to +inf, which is still a correct "holds"
    with np.errstate(over="ignore"):
        return np.exp(np.log(2.0 * n / d) + delta * (2.0 * n - d))


def _directions(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def zabyv_check(R0, delta, samples=100_000, seed=0, spread=100.0):
    """Monte Carlo check with |x| log-uniform on [R0, spread R0] and x' uniform in the R0 ball.

    Returns (all_hold, minimum ratio).
    """
    if not (R0 > 0 and delta > 0):
        raise DomainError("R0 and delta must be positive")
    samples = int(samples)
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    rx = R0 * np.exp(rng.uniform(0.0, math.log(spread), samples))
    rp = R0 * rng.uniform(0.0, 1.0, samples) ** (1.0 / 3.0)
    x = _directions(rng, samples) * rx[:, None]
    xp = _directions(rng, samples) * rp[:, None]
    ratio = zabyv_ratio(x, xp, delta)
    worst = float(ratio.min())
    return worst >= 1.0, worst
