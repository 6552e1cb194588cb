"""Masses, Jacobi frames and pair potentials.

Units: hbar = 1 and mass-scaled Jacobi coordinates

    x = sqrt(2 mu_12) (r_2 - r_1)
    y = sqrt(2 M_12) (r_3 - (m_1 r_1 + m_2 r_2) / (m_1 + m_2))

so that the kinetic energy with the centre of mass removed is -Lap_x - Lap_y.
Every pair separation is a linear combination r_k - r_l = c_x x + c_y y and
all mass dependence ends up in the arguments of the pair potentials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError

SHAPES = ("gaussian", "exponential", "square-well")

_PAIRS = ((1, 2), (1, 3), (2, 3))


def _spectator(i, j):
    (l,) = {1, 2, 3} - {i, j}
    return l


@dataclass(frozen=True)
class MassConfig:
    m1: float
    m2: float
    m3: float

    def __post_init__(self):
        for name in ("m1", "m2", "m3"):
            m = getattr(self, name)
            if not (math.isfinite(m) and m > 0):
                raise DomainError(f"mass {name}={m!r} must be positive and finite")

    @property
    def masses(self):
        return (self.m1, self.m2, self.m3)

    def mass(self, i):
        return self.masses[i - 1]

    def mu(self, i, j):
        """Reduced mass of pair (i, j)."""
        mi, mj = self.mass(i), self.mass(j)
        return mi * mj / (mi + mj)

    def big_m(self, i, j):
        """Reduced mass of pair (i, j) against the spectator."""
        mi, mj = self.mass(i), self.mass(j)
        ml = self.mass(_spectator(i, j))
        return (mi + mj) * ml / (mi + mj + ml)

    @property
    def mu12(self):
        return self.mu(1, 2)

    @property
    def big_m12(self):
        return self.big_m(1, 2)

    @property
    def alpha(self):
        """hbar / sqrt(2 mu_12) with hbar = 1."""
        return 1.0 / math.sqrt(2.0 * self.mu12)

    def pair_alpha(self, i, j):
        return 1.0 / math.sqrt(2.0 * self.mu(i, j))


def reduced_masses(m1, m2, m3):
    """Validate three masses and return the populated :class:`MassConfig`."""
    return MassConfig(float(m1), float(m2), float(m3))


@dataclass(frozen=True)
class PairPotential:
    """Nonnegative radial potential ``coupling * depth * shape(r / range_)``.

    The falloff witnesses ``b1``, ``b2`` certify ``V(r) <= b1 exp(-b2 r)``.
    The square well is ``depth`` on ``r < range_`` and zero from ``range_`` on.
    """

    shape: str
    depth: float
    range_: float = 1.0
    coupling: float = 1.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise DomainError(f"unknown potential shape {self.shape!r}; expected one of {SHAPES}")
        if not (math.isfinite(self.depth) and self.depth >= 0):
            raise DomainError(f"depth must be >= 0, got {self.depth!r}")
        if not (math.isfinite(self.range_) and self.range_ > 0):
            raise DomainError(f"range must be > 0, got {self.range_!r}")
        if not (math.isfinite(self.coupling) and self.coupling >= 0):
            raise DomainError(f"coupling must be >= 0, got {self.coupling!r}")

    @property
    def strength(self):
        return self.coupling * self.depth

    @property
    def b2(self):
        return 1.0 / self.range_

    @property
    def b1(self):
        if self.shape == "gaussian":
            # sup_r exp(r/R - r^2/R^2) is attained at r = R/2
            return self.strength * math.exp(0.25)
        if self.shape == "exponential":
            return self.strength
        return self.strength * math.e

    @property
    def support(self):
        """Radius beyond which V vanishes identically, or None."""
        return self.range_ if self.shape == "square-well" else None

    @property
    def default_r_max(self):
        if self.shape == "square-well":
            return self.range_
        if self.shape == "gaussian":
            return 20.0 / self.b2
        return 30.0 / self.b2

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        s = r / self.range_
        if self.shape == "gaussian":
            v = np.exp(-s * s)
        elif self.shape == "exponential":
            v = np.exp(-s)
        else:
            v = np.where(s < 1.0, 1.0, 0.0)
        return self.strength * v

    def with_coupling(self, coupling):
        return replace(self, coupling=float(coupling))

    def scaled(self, alpha):
        """The potential r -> V(alpha r)."""
        if not alpha > 0:
            raise DomainError("scale factor must be positive")
        return replace(self, range_=self.range_ / alpha)

    def falloff_violation(self, n=10_000, span=50.0):
        """Largest V(r) - b1 exp(-b2 r) over a dense grid on [0, span*R]."""
        r = np.linspace(0.0, span * self.range_, n)
        return float(np.max(self(r) - self.b1 * np.exp(-self.b2 * r)))


def evaluate_potential(p, r):
    """V(r) for scalar or array ``r``; negative radii are rejected."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("radius must be finite and nonnegative")
    out = p(arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class JacobiFrame:
    """Pair separations in the (x, y) frame built on pair (1, 2).

    ``coefficients[(k, l)] = (c_x, c_y)`` with r_k - r_l = c_x x + c_y y.
    """

    masses: MassConfig
    coefficients: dict = field(compare=False)

    def coefficient(self, k, l):
        if (k, l) in self.coefficients:
            return self.coefficients[(k, l)]
        cx, cy = self.coefficients[(l, k)]
        return (-cx, -cy)

    def vector(self, k, l):
        return np.array(self.coefficient(k, l))


def pair_coefficients(masses):
    """Build the :class:`JacobiFrame` for ``masses``."""
    m1, m2, _ = masses.masses
    sx = math.sqrt(2.0 * masses.mu12)
    sy = math.sqrt(2.0 * masses.big_m12)
    f1 = m1 / (m1 + m2)
    f2 = m2 / (m1 + m2)
    coeffs = {
        (1, 2): (-1.0 / sx, 0.0),
        (2, 1): (1.0 / sx, 0.0),
        # r_3 - r_1 = y/sy + f2 (r_2 - r_1)
        (1, 3): (-f2 / sx, -1.0 / sy),
        # r_3 - r_2 = y/sy - f1 (r_2 - r_1)
        (2, 3): (f1 / sx, -1.0 / sy),
    }
    return JacobiFrame(masses, coeffs)


def jacobi_matrix(masses, pair=(1, 2)):
    """2x3 matrix sending particle positions (one Cartesian component) to (x, y).

    ``pair=(i, j)`` gives the arrangement whose x is sqrt(2 mu_ij)(r_j - r_i).
    """
    i, j = pair
    l = _spectator(i, j)
    mi, mj = masses.mass(i), masses.mass(j)
    J = np.zeros((2, 3))
    sx = math.sqrt(2.0 * masses.mu(i, j))
    sy = math.sqrt(2.0 * masses.big_m(i, j))
    J[0, j - 1] += sx
    J[0, i - 1] -= sx
    J[1, l - 1] += sy
    J[1, i - 1] -= sy * mi / (mi + mj)
    J[1, j - 1] -= sy * mj / (mi + mj)
    return J


def to_jacobi(masses, positions):
    """Map positions of shape (..., 3 particles, 3) to (x, y) of shape (..., 2, 3)."""
    return np.einsum("ap,...pc->...ac", jacobi_matrix(masses), np.asarray(positions, dtype=float))


def arrangement_rotation(masses, pair):
    """Orthogonal 2x2 T with (x_pair, y_pair) = T (x, y).

    Mass-scaled Jacobi sets are related by kinematic rotations, so T is
    orthogonal; this is what makes basis functions written in another
    arrangement appear as correlated forms in the (1, 2) frame.
    """
    J0 = jacobi_matrix(masses, (1, 2))
    J1 = jacobi_matrix(masses, pair)
    return J1 @ np.linalg.pinv(J0)
