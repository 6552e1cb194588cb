import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bslab.errors import DomainError
from bslab.model import (
    SHAPES,
    PairPotential,
    arrangement_rotation,
    evaluate_potential,
    jacobi_matrix,
    pair_coefficients,
    reduced_masses,
    to_jacobi,
)

masses_st = st.floats(0.05, 50.0)


def test_equal_masses():
    m = reduced_masses(1, 1, 1)
    assert m.mu12 == pytest.approx(0.5, abs=1e-15)
    assert m.big_m12 == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert m.alpha == pytest.approx(1.0, abs=1e-15)


def test_heavy_spectator_limit():
    m = reduced_masses(1, 1, 1e6)
    assert m.big_m12 == pytest.approx(2.0, rel=1e-5)


def test_mu23_arithmetic():
    assert reduced_masses(2, 3, 4).mu(2, 3) == pytest.approx(12.0 / 7.0, rel=1e-15)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_bad_mass(bad):
    with pytest.raises(DomainError):
        reduced_masses(1.0, bad, 1.0)


@given(masses_st, masses_st, masses_st)
def test_reduced_mass_symmetry(m1, m2, m3):
    m = reduced_masses(m1, m2, m3)
    assert m.mu(1, 2) == pytest.approx(m.mu(2, 1), rel=1e-15)
    assert m.mu(1, 2) == pytest.approx(m1 * m2 / (m1 + m2), rel=1e-14)
    assert m.big_m(1, 2) == pytest.approx((m1 + m2) * m3 / (m1 + m2 + m3), rel=1e-14)


def test_defining_pair_coefficient():
    frame = pair_coefficients(reduced_masses(1, 1, 1))
    assert frame.coefficient(2, 1) == pytest.approx((1.0, 0.0), abs=1e-15)


def test_equal_mass_symmetric_coefficients():
    frame = pair_coefficients(reduced_masses(1, 1, 1))
    assert np.linalg.norm(frame.vector(1, 3)) == pytest.approx(np.linalg.norm(frame.vector(2, 3)), rel=1e-15)


def test_defining_pair_general_masses():
    m = reduced_masses(2, 3, 5)
    cx, cy = pair_coefficients(m).coefficient(2, 1)
    assert cy == 0.0
    assert cx == pytest.approx(1.0 / math.sqrt(2.0 * m.mu12), rel=1e-15)


def test_coefficients_reproduce_separations(rng):
    m = reduced_masses(1, 2, 3)
    frame = pair_coefficients(m)
    pos = rng.normal(size=(100, 3, 3))
    xy = to_jacobi(m, pos)
    for k, l in [(1, 3), (3, 1), (2, 3), (1, 2)]:
        cx, cy = frame.coefficient(k, l)
        direct = pos[:, k - 1] - pos[:, l - 1]
        assert np.max(np.abs(cx * xy[:, 0] + cy * xy[:, 1] - direct)) < 1e-12


@settings(max_examples=30)
@given(masses_st, masses_st, masses_st)
def test_jacobi_round_trip_distances(m1, m2, m3):
    m = reduced_masses(m1, m2, m3)
    frame = pair_coefficients(m)
    pos = np.random.default_rng(1).normal(size=(20, 3, 3))
    xy = to_jacobi(m, pos)
    for k, l in [(1, 2), (1, 3), (2, 3)]:
        cx, cy = frame.coefficient(k, l)
        d = np.linalg.norm(cx * xy[:, 0] + cy * xy[:, 1], axis=-1)
        ref = np.linalg.norm(pos[:, k - 1] - pos[:, l - 1], axis=-1)
        assert np.max(np.abs(d - ref)) < 1e-12 * max(1.0, ref.max())


@settings(max_examples=30)
@given(masses_st, masses_st, masses_st)
def test_kinetic_form_is_laplacian(m1, m2, m3):
    # the metric J M^-1 J^T for (x, y) must be the identity for -Lap_x - Lap_y
    m = reduced_masses(m1, m2, m3)
    minv = np.diag([1 / m1, 1 / m2, 1 / m3])
    for pair in [(1, 2), (1, 3), (2, 3)]:
        J = jacobi_matrix(m, pair)
        assert np.allclose(0.5 * J @ minv @ J.T, np.eye(2), atol=1e-12)
        T = arrangement_rotation(m, pair)
        assert np.allclose(T @ T.T, np.eye(2), atol=1e-12)


@pytest.mark.parametrize(
    "shape,depth,r,expected",
    [("gaussian", 1.0, 0.0, 1.0), ("square-well", 2.0, 1.5, 0.0), ("exponential", 1.0, 1.0, math.exp(-1.0))],
)
def test_potential_values(shape, depth, r, expected):
    assert evaluate_potential(PairPotential(shape, depth, 1.0), r) == pytest.approx(expected, abs=1e-15)


def test_negative_radius():
    with pytest.raises(DomainError):
        evaluate_potential(PairPotential("gaussian", 1.0), -0.1)


def test_bad_shape_and_depth():
    with pytest.raises(DomainError):
        PairPotential("yukawa", 1.0)
    with pytest.raises(DomainError):
        PairPotential("gaussian", -1.0)


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("depth,range_", [(1.0, 1.0), (3.0, 0.5), (0.2, 4.0)])
def test_falloff_witness(shape, depth, range_):
    p = PairPotential(shape, depth, range_)
    assert p.falloff_violation(n=10_000, span=50.0) <= 1e-15 * p.b1
    r = np.linspace(0, 50 * range_, 10_000)
    assert np.all(p(r) >= 0)


@pytest.mark.parametrize("shape", SHAPES)
def test_coupling_linear(shape):
    r = np.linspace(0, 5, 101)
    p = PairPotential(shape, 1.3, 0.7)
    assert np.array_equal(evaluate_potential(p.with_coupling(2.0), r), 2.0 * evaluate_potential(p, r))


def test_scaled_potential():
    p = PairPotential("gaussian", 1.0, 1.0)
    r = np.linspace(0, 3, 7)
    assert np.allclose(p.scaled(2.0)(r), p(2.0 * r), rtol=1e-15)
