import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from bslab import numerics
from bslab.errors import AccuracyError, BracketError, ConditioningError, DomainError, InputError
from bslab.model import PairPotential


def test_gl_polynomial():
    q = numerics.gauss_legendre(5, 0.0, 1.0)
    assert q.integrate(lambda x: x ** 2) == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_gl_exponential():
    q = numerics.gauss_legendre(50, 0.0, 40.0)
    assert q.integrate(lambda x: np.exp(-x)) == pytest.approx(1.0 - math.exp(-40.0), abs=1e-12)


def test_gl_midpoint():
    q = numerics.gauss_legendre(1, -1.0, 1.0)
    assert q.nodes[0] == 0.0 and q.weights[0] == pytest.approx(2.0)


def test_gl_bad_interval():
    with pytest.raises(DomainError):
        numerics.gauss_legendre(4, 1.0, 1.0)
    with pytest.raises(DomainError):
        numerics.gauss_legendre(0, 0.0, 1.0)


@given(st.integers(1, 40), st.floats(-5, 5), st.floats(0.1, 10))
def test_gl_contract(n, a, width):
    q = numerics.gauss_legendre(n, a, a + width)
    assert np.all(np.diff(q.nodes) > 0)
    assert q.nodes[0] > a and q.nodes[-1] < a + width
    assert q.weights.sum() == pytest.approx(width, rel=1e-12)
    # degree 2n - 1 exactness against the antiderivative
    d = 2 * n - 1
    exact = ((a + width) ** (d + 1) - a ** (d + 1)) / (d + 1)
    assert q.integrate(lambda x: x ** d) == pytest.approx(exact, rel=1e-10, abs=1e-10)


def test_gl_doubling_converged():
    f = lambda x: np.exp(-x * x)
    a = numerics.gauss_legendre(40, 0.0, 10.0).integrate(f)
    b = numerics.gauss_legendre(80, 0.0, 10.0).integrate(f)
    assert abs(a - b) < 1e-12


def test_sym_eig_identity():
    sol = numerics.sym_eig_top(np.eye(3), 3)
    assert np.allclose(sol.eigenvalues, 1.0)


def test_sym_eig_diag():
    sol = numerics.sym_eig_top(np.diag([3.0, 2.0, 1.0]), 1)
    assert sol.eigenvalues[0] == pytest.approx(3.0)
    assert abs(sol.eigenvectors[0, 0]) == pytest.approx(1.0)


def test_sym_eig_random(rng):
    X = rng.normal(size=(50, 50))
    A = X + X.T
    sol = numerics.sym_eig_top(A, 5)
    assert np.all(np.diff(sol.eigenvalues) <= 0)
    assert np.all(sol.residuals <= 1e-10 * np.abs(sol.eigenvalues).max())
    V = sol.eigenvectors
    assert np.allclose(V.T @ V, np.eye(5), atol=1e-10)


def test_sym_eig_asymmetric():
    with pytest.raises(InputError):
        numerics.sym_eig_top(np.array([[1.0, 2.0], [0.0, 1.0]]))


def _spd(rng, n):
    X = rng.normal(size=(n, n))
    return X @ X.T + n * np.eye(n)


def test_gen_identity_overlap(rng):
    X = rng.normal(size=(8, 8))
    H = X + X.T
    sol = numerics.gen_sym_eig_min(H, np.eye(8))
    assert sol.eigenvalues[0] == pytest.approx(np.linalg.eigvalsh(H)[0], abs=1e-12)


def test_gen_proportional(rng):
    S = _spd(rng, 10)
    sol = numerics.gen_sym_eig_min(2.0 * S, S)
    assert sol.eigenvalues[0] == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("prune", [False, True])
def test_gen_vs_inverse_oracle(rng, prune):
    S = _spd(rng, 10)
    X = rng.normal(size=(10, 10))
    H = X + X.T
    ref = np.sort(np.linalg.eigvals(np.linalg.inv(S) @ H).real)[0]
    sol = numerics.gen_sym_eig_min(H, S, prune=prune)
    assert sol.eigenvalues[0] == pytest.approx(ref, abs=1e-9)
    v = sol.eigenvectors[:, 0]
    assert v @ S @ v == pytest.approx(1.0, abs=1e-12)


def test_gen_singular_overlap(rng):
    v = rng.normal(size=(6, 1))
    S = np.eye(6)
    S[:, 0] = S[:, 1]
    S[0, :] = S[1, :]
    with pytest.raises(ConditioningError):
        numerics.gen_sym_eig_min(np.eye(6), S)
    sol = numerics.gen_sym_eig_min(np.eye(6), S, prune=True)
    assert sol.rank == 5 and math.isfinite(sol.condition)


def test_brent_sqrt2():
    assert numerics.brent_root(lambda x: x * x - 2.0, 1.0, 2.0, tol=1e-14) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_brent_cos():
    assert numerics.brent_root(math.cos, 1.0, 2.0, tol=1e-14) == pytest.approx(math.pi / 2, abs=1e-12)


def test_brent_table_matches_bisection():
    xs = np.linspace(0.0, 3.0, 31)
    ys = np.tanh(xs - 1.234) + 0.1 * xs
    f = lambda x: float(np.interp(x, xs, ys))
    a = numerics.brent_root(f, 0.0, 3.0, tol=1e-13)
    b = numerics.bisect_root(f, 0.0, 3.0, tol=1e-13)
    assert a == pytest.approx(b, abs=1e-11)


def test_brent_no_bracket():
    with pytest.raises(BracketError):
        numerics.brent_root(lambda x: x * x + 1.0, -1.0, 1.0)


def test_radial_free():
    p = PairPotential("gaussian", 0.0)
    logd, nodes = numerics.radial_integrate(p, 0.0, 5.0, 400)
    assert logd == pytest.approx(1.0 / 5.0, rel=1e-10)
    assert nodes == 0


def test_radial_threshold_square_well():
    p = PairPotential("square-well", math.pi ** 2 / 4.0, 1.0)
    sol = numerics.radial_solution(p, 0.0, 1.0, 2000)
    assert abs(sol.du) < 1e-8 * abs(sol.u) * 10


def _square_well_kappa(v0):
    # interior q cot q = -kappa with q^2 + kappa^2 = v0 (R = 1)
    f = lambda k: math.sqrt(v0 - k * k) / math.tan(math.sqrt(v0 - k * k)) + k
    return numerics.brent_root(f, 1e-6, math.sqrt(v0) - 1e-9, tol=1e-15)


def test_radial_bound_state_square_well():
    v0 = 4.0 * math.pi ** 2 / 4.0
    exact = _square_well_kappa(v0)
    p = PairPotential("square-well", v0, 1.0)
    # outside the well u = exp(-kappa r), so match the log-derivative at the edge
    match = lambda k: numerics.radial_integrate(p, -k * k, 1.0, 4000)[0] + k
    kappa = numerics.brent_root(match, 0.5 * exact, 1.5 * exact, tol=1e-13)
    assert -kappa * kappa == pytest.approx(-exact * exact, rel=1e-8)


def test_radial_energy_positive_rejected():
    with pytest.raises(DomainError):
        numerics.radial_integrate(PairPotential("gaussian", 1.0), 0.5, 5.0)


def test_radial_accuracy_error():
    p = PairPotential("gaussian", 400.0)
    with pytest.raises(AccuracyError):
        numerics.radial_integrate(p, 0.0, 5.0, steps=10, tol=1e-10)


def test_sturm_node_count_monotone():
    p = PairPotential("exponential", 1.0)
    counts = [numerics.radial_integrate(p, 0.0, 30.0, 6000, coupling=lam, tol=1e-4)[1]
              for lam in np.linspace(0.0, 40.0, 21)]
    assert all(b >= a for a, b in zip(counts, counts[1:]))
    assert counts[-1] >= 2
