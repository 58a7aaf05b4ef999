import numpy as np
import pytest

from doublephase.eigen import (
    SolverOptions,
    eigen_residual,
    linear_spectrum,
    normalize,
    principal_eigenpair,
    rayleigh_quotient,
)
from doublephase.energy import lr_norm
from doublephase.errors import NonConvergence
from doublephase.mesh import DiscreteFunction, as_function, build_mesh

from oracles import closed_form_lam1, dense_laplacian_2d, shooting_lam1, tridiagonal_eigs


def test_rayleigh_hat():
    u = as_function(build_mesh(1, 1), [1.0])
    assert rayleigh_quotient(u, 2) == pytest.approx(8.0)


def test_rayleigh_zero_rejected():
    with pytest.raises(ValueError):
        rayleigh_quotient(DiscreteFunction.zeros(build_mesh(1, 3)), 2)


def test_rayleigh_scale_invariant(rng):
    m = build_mesh(2, (4, 3))
    u = DiscreteFunction(m, rng.standard_normal(m.size))
    for r in (1.5, 2.0, 3.5):
        assert rayleigh_quotient(-3.1 * u, r) == pytest.approx(rayleigh_quotient(u, r), rel=1e-13)


def test_rayleigh_at_dense_eigenvector():
    w, V = tridiagonal_eigs(3, 0.25)
    u = as_function(build_mesh(1, 3), V[:, 0])
    assert rayleigh_quotient(u, 2) == pytest.approx(w[0], rel=1e-13)
    assert w[0] == pytest.approx(9.372583002030479, rel=1e-13)


def test_normalize(rng):
    m = build_mesh(1, 9)
    u = normalize(DiscreteFunction(m, -np.abs(rng.standard_normal(9))), 3.0)
    assert lr_norm(u, 3.0) == pytest.approx(1.0, rel=1e-13)
    assert u.values.sum() > 0


@pytest.mark.parametrize("n", [3, 15, 127])
def test_linear_eigenvalue_matches_closed_form(n):
    pair = principal_eigenpair(build_mesh(1, n), 2.0)
    assert pair.converged
    assert pair.lam1 == pytest.approx(closed_form_lam1(n), rel=1e-8)


def test_linear_eigenvector_matches_dense():
    n = 15
    pair = principal_eigenpair(build_mesh(1, n), 2.0)
    _, V = tridiagonal_eigs(n, 1 / (n + 1))
    v = V[:, 0] * np.sign(V[:, 0].sum())
    u = pair.u1.values
    cos = u @ v / np.linalg.norm(u)
    assert cos == pytest.approx(1.0, abs=1e-10)


def test_linear_2d_matches_dense():
    m = build_mesh(2, (5, 4), (1.0, 1.5))
    pair = principal_eigenpair(m, 2.0)
    w = np.linalg.eigvalsh(dense_laplacian_2d(5, 4, *m.h))
    assert pair.lam1 == pytest.approx(w[0], rel=1e-8)


@pytest.mark.parametrize("r", [1.5, 2.0, 3.0, 4.0])
def test_eigenpair_properties(r, rng):
    m = build_mesh(1, 31)
    pair = principal_eigenpair(m, r)
    assert pair.converged
    assert np.all(pair.u1.values > 0)
    assert lr_norm(pair.u1, r) == pytest.approx(1.0, rel=1e-12)
    assert np.all(np.diff(pair.trace) <= 1e-14 * pair.trace[0])
    assert pair.residual == pytest.approx(eigen_residual(pair.u1, r, pair.lam1, 1e-8))
    for _ in range(50):
        v = DiscreteFunction(m, rng.standard_normal(m.size))
        assert rayleigh_quotient(v, r) >= pair.lam1 * (1 - 1e-8)


def test_eigenpair_is_deterministic():
    m = build_mesh(1, 31)
    a = principal_eigenpair(m, 3.0)
    b = principal_eigenpair(m, 3.0)
    assert a.lam1 == b.lam1
    assert np.array_equal(a.u1.values, b.u1.values)


def test_eigenvalue_scaling_with_length():
    # lambda_1(r) scales like L^{-r} on (0, L)
    a = principal_eigenpair(build_mesh(1, 31, 1.0), 3.0).lam1
    b = principal_eigenpair(build_mesh(1, 31, 2.0), 3.0).lam1
    assert b == pytest.approx(a / 8, rel=1e-8)


def test_r3_matches_shooting_oracle():
    pair = principal_eigenpair(build_mesh(1, 128), 3.0)
    assert pair.lam1 == pytest.approx(shooting_lam1(3.0), rel=1e-3)


def test_iteration_budget_exhausted():
    with pytest.raises(NonConvergence) as info:
        principal_eigenpair(build_mesh(1, 31), 3.0, SolverOptions(max_iter=1))
    assert info.value.result is not None
    assert not info.value.result.converged


def test_rejects_exponent():
    with pytest.raises(ValueError):
        principal_eigenpair(build_mesh(1, 3), 1.0)


def test_linear_spectrum_1d():
    vals = linear_spectrum(build_mesh(1, 3), 3)
    assert vals == pytest.approx([9.372583002030479, 32.0, 54.62741699796952], rel=1e-13)
    w, _ = tridiagonal_eigs(3, 0.25)
    assert vals == pytest.approx(w, rel=1e-12)


def test_linear_spectrum_2d():
    m = build_mesh(2, (3, 3))
    vals = linear_spectrum(m, 9)
    assert vals[0] == pytest.approx(18.745166004060958, rel=1e-13)
    w = np.linalg.eigvalsh(dense_laplacian_2d(3, 3, *m.h))
    assert vals == pytest.approx(w, rel=1e-12)


@pytest.mark.parametrize("K", [0, 4])
def test_linear_spectrum_range(K):
    with pytest.raises(ValueError):
        linear_spectrum(build_mesh(1, 3), K)


@pytest.mark.parametrize("kwargs", [dict(tol=0), dict(max_iter=0), dict(backtrack=1.0), dict(restarts=0)])
def test_options_validation(kwargs):
    with pytest.raises(ValueError):
        SolverOptions(**kwargs)
