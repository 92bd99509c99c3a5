import numpy as np
import pytest

from g2forge.catalog import load_catalog, instantiate
from g2forge.dense import basis_tuples, dim_lambda, nullspace, to_vector
from g2forge.exterior import Form, parse_form, wedge
from g2forge.liealg import (abelian, closed_forms, coclosed_forms,
                            derivation_space, differentials_from_brackets,
                            is_derivation, jacobi_check, LieAlgebra)


@pytest.fixture(scope="module")
def cat():
    return load_catalog()


def test_bracket_examples(cat):
    ab = abelian(7)
    rng = np.random.default_rng(0)
    assert np.allclose(ab.bracket(rng.standard_normal(7), rng.standard_normal(7)), 0)

    g28 = instantiate(cat["g28"])
    assert np.allclose(g28.bracket(np.eye(7)[0], np.eye(7)[6]), -np.eye(7)[0])

    sol = instantiate(cat["soliton7"])
    assert np.allclose(sol.bracket(np.eye(7)[0], np.eye(7)[2]), -np.eye(7)[4])


def test_bracket_antisymmetric_bilinear(cat):
    alg = instantiate(cat["g9"])
    rng = np.random.default_rng(1)
    for _ in range(5):
        x, y = rng.standard_normal(7), rng.standard_normal(7)
        assert np.allclose(alg.bracket(x, y), -alg.bracket(y, x))
        assert np.allclose(alg.bracket(2 * x + y, y), 2 * alg.bracket(x, y))


def test_differential_examples(cat):
    g28 = instantiate(cat["g28"])
    de6 = g28.d(Form.basis(7, 6))
    assert de6.allclose(parse_form("2*e{1,4} + 2*e{2,3} + 2*e{6,7}", 7))
    d67 = g28.d(Form.basis(7, 6, 7))
    assert d67.allclose(wedge(de6, Form.basis(7, 7)))
    table3 = parse_form("-2*e{1,2,7}-2*e{3,4,7}-e{1,3,6}+e{1,4,5}+e{2,3,5}"
                        "+e{2,4,6}+2*e{5,6,7}", 7)
    assert g28.d(table3).is_zero


def test_d_antiderivation(cat):
    alg = instantiate(cat["g14"])
    rng = np.random.default_rng(2)
    tuples2 = basis_tuples(7, 2)
    for _ in range(8):
        a = Form(7, 1, {(int(rng.integers(1, 8)),): float(rng.standard_normal())})
        b = Form(7, 2, {tuples2[rng.integers(len(tuples2))]: float(rng.standard_normal())})
        lhs = alg.d(wedge(a, b))
        rhs = wedge(alg.d(a), b) - wedge(a, alg.d(b))
        assert lhs.allclose(rhs, tol=1e-9)


def test_jacobi_all_catalog(cat):
    for entry in cat:
        for bindings in [None, *entry.samples.values()]:
            alg = instantiate(entry, bindings)
            ok, res = jacobi_check(alg)
            assert ok, (entry.name, bindings, res)


def test_jacobi_perturbation_fails(cat):
    entry = cat["g28"]
    diffs = list(instantiate(entry).differentials)
    diffs[4] = diffs[4] + Form(7, 2, {(5, 7): 0.1})
    broken = LieAlgebra(7, diffs, name="broken")
    ok, res = jacobi_check(broken)
    assert not ok and res > 0.05
    assert abs(broken.d(broken.differentials[4]).coeff(1, 3, 7)) > 0.05


def test_jacobi_abelian():
    ok, res = jacobi_check(abelian(7))
    assert ok and res == 0.0


def test_closed_forms_dims(cat):
    assert len(closed_forms(abelian(7), 3)) == 35
    # the full closed space on g28 is 15-dimensional and contains the
    # displayed 9-coefficient family strictly
    g28 = instantiate(cat["g28"])
    basis = closed_forms(g28, 3)
    assert len(basis) == 15
    assert g28.d(parse_form("e{1,5,7} - 2/3*e{1,2,4}", 7)).is_zero
    mat = np.array([to_vector(b) for b in basis])
    table3 = to_vector(parse_form("-2*e{1,2,7}-2*e{3,4,7}-e{1,3,6}+e{1,4,5}"
                                  "+e{2,3,5}+e{2,4,6}+2*e{5,6,7}", 7))
    rho, *_ = np.linalg.lstsq(mat.T, table3, rcond=None)
    assert np.max(np.abs(mat.T @ rho - table3)) < 1e-9


def test_closed_forms_rank_nullity(cat):
    for name in ("g28", "g5", "k4"):
        alg = instantiate(cat[name])
        for p in range(alg.dim):
            z = len(closed_forms(alg, p))
            rank = np.linalg.matrix_rank(alg.d_matrix(p), tol=1e-9)
            assert z + rank == dim_lambda(alg.dim, p)


def test_closed_forms_against_dense_oracle(cat):
    # independent oracle: nullspace of the explicitly assembled 35 x 35 matrix
    rh7 = instantiate(cat["rh7"])
    basis = closed_forms(rh7, 3)
    mat = np.zeros((dim_lambda(7, 4), dim_lambda(7, 3)))
    for j, key in enumerate(basis_tuples(7, 3)):
        mat[:, j] = to_vector(rh7.d(Form(7, 3, {key: 1.0})))
    oracle = nullspace(mat)
    got = np.array([to_vector(b) for b in basis])
    assert oracle.shape[0] == got.shape[0]
    # same span: mutual projection residuals vanish
    proj = oracle.T @ (oracle @ got.T)
    assert np.max(np.abs(proj - got.T)) < 1e-9


def test_coclosed_forms(cat):
    assert len(coclosed_forms(abelian(7), 3)) == 35
    g28 = instantiate(cat["g28"])
    assert len(coclosed_forms(g28, 3)) == len(closed_forms(g28, 4))
    sol = instantiate(cat["soliton7"])
    phi = parse_form("-e{1,3,6}+e{1,4,5}+e{2,3,5}+e{2,4,6}+e{5,6,7}-e{1,2,7}-e{3,4,7}", 7)
    basis = coclosed_forms(sol, 3)
    mat = np.array([to_vector(b) for b in basis])
    v = to_vector(phi)
    rho, *_ = np.linalg.lstsq(mat.T, v, rcond=None)
    assert np.max(np.abs(mat.T @ rho - v)) > 1e-3   # d*phi != 0: not coclosed


def test_derivation_space(cat):
    assert len(derivation_space(abelian(7))) == 49
    heis = instantiate(cat["heis3"])
    ders = derivation_space(heis)
    assert len(ders) == 6
    for d in ders:
        assert is_derivation(heis, d)
    sol = instantiate(cat["soliton7"])
    diag = np.diag([1.0, 1.0, -2.0, -2.0, -1.0, -1.0, 0.0])
    # ad_{e7} is a diagonal derivation; is_derivation confirms Leibniz directly
    assert is_derivation(sol, sol.ad(np.eye(7)[6]))
    assert not is_derivation(sol, diag + np.diag([1, 0, 0, 0, 0, 0, 0.0]))


def test_brackets_rebuild_differentials(cat):
    for name in ("g28", "g1", "k3", "soliton7", "h5r2"):
        alg = instantiate(cat[name])
        for original, rebuilt in zip(alg.differentials, differentials_from_brackets(alg)):
            assert original.allclose(rebuilt, tol=1e-12)
