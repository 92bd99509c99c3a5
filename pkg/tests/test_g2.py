import numpy as np
import pytest

from g2forge.catalog import load_catalog, instantiate
from g2forge.dense import basis_tuples, to_vector, from_vector
from g2forge.exterior import Form, contract, hodge, parse_form, wedge
from g2forge.g2 import (DegenerateFormError, IndefiniteMetricError,
                        induced_bilinear, is_calibrated, is_cocalibrated,
                        metric_from_3form, obstruction_closed,
                        obstruction_coclosed, tau3_obstruction, torsion_classes,
                        try_metric_from_3form, type_subspace_basis)
from g2forge.liealg import abelian, closed_forms

PHI0 = parse_form("e{1,2,4}+e{2,3,5}+e{3,4,6}+e{4,5,7}+e{1,5,6}+e{2,6,7}+e{1,3,7}", 7)
TABLE3_G28 = parse_form("-2*e{1,2,7}-2*e{3,4,7}-e{1,3,6}+e{1,4,5}+e{2,3,5}"
                        "+e{2,4,6}+2*e{5,6,7}", 7)


@pytest.fixture(scope="module")
def cat():
    return load_catalog()


def pullback_by_matrix(phi: Form, q: np.ndarray) -> Form:
    """(q* phi)(x, y, z) = phi(qx, qy, qz), via contraction on columns."""
    terms = {}
    for key in basis_tuples(7, 3):
        out = phi
        for idx in key:
            out = contract(q[:, idx - 1], out)
        val = next(iter(out.terms.values()), 0.0)
        if abs(val) > 1e-14:
            terms[key] = val
    return Form(7, 3, terms)


def test_metric_from_phi0():
    g2 = metric_from_3form(PHI0)
    assert np.allclose(g2.metric, np.eye(7), atol=1e-12)
    assert g2.orientation == -1
    assert g2.volume_scale == pytest.approx(1.0)


def test_metric_table3_g28():
    g2 = metric_from_3form(TABLE3_G28)
    assert np.allclose(g2.b_matrix, np.diag([2, 2, 2, 2, 2, 2, 8.0]), atol=1e-12)
    assert np.allclose(g2.metric, np.diag([1, 1, 1, 1, 1, 1, 4.0]), atol=1e-12)
    assert g2.orientation == 1
    assert g2.volume_scale == pytest.approx(2.0)


def test_metric_error_cases():
    with pytest.raises(DegenerateFormError):
        metric_from_3form(Form.basis(7, 1, 2, 3))
    flipped = PHI0 + Form(7, 3, {(1, 2, 4): -2.0})   # flips the e124 sign
    assert try_metric_from_3form(flipped)[0] == "indefinite"
    with pytest.raises(IndefiniteMetricError):
        metric_from_3form(flipped)


def test_metric_so7_equivariance():
    rng = np.random.default_rng(8)
    for _ in range(6):
        q, _ = np.linalg.qr(rng.standard_normal((7, 7)))
        pulled = pullback_by_matrix(PHI0, q)
        g2 = metric_from_3form(pulled)
        # the pulled-back metric is q^T I q = identity again
        assert np.allclose(g2.metric, np.eye(7), atol=1e-8)


def test_metric_conformal_scaling():
    rng = np.random.default_rng(21)
    g0 = metric_from_3form(TABLE3_G28).metric
    for _ in range(6):
        c = float(rng.uniform(0.5, 3.0))
        g2 = metric_from_3form(c * TABLE3_G28)
        assert np.allclose(g2.metric, c ** (2.0 / 3.0) * g0, atol=1e-9)


def test_calibrated_cocalibrated(cat):
    g28 = instantiate(cat["g28"])
    assert is_calibrated(g28, TABLE3_G28)
    ab = abelian(7)
    assert is_calibrated(ab, PHI0) and is_cocalibrated(ab, PHI0)
    sol = instantiate(cat["soliton7"])
    phi = parse_form("-e{1,3,6}+e{1,4,5}+e{2,3,5}+e{2,4,6}+e{5,6,7}-e{1,2,7}-e{3,4,7}", 7)
    assert is_calibrated(sol, phi) and not is_cocalibrated(sol, phi)


def test_type_subspaces():
    g2 = metric_from_3form(PHI0)
    sphi = g2.star(g2.phi)
    b14 = type_subspace_basis(g2, "2_14")
    b27 = type_subspace_basis(g2, "3_27")
    b427 = type_subspace_basis(g2, "4_27")
    assert (len(b14), len(b27), len(b427)) == (14, 27, 27)
    for beta in b14:
        assert wedge(beta, sphi).norm_inf() < 1e-9
    for rho in b27:
        assert wedge(rho, g2.phi).norm_inf() < 1e-9
        assert wedge(rho, sphi).norm_inf() < 1e-9
    for gamma in b427:
        assert wedge(gamma, g2.phi).norm_inf() < 1e-9
        assert wedge(gamma, sphi).norm_inf() < 1e-12   # degree 8: identically zero


def test_torsion_flat_model():
    tc = torsion_classes(abelian(7), metric_from_3form(PHI0))
    assert abs(tc.tau0) < 1e-12
    assert tc.tau1.norm_inf() < 1e-12
    assert tc.tau2.norm_inf() < 1e-12
    assert tc.tau3.norm_inf() < 1e-12


def test_torsion_example_pattern(cat):
    sol = instantiate(cat["soliton7"])
    phi = parse_form("-e{1,3,6}+e{1,4,5}+e{2,3,5}+e{2,4,6}+e{5,6,7}-e{1,2,7}-e{3,4,7}", 7)
    tc = torsion_classes(sol, metric_from_3form(phi))
    assert abs(tc.tau0) < 1e-9 and tc.tau1.norm_inf() < 1e-9
    assert tc.tau3.norm_inf() < 1e-9
    assert tc.tau2.norm_inf() > 1e-3


def random_g2_form(rng):
    # a perturbation of the flat model stays inside the definite orbit
    noise = from_vector(7, 3, 0.12 * rng.standard_normal(35), tol=0.0)
    return PHI0 + noise


def test_torsion_roundtrip_random(cat):
    names = [f"g{i}" for i in range(1, 34)]
    rng = np.random.default_rng(42)
    done = 0
    while done < 12:
        phi = random_g2_form(rng)
        status, g2 = try_metric_from_3form(phi)
        if status != "ok":
            continue
        alg = instantiate(cat[str(rng.choice(names))])
        tc = torsion_classes(alg, g2)
        sphi = g2.star(phi)
        dphi = alg.d(phi)
        rebuilt = (tc.tau0 * sphi + 3.0 * wedge(tc.tau1, phi) + g2.star(tc.tau3))
        assert (rebuilt - dphi).norm_inf() < 1e-8 * max(1.0, dphi.norm_inf())
        rebuilt2 = 4.0 * wedge(tc.tau1, sphi) + wedge(tc.tau2, phi)
        dsphi = alg.d(sphi)
        assert (rebuilt2 - dsphi).norm_inf() < 1e-8 * max(1.0, dsphi.norm_inf())
        done += 1


def test_contraction_of_star_never_degenerate():
    g2 = metric_from_3form(PHI0)
    sphi = g2.star(g2.phi)
    for i in range(7):
        w = wedge(contract(np.eye(7)[i], sphi), g2.phi)
        assert w.norm_inf() > 1.0


def test_obstruction_examples(cat):
    assert obstruction_closed(instantiate(cat["g2"]), np.eye(7)[5]).obstructed
    r = obstruction_closed(instantiate(cat["g28"]), np.eye(7)[5])
    assert not r.obstructed and r.max_tensor_norm > 1e-3
    for i in range(7):
        assert not obstruction_closed(abelian(7), np.eye(7)[i]).obstructed
    assert obstruction_coclosed(instantiate(cat["g3"]), None, np.eye(7)[6]).obstructed
    assert not obstruction_coclosed(instantiate(cat["g7"]), None, np.eye(7)[6]).obstructed
    assert not obstruction_coclosed(abelian(7), None, np.eye(7)[0]).obstructed


def test_obstruction_basis_invariance(cat):
    # the verdict cannot depend on the choice of nullspace basis
    alg = instantiate(cat["g2"])
    forms = closed_forms(alg, 3)
    mat = np.array([to_vector(f) for f in forms])
    rng = np.random.default_rng(17)
    q, _ = np.linalg.qr(rng.standard_normal((len(forms), len(forms))))
    mixed = q @ mat
    from g2forge._kernels import triple_wedge_max
    u1 = np.array([to_vector(contract(np.eye(7)[5], f)) for f in forms])
    u2 = np.array([to_vector(contract(np.eye(7)[5],
                                      from_vector(7, 3, row, tol=0.0))) for row in mixed])
    assert triple_wedge_max(u1) < 1e-9
    assert triple_wedge_max(u2) < 1e-9


def test_tau3_cases(cat):
    rep = tau3_obstruction(abelian(7), starts=4, seed=0)
    assert not rep.obstructed and rep.best_residual < 1e-8
    rep = tau3_obstruction(instantiate(cat["g1"]), starts=8, seed=0)
    assert rep.obstructed and rep.best_residual > 1e-3
    rep = tau3_obstruction(instantiate(cat["g20"]), starts=8, seed=0)
    assert rep.obstructed


def test_induced_bilinear_symmetric():
    rng = np.random.default_rng(33)
    phi = random_g2_form(rng)
    b = induced_bilinear(phi)
    assert np.allclose(b, b.T)
