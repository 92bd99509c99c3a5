import json

import numpy as np
import pytest

from g2forge.catalog import (CatalogError, ConstraintError, UnknownAlgebraError,
                             default_catalog_path, load_catalog, instantiate,
                             resolve_bindings)
from g2forge.exterior import Form


@pytest.fixture(scope="module")
def cat():
    return load_catalog()


def test_load_and_lookup(cat):
    assert "g28" in cat.names() and "k4" in cat.names()
    assert len(cat.names()) >= 50
    with pytest.raises(UnknownAlgebraError):
        cat["nope"]
    assert len(cat.sha256) == 64


def test_instantiate_k4(cat):
    alg = instantiate(cat["k4"])
    assert alg.differentials[0].allclose(Form(6, 2, {(1, 6): 0.5}))
    assert alg.differentials[4].allclose(Form(6, 2, {(1, 2): 1.0, (3, 4): 1.0, (5, 6): 1.0}))
    assert alg.differentials[5].is_zero
    alg2 = instantiate(cat["k4"], {"a": 2.0})
    assert alg2.differentials[4].coeff(1, 2) == pytest.approx(2.0)


def test_dependent_parameter_resolution(cat):
    env = resolve_bindings(cat["h5r2"], {"b7": 1.0})
    assert env["a"] == pytest.approx(0.5)
    env = resolve_bindings(cat["h5r2"], {"b7": 1.0, "b2": 1.0, "b3": 1.0, "b4": 1.0,
                                         "b14": 1.0, "b19": 1.0})
    assert env["a"] == pytest.approx(np.sqrt(8.0) / 2)


def test_constraint_violation(cat):
    with pytest.raises(ConstraintError):
        instantiate(cat["h5r2"], {"b7": 1.0, "a": 0.7})
    with pytest.raises(ConstraintError):
        instantiate(cat["a4r3"], {"b1": 1.0, "b2": 1.0, "b3": 0.0, "b4": 0.0,
                                  "b5": 0.0, "b6": 0.0})
    with pytest.raises(ConstraintError):
        instantiate(cat["g28"], {"nonsense": 1.0})


def test_typo_annotations_present(cat):
    for name in ("g1", "g7", "g13", "g29", "g31", "k1", "k2", "k3", "soliton7"):
        assert cat[name].paper_typo, name


def test_env_override(tmp_path, monkeypatch):
    mini = {"entries": [{"name": "only", "dim": 2, "params": [],
                         "constraints": [], "d": [[1, 1, 2, "1"]],
                         "source": "test"}]}
    path = tmp_path / "cat.json"
    path.write_text(json.dumps(mini))
    monkeypatch.setenv("G2FORGE_CATALOG", str(path))
    assert default_catalog_path() == str(path)
    cat2 = load_catalog()
    assert cat2.names() == ["only"]
    alg = instantiate(cat2["only"])
    assert alg.dim == 2


def test_jacobi_guard(tmp_path):
    bad = {"entries": [{"name": "bad", "dim": 4, "params": [], "constraints": [],
                        "d": [[4, 1, 2, "1"], [2, 3, 4, "1"]], "source": "test"}]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    cat2 = load_catalog(str(path))
    with pytest.raises(CatalogError):
        instantiate(cat2["bad"])
