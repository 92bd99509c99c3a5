"""Algebra catalog: JSON records with parametrized differential templates.

Record schema::

    {name, dim, params: [{name, default}], constraints: ["a = ...", ...],
     d: [[k, i, j, "coeff-expr"], ...], source: "table2 row g28"}

Optional keys: ``samples`` (named test bindings) and ``paper_typo``
(normalizations applied to the transcribed source data).  Constraints are
processed in order; a constraint ``p = expr`` assigns ``p`` when it is still
unbound and otherwise checks it.  Every instantiation is Jacobi-validated.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping

from .exprs import ExprError, eval_scalar
from .exterior import Form
from .liealg import LieAlgebra, jacobi_check

ENV_CATALOG = "G2FORGE_CATALOG"


class CatalogError(RuntimeError):
    pass


class UnknownAlgebraError(KeyError):
    pass


class ConstraintError(ValueError):
    pass


@dataclass
class CatalogEntry:
    name: str
    dim: int
    params: list[dict]
    constraints: list[str]
    d: list[list]
    source: str = ""
    samples: dict[str, dict] = field(default_factory=dict)
    paper_typo: list[str] = field(default_factory=list)

    @property
    def param_names(self) -> list[str]:
        return [p["name"] for p in self.params]

    def default_bindings(self) -> dict[str, float]:
        return {p["name"]: p["default"] for p in self.params if p.get("default") is not None}


@dataclass
class Catalog:
    entries: dict[str, CatalogEntry]
    path: str
    sha256: str

    def __getitem__(self, name: str) -> CatalogEntry:
        try:
            return self.entries[name]
        except KeyError:
            raise UnknownAlgebraError(name) from None

    def __iter__(self):
        return iter(self.entries.values())

    def names(self) -> list[str]:
        return list(self.entries)


def default_catalog_path() -> str:
    env = os.environ.get(ENV_CATALOG)
    if env:
        return env
    return str(resources.files("g2forge").joinpath("data/catalog.json"))


def load_catalog(path: str | None = None) -> Catalog:
    path = path or default_catalog_path()
    with open(path, "rb") as fh:
        raw = fh.read()
    data = json.loads(raw)
    entries: dict[str, CatalogEntry] = {}
    for rec in data["entries"]:
        entry = CatalogEntry(
            name=rec["name"],
            dim=rec["dim"],
            params=rec.get("params", []),
            constraints=rec.get("constraints", []),
            d=rec.get("d", []),
            source=rec.get("source", ""),
            samples=rec.get("samples", {}),
            paper_typo=rec.get("paper_typo", []),
        )
        if entry.name in entries:
            raise CatalogError(f"duplicate catalog entry {entry.name}")
        entries[entry.name] = entry
    return Catalog(entries, path, hashlib.sha256(raw).hexdigest())


def resolve_bindings(entry: CatalogEntry, bindings: Mapping[str, float] | None = None,
                     tol: float = 1e-9) -> dict[str, float]:
    """Apply defaults and constraints; raise ConstraintError on violations."""
    env: dict[str, float] = {}
    given = dict(bindings or {})
    for p in entry.params:
        name = p["name"]
        if name in given:
            env[name] = float(given.pop(name))
        elif p.get("default") is not None:
            env[name] = float(p["default"])
    if given:
        raise ConstraintError(f"{entry.name}: unknown parameters {sorted(given)}")
    for constraint in entry.constraints:
        lhs, _, rhs = constraint.partition("=")
        lhs = lhs.strip()
        rhs = rhs.strip()
        if not rhs:
            raise ConstraintError(f"{entry.name}: malformed constraint {constraint!r}")
        if lhs.isidentifier() and lhs not in env:
            try:
                env[lhs] = eval_scalar(rhs, env)
            except ExprError as exc:
                raise ConstraintError(f"{entry.name}: {constraint!r}: {exc}") from None
            continue
        try:
            left = eval_scalar(lhs, env)
            right = eval_scalar(rhs, env)
        except ExprError as exc:
            raise ConstraintError(f"{entry.name}: {constraint!r}: {exc}") from None
        scale = max(1.0, abs(left), abs(right))
        if abs(left - right) > tol * scale:
            raise ConstraintError(
                f"{entry.name}: constraint {constraint!r} violated ({left} != {right})")
    missing = [p["name"] for p in entry.params if p["name"] not in env]
    if missing:
        raise ConstraintError(f"{entry.name}: unresolved parameters {missing}")
    return env


def instantiate(entry: CatalogEntry, bindings: Mapping[str, float] | None = None,
                tol: float = 1e-9, check_jacobi: bool = True) -> LieAlgebra:
    env = resolve_bindings(entry, bindings, tol=tol)
    terms: list[dict] = [dict() for _ in range(entry.dim)]
    for k, i, j, expr in entry.d:
        try:
            coeff = eval_scalar(str(expr), env)
        except ExprError as exc:
            raise CatalogError(f"{entry.name}: bad coefficient {expr!r}: {exc}") from None
        key = (int(i), int(j))
        terms[int(k) - 1][key] = terms[int(k) - 1].get(key, 0.0) + coeff
    diffs = [Form(entry.dim, 2, t) for t in terms]
    alg = LieAlgebra(entry.dim, diffs, name=entry.name)
    if check_jacobi:
        ok, residual = jacobi_check(alg)
        if not ok:
            raise CatalogError(f"{entry.name}: Jacobi residual {residual:.3e}")
    return alg


def get_algebra(catalog: Catalog, name: str,
                bindings: Mapping[str, float] | None = None) -> LieAlgebra:
    return instantiate(catalog[name], bindings)
