"""Lie algebras presented by their Chevalley-Eilenberg differentials.

An algebra is stored as the list of 2-forms de^1, ..., de^n together with an
inner product (identity by default: the basis e_1..e_n is orthonormal).
Brackets are always derived from the differentials through the convention

    d alpha (X, Y) = -alpha([X, Y]),

never entered by hand.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import dense
from .exterior import EPS, Form, wedge


class LieAlgebra:
    """dim, differentials de^k, inner product, and a display name."""

    def __init__(self, dim: int, differentials: Sequence[Form],
                 metric: np.ndarray | None = None, name: str = ""):
        if len(differentials) != dim:
            raise ValueError("need one differential per basis covector")
        for k, f in enumerate(differentials, start=1):
            if f.dim != dim or f.grade != 2:
                raise ValueError(f"de^{k} must be a 2-form on dimension {dim}")
        self.dim = dim
        self.differentials = tuple(differentials)
        self.metric = np.eye(dim) if metric is None else np.asarray(metric, dtype=float)
        self.name = name
        self._d_matrices: dict[int, np.ndarray] = {}
        self._structure: np.ndarray | None = None

    def with_metric(self, g: np.ndarray) -> "LieAlgebra":
        return LieAlgebra(self.dim, self.differentials, g, self.name)

    # -- brackets -------------------------------------------------------
    @property
    def structure_constants(self) -> np.ndarray:
        """C[i,j,k] with [e_i, e_j] = sum_k C[i,j,k] e_k (0-based array)."""
        if self._structure is None:
            n = self.dim
            c = np.zeros((n, n, n))
            for k, dek in enumerate(self.differentials):
                for (i, j), v in dek.terms.items():
                    c[i - 1, j - 1, k] = -v
                    c[j - 1, i - 1, k] = v
            self._structure = c
        return self._structure

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != (self.dim,) or y.shape != (self.dim,):
            raise ValueError("dimension mismatch")
        return np.einsum("ijk,i,j->k", self.structure_constants, x, y)

    def ad(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ad_x, columns = ad_x(e_j)."""
        return np.einsum("ijk,i->kj", self.structure_constants, np.asarray(x, dtype=float))

    # -- Chevalley-Eilenberg differential --------------------------------
    def d(self, a: Form) -> Form:
        if a.dim != self.dim:
            raise ValueError("dimension mismatch")
        if a.grade >= self.dim:
            return Form(self.dim, min(a.grade + 1, self.dim))
        out = Form(self.dim, a.grade + 1)
        for key, value in a.terms.items():
            for pos, idx in enumerate(key):
                rest = Form(self.dim, a.grade - 1, {key[:pos] + key[pos + 1:]: 1.0})
                sign = -1.0 if pos % 2 else 1.0
                out = out + (sign * value) * wedge(self.differentials[idx - 1], rest)
        return out

    def d_matrix(self, p: int) -> np.ndarray:
        """Dense matrix of d: Lambda^p -> Lambda^{p+1}."""
        if p not in self._d_matrices:
            src = dense.basis_tuples(self.dim, p)
            mat = np.zeros((dense.dim_lambda(self.dim, p + 1), len(src)))
            for j, key in enumerate(src):
                mat[:, j] = dense.to_vector(self.d(Form(self.dim, p, {key: 1.0})))
            self._d_matrices[p] = mat
        return self._d_matrices[p]

    def __repr__(self) -> str:
        return f"LieAlgebra({self.name or 'anonymous'}, dim={self.dim})"


def jacobi_check(alg: LieAlgebra, tol: float = EPS) -> tuple[bool, float]:
    """Max-norm of d(de^k) over k; passes when below `tol`."""
    residual = max(alg.d(dek).norm_inf() for dek in alg.differentials)
    return residual < tol, residual


def differentials_from_brackets(alg: LieAlgebra) -> list[Form]:
    """Rebuild the de^k from the structure constants (consistency oracle)."""
    n = alg.dim
    c = alg.structure_constants
    out = []
    for k in range(n):
        terms = {}
        for i in range(n):
            for j in range(i + 1, n):
                if abs(c[i, j, k]) > EPS:
                    terms[(i + 1, j + 1)] = -c[i, j, k]
        out.append(Form(n, 2, terms))
    return out


def closed_forms(alg: LieAlgebra, p: int, atol: float = 1e-9) -> list[Form]:
    """Coefficient-orthonormal basis of Z^p = ker d on Lambda^p."""
    if not 0 <= p <= alg.dim:
        raise ValueError("grade out of range")
    if p == alg.dim:
        return [Form(alg.dim, p, {tuple(range(1, alg.dim + 1)): 1.0})]
    rows = dense.nullspace(alg.d_matrix(p), atol=atol)
    return [dense.from_vector(alg.dim, p, row, tol=0.0) for row in rows]


def coclosed_forms(alg: LieAlgebra, p: int, g: np.ndarray | None = None,
                   atol: float = 1e-9) -> list[Form]:
    """Basis of {a in Lambda^p : d(*_g a) = 0}."""
    n = alg.dim
    star = dense.star_matrix(n, p, g if g is not None else None, 1)
    mat = alg.d_matrix(n - p) @ star
    rows = dense.nullspace(mat, atol=atol)
    return [dense.from_vector(n, p, row, tol=0.0) for row in rows]


def derivation_space(alg: LieAlgebra, atol: float = 1e-9) -> list[np.ndarray]:
    """Basis of derivations: D[X,Y] = [DX,Y] + [X,DY] as an n^2-unknown system."""
    n = alg.dim
    c = alg.structure_constants
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            for m in range(n):
                row = np.zeros((n, n))
                # D[e_i,e_j]_m  =  sum_k c[i,j,k] D[m,k]
                row[m, :] += c[i, j, :]
                # -[D e_i, e_j]_m = -sum_a D[a,i] c[a,j,m]
                row[:, i] -= c[:, j, m]
                # -[e_i, D e_j]_m = -sum_a D[a,j] c[i,a,m]
                row[:, j] -= c[i, :, m]
                rows.append(row.ravel())
    basis = dense.nullspace(np.array(rows), atol=atol)
    return [b.reshape(n, n) for b in basis]


def is_derivation(alg: LieAlgebra, mat: np.ndarray, tol: float = 1e-8) -> bool:
    n = alg.dim
    mat = np.asarray(mat, dtype=float)
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            ei = np.eye(n)[i]
            ej = np.eye(n)[j]
            lhs = mat @ alg.bracket(ei, ej)
            rhs = alg.bracket(mat @ ei, ej) + alg.bracket(ei, mat @ ej)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst < tol


def abelian(dim: int, name: str = "") -> LieAlgebra:
    return LieAlgebra(dim, [Form(dim, 2) for _ in range(dim)], name=name or f"abelian{dim}")
