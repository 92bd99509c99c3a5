"""Dense coordinates for spaces of forms.

Lambda^p of an n-dimensional space is represented as R^{C(n,p)} over the
lexicographic basis of increasing index tuples.  The cached tensors here
(wedge, contraction, top-degree pairing) are what the linear solves and the
hot kernels run on.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations

import numpy as np

from .exterior import EPS, Form, merge_sign


@lru_cache(maxsize=None)
def basis_tuples(n: int, p: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(1, n + 1), p))


@lru_cache(maxsize=None)
def tuple_index(n: int, p: int) -> dict[tuple[int, ...], int]:
    return {t: i for i, t in enumerate(basis_tuples(n, p))}


def dim_lambda(n: int, p: int) -> int:
    return len(basis_tuples(n, p))


def to_vector(a: Form) -> np.ndarray:
    idx = tuple_index(a.dim, a.grade)
    v = np.zeros(len(idx))
    for key, value in a.terms.items():
        v[idx[key]] = value
    return v


def from_vector(dim: int, grade: int, vec: np.ndarray, tol: float = EPS) -> Form:
    tuples = basis_tuples(dim, grade)
    return Form(dim, grade, {tuples[i]: float(c) for i, c in enumerate(vec) if abs(c) > tol})


@lru_cache(maxsize=None)
def wedge_tensor(n: int, p: int, q: int) -> np.ndarray:
    """Dense tensor W with (a ^ b)_K = sum_{I,J} W[I,J,K] a_I b_J."""
    left, right, out = basis_tuples(n, p), basis_tuples(n, q), tuple_index(n, p + q)
    w = np.zeros((len(left), len(right), len(out)))
    for i, ki in enumerate(left):
        for j, kj in enumerate(right):
            merged = merge_sign(ki, kj)
            if merged is None:
                continue
            key, sign = merged
            w[i, j, out[key]] = sign
    return w


@lru_cache(maxsize=None)
def contraction_matrix(n: int, p: int, axis: int) -> np.ndarray:
    """Matrix of i_{e_axis}: Lambda^p -> Lambda^{p-1} (axis is 1-based)."""
    src, dst = basis_tuples(n, p), tuple_index(n, p - 1)
    m = np.zeros((len(dst), len(src)))
    for j, key in enumerate(src):
        if axis not in key:
            continue
        pos = key.index(axis)
        rest = key[:pos] + key[pos + 1:]
        m[dst[rest], j] = -1.0 if pos % 2 else 1.0
    return m


@lru_cache(maxsize=None)
def top_pairing(n: int, p: int) -> np.ndarray:
    """Signed pairing P[I,J] with (a ^ b)_{1..n} = a P b for a in L^p, b in L^{n-p}."""
    left, right = basis_tuples(n, p), tuple_index(n, n - p)
    pairing = np.zeros((len(left), len(right)))
    full = tuple(range(1, n + 1))
    for i, key in enumerate(left):
        comp = tuple(k for k in full if k not in key)
        _, sign = merge_sign(key, comp)
        pairing[i, right[comp]] = sign
    return pairing


def gram_matrix(n: int, p: int, g: np.ndarray | None) -> np.ndarray:
    """Gram matrix of <.,.>_g on Lambda^p (identity metric -> identity matrix)."""
    tuples = basis_tuples(n, p)
    if g is None:
        return np.eye(len(tuples))
    ginv = np.linalg.inv(np.asarray(g, dtype=float))
    out = np.zeros((len(tuples), len(tuples)))
    for i, ki in enumerate(tuples):
        rows = [a - 1 for a in ki]
        for j, kj in enumerate(tuples):
            cols = [b - 1 for b in kj]
            out[i, j] = np.linalg.det(ginv[np.ix_(rows, cols)])
    return out


def star_matrix(n: int, p: int, g: np.ndarray | None = None, orientation: int = 1) -> np.ndarray:
    """Matrix of the Hodge star Lambda^p -> Lambda^{n-p} in dense coordinates."""
    scale = float(orientation)
    if g is not None:
        scale *= float(np.sqrt(np.linalg.det(np.asarray(g, dtype=float))))
    gram = gram_matrix(n, p, g)
    pairing = top_pairing(n, p)
    # (*a)_{J} solves  e^I ^ *a = <e^I, a> vol: star = P^T gram * scale read off per row
    return scale * (pairing.T @ gram)


def nullspace(mat: np.ndarray, atol: float = 1e-9, rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal nullspace basis (rows) via SVD with combined tolerance."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.size == 0:
        return np.eye(mat.shape[1])
    _, s, vh = np.linalg.svd(mat)
    tol = max(atol, rtol * (s[0] if s.size else 0.0))
    rank = int((s > tol).sum())
    return vh[rank:]
