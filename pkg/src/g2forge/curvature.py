"""Curvature of left-invariant metrics.

Everything is computed in a g-orthonormal frame.  The Ricci tensor is
produced twice: (A) by contracting the Riemann tensor of the Koszul
connection, and (B) by the structure-constant formula

    Ric = M - (1/2) B - S(ad_H),

with M the moment-map term, B the Killing form, H the mean curvature
vector and S the symmetrization.  The two must agree; a mismatch raises,
since it can only come from a bug, not from user input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .liealg import LieAlgebra, derivation_space

EINSTEIN_TOL = 1e-8
METHOD_AGREEMENT_TOL = 1e-7


class InternalCheckError(RuntimeError):
    """A built-in cross-check failed; indicates an implementation bug."""


@dataclass
class Connection:
    frame: np.ndarray          # columns are the orthonormal frame vectors
    gamma: np.ndarray          # gamma[i,j,k] = <nabla_{v_i} v_j, v_k>
    frame_brackets: np.ndarray  # c[i,j,k] = <[v_i,v_j], v_k>


@dataclass
class CurvatureReport:
    ricci: np.ndarray
    scalar: float
    einstein_lambda: float
    einstein_residual: float
    flat: bool
    ricci_structure: np.ndarray
    method_gap: float


@dataclass
class SolitonCertificate:
    lam: float
    derivation: np.ndarray
    residual: float


@dataclass
class StandardDecomposition:
    n_basis: np.ndarray        # rows span the nilradical [s,s]
    a_basis: np.ndarray        # rows span the orthogonal complement
    a_abelian: bool
    mean_curvature: np.ndarray
    eigenvalues: np.ndarray | None
    eigenvalue_type: tuple[tuple[int, ...], tuple[int, ...]] | None
    degenerate: bool


def _orthonormal_frame(alg: LieAlgebra, g: np.ndarray) -> np.ndarray:
    ell = np.linalg.cholesky(g)
    return np.linalg.inv(ell).T


def _frame_brackets(alg: LieAlgebra, g: np.ndarray, frame: np.ndarray) -> np.ndarray:
    c = alg.structure_constants
    w = np.einsum("abk,ai,bj->ijk", c, frame, frame)
    return np.einsum("ijm,mn,nk->ijk", w, g, frame)


def levi_civita(alg: LieAlgebra, g: np.ndarray | None = None) -> Connection:
    """Koszul connection: 2<nabla_X Y, Z> = <[X,Y],Z> - <[Y,Z],X> + <[Z,X],Y>."""
    g = alg.metric if g is None else np.asarray(g, dtype=float)
    frame = _orthonormal_frame(alg, g)
    c = _frame_brackets(alg, g, frame)
    gamma = 0.5 * (c - np.einsum("jki->ijk", c) + np.einsum("kij->ijk", c))
    return Connection(frame, gamma, c)


def riemann_frame(conn: Connection) -> np.ndarray:
    """R[i,j,k,l] = <R(v_i,v_j)v_k, v_l> in the orthonormal frame."""
    gamma, c = conn.gamma, conn.frame_brackets
    second = np.einsum("jkm,iml->ijkl", gamma, gamma)
    return second - np.einsum("ikm,jml->ijkl", gamma, gamma) \
        - np.einsum("ijm,mkl->ijkl", c, gamma)


def _ricci_structure_frame(c: np.ndarray) -> np.ndarray:
    """Formula (B) in an orthonormal frame from the frame structure constants."""
    n = c.shape[0]
    moment = -0.5 * np.einsum("kij,lij->kl", c, c) + 0.25 * np.einsum("ijk,ijl->kl", c, c)
    ad = np.einsum("mji->mij", c)  # ad[m] = matrix of ad_{v_m}
    killing = np.einsum("mij,lji->ml", ad, ad)
    h = np.array([np.trace(ad[m]) for m in range(n)])
    ad_h = np.einsum("m,mij->ij", h, ad)
    return moment - 0.5 * killing - 0.5 * (ad_h + ad_h.T)


def ricci(alg: LieAlgebra, g: np.ndarray | None = None) -> CurvatureReport:
    g = alg.metric if g is None else np.asarray(g, dtype=float)
    conn = levi_civita(alg, g)
    riem = riemann_frame(conn)
    ric_frame = np.einsum("ijki->jk", riem)
    ric_frame_b = _ricci_structure_frame(conn.frame_brackets)
    scale = max(1.0, float(np.max(np.abs(ric_frame))))
    gap = float(np.max(np.abs(ric_frame - ric_frame_b)))
    if gap > METHOD_AGREEMENT_TOL * scale:
        raise InternalCheckError(
            f"Ricci formulas disagree on {alg.name or 'algebra'} (gap {gap:.3e})")
    back = np.linalg.inv(conn.frame)
    ric = back.T @ ric_frame @ back
    ric_b = back.T @ ric_frame_b @ back
    scalar = float(np.trace(ric_frame))
    lam = scalar / alg.dim
    residual = float(np.max(np.abs(ric - lam * g)))
    max_riem = float(np.max(np.abs(riem)))
    return CurvatureReport(
        ricci=ric, scalar=scalar, einstein_lambda=lam, einstein_residual=residual,
        flat=max_riem < EINSTEIN_TOL, ricci_structure=ric_b, method_gap=gap)


def einstein_check(alg: LieAlgebra, g: np.ndarray | None = None,
                   tol: float = EINSTEIN_TOL) -> tuple[bool, float, float]:
    """(is_einstein, lambda, max-norm residual of Ric - lambda g)."""
    rep = ricci(alg, g)
    return rep.einstein_residual < tol, rep.einstein_lambda, rep.einstein_residual


def flatness_check(alg: LieAlgebra, g: np.ndarray | None = None,
                   tol: float = EINSTEIN_TOL) -> tuple[bool, float]:
    conn = levi_civita(alg, g if g is not None else alg.metric)
    max_riem = float(np.max(np.abs(riemann_frame(conn))))
    return max_riem < tol, max_riem


def solvsoliton_solve(alg: LieAlgebra, g: np.ndarray | None = None,
                      tol: float = EINSTEIN_TOL) -> SolitonCertificate | None:
    """Least-squares solve of Ric_op = lambda I + D over the derivation space."""
    g = alg.metric if g is None else np.asarray(g, dtype=float)
    rep = ricci(alg, g)
    ric_op = np.linalg.solve(g, rep.ricci)
    n = alg.dim
    ders = derivation_space(alg)
    cols = [np.eye(n).ravel()] + [d.ravel() for d in ders]
    mat = np.array(cols).T
    x, *_ = np.linalg.lstsq(mat, ric_op.ravel(), rcond=None)
    lam = float(x[0])
    der = sum((float(ci) * di for ci, di in zip(x[1:], ders)), np.zeros((n, n)))
    residual = float(np.max(np.abs(ric_op - lam * np.eye(n) - der)))
    if residual >= tol:
        return None
    return SolitonCertificate(lam=lam, derivation=der, residual=residual)


def _is_solvable(alg: LieAlgebra, tol: float = 1e-9) -> bool:
    c = alg.structure_constants
    n = alg.dim
    basis = np.eye(n)
    for _ in range(n + 1):
        if basis.shape[0] == 0:
            return True
        brackets = []
        for i in range(basis.shape[0]):
            for j in range(i + 1, basis.shape[0]):
                brackets.append(np.einsum("abk,a,b->k", c, basis[i], basis[j]))
        if not brackets:
            return True
        mat = np.array(brackets)
        u, s, vh = np.linalg.svd(mat)
        rank = int((s > tol * max(1.0, s[0] if s.size else 0.0)).sum()) if s.size else 0
        if rank >= basis.shape[0] and rank > 0:
            return False
        basis = vh[:rank]
    return False


def _coprime_integer_spectrum(values: np.ndarray, max_den: int = 100) -> tuple[int, ...]:
    base = float(np.min(values))
    fracs = [Fraction(v / base).limit_denominator(max_den) for v in values]
    for v, f in zip(values, fracs):
        if abs(v / base - float(f)) > 1e-6:
            raise ValueError(f"eigenvalue ratio {v / base} is not a small rational")
    denom = math.lcm(*(f.denominator for f in fracs))
    ints = [int(f * denom) for f in fracs]
    gcd = math.gcd(*ints)
    return tuple(i // gcd for i in ints)


def standard_decomposition(alg: LieAlgebra, g: np.ndarray | None = None) -> StandardDecomposition:
    """Orthogonal split s = n + a with n = [s,s]; mean curvature and eigenvalue type."""
    g = alg.metric if g is None else np.asarray(g, dtype=float)
    if not _is_solvable(alg):
        raise ValueError("algebra is not solvable")
    c = alg.structure_constants
    n = alg.dim
    images = []
    for i in range(n):
        for j in range(i + 1, n):
            images.append(c[i, j, :])
    mat = np.array(images)
    u, s, vh = np.linalg.svd(mat)
    rank = int((s > 1e-9 * max(1.0, s[0] if s.size else 0.0)).sum()) if s.size else 0
    n_basis = vh[:rank]
    if rank == 0:
        return StandardDecomposition(
            n_basis=np.zeros((0, n)), a_basis=np.eye(n), a_abelian=True,
            mean_curvature=np.zeros(n), eigenvalues=None, eigenvalue_type=None,
            degenerate=True)
    from .dense import nullspace
    a_basis = nullspace(n_basis @ g)
    a_dim = a_basis.shape[0]
    a_abelian = all(
        float(np.max(np.abs(alg.bracket(a_basis[i], a_basis[j])))) < 1e-9
        for i in range(a_dim) for j in range(i + 1, a_dim))
    # mean curvature: <A, H> = tr(ad_A) for A in a
    gram = a_basis @ g @ a_basis.T
    rhs = np.array([np.trace(alg.ad(a_basis[i])) for i in range(a_dim)])
    coeffs = np.linalg.solve(gram, rhs)
    mean_curvature = coeffs @ a_basis
    ad_h = alg.ad(mean_curvature)
    # restriction of ad_H to n in the n_basis coordinates
    restricted = np.linalg.lstsq(n_basis.T, ad_h @ n_basis.T, rcond=None)[0]
    eigs = np.linalg.eigvals(restricted)
    if np.max(np.abs(eigs.imag)) > 1e-8:
        raise ValueError("ad_H restricted to the nilradical has non-real spectrum")
    eigs = np.sort(eigs.real)
    if np.min(eigs) <= 0:
        raise ValueError("ad_H restricted to the nilradical has non-positive spectrum")
    ints = _coprime_integer_spectrum(eigs)
    distinct: list[int] = []
    mult: list[int] = []
    for v in ints:
        if distinct and v == distinct[-1]:
            mult[-1] += 1
        else:
            distinct.append(v)
            mult.append(1)
    return StandardDecomposition(
        n_basis=n_basis, a_basis=a_basis, a_abelian=a_abelian,
        mean_curvature=mean_curvature, eigenvalues=eigs,
        eigenvalue_type=(tuple(distinct), tuple(mult)), degenerate=False)
