"""Hot numeric kernels: trilinear wedge scans and the damped least-squares loop.

Both kernels exist twice: a numba @njit build and a pure-numpy build.  The
active implementation is chosen at import time; set ``G2FORGE_PURE_NUMPY=1``
to force the numpy path (useful for debugging and for the benchmark in
benchmarks/).  ``get_impl(pure_numpy=...)`` exposes both for side-by-side use.
"""

from __future__ import annotations

import os
from functools import lru_cache

import numpy as np

from .dense import basis_tuples, tuple_index

try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAS_NUMBA = False

PURE_NUMPY = os.environ.get("G2FORGE_PURE_NUMPY", "0") == "1"
USING_NUMBA = HAS_NUMBA and not PURE_NUMPY


@lru_cache(maxsize=None)
def _triple_wedge_entries(n: int):
    """Sparse entries of Lambda^2 x Lambda^2 x Lambda^2 -> Lambda^6 on R^n.

    Returns (xs, ys, zs, rs, signs) with r indexing the 6-sets.
    """
    idx2 = tuple_index(n, 2)
    idx6 = tuple_index(n, 6)
    from .exterior import merge_sign
    xs, ys, zs, rs, ss = [], [], [], [], []
    for kx, x in enumerate(basis_tuples(n, 2)):
        for ky, y in enumerate(basis_tuples(n, 2)):
            m1 = merge_sign(x, y)
            if m1 is None:
                continue
            xy, s1 = m1
            for kz, z in enumerate(basis_tuples(n, 2)):
                m2 = merge_sign(xy, z)
                if m2 is None:
                    continue
                xyz, s2 = m2
                xs.append(kx)
                ys.append(ky)
                zs.append(kz)
                rs.append(idx6[xyz])
                ss.append(float(s1 * s2))
    return (np.array(xs, dtype=np.int64), np.array(ys, dtype=np.int64),
            np.array(zs, dtype=np.int64), np.array(rs, dtype=np.int64),
            np.array(ss))


@lru_cache(maxsize=None)
def _triple_wedge_dense(n: int) -> np.ndarray:
    xs, ys, zs, rs, ss = _triple_wedge_entries(n)
    w = np.zeros((len(basis_tuples(n, 2)),) * 3 + (len(basis_tuples(n, 6)),))
    for x, y, z, r, s in zip(xs, ys, zs, rs, ss):
        w[x, y, z, r] = s
    return w


# -- pure numpy builds -------------------------------------------------------

def _triple_max_np(u: np.ndarray, n: int = 7) -> float:
    """Max |(u_a ^ u_b ^ u_c)| over all index triples of 2-forms on R^n."""
    w6 = _triple_wedge_dense(n)
    t = np.einsum("ax,by,cz,xyzr->abcr", u, u, u, w6, optimize=True)
    return float(np.max(np.abs(t))) if t.size else 0.0


def _lm_multistart_np(cubic, dmask, rho0s, kappa0s, max_iters, tol, kappa_floor):
    ne, m = cubic.shape[0], cubic.shape[1]
    starts = rho0s.shape[0]
    out_res = np.empty(starts)
    out_sol = np.empty((starts, m + 1))
    out_iters = np.zeros(starts, dtype=np.int64)
    for s in range(starts):
        rho = rho0s[s].copy()
        u = np.log(max(kappa0s[s] - kappa_floor, 1e-3))
        lam = 1e-3
        w = np.einsum("eabc,b,c->ea", cubic, rho, rho)
        r = w @ rho - (kappa_floor + np.exp(u)) * dmask
        cost = float(r @ r)
        it = 0
        while it < max_iters:
            it += 1
            jac = np.empty((ne, m + 1))
            jac[:, :m] = 3.0 * w
            jac[:, m] = -dmask * np.exp(u)
            a = jac.T @ jac
            g = jac.T @ r
            improved = False
            for _ in range(12):
                try:
                    delta = np.linalg.solve(a + lam * np.diag(np.diag(a)) + 1e-14 * np.eye(m + 1), -g)
                except np.linalg.LinAlgError:
                    lam *= 10.0
                    continue
                rho_t = rho + delta[:m]
                u_t = min(u + delta[m], 50.0)
                w_t = np.einsum("eabc,b,c->ea", cubic, rho_t, rho_t)
                r_t = w_t @ rho_t - (kappa_floor + np.exp(u_t)) * dmask
                cost_t = float(r_t @ r_t)
                if cost_t < cost:
                    rho, u, w, r, cost = rho_t, u_t, w_t, r_t, cost_t
                    lam = max(lam * 0.3, 1e-12)
                    improved = True
                    break
                lam *= 10.0
            if not improved or np.max(np.abs(r)) < tol:
                break
        out_res[s] = np.max(np.abs(r))
        out_sol[s, :m] = rho
        out_sol[s, m] = kappa_floor + np.exp(u)
        out_iters[s] = it
    return out_res, out_sol, out_iters


# -- numba builds ------------------------------------------------------------

if HAS_NUMBA:

    @numba.njit(cache=True)
    def _triple_max_nb_impl(u, xs, ys, zs, rs, ss, nout):  # pragma: no cover - jitted
        m = u.shape[0]
        nt = xs.shape[0]
        best = 0.0
        acc = np.zeros(nout)
        for a in range(m):
            for b in range(a, m):
                for c in range(b, m):
                    for r in range(nout):
                        acc[r] = 0.0
                    for t in range(nt):
                        acc[rs[t]] += ss[t] * u[a, xs[t]] * u[b, ys[t]] * u[c, zs[t]]
                    for r in range(nout):
                        v = abs(acc[r])
                        if v > best:
                            best = v
        return best

    def _triple_max_nb(u: np.ndarray, n: int = 7) -> float:
        xs, ys, zs, rs, ss = _triple_wedge_entries(n)
        if u.shape[0] == 0:
            return 0.0
        nout = len(basis_tuples(n, 6))
        return float(_triple_max_nb_impl(np.ascontiguousarray(u), xs, ys, zs, rs, ss, nout))

    @numba.njit(cache=True)
    def _lm_multistart_nb(cubic, dmask, rho0s, kappa0s, max_iters, tol, kappa_floor):  # pragma: no cover - jitted
        ne = cubic.shape[0]
        m = cubic.shape[1]
        starts = rho0s.shape[0]
        out_res = np.empty(starts)
        out_sol = np.empty((starts, m + 1))
        out_iters = np.zeros(starts, dtype=np.int64)
        for s in range(starts):
            rho = rho0s[s].copy()
            k0 = kappa0s[s] - kappa_floor
            if k0 < 1e-3:
                k0 = 1e-3
            u = np.log(k0)
            lam = 1e-3
            w = np.zeros((ne, m))
            for e in range(ne):
                for a in range(m):
                    acc = 0.0
                    for b in range(m):
                        row = cubic[e, a, b]
                        s2 = 0.0
                        for c in range(m):
                            s2 += row[c] * rho[c]
                        acc += rho[b] * s2
                    w[e, a] = acc
            r = np.empty(ne)
            for e in range(ne):
                acc = 0.0
                for a in range(m):
                    acc += w[e, a] * rho[a]
                r[e] = acc - (kappa_floor + np.exp(u)) * dmask[e]
            cost = 0.0
            for e in range(ne):
                cost += r[e] * r[e]
            it = 0
            while it < max_iters:
                it += 1
                jac = np.empty((ne, m + 1))
                for e in range(ne):
                    for a in range(m):
                        jac[e, a] = 3.0 * w[e, a]
                    jac[e, m] = -dmask[e] * np.exp(u)
                a_mat = jac.T @ jac
                g = jac.T @ r
                improved = False
                for _trial in range(12):
                    lhs = a_mat.copy()
                    for d in range(m + 1):
                        lhs[d, d] += lam * a_mat[d, d] + 1e-14
                    delta = np.linalg.solve(lhs, -g)
                    rho_t = rho + delta[:m]
                    u_t = u + delta[m]
                    if u_t > 50.0:
                        u_t = 50.0
                    w_t = np.zeros((ne, m))
                    for e in range(ne):
                        for aa in range(m):
                            acc = 0.0
                            for b in range(m):
                                row = cubic[e, aa, b]
                                s2 = 0.0
                                for cc in range(m):
                                    s2 += row[cc] * rho_t[cc]
                                acc += rho_t[b] * s2
                            w_t[e, aa] = acc
                    r_t = np.empty(ne)
                    for e in range(ne):
                        acc = 0.0
                        for aa in range(m):
                            acc += w_t[e, aa] * rho_t[aa]
                        r_t[e] = acc - (kappa_floor + np.exp(u_t)) * dmask[e]
                    cost_t = 0.0
                    for e in range(ne):
                        cost_t += r_t[e] * r_t[e]
                    if cost_t < cost:
                        rho = rho_t
                        u = u_t
                        w = w_t
                        r = r_t
                        cost = cost_t
                        lam = lam * 0.3
                        if lam < 1e-12:
                            lam = 1e-12
                        improved = True
                        break
                    lam *= 10.0
                rinf = 0.0
                for e in range(ne):
                    v = abs(r[e])
                    if v > rinf:
                        rinf = v
                if (not improved) or rinf < tol:
                    break
            rinf = 0.0
            for e in range(ne):
                v = abs(r[e])
                if v > rinf:
                    rinf = v
            out_res[s] = rinf
            for a in range(m):
                out_sol[s, a] = rho[a]
            out_sol[s, m] = kappa_floor + np.exp(u)
            out_iters[s] = it
        return out_res, out_sol, out_iters


def get_impl(pure_numpy: bool = False):
    """Return (triple_max, lm_multistart) for the requested backend."""
    if pure_numpy or not HAS_NUMBA:
        return _triple_max_np, _lm_multistart_np
    return _triple_max_nb, _lm_multistart_nb


triple_wedge_max, lm_multistart = get_impl(pure_numpy=not USING_NUMBA)
