"""G2-structure machinery on 7-dimensional algebras.

The induced metric of a 3-form phi comes from the 7-form-valued bilinear
form B(X,Y) = (1/6) i_X phi ^ i_Y phi ^ phi.  Writing B for its coefficient
matrix against e^{1..7} and s = det B, the metric is the unique solution of
g * sqrt(det g) = B, namely g = B / s^{1/9} with the sign-preserving ninth
root; the orientation is sign(s) and sqrt(det g) = |s|^{1/9}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dense
from ._kernels import triple_wedge_max
from .exterior import EPS, Form, contract, hodge, wedge
from .liealg import LieAlgebra, closed_forms, coclosed_forms


class DegenerateFormError(ValueError):
    """The 3-form is unstable: det B vanishes."""


class IndefiniteMetricError(ValueError):
    """The 3-form is stable but its bilinear form is not positive-definite."""


@dataclass
class G2Structure:
    phi: Form
    metric: np.ndarray
    orientation: int
    volume_scale: float   # sqrt(det g) relative to e^{1..7}

    @property
    def b_matrix(self) -> np.ndarray:
        """The unnormalized bilinear form g * sqrt(det g)."""
        return self.metric * self.volume_scale

    def star(self, a: Form) -> Form:
        return hodge(a, self.metric, self.orientation)


@dataclass
class TorsionClasses:
    tau0: float
    tau1: Form
    tau2: Form
    tau3: Form


@dataclass
class ObstructionResult:
    obstructed: bool
    witness_vector: np.ndarray | None
    max_tensor_norm: float
    basis_dim: int


def induced_bilinear(phi: Form) -> np.ndarray:
    """B[i,j] = coefficient of e^{1..7} in (1/6) i_{e_i}phi ^ i_{e_j}phi ^ phi."""
    if phi.dim != 7 or phi.grade != 3:
        raise ValueError("expected a 3-form on dimension 7")
    contractions = [contract(np.eye(7)[i], phi) for i in range(7)]
    b = np.zeros((7, 7))
    top = tuple(range(1, 8))
    for i in range(7):
        for j in range(i, 7):
            w = wedge(wedge(contractions[i], contractions[j]), phi)
            b[i, j] = b[j, i] = w.terms.get(top, 0.0) / 6.0
    return b


def try_metric_from_3form(phi: Form, tol: float = EPS) -> tuple[str, G2Structure | None]:
    """Returns (status, structure) with status in {"ok", "degenerate", "indefinite"}."""
    b = induced_bilinear(phi)
    s = float(np.linalg.det(b))
    if abs(s) <= tol:
        return "degenerate", None
    root = np.sign(s) * abs(s) ** (1.0 / 9.0)
    g = b / root
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        return "indefinite", None
    return "ok", G2Structure(phi=phi, metric=g, orientation=int(np.sign(s)),
                             volume_scale=abs(s) ** (1.0 / 9.0))


def metric_from_3form(phi: Form, tol: float = EPS) -> G2Structure:
    status, g2 = try_metric_from_3form(phi, tol)
    if status == "degenerate":
        raise DegenerateFormError("3-form does not induce a metric (det B = 0)")
    if status == "indefinite":
        raise IndefiniteMetricError("induced bilinear form is not positive-definite")
    return g2


def is_calibrated(alg: LieAlgebra, phi: Form, tol: float = EPS) -> bool:
    metric_from_3form(phi)
    return alg.d(phi).norm_inf() <= tol


def is_cocalibrated(alg: LieAlgebra, phi: Form, tol: float = EPS) -> bool:
    g2 = metric_from_3form(phi)
    return alg.d(g2.star(phi)).norm_inf() <= tol


_WHICH = {"2_14": (2, 14), "3_27": (3, 27), "4_27": (4, 27)}


def type_subspace_basis(g2: G2Structure, which: str) -> list[Form]:
    """Basis of an irreducible component, cut out by wedge conditions.

    "2_14": beta ^ *phi = 0;  "3_27": rho ^ phi = 0 = rho ^ *phi;
    "4_27": the star image of "3_27" (gamma ^ phi = 0 and *gamma ^ phi = 0;
    gamma ^ *phi vanishes in degree 8 for free).
    """
    if which not in _WHICH:
        raise ValueError(f"unknown component {which!r}")
    grade, expect = _WHICH[which]
    phi_v = dense.to_vector(g2.phi)
    sphi_v = dense.to_vector(g2.star(g2.phi))
    if which == "2_14":
        w = dense.wedge_tensor(7, 2, 4)
        mat = np.einsum("xyk,y->kx", w, sphi_v)
    elif which == "3_27":
        w6 = dense.wedge_tensor(7, 3, 3)
        rows6 = np.einsum("xyk,y->kx", w6, phi_v)
        rows7 = (dense.top_pairing(7, 3) @ sphi_v)[None, :]
        mat = np.vstack([rows6, rows7])
    else:
        star4 = dense.star_matrix(7, 4, g2.metric, g2.orientation)
        rows7 = (dense.top_pairing(7, 4) @ phi_v)[None, :]
        w6 = dense.wedge_tensor(7, 3, 3)
        rows6 = np.einsum("xyk,y->kx", w6, phi_v) @ star4
        mat = np.vstack([rows7, rows6])
    rows = dense.nullspace(mat)
    if rows.shape[0] != expect:
        raise RuntimeError(f"component {which} has dimension {rows.shape[0]}, expected {expect}")
    return [dense.from_vector(7, grade, row, tol=0.0) for row in rows]


def torsion_classes(alg: LieAlgebra, g2: G2Structure, tol: float = 1e-8) -> TorsionClasses:
    """Solve d phi = tau0 *phi + 3 tau1 ^ phi + *tau3  and
    d *phi = 4 tau1 ^ *phi + tau2 ^ phi, and require the two tau1 to agree."""
    phi = g2.phi
    sphi = g2.star(phi)
    basis27 = type_subspace_basis(g2, "3_27")
    basis14 = type_subspace_basis(g2, "2_14")

    # system 1: unknowns (tau0, tau1 in Lambda^1, tau3 in the 27-component)
    cols = [dense.to_vector(sphi)]
    for i in range(7):
        cols.append(3.0 * dense.to_vector(wedge(Form.basis(7, i + 1), phi)))
    for b in basis27:
        cols.append(dense.to_vector(g2.star(b)))
    mat1 = np.array(cols).T
    rhs1 = dense.to_vector(alg.d(phi))
    x1, *_ = np.linalg.lstsq(mat1, rhs1, rcond=None)
    res1 = float(np.max(np.abs(mat1 @ x1 - rhs1)))

    # system 2: unknowns (tau1 again, tau2 in the 14-component)
    cols = []
    for i in range(7):
        cols.append(4.0 * dense.to_vector(wedge(Form.basis(7, i + 1), sphi)))
    for b in basis14:
        cols.append(dense.to_vector(wedge(b, phi)))
    mat2 = np.array(cols).T
    rhs2 = dense.to_vector(alg.d(sphi))
    x2, *_ = np.linalg.lstsq(mat2, rhs2, rcond=None)
    res2 = float(np.max(np.abs(mat2 @ x2 - rhs2)))

    scale = max(1.0, float(np.max(np.abs(rhs1))), float(np.max(np.abs(rhs2))))
    if res1 > tol * scale or res2 > tol * scale:
        raise RuntimeError(f"torsion decomposition did not close (residuals {res1:.2e}, {res2:.2e})")
    tau1_gap = float(np.max(np.abs(x1[1:8] - x2[:7])))
    if tau1_gap > tol * scale:
        raise RuntimeError(f"tau1 solves disagree by {tau1_gap:.2e}")

    tau1 = Form(7, 1, {(i + 1,): x1[1 + i] for i in range(7)})
    tau3 = Form(7, 3)
    for c, b in zip(x1[8:], basis27):
        tau3 = tau3 + float(c) * b
    tau2 = Form(7, 2)
    for c, b in zip(x2[7:], basis14):
        tau2 = tau2 + float(c) * b
    return TorsionClasses(tau0=float(x1[0]), tau1=tau1, tau2=tau2, tau3=tau3)


def _contraction_rows(forms: list[Form], x: np.ndarray,
                      star_with: tuple[np.ndarray, int] | None = None) -> np.ndarray:
    rows = np.zeros((len(forms), dense.dim_lambda(7, 2)))
    for a, f in enumerate(forms):
        if star_with is not None:
            f = hodge(f, star_with[0], star_with[1])
        rows[a] = dense.to_vector(contract(x, f))
    return rows


def obstruction_closed(alg: LieAlgebra, x: np.ndarray, tol: float = EPS) -> ObstructionResult:
    """Exact test of (i_X phi)^3 = 0 for every closed 3-form phi."""
    forms = closed_forms(alg, 3)
    u = _contraction_rows(forms, np.asarray(x, dtype=float))
    worst = triple_wedge_max(u)
    obstructed = worst < tol
    return ObstructionResult(obstructed=obstructed,
                             witness_vector=np.asarray(x, dtype=float) if obstructed else None,
                             max_tensor_norm=worst, basis_dim=len(forms))


def obstruction_coclosed(alg: LieAlgebra, g: np.ndarray | None, x: np.ndarray,
                         tol: float = EPS) -> ObstructionResult:
    """Exact test of (i_X(*Psi))^3 = 0 over the closed 4-forms Psi."""
    g = alg.metric if g is None else np.asarray(g, dtype=float)
    forms = closed_forms(alg, 4)
    u = _contraction_rows(forms, np.asarray(x, dtype=float), star_with=(g, 1))
    worst = triple_wedge_max(u)
    obstructed = worst < tol
    return ObstructionResult(obstructed=obstructed,
                             witness_vector=np.asarray(x, dtype=float) if obstructed else None,
                             max_tensor_norm=worst, basis_dim=len(forms))


@dataclass
class Tau3Report:
    obstructed: bool
    basis_dim: int
    best_residual: float
    witness: np.ndarray | None
    per_start: list = field(default_factory=list)


def tau3_obstruction(alg: LieAlgebra, g: np.ndarray | None = None, *,
                     starts: int = 30, seed: int = 0, max_iters: int = 120,
                     threshold: float = 1e-6) -> Tau3Report:
    """Decide whether tau3 ^ phi = 0 = tau3 ^ *phi forces a coclosed phi to vanish.

    tau3 is taken in the computable form -*(d phi - tau0 *phi) with
    tau0 = (d phi ^ phi)_top / |phi|^2; both conditions are scaled by |phi|^2
    and minimized over the unit sphere of the coclosed coefficient space.
    """
    g = alg.metric if g is None else np.asarray(g, dtype=float)
    basis = coclosed_forms(alg, 3, g)
    m = len(basis)
    phi_mat = np.array([dense.to_vector(b) for b in basis])      # (m, 35)
    d3 = alg.d_matrix(3)                                          # 3-forms -> 4-forms
    s34 = dense.star_matrix(7, 3, g, 1)                           # 3-forms -> 4-forms
    s43 = dense.star_matrix(7, 4, g, 1)                           # 4-forms -> 3-forms
    pair4 = dense.top_pairing(7, 4)                               # 4-form vs 3-form
    pair3 = dense.top_pairing(7, 3)                               # 3-form vs 4-form
    w33 = dense.wedge_tensor(7, 3, 3)                             # 3 ^ 3 -> 6
    gram = phi_mat @ dense.gram_matrix(7, 3, g) @ phi_mat.T

    dmat = d3 @ phi_mat.T        # (35, m): rho -> d phi
    smat = s34 @ phi_mat.T       # (35, m): rho -> *phi

    def residuals(rho: np.ndarray) -> np.ndarray:
        # evaluated on the unit sphere: homogeneity makes the verdict scale-free
        rho = rho / np.linalg.norm(rho)
        phi = phi_mat.T @ rho
        dphi = dmat @ rho
        sphi = smat @ rho
        q = float(rho @ gram @ rho)
        t0n = float(dphi @ pair4 @ phi)
        tau3q = -(s43 @ (q * dphi - t0n * sphi))
        r6 = np.einsum("xyk,x,y->k", w33, tau3q, phi)
        r7 = float(tau3q @ pair3 @ sphi)
        return np.concatenate([r6, [r7]])

    rng = np.random.default_rng(seed)
    best = np.inf
    witness = None
    per_start = []
    h = 1e-6
    for s in range(starts):
        rho = rng.standard_normal(m)
        rho /= np.linalg.norm(rho)
        r = residuals(rho)
        cost = float(r @ r)
        lam = 1e-3
        for _ in range(max_iters):
            jac = np.empty((r.size, m))
            for d in range(m):
                step = np.zeros(m)
                step[d] = h
                jac[:, d] = (residuals(rho + step) - residuals(rho - step)) / (2 * h)
            a = jac.T @ jac
            grad = jac.T @ r
            improved = False
            for _trial in range(10):
                try:
                    delta = np.linalg.solve(a + lam * np.diag(np.diag(a)) + 1e-14 * np.eye(m), -grad)
                except np.linalg.LinAlgError:
                    lam *= 10
                    continue
                rho_t = rho + delta
                rho_t /= np.linalg.norm(rho_t)
                r_t = residuals(rho_t)
                cost_t = float(r_t @ r_t)
                if cost_t < cost:
                    drop = cost - cost_t
                    rho, r, cost = rho_t, r_t, cost_t
                    lam = max(lam * 0.3, 1e-12)
                    improved = drop > 1e-14 * max(cost, 1e-30)
                    break
                lam *= 10
            if not improved or cost < 1e-26:
                break
        cond_res = float(np.max(np.abs(r)))
        per_start.append({"start": s, "residual": cond_res})
        if cond_res < best:
            best = cond_res
            witness = rho / np.linalg.norm(rho)
    obstructed = best > threshold
    return Tau3Report(obstructed=obstructed, basis_dim=m, best_residual=float(best),
                      witness=None if obstructed else witness, per_start=per_start)
