"""SU(3)- and SU(2)-structure reductions and the almost-Hermitian toolkit.

A G2-structure contracted along a unit vector A yields an SU(3)-structure
(F, psi+, psi-) on the orthogonal complement; contracting that along a unit
e6 yields an SU(2)-structure (eta, omega1, omega2, omega3) on the remaining
five directions.  Both constructions assert their defining invariants, so a
bad input fails loudly rather than propagating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dense
from .curvature import einstein_check
from .exterior import EPS, Form, contract, hodge, musical_flat, wedge, wedge_all
from .liealg import LieAlgebra


@dataclass
class SU3Data:
    F: Form
    psi_plus: Form
    psi_minus: Form
    h6: np.ndarray
    frame: np.ndarray        # (ambient_dim, 6) columns spanning the complement
    orientation: int = 1

    @classmethod
    def from_forms(cls, F: Form, psi_plus: Form, psi_minus: Form,
                   h6: np.ndarray | None = None, orientation: int = 1) -> "SU3Data":
        h6 = np.eye(6) if h6 is None else np.asarray(h6, dtype=float)
        return cls(F, psi_plus, psi_minus, h6, np.eye(6), orientation)


@dataclass
class SU2Data:
    eta: Form
    omega1: Form
    omega2: Form
    omega3: Form
    h5: np.ndarray
    v: Form                  # the common 4-form omega_i ^ omega_i
    frame: np.ndarray        # (6, 5) columns inside the SU(3) coordinates
    orientation: int = 1


@dataclass
class AlmostHermitian:
    J: np.ndarray
    F: Form
    g: np.ndarray


@dataclass
class NijenhuisTensor:
    values: np.ndarray       # values[i, j] = N(e_{i+1}, e_{j+1}) as a vector

    def component(self, i: int, j: int) -> np.ndarray:
        return self.values[i - 1, j - 1]

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.values)))


def _pullback(form: Form, frame: np.ndarray) -> Form:
    """Restrict a p-form to the span of the frame columns (multilinear eval)."""
    k = frame.shape[1]
    p = form.grade
    if p == 0:
        return Form(k, 0, {(): next(iter(form.terms.values()), 0.0)} if form.terms else {})
    terms: dict[tuple[int, ...], float] = {}
    for key in dense.basis_tuples(k, p):
        vecs = [frame[:, i - 1] for i in key]
        val = _eval_form(form, vecs)
        if abs(val) > EPS:
            terms[key] = val
    return Form(k, p, terms)


def _eval_form(form: Form, vecs: list[np.ndarray]) -> float:
    # form(v1, ..., vp) = i_{vp} ... i_{v1} form
    out = form
    for v in vecs:
        if out.grade == 0:
            return 0.0
        out = contract(v, out)
    return next(iter(out.terms.values()), 0.0)


def _complement_frame(g: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Columns spanning the g-orthogonal complement of a, built from the
    standard basis with the direction closest to a dropped."""
    n = a.shape[0]
    drop = int(np.argmax(np.abs(a)))
    cols = []
    gaa = float(a @ g @ a)
    for i in range(n):
        if i == drop:
            continue
        e = np.eye(n)[i]
        cols.append(e - (float(e @ g @ a) / gaa) * a)
    return np.array(cols).T


def su3_from_g2(alg: LieAlgebra, g2, a: np.ndarray, tol: float = 1e-8) -> SU3Data:
    """F = i_A phi, psi+ = phi - F ^ A-flat, psi- = *_6 psi+ on the complement."""
    a = np.asarray(a, dtype=float)
    g = g2.metric
    norm2 = float(a @ g @ a)
    if norm2 <= EPS:
        raise ValueError("contraction direction has nonpositive length")
    a = a / np.sqrt(norm2)
    phi = g2.phi
    f_amb = contract(a, phi)
    psi_amb = phi - wedge(f_amb, musical_flat(a, g))
    frame = _complement_frame(g, a)
    h6 = frame.T @ g @ frame
    o6 = g2.orientation * int(np.sign(np.linalg.det(np.column_stack([frame, a]))))
    f6 = _pullback(f_amb, frame)
    psi_plus = _pullback(psi_amb, frame)
    psi_minus = hodge(psi_plus, h6, o6)
    data = SU3Data(f6, psi_plus, psi_minus, h6, frame, o6)
    _assert_su3(data, tol)
    return data


def _assert_su3(data: SU3Data, tol: float = 1e-8) -> None:
    mix = wedge(data.F, data.psi_plus)
    if mix.norm_inf() > tol:
        raise ValueError(f"F ^ psi+ = {mix.norm_inf():.2e} != 0")
    f3 = wedge_all([data.F, data.F, data.F])
    pp = wedge(data.psi_plus, data.psi_minus)
    gap = (pp - (2.0 / 3.0) * f3).norm_inf()
    if gap > tol * max(1.0, f3.norm_inf()):
        raise ValueError(f"psi+ ^ psi- != (2/3) F^3 (gap {gap:.2e})")
    if f3.norm_inf() <= tol:
        raise ValueError("F^3 vanishes")
    np.linalg.cholesky(data.h6)


def su3_necessary_checks(F: Form, psi_plus: Form, tol: float = EPS) -> bool:
    """The pruning predicate F^3 != 0 and F ^ psi+ = 0."""
    f3 = wedge_all([F, F, F])
    return f3.norm_inf() > tol and wedge(F, psi_plus).norm_inf() <= tol


def su2_from_su3(su3: SU3Data, e6: np.ndarray, tol: float = 1e-8,
                 positivity_samples: int = 100, seed: int = 0) -> SU2Data:
    """eta = -i_{e6} F, omega1 = F - eta ^ e6-flat, omega2 = i_{e6} psi-,
    omega3 = -i_{e6} psi+; all restricted to the h6-complement of e6."""
    e6 = np.asarray(e6, dtype=float)
    coeff, res, *_ = np.linalg.lstsq(su3.frame, e6, rcond=None)
    gap = float(np.max(np.abs(su3.frame @ coeff - e6)))
    if gap > tol:
        raise ValueError("e6 lies outside the SU(3) frame span")
    norm2 = float(coeff @ su3.h6 @ coeff)
    if norm2 <= EPS:
        raise ValueError("e6 has nonpositive length")
    coeff = coeff / np.sqrt(norm2)

    eta6 = -1.0 * contract(coeff, su3.F)
    omega1_6 = su3.F - wedge(eta6, musical_flat(coeff, su3.h6))
    omega2_6 = contract(coeff, su3.psi_minus)
    omega3_6 = -1.0 * contract(coeff, su3.psi_plus)

    frame5 = _complement_frame(su3.h6, coeff)
    h5 = frame5.T @ su3.h6 @ frame5
    o5 = su3.orientation * int(np.sign(np.linalg.det(np.column_stack([frame5, coeff]))))
    eta = _pullback(eta6, frame5)
    omegas = [_pullback(w, frame5) for w in (omega1_6, omega2_6, omega3_6)]
    v = wedge(omegas[0], omegas[0])
    data = SU2Data(eta, *omegas, h5=h5, v=v, frame=frame5, orientation=o5)
    _assert_su2(data, tol, positivity_samples, seed)
    return data


def _assert_su2(data: SU2Data, tol: float, samples: int, seed: int) -> None:
    oms = [data.omega1, data.omega2, data.omega3]
    scale = max(1.0, data.v.norm_inf())
    for i in range(3):
        for j in range(i, 3):
            target = data.v if i == j else Form(5, 4)
            gap = (wedge(oms[i], oms[j]) - target).norm_inf()
            if gap > tol * scale:
                raise ValueError(f"omega_{i+1} ^ omega_{j+1} breaks the delta_ij pattern "
                                 f"(gap {gap:.2e})")
    if wedge(data.v, data.eta).norm_inf() <= tol:
        raise ValueError("v ^ eta vanishes")
    np.linalg.cholesky(data.h5)
    # sampled positivity: i_X omega3 = i_Y omega1  =>  omega2(X, Y) >= 0
    w1 = _contraction_map(data.omega1)
    w3 = _contraction_map(data.omega3)
    null = dense.nullspace(np.hstack([w3, -w1]))
    if null.shape[0]:
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            z = rng.standard_normal(null.shape[0]) @ null
            x, y = z[:5], z[5:]
            val = _eval_form(data.omega2, [x, y])
            if val < -tol * max(1.0, float(np.linalg.norm(x) * np.linalg.norm(y))):
                raise ValueError(f"omega2 positivity fails on a sampled pair ({val:.2e})")


def _contraction_map(omega: Form) -> np.ndarray:
    """Matrix of X -> i_X omega as (covector components) x (vector components)."""
    n = omega.dim
    out = np.zeros((n, n))
    for i in range(n):
        out[:, i] = dense.to_vector(contract(np.eye(n)[i], omega))
    return out


def su2_obstruction(su2: SU2Data, tol: float = EPS) -> tuple[bool, str | None]:
    """Check the two SU(2) compatibility conditions; True means obstructed."""
    oms = [su2.omega1, su2.omega2, su2.omega3]
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            gap = wedge(wedge(oms[i], oms[i]) - wedge(oms[j], oms[j]), su2.eta)
            if gap.norm_inf() > tol:
                return True, f"(omega{i+1}^2 - omega{j+1}^2) ^ eta != 0"
    for i in range(3):
        lhs = wedge(oms[i], su2.eta)
        rhs = hodge(oms[i], su2.h5, su2.orientation)
        if (lhs - rhs).norm_inf() > tol:
            return True, f"omega{i+1} ^ eta != *omega{i+1}"
    return False, None


def nijenhuis(alg: LieAlgebra, j: np.ndarray, tol: float = 1e-9) -> NijenhuisTensor:
    """N(X,Y) = [X,Y] + J[JX,Y] + J[X,JY] - [JX,JY]."""
    j = np.asarray(j, dtype=float)
    n = alg.dim
    if j.shape != (n, n) or np.max(np.abs(j @ j + np.eye(n))) > tol:
        raise ValueError("J does not square to -identity")
    values = np.zeros((n, n, n))
    eye = np.eye(n)
    for a in range(n):
        for b in range(a + 1, n):
            x, y = eye[a], eye[b]
            val = (alg.bracket(x, y) + j @ alg.bracket(j @ x, y)
                   + j @ alg.bracket(x, j @ y) - alg.bracket(j @ x, j @ y))
            values[a, b] = val
            values[b, a] = -val
    return NijenhuisTensor(values)


def kahler_check(alg: LieAlgebra, ah: AlmostHermitian, tol: float = 1e-8) -> dict[str, bool]:
    """Flags: dF = 0, g = F(.,J.), N_J = 0, and g Einstein."""
    n = alg.dim
    f_mat = np.zeros((n, n))
    for (i, j_), v in ah.F.terms.items():
        f_mat[i - 1, j_ - 1] = v
        f_mat[j_ - 1, i - 1] = -v
    compatible = bool(np.max(np.abs(ah.J @ ah.J + np.eye(n))) < tol
                      and np.max(np.abs(f_mat @ ah.J - ah.g)) < tol)
    symplectic = bool(alg.d(ah.F).norm_inf() < tol)
    integrable = bool(compatible and nijenhuis(alg, ah.J).norm_inf() < tol)
    einstein = bool(einstein_check(alg, ah.g)[0])
    return {"symplectic": symplectic, "compatible": compatible,
            "integrable": integrable, "einstein": einstein}
