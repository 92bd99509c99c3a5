"""Parametrized form spaces and the Einstein-compatibility search.

The search works on the unnormalized bilinear form: with phi(rho) running
over a basis of closed (or coclosed) 3-forms, the entries of
B(rho) = g * sqrt(det g) are exact cubics in rho, and the Einstein
compatibility system is B(rho) = kappa * I over the active entry set
(dropping entries reproduces the solve-48-of-49 variant).  Found outcomes
are always re-verified end-to-end through the sparse pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from . import dense
from ._kernels import lm_multistart, triple_wedge_max
from .exterior import Form, contract, hodge
from .g2 import obstruction_closed, obstruction_coclosed, tau3_obstruction, try_metric_from_3form
from .liealg import LieAlgebra, closed_forms, coclosed_forms

KAPPA_FLOOR = 0.25


@dataclass
class ParametrizedForm:
    basis: list[Form]
    coeff_names: list[str]
    kind: str                   # "closed" or "coclosed"
    alg: LieAlgebra
    metric: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.basis)

    def matrix(self) -> np.ndarray:
        return np.array([dense.to_vector(b) for b in self.basis])

    def instantiate(self, rho: np.ndarray) -> Form:
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (len(self.basis),):
            raise ValueError("coefficient vector has wrong length")
        out = Form(7, 3)
        for c, b in zip(rho, self.basis):
            out = out + float(c) * b
        return out


def generic_closed_3form(alg: LieAlgebra) -> ParametrizedForm:
    basis = closed_forms(alg, 3)
    return ParametrizedForm(basis, [f"r{i+1}" for i in range(len(basis))], "closed", alg)


def generic_coclosed_3form(alg: LieAlgebra, g: np.ndarray | None = None) -> ParametrizedForm:
    g = alg.metric if g is None else np.asarray(g, dtype=float)
    basis = coclosed_forms(alg, 3, g)
    return ParametrizedForm(basis, [f"r{i+1}" for i in range(len(basis))], "coclosed", alg, g)


ALL_PAIRS = tuple((i, j) for i in range(1, 8) for j in range(i, 8))


@dataclass
class MetricSystem:
    pf: ParametrizedForm
    pairs: tuple[tuple[int, int], ...]
    cubic: np.ndarray            # (n_eq, m, m, m), symmetric in the last three axes
    diag_mask: np.ndarray        # 1.0 where the pair is diagonal

    @property
    def n_equations(self) -> int:
        return len(self.pairs)

    def residual(self, rho: np.ndarray, kappa: float) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        vals = np.einsum("eabc,a,b,c->e", self.cubic, rho, rho, rho)
        return vals - kappa * self.diag_mask

    def bilinear(self, rho: np.ndarray) -> np.ndarray:
        """Full B(rho) matrix through the sparse pipeline (validation path)."""
        from .g2 import induced_bilinear
        return induced_bilinear(self.pf.instantiate(rho))

    def drop(self, *dropped: tuple[int, int]) -> "MetricSystem":
        dropped_set = {tuple(sorted(p)) for p in dropped}
        keep = [k for k, p in enumerate(self.pairs) if p not in dropped_set]
        return MetricSystem(self.pf, tuple(self.pairs[k] for k in keep),
                            self.cubic[keep], self.diag_mask[keep])


def assemble_einstein_system(alg: LieAlgebra, pf: ParametrizedForm) -> MetricSystem:
    """Cubic tensor of B(rho)_{ij} - kappa delta_{ij} over all 28 entries i <= j."""
    phi_mat = pf.matrix()                        # (m, 35)
    m = phi_mat.shape[0]
    w4 = dense.wedge_tensor(7, 2, 2)             # (21, 21, 35)
    pair4 = dense.top_pairing(7, 4)              # (35_4, 35_3)
    v = phi_mat @ pair4.T                        # (m, 35_4)
    u = [phi_mat @ dense.contraction_matrix(7, 3, i + 1).T for i in range(7)]
    cubic = np.empty((len(ALL_PAIRS), m, m, m))
    for e, (i, j) in enumerate(ALL_PAIRS):
        half = np.einsum("ax,xyK->ayK", u[i - 1], w4)
        both = np.einsum("ayK,by->abK", half, u[j - 1])
        raw = np.einsum("abK,cK->abc", both, v) / 6.0
        sym = np.zeros_like(raw)
        for p in permutations((0, 1, 2)):
            sym += raw.transpose(p)
        cubic[e] = sym / 6.0
    diag = np.array([1.0 if i == j else 0.0 for (i, j) in ALL_PAIRS])
    return MetricSystem(pf, ALL_PAIRS, cubic, diag)


@dataclass
class SearchConfig:
    starts: int = 100
    seed: int = 0
    tol: float = 1e-10
    max_iters: int = 80


@dataclass
class SearchOutcome:
    status: str                  # "found" | "not_found"
    best_residual: float
    rho: np.ndarray | None
    kappa: float | None
    per_start: list = field(default_factory=list)
    validation: dict = field(default_factory=dict)


def _validate_candidate(system: MetricSystem, rho: np.ndarray, kappa: float,
                        tol: float = 1e-6) -> dict:
    """Re-verify a candidate end-to-end through the sparse pipeline."""
    pf = system.pf
    phi = pf.instantiate(rho)
    out: dict = {"positive_definite": False, "metric_matches": False,
                 "differential_closes": False}
    if pf.kind == "closed":
        out["differential_closes"] = pf.alg.d(phi).norm_inf() < 1e-8
    else:
        g = pf.metric if pf.metric is not None else pf.alg.metric
        out["differential_closes"] = pf.alg.d(hodge(phi, g, 1)).norm_inf() < 1e-8
    status, g2 = try_metric_from_3form(phi)
    if status != "ok":
        out["metric_status"] = status
        return out
    out["positive_definite"] = True
    b = g2.b_matrix
    scale = max(1.0, abs(kappa))
    worst = 0.0
    for (i, j) in system.pairs:
        target = kappa if i == j else 0.0
        worst = max(worst, abs(b[i - 1, j - 1] - target) / scale)
    out["metric_matches"] = worst < tol
    out["active_entry_gap"] = worst
    out["b_matrix"] = b
    return out


def least_squares_search(system: MetricSystem, cfg: SearchConfig | None = None) -> SearchOutcome:
    """Deterministic multistart damped Gauss-Newton on B(rho) = kappa I."""
    cfg = cfg or SearchConfig()
    m = system.pf.dim
    rho0 = np.empty((cfg.starts, m))
    kappa0 = np.empty(cfg.starts)
    for s in range(cfg.starts):
        rng = np.random.default_rng(cfg.seed + s)
        r = rng.standard_normal(m)
        r /= np.linalg.norm(r)
        rho0[s] = r
        diag = np.einsum("eabc,a,b,c->e", system.cubic, r, r, r)[system.diag_mask > 0]
        kappa0[s] = max(float(np.median(diag)), KAPPA_FLOOR + 1e-2)
    res, sols, iters = lm_multistart(
        np.ascontiguousarray(system.cubic), system.diag_mask, rho0, kappa0,
        cfg.max_iters, cfg.tol, KAPPA_FLOOR)
    per_start = [{"start": s, "seed": cfg.seed + s, "residual": float(res[s]),
                  "iterations": int(iters[s])} for s in range(cfg.starts)]
    order = sorted(range(cfg.starts), key=lambda s: (res[s], s))
    for s in order:
        if res[s] >= cfg.tol:
            break
        rho, kappa = sols[s, :m], float(sols[s, m])
        val = _validate_candidate(system, rho, kappa)
        if val["positive_definite"] and val["metric_matches"] and val["differential_closes"]:
            return SearchOutcome("found", float(res[s]), rho, kappa, per_start, val)
    best = order[0]
    return SearchOutcome("not_found", float(res[best]), None, None, per_start, {})


@dataclass
class SweepRecord:
    name: str
    verdict: str                 # "obstructed" | "not_found" | "found"
    decided_by: str
    details: dict = field(default_factory=dict)


def sweep_obstructions(algebras, mode: str, cfg: SearchConfig | None = None,
                       tau3_starts: int = 12) -> list[SweepRecord]:
    """Run the obstruction cascade per algebra, in order: contraction lemma
    over the basis vectors, tau3 (cocalibrated only), the SU(3) degeneracy
    check on the parametrized form, and the Einstein system search last."""
    if mode not in ("calibrated", "cocalibrated"):
        raise ValueError("mode must be 'calibrated' or 'cocalibrated'")
    records = []
    for alg in algebras:
        rec = _sweep_one(alg, mode, cfg, tau3_starts)
        records.append(rec)
    return records


def _sweep_one(alg: LieAlgebra, mode: str, cfg: SearchConfig | None,
               tau3_starts: int) -> SweepRecord:
    for i in range(7):
        x = np.eye(7)[i]
        r = (obstruction_closed(alg, x) if mode == "calibrated"
             else obstruction_coclosed(alg, None, x))
        if r.obstructed:
            return SweepRecord(alg.name, "obstructed", "vector_obstruction",
                               {"vector": f"e{i+1}", "basis_dim": r.basis_dim})
    if mode == "cocalibrated":
        rep = tau3_obstruction(alg, starts=tau3_starts)
        if rep.obstructed:
            return SweepRecord(alg.name, "obstructed", "tau3",
                               {"best_residual": rep.best_residual,
                                "basis_dim": rep.basis_dim})
    pf = generic_closed_3form(alg) if mode == "calibrated" else generic_coclosed_3form(alg)
    u7 = np.array([dense.to_vector(contract(np.eye(7)[6], b)) for b in pf.basis])
    if triple_wedge_max(u7) < 1e-9:
        return SweepRecord(alg.name, "obstructed", "su3_degenerate",
                           {"vector": "e7", "basis_dim": pf.dim})
    outcome = least_squares_search(assemble_einstein_system(alg, pf), cfg)
    return SweepRecord(alg.name, outcome.status,
                       "einstein_system_search",
                       {"best_residual": outcome.best_residual,
                        "basis_dim": pf.dim,
                        "kappa": outcome.kappa})
