"""Named verification suites and the report container.

Each suite replays one block of catalog facts and returns a list of check
records; the CLI assembles them into a Report.  Exit status is pass iff no
record fails ("info" records carry observations with no pinned expectation).
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from importlib import resources

import numpy as np

from . import __version__
from .catalog import Catalog, instantiate
from .curvature import einstein_check, flatness_check, ricci, solvsoliton_solve
from .exterior import parse_form
from .g2 import (metric_from_3form, obstruction_closed, obstruction_coclosed,
                 tau3_obstruction, torsion_classes, try_metric_from_3form)
from .liealg import closed_forms, jacobi_check
from .reductions import AlmostHermitian, kahler_check, nijenhuis
from .solver import (SearchConfig, assemble_einstein_system, generic_closed_3form,
                     generic_coclosed_3form, least_squares_search)

JACOBI_TOL = 1e-9
EINSTEIN_TOL = 1e-8
TABLE3_METRIC_TOL = 1e-9


@dataclass
class RunConfig:
    seed: int = 7
    jobs: int = 1
    tol: float | None = None
    starts: int = 100
    sweep_starts: int = 40


@dataclass
class CheckRecord:
    name: str
    source: str
    verdict: str                      # "pass" | "fail" | "info"
    residuals: dict = field(default_factory=dict)
    runtime: float = 0.0


@dataclass
class Report:
    version: str
    catalog_hash: str
    config: dict
    records: list[CheckRecord]

    @property
    def ok(self) -> bool:
        return all(r.verdict != "fail" for r in self.records)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, default=_scrub)

    def to_markdown(self) -> str:
        lines = [f"# verification report (g2forge {self.version})",
                 f"catalog sha256: `{self.catalog_hash}`", "",
                 "| check | source | verdict | details |", "|---|---|---|---|"]
        for r in self.records:
            details = ", ".join(f"{k}={_fmt(v)}" for k, v in r.residuals.items())
            lines.append(f"| {r.name} | {r.source} | {r.verdict} | {details} |")
        lines.append("")
        lines.append(f"overall: {'pass' if self.ok else 'FAIL'}")
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def _scrub(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return str(obj)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _run(tasks, jobs: int) -> list[CheckRecord]:
    if jobs <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: t(), tasks))


def load_structures() -> dict:
    path = resources.files("g2forge").joinpath("data/structures.json")
    return json.loads(path.read_text())


def load_calibrated_forms() -> dict:
    path = resources.files("g2forge").joinpath("data/calibrated_forms.json")
    return json.loads(path.read_text())


# ---------------------------------------------------------------- table suites

def _einstein_record(catalog: Catalog, name: str) -> CheckRecord:
    entry = catalog[name]

    def body():
        alg = instantiate(entry)
        ok_j, res_j = jacobi_check(alg, JACOBI_TOL)
        rep = ricci(alg)
        ok_e = rep.einstein_residual < EINSTEIN_TOL and rep.einstein_lambda < 0
        flat, max_riem = flatness_check(alg)
        verdict = "pass" if (ok_j and ok_e and not flat) else "fail"
        return CheckRecord(name, entry.source, verdict, {
            "jacobi_residual": res_j,
            "einstein_lambda": rep.einstein_lambda,
            "einstein_residual": rep.einstein_residual,
            "ricci_method_gap": rep.method_gap,
            "max_riemann": max_riem,
        })
    rec, dt = _timed(body)
    rec.runtime = dt
    return rec


def suite_table1(catalog: Catalog, cfg: RunConfig) -> list[CheckRecord]:
    names = [f"k{i}" for i in range(1, 9)]
    return _run([lambda n=n: _einstein_record(catalog, n) for n in names], cfg.jobs)


def suite_table2(catalog: Catalog, cfg: RunConfig) -> list[CheckRecord]:
    names = [f"g{i}" for i in range(1, 34)]
    return _run([lambda n=n: _einstein_record(catalog, n) for n in names], cfg.jobs)


def suite_table3(catalog: Catalog, cfg: RunConfig) -> list[CheckRecord]:
    forms = load_calibrated_forms()
    records = []
    for name, rec_data in forms.items():
        def body(name=name, rec_data=rec_data):
            alg = instantiate(catalog[name])
            phi = parse_form(rec_data["form"], 7)
            d_res = alg.d(phi).norm_inf()
            status, g2 = try_metric_from_3form(phi)
            ok = d_res < JACOBI_TOL and status == "ok"
            residuals = {"d_phi": d_res, "metric_status": status}
            if name == "g28" and g2 is not None:
                gap = float(np.max(np.abs(g2.b_matrix - np.diag([2, 2, 2, 2, 2, 2, 8.0]))))
                residuals["b_matrix_gap"] = gap
                ok = ok and gap < TABLE3_METRIC_TOL
            return CheckRecord(f"calibrated-form {name}", rec_data["source"],
                               "pass" if ok else "fail", residuals)
        rec, dt = _timed(body)
        rec.runtime = dt
        records.append(rec)
    return records


# ------------------------------------------------------------- obstruction suites

CLOSED_EXCEPTIONS = ("g1", "g4", "g9", "g18", "g28")
COCLOSED_VECTOR_SET = ("g3", "g13", "g23", "g25", "g26", "g27", "g28",
                       "g29", "g30", "g31", "g32", "g33")
TAU3_SET = ("g1", "g2", "g4", "g5", "g6", "g20")
COCLOSED_SEARCH_SET = ("g7", "g8", "g9", "g10", "g12", "g14", "g15", "g16",
                       "g17", "g18", "g19", "g21", "g22", "g24")


def suite_closed_obstructions(catalog: Catalog, cfg: RunConfig) -> list[CheckRecord]:
    """Contraction obstruction with X = e6 decides every Table 2 algebra
    except the five admitting calibrated forms; on those no basis X works."""
    records = []
    for i in range(1, 34):
        name = f"g{i}"

        def body(name=name):
            alg = instantiate(catalog[name])
            r6 = obstruction_closed(alg, np.eye(7)[5])
            expected = name not in CLOSED_EXCEPTIONS
            ok = r6.obstructed == expected
            residuals = {"e6_obstructed": r6.obstructed,
                         "max_tensor_norm": r6.max_tensor_norm,
                         "basis_dim": r6.basis_dim}
            if name in CLOSED_EXCEPTIONS:
                hits = [j + 1 for j in range(7)
                        if obstruction_closed(alg, np.eye(7)[j]).obstructed]
                residuals["obstructing_vectors"] = hits
                ok = ok and not hits
            return CheckRecord(f"closed-obstruction {name}", catalog[name].source,
                               "pass" if ok else "fail", residuals)
        rec, dt = _timed(body)
        rec.runtime = dt
        records.append(rec)
    return records


def suite_coclosed_obstructions(catalog: Catalog, cfg: RunConfig) -> list[CheckRecord]:
    """The full cocalibrated story for Table 2: the e7-contraction obstruction
    decides its pinned set, and the remaining algebras (the tau3 set aside)
    end not-found on the coclosed Einstein system."""
    records = []
    for i in range(1, 34):
        name = f"g{i}"

        def body(name=name):
            alg = instantiate(catalog[name])
            r = obstruction_coclosed(alg, None, np.eye(7)[6])
            expected = name in COCLOSED_VECTOR_SET
            return CheckRecord(
                f"coclosed-obstruction {name}", catalog[name].source,
                "pass" if r.obstructed == expected else "fail",
                {"e7_obstructed": r.obstructed, "max_tensor_norm": r.max_tensor_norm,
                 "basis_dim": r.basis_dim})
        rec, dt = _timed(body)
        rec.runtime = dt
        records.append(rec)
    for name in COCLOSED_SEARCH_SET:
        def body(name=name):
            alg = instantiate(catalog[name])
            out = least_squares_search(
                assemble_einstein_system(alg, generic_coclosed_3form(alg)),
                SearchConfig(starts=cfg.sweep_starts, seed=cfg.seed))
            return CheckRecord(f"cocalibrated-search {name}", catalog[name].source,
                               "pass" if out.status == "not_found" else "fail",
                               {"status": out.status,
                                "best_residual": out.best_residual})
        rec, dt = _timed(body)
        rec.runtime = dt
        records.append(rec)
    return records


def suite_tau3(catalog: Catalog, cfg: RunConfig) -> list[CheckRecord]:
    records = []
    for name in TAU3_SET:
        def body(name=name):
            rep = tau3_obstruction(instantiate(catalog[name]), seed=cfg.seed)
            return CheckRecord(f"tau3 {name}", catalog[name].source,
                               "pass" if rep.obstructed else "fail",
                               {"best_residual": rep.best_residual,
                                "basis_dim": rep.basis_dim})
        rec, dt = _timed(body)
        rec.runtime = dt
        records.append(rec)
    # g11 sits in none of the proof's lists: run all three procedures, report
    def g11_body():
        alg = instantiate(catalog["g11"])
        vec = obstruction_coclosed(alg, None, np.eye(7)[6])
        tau = tau3_obstruction(alg, seed=cfg.seed)
        search = least_squares_search(
            assemble_einstein_system(alg, generic_coclosed_3form(alg)),
            SearchConfig(starts=cfg.sweep_starts, seed=cfg.seed))
        return CheckRecord("tau3 g11 (no pinned expectation)", catalog["g11"].source,
                           "info",
                           {"vector_e7_obstructed": vec.obstructed,
                            "tau3_obstructed": tau.obstructed,
                            "tau3_best_residual": tau.best_residual,
                            "search_status": search.status,
                            "search_best_residual": search.best_residual})
    rec, dt = _timed(g11_body)
    rec.runtime = dt
    records.append(rec)
    return records


# ------------------------------------------------------------------ other suites

def suite_example_soliton(catalog: Catalog, cfg: RunConfig) -> list[CheckRecord]:
    def body():
        alg = instantiate(catalog["soliton7"])
        phi = parse_form("-e{1,3,6} + e{1,4,5} + e{2,3,5} + e{2,4,6} + e{5,6,7}"
                         " - e{1,2,7} - e{3,4,7}", 7)
        d_res = alg.d(phi).norm_inf()
        g2 = metric_from_3form(phi)
        metric_gap = float(np.max(np.abs(g2.metric - np.eye(7))))
        dstar = alg.d(g2.star(phi)).norm_inf()
        tc = torsion_classes(alg, g2)
        cert = solvsoliton_solve(alg)
        ok = (d_res < JACOBI_TOL and metric_gap < TABLE3_METRIC_TOL and dstar > 1e-6
              and abs(tc.tau0) < 1e-8 and tc.tau1.norm_inf() < 1e-8
              and tc.tau3.norm_inf() < 1e-8 and tc.tau2.norm_inf() > 1e-6
              and cert is not None and cert.lam < 0 and cert.residual < EINSTEIN_TOL
              and float(np.max(np.abs(cert.derivation))) > 1e-6)
        residuals = {"d_phi": d_res, "metric_gap": metric_gap, "d_star_phi": dstar,
                     "tau0": tc.tau0, "tau1": tc.tau1.norm_inf(),
                     "tau2": tc.tau2.norm_inf(), "tau3": tc.tau3.norm_inf()}
        if cert is not None:
            residuals.update({"soliton_lambda": cert.lam,
                              "soliton_residual": cert.residual,
                              "derivation_norm": float(np.max(np.abs(cert.derivation)))})
        return CheckRecord("calibrated ricci-soliton example",
                           catalog["soliton7"].source, "pass" if ok else "fail", residuals)
    rec, dt = _timed(body)
    rec.runtime = dt
    return [rec]


def suite_section3(catalog: Catalog, cfg: RunConfig) -> list[CheckRecord]:
    from ._kernels import triple_wedge_max
    from . import dense
    from .exterior import contract

    structures = load_structures()
    records = []

    def structure_record(key, expect_flags, nijenhuis_checks=()):
        data = structures[key]
        alg = instantiate(catalog[data["algebra"]], data.get("bindings") or None)
        jmat = np.array(data["J"])
        residuals = {}
        ok = True
        if "F" in data:
            ah = AlmostHermitian(jmat, parse_form(data["F"], alg.dim), np.eye(alg.dim))
            flags = kahler_check(alg, ah)
            residuals.update(flags)
            ok = flags == expect_flags
        n = nijenhuis(alg, jmat)
        residuals["nijenhuis_norm"] = n.norm_inf()
        if expect_flags is not None and expect_flags.get("integrable"):
            ok = ok and n.norm_inf() < 1e-9
        if expect_flags is None:
            ok = n.norm_inf() < 1e-9
        for (i, j, expected) in nijenhuis_checks:
            gap = float(np.max(np.abs(n.component(i, j) - expected)))
            residuals[f"N(e{i},e{j})_gap"] = gap
            ok = ok and gap < 1e-9
        return CheckRecord(f"structure {key}", data["source"],
                           "pass" if ok else "fail", residuals)

    for body in (
        lambda: structure_record("k4", {"symplectic": True, "compatible": True,
                                        "integrable": True, "einstein": True}),
        lambda: structure_record(
            "ak6", {"symplectic": True, "compatible": True,
                    "integrable": False, "einstein": True},
            nijenhuis_checks=[(1, 2, -np.sqrt(5.0) * np.eye(6)[2]),
                              (1, 5, np.eye(6)[0]),
                              (1, 6, -2.0 * np.eye(6)[0])]),
        lambda: structure_record("ke6r2", {"symplectic": True, "compatible": True,
                                           "integrable": True, "einstein": True}),
        lambda: structure_record("ke6r3", None),
    ):
        rec, dt = _timed(body)
        rec.runtime = dt
        records.append(rec)

    # k1 and k5..k8 admit no symplectic form: F^3 vanishes identically on Z^2
    for name in ("k1", "k5", "k6", "k7", "k8"):
        def body(name=name):
            alg = instantiate(catalog[name])
            z2 = closed_forms(alg, 2)
            u = np.array([dense.to_vector(b) for b in z2])
            worst = triple_wedge_max(u, 6)
            return CheckRecord(f"no-symplectic {name}", catalog[name].source,
                               "pass" if worst < 1e-9 else "fail",
                               {"max_f3": worst, "z2_dim": len(z2)})
        rec, dt = _timed(body)
        rec.runtime = dt
        records.append(rec)
    return records


def suite_g28_worked(catalog: Catalog, cfg: RunConfig) -> list[CheckRecord]:
    records = []
    alg = instantiate(catalog["g28"])
    pf = generic_closed_3form(alg)

    def dim_body():
        # The displayed 9-coefficient family is a strict subfamily: the full
        # solution space of d phi = 0 on this algebra has dimension 15 (see
        # the closed form e157 - (2/3) e124, say).  The pinned expectation is
        # kept as stated and this check reports the honest outcome.
        return CheckRecord("g28 closed 3-form dimension", catalog["g28"].source,
                           "pass" if pf.dim == 9 else "fail",
                           {"dim": pf.dim, "expected": 9})
    rec, dt = _timed(dim_body)
    rec.runtime = dt
    records.append(rec)

    system = assemble_einstein_system(alg, pf)

    def full_body():
        out = least_squares_search(system, SearchConfig(starts=cfg.starts, seed=cfg.seed))
        return CheckRecord("g28 full Einstein system", catalog["g28"].source,
                           "pass" if out.status == "not_found" else "fail",
                           {"status": out.status, "best_residual": out.best_residual,
                            "starts": cfg.starts})
    rec, dt = _timed(full_body)
    rec.runtime = dt
    records.append(rec)

    def drop_body():
        out = least_squares_search(system.drop((7, 7)),
                                   SearchConfig(starts=cfg.starts, seed=cfg.seed))
        ok = out.status == "found"
        residuals = {"status": out.status, "best_residual": out.best_residual}
        if ok:
            b = out.validation["b_matrix"]
            gap = float(np.max(np.abs(b / out.kappa - np.diag([1, 1, 1, 1, 1, 1, 4.0]))))
            residuals["normalized_metric_gap"] = gap
            ok = gap < 1e-6
        return CheckRecord("g28 dropped (7,7) system", catalog["g28"].source,
                           "pass" if ok else "fail", residuals)
    rec, dt = _timed(drop_body)
    rec.runtime = dt
    records.append(rec)
    return records


RANK23_EXPECTED = {
    "h5r2": ("obstructed", "vector_obstruction"),
    "h3r3i": ("not_found", "einstein_system_search"),
    "h3r3ii": ("not_found", "einstein_system_search"),
    "a4r3": ("not_found", "einstein_system_search"),
}


def suite_rank23(catalog: Catalog, cfg: RunConfig) -> list[CheckRecord]:
    from .solver import sweep_obstructions
    records = []
    for fam, (want_verdict, want_via) in RANK23_EXPECTED.items():
        entry = catalog[fam]
        for sname in entry.samples:
            def body(fam=fam, sname=sname, want=(want_verdict, want_via)):
                alg = instantiate(catalog[fam], catalog[fam].samples[sname])
                ok_j, res_j = jacobi_check(alg, JACOBI_TOL)
                rec = sweep_obstructions([alg], "calibrated",
                                         SearchConfig(starts=cfg.sweep_starts,
                                                      seed=cfg.seed))[0]
                ok = ok_j and rec.verdict == want[0] and rec.decided_by == want[1]
                return CheckRecord(f"rank23 {fam}:{sname}", catalog[fam].source,
                                   "pass" if ok else "fail",
                                   {"jacobi_residual": res_j, "verdict": rec.verdict,
                                    "decided_by": rec.decided_by, **rec.details})
            rec, dt = _timed(body)
            rec.runtime = dt
            records.append(rec)
    # the 6-dimensional families: Jacobi at the stored samples
    for fam in ("ak6", "ke6r2", "ke6r3"):
        entry = catalog[fam]
        for sname in entry.samples:
            def body(fam=fam, sname=sname):
                alg = instantiate(catalog[fam], catalog[fam].samples[sname])
                ok, res = jacobi_check(alg, JACOBI_TOL)
                return CheckRecord(f"rank23 {fam}:{sname}", catalog[fam].source,
                                   "pass" if ok else "fail", {"jacobi_residual": res})
            rec, dt = _timed(body)
            rec.runtime = dt
            records.append(rec)
    return records


SUITES = {
    "table1": suite_table1,
    "table2": suite_table2,
    "table3": suite_table3,
    "lemma41-sweep": suite_closed_obstructions,
    "lemma51-sweep": suite_coclosed_obstructions,
    "tau3-sweep": suite_tau3,
    "example-soliton": suite_example_soliton,
    "section3": suite_section3,
    "g28-worked": suite_g28_worked,
    "rank23-samples": suite_rank23,
}


def run_suites(catalog: Catalog, names: list[str], cfg: RunConfig) -> Report:
    records = []
    for name in names:
        if name not in SUITES:
            raise KeyError(name)
        records.extend(SUITES[name](catalog, cfg))
    records.sort(key=lambda r: r.name)
    return Report(version=__version__, catalog_hash=catalog.sha256,
                  config=asdict(cfg), records=records)
