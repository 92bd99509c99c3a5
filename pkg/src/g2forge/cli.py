"""Command-line front end.

Exit codes: 0 all requested checks pass, 1 a check failed, 2 unknown algebra,
3 malformed form file, 4 constraint violation.
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from . import __version__, report as report_mod
from .catalog import (ConstraintError, UnknownAlgebraError, instantiate,
                      load_catalog)
from .curvature import einstein_check, flatness_check, solvsoliton_solve
from .exterior import Form, FormSyntaxError, format_form, parse_form
from .g2 import (metric_from_3form, obstruction_closed, obstruction_coclosed,
                 torsion_classes, try_metric_from_3form)
from .liealg import jacobi_check
from .reductions import AlmostHermitian, kahler_check, su2_from_su3, su3_from_g2
from .report import RunConfig, run_suites
from .solver import (SearchConfig, assemble_einstein_system, generic_closed_3form,
                     generic_coclosed_3form, least_squares_search)

EXIT_CHECK_FAILED = 1
EXIT_UNKNOWN_ALGEBRA = 2
EXIT_BAD_FORM = 3
EXIT_CONSTRAINT = 4


def _load_algebra(ctx, name, bindings=None):
    catalog = load_catalog(ctx.obj.get("catalog"))
    try:
        entry = catalog[name]
    except UnknownAlgebraError:
        click.echo(f"unknown algebra {name!r}", err=True)
        sys.exit(EXIT_UNKNOWN_ALGEBRA)
    try:
        return instantiate(entry, bindings)
    except ConstraintError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONSTRAINT)


def _load_form(path: str, dim: int = 7) -> Form:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        click.echo(f"cannot read form file: {exc}", err=True)
        sys.exit(EXIT_BAD_FORM)
    try:
        return parse_form(text, dim)
    except FormSyntaxError as exc:
        click.echo(f"malformed form file {path}: {exc}", err=True)
        sys.exit(EXIT_BAD_FORM)


def _parse_vector(text: str, dim: int = 7) -> np.ndarray:
    text = text.strip()
    if text.startswith("e") and text[1:].isdigit():
        idx = int(text[1:])
        if not 1 <= idx <= dim:
            raise click.BadParameter(f"basis index out of range: {text}")
        return np.eye(dim)[idx - 1]
    try:
        vec = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise click.BadParameter(f"cannot parse vector {text!r}") from None
    if vec.shape != (dim,):
        raise click.BadParameter(f"vector must have {dim} components")
    return vec


def _parse_bindings(pairs: tuple[str, ...]) -> dict[str, float]:
    out = {}
    for pair in pairs:
        name, _, value = pair.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise click.BadParameter(f"bad binding {pair!r}") from None
    return out


def _emit(ctx, payload: dict) -> None:
    fmt = ctx.obj.get("format", "json")
    if fmt == "json":
        click.echo(json.dumps(payload, indent=1, default=report_mod._scrub))
    else:
        for key, value in payload.items():
            click.echo(f"{key}: {value}")


@click.group()
@click.version_option(__version__)
@click.option("--catalog", type=click.Path(exists=True), default=None,
              help="catalog JSON (default: built-in, or $G2FORGE_CATALOG)")
@click.option("--format", "fmt", type=click.Choice(["json", "md"]), default="json")
@click.option("--tol", type=float, default=None, help="tolerance override")
@click.option("--seed", type=int, default=7)
@click.option("--jobs", type=int, default=1)
@click.pass_context
def main(ctx, catalog, fmt, tol, seed, jobs):
    """Verify and explore left-invariant Einstein metrics and G2-structures
    on the catalog of solvable Lie algebras."""
    ctx.ensure_object(dict)
    ctx.obj.update({"catalog": catalog, "format": fmt, "tol": tol,
                    "seed": seed, "jobs": jobs})


@main.group()
def catalog():
    """Catalog inspection."""


@catalog.command("list")
@click.pass_context
def catalog_list(ctx):
    cat = load_catalog(ctx.obj.get("catalog"))
    for entry in cat:
        params = ", ".join(p["name"] for p in entry.params) or "-"
        click.echo(f"{entry.name:10s} dim={entry.dim}  params: {params:30s} [{entry.source}]")


@main.group()
def check():
    """Per-algebra certification checks."""


def _check_exit(ctx, ok: bool, payload: dict):
    _emit(ctx, payload)
    sys.exit(0 if ok else EXIT_CHECK_FAILED)


@check.command("jacobi")
@click.argument("name")
@click.option("--binding", "-b", multiple=True, help="parameter binding, e.g. -b a=2")
@click.pass_context
def check_jacobi(ctx, name, binding):
    alg = _load_algebra(ctx, name, _parse_bindings(binding))
    ok, residual = jacobi_check(alg, ctx.obj.get("tol") or 1e-9)
    _check_exit(ctx, ok, {"algebra": name, "check": "jacobi", "pass": ok,
                          "residual": residual})


@check.command("einstein")
@click.argument("name")
@click.option("--binding", "-b", multiple=True)
@click.pass_context
def check_einstein(ctx, name, binding):
    alg = _load_algebra(ctx, name, _parse_bindings(binding))
    ok, lam, residual = einstein_check(alg, tol=ctx.obj.get("tol") or 1e-8)
    _check_exit(ctx, ok, {"algebra": name, "check": "einstein", "pass": ok,
                          "lambda": lam, "residual": residual})


@check.command("soliton")
@click.argument("name")
@click.option("--binding", "-b", multiple=True)
@click.pass_context
def check_soliton(ctx, name, binding):
    alg = _load_algebra(ctx, name, _parse_bindings(binding))
    cert = solvsoliton_solve(alg, tol=ctx.obj.get("tol") or 1e-8)
    if cert is None:
        _check_exit(ctx, False, {"algebra": name, "check": "soliton", "pass": False})
    _check_exit(ctx, True, {"algebra": name, "check": "soliton", "pass": True,
                            "lambda": cert.lam, "residual": cert.residual,
                            "derivation": cert.derivation})


@check.command("flat")
@click.argument("name")
@click.option("--binding", "-b", multiple=True)
@click.pass_context
def check_flat(ctx, name, binding):
    alg = _load_algebra(ctx, name, _parse_bindings(binding))
    flat, max_riem = flatness_check(alg, tol=ctx.obj.get("tol") or 1e-8)
    _check_exit(ctx, flat, {"algebra": name, "check": "flat", "pass": flat,
                            "max_riemann": max_riem})


@check.command("kahler")
@click.option("--algebra", "name", required=True)
@click.option("--structure", "structure_path", required=True,
              type=click.Path(exists=True))
@click.pass_context
def check_kahler(ctx, name, structure_path):
    """Structure file: JSON with keys J (matrix), F (form literal),
    optional bindings and g (metric matrix)."""
    try:
        data = json.loads(Path(structure_path).read_text())
        jmat = np.array(data["J"], dtype=float)
        alg = _load_algebra(ctx, name, data.get("bindings"))
        f_form = parse_form(data["F"], alg.dim)
        g = np.array(data["g"], dtype=float) if "g" in data else np.eye(alg.dim)
    except (KeyError, ValueError, FormSyntaxError) as exc:
        click.echo(f"malformed structure file: {exc}", err=True)
        sys.exit(EXIT_BAD_FORM)
    flags = kahler_check(alg, AlmostHermitian(jmat, f_form, g))
    _check_exit(ctx, all(flags.values()), {"algebra": name, "check": "kahler", **flags})


@main.group()
def obstruct():
    """Contraction obstructions over the closed/coclosed form spaces."""


@obstruct.command("closed")
@click.argument("name")
@click.option("--vector", default="e6")
@click.pass_context
def obstruct_closed(ctx, name, vector):
    alg = _load_algebra(ctx, name)
    res = obstruction_closed(alg, _parse_vector(vector))
    _check_exit(ctx, True, {"algebra": name, "mode": "closed", "vector": vector,
                            "obstructed": res.obstructed,
                            "max_tensor_norm": res.max_tensor_norm,
                            "basis_dim": res.basis_dim})


@obstruct.command("coclosed")
@click.argument("name")
@click.option("--vector", default="e7")
@click.pass_context
def obstruct_coclosed(ctx, name, vector):
    alg = _load_algebra(ctx, name)
    res = obstruction_coclosed(alg, None, _parse_vector(vector))
    _check_exit(ctx, True, {"algebra": name, "mode": "coclosed", "vector": vector,
                            "obstructed": res.obstructed,
                            "max_tensor_norm": res.max_tensor_norm,
                            "basis_dim": res.basis_dim})


@main.group()
def g2():
    """G2-structure computations from a 3-form."""


@g2.command("metric")
@click.option("--form", "form_path", required=True, type=click.Path(exists=True))
@click.pass_context
def g2_metric(ctx, form_path):
    phi = _load_form(form_path)
    status, g2s = try_metric_from_3form(phi)
    payload = {"status": status}
    if g2s is not None:
        payload.update({"metric": g2s.metric, "orientation": g2s.orientation,
                        "volume_scale": g2s.volume_scale, "b_matrix": g2s.b_matrix})
    _check_exit(ctx, status == "ok", payload)


@g2.command("torsion")
@click.option("--algebra", "name", required=True)
@click.option("--form", "form_path", required=True, type=click.Path(exists=True))
@click.pass_context
def g2_torsion(ctx, name, form_path):
    alg = _load_algebra(ctx, name)
    phi = _load_form(form_path)
    g2s = metric_from_3form(phi)
    tc = torsion_classes(alg, g2s)
    _check_exit(ctx, True, {
        "algebra": name, "tau0": tc.tau0, "tau1": format_form(tc.tau1),
        "tau2": format_form(tc.tau2), "tau3": format_form(tc.tau3),
        "tau1_norm": tc.tau1.norm_inf(), "tau2_norm": tc.tau2.norm_inf(),
        "tau3_norm": tc.tau3.norm_inf()})


@main.group()
def reduce():
    """SU(3)/SU(2) reductions of a G2-structure."""


@reduce.command("su3")
@click.option("--algebra", "name", required=True)
@click.option("--form", "form_path", required=True, type=click.Path(exists=True))
@click.option("--vector", default="e7")
@click.pass_context
def reduce_su3(ctx, name, form_path, vector):
    alg = _load_algebra(ctx, name)
    phi = _load_form(form_path)
    g2s = metric_from_3form(phi)
    su3 = su3_from_g2(alg, g2s, _parse_vector(vector))
    _check_exit(ctx, True, {
        "algebra": name, "F": format_form(su3.F),
        "psi_plus": format_form(su3.psi_plus), "psi_minus": format_form(su3.psi_minus),
        "h6": su3.h6, "orientation": su3.orientation})


@reduce.command("su2")
@click.option("--algebra", "name", required=True)
@click.option("--form", "form_path", required=True, type=click.Path(exists=True))
@click.option("--vector", default="e7", help="SU(3) contraction direction")
@click.option("--vector2", default="e6", help="SU(2) contraction direction")
@click.pass_context
def reduce_su2(ctx, name, form_path, vector, vector2):
    alg = _load_algebra(ctx, name)
    phi = _load_form(form_path)
    g2s = metric_from_3form(phi)
    su3 = su3_from_g2(alg, g2s, _parse_vector(vector))
    su2 = su2_from_su3(su3, _parse_vector(vector2))
    _check_exit(ctx, True, {
        "algebra": name, "eta": format_form(su2.eta),
        "omega1": format_form(su2.omega1), "omega2": format_form(su2.omega2),
        "omega3": format_form(su2.omega3), "v": format_form(su2.v), "h5": su2.h5})


@main.command("search")
@click.argument("mode", type=click.Choice(["einstein-calibrated", "einstein-cocalibrated"]))
@click.option("--algebra", "name", required=True)
@click.option("--starts", type=int, default=100)
@click.option("--seed", type=int, default=None)
@click.option("--drop", default=None, help="metric entry to drop, e.g. 7,7")
@click.pass_context
def search(ctx, mode, name, starts, seed, drop):
    """Multistart search for a closed/coclosed 3-form with B(rho) = kappa I."""
    alg = _load_algebra(ctx, name)
    pf = (generic_closed_3form(alg) if mode == "einstein-calibrated"
          else generic_coclosed_3form(alg))
    system = assemble_einstein_system(alg, pf)
    if drop:
        try:
            i, j = (int(t) for t in drop.split(","))
        except ValueError:
            raise click.BadParameter("--drop expects i,j") from None
        system = system.drop((i, j))
    cfg = SearchConfig(starts=starts, seed=ctx.obj["seed"] if seed is None else seed,
                       tol=ctx.obj.get("tol") or 1e-10)
    out = least_squares_search(system, cfg)
    payload = {"algebra": name, "mode": mode, "status": out.status,
               "best_residual": out.best_residual, "kappa": out.kappa,
               "basis_dim": pf.dim, "per_start": out.per_start}
    if out.rho is not None:
        payload["rho"] = out.rho
        payload["form"] = format_form(pf.instantiate(out.rho))
    _check_exit(ctx, True, payload)


@main.command("verify-paper")
@click.option("--suite", default="all",
              help="one of: " + ", ".join(report_mod.SUITES) + ", or 'all'")
@click.option("--output", type=click.Path(), default=None, help="report file")
@click.option("--starts", type=int, default=100, help="starts for the worked example")
@click.pass_context
def verify_paper(ctx, suite, output, starts):
    """Replay the catalog verifications suite by suite."""
    cat = load_catalog(ctx.obj.get("catalog"))
    names = list(report_mod.SUITES) if suite == "all" else [suite]
    if any(n not in report_mod.SUITES for n in names):
        click.echo(f"unknown suite {suite!r}", err=True)
        sys.exit(EXIT_UNKNOWN_ALGEBRA)
    cfg = RunConfig(seed=ctx.obj["seed"], jobs=ctx.obj["jobs"],
                    tol=ctx.obj.get("tol"), starts=starts)
    rep = run_suites(cat, names, cfg)
    text = rep.to_json() if ctx.obj["format"] == "json" else rep.to_markdown()
    if output:
        Path(output).write_text(text + "\n")
        click.echo(f"report written to {output}")
    else:
        click.echo(text)
    if {"table1", "table2"} & set(names):
        constants = {r.name: r.residuals["einstein_lambda"] for r in rep.records
                     if "einstein_lambda" in r.residuals}
        const_path = Path(output).parent if output else Path(".")
        (const_path / "constants.json").write_text(json.dumps(constants, indent=1) + "\n")
    sys.exit(0 if rep.ok else EXIT_CHECK_FAILED)


if __name__ == "__main__":
    main()
