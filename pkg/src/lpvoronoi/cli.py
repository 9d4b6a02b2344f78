"""``lpvoronoi`` command line.

Exit codes: 0 success, 1 a verified statement failed, 2 bad input, 3 search
budget exhausted.  Errors are reported as one line of JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BudgetExceeded, InputError, NotPlanar, Violation
from .lattice import DEFAULT_BUDGET, Basis, covering_radius_upper, lattice_params
from .lmfamily import verify_theorem_main
from .norms import NormSpec
from .planar import check_4or6, classify_planar, l1_family_weak_relevant, trace_cell2d
from .relevant import (
    RelevantReport,
    SearchParams,
    cvp_bruteforce,
    cvp_walk_euclidean,
    enumerate_relevant,
    euclidean_relevant_oracle,
)
from .render import RenderOptions, render_svg

COMMANDS = ("relvecs", "lm-verify", "cell2d", "l1-family", "cvp", "bound")


class _InputErrorParser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


@dataclass(frozen=True)
class RunConfig:
    command: str
    args: argparse.Namespace

    @property
    def seed(self) -> int:
        return getattr(self.args, "seed", 0)

    @property
    def output(self) -> str | None:
        return getattr(self.args, "output", None)


def _load_basis(text: str) -> Basis:
    if text is None:
        raise InputError("--basis is required")
    src = text.strip()
    try:
        obj = json.loads(src) if src.startswith(("{", "[")) else json.loads(Path(src).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read basis {text!r}: {exc}") from exc
    if isinstance(obj, list):
        obj = {"columns": obj}
    if not isinstance(obj, dict) or "columns" not in obj:
        raise InputError("basis JSON needs a 'columns' list")
    return Basis.from_json(obj)


def _parse_target(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.replace(" ", "").split(",")])
    except ValueError as exc:
        raise InputError(f"bad target {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _InputErrorParser(prog="lpvoronoi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_InputErrorParser)

    def common(sp, basis=True, norm=True):
        if basis:
            sp.add_argument("--basis", required=True, help="basis JSON file or inline JSON")
        if norm:
            sp.add_argument("--norm", default="l2", help="l<p>, e.g. l2, l1.5, linf")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="max enumeration nodes")
        sp.add_argument("--output", "--json", dest="output", help="write the report here instead of stdout")

    sp = sub.add_parser("relvecs", help="classify lattice vectors as (weak) Voronoi-relevant")
    common(sp)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--grid-points", type=int, default=SearchParams.grid_points)
    sp.add_argument("--angles", type=int, default=720, help="angular samples for planar grid mode")

    sp = sub.add_parser("lm-verify", help="verify the ℓ3 lattice family for one m")
    common(sp, basis=False, norm=False)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--window", type=int, default=6)
    sp.add_argument("--numeric", choices=("auto", "binary64", "extended"), default="auto")
    sp.add_argument("--full", action="store_true", help="include every checked inequality")

    sp = sub.add_parser("cell2d", help="trace a planar Voronoi cell")
    common(sp)
    sp.add_argument("--angles", type=int, default=720)
    sp.add_argument("--svg")
    sp.add_argument("--no-facets", action="store_true")
    sp.add_argument("--no-ties", action="store_true")
    sp.add_argument("--no-points", action="store_true")
    sp.add_argument("--samples", action="store_true", help="include per-angle samples")
    sp.add_argument("--check", action="store_true", help="assert the 4-or-6 facet count")

    sp = sub.add_parser("l1-family", help="weak ℓ1-relevant vectors of L((1,1),(0,m))")
    common(sp, basis=False, norm=False)
    sp.add_argument("--m", type=int, required=True)

    sp = sub.add_parser("cvp", help="closest lattice vector")
    common(sp)
    sp.add_argument("--target", required=True, help="comma separated coordinates")

    sp = sub.add_parser("bound", help="first minimum, covering bound and relevant-count bound")
    common(sp)
    return p


def _relvecs(a) -> dict:
    basis, norm = _load_basis(a.basis), NormSpec.parse(a.norm)
    if not norm.strictly_convex and basis.dim == 2:
        cell = trace_cell2d(basis, norm, a.angles, a.budget)
        params = lattice_params(basis, norm, a.budget)
        report = RelevantReport(basis, norm, params, 2.0 * params.mu_upper,
                                tuple(classify_planar(cell, a.budget)), mode="grid")
    else:
        search = SearchParams(grid_points=a.grid_points, seed=a.seed)
        report = enumerate_relevant(basis, norm, search, threads=a.threads, budget=a.budget)
    return report.to_json()


def _lm_verify(a) -> dict:
    return verify_theorem_main(a.m, a.window, a.numeric).to_json(a.full)


def _cell2d(a) -> dict:
    basis, norm = _load_basis(a.basis), NormSpec.parse(a.norm)
    if basis.dim != 2:
        raise NotPlanar(f"cell2d needs a 2D basis, got dimension {basis.dim}")
    cell = trace_cell2d(basis, norm, a.angles, a.budget)
    out = cell.to_json()
    if not a.samples:
        out.pop("samples")
    out["facet_count"] = len(out["facets"])
    if a.svg:
        opts = RenderOptions(facets=not a.no_facets, ties=not a.no_ties, points=not a.no_points)
        render_svg(cell, a.svg, opts)
        out["svg"] = a.svg
    if a.check:
        out["relevant_count"] = check_4or6(basis, norm, a.angles, SearchParams(seed=a.seed))
    return out


def _l1_family(a) -> dict:
    try:
        return l1_family_weak_relevant(a.m).to_json()
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _cvp(a) -> dict:
    basis, norm = _load_basis(a.basis), NormSpec.parse(a.norm)
    t = _parse_target(a.target)
    if t.size != basis.dim:
        raise InputError(f"target has {t.size} coordinates, basis dimension is {basis.dim}")
    v = cvp_bruteforce(basis, norm, t, a.budget)
    out = {"target": t.tolist(), "norm": norm.label(), "closest": list(v.coeffs),
           "coords": list(v.coords), "distance": float(norm(t - v.x))}
    if norm.is_euclidean:
        w = cvp_walk_euclidean(basis, t, euclidean_relevant_oracle(basis).relevant, norm)
        out["walk"] = {"closest": list(w.coeffs), "distance": float(norm(t - w.x))}
    return out


def _bound(a) -> dict:
    basis, norm = _load_basis(a.basis), NormSpec.parse(a.norm)
    params = lattice_params(basis, norm, a.budget)
    return {"norm": norm.label(), "dim": basis.dim, "lambda1": params.lambda1,
            "lambda1_witness": list(params.lambda1_witness.coeffs),
            "mu_hat": covering_radius_upper(basis, norm), "mu_upper": params.mu_upper,
            "relevant_bound": params.packing_bound(basis.dim)}


_HANDLERS = {"relvecs": _relvecs, "lm-verify": _lm_verify, "cell2d": _cell2d,
             "l1-family": _l1_family, "cvp": _cvp, "bound": _bound}


def _emit_error(kind: str, exc: Exception, payload: dict | None = None) -> None:
    err = {"error": type(exc).__name__, "kind": kind, "message": str(exc)}
    if payload:
        err["payload"] = payload
    sys.stderr.write(json.dumps(err, default=str) + "\n")


def run(config: RunConfig) -> int:
    try:
        result = _HANDLERS[config.command](config.args)
        text = json.dumps(result, indent=2, default=str) + "\n"
        if config.output:
            Path(config.output).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    except Violation as exc:
        _emit_error("violation", exc, exc.payload)
        return 1
    except BudgetExceeded as exc:
        _emit_error("budget", exc)
        return 3
    except (InputError, ValueError) as exc:
        _emit_error("input", exc)
        return 2
    except OSError as exc:
        _emit_error("input", exc)
        return 2


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except InputError as exc:
        _emit_error("input", exc)
        return 2
    return run(RunConfig(args.command, args))


if __name__ == "__main__":
    sys.exit(main())
