"""Command line: validate, spectrum, scatter, screen and census.

A run reads a JSON family spec, builds the family, and writes a JSON report plus CSV
and SVG artifacts into the output directory (``--out``, else ``$MTLZ_OUT``, else
``./mtlz_out``).  Reports are written with sorted keys and carry no timestamps, so the
same spec and seed give byte-identical files.

Exit codes: 0 success, 1 domain/integrability/cross-validation failure, 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import family_builder as fb
from . import graph_core as gc
from . import hamiltonian_engine as he
from . import nogo_screener as ng
from . import scattering_analytic as sa
from . import scattering_numeric as sn

OUT_ENV = "MTLZ_OUT"
DEFAULT_OUT = "mtlz_out"
DEFAULT_SEED = 0


class SchemaError(ValueError):
    """Spec file does not match the schema (exit code 2)."""


class CrossValidationError(RuntimeError):
    """Analytic and numeric probabilities disagree beyond tolerance (exit code 1)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------- spec schema

# family -> (required parameter keys, optional parameter keys)
PARAMETER_KEYS: dict[str, tuple[set, set]] = {
    "square": ({"a", "b", "theta"}, {"p", "gamma12", "gamma14"}),
    "cube": ({"tau"}, {"p", "gammas"}),
    "hypercube4": ({"tau"}, {"gammas"}),
    "fan": ({"m", "l", "A1", "thetas", "gammas"}, {"ps"}),
    "gamma_magnet": ({"n_spins", "betas", "gs"}, set()),
    "separable": ({"betas", "gs", "eps"}, set()),
    "custom": ({"edges", "orientation", "forms", "gammas"}, {"n_vertices", "name"}),
}
TOP_KEYS = {"family", "parameters", "gauge", "path", "scattering", "seed"}
GAUGE_KEYS = {"beta", "e"}
PATH_KEYS = {"v", "eps"}
SCATTERING_KEYS = {"method", "T", "rtol", "tol"}
METHODS = ("analytic", "numeric", "both")


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise SchemaError(f"{where}: expected a finite number, got {x!r}")
    return float(x)


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise SchemaError(f"{where}: expected an integer, got {x!r}")
    return x


def _numbers(x, where: str, length: int | None = None) -> list[float]:
    if not isinstance(x, list):
        raise SchemaError(f"{where}: expected a list, got {type(x).__name__}")
    if length is not None and len(x) != length:
        raise SchemaError(f"{where}: expected {length} entries, got {len(x)}")
    return [_number(v, f"{where}[{i}]") for i, v in enumerate(x)]


def _matrix(x, where: str) -> list[list[float]]:
    if not isinstance(x, list) or not x:
        raise SchemaError(f"{where}: expected a nonempty list of lists")
    rows = [_numbers(r, f"{where}[{i}]") for i, r in enumerate(x)]
    if len({len(r) for r in rows}) != 1:
        raise SchemaError(f"{where}: ragged rows")
    return rows


def _keys(d, allowed: set, required: set, where: str) -> dict:
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: expected an object")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise SchemaError(f"{where}: unknown keys {unknown}")
    missing = sorted(required - set(d))
    if missing:
        raise SchemaError(f"{where}: missing keys {missing}")
    return d


def _check_parameters(family: str, p: dict) -> dict:
    req, opt = PARAMETER_KEYS[family]
    _keys(p, req | opt, req, "parameters")
    w = "parameters."
    out: dict[str, Any] = {}
    if family == "square":
        out["a"] = _numbers(p["a"], w + "a")
        out["b"] = _numbers(p["b"], w + "b", len(out["a"]))
        out["theta"] = _number(p["theta"], w + "theta")
        out["p"] = _int(p.get("p", 1), w + "p")
        out["gamma12"] = _number(p.get("gamma12", 1.0), w + "gamma12")
        out["gamma14"] = _number(p.get("gamma14", 1.0), w + "gamma14")
    elif family == "cube":
        out["tau"] = _numbers(p["tau"], w + "tau", 3)
        out["p"] = [_int(v, w + "p") for v in p.get("p", [1] * 6)]
        out["gammas"] = _numbers(p.get("gammas", [1.0, 1.0, 1.0]), w + "gammas", 3)
    elif family == "hypercube4":
        tau = p["tau"]
        if not isinstance(tau, dict):
            raise SchemaError(f"{w}tau: expected an object keyed 'i,j'")
        out["tau"] = {}
        for k, v in tau.items():
            try:
                i, j = (int(x) for x in k.split(","))
            except ValueError:
                raise SchemaError(f"{w}tau: bad key {k!r}, expected 'i,j'") from None
            out["tau"][(i, j)] = _number(v, f"{w}tau[{k}]")
        need = {(i, j) for i in range(1, 5) for j in range(i + 1, 5)}
        if set(out["tau"]) != need:
            raise SchemaError(f"{w}tau: need exactly the six pairs 1,2 .. 3,4")
        out["gammas"] = _numbers(p.get("gammas", [1.0] * 4), w + "gammas", 4)
    elif family == "fan":
        out["m"] = _int(p["m"], w + "m")
        out["l"] = _int(p["l"], w + "l")
        out["A1"] = _matrix(p["A1"], w + "A1")
        out["thetas"] = _numbers(p["thetas"], w + "thetas")
        out["gammas"] = _numbers(p["gammas"], w + "gammas")
        if "ps" in p:
            out["ps"] = [_int(v, w + "ps") for v in p["ps"]]
    elif family == "gamma_magnet":
        out["n_spins"] = _int(p["n_spins"], w + "n_spins")
        out["betas"] = _numbers(p["betas"], w + "betas", out["n_spins"])
        out["gs"] = _numbers(p["gs"], w + "gs", out["n_spins"])
    elif family == "separable":
        out["betas"] = _numbers(p["betas"], w + "betas")
        n = len(out["betas"])
        out["gs"] = _numbers(p["gs"], w + "gs", n)
        out["eps"] = _numbers(p["eps"], w + "eps", n)
    elif family == "custom":
        edges = p["edges"]
        if not isinstance(edges, list) or not edges:
            raise SchemaError(f"{w}edges: expected a nonempty list of [a, b]")
        out["edges"] = []
        for i, e in enumerate(edges):
            if not isinstance(e, list) or len(e) != 2:
                raise SchemaError(f"{w}edges[{i}]: expected [a, b]")
            out["edges"].append((_int(e[0], f"{w}edges[{i}]"), _int(e[1], f"{w}edges[{i}]")))
        ne = len(out["edges"])
        out["orientation"] = [_int(v, w + "orientation") for v in p["orientation"]]
        if len(out["orientation"]) != ne:
            raise SchemaError(f"{w}orientation: one sign per edge")
        out["forms"] = _matrix(p["forms"], w + "forms")
        if len(out["forms"]) != ne:
            raise SchemaError(f"{w}forms: one form per edge")
        out["gammas"] = _numbers(p["gammas"], w + "gammas", ne)
        if "n_vertices" in p:
            out["n_vertices"] = _int(p["n_vertices"], w + "n_vertices")
        out["name"] = str(p.get("name", "custom"))
    return out


@dataclass
class FamilySpecFile:
    """Validated contents of a JSON family spec."""
    family: str
    parameters: dict
    gauge: dict | None = None
    path: dict | None = None
    scattering: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, doc) -> "FamilySpecFile":
        _keys(doc, TOP_KEYS, {"family", "parameters"}, "spec")
        family = doc["family"]
        if family not in PARAMETER_KEYS:
            raise SchemaError(f"family: expected one of {sorted(PARAMETER_KEYS)}, got {family!r}")
        params = _check_parameters(family, doc["parameters"])
        gauge = None
        if "gauge" in doc:
            g = _keys(doc["gauge"], GAUGE_KEYS, set(), "gauge")
            gauge = {k: _number(g.get(k, 0.0), f"gauge.{k}") for k in ("beta", "e")}
        path = None
        if "path" in doc:
            pth = _keys(doc["path"], PATH_KEYS, PATH_KEYS, "path")
            v = _numbers(pth["v"], "path.v")
            path = {"v": v, "eps": _numbers(pth["eps"], "path.eps", len(v))}
            if not any(v):
                raise SchemaError("path.v: velocity must be nonzero")
        sc = {"method": "both", "T": 80.0, "rtol": 1e-9, "tol": 5e-3}
        if "scattering" in doc:
            s = _keys(doc["scattering"], SCATTERING_KEYS, set(), "scattering")
            if "method" in s:
                if s["method"] not in METHODS:
                    raise SchemaError(f"scattering.method: expected one of {list(METHODS)}")
                sc["method"] = s["method"]
            for k in ("T", "rtol", "tol"):
                if k in s:
                    sc[k] = _number(s[k], f"scattering.{k}")
                    if sc[k] <= 0:
                        raise SchemaError(f"scattering.{k}: must be positive")
        seed = _int(doc.get("seed", DEFAULT_SEED), "seed")
        return cls(family, params, gauge, path, sc, seed, doc)

    @classmethod
    def load(cls, path) -> "FamilySpecFile":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed JSON in {path}: {exc}") from None
        except OSError as exc:
            raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
        return cls.from_dict(doc)


# ------------------------------------------------------------- construction

def build_family(spec: FamilySpecFile) -> fb.MTLZFamily:
    """Family described by the spec, with the gauge shift applied."""
    p = spec.parameters
    f = spec.family
    if f == "square":
        fam = fb.build_square(p["a"], p["b"], p["theta"], p["p"], p["gamma12"], p["gamma14"])
    elif f == "cube":
        fam = fb.build_cube(p["tau"], p["p"], p["gammas"])
    elif f == "hypercube4":
        fam = fb.build_hypercube4(p["tau"], p["gammas"])
    elif f == "fan":
        fam = fb.build_fan(p["m"], p["l"], p["A1"], p["thetas"], p["gammas"], p.get("ps"))
    elif f == "gamma_magnet":
        fam = fb.build_gamma_magnet(p["n_spins"], p["betas"], p["gs"])
    elif f == "custom":
        try:
            graph = gc.ConnectivityGraph.from_edges(p["edges"], p.get("n_vertices"), p["name"])
            orient = gc.Orientation(graph, dict(zip(p["edges"], p["orientation"])))
        except gc.GraphError as exc:
            raise SchemaError(f"parameters: {exc}") from None
        forms = {gc.edge_key(*e): np.asarray(v, float) for e, v in zip(p["edges"], p["forms"])}
        gam = {gc.edge_key(*e): g for e, g in zip(p["edges"], p["gammas"])}
        fam = fb._family_from_forms(graph, orient, forms, gam, meta={"family": "custom"})
    else:
        raise fb.DomainError(f"family {f!r} is a single Hamiltonian, not a multitime family")
    if spec.gauge:
        fam = fb.apply_gauge(fam, fb.gauge_matrix(fam.dim, spec.gauge["beta"], spec.gauge["e"]))
    return fam


def linear_hamiltonian(spec: FamilySpecFile, hf: he.HamiltonianFamily | None = None
                       ) -> tuple[he.LinearHamiltonian, dict]:
    """H(t) along the spec path (or a seeded generic path); returns (H, path record)."""
    if spec.family == "separable":
        p = spec.parameters
        A, B = fb.separable_spins(p["betas"], p["gs"], p["eps"])
        return he.LinearHamiltonian(A, B), {"kind": "single Hamiltonian"}
    hf = hf or he.assemble(build_family(spec))
    if spec.path is not None:
        path = he.TimePath(tuple(spec.path["v"]), tuple(spec.path["eps"]))
        kind = "spec"
    else:
        path = he.choose_generic_path(hf, seed=spec.seed)
        kind = "generic"
    return he.restrict(hf, path), {"kind": kind, "v": list(path.v), "eps": list(path.eps)}


# ----------------------------------------------------------------- reports

def _plain(x):
    """JSON-safe copy: numpy scalars/arrays to Python, tuple keys to strings."""
    if isinstance(x, dict):
        return {(",".join(map(str, k)) if isinstance(k, tuple) else str(k)): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


@dataclass
class RunReport:
    command: str
    status: str = "pass"
    seed: int = DEFAULT_SEED
    spec: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return _plain({"command": self.command, "status": self.status, "seed": self.seed,
                       "spec": self.spec, **self.sections, "artifacts": self.artifacts})

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"


def output_dir(arg: str | None) -> Path:
    out = Path(arg or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_matrix_csv(P: np.ndarray, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["to\\from"] + [str(a) for a in range(P.shape[1])])
        for b, row in enumerate(P):
            w.writerow([str(b)] + [repr(float(x)) for x in row])


def _finish(report: RunReport, out: Path, quiet: bool = False) -> None:
    name = f"{report.command}_report.json"
    report.artifacts["report"] = name
    text = report.to_json()
    (out / name).write_text(text)
    if not quiet:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_validate(spec: FamilySpecFile, out: Path) -> RunReport:
    report = RunReport("validate", seed=spec.seed, spec=spec.raw)
    fam = build_family(spec)
    val = fb.validate_family(fam)
    hf = he.assemble(fam)
    rng = np.random.default_rng(spec.seed)
    worst = {"commutator": 0.0, "curl": 0.0, "structural": 0.0}
    for _ in range(20):
        r = he.integrability_residuals(hf, rng.normal(size=fam.dim))
        c, k = r.relative()
        worst["commutator"] = max(worst["commutator"], c)
        worst["curl"] = max(worst["curl"], k)
        worst["structural"] = max(worst["structural"], r.max_structural / max(r.scale, 1e-300))
    ok = val.passed and max(worst.values()) < 1e-12
    report.status = "pass" if ok else "fail"
    report.sections["validation"] = val.as_dict()
    report.sections["integrability"] = {"points": 20, "relative_max": worst}
    report.sections["family"] = {"name": fam.graph.name, "states": fam.n_states, "dim": fam.dim,
                                 "zero_couplings": he.zero_coupling_count(hf)}
    return report


def _parse_range(text: str):
    if text == "auto":
        return "auto"
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise SchemaError(f"--t-range: expected 'auto' or 'a:b', got {text!r}") from None
    if not b > a:
        raise SchemaError("--t-range: need a < b")
    return (a, b)


def cmd_spectrum(spec: FamilySpecFile, out: Path, t_range: str = "auto", grid: int = 4000,
                 coupling_scale: float = 1.0) -> RunReport:
    report = RunReport("spectrum", seed=spec.seed, spec=spec.raw)
    H, path = linear_hamiltonian(spec)
    if coupling_scale != 1.0:
        H = H.scaled_couplings(coupling_scale)
    scan = he.scan_spectrum(H, _parse_range(t_range), grid=grid)
    he.write_spectrum_csv(scan, out / "spectrum.csv")
    he.write_spectrum_svg(scan, out / "spectrum.svg")
    (out / "crossings.json").write_text(scan.crossings_json() + "\n")
    summary = scan.summary()
    summary["coupling_scale"] = coupling_scale
    summary["zero_couplings"] = he.zero_coupling_count(H)
    report.sections["path"] = path
    report.sections["spectrum"] = summary
    report.sections["unconverged"] = [e.as_dict() for e in scan.unconverged]
    report.artifacts.update({"csv": "spectrum.csv", "svg": "spectrum.svg", "crossings": "crossings.json"})
    if scan.unconverged:
        report.status = "warn"
    return report


def _analytic_setup(fam: fb.MTLZFamily):
    try:
        arr = sa.build_arrangement(fam)
        merged = False
    except sa.DegenerateArrangementError:
        arr = sa.build_arrangement(fam, merge=True)
        merged = True
    cx = sa.enumerate_cells(arr)
    return cx, sa.dual_graph(cx), merged


def _numeric_from_cell(hf, cx, cell: int, T: float, rtol: float, seed: int) -> sn.NumericScattering:
    rng = np.random.default_rng(seed + cell)
    v = -cx.cells[cell].rep
    H = he.restrict(hf, he.TimePath(tuple(v), tuple(1e-3 * rng.normal(size=len(v)))))
    return sn.propagate(H, sn.PropagationConfig(T=T, rtol=rtol))


def cmd_scatter(spec: FamilySpecFile, out: Path, start_cell: int | None = None,
                all_cells: bool = False) -> RunReport:
    report = RunReport("scatter", seed=spec.seed, spec=spec.raw)
    sc = spec.scattering
    method = sc["method"]
    analytic_ok = False
    if spec.family != "separable":
        fam = build_family(spec)
        analytic_ok = fam.dim == 3
        hf = he.assemble(fam)
    if method == "analytic" and not analytic_ok:
        raise sa.UnsupportedDimension("analytic scattering needs a three-time family")
    if not analytic_ok or (start_cell is None and not all_cells and spec.path is not None):
        # numeric only, along the spec path
        H, path = linear_hamiltonian(spec)
        res = sn.propagate(H, sn.PropagationConfig(T=sc["T"], rtol=sc["rtol"]))
        _write_matrix_csv(res.P, out / "P_numeric.csv")
        report.sections["path"] = path
        report.sections["numeric"] = {"P": res.P, "error_estimate": res.max_error,
                                      "unitarity_defect": res.unitarity_defect(),
                                      "symmetric": bool(np.allclose(res.P, res.P.T, atol=1e-3))}
        report.sections["analytic"] = "unsupported" if not analytic_ok else "not requested"
        report.artifacts["numeric_csv"] = "P_numeric.csv"
        return report

    cx, dual, merged = _analytic_setup(fam)
    report.sections["arrangement"] = {"cells": cx.n_cells, "euler": list(cx.euler()),
                                      "merged_coincident_circles": merged}
    scene = sa.stereographic_project(cx.arrangement, seed=spec.seed)
    sa.scene_svg(scene, out / "cells.svg")
    sa.scene_csv(scene, out / "cells.csv")
    report.artifacts.update({"scene_svg": "cells.svg", "scene_csv": "cells.csv"})
    if all_cells:
        census = sa.classify_all_cells(dual, fam, seed=7)
        report.sections["census"] = census.as_dict()
        report.sections["type_table"] = _type_comparison(census)
        checks = {t: pm.start for t, pm in census.representatives.items()}
    else:
        cell = 0 if start_cell is None else start_cell
        if not 0 <= cell < cx.n_cells:
            raise SchemaError(f"--start-cell: expected 0..{cx.n_cells - 1}, got {cell}")
        pm = sa.cell_probability(dual, fam, cell)
        t = sa.classify_type(pm)
        report.sections["cell"] = {"id": cell, "type": t, "half_zeros": pm.half_zero_count,
                                   "columns": pm.column_distribution, "symbolic": pm.render(),
                                   "P": pm.numeric}
        _write_matrix_csv(pm.numeric, out / f"P_cell{cell}.csv")
        report.artifacts["analytic_csv"] = f"P_cell{cell}.csv"
        checks = {t if t is not None else "other": cell}
    if method in ("both", "numeric"):
        deltas = {}
        worst = (0.0, None)
        for key, cell in sorted(checks.items(), key=lambda kv: str(kv[0])):
            setup = sa.setup_from_family(fam, cx.arrangement)
            P_a = sa.scattering_product(dual, cell, setup)[1]
            res = _numeric_from_cell(hf, cx, cell, sc["T"], sc["rtol"], spec.seed)
            diff = np.abs(P_a - res.P)
            i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
            deltas[str(key)] = {"cell": cell, "max_delta": float(diff.max()),
                                "numeric_error_estimate": res.max_error}
            if diff.max() > worst[0]:
                worst = (float(diff.max()), {"cell": cell, "entry": [int(i), int(j)],
                                             "analytic": float(P_a[i, j]), "numeric": float(res.P[i, j])})
        report.sections["cross_validation"] = {"tolerance": sc["tol"], "T": sc["T"], "per_check": deltas,
                                               "worst": worst[1], "max_delta": worst[0]}
        if worst[0] > sc["tol"]:
            report.status = "fail"
            raise CrossValidationError(f"analytic and numeric P differ by {worst[0]:.3g} "
                                       f"(tolerance {sc['tol']:.3g}) at {worst[1]}", report)
    return report


def _type_comparison(census: sa.Census) -> dict:
    rows = {}
    for t, (hz, cols) in sa.ZERO_PATTERN_TYPES.items():
        rep = census.representatives.get(t)
        rows[str(t)] = {"expected": [hz, cols], "found": census.counts.get(t, 0),
                        "match": rep is not None and rep.descriptor == (hz, cols)}
    return {"types": rows, "types_present": sorted(census.types_present),
            "all_seven": census.types_present == set(sa.ZERO_PATTERN_TYPES)}


def _six_tangents(spec: FamilySpecFile) -> list[float]:
    tau = spec.parameters["tau"]
    return list(tau) + list(fb.cube_tangents(*tau, spec.parameters["p"][:3]))


def cmd_census(spec: FamilySpecFile, out: Path) -> RunReport:
    if spec.family != "cube":
        raise SchemaError("census needs a cube family spec")
    report = RunReport("census", seed=spec.seed, spec=spec.raw)
    fam = build_family(spec)
    cx, dual, merged = _analytic_setup(fam)
    census = sa.classify_all_cells(dual, fam, seed=7)
    report.sections["arrangement"] = {"cells": cx.n_cells, "euler": list(cx.euler()),
                                      "merged_coincident_circles": merged,
                                      "tau_sign_case": sa.tau_sign_case(_six_tangents(spec))}
    report.sections["census"] = census.as_dict()
    report.sections["type_table"] = _type_comparison(census)
    with open(out / "census.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "type"])
        for cid, t in sorted(census.cell_types.items()):
            w.writerow([cid, t])
    report.artifacts["census_csv"] = "census.csv"
    return report


def load_graph(arg: str) -> gc.ConnectivityGraph:
    """Named graph, or a JSON file {"name": .., "n_vertices": .., "edges": [[a, b], ..]}."""
    if os.path.exists(arg):
        try:
            with open(arg) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed JSON in {arg}: {exc}") from None
        _keys(doc, {"name", "n_vertices", "edges"}, {"edges"}, "graph")
        edges = doc["edges"]
        if not isinstance(edges, list) or not all(isinstance(e, list) and len(e) == 2 for e in edges):
            raise SchemaError("graph.edges: expected a list of [a, b]")
        try:
            return gc.ConnectivityGraph.from_edges(
                [(_int(a, "graph.edges"), _int(b, "graph.edges")) for a, b in edges],
                doc.get("n_vertices"), str(doc.get("name", Path(arg).stem)))
        except gc.GraphError as exc:
            raise SchemaError(f"graph: {exc}") from None
    try:
        return gc.named_graph(arg)
    except (gc.GraphError, ValueError) as exc:
        raise SchemaError(str(exc)) from None


def cmd_screen(graph_arg: str, out: Path) -> RunReport:
    report = RunReport("screen", spec={"graph": graph_arg})
    if os.path.exists(graph_arg):
        v = ng.screen(load_graph(graph_arg))
    else:
        try:
            v = ng.screen_named(graph_arg)
        except (gc.GraphError, ValueError) as exc:
            raise SchemaError(str(exc)) from None
    report.sections["verdict"] = v.as_dict()
    (out / "screen_transcript.txt").write_text(v.transcript() + "\n")
    report.artifacts["transcript"] = "screen_transcript.txt"
    return report


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mtlz", description="Multitime Landau-Zener workbench")
    ap.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    ap.add_argument("--quiet", action="store_true", help="do not echo the report to stdout")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("validate", help="build a family and check integrability")
    p.add_argument("spec")
    p = sub.add_parser("spectrum", help="eigenvalue tracks and crossing census along a path")
    p.add_argument("spec")
    p.add_argument("--t-range", default="auto")
    p.add_argument("--grid", type=int, default=4000)
    p.add_argument("--coupling-scale", type=float, default=1.0)
    p = sub.add_parser("scatter", help="transition probabilities, analytic and numeric")
    p.add_argument("spec")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--start-cell", type=int)
    g.add_argument("--all", action="store_true")
    p = sub.add_parser("screen", help="no-go screening of a graph")
    p.add_argument("graph", help="graph name or JSON file")
    p = sub.add_parser("census", help="probability-matrix types over all cells of a cube family")
    p.add_argument("spec")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = output_dir(args.out)
        if args.command == "screen":
            report = cmd_screen(args.graph, out)
        else:
            spec = FamilySpecFile.load(args.spec)
            if args.command == "validate":
                report = cmd_validate(spec, out)
            elif args.command == "spectrum":
                report = cmd_spectrum(spec, out, args.t_range, args.grid, args.coupling_scale)
            elif args.command == "scatter":
                report = cmd_scatter(spec, out, args.start_cell, args.all)
            else:
                report = cmd_census(spec, out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CrossValidationError as exc:
        if exc.report is not None:
            _finish(exc.report, out, args.quiet)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (fb.BuildError, sa.AnalyticError, gc.GraphError, sn.ConvergenceError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _finish(report, out, args.quiet)
    return 0 if report.status in ("pass", "warn") else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
