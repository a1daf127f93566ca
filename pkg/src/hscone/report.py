"""Batch pipeline: run the requested analyses, collect flags and audits, write outputs.

Every flag in the report is stored next to the value and tolerance it came
from (``hysteresis_flag(value, tol)``), and every threshold audit stores
``value``, ``tol`` and the comparison ``op``, so the report can be re-checked
without rerunning anything.  Exit status: 0 when all audits pass, 1 when one
fails, 3 when a requested stage hits a numerical failure.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .catalog import CatalogError, HomogeneousTorusParams, PRESETS, make_immersion
from .config import ANALYSES, Config, ConfigError
from .geometry import DegenerateMetricError, J, divergence, induced_metric, sphere_mean_curvature
from .hodge import (
    NotLegendrianError,
    angle_gradient_check,
    hodge_fields,
    lagrangian_angle,
    theta_harmonicity,
    unwrap_angle_grid,
)
from .hopf import (
    EVERYWHERE_LEGENDRIAN,
    PreconditionError,
    WindingAmbiguityError,
    find_legendrian_points,
    hopf_analysis,
    poincare_hopf_audit,
)
from .immersions import ExponentialImmersion, Immersion, SphereChartImmersion
from .sampling import grid_map
from .search import ACTIVE_Q, classify_family_member, random_simplex, search_legendrian_hs
from .stationarity import (
    HSConeSummary,
    _div_JH_fd,
    alpha_coefficients,
    div_JH,
    hysteresis_flag,
    isotropy_deviation_f,
    isotropy_residual,
    stationarity_S2,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
DEFAULT_RESOLUTION = 128
EXIT_OK, EXIT_AUDIT, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

NUMERICAL_ERRORS = (DegenerateMetricError, WindingAmbiguityError, np.linalg.LinAlgError,
                    ArithmeticError)


class NumericalFailure(RuntimeError):
    """A stage produced non-finite values or could not complete numerically."""


def audit_passes(entry: dict) -> bool:
    """Re-derive an audit verdict from its recorded fields."""
    if entry.get("kind") == "index":
        if entry["everywhere_legendrian"]:
            return True
        chi = entry["euler_characteristic"]
        ok = entry["sum_index"] == chi and entry["sum_multiplicity"] == -chi
        return ok and not (entry["genus"] == 0 and entry["n_points"] > 0)
    if entry["op"] == "<=":
        return entry["value"] <= entry["tol"]
    return entry["value"] >= entry["tol"]


@dataclass
class Report:
    data: dict
    exit_code: int
    fields: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(_clean(self.data), sort_keys=True, indent=2) + "\n"

    @property
    def flags(self) -> dict:
        return {k: v["flag"] for k, v in self.data["flags"].items()}


class _Builder:
    def __init__(self):
        self.flags: dict = {}
        self.audits: dict = {}
        self.fields: dict = {}
        self.tables: dict = {}
        self.sections: dict = {}

    def flag(self, name, value, tol):
        value = _finite(name, value)
        self.flags[name] = {"value": value, "tol": tol, "flag": hysteresis_flag(value, tol)}
        return self.flags[name]["flag"]

    def audit(self, name, value, tol, op="<="):
        value = _finite(name, value)
        entry = {"value": value, "tol": tol, "op": op}
        entry["passed"] = audit_passes(entry)
        self.audits[name] = entry


def _finite(name, value) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise NumericalFailure(f"{name} is not finite")
    return value


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


# ----------------------------------------------------------------------------
# stages
# ----------------------------------------------------------------------------

def _invariant_fields(jet):
    alpha = alpha_coefficients(jet)
    metric = induced_metric(jet)
    return {
        "f": isotropy_deviation_f(jet),
        "alpha": alpha,
        "isotropy": isotropy_residual(jet),
        "hbar": np.linalg.norm(sphere_mean_curvature(jet, metric), axis=-1),
        "div_Ju": divergence(jet, metric, J(jet.first)),
    }


def _stage_invariants(imm, cfg, res, b: _Builder):
    tol = cfg.tolerances
    out = grid_map(imm, res, _invariant_fields, order=2, threads=cfg.threads)
    charts = [out]
    # latitude-longitude charts miss the poles; a rotated copy covers them
    if isinstance(imm, SphereChartImmersion) and imm.chart == "latlong":
        charts.append(grid_map(imm.rotated(), res, _invariant_fields, order=2, threads=cfg.threads))

    def mx(key):
        return float(max(np.max(np.abs(c[key])) for c in charts))

    sec = {
        "charts": len(charts),
        "isotropy_max": mx("isotropy"),
        "f_min": float(min(np.min(c["f"]) for c in charts)),
        "f_max": float(max(np.max(c["f"]) for c in charts)),
        "hbar_max": mx("hbar"),
        "hbar2_min": float(min(np.min(c["hbar"] ** 2) for c in charts)),
        "hbar2_max": float(max(np.max(c["hbar"] ** 2) for c in charts)),
        "div_Ju_max": mx("div_Ju"),
    }
    b.flag("isotropic", sec["isotropy_max"], tol["isotropy"])
    b.flag("legendrian", max(sec["isotropy_max"], sec["f_max"]), tol["legendrian"])
    b.flag("minimal", sec["hbar_max"], tol["minimal"])
    b.audit("div_Ju_vanishes", sec["div_Ju_max"], tol["identity"])
    b.fields["f"] = out["f"]
    for i in range(imm.m):
        b.fields[f"alpha{i + 1}"] = out["alpha"][..., i]
    b.fields["isotropy"] = out["isotropy"]
    b.fields["hbar"] = out["hbar"]
    return sec


def _stage_stationarity(imm, cfg, res, b: _Builder):
    tol = cfg.tolerances["stationarity"]
    if imm.max_order >= 3:
        out = grid_map(imm, res, lambda jet: {"S1": div_JH(jet), "S2": stationarity_S2(jet)},
                       order=3, threads=cfg.threads)
        method = "exact"
    else:
        pts = imm.domain.grid(res)
        out = {"S1": _div_JH_fd(imm, pts), "S2": stationarity_S2(imm.jet(pts, 2))}
        method = "finite_difference"
    s1, s2 = out["S1"], out["S2"]
    summary = HSConeSummary(float(np.max(np.abs(s1))), float(np.max(np.abs(s2))), tol,
                            tuple(res), float(np.max(np.abs(s1 - s2))))
    b.flag("hs_cone", max(summary.max_S1, summary.max_S2), tol)
    b.fields["S1"], b.fields["S2"] = s1, s2
    sec = summary.as_dict()
    sec.pop("hamiltonian_stationary_cone")
    sec["method"] = method
    return sec


def _stage_hopf(imm, cfg, res, b: _Builder):
    tol = cfg.tolerances
    if imm.m != 2:
        return {"status": "skipped: Hopf analysis needs a surface link"}
    hs = hopf_analysis(imm, res, tol["isothermal"], cfg.threads)
    sec = hs.as_dict()
    b.flag("isothermal", hs.isothermal_defect, tol["isothermal"])
    if hs.gated is None:
        b.flag("hopf_holomorphic", hs.max_cr_residual, tol["cr"])

    if b.flags.get("isotropic", {}).get("flag") is not True:
        sec["legendrian_points"] = "skipped: link is not isotropic"
        return sec
    pts = find_legendrian_points(imm, res, tol=tol["legendrian"],
                                 candidate_threshold=tol["candidate"],
                                 isotropy_tol=10 * tol["isotropy"], newton_tol=tol["newton"])
    everywhere = pts is EVERYWHERE_LEGENDRIAN
    rows = [] if everywhere else [p.as_row() for p in pts]
    sec["everywhere_legendrian"] = everywhere
    sec["legendrian_points"] = rows
    b.tables["legendrian_points"] = rows
    if rows:
        b.audit("legendrian_points_refined", max(r["residual"] for r in rows), tol["newton"])
    if imm.genus is None:
        sec["index_audit"] = "skipped: parameter domain is not a closed surface"
        return sec
    audit = poincare_hopf_audit(pts, imm.genus)
    entry = {"kind": "index", "genus": audit.genus, "euler_characteristic": audit.euler_characteristic,
             "n_points": audit.n_points, "sum_index": audit.sum_index,
             "sum_multiplicity": audit.sum_multiplicity,
             "everywhere_legendrian": audit.everywhere_legendrian}
    entry["passed"] = audit_passes(entry)
    b.audits["poincare_hopf"] = entry
    sec["index_audit"] = audit.as_dict()
    return sec


def _stage_hodge(imm, cfg, res, b: _Builder):
    tol = cfg.tolerances
    out = grid_map(imm, res, hodge_fields, order=2, threads=cfg.threads)
    sec = {
        "d_alpha_max": float(np.max(out["d_alpha"])),
        "d_alpha_minus_2omega_max": float(np.max(np.abs(out["d_alpha"] - 2 * out["isotropy"]))),
        "delta_alpha_coordinate_max": float(np.max(np.abs(out["delta_coord"]))),
        "delta_alpha_closed_form_max": float(np.max(np.abs(out["delta_closed"]))),
        "delta_alpha_route_difference_max": float(np.max(np.abs(out["delta_coord"] - out["delta_closed"]))),
    }
    b.audit("d_alpha_equals_2omega", sec["d_alpha_minus_2omega_max"], tol["identity"])
    b.audit("delta_alpha_routes_agree", sec["delta_alpha_route_difference_max"], tol["identity"])
    b.flag("alpha_closed", sec["d_alpha_max"], tol["identity"])
    b.flag("alpha_coclosed", sec["delta_alpha_coordinate_max"], tol["identity"])

    lagrangian = imm.m == imm.n - 1 and b.flags.get("legendrian", {}).get("flag") is True
    if not lagrangian:
        sec["lagrangian_angle"] = "skipped: cone is not Lagrangian"
        return sec
    try:
        theta = lagrangian_angle(imm.jet(out["t"], 1), tol["angle"]).theta
    except NotLegendrianError as exc:
        sec["lagrangian_angle"] = f"skipped: {exc}"
        return sec
    b.fields["theta"] = theta
    if imm.m == 2:
        b.fields["theta_branch"] = unwrap_angle_grid(theta)[1]
    hr = theta_harmonicity(imm, res, tol=tol["angle"], threads=cfg.threads)
    grad = angle_gradient_check(imm, res, tol=tol["angle"])
    sec.update({
        "theta_spread": hr.theta_spread,
        "harmonicity_residual": hr.residual,
        "beta_periods": hr.periods.tolist(),
        "angle_gradient_error": grad,
    })
    b.flag("theta_constant", hr.theta_spread, tol["angle"])
    b.flag("beta_exact", float(np.max(np.abs(hr.periods), initial=0.0)), tol["period"])
    b.flag("theta_harmonic", hr.residual, tol["harmonicity"])
    b.audit("angle_gradient", grad, tol["angle_gradient"])
    return sec


def _torus_params(imm) -> Optional[HomogeneousTorusParams]:
    if not isinstance(imm, ExponentialImmersion) or imm.m != 2 or len(imm.q) != 3:
        return None
    W = np.asarray(imm.weights, dtype=float)
    try:
        return HomogeneousTorusParams(tuple(imm.q), tuple(W[:, 0]), tuple(W[:, 1]))
    except CatalogError:
        return None


def _stage_classify(imm, cfg, res, b: _Builder):
    p = _torus_params(imm)
    if p is None:
        return {"status": "skipped: not a homogeneous torus"}
    tol = cfg.tolerances["classify"]
    c = classify_family_member(p, tol=tol, cross_check=True, raise_on_mismatch=False)
    lam = np.asarray(c.lam)
    active = np.asarray(p.q) > ACTIVE_Q
    b.flag("family_legendrian", float(np.max(np.abs(c.weight_sums))), tol)
    b.flag("family_minimal", float(np.max(np.abs(lam[active] - 2))), tol)
    cc = dict(c.cross_check)
    cc_tol = cc.pop("tol")
    b.audit("classification_cross_check", max(cc.values()), cc_tol)
    sec = c.as_dict()
    sec["params"] = p.as_dict()
    return sec


def _search_init(cfg: Config) -> HomogeneousTorusParams:
    init = dict(cfg.search.init)
    preset = init.pop("preset", None)
    try:
        if preset is not None:
            if preset not in PRESETS or init:
                raise ConfigError(f"[search] preset {preset!r} is unknown or mixed with q/a/b")
            return PRESETS[preset]
        return HomogeneousTorusParams(tuple(init.pop("q")), tuple(init.pop("a")), tuple(init.pop("b")))
    except KeyError as exc:
        raise ConfigError(f"[search] needs a preset or q, a, b (missing {exc.args[0]})") from exc
    except CatalogError as exc:
        raise ConfigError(f"[search] initial torus: {exc}") from exc


def _stage_search(imm, cfg, res, b: _Builder):
    sc = cfg.search
    init = _search_init(cfg)
    rng = np.random.default_rng(cfg.seed)
    trials, trace = [], []
    for k in range(sc.trials):
        start = init
        if sc.trials > 1:
            start = HomogeneousTorusParams(tuple(random_simplex(rng, len(init.q))), init.a, init.b)
        r = search_legendrian_hs(start, sc.targets, fix_weights=sc.fix_weights,
                                 max_iter=sc.max_iter, tol=cfg.tolerances["search"])
        row = r.as_dict()
        row["initial_q"] = list(start.q)
        trials.append(row)
        trace.extend({"trial": k, "iteration": it, "residual": res_, "mu": mu}
                     for it, res_, mu in r.trace)
    success = sum(t["converged"] for t in trials) / len(trials)
    b.audit("search_success_rate", success, sc.min_success, op=">=")
    b.tables["search_trace"] = trace
    return {"targets": list(sc.targets), "fix_weights": sc.fix_weights, "trials": trials,
            "success_rate": success, "max_iterations": max(t["iterations"] for t in trials)}


STAGES: dict = {
    "invariants": _stage_invariants,
    "stationarity": _stage_stationarity,
    "hopf": _stage_hopf,
    "hodge": _stage_hodge,
    "classify": _stage_classify,
    "search": _stage_search,
}


# ----------------------------------------------------------------------------
# driver
# ----------------------------------------------------------------------------

def build_immersion(cfg: Config) -> Immersion:
    try:
        return make_immersion(cfg.immersion, cfg.params)
    except CatalogError as exc:
        raise ConfigError(str(exc)) from exc


def grid_resolution(cfg: Config, imm: Immersion) -> tuple:
    res = cfg.resolution or (DEFAULT_RESOLUTION,)
    if len(res) == 1:
        res = res * imm.m
    if len(res) != imm.m:
        raise ConfigError(f"{imm.name} has {imm.m} parameters but the grid gives {len(res)} resolutions")
    return tuple(int(r) for r in res)


def run_analysis(cfg: Config, write: bool = True,
                 clock: Callable[[], float] = time.perf_counter) -> Report:
    """Run the configured analyses in dependency order and (optionally) write outputs.

    Raises :class:`ConfigError` for configurations that cannot be run at all.
    """
    imm = build_immersion(cfg)
    res = grid_resolution(cfg, imm)
    requested = [a for a in ANALYSES if a in cfg.analyses]
    order = list(requested)
    # the Hopf and Hodge gates read the invariant flags
    if ("hopf" in order or "hodge" in order) and "invariants" not in order:
        order.insert(0, "invariants")

    b = _Builder()
    timings, errors = {}, {}
    for stage in order:
        start = clock()
        try:
            b.sections[stage] = STAGES[stage](imm, cfg, res, b)
        except PreconditionError as exc:
            b.sections[stage] = {"status": f"skipped: {exc}"}
        except (NumericalFailure, *NUMERICAL_ERRORS) as exc:
            log.error("stage %s failed: %s", stage, exc)
            errors[stage] = f"{type(exc).__name__}: {exc}"
            b.sections[stage] = {"status": "failed", "error": errors[stage]}
        timings[stage] = clock() - start

    if errors:
        code = EXIT_NUMERICAL
    elif all(a["passed"] for a in b.audits.values()):
        code = EXIT_OK
    else:
        code = EXIT_AUDIT

    data = {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "immersion": {**imm.describe(), "params": cfg.params},
        "config": {
            "resolution": list(res),
            "tolerances": dict(sorted(cfg.tolerances.items())),
            "analyses": requested,
            "search": {"init": cfg.search.init, "targets": list(cfg.search.targets),
                       "fix_weights": cfg.search.fix_weights, "trials": cfg.search.trials,
                       "max_iter": cfg.search.max_iter, "min_success": cfg.search.min_success},
        },
        "flags": b.flags,
        "audits": b.audits,
        "analyses": b.sections,
        "exit_code": code,
        "timings": timings,
    }
    report = Report(data, code, b.fields, b.tables)
    if write:
        write_outputs(report, cfg.resolved_output_dir(), cfg.formats, imm)
    return report


def write_outputs(report: Report, out_dir: Path, formats, imm: Optional[Immersion] = None) -> list:
    """Write report.json and the CSV files; return the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        if report.fields:
            written.append(_write_fields(out_dir / "fields.csv", report.fields, imm))
        for name, rows in sorted(report.tables.items()):
            written.append(_write_rows(out_dir / f"{name}.csv", rows))
    if "json" in formats:
        path = out_dir / "report.json"
        path.write_text(report.to_json(), encoding="utf-8")
        written.append(path)
    report.files = written
    return written


def _write_fields(path: Path, fields: dict, imm: Optional[Immersion]) -> Path:
    names = list(fields)
    shape = np.shape(fields[names[0]])
    cols = {}
    if imm is not None:
        pts = imm.domain.grid(shape).reshape(-1, imm.m)
        for i in range(imm.m):
            cols[f"t{i + 1}"] = pts[:, i]
    for k in names:
        cols[k] = np.asarray(fields[k]).reshape(-1)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in zip(*cols.values()):
            w.writerow([_fmt(x) for x in row])
    return path


TABLE_COLUMNS = {
    "legendrian_points": ["t1", "t2", "multiplicity", "index", "residual", "converged"],
    "search_trace": ["trial", "iteration", "residual", "mu"],
}


def _write_rows(path: Path, rows: list) -> Path:
    header = TABLE_COLUMNS.get(path.stem) or (list(rows[0]) if rows else [])
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in header])
    return path
