"""Command-line front end.

Every subcommand reads one JSON config, writes ``report.json``, ``params.json``
and CSV tables into the output directory and prints a one-line verdict.

Exit codes: 0 when every enabled check passes, 1 when a numerical check fails
(the failing invariant is named), 2 for config errors (the field path is named).
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import assembler as asm
from . import catenoid, clifford, curvature, greens, symmetry

CONFIG_VERSION = 1
PRECISION = 10
SUBCOMMANDS = ("spectrum", "catenoid", "group-check", "greens", "assemble", "verify", "scaling")

DEFAULT_CONFIG = {
    "version": CONFIG_VERSION,
    "p": 1,
    "q": 2,
    # offsets t - t_* (or absolute angles via {"angles": [...]})
    "t_schedule": {"first_offset": 0.04, "count": 4, "ratio": 0.5},
    "window": asm.DEFAULT_WINDOW,
    "generators": "default",
    "truncation": {"greens": [40, 40], "surface": [120, 120]},
    "resolution": {},
    "gamma": -0.5,
    "spectrum": {"degree_max": 10, "modes": [[1, 1], [0, 0], [2, 0]], "samples": 32},
    "catenoid": {"dims": [3, 4, 5], "s_max": 4.0, "modes": [2, 3], "delta": -0.5},
    "tolerances": {
        "kernel_eigenvalue": 1e-12,
        "linearization": 0.01,
        "catenoid_residual": 1e-5,
        "jacobi_residual": 1e-4,
        "kernel_matrix": 1e-8,
        "expansion_exponent": 0.15,
        "expansion_coefficient": 0.15,
        "pairing": 0.02,
        "invariance": 1e-8,
        "weight_ratio": 4.0,
        "band_ratio": 3.0,
        "constant_ratio": 3.0,
        "eps_halving": 0.1,
        "matching": 1e-12,
        "gap_factor": 10.0,
    },
    "checks": {"require_admissible": False},
    "out": "cmclab-out",
}


class ConfigError(ValueError):
    """Schema violation; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# --- config -------------------------------------------------------------------

def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(where, "unknown field")
        if where == "t_schedule" and isinstance(val, dict) and ({"angles", "offsets"} & set(val)):
            if set(val) - {"angles", "offsets"} or len(val) != 1:
                raise ConfigError(where, "explicit schedules take exactly one of 'angles' or 'offsets'")
            out[key] = val
        elif isinstance(base[key], dict) and base[key] and isinstance(val, dict):
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = val
    return out


def _integer(cfg: dict, key: str, lo: int) -> int:
    val = cfg[key]
    if not isinstance(val, int) or isinstance(val, bool) or val < lo:
        raise ConfigError(key, f"must be an integer >= {lo}")
    return val


def _number(val, path: str) -> float:
    if not isinstance(val, (int, float)) or isinstance(val, bool) or not math.isfinite(val):
        raise ConfigError(path, "must be a finite number")
    return float(val)


@dataclass
class ExperimentConfig:
    p: int
    q: int
    schedule: list
    window: float
    generators: list
    greens_caps: tuple
    surface_caps: tuple
    resolution: dict
    gamma: float
    spectrum: dict
    catenoid: dict
    tolerances: dict
    checks: dict
    out: str
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def t_star(self) -> float:
        return clifford.minimal_angle(self.p, self.q)


def _schedule(cfg: dict, t_star: float, window: float) -> list:
    sch = cfg["t_schedule"]
    if isinstance(sch, list):
        angles = [_number(a, f"t_schedule[{k}]") for k, a in enumerate(sch)]
    elif isinstance(sch, dict) and "angles" in sch:
        angles = [_number(a, f"t_schedule.angles[{k}]") for k, a in enumerate(sch["angles"])]
    elif isinstance(sch, dict) and "offsets" in sch:
        angles = [t_star + _number(a, f"t_schedule.offsets[{k}]") for k, a in enumerate(sch["offsets"])]
    elif isinstance(sch, dict):
        first = _number(sch.get("first_offset", 0.04), "t_schedule.first_offset")
        ratio = _number(sch.get("ratio", 0.5), "t_schedule.ratio")
        count = sch.get("count", 4)
        if not isinstance(count, int) or count < 1:
            raise ConfigError("t_schedule.count", "must be a positive integer")
        if not 0 < ratio < 1:
            raise ConfigError("t_schedule.ratio", "must lie in (0, 1)")
        angles = [t_star + first * ratio**k for k in range(count)]
    else:
        raise ConfigError("t_schedule", "must be a list of angles or a schedule object")
    if not angles:
        raise ConfigError("t_schedule", "is empty")
    for k, a in enumerate(angles):
        if not t_star < a < t_star + window:
            raise ConfigError(f"t_schedule[{k}]", f"angle {a} outside (t_*, t_* + {window})")
    return angles


def _generators(cfg: dict, p: int, q: int) -> list:
    gens = cfg["generators"]
    if gens == "default":
        return symmetry.default_admissible_generators(p, q)
    if isinstance(gens, dict) and "example" in gens:
        ex = gens["example"]
        if ex == 1:
            return symmetry.example1_generators(gens.get("tau1", [[1, 1], [1, 1]]),
                                                gens.get("tau2", [[2, 1], [0, 1]]))
        if ex == 2:
            return symmetry.example2_generators(p, q, gens.get("tau1", [[1, 1], [0, 1]]),
                                                gens.get("tau2", [[0, 1], [2, 1]]))
        if ex == 3:
            return symmetry.example3_generators(p, q)
        raise ConfigError("generators.example", "must be 1, 2 or 3")
    if isinstance(gens, list):
        return gens
    raise ConfigError("generators", "must be 'default', {'example': k} or a list of generator specs")


def _caps(val, path: str) -> tuple:
    if not (isinstance(val, list) and len(val) == 2 and all(isinstance(v, int) and v >= 1 for v in val)):
        raise ConfigError(path, "must be [I_max, J_max] with positive integers")
    return tuple(val)


def parse_config(data: dict, out: str | None = None) -> ExperimentConfig:
    """Validate a config document against the schema and fill defaults."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    if "version" not in data:
        raise ConfigError("version", "missing")
    if data["version"] != CONFIG_VERSION:
        raise ConfigError("version", f"unsupported version {data['version']!r}, expected {CONFIG_VERSION}")
    cfg = _merge(DEFAULT_CONFIG, data)
    p, q = _integer(cfg, "p", 1), _integer(cfg, "q", 1)
    window = _number(cfg["window"], "window")
    if window <= 0:
        raise ConfigError("window", "must be positive")
    t_star = clifford.minimal_angle(p, q)
    gamma = _number(cfg["gamma"], "gamma")
    if not 2 - (p + q) < gamma < 0:
        raise ConfigError("gamma", f"must lie in ({2 - (p + q)}, 0)")
    for key, val in cfg["tolerances"].items():
        if _number(val, f"tolerances.{key}") <= 0:
            raise ConfigError(f"tolerances.{key}", "must be positive")
    if not isinstance(cfg["resolution"], dict):
        raise ConfigError("resolution", "must be an object")
    for key, val in cfg["resolution"].items():
        if key not in asm.DEFAULT_RESOLUTION:
            raise ConfigError(f"resolution.{key}", "unknown field")
        _number(val, f"resolution.{key}")
    return ExperimentConfig(
        p=p, q=q, schedule=_schedule(cfg, t_star, window), window=window,
        generators=_generators(cfg, p, q),
        greens_caps=_caps(cfg["truncation"]["greens"], "truncation.greens"),
        surface_caps=_caps(cfg["truncation"]["surface"], "truncation.surface"),
        resolution=dict(cfg["resolution"]), gamma=gamma, spectrum=cfg["spectrum"],
        catenoid=cfg["catenoid"], tolerances=cfg["tolerances"], checks=cfg["checks"],
        out=out or cfg["out"], raw=cfg,
    )


# --- reporting ----------------------------------------------------------------

def _clean(obj):
    """Round floats to fixed precision so identical runs give identical bytes."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        if not math.isfinite(val):
            return str(val)
        return float(f"{val:.{PRECISION}e}")
    return obj


class Report:
    """Accumulates checks and results for one subcommand."""

    def __init__(self, subcommand: str):
        self.subcommand = subcommand
        self.checks = []
        self.results = {}
        self.tables = {}

    def check(self, invariant: str, value, threshold, passed: bool, enabled: bool = True):
        self.checks.append({"invariant": invariant, "value": value, "threshold": threshold,
                            "passed": bool(passed), "enabled": enabled})
        return passed

    def table(self, name: str, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.{PRECISION}e}" if isinstance(v, (float, np.floating)) else v for v in row])
        self.tables[name] = buf.getvalue()

    @property
    def failures(self) -> list:
        return [c["invariant"] for c in self.checks if c["enabled"] and not c["passed"]]

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, "passed": not self.failures,
                "failures": self.failures, "checks": self.checks, "results": self.results}


def _fmt(x) -> str:
    return f"{x:.4g}"


# --- shared setup -------------------------------------------------------------

def _group(cfg: ExperimentConfig):
    gens = [symmetry.compile_generator(cfg.p, cfg.q, g, f"generators[{k}]")
            for k, g in enumerate(cfg.generators)]
    return symmetry.close_group(cfg.p, cfg.q, gens)


def _greens_field(cfg, group, caps):
    gl = symmetry.orbit(group)
    return greens.solve_greens(cfg.p, cfg.q, gl, caps[0], caps[1])


# --- subcommands --------------------------------------------------------------

def cmd_spectrum(cfg: ExperimentConfig, rep: Report, seed: int) -> str:
    p, q, ts = cfg.p, cfg.q, cfg.t_star
    dmax = int(cfg.spectrum["degree_max"])
    tol = cfg.tolerances
    lam = clifford.jacobi_eigenvalue_table(p, q, ts, dmax, dmax)
    rows = [(i, j, float(lam[i, j])) for i in range(dmax + 1) for j in range(dmax + 1)]
    rep.table("spectrum.csv", ["i", "j", "lambda"], rows)
    k11 = abs(float(lam[1, 1]))
    rep.check("lambda_11(t_*) = 0", k11, tol["kernel_eigenvalue"], k11 <= tol["kernel_eigenvalue"])
    mixed = [float(lam[i, j]) for i in range(1, dmax + 1) for j in range(1, dmax + 1) if (i, j) != (1, 1)]
    rep.check("lambda_ij(t_*) < 0 for i, j >= 1 off (1,1)", max(mixed), 0.0, max(mixed) < 0)
    axes = np.concatenate([lam[:, 0], lam[0, :]])
    rep.check("lambda_i0, lambda_0j != 0", float(np.min(np.abs(axes))), 0.0, bool(np.all(axes != 0)))
    lin = {}
    t_lin = cfg.schedule[0]
    for i, j in cfg.spectrum["modes"]:
        if p + q < 3:
            continue
        err, _, _ = curvature.linearization_check(p, q, t_lin, clifford.ModeIndex(i, j),
                                                  samples=int(cfg.spectrum["samples"]), seed=seed)
        lin[f"{i},{j}"] = err
        rep.check(f"linearization mode ({i},{j}) matches lambda_ij(t)", err, tol["linearization"],
                  err <= tol["linearization"])
    dim, labels = clifford.kernel_description(p, q)
    rep.results.update(t_star=ts, kernel_dimension=dim, kernel_modes=labels, linearization_t=t_lin,
                       linearization_error=lin, lambda_11=float(lam[1, 1]))
    return f"kernel of C_t* = {dim} bilinear modes, lambda_11 = {lam[1, 1]:.1e}"


def cmd_catenoid(cfg: ExperimentConfig, rep: Report, seed: int) -> str:
    tol = cfg.tolerances
    smax = float(cfg.catenoid["s_max"])
    delta = float(cfg.catenoid["delta"])
    rows = []
    out = {}
    for n in cfg.catenoid["dims"]:
        s = np.linspace(-smax, smax, 41)
        res = max(catenoid.catenoid_mean_curvature_residual(n, float(x), 1e-4) for x in s)
        rep.check(f"catenoid n={n} mean curvature residual", res, tol["catenoid_residual"],
                  res <= tol["catenoid_residual"])
        jac = {name: catenoid.jacobi_residual(n, name) for name in catenoid.JACOBI_FIELDS}
        for name, val in jac.items():
            rep.check(f"catenoid n={n} Jacobi field {name} residual", val, tol["jacobi_residual"],
                      val <= tol["jacobi_residual"])
        modes = {}
        for j in cfg.catenoid["modes"]:
            v = catenoid.bounded_mode_verdict(n, j, delta)
            modes[j] = {"verdict": v.verdict, "growth": v.growth_exponent, "expected": v.expected_growth}
            rep.check(f"catenoid n={n} mode j={j} has no bounded solution", v.growth_exponent,
                      v.expected_growth, v.verdict == "no_bounded_nontrivial")
            rows.append((n, j, v.verdict, v.growth_exponent, v.expected_growth))
        out[n] = {"residual": res, "jacobi": jac, "modes": modes,
                  "neck_integral": catenoid.neck_height_integral(n)}
    rep.table("catenoid_modes.csv", ["n", "j", "verdict", "growth", "expected"], rows)
    rep.results["dims"] = out
    return f"catenoid checks on n = {list(cfg.catenoid['dims'])}"


def cmd_group_check(cfg: ExperimentConfig, rep: Report, seed: int) -> str:
    group = _group(cfg)
    adm = symmetry.fixed_bilinear_dimension(group)
    gl = symmetry.orbit(group)
    M = symmetry.kernel_orthogonality_matrix(gl)
    rep.check("Reynolds rank equals trace formula", adm.reynolds_rank, adm.trace_value,
              abs(adm.reynolds_rank - adm.trace_value) < 0.5)
    rep.check("group is admissible", adm.dimension, 0, adm.admissible,
              enabled=bool(cfg.checks.get("require_admissible", False)))
    rep.results.update(order=group.order, orbit_size=gl.m, fixed_dimension=adm.dimension,
                       admissible=adm.admissible, reynolds_rank=adm.reynolds_rank,
                       trace_value=adm.trace_value, contains_rho=symmetry.contains_rho(group),
                       kernel_matrix_max=float(np.max(np.abs(M))),
                       invariant_forms=[b for b in adm.basis])
    rep.table("orbit.csv", [f"c{k}" for k in range(cfg.n + 2)], [tuple(map(float, pt)) for pt in gl.points])
    verdict = "ADMISSIBLE" if adm.admissible else "NOT ADMISSIBLE"
    return f"order {group.order}, orbit {gl.m}, fixed dimension {adm.dimension}, {verdict}"


def cmd_greens(cfg: ExperimentConfig, rep: Report, seed: int) -> str:
    tol = cfg.tolerances
    group = _group(cfg)
    fld = _greens_field(cfg, group, cfg.greens_caps)
    m = fld.gluing.m
    M = symmetry.kernel_orthogonality_matrix(fld.gluing)
    kmax = float(np.max(np.abs(M)))
    rep.check("kernel-orthogonality matrix vanishes", kmax, tol["kernel_matrix"] * m,
              kmax <= tol["kernel_matrix"] * m)
    fit = greens.local_expansion(fld)
    expect = 2.0 - cfg.n
    rel_e = abs(fit.exponent - expect) / abs(expect)
    rel_c = abs(fit.coefficient - 1.0)
    rep.check("near-source exponent 2 - n", fit.exponent, expect, rel_e <= tol["expansion_exponent"])
    rep.check("near-source coefficient 1", fit.coefficient, 1.0, rel_c <= tol["expansion_coefficient"])
    lhs, rhs, rel = greens.pairing_identity(fld)
    rep.check("distributional pairing identity", rel, tol["pairing"], rel <= tol["pairing"])
    rep.results.update(caps=list(cfg.greens_caps), m=m, exponent=fit.exponent, coefficient=fit.coefficient,
                       gamma_lambda=fit.gamma_lambda, fit_residual=fit.residual,
                       pairing={"lhs": lhs, "rhs": rhs, "relative": rel})
    rep.table("expansion.csv", ["radius", "value"], list(zip(map(float, fit.radii), map(float, fit.values))))
    rep.tables["greens.json"] = json.dumps(_clean(greens.to_json(fld)), sort_keys=True) + "\n"
    return f"exponent {_fmt(fit.exponent)}, coefficient {_fmt(fit.coefficient)}, gamma {_fmt(fit.gamma_lambda)}"


def _surface_setup(cfg):
    group = _group(cfg)
    fld = _greens_field(cfg, group, cfg.surface_caps)
    return group, fld


def cmd_assemble(cfg: ExperimentConfig, rep: Report, seed: int) -> str:
    tol = cfg.tolerances
    group, fld = _surface_setup(cfg)
    per = []
    for k, t in enumerate(cfg.schedule):
        atlas = asm.build_atlas(cfg.p, cfg.q, t, group, fld, cfg.resolution, cfg.window)
        prm = atlas.params
        defect = asm.invariance_defect(atlas)
        rep.check(f"atlas[{k}] G-invariance", defect, tol["invariance"], defect <= tol["invariance"])
        ratios = asm.weight_continuity(prm, atlas.weight_radius)
        lo, hi = min(ratios.values()), max(ratios.values())
        bound = tol["weight_ratio"]
        rep.check(f"atlas[{k}] weight-ratio continuity", [lo, hi], [1 / bound, bound],
                  1 / bound <= lo and hi <= bound)
        resid = max(abs(prm.equation_residual()),
                    abs(clifford.mean_curvature_at(prm.p, prm.q, prm.t_minus)
                        + clifford.mean_curvature_at(prm.p, prm.q, prm.t_plus)))
        rep.check(f"atlas[{k}] matching equations", resid, tol["matching"], resid <= tol["matching"])
        per.append({"params": prm.to_dict(), "points": len(atlas), "invariance_defect": defect,
                    "weight_ratios": ratios, "cap_deviation": asm.cap_deviation(atlas),
                    "tags": sorted(atlas.tags())})
        rep.tables[f"atlas_{k}.csv"] = asm.atlas_csv(atlas, PRECISION)
    rep.results["atlases"] = per
    return f"{len(per)} atlases, {sum(a['points'] for a in per)} points"


def _verify_runs(cfg, rep):
    group, fld = _surface_setup(cfg)
    runs = []
    for k, t in enumerate(cfg.schedule):
        atlas = asm.build_atlas(cfg.p, cfg.q, t, group, fld, cfg.resolution, cfg.window)
        r = curvature.verify_cmc_error(atlas, fld, cfg.gamma)
        runs.append((atlas, r))
        rep.tables[f"curvature_{k}.csv"] = curvature.report_csv(atlas, r, PRECISION)
    return fld, runs


def cmd_verify(cfg: ExperimentConfig, rep: Report, seed: int) -> str:
    _, runs = _verify_runs(cfg, rep)
    rep.results["reports"] = [dict(r.to_dict(), t=a.params.t) for a, r in runs]
    for k, (a, r) in enumerate(runs):
        ok = all(math.isfinite(v) for v in r.region_weighted_max.values())
        rep.check(f"report[{k}] weighted errors finite", r.global_weighted, None, ok)
    worst = max(r.scaled_global for _, r in runs)
    return f"{len(runs)} reports, max scaled weighted error {_fmt(worst)}"


def _ratio(vals) -> float:
    vals = [v for v in vals if v > 0]
    return max(vals) / min(vals) if vals else float("inf")


def cmd_scaling(cfg: ExperimentConfig, rep: Report, seed: int) -> str:
    tol = cfg.tolerances
    fld, runs = _verify_runs(cfg, rep)
    ts = cfg.t_star
    offs = np.array([a.params.t - ts for a, _ in runs])
    eps = np.array([a.params.eps for a, _ in runs])
    scaled = [r.scaled_global for _, r in runs]
    band = _ratio(scaled)
    rep.check("scaled weighted error within band", band, tol["band_ratio"], band <= tol["band_ratio"])
    for key in ("cap_constant_near", "cap_constant_far", "neck_constant"):
        ratio = _ratio([getattr(r, key) for _, r in runs])
        rep.check(f"{key} stable across schedule", ratio, tol["constant_ratio"], ratio <= tol["constant_ratio"])
    rows = []
    n = cfg.n
    for k, (a, r) in enumerate(runs):
        prm = a.params
        gap = junction_gap(prm, fld)
        rows.append((float(offs[k]), prm.eps, prm.r, r.scaled_global, r.cap_constant_near,
                     r.cap_constant_far, r.neck_constant, asm.cap_deviation(a), gap))
        bound = tol["gap_factor"] * prm.eps ** (4 * (n - 1) / n)
        rep.check(f"schedule[{k}] graph/neck gap at r_t", gap, bound, gap <= bound)
    halving = eps[:-1] / eps[1:] / (offs[:-1] / offs[1:])
    dev = float(np.max(np.abs(halving - 1.0))) if len(eps) > 1 else 0.0
    rep.check("eps_t proportional to t - t_*", dev, tol["eps_halving"], dev <= tol["eps_halving"],
              enabled=len(eps) > 1)
    slope_eps = float(np.polyfit(np.log(offs), np.log(eps), 1)[0]) if len(eps) > 1 else float("nan")
    cap_dev = np.array([row[7] for row in rows])
    slope_cap = float(np.polyfit(np.log(eps), np.log(cap_dev), 1)[0]) if len(eps) > 1 else float("nan")
    rep.table("scaling.csv", ["t_minus_t_star", "eps", "r", "scaled_weighted", "cap_constant_near",
                              "cap_constant_far", "neck_constant", "cap_deviation", "gap"], rows)
    rep.results.update(band_ratio=band, scaled=scaled, eps_slope=slope_eps, cap_deviation_slope=slope_cap,
                       reports=[r.to_dict() for _, r in runs])
    return f"band ratio {_fmt(band)} (limit {_fmt(tol['band_ratio'])}), eps slope {_fmt(slope_eps)}"


def junction_gap(prm, fld) -> float:
    """``|upper graph - upper neck|`` on the junction sphere ``|z_bar| = r_t``."""
    zb = np.zeros((1, prm.n))
    zb[0, 0] = prm.r
    gam = np.atleast_1d(greens.evaluate(fld, asm.source_points(fld, 0, zb)))
    s = catenoid.s_of_radius(prm.n, prm.r, prm.eps)
    return float(abs(asm.graph_height(prm, gam, "upper")[0] - asm.neck_height(prm, np.array([s]))[0]))


COMMANDS = {
    "spectrum": cmd_spectrum,
    "catenoid": cmd_catenoid,
    "group-check": cmd_group_check,
    "greens": cmd_greens,
    "assemble": cmd_assemble,
    "verify": cmd_verify,
    "scaling": cmd_scaling,
}


# --- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cmclab", description="Numerical checks of the CMC doubling construction.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON config file (defaults are used when omitted)")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, default=0, help="seed for random sample points")
    ap.add_argument("--strict", action="store_true", help="treat warnings as failures")
    return ap


def _write(out: str, name: str, text: str):
    with open(os.path.join(out, name), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def run(subcommand: str, config: dict, out: str | None = None, seed: int = 0, strict: bool = False):
    """Run one subcommand; returns ``(exit_code, verdict, report)``."""
    try:
        cfg = parse_config(config, out)
    except (ConfigError, symmetry.ConfigurationError) as exc:
        return 2, f"CONFIG ERROR {exc}", None
    rep = Report(subcommand)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            verdict = COMMANDS[subcommand](cfg, rep, seed)
        except symmetry.ConfigurationError as exc:
            return 2, f"CONFIG ERROR {exc}", None
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            rep.check(f"{type(exc).__name__}: {exc}", None, None, False)
            verdict = "aborted"
    for w in caught:
        rep.check(f"warning: {w.message}", None, None, False, enabled=strict)
    os.makedirs(cfg.out, exist_ok=True)
    _write(cfg.out, "params.json", json.dumps(_clean(cfg.raw), indent=2, sort_keys=True) + "\n")
    _write(cfg.out, "report.json", json.dumps(_clean(rep.to_dict()), indent=2, sort_keys=True) + "\n")
    for name, text in rep.tables.items():
        _write(cfg.out, name, text)
    fails = rep.failures
    if fails:
        return 1, f"FAIL {subcommand}: {verdict}; failed: {'; '.join(fails)}", rep
    return 0, f"PASS {subcommand}: {verdict}", rep


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"CONFIG ERROR --config: {exc}")
            return 2
    else:
        config = {"version": CONFIG_VERSION}
    code, verdict, _ = run(args.subcommand, config, args.out, args.seed, args.strict)
    print(verdict)
    return code


if __name__ == "__main__":
    sys.exit(main())
