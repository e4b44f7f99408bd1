"""Config-driven experiments with hashed, reproducible outputs."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from threadpoolctl import threadpool_limits

from . import approximation as ap
from . import frames as fr
from . import localization as lo
from . import translations as tr
from .core import FockModel, TrustRadiusWarning, make_model
from .expr import ExpressionError, parse_symbol
from .operators import OpMatrix, berezin, toeplitz_function, toeplitz_measure, toeplitz_poly
from .presets import PRESETS, build_preset
from .symbols import DiscreteMeasure, SymbolPoly
from .weights import InvalidParameterError, check_phi_condition, make_weight

log = logging.getLogger(__name__)

KINDS = ("berezin-scan", "decay-scan", "essnorm", "frame-check", "resolution-check",
         "heat", "sharp", "translation", "phi-check")

# kind -> allowed params with defaults
PARAM_DEFAULTS = {
    "berezin-scan": {"radii": [0.0, 1.0, 2.0, 3.0], "n_dir": 8},
    "decay-scan": {"radii": [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0]},
    "essnorm": {"tail_r": [2.0, 4.0, 6.0], "rho_t": [2.0, 3.0, 4.0], "R": 1.0, "local_z": 5.0, "local_d": [1.0]},
    "frame-check": {"d": 1.0, "window": 2.0, "R": 2.0, "n_samples": 10, "cover_points": 10000},
    "resolution-check": {"cells": [0.2, 0.1], "domain_radius": 8.0, "block": 10},
    "heat": {"t_list": [0.2, 0.1, 0.05], "h": 0.05},
    "sharp": {"f": "z", "g": "conj(z)"},
    "translation": {"shell": [3.0, 4.0], "theta_pairs": 10},
    "phi-check": {"r_min": 0.05, "r_max": 10.0, "n_r": 200, "max_ratio": 100.0},
}
TOP_KEYS = {"kind", "weight", "N", "operator", "params", "seed", "output", "expect"}
WEIGHT_KEYS = {"kind", "alpha", "m", "A"}
OPERATOR_KEYS = {"preset", "symbol", "atoms"}
EXPECT_OPS = {"lt": np.less, "le": np.less_equal, "gt": np.greater, "ge": np.greater_equal}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message starts with the offending key path."""


@dataclass
class ExperimentConfig:
    kind: str
    weight: dict
    N: int
    operator: dict
    params: dict
    seed: int = 0
    output: str = "focklab_out"
    expect: dict = field(default_factory=dict)

    def canonical(self) -> dict:
        return {"kind": self.kind, "weight": self.weight, "N": self.N, "operator": self.operator,
                "params": self.params, "seed": self.seed, "expect": self.expect}


def _num(v, path, positive=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{path}: must be > 0, got {v!r}")
    return int(v) if integer else float(v)


def _check_like(v, default, path):
    if isinstance(default, list):
        if not isinstance(v, list) or not v:
            raise ConfigError(f"{path}: expected a nonempty list")
        return [_num(x, f"{path}[{i}]") for i, x in enumerate(v)]
    if isinstance(default, str):
        if not isinstance(v, str):
            raise ConfigError(f"{path}: expected a string")
        return v
    return _num(v, path, integer=isinstance(default, int))


def validate_config(raw) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>: expected a mapping")
    for k in raw:
        if k not in TOP_KEYS:
            raise ConfigError(f"{k}: unknown key")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind: expected one of {KINDS}, got {kind!r}")
    w = raw.get("weight", {"kind": "classical", "alpha": 1.0})
    if not isinstance(w, dict):
        raise ConfigError("weight: expected a mapping")
    for k in w:
        if k not in WEIGHT_KEYS:
            raise ConfigError(f"weight.{k}: unknown key")
    weight = {"kind": w.get("kind", "classical"), "alpha": _num(w.get("alpha", 1.0), "weight.alpha", True)}
    if weight["kind"] not in ("classical", "fock_sobolev"):
        raise ConfigError(f"weight.kind: expected classical or fock_sobolev, got {weight['kind']!r}")
    if weight["kind"] == "fock_sobolev":
        weight["m"] = _num(w.get("m", 1), "weight.m", integer=True)
        weight["A"] = _num(w.get("A", 3.0), "weight.A", True)
    try:
        make_weight(weight["kind"], weight["alpha"], weight.get("m", 0), weight.get("A", 1.0))
    except InvalidParameterError as exc:
        raise ConfigError(f"weight.{exc}") from None
    N = _num(raw.get("N", 40), "N", True, integer=True)
    if N > 400:
        raise ConfigError("N: must be <= 400")
    op = raw.get("operator", {"preset": "identity"})
    if not isinstance(op, dict) or len(op) != 1:
        raise ConfigError("operator: expected exactly one of preset, symbol, atoms")
    (okey, oval), = op.items()
    if okey not in OPERATOR_KEYS:
        raise ConfigError(f"operator.{okey}: unknown key")
    if okey == "preset" and oval not in PRESETS:
        raise ConfigError(f"operator.preset: unknown preset {oval!r}")
    if okey == "symbol":
        try:
            parse_symbol(str(oval))
        except ExpressionError as exc:
            raise ConfigError(f"operator.symbol: {exc}") from None
    if okey == "atoms":
        if not isinstance(oval, list) or not all(isinstance(a, list) and len(a) == 3 for a in oval):
            raise ConfigError("operator.atoms: expected a list of [re, im, mass] triples")
        oval = [[_num(x, f"operator.atoms[{i}]") for x in a] for i, a in enumerate(oval)]
    params = dict(PARAM_DEFAULTS[kind])
    given = raw.get("params", {}) or {}
    if not isinstance(given, dict):
        raise ConfigError("params: expected a mapping")
    for k, v in given.items():
        if k not in params:
            raise ConfigError(f"params.{k}: unknown key for kind {kind}")
        params[k] = _check_like(v, PARAM_DEFAULTS[kind][k], f"params.{k}")
    if kind == "sharp":
        for k in ("f", "g"):
            try:
                if not isinstance(parse_symbol(params[k]), SymbolPoly):
                    raise ConfigError(f"params.{k}: sharp products need polynomial symbols")
            except ExpressionError as exc:
                raise ConfigError(f"params.{k}: {exc}") from None
    if kind == "heat" and okey != "symbol":
        raise ConfigError("operator: heat experiments need operator.symbol")
    expect = raw.get("expect", {}) or {}
    if not isinstance(expect, dict):
        raise ConfigError("expect: expected a mapping")
    for name, cond in expect.items():
        if not isinstance(cond, dict) or len(cond) != 1 or next(iter(cond)) not in EXPECT_OPS:
            raise ConfigError(f"expect.{name}: expected a single condition among {sorted(EXPECT_OPS)}")
        _num(next(iter(cond.values())), f"expect.{name}")
    seed = _num(raw.get("seed", 0), "seed", integer=True)
    output = raw.get("output", "focklab_out")
    return ExperimentConfig(kind, weight, N, {okey: oval}, params, seed, str(output), expect)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"<root>: not valid YAML ({exc})") from None
    return validate_config(raw)


def build_model(cfg: ExperimentConfig) -> FockModel:
    w = cfg.weight
    return make_model(make_weight(w["kind"], w["alpha"], w.get("m", 0), w.get("A", 1.0)), cfg.N)


def build_operator(cfg: ExperimentConfig, model: FockModel) -> OpMatrix:
    (k, v), = cfg.operator.items()
    if k == "preset":
        return build_preset(v, model)
    if k == "atoms":
        pts = [complex(a[0], a[1]) for a in v]
        return toeplitz_measure(model, DiscreteMeasure(pts, [a[2] for a in v]))
    sym = parse_symbol(v)
    if isinstance(sym, SymbolPoly):
        return toeplitz_poly(model, sym)
    return toeplitz_function(model, sym)


# ---------------------------------------------------------------- outputs


def _f(x) -> str:
    return repr(float(x))


def scan_csv(z, values, trusted) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["z_re", "z_im", "value_re", "value_im", "trusted"])
    for zz, v, t in zip(z, values, trusted):
        w.writerow([_f(zz.real), _f(zz.imag), _f(np.real(v)), _f(np.imag(v)), int(t)])
    return buf.getvalue()


@dataclass
class RunResult:
    outputs: dict  # suffix -> text payload
    metrics: dict
    checks: list  # (name, value, op, bound)
    untrusted: int = 0


def _run_berezin(cfg, model, A):
    p = cfg.params
    ang = np.exp(2j * np.pi * np.arange(int(p["n_dir"])) / int(p["n_dir"]))
    z = np.concatenate([[0j] if r == 0 else r * ang for r in p["radii"]])
    trusted = model.trusted(z)
    vals = np.asarray(berezin(model, A, z))
    metrics = {"berezin_max_abs": float(np.max(np.abs(vals))), "berezin_min_abs": float(np.min(np.abs(vals)))}
    return RunResult({"csv": scan_csv(z, vals, trusted)}, metrics, [], int(np.count_nonzero(~trusted)))


def _run_decay(cfg, model, A):
    c = lo.decay_profile(model, A, cfg.params["radii"], seed=cfg.seed)
    metrics = {f"decay@{r:g}": v for r, v in zip(c.radii, c.values)}
    return RunResult({"csv": c.to_csv()}, metrics, [], len(c.meta["omitted"]))


def _run_essnorm(cfg, model, A):
    p = cfg.params
    tails = [lo.tail_norm(model, A, r) for r in p["tail_r"]]
    tail_curve = lo.DecayCurve(p["tail_r"], tails, np.full(len(tails), model.dim), np.ones(len(tails), bool),
                               "tail_norm")
    rho = lo.compactness_indicator(model, A, p["R"], p["rho_t"])
    local = {(p["local_z"], d): lo.local_norm(model, A, p["local_z"], d) for d in p["local_d"]}
    report = lo.EssNormReport(tail_curve, rho, local)
    metrics = {f"tail_norm@{r:g}": v for r, v in zip(p["tail_r"], tails)}
    metrics.update({f"rho@{t:g}": v for t, v in zip(rho.radii, rho.values)})
    metrics.update({f"local_norm@{d:g}": v for (_, d), v in local.items()})
    checks = [("tail_norm nonincreasing", float(np.max(np.diff(tails), initial=-np.inf)), "le", 1e-10)]
    untrusted = int(np.count_nonzero(~rho.trusted)) + int(abs(p["local_z"]) > model.trust_radius)
    return RunResult({"json": report.to_json(), "csv": tail_curve.to_csv()}, metrics, checks, untrusted)


def _run_frames(cfg, model, A):
    p = cfg.params
    cover = fr.make_cover(p["d"], p["window"])
    cc = cover.check(int(p["cover_points"]), cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    n = int(p["n_samples"])
    zs = rng.uniform(0, 1, n) + 1j * rng.uniform(0, 1, n)
    scan = fr.frame_norm_scan(model, p["R"], zs)
    u = fr.lattice_points(p["R"]) + zs[0]
    F = fr.tilde_kernel_matrix(model, u)
    G = np.abs(F.conj().T @ F)
    ok = model.trusted(u)
    D = np.abs(u[:, None] - u[None, :])
    gerr = float(np.max(np.abs(G - model.alpha / np.pi * np.exp(-model.alpha * D**2 / 2))[np.ix_(ok, ok)])) \
        if ok.any() else 0.0
    metrics = {"cover_cells": len(cover.centers), "cover_max_overlap": cc["max_overlap"],
               "cover_disjoint": float(cc["disjoint"]), "dilate_diameter": cc["diameter"],
               "frame_spread": scan.spread, "frame_norm_max": float(scan.norms.max()), "gram_err": gerr}
    checks = [("cover disjoint", float(cc["disjoint"]), "ge", 1.0),
              ("cover overlap <= 4", float(cc["max_overlap"]), "le", 4.0),
              ("dilate diameter <= 4d sqrt 2", cc["diameter"], "le", 4 * p["d"] * np.sqrt(2) + 1e-12)]
    if model.weight.kind == "classical":
        checks.append(("frame Gram decay", gerr, "le", 1e-6))
    return RunResult({"csv": scan.to_csv(), "json": json.dumps({"cover": cc})}, metrics, checks, scan.n_untrusted)


def _run_resolution(cfg, model, A):
    p = cfg.params
    text = fr.deviation_report(model, p["cells"], p["domain_radius"], int(p["block"]))
    devs = json.loads(text)["deviation"]
    metrics = {f"deviation@{h:g}": d for h, d in zip(p["cells"], devs)}
    return RunResult({"json": text}, metrics, [])


def _run_heat(cfg, model, A):
    p = cfg.params
    sym = parse_symbol(cfg.operator["symbol"])
    if isinstance(sym, SymbolPoly):
        sym = sym.to_symbol()
    c = ap.heat_convergence_curve(model, sym, p["t_list"], h=p["h"])
    metrics = {f"heat@{t:g}": v for t, v in zip(c.radii, c.values)}
    # curve is sorted by increasing t, so it must increase
    checks = [("heat curve decreases as t -> 0", float(np.min(np.diff(c.values))) if len(c) > 1 else 0.0, "ge", -1e-9)]
    return RunResult({"csv": c.to_csv()}, metrics, checks)


def _run_sharp(cfg, model, A):
    f, g = parse_symbol(cfg.params["f"]), parse_symbol(cfg.params["g"])
    prod = ap.sharp_product(f, g, model.alpha)
    res = ap.verify_sharp(model, f, g)
    return RunResult({"json": prod.to_json()}, {"sharp_residual": res},
                     [("sharp residual", res, "lt", 1e-8)])


def _run_translation(cfg, model, A):
    p = cfg.params
    ap.require_classical(model)
    ess = tr.translation_essnorm(model, A, shell=tuple(p["shell"]), seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    lim = model.trust_radius / 3
    errs, mods, ress = [], [], []
    for _ in range(int(p["theta_pairs"])):
        z, w = (rng.uniform(-lim, lim, 2) @ [1, 1j]), (rng.uniform(-lim, lim, 2) @ [1, 1j])
        th, res = tr.theta(model, z, w)
        errs.append(abs(th - np.exp(1j * model.alpha * np.imag(z * np.conj(w)))))
        mods.append(abs(abs(th) - 1))
        ress.append(res)
    metrics = {"translation_essnorm": ess.value, "theta_formula_err": float(max(errs, default=0.0)),
               "theta_modulus_err": float(max(mods, default=0.0)), "theta_residual": float(max(ress, default=0.0))}
    checks = [("theta modulus", metrics["theta_modulus_err"], "le", 1e-5),
              ("theta formula", metrics["theta_formula_err"], "le", 1e-5),
              ("theta factorization", metrics["theta_residual"], "lt", 1e-4)]
    return RunResult({"json": ess.to_json()}, metrics, checks, ess.n_untrusted)


def _run_phi(cfg, model, A):
    p = cfg.params
    r = np.linspace(p["r_min"], p["r_max"], int(p["n_r"]))
    chk = check_phi_condition(model.weight, r, p["max_ratio"])
    out = {"c_est": chk.c_est, "C_est": chk.C_est, "ok": chk.ok, "violating_radii": chk.violating_radii.tolist()}
    metrics = {"c_est": chk.c_est, "C_est": chk.C_est, "phi_ok": float(chk.ok)}
    return RunResult({"json": json.dumps(out)}, metrics, [])


RUNNERS = {"berezin-scan": _run_berezin, "decay-scan": _run_decay, "essnorm": _run_essnorm,
           "frame-check": _run_frames, "resolution-check": _run_resolution, "heat": _run_heat,
           "sharp": _run_sharp, "translation": _run_translation, "phi-check": _run_phi}
NEEDS_OPERATOR = {"berezin-scan", "decay-scan", "essnorm", "translation"}


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _evaluate(checks):
    out = []
    for name, value, op, bound in checks:
        out.append({"name": name, "value": float(value), "op": op, "bound": float(bound),
                    "pass": bool(EXPECT_OPS[op](value, bound))})
    return out


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> dict:
    """Run one experiment and return its manifest (also written to ``cfg.output``)."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TrustRadiusWarning)
        model = build_model(cfg)
        A = build_operator(cfg, model) if cfg.kind in NEEDS_OPERATOR else None
        res = RUNNERS[cfg.kind](cfg, model, A)
    checks = list(res.checks)
    for name, cond in sorted(cfg.expect.items()):
        (op, bound), = cond.items()
        if name not in res.metrics:
            raise ConfigError(f"expect.{name}: metric not produced by kind {cfg.kind}; "
                              f"available: {sorted(res.metrics)}")
        checks.append((name, res.metrics[name], op, bound))
    evaluated = _evaluate(checks)
    files = {}
    for suffix, text in sorted(res.outputs.items()):
        files[f"{cfg.kind}_{_sha(text)[:16]}.{suffix}"] = text
    trust_warnings = sorted({str(w.message) for w in caught if issubclass(w.category, TrustRadiusWarning)})
    manifest = {
        "config": cfg.canonical(),
        "model": model.describe(),
        "tolerances": {"trust_tol": 1e-9, "psd_slack": lo.PSD_SLACK},
        "trust_radius": model.trust_radius,
        "untrusted_samples": int(res.untrusted),
        "warnings": trust_warnings,
        "metrics": {k: float(v) for k, v in sorted(res.metrics.items())},
        "checks": evaluated,
        "passed": all(c["pass"] for c in evaluated),
        "outputs": {name: _sha(text) for name, text in files.items()},
    }
    body = json.dumps(manifest, sort_keys=True, indent=1)
    manifest["hash"] = _sha(body)
    if write:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (out / name).write_text(text)
        (out / f"manifest_{cfg.kind}_{manifest['hash'][:16]}.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=1))
    return manifest


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("FOCKLAB_THREADS", "1")))
    except ValueError:
        return 1


def run_batch(configs, write: bool = True) -> list:
    """Run several experiments, at most ``FOCKLAB_THREADS`` at a time."""
    n = worker_count()
    with threadpool_limits(limits=n):
        if n == 1 or len(configs) == 1:
            return [run_experiment(c, write) for c in configs]
        with ThreadPoolExecutor(max_workers=n) as pool:
            return list(pool.map(lambda c: run_experiment(c, write), configs))
