"""Batch runner: build an operator, run a pipeline of steps, write reports.

Config file (YAML):

    operator: weighted-bilateral-64        # catalog name, or {matrix: [[...]]}
    pipeline:                              # step names, optionally with params
      - classify
      - {step: dilate, params: {N: 64}}
      - residual
    tolerances: {certify: 1.0e-8}          # optional overrides
    output_dir: out                        # optional, --out wins
    seed: 0                                # optional, --seed wins

Complex matrix entries may be given as [re, im] pairs.  report.json is
deterministic for a fixed config and seed; wall-clock times go to
timing.json.  Exit codes: 0 all invariants certified, 1 an invariant
failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from . import catalog as cat
from .contraction import canonical_decomposition, classify, make_contraction
from .dilation import dilation_defect, minimal_isometric_dilation, residual_part
from .errors import ConfigInvalid, DegenerateQ, DilationError, StepFailed
from .intertwine import (
    IntertwiningMap,
    Verdict,
    lambda_zero,
    lift_to_dilation,
    unitary_star_asymptote,
)
from .modelspace import boundary_data, build_model, outer_test, write_boundary_csv
from .opcore import TruncatedOperator, hausdorff, opnorm
from .semigroup import eval_semigroup, make_cogenerator, recover_cogenerator
from .similarity import similarity_battery
from .spectral import (
    arcs_vs_cloud,
    ess_supp_spectrum,
    exterior_samples,
    point_spectrum_match,
    spectral_mapping,
    spectrum_containment,
)

log = logging.getLogger("nfdilation")

STEPS = ("classify", "dilate", "residual", "lambda_zero", "asymptote", "lift", "outer",
         "boundary", "model", "spectral", "semigroup", "similarity", "mpc")
DEFAULT_PIPELINE = ("classify", "dilate", "residual", "lambda_zero", "asymptote", "lift",
                    "outer", "boundary", "model", "spectral", "semigroup", "similarity")
TOLERANCES = {"certify": 1e-8, "dilation": 1e-9, "identity": 1e-9, "grid": 2 * math.pi / 64,
              "fine_grid": 2 * math.pi / 256}
CONFIG_KEYS = {"operator", "pipeline", "tolerances", "output_dir", "seed"}
STEP_PARAMS = {
    "classify": {"n_max"}, "dilate": {"N"}, "residual": {"n_max"}, "lambda_zero": set(),
    "asymptote": {"n_max"}, "lift": {"n_terms"}, "outer": {"M"}, "boundary": {"M"},
    "model": {"M"}, "spectral": {"n_samples"}, "semigroup": {"t"}, "similarity": set(),
    "mpc": {"m", "n_densities"},
}


@dataclass
class ExperimentConfig:
    operator: Any
    pipeline: list
    tolerances: dict
    output_dir: str = "out"
    seed: int = 0

    def normalized(self) -> dict:
        return {"operator": self.operator, "pipeline": self.pipeline,
                "tolerances": self.tolerances, "seed": self.seed}


def parse_config(data: Any) -> ExperimentConfig:
    """Validate a config mapping; unknown keys and parameters are rejected."""
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a mapping")
    extra = set(data) - CONFIG_KEYS
    if extra:
        raise ConfigInvalid(f"unknown config keys: {sorted(extra)}")
    op = data.get("operator", "weighted-bilateral-64")
    if isinstance(op, str):
        if op not in cat.CATALOG:
            raise ConfigInvalid(f"unknown catalog operator {op!r}")
    elif isinstance(op, dict):
        if set(op) != {"matrix"}:
            raise ConfigInvalid("inline operator must be {matrix: [[...]]}")
        _inline_matrix(op["matrix"])
    else:
        raise ConfigInvalid("operator must be a catalog name or {matrix: ...}")
    raw = data.get("pipeline", list(DEFAULT_PIPELINE))
    if not isinstance(raw, list) or not raw:
        raise ConfigInvalid("pipeline must be a non-empty list")
    pipeline = []
    for item in raw:
        if isinstance(item, str):
            name, params = item, {}
        elif isinstance(item, dict) and set(item) <= {"step", "params"} and "step" in item:
            name, params = item["step"], item.get("params") or {}
        else:
            raise ConfigInvalid(f"bad pipeline entry {item!r}")
        if name not in STEPS:
            raise ConfigInvalid(f"unknown step {name!r}")
        if not isinstance(params, dict) or set(params) - STEP_PARAMS[name]:
            raise ConfigInvalid(f"unknown parameters for {name}: {sorted(set(params) - STEP_PARAMS[name])}")
        pipeline.append({"step": name, "params": params})
    tol = data.get("tolerances") or {}
    if not isinstance(tol, dict) or set(tol) - set(TOLERANCES):
        raise ConfigInvalid(f"unknown tolerances: {sorted(set(tol) - set(TOLERANCES))}")
    tolerances = dict(TOLERANCES)
    for k, v in tol.items():
        if not isinstance(v, (int, float)) or v <= 0:
            raise ConfigInvalid(f"tolerance {k} must be a positive number")
        tolerances[k] = float(v)
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigInvalid("seed must be an integer")
    out = data.get("output_dir", "out")
    if not isinstance(out, str):
        raise ConfigInvalid("output_dir must be a string")
    return ExperimentConfig(op, pipeline, tolerances, out, seed)


def _inline_matrix(rows) -> np.ndarray:
    try:
        def entry(x):
            if isinstance(x, list):
                if len(x) != 2:
                    raise ValueError
                return complex(float(x[0]), float(x[1]))
            return complex(float(x))
        M = np.array([[entry(x) for x in r] for r in rows], dtype=complex)
    except (TypeError, ValueError):
        raise ConfigInvalid("matrix entries must be numbers or [re, im] pairs") from None
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.size == 0:
        raise ConfigInvalid("matrix must be square and non-empty")
    return M


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(float(x.real)), _jsonable(float(x.imag))]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return x


class _Context:
    def __init__(self, cfg: ExperimentConfig, out: Path, scale: float):
        self.cfg = cfg
        self.out = out
        self.scale = scale
        self.entry = None
        if isinstance(cfg.operator, str):
            self.entry = cat.get(cfg.operator)
            self.W = self.entry.build()
            self.N = self.entry.dilation_slots
        else:
            self.W = make_contraction(_inline_matrix(cfg.operator["matrix"]))
            self.N = 32
        self.label = None
        self.dil = None
        self.res = None
        self.lam0 = None
        self.artifacts = []

    def tol(self, key: str) -> float:
        return self.cfg.tolerances[key] * self.scale

    @property
    def finite(self) -> bool:
        return self.W.op.is_finite

    def horizon(self, n: int = 64) -> int:
        return int(min(n, self.W.op.faithful_power_bound))

    def get_label(self):
        if self.label is None:
            self.label = classify(self.W, self.horizon(), seed=self.cfg.seed)
        return self.label

    def get_dil(self, N: Optional[int] = None):
        if self.dil is None or (N is not None and N != self.dil.N):
            self.dil = minimal_isometric_dilation(self.W, N or self.N)
            self.res = None
        return self.dil

    def get_res(self):
        if self.res is None:
            self.res = residual_part(self.get_dil())
        return self.res

    def artifact(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out / name


def _check(checks: dict, name: str, ok: bool, value) -> None:
    checks[name] = {"ok": bool(ok), "value": _jsonable(value)}


def step_classify(ctx, p, checks):
    lab = classify(ctx.W, ctx.horizon(p.get("n_max", 64)), seed=ctx.cfg.seed)
    ctx.label = lab
    if ctx.entry is not None and "?" not in ctx.entry.expected_class:
        _check(checks, "matches_catalog", lab.name == ctx.entry.expected_class, lab.name)
    return {"class": lab.name, "evidence_forward": lab.evidence_forward,
            "evidence_backward": lab.evidence_backward, "max_forward": lab.max_forward,
            "max_backward": lab.max_backward, "n_max": lab.n_max}


def step_dilate(ctx, p, checks):
    dil = ctx.get_dil(p.get("N"))
    dd = dilation_defect(dil)
    _check(checks, "dilation_identity", dd <= ctx.tol("dilation"), dd)
    return {"N": dil.N, "defect_dim": dil.defect_dim, "dilation_dim": dil.U_plus.dim,
            "dilation_defect": dd}


def step_residual(ctx, p, checks):
    dil = ctx.get_dil()
    ctx.res = residual_part(dil, n_max=p.get("n_max"))
    r = ctx.res
    _check(checks, "converged", r.report.converged, r.report.gap)
    if not r.trivial:
        _check(checks, "closure_unimodular",
               float(np.max(np.abs(np.abs(np.linalg.eigvals(r.closure)) - 1))) <= ctx.tol("certify"),
               float(np.max(np.abs(np.abs(np.linalg.eigvals(r.closure)) - 1))))
    if ctx.finite and ctx.W.kernel_trivial and r.dim == ctx.W.dim:
        _check(checks, "unitary_input_reproduced", True, r.dim)
    return {"dim": r.dim, "trivial": r.trivial, "n_used": r.n_used, "projector_gap": r.projector_gap,
            "domain_dim": r.domain.dim, "isometry_defect": r.isometry_defect}


def step_lambda_zero(ctx, p, checks):
    r = ctx.get_res()
    lab = ctx.get_label()
    if r.trivial:
        _check(checks, "trivial_residual_matches_class", not lab.is_cdot1, lab.name)
        return {"skipped": "residual part is trivial"}
    if not ctx.W.kernel_trivial:
        return {"skipped": "W has a kernel"}
    lam = lambda_zero(r, ctx.get_dil().embed_H, ctx.W)
    ctx.lam0 = lam
    _check(checks, "intertwining", lam.residual <= ctx.tol("certify"), lam.residual)
    out = {"residual": lam.residual, "shape": list(lam.map.shape)}
    if lam.certificate is not None:
        c = lam.certificate
        _check(checks, "quasi_affinity", c.verdict is Verdict.QUASI_AFFINITY, c.verdict.value)
        out.update(verdict=c.verdict.value, sigma_min=c.sigma_min, range_gap=c.range_gap)
    return out


def step_asymptote(ctx, p, checks):
    lab = ctx.get_label()
    if not ctx.W.kernel_trivial:
        return {"skipped": "W has a kernel"}
    res = ctx.get_res()
    try:
        asy = unitary_star_asymptote(ctx.W, n_max=p.get("n_max", ctx.horizon(ctx.N)), residual=res)
    except DegenerateQ as e:
        _check(checks, "degenerate_matches_class", lab.is_cdot0, lab.name)
        return {"degenerate": str(e)}
    _check(checks, "intertwining", asy.Lambda_star.residual <= ctx.tol("certify"), asy.Lambda_star.residual)
    _check(checks, "fixed_point", asy.fixed_point_residual <= ctx.tol("certify"), asy.fixed_point_residual)
    if asy.residual_hausdorff is not None:
        _check(checks, "matches_residual", asy.residual_hausdorff <= ctx.tol("fine_grid"),
               asy.residual_hausdorff)
    return {"dim": asy.U_star.shape[0], "n_used": asy.report.n, "unitarity_defect": asy.unitarity_defect,
            "residual_hausdorff": asy.residual_hausdorff}


def lift_source(ctx):
    """(U', L) for the lifting step: the catalog intertwiner if present,
    Lambda_0 from a unitary residual part, or the zero map otherwise."""
    if ctx.entry is not None and ctx.entry.intertwiner is not None:
        Up, L = ctx.entry.intertwiner()
        return IntertwiningMap(L, Up, ctx.W.op), "catalog"
    res = ctx.get_res()
    if not res.trivial and res.domain.dim == res.dim and ctx.W.kernel_trivial:
        lam = ctx.lam0 or lambda_zero(res, ctx.get_dil().embed_H, ctx.W)
        return IntertwiningMap(lam.map, TruncatedOperator.finite(res.op), ctx.W.op), "lambda_zero"
    Z = np.zeros((ctx.W.dim, 1), dtype=complex)
    return IntertwiningMap(Z, TruncatedOperator.finite(np.eye(1)), ctx.W.op), "zero"


def step_lift(ctx, p, checks):
    lam, kind = lift_source(ctx)
    dil = ctx.get_dil()
    n = p.get("n_terms", min(32, dil.N))
    lr = lift_to_dilation(lam, dil, n, residual=ctx.get_res())
    t = ctx.tol("certify")
    _check(checks, "closed_form_vs_series", lr.agreement <= t, lr.agreement)
    _check(checks, "norm_preserved", lr.norm_gap <= t, lr.norm_gap)
    _check(checks, "projection", lr.projection_gap <= t, lr.projection_gap)
    _check(checks, "intertwining", lr.intertwining <= t, lr.intertwining)
    if lr.range_gap is not None:
        _check(checks, "range_in_residual", lr.range_gap <= t, lr.range_gap)
    return {"source": kind, "n_terms": n, "agreement": lr.agreement, "norm_gap": lr.norm_gap,
            "range_gap": lr.range_gap, "tail": lr.tail, "domain_dim": lr.domain.dim}


def step_outer(ctx, p, checks):
    v = outer_test(ctx.W, p.get("M", 64))
    _check(checks, "matches_class", v.agrees_with_class, [v.outer, v.class_name])
    return {"outer": v.outer, "range_margin": v.range_margin, "kernel_margin": v.kernel_margin,
            "range_margin_half": v.range_margin_half, "kernel_margin_half": v.kernel_margin_half,
            "class": v.class_name}


def step_boundary(ctx, p, checks):
    bd = boundary_data(ctx.W, p.get("M", 64))
    r = bd.identity_residual()
    _check(checks, "theta_delta_identity", r <= ctx.tol("identity"), r)
    path = ctx.artifact("boundary.csv")
    write_boundary_csv(bd, path)
    return {"M": bd.M, "eps_points": int(bd.eps_mask.sum()), "identity_residual": r,
            "max_stagnation": float(bd.stagnation.max())}


def step_model(ctx, p, checks):
    lab = ctx.get_label()
    cd = canonical_decomposition(ctx.W)
    if cd.unitary_space.dim or not lab.is_cdot1 or not ctx.W.kernel_trivial:
        return {"skipped": "model requires a c.n.u. C.1 contraction with trivial kernel"}
    M = p.get("M", 64)
    ms = build_model(ctx.W, M, residual=ctx.get_res())
    _check(checks, "rhat_unitary", ms.rhat_unitarity <= ctx.tol("certify"), ms.rhat_unitarity)
    _check(checks, "hhat_orthogonal", ms.graph_orthogonality <= ctx.tol("certify"), ms.graph_orthogonality)
    if ms.residual_hausdorff is not None:
        _check(checks, "rhat_matches_residual", ms.residual_hausdorff <= 2 * math.pi / M,
               ms.residual_hausdorff)
    return {"M": M, "hhat_dim": ms.Hhat.dim, "rhat_dim": int(ms.rhat_ranks.sum()),
            "residual_hausdorff": ms.residual_hausdorff,
            "what_spectral_radius": float(np.max(np.abs(np.linalg.eigvals(ms.What)))) if ms.What.size else 0.0}


def step_spectral(ctx, p, checks):
    res = ctx.get_res()
    out = {}
    if res.trivial:
        out["containment"] = "skipped: residual part is trivial"
    else:
        zs = exterior_samples(p.get("n_samples", 100), seed=ctx.cfg.seed)
        rep = spectrum_containment(ctx.W, res.op, zs)
        pm = point_spectrum_match(ctx.W, res.op, res.closure)
        _check(checks, "resolvent_dominance", rep.dominated, rep.dominance_ratio)
        _check(checks, "point_spectrum", pm.equal, pm.cost)
        out.update(dominance_ratio=rep.dominance_ratio, containment_gap=rep.containment_gap,
                   point_spectrum_circle=pm.contraction_circle)
        with open(ctx.artifact("resolvent.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re_z", "im_z", "resolvent_W", "resolvent_U"])
            for z, a, b in rep.resolvent_samples:
                w.writerow([f"{z.real:.17g}", f"{z.imag:.17g}", f"{a:.17g}", f"{b:.17g}"])
        with open(ctx.artifact("spectra.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["set", "re", "im"])
            for name, pts in (("W", rep.eigenvalues), ("residual", np.linalg.eigvals(res.closure))):
                for z in sorted(pts, key=lambda z: (round(float(np.angle(z)), 12), abs(z))):
                    w.writerow([name, f"{z.real:.17g}", f"{z.imag:.17g}"])
        # the characteristic function only sees the c.n.u. part, so the arc
        # comparison applies when there is no unitary part
        if canonical_decomposition(ctx.W).unitary_space.dim == 0:
            bd = boundary_data(ctx.W, 64)
            arcs = ess_supp_spectrum(bd)
            d1, d2 = arcs_vs_cloud(arcs, np.linalg.eigvals(res.closure), 2 * math.pi / 64)
            _check(checks, "arcs_cover_cloud", max(d1, d2) <= 2 * math.pi / 64, [d1, d2])
            out.update(arcs=arcs)
    return out


def step_semigroup(ctx, p, checks):
    if not ctx.finite:
        return {"skipped": "semigroup calculus is evaluated for finite matrices"}
    C = make_cogenerator(ctx.W)
    if not C.one_not_eigenvalue:
        return {"skipped": "1 is an eigenvalue"}
    t = p.get("t", 0.5)
    mv = spectral_mapping(ctx.W, t)
    _check(checks, "spectral_mapping", mv.holds, mv.cost)
    a, b = eval_semigroup(C, t).W_t, eval_semigroup(C, 2 * t).W_t
    law = opnorm(a @ a - b)
    _check(checks, "semigroup_law", law <= ctx.tol("identity"), law)
    rec = recover_cogenerator(lambda s: eval_semigroup(C, s))
    err = opnorm(rec.estimate - ctx.W.matrix)
    _check(checks, "round_trip", err <= 1e-4 * ctx.scale, err)
    return {"t": t, "mapping_cost": mv.cost, "law_residual": law, "recovery_error": err,
            "plain_phi_error": opnorm(rec.plain - ctx.W.matrix)}


def step_similarity(ctx, p, checks):
    if not ctx.finite:
        return {"skipped": "battery is evaluated for finite matrices"}
    rep = similarity_battery(ctx.W, raise_on_disagreement=False)
    _check(checks, "criteria_agree", rep.unanimous, rep.verdicts)
    return {"verdicts": rep.verdicts, "b": rep.b_sup_inverse_powers, "c": rep.c_delta,
            "e": rep.e_resolvent_const, "g": rep.g_theta_inverse_sup}


def step_mpc(ctx, p, checks):
    from .mpcdemo import build_lambda, build_system, build_time_operator, markov_semigroup
    m = p.get("m", 3)
    s, ops = build_system(m, seed=ctx.cfg.seed)
    T = build_time_operator(s, ops)
    lam = build_lambda(s, T)
    r = markov_semigroup(lam, s, ops, n_densities=p.get("n_densities", 1000), seed=ctx.cfg.seed)
    _check(checks, "intertwining", r.intertwining_residual <= 1e-10 * ctx.scale, r.intertwining_residual)
    _check(checks, "preserves_one", r.preserves_one, r.preserves_one)
    _check(checks, "mixing_closed_form", r.mixing_closed_form_error <= 1e-12 * ctx.scale,
           r.mixing_closed_form_error)
    _check(checks, "class_C01", r.class_label == "C01", r.class_label)
    _check(checks, "time_relation", T.relation_residual == 0.0, T.relation_residual)
    with open(ctx.artifact("mixing.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "norm_Wn_rho_minus_1"])
        for n, v in enumerate(r.mixing_curve):
            w.writerow([n, f"{v:.17g}"])
    d = dict(r.__dict__)
    d["monotone_fraction"] = float(np.mean(d.pop("monotonicity"))) if r.monotonicity else None
    return d


HANDLERS = {name: globals()[f"step_{name}"] for name in STEPS}


@dataclass
class RunReport:
    status: str
    exit_code: int
    steps: list
    artifacts: list
    timings: dict = field(default_factory=dict)


def run(cfg: ExperimentConfig, out_dir: Optional[str] = None, tol_scale: float = 1.0,
        strict: bool = False) -> RunReport:
    """Execute the pipeline and write report.json, timing.json and CSV files.

    With strict=True the first failing step raises StepFailed instead of
    being recorded.
    """
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx = _Context(cfg, out, tol_scale)
    steps, timings, failed = [], {}, False
    for i, item in enumerate(cfg.pipeline):
        name, params = item["step"], item["params"]
        checks: dict = {}
        t0 = time.perf_counter()
        try:
            result = HANDLERS[name](ctx, params, checks)
            status = "certified" if all(c["ok"] for c in checks.values()) else "failed"
            if "skipped" in result and not checks:
                status = "skipped"
        except DilationError as e:
            if strict:
                raise StepFailed(i, name, str(e)) from e
            result, status = {"error": type(e).__name__, "diagnostic": str(e)}, "failed"
        timings[f"{i}:{name}"] = time.perf_counter() - t0
        if status == "failed":
            failed = True
            if strict:
                raise StepFailed(i, name, json.dumps(_jsonable(checks), sort_keys=True))
        log.info("step %d %s: %s", i, name, status)
        steps.append({"index": i, "step": name, "params": params, "status": status,
                      "checks": checks, "result": _jsonable(result)})
    rep = RunReport("failed" if failed else "certified", 1 if failed else 0, steps,
                    sorted(set(ctx.artifacts)), timings)
    doc = {"config": _jsonable(cfg.normalized()), "tol_scale": tol_scale, "status": rep.status,
           "steps": rep.steps, "artifacts": rep.artifacts}
    (out / "report.json").write_text(json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n")
    (out / "timing.json").write_text(json.dumps({"steps": timings, "written_at": time.time()},
                                                sort_keys=True, indent=2) + "\n")
    return rep


def catalog_listing() -> list:
    return cat.listing()


def selftest(out_dir: str, seed: int = 0, tol_scale: float = 1.0) -> int:
    """Default pipeline on every catalog entry plus the MPC demo."""
    code = 0
    for name in sorted(cat.CATALOG):
        cfg = parse_config({"operator": name, "seed": seed})
        rep = run(cfg, str(Path(out_dir) / name), tol_scale)
        print(f"{name:24s} {rep.status}")
        code = max(code, rep.exit_code)
    cfg = parse_config({"operator": "scalar-0.5", "pipeline": ["mpc"], "seed": seed})
    rep = run(cfg, str(Path(out_dir) / "mpc"), tol_scale)
    print(f"{'mpc':24s} {rep.status}")
    return max(code, rep.exit_code)


def _load(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigInvalid(f"cannot read config: {e}") from None
    except yaml.YAMLError as e:
        raise ConfigInvalid(f"malformed YAML: {e}") from None
    return {} if data is None else data


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nfdil", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "selftest"):
        sp_ = sub.add_parser(name)
        sp_.add_argument("--config", help="YAML experiment config")
        sp_.add_argument("--out", help="output directory")
        sp_.add_argument("--seed", type=int, help="random seed")
        sp_.add_argument("--tol-scale", type=float, default=1.0, help="multiply certification tolerances")
    sub.add_parser("catalog")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "catalog":
        print(json.dumps(catalog_listing(), indent=2, sort_keys=True))
        return 0
    try:
        if args.tol_scale <= 0:
            raise ConfigInvalid("--tol-scale must be positive")
        if args.command == "selftest":
            return selftest(args.out or "selftest-out", args.seed or 0, args.tol_scale)
        data = _load(args.config)
        if args.seed is not None:
            if not isinstance(data, dict):
                raise ConfigInvalid("config must be a mapping")
            data = dict(data, seed=args.seed)
        cfg = parse_config(data)
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    rep = run(cfg, args.out, args.tol_scale)
    print(json.dumps({"status": rep.status, "steps": [(s["step"], s["status"]) for s in rep.steps]}))
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
