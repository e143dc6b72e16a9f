"""Command-line runner: exact solves, sampling, audits, scans, Green tables.

Configuration comes from a JSON file (or a previously written manifest,
whose embedded config is reused verbatim) with flags overriding file
values. Every run writes its outputs plus a manifest echoing the fully
resolved configuration, per-stage timings and output digests. Exit codes:
0 success, 1 an audit or scan verdict failed, 2 configuration error,
3 engine error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audit import (audit_overlap_bound, audit_pinning_bound, check_gaussian_ibp,
                    check_monotonicity, estimate_constants)
from .disorder import DisorderModel, sample_disorder
from .errors import ConfigError, PinfieldError
from .exact import exact_mixed_solution
from .greens import green_diagonal_scan
from .lattice import make_box, volume_from_sites
from .model import ModelParams
from .output import StageTimer, write_csv, write_jsonl, write_manifest
from .potentials import anharmonic_potential, gaussian_potential
from .sampler import SamplerConfig, disorder_average, estimate_observables
from .scans import scan_constant_field, scan_overlap_dgeq3, scan_overlap_scaling_d2

COMMANDS = ("exact", "sample", "audit", "scan", "green")

_SCHEMA = {
    "command": str,
    "model": {"d": int, "L": int, "sites": list,
              "potential": {"kind": str, "curvature": (int, float), "kappa": (int, float)},
              "epsilon": (int, float)},
    "disorder": {"law": str, "sigma": (int, float), "h": (int, float), "replicas": int,
                 "master_seed": int, "eta_seed": int},
    "sampler": {"sweeps": int, "burnin": int, "thin": int, "batches": int},
    "audit": {"inequalities": list, "epsilon0": (int, float), "constants_L_max": int,
              "engine": str, "grid": list},
    "scan": {"kind": str, "L_list": list, "h": (int, float)},
    "green": {"L_list": list},
    "output": {"dir": str},
    "threads": int,
}

_DEFAULTS = {
    "model": {"d": 2, "L": 1, "sites": None,
              "potential": {"kind": "gaussian", "curvature": 1.0, "kappa": 0.5},
              "epsilon": 1.0},
    "disorder": {"law": "gaussian", "sigma": 1.0, "h": 0.0, "replicas": 1,
                 "master_seed": 0},
    "sampler": {"sweeps": 20000, "burnin": 2000, "thin": 1, "batches": 16},
    "audit": {"inequalities": ["overlap-bound"], "epsilon0": 1.0, "constants_L_max": 8,
              "engine": "exact"},
    "scan": {"kind": "overlap-d2", "L_list": [2, 4], "h": 1.0},
    "green": {"L_list": None},
    "output": {"dir": None},
    "threads": 1,
}

_AUDIT_ALIASES = {
    "proposition-2.1": "overlap-bound",
    "overlap": "overlap-bound",
    "pinning": "pinning-bound",
    "ibp": "ibp-identity",
}


def _validate(obj, schema, path="config"):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path} must be an object")
    for key, value in obj.items():
        if key not in schema:
            raise ConfigError(f"unknown key {path}.{key}")
        spec = schema[key]
        if value is None:
            continue
        if isinstance(spec, dict):
            _validate(value, spec, f"{path}.{key}")
        elif not isinstance(value, spec) or isinstance(value, bool):
            raise ConfigError(f"{path}.{key} has the wrong type: {value!r}")


def _merge(base: dict, override: dict) -> dict:
    out = {k: (v.copy() if isinstance(v, dict) else v) for k, v in base.items()}
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if isinstance(obj, dict) and "config" in obj and "outputs" in obj:
        obj = obj["config"]  # a manifest: reuse its embedded config
    _validate(obj, _SCHEMA)
    return obj


def _parse_disorder_flag(text: str) -> dict:
    if text == "zero":
        return {"law": "zero"}
    for prefix, law, key in (("const:", "constant", "h"), ("gauss:", "gaussian", "sigma"),
                             ("rademacher:", "rademacher", "h")):
        if text.startswith(prefix):
            try:
                return {"law": law, key: float(text[len(prefix):])}
            except ValueError as exc:
                raise ConfigError(f"bad disorder parameter in {text!r}") from exc
    raise ConfigError(f"bad --disorder value {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pinfield", description=__doc__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--disorder", default=None)
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sweeps", type=int, default=None)
    p.add_argument("--burnin", type=int, default=None)
    p.add_argument("--batches", type=int, default=None)
    p.add_argument("--eps0", type=float, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)
    return p


def resolve_config(args) -> dict:
    cfg = _merge(_DEFAULTS, load_config(args.config))
    flags: dict = {}
    if args.d is not None:
        flags.setdefault("model", {})["d"] = args.d
    if args.L is not None:
        flags.setdefault("model", {})["L"] = args.L
    if args.eps is not None:
        flags.setdefault("model", {})["epsilon"] = args.eps
    if args.kappa is not None:
        flags.setdefault("model", {})["potential"] = {"kind": "anharmonic", "kappa": args.kappa}
    if args.disorder is not None:
        flags["disorder"] = _parse_disorder_flag(args.disorder)
    if args.replicas is not None:
        flags.setdefault("disorder", {})["replicas"] = args.replicas
    if args.seed is not None:
        flags.setdefault("disorder", {})["master_seed"] = args.seed
    if args.sweeps is not None:
        flags.setdefault("sampler", {})["sweeps"] = args.sweeps
    if args.burnin is not None:
        flags.setdefault("sampler", {})["burnin"] = args.burnin
    if args.batches is not None:
        flags.setdefault("sampler", {})["batches"] = args.batches
    if args.eps0 is not None:
        flags.setdefault("audit", {})["epsilon0"] = args.eps0
    if args.out is not None:
        flags.setdefault("output", {})["dir"] = args.out
    if args.threads is not None:
        flags["threads"] = args.threads
    cfg = _merge(cfg, flags)
    cfg["command"] = args.command
    _validate(cfg, _SCHEMA)
    return cfg


def _build_volume(model: dict):
    if model.get("sites"):
        return volume_from_sites(model["d"], [tuple(s) for s in model["sites"]])
    if model.get("L") is None:
        raise ConfigError("model needs either L or sites")
    return make_box(model["d"], model["L"])


def _build_potential(model: dict):
    pot = model["potential"]
    if pot["kind"] == "gaussian":
        return gaussian_potential(pot.get("curvature", 1.0))
    if pot["kind"] == "anharmonic":
        return anharmonic_potential(pot.get("kappa", 0.5))
    raise ConfigError(f"unknown potential kind {pot['kind']!r}")


def _build_disorder(dis: dict) -> DisorderModel:
    try:
        return DisorderModel(law=dis["law"], h=dis.get("h", 0.0), sigma=dis.get("sigma", 1.0))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _eta_for(cfg: dict, vol):
    dis = cfg["disorder"]
    seed = dis.get("eta_seed", dis["master_seed"])
    return sample_disorder(_build_disorder(dis), vol, seed)


def _sampler_config(cfg: dict, seed: int) -> SamplerConfig:
    s = cfg["sampler"]
    return SamplerConfig(sweeps=s["sweeps"], burnin=s["burnin"], thin=s.get("thin", 1),
                         batches=s.get("batches", 16), seed=seed)


def _out_dir(cfg: dict) -> Path:
    out = cfg["output"].get("dir") or os.environ.get("PINFIELD_OUT") or "pinfield_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_exact(cfg, outdir, timer):
    vol = _build_volume(cfg["model"])
    eta = _eta_for(cfg, vol)
    pot = _build_potential(cfg["model"])
    if not pot.is_gaussian:
        raise ConfigError("the exact command supports the quadratic potential only")
    sol = exact_mixed_solution(vol, eta, cfg["model"]["epsilon"], curvature=pot.param)
    timer.stage("solve")
    coords = vol.coords_array()
    header = [f"site_{ax}" for ax in "xyz"[: vol.d]] + ["pin_prob", "mean", "second_moment"]
    rows = [list(coords[i]) + [sol.pin_prob[i], sol.mean[i], sol.second_moment[i]]
            for i in range(vol.n_sites)]
    path = outdir / "exact.csv"
    write_csv(path, header, rows)
    timer.stage("write")
    return [path], True


def _cmd_sample(cfg, outdir, timer):
    vol = _build_volume(cfg["model"])
    pot = _build_potential(cfg["model"])
    eps = cfg["model"]["epsilon"]
    dis = cfg["disorder"]
    replicas = dis.get("replicas", 1)
    rows = []
    if replicas <= 1:
        eta = _eta_for(cfg, vol)
        est = estimate_observables(ModelParams(vol, pot, eps, eta),
                                   _sampler_config(cfg, dis["master_seed"]))
        for name, mean, se in est.rows():
            rows.append([0, name, mean, se, est.sweeps_run, est.seed])
    else:
        da = disorder_average(vol, pot, eps, _build_disorder(dis), replicas,
                              dis["master_seed"], engine="auto",
                              sampler_config=_sampler_config(cfg, dis["master_seed"]),
                              threads=cfg["threads"])
        for r in range(replicas):
            rows.append([r, "overlap", da.replica_overlap[r], 0.0,
                         cfg["sampler"]["sweeps"], dis["master_seed"]])
            rows.append([r, "pinned_fraction", da.replica_pinned_fraction[r], 0.0,
                         cfg["sampler"]["sweeps"], dis["master_seed"]])
        rows.append(["avg", "overlap", da.overlap, da.overlap_se,
                     cfg["sampler"]["sweeps"], dis["master_seed"]])
        rows.append(["avg", "pinned_fraction", da.pinned_fraction, da.pinned_fraction_se,
                     cfg["sampler"]["sweeps"], dis["master_seed"]])
    timer.stage("sample")
    path = outdir / "sample.csv"
    write_csv(path, ["replica", "observable", "mean", "stderr", "sweeps", "seed"], rows)
    timer.stage("write")
    return [path], True


def _cmd_audit(cfg, outdir, timer):
    vol = _build_volume(cfg["model"])
    eta = _eta_for(cfg, vol)
    pot = _build_potential(cfg["model"])
    eps = cfg["model"]["epsilon"]
    audit_cfg = cfg["audit"]
    constants = estimate_constants(pot, cfg["model"]["d"],
                                   range(1, audit_cfg["constants_L_max"] + 1))
    timer.stage("constants")
    engine = audit_cfg.get("engine", "exact")
    sampler_cfg = _sampler_config(cfg, cfg["disorder"]["master_seed"]) \
        if engine == "mcmc" else None
    reports = []
    ok = True
    for raw_id in audit_cfg["inequalities"]:
        ineq = _AUDIT_ALIASES.get(raw_id, raw_id)
        if ineq == "overlap-bound":
            batch = audit_overlap_bound(eta, vol, eps, constants, engine=engine,
                                        potential=pot, sampler_config=sampler_cfg)
        elif ineq == "pinning-bound":
            batch = audit_pinning_bound(eta, vol, eps, audit_cfg["epsilon0"], constants,
                                        engine=engine, c_minus=pot.c_minus,
                                        sampler_config=sampler_cfg)
        elif ineq == "ibp-identity":
            batch = [check_gaussian_ibp(vol, cfg["disorder"].get("sigma", 1.0), eps,
                                        max(cfg["disorder"].get("replicas", 1), 2),
                                        cfg["disorder"]["master_seed"],
                                        threads=cfg["threads"])]
        elif ineq in ("monotonicity-field", "monotonicity-pinning"):
            mode = ineq.split("-", 1)[1]
            grid = audit_cfg.get("grid") or ([0.0, 0.5, 1.0, 1.5, 2.0] if mode == "field"
                                             else [0.0, 0.5, 1.0, 2.0, 4.0])
            batch = [check_monotonicity(vol, eta, mode, grid, epsilon=eps)]
        else:
            raise ConfigError(f"unknown inequality id {raw_id!r}")
        for rep in batch:
            ok = ok and rep.holds()
        reports.extend(batch)
    timer.stage("audit")
    path = outdir / "audits.jsonl"
    write_jsonl(path, [r.to_record() for r in reports])
    timer.stage("write")
    return [path], ok


def _cmd_scan(cfg, outdir, timer):
    scan_cfg = cfg["scan"]
    dis = cfg["disorder"]
    model = cfg["model"]
    threads = cfg["threads"]
    kind = scan_cfg["kind"]
    sampler_cfg = _sampler_config(cfg, dis["master_seed"])
    if kind == "overlap-d2":
        result = scan_overlap_scaling_d2(scan_cfg["L_list"], _build_disorder(dis),
                                         model["epsilon"], dis.get("replicas", 8),
                                         dis["master_seed"], sampler_config=sampler_cfg,
                                         threads=threads)
    elif kind == "overlap-d3":
        result = scan_overlap_dgeq3(scan_cfg["L_list"], _build_disorder(dis),
                                    model["epsilon"], dis.get("replicas", 8),
                                    dis["master_seed"], d=model["d"],
                                    sampler_config=sampler_cfg, threads=threads)
    elif kind == "constant-field":
        result = scan_constant_field(model["d"], scan_cfg["L_list"], scan_cfg.get("h", 1.0),
                                     model["epsilon"], replicas=dis.get("replicas", 2),
                                     master_seed=dis["master_seed"],
                                     sampler_config=sampler_cfg, threads=threads)
    else:
        raise ConfigError(f"unknown scan kind {kind!r}")
    timer.stage("scan")
    path = outdir / "scan.csv"
    rows = [[r.L, r.value, r.stderr, result.normalization,
             result.fit_exponent if result.fit_exponent is not None else "",
             result.fit_r2 if result.fit_r2 is not None else ""] for r in result.rows]
    write_csv(path, ["L", "value", "stderr", "normalization", "fit_slope", "fit_r2"], rows)
    timer.stage("write")
    return [path], result.passed


def _cmd_green(cfg, outdir, timer):
    d = cfg["model"]["d"]
    L_list = cfg["green"].get("L_list") or ([16, 32, 64, 128] if d == 2 else [4, 8, 12, 16, 20])
    result = green_diagonal_scan(d, L_list)
    timer.stage("scan")
    path = outdir / "green.csv"
    rows = [[r.L, r.g_center, r.avg_diagonal, r.total_sum, result.diag_slope,
             result.diag_intercept] for r in result.rows]
    write_csv(path, ["L", "G00", "avg_diag", "sum_all", "fit_slope", "fit_intercept"], rows)
    timer.stage("write")
    return [path], True


def run(cfg: dict) -> int:
    timer = StageTimer()
    outdir = _out_dir(cfg)
    handlers = {"exact": _cmd_exact, "sample": _cmd_sample, "audit": _cmd_audit,
                "scan": _cmd_scan, "green": _cmd_green}
    outputs, ok = handlers[cfg["command"]](cfg, outdir, timer)
    write_manifest(outdir / "run_manifest.json", cfg, [str(p) for p in outputs],
                   timer, __version__)
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PinfieldError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
