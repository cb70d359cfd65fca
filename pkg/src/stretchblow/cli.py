"""Command line: ``stretchblow run|certify|polar <config>`` and ``stretchblow suite <manifest>``.

Exit status: 0 success, 1 suite failure, 2 config error, 3 hypothesis
refused, 4 step failure, 5 warnings promoted to errors by ``--strict``.
Every invocation writes ``report.json`` (UTF-8) and CSV artifacts
(RFC 4180, CRLF) into the output directory; field names are listed in
``docs/report_schema.md``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .certificate import CertificateRefused, check_hypothesis, issue_certificate, monitor_bound
from .config import ConfigError, ScenarioConfig, load_config
from .simulator import (StepFailure, burgers_blowup_time, burgers_exact, clm_blowup_time, clm_exact,
                        numeric_derivative, oracle_residual, run)
from .spectral import SpectralField, apply_multiplier, hilbert

__all__ = ["main", "run_scenario", "run_suite", "read_manifest", "EXIT", "SCHEMA_VERSION"]

SCHEMA_VERSION = "1.0"
EXIT = {"ok": 0, "suite_failure": 1, "config_error": 2, "hypothesis_refused": 3, "step_failure": 4,
        "strict_warning": 5}
CONVENTIONS = {
    "hilbert_symbol": "-i sgn(xi)", "hilbert_constant": 1.0, "riesz_symbol": "-i xi_j / |xi|",
    "zero_mode": "0 for H, R_j and products; -1 for -Id",
    "line_domains": "periodic box [-L, L)",
    "blowup_detection": "numerical proxy: sup-norm growth, spectral tail fraction, dt-halving cascade",
}
LINE_MASS_TOL = 1e-4


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_json(path: Path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(report), fh, indent=2, sort_keys=True, allow_nan=False, ensure_ascii=False)
        fh.write("\n")


def _write_rows(path: Path, header, rows) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def _check(value, tol, ok, **extra) -> dict:
    return {"value": value, "tolerance": tol, "pass": bool(ok), **extra}


# --- run / certify ------------------------------------------------------------

def _certify(cfg: ScenarioConfig, report: dict):
    pair = cfg.weight_pair()
    omega0 = SpectralField.from_function(cfg.grid(), cfg.initial_data())
    hyp = check_hypothesis(omega0, pair)
    report["weight_pair"] = pair.describe()
    deficit = pair.mass_deficit
    if deficit is not None and abs(deficit) / pair.exact_mass > LINE_MASS_TOL:
        report["warnings"].append(f"W2 box mass deficit {deficit:.3e} exceeds {LINE_MASS_TOL:g} relative")
    if hyp.clipped_nodes and any(hyp.clipped_nodes):
        report["warnings"].append("log-ratio clipped on some nodes (see certificate.hypothesis.clipped_nodes)")
    try:
        cert = issue_certificate(hyp)
    except CertificateRefused as exc:
        report["refusal"] = {"condition": exc.condition, "message": str(exc), "hypothesis": hyp.to_dict()}
        return None
    report["certificate"] = cert.to_dict()
    return cert


def _oracle(cfg: ScenarioConfig):
    """Oracle callables for the run: (per-sample error fn, blow-up time, residual)."""
    o = cfg.section("oracle")
    kind = o["kind"]
    grid = cfg.grid()
    f = cfg.initial_data()
    if kind == "clm":
        x = grid.mesh()[0]
        w0 = SpectralField.from_function(grid, f)
        hw0 = apply_multiplier(w0, hilbert()).values
        T = clm_blowup_time(w0.values, hw0)
        res = oracle_residual("clm", grid, f, [0.25 * T, 0.5 * T, 0.75 * T, 0.9 * T])
        return (lambda t, s: float(np.max(np.abs(s.values - clm_exact(w0.values, hw0, t))))), T, res
    if kind == "burgers":
        x = grid.mesh()[0]
        df = numeric_derivative(f)
        T = burgers_blowup_time(df, float(x[0]), float(x[0]) + grid.length)
        res = oracle_residual("burgers", grid, f, [0.25 * T, 0.5 * T, 0.75 * T, 0.9 * T], df=df)
        return (lambda t, s: float(np.max(np.abs(s.values - burgers_exact(x, t, f, df))))), T, res
    return None, None, None


def _run_pipeline(cfg: ScenarioConfig, out: Path, report: dict) -> int:
    cert = None
    if cfg.section("certificate")["weight"] != "none":
        cert = _certify(cfg, report)
        if cert is None:
            return EXIT["hypothesis_refused"]
    if cfg.kind == "certify":
        return EXIT["ok"]

    sc = cfg.scenario()
    o = cfg.section("oracle")
    err_fn, T_oracle, residual = _oracle(cfg)
    samples = {"err": [], "sign_ok": True, "lower": math.inf}
    w0 = sc.initial_field().values

    def on_sample(t, state):
        if err_fn is not None and t <= o["check_until"] * T_oracle + 1e-12:
            samples["err"].append((t, err_fn(t, state)))
        if o["kind"] == "neg_identity":
            v = state.values
            ok = bool(np.all(v >= 0) and np.all(v <= w0))
            samples["sign_ok"] &= ok
            samples["lower"] = min(samples["lower"], float(np.min(v)))

    try:
        traj = run(sc, on_sample=on_sample)
    except StepFailure as exc:
        report["trajectory"] = {"termination": "step_failure", "failure": str(exc)}
        report["errors"].append(f"step_failure: {exc}")
        return EXIT["step_failure"]
    csv_path = out / "trajectory.csv"
    traj.write_csv(csv_path)
    report["artifacts"].append(csv_path.name)
    r = cfg.section("run")
    report["trajectory"] = {
        **traj.summary(), "integrator": sc.integrator, "dt": sc.dt, "t_end": sc.t_end,
        "grid": sc.grid.describe(), "thresholds": vars(sc.thresholds), "bisections": sc.bisections,
        "dealias": bool(sc.dealias and sc.integrator == "rk4"), "columns": traj.columns(),
        "sample_every": r["sample_every"],
        "detection_note": "blow-up is a numerical proxy; the bracket's lower end is a healthy time",
    }
    if traj.failure:
        report["warnings"].append(f"step retried after failure: {traj.failure}")

    if cert is not None and "M_functional" in traj.diagnostics:
        c = cfg.section("certificate")
        t_max = min(c["bound_t_max"], cert.T_bound)
        keep = traj.times <= t_max
        keep &= traj.times < cert.T_bound
        mon = monitor_bound(traj.times[keep], traj.diagnostics["M_functional"][keep], cert.c_star,
                            rtol=c["bound_rtol"])
        report["bound_monitor"] = {**mon.to_dict(), "rtol": c["bound_rtol"], "t_max": t_max}
        rows = zip(mon.times, traj.diagnostics["M_functional"][keep], cert.lower_bound(mon.times), mon.slack)
        _write_rows(out / "bound.csv", ["t", "M", "lower_bound", "slack"], rows)
        report["artifacts"].append("bound.csv")
        if not mon.ok:
            report["warnings"].append("trajectory bound violated beyond tolerance")

    if err_fn is not None:
        worst = max((e for _, e in samples["err"]), default=float("nan"))
        report["oracle"] = {"kind": o["kind"], "blowup_time": T_oracle, "residual": residual,
                            "residual_tolerance": 1e-6, "max_error": worst, "tolerance": o["tolerance"],
                            "checked_until": o["check_until"] * T_oracle, "samples": len(samples["err"]),
                            "ok": bool(worst <= o["tolerance"] and residual <= 1e-6)}
    elif o["kind"] == "neg_identity":
        report["oracle"] = {"kind": "neg_identity", "sign_bounds": samples["sign_ok"],
                            "min_value": samples["lower"], "sample_every": r["sample_every"]}
    return EXIT["ok"]


def _evaluate_checks(cfg: ScenarioConfig, report: dict) -> dict:
    out = {}
    ch = cfg.checks
    cert = report.get("certificate")
    traj = report.get("trajectory", {})
    br = traj.get("blowup_bracket")
    if "bracket_within" in ch:
        lo, hi = ch["bracket_within"]
        out["bracket_within"] = _check(br, [lo, hi], br is not None and lo <= br[0] and br[1] <= hi)
    if "bracket_rel" in ch:
        target, rel = ch["bracket_rel"]
        if target == 0 and report.get("oracle"):
            target = report["oracle"]["blowup_time"]
        ok = br is not None and all(abs(b - target) <= rel * target for b in br)
        out["bracket_rel"] = _check(br, rel, ok, target=target)
    if "J" in ch:
        val, tol = ch["J"]
        got = cert["hypothesis"]["jensen_integral"] if cert else None
        out["J"] = _check(got, tol, got is not None and abs(got - val) <= tol, expected=val)
    if "T_bound" in ch:
        val, tol = ch["T_bound"]
        got = cert["T_bound"] if cert else None
        out["T_bound"] = _check(got, tol, got is not None and abs(got - val) <= tol, expected=val)
    if "T_bound_at_least" in ch:
        got = cert["T_bound"] if cert else None
        ref = ch["T_bound_at_least"]
        if ref == 0 and report.get("oracle"):
            ref = report["oracle"]["blowup_time"]
        out["T_bound_at_least"] = _check(got, ref, got is not None and got >= ref)
    if "bound_ok" in ch:
        mon = report.get("bound_monitor")
        got = bool(mon and mon["ok"])
        out["bound_ok"] = _check(got, mon and mon["rtol"], got == ch["bound_ok"])
    if "refused" in ch:
        got = report.get("refusal", {}).get("condition")
        out["refused"] = _check(got, None, got == ch["refused"])
    if "oracle_ok" in ch:
        got = bool(report.get("oracle", {}).get("ok"))
        out["oracle_ok"] = _check(got, report.get("oracle", {}).get("tolerance"), got == ch["oracle_ok"])
    if "sign_bounds" in ch:
        o = report.get("oracle", {})
        got = bool(o.get("sign_bounds")) and traj.get("termination") == "reached_t_end"
        out["sign_bounds"] = _check(got, 0.0, got == ch["sign_bounds"])
    return out


def run_scenario(config, out_dir, seed: Optional[int] = None, strict: bool = False,
                 verb: Optional[str] = None) -> tuple:
    """Execute one config; returns ``(report, exit_status)`` and writes ``report.json``."""
    t0 = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {"schema_version": SCHEMA_VERSION, "tool": "stretchblow", "version": __version__,
              "command": verb, "config_path": str(config), "errors": [], "warnings": [],
              "artifacts": [], "conventions": CONVENTIONS}
    try:
        cfg = load_config(config)
        accepts = {None: (cfg.kind,), "run": ("run",), "certify": ("run", "certify"), "polar": ("polar",)}
        if cfg.kind not in accepts[verb]:
            raise ConfigError(f"config kind {cfg.kind!r} cannot be used with verb {verb!r}")
        if verb == "certify":
            cfg.kind = "certify"
    except ConfigError as exc:
        report.update(status="config_error", exit_code=EXIT["config_error"])
        report["errors"].append(str(exc))
        report["wall_clock_s"] = time.perf_counter() - t0
        write_json(out / "report.json", report)
        return report, EXIT["config_error"]
    if seed is not None:
        cfg.seed = seed
    report.update(scenario=cfg.name, kind=cfg.kind, seed=cfg.seed, config=cfg.echo(),
                  criteria=list(cfg.criteria))
    if cfg.kind == "polar":
        from .experiments import run_polar

        code = run_polar(cfg, out, report)
        report["checks"] = report.pop("polar_checks", {})
    else:
        code = _run_pipeline(cfg, out, report)
        report["checks"] = _evaluate_checks(cfg, report)
    if strict and code == EXIT["ok"] and report["warnings"]:
        code = EXIT["strict_warning"]
        report["errors"].append("warnings promoted to errors by --strict")
    status = {v: k for k, v in EXIT.items()}[code]
    report.update(status=status, exit_code=code, checks_pass=all(c["pass"] for c in report["checks"].values()))
    report["wall_clock_s"] = time.perf_counter() - t0
    write_json(out / "report.json", report)
    return report, code


# --- suite ----------------------------------------------------------------------

def read_manifest(path) -> list:
    """Config paths listed one per line (``#`` comments), relative to the manifest."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None
    out = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            p = Path(line)
            out.append(p if p.is_absolute() else path.parent / p)
    return out


def _suite_job(args):
    cfg_path, out_dir, seed, strict = args
    report, code = run_scenario(cfg_path, out_dir, seed=seed, strict=strict)
    return {"config": str(cfg_path), "scenario": report.get("scenario", Path(cfg_path).stem),
            "exit_code": code, "criteria": report.get("criteria", []), "checks": report.get("checks", {}),
            "errors": report.get("errors", [])}


def _scenario_passes(entry) -> bool:
    expected = 3 if "refused" in entry["checks"] else 0
    return entry["exit_code"] == expected and all(c["pass"] for c in entry["checks"].values())


def run_suite(manifest, out_dir, seed: Optional[int] = None, workers: int = 1, strict: bool = False) -> tuple:
    """Run every config of a manifest; aggregate pass/fail per scenario and criterion."""
    t0 = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        configs = read_manifest(manifest)
    except ConfigError as exc:
        report = {"schema_version": SCHEMA_VERSION, "tool": "stretchblow", "version": __version__,
                  "command": "suite", "errors": [str(exc)], "status": "config_error",
                  "exit_code": EXIT["config_error"]}
        write_json(out / "suite_report.json", report)
        return report, EXIT["config_error"]
    jobs = [(str(c), str(out / Path(c).stem), seed, strict) for c in configs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_suite_job, jobs))
    else:
        entries = [_suite_job(j) for j in jobs]
    criteria = {}
    for e in entries:
        e["pass"] = _scenario_passes(e)
        for c in e["criteria"]:
            criteria.setdefault(str(c), []).append(e["pass"])
    agg = {c: all(v) for c, v in sorted(criteria.items(), key=lambda kv: int(kv[0]))}
    ok = all(e["pass"] for e in entries)
    code = EXIT["ok"] if ok else EXIT["suite_failure"]
    report = {"schema_version": SCHEMA_VERSION, "tool": "stretchblow", "version": __version__,
              "command": "suite", "manifest": str(manifest), "seed": seed, "workers": workers,
              "scenarios": entries, "criteria": agg, "status": "ok" if ok else "suite_failure",
              "exit_code": code, "wall_clock_s": time.perf_counter() - t0}
    write_json(out / "suite_report.json", report)
    return report, code


# --- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stretchblow",
                                description="Blow-up certificates and simulations for d_t w = w R(w).")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, target, helptext in (
            ("run", "config", "certificate, simulation and bound monitor"),
            ("certify", "config", "certificate only, no time integration"),
            ("polar", "config", "polar-coordinate experiments"),
            ("suite", "manifest", "run every config listed in a manifest")):
        s = sub.add_parser(verb, help=helptext)
        s.add_argument(target)
        s.add_argument("--out", default=None, help="output directory (default: out/<name>)")
        s.add_argument("--seed", type=int, default=None, help="override the config seed (u64)")
        s.add_argument("--workers", type=int, default=1, help="parallel scenarios (suite)")
        s.add_argument("--strict", action="store_true", help="treat warnings as errors")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT["config_error"]
    if args.verb == "suite":
        out = args.out or os.path.join("out", Path(args.manifest).stem)
        report, code = run_suite(args.manifest, out, seed=args.seed, workers=max(1, args.workers),
                                 strict=args.strict)
        for e in report.get("scenarios", []):
            print(f"{'PASS' if e['pass'] else 'FAIL'}  {e['scenario']}  (exit {e['exit_code']})")
        for c, ok in report.get("criteria", {}).items():
            print(f"criterion {c}: {'pass' if ok else 'FAIL'}")
        for err in report.get("errors", []):
            print(f"error: {err}", file=sys.stderr)
        print(f"report: {Path(out) / 'suite_report.json'}")
        return code
    out = args.out or os.path.join("out", Path(args.config).stem)
    report, code = run_scenario(args.config, out, seed=args.seed, strict=args.strict, verb=args.verb)
    print(f"{report.get('scenario', args.config)}: {report['status']} (exit {code})")
    if "certificate" in report:
        c = report["certificate"]
        print(f"  c* = {c['c_star']:.10g}  T_bound = {c['T_bound']:.10g}")
    if "refusal" in report:
        print(f"  refused: {report['refusal']['message']}")
    tr = report.get("trajectory")
    if tr and tr.get("blowup_bracket"):
        print(f"  blow-up bracket [{tr['blowup_bracket'][0]:.8g}, {tr['blowup_bracket'][1]:.8g}] "
              f"({tr['blowup_reason']})")
    for name, chk in report.get("checks", {}).items():
        print(f"  check {name}: {'pass' if chk['pass'] else 'FAIL'}")
    for err in report["errors"]:
        print(f"error: {err}", file=sys.stderr)
    print(f"report: {Path(out) / 'report.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
