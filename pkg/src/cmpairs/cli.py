"""``cmpairs`` command line.

Usage::

    cmpairs <mode> --config <path> [--out-dir DIR] [--jobs N] [--seed S]

Exit status is 0 on success, 2 for an invalid configuration and 3 for a
numerical failure (the message names the failing stage). ``selftest`` also
exits with 3 when any check fails.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bkp import ReducedState, integrate_reduced
from .config import ScenarioConfig, load_config
from .dynamics import CMState
from .elliptic import Lattice
from .errors import CMPairsError, ConfigInvalid, EpsilonTooSmall
from .io import config_hash, trajectory_to_dict, write_json, write_trajectory_csv
from .lax import default_ladder, det, lax_bkp, spectral_scan, zero_locus_report
from .pair_manifold import embed, stickiness_report, t0_rates
from .selftest import format_table, run_suites
from .studies import conservation_report, convergence_study, residual_report

__all__ = ["main", "build_parser", "run"]

log = logging.getLogger("cmpairs")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class StageFailure(Exception):
    def __init__(self, stage, exc):
        super().__init__(f"stage {stage!r} failed: {type(exc).__name__}: {exc}")
        self.stage = stage
        self.exc = exc


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)
        return self

    def __exit__(self, et, ev, tb):
        if ev is not None and isinstance(ev, (CMPairsError, ArithmeticError, FloatingPointError)) \
                and not isinstance(ev, ConfigInvalid):
            raise StageFailure(self.name, ev) from ev
        return False


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmpairs", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cmpairs {__version__}")
    p.add_argument("mode", choices=["full", "reduced", "compare", "spectral", "selftest",
                                    "selftest-elliptic"],
                   metavar="{full,reduced,compare,spectral,selftest}")
    p.add_argument("--config", help="scenario JSON (optional for selftest)")
    p.add_argument("--out-dir", default=".", help="directory for artifacts (default: .)")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes for eps ladders and grids (default: all cores)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _lattice(cfg):
    return Lattice(cfg.omega1, cfg.omega2)


def _verdict(mode, cfg, checks, extra=None):
    out = {
        "mode": mode,
        "tool_version": __version__,
        "config_hash": config_hash(cfg.raw),
        "checks": checks,
        "pass": all(c["pass"] for c in checks.values()),
    }
    if extra:
        out.update(extra)
    return out


def _write_traj(traj, cfg, out_dir, stem):
    if "csv" in cfg.formats:
        write_trajectory_csv(traj, out_dir / f"{stem}.csv")
    if "json" in cfg.formats:
        write_json(trajectory_to_dict(traj, cfg.raw), out_dir / f"{stem}.json")


def _run_full(cfg, lat, out_dir, jobs):
    extra = {}
    if cfg.is_reduced_initial:
        red = ReducedState(cfg.x, cfg.alpha)
        with _Stage("embed"):
            s0 = embed(lat, red, cfg.eps)
            rates = t0_rates(lat, red, cfg.eps)
        key = {1: None, 2: "t2_separation_rate", 3: "separation_rate"}[cfg.flow]
        rate = 0.0 if key is None else float(rates[key].max())
        extra["pairing"] = {
            "eps": cfg.eps,
            "separation_rate_t0": rate,
            "separation_rate_times_eps": rate * cfg.eps,
            "status": "destroyed" if rate * cfg.eps > 1.0 else "preserved",
        }
    else:
        s0 = CMState(cfg.x, cfg.p)
    with _Stage("integrate"):
        traj, rep = conservation_report(
            lat, s0, cfg.flow, cfg.t_end, tol=cfg.tol, samples=cfg.samples,
            normalize="terms" if cfg.is_reduced_initial else "value")
    _write_traj(traj, cfg, out_dir, cfg.prefix + "_trajectory")
    write_json(rep, out_dir / f"{cfg.prefix}_conservation.json")
    return _verdict("full", cfg, rep["checks"], extra)


def _run_reduced(cfg, lat, out_dir, jobs):
    red = ReducedState(cfg.x, cfg.alpha)
    with _Stage("integrate"):
        traj, rep = residual_report(lat, red, cfg.t_end, tol=cfg.tol, samples=cfg.samples)
    _write_traj(traj, cfg, out_dir, cfg.prefix + "_trajectory")
    write_json(rep, out_dir / f"{cfg.prefix}_residual.json")
    return _verdict("reduced", cfg, rep["checks"])


def _run_compare(cfg, lat, out_dir, jobs):
    red = ReducedState(cfg.x, cfg.alpha)
    with _Stage("stickiness"):
        stick = stickiness_report(lat, red, cfg.eps_ladder, cfg.stick_t_end or cfg.t_end,
                                  tol=cfg.tol, jobs=jobs, rate_eps_list=cfg.rate_eps_ladder)
    write_json(stick, out_dir / f"{cfg.prefix}_stickiness.json")
    with _Stage("convergence"):
        conv = convergence_study(lat, red, cfg.eps_ladder, cfg.t_end, tol=cfg.tol,
                                 samples=cfg.samples, jobs=jobs)
    write_json(conv, out_dir / f"{cfg.prefix}_convergence.json")
    checks = {f"stickiness.{k}": v for k, v in stick["checks"].items()}
    checks.update({f"convergence.{k}": v for k, v in conv["checks"].items()})
    return _verdict("compare", cfg, checks)


def _run_spectral(cfg, lat, out_dir, jobs):
    red = ReducedState(cfg.x, cfg.alpha)
    ladder = cfg.eps_ladder or default_ladder()
    with _Stage("spectral_limit"):
        scan = spectral_scan(lat, red, cfg.z_grid, cfg.lambda_grid, ladder, "limit", jobs)
    with _Stage("det_bkp"):
        scan_b = spectral_scan(lat, red, cfg.z_grid, cfg.lambda_grid, kind="bkp", jobs=jobs)
    for sc, stem in ((scan, "spectral_limit"), (scan_b, "det_bkp")):
        if "csv" in cfg.formats:
            sc.to_csv(out_dir / f"{cfg.prefix}_{stem}.csv")
        if "json" in cfg.formats:
            sc.to_json(out_dir / f"{cfg.prefix}_{stem}.json")
    with _Stage("det_bkp_conservation"):
        ts = np.linspace(0.0, cfg.t_end, cfg.samples)
        traj = integrate_reduced(lat, red, cfg.t_end, tol=min(cfg.tol, 1e-11), t_eval=ts)
        drift = 0.0
        for z in cfg.z_grid:
            for lam in cfg.lambda_grid:
                d = np.array([det(lax_bkp(lat, s, z, lam)) for s in traj.states])
                drift = max(drift, float(np.abs(d - d[0]).max() / max(abs(d[0]), 1e-300)))
    checks = {
        "det_bkp_conservation": {"value": drift, "threshold": 1e-6, "pass": drift < 1e-6},
        "spectral_limit_bounded": {
            "value": float(np.abs(scan.det_values).max()), "threshold": None,
            "pass": bool(np.all(np.isfinite(scan.det_values))),
        },
    }
    extra = {}
    if red.n_pairs >= 2:
        with _Stage("zero_locus"):
            rep = zero_locus_report(lat, red, cfg.lambda_grid, ladder)
        write_json(rep, out_dir / f"{cfg.prefix}_zero_locus.json")
        extra["zero_locus_max_root_distance"] = rep["max_root_distance"]
    return _verdict("spectral", cfg, checks, extra)


def _run_selftest(cfg, lat, out_dir, seed, names=None):
    with _Stage("selftest"):
        rows = run_suites(lat, seed, names)
    print(format_table(rows))
    checks = {f"{s}.{c}": {"value": v, "threshold": t, "pass": ok} for s, c, v, t, ok in rows}
    return _verdict("selftest", cfg, checks)


def run(mode: str, cfg: ScenarioConfig, out_dir: Path, jobs: int, seed: int) -> dict:
    lat = _lattice(cfg)
    if cfg.eps is not None and not cfg.eps > 10 * lat.singular_radius:
        raise ConfigInvalid(f"eps={cfg.eps} too small for this lattice")
    for e in cfg.eps_ladder + (cfg.rate_eps_ladder or []):
        if not e > 10 * lat.singular_radius:
            raise ConfigInvalid(f"eps ladder entry {e} too small for this lattice")
    out_dir.mkdir(parents=True, exist_ok=True)
    if mode == "full":
        return _run_full(cfg, lat, out_dir, jobs)
    if mode == "reduced":
        return _run_reduced(cfg, lat, out_dir, jobs)
    if mode == "compare":
        return _run_compare(cfg, lat, out_dir, jobs)
    if mode == "spectral":
        return _run_spectral(cfg, lat, out_dir, jobs)
    if mode == "selftest":
        return _run_selftest(cfg, lat, out_dir, seed)
    return _run_selftest(cfg, lat, out_dir, seed, ["elliptic"])


def _print_verdict(v):
    print(f"verdict: {v['mode']} {'PASS' if v['pass'] else 'FAIL'}")
    for name, c in v["checks"].items():
        thr = "-" if c["threshold"] is None else f"{c['threshold']:.3g}"
        val = c["value"]
        val = "-" if val is None else f"{val:.6g}"
        print(f"  {'ok  ' if c['pass'] else 'FAIL'} {name}: {val} (limit {thr})")
    if "pairing" in v:
        p = v["pairing"]
        print(f"  pairing {p['status']}: separation rate {p['separation_rate_t0']:.6g}"
              f" (eps * rate = {p['separation_rate_times_eps']:.6g})")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    try:
        if jobs < 1:
            raise ConfigInvalid("--jobs must be at least 1")
        if args.config is None:
            if not args.mode.startswith("selftest"):
                raise ConfigInvalid(f"mode {args.mode} requires --config")
            cfg = ScenarioConfig.from_dict({}, args.mode)
        else:
            cfg = load_config(args.config, args.mode)
        seed = args.seed if args.seed is not None else cfg.seed
        out_dir = Path(args.out_dir)
        verdict = run(args.mode, cfg, out_dir, jobs, seed)
    except (ConfigInvalid, EpsilonTooSmall) as exc:
        print(f"cmpairs: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageFailure as exc:
        print(f"cmpairs: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        if "Im(omega2/omega1)" in str(exc) or "half-periods" in str(exc):
            print(f"cmpairs: invalid configuration: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        raise
    write_json(verdict, out_dir / f"{cfg.prefix}_verdict.json")
    _print_verdict(verdict)
    if args.mode.startswith("selftest") and not verdict["pass"]:
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
