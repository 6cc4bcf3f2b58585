"""Command line front end: solve, check-gradient, sweep-sigma, convergence."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .adjoint import cost_and_gradient, fd_gradient, supports_adjoint
from .continuous import convergence_study
from .errors import ConfigError, DescriptorMismatch, HPSplinesError
from .integrator import (isotropy_pairings, momentum_report, path_csv_rows,
                         reconstructed_mu0)
from .optimize import descend, homotopy_solve

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
GRADIENT_TOL = 1e-4

log = logging.getLogger("hpsplines")


def _fmt(x):
    return "%.17g" % x


def _floats(x):
    return [float(v) for v in np.ravel(x)]


def _write_csv(path: Path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _write_json(path: Path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(cfg, override):
    out = Path(override or cfg.outputs.dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def target_distances(problem, path):
    canon = problem.canonical()
    act = canon.action
    return [float(canon.manifold.distance(act.orbit_point(path.g[n]), t))
            for n, t in zip(canon.schedule.nodes, canon.schedule.targets)]


def momentum_rows(problem, path):
    rep = momentum_report(problem, path)
    rows = [["k", "mu0_norm", "mu1_norm", "J_norm", "residual_norm", "node"]]
    res = np.linalg.norm(rep["residual"], axis=1)
    for k in rep["k"]:
        rows.append([str(k), _fmt(rep["mu0_norm"][k]), _fmt(rep["mu1_norm"][k]),
                     _fmt(rep["J_norm"][k]), _fmt(res[k]), str(int(rep["node"][k]))])
    return rows


def summarize(problem, result):
    out = {
        "final_cost": result.cost,
        "grad_norm": result.grad_norm,
        "terminal_residuals": _floats(result.terminal_residuals),
        "iterations": result.iterations,
        "converged": bool(result.converged),
        "message": result.message,
        "stages": result.stages,
        "mu0_0": _floats(result.mu0_0),
        "mu1_0": _floats(result.mu1_0),
    }
    path = result.path
    if path is not None:
        out["per_target_distances"] = target_distances(problem, path)
        out["isotropy_pairing"] = isotropy_pairings(problem, path)
        out["reconstruction_error"] = float(np.abs(reconstructed_mu0(problem, path)
                                                   - path.mu0).max())
        rep = momentum_report(problem, path)
        out["max_momentum_residual"] = float(np.abs(rep["residual"]).max())
    else:
        out["per_target_distances"] = None
    return out


def cmd_solve(cfg, out: Path):
    problem = cfg.problem
    result = homotopy_solve(problem, cfg.optimizer)
    if result.path is not None:
        if cfg.outputs.path_csv:
            _write_csv(out / "path.csv", path_csv_rows(problem, result.path))
        if cfg.outputs.momentum_csv:
            _write_csv(out / "momentum.csv", momentum_rows(problem, result.path))
    summary = summarize(problem, result)
    if cfg.outputs.summary_json:
        _write_json(out / "summary.json", summary)
    print(f"cost {result.cost:.10g}  grad {result.grad_norm:.3e}  iterations "
          f"{result.iterations}  converged {result.converged}")
    if summary["per_target_distances"] is not None:
        print("target distances " + " ".join(f"{d:.4g}" for d in summary["per_target_distances"]))
    return EXIT_OK if result.converged else EXIT_NUMERIC


def _random_momenta(problem, seed):
    rng = np.random.default_rng(seed)
    d = problem.dim
    return 0.5 * rng.standard_normal(d), 0.5 * rng.standard_normal(d)


def cmd_check_gradient(cfg, out: Path, eps: float, seed: int):
    problem = cfg.problem
    mu0, mu1 = _random_momenta(problem, seed)
    fd0, fd1 = fd_gradient_in_convention(problem, mu0, mu1, eps)
    fd = np.concatenate([fd0, fd1])
    report = {"seed": seed, "eps": eps, "mu0_0": _floats(mu0), "mu1_0": _floats(mu1),
              "fd_gradient": _floats(fd)}
    if not supports_adjoint(problem):
        print("adjoint unavailable; FD only")
        print("fd       " + " ".join(f"{v: .10e}" for v in fd))
        report["adjoint_gradient"] = None
        _write_json(out / "gradient_check.json", report)
        return EXIT_OK
    _, g0, g1, _ = cost_and_gradient(problem, mu0, mu1, "adjoint")
    adj = np.concatenate([g0, g1])
    scale = max(np.linalg.norm(fd), np.linalg.norm(adj))
    rel = 0.0 if scale == 0 else float(np.linalg.norm(adj - fd) / scale)
    comp = np.abs(adj - fd) / np.maximum(np.abs(fd), 1e-300)
    comp = np.where(np.abs(adj - fd) == 0, 0.0, comp)
    print(f"{'i':>3} {'adjoint':>20} {'fd':>20} {'rel':>10}")
    for i, (a, f, c) in enumerate(zip(adj, fd, comp)):
        print(f"{i:>3} {a:20.12e} {f:20.12e} {c:10.2e}")
    print(f"relative l2 discrepancy {rel:.3e}")
    report.update(adjoint_gradient=_floats(adj), componentwise=_floats(comp),
                  relative_l2=rel)
    _write_json(out / "gradient_check.json", report)
    return EXIT_OK if rel <= GRADIENT_TOL else EXIT_NUMERIC


def fd_gradient_in_convention(problem, mu0, mu1, eps):
    """FD gradient in the problem's own momentum convention."""
    if problem.is_canonical:
        return fd_gradient(problem, mu0, mu1, eps)
    g0, g1 = fd_gradient(problem.canonical(), -mu0, -mu1, eps)
    return -g0, -g1


def cmd_sweep_sigma(cfg, out: Path, sigmas):
    if sigmas is None:
        sigmas = cfg.sweep_sigmas
    if not sigmas:
        raise ConfigError("no sigma list given (use --sigmas or a sweep section)")
    sigmas = tuple(float(s) for s in sigmas)
    if any(s <= 0 for s in sigmas) or any(b >= a for a, b in zip(sigmas, sigmas[1:])):
        raise ConfigError("sweep sigmas must be positive and strictly decreasing")
    problem = cfg.problem
    rows = [["sigma", "final_cost", "sum_sq_distance", "grad_norm", "iterations", "converged",
             "error"]]
    mu0 = mu1 = None
    records = []
    status = EXIT_OK
    for i, sigma in enumerate(sigmas):
        stage = problem.with_sigma(sigma)
        try:
            if i == 0:
                res = homotopy_solve(stage, _first_stage_optimizer(cfg.optimizer, problem, sigma))
            else:
                res = descend(stage, cfg.optimizer, mu0, mu1)
        except HPSplinesError as exc:
            log.warning("sweep stage sigma=%g failed: %s", sigma, exc)
            rows.append([_fmt(sigma), "nan", "nan", "nan", "0", "0", str(exc)])
            records.append({"sigma": sigma, "error": str(exc)})
            status = EXIT_NUMERIC
            continue
        if res.path is None:
            rows.append([_fmt(sigma), "nan", "nan", "nan", str(res.iterations), "0", res.message])
            records.append({"sigma": sigma, "error": res.message})
            status = EXIT_NUMERIC
            continue
        sq = float(sum(d * d for d in target_distances(stage, res.path)))
        rows.append([_fmt(sigma), _fmt(res.cost), _fmt(sq), _fmt(res.grad_norm),
                     str(res.iterations), str(int(res.converged)), ""])
        records.append({"sigma": sigma, "cost": res.cost, "sum_sq_distance": sq,
                        "converged": bool(res.converged)})
        if not res.converged:
            status = EXIT_NUMERIC
        mu0, mu1 = res.mu0_0, res.mu1_0
    _write_csv(out / "sweep.csv", rows)
    good = [r["sum_sq_distance"] for r in records if "sum_sq_distance" in r]
    monotone = all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(good, good[1:]))
    if not monotone:
        log.warning("matching error increased somewhere along the sweep")
    _write_json(out / "sweep.json", {"stages": records, "matching_non_increasing": monotone})
    for r in rows[1:]:
        print(" ".join(r[:3]) + ("" if not r[-1] else "  failed: " + r[-1]))
    return status


def _first_stage_optimizer(opt, problem, sigma):
    """The configured homotopy if it ends at ``sigma``, else the default one."""
    if opt.homotopy_schedule is not None and np.isclose(opt.homotopy_schedule[-1], sigma):
        return opt
    return dataclasses.replace(opt, homotopy_schedule=None)


def cmd_convergence(cfg, out: Path, h_list, seed: int):
    problem = cfg.problem
    settings = cfg.convergence or cfgmod.ConvergenceSettings()
    hs = tuple(h_list) if h_list else settings.h_list
    if settings.mu0_0 is None or settings.mu1_0 is None:
        mu0, mu1 = _random_momenta(problem, seed)
        if settings.mu0_0 is not None:
            mu0 = np.asarray(settings.mu0_0)
        if settings.mu1_0 is not None:
            mu1 = np.asarray(settings.mu1_0)
    else:
        mu0, mu1 = np.asarray(settings.mu0_0), np.asarray(settings.mu1_0)
    if not problem.is_canonical:
        mu0, mu1 = -mu0, -mu1
    T = settings.T if settings.T is not None else problem.N * problem.h
    rows, order = convergence_study(problem, (mu0, mu1), hs, T)
    if cfg.outputs.convergence_csv:
        _write_csv(out / "convergence.csv",
                   [["h", "error"]] + [[_fmt(h), _fmt(e)] for h, e in rows])
    errs = [e for _, e in rows]
    info = {"order": order, "T": T, "h_ref": min(hs) / 100.0,
            "monotone": all(b < a for a, b in zip(errs, errs[1:])),
            "rows": [[h, e] for h, e in rows]}
    _write_json(out / "convergence.json", info)
    for h, e in rows:
        print(f"h {h:<10g} error {e:.6e}")
    print(f"fitted order {order:.4f}")
    return EXIT_OK


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


def build_parser():
    p = argparse.ArgumentParser(prog="hpsplines",
                                description="Inexact trajectory planning on matrix Lie groups.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("solve", "check-gradient", "sweep-sigma", "convergence"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", default=None, help="output directory (overrides the config)")
        s.add_argument("--seed", type=int, default=42, help="seed for random momenta")
        if name == "check-gradient":
            s.add_argument("--eps", type=float, default=1e-5, help="finite-difference step")
        if name == "sweep-sigma":
            s.add_argument("--sigmas", type=_float_list, default=None,
                           help="comma separated decreasing sigma values")
        if name == "convergence":
            s.add_argument("--h-list", type=_float_list, default=None,
                           help="comma separated step sizes")
    return p


def _setup_logging():
    level = os.environ.get("HPSPLINES_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load(args.config)
        out = _outdir(cfg, args.out)
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "check-gradient":
            if not args.eps > 0:
                raise ConfigError("--eps must be positive")
            return cmd_check_gradient(cfg, out, args.eps, args.seed)
        if args.command == "sweep-sigma":
            return cmd_sweep_sigma(cfg, out, args.sigmas)
        return cmd_convergence(cfg, out, args.h_list, args.seed)
    except (ConfigError, DescriptorMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HPSplinesError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
