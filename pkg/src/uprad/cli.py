"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 singular Fisher information, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .design import DesignBounds, budget_from_noise_model, check_alpha
from .errors import SingularFIMError, UnsolvableError, UpradError
from .fisher import crlb, decompose, fim, objective, pair_jacobians, weight_matrix
from .geometry import Scenario
from .montecarlo import CLUSTERS, StudyParams, cdf, cluster_histogram, run_study, summarize
from .optimizer import (LocalConfig, PSOConfig, classify_cluster, make_problem, solve_local,
                        solve_pso, solve_vertex)

log = logging.getLogger("uprad")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
CSV_SCHEMA = "# schema=1"
STUDY_COLUMNS = ("trial", "w", "f_alpha0", "f_local", "f_opt", "X_local", "Y_local",
                 "X_opt", "Y_opt", "cluster", "evals_pso")


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _bounds(text: str) -> DesignBounds:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"--bounds needs two values l,u, got {text!r}")
    try:
        return DesignBounds(vals[0], vals[1])
    except UpradError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _num(x: float) -> str:
    """Shortest round-trip text for a float."""
    return repr(float(x))


def load_scenario(path: str | Path, sigma0: float | None = None) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CLIError(f"cannot read scenario {path}: {exc.strerror or exc}", EXIT_IO) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CLIError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                       EXIT_INVALID) from exc
    try:
        scenario = Scenario.from_dict(data)
        if sigma0 is not None:
            scenario = scenario.with_sigma0(sigma0)
    except (UpradError, ValueError, TypeError, KeyError) as exc:
        raise CLIError(f"{path}: invalid scenario: {exc}", EXIT_INVALID) from exc
    return scenario


def _setup(args):
    scenario = load_scenario(args.scenario, args.sigma0)
    decomp = decompose(pair_jacobians(scenario), budget_from_noise_model(scenario),
                       scenario.n_t, scenario.n_r)
    if args.alpha is None:
        alpha = args.bounds.initial(scenario.n_t)
    else:
        try:
            alpha = check_alpha(args.alpha, scenario.n_t, args.bounds)
        except UpradError as exc:
            raise CLIError(str(exc), EXIT_INVALID) from exc
    return scenario, decomp, alpha


def cmd_crlb(args) -> dict:
    _, decomp, alpha = _setup(args)
    weight = weight_matrix(args.w)
    cov = crlb(fim(decomp, alpha))
    return {
        "alpha": alpha.tolist(),
        "w": args.w,
        "crlb": cov.tolist(),
        "position_trace": float(np.trace(cov[:3, :3])),
        "velocity_trace": float(np.trace(cov[3:, 3:])),
        "f": objective(decomp, weight, alpha),
    }


def _result_report(result, bounds, tol):
    out = result.to_dict()
    label = classify_cluster(result.alpha_star, bounds, tol)
    out.update(cluster=label.label, n_at_upper=label.n_at_upper, n_at_lower=label.n_at_lower)
    return out


def cmd_optimize(args) -> dict:
    _, decomp, alpha0 = _setup(args)
    problem = make_problem(decomp, weight_matrix(args.w), args.bounds)
    local_cfg, pso_cfg = _solver_configs(args)
    methods = ("local", "vertex", "pso") if args.method == "all" else (args.method,)
    results = {}
    if "local" in methods:
        results["local"] = solve_local(problem, alpha0, local_cfg)
    if "vertex" in methods:
        results["vertex"] = solve_vertex(problem)
    if "pso" in methods:
        results["pso"] = solve_pso(problem, pso_cfg, seed=args.seed, alpha0=alpha0,
                                   local=results.get("local"))
    report = {
        "w": args.w,
        "alpha0": alpha0.tolist(),
        "f_alpha0": objective(decomp, weight_matrix(args.w), alpha0),
    }
    if len(methods) == 1:
        report["result"] = _result_report(results[methods[0]], args.bounds, args.cluster_tol)
        return report
    ordered = sorted(results.values(), key=lambda r: (r.f_value, r.method))
    report["results"] = [_result_report(r, args.bounds, args.cluster_tol) for r in ordered]
    report["dominance"] = {
        "pso_le_vertex": results["pso"].f_value <= results["vertex"].f_value,
        "pso_le_local": results["pso"].f_value <= results["local"].f_value,
        "local_le_alpha0": results["local"].f_value <= report["f_alpha0"],
    }
    return report


def _solver_configs(args):
    local_cfg = LocalConfig(max_iter=args.local_max_iter, pg_tol=args.local_tol)
    pso_cfg = PSOConfig(n_particles=args.pso_particles, iterations=args.pso_iterations)
    return local_cfg, pso_cfg


def _open_out(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="\n")
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from exc


def companion_paths(out: Path) -> tuple[Path, Path]:
    stem = out.with_suffix("")
    return Path(f"{stem}_cdf.csv"), Path(f"{stem}_clusters.csv")


def write_study_csv(records, fh) -> None:
    fh.write(CSV_SCHEMA + "\n")
    fh.write(",".join(STUDY_COLUMNS) + "\n")
    for r in records:
        fh.write(",".join([
            str(r.trial), _num(r.w), _num(r.f_alpha0), _num(r.f_local), _num(r.f_opt),
            _num(r.x_local), _num(r.y_local), _num(r.x_opt), _num(r.y_opt), r.cluster,
            str(r.evals_pso),
        ]) + "\n")


def write_cdf_csv(records, fh) -> None:
    fh.write(CSV_SCHEMA + "\n")
    fh.write("w,variable,value,fraction\n")
    for w in dict.fromkeys(r.w for r in records):
        rows = [r for r in records if r.w == w]
        for name, attr in (("X_local", "x_local"), ("Y_local", "y_local"),
                           ("X_opt", "x_opt"), ("Y_opt", "y_opt")):
            for value, frac in cdf([getattr(r, attr) for r in rows]):
                fh.write(f"{_num(w)},{name},{_num(value)},{_num(frac)}\n")


def write_cluster_csv(records, fh) -> None:
    fh.write(CSV_SCHEMA + "\n")
    fh.write("w,cluster,count,fraction\n")
    hist = cluster_histogram(records)
    for w, fractions in hist.items():
        for label in CLUSTERS:
            count = sum(1 for r in records if r.w == w and r.cluster == label)
            fh.write(f"{_num(w)},{label},{count},{_num(fractions[label])}\n")


def cmd_montecarlo(args) -> dict:
    local_cfg, pso_cfg = _solver_configs(args)
    try:
        params = StudyParams(
            trials=args.trials, n_t=args.n_t, n_r=args.n_r, radius=args.radius,
            sigma0=1.0 if args.sigma0 is None else args.sigma0, bounds=args.bounds,
            w_values=tuple(args.w), seed=args.seed, local=local_cfg, pso=pso_cfg,
            cluster_tol=args.cluster_tol,
        )
    except UpradError as exc:
        raise CLIError(str(exc), EXIT_INVALID) from exc
    out = Path(args.out)
    cdf_path, cluster_path = companion_paths(out)
    handles = [_open_out(p) for p in (out, cdf_path, cluster_path)]

    done = []

    def counter(_trial):
        done.append(1)
        sys.stderr.write(f"\r{len(done)}/{params.trials}")
        sys.stderr.flush()

    progress = counter if sys.stderr.isatty() else None

    try:
        records = run_study(params, threads=args.threads, progress=progress)
        if progress is not None:
            sys.stderr.write("\n")
        write_study_csv(records, handles[0])
        write_cdf_csv(records, handles[1])
        write_cluster_csv(records, handles[2])
    except OSError as exc:
        raise CLIError(f"write failed: {exc}", EXIT_IO) from exc
    finally:
        for fh in handles:
            fh.close()
    summary = summarize(records)
    return {
        "out": str(out),
        "cdf": str(cdf_path),
        "clusters": str(cluster_path),
        "rows": len(records),
        "summary": {_num(w): s for w, s in summary.items()},
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uprad",
        description="CRLB and per-transmitter time/bandwidth design for distributed MIMO radar.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--bounds", type=_bounds, default=DesignBounds(1.0, 100.0),
                       help="design box l,u (default 1,100)")
        p.add_argument("--sigma0", type=float, default=None, help="noise-model constant")
        p.add_argument("--cluster-tol", type=float, default=1e-3)

    def solvers(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--pso-particles", type=int, default=PSOConfig.n_particles)
        p.add_argument("--pso-iterations", type=int, default=PSOConfig.iterations)
        p.add_argument("--local-max-iter", type=int, default=LocalConfig.max_iter)
        p.add_argument("--local-tol", type=float, default=LocalConfig.pg_tol)

    p = sub.add_parser("crlb", help="CRLB of one scenario at a given design")
    p.add_argument("--scenario", required=True)
    p.add_argument("--alpha", type=_floats, default=None, help="design a1,a2,... (default sqrt(l*u))")
    p.add_argument("--w", type=float, default=1.0, help="velocity weight")
    common(p)

    p = sub.add_parser("optimize", help="optimize the design for one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--alpha", type=_floats, default=None, help="local-search start point")
    p.add_argument("--w", type=float, default=1.0)
    p.add_argument("--method", choices=("local", "pso", "vertex", "all"), default="all")
    common(p)
    solvers(p)

    p = sub.add_parser("montecarlo", help="random-constellation study, CSV output")
    p.add_argument("--trials", type=int, default=5000)
    p.add_argument("--w", type=_floats, default=[0.1, 1.0, 10.0], help="velocity weights w1,w2,...")
    p.add_argument("--n-t", type=int, default=4)
    p.add_argument("--n-r", type=int, default=6)
    p.add_argument("--radius", type=float, default=6000.0)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    common(p)
    solvers(p)
    return parser


COMMANDS = {"crlb": cmd_crlb, "optimize": cmd_optimize, "montecarlo": cmd_montecarlo}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report = COMMANDS[args.command](args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (SingularFIMError, UnsolvableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except UpradError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(report, indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
