"""Command-line entry point: ``ensc {solve,cluster,synth,verify,bench}``.

Settings come from an optional JSON config (validated against
``schemas/run_config.json``) with command-line flags taking precedence.
Errors are reported on stderr as a JSON object ``{"error": CODE, "message": ...}``.
"""
import argparse
import copy
import csv
import io
import json
import os
import sys
import time
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from . import io as eio
from .config import get_tolerances
from .core import ElasticNetProblem, normalize_columns
from .elastic_net import InnerSolverConfig, solve_full
from .errors import EnscError
from .orgen import OrgenConfig, orgen_solve
from .selfexpr import EnscConfig, build_affinity, self_expressive
from .spectral import clustering_accuracy, spectral_cluster
from .synth import random_subspaces, random_unit_sphere
from . import theory

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "seed": 0,
    "out": "ensc-out",
    "quiet": False,
    "solve": {"lambda": 0.9, "gamma": 50.0, "normalize": True, "full_solver": False,
              "orgen": {}},
    "cluster": {"truth": None, "lambda": 0.9, "alpha": 3.0, "gamma": None,
                "orgen": {}},
    "synth": {"kind": "subspaces", "D": 20, "n": 4, "dims": 4, "points_per": 200,
              "N": 1000, "noise_sigma": 0.0},
    "verify": {"suites": ["nonmonotone-ratio", "delta-norm-bound", "planted-inradius", "phase-grid"],
               "trials": 100,
               "phase_grid": {"N": [100, 200], "lambdas": [0.9, 0.99], "seeds": 3,
                              "alpha": 10.0}},
    "bench": {"D": 100, "N": [5000, 20000, 50000], "lambdas": [0.9], "gamma": 50.0,
              "solvers": ["orgen", "full"]},
}


class CliError(Exception):
    def __init__(self, code, message, exit_code=EXIT_USAGE):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


def load_schema():
    text = resources.files("ensc").joinpath("schemas/run_config.json").read_text()
    return json.loads(text)


def _deep_merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _read_config(path):
    if path is None:
        return {}
    if not os.path.exists(path):
        raise CliError("FILE_NOT_FOUND", f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CliError("CONFIG_INVALID", f"config is not valid JSON: {exc}") from exc
    _validate(cfg)
    return cfg


def _validate(cfg):
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise CliError("CONFIG_INVALID", f"{where}: {exc.message}") from exc


def _flag_overrides(args):
    """Config-shaped dict of the flags that were given on the command line."""
    top = {k: getattr(args, k) for k in ("seed", "out", "threads")
           if getattr(args, k, None) is not None}
    if args.quiet:
        top["quiet"] = True
    section = {}
    for dest, key in getattr(args, "_section_keys", []):
        val = getattr(args, dest, None)
        if val is not None:
            section[key] = val
    orgen = {}
    for key in ("init_size", "max_active", "max_outer_iterations", "tolerance"):
        val = getattr(args, key, None)
        if val is not None:
            orgen[key] = val
    if orgen:
        section["orgen"] = orgen
    if section:
        top[args.command] = section
    return top


def resolve_config(args):
    """Defaults <- config file <- flags, validated as a whole."""
    merged = _deep_merge(DEFAULTS, _read_config(args.config))
    merged = _deep_merge(merged, _flag_overrides(args))
    if "threads" not in merged:
        env = os.environ.get("ENSC_THREADS")
        if env:
            try:
                merged["threads"] = int(env)
            except ValueError as exc:
                raise CliError("CONFIG_INVALID", "ENSC_THREADS must be an integer") from exc
    merged.setdefault("threads", os.cpu_count() or 1)
    _validate(merged)
    return merged


def _require_file(path, what):
    if path is None:
        raise CliError("MISSING_ARGUMENT", f"{what} path is required")
    if not os.path.exists(path):
        raise CliError("FILE_NOT_FOUND", f"{what} file not found: {path}")
    return path


def _orgen_config(section, clustering=False):
    o = section.get("orgen", {})
    inner = InnerSolverConfig(
        tolerance=o.get("tolerance", InnerSolverConfig.tolerance),
        max_iterations=o.get("max_inner_iterations", InnerSolverConfig.max_iterations))
    if clustering:
        return OrgenConfig.clustering(max_active=o.get("max_active", 3000),
                                      init_size=o.get("init_size", 100), inner=inner)
    return OrgenConfig(init_size=o.get("init_size", 100),
                       max_active=o.get("max_active"),
                       max_outer_iterations=o.get("max_outer_iterations", 100),
                       inner=inner)


class _Log:
    def __init__(self, quiet):
        self.quiet = quiet

    def __call__(self, msg):
        if not self.quiet:
            print(msg, file=sys.stderr)


def cmd_solve(cfg, log):
    s = cfg["solve"]
    A = eio.read_matrix(_require_file(s.get("matrix"), "matrix"))
    b = eio.read_vector(_require_file(s.get("b"), "b"))
    problem = ElasticNetProblem.from_arrays(b, A, s["lambda"], s["gamma"],
                                            normalize=s["normalize"])
    ocfg = _orgen_config(s)
    t0 = time.perf_counter()
    sol, trace = orgen_solve(problem, ocfg)
    seconds = time.perf_counter() - t0
    out = cfg["out"]
    tol = get_tolerances().optimality
    summary = {"solver": "orgen", "lambda": s["lambda"], "gamma": s["gamma"],
               "D": problem.dictionary.D, "N": problem.dictionary.N,
               "residual": sol.optimality_residual, "tolerance": tol,
               "objective": sol.objective, "support_size": int(sol.support.size),
               "outer_iterations": trace.outer_iterations,
               "terminated": trace.terminated, "seconds": seconds}
    if s["full_solver"]:
        t0 = time.perf_counter()
        full = solve_full(problem, ocfg.inner)
        summary["full_solver"] = {
            "seconds": time.perf_counter() - t0,
            "residual": full.optimality_residual,
            "objective": full.objective,
            "max_abs_diff": float(np.max(np.abs(full.coefficients - sol.coefficients))),
        }
    eio.write_matrix_csv(os.path.join(out, "coefficients.csv"),
                         sol.coefficients[:, None], header=["c"])
    eio.atomic_write(os.path.join(out, "trace.csv"), trace.to_csv())
    eio.write_json(os.path.join(out, "summary.json"), summary)
    eio.write_manifest(out, cfg, cfg["seed"], "solve")
    log(f"residual {sol.optimality_residual:.3e}, support {sol.support.size}, "
        f"{trace.outer_iterations} outer iterations")
    return EXIT_OK if sol.optimality_residual <= tol else EXIT_FAILED


def _read_truth(path):
    _require_file(path, "truth")
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            return np.asarray(json.load(fh)["labels"], dtype=np.int64)
    return eio.read_labels(path)


def cmd_cluster(cfg, log):
    c = cfg["cluster"]
    X = normalize_columns(eio.read_matrix(_require_file(c.get("data"), "data")))
    truth = _read_truth(c["truth"]) if c.get("truth") else None
    n = c.get("n_clusters")
    if n is None:
        if truth is None:
            raise CliError("MISSING_ARGUMENT", "n_clusters is required without truth")
        n = int(np.unique(truth).size)
    ecfg = EnscConfig(lam=c["lambda"], alpha=c["alpha"], gamma=c.get("gamma"),
                      orgen=_orgen_config(c, clustering=True))
    t0 = time.perf_counter()
    model = self_expressive(X, ecfg, workers=cfg["threads"])
    aff = build_affinity(model)
    t1 = time.perf_counter()
    res = spectral_cluster(aff, n, seed=cfg["seed"])
    t2 = time.perf_counter()
    out = cfg["out"]
    acc = {"n": n, "N": X.N, "seed": cfg["seed"]}
    if truth is not None:
        acc["accuracy"] = clustering_accuracy(res.labels, truth)
    eio.write_labels(os.path.join(out, "labels.csv"), res.labels)
    eio.atomic_write(os.path.join(out, "affinity.csv"), eio.affinity_to_csv(aff))
    eio.write_json(os.path.join(out, "accuracy.json"), acc)
    eio.write_json(os.path.join(out, "summary.json"), {
        "timing": {"affinity_seconds": t1 - t0, "spectral_seconds": t2 - t1},
        "degenerate": res.degenerate, "eigengap": res.eigengap,
        "kmeans_inertia": res.kmeans_inertia,
        "mean_support_size": float(np.mean(model.support_sizes)),
        "failures": [{"column": j, "code": code} for j, code in model.failures]})
    eio.write_manifest(out, cfg, cfg["seed"], "cluster")
    log(f"clustered {X.N} points into {n} groups"
        + (f", accuracy {acc['accuracy']:.4f}" if "accuracy" in acc else ""))
    return EXIT_OK


def cmd_synth(cfg, log):
    s = cfg["synth"]
    out = cfg["out"]
    if s["kind"] == "sphere":
        X = random_unit_sphere(s["D"], s["N"], seed=cfg["seed"])
        sidecar = {"labels": [0] * X.N, "config": {"kind": "sphere", "D": s["D"],
                                                   "N": s["N"]}, "seed": cfg["seed"]}
    else:
        ds = random_subspaces(s["D"], s["n"], s["dims"], s["points_per"],
                              seed=cfg["seed"], noise_sigma=s["noise_sigma"])
        X = ds.X
        sidecar = ds.sidecar()
    eio.write_matrix_binary(os.path.join(out, "data.bin"), X.matrix)
    eio.write_json(os.path.join(out, "data.json"), sidecar)
    eio.write_manifest(out, cfg, cfg["seed"], "synth")
    log(f"wrote {X.D}x{X.N} matrix")
    return EXIT_OK


def cmd_verify(cfg, log):
    v = cfg["verify"]
    seed = cfg["seed"]
    out = cfg["out"]
    report = {}
    for suite in v["suites"]:
        t0 = time.perf_counter()
        if suite == "nonmonotone-ratio":
            r = theory.nonmonotone_ratio_suite()
        elif suite == "delta-norm-bound":
            r = theory.delta_norm_bound_suite(trials=v["trials"], seed=seed)
        elif suite == "planted-inradius":
            r = theory.planted_inradius_suite(trials=v["trials"], seed=seed)
        else:
            pg = v["phase_grid"]
            grid = theory.phase_grid(pg["N"], pg["lambdas"], pg["seeds"],
                                     alpha=pg["alpha"], master_seed=seed)
            eio.atomic_write(os.path.join(out, "phase_grid.csv"), grid.to_csv())
            r = theory.phase_grid_suite(grid)
        r["seconds"] = time.perf_counter() - t0
        report[suite] = r
        log(f"{suite}: {'PASS' if r['passed'] else 'FAIL'}")
    failed = [k for k, r in report.items() if not r["passed"]]
    report["failed"] = failed
    eio.write_json(os.path.join(out, "theory_report.json"), report)
    eio.write_manifest(out, cfg, seed, "verify")
    if failed:
        print(json.dumps({"error": "INVARIANT_FAILED", "failed": failed}), file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def bench_rows(D, Ns, lambdas, gamma, solvers, seed=0):
    """Yield ``(N, lambda, solver, seconds, support, outer_iters)`` rows."""
    for N in Ns:
        rng = np.random.default_rng([seed, N])
        A = rng.standard_normal((D, N))
        b = rng.standard_normal(D)
        b /= np.linalg.norm(b)
        dic = normalize_columns(A)
        for lam in lambdas:
            p = ElasticNetProblem(b, dic, lam, gamma)
            for solver in solvers:
                t0 = time.perf_counter()
                if solver == "orgen":
                    sol, trace = orgen_solve(p)
                    outer = trace.outer_iterations
                else:
                    sol = solve_full(p)
                    outer = 0
                yield (N, lam, solver, time.perf_counter() - t0,
                       int(sol.support.size), outer)


def cmd_bench(cfg, log):
    bc = cfg["bench"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "lambda", "solver", "seconds", "support", "outer_iters"])
    for row in bench_rows(bc["D"], bc["N"], bc["lambdas"], bc["gamma"],
                          bc["solvers"], seed=cfg["seed"]):
        w.writerow([row[0], row[1], row[2], f"{row[3]:.6f}", row[4], row[5]])
        log(f"N={row[0]} lambda={row[1]} {row[2]}: {row[3]:.3f}s support {row[4]}")
    eio.atomic_write(os.path.join(cfg["out"], "bench.csv"), buf.getvalue())
    eio.write_manifest(cfg["out"], cfg, cfg["seed"], "bench")
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "cluster": cmd_cluster, "synth": cmd_synth,
            "verify": cmd_verify, "bench": cmd_bench}


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(s) for s in text.split(",") if s]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int,
                        help="worker processes (default: $ENSC_THREADS or CPU count)")
    common.add_argument("--quiet", action="store_true")

    p = argparse.ArgumentParser(prog="ensc",
                                description="Elastic net subspace clustering tools.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_text, keys):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(_section_keys=[(d, k) for d, k, *_ in keys])
        for dest, key, kw in keys:
            sp.add_argument("--" + key.replace("_", "-"), dest=dest, **kw)
        return sp

    orgen_flags = [
        ("init_size", "init_size", {"type": int}),
        ("max_active", "max_active", {"type": int}),
    ]
    s = add("solve", "solve one elastic net problem with ORGEN", [
        ("matrix", "matrix", {"help": "dictionary (CSV or binary)"}),
        ("b", "b", {"help": "target vector"}),
        ("lam", "lambda", {"type": float}),
        ("gamma", "gamma", {"type": float}),
        ("full_solver", "full_solver",
         {"action": "store_const", "const": True,
          "help": "also run the full-dictionary solver and report the difference"}),
    ])
    for dest, key, kw in orgen_flags:
        s.add_argument("--" + key.replace("_", "-"), dest=dest, **kw)
    s.add_argument("--max-outer-iterations", dest="max_outer_iterations", type=int)
    s.add_argument("--tolerance", type=float)

    c = add("cluster", "self-expressive clustering of the columns of a matrix", [
        ("data", "data", {}),
        ("truth", "truth", {"help": "labels CSV or synth JSON sidecar"}),
        ("n_clusters", "n_clusters", {"type": int}),
        ("lam", "lambda", {"type": float}),
        ("alpha", "alpha", {"type": float}),
        ("gamma", "gamma", {"type": float}),
    ])
    for dest, key, kw in orgen_flags:
        c.add_argument("--" + key.replace("_", "-"), dest=dest, **kw)

    add("synth", "generate union-of-subspaces data", [
        ("kind", "kind", {"choices": ["subspaces", "sphere"]}),
        ("D", "D", {"type": int}),
        ("n", "n", {"type": int}),
        ("dims", "dims", {"type": int}),
        ("points_per", "points_per", {"type": int}),
        ("N", "N", {"type": int}),
        ("noise_sigma", "noise_sigma", {"type": float}),
    ])
    add("verify", "run the theory check suites", [
        ("suites", "suites", {"type": _csv_list(str),
                              "help": "comma list of nonmonotone-ratio,delta-norm-bound,"
                                      "planted-inradius,phase-grid"}),
        ("trials", "trials", {"type": int}),
    ])
    add("bench", "time ORGEN against the full-dictionary solver", [
        ("D", "D", {"type": int}),
        ("N_list", "N", {"type": _csv_list(int)}),
        ("lambdas", "lambdas", {"type": _csv_list(float)}),
        ("gamma", "gamma", {"type": float}),
        ("solvers", "solvers", {"type": _csv_list(str)}),
    ])
    return p


def _error(code, message, exit_code):
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)
    return exit_code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, _Log(cfg["quiet"]))
    except CliError as exc:
        return _error(exc.code, str(exc), exc.exit_code)
    except FileNotFoundError as exc:
        return _error("FILE_NOT_FOUND", str(exc), EXIT_USAGE)
    except EnscError as exc:
        return _error(exc.code, str(exc), EXIT_FAILED)


if __name__ == "__main__":
    sys.exit(main())
