"""Command-line driver: one subcommand per pipeline, JSON config in,
machine-readable artifacts out.

Artifacts land in --out: report.json (deterministic: canonical key
order, no timestamps), series.csv where a pipeline produces a series,
and meta.json for run metadata that may vary between runs. Exit code 0
means success, 2 means the computation finished but a checked
prediction failed, 1 means an operational error.
"""

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .birkhoff import Observable, combine_pl, constant, coordinate, cosine, pl_observable
from .chains import GridPartition, build_transition_graph, chain_classes
from .construction import run_irregular_pipeline
from .entropy import (
    grid_pool,
    katok_entropy_estimate,
    lap_entropy,
    separated_entropy,
    separated_set,
    spanning_number,
)
from .errors import ConstructionImpossible, NotShadowed, ParameterError, ToolkitError
from .levelsets import check_theorem_vminus, rate_series
from .maps import MapSpec, example_exv, identity_map, lipschitz_constant, load_map_json, tent
from .shadowing import perturbed_orbit, shadowing_modulus, trace
from .util import dump_json, rng_for, write_csv

_SQRT2 = math.sqrt(2.0)


def map_from_config(cfg) -> MapSpec:
    kind = cfg.get("kind")
    if kind == "tent":
        return tent(float(cfg.get("slope", 2.0)))
    if kind == "identity":
        return identity_map()
    if kind == "exv":
        return example_exv(int(cfg.get("depth", 2)), cfg.get("slopes"))
    if kind == "pl":
        return MapSpec(
            np.asarray(cfg["breakpoints"], dtype=float),
            np.asarray(cfg["values"], dtype=float),
            cfg.get("label", "pl-map"),
        )
    if kind == "file":
        return load_map_json(cfg["path"])
    raise ParameterError(f"map.kind {kind!r} not one of tent|identity|exv|pl|file")


def observable_from_config(cfg) -> Observable:
    kind = cfg.get("kind", "coordinate")
    if kind == "coordinate":
        return coordinate()
    if kind == "constant":
        return constant(float(cfg.get("c", 0.0)))
    if kind == "cosine":
        return cosine(int(cfg.get("k", 1)))
    if kind == "pl":
        return pl_observable(cfg["breakpoints"], cfg["values"])
    raise ParameterError(f"observable.kind {kind!r} not one of coordinate|constant|cosine|pl")


SUBCOMMANDS = (
    "classes",
    "trace",
    "modulus",
    "entropy",
    "irregular",
    "levelset",
    "rate",
    "perturb-demo",
)


def validate(config) -> list:
    """Precondition check; each violation names the offending field."""
    out = []

    def bad(field, message):
        out.append({"field": field, "message": message})

    sub = config.get("subcommand")
    if sub not in SUBCOMMANDS:
        bad("subcommand", f"must be one of {', '.join(SUBCOMMANDS)}")
        return out
    try:
        m = map_from_config(config.get("map", {}))
    except (ToolkitError, KeyError, TypeError) as exc:
        bad("map", str(exc))
        m = None
    if "observable" in config or sub in ("irregular", "levelset", "rate", "perturb-demo"):
        try:
            observable_from_config(config.get("observable", {}))
        except (ToolkitError, KeyError, TypeError) as exc:
            bad("observable", str(exc))
    params = config.get(sub, {})
    if sub == "classes":
        h = float(params.get("h", 2.0 ** -12))
        delta = float(params.get("delta", 2.0 * h))
        if h <= 0 or h > 1:
            bad(f"{sub}.h", "cell width must lie in (0, 1]")
        elif delta < h:
            bad(f"{sub}.delta", "build_transition_graph requires delta >= cell width")
    if sub in ("trace", "modulus"):
        if float(params.get("eps", 1e-3)) <= 0:
            bad(f"{sub}.eps", "eps must be positive")
        if sub == "trace" and float(params.get("delta", 1e-4)) <= 0:
            bad(f"{sub}.delta", "delta must be positive")
    if sub == "entropy":
        if int(params.get("n_max", 20)) < 2:
            bad("entropy.n_max", "need n_max >= 2")
        if float(params.get("eps", 0.02)) <= 0:
            bad("entropy.eps", "eps must be positive")
    if sub == "irregular":
        eta = float(params.get("eta", 0.01))
        eps = float(params.get("eps", 1e-3))
        if eta <= 0:
            bad("irregular.eta", "eta must be positive")
        if eps <= 0:
            bad("irregular.eps", "eps must be positive")
    if sub == "levelset" and int(params.get("n_hi", 12)) < 1:
        bad("levelset.n_hi", "need n_hi >= 1")
    if sub == "rate" and float(params.get("tol", 0.05)) <= 0:
        bad("rate.tol", "tol must be positive")
    if m is not None and config.get("map", {}).get("kind") == "exv":
        for i, s in enumerate(config["map"].get("slopes") or []):
            if not (_SQRT2 < float(s) <= 2.0):
                bad(f"map.slopes[{i}]", f"slope {s!r} outside (sqrt(2), 2]")
    return out


# ---------------------------------------------------------------------------
# handlers: each returns (exit_code, report_dict, series_rows_or_None, header)
# ---------------------------------------------------------------------------

def _run_classes(m, phi, params, seed, threads):
    h = float(params.get("h", 2.0 ** -12))
    delta = float(params.get("delta", 2.0 * h))
    grid = GridPartition(h)
    g = build_transition_graph(m, grid, delta)
    cs = chain_classes(g)
    report = {
        "n_classes": len(cs.classes),
        "h": h,
        "delta": delta,
        "classes": [
            {"cells": len(c), "hull": list(cs.hull(k)), "leftmost": int(c[0])}
            for k, c in enumerate(cs.classes)
        ],
        "recurrent_cell_count": int(len(cs.recurrent_cells)),
        "class_export": cs.to_json_dict(),
    }
    rows = list(g.edge_rows())
    return 0, report, rows, ["src", "dst"]


def _run_trace(m, phi, params, seed, threads):
    eps = float(params.get("eps", 1e-3))
    delta = float(params.get("delta", 1e-4))
    n = int(params.get("n", 500))
    x0 = float(params.get("x0", rng_for(seed, 3).uniform()))
    po = perturbed_orbit(m, x0, n, delta, seed)
    try:
        tr = trace(m, po, eps)
    except NotShadowed as exc:
        report = {"traced": False, "failed_index": exc.failed_index, "eps": eps, "delta": delta}
        return 2, report, None, None
    report = {
        "traced": True,
        "eps": eps,
        "delta": delta,
        "x0": x0,
        "horizon": n,
        "shadow_point": tr.shadow_point,
        "achieved_error": tr.achieved_error,
        "surviving_interval_width": tr.surviving_interval_width,
    }
    rows = [(i, float(s)) for i, s in enumerate(po.states)]
    return 0, report, rows, ["i", "state"]


def _run_modulus(m, phi, params, seed, threads):
    eps = float(params.get("eps", 1e-2))
    trials = int(params.get("trials", 20))
    horizon = int(params.get("horizon", 200))
    d = shadowing_modulus(m, eps, trials, horizon, seed, threads=threads)
    report = {"eps": eps, "trials": trials, "horizon": horizon, "delta_hat": d}
    if d <= 0.0:
        report["diagnostic"] = "no delta on the bisection grid was traced for all trials"
        return 2, report, None, None
    return 0, report, None, None


def _run_entropy(m, phi, params, seed, threads):
    n_max = int(params.get("n_max", 20))
    bits = int(params.get("pool_bits", 14))
    eps = float(params.get("eps", 0.02))
    n_lo = int(params.get("n_lo", 6))
    n_hi = int(params.get("n_hi", 12))
    lap = lap_entropy(m, n_max)
    pool = grid_pool(bits)
    sep = separated_entropy(m, pool, range(n_lo, n_hi + 1), eps)
    k_n = int(params.get("katok_n_hi", 10))
    k_sample = rng_for(seed, 5).uniform(size=int(params.get("katok_sample", 4096)))
    kat = katok_entropy_estimate(m, k_sample, range(max(2, n_lo), k_n + 1), float(params.get("katok_eps", 0.05)))
    span_eps = spanning_number(m, pool[:: max(1, len(pool) // 2048)], max(2, n_lo), eps)
    report = {
        "lap": lap.to_json_dict(),
        "separated": sep.to_json_dict(),
        "katok": kat.to_json_dict(),
        "spanning_at_n_lo": span_eps,
        "extrapolated": lap.extrapolated,
    }
    rows = [("laps", n, v) for n, v in lap.samples]
    rows += [("separated", n, v) for n, v in sep.samples]
    rows += [("katok", n, v) for n, v in kat.samples]
    return 0, report, rows, ["method", "n", "count"]


def _run_irregular(m, phi, params, seed, threads):
    res = run_irregular_pipeline(
        m,
        phi,
        eps=float(params.get("eps", 1e-3)),
        eta=float(params.get("eta", 0.01)),
        xi=params.get("xi"),
        L_target=int(params.get("L_target", 64)),
        n_check=int(params.get("n_check", 3)),
        horizon=params.get("horizon"),
        seed=seed,
        class_id=params.get("class_id"),
        max_period=int(params.get("max_period", 6)),
        threads=threads,
    )
    report = {
        "irregular": res.report.irregular,
        "verification": res.report.to_json_dict(),
        "library": res.library.summary(),
        "schedule": res.schedule.to_json_dict(),
        "modulus": res.modulus,
        "trace": {
            "shadow_point": res.trace_result.shadow_point,
            "achieved_error": res.trace_result.achieved_error,
            "surviving_interval_width": res.trace_result.surviving_interval_width,
            "horizon": len(res.pseudo_orbit),
        },
    }
    rows = [
        (r.n, r.kind, r.position, r.average, r.target, r.tolerance, int(r.ok))
        for r in res.report.rows
    ]
    code = 0 if res.report.irregular else 2
    return code, report, rows, ["n", "kind", "position", "average", "target", "tolerance", "ok"]


def _run_levelset(m, phi, params, seed, threads):
    c = float(params.get("c", 0.5))
    n_lo = int(params.get("n_lo", 1))
    n_hi = int(params.get("n_hi", 12))
    exact_max = int(params.get("exact_max_n", 14))
    mc_samples = int(params.get("mc_samples", 200_000))
    rows = rate_series(m, phi, c, range(n_lo, n_hi + 1), exact_max_n=exact_max, mc_samples=mc_samples, seed=seed)
    report = {
        "c": c,
        "phi": phi.label,
        "series": [
            {"n": n, "exact": bool(ex), "m_Dn": mv, "rate": rv} for n, ex, mv, rv in rows
        ],
    }
    return 0, report, [(n, int(ex), mv, rv) for n, ex, mv, rv in rows], ["n", "exact", "m_Dn", "rate"]


def _run_rate(m, phi, params, seed, threads):
    xi_const = float(params.get("xi_const", math.log(max(lipschitz_constant(m), 1.0 + 1e-9))))
    c = float(params.get("c", 0.4))
    n_lo = int(params.get("n_lo", 8))
    n_hi = int(params.get("n_hi", 14))
    tol = float(params.get("tol", 0.05))
    verdict = check_theorem_vminus(
        m, phi, xi_const, c, range(n_lo, n_hi + 1), tol,
        max_period=int(params.get("max_period", 8)), seed=seed,
    )
    report = verdict.to_json_dict()
    rows = [(n, int(ex), mv, rv) for n, ex, mv, rv in verdict.report.series]
    code = 0 if (verdict.holds and math.isfinite(verdict.lower_bound)) else 2
    return code, report, rows, ["n", "exact", "m_Dn", "rate"]


def _run_perturb_demo(m, phi, params, seed, threads):
    pert = observable_from_config(params.get("perturbation", {"kind": "coordinate"}))
    k_max = int(params.get("k_max", 4))
    eta = float(params.get("eta", 0.01))
    eps = float(params.get("eps", 1e-3))
    attempts = []
    for k in range(1, k_max + 1):
        phi_k = combine_pl(phi, pert, 1.0 / k)
        try:
            res = run_irregular_pipeline(
                m, phi_k, eps=eps, eta=eta, xi=params.get("xi", 0.5),
                L_target=int(params.get("L_target", 16)), n_check=1, seed=seed, threads=threads,
            )
        except (ConstructionImpossible, ParameterError) as exc:
            attempts.append({"k": k, "activated": False, "reason": str(exc)})
            continue
        attempts.append(
            {
                "k": k,
                "activated": True,
                "irregular": res.report.irregular,
                "alpha": res.library.alpha,
                "beta": res.library.beta,
                "gap_reported": res.report.gap_reported,
            }
        )
        report = {"base_observable": phi.label, "perturbation": pert.label, "attempts": attempts}
        return (0 if res.report.irregular else 2), report, None, None
    report = {"base_observable": phi.label, "perturbation": pert.label, "attempts": attempts}
    return 2, report, None, None


_HANDLERS = {
    "classes": _run_classes,
    "trace": _run_trace,
    "modulus": _run_modulus,
    "entropy": _run_entropy,
    "irregular": _run_irregular,
    "levelset": _run_levelset,
    "rate": _run_rate,
    "perturb-demo": _run_perturb_demo,
}


def run(subcommand, config, out_dir) -> int:
    """Execute one subcommand; writes report.json / series.csv / meta.json."""
    violations = validate(config)
    if violations:
        sys.stderr.write("invalid config:\n")
        for v in violations:
            sys.stderr.write(f"  {v['field']}: {v['message']}\n")
        return 1
    m = map_from_config(config.get("map", {}))
    phi = (
        observable_from_config(config["observable"])
        if "observable" in config
        else coordinate()
    )
    seed = int(config.get("seed", 0))
    threads = int(config.get("threads", 1))
    params = config.get(subcommand, {})
    code, report, rows, header = _HANDLERS[subcommand](m, phi, params, seed, threads)
    resolved = dict(config)
    resolved["subcommand"] = subcommand
    resolved.pop("threads", None)  # execution knob; must not break byte-reproducibility
    report_full = {"config": resolved, "report": report, "exit_code": code}
    os.makedirs(out_dir, exist_ok=True)
    dump_json(os.path.join(out_dir, "report.json"), report_full)
    if rows is not None:
        write_csv(os.path.join(out_dir, "series.csv"), header, rows)
    dump_json(
        os.path.join(out_dir, "meta.json"),
        {"tool": "pldyn", "version": __version__, "threads": threads, "created_unix": time.time()},
    )
    return code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="pldyn", description=__doc__)
    ap.add_argument("subcommand", choices=SUBCOMMANDS + ("validate",))
    ap.add_argument("--config", required=True, help="path to the JSON run config")
    ap.add_argument("--seed", type=int, default=None, help="override config seed")
    ap.add_argument("--threads", type=int, default=None, help="cap worker threads")
    ap.add_argument("--out", default=".", help="artifact directory")
    args = ap.parse_args(argv)
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"cannot read config {args.config}: {exc}\n")
        return 1
    if args.seed is not None:
        config["seed"] = args.seed
    if args.threads is not None:
        config["threads"] = args.threads
    if args.subcommand == "validate":
        violations = validate(config)
        for v in violations:
            print(f"{v['field']}: {v['message']}")
        return 0 if not violations else 1
    if config.get("subcommand") not in (None, args.subcommand):
        sys.stderr.write(
            f"config names subcommand {config.get('subcommand')!r}, CLI got {args.subcommand!r}\n"
        )
        return 1
    try:
        return run(args.subcommand, config, args.out)
    except ToolkitError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
