"""Command-line front end.

    robustrisk solve --seed 1 --set form=ball --set phi1="cvar(0.975)" \\
        --set phi2="polynomial(3)" --set model="pareto_neg(alpha=2)" --set radius=0.01

Every run writes ``<command>.csv`` (or one CSV per table) and ``manifest.json``
into ``--out``; experiments also render PNG figures next to their CSV.
Exit codes: 0 success, 1 invalid configuration, 2 non-finite robust risk.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .config import RunConfig, load_config, validate, _phi1_of
from .divergences import get_divergence
from .elicitation import default_p_seq, elicit_composite
from .errors import NonFiniteError, RobustRiskError
from .experiments import (
    HedgingConfig,
    NewsvendorConfig,
    Table,
    divergence_comparison,
    hedging_study,
    newsvendor_closed_form,
    newsvendor_robust_curve,
    toy_pareto_cvar,
)
from .finiteness import DIVERGENCE_ROWS, NOMINAL_COLUMNS, classify
from .models import get_model, importance_sample, sample
from .risk import exact_oce, get_risk, nominal_oce
from .solver import RobustProblem, solve


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    return [int(float(v)) for v in str(text).split(",") if v.strip()]


def _param_key(params, *names, default=None):
    for name in names:
        if name in params:
            return params[name]
    return default


# ------------------------------------------------------------------ commands


def _cmd_evaluate(cfg):
    p = cfg.params
    spec, model = get_risk(p["risk"]), get_model(p["model"])
    table = Table(("risk", "model", "method", "n", "value"))
    if "n" in p:
        n = int(float(p["n"]))
        table.add(spec.label, p["model"], "sample", n, nominal_oce(spec, sample(model, n, cfg.seed)))
    else:
        table.add(spec.label, p["model"], "quadrature", 0, exact_oce(spec, model))
    return {"evaluate": table}


def _problem(p, radius=None):
    phi1 = _phi1_of(_param_key(p, "phi1", "risk"))
    phi2 = get_divergence(p.get("phi2", "kl"))
    phi3 = get_divergence(p["phi3"]) if "phi3" in p else None
    return RobustProblem(p.get("form", "ball"), phi1, phi2, phi3, radius)


def _cmd_solve(cfg):
    p = cfg.params
    model = get_model(p["model"])
    n = int(float(p.get("n", 1000)))
    if "proposal" in p:
        data = importance_sample(model, get_model(p["proposal"]), n, cfg.seed)
    else:
        data = sample(model, n, cfg.seed)
    form = p.get("form", "ball").replace("_", "-")
    needs_r = form in ("ball", "globalized", "shortfall-ball")
    radii = _floats(p.get("radius", "0.1")) if needs_r else [None]
    table = Table(("form", "phi1", "phi2", "radius", "n", "value", "lambda", "theta", "branch",
                   "iterations", "gap"))
    for r in radii:
        prob = _problem(p, r)
        sol = solve(prob, data)
        table.add(prob.form, prob.phi1.label, prob.phi2.label,
                  math.nan if r is None else r, n, sol.value,
                  math.nan if sol.lam is None else sol.lam,
                  " ".join("%.17g" % v for v in np.atleast_1d(sol.theta)), sol.branch,
                  sol.iterations, sol.certified_gap)
    return {"solve": table}


def _cmd_classify(cfg):
    p = cfg.params
    which = p.get("risk", "all")
    out = {}
    for risk in (("cvar", "entropic") if which == "all" else (which,)):
        table = Table(("divergence",) + NOMINAL_COLUMNS)
        for row in DIVERGENCE_ROWS:
            table.add(row, *(classify(risk, row, col).symbol for col in NOMINAL_COLUMNS))
        out[f"classify_{risk}"] = table
    return out


def _cmd_elicit(cfg):
    p = cfg.params
    form = p.get("form", "penalty")
    prob = _problem(dict(p, form=form))
    xs = _floats(p.get("x", "-2,-1,-0.5,0.5,1"))
    ps = np.asarray(_floats(p["p_seq"])) if "p_seq" in p else default_p_seq()
    table = Table(("x", "recovered", "last_ratio", "p_min"))
    for x in xs:
        res = elicit_composite(prob, x, ps)
        table.add(x, res.extrapolated, float(res.ratios[-1]), float(ps[-1]))
    return {"elicit": table}


def _cmd_experiment(cfg):
    p, seed, target = cfg.params, cfg.seed, cfg.target
    if target == "toy":
        kw = {}
        if "radii" in p:
            kw["radii"] = _floats(p["radii"])
        table = toy_pareto_cvar(N=int(float(p.get("n", 1000))), seed=seed,
                                phi2=p.get("phi2", "polynomial(3)"), **kw)
        return {"toy": table}
    if target == "compare":
        sizes = _ints(p["sizes"]) if "sizes" in p else tuple(range(500, 6001, 500))
        r = float(p.get("radius", 0.02))
        plain = divergence_comparison(sizes, r, seed, use_importance=False)
        weighted = divergence_comparison(sizes, r, seed, use_importance=True)
        return {"compare": plain, "compare_importance": weighted}
    if target == "hedging":
        kw = {k: float(p[k]) for k in ("mu_S", "sigma_S", "r_f", "T", "S0", "K", "k0", "k_prop",
                                         "alpha", "radius") if k in p}
        if "n_grid" in p:
            kw["n_grid"] = tuple(_ints(p["n_grid"]))
        if "paths" in p:
            kw["paths"] = int(float(p["paths"]))
        return {"hedging": hedging_study(HedgingConfig(seed=seed, **kw))}
    if target == "newsvendor":
        kw = {k: float(p[k]) for k in ("v", "c", "s", "l", "alpha") if k in p}
        if "demand" in p:
            kw["demand"] = p["demand"]
        if "radius_grid" in p:
            kw["radius_grid"] = tuple(_floats(p["radius_grid"]))
        if "n_samples" in p:
            kw["n_samples"] = int(float(p["n_samples"]))
        ncfg = NewsvendorConfig(seed=seed, **kw)
        table = newsvendor_robust_curve(ncfg)
        table.meta["closed_form"] = newsvendor_closed_form(ncfg)
        return {"newsvendor": table}
    raise ValueError(f"unknown experiment {target!r}")


_DISPATCH = {"evaluate": _cmd_evaluate, "solve": _cmd_solve, "classify": _cmd_classify,
             "elicit": _cmd_elicit, "experiment": _cmd_experiment}


def _plot_kind(name):
    return {"toy": "toy", "compare": "compare", "compare_importance": "compare",
            "hedging": "hedging", "newsvendor": "newsvendor"}.get(name)


def run(config, stderr=None):
    """Execute ``config``; returns the process exit status."""
    stderr = stderr or sys.stderr
    diags = validate(config)
    for d in diags:
        print(d, file=stderr)
    if any(d.level == "error" for d in diags):
        return 1
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            tables = _DISPATCH[config.command](config)
    except NonFiniteError as exc:
        print(f"non-finite robust risk: {exc}. The finiteness integral of the dual "
              "diverges for every dual point; pick a phi2 whose conjugate grows slower "
              "along the nominal tail.", file=stderr)
        return 2
    except (RobustRiskError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    os.makedirs(config.output_path, exist_ok=True)
    files = []
    for name, table in tables.items():
        path = os.path.join(config.output_path, f"{name}.csv")
        table.write_csv(path)
        files.append(path)
        kind = _plot_kind(name) if config.command == "experiment" else None
        if kind is not None:
            from .plotting import plot_table

            files.append(plot_table(table, os.path.join(config.output_path, f"{name}.png"),
                                    kind, title=name.replace("_", " ")))
    manifest = {"version": __version__, "config": config.as_dict(),
                "outputs": [os.path.basename(f) for f in files],
                "meta": {k: _jsonable(t.meta) for k, t in tables.items()}}
    with open(os.path.join(config.output_path, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _jsonable(meta):
    out = {}
    for k, v in meta.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        out[k] = v if isinstance(v, (int, float, str, bool, type(None))) else str(v)
    return out


def build_parser():
    ap = argparse.ArgumentParser(prog="robustrisk", description="Divergence-robust risk measures")
    ap.add_argument("--version", action="version", version=f"robustrisk {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("evaluate", "solve", "classify", "elicit", "experiment"):
        sp = sub.add_parser(name)
        if name == "experiment":
            sp.add_argument("target", choices=("toy", "compare", "hedging", "newsvendor"))
        sp.add_argument("--config", help="key = value file; [section] headers allowed")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; runs are single-threaded")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
        sp.add_argument("--check", action="store_true", help="validate only")
    return ap


def config_from_args(args):
    params = load_config(args.config) if args.config else {}
    for item in args.set:
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        params[key.strip()] = value.strip()
    # keys may be given as "<command>.key"; strip the command prefix
    prefix = args.command + "."
    flat = {}
    for k, v in params.items():
        flat[k[len(prefix):] if k.startswith(prefix) else k] = v
    seed = args.seed if args.seed is not None else (
        int(flat.pop("seed")) if "seed" in flat else None)
    flat.pop("seed", None)
    return RunConfig(args.command, getattr(args, "target", None), flat, seed, args.out,
                     args.threads)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.check:
        diags = validate(cfg)
        for d in diags:
            print(d)
        return 1 if any(d.level == "error" for d in diags) else 0
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
