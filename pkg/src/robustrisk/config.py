"""Run configuration: flat ``section.key = value`` files and dry-run validation."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Optional

from ._specstr import parse_call
from .divergences import get_divergence
from .errors import RobustRiskError
from .finiteness import INFINITE, classify
from .models import get_model
from .risk import get_risk

COMMANDS = ("evaluate", "solve", "classify", "elicit", "experiment")
EXPERIMENTS = ("toy", "compare", "hedging", "newsvendor")
STOCHASTIC = ("evaluate", "solve", "experiment")


@dataclass
class RunConfig:
    command: str
    target: Optional[str] = None
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None
    output_path: str = "."
    threads: int = 1

    def get(self, key, default=None):
        return self.params.get(key, default)

    def as_dict(self):
        return {"command": self.command, "target": self.target, "params": dict(self.params),
                "seed": self.seed, "output_path": self.output_path, "threads": self.threads}


def parse_text(text):
    """Flatten an INI-style text to ``{"section.key": "value"}``.

    Keys before any ``[section]`` header stay unprefixed, so both
    ``solve.radius = 0.1`` and ``[solve]`` / ``radius = 0.1`` work.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    parser.read_string("[__top__]\n" + text)
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section, raw=True):
            flat[key if section == "__top__" else f"{section}.{key}"] = value.strip()
    return flat


def load_config(path):
    with open(path) as fh:
        return parse_text(fh.read())


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" or "warning"
    message: str

    def __str__(self):
        return f"{self.level}: {self.message}"


def _check(diags, label, fn, value):
    if value is None:
        return None
    try:
        return fn(value)
    except (RobustRiskError, ValueError, KeyError, TypeError) as exc:
        diags.append(Diagnostic("error", f"{label} {value!r} does not resolve: {exc}"))
        return None


_RULE_COLUMNS = {"gaussian": "gaussian", "weibull_neg": "weibull", "weibull": "weibull",
                 "lognormal": "lognormal", "pareto_neg": "pareto", "pareto": "pareto",
                 "student_t": "student_t"}


def predicted_finiteness(phi1, phi2, model):
    """Rule-table verdict for a solve triple, or None when the tables do not cover it."""
    risk = {"cvar-indicator": "cvar", "kl": "entropic"}.get(phi1.name)
    if risk is None or model.family not in _RULE_COLUMNS:
        return None
    if phi2.name == "kl":
        fam, params = "kl", {}
    elif phi2.name == "polynomial":
        fam, params = f"polynomial({phi2.params['p']:g})", {"p": phi2.params["p"]}
    else:
        return None
    mp = model.params
    params.update({"k": mp.get("k"), "lambda": mp.get("lambda"), "alpha0": mp.get("alpha"),
                   "nu": mp.get("nu")})
    if risk == "cvar":
        params["alpha"] = phi1.params["alpha"]
    else:
        params["gamma"] = phi1.params.get("gamma", 1.0)
    params = {k: v for k, v in params.items() if v is not None}
    return classify(risk, fam, _RULE_COLUMNS[model.family], params)


def validate(config):
    """Resolve every id in ``config`` without running anything."""
    diags = []
    cmd = config.command
    if cmd not in COMMANDS:
        return [Diagnostic("error", f"unknown command {cmd!r}")]
    if cmd == "experiment" and config.target not in EXPERIMENTS:
        diags.append(Diagnostic("error", f"unknown experiment {config.target!r}"))
    # evaluate without a sample size runs by quadrature and draws nothing
    sampled = cmd != "evaluate" or "n" in config.params
    if cmd in STOCHASTIC and sampled and config.seed is None:
        diags.append(Diagnostic("error", f"{cmd} needs a seed"))
    p = config.params
    if cmd == "evaluate":
        _check(diags, "risk", get_risk, p.get("risk"))
        _check(diags, "model", get_model, p.get("model"))
    if cmd in ("solve", "elicit"):
        if p.get("phi1") is None and p.get("risk") is None:
            diags.append(Diagnostic("error", "phi1 (or risk) is required"))
        phi1 = _check(diags, "divergence", _phi1_of, p.get("phi1") or p.get("risk"))
        phi2 = _check(diags, "divergence", get_divergence, p.get("phi2", "kl"))
        _check(diags, "divergence", get_divergence, p.get("phi3"))
        model = _check(diags, "model", get_model, p.get("model")) if cmd == "solve" else None
        if phi1 is not None and phi2 is not None and model is not None:
            verdict = predicted_finiteness(phi1, phi2, model)
            if verdict is not None and verdict.status == INFINITE:
                diags.append(Diagnostic(
                    "warning", f"predicted infinite ({verdict.rationale}); the finiteness "
                               "integral diverges on the nominal, so sample values grow with N"))
    if cmd == "classify":
        risk = p.get("risk", "all")
        if risk not in ("all", "cvar", "entropic"):
            diags.append(Diagnostic("error", f"classify supports cvar/entropic, got {risk!r}"))
    for key in ("radius", "n", "x"):
        if key in p:
            try:
                [float(v) for v in str(p[key]).split(",")]
            except ValueError:
                diags.append(Diagnostic("error", f"{key} must be numeric, got {p[key]!r}"))
    return diags


def _phi1_of(text):
    """phi1 given as a divergence id or as a risk id such as ``cvar(0.975)``."""
    name = parse_call(text)[0]
    if name in ("cvar", "entropic", "oce"):
        return get_risk(text).phi1
    return get_divergence(text)
