"""Parsing of ``name(arg, key=value)`` identifiers used in configs."""

from __future__ import annotations

import re

from .errors import ParamError

_CALL = re.compile(r"^\s*([A-Za-z_][\w\-]*)\s*(?:\((.*)\))?\s*$")


def _number(text):
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        return text


def parse_call(spec):
    """Split ``"gl-cvar(sigma=0.3, p=2, d=2)"`` into name, positional, keyword args."""
    m = _CALL.match(spec)
    if m is None:
        raise ParamError(f"cannot parse identifier {spec!r}")
    name = m.group(1).lower().replace("_", "-")
    args, kwargs = [], {}
    body = m.group(2)
    if body and body.strip():
        for part in body.split(","):
            if "=" in part:
                key, val = part.split("=", 1)
                kwargs[key.strip().lower()] = _number(val)
            else:
                if kwargs:
                    raise ParamError(f"positional argument after keyword in {spec!r}")
                args.append(_number(part))
    return name, args, kwargs


def bind(name, args, kwargs, names, defaults=None):
    """Bind positional/keyword arguments to ``names``; returns a dict of floats."""
    defaults = dict(defaults or {})
    if len(args) > len(names):
        raise ParamError(f"{name}: too many arguments")
    out = dict(zip(names, args))
    for key, val in kwargs.items():
        if key not in names:
            raise ParamError(f"{name}: unknown parameter {key!r}")
        if key in out:
            raise ParamError(f"{name}: parameter {key!r} given twice")
        out[key] = val
    for key in names:
        if key not in out:
            if key not in defaults:
                raise ParamError(f"{name}: missing parameter {key!r}")
            out[key] = defaults[key]
    for key, val in out.items():
        if isinstance(val, str):
            raise ParamError(f"{name}: parameter {key!r} must be numeric, got {val!r}")
    return {k: float(v) for k, v in out.items()}
