"""Parser for the ``name{key=value,...}`` strings used in config files."""

import re

from .errors import ConfigError

_SPEC_RE = re.compile(r"^\s*([a-z_][a-z0-9_]*)\s*(?:\{(.*)\})?\s*$")


def parse_spec(text):
    """Split ``"binomial{n=10}"`` into ``("binomial", {"n": 10.0})``."""
    m = _SPEC_RE.match(text)
    if m is None:
        raise ConfigError(f"malformed spec string {text!r}")
    name, body = m.group(1), m.group(2)
    params = {}
    if body is not None and body.strip():
        for item in body.split(","):
            if "=" not in item:
                raise ConfigError(f"malformed parameter {item!r} in {text!r}")
            key, value = (s.strip() for s in item.split("=", 1))
            try:
                params[key] = float(value)
            except ValueError:
                raise ConfigError(f"parameter {key!r} in {text!r} is not a number") from None
    return name, params


def format_spec(name, params):
    if not params:
        return name
    body = ",".join(f"{k}={v:g}" for k, v in params.items())
    return f"{name}{{{body}}}"
