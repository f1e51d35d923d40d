"""Grobman-Hartman linearization of random dynamical systems.

The heavy lifting lives in the compiled ``_core`` extension; this module decodes
its JSON reports into plain dictionaries.
"""

import json
import os

from ._core import (
    EXIT_CONFIG,
    EXIT_CONVERGENCE,
    EXIT_HYPOTHESIS,
    EXIT_PASS,
    ConfigError,
    ConvergenceFailure,
    Error,
    HypothesisViolation,
    TruncationError,
    contraction_factor,
    holder_c_max,
    holder_ratio,
    majorant_factor,
    max_admissible_c,
    series_B,
    series_tail,
)
from . import _core

__version__ = _core.version()

__all__ = [
    "EXIT_CONFIG",
    "EXIT_CONVERGENCE",
    "EXIT_HYPOTHESIS",
    "EXIT_PASS",
    "ConfigError",
    "ConvergenceFailure",
    "Error",
    "HypothesisViolation",
    "TruncationError",
    "components",
    "contraction_factor",
    "holder_c_max",
    "holder_ratio",
    "majorant_factor",
    "max_admissible_c",
    "payload",
    "run",
    "series_B",
    "series_tail",
    "validate",
    "version",
]


def _encode(config):
    """Accepts a dict, a JSON string or a path to a JSON file."""
    if isinstance(config, dict):
        return json.dumps(config)
    if isinstance(config, (str, os.PathLike)) and os.path.isfile(config):
        with open(config, encoding="utf-8") as fh:
            return fh.read()
    if isinstance(config, str):
        return config
    raise TypeError(f"unsupported config type {type(config).__name__}")


def _decode(result):
    text, code = result
    return json.loads(text), code


def version():
    return _core.version()


def run(config, out=None):
    """Runs one experiment. Returns (report, exit_code)."""
    return _decode(_core.run_json(_encode(config), os.fspath(out) if out else ""))


def validate(config):
    """Checks the hypotheses only. Returns (report, exit_code)."""
    return _decode(_core.validate_json(_encode(config)))


def components(doc, out=None):
    """Runs every entry of doc["components"] independently. Returns (report, exit_code)."""
    return _decode(_core.components_json(_encode(doc), os.fspath(out) if out else ""))


def payload(report):
    """Canonical serialization of a report without its timings."""
    return _core.report_payload_json(json.dumps(report))
