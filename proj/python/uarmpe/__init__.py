"""Parfactor models and MPE inference with uniform assignment reduction."""

import json

from ._uarmpe import (
    BudgetExceeded,
    ConsistencyFailure,
    Error,
    FixpointBudgetExceeded,
    MemoryBudgetExceeded,
    Model,
    ParseError,
    UnsupportedShape,
    ValidationError,
    gen_random,
    shatter,
)
from . import _uarmpe

__all__ = [
    "BudgetExceeded",
    "ConsistencyFailure",
    "Error",
    "FixpointBudgetExceeded",
    "MemoryBudgetExceeded",
    "Model",
    "ParseError",
    "UnsupportedShape",
    "ValidationError",
    "conditional_solve",
    "gen_random",
    "log_weight",
    "shatter",
    "simplify",
    "solve",
]


def simplify(model):
    """Shatter and reduce. Returns (reduced model, reduction map dict, trace text)."""
    reduced, map_json, trace = _uarmpe._simplify(model)
    return reduced, json.loads(map_json), trace


def solve(model, engine="ve", use_uar=True, condition=None, auto_condition=True):
    """MPE of `model` as a dict with assignment, log_weight, engine, stats and lifted blocks."""
    return json.loads(_uarmpe._solve(model, engine, use_uar, condition, auto_condition))


def conditional_solve(model, target, engine="ve"):
    return json.loads(_uarmpe._conditional_solve(model, target, engine))


def log_weight(model, assignment):
    """Log weight of a full assignment given as {"p(a)": value, ...}."""
    return _uarmpe._weight(model, json.dumps({"assignment": assignment}))
