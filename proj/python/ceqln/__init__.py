"""Python bindings for the ceqln trajectory library.

Constraint sets, training configs and models are plain dicts in the same JSON
layout the command line tool reads and writes.
"""

import json

import numpy as np

from . import _core
from ._core import CeqlnError

__all__ = ["CeqlnError", "generate", "train", "adapt", "export_equations", "solve_qp", "appendix_residual"]


def _dump(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def _targets(targets):
    y = np.asarray(targets, dtype=float)
    return y.reshape(1, -1) if y.ndim == 1 else y


def generate(task, noise=0.0, seed=0):
    out = _core.generate(task, noise, seed)
    for key in ("training", "held_out", "config"):
        out[key] = json.loads(out[key])
    return out


def train(config, times, targets, constraints):
    out = _core.train(_dump(config), np.asarray(times, dtype=float), _targets(targets), _dump(constraints))
    out["model"] = json.loads(out["model"])
    return out


def adapt(model, times, targets, constraints):
    """Re-solves the model for each constraint set with the network frozen."""
    return _core.adapt(_dump(model), np.asarray(times, dtype=float), _targets(targets), _dump(constraints))


def export_equations(model, digits=4):
    return _core.export_equations(_dump(model), digits)


def solve_qp(P, q, A_eq=None, b_eq=None, A_ineq=None, lower=None, upper=None):
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float)
    A_ineq = np.zeros((0, n)) if A_ineq is None else np.asarray(A_ineq, dtype=float)
    m = A_ineq.shape[0]
    return _core.solve_qp(
        P,
        np.asarray(q, dtype=float),
        A_eq,
        np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float),
        A_ineq,
        np.full(m, -np.inf) if lower is None else np.asarray(lower, dtype=float),
        np.full(m, np.inf) if upper is None else np.asarray(upper, dtype=float),
    )


appendix_residual = _core.appendix_residual
