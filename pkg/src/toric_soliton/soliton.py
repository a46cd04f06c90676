"""Soliton vector: the minimizer c of F(s) = int_P e^{<s,y>} dy.

F is smooth, strictly convex and proper whenever the origin is interior to
P, so damped Newton from s = 0 converges globally.  The exact Futaki test
(barycenter == 0) is kept separate and never consults the float solver.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .integrals import exp_moment, volume
from .polytope import DualPolytope, barycenter

log = logging.getLogger(__name__)

ARMIJO_SLOPE = 1e-4
MAX_HALVINGS = 40


class SolverError(RuntimeError):
    pass


@dataclass
class SolitonVector:
    c: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    objective: list[float] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "c": [float(v) for v in self.c],
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def solve_soliton_vector(p: DualPolytope, tol: float = 1e-10, max_iter: int = 100) -> SolitonVector:
    """Damped Newton on F; stops when |grad F(c)| / vol(P) < tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    vol = float(volume(p))
    quad_tol = tol / 100
    c = np.zeros(p.dim)
    cur = exp_moment(p, c, quad_tol)
    history = [cur.value]
    for it in range(max_iter + 1):
        res = float(np.linalg.norm(cur.gradient)) / vol
        if res < tol:
            return SolitonVector(c, res, it, True, history)
        if it == max_iter:
            break
        try:
            step = -np.linalg.solve(cur.hessian, cur.gradient)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular Hessian of F; is P full-dimensional?") from exc
        slope = float(cur.gradient @ step)
        alpha = 1.0
        for _ in range(MAX_HALVINGS):
            trial = exp_moment(p, c + alpha * step, quad_tol)
            # once the predicted decrease is at rounding level, Armijo
            # comparisons are noise; take the full Newton step
            if abs(slope) <= 1e-13 * abs(cur.value):
                break
            if trial.value <= cur.value + ARMIJO_SLOPE * alpha * slope:
                break
            alpha /= 2
        else:
            log.warning("line search stagnated at iteration %d", it)
            return SolitonVector(c, res, it, False, history)
        c = c + alpha * step
        cur = trial
        history.append(cur.value)
        log.debug("newton %d: alpha=%g |grad|/vol=%.3e", it, alpha, np.linalg.norm(cur.gradient) / vol)
    return SolitonVector(c, float(np.linalg.norm(cur.gradient)) / vol, max_iter, False, history)


def futaki_vanishes(p: DualPolytope) -> bool:
    return all(b == 0 for b in barycenter(p))
