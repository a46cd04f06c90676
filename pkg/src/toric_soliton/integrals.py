"""Moments of the dual polytope.

Exact rational moments of degree <= 1, and the exponential moments

    F(s) = int_P exp(<s, y>) dy,   grad F,   hess F

by composite collapsed-coordinate Gauss-Legendre quadrature on the
triangulation of P.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product

import numpy as np

from .polytope import DualPolytope, simplex_volume

GAUSS_ORDER = 8
DEFAULT_TOL = 1e-10


class QuadratureWarning(RuntimeWarning):
    pass


@dataclass
class ExpMomentResult:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    est_error: float
    levels: int
    converged: bool = True


def volume(p: DualPolytope) -> Fraction:
    return sum((simplex_volume(s) for s in p.triangulation), Fraction(0))


def monomial_moment(p: DualPolytope, axis: int) -> Fraction:
    """Exact int_P y[axis] dy (``axis`` is zero-based)."""
    if not 0 <= axis < p.dim:
        raise IndexError(f"axis {axis} out of range for dimension {p.dim}")
    total = Fraction(0)
    for s in p.triangulation:
        total += simplex_volume(s) * sum(pt[axis] for pt in s) / len(s)
    return total


@lru_cache(maxsize=None)
def _collapsed_rule(n: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Conical product rule on {x >= 0, sum x <= 1}; weights sum to 1/n!."""
    g, w = np.polynomial.legendre.leggauss(order)
    g, w = (g + 1) / 2, w / 2
    pts, wts = [], []
    for idx in product(range(order), repeat=n):
        u = g[list(idx)]
        weight = np.prod(w[list(idx)])
        x = np.empty(n)
        rest = 1.0
        for k in range(n):
            x[k] = rest * u[k]
            if k < n - 1:
                weight *= (1 - u[k]) ** (n - 1 - k)
            rest *= 1 - u[k]
        pts.append(x)
        wts.append(weight)
    return np.array(pts), np.array(wts)


@lru_cache(maxsize=None)
def _kuhn_subdivision(n: int, k: int) -> np.ndarray:
    """k**n congruent simplices tiling the standard simplex.

    The staircase simplex {1 >= z_1 >= ... >= z_n >= 0} is a union of
    Freudenthal simplices of the k-grid; it maps affinely onto the standard
    simplex by x_i = z_i - z_{i+1} (with z_{n+1} = 0).
    Returns vertex coordinates of shape (k**n, n + 1, n).
    """
    out = []
    for corner in product(range(k), repeat=n):
        if any(corner[i] < corner[i + 1] for i in range(n - 1)):
            continue
        for perm in permutations(range(n)):
            z = [np.array(corner, dtype=float)]
            for axis in perm:
                nxt = z[-1].copy()
                nxt[axis] += 1
                z.append(nxt)
            z = np.array(z) / k
            c = z.mean(axis=0)
            if all(c[i] > c[i + 1] for i in range(n - 1)) and c[0] < 1 and c[-1] > 0:
                x = z - np.concatenate([z[:, 1:], np.zeros((n + 1, 1))], axis=1)
                out.append(x)
    subs = np.array(out)
    assert len(subs) == k**n
    return subs


@lru_cache(maxsize=None)
def _reference_rule(n: int, level: int, order: int = GAUSS_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule at dyadic level; returns barycentric points and weights."""
    base_pts, base_wts = _collapsed_rule(n, order)
    subs = _kuhn_subdivision(n, 2**level)
    # points inside each sub-simplex, in standard-simplex coordinates
    x = subs[:, :1, :] + np.einsum("mi,sij->smj", base_pts, subs[:, 1:, :] - subs[:, :1, :])
    x = x.reshape(-1, n)
    lam = np.concatenate([1 - x.sum(axis=1, keepdims=True), x], axis=1)
    wts = np.tile(base_wts, len(subs)) / len(subs)
    return lam, wts


def _moments_at_level(p: DualPolytope, s: np.ndarray, level: int):
    n = p.dim
    lam, wts = _reference_rule(n, level)
    simplices = p.simplex_arrays
    scale = np.array([float(simplex_volume(t)) for t in p.triangulation]) * math.factorial(n)
    value = 0.0
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    # fixed summation order over simplices keeps results bit-reproducible
    for verts, sc in zip(simplices, scale):
        y = lam @ verts
        f = np.exp(y @ s) * wts * sc
        value += f.sum()
        grad += f @ y
        hess += (y * f[:, None]).T @ y
    return value, grad, (hess + hess.T) / 2


def exp_moment(p: DualPolytope, s, tol: float = DEFAULT_TOL, max_level: int | None = None) -> ExpMomentResult:
    """int_P e^{<s,y>} dy with its gradient and Hessian in ``s``.

    Refines the dyadic subdivision until two successive levels agree to
    ``tol`` (relative; gradient and Hessian are measured against
    ``value * rho`` and ``value * rho**2`` with rho the largest vertex norm).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    s = np.asarray(s, dtype=float)
    if max_level is None:
        max_level = {1: 12, 2: 7, 3: 4}.get(p.dim, 2)
    rho = max(1.0, float(np.linalg.norm(p.vertex_array, axis=1).max()))
    prev = _moments_at_level(p, s, 0)
    err = math.inf
    for level in range(1, max_level + 1):
        cur = _moments_at_level(p, s, level)
        v = abs(cur[0])
        err = max(
            abs(cur[0] - prev[0]) / v,
            np.abs(cur[1] - prev[1]).max() / (v * rho),
            np.abs(cur[2] - prev[2]).max() / (v * rho**2),
        )
        prev = cur
        if err < tol:
            return ExpMomentResult(cur[0], cur[1], cur[2], err, level)
    warnings.warn(f"exp_moment did not reach tol={tol:g} (last difference {err:.3g})", QuadratureWarning)
    return ExpMomentResult(prev[0], prev[1], prev[2], err, max_level, converged=False)


def integrate(p: DualPolytope, f, tol: float = DEFAULT_TOL, max_level: int | None = None) -> tuple[float, float]:
    """int_P f(y) dy for a smooth vectorized ``f`` of points (m, n).

    Same composite rule and stopping test as :func:`exp_moment`; returns
    ``(value, last relative difference)``.
    """
    n = p.dim
    if max_level is None:
        max_level = {1: 12, 2: 7, 3: 4}.get(n, 2)
    scale = np.array([float(simplex_volume(t)) for t in p.triangulation]) * math.factorial(n)

    def at_level(level):
        lam, wts = _reference_rule(n, level)
        total = 0.0
        for verts, sc in zip(p.simplex_arrays, scale):
            total += (f(lam @ verts) * wts).sum() * sc
        return total

    prev = at_level(0)
    err = math.inf
    for level in range(1, max_level + 1):
        cur = at_level(level)
        err = abs(cur - prev) / abs(cur)
        prev = cur
        if err < tol:
            return cur, err
    warnings.warn(f"integrate did not reach tol={tol:g} (last difference {err:.3g})", QuadratureWarning)
    return prev, err
