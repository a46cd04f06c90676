"""Guillemin potential u0 = sum_i l_i log l_i on P and its Legendre dual phi0.

The inversion x = Du0(y) is done by Newton's method in the slack
coordinates of a vertex of P: near the vertex p (and the facets through
it) those slacks are the tiny quantities, and parametrizing by them keeps
full relative precision even when l_i(y) is far below machine epsilon
relative to |y|.  This matters for |x| of a few tens, where l_i ~ e^{-|x|}.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm, qmc

from . import exact
from .polytope import DualPolytope, support_function

FRACTION_TO_BOUNDARY = 0.5


class DomainError(ValueError):
    """Point is not in the open polytope."""


class LegendreError(RuntimeError):
    pass


@dataclass
class _Chart:
    """Slack chart at a vertex: y = anchor + basis @ sigma."""

    anchor: np.ndarray
    basis: np.ndarray
    slack_map: np.ndarray  # (d, n): l = base + slack_map @ sigma
    base: np.ndarray  # l_j(anchor), exactly zero on the chart facets
    facets: tuple[int, ...]


class GuilleminPotential:
    def __init__(self, p: DualPolytope, newton_tol: float = 1e-12, max_iter: int = 500):
        self.polytope = p
        self.newton_tol = newton_tol
        self.max_iter = max_iter
        self.n = p.dim
        self.d = len(p.normals)
        self.normals = p.normal_array
        subsets, dets = [], []
        for idx in combinations(range(self.d), self.n):
            dd = int(exact.det([p.normals[i] for i in idx])) ** 2
            if dd:
                subsets.append(idx)
                dets.append(dd)
        self._cb_subsets = np.array(subsets)
        self._cb_det2 = np.array(dets, dtype=float)
        self._charts = [self._make_chart(k) for k in range(len(p.vertices))]

    def _make_chart(self, k: int) -> _Chart:
        p = self.polytope
        vertex = p.vertices[k]
        facets = None
        for idx in combinations(p.incidence[k], self.n):
            if exact.det([p.normals[i] for i in idx]) != 0:
                facets = idx
                break
        assert facets is not None, "vertex without n independent facets"
        inv = exact.inverse([p.normals[i] for i in facets])
        slack_map = [[exact.dot(nrm, col) for col in exact.transpose(inv)] for nrm in p.normals]
        base = [float(s) for s in p.slack(vertex)]
        for row, i in enumerate(facets):
            base[i] = 0.0
            slack_map[i] = [Fraction(int(j == row)) for j in range(self.n)]
        return _Chart(
            anchor=np.array([float(c) for c in vertex]),
            basis=np.array([[float(c) for c in r] for r in inv]),
            slack_map=np.array([[float(c) for c in r] for r in slack_map]),
            base=np.array(base),
            facets=facets,
        )

    # -- u0 and its derivatives ---------------------------------------------

    def slacks(self, y) -> np.ndarray:
        return np.asarray(y, dtype=float) @ self.normals.T + 1.0

    def _checked_slacks(self, y) -> np.ndarray:
        l = self.slacks(y)
        if np.any(l <= 0):
            raise DomainError(f"point {np.asarray(y).tolist()} is not interior to P")
        return l

    def u0_eval(self, y) -> tuple[float, np.ndarray, np.ndarray]:
        l = self._checked_slacks(y)
        value = float(np.sum(l * np.log(l)))
        grad = self.normals.T @ (1.0 + np.log(l))
        hess = (self.normals.T / l) @ self.normals
        return value, grad, hess

    def det_hess_u0(self, y) -> float:
        """det D^2 u0 by the Cauchy-Binet sum over n-subsets of facets."""
        return float(np.exp(self.log_det_hess_from_slacks(self._checked_slacks(y))))

    def log_det_hess_from_slacks(self, l) -> np.ndarray | float:
        """log of sum_I det(n_I)^2 / prod_{i in I} l_i, evaluated stably."""
        logl = np.log(np.asarray(l, dtype=float))
        terms = np.log(self._cb_det2) - logl[..., self._cb_subsets].sum(axis=-1)
        out = logsumexp(terms, axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    # -- Legendre transform -------------------------------------------------

    def legendre_phi0(self, x) -> tuple[float, np.ndarray]:
        """phi0(x) and the moment image y = D phi0(x) in the open polytope."""
        values, ys, _ = self.legendre_batch(np.atleast_2d(np.asarray(x, dtype=float)))
        return float(values[0]), ys[0]

    def legendre_batch(self, xs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized inversion for points of shape (m, n).

        Returns (phi0 values, moment images y, slacks l_i(y)).
        """
        xs = np.asarray(xs, dtype=float).reshape(-1, self.n)
        anchors = np.argmax(xs @ self.polytope.vertex_array.T, axis=1)
        values = np.empty(len(xs))
        ys = np.empty_like(xs)
        ls = np.empty((len(xs), self.d))
        for k in np.unique(anchors):
            mask = anchors == k
            values[mask], ys[mask], ls[mask] = self._invert_in_chart(self._charts[k], xs[mask])
        return values, ys, ls

    def _invert_in_chart(self, chart: _Chart, xs: np.ndarray):
        m = len(xs)
        bx = xs @ chart.basis  # B^T x, row-wise
        M, base = chart.slack_map, chart.base

        def objective(sig, bxa):
            l = base + sig @ M.T
            with np.errstate(divide="ignore", invalid="ignore"):
                f = np.sum(l * np.log(l), axis=1) - np.sum(bxa * sig, axis=1)
            return np.where((l > 0).all(axis=1), f, np.inf)

        # Start from y = 0 (all slacks 1), or from the asymptotic guess that
        # freezes the off-chart slacks at their vertex values, if better.
        sigma = np.ones((m, self.n))
        off = np.ones(self.d, dtype=bool)
        off[list(chart.facets)] = False
        shift = (1.0 + np.log(base[off])) @ M[off] if off.any() else 0.0
        guess = np.exp(np.clip(bx - 1.0 - shift, -700.0, 0.0))
        better = objective(guess, bx) < objective(sigma, bx)
        sigma[better] = guess[better]
        active = np.ones(m, dtype=bool)

        for _ in range(self.max_iter):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            sig = sigma[idx]
            l = base + sig @ M.T
            g = (1.0 + np.log(l)) @ M - bx[idx]
            h = np.einsum("ji,mj,jk->mik", M, 1.0 / l, M)
            step = -np.linalg.solve(h, g[..., None])[..., 0]
            dec2 = -np.sum(g * step, axis=1)
            done = dec2 < self.newton_tol**2
            dl = step @ M.T
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(dl < 0, -FRACTION_TO_BOUNDARY * l / dl, np.inf)
            alpha = np.minimum(1.0, ratio.min(axis=1))
            f0 = objective(sig, bx[idx])
            for _ in range(60):
                trial = sig + alpha[:, None] * step
                ok = objective(trial, bx[idx]) <= f0 - 1e-4 * alpha * dec2
                # at rounding level the comparison is noise; accept
                ok |= alpha * dec2 < 1e-13 * (1.0 + np.abs(f0))
                if ok.all():
                    break
                alpha = np.where(ok, alpha, alpha / 2)
            sigma[idx] = np.where(done[:, None], sig, sig + alpha[:, None] * step)
            active[idx[done]] = False
        if active.any():
            raise LegendreError(f"Legendre inversion failed to converge for {active.sum()} point(s)")

        l = base + sigma @ M.T
        ys = chart.anchor + sigma @ chart.basis.T
        du0 = (1.0 + np.log(l)) @ self.normals
        # closed form sum(l - log l) - d, plus the first-order correction
        # <y, x - Du0(y)> that makes the value stationary in y
        values = np.sum(l - np.log(l), axis=1) - self.d + np.sum(ys * (xs - du0), axis=1)
        return values, ys, l

    def mass(self, tol: float = 1e-12) -> float:
        """int_{R^n} e^{-phi0} dx, computed on P after the change x = Du0(y).

        The pulled-back integrand e^{d - sum l} prod(l) det D^2 u0 is smooth
        up to the boundary of P.
        """
        from .integrals import integrate

        def integrand(y):
            l = y @ self.normals.T + 1.0
            return np.exp(self.d - l.sum(axis=1) + np.log(l).sum(axis=1) + self.log_det_hess_from_slacks(l))

        return integrate(self.polytope, integrand, tol)[0]

    # -- lemma scans --------------------------------------------------------

    def lemma_quantities(self, xs) -> tuple[np.ndarray, np.ndarray]:
        """|log det D^2 phi0 + phi0| and phi0 - v at each point of ``xs``."""
        values, _, l = self.legendre_batch(xs)
        log_det_phi0 = -self.log_det_hess_from_slacks(l)
        return np.abs(log_det_phi0 + values), values - support_function(self.polytope, xs)

    def lemma_scan(self, radii: Sequence[float], samples: int = 64) -> "ScanReport":
        radii = [float(r) for r in radii]
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly increasing")
        dirs = sphere_directions(self.n, samples)
        sup_defect, sup_gap, lo_gap, hi_gap = [], [], [], []
        for r in radii:
            defect, diff = self.lemma_quantities(r * dirs)
            sup_defect.append(float(defect.max()))
            sup_gap.append(float(np.abs(diff).max()))
            lo_gap.append(float(diff.min()))
            hi_gap.append(float(diff.max()))
        return ScanReport(radii, sup_defect, sup_gap, lo_gap, hi_gap)



def sphere_directions(n: int, count: int) -> np.ndarray:
    """Deterministic, well-spread unit vectors."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        theta = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    halton = qmc.Halton(d=n, scramble=False)
    halton.fast_forward(1)
    g = norm.ppf(halton.random(count))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass
class ScanReport:
    radii: list[float]
    sup_logdet_defect: list[float]
    sup_support_gap: list[float]
    min_phi0_minus_v: list[float] = field(default_factory=list)
    max_phi0_minus_v: list[float] = field(default_factory=list)

    @staticmethod
    def _running(values):
        return list(np.maximum.accumulate(values))

    @property
    def running_sup_logdet_defect(self) -> list[float]:
        return self._running(self.sup_logdet_defect)

    @property
    def running_sup_support_gap(self) -> list[float]:
        return self._running(self.sup_support_gap)

    def saturation_ratio(self) -> tuple[float, float]:
        """Sup at the largest radius over the sup across all radii."""
        return (
            self.sup_logdet_defect[-1] / max(self.sup_logdet_defect),
            self.sup_support_gap[-1] / max(self.sup_support_gap),
        )

    def relative_change(self, r_from: float, r_to: float) -> tuple[float, float]:
        i, j = self.radii.index(float(r_from)), self.radii.index(float(r_to))
        return (
            abs(self.sup_logdet_defect[j] - self.sup_logdet_defect[i]) / self.sup_logdet_defect[j],
            abs(self.sup_support_gap[j] - self.sup_support_gap[i]) / self.sup_support_gap[j],
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "sup_logdet_defect", "sup_support_gap"])
        for row in zip(self.radii, self.sup_logdet_defect, self.sup_support_gap):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "radii": self.radii,
            "sup_logdet_defect": self.sup_logdet_defect,
            "sup_support_gap": self.sup_support_gap,
            "min_phi0_minus_v": self.min_phi0_minus_v,
            "max_phi0_minus_v": self.max_phi0_minus_v,
            "saturation_ratio": list(self.saturation_ratio()),
        }
