"""Independent reference computations used to derive frozen test values.

Nothing here imports the package's numerical code: polytopes come in as
plain vertex lists, triangulations come from scipy's Delaunay, and integrals
use closed-form divided differences of the exponential.
"""
from __future__ import annotations

import math

import mpmath as mp
import numpy as np
from scipy.spatial import Delaunay, HalfspaceIntersection

# dual vertices worked out by hand for the polytopes in data/
TRIANGLE_DUAL = [(-1, -1), (-1, 3), (1, -1)]
RECTANGLE_DUAL = [(-0.5, 0), (0.5, 0), (0, -1), (0, 1)]
CP2_DUAL = [(-1, -1), (-1, 2), (2, -1)]


def float_dual_vertices(normals) -> np.ndarray:
    """Vertices of {y : <y, n> + 1 >= 0} from scipy's half-space intersection."""
    normals = np.asarray(normals, dtype=float)
    # scipy wants A y + b <= 0
    halfspaces = np.hstack([-normals, -np.ones((len(normals), 1))])
    hs = HalfspaceIntersection(halfspaces, np.zeros(normals.shape[1]))
    pts = np.unique(np.round(hs.intersections, 12), axis=0)
    return pts


def triangles(vertices) -> list[np.ndarray]:
    v = np.asarray(vertices, dtype=float)
    return [v[s] for s in Delaunay(v).simplices]


def _exp_dd2(a: np.ndarray) -> np.ndarray:
    """exp[a0, a1, a2] (second divided difference), stable, vectorised on axis 0."""
    a = np.sort(a, axis=0)
    lo, mid, hi = a
    def dd1(x, y):
        d = y - x
        small = np.abs(d) < 1e-12
        safe = np.where(small, 1.0, d)
        return np.where(small, np.exp(x), np.exp(x) * np.expm1(d) / safe)
    span = hi - lo
    small = span < 1e-6
    safe = np.where(small, 1.0, span)
    out = (dd1(mid, hi) - dd1(lo, mid)) / safe
    return np.where(small, 0.5 * np.exp((lo + mid + hi) / 3), out)


def exp_integral_2d(vertices, c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    """int_P e^{<c, y>} dy for a planar polytope, vectorised over c."""
    total = 0.0
    for tri in triangles(vertices):
        area = 0.5 * abs(np.linalg.det(tri[1:] - tri[0]))
        a = np.stack([c1 * x + c2 * y for x, y in tri])
        total = total + 2 * area * _exp_dd2(a)
    return total


def mp_moments(vertices, c) -> tuple[mp.mpf, mp.mpf, mp.mpf]:
    """(int_P e^{<c,y>}, int_P y1 e^{<c,y>}, int_P y2 e^{<c,y>}) in mpmath.

    Each triangle is parametrised as v0 + u e1 + w e2 with the labelling that
    maximises |<c, e2>|; the w-integral is done in closed form and the
    u-integral by mpmath quadrature.
    """
    c = [mp.mpf(c[0]), mp.mpf(c[1])]
    out = [mp.mpf(0)] * 3
    for tri in triangles(vertices):
        pts = [[mp.mpf(float(x)) for x in p] for p in tri]
        best = None
        for k in range(3):
            v0, v1, v2 = pts[k], pts[(k + 1) % 3], pts[(k + 2) % 3]
            e2 = [v2[0] - v0[0], v2[1] - v0[1]]
            beta = c[0] * e2[0] + c[1] * e2[1]
            if best is None or abs(beta) > abs(best[0]):
                best = (beta, v0, v1, v2)
        beta, v0, v1, v2 = best
        e1 = [v1[0] - v0[0], v1[1] - v0[1]]
        e2 = [v2[0] - v0[0], v2[1] - v0[1]]
        jac = abs(e1[0] * e2[1] - e1[1] * e2[0])

        def inner(u, which):
            base = [v0[0] + u * e1[0], v0[1] + u * e1[1]]
            alpha = c[0] * base[0] + c[1] * base[1]
            length = 1 - u
            if abs(beta) < mp.mpf(10) ** (-mp.mp.dps // 2):
                i0 = mp.exp(alpha) * length
                i1 = mp.exp(alpha) * length**2 / 2
            else:
                eb = mp.exp(beta * length)
                i0 = mp.exp(alpha) * (eb - 1) / beta
                i1 = mp.exp(alpha) * (eb * (beta * length - 1) + 1) / beta**2
            if which == 0:
                return i0
            return base[which - 1] * i0 + e2[which - 1] * i1

        for which in range(3):
            out[which] += jac * mp.quad(lambda u: inner(u, which), [0, 1])
    return tuple(out)


def grid_search_soliton(vertices, lo=-2.0, hi=2.0, step=1e-3) -> np.ndarray:
    """Minimiser of F(c) = int_P e^{<c,y>} dy over a dense grid."""
    axis = np.arange(round((hi - lo) / step) + 1) * step + lo
    best, arg = math.inf, None
    for i0 in range(0, len(axis), 200):
        c1, c2 = np.meshgrid(axis[i0:i0 + 200], axis, indexing="ij")
        f = exp_integral_2d(vertices, c1, c2)
        k = np.unravel_index(np.argmin(f), f.shape)
        if f[k] < best:
            best, arg = f[k], np.array([c1[k], c2[k]])
    return arg


def refine_soliton(vertices, guess, dps: int = 30) -> np.ndarray:
    """Solve grad F = 0 from ``guess`` in high precision."""
    with mp.workdps(dps):
        eqs = lambda x, y: list(mp_moments(vertices, (x, y))[1:])  # noqa: E731
        root = mp.findroot(eqs, (mp.mpf(guess[0]), mp.mpf(guess[1])), tol=mp.mpf(10) ** (-2 * dps // 3))
        return np.array([float(root[0]), float(root[1])])


def monte_carlo_exp_moment(vertices, s, samples: int, rng: np.random.Generator):
    """Rejection-sampled estimate of int_P e^{<s,y>} dy and its standard error."""
    v = np.asarray(vertices, dtype=float)
    lo, hi = v.min(axis=0), v.max(axis=0)
    box = float(np.prod(hi - lo))
    y = lo + (hi - lo) * rng.random((samples, v.shape[1]))
    inside = Delaunay(v).find_simplex(y) >= 0
    vals = np.where(inside, np.exp(y @ np.asarray(s, dtype=float)), 0.0)
    return box * vals.mean(), box * vals.std(ddof=1) / math.sqrt(samples)


def cp2_phi_star(x1, x2):
    return 3 * np.logaddexp(0, np.logaddexp(x1, x2)) - x1 - x2 - math.log(9)
