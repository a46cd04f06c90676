"""Exact geometry of the lattice polytope Q and its dual P.

Q is given by its vertices n^(1), ..., n^(d) in Z^n.  The dual polytope is

    P = { y : l_i(y) = <y, n^(i)> + 1 >= 0  for all i },

whose vertices are generally rational.  All combinatorics here runs in
``fractions.Fraction``; floating point only appears in
:func:`support_function`, which is consumed by the numerical modules.
"""
from __future__ import annotations

import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from itertools import combinations
from typing import Any, Sequence

import numpy as np

from . import exact

LatticePoint = tuple[int, ...]
RationalPoint = tuple[Fraction, ...]


class PolytopeError(ValueError):
    """Raised for malformed or geometrically invalid polytope input."""


@dataclass(frozen=True)
class LatticePolytope:
    """Lattice polytope Q with the origin strictly inside.

    ``facet_complex`` lists, for each facet of Q, the indices of the vertices
    lying on it.  ``facet_normals`` holds the matching integer normals ``a``
    with ``<a, x> <= b`` on Q, scaled to be primitive (``facet_offsets``
    holds ``b``).
    """

    dim: int
    vertices: tuple[LatticePoint, ...]
    facet_complex: tuple[tuple[int, ...], ...]
    facet_normals: tuple[LatticePoint, ...] = field(repr=False)
    facet_offsets: tuple[int, ...] = field(repr=False)

    def to_document(self) -> dict[str, Any]:
        return {"dim": self.dim, "vertices": [list(v) for v in self.vertices]}


@dataclass(frozen=True)
class DualPolytope:
    """Half-space and vertex description of P, plus a simplicial triangulation.

    Facet ``i`` is ``l_i(y) = <y, normals[i]> + 1 >= 0``.  ``incidence[k]`` is
    the sorted tuple of facet indices through vertex ``k``.  Every simplex of
    ``triangulation`` is a cone from the origin over a simplex of a facet.
    """

    dim: int
    normals: tuple[LatticePoint, ...]
    vertices: tuple[RationalPoint, ...]
    incidence: tuple[tuple[int, ...], ...]
    triangulation: tuple[tuple[RationalPoint, ...], ...]

    def slack(self, y: Sequence) -> tuple[Fraction, ...]:
        """Exact values l_i(y)."""
        return tuple(exact.dot(y, n) + 1 for n in self.normals)

    @cached_property
    def normal_array(self) -> np.ndarray:
        return np.array(self.normals, dtype=float)

    @cached_property
    def vertex_array(self) -> np.ndarray:
        return np.array([[float(c) for c in v] for v in self.vertices])

    @cached_property
    def simplex_arrays(self) -> np.ndarray:
        """Triangulation as a float array of shape (nsimplex, n + 1, n)."""
        return np.array([[[float(c) for c in p] for p in s] for s in self.triangulation])

    def transformed(self, matrix: Sequence[Sequence[int]]) -> "DualPolytope":
        """Image of P under an invertible linear map A (exact).

        The facet normals transform by A^{-T}; this is only a lattice
        polytope description when A is unimodular.
        """
        a = exact.as_fractions(matrix)
        a_inv_t = exact.transpose(exact.inverse(a))
        normals = []
        for n in self.normals:
            img = exact.matmul_vec(a_inv_t, n)
            if any(c.denominator != 1 for c in img):
                raise PolytopeError("matrix is not unimodular")
            normals.append(tuple(int(c) for c in img))
        move = lambda p: exact.matmul_vec(a, p)  # noqa: E731
        return DualPolytope(
            dim=self.dim,
            normals=tuple(normals),
            vertices=tuple(move(v) for v in self.vertices),
            incidence=self.incidence,
            triangulation=tuple(tuple(move(p) for p in s) for s in self.triangulation),
        )


@dataclass
class FanoReport:
    is_fano: bool
    origin_interior: bool
    vertices_primitive: bool
    faces_simplicial: bool
    is_gorenstein: bool
    gorenstein_index: int
    failures: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "is_fano": self.is_fano,
            "origin_interior": self.origin_interior,
            "vertices_primitive": self.vertices_primitive,
            "faces_simplicial": self.faces_simplicial,
            "is_gorenstein": self.is_gorenstein,
            "gorenstein_index": self.gorenstein_index,
            "failures": list(self.failures),
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# Parsing and hull construction


def _as_int(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise PolytopeError(f"non-integer coordinate {value!r}")
    return value


def _primitive(vec: Sequence[int]) -> tuple[int, ...]:
    g = reduce(math.gcd, (abs(v) for v in vec), 0)
    return tuple(v // g for v in vec) if g > 1 else tuple(vec)


def _hull_facets(points: Sequence[LatticePoint]) -> list[tuple[LatticePoint, int, tuple[int, ...]]]:
    """Facets of conv(points) by brute force over n-subsets.

    Returns ``(a, b, on_facet)`` with ``<a, x> <= b`` valid on every point,
    ``a`` primitive, and ``on_facet`` the indices attaining equality.
    """
    n = len(points[0])
    found: dict[tuple, tuple[LatticePoint, int, tuple[int, ...]]] = {}
    for subset in combinations(range(len(points)), n):
        # Hyperplane <a, x> = b through the subset: (a, -b) spans the kernel
        # of the n x (n+1) matrix [x_j | 1], read off as signed minors.
        rows = [list(points[j]) + [1] for j in subset]
        coeffs = []
        for k in range(n + 1):
            minor = [r[:k] + r[k + 1:] for r in rows]
            coeffs.append((-1) ** k * int(exact.det(minor)))
        if not any(coeffs[:n]):
            continue
        g = reduce(math.gcd, (abs(c) for c in coeffs), 0)
        a, b = tuple(c // g for c in coeffs[:n]), -coeffs[n] // g
        values = [sum(ai * xi for ai, xi in zip(a, p)) - b for p in points]
        if all(v <= 0 for v in values):
            pass
        elif all(v >= 0 for v in values):
            a, b = tuple(-c for c in a), -b
        else:
            continue
        on = tuple(j for j, v in enumerate(values) if v == 0)
        found[(a, b)] = (a, b, on)
    return [found[k] for k in sorted(found)]


def _build_lattice_polytope(dim: int, vertices: Sequence[LatticePoint]) -> LatticePolytope:
    if dim < 1:
        raise PolytopeError("dim must be >= 1")
    verts = tuple(tuple(v) for v in vertices)
    if not verts:
        raise PolytopeError("empty vertex list")
    if any(len(v) != dim for v in verts):
        raise PolytopeError(f"every vertex must have {dim} coordinates")
    if len(set(verts)) != len(verts):
        raise PolytopeError("duplicate vertices")
    if exact.affine_rank(verts) < dim:
        raise PolytopeError("vertices do not span a full-dimensional polytope; origin not interior")
    facets = _hull_facets(verts)
    if any(b <= 0 for _, b, _ in facets):
        raise PolytopeError("origin is not strictly inside the convex hull")
    for j, v in enumerate(verts):
        normals = [a for a, _, on in facets if j in on]
        if exact.rank(normals) < dim:
            raise PolytopeError(f"{list(v)} is not a vertex of the convex hull")
    if dim == 2:
        # counterclockwise order of edges, by the angle of the outer normal
        facets.sort(key=lambda f: math.atan2(f[0][1], f[0][0]))
    return LatticePolytope(
        dim=dim,
        vertices=verts,
        facet_complex=tuple(on for _, _, on in facets),
        facet_normals=tuple(a for a, _, _ in facets),
        facet_offsets=tuple(b for _, b, _ in facets),
    )


def parse_polytope(document: str | bytes | Mapping) -> LatticePolytope:
    """Build a validated :class:`LatticePolytope` from ``{"dim", "vertices"}``.

    ``document`` may be JSON text or an already-decoded mapping.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise PolytopeError(f"malformed document: {exc}") from exc
    if not isinstance(document, Mapping) or "vertices" not in document or "dim" not in document:
        raise PolytopeError("document must be an object with 'dim' and 'vertices'")
    dim = _as_int(document["dim"])
    raw = document["vertices"]
    if not isinstance(raw, list) or not all(isinstance(v, list) for v in raw):
        raise PolytopeError("'vertices' must be a list of coordinate lists")
    return _build_lattice_polytope(dim, [tuple(_as_int(c) for c in v) for v in raw])


def from_vertices(vertices: Sequence[Sequence[int]]) -> LatticePolytope:
    return parse_polytope({"dim": len(vertices[0]), "vertices": [list(v) for v in vertices]})


def transform(q: LatticePolytope, matrix: Sequence[Sequence[int]]) -> LatticePolytope:
    """Image of Q under an integer matrix (vertex order preserved)."""
    if abs(exact.det(matrix)) != 1:
        raise PolytopeError("matrix is not unimodular")
    moved = [tuple(sum(m * x for m, x in zip(row, v)) for row in matrix) for v in q.vertices]
    return _build_lattice_polytope(q.dim, moved)


# ---------------------------------------------------------------------------
# Fano validation


def validate_toric_fano(q: LatticePolytope) -> FanoReport:
    failures: list[str] = []
    origin_interior = all(b > 0 for b in q.facet_offsets)
    if not origin_interior:
        failures.append("origin is not strictly interior")

    primitive = True
    for v in q.vertices:
        g = reduce(math.gcd, (abs(c) for c in v), 0)
        if g != 1:
            primitive = False
            failures.append(f"vertex {list(v)} is not primitive (gcd {g})")

    simplicial = True
    for face in q.facet_complex:
        if len(face) != q.dim:
            simplicial = False
            failures.append(f"facet {[list(q.vertices[i]) for i in face]} has {len(face)} vertices, expected {q.dim}")

    gorenstein, index = is_gorenstein(dual_polytope(q)) if origin_interior else (False, 0)
    notes = ["simpliciality is checked on facets only; lower faces of a simplex facet are simplices"]
    return FanoReport(
        is_fano=origin_interior and primitive and simplicial,
        origin_interior=origin_interior,
        vertices_primitive=primitive,
        faces_simplicial=simplicial,
        is_gorenstein=gorenstein,
        gorenstein_index=index,
        failures=failures,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Dualization


def enumerate_vertices(normals: Sequence[Sequence[int]]) -> list[RationalPoint]:
    """Vertices of { y : <y, n> + 1 >= 0 for n in normals }, exactly.

    Brute force: every n-subset with invertible normal matrix gives a
    candidate point with those constraints tight; keep the feasible ones.
    """
    n = len(normals[0])
    found = set()
    for subset in combinations(normals, n):
        y = exact.solve(subset, [-1] * n)
        if y is None:
            continue
        if all(exact.dot(y, m) + 1 >= 0 for m in normals):
            found.add(y)
    return sorted(found)


def _triangulate_face(face: frozenset[int], k: int, points, facet_sets) -> list[tuple[int, ...]]:
    """Pulling triangulation of a k-face given by its vertex ids."""
    ordered = sorted(face)
    if k == 0:
        return [(ordered[0],)]
    apex = ordered[0]
    subfaces = set()
    for fs in facet_sets:
        g = face & fs
        if g == face or apex in g or len(g) < k:
            continue
        if exact.affine_rank([points[i] for i in sorted(g)]) == k - 1:
            subfaces.add(frozenset(g))
    out = []
    for g in sorted(subfaces, key=sorted):
        out.extend((apex,) + s for s in _triangulate_face(g, k - 1, points, facet_sets))
    return out


def dual_polytope(q: LatticePolytope) -> DualPolytope:
    if not all(b > 0 for b in q.facet_offsets):
        raise PolytopeError("origin must be strictly inside Q")
    normals = q.vertices
    verts = enumerate_vertices(normals)
    slacks = [[exact.dot(v, m) + 1 for m in normals] for v in verts]
    incidence = tuple(tuple(i for i, s in enumerate(row) if s == 0) for row in slacks)
    facet_sets = [frozenset(k for k in range(len(verts)) if slacks[k][i] == 0) for i in range(len(normals))]
    origin = tuple(Fraction(0) for _ in range(q.dim))
    simplices = []
    for fs in facet_sets:
        for s in _triangulate_face(fs, q.dim - 1, verts, facet_sets):
            simplices.append((origin,) + tuple(verts[k] for k in s))
    return DualPolytope(
        dim=q.dim,
        normals=tuple(normals),
        vertices=tuple(verts),
        incidence=incidence,
        triangulation=tuple(simplices),
    )


def simplex_volume(simplex: Sequence[Sequence]) -> Fraction:
    v0 = simplex[0]
    edges = [[Fraction(a) - b for a, b in zip(p, v0)] for p in simplex[1:]]
    return abs(exact.det(edges)) / math.factorial(len(v0))


def is_gorenstein(p: DualPolytope) -> tuple[bool, int]:
    index = 1
    for v in p.vertices:
        for c in v:
            index = math.lcm(index, c.denominator)
    return index == 1, index


def barycenter(p: DualPolytope) -> RationalPoint:
    total = Fraction(0)
    acc = [Fraction(0)] * p.dim
    for s in p.triangulation:
        vol = simplex_volume(s)
        total += vol
        for i in range(p.dim):
            acc[i] += vol * sum(pt[i] for pt in s) / len(s)
    return tuple(a / total for a in acc)


def boundary_distance(p: DualPolytope) -> float:
    """a0 = inf{|y| : y in boundary of P} = min_i 1/|n_i|."""
    return min(1.0 / math.hypot(*n) for n in p.normals)


def support_function(p: DualPolytope, x) -> np.ndarray | float:
    """v(x) = max_k <x, p^(k)>; ``x`` may carry leading batch axes."""
    x = np.asarray(x, dtype=float)
    values = (x @ p.vertex_array.T).max(axis=-1)
    return float(values) if values.ndim == 0 else values
