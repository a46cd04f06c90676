"""Small exact linear-algebra kernel over the rationals.

Matrices are lists of rows of ``Fraction`` (or ``int``). Everything here is
exact; nothing is converted to floating point.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Sequence

Vector = tuple[Fraction, ...]


def as_fractions(rows: Sequence[Sequence]) -> list[list[Fraction]]:
    return [[Fraction(v) for v in row] for row in rows]


def det(rows: Sequence[Sequence]) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    a = as_fractions(rows)
    n = len(a)
    if any(len(r) != n for r in a):
        raise ValueError("det needs a square matrix")
    sign = 1
    result = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            sign = -sign
        p = a[col][col]
        result *= p
        for r in range(col + 1, n):
            f = a[r][col] / p
            if f:
                row_r, row_c = a[r], a[col]
                for k in range(col, n):
                    row_r[k] -= f * row_c[k]
    return sign * result


def solve(rows: Sequence[Sequence], rhs: Sequence) -> Vector | None:
    """Solve a square system exactly; ``None`` if the matrix is singular."""
    n = len(rows)
    a = [list(r) + [b] for r, b in zip(as_fractions(rows), as_fractions([rhs])[0])]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        p = a[col][col]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col] / p
                row_r, row_c = a[r], a[col]
                for k in range(col, n + 1):
                    row_r[k] -= f * row_c[k]
    return tuple(a[i][n] / a[i][i] for i in range(n))


def rank(rows: Sequence[Sequence]) -> int:
    a = as_fractions(rows)
    if not a:
        return 0
    m = len(a[0])
    r = 0
    for col in range(m):
        pivot = next((i for i in range(r, len(a)) if a[i][col] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        for i in range(r + 1, len(a)):
            if a[i][col]:
                f = a[i][col] / a[r][col]
                for k in range(col, m):
                    a[i][k] -= f * a[r][k]
        r += 1
        if r == len(a):
            break
    return r


def affine_rank(points: Sequence[Sequence]) -> int:
    """Dimension of the affine hull of ``points`` (-1 for no points)."""
    if not points:
        return -1
    base = [Fraction(v) for v in points[0]]
    return rank([[Fraction(v) - b for v, b in zip(p, base)] for p in points[1:]]) if len(points) > 1 else 0


def dot(u: Sequence, v: Sequence) -> Fraction:
    return sum((Fraction(a) * b for a, b in zip(u, v)), Fraction(0))


def matmul_vec(m: Sequence[Sequence], v: Sequence) -> Vector:
    return tuple(dot(row, v) for row in m)


def transpose(m: Sequence[Sequence]) -> list[list]:
    return [list(col) for col in zip(*m)]


def inverse(m: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(m)
    cols = []
    for j in range(n):
        e = [Fraction(int(i == j)) for i in range(n)]
        x = solve(m, e)
        if x is None:
            raise ZeroDivisionError("singular matrix")
        cols.append(x)
    return transpose(cols)


def in_convex_hull(point: Sequence, vertices: Sequence[Sequence]) -> bool:
    """Exact membership test by brute force over simplices of the vertex set.

    By Caratheodory a point of a full-dimensional hull lies in some simplex
    spanned by n + 1 of the vertices, so checking barycentric coordinates of
    every such simplex decides membership with no LP and no rounding.
    """
    n = len(point)
    p = [Fraction(v) for v in point]
    for simplex in combinations(vertices, n + 1):
        v0 = [Fraction(v) for v in simplex[0]]
        cols = [[Fraction(v) - b for v, b in zip(s, v0)] for s in simplex[1:]]
        lam = solve(transpose(cols), [a - b for a, b in zip(p, v0)])
        if lam is None:
            continue
        if all(x >= 0 for x in lam) and sum(lam) <= 1:
            return True
    return False
