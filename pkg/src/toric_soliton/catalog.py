"""Named polytope documents used by the tests, the CLI and the README."""

# Fano orbifold with one ordinary double point; non-vanishing Futaki invariant.
TRIANGLE_A1 = {"dim": 2, "vertices": [[1, 0], [0, 1], [-2, -1]]}

# Non-Gorenstein (index 2) Fano orbifold with centrally symmetric dual.
RECTANGLE = {"dim": 2, "vertices": [[-2, -1], [-2, 1], [2, -1], [2, 1]]}

# Anticanonical polytope of CP^2; the Fubini-Study potential is explicit.
CP2 = {"dim": 2, "vertices": [[1, 0], [0, 1], [-1, -1]]}

# Cross-polytope giving CP^1 x CP^1.
CROSS = {"dim": 2, "vertices": [[1, 0], [-1, 0], [0, 1], [0, -1]]}

CATALOG = {
    "triangle_a1": TRIANGLE_A1,
    "rectangle": RECTANGLE,
    "cp2": CP2,
    "cross": CROSS,
}
