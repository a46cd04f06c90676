"""Continuity-method solver for the toric soliton Monge-Ampere equation in 2-D:

    log det D^2 phi + c + w_t + <c_vec, D phi> = 0,   w_t = t phi + (1 - t) phi0,

on the box [-R, R]^2 with Dirichlet data phi = phi0 + k on the boundary.

The scalar k is an extra unknown fixed by the mass identity

    int_{R^2} e^{-w_t} dx = e^c int_P e^{<c_vec, y>} dy,

where the integral over R^2 is the trapezoid sum on the box plus the tail
of e^{-(phi0 + t k)} outside it.  On R^2 every solution satisfies this
identity; on the box it selects the constant that makes the gradient image
fill P.  ``normalize=False`` keeps k = 0 (plain Dirichlet data).
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .guillemin import GuilleminPotential
from .integrals import exp_moment
from .polytope import DualPolytope

log = logging.getLogger(__name__)

MAX_HALVINGS = 30
MAX_NEWTON = 200
DIRECT_FIRST_NEWTON = 30


class ConvexityError(RuntimeError):
    """The discrete Hessian is not positive definite somewhere."""


class ContinuityError(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid:
    half_width: float
    resolution: int

    @property
    def h(self) -> float:
        return 2 * self.half_width / (self.resolution - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.resolution)

    @property
    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (N, N, 2), index [i, j] -> (axis[i], axis[j])."""
        a = self.axis
        return np.stack(np.meshgrid(a, a, indexing="ij"), axis=-1)

    @property
    def center(self) -> int:
        return self.resolution // 2

    @property
    def boundary_mask(self) -> np.ndarray:
        m = np.zeros((self.resolution, self.resolution), dtype=bool)
        m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
        return m

    @property
    def trapezoid_weights(self) -> np.ndarray:
        w1 = np.full(self.resolution, self.h)
        w1[0] = w1[-1] = self.h / 2
        return np.outer(w1, w1)


def build_grid(half_width: float, resolution: int) -> Grid:
    if not half_width > 0:
        raise ValueError("half width R must be positive")
    if resolution % 2 == 0:
        raise ValueError("resolution must be odd so that the origin is a node")
    if resolution < 33:
        raise ValueError("resolution must be at least 33")
    return Grid(float(half_width), int(resolution))


# ---------------------------------------------------------------------------
# discrete operators


def discrete_hessian(phi: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Central 9-point second differences at interior nodes."""
    pxx = (phi[2:, 1:-1] - 2 * phi[1:-1, 1:-1] + phi[:-2, 1:-1]) / h**2
    pyy = (phi[1:-1, 2:] - 2 * phi[1:-1, 1:-1] + phi[1:-1, :-2]) / h**2
    pxy = (phi[2:, 2:] - phi[2:, :-2] - phi[:-2, 2:] + phi[:-2, :-2]) / (4 * h**2)
    return pxx, pyy, pxy


def discrete_gradient(phi: np.ndarray, h: float) -> np.ndarray:
    """Central first differences at interior nodes, shape (N-2, N-2, 2)."""
    return np.stack(
        [(phi[2:, 1:-1] - phi[:-2, 1:-1]) / (2 * h), (phi[1:-1, 2:] - phi[1:-1, :-2]) / (2 * h)],
        axis=-1,
    )


# ---------------------------------------------------------------------------
# problem and state


@dataclass
class Boundary:
    """Dirichlet data ``values + shift`` on the box edges.

    With ``normalize`` the shift is solved for from the mass identity, which
    needs ``beta`` (= e^c int_P e^{<c_vec,y>} dy) and ``phi0_mass``
    (= int_{R^2} e^{-phi0}).
    """

    values: np.ndarray
    normalize: bool = False
    beta: float | None = None
    phi0_mass: float | None = None


@dataclass
class ContinuityState:
    """Discrete potential at parameter t, stored as ``phi = base + shift + psi``.

    ``base`` is a double field fixed for the whole solve (the Dirichlet data),
    ``shift`` a scalar and ``psi`` a small extended-precision correction that
    vanishes on the boundary.  Far from the origin det D^2 phi is ~1e-9 while
    phi is ~20; second differences of the double ``base`` are exact in long
    double and ``psi`` is O(1e-2), so the determinant keeps ~15 digits
    instead of the ~7 a single rounded field would leave.
    """

    grid: Grid
    t: float
    base: np.ndarray
    psi: np.ndarray
    phi0: np.ndarray
    c_vec: np.ndarray
    c: float = 0.0
    shift: float = 0.0
    residual_norm: float = math.inf
    newton_iters: int = 0

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        self.psi = np.asarray(self.psi, dtype=np.longdouble)
        self.c_vec = np.asarray(self.c_vec, dtype=float)

    @classmethod
    def from_field(cls, grid: Grid, t: float, phi, phi0, c_vec, base=None, shift: float = 0.0,
                   **kwargs) -> "ContinuityState":
        """Wrap a full field; ``base`` defaults to ``phi0``."""
        base = np.asarray(phi0 if base is None else base, dtype=float)
        psi = np.asarray(phi, dtype=np.longdouble) - base - shift
        return cls(grid, t, base, psi, phi0, c_vec, shift=shift, **kwargs)

    @property
    def phi(self) -> np.ndarray:
        return self.base + self.shift + self.psi

    @property
    def w(self) -> np.ndarray:
        return self.t * self.phi + (1 - self.t) * self.phi0

    def hessian(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        h = self.grid.h
        hb = discrete_hessian(self.base.astype(np.longdouble), h)
        hp = discrete_hessian(self.psi, h)
        return tuple(a + b for a, b in zip(hb, hp))

    def gradient(self) -> np.ndarray:
        h = self.grid.h
        return discrete_gradient(self.base.astype(np.longdouble), h) + discrete_gradient(self.psi, h)

    @property
    def m_t(self) -> float:
        return float(self.w.min())

    @property
    def x_t(self) -> np.ndarray:
        i, j = np.unravel_index(np.argmin(self.w), self.psi.shape)
        return self.grid.nodes[i, j].copy()

    @property
    def sup_phi_minus_phi0(self) -> float:
        return float((self.phi - self.phi0).max())

    @property
    def inf_phi_minus_phi0(self) -> float:
        return float((self.phi - self.phi0).min())

    def diagnostics(self) -> dict:
        return {
            "t": self.t,
            "m_t": self.m_t,
            "x_t": self.x_t.tolist(),
            "sup_phi_minus_phi0": self.sup_phi_minus_phi0,
            "inf_phi_minus_phi0": self.inf_phi_minus_phi0,
            "newton_iters": self.newton_iters,
            "residual_norm": self.residual_norm,
            "shift": self.shift,
        }

    def copy(self, **changes) -> "ContinuityState":
        fields = dict(
            grid=self.grid, t=self.t, base=self.base, psi=self.psi.copy(), phi0=self.phi0,
            c_vec=self.c_vec, c=self.c, shift=self.shift, residual_norm=self.residual_norm,
            newton_iters=self.newton_iters,
        )
        fields.update(changes)
        return ContinuityState(**fields)

    def rebased(self, base: np.ndarray) -> "ContinuityState":
        """Same field expressed over a different ``base``."""
        base = np.asarray(base, dtype=float)
        if base is self.base:
            return self.copy()
        return self.copy(base=base, psi=self.psi + (self.base - base))


def phi0_field(potential: GuilleminPotential, grid: Grid) -> np.ndarray:
    values, _, _ = potential.legendre_batch(grid.nodes.reshape(-1, 2))
    return values.reshape(grid.resolution, grid.resolution)


def make_boundary(p: DualPolytope, potential: GuilleminPotential, phi0: np.ndarray, c_vec, c: float = 0.0,
                  normalize: bool = True) -> Boundary:
    if not normalize:
        return Boundary(values=phi0)
    beta = math.exp(c) * exp_moment(p, np.asarray(c_vec, dtype=float), 1e-12).value
    return Boundary(values=phi0, normalize=True, beta=beta, phi0_mass=potential.mass())


def residual(state: ContinuityState, log_rhs: np.ndarray | None = None) -> np.ndarray:
    """log det D_h^2 phi - log(rhs) at interior nodes.

    The default right side is e^{-c - w_t - <c_vec, D_h phi>}; ``log_rhs``
    (interior-shaped) overrides it for manufactured problems.
    """
    pxx, pyy, pxy = state.hessian()
    det = pxx * pyy - pxy**2
    if np.any(det <= 0) or np.any(pxx <= 0):
        raise ConvexityError(f"discrete Hessian not positive definite at {int(np.sum((det <= 0) | (pxx <= 0)))} node(s)")
    if log_rhs is None:
        log_rhs = -(state.c + state.w[1:-1, 1:-1] + state.gradient() @ state.c_vec)
    return np.log(det) - log_rhs


def _box_mass(state: ContinuityState) -> float:
    return float(np.sum(state.grid.trapezoid_weights * np.exp(-state.w)))


def mass_terms(state: ContinuityState, boundary: Boundary) -> tuple[float, float]:
    """(trapezoid mass of e^{-w} on the box, estimated tail outside it)."""
    weights = state.grid.trapezoid_weights
    tail0 = boundary.phi0_mass - float(np.sum(weights * np.exp(-state.phi0)))
    return _box_mass(state), max(tail0, 0.0) * math.exp(-state.t * state.shift)


def normalization_residual(state: ContinuityState, boundary: Boundary) -> float:
    box, tail = mass_terms(state, boundary)
    return math.log(box + tail) - math.log(boundary.beta)


def _jacobian(state: ContinuityState, fixed_rhs: bool = False) -> sp.csc_matrix:
    """Sparse Jacobian of the residual in the interior values of psi.

    ``fixed_rhs`` drops the zeroth-order and advection terms, for a right
    side that does not depend on phi.
    """
    n = state.grid.resolution
    h = state.grid.h
    m = n - 2
    pxx, pyy, pxy = state.hessian()
    det = pxx * pyy - pxy**2
    a, b, q = (np.asarray(v / det, dtype=float) for v in (pyy, pxx, pxy))
    c1, c2 = (0.0, 0.0) if fixed_rhs else state.c_vec
    coeff = {
        (0, 0): -2 * a / h**2 - 2 * b / h**2 + (0.0 if fixed_rhs else state.t),
        (1, 0): a / h**2 + c1 / (2 * h),
        (-1, 0): a / h**2 - c1 / (2 * h),
        (0, 1): b / h**2 + c2 / (2 * h),
        (0, -1): b / h**2 - c2 / (2 * h),
        (1, 1): -q / (2 * h**2),
        (-1, -1): -q / (2 * h**2),
        (1, -1): q / (2 * h**2),
        (-1, 1): q / (2 * h**2),
    }
    ii, jj = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    rows_all, cols_all, vals_all = [], [], []
    for (di, dj), val in coeff.items():
        ni, nj = ii + di, jj + dj
        inside = (ni >= 0) & (ni < m) & (nj >= 0) & (nj < m)
        rows_all.append((ii * m + jj)[inside])
        cols_all.append((ni * m + nj)[inside])
        vals_all.append(val[inside])
    return sp.csc_matrix(
        (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))), shape=(m * m, m * m)
    )


def _factorize(jac: sp.csc_matrix) -> Callable[[np.ndarray], np.ndarray]:
    """Row-equilibrated sparse LU with one step of iterative refinement.

    Far-field rows carry inverse-Hessian weights many orders of magnitude
    above the rest, which costs several digits in a plain factorization.
    """
    scale = 1.0 / abs(jac).max(axis=1).toarray().ravel()
    scaled = (sp.diags(scale) @ jac).tocsc()
    lu = splu(scaled)

    def solve(rhs: np.ndarray) -> np.ndarray:
        b = scale * rhs
        x = lu.solve(b)
        return x + lu.solve(b - scaled @ x)

    return solve


def solve_at_t(state: ContinuityState, boundary: Boundary, tol: float = 1e-8,
               max_newton: int = MAX_NEWTON, log_rhs: np.ndarray | None = None,
               defect: np.ndarray | None = None) -> ContinuityState:
    """Damped Newton on the log-form residual at fixed t.

    The state is re-expressed over ``boundary.values`` so the Dirichlet
    condition reads psi = 0 on the edges.  With ``boundary.normalize`` the
    shift is a further unknown and the mass identity a further equation.
    ``defect`` (interior-shaped) is subtracted from the residual, which lets
    callers follow a homotopy from a known discrete solution.

    Returns a new converged state; raises :class:`ContinuityError` when
    Newton stalls or hits ``max_newton``.
    """
    st = state.rebased(boundary.values)
    st.psi[st.grid.boundary_mask] = 0
    weights = st.grid.trapezoid_weights

    def evaluate(s):
        r = residual(s, log_rhs)
        if defect is not None:
            r = r - defect
        e = normalization_residual(s, boundary) if boundary.normalize else 0.0
        return r, e

    r, e = evaluate(st)
    for it in range(max_newton + 1):
        norm = max(float(np.abs(r).max()), abs(e))
        st.residual_norm, st.newton_iters = norm, it
        log.debug("t=%.4f newton %d residual %.3e shift %.6f", st.t, it, norm, st.shift)
        if norm < tol:
            return st
        if it == max_newton:
            break
        solve = _factorize(_jacobian(st, fixed_rhs=log_rhs is not None))
        d_psi = solve(-np.asarray(r, dtype=float).ravel())
        d_shift = 0.0
        if boundary.normalize:
            # bordered system: a unit shift adds t to every residual and -t to e
            z = solve(np.full(d_psi.shape, st.t))
            total = sum(mass_terms(st, boundary))
            g = -st.t * np.asarray(weights * np.exp(-st.w), dtype=float)[1:-1, 1:-1].ravel() / total
            d_shift = (float(e) + g @ d_psi) / (g @ z + st.t)
            d_psi = d_psi - d_shift * z
        d_psi = d_psi.reshape(r.shape)
        merit = float(np.sqrt(np.mean(r**2) + e**2))
        alpha = 1.0
        for _ in range(MAX_HALVINGS):
            trial = st.copy()
            trial.psi[1:-1, 1:-1] += alpha * d_psi
            trial.shift = st.shift + alpha * d_shift
            try:
                r_new, e_new = evaluate(trial)
            except ConvexityError:
                alpha /= 2
                continue
            if float(np.sqrt(np.mean(r_new**2) + e_new**2)) <= (1 - 1e-4 * alpha) * merit:
                break
            alpha /= 2
        else:
            raise ContinuityError(
                f"Newton stagnated at t={st.t} (iteration {it}, residual {st.residual_norm:.3e})"
            )
        log.debug("t=%.4f step length %.3g", st.t, alpha)
        st, r, e = trial, r_new, e_new
    raise ContinuityError(f"Newton did not converge at t={st.t}: residual {st.residual_norm:.3e}")


# ---------------------------------------------------------------------------
# continuity path


@dataclass
class ContinuitySchedule:
    t_start: float = 0.3
    t_step: float = 0.05
    tol: float = 1e-8
    max_halvings: int = 5
    max_newton: int = MAX_NEWTON
    homotopy_steps: tuple[int, ...] = (8, 32)

    def __post_init__(self):
        if not 0 < self.t_start <= 1:
            raise ValueError("t_start must lie in (0, 1]")
        if not self.t_step > 0 or not self.tol > 0:
            raise ValueError("t_step and tol must be positive")

    @property
    def t_values(self) -> list[float]:
        count = int(round((1.0 - self.t_start) / self.t_step))
        ts = [self.t_start + k * self.t_step for k in range(count + 1) if self.t_start + k * self.t_step < 1 - 1e-12]
        return [round(t, 12) for t in ts] + [1.0]


@dataclass
class ContinuityPath:
    states: list[ContinuityState] = field(default_factory=list)
    failed_t: float | None = None
    message: str = ""

    @property
    def completed(self) -> bool:
        return self.failed_t is None and bool(self.states) and self.states[-1].t == 1.0


def _initial_state(grid: Grid, t: float, phi0: np.ndarray, c_vec: np.ndarray,
                   boundary: Boundary) -> ContinuityState:
    """phi0 lifted by the constant that balances the mass identity."""
    shift = 0.0
    if boundary.normalize:
        shift = math.log(boundary.phi0_mass / boundary.beta) / t
    return ContinuityState(grid, t, phi0, np.zeros_like(phi0), phi0, c_vec, shift=shift)


def _solve_first(seed: ContinuityState, boundary: Boundary, schedule: ContinuitySchedule) -> ContinuityState:
    """First solve of a path, from the lifted phi0 field.

    Far from the origin the discrete Hessian of phi0 is nearly singular and
    full Newton steps leave the convex cone.  If the direct solve fails, the
    initial defect d0 is removed gradually: solve residual = (1 - s) d0 for
    s = 1/k, ..., 1, starting from the exact solution at s = 0.
    """
    try:
        return solve_at_t(seed, boundary, schedule.tol, min(schedule.max_newton, DIRECT_FIRST_NEWTON))
    except (ConvexityError, ContinuityError) as exc:
        log.info("direct first solve failed (%s); removing the initial defect gradually", exc)
    d0 = residual(seed)
    for k in schedule.homotopy_steps:
        st = seed
        try:
            for j in range(1, k + 1):
                st = solve_at_t(st, boundary, schedule.tol, schedule.max_newton, defect=(1 - j / k) * d0)
            return st
        except (ConvexityError, ContinuityError) as exc:
            log.info("defect homotopy with %d stages failed: %s", k, exc)
    raise ContinuityError(f"could not solve the first step at t={seed.t}")


def continuity_solve(
    p: DualPolytope,
    schedule: ContinuitySchedule,
    grid: Grid,
    c_vec: Sequence[float],
    potential: GuilleminPotential | None = None,
    normalize: bool = True,
    resume_from: ContinuityState | None = None,
    on_step: Callable[[ContinuityState], None] | None = None,
) -> ContinuityPath:
    """March t through the schedule, warm-starting each Newton solve."""
    if p.dim != 2:
        raise ValueError("the Monge-Ampere solver is two-dimensional")
    potential = potential or GuilleminPotential(p)
    c_vec = np.asarray(c_vec, dtype=float)
    if resume_from is not None:
        phi0 = resume_from.phi0
        current = resume_from
    else:
        phi0 = phi0_field(potential, grid)
        current = None
    boundary = make_boundary(p, potential, phi0, c_vec, normalize=normalize)
    path = ContinuityPath()
    targets = [t for t in schedule.t_values if current is None or t > current.t + 1e-12]
    if current is not None:
        path.states.append(current)
    for target in targets:
        start = current.t if current is not None else None
        t_try = target
        for attempt in range(schedule.max_halvings + 1):
            try:
                if current is None:
                    new = _solve_first(_initial_state(grid, t_try, phi0, c_vec, boundary), boundary, schedule)
                else:
                    new = solve_at_t(current.copy(t=t_try), boundary, schedule.tol, schedule.max_newton)
                break
            except (ConvexityError, ContinuityError) as exc:
                log.warning("step to t=%.5f failed: %s", t_try, exc)
                if start is None or attempt == schedule.max_halvings:
                    path.failed_t, path.message = t_try, str(exc)
                    return path
                t_try = start + (t_try - start) / 2
        current = new
        path.states.append(new)
        if on_step:
            on_step(new)
        # a halved step lands short of the target; keep marching toward it
        while current.t < target - 1e-12:
            new = None
            t_try, start = target, current.t
            for attempt in range(schedule.max_halvings + 1):
                try:
                    new = solve_at_t(current.copy(t=t_try), boundary, schedule.tol, schedule.max_newton)
                    break
                except (ConvexityError, ContinuityError) as exc:
                    log.warning("step to t=%.5f failed: %s", t_try, exc)
                    t_try = start + (t_try - start) / 2
            if new is None:
                path.failed_t, path.message = target, "step halving exhausted"
                return path
            current = new
            path.states.append(new)
            if on_step:
                on_step(new)
    return path


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    residual_norm: float
    min_det: float
    gradient_margin: float
    gradient_slack: float
    mass_box: float
    mass_tail: float
    beta: float
    residual_ok: bool
    convex_ok: bool
    gradient_ok: bool
    identity_box_error: float
    identity_error: float

    @property
    def passed(self) -> bool:
        return self.residual_ok and self.convex_ok and self.gradient_ok

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["passed"] = self.passed
        return out


def verify_solution(state: ContinuityState, p: DualPolytope, tol: float = 1e-8,
                    boundary: Boundary | None = None) -> VerificationReport:
    """Aggregate checks on a converged state.

    The gradient image test allows a slack of h^2: central differences of a
    convex function may poke out of P by that order near its corners.
    """
    h = state.grid.h
    pxx, pyy, pxy = state.hessian()
    det = pxx * pyy - pxy**2
    convex = bool(np.all(det > 0) and np.all(pxx > 0))
    try:
        res = float(np.abs(residual(state)).max())
    except ConvexityError:
        res = math.inf
    grad = np.asarray(state.gradient(), dtype=float)
    slacks = grad @ p.normal_array.T + 1.0
    margin = float(slacks.min())
    if boundary is None or boundary.beta is None:
        boundary = make_boundary(p, GuilleminPotential(p), state.phi0, state.c_vec, state.c)
    box, tail = mass_terms(state, boundary)
    return VerificationReport(
        residual_norm=res,
        min_det=float(det.min()),
        gradient_margin=margin,
        gradient_slack=h**2,
        mass_box=box,
        mass_tail=float(tail),
        beta=float(boundary.beta),
        residual_ok=res < tol,
        convex_ok=convex,
        gradient_ok=margin >= -h**2,
        identity_box_error=float(abs(box - boundary.beta) / boundary.beta),
        identity_error=float(abs(box + tail - boundary.beta) / boundary.beta),
    )


# ---------------------------------------------------------------------------
# truncation sensitivity


def extended_grid(grid: Grid, factor: float = 1.25) -> Grid:
    """Grid with the same spacing on a box at least ``factor`` times larger.

    The half width is rounded up to a multiple of h so that every node of
    ``grid`` is also a node of the result.
    """
    h = grid.h
    extra = math.ceil((factor - 1) * grid.half_width / h - 1e-9)
    return build_grid(grid.half_width + extra * h, grid.resolution + 2 * extra)


def restrict(field: np.ndarray, big: Grid, small: Grid) -> np.ndarray:
    """Values of a ``big`` field at the nodes of the nested ``small`` grid."""
    off = (big.resolution - small.resolution) // 2
    return field[off:off + small.resolution, off:off + small.resolution]


def r_sensitivity(p: DualPolytope, state: ContinuityState, schedule: ContinuitySchedule,
                  potential: GuilleminPotential | None = None, factor: float = 1.25,
                  normalize: bool = True) -> tuple[float, Grid]:
    """Re-run the path on a larger box and compare at ``state.t``.

    Returns the sup over the nodes of the original box of the difference of
    the two solutions, and the larger grid.
    """
    big = extended_grid(state.grid, factor)
    path = continuity_solve(p, schedule, big, state.c_vec, potential, normalize=normalize)
    if not path.completed:
        raise ContinuityError(f"path on the enlarged box failed at t={path.failed_t}: {path.message}")
    other = next(s for s in reversed(path.states) if abs(s.t - state.t) < 1e-12)
    diff = np.asarray(restrict(other.phi, big, state.grid) - state.phi, dtype=float)
    return float(np.abs(diff).max()), big


# ---------------------------------------------------------------------------
# persistence


def save_state(state: ContinuityState, stem) -> None:
    """Write ``<stem>.npz`` (fields) and ``<stem>.json`` (scalars)."""
    stem = Path(stem)
    np.savez(stem.with_suffix(".npz"), base=state.base, psi=state.psi, phi0=state.phi0)
    meta = {
        "half_width": state.grid.half_width,
        "resolution": state.grid.resolution,
        "t": state.t,
        "c_vec": [float(v) for v in state.c_vec],
        "c": state.c,
        "shift": state.shift,
        "residual_norm": state.residual_norm,
        "newton_iters": state.newton_iters,
    }
    stem.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")


def load_state(stem) -> ContinuityState:
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text())
    with np.load(stem.with_suffix(".npz")) as data:
        base, psi, phi0 = data["base"], data["psi"], data["phi0"]
    grid = build_grid(meta["half_width"], meta["resolution"])
    return ContinuityState(
        grid, meta["t"], base, psi, phi0, np.array(meta["c_vec"]), c=meta["c"], shift=meta["shift"],
        residual_norm=meta["residual_norm"], newton_iters=meta["newton_iters"],
    )
