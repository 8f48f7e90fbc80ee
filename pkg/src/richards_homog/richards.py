"""Picard-linearised Richards solvers on the coarse grid (Haverkamp conductivity).

The conductivity is ``K(x) / (1 + |p|)``.  Each Picard step freezes the
nonlinear factor at the previous iterate, evaluated at triangle centroids.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import fem
from .grid import StructuredMesh, pattern_arrays
from .homogenize import EffectiveTensorField

log = logging.getLogger(__name__)


def haverkamp(p):
    """Relative conductivity ``1 / (1 + |p|)``."""
    return 1.0 / (1.0 + np.abs(p))


@dataclass(frozen=True)
class PicardConfig:
    tolerance: float = 1e-6
    max_iterations: int = 4
    initial_guess: str = "zero"  # or "previous"

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.initial_guess not in ("zero", "previous"):
            raise ValueError(f"unknown initial guess policy {self.initial_guess!r}")


@dataclass(frozen=True)
class TimeGrid:
    terminal_time: float = 5e-5
    step_count: int = 20

    def __post_init__(self):
        if self.terminal_time <= 0 or self.step_count < 1:
            raise ValueError("terminal_time must be positive and step_count at least 1")

    @property
    def tau(self) -> float:
        return self.terminal_time / self.step_count


@dataclass
class StepRecord:
    iterations: int
    differences: list[float]
    converged: bool


@dataclass
class Snapshot:
    """System data at one recorded step: stiffness entries on the pattern, rhs, solution."""

    matrix: np.ndarray
    rhs: np.ndarray
    solution: np.ndarray


@dataclass
class SolveTrace:
    steps: list[StepRecord] = field(default_factory=list)
    snapshots: dict[int, Snapshot] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.steps)


def nonlinearity_factor(p_nodal: np.ndarray, mesh: StructuredMesh) -> np.ndarray:
    """Haverkamp factor of the linear interpolant at each triangle centroid."""
    p = np.asarray(p_nodal, dtype=float)
    if p.shape != (mesh.n_nodes,):
        raise ValueError(f"expected {mesh.n_nodes} nodal values, got shape {p.shape}")
    return haverkamp(p[mesh.triangles].mean(axis=1))


def _coefficient(mesh: StructuredMesh, coef) -> np.ndarray:
    if isinstance(coef, EffectiveTensorField):
        if coef.coarse_side != mesh.n_side:
            raise ValueError("tensor field does not match the mesh")
        return coef.per_triangle()
    coef = np.asarray(coef, dtype=float)
    if coef.shape[0] != mesh.n_triangles:
        raise ValueError("coefficient must have one entry per triangle")
    return coef


def _scale(coef: np.ndarray, factor: np.ndarray) -> np.ndarray:
    return coef * factor if coef.ndim == 1 else coef * factor[:, None, None]


def relative_change(new, old, mass) -> float:
    """``||new - old|| / ||old||`` in the L2 norm induced by ``mass``.

    A zero ``old`` gives 0 when ``new`` is also zero and ``inf`` otherwise.
    """
    d = new - old
    num = math.sqrt(max(float(d @ (mass @ d)), 0.0))
    den = math.sqrt(max(float(old @ (mass @ old)), 0.0))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def pattern_vector(mesh: StructuredMesh, matrix: sp.spmatrix) -> np.ndarray:
    rows, cols = pattern_arrays(mesh)
    return np.asarray(sp.csr_matrix(matrix)[rows, cols]).ravel()


def matrix_from_pattern(mesh: StructuredMesh, values) -> sp.csr_matrix:
    """Symmetric matrix from upper-triangular pattern values."""
    rows, cols = pattern_arrays(mesh)
    values = np.asarray(values, dtype=float)
    if values.shape != rows.shape:
        raise ValueError(f"expected {rows.size} pattern values, got {values.shape}")
    off = rows != cols
    r = np.concatenate([rows, cols[off]])
    c = np.concatenate([cols, rows[off]])
    v = np.concatenate([values, values[off]])
    n = mesh.n_nodes
    return sp.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()


def _picard_loop(mesh, coef, mass, rhs, shift, guess, config, solver_tol):
    """Run Picard iterations for ``(shift + A(p^n)) p^{n+1} = rhs``.

    Returns the accepted iterate, the stiffness that produced it, and the record.
    """
    bnd = mesh.boundary_nodes
    p_old = guess
    diffs: list[float] = []
    converged = False
    for n in range(1, config.max_iterations + 1):
        A = fem.assemble_stiffness(mesh, _scale(coef, nonlinearity_factor(p_old, mesh)))
        system = A if shift is None else A + shift
        Ad, bd = fem.apply_dirichlet(system, rhs, bnd, 0.0)
        p_new = fem.solve_linear(Ad, bd, tol=solver_tol)
        diffs.append(relative_change(p_new, p_old, mass))
        if diffs[-1] <= config.tolerance:
            converged = True
            p_old = p_new
            break
        p_old = p_new
    return p_old, A, StepRecord(n, diffs, converged)


def picard_solve_steady(mesh: StructuredMesh, coef, f=1.0, config: PicardConfig = PicardConfig(),
                        solver_tol: float = 1e-12):
    """Steady problem ``-div(K/(1+|p|) grad p) = f`` with ``p = 0`` on the boundary.

    The returned trace holds a single :class:`StepRecord` and a snapshot under
    key 0 with the stiffness that produced the accepted iterate.
    """
    K = _coefficient(mesh, coef)
    C = fem.assemble_mass(mesh)
    rhs = fem.assemble_load(mesh, f)
    p, A, rec = _picard_loop(mesh, K, C, rhs, None, np.zeros(mesh.n_nodes), config, solver_tol)
    if not rec.converged:
        log.warning("steady Picard stopped after %d iterations (last change %.3e)",
                    rec.iterations, rec.differences[-1])
    trace = SolveTrace([rec], {0: Snapshot(pattern_vector(mesh, A), rhs, p)})
    return p, trace


def picard_solve_transient(mesh: StructuredMesh, coef, f, time: TimeGrid = TimeGrid(),
                           config: PicardConfig = PicardConfig(), record_steps=(),
                           p0=None, solver_tol: float = 1e-12):
    """Backward Euler in time, Picard in space.

    ``f(t, x)`` is vectorised over points ``x (m, 2)``.  At every step ``s`` in
    ``record_steps`` (1-based) the trace stores the stiffness used for the
    accepted iterate, the full right-hand side ``C p_{s-1} / tau + F_s`` and the
    solution.
    """
    K = _coefficient(mesh, coef)
    C = fem.assemble_mass(mesh)
    tau = time.tau
    record = set(int(s) for s in record_steps)
    if any(s < 1 or s > time.step_count for s in record):
        raise ValueError(f"record steps must lie in 1..{time.step_count}")
    p = np.zeros(mesh.n_nodes) if p0 is None else np.asarray(p0, dtype=float)
    shift = C / tau
    trace = SolveTrace()
    for s in range(1, time.step_count + 1):
        t = s * tau
        rhs = (C @ p) / tau + fem.assemble_load(mesh, lambda x, t=t: f(t, x))
        guess = np.zeros_like(p) if config.initial_guess == "zero" else p
        p_new, A, rec = _picard_loop(mesh, K, C, rhs, shift, guess, config, solver_tol)
        if not rec.converged:
            log.warning("Picard stopped after %d iterations at time step %d (last change %.3e)",
                        rec.iterations, s, rec.differences[-1])
        trace.steps.append(rec)
        if s in record:
            trace.snapshots[s] = Snapshot(pattern_vector(mesh, A), rhs, p_new)
        p = p_new
    return p, trace


def solve_from_predicted_system(mesh: StructuredMesh, matrix, rhs, tau: float | None = None,
                                mass=None, tol: float = 1e-12) -> np.ndarray:
    """One linear solve with a predicted stiffness.

    ``matrix`` is a pattern vector or a sparse/dense matrix; it is symmetrised.
    With ``tau`` the system is ``(C / tau + A) p = rhs`` (transient), otherwise
    ``A p = rhs`` (steady).  Zero Dirichlet data are imposed.

    Raises :class:`fem.IndefiniteMatrixError` if the constrained system is not
    positive definite.
    """
    if sp.issparse(matrix) or np.ndim(matrix) == 2:
        A = sp.csr_matrix(matrix)
        A = 0.5 * (A + A.T)
    else:
        A = matrix_from_pattern(mesh, matrix)
    if tau is not None:
        C = fem.assemble_mass(mesh) if mass is None else mass
        A = A + C / tau
    Ad, bd = fem.apply_dirichlet(A, np.asarray(rhs, dtype=float), mesh.boundary_nodes, 0.0)
    return fem.solve_linear(Ad, bd, tol=tol)


def write_solution_csv(path, mesh: StructuredMesh, p: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_x", "node_y", "p"])
        for (x, y), v in zip(mesh.nodes, p):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])
