"""Effective permeability tensors from Dirichlet cell problems on coarse cells.

For each coarse cell K and direction j the cell problem is

    -div(kappa grad psi_j) = 0 in K,    psi_j = x_j on the boundary of K,

solved with P1 elements on the fine triangles inside K.  The effective tensor is
either the averaged flux ``<kappa d psi_j / d x_l>_K`` or the energy form
``<grad psi_i . kappa grad psi_j>_K``; the two coincide for the discrete
Galerkin solution, and the energy form is stored.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import fem
from .grid import CoarseCellPatch, StructuredMesh, extract_patch
from .randfield import PermeabilityField


class HomogenizationError(RuntimeError):
    def __init__(self, failures: dict[int, Exception]):
        self.failures = failures
        cells = ", ".join(str(c) for c in sorted(failures))
        super().__init__(f"cell problems failed on cells [{cells}]")


@dataclass(frozen=True, eq=False)
class CellSolution:
    cell_index: int
    psi1: np.ndarray = field(repr=False)
    psi2: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class EffectiveTensorField:
    """Per-coarse-cell symmetric tensors in row-major cell order."""

    coarse_side: int
    tensors: np.ndarray = field(repr=False)  # (n_cells, 2, 2)

    @property
    def vector256(self) -> np.ndarray:
        return self.tensors.reshape(-1).copy()

    def per_triangle(self) -> np.ndarray:
        return np.repeat(self.tensors, 2, axis=0)

    @classmethod
    def from_vector(cls, vec, coarse_side: int = 8) -> "EffectiveTensorField":
        """Devectorise ``(k11, k12, k21, k22)`` blocks, averaging the off-diagonal pair."""
        t = np.asarray(vec, dtype=float).reshape(coarse_side * coarse_side, 2, 2)
        t = 0.5 * (t + t.transpose(0, 2, 1))
        return cls(coarse_side, t)


def _patch_coef(patch: CoarseCellPatch, fld: PermeabilityField) -> np.ndarray:
    return np.repeat(np.asarray(fld.fine_values)[patch.fine_cell_map], 2)


def solve_cell_problem(patch: CoarseCellPatch, fld: PermeabilityField, direction: int,
                       tol: float = 1e-12) -> np.ndarray:
    """Nodal values of ``psi_direction`` on ``patch.local_mesh``."""
    if direction not in (1, 2):
        raise ValueError("direction must be 1 or 2")
    mesh = patch.local_mesh
    A = fem.assemble_stiffness(mesh, _patch_coef(patch, fld))
    bnd = mesh.boundary_nodes
    A, rhs = fem.apply_dirichlet(A, np.zeros(mesh.n_nodes), bnd, mesh.nodes[bnd, direction - 1])
    psi = fem.solve_linear(A, rhs, tol=tol)
    psi[bnd] = mesh.nodes[bnd, direction - 1]
    return psi


def _grad_psi(mesh: StructuredMesh, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    g, area = fem.gradients(mesh)
    return np.einsum("tak,ta->tk", g, psi[mesh.triangles]), area


def mean_gradient(patch: CoarseCellPatch, psi) -> np.ndarray:
    """Cell average of ``grad psi``; equals ``e_j`` for ``psi_j`` by the divergence theorem."""
    grad, area = _grad_psi(patch.local_mesh, np.asarray(psi))
    return area @ grad / patch.local_mesh.side_length**2


def effective_tensor_flux(patch: CoarseCellPatch, fld: PermeabilityField, psi1, psi2) -> np.ndarray:
    """``K[j, l] = <kappa d psi_j / d x_l>_K`` by exact per-triangle integration."""
    kappa = _patch_coef(patch, fld)
    out = np.empty((2, 2))
    for j, psi in enumerate((psi1, psi2)):
        grad, area = _grad_psi(patch.local_mesh, np.asarray(psi))
        out[j] = (kappa * area) @ grad
    return out / patch.local_mesh.side_length**2


def effective_tensor_energy(patch: CoarseCellPatch, fld: PermeabilityField, psi1, psi2) -> np.ndarray:
    """``K[i, j] = <grad psi_i . kappa grad psi_j>_K``; symmetric by construction."""
    kappa = _patch_coef(patch, fld)
    g1, area = _grad_psi(patch.local_mesh, np.asarray(psi1))
    g2, _ = _grad_psi(patch.local_mesh, np.asarray(psi2))
    w = kappa * area
    k11 = w @ np.einsum("tk,tk->t", g1, g1)
    k22 = w @ np.einsum("tk,tk->t", g2, g2)
    k12 = w @ np.einsum("tk,tk->t", g1, g2)
    return np.array([[k11, k12], [k12, k22]]) / patch.local_mesh.side_length**2


def cell_solutions(fld: PermeabilityField, fine: StructuredMesh, coarse: StructuredMesh,
                   tol: float = 1e-12) -> tuple[list[CoarseCellPatch], np.ndarray]:
    """Solve all cell problems of one field together.

    The patches are disjoint, so their Dirichlet systems are stacked into a
    single block-diagonal matrix and solved for both directions at once.
    Returns the patches and psi values of shape ``(n_cells, n_local_nodes, 2)``.
    """
    patches = [extract_patch(fine, coarse, c) for c in range(coarse.n_cells)]
    local = patches[0].local_mesh
    nloc = local.n_nodes
    ncell = len(patches)
    # all patches are translates of one another: share one unit element template
    unit = fem.element_stiffness(local)
    kappa = np.stack([_patch_coef(p, fld) for p in patches])  # (ncell, nT)
    vals = (kappa[:, :, None, None] * unit[None]).reshape(ncell, -1)
    tri = local.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    offs = (np.arange(ncell) * nloc)[:, None]
    N = ncell * nloc
    A = sp.coo_matrix((vals.ravel(), ((rows + offs).ravel(), (cols + offs).ravel())),
                      shape=(N, N)).tocsr()

    bnd_local = local.boundary_nodes
    bnd = (bnd_local[None, :] + offs).ravel()
    coords = np.concatenate([p.local_mesh.nodes[bnd_local] for p in patches])
    try:
        Ad, r1 = fem.apply_dirichlet(A, np.zeros(N), bnd, coords[:, 0])
        _, r2 = fem.apply_dirichlet(A, np.zeros(N), bnd, coords[:, 1])
        psi = fem.solve_linear(Ad, np.column_stack([r1, r2]), tol=tol)
        psi[bnd] = coords  # CG leaves round-off on the identity rows
    except fem.SolverError:
        failures = {}
        for p in patches:
            for d in (1, 2):
                try:
                    solve_cell_problem(p, fld, d, tol=tol)
                except fem.SolverError as exc:
                    failures[p.coarse_cell_index] = exc
        raise HomogenizationError(failures or {-1: RuntimeError("batched solve failed")})
    return patches, psi.reshape(ncell, nloc, 2)


def effective_field(fld: PermeabilityField, fine: StructuredMesh, coarse: StructuredMesh,
                    tol: float = 1e-12) -> EffectiveTensorField:
    patches, psi = cell_solutions(fld, fine, coarse, tol=tol)
    tensors = np.empty((len(patches), 2, 2))
    for c, p in enumerate(patches):
        tensors[c] = effective_tensor_energy(p, fld, psi[c, :, 0], psi[c, :, 1])
    return EffectiveTensorField(coarse.n_side, tensors)


def write_effective_csv(path, eff: EffectiveTensorField) -> None:
    n = eff.coarse_side
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell_i", "cell_j", "k11", "k12", "k22"])
        for c, t in enumerate(eff.tensors):
            w.writerow([c % n, c // n, repr(float(t[0, 0])), repr(float(t[0, 1])), repr(float(t[1, 1]))])
