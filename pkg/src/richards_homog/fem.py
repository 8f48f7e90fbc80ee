"""P1 finite elements on structured triangular meshes.

Matrices are ``scipy.sparse.csr_matrix``; element contributions are summed in
COO form so that symmetric element matrices give exactly symmetric globals.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .grid import StructuredMesh

_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


class SolverError(RuntimeError):
    """The iterative solver did not reach its tolerance."""


class IndefiniteMatrixError(SolverError):
    """CG met a direction of non-positive curvature."""


def gradients(mesh: StructuredMesh) -> tuple[np.ndarray, np.ndarray]:
    """Per-triangle basis gradients ``(nT, 3, 2)`` and areas ``(nT,)``."""
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    g = np.empty((mesh.n_triangles, 3, 2))
    g[:, 0, 0] = y[:, 1] - y[:, 2]
    g[:, 0, 1] = x[:, 2] - x[:, 1]
    g[:, 1, 0] = y[:, 2] - y[:, 0]
    g[:, 1, 1] = x[:, 0] - x[:, 2]
    g[:, 2, 0] = y[:, 0] - y[:, 1]
    g[:, 2, 1] = x[:, 1] - x[:, 0]
    g /= det[:, None, None]
    return g, 0.5 * det


def _scatter(mesh: StructuredMesh, local: np.ndarray) -> sp.csr_matrix:
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.n_nodes
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def element_stiffness(mesh: StructuredMesh, coef=None) -> np.ndarray:
    """Element matrices ``(nT, 3, 3)`` for scalar ``(nT,)`` or tensor ``(nT, 2, 2)`` coefficients."""
    g, area = gradients(mesh)
    if coef is None:
        kg = g
    else:
        coef = np.asarray(coef, dtype=float)
        if coef.shape[0] != mesh.n_triangles:
            raise ValueError(
                f"coefficient has {coef.shape[0]} entries, mesh has {mesh.n_triangles} triangles")
        if coef.ndim == 1:
            kg = g * coef[:, None, None]
        elif coef.shape[1:] == (2, 2):
            kg = np.einsum("tkl,tbl->tbk", coef, g)
        else:
            raise ValueError(f"unsupported coefficient shape {coef.shape}")
    # (g_a . K g_b) and (g_b . K g_a) agree bit-for-bit only when K is symmetric;
    # average the two products so the element matrix is exactly symmetric
    local = np.einsum("tak,tbk->tab", g, kg)
    local = 0.5 * (local + local.transpose(0, 2, 1))
    return local * area[:, None, None]


def assemble_mass(mesh: StructuredMesh) -> sp.csr_matrix:
    _, area = gradients(mesh)
    return _scatter(mesh, area[:, None, None] * _MASS_REF)


def assemble_stiffness(mesh: StructuredMesh, coef) -> sp.csr_matrix:
    """Stiffness matrix of ``-div(coef grad u)``; ``coef`` is per triangle."""
    return _scatter(mesh, element_stiffness(mesh, coef))


def assemble_load(mesh: StructuredMesh, f) -> np.ndarray:
    """Load vector by one-point centroid quadrature.

    ``f`` is a vectorised callable on points of shape ``(m, 2)`` or a scalar.
    """
    cen = mesh.centroids()
    vals = f(cen) if callable(f) else np.full(len(cen), float(f))
    vals = np.broadcast_to(np.asarray(vals, dtype=float), (len(cen),))
    _, area = gradients(mesh)
    contrib = np.repeat((area * vals / 3.0)[:, None], 3, axis=1)
    return np.bincount(mesh.triangles.ravel(), weights=contrib.ravel(), minlength=mesh.n_nodes)


def apply_dirichlet(system: sp.spmatrix, rhs: np.ndarray, boundary_nodes, value=0.0):
    """Replace boundary rows/columns by identity and lift known values to the rhs.

    ``value`` is a scalar or one value per entry of ``boundary_nodes``.
    ``rhs`` may be a vector or an ``(n, k)`` block of right-hand sides.
    """
    n = system.shape[0]
    bnd = np.asarray(boundary_nodes, dtype=np.int64)
    g = np.zeros(n)
    g[bnd] = value
    rhs = np.asarray(rhs, dtype=float)
    lifted = system @ g
    keep = np.ones(n)
    keep[bnd] = 0.0
    D = sp.diags(keep)
    A = (D @ system @ D + sp.diags(1.0 - keep)).tocsr()
    A.eliminate_zeros()
    if rhs.ndim == 1:
        out = (rhs - lifted) * keep
        out[bnd] = g[bnd]
    else:
        out = (rhs - lifted[:, None]) * keep[:, None]
        out[bnd] = g[bnd, None]
    return A, out


def solve_linear(system: sp.spmatrix, rhs: np.ndarray, tol: float = 1e-10, max_iter: int | None = None):
    """Jacobi-preconditioned conjugate gradients.

    Solves every column of a 2-D ``rhs`` independently.  Stops once
    ``||b - A x|| <= tol * ||b||`` for each column.

    Raises
    ------
    IndefiniteMatrixError
        If a search direction has non-positive curvature.
    SolverError
        If ``max_iter`` (default ``10 * n``) iterations are exhausted.
    """
    A = sp.csr_matrix(system)
    b = np.asarray(rhs, dtype=float)
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    n, k = b.shape
    if max_iter is None:
        max_iter = 10 * n
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise IndefiniteMatrixError("matrix has non-positive diagonal entries")
    inv_d = 1.0 / diag

    x = np.zeros_like(b)
    bnorm = np.linalg.norm(b, axis=0)
    target = tol * bnorm
    r = b.copy()
    active = bnorm > 0
    z = inv_d[:, None] * r
    p = z.copy()
    rz = np.einsum("ij,ij->j", r, z)
    it = 0
    while True:
        rnorm = np.linalg.norm(r, axis=0)
        active &= rnorm > target
        if not active.any():
            break
        if it >= max_iter:
            worst = float(np.max(rnorm[active] / bnorm[active]))
            raise SolverError(f"CG did not converge in {max_iter} iterations (relative residual {worst:.3e})")
        Ap = A @ p
        pAp = np.einsum("ij,ij->j", p, Ap)
        if np.any(pAp[active] <= 0):
            raise IndefiniteMatrixError("CG breakdown: matrix is not positive definite")
        alpha = np.where(active, rz / np.where(active, pAp, 1.0), 0.0)
        x += alpha * p
        r -= alpha * Ap
        z = inv_d[:, None] * r
        rz_new = np.einsum("ij,ij->j", r, z)
        beta = np.where(active, rz_new / np.where(rz != 0, rz, 1.0), 0.0)
        p = z + beta * p
        rz = rz_new
        it += 1
    return x[:, 0] if vector else x


def discrete_norms(mesh: StructuredMesh, v: np.ndarray, mass=None, stiffness=None) -> tuple[float, float]:
    """``(L2 norm, H1 seminorm)`` of a nodal P1 function."""
    v = np.asarray(v, dtype=float)
    C = assemble_mass(mesh) if mass is None else mass
    A1 = assemble_stiffness(mesh, np.ones(mesh.n_triangles)) if stiffness is None else stiffness
    l2 = float(v @ (C @ v))
    h1 = float(v @ (A1 @ v))
    return float(np.sqrt(max(l2, 0.0))), float(np.sqrt(max(h1, 0.0)))
