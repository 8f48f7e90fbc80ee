"""Log-normal permeability fields from a truncated Karhunen-Loeve expansion."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .grid import StructuredMesh

FEATURE_SIDE = 16


@dataclass(frozen=True)
class CovarianceSpec:
    sigma2: float = 2.0
    eta1: float = 0.2
    eta2: float = 0.2

    def __post_init__(self):
        if self.sigma2 <= 0 or self.eta1 <= 0 or self.eta2 <= 0:
            raise ValueError(f"covariance parameters must be positive: {self}")

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Covariance matrix between point sets ``x (m, 2)`` and ``y (k, 2)``."""
        d1 = (x[:, None, 0] - y[None, :, 0]) / self.eta1
        d2 = (x[:, None, 1] - y[None, :, 1]) / self.eta2
        return self.sigma2 * np.exp(-np.sqrt(d1 * d1 + d2 * d2))


@dataclass(frozen=True, eq=False)
class KLEBasis:
    spec: CovarianceSpec
    grid_side: int
    sample_points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eigenfunctions: np.ndarray = field(repr=False)  # (n_points, n_modes)
    energy_fraction: float = 1.0
    all_eigenvalues: np.ndarray = field(repr=False, default=None)

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues)

    def upsilon(self, zeta: np.ndarray) -> np.ndarray:
        """Expansion values at the sample points; ``zeta`` is ``(n_modes,)`` or ``(draws, n_modes)``."""
        return (np.asarray(zeta) * np.sqrt(self.eigenvalues)) @ self.eigenfunctions.T


@dataclass(frozen=True, eq=False)
class PermeabilityField:
    fine_values: np.ndarray = field(repr=False)
    n_side: int
    kle_coefficients: np.ndarray = field(repr=False)
    seed: int | None = None

    @property
    def value_range(self) -> tuple[float, float]:
        return float(self.fine_values.min()), float(self.fine_values.max())

    @property
    def feature_vector(self) -> np.ndarray:
        return to_feature_vector(self)

    def per_triangle(self) -> np.ndarray:
        return np.repeat(self.fine_values, 2)


def lattice_points(grid_side: int) -> np.ndarray:
    c = (np.arange(grid_side) + 0.5) / grid_side
    x1, x2 = np.meshgrid(c, c)
    return np.column_stack([x1.ravel(), x2.ravel()])


def build_kle_basis(spec: CovarianceSpec, grid_side: int = 32, energy_threshold: float = 0.95) -> KLEBasis:
    """Nystrom discretisation of the covariance eigenproblem on the unit square.

    Uses ``grid_side**2`` cell-centre points with equal weights and keeps the
    fewest leading modes whose eigenvalues reach ``energy_threshold`` of the total.
    """
    if grid_side < 2:
        raise ValueError("grid_side must be at least 2")
    if not 0 < energy_threshold <= 1:
        raise ValueError("energy_threshold must lie in (0, 1]")
    pts = lattice_points(grid_side)
    w = 1.0 / grid_side**2
    R = spec(pts, pts)
    try:
        lam, vec = np.linalg.eigh(w * R)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("covariance eigendecomposition did not converge") from exc
    order = np.argsort(lam)[::-1]
    lam = np.clip(lam[order], 0.0, None)
    vec = vec[:, order]
    total = lam.sum()
    cum = np.cumsum(lam) / total
    if energy_threshold >= 1.0:
        n_keep = len(lam)
    else:
        n_keep = int(np.searchsorted(cum, energy_threshold) + 1)
        n_keep = min(n_keep, len(lam))
    phi = vec[:, :n_keep] / np.sqrt(w)
    lam.setflags(write=False)
    return KLEBasis(spec, grid_side, pts, np.full(len(pts), w), lam[:n_keep].copy(),
                    phi, float(cum[n_keep - 1]), lam)


def energy_fractions(basis: KLEBasis) -> np.ndarray:
    lam = basis.all_eigenvalues
    return np.cumsum(lam) / lam.sum()


def interpolate_to(basis: KLEBasis, nodal: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Bilinear interpolation from the sample lattice, clamped at the outer half-cell."""
    n = basis.grid_side
    grid = np.asarray(nodal).reshape(n, n)  # [row (x2), col (x1)]
    s = np.clip(points * n - 0.5, 0.0, n - 1.0)
    i0 = np.minimum(np.floor(s).astype(np.int64), n - 2)
    t = s - i0
    cx, cy = i0[:, 0], i0[:, 1]
    tx, ty = t[:, 0], t[:, 1]
    return ((1 - tx) * (1 - ty) * grid[cy, cx] + tx * (1 - ty) * grid[cy, cx + 1]
            + (1 - tx) * ty * grid[cy + 1, cx] + tx * ty * grid[cy + 1, cx + 1])


def field_from_coefficients(basis: KLEBasis, zeta: np.ndarray, out_range, fine: StructuredMesh,
                            seed: int | None = None) -> PermeabilityField:
    lo, hi = float(out_range[0]), float(out_range[1])
    if lo <= 0 or hi < lo:
        raise ValueError(f"invalid output range {out_range}")
    ups = interpolate_to(basis, basis.upsilon(zeta), fine.cell_centers())
    umin, umax = ups.min(), ups.max()
    if umax - umin <= 1e-12 * max(1.0, abs(umax)):
        values = np.full(ups.shape, np.sqrt(lo * hi))
    else:
        a, b = np.log(lo), np.log(hi)
        logk = a + (ups - umin) * ((b - a) / (umax - umin))
        values = np.clip(np.exp(logk), lo, hi)
        # pin the extremes so the range is met to the last bit
        values[ups == umin] = lo
        values[ups == umax] = hi
    values.setflags(write=False)
    return PermeabilityField(values, fine.n_side, np.asarray(zeta, dtype=float), seed)


def sample_field(basis: KLEBasis, rng_seed: int, out_range=(1000.0, 4200.0),
                 fine: StructuredMesh | None = None) -> PermeabilityField:
    """Draw one field: standard-normal KLE coefficients, then a log-affine map onto ``out_range``."""
    if fine is None:
        from .grid import build_mesh
        fine = build_mesh(128)
    rng = np.random.default_rng(rng_seed)
    zeta = rng.standard_normal(basis.n_modes)
    return field_from_coefficients(basis, zeta, out_range, fine, seed=rng_seed)


def to_feature_vector(fld: PermeabilityField, side: int = FEATURE_SIDE) -> np.ndarray:
    """Block means of the fine cells on a ``side x side`` grid, row-major."""
    n = fld.n_side
    if n % side != 0:
        raise ValueError(f"fine side {n} is not divisible by {side}")
    b = n // side
    grid = np.asarray(fld.fine_values).reshape(side, b, side, b)
    return grid.mean(axis=(1, 3)).ravel()


def write_field_csv(path, fld: PermeabilityField, fine: StructuredMesh) -> None:
    centers = fine.cell_centers()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "value"])
        for (x1, x2), v in zip(centers, fld.fine_values):
            w.writerow([repr(float(x1)), repr(float(x2)), repr(float(v))])
