import numpy as np
import pytest

from richards_homog import fem
from richards_homog.grid import build_mesh, extract_patch
from richards_homog.homogenize import (EffectiveTensorField, _patch_coef, cell_solutions,
                                       effective_field, effective_tensor_energy,
                                       effective_tensor_flux, mean_gradient, solve_cell_problem)
from richards_homog.randfield import PermeabilityField


def _field(values):
    values = np.asarray(values, dtype=float)
    return PermeabilityField(values, int(round(np.sqrt(values.size))), np.zeros(1))


def _checkerboard(block=8, n=128):
    c = build_mesh(n).cell_centers()
    i = np.floor(c[:, 0] * n / block).astype(int)
    j = np.floor(c[:, 1] * n / block).astype(int)
    return np.where((i + j) % 2 == 0, 1000.0, 4200.0)


def _rotate(values, n=128):
    # 90 degree counter-clockwise rotation of a row-major cell field
    return np.rot90(values.reshape(n, n)).ravel()


@pytest.fixture(scope="module")
def eff42(field42, fine, coarse):
    return effective_field(field42, fine, coarse)


def test_constant_cell_is_linear(fine, coarse):
    fld = _field(np.full(fine.n_cells, 1234.0))
    p = extract_patch(fine, coarse, 10)
    for d in (1, 2):
        psi = solve_cell_problem(p, fld, d)
        np.testing.assert_allclose(psi, p.local_mesh.nodes[:, d - 1], atol=1e-10)


def test_boundary_values_and_residual(field42, fine, coarse):
    p = extract_patch(fine, coarse, 27)
    m = p.local_mesh
    A = fem.assemble_stiffness(m, _patch_coef(p, field42))
    inner = np.setdiff1d(np.arange(m.n_nodes), m.boundary_nodes)
    for d in (1, 2):
        psi = solve_cell_problem(p, field42, d)
        assert np.array_equal(psi[m.boundary_nodes], m.nodes[m.boundary_nodes, d - 1])
        r = (A @ psi)[inner]
        g = np.zeros(m.n_nodes)
        g[m.boundary_nodes] = m.nodes[m.boundary_nodes, d - 1]
        scale = np.linalg.norm((A @ g)[inner])
        assert np.linalg.norm(r) <= 1e-10 * scale


def test_layered_field_direction_one(fine, coarse):
    x2 = fine.cell_centers()[:, 1]
    fld = _field(1000 + 3200 * (np.sin(40 * x2) ** 2))
    p = extract_patch(fine, coarse, 35)
    psi = solve_cell_problem(p, fld, 1)
    np.testing.assert_allclose(psi, p.local_mesh.nodes[:, 0], atol=1e-10)


def test_constant_field_gives_scaled_identity(fine, coarse):
    eff = effective_field(_field(np.full(fine.n_cells, 777.0)), fine, coarse)
    np.testing.assert_allclose(eff.tensors, np.broadcast_to(777.0 * np.eye(2), (64, 2, 2)), atol=1e-10 * 777)


def test_doubling_is_exact(field42, fine, coarse):
    p = extract_patch(fine, coarse, 5)
    psi = [solve_cell_problem(p, field42, d) for d in (1, 2)]
    doubled = _field(2 * field42.fine_values)
    psi2 = [solve_cell_problem(p, doubled, d) for d in (1, 2)]
    # boundary identity rows do not scale, so agreement is to round-off
    np.testing.assert_allclose(psi[0], psi2[0], rtol=0, atol=1e-13)
    np.testing.assert_allclose(2 * effective_tensor_flux(p, field42, *psi),
                               effective_tensor_flux(p, doubled, *psi2), rtol=1e-12)


@pytest.mark.parametrize("s", [0.0, 0.37, -2.5, 11.0])
def test_haverkamp_factor_commutes(field42, fine, coarse, eff42, s):
    k = 1.0 / (1.0 + abs(s))
    scaled = effective_field(_field(k * field42.fine_values), fine, coarse)
    np.testing.assert_allclose(scaled.tensors, k * eff42.tensors, rtol=1e-10)


def test_checkerboard_symmetry(fine, coarse):
    cb = _checkerboard()
    t = effective_field(_field(cb), fine, coarse).tensors
    np.testing.assert_allclose(t[:, 0, 0], t[:, 1, 1], rtol=1e-8)
    # swapping the two materials mirrors each cell in x1: off-diagonal flips sign
    swapped = effective_field(_field(5200.0 - cb), fine, coarse).tensors
    np.testing.assert_allclose(swapped[:, 0, 0], t[:, 0, 0], rtol=1e-8)
    np.testing.assert_allclose(swapped[:, 0, 1], -t[:, 0, 1], rtol=1e-8)
    # rotating the field by 90 degrees swaps the axes: the solver is its own oracle
    rot = effective_field(_field(_rotate(cb)), fine, coarse)
    np.testing.assert_allclose(np.sort(rot.tensors[:, 0, 0]), np.sort(t[:, 1, 1]), rtol=1e-8)


@pytest.mark.xfail(strict=True, reason="2x2-block checkerboard cells are mirror-asymmetric; see notes")
def test_checkerboard_off_diagonal_vanishes(fine, coarse):
    t = effective_field(_field(_checkerboard()), fine, coarse).tensors
    assert np.all(np.abs(t[:, 0, 1]) <= 1e-8 * t[:, 0, 0])


def test_rotation_on_random_field(field42, fine, coarse, eff42):
    rot = effective_field(_field(_rotate(field42.fine_values)), fine, coarse)
    t = eff42.tensors.reshape(8, 8, 2, 2)
    r = rot.tensors.reshape(8, 8, 2, 2)
    # cell (row j, col i) maps to (row i, col 7 - j) under the same rot90
    t_rot = np.rot90(t, axes=(0, 1))
    np.testing.assert_allclose(r[..., 0, 0], t_rot[..., 1, 1], rtol=1e-8)
    np.testing.assert_allclose(r[..., 1, 1], t_rot[..., 0, 0], rtol=1e-8)
    np.testing.assert_allclose(r[..., 0, 1], -t_rot[..., 0, 1], rtol=1e-7, atol=1e-8 * t.max())


def test_flux_energy_bounds_and_mean_gradient(field42, fine, coarse):
    patches, psi = cell_solutions(field42, fine, coarse)
    qs = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([1.0, 1.0]) / np.sqrt(2)]
    for c, p in enumerate(patches):
        p1, p2 = psi[c, :, 0], psi[c, :, 1]
        np.testing.assert_allclose(mean_gradient(p, p1), [1, 0], atol=1e-10)
        np.testing.assert_allclose(mean_gradient(p, p2), [0, 1], atol=1e-10)
        E = effective_tensor_energy(p, field42, p1, p2)
        F = effective_tensor_flux(p, field42, p1, p2)
        np.testing.assert_allclose(F, E, rtol=1e-9, atol=1e-9 * E[0, 0])
        kap = field42.fine_values[p.fine_cell_map]
        for q in qs:
            v = q @ E @ q
            assert kap.min() * (1 - 1e-12) <= v <= kap.mean() * (1 + 1e-8)


def test_batched_matches_single(field42, fine, coarse, eff42):
    p = extract_patch(fine, coarse, 44)
    psi = [solve_cell_problem(p, field42, d) for d in (1, 2)]
    np.testing.assert_allclose(effective_tensor_energy(p, field42, *psi), eff42.tensors[44], rtol=1e-9)


def test_seed42_entry_range(eff42):
    v = eff42.vector256
    d = np.concatenate([v[0::4], v[3::4]])
    assert np.all(d >= 1000) and np.all(d <= 4200 * 1.0001)
    np.testing.assert_array_equal(v[1::4], v[2::4])
    assert np.all(np.linalg.eigvalsh(eff42.tensors) > 0)


def test_vector_round_trip(eff42):
    back = EffectiveTensorField.from_vector(eff42.vector256, 8)
    np.testing.assert_array_equal(back.tensors, eff42.tensors)
    assert back.per_triangle().shape == (128, 2, 2)


def test_bad_direction(field42, fine, coarse):
    with pytest.raises(ValueError):
        solve_cell_problem(extract_patch(fine, coarse, 0), field42, 3)
