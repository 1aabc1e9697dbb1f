import io

import numpy as np
import pytest
import scipy.linalg

from specjump import (GridMismatch, NonCommensurateShift, SpectralGrid,
                      SymbolTable, WaveField, WrongRepresentation,
                      apply_propagator, grid_shift, hardy_project,
                      jump_left_of, keep_left_of, load_field, make_field,
                      preset_matrix, save_field, scalar_symbol,
                      seam_guard_mass, to_momentum, to_position, transform)
from specjump.field import (MOMENTUM, POSITION, apply_on_mask, dump_field_csv,
                            generator_phase, reflect_through_origin)


def gaussian_field(grid, center=0.0, width=1.0, momentum=0.0, components=1):
    env = np.exp(-((grid.z - center) ** 2) / (2 * width**2))
    vals = (env * np.exp(1j * momentum * grid.z))[:, None]
    if components > 1:
        mix = np.ones(components) / np.sqrt(components)
        vals = vals * mix[None, :]
    return make_field(grid, vals)


def test_grid_relations():
    g = SpectralGrid(16.0, 1024)
    assert g.dz * g.dk * g.points == pytest.approx(2 * np.pi, rel=1e-15)
    assert g.z[0] == -16.0
    assert g.z[g.zero_index] == 0.0
    assert g.k.min() == pytest.approx(-np.pi * g.points / (2 * g.half_width))
    assert g.k.max() == pytest.approx(np.pi * (g.points - 2) / (2 * g.half_width))


def test_grid_rejects_bad_points():
    with pytest.raises(ValueError):
        SpectralGrid(4.0, 100)  # not a power of two
    with pytest.raises(ValueError):
        SpectralGrid(-1.0, 64)


def test_transform_round_trip():
    g = SpectralGrid(8.0, 256)
    rng = np.random.default_rng(0)
    f = make_field(g, rng.normal(size=(256, 2)) + 1j * rng.normal(size=(256, 2)))
    back = transform(transform(f, MOMENTUM), POSITION)
    assert np.abs(back.values - f.values).max() < 1e-12


def test_transform_is_strict_about_representation():
    g = SpectralGrid(8.0, 64)
    f = gaussian_field(g)
    with pytest.raises(WrongRepresentation):
        transform(f, POSITION)


def test_parseval():
    g = SpectralGrid(8.0, 512)
    rng = np.random.default_rng(1)
    f = make_field(g, rng.normal(size=(512, 3)) + 1j * rng.normal(size=(512, 3)))
    fk = to_momentum(f)
    assert fk.norm_squared() == pytest.approx(f.norm_squared(), rel=1e-10)


def test_single_mode_lands_in_one_momentum_bin():
    g = SpectralGrid(8.0, 128)
    k1 = g.dk * 5.0
    f = make_field(g, np.exp(1j * k1 * g.z)[:, None])
    fk = to_momentum(f)
    mags = np.abs(fk.values[:, 0])
    j = int(np.argmax(mags))
    assert g.k[j] == pytest.approx(k1)
    others = np.delete(mags, j)
    assert others.max() < 1e-12 * mags[j]


def test_apply_propagator_eigenwave_phase():
    # a single plane wave times a symbol eigenvector picks up exp(-i e t)
    g = SpectralGrid(8.0, 128)
    mass = 1.0
    table = SymbolTable(g, np.sqrt(g.k**2 + mass**2)[:, None, None].astype(complex))
    k1 = g.dk * (-7.0)
    f = make_field(g, np.exp(1j * k1 * g.z)[:, None])
    out = apply_propagator(f, table, 0.3)
    expected = np.exp(-1j * 0.3 * np.sqrt(k1**2 + mass**2)) * f.values
    assert np.abs(out.values - expected).max() < 1e-12


def test_apply_propagator_matches_dense_oracle():
    # independent path: explicit mode projectors plus scipy's Pade expm
    g = SpectralGrid(2.0, 8)
    n = 2
    rng = np.random.default_rng(9)
    entries = rng.normal(size=(8, n, n)) + 1j * rng.normal(size=(8, n, n))
    entries = (entries + entries.conj().transpose(0, 2, 1)) / 2
    table = SymbolTable(g, entries)

    modes = np.exp(1j * np.outer(g.z, g.k)) / np.sqrt(g.points)  # (z, mode)
    dense = np.zeros((8 * n, 8 * n), dtype=complex)
    for j in range(8):
        proj = np.outer(modes[:, j], modes[:, j].conj())
        dense += np.kron(proj, entries[j])
    t = 0.37
    u = scipy.linalg.expm(-1j * t * dense)

    f = make_field(g, rng.normal(size=(8, n)) + 1j * rng.normal(size=(8, n)))
    out = apply_propagator(f, table, t)
    expected = (u @ f.values.reshape(-1)).reshape(8, n)
    assert np.abs(out.values - expected).max() < 1e-10


def test_apply_propagator_group_law_and_norm():
    g = SpectralGrid(8.0, 128)
    table = SymbolTable(g, np.abs(g.k)[:, None, None].astype(complex))
    f = gaussian_field(g, width=1.5)
    once = apply_propagator(apply_propagator(f, table, 0.4), table, 0.8)
    both = apply_propagator(f, table, 1.2)
    assert np.abs(once.values - both.values).max() < 1e-10
    assert once.norm() == pytest.approx(f.norm(), rel=1e-12)


def test_apply_propagator_grid_mismatch():
    g1, g2 = SpectralGrid(8.0, 64), SpectralGrid(8.0, 128)
    table = scalar_symbol(g2, np.abs(g2.k))
    with pytest.raises(GridMismatch):
        apply_propagator(gaussian_field(g1), table, 1.0)


def test_hardy_project_single_positive_mode_dies_under_minus():
    g = SpectralGrid(8.0, 64)
    f = make_field(g, np.exp(1j * 2.0 * np.pi / 8.0 * 4 * g.z)[:, None])  # k = +2 pi/4... k>0
    out = hardy_project(f, "minus", 0.0)
    assert out.norm() < 1e-12


def test_hardy_project_preserves_left_movers():
    g = SpectralGrid(8.0, 128)
    f = gaussian_field(g, momentum=-4.0, width=1.5)
    out = hardy_project(f, "minus", 0.0)
    # a packet at k ~ -4 with spectral width ~ 0.7 has no mass at k >= 0
    assert out.norm_squared() == pytest.approx(f.norm_squared(), rel=1e-12)


def test_hardy_projections_sum_to_identity_at_cutoff_zero():
    g = SpectralGrid(8.0, 64)
    rng = np.random.default_rng(3)
    f = make_field(g, rng.normal(size=(64, 2)) + 1j * rng.normal(size=(64, 2)))
    minus = hardy_project(f, "minus", 0.0)
    plus = hardy_project(f, "plus", 0.0)
    assert np.abs(minus.values + plus.values - f.values).max() < 1e-12


def test_hardy_project_idempotent_and_self_adjoint():
    g = SpectralGrid(8.0, 128)
    rng = np.random.default_rng(4)
    f = make_field(g, rng.normal(size=(128, 2)) + 1j * rng.normal(size=(128, 2)))
    h = make_field(g, rng.normal(size=(128, 2)) + 1j * rng.normal(size=(128, 2)))
    pf = hardy_project(f, "minus", 1.5)
    ppf = hardy_project(pf, "minus", 1.5)
    assert np.abs(ppf.values - pf.values).max() < 1e-12
    ph = hardy_project(h, "minus", 1.5)
    inner = lambda a, b: complex(g.dz * (a.values.conj() * b.values).sum())
    assert abs(inner(pf, h) - inner(f, ph)) < 1e-10 * f.norm() * h.norm()


def test_kzero_mode_belongs_to_minus_class():
    g = SpectralGrid(8.0, 64)
    f = make_field(g, np.ones((64, 1)))  # pure k = 0 content
    assert hardy_project(f, "minus", 0.0).norm() == pytest.approx(f.norm())
    assert hardy_project(f, "plus", 0.0).norm() == 0.0


def test_grid_shift_exact_relabeling():
    g = SpectralGrid(8.0, 64)
    rng = np.random.default_rng(5)
    f = make_field(g, rng.normal(size=(64, 1)))
    out = grid_shift(f, 4 * g.dz)
    assert np.array_equal(out.values, np.roll(f.values, -4, axis=0))
    # round trip is exact, not approximately equal
    back = grid_shift(out, -4 * g.dz)
    assert np.array_equal(back.values, f.values)


def test_grid_shift_rejects_noncommensurate():
    g = SpectralGrid(8.0, 64)
    f = gaussian_field(g)
    with pytest.raises(NonCommensurateShift):
        grid_shift(f, 0.37 * g.dz)


def test_grid_shift_commutes_with_propagator():
    g = SpectralGrid(8.0, 256)
    table = scalar_symbol(g, np.sqrt(g.k**2 + 1.0))
    f = gaussian_field(g, center=-2.0, width=1.0, momentum=-2.0)
    a = 8 * g.dz
    lhs = grid_shift(apply_propagator(f, table, 0.5), a)
    rhs = apply_propagator(grid_shift(f, a), table, 0.5)
    assert np.abs(lhs.values - rhs.values).max() < 1e-12


def test_jump_left_of_left_closed_convention():
    g = SpectralGrid(8.0, 64)
    f = make_field(g, np.ones((64, 2)))
    s = preset_matrix("pauli-x")
    out = jump_left_of(f, 0.0, s)
    zi = g.zero_index
    # sample exactly on the threshold is untouched
    assert np.array_equal(out.values[zi], f.values[zi])
    assert np.array_equal(out.values[zi - 1], f.values[zi - 1] @ s.T)
    # squares to the squared jump on the indicator set
    twice = jump_left_of(out, 0.0, s)
    expected = jump_left_of(f, 0.0, s @ s)
    assert np.abs(twice.values - expected.values).max() < 1e-15


def test_jump_left_of_unitary_preserves_norm():
    g = SpectralGrid(8.0, 128)
    f = gaussian_field(g, components=2)
    out = jump_left_of(f, 0.5, preset_matrix("pauli-x"))
    assert out.norm() == pytest.approx(f.norm(), rel=1e-14)


def test_keep_left_of_cut():
    g = SpectralGrid(8.0, 64)
    f = make_field(g, np.ones((64, 1)))
    out = keep_left_of(f, 0.0)
    assert np.all(out.values[g.zero_index:] == 0)
    assert np.all(out.values[: g.zero_index] == 1)


def test_generator_phase_matches_matrix_loop():
    g = SpectralGrid(4.0, 32)
    ham = preset_matrix("pauli-z") * 0.7 + preset_matrix("pauli-x") * 0.2
    eig = np.linalg.eigh(ham)
    rng = np.random.default_rng(6)
    f = make_field(g, rng.normal(size=(32, 2)) + 1j * rng.normal(size=(32, 2)))
    out = generator_phase(f, (eig.eigenvalues, eig.eigenvectors), scale=1.0)
    for j in [0, 5, 16, 31]:
        u = scipy.linalg.expm(-1j * g.z[j] * ham)
        assert np.abs(out.values[j] - u @ f.values[j]).max() < 1e-13


def test_reflect_through_origin():
    g = SpectralGrid(8.0, 64)
    f = make_field(g, (g.z**3)[:, None])  # odd function
    out = reflect_through_origin(f)
    inner = slice(1, 64)  # the z = -L sample has no mirror on the grid
    assert np.abs(out.values[inner] + f.values[inner]).max() < 1e-12


def test_seam_guard_mass():
    g = SpectralGrid(8.0, 256)
    centered = gaussian_field(g, center=0.0, width=0.5)
    assert seam_guard_mass(centered) < 1e-12
    at_seam = gaussian_field(g, center=7.5, width=0.5)
    assert seam_guard_mass(at_seam) > 0.5


def test_field_serialization_round_trip(tmp_path):
    g = SpectralGrid(8.0, 64)
    rng = np.random.default_rng(8)
    f = WaveField(g, rng.normal(size=(64, 3)) + 1j * rng.normal(size=(64, 3)), MOMENTUM)
    p = tmp_path / "field.bin"
    save_field(f, p)
    loaded = load_field(p)
    assert loaded.representation == MOMENTUM
    assert loaded.grid.same_as(g)
    assert np.array_equal(loaded.values, f.values)


def test_field_csv_dump():
    g = SpectralGrid(2.0, 8)
    f = make_field(g, np.arange(8)[:, None] * (1 + 2j))
    buf = io.StringIO()
    dump_field_csv(f, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "z,re_psi_0,im_psi_0"
    assert len(lines) == 9
    cells = lines[1].split(",")
    assert float(cells[0]) == -2.0 and float(cells[1]) == 0.0


def test_apply_on_mask_requires_position():
    g = SpectralGrid(2.0, 8)
    f = WaveField(g, np.ones((8, 1)), MOMENTUM)
    with pytest.raises(WrongRepresentation):
        apply_on_mask(f, np.ones(8, dtype=bool), np.eye(1))
