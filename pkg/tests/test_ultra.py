"""Recentred symbols, transport convergence, the limit wave, jump equation."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from specjump import (ConfigError, LimitSweepConfig, MOMENTUM, ModelSpec,
                      NonCommensurateShift, NonpositiveTolerance,
                      NotInInductiveClass, SpectralGrid, SupportViolation,
                      UnnormalizedAmplitudes, apply_constant_matrix,
                      dressed_propagate, gaussian_packet, generator_phase,
                      grid_shift, jump_equation_residual, kappa_threshold,
                      limit_error_integral, limit_truncated_chi, make_field,
                      omega_symbol, preset_matrix, run_kappa_sweep,
                      solve_jump_transport, sup_phase_factor, to_momentum)
from specjump.errors import GridMismatch
from specjump.linalg import evolve
from specjump.reflect import DressedSpec

CUTOFF = 5.0


def scalar_spec(mass=1.0):
    return DressedSpec(ModelSpec(np.zeros((1, 1)), np.eye(1), mass))


def pauli_spec(mass=0.0):
    return DressedSpec(ModelSpec(preset_matrix("pauli-z"),
                                 preset_matrix("pauli-x"), mass))


def class_packet(grid, amplitudes=1.0, center=0.0, width=1.5, momentum=-2.0):
    # momentum spread 1/width: carrier sits 10+ spreads below the cutoff 5
    return gaussian_packet(grid, center, width, amplitudes, momentum)


def unit_momentum(field):
    g = to_momentum(field)
    return g.with_values(g.values / g.norm())


def test_omega_tables_reflection_identity_and_hermiticity():
    grid = SpectralGrid(4.0, 64)
    spec = DressedSpec(ModelSpec(preset_matrix("pauli-z"),
                                 preset_matrix("pauli-x"),
                                 np.diag([0.5, 2.0])))
    fwd, refl = omega_symbol(spec, grid, 7.3)
    idx = (-np.arange(grid.points)) % grid.points
    keep = np.arange(grid.points) != grid.points // 2   # Nyquist pairs with itself
    assert np.array_equal(refl.entries[keep], fwd.entries[idx][keep])
    assert np.abs(fwd.entries - fwd.entries.conj().transpose(0, 2, 1)).max() == 0.0


def test_omega_massless_phase_cancels_below_carrier():
    grid = SpectralGrid(np.pi, 64)       # integer momenta
    spec = scalar_spec(mass=0.0)
    fwd, refl = omega_symbol(spec, grid, 10.0)
    assert fwd.entries[(-3) % 64, 0, 0] == -3.0
    below = grid.k < 10.0
    total_phase = grid.k[below] + refl.entries[below, 0, 0].real
    assert np.abs(total_phase).max() == 0.0


def test_omega_mass_gap_spot_value():
    grid = SpectralGrid(16.0, 64)
    fwd, _ = omega_symbol(scalar_spec(mass=1.0), grid, 10.0)
    gap = fwd.entries[0, 0, 0].real      # k = 0 mode
    assert abs(gap - (np.sqrt(101.0) - 10.0)) < 1e-12
    assert 0.0497 < gap < 0.05           # strictly under the 1/(2 vk) bound


def test_total_phase_monotone_in_momentum():
    grid = SpectralGrid(16.0, 512)
    model = ModelSpec(np.zeros((2, 2)), preset_matrix("pauli-x"),
                      np.diag([0.5, 2.0]))
    ks = np.sort(grid.k[grid.k < CUTOFF])
    theta = ks[:, None] + model.energy_eigvals(9.0 - ks) - 9.0
    assert np.diff(theta, axis=0).min() > -1e-12


def test_dressed_propagate_time_zero_is_identity():
    grid = SpectralGrid(8.0, 128)
    spec = pauli_spec(mass=1.0)
    rng = np.random.default_rng(3)
    psi = make_field(grid, rng.normal(size=(128, 2)) + 1j * rng.normal(size=(128, 2)))
    for direction in ("input", "output"):
        out = dressed_propagate(spec, psi, 0.0, 12.0, direction)
        assert np.abs(out.values - psi.values).max() < 1e-13 * psi.sample_norms().max()


def test_dressed_propagate_dense_oracle():
    grid = SpectralGrid(2.0, 8)
    spec = pauli_spec(mass=1.0)
    n, N = 2, 8
    fwd, refl = omega_symbol(spec, grid, 50.0)

    modes = np.exp(1j * np.outer(grid.z, grid.k)) / np.sqrt(N)
    dense = {}
    for name, table in (("fwd", fwd), ("refl", refl)):
        h = np.zeros((N * n, N * n), dtype=complex)
        for j in range(N):
            proj = np.outer(modes[:, j], modes[:, j].conj())
            h += np.kron(proj, table.entries[j])
        dense[name] = h
    d = np.zeros((N * n, N * n), dtype=complex)
    for j, z in enumerate(grid.z):
        d[j * n:(j + 1) * n, j * n:(j + 1) * n] = expm(-1j * z * spec.kappa_shift)

    rng = np.random.default_rng(11)
    psi = make_field(grid, rng.normal(size=(N, n)) + 1j * rng.normal(size=(N, n)))
    t = 0.37
    flat = psi.values.reshape(-1)
    want_in = (d.conj().T @ expm(-1j * t * dense["refl"]) @ d @ flat).reshape(N, n)
    want_out = (d @ expm(-1j * t * dense["fwd"]) @ d.conj().T @ flat).reshape(N, n)
    got_in = dressed_propagate(spec, psi, t, 50.0, "input")
    got_out = dressed_propagate(spec, psi, t, 50.0, "output")
    assert np.abs(got_in.values - want_in).max() < 1e-10
    assert np.abs(got_out.values - want_out).max() < 1e-10


def test_massless_propagation_is_exact_transport():
    grid = SpectralGrid(16.0, 512)
    spec0 = scalar_spec(mass=0.0)
    psi = class_packet(grid)
    want = grid_shift(psi, 1.5)
    for kappa in (7.0, 23.5, 160.0):
        out = dressed_propagate(spec0, psi, 1.5, kappa, "input", kappa_base=CUTOFF)
        assert np.abs(out.values - want.values).max() < 1e-12 * psi.sample_norms().max()


def test_massless_dressed_transport_carries_drift_phase():
    grid = SpectralGrid(16.0, 512)
    spec = pauli_spec(mass=0.0)
    base = class_packet(grid, amplitudes=(0.8, 0.6j))
    psi = generator_phase(base, spec.kappa_eig, scale=-1.0)
    t = 1.5
    out = dressed_propagate(spec, psi, t, 31.0, "input", kappa_base=CUTOFF)
    want = apply_constant_matrix(grid_shift(psi, t), evolve(spec.kappa_shift, t))
    assert np.abs(out.values - want.values).max() < 1e-12 * psi.sample_norms().max()


def test_class_gates_and_preservation():
    grid = SpectralGrid(16.0, 512)
    spec = scalar_spec(mass=1.0)
    psi = class_packet(grid)
    with pytest.raises(NotInInductiveClass):
        dressed_propagate(spec, psi, 1.0, 4.0, "input", kappa_base=CUTOFF)
    with pytest.raises(NotInInductiveClass):
        dressed_propagate(spec, psi, 1.0, 10.0, "input", kappa_base=0.5)
    out = dressed_propagate(spec, psi, 1.0, 10.0, "input", kappa_base=CUTOFF)
    from specjump import class_mass_defect
    assert class_mass_defect(out, "minus", cutoff=CUTOFF) < 1e-12
    narrow = make_field(grid, np.ones((512, 1), dtype=complex))
    with pytest.raises(GridMismatch):
        dressed_propagate(pauli_spec(), narrow, 1.0, 10.0, "input")


def test_error_integral_massless_is_zero():
    grid = SpectralGrid(16.0, 512)
    g = unit_momentum(class_packet(grid))
    # theta collapses to k + (kappa - k) - kappa, zero up to float cancellation
    assert limit_error_integral(scalar_spec(mass=0.0), g, 1.0, 40.0, CUTOFF) <= 1e-12


def test_error_integral_single_mode_spot_value():
    grid = SpectralGrid(16.0, 512)
    values = np.zeros((512, 1), dtype=complex)
    values[0] = np.sqrt(2.0 * np.pi / grid.dk)      # unit-norm k = 0 mode
    g = make_field(grid, values, MOMENTUM)
    got = limit_error_integral(scalar_spec(mass=1.0), g, 1.0, 10.0, CUTOFF)
    want = 4.0 * np.sin(0.5 * (np.sqrt(101.0) - 10.0)) ** 2
    assert abs(got - want) < 1e-12
    assert abs(got - 2.487e-3) < 1e-5


def test_error_integral_bound_and_direct_distance():
    grid = SpectralGrid(16.0, 512)
    spec = scalar_spec(mass=1.0)
    g = unit_momentum(class_packet(grid))
    from specjump import to_position
    pos = to_position(g)
    t = 1.0
    for kappa in (10.0, 20.0, 40.0):
        value = limit_error_integral(spec, g, t, kappa, CUTOFF)
        assert value <= (abs(t) * 1.0 / (kappa - CUTOFF)) ** 2
        moved = dressed_propagate(spec, pos, t, kappa, "input", kappa_base=CUTOFF)
        undone = grid_shift(moved, -t)
        direct = undone.with_values(undone.values - pos.values).norm_squared()
        assert abs(value - direct) < 1e-9


def test_error_integral_gates():
    grid = SpectralGrid(16.0, 512)
    spec = scalar_spec(mass=1.0)
    g = unit_momentum(class_packet(grid))
    with pytest.raises(UnnormalizedAmplitudes):
        limit_error_integral(spec, g.with_values(2.0 * g.values), 1.0, 10.0, CUTOFF)
    outside = unit_momentum(class_packet(grid, momentum=6.0))
    with pytest.raises(SupportViolation):
        limit_error_integral(spec, outside, 1.0, 10.0, CUTOFF)


def test_kappa_threshold_formula():
    assert kappa_threshold(5.0, 1.0, 1.0, 0.01) == 105.0
    assert kappa_threshold(5.0, 0.0, 3.0, 0.2) == 5.0
    assert kappa_threshold(2.0, 2.0, 0.0, 0.5) == 4.0
    for eps in (0.0, -1.0):
        with pytest.raises(NonpositiveTolerance):
            kappa_threshold(5.0, 1.0, 1.0, eps)


def test_sup_phase_factor_below_threshold_tolerance():
    spec = scalar_spec(mass=1.0)
    assert kappa_threshold(CUTOFF, 1.0, 1.0, 0.01) == 105.0
    factor = sup_phase_factor(spec, 1.0, 106.0, CUTOFF)
    assert factor < 0.01
    vk = 101.0
    want = 2.0 * np.sin(0.5 * (np.sqrt(vk ** 2 + 1.0) - vk))
    assert abs(factor - want) < 1e-15
    assert sup_phase_factor(spec, 1.0, 11.0, CUTOFF) > factor
    assert sup_phase_factor(spec, 1e6, 6.0, CUTOFF) == 2.0


def test_limit_chi_identity_jump_is_shift_with_drift():
    grid = SpectralGrid(16.0, 512)
    model = ModelSpec(preset_matrix("pauli-z"), np.eye(2), 0.0)
    psi = gaussian_packet(grid, -3.0, 1.0, (0.8, 0.6j), momentum=-2.0)
    t = 1.5
    chi = limit_truncated_chi(model, psi, t)
    want = apply_constant_matrix(grid_shift(psi, t), evolve(model.hamiltonian, t))
    assert np.abs(chi.values - want.values).max() < 1e-13 * psi.sample_norms().max()
    plain = limit_truncated_chi(model, psi, t, kappa_shift=np.zeros((2, 2)))
    assert np.abs(plain.values - grid_shift(psi, t).values).max() \
        < 1e-13 * psi.sample_norms().max()


def test_limit_chi_time_zero_truncation():
    grid = SpectralGrid(16.0, 512)
    model = ModelSpec(np.zeros((2, 2)), preset_matrix("pauli-x"), 0.0)
    psi = gaussian_packet(grid, 0.5, 1.0, (1.0, 0.5j))
    chi = limit_truncated_chi(model, psi, 0.0)
    want = psi.values.copy()
    left = grid.z < 0.0
    want[left] = psi.values[left] @ model.jump.T
    assert np.abs(chi.values - want).max() < 1e-14 * psi.sample_norms().max()
    with pytest.raises(NonCommensurateShift):
        limit_truncated_chi(model, psi, 0.3)


def test_limit_chi_matches_transport_solver():
    grid = SpectralGrid(16.0, 512)
    model = ModelSpec(preset_matrix("pauli-z"), preset_matrix("pauli-x"), 0.0)
    values = np.zeros((512, 2), dtype=complex)
    values[grid.z > 0.0] = np.array([0.8, 0.6j])
    psi = make_field(grid, values)
    for t in (1.0, 2.5):
        chi = limit_truncated_chi(model, psi, t)
        toy = solve_jump_transport(model, psi, t)
        assert np.abs(chi.values - toy.values).max() < 1e-10


def test_jump_equation_residual_identity_jump_taylor_bound():
    grid = SpectralGrid(16.0, 1024)
    model = ModelSpec(preset_matrix("pauli-z"), np.eye(2), 0.0)
    psi = gaussian_packet(grid, 0.0, 2.0, (0.8, 0.6))
    dt = 1.0 / 16.0
    res = jump_equation_residual(model, psi, 0.7, dt)
    cap = 0.5 * dt ** 2 * psi.sample_norms() + 1e-14   # |pauli-z| = 1
    assert np.all(res <= cap)


def test_jump_equation_residual_refinement_orders():
    grid = SpectralGrid(16.0, 1024)
    model = ModelSpec(preset_matrix("pauli-z"), preset_matrix("pauli-x"), 0.0)
    psi = gaussian_packet(grid, 0.0, 2.0, (0.8, 0.6))
    t = 0.5
    jump_index = grid.index_left_of(t)      # the sample sitting exactly at t
    off_index = grid.index_left_of(-2.0)
    res = [jump_equation_residual(model, psi, t, dt)
           for dt in (0.125, 0.0625, 0.03125)]
    for coarse, fine in zip(res, res[1:]):
        assert 3.5 < coarse[off_index] / fine[off_index] < 4.5
        assert 1.7 < coarse[jump_index] / fine[jump_index] < 2.3


def test_sweep_config_validation():
    good = dict(kappa_base=5.0, kappa_list=(10.0, 20.0), t=1.0,
                mass_bound=1.0, eps_tol=0.01)
    LimitSweepConfig(**good)
    for bad in (dict(good, kappa_base=0.0),
                dict(good, kappa_list=()),
                dict(good, kappa_list=(4.0, 10.0)),
                dict(good, kappa_list=(20.0, 10.0)),
                dict(good, mass_bound=-1.0)):
        with pytest.raises(ConfigError):
            LimitSweepConfig(**bad)
    with pytest.raises(NonpositiveTolerance):
        LimitSweepConfig(**dict(good, eps_tol=0.0))


def test_kappa_sweep_convergence_and_massless_control():
    # carrier rides just below the class cutoff so the error decays like the
    # square of the sweep gap and the fitted log-log slope lands near -2; the
    # box is wide enough that the envelope dies at the seam, else the seam
    # step scatters a slow momentum tail past the class gate
    grid = SpectralGrid(64.0, 2048)
    psi = gaussian_packet(grid, 0.0, 8.5, 1.0, momentum=4.2)
    plan = LimitSweepConfig(CUTOFF, (10.0, 20.0, 40.0, 80.0), 1.0, 1.0, 0.01)
    records = run_kappa_sweep(plan, scalar_spec(mass=1.0), psi)
    assert [r.status for r in records] == ["ok"] * 4
    errors = [r.error_I for r in records]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    for r in records:
        assert r.error_I <= r.bound
        assert r.varkappa == r.kappa - CUTOFF
        assert r.runtime_s >= 0.0
    assert math.isnan(records[0].slope_running)   # needs two points to fit
    assert records[-1].slope_running <= -1.7

    zero_mass = run_kappa_sweep(
        LimitSweepConfig(CUTOFF, (10.0, 20.0), 1.0, 0.0, 0.01),
        scalar_spec(mass=0.0), psi)
    assert all(r.error_I <= 1e-12 for r in zero_mass)


def test_kappa_sweep_marks_failures_and_continues():
    grid = SpectralGrid(16.0, 512)
    outside = class_packet(grid, momentum=6.0)
    plan = LimitSweepConfig(CUTOFF, (10.0, 20.0, 40.0), 1.0, 1.0, 0.01)
    records = run_kappa_sweep(plan, scalar_spec(mass=1.0), outside)
    assert len(records) == 3
    for r in records:
        assert r.status == "failed: SupportViolation"
        assert math.isnan(r.error_I)
        assert math.isnan(r.slope_running)
