"""Single-jump transport on the line and its boundary-value form.

The model couples an internal phase rotation exp(-i t H) to free leftward
transport; a trajectory crossing the origin is multiplied once by a unitary
jump.  In the co-moving (interaction) picture the resolving map at a source
point s is the cocycle

    V(t, s) = exp(-i t H) * S(s)^nu(t, s),    S(s) = exp(i s H) S exp(-i s H),

where S is the bare jump and nu(t, s) counts signed crossings: +1 when
0 <= s < t, -1 when t <= s < 0, else 0.  The equivalent boundary-value
problem transports the field left with generator H + i d/dz and couples the
two sides of the origin through chi(0-) = S chi(0).

Everything here is exact sample relabeling plus pointwise unitaries, so the
solver and the pointwise cocycle agree to rounding; only the boundary trace
chi(0-) carries an O(dz) sampling error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config
from .errors import SkippedPrecondition, UnsupportedInput
from .field import (WaveField, apply_constant_matrix, apply_on_mask,
                    generator_phase, grid_shift, reflect_through_origin,
                    to_position)
from .linalg import ModelSpec, evolve


def signed_jump_count(t: float, s: float) -> int:
    """Signed number of origin crossings for a source at s over [0, t]."""
    if t >= 0:
        return 1 if 0 <= s < t else 0
    return -1 if t <= s < 0 else 0


def jump_indicator(grid, t: float) -> np.ndarray:
    """signed_jump_count(t, z_j) for every grid sample, exact in indices.

    Requires t commensurate with the grid spacing so the window edges land
    on samples.
    """
    steps = grid.commensurate_steps(t)
    if abs(steps) > grid.points // 2:
        raise UnsupportedInput(
            f"time {t} moves the crossing window past the grid half-period")
    nu = np.zeros(grid.points, dtype=np.int8)
    zi = grid.zero_index
    if steps > 0:
        nu[zi:zi + steps] = 1
    elif steps < 0:
        nu[zi + steps:zi] = -1
    return nu


def jump_cocycle(model: ModelSpec, t: float, s: float) -> np.ndarray:
    """The resolving matrix V(t, s) at one source point."""
    nu = signed_jump_count(t, s)
    w, v = model.hamiltonian_eig
    free = (v * np.exp(-1j * t * w)) @ v.conj().T
    if nu == 0:
        return free
    core = model.jump if nu > 0 else model.jump.conj().T
    phase = (v * np.exp(-1j * (-s) * w)) @ v.conj().T  # exp(+i s H)
    dressed = phase @ core @ phase.conj().T
    return free @ dressed


def solve_jump_transport(model: ModelSpec, chi0: WaveField, t: float) -> WaveField:
    """Propagate initial data through the jump-transport boundary problem.

    The solution is assembled from its closed form: undress the internal
    phase pointwise, apply the jump on the signed crossing window, relabel
    samples by the transport shift, and dress the phase back:

        chi_t(z) = exp(i z H) S^nu(t, z + t) exp(-i (z+t) H) chi0(z + t).

    Requires t commensurate with dz (the shift is an exact relabeling); the
    time step and the crossing window then involve no floating-point cuts.
    """
    chi0 = to_position(chi0)
    eig = model.hamiltonian_eig
    rotated = generator_phase(chi0, eig, scale=1.0)        # exp(-i z H)
    nu = jump_indicator(chi0.grid, t)
    jumped = apply_on_mask(rotated, nu == 1, model.jump)
    if np.any(nu == -1):
        jumped = apply_on_mask(jumped, nu == -1, model.jump.conj().T)
    shifted = grid_shift(jumped, t)
    return generator_phase(shifted, eig, scale=-1.0)       # exp(+i z H)


def cocycle_oracle_defect(model: ModelSpec, chi0: WaveField, t: float,
                          solution: WaveField | None = None) -> float:
    """Max-norm defect between the grid solver and the pointwise cocycle.

    For every source sample s the solution at z = s - t must equal
    V(t, s) chi0(s).  The comparison walks the grid with per-point matrix
    products, an independent path from the vectorized solver.
    """
    chi0 = to_position(chi0)
    if solution is None:
        solution = solve_jump_transport(model, chi0, t)
    grid = chi0.grid
    steps = grid.commensurate_steps(t)
    worst = 0.0
    for j in range(grid.points):
        v = jump_cocycle(model, t, grid.z[j])
        expected = v @ chi0.values[j]
        got = solution.values[(j - steps) % grid.points]
        worst = max(worst, float(np.linalg.norm(got - expected)))
    return worst


def boundary_trace_defect(model: ModelSpec, solution: WaveField) -> float:
    """|chi(0-) - S chi(0)| with chi(0-) read from the sample left of zero."""
    solution = to_position(solution)
    zi = solution.grid.zero_index
    left = solution.values[zi - 1]
    right = solution.values[zi]
    return float(np.linalg.norm(left - model.jump @ right))


def _support_mass_at_or_below_zero(field: WaveField) -> float:
    field = to_position(field)
    total = field.norm_squared()
    if total == 0.0:
        return 0.0
    zi = field.grid.zero_index
    below = float((np.abs(field.values[: zi + 1]) ** 2).sum()) * field.grid.dz
    return below / total


def input_output_connection(model: ModelSpec, psi0: WaveField) -> WaveField:
    """Initial outgoing wave from the reflection identity.

    The outgoing extension satisfies psi_out(z) = S(-z) psi_in(-z) at t = 0;
    on the torus the reflection is the exact index map z -> -z.
    """
    psi0 = to_position(psi0)
    eig = model.hamiltonian_eig
    mirrored = reflect_through_origin(psi0)
    rotated = generator_phase(mirrored, eig, scale=-1.0)   # exp(+i z H)
    jumped = apply_constant_matrix(rotated, model.jump)
    return generator_phase(jumped, eig, scale=1.0)         # exp(-i z H)


@dataclass(frozen=True)
class ReflectionPair:
    incoming: WaveField
    outgoing: WaveField


def reflection_pair(model: ModelSpec, psi0: WaveField, t: float) -> ReflectionPair:
    """Evolve the incoming/outgoing pair of half-line waves to time t.

    ``psi0`` must be supported on z > 0 (relative mass at z <= 0 below the
    support tolerance).  The incoming wave moves left, the outgoing one is
    its reflection through the boundary identity
    psi_out_t(-z) = S(z) psi_in_t(z), which both returned full-grid
    extensions satisfy to rounding for all commensurate t.
    """
    psi0 = to_position(psi0)
    defect = _support_mass_at_or_below_zero(psi0)
    if defect > config.numerics.support_mass_rel_tol:
        raise UnsupportedInput(
            f"initial data has relative mass {defect:.3e} at z <= 0 "
            f"(tolerance {config.numerics.support_mass_rel_tol:.1e})")
    return _propagate_pair(model, psi0, input_output_connection(model, psi0), t)


def _propagate_pair(model: ModelSpec, psi0: WaveField, psi_out0: WaveField,
                    t: float) -> ReflectionPair:
    free = evolve(model.hamiltonian, t)
    incoming = apply_constant_matrix(grid_shift(psi0, t), free)
    outgoing = apply_constant_matrix(grid_shift(psi_out0, -t), free)
    return ReflectionPair(incoming, outgoing)


def connection_defect(model: ModelSpec, pair: ReflectionPair) -> float:
    """Sup-norm defect of psi_out(-z) = S(z) psi_in(z), relative to sup |psi_in|."""
    eig = model.hamiltonian_eig
    mirrored = reflect_through_origin(pair.outgoing)       # psi_out(-z) at sample z
    rotated = generator_phase(pair.incoming, eig, scale=1.0)
    jumped = apply_constant_matrix(rotated, model.jump)
    dressed = generator_phase(jumped, eig, scale=-1.0)     # S(z) psi_in(z)
    num = np.sqrt((np.abs(mirrored.values - dressed.values) ** 2).sum(axis=1)).max()
    den = max(pair.incoming.sample_norms().max(), 1e-300)
    return float(num / den)


def equivalence_defect(model: ModelSpec, psi0: WaveField, t: float) -> float:
    """Sup defect between the full-line jump solution and the folded pair.

    For data supported on z > 0 the two formulations carry the same
    information: the jump solution equals the incoming wave on z >= 0 and
    the mirrored outgoing wave on z < 0, sample by sample.  Both reductions
    are exact relabelings, so the defect is rounding noise while nothing
    has reached the torus seam.  Normalized by sup |psi0|.
    """
    psi0 = to_position(psi0)
    chi = solve_jump_transport(model, psi0, t)
    pair = reflection_pair(model, psi0, t)
    folded = reflect_through_origin(pair.outgoing)
    zi = chi.grid.zero_index
    d_in = np.sqrt((np.abs(chi.values[zi:] - pair.incoming.values[zi:]) ** 2)
                   .sum(axis=1)).max()
    d_out = np.sqrt((np.abs(chi.values[:zi] - folded.values[:zi]) ** 2)
                    .sum(axis=1)).max()
    scale = max(float(psi0.sample_norms().max()), 1e-300)
    return float(max(d_in, d_out) / scale)


def half_line_mass(field: WaveField) -> float:
    """Squared norm restricted to z >= 0."""
    field = to_position(field)
    zi = field.grid.zero_index
    return float((np.abs(field.values[zi:]) ** 2).sum()) * field.grid.dz


def ito_residual(model: ModelSpec, t: float, dt: float, s: float,
                 eta: np.ndarray) -> float:
    """Norm of the discrete jump-increment identity at one source point.

    Compares V(t+dt, s) eta against the one-step update
    V eta - i dt H V eta + dnu (S - 1) V eta, where dnu is the crossing
    count picked up between t and t+dt.  First order in dt when the window
    [t, t+dt) contains s, second order away from it.
    """
    eta = np.asarray(eta, dtype=complex)
    v_now = jump_cocycle(model, t, s) @ eta
    v_next = jump_cocycle(model, t + dt, s) @ eta
    dnu = signed_jump_count(t + dt, s) - signed_jump_count(t, s)
    drift = -1j * dt * (model.hamiltonian @ v_now)
    jump_term = dnu * ((model.jump - np.eye(model.n)) @ v_now)
    return float(np.linalg.norm(v_next - v_now - drift - jump_term))


@dataclass(frozen=True)
class TimeReversalReport:
    incoming_exchange_defect: float
    outgoing_exchange_defect: float
    connection_defect: float

    @property
    def max_defect(self) -> float:
        return max(self.incoming_exchange_defect, self.outgoing_exchange_defect,
                   self.connection_defect)


def time_reversal_check(model: ModelSpec, psi0: WaveField,
                        t: float) -> TimeReversalReport:
    """Exchange symmetry under conjugation and time reflection.

    Preconditions: conj(S) = S^-1 and conj(H) = H entrywise (raises
    SkippedPrecondition otherwise).  The conjugated pair at -t, with the
    incoming and outgoing roles exchanged, must again solve the same
    problem: each branch matches the direct forward evolution of the
    conjugated exchanged data, and the pair satisfies the boundary
    connection.  All three defects are reported relative to sup |psi0|.
    """
    tol = config.numerics.precondition_tol
    sigma = model.jump
    if np.abs(sigma.conj() - np.linalg.inv(sigma)).max() > tol:
        raise SkippedPrecondition("jump matrix does not satisfy conj(S) = S^-1")
    if np.abs(model.hamiltonian.conj() - model.hamiltonian).max() > tol:
        raise SkippedPrecondition("generator is not entrywise real")

    psi0 = to_position(psi0)
    psi_out0 = input_output_connection(model, psi0)
    backward = _propagate_pair(model, psi0, psi_out0, -t)

    reversed_in = backward.outgoing.with_values(backward.outgoing.values.conj())
    reversed_out = backward.incoming.with_values(backward.incoming.values.conj())

    exchanged_in0 = psi_out0.with_values(psi_out0.values.conj())
    exchanged_out0 = psi0.with_values(psi0.values.conj())
    direct = _propagate_pair(model, exchanged_in0, exchanged_out0, t)

    scale = max(float(psi0.sample_norms().max()), 1e-300)
    d_in = np.sqrt((np.abs(reversed_in.values - direct.incoming.values) ** 2)
                   .sum(axis=1)).max() / scale
    d_out = np.sqrt((np.abs(reversed_out.values - direct.outgoing.values) ** 2)
                    .sum(axis=1)).max() / scale
    d_conn = connection_defect(model, ReflectionPair(reversed_in, reversed_out))
    return TimeReversalReport(float(d_in), float(d_out), float(d_conn))
