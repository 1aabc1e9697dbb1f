"""Large carrier-momentum limit of the dressed relativistic model.

Recentring the kinetic energy around a carrier momentum kappa gives the
symbol e(kappa + k) - kappa, whose propagation approaches exact left
transport as kappa grows, uniformly over amplitudes supported below a fixed
momentum cutoff.  This module provides the recentred propagators, the
momentum-space error integral measuring the distance to pure transport
(with its closed-form bound and threshold formula), a sweep harness for the
convergence rate, the transport-plus-jump field that is the limit object,
and the discrete residual of the jump equation that limit satisfies.

Everything is spectral: no time stepping, so the only error sources are the
grid truncation of the data and floating-point rounding.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import config
from .errors import (ConfigError, NonpositiveTolerance, NotInInductiveClass,
                     SpecjumpError, SupportViolation, UnnormalizedAmplitudes,
                     UnsupportedInput)
from .field import (SpectralGrid, SymbolTable, WaveField, apply_constant_matrix,
                    apply_propagator, class_mass_defect, generator_phase,
                    grid_shift, to_momentum, to_position)
from .linalg import ModelSpec, evolve
from .reflect import DressedSpec

_DIRECTIONS = ("input", "output")


def omega_symbol(spec: DressedSpec, grid: SpectralGrid,
                 kappa: float) -> tuple[SymbolTable, SymbolTable]:
    """Recentred kinetic symbol pair (forward, reflected).

    forward(k) = e(kappa + k) - kappa and reflected(k) = e(kappa - k) - kappa
    as Hermitian mode tables in the mass eigenframe.  The reflected table at
    mode k is the forward table at mode -k: on the grid the two entries are
    built from identical floating-point arguments, so the identity is exact
    (the self-paired Nyquist mode aside).
    """
    w, v = spec.model.mass_eig

    def build(args):
        ev = spec.model.energy_eigvals(args) - kappa
        return SymbolTable(grid, np.einsum("ia,ka,ja->kij", v, ev, v.conj()))

    return build(kappa + grid.k), build(kappa - grid.k)


def dressed_propagate(spec: DressedSpec, psi: WaveField, t: float, kappa: float,
                      direction: str, kappa_base: float = None) -> WaveField:
    """Propagate by the recentred symbol conjugated with the dressing.

    input:  multiply by e^{-iKz}, propagate by the reflected table, multiply
    by e^{iKz}; output swaps both the multipliers and the table (forward).
    When ``kappa_base`` is given the data must lie in the dressed class for
    that cutoff: kappa must exceed it, and after undressing the relative
    momentum mass outside the class must stay below the configured tail
    tolerance.  The propagation is diagonal in the undressed momentum modes,
    so class membership is preserved exactly.
    """
    if direction not in _DIRECTIONS:
        raise UnsupportedInput(f"direction must be one of {_DIRECTIONS}, "
                               f"got {direction!r}")
    psi = to_position(psi)
    sign = 1.0 if direction == "input" else -1.0
    forward, reflected = omega_symbol(spec, psi.grid, kappa)
    table = reflected if direction == "input" else forward
    if kappa_base is not None:
        if not kappa > kappa_base:
            raise NotInInductiveClass(
                f"carrier momentum {kappa} must exceed the class cutoff "
                f"{kappa_base}")
        undressed = generator_phase(psi, spec.kappa_eig, scale=sign)
        side = "minus" if direction == "input" else "plus"
        tail = class_mass_defect(undressed, side, cutoff=kappa_base)
        if tail > config.numerics.class_tail_rel_tol:
            raise NotInInductiveClass(
                f"relative momentum mass {tail:.3e} outside the {side} class "
                f"at cutoff {kappa_base} "
                f"(tolerance {config.numerics.class_tail_rel_tol:.1e})")
    f = generator_phase(psi, spec.kappa_eig, scale=sign)
    f = apply_propagator(f, table, t)
    return generator_phase(f, spec.kappa_eig, scale=-sign)


def limit_error_integral(spec: DressedSpec, g: WaveField, t: float,
                         kappa: float, kappa_base: float) -> float:
    """Mean-square distance between recentred propagation and pure transport.

    For unit-norm amplitudes supported below the cutoff this is the
    trapezoid value of (1/2pi) Int 4 sin^2(theta_a(k) t/2) |c_a(k)|^2 dk
    over k < cutoff, with theta_a(k) = k + e_a(kappa - k) - kappa the phase
    mismatch in mass channel a.  The amplitudes are band-limited, so the
    periodic trapezoid sum is the exact grid value: it coincides with the
    squared distance between the un-shifted propagated field and the data.
    """
    gk = to_momentum(g)
    total = gk.norm_squared()
    if abs(total - 1.0) > config.numerics.normalization_tol:
        raise UnnormalizedAmplitudes(
            f"squared norm {total:.12f} must equal 1 within "
            f"{config.numerics.normalization_tol:.1e}")
    tail = class_mass_defect(gk, "minus", cutoff=kappa_base)
    if tail > config.numerics.class_tail_rel_tol:
        raise SupportViolation(
            f"relative momentum mass {tail:.3e} at or above the cutoff "
            f"{kappa_base}")
    grid = gk.grid
    mask = grid.k < kappa_base
    w, v = spec.model.mass_eig
    theta = grid.k[mask, None] \
        + spec.model.energy_eigvals(kappa - grid.k[mask]) - kappa
    coeff = gk.values[mask] @ v.conj()
    integrand = 4.0 * np.sin(0.5 * t * theta) ** 2 * np.abs(coeff) ** 2
    return float(grid.dk / (2.0 * np.pi) * integrand.sum())


def kappa_threshold(kappa_base: float, m: float, t: float, eps: float) -> float:
    """Carrier momentum beyond which the phase mismatch factor drops below eps.

    Returns kappa_base + max(m, |t| m^2 / eps): past it the gap
    vk = kappa - kappa_base exceeds both the mass bound (so the square-root
    inequality applies) and |t| m^2 / eps (so the sup factor is below eps).
    """
    if eps <= 0:
        raise NonpositiveTolerance(
            f"threshold tolerance must be positive, got {eps}")
    return kappa_base + max(m, abs(t) * m * m / eps)


def sup_phase_factor(spec: DressedSpec, t: float, kappa: float,
                     kappa_base: float) -> float:
    """Sup over the class of |e^{-i theta(k) t} - 1| across mass channels.

    theta_a(k) = k + e_a(kappa - k) - kappa is nonnegative, vanishes as
    k -> -inf, and is nondecreasing in k, so the sup sits at the cutoff
    endpoint where theta_a = sqrt(vk^2 + w_a^2) - vk, vk = kappa -
    kappa_base.  Returns 2 outright if the endpoint phase leaves the
    principal range.
    """
    w, _ = spec.model.mass_eig
    vk = kappa - kappa_base
    theta = np.sqrt(vk ** 2 + w ** 2) - vk
    phase = abs(t) * theta
    if float(phase.max()) >= np.pi:
        return 2.0
    return float((2.0 * np.sin(0.5 * phase)).max())


def limit_truncated_chi(model: ModelSpec, psi: WaveField, t: float,
                        kappa_shift=None) -> WaveField:
    """The transport-plus-jump wave the recentred evolutions converge to.

    chi = psi + (sigma_K - 1) 1_{z<t} psi, relabeled z -> z + t and given
    the constant drift phase e^{-itK}.  K defaults to the model's phase
    generator.  No carrier momentum enters: this is the limit object
    itself, exact on the grid for commensurate t.
    """
    psi = to_position(psi)
    psi.grid.commensurate_steps(t)
    spec = DressedSpec(model, kappa_shift)
    mask = np.arange(psi.grid.points) < psi.grid.index_left_of(t)
    undressed = generator_phase(psi, spec.kappa_eig, scale=1.0)
    add = np.zeros_like(undressed.values)
    add[mask] = undressed.values[mask] @ (model.jump - np.eye(model.n)).T
    jumped = generator_phase(undressed.with_values(add), spec.kappa_eig,
                             scale=-1.0)
    chi = psi.with_values(psi.values + jumped.values)
    return apply_constant_matrix(grid_shift(chi, t), evolve(spec.kappa_shift, t))


def jump_equation_residual(model: ModelSpec, psi: WaveField, t: float,
                           dt: float, kappa_shift=None) -> np.ndarray:
    """Per-sample residual norms of the discrete jump equation.

    In the frame riding the transport the limit wave satisfies
    d chi + i K chi dt = (sigma - 1) chi d1_t, with d1_t the boundary
    crossing increment.  The jump coefficient is the bare sigma: the
    crossing happens where the dressing phase vanishes (sigma_K(z - t) at
    z = t).  The discrete form drops the dt*d1 cross term, so the residual
    is second order in dt away from the crossing samples and first order on
    them.
    """
    psi = to_position(psi)
    psi.grid.commensurate_steps(dt)
    spec = DressedSpec(model, kappa_shift)
    eig = spec.kappa_eig
    idx = np.arange(psi.grid.points)
    undressed = generator_phase(psi, eig, scale=1.0)
    sigma_minus_one = model.jump - np.eye(model.n)

    def riding(s):
        add = np.zeros_like(undressed.values)
        m = idx < psi.grid.index_left_of(s)
        add[m] = undressed.values[m] @ sigma_minus_one.T
        jumped = generator_phase(undressed.with_values(add), eig, scale=-1.0)
        return (psi.values + jumped.values) @ evolve(spec.kappa_shift, s).T

    now = riding(t)
    nxt = riding(t + dt)
    d1 = (idx < psi.grid.index_left_of(t + dt)).astype(float) \
        - (idx < psi.grid.index_left_of(t)).astype(float)
    residual = nxt - now + 1j * dt * (now @ spec.kappa_shift.T) \
        - d1[:, None] * (now @ sigma_minus_one.T)
    return np.sqrt((np.abs(residual) ** 2).sum(axis=1))


@dataclass(frozen=True)
class LimitSweepConfig:
    """Sweep plan: class cutoff, carrier momenta, time, mass bound, tolerance."""

    kappa_base: float
    kappa_list: tuple
    t: float
    mass_bound: float
    eps_tol: float

    def __post_init__(self):
        object.__setattr__(self, "kappa_list",
                           tuple(float(k) for k in self.kappa_list))
        if not self.kappa_base > 0:
            raise ConfigError(
                f"class cutoff must be positive, got {self.kappa_base}")
        if not self.kappa_list:
            raise ConfigError("kappa_list must not be empty")
        if any(k <= self.kappa_base for k in self.kappa_list):
            raise ConfigError(
                "every carrier momentum must exceed the class cutoff "
                f"{self.kappa_base}")
        if any(b <= a for a, b in zip(self.kappa_list, self.kappa_list[1:])):
            raise ConfigError("kappa_list must be strictly ascending")
        if self.mass_bound < 0:
            raise ConfigError(
                f"mass bound must be nonnegative, got {self.mass_bound}")
        if self.eps_tol <= 0:
            raise NonpositiveTolerance(
                f"sweep tolerance must be positive, got {self.eps_tol}")


@dataclass(frozen=True)
class ConvergenceRecord:
    """One sweep row; slope_running fits log error_I on log varkappa so far."""

    kappa: float
    varkappa: float
    error_I: float
    bound: float
    slope_running: float
    runtime_s: float
    status: str = "ok"


SWEEP_COLUMNS = ("kappa", "varkappa", "error_I", "bound", "slope_running",
                 "runtime_s")


def run_kappa_sweep(sweep: LimitSweepConfig, spec: DressedSpec,
                    psi0: WaveField, jobs: int = 1) -> list[ConvergenceRecord]:
    """Measure the distance to pure transport across the carrier momenta.

    Amplitudes are normalized once up front.  Records are measured
    independently: a failure is recorded in the status column (error_I nan)
    and the sweep continues.  The bound column is (|t| m^2 / vk)^2 from the
    sweep's declared mass bound; it dominates error_I whenever vk exceeds
    the true mass.  ``jobs`` caps the threads measuring the records; each
    measurement is a pure evaluation and the running slope is folded in
    list order afterwards, so any partitioning reproduces the sequential
    result exactly.
    """
    g = to_momentum(psi0)
    norm = g.norm()
    if norm == 0.0:
        raise UnsupportedInput("sweep data must not be identically zero")
    g = g.with_values(g.values / norm)

    def measure(kappa):
        start = time.perf_counter()
        try:
            error = limit_error_integral(spec, g, sweep.t, kappa,
                                         sweep.kappa_base)
            status = "ok"
        except SpecjumpError as exc:
            error = math.nan
            status = f"failed: {type(exc).__name__}"
        return error, status, time.perf_counter() - start

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            measured = list(pool.map(measure, sweep.kappa_list))
    else:
        measured = [measure(kappa) for kappa in sweep.kappa_list]

    records = []
    log_vk, log_err = [], []
    for kappa, (error, status, runtime) in zip(sweep.kappa_list, measured):
        vk = kappa - sweep.kappa_base
        bound = (abs(sweep.t) * sweep.mass_bound ** 2 / vk) ** 2
        if status == "ok" and error > 0.0:
            log_vk.append(math.log(vk))
            log_err.append(math.log(error))
        slope = math.nan
        if len(log_vk) >= 2:
            slope = float(np.polyfit(log_vk, log_err, 1)[0])
        records.append(ConvergenceRecord(float(kappa), float(vk), float(error),
                                         float(bound), slope, float(runtime),
                                         status))
    return records
