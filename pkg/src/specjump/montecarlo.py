"""Monte Carlo check of the jump-transport expectation values.

A trajectory starts from a random source point s on the half line, drawn
from a jump-time density; its value at time t is the resolving cocycle
V(t, s) applied to a fixed unit internal state.  Ensemble averages of an
observable must reproduce the boundary-value solve seeded with the
square-root density profile, which packs the whole ensemble into a single
wave field.

Sampling is inverse-CDF against a tabulated cumulative, linear between
knots.  Randomness comes from a counter-based bit generator keyed by an
explicit 64-bit seed and is drawn in one block up front, so partitioning
the trajectory loop across workers cannot reorder the stream: ensembles
are bitwise reproducible from (seed, count) alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import config
from .errors import (DegenerateDensity, UnnormalizedAmplitudes,
                     UnsupportedInput)
from .field import SpectralGrid, WaveField, make_field
from .linalg import ModelSpec, require_hermitian
from .toy import jump_cocycle, solve_jump_transport


@dataclass(frozen=True)
class JumpDensity:
    """Jump-time density tabulated on the nonnegative half of a grid.

    ``weights`` holds density values at the knots and seeds the square-root
    initial profile; ``cdf`` is the cumulative table driving inverse-CDF
    sampling.  Mass beyond the last knot is truncated and reported as
    ``tail_mass``, never folded back in: the declared tail keeps the
    discretization honest instead of hiding it in a renormalization.
    """

    grid: SpectralGrid
    weights: np.ndarray
    cdf: np.ndarray
    tail_mass: float

    @property
    def knots(self) -> np.ndarray:
        return self.grid.z[self.grid.zero_index:]


def jump_density(grid: SpectralGrid, density, cumulative=None) -> JumpDensity:
    """Tabulate a density on the grid's nonnegative knots.

    ``density`` is a callable on z >= 0 or an array of knot values.  When
    the analytic cumulative is known, pass it as ``cumulative``; the table
    is then exact at the knots and the truncation tail is the true mass
    beyond the grid.  Otherwise the cumulative is the trapezoid sum of the
    weights, which carries the quadrature error visibly into the tail.
    """
    knots = grid.z[grid.zero_index:]
    weights = np.asarray(density(knots) if callable(density) else density,
                         dtype=float)
    if weights.shape != knots.shape:
        raise UnsupportedInput(
            f"density table has shape {weights.shape}, expected {knots.shape}")
    if np.any(weights < 0):
        raise UnsupportedInput("density values must be nonnegative")
    if not np.any(weights > 0):
        raise DegenerateDensity("density has empty support on the grid")
    steps = 0.5 * (weights[1:] + weights[:-1]) * np.diff(knots)
    trapezoid_cdf = np.concatenate([[0.0], np.cumsum(steps)])
    if cumulative is None:
        cdf = trapezoid_cdf
    else:
        cdf = np.asarray(cumulative(knots), dtype=float)
        if abs(cdf[0]) > config.numerics.density_norm_tol:
            raise UnsupportedInput(
                f"cumulative must vanish at the origin, got {cdf[0]:.3e}")
        if np.any(np.diff(cdf) < 0):
            raise UnsupportedInput("cumulative table must be nondecreasing")
        # mismatched density/cumulative pair; the trapezoid error along the
        # table is at most dz * variation / 2 for bounded-variation densities
        slack = 0.75 * grid.dz * np.abs(np.diff(weights)).sum() \
            + 10 * config.numerics.density_norm_tol
        gap = np.abs(trapezoid_cdf - cdf).max()
        if gap > slack:
            raise UnsupportedInput(
                f"density and cumulative disagree by {gap:.3e} > {slack:.3e}")
    if cdf[-1] > 1.0 + config.numerics.density_norm_tol:
        raise UnsupportedInput(
            f"density carries mass {cdf[-1]:.10f} > 1 on the grid")
    if cdf[-1] <= config.numerics.density_norm_tol:
        raise DegenerateDensity("density mass on the grid is zero")
    tail = max(0.0, 1.0 - float(cdf[-1]))
    return JumpDensity(grid, weights, cdf, tail)


def exponential_density(grid: SpectralGrid, rate: float = 1.0) -> JumpDensity:
    """rate * exp(-rate s) with the exact cumulative at the knots."""
    if rate <= 0:
        raise UnsupportedInput(f"rate must be positive, got {rate}")
    return jump_density(grid, lambda s: rate * np.exp(-rate * s),
                        cumulative=lambda s: 1.0 - np.exp(-rate * s))


def uniform_density(grid: SpectralGrid, upper: float) -> JumpDensity:
    """Uniform on [0, upper) with the exact piecewise-linear cumulative."""
    if not 0 < upper <= grid.half_width - grid.dz:
        raise UnsupportedInput(
            f"upper must lie inside (0, {grid.half_width - grid.dz}], got {upper}")
    return jump_density(grid, lambda s: (s < upper) / upper,
                        cumulative=lambda s: np.clip(s / upper, 0.0, 1.0))


def jump_time_quantile(density: JumpDensity, u) -> np.ndarray:
    """Inverse-CDF map of uniform variates, linear between knots.

    Plateaus collapse to their right edge (the usual generalized inverse),
    and the truncated tail mass u > cdf[-1] lands on the last knot, making
    the truncation visible as a small atom at the grid edge.
    """
    return np.interp(u, density.cdf, density.knots)


def sample_jump_time(density: JumpDensity, rng: np.random.Generator,
                     size=None):
    """Draw jump times by inverse-CDF sampling."""
    return jump_time_quantile(density, rng.random(size))


def _unit_internal_state(eta) -> np.ndarray:
    eta = np.asarray(eta, dtype=complex).reshape(-1)
    norm = float(np.linalg.norm(eta))
    if abs(norm - 1.0) > config.numerics.normalization_tol:
        raise UnnormalizedAmplitudes(
            f"internal state norm {norm:.12f} is not 1")
    return eta


def trajectory_values(model: ModelSpec, eta, times, t: float) -> np.ndarray:
    """V(t, s_i) eta for a batch of source points, one row per trajectory.

    Works in the internal-generator eigenframe so the dressing phases are
    diagonal; the only matrix applied per trajectory is the eigenframe jump
    on the crossing window.
    """
    eta = _unit_internal_state(eta)
    times = np.asarray(times, dtype=float)
    w, v = model.hamiltonian_eig
    a = v.conj().T @ eta
    if t >= 0:
        crossed = (times >= 0) & (times < t)
        core = model.jump
    else:
        crossed = (times >= t) & (times < 0)
        core = model.jump.conj().T
    core_eig = v.conj().T @ core @ v
    phase = np.exp(-1j * np.outer(times, w))       # exp(-i s H) diagonal
    dressed = np.conj(phase) * ((phase * a) @ core_eig.T)
    coords = np.where(crossed[:, None], dressed, a)
    coords = np.exp(-1j * t * w) * coords
    return coords @ v.T


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Seeded batch of jump times and their cocycle values V(t, s) eta."""

    seed: int
    t: float
    times: np.ndarray
    values: np.ndarray

    @property
    def count(self) -> int:
        return len(self.times)


def run_trajectories(model: ModelSpec, density: JumpDensity, eta, t: float,
                     count: int, seed: int) -> TrajectoryEnsemble:
    """Sample an ensemble of trajectories with a counter-based generator."""
    if count < 2:
        raise UnsupportedInput(f"need at least 2 trajectories, got {count}")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    times = sample_jump_time(density, rng, size=int(count))
    values = trajectory_values(model, eta, times, t)
    return TrajectoryEnsemble(int(seed), float(t), times, values)


def expectation_from_ensemble(ensemble: TrajectoryEnsemble,
                              observable) -> tuple[float, float]:
    """Sample mean and standard error of a Hermitian observable."""
    a = require_hermitian(observable, "observable")
    vals = np.einsum("mi,ij,mj->m", ensemble.values.conj(), a,
                     ensemble.values).real
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(len(vals)))
    return mean, stderr


def mc_expectation(model: ModelSpec, density: JumpDensity, observable, eta,
                   t: float, count: int, seed: int) -> tuple[float, float]:
    """Monte Carlo estimate of the ensemble expectation of an observable."""
    ensemble = run_trajectories(model, density, eta, t, count, seed)
    return expectation_from_ensemble(ensemble, observable)


def deterministic_expectation(model: ModelSpec, density: JumpDensity,
                              observable, eta, t: float) -> float:
    """Expectation via the boundary-value solve on the square-root profile.

    The initial field sqrt(rho(z)) eta at z > 0 carries the whole source
    ensemble at once.  It is unit-normalized on the grid: the raw grid mass
    differs from 1 by the declared tail plus quadrature error, and leaving
    that in would shift every observable by the same factor, breaking exact
    unitarity of the identity observable.
    """
    a = require_hermitian(observable, "observable")
    eta = _unit_internal_state(eta)
    grid = density.grid
    profile = np.zeros(grid.points)
    profile[grid.zero_index + 1:] = np.sqrt(density.weights[1:])
    chi0 = make_field(grid, np.outer(profile, eta))
    mass = chi0.norm_squared()
    if mass <= 0:
        raise DegenerateDensity("density has no mass at z > 0")
    chi0 = chi0.with_values(chi0.values / np.sqrt(mass))
    chi_t = solve_jump_transport(model, chi0, t)
    return float(np.einsum("ji,ik,jk->", chi_t.values.conj(), a,
                           chi_t.values).real * grid.dz)


def quadrature_expectation(model: ModelSpec, rho, observable, eta, t: float,
                           upper: float = np.inf) -> float:
    """Adaptive-quadrature reference value against the analytic density.

    Integrates rho(s) <V(t,s) eta, A V(t,s) eta> over [0, upper], splitting
    at s = t where the crossing count switches and the integrand jumps.
    """
    a = require_hermitian(observable, "observable")
    eta = _unit_internal_state(eta)

    def integrand(s):
        val = jump_cocycle(model, t, s) @ eta
        return float(rho(s)) * float(np.vdot(val, a @ val).real)

    cuts = [0.0]
    if 0.0 < t < upper:
        cuts.append(float(t))
    cuts.append(upper)
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        piece, _ = quad(integrand, lo, hi, epsabs=1e-10, epsrel=1e-10,
                        limit=200)
        total += piece
    return total
