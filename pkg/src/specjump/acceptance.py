"""Acceptance matrix: the numbered go/no-go checks for the whole kit.

Each criterion is a self-contained measurement with a declared wall-time
budget and a pass condition pinned to the package tolerances.  run_all
executes the measurements in order and never aborts early: a raised
exception is recorded as a failure with the exception text as the
detail.  The final criterion is the matrix itself, passing when every
earlier one passed inside the total time budget.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import config as package_config
from .field import (SpectralGrid, bump_packet, gaussian_packet,
                    generator_phase, make_field)
from .linalg import ModelSpec, preset_matrix
from .montecarlo import (exponential_density, expectation_from_ensemble,
                         quadrature_expectation, run_trajectories)
from .reflect import (DressedSpec, energy_symbol, moving_cut_projector,
                      norm_split, reflect_time_reversal_check,
                      solve_reflection)
from .toy import (cocycle_oracle_defect, ito_residual, solve_jump_transport,
                  time_reversal_check)
from .ultra import (LimitSweepConfig, kappa_threshold, limit_truncated_chi,
                    run_kappa_sweep, sup_phase_factor)

PAULI_Z = preset_matrix("pauli-z")
PAULI_X = preset_matrix("pauli-x")

TOTAL_BUDGET_S = 300.0


@dataclass(frozen=True)
class CriterionResult:
    cid: int
    name: str
    passed: bool
    detail: str
    runtime_s: float
    budget_s: float


def _c01_oracle():
    grid = SpectralGrid(16.0, 1024)
    model = ModelSpec(PAULI_Z, PAULI_X, 0.0)
    chi0 = bump_packet(grid, 4.0, 2.0, (1.0, 0.0))
    worst = max(cocycle_oracle_defect(model, chi0, t) for t in (0.5, 1.0, 2.0))
    tol = package_config.numerics.oracle_tol
    return worst <= tol, f"max oracle defect {worst:.2e} (tol {tol:.0e})"


def _c02_group_law():
    tol_law = package_config.numerics.cocycle_law_tol
    tol_norm = package_config.numerics.norm_drift_tol
    rng = np.random.Generator(np.random.Philox(key=20260816))
    grid = SpectralGrid(8.0, 256)
    worst_law = 0.0
    worst_norm = 0.0
    for trial in range(10):
        n = 2 + trial % 2
        h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = 0.5 * (h + h.conj().T)
        q, _ = np.linalg.qr(rng.normal(size=(n, n))
                            + 1j * rng.normal(size=(n, n)))
        model = ModelSpec(h, q, 0.0)
        amps = rng.normal(size=n) + 1j * rng.normal(size=n)
        chi0 = bump_packet(grid, 2.0, 1.5, amps)
        t, r = 0.75, 0.5
        once = solve_jump_transport(model, chi0, t)
        composed = solve_jump_transport(model, once, r)
        direct = solve_jump_transport(model, chi0, t + r)
        law = np.abs(composed.values - direct.values).max()
        worst_law = max(worst_law, law / chi0.sample_norms().max())
        worst_norm = max(worst_norm, abs(once.norm() / chi0.norm() - 1.0))
    passed = worst_law <= tol_law and worst_norm <= tol_norm
    return passed, (f"composition defect {worst_law:.2e} (tol {tol_law:.0e}),"
                    f" norm drift {worst_norm:.2e} (tol {tol_norm:.0e})")


def _c03_increment_orders():
    model = ModelSpec(PAULI_Z, PAULI_X, 0.0)
    eta = np.array([1.0, 0.0], dtype=complex)
    t = 1.0
    dts = [2.0 ** -p for p in range(4, 10)]
    off = [ito_residual(model, t, dt, 0.25, eta) for dt in dts]
    at = [ito_residual(model, t, dt, t + 0.5 * dt, eta) for dt in dts]
    off_ratios = [a / b for a, b in zip(off, off[1:])]
    at_ratios = [a / b for a, b in zip(at, at[1:])]
    passed = (all(abs(r - 4.0) <= 0.5 for r in off_ratios)
              and all(abs(r - 2.0) <= 0.5 for r in at_ratios))
    return passed, (f"halving ratios off jump "
                    f"{min(off_ratios):.2f}..{max(off_ratios):.2f} (want 4), "
                    f"at jump {min(at_ratios):.2f}..{max(at_ratios):.2f} "
                    f"(want 2)")


def _c04_reflection():
    tol = package_config.numerics
    model = ModelSpec(PAULI_Z, PAULI_X, 1.0)
    t = 1.5
    residuals = []
    worst_idem = 0.0
    worst_adj = 0.0
    worst_cons = 0.0
    for points in (256, 512, 1024, 2048):
        grid = SpectralGrid(32.0, points)
        phi0 = gaussian_packet(grid, 1.0, 2.0, (1.0, 0.0), momentum=-6.0)
        spec = DressedSpec(model)
        sol = solve_reflection(spec, phi0, t)
        residuals.append(sol.boundary_residual)
        total = norm_split(sol)[0]
        worst_cons = max(worst_cons, abs(total / phi0.norm_squared() - 1.0))
        project = moving_cut_projector(spec, energy_symbol(spec, grid), t)
        once = project(phi0)
        worst_idem = max(worst_idem, float(
            np.abs(project(once).values - once.values).max()))
        rng = np.random.default_rng(4)
        rough = phi0.with_values(rng.normal(size=phi0.values.shape)
                                 + 1j * rng.normal(size=phi0.values.shape))
        paired = project(rough)
        lhs = np.vdot(phi0.values, paired.values) * grid.dz
        rhs = np.vdot(once.values, rough.values) * grid.dz
        worst_adj = max(worst_adj,
                        abs(lhs - rhs) / (phi0.norm() * rough.norm()))
    ratios = [a / b for a, b in zip(residuals, residuals[1:])]
    halving = all(abs(r - 2.0) <= 0.4 for r in ratios)
    passed = (worst_idem <= tol.projector_tol
              and worst_adj <= tol.projector_tol
              and worst_cons <= 1.0e-9 and halving)
    return passed, (f"idempotence {worst_idem:.1e}, self-adjointness "
                    f"{worst_adj:.1e}, conservation {worst_cons:.1e}, "
                    "residual ratios "
                    + "/".join(f"{r:.2f}" for r in ratios))


def _c05_dispersion_gap():
    w = 1.0
    kappas = np.linspace(2.0, 101.0, 100)       # unit steps, all above w
    gaps = np.sqrt(kappas ** 2 + w ** 2) - kappas
    bounds = w ** 2 / (2.0 * kappas)
    marker = math.sqrt(101.0) - 10.0
    passed = bool(np.all(gaps < bounds)) and marker < 0.05
    return passed, (f"max gap/bound {float((gaps / bounds).max()):.6f} < 1, "
                    f"sqrt(101)-10 = {marker:.6f} < 0.05")


def _c06_sweep():
    grid = SpectralGrid(64.0, 2048)
    psi = gaussian_packet(grid, 0.0, 8.5, (1.0,), momentum=4.2)
    plan = LimitSweepConfig(5.0, (10.0, 20.0, 40.0, 80.0, 160.0),
                            1.0, 1.0, 0.01)
    massive = DressedSpec(ModelSpec(np.zeros((1, 1)), np.eye(1), 1.0))
    records = run_kappa_sweep(plan, massive, psi)
    errors = [r.error_I for r in records]
    slope = records[-1].slope_running
    massless = run_kappa_sweep(
        LimitSweepConfig(5.0, (10.0, 20.0), 1.0, 0.0, 0.01),
        DressedSpec(ModelSpec(np.zeros((1, 1)), np.eye(1), 0.0)), psi)
    massless_worst = max(r.error_I for r in massless)
    passed = (all(r.status == "ok" for r in records + massless)
              and all(r.error_I <= r.bound for r in records)
              and all(b < a for a, b in zip(errors, errors[1:]))
              and slope <= -1.7 and massless_worst <= 1.0e-12)
    return passed, (f"errors {errors[0]:.2e}->{errors[-1]:.2e} under bounds, "
                    f"slope {slope:.3f} <= -1.7, massless max "
                    f"{massless_worst:.1e}")


def _c07_threshold():
    base, m, t, eps = 5.0, 1.0, 1.0, 0.01
    thresh = kappa_threshold(base, m, t, eps)
    spec = DressedSpec(ModelSpec(np.zeros((1, 1)), np.eye(1), m))
    sup = sup_phase_factor(spec, t, 106.0, base)
    passed = thresh == 105.0 and sup < eps
    return passed, f"threshold {thresh:g} (want 105), sup factor {sup:.5f}"


def _c08_limit_object():
    grid = SpectralGrid(16.0, 512)
    model = ModelSpec(PAULI_Z, PAULI_X, 0.0)
    values = np.zeros((512, 2), dtype=complex)
    values[grid.z > 0.0] = np.array([0.8, 0.6j])
    psi = make_field(grid, values)
    worst = 0.0
    for t in (1.0, 2.5):
        chi = limit_truncated_chi(model, psi, t)
        toy = solve_jump_transport(model, psi, t)
        worst = max(worst, float(np.abs(chi.values - toy.values).max()))
    tol = package_config.numerics.oracle_tol
    return worst <= tol, f"limit vs transport gap {worst:.2e} (tol {tol:.0e})"


def _c09_ensemble():
    model = ModelSpec(PAULI_Z, PAULI_X, 0.0)
    grid = SpectralGrid(16.0, 2048)
    density = exponential_density(grid)
    eta = np.array([1.0, 0.0], dtype=complex)
    a = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    t = 1.0
    ensemble = run_trajectories(model, density, eta, t, 100000, seed=7)
    unit = float(np.abs(np.linalg.norm(ensemble.values, axis=1) - 1.0).max())
    mean, stderr = expectation_from_ensemble(ensemble, a)
    quad = quadrature_expectation(model, lambda s: np.exp(-s), a, eta, t)
    again = run_trajectories(model, density, eta, t, 100000, seed=7)
    bitwise = (np.array_equal(ensemble.values, again.values)
               and np.array_equal(ensemble.times, again.times))
    tol = package_config.numerics.trajectory_unitarity_tol
    passed = (abs(mean - quad) <= 4.0 * stderr and unit <= tol and bitwise)
    return passed, (f"|mean-quadrature| {abs(mean - quad):.2e} vs 4 stderr "
                    f"{4.0 * stderr:.2e}, unit defect {unit:.1e}, "
                    f"seed repro {'bitwise' if bitwise else 'BROKEN'}")


def _c10_reversal():
    tol = package_config.numerics.reversal_tol
    grid = SpectralGrid(16.0, 512)
    flat = time_reversal_check(
        ModelSpec(PAULI_Z, PAULI_X, 0.0),
        bump_packet(grid, 4.0, 2.0, (0.8, 0.6)), 1.5)
    spec = DressedSpec(ModelSpec(PAULI_Z, PAULI_X, 1.0))
    incoming = generator_phase(
        gaussian_packet(grid, 1.0, 2.0, (0.8, 0.6), momentum=-6.0),
        spec.kappa_eig, scale=-1.0)
    dressed = reflect_time_reversal_check(spec, incoming, 1.2)
    worst = max(flat.max_defect, dressed.max_defect)
    return worst <= tol, f"max exchange defect {worst:.2e} (tol {tol:.0e})"


_CRITERIA = (
    (1, "transport solver matches the pointwise cocycle oracle",
     1.0, _c01_oracle),
    (2, "composition law and unit norm ratio over seeded random models",
     5.0, _c02_group_law),
    (3, "discrete increment is second order off the jump, first order at it",
     5.0, _c03_increment_orders),
    (4, "moving-cut projector structure and boundary-residual halving",
     30.0, _c04_reflection),
    (5, "dispersion gap sits below the small-mass bound on the test lattice",
     1.0, _c05_dispersion_gap),
    (6, "carrier sweep decays quadratically under the declared bound",
     60.0, _c06_sweep),
    (7, "carrier threshold formula and endpoint phase factor",
     5.0, _c07_threshold),
    (8, "sweep limit object equals the transport solution",
     1.0, _c08_limit_object),
    (9, "ensemble mean matches quadrature under a frozen seed",
     30.0, _c09_ensemble),
    (10, "conjugation exchange symmetry of both solvers",
     5.0, _c10_reversal),
)


def run_all() -> list[CriterionResult]:
    """Execute every criterion; the closing entry summarizes the matrix."""
    results = []
    for cid, name, budget, fn in _CRITERIA:
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:            # a crash is a failure, not an abort
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - start
        if elapsed > budget:
            passed = False
            detail += f"; over the {budget:g}s budget"
        results.append(CriterionResult(cid, name, passed, detail,
                                       elapsed, budget))
    total = sum(r.runtime_s for r in results)
    closing = all(r.passed for r in results) and total <= TOTAL_BUDGET_S
    results.append(CriterionResult(
        11, "full matrix passes inside the total budget", closing,
        f"total {total:.1f}s of {TOTAL_BUDGET_S:g}s", total, TOTAL_BUDGET_S))
    return results


def self_test(stream=None) -> int:
    """Print one line per criterion; exit code 0 iff the matrix passes."""
    stream = sys.stdout if stream is None else stream
    results = run_all()
    for r in results:
        flag = "PASS" if r.passed else "FAIL"
        stream.write(f"[{r.cid:2d}] {flag}  {r.name}: {r.detail} "
                     f"({r.runtime_s:.2f}s)\n")
    failures = sum(not r.passed for r in results)
    stream.write(f"{len(results) - failures}/{len(results)} criteria passed\n")
    return 0 if failures == 0 else 1
