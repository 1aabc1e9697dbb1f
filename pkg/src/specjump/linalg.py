"""Dense Hermitian linear algebra on small internal spaces.

The internal space is a complex vector space of dimension n <= 64 with the
entrywise complex conjugation.  Everything here goes through explicit
eigendecompositions: at these sizes that is both faster and more predictable
than iterative or Pade-type routines, and it keeps unitarity defects at
rounding level.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from . import config
from .errors import NonHermitianInput

MAX_DIMENSION = 64


def _square_matrix(a, what: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        raise ValueError(f"{what} must be a 2d array, got a scalar")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} must be square, got shape {a.shape}")
    if a.shape[0] > MAX_DIMENSION:
        raise ValueError(f"{what} dimension {a.shape[0]} exceeds {MAX_DIMENSION}")
    return a


def hermitian_defect(a: np.ndarray) -> float:
    """Frobenius norm of A - A'."""
    return float(np.linalg.norm(a - a.conj().T))


def require_hermitian(a, what: str = "matrix") -> np.ndarray:
    """Return A as a complex array, raising NonHermitianInput when A != A'.

    The gate is relative: |A - A'|_F <= hermiticity_rel_tol * max(|A|_F, 1).
    """
    a = _square_matrix(a, what)
    tol = config.numerics.hermiticity_rel_tol * max(float(np.linalg.norm(a)), 1.0)
    defect = hermitian_defect(a)
    if defect > tol:
        raise NonHermitianInput(f"{what} is not Hermitian: defect {defect:.3e} > {tol:.3e}")
    return a


def evolve(generator, t: float) -> np.ndarray:
    """Unitary exp(-i t G) of a Hermitian generator G.

    Parameters
    ----------
    generator : (n, n) array_like
        Hermitian matrix.  Raises NonHermitianInput past the relative gate.
    t : float
        Evolution parameter.

    Returns
    -------
    (n, n) ndarray
        The unitary, built from the eigendecomposition of G so that the
        group law exp(-i(t+r)G) = exp(-itG) exp(-irG) holds to rounding.
    """
    g = require_hermitian(generator, "generator")
    w, v = np.linalg.eigh(g)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def hermitian_function(matrix, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a real function to a Hermitian matrix through its spectrum.

    ``fn`` receives the (real, ascending) eigenvalue vector and must return a
    real vector of the same shape.  The result is Hermitian by construction.
    """
    a = require_hermitian(matrix, "matrix")
    w, v = np.linalg.eigh(a)
    fw = np.asarray(fn(w))
    if fw.shape != w.shape:
        raise ValueError(f"function changed spectrum shape {w.shape} -> {fw.shape}")
    if np.iscomplexobj(fw) and np.abs(fw.imag).max(initial=0.0) > 0:
        raise ValueError("function produced complex values on a real spectrum")
    return (v * fw.real) @ v.conj().T


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Internal model data: phase generator, boundary jump, mass.

    Fields
    ------
    hamiltonian : (n, n) Hermitian
        Generator of the internal phase rotation, in units where the
        evolution factor is exp(-i t hamiltonian).
    jump : (n, n) unitary
        Boundary jump applied when a trajectory crosses the origin.
    mass : (n, n) Hermitian positive semidefinite
        Mass matrix of the relativistic energy function
        energy(k) = sqrt(k^2 + mass^2).
    mass_bound : float
        Scalar m with m >= ||mass||; enters the limit error bounds.

    Structural invariants (unitarity of the jump, self-adjointness, the
    commutation of the jump with the energy function on a grid) are checked
    by ``validate_model``, not by the constructor, so that a deliberately
    broken model can still be constructed and reported on.
    """

    hamiltonian: np.ndarray
    jump: np.ndarray
    mass: np.ndarray
    mass_bound: float = None  # type: ignore[assignment]

    def __post_init__(self):
        ham = _square_matrix(self.hamiltonian, "hamiltonian")
        jump = _square_matrix(self.jump, "jump")
        n = ham.shape[0]
        if jump.shape != (n, n):
            raise ValueError(f"jump shape {jump.shape} does not match dimension {n}")
        mass = np.asarray(self.mass, dtype=complex)
        if mass.ndim == 0:
            mass = mass * np.eye(n)
        mass = _square_matrix(mass, "mass")
        if mass.shape != (n, n):
            raise ValueError(f"mass shape {mass.shape} does not match dimension {n}")
        for name, arr in (("hamiltonian", ham), ("jump", jump), ("mass", mass)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.mass_bound is None:
            bound = float(np.linalg.norm(mass, 2))
            object.__setattr__(self, "mass_bound", bound)
        else:
            object.__setattr__(self, "mass_bound", float(self.mass_bound))

    @property
    def n(self) -> int:
        return self.hamiltonian.shape[0]

    @cached_property
    def hamiltonian_eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and eigenvectors of the phase generator, cached."""
        w, v = np.linalg.eigh(self.hamiltonian)
        return w, v

    @cached_property
    def mass_eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and eigenvectors of the mass matrix, cached."""
        w, v = np.linalg.eigh(self.mass)
        return w, v

    def energy_eigvals(self, k) -> np.ndarray:
        """sqrt(k^2 + mass eigenvalue^2), broadcast over k."""
        w, _ = self.mass_eig
        k = np.asarray(k, dtype=float)
        return np.sqrt(k[..., None] ** 2 + w[None, :] ** 2)


@dataclass(frozen=True)
class InvariantCheck:
    name: str
    passed: bool
    defect: float
    tolerance: float


def validate_model(model: ModelSpec, grid=None) -> list[InvariantCheck]:
    """Re-check every structural model invariant; one entry per invariant.

    With a grid, the commutation of the jump with the energy function is
    checked at every active momentum; without one, that check is skipped.
    """
    cfg = config.numerics
    checks = []

    d = hermitian_defect(model.hamiltonian)
    checks.append(InvariantCheck("hamiltonian_hermitian", d <= cfg.model_hermitian_tol,
                                 d, cfg.model_hermitian_tol))

    d = float(np.linalg.norm(model.jump.conj().T @ model.jump - np.eye(model.n)))
    checks.append(InvariantCheck("jump_unitary", d <= cfg.model_unitary_tol,
                                 d, cfg.model_unitary_tol))

    d = hermitian_defect(model.mass)
    checks.append(InvariantCheck("mass_hermitian", d <= cfg.model_hermitian_tol,
                                 d, cfg.model_hermitian_tol))

    if checks[2].passed:
        wmin = float(np.linalg.eigvalsh(model.mass).min())
        d = max(0.0, -wmin)
        checks.append(InvariantCheck("mass_nonnegative", d <= cfg.model_hermitian_tol,
                                     d, cfg.model_hermitian_tol))
        wmax = float(np.abs(np.linalg.eigvalsh(model.mass)).max())
        d = max(0.0, wmax - model.mass_bound)
        checks.append(InvariantCheck("mass_bound_dominates", d <= cfg.model_hermitian_tol,
                                     d, cfg.model_hermitian_tol))
    else:
        checks.append(InvariantCheck("mass_nonnegative", False, float("nan"),
                                     cfg.model_hermitian_tol))
        checks.append(InvariantCheck("mass_bound_dominates", False, float("nan"),
                                     cfg.model_hermitian_tol))

    if grid is not None:
        # [jump, energy(k)] over the active grid; energy built in the mass frame
        w, v = np.linalg.eigh(model.mass)
        ek = np.sqrt(np.asarray(grid.k)[:, None] ** 2 + (w**2)[None, :])
        energy = np.einsum("ia,ka,ja->kij", v, ek, v.conj())
        comm = model.jump @ energy - energy @ model.jump
        d = float(np.sqrt((np.abs(comm) ** 2).sum(axis=(1, 2))).max())
        checks.append(InvariantCheck("jump_commutes_with_energy", d <= cfg.commutation_tol,
                                     d, cfg.commutation_tol))
    return checks


def all_invariants_hold(checks: list[InvariantCheck]) -> bool:
    return all(c.passed for c in checks)


_PRESET_RE = re.compile(r"^([a-z-]+)(?:\(([^)]*)\))?$")

_PAULI = {
    "pauli-x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "pauli-y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "pauli-z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def preset_matrix(name: str) -> np.ndarray:
    """Named matrix presets for configuration files and quick experiments.

    Recognized names: ``pauli-x``, ``pauli-y``, ``pauli-z``,
    ``identity(n)``, ``shift-cycle(n)`` (cyclic permutation, the finite
    stand-in for a one-sided shift), ``phase(theta)`` (1x1 unitary
    exp(i theta)).
    """
    m = _PRESET_RE.match(name.strip())
    if not m:
        raise ValueError(f"unrecognized matrix preset {name!r}")
    head, arg = m.group(1), m.group(2)
    if head in _PAULI:
        if arg is not None:
            raise ValueError(f"preset {head!r} takes no argument")
        return _PAULI[head].copy()
    if head == "identity":
        n = int(arg) if arg else 2
        return np.eye(n, dtype=complex)
    if head == "shift-cycle":
        if not arg:
            raise ValueError("shift-cycle needs a dimension, e.g. shift-cycle(3)")
        n = int(arg)
        if n < 1 or n > MAX_DIMENSION:
            raise ValueError(f"shift-cycle dimension out of range: {n}")
        p = np.zeros((n, n), dtype=complex)
        p[np.arange(n), (np.arange(n) - 1) % n] = 1.0
        return p
    if head == "phase":
        if arg is None:
            raise ValueError("phase needs an angle, e.g. phase(0.7)")
        return np.array([[np.exp(1j * float(arg))]], dtype=complex)
    raise ValueError(f"unrecognized matrix preset {name!r}")
