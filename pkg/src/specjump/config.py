"""Global numerics configuration.

All tolerances used by the library live in one frozen dataclass.  The module
level instance ``numerics`` is what library code reads; swap it out with
``set_numerics`` to tighten or relax the whole stack at once (tests do this
sparingly).  Values are absolute unless the name says otherwise.
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class NumericsConfig:
    # dense linear algebra
    unitarity_tol: float = 1e-12          # U'U = 1 defect for evolve output
    hermiticity_rel_tol: float = 1e-10    # |A - A'| <= tol * |A| gate on evolve input
    model_hermitian_tol: float = 1e-12    # model generator self-adjointness
    model_unitary_tol: float = 1e-12      # jump matrix unitarity
    commutation_tol: float = 1e-10        # [jump, energy(k)] on the active grid
    function_consistency_tol: float = 1e-10   # f(A) checked against its defining relation

    # spectral fields
    roundtrip_tol: float = 1e-12          # transform there and back
    parseval_rel_tol: float = 1e-10       # norm agreement across representations
    commensurate_tol: float = 1e-9        # |a/dz - round(a/dz)| gate for shifts
    projector_tol: float = 1e-10          # idempotence / self-adjointness defects
    seam_guard_fraction: float = 0.25     # width of the wrap guard band, units of L
    seam_guard_mass_tol: float = 1e-9     # scenario warning threshold for guard mass

    # boundary-value solvers
    support_mass_rel_tol: float = 1e-12   # initial-data mass allowed at z <= 0
    hardy_mass_rel_tol: float = 1e-8      # class-membership mass outside the half space
    oracle_tol: float = 1e-10             # pointwise agreement with independent oracles
    cocycle_law_tol: float = 1e-9         # composition law defect
    norm_drift_tol: float = 1e-10         # norm conservation per solve
    connection_tol: float = 1e-8          # input/output reflection identity defect
    reversal_tol: float = 1e-8            # time-reversal exchange defect
    precondition_tol: float = 1e-12       # structural gates (conjugation symmetry)

    # inductive limit
    class_tail_rel_tol: float = 1e-9      # momentum mass allowed above the cutoff
    normalization_tol: float = 1e-9       # amplitude normalization gate
    support_preservation_tol: float = 1e-12   # momentum support drift per propagation
    massless_exact_tol: float = 1e-12     # transport identity in the massless case

    # monte carlo
    density_norm_tol: float = 1e-9        # integral + declared tail must reach 1
    trajectory_unitarity_tol: float = 1e-12


numerics = NumericsConfig()


def set_numerics(cfg: NumericsConfig) -> NumericsConfig:
    """Install a new global numerics configuration, returning the old one."""
    global numerics
    old = numerics
    numerics = cfg
    return old


def adjusted(**overrides) -> NumericsConfig:
    """A copy of the current configuration with the given fields replaced."""
    return replace(numerics, **overrides)
