"""Periodic spectral fields on a symmetric interval.

Grid conventions
----------------
Position samples live on z_j = -L + j*dz, j = 0..N-1, dz = 2L/N, with N a
power of two.  The interval is a torus: index arithmetic wraps at +/-L, and
experiments are expected to keep wave mass away from that seam (see
``seam_guard_mass``).

Momentum values follow the standard discrete Fourier ordering
k = dk * [0, 1, ..., N/2-1, -N/2, ..., -1] with dk = pi/L, so
k ranges over {-pi N/(2L), ..., pi (N-2)/(2L)} and dz*dk*N = 2 pi exactly.
A momentum amplitude f(k) multiplies the plane wave exp(i k z): position
values are psi(z_j) = (dk/2pi) * sum_k f(k) exp(i k z_j), and the squared
norm is dz * sum |psi|^2 = (dk/2pi) * sum |f|^2 (Parseval).

Vector-valued fields carry one row per grid point, shape (N, n).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable

import numpy as np

from . import config
from .errors import (GridMismatch, NonCommensurateShift, WrongRepresentation)

POSITION = "position"
MOMENTUM = "momentum"
_REPRESENTATIONS = (POSITION, MOMENTUM)


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Uniform periodic grid on [-half_width, half_width)."""

    half_width: float
    points: int

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        n = self.points
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError(f"points must be a power of two >= 2, got {n}")

    @property
    def dz(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def dk(self) -> float:
        return np.pi / self.half_width

    @cached_property
    def z(self) -> np.ndarray:
        z = -self.half_width + self.dz * np.arange(self.points)
        z.setflags(write=False)
        return z

    @cached_property
    def k(self) -> np.ndarray:
        n = self.points
        ints = np.concatenate([np.arange(0, n // 2), np.arange(-n // 2, 0)])
        k = self.dk * ints
        k.setflags(write=False)
        return k

    @property
    def zero_index(self) -> int:
        """Index of the sample at z = 0."""
        return self.points // 2

    def commensurate_steps(self, a: float) -> int:
        """The integer a/dz, raising NonCommensurateShift when a is not one."""
        ratio = a / self.dz
        steps = round(ratio)
        if abs(ratio - steps) > config.numerics.commensurate_tol:
            raise NonCommensurateShift(
                f"shift {a} is not an integer multiple of dz={self.dz} "
                f"(ratio defect {abs(ratio - steps):.3e})")
        return steps

    def index_left_of(self, threshold: float) -> int:
        """Number of samples with z strictly below ``threshold``.

        Thresholds within commensurate_tol of a grid point are snapped to it
        first, so that a sample sitting exactly on the threshold is reliably
        excluded regardless of floating-point noise.
        """
        pos = (threshold + self.half_width) / self.dz
        snapped = round(pos)
        if abs(pos - snapped) <= config.numerics.commensurate_tol:
            pos = snapped
        else:
            pos = np.ceil(pos)
        return int(min(max(pos, 0), self.points))

    def same_as(self, other: "SpectralGrid") -> bool:
        return self.points == other.points and self.half_width == other.half_width


def _check_same_grid(a: SpectralGrid, b: SpectralGrid):
    if not a.same_as(b):
        raise GridMismatch(
            f"grids differ: (L={a.half_width}, N={a.points}) vs (L={b.half_width}, N={b.points})")


@dataclass(frozen=True, eq=False)
class WaveField:
    """Vector-valued samples on a grid, in one declared representation."""

    grid: SpectralGrid
    values: np.ndarray
    representation: str = POSITION

    def __post_init__(self):
        if self.representation not in _REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        v = np.array(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.points:
            raise ValueError(
                f"values shape {np.shape(self.values)} does not match N={self.grid.points}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def components(self) -> int:
        return self.values.shape[1]

    def with_values(self, values) -> "WaveField":
        return WaveField(self.grid, values, self.representation)

    def norm_squared(self) -> float:
        s = float((np.abs(self.values) ** 2).sum())
        if self.representation == POSITION:
            return self.grid.dz * s
        return self.grid.dk / (2.0 * np.pi) * s

    def norm(self) -> float:
        return float(np.sqrt(self.norm_squared()))

    def sample_norms(self) -> np.ndarray:
        """Euclidean norm of the internal vector at every sample."""
        return np.sqrt((np.abs(self.values) ** 2).sum(axis=1))


def make_field(grid: SpectralGrid, values, representation: str = POSITION) -> WaveField:
    return WaveField(grid, values, representation)


def bump_packet(grid: SpectralGrid, center: float, width: float, amplitudes,
                momentum: float = 0.0) -> WaveField:
    """Smooth wave packet with exactly compact support (center - width, center + width).

    Profile exp(1 - 1/(1 - u^2)) on |u| < 1, zero outside, times a plane-wave
    carrier exp(i * momentum * z) and a constant internal vector.  Infinitely
    differentiable, so spectral tails decay faster than any power.
    """
    if width <= 0:
        raise ValueError("packet width must be positive")
    amplitudes = np.atleast_1d(np.asarray(amplitudes, dtype=complex))
    u = (grid.z - center) / width
    profile = np.zeros(grid.points)
    inside = np.abs(u) < 1.0
    profile[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    carrier = profile * np.exp(1j * momentum * grid.z)
    return WaveField(grid, np.outer(carrier, amplitudes), POSITION)


def gaussian_packet(grid: SpectralGrid, center: float, width: float, amplitudes,
                    momentum: float = 0.0) -> WaveField:
    """Gaussian wave packet exp(-(z-center)^2/(2 width^2) + i momentum z).

    The complement of bump_packet: no exact support cutoff, but the momentum
    spectrum is a Gaussian of spread 1/width around the carrier, so a packet
    a few widths away from a momentum cutoff lies inside the class to far
    below any working tolerance, with no projection step and no projection
    tails near the torus seam.
    """
    if width <= 0:
        raise ValueError("packet width must be positive")
    amplitudes = np.atleast_1d(np.asarray(amplitudes, dtype=complex))
    u = (grid.z - center) / width
    carrier = np.exp(-0.5 * u ** 2 + 1j * momentum * grid.z)
    return WaveField(grid, np.outer(carrier, amplitudes), POSITION)


def _alternating_signs(n: int) -> np.ndarray:
    s = np.ones(n)
    s[1::2] = -1.0
    return s


def transform(field: WaveField, to: str) -> WaveField:
    """Change representation.  Strict: the field must not already be in ``to``.

    Forward (position to momentum): f(k_j) = dz * (-1)^j * FFT(psi)_j.
    Inverse undoes it exactly; a round trip reproduces the input to rounding.
    The (-1)^j factor is exp(-i k_j z_0) for z_0 = -L, which recenters the
    transform on the symmetric interval.
    """
    if to not in _REPRESENTATIONS:
        raise ValueError(f"unknown representation {to!r}")
    if field.representation == to:
        raise WrongRepresentation(f"field is already in the {to} representation")
    n = field.grid.points
    signs = _alternating_signs(n)[:, None]
    if to == MOMENTUM:
        out = field.grid.dz * signs * np.fft.fft(field.values, axis=0)
    else:
        out = np.fft.ifft(signs * field.values, axis=0) / field.grid.dz
    return WaveField(field.grid, out, to)


def to_position(field: WaveField) -> WaveField:
    return field if field.representation == POSITION else transform(field, POSITION)


def to_momentum(field: WaveField) -> WaveField:
    return field if field.representation == MOMENTUM else transform(field, MOMENTUM)


@dataclass(frozen=True, eq=False)
class SymbolTable:
    """A Hermitian matrix per momentum mode, aligned with grid.k ordering."""

    grid: SpectralGrid
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=complex)
        n = self.grid.points
        if e.ndim != 3 or e.shape[0] != n or e.shape[1] != e.shape[2]:
            raise ValueError(f"entries must have shape (N, n, n), got {e.shape}")
        scale = max(float(np.abs(e).max(initial=0.0)), 1.0)
        defect = float(np.abs(e - e.conj().transpose(0, 2, 1)).max())
        if defect > 1e-12 * scale:
            raise ValueError(f"symbol entries are not Hermitian: defect {defect:.3e}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def components(self) -> int:
        return self.entries.shape[1]

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Batched eigendecomposition of every mode matrix, cached."""
        return np.linalg.eigh(self.entries)


def scalar_symbol(grid: SpectralGrid, values) -> SymbolTable:
    """Build a one-component symbol table from per-mode real values."""
    v = np.asarray(values, dtype=float)
    return SymbolTable(grid, v[:, None, None].astype(complex))


def apply_propagator(field: WaveField, symbol: SymbolTable, t: float) -> WaveField:
    """Multiply momentum amplitudes by exp(-i t s(k)) mode by mode.

    Accepts a field in either representation and returns it in the same one.
    Per-mode matrix exponentials go through the (cached) Hermitian
    eigendecomposition of the table, never through series or Krylov steps.
    """
    _check_same_grid(field.grid, symbol.grid)
    if field.components != symbol.components:
        raise GridMismatch(
            f"field has {field.components} components, symbol {symbol.components}")
    original = field.representation
    fk = to_momentum(field)
    if symbol.components == 1:
        phases = np.exp(-1j * t * symbol.entries[:, 0, 0].real)
        out = fk.values * phases[:, None]
    else:
        w, v = symbol.eig
        coeff = np.einsum("kji,kj->ki", v.conj(), fk.values)
        coeff = coeff * np.exp(-1j * t * w)
        out = np.einsum("kij,kj->ki", v, coeff)
    result = WaveField(field.grid, out, MOMENTUM)
    return result if original == MOMENTUM else transform(result, POSITION)


def hardy_project(field: WaveField, side: str, cutoff: float = 0.0) -> WaveField:
    """Project onto the momentum half space of the input or output class.

    side = "minus" keeps modes with k < cutoff (incoming waves), and at
    cutoff 0 also keeps the k = 0 mode: that mode is assigned to the minus
    class by convention, so the two cutoff-0 projections sum to the identity.
    side = "plus" keeps modes with k > -cutoff (outgoing waves).
    Acts diagonally in the momentum representation; returns the input's
    representation.
    """
    if side not in ("minus", "plus"):
        raise ValueError(f"side must be 'minus' or 'plus', got {side!r}")
    original = field.representation
    fk = to_momentum(field)
    k = field.grid.k
    if side == "minus":
        keep = k < cutoff
        if cutoff == 0.0:
            keep = keep | (k == 0.0)
    else:
        keep = k > -cutoff
    out = np.where(keep[:, None], fk.values, 0.0)
    result = WaveField(field.grid, out, MOMENTUM)
    return result if original == MOMENTUM else transform(result, POSITION)


def class_mass_defect(field: WaveField, side: str, cutoff: float = 0.0) -> float:
    """Fraction of the squared norm outside the requested momentum class."""
    total = field.norm_squared()
    if total == 0.0:
        return 0.0
    kept = hardy_project(field, side, cutoff).norm_squared()
    return max(0.0, (total - kept) / total)


def apply_on_mask(field: WaveField, mask: np.ndarray, matrix: np.ndarray) -> WaveField:
    """Apply a constant matrix to the samples selected by a boolean mask."""
    if field.representation != POSITION:
        raise WrongRepresentation("mask application acts on position samples")
    out = field.values.copy()
    out[mask] = field.values[mask] @ np.asarray(matrix, dtype=complex).T
    return field.with_values(out)


def jump_left_of(field: WaveField, threshold: float, jump: np.ndarray,
                 convention: str = "left-closed") -> WaveField:
    """Multiply samples with z < threshold by the jump matrix.

    The indicator is 1 exactly on z < threshold; a sample on the threshold
    itself is left alone.  ``convention`` documents and pins that choice;
    only "left-closed" is defined.
    """
    if convention != "left-closed":
        raise ValueError(f"unsupported indicator convention {convention!r}")
    cut = field.grid.index_left_of(threshold)
    mask = np.arange(field.grid.points) < cut
    return apply_on_mask(field, mask, jump)


def keep_left_of(field: WaveField, threshold: float) -> WaveField:
    """Zero every sample with z >= threshold (sharp half-space cut)."""
    if field.representation != POSITION:
        raise WrongRepresentation("half-space cut acts on position samples")
    cut = field.grid.index_left_of(threshold)
    out = field.values.copy()
    out[cut:] = 0.0
    return field.with_values(out)


def grid_shift(field: WaveField, a: float) -> WaveField:
    """Exact sample relabeling psi'(z) = psi(z + a) for commensurate a.

    The shift wraps at the torus seam; callers keep mass away from it.
    """
    if field.representation != POSITION:
        raise WrongRepresentation("grid_shift acts on position samples")
    steps = field.grid.commensurate_steps(a)
    if steps == 0:
        return field
    return field.with_values(np.roll(field.values, -steps, axis=0))


def reflect_through_origin(field: WaveField) -> WaveField:
    """Sample relabeling psi'(z) = psi(-z) on the torus (z = -L is fixed)."""
    if field.representation != POSITION:
        raise WrongRepresentation("reflection acts on position samples")
    idx = (-np.arange(field.grid.points)) % field.grid.points
    return field.with_values(field.values[idx])


def generator_phase(field: WaveField, generator_eig: tuple[np.ndarray, np.ndarray],
                    scale: float = 1.0) -> WaveField:
    """Multiply sample j by exp(-i * scale * z_j * G), G a Hermitian generator.

    ``generator_eig`` is the (eigenvalues, eigenvectors) pair of G, as cached
    on model objects; passing the pair avoids re-diagonalizing per call.
    """
    if field.representation != POSITION:
        raise WrongRepresentation("generator phases act on position samples")
    w, v = generator_eig
    if v.shape[0] != field.components:
        raise GridMismatch(
            f"generator dimension {v.shape[0]} vs field components {field.components}")
    z = field.grid.z
    coeff = field.values @ v.conj()
    coeff = coeff * np.exp(-1j * scale * np.outer(z, w))
    return field.with_values(coeff @ v.T)


def apply_constant_matrix(field: WaveField, matrix: np.ndarray) -> WaveField:
    """Apply one constant matrix to every sample."""
    return field.with_values(field.values @ np.asarray(matrix, dtype=complex).T)


def seam_guard_mass(field: WaveField) -> float:
    """Fraction of the squared norm within the wrap guard band.

    The guard band is the set of samples closer than
    seam_guard_fraction * L to the torus seam at |z| = L.  Experiments are
    expected to keep this fraction negligible over their whole time window;
    scenarios report it so a wrapped tail cannot silently corrupt results.
    """
    f = to_position(field)
    lim = (1.0 - config.numerics.seam_guard_fraction) * field.grid.half_width
    band = np.abs(f.grid.z) > lim
    total = f.norm_squared()
    if total == 0.0:
        return 0.0
    inside = float((np.abs(f.values[band]) ** 2).sum()) * f.grid.dz
    return inside / total


_HEADER = struct.Struct("<dQQB")
_REP_FLAGS = {POSITION: 0, MOMENTUM: 1}
_FLAG_REPS = {v: k for k, v in _REP_FLAGS.items()}


def save_field(field: WaveField, path) -> None:
    """Write the binary field format.

    Layout: little-endian header (half_width f64, points u64, components u64,
    representation flag u8: 0 position / 1 momentum) followed by the sample
    matrix as row-major complex128.
    """
    header = _HEADER.pack(field.grid.half_width, field.grid.points,
                          field.components, _REP_FLAGS[field.representation])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype=np.complex128).tobytes())


def load_field(path) -> WaveField:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"truncated field file: {len(raw)} bytes")
    half_width, points, components, flag = _HEADER.unpack_from(raw)
    if flag not in _FLAG_REPS:
        raise ValueError(f"unknown representation flag {flag}")
    body = raw[_HEADER.size:]
    expected = points * components * 16
    if len(body) != expected:
        raise ValueError(f"field payload has {len(body)} bytes, expected {expected}")
    values = np.frombuffer(body, dtype=np.complex128).reshape(points, components)
    return WaveField(SpectralGrid(half_width, int(points)), values, _FLAG_REPS[flag])


def dump_field_csv(field: WaveField, target) -> None:
    """Human-readable dump: one row per sample, real and imaginary columns.

    The first column is z (position representation) or k (momentum).
    ``target`` is a path or an open text file.
    """
    from .report import format_float

    own = isinstance(target, (str, bytes)) or hasattr(target, "__fspath__")
    fh: IO[str] = open(target, "w", newline="") if own else target
    try:
        axis = "z" if field.representation == POSITION else "k"
        cols = [axis]
        for i in range(field.components):
            cols += [f"re_psi_{i}", f"im_psi_{i}"]
        fh.write(",".join(cols) + "\n")
        coords = field.grid.z if field.representation == POSITION else field.grid.k
        for j in range(field.grid.points):
            row = [format_float(coords[j])]
            for i in range(field.components):
                row.append(format_float(field.values[j, i].real))
                row.append(format_float(field.values[j, i].imag))
            fh.write(",".join(row) + "\n")
    finally:
        if own:
            fh.close()
