"""Disordered multimode channel model.

The channel is a Haar-random unitary over the joint (spatial x polarization)
mode space, the lossless idealization of a strongly mixing multimode fiber.
Each output spatial mode, observed behind an H or V analyzer, realizes an
effective polarization projector on the chosen input mode; the projector
parameters follow directly from the channel coefficients.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .polarization import AmplitudeVector, PoincareState, Projector, wrap_angle

POL_H, POL_V = 0, 1
_POL_LETTERS = ("H", "V")
_POL_INDEX = {"H": POL_H, "V": POL_V}

# Below this magnitude a coefficient is treated as exactly zero when
# extracting projector angles (the angle formulas are undefined there).
DEGENERATE_EPS = 1e-300


def _pol_index(pol: str | int) -> int:
    if pol in (POL_H, POL_V):
        return int(pol)
    try:
        return _POL_INDEX[pol]
    except (KeyError, TypeError):
        raise ValueError(f"polarization must be 'H' or 'V', got {pol!r}") from None


@dataclass(frozen=True)
class TransmissionMatrix:
    """Complex (2M)x(2M) channel matrix over (spatial mode, polarization).

    Row index is ``2*k + p_out`` and column index ``2*b + p_in`` with
    H = 0, V = 1.  Matrices built by :func:`random_tm` are unitary.
    """

    m_spatial: int
    entries: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self) -> None:
        n = 2 * self.m_spatial
        if self.entries.shape != (n, n):
            raise ValueError(
                f"entries must have shape ({n}, {n}), got {self.entries.shape}"
            )
        if not np.iscomplexobj(self.entries):
            object.__setattr__(self, "entries", self.entries.astype(complex))
        self.entries.setflags(write=False)

    def coefficient(self, k: int, pol_out: str | int, b: int, pol_in: str | int) -> complex:
        """Coefficient from input (b, pol_in) to output (k, pol_out)."""
        self._check_mode(k)
        self._check_mode(b)
        return complex(self.entries[2 * k + _pol_index(pol_out), 2 * b + _pol_index(pol_in)])

    def unitarity_residual(self) -> float:
        """Max absolute entry of T^dagger T - I."""
        n = 2 * self.m_spatial
        return float(np.max(np.abs(self.entries.conj().T @ self.entries - np.eye(n))))

    def _check_mode(self, index: int) -> None:
        if not 0 <= index < self.m_spatial:
            raise ValueError(
                f"spatial mode {index} out of range [0, {self.m_spatial})"
            )


@dataclass(frozen=True)
class SpecklePattern:
    """Per-output-mode intensities behind H and V analyzers."""

    intensity_h: np.ndarray
    intensity_v: np.ndarray

    def __post_init__(self) -> None:
        if self.intensity_h.shape != self.intensity_v.shape:
            raise ValueError("intensity arrays must have matching shapes")
        self.intensity_h.setflags(write=False)
        self.intensity_v.setflags(write=False)

    def total(self) -> float:
        return float(np.sum(self.intensity_h) + np.sum(self.intensity_v))


def random_tm(m_spatial: int, seed: int) -> TransmissionMatrix:
    """Haar-distributed (2M)x(2M) unitary, deterministic in ``seed``.

    Sampled by QR decomposition of an i.i.d. complex-Gaussian matrix with
    the R-diagonal phase correction, which makes the factorization unique
    and the distribution exactly Haar.
    """
    if m_spatial < 1:
        raise ValueError(f"m_spatial must be >= 1, got {m_spatial}")
    n = 2 * m_spatial
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return TransmissionMatrix(m_spatial, q, int(seed))


def projector_from_tm(
    tm: TransmissionMatrix, k: int, detector_pol: str | int, b: int
) -> Projector:
    """Effective polarization projector seen at output (k, detector_pol).

    For coefficients ``t_h`` (from input H) and ``t_v`` (from input V) into
    that output, the projector has ``|c| = sqrt(|t_v|^2 + |t_h|^2)``,
    ``arg c = arg t_h``, ``theta = 2 atan(|t_v|/|t_h|)`` and
    ``phi = arg t_v - arg t_h``.  Degenerate coefficients fall back to the
    pole values; if both vanish the projector is dark.
    """
    p_out = _pol_index(detector_pol)
    t_h = tm.coefficient(k, p_out, b, POL_H)
    t_v = tm.coefficient(k, p_out, b, POL_V)
    ah, av = abs(t_h), abs(t_v)
    if ah < DEGENERATE_EPS and av < DEGENERATE_EPS:
        return Projector(0j, PoincareState(0.0, 0.0))
    magnitude = math.hypot(ah, av)
    if ah < DEGENERATE_EPS:
        return Projector(
            cmath.rect(magnitude, cmath.phase(t_v)), PoincareState(math.pi, 0.0)
        )
    theta = 2.0 * math.atan2(av, ah)
    phi = wrap_angle(cmath.phase(t_v) - cmath.phase(t_h))
    return Projector(cmath.rect(magnitude, cmath.phase(t_h)), PoincareState(theta, phi))


def bob_projector_set(
    tm: TransmissionMatrix, positions: list[int], b: int
) -> list[Projector]:
    """Projectors for every (position, detector) pair, position-major, H first."""
    if not positions:
        raise ValueError("positions must be non-empty")
    if len(set(positions)) != len(positions):
        raise ValueError(f"duplicate positions in {positions}")
    return [
        projector_from_tm(tm, k, pol, b)
        for k in positions
        for pol in (POL_H, POL_V)
    ]


def speckle_intensity(
    tm: TransmissionMatrix, input_vector: AmplitudeVector, b: int
) -> SpecklePattern:
    """Output intensity pattern for a unit-norm input state at mode ``b``."""
    if abs(input_vector.norm_sq() - 1.0) > 1e-9:
        raise ValueError("input amplitude vector must be unit-norm")
    tm._check_mode(b)
    out = tm.entries[:, 2 * b] * input_vector.h + tm.entries[:, 2 * b + 1] * input_vector.v
    intensity = np.abs(out) ** 2
    return SpecklePattern(intensity[POL_H::2].copy(), intensity[POL_V::2].copy())


def save_tm(tm: TransmissionMatrix, path: str | Path) -> None:
    """Write the channel matrix in the plain-text interchange format.

    Header ``TM v1 M=<int> seed=<uint64>`` followed by one line per entry,
    ``k p' j p re im``, with 17 significant digits so the round trip is
    exact.
    """
    lines = [f"TM v1 M={tm.m_spatial} seed={tm.seed}"]
    for k in range(tm.m_spatial):
        for p_out in (POL_H, POL_V):
            row = tm.entries[2 * k + p_out]
            for j in range(tm.m_spatial):
                for p_in in (POL_H, POL_V):
                    z = row[2 * j + p_in]
                    lines.append(
                        f"{k} {_POL_LETTERS[p_out]} {j} {_POL_LETTERS[p_in]} "
                        f"{z.real:.17g} {z.imag:.17g}"
                    )
    Path(path).write_text("\n".join(lines) + "\n")


def load_tm(path: str | Path) -> TransmissionMatrix:
    """Read a channel matrix written by :func:`save_tm`."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "TM" or header[1] != "v1":
        raise ValueError(f"{path}: bad header {lines[0]!r}")
    try:
        m_spatial = int(header[2].removeprefix("M="))
        seed = int(header[3].removeprefix("seed="))
    except ValueError:
        raise ValueError(f"{path}: bad header {lines[0]!r}") from None
    n = 2 * m_spatial
    entries = np.zeros((n, n), dtype=complex)
    seen = np.zeros((n, n), dtype=bool)
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
        k, p_out, j, p_in = int(parts[0]), _pol_index(parts[1]), int(parts[2]), _pol_index(parts[3])
        if not (0 <= k < m_spatial and 0 <= j < m_spatial):
            raise ValueError(f"{path}:{lineno}: mode index out of range")
        row, col = 2 * k + p_out, 2 * j + p_in
        entries[row, col] = complex(float(parts[4]), float(parts[5]))
        seen[row, col] = True
    if not seen.all():
        raise ValueError(f"{path}: {int((~seen).sum())} entries missing")
    return TransmissionMatrix(m_spatial, entries, seed)


def write_speckle_csv(pattern: SpecklePattern, path: str | Path) -> None:
    """Dump a speckle pattern as ``k,intensity_h,intensity_v`` rows."""
    lines = ["k,intensity_h,intensity_v"]
    for k, (ih, iv) in enumerate(zip(pattern.intensity_h, pattern.intensity_v)):
        lines.append(f"{k},{ih:.12g},{iv:.12g}")
    Path(path).write_text("\n".join(lines) + "\n")
