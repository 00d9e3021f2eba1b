"""Two-photon joint-detection physics for a visibility-parametrized source.

The source interpolates between a polarization singlet (visibility 1) and
the classically correlated separable mixture left when the photons no longer
interfere (visibility 0).  The working formula for a joint detection by an
analyzer state (theta, phi) and a weighted channel projector
(c, theta_k, phi_k) is

    p = |c|^2/2 * [ cos^2(theta/2) cos^2(theta_k/2)
                    + sin^2(theta/2) sin^2(theta_k/2)
                    - 2 nu |cos(theta/2) cos(theta_k/2)
                            sin(theta/2) sin(theta_k/2)| cos(phi_k - phi) ]

(the absolute-value bars are inert for angles in [0, pi] and are kept as a
matter of record).  In this convention matching polarizations are
correlated; the first-principles Born-rule engine below uses the singlet
directly and therefore agrees after relabeling the channel projector
theta_k -> pi - theta_k.  Tests pin that equivalence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .polarization import PoincareState, Projector, amplitude_vector


class UndefinedContrastError(ValueError):
    """Raised when the interference contrast denominator vanishes."""


def _check_visibility(nu: float, name: str = "nu") -> float:
    nu = float(nu)
    if not 0.0 <= nu <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {nu}")
    return nu


def _half_trig(theta: float) -> tuple[float, float]:
    """(cos(theta/2), sin(theta/2)) with exact values at the poles.

    Plain ``cos(pi/2)`` rounds to ~6e-17, which would make genuinely
    degenerate rate denominators nonzero; pole states are exact.
    """
    if theta == 0.0:
        return 1.0, 0.0
    if theta == math.pi:
        return 0.0, 1.0
    return math.cos(0.5 * theta), math.sin(0.5 * theta)


@dataclass(frozen=True)
class PairStateModel:
    """Photon-pair source parametrized by interference visibility."""

    visibility: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "visibility", _check_visibility(self.visibility, "visibility"))

    def density_matrix(self) -> np.ndarray:
        """4x4 two-photon density matrix in the (HH, HV, VH, VV) basis."""
        singlet = np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0)
        rho_ent = np.outer(singlet, singlet.conj())
        rho_sep = np.diag([0.0, 0.5, 0.5, 0.0])
        nu = self.visibility
        return nu * rho_ent + (1.0 - nu) * rho_sep


@dataclass(frozen=True)
class DelayModel:
    """Decay of two-photon interference with source path delay."""

    coherence_length: float
    envelope: str = "gaussian"

    def __post_init__(self) -> None:
        if not self.coherence_length > 0.0:
            raise ValueError(f"coherence_length must be positive, got {self.coherence_length}")
        if self.envelope != "gaussian":
            raise ValueError(f"unsupported envelope {self.envelope!r}")

    def visibility_at(self, delta: float, nu0: float) -> float:
        """Effective visibility nu0 * exp(-(delta/l_c)^2) at delay delta."""
        x = delta / self.coherence_length
        return nu0 * math.exp(-x * x)


@dataclass(frozen=True)
class HomCurve:
    """Sampled coincidence rate versus delay, with its contrast."""

    delays: np.ndarray
    rates: np.ndarray
    contrast: float

    def __post_init__(self) -> None:
        if self.delays.shape != self.rates.shape:
            raise ValueError("delays and rates must have matching shapes")
        self.delays.setflags(write=False)
        self.rates.setflags(write=False)


def joint_probability(alice: PoincareState, bob: Projector, nu: float) -> float:
    """Coincidence probability of the (alice, bob) joint projection."""
    nu = _check_visibility(nu)
    ca, sa = _half_trig(alice.theta)
    cb, sb = _half_trig(bob.state.theta)
    cross = abs(ca * cb * sa * sb) * math.cos(bob.state.phi - alice.phi)
    return 0.5 * bob.weight * (ca * ca * cb * cb + sa * sa * sb * sb - 2.0 * nu * cross)


def relabeled(bob: Projector) -> Projector:
    """Antipodal relabeling theta_k -> pi - theta_k linking the two engines."""
    return Projector(
        bob.amplitude, PoincareState(math.pi - bob.state.theta, bob.state.phi)
    )


def oracle_joint_probability(alice: PoincareState, bob: Projector, nu: float) -> float:
    """First-principles Born-rule value via explicit 4x4 density matrix.

    Builds the mixed two-photon state for visibility ``nu`` and contracts it
    with the tensor product of the two projectors.  Equals
    :func:`joint_probability` evaluated on ``relabeled(bob)``.
    """
    rho = PairStateModel(nu).density_matrix()
    a = amplitude_vector(alice)
    b = amplitude_vector(bob.state)
    va = np.array([a.h, a.v])
    vb = np.array([b.h, b.v]) * bob.amplitude
    proj = np.kron(np.outer(va, va.conj()), np.outer(vb, vb.conj()))
    return float(np.real(np.trace(rho @ proj)))


def hom_rate(
    alice: PoincareState,
    bob: Projector,
    delta: float,
    model: DelayModel,
    nu0: float,
) -> float:
    """Coincidence rate at source delay ``delta``.

    At zero delay the pair interferes with visibility ``nu0``; for delays
    far beyond the coherence length the state is separable.
    """
    nu0 = _check_visibility(nu0, "nu0")
    return joint_probability(alice, bob, model.visibility_at(delta, nu0))


def contrast(alice: PoincareState, bob: Projector, nu0: float) -> float:
    """Closed-form contrast (R_0 - R_inf)/R_inf of the delay curve."""
    nu0 = _check_visibility(nu0, "nu0")
    ca, sa = _half_trig(alice.theta)
    cb, sb = _half_trig(bob.state.theta)
    den = (ca * cb) ** 2 + (sa * sb) ** 2
    if den <= 1e-300:
        raise UndefinedContrastError(
            "contrast undefined: alice and bob are opposite poles"
        )
    num = abs(ca * cb * sa * sb) * math.cos(bob.state.phi - alice.phi)
    return -2.0 * nu0 * num / den


def hom_curve(
    alice: PoincareState,
    bob: Projector,
    model: DelayModel,
    nu0: float,
    npoints: int = 101,
    span: float = 5.0,
) -> HomCurve:
    """Sample the delay curve on [-span*l_c, span*l_c] and attach its contrast."""
    if npoints < 2:
        raise ValueError(f"npoints must be >= 2, got {npoints}")
    delays = np.linspace(
        -span * model.coherence_length, span * model.coherence_length, npoints
    )
    rates = np.array([hom_rate(alice, bob, d, model, nu0) for d in delays])
    return HomCurve(delays, rates, contrast(alice, bob, nu0))


def write_hom_csv(curve: HomCurve, path: str | Path) -> None:
    """Dump a delay curve as ``delta,rate`` rows, 12 significant digits."""
    lines = ["delta,rate"]
    for d, r in zip(curve.delays, curve.rates):
        lines.append(f"{d:.12g},{r:.12g}")
    Path(path).write_text("\n".join(lines) + "\n")
