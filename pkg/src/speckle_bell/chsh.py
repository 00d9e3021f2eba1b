"""CHSH machinery: correlation values, S-parameters and the enumeration core.

A measurement basis pairs two projectors.  Alice's bases are orthogonal by
construction (the two ports of her analyzer); Bob's pair arbitrary channel
projectors and are generally non-orthogonal, which is fine because the
correlation value is a ratio of the four raw coincidence rates and needs no
further normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .polarization import (
    TWO_PI,
    PoincareState,
    Projector,
    orthogonal_complement,
    waveplate_detector1_angles,
)
from .pairsource import _check_visibility, joint_probability

TSIRELSON = 2.0 * math.sqrt(2.0)

# Correlation denominators at or below this are treated as undefined
# (e.g. a basis made of two dark projectors).
DENOMINATOR_EPS = 1e-300

_SEARCH_CHUNK = 50_000


class UndefinedCorrelationError(ValueError):
    """Raised when all four joint rates of a basis pair vanish."""


@dataclass(frozen=True)
class MeasurementBasis:
    """Two projectors treated as the outcomes of one measurement setting."""

    first: Projector
    second: Projector
    label: int | str

    def __post_init__(self) -> None:
        if self.first == self.second:
            raise ValueError("basis projectors must be distinct")


@dataclass(frozen=True)
class CorrelationValue:
    """Correlation E of a basis pair plus the four rates that produced it."""

    e: float
    rates: tuple[float, float, float, float]


@dataclass(frozen=True)
class SRecord:
    """One CHSH evaluation: S, its standard deviation and the setting labels."""

    s: float
    sigma: float
    alice_bases: tuple
    bob_bases: tuple


@dataclass(frozen=True)
class SEnumeration:
    """Result of a full enumeration: records plus the skipped-pair count."""

    records: list[SRecord] = field(repr=False)
    skipped: int = 0


def alice_basis(state: PoincareState, label: int | str = "A") -> MeasurementBasis:
    """Unit-weight orthogonal basis from one analyzer state."""
    return MeasurementBasis(
        Projector(1.0 + 0.0j, state),
        Projector(1.0 + 0.0j, orthogonal_complement(state)),
        label,
    )


def build_bob_bases(projectors: list[Projector]) -> list[MeasurementBasis]:
    """All unordered projector pairs as bases, labeled 1..N(N-1)/2."""
    if len(projectors) < 2:
        raise ValueError("need at least 2 projectors to form a basis")
    bases = []
    label = 1
    for i in range(len(projectors)):
        for j in range(i + 1, len(projectors)):
            bases.append(MeasurementBasis(projectors[i], projectors[j], label))
            label += 1
    return bases


def correlation(
    a_basis: MeasurementBasis, b_basis: MeasurementBasis, nu: float
) -> CorrelationValue:
    """Correlation value E from the four raw joint rates of a basis pair."""
    r11 = joint_probability(a_basis.first.state, b_basis.first, nu)
    r12 = joint_probability(a_basis.first.state, b_basis.second, nu)
    r21 = joint_probability(a_basis.second.state, b_basis.first, nu)
    r22 = joint_probability(a_basis.second.state, b_basis.second, nu)
    den = ((r11 + r12) + r21) + r22
    if den <= DENOMINATOR_EPS:
        raise UndefinedCorrelationError(
            f"all four joint rates vanish for bases {a_basis.label!r}, {b_basis.label!r}"
        )
    num = ((r11 - r12) - r21) + r22
    return CorrelationValue(num / den, (r11, r12, r21, r22))


def s_value(
    a: MeasurementBasis,
    a_prime: MeasurementBasis,
    b_k: MeasurementBasis,
    b_kprime: MeasurementBasis,
    nu: float,
) -> SRecord:
    """Noiseless S for one setting quadruple."""
    e1 = correlation(a, b_k, nu).e
    e2 = correlation(a_prime, b_k, nu).e
    e3 = correlation(a, b_kprime, nu).e
    e4 = correlation(a_prime, b_kprime, nu).e
    s = abs(((e1 + e2) + e3) - e4)
    return SRecord(s, 0.0, (a.label, a_prime.label), (b_k.label, b_kprime.label))


def rate_matrix(
    alice_pair: tuple[MeasurementBasis, MeasurementBasis],
    bob_projectors: list[Projector],
    nu: float,
) -> np.ndarray:
    """Joint rates, shape (4, N): rows are A1, A2, A'1, A'2 outcomes."""
    a, ap = alice_pair
    states = [a.first.state, a.second.state, ap.first.state, ap.second.state]
    return np.array(
        [[joint_probability(st, p, nu) for p in bob_projectors] for st in states]
    )


def basis_index_pairs(n_projectors: int) -> tuple[np.ndarray, np.ndarray]:
    """Projector index arrays (i, j) of the unordered bases, in label order."""
    idx = [(i, j) for i in range(n_projectors) for j in range(i + 1, n_projectors)]
    arr = np.array(idx, dtype=np.intp)
    return arr[:, 0], arr[:, 1]


def correlations_from_rates(
    rates: np.ndarray, row1: int, row2: int, idx_i: np.ndarray, idx_j: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized E over all bases for one Alice basis (rate rows row1/row2).

    Returns (e, defined); undefined entries are NaN.  The arithmetic order
    matches :func:`correlation` exactly so results are bit-identical.
    """
    r11, r12 = rates[row1, idx_i], rates[row1, idx_j]
    r21, r22 = rates[row2, idx_i], rates[row2, idx_j]
    den = ((r11 + r12) + r21) + r22
    defined = den > DENOMINATOR_EPS
    num = ((r11 - r12) - r21) + r22
    e = np.full(den.shape, np.nan)
    np.divide(num, den, out=e, where=defined)
    return e, defined


def s_grid(
    alice_pair: tuple[MeasurementBasis, MeasurementBasis],
    bob_projectors: list[Projector],
    nu: float,
) -> tuple[np.ndarray, np.ndarray]:
    """S over all ordered basis pairs (K, K') as a (B, B) array.

    Also returns the per-basis defined mask; rows/columns of undefined
    bases are NaN.  Entry orderings and arithmetic match :func:`s_value`.
    """
    nu = _check_visibility(nu)
    if len(bob_projectors) < 2:
        raise ValueError("need at least 2 projectors to enumerate S values")
    rates = rate_matrix(alice_pair, bob_projectors, nu)
    idx_i, idx_j = basis_index_pairs(len(bob_projectors))
    e_a, def_a = correlations_from_rates(rates, 0, 1, idx_i, idx_j)
    e_ap, def_ap = correlations_from_rates(rates, 2, 3, idx_i, idx_j)
    defined = def_a & def_ap
    s = np.abs(((e_a[:, None] + e_ap[:, None]) + e_a[None, :]) - e_ap[None, :])
    return s, defined


def enumerate_s(
    alice_pair: tuple[MeasurementBasis, MeasurementBasis],
    bob_projectors: list[Projector],
    nu: float,
) -> SEnumeration:
    """Evaluate S for every ordered pair of Bob bases, including K = K'.

    Output is K-major and deterministic.  Pairs whose correlations are
    undefined (dark-projector bases) are skipped and counted.
    """
    s, defined = s_grid(alice_pair, bob_projectors, nu)
    a, ap = alice_pair
    alice_labels = (a.label, ap.label)
    n_bases = s.shape[0]
    records = []
    for k in range(n_bases):
        if not defined[k]:
            continue
        row = s[k]
        for kp in range(n_bases):
            if defined[kp]:
                records.append(
                    SRecord(float(row[kp]), 0.0, alice_labels, (k + 1, kp + 1))
                )
    return SEnumeration(records, n_bases * n_bases - len(records))


def _joint_rates_arrays(theta_a, phi_a, theta_b, phi_b, nu):
    """Vectorized joint rates for unit-weight projectors (numpy arrays)."""
    ca, sa = np.cos(0.5 * theta_a), np.sin(0.5 * theta_a)
    cb, sb = np.cos(0.5 * theta_b), np.sin(0.5 * theta_b)
    cross = np.abs(ca * cb * sa * sb) * np.cos(phi_b - phi_a)
    return 0.5 * (ca * ca * cb * cb + sa * sa * sb * sb - 2.0 * nu * cross)


def max_violation_search(nu: float, trials: int, seed: int) -> SRecord:
    """Brute-force search for the largest S over random setting quadruples.

    Each trial draws Alice's two bases from random waveplate angles and two
    Bob bases, each a uniformly random state paired with its orthogonal
    complement at unit weight.  Returns the best record; its Bob labels
    carry the winning trial index.
    """
    _check_visibility(nu)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)

    def correlations(th1, ph1, thb, phb):
        # outcome partners are the orthogonal complements on both sides
        r11 = _joint_rates_arrays(th1, ph1, thb, phb, nu)
        r12 = _joint_rates_arrays(th1, ph1, np.pi - thb, phb + np.pi, nu)
        r21 = _joint_rates_arrays(np.pi - th1, ph1 + np.pi, thb, phb, nu)
        r22 = _joint_rates_arrays(np.pi - th1, ph1 + np.pi, np.pi - thb, phb + np.pi, nu)
        return (((r11 - r12) - r21) + r22) / (((r11 + r12) + r21) + r22)

    best_s = -1.0
    best_trial = -1
    done = 0
    while done < trials:
        n = min(_SEARCH_CHUNK, trials - done)
        hwp = rng.uniform(0.0, TWO_PI, (2, n))
        qwp = rng.uniform(0.0, TWO_PI, (2, n))
        th_a, ph_a = waveplate_detector1_angles(hwp[0], qwp[0])
        th_ap, ph_ap = waveplate_detector1_angles(hwp[1], qwp[1])
        th_b = rng.uniform(0.0, math.pi, (2, n))
        ph_b = rng.uniform(0.0, TWO_PI, (2, n))

        e1 = correlations(th_a, ph_a, th_b[0], ph_b[0])
        e2 = correlations(th_ap, ph_ap, th_b[0], ph_b[0])
        e3 = correlations(th_a, ph_a, th_b[1], ph_b[1])
        e4 = correlations(th_ap, ph_ap, th_b[1], ph_b[1])
        s = np.abs(((e1 + e2) + e3) - e4)
        arg = int(np.argmax(s))
        if float(s[arg]) > best_s:
            best_s = float(s[arg])
            best_trial = done + arg
        done += n
    return SRecord(best_s, 0.0, ("A", "A'"), (best_trial, best_trial))


def write_srecords_csv(records: list[SRecord], path: str | Path) -> None:
    """Dump records as ``k,kprime,aliceA,aliceAprime,s,sigma`` rows."""
    lines = ["k,kprime,aliceA,aliceAprime,s,sigma"]
    for r in records:
        lines.append(
            f"{r.bob_bases[0]},{r.bob_bases[1]},{r.alice_bases[0]},{r.alice_bases[1]},"
            f"{r.s:.12g},{r.sigma:.12g}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
