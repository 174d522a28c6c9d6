"""Schrodinger conjugation by e^{itH}, H = -Delta/2, acting on symbols.

Conjugation multiplies F^(k, p) by the phase e^{it(k.p + |k|^2/2)}. The
phase frequency is always a half integer, so it is carried around as the
integer ``2 k.p + |k|^2`` and resonance (zero frequency) is decided exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import BoundViolation
from .lattice import resonance_defect, resonance_mask
from .operators import OperatorMatrix
from .symbols import SymbolCoefficients, norm_r

__all__ = [
    "AveragingReport",
    "evolve_symbol",
    "classical_flow_symbol",
    "quantum_correction",
    "conjugate_operator",
    "finite_time_average",
    "average_factor",
    "ergodic_average",
    "averaging_defect",
]

TWO_PI = 2 * np.pi


def _phase(doubled_freq: np.ndarray, t: float) -> np.ndarray:
    # e^{i t d/2}, argument reduced mod 2 pi before exponentiating
    angle = np.remainder(doubled_freq * (t / 2), TWO_PI)
    return np.exp(1j * angle)


def _doubled_frequencies(coeffs: SymbolCoefficients) -> np.ndarray:
    return resonance_defect(coeffs.freq_box.modes[:, None, :], coeffs.mom_box.modes[None, :, :])


def evolve_symbol(coeffs: SymbolCoefficients, t: float) -> SymbolCoefficients:
    """F_t^(k, p) = e^{it(|k|^2/2 + k.p)} F^(k, p)."""
    return coeffs.with_table(_phase(_doubled_frequencies(coeffs), t) * coeffs.table)


def classical_flow_symbol(coeffs: SymbolCoefficients, t: float) -> SymbolCoefficients:
    """The geodesic shift F(x + tp, p): multiplies F^(k, p) by e^{it k.p}."""
    kp = coeffs.freq_box.modes @ coeffs.mom_box.modes.T
    return coeffs.with_table(_phase(2 * kp, t) * coeffs.table)


def quantum_correction(coeffs: SymbolCoefficients, t: float) -> SymbolCoefficients:
    """The factor e^{-it Delta_x/2}: multiplies F^(k, p) by e^{it|k|^2/2}."""
    k2 = coeffs.freq_box.squared_norms
    return coeffs.with_table(_phase(k2, t)[:, None] * coeffs.table)


def conjugate_operator(op: OperatorMatrix, t: float) -> OperatorMatrix:
    """e^{itH} A e^{-itH}: entry (k, m) picks up e^{it(|k|^2 - |m|^2)/2}."""
    coo = op.matrix.tocoo()
    d = op.out_box.squared_norms[coo.row] - op.in_box.squared_norms[coo.col]
    data = _phase(d, t) * coo.data
    mat = sp.csr_matrix((data, (coo.row, coo.col)), shape=op.shape)
    return OperatorMatrix(op.in_box, op.out_box, mat)


def average_factor(doubled_freq: np.ndarray, T: float) -> np.ndarray:
    """(1/T) int_0^T e^{it theta} dt with theta = doubled_freq / 2.

    Written as e^{i T theta/2} sinc(T theta / 2pi) so that theta = 0 gives 1
    without a special case; callers still mask resonances exactly.
    """
    d = np.asarray(doubled_freq)
    half_angle = d * (T / 4)
    return np.exp(1j * np.remainder(half_angle, TWO_PI)) * np.sinc(half_angle / np.pi)


def finite_time_average(coeffs: SymbolCoefficients, T: float) -> SymbolCoefficients:
    """(1/T) int_0^T F_t dt, entrywise in closed form."""
    if not T > 0:
        raise ValueError(f"averaging time must be positive, got {T}")
    d = _doubled_frequencies(coeffs)
    factor = np.where(d == 0, 1.0 + 0j, average_factor(d, T))
    return coeffs.with_table(factor * coeffs.table)


def ergodic_average(coeffs: SymbolCoefficients) -> SymbolCoefficients:
    """<F>: keep exactly the coefficients with k.p + |k|^2/2 = 0."""
    keep = resonance_mask(coeffs.freq_box, coeffs.mom_box)
    return coeffs.with_table(np.where(keep, coeffs.table, 0))


@dataclass(frozen=True)
class AveragingReport:
    T: float
    defect: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.defect <= self.bound


# relative slack for rounding when the bound is attained
_BOUND_RTOL = 1e-12


def averaging_defect(coeffs: SymbolCoefficients, T: float, r: float) -> AveragingReport:
    """r-norm distance between the time-T average and the ergodic average.

    Raises ``BoundViolation`` if the distance exceeds 4 ||F||_r / T.
    """
    defect = norm_r(finite_time_average(coeffs, T) - ergodic_average(coeffs), r)
    bound = 4 * norm_r(coeffs, r) / T
    if defect > bound * (1 + _BOUND_RTOL):
        raise BoundViolation("||avg_T(F) - <F>||_r <= 4 ||F||_r / T", defect, bound)
    return AveragingReport(float(T), defect, bound)
