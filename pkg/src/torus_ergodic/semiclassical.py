"""High-energy state tau_E, negligibility scans and the average decomposition."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .dynamics import ergodic_average
from .errors import BoxMismatchError, BoxTooSmallError, DimensionError
from .lattice import count_states, shell_mask, shell_radius
from .operators import OperatorMatrix, compose, operator_norm, quantize, rank
from .symbols import SymbolCoefficients, classical_average

__all__ = [
    "DecayCurve",
    "AverageDecomposition",
    "IdealCheckRow",
    "IdealReport",
    "FrequencyRank",
    "RankCertificate",
    "geometric_grid",
    "tau_E",
    "tau_E_state",
    "sn_scan",
    "decompose_average",
    "sn_ideal_checks",
    "n1_rank_certificate",
]


def geometric_grid(start: float, factor: float, count: int) -> list[float]:
    """E_j = start * factor**j for j < count."""
    if not (start > 0 and factor > 1 and count >= 1):
        raise ValueError("energy grid needs start > 0, factor > 1 and count >= 1")
    return [start * factor**j for j in range(count)]


def _shell(op: OperatorMatrix, E: float) -> np.ndarray:
    need = shell_radius(E)
    if op.in_box.radius < need:
        raise BoxTooSmallError(need, op.in_box.radius, E)
    return shell_mask(op.in_box, E)


def tau_E(op: OperatorMatrix, E: float) -> float:
    """tau_E(a* a) = (1/N(E)) sum over |n|^2/2 <= E of ||a phi_n||^2.

    ``op`` is the operator a itself; the column norms of its matrix are the
    ||a phi_n||. Raises ``BoxTooSmallError`` rather than truncating the shell.
    """
    mask = _shell(op, E)
    sq = op.matrix.copy()
    sq.data = np.abs(sq.data) ** 2
    col_norms = np.asarray(sq.sum(axis=0)).ravel().real
    total = math.fsum(col_norms[mask].tolist())
    return total / count_states(E, op.dimension)


def tau_E_state(op: OperatorMatrix, E: float) -> complex:
    """tau_E(a) = (1/N(E)) sum over the shell of (phi_n, a phi_n)."""
    mask = _shell(op, E)
    diag = op.diagonal_values()[mask]
    re = math.fsum(diag.real.tolist())
    im = math.fsum(diag.imag.tolist())
    return complex(re, im) / count_states(E, op.dimension)


@dataclass(frozen=True)
class DecayCurve:
    """Samples (E, tau_E(a* a)) with a least-squares log-log slope."""

    energies: tuple[float, ...]
    values: tuple[float, ...]
    fitted_slope: float
    slope_stderr: float

    def to_text(self) -> str:
        lines = [f"# fitted_slope {self.fitted_slope!r} slope_stderr {self.slope_stderr!r}"]
        lines += [f"{E!r} {v!r}" for E, v in zip(self.energies, self.values)]
        return "\n".join(lines) + "\n"


def _fit_slope(energies: np.ndarray, values: np.ndarray) -> tuple[float, float]:
    pos = values > 0
    if np.count_nonzero(pos) < 2:
        return math.nan, math.nan
    x, y = np.log(energies[pos]), np.log(values[pos])
    if np.count_nonzero(pos) == 2:
        return float((y[1] - y[0]) / (x[1] - x[0])), 0.0
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.stderr)


def sn_scan(op: OperatorMatrix, energies: Sequence[float]) -> DecayCurve:
    """tau_E(a* a) along an increasing energy grid, with fitted decay exponent."""
    E = np.asarray(energies, dtype=float)
    if E.size == 0 or np.any(np.diff(E) <= 0):
        raise ValueError("energy grid must be non-empty and strictly increasing")
    vals = np.array([tau_E(op, e) for e in E])
    slope, stderr = _fit_slope(E, vals)
    return DecayCurve(tuple(E.tolist()), tuple(vals.tolist()), slope, stderr)


@dataclass(frozen=True)
class AverageDecomposition:
    """<Q(F)> split as Q(F_bar) + a_F."""

    classical_part: OperatorMatrix
    remainder: OperatorMatrix

    def total(self) -> OperatorMatrix:
        return self.classical_part + self.remainder


def decompose_average(coeffs: SymbolCoefficients) -> AverageDecomposition:
    classical = quantize(classical_average(coeffs))
    averaged = quantize(ergodic_average(coeffs))
    return AverageDecomposition(classical, averaged - classical)


@dataclass(frozen=True)
class IdealCheckRow:
    E: float
    sum_lhs: float
    sum_rhs: float
    left_lhs: float
    left_rhs: float

    @property
    def passed(self) -> bool:
        # slack covers rounding in the equality case b = identity
        slack = 1e-12
        return (
            self.sum_lhs <= self.sum_rhs * (1 + slack) + 1e-300
            and self.left_lhs <= self.left_rhs * (1 + slack) + 1e-300
        )


@dataclass(frozen=True)
class IdealReport:
    b_norm: float
    rows: tuple[IdealCheckRow, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


def sn_ideal_checks(a: OperatorMatrix, b: OperatorMatrix, energies: Sequence[float]) -> IdealReport:
    """Check the two inequalities behind the left-ideal property at each E.

    tau_E(|a + b|^2) <= 2 tau_E(|a|^2) + 2 tau_E(|b|^2) and
    tau_E(|b a|^2) <= ||b||^2 tau_E(|a|^2).
    """
    if a.dimension != b.dimension:
        raise BoxMismatchError("operators act on tori of different dimension")
    s = a + b
    ba = compose(b, a)
    b_norm = operator_norm(b, method="dense")
    rows = []
    for E in energies:
        ta, tb = tau_E(a, E), tau_E(b, E)
        rows.append(IdealCheckRow(float(E), tau_E(s, E), 2 * ta + 2 * tb, tau_E(ba, E), b_norm**2 * ta))
    return IdealReport(b_norm, tuple(rows))


@dataclass(frozen=True)
class FrequencyRank:
    frequency: int
    rank: int
    bound: int

    @property
    def passed(self) -> bool:
        return self.rank <= self.bound


@dataclass(frozen=True)
class RankCertificate:
    entries: tuple[FrequencyRank, ...]
    total_rank: int
    total_bound: int

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries) and self.total_rank <= self.total_bound


def n1_rank_certificate(coeffs: SymbolCoefficients, rel_tol: float = 1e-10) -> RankCertificate:
    """Rank of the averaged single-frequency pieces on the circle.

    Frequency k != 0 contributes rank 0 when k is odd and at most 1 when k is
    even; the remainder a_F has rank at most the number of even frequencies.
    """
    if coeffs.dimension != 1:
        raise DimensionError(f"rank certificate needs dimension 1, got {coeffs.dimension}")
    entries = []
    for (k,) in coeffs.frequencies():
        if k == 0:
            continue
        piece = quantize(ergodic_average(coeffs.row(k)))
        entries.append(FrequencyRank(k, rank(piece, rel_tol=rel_tol), 0 if k % 2 else 1))
    remainder = decompose_average(coeffs).remainder
    total_bound = sum(e.bound for e in entries)
    return RankCertificate(tuple(entries), rank(remainder, rel_tol=rel_tol), total_bound)
