"""Symbols on T^N x Z^N stored through their partial Fourier coefficients.

A symbol F(x, p) is represented by the finite table F^(k, p) of
coefficients of its Fourier series in x, with k in a frequency box of
radius K and p in a momentum box of radius P. Only integer momenta are
stored since the quantization only ever evaluates F at p in Z^N.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import fft
from scipy.special import gamma

from .errors import DivergenceError, ResolutionError
from .lattice import ModeBox, ModeLike, as_mode, mode_box

__all__ = [
    "SymbolCoefficients",
    "SymbolGrid",
    "Enclosure",
    "SymbolSpecError",
    "analyze",
    "synthesize",
    "synthesize_grid",
    "norm_r",
    "bessel_constant",
    "sup_norm",
    "sobolev_sup",
    "classical_average",
    "truncate_frequencies",
    "random_symbol",
    "profile_values",
    "symbol_from_terms",
]


def sobolev_weights(box: ModeBox, r: float) -> np.ndarray:
    """(1 + |k|^2)^{r/2} over the box."""
    return (1.0 + box.squared_norms) ** (r / 2)


@dataclass(frozen=True, eq=False)
class SymbolCoefficients:
    """Table F^(k, p) over frequency box x momentum box.

    ``table[i, j]`` is the coefficient at ``k = freq_box.modes[i]`` and
    ``p = mom_box.modes[j]``. The array is read-only.
    """

    dimension: int
    freq_radius: int
    mom_radius: int
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=np.complex128)
        shape = (self.freq_box.size, self.mom_box.size)
        if table.shape != shape:
            raise ValueError(f"coefficient table has shape {table.shape}, expected {shape}")
        if not np.all(np.isfinite(table)):
            raise ValueError("coefficient table contains NaN or Inf")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def freq_box(self) -> ModeBox:
        return mode_box(self.dimension, self.freq_radius)

    @property
    def mom_box(self) -> ModeBox:
        return mode_box(self.dimension, self.mom_radius)

    @classmethod
    def zeros(cls, dimension: int, freq_radius: int, mom_radius: int) -> "SymbolCoefficients":
        shape = (mode_box(dimension, freq_radius).size, mode_box(dimension, mom_radius).size)
        return cls(dimension, freq_radius, mom_radius, np.zeros(shape, dtype=np.complex128))

    @classmethod
    def from_rows(
        cls,
        rows: Mapping[Any, Any],
        dimension: int,
        freq_radius: int,
        mom_radius: int,
    ) -> "SymbolCoefficients":
        """Build ``sum_k e^{ikx} g_k(p)`` from ``{k: g_k}``.

        Each ``g_k`` is either a callable on integer momentum arrays of shape
        (M, N) or an array of values over the momentum box.
        """
        out = cls.zeros(dimension, freq_radius, mom_radius)
        table = out.table.copy()
        moms = out.mom_box.modes
        for k, g in rows.items():
            i = out.freq_box.index(as_mode(k, dimension))
            table[i] += g(moms) if callable(g) else np.asarray(g)
        return out.with_table(table)

    def with_table(self, table: np.ndarray) -> "SymbolCoefficients":
        return SymbolCoefficients(self.dimension, self.freq_radius, self.mom_radius, table)

    def coefficient(self, k: ModeLike, p: ModeLike) -> complex:
        k = as_mode(k, self.dimension)
        p = as_mode(p, self.dimension)
        if not self.mom_box.contains(p):
            raise KeyError(f"momentum {p} outside momentum box of radius {self.mom_radius}")
        if not self.freq_box.contains(k):
            return 0j
        return complex(self.table[self.freq_box.index(k), self.mom_box.index(p)])

    def row(self, k: ModeLike) -> "SymbolCoefficients":
        """The single-frequency part e^{ikx} F^(k, p)."""
        i = self.freq_box.index(as_mode(k, self.dimension))
        table = np.zeros_like(self.table)
        table[i] = self.table[i]
        return self.with_table(table)

    def frequencies(self) -> list[tuple[int, ...]]:
        """Frequencies carrying a nonzero coefficient, in box order."""
        nz = np.any(self.table != 0, axis=1)
        return [tuple(int(c) for c in row) for row in self.freq_box.modes[nz]]

    def _check_same_shape(self, other: "SymbolCoefficients"):
        if (self.dimension, self.freq_radius, self.mom_radius) != (
            other.dimension,
            other.freq_radius,
            other.mom_radius,
        ):
            raise ValueError("symbols live on different boxes")

    def __add__(self, other: "SymbolCoefficients") -> "SymbolCoefficients":
        self._check_same_shape(other)
        return self.with_table(self.table + other.table)

    def __sub__(self, other: "SymbolCoefficients") -> "SymbolCoefficients":
        self._check_same_shape(other)
        return self.with_table(self.table - other.table)

    def __mul__(self, scalar: complex) -> "SymbolCoefficients":
        return self.with_table(scalar * self.table)

    __rmul__ = __mul__

    def __neg__(self) -> "SymbolCoefficients":
        return self.with_table(-self.table)

    def allclose(self, other: "SymbolCoefficients", atol: float = 1e-12) -> bool:
        self._check_same_shape(other)
        return bool(np.all(np.abs(self.table - other.table) <= atol))


@dataclass(frozen=True, eq=False)
class SymbolGrid:
    """Samples F(x_j, p) on the uniform grid x_j = 2 pi j / points.

    ``values`` has shape ``(mom_box.size,) + (points,) * dimension``.
    """

    dimension: int
    mom_radius: int
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128)
        if values.ndim != self.dimension + 1 or values.shape[0] != self.mom_box.size:
            raise ValueError(f"grid values have shape {values.shape}")
        if len(set(values.shape[1:])) != 1:
            raise ValueError("grid must have the same number of points on every axis")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def mom_box(self) -> ModeBox:
        return mode_box(self.dimension, self.mom_radius)

    @property
    def points(self) -> int:
        return self.values.shape[1]

    def axes(self) -> np.ndarray:
        """Coordinates of shape (dimension, points, ..., points)."""
        x = 2 * np.pi * np.arange(self.points) / self.points
        return np.stack(np.meshgrid(*([x] * self.dimension), indexing="ij"))

    @classmethod
    def from_function(
        cls,
        func: Callable[[np.ndarray, tuple[int, ...]], np.ndarray],
        dimension: int,
        mom_radius: int,
        points: int,
    ) -> "SymbolGrid":
        """Sample ``func(X, p)`` where ``X`` has shape (N, points, ..., points)."""
        x = 2 * np.pi * np.arange(points) / points
        X = np.stack(np.meshgrid(*([x] * dimension), indexing="ij"))
        box = mode_box(dimension, mom_radius)
        values = np.empty((box.size,) + (points,) * dimension, dtype=np.complex128)
        for j, p in enumerate(box):
            values[j] = np.broadcast_to(func(X, p), values.shape[1:])
        return cls(dimension, mom_radius, values)


def _grid_axes(dimension: int) -> tuple[int, ...]:
    return tuple(range(1, dimension + 1))


def analyze(grid: SymbolGrid, K: int) -> SymbolCoefficients:
    """Partial Fourier coefficients F^(k, p) for |k_i| <= K.

    Exact up to roundoff when F is a trigonometric polynomial of degree <= K
    in each x_i.
    """
    n = grid.points
    if n < 2 * K + 1:
        raise ResolutionError(f"{n} points per axis cannot resolve frequency radius {K}; need {2 * K + 1}")
    spectrum = fft.fftn(grid.values, axes=_grid_axes(grid.dimension)) / n**grid.dimension
    freq = mode_box(grid.dimension, K).modes % n
    picked = spectrum[(slice(None),) + tuple(freq.T)]
    return SymbolCoefficients(grid.dimension, K, grid.mom_radius, picked.T)


def synthesize(coeffs: SymbolCoefficients, x: Sequence[float] | float, p: ModeLike) -> complex:
    """Evaluate sum_k F^(k, p) e^{ik.x} at one point."""
    p = as_mode(p, coeffs.dimension)
    if not coeffs.mom_box.contains(p):
        raise KeyError(f"momentum {p} outside momentum box of radius {coeffs.mom_radius}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (coeffs.dimension,):
        raise ValueError(f"point {x} does not have dimension {coeffs.dimension}")
    column = coeffs.table[:, coeffs.mom_box.index(p)]
    phases = np.exp(1j * (coeffs.freq_box.modes @ x))
    return complex(np.sum(column * phases))


def synthesize_grid(coeffs: SymbolCoefficients, points: int | None = None) -> SymbolGrid:
    """Sample the symbol on the uniform grid (default 2K+1 points per axis)."""
    n = 2 * coeffs.freq_radius + 1 if points is None else points
    if n < 2 * coeffs.freq_radius + 1:
        raise ResolutionError(f"{n} points per axis cannot hold frequency radius {coeffs.freq_radius}")
    N = coeffs.dimension
    spectrum = np.zeros((coeffs.mom_box.size,) + (n,) * N, dtype=np.complex128)
    freq = coeffs.freq_box.modes % n
    spectrum[(slice(None),) + tuple(freq.T)] = coeffs.table.T
    values = fft.ifftn(spectrum, axes=_grid_axes(N)) * n**N
    return SymbolGrid(N, coeffs.mom_radius, values)


def norm_r(coeffs: SymbolCoefficients, r: float) -> float:
    """sup over stored (k, p) of (1 + |k|^2)^{r/2} |F^(k, p)|."""
    if coeffs.table.size == 0:
        return 0.0
    weighted = sobolev_weights(coeffs.freq_box, r)[:, None] * np.abs(coeffs.table)
    return float(weighted.max())


class Enclosure(NamedTuple):
    lower: float
    upper: float
    cutoff: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def _tail_bound(r: float, N: int, M: int) -> float:
    # sum of (1+|k|^2)^{-r/2} over |k|_inf > M
    if N == 1:
        return 2.0 * M ** (1.0 - r) / (r - 1.0)
    h = math.sqrt(N) / 2
    s0 = M - 2 * h
    if s0 <= 0:
        return math.inf
    sphere = 2 * math.pi ** (N / 2) / gamma(N / 2)
    return float(sphere * (1 + h / s0) ** (N - 1) * s0 ** (N - r) / (r - N))


def _cube_sum(r: float, N: int, M: int) -> float:
    j = np.arange(M + 1, dtype=np.float64)
    mult = np.where(j == 0, 1.0, 2.0)
    sq = j * j
    if N == 1:
        return float(np.sum(mult * (1.0 + sq) ** (-r / 2)))
    total = 0.0
    block = max(1, 2**22 // (M + 1))
    for outer in itertools.product(range(M + 1), repeat=N - 2):
        base = 1.0 + sum(o * o for o in outer)
        weight = float(np.prod([1.0 if o == 0 else 2.0 for o in outer]))
        for start in range(0, M + 1, block):
            rows = slice(start, min(start + block, M + 1))
            vals = (base + sq[rows, None] + sq[None, :]) ** (-r / 2)
            total += weight * float(mult[rows] @ (vals @ mult))
    return total


@lru_cache(maxsize=64)
def bessel_constant(r: float, N: int, tail_tol: float = 1e-6) -> Enclosure:
    """Enclosure of C_r = sum over Z^N of (1 + |k|^2)^{-r/2}.

    ``lower`` is the sum over the cube |k_i| <= cutoff, ``upper`` adds an
    integral-comparison bound on the remaining terms, and
    ``upper - lower <= tail_tol``.
    """
    if N < 1:
        raise ValueError(f"dimension must be >= 1, got {N}")
    if not r > N:
        raise DivergenceError(f"sum of (1+|k|^2)^(-r/2) over Z^{N} diverges for r={r} <= {N}")
    if tail_tol <= 0:
        raise ValueError("tail_tol must be positive")
    # target slightly below tail_tol so that rounding in upper - lower stays within it
    target = tail_tol * (1 - 1e-6)
    lo = max(1, math.ceil(math.sqrt(N)) + 1)
    hi = lo
    while _tail_bound(r, N, hi) > target:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if _tail_bound(r, N, mid) <= target:
            hi = mid
        else:
            lo = mid + 1
    M = hi
    lower = _cube_sum(r, N, M)
    return Enclosure(lower, lower + _tail_bound(r, N, M), M)


def sup_norm(grid: SymbolGrid) -> float:
    """max |F(x_j, p)| over the samples."""
    return float(np.max(np.abs(grid.values)))


def sobolev_sup(grid: SymbolGrid, r: float) -> float:
    """Sampled sup of (1 - Delta)^{r/2} F, applied as the multiplier (1 + |k|^2)^{r/2}."""
    N, n = grid.dimension, grid.points
    axes = _grid_axes(N)
    k = np.rint(fft.fftfreq(n, d=1.0 / n))
    K2 = sum(np.meshgrid(*([k * k] * N), indexing="ij"))
    multiplier = (1.0 + K2) ** (r / 2)
    spectrum = fft.fftn(grid.values, axes=axes) * multiplier[None]
    return float(np.max(np.abs(fft.ifftn(spectrum, axes=axes))))


def classical_average(coeffs: SymbolCoefficients) -> SymbolCoefficients:
    """The x-average F^(0, p), as a symbol with only the k = 0 row."""
    return coeffs.row((0,) * coeffs.dimension)


def truncate_frequencies(coeffs: SymbolCoefficients, L: int) -> SymbolCoefficients:
    """Zero every coefficient with max_i |k_i| > L."""
    if L < 0:
        raise ValueError(f"L must be >= 0, got {L}")
    keep = np.max(np.abs(coeffs.freq_box.modes), axis=1) <= L
    return coeffs.with_table(np.where(keep[:, None], coeffs.table, 0))


def random_symbol(
    rng: np.random.Generator,
    dimension: int,
    freq_radius: int,
    mom_radius: int,
    decay: float = 0.0,
    density: float = 1.0,
) -> SymbolCoefficients:
    """Complex Gaussian coefficients damped by (1 + |k|^2)^{-decay/2}.

    ``density`` is the probability that a given entry is nonzero.
    """
    freq = mode_box(dimension, freq_radius)
    shape = (freq.size, mode_box(dimension, mom_radius).size)
    table = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if density < 1.0:
        table *= rng.random(shape) < density
    table *= sobolev_weights(freq, -decay)[:, None]
    return SymbolCoefficients(dimension, freq_radius, mom_radius, table)


# ---------------------------------------------------------------------------
# term-list sub-format shared with the experiment configs


class SymbolSpecError(ValueError):
    """Malformed symbol term list."""


_PROFILE_PARAMS = {
    "constant": ({"value"}, set()),
    "inverse_power": ({"s"}, {"amplitude"}),
    "gaussian": ({"s"}, {"amplitude"}),
    "ball_indicator": ({"radius"}, {"amplitude"}),
}


def _complex(value: Any, where: str) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise SymbolSpecError(f"{where}: complex values are [re, im] pairs")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SymbolSpecError(f"{where}: expected a number or [re, im], got {value!r}")
    return complex(float(value))


def profile_values(profile: Mapping[str, Any], momenta: np.ndarray) -> np.ndarray:
    """Evaluate a named radial profile g(p) on integer momenta of shape (M, N)."""
    if not isinstance(profile, Mapping) or "kind" not in profile:
        raise SymbolSpecError(f"profile must be a table with a 'kind' key, got {profile!r}")
    kind = profile["kind"]
    if kind not in _PROFILE_PARAMS:
        raise SymbolSpecError(f"unknown profile kind {kind!r}; expected one of {sorted(_PROFILE_PARAMS)}")
    required, optional = _PROFILE_PARAMS[kind]
    keys = set(profile) - {"kind"}
    if missing := required - keys:
        raise SymbolSpecError(f"profile {kind!r} missing {sorted(missing)}")
    if extra := keys - required - optional:
        raise SymbolSpecError(f"profile {kind!r} has unknown keys {sorted(extra)}")
    p2 = np.sum(np.asarray(momenta, dtype=np.float64) ** 2, axis=1)
    amp = _complex(profile.get("amplitude", 1.0), f"profile {kind!r} amplitude")
    if kind == "constant":
        return np.full(p2.shape, _complex(profile["value"], "constant value"))
    s = profile.get("s")
    if s is not None and (not isinstance(s, (int, float)) or isinstance(s, bool) or s <= 0):
        raise SymbolSpecError(f"profile {kind!r}: s must be a positive number, got {s!r}")
    if kind == "inverse_power":
        return amp * (1.0 + p2) ** (-s / 2)
    if kind == "gaussian":
        return amp * np.exp(-p2 / s)
    radius = profile["radius"]
    if not isinstance(radius, (int, float)) or isinstance(radius, bool) or radius < 0:
        raise SymbolSpecError(f"ball_indicator radius must be >= 0, got {radius!r}")
    return amp * (p2 <= radius * radius).astype(np.complex128)


def _mode_field(value: Any, dimension: int, where: str) -> tuple[int, ...]:
    if isinstance(value, int) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, (list, tuple)) or not all(
        isinstance(c, int) and not isinstance(c, bool) for c in value
    ):
        raise SymbolSpecError(f"{where}: expected a list of integers, got {value!r}")
    if len(value) != dimension:
        raise SymbolSpecError(f"{where}: {value!r} does not have dimension {dimension}")
    return tuple(value)


def symbol_from_terms(
    terms: Sequence[Mapping[str, Any]],
    dimension: int,
    freq_radius: int,
    mom_radius: int,
) -> SymbolCoefficients:
    """Build coefficients from a term list.

    Each term is either ``{frequency: [...], profile: {...}}`` or
    ``{table: [{frequency: [...], momentum: [...], value: x}, ...]}``.
    Terms are summed.
    """
    out = SymbolCoefficients.zeros(dimension, freq_radius, mom_radius)
    freq_box, mom_box = out.freq_box, out.mom_box
    table = out.table.copy()
    if not isinstance(terms, (list, tuple)) or not terms:
        raise SymbolSpecError("symbol must be a non-empty list of terms")
    for n, term in enumerate(terms):
        where = f"symbol term {n}"
        if not isinstance(term, Mapping):
            raise SymbolSpecError(f"{where}: expected a table, got {term!r}")
        if "table" in term:
            if set(term) != {"table"}:
                raise SymbolSpecError(f"{where}: table terms take no other keys")
            for m, entry in enumerate(term["table"]):
                at = f"{where} entry {m}"
                if not isinstance(entry, Mapping) or set(entry) != {"frequency", "momentum", "value"}:
                    raise SymbolSpecError(f"{at}: needs exactly frequency, momentum, value")
                k = _mode_field(entry["frequency"], dimension, at)
                p = _mode_field(entry["momentum"], dimension, at)
                if not freq_box.contains(k) or not mom_box.contains(p):
                    raise SymbolSpecError(f"{at}: ({k}, {p}) outside the configured boxes")
                table[freq_box.index(k), mom_box.index(p)] += _complex(entry["value"], at)
            continue
        if set(term) != {"frequency", "profile"}:
            raise SymbolSpecError(f"{where}: expected keys frequency and profile, got {sorted(term)}")
        k = _mode_field(term["frequency"], dimension, where)
        if not freq_box.contains(k):
            raise SymbolSpecError(f"{where}: frequency {k} exceeds frequency radius {freq_radius}")
        table[freq_box.index(k)] += profile_values(term["profile"], mom_box.modes)
    return out.with_table(table)
