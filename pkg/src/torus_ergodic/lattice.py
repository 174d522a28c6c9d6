"""Mode enumeration on Z^N, the spectrum of H = -Delta/2 and resonant sets.

All lattice arithmetic is done in integers. Energies mu_n = |n|^2/2 are
compared through the doubled quantity |n|^2 <= floor(2E), and the resonance
condition k.p + |k|^2/2 = 0 through 2 k.p + |k|^2 = 0.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cache, cached_property
from typing import Iterable, Sequence, Union

import numpy as np

ModeIndex = tuple[int, ...]
ModeLike = Union[int, Sequence[int], np.ndarray]


def as_mode(n: ModeLike, dimension: int | None = None) -> ModeIndex:
    """Coerce an int or integer sequence to a ``ModeIndex`` tuple."""
    if isinstance(n, (int, np.integer)):
        mode = (int(n),)
    else:
        mode = tuple(int(c) for c in np.asarray(n).ravel())
    if dimension is not None and len(mode) != dimension:
        raise ValueError(f"mode {mode} has dimension {len(mode)}, expected {dimension}")
    if not mode:
        raise ValueError("a mode needs at least one component")
    return mode


@dataclass(frozen=True)
class ModeBox:
    """The cube {n in Z^N : |n_i| <= radius}, enumerated lexicographically."""

    dimension: int
    radius: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if self.radius < 0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")

    @property
    def side(self) -> int:
        return 2 * self.radius + 1

    @property
    def size(self) -> int:
        return self.side**self.dimension

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer array of shape (size, dimension) in lexicographic order."""
        axis = np.arange(-self.radius, self.radius + 1, dtype=np.int64)
        grids = np.meshgrid(*([axis] * self.dimension), indexing="ij")
        out = np.stack([g.ravel() for g in grids], axis=1)
        out.setflags(write=False)
        return out

    @cached_property
    def squared_norms(self) -> np.ndarray:
        out = np.einsum("ij,ij->i", self.modes, self.modes)
        out.setflags(write=False)
        return out

    def __iter__(self):
        return (tuple(int(c) for c in row) for row in self.modes)

    def __len__(self) -> int:
        return self.size

    def contains(self, n: ModeLike) -> bool:
        mode = as_mode(n, self.dimension)
        return all(abs(c) <= self.radius for c in mode)

    def contains_box(self, other: "ModeBox") -> bool:
        return self.dimension == other.dimension and other.radius <= self.radius

    def index(self, n: ModeLike) -> int:
        """Position of ``n`` in the enumeration order."""
        mode = as_mode(n, self.dimension)
        if not self.contains(mode):
            raise KeyError(f"mode {mode} outside box of radius {self.radius}")
        return int(self.indices(np.asarray([mode]))[0])

    def indices(self, modes: np.ndarray) -> np.ndarray:
        """Vectorised ``index``; rows outside the box map to -1."""
        modes = np.asarray(modes, dtype=np.int64).reshape(-1, self.dimension)
        shifted = modes + self.radius
        inside = np.all((shifted >= 0) & (shifted < self.side), axis=1)
        weights = self.side ** np.arange(self.dimension - 1, -1, -1, dtype=np.int64)
        idx = shifted @ weights
        return np.where(inside, idx, -1)


@cache
def mode_box(dimension: int, radius: int) -> ModeBox:
    """Shared ``ModeBox`` instances so the cached enumerations are reused."""
    return ModeBox(dimension, radius)


def eigenvalue(n: ModeLike) -> float:
    """Eigenvalue |n|^2/2 of H = -Delta/2 on the plane wave e^{inx}."""
    mode = as_mode(n)
    return sum(c * c for c in mode) / 2


def doubled_energy(E: float) -> int:
    """Largest integer m with m/2 <= E, i.e. the bound on |n|^2 for mu_n <= E."""
    if not (E >= 0 and math.isfinite(E)):
        raise ValueError(f"energy cutoff must be finite and >= 0, got {E}")
    return math.floor(2 * E)


def shell_radius(E: float) -> int:
    """Smallest cube radius containing every n with |n|^2/2 <= E."""
    return math.isqrt(doubled_energy(E))


@cache
def _ball_count(bound: int, dimension: int) -> int:
    # number of n in Z^dimension with |n|^2 <= bound
    if dimension == 0 or bound == 0:
        return 1
    top = math.isqrt(bound)
    total = _ball_count(bound, dimension - 1)
    for i in range(1, top + 1):
        total += 2 * _ball_count(bound - i * i, dimension - 1)
    return total


def count_states(E: float, dimension: int) -> int:
    """N(E) = #{n in Z^N : |n|^2/2 <= E}, inclusive.

    Counted by the recursion over the last coordinate, independently of
    the box enumeration used by :func:`enumerate_energy_shell`.
    """
    if dimension < 1:
        raise ValueError(f"dimension must be >= 1, got {dimension}")
    return _ball_count(doubled_energy(E), dimension)


def shell_mask(box: ModeBox, E: float) -> np.ndarray:
    return box.squared_norms <= doubled_energy(E)


def enumerate_energy_shell(E: float, dimension: int) -> list[ModeIndex]:
    """Modes with |n|^2/2 <= E in lexicographic order."""
    box = mode_box(dimension, shell_radius(E))
    return [tuple(int(c) for c in row) for row in box.modes[shell_mask(box, E)]]


def resonance_defect(k: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Twice the phase frequency, 2 k.p + |k|^2, as exact integers.

    ``k`` and ``p`` broadcast against each other along all but the last axis.
    """
    k = np.asarray(k, dtype=np.int64)
    p = np.asarray(p, dtype=np.int64)
    return 2 * np.sum(k * p, axis=-1) + np.sum(k * k, axis=-1)


def resonance_mask(freq_box: ModeBox, mom_box: ModeBox) -> np.ndarray:
    """Boolean table over (k, p) marking k.p + |k|^2/2 == 0."""
    if freq_box.dimension != mom_box.dimension:
        raise ValueError("frequency and momentum boxes differ in dimension")
    k = freq_box.modes[:, None, :]
    p = mom_box.modes[None, :, :]
    return resonance_defect(k, p) == 0


def resonance_set(k: ModeLike, box: ModeBox) -> list[ModeIndex]:
    """All p in ``box`` with k.p + |k|^2/2 = 0.

    Empty whenever |k|^2 is odd; the whole box when k = 0.
    """
    mode = np.asarray(as_mode(k, box.dimension), dtype=np.int64)
    hits = resonance_defect(mode[None, :], box.modes) == 0
    return [tuple(int(c) for c in row) for row in box.modes[hits]]


def iter_modes(dimension: int, radius: int) -> Iterable[ModeIndex]:
    """Plain-python lexicographic enumeration, used as a cross-check."""
    axis = range(-radius, radius + 1)
    return itertools.product(axis, repeat=dimension)
