"""Quantized operators as sparse matrices on Fourier coefficients.

``quantize`` sends a symbol to the matrix with entries
``A[k, m] = F^(k - m, m)``: the input is indexed by the momentum box of
radius P and the output by the enlarged box of radius P + K, so no
amplitude is ever dropped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import BoxMismatchError, ConvergenceError, SizeLimitError
from .lattice import ModeBox, ModeLike, as_mode, mode_box
from .symbols import SymbolCoefficients

__all__ = [
    "OperatorMatrix",
    "StateVector",
    "quantize",
    "apply",
    "adjoint",
    "compose",
    "operator_norm",
    "singular_values",
    "rank",
    "compress",
    "DENSE_LIMIT",
]

# max entries for a dense decomposition
DENSE_LIMIT = 40_000_000


def _reindex(old: ModeBox, new: ModeBox) -> np.ndarray:
    idx = new.indices(old.modes)
    if np.any(idx < 0):
        raise BoxMismatchError(f"box of radius {old.radius} does not fit in box of radius {new.radius}")
    return idx


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Sparse matrix with rows indexed by ``out_box`` and columns by ``in_box``."""

    in_box: ModeBox
    out_box: ModeBox
    matrix: sp.csr_matrix

    def __post_init__(self):
        if self.in_box.dimension != self.out_box.dimension:
            raise BoxMismatchError("input and output boxes differ in dimension")
        mat = sp.csr_matrix(self.matrix, dtype=np.complex128)
        if mat.shape != (self.out_box.size, self.in_box.size):
            raise ValueError(f"matrix shape {mat.shape} does not match boxes")
        mat.sum_duplicates()
        mat.sort_indices()
        if not np.all(np.isfinite(mat.data)):
            raise ValueError("operator has non-finite entries")
        object.__setattr__(self, "matrix", mat)

    @property
    def dimension(self) -> int:
        return self.in_box.dimension

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @classmethod
    def zeros(cls, in_box: ModeBox, out_box: ModeBox) -> "OperatorMatrix":
        return cls(in_box, out_box, sp.csr_matrix((out_box.size, in_box.size), dtype=np.complex128))

    @classmethod
    def identity(cls, box: ModeBox) -> "OperatorMatrix":
        return cls(box, box, sp.identity(box.size, dtype=np.complex128, format="csr"))

    @classmethod
    def diagonal(cls, box: ModeBox, values: np.ndarray) -> "OperatorMatrix":
        return cls(box, box, sp.diags(np.asarray(values, dtype=np.complex128), format="csr"))

    def entry(self, k: ModeLike, m: ModeLike) -> complex:
        k, m = as_mode(k, self.dimension), as_mode(m, self.dimension)
        if not (self.out_box.contains(k) and self.in_box.contains(m)):
            return 0j
        return complex(self.matrix[self.out_box.index(k), self.in_box.index(m)])

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def embed(self, in_box: ModeBox, out_box: ModeBox) -> "OperatorMatrix":
        """The same operator viewed on larger boxes (zero padded)."""
        if (in_box, out_box) == (self.in_box, self.out_box):
            return self
        rows = _reindex(self.out_box, out_box)
        cols = _reindex(self.in_box, in_box)
        coo = self.matrix.tocoo()
        mat = sp.csr_matrix(
            (coo.data, (rows[coo.row], cols[coo.col])), shape=(out_box.size, in_box.size)
        )
        return OperatorMatrix(in_box, out_box, mat)

    def _common(self, other: "OperatorMatrix") -> tuple["OperatorMatrix", "OperatorMatrix"]:
        if self.dimension != other.dimension:
            raise BoxMismatchError("operators act on tori of different dimension")
        N = self.dimension
        in_box = mode_box(N, max(self.in_box.radius, other.in_box.radius))
        out_box = mode_box(N, max(self.out_box.radius, other.out_box.radius))
        return self.embed(in_box, out_box), other.embed(in_box, out_box)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        a, b = self._common(other)
        return OperatorMatrix(a.in_box, a.out_box, a.matrix + b.matrix)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        a, b = self._common(other)
        return OperatorMatrix(a.in_box, a.out_box, a.matrix - b.matrix)

    def __mul__(self, scalar: complex) -> "OperatorMatrix":
        return OperatorMatrix(self.in_box, self.out_box, self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "OperatorMatrix":
        return self * -1

    def max_abs_difference(self, other: "OperatorMatrix") -> float:
        diff = (self - other).matrix
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0

    def allclose(self, other: "OperatorMatrix", atol: float = 1e-12) -> bool:
        return self.max_abs_difference(other) <= atol

    def nonzero_entries(self) -> list[tuple[tuple[int, ...], tuple[int, ...], complex]]:
        """Stored nonzero entries as (k, m, value), in row-major order."""
        coo = self.matrix.tocoo()
        keep = coo.data != 0
        order = np.lexsort((coo.col[keep], coo.row[keep]))
        rows, cols, vals = coo.row[keep][order], coo.col[keep][order], coo.data[keep][order]
        outm, inm = self.out_box.modes, self.in_box.modes
        return [
            (tuple(int(c) for c in outm[i]), tuple(int(c) for c in inm[j]), complex(v))
            for i, j, v in zip(rows, cols, vals)
        ]

    def diagonal_values(self) -> np.ndarray:
        """(phi_n, A phi_n) for n in the input box."""
        rows = self.out_box.indices(self.in_box.modes)
        cols = np.arange(self.in_box.size)
        ok = rows >= 0
        out = np.zeros(self.in_box.size, dtype=np.complex128)
        out[ok] = np.asarray(self.matrix[rows[ok], cols[ok]]).ravel()
        return out

    def off_diagonal(self) -> "OperatorMatrix":
        coo = self.matrix.tocoo()
        same = np.all(self.out_box.modes[coo.row] == self.in_box.modes[coo.col], axis=1)
        data = np.where(same, 0, coo.data)
        mat = sp.csr_matrix((data, (coo.row, coo.col)), shape=self.shape)
        return OperatorMatrix(self.in_box, self.out_box, mat)

    def is_diagonal(self) -> bool:
        return self.off_diagonal().matrix.count_nonzero() == 0

    def to_coo_text(self) -> str:
        """One line per nonzero entry: k components, m components, re, im."""
        lines = [
            f"# dimension {self.dimension} in_radius {self.in_box.radius} out_radius {self.out_box.radius}"
        ]
        for k, m, v in self.nonzero_entries():
            fields = [str(c) for c in k + m] + [repr(v.real), repr(v.imag)]
            lines.append(" ".join(fields))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class StateVector:
    """Fourier coefficients psi_k of a wavefunction, supported in ``box``."""

    box: ModeBox
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=np.complex128)
        if c.shape != (self.box.size,):
            raise ValueError(f"state has {c.shape} coefficients for a box of {self.box.size} modes")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def basis(cls, box: ModeBox, n: ModeLike) -> "StateVector":
        """The eigenfunction phi_n = e^{inx} of H."""
        c = np.zeros(box.size, dtype=np.complex128)
        c[box.index(n)] = 1.0
        return cls(box, c)

    def coefficient(self, n: ModeLike) -> complex:
        n = as_mode(n, self.box.dimension)
        return complex(self.coefficients[self.box.index(n)]) if self.box.contains(n) else 0j

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def restrict(self, box: ModeBox) -> "StateVector":
        """Re-express on ``box``; fails if support would be lost."""
        if box == self.box:
            return self
        idx = box.indices(self.box.modes)
        lost = (idx < 0) & (self.coefficients != 0)
        if np.any(lost):
            raise BoxMismatchError(f"state has support outside the box of radius {box.radius}")
        c = np.zeros(box.size, dtype=np.complex128)
        c[idx[idx >= 0]] = self.coefficients[idx >= 0]
        return StateVector(box, c)


def quantize(coeffs: SymbolCoefficients) -> OperatorMatrix:
    """Q(F) with entries A[k, m] = F^(k - m, m)."""
    N = coeffs.dimension
    in_box = coeffs.mom_box
    out_box = mode_box(N, coeffs.mom_radius + coeffs.freq_radius)
    fi, mi = np.nonzero(coeffs.table)
    rows = out_box.indices(coeffs.freq_box.modes[fi] + in_box.modes[mi])
    mat = sp.csr_matrix((coeffs.table[fi, mi], (rows, mi)), shape=(out_box.size, in_box.size))
    return OperatorMatrix(in_box, out_box, mat)


def apply(op: OperatorMatrix, psi: StateVector) -> StateVector:
    """(A psi)_k = sum_m A[k, m] psi_m."""
    psi = psi.restrict(op.in_box)
    return StateVector(op.out_box, op.matrix @ psi.coefficients)


def adjoint(op: OperatorMatrix) -> OperatorMatrix:
    return OperatorMatrix(op.out_box, op.in_box, op.matrix.conj().T.tocsr())


def compose(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    """The product a b; b's output box must fit inside a's input box."""
    if not a.in_box.contains_box(b.out_box):
        raise BoxMismatchError(
            f"cannot compose: output radius {b.out_box.radius} exceeds input radius {a.in_box.radius}"
        )
    b = b.embed(b.in_box, a.in_box)
    return OperatorMatrix(b.in_box, a.out_box, a.matrix @ b.matrix)


def _check_dense(op: OperatorMatrix):
    rows, cols = op.shape
    if rows * cols > DENSE_LIMIT:
        raise SizeLimitError(f"{rows}x{cols} matrix exceeds the dense limit of {DENSE_LIMIT} entries")


def singular_values(op: OperatorMatrix) -> np.ndarray:
    """Full singular spectrum in descending order (dense decomposition)."""
    _check_dense(op)
    if min(op.shape) == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(op.toarray())


def rank(op: OperatorMatrix, tol: float | None = None, rel_tol: float = 1e-10) -> int:
    """Number of singular values above ``tol`` (default ``rel_tol * sigma_max``)."""
    sv = singular_values(op)
    if sv.size == 0 or sv[0] == 0:
        return 0
    if tol is None:
        tol = rel_tol * sv[0]
    return int(np.count_nonzero(sv > tol))


def operator_norm(
    op: OperatorMatrix,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    method: str = "power",
) -> float:
    """Largest singular value.

    ``method="power"`` runs power iteration on A^H A from the all-ones
    vector and stops once the estimate ||A x|| changes by less than ``tol``
    relative; the estimate never exceeds the true norm.
    ``method="dense"`` returns the top singular value of a dense SVD.
    """
    if method == "dense":
        sv = singular_values(op)
        return float(sv[0]) if sv.size else 0.0
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    A = op.matrix
    if A.nnz == 0 or not np.any(A.data):
        return 0.0
    AH = A.conj().T.tocsr()
    n = op.in_box.size
    seeds = (np.ones(n, dtype=np.complex128), np.exp(1j * np.arange(n) * 0.6180339887498949))
    for x in seeds:
        x = x / np.linalg.norm(x)
        if np.linalg.norm(A @ x) > 0:
            break
    else:
        return operator_norm(op, method="dense")
    est_old = 0.0
    for _ in range(max_iter):
        Ax = A @ x
        est = float(np.linalg.norm(Ax))
        if abs(est - est_old) <= tol * est:
            return est
        est_old = est
        y = AH @ Ax
        x = y / np.linalg.norm(y)
    raise ConvergenceError(f"power iteration did not converge to {tol} in {max_iter} steps")


def compress(op: OperatorMatrix, box: ModeBox) -> OperatorMatrix:
    """Keep only the output rows indexed by ``box``. Lossy."""
    if not op.out_box.contains_box(box):
        raise BoxMismatchError(f"box of radius {box.radius} not contained in output box")
    rows = op.out_box.indices(box.modes)
    return OperatorMatrix(op.in_box, box, op.matrix[rows])
