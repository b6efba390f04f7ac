"""Dense linear algebra over GF(2^k): rank, solve, inversion, row bases.

Elimination uses first-nonzero pivoting (there is no magnitude to prefer in
a finite field) and detects singularity exactly: a zero pivot column is
structural, never a rounding artifact.  Small systems run on plain Python
lists, larger ones on vectorised numpy row operations; both paths produce
identical results.
"""

from __future__ import annotations

from bisect import bisect_left

import numpy as np

from .gf import FieldMismatchError, GaloisField

__all__ = [
    "GFMatrix",
    "RowBasis",
    "SingularMatrixError",
    "invert",
    "rank",
    "reduced_row_echelon",
    "solve",
]


class SingularMatrixError(ValueError):
    """The system has no unique solution over the field."""


# Augmented matrices at most this many entries are eliminated with Python
# lists; above it, numpy row operations win.
_SMALL_LIMIT = 600


def _validate_entries(arr: np.ndarray, fld: GaloisField) -> None:
    if arr.size and (arr.min() < 0 or arr.max() >= fld.order):
        raise ValueError(f"entries outside [0, {fld.order})")


class GFMatrix:
    """Immutable dense matrix with entries in a shared field."""

    def __init__(self, data, fld: GaloisField):
        arr = np.array(data, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("matrix data must be two-dimensional")
        _validate_entries(arr, fld)
        arr.setflags(write=False)
        self.data = arr
        self.field = fld

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @classmethod
    def identity(cls, n: int, fld: GaloisField) -> "GFMatrix":
        return cls(np.eye(n, dtype=np.int64), fld)

    @classmethod
    def zeros(cls, rows: int, cols: int, fld: GaloisField) -> "GFMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), fld)

    def _check(self, other: "GFMatrix") -> None:
        if self.field != other.field:
            raise FieldMismatchError(f"{self.field!r} vs {other.field!r}")

    def __matmul__(self, other: "GFMatrix") -> "GFMatrix":
        self._check(other)
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.data.shape} @ {other.data.shape}")
        acc = np.zeros((self.rows, other.cols), dtype=np.int64)
        for k in range(self.cols):
            acc ^= self.field.outer(self.data[:, k], other.data[k, :])
        return GFMatrix(acc, self.field)

    def mul_vec(self, v: np.ndarray) -> np.ndarray:
        """Matrix times vector (1-D) or stack of column vectors (2-D)."""
        v = np.asarray(v, dtype=np.int64)
        vv = v[:, None] if v.ndim == 1 else v
        if vv.shape[0] != self.cols:
            raise ValueError(f"vector length {vv.shape[0]} != cols {self.cols}")
        acc = np.zeros((self.rows, vv.shape[1]), dtype=np.int64)
        for k in range(self.cols):
            acc ^= self.field.outer(self.data[:, k], vv[k, :])
        return acc[:, 0] if v.ndim == 1 else acc

    def dump(self) -> str:
        """Debug dump: one row per line, space-separated hex values."""
        width = (self.field.bits + 3) // 4
        return "\n".join(
            " ".join(f"{int(v):0{width}x}" for v in row) for row in self.data
        )

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, GFMatrix)
            and self.field == other.field
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self) -> str:
        return f"GFMatrix({self.rows}x{self.cols} over GF(2^{self.field.bits}))"


def _rref_py(fld: GaloisField, A: list[list[int]], ncols: int) -> list[int]:
    """In-place reduced row echelon over the first ``ncols`` columns."""
    m = len(A)
    pivots: list[int] = []
    pr = 0
    for c in range(ncols):
        pivot = next((i for i in range(pr, m) if A[i][c]), None)
        if pivot is None:
            continue
        A[pr], A[pivot] = A[pivot], A[pr]
        row = A[pr]
        pv = row[c]
        if pv != 1:
            inv = fld.inv(pv)
            mul = fld.mul
            A[pr] = row = [mul(inv, v) for v in row]
        mul = fld.mul
        for i in range(m):
            if i != pr and A[i][c]:
                f = A[i][c]
                A[i] = [vi ^ mul(f, vr) for vi, vr in zip(A[i], row)]
        pivots.append(c)
        pr += 1
        if pr == m:
            break
    return pivots


def _rref_np(fld: GaloisField, A: np.ndarray, ncols: int) -> list[int]:
    m = A.shape[0]
    pivots: list[int] = []
    pr = 0
    for c in range(ncols):
        nz = np.nonzero(A[pr:, c])[0]
        if nz.size == 0:
            continue
        pivot = pr + int(nz[0])
        if pivot != pr:
            A[[pr, pivot]] = A[[pivot, pr]]
        pv = int(A[pr, c])
        if pv != 1:
            A[pr] = fld.scale(A[pr], fld.inv(pv))
        factors = A[:, c].copy()
        factors[pr] = 0
        rows = np.nonzero(factors)[0]
        if rows.size:
            A[rows] ^= fld.outer(factors[rows], A[pr])
        pivots.append(c)
        pr += 1
        if pr == m:
            break
    return pivots


def reduced_row_echelon(
    matrix: np.ndarray, fld: GaloisField, pivot_cols: int | None = None
) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of ``matrix`` (not modified) plus pivot columns.

    ``pivot_cols`` limits pivot search to the leading columns, leaving the
    remaining columns as a carried right-hand side.
    """
    A = np.array(matrix, dtype=np.int64)
    if A.ndim != 2:
        raise ValueError("need a two-dimensional array")
    ncols = A.shape[1] if pivot_cols is None else pivot_cols
    if A.size <= _SMALL_LIMIT:
        rows = A.tolist()
        pivots = _rref_py(fld, rows, ncols)
        return np.array(rows, dtype=np.int64).reshape(A.shape), pivots
    pivots = _rref_np(fld, A, ncols)
    return A, pivots


def rank(M: GFMatrix) -> int:
    """Row rank over the matrix's field."""
    _, pivots = reduced_row_echelon(M.data, M.field)
    return len(pivots)


def solve(M: GFMatrix, y: np.ndarray) -> np.ndarray:
    """Solve M x = y for square M; raises :class:`SingularMatrixError`.

    ``y`` may be a vector or a matrix of stacked right-hand-side columns.
    """
    if M.rows != M.cols:
        raise ValueError(f"solve needs a square matrix, got {M.rows}x{M.cols}")
    y = np.asarray(y, dtype=np.int64)
    yy = y[:, None] if y.ndim == 1 else y
    if yy.shape[0] != M.rows:
        raise ValueError(f"right-hand side length {yy.shape[0]} != {M.rows}")
    _validate_entries(yy, M.field)
    aug = np.concatenate([M.data, yy], axis=1)
    R, pivots = reduced_row_echelon(aug, M.field, pivot_cols=M.rows)
    if len(pivots) < M.rows:
        raise SingularMatrixError(f"rank {len(pivots)} < {M.rows}")
    X = R[:, M.rows:]
    return X[:, 0] if y.ndim == 1 else X


def invert(M: GFMatrix) -> GFMatrix:
    """Matrix inverse; M @ invert(M) is the identity."""
    X = solve(M, np.eye(M.rows, dtype=np.int64))
    return GFMatrix(X, M.field)


class RowBasis:
    """Incrementally maintained reduced row echelon basis.

    Used to detect innovative (linearly independent) rows one at a time.
    Single-writer: one decoding window owns one basis; independent bases
    may be used concurrently.
    """

    def __init__(self, n_cols: int, fld: GaloisField):
        if n_cols < 1:
            raise ValueError("basis needs at least one column")
        self.n_cols = n_cols
        self.field = fld
        self._small = n_cols <= 64
        self._rows: list = []
        self._pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self._rows)

    @property
    def pivot_cols(self) -> tuple[int, ...]:
        return tuple(self._pivots)

    def rows_array(self) -> np.ndarray:
        """Current reduced rows, pivot columns strictly increasing."""
        if not self._rows:
            return np.zeros((0, self.n_cols), dtype=np.int64)
        return np.array(self._rows, dtype=np.int64)

    def copy(self) -> "RowBasis":
        dup = RowBasis(self.n_cols, self.field)
        dup._small = self._small
        dup._rows = [r[:] if self._small else r.copy() for r in self._rows]
        dup._pivots = list(self._pivots)
        return dup

    def try_insert(self, row) -> bool:
        """Insert if linearly independent of the basis; report whether it was.

        The basis is extended exactly when True is returned.
        """
        arr = np.asarray(row, dtype=np.int64)
        if arr.shape != (self.n_cols,):
            raise ValueError(f"row length {arr.shape} != ({self.n_cols},)")
        _validate_entries(arr, self.field)
        if self._small:
            return self._insert_small(arr.tolist())
        return self._insert_np(arr.copy())

    def _insert_small(self, row: list[int]) -> bool:
        fld = self.field
        mul = fld.mul
        for p, brow in zip(self._pivots, self._rows):
            c = row[p]
            if c:
                row = [v ^ mul(c, b) for v, b in zip(row, brow)]
        col = next((i for i, v in enumerate(row) if v), None)
        if col is None:
            return False
        pv = row[col]
        if pv != 1:
            inv = fld.inv(pv)
            row = [mul(inv, v) for v in row]
        at = bisect_left(self._pivots, col)
        self._pivots.insert(at, col)
        self._rows.insert(at, row)
        return True

    def _insert_np(self, row: np.ndarray) -> bool:
        fld = self.field
        for p, brow in zip(self._pivots, self._rows):
            c = int(row[p])
            if c:
                row ^= fld.scale(brow, c)
        nz = np.nonzero(row)[0]
        if nz.size == 0:
            return False
        col = int(nz[0])
        pv = int(row[col])
        if pv != 1:
            row = fld.scale(row, fld.inv(pv))
        at = bisect_left(self._pivots, col)
        self._pivots.insert(at, col)
        self._rows.insert(at, row)
        return True

    @classmethod
    def from_independent_rows(cls, rows: np.ndarray, fld: GaloisField) -> "RowBasis":
        """Build a basis from rows already known to be independent.

        One bulk elimination instead of row-by-row insertion; raises if the
        rows turn out to be dependent after all.
        """
        rows = np.asarray(rows, dtype=np.int64)
        basis = cls(rows.shape[1], fld)
        R, pivots = reduced_row_echelon(rows, fld)
        if len(pivots) != rows.shape[0]:
            raise ValueError("rows are not linearly independent")
        for i in range(len(pivots)):
            r = R[i]
            basis._rows.append(r.tolist() if basis._small else r.copy())
        basis._pivots = list(pivots)
        return basis
