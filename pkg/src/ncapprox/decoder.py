"""Similarity-driven decoding of under-determined network-coded windows.

With K = N innovative packets the window solves exactly.  With K < N, the
decoder appends N - K constraint rows, each carrying a single pair of "1"
entries at the positions of an expected-similar source pair (1 is its own
additive inverse in characteristic 2, so such a row forces the pair equal),
with a zero right-hand side.  Pairs are consumed most-similar first; a pair
whose row is linearly dependent on the received rows plus the constraints
chosen so far cannot contribute a pivot, so it is replaced by the next pair
and counted as a retry.  When the retry budget or the model is exhausted the
window fails, optionally filled with a constant.

Also provided: the exact reference solution that uses the true pair
differences instead of zeros, the l1 bound on the gap between the two, and
an exhaustive maximum-likelihood baseline scored by the same similarity
model.  Everything here is pure given a state snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import DecoderState
from .gf import GaloisField
from .linalg import GFMatrix, SingularMatrixError, reduced_row_echelon, solve

__all__ = [
    "ConstraintSet",
    "DecodeResult",
    "EnumerationBudgetError",
    "InsufficientModelError",
    "RetryPolicy",
    "SimilarityModel",
    "build_constraints",
    "decode",
    "error_bound_l1",
    "mle_decode",
    "reference_solution",
    "similarity_score",
]


class InsufficientModelError(ValueError):
    """The similarity model has too few usable pairs for the missing rank."""


class EnumerationBudgetError(ValueError):
    """Exhaustive enumeration would exceed the configured candidate budget."""


@dataclass(frozen=True)
class SimilarityModel:
    """Ranked source pairs with expected distances, most similar first.

    Pairs are (i, j, expected_distance) with i < j, sorted ascending by
    (distance, i, j) so constraint selection is deterministic.
    """

    pairs: tuple[tuple[int, int, float], ...]
    n_sources: int

    def __post_init__(self):
        seen = set()
        for i, j, d in self.pairs:
            if not 0 <= i < j < self.n_sources:
                raise ValueError(f"pair ({i}, {j}) invalid for {self.n_sources} sources")
            if d < 0:
                raise ValueError(f"negative expected distance {d}")
            if (i, j) in seen:
                raise ValueError(f"duplicate pair ({i}, {j})")
            seen.add((i, j))
        ordered = tuple(sorted(self.pairs, key=lambda p: (p[2], p[0], p[1])))
        object.__setattr__(self, "pairs", ordered)

    @classmethod
    def from_pairs(cls, pairs, n_sources: int) -> "SimilarityModel":
        return cls(tuple((int(i), int(j), float(d)) for i, j, d in pairs), n_sources)


@dataclass(frozen=True)
class ConstraintSet:
    """Constraint rows appended below the received coefficient matrix.

    Every row is zero except for two 1 entries at a chosen pair's columns;
    the right-hand side is the all-zero vector.
    """

    rows: np.ndarray
    rhs: np.ndarray
    chosen_pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        rhs = np.asarray(self.rhs, dtype=np.int64)
        for k, (i, j) in enumerate(self.chosen_pairs):
            expect = np.zeros(rows.shape[1], dtype=np.int64)
            expect[[i, j]] = 1
            if not np.array_equal(rows[k], expect):
                raise ValueError(f"row {k} does not encode pair ({i}, {j})")
        if np.any(rhs != 0):
            raise ValueError("constraint right-hand side must be zero")
        rows.setflags(write=False)
        rhs.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "rhs", rhs)


@dataclass(frozen=True)
class RetryPolicy:
    """Retry budget for dependent constraint rows, and the failure fill.

    ``fill_value`` of None returns a failure with no reconstruction; a
    sample value fills every position with that constant instead (used by
    the imaging experiments, which always want an output).
    """

    max_retries: int = 10
    fill_value: int | None = None


@dataclass(frozen=True)
class DecodeResult:
    mode: str  # "exact", "approximate" or "failed"
    s_hat: np.ndarray | None
    constraints: ConstraintSet | None
    retries: int

    def csv_row(self, window_id: int, mse: float | None = None,
                bound: float | None = None) -> str:
        fmt = lambda v: "" if v is None else repr(float(v))
        return f"{window_id},{self.mode},{self.retries},{fmt(mse)},{fmt(bound)}"


def _pair_row(n: int, i: int, j: int) -> np.ndarray:
    row = np.zeros(n, dtype=np.int64)
    row[[i, j]] = 1
    return row


def build_constraints(model: SimilarityModel, k_received: int, n_sources: int,
                      fld: GaloisField) -> ConstraintSet:
    """First N - K pairs by ascending expected distance, dependents skipped.

    A pair is skipped when its row is linearly dependent on the rows already
    chosen (pairs closing a cycle add no new information).  Raises
    :class:`InsufficientModelError` when fewer than N - K usable pairs exist.
    """
    if k_received > n_sources:
        raise ValueError("received rank exceeds source count")
    if model.n_sources != n_sources:
        raise ValueError("model sized for a different source count")
    needed = n_sources - k_received
    from .linalg import RowBasis

    basis = RowBasis(n_sources, fld)
    chosen: list[tuple[int, int]] = []
    for i, j, _ in model.pairs:
        if len(chosen) == needed:
            break
        if basis.try_insert(_pair_row(n_sources, i, j)):
            chosen.append((i, j))
    if len(chosen) < needed:
        raise InsufficientModelError(
            f"{len(chosen)} usable pairs for {needed} missing rows"
        )
    rows = np.array([_pair_row(n_sources, i, j) for i, j in chosen], dtype=np.int64)
    rows = rows.reshape(needed, n_sources)
    return ConstraintSet(rows, np.zeros(needed, dtype=np.int64), tuple(chosen))


def decode(state: DecoderState, model: SimilarityModel | None = None,
           policy: RetryPolicy = RetryPolicy()) -> DecodeResult:
    """Solve the window exactly if full rank, else via similarity constraints.

    Constraint pairs are taken most-similar first; any pair whose row would
    leave the stacked system singular is replaced by the next one, costing a
    retry.  Returns lifted sample values of shape (N, w).  Failure is a
    result, not an exception.
    """
    N = state.n_sources
    K = state.rank
    fld = state.field
    if K < 1:
        raise ValueError("decode needs at least one innovative packet")
    C = state.coeff_matrix()
    Y = state.payload_matrix()
    if K == N:
        X = solve(GFMatrix(C, fld), Y)
        return DecodeResult("exact", fld.lift_array(X), None, 0)
    if model is None:
        raise ValueError("a similarity model is required when rank is short")
    if model.n_sources != N:
        raise ValueError("model sized for a different source count")

    basis = state.basis.copy()
    chosen: list[tuple[int, int]] = []
    retries = 0
    for i, j, _ in model.pairs:
        if len(chosen) == N - K:
            break
        if basis.try_insert(_pair_row(N, i, j)):
            chosen.append((i, j))
        else:
            retries += 1
            if retries >= policy.max_retries:
                break
    if len(chosen) < N - K:
        s_hat = None
        if policy.fill_value is not None:
            s_hat = np.full((N, Y.shape[1]), policy.fill_value, dtype=np.int64)
        return DecodeResult("failed", s_hat, None, retries)

    d_rows = np.array([_pair_row(N, i, j) for i, j in chosen], dtype=np.int64)
    constraints = ConstraintSet(
        d_rows, np.zeros(N - K, dtype=np.int64), tuple(chosen)
    )
    stacked = np.concatenate([C, d_rows], axis=0)
    rhs = np.concatenate([Y, np.zeros((N - K, Y.shape[1]), dtype=np.int64)], axis=0)
    X = solve(GFMatrix(stacked, fld), rhs)  # nonsingular by construction
    return DecodeResult("approximate", fld.lift_array(X), constraints, retries)


def reference_solution(x_true: np.ndarray, C: GFMatrix, D: GFMatrix) -> np.ndarray:
    """Exact solve of the stacked system using the true pair differences.

    The constraint right-hand side is D applied to the true source vector
    rather than zeros, so the stacked solve reproduces ``x_true`` exactly;
    its gap to the approximate solution is what :func:`error_bound_l1`
    bounds.
    """
    if C.field != D.field:
        raise ValueError("matrices from different fields")
    x_true = np.asarray(x_true, dtype=np.int64)
    y = C.mul_vec(x_true)
    d = D.mul_vec(x_true)
    stacked = GFMatrix(np.concatenate([C.data, D.data], axis=0), C.field)
    rhs = np.concatenate([y, d], axis=0)
    return solve(stacked, rhs)


def error_bound_l1(C: GFMatrix, D: GFMatrix, x_true: np.ndarray) -> int:
    """l1 bound on the lifted gap between exact and approximate solutions.

    Sums, over constraint rows, the lifted values of the inverse stacked
    matrix's trailing columns scaled by the true pair differences.  Valid
    for fields without discarded bits, where lifting is the identity and
    the triangle-style XOR inequalities hold componentwise.
    """
    fld = C.field
    if fld.z != 0:
        raise ValueError("bound defined for fields with no discarded bits")
    x_true = np.asarray(x_true, dtype=np.int64)
    K = C.rows
    stacked = GFMatrix(np.concatenate([C.data, D.data], axis=0), fld)
    from .linalg import invert

    M = invert(stacked)  # raises SingularMatrixError when the stack is singular
    d = D.mul_vec(x_true)
    bound = 0
    for k in range(D.rows):
        col = fld.scale(M.data[:, K + k], int(d[k]))
        bound += int(fld.lift_array(col).sum())
    return bound


def similarity_score(s_values: np.ndarray, model: SimilarityModel) -> float:
    """Inverse-distance-weighted l1 penalty of a reconstruction.

    Each model pair contributes |s_i - s_j| (summed over positions) with
    weight 1 / (1 + expected_distance); smaller is better.
    """
    s = np.asarray(s_values, dtype=np.int64)
    if s.ndim == 1:
        s = s[:, None]
    if s.shape[0] != model.n_sources:
        raise ValueError(f"{s.shape[0]} sources for a {model.n_sources}-source model")
    total = 0.0
    for i, j, dist in model.pairs:
        total += float(np.abs(s[i] - s[j]).sum()) / (1.0 + dist)
    return total


def mle_decode(state: DecoderState, model: SimilarityModel,
               budget: int = 1 << 16) -> DecodeResult:
    """Exhaustive search over the received-consistent solution set.

    Row-reduces the received rows, enumerates every assignment of the free
    variables over the field, back-substitutes, and keeps the candidate
    with the smallest :func:`similarity_score`; ties break toward the
    lexicographically smallest lifted vector.  Vector payloads are decoded
    position by position (the similarity model applies at every position).
    Refuses upfront when the per-position candidate count q^(N - K) exceeds
    ``budget``.
    """
    N = state.n_sources
    K = state.rank
    fld = state.field
    q = fld.order
    if K < 1:
        raise ValueError("decode needs at least one innovative packet")
    if model.n_sources != N:
        raise ValueError("model sized for a different source count")
    n_free = N - K
    if q ** n_free > budget:
        raise EnumerationBudgetError(
            f"{q}^{n_free} candidates exceed budget {budget}"
        )
    C = state.coeff_matrix()
    Y = state.payload_matrix()
    if n_free == 0:
        X = solve(GFMatrix(C, fld), Y)
        return DecodeResult("exact", fld.lift_array(X), None, 0)

    aug = np.concatenate([C, Y], axis=1)
    R, pivots = reduced_row_echelon(aug, fld, pivot_cols=N)
    free = [c for c in range(N) if c not in pivots]
    rhs = R[:K, N:]  # reduced payloads, one column per position

    n_cand = q ** n_free
    grid = np.indices((q,) * n_free).reshape(n_free, n_cand).T

    w = Y.shape[1]
    X_hat = np.zeros((N, w), dtype=np.int64)
    for t in range(w):
        X = np.zeros((n_cand, N), dtype=np.int64)
        X[:, free] = grid
        for k, pc in enumerate(pivots):
            acc = np.full(n_cand, int(rhs[k, t]), dtype=np.int64)
            for f, fc in enumerate(free):
                acc ^= fld.mul_arrays(
                    np.full(n_cand, int(R[k, fc]), dtype=np.int64), grid[:, f]
                )
            X[:, pc] = acc
        L = fld.lift_array(X)
        score = np.zeros(n_cand, dtype=np.float64)
        for i, j, dist in model.pairs:
            score += np.abs(L[:, i] - L[:, j]) / (1.0 + dist)
        keys = tuple(L[:, c] for c in reversed(range(N))) + (score,)
        best = int(np.lexsort(keys)[0])
        X_hat[:, t] = X[best]
    return DecodeResult("approximate", fld.lift_array(X_hat), None, 0)
