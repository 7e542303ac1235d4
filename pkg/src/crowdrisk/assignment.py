"""Minimum-cost bipartite assignment (Hungarian method).

Rectangular matrices are padded to square with a large sentinel cost and
sentinel matches are stripped afterwards, so the real side of the smaller
dimension is always fully matched.  Among equal-cost optima the result is
the lexicographically smallest match set by (row, column).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MAX_MUNKRES_ITER = 1_000_000


@dataclass(frozen=True)
class Assignment:
    """Partition of rows (tracks) and columns (detections) into matches and leftovers."""

    matches: list[tuple[int, int]]
    unmatched_tracks: list[int] = field(default_factory=list)
    unmatched_detections: list[int] = field(default_factory=list)


def solve_assignment(cost: np.ndarray) -> Assignment:
    """Solve the minimum-cost assignment over a finite n x m cost matrix.

    Matched pairs achieve the minimum total cost over all maximal matchings;
    ties resolve to the lexicographically smallest match set.  Raises
    ValueError on non-finite entries.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got ndim={cost.ndim}")
    n, m = cost.shape
    if n == 0 or m == 0:
        return Assignment([], list(range(n)), list(range(m)))
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix contains non-finite entries")

    k = max(n, m)
    sentinel = float(cost.max()) + 1.0
    padded = np.full((k, k), sentinel)
    padded[:n, :m] = cost

    col_of_row, reduced = _munkres(padded)
    col_of_row = _lex_refine(reduced == 0.0, col_of_row, n, m)

    matches = [(i, int(col_of_row[i])) for i in range(n) if col_of_row[i] < m]
    matched_rows = {i for i, _ in matches}
    matched_cols = {j for _, j in matches}
    return Assignment(
        matches=matches,
        unmatched_tracks=[i for i in range(n) if i not in matched_rows],
        unmatched_detections=[j for j in range(m) if j not in matched_cols],
    )


def _munkres(costs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Classical O(k^3) Munkres on a square matrix.

    Returns (column of each row, final reduced matrix).  The zeros of the
    reduced matrix are exactly the cells admissible in some optimal
    assignment, which the tie-break refinement walks afterwards.
    """
    Z = costs.astype(float, copy=True)
    k = Z.shape[0]
    Z -= Z.min(axis=1, keepdims=True)
    Z -= Z.min(axis=0, keepdims=True)

    starred = np.zeros((k, k), dtype=bool)
    primed = np.zeros((k, k), dtype=bool)
    row_cov = np.zeros(k, dtype=bool)
    col_cov = np.zeros(k, dtype=bool)

    # Seed: star independent zeros greedily, row-major.
    for i, j in zip(*np.nonzero(Z == 0.0)):
        if not row_cov[i] and not col_cov[j]:
            starred[i, j] = True
            row_cov[i] = True
            col_cov[j] = True
    row_cov[:] = False
    col_cov[:] = False

    for _ in range(_MAX_MUNKRES_ITER):
        col_cov = starred.any(axis=0)
        if int(col_cov.sum()) == k:
            col_of_row = np.argmax(starred, axis=1)
            return col_of_row, Z

        while True:
            free = (Z == 0.0) & ~row_cov[:, None] & ~col_cov[None, :]
            if not free.any():
                uncovered = ~row_cov[:, None] & ~col_cov[None, :]
                h = Z[uncovered].min()
                Z[row_cov, :] += h
                Z[:, ~col_cov] -= h
                continue
            i, j = np.argwhere(free)[0]
            primed[i, j] = True
            star_cols = np.nonzero(starred[i])[0]
            if star_cols.size:
                row_cov[i] = True
                col_cov[star_cols[0]] = False
                continue
            # Augment: alternate primed/starred from (i, j); primes become
            # stars, stars along the path are erased.
            path = [(i, j)]
            while True:
                rows = np.nonzero(starred[:, path[-1][1]])[0]
                if rows.size == 0:
                    break
                r = int(rows[0])
                path.append((r, path[-1][1]))
                c = int(np.nonzero(primed[r])[0][0])
                path.append((r, c))
            for idx, (pr, pc) in enumerate(path):
                starred[pr, pc] = idx % 2 == 0
            primed[:] = False
            row_cov[:] = False
            break
    raise RuntimeError("assignment did not converge")  # unreachable on finite input


def _lex_refine(zero: np.ndarray, col_of_row: np.ndarray, n: int, m: int) -> np.ndarray:
    """Rewire a perfect zero-matching so real rows, in ascending order, hold the
    smallest usable column (real columns preferred over padding)."""
    k = zero.shape[0]
    col_of_row = col_of_row.copy()
    row_of_col = np.empty(k, dtype=int)
    row_of_col[col_of_row] = np.arange(k)
    fixed_rows = np.zeros(k, dtype=bool)
    fixed_cols = np.zeros(k, dtype=bool)

    for i in range(n):
        candidates = sorted(np.nonzero(zero[i])[0], key=lambda c: (c >= m, c))
        for j in candidates:
            if fixed_cols[j]:
                continue
            if _try_force(zero, col_of_row, row_of_col, fixed_rows, fixed_cols, i, int(j)):
                break
        fixed_rows[i] = True
        fixed_cols[col_of_row[i]] = True
    return col_of_row


def _try_force(
    zero: np.ndarray,
    col_of_row: np.ndarray,
    row_of_col: np.ndarray,
    fixed_rows: np.ndarray,
    fixed_cols: np.ndarray,
    i: int,
    j: int,
) -> bool:
    """Attempt to give row i column j, rerouting the displaced row through an
    augmenting path over unfixed rows/columns.  Reverts on failure."""
    if col_of_row[i] == j:
        return True
    saved_cols = col_of_row.copy()
    saved_rows = row_of_col.copy()

    displaced = int(row_of_col[j])
    freed_col = int(col_of_row[i])
    col_of_row[i] = j
    row_of_col[j] = i
    col_of_row[displaced] = -1
    row_of_col[freed_col] = -1

    visited = np.zeros(zero.shape[0], dtype=bool)

    def augment(row: int) -> bool:
        for c in np.nonzero(zero[row])[0]:
            if c == j or fixed_cols[c] or visited[c]:
                continue
            visited[c] = True
            holder = int(row_of_col[c])
            if holder == -1:
                col_of_row[row] = c
                row_of_col[c] = row
                return True
            if fixed_rows[holder]:
                continue
            if augment(holder):
                col_of_row[row] = c
                row_of_col[c] = row
                return True
        return False

    if augment(displaced):
        return True
    col_of_row[:] = saved_cols
    row_of_col[:] = saved_rows
    return False
