"""Exact solvers and representations for square linear sum assignment problems.

A problem instance is a square cost matrix ``c`` where ``c[i, j]`` is the cost
of assigning row ``i`` to column ``j``. A solution is a permutation ``p`` with
``p[i]`` the column taken by row ``i``; its one-hot expansion is the n-by-n
assignment matrix with exactly one 1 per row and per column.

All total costs are computed with exact compensated summation (``math.fsum``)
of the selected entries, so two permutations whose true totals coincide
compare bit-equal even when the entries are visited in a different order.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

#: Hard cap for exhaustive enumeration (9! = 362,880 permutations).
BRUTE_FORCE_MAX_N = 9


class InfeasibleAssignmentError(ValueError):
    """A 0/1 matrix does not encode a permutation (some row/column sum != 1)."""


@dataclass(frozen=True)
class SolveResult:
    """An assignment and its total cost."""

    permutation: np.ndarray
    total_cost: float


def as_cost_matrix(cost) -> np.ndarray:
    """Validate and return the cost matrix as a square float64 array."""
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 1:
        raise ValueError(f"cost matrix must be square and non-empty, got shape {c.shape}")
    if not np.isfinite(c).all():
        raise ValueError("cost matrix entries must all be finite")
    return c


def as_permutation(perm, n: int) -> np.ndarray:
    """Validate a length-n bijection on {0, ..., n-1}."""
    p = np.asarray(perm, dtype=np.intp)
    if p.shape != (n,):
        raise ValueError(f"permutation has length {p.shape}, expected ({n},)")
    if not np.array_equal(np.sort(p), np.arange(n)):
        raise ValueError("permutation is not a bijection on {0, ..., n-1}")
    return p


def assignment_cost(cost, perm) -> float:
    """Exact total cost of the entries selected by ``perm`` (row i takes column perm[i])."""
    c = as_cost_matrix(cost)
    p = as_permutation(perm, c.shape[0])
    return math.fsum(c[np.arange(c.shape[0]), p].tolist())


def hungarian_solve(cost) -> SolveResult:
    """Minimum-cost assignment via shortest augmenting paths with dual potentials.

    Runs in O(n^3): rows are inserted one at a time and each insertion grows an
    alternating tree, maintaining row/column potentials and per-column minimum
    slacks until a free column is reached. Handles arbitrary finite (including
    negative) costs. When several assignments are optimal, any one of them may
    be returned; the total cost is unique.
    """
    c = as_cost_matrix(cost)
    n = c.shape[0]
    a = c.tolist()
    inf = math.inf

    # 1-based arrays; index 0 is the virtual root column.
    u = [0.0] * (n + 1)            # row potentials
    v = [0.0] * (n + 1)            # column potentials
    match = [0] * (n + 1)          # match[j] = row currently assigned to column j
    way = [0] * (n + 1)            # predecessor column on the alternating path

    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            row = a[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1

    perm = np.empty(n, dtype=np.intp)
    for j in range(1, n + 1):
        perm[match[j] - 1] = j - 1
    total = math.fsum(c[np.arange(n), perm].tolist())
    return SolveResult(permutation=perm, total_cost=total)


@functools.lru_cache(maxsize=None)
def _permutation_table(n: int) -> np.ndarray:
    # Lexicographic order, so the first minimizer found is the smallest one.
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp)


def brute_force_solve(cost) -> SolveResult:
    """Globally optimal assignment by enumerating all n! permutations.

    Ties break to the lexicographically smallest permutation. Capped at
    n <= BRUTE_FORCE_MAX_N; intended as an oracle for testing, not production.
    """
    c = as_cost_matrix(cost)
    n = c.shape[0]
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force enumeration is capped at n <= {BRUTE_FORCE_MAX_N}, got n = {n}")
    perms = _permutation_table(n)
    totals = c[np.arange(n), perms].sum(axis=1)
    best = int(np.argmin(totals))
    perm = perms[best].copy()
    total = math.fsum(c[np.arange(n), perm].tolist())
    return SolveResult(permutation=perm, total_cost=total)


def one_hot_assignment(perm, n: int | None = None) -> np.ndarray:
    """Expand a permutation into its n-by-n 0/1 assignment matrix."""
    p = np.asarray(perm, dtype=np.intp)
    if n is None:
        n = len(p)
    p = as_permutation(p, n)
    m = np.zeros((n, n), dtype=np.uint8)
    m[np.arange(n), p] = 1
    return m


def validate_assignment(matrix) -> np.ndarray:
    """Return the permutation encoded by a 0/1 matrix, or raise if it is not one.

    Raises :class:`InfeasibleAssignmentError` naming the first offending row or
    column whose sum differs from 1, and ``ValueError`` for non-binary entries.
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"assignment matrix must be square, got shape {m.shape}")
    if not np.isin(m, (0, 1)).all():
        raise ValueError("assignment matrix entries must be 0 or 1")
    m = m.astype(np.int64)
    row_sums = m.sum(axis=1)
    for i, s in enumerate(row_sums):
        if s != 1:
            raise InfeasibleAssignmentError(f"row {i} sums to {s}, expected 1")
    col_sums = m.sum(axis=0)
    for j, s in enumerate(col_sums):
        if s != 1:
            raise InfeasibleAssignmentError(f"column {j} sums to {s}, expected 1")
    return np.argmax(m, axis=1).astype(np.intp)
