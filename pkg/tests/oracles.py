"""Independent reference computations used by the tests.

Each oracle takes the slow, obvious route so it shares no code path with the
implementation it checks.
"""

from fractions import Fraction
from itertools import combinations

import numpy as np


def best_stumps(X, y):
    """All optimal single splits by exhaustive search in exact arithmetic.

    Returns (best_sse, set of left-index frozensets).  Candidate thresholds are
    midpoints of consecutive distinct values of each column.
    """
    rows = len(y)
    ys = [Fraction(v) for v in y]
    best, parts = None, set()
    for j in range(len(X[0])):
        vals = sorted({X[i][j] for i in range(rows)})
        for lo, hi in zip(vals, vals[1:]):
            thr = (lo + hi) / 2
            left = frozenset(i for i in range(rows) if X[i][j] <= thr)
            sse = Fraction(0)
            for side in (left, frozenset(range(rows)) - left):
                mean = sum(ys[i] for i in side) / len(side)
                sse += sum((ys[i] - mean) ** 2 for i in side)
            if best is None or sse < best:
                best, parts = sse, {left}
            elif sse == best:
                parts.add(left)
    return best, parts


def finite_difference_grad(f, x, h=1e-5):
    """Central differences of scalar ``f`` w.r.t. every entry of array ``x`` (mutated then restored)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + h
        fp = f()
        x[idx] = old - h
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def covered_cells(n, placements, r):
    """Union of clipped squares, cell by cell."""
    cells = set()
    for a in placements:
        row, col = divmod(a, n)
        for i in range(n):
            for j in range(n):
                if abs(i - row) <= r and abs(j - col) <= r:
                    cells.add((i, j))
    return cells


def top_k_sum(values, k):
    return sum(sorted(values, reverse=True)[:k])


def exhaustive_coverage_optimum(n, k, r):
    """Best union size of k distinct placements anywhere on an n x n grid."""
    best = 0
    for cells in combinations(range(n * n), k):
        best = max(best, len(covered_cells(n, cells, r)))
    return best
