"""Exact statistics used by the evaluation harness.

Implemented directly (no scipy) so the numeric contracts are testable
against brute-force enumeration oracles: a two-sided Fisher exact test on
2x2 tables, the product-moment correlation, and the accuracy-to-F1
identity the benchmark reports rely on.
"""

from __future__ import annotations

import math
from typing import Sequence

from ..errors import DomainError, EmptyResults, LengthMismatch, ZeroMargin, ZeroVariance

# Two point masses within this relative distance are treated as tied when
# accumulating the two-sided p-value, absorbing log-gamma rounding.
_PMF_RELATIVE_TOLERANCE = 1e-12


def accuracy(outcomes: Sequence[bool]) -> float:
    """Fraction of correct outcomes; order-invariant."""
    if not outcomes:
        raise EmptyResults("accuracy over zero results")
    return sum(1 for ok in outcomes if ok) / len(outcomes)


def f1_from_accuracy(a: float) -> float:
    """F1 score induced by an accuracy under the benchmark's convention.

    With precision fixed at 1 and recall equal to accuracy the harmonic
    mean reduces to 2a/(1+a).  This identity matches every published
    (accuracy, F1) pair the harness is checked against and is documented
    as reverse-engineered rather than standard.
    """
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"accuracy {a} outside [0, 1]")
    return 2.0 * a / (1.0 + a)


def fisher_exact_two_sided(table: Sequence[Sequence[int]]) -> float:
    """Two-sided Fisher exact test p-value for a 2x2 contingency table.

    Uses the point-probability convention: the p-value is the sum of
    hypergeometric probabilities of every table with the observed margins
    whose point mass does not exceed the observed table's (within a
    relative tolerance of 1e-12).  Point masses are computed with
    log-factorials for numerical stability, so margins in the thousands
    are handled without overflow.
    """
    (a, b), (c, d) = table
    for cell in (a, b, c, d):
        if not isinstance(cell, int) or isinstance(cell, bool) or cell < 0:
            raise DomainError(f"table cells must be non-negative integers, got {cell!r}")
    row1, row2 = a + b, c + d
    col1, col2 = a + c, b + d
    if min(row1, row2, col1, col2) == 0:
        raise ZeroMargin(f"table {table!r} has an empty margin")
    n = row1 + row2

    def log_pmf(x: int) -> float:
        return (
            _log_choose(row1, x)
            + _log_choose(row2, col1 - x)
            - _log_choose(n, col1)
        )

    lo = max(0, col1 - row2)
    hi = min(col1, row1)
    cutoff = log_pmf(a) + math.log1p(_PMF_RELATIVE_TOLERANCE)
    included = [math.exp(lp) for x in range(lo, hi + 1) if (lp := log_pmf(x)) <= cutoff]
    if len(included) == hi - lo + 1:
        # nothing excluded: the observed table is (tied with) the mode
        return 1.0
    return min(math.fsum(included), 1.0)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation of two equal-length samples."""
    if len(x) != len(y):
        raise LengthMismatch(f"samples of length {len(x)} and {len(y)}")
    if len(x) < 2:
        raise DomainError("correlation needs at least two pairs")
    n = len(x)
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    dx = [xi - mean_x for xi in x]
    dy = [yi - mean_y for yi in y]
    var_x = math.fsum(d * d for d in dx)
    var_y = math.fsum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise ZeroVariance("at least one sample is constant")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, r))


def counts_from_percentage(pct: float, n: int) -> tuple[int, ...]:
    """Integer correct-counts consistent with a reported percentage of n.

    Reported percentages are rounded; the nearest integer count is
    returned, or both neighbours when the true value sits exactly halfway
    between two integers.
    """
    exact = pct * n / 100.0
    floor = math.floor(exact)
    if abs(exact - floor - 0.5) < 1e-9:
        return (floor, floor + 1)
    return (round(exact),)


def _log_choose(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
