"""Exact combinatorial primitives shared by every family module.

Permutations use one-line notation with 1-based values: ``Permutation((6, 1, 2, 5, 4, 3))``
is the word 612543 and ``w[0]`` is the entry at position 1. All probabilities
elsewhere in the package are :class:`fractions.Fraction`; integers are Python
ints, so nothing here overflows.
"""

from __future__ import annotations

import enum
import itertools
import math
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from fractions import Fraction

from cosetlab.config import LIMITS
from cosetlab.errors import CosetlabError, LimitExceeded


class Permutation(tuple):
    """A bijection of {1..n} stored as its one-line word."""

    __slots__ = ()

    def __new__(cls, word: Iterable[int] = ()):
        word = tuple(int(x) for x in word)
        if sorted(word) != list(range(1, len(word) + 1)):
            raise CosetlabError(f"not a permutation of 1..{len(word)}: {word}")
        return tuple.__new__(cls, word)

    @classmethod
    def _trusted(cls, word: Iterable[int]) -> Permutation:
        return tuple.__new__(cls, word)

    @classmethod
    def parse(cls, text: str) -> Permutation:
        """Parse ``"612543"``, ``"6,1,2,5,4,3"``, ``"6 1 2"`` or a JSON array."""
        text = text.strip()
        if text.startswith("["):
            text = text[1:-1]
        if "," in text or " " in text:
            parts = [p for p in text.replace(",", " ").split() if p]
            return cls(int(p) for p in parts)
        return cls(int(ch) for ch in text)

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return tuple.__new__(cls, range(1, n + 1))

    @classmethod
    def longest(cls, n: int) -> Permutation:
        return tuple.__new__(cls, range(n, 0, -1))

    @property
    def n(self) -> int:
        return len(self)

    def inverse(self) -> Permutation:
        inv = [0] * len(self)
        for pos, val in enumerate(self, 1):
            inv[val - 1] = pos
        return tuple.__new__(Permutation, inv)

    def reverse(self) -> Permutation:
        """Left-right flip of the word (the map R)."""
        return tuple.__new__(Permutation, self[::-1])

    def compose(self, other: Sequence[int]) -> Permutation:
        """Return ``self ∘ other``, i.e. ``i ↦ self(other(i))``."""
        return tuple.__new__(Permutation, (self[j - 1] for j in other))

    def __call__(self, i: int) -> int:
        return self[i - 1]

    def __str__(self) -> str:
        if len(self) <= 9:
            return "".join(map(str, self))
        return ",".join(map(str, self))

    def __repr__(self) -> str:
        return f"Permutation({str(self)!r})"


class Partition(tuple):
    """Weakly decreasing tuple of positive parts."""

    __slots__ = ()

    def __new__(cls, parts: Iterable[int] = ()):
        parts = tuple(int(p) for p in parts)
        if any(p <= 0 for p in parts):
            raise CosetlabError(f"partition parts must be positive: {parts}")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise CosetlabError(f"partition parts must be weakly decreasing: {parts}")
        return tuple.__new__(cls, parts)

    @classmethod
    def from_parts(cls, parts: Iterable[int]) -> Partition:
        """Sort arbitrary positive parts into a partition."""
        return cls(sorted((p for p in parts if p), reverse=True))

    @classmethod
    def parse(cls, text: str) -> Partition:
        text = text.strip().strip("[]()")
        return cls(int(p) for p in text.replace(",", " ").split() if p)

    @property
    def n(self) -> int:
        return sum(self)

    @property
    def length(self) -> int:
        return len(self)

    def multiplicities(self) -> dict[int, int]:
        """Map part size i to a_i, the number of parts equal to i."""
        return dict(Counter(self))

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self)) + ")"

    def __repr__(self) -> str:
        return f"Partition({tuple(self)!r})"


# ---------------------------------------------------------------- statistics


def inversions_naive(w: Sequence[int]) -> int:
    n = len(w)
    return sum(1 for i in range(n) for j in range(i + 1, n) if w[i] > w[j])


def _merge_count(a: list[int]) -> tuple[list[int], int]:
    if len(a) <= 1:
        return a, 0
    mid = len(a) // 2
    left, x = _merge_count(a[:mid])
    right, y = _merge_count(a[mid:])
    merged = []
    count = x + y
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            count += len(left) - i
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged, count


def inversions(w: Sequence[int]) -> int:
    """Number of pairs i < j with w_i > w_j (merge count, O(n log n))."""
    if len(w) < 16:
        return inversions_naive(w)
    return _merge_count(list(w))[1]


def descent_set(w: Sequence[int]) -> frozenset[int]:
    """Positions i (1-based) with w_{i+1} < w_i."""
    return frozenset(i + 1 for i in range(len(w) - 1) if w[i + 1] < w[i])


def descent_count(w: Sequence[int]) -> int:
    return sum(1 for i in range(len(w) - 1) if w[i + 1] < w[i])


def cycle_type(w: Sequence[int]) -> Partition:
    seen = [False] * (len(w) + 1)
    lengths = []
    for start in range(1, len(w) + 1):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = w[j - 1]
            length += 1
        lengths.append(length)
    return Partition(sorted(lengths, reverse=True))


# ---------------------------------------------------------------- q-analogues


def q_integer(m: int, q) -> int:
    """[m]_q = 1 + q + ... + q^{m-1}."""
    return sum(q**k for k in range(m))


def q_factorial(n: int, q) -> int:
    """[n]_q! = prod_{i=1}^{n-1} (1 + q + ... + q^i); [0]_q! = [1]_q! = 1.

    Works for any ring element ``q`` (int, Fraction); integer ``q`` gives an
    exact big integer.
    """
    if n < 0:
        raise CosetlabError("q_factorial needs n >= 0")
    result = 1
    for i in range(2, n + 1):
        result *= q_integer(i, q)
    return result


def mahonian(n: int) -> list[int]:
    """Coefficients of prod_{i=1}^{n-1}(1 + t + ... + t^i): entry k counts w in S_n with k inversions."""
    coeffs = [1]
    for i in range(1, n):
        new = [0] * (len(coeffs) + i)
        for k, c in enumerate(coeffs):
            for d in range(i + 1):
                new[k + d] += c
        coeffs = new
    return coeffs


def z_lambda(lam: Sequence[int]) -> int:
    """z_λ = prod_i i^{a_i} a_i!, the centralizer order of cycle type λ."""
    z = 1
    for part, mult in Counter(lam).items():
        z *= part**mult * math.factorial(mult)
    return z


# ---------------------------------------------------------------- majorization


class Ordering(enum.Enum):
    LESS = "less"  # a ≺ b: b majorizes a
    GREATER = "greater"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


def majorizes(a: Sequence[int], b: Sequence[int]) -> Ordering:
    """Compare two multisets with equal sums in majorization order.

    Returns LESS when ``a ≺ b`` (every prefix sum of sorted-descending ``a`` is
    at most that of ``b``).
    """
    if sum(a) != sum(b):
        raise CosetlabError(f"majorization needs equal sums, got {sum(a)} and {sum(b)}")
    size = max(len(a), len(b))
    xa = sorted(a, reverse=True) + [0] * (size - len(a))
    xb = sorted(b, reverse=True) + [0] * (size - len(b))
    if xa == xb:
        return Ordering.EQUAL
    pa = list(itertools.accumulate(xa))
    pb = list(itertools.accumulate(xb))
    if all(x <= y for x, y in zip(pa, pb)):
        return Ordering.LESS
    if all(x >= y for x, y in zip(pa, pb)):
        return Ordering.GREATER
    return Ordering.INCOMPARABLE


# ---------------------------------------------------------------- enumeration


def enumerate_permutations(n: int, limit: int | None = None) -> Iterator[Permutation]:
    """All n! permutations in lexicographic order."""
    limit = LIMITS.max_permutation_n if limit is None else limit
    if n > limit:
        raise LimitExceeded(
            f"S_{n} has {math.factorial(n)} elements, above the exhaustive cap n <= {limit}; "
            "use the Monte Carlo samplers instead"
        )
    for w in itertools.permutations(range(1, n + 1)):
        yield Permutation._trusted(w)


def enumerate_partitions(n: int) -> Iterator[Partition]:
    """All partitions of n, in reverse lexicographic order starting at (n)."""

    def rec(remaining: int, largest: int) -> Iterator[tuple[int, ...]]:
        if remaining == 0:
            yield ()
            return
        for part in range(min(remaining, largest), 0, -1):
            for rest in rec(remaining - part, part):
                yield (part,) + rest

    if n < 0:
        raise CosetlabError("cannot partition a negative integer")
    for parts in rec(n, n):
        yield tuple.__new__(Partition, parts)


def partition_count(n: int) -> int:
    """p(n) via Euler's pentagonal recurrence (independent of the generator)."""
    p = [1] + [0] * n
    for m in range(1, n + 1):
        total = 0
        k = 1
        while True:
            g1 = k * (3 * k - 1) // 2
            if g1 > m:
                break
            sign = 1 if k % 2 else -1
            total += sign * p[m - g1]
            g2 = k * (3 * k + 1) // 2
            if g2 <= m:
                total += sign * p[m - g2]
            k += 1
        p[m] = total
    return p[n]


# ---------------------------------------------------------------- exact linear algebra


def det_exact(matrix: Sequence[Sequence]) -> Fraction:
    """Determinant over the rationals by fraction-exact Gaussian elimination."""
    a = [[Fraction(x) for x in row] for row in matrix]
    size = len(a)
    det = Fraction(1)
    for col in range(size):
        pivot = next((r for r in range(col, size) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, size):
            if a[r][col]:
                f = a[r][col] / a[col][col]
                for c in range(col, size):
                    a[r][c] -= f * a[col][c]
    return det
