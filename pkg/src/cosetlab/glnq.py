"""Linear algebra over F_q: Bruhat decomposition, cell sizes, enumeration and uniform samplers.

Field elements are integer codes 0..q-1. For q = p^k the code of
c_0 + c_1 x + ... + c_{k-1} x^{k-1} is sum c_i p^i (little-endian base-p digits),
reduced modulo a fixed monic irreducible of degree k. Borel subgroups are the
invertible LOWER triangular matrices, and A = B1 P(w) B2 with P(w)[i][w(i)] = 1.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from cosetlab import mallows
from cosetlab.combinat import Permutation, inversions, q_factorial
from cosetlab.config import LIMITS
from cosetlab.errors import CosetlabError, LimitExceeded, SingularMatrix

TABLE_LIMIT = 64


def _factor_prime_power(q: int) -> tuple[int, int]:
    if q < 2:
        raise CosetlabError(f"field order must be a prime power >= 2, got {q}")
    p = next(d for d in range(2, q + 1) if q % d == 0)
    k, rest = 0, q
    while rest % p == 0:
        rest //= p
        k += 1
    if rest != 1:
        raise CosetlabError(f"{q} is not a prime power")
    return p, k


def _poly_mulmod(a: list[int], b: list[int], mod: list[int], p: int) -> list[int]:
    k = len(mod) - 1
    prod = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] = (prod[i + j] + x * y) % p
    for d in range(len(prod) - 1, k - 1, -1):
        c = prod[d]
        if c:
            for i in range(k + 1):
                prod[d - k + i] = (prod[d - k + i] - c * mod[i]) % p
    return (prod + [0] * k)[:k]


def _poly_has_factor(mod: list[int], p: int) -> bool:
    # trial division by every monic polynomial of degree 1..k//2
    k = len(mod) - 1
    for deg in range(1, k // 2 + 1):
        for low in itertools.product(range(p), repeat=deg):
            div = list(low) + [1]
            rem = list(mod)
            for d in range(len(rem) - 1, deg - 1, -1):
                c = rem[d]
                if c:
                    for i in range(deg + 1):
                        rem[d - deg + i] = (rem[d - deg + i] - c * div[i]) % p
            if not any(rem[:deg]):
                return True
    return False


@lru_cache(maxsize=None)
def irreducible_modulus(p: int, k: int) -> tuple[int, ...]:
    """Lexicographically first monic irreducible of degree k over F_p (coefficients low to high)."""
    for low in itertools.product(range(p), repeat=k):
        mod = list(reversed(low)) + [1]
        if mod[0] == 0:
            continue
        if not _poly_has_factor(mod, p):
            return tuple(mod)
    raise CosetlabError(f"no irreducible polynomial of degree {k} over F_{p}")  # pragma: no cover


class FqField:
    """The field with q elements; prime q uses modular arithmetic, q = p^k uses tables."""

    def __init__(self, q: int):
        p, k = _factor_prime_power(q)
        self.q, self.p, self.k = q, p, k
        self.modulus = irreducible_modulus(p, k) if k > 1 else None
        if k > 1 and q > TABLE_LIMIT:
            raise CosetlabError(f"prime-power fields are supported up to q = {TABLE_LIMIT}, got {q}")
        self._add = self._mul = None
        if q <= TABLE_LIMIT:
            self._build_tables()
            self.check_axioms()
        self._inv = [0] + [self._slow_inverse(a) for a in range(1, q)] if q <= 10**5 else None

    def __repr__(self) -> str:
        return f"FqField({self.q})"

    def __eq__(self, other) -> bool:
        return isinstance(other, FqField) and other.q == self.q

    def __hash__(self) -> int:
        return hash(("FqField", self.q))

    def digits(self, a: int) -> list[int]:
        out = []
        for _ in range(self.k):
            a, r = divmod(a, self.p)
            out.append(r)
        return out

    def from_digits(self, digits: Sequence[int]) -> int:
        return sum(d * self.p**i for i, d in enumerate(digits))

    def _build_tables(self) -> None:
        q, p = self.q, self.p
        if self.k == 1:
            r = np.arange(q)
            self._add = (r[:, None] + r[None, :]) % q
            self._mul = (r[:, None] * r[None, :]) % q
            return
        dig = [self.digits(a) for a in range(q)]
        add = np.empty((q, q), dtype=np.int64)
        mul = np.empty((q, q), dtype=np.int64)
        for a in range(q):
            for b in range(q):
                add[a, b] = self.from_digits([(x + y) % p for x, y in zip(dig[a], dig[b])])
                mul[a, b] = self.from_digits(_poly_mulmod(dig[a], dig[b], list(self.modulus), p))
        self._add, self._mul = add, mul

    def check_axioms(self) -> None:
        """Exhaustive field-axiom check on the operation tables."""
        add, mul, q = self._add, self._mul, self.q
        r = np.arange(q)
        ok = (
            np.array_equal(add, add.T)
            and np.array_equal(mul, mul.T)
            and np.array_equal(add[0], r)
            and np.array_equal(mul[1], r)
            and np.all(mul[0] == 0)
            and all(np.any(add[a] == 0) for a in range(q))
            and all(np.any(mul[a] == 1) for a in range(1, q))
            and np.array_equal(add[add[:, :, None], r[None, None, :]], add[r[:, None, None], add[None, :, :]])
            and np.array_equal(mul[mul[:, :, None], r[None, None, :]], mul[r[:, None, None], mul[None, :, :]])
            and np.array_equal(
                mul[r[:, None, None], add[None, :, :]],
                add[mul[:, :, None], mul[:, None, :]],
            )
        )
        if not ok:
            raise CosetlabError(f"field tables for q = {q} violate the field axioms")  # pragma: no cover

    def add(self, a: int, b: int) -> int:
        if self._add is not None:
            return int(self._add[a, b])
        return (a + b) % self.q

    def neg(self, a: int) -> int:
        if self.k == 1:
            return (-a) % self.q
        return self.from_digits([(-d) % self.p for d in self.digits(a)])

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self._mul is not None:
            return int(self._mul[a, b])
        return (a * b) % self.q

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse in F_q")
        if self._inv is not None:
            return self._inv[a]
        return pow(a, self.q - 2, self.q)

    def _slow_inverse(self, a: int) -> int:
        if self.k == 1:
            return pow(a, self.q - 2, self.q)
        return next(b for b in range(1, self.q) if self.mul(a, b) == 1)


@lru_cache(maxsize=None)
def field(q: int) -> FqField:
    return FqField(q)


# ---------------------------------------------------------------- matrices


@dataclass(frozen=True)
class FqMatrix:
    field: FqField
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.rows)
        if any(len(r) != n for r in self.rows):
            raise CosetlabError("FqMatrix must be square")
        if any(not 0 <= x < self.field.q for r in self.rows for x in r):
            raise CosetlabError(f"entries must be field codes 0..{self.field.q - 1}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], q: int) -> FqMatrix:
        return cls(field(q), tuple(tuple(int(x) for x in r) for r in rows))

    @classmethod
    def identity(cls, n: int, q: int) -> FqMatrix:
        return cls(field(q), tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def permutation(cls, w: Sequence[int], q: int) -> FqMatrix:
        """P(w) with a one in row i, column w(i)."""
        n = len(w)
        return cls(field(q), tuple(tuple(int(w[i] == j + 1) for j in range(n)) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def q(self) -> int:
        return self.field.q

    def __matmul__(self, other: FqMatrix) -> FqMatrix:
        F = self.field
        if other.field != F or other.n != self.n:
            raise CosetlabError("matrix product needs equal size and field")
        cols = list(zip(*other.rows))
        out = []
        for r in self.rows:
            row = []
            for c in cols:
                acc = 0
                for x, y in zip(r, c):
                    if x and y:
                        acc = F.add(acc, F.mul(x, y))
                row.append(acc)
            out.append(tuple(row))
        return FqMatrix(F, tuple(out))

    def is_lower_triangular(self) -> bool:
        return all(self.rows[i][j] == 0 for i in range(self.n) for j in range(i + 1, self.n))

    def to_list(self) -> list[list[int]]:
        return [list(r) for r in self.rows]

    def __str__(self) -> str:
        return "\n".join(" ".join(map(str, r)) for r in self.rows)


def rank(A: FqMatrix) -> int:
    F = A.field
    m = [list(r) for r in A.rows]
    n = len(m)
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, n) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = F.inv(m[r][c])
        for i in range(r + 1, n):
            if m[i][c]:
                f = F.mul(m[i][c], inv)
                m[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(m[i], m[r])]
        r += 1
    return r


def is_invertible(A: FqMatrix) -> bool:
    return rank(A) == A.n


def inverse(A: FqMatrix) -> FqMatrix:
    F = A.field
    n = A.n
    m = [list(r) + [int(i == j) for j in range(n)] for i, r in enumerate(A.rows)]
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c]), None)
        if piv is None:
            raise SingularMatrix("matrix is singular over F_q")
        m[c], m[piv] = m[piv], m[c]
        inv = F.inv(m[c][c])
        m[c] = [F.mul(inv, x) for x in m[c]]
        for i in range(n):
            if i != c and m[i][c]:
                f = m[i][c]
                m[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(m[i], m[c])]
    return FqMatrix(F, tuple(tuple(r[n:]) for r in m))


# ---------------------------------------------------------------- Bruhat decomposition


@dataclass(frozen=True)
class BruhatFactorization:
    b1: FqMatrix
    w: Permutation
    b2: FqMatrix
    swaps: int  # row interchanges made by partial-pivoting elimination of the same matrix

    def product(self) -> FqMatrix:
        return self.b1 @ FqMatrix.permutation(self.w, self.b1.q) @ self.b2


def _reduce_to_monomial(A: FqMatrix):
    """Reduce A with downward row ops and leftward column ops to a monomial matrix.

    Returns (M, R, C, w) with R A C = M = D P(w), R and C lower triangular.
    Row i's pivot is its rightmost surviving nonzero entry.
    """
    F = A.field
    n = A.n
    m = [list(r) for r in A.rows]
    R = [[int(i == j) for j in range(n)] for i in range(n)]
    C = [[int(i == j) for j in range(n)] for i in range(n)]
    w = [0] * n
    for i in range(n):
        col = next((j for j in range(n - 1, -1, -1) if m[i][j]), None)
        if col is None:
            raise SingularMatrix("matrix is singular over F_q")
        w[i] = col + 1
        inv = F.inv(m[i][col])
        # clear below the pivot: row r -= f * row i  (r > i)
        for r in range(i + 1, n):
            if m[r][col]:
                f = F.mul(m[r][col], inv)
                m[r] = [F.sub(x, F.mul(f, y)) for x, y in zip(m[r], m[i])]
                R[r] = [F.sub(x, F.mul(f, y)) for x, y in zip(R[r], R[i])]
        # clear left of the pivot: column c -= f * column col  (c < col)
        for c in range(col):
            if m[i][c]:
                f = F.mul(m[i][c], inv)
                for r in range(n):
                    m[r][c] = F.sub(m[r][c], F.mul(f, m[r][col]))
                    C[r][c] = F.sub(C[r][c], F.mul(f, C[r][col]))
    return m, R, C, w


def bruhat_cell(A: FqMatrix) -> Permutation:
    """The permutation w with A in B w B."""
    return Permutation._trusted(_reduce_to_monomial(A)[3])


def pivot_swaps(A: FqMatrix) -> int:
    """Row interchanges made by textbook elimination that pivots on the first nonzero entry."""
    F = A.field
    m = [list(r) for r in A.rows]
    n = len(m)
    swaps = 0
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c]), None)
        if piv is None:
            raise SingularMatrix("matrix is singular over F_q")
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            swaps += 1
        inv = F.inv(m[c][c])
        for i in range(c + 1, n):
            if m[i][c]:
                f = F.mul(m[i][c], inv)
                m[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(m[i], m[c])]
    return swaps


def bruhat_decompose(A: FqMatrix) -> BruhatFactorization:
    """Factor A = B1 P(w) B2 with B1, B2 invertible lower triangular."""
    F = A.field
    n = A.n
    m, R, C, w = _reduce_to_monomial(A)
    # R A C = D P(w) with D diagonal, D[i][i] = m[i][w(i)-1]
    d = [m[i][w[i] - 1] for i in range(n)]
    Rinv = inverse(FqMatrix(F, tuple(map(tuple, R))))
    Cinv = inverse(FqMatrix(F, tuple(map(tuple, C))))
    b1 = FqMatrix(F, tuple(tuple(F.mul(Rinv.rows[i][j], d[j]) for j in range(n)) for i in range(n)))
    return BruhatFactorization(b1, Permutation._trusted(w), Cinv, pivot_swaps(A))


# ---------------------------------------------------------------- orders and cells


def group_order(n: int, q: int) -> int:
    """|GL_n(F_q)| = prod_{i=0}^{n-1} (q^n - q^i)."""
    _factor_prime_power(q)
    return math.prod(q**n - q**i for i in range(n))


def borel_order(n: int, q: int) -> int:
    """|B| = (q-1)^n q^{C(n,2)}."""
    _factor_prime_power(q)
    return (q - 1) ** n * q ** (n * (n - 1) // 2)


def cell_size(n: int, q: int, w: Sequence[int]) -> int:
    """|B w B| = |B| q^{I(w)}."""
    if len(w) != n:
        raise CosetlabError("permutation size does not match n")
    return borel_order(n, q) * q ** inversions(w)


def order_via_cells(n: int, q: int) -> int:
    """|B| [n]_q!, the sum of all cell sizes."""
    return borel_order(n, q) * q_factorial(n, q)


def invertible_probability(n: int, q: int) -> float:
    """Chance a uniformly filled n x n array over F_q is invertible: prod_{i=1}^n (1 - q^{-i})."""
    return math.prod(1 - q ** (-i) for i in range(1, n + 1))


# ---------------------------------------------------------------- enumeration


def _span(vectors: list[tuple[int, ...]], F: FqField, n: int) -> set[tuple[int, ...]]:
    span = {tuple([0] * n)}
    for v in vectors:
        span = {
            tuple(F.add(x, F.mul(c, y)) for x, y in zip(u, v)) for u in span for c in range(F.q)
        }
    return span


def enumerate_gl(n: int, q: int, cap: int | None = None) -> Iterator[FqMatrix]:
    """Every invertible n x n matrix over F_q, built row by row outside the span of earlier rows."""
    cap = LIMITS.max_group_order if cap is None else cap
    order = group_order(n, q)
    if order > cap:
        raise LimitExceeded(f"|GL_{n}(F_{q})| = {order} exceeds the enumeration cap {cap}")
    F = field(q)
    vectors = list(itertools.product(range(q), repeat=n))

    def rec(prefix: list[tuple[int, ...]]):
        if len(prefix) == n:
            yield FqMatrix(F, tuple(prefix))
            return
        span = _span(prefix, F, n)
        for v in vectors:
            if v not in span:
                prefix.append(v)
                yield from rec(prefix)
                prefix.pop()

    yield from rec([])


# ---------------------------------------------------------------- samplers


def random_borel(n: int, q: int, rng: np.random.Generator) -> FqMatrix:
    """Uniform invertible lower-triangular matrix."""
    rows = []
    for i in range(n):
        row = [int(x) for x in rng.integers(0, q, size=i)]
        row.append(int(rng.integers(1, q)))
        row.extend([0] * (n - i - 1))
        rows.append(tuple(row))
    return FqMatrix(field(q), tuple(rows))


def sample_uniform_pak(n: int, q: int, rng: np.random.Generator) -> FqMatrix:
    """Uniform element of GL_n(F_q) as B1 P(w) B2 with w ~ Mallows(q) and B1, B2 uniform in B."""
    _factor_prime_power(q)
    w = mallows.sample(mallows.MallowsModel(n, q), rng) if n > 1 else Permutation.identity(n)
    b1 = random_borel(n, q, rng)
    b2 = random_borel(n, q, rng)
    return b1 @ FqMatrix.permutation(w, q) @ b2


def sample_uniform_rejection(n: int, q: int, rng: np.random.Generator) -> tuple[FqMatrix, int]:
    """Fill uniformly until invertible; returns the matrix and the number of attempts."""
    F = field(q)
    attempts = 0
    while True:
        attempts += 1
        rows = tuple(tuple(int(x) for x in r) for r in rng.integers(0, q, size=(n, n)))
        A = FqMatrix(F, rows)
        if is_invertible(A):
            return A, attempts


def sample_uniform_pak_batch(n: int, q: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` draws of :func:`sample_uniform_pak` as an int array (size, n, n); prime q only."""
    p, k = _factor_prime_power(q)
    if k != 1:
        raise CosetlabError("batched sampling needs a prime q; use sample_uniform_pak")
    if n == 1:
        return rng.integers(1, q, size=(size, 1, 1))
    words = mallows.sample_batch(mallows.MallowsModel(n, q), size, rng)
    perm = np.zeros((size, n, n), dtype=np.int64)
    perm[np.arange(size)[:, None], np.arange(n)[None, :], words - 1] = 1

    def borel():
        b = np.tril(rng.integers(0, q, size=(size, n, n)), k=-1)
        b[:, np.arange(n), np.arange(n)] = rng.integers(1, q, size=(size, n))
        return b

    b1, b2 = borel(), borel()
    return (b1 @ perm % q) @ b2 % q
