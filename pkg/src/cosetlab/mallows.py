"""Mallows measure p_q(w) = q^{I(w)} / [n]_q! for integer q >= 2.

This is the law a uniform element of GL_n(F_q) induces on its Bruhat cell.
Exact quantities are Fractions; samplers take a :class:`numpy.random.Generator`.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from cosetlab.combinat import (
    Permutation,
    det_exact,
    inversions,
    mahonian,
    q_factorial,
)
from cosetlab.config import LIMITS
from cosetlab.errors import CosetlabError, LimitExceeded


@dataclass(frozen=True)
class MallowsModel:
    n: int
    q: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise CosetlabError(f"Mallows model needs n >= 1, got {self.n!r}")
        if not isinstance(self.q, int) or self.q < 2:
            raise CosetlabError(f"Mallows model needs integer q >= 2, got {self.q!r}")

    @property
    def normalizer(self) -> int:
        return q_factorial(self.n, self.q)


def pmf(model: MallowsModel, w: Sequence[int]) -> Fraction:
    if len(w) != model.n:
        raise CosetlabError(f"word of length {len(w)} does not match n = {model.n}")
    return Fraction(model.q ** inversions(w), model.normalizer)


# ---------------------------------------------------------------- sampling


@lru_cache(maxsize=4096)
def placement_probabilities(i: int, q: int) -> tuple[Fraction, ...]:
    """Law of the offset k (0 = leftmost) at which symbol i is inserted.

    P(k) = q^{i-1-k}(q-1)/(q^i - 1), k = 0..i-1. Symbol i then sits left of
    exactly i-1-k smaller symbols, which is the number of inversions it adds.
    """
    denom = q**i - 1
    return tuple(Fraction(q ** (i - 1 - k) * (q - 1), denom) for k in range(i))


@lru_cache(maxsize=4096)
def _placement_cdf(i: int, q: int) -> np.ndarray:
    cdf = np.cumsum([float(p) for p in placement_probabilities(i, q)])
    cdf[-1] = 1.0
    return cdf


def sample(model: MallowsModel, rng: np.random.Generator) -> Permutation:
    """Insert symbols 1..n one at a time at random offsets."""
    row: list[int] = []
    for i in range(1, model.n + 1):
        k = int(np.searchsorted(_placement_cdf(i, model.q), rng.random(), side="right"))
        row.insert(k, i)
    return Permutation._trusted(row)


def sample_offsets(model: MallowsModel, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` insertion sequences at once; column i-1 holds the offset of symbol i."""
    out = np.empty((size, model.n), dtype=np.int64)
    for i in range(1, model.n + 1):
        out[:, i - 1] = np.searchsorted(_placement_cdf(i, model.q), rng.random(size), side="right")
    return out


def inversions_from_offsets(offsets: np.ndarray) -> np.ndarray:
    """I(w) = sum_i (i - 1 - k_i) for the word built from the offsets."""
    offsets = np.atleast_2d(offsets)
    n = offsets.shape[1]
    return (np.arange(n) - offsets).sum(axis=1)


def words_from_offsets(offsets: np.ndarray) -> np.ndarray:
    """Rebuild the words (one per row) that the insertion sampler produces."""
    offsets = np.atleast_2d(offsets)
    size, n = offsets.shape
    # rank[:, s] is the current left-to-right position of symbol s+1
    rank = np.zeros((size, n), dtype=np.int64)
    for s in range(1, n):
        k = offsets[:, s][:, None]
        placed = rank[:, :s]
        placed += placed >= k
        rank[:, s] = offsets[:, s]
    words = np.empty_like(rank)
    rows = np.arange(size)[:, None]
    words[rows, rank] = np.arange(1, n + 1)[None, :]
    return words


def sample_batch(model: MallowsModel, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent Mallows words as an int array of shape (size, n)."""
    return words_from_offsets(sample_offsets(model, size, rng))


def sampler_distribution(model: MallowsModel) -> dict[Permutation, Fraction]:
    """Exact output law of :func:`sample`, by dynamic programming over placements."""
    if model.n > LIMITS.max_permutation_n:
        raise LimitExceeded(f"sampler DP over S_{model.n} exceeds the exhaustive cap")
    states: dict[tuple[int, ...], Fraction] = {(): Fraction(1)}
    for i in range(1, model.n + 1):
        probs = placement_probabilities(i, model.q)
        nxt: dict[tuple[int, ...], Fraction] = {}
        for row, mass in states.items():
            for k, p in enumerate(probs):
                new = row[:k] + (i,) + row[k:]
                nxt[new] = nxt.get(new, 0) + mass * p
        states = nxt
    return {Permutation._trusted(w): m for w, m in states.items()}


# ---------------------------------------------------------------- inversions


def inversion_increment_law(j: int, q: int) -> tuple[Fraction, ...]:
    """P_j(i) = q^i (q-1)/(q^{j+1}-1), i = 0..j: the law of the j-th summand of I(w)."""
    denom = q ** (j + 1) - 1
    return tuple(Fraction(q**i * (q - 1), denom) for i in range(j + 1))


def inversion_distribution(model: MallowsModel) -> list[Fraction]:
    """Exact law of I(w) on {0, ..., n(n-1)/2} from the Mahonian generating polynomial."""
    if model.n > LIMITS.max_inversion_poly_n:
        raise LimitExceeded(
            f"inversion polynomial for n = {model.n} exceeds cap {LIMITS.max_inversion_poly_n}"
        )
    z = model.normalizer
    return [Fraction(c * model.q**k, z) for k, c in enumerate(mahonian(model.n))]


def inversion_moments(model: MallowsModel) -> tuple[Fraction, Fraction]:
    """Exact mean and variance of I(w), summed over the independent increments."""
    mean = Fraction(0)
    var = Fraction(0)
    for j in range(1, model.n):
        law = inversion_increment_law(j, model.q)
        m1 = sum(i * p for i, p in enumerate(law))
        m2 = sum(i * i * p for i, p in enumerate(law))
        mean += m1
        var += m2 - m1 * m1
    return mean, var


def inversion_clt_params(model: MallowsModel) -> tuple[float, float]:
    """Centering C(n,2) - (n-1)/(q-1) and scale sqrt((n-1)q)/(q-1) of the inversion CLT.

    These are the asymptotic values; the exact mean exceeds the center by
    sum_{m=2}^{n} m/(q^m - 1) (bounded in n), see :func:`inversion_moments`.
    """
    n, q = model.n, model.q
    if n < 2:
        raise CosetlabError("inversion CLT needs n >= 2")
    center = n * (n - 1) / 2 - (n - 1) / (q - 1)
    scale = math.sqrt((n - 1) * q) / (q - 1)
    return center, scale


def largest_cell_mass(model: MallowsModel) -> Fraction:
    """p_q(w0) = q^{C(n,2)} / [n]_q!."""
    n = model.n
    return Fraction(model.q ** (n * (n - 1) // 2), model.normalizer)


def largest_cell_constant(n: int, q: int, upper: int | None = None) -> Fraction:
    """c(q) with p_q(w0) = c(q)(1 - 1/q)^{n-1}: prod_{i=2}^{upper} (1 - q^{-i})^{-1}.

    The identity holds with ``upper = n`` (the default).
    """
    upper = n if upper is None else upper
    c = Fraction(1)
    for i in range(2, upper + 1):
        c /= 1 - Fraction(1, q**i)
    return c


# ---------------------------------------------------------------- descents


def _check_positions(model: MallowsModel, positions: Iterable[int]) -> list[int]:
    s = sorted(set(int(p) for p in positions))
    if any(p < 1 or p > model.n - 1 for p in s):
        raise CosetlabError(f"descent positions must lie in 1..{model.n - 1}: {s}")
    return s


def descent_matrix(model: MallowsModel, positions: Iterable[int]) -> list[list[Fraction]]:
    """Matrix [1/[s_{j+1} - s_i]_q!]_{i,j=0..k} with s_0 = 0, s_{k+1} = n and 1/[m]_q! = 0 for m < 0."""
    s = [0, *_check_positions(model, positions), model.n]
    k = len(s) - 2
    q = model.q

    def entry(m: int) -> Fraction:
        return Fraction(0) if m < 0 else Fraction(1, q_factorial(m, q))

    return [[entry(s[j + 1] - s[i]) for j in range(k + 1)] for i in range(k + 1)]


def descent_set_prob(model: MallowsModel, positions: Iterable[int]) -> Fraction:
    """P(S(w) = S) as the determinant of :func:`descent_matrix`."""
    return det_exact(descent_matrix(model, positions))


def descent_run_prob(k: int, q: int) -> Fraction:
    """Chance of k descents in a row at fixed positions: q^{C(k+1,2)} / [k+1]_q!."""
    if k < 1:
        raise CosetlabError("a descent run has length k >= 1")
    return Fraction(q ** (k * (k + 1) // 2), q_factorial(k + 1, q))


def descent_subset_prob(model: MallowsModel, positions: Iterable[int]) -> Fraction:
    """P(S ⊆ S(w)).

    Maximal runs of consecutive positions in S behave independently (the
    descent process is one-dependent), and a run of length k contributes
    :func:`descent_run_prob`. The result equals the sum of
    :func:`descent_set_prob` over all supersets of S.
    """
    s = _check_positions(model, positions)
    prob = Fraction(1)
    run = 0
    prev = None
    for p in s:
        if prev is not None and p == prev + 1:
            run += 1
        else:
            if run:
                prob *= descent_run_prob(run, model.q)
            run = 1
        prev = p
    if run:
        prob *= descent_run_prob(run, model.q)
    return prob


def descent_moments(model: MallowsModel) -> tuple[Fraction, Fraction]:
    """Exact mean and variance of the descent count d(w).

    mean = q(n-1)/(q+1); the variance uses one-dependence:
    (n-1)p(1-p) + 2(n-2)(p_2 - p^2), p = P(one descent), p_2 = P(two in a row).
    Closed form: q((q^2-q+1)n - q^2 + 3q - 1) / ((q+1)^2 (q^2+q+1)).
    """
    n, q = model.n, model.q
    if n < 2:
        raise CosetlabError("descent moments need n >= 2")
    p = descent_run_prob(1, q)
    p2 = descent_run_prob(2, q)
    mean = (n - 1) * p
    var = (n - 1) * p * (1 - p) + 2 * (n - 2) * (p2 - p * p)
    return mean, var


def factored_descent_variance(n: int, q: int) -> Fraction:
    """The factored expression q(q^2-q+1)(n-q^2+3q-1)/((q+1)^2(1+q+q^2)).

    Not the variance of d(w) for q >= 2 (compare :func:`descent_moments`); kept for comparison reports.
    """
    return Fraction(q * (q * q - q + 1) * (n - q * q + 3 * q - 1), (q + 1) ** 2 * (1 + q + q * q))


# ---------------------------------------------------------------- coordinate laws


def first_letter_law(model: MallowsModel) -> list[Fraction]:
    """P(w_1 = j) = q^{j-1}(q-1)/(q^n - 1), j = 1..n."""
    n, q = model.n, model.q
    return [Fraction(q ** (j - 1) * (q - 1), q**n - 1) for j in range(1, n + 1)]


def last_letter_law(model: MallowsModel) -> list[Fraction]:
    """P(w_n = j) = q^{n-j}(q-1)/(q^n - 1), j = 1..n."""
    n, q = model.n, model.q
    return [Fraction(q ** (n - j) * (q - 1), q**n - 1) for j in range(1, n + 1)]
