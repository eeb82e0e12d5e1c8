"""Hyperoctahedral double cosets B_n \\ S_2n / B_n and the Ewens measure.

A permutation σ of {1..2n} is sent to a partition of n through its matching
graph: red edges pair the points {2i-1, 2i}, blue edges are the images
{σ(2i-1), σ(2i)}, and halving the alternating cycle lengths gives λ_σ.
The map is constant on double cosets of the stabilizer of the red pairing.
The centrally symmetric copy of B_n (σ(i) + σ(2n+1-i) = 2n+1) stabilizes the
pairing {i, 2n+1-i} instead; pass ``pairing="central"`` to use that one.
"""

from __future__ import annotations

import bisect
import itertools
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from cosetlab.combinat import Partition, Permutation, enumerate_partitions, z_lambda
from cosetlab.config import LIMITS
from cosetlab.errors import CosetlabError, LimitExceeded
from cosetlab.statlab import neg_binomial_weight

PAIRINGS = ("adjacent", "central")


def red_pairs(n: int, pairing: str = "adjacent") -> list[tuple[int, int]]:
    if pairing == "adjacent":
        return [(2 * i - 1, 2 * i) for i in range(1, n + 1)]
    if pairing == "central":
        return [(i, 2 * n + 1 - i) for i in range(1, n + 1)]
    raise CosetlabError(f"unknown pairing {pairing!r}; expected one of {PAIRINGS}")


@dataclass(frozen=True)
class MatchGraph:
    n: int
    red: tuple[tuple[int, int], ...]
    blue: tuple[tuple[int, int], ...]

    @classmethod
    def of(cls, sigma: Sequence[int], pairing: str = "adjacent") -> MatchGraph:
        if len(sigma) % 2:
            raise CosetlabError(f"coset partition needs a permutation of even size, got {len(sigma)}")
        n = len(sigma) // 2
        red = tuple(red_pairs(n, pairing))
        blue = tuple((sigma[a - 1], sigma[b - 1]) for a, b in red)
        return cls(n, red, blue)

    def cycles(self) -> list[list[int]]:
        """Alternating red/blue cycles as vertex lists."""
        red_mate = {}
        blue_mate = {}
        for a, b in self.red:
            red_mate[a], red_mate[b] = b, a
        for a, b in self.blue:
            blue_mate[a], blue_mate[b] = b, a
        seen = set()
        cycles = []
        for start in range(1, 2 * self.n + 1):
            if start in seen:
                continue
            cyc = []
            v = start
            while True:
                cyc.append(v)
                seen.add(v)
                u = red_mate[v]
                cyc.append(u)
                seen.add(u)
                v = blue_mate[u]
                if v == start:
                    break
            cycles.append(cyc)
        return cycles


def coset_partition(sigma: Sequence[int], pairing: str = "adjacent") -> Partition:
    """λ_σ: half the lengths of the alternating cycles of the matching graph."""
    graph = MatchGraph.of(sigma, pairing)
    return Partition(sorted((len(c) // 2 for c in graph.cycles()), reverse=True))


def is_centrally_symmetric(sigma: Sequence[int]) -> bool:
    m = len(sigma)
    return m % 2 == 0 and all(sigma[i] + sigma[m - 1 - i] == m + 1 for i in range(m // 2))


def hyperoctahedral_group(n: int, pairing: str = "central") -> list[Permutation]:
    """All 2^n n! permutations of {1..2n} that map the chosen pairing to itself."""
    pairs = red_pairs(n, pairing)
    out = []
    for perm in itertools.permutations(range(n)):
        for flips in itertools.product((0, 1), repeat=n):
            w = [0] * (2 * n)
            for i, j in enumerate(perm):
                a, b = pairs[i]
                c, d = pairs[j]
                if flips[i]:
                    c, d = d, c
                w[a - 1], w[b - 1] = c, d
            out.append(Permutation._trusted(w))
    return sorted(out)


def hyperoctahedral_order(n: int) -> int:
    return 2**n * math.factorial(n)


def coset_size(lam: Sequence[int]) -> int:
    """|B_λ| = |B_n|^2 / (2^{ℓ(λ)} z_λ)."""
    lam = Partition(lam)
    size, rem = divmod(hyperoctahedral_order(lam.n) ** 2, 2 ** len(lam) * z_lambda(lam))
    assert rem == 0
    return size


def coset_histogram(n: int, pairing: str = "adjacent", limit: int | None = None) -> dict[Partition, int]:
    """Exhaustive class sizes of λ_σ over S_2n."""
    limit = LIMITS.max_permutation_n if limit is None else limit
    if 2 * n > limit:
        raise LimitExceeded(f"S_{2 * n} exceeds the exhaustive cap n <= {limit}")
    hist: dict[Partition, int] = {}
    for sigma in itertools.permutations(range(1, 2 * n + 1)):
        lam = coset_partition(sigma, pairing)
        hist[lam] = hist.get(lam, 0) + 1
    return hist


# ---------------------------------------------------------------- Ewens measure


@dataclass(frozen=True)
class EwensModel:
    n: int
    theta: Fraction = Fraction(1, 2)

    def __post_init__(self):
        object.__setattr__(self, "theta", Fraction(self.theta))
        if self.n < 0:
            raise CosetlabError("Ewens model needs n >= 0")
        if self.theta <= 0:
            raise CosetlabError("Ewens model needs theta > 0")

    @property
    def normalizer(self) -> Fraction:
        """θ(θ+1)...(θ+n-1)."""
        return math.prod((self.theta + k for k in range(self.n)), start=Fraction(1))


def ewens_pmf(model: EwensModel, lam: Sequence[int]) -> Fraction:
    """θ^{ℓ(λ)} n! / (z_λ θ(θ+1)...(θ+n-1))."""
    lam = Partition(lam)
    if lam.n != model.n:
        raise CosetlabError(f"partition of {lam.n} does not match n = {model.n}")
    return model.theta ** len(lam) * math.factorial(model.n) / (z_lambda(lam) * model.normalizer)


def ewens_distribution(model: EwensModel) -> dict[Partition, Fraction]:
    return {lam: ewens_pmf(model, lam) for lam in enumerate_partitions(model.n)}


def ewens_length_mean(model: EwensModel) -> Fraction:
    """E ℓ(λ) = sum_{k=0}^{n-1} θ/(θ+k)."""
    return sum((model.theta / (model.theta + k) for k in range(model.n)), Fraction(0))


def crp_sample(model: EwensModel, rng: np.random.Generator) -> Partition:
    """Chinese restaurant process: customer m+1 opens a table w.p. θ/(θ+m)."""
    theta = float(model.theta)
    tables: list[int] = []
    for m in range(model.n):
        u = rng.random() * (theta + m)
        if u < theta:
            tables.append(1)
            continue
        u -= theta
        acc = 0.0
        for i, size in enumerate(tables):
            acc += size
            if u < acc:
                tables[i] += 1
                break
        else:
            tables[-1] += 1
    return Partition.from_parts(tables)


# ---------------------------------------------------------------- f(λ) = z_λ 2^{ℓ(λ)}


def f_statistic(lam: Sequence[int]) -> int:
    lam = Partition(lam)
    if not lam:
        raise CosetlabError("f needs a nonempty partition")
    return z_lambda(lam) * 2 ** len(lam)


def box_move(lam: Sequence[int]) -> Partition:
    """Move one box from the end of the last row to the end of the first row."""
    lam = Partition(lam)
    if len(lam) <= 1:
        raise CosetlabError("box_move needs a partition with at least two rows")
    parts = list(lam)
    parts[0] += 1
    parts[-1] -= 1
    return Partition.from_parts(parts)


# ---------------------------------------------------------------- cycle index


def _monomial(lam: Partition, x: Sequence) -> Fraction:
    out = Fraction(1)
    for part in lam:
        out *= Fraction(x[part - 1])
    return out


def cycle_index_sum(n: int, x: Sequence) -> Fraction:
    """sum_{λ ⊢ n} z_λ^{-1} 2^{-ℓ(λ)} prod_i x_i^{a_i(λ)}."""
    if len(x) < n:
        raise CosetlabError(f"need {n} weights, got {len(x)}")
    return sum(
        (_monomial(lam, x) / (z_lambda(lam) * 2 ** len(lam)) for lam in enumerate_partitions(n)),
        Fraction(0),
    )


def coset_cycle_indicator(n: int, x: Sequence, limit: int | None = None) -> Fraction:
    """f_n = (1/(2n)!) sum_{σ ∈ S_2n} prod_i x_i^{a_i(λ_σ)}, by enumerating S_2n."""
    if n == 0:
        return Fraction(1)
    hist = coset_histogram(n, limit=limit)
    total = sum((count * _monomial(lam, x) for lam, count in hist.items()), Fraction(0))
    return total / math.factorial(2 * n)


def cycle_index_prefactor(n: int) -> Fraction:
    """C(2n, n) / 2^{2n}."""
    return Fraction(math.comb(2 * n, n), 4**n)


# ---------------------------------------------------------------- Poissonization


class _NegBinomialTable:
    """Truncated inverse-CDF table for n ~ NegBinomial(1/2, 1-t)."""

    def __init__(self, t: Fraction, tail: float = 1e-12):
        self.t = t
        self.scale = math.sqrt(1 - t)
        cum = Fraction(0)
        self.cdf: list[float] = []
        n = 0
        total = 1 / self.scale  # sum of all weights
        while True:
            cum += neg_binomial_weight(n, t)
            self.cdf.append(float(cum) * self.scale)
            # tail bound: weights decay at least geometrically with ratio t
            next_w = float(neg_binomial_weight(n + 1, t)) * self.scale
            if next_w / (1 - float(t)) < tail or float(cum) >= total:
                break
            n += 1
        self.cdf[-1] = max(self.cdf[-1], 1.0)

    def draw(self, rng: np.random.Generator) -> int:
        return bisect.bisect_right(self.cdf, rng.random())


def poissonization_sample(t, rng: np.random.Generator, _table: _NegBinomialTable | None = None) -> tuple[int, list[int]]:
    """Draw n ~ NegBinomial(1/2, 1-t), then σ uniform in S_2n; return (n, [a_1, ..., a_n])."""
    t = Fraction(t)
    if not 0 < t < 1:
        raise CosetlabError("Poissonization needs 0 < t < 1")
    table = _table or _NegBinomialTable(t)
    n = table.draw(rng)
    if n == 0:
        return 0, []
    sigma = rng.permutation(2 * n) + 1
    lam = coset_partition(sigma)
    counts = [0] * n
    for part in lam:
        counts[part - 1] += 1
    return n, counts


def poissonization_samples(t, count: int, rng: np.random.Generator) -> list[tuple[int, list[int]]]:
    table = _NegBinomialTable(Fraction(t))
    return [poissonization_sample(t, rng, table) for _ in range(count)]


def mixture_part_law(t, part: int, n_max: int) -> dict[int, float]:
    """Law of a_part under the negative-binomial mixture, from exact Ewens(1/2) laws for n <= n_max."""
    t = Fraction(t)
    rational: dict[int, Fraction] = {}
    for n in range(n_max + 1):
        w = neg_binomial_weight(n, t)
        if n == 0:
            rational[0] = rational.get(0, 0) + w
            continue
        model = EwensModel(n, Fraction(1, 2))
        for lam in enumerate_partitions(n):
            a = lam.multiplicities().get(part, 0)
            rational[a] = rational.get(a, 0) + w * ewens_pmf(model, lam)
    scale = math.sqrt(1 - t)
    return {a: float(m) * scale for a, m in sorted(rational.items())}


def ewens_mixed_moment(model: EwensModel, exponents: Sequence[int]) -> Fraction:
    """E[a_1^{k_1} a_2^{k_2} ...] under the Ewens measure, by enumeration of partitions."""
    total = Fraction(0)
    for lam, p in ewens_distribution(model).items():
        mult = lam.multiplicities()
        term = Fraction(1)
        for i, k in enumerate(exponents, 1):
            term *= mult.get(i, 0) ** k
        total += p * term
    return total


def poisson_mixed_moment(rates: Sequence[Fraction], exponents: Sequence[int]) -> Fraction:
    """E[prod X_i^{k_i}] for independent Poisson(rates[i]) (Touchard polynomials)."""
    out = Fraction(1)
    for rate, k in zip(rates, exponents):
        out *= sum((_stirling2(k, j) * Fraction(rate) ** j for j in range(k + 1)), Fraction(0))
    return out


def _stirling2(k: int, j: int) -> int:
    if k == j:
        return 1
    if j == 0 or j > k:
        return 0
    return j * _stirling2(k - 1, j) + _stirling2(k - 1, j - 1)


def iter_partitions_with_weight(n: int) -> Iterator[tuple[Partition, int]]:
    """Yield (λ, |B_λ|) for every λ ⊢ n."""
    for lam in enumerate_partitions(n):
        yield lam, coset_size(lam)
