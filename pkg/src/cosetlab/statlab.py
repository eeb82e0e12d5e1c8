"""Goodness-of-fit, distances, reference distributions and seeded batch orchestration."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from collections.abc import Callable, Hashable, Iterable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from cosetlab.errors import CosetlabError


@dataclass
class Histogram:
    counts: Counter = field(default_factory=Counter)

    @classmethod
    def from_samples(cls, samples: Iterable[Hashable]) -> Histogram:
        return cls(Counter(samples))

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def update(self, samples: Iterable[Hashable]) -> None:
        self.counts.update(samples)

    def merge(self, other: Histogram) -> Histogram:
        return Histogram(self.counts + other.counts)

    def frequencies(self) -> dict[Hashable, float]:
        total = self.total
        return {k: v / total for k, v in self.counts.items()}

    def to_csv(self, path: str | Path, label_header: str = "label") -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([label_header, "count"])
            for label in sorted(self.counts, key=_sort_key):
                writer.writerow([_label_text(label), self.counts[label]])


def _sort_key(label):
    return (str(type(label)), label) if not isinstance(label, (int, float)) else ("", label)


def _label_text(label) -> str:
    if isinstance(label, tuple):
        return " ".join(map(str, label))
    return str(label)


# ---------------------------------------------------------------- special functions


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def poisson_pmf(k: int, beta: float) -> float:
    if beta < 0 or k < 0:
        raise CosetlabError("Poisson needs beta >= 0 and k >= 0")
    if beta == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(-beta + k * math.log(beta) - math.lgamma(k + 1))


def _gamma_p_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0 or x < 0:
        raise CosetlabError("gamma_q needs a > 0 and x >= 0")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def chi2_sf(x: float, k: float) -> float:
    """Upper tail of the chi-squared law with k degrees of freedom."""
    if x <= 0:
        return 1.0
    return gamma_q(k / 2.0, x / 2.0)


def chi2_pdf(x: float, k: float) -> float:
    if x < 0:
        return 0.0
    if x == 0:
        return 0.5 if k == 2 else (math.inf if k < 2 else 0.0)
    return math.exp((k / 2 - 1) * math.log(x) - x / 2 - (k / 2) * math.log(2) - math.lgamma(k / 2))


def neg_binomial_weight(n: int, t: Fraction) -> Fraction:
    """C(2n, n) t^n / 4^n: the negative binomial (1/2, 1-t) mass without its sqrt(1-t) factor."""
    t = Fraction(t)
    return Fraction(math.comb(2 * n, n)) * t**n / 4**n


def neg_binomial_pmf(n: int, t) -> float:
    """sqrt(1-t) C(2n,n) t^n / 4^n. Exact ratios come from :func:`neg_binomial_weight`."""
    t = Fraction(t)
    if not 0 < t < 1:
        raise CosetlabError("negative binomial needs 0 < t < 1")
    return math.sqrt(1 - t) * float(neg_binomial_weight(n, t))


# ---------------------------------------------------------------- tests and distances


@dataclass(frozen=True)
class GofResult:
    statistic: float
    dof: int
    pvalue: float
    pooled_cells: int


def _pool(expected: list[float], observed: list[float], min_expected: float):
    # repeatedly merge the smallest-expectation cell into the next smallest
    cells = sorted(zip(expected, observed))
    while len(cells) > 1 and cells[0][0] < min_expected:
        (e0, o0), (e1, o1) = cells[0], cells[1]
        cells = sorted([(e0 + e1, o0 + o1)] + cells[2:])
    return cells


def chi2_gof(
    observed: Histogram | Mapping[Hashable, int],
    expected: Mapping[Hashable, Fraction | float],
    min_expected: float = 5.0,
) -> GofResult:
    """Pearson goodness of fit of counts against a pmf, pooling sparse cells."""
    counts = observed.counts if isinstance(observed, Histogram) else Counter(observed)
    total = sum(counts.values())
    if total == 0:
        raise CosetlabError("empty histogram")
    extra = [k for k in counts if k not in expected or expected[k] == 0]
    if extra:
        raise CosetlabError(f"observed labels with zero expected mass: {extra[:5]}")
    exp = [float(p) * total for p in expected.values()]
    obs = [float(counts.get(k, 0)) for k in expected]
    cells = _pool(exp, obs, min_expected)
    stat = sum((o - e) ** 2 / e for e, o in cells if e > 0)
    dof = max(len(cells) - 1, 1)
    return GofResult(stat, dof, chi2_sf(stat, dof), len(expected) - len(cells))


def tv_distance(h: Histogram | Mapping[Hashable, float], reference: Mapping[Hashable, float]) -> float:
    """Total variation between the normalized histogram (or a pmf) and a reference pmf."""
    if isinstance(h, Histogram):
        if h.total == 0:
            raise CosetlabError("empty histogram")
        emp = h.frequencies()
    else:
        emp = {k: float(v) for k, v in h.items()}
    keys = set(emp) | set(reference)
    return 0.5 * sum(abs(emp.get(k, 0.0) - float(reference.get(k, 0.0))) for k in keys)


def ks_statistic(samples: Sequence[float] | np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """sup_x |F_emp(x) - F(x)| for a continuous reference CDF (vectorized ``cdf``)."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise CosetlabError("KS statistic needs samples")
    f = np.asarray(cdf(x), dtype=float)
    m = x.size
    upper = np.arange(1, m + 1) / m - f
    lower = f - np.arange(0, m) / m
    return float(max(upper.max(), lower.max()))


_erfc = np.vectorize(math.erfc, otypes=[float])


def standard_normal_cdf(x: np.ndarray) -> np.ndarray:
    return 0.5 * _erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


# ---------------------------------------------------------------- orchestration


@dataclass
class ExperimentConfig:
    family: str
    params: dict
    samples: int
    seeds: list[int]
    output: str | None = None

    def __post_init__(self):
        if not self.seeds:
            raise CosetlabError("experiment needs a nonempty seed list")
        if self.samples <= 0:
            raise CosetlabError("experiment needs a positive sample count")

    @classmethod
    def from_json(cls, path: str | Path) -> ExperimentConfig:
        with open(path) as fh:
            return cls(**json.load(fh))


def spawn_generators(seed: int | Sequence[int], count: int) -> list[np.random.Generator]:
    """Independent streams, one per worker or shard, derived deterministically from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(child) for child in children]


def split_count(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def run_sharded(task: Callable, shard_args: Sequence[tuple], jobs: int = 1) -> list:
    """Run ``task(*args)`` for every shard and return results in shard order."""
    if jobs <= 1:
        return [task(*args) for args in shard_args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(task, *args) for args in shard_args]
        return [f.result() for f in futures]
