"""Parabolic double cosets S_λ \\ S_n / S_μ as contingency tables.

Positions of σ are cut into consecutive row blocks of sizes λ_1, ..., λ_I and
values into column blocks of sizes μ_1, ..., μ_J; T_ij counts values of block j
sitting in position block i. A uniform σ induces the Fisher-Yates law on T.
Margins are compositions (any order of positive parts) so that data tables
such as observed cross-classifications can be used as given.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections import Counter
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from cosetlab.combinat import Ordering, Permutation, majorizes
from cosetlab.config import LIMITS, data_path
from cosetlab.errors import CosetlabError, LimitExceeded, SingularMatrix
from cosetlab.statlab import Histogram, poisson_pmf, run_sharded, spawn_generators, split_count, tv_distance


@dataclass(frozen=True)
class MarginSpec:
    rows: tuple[int, ...]
    cols: tuple[int, ...]

    def __post_init__(self):
        rows = tuple(int(x) for x in self.rows)
        cols = tuple(int(x) for x in self.cols)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        if not rows or not cols:
            raise CosetlabError("margins need at least one row and one column")
        if any(x <= 0 for x in rows + cols):
            raise CosetlabError(f"margins must be positive: rows {rows}, cols {cols}")
        if sum(rows) != sum(cols):
            raise CosetlabError(f"row sum {sum(rows)} differs from column sum {sum(cols)}")

    @classmethod
    def parse(cls, rows: str, cols: str) -> MarginSpec:
        def ints(text):
            return tuple(int(p) for p in text.replace(",", " ").split())

        return cls(ints(rows), ints(cols))

    @property
    def n(self) -> int:
        return sum(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)


@dataclass(frozen=True)
class ContingencyTable:
    entries: tuple[tuple[int, ...], ...]
    margins: MarginSpec = field(compare=False)

    def __post_init__(self):
        entries = tuple(tuple(int(x) for x in row) for row in self.entries)
        object.__setattr__(self, "entries", entries)
        I, J = self.margins.shape
        if len(entries) != I or any(len(row) != J for row in entries):
            raise CosetlabError(f"table shape does not match margins {I}x{J}")
        if any(x < 0 for row in entries for x in row):
            raise CosetlabError("table entries must be nonnegative")
        if tuple(map(sum, entries)) != self.margins.rows:
            raise CosetlabError(f"row sums {tuple(map(sum, entries))} differ from {self.margins.rows}")
        if tuple(map(sum, zip(*entries))) != self.margins.cols:
            raise CosetlabError(f"column sums {tuple(map(sum, zip(*entries)))} differ from {self.margins.cols}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> ContingencyTable:
        rows = [list(map(int, r)) for r in rows]
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise CosetlabError("table rows must be nonempty and of equal length")
        return cls(tuple(map(tuple, rows)), MarginSpec(tuple(map(sum, rows)), tuple(map(sum, zip(*rows)))))

    @classmethod
    def from_csv(cls, text: str) -> ContingencyTable:
        """Rows of integers; blank lines and lines starting with '#' are skipped."""
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        return cls.from_rows([[int(x) for x in row if x.strip()] for row in csv.reader(lines)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self.entries)
        return buf.getvalue()

    def to_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    @property
    def n(self) -> int:
        return self.margins.n

    def flat(self) -> list[int]:
        return [x for row in self.entries for x in row]

    def zeros(self) -> int:
        return sum(1 for x in self.flat() if x == 0)


def load_hair_eye() -> ContingencyTable:
    """The bundled 4x4 hair/eye colour cross-classification (n = 592)."""
    return ContingencyTable.from_csv(data_path("hair_eye.csv").read_text())


# ---------------------------------------------------------------- σ ↦ T


def _block_index(sizes: Sequence[int]) -> list[int]:
    # block label of each point 1..n, as a 0-based list
    return [b for b, size in enumerate(sizes) for _ in range(size)]


def table_of_permutation(sigma: Sequence[int], margins: MarginSpec) -> ContingencyTable:
    if len(sigma) != margins.n:
        raise CosetlabError(f"permutation of size {len(sigma)} does not match n = {margins.n}")
    row_of = _block_index(margins.rows)
    col_of = _block_index(margins.cols)
    I, J = margins.shape
    t = [[0] * J for _ in range(I)]
    for pos, val in enumerate(sigma):
        t[row_of[pos]][col_of[val - 1]] += 1
    return ContingencyTable(tuple(map(tuple, t)), margins)


def fisher_yates_pmf(table: ContingencyTable) -> Fraction:
    """(prod λ_i!)(prod μ_j!) / (n! prod T_ij!)."""
    m = table.margins
    num = math.prod(map(math.factorial, m.rows)) * math.prod(map(math.factorial, m.cols))
    den = math.factorial(m.n) * math.prod(math.factorial(x) for x in table.flat())
    return Fraction(num, den)


def coset_size(table: ContingencyTable) -> int:
    """Number of σ in S_n mapping to the table: n! times its Fisher-Yates mass."""
    m = table.margins
    size, rem = divmod(
        math.prod(map(math.factorial, m.rows)) * math.prod(map(math.factorial, m.cols)),
        math.prod(math.factorial(x) for x in table.flat()),
    )
    assert rem == 0
    return size


def min_length_rep(table: ContingencyTable) -> Permutation:
    """Shortest permutation in the coset of ``table``.

    Rows are filled in order; row i takes, for j = 1..J, the T_ij smallest
    unused values of column block j, written increasingly.
    """
    starts = list(itertools.accumulate((0,) + table.margins.cols[:-1]))
    used = [0] * len(starts)
    word = []
    for row in table.entries:
        for j, count in enumerate(row):
            base = starts[j] + used[j] + 1
            word.extend(range(base, base + count))
            used[j] += count
    return Permutation._trusted(word)


# ---------------------------------------------------------------- sampling


def fy_sample(margins: MarginSpec, rng: np.random.Generator) -> ContingencyTable:
    """Urn scheme: λ_i balls of colour i; column j draws μ_j balls without replacement."""
    urn = np.array(margins.rows, dtype=np.int64)
    cols = []
    for mu in margins.cols:
        draw = rng.multivariate_hypergeometric(urn, mu)
        urn -= draw
        cols.append(draw)
    entries = np.array(cols).T
    return ContingencyTable(tuple(map(tuple, entries.tolist())), margins)


def fy_sample_batch(margins: MarginSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` Fisher-Yates tables as an int array of shape (size, I, J).

    Each column draw is split into conditional hypergeometrics, one colour at
    a time, vectorized across the batch.
    """
    I, J = margins.shape
    out = np.zeros((size, I, J), dtype=np.int64)
    urn = np.tile(np.array(margins.rows, dtype=np.int64), (size, 1))
    for j, mu in enumerate(margins.cols):
        if j == J - 1:
            out[:, :, j] = urn
            break
        left = np.full(size, mu, dtype=np.int64)
        rest = urn.sum(axis=1)
        for i in range(I):
            rest = rest - urn[:, i]
            if i == I - 1:
                x = left
            else:
                x = rng.hypergeometric(urn[:, i], rest, left)
            out[:, i, j] = x
            left = left - x
        urn -= out[:, :, j]
    return out


# ---------------------------------------------------------------- χ² and independence


def independence_table(margins: MarginSpec) -> np.ndarray:
    """T*_ij = λ_i μ_j / n."""
    rows = np.array(margins.rows, dtype=float)
    cols = np.array(margins.cols, dtype=float)
    return np.outer(rows, cols) / margins.n


def chi2_stat(table: ContingencyTable) -> float:
    star = independence_table(table.margins)
    return float((((table.to_array() - star) ** 2) / star).sum())


def l1_to_independence(table: ContingencyTable) -> float:
    return float(np.abs(table.to_array() - independence_table(table.margins)).sum())


@dataclass(frozen=True)
class L1Report:
    l1: float
    chi2: float
    bound: float  # sqrt(n chi2), guaranteed by Cauchy-Schwarz
    linear_bound: float  # sqrt(n) * chi2
    holds: bool
    linear_holds: bool


def l1_report(table: ContingencyTable) -> L1Report:
    l1 = l1_to_independence(table)
    chi2 = chi2_stat(table)
    n = table.n
    bound = math.sqrt(n * chi2)
    linear = math.sqrt(n) * chi2
    eps = 1e-9 * max(1.0, l1)
    if l1 > bound + eps:
        raise AssertionError(f"L1 distance {l1} exceeds sqrt(n chi2) = {bound}")  # pragma: no cover
    return L1Report(l1, chi2, bound, linear, l1 <= bound + eps, l1 <= linear + eps)


# ---------------------------------------------------------------- normal approximation


@dataclass(frozen=True)
class CovModel:
    alpha: tuple[float, ...]
    beta: tuple[float, ...]

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = tuple(float(x) for x in getattr(self, name))
            object.__setattr__(self, name, v)
            if not v or any(not 0 < x <= 1 for x in v):
                raise CosetlabError(f"{name} entries must lie in (0, 1)")
            if abs(sum(v) - 1.0) > 1e-9:
                raise CosetlabError(f"{name} must sum to 1, got {sum(v)}")

    @classmethod
    def from_margins(cls, margins: MarginSpec) -> CovModel:
        n = margins.n
        return cls(tuple(x / n for x in margins.rows), tuple(x / n for x in margins.cols))


def _multinomial_cov(p: np.ndarray) -> np.ndarray:
    return np.diag(p) - np.outer(p, p)


def clt_covariance(model: CovModel) -> np.ndarray:
    """(Diag(α) - αα^T) ⊗ (Diag(β) - ββ^T), indexed by (i, j) ↦ i*J + j."""
    return np.kron(_multinomial_cov(np.array(model.alpha)), _multinomial_cov(np.array(model.beta)))


def standardized_entries(tables: np.ndarray, margins: MarginSpec) -> np.ndarray:
    """Z_ij = sqrt(n)(T_ij/n - λ_iμ_j/n^2), flattened row-major per table."""
    n = margins.n
    z = (np.asarray(tables, dtype=float) - independence_table(margins)) / math.sqrt(n)
    return z.reshape(len(z), -1)


def log_coset_size_approx(table: ContingencyTable, model: CovModel | None = None) -> float:
    """Log of the local-limit approximation n! φ(T) (2πn)^{-d/2}, d = (I-1)(J-1).

    φ(T) = exp(-Z Σ^{-1} Z^T / 2) / sqrt(det Σ) with Z, Σ reduced by dropping
    the last row and column.
    """
    m = table.margins
    model = model or CovModel.from_margins(m)
    I, J = m.shape
    if I < 2 or J < 2:
        return math.lgamma(m.n + 1) + math.log(float(fisher_yates_pmf(table)))
    a = np.array(model.alpha[:-1])
    b = np.array(model.beta[:-1])
    sigma = np.kron(_multinomial_cov(a), _multinomial_cov(b))
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        raise SingularMatrix("reduced covariance is singular")
    n = m.n
    star = n * np.outer(model.alpha, model.beta)
    z = ((table.to_array() - star) / math.sqrt(n))[:-1, :-1].ravel()
    quad = float(z @ np.linalg.solve(sigma, z))
    d = (I - 1) * (J - 1)
    return math.lgamma(n + 1) - quad / 2 - logdet / 2 - d / 2 * math.log(2 * math.pi * n)


def coset_size_approx(table: ContingencyTable, model: CovModel | None = None) -> float:
    """Asymptotic approximation to :func:`coset_size` (a float; may be inf for large n)."""
    log = log_coset_size_approx(table, model)
    return math.exp(log) if log < 709 else math.inf


def coset_size_ratio(table: ContingencyTable, model: CovModel | None = None) -> float:
    """approx / exact, computed in log space."""
    exact = coset_size(table)
    return math.exp(log_coset_size_approx(table, model) - math.log(exact))


# ---------------------------------------------------------------- majorization


def prec_compare(t1: ContingencyTable, t2: ContingencyTable) -> Ordering:
    if t1.margins != t2.margins:
        raise CosetlabError("tables must share their margins")
    return majorizes(t1.flat(), t2.flat())


def schur_check(t1: ContingencyTable, t2: ContingencyTable) -> bool:
    """True unless a comparable pair contradicts T ≺ T' ⇒ P(T) > P(T')."""
    order = prec_compare(t1, t2)
    p1, p2 = fisher_yates_pmf(t1), fisher_yates_pmf(t2)
    if order is Ordering.LESS:
        return p1 > p2
    if order is Ordering.GREATER:
        return p1 < p2
    if order is Ordering.EQUAL:
        return p1 == p2
    return True


# ---------------------------------------------------------------- enumeration


def _compositions(total: int, caps: Sequence[int]) -> Iterator[tuple[int, ...]]:
    # vectors x with sum total and 0 <= x_j <= caps[j]
    if len(caps) == 1:
        if total <= caps[0]:
            yield (total,)
        return
    room = sum(caps[1:])
    for x in range(min(total, caps[0]), max(0, total - room) - 1, -1):
        for rest in _compositions(total - x, caps[1:]):
            yield (x,) + rest


def enumerate_tables(margins: MarginSpec, cap: int | None = None) -> Iterator[ContingencyTable]:
    """All tables with the given margins, row by row with column-capacity pruning."""
    cap = LIMITS.max_tables if cap is None else cap
    rows = margins.rows
    produced = 0

    def rec(i: int, caps: tuple[int, ...], acc: list[tuple[int, ...]]):
        nonlocal produced
        if i == len(rows) - 1:
            produced += 1
            if produced > cap:
                raise LimitExceeded(f"more than {cap} tables for margins {rows} / {margins.cols}")
            yield ContingencyTable(tuple(acc) + (caps,), margins)
            return
        for row in _compositions(rows[i], caps):
            yield from rec(i + 1, tuple(c - x for c, x in zip(caps, row)), acc + [row])

    yield from rec(0, margins.cols, [])


def count_tables(margins: MarginSpec, cap: int | None = None) -> int:
    return sum(1 for _ in enumerate_tables(margins, cap))


# ---------------------------------------------------------------- zeros


def zeros_beta(rows: Sequence[int], cols: Sequence[int]) -> float:
    """sum_i sum_j (1 - c_j/n)^{r_i}; equal to I sum_j (1 - c_j/n)^{n/I} for constant rows."""
    n = sum(rows)
    return float(sum((1 - c / n) ** r for r in rows for c in cols))


def zeros_exact_mean(rows: Sequence[int], cols: Sequence[int]) -> float:
    """E[number of zeros] = sum_ij C(n - r_i, c_j) / C(n, c_j) under Fisher-Yates."""
    n = sum(rows)
    total = Fraction(0)
    for r in set(rows):
        for c in set(cols):
            total += rows.count(r) * cols.count(c) * Fraction(math.comb(n - r, c), math.comb(n, c))
    return float(total)


@dataclass
class ZerosResult:
    histogram: Histogram
    beta: float
    exact_mean: float
    mean: float
    tv: float
    samples: int

    def to_dict(self) -> dict:
        return {
            "histogram": {str(k): v for k, v in sorted(self.histogram.counts.items())},
            "beta": self.beta,
            "exact_mean": self.exact_mean,
            "mean": self.mean,
            "tv_to_poisson_beta": self.tv,
            "samples": self.samples,
        }


def _zeros_shard(margins: MarginSpec, count: int, rng: np.random.Generator, batch: int = 10_000) -> Counter:
    hist: Counter = Counter()
    while count > 0:
        size = min(batch, count)
        tables = fy_sample_batch(margins, size, rng)
        hist.update((tables == 0).sum(axis=(1, 2)).tolist())
        count -= size
    return hist


def poisson_reference(beta: float, tail: float = 1e-15) -> dict[int, float]:
    ref = {}
    k = 0
    while True:
        p = poisson_pmf(k, beta)
        ref[k] = p
        if k > beta and p < tail:
            return ref
        k += 1


def zeros_experiment(
    rows: int | Sequence[int],
    cols: int | Sequence[int],
    samples: int,
    seed: int | Sequence[int],
    I: int | None = None,
    J: int | None = None,
    shards: int = 4,
    jobs: int = 1,
    allow_varying_rows: bool = False,
) -> ZerosResult:
    """Histogram of zero counts in Fisher-Yates tables and its TV distance to Poisson(β).

    ``rows``/``cols`` are either full margin lists or a constant repeated
    ``I``/``J`` times. Varying row sums are outside the limit theorem's
    hypothesis and must be requested with ``allow_varying_rows``.
    """
    rows = [rows] * I if isinstance(rows, int) else list(rows)
    cols = [cols] * J if isinstance(cols, int) else list(cols)
    if (I is not None and len(rows) != I) or (J is not None and len(cols) != J):
        raise CosetlabError("margin lists do not match I and J")
    if len(set(rows)) > 1 and not allow_varying_rows:
        raise CosetlabError("row sums must be constant (pass allow_varying_rows to experiment anyway)")
    margins = MarginSpec(tuple(rows), tuple(cols))
    shards = max(1, min(shards, samples))
    rngs = spawn_generators(seed, shards)
    parts = run_sharded(_zeros_shard, [(margins, k, g) for k, g in zip(split_count(samples, shards), rngs)], jobs)
    hist = Histogram()
    for part in parts:
        hist.update(part)
    beta = zeros_beta(rows, cols)
    mean = sum(k * v for k, v in hist.counts.items()) / hist.total
    tv = tv_distance(hist, poisson_reference(beta))
    return ZerosResult(hist, beta, zeros_exact_mean(rows, cols), mean, tv, samples)


def entry_multisets(margins: MarginSpec) -> dict[tuple[int, ...], ContingencyTable]:
    """One representative table per distinct sorted entry multiset.

    The Fisher-Yates mass depends only on the entry multiset, which is
    unchanged by permuting rows of equal margin or columns of equal margin.
    The search therefore keeps the first row non-increasing across runs of
    equal column margins and the later rows non-increasing (lexicographically)
    across runs of equal row margins.
    """
    rows, cols = margins.rows, margins.cols
    tied_col = [j > 0 and cols[j] == cols[j - 1] for j in range(len(cols))]
    out: dict[tuple[int, ...], ContingencyTable] = {}

    def rec(i: int, caps: tuple[int, ...], acc: list[tuple[int, ...]]):
        last = i == len(rows) - 1
        for row in [caps] if last else _compositions(rows[i], caps):
            if i == 0 and any(t and row[j] > row[j - 1] for j, t in enumerate(tied_col)):
                continue
            if i > 1 and rows[i] == rows[i - 1] and row > acc[-1]:
                continue
            if last:
                key = tuple(sorted(x for r in acc + [row] for x in r))
                if key not in out:
                    out[key] = ContingencyTable(tuple(acc) + (row,), margins)
            else:
                rec(i + 1, tuple(c - x for c, x in zip(caps, row)), acc + [row])

    rec(0, cols, [])
    return out
