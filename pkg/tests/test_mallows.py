import itertools
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from cosetlab import mallows
from cosetlab.combinat import Permutation, descent_count, descent_set, enumerate_permutations, inversions
from cosetlab.errors import CosetlabError
from cosetlab.mallows import MallowsModel

small = st.tuples(st.integers(1, 6), st.integers(2, 5))


def _law(model):
    return {w: mallows.pmf(model, w) for w in enumerate_permutations(model.n)}


def test_pmf_example():
    assert mallows.pmf(MallowsModel(3, 2), (3, 2, 1)) == Fraction(8, 21)


def test_model_validation():
    with pytest.raises(CosetlabError):
        MallowsModel(3, 1)
    with pytest.raises(CosetlabError):
        mallows.pmf(MallowsModel(3, 2), (1, 2))


@given(small)
def test_pmf_sums_to_one(nq):
    assert sum(_law(MallowsModel(*nq)).values()) == 1


@given(small)
def test_inverse_and_reverse_complement_symmetry(nq):
    model = MallowsModel(*nq)
    n = model.n
    for w in enumerate_permutations(n):
        rc = Permutation(n + 1 - x for x in reversed(w))
        assert mallows.pmf(model, w.inverse()) == mallows.pmf(model, w) == mallows.pmf(model, rc)


def test_reversal_maps_law_to_inverse_parameter():
    # p(w^R) is proportional to q^{-I(w)}: reversal turns the q-law into the 1/q-law
    model = MallowsModel(4, 3)
    ratio = {mallows.pmf(model, w.reverse()) * Fraction(3) ** inversions(w) for w in enumerate_permutations(4)}
    assert len(ratio) == 1


@pytest.mark.parametrize("n,q", [(1, 2), (3, 2), (4, 3), (5, 2)])
def test_sampler_dp_matches_pmf(n, q):
    model = MallowsModel(n, q)
    assert mallows.sampler_distribution(model) == _law(model)


def test_placement_law_sums_to_one():
    for i in range(1, 9):
        for q in (2, 3, 7):
            assert sum(mallows.placement_probabilities(i, q)) == 1


def test_batch_sampler_goodness_of_fit():
    model = MallowsModel(4, 2)
    law = _law(model)
    rng = np.random.default_rng(11)
    words = mallows.sample_batch(model, 40_000, rng)
    counts = Counter(tuple(int(x) for x in row) for row in words)
    keys = list(law)
    res = stats.chisquare([counts[k] for k in keys], [float(law[k]) * 40_000 for k in keys])
    assert res.pvalue > 1e-3


def test_scalar_and_batch_samplers_agree_on_inversions():
    model = MallowsModel(6, 3)
    rng = np.random.default_rng(5)
    a = [inversions(mallows.sample(model, rng)) for _ in range(4000)]
    b = mallows.inversions_from_offsets(mallows.sample_offsets(model, 4000, rng))
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_offsets_rebuild_words_consistently():
    model = MallowsModel(7, 2)
    offsets = mallows.sample_offsets(model, 500, np.random.default_rng(3))
    words = mallows.words_from_offsets(offsets)
    assert [inversions(w) for w in words] == list(mallows.inversions_from_offsets(offsets))


@pytest.mark.parametrize("n,q", [(5, 2), (6, 3), (7, 2)])
def test_inversion_distribution_and_moments(n, q):
    model = MallowsModel(n, q)
    dist = mallows.inversion_distribution(model)
    brute = Counter()
    for w, p in _law(model).items():
        brute[inversions(w)] += p
    assert dist == [brute[k] for k in range(len(dist))]
    mean, var = mallows.inversion_moments(model)
    assert mean == sum(k * p for k, p in enumerate(dist))
    assert var == sum(k * k * p for k, p in enumerate(dist)) - mean**2


def test_clt_center_offset_is_bounded():
    for n in (20, 100, 200):
        model = MallowsModel(n, 2)
        mean, _ = mallows.inversion_moments(model)
        center, _ = mallows.inversion_clt_params(model)
        assert 0 < float(mean) - center < 2


class TestLargestCell:
    def test_constant_with_upper_limit_n(self):
        for n in range(1, 13):
            for q in (2, 3):
                mass = mallows.largest_cell_mass(MallowsModel(n, q))
                assert mass == mallows.largest_cell_constant(n, q) * (1 - Fraction(1, q)) ** (n - 1)

    def test_upper_limit_n_minus_2_fails(self):
        # the product stopped at n - 2 misses two factors once n >= 3
        misses = [
            (n, q)
            for n in range(3, 13)
            for q in (2, 3)
            if mallows.largest_cell_mass(MallowsModel(n, q))
            != mallows.largest_cell_constant(n, q, upper=n - 2) * (1 - Fraction(1, q)) ** (n - 1)
        ]
        assert len(misses) == 20


class TestDescents:
    @pytest.mark.parametrize("n,q", [(4, 2), (5, 3), (6, 2)])
    def test_determinant_is_exact_set_law(self, n, q):
        model = MallowsModel(n, q)
        exact = Counter()
        for w, p in _law(model).items():
            exact[descent_set(w)] += p
        for k in range(n):
            for s in itertools.combinations(range(1, n), k):
                assert mallows.descent_set_prob(model, s) == exact[frozenset(s)]

    @pytest.mark.parametrize("n,q", [(4, 3), (5, 2)])
    def test_subset_law_sums_supersets(self, n, q):
        model = MallowsModel(n, q)
        positions = range(1, n)
        for k in range(n):
            for s in itertools.combinations(positions, k):
                rest = [p for p in positions if p not in s]
                total = sum(
                    mallows.descent_set_prob(model, s + extra)
                    for j in range(len(rest) + 1)
                    for extra in itertools.combinations(rest, j)
                )
                assert mallows.descent_subset_prob(model, s) == total

    @pytest.mark.parametrize("n", range(2, 8))
    @pytest.mark.parametrize("q", [2, 3])
    def test_moments_by_enumeration(self, n, q):
        model = MallowsModel(n, q)
        law = _law(model)
        mean = sum(descent_count(w) * p for w, p in law.items())
        var = sum(descent_count(w) ** 2 * p for w, p in law.items()) - mean**2
        assert (mean, var) == mallows.descent_moments(model)
        assert mean == Fraction(q * (n - 1), q + 1)
        closed = Fraction(q * ((q * q - q + 1) * n - q * q + 3 * q - 1), (q + 1) ** 2 * (q * q + q + 1))
        assert var == closed

    def test_factored_variance_disagrees(self):
        pairs = [(n, q) for n in range(2, 9) for q in (2, 3)]
        agree = sum(
            mallows.factored_descent_variance(n, q) == mallows.descent_moments(MallowsModel(n, q))[1]
            for n, q in pairs
        )
        assert agree == 0

    def test_position_range_checked(self):
        with pytest.raises(CosetlabError):
            mallows.descent_set_prob(MallowsModel(4, 2), [4])


@pytest.mark.parametrize("n,q", [(4, 2), (5, 3)])
def test_first_and_last_letter_laws(n, q):
    model = MallowsModel(n, q)
    first, last = Counter(), Counter()
    for w, p in _law(model).items():
        first[w[0]] += p
        last[w[-1]] += p
    assert mallows.first_letter_law(model) == [first[j] for j in range(1, n + 1)]
    assert mallows.last_letter_law(model) == [last[j] for j in range(1, n + 1)]
