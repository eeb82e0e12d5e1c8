import itertools
from collections import Counter

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cosetlab import glnq, mallows
from cosetlab.combinat import enumerate_permutations, inversions
from cosetlab.errors import CosetlabError, SingularMatrix
from cosetlab.glnq import FqMatrix

PRIME_POWERS = [2, 3, 4, 5, 7, 8, 9, 16, 25, 27, 32, 49, 64]


@pytest.mark.parametrize("q", PRIME_POWERS)
def test_field_is_a_field(q):
    F = glnq.field(q)
    F.check_axioms()
    for a in range(1, q):
        assert F.mul(a, F.inv(a)) == 1
    # the multiplicative group is cyclic of order q - 1
    def order(g):
        x, k = g, 1
        while x != 1:
            x, k = F.mul(x, g), k + 1
        return k

    assert max(order(g) for g in range(1, q)) == q - 1


def test_characteristic():
    F = glnq.field(9)
    assert all(F.add(F.add(a, a), a) == 0 for a in range(9))


@pytest.mark.parametrize("q", [6, 10, 12, 1])
def test_non_prime_power_rejected(q):
    with pytest.raises(CosetlabError):
        glnq.field(q)


matrices = st.sampled_from([2, 3, 5]).flatmap(
    lambda q: st.integers(1, 4).flatmap(
        lambda n: st.lists(st.lists(st.integers(0, q - 1), min_size=n, max_size=n), min_size=n, max_size=n).map(
            lambda rows: FqMatrix.from_rows(rows, q)
        )
    )
)


@given(matrices)
def test_invertibility_against_integer_determinant(A):
    det = sympy.Matrix(A.to_list()).det() % A.q
    assert glnq.is_invertible(A) == (det != 0)
    if det != 0:
        assert A @ glnq.inverse(A) == FqMatrix.identity(A.n, A.q)
    else:
        with pytest.raises(SingularMatrix):
            glnq.bruhat_decompose(A)


@settings(max_examples=200)
@given(matrices, st.integers(0, 2**32 - 1))
def test_bruhat_factorization_and_borel_invariance(A, seed):
    if not glnq.is_invertible(A):
        return
    f = glnq.bruhat_decompose(A)
    assert f.product() == A
    assert f.b1.is_lower_triangular() and f.b2.is_lower_triangular()
    assert glnq.is_invertible(f.b1) and glnq.is_invertible(f.b2)
    rng = np.random.default_rng(seed)
    b, c = glnq.random_borel(A.n, A.q, rng), glnq.random_borel(A.n, A.q, rng)
    assert glnq.bruhat_cell(b @ A @ c) == f.w


@pytest.mark.parametrize("n,q", [(1, 4), (2, 2), (2, 3), (2, 4), (3, 2)])
def test_enumeration_and_cell_sizes(n, q):
    elements = list(glnq.enumerate_gl(n, q))
    assert len(elements) == len(set(elements)) == glnq.group_order(n, q) == glnq.order_via_cells(n, q)
    cells = Counter(glnq.bruhat_cell(A) for A in elements)
    assert all(size == glnq.cell_size(n, q, w) for w, size in cells.items())
    assert len(cells) == len(list(itertools.permutations(range(n))))


def test_borel_order_matches_enumeration():
    lower = [A for A in glnq.enumerate_gl(3, 3) if A.is_lower_triangular()]
    assert len(lower) == glnq.borel_order(3, 3) == 8 * 27


def test_invertible_probability_exhaustive():
    total = 3**4
    count = sum(
        glnq.is_invertible(FqMatrix.from_rows([r[:2], r[2:]], 3)) for r in itertools.product(range(3), repeat=4)
    )
    assert count / total == pytest.approx(glnq.invertible_probability(2, 3))


def test_cell_sizes_sum_to_group():
    for n, q in [(4, 2), (3, 5), (5, 3)]:
        assert sum(glnq.cell_size(n, q, w) for w in enumerate_permutations(n)) == glnq.group_order(n, q)


def _key(A):
    return tuple(map(tuple, np.asarray(A).tolist()))


def test_pak_versus_rejection_two_sample():
    rng = np.random.default_rng(2024)
    pak = Counter(glnq.sample_uniform_pak(2, 3, rng).rows for _ in range(6000))
    rej = Counter(glnq.sample_uniform_rejection(2, 3, rng)[0].rows for _ in range(6000))
    keys = sorted(set(pak) | set(rej))
    assert len(keys) == 48
    res = stats.chi2_contingency(np.array([[pak[k] for k in keys], [rej[k] for k in keys]]))
    assert res.pvalue > 1e-3


def test_pak_batch_uniform_on_gl2_f5():
    rng = np.random.default_rng(9)
    draws = glnq.sample_uniform_pak_batch(2, 5, 48_000, rng)
    counts = Counter(_key(a) for a in draws)
    assert len(counts) == glnq.group_order(2, 5)
    assert stats.chisquare(list(counts.values())).pvalue > 1e-3


def test_pak_batch_same_cells_as_mallows():
    rng = np.random.default_rng(1)
    draws = glnq.sample_uniform_pak_batch(3, 2, 5000, rng)
    cells = Counter(glnq.bruhat_cell(FqMatrix.from_rows(a, 2)) for a in draws)
    model = mallows.MallowsModel(3, 2)
    law = {w: float(mallows.pmf(model, w)) * 5000 for w in cells}
    assert stats.chisquare(list(cells.values()), list(law.values())).pvalue > 1e-3


def test_rejection_attempts_mean():
    rng = np.random.default_rng(4)
    attempts = [glnq.sample_uniform_rejection(3, 2, rng)[1] for _ in range(4000)]
    assert np.mean(attempts) == pytest.approx(1 / glnq.invertible_probability(3, 2), rel=0.06)


def test_pak_batch_rejects_prime_power():
    with pytest.raises(CosetlabError):
        glnq.sample_uniform_pak_batch(2, 4, 10, np.random.default_rng(0))


def test_pivot_swaps_of_permutation_matrices():
    # elimination of P(w) sorts rows; identity needs none, a transposition needs one
    assert glnq.pivot_swaps(FqMatrix.permutation((1, 2, 3), 2)) == 0
    assert glnq.pivot_swaps(FqMatrix.permutation((2, 1, 3), 2)) == 1
    w = (3, 1, 2)
    assert glnq.bruhat_cell(FqMatrix.permutation(w, 3)) == w
    assert inversions(w) == 2
