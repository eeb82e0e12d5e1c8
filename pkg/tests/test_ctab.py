import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from cosetlab import ctab
from cosetlab.acceptance import _margin_pairs
from cosetlab.combinat import Ordering, enumerate_permutations, inversions
from cosetlab.ctab import ContingencyTable, MarginSpec
from cosetlab.errors import CosetlabError, LimitExceeded

EXAMPLE = MarginSpec((3, 2), (2, 2, 1))


def _brute_tables(m):
    I, J = m.shape
    out = []
    ranges = [range(min(r, c) + 1) for r in m.rows for c in m.cols]
    for flat in itertools.product(*ranges):
        rows = [flat[i * J:(i + 1) * J] for i in range(I)]
        if tuple(map(sum, rows)) == m.rows and tuple(map(sum, zip(*rows))) == m.cols:
            out.append(tuple(map(tuple, rows)))
    return sorted(out)


class TestTypes:
    def test_margin_validation(self):
        with pytest.raises(CosetlabError):
            MarginSpec((3, 2), (4,))
        with pytest.raises(CosetlabError):
            MarginSpec((3, 0), (3,))
        assert MarginSpec.parse("3,2", "2 2 1") == EXAMPLE

    def test_table_validation(self):
        with pytest.raises(CosetlabError):
            ContingencyTable(((2, 1, 0), (1, 1, 0)), MarginSpec((3, 2), (2, 2, 1)))
        with pytest.raises(CosetlabError):
            ContingencyTable.from_rows([[1, 2], [3]])

    def test_csv_round_trip(self):
        t = ctab.load_hair_eye()
        assert ContingencyTable.from_csv(t.to_csv()) == t
        assert t.n == 592 and t.margins.cols == (108, 286, 71, 127)


class TestCosetMap:
    def test_five_tables(self):
        tables = list(ctab.enumerate_tables(EXAMPLE))
        assert [ctab.coset_size(t) for t in tables] == [24, 12, 24, 48, 12]

    def test_worked_example(self):
        t = ctab.table_of_permutation((1, 3, 5, 2, 4), EXAMPLE)
        assert t.entries == ((1, 1, 1), (1, 1, 0))
        assert str(ctab.min_length_rep(t)) == "13524"
        assert ctab.table_of_permutation((1, 2, 3, 4, 5), EXAMPLE).entries == ((2, 1, 0), (0, 1, 1))

    @pytest.mark.parametrize(
        "rows,cols", [((3, 2), (2, 2, 1)), ((2, 2, 2), (3, 3)), ((4, 1, 1), (2, 2, 1, 1)), ((3, 3), (3, 3))]
    )
    def test_exhaustive_histogram(self, rows, cols):
        m = MarginSpec(rows, cols)
        hist = Counter(ctab.table_of_permutation(s, m) for s in enumerate_permutations(m.n))
        assert hist == {t: ctab.coset_size(t) for t in ctab.enumerate_tables(m)}
        assert all(ctab.fisher_yates_pmf(t) * math.factorial(m.n) == c for t, c in hist.items())

    @pytest.mark.parametrize("rows,cols", [((3, 2), (2, 2, 1)), ((2, 2, 1), (3, 2)), ((2, 2, 2), (2, 2, 2))])
    def test_min_length_rep_is_shortest(self, rows, cols):
        m = MarginSpec(rows, cols)
        best = {}
        for s in enumerate_permutations(m.n):
            t = ctab.table_of_permutation(s, m)
            best[t] = min(best.get(t, math.inf), inversions(s))
        for t, length in best.items():
            rep = ctab.min_length_rep(t)
            assert ctab.table_of_permutation(rep, m) == t and inversions(rep) == length


class TestPmf:
    @pytest.mark.parametrize("rows,cols", [((4, 4), (4, 4)), ((5, 3), (2, 6)), ((7, 2), (4, 5))])
    def test_two_by_two_is_hypergeometric(self, rows, cols):
        m = MarginSpec(rows, cols)
        hg = stats.hypergeom(m.n, rows[0], cols[0])
        for t in ctab.enumerate_tables(m):
            assert float(ctab.fisher_yates_pmf(t)) == pytest.approx(hg.pmf(t.entries[0][0]), rel=1e-12)

    def test_two_rows_is_multivariate_hypergeometric(self):
        m = MarginSpec((4, 3), (3, 2, 2))
        for t in ctab.enumerate_tables(m):
            ref = stats.multivariate_hypergeom.pmf(x=list(t.entries[0]), m=list(m.cols), n=4)
            assert float(ctab.fisher_yates_pmf(t)) == pytest.approx(ref, rel=1e-12)

    def test_sums_to_one(self):
        for m in [MarginSpec((3, 3, 2), (4, 2, 2)), MarginSpec((5, 4, 1), (3, 3, 2, 2))]:
            assert sum(ctab.fisher_yates_pmf(t) for t in ctab.enumerate_tables(m)) == 1


class TestSamplers:
    M = MarginSpec((3, 3, 2), (4, 4))

    def _check(self, counts, total):
        law = {t.entries: ctab.fisher_yates_pmf(t) for t in ctab.enumerate_tables(self.M)}
        keys = list(law)
        res = stats.chisquare([counts[k] for k in keys], [float(law[k]) * total for k in keys])
        assert sum(counts.values()) == total and set(counts) <= set(law)
        assert res.pvalue > 1e-3

    def test_urn(self):
        rng = np.random.default_rng(21)
        self._check(Counter(ctab.fy_sample(self.M, rng).entries for _ in range(8000)), 8000)

    def test_batch(self):
        tables = ctab.fy_sample_batch(self.M, 30_000, np.random.default_rng(22))
        assert (tables.sum(axis=2) == self.M.rows).all() and (tables.sum(axis=1) == self.M.cols).all()
        self._check(Counter(tuple(map(tuple, t.tolist())) for t in tables), 30_000)


class TestChi2:
    def test_hair_eye(self):
        t = ctab.load_hair_eye()
        ref = stats.chi2_contingency(t.to_array(), correction=False)
        assert ctab.chi2_stat(t) == pytest.approx(ref.statistic, rel=1e-12)
        assert abs(ctab.chi2_stat(t) - 138.28) < 0.01
        np.testing.assert_allclose(ctab.independence_table(t.margins), ref.expected_freq)

    def test_l1_bound(self):
        for m in [EXAMPLE, MarginSpec((4, 4), (4, 4)), MarginSpec((3, 3, 2), (4, 2, 2))]:
            for t in ctab.enumerate_tables(m):
                r = ctab.l1_report(t)
                assert r.holds and r.l1 <= r.bound + 1e-9
        rep = ctab.l1_report(ctab.load_hair_eye())
        assert rep.l1 < rep.bound < rep.linear_bound


class TestNormalApproximation:
    def test_covariance_structure(self):
        model = ctab.CovModel((0.5, 0.3, 0.2), (0.25, 0.75))
        cov = ctab.clt_covariance(model)
        assert cov.shape == (6, 6)
        np.testing.assert_allclose(cov.sum(axis=0), 0, atol=1e-15)
        eig = np.linalg.eigvalsh(cov)
        assert eig.min() > -1e-12 and np.sum(eig > 1e-12) == 2

    def test_cov_model_validation(self):
        with pytest.raises(CosetlabError):
            ctab.CovModel((0.5, 0.6), (1.0,))
        with pytest.raises(CosetlabError):
            ctab.CovModel((0.0, 1.0), (1.0,))

    def test_covariance_exact_small_case(self):
        # exact second moments under Fisher-Yates, scaled, approach the Kronecker formula
        m = MarginSpec((20, 20), (20, 20))
        tables = list(ctab.enumerate_tables(m))
        p = np.array([float(ctab.fisher_yates_pmf(t)) for t in tables])
        z = ctab.standardized_entries(np.array([t.to_array() for t in tables]), m)
        cov = (z * p[:, None]).T @ z
        theory = ctab.clt_covariance(ctab.CovModel.from_margins(m))
        # finite-population factor n/(n-1)
        np.testing.assert_allclose(cov, theory * m.n / (m.n - 1), rtol=1e-9, atol=1e-12)

    def test_coset_size_ratio_tends_to_one(self):
        errs = []
        for half in (15, 60, 240):
            m = MarginSpec((half, half), (half, half))
            t = ContingencyTable(((half // 2 + 1, half - half // 2 - 1), (half - half // 2 - 1, half // 2 + 1)), m)
            errs.append(abs(math.log(ctab.coset_size_ratio(t))))
        assert errs[0] > errs[1] > errs[2] and errs[2] < 0.01

    def test_coset_size_approx_three_by_three(self):
        # relative error shrinks like 1/n
        errs = []
        for h in (30, 120, 480):
            m = MarginSpec((h,) * 3, (h,) * 3)
            errs.append(ctab.coset_size_ratio(ContingencyTable(((h // 3,) * 3,) * 3, m)) - 1)
        assert 0 < errs[2] < errs[1] < errs[0] < 0.07
        assert errs[0] / errs[2] == pytest.approx(16, rel=0.1)


class TestMajorization:
    def test_example_chain(self):
        m = MarginSpec((4, 4), (4, 4))
        a, b, c = (ContingencyTable(e, m) for e in (((2, 2), (2, 2)), ((3, 1), (1, 3)), ((4, 0), (0, 4))))
        assert ctab.prec_compare(a, b) is Ordering.LESS and ctab.prec_compare(b, c) is Ordering.LESS
        assert ctab.fisher_yates_pmf(a) > ctab.fisher_yates_pmf(b) > ctab.fisher_yates_pmf(c)

    def test_different_margins_rejected(self):
        with pytest.raises(CosetlabError):
            ctab.prec_compare(ctab.load_hair_eye(), next(ctab.enumerate_tables(EXAMPLE)))

    def test_schur_on_all_pairs(self):
        m = MarginSpec((3, 2, 2), (3, 2, 2))
        tables = list(ctab.enumerate_tables(m))
        assert all(ctab.schur_check(a, b) for a, b in itertools.combinations(tables, 2))


class TestEnumeration:
    @pytest.mark.parametrize("rows,cols", [((3, 2), (2, 2, 1)), ((2, 2, 2), (3, 2, 1)), ((3, 3), (2, 2, 2))])
    def test_against_brute_force(self, rows, cols):
        m = MarginSpec(rows, cols)
        assert sorted(t.entries for t in ctab.enumerate_tables(m)) == _brute_tables(m)

    def test_cap(self):
        with pytest.raises(LimitExceeded):
            ctab.count_tables(MarginSpec((5,) * 4, (5,) * 4), cap=100)

    def test_entry_multisets_cover_every_table(self):
        pairs = 0
        for m in _margin_pairs(7):
            full = {tuple(sorted(t.flat())) for t in ctab.enumerate_tables(m)}
            reps = ctab.entry_multisets(m)
            assert set(reps) == full
            assert all(tuple(sorted(t.flat())) == k for k, t in reps.items())
            pairs += 1
        assert pairs > 100


class TestZeros:
    def test_exact_mean_against_enumeration(self):
        m = MarginSpec((3, 3, 3), (4, 3, 2))
        direct = sum(ctab.fisher_yates_pmf(t) * t.zeros() for t in ctab.enumerate_tables(m))
        assert ctab.zeros_exact_mean(list(m.rows), list(m.cols)) == pytest.approx(float(direct), rel=1e-12)

    def test_figure_parameters(self):
        rows, cols = [110] * 50, [275] * 20
        assert ctab.zeros_beta(rows, cols) == pytest.approx(1000 * 0.95**110)
        assert ctab.zeros_beta(rows, cols) == pytest.approx(3.5448, abs=1e-4)
        assert ctab.zeros_exact_mean(rows, cols) == pytest.approx(3.3445, abs=1e-4)

    def test_sample_mean_matches_exact_finite_mean(self):
        res = ctab.zeros_experiment(110, 275, 20_000, 99, I=50, J=20)
        counts = res.histogram.counts
        var = sum(v * (k - res.mean) ** 2 for k, v in counts.items()) / (res.samples - 1)
        assert abs(res.mean - res.exact_mean) < 4 * math.sqrt(var / res.samples)
        assert res.tv < 0.05

    def test_reproducible_and_job_independent(self):
        a = ctab.zeros_experiment(11, 11, 3000, 5, I=5, J=5)
        b = ctab.zeros_experiment(11, 11, 3000, 5, I=5, J=5, jobs=2)
        assert a.histogram.counts == b.histogram.counts

    def test_varying_rows_need_opt_in(self):
        with pytest.raises(CosetlabError):
            ctab.zeros_experiment([3, 4], [7], 10, 1)
        ctab.zeros_experiment([3, 4], [7], 10, 1, allow_varying_rows=True)

    def test_poisson_reference_normalized(self):
        ref = ctab.poisson_reference(3.54)
        assert abs(sum(ref.values()) - 1) < 1e-12
        assert ref[2] == pytest.approx(stats.poisson.pmf(2, 3.54), rel=1e-12)


def test_fisher_yates_pmf_is_fraction():
    t = next(ctab.enumerate_tables(EXAMPLE))
    assert ctab.fisher_yates_pmf(t) == Fraction(24, 120)
