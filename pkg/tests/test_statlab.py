import csv
import json
import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from cosetlab import statlab
from cosetlab.config import thresholds
from cosetlab.errors import CosetlabError
from cosetlab.statlab import ExperimentConfig, Histogram


class TestSpecialFunctions:
    @pytest.mark.parametrize("k", [1, 2, 3, 9, 30, 167])
    def test_chi2_sf(self, k):
        for x in np.linspace(0.01, 4 * k + 20, 60):
            assert statlab.chi2_sf(x, k) == pytest.approx(stats.chi2.sf(x, k), rel=1e-9, abs=1e-300)

    @pytest.mark.parametrize("a", [0.5, 1.0, 4.5, 50.0])
    def test_gamma_q_switchover(self, a):
        for x in (0.1, a * 0.99, a, a * 1.01, 3 * a + 5):
            assert statlab.gamma_q(a, x) == pytest.approx(special.gammaincc(a, x), rel=1e-10)

    @pytest.mark.parametrize("k", [1, 3, 4, 10])
    def test_chi2_density_moments(self, k):
        m0 = integrate.quad(lambda x: statlab.chi2_pdf(x, k), 0, np.inf)[0]
        m1 = integrate.quad(lambda x: x * statlab.chi2_pdf(x, k), 0, np.inf)[0]
        m2 = integrate.quad(lambda x: x * x * statlab.chi2_pdf(x, k), 0, np.inf)[0]
        assert m0 == pytest.approx(1, rel=1e-8)
        assert m1 == pytest.approx(k, rel=1e-8)
        assert m2 - m1**2 == pytest.approx(2 * k, rel=1e-7)

    def test_normal(self):
        assert statlab.normal_cdf(0) == 0.5
        xs = np.linspace(-6, 6, 41)
        np.testing.assert_allclose(statlab.standard_normal_cdf(xs), stats.norm.cdf(xs), rtol=1e-12, atol=1e-15)
        assert statlab.normal_cdf(1.3) == pytest.approx(stats.norm.cdf(1.3), rel=1e-12)

    def test_poisson(self):
        assert statlab.poisson_pmf(0, 3.54) == pytest.approx(math.exp(-3.54), rel=1e-15)
        for k in range(30):
            assert statlab.poisson_pmf(k, 3.54) == pytest.approx(stats.poisson.pmf(k, 3.54), rel=1e-12)

    def test_negative_binomial(self):
        t = 0.5
        assert abs(sum(statlab.neg_binomial_pmf(n, t) for n in range(61)) - 1) < 1e-12
        # scipy parametrization: r = 1/2 successes with success probability 1 - t
        for n in range(10):
            assert statlab.neg_binomial_pmf(n, t) == pytest.approx(stats.nbinom.pmf(n, 0.5, 1 - t), rel=1e-12)


class TestGof:
    def test_proportional_counts(self):
        res = statlab.chi2_gof({"a": 20, "b": 30, "c": 50}, {"a": 0.2, "b": 0.3, "c": 0.5})
        assert res.statistic == 0 and res.pvalue == 1

    def test_against_scipy(self):
        obs = {i: c for i, c in enumerate([18, 22, 25, 15, 20, 30])}
        res = statlab.chi2_gof(obs, {i: 1 / 6 for i in range(6)})
        ref = stats.chisquare(list(obs.values()))
        assert res.statistic == pytest.approx(ref.statistic) and res.pvalue == pytest.approx(ref.pvalue)

    def test_pooling(self):
        expected = {0: 0.5, 1: 0.45, 2: 0.03, 3: 0.02}
        res = statlab.chi2_gof({0: 50, 1: 45, 2: 3, 3: 2}, expected)
        assert res.pooled_cells == 1 and res.dof == 2

    def test_errors(self):
        with pytest.raises(CosetlabError):
            statlab.chi2_gof({}, {"a": 1.0})
        with pytest.raises(CosetlabError):
            statlab.chi2_gof({"z": 3}, {"a": 1.0})

    def test_pvalues_uniform_under_null(self):
        rng = np.random.default_rng(314)
        die = {face: 1 / 6 for face in range(1, 7)}
        pvalues = []
        for _ in range(200):
            rolls = rng.integers(1, 7, size=600)
            pvalues.append(statlab.chi2_gof(Histogram.from_samples(rolls.tolist()), die).pvalue)
        ks = statlab.ks_statistic(pvalues, lambda x: np.clip(x, 0, 1))
        assert ks == pytest.approx(stats.kstest(pvalues, "uniform").statistic)
        assert ks < thresholds()["pvalue_uniformity_max_ks"]


class TestDistances:
    def test_tv_trivial(self):
        assert statlab.tv_distance({"a": 0.5, "b": 0.5}, {"a": 0.5, "b": 0.5}) == 0
        assert statlab.tv_distance({"a": 1.0}, {"b": 1.0}) == 1

    def test_tv_empty(self):
        with pytest.raises(CosetlabError):
            statlab.tv_distance(Histogram(), {"a": 1.0})

    def test_poisson_calibration(self):
        rng = np.random.default_rng(7)
        hist = Histogram.from_samples(rng.poisson(3.54, size=50_000).tolist())
        ref = {k: statlab.poisson_pmf(k, 3.54) for k in range(40)}
        assert statlab.tv_distance(hist, ref) < 0.02

    def test_ks_against_scipy(self):
        x = np.random.default_rng(3).normal(size=500)
        ours = statlab.ks_statistic(x, statlab.standard_normal_cdf)
        assert ours == pytest.approx(stats.kstest(x, "norm").statistic, rel=1e-10)


class TestOrchestration:
    def test_histogram(self, tmp_path):
        h = Histogram.from_samples([3, 1, 3, 2]).merge(Histogram.from_samples([1]))
        assert h.total == 5 and h.frequencies()[3] == 0.4
        path = tmp_path / "h.csv"
        h.to_csv(path, "zeros")
        rows = list(csv.reader(path.open()))
        assert rows == [["zeros", "count"], ["1", "2"], ["2", "1"], ["3", "2"]]

    def test_config(self, tmp_path):
        path = tmp_path / "exp.json"
        path.write_text(json.dumps({"family": "ctab", "params": {"I": 5}, "samples": 10, "seeds": [1, 2]}))
        assert ExperimentConfig.from_json(path).seeds == [1, 2]
        with pytest.raises(CosetlabError):
            ExperimentConfig("ctab", {}, 10, [])
        with pytest.raises(CosetlabError):
            ExperimentConfig("ctab", {}, 0, [1])

    def test_streams_are_deterministic(self):
        a = [g.random() for g in statlab.spawn_generators(5, 3)]
        b = [g.random() for g in statlab.spawn_generators(5, 3)]
        assert a == b and len(set(a)) == 3

    def test_split_count(self):
        assert statlab.split_count(10, 4) == [3, 3, 2, 2]

    def test_run_sharded_order(self):
        args = [(i,) for i in range(5)]
        assert statlab.run_sharded(abs, args, jobs=2) == statlab.run_sharded(abs, args) == list(range(5))


def test_thresholds_present():
    th = thresholds()
    for key in ("gof_min_pvalue", "inversion_clt_max_ks", "zeros_mean_abs_tol", "zeros_max_tv", "hair_eye_chi2_abs_tol"):
        assert key in th
