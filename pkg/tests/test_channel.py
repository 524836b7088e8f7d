import math

import numpy as np
import pytest
from scipy import stats

from rmaccess.channel import (NetworkParams, analytic_interference_power, analytic_neighbors,
                              incell_gain_cdf, sample_incell_gain, sample_network, synthesize_rx)
from rmaccess.codec import SlotConfig, encode_slotted
from rmaccess.rm_core import PairMB, rm_sequence


class TestParams:
    @pytest.mark.parametrize("kw", [dict(alpha=2.0), dict(theta=0), dict(gamma=-1),
                                    dict(mode="disc"), dict(mode="poisson")])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            NetworkParams(**kw)

    def test_density(self):
        assert NetworkParams(n_devices=1000).density == 1000 / 250000
        assert NetworkParams("poisson", intensity=0.01).density == 0.01


class TestSampling:
    def test_gain_law_and_labels(self):
        d = sample_network(NetworkParams(n_devices=5000), 1)
        assert np.allclose(np.abs(d.h) ** 2, d.distance ** -4.0 * d.fade)
        assert np.array_equal(d.in_cell, np.abs(d.h) ** 2 > 1e-6)
        assert (np.abs(d.distance) <= 250 * math.sqrt(2)).all()

    def test_fade_mean(self):
        d = sample_network(NetworkParams(n_devices=10 ** 5), 2)
        assert abs(d.fade.mean() - 1) <= 0.02

    def test_phase_uniform(self):
        d = sample_network(NetworkParams(n_devices=20000), 3)
        ph = (np.angle(d.h) % (2 * np.pi)) / (2 * np.pi)
        assert stats.kstest(ph, "uniform").pvalue > 0.01

    def test_huge_threshold(self):
        d = sample_network(NetworkParams(n_devices=1000, theta=1e9), 4)
        assert d.k_star == 0

    def test_seeded(self):
        p = NetworkParams(n_devices=300)
        a, b = sample_network(p, 9), sample_network(p, 9)
        assert np.array_equal(a.h, b.h) and np.array_equal(a.in_cell, b.in_cell)

    def test_poisson_count(self):
        p = NetworkParams("poisson", intensity=0.004, side=500)
        n = [len(sample_network(p, s)) for s in range(200)]
        assert abs(np.mean(n) - 1000) < 3 * math.sqrt(1000 / 200)

    def test_incell_mean(self):
        p = NetworkParams(n_devices=1000)
        ks = [sample_network(p, s).k_star for s in range(400)]
        assert abs(np.mean(ks) - 11) <= 1.1

    def test_gain_mode(self):
        d = sample_network(NetworkParams("gain", 50), 5)
        assert d.k_star == 50 and (np.abs(d.h) > 1e-3).all()


class TestIncellGain:
    p = NetworkParams()

    def test_support(self):
        x = sample_incell_gain(self.p, 0, 10 ** 4)
        assert (x > math.sqrt(self.p.theta)).all()

    def test_ks(self):
        x = sample_incell_gain(self.p, 1, 10 ** 5)
        res = stats.kstest(x, lambda v: incell_gain_cdf(v, self.p))
        assert res.pvalue > 0.01

    def test_median(self):
        med = math.sqrt(self.p.theta) * 2 ** (self.p.alpha / 4)
        assert np.isclose(incell_gain_cdf(med, self.p), 0.5)
        x = sample_incell_gain(self.p, 2, 10 ** 5)
        assert abs(np.median(x) / med - 1) < 0.02


class TestClosedForms:
    def test_neighbors_value(self):
        assert abs(analytic_neighbors(NetworkParams(n_devices=1000)) - 11.1) < 0.05

    def test_neighbors_vanish(self):
        assert analytic_neighbors(NetworkParams("poisson", intensity=0.0)) == 0

    def test_interference_linear_in_gamma(self):
        a = analytic_interference_power(NetworkParams(gamma=1e6))
        b = analytic_interference_power(NetworkParams(gamma=2e6))
        assert np.isclose(b, 2 * a)
        assert analytic_interference_power(NetworkParams("poisson", intensity=0.0)) == 0

    def test_interference_matches_monte_carlo(self):
        p = NetworkParams(n_devices=1000)
        pw = []
        for s in range(2000):
            d = sample_network(p, s)
            pw.append(p.gamma * np.sum(np.abs(d.h[~d.in_cell]) ** 2))
        assert abs(np.mean(pw) / analytic_interference_power(p) - 1) < 0.05

    def test_neighbors_match_monte_carlo(self):
        p = NetworkParams("poisson", intensity=0.004, side=500)
        ks = np.array([sample_network(p, s).k_star for s in range(1000)])
        se = ks.std(ddof=1) / math.sqrt(ks.size)
        assert abs(ks.mean() - analytic_neighbors(p)) <= 3 * se + 0.2  # finite-square edge


class TestSynthesize:
    def test_empty_noiseless(self):
        y = synthesize_rx([], [], 1e6, noise_var=0, length=16)
        assert np.array_equal(y, np.zeros(16))

    def test_needs_length(self):
        with pytest.raises(ValueError):
            synthesize_rx([], [], 1.0)

    def test_single_noiseless(self):
        c = rm_sequence(PairMB.random(6, np.random.default_rng(0)))
        y = synthesize_rx([0.3 - 0.1j], [c], 100.0, noise_var=0)
        assert np.allclose(y, 10 * (0.3 - 0.1j) * c)

    def test_sparse_superposition(self):
        cfg = SlotConfig(8, 2)
        rng = np.random.default_rng(1)
        cws = [encode_slotted(rng.integers(0, 2, cfg.capacity), cfg) for _ in range(3)]
        h = [1, 2j, -0.5]
        y = synthesize_rx(h, cws, 4.0, noise_var=0)
        assert np.allclose(y, 2 * sum(hk * c.dense() for hk, c in zip(h, cws)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            synthesize_rx([1, 1], [np.ones(8), np.ones(16)], 1.0)
        with pytest.raises(ValueError):
            synthesize_rx([1], [np.ones(8), np.ones(8)], 1.0)

    def test_power_accounting(self):
        rng = np.random.default_rng(2)
        h = rng.standard_normal(4) * 0.01
        cs = [rm_sequence(PairMB.random(8, rng)) for _ in h]
        e = [np.vdot(y, y).real / 256 for y in
             (synthesize_rx(h, cs, 1e4, noise_seed=s) for s in range(1000))]
        want = np.vdot(synthesize_rx(h, cs, 1e4, noise_var=0),
                       synthesize_rx(h, cs, 1e4, noise_var=0)).real / 256 + 1
        assert abs(np.mean(e) / want - 1) < 0.03
        assert np.isclose(want - 1, 1e4 * np.sum(h ** 2), rtol=0.5)

    def test_noise_seeded(self):
        a = synthesize_rx([1], [np.ones(64)], 1.0, noise_seed=3)
        b = synthesize_rx([1], [np.ones(64)], 1.0, noise_seed=3)
        assert np.array_equal(a, b)
