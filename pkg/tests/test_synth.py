import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qae_conformal.data import Dataset
from qae_conformal.errors import DomainError
from qae_conformal.models import fit
from qae_conformal.synth import (
    NOISE_LAWS,
    NoiseSpec,
    _split_draw,
    ScenarioSpec,
    derive_seed,
    generate,
    sample_noise,
    substream,
)


class TestNoise:
    def test_pareto_support(self):
        draws = sample_noise(NoiseSpec("pareto"), substream(1, 0), 10**5)
        assert draws.min() >= 1.0

    def test_pareto_mean(self):
        draws = sample_noise(NoiseSpec("pareto"), substream(2, 0), 10**6)
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - 2.0) <= 3 * se

    def test_pareto_ks(self):
        draws = np.sort(sample_noise(NoiseSpec("pareto"), substream(3, 0), 10**5))
        cdf = 1 - draws**-2.0
        n = draws.size
        ks = max(np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(n) / n))
        assert ks < 0.006

    def test_mix_normal_mean(self):
        draws = sample_noise(NoiseSpec("mix-normal"), substream(4, 0), 10**6)
        assert abs(draws.mean() - 0.1) <= 0.01

    def test_mix_pareto_has_negative_outliers(self):
        draws = sample_noise(NoiseSpec("mix-pareto"), substream(5, 0), 10**5)
        frac = np.mean(draws < -10)
        assert 0.045 < frac < 0.055

    @pytest.mark.parametrize("law", NOISE_LAWS)
    def test_scalar_draw(self, law):
        assert isinstance(sample_noise(NoiseSpec(law), substream(0, 0)), float)

    def test_analytic_means(self):
        assert NoiseSpec("pareto").mean == 2.0
        assert NoiseSpec("mix-pareto").mean == pytest.approx(0.95 * 2 - 0.05 * 20)
        assert NoiseSpec("pareto", pareto_shape=1.0).mean == math.inf

    def test_validation(self):
        with pytest.raises(DomainError):
            NoiseSpec("cauchy")
        with pytest.raises(DomainError):
            NoiseSpec(scale=-1)


class TestGenerate:
    def test_zero_noise_is_exact(self):
        d = generate(ScenarioSpec("linear-3d", NoiseSpec(scale=0.0), 50, 50, 50, seed=1))
        assert np.array_equal(d.y, d.X @ d.theta)
        assert np.all((0 <= d.theta) & (d.theta <= 1))

    def test_heteroscedastic_zero_at_origin(self):
        class ZeroCovariates:
            # Pareto noise uses random(); covariates use standard_normal()
            def __init__(self):
                self.rng = substream(2, 0)

            def random(self, n):
                return self.rng.random(n)

            def standard_normal(self, n):
                return np.zeros(n)

        spec = ScenarioSpec("heteroscedastic-1d", NoiseSpec("pareto"), 5, 5, 5, seed=2)
        X, y = _split_draw(spec, ZeroCovariates(), 5, None)
        assert np.all(X == 0) and np.all(y == 0)
        Xl, yl = generate(spec).learn
        assert np.all(yl - Xl[:, 0] >= np.abs(Xl[:, 0]) * (1 - 1e-12))  # Pareto noise >= 1

    def test_quadratic_shape(self):
        d = generate(ScenarioSpec("quadratic-nn", NoiseSpec(scale=0.0), 20, 20, 20, seed=3))
        assert np.array_equal(d.y, d.X[:, 0] ** 2)

    def test_least_squares_recovers_theta(self):
        d = generate(ScenarioSpec("linear-3d", NoiseSpec("normal"), 10**5, 1, 1, seed=4))
        m = fit(*d.learn)
        assert np.all(np.abs(m.theta[1:] - d.theta) < 0.02)

    def test_split_sizes_and_labels(self):
        d = generate(ScenarioSpec(n_lrn=7, n_cal=5, n_test=3, seed=0))
        assert [d.part(s)[1].size for s in ("learn", "cal", "test")] == [7, 5, 3]

    @given(st.integers(0, 2**63), st.sampled_from(["linear-3d", "heteroscedastic-1d", "quadratic-nn"]))
    def test_deterministic(self, seed, kind):
        spec = ScenarioSpec(kind, NoiseSpec("mix-pareto"), 20, 20, 20, seed=seed)
        a, b = generate(spec), generate(spec)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)

    def test_splits_use_independent_streams(self):
        small = generate(ScenarioSpec(n_lrn=50, n_cal=50, n_test=10, seed=9))
        large = generate(ScenarioSpec(n_lrn=50, n_cal=50, n_test=500, seed=9))
        assert np.array_equal(small.learn[1], large.learn[1])
        assert np.array_equal(small.cal[1], large.cal[1])

    def test_fixed_theta_across_repeats(self):
        a = generate(ScenarioSpec(seed=derive_seed(0, 0), theta_seed=0, n_lrn=5, n_cal=5, n_test=5))
        b = generate(ScenarioSpec(seed=derive_seed(0, 1), theta_seed=0, n_lrn=5, n_cal=5, n_test=5))
        c = generate(ScenarioSpec(seed=derive_seed(0, 1), n_lrn=5, n_cal=5, n_test=5))
        assert np.array_equal(a.theta, b.theta)
        assert not np.array_equal(a.theta, c.theta)
        assert not np.array_equal(a.y, b.y)

    def test_center_noise(self):
        spec = ScenarioSpec("heteroscedastic-1d", NoiseSpec("pareto"), 20000, 1, 1, seed=5, center_noise=True)
        X, y = generate(spec).learn
        resid = (y - X[:, 0]) / np.abs(X[:, 0])
        assert abs(np.median(resid) - (math.sqrt(2) - 2)) < 0.05

    def test_derive_seed_is_stable(self):
        assert derive_seed(0, 3) == derive_seed(0, 3)
        assert len({derive_seed(0, i) for i in range(100)}) == 100

    def test_validation(self):
        with pytest.raises(DomainError):
            ScenarioSpec("cubic")
        with pytest.raises(DomainError):
            ScenarioSpec(n_test=0)


class TestDatasetCsv:
    def test_round_trip(self, tmp_path):
        d = generate(ScenarioSpec(n_lrn=4, n_cal=3, n_test=2, seed=1))
        path = tmp_path / "d.csv"
        d.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x1,x2,x3,y,split"
        assert len(lines) == 10
        back = np.array([[float(v) for v in line.split(",")[:4]] for line in lines[1:]])
        assert np.array_equal(back[:, :3], d.X) and np.array_equal(back[:, 3], d.y)

    def test_validation(self):
        with pytest.raises(DomainError):
            Dataset(np.zeros((2, 1)), np.zeros(3), np.array(["learn", "cal"]))
