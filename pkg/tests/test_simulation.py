import json
import time

import numpy as np
import pytest

from vclib import config as vclib_config
from vclib.common import ConfigError, QuadratureFailure, StudyFailure
from vclib.dataset.fixtures import lamb_eigenstructure
from vclib.inference import plausibility
from vclib.inference.plausibility import GridSpec
from vclib.model.reduction import reduce_model
from vclib.simulation import study
from vclib.simulation.generators import oneway_design, gen_oneway, gen_baseline
from vclib.simulation.study import SimConfig, StudyResult, RepRecord, run_study, run_grid, run_replication, \
    LAMB_FITTED_VARIANCES
from vclib.utils.random import make_rng

FAST_GRID = GridSpec(0., 0.999, 40)


class TestGenerators:
    def test_pattern_dimensions(self):
        X, Z, A = oneway_design((1, 1, 1, 1, 1, 10))
        assert X.shape == (15, 1) and Z.shape == (15, 6) and A.shape == (6, 6)
        np.testing.assert_array_equal(Z.sum(axis=0), [1, 1, 1, 1, 1, 10])

    @pytest.mark.parametrize('pattern', [(5,), (2, 0, 3), (2, 1.5)])
    def test_invalid_pattern(self, pattern):
        with pytest.raises(ConfigError):
            oneway_design(pattern)

    def test_deterministic(self):
        first = gen_oneway((2, 4, 4, 5), 1., 1., make_rng(3))
        second = gen_oneway((2, 4, 4, 5), 1., 1., make_rng(3))
        np.testing.assert_array_equal(first.y, second.y)

    def test_no_random_effect(self):
        model = gen_oneway((2, 3, 10), 0., 2., make_rng(4))
        assert model.n == 15
        reduction = reduce_model(model)
        assert np.all(reduction.S > 0)

    def test_baseline_chi_square_mean(self):
        rng = make_rng(5)
        lambdas, mults = np.array([4.55, 1., 0.]), np.array([1, 1, 10])
        draws = np.array([gen_baseline(lambdas, mults, 0., 2., rng) for _ in range(10000)]) / 2.
        band = 3. * np.sqrt(2. * mults / 10000.)
        assert np.all(np.abs(draws.mean(axis=0) - mults) < band)

    def test_baseline_moments(self):
        rng = make_rng(6)
        lambdas, mults = np.array([4.55, 1., 0.]), np.array([1, 1, 10])
        draws = np.array([gen_baseline(lambdas, mults, 1., 1., rng) for _ in range(10000)])
        expected = (lambdas + 1.) * mults
        band = 3. * (lambdas + 1.) * np.sqrt(2. * mults / 10000.)
        assert np.all(np.abs(draws.mean(axis=0) - expected) < band)


class TestSimConfig:
    def test_needs_one_design(self):
        with pytest.raises(ConfigError):
            SimConfig(1., 1.)
        with pytest.raises(ConfigError):
            SimConfig(1., 1., pattern=(2, 3), lambdas=(1., 0.), mults=(1, 3))

    @pytest.mark.parametrize('kwargs', [dict(reps=0), dict(alpha=1.), dict(parallelism=0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            SimConfig(1., 1., pattern=(2, 4, 4, 5), **kwargs)

    def test_variances(self):
        with pytest.raises(ConfigError):
            SimConfig(1., 0., pattern=(2, 4, 4, 5))
        with pytest.raises(ConfigError):
            SimConfig(-1., 1., pattern=(2, 4, 4, 5))

    def test_rho_above_grid(self):
        with pytest.raises(ConfigError):
            SimConfig(10., 0.1, pattern=(2, 4, 4, 5), grid_spec=GridSpec(0., 0.5, 10))

    def test_default_study_grid(self):
        config = SimConfig(1., 1., pattern=(2, 4, 4, 5))
        assert config.grid_spec.points == vclib_config['study_grid_points']
        assert config.grid_spec.rho_max == vclib_config['rho_max']

    def test_true_values(self):
        config = SimConfig(1., 3., pattern=(2, 4, 4, 5))
        assert config.rho_true == 0.25
        np.testing.assert_allclose(config.psi_true, 1. / 3.)
        assert 'parallelism' not in config.to_dict()


class TestStudyResult:
    def test_aggregates(self):
        config = SimConfig(1., 1., pattern=(2, 4, 4, 5), reps=4)
        records = [
            RepRecord(0, 0., 0.6, True, 0.4, False, 0.1, None),
            RepRecord(1, 0., 0.4, False, 0.02, False, 0.1, None),
            RepRecord(2, None, None, False, 0.01, False, 0.1, None),
            RepRecord(3, None, None, False, float('nan'), False, 0.1, 'QuadratureFailure: x'),
        ]
        result = StudyResult(config, records)
        assert result.num_failures == 1
        # the failed replication counts as a miss
        np.testing.assert_allclose(result.empirical_coverage, 1. / 4.)
        np.testing.assert_allclose(result.mean_length, (0.6 + 0.4 + 0.) / 3.)
        np.testing.assert_array_equal(result.pl_true, [0.4, 0.02, 0.01])
        assert 'runtime' not in result.to_dict()['records'][0]
        assert 'runtime' in result.to_dict(include_timing=True)['records'][0]


class TestRunStudy:
    def test_single_replication(self):
        result = run_study(SimConfig(1., 1., pattern=(2, 4, 4, 5), reps=1, seed=3, grid_spec=FAST_GRID))
        assert result.empirical_coverage in (0., 1.)
        assert result.mean_length >= 0.

    def test_replication_is_pure(self):
        config = SimConfig(1., 1., pattern=(2, 3, 10), reps=5, seed=9, grid_spec=FAST_GRID)
        first = run_replication(config, 2)
        second = run_replication(config, 2)
        assert first._replace(runtime=0.) == second._replace(runtime=0.)

    def test_parallelism_does_not_change_result(self):
        kwargs = dict(pattern=(2, 4, 4, 5), reps=6, seed=11, grid_spec=FAST_GRID)
        serial = run_study(SimConfig(0.5, 2., parallelism=1, **kwargs))
        parallel = run_study(SimConfig(0.5, 2., parallelism=2, **kwargs))
        assert json.dumps(serial.to_dict(), default=str) == json.dumps(parallel.to_dict(), default=str)

    def test_baseline_design(self):
        config = SimConfig(1., 1., lambdas=(4.55, 1., 0.), mults=(1, 1, 10), reps=3, seed=1, grid_spec=FAST_GRID)
        result = run_study(config)
        assert result.num_failures == 0
        assert len(result.records) == 3

    def test_replication_evaluation_budget(self, monkeypatch):
        calls = []
        original = plausibility.pl_at

        def counting(reduction, rho, **kwargs):
            calls.append(rho)
            return original(reduction, rho, **kwargs)

        monkeypatch.setattr(plausibility, 'pl_at', counting)
        record = run_replication(SimConfig(1., 1., pattern=(2, 4, 4, 5), reps=1, seed=0), 0)
        assert record.error is None
        # one coarse scan plus at most two bisections
        assert len(calls) <= vclib_config['study_grid_points'] + 2 * 20

    def test_failure_budget(self, monkeypatch):
        def failing(*args, **kwargs):
            raise QuadratureFailure('budget exhausted')

        monkeypatch.setattr(study, 'interval', failing)
        with pytest.raises(StudyFailure):
            run_study(SimConfig(1., 1., pattern=(2, 4, 4, 5), reps=3, grid_spec=FAST_GRID))

    def test_run_grid(self):
        results = run_grid(patterns=((2, 3, 10),), variance_pairs=((1., 1.), (0.5, 2.)), reps=2, seed=4,
                           grid_spec=FAST_GRID)
        assert len(results) == 2
        assert results[1].config.sigma_a2 == 0.5

    @pytest.mark.slow
    @pytest.mark.parametrize('sigma_a2,sigma_e2', [(1., 1.), (0.5, 2.), (2., 0.5)])
    def test_coverage(self, sigma_a2, sigma_e2):
        config = SimConfig(sigma_a2, sigma_e2, pattern=(2, 4, 4, 5), reps=1000, seed=2024, parallelism=4)
        start = time.perf_counter()
        result = run_study(config)
        assert time.perf_counter() - start < 600.
        assert 0.93 <= result.empirical_coverage <= 0.97
        assert result.ks_uniform_pvalue > 0.01

    @pytest.mark.slow
    def test_pipeline_matches_baseline(self):
        raw = run_study(SimConfig(1., 1., pattern=(2, 4, 4, 5), reps=1000, seed=5, parallelism=4))
        reduction = reduce_model(gen_oneway((2, 4, 4, 5), 1., 1., make_rng(0)))
        baseline = run_study(SimConfig(1., 1., lambdas=reduction.lambdas, mults=reduction.mults, reps=1000, seed=6,
                                       parallelism=4))
        band = 2. * np.sqrt(2. * 0.95 * 0.05 / 1000.)
        assert abs(raw.empirical_coverage - baseline.empirical_coverage) < band

    @pytest.mark.slow
    def test_lamb_preset(self):
        lambdas, mults = lamb_eigenstructure()
        sigma_a2, sigma_e2 = LAMB_FITTED_VARIANCES
        config = SimConfig(sigma_a2, sigma_e2, lambdas=lambdas, mults=mults, reps=1000, seed=7, parallelism=4)
        result = run_study(config)
        assert 0.93 <= result.empirical_coverage <= 0.97
