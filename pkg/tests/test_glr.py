import math

import numpy as np
import pytest

from belieflik.glr import (
    Dataset,
    DatasetError,
    FitConfig,
    FitResult,
    classical_fit,
    classical_loglik,
    fit,
    loglik_gradients,
    lower_loglik,
    predict,
    synthetic_dataset,
    trial_belief,
    upper_loglik,
)

from oracles import grid_argmax

LOGIT_06 = math.log(0.6 / 0.4)


@pytest.fixture
def six_of_ten():
    return Dataset.from_rows([(0.0, 1)] * 6 + [(0.0, 0)] * 4)


@pytest.fixture
def synth():
    return synthetic_dataset(200, -1.0, 2.0, seed=11)


def central_diff(f, beta, h=1e-6):
    out = np.zeros(3)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        out[j] = (f(beta + e) - f(beta - e)) / (2 * h)
    return out


class TestDataset:
    def test_needs_two_observed(self):
        with pytest.raises(DatasetError):
            Dataset.from_rows([(0.0, 1), (1.0, None)])

    def test_bad_outcome(self):
        with pytest.raises(DatasetError):
            Dataset.from_rows([(0.0, 1), (1.0, 2)])

    def test_non_finite_x(self):
        with pytest.raises(DatasetError):
            Dataset.from_rows([(math.inf, 1), (1.0, 0)])

    def test_csv_round_trip(self, tmp_path):
        d = Dataset.from_rows([(0.5, 1), (-1.25, 0), (2.0, None)])
        path = tmp_path / "d.csv"
        d.to_csv(path)
        assert path.read_text().splitlines()[0] == "x,y"
        back = Dataset.from_csv(path)
        np.testing.assert_array_equal(back.x, d.x)
        np.testing.assert_array_equal(back.y, d.y)
        assert back.n_missing == 1

    def test_csv_errors(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,y\n1,2\n0,1\n")
        with pytest.raises(DatasetError):
            Dataset.from_csv(p)
        p.write_text("a,b\n1,1\n")
        with pytest.raises(DatasetError):
            Dataset.from_csv(p)


class TestObjectives:
    DATA = Dataset.from_rows([(1.0, 1), (2.0, 0)])

    def test_lower_substitution(self):
        assert lower_loglik([0, 0, 0.5], self.DATA) == pytest.approx(math.log(0.5) + math.log(0.25), abs=1e-15)

    def test_upper_substitution(self):
        assert upper_loglik([0, 0, 0.5], self.DATA) == pytest.approx(math.log(0.75) + math.log(0.5), abs=1e-15)

    def test_lower_minus_infinity(self):
        assert lower_loglik([0, 0, 0.0], self.DATA) == -math.inf

    def test_all_missing_rows_contribute_zero(self):
        d = Dataset.from_rows([(1.0, 1), (2.0, 0), (3.0, None), (4.0, None)])
        for f in (lower_loglik, upper_loglik):
            assert f([0.3, -0.2, 0.7], d) == f([0.3, -0.2, 0.7], self.DATA)
        np.testing.assert_array_equal(loglik_gradients([0.3, -0.2, 0.7], d, "lower"),
                                      loglik_gradients([0.3, -0.2, 0.7], self.DATA, "lower"))

    def test_identity_at_beta2_one(self, synth, rng):
        for _ in range(50):
            b0, b1 = rng.uniform(-5, 5, size=2)
            c = classical_loglik([b0, b1], synth)
            assert lower_loglik([b0, b1, 1.0], synth) == pytest.approx(c, abs=1e-12, rel=0)
            assert upper_loglik([b0, b1, 1.0], synth) == pytest.approx(c, abs=1e-12, rel=0)

    def test_upper_vacuous_limit(self, synth):
        assert upper_loglik([-50.0, 0.0, 0.0], synth) == pytest.approx(0.0, abs=1e-15)


class TestGradients:
    def test_lower_reduces_to_score(self, synth):
        x, y = synth.observed_xy()
        beta = np.array([0.2, -0.7, 1.0])
        p = 1 / (1 + np.exp(-(beta[0] + beta[1] * x)))
        g = loglik_gradients(beta, synth, "lower")
        assert g[0] == pytest.approx(np.sum(y - p), abs=1e-10)
        assert g[1] == pytest.approx(np.sum((y - p) * x), abs=1e-10)

    def test_lower_beta2_term(self, synth):
        _, y = synth.observed_xy()
        g = loglik_gradients([0.1, 0.1, 0.4], synth, "lower")
        assert g[2] == pytest.approx(np.sum(1 - y) / 0.4, rel=1e-14)

    @pytest.mark.parametrize("which", ["lower", "upper"])
    def test_finite_differences(self, which, synth, rng):
        f = lower_loglik if which == "lower" else upper_loglik
        for _ in range(50):
            beta = np.array([rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.05, 0.95)])
            a = loglik_gradients(beta, synth, which)
            fd = central_diff(lambda b: f(b, synth), beta)
            rel = np.abs(a - fd) / np.maximum(np.abs(a), np.abs(fd))
            assert np.all(rel < 1e-5), (beta, a, fd)

    def test_empty_effective_dataset(self):
        d = Dataset.from_rows([(0.0, 1), (1.0, 1), (2.0, None)])
        g = loglik_gradients([0.0, 0.0, 1.0], d, "lower")
        # only successes: nothing depends on beta2 and the score is (1 - p) per row
        assert g[2] == 0.0


class TestClassicalFit:
    def test_intercept_only(self, six_of_ten):
        res = classical_fit(six_of_ten, slope=False)
        assert res.converged and not res.boundary_hit
        assert res.beta[0] == pytest.approx(LOGIT_06, abs=1e-9)

    def test_all_equal_outcomes(self):
        res = classical_fit(Dataset.from_rows([(0.0, 1), (1.0, 1), (2.0, 1)]))
        assert res.boundary_hit and not res.converged
        assert "separation" in res.message

    def test_linear_separation(self):
        d = Dataset.from_rows([(-2.0, 0), (-1.0, 0), (1.0, 1), (2.0, 1)])
        res = classical_fit(d)
        assert res.boundary_hit and not res.converged

    def test_recovers_generating_parameters(self, synth):
        res = classical_fit(synth)
        assert res.converged
        assert abs(res.beta[0] + 1.0) < 0.5 and abs(res.beta[1] - 2.0) < 0.5
        x, y = synth.observed_xy()
        assert np.linalg.norm(loglik_gradients(res.beta, synth, "lower")[:2]) < 1e-6


class TestFit:
    def test_lower_intercept_only_matches_simplex_grid(self, six_of_ten):
        (p, q), _ = grid_argmax(lambda p, q: (p**6 * q**4), 100)
        assert (p, q) == pytest.approx((0.6, 0.4))
        res = fit(six_of_ten, "lower", FitConfig(fix_beta1=0.0))
        assert res.converged
        assert res.beta[0] == pytest.approx(math.log(p / (1 - p)), abs=1e-5)
        assert res.beta[2] == pytest.approx(q / (1 - p), abs=1e-9)
        b = res.belief(0.0)
        assert (b.p, b.q) == pytest.approx((0.6, 0.4), abs=1e-5)
        assert "g0" in res.active_constraints

    def test_lower_fixed_beta2_matches_classical(self, synth):
        c = classical_fit(synth)
        res = fit(synth, "lower", FitConfig(fix_beta2=1.0))
        assert res.converged
        np.testing.assert_allclose(res.beta[:2], c.beta[:2], atol=1e-4)
        assert res.objective == pytest.approx(c.objective, abs=1e-8)
        assert res.kkt.stationarity < 1e-6

    def test_lower_free_beta2_goes_to_one(self, synth):
        res = fit(synth, "lower")
        assert res.beta[2] == 1.0
        assert res.kkt.multipliers["g0"] > 0
        assert res.kkt.max_slackness < 1e-6
        assert res.kkt.dual_feasible

    def test_upper_degenerates_to_vacuous(self, synth):
        res = fit(synth, "upper")
        assert res.boundary_hit
        assert res.beta[2] == pytest.approx(1e-8)
        assert abs(res.objective) < 1e-3
        assert res.kkt.max_slackness < 1e-6

    @pytest.mark.parametrize("which", ["lower", "upper"])
    def test_feasible_at_return(self, which, synth):
        res = fit(synth, which)
        for x in synth.x:
            b = res.belief(x)
            assert b.q >= 0 and 0 <= b.p + b.q <= 1 + 1e-15
            lo, hi = b.interval
            assert lo <= hi + 1e-15

    def test_non_convergence_is_reported(self, synth):
        res = fit(synth, "lower", FitConfig(max_iter=2, n_starts=1))
        assert not res.converged
        assert "no convergence" in res.message

    def test_missing_rows_counted(self):
        d = synthetic_dataset(60, 0.5, 1.0, seed=2, missing=0.2)
        res = fit(d, "lower", FitConfig(fix_beta2=1.0))
        assert res.n_missing == d.n_missing > 0

    def test_deterministic(self, synth):
        a, b = fit(synth, "upper"), fit(synth, "upper")
        assert a.to_json() == b.to_json()

    def test_json_round_trip(self, synth):
        res = fit(synth, "lower")
        back = FitResult.from_json(res.to_json())
        np.testing.assert_array_equal(back.beta, res.beta)
        assert back.to_json() == res.to_json()

    def test_bad_config(self):
        with pytest.raises(ValueError):
            FitConfig(tol=0)


class TestPredict:
    def test_bayesian_lower_model(self, six_of_ten):
        lower = fit(six_of_ten, "lower", FitConfig(fix_beta1=0.0))
        pred = predict(lower, None, 3.0)
        lo, hi = pred.lower.interval
        assert lo == pytest.approx(hi, abs=1e-12)

    def test_vacuous_upper_model(self, synth):
        upper = fit(synth, "upper")
        for x in (-2.0, 0.0, 2.0):
            lo, hi = predict(None, upper, x).upper.interval
            assert lo < 1e-3 and hi > 1 - 1e-3

    def test_substitution(self):
        b = trial_belief([0.4055, 0.0, 1.0], 17.0)
        assert b.p == pytest.approx(0.6, abs=1e-4)
        assert b.interval[0] == pytest.approx(b.interval[1], abs=1e-15)

    def test_union_interval(self, synth):
        lower, upper = fit(synth, "lower"), fit(synth, "upper")
        pred = predict(lower, upper, 0.3)
        lo, hi = pred.union_interval
        assert lo <= pred.lower.interval[0] and hi >= pred.upper.interval[1]

    def test_needs_a_model(self):
        with pytest.raises(ValueError):
            predict(None, None, 0.0)
