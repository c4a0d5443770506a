"""Predictor stages: ridge, box-constrained SVM dual, and the interleaved
weight/predictor learners, each checked against brute-force optimization."""

import numpy as np
import pytest

from helpers import (
    golden_section,
    krr_oracle,
    random_psd,
    refine_grid_2d,
    svm_box_grid_oracle,
)
from mklalign import (
    BankConfig,
    DataError,
    DimensionError,
    ExplicitFamily,
    OneStageConfig,
    Sample,
    build_bank,
    classify,
    combine,
    gaussian,
    gram,
    krr_fit,
    l1svm_learn,
    l2krr_learn,
    linear,
    matrix_of,
    onestage_learn,
    predict,
    svm_fit,
)
from mklalign.kernels import KernelBank
from mklalign.learners import _solve_spd


def labeled_sample(m=12, d=2, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.choice([-1.0, 1.0], size=m)
    X = rng.normal(size=(m, d)) + 0.9 * y[:, None]
    return Sample(X, y)


class TestKrr:
    def test_matches_dense_solve(self):
        rng = np.random.default_rng(1)
        for seed in range(5):
            rng = np.random.default_rng(seed)
            m = int(rng.integers(5, 20))
            K = random_psd(rng, m)
            y = rng.normal(size=m)
            lambda0 = float(rng.uniform(0.05, 2.0))
            model = krr_fit(K, y, lambda0=lambda0)
            expected = krr_oracle(K, y, lambda0 * m)
            assert np.allclose(model.alpha, expected, atol=1e-10)
            assert np.isclose(model.effective_lambda, lambda0 * m)

    def test_rejects_nonpositive_lambda(self):
        K = np.eye(4)
        y = np.ones(4)
        for lam in (0.0, -1.0):
            with pytest.raises(DataError):
                krr_fit(K, y, lambda0=lam)

    def test_predict_is_kernel_expansion(self):
        s = labeled_sample(seed=3)
        K = matrix_of(gram(gaussian(0.5), s))
        model = krr_fit(K, s.labels, lambda0=0.5)
        preds = predict(model, K)
        assert np.allclose(preds, K @ model.alpha)

    def test_predict_rejects_wrong_width(self):
        model = krr_fit(np.eye(4), np.ones(4))
        with pytest.raises(DimensionError):
            predict(model, np.zeros((2, 5)))

    def test_solve_spd_handles_spd_systems(self):
        rng = np.random.default_rng(8)
        A = random_psd(rng, 6) + 0.5 * np.eye(6)
        b = rng.normal(size=6)
        assert np.allclose(_solve_spd(A, b), np.linalg.solve(A, b), atol=1e-10)


class TestSvm:
    def test_matches_box_grid_oracle(self):
        # m = 4 keeps exhaustive search over the box viable
        rng = np.random.default_rng(5)
        X = rng.normal(size=(4, 2))
        y = np.array([1.0, -1.0, 1.0, -1.0])
        s = Sample(X, y)
        K = matrix_of(gram(gaussian(0.4), s))
        C = 0.5
        model = svm_fit(K, y, C=C, tol=1e-12)
        _, grid_obj = svm_box_grid_oracle(K, y, C, steps=26)
        assert model.objective >= grid_obj - 1e-9
        # the grid value is itself within resolution of the optimum
        assert model.objective - grid_obj < 0.1

    def test_kkt_box_conditions(self):
        s = labeled_sample(m=20, seed=9)
        K = matrix_of(gram(gaussian(0.6), s))
        C = 1.0
        model = svm_fit(K, s.labels, C=C, tol=1e-12)
        Q = s.labels[:, None] * K * s.labels[None, :]
        w = Q @ model.alpha
        for i in range(s.m):
            if model.alpha[i] <= 1e-10:
                assert w[i] >= 1.0 - 1e-8
            elif model.alpha[i] >= C - 1e-10:
                assert w[i] <= 1.0 + 1e-8
            else:
                assert abs(w[i] - 1.0) <= 1e-8

    def test_alpha_stays_in_box(self):
        s = labeled_sample(m=30, seed=11)
        K = matrix_of(gram(linear(1.0), s))
        model = svm_fit(K, s.labels, C=0.7)
        assert np.all(model.alpha >= -1e-15)
        assert np.all(model.alpha <= 0.7 + 1e-15)

    def test_rejects_bad_labels(self):
        with pytest.raises(DataError):
            svm_fit(np.eye(3), np.array([1.0, 0.0, -1.0]))

    def test_zero_c_gives_zero_model(self):
        s = labeled_sample(m=6, seed=12)
        K = matrix_of(gram(gaussian(0.5), s))
        model = svm_fit(K, s.labels, C=0.0)
        assert np.allclose(model.alpha, 0.0)

    def test_classify_maps_zero_to_positive(self):
        s = labeled_sample(m=6, seed=13)
        K = matrix_of(gram(gaussian(0.5), s))
        model = svm_fit(K, s.labels, C=0.0)  # all decision values are zero
        assert np.all(classify(model, K) == 1.0)

    def test_separable_data_classified_perfectly(self):
        rng = np.random.default_rng(14)
        y = np.resize([1.0, -1.0], 16)
        X = rng.normal(size=(16, 2)) * 0.2 + 3.0 * y[:, None]
        s = Sample(X, y)
        K = matrix_of(gram(gaussian(0.5), s))
        model = svm_fit(K, y, C=10.0)
        assert np.all(classify(model, K) == y)


def regression_bank(m=24, seed=0, p=2):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(m, 3))
    w = rng.normal(size=3)
    y = X @ w / np.linalg.norm(w) + 0.15 * rng.normal(size=m)
    y = y - y.mean()
    specs = (gaussian(0.5), linear(0.2), gaussian(2.0))[:p]
    sample = Sample(X, y)
    bank = build_bank(sample, BankConfig(family=ExplicitFamily(specs)))
    return bank, y


class TestOneStage:
    def test_single_kernel_matches_golden_section(self):
        bank, y = regression_bank(seed=21, p=1)
        K = bank.matrices()[0]
        cfg = OneStageConfig(gamma=1.0, gamma_prime=0.5, gamma_dprime=0.0, tol=1e-10)
        fit = onestage_learn(bank, y, cfg)
        from mklalign.alignment import alignment_system

        system = alignment_system(bank, y)
        a0 = float(system.a[0])
        m = K.shape[0]

        def f(mu):
            alpha = np.linalg.solve(mu * K + np.eye(m), y)
            return float(y @ alpha) - 1.0 * mu * a0 + 0.5 * mu * mu

        mu_star, f_star = golden_section(f, 0.0, 50.0, tol=1e-12)
        assert abs(fit.mu[0] - mu_star) <= 1e-4 * max(1.0, abs(mu_star))
        assert fit.objectives[-1] <= f_star + 1e-8

    def test_two_kernels_match_grid_refinement(self):
        bank, y = regression_bank(seed=22, p=2)
        mats = bank.matrices()
        cfg = OneStageConfig(gamma=1.0, gamma_prime=1.0, gamma_dprime=0.0, tol=1e-10)
        fit = onestage_learn(bank, y, cfg)
        from mklalign.alignment import alignment_system

        system = alignment_system(bank, y)
        m = mats[0].shape[0]

        def f(u, v):
            mu = np.array([u, v])
            alpha = np.linalg.solve(combine(mats, mu) + np.eye(m), y)
            return float(y @ alpha) - float(mu @ system.a) + float(mu @ mu)

        u, v, f_star = refine_grid_2d(f, 0.0, 20.0, 0.0, 20.0, n=21, rounds=6)
        assert fit.objectives[-1] <= f_star + 1e-6
        assert np.allclose(fit.mu, [u, v], atol=1e-3 * max(1.0, u, v))

    def test_objectives_monotone(self):
        bank, y = regression_bank(seed=23, p=3)
        fit = onestage_learn(bank, y, OneStageConfig())
        diffs = np.diff(fit.objectives)
        assert np.all(diffs <= 1e-12)

    def test_config_needs_some_penalty(self):
        with pytest.raises(DataError):
            OneStageConfig(gamma_prime=0.0, gamma_dprime=0.0)


class TestL2Krr:
    def test_matches_polar_grid_oracle(self):
        bank, y = regression_bank(seed=31, p=2)
        mats = bank.matrices()
        m = mats[0].shape[0]
        radius = 1.0
        lambda0 = 0.5
        fit = l2krr_learn(bank, y, lambda0=lambda0, radius=radius, tol=1e-10)

        def f(t, theta):
            mu = t * radius * np.array([np.cos(theta), np.sin(theta)])
            alpha = np.linalg.solve(combine(mats, mu) + lambda0 * m * np.eye(m), y)
            return float(y @ alpha)

        t, theta, f_star = refine_grid_2d(f, 0.0, 1.0, 0.0, np.pi / 2, n=31, rounds=6)
        assert fit.objectives[-1] <= f_star + 1e-8
        mu_star = t * radius * np.array([np.cos(theta), np.sin(theta)])
        assert np.allclose(fit.mu, mu_star, atol=2e-3)

    def test_solution_feasible(self):
        bank, y = regression_bank(seed=32, p=3)
        fit = l2krr_learn(bank, y, radius=0.7)
        assert np.all(fit.mu >= 0.0)
        assert np.linalg.norm(fit.mu) <= 0.7 + 1e-9

    def test_objectives_monotone(self):
        bank, y = regression_bank(seed=33, p=3)
        fit = l2krr_learn(bank, y, radius=1.0)
        assert np.all(np.diff(fit.objectives) <= 1e-12)

    def test_centered_ball_projection_respects_mu0(self):
        bank, y = regression_bank(seed=34, p=2)
        mu0 = np.array([0.3, 0.3])
        fit = l2krr_learn(bank, y, radius=0.2, mu0=mu0)
        assert np.linalg.norm(fit.mu - mu0) <= 0.2 + 1e-9


class TestL1Svm:
    def test_matches_triangle_grid_oracle(self):
        s = labeled_sample(m=16, seed=41)
        bank = build_bank(
            s, BankConfig(family=ExplicitFamily((gaussian(0.5), linear(1.0))))
        )
        mats = bank.matrices()
        C, radius = 1.0, 1.0
        fit = l1svm_learn(bank, s.labels, C=C, radius=radius, tol=1e-8, svm_tol=1e-12)

        def f(scale, frac):
            mu = scale * radius * np.array([frac, 1.0 - frac])
            model = svm_fit(combine(mats, mu), s.labels, C=C, tol=1e-12)
            return model.objective

        scale, frac, f_star = refine_grid_2d(f, 0.0, 1.0, 0.0, 1.0, n=21, rounds=5)
        assert fit.objectives[-1] <= f_star + 1e-5
        mu_star = scale * radius * np.array([frac, 1.0 - frac])
        assert np.allclose(fit.mu, mu_star, atol=5e-3)

    def test_rejects_heavy_traces(self):
        rng = np.random.default_rng(42)
        K = random_psd(rng, 6)
        K = K / np.trace(K) * 3.0  # trace 3
        y = rng.choice([-1.0, 1.0], size=6)
        with pytest.raises(DataError, match="trace"):
            l1svm_learn(KernelBank.from_matrices([K]), y)

    def test_solution_feasible(self):
        s = labeled_sample(m=18, seed=43)
        bank = build_bank(
            s,
            BankConfig(family=ExplicitFamily((gaussian(0.25), gaussian(1.0), linear()))),
        )
        fit = l1svm_learn(bank, s.labels, radius=0.8)
        assert np.all(fit.mu >= 0.0)
        assert fit.mu.sum() <= 0.8 + 1e-9


class TestRegularizationPath:
    def test_kernel_scale_and_ridge_trade_off_exactly(self):
        # predictions with (Lambda K, lambda0) equal those with (K, lambda0 / Lambda)
        rng = np.random.default_rng(51)
        s = labeled_sample(m=15, seed=51)
        K = matrix_of(gram(gaussian(0.5), s))
        new = rng.normal(size=(6, 2))
        Kx = np.exp(-0.5 * ((new[:, None, :] - s.points[None, :, :]) ** 2).sum(-1))
        for Lambda in (0.25, 1.0, 4.0):
            m1 = krr_fit(Lambda * K, s.labels, lambda0=1.0)
            m2 = krr_fit(K, s.labels, lambda0=1.0 / Lambda)
            p1 = predict(m1, Lambda * Kx)
            p2 = predict(m2, Kx)
            assert np.allclose(p1, p2, atol=1e-10)
