"""Alignment measures: sample, population, and the quadratic system."""

import math

import numpy as np
import pytest

from helpers import (
    alignment_oracle,
    center_oracle,
    population_alignment_oracle,
    random_psd,
)
from mklalign import (
    DataError,
    DegenerateKernelError,
    FiniteDistribution,
    alignment_report,
    alignment_system,
    center,
    centered_alignment,
    centered_entries,
    frobenius_product,
    gaussian,
    gram,
    label_kernel,
    linear,
    matrix_of,
    population_alignment,
    population_report,
    population_uncentered_alignment,
    uncentered_alignment,
    unnormalized_alignment,
)
from mklalign.kernels import KernelBank

THREE_ATOMS = dict(
    points=np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    labels=np.array([-1.0, 1.0, 1.0]),
    masses=np.array([0.4, 0.4, 0.2]),
)


def three_atom_dist():
    return FiniteDistribution(**THREE_ATOMS)


class TestSampleAlignment:
    def test_matches_double_loop_oracle(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            K1 = random_psd(rng, 6)
            K2 = random_psd(rng, 6)
            assert np.isclose(
                centered_alignment(K1, K2), alignment_oracle(K1, K2), atol=1e-10
            )
            assert np.isclose(
                uncentered_alignment(K1, K2),
                alignment_oracle(K1, K2, centered=False),
                atol=1e-10,
            )

    def test_perfectly_aligned_pair(self):
        K = np.array([[2.0, 1.0], [1.0, 2.0]])
        T = label_kernel(np.array([1.0, -1.0]))
        assert np.isclose(centered_alignment(K, T), 1.0, atol=1e-12)

    def test_centering_one_side_only_changes_nothing(self):
        # <Kc, K'c> = <Kc, K'>: centering is a projection, hence idempotent
        # inside the inner product
        rng = np.random.default_rng(7)
        K1 = random_psd(rng, 8)
        K2 = random_psd(rng, 8)
        K1c = centered_entries(K1)
        assert np.isclose(
            frobenius_product(K1c, centered_entries(K2)),
            frobenius_product(K1c, K2),
            rtol=1e-12,
        )

    def test_unnormalized_scaling(self):
        rng = np.random.default_rng(9)
        K1 = random_psd(rng, 5)
        K2 = random_psd(rng, 5)
        expected = frobenius_product(centered_entries(K1), centered_entries(K2)) / 25.0
        assert np.isclose(unnormalized_alignment(K1, K2), expected, rtol=1e-12)

    def test_degenerate_raises(self):
        ones = np.ones((4, 4))  # centered to exactly zero
        with pytest.raises(DegenerateKernelError):
            centered_alignment(ones, np.eye(4))

    def test_precentered_gram_short_circuit(self):
        rng = np.random.default_rng(3)
        K1 = random_psd(rng, 6)
        T = label_kernel(rng.choice([-1.0, 1.0], size=6))
        direct = centered_alignment(K1, T)
        pre = centered_alignment(center(KernelBank.from_matrices([K1]).grams[0]), T)
        assert np.isclose(direct, pre, rtol=1e-12)

    def test_report_is_consistent(self):
        rng = np.random.default_rng(13)
        K1 = random_psd(rng, 6)
        T = label_kernel(rng.choice([-1.0, 1.0], size=6))
        rep = alignment_report(K1, T)
        assert np.isclose(rep.centered, centered_alignment(K1, T))
        assert np.isclose(rep.uncentered, uncentered_alignment(K1, T))
        assert np.isclose(rep.unnormalized, unnormalized_alignment(K1, T))
        assert np.isclose(
            rep.centered, rep.frobenius_numerator / (rep.norm_first * rep.norm_second)
        )


class TestFiniteDistribution:
    def test_masses_must_sum_to_one(self):
        with pytest.raises(DataError):
            FiniteDistribution(
                points=np.array([[0.0], [1.0]]),
                labels=np.array([1.0, -1.0]),
                masses=np.array([0.6, 0.6]),
            )

    def test_two_point_atoms(self):
        d = FiniteDistribution.two_point(0.3)
        assert np.allclose(d.points, [[-1.0, 0.0], [1.0, 0.0]])
        assert np.allclose(d.masses, [0.3, 0.7])
        assert d.support_size == 2

    def test_two_point_rejects_boundary_alpha(self):
        for alpha in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(DataError):
                FiniteDistribution.two_point(alpha)

    def test_sample_draws_from_support(self):
        d = three_atom_dist()
        s = d.sample(40, np.random.default_rng(0))
        assert s.m == 40
        for row in s.points:
            assert any(np.allclose(row, atom) for atom in d.points)

    def test_bounds(self):
        d = three_atom_dist()
        assert np.isclose(d.bound_kernel(gaussian(0.5)), 1.0)
        assert np.isclose(d.bound_kernel(linear(1.0)), 2.0)  # max ||x||^2 + 1
        assert np.isclose(d.bound_target(), 1.0)


class TestPopulationAlignment:
    def test_two_point_closed_form(self):
        # linear-plus-one kernel on the two-atom support: the uncentered
        # measure is sqrt(alpha^2 + (1-alpha)^2), the centered one is exactly 1
        for alpha in (0.1, 0.25, 0.5, 0.8):
            dist = FiniteDistribution.two_point(alpha)
            rep = population_report(linear(1.0), dist)
            assert np.isclose(
                rep.uncentered, math.sqrt(alpha**2 + (1 - alpha) ** 2), atol=1e-12
            )
            assert np.isclose(rep.centered, 1.0, atol=1e-12)

    def test_matches_enumeration_oracle(self):
        dist = three_atom_dist()
        spec = gaussian(0.8)

        def kfun(x, z):
            return math.exp(-0.8 * float(np.sum((np.asarray(x) - np.asarray(z)) ** 2)))

        want = population_alignment_oracle(
            kfun, dist.points, dist.labels, dist.masses, centered=True
        )
        assert np.isclose(population_alignment(spec, dist), want, atol=1e-12)
        want_u = population_alignment_oracle(
            kfun, dist.points, dist.labels, dist.masses, centered=False
        )
        assert np.isclose(population_uncentered_alignment(spec, dist), want_u, atol=1e-12)

    def test_sample_alignment_approaches_population(self):
        dist = three_atom_dist()
        spec = gaussian(0.8)
        rho = population_alignment(spec, dist)
        s = dist.sample(3000, np.random.default_rng(42))
        K = matrix_of(gram(spec, s))
        rho_hat = centered_alignment(K, label_kernel(s.labels))
        assert abs(rho_hat - rho) < 0.03


class TestAlignmentSystem:
    def test_entries_match_oracles(self):
        rng = np.random.default_rng(21)
        mats = [random_psd(rng, 7) for _ in range(3)]
        y = rng.choice([-1.0, 1.0], size=7)
        system = alignment_system(KernelBank.from_matrices(mats), y)
        Tc = center_oracle(label_kernel(y))
        for k in range(3):
            Kkc = center_oracle(mats[k])
            assert np.isclose(system.a[k], np.tensordot(Kkc, Tc), rtol=1e-10)
            for l in range(3):
                Klc = center_oracle(mats[l])
                assert np.isclose(system.M[k, l], np.tensordot(Kkc, Klc), rtol=1e-10)

    def test_m_is_psd(self):
        rng = np.random.default_rng(22)
        mats = [random_psd(rng, 6) for _ in range(4)]
        y = rng.choice([-1.0, 1.0], size=6)
        system = alignment_system(KernelBank.from_matrices(mats), y)
        assert system.min_eigenvalue > -1e-8 * np.trace(system.M)
        assert not system.is_singular()

    def test_duplicate_kernels_are_singular(self):
        rng = np.random.default_rng(23)
        K = random_psd(rng, 6)
        y = rng.choice([-1.0, 1.0], size=6)
        system = alignment_system(KernelBank.from_matrices([K, K.copy()]), y)
        assert system.is_singular()

    def test_degenerate_member_rejected_with_indices(self):
        rng = np.random.default_rng(24)
        K = random_psd(rng, 5)
        y = rng.choice([-1.0, 1.0], size=5)
        with pytest.raises(DegenerateKernelError, match="1"):
            alignment_system(KernelBank.from_matrices([K, np.ones((5, 5))]), y)
