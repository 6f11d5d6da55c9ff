import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icaprep.errors import ConfigurationError, ContractViolation, RankDeficientError
from icaprep.evd import parallel_ordering
from icaprep.oracle import (
    SCENARIO_KINDS,
    generate_bss,
    max_cross_correlation,
    off_norm,
    oracle_center,
    oracle_cov,
    oracle_evd,
    oracle_pipeline,
    oracle_whiten,
    whitening_matrix,
)


def crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_hermitian(rng, n):
    a = crandn(rng, n, n)
    return (a + a.conj().T) / 2


class TestCenter:
    def test_constant_rows(self):
        assert not oracle_center(np.full((2, 16), 0.3 - 1j)).any()

    def test_zero_mean_unchanged(self):
        y = np.tile([1.0, -1.0, 1j, -1j], (3, 4))
        assert np.array_equal(oracle_center(y), y)

    def test_idempotent(self, rng):
        y = crandn(rng, 4, 64) + 3
        c = oracle_center(y)
        assert np.abs(oracle_center(c) - c).max() <= 1e-12
        assert np.abs(c.sum(axis=1)).max() <= 1e-12 * 64 * np.abs(y).max()

    def test_non_finite(self):
        with pytest.raises(ContractViolation):
            oracle_center([[np.nan, 1.0]])


class TestCov:
    def test_orthonormal_rows_give_identity(self):
        M = 16
        k = np.arange(M)
        rows = np.exp(2j * np.pi * np.outer([1, 2, 3], k) / M)
        assert np.abs(oracle_cov(rows) - np.eye(3)).max() <= 1e-12

    def test_single_row_is_rank_one(self, rng):
        y = np.zeros((4, 32), complex)
        y[2] = crandn(rng, 32)
        assert np.linalg.matrix_rank(oracle_cov(y)) == 1

    def test_brute_force(self, rng):
        y = crandn(rng, 5, 40)
        ref = np.array([[sum(y[i, k] * np.conj(y[j, k]) for k in range(40)) / 40 for j in range(5)] for i in range(5)])
        c = oracle_cov(y)
        assert np.abs(c - ref).max() <= 1e-12
        assert np.array_equal(c, c.conj().T)
        assert np.linalg.eigvalsh(c).min() >= -1e-10


class TestEvd:
    def test_identity(self):
        ev = oracle_evd(np.eye(6))
        assert np.allclose(ev.eigenvalues, 1) and ev.sweeps == 0

    def test_diagonal(self):
        lam, V = oracle_evd(np.diag(np.arange(1.0, 9.0)))
        assert np.array_equal(lam, np.arange(1.0, 9.0)) and np.array_equal(V, np.eye(8))

    @pytest.mark.parametrize("seed", range(5))
    def test_random_hermitian(self, seed):
        rng = np.random.default_rng(seed)
        A = random_hermitian(rng, 8)
        ev = oracle_evd(A)
        lam, V = ev
        assert np.linalg.norm(V @ np.diag(lam) @ V.conj().T - A) <= 1e-10
        assert np.abs(V.conj().T @ V - np.eye(8)).max() <= 1e-12
        assert ev.offnorm_history[-1] < 1e-12 * np.abs(A).max()
        assert np.allclose(np.sort(lam), np.linalg.eigvalsh(A), atol=1e-10)

    def test_parallel_ordering_converges(self, rng):
        A = random_hermitian(rng, 8)
        ev = oracle_evd(A, ordering=parallel_ordering(8))
        assert np.allclose(np.sort(ev.eigenvalues), np.linalg.eigvalsh(A), atol=1e-10)

    @settings(max_examples=30)
    @given(st.integers(0, 10_000), st.sampled_from([2, 4, 6, 8]))
    def test_offnorm_non_increasing(self, seed, n):
        A = random_hermitian(np.random.default_rng(seed), n)
        hist = oracle_evd(A).offnorm_history
        assert all(b <= a * (1 + 1e-12) for a, b in zip(hist, hist[1:]))

    def test_non_hermitian(self):
        with pytest.raises(ContractViolation):
            oracle_evd(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_off_norm(self):
        assert off_norm(np.array([[5, 3], [4, 7]])) == 5.0


class TestWhiten:
    def test_already_white(self):
        M = 64
        k = np.arange(M)
        y = np.exp(2j * np.pi * np.outer([1, 5], k) / M)
        lam, V = oracle_evd(oracle_cov(y))
        assert np.abs(oracle_cov(oracle_whiten(y, lam, V)) - np.eye(2)).max() <= 1e-8

    def test_scale_invariant(self, rng):
        y = oracle_center(crandn(rng, 4, 128))
        ref = oracle_pipeline(y).whitened
        scaled = oracle_pipeline(3.5 * y).whitened
        assert np.abs(oracle_cov(scaled) - oracle_cov(ref)).max() <= 1e-10

    @pytest.mark.parametrize("kind", SCENARIO_KINDS)
    def test_bss_whiteness(self, kind):
        sc = generate_bss(8, 512, 3, kind)
        assert np.abs(oracle_cov(oracle_pipeline(sc.Y).whitened) - np.eye(8)).max() <= 1e-8

    def test_rank_deficient_names_index(self):
        with pytest.raises(RankDeficientError) as err:
            whitening_matrix([1.0, 1e-12, 0.5], np.eye(3))
        assert err.value.index == 1 and "1" in str(err.value)


class TestGenerator:
    def test_deterministic(self):
        a, b = generate_bss(8, 256, 42), generate_bss(8, 256, 42)
        assert np.array_equal(a.Y, b.Y) and np.array_equal(a.H, b.H) and np.array_equal(a.X, b.X)

    def test_seeds_differ(self):
        assert not np.array_equal(generate_bss(4, 64, 1).Y, generate_bss(4, 64, 2).Y)

    def test_qpsk_power(self):
        X = generate_bss(8, 512, 0, "qpsk_sources").X
        assert np.abs(np.mean(np.abs(X) ** 2, axis=1) - 1).max() <= 1e-2

    @pytest.mark.parametrize("kind", SCENARIO_KINDS)
    def test_cross_correlation_bound(self, kind):
        for seed in range(5):
            sc = generate_bss(8, 512, seed, kind)
            assert max_cross_correlation(sc.X) <= 3 / np.sqrt(512)

    def test_mixing_and_scaling(self):
        sc = generate_bss(8, 512, 7, peak=1.8)
        assert np.allclose(sc.Y, sc.H @ sc.X)
        assert np.isclose(max(np.abs(sc.Y.real).max(), np.abs(sc.Y.imag).max()), 1.8)
        assert np.linalg.cond(sc.H) <= 20

    @pytest.mark.parametrize("args", [(7, 64, 0), (8, 4, 0)])
    def test_bad_dimensions(self, args):
        with pytest.raises(ConfigurationError):
            generate_bss(*args)

    def test_bad_kind_and_condition(self):
        with pytest.raises(ConfigurationError):
            generate_bss(4, 64, 0, "chirp")
        with pytest.raises(ConfigurationError):
            generate_bss(4, 64, 0, cond_max=25.0)
