import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icaprep.errors import ConfigurationError
from icaprep.fixedpoint import Q, quantize
from icaprep.matrices import FixMatrix, HermitianMatrix, SignalMatrix
from icaprep.mma import EcmmaConfig, ecmma_run
from icaprep.oracle import oracle_center, oracle_cov
from icaprep.prep import (
    center_pair,
    compute_covariance,
    dsc_compute_diag,
    dsc_compute_offdiag,
    run_prep,
    schedule_prep,
    steady_state_period,
    submatrix_plan,
)

F = Q(10, 8)
LSB = F.lsb


def row(values):
    z = np.asarray(values, dtype=complex)
    return FixMatrix.from_complex(z, F)


def rand_row(rng, m=512, scale=0.6):
    return row(rng.uniform(-scale, scale, m) + 1j * rng.uniform(-scale, scale, m))


class TestCenter:
    def test_constant_row(self):
        y = row([0.3 - 0.2j] * 64)
        centered, means, cycles = center_pair(y, y)
        assert not centered.re.any() and not centered.im.any()
        assert means[0] == means[1] and abs(means[0].value - (0.3 - 0.2j)) <= LSB
        assert cycles == 128

    def test_zero_mean_row_is_unchanged(self):
        y = row(np.tile([0.5, -0.5, 0.25j, -0.25j], 16))
        centered, _, _ = center_pair(y, y)
        assert np.abs(centered.re[0] - y.re).max() <= 1 and np.abs(centered.im[0] - y.im).max() <= 1

    def test_random_against_oracle(self, rng):
        a, b = rand_row(rng), rand_row(rng)
        centered, _, _ = center_pair(a, b)
        ref = oracle_center(np.stack([a.to_complex(), b.to_complex()]))
        got = centered.to_complex()
        assert np.abs(got.real - ref.real).max() <= LSB and np.abs(got.imag - ref.imag).max() <= LSB

    def test_non_power_of_two(self):
        with pytest.raises(ConfigurationError):
            center_pair(row([0.1] * 6), row([0.1] * 6))


class TestDsc:
    def test_zero_row(self):
        z = row([0] * 64)
        caa, cbb, cycles = dsc_compute_diag(z, z)
        assert caa.re.raw == 0 and cbb.re.raw == 0 and cycles == 64

    def test_constant_magnitude(self):
        c = 0.75
        y = row(c * np.exp(2j * np.pi * np.arange(64) / 64))
        caa, _, _ = dsc_compute_diag(y, y)
        assert abs(caa.re.value - c * c) <= 2 * LSB and caa.im.raw == 0

    def test_random_diag_against_oracle(self, rng):
        a, b = rand_row(rng), rand_row(rng)
        caa, cbb, _ = dsc_compute_diag(a, b)
        ref = oracle_cov(np.stack([a.to_complex(), b.to_complex()]))
        assert abs(caa.re.value - ref[0, 0].real) <= 2 * LSB
        assert abs(cbb.re.value - ref[1, 1].real) <= 2 * LSB

    def test_disjoint_support_is_orthogonal(self):
        a = row([0.5] * 32 + [0] * 32)
        b = row([0] * 32 + [0.5j] * 32)
        cab, cycles = dsc_compute_offdiag(a, b)
        assert abs(cab.re.raw) <= 1 and abs(cab.im.raw) <= 1 and cycles == 64

    def test_self_correlation(self, rng):
        a = rand_row(rng)
        caa, _, _ = dsc_compute_diag(a, a)
        cab, _ = dsc_compute_offdiag(a, a)
        assert abs(cab.re.raw - caa.re.raw) <= 1 and abs(cab.im.raw) <= 1

    def test_random_offdiag_against_oracle(self, rng):
        a, b = rand_row(rng), rand_row(rng)
        cab, _ = dsc_compute_offdiag(a, b)
        ref = oracle_cov(np.stack([a.to_complex(), b.to_complex()]))[0, 1]
        assert abs(cab.value - ref) <= 2 * LSB * np.sqrt(2)


class TestPlan:
    def test_eight(self):
        assert len(submatrix_plan(8)) == 6

    def test_four(self):
        # 0-based indices: rows 1-2 x cols 3-4 in one-based terms
        assert submatrix_plan(4) == [((0, 1), (2, 3))]

    def test_sixteen(self):
        assert len(submatrix_plan(16)) == 28

    def test_odd(self):
        with pytest.raises(ConfigurationError):
            submatrix_plan(7)

    def test_row_major_above_block_diagonal(self):
        plan = submatrix_plan(8)
        assert plan == sorted(plan) and all(r[1] < c[0] for r, c in plan)


class TestSchedule:
    def test_published_period(self):
        assert schedule_prep(8, 512).period == 6144

    def test_published_latency_band(self):
        lat = schedule_prep(8, 512).latency
        assert lat == 10240 and abs(lat - 10757) / 10757 <= 0.05

    def test_small_n_runs(self):
        led = schedule_prep(4, 64)
        assert (led.latency, led.period) == (512, 384) and not led.conflicts()

    @settings(max_examples=40)
    @given(st.sampled_from([8, 10, 12, 14, 16]), st.sampled_from([64, 128, 256, 512, 1024]))
    def test_period_formula(self, N, M):
        led = schedule_prep(N, M)
        assert led.period == steady_state_period(N, M) == (N * N * M - 2 * N * M) // 4

    @settings(max_examples=20)
    @given(st.sampled_from([2, 4, 6, 8, 12]), st.sampled_from([2, 8, 64, 256]))
    def test_resources_exclusive(self, N, M):
        led = schedule_prep(N, M)
        assert not led.conflicts()
        assert led.period <= led.latency == max(p.end for p in led.for_matrix(0))

    def test_input_write_phase(self):
        w = schedule_prep(8, 512).phases_named("write[0]")[0]
        assert (w.start, w.duration) == (0, 8 * 512 // 2)

    def test_ecmma_passes_take_2m(self):
        led = schedule_prep(8, 512, matrices=1)
        passes = led.phases_named("ecmma")
        assert len(passes) == 6 and {p.duration for p in passes} == {1024}

    def test_next_matrix_overlaps_ecmma(self):
        led = schedule_prep(8, 512, matrices=2)
        last_ecmma = max(p.end for p in led.phases_named("ecmma[0"))
        first_cc = min(p.start for p in led.phases_named("cc_acc[1"))
        assert first_cc < last_ecmma


class TestRunPrep:
    def test_manual_composition(self, rng):
        Y = SignalMatrix.from_complex(rng.uniform(-0.8, 0.8, (4, 8)) + 1j * rng.uniform(-0.8, 0.8, (4, 8)), F)
        y_bar, yc, ledger = run_prep(Y)
        c01, _, _ = center_pair(Y.data[0], Y.data[1])
        c23, _, _ = center_pair(Y.data[2], Y.data[3])
        up_re = np.zeros((4, 4), int)
        up_im = np.zeros((4, 4), int)
        for base, c in ((0, c01), (2, c23)):
            d0, d1, _ = dsc_compute_diag(c[0], c[1])
            off, _ = dsc_compute_offdiag(c[0], c[1])
            up_re[base, base], up_re[base + 1, base + 1] = d0.re.raw, d1.re.raw
            up_re[base, base + 1], up_im[base, base + 1] = off.re.raw, off.im.raw
        block = ecmma_run(c01, c23, EcmmaConfig(2, 8, F, shift=3)).product
        up_re[0:2, 2:4], up_im[0:2, 2:4] = block.re, block.im
        assert yc == HermitianMatrix(up_re, up_im, F)
        assert np.array_equal(y_bar.re[:2], c01.re) and np.array_equal(y_bar.im[2:], c23.im)
        assert ledger.latency > 0

    def test_against_oracle(self, rng):
        z = (rng.uniform(-1, 1, (8, 512)) + 1j * rng.uniform(-1, 1, (8, 512))) * 0.8
        Y = SignalMatrix.from_complex(z, F)
        _, yc, _ = compute_covariance(Y)
        ref = oracle_cov(oracle_center(Y.to_complex()))
        err = yc.to_complex() - ref
        assert max(np.abs(err.real).max(), np.abs(err.imag).max()) <= 4 * LSB
        assert (np.diag(yc.re) >= -1).all() and not np.diag(yc.im).any()

    def test_schedule_does_not_change_values(self, rng):
        Y = SignalMatrix.from_complex(rng.uniform(-0.5, 0.5, (8, 64)) + 0j, F)
        assert run_prep(Y, matrices=1).covariance == run_prep(Y, matrices=4).covariance == compute_covariance(Y)[1]
