import numpy as np
import pytest

from icaprep.errors import ConfigurationError, ContractViolation
from icaprep.fixedpoint import CFix, Q, saturation_tracking
from icaprep.matrices import FixMatrix, HermitianMatrix, SignalMatrix

F = Q(10, 8)


def test_fixmatrix_range_checked():
    with pytest.raises(ContractViolation):
        FixMatrix(np.array([[600]]), np.array([[0]]), F)


def test_fixmatrix_is_read_only():
    m = FixMatrix.zeros((2, 2))
    with pytest.raises(ValueError):
        m.re[0, 0] = 1


def test_fixmatrix_indexing():
    m = FixMatrix(np.array([[1, 2], [3, 4]]), np.array([[5, 6], [7, 8]]), F)
    assert m[1, 0] == CFix.from_raw(3, 7)
    assert m[0].shape == (2,)
    assert m.conj_transpose()[0, 1] == CFix.from_raw(3, -7)


@pytest.mark.parametrize("n, m", [(3, 8), (0, 8), (4, 6), (4, 1)])
def test_signal_matrix_shape_rules(n, m):
    with pytest.raises(ConfigurationError):
        SignalMatrix.from_raw(np.zeros((n, m), int), np.zeros((n, m), int))


def test_hermitian_lower_is_exact_conjugate(rng):
    re = rng.integers(-500, 500, (6, 6))
    im = rng.integers(-500, 500, (6, 6))
    h = HermitianMatrix(re, im, F)
    for i in range(6):
        for j in range(6):
            assert h[j, i] == h[i, j].conj()
        assert h.raw(i, i)[1] == 0
    assert np.array_equal(h.re, h.re.T) and np.array_equal(h.im, -h.im.T)


def test_hermitian_clips_unconjugatable_min():
    im = np.zeros((2, 2), int)
    im[0, 1] = -512
    with saturation_tracking() as sat:
        h = HermitianMatrix(np.zeros((2, 2), int), im, F)
    assert h.raw(0, 1) == (0, -511) and h.raw(1, 0) == (0, 511) and sat.count == 1


def test_hermitian_round_trip_complex(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    a = (a + a.conj().T) / 8
    h = HermitianMatrix.from_complex(a)
    assert np.abs(h.to_complex() - a).max() <= F.lsb / 2 + 1e-12
    assert HermitianMatrix.from_full(h.re, h.im) == h
