"""Fixed-point complex matrix containers.

Matrices are stored as a pair of ``int64`` raw arrays (real and imaginary
parts) that share one :class:`FixFormat`. Arrays are made read-only so a
finished result can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .fixedpoint import (
    DEFAULT_FORMAT,
    CFix,
    FixFormat,
    _note_saturation,
    dequantize_array,
    log2_exact,
    quantize_array,
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.int64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FixMatrix:
    re: np.ndarray
    im: np.ndarray
    fmt: FixFormat = DEFAULT_FORMAT

    def __post_init__(self) -> None:
        re, im = _frozen(self.re), _frozen(self.im)
        if re.shape != im.shape:
            raise ContractViolation(f"real/imag shape mismatch {re.shape} vs {im.shape}")
        lo, hi = self.fmt.raw_min, self.fmt.raw_max
        if re.size and (re.min() < lo or re.max() > hi or im.min() < lo or im.max() > hi):
            raise ContractViolation(f"raw values outside {self.fmt} range")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def from_complex(cls, z: np.ndarray, fmt: FixFormat = DEFAULT_FORMAT) -> "FixMatrix":
        z = np.asarray(z, dtype=np.complex128)
        return cls(quantize_array(z.real, fmt), quantize_array(z.imag, fmt), fmt)

    @classmethod
    def zeros(cls, shape: tuple[int, ...], fmt: FixFormat = DEFAULT_FORMAT) -> "FixMatrix":
        return cls(np.zeros(shape, np.int64), np.zeros(shape, np.int64), fmt)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.re.shape

    def to_complex(self) -> np.ndarray:
        return dequantize_array(self.re, self.fmt) + 1j * dequantize_array(self.im, self.fmt)

    def __getitem__(self, idx) -> "CFix | FixMatrix":
        re, im = self.re[idx], self.im[idx]
        if np.ndim(re) == 0:
            return CFix.from_raw(int(re), int(im), self.fmt)
        return FixMatrix(re, im, self.fmt)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FixMatrix):
            return NotImplemented
        return (
            self.fmt == other.fmt
            and np.array_equal(self.re, other.re)
            and np.array_equal(self.im, other.im)
        )

    def conj_transpose(self) -> "FixMatrix":
        return FixMatrix(self.re.T, -self.im.T, self.fmt)


@dataclass(frozen=True, eq=False)
class SignalMatrix:
    """An N x M block of complex samples: N signals, M samples each."""

    data: FixMatrix

    def __post_init__(self) -> None:
        if len(self.data.shape) != 2:
            raise ContractViolation("SignalMatrix data must be two-dimensional")
        n, m = self.data.shape
        if n < 2 or n % 2:
            raise ConfigurationError(f"N must be even and at least 2, got {n}")
        if m < 2:
            raise ConfigurationError(f"M must be at least 2, got {m}")
        log2_exact(m)

    @classmethod
    def from_complex(cls, y: np.ndarray, fmt: FixFormat = DEFAULT_FORMAT) -> "SignalMatrix":
        return cls(FixMatrix.from_complex(y, fmt))

    @classmethod
    def from_raw(cls, re: np.ndarray, im: np.ndarray, fmt: FixFormat = DEFAULT_FORMAT) -> "SignalMatrix":
        return cls(FixMatrix(re, im, fmt))

    @property
    def N(self) -> int:
        return self.data.shape[0]

    @property
    def M(self) -> int:
        return self.data.shape[1]

    @property
    def fmt(self) -> FixFormat:
        return self.data.fmt

    @property
    def re(self) -> np.ndarray:
        return self.data.re

    @property
    def im(self) -> np.ndarray:
        return self.data.im

    def to_complex(self) -> np.ndarray:
        return self.data.to_complex()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignalMatrix):
            return NotImplemented
        return self.data == other.data


class HermitianMatrix:
    """N x N Hermitian matrix stored as its upper triangle plus diagonal.

    The lower triangle is never stored; reading ``(j, i)`` returns the exact
    conjugate of ``(i, j)``. Diagonal imaginary parts are zero by construction.
    """

    def __init__(self, upper_re: np.ndarray, upper_im: np.ndarray, fmt: FixFormat = DEFAULT_FORMAT):
        upper_re = np.asarray(upper_re, dtype=np.int64)
        upper_im = np.asarray(upper_im, dtype=np.int64)
        n = upper_re.shape[0]
        if upper_re.shape != (n, n) or upper_im.shape != (n, n):
            raise ContractViolation("HermitianMatrix needs square upper-triangle arrays")
        iu = np.triu_indices(n)
        self._n = n
        self._fmt = fmt
        self._re = _frozen(upper_re[iu])
        im = upper_im[iu].copy()
        im[iu[0] == iu[1]] = 0
        # -raw_min has no representation, so conjugation needs a symmetric range
        if im.size and im.min() == fmt.raw_min:
            _note_saturation(int(np.count_nonzero(im == fmt.raw_min)))
            im = np.maximum(im, -fmt.raw_max)
        self._im = _frozen(im)
        self._index = np.full((n, n), -1, dtype=np.int64)
        self._index[iu] = np.arange(len(iu[0]))
        lo, hi = fmt.raw_min, fmt.raw_max
        if self._re.size and (self._re.min() < lo or self._re.max() > hi
                              or self._im.min() < lo or self._im.max() > hi):
            raise ContractViolation(f"raw values outside {fmt} range")

    @classmethod
    def from_full(cls, re: np.ndarray, im: np.ndarray, fmt: FixFormat = DEFAULT_FORMAT) -> "HermitianMatrix":
        """Build from a full matrix, keeping only the upper triangle."""
        return cls(re, im, fmt)

    @classmethod
    def from_complex(cls, a: np.ndarray, fmt: FixFormat = DEFAULT_FORMAT) -> "HermitianMatrix":
        a = np.asarray(a, dtype=np.complex128)
        return cls(quantize_array(a.real, fmt), quantize_array(a.imag, fmt), fmt)

    @property
    def N(self) -> int:
        return self._n

    @property
    def fmt(self) -> FixFormat:
        return self._fmt

    def raw(self, i: int, j: int) -> tuple[int, int]:
        if i <= j:
            k = self._index[i, j]
            return int(self._re[k]), int(self._im[k])
        k = self._index[j, i]
        return int(self._re[k]), -int(self._im[k])

    def __getitem__(self, ij: tuple[int, int]) -> CFix:
        return CFix.from_raw(*self.raw(*ij), self._fmt)

    @property
    def re(self) -> np.ndarray:
        full = np.zeros((self._n, self._n), dtype=np.int64)
        iu = np.triu_indices(self._n)
        full[iu] = self._re
        full.T[iu] = self._re
        return full

    @property
    def im(self) -> np.ndarray:
        full = np.zeros((self._n, self._n), dtype=np.int64)
        iu = np.triu_indices(self._n)
        full[iu] = self._im
        full.T[iu] = -self._im
        return full

    def to_fixmatrix(self) -> FixMatrix:
        return FixMatrix(self.re, self.im, self._fmt)

    def to_complex(self) -> np.ndarray:
        return dequantize_array(self.re, self._fmt) + 1j * dequantize_array(self.im, self._fmt)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HermitianMatrix):
            return NotImplemented
        return (
            self._fmt == other._fmt
            and np.array_equal(self._re, other._re)
            and np.array_equal(self._im, other._im)
        )

    def __repr__(self) -> str:
        return f"HermitianMatrix(N={self._n}, fmt={self._fmt})"
