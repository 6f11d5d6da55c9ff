"""Saturating fixed-point scalars and arrays.

Every value in the hardware model is a signed two's-complement integer
``raw`` interpreted as ``raw * 2**-frac_bits``. All arithmetic rounds to
nearest (ties to even) and saturates; nothing ever wraps.

Scalar types (:class:`FixPoint`, :class:`CFix`) exist for readable unit-level
code and tests. Bulk datapaths operate on ``int64`` numpy arrays of raw values
through the ``*_array`` helpers, which follow the same rounding contract.
"""

from __future__ import annotations

import contextlib
import contextvars
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation


@dataclass(frozen=True)
class FixFormat:
    word_length: int = 10
    frac_bits: int = 8

    def __post_init__(self) -> None:
        if not 2 <= self.word_length <= 32:
            raise ConfigurationError(f"word_length must be in [2, 32], got {self.word_length}")
        if not 0 <= self.frac_bits <= self.word_length - 1:
            raise ConfigurationError(
                f"frac_bits must be in [0, {self.word_length - 1}], got {self.frac_bits}"
            )

    @property
    def raw_min(self) -> int:
        return -(1 << (self.word_length - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.word_length - 1)) - 1

    @property
    def lsb(self) -> float:
        return 2.0 ** -self.frac_bits

    @property
    def max_value(self) -> float:
        return self.raw_max * self.lsb

    @property
    def min_value(self) -> float:
        return self.raw_min * self.lsb

    def __str__(self) -> str:
        return f"Q({self.word_length},{self.frac_bits})"


Q = FixFormat
DEFAULT_FORMAT = FixFormat(10, 8)


# --- saturation bookkeeping -------------------------------------------------

class SaturationCounter:
    """Counts saturation events raised inside a :func:`saturation_tracking` block."""

    def __init__(self) -> None:
        self.count = 0

    def add(self, n: int) -> None:
        self.count += int(n)


_active_counter: contextvars.ContextVar[SaturationCounter | None] = contextvars.ContextVar(
    "icaprep_saturation_counter", default=None
)


@contextlib.contextmanager
def saturation_tracking() -> Iterator[SaturationCounter]:
    counter = SaturationCounter()
    token = _active_counter.set(counter)
    try:
        yield counter
    finally:
        _active_counter.reset(token)


def _note_saturation(n: int) -> None:
    if n:
        counter = _active_counter.get()
        if counter is not None:
            counter.add(n)


# --- integer primitives -----------------------------------------------------

def round_shift(value: int, shift: int) -> int:
    """Arithmetic right shift by ``shift`` bits, rounding to nearest, ties to even."""
    if shift <= 0:
        return value << -shift
    q, r = divmod(value, 1 << shift)
    half = 1 << (shift - 1)
    if r > half or (r == half and q & 1):
        q += 1
    return q


def round_shift_array(values: np.ndarray, shift: int) -> np.ndarray:
    values = np.asarray(values)
    if values.dtype != object:
        values = values.astype(np.int64)
    if shift <= 0:
        return values << -shift
    q = np.asarray(values >> shift, dtype=values.dtype)
    r = values - (q << shift)
    half = 1 << (shift - 1)
    bump = (r > half) | ((r == half) & np.asarray(q & 1).astype(bool))
    return np.asarray(q + bump, dtype=values.dtype)


def saturate_raw(raw: int, fmt: FixFormat) -> tuple[int, bool]:
    if raw > fmt.raw_max:
        _note_saturation(1)
        return fmt.raw_max, True
    if raw < fmt.raw_min:
        _note_saturation(1)
        return fmt.raw_min, True
    return raw, False


def saturate_array(raw: np.ndarray, fmt: FixFormat) -> np.ndarray:
    raw = np.asarray(raw)
    _note_saturation(int(np.count_nonzero((raw > fmt.raw_max) | (raw < fmt.raw_min))))
    return np.asarray(np.clip(raw, fmt.raw_min, fmt.raw_max)).astype(np.int64)


def quantize_raw(x: float, fmt: FixFormat) -> tuple[int, bool]:
    if not math.isfinite(x):
        raise ContractViolation(f"cannot quantize non-finite value {x!r}")
    scaled = x * (1 << fmt.frac_bits)
    # clamp before rounding so huge inputs never reach int conversion
    if scaled >= fmt.raw_max + 1:
        return saturate_raw(fmt.raw_max + 1, fmt)
    if scaled <= fmt.raw_min - 1:
        return saturate_raw(fmt.raw_min - 1, fmt)
    return saturate_raw(int(round(scaled)), fmt)


def quantize_array(x: np.ndarray, fmt: FixFormat) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ContractViolation("cannot quantize non-finite values")
    scaled = np.clip(x * (1 << fmt.frac_bits), fmt.raw_min - 1, fmt.raw_max + 1)
    return saturate_array(np.rint(scaled).astype(np.int64), fmt)


def dequantize_array(raw: np.ndarray, fmt: FixFormat) -> np.ndarray:
    return np.asarray(raw, dtype=np.float64) * fmt.lsb


def log2_exact(n: int, what: str = "M") -> int:
    if n < 1 or n & (n - 1):
        raise ConfigurationError(f"{what} must be a power of two, got {n}")
    return n.bit_length() - 1


# --- scalar types -----------------------------------------------------------

@dataclass(frozen=True)
class FixPoint:
    raw: int
    fmt: FixFormat = DEFAULT_FORMAT
    saturated: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if not self.fmt.raw_min <= self.raw <= self.fmt.raw_max:
            raise ContractViolation(f"raw {self.raw} outside {self.fmt} range")

    @classmethod
    def from_raw(cls, raw: int, fmt: FixFormat = DEFAULT_FORMAT) -> "FixPoint":
        value, sat = saturate_raw(int(raw), fmt)
        return cls(value, fmt, sat)

    @property
    def value(self) -> float:
        return self.raw * self.fmt.lsb

    def __float__(self) -> float:
        return self.value

    def __add__(self, other: "FixPoint") -> "FixPoint":
        return fx_add(self, other)

    def __sub__(self, other: "FixPoint") -> "FixPoint":
        return fx_sub(self, other)

    def __neg__(self) -> "FixPoint":
        return fx_neg(self)

    def __mul__(self, other: "FixPoint") -> "FixPoint":
        return fx_mul(self, other)

    def __repr__(self) -> str:
        flag = ", saturated" if self.saturated else ""
        return f"FixPoint({self.value!r} [raw {self.raw}] {self.fmt}{flag})"


def quantize(x: float, fmt: FixFormat = DEFAULT_FORMAT) -> FixPoint:
    raw, sat = quantize_raw(float(x), fmt)
    return FixPoint(raw, fmt, sat)


def dequantize(p: FixPoint) -> float:
    return p.value


def _same_format(a: FixPoint, b: FixPoint) -> FixFormat:
    if a.fmt != b.fmt:
        raise ContractViolation(f"format mismatch: {a.fmt} vs {b.fmt}")
    return a.fmt


def fx_add(a: FixPoint, b: FixPoint) -> FixPoint:
    return FixPoint.from_raw(a.raw + b.raw, _same_format(a, b))


def fx_sub(a: FixPoint, b: FixPoint) -> FixPoint:
    return FixPoint.from_raw(a.raw - b.raw, _same_format(a, b))


def fx_neg(a: FixPoint) -> FixPoint:
    return FixPoint.from_raw(-a.raw, a.fmt)


def fx_mul(a: FixPoint, b: FixPoint) -> FixPoint:
    fmt = _same_format(a, b)
    return FixPoint.from_raw(round_shift(a.raw * b.raw, fmt.frac_bits), fmt)


@dataclass(frozen=True)
class CFix:
    re: FixPoint
    im: FixPoint

    def __post_init__(self) -> None:
        if self.re.fmt != self.im.fmt:
            raise ContractViolation("CFix parts must share one format")

    @classmethod
    def from_complex(cls, z: complex, fmt: FixFormat = DEFAULT_FORMAT) -> "CFix":
        return cls(quantize(z.real, fmt), quantize(z.imag, fmt))

    @classmethod
    def from_raw(cls, re: int, im: int, fmt: FixFormat = DEFAULT_FORMAT) -> "CFix":
        return cls(FixPoint.from_raw(re, fmt), FixPoint.from_raw(im, fmt))

    @property
    def fmt(self) -> FixFormat:
        return self.re.fmt

    @property
    def value(self) -> complex:
        return complex(self.re.value, self.im.value)

    def __complex__(self) -> complex:
        return self.value

    def conj(self) -> "CFix":
        return CFix(self.re, fx_neg(self.im))

    def __add__(self, other: "CFix") -> "CFix":
        return CFix(fx_add(self.re, other.re), fx_add(self.im, other.im))

    def __sub__(self, other: "CFix") -> "CFix":
        return CFix(fx_sub(self.re, other.re), fx_sub(self.im, other.im))

    def __mul__(self, other: "CFix") -> "CFix":
        return cfx_mul(self, other)


def cfx_mul(a: CFix, b: CFix) -> CFix:
    """Four rounded real products, then one saturating add/sub per part."""
    rr = fx_mul(a.re, b.re)
    ii = fx_mul(a.im, b.im)
    ri = fx_mul(a.re, b.im)
    ir = fx_mul(a.im, b.re)
    return CFix(fx_sub(rr, ii), fx_add(ri, ir))


def fx_mean_accumulate(samples: Sequence[FixPoint] | Iterable[FixPoint], M: int) -> FixPoint:
    """Mean of ``M`` samples via a wide accumulator and a rounding shift-divide.

    The accumulator holds ``word_length + log2(M)`` bits, enough for any sum of
    ``M`` in-range samples, so it never saturates; only the final writeback does.
    """
    shift = log2_exact(M)
    samples = list(samples)
    if len(samples) != M:
        raise ContractViolation(f"expected {M} samples, got {len(samples)}")
    if not samples:
        raise ContractViolation("mean of an empty sequence")
    fmt = samples[0].fmt
    acc = 0
    for s in samples:
        _same_format(samples[0], s)
        acc += s.raw
    return FixPoint.from_raw(round_shift(acc, shift), fmt)


def mean_accumulate_array(raw: np.ndarray, fmt: FixFormat) -> np.ndarray:
    """Row-wise :func:`fx_mean_accumulate` over the last axis of a raw array."""
    raw = np.asarray(raw, dtype=np.int64)
    shift = log2_exact(raw.shape[-1])
    return saturate_array(round_shift_array(raw.sum(axis=-1), shift), fmt)


def cmac_conj_array(
    a_re: np.ndarray, a_im: np.ndarray, b_re: np.ndarray, b_im: np.ndarray,
    fmt: FixFormat, shift: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact sum over the last axis of ``a * conj(b)``, scaled by ``2**-shift``.

    This is the MAC contract shared by the DSC and the ECMMA: full-precision
    products accumulate without rounding, then a single round-to-nearest-even
    shift by ``frac_bits + shift`` and a saturating writeback.
    """
    n = np.shape(a_re)[-1] if np.ndim(a_re) else 1
    # 2*wl-bit products plus log2(n) growth must fit the accumulator dtype
    dtype = np.int64 if 2 * fmt.word_length + max(n, 1).bit_length() + 1 < 63 else object
    a_re, a_im, b_re, b_im = (np.asarray(v, dtype=np.int64).astype(dtype) for v in (a_re, a_im, b_re, b_im))
    acc_re = np.asarray((a_re * b_re + a_im * b_im).sum(axis=-1), dtype=dtype)
    acc_im = np.asarray((a_im * b_re - a_re * b_im).sum(axis=-1), dtype=dtype)
    total = fmt.frac_bits + shift
    return (
        saturate_array(round_shift_array(acc_re, total), fmt),
        saturate_array(round_shift_array(acc_im, total), fmt),
    )
