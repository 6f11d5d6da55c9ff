"""Circular CORDIC in vectoring and rotation mode.

A rotation is carried between CORDIC units as a :class:`DirectionSequence`:
the ``K`` micro-rotation signs plus an optional pre-rotation by pi. The
sequence records the rotation that was *applied*, so vectoring ``(x, y)``
yields a sequence whose angle is ``-atan2(y, x)``; replaying it on any other
vector applies the same rotation bit-exactly.

Internally the datapath carries ``guard_bits`` extra fraction bits and never
saturates; each invocation ends with one gain-compensation multiply and one
rounding back to the working format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .fixedpoint import (
    DEFAULT_FORMAT,
    FixFormat,
    FixPoint,
    round_shift,
    round_shift_array,
    saturate_array,
)

ANGLE_FRAC_BITS = 30
GAIN_FORMAT = FixFormat(18, 16)


@lru_cache(maxsize=None)
def atan_table(k: int) -> tuple[int, ...]:
    """``atan(2**-i)`` for ``i < k`` in units of ``2**-30`` rad."""
    return tuple(round(math.atan(2.0 ** -i) * (1 << ANGLE_FRAC_BITS)) for i in range(k))


_PI_UNITS = round(math.pi * (1 << ANGLE_FRAC_BITS))


def inverse_gain(k: int) -> float:
    return 1.0 / math.prod(math.sqrt(1.0 + 2.0 ** (-2 * i)) for i in range(k))


@dataclass(frozen=True)
class CordicConfig:
    iterations: int = 10
    fmt: FixFormat = DEFAULT_FORMAT
    guard_bits: int = 4
    gain_comp: FixPoint = field(init=False)

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ConfigurationError(f"CORDIC needs at least one iteration, got {self.iterations}")
        if self.guard_bits < 0:
            raise ConfigurationError("guard_bits must be non-negative")
        from .fixedpoint import quantize

        object.__setattr__(self, "gain_comp", quantize(inverse_gain(self.iterations), GAIN_FORMAT))

    @property
    def K(self) -> int:
        return self.iterations


@dataclass(frozen=True)
class DirectionSequence:
    signs: tuple[int, ...]
    prerotate: bool = False
    degenerate: bool = False

    def __post_init__(self) -> None:
        signs = tuple(int(s) for s in self.signs)
        if any(s not in (-1, 1) for s in signs):
            raise ContractViolation("direction signs must be +1 or -1")
        object.__setattr__(self, "signs", signs)

    @property
    def K(self) -> int:
        return len(self.signs)

    @property
    def is_identity(self) -> bool:
        return self.degenerate

    def angle_units(self) -> int:
        """Applied rotation in ``2**-30`` rad units (pre-rotation included)."""
        if self.degenerate:
            return 0
        table = atan_table(self.K)
        total = sum(s * a for s, a in zip(self.signs, table))
        return total + (_PI_UNITS if self.prerotate else 0)

    @property
    def angle(self) -> float:
        """Applied rotation in radians, wrapped to (-pi, pi]."""
        a = self.angle_units() / (1 << ANGLE_FRAC_BITS)
        if a > math.pi:
            a -= 2 * math.pi
        return a

    @property
    def micro_angle(self) -> float:
        """The micro-rotation part alone, excluding any pre-rotation."""
        if self.degenerate:
            return 0.0
        table = atan_table(self.K)
        return sum(s * a for s, a in zip(self.signs, table)) / (1 << ANGLE_FRAC_BITS)

    def inverse(self) -> "DirectionSequence":
        return DirectionSequence(tuple(-s for s in self.signs), self.prerotate, self.degenerate)

    @classmethod
    def identity(cls, k: int) -> "DirectionSequence":
        return cls((1,) * k, False, True)


# --- integer core -------------------------------------------------------------

def _shr(v, i: int):
    """Arithmetic right shift with round-half-up (one adder ahead of the shifter)."""
    return v if i == 0 else (v + (1 << (i - 1))) >> i


def _micro_rotations(x, y, signs):
    for i, s in enumerate(signs):
        xs, ys = _shr(x, i), _shr(y, i)
        if s > 0:
            x, y = x - ys, y + xs
        else:
            x, y = x + ys, y - xs
    return x, y


def _compensate(v, cfg: CordicConfig):
    g = cfg.gain_comp.raw
    if isinstance(v, np.ndarray):
        return round_shift_array(v * g, GAIN_FORMAT.frac_bits)
    return round_shift(v * g, GAIN_FORMAT.frac_bits)


def vector_internal(x: int, y: int, cfg: CordicConfig) -> tuple[int, int, DirectionSequence]:
    """Vectoring on internal-scale integers; returns (x_out, y_out, dirs) compensated."""
    k = cfg.iterations
    if x == 0 and y == 0:
        return 0, 0, DirectionSequence((1,) * k, False, True)
    prerotate = x < 0
    if prerotate:
        x, y = -x, -y
    signs = []
    for i in range(k):
        s = -1 if y >= 0 else 1
        signs.append(s)
        xs, ys = _shr(x, i), _shr(y, i)
        if s > 0:
            x, y = x - ys, y + xs
        else:
            x, y = x + ys, y - xs
    return _compensate(x, cfg), _compensate(y, cfg), DirectionSequence(tuple(signs), prerotate)


def rotate_internal(x, y, dirs: DirectionSequence, cfg: CordicConfig):
    """Rotation mode on internal-scale integers or int64 arrays, compensated."""
    if dirs.K != cfg.iterations:
        raise ContractViolation(f"direction sequence has {dirs.K} entries, CORDIC runs {cfg.iterations}")
    if dirs.degenerate:
        return x, y
    if dirs.prerotate:
        x, y = -x, -y
    x, y = _micro_rotations(x, y, dirs.signs)
    return _compensate(x, cfg), _compensate(y, cfg)


def rotate_internal_many(x: np.ndarray, y: np.ndarray, dirs: list[DirectionSequence], cfg: CordicConfig):
    """Row ``g`` of ``x``/``y`` rotated by ``dirs[g]``; bit-identical to :func:`rotate_internal` per row."""
    if len(dirs) != x.shape[0]:
        raise ContractViolation(f"{len(dirs)} direction sequences for {x.shape[0]} rows")
    for d in dirs:
        if d.K != cfg.iterations:
            raise ContractViolation(f"direction sequence has {d.K} entries, CORDIC runs {cfg.iterations}")
    active = np.array([not d.degenerate for d in dirs])
    if not active.any():
        return x, y
    flip = np.array([-1 if d.prerotate else 1 for d in dirs], dtype=np.int64)[:, None]
    signs = np.array([d.signs for d in dirs], dtype=np.int64)
    xo, yo = _micro_rotations_many(x * flip, y * flip, signs)
    xo, yo = _compensate(xo, cfg), _compensate(yo, cfg)
    keep = ~active
    xo[keep], yo[keep] = x[keep], y[keep]
    return xo, yo


def _micro_rotations_many(x, y, signs):
    for i in range(signs.shape[1]):
        s = signs[:, i:i + 1]
        xs, ys = _shr(x, i), _shr(y, i)
        x, y = x - s * ys, y + s * xs
    return x, y


def to_internal(raw, cfg: CordicConfig):
    if isinstance(raw, np.ndarray):
        return raw.astype(np.int64) << cfg.guard_bits
    return int(raw) << cfg.guard_bits


def from_internal(v, cfg: CordicConfig):
    """Round internal values back to the working format (saturating)."""
    if isinstance(v, np.ndarray):
        return saturate_array(round_shift_array(v, cfg.guard_bits), cfg.fmt)
    return FixPoint.from_raw(round_shift(int(v), cfg.guard_bits), cfg.fmt)


# --- public API on FixPoint ---------------------------------------------------

def _check_fmt(cfg: CordicConfig, *values: FixPoint) -> None:
    for v in values:
        if v.fmt != cfg.fmt:
            raise ContractViolation(f"operand format {v.fmt} does not match CORDIC format {cfg.fmt}")


def vectoring(x: FixPoint, y: FixPoint, cfg: CordicConfig) -> tuple[FixPoint, DirectionSequence]:
    """Drive ``(x, y)`` onto the positive x axis.

    Returns the gain-compensated magnitude and the applied rotation. For the
    all-zero input the magnitude is 0 and the sequence is flagged degenerate,
    which every rotation treats as the identity.
    """
    _check_fmt(cfg, x, y)
    xo, _, dirs = vector_internal(to_internal(x.raw, cfg), to_internal(y.raw, cfg), cfg)
    return from_internal(xo, cfg), dirs


def rotate(x: FixPoint, y: FixPoint, dirs: DirectionSequence, cfg: CordicConfig) -> tuple[FixPoint, FixPoint]:
    _check_fmt(cfg, x, y)
    xo, yo = rotate_internal(to_internal(x.raw, cfg), to_internal(y.raw, cfg), dirs, cfg)
    return from_internal(xo, cfg), from_internal(yo, cfg)


def angle_to_dirs(angle: float, cfg: CordicConfig | int) -> DirectionSequence:
    """Greedy sign decomposition of ``angle`` over ``atan(2**-i)``."""
    k = cfg if isinstance(cfg, int) else cfg.iterations
    if not math.isfinite(angle) or abs(angle) > math.pi + 1e-12:
        raise ContractViolation(f"angle must lie in [-pi, pi], got {angle}")
    z = round(angle * (1 << ANGLE_FRAC_BITS))
    prerotate = abs(z) > _PI_UNITS // 2
    if prerotate:
        z = z - _PI_UNITS if z > 0 else z + _PI_UNITS
    signs = []
    for a in atan_table(k):
        s = 1 if z >= 0 else -1
        signs.append(s)
        z -= s * a
    return DirectionSequence(tuple(signs), prerotate)


def angle_resolution(k: int) -> float:
    """Worst-case angle error of a K-step sequence, ``2**(1-K)`` rad."""
    return 2.0 ** (1 - k)
