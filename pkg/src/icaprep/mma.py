"""Time-multiplexed complex matrix multiplication array (ECMMA).

One column of ``2m`` PEs sits behind ``m`` complex multipliers. Each cycle
the array takes one column ``k`` of ``X`` and one conjugated element
``Y[j, k]``; multiplier ``i`` forms ``X[i, k] * conj(Y[j, k])`` and PE pair
``i`` adds the real and imaginary parts into the accumulator register for
output element ``(i, j)``. A full ``m x n`` pass takes exactly ``m * n``
cycles with every PE busy on every cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .fixedpoint import (
    DEFAULT_FORMAT,
    FixFormat,
    round_shift,
    round_shift_array,
    saturate_array,
    saturate_raw,
)
from .matrices import FixMatrix


@dataclass(frozen=True)
class EcmmaConfig:
    m: int
    n: int
    fmt: FixFormat = DEFAULT_FORMAT
    shift: int = 0  # extra writeback right-shift; log2(n) turns the sum into a mean

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise ConfigurationError(f"ECMMA needs m, n >= 1, got m={self.m}, n={self.n}")
        if self.shift < 0:
            raise ConfigurationError("writeback shift must be non-negative")


@dataclass(frozen=True)
class TraceEntry:
    cycle: int
    column: int
    y_row: int
    active_pes: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class EcmmaResult:
    product: FixMatrix
    cycles: int
    trace: tuple[TraceEntry, ...] | None = field(default=None)

    def utilization(self, cfg: EcmmaConfig) -> float:
        if not self.trace:
            raise ValueError("utilization needs a run with trace=True")
        busy = sum(len(t.active_pes) for t in self.trace)
        return busy / (2 * cfg.m * len(self.trace))


def _check_operand(name: str, a: FixMatrix, cfg: EcmmaConfig) -> None:
    if a.shape != (cfg.m, cfg.n):
        raise ContractViolation(f"{name} has shape {a.shape}, ECMMA is configured for {(cfg.m, cfg.n)}")
    if a.fmt != cfg.fmt:
        raise ContractViolation(f"{name} format {a.fmt} differs from ECMMA format {cfg.fmt}")


def ecmma_run(X: FixMatrix, Y: FixMatrix, cfg: EcmmaConfig, trace: bool = False) -> EcmmaResult:
    """Compute ``X @ Y^H`` cycle by cycle with wide accumulators."""
    _check_operand("X", X, cfg)
    _check_operand("Y", Y, cfg)
    m, n = cfg.m, cfg.n
    # Python ints give exact wide accumulators at any word length
    xr, xi = X.re.tolist(), X.im.tolist()
    yr, yi = Y.re.tolist(), Y.im.tolist()
    acc_re = [[0] * m for _ in range(m)]
    acc_im = [[0] * m for _ in range(m)]
    log: list[TraceEntry] = []
    pes = tuple(range(2 * m))
    rows = range(m)
    cycle = 0
    for k in range(n):
        for j in range(m):
            # conjugation at operand fetch: Y[j, k] enters as (yr, -yi)
            br, bi = yr[j][k], -yi[j][k]
            for i in rows:
                ar, ai = xr[i][k], xi[i][k]
                acc_re[i][j] += ar * br - ai * bi
                acc_im[i][j] += ar * bi + ai * br
            if trace:
                log.append(TraceEntry(cycle, k, j, pes))
            cycle += 1
    total = cfg.fmt.frac_bits + cfg.shift
    product = FixMatrix(
        saturate_array(round_shift_array(np.array(acc_re, dtype=object), total), cfg.fmt),
        saturate_array(round_shift_array(np.array(acc_im, dtype=object), total), cfg.fmt),
        cfg.fmt,
    )
    return EcmmaResult(product, cycle, tuple(log) if trace else None)


def naive_product(X: FixMatrix, Y: FixMatrix, shift: int = 0) -> FixMatrix:
    """Reference ``X @ Y^H`` as a plain triple loop over Python integers."""
    m, n = X.shape
    p = Y.shape[0]
    fmt = X.fmt
    re = np.zeros((m, p), dtype=np.int64)
    im = np.zeros((m, p), dtype=np.int64)
    xr, xi, yr, yi = X.re.tolist(), X.im.tolist(), Y.re.tolist(), Y.im.tolist()
    for i in range(m):
        for j in range(p):
            sr = si = 0
            for k in range(n):
                ar, ai = xr[i][k], xi[i][k]
                br, bi = yr[j][k], yi[j][k]
                sr += ar * br + ai * bi
                si += ai * br - ar * bi
            re[i, j] = saturate_raw(round_shift(sr, fmt.frac_bits + shift), fmt)[0]
            im[i, j] = saturate_raw(round_shift(si, fmt.frac_bits + shift), fmt)[0]
    return FixMatrix(re, im, fmt)


def ecmma_resource_census(cfg: EcmmaConfig) -> dict[str, int]:
    m = cfg.m
    return {
        "PEs": 2 * m,
        "adders": 2 * m,
        "multiplexors": 4 * m,
        "registers": 2 * m * m + 2 * m,
        "cycles_per_pass": m * cfg.n,
    }


def reference_mma_census(cfg: EcmmaConfig) -> dict[str, int]:
    """Element counts of the fully parallel m x m array used for comparison."""
    m = cfg.m
    return {
        "PEs": 2 * m * m,
        "adders": 2 * m * m,
        "multiplexors": 0,
        "registers": 2 * m * m + 2 * m,
        "cycles_per_pass": m * cfg.n,
    }
