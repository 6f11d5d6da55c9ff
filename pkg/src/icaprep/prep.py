"""Centering unit and covariance unit with their overlapped schedule.

Signals are handled two at a time. For each pair the centering components
spend ``M`` cycles accumulating the row means and ``M`` cycles subtracting
them; the centered samples stream into memory and, simultaneously, into the
diagonal submatrix component (DSC), which forms the two variances. While the
next pair is being accumulated (no memory writes happen then) the DSC reads
the stored pair back and forms their cross-covariance. The remaining
off-diagonal 2x2 blocks go through the ECMMA, ``2M`` cycles each.

Index conventions are zero-based throughout: pair ``p`` holds signals
``2p`` and ``2p + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .fixedpoint import (
    CFix,
    FixFormat,
    cmac_conj_array,
    log2_exact,
    mean_accumulate_array,
    saturate_array,
)
from .ledger import CycleLedger, Scheduler
from .matrices import FixMatrix, HermitianMatrix, SignalMatrix
from .mma import EcmmaConfig, ecmma_run

# hardware resources seen by the scheduler
RX_PORT = "rx_mem"       # received-signal memory: input writes and CC reads
CC_BANK = "cc"
MEM_PORT = "centered_mem"  # single port shared by CC writeback and DSC reads
DSC = "dsc"
ECMMA = "ecmma"


def _row(a: FixMatrix) -> tuple[np.ndarray, np.ndarray]:
    if len(a.shape) != 1:
        raise ContractViolation(f"expected a 1-D row, got shape {a.shape}")
    return a.re, a.im


def center_pair(y_a: FixMatrix, y_b: FixMatrix) -> tuple[FixMatrix, tuple[CFix, CFix], int]:
    """Center two rows concurrently; returns (2 x M centered rows, means, cycles)."""
    if y_a.fmt != y_b.fmt:
        raise ContractViolation("rows must share a format")
    ar, ai = _row(y_a)
    br, bi = _row(y_b)
    if ar.shape != br.shape:
        raise ContractViolation("rows must have equal length")
    m = ar.shape[0]
    log2_exact(m)
    fmt = y_a.fmt
    re = np.stack([ar, br])
    im = np.stack([ai, bi])
    mean_re = mean_accumulate_array(re, fmt)
    mean_im = mean_accumulate_array(im, fmt)
    centered = FixMatrix(
        saturate_array(re - mean_re[:, None], fmt),
        saturate_array(im - mean_im[:, None], fmt),
        fmt,
    )
    means = tuple(CFix.from_raw(int(mean_re[k]), int(mean_im[k]), fmt) for k in range(2))
    return centered, means, 2 * m


def _variance(r: np.ndarray, i: np.ndarray, fmt: FixFormat, shift: int) -> CFix:
    re, _ = cmac_conj_array(r, i, r, i, fmt, shift)
    # sum of |z|^2 is real: the imaginary accumulator is identically zero
    return CFix.from_raw(int(re), 0, fmt)


def dsc_compute_diag(y_bar_a: FixMatrix, y_bar_b: FixMatrix) -> tuple[CFix, CFix, int]:
    ar, ai = _row(y_bar_a)
    br, bi = _row(y_bar_b)
    m = ar.shape[0]
    shift = log2_exact(m)
    fmt = y_bar_a.fmt
    return _variance(ar, ai, fmt, shift), _variance(br, bi, fmt, shift), m


def dsc_compute_offdiag(y_bar_a: FixMatrix, y_bar_b: FixMatrix) -> tuple[CFix, int]:
    ar, ai = _row(y_bar_a)
    br, bi = _row(y_bar_b)
    m = ar.shape[0]
    shift = log2_exact(m)
    re, im = cmac_conj_array(ar, ai, br, bi, y_bar_a.fmt, shift)
    return CFix.from_raw(int(re), int(im), y_bar_a.fmt), m


def submatrix_count(N: int) -> int:
    return (N * N - 2 * N) // 8


def submatrix_plan(N: int) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Off-diagonal 2x2 blocks above the block diagonal, in row-major block order."""
    if N % 2:
        raise ConfigurationError(f"N must be even, got {N}")
    if N < 2:
        raise ConfigurationError(f"N must be at least 2, got {N}")
    pairs = [(2 * p, 2 * p + 1) for p in range(N // 2)]
    plan = [(pairs[a], pairs[b]) for a in range(len(pairs)) for b in range(a + 1, len(pairs))]
    assert len(plan) == submatrix_count(N)
    return plan


def steady_state_period(N: int, M: int) -> int:
    """Closed-form covariance period, valid for N >= 8."""
    return (N * N * M - 2 * N * M) // 4


def schedule_prep(N: int, M: int, matrices: int = 4) -> CycleLedger:
    """Event-driven schedule of back-to-back covariance computations.

    ``latency`` is the first matrix's completion time; ``period`` is the gap
    between the last two completions, which is the steady state once the
    pipeline has filled.
    """
    if N < 2 or N % 2:
        raise ConfigurationError(f"N must be even and at least 2, got {N}")
    log2_exact(M)
    if matrices < 1:
        raise ConfigurationError("need at least one matrix to schedule")
    sched = Scheduler()
    plan = submatrix_plan(N)
    pair_count = N // 2
    rx_free = 0  # the received memory holds one matrix; refilled once fully read
    completions = []
    for k in range(matrices):
        write = sched.schedule(f"write[{k}]", (RX_PORT,), rx_free, N * M // 2, k)
        centered_at = []
        prev = write.end
        for p in range(pair_count):
            acc = sched.schedule(f"cc_acc[{k},{p}]", (CC_BANK, RX_PORT), prev, M, k)
            sub_res = (CC_BANK, RX_PORT, MEM_PORT)
            t = max(sched.earliest(sub_res, acc.end, M), sched.earliest((DSC,), acc.end, M))
            while True:
                t2 = max(sched.earliest(sub_res, t, M), sched.earliest((DSC,), t, M))
                if t2 == t:
                    break
                t = t2
            sub = sched.place(f"cc_sub[{k},{p}]", sub_res, t, M, k)
            sched.place(f"dsc_diag[{k},{p}]", (DSC,), t, M, k)
            sched.schedule(f"dsc_off[{k},{p}]", (DSC, MEM_PORT), sub.end, M, k)
            centered_at.append(sub.end)
            prev = sub.end
        rx_free = prev
        for (ra, _), (ca, _) in plan:
            a, b = ra // 2, ca // 2
            sched.schedule(f"ecmma[{k},{a},{b}]", (ECMMA,), max(centered_at[a], centered_at[b]), 2 * M, k)
        completions.append(max(p.end for p in sched.phases if p.matrix == k))
    latency = completions[0]
    period = completions[-1] - completions[-2] if matrices > 1 else latency
    return CycleLedger(tuple(sched.phases), latency, period)


@dataclass(frozen=True)
class PrepResult:
    centered: SignalMatrix
    covariance: HermitianMatrix
    ledger: CycleLedger
    means: tuple[CFix, ...]

    def __iter__(self):
        # allows ``y_bar, yc, ledger = run_prep(y)``
        return iter((self.centered, self.covariance, self.ledger))


def compute_covariance(Y: SignalMatrix) -> tuple[SignalMatrix, HermitianMatrix, tuple[CFix, ...]]:
    """Arithmetic of the centering and covariance units, in plan order."""
    N, M = Y.N, Y.M
    fmt = Y.fmt
    shift = log2_exact(M)
    bar_re = np.zeros((N, M), np.int64)
    bar_im = np.zeros((N, M), np.int64)
    up_re = np.zeros((N, N), np.int64)
    up_im = np.zeros((N, N), np.int64)
    means: list[CFix] = []
    for p in range(N // 2):
        a, b = 2 * p, 2 * p + 1
        centered, pair_means, _ = center_pair(Y.data[a], Y.data[b])
        means.extend(pair_means)
        bar_re[a:b + 1], bar_im[a:b + 1] = centered.re, centered.im
        ya, yb = centered[0], centered[1]
        caa, cbb, _ = dsc_compute_diag(ya, yb)
        cab, _ = dsc_compute_offdiag(ya, yb)
        up_re[a, a], up_re[b, b] = caa.re.raw, cbb.re.raw
        up_re[a, b], up_im[a, b] = cab.re.raw, cab.im.raw
    y_bar = SignalMatrix.from_raw(bar_re, bar_im, fmt)
    cfg = EcmmaConfig(m=2, n=M, fmt=fmt, shift=shift)
    for (r0, r1), (c0, c1) in submatrix_plan(N):
        block = ecmma_run(y_bar.data[r0:r1 + 1], y_bar.data[c0:c1 + 1], cfg).product
        up_re[r0:r1 + 1, c0:c1 + 1] = block.re
        up_im[r0:r1 + 1, c0:c1 + 1] = block.im
    return y_bar, HermitianMatrix(up_re, up_im, fmt), tuple(means)


def run_prep(Y: SignalMatrix, matrices: int = 4) -> PrepResult:
    y_bar, yc, means = compute_covariance(Y)
    return PrepResult(y_bar, yc, schedule_prep(Y.N, Y.M, matrices), means)
