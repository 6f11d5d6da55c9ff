"""Pipelined Jacobi EVD for Hermitian matrices on a fixed-point CORDIC datapath.

A 2x2 Hermitian block ``[[a, b], [conj(b), c]]`` is diagonalized in five
stages:

1. vectoring on ``b`` gives the phase ``theta``; column 2 is multiplied by
   ``exp(-i*theta)`` (right-hand rotation),
2. row 2 is multiplied by ``exp(+i*theta)`` with the same directions, which
   leaves a real symmetric block,
3. vectoring on ``((a - c)/2, b)`` gives ``2*phi``, halved into a new
   direction sequence,
4. and 5. the real Jacobi rotation by ``phi`` is applied from the left, then
   from the right.

The block unitary is ``V = diag(1, exp(-i*theta)) @ R(phi)`` and the working
matrix is updated as ``D <- V^H D V`` blockwise, while ``E <- E V``.
Off-diagonal blocks replay the forwarded directions of their row and
column pairs through the same stage order.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field

import numpy as np

from .cordic import (
    CordicConfig,
    DirectionSequence,
    angle_to_dirs,
    from_internal,
    rotate_internal,
    rotate_internal_many,
    to_internal,
    vector_internal,
)
from .errors import ConfigurationError, ContractViolation
from .fixedpoint import FixFormat, FixPoint, dequantize_array
from .ledger import CycleLedger, Phase
from .matrices import FixMatrix, HermitianMatrix


@dataclass(frozen=True)
class RotationParams:
    theta_dirs: DirectionSequence
    phi_dirs: DirectionSequence
    pair: tuple[int, int] = (0, 1)
    ordering: int = 0

    def __post_init__(self) -> None:
        if self.theta_dirs.K != self.phi_dirs.K:
            raise ContractViolation("theta and phi sequences must have the same length")
        if not self.pair[0] < self.pair[1]:
            raise ContractViolation(f"pair must be ordered i < j, got {self.pair}")

    @property
    def is_identity(self) -> bool:
        return self.theta_dirs.is_identity and self.phi_dirs.is_identity

    @classmethod
    def identity(cls, k: int, pair: tuple[int, int] = (0, 1), ordering: int = 0) -> "RotationParams":
        ident = DirectionSequence.identity(k)
        return cls(ident, ident, pair, ordering)


@dataclass(frozen=True)
class EvdCycleModel:
    """Timing of the 5-stage engine.

    Each stage is an iterative CORDIC that needs ``issue_interval`` cycles, so a
    block traverses the engine in ``pipeline_depth`` cycles and a new block
    can enter every ``issue_interval`` cycles.
    """

    pipeline_depth: int = 50
    issue_interval: int = 10
    sweeps: int = 4

    def __post_init__(self) -> None:
        for name in ("pipeline_depth", "issue_interval", "sweeps"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be at least 1")
        if self.pipeline_depth < self.issue_interval:
            raise ConfigurationError("pipeline_depth must be at least one issue interval")

    @property
    def blocks_in_flight(self) -> int:
        return self.pipeline_depth // self.issue_interval


# --- orderings and sequencing -------------------------------------------------

def parallel_ordering(N: int) -> list[list[tuple[int, int]]]:
    """Round-robin schedule: ``N - 1`` rounds of ``N / 2`` disjoint pairs.

    Signals sit on two rows, ``top = 0, 2, 4, ...`` and ``bottom = 1, 3, 5, ...``;
    the first round pairs neighbours (0,1), (2,3), ... . Between rounds index 0
    stays put and every other index moves one place around the ring.
    """
    if N < 2 or N % 2:
        raise ConfigurationError(f"parallel ordering needs an even N >= 2, got {N}")
    top = list(range(0, N, 2))
    bottom = list(range(1, N, 2))
    rounds = []
    half = N // 2
    for _ in range(N - 1):
        rounds.append([tuple(sorted((t, b))) for t, b in zip(top, bottom)])
        ring = top[1:] + bottom[::-1]
        ring = ring[-1:] + ring[:-1]
        top = [top[0]] + ring[: half - 1]
        bottom = ring[half - 1:][::-1]
    return rounds


Block = tuple[int, int]  # (row pair slot, column pair slot) within one ordering


def _slot_of(pairs: list[tuple[int, int]]) -> dict[int, int]:
    return {i: slot for slot, pair in enumerate(pairs) for i in pair}


def block_dependencies(prev_pairs: list[tuple[int, int]], pairs: list[tuple[int, int]], block: Block) -> set[Block]:
    """Blocks of the previous ordering that hold an element of ``block``."""
    owner = _slot_of(prev_pairs)
    a, b = block
    return {(owner[i], owner[j]) for i in pairs[a] for j in pairs[b]}


def naive_sequence(N: int) -> list[Block]:
    """Diagonal blocks first, then the off-diagonal blocks in row-major order."""
    h = N // 2
    return [(a, a) for a in range(h)] + [(a, b) for a in range(h) for b in range(h) if a != b]


def submatrix_sequence(ordering_index: int, N: int) -> list[Block]:
    """Hazard-free processing order for one ordering.

    Diagonal blocks go first since they produce the rotation directions. The
    off-diagonal blocks that the next ordering's diagonal blocks read are
    issued right after them, in the order the next ordering consumes them, so
    that they leave the pipeline before they are needed. Everything else
    follows in row-major order.
    """
    orderings = parallel_ordering(N)
    if not 0 <= ordering_index < len(orderings):
        raise ContractViolation(f"ordering index {ordering_index} out of range for N={N}")
    pairs = orderings[ordering_index]
    nxt = orderings[(ordering_index + 1) % len(orderings)]
    h = N // 2
    diag = [(a, a) for a in range(h)]
    urgent: list[Block] = []
    for blk in [(a, a) for a in range(h)]:
        for dep in sorted(block_dependencies(pairs, nxt, blk)):
            if dep[0] != dep[1] and dep not in urgent:
                urgent.append(dep)
    rest = [(a, b) for a in range(h) for b in range(h) if a != b and (a, b) not in urgent]
    return diag + urgent + rest


@dataclass(frozen=True)
class EvdSchedule:
    ledger: CycleLedger
    total_cycles: int
    idle_cycles: int
    boundary_idle: tuple[int, ...]
    issue_times: tuple[int, ...]
    drain_cycles: int


def simulate_evd_pipeline(N: int, model: EvdCycleModel = EvdCycleModel(), sequencing: str = "proposed") -> EvdSchedule:
    """Issue-slot simulation of the EVD engine over all sweeps.

    ``proposed`` issues blocks in :func:`submatrix_sequence` order and lets a
    block enter as soon as every previous-ordering block it reads has left the
    pipeline. ``naive`` issues in :func:`naive_sequence` order and, like a
    conventional controller, waits for the whole previous ordering to drain.
    Off-diagonal blocks never wait on their own ordering's diagonal blocks:
    directions are forwarded stage to stage in issue order.
    """
    if sequencing not in ("proposed", "naive"):
        raise ValueError(f"unknown sequencing {sequencing!r}")
    orderings = parallel_ordering(N)
    n_ord = len(orderings)
    I, depth = model.issue_interval, model.pipeline_depth
    t = 0
    idle = 0
    boundary_idle: list[int] = []
    issue_times: list[int] = []
    phases: list[Phase] = []
    done: dict[Block, int] = {}
    prev_pairs = None
    for s in range(model.sweeps):
        for o in range(n_ord):
            pairs = orderings[o]
            seq = submatrix_sequence(o, N) if sequencing == "proposed" else naive_sequence(N)
            wait_here = 0
            first = t
            new_done: dict[Block, int] = {}
            for blk in seq:
                if prev_pairs is not None:
                    if sequencing == "naive":
                        ready = max(done.values())
                    else:
                        ready = max(done[d] for d in block_dependencies(prev_pairs, pairs, blk))
                    if ready > t:
                        wait_here += ready - t
                        if not new_done:
                            first = ready
                        t = ready
                issue_times.append(t)
                new_done[blk] = t + depth
                t += I
            phases.append(Phase(f"evd_ordering[{s},{o}]", ("evd_engine",), first, t))
            if prev_pairs is not None:
                boundary_idle.append(wait_here)
            idle += wait_here
            done = new_done
            prev_pairs = pairs
    drain = depth - I
    phases.append(Phase("evd_drain", ("evd_pipeline_tail",), t, t + drain))
    ledger = CycleLedger(tuple(phases), latency=t + drain, period=t)
    return EvdSchedule(ledger, t, idle, tuple(boundary_idle), tuple(issue_times), drain)


def stage_occupancy_ok(schedule: EvdSchedule, model: EvdCycleModel) -> bool:
    """No stage ever holds two blocks in the same cycle."""
    times = schedule.issue_times
    return all(b - a >= model.issue_interval for a, b in zip(times, times[1:]))


# --- 2x2 arithmetic on internal-precision integers ---------------------------

def _rot(xr, xi, dirs, cfg):
    return rotate_internal(xr, xi, dirs, cfg)


def _apply_theta_right(sr, si, theta, cfg):
    """Column 1 times exp(-i*theta)."""
    if theta.is_identity:
        return
    sr[:, 1], si[:, 1] = _rot(sr[:, 1], si[:, 1], theta, cfg)


def _apply_theta_left(sr, si, theta, cfg):
    """Row 1 times exp(+i*theta)."""
    if theta.is_identity:
        return
    sr[1, :], si[1, :] = _rot(sr[1, :], si[1, :], theta.inverse(), cfg)


def _apply_phi_left(sr, si, phi, cfg):
    """Rows (0, 1) mixed by R(phi)^T."""
    if phi.is_identity:
        return
    x = np.concatenate([sr[0, :], si[0, :]])
    y = np.concatenate([sr[1, :], si[1, :]])
    x, y = _rot(x, y, phi, cfg)
    sr[0, :], si[0, :] = x[:2], x[2:]
    sr[1, :], si[1, :] = y[:2], y[2:]


def _apply_phi_right(sr, si, phi, cfg):
    """Columns (0, 1) mixed by R(phi)."""
    if phi.is_identity:
        return
    x = np.concatenate([sr[:, 0], si[:, 0]])
    y = np.concatenate([sr[:, 1], si[:, 1]])
    x, y = _rot(x, y, phi, cfg)
    sr[:, 0], si[:, 0] = x[:2], x[2:]
    sr[:, 1], si[:, 1] = y[:2], y[2:]


def _jacobi_phi(x: int, y: int, cfg: CordicConfig) -> DirectionSequence:
    """Half the vectoring angle of ``(x, y)``, limited to the inner rotation ``|phi| <= pi/4``."""
    if x == 0:
        # equal diagonal entries: the standard pi/4 rule, against the sign of p12
        return angle_to_dirs(-math.copysign(math.pi / 4, y), cfg)
    # the pre-rotation is dropped; clamping guards against rounding overshoot on tiny inputs
    half = vector_internal(x, y, cfg)[2].micro_angle / 2
    return angle_to_dirs(max(-math.pi / 4, min(math.pi / 4, half)), cfg)


def _diag_internal(sr: np.ndarray, si: np.ndarray, cfg: CordicConfig, trace: dict | None = None):
    """Five-stage diagonalization in place; returns (theta, phi)."""
    k = cfg.iterations
    one_lsb = 1 << cfg.guard_bits
    br, bi = int(sr[0, 1]), int(si[0, 1])
    if abs(br) < one_lsb and abs(bi) < one_lsb:
        ident = DirectionSequence.identity(k)
        return ident, ident
    _, _, theta = vector_internal(br, bi, cfg)
    _apply_theta_right(sr, si, theta, cfg)
    _apply_theta_left(sr, si, theta, cfg)
    if trace is not None:
        trace["stage2"] = (sr.copy(), si.copy())
    x = (int(sr[0, 0]) - int(sr[1, 1])) >> 1
    y = int(sr[0, 1])
    if abs(y) < one_lsb:
        phi = DirectionSequence.identity(k)
    else:
        phi = _jacobi_phi(x, y, cfg)
    _apply_phi_left(sr, si, phi, cfg)
    _apply_phi_right(sr, si, phi, cfg)
    return theta, phi


def _block_to_internal(block: FixMatrix, cfg: CordicConfig):
    return to_internal(block.re.copy(), cfg), to_internal(block.im.copy(), cfg)


def _check_block(P: FixMatrix, cfg: CordicConfig) -> None:
    if P.shape != (2, 2):
        raise ContractViolation(f"expected a 2x2 block, got {P.shape}")
    if P.fmt != cfg.fmt:
        raise ContractViolation(f"block format {P.fmt} differs from CORDIC format {cfg.fmt}")


def diagonalize_2x2(
    P: FixMatrix, cfg: CordicConfig = CordicConfig(), pair: tuple[int, int] = (0, 1), ordering: int = 0,
    trace: dict | None = None,
) -> tuple[FixMatrix, RotationParams]:
    """Diagonalize a Hermitian 2x2 block.

    Returns the rotated block (real diagonal, off-diagonal residual within a
    few LSB) and the forwarded rotation parameters. ``trace`` receives the
    stage-2 intermediate when a dict is passed.
    """
    _check_block(P, cfg)
    if abs(int(P.re[0, 1]) - int(P.re[1, 0])) > 1 or abs(int(P.im[0, 1]) + int(P.im[1, 0])) > 1 \
            or abs(int(P.im[0, 0])) > 1 or abs(int(P.im[1, 1])) > 1:
        raise ContractViolation("block is not Hermitian within 1 LSB")
    re = P.re.copy()
    im = P.im.copy()
    re[1, 0], im[1, 0] = re[0, 1], -im[0, 1]
    im[0, 0] = im[1, 1] = 0
    sr, si = to_internal(re, cfg), to_internal(im, cfg)
    internal_trace = {} if trace is not None else None
    theta, phi = _diag_internal(sr, si, cfg, internal_trace)
    if trace is not None and "stage2" in internal_trace:
        r2, i2 = internal_trace["stage2"]
        trace["stage2"] = FixMatrix(from_internal(r2, cfg), from_internal(i2, cfg), cfg.fmt)
    out = FixMatrix(from_internal(sr, cfg), from_internal(si, cfg), cfg.fmt)
    return out, RotationParams(theta, phi, pair, ordering)


def diagonal_values(P: FixMatrix) -> tuple[FixPoint, FixPoint]:
    return FixPoint(int(P.re[0, 0]), P.fmt), FixPoint(int(P.re[1, 1]), P.fmt)


def _offdiag_internal(sr, si, row: RotationParams, col: RotationParams, cfg: CordicConfig) -> None:
    _apply_theta_right(sr, si, col.theta_dirs, cfg)
    _apply_theta_left(sr, si, row.theta_dirs, cfg)
    _apply_phi_left(sr, si, row.phi_dirs, cfg)
    _apply_phi_right(sr, si, col.phi_dirs, cfg)


def rotate_offdiag(
    S: FixMatrix, row_params: RotationParams, col_params: RotationParams,
    cfg: CordicConfig = CordicConfig(), ordering: int | None = None,
) -> FixMatrix:
    """``V_row^H @ S @ V_col`` for an off-diagonal block, same stage order as diagonalization."""
    _check_block(S, cfg)
    if row_params.ordering != col_params.ordering:
        raise ContractViolation(
            f"row params from ordering {row_params.ordering}, column params from {col_params.ordering}"
        )
    if ordering is not None and row_params.ordering != ordering:
        raise ContractViolation(f"stale rotation params from ordering {row_params.ordering}, now {ordering}")
    if row_params.is_identity and col_params.is_identity:
        return S
    sr, si = _block_to_internal(S, cfg)
    _offdiag_internal(sr, si, row_params, col_params, cfg)
    return FixMatrix(from_internal(sr, cfg), from_internal(si, cfg), cfg.fmt)


# --- full EVD -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EvdResult:
    eigenvalues_raw: np.ndarray
    eigenvectors: FixMatrix
    working: FixMatrix
    fmt: FixFormat
    history: dict = field(default_factory=dict)

    @property
    def D(self) -> list[FixPoint]:
        return [FixPoint(int(v), self.fmt) for v in self.eigenvalues_raw]

    @property
    def E(self) -> FixMatrix:
        return self.eigenvectors

    @property
    def eigenvalues(self) -> np.ndarray:
        return dequantize_array(self.eigenvalues_raw, self.fmt)

    @property
    def eigenvectors_float(self) -> np.ndarray:
        return self.eigenvectors.to_complex()

    def offdiag_norm_lsb(self) -> float:
        """Frobenius norm of the working matrix's off-diagonal part, in LSB."""
        a = self.working.re.astype(float) + 1j * self.working.im.astype(float)
        np.fill_diagonal(a, 0)
        return float(np.linalg.norm(a))


def _offnorm_lsb(dr: np.ndarray, di: np.ndarray) -> float:
    a = dr.astype(float) + 1j * di.astype(float)
    np.fill_diagonal(a, 0)
    return float(np.linalg.norm(a))


def _hermitian_mismatch(dr: np.ndarray, di: np.ndarray) -> int:
    return int(max(np.abs(dr - dr.T).max(), np.abs(di + di.T).max(), np.abs(np.diag(di)).max()))


def _ordering_blockwise(dr, di, er, ei, pairs, o, g, cfg) -> None:
    """One ordering, block by block in issue order (reference path)."""
    N = dr.shape[0]
    params: list[RotationParams] = []
    for p, q in pairs:
        idx = np.ix_((p, q), (p, q))
        sr, si = dr[idx], di[idx]
        sr[1, 0], si[1, 0] = sr[0, 1], -si[0, 1]
        si[0, 0] = si[1, 1] = 0
        theta, phi = _diag_internal(sr, si, cfg)
        params.append(RotationParams(theta, phi, (p, q), g))
        dr[idx], di[idx] = sr, si
    for a, b in submatrix_sequence(o, N):
        if a == b:
            continue
        rp, cp = params[a], params[b]
        if rp.is_identity and cp.is_identity:
            continue
        idx = np.ix_(pairs[a], pairs[b])
        sr, si = dr[idx], di[idx]
        _offdiag_internal(sr, si, rp, cp, cfg)
        dr[idx], di[idx] = sr, si
    for (p, q), prm in zip(pairs, params):
        if prm.is_identity:
            continue
        cols = [p, q]
        xr, xi = er[:, cols], ei[:, cols]
        xr[:, 1], xi[:, 1] = rotate_internal(xr[:, 1], xi[:, 1], prm.theta_dirs, cfg)
        x = np.concatenate([xr[:, 0], xi[:, 0]])
        y = np.concatenate([xr[:, 1], xi[:, 1]])
        x, y = rotate_internal(x, y, prm.phi_dirs, cfg)
        xr[:, 0], xi[:, 0] = x[:N], x[N:]
        xr[:, 1], xi[:, 1] = y[:N], y[N:]
        er[:, cols], ei[:, cols] = xr, xi


def _ordering_batched(dr, di, er, ei, pairs, o, g, cfg) -> None:
    """One ordering with every stage applied to all pairs at once.

    Each matrix element sees exactly the same sequence of rotations as in
    :func:`_ordering_blockwise`, so the two paths agree bit for bit.
    """
    k = cfg.iterations
    one_lsb = 1 << cfg.guard_bits
    ps = np.array([p for p, _ in pairs])
    qs = np.array([q for _, q in pairs])
    dr[qs, ps], di[qs, ps] = dr[ps, qs], -di[ps, qs]
    di[ps, ps] = di[qs, qs] = 0
    ident = DirectionSequence.identity(k)
    thetas = []
    for p, q in pairs:
        br, bi = int(dr[p, q]), int(di[p, q])
        thetas.append(ident if abs(br) < one_lsb and abs(bi) < one_lsb else vector_internal(br, bi, cfg)[2])
    x, y = rotate_internal_many(dr[:, qs].T, di[:, qs].T, thetas, cfg)
    dr[:, qs], di[:, qs] = x.T, y.T
    x, y = rotate_internal_many(dr[qs, :], di[qs, :], [t.inverse() for t in thetas], cfg)
    dr[qs, :], di[qs, :] = x, y
    phis = []
    for (p, q), theta in zip(pairs, thetas):
        y0 = int(dr[p, q])
        if theta.is_identity or abs(y0) < one_lsb:
            phis.append(ident)
        else:
            x0 = (int(dr[p, p]) - int(dr[q, q])) >> 1
            phis.append(_jacobi_phi(x0, y0, cfg))
    N = dr.shape[0]
    x, y = rotate_internal_many(np.hstack([dr[ps, :], di[ps, :]]), np.hstack([dr[qs, :], di[qs, :]]), phis, cfg)
    dr[ps, :], di[ps, :], dr[qs, :], di[qs, :] = x[:, :N], x[:, N:], y[:, :N], y[:, N:]
    x, y = rotate_internal_many(np.hstack([dr[:, ps].T, di[:, ps].T]), np.hstack([dr[:, qs].T, di[:, qs].T]), phis, cfg)
    dr[:, ps], di[:, ps], dr[:, qs], di[:, qs] = x[:, :N].T, x[:, N:].T, y[:, :N].T, y[:, N:].T
    x, y = rotate_internal_many(er[:, qs].T, ei[:, qs].T, thetas, cfg)
    er[:, qs], ei[:, qs] = x.T, y.T
    x, y = rotate_internal_many(np.hstack([er[:, ps].T, ei[:, ps].T]), np.hstack([er[:, qs].T, ei[:, qs].T]), phis, cfg)
    er[:, ps], ei[:, ps], er[:, qs], ei[:, qs] = x[:, :N].T, x[:, N:].T, y[:, :N].T, y[:, N:].T


def evd_run(
    Yc: HermitianMatrix, model: EvdCycleModel = EvdCycleModel(), cordic: CordicConfig | None = None,
    record: bool = False, blockwise: bool = False,
) -> tuple[EvdResult, CycleLedger]:
    """Run ``model.sweeps`` sweeps of parallel-ordered Jacobi on ``Yc``.

    The working matrix and the eigenvector registers keep the CORDIC guard
    bits between orderings and are rounded to the working format on output.
    ``blockwise`` processes one 2x2 block at a time through
    :func:`diagonalize_2x2`-style stages instead of batching each stage; the
    results are identical and the batched path is much faster.

    With ``record`` the result's ``history`` holds, in LSB of the working
    format, the trace after every ordering, the off-diagonal norm after every
    sweep and the largest Hermitian mismatch seen after any ordering.
    """
    N = Yc.N
    if N < 2 or N % 2:
        raise ConfigurationError(f"EVD needs an even N >= 2, got {N}")
    cfg = cordic or CordicConfig(fmt=Yc.fmt)
    if cfg.fmt != Yc.fmt:
        raise ContractViolation(f"CORDIC format {cfg.fmt} differs from matrix format {Yc.fmt}")
    fmt = cfg.fmt
    dr, di = to_internal(Yc.re, cfg), to_internal(Yc.im, cfg)
    er = np.zeros((N, N), np.int64)
    ei = np.zeros((N, N), np.int64)
    er[np.diag_indices(N)] = to_internal(1 << fmt.frac_bits, cfg)
    step = _ordering_blockwise if blockwise else _ordering_batched
    orderings = parallel_ordering(N)
    history: dict = {"trace": [], "offnorm": [], "hermitian_mismatch": 0}
    g = 0
    for _ in range(model.sweeps):
        for o, pairs in enumerate(orderings):
            step(dr, di, er, ei, pairs, o, g, cfg)
            if record:
                ore, oim = from_internal(dr, cfg), from_internal(di, cfg)
                history["trace"].append(int(np.trace(ore)))
                history["hermitian_mismatch"] = max(history["hermitian_mismatch"], _hermitian_mismatch(ore, oim))
            g += 1
        if record:
            history["offnorm"].append(_offnorm_lsb(from_internal(dr, cfg), from_internal(di, cfg)))
    schedule = simulate_evd_pipeline(N, model)
    out_re, out_im = from_internal(dr, cfg), from_internal(di, cfg)
    result = EvdResult(
        eigenvalues_raw=np.diag(out_re).copy(),
        eigenvectors=FixMatrix(from_internal(er, cfg), from_internal(ei, cfg), fmt),
        working=FixMatrix(out_re, out_im, fmt),
        fmt=fmt,
        history=history if record else {},
    )
    return result, schedule.ledger
