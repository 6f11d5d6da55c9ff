"""Acceptance checks shared by the test suite and ``icaprep check``.

Each check returns a :class:`CriterionResult`; runtime budgets are part of
the verdict.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .evd import EvdCycleModel, evd_run, parallel_ordering, simulate_evd_pipeline, stage_occupancy_ok
from .fixedpoint import FixFormat, saturation_tracking
from .matrices import FixMatrix, HermitianMatrix, SignalMatrix
from .mma import EcmmaConfig, ecmma_resource_census, ecmma_run, naive_product
from .oracle import SCENARIO_KINDS, generate_bss, oracle_cov, oracle_evd, oracle_pipeline, whitening_matrix
from .pipeline import (
    LATENCY_TOLERANCE,
    PUBLISHED_LATENCY,
    PUBLISHED_PERIOD,
    PUBLISHED_PREP_LATENCY,
    TOL_COV,
    TOL_EIG,
    TOL_OFFDIAG,
    TOL_RECON,
    TOL_UNITARY,
    TOL_WHITE,
    RunConfig,
    cmd_run,
    system_ledger,
)
from .prep import compute_covariance, schedule_prep, steady_state_period

CLOCK_HZ = 250e6


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    budget: float | None

    def line(self) -> str:
        budget = f" (budget {self.budget:g} s)" if self.budget else ""
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.number}. {self.name}: {self.detail}; {self.elapsed:.2f} s{budget}"


def _timed(number: int, name: str, budget: float | None, body: Callable[[], tuple[bool, str]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = body()
    elapsed = time.perf_counter() - t0
    within = budget is None or elapsed < budget
    if not within:
        detail += f"; over the time budget"
    return CriterionResult(number, name, ok and within, detail, elapsed, budget)


def _default_system():
    prep = schedule_prep(8, 512)
    evd = simulate_evd_pipeline(8, EvdCycleModel()).ledger
    return prep, evd, system_ledger(prep, evd)


def covariance_period() -> CriterionResult:
    def body():
        led = schedule_prep(8, 512)
        bad = []
        for N in (8, 10, 12, 16):
            for M in (64, 128, 256, 512, 1024):
                got = schedule_prep(N, M)
                if got.period != steady_state_period(N, M) or got.conflicts():
                    bad.append((N, M, got.period))
        ok = led.period == PUBLISHED_PERIOD and not bad
        return ok, f"N=8 M=512 period {led.period}; formula mismatches {bad or 'none'}"

    return _timed(1, "covariance period", 1.0, body)


def end_to_end_latency() -> CriterionResult:
    def body():
        prep, _, system = _default_system()
        d = (system.latency - PUBLISHED_LATENCY) / PUBLISHED_LATENCY
        dp = (prep.latency - PUBLISHED_PREP_LATENCY) / PUBLISHED_PREP_LATENCY
        ok = abs(d) <= LATENCY_TOLERANCE and abs(dp) <= LATENCY_TOLERANCE
        return ok, (
            f"total {system.latency} vs {PUBLISHED_LATENCY} ({d:+.2%}); "
            f"centering+covariance {prep.latency} vs {PUBLISHED_PREP_LATENCY} ({dp:+.2%})"
        )

    return _timed(2, "end-to-end latency", 1.0, body)


def evd_cycle_calibration() -> CriterionResult:
    def body():
        model = EvdCycleModel()
        good = simulate_evd_pipeline(8, model, "proposed")
        naive = simulate_evd_pipeline(8, model, "naive")
        ok = (
            good.total_cycles == 4480
            and good.idle_cycles == 0
            and set(naive.boundary_idle) == {40}
            and stage_occupancy_ok(good, model)
        )
        return ok, (
            f"{good.total_cycles} cycles; idle per ordering boundary {good.idle_cycles} (proposed) "
            f"vs {sorted(set(naive.boundary_idle))} (naive)"
        )

    return _timed(3, "EVD cycle calibration", 1.0, body)


def throughput_identity() -> CriterionResult:
    def body():
        report = cmd_run(RunConfig(clock_hz=CLOCK_HZ))
        thr = report.throughput_matrices_per_sec
        ok = (
            report.ledger.period == PUBLISHED_PERIOD
            and thr == CLOCK_HZ / report.ledger.period
            and round(thr / 1e3, 1) == 40.7
        )
        return ok, f"{CLOCK_HZ:g} / {report.ledger.period} = {thr:.1f} matrices/s"

    return _timed(4, "throughput identity", None, body)


def mma_equivalence(cases: int = 10_000, seed: int = 5) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        mismatches = 0
        bad_cycles = 0
        for _ in range(cases):
            m = int(rng.integers(1, 5))
            n = int(rng.integers(1, 65))
            wl = int(rng.integers(4, 17))
            fmt = FixFormat(wl, int(rng.integers(0, wl)))
            shift = int(rng.integers(0, 7))

            def draw():
                return rng.integers(fmt.raw_min, fmt.raw_max + 1, (m, n))

            X = FixMatrix(draw(), draw(), fmt)
            Y = FixMatrix(draw(), draw(), fmt)
            res = ecmma_run(X, Y, EcmmaConfig(m, n, fmt, shift))
            mismatches += not (res.product == naive_product(X, Y, shift))
            bad_cycles += res.cycles != m * n
        census_ok = all(
            ecmma_resource_census(EcmmaConfig(m, 8)) == {
                "PEs": 2 * m, "adders": 2 * m, "multiplexors": 4 * m,
                "registers": 2 * m * m + 2 * m, "cycles_per_pass": 8 * m,
            }
            for m in range(1, 9)
        )
        ok = mismatches == 0 and bad_cycles == 0 and census_ok
        return ok, f"{cases} cases, {mismatches} mismatches, {bad_cycles} cycle-count errors, census {'ok' if census_ok else 'wrong'}"

    return _timed(5, "MMA equivalence and cost", 10.0, body)


def scenario(seed: int, N: int = 8, M: int = 512):
    kind = SCENARIO_KINDS[seed % len(SCENARIO_KINDS)]
    return generate_bss(N, M, seed, kind)


def numerical_accuracy(count: int = 100) -> CriterionResult:
    def body():
        fmt = FixFormat(10, 8)
        lsb = fmt.lsb
        worst = dict(cov=0.0, eig=0.0, unitary=0.0, recon=0.0)
        saturations = 0
        for seed in range(count):
            sc = scenario(seed)
            with saturation_tracking() as sat:
                Y = SignalMatrix.from_complex(sc.Y, fmt)
                _, yc, _ = compute_covariance(Y)
                res, _ = evd_run(yc)
            saturations += sat.count
            ref = oracle_pipeline(Y.to_complex())
            C = yc.to_complex()
            D, E = res.eigenvalues, res.eigenvectors_float
            worst["cov"] = max(worst["cov"], np.abs(C - ref.covariance).max() / lsb)
            worst["eig"] = max(worst["eig"], np.abs(np.sort(D) - np.sort(ref.eigenvalues)).max() / lsb)
            worst["unitary"] = max(worst["unitary"], np.abs(E.conj().T @ E - np.eye(8)).max() / lsb)
            worst["recon"] = max(worst["recon"], np.abs(E @ np.diag(D) @ E.conj().T - C).max() / lsb)
        ok = (
            worst["cov"] <= TOL_COV and worst["eig"] <= TOL_EIG and worst["unitary"] <= TOL_UNITARY
            and worst["recon"] <= TOL_RECON and saturations == 0
        )
        return ok, (
            f"{count} scenarios, worst LSB: cov {worst['cov']:.2f}, eig {worst['eig']:.2f}, "
            f"EhE {worst['unitary']:.2f}, recon {worst['recon']:.2f}; saturations {saturations}"
        )

    return _timed(6, "numerical accuracy", 60.0, body)


def random_psd(rng: np.random.Generator, N: int = 8) -> np.ndarray:
    A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    C = A @ A.conj().T
    return C / np.abs(C).max()


def jacobi_convergence(count: int = 100, seed: int = 7) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        N = 8
        non_monotone = 0
        worst_fixed = 0.0
        for _ in range(count):
            A = random_psd(rng, N)
            hist = oracle_evd(A, tol=1e-12).offnorm_history
            above = [h for h in hist if h >= 1e-12]
            # every sweep that starts above the threshold must strictly shrink the off-norm
            if any(b >= a for a, b in zip(hist, hist[1:]) if a >= 1e-12) or hist[-1] >= 1e-12 or not above:
                non_monotone += 1
            lam_max = np.linalg.eigvalsh(A).max()
            yc = HermitianMatrix.from_complex(A * (1.5 / lam_max))
            res, _ = evd_run(yc)
            worst_fixed = max(worst_fixed, res.offdiag_norm_lsb())
        bound = N * TOL_OFFDIAG
        ok = non_monotone == 0 and worst_fixed <= bound
        return ok, (
            f"{count} matrices, {non_monotone} without strict decrease; "
            f"fixed-point off-norm {worst_fixed:.2f} LSB (bound {bound})"
        )

    return _timed(7, "Jacobi convergence", 10.0, body)


def ordering_combinatorics() -> CriterionResult:
    def body():
        bad = []
        for N in range(2, 17, 2):
            rounds = parallel_ordering(N)
            seen = [p for r in rounds for p in r]
            disjoint = all(len({i for p in r for i in p}) == N for r in rounds)
            shape = len(rounds) == N - 1 and all(len(r) == N // 2 for r in rounds)
            cover = sorted(seen) == list(itertools.combinations(range(N), 2))
            if not (disjoint and shape and cover):
                bad.append(N)
        return not bad, f"even N in 2..16, failures {bad or 'none'}"

    return _timed(8, "ordering combinatorics", 1.0, body)


def whiteness(count: int = 30) -> CriterionResult:
    def body():
        fmt = FixFormat(10, 8)
        worst_float = 0.0
        worst_fixed = 0.0
        for seed in range(count):
            sc = scenario(1000 + seed)
            ref = oracle_pipeline(sc.Y)
            worst_float = max(worst_float, np.abs(oracle_cov(ref.whitened) - np.eye(sc.N)).max())
            Y = SignalMatrix.from_complex(sc.Y, fmt)
            y_bar, yc, _ = compute_covariance(Y)
            res, _ = evd_run(yc)
            Z = whitening_matrix(res.eigenvalues, res.eigenvectors_float) @ y_bar.to_complex()
            worst_fixed = max(worst_fixed, np.abs(oracle_cov(Z) - np.eye(sc.N)).max() / fmt.lsb)
        ok = worst_float <= 1e-8 and worst_fixed <= TOL_WHITE
        return ok, f"{count} scenarios, oracle {worst_float:.2e}, quantized {worst_fixed:.2f} LSB"

    return _timed(9, "whiteness", 10.0, body)


CRITERIA: tuple[Callable[[], CriterionResult], ...] = (
    covariance_period,
    end_to_end_latency,
    evd_cycle_calibration,
    throughput_identity,
    mma_equivalence,
    numerical_accuracy,
    jacobi_convergence,
    ordering_combinatorics,
    whiteness,
)


def run_all(selected: set[int] | None = None) -> list[CriterionResult]:
    return [c() for i, c in enumerate(CRITERIA, 1) if selected is None or i in selected]
