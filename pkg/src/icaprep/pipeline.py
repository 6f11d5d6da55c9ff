"""End-to-end runs: signals in, cycle ledger and accuracy report out."""

from __future__ import annotations

import csv
import io as _io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction

import numpy as np

from .cordic import CordicConfig
from .errors import ConfigurationError, RankDeficientError
from .evd import EvdCycleModel, evd_run
from .fixedpoint import FixFormat, log2_exact, saturation_tracking
from .io import load_signals
from .ledger import CycleLedger, Phase
from .matrices import SignalMatrix
from .oracle import SCENARIO_KINDS, generate_bss, oracle_pipeline, oracle_cov, whitening_matrix
from .prep import run_prep, steady_state_period

PUBLISHED_LATENCY = 15237
PUBLISHED_PREP_LATENCY = 10757
PUBLISHED_PERIOD = 6144
LATENCY_TOLERANCE = 0.05

# per-component limits in LSB of the working format
TOL_COV = 4
TOL_EIG = 8
TOL_UNITARY = 8
TOL_RECON = 16
TOL_OFFDIAG = 4
TOL_WHITE = 10


@dataclass(frozen=True)
class RunConfig:
    N: int = 8
    M: int = 512
    word_length: int = 10
    frac_bits: int = 8
    cordic_iters: int = 10
    evd_sweeps: int = 4
    issue_interval: int = 10
    pipeline_depth: int = 50
    clock_hz: float = 250e6
    seed: int = 0
    scenario_kind: str = "qpsk_sources"
    peak: float = 1.8
    cond_max: float = 1.5
    input_path: str | None = None
    input_format: str | None = None
    output_path: str | None = None

    def __post_init__(self) -> None:
        if self.N < 2 or self.N % 2:
            raise ConfigurationError(f"N must be even and at least 2, got {self.N}")
        log2_exact(self.M)
        if self.M < self.N and self.input_path is None:
            raise ConfigurationError(f"M must be at least N for generated scenarios, got M={self.M}")
        self.fmt  # validates word_length / frac_bits
        if self.cordic_iters < 1:
            raise ConfigurationError("cordic_iters must be at least 1")
        self.cycle_model
        if not (math.isfinite(self.clock_hz) and self.clock_hz > 0):
            raise ConfigurationError(f"clock_hz must be positive, got {self.clock_hz}")
        if self.scenario_kind not in SCENARIO_KINDS:
            raise ConfigurationError(f"unknown scenario kind {self.scenario_kind!r}; expected one of {SCENARIO_KINDS}")
        if not self.peak > 0:
            raise ConfigurationError("peak must be positive")

    @property
    def fmt(self) -> FixFormat:
        return FixFormat(self.word_length, self.frac_bits)

    @property
    def cycle_model(self) -> EvdCycleModel:
        return EvdCycleModel(self.pipeline_depth, self.issue_interval, self.evd_sweeps)

    @property
    def cordic(self) -> CordicConfig:
        return CordicConfig(self.cordic_iters, self.fmt)

    @property
    def is_published_config(self) -> bool:
        """The configuration whose cycle counts are published."""
        return (self.N, self.M) == (8, 512) and self.cycle_model == EvdCycleModel()

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


def system_ledger(prep: CycleLedger, evd: CycleLedger) -> CycleLedger:
    """Prep of matrix 0 followed by its EVD.

    The period is the covariance period: the EVD of one matrix overlaps the
    covariance of the next. When the EVD is the slower unit (small ``M``)
    the sustained rate is set by ``max(prep.period, evd.period)`` instead,
    which reports carry as ``bottleneck_period``.
    """
    shift = prep.latency
    evd_phases = tuple(Phase(p.name, p.resources, p.start + shift, p.end + shift, 0) for p in evd.phases)
    return CycleLedger(prep.phases + evd_phases, prep.latency + evd.latency, prep.period)


def throughput_display(clock_hz: float, period: int) -> str:
    return f"{clock_hz / period / 1e3:.1f}k"


@dataclass(frozen=True, eq=False)
class RunReport:
    config: RunConfig
    prep_ledger: CycleLedger
    evd_ledger: CycleLedger
    ledger: CycleLedger
    accuracy: dict
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def bottleneck_period(self) -> int:
        return max(self.prep_ledger.period, self.evd_ledger.period)

    @property
    def throughput_matrices_per_sec(self) -> float:
        return self.config.clock_hz / self.ledger.period

    def to_dict(self) -> dict:
        period = self.ledger.period
        exact = Fraction(self.config.clock_hz).limit_denominator() / period
        return {
            "schema": 1,
            "config": self.config.to_dict(),
            "ledger": {
                "latency": self.ledger.latency,
                "period": period,
                "prep_latency": self.prep_ledger.latency,
                "prep_period": self.prep_ledger.period,
                "evd_latency": self.evd_ledger.latency,
                "evd_period": self.evd_ledger.period,
                "bottleneck_period": self.bottleneck_period,
                "phases": [p.to_dict() for p in self.ledger.phases],
            },
            "throughput": {
                "matrices_per_sec": self.throughput_matrices_per_sec,
                "exact": f"{exact.numerator}/{exact.denominator}",
                "display": throughput_display(self.config.clock_hz, period),
                "micro_matrices_per_cycle": self.ledger.micro_matrices_per_cycle,
            },
            "accuracy": self.accuracy,
            "checks": self.checks,
            "passed": self.passed,
        }


def _input_signals(cfg: RunConfig) -> SignalMatrix:
    if cfg.input_path is not None:
        Y = load_signals(cfg.input_path, cfg.input_format)
        if Y.fmt != cfg.fmt:
            raise ConfigurationError(f"file format {Y.fmt} differs from configured {cfg.fmt}")
        if (Y.N, Y.M) != (cfg.N, cfg.M):
            raise ConfigurationError(f"file holds N={Y.N}, M={Y.M}; configured N={cfg.N}, M={cfg.M}")
        return Y
    sc = generate_bss(cfg.N, cfg.M, cfg.seed, cfg.scenario_kind, cond_max=cfg.cond_max, peak=cfg.peak)
    return SignalMatrix.from_complex(sc.Y, cfg.fmt)


def _max_lsb(a: np.ndarray, lsb: float) -> float:
    return float(np.abs(a).max()) / lsb


def measure_accuracy(Y: SignalMatrix, cfg: RunConfig) -> tuple[dict, CycleLedger, CycleLedger]:
    """Fixed-point pipeline against the float oracle on the same quantized input."""
    fmt = cfg.fmt
    lsb = fmt.lsb
    with saturation_tracking() as sat:
        prep = run_prep(Y)
        evd, evd_ledger = evd_run(prep.covariance, cfg.cycle_model, cfg.cordic)
    ref = oracle_pipeline(Y.to_complex())
    C = prep.covariance.to_complex()
    D = evd.eigenvalues
    E = evd.eigenvectors_float
    N = Y.N
    acc = {
        "covariance_max_err_lsb": _max_lsb(C - ref.covariance, lsb),
        "eigenvalue_max_err_lsb": _max_lsb(np.sort(D) - np.sort(ref.eigenvalues), lsb),
        "unitarity_max_err_lsb": _max_lsb(E.conj().T @ E - np.eye(N), lsb),
        "reconstruction_max_err_lsb": _max_lsb(E @ np.diag(D) @ E.conj().T - C, lsb),
        "offdiag_norm_lsb": evd.offdiag_norm_lsb(),
        "saturation_count": sat.count,
    }
    try:
        Z = whitening_matrix(D, E) @ prep.centered.to_complex()
        acc["whiteness_max_err_lsb"] = _max_lsb(oracle_cov(Z) - np.eye(N), lsb)
    except RankDeficientError as exc:
        acc["whiteness_max_err_lsb"] = None
        acc["whiteness_error"] = str(exc)
    acc["eigenvalue_max_err"] = acc["eigenvalue_max_err_lsb"] * lsb
    return acc, prep.ledger, evd_ledger


def evaluate_checks(cfg: RunConfig, acc: dict, prep: CycleLedger, system: CycleLedger) -> dict:
    white = acc["whiteness_max_err_lsb"]
    checks = {
        "covariance_within_4lsb": acc["covariance_max_err_lsb"] <= TOL_COV,
        "eigenvalues_within_8lsb": acc["eigenvalue_max_err_lsb"] <= TOL_EIG,
        "unitarity_within_8lsb": acc["unitarity_max_err_lsb"] <= TOL_UNITARY,
        "reconstruction_within_16lsb": acc["reconstruction_max_err_lsb"] <= TOL_RECON,
        "offdiag_norm_within_bound": acc["offdiag_norm_lsb"] <= cfg.N * TOL_OFFDIAG,
        "whiteness_within_10lsb": white is not None and white <= TOL_WHITE,
        "no_saturation": acc["saturation_count"] == 0,
    }
    if cfg.N >= 8:
        checks["period_formula"] = prep.period == steady_state_period(cfg.N, cfg.M)
    if cfg.is_published_config:
        checks["period_6144"] = system.period == PUBLISHED_PERIOD
        checks["latency_within_5pct"] = abs(system.latency - PUBLISHED_LATENCY) <= LATENCY_TOLERANCE * PUBLISHED_LATENCY
        checks["prep_latency_within_5pct"] = (
            abs(prep.latency - PUBLISHED_PREP_LATENCY) <= LATENCY_TOLERANCE * PUBLISHED_PREP_LATENCY
        )
    return checks


def cmd_run(cfg: RunConfig, Y: SignalMatrix | None = None) -> RunReport:
    input_saturations = 0
    if Y is None:
        with saturation_tracking() as sat:
            Y = _input_signals(cfg)
        input_saturations = sat.count
    acc, prep, evd = measure_accuracy(Y, cfg)
    acc["saturation_count"] += input_saturations
    system = system_ledger(prep, evd)
    return RunReport(cfg, prep, evd, system, acc, evaluate_checks(cfg, acc, prep, system))


def format_summary(report: RunReport) -> str:
    cfg = report.config
    led = report.ledger
    acc = report.accuracy
    lines = [
        f"N={cfg.N} M={cfg.M} {cfg.fmt} K={cfg.cordic_iters} sweeps={cfg.evd_sweeps} seed={cfg.seed}",
        f"prep      latency {report.prep_ledger.latency:>7} cycles, period {report.prep_ledger.period}",
        f"evd       latency {report.evd_ledger.latency:>7} cycles, period {report.evd_ledger.period}",
        f"system    latency {led.latency:>7} cycles, period {led.period} (bottleneck {report.bottleneck_period})",
        f"throughput {throughput_display(cfg.clock_hz, led.period)} matrices/s at {cfg.clock_hz / 1e6:g} MHz",
    ]
    if cfg.is_published_config:
        d = (led.latency - PUBLISHED_LATENCY) / PUBLISHED_LATENCY
        dp = (report.prep_ledger.latency - PUBLISHED_PREP_LATENCY) / PUBLISHED_PREP_LATENCY
        lines.append(f"latency vs published {PUBLISHED_LATENCY}: {d:+.1%}; prep vs {PUBLISHED_PREP_LATENCY}: {dp:+.1%}")
    white = acc["whiteness_max_err_lsb"]
    lines.append(
        "errors (LSB): cov {:.2f}, eig {:.2f}, unitarity {:.2f}, recon {:.2f}, whiteness {}, saturations {}".format(
            acc["covariance_max_err_lsb"], acc["eigenvalue_max_err_lsb"], acc["unitarity_max_err_lsb"],
            acc["reconstruction_max_err_lsb"], "n/a" if white is None else f"{white:.2f}", acc["saturation_count"],
        )
    )
    for name, ok in report.checks.items():
        lines.append(f"  {'PASS' if ok else 'FAIL'}  {name}")
    return "\n".join(lines)


SWEEPABLE = {
    "N": int, "M": int, "word_length": int, "frac_bits": int, "cordic_iters": int, "evd_sweeps": int,
    "issue_interval": int, "pipeline_depth": int, "seed": int, "clock_hz": float, "peak": float,
    "cond_max": float, "scenario_kind": str,
}


def _run_value(args):
    template, axis, value = args
    return cmd_run(replace(template, **{axis: value}))


def cmd_sweep(template: RunConfig, axis: str, values, workers: int = 1) -> list[RunReport]:
    """One run per value of ``axis``; results come back in input order."""
    if axis not in SWEEPABLE:
        raise ConfigurationError(f"cannot sweep {axis!r}; choose one of {sorted(SWEEPABLE)}")
    values = [SWEEPABLE[axis](v) for v in values]
    for v in values:
        replace(template, **{axis: v})  # fail fast on invalid values
    jobs = [(template, axis, v) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_run_value, jobs))
    return [_run_value(j) for j in jobs]


SWEEP_COLUMNS = ("latency", "period", "eigenvalue_max_err", "eigenvalue_max_err_lsb",
                 "reconstruction_max_err_lsb", "passed")


def sweep_csv(axis: str, reports: list[RunReport]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((axis,) + SWEEP_COLUMNS)
    for r in reports:
        a = r.accuracy
        w.writerow((
            getattr(r.config, axis), r.ledger.latency, r.ledger.period, f"{a['eigenvalue_max_err']:.6g}",
            f"{a['eigenvalue_max_err_lsb']:.4f}", f"{a['reconstruction_max_err_lsb']:.4f}", int(r.passed),
        ))
    return buf.getvalue()
