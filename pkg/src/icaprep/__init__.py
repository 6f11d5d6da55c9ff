"""Bit-accurate, cycle-level model of a centering, covariance and Jacobi EVD
preprocessor for complex-valued ICA."""

from .cordic import CordicConfig, DirectionSequence, angle_to_dirs, rotate, vectoring
from .errors import (
    ConfigurationError,
    ContractViolation,
    ConvergenceError,
    IcaPrepError,
    ParseError,
    RankDeficientError,
)
from .evd import (
    EvdCycleModel,
    EvdResult,
    RotationParams,
    diagonalize_2x2,
    evd_run,
    parallel_ordering,
    rotate_offdiag,
    submatrix_sequence,
)
from .fixedpoint import CFix, FixFormat, FixPoint, Q, dequantize, quantize
from .ledger import CycleLedger, Phase
from .matrices import FixMatrix, HermitianMatrix, SignalMatrix
from .mma import EcmmaConfig, ecmma_run
from .oracle import BssScenario, generate_bss, oracle_center, oracle_cov, oracle_evd, oracle_whiten
from .pipeline import RunConfig, RunReport, cmd_run, cmd_sweep
from .prep import run_prep, schedule_prep

__version__ = "0.1.0"
