"""Double-precision reference pipeline and BSS scenario generator.

Nothing here touches the fixed-point code. The eigensolver is a plain cyclic
Jacobi so that it can be read and checked line by line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractViolation, ConvergenceError, RankDeficientError

SCENARIO_KINDS = ("qpsk_sources", "gaussian_mix_check", "two_tone")
EPS_FLOOR = 1e-8
MAX_SWEEPS = 50


def _as_complex(Y) -> np.ndarray:
    a = np.asarray(Y, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ContractViolation("matrix has non-finite entries")
    return a


def oracle_center(Y) -> np.ndarray:
    Y = _as_complex(Y)
    return Y - Y.mean(axis=-1, keepdims=True)


def oracle_cov(Y_bar) -> np.ndarray:
    Y_bar = _as_complex(Y_bar)
    C = Y_bar @ Y_bar.conj().T / Y_bar.shape[1]
    return (C + C.conj().T) / 2


def off_norm(A: np.ndarray) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.linalg.norm(off))


def _jacobi_rotation(A: np.ndarray, p: int, q: int) -> tuple[complex, complex] | None:
    """(c, s) of the unitary that zeroes A[p, q], or None if already zero."""
    apq = A[p, q]
    mag = abs(apq)
    if mag == 0.0:
        return None
    app, aqq = A[p, p].real, A[q, q].real
    tau = (aqq - app) / (2 * mag)
    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.hypot(1.0, tau))
    c = 1.0 / np.hypot(1.0, t)
    s = t * c * (apq / mag)
    return c, s


@dataclass(frozen=True, eq=False)
class OracleEvd:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    offnorm_history: tuple[float, ...]
    sweeps: int

    def __iter__(self):
        return iter((self.eigenvalues, self.eigenvectors))


def oracle_evd(A, tol: float = 1e-12, max_sweeps: int = MAX_SWEEPS, ordering=None) -> OracleEvd:
    """Cyclic complex Jacobi.

    ``ordering`` is an optional list of pair rounds (for instance the parallel
    ordering); by default pairs are visited row by row. The off-diagonal norm
    before the first sweep and after each sweep is kept in
    ``offnorm_history``. Eigenvalues are returned unsorted.
    """
    A = _as_complex(A).copy()
    n = A.shape[0]
    if A.shape != (n, n):
        raise ContractViolation(f"expected a square matrix, got {A.shape}")
    if np.abs(A - A.conj().T).max(initial=0.0) > 1e-10:
        raise ContractViolation("matrix is not Hermitian within 1e-10")
    A = (A + A.conj().T) / 2
    V = np.eye(n, dtype=complex)
    if ordering is None:
        ordering = [[(p, q)] for p in range(n) for q in range(p + 1, n)]
    scale = max(np.abs(A).max(), np.finfo(float).tiny)
    history = [off_norm(A)]
    sweeps = 0
    while history[-1] > tol * scale:
        if sweeps == max_sweeps:
            raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps, off-norm {history[-1]:.3e}")
        for rnd in ordering:
            for p, q in rnd:
                rot = _jacobi_rotation(A, p, q)
                if rot is None:
                    continue
                c, s = rot
                # J acts on columns p, q: [p, q] <- [c*p - conj(s)*q, s*p + c*q]
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - np.conj(s) * cq
                A[:, q] = s * cp + c * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = np.conj(s) * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - np.conj(s) * vq
                V[:, q] = s * vp + c * vq
        sweeps += 1
        history.append(off_norm(A))
    return OracleEvd(np.diag(A).real.copy(), V, tuple(history), sweeps)


def whitening_matrix(eigvals, eigvecs, eps_floor: float = EPS_FLOOR) -> np.ndarray:
    """``D^(-1/2) E^H``; rejects eigenvalues below ``eps_floor * max``."""
    lam = np.asarray(eigvals, dtype=float)
    E = _as_complex(eigvecs)
    floor = eps_floor * max(lam.max(), 0.0)
    for i, v in enumerate(lam):
        if not v > floor:
            raise RankDeficientError(i, float(v), floor)
    return (E / np.sqrt(lam)).conj().T


def oracle_whiten(Y_bar, eigvals, eigvecs, eps_floor: float = EPS_FLOOR) -> np.ndarray:
    return whitening_matrix(eigvals, eigvecs, eps_floor) @ _as_complex(Y_bar)


# --- scenarios ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BssScenario:
    X: np.ndarray
    H: np.ndarray
    Y: np.ndarray
    kind: str
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.Y.shape[0]

    @property
    def M(self) -> int:
        return self.Y.shape[1]


def _unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _sources(rng: np.random.Generator, kind: str, N: int, M: int) -> np.ndarray:
    if kind == "qpsk_sources":
        return (rng.choice([-1.0, 1.0], (N, M)) + 1j * rng.choice([-1.0, 1.0], (N, M))) / np.sqrt(2)
    if kind == "gaussian_mix_check":
        return (rng.normal(size=(N, M)) + 1j * rng.normal(size=(N, M))) / np.sqrt(2)
    if kind == "two_tone":
        # distinct FFT bins are exactly orthogonal over M samples
        k = np.arange(M)
        bins = rng.choice(np.arange(1, M), size=2 * N, replace=False).reshape(N, 2)
        phases = rng.uniform(0, 2 * np.pi, size=(N, 2))
        tones = np.exp(1j * (2 * np.pi * bins[:, :, None] * k / M + phases[:, :, None]))
        return tones.sum(axis=1) / np.sqrt(2)
    raise ConfigurationError(f"unknown scenario kind {kind!r}; expected one of {SCENARIO_KINDS}")


def max_cross_correlation(X: np.ndarray) -> float:
    Xc = oracle_center(X)
    p = np.sqrt(np.mean(np.abs(Xc) ** 2, axis=1))
    R = np.abs(Xc @ Xc.conj().T) / X.shape[1] / np.outer(p, p)
    np.fill_diagonal(R, 0)
    return float(R.max())


def generate_bss(
    N: int, M: int, seed: int, scenario_kind: str = "qpsk_sources", cond_max: float = 1.5,
    peak: float = 0.9 * 2.0,
) -> BssScenario:
    """Seeded mixture ``Y = H X``.

    ``H = U diag(s) V^H`` with singular values spread over ``[1, cond_max]``
    (``cond_max`` may not exceed 20). The mixture is scaled so that its
    largest real or imaginary component equals ``peak``.
    Source draws whose pairwise correlation exceeds ``3 / sqrt(M)`` are
    redrawn from the same generator.
    """
    if N < 2 or N % 2:
        raise ConfigurationError(f"N must be even and at least 2, got {N}")
    if M < N:
        raise ConfigurationError(f"M must be at least N, got M={M}, N={N}")
    if not 1.0 <= cond_max <= 20.0:
        raise ConfigurationError(f"condition bound must lie in [1, 20], got {cond_max}")
    if scenario_kind not in SCENARIO_KINDS:
        raise ConfigurationError(f"unknown scenario kind {scenario_kind!r}; expected one of {SCENARIO_KINDS}")
    rng = np.random.default_rng(seed)
    bound = 3.0 / np.sqrt(M)
    for attempt in range(100):
        X = _sources(rng, scenario_kind, N, M)
        if max_cross_correlation(X) <= bound:
            break
    else:
        raise ConvergenceError(f"could not draw sources with cross-correlation <= {bound:.3g}")
    s = np.linspace(1.0, 1.0 / cond_max, N)
    H = _unitary(rng, N) @ np.diag(s) @ _unitary(rng, N).conj().T
    Y = H @ X
    c = peak / float(np.max(np.abs(np.concatenate([Y.real, Y.imag]))))
    H = H * c
    Y = Y * c
    return BssScenario(X, H, Y, scenario_kind, seed, {"attempts": attempt + 1, "cond": float(np.linalg.cond(H))})


@dataclass(frozen=True, eq=False)
class OracleRun:
    centered: np.ndarray
    covariance: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    whitened: np.ndarray


def oracle_pipeline(Y) -> OracleRun:
    Yb = oracle_center(Y)
    C = oracle_cov(Yb)
    ev = oracle_evd(C)
    Z = oracle_whiten(Yb, ev.eigenvalues, ev.eigenvectors)
    return OracleRun(Yb, C, ev.eigenvalues, ev.eigenvectors, Z)
