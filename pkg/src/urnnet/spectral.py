"""Dense linear algebra for the prediction engine.

Everything here operates on small dense matrices (target scale n <= 200):
full spectra of nonsymmetric real matrices, Lyapunov-type solves, guarded
inversion, and the log-averaged Gram integral that appears in the critical
fluctuation regime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EigenConvergenceError,
    InvalidParamsError,
    NonDiagonalizableError,
    NotCriticalRegimeError,
    SingularMatrixError,
    SingularSylvesterError,
)

#: eigenvalues within this distance of 1 count as the unit (Perron) value
UNIT_EIGENVALUE_TOL = 1e-9

#: eigenvector condition bound beyond which spectral solves are refused
DIAGONALIZABILITY_COND_MAX = 1e8

#: inversion is refused above this condition estimate
INVERSION_COND_MAX = 1e13

#: largest n for which the Lyapunov equation is solved as an n^2 x n^2 system
KRON_SOLVE_MAX_N = 64


@dataclass(frozen=True)
class Spectrum:
    """Full eigenvalue multiset of a real matrix, ordered by descending
    real part (ties: smaller imaginary magnitude first)."""

    eigenvalues: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def min_real(self) -> float:
        return float(self.eigenvalues.real.min())

    @property
    def max_real(self) -> float:
        return float(self.eigenvalues.real.max())

    @property
    def second_max_real(self):
        """Largest real part after removing one copy of the unit eigenvalue.

        None when 1 is not an eigenvalue, or when nothing else remains.
        """
        lam = self.eigenvalues
        near_one = np.abs(lam - 1.0)
        if near_one.min() > UNIT_EIGENVALUE_TOL:
            return None
        rest = np.delete(lam, int(np.argmin(near_one)))
        if rest.size == 0:
            return None
        return float(rest.real.max())


def eigenvalues(m: np.ndarray) -> Spectrum:
    """Spectrum of a real square matrix.

    Symmetric inputs take the symmetric fast path; everything else goes
    through the general (Schur-based) solver and keeps complex conjugate
    pairs intact.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidParamsError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidParamsError("matrix has non-finite entries")
    try:
        if np.allclose(m, m.T, rtol=0.0, atol=1e-13):
            lam = np.linalg.eigvalsh(m).astype(complex)
        else:
            lam = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc
    order = np.lexsort((np.abs(lam.imag), -lam.real))
    return Spectrum(eigenvalues=lam[order])


def _eig_with_condition(m: np.ndarray):
    try:
        lam, v = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(str(exc)) from exc
    cond = np.linalg.cond(v)
    return lam, v, float(cond)


def lyapunov_solve(a: np.ndarray, q: np.ndarray, method: str = "auto") -> np.ndarray:
    """Solve A^T S + S A = Q for symmetric Q.

    Solvable iff no two eigenvalues of A sum to zero (always true when all
    real parts are positive).  Small systems are solved directly as the
    vectorized n^2 x n^2 linear system; larger ones via eigendecomposition.
    """
    a = np.asarray(a, dtype=float)
    q = np.asarray(q, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or q.shape != (n, n):
        raise InvalidParamsError("A and Q must be square with equal shape")
    if method not in ("auto", "kron", "eig"):
        raise InvalidParamsError(f"unknown method {method!r}")

    lam = np.linalg.eigvals(a)
    pair_sums = np.abs(lam[:, None] + lam[None, :])
    scale = max(1.0, float(np.abs(lam).max()))
    if pair_sums.min() <= 1e-12 * scale:
        raise SingularSylvesterError(
            f"eigenvalue pair sums reach {pair_sums.min():.3e}; equation is singular"
        )

    if method == "kron" or (method == "auto" and n <= KRON_SOLVE_MAX_N):
        ident = np.eye(n)
        op = np.kron(ident, a.T) + np.kron(a.T, ident)
        s = np.linalg.solve(op, q.flatten(order="F")).reshape((n, n), order="F")
    else:
        lam, v, cond = _eig_with_condition(a)
        if not np.isfinite(cond) or cond > DIAGONALIZABILITY_COND_MAX:
            raise NonDiagonalizableError(f"eigenvector condition {cond:.3e}")
        # A^T S + S A = Q  <=>  L T + T L = V^T Q V  with  T = V^T S V.
        g = v.T @ q @ v
        t = g / (lam[:, None] + lam[None, :])
        v_inv = np.linalg.inv(v)
        s = (v_inv.T @ t @ v_inv).real
    return 0.5 * (s + s.T)


def invert(m: np.ndarray) -> np.ndarray:
    """Inverse with a condition-number guard."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if m.shape != (n, n):
        raise InvalidParamsError("expected a square matrix")
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > INVERSION_COND_MAX:
        raise SingularMatrixError(cond)
    return np.linalg.solve(m, np.eye(n))


def log_averaged_gram(h: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Limit of (1/L) * integral_0^L exp(-(H - I/2) u)^T Gamma exp(-(H - I/2) u) du.

    Requires H diagonalizable with all eigenvalue real parts >= 1/2 and at
    least one exactly on the critical line.  In the eigenbasis, only mode
    pairs whose shifted eigenvalues cancel survive the averaging (both on
    the critical line, conjugate imaginary parts); every other mode decays
    or oscillates to zero and is dropped.  The result is symmetric PSD when
    Gamma is.
    """
    h = np.asarray(h, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    n = h.shape[0]
    if h.shape != (n, n) or gamma.shape != (n, n):
        raise InvalidParamsError("H and Gamma must be square with equal shape")

    lam, v, cond = _eig_with_condition(h)
    if not np.isfinite(cond) or cond > DIAGONALIZABILITY_COND_MAX:
        raise NonDiagonalizableError(f"eigenvector condition {cond:.3e}")
    mu = lam - 0.5
    if np.any(mu.real < -UNIT_EIGENVALUE_TOL):
        raise InvalidParamsError("an eigenvalue of H has real part below 1/2")
    if np.abs(mu.real).min() > UNIT_EIGENVALUE_TOL:
        raise NotCriticalRegimeError("no eigenvalue of H on the critical line Re = 1/2")

    surviving = np.abs(mu[:, None] + mu[None, :]) <= UNIT_EIGENVALUE_TOL
    g = v.T @ gamma.astype(complex) @ v
    v_inv = np.linalg.inv(v)
    s = (v_inv.T @ (g * surviving) @ v_inv).real
    return 0.5 * (s + s.T)
