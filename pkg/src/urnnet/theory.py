"""Closed-form predictions for the urn process.

All results are stated for normalized reinforcement parameters
alpha = a/m and beta = b/m in [0, 1].  The drift of the fraction process is

    h(z) = (alpha z + (1 - beta)(1 - z)) A~ - z

with A~ the column-stochastic weighted adjacency (row-vector convention:
z multiplies from the left).  Away from the identity-type rule
(alpha = beta = 1) every urn converges to the consensus value
c = (1 - beta) / (2 - alpha - beta), and fluctuations around it scale by
the regime parameter rho, the smallest eigenvalue real part of
H = I - (alpha + beta - 1) A~.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import spectral
from .dynamics import HeterogeneousScheme, scheme_vectors
from .errors import (
    InvalidParamsError,
    NotRegularError,
    PolyaTypeError,
    SingularLimitSystemError,
    WrongRegimeError,
    ZeroInDegreeError,
)
from .graph import DirectedGraph

REGIME_POLYA = "polya"
REGIME_SQRT_T = "gaussian_sqrt_t"
REGIME_CRITICAL = "gaussian_sqrt_tlogt"
REGIME_SUBCRITICAL = "subcritical_t_rho"

RATE_T_INV = "t_inv"
RATE_LOGT_OVER_T = "logt_over_t"
RATE_T_POW = "t_pow"

#: |rho - 1/2| at or below this counts as the critical regime
CRITICAL_RHO_TOL = 1e-9

_POLYA_PARAM_TOL = 1e-12


def is_polya_params(alpha: float, beta: float) -> bool:
    return abs(alpha - 1.0) <= _POLYA_PARAM_TOL and abs(beta - 1.0) <= _POLYA_PARAM_TOL


def _check_params(alpha: float, beta: float):
    if not (0.0 <= alpha <= 1.0 and 0.0 <= beta <= 1.0):
        raise InvalidParamsError("alpha and beta must lie in [0, 1]")


def drift(z: np.ndarray, a_tilde: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Mean displacement field of the fraction process (row convention)."""
    z = np.asarray(z, dtype=float)
    return (alpha * z + (1.0 - beta) * (1.0 - z)) @ a_tilde - z


def consensus_equilibrium(alpha: float, beta: float) -> float:
    """Common limit fraction c = (1 - beta) / (2 - alpha - beta)."""
    _check_params(alpha, beta)
    if is_polya_params(alpha, beta):
        raise PolyaTypeError("no deterministic consensus for alpha = beta = 1")
    return (1.0 - beta) / (2.0 - alpha - beta)


def noise_variance_c(alpha: float, beta: float) -> float:
    """Per-urn reinforcement noise variance at equilibrium.

    Variance of the normalized white-ball payout, which takes value alpha
    with probability c and 1 - beta otherwise; always in [0, 1/4].
    """
    c = consensus_equilibrium(alpha, beta)
    mean_sq = alpha**2 * c + (1.0 - beta) ** 2 * (1.0 - c)
    mean = alpha * c + (1.0 - beta) * (1.0 - c)
    return mean_sq - mean**2


class RhoRegime(NamedTuple):
    value: float
    regime: str


def classify_rho(value: float) -> str:
    if abs(value - 0.5) <= CRITICAL_RHO_TOL:
        return REGIME_CRITICAL
    return REGIME_SQRT_T if value > 0.5 else REGIME_SUBCRITICAL


def rho(alpha: float, beta: float, a_tilde: np.ndarray) -> RhoRegime:
    """Regime parameter: smallest eigenvalue real part of I - (alpha+beta-1) A~.

    Computed through the spectrum of A~ itself: for alpha + beta >= 1 the
    binding eigenvalue is the Perron value 1 (so rho = 2 - alpha - beta),
    otherwise the eigenvalue of A~ with smallest real part.
    """
    _check_params(alpha, beta)
    if is_polya_params(alpha, beta):
        raise PolyaTypeError("rho is undefined for alpha = beta = 1")
    k = alpha + beta - 1.0
    spec = spectral.eigenvalues(a_tilde)
    if k >= 0.0:
        value = 1.0 - k * spec.max_real
    else:
        value = 1.0 - k * spec.min_real
    return RhoRegime(value=float(value), regime=classify_rho(float(value)))


def drift_matrix(alpha: float, beta: float, a_tilde: np.ndarray) -> np.ndarray:
    """H = I - (alpha + beta - 1) A~, the negated drift Jacobian."""
    n = a_tilde.shape[0]
    return np.eye(n) - (alpha + beta - 1.0) * np.asarray(a_tilde, dtype=float)


def clt_covariance(alpha: float, beta: float, a_tilde: np.ndarray) -> np.ndarray:
    """Asymptotic covariance of sqrt(t) (Z_t - c 1) in the rho > 1/2 regime.

    Equals C(alpha, beta) times the solution S of
    (H - I/2)^T S + S (H - I/2) = A~^T A~.
    """
    rr = rho(alpha, beta, a_tilde)
    if rr.regime != REGIME_SQRT_T:
        raise WrongRegimeError(f"rho = {rr.value:.6g} is not above 1/2")
    a_tilde = np.asarray(a_tilde, dtype=float)
    h = drift_matrix(alpha, beta, a_tilde)
    n = a_tilde.shape[0]
    s = spectral.lyapunov_solve(h - 0.5 * np.eye(n), a_tilde.T @ a_tilde)
    return noise_variance_c(alpha, beta) * s


def clt_covariance_regular_closed_form(
    alpha: float, beta: float, a_tilde: np.ndarray
) -> np.ndarray:
    """Closed form C(a,b) A~^2 (I - 2(alpha+beta-1) A~)^(-1), valid for
    symmetric A~ (undirected regular graphs)."""
    a_tilde = np.asarray(a_tilde, dtype=float)
    n = a_tilde.shape[0]
    k = alpha + beta - 1.0
    inv = spectral.invert(np.eye(n) - 2.0 * k * a_tilde)
    return noise_variance_c(alpha, beta) * (a_tilde @ a_tilde) @ inv


def clt_covariance_critical(alpha: float, beta: float, a_tilde: np.ndarray) -> np.ndarray:
    """Asymptotic covariance of sqrt(t log t) (Z_t - c 1) on the critical line.

    For an undirected d-regular graph on N vertices this reduces to
    C(alpha, beta) / N times the all-ones matrix.
    """
    rr = rho(alpha, beta, a_tilde)
    if rr.regime != REGIME_CRITICAL:
        raise WrongRegimeError(f"rho = {rr.value:.6g} is not 1/2")
    a_tilde = np.asarray(a_tilde, dtype=float)
    h = drift_matrix(alpha, beta, a_tilde)
    gram = spectral.log_averaged_gram(h, a_tilde.T @ a_tilde)
    return noise_variance_c(alpha, beta) * gram


@dataclass(frozen=True)
class RateClass:
    """Decay class of Var(Z_t - mean(Z_t) 1) under identity-type reinforcement.

    The decay is governed by the largest eigenvalue of A~ other than the
    Perron value 1 (the slowest surviving mode): below 1/2 every mode decays
    like 1/t, at 1/2 a log factor appears, above 1/2 the rate is the power
    2*lambda2 - 2.
    """

    kind: str
    exponent: float
    lambda2: float


def polya_rate_class(a_tilde: np.ndarray) -> RateClass:
    a_tilde = np.asarray(a_tilde, dtype=float)
    n = a_tilde.shape[0]
    if a_tilde.shape != (n, n):
        raise InvalidParamsError("expected a square matrix")
    if not np.allclose(a_tilde, a_tilde.T, atol=1e-12):
        raise NotRegularError("weighted adjacency is not symmetric")
    ones = np.ones(n)
    if not (
        np.allclose(a_tilde @ ones, ones, atol=1e-9)
        and np.allclose(ones @ a_tilde, ones, atol=1e-9)
    ):
        raise NotRegularError("weighted adjacency is not doubly stochastic")
    spec = spectral.eigenvalues(a_tilde)
    lam2 = spec.second_max_real
    if lam2 is None:
        raise NotRegularError("rate class needs at least two vertices")
    if abs(lam2 - 0.5) <= CRITICAL_RHO_TOL:
        return RateClass(kind=RATE_LOGT_OVER_T, exponent=-1.0, lambda2=lam2)
    if lam2 < 0.5:
        return RateClass(kind=RATE_T_INV, exponent=-1.0, lambda2=lam2)
    return RateClass(kind=RATE_T_POW, exponent=2.0 * lam2 - 2.0, lambda2=lam2)


def equilibrium_via_inverse(
    alpha: float, beta: float, a_tilde: np.ndarray
) -> np.ndarray:
    """Equilibrium by explicit inversion: (1-beta) 1 (I - (alpha+beta-1) A~)^(-1).

    Matches c 1 whenever the columns of A~ all sum to one; also usable on
    graphs with unreinforced vertices, where it reports the formal
    limit values instead."""
    _check_params(alpha, beta)
    if is_polya_params(alpha, beta):
        raise PolyaTypeError("equilibrium formula needs alpha + beta != 2")
    a_tilde = np.asarray(a_tilde, dtype=float)
    n = a_tilde.shape[0]
    k = alpha + beta - 1.0
    return (1.0 - beta) * np.ones(n) @ spectral.invert(np.eye(n) - k * a_tilde)


def heterogeneous_limit(
    g: DirectedGraph,
    scheme: HeterogeneousScheme,
    frozen_fractions=None,
) -> np.ndarray:
    """Almost-sure limit fractions under per-vertex replacement matrices.

    Solves the fixed point of z = (z C + (m - b)) A Mhat^(-1) where C holds
    c_i = a_i + b_i - m_i and Mhat the per-vertex inflow totals.  Vertices
    without incoming edges are never reinforced and keep their starting
    fraction forever; supply those values via `frozen_fractions` (indexed
    per vertex, only the unreinforced entries are read).  When every vertex
    is reinforced and all matrices equal a common non-identity rule, the
    result reduces to the consensus value on every coordinate.
    """
    n = g.n
    a_vec, b_vec, m_vec = scheme_vectors(scheme, n)
    adj = g.adjacency().astype(float)
    m_hat = m_vec.astype(float) @ adj
    reinforced = m_hat > 0

    if not reinforced.all():
        if frozen_fractions is None:
            raise InvalidParamsError(
                "graph has unreinforced vertices; pass frozen_fractions for them"
            )
        frozen_fractions = np.asarray(frozen_fractions, dtype=float)
        if frozen_fractions.shape != (n,):
            raise InvalidParamsError("frozen_fractions must have one entry per vertex")

    weight = np.zeros_like(adj)
    np.divide(adj, m_hat[np.newaxis, :], out=weight, where=m_hat[np.newaxis, :] > 0)
    c_vec = (a_vec + b_vec - m_vec).astype(float)
    cp = c_vec[:, None] * weight
    intercept = (m_vec - b_vec).astype(float) @ weight

    z = np.zeros(n)
    idx = np.flatnonzero(reinforced)
    if idx.size:
        rhs = intercept[idx]
        if not reinforced.all():
            frozen_idx = np.flatnonzero(~reinforced)
            z[frozen_idx] = frozen_fractions[frozen_idx]
            rhs = rhs + z[frozen_idx] @ cp[np.ix_(frozen_idx, idx)]
        system = np.eye(idx.size) - cp[np.ix_(idx, idx)]
        cond = np.linalg.cond(system)
        if not np.isfinite(cond) or cond > spectral.INVERSION_COND_MAX:
            raise SingularLimitSystemError(
                f"limit system is singular (condition estimate {cond:.3e})"
            )
        z[idx] = np.linalg.solve(system.T, rhs)
    return z


def influence_threshold(d: int, a: float, r: float, b: float, target: float):
    """Smallest group-1 size d1 with (a d1 + r (d - d1)) / d >= target.

    Exact rational comparisons on the affine formula; b cancels out of it
    (both groups share it) and is accepted only for interface symmetry.
    Returns None when even d1 = d falls short.
    """
    if d < 1:
        raise InvalidParamsError("d must be >= 1")
    for name, value in (("a", a), ("r", r), ("b", b), ("target", target)):
        if not (0.0 <= value <= 1.0):
            raise InvalidParamsError(f"{name} must lie in [0, 1]")
    fa, fr, ft = Fraction(a), Fraction(r), Fraction(target)
    for d1 in range(d + 1):
        if fa * d1 + fr * (d - d1) >= ft * d:
            return d1
    return None


def integrate_ode(
    z0: np.ndarray,
    a_tilde: np.ndarray,
    alpha: float,
    beta: float,
    horizon: float,
    dt: float,
):
    """Explicit Euler path of dz/dtau = drift(z); returns (times, states).

    The field is linear, so fixed-step Euler is accurate to O(dt) over any
    finite horizon at these scales.
    """
    if dt <= 0:
        raise InvalidParamsError("dt must be positive")
    z = np.asarray(z0, dtype=float).copy()
    steps = int(round(horizon / dt))
    times = np.arange(steps + 1) * dt
    path = np.empty((steps + 1, len(z)))
    path[0] = z
    for k in range(1, steps + 1):
        z = z + dt * drift(z, a_tilde, alpha, beta)
        path[k] = z
    return times, path


@dataclass
class TheoryReport:
    """Bundle of every closed-form prediction that applies to one setup."""

    regime: str
    n: int
    alpha: float
    beta: float
    rho: float | None = None
    equilibrium: np.ndarray | None = None
    noise_var_c: float | None = None
    sigma: np.ndarray | None = None
    rate_class: RateClass | None = None
    notes: tuple = ()

    def to_dict(self) -> dict:
        out = {
            "regime": self.regime,
            "n": self.n,
            "alpha": self.alpha,
            "beta": self.beta,
            "rho": self.rho,
            "equilibrium": None if self.equilibrium is None else list(map(float, self.equilibrium)),
            "noise_var_C": self.noise_var_c,
            "sigma": None if self.sigma is None else [list(map(float, row)) for row in self.sigma],
            "rate_class": None
            if self.rate_class is None
            else {
                "kind": self.rate_class.kind,
                "exponent": self.rate_class.exponent,
                "lambda2": self.rate_class.lambda2,
            },
            "notes": list(self.notes),
        }
        return out


def predict(g: DirectedGraph, alpha: float, beta: float) -> TheoryReport:
    """All predictions for a homogeneous rule on a fully reinforced graph."""
    _check_params(alpha, beta)
    if not g.has_positive_in_degrees():
        raise ZeroInDegreeError(np.flatnonzero(g.in_degrees() == 0) + 1)
    a_tilde = g.weighted_adjacency()

    if is_polya_params(alpha, beta):
        notes = ()
        rate = None
        try:
            rate = polya_rate_class(a_tilde)
        except NotRegularError as exc:
            notes = (f"variance decay class unavailable: {exc}",)
        return TheoryReport(
            regime=REGIME_POLYA, n=g.n, alpha=alpha, beta=beta, rate_class=rate, notes=notes
        )

    c = consensus_equilibrium(alpha, beta)
    rr = rho(alpha, beta, a_tilde)
    sigma = None
    if rr.regime == REGIME_SQRT_T:
        sigma = clt_covariance(alpha, beta, a_tilde)
    elif rr.regime == REGIME_CRITICAL:
        sigma = clt_covariance_critical(alpha, beta, a_tilde)
    return TheoryReport(
        regime=rr.regime,
        n=g.n,
        alpha=alpha,
        beta=beta,
        rho=rr.value,
        equilibrium=np.full(g.n, c),
        noise_var_c=noise_variance_c(alpha, beta),
        sigma=sigma,
    )
