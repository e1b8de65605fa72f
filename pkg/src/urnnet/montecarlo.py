"""Seeded ensembles, scaled statistics, and exact small-case oracles.

Ensembles stream first and second moments of the fraction vector at a fixed
checkpoint grid, so memory stays flat in the number of runs.  Runs are
independent work items keyed by (master_seed, run_index); batches merge in
fixed index order, which makes results identical for any worker count.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .dynamics import (
    UrnState,
    geometric_checkpoints,
    scheme_is_polya,
    scheme_vectors,
    simulate_runs,
)
from .errors import (
    EnumerationTooLargeError,
    InsufficientCheckpointsError,
    InvalidParamsError,
    NotRegularError,
    WrongRegimeError,
)
from .graph import DirectedGraph

SCALING_SQRT_T = "sqrt_t"
SCALING_CRITICAL = "sqrt_t_over_logt"
SCALING_T_POW = "t_pow"

#: accepted alias for the critical-regime scaling (see scaled_covariance)
_SCALING_ALIASES = {"sqrt_tlogt": SCALING_CRITICAL}

#: bound on n * horizon for exact enumeration (2^(n*T) draw sequences)
BRUTE_FORCE_MAX_BITS = 20

_DEFAULT_BATCH = 1024


@dataclass
class EnsembleResult:
    """Streaming-moment summary of a seeded ensemble.

    mean_z and cov_z are indexed by checkpoint; var_phi is the average over
    vertices of the variance of Z_i minus the cross-sectional mean (the
    dispersion the identity-type decay theory is about).  Snapshots, when
    requested, hold exact white counts per run at selected times.
    """

    runs: int
    horizon: int
    checkpoints: tuple
    n: int
    mean_z: np.ndarray
    cov_z: np.ndarray
    var_phi: np.ndarray
    raw_seed: int
    initial_white: np.ndarray
    initial_black: np.ndarray
    is_polya: bool
    regular_graph: bool
    snapshots: dict = field(default_factory=dict)
    snapshot_totals: dict = field(default_factory=dict)

    def checkpoint_index(self, t: int) -> int:
        try:
            return self.checkpoints.index(t)
        except ValueError:
            raise InvalidParamsError(f"time {t} is not a checkpoint") from None

    def initial_fractions(self) -> np.ndarray:
        return self.initial_white / (self.initial_white + self.initial_black)

    def z_at(self, t: int) -> np.ndarray:
        """Per-run fraction vectors at a snapshot time, shape (runs, n)."""
        if t not in self.snapshots:
            raise InvalidParamsError(f"no snapshot stored at time {t}")
        return self.snapshots[t] / self.snapshot_totals[t]

    @classmethod
    def from_moments(
        cls,
        runs,
        horizon,
        checkpoints,
        sum_z,
        sum_outer,
        raw_seed,
        initial: UrnState,
        is_polya: bool,
        regular_graph: bool,
        snapshots=None,
        snapshot_totals=None,
    ) -> "EnsembleResult":
        checkpoints = tuple(checkpoints)
        n = sum_z.shape[1]
        mean = sum_z / runs
        cov = np.zeros_like(sum_outer)
        if runs > 1:
            for k in range(len(checkpoints)):
                cov[k] = (sum_outer[k] - runs * np.outer(mean[k], mean[k])) / (runs - 1)
                cov[k] = 0.5 * (cov[k] + cov[k].T)
        centering = np.eye(n) - np.full((n, n), 1.0 / n)
        var_phi = np.array(
            [np.trace(centering @ cov[k] @ centering) / n for k in range(len(checkpoints))]
        )
        return cls(
            runs=runs,
            horizon=horizon,
            checkpoints=checkpoints,
            n=n,
            mean_z=mean,
            cov_z=cov,
            var_phi=var_phi,
            raw_seed=raw_seed,
            initial_white=initial.white.copy(),
            initial_black=initial.black.copy(),
            is_polya=is_polya,
            regular_graph=regular_graph,
            snapshots=dict(snapshots or {}),
            snapshot_totals=dict(snapshot_totals or {}),
        )

    @classmethod
    def from_z_samples(
        cls,
        z: np.ndarray,
        checkpoints,
        horizon: int,
        raw_seed: int = 0,
        initial: UrnState | None = None,
        is_polya: bool = False,
        regular_graph: bool = False,
    ) -> "EnsembleResult":
        """Build a result from explicit per-run fraction samples (R, C, n);
        used for estimator calibration on synthetic data."""
        z = np.asarray(z, dtype=float)
        runs, n_cp, n = z.shape
        if n_cp != len(tuple(checkpoints)):
            raise InvalidParamsError("sample and checkpoint counts differ")
        sum_z = z.sum(axis=0)
        sum_outer = np.einsum("rki,rkj->kij", z, z)
        if initial is None:
            initial = UrnState(np.ones(n, dtype=np.int64), np.ones(n, dtype=np.int64))
        return cls.from_moments(
            runs,
            horizon,
            tuple(checkpoints),
            sum_z,
            sum_outer,
            raw_seed,
            initial,
            is_polya,
            regular_graph,
        )

    def to_dict(self) -> dict:
        final = len(self.checkpoints) - 1
        return {
            "runs": self.runs,
            "horizon": self.horizon,
            "checkpoints": list(self.checkpoints),
            "n": self.n,
            "raw_seed": self.raw_seed,
            "mean_Z": [list(map(float, row)) for row in self.mean_z],
            "var_phi": list(map(float, self.var_phi)),
            "cov_Z_final": [list(map(float, row)) for row in self.cov_z[final]]
            if final >= 0
            else None,
            "initial_white": list(map(int, self.initial_white)),
            "initial_black": list(map(int, self.initial_black)),
            "is_polya": self.is_polya,
            "regular_graph": self.regular_graph,
        }


def run_ensemble(
    g: DirectedGraph,
    scheme,
    initial: UrnState,
    horizon: int,
    runs: int,
    master_seed: int,
    checkpoints=None,
    snapshot_times=(),
    threads: int = 1,
    allow_zero_in_degree: bool = False,
    batch_size: int = _DEFAULT_BATCH,
) -> EnsembleResult:
    """Simulate `runs` seeded trajectories and stream their moments.

    Deterministic in master_seed; run r always consumes substream
    (master_seed, r), so adding runs or changing `threads` never perturbs
    existing ones.
    """
    if runs < 1:
        raise InvalidParamsError("runs must be >= 1")
    if checkpoints is None:
        checkpoints = geometric_checkpoints(horizon) if horizon > 0 else [0]
    checkpoints = tuple(sorted(set(int(t) for t in checkpoints)))

    batches = [range(lo, min(lo + batch_size, runs)) for lo in range(0, runs, batch_size)]

    def work(batch):
        return simulate_runs(
            g,
            scheme,
            initial,
            horizon,
            master_seed,
            batch,
            checkpoints=checkpoints,
            snapshot_times=snapshot_times,
            allow_zero_in_degree=allow_zero_in_degree,
        )

    if threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(work, batches))
    else:
        outs = [work(b) for b in batches]

    sum_z = np.zeros((len(checkpoints), g.n))
    sum_outer = np.zeros((len(checkpoints), g.n, g.n))
    for out in outs:  # fixed batch order keeps merging schedule-independent
        sum_z += out.sum_z
        sum_outer += out.sum_outer
    snapshots = {
        t: np.concatenate([out.snapshots[t] for out in outs], axis=0)
        for t in (outs[0].snapshots if outs else {})
    }
    snapshot_totals = dict(outs[0].snapshot_totals) if outs else {}

    return EnsembleResult.from_moments(
        runs,
        horizon,
        checkpoints,
        sum_z,
        sum_outer,
        master_seed,
        initial,
        scheme_is_polya(scheme),
        g.is_regular_undirected(),
        snapshots,
        snapshot_totals,
    )


def scaled_covariance(
    result: EnsembleResult,
    c: float,
    scaling: str,
    rho: float | None = None,
    t: int | None = None,
) -> np.ndarray:
    """Empirical covariance of the scaled deviation s(t) (Z_t - c 1).

    Second moment about the predicted limit c (the limit law is centred),
    taken at the final checkpoint unless `t` is given.

    Scalings: s(t) = sqrt(t) above the critical line, t^rho below it, and
    sqrt(t / log t) on it.  The critical factor is sqrt(t / log t), not
    sqrt(t log t): the fraction variance decays like log(t)/t there (the
    familiar sqrt(t log t) belongs to ball counts, which carry an extra
    factor of t).  The historical alias "sqrt_tlogt" selects the same
    critical scaling.
    """
    if result.is_polya:
        raise WrongRegimeError("scaled deviations from c are for non-identity rules")
    scaling = _SCALING_ALIASES.get(scaling, scaling)
    if t is None:
        t = result.checkpoints[-1]
    k = result.checkpoint_index(t)
    if scaling == SCALING_SQRT_T:
        s2 = float(t)
    elif scaling == SCALING_CRITICAL:
        if t < 2:
            raise InvalidParamsError("critical scaling needs t >= 2")
        s2 = t / math.log(t)
    elif scaling == SCALING_T_POW:
        if rho is None:
            raise InvalidParamsError("t_pow scaling needs rho")
        s2 = float(t) ** (2.0 * rho)
    else:
        raise InvalidParamsError(f"unknown scaling {scaling!r}")

    mean = result.mean_z[k]
    second = result.cov_z[k] * (result.runs - 1) / result.runs + np.outer(mean, mean)
    cvec = np.full(result.n, float(c))
    moment = second - np.outer(mean, cvec) - np.outer(cvec, mean) + np.outer(cvec, cvec)
    return s2 * 0.5 * (moment + moment.T)


class SlopeEstimate(NamedTuple):
    slope: float
    ci_halfwidth: float
    n_points: int
    t_window: tuple


def variance_decay_slope(result: EnsembleResult, tail_fraction: float = 0.5) -> SlopeEstimate:
    """Log-log slope of var_phi against t over the late checkpoints.

    Fits ordinary least squares on the tail fraction of positive-variance
    checkpoints and returns the slope with a 1.96-standard-error halfwidth.
    """
    if not result.is_polya:
        raise WrongRegimeError("variance decay classes apply to identity-type rules")
    # Graphs where all in-neighbourhoods coincide keep every urn identical,
    # so the cross-sectional variance is exactly zero up to rounding dust;
    # refuse to fit a slope through that.
    floor = 1e-25
    usable = [
        (t, v)
        for t, v in zip(result.checkpoints, result.var_phi)
        if t >= 1 and v > floor
    ]
    start = int(len(usable) * (1.0 - tail_fraction))
    tail = usable[start:]
    if len(tail) < 5:
        raise InsufficientCheckpointsError(
            f"need at least 5 tail checkpoints, have {len(tail)}"
        )
    x = np.log([t for t, _ in tail])
    y = np.log([v for _, v in tail])
    x_c = x - x.mean()
    sxx = float(x_c @ x_c)
    slope = float(x_c @ y) / sxx
    resid = y - y.mean() - slope * x_c
    dof = len(tail) - 2
    se = math.sqrt(max(float(resid @ resid), 0.0) / dof / sxx) if dof > 0 else 0.0
    return SlopeEstimate(
        slope=slope,
        ci_halfwidth=1.96 * se,
        n_points=len(tail),
        t_window=(tail[0][0], tail[-1][0]),
    )


@dataclass(frozen=True)
class MartingaleReport:
    drift_estimate: float
    threshold: float
    standard_error: float
    passed: bool


def martingale_test(result: EnsembleResult) -> MartingaleReport:
    """Check that the cross-sectional mean fraction keeps its starting value.

    Valid for identity-type reinforcement on a regular undirected graph,
    where the cross-sectional mean is a bounded martingale; passes when the
    observed drift is within three standard errors.
    """
    if not result.is_polya:
        raise WrongRegimeError("martingale test applies to identity-type rules")
    if not result.regular_graph:
        raise NotRegularError("martingale test needs a regular undirected graph")
    k = len(result.checkpoints) - 1
    zbar0 = float(result.initial_fractions().mean())
    mean_zbar = float(result.mean_z[k].mean())
    ones = np.ones(result.n)
    var_zbar = float(ones @ result.cov_z[k] @ ones) / result.n**2
    se = math.sqrt(max(var_zbar, 0.0) / result.runs)
    drift = mean_zbar - zbar0
    return MartingaleReport(
        drift_estimate=drift,
        threshold=3.0 * se,
        standard_error=se,
        passed=abs(drift) <= 3.0 * se,
    )


def brute_force_distribution(
    g: DirectedGraph,
    scheme,
    initial: UrnState,
    horizon: int,
    allow_zero_in_degree: bool = False,
) -> list:
    """Exact law of the urn state at time `horizon` by path enumeration.

    Probabilities are exact rationals and sum to one.  Feasible only while
    n * horizon stays small (2^(n*horizon) draw sequences).
    """
    n = g.n
    if n * horizon > BRUTE_FORCE_MAX_BITS:
        raise EnumerationTooLargeError(
            f"n * horizon = {n * horizon} exceeds {BRUTE_FORCE_MAX_BITS}"
        )
    if not allow_zero_in_degree and not g.has_positive_in_degrees():
        raise InvalidParamsError("graph has unreinforced vertices (pass the flag to allow)")
    a_vec, b_vec, m_vec = scheme_vectors(scheme, n)
    adj = g.adjacency()
    inflow = m_vec @ adj

    states = {tuple(int(x) for x in initial.white): Fraction(1)}
    totals = initial.totals().copy()
    for _ in range(horizon):
        nxt: dict = {}
        for w, prob in states.items():
            z = [Fraction(w[i], int(totals[i])) for i in range(n)]
            for draws in itertools.product((1, 0), repeat=n):
                p_draw = prob
                for i, d in enumerate(draws):
                    p_draw *= z[i] if d else 1 - z[i]
                    if p_draw == 0:
                        break
                if p_draw == 0:
                    continue
                sent = [int(a_vec[j]) if d else int(m_vec[j] - b_vec[j]) for j, d in enumerate(draws)]
                w_next = tuple(
                    w[i] + sum(sent[j] for j in range(n) if adj[j, i]) for i in range(n)
                )
                nxt[w_next] = nxt.get(w_next, Fraction(0)) + p_draw
        states = nxt
        totals = totals + inflow

    out = []
    for w in sorted(states):
        white = np.array(w, dtype=np.int64)
        out.append(
            (UrnState(white=white, black=totals - white, time=horizon), states[w])
        )
    return out


def distribution_mean_fractions(dist) -> list:
    """Exact per-vertex mean of the white fractions under an enumerated law."""
    if not dist:
        return []
    n = dist[0][0].n
    acc = [Fraction(0)] * n
    for state, prob in dist:
        z = state.exact_fractions()
        for i in range(n):
            acc[i] += prob * z[i]
    return acc


@dataclass(frozen=True)
class OracleReport:
    tv_distance: float
    threshold: float
    support_size: int
    runs: int
    passed: bool


def oracle_check(
    g: DirectedGraph,
    scheme,
    initial: UrnState,
    horizon: int,
    runs: int,
    master_seed: int,
    allow_zero_in_degree: bool = False,
) -> OracleReport:
    """Total-variation distance between the simulator's empirical law and
    the enumerated exact law at the same horizon."""
    exact = brute_force_distribution(
        g, scheme, initial, horizon, allow_zero_in_degree=allow_zero_in_degree
    )
    result = run_ensemble(
        g,
        scheme,
        initial,
        horizon,
        runs,
        master_seed,
        checkpoints=[horizon],
        snapshot_times=[horizon],
        allow_zero_in_degree=allow_zero_in_degree,
    )
    whites = result.snapshots[horizon]
    counts: dict = {}
    for row in map(tuple, whites.tolist()):
        counts[row] = counts.get(row, 0) + 1

    exact_by_w = {tuple(int(x) for x in state.white): float(p) for state, p in exact}
    support = set(exact_by_w) | set(counts)
    tv = 0.5 * sum(
        abs(counts.get(w, 0) / runs - exact_by_w.get(w, 0.0)) for w in support
    )
    threshold = 3.0 * math.sqrt(len(exact_by_w) / runs)
    return OracleReport(
        tv_distance=tv,
        threshold=threshold,
        support_size=len(exact_by_w),
        runs=runs,
        passed=tv <= threshold,
    )
