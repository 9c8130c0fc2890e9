"""Sequential-averaging solvers for convex bi-level problems.

The generic driver :func:`sam_run` iterates

    x^k = alpha_k * S(x^{k-1}) + (1 - alpha_k) * T(x^{k-1})

for a beta-contraction S and a nonexpansive T, with averaging weights
alpha_k = min(2*gamma / (k*(1-beta)), 1).  The weights vanish slowly enough
(sum divergent, ratio -> 1) that the iterates converge to the fixed point of
T singled out by the variational inequality <x* - S(x*), x - x*> >= 0 over
Fix(T).

:func:`bigsam_run` instantiates the driver for a bi-level problem: T is the
prox-grad mapping of the inner composite objective, S is a gradient step on
the outer objective (smooth case) or its proximal mapping (strongly convex
nonsmooth case, equivalent to a gradient step on the Moreau envelope).

:func:`tikhonov_baseline_run` is the classical diagonal alternative: one
prox-grad step on f + lambda_k * w per iteration with lambda_k -> 0 and
divergent sum.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NumericalError
from .mappings import (
    ProxGradMapping,
    gradient_step_contraction,
    prox_step_contraction,
)


class Termination(str, enum.Enum):
    RESIDUAL = "residual"
    RELATIVE_GAP = "relative-gap"
    MAX_ITERATIONS = "max-iterations"
    TIME_LIMIT = "time-limit"


# standard sweep values for the averaging aggressiveness
GAMMA_PRESETS = (0.1, 0.5, 1.0)


@dataclass(frozen=True)
class AlphaSchedule:
    """Averaging weights alpha_k = min(2*gamma / (k*(1-beta)), 1).

    For any gamma in (0, 1] and contraction factor beta in [0, 1) the
    sequence lies in (0, 1], decreases to zero, has a divergent sum and
    consecutive-term ratio tending to one.
    """

    gamma: float
    beta: float

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0.0 <= self.beta < 1.0:
            raise ConfigurationError(f"beta must lie in [0, 1), got {self.beta}")

    def alpha_at(self, k: int) -> float:
        if k < 1:
            raise ConfigurationError(f"iteration index must be >= 1, got {k}")
        return min(2.0 * self.gamma / (k * (1.0 - self.beta)), 1.0)


@dataclass(frozen=True)
class SolveConfig:
    """Run parameters shared by all solvers.

    ``t`` and ``s`` default to the largest admissible steps (1/L_f and
    2/(L_w + sigma)) when left unset.  For a nonsmooth outer objective, ``s``
    may instead be derived from the uniform-accuracy target ``delta`` as
    s = 2*delta / ell^2.

    Stopping: the run ends when ||y^k - x^{k-1}|| <= ``residual_tol``, when
    the relative gap (phi(y^k) - phi_star)/phi_star drops below
    ``relative_gap_tol`` (only if ``phi_star`` is supplied and positive), or
    at ``max_iterations`` / ``time_limit``, whichever comes first.

    ``record_every`` thins the trajectory: every m-th iteration is kept, plus
    always the final one.
    """

    t: float | None = None
    s: float | None = None
    gamma: float = 1.0
    max_iterations: int = 100_000
    residual_tol: float = 1e-9
    relative_gap_tol: float | None = None
    phi_star: float | None = None
    time_limit: float | None = None
    delta: float | None = None
    record_every: int = 1

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be at least 1")
        if self.residual_tol < 0:
            raise ConfigurationError("residual_tol must be nonnegative")
        if self.record_every < 1:
            raise ConfigurationError("record_every must be at least 1")
        if self.relative_gap_tol is not None:
            if self.relative_gap_tol < 0:
                raise ConfigurationError("relative_gap_tol must be nonnegative")
            if self.phi_star is None:
                raise ConfigurationError(
                    "relative-gap stopping requires phi_star to be supplied"
                )
            if self.phi_star <= 0:
                raise ConfigurationError(
                    "relative-gap stopping needs phi_star > 0; use residual "
                    "stopping for zero-residual instances"
                )


@dataclass(frozen=True)
class IterationRecord:
    """Snapshot of one iteration.

    ``x`` is exactly ``alpha * z + (1 - alpha) * y`` as computed;
    ``step_residual`` is ||x^k - x^{k-1}|| and ``map_residual`` is
    ||y^k - x^{k-1}||.  ``phi_y``/``omega_y`` are NaN when the corresponding
    value function was not supplied.
    """

    k: int
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    alpha: float
    phi_y: float
    omega_y: float
    step_residual: float
    map_residual: float
    elapsed: float


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: kept iteration records plus termination metadata."""

    records: list[IterationRecord]
    termination: Termination
    config: SolveConfig
    x0: np.ndarray
    iterations: int
    elapsed: float
    solver: str = "sam"
    beta: float | None = None

    @property
    def final_x(self) -> np.ndarray:
        return self.records[-1].x

    @property
    def final_y(self) -> np.ndarray:
        return self.records[-1].y


def sam_run(
    S: Callable[[np.ndarray], np.ndarray],
    T: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    schedule: AlphaSchedule,
    cfg: SolveConfig,
    phi: Callable[[np.ndarray], float] | None = None,
    omega: Callable[[np.ndarray], float] | None = None,
    solver_name: str = "sam",
) -> Trajectory:
    """Run the averaged fixed-point iteration until a stopping rule fires.

    ``phi`` and ``omega``, when given, are evaluated at the feasible iterates
    y^k = T(x^{k-1}) for recording and for relative-gap stopping; y^k is the
    sequence whose values carry the convergence guarantee.

    Raises :class:`NumericalError` if an iterate stops being finite.
    """
    x = np.array(x0, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise ConfigurationError("x0 must be finite")
    track_gap = cfg.relative_gap_tol is not None and phi is not None

    records: list[IterationRecord] = []
    start = time.perf_counter()
    for k in range(1, cfg.max_iterations + 1):
        y = T(x)
        z = S(x)
        alpha = schedule.alpha_at(k)
        x_new = alpha * z + (1.0 - alpha) * y
        if not np.all(np.isfinite(x_new)):
            raise NumericalError(
                f"{solver_name} produced a non-finite iterate", iteration=k
            )
        step_residual = float(np.linalg.norm(x_new - x))
        map_residual = float(np.linalg.norm(y - x))
        elapsed = time.perf_counter() - start

        phi_y = float(phi(y)) if track_gap else math.nan
        termination = None
        if cfg.time_limit is not None and elapsed >= cfg.time_limit:
            termination = Termination.TIME_LIMIT
        elif map_residual <= cfg.residual_tol:
            termination = Termination.RESIDUAL
        elif track_gap and (phi_y - cfg.phi_star) / cfg.phi_star < cfg.relative_gap_tol:
            termination = Termination.RELATIVE_GAP
        elif k == cfg.max_iterations:
            termination = Termination.MAX_ITERATIONS

        if termination is not None or k % cfg.record_every == 0:
            if phi is not None and not track_gap:
                phi_y = float(phi(y))
            omega_y = float(omega(y)) if omega is not None else math.nan
            records.append(
                IterationRecord(
                    k=k,
                    x=x_new,
                    y=y,
                    z=z,
                    alpha=alpha,
                    phi_y=phi_y,
                    omega_y=omega_y,
                    step_residual=step_residual,
                    map_residual=map_residual,
                    elapsed=elapsed,
                )
            )
        x = x_new
        if termination is not None:
            return Trajectory(
                records=records,
                termination=termination,
                config=cfg,
                x0=np.array(x0, dtype=float).reshape(-1),
                iterations=k,
                elapsed=elapsed,
                solver=solver_name,
                beta=schedule.beta,
            )
    raise AssertionError("unreachable: max_iterations always terminates the loop")


def bigsam_run(
    problem,
    cfg: SolveConfig | None = None,
    x0: np.ndarray | None = None,
) -> Trajectory:
    """Solve a bi-level problem by averaging the inner prox-grad mapping with
    an outer contraction.

    The outer objective selects the mode: an object with a ``gradient``
    attribute runs the smooth variant (S is a gradient step, contraction
    factor sqrt(1 - 2*s*sigma*L/(sigma+L))); otherwise it must be proximable
    and strongly convex, and S is its proximal step with factor
    1/(1 + s*sigma).
    """
    cfg = cfg or SolveConfig()
    f = problem.inner_smooth
    g = problem.inner_prox
    outer = problem.outer

    t = cfg.t if cfg.t is not None else 1.0 / f.lipschitz_grad
    T = ProxGradMapping(f, g, t)

    if hasattr(outer, "gradient"):
        S = gradient_step_contraction(outer, s=cfg.s)
    else:
        s = cfg.s
        if s is None and cfg.delta is not None:
            s = smoothing_parameter(cfg.delta, outer.lipschitz_value)
        if s is None:
            raise ConfigurationError(
                "nonsmooth outer mode needs an explicit s or a delta target"
            )
        S = prox_step_contraction(outer, s)

    schedule = AlphaSchedule(gamma=cfg.gamma, beta=S.beta)
    resolved = dataclasses.replace(cfg, t=t, s=S.s)
    if x0 is None:
        x0 = np.zeros(problem.dimension)

    def phi(v):
        return f.value(v) + g.value(v)

    return sam_run(
        S,
        T,
        x0,
        schedule,
        resolved,
        phi=phi,
        omega=outer.value,
        solver_name="bigsam",
    )


def tikhonov_baseline_run(
    problem,
    lambda_schedule: Callable[[int], float] | None = None,
    cfg: SolveConfig | None = None,
    x0: np.ndarray | None = None,
) -> Trajectory:
    """Diagonal regularization baseline: one prox-grad step per iteration on
    f + lambda_k * w with step 1/(L_f + lambda_k * L_w).

    ``lambda_schedule`` maps k >= 1 to the regularization weight; the default
    1/k vanishes with a divergent sum, which is what drives the iterates to
    the outer-optimal solution.  Only defined for a smooth outer objective.

    Records reuse the common trajectory layout with y = z = the new iterate
    and the alpha column holding lambda_k.
    """
    cfg = cfg or SolveConfig()
    f = problem.inner_smooth
    g = problem.inner_prox
    outer = problem.outer
    if not hasattr(outer, "gradient"):
        raise ConfigurationError(
            "the diagonal baseline is defined for smooth outer objectives only"
        )
    if lambda_schedule is None:
        lambda_schedule = lambda k: 1.0 / k
    track_gap = cfg.relative_gap_tol is not None

    x = (
        np.zeros(problem.dimension)
        if x0 is None
        else np.array(x0, dtype=float).reshape(-1)
    )
    x_init = x.copy()

    def phi(v):
        return f.value(v) + g.value(v)

    records: list[IterationRecord] = []
    start = time.perf_counter()
    for k in range(1, cfg.max_iterations + 1):
        lam = float(lambda_schedule(k))
        if lam < 0:
            raise ConfigurationError(f"lambda_{k} must be nonnegative, got {lam}")
        t_k = 1.0 / (f.lipschitz_grad + lam * outer.lipschitz_grad)
        grad = f.gradient(x) + lam * outer.gradient(x)
        x_new = g.prox(t_k, x - t_k * grad)
        if not np.all(np.isfinite(x_new)):
            raise NumericalError(
                "tikhonov baseline produced a non-finite iterate", iteration=k
            )
        residual = float(np.linalg.norm(x_new - x))
        elapsed = time.perf_counter() - start

        phi_y = float(phi(x_new)) if track_gap else math.nan
        termination = None
        if cfg.time_limit is not None and elapsed >= cfg.time_limit:
            termination = Termination.TIME_LIMIT
        elif residual <= cfg.residual_tol:
            termination = Termination.RESIDUAL
        elif track_gap and (phi_y - cfg.phi_star) / cfg.phi_star < cfg.relative_gap_tol:
            termination = Termination.RELATIVE_GAP
        elif k == cfg.max_iterations:
            termination = Termination.MAX_ITERATIONS

        if termination is not None or k % cfg.record_every == 0:
            if not track_gap:
                phi_y = float(phi(x_new))
            records.append(
                IterationRecord(
                    k=k,
                    x=x_new,
                    y=x_new,
                    z=x_new,
                    alpha=lam,
                    phi_y=phi_y,
                    omega_y=float(outer.value(x_new)),
                    step_residual=residual,
                    map_residual=residual,
                    elapsed=elapsed,
                )
            )
        x = x_new
        if termination is not None:
            return Trajectory(
                records=records,
                termination=termination,
                config=cfg,
                x0=x_init,
                iterations=k,
                elapsed=elapsed,
                solver="tikhonov",
                beta=None,
            )
    raise AssertionError("unreachable: max_iterations always terminates the loop")


# ---------------------------------------------------------------------------
# Rate machinery
# ---------------------------------------------------------------------------


def smoothing_parameter(delta: float, ell: float) -> float:
    """Smoothing parameter s = 2*delta / ell^2 for uniform accuracy delta.

    With this choice the Moreau envelope stays within delta of the objective
    wherever subgradient norms are bounded by ell.
    """
    if not delta > 0 or not ell > 0:
        raise ConfigurationError("delta and ell must be positive")
    return 2.0 * delta / (ell * ell)


def iteration_bound(
    epsilon: float, delta: float, C: float, t: float, sigma: float, ell: float
) -> int:
    """Iterations guaranteeing an epsilon-optimal inner value in nonsmooth
    mode at uniform outer accuracy delta.

    Ceiling of (4 C^2 / (t epsilon)) * (2 + 3 ell^2/(2 sigma delta)
    + ell^4/(4 sigma^2 delta^2)) - 1.
    """
    if min(epsilon, delta, C, t, sigma, ell) <= 0:
        raise ConfigurationError("all arguments must be positive")
    factor = 2.0 + 3.0 * ell**2 / (2.0 * sigma * delta) + ell**4 / (
        4.0 * sigma**2 * delta**2
    )
    return math.ceil(4.0 * C**2 / (t * epsilon) * factor - 1.0)


def boundedness_radius(x0, x_fixed, S, beta: float) -> float:
    """Radius C = max(||x0 - x~||, ||x~ - S(x~)|| / (1 - beta)).

    Every iterate of the averaged fixed-point run stays within C of the
    fixed point x~ of T; C also feeds the successive-iterate and value-gap
    rate bounds.
    """
    if not 0.0 <= beta < 1.0:
        raise ConfigurationError(f"beta must lie in [0, 1), got {beta}")
    x0 = np.asarray(x0, dtype=float)
    x_fixed = np.asarray(x_fixed, dtype=float)
    drift = np.linalg.norm(x_fixed - S(x_fixed))
    return float(max(np.linalg.norm(x0 - x_fixed), drift / (1.0 - beta)))


def rate_constant(beta: float) -> int:
    """The integer J = floor(2 / (1 - beta)) appearing in all rate bounds."""
    if not 0.0 <= beta < 1.0:
        raise ConfigurationError(f"beta must lie in [0, 1), got {beta}")
    return math.floor(2.0 / (1.0 - beta))


def step_residual_bound(C: float, beta: float, k: int) -> float:
    """O(1/k) bound 2*C*J / ((1-beta)*k) on ||x^k - x^{k-1}||."""
    return 2.0 * C * rate_constant(beta) / ((1.0 - beta) * k)


def map_residual_bound(C: float, beta: float, k: int) -> float:
    """O(1/k) bound 2*C*(J+2) / ((1-beta)*k) on ||y^k - x^{k-1}||."""
    return 2.0 * C * (rate_constant(beta) + 2) / ((1.0 - beta) * k)


def value_gap_bound(C: float, beta: float, t: float, k: int) -> float:
    """O(1/k) bound 2*C^2*(J+2) / ((k+1)*(1-beta)*t) on phi(y^k) - phi*."""
    return 2.0 * C**2 * (rate_constant(beta) + 2) / ((k + 1) * (1.0 - beta) * t)
