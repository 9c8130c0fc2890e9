"""The two mappings that get averaged by the solver.

``ProxGradMapping`` is the forward-backward step of the inner composite
problem: nonexpansive whenever the step size stays in (0, 1/L_f], with fixed
points exactly the inner optimal set.  ``OuterContraction`` is the operator
attached to the outer objective: either a gradient step (smooth, strongly
convex outer) or a proximal step (strongly convex but nonsmooth outer), both
strict contractions with a known factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .functions import ProxFunction, SmoothFunction


@dataclass(frozen=True)
class ProxGradMapping:
    """x -> prox_{tg}(x - t grad f(x)) with t in (0, 1/L_f].

    The step-size cap makes the mapping nonexpansive; fixed points coincide
    with minimizers of f + g.
    """

    f: SmoothFunction
    g: ProxFunction
    t: float

    def __post_init__(self):
        # the tiny relative slack absorbs rounding in L_f itself, so that
        # t = 1/L_f computed from equivalent expressions is always accepted
        if not 0 < self.t <= (1.0 + 1e-12) / self.f.lipschitz_grad:
            raise ConfigurationError(
                f"prox-grad step t={self.t} outside (0, 1/L_f] = "
                f"(0, {1.0 / self.f.lipschitz_grad}]"
            )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.g.prox(self.t, x - self.t * self.f.gradient(x))


def fixed_point_residual(f: SmoothFunction, g: ProxFunction, t: float, x) -> float:
    """||prox_{tg}(x - t grad f(x)) - x|| for any step t > 0.

    Vanishes exactly on the minimizers of f + g whatever the step, so it
    certifies membership in the inner optimal set even for steps beyond the
    nonexpansiveness cap enforced by :class:`ProxGradMapping`.
    """
    if not t > 0:
        raise ConfigurationError(f"step must be positive, got {t}")
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(g.prox(t, x - t * f.gradient(x)) - x))


def contraction_factor_smooth(sigma: float, L: float, s: float) -> float:
    """Contraction factor sqrt(1 - 2*s*sigma*L/(sigma+L)) of x - s grad w(x).

    Valid for a sigma-strongly convex w with L-Lipschitz gradient and
    step 0 < s <= 2/(L + sigma).
    """
    if not (0 < sigma <= L):
        raise ConfigurationError(f"need 0 < sigma <= L, got sigma={sigma}, L={L}")
    s_max = 2.0 / (L + sigma)
    if not 0 < s <= s_max:
        raise ConfigurationError(
            f"gradient step s={s} outside the admissible interval (0, {s_max}]"
        )
    arg = 1.0 - 2.0 * s * sigma * L / (sigma + L)
    return math.sqrt(max(arg, 0.0))


def contraction_factor_prox(sigma: float, s: float) -> float:
    """Contraction factor 1/(1 + s*sigma) of the prox of a strongly convex w."""
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    if not s > 0:
        raise ConfigurationError(f"s must be positive, got {s}")
    return 1.0 / (1.0 + s * sigma)


@dataclass(frozen=True)
class OuterContraction:
    """A contraction attached to the outer objective.

    ``mode`` is ``"gradient-step"`` (x - s grad w(x)) or ``"prox-step"``
    (prox_{sw}(x)).  ``beta`` is the contraction factor; the default comes
    from the matching closed-form bound but a tighter user-supplied value may
    be stored instead.
    """

    mode: str
    s: float
    beta: float
    step: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if self.mode not in ("gradient-step", "prox-step"):
            raise ConfigurationError(f"unknown contraction mode {self.mode!r}")
        if not 0.0 <= self.beta < 1.0:
            raise ConfigurationError(
                f"contraction factor must lie in [0, 1), got {self.beta}"
            )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.step(x)


def gradient_step_contraction(
    outer, s: float | None = None, beta: float | None = None
) -> OuterContraction:
    """Gradient-step contraction for a smooth strongly convex outer objective.

    ``s`` defaults to 2/(L + sigma), the largest admissible step, which also
    minimizes the contraction factor.
    """
    if not hasattr(outer, "gradient"):
        raise ConfigurationError(
            "gradient-step mode needs a differentiable outer objective"
        )
    sigma = outer.strong_convexity
    L = outer.lipschitz_grad
    if s is None:
        s = 2.0 / (L + sigma)
    if beta is None:
        beta = contraction_factor_smooth(sigma, L, s)
    else:
        contraction_factor_smooth(sigma, L, s)  # validate s even with custom beta
    grad = outer.gradient

    def step(x):
        return x - s * grad(x)

    return OuterContraction(mode="gradient-step", s=float(s), beta=float(beta), step=step)


def prox_step_contraction(
    outer, s: float, beta: float | None = None
) -> OuterContraction:
    """Prox-step contraction for a strongly convex (possibly nonsmooth) outer.

    Equals the gradient-step contraction applied to the Moreau envelope of
    the objective at the same smoothing parameter ``s``.
    """
    if not hasattr(outer, "prox"):
        raise ConfigurationError("prox-step mode needs a proximable outer objective")
    sigma = getattr(outer, "strong_convexity", 0.0)
    if not sigma > 0:
        raise ConfigurationError("prox-step mode needs a strongly convex outer")
    if beta is None:
        beta = contraction_factor_prox(sigma, s)
    prox = outer.prox

    def step(x):
        return prox(s, x)

    return OuterContraction(mode="prox-step", s=float(s), beta=float(beta), step=step)
