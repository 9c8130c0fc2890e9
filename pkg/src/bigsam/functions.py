"""Function abstractions and a catalog of closed-form proximal operators.

Three kinds of objects circulate through the solvers:

* :class:`SmoothFunction` -- convex, differentiable, with a known Lipschitz
  constant of the gradient and an optional strong-convexity modulus.
* :class:`ProxFunction` -- extended-real-valued convex function whose
  proximal mapping ``prox(t, x) = argmin_u f(u) + ||u - x||^2 / (2t)`` is
  available in closed form.
* :class:`NonsmoothOuter` -- strongly convex, Lipschitz (on a declared
  region) function used as a nonsmooth outer objective; smoothed through its
  Moreau envelope when a differentiable surrogate is needed.

All objects are immutable after construction and safe to share between
concurrent runs; any factorization they need is computed eagerly in the
constructor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError

# Default tolerance used when validating matrices at construction time
# (symmetry, definiteness).  Relative to the largest magnitude entry.
MATRIX_VALIDATION_RTOL = 1e-12


@dataclass(frozen=True)
class SmoothFunction:
    """A convex differentiable function with gradient metadata.

    ``lipschitz_grad`` is the constant L with ||grad(x) - grad(y)|| <=
    L ||x - y||; ``strong_convexity`` is the modulus sigma (0 for a merely
    convex function).
    """

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    lipschitz_grad: float
    strong_convexity: float = 0.0

    def __post_init__(self):
        if not self.lipschitz_grad > 0:
            raise ConfigurationError(
                f"lipschitz_grad must be positive, got {self.lipschitz_grad}"
            )
        if self.strong_convexity < 0:
            raise ConfigurationError(
                f"strong_convexity must be nonnegative, got {self.strong_convexity}"
            )


@dataclass(frozen=True)
class ProxFunction:
    """An extended-real-valued convex function with a proximal mapping.

    ``value(x)`` may return ``inf`` (indicator functions); ``prox(t, x)``
    must return a finite point for every ``t > 0``.
    """

    value: Callable[[np.ndarray], float]
    prox: Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class NonsmoothOuter:
    """A strongly convex outer objective that is not differentiable.

    ``lipschitz_value`` is a bound ell on subgradient norms, valid on the
    declared region (globally Lipschitz + strongly convex cannot hold on all
    of R^n, so the bound is taken over a compact region of interest;
    ``region_radius`` records the Euclidean radius it was computed for, when
    known).  ``strong_convexity`` must be strictly positive.
    """

    value: Callable[[np.ndarray], float]
    prox: Callable[[float, np.ndarray], np.ndarray]
    lipschitz_value: float
    strong_convexity: float
    region_radius: float | None = None

    def __post_init__(self):
        if not self.lipschitz_value > 0:
            raise ConfigurationError(
                f"lipschitz_value must be positive, got {self.lipschitz_value}"
            )
        if not self.strong_convexity > 0:
            raise ConfigurationError(
                "a nonsmooth outer objective must be strongly convex "
                f"(got sigma={self.strong_convexity})"
            )


# ---------------------------------------------------------------------------
# Proximal catalog
# ---------------------------------------------------------------------------


def nonnegative_orthant() -> ProxFunction:
    """Indicator of {x : x >= 0}; prox is the componentwise projection."""

    def value(x):
        return 0.0 if np.all(np.asarray(x) >= 0) else np.inf

    def prox(t, x):
        return np.maximum(np.asarray(x, dtype=float), 0.0)

    return ProxFunction(value=value, prox=prox)


def box_indicator(lower, upper) -> ProxFunction:
    """Indicator of the box {x : lower <= x <= upper}; prox clamps."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper):
        raise ConfigurationError("box_indicator requires lower <= upper")

    def value(x):
        x = np.asarray(x)
        return 0.0 if np.all(x >= lower) and np.all(x <= upper) else np.inf

    def prox(t, x):
        return np.clip(np.asarray(x, dtype=float), lower, upper)

    return ProxFunction(value=value, prox=prox)


def l1_norm(weight: float = 1.0) -> ProxFunction:
    """weight * ||x||_1; prox is soft thresholding at level t * weight."""
    if weight <= 0:
        raise ConfigurationError("l1_norm weight must be positive")

    def value(x):
        return weight * float(np.sum(np.abs(x)))

    def prox(t, x):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * np.maximum(np.abs(x) - t * weight, 0.0)

    return ProxFunction(value=value, prox=prox)


def euclidean_norm(weight: float = 1.0) -> ProxFunction:
    """weight * ||x||_2; prox shrinks the whole vector toward the origin."""
    if weight <= 0:
        raise ConfigurationError("euclidean_norm weight must be positive")

    def value(x):
        return weight * float(np.linalg.norm(x))

    def prox(t, x):
        x = np.asarray(x, dtype=float)
        nrm = np.linalg.norm(x)
        if nrm <= t * weight:
            return np.zeros_like(x)
        return (1.0 - t * weight / nrm) * x

    return ProxFunction(value=value, prox=prox)


class AffineSetIndicator:
    """Indicator of {x : C x = d}; prox is the orthogonal projection.

    The pseudoinverse of C is computed once at construction, so repeated
    projections cost one pair of matrix-vector products.
    """

    def __init__(self, C, d):
        C = np.atleast_2d(np.array(C, dtype=float))
        d = np.array(d, dtype=float).reshape(-1)
        if C.shape[0] != d.shape[0]:
            raise ConfigurationError(
                f"C has {C.shape[0]} rows but d has {d.shape[0]} entries"
            )
        self.C = C
        self.d = d
        self._pinv = np.linalg.pinv(C)
        x0 = self._pinv @ d
        if np.linalg.norm(C @ x0 - d) > 1e-9 * max(1.0, float(np.linalg.norm(d))):
            raise ConfigurationError("C x = d has no solution; the set is empty")
        self.C.flags.writeable = False
        self.d.flags.writeable = False

    def value(self, x):
        return 0.0 if np.linalg.norm(self.C @ x - self.d) <= 1e-9 else np.inf

    def prox(self, t, x):
        x = np.asarray(x, dtype=float)
        return x - self._pinv @ (self.C @ x - self.d)


def affine_set_indicator(C, d) -> AffineSetIndicator:
    """Indicator of the affine set {x : C x = d}."""
    return AffineSetIndicator(C, d)


class Quadratic:
    """(1/2) x' Q x + c' x + constant with symmetric positive semidefinite Q.

    Serves both as a smooth function (``gradient``, ``lipschitz_grad``,
    ``strong_convexity``) and as a proximable one: prox with step t solves
    (I + t Q) u = x - t c through the eigendecomposition of Q, which is
    computed once at construction and reused for every step size.

    Rejects non-symmetric or indefinite matrices.
    """

    def __init__(self, Q, linear=None, constant: float = 0.0):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ConfigurationError(f"Q must be square, got shape {Q.shape}")
        scale = max(1.0, float(np.abs(Q).max()))
        if not np.allclose(Q, Q.T, rtol=0.0, atol=MATRIX_VALIDATION_RTOL * scale):
            raise ConfigurationError("Q must be symmetric")
        Q = 0.5 * (Q + Q.T)
        eigvals, eigvecs = np.linalg.eigh(Q)
        if eigvals[0] < -MATRIX_VALIDATION_RTOL * scale * Q.shape[0]:
            raise ConfigurationError(
                f"Q must be positive semidefinite (min eigenvalue {eigvals[0]:.3e})"
            )
        n = Q.shape[0]
        if linear is None:
            linear = np.zeros(n)
        linear = np.array(linear, dtype=float).reshape(-1)
        if linear.shape[0] != n:
            raise ConfigurationError(
                f"linear term has length {linear.shape[0]}, expected {n}"
            )
        self.matrix = Q
        self.linear = linear
        self.constant = float(constant)
        self._eigvals = np.maximum(eigvals, 0.0)
        self._eigvecs = eigvecs
        self.lipschitz_grad = float(self._eigvals[-1])
        self.strong_convexity = float(self._eigvals[0])
        for a in (self.matrix, self.linear, self._eigvals, self._eigvecs):
            a.flags.writeable = False

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ (self.matrix @ x) + self.linear @ x + self.constant)

    def gradient(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float) + self.linear

    def prox(self, t: float, x) -> np.ndarray:
        if not t > 0:
            raise ConfigurationError(f"prox step must be positive, got {t}")
        rhs = np.asarray(x, dtype=float) - t * self.linear
        w = self._eigvecs.T @ rhs
        return self._eigvecs @ (w / (1.0 + t * self._eigvals))


def quadratic(Q, linear=None, constant: float = 0.0) -> Quadratic:
    """Quadratic (1/2) x' Q x + linear' x + constant; see :class:`Quadratic`."""
    return Quadratic(Q, linear=linear, constant=constant)


def l1_quadratic_outer(
    dim: int,
    sigma: float = 1.0,
    l1_weight: float = 1.0,
    region_radius: float = 10.0,
) -> NonsmoothOuter:
    """Strongly convex sparse outer objective (sigma/2) ||x||^2 + w ||x||_1.

    The prox has the closed form soft(x, t*w) / (1 + t*sigma).  Subgradients
    are sigma*x + w*u with ||u||_inf <= 1, so on the ball of Euclidean radius
    ``region_radius`` their norms are bounded by
    ``sigma * region_radius + w * sqrt(dim)``, which is recorded as
    ``lipschitz_value``.
    """
    if sigma <= 0 or l1_weight <= 0 or region_radius <= 0:
        raise ConfigurationError("sigma, l1_weight and region_radius must be positive")

    def value(x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * sigma * (x @ x) + l1_weight * np.sum(np.abs(x)))

    def prox(t, x):
        x = np.asarray(x, dtype=float)
        soft = np.sign(x) * np.maximum(np.abs(x) - t * l1_weight, 0.0)
        return soft / (1.0 + t * sigma)

    ell = sigma * region_radius + l1_weight * np.sqrt(dim)
    return NonsmoothOuter(
        value=value,
        prox=prox,
        lipschitz_value=float(ell),
        strong_convexity=float(sigma),
        region_radius=float(region_radius),
    )


# ---------------------------------------------------------------------------
# Moreau envelope
# ---------------------------------------------------------------------------


def moreau_value(w, s: float, x) -> float:
    """Moreau envelope of ``w`` at ``x``: min_u w(u) + ||u - x||^2 / (2s).

    Evaluated through the proximal mapping, whose output is the minimizer.
    Never exceeds w(x).
    """
    if not s > 0:
        raise ConfigurationError(f"smoothing parameter must be positive, got {s}")
    x = np.asarray(x, dtype=float)
    u = w.prox(s, x)
    d = u - x
    return float(w.value(u) + (d @ d) / (2.0 * s))


def moreau_gradient(w, s: float, x) -> np.ndarray:
    """Gradient of the Moreau envelope: (x - prox_{sw}(x)) / s.

    The envelope is differentiable everywhere with a (1/s)-Lipschitz gradient
    even when ``w`` itself is not differentiable.
    """
    if not s > 0:
        raise ConfigurationError(f"smoothing parameter must be positive, got {s}")
    x = np.asarray(x, dtype=float)
    return (x - w.prox(s, x)) / s


def smooth_from_nonsmooth(w: NonsmoothOuter, s: float) -> SmoothFunction:
    """Differentiable surrogate of a strongly convex nonsmooth objective.

    Returns the Moreau envelope of ``w`` packaged as a
    :class:`SmoothFunction`: gradient Lipschitz constant 1/s and strong
    convexity sigma / (1 + s*sigma), where sigma is the strong convexity of
    ``w``.  Requires sigma > 0.
    """
    if not s > 0:
        raise ConfigurationError(f"smoothing parameter must be positive, got {s}")
    if not w.strong_convexity > 0:
        raise ConfigurationError(
            "smoothing requires a strongly convex objective (sigma > 0)"
        )
    sigma = w.strong_convexity
    return SmoothFunction(
        value=lambda x: moreau_value(w, s, x),
        gradient=lambda x: moreau_gradient(w, s, x),
        lipschitz_grad=1.0 / s,
        strong_convexity=sigma / (1.0 + s * sigma),
    )
