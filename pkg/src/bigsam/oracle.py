"""Reference solutions for small instances.

For a nonnegative least-squares inner problem the optimal set is the
polyhedron X* = {x >= 0 : A x = p}, where p is the common value of A x over
all minimizers.  At dimension n <= 12 everything about it can be computed
exactly by enumerating supports:

* :func:`solve_inner_exact` finds the optimal value and a finite description
  of X* (equalities, vertices, extreme rays, nullspace basis);
* :func:`solve_outer_exact` minimizes a quadratic outer objective over X* by
  enumerating active sets, each a single KKT solve.

Beyond the enumeration cutoff, :func:`high_accuracy_reference` produces a
reference-grade inner value by plain proximal gradient, and
:func:`omega_lower_bound` certifies a lower bound on the outer optimum by
weak duality on the relaxed problem min{w(x) : x >= 0, phi(x) <= phi*(1+mu)}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .functions import Quadratic
from .mappings import ProxGradMapping
from .problems import BilevelProblem, LeastSquaresInstance

ENUMERATION_MAX_DIM = 12

# Feasibility slack used when classifying enumeration candidates.
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class SolutionSetDescription:
    """Finite description of X* = {x >= 0 : eq_matrix @ x = eq_rhs}.

    ``eq_matrix`` has full row rank (rank of A); ``nullspace`` holds an
    orthonormal basis of its null space, the directions along which the
    optimal face extends.  ``vertices`` and ``rays`` generate the polyhedron:
    every member is a convex combination of vertices plus a nonnegative
    combination of rays.  ``always_zero`` lists coordinates that vanish on
    all of X*.
    """

    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    phi_star: float
    x_point: np.ndarray
    nullspace: np.ndarray
    vertices: np.ndarray
    rays: np.ndarray
    always_zero: tuple[int, ...]

    @property
    def dimension(self) -> int:
        return self.eq_matrix.shape[1]

    @property
    def face_dimension(self) -> int:
        return self.nullspace.shape[1]

    def contains(self, x, tol: float = 1e-8) -> bool:
        x = np.asarray(x, dtype=float)
        scale = max(1.0, float(np.linalg.norm(self.eq_rhs)))
        return bool(
            np.all(x >= -tol)
            and np.linalg.norm(self.eq_matrix @ x - self.eq_rhs) <= tol * scale
        )

    def sample(self, count: int, rng=None, ray_scale: float = 1.0) -> np.ndarray:
        """Random members: vertex mixtures plus nonnegative ray offsets."""
        rng = np.random.default_rng(rng)
        if len(self.vertices) == 0:
            raise ConfigurationError("description has no vertices to sample from")
        weights = rng.dirichlet(np.ones(len(self.vertices)), size=count)
        points = weights @ self.vertices
        if len(self.rays):
            coeff = ray_scale * rng.random((count, len(self.rays)))
            points = points + coeff @ self.rays
        return points


@dataclass(frozen=True)
class OracleSolution:
    """Ground truth for one instance: inner value, optimal face, outer optimum."""

    phi_star: float
    description: SolutionSetDescription
    x_mn: np.ndarray
    omega_star: float
    method: str = "active-set-enumeration"


def _instance_of(problem) -> LeastSquaresInstance:
    if isinstance(problem, LeastSquaresInstance):
        return problem
    instance = getattr(problem, "least_squares", None)
    if instance is None:
        raise ConfigurationError(
            "exact oracle needs the raw least-squares data; build the problem "
            "with make_bilevel or pass the instance itself"
        )
    return instance


def _subsets(n: int):
    indices = range(n)
    for size in range(n + 1):
        yield from itertools.combinations(indices, size)


def _dedupe(points: list[np.ndarray], tol: float = 1e-8) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for pt in points:
        if not any(np.linalg.norm(pt - q) <= tol for q in kept):
            kept.append(pt)
    return kept


def solve_inner_exact(
    problem, tol: float = FEASIBILITY_TOL
) -> tuple[float, SolutionSetDescription]:
    """Exact inner optimum by support enumeration (n <= 12).

    Every subset of coordinates is tried as the free set; the unconstrained
    least squares on the free coordinates is kept when it lands in the
    orthant.  At least one vertex of the optimal set survives this filter, so
    the minimum over kept candidates is the exact optimal value.
    """
    instance = _instance_of(problem)
    A, b = instance.A, instance.b
    m, n = A.shape
    if n > ENUMERATION_MAX_DIM:
        raise ConfigurationError(
            f"support enumeration is limited to n <= {ENUMERATION_MAX_DIM}, got {n}"
        )

    best_phi = np.inf
    best_x = None
    for free in _subsets(n):
        x = np.zeros(n)
        if free:
            cols = np.asarray(free)
            sol = np.linalg.lstsq(A[:, cols], b, rcond=None)[0]
            if np.any(sol < -tol):
                continue
            x[cols] = np.maximum(sol, 0.0)
        r = A @ x - b
        phi = float(r @ r)
        if phi < best_phi - 1e-15:
            best_phi = phi
            best_x = x
    assert best_x is not None  # the empty support always qualifies

    p = A @ best_x
    phi_star = float((p - b) @ (p - b))

    # Reduced equality system: A x = p  <=>  (Sigma_r V_r') x = U_r' p.
    U, sv, Vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(sv > max(m, n) * np.finfo(float).eps * (sv[0] if sv.size else 1.0)))
    eq_matrix = sv[:rank, None] * Vt[:rank]
    eq_rhs = U[:, :rank].T @ p
    nullspace = Vt[rank:].T

    vertices = _enumerate_vertices(eq_matrix, eq_rhs, tol)
    rays = _enumerate_extreme_rays(eq_matrix, tol)
    n_pts = vertices if len(vertices) else [best_x]
    always_zero = tuple(
        i
        for i in range(n)
        if all(v[i] <= tol for v in n_pts) and all(r_[i] <= tol for r_ in rays)
    )

    description = SolutionSetDescription(
        eq_matrix=eq_matrix,
        eq_rhs=eq_rhs,
        phi_star=phi_star,
        x_point=best_x,
        nullspace=nullspace,
        vertices=np.array(vertices) if vertices else np.empty((0, n)),
        rays=np.array(rays) if rays else np.empty((0, n)),
        always_zero=always_zero,
    )
    return phi_star, description


def _enumerate_vertices(E, q, tol) -> list[np.ndarray]:
    """Basic feasible points of {x >= 0 : E x = q} by support enumeration."""
    n = E.shape[1]
    scale = max(1.0, float(np.linalg.norm(q)))
    found: list[np.ndarray] = []
    for support in _subsets(n):
        if len(support) > E.shape[0]:
            break  # larger supports cannot give unique basic solutions
        x = np.zeros(n)
        if support:
            cols = np.asarray(support)
            sub = E[:, cols]
            sol, _, rank, _ = np.linalg.lstsq(sub, q, rcond=None)
            if rank < len(support):
                continue
            if np.any(sol < -tol):
                continue
            x[cols] = np.maximum(sol, 0.0)
        if np.linalg.norm(E @ x - q) <= 1e-8 * scale:
            found.append(x)
    return _dedupe(found)


def _enumerate_extreme_rays(E, tol) -> list[np.ndarray]:
    """Extreme rays of {d >= 0 : E d = 0}: supports whose submatrix has a
    one-dimensional null space spanned by a sign-constant vector."""
    n = E.shape[1]
    found: list[np.ndarray] = []
    for support in _subsets(n):
        if not support:
            continue
        cols = np.asarray(support)
        sub = E[:, cols]
        _, sv, Vt = np.linalg.svd(sub, full_matrices=True)
        null_dim = len(cols) - int(np.sum(sv > 1e-10 * max(1.0, sv[0] if sv.size else 0.0)))
        if null_dim != 1:
            continue
        w = Vt[-1]
        if np.all(w >= -tol):
            pass
        elif np.all(w <= tol):
            w = -w
        else:
            continue
        d = np.zeros(n)
        d[cols] = np.maximum(w, 0.0)
        d /= np.linalg.norm(d)
        found.append(d)
    return _dedupe(found)


def solve_outer_exact(
    description: SolutionSetDescription, outer: Quadratic, tol: float = FEASIBILITY_TOL
) -> tuple[np.ndarray, float]:
    """Minimize a strongly convex quadratic over the optimal face exactly.

    Enumerates which nonnegativity constraints are active; each choice is an
    equality-constrained QP solved through its KKT system.  Ties between
    candidates break toward the lexicographically smallest active set (the
    enumeration order), though strong convexity makes the minimizer unique.
    """
    if not isinstance(outer, Quadratic):
        raise ConfigurationError("exact outer solve expects a Quadratic objective")
    if outer.strong_convexity <= 0:
        raise ConfigurationError("outer objective must be strongly convex")
    E, q = description.eq_matrix, description.eq_rhs
    n = description.dimension
    if outer.dimension != n:
        raise ConfigurationError(
            f"outer dimension {outer.dimension} does not match face dimension {n}"
        )
    Q, c = outer.matrix, outer.linear
    scale = max(1.0, float(np.linalg.norm(q)))

    best_val = np.inf
    best_x = None
    for pinned in _subsets(n):
        rows = [E]
        rhs = [q]
        if pinned:
            pin = np.zeros((len(pinned), n))
            pin[np.arange(len(pinned)), np.asarray(pinned)] = 1.0
            rows.append(pin)
            rhs.append(np.zeros(len(pinned)))
        C = np.vstack(rows)
        d = np.concatenate(rhs)
        mc = C.shape[0]
        kkt = np.zeros((n + mc, n + mc))
        kkt[:n, :n] = Q
        kkt[:n, n:] = C.T
        kkt[n:, :n] = C
        rhs_full = np.concatenate([-c, d])
        sol = np.linalg.lstsq(kkt, rhs_full, rcond=None)[0]
        x = sol[:n]
        if np.linalg.norm(C @ x - d) > 1e-8 * scale:
            continue  # pinned set incompatible with the equality constraints
        if np.any(x < -tol):
            continue
        x = np.maximum(x, 0.0)
        val = outer.value(x)
        if val < best_val - 1e-15:
            best_val = val
            best_x = x
    if best_x is None:
        raise ConfigurationError("empty solution-set description")
    return best_x, float(best_val)


def oracle_solve(problem: BilevelProblem, tol: float = FEASIBILITY_TOL) -> OracleSolution:
    """Exact inner + outer reference solution for a tiny instance."""
    phi_star, description = solve_inner_exact(problem, tol=tol)
    x_mn, omega_star = solve_outer_exact(description, problem.outer, tol=tol)
    return OracleSolution(
        phi_star=phi_star,
        description=description,
        x_mn=x_mn,
        omega_star=omega_star,
        method="active-set-enumeration",
    )


# ---------------------------------------------------------------------------
# Large-instance paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReferenceSolution:
    """Reference-grade inner optimum from a long proximal-gradient run."""

    phi: float
    x: np.ndarray
    converged: bool
    iterations: int
    method: str = "high-accuracy-pg"


def high_accuracy_reference(
    problem: BilevelProblem,
    budget: int = 1_000_000,
    residual_tol: float = 1e-12,
) -> ReferenceSolution:
    """Plain proximal gradient with t = 1/L_f until the step residual falls
    below ``residual_tol`` or the budget runs out.

    The returned value is a surrogate for the inner optimum at scales where
    enumeration is impossible; ``converged`` records whether the residual
    target was met.
    """
    f = problem.inner_smooth
    g = problem.inner_prox
    T = ProxGradMapping(f, g, 1.0 / f.lipschitz_grad)
    x = np.zeros(problem.dimension)
    converged = False
    k = 0
    for k in range(1, budget + 1):
        x_new = T(x)
        if np.linalg.norm(x_new - x) <= residual_tol:
            x = x_new
            converged = True
            break
        x = x_new
    phi = float(f.value(x) + g.value(x))
    return ReferenceSolution(phi=phi, x=x, converged=converged, iterations=k)


@dataclass(frozen=True)
class LowerBoundResult:
    """Certified lower bound on the outer optimum (weak duality)."""

    value: float
    approximate: bool
    multiplier: float
    inner_iterations: int


def omega_lower_bound(
    problem: BilevelProblem,
    mu: float = 1e-4,
    phi_star: float | None = None,
    tol: float = 1e-8,
    budget: int = 2_000_000,
) -> LowerBoundResult:
    """Lower bound on min{w(x) : x in X*} via the relaxed problem
    min{w(x) : x >= 0, phi(x) <= phi*(1+mu)}.

    Evaluates the Lagrangian dual g(nu) = min_{x>=0} w(x) + nu*(phi(x) -
    phibar): every value is a valid lower bound by weak duality, and the
    slack from relaxing the constraint vanishes with mu.  The inner
    minimizations are projected-gradient solves of the penalized objective,
    warm-started along a bisection on nu; the best dual value seen is
    returned.  If the iteration budget runs out first, the best value so far
    comes back flagged as approximate.
    """
    if mu < 0:
        raise ConfigurationError(f"mu must be nonnegative, got {mu}")
    if phi_star is None:
        if (
            problem.least_squares is not None
            and problem.dimension <= ENUMERATION_MAX_DIM
        ):
            phi_star, _ = solve_inner_exact(problem)
        else:
            phi_star = high_accuracy_reference(problem).phi
    phi_bar = phi_star * (1.0 + mu)

    f = problem.inner_smooth
    g = problem.inner_prox
    outer = problem.outer
    if not hasattr(outer, "gradient"):
        raise ConfigurationError("the lower-bound path needs a smooth outer objective")
    sigma = outer.strong_convexity

    spent = 0
    x_warm = np.zeros(problem.dimension)

    def inner_solve(nu: float, x0: np.ndarray):
        nonlocal spent
        L = outer.lipschitz_grad + nu * f.lipschitz_grad
        step = 1.0 / L
        # linear convergence at rate 1 - sigma/L; budget the iterations for
        # a residual far below the requested certificate tolerance
        x = x0
        while spent < budget:
            spent += 1
            grad = outer.gradient(x) + nu * f.gradient(x)
            x_new = g.prox(step, x - step * grad)
            if np.linalg.norm(x_new - x) <= 1e-12 * max(1.0, np.linalg.norm(x)):
                return x_new, True
            x = x_new
        return x, False

    def dual_value(x: np.ndarray, nu: float) -> float:
        return float(outer.value(x) + nu * (f.value(x) - phi_bar))

    exhausted = False

    x0_sol, ok = inner_solve(0.0, x_warm)
    exhausted |= not ok
    best_nu, best_val = 0.0, dual_value(x0_sol, 0.0)
    if f.value(x0_sol) <= phi_bar or exhausted:
        # unconstrained orthant minimizer already satisfies the relaxation
        return LowerBoundResult(
            value=best_val,
            approximate=exhausted,
            multiplier=best_nu,
            inner_iterations=spent,
        )

    def record(nu: float, x: np.ndarray, converged: bool) -> float:
        # only a converged inner solve certifies its dual value
        nonlocal best_nu, best_val
        val = dual_value(x, nu)
        if converged and val > best_val:
            best_nu, best_val = nu, val
        return val

    x_warm = x0_sol
    lo, hi = 0.0, 1.0
    stalled = False
    prev_val = best_val
    while spent < budget:
        x_hi, ok = inner_solve(hi, x_warm)
        exhausted |= not ok
        x_warm = x_hi
        val = record(hi, x_hi, ok)
        if f.value(x_hi) <= phi_bar or not ok:
            break
        if abs(val - prev_val) <= tol * max(1.0, abs(val)):
            stalled = True  # dual value flat: the multiplier is effectively infinite
            break
        prev_val = val
        lo = hi
        hi *= 4.0
    else:
        exhausted = True

    if not stalled:
        for _ in range(200):
            if spent >= budget:
                exhausted = True
                break
            if hi - lo <= tol * max(1.0, abs(best_val)):
                break
            mid = 0.5 * (lo + hi)
            x_mid, ok = inner_solve(mid, x_warm)
            exhausted |= not ok
            x_warm = x_mid
            record(mid, x_mid, ok)
            if f.value(x_mid) > phi_bar:
                lo = mid
            else:
                hi = mid

    return LowerBoundResult(
        value=best_val,
        approximate=exhausted,
        multiplier=best_nu,
        inner_iterations=spent,
    )


def face_grid(
    description: SolutionSetDescription,
    step: float,
    radius: float,
    center: np.ndarray | None = None,
    chunk: int = 200_000,
):
    """Yield feasible grid points of the optimal face.

    The face is parametrized as center + N xi with N the nullspace basis;
    xi runs over a regular grid of the given step inside [-radius, radius]^d.
    Points leaving the orthant are dropped.  Intended for brute-force
    verification at small face dimensions.
    """
    if center is None:
        center = description.x_point
    center = np.asarray(center, dtype=float)
    N = description.nullspace
    d = N.shape[1]
    if d == 0:
        yield center.reshape(1, -1)
        return
    ticks = np.arange(-radius, radius + 0.5 * step, step)
    grids = np.meshgrid(*([ticks] * d), indexing="ij")
    coords = np.stack([gr.ravel() for gr in grids], axis=1)
    for start in range(0, coords.shape[0], chunk):
        xi = coords[start : start + chunk]
        pts = center + xi @ N.T
        feasible = np.all(pts >= -1e-12, axis=1)
        if np.any(feasible):
            yield pts[feasible]


def minimize_on_face_grid(
    description: SolutionSetDescription,
    fn,
    step: float,
    radius: float,
    center: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Brute-force minimizer of ``fn`` over the gridded optimal face."""
    best_val = np.inf
    best_x = None
    for pts in face_grid(description, step, radius, center=center):
        vals = np.array([fn(p) for p in pts])
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_x = pts[i]
    if best_x is None:
        raise ConfigurationError("no feasible grid point found; enlarge the radius")
    return best_x, best_val
