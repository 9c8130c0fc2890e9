"""Construction and ingestion of bi-level test instances.

The stock instance family is an ill-conditioned nonnegative least-squares
inner problem

    min ||A x - b||^2 + indicator(x >= 0)

with a prescribed singular-value profile (geometric decay, then exact
zeros), paired with a quadratic outer objective (1/2) x' Q x where
Q = D' D + I and D is the first-difference operator.  Externally produced
systems can be ingested from MatrixMarket or CSV files.

All generators are pure functions of their seed.  Normal variates are drawn
with the Marsaglia polar method on top of the PCG64 uniform stream, so a
given (seed, shape) request reproduces bit-identically across platforms;
instances record ``noise_algorithm = "polar-pcg64"`` in their metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, MatrixParseError
from .functions import Quadratic, SmoothFunction, nonnegative_orthant

NOISE_ALGORITHM = "polar-pcg64"


def _standard_normals(rng: np.random.Generator, size: int) -> np.ndarray:
    """Marsaglia polar normals from the generator's uniform stream."""
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        # acceptance rate is pi/4 per pair; draw with headroom
        n_pairs = max(16, int(need * 0.8) + 16)
        u = 2.0 * rng.random(n_pairs) - 1.0
        v = 2.0 * rng.random(n_pairs) - 1.0
        s = u * u + v * v
        keep = (s > 0.0) & (s < 1.0)
        u, v, s = u[keep], v[keep], s[keep]
        f = np.sqrt(-2.0 * np.log(s) / s)
        pair = np.empty(2 * s.size)
        pair[0::2] = u * f
        pair[1::2] = v * f
        take = min(pair.size, need)
        out[filled : filled + take] = pair[:take]
        filled += take
    return out


def _random_orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Orthonormal columns with a sign convention fixed by the QR factor."""
    G = _standard_normals(rng, rows * cols).reshape(rows, cols)
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


@dataclass(frozen=True)
class LeastSquaresInstance:
    """Data of the inner problem ||A x - b||^2 with x >= 0.

    ``lipschitz_grad`` is 2 * (largest singular value of A)^2, the exact
    Lipschitz constant of the gradient 2 A'(A x - b).
    """

    A: np.ndarray
    b: np.ndarray
    noise_sigma: float = 0.0
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        if A.ndim != 2:
            raise ConfigurationError(f"A must be a matrix, got ndim={A.ndim}")
        if A.shape[0] != b.shape[0]:
            raise ConfigurationError(
                f"A has {A.shape[0]} rows but b has {b.shape[0]} entries"
            )
        A.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        sv = np.linalg.svd(A, compute_uv=False)
        object.__setattr__(self, "_singular_values", sv)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def lipschitz_grad(self) -> float:
        return float(2.0 * self._singular_values[0] ** 2)

    def objective(self) -> SmoothFunction:
        """The smooth part f(x) = ||A x - b||^2 as a SmoothFunction."""
        A, b = self.A, self.b
        sv = self._singular_values
        sigma = 2.0 * sv[-1] ** 2 if sv.size == self.n else 0.0

        def value(x):
            r = A @ x - b
            return float(r @ r)

        def gradient(x):
            return 2.0 * (A.T @ (A @ x - b))

        return SmoothFunction(
            value=value,
            gradient=gradient,
            lipschitz_grad=self.lipschitz_grad,
            strong_convexity=float(sigma),
        )


@dataclass(frozen=True)
class BilevelProblem:
    """Inner composite pair (f, g) plus a strongly convex outer objective.

    ``outer`` needs ``strong_convexity > 0`` and either a ``gradient`` (for
    the smooth solver path) or a ``prox`` (nonsmooth path).  When the problem
    was assembled from a least-squares instance, the raw data stays attached
    so exact oracles can reach it.
    """

    inner_smooth: SmoothFunction
    inner_prox: object
    outer: object
    dimension: int
    least_squares: LeastSquaresInstance | None = None

    def __post_init__(self):
        if getattr(self.outer, "strong_convexity", 0.0) <= 0:
            raise ConfigurationError("the outer objective must be strongly convex")
        if self.dimension < 1:
            raise ConfigurationError("dimension must be positive")

    def phi(self, x) -> float:
        """Inner objective f + g (may be +inf outside the domain of g)."""
        return float(self.inner_smooth.value(x) + self.inner_prox.value(x))


def make_bilevel(instance: LeastSquaresInstance, outer) -> BilevelProblem:
    """Bi-level problem with the instance's least squares + nonnegativity as
    the inner level and ``outer`` on top."""
    outer_dim = getattr(outer, "dimension", instance.n)
    if outer_dim != instance.n:
        raise ConfigurationError(
            f"outer objective acts on dimension {outer_dim}, instance has {instance.n}"
        )
    return BilevelProblem(
        inner_smooth=instance.objective(),
        inner_prox=nonnegative_orthant(),
        outer=outer,
        dimension=instance.n,
        least_squares=instance,
    )


def generate_rank_deficient_ls(
    m: int, n: int, rank: int, sv_decay: float, seed: int
) -> LeastSquaresInstance:
    """Ill-conditioned least-squares instance with a known solution set.

    A = U diag(sv) V' with sv_i = sv_decay^(i-1) for i <= rank and zero
    afterward; U, V have random orthonormal columns.  The right-hand side is
    b = A x_true for a nonnegative x_true, so the system is consistent, the
    optimal value is zero and the solution set is the intersection of an
    affine set of dimension n - rank with the orthant.
    """
    if rank >= min(m, n):
        raise ConfigurationError(
            f"rank must be < min(m, n) = {min(m, n)} to leave a nontrivial "
            f"solution set, got {rank}"
        )
    if rank < 1:
        raise ConfigurationError("rank must be at least 1")
    if not 0.0 < sv_decay < 1.0:
        raise ConfigurationError(f"sv_decay must lie in (0, 1), got {sv_decay}")
    rng = np.random.default_rng(seed)
    U = _random_orthonormal(rng, m, rank)
    V = _random_orthonormal(rng, n, rank)
    sv = sv_decay ** np.arange(rank)
    A = (U * sv) @ V.T
    x_true = rng.random(n)
    b = A @ x_true
    return LeastSquaresInstance(
        A=A,
        b=b,
        noise_sigma=0.0,
        seed=seed,
        metadata={
            "generator": "rank-deficient-svd",
            "m": m,
            "n": n,
            "rank": rank,
            "sv_decay": sv_decay,
            "seed": seed,
            "x_true": x_true,
            "noise_algorithm": NOISE_ALGORITHM,
        },
    )


def add_noise(
    instance: LeastSquaresInstance, rho: float, seed: int
) -> LeastSquaresInstance:
    """Perturb the right-hand side: b + rho * eps with standard normal eps.

    ``rho = 0`` returns the instance unchanged.  The matrix is shared, only
    b differs; different seeds give different perturbations.
    """
    if rho < 0:
        raise ConfigurationError(f"rho must be nonnegative, got {rho}")
    if rho == 0:
        return instance
    rng = np.random.default_rng(seed)
    eps = _standard_normals(rng, instance.m)
    metadata = dict(instance.metadata)
    metadata["noise_seed"] = seed
    metadata["noise_algorithm"] = NOISE_ALGORITHM
    return LeastSquaresInstance(
        A=instance.A,
        b=instance.b + rho * eps,
        noise_sigma=rho,
        seed=instance.seed,
        metadata=metadata,
    )


NOISE_PRESETS = (1e-1, 1e-2, 1e-3)


@dataclass(frozen=True)
class FirstDifferenceOperator:
    """Bidiagonal (n-1) x n matrix with rows (..., +1, -1, ...).

    Row i has +1 in column i and -1 in column i+1; applying it to a vector
    yields consecutive differences.
    """

    n: int
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError("first-difference operator needs n >= 2")
        D = np.zeros((self.n - 1, self.n))
        idx = np.arange(self.n - 1)
        D[idx, idx] = 1.0
        D[idx, idx + 1] = -1.0
        D.flags.writeable = False
        object.__setattr__(self, "matrix", D)


def quadratic_outer_from_operator(op: FirstDifferenceOperator) -> Quadratic:
    """Outer objective (1/2) x' Q x with Q = D' D + I (size n x n).

    With D of shape (n-1) x n, the Gram form D' D + I is the n x n matrix
    that keeps the objective acting on n-vectors; its eigenvalues lie in
    [1, 5), so strong convexity of at least 1 comes for free.
    """
    D = op.matrix
    Q = D.T @ D + np.eye(op.n)
    return Quadratic(Q)


# ---------------------------------------------------------------------------
# File ingestion
# ---------------------------------------------------------------------------


def _infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".mtx", ".mm"):
        return "matrixmarket"
    if suffix == ".csv":
        return "csv"
    raise ConfigurationError(
        f"cannot infer format from {path!r}; pass format='matrixmarket' or 'csv'"
    )


def _load_matrixmarket(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise MatrixParseError(path, 1, "empty file")
    header = lines[0].strip().split()
    if len(header) < 4 or header[0] != "%%MatrixMarket" or header[1].lower() != "matrix":
        raise MatrixParseError(path, 1, "missing '%%MatrixMarket matrix' header")
    layout = header[2].lower()
    dtype = header[3].lower()
    symmetry = header[4].lower() if len(header) > 4 else "general"
    if layout not in ("coordinate", "array"):
        raise MatrixParseError(path, 1, f"unsupported layout {layout!r}")
    if dtype not in ("real", "integer", "double"):
        raise MatrixParseError(path, 1, f"unsupported field type {dtype!r}")
    if symmetry not in ("general", "symmetric"):
        raise MatrixParseError(path, 1, f"unsupported symmetry {symmetry!r}")

    body = [
        (i + 1, ln.strip())
        for i, ln in enumerate(lines[1:], start=1)
        if ln.strip() and not ln.lstrip().startswith("%")
    ]
    if not body:
        raise MatrixParseError(path, len(lines), "missing size line")
    size_lineno, size_line = body[0]
    parts = size_line.split()

    if layout == "coordinate":
        if len(parts) != 3:
            raise MatrixParseError(
                path, size_lineno, f"expected 'rows cols nnz', got {size_line!r}"
            )
        try:
            rows, cols, nnz = (int(p) for p in parts)
        except ValueError:
            raise MatrixParseError(
                path, size_lineno, f"non-integer size entry in {size_line!r}"
            ) from None
        M = np.zeros((rows, cols))
        entries = body[1:]
        if len(entries) < nnz:
            lineno = entries[-1][0] if entries else size_lineno
            raise MatrixParseError(
                path, lineno, f"file ends after {len(entries)} of {nnz} entries"
            )
        for lineno, line in entries[:nnz]:
            fields = line.split()
            if len(fields) != 3:
                raise MatrixParseError(
                    path, lineno, f"expected 'i j value', got {line!r}"
                )
            try:
                i, j = int(fields[0]), int(fields[1])
                v = float(fields[2])
            except ValueError:
                raise MatrixParseError(
                    path, lineno, f"malformed entry {line!r}"
                ) from None
            if not (1 <= i <= rows and 1 <= j <= cols):
                raise MatrixParseError(
                    path, lineno, f"index ({i}, {j}) outside {rows} x {cols}"
                )
            M[i - 1, j - 1] = v
            if symmetry == "symmetric":
                M[j - 1, i - 1] = v
        return M

    if len(parts) != 2:
        raise MatrixParseError(
            path, size_lineno, f"expected 'rows cols', got {size_line!r}"
        )
    try:
        rows, cols = (int(p) for p in parts)
    except ValueError:
        raise MatrixParseError(
            path, size_lineno, f"non-integer size entry in {size_line!r}"
        ) from None
    if symmetry != "general":
        raise MatrixParseError(
            path, size_lineno, "symmetric array layout is not supported"
        )
    values = []
    for lineno, line in body[1:]:
        for tok in line.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise MatrixParseError(
                    path, lineno, f"malformed value {tok!r}"
                ) from None
    if len(values) != rows * cols:
        lineno = body[-1][0]
        raise MatrixParseError(
            path, lineno, f"expected {rows * cols} values, found {len(values)}"
        )
    return np.asarray(values).reshape((cols, rows)).T  # column-major order


def _load_csv(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            try:
                row = [float(f) for f in fields]
            except ValueError:
                bad = next(f for f in fields if not _is_float(f))
                raise MatrixParseError(
                    path, lineno, f"malformed value {bad.strip()!r}"
                ) from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise MatrixParseError(
                    path, lineno, f"row has {len(row)} entries, expected {width}"
                )
            rows.append(row)
    if not rows:
        raise MatrixParseError(path, 1, "empty file")
    return np.asarray(rows)


def _is_float(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def load_matrix(path, format: str | None = None) -> np.ndarray:
    """Load a dense matrix from a MatrixMarket or CSV file.

    Vectors come back as single-column matrices.  Parse failures raise
    :class:`MatrixParseError` naming the offending line.
    """
    fmt = format or _infer_format(path)
    if fmt == "matrixmarket":
        M = _load_matrixmarket(path)
    elif fmt == "csv":
        M = _load_csv(path)
    else:
        raise ConfigurationError(f"unknown format {fmt!r}")
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    return M


def save_matrix(path, M, format: str | None = None) -> None:
    """Write a dense matrix as MatrixMarket array format or CSV.

    Floats are rendered with 17 significant digits so a load round-trips
    bit-exactly.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    fmt = format or _infer_format(path)
    if fmt == "matrixmarket":
        with open(path, "w", encoding="ascii") as fh:
            fh.write("%%MatrixMarket matrix array real general\n")
            fh.write(f"{M.shape[0]} {M.shape[1]}\n")
            for v in M.T.ravel():  # column-major order
                fh.write(f"{v:.17g}\n")
    elif fmt == "csv":
        with open(path, "w", encoding="ascii") as fh:
            for row in M:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    else:
        raise ConfigurationError(f"unknown format {fmt!r}")


def instance_from_files(
    matrix_path, rhs_path, format: str | None = None
) -> LeastSquaresInstance:
    """Assemble an instance from a matrix file and a companion vector file."""
    A = load_matrix(matrix_path, format=format)
    b = load_matrix(rhs_path, format=format)
    if 1 not in b.shape and b.ndim == 2:
        raise ConfigurationError(
            f"{rhs_path!r} holds a {b.shape[0]} x {b.shape[1]} matrix, expected a vector"
        )
    b = b.reshape(-1)
    if A.shape[0] != b.shape[0]:
        raise ConfigurationError(
            f"matrix {matrix_path!r} has {A.shape[0]} rows but vector "
            f"{rhs_path!r} has {b.shape[0]} entries"
        )
    return LeastSquaresInstance(
        A=A,
        b=b,
        metadata={"matrix_path": str(matrix_path), "rhs_path": str(rhs_path)},
    )
