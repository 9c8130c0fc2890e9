"""Command-line front end: solves, sweeps, Monte-Carlo benchmarks, metrics.

Configuration comes from a TOML file (flat keys matching
:class:`RunConfig` fields) plus flag overrides; flags win.  Exit codes:
0 success, 1 configuration error, 2 numerical failure, 3 I/O error.

The trajectory CSV layout is fixed: columns ``k, alpha, phi_y, omega_y,
step_residual, map_residual, elapsed_seconds`` (plus
``distance_to_reference`` when an oracle point is available), RFC-4180
quoting, floats rendered with 17 significant digits so parsing them back
reproduces the doubles bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, MatrixParseError, NumericalError
from .oracle import (
    ENUMERATION_MAX_DIM,
    OracleSolution,
    high_accuracy_reference,
    omega_lower_bound,
    oracle_solve,
)
from .problems import (
    FirstDifferenceOperator,
    LeastSquaresInstance,
    add_noise,
    generate_rank_deficient_ls,
    instance_from_files,
    make_bilevel,
    quadratic_outer_from_operator,
    save_matrix,
)
from .solver import SolveConfig, Trajectory, bigsam_run, tikhonov_baseline_run

OUTPUT_DIR_ENV = "BIGSAM_OUTPUT_DIR"

TRAJECTORY_COLUMNS = (
    "k",
    "alpha",
    "phi_y",
    "omega_y",
    "step_residual",
    "map_residual",
    "elapsed_seconds",
)

REPORT_COLUMNS = (
    "kind",
    "problem",
    "rho",
    "gamma",
    "replication",
    "iterations",
    "elapsed_seconds",
    "rfg",
    "rog",
    "rog_is_absolute",
    "termination",
    "at_limit_count",
    "error",
)


def metric_rfg(phi_y: float, phi_star: float) -> float:
    """Relative feasibility gap (phi(y) - phi*) / phi*; needs phi* > 0."""
    if phi_star <= 0:
        raise ConfigurationError(
            "relative feasibility gap needs phi* > 0; report the absolute gap "
            "phi(y) - phi* for zero-residual instances"
        )
    return (phi_y - phi_star) / phi_star


def metric_rog(omega_y: float, omega_star: float) -> float:
    """Relative optimality gap |omega(y) - omega*| / |omega*|.

    Falls back to the absolute gap |omega(y)| when omega* is zero; benchmark
    rows carry a flag for that case.
    """
    if omega_star == 0:
        return abs(omega_y)
    return abs(omega_y - omega_star) / abs(omega_star)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------


def emit_csv(obj, path, x_reference=None, preamble: list[str] | None = None) -> None:
    """Write a trajectory or benchmark report as CSV.

    ``preamble`` lines, when given, are written as '#'-prefixed comments
    above the header (the loader skips them).  ``x_reference`` appends a
    ``distance_to_reference`` column to trajectory files.
    """
    try:
        with open(path, "w", newline="", encoding="ascii") as fh:
            if preamble:
                for line in preamble:
                    fh.write(f"# {line}\n")
            writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
            if isinstance(obj, Trajectory):
                columns = TRAJECTORY_COLUMNS
                if x_reference is not None:
                    x_reference = np.asarray(x_reference, dtype=float)
                    columns = columns + ("distance_to_reference",)
                writer.writerow(columns)
                for r in obj.records:
                    row = [
                        _fmt(r.k),
                        _fmt(r.alpha),
                        _fmt(r.phi_y),
                        _fmt(r.omega_y),
                        _fmt(r.step_residual),
                        _fmt(r.map_residual),
                        _fmt(r.elapsed),
                    ]
                    if x_reference is not None:
                        row.append(_fmt(float(np.linalg.norm(r.x - x_reference))))
                    writer.writerow(row)
            elif isinstance(obj, BenchmarkReport):
                writer.writerow(REPORT_COLUMNS)
                for row in obj.rows + obj.aggregates:
                    writer.writerow([_fmt(getattr(row, c)) for c in REPORT_COLUMNS])
            else:
                raise ConfigurationError(
                    f"emit_csv cannot serialize {type(obj).__name__}"
                )
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def load_trajectory_csv(path) -> dict[str, np.ndarray]:
    """Parse a trajectory CSV back into column arrays (comments skipped)."""
    with open(path, "r", newline="", encoding="ascii") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise MatrixParseError(path, 1, "empty trajectory file")
    header, body = rows[0], rows[1:]
    data = {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}
    return data


# ---------------------------------------------------------------------------
# Benchmark harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Benchmark / solve configuration; every output file echoes it."""

    # problem: generated unless matrix/rhs files are given
    m: int = 30
    n: int = 10
    rank: int = 5
    sv_decay: float = 0.8
    instance_seed: int = 0
    matrix_file: str | None = None
    rhs_file: str | None = None
    file_format: str | None = None
    # solver
    solver: str = "bigsam"
    gammas: tuple[float, ...] = (1.0,)
    t: float | None = None
    s: float | None = None
    # sweep
    rho_grid: tuple[float, ...] = (1e-2,)
    replications: int = 1
    base_seed: int = 1000
    # stopping
    max_iterations: int = 100_000
    residual_tol: float = 1e-9
    relative_gap_tol: float | None = 1e-2
    time_limit: float | None = None
    record_every: int = 1
    # output
    output_dir: str | None = None
    emit_trajectories: bool = False
    parallelism: int = 1

    def __post_init__(self):
        if self.solver not in ("bigsam", "tikhonov"):
            raise ConfigurationError(f"unknown solver {self.solver!r}")
        if self.replications < 1:
            raise ConfigurationError("replications must be at least 1")
        if self.parallelism < 1:
            raise ConfigurationError("parallelism must be at least 1")
        if not self.gammas:
            raise ConfigurationError("gammas must be nonempty")
        for g in self.gammas:
            if not 0.0 < g <= 1.0:
                raise ConfigurationError(f"gamma must lie in (0, 1], got {g}")
        for rho in self.rho_grid:
            if rho < 0:
                raise ConfigurationError(f"rho must be nonnegative, got {rho}")
        if (self.matrix_file is None) != (self.rhs_file is None):
            raise ConfigurationError(
                "matrix_file and rhs_file must be given together"
            )

    def echo(self) -> str:
        d = dataclasses.asdict(self)
        return json.dumps(d, sort_keys=True)

    def resolved_output_dir(self) -> Path:
        if self.output_dir is not None:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


@dataclass(frozen=True)
class BenchmarkRow:
    kind: str
    problem: str
    rho: float
    gamma: float
    replication: int | None
    iterations: int | None
    elapsed_seconds: float | None
    rfg: float | None
    rog: float | None
    rog_is_absolute: bool
    termination: str
    at_limit_count: int | None = None
    error: str = ""


@dataclass(frozen=True)
class BenchmarkReport:
    rows: list[BenchmarkRow]
    aggregates: list[BenchmarkRow]
    config: RunConfig


def _noise_seed(base: int, rho_index: int, replication: int) -> int:
    return base + 10_007 * rho_index + replication


def _base_instance(cfg: RunConfig) -> tuple[LeastSquaresInstance, str]:
    if cfg.matrix_file is not None:
        instance = instance_from_files(
            cfg.matrix_file, cfg.rhs_file, format=cfg.file_format
        )
        return instance, Path(cfg.matrix_file).stem
    instance = generate_rank_deficient_ls(
        cfg.m, cfg.n, cfg.rank, cfg.sv_decay, cfg.instance_seed
    )
    return instance, f"svd-m{cfg.m}-n{cfg.n}-r{cfg.rank}-seed{cfg.instance_seed}"


def _reference_values(problem) -> tuple[float, float, OracleSolution | None]:
    """phi* and omega* by the path matching the instance size."""
    if problem.dimension <= ENUMERATION_MAX_DIM:
        sol = oracle_solve(problem)
        return sol.phi_star, sol.omega_star, sol
    phi_star = high_accuracy_reference(problem).phi
    omega_star = omega_lower_bound(problem, phi_star=phi_star).value
    return phi_star, omega_star, None


def run_benchmark(cfg: RunConfig) -> BenchmarkReport:
    """Monte-Carlo sweep over (rho, gamma, replication).

    Each replication draws fresh noise, obtains phi* and omega* from the
    oracle path matching the instance size, runs the configured solver to
    the relative-gap rule or its limits, and records one row.  Failed
    replications keep their row with the error message.  Aggregates are
    plain means over the successful member rows plus the count of rows that
    stopped at an iteration or time limit.
    """
    base, problem_id = _base_instance(cfg)
    op = FirstDifferenceOperator(base.n)
    outer = quadratic_outer_from_operator(op)

    tasks = []
    for rho_idx, rho in enumerate(cfg.rho_grid):
        for rep in range(cfg.replications):
            noisy = add_noise(base, rho, _noise_seed(cfg.base_seed, rho_idx, rep))
            problem = make_bilevel(noisy, outer)
            try:
                phi_star, omega_star, _ = _reference_values(problem)
            except Exception as exc:  # recorded, not dropped
                for gamma in cfg.gammas:
                    tasks.append((rho, gamma, rep, None, None, None, str(exc)))
                continue
            for gamma in cfg.gammas:
                tasks.append((rho, gamma, rep, problem, phi_star, omega_star, None))

    def run_task(task) -> BenchmarkRow:
        rho, gamma, rep, problem, phi_star, omega_star, err = task
        if err is not None:
            return BenchmarkRow(
                kind="run",
                problem=problem_id,
                rho=rho,
                gamma=gamma,
                replication=rep,
                iterations=None,
                elapsed_seconds=None,
                rfg=None,
                rog=None,
                rog_is_absolute=False,
                termination="error",
                error=err,
            )
        try:
            gap_tol = cfg.relative_gap_tol
            if gap_tol is not None and phi_star <= 0:
                gap_tol = None  # zero-residual instance: fall back to residual rule
            solve_cfg = SolveConfig(
                t=cfg.t,
                s=cfg.s,
                gamma=gamma,
                max_iterations=cfg.max_iterations,
                residual_tol=cfg.residual_tol,
                relative_gap_tol=gap_tol,
                phi_star=phi_star if gap_tol is not None else None,
                time_limit=cfg.time_limit,
                record_every=cfg.record_every,
            )
            if cfg.solver == "bigsam":
                trajectory = bigsam_run(problem, solve_cfg)
            else:
                trajectory = tikhonov_baseline_run(problem, cfg=solve_cfg)
            final = trajectory.records[-1]
            rfg = metric_rfg(final.phi_y, phi_star) if phi_star > 0 else None
            rog = metric_rog(final.omega_y, omega_star)
            row = BenchmarkRow(
                kind="run",
                problem=problem_id,
                rho=rho,
                gamma=gamma,
                replication=rep,
                iterations=trajectory.iterations,
                elapsed_seconds=trajectory.elapsed,
                rfg=rfg,
                rog=rog,
                rog_is_absolute=(omega_star == 0),
                termination=trajectory.termination.value,
            )
            if cfg.emit_trajectories:
                out = cfg.resolved_output_dir()
                out.mkdir(parents=True, exist_ok=True)
                name = f"trajectory_rho{rho:g}_gamma{gamma:g}_rep{rep}.csv"
                emit_csv(trajectory, out / name, preamble=[cfg.echo()])
            return row
        except Exception as exc:
            return BenchmarkRow(
                kind="run",
                problem=problem_id,
                rho=rho,
                gamma=gamma,
                replication=rep,
                iterations=None,
                elapsed_seconds=None,
                rfg=None,
                rog=None,
                rog_is_absolute=False,
                termination="error",
                error=str(exc),
            )

    if cfg.parallelism == 1:
        rows = [run_task(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            rows = list(pool.map(run_task, tasks))
    rows.sort(key=lambda r: (r.rho, r.gamma, r.replication))

    aggregates = []
    for rho_idx, rho in enumerate(cfg.rho_grid):
        for gamma in cfg.gammas:
            members = [r for r in rows if r.rho == rho and r.gamma == gamma]
            good = [r for r in members if not r.error]
            if not good:
                continue

            def mean(attr):
                return float(np.mean([getattr(r, attr) for r in good]))

            at_limit = sum(
                r.termination in ("max-iterations", "time-limit") for r in good
            )
            aggregates.append(
                BenchmarkRow(
                    kind="aggregate",
                    problem=problem_id,
                    rho=rho,
                    gamma=gamma,
                    replication=None,
                    iterations=mean("iterations"),
                    elapsed_seconds=mean("elapsed_seconds"),
                    rfg=mean("rfg") if all(r.rfg is not None for r in good) else None,
                    rog=mean("rog"),
                    rog_is_absolute=good[0].rog_is_absolute,
                    termination="",
                    at_limit_count=at_limit,
                )
            )
    return BenchmarkReport(rows=rows, aggregates=aggregates, config=cfg)


# ---------------------------------------------------------------------------
# Command-line interface
# ---------------------------------------------------------------------------


def _load_toml(path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc


def _config_from_args(args) -> RunConfig:
    values: dict = {}
    if args.config:
        raw = _load_toml(args.config)
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(
                f"unknown config keys in {args.config}: {sorted(unknown)}"
            )
        values.update(raw)
    overrides = {
        "m": args.m,
        "n": args.n,
        "rank": args.rank,
        "sv_decay": args.sv_decay,
        "instance_seed": args.instance_seed,
        "matrix_file": args.matrix_file,
        "rhs_file": args.rhs_file,
        "file_format": args.file_format,
        "solver": args.solver,
        "t": args.t,
        "s": args.s,
        "replications": args.replications,
        "base_seed": args.base_seed,
        "max_iterations": args.max_iterations,
        "residual_tol": args.residual_tol,
        "relative_gap_tol": args.relative_gap_tol,
        "time_limit": args.time_limit,
        "record_every": args.record_every,
        "output_dir": args.output_dir,
        "parallelism": args.parallelism,
    }
    if args.gamma:
        overrides["gammas"] = tuple(args.gamma)
    if args.rho:
        overrides["rho_grid"] = tuple(args.rho)
    if getattr(args, "emit_trajectories", False):
        overrides["emit_trajectories"] = True
    values.update({k: v for k, v in overrides.items() if v is not None})
    for key in ("gammas", "rho_grid"):
        if key in values:
            values[key] = tuple(values[key])
    return RunConfig(**values)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file (flags override its keys)")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--sv-decay", dest="sv_decay", type=float, default=None)
    p.add_argument("--instance-seed", dest="instance_seed", type=int, default=None)
    p.add_argument("--matrix-file", dest="matrix_file", default=None)
    p.add_argument("--rhs-file", dest="rhs_file", default=None)
    p.add_argument(
        "--file-format",
        dest="file_format",
        choices=("matrixmarket", "csv"),
        default=None,
    )
    p.add_argument("--solver", choices=("bigsam", "tikhonov"), default=None)
    p.add_argument("--gamma", type=float, action="append", default=None)
    p.add_argument("--rho", type=float, action="append", default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--base-seed", dest="base_seed", type=int, default=None)
    p.add_argument("--max-iterations", dest="max_iterations", type=int, default=None)
    p.add_argument("--residual-tol", dest="residual_tol", type=float, default=None)
    p.add_argument(
        "--relative-gap-tol", dest="relative_gap_tol", type=float, default=None
    )
    p.add_argument("--time-limit", dest="time_limit", type=float, default=None)
    p.add_argument("--record-every", dest="record_every", type=int, default=None)
    p.add_argument("--output-dir", dest="output_dir", default=None)
    p.add_argument("--parallelism", type=int, default=None)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bigsam",
        description="Bi-level solves, sweeps and benchmarks for composite "
        "least-squares problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one solve and emit its trajectory")
    _add_common_flags(p_solve)
    p_solve.add_argument(
        "--with-oracle",
        action="store_true",
        help="compute the exact oracle (tiny instances) to add the "
        "distance-to-optimum column and gap stopping",
    )

    p_bench = sub.add_parser("benchmark", help="Monte-Carlo sweep, report.csv output")
    _add_common_flags(p_bench)
    p_bench.add_argument(
        "--emit-trajectories",
        dest="emit_trajectories",
        action="store_true",
        help="also write one trajectory CSV per run",
    )

    p_oracle = sub.add_parser("oracle", help="reference values for the instance")
    _add_common_flags(p_oracle)
    p_oracle.add_argument("--mu", type=float, default=1e-4)

    p_gen = sub.add_parser("generate", help="write the generated instance to files")
    _add_common_flags(p_gen)
    p_gen.add_argument(
        "--format",
        choices=("matrixmarket", "csv"),
        default="matrixmarket",
        help="output file format",
    )

    p_inspect = sub.add_parser("inspect", help="summarize a matrix or trajectory file")
    p_inspect.add_argument("path")
    p_inspect.add_argument(
        "--file-format",
        dest="file_format",
        choices=("matrixmarket", "csv", "trajectory"),
        default=None,
    )
    return parser


def _problem_from_config(cfg: RunConfig, rho: float, rho_index: int = 0, rep: int = 0):
    base, problem_id = _base_instance(cfg)
    noisy = add_noise(base, rho, _noise_seed(cfg.base_seed, rho_index, rep))
    outer = quadratic_outer_from_operator(FirstDifferenceOperator(base.n))
    return make_bilevel(noisy, outer), problem_id


def _cmd_solve(args) -> int:
    cfg = _config_from_args(args)
    rho = cfg.rho_grid[0]
    gamma = cfg.gammas[0]
    problem, problem_id = _problem_from_config(cfg, rho)

    phi_star = None
    x_reference = None
    gap_tol = None
    if args.with_oracle:
        if problem.dimension > ENUMERATION_MAX_DIM:
            ref = high_accuracy_reference(problem)
            phi_star = ref.phi
        else:
            sol = oracle_solve(problem)
            phi_star = sol.phi_star
            x_reference = sol.x_mn
        if cfg.relative_gap_tol is not None and phi_star > 0:
            gap_tol = cfg.relative_gap_tol

    solve_cfg = SolveConfig(
        t=cfg.t,
        s=cfg.s,
        gamma=gamma,
        max_iterations=cfg.max_iterations,
        residual_tol=cfg.residual_tol,
        relative_gap_tol=gap_tol,
        phi_star=phi_star if gap_tol is not None else None,
        time_limit=cfg.time_limit,
        record_every=cfg.record_every,
    )
    if cfg.solver == "bigsam":
        trajectory = bigsam_run(problem, solve_cfg)
    else:
        trajectory = tikhonov_baseline_run(problem, cfg=solve_cfg)

    out = cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"solve_{cfg.solver}_{problem_id}_rho{rho:g}_gamma{gamma:g}.csv"
    emit_csv(trajectory, path, x_reference=x_reference, preamble=[cfg.echo()])
    final = trajectory.records[-1]
    print(
        f"{cfg.solver}: {trajectory.iterations} iterations, "
        f"termination={trajectory.termination.value}, "
        f"phi(y)={final.phi_y:.12g}, map_residual={final.map_residual:.3e}"
    )
    print(f"trajectory written to {path}")
    return 0


def _cmd_benchmark(args) -> int:
    cfg = _config_from_args(args)
    report = run_benchmark(cfg)
    out = cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.csv"
    emit_csv(report, path, preamble=[cfg.echo()])
    n_err = sum(1 for r in report.rows if r.error)
    print(
        f"benchmark: {len(report.rows)} runs ({n_err} failed), "
        f"{len(report.aggregates)} aggregate rows"
    )
    print(f"report written to {path}")
    return 0


def _cmd_oracle(args) -> int:
    cfg = _config_from_args(args)
    rho = cfg.rho_grid[0]
    problem, problem_id = _problem_from_config(cfg, rho)
    out = cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)

    if problem.dimension <= ENUMERATION_MAX_DIM:
        sol = oracle_solve(problem)
        payload = {
            "problem": problem_id,
            "method": sol.method,
            "phi_star": sol.phi_star,
            "omega_star": sol.omega_star,
            "x_mn": sol.x_mn.tolist(),
            "face_dimension": sol.description.face_dimension,
            "vertices": sol.description.vertices.tolist(),
        }
    else:
        ref = high_accuracy_reference(problem)
        bound = omega_lower_bound(problem, mu=args.mu, phi_star=ref.phi)
        payload = {
            "problem": problem_id,
            "method": ref.method,
            "phi_star": ref.phi,
            "phi_star_converged": ref.converged,
            "omega_star": bound.value,
            "omega_star_approximate": bound.approximate,
        }
    path = out / "oracle.json"
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2)
    print(f"phi_star = {payload['phi_star']:.12g}")
    print(f"omega_star = {payload['omega_star']:.12g}")
    print(f"oracle written to {path}")
    return 0


def _cmd_generate(args) -> int:
    cfg = _config_from_args(args)
    rho = cfg.rho_grid[0]
    base, problem_id = _base_instance(cfg)
    noisy = add_noise(base, rho, _noise_seed(cfg.base_seed, 0, 0))
    out = cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    ext = "mtx" if args.format == "matrixmarket" else "csv"
    a_path = out / f"{problem_id}_A.{ext}"
    b_path = out / f"{problem_id}_b.{ext}"
    save_matrix(a_path, noisy.A, format=args.format)
    save_matrix(b_path, noisy.b.reshape(-1, 1), format=args.format)
    meta = {
        "problem": problem_id,
        "rho": rho,
        "config": json.loads(cfg.echo()),
        "lipschitz_grad": noisy.lipschitz_grad,
    }
    with open(out / f"{problem_id}_meta.json", "w", encoding="ascii") as fh:
        json.dump(meta, fh, indent=2)
    print(f"instance written to {a_path} and {b_path}")
    return 0


def _cmd_inspect(args) -> int:
    fmt = args.file_format
    path = Path(args.path)
    if fmt is None:
        fmt = "trajectory" if "trajectory" in path.name or "solve" in path.name else None
    if fmt == "trajectory":
        data = load_trajectory_csv(path)
        ks = data["k"]
        print(f"trajectory: {len(ks)} records, final k = {int(ks[-1])}")
        print(f"final phi_y = {data['phi_y'][-1]:.12g}")
        print(f"final map_residual = {data['map_residual'][-1]:.3e}")
        return 0
    from .problems import load_matrix

    M = load_matrix(path, format=fmt)
    sv = np.linalg.svd(M, compute_uv=False) if min(M.shape) > 0 else np.array([])
    eps_rank = int(np.sum(sv > max(M.shape) * np.finfo(float).eps * (sv[0] if sv.size else 1)))
    print(f"matrix: {M.shape[0]} x {M.shape[1]}, numerical rank {eps_rank}")
    if sv.size:
        print(f"largest singular value  {sv[0]:.6g}")
        print(f"smallest singular value {sv[-1]:.6g}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "solve": _cmd_solve,
        "benchmark": _cmd_benchmark,
        "oracle": _cmd_oracle,
        "generate": _cmd_generate,
        "inspect": _cmd_inspect,
    }
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (OSError, MatrixParseError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
