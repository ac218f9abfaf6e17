"""
Command-line surface.

    gen     write a seeded instance file
    solve   full solve of an instance; prints the objective, optionally writes x and duals
    accel   sample-and-threshold feasibility search on an instance
    clones  speculative run of K accelerator clones, best of the first k
    bench   sweep plan -> per-run CSV (and a summary CSV)
    check   feasibility and complementary slackness of a solution file
    bound   smallest eps_f the worst-case guarantee allows

Exit codes: 0 success, 1 infeasible solution or invalid input, 2 solver
failure, 3 I/O failure.
"""

import functools
import logging
import sys

import click

from packing_accel.config import AcceleratorConfig, CloneConfig, config, load_key_values, parse_schedule
from packing_accel.core.accelerator import run_schedule, theoretical_ef_flagged
from packing_accel.core.bench import BenchPlan, load_plan, run_experiment, summarize, SUMMARY_COLUMNS
from packing_accel.core.cloning import run_clone_config
from packing_accel.core.generators import GeneratorSpec, generate, load_spec
from packing_accel.core.lp import check_feasible, min_b, objective
from packing_accel.core.slackness import check_slackness
from packing_accel.core.solvers import available_solvers, get_solver
from packing_accel.errors import (AcceleratorError, CloningError, DimensionError, InvalidReferenceError,
                                  ReportError, SolverError, SpecError, ValidationError)
from packing_accel.protocol.formats import (emit_csv, format_real, read_duals, read_instance, read_solution,
                                            write_duals, write_instance, write_rows, write_solution)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER = 2
EXIT_IO = 3


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, (ValidationError, SpecError, DimensionError, InvalidReferenceError)):
        return EXIT_INVALID
    if isinstance(error, (SolverError, AcceleratorError, CloningError)):
        return EXIT_SOLVER
    if isinstance(error, (OSError, ReportError)):
        return EXIT_IO
    raise error


def handle_errors(func):
    """Maps package and I/O errors to exit codes with a one-line message on stderr."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ValidationError, SpecError, DimensionError, InvalidReferenceError,
                SolverError, AcceleratorError, CloningError, OSError, ReportError) as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(exit_code_for(e))

    return wrapper


def make_solver(name: str, alpha_d=None):
    options = {"verbose": config.verbose}
    if name == "dual-ascent" and alpha_d is not None:
        options["alpha_d"] = alpha_d
    return get_solver(name, **options)


def accelerator_options(func):
    """Flags shared by accel and clones."""
    options = [
        click.option("--eps-s", default=0.01, type=float, show_default=True, help="Sampling fraction."),
        click.option("--ef-schedule", default="grid:0.01", show_default=True,
                     help="Comma-separated eps_f values or grid:<step>."),
        click.option("--seed", default=0, type=int, show_default=True, help="Sampling seed."),
        click.option("--solver", default="simplex", type=click.Choice(available_solvers()), show_default=True),
        click.option("--alpha-d", default=None, type=float, help="Dual factor for RHS scaling (default: solver's)."),
        click.option("--fixed-sample", is_flag=True, help="Reuse one sample across the eps_f schedule."),
        click.option("--max-schedule-points", default=None, type=int, help="Stop the schedule early."),
        click.option("--threshold-workers", default=1, type=int, show_default=True),
        click.option("--out", default=None, type=click.Path(dir_okay=False), help="Write x_hat here."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_accelerator_config(eps_s, ef_schedule, seed, solver, alpha_d, fixed_sample, max_schedule_points,
                             threshold_workers) -> AcceleratorConfig:
    try:
        schedule = parse_schedule(ef_schedule)
    except ValueError as e:
        raise SpecError(f"cannot parse eps_f schedule '{ef_schedule}': {e}")
    return AcceleratorConfig(eps_s=eps_s, ef_schedule=schedule, alpha_d=alpha_d, seed=seed,
                             resample_per_ef=not fixed_sample, solver=solver, tol=config.tol,
                             threshold_workers=threshold_workers, max_schedule_points=max_schedule_points)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Debug logging and solver traces on stderr.")
@click.option("--tol", default=1e-7, type=float, show_default=True, help="Feasibility tolerance.")
@click.option("--workers", default=None, type=int, help="Worker threads (default: CPU count).")
def main(verbose, tol, workers):
    # Populate the global config object
    config.verbose = verbose
    config.tol = tol
    if workers is not None:
        config.workers = workers
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


# ============================================================================
# GEN / SOLVE
# ============================================================================

@main.command()
@click.option("--spec", "spec_path", default=None, type=click.Path(dir_okay=False),
              help="Key-value generator spec; overrides the flags below.")
@click.option("--kind", default="random", type=click.Choice(["random", "vicinity"]), show_default=True)
@click.option("--m", default=10, type=int, show_default=True)
@click.option("--n", default=1000, type=int, show_default=True)
@click.option("--p", default=0.8, type=float, show_default=True, help="Density of A.")
@click.option("--b", "b_rule", default="0.1n", show_default=True, help="'0.1n' or an explicit value.")
@click.option("--c-range", default=None, help="lo,hi for the cost draw.")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--nodes", default=0, type=int)
@click.option("--vicinities", default=0, type=int)
@click.option("--vicinity-size", default=0, type=int)
@click.option("--cap", default=0.0, type=float)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@handle_errors
def gen(spec_path, kind, m, n, p, b_rule, c_range, seed, nodes, vicinities, vicinity_size, cap, out):
    """Generate an instance file."""
    if spec_path:
        spec = load_spec(spec_path)
    else:
        if c_range is not None:
            try:
                c_range = tuple(float(v) for v in c_range.split(","))
            except ValueError:
                raise SpecError(f"--c-range expects lo,hi, got {c_range!r}")
        spec = GeneratorSpec(kind=kind, m=m, n=n, p=p, b_rule=b_rule if b_rule == "0.1n" else _to_float(b_rule),
                             c_range=c_range, seed=seed, nodes=nodes, vicinities=vicinities,
                             vicinity_size=vicinity_size, cap=cap)
    lp = generate(spec)
    write_instance(lp, out)
    click.echo(f"{spec.fingerprint()} m={lp.m} n={lp.n} nnz={lp.nnz} -> {out}")


def _to_float(value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise SpecError(f"expected a number, got {value!r}")


@main.command()
@click.argument("instance", type=click.Path(dir_okay=False))
@click.option("--solver", default="simplex", type=click.Choice(available_solvers()), show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False), help="Write x here.")
@click.option("--duals", default=None, type=click.Path(dir_okay=False), help="Write phi and psi here.")
@handle_errors
def solve(instance, solver, out, duals):
    """Full solve of an instance."""
    lp = read_instance(instance)
    outcome = make_solver(solver).solve(lp)
    click.echo(f"objective {format_real(outcome.primal.objective)}")
    click.echo(f"iterations {outcome.iterations}")
    click.echo(f"time {outcome.wall_time:.6f}")
    if out:
        write_solution(outcome.primal.x, out)
    if duals:
        write_duals(outcome.dual, duals)


# ============================================================================
# ACCEL / CLONES
# ============================================================================

@main.command()
@click.argument("instance", type=click.Path(dir_okay=False))
@accelerator_options
@click.option("--trace", is_flag=True, help="Print the eps_f schedule walk.")
@handle_errors
def accel(instance, eps_s, ef_schedule, seed, solver, alpha_d, fixed_sample, max_schedule_points,
          threshold_workers, out, trace):
    """Sample, solve, threshold; raise eps_f until feasible."""
    lp = read_instance(instance)
    accel_config = build_accelerator_config(eps_s, ef_schedule, seed, solver, alpha_d, fixed_sample,
                                            max_schedule_points, threshold_workers)
    run = run_schedule(lp, make_solver(solver, alpha_d), accel_config)
    if trace:
        for eps_f, status in run.trace:
            click.echo(f"eps_f {eps_f:g} {status}")
    report = run.report
    click.echo(f"objective {format_real(report.objective)}")
    click.echo(f"eps_f_used {report.eps_f_used:g}")
    click.echo(f"fallback {str(report.fallback).lower()}")
    click.echo(f"time solve={report.solve_time:.6f} threshold={report.threshold_time:.6f} total={report.total_time:.6f}")
    if out:
        write_solution(run.x_hat, out)


@main.command()
@click.argument("instance", type=click.Path(dir_okay=False))
@accelerator_options
@click.option("--config", "config_path", default=None, type=click.Path(dir_okay=False),
              help="Key-value file with clones.K, clones.k, clones.master_seed, clones.straggler.")
@click.option("--clones-K", "K", default=4, type=int, show_default=True, help="Clones launched.")
@click.option("--clones-k", "k", default=4, type=int, show_default=True, help="Completions considered.")
@click.option("--straggler", default="off", show_default=True,
              help="off | fixed:<clone_id>:<seconds> | pareto:<shape>:<seconds>")
@click.option("--mode", default="full", type=click.Choice(["full", "core"]), show_default=True)
@click.option("--selection", default="completion", type=click.Choice(["completion", "virtual"]),
              show_default=True)
@handle_errors
def clones(instance, eps_s, ef_schedule, seed, solver, alpha_d, fixed_sample, max_schedule_points,
           threshold_workers, out, config_path, K, k, straggler, mode, selection):
    """Run K accelerator clones and keep the best of the first k."""
    lp = read_instance(instance)
    accel_config = build_accelerator_config(eps_s, ef_schedule, seed, solver, alpha_d, fixed_sample,
                                            max_schedule_points, threshold_workers)
    settings = {"K": K, "k": k, "master_seed": seed, "straggler": straggler, "mode": mode, "selection": selection}
    if config_path:
        for key, raw in load_key_values(config_path).items():
            name = key[len("clones."):] if key.startswith("clones.") else key
            if name not in settings:
                raise SpecError(f"unknown clone setting '{key}'")
            if name in ("K", "k", "master_seed"):
                try:
                    raw = int(raw)
                except ValueError:
                    raise SpecError(f"{config_path}: {key} must be an integer, got {raw!r}")
            settings[name] = raw
    clone_config = CloneConfig(workers=config.workers, **settings)

    best, completed = run_clone_config(lp, make_solver(solver, alpha_d), accel_config, clone_config)
    for result in completed:
        click.echo(f"clone {result.clone_id} objective {format_real(result.objective)} "
                   f"eps_f {result.eps_f_used:g} time {result.wall_time:.6f}")
    click.echo(f"best clone {best.clone_id} objective {format_real(best.objective)}")
    click.echo(f"fallback {str(best.fallback).lower()}")
    if out:
        write_solution(best.x_hat, out)


# ============================================================================
# BENCH / CHECK / BOUND
# ============================================================================

@main.command()
@click.option("--plan", "plan_path", default=None, type=click.Path(dir_okay=False),
              help="Key-value plan file; overrides the flags below.")
@click.option("--kind", default="random", type=click.Choice(["random", "vicinity"]), show_default=True)
@click.option("--m", default=10, type=int, show_default=True)
@click.option("--n", default=1000, type=int, show_default=True)
@click.option("--p", default=0.8, type=float, show_default=True)
@click.option("--eps-s", default="0.01", show_default=True, help="Comma-separated sampling fractions.")
@click.option("--ef-schedule", default="grid:0.01", show_default=True)
@click.option("--methods", default="full,accelerate", show_default=True, help="Subset of full,accelerate,clones.")
@click.option("--trials", default=20, type=int, show_default=True)
@click.option("--seed", default=0, type=int, show_default=True, help="Master seed.")
@click.option("--solver", default="simplex", type=click.Choice(available_solvers()), show_default=True)
@click.option("--clones-K", "clones_K", default="8", show_default=True, help="Comma-separated clone counts.")
@click.option("--clones-k", "clones_k", default=4, type=int, show_default=True)
@click.option("--baseline-max-nnz", default=None, type=int, help="Skip full solves above this many nonzeros.")
@click.option("--no-warmup", is_flag=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Per-run CSV.")
@click.option("--summary", default=None, type=click.Path(dir_okay=False), help="Aggregated CSV.")
@handle_errors
def bench(plan_path, kind, m, n, p, eps_s, ef_schedule, methods, trials, seed, solver, clones_K, clones_k,
          baseline_max_nnz, no_warmup, out, summary):
    """Run a sweep and write one CSV row per run."""
    if plan_path:
        plan = load_plan(plan_path)
    else:
        try:
            plan = BenchPlan(
                cells=(GeneratorSpec(kind=kind, m=m, n=n, p=p),),
                eps_s=tuple(float(v) for v in eps_s.split(",")),
                methods=tuple(v.strip() for v in methods.split(",")),
                trials=trials,
                master_seed=seed,
                solver=solver,
                ef_schedule=parse_schedule(ef_schedule),
                clones_K=tuple(int(v) for v in clones_K.split(",")),
                clones_k=clones_k,
                baseline_max_nnz=baseline_max_nnz,
                warmup=not no_warmup,
            )
        except ValueError as e:
            raise SpecError(f"invalid bench flags: {e}")
    reports = run_experiment(plan)
    emit_csv(reports, out)
    click.echo(f"{len(reports)} rows -> {out}")
    if summary:
        write_rows(summary, SUMMARY_COLUMNS, summarize(reports))
        click.echo(f"summary -> {summary}")


@main.command()
@click.argument("instance", type=click.Path(dir_okay=False))
@click.argument("solution", type=click.Path(dir_okay=False))
@click.option("--duals", default=None, type=click.Path(dir_okay=False),
              help="Dual file (m phi lines, n psi lines) for the slackness check.")
@click.option("--alpha-p", default=1.0, type=float, show_default=True)
@click.option("--alpha-d", default=1.0, type=float, show_default=True)
@click.option("--integral", is_flag=True, help="Also require every x_j in {0, 1}.")
@handle_errors
def check(instance, solution, duals, alpha_p, alpha_d, integral):
    """Verify a solution file; exit code 1 when it fails."""
    lp = read_instance(instance)
    x = read_solution(solution, lp.n)
    feasibility = check_feasible(lp, x, tol=config.tol, integral=integral)
    click.echo(f"objective {format_real(objective(lp, x))}")
    click.echo(f"feasible {str(feasibility.feasible).lower()}")
    click.echo(f"worst_violation {feasibility.worst_violation:.3e}")
    if feasibility.violated_rows:
        click.echo(f"violated_rows {' '.join(str(i) for i in feasibility.violated_rows)}")
    if integral:
        click.echo(f"integral {str(feasibility.integral_ok).lower()}")
    passed = feasibility.feasible

    if duals:
        report = check_slackness(lp, x, read_duals(duals, lp.m, lp.n), alpha_p=alpha_p, alpha_d=alpha_d,
                                 tol=config.tol)
        click.echo(f"slackness {'ok' if report.ok else 'violated'}")
        click.echo(f"measured_alpha_p {report.measured_alpha_p:.10g}")
        click.echo(f"measured_alpha_d {report.measured_alpha_d:.10g}")
        passed = passed and report.ok
    sys.exit(EXIT_OK if passed else EXIT_INVALID)


@main.command()
@click.option("--m", default=None, type=int)
@click.option("--n", default=None, type=int)
@click.option("--eps-s", required=True, type=float)
@click.option("--B", "B", default=None, type=float, help="min_i b_i.")
@click.option("--instance", default=None, type=click.Path(dir_okay=False),
              help="Take m, n and B from an instance file instead.")
@handle_errors
def bound(m, n, eps_s, B, instance):
    """Smallest eps_f the worst-case feasibility guarantee allows."""
    if instance:
        lp = read_instance(instance)
        m, n, B = lp.m, lp.n, min_b(lp)
    if None in (m, n, B):
        raise SpecError("--m, --n and --B (or --instance) are required")
    value, out_of_regime = theoretical_ef_flagged(m, n, eps_s, B)
    click.echo(f"eps_f {value:.6g}")
    if out_of_regime:
        click.echo("out of regime: the bound exceeds 1 and guarantees nothing")
