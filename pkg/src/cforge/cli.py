"""Command line entry points: experiment runs, benchmarks, strategy
comparison, invariant verification, the HTTP service, and a reference
LP-file solver usable as an external backend command."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .benchmarks import BUILDERS
from .harness import (
    ExperimentConfig,
    STRATEGIES,
    compare_strategies,
    run_experiment,
)
from .solver import DEFAULT_TIMEOUT_S


def _parse_dist(text: str) -> tuple[str, tuple[float, float]]:
    """'uniform:1:100' -> ('uniform', (1.0, 100.0))."""
    parts = text.split(":")
    if len(parts) != 3 or parts[0] not in ("uniform", "normal"):
        raise click.BadParameter(
            f"expected kind:a:b with kind uniform|normal, got {text!r}"
        )
    return parts[0], (float(parts[1]), float(parts[2]))


def _report(result, out) -> None:
    failures = result.failures
    last = result.aggregate_rows()[-1]
    click.echo(
        f"{result.config.strategy}: {len(result.runs) - len(failures)}/"
        f"{len(result.runs)} sessions ok, final median regret "
        f"{last['median_regret']:.4f}"
    )
    if out:
        click.echo(f"artifacts written to {out}")
    for run in failures:
        click.echo(f"user {run.user_id} failed:\n{run.failure}", err=True)
    if failures:
        sys.exit(1)


@click.group()
def main() -> None:
    """Constructive preference elicitation toolkit."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
def run(config_path: str, out: str | None) -> None:
    """Run the experiment described by a JSON config file."""
    cfg = ExperimentConfig.loads(Path(config_path).read_text())
    result = run_experiment(cfg, out_dir=out)
    _report(result, out)


@main.command()
@click.argument("domain", type=click.Choice(sorted(BUILDERS)))
@click.option("--r", "r", type=int, default=4, help="synthetic domain size")
@click.option("--variant", default="simplified", help="trip variant")
@click.option("--k", type=int, default=2)
@click.option("--users", type=int, default=20)
@click.option("--iters", type=int, default=25)
@click.option("--user-dist", default="uniform:1:100")
@click.option("--lam", type=float, default=1.0)
@click.option("--noiseless", is_flag=True)
@click.option("--early-stop", is_flag=True)
@click.option("--strategy", type=click.Choice(STRATEGIES), default="cp")
@click.option("--backend", default="exhaustive")
@click.option("--timeout", type=float, default=DEFAULT_TIMEOUT_S)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), default=None)
def bench(
    domain, r, variant, k, users, iters, user_dist, lam, noiseless,
    early_stop, strategy, backend, timeout, seed, out,
) -> None:
    """Run one benchmark domain with a sampled user population."""
    kind, params = _parse_dist(user_dist)
    domain_params = {"r": r} if domain == "synthetic" else (
        {"variant": variant} if domain == "trip" else {}
    )
    cfg = ExperimentConfig(
        domain=domain,
        domain_params=domain_params,
        k=k,
        T=iters,
        early_stop=early_stop,
        users=users,
        user_dist=kind,
        user_params=params,
        lam=lam,
        noiseless=noiseless,
        strategy=strategy,
        backend=backend,
        timeout_s=timeout,
        seed=seed,
    )
    result = run_experiment(cfg, out_dir=out)
    _report(result, out)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--strategies", default="cp,random")
@click.option("--out", type=click.Path(), default=None)
def compare(config_path: str, strategies: str, out: str | None) -> None:
    """Run the same population under several query strategies."""
    cfg = ExperimentConfig.loads(Path(config_path).read_text())
    names = [s.strip() for s in strategies.split(",") if s.strip()]
    results = compare_strategies(cfg, names, out_dir=out)
    failed = False
    for result in results.values():
        _last = result.aggregate_rows()[-1]
        click.echo(
            f"{result.config.strategy}: final median regret {_last['median_regret']:.4f}"
        )
        failed = failed or bool(result.failures)
    if out:
        click.echo(f"artifacts written to {out}")
    if failed:
        sys.exit(1)


@main.command()
def verify() -> None:
    """Quick built-in invariant checks (no pytest needed)."""
    from .benchmarks import build_synthetic
    from .domain import EMPTY_CONTEXT
    from .perceptron import compute_delta, replay_weights
    from .query import select_query
    from .users import SimulatedUser, choice_distribution, deltas_for_choices

    rng = np.random.default_rng(0)
    failures = 0

    def check(name: str, ok: bool) -> None:
        nonlocal failures
        click.echo(f"{'ok  ' if ok else 'FAIL'} {name}")
        failures += 0 if ok else 1

    # expected utility gain is never negative for softmax responders
    worst = np.inf
    for _ in range(200):
        k = int(rng.integers(2, 5))
        feats = rng.normal(size=(k, 6))
        w_star = rng.normal(size=6)
        p = choice_distribution(SimulatedUser(w_star), feats)
        worst = min(worst, float(p @ (deltas_for_choices(feats) @ w_star)))
    check(f"expected utility gain >= 0 (min {worst:.2e})", worst >= -1e-9)

    # update algebra: w' - w = eta * Delta, and replay reproduces weights
    feats = rng.normal(size=(3, 6))
    delta = compute_delta(feats, 2).delta
    w = np.zeros(6)
    w2 = w + 0.5 * delta
    check("update algebra w' - w = eta*Delta", np.array_equal(w2 - w, 0.5 * delta))
    check(
        "replay identity",
        np.array_equal(replay_weights([0.5], [delta], 6), w2),
    )

    # query invariants on a small domain
    spec = build_synthetic(3)
    w = rng.normal(size=spec.d)
    sel = select_query(spec, EMPTY_CONTEXT, w, 3, 0.5, "exhaustive")
    dists = [
        float(np.abs(sel.features[i] - sel.features[j]).sum())
        for i in range(3)
        for j in range(i + 1, 3)
    ]
    check("query members pairwise feature-distinct", min(dists) >= 1.0)
    best = max(
        float(w @ spec.featurize(EMPTY_CONTEXT, y))
        for y in spec.enumerate(EMPTY_CONTEXT)
    )
    check(
        "query leader maximizes estimated utility",
        float(w @ sel.features[0]) >= best - 1e-9,
    )

    if failures:
        sys.exit(1)
    click.echo("all invariants hold")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--backend", default=None)
def serve(host: str, port: int, data_dir: str | None, backend: str | None) -> None:
    """Start the HTTP session service."""
    import os

    import uvicorn

    if data_dir:
        os.environ["CFORGE_DATA_DIR"] = data_dir
    if backend:
        os.environ["CFORGE_BACKEND"] = backend
    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


@main.command("solve-lp")
@click.argument("input_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
def solve_lp_cmd(input_path: str, output_path: str) -> None:
    """Solve an LP-format MILP file; reference external-backend command."""
    from .solver import solve_bnb
    from .solver.external import write_solution
    from .solver.lpfile import parse_lp

    problem = parse_lp(Path(input_path).read_text())
    outcome = solve_bnb(problem)
    Path(output_path).write_text(write_solution(outcome))
    click.echo(outcome.status)


if __name__ == "__main__":
    main()
