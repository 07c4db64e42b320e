"""Command-line interface.

Exit codes: 0 success, 1 runtime error (message on stderr), 2 usage error.
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict
from pathlib import Path

import click

from . import __version__
from .calibration import CalibrationConfig, calibrate, pool_statistics
from .datastore import EventLogWriter, dataset_digest, ingest_logs, load_pool, save_pool
from .errors import IrtCatError
from .irt import ItemParams
from .selection import FISHER, RANDOM, SelectionPolicy
from .session import DiagnosticReport, StoppingRule, start_session, submit_grade
from .simulate import (
    make_synthetic_pool,
    run_mse_experiment,
    run_se_experiment,
    run_variance_check,
    write_report_files,
)


def _fail(exc: BaseException) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@click.group()
@click.version_option(__version__)
def main():
    """Adaptive-testing toolkit: calibrate pools, run sessions, simulate."""


@main.command()
@click.option("--logs", "logs_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--val-split", default=0.2, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--max-epochs", default=500, show_default=True)
@click.option("--patience", default=10, show_default=True)
@click.option("--learning-rate", default=0.05, show_default=True)
@click.option("--questions", "questions_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON file mapping question_id to {concept, content}.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False),
              help="Write the plain-text fit report here (default: stdout).")
def calibrate_cmd(logs_path, out_path, val_split, seed, max_epochs, patience,
                  learning_rate, questions_path, report_path):
    """Fit item parameters from a response-log file and write a pool file."""
    try:
        logs, manifest = ingest_logs(logs_path)
        questions = None
        if questions_path:
            questions = json.loads(Path(questions_path).read_text(encoding="utf-8"))
        config = CalibrationConfig(
            validation_fraction=val_split, max_epochs=max_epochs, patience=patience,
            learning_rate=learning_rate, seed=seed)
        pool = calibrate(logs, config, questions=questions)
        save_pool(pool, out_path, config=asdict(config), dataset_digest=dataset_digest(logs_path))
    except (IrtCatError, OSError, ValueError, json.JSONDecodeError) as exc:
        _fail(exc)
    text = manifest.format_text() + "\n" + pool.fit_report.format_text()
    if report_path:
        Path(report_path).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)
    click.echo(f"pool written to {out_path} ({len(pool.items)} items)")


main.add_command(calibrate_cmd, name="calibrate")


@main.command()
@click.option("--pool", "pool_path", type=click.Path(exists=True, dir_okay=False),
              help="Pool file; omitted = synthetic pool of --pool-size items.")
@click.option("--experiment", type=click.Choice(["mse", "se", "variance", "jaccard"]),
              required=True)
@click.option("--examinees", default=100, show_default=True)
@click.option("--max-len", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              default="simulation_report", show_default=True)
@click.option("--pool-size", default=2242, show_default=True)
@click.option("--conditions", default="0:0,0.1:0.3", show_default=True,
              help="guess:slip pairs for the SE experiment.")
@click.option("--t-values", default="25,50,100", show_default=True)
@click.option("--replications", default=2000, show_default=True)
@click.option("--plot", is_flag=True, help="Also render a PNG (needs matplotlib).")
def simulate(pool_path, experiment, examinees, max_len, seed, out_dir, pool_size,
             conditions, t_values, replications, plot):
    """Run a simulation experiment and print/emit its report."""
    try:
        pool = load_pool(pool_path) if pool_path else make_synthetic_pool(pool_size, seed=seed)
        if experiment == "mse":
            report = run_mse_experiment(pool, n_examinees=examinees, max_steps=max_len, seed=seed)
            for policy, curve in sorted(report.mse_curves.items()):
                click.echo(f"{policy}: final MSE {curve[-1]:.4f}")
            if report.efficiency_step is not None:
                click.echo(
                    f"fisher matches the random policy's final MSE at step "
                    f"{report.efficiency_step}/{report.max_steps} "
                    f"(efficiency ratio {report.efficiency_ratio:.3f})")
        elif experiment == "se":
            parsed = []
            for chunk in conditions.split(","):
                g, s = chunk.split(":")
                parsed.append((float(g), float(s)))
            report = run_se_experiment(pool, parsed, n_examinees=examinees,
                                       max_steps=max_len, seed=seed)
            for (g, s), curve in sorted(report.se_curves.items()):
                click.echo(f"guess={g} slip={s}: SE at t={max_len} is {curve[-1]:.4f}")
        elif experiment == "variance":
            template = ItemParams("template", 1.0, 0.0, 0.0)
            ts = [int(v) for v in t_values.split(",")]
            report = run_variance_check(template, 0.0, ts, replications=replications, seed=seed)
            click.echo(f"{'t':>6}{'empirical':>14}{'predicted':>14}{'ratio':>10}")
            for t, emp, pred in report.variance_rows:
                click.echo(f"{t:>6}{emp:>14.6f}{pred:>14.6f}{emp / pred:>10.3f}")
        else:  # jaccard
            report = run_mse_experiment(pool, n_examinees=examinees, max_steps=max_len,
                                        seed=seed, policies=(FISHER,))
            matrix = report.jaccard_matrix
            n = matrix.shape[0]
            off = matrix[[i for i in range(n) for j in range(n) if i != j],
                         [j for i in range(n) for j in range(n) if i != j]]
            click.echo(f"mean pairwise Jaccard over {n} examinees: {off.mean():.4f}")
        if out_dir:
            for path in write_report_files(report, out_dir):
                click.echo(f"wrote {path}")
        if plot:
            _render_plot(report, out_dir or ".")
    except (IrtCatError, OSError, ValueError) as exc:
        _fail(exc)


def _render_plot(report, out_dir):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        _fail(RuntimeError("matplotlib is not installed; install irtcat[plots]"))
    fig, ax = plt.subplots()
    steps = range(1, report.max_steps + 1)
    for policy, curve in sorted(report.mse_curves.items()):
        ax.plot(steps, curve, label=f"MSE ({policy})")
    for (g, s), curve in sorted(report.se_curves.items()):
        ax.plot(steps, curve, label=f"SE guess={g} slip={s}")
    ax.set_xlabel("test step")
    ax.legend()
    out = Path(out_dir) / "curves.png"
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True, dir_okay=False))
def stats(pool_path):
    """Print pool statistics: concept counts and parameter extrema."""
    try:
        pool = load_pool(pool_path)
        stats = pool_statistics(pool)
    except (IrtCatError, OSError, ValueError) as exc:
        _fail(exc)
    click.echo(f"pool: {pool_path}")
    click.echo(f"  humans: {pool.human_abilities.size}")
    click.echo(stats.format_text())


@main.command()
@click.option("--pool", "pool_paths", required=True, multiple=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--port", default=None, type=int)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def serve(pool_paths, port, config_path):
    """Start the HTTP service for live expert-graded sessions."""
    from .service import load_config, serve as run_service

    try:
        config = load_config(config_path)
        for p in pool_paths:
            config.pools[Path(p).stem] = Path(p)
        if port is not None:
            config.port = port
        run_service(config)
    except (IrtCatError, OSError, ValueError) as exc:
        _fail(exc)


@main.command()
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--concept", default=None)
@click.option("--policy", type=click.Choice([FISHER, RANDOM]), default=FISHER, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--max-len", default=20, show_default=True)
@click.option("--se-threshold", default=0.35, show_default=True)
@click.option("--min-len", default=5, show_default=True)
@click.option("--event-log", "event_log_path", type=click.Path(dir_okay=False))
def session(pool_path, concept, policy, seed, max_len, se_threshold, min_len, event_log_path):
    """Run a live test in the terminal; you are the grading expert."""
    try:
        pool = load_pool(pool_path)
        rule = StoppingRule(max_length=max_len, se_threshold=se_threshold, min_length=min_len)
        chosen = SelectionPolicy(policy, seed if policy == RANDOM else None)
        sink = EventLogWriter(event_log_path) if event_log_path else None
        sess, question = start_session(pool, concept=concept, policy=chosen, rule=rule,
                                       pool_ref=Path(pool_path).stem, event_sink=sink)
        outcome: str | DiagnosticReport = question
        while not isinstance(outcome, DiagnosticReport):
            qid = outcome
            click.echo(f"\nstep {sess.step + 1}: question {qid}")
            if qid in pool.content:
                click.echo(pool.content[qid])
            verdict = click.prompt("correct? [y/n]", type=click.Choice(["y", "n"]))
            outcome = submit_grade(sess, 1 if verdict == "y" else 0, event_sink=sink)
            click.echo(f"theta={sess.theta_hat:+.3f}  se={sess.se:.3f}")
        click.echo(f"\nstopped: {sess.stop_reason.value}")
        click.echo(outcome.format_table())
        if sink:
            sink.close()
    except (IrtCatError, OSError, ValueError) as exc:
        _fail(exc)
    except (KeyboardInterrupt, EOFError, click.Abort):
        click.echo("\naborted", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
