"""Command-line entry point for every engine capability.

Every command is deterministic given its inputs and --seed. Errors exit
nonzero with one machine-readable JSON line on stderr; exit codes
distinguish missing files (2), format-version mismatches (3), and
catalog/id mismatches (4) from generic failures (1).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

EXIT_GENERIC = 1
EXIT_MISSING_FILE = 2
EXIT_VERSION = 3
EXIT_CATALOG = 4


def fail(code: int, error_code: str, message: str):
    click.echo(json.dumps({"error": {"code": error_code, "message": message}}),
               err=True)
    sys.exit(code)


def guarded(fn):
    """Map domain errors onto the documented exit codes."""
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        from .hand import HandModelError
        from .mechanisms import CatalogError
        from .motion import MotionError
        from .retarget import CalibrationError
        from .scoring import ScoringError
        from .service import ProtocolError

        try:
            return fn(*args, **kwargs)
        except FileNotFoundError as exc:
            fail(EXIT_MISSING_FILE, "missing_file", str(exc))
        except (CatalogError, ProtocolError) as exc:
            code = getattr(exc, "code", "")
            if "version" in str(exc) or code == "version_mismatch":
                fail(EXIT_VERSION, "version_mismatch", str(exc))
            fail(EXIT_CATALOG, "catalog_mismatch", str(exc))
        except (ScoringError, MotionError, CalibrationError, HandModelError) as exc:
            if "format_version" in str(exc) or "record_version" in str(exc):
                fail(EXIT_VERSION, "version_mismatch", str(exc))
            fail(EXIT_GENERIC, type(exc).__name__, str(exc))
        except ValueError as exc:
            fail(EXIT_GENERIC, "invalid_input", str(exc))

    return wrapper


@click.group(context_settings={"auto_envvar_prefix": "POMDAR"})
@click.option("--catalog", "catalog_path", type=click.Path(), default=None,
              help="Task catalog file (default: packaged catalog).")
@click.option("--store", "store_path", type=click.Path(), default="trials.jsonl",
              help="Append-only trial store.")
@click.option("--baselines", "baselines_path", type=click.Path(), default=None,
              help="Baseline table file.")
@click.option("--format", "fmt", type=click.Choice(["text", "structured"]),
              default="text", help="Output style for printed results.")
@click.option("--seed", type=int, default=0, help="Seed for any randomized step.")
@click.pass_context
def main(ctx, catalog_path, store_path, baselines_path, fmt, seed):
    """Dexterity benchmark engine: simulate, score, serve, analyze."""
    ctx.ensure_object(dict)
    ctx.obj.update(catalog_path=catalog_path, store_path=store_path,
                   baselines_path=baselines_path, fmt=fmt, seed=seed)


def _load_catalog(ctx):
    from .mechanisms import load_catalog

    path = ctx.obj["catalog_path"]
    if path is not None and not Path(path).exists():
        raise FileNotFoundError(f"catalog file not found: {path}")
    return load_catalog(path)


def _load_baselines(ctx, required=True):
    from .scoring import load_baselines

    path = ctx.obj["baselines_path"]
    if path is None:
        if required:
            fail(EXIT_MISSING_FILE, "missing_file",
                 "this command needs --baselines (or POMDAR_BASELINES)")
        return None
    if not Path(path).exists():
        raise FileNotFoundError(f"baselines file not found: {path}")
    return load_baselines(path)


@main.command()
@click.pass_context
@guarded
def catalog(ctx):
    """Print the 18 benchmark tasks."""
    cat = _load_catalog(ctx)
    if ctx.obj["fmt"] == "structured":
        from .service.app import task_summary

        click.echo(json.dumps({"tasks": [task_summary(t) for t in cat]}, indent=2))
        return
    click.echo(f"{'id':4s} {'name':16s} {'configuration':13s} {'axis':10s} mechanism")
    for t in cat:
        click.echo(f"{t.id:4s} {t.name:16s} {t.configuration:13s} {t.axis_tag:10s} "
                   f"{t.mechanism_type}")


@main.command()
@click.option("--port", type=int, default=8000)
@click.option("--host", default="127.0.0.1")
@click.option("--console", "console_dir", type=click.Path(), default="frontend",
              help="Operator console directory to serve at /console.")
@click.pass_context
@guarded
def serve(ctx, port, host, console_dir):
    """Run the live session service (WebSocket + HTTP)."""
    import uvicorn

    from .service.app import create_app
    from .service.session import SessionManager

    manager = SessionManager(
        catalog=_load_catalog(ctx),
        store_path=ctx.obj["store_path"],
        baselines=_load_baselines(ctx, required=False),
    )
    uvicorn.run(create_app(manager, console_dir=console_dir), host=host, port=port)


@main.command()
@click.option("--task", "task_id", default=None,
              help="Task id for the builtin scripted policy.")
@click.option("--embodiment", "embodiment_id", default="hand_full")
@click.option("--policy", type=click.Path(), default=None,
              help="Policy/input log file; omit to use the builtin scripted policy.")
@click.option("--log-out", type=click.Path(), default=None,
              help="Write the canonical input log here.")
@click.option("--record-out", type=click.Path(), default=None,
              help="Write the trial record here (also appended to --store).")
@click.option("--practice", is_flag=True, default=False)
@click.pass_context
@guarded
def simulate(ctx, task_id, embodiment_id, policy, log_out, record_out, practice):
    """Run a scripted policy through the full pipeline and emit the record."""
    from .service.session import SessionManager, read_log, run_log, write_log

    manager = SessionManager(catalog=_load_catalog(ctx), store_path=ctx.obj["store_path"],
                             baselines=_load_baselines(ctx, required=False))
    if policy is not None:
        if not Path(policy).exists():
            raise FileNotFoundError(f"policy file not found: {policy}")
        rows = read_log(policy)
        log_task = next((r.get("task_id") for r in rows if r.get("type") == "create"), None)
        if task_id is not None and task_id != log_task:
            raise ValueError(
                f"--task {task_id} conflicts with the policy's task {log_task}")
    else:
        if task_id is None:
            raise ValueError("simulate needs --task or --policy")
        from .policies import scripted_policy

        rows = scripted_policy(task_id, embodiment_id, seed=ctx.obj["seed"])
    if practice:
        rows = [dict(r, practice=True) if r.get("type") == "start_trial" else r
                for r in rows]
    record, canonical, _ = run_log(rows, manager, source="scripted")
    if log_out:
        write_log(canonical, log_out)
    if record_out:
        Path(record_out).write_text(record.to_json() + "\n")
    _print_record(ctx, record)


@main.command()
@click.option("--log", "log_path", type=click.Path(), required=True)
@click.option("--record-out", type=click.Path(), default=None)
@click.pass_context
@guarded
def replay(ctx, log_path, record_out):
    """Re-score a logged input stream; byte-identical to the original run."""
    from .service.session import SessionManager, read_log, run_log

    if not Path(log_path).exists():
        raise FileNotFoundError(f"log file not found: {log_path}")
    manager = SessionManager(catalog=_load_catalog(ctx), store_path=ctx.obj["store_path"],
                             baselines=_load_baselines(ctx, required=False))
    record, _, _ = run_log(read_log(log_path), manager, source="scripted")
    if record_out:
        Path(record_out).write_text(record.to_json() + "\n")
    _print_record(ctx, record)


def _print_record(ctx, record):
    if ctx.obj["fmt"] == "structured":
        click.echo(record.to_json())
    else:
        click.echo(f"task={record.task_id} embodiment={record.embodiment_id} "
                   f"correctness={record.correctness:.4f} duration={record.duration:.2f}s")


@main.command(name="aggregate")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Report bundle directory (report.json, report.csv, figures).")
@click.option("--figures/--no-figures", default=True)
@click.option("--include-practice", is_flag=True, default=False)
@click.pass_context
@guarded
def aggregate_cmd(ctx, out_dir, figures, include_practice):
    """Aggregate the trial store into a benchmark report."""
    from .report import write_report
    from .scoring import aggregate, read_trials

    store = ctx.obj["store_path"]
    if not Path(store).exists():
        raise FileNotFoundError(f"trial store not found: {store}")
    trials = read_trials(store)
    baselines = _load_baselines(ctx)
    report = aggregate(trials, baselines, include_practice=include_practice)
    if out_dir:
        paths = write_report(report, out_dir, figures=figures)
        click.echo(f"report written to {out_dir}", err=True)
    if ctx.obj["fmt"] == "structured":
        click.echo(json.dumps(report.to_dict(), sort_keys=True))
    else:
        click.echo(f"{'embodiment':12s} {'task':5s} {'n':>3s} {'mean':>8s} {'std':>8s}")
        for a in report.per_task:
            click.echo(f"{a.embodiment_id:12s} {a.task_id:5s} {a.n:3d} "
                       f"{a.mean:8.4f} {a.std:8.4f}")
        for e in report.per_embodiment:
            click.echo(f"{e.embodiment_id:12s} {'ALL':5s} {e.n_repetitions:3d} "
                       f"{e.mean:8.4f} {e.std:8.4f}")


main.add_command(aggregate_cmd, name="score")


@main.command()
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.pass_context
@guarded
def baseline(ctx, out_path):
    """Build a baseline table from completed trials in the store."""
    from .motion import baseline_times
    from .scoring import read_trials, save_baselines

    store = ctx.obj["store_path"]
    if not Path(store).exists():
        raise FileNotFoundError(f"trial store not found: {store}")
    table = baseline_times(read_trials(store))
    if not table.entries:
        fail(EXIT_GENERIC, "no_trials", "no completed trials in the store")
    save_baselines(table, out_path)
    missing = table.missing()
    click.echo(f"baselines for {len(table.entries)} tasks written to {out_path}"
               + (f" (missing: {', '.join(missing)})" if missing else ""))


@main.command()
@click.option("--poses", "poses_path", type=click.Path(), required=True,
              help="Calibration pose set (keypoints + ground-truth joints).")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--budget", type=int, default=300)
@click.pass_context
@guarded
def calibrate(ctx, poses_path, out_path, budget):
    """Fit the operator scale-and-rotation calibration."""
    from .hand import default_model
    from .retarget import calibrate as run_calibration
    from .retarget.calibration import load_pose_set, save_calibration

    if not Path(poses_path).exists():
        raise FileNotFoundError(f"pose set not found: {poses_path}")
    poses = load_pose_set(poses_path)
    result = run_calibration(poses, default_model(), budget=budget, seed=ctx.obj["seed"])
    save_calibration(result, out_path)
    click.echo(f"scale={result.params.scale:.5f} objective={result.objective:.3e} "
               f"evaluations={result.evaluations}")


@main.command()
@click.option("--trajectory", "traj_path", type=click.Path(), required=True)
@click.option("--calibration", "calib_path", type=click.Path(), default=None)
@click.option("--embodiment", "embodiment_id", default="hand_full")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.pass_context
@guarded
def retarget(ctx, traj_path, calib_path, embodiment_id, out_path):
    """Offline batch retargeting of a keypoint trajectory to joint vectors."""
    from .hand import default_model
    from .motion import load_trajectory
    from .retarget import CalibrationParams, RetargetConfig
    from .retarget import retarget as solve
    from .retarget.calibration import load_calibration

    if not Path(traj_path).exists():
        raise FileNotFoundError(f"trajectory not found: {traj_path}")
    params = CalibrationParams()
    if calib_path is not None:
        if not Path(calib_path).exists():
            raise FileNotFoundError(f"calibration not found: {calib_path}")
        params = load_calibration(calib_path).params
    model = default_model()
    emb = model.embodiment(embodiment_id)
    traj = load_trajectory(traj_path)
    cfg = RetargetConfig()
    q_prev = np.zeros(model.joint_count)
    with open(out_path, "w") as f:
        for t, kp in zip(traj.timestamps, traj.keypoints):
            result = solve(params, cfg, model, emb, kp, q_prev)
            q_prev = result.q
            f.write(json.dumps({"t": float(t), "q": [float(v) for v in result.q],
                                "energy": result.energy}, sort_keys=True))
            f.write("\n")
    click.echo(f"retargeted {len(traj.timestamps)} frames to {out_path}")


@main.command()
@click.option("--trajectory", "traj_paths", type=click.Path(), multiple=True,
              required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--components", type=int, default=6)
@click.option("--figure", "figure_path", type=click.Path(), default=None)
@click.pass_context
@guarded
def pca(ctx, traj_paths, out_path, components, figure_path):
    """Segment trajectories, embed them, and export the motion PCA."""
    from .hand import default_model
    from .motion import cluster_separation, embed_segments, fit_pca, load_trajectory
    from .motion import save_pca, segment

    model = default_model()
    segments = []
    for p in traj_paths:
        if not Path(p).exists():
            raise FileNotFoundError(f"trajectory not found: {p}")
        segments.extend(segment(load_trajectory(p)))
    feats, kept = embed_segments(segments, model)
    if feats.shape[0] < components:
        fail(EXIT_GENERIC, "too_few_segments",
             f"only {feats.shape[0]} segments; need at least {components}")
    pca_model = fit_pca(feats, n=components)
    projections = pca_model.project(feats)
    labels = [s.task_id for s in kept]
    save_pca(pca_model, out_path, projections=projections, labels=labels)
    msg = f"pca over {feats.shape[0]} segments written to {out_path}"
    if len(set(labels)) >= 2:
        result = cluster_separation(projections, labels)
        msg += f"; task silhouette {result.score:.3f}"
    if figure_path:
        from .report import render_pca_figure

        render_pca_figure(projections, labels, figure_path,
                          explained=pca_model.explained_variance_ratio)
        msg += f"; figure {figure_path}"
    click.echo(msg)


if __name__ == "__main__":
    main()
