"""Command-line front end.

Commands mirror the pipeline stages: ``generate-data`` records benign
driving data, ``train`` fits the prediction models, ``simulate`` runs a
single campaign, and ``sweep`` / ``subversion`` / ``impact`` drive the
three analysis procedures. Every data artifact is reproducible from the
config file and master seed alone; figures are rendered next to the
delimited output they visualize.

Exit codes: 0 success, 2 configuration or validation error, 3 I/O
error, 4 model error. A collision inside a simulation is a result, not
a failure.
"""

from __future__ import annotations

import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import pandas as pd

from . import __version__, attack as attack_mod, neural, report
from .config import RunConfig, load_config
from .errors import CaccSimError, ConfigError, ModelError, TrajectoryFormatError
from .evaluation import (BENCHMARK_DETECTOR_THRESHOLD, BENCHMARK_ENVIRONMENT,
                         DEFAULT_SWEEP_THRESHOLDS, RESILIENCY_TABLE_ATTACKS,
                         HarnessConfig, PipelineMode, attack_catalog,
                         detection_metrics, impact_analysis, resolve_attack,
                         run_campaign, subversion_scan, sweep_quantiles,
                         threshold_sweep, thw_buckets)
from .resilience import OracleModel
from .scenario import (Dataset, collect_benign_dataset, import_trajectory_csv,
                       parse_environment, read_dataset_csv, write_dataset_csv)
from .seeding import derive_seed


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_metadata(outdir: Path, cfg: RunConfig, extra: dict | None = None) -> None:
    meta = {
        "caccsim_version": __version__,
        "master_seed": cfg.master_seed,
        "config": cfg.raw,
        "config_sha256": hashlib.sha256(
            json.dumps(cfg.raw, sort_keys=True).encode()).hexdigest(),
    }
    if extra:
        meta.update(extra)
    report.write_json(meta, outdir / "metadata.json")


def _resolve_model(cfg: RunConfig, kind: str, base_outdir: Path):
    ref = cfg.model_paths.get(kind)
    if ref == "oracle":
        return OracleModel(cfg.controller, kind)
    if ref is None:
        candidate = base_outdir / "train" / kind / "model.json"
        if not candidate.exists():
            raise ModelError(
                f"no {kind} model configured and {candidate} not found; "
                f"run 'caccsim train' first or set models.{kind}")
        ref = candidate
    model = neural.load_model(ref)
    if model.model_kind != kind:
        raise ModelError(f"{ref} holds a {model.model_kind}, expected {kind}")
    return model


def _harness(cfg: RunConfig, base_outdir: Path, with_models=True,
             threshold=None) -> HarnessConfig:
    detector = cfg.detector
    if threshold is not None:
        detector = type(detector)(anomaly_threshold=threshold, enabled=detector.enabled)
    predictor = estimator = None
    if with_models:
        predictor = _resolve_model(cfg, "predictor", base_outdir)
        estimator = _resolve_model(cfg, "response_estimator", base_outdir)
    return HarnessConfig(
        params=cfg.controller, ego_limits=cfg.ego_limits, sensor=cfg.sensor,
        detector=detector, predictor=predictor, estimator=estimator,
        dt=cfg.dt, vehicle_length=cfg.vehicle_length,
        master_seed=cfg.master_seed, duration=cfg.duration,
        profile_overrides=cfg.campaign_profile_overrides,
        environment=cfg.environment or BENCHMARK_ENVIRONMENT)


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="JSON run configuration.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Master seed override.")(fn)
    fn = click.option("--outdir", type=click.Path(), default=None,
                      help="Output directory override.")(fn)
    fn = click.option("--jobs", type=int, default=None,
                      help="Parallel workers across environments/campaigns.")(fn)
    return fn


def _load(config_path, seed, outdir, jobs=None, **overrides) -> RunConfig:
    cfg = load_config(config_path)
    if seed is not None:
        cfg.master_seed = seed
    if outdir is not None:
        cfg.outdir = outdir
    if jobs is not None:
        cfg.jobs = jobs
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg


@click.group()
@click.version_option(__version__)
def main():
    """Simulate CACC under V2V attacks and evaluate resiliency."""


# --- generate-data -----------------------------------------------------------

def _collect_one(args):
    env_id, cfg_blob = args
    import pickle
    cfg = pickle.loads(cfg_blob)
    env = parse_environment(env_id)
    coll = collect_benign_dataset(
        [env], cfg.controller, cfg.ego_limits, cfg.sensor,
        master_seed=cfg.master_seed, dt=cfg.dt,
        profile_overrides=cfg.profile_overrides or None,
        duration=cfg.duration, vehicle_length=cfg.vehicle_length)
    return env_id, coll.datasets[env_id]


@main.command("generate-data")
@_common_options
@click.option("--environments", default=None,
              help="Comma-separated environment ids (default: all 24).")
@click.option("--duration", type=float, default=None, help="Seconds per environment.")
def cmd_generate_data(config_path, seed, outdir, jobs, environments, duration):
    """Record benign driving data across environments."""
    cfg = _load(config_path, seed, outdir, jobs)
    # dataset length: flag > profile override > campaign duration
    if duration is None:
        duration = cfg.profile_overrides.get("duration", cfg.duration)
    cfg.duration = duration
    envs = cfg.environments
    if environments:
        envs = [parse_environment(e) for e in environments.split(",")]

    dest = Path(cfg.outdir) / "generate-data" / "dataset"
    dest.mkdir(parents=True, exist_ok=True)

    import pickle
    if cfg.jobs > 1:
        blob = pickle.dumps(cfg)
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            produced = dict(pool.map(_collect_one, [(e.id, blob) for e in envs]))
        datasets = {e.id: produced[e.id] for e in envs}
    else:
        coll = collect_benign_dataset(
            envs, cfg.controller, cfg.ego_limits, cfg.sensor,
            master_seed=cfg.master_seed, dt=cfg.dt,
            profile_overrides=cfg.profile_overrides or None,
            duration=cfg.duration, vehicle_length=cfg.vehicle_length)
        datasets = coll.datasets

    manifest = {"environments": [], "train_fraction": 0.8, "files": {},
                "rows": {}, "train_rows": {}, "master_seed": cfg.master_seed}
    parts = []
    for env in envs:
        ds = datasets[env.id]
        path = dest / f"env-{env.id}.csv"
        write_dataset_csv(ds, path)
        n_train = int(len(ds) * 0.8)
        manifest["environments"].append(env.id)
        manifest["files"][env.id] = path.name
        manifest["rows"][env.id] = len(ds)
        manifest["train_rows"][env.id] = n_train
        parts.append(ds)
        click.echo(f"wrote {path} ({len(ds)} rows)")
    global_ds = Dataset.concat(parts, env_id="global")
    write_dataset_csv(global_ds, dest / "global.csv")
    manifest["files"]["global"] = "global.csv"
    for name in list(manifest["files"]):
        manifest.setdefault("sha256", {})[name] = _sha256(dest / manifest["files"][name])
    report.write_json(manifest, dest / "manifest.json")
    _write_metadata(dest, cfg)
    click.echo(f"wrote {dest / 'global.csv'} and manifest")


# --- train ---------------------------------------------------------------------

def _load_split_from_manifest(data_dir: Path):
    with open(data_dir / "manifest.json") as fh:
        manifest = json.load(fh)
    trains, tests, per_env = [], [], {}
    for env_id in manifest["environments"]:
        ds = read_dataset_csv(data_dir / manifest["files"][env_id], env_id=env_id)
        cut = manifest["train_rows"][env_id]
        trains.append(ds.slice(0, cut))
        tests.append(ds.slice(cut, len(ds)))
        per_env[env_id] = (trains[-1], tests[-1])
    return Dataset.concat(trains, env_id="global"), Dataset.concat(tests, env_id="global"), per_env


@main.command("train")
@_common_options
@click.option("--kind", type=click.Choice(["predictor", "response-estimator", "both"]),
              default="both")
@click.option("--data", "data_dir", type=click.Path(), default=None,
              help="Dataset directory (default <outdir>/generate-data/dataset).")
@click.option("--per-environment", is_flag=True,
              help="Also fit one predictor per environment and compare MAE.")
def cmd_train(config_path, seed, outdir, jobs, kind, data_dir, per_environment):
    """Fit the prediction models on recorded benign data."""
    cfg = _load(config_path, seed, outdir, jobs)
    base = Path(cfg.outdir)
    data_dir = Path(data_dir) if data_dir else base / "generate-data" / "dataset"
    if not (data_dir / "manifest.json").exists():
        raise ConfigError(f"no dataset manifest under {data_dir}; "
                          "run 'caccsim generate-data' first")
    train_set, test_set, per_env = _load_split_from_manifest(data_dir)

    kinds = ["predictor", "response_estimator"] if kind == "both" else [kind.replace("-", "_")]
    for k in kinds:
        tc = neural.default_train_config(k, rng_seed=derive_seed(cfg.master_seed, "train", k))
        for key, value in cfg.train.items():
            setattr(tc, key, value)
        model, stats = neural.train(train_set, test_set, tc, k)
        dest = base / "train" / k
        dest.mkdir(parents=True, exist_ok=True)
        neural.save_model(model, dest / "model.json")
        frame = pd.DataFrame([s.__dict__ for s in stats])
        frame.to_csv(dest / "training_report.csv", index=False,
                     float_format="%.6f", lineterminator="\n")
        val = neural.mae(model, test_set)
        _write_metadata(dest, cfg, {"validation_mae": val, "kind": k,
                                    "model_sha256": _sha256(dest / "model.json")})
        click.echo(f"{k}: validation MAE {val:.4f} -> {dest / 'model.json'}")

        if k == "predictor" and per_environment:
            rows = []
            for env_id, (tr, te) in per_env.items():
                tc_env = neural.default_train_config(
                    k, rng_seed=derive_seed(cfg.master_seed, "train", k, env_id))
                unique_model, _ = neural.train(tr, te, tc_env, k)
                neural.save_model(unique_model, dest / f"model-{env_id}.json")
                rows.append({"environment": env_id,
                             "unique_mae": neural.mae(unique_model, te),
                             "global_mae": neural.mae(model, te)})
            frame = pd.DataFrame(rows)
            frame.to_csv(dest / "mae_comparison.csv", index=False,
                         float_format="%.6f", lineterminator="\n")
            click.echo(f"wrote per-environment comparison ({len(rows)} environments)")


# --- simulate ------------------------------------------------------------------

@main.command("simulate")
@_common_options
@click.option("--mode", type=click.Choice([m.value for m in PipelineMode]), default=None)
@click.option("--attack", "attack_ref", default=None,
              help="Catalog name, JSON file, or 'none'.")
@click.option("--environments", default=None, help="Single environment id for the run.")
@click.option("--threshold", type=float, default=None, help="Anomaly threshold override.")
def cmd_simulate(config_path, seed, outdir, jobs, mode, attack_ref, environments, threshold):
    """Run one campaign and write its trace, report, and figures."""
    cfg = _load(config_path, seed, outdir, jobs, mode=mode)
    if environments:
        cfg.environment = parse_environment(environments)
    if attack_ref is not None:
        cfg.attack = attack_ref
    base = Path(cfg.outdir)
    mode_enum = PipelineMode(cfg.mode)
    spec = resolve_attack(cfg.attack)
    needs_models = mode_enum is not PipelineMode.NAIVE or cfg.model_paths
    harness = _harness(cfg, base, with_models=needs_models, threshold=threshold)

    if cfg.trajectory_csv:
        lead = import_trajectory_csv(cfg.trajectory_csv, cfg.dt, cfg.initial_speed)
    else:
        lead = harness.make_lead("simulate")

    if spec is None:
        name = "benign"
    elif isinstance(cfg.attack, str):
        name = Path(cfg.attack).stem if Path(cfg.attack).exists() else cfg.attack
    else:
        name = "custom-attack"
    dest = base / "simulate" / f"{name}--{mode_enum.value}"
    dest.mkdir(parents=True, exist_ok=True)

    log = run_campaign(lead, mode_enum, cfg.controller, cfg.ego_limits, cfg.sensor,
                       harness.detector, attack=spec,
                       predictor=harness.predictor, estimator=harness.estimator,
                       vehicle_length=cfg.vehicle_length,
                       initial_gap_offset=cfg.initial_gap_offset,
                       metadata={"campaign": name})
    log.to_csv(dest / "runlog.csv")
    buckets = thw_buckets(log, log.attack_window())
    metrics = detection_metrics(log) if harness.predictor is not None and spec is not None else None
    report.write_json(report.campaign_report(buckets, metrics, log), dest / "report.json")
    report.thw_trace_figure({mode_enum.value: log}, dest / "thw_trace.png",
                            title=f"{name} ({mode_enum.value})")
    if harness.predictor is not None:
        report.detection_trace_figure(log, dest / "detection_trace.png")
    _write_metadata(dest, cfg, {"attack": attack_mod.spec_to_dict(spec) if spec else None,
                                "collision": log.collided})
    click.echo(f"{name} [{mode_enum.value}]: below {buckets.frac_below:.2f}% "
               f"ideal {buckets.frac_ideal:.2f}% above {buckets.frac_above:.2f}% "
               f"max {buckets.max_thw:.2f}s collision {buckets.collision}")
    click.echo(f"artifacts in {dest}")


# --- sweep -----------------------------------------------------------------------

def _sweep_one(args):
    import pickle
    env_id, harness_blob, thresholds = args
    harness = pickle.loads(harness_blob)
    cells = threshold_sweep(harness, thresholds=thresholds,
                            environments=[parse_environment(env_id)])
    return env_id, cells


@main.command("sweep")
@_common_options
def cmd_sweep(config_path, seed, outdir, jobs):
    """Detection metrics across anomaly thresholds and all environments."""
    cfg = _load(config_path, seed, outdir, jobs)
    base = Path(cfg.outdir)
    thresholds = tuple(cfg.sweep.get("thresholds", DEFAULT_SWEEP_THRESHOLDS))
    if "duration" in cfg.sweep:
        cfg.duration = cfg.sweep["duration"]
    harness = _harness(cfg, base)
    dest = base / "sweep"
    dest.mkdir(parents=True, exist_ok=True)

    if cfg.jobs > 1:
        import pickle
        blob = pickle.dumps(harness)
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = dict(pool.map(
                _sweep_one, [(e.id, blob, thresholds) for e in cfg.environments]))
        cells = [c for e in cfg.environments for c in results[e.id]]
    else:
        cells = threshold_sweep(harness, thresholds=thresholds,
                                environments=cfg.environments)

    frame = pd.DataFrame([c.__dict__ for c in cells])
    frame.to_csv(dest / "sweep.csv", index=False, float_format="%.6f",
                 lineterminator="\n")
    for metric in ("recall", "precision", "f1", "fp_benign"):
        q = sweep_quantiles(cells, metric)
        q.to_csv(dest / f"quantiles-{metric}.csv", index=False,
                 float_format="%.6f", lineterminator="\n")
        report.sweep_boxplot_figure(cells, metric, dest / f"boxplot-{metric}.png")
    _write_metadata(dest, cfg, {"thresholds": list(thresholds),
                                "environments": [e.id for e in cfg.environments]})
    click.echo(f"swept {len(thresholds)} thresholds x {len(cfg.environments)} "
               f"environments -> {dest}")


# --- subversion --------------------------------------------------------------------

@main.command("subversion")
@_common_options
@click.option("--threshold", type=float, default=None)
def cmd_subversion(config_path, seed, outdir, jobs, threshold):
    """Tolerable bias vs detectability indices at one threshold."""
    cfg = _load(config_path, seed, outdir, jobs)
    base = Path(cfg.outdir)
    theta = threshold if threshold is not None else \
        cfg.subversion.get("threshold", BENCHMARK_DETECTOR_THRESHOLD)
    harness = _harness(cfg, base)
    grid = tuple(cfg.subversion.get("bias_grid", ())) or None
    dest = base / "subversion"
    dest.mkdir(parents=True, exist_ok=True)
    kwargs = {"bias_grid": grid} if grid else {}
    row = subversion_scan(harness, theta, **kwargs)
    payload = {
        "threshold": row.threshold,
        "fp_benign_percent": row.fp_benign_percent,
        "classes": {cls: r.__dict__ for cls, r in row.classes.items()},
    }
    report.write_json(payload, dest / f"subversion-{theta:g}.json")
    frame = pd.DataFrame(
        [{"class": cls, **r.__dict__} for cls, r in row.classes.items()])
    frame.insert(0, "threshold", theta)
    frame.insert(1, "fp_benign_percent", round(row.fp_benign_percent, 3))
    frame.to_csv(dest / f"subversion-{theta:g}.csv", index=False,
                 lineterminator="\n")
    _write_metadata(dest, cfg, {"threshold": theta})
    click.echo(frame.to_string(index=False))


# --- tables ---------------------------------------------------------------------------

@main.command("tables")
@_common_options
@click.option("--campaigns", "campaign_file", type=click.Path(), default=None,
              help="JSON array of named attack specs (default: built-in set).")
def cmd_tables(config_path, seed, outdir, jobs, campaign_file):
    """Aggregate resiliency table: every campaign under all three modes."""
    cfg = _load(config_path, seed, outdir, jobs)
    base = Path(cfg.outdir)
    harness = _harness(cfg, base)
    if campaign_file:
        attacks = attack_mod.load_campaign_file(campaign_file)
    else:
        catalog = attack_catalog()
        attacks = {name: catalog[name] for name in RESILIENCY_TABLE_ATTACKS}
    dest = base / "tables"
    dest.mkdir(parents=True, exist_ok=True)
    lead = harness.make_lead("tables")
    results = {}
    for name, spec in attacks.items():
        per_mode = {}
        logs = {}
        for mode in PipelineMode:
            log = harness.run(lead, mode, spec, metadata={"campaign": name})
            per_mode[mode.value] = thw_buckets(log, log.attack_window())
            logs[mode.value] = log
        results[name] = per_mode
        report.thw_trace_figure(logs, dest / f"thw-{name}.png", title=name)
    table = report.resiliency_table(results)
    report.write_table(table, dest / "resiliency.csv", dest / "resiliency.md")
    _write_metadata(dest, cfg, {"attacks": list(attacks)})
    click.echo(table.to_string())
    click.echo(f"artifacts in {dest}")


# --- impact ---------------------------------------------------------------------------

@main.command("impact")
@_common_options
def cmd_impact(config_path, seed, outdir, jobs):
    """Naive-mode THW impact of the default attack grid."""
    cfg = _load(config_path, seed, outdir, jobs)
    base = Path(cfg.outdir)
    harness = _harness(cfg, base)
    dest = base / "impact"
    dest.mkdir(parents=True, exist_ok=True)
    results = impact_analysis(harness)
    rows = []
    for res in results:
        rows.append({"attack": res.name, **report.buckets_row(res.buckets)})
    frame = pd.DataFrame(rows)
    frame.to_csv(dest / "impact.csv", index=False, lineterminator="\n")
    report.impact_grid_figure(results, dest / "impact_grid.png")
    _write_metadata(dest, cfg, {"attacks": [r.name for r in results]})
    click.echo(frame.to_string(index=False))


def run_main(argv=None) -> int:
    try:
        main.main(args=sys.argv[1:] if argv is None else argv,
                  standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except (ConfigError, TrajectoryFormatError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except ModelError as exc:
        click.echo(f"model error: {exc}", err=True)
        return 4
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 3
    except CaccSimError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


def entrypoint():
    sys.exit(run_main())


if __name__ == "__main__":
    entrypoint()
