"""Launcher module - runs the multi-step pipelines behind each CLI command."""

import json
import logging
from pathlib import Path

import typer

from src.cnn import Dataset, ModelConfig, ToyCnn, evaluate, load_dataset, load_weights, mean_loss, save_weights, train
from src.itn import (
    ControlVector,
    ItnConfig,
    itn_render,
    itn_train,
    load_blocks,
    save_blocks,
    smoothed_displacement,
    summarize_itn,
    summary_grid,
    write_step_log,
)
from src.my_util import parse_grid, parse_k_grid
from src.my_util.config import load_defaults_toml, resolve
from src.my_util.errors import UsageError
from src.my_util.manifest import RunManifest
from src.sweep import export_result, extract_threshold, run_accuracy_sweep, run_sweep, split_two_sided, summarize_topk
from src.transforms import Image, TransformKind
from src.verification import run_gradcheck_suite

logger = logging.getLogger(__name__)


def load_split(data: Path, fmt: str, split: str) -> Dataset:
    """The requested split, or the training split when a held-out split is not on disk."""
    try:
        return load_dataset(data, fmt, split)
    except FileNotFoundError:
        if split == "train":
            raise
        logger.warning("no %s split in %s; using the training split", split, data)
        return load_dataset(data, fmt, "train")


def train_cnn_run(m: RunManifest, data: Path, fmt: str, epochs, lr, batch, seed, out: Path) -> None:
    defaults = load_defaults_toml("cnn")["train"]
    epochs = resolve(epochs, defaults["epochs"])
    lr = resolve(lr, defaults["lr"])
    batch = resolve(batch, defaults["batch"])
    config = ModelConfig.from_defaults(seed=seed)
    m.flags.update(epochs=epochs, lr=lr, batch=batch, seed=config.seed)
    m.seeds["model"] = config.seed
    m.inputs["data"] = str(data)

    typer.echo(f"[1/3] Loading {fmt} data from {data}...")
    train_set = load_dataset(data, fmt, "train")
    test_set = load_split(data, fmt, "test")

    typer.echo(f"[2/3] Training on {len(train_set)} images for {epochs} epochs...")
    weights = train(config, train_set, epochs, lr, batch)

    typer.echo("[3/3] Evaluating and saving weights...")
    accuracy = evaluate(weights, test_set).accuracy
    save_weights(weights, out)
    m.outputs["weights"] = str(out)
    m.results.update(test_accuracy=accuracy, test_loss=mean_loss(weights, test_set))
    typer.echo(f"Test accuracy {accuracy:.4f}; weights written to {out}")


def sweep_run(
    m: RunManifest,
    weights_path: Path,
    data: Path,
    fmt: str,
    class_id: int | None,
    kind_name: str,
    grid_spec: str | None,
    tau: float | None,
    top_k: int | None,
    seed: int,
    workers: int | None,
    limit: int | None,
    split: str,
    out: Path,
) -> None:
    defaults = load_defaults_toml("sweep")
    kind = TransformKind.parse(kind_name)
    grid = parse_grid(resolve(grid_spec, defaults["grids"][str(kind)]))
    tau = resolve(tau, defaults["tau"])
    top_k = resolve(top_k, defaults["top_k"])
    workers = resolve(workers, defaults["workers"])
    m.flags.update(kind=str(kind), grid=grid, tau=tau, top_k=top_k, workers=workers)
    m.seeds["noise"] = seed
    m.inputs.update(weights=str(weights_path), data=str(data))

    typer.echo(f"[1/3] Loading weights {weights_path} and {split} data...")
    weights = load_weights(weights_path)
    images = load_split(data, fmt, split)
    if class_id is not None:
        if not 0 <= class_id < images.n_classes:
            raise UsageError(f"--class must lie in [0, {images.n_classes}), got {class_id}")
        images = images.of_class(class_id)
    if limit is not None:
        images = images.head(limit)

    out.mkdir(parents=True, exist_ok=True)
    sides = split_two_sided(grid, kind.identity)
    typer.echo(f"[2/3] Sweeping {kind} over {len(images)} images ({len(sides)} side(s))...")
    thresholds = {}
    for suffix, side in sides:
        name = f"{kind}_{suffix}" if suffix else str(kind)
        if class_id is None:
            result = run_accuracy_sweep(weights, images, kind, side, seed, workers)
        else:
            result = run_sweep(weights, images, kind, side, seed, workers)
        csv_path = out / f"{name}.csv"
        export_result(result, summarize_topk(result, min(top_k, result.mean_softmax.shape[1])), csv_path, tau)
        thresholds[name] = extract_threshold(result, tau)
        m.outputs[name] = str(csv_path)

    typer.echo("[3/3] Results:")
    for name, threshold in thresholds.items():
        shown = "none" if threshold is None else f"{threshold:g} {kind.unit}"
        typer.echo(f"  {name}: threshold at tau={tau:g} -> {shown}")
    m.results["thresholds"] = thresholds


def itn_train_run(m: RunManifest, weights_path: Path, data: Path, fmt: str, cfg: ItnConfig, out: Path) -> None:
    defaults = load_defaults_toml("itn")["summary"]
    m.inputs.update(weights=str(weights_path), data=str(data))
    m.seeds["itn"] = cfg.seed

    typer.echo(f"[1/4] Loading frozen weights {weights_path} and {fmt} data...")
    weights = load_weights(weights_path)
    train_set = load_dataset(data, fmt, "train")
    held_out = load_split(data, fmt, "test").head(int(defaults["images"]))

    typer.echo(f"[2/4] Training transformer blocks for {cfg.steps} steps...")
    result = itn_train(cfg, weights, train_set)
    m.flags.update(result.config.to_dict())
    m.results.update(
        clean_accuracy=result.clean_accuracy, initial_accuracy=result.initial_accuracy, acc_orig=result.config.acc_orig
    )

    typer.echo("[3/4] Saving blocks and training log...")
    out.mkdir(parents=True, exist_ok=True)
    save_blocks(result.blocks, out / "blocks.iltf")
    write_step_log(out / "train_log.csv", result.log)
    m.outputs.update(blocks=str(out / "blocks.iltf"), log=str(out / "train_log.csv"))

    typer.echo(f"[4/4] Evaluating transformed held-out images ({len(held_out)})...")
    k_grid = summary_grid([float(v) for v in defaults["k_values"]])
    rows = summarize_itn(result.blocks, ToyCnn(weights), held_out, k_grid, batch=cfg.batch, seed=cfg.seed)
    summary = {
        "clean_accuracy": result.clean_accuracy,
        "initial_accuracy": result.initial_accuracy,
        "acc_orig": result.config.acc_orig,
        "per_k": rows,
    }
    if result.log:
        start, end = smoothed_displacement(result.log, cfg.c_theta)
        summary["displacement_loss"] = {"first_10pct": start, "last_10pct": end}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    m.outputs["summary"] = str(out / "summary.json")
    worst = min(r["accuracy"] for r in rows)
    typer.echo(f"Clean accuracy {result.clean_accuracy:.4f}; worst transformed accuracy over the grid {worst:.4f}")


def _render_images(images: Path, fmt: str | None, count: int) -> list[Image]:
    ppms = sorted(images.glob("*.ppm")) if images.is_dir() else [images]
    if ppms and all(p.suffix == ".ppm" for p in ppms):
        return [Image.read_ppm(p) for p in ppms[:count]]
    if fmt is None:
        raise UsageError(f"{images} holds no PPM files; pass --format to read it as a dataset")
    return load_split(images, fmt, "test").head(count).images


def itn_render_run(
    m: RunManifest,
    weights_path: Path,
    blocks_path: Path,
    images: Path,
    fmt: str | None,
    count: int,
    k_spec: str,
    out: Path,
) -> None:
    m.inputs.update(weights=str(weights_path), blocks=str(blocks_path), images=str(images))
    typer.echo("[1/2] Loading weights, blocks and images...")
    classifier = ToyCnn(load_weights(weights_path))
    blocks = load_blocks(blocks_path)
    k_grid = [ControlVector(k1, k2) for k1, k2 in parse_k_grid(k_spec)]
    rendered = _render_images(images, fmt, count)

    typer.echo(f"[2/2] Rendering {len(rendered)} images at {len(k_grid)} control settings...")
    csv_path = itn_render(blocks, classifier, rendered, k_grid, out)
    m.outputs.update(predictions=str(csv_path), images=str(out))
    typer.echo(f"Predictions written to {csv_path}")


def gradcheck_run(m: RunManifest, seed: int) -> bool:
    m.seeds["gradcheck"] = seed
    reports = run_gradcheck_suite(seed)
    for r in reports:
        status = "ok" if r.passed else f"FAILED at {r.failing}"
        typer.echo(f"  {r.op}[{r.input_index}]: max rel. error {r.max_rel_error:.2e} {status}")
    failed = [r for r in reports if not r.passed]
    m.results.update(checks=len(reports), failed=len(failed))
    return not failed
