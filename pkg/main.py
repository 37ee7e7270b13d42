"""CLI entry point for the invariance lab: sweeps against a frozen CNN and the invariant transformer net."""

import logging
import os
import sys
from pathlib import Path
from typing import Annotated

import click
import dotenv
import typer

from src import launcher
from src.itn import ItnConfig
from src.my_util.config import env_path
from src.my_util.errors import (
    ConfigurationError,
    DataFormatError,
    DomainError,
    NumericalError,
    ShapeError,
    UsageError,
)
from src.my_util.manifest import RunManifest, manifest_location

app = typer.Typer(help="Invariance lab - measure and learn the transformations a CNN ignores")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

_argv: list[str] = []


def setup_logging() -> None:
    logging.basicConfig(
        level=os.getenv("INVARIANCE_LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _data_dir(data: Path | None) -> Path:
    data = data or env_path("INVARIANCE_DATA_DIR")
    if data is None:
        raise UsageError("--data is required (or set INVARIANCE_DATA_DIR)")
    return data


def _manifest(command: str, **flags) -> RunManifest:
    return RunManifest(command=command, argv=list(_argv), flags={k: v for k, v in flags.items() if v is not None})


def _finish(m: RunManifest, out: Path) -> None:
    m.finish()
    path = m.write(manifest_location(out))
    typer.echo(f"Run manifest: {path}")


DataOpt = Annotated[Path | None, typer.Option("--data", help="Dataset directory (default $INVARIANCE_DATA_DIR)")]
FormatOpt = Annotated[str, typer.Option("--format", help="idx or cifar10")]
SeedOpt = Annotated[int | None, typer.Option("--seed")]


@app.command("train-cnn")
def train_cnn(
    out: Annotated[Path, typer.Option("--out", help="Weights file to write")],
    data: DataOpt = None,
    format: FormatOpt = "idx",
    epochs: Annotated[int | None, typer.Option("--epochs")] = None,
    lr: Annotated[float | None, typer.Option("--lr")] = None,
    batch: Annotated[int | None, typer.Option("--batch")] = None,
    seed: SeedOpt = None,
):
    """Train the toy CNN and save its weights."""
    m = _manifest("train-cnn", format=format)
    launcher.train_cnn_run(m, _data_dir(data), format, epochs, lr, batch, seed, out)
    _finish(m, out)


@app.command()
def sweep(
    weights: Annotated[Path, typer.Option("--weights", help="Frozen CNN weights")],
    kind: Annotated[str, typer.Option("--kind", help="Transformation, e.g. rotate or gaussian_noise")],
    out: Annotated[Path, typer.Option("--out", help="Output directory")],
    data: DataOpt = None,
    format: FormatOpt = "idx",
    class_id: Annotated[int | None, typer.Option("--class", help="Probe one class; all classes if omitted")] = None,
    grid: Annotated[str | None, typer.Option("--grid", help="v0:v1:steps, inclusive")] = None,
    tau: Annotated[float | None, typer.Option("--tau")] = None,
    top_k: Annotated[int | None, typer.Option("--top-k")] = None,
    seed: Annotated[int, typer.Option("--seed")] = 0,
    workers: Annotated[int | None, typer.Option("--workers")] = None,
    limit: Annotated[int | None, typer.Option("--limit", help="Cap on images per sweep")] = None,
    split: Annotated[str, typer.Option("--split")] = "test",
):
    """Sweep one transformation over a grid of magnitudes and export softmax curves."""
    m = _manifest("sweep", format=format, class_id=class_id, seed=seed, limit=limit, split=split)
    launcher.sweep_run(m, weights, _data_dir(data), format, class_id, kind, grid, tau, top_k, seed, workers, limit, split, out)
    _finish(m, out)


def _acc_orig(value: str | None) -> float | None:
    if value is None or value == "auto":
        return None
    try:
        return float(value)
    except ValueError:
        raise UsageError(f"--acc-orig takes a number or 'auto', got {value!r}") from None


@app.command("itn-train")
def itn_train(
    weights: Annotated[Path, typer.Option("--weights", help="Frozen CNN weights")],
    out: Annotated[Path, typer.Option("--out", help="Output directory")],
    data: DataOpt = None,
    format: FormatOpt = "idx",
    steps: Annotated[int | None, typer.Option("--steps")] = None,
    c_theta: Annotated[float | None, typer.Option("--c-theta")] = None,
    acc_orig: Annotated[str | None, typer.Option("--acc-orig", help="Accuracy gate, or 'auto'")] = None,
    s_size: Annotated[int | None, typer.Option("--s-size")] = None,
    hidden: Annotated[int | None, typer.Option("--hidden")] = None,
    lr: Annotated[float | None, typer.Option("--lr")] = None,
    batch: Annotated[int | None, typer.Option("--batch")] = None,
    seed: SeedOpt = None,
    swap_k: Annotated[bool, typer.Option("--swap-k", help="k1 drives the spatial block")] = False,
):
    """Train the invariant transformer net against a frozen CNN."""
    cfg = ItnConfig.from_defaults(
        steps=steps,
        c_theta=c_theta,
        acc_orig=_acc_orig(acc_orig),
        s_size=s_size,
        hidden=hidden,
        lr=lr,
        batch=batch,
        seed=seed,
        swap_k=swap_k,
    )
    m = _manifest("itn-train", format=format, acc_orig=acc_orig or "auto")
    launcher.itn_train_run(m, weights, _data_dir(data), format, cfg, out)
    _finish(m, out)


@app.command("itn-render")
def itn_render(
    weights: Annotated[Path, typer.Option("--weights")],
    blocks: Annotated[Path, typer.Option("--blocks")],
    images: Annotated[Path, typer.Option("--images", help="Directory of PPM files or a dataset directory")],
    k_grid: Annotated[str, typer.Option("--k-grid", help="a,b/c,d;... or axes:v1,v2,...")],
    out: Annotated[Path, typer.Option("--out")],
    format: Annotated[str | None, typer.Option("--format", help="Read --images as a dataset")] = None,
    count: Annotated[int, typer.Option("--count")] = 8,
):
    """Render images transformed by trained blocks over a grid of control parameters."""
    m = _manifest("itn-render", k_grid=k_grid, format=format, count=count)
    launcher.itn_render_run(m, weights, blocks, images, format, count, k_grid, out)
    _finish(m, out)


@app.command()
def gradcheck(
    seed: Annotated[int, typer.Option("--seed")] = 0,
    out: Annotated[Path, typer.Option("--out")] = Path("runs/gradcheck"),
):
    """Check every analytic gradient against finite differences."""
    m = _manifest("gradcheck", seed=seed)
    passed = launcher.gradcheck_run(m, seed)
    _finish(m, out)
    if not passed:
        typer.echo("Gradient check failed.", err=True)
        raise typer.Exit(EXIT_USAGE)
    typer.echo("All gradients match.")


@app.command()
def replay(manifest: Annotated[Path, typer.Argument(help="run.json written by an earlier run")]):
    """Re-execute a run from its manifest."""
    recorded = RunManifest.read(manifest)
    typer.echo(f"Replaying {recorded.command}: {' '.join(recorded.argv)}")
    code = dispatch(recorded.argv)
    if code:
        raise typer.Exit(code)


def dispatch(argv: list[str]) -> int:
    """Run one CLI invocation in-process and return its exit code."""
    global _argv
    previous, _argv = _argv, list(argv)
    try:
        rv = app(args=list(argv), prog_name="invariance", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.exceptions.Abort:
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except (UsageError, ConfigurationError, DomainError) as e:
        typer.echo(f"error: {e}", err=True)
        return EXIT_USAGE
    except (DataFormatError, ShapeError, NumericalError, OSError) as e:
        typer.echo(f"error: {e}", err=True)
        return EXIT_DATA
    finally:
        _argv = previous
    # non-standalone click returns the code of a typer.Exit instead of raising it
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    dotenv.load_dotenv()
    setup_logging()
    sys.exit(dispatch(sys.argv[1:]))
