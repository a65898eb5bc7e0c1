import logging
from contextlib import contextmanager
from functools import wraps
from pathlib import Path
from typing import Callable, Optional

import typer
from django.conf import settings
from rich.console import Console
from rich.table import Table
from typer.models import CommandFunctionType

from pyhub.polarocc import pipeline
from pyhub.polarocc.core.choices import AblationStudy, CloudFormat, FormatChoices
from pyhub.polarocc.core.exceptions import ConfigError, DataError
from pyhub.polarocc.core.init import init_django
from pyhub.polarocc.core.json_utils import json_dumps
from pyhub.polarocc.core.manifest import RunManifest, atomic_write_bytes, atomic_write_text, tool_version
from pyhub.polarocc.head import polar_to_cartesian_grid
from pyhub.polarocc.tensor import dumps_array, read_array
from pyhub.polarocc.voxelize import FeatureVolume

logger = logging.getLogger(__name__)


class PyhubTyper(typer.Typer):
    """Typer app whose commands map exceptions to exit codes (see ``exit_codes``)."""

    def command(self, *args, **kwargs) -> Callable[[CommandFunctionType], CommandFunctionType]:
        register = super().command(*args, **kwargs)

        def decorator(f: CommandFunctionType) -> CommandFunctionType:
            @wraps(f)
            def wrapper(*f_args, **f_kwargs):
                with exit_codes():
                    return f(*f_args, **f_kwargs)

            register(wrapper)
            return f

        return decorator


app = PyhubTyper(add_completion=False, help="Polar-grid semantic occupancy prediction at desk scale.")
console = Console()


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    is_version: bool = typer.Option(False, "--version", "-v", help="Show version and exit."),
):
    init_django()
    if is_version:
        console.print(tool_version(), highlight=False)
        raise typer.Exit()
    if ctx.invoked_subcommand is None:
        console.print(ctx.get_help())
        raise typer.Exit()


@contextmanager
def exit_codes():
    """0 on success, 2 for configuration / data / missing-file errors, 1 for everything else."""
    try:
        yield
    except typer.Exit:
        raise
    except (ConfigError, DataError, FileNotFoundError) as e:
        console.print(f"[red]{e}[/red]", highlight=False)
        raise typer.Exit(2) from e
    except Exception as e:
        if settings.DEBUG:
            console.print_exception()
        console.print(f"[red]{type(e).__name__}: {e}[/red]", highlight=False)
        raise typer.Exit(1) from e


def _load_config(path: Optional[Path], seed: Optional[int]):
    if path is not None:
        cfg = pipeline.load_config(path)
    else:
        cfg = pipeline.config_from_dict({"grid": {"preset": settings.POLAROCC_DEFAULT_PRESET}})
    return cfg if seed is None else cfg.variant(seed=seed)


def _params(cfg, path: Optional[Path]):
    return pipeline.ParamStore.load(path, cfg) if path is not None else pipeline.ParamStore.initialize(cfg)


def _write_json(manifest: RunManifest, path: Path, data) -> Path:
    return manifest.add_output(atomic_write_text(path, json_dumps(data) + "\n"))


def _write_text(manifest: RunManifest, path: Path, text: str) -> Path:
    return manifest.add_output(atomic_write_text(path, text))


ConfigOption = typer.Option(None, "--config", "-c", help="ModelConfig JSON file")
SeedOption = typer.Option(None, "--seed", help="Overrides the config seed")
ThreadsOption = typer.Option(None, "--threads", help="Worker cap for scene-parallel work (default POLAROCC_THREADS)")
PrintFormatOption = typer.Option(FormatChoices.TABLE, "--print", help="Console output format")


@app.command()
def synth(
    out: Path = typer.Option(..., "--out", "-o", help="Output directory"),
    scenes: int = typer.Option(1, "--scenes", "-n", min=0, help="Number of scenes"),
    fmt: CloudFormat = typer.Option(CloudFormat.CSV, "--format", help="Point cloud file format"),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
):
    """Write seeded synthetic scenes: scene JSON, point cloud, truth grid and camera volume per scene."""
    cfg = _load_config(config, seed)
    manifest = RunManifest("synth", seed=cfg.seed, config_path=str(config) if config else None)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(scenes):
        for path in pipeline.write_sample_files(cfg, cfg.seed + i, out, i, fmt):
            manifest.add_output(path)
    manifest.write(out)
    console.print(f"[green]{scenes} scene(s) written to {out}[/green]", highlight=False)


@app.command()
def run(
    data: Path = typer.Option(..., "--data", "-d", help="Dataset directory written by synth"),
    out: Path = typer.Option(..., "--out", "-o", help="Metric report JSON"),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    params: Optional[Path] = typer.Option(None, "--params", help="Checkpoint written by train"),
    oracle: bool = typer.Option(False, "--oracle", help="Score the truth itself (one-hot features)"),
    bands: int = typer.Option(0, "--bands", min=0, help="Range bands for stratified mIoU"),
    threads: Optional[int] = ThreadsOption,
    print_format: FormatChoices = PrintFormatOption,
):
    """Forward pass and metrics over a dataset directory."""
    cfg = _load_config(config, seed)
    manifest = RunManifest("run", seed=cfg.seed, config_path=str(config) if config else None, inputs=[str(data)])
    samples = pipeline.load_samples(cfg, data)
    if not samples:
        raise DataError(f"no scenes in {data}")
    store = None if oracle else _params(cfg, params)
    _, report = pipeline.evaluate_samples(cfg, store, samples, n_bands=bands, threads=threads)
    _write_json(manifest, out, report.to_dict())
    manifest.write(out.parent, f"{out.stem}.manifest.json")
    _print_report(report, print_format)


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.4f}"


def _print_report(report, print_format: FormatChoices = FormatChoices.TABLE) -> None:
    if print_format == FormatChoices.JSON:
        console.print_json(json_dumps(report.to_dict()))
        return
    table = Table(title="[bold]Metrics[/bold]", title_justify="left")
    table.add_column("Metric", style="green")
    table.add_column("Value", justify="right")
    table.add_row("IoU", f"{report.iou:.4f}")
    table.add_row("mIoU", _fmt(report.miou))
    table.add_row("stuff mIoU", _fmt(report.stuff_miou))
    for name, value in report.per_class.items():
        table.add_row(f"  {name}", _fmt(value))
    console.print(table)


@app.command()
def train(
    out: Path = typer.Option(..., "--out", "-o", help="Output directory"),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    steps: Optional[int] = typer.Option(None, "--steps", min=0, help="Overrides train.steps"),
    threads: Optional[int] = ThreadsOption,
):
    """Train on seeded synthetic scenes; writes the JSON-lines log, a checkpoint and a validation report."""
    cfg = _load_config(config, seed)
    manifest = RunManifest("train", seed=cfg.seed, config_path=str(config) if config else None)
    out.mkdir(parents=True, exist_ok=True)
    train_seeds, val_seeds = pipeline.split_seeds(cfg)
    store = pipeline.ParamStore.initialize(cfg)
    log_path = manifest.add_output(out / "train.jsonl")
    log = pipeline.train(cfg, pipeline.build_dataset(cfg, train_seeds, threads), store, steps=steps, log_path=log_path)
    for path in store.save(out / "params.bin"):
        manifest.add_output(path)
    if val_seeds:
        val = pipeline.build_dataset(cfg, val_seeds, threads)
        _, report = pipeline.evaluate_samples(cfg, store, val, threads=threads)
        _write_json(manifest, out / "report.json", report.to_dict())
        _print_report(report)
    manifest.write(out)
    if log.steps:
        console.print(f"loss {log.losses[0]:.4f} -> {log.losses[-1]:.4f}", highlight=False)


@app.command()
def ablate(
    out: Path = typer.Option(..., "--out", "-o", help="Output directory"),
    study: AblationStudy = typer.Option(AblationStudy.COMPONENTS, "--study", help="Ablation study"),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    steps: Optional[int] = typer.Option(None, "--steps", min=0, help="Overrides train.steps"),
    threads: Optional[int] = ThreadsOption,
):
    """Train every row of an ablation study with the same seed and budget; emits Markdown, CSV and JSON."""
    cfg = _load_config(config, seed)
    manifest = RunManifest("ablate", seed=cfg.seed, config_path=str(config) if config else None)
    table = pipeline.ablate(cfg, study=study, steps=steps, threads=threads)
    markdown = table.to_markdown()
    _write_text(manifest, out / "ablation.md", markdown)
    _write_text(manifest, out / "ablation.csv", table.to_csv())
    _write_json(manifest, out / "ablation.json", table.to_dict())
    manifest.write(out)
    console.print(markdown, highlight=False, markup=False)
    for violation in table.ordering_violations():
        console.print(f"[yellow]mIoU ordering: {violation}[/yellow]", highlight=False)


@app.command()
def gradcheck(
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="ModelConfig JSON (default: tiny fused)"),
    seed: int = typer.Option(0, "--seed", help="Seed for parameters and random inputs"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Directory for gradcheck.json"),
    print_format: FormatChoices = PrintFormatOption,
):
    """Compare analytic and finite-difference gradients; exit 0 iff every entry passes."""
    cfg = pipeline.load_config(config).variant(seed=seed) if config else pipeline.tiny_config(seed)
    report = pipeline.gradcheck_all(cfg, seed=seed)
    if print_format == FormatChoices.JSON:
        console.print_json(json_dumps(report.to_dict()))
    else:
        _print_gradcheck(report)
    if out is not None:
        manifest = RunManifest("gradcheck", seed=seed, config_path=str(config) if config else None)
        data = {**report.to_dict(), "model": pipeline.stats_to_dict(pipeline.model_stats(cfg))}
        _write_json(manifest, out / "gradcheck.json", data)
        manifest.write(out)
    if not report.passed:
        for entry in report.failures():
            console.print(f"[red]{entry.module} {entry.target}: {entry.error:.3e}[/red]", highlight=False)
        raise typer.Exit(1)


def _print_gradcheck(report) -> None:
    table = Table(title="[bold]Gradient check[/bold]", title_justify="left")
    table.add_column("Module", style="green")
    table.add_column("Max relative error", justify="right")
    table.add_column("Status")
    for module, error in report.module_errors().items():
        status = "[green]ok[/green]" if error <= report.tolerance else "[red]FAIL[/red]"
        table.add_row(module, f"{error:.3e}", status)
    console.print(table)


@app.command()
def stats(
    out: Path = typer.Option(..., "--out", "-o", help="Output directory"),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    scenes: int = typer.Option(4, "--scenes", "-n", min=1, help="Number of seeded scenes"),
    bands: int = typer.Option(5, "--bands", min=1, help="Range bands"),
    params: Optional[Path] = typer.Option(None, "--params", help="Checkpoint for range-stratified mIoU"),
    threads: Optional[int] = ThreadsOption,
):
    """Point density by range on polar and Cartesian grids, range-stratified mIoU and model size."""
    cfg = _load_config(config, seed)
    manifest = RunManifest("stats", seed=cfg.seed, config_path=str(config) if config else None)
    samples = pipeline.build_dataset(cfg, [cfg.seed + i for i in range(scenes)], threads)
    density = pipeline.density_study([s.cloud for s in samples], cfg.polar_spec(), bands)
    _, report = pipeline.evaluate_samples(cfg, _params(cfg, params), samples, n_bands=bands, threads=threads)
    data = {
        "histograms": {"polar": density["polar"], "cartesian": density["cartesian"]},
        "density_ratio": density["density_ratio"],
        "range_miou": report.to_dict()["bands"],
        "model": pipeline.stats_to_dict(pipeline.model_stats(cfg)),
    }
    _write_json(manifest, out / "stats.json", data)
    manifest.write(out)

    table = Table(title="[bold]Points per occupied voxel[/bold]", title_justify="left")
    table.add_column("Band", justify="right")
    table.add_column("Range [m]")
    table.add_column("Polar", justify="right")
    table.add_column("Cartesian", justify="right")
    for polar, cartesian in zip(density["polar"], density["cartesian"]):
        table.add_row(
            str(polar["band"]),
            f"{polar['r_lo']:.1f}-{polar['r_hi']:.1f}",
            f"{polar['points_per_occupied_voxel']:.2f}",
            f"{cartesian['points_per_occupied_voxel']:.2f}",
        )
    console.print(table)
    ratio = density["density_ratio"]
    console.print(f"max/min ratio: polar {ratio['polar']:.3f}, cartesian {ratio['cartesian']:.3f}", highlight=False)


@app.command()
def resample(
    source: Path = typer.Option(..., "--in", "-i", help="PVOARR1 feature volume on the polar grid"),
    out: Path = typer.Option(..., "--out", "-o", help="PVOARR1 feature volume on the Cartesian grid"),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
):
    """Convert a polar feature volume to the Cartesian output grid by trilinear sampling."""
    cfg = _load_config(config, seed)
    config_path = str(config) if config else None
    manifest = RunManifest("resample", seed=cfg.seed, config_path=config_path, inputs=[str(source)])
    if not source.is_file():
        raise FileNotFoundError(f"input volume not found: {source}")
    data = read_array(source)
    polar = cfg.polar_spec()
    if data.ndim != 4 or data.shape[:3] != tuple(polar.bins):
        raise DataError(f"{source}: shape {data.shape} does not fit the polar grid {polar.bins}")
    volume = polar_to_cartesian_grid(FeatureVolume(spec=polar, data=data), cfg.output_spec())
    manifest.add_output(atomic_write_bytes(out, dumps_array(volume.data)))
    manifest.write(out.parent, f"{out.stem}.manifest.json")
    console.print(f"{polar.bins} -> {cfg.output_spec().bins}", highlight=False)
