"""CLI - Click-based command line interface."""
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from config import EMIT_CHOICES, RunConfig, get_settings, save_overrides
from config.settings import Tuning
from core import (
    Algorithm,
    BraidWordError,
    BundleError,
    ClassicalBraidWord,
    ConstructionError,
    ConstructionResult,
    FieldError,
    FieldForm,
    FieldModel,
    InterpolationError,
    LoopBraidWord,
    PolynomialError,
    StrandPipelineError,
    TorusComponent,
    VerificationError,
    build as build_result,
    closure_permutation,
    degree_bound,
    is_homogeneous,
    load_braid,
    load_bundle,
    parse_classical_word,
    parse_loop_word,
    random_points,
    read_json,
    ring_tangency,
    sample_field,
    satellite_bound,
    satellite_builder,
    strand_components,
    torus_builder,
    verify as run_verify,
    write_field_samples,
    write_json,
    write_slices,
    write_strand_samples,
)

console = Console()
err_console = Console(stderr=True)

KNOWN_ERRORS = (
    BraidWordError,
    InterpolationError,
    StrandPipelineError,
    PolynomialError,
    ConstructionError,
    VerificationError,
    FieldError,
    BundleError,
)
ERROR_STAGES = (
    (BraidWordError, "input"),
    (InterpolationError, "interpolation"),
    (PolynomialError, "polynomial"),
    (VerificationError, "verify"),
    (FieldError, "vectorfield"),
    (BundleError, "bundle"),
)
LOOP_ALGORITHMS = {"loop", "holomorphic", "satellite"}


def _setup_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, get_settings().log_level.upper(), logging.WARNING)
    root = logging.getLogger()
    root.handlers = [RichHandler(console=err_console, show_path=False, rich_tracebacks=verbose)]
    root.setLevel(level)


def _stage(error: Exception) -> str:
    stage = getattr(error, "stage", None)
    if stage is not None:
        return getattr(stage, "value", str(stage))
    for kind, name in ERROR_STAGES:
        if isinstance(error, kind):
            return name
    return "config"


def _fail(error: Exception) -> None:
    message = error.args[0] if error.args else str(error)
    err_console.print(f"[red]Error ({_stage(error)}): {message}[/red]")
    sys.exit(1)


def _run_config(ctx: click.Context, **overrides) -> RunConfig:
    obj = ctx.obj
    try:
        return RunConfig.from_settings(
            config_file=obj.get("config_file"),
            threads=obj.get("threads"),
            seed=obj.get("seed"),
            **overrides,
        )
    except ValueError as e:
        _fail(e)


def _read_word(word: Optional[str], word_file: Optional[str], strands: Optional[int], loop: bool):
    """Parse inline text or a Braid JSON file into a word of the requested family."""
    if word_file:
        model = load_braid(word_file)
        data = model.model_dump(include={"strands", "tokens"})
        return LoopBraidWord.from_json(data) if loop else ClassicalBraidWord.from_json(data)
    if word is None or strands is None:
        raise BraidWordError("give --word and --strands, or --word-file")
    return parse_loop_word(word, strands) if loop else parse_classical_word(word, strands)


def _parse_satellites(specs: List[str]) -> Dict[int, object]:
    """``C:STRANDS:WORD`` -> {C: classical word}."""
    out: Dict[int, object] = {}
    for spec in specs:
        parts = spec.split(":", 2)
        if len(parts) != 3:
            raise BraidWordError(f"satellite {spec!r} is not of the form C:STRANDS:WORD")
        try:
            component, strands = int(parts[0]), int(parts[1])
        except ValueError as e:
            raise BraidWordError(f"satellite {spec!r}: component and strand count must be integers") from e
        out[component] = parse_classical_word(parts[2], strands)
    return out


def _load_result(bundle: str) -> ConstructionResult:
    return ConstructionResult.from_bundle(load_bundle(bundle))


@click.group()
@click.option("--verbose", "-v", is_flag=True)
@click.option("--threads", type=click.IntRange(min=1), envvar="BRAIDFORGE_THREADS", help="Worker cap.")
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), help="JSON config file.")
@click.option("--seed", type=int, default=None, help="Seed for every randomized step (default 0).")
@click.pass_context
def cli(ctx, verbose, threads, config_file, seed):
    """braidforge - polynomials whose zeros are (loop) braids"""
    ctx.ensure_object(dict)
    ctx.obj.update(verbose=verbose, threads=threads, config_file=config_file, seed=seed)
    _setup_logging(verbose)


@cli.command()
@click.option("--word", "-w", help="Braid text, e.g. 's1^-1 s2'.")
@click.option("--word-file", type=click.Path(exists=True, dir_okay=False))
@click.option("--strands", "-s", type=int)
@click.option("--loop", is_flag=True, help="Parse as a loop braid word (s_i and r_i).")
@click.option("--json", "as_json", is_flag=True)
def parse(word, word_file, strands, loop, as_json):
    """Parse a braid word and show its closure data."""
    try:
        parsed = _read_word(word, word_file, strands, loop)
    except KNOWN_ERRORS as e:
        _fail(e)
    decomposition = strand_components(parsed)
    info = {
        "type": "loop" if loop else "classical",
        **parsed.to_json(),
        "length": parsed.length,
        "text": parsed.to_text(),
        "normalized": parsed.normalized_text(),
        "permutation": list(closure_permutation(parsed)),
        "components": decomposition.to_dict(),
        "homogeneous": is_homogeneous(parsed),
    }
    if as_json:
        click.echo(json.dumps(info, indent=2))
        return
    table = Table(title="Braid word")
    table.add_column("Field", style="cyan")
    table.add_column("Value", style="white")
    for key in ("type", "strands", "length", "text", "normalized", "permutation", "homogeneous"):
        table.add_row(key, str(info[key]))
    table.add_row("strand counts", str(list(decomposition.strand_counts)))
    console.print(table)


@cli.command()
@click.option(
    "--algorithm", "-a", required=True,
    type=click.Choice([a.value for a in Algorithm]),
)
@click.option("--word", "-w")
@click.option("--word-file", type=click.Path(exists=True, dir_okay=False))
@click.option("--strands", "-s", type=int)
@click.option("--n", "n", type=int, default=0, help="Rotation number for the spinning construction.")
@click.option("--emit", default=",".join(EMIT_CHOICES), show_default=True, help="Comma list of g,f,ftilde,bounds.")
@click.option("--lambda", "lam", default=None, help="'auto' or a positive number (default: config).")
@click.option("--satellite", "satellites", multiple=True, help="C:STRANDS:WORD classical braid around component C.")
@click.option("--torus", "torus_file", type=click.Path(exists=True, dir_okay=False), help="JSON list of torus components.")
@click.option("--output", "-o", type=click.Path(dir_okay=False))
@click.pass_context
def build(ctx, algorithm, word, word_file, strands, n, emit, lam, satellites, torus_file, output):
    """Construct the polynomial for a braid and write the result bundle."""
    config = _run_config(ctx, emit=emit, lambda_mode=lam)
    try:
        if algorithm == Algorithm.TORUS.value:
            if not torus_file:
                raise ConstructionError("input", "the torus construction needs --torus FILE")
            raw = read_json(torus_file)
            result = torus_builder([TorusComponent.from_dict(item) for item in raw], config)
        else:
            parsed = _read_word(word, word_file, strands, loop=algorithm in LOOP_ALGORITHMS)
            if algorithm == Algorithm.SATELLITE.value:
                result = satellite_builder(parsed, _parse_satellites(list(satellites)), None, config)
            else:
                with console.status(f"[bold blue]Building {algorithm}...[/bold blue]"):
                    result = build_result(parsed, algorithm, None, n, config)
    except KNOWN_ERRORS as e:
        _fail(e)
    except (KeyError, TypeError, ValueError) as e:
        _fail(e)

    path = Path(output or Path(config.output_dir) / f"{algorithm}.json")
    write_json(path, result.to_bundle(config.emit))

    degrees = result.degrees
    table = Table(title=f"{algorithm} construction")
    table.add_column("Field", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("lambda", f"{result.lam:.6g}")
    table.add_row("total degree", str(degrees.total))
    for var, deg in sorted(degrees.per_variable.items()):
        table.add_row(f"deg_{var}", str(deg))
    if result.bounds is not None:
        table.add_row(f"{result.bounds.kind} bound", str(result.bounds.bound))
        table.add_row("within bound", "[green]yes[/green]" if result.within_bound else "[red]no[/red]")
    table.add_row("bundle", str(path))
    console.print(table)
    for note in result.notes:
        console.print(f"[yellow]note:[/yellow] {note}")


@cli.command()
@click.argument("bundle", type=click.Path(dir_okay=False))
@click.option("--checks", default=None, help="Comma list of checks to run (default: all that apply).")
@click.option("--lambda", "lam", type=float, default=None, help="Rescale the bundle to this lambda first.")
@click.option("--output", "-o", type=click.Path(dir_okay=False))
@click.pass_context
def verify(ctx, bundle, checks, lam, output):
    """Numerically verify a construction bundle (exit 0 PASS, 2 FAIL, 1 error)."""
    config = _run_config(ctx)
    wanted = None if checks is None else [c.strip() for c in checks.split(",") if c.strip()]
    try:
        result = _load_result(bundle)
        if lam is not None:
            result = result.at_lambda(lam)
        with console.status("[bold blue]Verifying...[/bold blue]"):
            report = run_verify(result, config, wanted)
    except KNOWN_ERRORS as e:
        _fail(e)

    path = Path(output) if output else Path(bundle).with_suffix(".report.json")
    write_json(path, report.to_dict())

    table = Table(title=f"Verification ({report.algorithm}, lambda={report.lam:.6g})")
    table.add_column("Check", style="cyan")
    table.add_column("Status")
    table.add_column("Message", style="white")
    colours = {"PASS": "green", "FAIL": "red", "SKIPPED": "yellow"}
    for check in report.checks:
        status = check.status.value
        label = f"[{colours[status]}]{status}[/{colours[status]}]" + (" (advisory)" if check.advisory else "")
        table.add_row(check.name, label, check.message)
    console.print(table)
    console.print(f"report: {path}")
    if not report.passed:
        console.print("[red]FAIL[/red]")
        sys.exit(2)
    console.print("[green]PASS[/green]")


@cli.command()
@click.argument("bundle", type=click.Path(dir_okay=False))
@click.option("--samples", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--radius", type=float, default=None, help="Sample cube half-width (default 1.5 * lambda).")
@click.option("--form", type=click.Choice([f.value for f in FieldForm]), default=FieldForm.RANADA.value, show_default=True)
@click.option("--tangency/--no-tangency", default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False))
@click.pass_context
def vectorfield(ctx, bundle, samples, radius, form, tangency, output):
    """Sample the divergence-free field built from g and write CSV."""
    config = _run_config(ctx)
    try:
        result = _load_result(bundle)
        model = FieldModel(result.g, form)
        points, times = random_points(samples, radius or 1.5 * result.lam, seed=config.seed)
        field_samples = sample_field(model, points, times)
        tangent = None
        if tangency and result.system is not None and result.algorithm != Algorithm.SATELLITE:
            tangent = ring_tangency(model, result.system, result.lam)
    except KNOWN_ERRORS as e:
        _fail(e)

    path = Path(output or Path(config.output_dir) / "vectorfield.csv")
    write_field_samples(path, field_samples)
    worst_div = max(abs(s.divergence) / max(1e-300, sum(v * v for v in s.vector) ** 0.5) for s in field_samples)
    table = Table(title="Vector field")
    table.add_column("Field", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("form", form)
    table.add_row("samples", str(len(field_samples)))
    table.add_row("max |div V| / |V|", f"{worst_div:.3g}")
    if tangent is not None:
        table.add_row("max tangency angle", f"{tangent.max_angle:.3g} rad")
    table.add_row("csv", str(path))
    console.print(table)


@cli.command()
@click.argument("bundle", type=click.Path(dir_okay=False))
@click.option("--slices", "slice_count", type=click.IntRange(min=0), default=8, show_default=True)
@click.option("--field-samples", type=click.IntRange(min=0), default=0, help="Also write vector-field samples.")
@click.option("--out-dir", type=click.Path(file_okay=False))
@click.pass_context
def plotdata(ctx, bundle, slice_count, field_samples, out_dir):
    """Write CSV plot data: strand samples, slice zero sets and field samples."""
    config = _run_config(ctx)
    out = Path(out_dir or config.output_dir)
    written: List[Path] = []
    try:
        result = _load_result(bundle)
        written.append(write_strand_samples(out / "strands.csv", result, config))
        if slice_count:
            written.extend(write_slices(out, result, slice_count, config))
        if field_samples:
            model = FieldModel(result.g)
            points, times = random_points(field_samples, 1.5 * result.lam, seed=config.seed)
            written.append(write_field_samples(out / "vectorfield.csv", sample_field(model, points, times)))
    except KNOWN_ERRORS as e:
        _fail(e)
    except OSError as e:
        _fail(e)
    console.print(f"[green]Wrote {len(written)} files to {out}[/green]")


@cli.command()
@click.option("--word", "-w")
@click.option("--word-file", type=click.Path(exists=True, dir_okay=False))
@click.option("--strands", "-s", type=int)
@click.option(
    "--kind", type=click.Choice(["classical", "loop", "corollary", "holomorphic", "spinning", "satellite"]),
    default=None, help="Default: classical for s-words, loop with --loop, spinning with --n.",
)
@click.option("--loop", is_flag=True)
@click.option("--n", "n", type=int, default=None)
@click.option("--satellite", "satellites", multiple=True, help="C:STRANDS:WORD (satellite bound only).")
@click.option("--json", "as_json", is_flag=True)
def bounds(word, word_file, strands, kind, loop, n, satellites, as_json):
    """Evaluate the degree bound of a construction without building it."""
    loop = loop or kind in ("loop", "holomorphic", "satellite")
    try:
        parsed = _read_word(word, word_file, strands, loop)
        if kind == "satellite":
            report = satellite_bound(parsed, _parse_satellites(list(satellites)))
        else:
            report = degree_bound(parsed, n=n, kind=kind)
    except KNOWN_ERRORS as e:
        _fail(e)
    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=2))
        return
    table = Table(title=f"{report.kind} bound")
    table.add_column("Component", style="cyan")
    table.add_column("s_C", style="white")
    table.add_column("term", style="white")
    table.add_column("contribution", style="green")
    for c, (s_c, term, contribution) in enumerate(zip(report.strand_counts, report.terms, report.contributions), start=1):
        table.add_row(str(c), str(s_c), str(term), str(contribution))
    console.print(table)
    console.print(f"[bold]bound = {report.bound}[/bold]")
    if report.closed_form is not None:
        console.print(f"closed form = {report.closed_form}")


@cli.command("config")
@click.option("--set", "assignments", multiple=True, help="KEY=VALUE persisted to config/overrides.json.")
def config_cmd(assignments):
    """Show the effective tuning, or persist overrides."""
    if assignments:
        values = {}
        for item in assignments:
            key, sep, value = item.partition("=")
            if not sep:
                _fail(ValueError(f"expected KEY=VALUE, got {item!r}"))
            values[key.strip()] = _json_or_text(value)
        try:
            save_overrides(values)
        except ValueError as e:
            _fail(e)
        console.print(f"[green]Saved {len(values)} override(s)[/green]")
    settings = get_settings()
    table = Table(title="Tuning")
    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="green")
    for name in Tuning.model_fields:
        table.add_row(name, str(getattr(settings, name)))
    console.print(table)


def _json_or_text(text: str):
    try:
        return json.loads(text)
    except ValueError:
        return text


def main():
    cli(obj={})


if __name__ == "__main__":
    main()
