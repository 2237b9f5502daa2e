#!/usr/bin/env python3.12
"""
CLI interface for RP-TSNE: random projection before t-SNE
"""
import sys
from pathlib import Path

import click
from dotenv import load_dotenv
from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from src.errors import EXIT_OK, ParameterError, exit_code_for
from src.evaluation import accuracy_score, average_repeats, ratio_table
from src.models.config import DatasetSpec, SweepConfig, TsneConfig, load_sweep_config
from src.reducers.random_projection import apply_projection, gaussian_projection, jl_audit, jl_min_dimension
from src.utils.data_io import load_dataset, load_raw, write_raw
from src.utils.figures import emit_ratio_figure, emit_scatter_figure, emit_scatter_panels, write_svg
from src.utils.run_store import RESULTS_FILE, RunStore, find_baseline, read_results
from src.workflow import SweepWorkflow

# Load environment variables
load_dotenv()

console = Console()


class RpTsneGroup(click.Group):
    """Command group whose exit codes follow exit_code_for (usage errors exit 1)"""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        if not standalone_mode:
            return super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        try:
            super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.exceptions.Abort:
            console.print("[red]Aborted[/red]")
            sys.exit(1)
        except click.ClickException as e:
            e.show()
            sys.exit(exit_code_for(e))
        sys.exit(EXIT_OK)


def _fail(e: Exception):
    console.print(f"\n[bold red]✗ Error:[/bold red] {str(e)}\n")
    sys.exit(exit_code_for(e))


def _dataset_spec(fmt, images, labels, matrix, csv_path, csv_header, no_label_column, subsample, normalize, seed):
    return DatasetSpec(
        format=fmt,
        images_path=images,
        labels_path=labels,
        matrix_path=matrix,
        csv_path=csv_path,
        csv_header=csv_header,
        csv_label_column=not no_label_column,
        subsample_size=subsample,
        normalize=normalize,
        seed=seed,
    )


def dataset_options(func):
    """Options shared by commands that read a dataset"""
    options = [
        click.option('--format', 'fmt', default='raw_f64', type=click.Choice(['idx', 'raw_f64', 'csv']),
                     help='Input format'),
        click.option('--images', help='IDX image file'),
        click.option('--labels', help='IDX label file'),
        click.option('--matrix', help='raw_f64 matrix (sidecar at <matrix>.meta)'),
        click.option('--csv', 'csv_path', help='CSV file'),
        click.option('--csv-header', is_flag=True, help='CSV has a header row'),
        click.option('--no-label-column', is_flag=True, help='CSV has no trailing label column'),
        click.option('--subsample', type=int, help='Rows to keep (seeded)'),
        click.option('--normalize/--no-normalize', default=True, help='Divide IDX byte data by 255'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group(cls=RpTsneGroup)
@click.option('--seed', type=int, default=0, envvar='RPTSNE_SEED', help='Master seed')
@click.option('--threads', type=int, default=1, envvar='RPTSNE_THREADS', help='Worker threads for per-point stages')
@click.option('--out-dir', default='./runs', envvar='RPTSNE_OUT_DIR', help='Output directory')
@click.pass_context
def cli(ctx, seed, threads, out_dir):
    """RP-TSNE: random projection before t-SNE"""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, threads=threads, out_dir=out_dir)
    # options the user actually set; these override config-file values
    ctx.obj['explicit'] = {
        name for name in ('seed', 'threads', 'out_dir')
        if ctx.get_parameter_source(name) != click.core.ParameterSource.DEFAULT
    }


@cli.command()
@dataset_options
@click.option('--output', required=True, help='Output raw_f64 matrix path')
@click.pass_context
def convert(ctx, fmt, images, labels, matrix, csv_path, csv_header, no_label_column, subsample, normalize, output):
    """Convert an IDX or CSV dataset to raw_f64 + sidecar"""

    console.print("\n[bold cyan]Dataset Conversion[/bold cyan]\n")
    try:
        spec = _dataset_spec(fmt, images, labels, matrix, csv_path, csv_header, no_label_column,
                             subsample, normalize, ctx.obj['seed'])
        X, y = load_dataset(spec)
        sidecar = write_raw(output, X, labels=y)

        console.print(f"[bold green]✓ Wrote {X.shape[0]}x{X.shape[1]} matrix[/bold green]")
        console.print(f"Matrix: [green]{output}[/green]")
        console.print(f"Sidecar: [green]{sidecar}[/green]\n")
    except Exception as e:
        _fail(e)


@cli.command()
@dataset_options
@click.option('--reducer', default='none', type=click.Choice(['none', 'random_projection', 'pca']),
              help='Reduction applied before t-SNE')
@click.option('--d-prime', type=int, help='Target dimension for the reducer')
@click.option('--perplexity', type=float, default=30.0, help='Target perplexity')
@click.option('--n-iter', type=int, default=1000, help='Gradient descent iterations')
@click.option('--theta', type=float, default=0.0, help='Barnes-Hut opening angle (0 = exact)')
@click.option('--k', type=int, default=1, help='Neighbours for the accuracy score')
@click.option('--name', default='tsne', help='Output file prefix inside --out-dir')
@click.pass_context
def tsne(ctx, fmt, images, labels, matrix, csv_path, csv_header, no_label_column, subsample, normalize,
         reducer, d_prime, perplexity, n_iter, theta, k, name):
    """Run a single (optionally reduced) t-SNE embedding"""

    console.print("\n[bold cyan]t-SNE Run[/bold cyan]")
    console.print(f"Reducer: [yellow]{reducer}[/yellow]" + (f" to d'={d_prime}" if d_prime else "") + "\n")

    try:
        spec = _dataset_spec(fmt, images, labels, matrix, csv_path, csv_header, no_label_column,
                             subsample, normalize, ctx.obj['seed'])
        config = SweepConfig(
            dataset=spec,
            reducers=[],
            k=k,
            seed=ctx.obj['seed'],
            out_dir=ctx.obj['out_dir'],
            tsne=TsneConfig(perplexity=perplexity, n_iter=n_iter, theta=theta, n_threads=ctx.obj['threads']),
        )
        workflow = SweepWorkflow(config)

        X, y = load_dataset(spec)
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console
        ) as progress:
            progress.add_task("Running t-SNE...", total=None)
            result = workflow.embed(X, y, reducer, d_prime, ctx.obj['seed'], workflow.tsne_seed(0))

        out = Path(ctx.obj['out_dir'])
        embedding_path = str(out / f"{name}.f64")
        trace_path = str(out / f"{name}_trace.csv")
        result.embedding.save(embedding_path, labels=y)
        result.trace.save(trace_path)

        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("Metric", style="cyan")
        table.add_column("Value", style="yellow")
        table.add_row("Points", str(X.shape[0]))
        table.add_row("Dimension given to t-SNE", str(result.d_prime))
        table.add_row("t-SNE seconds", f"{result.tsne_seconds:.3f}")
        table.add_row("Iterations", str(result.trace.stop_iteration))
        table.add_row("KL (initial -> final)", f"{result.trace.initial_kl:.4f} -> {result.trace.final_kl:.4f}")
        if result.accuracy is not None:
            table.add_row(f"Accuracy (k={k})", f"{result.accuracy.score:.4f}")

        console.print(table)
        console.print(f"\nEmbedding: [green]{embedding_path}[/green]")
        console.print(f"Trace: [green]{trace_path}[/green]\n")
    except Exception as e:
        _fail(e)


@cli.command()
@click.option('--config-file', help='key=value sweep configuration')
@dataset_options
@click.option('--reducers', help='Comma-separated reducers (random_projection,pca or none)')
@click.option('--dim-start', type=int, help='First swept dimension')
@click.option('--dim-base', type=float, help='Growth factor between dimensions')
@click.option('--dims', help="Comma-separated explicit d' values")
@click.option('--repeats', type=int, help="Runs per (reducer, d')")
@click.option('--k', type=int, help='Neighbours for the accuracy score')
@click.option('--perplexity', type=float, help='Target perplexity')
@click.option('--n-iter', type=int, help='Gradient descent iterations')
@click.option('--theta', type=float, help='Barnes-Hut opening angle (0 = exact)')
@click.pass_context
def sweep(ctx, config_file, fmt, images, labels, matrix, csv_path, csv_header, no_label_column, subsample,
          normalize, reducers, dim_start, dim_base, dims, repeats, k, perplexity, n_iter, theta):
    """Run the baseline and every reducer over the swept dimensions"""

    console.print("\n[bold cyan]Dimension Sweep[/bold cyan]")
    console.print(f"Output: [yellow]{ctx.obj['out_dir']}[/yellow]\n")

    explicit = ctx.obj['explicit']
    overrides = {
        'seed': ctx.obj['seed'] if 'seed' in explicit or not config_file else None,
        'out_dir': ctx.obj['out_dir'] if 'out_dir' in explicit or not config_file else None,
        'n_threads': ctx.obj['threads'] if 'threads' in explicit or not config_file else None,
        'images_path': images,
        'labels_path': labels,
        'matrix_path': matrix,
        'csv_path': csv_path,
        'subsample_size': subsample,
        'reducers': reducers,
        'dim_start': dim_start,
        'dim_base': dim_base,
        'dims': dims,
        'repeats': repeats,
        'k': k,
        'perplexity': perplexity,
        'n_iter': n_iter,
        'theta': theta,
    }
    if ctx.get_parameter_source('fmt') != click.core.ParameterSource.DEFAULT or not config_file:
        overrides['format'] = fmt
    if csv_header:
        overrides['csv_header'] = True
    if no_label_column:
        overrides['csv_label_column'] = False
    if not normalize:
        overrides['normalize'] = False

    try:
        config = load_sweep_config(config_file, overrides)
        workflow = SweepWorkflow(config)
        records = workflow.run_sweep()

        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("Reducer", style="cyan")
        table.add_column("d'", justify="right")
        table.add_column("t-SNE s", justify="right")
        table.add_column("Accuracy", justify="right")
        table.add_column("Final KL", justify="right")
        for record in records:
            if record.failed:
                table.add_row(record.reducer, str(record.d_prime), "[red]Failed[/red]", "", record.error or "")
            else:
                table.add_row(record.reducer, str(record.d_prime), f"{record.tsne_seconds:.2f}",
                              f"{record.accuracy.score:.4f}", f"{record.final_kl:.4f}")

        console.print("\n[bold green]Sweep complete![/bold green]\n")
        console.print(table)
        console.print(f"\nResults: [green]{workflow.store.results_path}[/green]\n")
    except Exception as e:
        _fail(e)


@cli.command()
@click.option('--embedding', required=True, help='raw_f64 embedding (labels stored or given with --labels)')
@click.option('--labels', 'labels_path', help='raw_f64 file whose stored labels to use instead')
@click.option('--k', type=int, default=1, help='Neighbour count')
@click.pass_context
def score(ctx, embedding, labels_path, k):
    """Accuracy score of a saved embedding"""

    console.print("\n[bold cyan]Accuracy Score[/bold cyan]\n")
    try:
        Y, y = load_raw(embedding)
        if labels_path:
            _, y = load_raw(labels_path)
        if y is None:
            raise ParameterError("No labels stored with the embedding; pass --labels")
        report = accuracy_score(Y, y, k=k, n_threads=ctx.obj['threads'])

        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("Label", style="cyan")
        table.add_column("Points", justify="right")
        table.add_column("Score", justify="right", style="green")
        for label, value in sorted(report.per_class_scores.items()):
            table.add_row(str(label), str(report.class_counts[label]), f"{value:.4f}")

        console.print(table)
        console.print(f"\nScore (k={k}): [bold green]{report.score:.4f}[/bold green]")
        if report.tie_count:
            console.print(f"[dim]{report.tie_count} modal ties broken by smallest label[/dim]")
        console.print()
    except Exception as e:
        _fail(e)


@cli.command()
@click.option('--results', help='Sweep CSV (defaults to <out-dir>/results.csv)')
@click.option('--log-base', type=float, default=1.5, help='Base of the logarithmic x axis')
@click.option('--output', help='Output SVG path')
@click.option('--scatter', multiple=True, help='raw_f64 embedding to draw (repeat for side-by-side panels)')
@click.option('--title', default='', help='Figure title')
@click.pass_context
def plot(ctx, results, log_base, output, scatter, title):
    """Draw ratio curves from a sweep CSV or scatter plots of embeddings"""

    console.print("\n[bold cyan]Figures[/bold cyan]\n")
    try:
        if scatter:
            panels = []
            for path in scatter:
                Y, y = load_raw(path)
                if y is None:
                    raise ParameterError(f"{path} has no stored labels to colour by")
                panels.append((Path(path).stem, Y, y))
            if len(panels) == 1:
                document = emit_scatter_figure(panels[0][1], panels[0][2], title or panels[0][0])
            else:
                document = emit_scatter_panels(panels)
            target = output or str(Path(ctx.obj['out_dir']) / "scatter.svg")
        else:
            records = read_results(results or str(Path(ctx.obj['out_dir']) / RESULTS_FILE))
            baseline = find_baseline(records)
            if baseline is None:
                raise ParameterError("No completed baseline row in the results file")
            table = average_repeats(ratio_table(baseline, [r for r in records if r.reducer != "none"]))
            document = emit_ratio_figure(table, log_base=log_base, title=title)
            target = output or str(Path(ctx.obj['out_dir']) / "ratios.svg")

        write_svg(document, target)
        console.print(f"[bold green]✓ Figure written:[/bold green] {target}\n")
    except Exception as e:
        _fail(e)


@cli.command('jl-audit')
@click.option('--matrix', required=True, help='raw_f64 matrix to project')
@click.option('--d-prime', type=int, required=True, help='Target dimension')
@click.option('--epsilon', type=float, default=0.3, help='Allowed squared-distance distortion')
@click.option('--pairs', type=int, default=20000, help='Maximum pairs to audit')
@click.pass_context
def jl_audit_command(ctx, matrix, d_prime, epsilon, pairs):
    """Measure how well a random projection preserves pairwise distances"""

    console.print("\n[bold cyan]Random Projection Distortion Audit[/bold cyan]\n")
    try:
        X, _ = load_raw(matrix)
        R = gaussian_projection(X.shape[1], d_prime, ctx.obj['seed'])
        audit = jl_audit(X, apply_projection(X, R), epsilon, pairs, ctx.obj['seed'],
                         expected_scale=R.distance_scale)

        table = Table(show_header=True, header_style="bold magenta")
        table.add_column("Metric", style="cyan")
        table.add_column("Value", style="yellow")
        table.add_row("Points x dimension", f"{X.shape[0]} x {X.shape[1]} -> {d_prime}")
        table.add_row("Audited pairs", str(audit.pair_count))
        table.add_row("Skipped (coincident) pairs", str(audit.skipped_pairs))
        table.add_row(f"Within 1 ± {epsilon:g}", f"{audit.fraction_within:.4%}")
        table.add_row("Max distortion", f"{audit.max_distortion:.4f}")
        table.add_row("Bound dimension for this N", str(jl_min_dimension(X.shape[0], epsilon)))

        console.print(table)
        console.print()
    except Exception as e:
        _fail(e)


@cli.command()
@click.pass_context
def status(ctx):
    """Show the state of a sweep output directory"""

    out_dir = ctx.obj['out_dir']
    console.print("\n[bold cyan]Sweep Status[/bold cyan]")
    console.print(f"Path: [yellow]{out_dir}[/yellow]")
    if not Path(out_dir).exists():
        console.print("[yellow]No sweep found[/yellow]\n")
        return

    try:
        store = RunStore(out_dir=out_dir)
        metadata = store.get_metadata()
        records = store.read_records() if store.results_path.exists() else []
    except Exception as e:
        _fail(e)

    status_color = {
        'completed': 'green',
        'completed_with_errors': 'yellow',
        'running': 'yellow',
        'interrupted': 'red',
        'error': 'red',
    }.get(metadata.get('status'), 'white')
    console.print(f"Status: [{status_color}]{metadata.get('status')}[/{status_color}]")
    if metadata.get('dataset_shape'):
        console.print(f"Dataset: [yellow]{metadata['dataset_shape'][0]} x {metadata['dataset_shape'][1]}[/yellow]")
    if metadata.get('prng'):
        console.print(f"PRNG: [yellow]{metadata['prng']}[/yellow]\n")

    if not records:
        console.print("[yellow]No runs recorded[/yellow]\n")
        return

    table = Table(show_header=True, header_style="bold magenta")
    table.add_column("Reducer", style="cyan")
    table.add_column("d'", justify="right")
    table.add_column("Status", style="yellow")
    table.add_column("Accuracy", justify="right", style="green")
    for record in records:
        if record.failed:
            table.add_row(record.reducer, str(record.d_prime), "[red]Failed[/red]", "")
        else:
            table.add_row(record.reducer, str(record.d_prime), "[green]Done[/green]",
                          f"{record.accuracy.score:.4f}")

    console.print(table)
    console.print()


def main(argv=None) -> int:
    """Entry point returning the exit code instead of exiting"""
    try:
        cli.main(args=argv, prog_name="cli.py")
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_OK
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
