"""Command-line interface.

Subcommands:
    derive   print the per-step parameters a configuration implies
    curve    evaluate analytical receiver curves only (no simulation)
    run      run the full seeded experiment and write result tables
    compare  report simulation-versus-analytics stats from stored results

Configurations come from ``--config FILE`` or a built-in ``--preset``
(fig3: full kinetics; fig4: instant-degradation limiting case).
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from .analytic import ModelTag
from .config import (
    DEFAULT_PROBE_TIMES,
    PRESETS,
    load_config,
    load_preset,
)
from .errors import EnzChannelError
from .harness import (
    ExperimentSpec,
    resolve_workers,
    run_experiment,
    summarize,
)
from .physics import Species, validate_long_step_regime
from .results import (
    analytic_curves_for,
    build_bundle,
    read_series,
    write_series,
)


def _load_spec(config: str | None, preset: str | None) -> ExperimentSpec:
    if (config is None) == (preset is None):
        raise click.UsageError("exactly one of --config or --preset is required")
    if preset is not None:
        return load_preset(preset)
    return load_config(config)


def _apply_overrides(spec: ExperimentSpec, trials: int | None, seed: int | None) -> ExperimentSpec:
    from dataclasses import replace

    if seed is not None:
        spec = replace(
            spec, base_seed=seed, base_config=replace(spec.base_config, seed=seed)
        )
    if trials is not None:
        spec = replace(spec, trial_count=trials)
    return spec


_config_option = click.option(
    "--config", type=click.Path(exists=True, dir_okay=False), default=None,
    help="YAML configuration file.",
)
_preset_option = click.option(
    "--preset", type=click.Choice(sorted(PRESETS)), default=None,
    help="Built-in configuration preset.",
)


@click.group()
@click.version_option(package_name="enzchannel")
def cli():
    """Enzymatic degradation channel: simulator and analytical models."""


@cli.command()
@_config_option
@_preset_option
def derive(config, preset):
    """Print derived per-step simulation parameters."""
    spec = _load_spec(config, preset)
    cfg = spec.base_config
    d = cfg.derived
    coeffs = cfg.diffusion_coefficients()
    click.echo(f"time step: {d.dt:.6e} s")
    click.echo(
        "diffusion coefficients (m^2/s): "
        + "  ".join(f"{k.value}={coeffs[k]:.6e}" for k in Species)
    )
    click.echo(
        "per-step sigma (m): "
        + "  ".join(f"{k.value}={d.sigma_per_species[k]:.6e}" for k in Species)
    )
    click.echo(
        f"rms relative step: {d.rms_step_length:.6e} m ({d.rms_step_length * 1e9:.2f} nm)"
    )
    click.echo(f"binding radius: {d.binding_radius:.6e} m ({d.binding_radius * 1e9:.2f} nm)")
    click.echo(f"unbind probability per step: {d.unbind_probability:.6g}")
    click.echo(f"degrade probability per step: {d.degrade_probability:.6g}")
    report = validate_long_step_regime(d)
    status = "ok" if report.passed else "WARNING"
    click.echo(f"long-step regime: {report.message} [{status}]")


def _echo_metrics(label: str, metrics):
    click.echo(
        f"  {label}: peak {metrics.peak_value:.3f} molecules at "
        f"{metrics.peak_time * 1e6:.2f} us"
        + "".join(
            f", {v:.3f} @ {t * 1e6:g} us" for t, v in metrics.value_at.items()
        )
    )


@cli.command()
@_config_option
@_preset_option
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for the curve table (omit to print only).")
def curve(config, preset, out):
    """Evaluate the analytical receiver curves (no random numbers)."""
    spec = _load_spec(config, preset)
    cfg = spec.base_config
    times = cfg.dt * np.arange(1, cfg.n_steps + 1)
    curves = analytic_curves_for(spec, times)
    for i, rx in enumerate(cfg.receivers):
        click.echo(
            f"receiver {i}: radius {rx.receiver_radius * 1e9:.0f} nm at "
            f"{rx.distance * 1e9:.0f} nm"
        )
        for tag in (ModelTag.DIFFUSION_ONLY, ModelTag.ENZYME_LOWER_BOUND):
            _echo_metrics(tag.value, summarize(curves[(i, tag)], DEFAULT_PROBE_TIMES))
    if out is not None:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        name = preset or Path(config).stem
        target = out_dir / f"{name}_curves.csv"
        header = ["time_s"]
        columns = [times]
        for i in range(len(cfg.receivers)):
            header += [f"rx{i}_analytic_diffusion", f"rx{i}_analytic_enzyme"]
            columns += [
                curves[(i, ModelTag.DIFFUSION_ONLY)].expected_counts,
                curves[(i, ModelTag.ENZYME_LOWER_BOUND)].expected_counts,
            ]
        table = np.column_stack(columns)
        lines = [",".join(header)] + [",".join(f"{v:.9e}" for v in row) for row in table]
        target.write_text("\n".join(lines) + "\n")
        click.echo(f"wrote {target}")


@cli.command()
@_config_option
@_preset_option
@click.option("--trials", type=int, default=None, help="Override the trial count.")
@click.option("--seed", type=int, default=None, help="Override the base seed.")
@click.option("--workers", type=int, default=None,
              help="Parallel worker processes (default: ENZCHANNEL_WORKERS or CPU count).")
@click.option("--out", type=click.Path(file_okay=False), default=".",
              help="Output directory.")
def run(config, preset, trials, seed, workers, out):
    """Run the full experiment and write the result table plus sidecar."""
    spec = _apply_overrides(_load_spec(config, preset), trials, seed)
    cfg = spec.base_config
    click.echo(
        f"running {spec.trial_count} trials ({spec.mode.value}, seed {spec.base_seed}, "
        f"{resolve_workers(workers)} workers, {cfg.enzyme_count} enzymes)"
    )
    averaged = run_experiment(spec, workers=workers)
    bundle = build_bundle(spec, averaged)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = preset or Path(config).stem
    target = out_dir / f"{name}_series.csv"
    write_series(bundle, target)
    click.echo(f"wrote {target}")
    for i, entry in enumerate(bundle.metrics["receivers"]):
        rx = cfg.receivers[i]
        click.echo(
            f"receiver {i} (radius {rx.receiver_radius * 1e9:.0f} nm at "
            f"{rx.distance * 1e9:.0f} nm):"
        )
        for key in ("simulation", "diffusion_only", "enzyme_lower_bound"):
            m = entry[key]
            click.echo(
                f"  {key}: peak {m['peak_value']:.3f} molecules at "
                f"{m['peak_time_s'] * 1e6:.2f} us"
            )


@cli.command()
@click.option("--results", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Data table written by `run`.")
@click.option("--t-min", type=float, default=5e-6, show_default=True,
              help="Ignore grid points before this time (seconds).")
def compare(results, t_min):
    """Compare stored simulation means against their analytic overlays."""
    header, data, meta = read_series(results)
    times = data[:, 0]
    n_rx = (len(header) - 1) // 4
    sel = times >= t_min
    if not np.any(sel):
        raise click.ClickException(f"no grid points at or after t = {t_min:g} s")
    trial_count = meta["provenance"]["trial_count"]
    click.echo(f"{meta['data_file']}: {trial_count} trials, t >= {t_min:g} s")
    for i in range(n_rx):
        base = 1 + 4 * i
        mean, stderr = data[:, base], data[:, base + 1]
        for j, model in ((2, "analytic_diffusion"), (3, "analytic_enzyme")):
            curve_vals = data[:, base + j]
            with np.errstate(divide="ignore", invalid="ignore"):
                z = (mean - curve_vals) / stderr
            z = z[sel]
            z = z[np.isfinite(z)]
            max_z = float(np.max(np.abs(z))) if z.size else 0.0
            below = (mean + 3 * stderr)[sel] < curve_vals[sel]
            frac = float(np.count_nonzero(below)) / int(np.count_nonzero(sel))
            click.echo(
                f"receiver {i} vs {model}: max |z| = {max_z:.2f}, "
                f"bound-violation fraction = {frac:.4f}"
            )


def main():
    """Console entry point: nonzero exit with a message on any error."""
    try:
        cli(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code or 1)
    except click.Abort:
        sys.exit(130)
    except EnzChannelError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
