"""Result bundles and plot-ready tabular output.

A run produces one data table (CSV, one row per observation time, SI
units in the header) plus a JSON sidecar carrying the resolved
configuration echo, derived step parameters, summary metrics, and
provenance. The sidecar alone suffices to regenerate the table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .analytic import AnalyticalCurve, EnzymeFieldParams, ModelTag, sample_curve
from .config import DEFAULT_PROBE_TIMES, document_from_spec
from .errors import ConfigurationError
from .harness import AveragedSeries, ExperimentSpec, SummaryMetrics, summarize
from .physics import DerivedStepParameters, Species

_SIDECAR_SUFFIX = ".meta.json"


@dataclass(frozen=True)
class ResultBundle:
    """Everything produced by one experiment run."""

    config_document: dict[str, Any]
    derived: DerivedStepParameters
    series: AveragedSeries
    curves: dict[tuple[int, ModelTag], AnalyticalCurve]
    metrics: dict[str, Any]
    provenance: dict[str, Any]


def analytic_curves_for(
    spec: ExperimentSpec, times: np.ndarray
) -> dict[tuple[int, ModelTag], AnalyticalCurve]:
    """Diffusion-only and enzyme-lower-bound expected-count curves for every
    receiver of the experiment, on the given grid."""
    config = spec.base_config
    d_a = config.species[Species.A].resolve_diffusion(config.env)
    box = config.enzyme_box
    volume = np.prod(box.extents)
    enzyme = EnzymeFieldParams(total_enzyme_concentration=config.enzyme_count / volume)
    curves: dict[tuple[int, ModelTag], AnalyticalCurve] = {}
    for i, rx in enumerate(config.receivers):
        curves[(i, ModelTag.DIFFUSION_ONLY)] = sample_curve(
            ModelTag.DIFFUSION_ONLY,
            rx,
            times,
            molecule_count=config.emitter.molecule_count,
            d_a=d_a,
        )
        curves[(i, ModelTag.ENZYME_LOWER_BOUND)] = sample_curve(
            ModelTag.ENZYME_LOWER_BOUND,
            rx,
            times,
            molecule_count=config.emitter.molecule_count,
            d_a=d_a,
            k1=config.rates.k1,
            enzyme=enzyme,
        )
    return curves


def _metrics_dict(m: SummaryMetrics) -> dict[str, Any]:
    return {
        "peak_time_s": m.peak_time,
        "peak_value": m.peak_value,
        "value_at": {f"{t:.9e}": v for t, v in m.value_at.items()},
    }


def build_bundle(
    spec: ExperimentSpec,
    series: AveragedSeries,
    probe_times=DEFAULT_PROBE_TIMES,
) -> ResultBundle:
    """Assemble the result bundle: analytic overlays, summary metrics, and
    provenance for one finished experiment."""
    curves = analytic_curves_for(spec, series.times)
    metrics: dict[str, Any] = {"receivers": []}
    for i in range(len(spec.base_config.receivers)):
        entry = {
            "simulation": _metrics_dict(summarize(series, probe_times, receiver=i)),
        }
        for tag in (ModelTag.DIFFUSION_ONLY, ModelTag.ENZYME_LOWER_BOUND):
            entry[tag.value] = _metrics_dict(summarize(curves[(i, tag)], probe_times))
        metrics["receivers"].append(entry)
    provenance = {
        "package": "enzchannel",
        "version": __version__,
        "base_seed": spec.base_seed,
        "trial_count": series.trial_count,
        "mode": spec.mode.value,
    }
    return ResultBundle(
        config_document=document_from_spec(spec),
        derived=spec.base_config.derived,
        series=series,
        curves=curves,
        metrics=metrics,
        provenance=provenance,
    )


def _derived_dict(derived: DerivedStepParameters) -> dict[str, Any]:
    return {
        "dt_s": derived.dt,
        "sigma_m": {k.value: v for k, v in derived.sigma_per_species.items()},
        "rms_step_length_m": derived.rms_step_length,
        "binding_radius_m": derived.binding_radius,
        "unbind_probability": derived.unbind_probability,
        "degrade_probability": derived.degrade_probability,
    }


def series_header(n_receivers: int) -> list[str]:
    columns = ["time_s"]
    for i in range(n_receivers):
        columns += [
            f"rx{i}_sim_mean",
            f"rx{i}_sim_stderr",
            f"rx{i}_analytic_diffusion",
            f"rx{i}_analytic_enzyme",
        ]
    return columns


def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + _SIDECAR_SUFFIX)


def write_series(bundle: ResultBundle, path: str | Path) -> None:
    """Write the data table and its provenance sidecar.

    One row per time point: time_s, then per receiver the simulated mean,
    its standard error, and the two analytic expected counts; decimal text
    with 10 significant digits.
    """
    path = Path(path)
    series = bundle.series
    n_rx = series.mean_counts.shape[0]
    columns = [series.times]
    for i in range(n_rx):
        columns += [
            series.mean_counts[i],
            series.std_error[i],
            bundle.curves[(i, ModelTag.DIFFUSION_ONLY)].expected_counts,
            bundle.curves[(i, ModelTag.ENZYME_LOWER_BOUND)].expected_counts,
        ]
    table = np.column_stack(columns)
    lines = [",".join(series_header(n_rx))]
    for row in table:
        lines.append(",".join(f"{v:.9e}" for v in row))
    try:
        path.write_text("\n".join(lines) + "\n")
        sidecar = {
            "data_file": path.name,
            "columns": series_header(n_rx),
            "config_document": bundle.config_document,
            "derived_parameters": _derived_dict(bundle.derived),
            "metrics": bundle.metrics,
            "provenance": bundle.provenance,
        }
        sidecar_path(path).write_text(json.dumps(sidecar, indent=2))
    except OSError as exc:
        raise ConfigurationError(f"cannot write results to {path}: {exc}") from exc


def read_series(path: str | Path) -> tuple[list[str], np.ndarray, dict[str, Any]]:
    """Read back a data table and its sidecar: (column names, data, meta)."""
    path = Path(path)
    try:
        lines = path.read_text().strip().splitlines()
        meta = json.loads(sidecar_path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read results at {path}: {exc}") from exc
    header = lines[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return header, data, meta
