"""Many-trial experiment runner: seeding, averaging, summary metrics, and
simulation-versus-analytics comparison.

Trials are independent and identically configured; each gets its own
deterministic seed derived from (base_seed, trial_index), so any single
trial can be reproduced in isolation and results do not depend on worker
count or execution order (accumulation is exact integer arithmetic).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .analytic import AnalyticalCurve, ModelTag
from .engine import SimulationConfig, run_simulation
from .errors import GridMismatchError, InvalidParameterError

WORKERS_ENV_VAR = "ENZCHANNEL_WORKERS"

_MASK64 = (1 << 64) - 1


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Deterministic 64-bit mix of (base_seed, trial_index).

    splitmix64 finalizer applied to base_seed + (index+1) * golden-ratio
    increment; avalanches both inputs so neighboring trials get unrelated
    streams.
    """
    if trial_index < 0:
        raise InvalidParameterError(f"trial_index must be >= 0, got {trial_index}")
    z = (base_seed + (trial_index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class ExperimentMode(Enum):
    FULL_KINETICS = "full_kinetics"
    LIMITING_CASE = "limiting_case"


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a base configuration repeated over seeded trials."""

    base_config: SimulationConfig
    trial_count: int
    base_seed: int
    mode: ExperimentMode
    analytical_refs: tuple[ModelTag, ...] = (
        ModelTag.DIFFUSION_ONLY,
        ModelTag.ENZYME_LOWER_BOUND,
    )

    def __post_init__(self):
        if self.trial_count < 1:
            raise InvalidParameterError(f"trial_count must be >= 1, got {self.trial_count}")
        limiting = self.mode is ExperimentMode.LIMITING_CASE
        if self.base_config.instant_degradation != limiting:
            raise InvalidParameterError(
                "experiment mode and config instant_degradation flag disagree"
            )


@dataclass(frozen=True)
class ObservationSeries:
    """Per-receiver observation counts for one trial."""

    times: np.ndarray
    counts: np.ndarray  # (n_receivers, n_times) integer
    trial_index: int


@dataclass(frozen=True)
class AveragedSeries:
    """Mean and standard error of observation counts across trials.

    count_sum / count_sq_sum are exact integer accumulators; mean and
    stderr derive from them, which makes pooling across disjoint trial
    sets exact.
    """

    times: np.ndarray
    mean_counts: np.ndarray  # (n_receivers, n_times)
    std_error: np.ndarray  # (n_receivers, n_times)
    trial_count: int
    count_sum: np.ndarray
    count_sq_sum: np.ndarray

    @staticmethod
    def from_sums(
        times: np.ndarray, count_sum: np.ndarray, count_sq_sum: np.ndarray, n: int
    ) -> "AveragedSeries":
        mean = count_sum / n
        if n > 1:
            # Sample variance with the n-1 denominator, from exact sums.
            var = (count_sq_sum - count_sum.astype(float) ** 2 / n) / (n - 1)
            stderr = np.sqrt(np.maximum(var, 0.0) / n)
        else:
            stderr = np.zeros_like(mean)
        return AveragedSeries(
            times=times,
            mean_counts=mean,
            std_error=stderr,
            trial_count=n,
            count_sum=count_sum,
            count_sq_sum=count_sq_sum,
        )


@dataclass(frozen=True)
class SummaryMetrics:
    """Peak location/value and values at probe times for one series."""

    peak_time: float
    peak_value: float
    value_at: dict[float, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ComparisonReport:
    """Pointwise simulation-minus-analytics comparison on a shared grid."""

    times: np.ndarray
    difference: np.ndarray
    z_scores: np.ndarray
    mean_counts: np.ndarray
    std_error: np.ndarray
    curve_counts: np.ndarray

    def max_abs_z(self, t_min: float = 0.0) -> float:
        sel = self.times >= t_min
        return float(np.max(np.abs(self.z_scores[sel]))) if np.any(sel) else 0.0

    def bound_violation_fraction(self, t_min: float = 0.0) -> float:
        """Fraction of grid points where the simulated mean plus three
        standard errors still falls below the analytic value."""
        sel = self.times >= t_min
        if not np.any(sel):
            return 0.0
        below = (self.mean_counts + 3.0 * self.std_error)[sel] < self.curve_counts[sel]
        return float(np.count_nonzero(below) / np.count_nonzero(sel))


def run_trial(config: SimulationConfig, trial_index: int) -> ObservationSeries:
    """Run one seeded trial of the configured simulation."""
    times, counts, _state = run_simulation(config, seed=trial_seed(config.seed, trial_index))
    return ObservationSeries(times=times, counts=counts, trial_index=trial_index)


def _run_chunk(config: SimulationConfig, indices: Sequence[int], keep: bool):
    n_rx = len(config.receivers)
    n_t = config.n_steps
    total = np.zeros((n_rx, n_t), dtype=np.int64)
    total_sq = np.zeros((n_rx, n_t), dtype=np.int64)
    series = []
    for idx in indices:
        obs = run_trial(config, idx)
        total += obs.counts
        total_sq += obs.counts * obs.counts
        if keep:
            series.append(obs)
    return total, total_sq, series


def resolve_workers(workers: int | None) -> int:
    """Explicit argument, else the env override, else the CPU count."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV_VAR)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, workers)


def run_experiment(
    spec: ExperimentSpec,
    workers: int | None = None,
    trial_indices: Iterable[int] | None = None,
    keep_series: bool = False,
) -> AveragedSeries | tuple[AveragedSeries, list[ObservationSeries]]:
    """Run all trials and average the observation series.

    Accumulation uses exact integer sums, so the result is identical for
    any worker count and any execution order. ``trial_indices`` overrides
    the default range(trial_count) (useful for split/pool checks).
    """
    config = spec.base_config
    indices = list(range(spec.trial_count)) if trial_indices is None else list(trial_indices)
    workers = resolve_workers(workers)
    n_rx = len(config.receivers)
    n_t = config.n_steps
    total = np.zeros((n_rx, n_t), dtype=np.int64)
    total_sq = np.zeros((n_rx, n_t), dtype=np.int64)
    series: list[ObservationSeries] = []

    if workers == 1 or len(indices) <= 1:
        total, total_sq, series = _run_chunk(config, indices, keep_series)
    else:
        n_chunks = min(len(indices), workers * 4)
        chunks = [indices[i::n_chunks] for i in range(n_chunks)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, config, chunk, keep_series) for chunk in chunks]
            for fut in futures:
                part, part_sq, part_series = fut.result()
                total += part
                total_sq += part_sq
                series.extend(part_series)

    times = config.dt * np.arange(1, n_t + 1)
    averaged = AveragedSeries.from_sums(times, total, total_sq, len(indices))
    if keep_series:
        series.sort(key=lambda s: s.trial_index)
        return averaged, series
    return averaged


def _summarize_arrays(times: np.ndarray, values: np.ndarray, probe_times) -> SummaryMetrics:
    if times.size == 0:
        raise InvalidParameterError("cannot summarize an empty series")
    idx = int(np.argmax(values))
    value_at = {}
    for probe in probe_times:
        k = int(np.argmin(np.abs(times - probe)))
        value_at[float(probe)] = float(values[k])
    return SummaryMetrics(
        peak_time=float(times[idx]), peak_value=float(values[idx]), value_at=value_at
    )


def summarize(
    series: AveragedSeries | AnalyticalCurve,
    probe_times: Sequence[float] = (),
    receiver: int | None = None,
):
    """Peak (grid argmax, earliest tie wins) and nearest-grid-point values
    at the probe times.

    For an AveragedSeries, returns one SummaryMetrics per receiver unless
    ``receiver`` selects a single one.
    """
    if isinstance(series, AnalyticalCurve):
        return _summarize_arrays(series.times, series.expected_counts, probe_times)
    if receiver is not None:
        return _summarize_arrays(series.times, series.mean_counts[receiver], probe_times)
    return tuple(
        _summarize_arrays(series.times, series.mean_counts[i], probe_times)
        for i in range(series.mean_counts.shape[0])
    )


def compare(
    averaged: AveragedSeries, curve: AnalyticalCurve, receiver: int = 0
) -> ComparisonReport:
    """Pointwise difference and z-scores of a simulated mean against an
    analytic curve on the identical time grid.

    Points with zero standard error get z = 0 when the difference is
    negligible and +-inf otherwise.
    """
    if averaged.times.shape != curve.times.shape or not np.allclose(
        averaged.times, curve.times, rtol=1e-12, atol=0.0
    ):
        raise GridMismatchError("averaged series and curve are on different time grids")
    mean = averaged.mean_counts[receiver]
    stderr = averaged.std_error[receiver]
    diff = mean - curve.expected_counts
    with np.errstate(divide="ignore", invalid="ignore"):
        z = diff / stderr
    degenerate = stderr == 0.0
    z[degenerate & (np.abs(diff) <= 1e-9)] = 0.0
    z[degenerate & (diff > 1e-9)] = math.inf
    z[degenerate & (diff < -1e-9)] = -math.inf
    return ComparisonReport(
        times=averaged.times,
        difference=diff,
        z_scores=z,
        mean_counts=mean,
        std_error=stderr,
        curve_counts=curve.expected_counts,
    )
