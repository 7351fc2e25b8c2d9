"""Closed-form expected-concentration models at a passive spherical receiver.

Three models of the free-substrate point concentration after an impulse
release from the origin:

* diffusion only: the free-space Gaussian impulse response,
* enzyme lower bound: the Gaussian damped by exp(-k1 C_E,tot t), the
  concentration in the limit where every enzyme is always unbound,
* intermediate: the solution when free-enzyme and complex concentrations
  are held at supplied constants.

Expected molecule counts assume the concentration is uniform over the
receiver volume and equal to its value at the receiver center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidParameterError


class ModelTag(Enum):
    DIFFUSION_ONLY = "diffusion_only"
    ENZYME_LOWER_BOUND = "enzyme_lower_bound"
    INTERMEDIATE = "intermediate"


@dataclass(frozen=True)
class ChannelGeometry:
    """Emitter at the origin observing a spherical passive receiver."""

    receiver_center: tuple[float, float, float]
    receiver_radius: float
    emitter_position: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.receiver_radius > 0:
            raise InvalidParameterError(f"receiver radius must be > 0, got {self.receiver_radius}")
        if self.distance <= self.receiver_radius:
            raise InvalidParameterError(
                "receiver sphere must not contain the emitter "
                f"(distance {self.distance:.3g} <= radius {self.receiver_radius:.3g})"
            )

    @property
    def distance(self) -> float:
        """Emitter-to-receiver-center distance."""
        return math.dist(self.emitter_position, self.receiver_center)

    @property
    def receiver_volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.receiver_radius**3


@dataclass(frozen=True)
class EnzymeFieldParams:
    """Enzyme concentrations entering the closed-form models.

    total_enzyme_concentration is enzyme count over confinement volume;
    the optional constants feed the intermediate model.
    """

    total_enzyme_concentration: float
    constant_free_enzyme: float | None = None
    constant_complex: float | None = None

    def __post_init__(self):
        if self.total_enzyme_concentration < 0:
            raise InvalidParameterError("total enzyme concentration must be >= 0")
        for name in ("constant_free_enzyme", "constant_complex"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise InvalidParameterError(f"{name} must be >= 0")
        if (
            self.constant_free_enzyme is not None
            and self.constant_free_enzyme > self.total_enzyme_concentration
        ):
            raise InvalidParameterError(
                "constant free-enzyme concentration cannot exceed the total"
            )


@dataclass(frozen=True)
class AnalyticalCurve:
    """Expected receiver molecule count sampled on a strictly increasing
    time grid (t = 0 excluded, the impulse response is singular there)."""

    times: np.ndarray
    expected_counts: np.ndarray
    model_tag: ModelTag

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        counts = np.asarray(self.expected_counts, dtype=float)
        if times.shape != counts.shape or times.ndim != 1:
            raise InvalidParameterError("times and expected_counts must be equal-length 1-D")
        if times.size and not np.all(np.diff(times) > 0):
            raise InvalidParameterError("times must be strictly increasing")
        if np.any(counts < 0):
            raise InvalidParameterError("expected counts must be >= 0")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "expected_counts", counts)


def _check_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise InvalidParameterError("time must be > 0 (impulse is singular at t = 0)")
    return t


def diffusion_only_concentration(molecule_count: float, d_a: float, distance: float, t):
    """Point concentration of an impulse of molecules diffusing from the
    origin: N / (4 pi D t)^(3/2) * exp(-r^2 / (4 D t)).

    Vectorized over ``t``; scalar in, scalar out.
    """
    if distance < 0:
        raise InvalidParameterError(f"distance must be >= 0, got {distance}")
    if not d_a > 0:
        raise InvalidParameterError(f"diffusion coefficient must be > 0, got {d_a}")
    t = _check_times(t)
    four_dt = 4.0 * d_a * t
    conc = molecule_count / (np.pi * four_dt) ** 1.5 * np.exp(-(distance**2) / four_dt)
    return conc if conc.ndim else float(conc)


def enzyme_lower_bound_concentration(
    molecule_count: float,
    d_a: float,
    k1: float,
    total_enzyme_concentration: float,
    distance: float,
    t,
):
    """Lower bound on the point concentration with enzymes present.

    The diffusion-only response damped by exp(-k1 C_E,tot t): degradation
    can be no faster than if every enzyme were always unbound, so the true
    concentration is never below this.
    """
    if k1 < 0 or total_enzyme_concentration < 0:
        raise InvalidParameterError("k1 and enzyme concentration must be >= 0")
    t = _check_times(t)
    base = diffusion_only_concentration(molecule_count, d_a, distance, t)
    conc = base * np.exp(-k1 * total_enzyme_concentration * t)
    return conc if np.ndim(conc) else float(conc)


def intermediate_concentration(
    molecule_count: float,
    d_a: float,
    k1: float,
    constant_free_enzyme: float,
    k_minus1: float,
    constant_complex: float,
    distance: float,
    t,
):
    """Point concentration when the free-enzyme and complex concentrations
    are frozen at constants: the damped Gaussian plus the linear
    replenishment term k_minus1 * C_EA * t."""
    if min(k1, k_minus1, constant_free_enzyme, constant_complex) < 0:
        raise InvalidParameterError("rates and concentrations must be >= 0")
    t = _check_times(t)
    base = diffusion_only_concentration(molecule_count, d_a, distance, t)
    conc = base * np.exp(-k1 * constant_free_enzyme * t) + k_minus1 * constant_complex * t
    return conc if np.ndim(conc) else float(conc)


def expected_count(concentration, geometry: ChannelGeometry):
    """Expected molecules inside the receiver given the center-point
    concentration, assuming it is uniform over the receiver volume."""
    concentration = np.asarray(concentration, dtype=float)
    if np.any(concentration < 0):
        raise InvalidParameterError("concentration must be >= 0")
    counts = concentration * geometry.receiver_volume
    return counts if counts.ndim else float(counts)


def sample_curve(
    model: ModelTag,
    geometry: ChannelGeometry,
    times,
    *,
    molecule_count: float,
    d_a: float,
    k1: float = 0.0,
    enzyme: EnzymeFieldParams | None = None,
    k_minus1: float = 0.0,
) -> AnalyticalCurve:
    """Evaluate one model pointwise on an explicit time grid and convert to
    expected receiver counts.

    The enzyme models require ``enzyme``; the intermediate model reads its
    constant concentrations from it (absent constants default to 0).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise InvalidParameterError("times must be a non-empty 1-D grid")
    if not np.all(np.diff(times) > 0):
        raise InvalidParameterError("times must be strictly increasing")
    r = geometry.distance
    if model is ModelTag.DIFFUSION_ONLY:
        conc = diffusion_only_concentration(molecule_count, d_a, r, times)
    elif model is ModelTag.ENZYME_LOWER_BOUND:
        if enzyme is None:
            raise InvalidParameterError("enzyme lower bound requires enzyme field parameters")
        conc = enzyme_lower_bound_concentration(
            molecule_count, d_a, k1, enzyme.total_enzyme_concentration, r, times
        )
    elif model is ModelTag.INTERMEDIATE:
        if enzyme is None:
            raise InvalidParameterError("intermediate model requires enzyme field parameters")
        conc = intermediate_concentration(
            molecule_count,
            d_a,
            k1,
            enzyme.constant_free_enzyme or 0.0,
            k_minus1,
            enzyme.constant_complex or 0.0,
            r,
            times,
        )
    else:
        raise InvalidParameterError(f"unknown model {model!r}")
    return AnalyticalCurve(
        times=times, expected_counts=expected_count(conc, geometry), model_tag=model
    )


def peak_of_curve(curve: AnalyticalCurve) -> tuple[float, float]:
    """Grid argmax of a curve, earliest time winning ties."""
    if curve.times.size == 0:
        raise InvalidParameterError("cannot take the peak of an empty curve")
    idx = int(np.argmax(curve.expected_counts))
    return float(curve.times[idx]), float(curve.expected_counts[idx])


def diffusion_peak_time(distance: float, d_a: float) -> float:
    """Continuous-time argmax of the diffusion-only response, r^2 / (6 D).

    Cross-check for the grid-based peak; the enzyme models are located by
    grid argmax only.
    """
    if not distance > 0 or not d_a > 0:
        raise InvalidParameterError("distance and diffusion coefficient must be > 0")
    return distance**2 / (6.0 * d_a)
