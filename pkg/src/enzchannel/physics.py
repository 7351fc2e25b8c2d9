"""Physical constants, species definitions, and per-step simulation parameters.

All quantities are SI: meters, seconds, kelvin, molecule/m^3. Rate constants
follow enzyme-kinetics convention: a bimolecular binding rate in
molecule^-1 m^3 s^-1 and two unimolecular rates (unbinding, catalysis) in s^-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from .errors import InvalidParameterError

# CODATA 2018 exact value, J/K.
BOLTZMANN = 1.380649e-23


class Species(Enum):
    """Mobile species: free substrate A, free enzyme E, bound complex EA."""

    A = "A"
    E = "E"
    EA = "EA"


@dataclass(frozen=True)
class PhysicalEnvironment:
    """Aqueous medium description.

    temperature in kelvin, viscosity in kg m^-1 s^-1.
    """

    temperature: float
    viscosity: float

    def __post_init__(self):
        if not self.temperature > 0:
            raise InvalidParameterError(f"temperature must be > 0, got {self.temperature}")
        if not self.viscosity > 0:
            raise InvalidParameterError(f"viscosity must be > 0, got {self.viscosity}")


@dataclass(frozen=True)
class SpeciesSpec:
    """One molecular species: hydrodynamic radius plus optional measured
    diffusion coefficient that overrides the Einstein relation."""

    kind: Species
    radius: float
    diffusion_coefficient: float | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidParameterError(f"{self.kind.value} radius must be > 0, got {self.radius}")
        if self.diffusion_coefficient is not None and not self.diffusion_coefficient > 0:
            raise InvalidParameterError(
                f"{self.kind.value} diffusion coefficient must be > 0, "
                f"got {self.diffusion_coefficient}"
            )

    def resolve_diffusion(self, env: PhysicalEnvironment) -> float:
        """Supplied coefficient if present, else the Einstein relation."""
        if self.diffusion_coefficient is not None:
            return self.diffusion_coefficient
        return einstein_diffusion(self.radius, env)


@dataclass(frozen=True)
class ReactionRates:
    """Rates of the three-reaction enzymatic scheme.

    k1: E + A -> EA (molecule^-1 m^3 s^-1)
    k_minus1: EA -> E + A (s^-1)
    k2: EA -> E + degraded A (s^-1); may be math.inf in the
        instant-degradation limiting mode only.
    """

    k1: float
    k_minus1: float
    k2: float

    def __post_init__(self):
        if self.k1 < 0 or self.k_minus1 < 0 or self.k2 < 0:
            raise InvalidParameterError(
                f"reaction rates must be >= 0, got k1={self.k1}, "
                f"k_minus1={self.k_minus1}, k2={self.k2}"
            )
        if math.isinf(self.k_minus1) or math.isinf(self.k1):
            raise InvalidParameterError("only k2 may be infinite")


@dataclass(frozen=True)
class DerivedStepParameters:
    """Everything the stepper needs, computed once per configuration.

    sigma_per_species holds the per-dimension displacement std-dev
    sqrt(2 * D * dt) for each mobile species; rms_step_length is the root
    mean square relative step of an A-E pair; binding_radius is the
    center-to-center reaction distance for the bimolecular binding.
    """

    dt: float
    sigma_per_species: Mapping[Species, float]
    rms_step_length: float
    binding_radius: float
    unbind_probability: float
    degrade_probability: float

    def __post_init__(self):
        if self.unbind_probability < 0 or self.degrade_probability < 0:
            raise InvalidParameterError("reaction probabilities must be >= 0")
        if self.unbind_probability + self.degrade_probability > 1 + 1e-12:
            raise InvalidParameterError("unbind + degrade probability must be <= 1")
        if not self.binding_radius > 0:
            raise InvalidParameterError("binding radius must be > 0")
        if not self.rms_step_length > 0:
            raise InvalidParameterError("rms step length must be > 0")


@dataclass(frozen=True)
class StepRegimeReport:
    """Result of the long-time-step validity check.

    The no-unbinding-radius simplification requires the relative rms step
    to be much larger than the binding radius; ``ratio`` quantifies it.
    """

    ratio: float
    min_ratio: float
    passed: bool
    message: str = field(default="", compare=False)


def einstein_diffusion(radius: float, env: PhysicalEnvironment) -> float:
    """Diffusion coefficient of a sphere from the Einstein relation,
    k_B T / (6 pi eta R)."""
    if not radius > 0:
        raise InvalidParameterError(f"radius must be > 0, got {radius}")
    return BOLTZMANN * env.temperature / (6.0 * math.pi * env.viscosity * radius)


def rms_step(d_a: float, d_e: float, dt: float) -> float:
    """Root mean square relative step length of an A-E pair over one
    time step, sqrt(2 (D_A + D_E) dt)."""
    if d_a <= 0 or d_e <= 0:
        raise InvalidParameterError("diffusion coefficients must be > 0")
    if dt < 0:
        raise InvalidParameterError(f"dt must be >= 0, got {dt}")
    return math.sqrt(2.0 * (d_a + d_e) * dt)


def binding_radius(k1: float, dt: float) -> float:
    """Binding radius in the long-time-step limit, (3 k1 dt / 4 pi)^(1/3).

    Two molecules closer than this at the end of a step are deemed to have
    collided and bound during the step.
    """
    if not k1 > 0:
        raise InvalidParameterError(f"k1 must be > 0 for a binding radius, got {k1}")
    if not dt > 0:
        raise InvalidParameterError(f"dt must be > 0, got {dt}")
    return (3.0 * k1 * dt / (4.0 * math.pi)) ** (1.0 / 3.0)


def unimolecular_probabilities(k_minus1: float, k2: float, dt: float) -> tuple[float, float]:
    """Per-step probabilities that a bound complex unbinds or degrades.

    The complex has two competing exponential exits with rates k_minus1
    (unbind) and k2 (degrade); each probability is the chance that exit
    happens within dt and is of the given kind:

        p = k_i / (k_minus1 + k2) * (1 - exp(-dt (k_minus1 + k2)))

    k2 = inf is the instant-degradation limit and returns (0, 1) exactly.
    """
    if k_minus1 < 0 or k2 < 0:
        raise InvalidParameterError("rates must be >= 0")
    if not dt > 0:
        raise InvalidParameterError(f"dt must be > 0, got {dt}")
    if math.isinf(k2):
        return 0.0, 1.0
    total = k_minus1 + k2
    if total == 0.0:
        return 0.0, 0.0
    exit_prob = -math.expm1(-dt * total)
    return k_minus1 / total * exit_prob, k2 / total * exit_prob


def derive_step_parameters(
    diffusion: Mapping[Species, float],
    rates: ReactionRates,
    dt: float,
    instant_degradation: bool = False,
) -> DerivedStepParameters:
    """Bundle all per-step quantities for a given physical setup.

    ``diffusion`` maps each species to its coefficient. In the
    instant-degradation mode the unimolecular probabilities are pinned to
    (0, 1) regardless of the finite-rate formula.
    """
    if not dt > 0:
        raise InvalidParameterError(f"dt must be > 0, got {dt}")
    sigma = {kind: math.sqrt(2.0 * diffusion[kind] * dt) for kind in Species}
    if instant_degradation:
        p_unbind, p_degrade = 0.0, 1.0
    else:
        p_unbind, p_degrade = unimolecular_probabilities(rates.k_minus1, rates.k2, dt)
    return DerivedStepParameters(
        dt=dt,
        sigma_per_species=sigma,
        rms_step_length=rms_step(diffusion[Species.A], diffusion[Species.E], dt),
        binding_radius=binding_radius(rates.k1, dt),
        unbind_probability=p_unbind,
        degrade_probability=p_degrade,
    )


DEFAULT_MIN_STEP_RATIO = 5.0


def validate_long_step_regime(
    params: DerivedStepParameters, min_ratio: float = DEFAULT_MIN_STEP_RATIO
) -> StepRegimeReport:
    """Check that the relative rms step dwarfs the binding radius.

    The binding-radius formula (and skipping an unbinding radius) is only
    valid when newly separated reactants rarely re-collide next step. This
    is a report, not a hard error; callers decide whether to warn or stop.
    """
    ratio = params.rms_step_length / params.binding_radius
    passed = ratio >= min_ratio
    if passed:
        message = f"rms step / binding radius = {ratio:.2f} >= {min_ratio:g}"
    else:
        message = (
            f"rms step / binding radius = {ratio:.2f} < {min_ratio:g}: "
            "time step too short for the no-unbinding-radius approximation"
        )
    return StepRegimeReport(ratio=ratio, min_ratio=min_ratio, passed=passed, message=message)
