"""Configuration documents: parsing, validation, presets, and echo.

A configuration is a nested key-value document (YAML on disk) with all
quantities in SI units, mirroring SimulationConfig plus the experiment
fields. ``fig3`` and ``fig4`` presets reproduce the two published
experiment setups: full kinetics with a packed-sphere emission, and the
instant-degradation limiting case with point emission.
"""

from __future__ import annotations

import copy
import math
import re
import warnings
from pathlib import Path
from typing import Any, Mapping

import yaml

from .analytic import ChannelGeometry, ModelTag
from .engine import Box, EmissionMode, EmitterSpec, SimulationConfig
from .errors import ConfigurationError
from .harness import ExperimentMode, ExperimentSpec
from .physics import (
    PhysicalEnvironment,
    ReactionRates,
    Species,
    SpeciesSpec,
    validate_long_step_regime,
)


class StepRegimeWarning(UserWarning):
    """The configured time step is too short for the no-unbinding-radius
    approximation to be trustworthy."""


class _ConfigLoader(yaml.SafeLoader):
    """SafeLoader that also reads sign-less exponent literals (1.0e4) as
    floats; stock PyYAML follows YAML 1.1 and reads them as strings."""


_ConfigLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
            |[-+]?(?:[0-9][0-9_]*)[eE][-+]?[0-9]+
            |[-+]?\.[0-9_]+(?:[eE][-+]?[0-9]+)?
            |[-+]?\.(?:inf|Inf|INF)
            |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


DEFAULT_PROBE_TIMES = (8.5e-6, 2.5e-5, 3.5e-5, 6.0e-5)

_FIG3_DOCUMENT: dict[str, Any] = {
    "mode": "full_kinetics",
    "trials": 1000,
    "seed": 12345,
    "environment": {"temperature_K": 298.15, "viscosity_Pa_s": 1.0e-3},
    "species": {
        "A": {"radius_m": 5.0e-10},
        "E": {"radius_m": 2.5e-9},
        "EA": {"radius_m": 3.0e-9},
    },
    "rates": {
        "k1_m3_per_molecule_s": 1.0e-19,
        "k_minus1_per_s": 1.0e4,
        "k2_per_s": 1.0e6,
    },
    "timestep_s": 5.0e-7,
    "duration_s": 1.0e-4,
    "enzymes": {
        "count": 200_000,
        "box_min_m": [-5.0e-7, -5.0e-7, -5.0e-7],
        "box_max_m": [5.0e-7, 5.0e-7, 5.0e-7],
    },
    "emitter": {
        "molecule_count": 10_000,
        "mode": "packed_sphere",
        "bit_interval_s": 1.0e-4,
        "schedule": [{"time_s": 0.0, "bit": 1}],
    },
    "receivers": [
        {"center_m": [1.5e-7, 0.0, 0.0], "radius_m": 2.5e-8},
        {"center_m": [3.0e-7, 0.0, 0.0], "radius_m": 4.5e-8},
    ],
    "analytical_models": ["diffusion_only", "enzyme_lower_bound"],
}


def _fig4_document() -> dict[str, Any]:
    doc = copy.deepcopy(_FIG3_DOCUMENT)
    doc["mode"] = "limiting_case"
    doc["rates"]["k2_per_s"] = math.inf
    doc["rates"]["k_minus1_per_s"] = 0.0
    doc["emitter"]["mode"] = "point"
    return doc


PRESETS: dict[str, dict[str, Any]] = {
    "fig3": _FIG3_DOCUMENT,
    "fig4": _fig4_document(),
}


def preset_document(name: str) -> dict[str, Any]:
    """A deep copy of the named preset document."""
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}", field="preset"
        ) from None


def _require(doc: Mapping, key: str, path: str):
    if not isinstance(doc, Mapping):
        raise ConfigurationError("expected a mapping", field=path or key)
    if key not in doc:
        raise ConfigurationError("missing required field", field=f"{path}{key}")
    return doc[key]


def _number(doc: Mapping, key: str, path: str) -> float:
    value = _require(doc, key, path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"expected a number, got {value!r}", field=f"{path}{key}")
    return float(value)


def _integer(doc: Mapping, key: str, path: str) -> int:
    value = _require(doc, key, path)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"expected an integer, got {value!r}", field=f"{path}{key}")
    return value


def _vector3(doc: Mapping, key: str, path: str) -> tuple[float, float, float]:
    value = _require(doc, key, path)
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigurationError(
            f"expected a 3-element list, got {value!r}", field=f"{path}{key}"
        )
    return tuple(float(v) for v in value)


def _wrap(path: str, build):
    try:
        return build()
    except ConfigurationError:
        raise
    except ValueError as exc:
        raise ConfigurationError(str(exc), field=path) from exc


def spec_from_document(doc: Mapping[str, Any]) -> ExperimentSpec:
    """Validate a configuration document into an ExperimentSpec.

    Errors name the offending field with a dotted path.
    """
    mode_name = _require(doc, "mode", "")
    try:
        mode = ExperimentMode(mode_name)
    except ValueError:
        raise ConfigurationError(
            f"must be one of {[m.value for m in ExperimentMode]}, got {mode_name!r}",
            field="mode",
        ) from None

    env_doc = _require(doc, "environment", "")
    env = _wrap(
        "environment",
        lambda: PhysicalEnvironment(
            temperature=_number(env_doc, "temperature_K", "environment."),
            viscosity=_number(env_doc, "viscosity_Pa_s", "environment."),
        ),
    )

    species_doc = _require(doc, "species", "")
    species: dict[Species, SpeciesSpec] = {}
    for kind in Species:
        entry = _require(species_doc, kind.value, "species.")
        path = f"species.{kind.value}."
        diffusion = None
        if "diffusion_m2_per_s" in entry:
            diffusion = _number(entry, "diffusion_m2_per_s", path)
        species[kind] = _wrap(
            path.rstrip("."),
            lambda e=entry, k=kind, p=path, d=diffusion: SpeciesSpec(
                kind=k, radius=_number(e, "radius_m", p), diffusion_coefficient=d
            ),
        )

    rates_doc = _require(doc, "rates", "")
    rates = _wrap(
        "rates",
        lambda: ReactionRates(
            k1=_number(rates_doc, "k1_m3_per_molecule_s", "rates."),
            k_minus1=_number(rates_doc, "k_minus1_per_s", "rates."),
            k2=_number(rates_doc, "k2_per_s", "rates."),
        ),
    )

    enzymes_doc = _require(doc, "enzymes", "")
    box = _wrap(
        "enzymes",
        lambda: Box(
            lower=_vector3(enzymes_doc, "box_min_m", "enzymes."),
            upper=_vector3(enzymes_doc, "box_max_m", "enzymes."),
        ),
    )

    emitter_doc = _require(doc, "emitter", "")
    mode_value = _require(emitter_doc, "mode", "emitter.")
    try:
        emission_mode = EmissionMode(mode_value)
    except ValueError:
        raise ConfigurationError(
            f"must be one of {[m.value for m in EmissionMode]}, got {mode_value!r}",
            field="emitter.mode",
        ) from None
    schedule_doc = _require(emitter_doc, "schedule", "emitter.")
    if not isinstance(schedule_doc, list) or not schedule_doc:
        raise ConfigurationError("expected a non-empty list", field="emitter.schedule")
    schedule = tuple(
        (
            _number(entry, "time_s", f"emitter.schedule[{i}]."),
            _integer(entry, "bit", f"emitter.schedule[{i}]."),
        )
        for i, entry in enumerate(schedule_doc)
    )
    emitter = _wrap(
        "emitter",
        lambda: EmitterSpec(
            molecule_count=_integer(emitter_doc, "molecule_count", "emitter."),
            mode=emission_mode,
            schedule=schedule,
            bit_interval=_number(emitter_doc, "bit_interval_s", "emitter."),
        ),
    )

    receivers_doc = _require(doc, "receivers", "")
    if not isinstance(receivers_doc, list) or not receivers_doc:
        raise ConfigurationError("expected a non-empty list", field="receivers")
    receivers = tuple(
        _wrap(
            f"receivers[{i}]",
            lambda e=entry, i=i: ChannelGeometry(
                receiver_center=_vector3(e, "center_m", f"receivers[{i}]."),
                receiver_radius=_number(e, "radius_m", f"receivers[{i}]."),
            ),
        )
        for i, entry in enumerate(receivers_doc)
    )

    models = doc.get("analytical_models", ["diffusion_only", "enzyme_lower_bound"])
    refs = []
    for i, name in enumerate(models):
        try:
            refs.append(ModelTag(name))
        except ValueError:
            raise ConfigurationError(
                f"unknown analytical model {name!r}", field=f"analytical_models[{i}]"
            ) from None

    seed = _integer(doc, "seed", "")
    config = _wrap(
        "simulation",
        lambda: SimulationConfig(
            env=env,
            species=species,
            rates=rates,
            dt=_number(doc, "timestep_s", ""),
            enzyme_count=_integer(enzymes_doc, "count", "enzymes."),
            enzyme_box=box,
            emitter=emitter,
            receivers=receivers,
            duration=_number(doc, "duration_s", ""),
            seed=seed,
            instant_degradation=mode is ExperimentMode.LIMITING_CASE,
        ),
    )

    spec = _wrap(
        "experiment",
        lambda: ExperimentSpec(
            base_config=config,
            trial_count=_integer(doc, "trials", ""),
            base_seed=seed,
            mode=mode,
            analytical_refs=tuple(refs),
        ),
    )

    report = validate_long_step_regime(config.derived)
    if not report.passed:
        warnings.warn(report.message, StepRegimeWarning, stacklevel=2)
    return spec


def document_from_spec(spec: ExperimentSpec) -> dict[str, Any]:
    """Echo an ExperimentSpec back to a document; loading the echo yields
    an identical spec."""
    config = spec.base_config
    return {
        "mode": spec.mode.value,
        "trials": spec.trial_count,
        "seed": spec.base_seed,
        "environment": {
            "temperature_K": config.env.temperature,
            "viscosity_Pa_s": config.env.viscosity,
        },
        "species": {
            kind.value: (
                {"radius_m": s.radius}
                if s.diffusion_coefficient is None
                else {"radius_m": s.radius, "diffusion_m2_per_s": s.diffusion_coefficient}
            )
            for kind, s in ((k, config.species[k]) for k in Species)
        },
        "rates": {
            "k1_m3_per_molecule_s": config.rates.k1,
            "k_minus1_per_s": config.rates.k_minus1,
            "k2_per_s": config.rates.k2,
        },
        "timestep_s": config.dt,
        "duration_s": config.duration,
        "enzymes": {
            "count": config.enzyme_count,
            "box_min_m": list(config.enzyme_box.lower),
            "box_max_m": list(config.enzyme_box.upper),
        },
        "emitter": {
            "molecule_count": config.emitter.molecule_count,
            "mode": config.emitter.mode.value,
            "bit_interval_s": config.emitter.bit_interval,
            "schedule": [{"time_s": t, "bit": b} for t, b in config.emitter.schedule],
        },
        "receivers": [
            {"center_m": list(rx.receiver_center), "radius_m": rx.receiver_radius}
            for rx in config.receivers
        ],
        "analytical_models": [m.value for m in spec.analytical_refs],
    }


def load_config(path: str | Path) -> ExperimentSpec:
    """Parse and validate a YAML configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file: {exc}") from exc
    try:
        doc = yaml.load(text, Loader=_ConfigLoader)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"malformed YAML in {path}: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise ConfigurationError(f"config root must be a mapping, got {type(doc).__name__}")
    return spec_from_document(doc)


def load_preset(name: str) -> ExperimentSpec:
    return spec_from_document(preset_document(name))


def save_config(doc: Mapping[str, Any], path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(dict(doc), sort_keys=False))
