import math

import pytest

from enzchannel.analytic import ChannelGeometry
from enzchannel.engine import Box, EmissionMode, EmitterSpec, SimulationConfig
from enzchannel.physics import PhysicalEnvironment, ReactionRates, Species, SpeciesSpec

WATER = PhysicalEnvironment(temperature=298.15, viscosity=1.0e-3)


def species_set(radius_a=0.5e-9, radius_e=2.5e-9, radius_ea=3.0e-9):
    return {
        Species.A: SpeciesSpec(Species.A, radius_a),
        Species.E: SpeciesSpec(Species.E, radius_e),
        Species.EA: SpeciesSpec(Species.EA, radius_ea),
    }


def make_config(
    enzyme_count=500,
    molecule_count=300,
    n_steps=20,
    dt=0.5e-6,
    k1=1e-18,
    k_minus1=2e5,
    k2=2e5,
    box_half=1e-7,
    seed=901,
    mode=EmissionMode.PACKED_SPHERE,
    instant_degradation=False,
    schedule=((0.0, 1),),
    receivers=None,
):
    """Small, fast configuration with lots of reaction events."""
    if receivers is None:
        receivers = (
            ChannelGeometry(receiver_center=(5e-8, 0.0, 0.0), receiver_radius=2e-8),
        )
    if instant_degradation:
        k_minus1, k2 = 0.0, math.inf
    return SimulationConfig(
        env=WATER,
        species=species_set(),
        rates=ReactionRates(k1=k1, k_minus1=k_minus1, k2=k2),
        dt=dt,
        enzyme_count=enzyme_count,
        enzyme_box=Box(lower=(-box_half,) * 3, upper=(box_half,) * 3),
        emitter=EmitterSpec(
            molecule_count=molecule_count,
            mode=mode,
            schedule=schedule,
            bit_interval=n_steps * dt,
        ),
        receivers=receivers,
        duration=n_steps * dt,
        seed=seed,
        instant_degradation=instant_degradation,
    )


@pytest.fixture
def mini_config():
    return make_config()
