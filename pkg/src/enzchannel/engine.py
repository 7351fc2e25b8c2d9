"""Particle-based stochastic simulator for the enzymatic degradation channel.

One trial tracks every mobile molecule: substrate molecules diffuse freely
in unbounded space, enzymes and bound complexes diffuse inside an
impermeable box, and each fixed time step applies, in order,

    scheduled emission -> diffusion -> box boundary -> bimolecular binding
    -> unimolecular reactions -> receiver observation.

Enzymes and complexes share one slot array: a slot holds a free enzyme or,
while ``slot_bound`` is set, the complex it became. Binding only changes a
slot's position (to the pair midpoint) and its bound flag, so enzyme
conservation holds structurally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .analytic import ChannelGeometry
from .errors import ConfigurationError, InvalidParameterError
from .physics import (
    DerivedStepParameters,
    PhysicalEnvironment,
    ReactionRates,
    Species,
    SpeciesSpec,
    derive_step_parameters,
)

# Upper limit on grid cells per axis; cells must also stay >= the binding
# radius for the 27-cell search to be exhaustive.
_GRID_DIVISIONS = 64


@dataclass(frozen=True)
class Box:
    """Axis-aligned box, lower/upper corners in meters."""

    lower: tuple[float, float, float]
    upper: tuple[float, float, float]

    def __post_init__(self):
        if any(u <= l for l, u in zip(self.lower, self.upper)):
            raise InvalidParameterError(f"degenerate box {self.lower} .. {self.upper}")

    @property
    def extents(self) -> tuple[float, float, float]:
        return tuple(u - l for l, u in zip(self.lower, self.upper))

    def contains_point(self, point) -> bool:
        return all(l <= p <= u for p, l, u in zip(point, self.lower, self.upper))

    def contains_sphere(self, center, radius: float) -> bool:
        return all(
            l <= c - radius and c + radius <= u
            for c, l, u in zip(center, self.lower, self.upper)
        )


class EmissionMode(Enum):
    PACKED_SPHERE = "packed_sphere"
    POINT = "point"


@dataclass(frozen=True)
class EmitterSpec:
    """Impulse source at the origin under binary on-off modulation.

    schedule lists (time, bit) opportunities; an impulse of
    ``molecule_count`` molecules is released for every bit 1.
    """

    molecule_count: int
    mode: EmissionMode
    schedule: tuple[tuple[float, int], ...]
    bit_interval: float

    def __post_init__(self):
        if not self.molecule_count > 0:
            raise InvalidParameterError("molecule_count must be > 0")
        if not self.bit_interval > 0:
            raise InvalidParameterError("bit_interval must be > 0")
        for t, bit in self.schedule:
            if t < 0:
                raise InvalidParameterError(f"schedule time must be >= 0, got {t}")
            if bit not in (0, 1):
                raise InvalidParameterError(f"schedule bit must be 0 or 1, got {bit}")


@dataclass(frozen=True)
class SimulationConfig:
    """Complete physical and numerical description of one experiment."""

    env: PhysicalEnvironment
    species: Mapping[Species, SpeciesSpec]
    rates: ReactionRates
    dt: float
    enzyme_count: int
    enzyme_box: Box
    emitter: EmitterSpec
    receivers: tuple[ChannelGeometry, ...]
    duration: float
    seed: int
    instant_degradation: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("must be > 0", field="dt")
        steps = self.duration / self.dt
        if not self.duration > 0 or abs(steps - round(steps)) > 1e-9 * max(steps, 1.0):
            raise ConfigurationError(
                f"must be a positive multiple of dt={self.dt!r}, got {self.duration!r}",
                field="duration",
            )
        if self.enzyme_count < 0:
            raise ConfigurationError("must be >= 0", field="enzyme_count")
        missing = [k.value for k in Species if k not in self.species]
        if missing:
            raise ConfigurationError(f"missing species {missing}", field="species")
        for kind, spec in self.species.items():
            if spec.kind is not kind:
                raise ConfigurationError(
                    f"entry {kind.value} holds a spec for {spec.kind.value}", field="species"
                )
        if not self.enzyme_box.contains_point((0.0, 0.0, 0.0)):
            raise ConfigurationError("must contain the emitter origin", field="enzyme_box")
        for i, rx in enumerate(self.receivers):
            if not self.enzyme_box.contains_sphere(rx.receiver_center, rx.receiver_radius):
                raise ConfigurationError(
                    "receiver sphere extends outside the enzyme box",
                    field=f"receivers[{i}]",
                )
        for t, _bit in self.emitter.schedule:
            k = t / self.dt
            if abs(k - round(k)) > 1e-9 * max(k, 1.0):
                raise ConfigurationError(
                    f"emission time {t!r} is not a multiple of dt", field="emitter.schedule"
                )
            if t >= self.duration:
                raise ConfigurationError(
                    f"emission time {t!r} is at or past the duration", field="emitter.schedule"
                )
        if math.isinf(self.rates.k2) and not self.instant_degradation:
            raise ConfigurationError(
                "k2 may be infinite only in the instant-degradation (limiting) mode",
                field="rates.k2",
            )
        if self.instant_degradation:
            if not math.isinf(self.rates.k2):
                raise ConfigurationError(
                    "instant-degradation mode requires k2 = inf", field="rates.k2"
                )
            if self.rates.k_minus1 != 0:
                raise ConfigurationError(
                    "instant-degradation mode requires k_minus1 = 0", field="rates.k_minus1"
                )

    @property
    def n_steps(self) -> int:
        return round(self.duration / self.dt)

    def diffusion_coefficients(self) -> dict[Species, float]:
        return {kind: spec.resolve_diffusion(self.env) for kind, spec in self.species.items()}

    @cached_property
    def derived(self) -> DerivedStepParameters:
        return derive_step_parameters(
            self.diffusion_coefficients(),
            self.rates,
            self.dt,
            instant_degradation=self.instant_degradation,
        )

    @cached_property
    def emission_bits(self) -> dict[int, int]:
        """Step index -> bit, for schedule lookup at exact step boundaries."""
        return {round(t / self.dt): bit for t, bit in self.emitter.schedule}


class SpatialHash:
    """Uniform grid over the enzyme box mapping integer cell coordinates to
    the free enzymes inside, stored as linked lists (head/next arrays).

    Cell sizes are at least the requested ``cell_size`` so a 27-cell
    neighborhood always covers a sphere of that radius.
    """

    def __init__(self, box: Box, cell_size: float):
        if not cell_size > 0:
            raise InvalidParameterError("cell_size must be > 0")
        self.box = box
        self.cell_size = cell_size
        ext = box.extents
        self.shape = tuple(max(1, int(e / cell_size)) for e in ext)
        self._lower = np.asarray(box.lower, dtype=float)
        self._inv_cell = np.array([n / e for n, e in zip(self.shape, ext)], dtype=float)
        self._head = np.full(self.shape[0] * self.shape[1] * self.shape[2], -1, dtype=np.int32)
        self._next = np.empty(0, dtype=np.int32)
        self.n_indexed = 0

    def rebuild(self, positions: np.ndarray, skip: np.ndarray | None = None) -> "SpatialHash":
        """Re-index ``positions``, omitting rows where ``skip`` is true."""
        n = positions.shape[0]
        if self._next.shape[0] < n:
            self._next = np.empty(n, dtype=np.int32)
        if skip is None:
            skip = np.zeros(n, dtype=bool)
        nx, ny, nz = self.shape
        _kernels.build_cell_lists(
            positions, skip, self._lower, self._inv_cell, nx, ny, nz, self._head, self._next
        )
        self.n_indexed = int(n - np.count_nonzero(skip[:n]))
        return self

    def cell_of(self, point) -> tuple[int, int, int]:
        """Cell coordinates of a point; may fall outside the grid range for
        points outside the box."""
        rel = (np.asarray(point, dtype=float) - self._lower) * self._inv_cell
        return tuple(int(c) for c in np.floor(rel))

    def indices_in_cell(self, cell: tuple[int, int, int]) -> list[int]:
        nx, ny, nz = self.shape
        cx, cy, cz = cell
        if not (0 <= cx < nx and 0 <= cy < ny and 0 <= cz < nz):
            return []
        out = []
        j = self._head[(cx * ny + cy) * nz + cz]
        while j >= 0:
            out.append(int(j))
            j = self._next[j]
        return out

    def neighborhood_indices(self, point) -> list[int]:
        """Indices in the point's cell and the 26 adjacent cells."""
        cx, cy, cz = self.cell_of(point)
        out = []
        for gx in range(cx - 1, cx + 2):
            for gy in range(cy - 1, cy + 2):
                for gz in range(cz - 1, cz + 2):
                    out.extend(self.indices_in_cell((gx, gy, gz)))
        return out


def hash_cell_size(binding_radius: float, box: Box) -> float:
    """Grid resolution rule: max of the binding radius and a 1/64 box
    division, so cells stay coarse enough to be cheap and fine enough to
    keep neighbor lists short."""
    return max(binding_radius, max(box.extents) / _GRID_DIVISIONS)


class ParticleState:
    """Positions and bookkeeping for all mobile molecules at one instant."""

    def __init__(self, enzyme_positions: np.ndarray, rng: np.random.Generator):
        n = enzyme_positions.shape[0]
        self.free_a = np.empty((0, 3), dtype=float)
        self.slot_positions = np.array(enzyme_positions, dtype=float, order="C")
        self.slot_bound = np.zeros(n, dtype=bool)
        self.degraded_count = 0
        self.total_emitted = 0
        self.time = 0.0
        self.step_index = 0
        self.rng = rng
        self._decompose_buf = np.empty(max(n, 1), dtype=np.int64)
        self._hash: SpatialHash | None = None

    @property
    def enzyme_count(self) -> int:
        return self.slot_bound.shape[0]

    @property
    def free_a_count(self) -> int:
        return self.free_a.shape[0]

    @property
    def free_e_count(self) -> int:
        return int(self.enzyme_count - np.count_nonzero(self.slot_bound))

    @property
    def bound_ea_count(self) -> int:
        return int(np.count_nonzero(self.slot_bound))

    @property
    def free_e_positions(self) -> np.ndarray:
        return self.slot_positions[~self.slot_bound].copy()

    @property
    def bound_ea_positions(self) -> np.ndarray:
        return self.slot_positions[self.slot_bound].copy()

    def conservation_ok(self) -> bool:
        """Free A + bound complexes + degraded == emitted, and slots are a
        fixed population by construction."""
        return self.free_a_count + self.bound_ea_count + self.degraded_count == self.total_emitted


def init_state(config: SimulationConfig, seed: int | None = None) -> ParticleState:
    """Fresh state: enzymes i.i.d. uniform in the box, no substrate yet."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    lower = np.asarray(config.enzyme_box.lower, dtype=float)
    upper = np.asarray(config.enzyme_box.upper, dtype=float)
    positions = rng.uniform(lower, upper, size=(config.enzyme_count, 3))
    return ParticleState(positions, rng)


@lru_cache(maxsize=8)
def _packed_lattice(count: int, pitch: float) -> np.ndarray:
    """Cubic-lattice sites with the given pitch, nearest to the origin
    first (ties in lexicographic order), as an immutable (count, 3) array."""
    reach = math.ceil((3.0 * count / (4.0 * math.pi)) ** (1.0 / 3.0)) + 2
    axis = np.arange(-reach, reach + 1, dtype=np.int64)
    kx, ky, kz = np.meshgrid(axis, axis, axis, indexing="ij")
    kx, ky, kz = kx.ravel(), ky.ravel(), kz.ravel()
    d2 = kx * kx + ky * ky + kz * kz
    order = np.lexsort((kz, ky, kx, d2))[:count]
    sites = np.column_stack((kx[order], ky[order], kz[order])).astype(float) * pitch
    sites.setflags(write=False)
    return sites


def emit_impulse(state: ParticleState, emitter: EmitterSpec, molecule_radius: float) -> ParticleState:
    """Release one impulse at the origin.

    packed_sphere places molecules on a cubic lattice of pitch twice the
    molecule radius, filling sites outward from the origin; point mode
    stacks all molecules exactly at the origin.
    """
    n = emitter.molecule_count
    if emitter.mode is EmissionMode.POINT:
        new = np.zeros((n, 3), dtype=float)
    else:
        new = _packed_lattice(n, 2.0 * molecule_radius)
    state.free_a = np.vstack((state.free_a, new)) if state.free_a.size else new.copy()
    state.total_emitted += n
    return state


def diffuse_step(state: ParticleState, derived: DerivedStepParameters) -> ParticleState:
    """Independent Gaussian displacement of every molecule, per species
    sigma. Draw order (substrate block, then enzyme slots) is part of the
    determinism contract."""
    sigma = derived.sigma_per_species
    if state.free_a_count:
        state.free_a += sigma[Species.A] * state.rng.standard_normal(state.free_a.shape)
    if state.enzyme_count:
        _kernels.diffuse_slots(
            state.rng,
            state.slot_positions,
            state.slot_bound,
            sigma[Species.E],
            sigma[Species.EA],
        )
    return state


def enforce_boundary(state: ParticleState, enzyme_box: Box) -> ParticleState:
    """Reflect enzymes that left the box; complexes that left decompose
    into a free enzyme plus a free substrate molecule, both at the
    reflected position. Free substrate passes unhindered."""
    if not state.enzyme_count:
        return state
    lower = np.asarray(enzyme_box.lower, dtype=float)
    upper = np.asarray(enzyme_box.upper, dtype=float)
    n_dec = _kernels.reflect_slots(
        state.slot_positions, state.slot_bound, lower, upper, state._decompose_buf
    )
    if n_dec:
        slots = state._decompose_buf[:n_dec]
        state.slot_bound[slots] = False
        state.free_a = np.vstack((state.free_a, state.slot_positions[slots]))
    return state


def _resolve_bind_conflicts(pair_a, pair_slot, pair_d2, n_a: int, n_slots: int):
    """First-come matching: substrate molecules in index order, each taking
    its nearest still-free enzyme (distance ties to the lower slot index)."""
    order = np.lexsort((pair_slot, pair_d2, pair_a))
    slot_taken = np.zeros(n_slots, dtype=bool)
    a_matched = np.zeros(n_a, dtype=bool)
    matched_a = []
    matched_slot = []
    for k in order:
        a = pair_a[k]
        if a_matched[a]:
            continue
        s = pair_slot[k]
        if slot_taken[s]:
            continue
        a_matched[a] = True
        slot_taken[s] = True
        matched_a.append(a)
        matched_slot.append(s)
    return (
        np.asarray(matched_a, dtype=np.int64),
        np.asarray(matched_slot, dtype=np.int64),
        a_matched,
    )


def match_binding_pairs(
    free_a: np.ndarray,
    slot_positions: np.ndarray,
    slot_bound: np.ndarray,
    binding_radius: float,
    grid: SpatialHash,
) -> tuple[np.ndarray, np.ndarray]:
    """Pair substrate molecules with free enzymes closer than the binding
    radius.

    Substrate molecules are processed in index order; each takes its
    nearest still-unclaimed enzyme (ties to the lower slot index), and an
    enzyme is claimed at most once. Returns matched (a_index, slot_index)
    arrays. ``grid`` must be freshly rebuilt over the free enzymes.
    """
    n_a = free_a.shape[0]
    capacity = 4 * n_a + 64
    while True:
        pair_a = np.empty(capacity, dtype=np.int64)
        pair_slot = np.empty(capacity, dtype=np.int64)
        pair_d2 = np.empty(capacity, dtype=float)
        nx, ny, nz = grid.shape
        n_pairs = _kernels.find_binding_pairs(
            free_a,
            slot_positions,
            grid._lower,
            grid._inv_cell,
            nx,
            ny,
            nz,
            grid._head,
            grid._next,
            binding_radius**2,
            pair_a,
            pair_slot,
            pair_d2,
        )
        if n_pairs <= capacity:
            break
        capacity = n_pairs + 64
    if n_pairs == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    matched_a, matched_slot, _ = _resolve_bind_conflicts(
        pair_a[:n_pairs], pair_slot[:n_pairs], pair_d2[:n_pairs], n_a, slot_bound.shape[0]
    )
    return matched_a, matched_slot


def bind_step(
    state: ParticleState,
    derived: DerivedStepParameters,
    enzyme_box: Box,
    instant_degradation: bool = False,
) -> ParticleState:
    """Bimolecular binding pass over a freshly built spatial hash.

    Each bound pair is replaced by one complex at the segment midpoint; in
    the instant-degradation mode the complex immediately degrades, leaving
    a free enzyme at the midpoint and one more degraded molecule. An enzyme
    reacts at most once per step.
    """
    n_a = state.free_a_count
    if n_a == 0 or state.enzyme_count == 0 or state.free_e_count == 0:
        return state
    if state._hash is None or state._hash.box is not enzyme_box:
        state._hash = SpatialHash(enzyme_box, hash_cell_size(derived.binding_radius, enzyme_box))
    grid = state._hash.rebuild(state.slot_positions, skip=state.slot_bound)

    matched_a, matched_slot = match_binding_pairs(
        state.free_a, state.slot_positions, state.slot_bound, derived.binding_radius, grid
    )
    if matched_a.size == 0:
        return state
    a_matched = np.zeros(n_a, dtype=bool)
    a_matched[matched_a] = True
    midpoints = 0.5 * (state.free_a[matched_a] + state.slot_positions[matched_slot])
    # A substrate partner just outside the box can pull the midpoint out by
    # up to half the binding radius; the box is impermeable to enzymes, so
    # fold such midpoints back inside.
    lower = np.asarray(enzyme_box.lower)
    upper = np.asarray(enzyme_box.upper)
    outside = np.any((midpoints < lower) | (midpoints > upper), axis=1)
    if np.any(outside):
        span = upper - lower
        folded = np.mod(midpoints[outside] - lower, 2.0 * span)
        np.minimum(folded, 2.0 * span - folded, out=folded)
        midpoints[outside] = lower + folded
    state.slot_positions[matched_slot] = midpoints
    if instant_degradation:
        state.degraded_count += matched_a.size
    else:
        state.slot_bound[matched_slot] = True
    state.free_a = state.free_a[~a_matched]
    return state


def unimolecular_step(state: ParticleState, derived: DerivedStepParameters) -> ParticleState:
    """Per-complex reaction draw: unbind releases enzyme plus substrate at
    the complex position, degradation releases only the enzyme and counts
    one degraded molecule."""
    ea = np.flatnonzero(state.slot_bound)
    if ea.size == 0:
        return state
    u = state.rng.random(ea.size)
    unbind = u < derived.unbind_probability
    degrade = ~unbind & (u < derived.unbind_probability + derived.degrade_probability)
    reacted = unbind | degrade
    if not np.any(reacted):
        return state
    state.slot_bound[ea[reacted]] = False
    n_unbind = int(np.count_nonzero(unbind))
    if n_unbind:
        state.free_a = np.vstack((state.free_a, state.slot_positions[ea[unbind]]))
    state.degraded_count += int(np.count_nonzero(degrade))
    return state


def observe(state: ParticleState, receivers: Sequence[ChannelGeometry]) -> np.ndarray:
    """Free substrate count inside each receiver sphere (boundary
    inclusive); complexes and degraded molecules are never counted."""
    counts = np.zeros(len(receivers), dtype=np.int64)
    if state.free_a_count == 0:
        return counts
    for i, rx in enumerate(receivers):
        delta = state.free_a - np.asarray(rx.receiver_center, dtype=float)
        d2 = np.einsum("ij,ij->i", delta, delta)
        counts[i] = int(np.count_nonzero(d2 <= rx.receiver_radius**2))
    return counts


def step(
    state: ParticleState, config: SimulationConfig, derived: DerivedStepParameters
) -> tuple[ParticleState, np.ndarray]:
    """Advance one time step and return the per-receiver observation taken
    at the new time. The state is updated in place and returned."""
    if config.emission_bits.get(state.step_index) == 1:
        emit_impulse(state, config.emitter, config.species[Species.A].radius)
    diffuse_step(state, derived)
    enforce_boundary(state, config.enzyme_box)
    bind_step(state, derived, config.enzyme_box, config.instant_degradation)
    unimolecular_step(state, derived)
    observations = observe(state, config.receivers)
    state.step_index += 1
    state.time = state.step_index * config.dt
    return state, observations


def run_simulation(
    config: SimulationConfig, seed: int | None = None
) -> tuple[np.ndarray, np.ndarray, ParticleState]:
    """Run one full trial.

    Returns (times, counts, final_state) where counts has shape
    (n_receivers, n_steps) with observations at integer multiples of dt.
    """
    derived = config.derived
    state = init_state(config, seed)
    n_steps = config.n_steps
    counts = np.zeros((len(config.receivers), n_steps), dtype=np.int64)
    for k in range(n_steps):
        _, counts[:, k] = step(state, config, derived)
    times = config.dt * np.arange(1, n_steps + 1)
    return times, counts, state
