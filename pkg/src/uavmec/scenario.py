"""World state: user devices, UAV fleet, Gauss-Markov mobility, task arrivals.

The world owns four named RNG streams (mobility, task, fading, tiebreak), all
spawned from the master seed, so redrawing one class of randomness never
perturbs the others and runs are reproducible per (config, seed).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig


@dataclass
class TaskSpec:
    data_bits: float
    cycles_per_bit: float
    deadline: float

    @property
    def cycles(self) -> float:
        return self.data_bits * self.cycles_per_bit


@dataclass
class World:
    config: ScenarioConfig
    ud_positions: np.ndarray       # (M, 2) m
    ud_velocities: np.ndarray      # (M, 2) m/s
    ud_compute: np.ndarray         # (M,) cycles/s, fixed at build
    suav_positions: np.ndarray     # (N, 2) m
    luav_position: np.ndarray      # (2,) m
    tasks: list[TaskSpec] = field(default_factory=list)
    slot: int = 1
    mobility_rng: np.random.Generator = None
    task_rng: np.random.Generator = None
    fading_rng: np.random.Generator = None
    tiebreak_rng: np.random.Generator = None

    def task_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(data_bits, cycles_per_bit, deadline) as (M,) arrays."""
        d = np.array([t.data_bits for t in self.tasks])
        eta = np.array([t.cycles_per_bit for t in self.tasks])
        tmax = np.array([t.deadline for t in self.tasks])
        return d, eta, tmax


def _streams(seed: int):
    children = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.default_rng(c) for c in children)


def build_scenario(config: ScenarioConfig) -> World:
    """Create the slot-1 world.

    UD positions are uniform over the service area, initial velocities equal
    the mean velocity, and each UD's compute capability is drawn once from
    ``ud_compute_options``.  The first slot's tasks are sampled immediately.
    """
    mob, task, fading, tie = _streams(config.seed)
    m = config.num_uds
    pos = mob.uniform(size=(m, 2)) * [config.area_width, config.area_height]
    vel = np.tile(np.asarray(config.mobility_mean_velocity, dtype=float),
                  (m, 1))
    f_ud = task.choice(np.asarray(config.ud_compute_options, dtype=float),
                       size=m)
    world = World(
        config=config,
        ud_positions=pos,
        ud_velocities=vel,
        ud_compute=f_ud,
        suav_positions=np.asarray(config.suav_initial_positions, dtype=float).copy(),
        luav_position=np.asarray(config.luav_position, dtype=float),
        mobility_rng=mob,
        task_rng=task,
        fading_rng=fading,
        tiebreak_rng=tie,
    )
    world.tasks = [sample_task(config, task) for _ in range(m)]
    return world


def sample_task(config: ScenarioConfig, rng: np.random.Generator) -> TaskSpec:
    d = rng.uniform(*config.data_bits_range)
    eta = rng.uniform(*config.cycles_per_bit_range)
    tmax = rng.uniform(*config.deadline_range)
    return TaskSpec(data_bits=d, cycles_per_bit=eta, deadline=tmax)


def step_mobility(world: World) -> None:
    """Advance UD positions/velocities by one slot (Gauss-Markov).

    q(t+1) = q(t) + v(t)*dt, then
    v(t+1) = a*v(t) + (1-a)*vbar + sqrt(1-a^2)*w,  w ~ N(0, sigma^2 I).

    Positions leaving the area are clamped to the boundary and the offending
    velocity component is reflected inward.
    """
    cfg = world.config
    a = cfg.mobility_alpha
    vbar = np.asarray(cfg.mobility_mean_velocity, dtype=float)
    noise = world.mobility_rng.normal(
        0.0, cfg.mobility_sigma, size=world.ud_positions.shape)
    new_pos = world.ud_positions + world.ud_velocities * cfg.slot_duration
    new_vel = a * world.ud_velocities + (1.0 - a) * vbar \
        + np.sqrt(1.0 - a * a) * noise

    bounds = np.array([cfg.area_width, cfg.area_height])
    low = new_pos < 0.0
    high = new_pos > bounds
    new_pos = np.clip(new_pos, 0.0, bounds)
    new_vel[low] = np.abs(new_vel[low])
    new_vel[high] = -np.abs(new_vel[high])

    world.ud_positions = new_pos
    world.ud_velocities = new_vel


def resample_tasks(world: World) -> None:
    """Draw the next slot's task for every UD (one task per UD per slot)."""
    world.tasks = [sample_task(world.config, world.task_rng)
                   for _ in range(world.config.num_uds)]
