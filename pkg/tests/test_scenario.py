import numpy as np

from uavmec.config import desk_profile
from uavmec.scenario import build_scenario, resample_tasks, step_mobility


def test_build_places_everything_inside_the_area():
    cfg = desk_profile(seed=1)
    world = build_scenario(cfg)
    assert world.ud_positions.shape == (cfg.num_uds, 2)
    assert np.all(world.ud_positions >= 0.0)
    assert np.all(world.ud_positions[:, 0] <= cfg.area_width)
    assert np.all(world.ud_positions[:, 1] <= cfg.area_height)
    np.testing.assert_array_equal(
        world.suav_positions, np.asarray(cfg.suav_initial_positions))
    assert world.slot == 1
    assert len(world.tasks) == cfg.num_uds


def test_build_is_deterministic_per_seed():
    cfg = desk_profile(seed=7)
    a, b = build_scenario(cfg), build_scenario(cfg)
    np.testing.assert_array_equal(a.ud_positions, b.ud_positions)
    np.testing.assert_array_equal(a.ud_compute, b.ud_compute)
    assert [t.data_bits for t in a.tasks] == [t.data_bits for t in b.tasks]
    c = build_scenario(desk_profile(seed=8))
    assert not np.array_equal(a.ud_positions, c.ud_positions)


def test_rng_streams_are_independent():
    """Draining the fading stream must not change mobility or tasks."""
    cfg = desk_profile(seed=3)
    a, b = build_scenario(cfg), build_scenario(cfg)
    b.fading_rng.normal(size=10_000)
    step_mobility(a)
    step_mobility(b)
    np.testing.assert_array_equal(a.ud_positions, b.ud_positions)
    resample_tasks(a)
    resample_tasks(b)
    assert [t.data_bits for t in a.tasks] == [t.data_bits for t in b.tasks]


def test_task_samples_respect_configured_ranges():
    cfg = desk_profile(seed=5)
    world = build_scenario(cfg)
    for _ in range(20):
        resample_tasks(world)
        d, eta, tmax = world.task_arrays()
        assert np.all((d >= cfg.data_bits_range[0])
                      & (d <= cfg.data_bits_range[1]))
        assert np.all((eta >= cfg.cycles_per_bit_range[0])
                      & (eta <= cfg.cycles_per_bit_range[1]))
        assert np.all((tmax >= cfg.deadline_range[0])
                      & (tmax <= cfg.deadline_range[1]))
    assert set(world.ud_compute) <= set(cfg.ud_compute_options)


def test_task_cycles_property():
    world = build_scenario(desk_profile(seed=2))
    t = world.tasks[0]
    assert t.cycles == t.data_bits * t.cycles_per_bit


def test_mobility_first_step_uses_previous_velocity():
    cfg = desk_profile(seed=11)
    world = build_scenario(cfg)
    before = world.ud_positions.copy()
    vel = world.ud_velocities.copy()
    step_mobility(world)
    inside = np.all((before + vel * cfg.slot_duration >= 0)
                    & (before + vel * cfg.slot_duration
                       <= [cfg.area_width, cfg.area_height]), axis=1)
    np.testing.assert_allclose(
        world.ud_positions[inside],
        (before + vel * cfg.slot_duration)[inside])


def test_mobility_keeps_uds_inside_and_reflects_velocity():
    cfg = desk_profile(seed=13, mobility_sigma=40.0,
                       mobility_mean_velocity=(30.0, 0.0))
    world = build_scenario(cfg)
    hit_wall = False
    for _ in range(60):
        step_mobility(world)
        assert np.all(world.ud_positions >= 0.0)
        assert np.all(world.ud_positions
                      <= [cfg.area_width, cfg.area_height])
        at_right = world.ud_positions[:, 0] == cfg.area_width
        if np.any(at_right):
            hit_wall = True
            assert np.all(world.ud_velocities[at_right, 0] <= 0.0)
    assert hit_wall, "test config should push UDs into the boundary"


def test_velocity_relaxes_toward_mean():
    """With no noise, v contracts geometrically to the mean velocity."""
    cfg = desk_profile(seed=17, mobility_sigma=0.0)
    world = build_scenario(cfg)
    # park everyone mid-area so no reflection interferes
    world.ud_positions = np.full_like(world.ud_positions, 200.0)
    world.ud_velocities = np.tile([3.0, -3.0], (cfg.num_uds, 1))
    for _ in range(100):
        step_mobility(world)
    assert np.all(world.ud_positions[:, 0] < cfg.area_width)
    np.testing.assert_allclose(
        world.ud_velocities,
        np.tile(cfg.mobility_mean_velocity, (cfg.num_uds, 1)), atol=1e-3)
