import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import oracle_project
from oracles import brute_force_visibility, random_pair
from motlab.sim_world import (
    ConfigError,
    Despawn,
    PedestrianState,
    ScenarioConfig,
    Spawn,
    WorldState,
    camera_depth,
    full_body_box,
    generate_scenario,
    in_frustum,
    maintain_density,
    make_camera,
    project_point,
    step_pedestrian,
    visible_box,
    visible_extent,
)


def axial_camera(pitch=0.0, focal=800.0):
    return replace(make_camera("vehicle"), position=(0.0, 0.0, 1.0), pitch=pitch, yaw=0.0, focal_px=focal)


# ---------------------------------------------------------------- projection

def test_optical_axis_hits_principal_point():
    cam = make_camera("surveillance")
    assert cam.principal_point == (512.0, 384.0)
    fwd = cam.rotation[2]
    u, v = project_point(cam, np.asarray(cam.position) + 7.0 * fwd)
    assert u == pytest.approx(512.0, abs=1e-9)
    assert v == pytest.approx(384.0, abs=1e-9)


def test_point_behind_camera():
    cam = axial_camera()
    assert project_point(cam, (-1.0, 0.0, 1.0)) is None


def test_hand_pinhole_arithmetic():
    # camera-frame (x=1, y=0, z=4): forward is world +x, right is world -y
    cam = axial_camera(focal=800.0)
    u, v = project_point(cam, (4.0, -1.0, 1.0))
    assert u == pytest.approx(cam.principal_point[0] + 200.0, abs=1e-9)
    assert v == pytest.approx(cam.principal_point[1], abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(-20, 20), st.floats(-20, 20), st.floats(0, 3),
       st.sampled_from(["surveillance", "vehicle"]), st.floats(-math.pi, math.pi))
def test_projection_matches_oracle(x, y, z, view, yaw):
    cam = make_camera(view, yaw=yaw)
    got = project_point(cam, (x, y, z))
    want = oracle_project(cam, (x, y, z))
    if want is None:
        assert got is None
    else:
        assert got == pytest.approx(want[:2], rel=1e-9, abs=1e-6)


# ---------------------------------------------------------------- boxes

def test_box_outside_frustum_is_none():
    cam = make_camera("surveillance")
    ped = PedestrianState(1, (-10.0, 0.0), 0.0, 1.0)
    assert full_body_box(cam, ped) is None


def test_centered_pedestrian_box_is_symmetric():
    cam = axial_camera()
    ped = PedestrianState(1, (8.0, 0.0), 0.0, 1.0)
    left, top, w, h = full_body_box(cam, ped)
    assert left + w / 2 == pytest.approx(cam.principal_point[0], abs=1e-9)


def test_doubled_distance_halves_height():
    cam = axial_camera()
    near = full_body_box(cam, PedestrianState(1, (10.0, 0.0), 0.0, 0.0))
    far = full_body_box(cam, PedestrianState(1, (20.0, 0.0), 0.0, 0.0))
    assert far[3] / near[3] == pytest.approx(0.5, rel=0.02)


# ---------------------------------------------------------------- occlusion


def test_no_occluders_full_visibility():
    cam = axial_camera()
    ped = PedestrianState(1, (8.0, 0.0), 0.0, 1.0)
    box, vis = visible_box(cam, ped, [])
    assert box == full_body_box(cam, ped)
    assert vis == 1.0


def test_identical_silhouette_in_front_hides_completely():
    box = (100.0, 100.0, 40.0, 120.0)
    vis_box, vis = visible_extent(box, [box])
    assert vis == 0.0 and vis_box is None


def test_pedestrian_directly_in_front_occludes_fully():
    cam = axial_camera()
    back = PedestrianState(1, (12.0, 0.0), 0.0, 0.0, height=1.7)
    front = PedestrianState(2, (6.0, 0.0), 0.0, 0.0, height=1.9)
    box, vis = visible_box(cam, back, [front])
    assert vis == 0.0 and box is None
    # the occluder itself is unaffected by the farther pedestrian
    _, vis_front = visible_box(cam, front, [back])
    assert vis_front == 1.0


def test_left_half_occluder():
    box = (100.0, 50.0, 60.0, 200.0)
    occ = (90.0, 40.0, 40.0, 300.0)  # covers x in [90, 130): left half
    _, vis = visible_extent(box, [occ], stride=2)
    oracle = brute_force_visibility(box, [occ])
    assert oracle == pytest.approx(0.5, abs=1e-9)
    assert vis == pytest.approx(0.5, abs=2 / 60)


def test_visible_box_inside_full_box(rng):
    for _ in range(200):
        box = (rng.uniform(0, 500), rng.uniform(0, 300), rng.uniform(5, 100), rng.uniform(10, 300))
        occ = [(rng.uniform(0, 500), rng.uniform(0, 300), rng.uniform(5, 100), rng.uniform(10, 300))
               for _ in range(rng.integers(0, 4))]
        vb, vis = visible_extent(box, occ)
        assert 0.0 <= vis <= 1.0
        assert (vis == 0.0) == (vb is None)
        if vb is not None:
            assert vb[0] >= box[0] - 1e-9 and vb[1] >= box[1] - 1e-9
            assert vb[0] + vb[2] <= box[0] + box[2] + 1e-9
            assert vb[1] + vb[3] <= box[1] + box[3] + 1e-9


def test_stride_two_agrees_with_brute_force(rng):
    for _ in range(100):
        cam, a, b = random_pair(rng)
        back, front = (a, b) if camera_depth(cam, a) > camera_depth(cam, b) else (b, a)
        _, vis = visible_box(cam, back, [front], stride=2)
        oracle = brute_force_visibility(full_body_box(cam, back), [full_body_box(cam, front)])
        assert abs(vis - oracle) <= 0.05


# ---------------------------------------------------------------- motion

def test_zero_speed_stays_put():
    p = PedestrianState(1, (1.0, 2.0), 0.3, 0.0, waypoints=((10.0, 10.0),))
    assert step_pedestrian(p, 0.5).position == (1.0, 2.0)


def test_straight_segment_displacement():
    p = PedestrianState(1, (0.0, 0.0), 0.0, 2.0, waypoints=((100.0, 0.0),))
    q = step_pedestrian(p, 0.5)
    assert math.dist(p.position, q.position) == pytest.approx(1.0, abs=1e-12)
    assert q.position == pytest.approx((1.0, 0.0))


def test_close_waypoint_consumed_and_heading_reaimed():
    # at (0,0) heading +x; first waypoint 0.1 m ahead, next straight up the y axis
    p = PedestrianState(1, (0.0, 0.0), 0.0, 1.0, waypoints=((0.1, 0.0), (0.0, 5.0)))
    q = step_pedestrian(p, 0.1)
    assert q.waypoints == ((0.0, 5.0),)
    assert q.heading == pytest.approx(math.pi / 2)
    assert q.position == pytest.approx((0.0, 0.1))


def test_new_waypoint_appended_when_list_empties(rng):
    p = PedestrianState(1, (0.0, 0.0), 0.0, 1.0, waypoints=((0.05, 0.0),))
    q = step_pedestrian(p, 0.1, rng, (-20.0, -20.0, 20.0, 20.0))
    assert len(q.waypoints) == 1
    assert -20 <= q.waypoints[0][0] <= 20


def test_step_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        step_pedestrian(PedestrianState(1, (0.0, 0.0), 0.0, 1.0), 0.0)


# ---------------------------------------------------------------- density

def test_density_no_action_at_target(rng):
    cam = make_camera("surveillance")
    world = WorldState({i: PedestrianState(i, (10.0, 0.0), 0.0, 1.0) for i in range(1, 6)},
                       {i: 0 for i in range(1, 6)}, 6)
    assert maintain_density(world, cam, 5, rng) == []


def test_density_deficit_spawns_exactly(rng):
    cam = make_camera("surveillance")
    world = WorldState({i: PedestrianState(i, (10.0, 0.0), 0.0, 1.0) for i in range(1, 8)},
                       {i: 0 for i in range(1, 8)}, 8)
    actions = maintain_density(world, cam, 10, rng)
    assert len(actions) == 3 and all(isinstance(a, Spawn) for a in actions)
    for a in actions:
        assert in_frustum(cam, (*a.position, 0.85))


def test_density_despawns_after_grace(rng):
    cam = make_camera("surveillance")
    world = WorldState({1: PedestrianState(1, (-50.0, 0.0), 0.0, 1.0)}, {1: 31}, 2)
    actions = maintain_density(world, cam, 0, rng)
    assert actions == [Despawn(1)]
    world.outside_frames[1] = 30
    assert maintain_density(world, cam, 0, rng) == []


def test_long_run_density_average():
    truth = generate_scenario(ScenarioConfig(duration_frames=1000, target_density=20, seed=11))
    counts = [sum(in_frustum(c, p.center()) for p in s) for s, c in zip(truth.states, truth.cameras)]
    assert 18 <= np.mean(counts) <= 22


# ---------------------------------------------------------------- scenarios

def test_config_validation_names_field():
    with pytest.raises(ConfigError) as err:
        ScenarioConfig(fps=0).validate()
    assert err.value.field == "fps"
    with pytest.raises(ConfigError) as err:
        ScenarioConfig(speed_dist=(0.0, 0.1)).validate()
    assert err.value.field == "speed_dist"
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"fps": 30, "colour": "red"})


def test_config_round_trip():
    cfg = ScenarioConfig(duration_frames=7, camera_view="vehicle", seed=99)
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


def test_generation_deterministic():
    cfg = ScenarioConfig(duration_frames=60, target_density=8, seed=5)
    a, b = generate_scenario(cfg), generate_scenario(cfg)
    assert repr(a.frames) == repr(b.frames)
    assert a.states == b.states


def test_zero_density_is_empty():
    truth = generate_scenario(ScenarioConfig(duration_frames=20, target_density=0))
    assert all(f == [] for f in truth.frames)


@pytest.fixture(scope="module")
def busy_truth():
    return generate_scenario(ScenarioConfig(duration_frames=120, target_density=12, seed=3))


def test_gt_box_invariants(busy_truth):
    w, h = busy_truth.config.resolution
    for boxes in busy_truth.frames:
        for b in boxes:
            l, t, bw, bh = b.full_box
            assert bw > 0 and bh > 0 and l >= 0 and t >= 0 and l + bw <= w + 1e-9 and t + bh <= h + 1e-9
            assert (b.visibility == 0) == (b.visible_box is None)
            if b.visible_box is not None:
                vl, vt, vw, vh = b.visible_box
                assert vl >= l - 1e-9 and vt >= t - 1e-9
                assert vl + vw <= l + bw + 1e-9 and vt + vh <= t + bh + 1e-9


def test_reprojection_reproduces_full_box(busy_truth):
    for f, boxes in enumerate(busy_truth.frames):
        states = {p.identity: p for p in busy_truth.states[f]}
        cam = busy_truth.cameras[f]
        for b in boxes:
            assert full_body_box(cam, states[b.identity]) == b.full_box
            # independent projection of the 8 corners agrees too (before clipping)
            pts = [oracle_project(cam, c) for c in states[b.identity].corners()]
            us = [p[0] for p in pts]
            vs = [p[1] for p in pts]
            l = min(max(min(us), 0), cam.resolution[0])
            t = min(max(min(vs), 0), cam.resolution[1])
            assert b.full_box[0] == pytest.approx(l, abs=1e-6)
            assert b.full_box[1] == pytest.approx(t, abs=1e-6)


def test_speed_law_on_straight_segments(busy_truth):
    fps = busy_truth.config.fps
    for f in range(1, len(busy_truth.states)):
        prev = {p.identity: p for p in busy_truth.states[f - 1]}
        for p in busy_truth.states[f]:
            q = prev.get(p.identity)
            if q is None:
                continue
            step = math.dist(p.position, q.position)
            assert step == pytest.approx(q.speed / fps, rel=1e-9, abs=1e-12)
            assert p.position[0] - q.position[0] == pytest.approx(step * math.cos(p.heading), abs=1e-9)


def test_identities_never_reappear(busy_truth):
    present = [set(b.identity for b in f) | {p.identity for p in s}
               for f, s in zip(busy_truth.frames, busy_truth.states)]
    alive = [{p.identity for p in s} for s in busy_truth.states]
    gone = set()
    for f in range(1, len(alive)):
        gone |= alive[f - 1] - alive[f]
        assert not (alive[f] & gone)
    assert present


def test_pixel_displacement_matches_projection_oracle():
    """Mean box-centre motion equals an independent projection of 1/30 m steps."""
    cfg = ScenarioConfig(duration_frames=300, target_density=10, speed_dist=(1.0, 0.0), fps=30.0, seed=21)
    truth = generate_scenario(cfg)
    w, h = cfg.resolution
    observed, predicted = [], []
    for f in range(1, len(truth.frames)):
        prev = {b.identity: b for b in truth.frames[f - 1]}
        states = {p.identity: p for p in truth.states[f - 1]}
        cam = truth.cameras[f - 1]
        for b in truth.frames[f]:
            a = prev.get(b.identity)
            if a is None:
                continue
            if min(a.full_box[0], a.full_box[1], b.full_box[0], b.full_box[1]) <= 0:
                continue
            if a.full_box[0] + a.full_box[2] >= w or b.full_box[0] + b.full_box[2] >= w:
                continue
            if a.full_box[1] + a.full_box[3] >= h or b.full_box[1] + b.full_box[3] >= h:
                continue
            ca = (a.full_box[0] + a.full_box[2] / 2, a.full_box[1] + a.full_box[3] / 2)
            cb = (b.full_box[0] + b.full_box[2] / 2, b.full_box[1] + b.full_box[3] / 2)
            observed.append(math.dist(ca, cb))
            # oracle: step the logged 3D state by 1/30 m along its next heading
            s = states[b.identity]
            nxt = {p.identity: p for p in truth.states[f]}[b.identity]
            moved = replace(s, position=(s.position[0] + math.cos(nxt.heading) / 30.0,
                                         s.position[1] + math.sin(nxt.heading) / 30.0),
                            heading=nxt.heading)
            pa = [oracle_project(cam, c) for c in s.corners()]
            pb = [oracle_project(cam, c) for c in moved.corners()]
            oa = ((min(p[0] for p in pa) + max(p[0] for p in pa)) / 2, (min(p[1] for p in pa) + max(p[1] for p in pa)) / 2)
            ob = ((min(p[0] for p in pb) + max(p[0] for p in pb)) / 2, (min(p[1] for p in pb) + max(p[1] for p in pb)) / 2)
            predicted.append(math.dist(oa, ob))
    assert len(observed) > 1000
    assert np.mean(observed) == pytest.approx(np.mean(predicted), rel=0.05)
