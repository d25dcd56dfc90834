import math

import numpy as np
import pytest

from lurekit import world as W
from lurekit.world import (Disturbance, Obstacle, Pose, PushSchedule, RobotState,
                           Scene, binarize, place_distractors, randomize_terrain,
                           rasterize, tracker_step, velocity_planner, warp_point)


def state(x=0.0, y=0.0, yaw=0.0, standing=False):
    return RobotState(pose=Pose(x, y, 0.0, yaw), standing=standing)


def closed_form_planner(px, py, yaw, gx, gy, gz, k):
    """Independent oracle: explicit rotation matrix and clamp."""
    d = np.array([gx - px, gy - py, gz])
    v = min(k * math.hypot(d[0], d[1]), 1.0)
    r = np.array([[math.cos(yaw), -math.sin(yaw), 0],
                  [math.sin(yaw), math.cos(yaw), 0],
                  [0, 0, 1.0]])
    local = r.T @ d
    phi = math.atan2(local[1], local[0]) if (d[0] or d[1]) else 0.0
    if phi == -math.pi:
        phi = math.pi
    return v, phi


class TestVelocityPlanner:
    def test_straight_ahead_clamped(self):
        v, phi = velocity_planner((2.0, 0.0, 0.0), state(), k=1.0)
        assert v == 1.0
        assert phi == 0.0

    def test_at_goal(self):
        v, phi = velocity_planner((1.0, 1.0, 0.0), state(1.0, 1.0), k=1.0)
        assert v == 0.0 and phi == 0.0

    def test_rotated_frame(self):
        v, phi = velocity_planner((1.0, 2.0, 0.0), state(1.0, 1.0, yaw=math.pi / 2), k=0.5)
        assert v == pytest.approx(0.5, abs=1e-12)
        assert phi == pytest.approx(0.0, abs=1e-12)

    def test_matches_closed_form_on_random_cases(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            px, py, gx, gy = rng.uniform(-5, 5, 4)
            gz = rng.uniform(0, 1)
            yaw = rng.uniform(-math.pi, math.pi)
            k = rng.uniform(0.1, 3.0)
            v, phi = velocity_planner((gx, gy, gz), state(px, py, yaw), k=k)
            ev, ephi = closed_form_planner(px, py, yaw, gx, gy, gz, k)
            assert abs(v - ev) < 1e-9
            assert abs(phi - ephi) < 1e-9

    def test_rejects_non_finite(self):
        with pytest.raises(W.InvalidInputError):
            velocity_planner((math.nan, 0.0, 0.0), state())
        with pytest.raises(W.InvalidInputError):
            velocity_planner((1.0, 0.0, 0.0), state(), k=0.0)


class TestTracker:
    def test_stand_threshold(self):
        x = state()
        x2 = tracker_step(x, 0.05, 0.3, 0.02)
        assert x2.standing
        assert (x2.pose.x, x2.pose.y) == (0.0, 0.0)

    def test_stand_drifts_with_push(self):
        d = Disturbance(np.array([0.5, 0.0]), True)
        x2 = tracker_step(state(), 0.05, 0.0, 0.02, d=d)
        assert x2.standing
        assert x2.pose.x == pytest.approx(0.01, abs=1e-12)

    def test_euler_step(self):
        x2 = tracker_step(state(), 1.0, 0.0, 0.02)
        assert x2.pose.x == pytest.approx(0.02, abs=1e-12)
        assert x2.pose.y == 0.0
        assert not x2.standing

    def test_yaw_rate_clamped(self):
        x2 = tracker_step(state(), 1.0, math.pi, 0.02)
        assert x2.yaw_rate == pytest.approx(math.pi / 3)

    def test_jump_over_low_box(self):
        scene = Scene(id="t", bounds=20.0, obstacles=[
            Obstacle("box", Pose(0.475, 0.0, 0.0, 0.0), (0.35, 1.2, 0.25))])
        # near edge 0.3 m ahead of the robot
        x = state()
        x = tracker_step(x, 1.0, 0.0, 0.02, scene=scene)
        assert x.airborne
        steps = 1
        while x.airborne:
            x = tracker_step(x, 1.0, 0.0, 0.02, scene=scene)
            steps += 1
        assert steps == pytest.approx(W.T_JUMP / 0.02, abs=1)
        assert x.pose.x > 0.475 + 0.35 / 2            # past the far edge
        assert x.pose.z == 0.0

    def test_no_jump_when_goal_short(self):
        scene = Scene(id="t", bounds=20.0, obstacles=[
            Obstacle("box", Pose(0.475, 0.0, 0.0, 0.0), (0.35, 1.2, 0.25))])
        x2 = tracker_step(state(), 0.2, 0.0, 0.02, scene=scene)
        assert not x2.airborne

    def test_never_penetrates_obstacles(self):
        scene = Scene(id="t", bounds=20.0, obstacles=[
            Obstacle("box", Pose(1.0, 0.0, 0.0, 0.4), (0.6, 0.8, 0.5)),
            Obstacle("tire", Pose(0.2, 0.9, 0.0, 0.0), (0.35, 0.5))])
        rng = np.random.default_rng(3)
        for trial in range(20):
            x = state(rng.uniform(-1, 0), rng.uniform(-1, 1), rng.uniform(-1, 1))
            goal = (rng.uniform(0.5, 2.0), rng.uniform(-1, 1), 0.0)
            for _ in range(200):
                v, phi = velocity_planner(goal, x)
                d = Disturbance(rng.uniform(-0.5, 0.5, 2), rng.random() < 0.3)
                x = tracker_step(x, v, phi, 0.02, d=d, scene=scene)
                for obs in scene.obstacles:
                    assert obs.penetration_xy(x.pose.x, x.pose.y) == 0.0

    def test_planner_tracker_convergence(self):
        # gain chosen so the stand deadband sits below the 5 cm target
        k = 2.5
        rng = np.random.default_rng(11)
        for _ in range(10):
            gx, gy = rng.uniform(-3, 3, 2)
            x = state(rng.uniform(-3, 3), rng.uniform(-3, 3))
            bearing = math.atan2(gy - x.pose.y, gx - x.pose.x)
            x = x.replace_pose(yaw=bearing + rng.uniform(-0.5, 0.5))
            dist = math.hypot(gx - x.pose.x, gy - x.pose.y)
            for _ in range(2000):
                if dist < 0.05:
                    break
                v, phi = velocity_planner((gx, gy, 0.0), x, k=k)
                for _ in range(5):
                    x = tracker_step(x, v, phi, 0.02)
                new = math.hypot(gx - x.pose.x, gy - x.pose.y)
                assert new < dist
                dist = new
            assert dist < 0.05

    def test_determinism(self):
        scene = Scene(id="t", bounds=20.0, obstacles=[
            Obstacle("box", Pose(1.5, 0.1, 0.0, 0.2), (0.4, 0.8, 0.25))])

        def run():
            sched = PushSchedule(np.random.default_rng(5))
            x = state()
            out = []
            for i in range(300):
                v, phi = velocity_planner((3.0, 0.0, 0.0), x)
                x = tracker_step(x, v, phi, 0.02, d=sched.sample_push(i * 0.02),
                                 scene=scene)
                out.append((x.pose.x, x.pose.y, x.pose.z, x.pose.yaw))
            return out

        assert run() == run()


class TestRasterize:
    def test_empty_scene(self):
        h = rasterize(Scene(id="t", bounds=20.0), state())
        assert h.grid.shape == (40, 40)
        assert not h.grid.any()

    def _oracle(self, scene, x, window=4.0, res=0.1):
        n = int(round(window / res))
        grid = np.zeros((n, n))
        for iy in range(n):
            for ix in range(n):
                lx = -window / 2 + (ix + 0.5) * res
                ly = -window / 2 + (iy + 0.5) * res
                c, s = math.cos(x.pose.yaw), math.sin(x.pose.yaw)
                wx = x.pose.x + c * lx - s * ly
                wy = x.pose.y + s * lx + c * ly
                for o in scene.obstacles:
                    dx, dy = wx - o.pose.x, wy - o.pose.y
                    if o.is_rect:
                        oc, os = math.cos(o.pose.yaw), math.sin(o.pose.yaw)
                        ax, ay = oc * dx + os * dy, -os * dx + oc * dy
                        hit = abs(ax) < o.dims[0] / 2 and abs(ay) < o.dims[1] / 2
                    else:
                        hit = dx * dx + dy * dy < o.dims[0] ** 2
                    if hit:
                        grid[iy, ix] = max(grid[iy, ix], o.height)
        return grid

    def test_single_box_footprint(self):
        scene = Scene(id="t", bounds=20.0, obstacles=[
            Obstacle("box", Pose(1.0, 0.3, 0.0, 0.3), (0.5, 0.7, 0.25))])
        x = state(0.2, -0.1, 0.15)
        h = rasterize(scene, x)
        assert np.array_equal(h.grid, self._oracle(scene, x))
        assert (h.grid == 0.25).any()

    def test_box_partly_outside_window(self):
        scene = Scene(id="t", bounds=40.0, obstacles=[
            Obstacle("box", Pose(2.0, 0.0, 0.0, 0.0), (1.0, 1.0, 0.3))])
        x = state()
        h = rasterize(scene, x)
        assert np.array_equal(h.grid, self._oracle(scene, x))
        assert h.grid[:, -1].any()        # footprint touches the window edge


class TestBinarize:
    def test_threshold_boundary(self):
        h = rasterize(Scene(id="t", bounds=20.0), state())
        g = h.grid.copy()
        g[0, 0], g[0, 1] = 0.051, 0.049
        b = binarize(W.Heightmap(h.origin, h.resolution, g), 0.05)
        assert b.grid[0, 0] == 1.0 and b.grid[0, 1] == 0.0

    def test_all_zero(self):
        h = rasterize(Scene(id="t", bounds=20.0), state())
        assert not binarize(h).grid.any()

    def test_matches_bruteforce_on_random_maps(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            g = rng.uniform(0, 0.12, size=(16, 16))
            b = binarize(W.Heightmap((0, 0), 0.1, g), 0.05)
            for iy in range(16):
                for ix in range(16):
                    assert b.grid[iy, ix] == (1.0 if g[iy, ix] > 0.05 else 0.0)


class TestTerrainRandomization:
    def test_identity_factors(self):
        scene = Scene(id="t", bounds=12.0, obstacles=[
            Obstacle("box", Pose(1.0, 2.0, 0.0, 0.1), (0.4, 0.4, 0.3))])
        assert warp_point(scene, 1.0, 2.0) == (1.0, 2.0)

    def test_obstacle_at_tile_center_is_fixed(self, monkeypatch):
        monkeypatch.setattr(W, "TILE_SCALE_LO", 1.25)
        monkeypatch.setattr(W, "TILE_SCALE_HI", 1.25)
        scene = Scene(id="t", bounds=12.0, obstacles=[
            Obstacle("box", Pose(0.0, 0.0, 0.0, 0.0), (0.4, 0.4, 0.3))])
        out = randomize_terrain(scene, np.random.default_rng(0))
        assert out.obstacles[0].pose.x == pytest.approx(0.0)
        assert out.obstacles[0].pose.y == pytest.approx(0.0)

    def test_offset_scales_about_tile_center(self, monkeypatch):
        monkeypatch.setattr(W, "TILE_SCALE_LO", 1.25)
        monkeypatch.setattr(W, "TILE_SCALE_HI", 1.25)
        scene = Scene(id="t", bounds=12.0, obstacles=[
            Obstacle("box", Pose(1.0, 0.0, 0.0, 0.0), (0.4, 0.4, 0.3))])
        out = randomize_terrain(scene, np.random.default_rng(0))
        assert out.obstacles[0].pose.x == pytest.approx(1.25)   # 1.0 m from center
        assert out.obstacles[0].dims == (0.4, 0.4, 0.3)

    def test_factors_in_range_and_recorded(self):
        scene = Scene(id="t", bounds=12.0)
        out = randomize_terrain(scene, np.random.default_rng(5))
        assert len(out.tiles) == 9
        assert all(0.75 <= s <= 1.25 for s in out.tiles)


class TestPushSchedule:
    def test_poisson_rate(self):
        sched = PushSchedule(np.random.default_rng(17))
        n = len(sched.events_until(10_000.0))
        assert abs(n - 10_000 / 3.0) < 200

    def test_magnitudes_bounded(self):
        sched = PushSchedule(np.random.default_rng(19))
        for t0, vx, vy in sched.events_until(1000.0):
            assert math.hypot(vx, vy) <= 0.5 + 1e-12

    def test_inactive_between_events(self):
        sched = PushSchedule(np.random.default_rng(23))
        events = sched.events_until(100.0)
        t = (events[0][0] + events[1][0] + 0.2) / 2.0
        if t >= events[1][0]:       # events too close; pick after the last
            t = events[-1][0] + 0.25
        d = sched.sample_push(t)
        assert not d.active
        assert not d.push_velocity.any()


class TestDistractors:
    def _scene(self):
        return Scene(id="t", bounds=12.0, obstacles=[
            Obstacle("box", Pose(0.0, 0.0, 0.0, 0.0), (0.8, 0.8, 0.5))])

    def test_zero_is_noop(self):
        scene = self._scene()
        out = place_distractors(scene, np.random.default_rng(1), 0)
        assert len(out.obstacles) == 1

    def test_count_increases(self):
        out = place_distractors(self._scene(), np.random.default_rng(1), 3)
        assert len(out.obstacles) == 4

    def test_no_footprint_overlap(self):
        # sampling oracle: no point of a distractor footprint lies inside a
        # task obstacle footprint (and vice versa)
        out = place_distractors(self._scene(), np.random.default_rng(2), 5)
        task = out.obstacles[0]
        rng = np.random.default_rng(3)
        for d in out.obstacles[1:]:
            for _ in range(500):
                ang = rng.uniform(0, 2 * math.pi)
                r = d.bound_radius * math.sqrt(rng.random())
                px, py = d.pose.x + r * math.cos(ang), d.pose.y + r * math.sin(ang)
                if d.contains_xy(px, py):
                    assert not task.contains_xy(px, py)

    def test_placement_failure(self):
        crowded = Scene(id="t", bounds=2.0, obstacles=[
            Obstacle("box", Pose(0.0, 0.0, 0.0, 0.0), (1.8, 1.8, 0.5))])
        with pytest.raises(W.PlacementError):
            place_distractors(crowded, np.random.default_rng(1), 3)


class TestSceneIO:
    def test_round_trip(self, tmp_path):
        scene = Scene(id="rt", bounds=12.0, obstacles=[
            Obstacle("box", Pose(1.0, -2.0, 0.0, 0.3), (0.4, 0.6, 0.25)),
            Obstacle("tire", Pose(-1.0, 0.5, 0.0, 0.0), (0.3, 0.35))])
        p = tmp_path / "scene.json"
        scene.save(p)
        back = Scene.load(p)
        assert back.id == scene.id and back.bounds == scene.bounds
        assert len(back.obstacles) == 2
        assert back.obstacles[0].dims == scene.obstacles[0].dims
        assert back.obstacles[0].pose == scene.obstacles[0].pose
