import math

import numpy as np
import pytest

from lurekit import scenarios as S
from lurekit.data import ReplayHandle, SceneDB
from lurekit.evaluation import (EvalConfig, EvalReport, MODES, Trajectory,
                                ablation_eval, course_legs, eval_episodes,
                                evaluate, navigation_error, run_course,
                                run_episode, success, _gt_trajectory)
from lurekit.policy import (OBS_DIM, PolicyParams, SLICE_VERBAL, init_params)
from lurekit.world import Obstacle, Pose, Scene


def make_traj(points, dt=0.1):
    xy = np.array(points, dtype=float)
    n = len(xy)
    return Trajectory(t=np.arange(n) * dt, xy=xy, z=np.zeros(n), yaw=np.zeros(n))


@pytest.fixture(scope="module")
def world3():
    db = SceneDB()
    demos = []
    for scen in ("go_there", "jump_over", "zigzag"):
        scene = S.make_scene(scen, seed=6)
        db.add(scene)
        demos.append(S.collect_session(scen, scene, episodes=1, seed=6))
    return demos, db


class TestNavigationError:
    def test_identical_zero(self):
        t = make_traj([[0, 0], [1, 0], [2, 0]])
        err, mse = navigation_error(t, t)
        assert err == 0.0 and mse == 0.0

    def test_symmetric(self):
        a = make_traj([[0, 0], [1, 0], [2, 0], [3, 0]])
        b = make_traj([[0, 1], [1, 1], [2, 1]])
        ab = navigation_error(a, b)
        ba = navigation_error(b, a)
        assert ab == ba

    def test_constant_offset(self):
        a = make_traj([[i * 0.5, 0] for i in range(10)])
        b = make_traj([[i * 0.5, 0.3] for i in range(10)])
        err, mse = navigation_error(a, b)
        assert err == pytest.approx(0.3, abs=1e-9)
        assert mse == pytest.approx(0.09, abs=1e-9)

    def test_overlap_span_only(self):
        a = make_traj([[i, 0] for i in range(10)])
        b = make_traj([[i, 0] for i in range(5)])    # shorter ground truth
        err, _ = navigation_error(a, b)
        assert err == 0.0


class TestSuccessCriteria:
    def _episode(self, world3, scenario):
        demos, db = world3
        return next(e for e in eval_episodes(demos) if e.scenario == scenario)

    def test_final_position_boundary(self, world3):
        demos, db = world3
        ep = self._episode(world3, "go_there")
        scene = db.get(ep.scene_id)
        gt_final = np.array(ReplayHandle(ep, scene).base_xy(len(ep.records) - 1))
        inside = make_traj([gt_final + [0.99, 0.0]])
        outside = make_traj([gt_final + [1.01, 0.0]])
        at = make_traj([gt_final + [1.0 - 1e-6, 0.0]])
        beyond = make_traj([gt_final + [1.0 + 1e-6, 0.0]])
        assert success("go_there", inside, ep, scene)
        assert not success("go_there", outside, ep, scene)
        assert success("go_there", at, ep, scene)
        assert not success("go_there", beyond, ep, scene)

    def test_jump_reference_points(self, world3):
        demos, db = world3
        ep = self._episode(world3, "jump_over")
        scene = db.get(ep.scene_id)
        box = next(o for o in scene.task_obstacles() if o.kind == "box")
        c = np.array([box.pose.x, box.pose.y])
        ax = np.array([math.cos(box.pose.yaw), math.sin(box.pose.yaw)])
        perp = np.array([-ax[1], ax[0]])
        refs = [c - 0.5 * ax, c, c + 0.5 * ax]
        passing = make_traj([refs[0] + 0.19 * perp, refs[1] + 0.05 * perp,
                             refs[2] + 0.15 * perp])
        assert success("jump_over", passing, ep, scene)
        at = make_traj([refs[0] + (0.2 - 1e-6) * perp, refs[1], refs[2]])
        assert success("jump_over", at, ep, scene)        # inclusive boundary
        over = make_traj([refs[0] + (0.2 + 1e-6) * perp, refs[1], refs[2]])
        assert not success("jump_over", over, ep, scene)

    def test_zigzag_footprint_and_midpoints(self, world3):
        demos, db = world3
        ep = self._episode(world3, "zigzag")
        scene = db.get(ep.scene_id)
        tires = [o for o in scene.task_obstacles() if o.kind == "tire"]
        mids = []
        pts = sorted([np.array([t.pose.x, t.pose.y]) for t in tires],
                     key=lambda p: p[0])
        for i in range(len(pts) - 1):
            mids.append((pts[i] + pts[i + 1]) / 2.0)
        good = make_traj(mids)
        assert success("zigzag", good, ep, scene)
        stepped = make_traj(mids + [pts[0]])       # lands on a tire center
        assert not success("zigzag", stepped, ep, scene)
        missing = make_traj(mids[:-1])
        assert not success("zigzag", missing, ep, scene)

    def test_stop_displacement(self, world3):
        demos, db = world3
        ep = self._episode(world3, "go_there")
        scene = db.get(ep.scene_id)
        still = make_traj([[0, 0], [0.05, 0.05], [0.1, 0.0]])
        moved = make_traj([[0, 0], [0.3, 0.0]])
        assert success("stop", still, ep, scene)
        assert not success("stop", moved, ep, scene)

    def test_unknown_scenario(self, world3):
        demos, db = world3
        ep = self._episode(world3, "go_there")
        with pytest.raises(ValueError):
            success("moonwalk", make_traj([[0, 0]]), ep, db.get(ep.scene_id))


class TestRunEpisode:
    def test_zero_policy_holds_near_start(self, world3):
        demos, db = world3
        ep = eval_episodes(demos)[0]
        scene = db.get(ep.scene_id)
        p = init_params(0)
        for w in p.weights:
            w[:] = 0.0
        traj = run_episode(p, ep, scene, EvalConfig(pushes=False))
        start = np.array(ReplayHandle(ep, scene).base_xy(0))
        assert np.linalg.norm(traj.xy - start[None, :], axis=1).max() < 0.05

    def test_sample_count_tracks_duration(self, world3):
        demos, db = world3
        ep = eval_episodes(demos)[0]
        scene = db.get(ep.scene_id)
        traj = run_episode(None, ep, scene, EvalConfig(pushes=False, oracle=True))
        assert abs(len(traj) - len(ep.records)) <= 1

    def test_timeout_caps_runaway(self, world3):
        demos, db = world3
        ep = eval_episodes(demos)[0]
        scene = db.get(ep.scene_id)
        p = init_params(0)
        for w, b in zip(p.weights, p.biases):
            w[:] = 0.0
            b[:] = 0.0
        p.biases[-1][:] = [5.0, 0.0, 0.0]       # forever-forward policy
        traj = run_episode(p, ep, scene, EvalConfig(pushes=False))
        assert len(traj) <= 2 * len(ep.records) + 1


class TestEvaluateProtocol:
    def test_runs_per_episode(self, world3):
        demos, db = world3
        cfg = EvalConfig(terrains=2, robots=3, seed=1, oracle=True)
        rep = evaluate(None, demos, db, cfg)
        for ep_uid, n in rep.runs_per_episode().items():
            assert n == 2 * 3

    def test_bitwise_reproducible(self, world3):
        demos, db = world3
        cfg = EvalConfig(terrains=1, robots=2, seed=9, oracle=True)
        a = evaluate(None, demos, db, cfg)
        b = evaluate(None, demos, db, cfg)
        assert a.rows == b.rows

    def test_summary_equals_hand_average(self, world3):
        demos, db = world3
        rep = evaluate(None, demos, db, EvalConfig(terrains=1, robots=2, oracle=True))
        for sc, v in rep.summary().items():
            rows = [r for r in rep.rows if r["scenario"] == sc]
            assert v["success_rate"] == pytest.approx(
                sum(r["success"] for r in rows) / len(rows))
            assert v["nav_error_m"] == pytest.approx(
                sum(r["nav_error_m"] for r in rows) / len(rows))

    def test_report_csv(self, world3, tmp_path):
        demos, db = world3
        rep = evaluate(None, demos, db, EvalConfig(terrains=1, robots=1, oracle=True))
        out = tmp_path / "report.csv"
        rep.to_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("scenario,mode,success_rate")
        assert len(lines) == 1 + len(rep.scenarios())

    def test_oracle_bound(self, world3):
        demos, db = world3
        cfg = EvalConfig(terrains=1, robots=2, seed=3)
        oracle = evaluate(None, demos, db,
                          EvalConfig(terrains=1, robots=2, seed=3, oracle=True))
        learner = evaluate(init_params(1), demos, db, cfg)
        o, l = oracle.summary(), learner.summary()
        for sc in o:
            assert o[sc]["success_rate"] >= l[sc]["success_rate"]


class TestAblation:
    def test_both_equals_evaluate(self, world3):
        demos, db = world3
        cfg = EvalConfig(terrains=1, robots=1, seed=4, oracle=True)
        assert evaluate(None, demos, db, cfg).rows == \
            ablation_eval(None, "both", demos, db, cfg).rows

    def test_gesture_only_ignores_verbal(self, world3):
        demos, db = world3
        ep = eval_episodes(demos)[0]
        scene = db.get(ep.scene_id)
        # single-layer probe that only reads the verbal slice
        w = np.zeros((3, OBS_DIM))
        w[0, SLICE_VERBAL] = 1.0
        probe = PolicyParams([w], [np.zeros(3)])
        cfg_b = EvalConfig(pushes=False, mode="both", keypoint_sigma=0.0)
        cfg_g = EvalConfig(pushes=False, mode="gesture_only", keypoint_sigma=0.0)
        tb = run_episode(probe, ep, scene, cfg_b)
        tg = run_episode(probe, ep, scene, cfg_g)
        start = np.array(ReplayHandle(ep, scene).base_xy(0))
        assert np.linalg.norm(tg.xy - start[None, :], axis=1).max() < 0.05
        assert np.linalg.norm(tb.xy - start[None, :], axis=1).max() > 0.1

    def test_unknown_mode(self, world3):
        demos, db = world3
        with pytest.raises(ValueError):
            ablation_eval(None, "telepathy", demos, db, EvalConfig())


class TestCourse:
    def test_course_runs_in_order(self):
        demo, scene = S.collect_course_session(seed=31)
        legs = course_legs(demo)
        assert [s for s, _ in legs] == ["zigzag", "stop", "jump_over", "go_there"]
        res = run_course(None, legs, scene,
                         cfg=EvalConfig(pushes=False, oracle=True), repeats=2)
        assert len(res) == 2
        assert all(r["all_legs_ok"] for r in res)

    def test_stop_leg_small_displacement(self):
        demo, scene = S.collect_course_session(seed=31)
        legs = course_legs(demo)
        res = run_course(None, legs, scene,
                         cfg=EvalConfig(pushes=False, oracle=True), repeats=1)
        stop_leg = next(l for l in res[0]["legs"] if l["scenario"] == "stop")
        disp = np.linalg.norm(stop_leg["traj"].xy - stop_leg["traj"].xy[0], axis=1)
        assert disp.max() < 0.2

    def test_scene_mismatch_rejected(self, world3):
        demos, db = world3
        demo, scene = S.collect_course_session(seed=31)
        other = db.get(demos[0].scene_id)
        with pytest.raises(ValueError):
            run_course(None, course_legs(demo), other)
