"""Evaluation protocol: scenario success criteria, navigation error against
the recorded trajectory, the terrain x perturbation sweep, modality
ablations, and chained multi-obstacle courses."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import world
from .data import DT, Demonstration, ReplayHandle, segment_episodes
from .interaction import encode_gesture, perturb_keypoints
from .policy import (PolicyParams, assemble_observation, forward,
                     goal_to_world, local_expert)
from .scenarios import EVAL_SCENARIOS
from .training import _VerbalTracker
from .world import (NO_PUSH, PushSchedule, RobotState, Scene, binarize,
                    randomize_terrain, rasterize, tracker_step, velocity_planner)

MODES = ("both", "verbal_only", "gesture_only")
SUCCESS_RADIUS = 1.0       # final position tolerance, exclusive boundary
POINT_RADIUS = 0.2         # reference point tolerance, inclusive boundary
MIN_EPISODE_S = 1.5


@dataclass
class EvalConfig:
    terrains: int = 5
    robots: int = 20
    seed: int = 0
    mode: str = "both"
    pushes: bool = True
    oracle: bool = False
    timeout_factor: float = 2.0
    keypoint_sigma: float = 0.1   # natural gesture variability during replay


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray       # strictly increasing, 10 Hz
    xy: np.ndarray      # (n, 2) base positions
    z: np.ndarray
    yaw: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def final_xy(self) -> np.ndarray:
        return self.xy[-1]


def _gt_trajectory(replay: ReplayHandle) -> Trajectory:
    n = len(replay)
    t0 = replay.episode.records[0].t
    ts = np.array([r.t - t0 for r in replay.episode.records])
    xy = np.array([replay.base_xy(i) for i in range(n)])
    z = np.array([replay.episode.records[i].x.pose.z for i in range(n)])
    yaw = np.array([replay.episode.records[i].x.pose.yaw for i in range(n)])
    return Trajectory(ts, xy, z, yaw)


def run_episode(p: Optional[PolicyParams], episode: Demonstration, scene: Scene,
                cfg: EvalConfig, push_rng: Optional[np.random.Generator] = None,
                kp_rng: Optional[np.random.Generator] = None,
                initial_state: Optional[RobotState] = None) -> Trajectory:
    """Closed-loop clock replay of one episode.

    Commands follow record timestamps (no cueing); after the records run out
    the last command is held until the robot stands, up to the timeout.
    Replayed keypoints are re-perturbed per tick, mirroring the jitter of a
    live gesturing human.
    """
    replay = ReplayHandle(episode, scene)
    x = initial_state if initial_state is not None else replay.initial_state()
    goals = replay.goals()
    n = len(replay)
    pushes = PushSchedule(push_rng) if (cfg.pushes and push_rng is not None) else None
    verbal = _VerbalTracker(rng=None)     # replay texts verbatim
    mask_gesture = cfg.mode == "verbal_only"
    mask_verbal = cfg.mode == "gesture_only"
    max_ticks = max(n + 1, int(cfg.timeout_factor * n))
    ts, xys, zs, yaws = [], [], [], []
    seen = -1
    for tick in range(max_ticks):
        active = min(tick, n - 1)
        while seen < active:
            seen += 1
            verbal.update(replay.verbal(seen))
        ts.append(tick * DT)
        xys.append((x.pose.x, x.pose.y))
        zs.append(x.pose.z)
        yaws.append(x.pose.yaw)
        if tick >= n and (x.standing or tick >= max_ticks - 1):
            break
        if cfg.oracle or p is None:
            g_robot = local_expert(x, goals[active])
        else:
            kp = replay.keypoints(active)
            if kp_rng is not None and cfg.keypoint_sigma > 0:
                kp = perturb_keypoints(kp, kp_rng, cfg.keypoint_sigma)
            gesture = encode_gesture(kp.to_robot_frame(x.pose))
            bmap = binarize(rasterize(scene, x))
            obs = assemble_observation(gesture, verbal.embedding, bmap.grid, x,
                                       mask_gesture=mask_gesture,
                                       mask_verbal=mask_verbal)
            g_robot = forward(p, obs)
        g_world = goal_to_world(x, g_robot)
        v_com, phi_com = velocity_planner(g_world, x)
        for s in range(world.SUBSTEPS):
            t_sim = tick * DT + s * world.DT_TRACKER
            d = pushes.sample_push(t_sim) if pushes else NO_PUSH
            x = tracker_step(x, v_com, phi_com, world.DT_TRACKER, d=d, scene=scene)
    return Trajectory(np.array(ts), np.array(xys), np.array(zs), np.array(yaws))


def navigation_error(traj: Trajectory, gt: Trajectory) -> tuple:
    """(mean xy distance in m, mean squared distance in m^2) over the
    overlapping time span, both resampled to a common 10 Hz grid."""
    if len(traj) == 0 or len(gt) == 0:
        raise ValueError("empty trajectory")
    t0 = max(traj.t[0], gt.t[0])
    t1 = min(traj.t[-1], gt.t[-1])
    if t1 < t0:
        raise ValueError("trajectories do not overlap in time")
    ts = np.arange(0.0, t1 - t0 + 1e-9, DT) + t0
    ax = np.interp(ts, traj.t, traj.xy[:, 0])
    ay = np.interp(ts, traj.t, traj.xy[:, 1])
    bx = np.interp(ts, gt.t, gt.xy[:, 0])
    by = np.interp(ts, gt.t, gt.xy[:, 1])
    d2 = (ax - bx) ** 2 + (ay - by) ** 2
    return float(np.mean(np.sqrt(d2))), float(np.mean(d2))


def _min_dist(traj: Trajectory, point) -> float:
    d = traj.xy - np.asarray(point)[None, :2]
    return float(np.sqrt((d * d).sum(axis=1)).min())


def _box_frame(scene: Scene):
    boxes = [o for o in scene.task_obstacles() if o.kind == "box"]
    if not boxes:
        raise ValueError("scene has no box")
    box = boxes[0]
    c = np.array([box.pose.x, box.pose.y])
    axis = np.array([math.cos(box.pose.yaw), math.sin(box.pose.yaw)])
    perp = np.array([-axis[1], axis[0]])
    return box, c, axis, perp


def _zigzag_midpoints(scene: Scene) -> list:
    tires = [o for o in scene.task_obstacles() if o.kind == "tire"]
    if len(tires) < 2:
        raise ValueError("scene has no tire row")
    pts = [np.array([t.pose.x, t.pose.y]) for t in tires]
    spread = max(((i, j) for i in range(len(pts)) for j in range(len(pts))),
                 key=lambda ij: np.linalg.norm(pts[ij[0]] - pts[ij[1]]))
    d = pts[spread[1]] - pts[spread[0]]
    d = d / np.linalg.norm(d)
    pts.sort(key=lambda p: float(p @ d))
    return [(pts[i] + pts[i + 1]) / 2.0 for i in range(len(pts) - 1)], tires


def success(scenario: str, traj: Trajectory, episode: Demonstration,
            scene: Scene) -> bool:
    """Scenario-specific pass criterion against the (possibly warped) scene."""
    replay = ReplayHandle(episode, scene)
    if scenario in ("go_there", "come_here", "follow_me"):
        gt_final = np.array(replay.base_xy(len(replay) - 1))
        return float(np.linalg.norm(traj.final_xy() - gt_final)) < SUCCESS_RADIUS
    if scenario == "come_around":
        box, c, axis, perp = _box_frame(scene)
        gt = _gt_trajectory(replay)
        # which side the demonstration took while beside the box
        along_gt = (gt.xy - c) @ axis
        beside_gt = np.abs(along_gt) <= box.dims[0] / 2.0 + 0.3
        if not beside_gt.any():
            return False
        side = math.copysign(1.0, float(((gt.xy - c) @ perp)[beside_gt].mean()))
        along = (traj.xy - c) @ axis
        lat = (traj.xy - c) @ perp
        beside = np.abs(along) <= box.dims[0] / 2.0 + 0.1
        if beside.any() and float((lat[beside] * side).min()) <= 0.0:
            return False     # crossed the wrong half-plane beside the box
        entered = along.min() < -box.dims[0] / 2.0
        passed = along.max() > box.dims[0] / 2.0
        corridor = beside.any() and float((lat[beside] * side).max()) > 0.0
        return bool(entered and passed and corridor)
    if scenario == "jump_over":
        box, c, axis, _ = _box_frame(scene)
        refs = [c - 0.5 * axis, c, c + 0.5 * axis]
        return all(_min_dist(traj, r) <= POINT_RADIUS for r in refs)
    if scenario == "zigzag":
        mids, tires = _zigzag_midpoints(scene)
        if any(_min_dist(traj, m) > POINT_RADIUS for m in mids):
            return False
        grounded = traj.z < 1e-9
        for tire in tires:
            d = traj.xy - np.array([tire.pose.x, tire.pose.y])[None, :]
            inside = (np.sqrt((d * d).sum(axis=1)) < tire.dims[0] - 1e-9) & grounded
            if inside.any():
                return False
        return True
    if scenario == "stop":
        disp = np.linalg.norm(traj.xy - traj.xy[0][None, :], axis=1)
        return float(disp.max()) < POINT_RADIUS
    raise ValueError(f"no success criterion for scenario {scenario!r}")


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)   # one dict per run
    terrains: int = 5
    robots: int = 20
    seed: int = 0
    mode: str = "both"

    def add(self, **row) -> None:
        self.rows.append(row)

    def scenarios(self) -> list:
        return sorted({r["scenario"] for r in self.rows})

    def summary(self) -> dict:
        out = {}
        for sc in self.scenarios():
            rs = [r for r in self.rows if r["scenario"] == sc]
            out[sc] = {
                "success_rate": float(np.mean([r["success"] for r in rs])),
                "nav_error_m": float(np.mean([r["nav_error_m"] for r in rs])),
                "nav_mse_m2": float(np.mean([r["nav_mse_m2"] for r in rs])),
                "n_runs": len(rs),
            }
        return out

    def average_success(self) -> float:
        s = self.summary()
        return float(np.mean([v["success_rate"] for v in s.values()])) if s else 0.0

    def average_nav_error(self) -> float:
        s = self.summary()
        return float(np.mean([v["nav_error_m"] for v in s.values()])) if s else 0.0

    def runs_per_episode(self) -> dict:
        out: dict = {}
        for r in self.rows:
            out[r["episode"]] = out.get(r["episode"], 0) + 1
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["scenario", "mode", "success_rate", "nav_error_m",
                        "nav_mse_m2", "n_runs", "seed"])
            for sc, v in self.summary().items():
                w.writerow([sc, self.mode, f"{v['success_rate']:.4f}",
                            f"{v['nav_error_m']:.4f}", f"{v['nav_mse_m2']:.4f}",
                            v["n_runs"], self.seed])

    def runs_to_jsonl(self, path) -> None:
        with open(path, "w") as f:
            for r in self.rows:
                f.write(json.dumps(r) + "\n")


def eval_episodes(demos) -> list:
    """Segmented episodes worth scoring: known scenario, non-trivial length."""
    out = []
    for demo in demos:
        for seg in segment_episodes(demo):
            if seg.scenario in EVAL_SCENARIOS and len(seg.records) * DT >= MIN_EPISODE_S:
                out.append(seg)
    return out


def ablation_eval(p: Optional[PolicyParams], mode: str, demos, scene_db,
                  cfg: EvalConfig) -> EvalReport:
    """Terrain x perturbation sweep with a modality slice optionally zeroed."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    cfg = replace(cfg, mode=mode)
    episodes = eval_episodes(demos)
    report = EvalReport(terrains=cfg.terrains, robots=cfg.robots,
                        seed=cfg.seed, mode=mode)
    for uid, episode in enumerate(episodes):
        base_scene = scene_db.get(episode.scene_id)
        for tj in range(cfg.terrains):
            scene = randomize_terrain(
                base_scene, np.random.default_rng([cfg.seed, 3001, uid, tj]))
            replay = ReplayHandle(episode, scene)
            gt = _gt_trajectory(replay)
            for rk in range(cfg.robots):
                push_rng = np.random.default_rng([cfg.seed, 3002, uid, tj, rk])
                kp_rng = np.random.default_rng([cfg.seed, 3003, uid, tj, rk])
                traj = run_episode(p, episode, scene, cfg, push_rng=push_rng,
                                   kp_rng=kp_rng)
                ok = success(episode.scenario, traj, episode, scene)
                err, mse = navigation_error(traj, gt)
                report.add(episode=uid, scenario=episode.scenario,
                           terrain=tj, robot=rk, success=bool(ok),
                           nav_error_m=err, nav_mse_m2=mse,
                           duration_s=float(traj.t[-1]))
    return report


def evaluate(p: Optional[PolicyParams], demos, scene_db,
             cfg: Optional[EvalConfig] = None) -> EvalReport:
    """The full protocol: per episode, `terrains` randomized terrain
    instances x `robots` perturbation seeds."""
    cfg = cfg if cfg is not None else EvalConfig()
    return ablation_eval(p, "both", demos, scene_db, cfg)


def course_legs(demo: Demonstration, expected=("zigzag", "stop", "jump_over", "go_there")) -> list:
    """Match a course session's segmented episodes to the expected legs."""
    from .data import infer_scenario
    labeled = []
    for seg in segment_episodes(demo):
        labeled.append((infer_scenario(seg) or "stop", seg))
    legs = []
    i = 0
    for want in expected:
        while i < len(labeled) and labeled[i][0] != want:
            i += 1
        if i == len(labeled):
            raise ValueError(f"course session lacks a {want!r} leg")
        legs.append((want, labeled[i][1]))
        i += 1
    return legs


def run_course(p: Optional[PolicyParams], course, scene: Scene,
               cfg: Optional[EvalConfig] = None, repeats: int = 1) -> list:
    """Execute legs back-to-back without resetting the robot.

    `course` is a list of (scenario, episode) pairs sharing one scene.
    Returns one dict per repetition with per-leg trajectories and successes.
    """
    cfg = cfg if cfg is not None else EvalConfig(pushes=False)
    for _, ep in course:
        if ep.scene_id != scene.id:
            raise ValueError("course legs must share the course scene")
    results = []
    x = None
    for rep in range(repeats):
        legs = []
        for li, (scenario, episode) in enumerate(course):
            replay = ReplayHandle(episode, scene)
            if x is None:
                x = replay.initial_state()
            push_rng = (np.random.default_rng([cfg.seed, 4001, rep, li])
                        if cfg.pushes else None)
            kp_rng = np.random.default_rng([cfg.seed, 4002, rep, li])
            traj = run_episode(p, episode, scene, cfg, push_rng=push_rng,
                               kp_rng=kp_rng, initial_state=x)
            ok = success(scenario, traj, episode, scene)
            x = replace(x, pose=replace(
                x.pose, x=float(traj.xy[-1][0]), y=float(traj.xy[-1][1]),
                z=0.0, yaw=float(traj.yaw[-1])),
                speed=0.0, standing=True, airborne=False, jump=None)
            legs.append({"scenario": scenario, "success": bool(ok), "traj": traj})
        results.append({"repetition": rep, "legs": legs,
                        "all_legs_ok": all(l["success"] for l in legs)})
    return results
