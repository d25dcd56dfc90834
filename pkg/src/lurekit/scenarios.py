"""Scenario catalog: scene factories, the scripted luring human, and
synthetic demonstration collection.

Collection mirrors a live teaching session: the scripted human issues a
command on each phase entry, parks the intended goal (the virtual rod), and
advances to the next phase once the robot gets there; the local expert plus
tracker drive the robot toward each goal while everything is logged at 10 Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import world
from .data import DT, Demonstration, InteractionRecord
from .interaction import (KeypointSet, posture_template, pointing_posture,
                          sample_paraphrase, paraphrase_table)
from .policy import local_expert
from .world import Obstacle, Pose, RobotState, Scene, velocity_planner, tracker_step, wrap_angle

SCENARIOS = ("stop", "go_there", "come_here", "follow_me",
             "come_around", "jump_over", "zigzag")
EVAL_SCENARIOS = ("go_there", "come_here", "follow_me",
                  "come_around", "jump_over", "zigzag")

COLLECT_REACH = 0.15        # m, the human advances phases at this radius
HUMAN_WALK_SPEED = 0.5      # m/s, follow-me legs
FOLLOW_OFFSET = 0.7         # m, lateral offset beside the human
WAVE_FREQ = 1.2             # Hz, overhead wave oscillation
WAVE_AMPLITUDE = 0.2        # m
KP_JITTER = 0.01            # m, per-tick sensor jitter baked into demos
BOUNDS = 12.0


class ScenarioSceneError(ValueError):
    """Scene lacks the obstacle a scenario script needs."""


@dataclass
class UserStyle:
    """How a particular user gestures and phrases commands."""
    posture_rotation: float = 0.0          # rad, yaw bias on all postures
    paraphrase_table: str = "paraphrases"

    def table(self) -> dict:
        return paraphrase_table(self.paraphrase_table)


DEFAULT_STYLE = UserStyle()


@dataclass
class _Phase:
    posture: str                 # template name, "point", or "wave"
    command: Optional[str]       # command id announced on entry
    goal: str                    # "static" | "robot" | "beside_human"
    target: Optional[np.ndarray] = None      # static goal / pointing target
    arm: str = "right"
    dwell: float = 0.8           # min seconds before the phase may end
    reach: float = COLLECT_REACH
    settle: int = 3              # consecutive in-reach ticks before advancing
    human_waypoint: Optional[np.ndarray] = None   # follow-me leg end


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 1e-12 else np.array([1.0, 0.0])


def _find_box(scene: Scene) -> Obstacle:
    boxes = [o for o in scene.task_obstacles() if o.kind == "box"]
    if not boxes:
        raise ScenarioSceneError("scenario needs a box in the scene")
    return boxes[0]


def _find_tires(scene: Scene) -> list:
    tires = [o for o in scene.task_obstacles() if o.kind == "tire"]
    if len(tires) < 2:
        raise ScenarioSceneError("scenario needs at least two tires")
    return tires


def make_scene(scenario: str, seed: int, bounds: float = BOUNDS) -> Scene:
    """Scene template for one scenario family."""
    if scenario not in SCENARIOS and scenario != "course":
        raise ScenarioSceneError(f"unknown scenario {scenario!r}")
    rng = np.random.default_rng([seed, 101])
    scene = Scene(id=f"{scenario}-{seed}", bounds=bounds)
    if scenario == "come_around":
        yaw = rng.uniform(-0.3, 0.3)
        depth = rng.uniform(0.55, 0.7)
        width = rng.uniform(0.9, 1.2)
        scene.obstacles.append(Obstacle(
            "box", Pose(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0, yaw),
            (depth, width, 0.55)))
    elif scenario == "jump_over":
        yaw = rng.uniform(-0.25, 0.25)
        depth = rng.uniform(0.30, 0.36)
        width = rng.uniform(1.3, 1.7)
        h = rng.uniform(0.22, 0.28)
        scene.obstacles.append(Obstacle(
            "box", Pose(rng.uniform(-0.4, 0.6), rng.uniform(-0.6, 0.6), 0.0, yaw),
            (depth, width, h)))
    elif scenario == "zigzag":
        yaw = rng.uniform(-0.25, 0.25)
        d = np.array([math.cos(yaw), math.sin(yaw)])
        spacing = rng.uniform(1.3, 1.5)
        offs = (np.arange(4) - 1.5) * spacing
        for o in offs:
            c = o * d + rng.normal(0.0, 0.05, size=2)
            scene.obstacles.append(Obstacle(
                "tire", Pose(float(c[0]), float(c[1]), 0.0, 0.0),
                (rng.uniform(0.29, 0.33), rng.uniform(0.34, 0.40))))
    elif scenario == "course":
        d = np.array([1.0, 0.0])
        for i, o in enumerate((np.arange(4) - 1.5) * 1.4):
            c = np.array([o, 2.0])
            scene.obstacles.append(Obstacle(
                "tire", Pose(float(c[0]), float(c[1]), 0.0, 0.0), (0.31, 0.36)))
        scene.obstacles.append(Obstacle(
            "box", Pose(1.6, -1.2, 0.0, math.pi / 2), (0.33, 1.5, 0.25)))
    return scene


def session_start(scenario: str, scene: Scene, rng: np.random.Generator) -> RobotState:
    """Robot pose opening a collection session for this scenario."""
    if scenario == "come_around" or scenario == "jump_over":
        box = _find_box(scene)
        axis = np.array([math.cos(box.pose.yaw), math.sin(box.pose.yaw)])
        dist = rng.uniform(1.8, 2.4) if scenario == "jump_over" else rng.uniform(2.0, 2.6)
        lat = rng.uniform(-0.4, 0.4)
        perp = np.array([-axis[1], axis[0]])
        p = np.array([box.pose.x, box.pose.y]) - dist * axis + lat * perp
        yaw = math.atan2(box.pose.y - p[1], box.pose.x - p[0])
    elif scenario == "zigzag":
        tires = _find_tires(scene)
        a = np.array([tires[0].pose.x, tires[0].pose.y])
        b = np.array([tires[-1].pose.x, tires[-1].pose.y])
        d = _unit(b - a)
        p = a - d * rng.uniform(1.5, 1.9) + np.array([-d[1], d[0]]) * rng.uniform(-0.25, 0.25)
        yaw = math.atan2(d[1], d[0])
    else:
        p = np.array([rng.uniform(-3.6, -2.6), rng.uniform(-1.4, 1.4)])
        yaw = rng.uniform(-0.5, 0.5)
    return RobotState(pose=Pose(float(p[0]), float(p[1]), 0.0, wrap_angle(yaw)),
                      standing=True)


class SyntheticHuman:
    """Scripted teacher for one episode: postures, phrasing, and goals."""

    def __init__(self, scenario: str, scene: Scene, x0: RobotState,
                 rng: np.random.Generator, style: UserStyle = DEFAULT_STYLE,
                 human_pose: Optional[Pose] = None,
                 target: Optional[np.ndarray] = None,
                 brief_stop: bool = False):
        if scenario not in SCENARIOS:
            raise ScenarioSceneError(f"unknown scenario {scenario!r}")
        self.brief_stop = brief_stop
        self.scenario = scenario
        self.scene = scene
        self.style = style
        self.rng = rng
        self.target = target
        self.phase_idx = 0
        self.ticks_in_phase = 0
        self._settled = 0
        robot_xy = np.array([x0.pose.x, x0.pose.y])
        self.phases, self.human_xy, self.human_yaw = self._script(
            scenario, scene, x0, rng, human_pose)
        self._entry_robot_xy = robot_xy

    # ---- episode scripts ----

    def _script(self, scenario, scene, x0, rng, human_pose):
        rxy = np.array([x0.pose.x, x0.pose.y])
        heading = np.array([math.cos(x0.pose.yaw), math.sin(x0.pose.yaw)])
        lim = scene.half() - 1.0

        def clamp(p):
            return np.clip(p, -lim, lim)

        idle = _Phase("neutral", None, "robot", dwell=float(rng.uniform(0.6, 1.0)))
        stop_dwell = 0.1 if self.brief_stop else float(rng.uniform(0.9, 1.3))
        stop = _Phase("raise_both", "stop", "robot", dwell=stop_dwell)

        if scenario == "stop":
            if human_pose is None:
                hp = clamp(rxy + 2.0 * heading + rng.normal(0, 0.5, 2))
            else:
                hp = np.array([human_pose.x, human_pose.y])
            phases = [idle, stop]
        elif scenario == "go_there":
            ang = x0.pose.yaw + rng.uniform(-0.9, 0.9)
            dist = rng.uniform(1.8, 2.8)
            if self.target is not None:
                target = np.asarray(self.target[:2], dtype=float)
            else:
                target = clamp(rxy + dist * np.array([math.cos(ang), math.sin(ang)]))
            hp = clamp(rxy + np.array([-heading[1], heading[0]]) *
                       rng.uniform(1.0, 1.6) * rng.choice([-1.0, 1.0])
                       + rng.normal(0, 0.3, 2))
            phases = [idle,
                      _Phase("point", "go_there", "static",
                             target=np.array([target[0], target[1], 0.0])),
                      stop]
        elif scenario == "come_here":
            ang = x0.pose.yaw + rng.uniform(-1.0, 1.0)
            hp = clamp(rxy + rng.uniform(2.0, 3.0) *
                       np.array([math.cos(ang), math.sin(ang)]))
            toward = _unit(rxy - hp)
            g = hp + 0.5 * toward
            phases = [idle,
                      _Phase("neutral", "come_here", "static",
                             target=np.array([g[0], g[1], 0.0])),
                      stop]
        elif scenario == "follow_me":
            side = float(rng.choice([-1.0, 1.0]))   # +1: human's left hand
            hp = clamp(rxy + heading * rng.uniform(1.5, 2.1) + rng.normal(0, 0.3, 2))
            posture = "raise_left" if side > 0 else "raise_right"
            wp, cur = [], hp.copy()
            ang = x0.pose.yaw + rng.uniform(-0.4, 0.4)
            for _ in range(2):
                ang += rng.uniform(-0.7, 0.7)
                cur = clamp(cur + rng.uniform(1.4, 2.2) *
                            np.array([math.cos(ang), math.sin(ang)]))
                wp.append(cur.copy())
            phases = [idle,
                      _Phase(posture, "follow_me", "beside_human", arm="left" if side > 0 else "right",
                             human_waypoint=wp[0], reach=0.8),
                      _Phase(posture, None, "beside_human", arm="left" if side > 0 else "right",
                             human_waypoint=wp[1], reach=0.8),
                      stop]
        elif scenario == "come_around":
            box = _find_box(scene)
            bc = np.array([box.pose.x, box.pose.y])
            axis = _unit(bc - rxy)
            perp = np.array([-axis[1], axis[0]])
            side = float(rng.choice([-1.0, 1.0]))
            hp = clamp(bc + axis * (box.dims[0] / 2.0 + rng.uniform(1.2, 1.7)))
            lat = box.bound_radius + rng.uniform(0.55, 0.8)
            waypoint = bc + side * lat * perp
            front = hp + _unit(rxy - hp) * 0.55
            posture = "sweep_left" if side > 0 else "sweep_right"
            phases = [idle,
                      _Phase(posture, "come_around", "static",
                             target=np.array([waypoint[0], waypoint[1], 0.0]),
                             reach=0.3),
                      _Phase(posture, None, "static",
                             target=np.array([front[0], front[1], 0.0])),
                      stop]
        elif scenario == "jump_over":
            box = _find_box(scene)
            bc = np.array([box.pose.x, box.pose.y])
            bx = np.array([math.cos(box.pose.yaw), math.sin(box.pose.yaw)])
            sgn = 1.0 if float(np.dot(bx, bc - rxy)) >= 0.0 else -1.0
            axis = bx * sgn
            perp = np.array([-axis[1], axis[0]])
            hp = clamp(bc + perp * rng.uniform(1.1, 1.4) * rng.choice([-1.0, 1.0]))
            pts = [bc - 1.4 * axis, bc - 0.5 * axis, bc, bc + 0.5 * axis]
            phases = [idle]
            for j, p in enumerate(pts):
                phases.append(_Phase(
                    "wave", "jump_over" if j == 0 else None, "static",
                    target=np.array([p[0], p[1], 0.0]),
                    reach=0.2 if j == 2 else COLLECT_REACH,
                    dwell=0.3))
            phases.append(stop)
        elif scenario == "zigzag":
            tires = _find_tires(scene)
            centers = [np.array([t.pose.x, t.pose.y]) for t in tires]
            a, b = centers[0], centers[-1]
            if np.linalg.norm(rxy - a) > np.linalg.norm(rxy - b):
                centers = centers[::-1]
                a, b = b, a
            mids = [(centers[i] + centers[i + 1]) / 2.0 for i in range(len(centers) - 1)]
            exit_pt = clamp(centers[-1] + _unit(centers[-1] - centers[0]) * 1.0)
            hp = clamp(centers[-1] + _unit(centers[-1] - centers[0]) * 1.3
                       + rng.normal(0, 0.4, 2))
            phases = [idle]
            for j, m in enumerate(mids):
                phases.append(_Phase("point", "zigzag" if j == 0 else None,
                                     "static", target=np.array([m[0], m[1], 0.0]),
                                     dwell=1.5 if j == 0 else 0.2, settle=6))
            phases.append(_Phase("point", None, "static",
                                 target=np.array([exit_pt[0], exit_pt[1], 0.0]),
                                 dwell=0.2))
            phases.append(stop)
        else:
            raise ScenarioSceneError(scenario)

        if scenario != "stop" and human_pose is not None:
            hp = np.array([human_pose.x, human_pose.y])
        if scenario in ("go_there", "zigzag"):
            # a pointing human naturally faces where they point
            first = next(p.target for p in phases if p.target is not None)
            yaw = math.atan2(first[1] - hp[1], first[0] - hp[0])
        else:
            yaw = math.atan2(rxy[1] - hp[1], rxy[0] - hp[0])   # face the robot
        return phases, hp, yaw

    # ---- per-tick output ----

    def _posture(self, phase: _Phase, x: RobotState, t: float, g: np.ndarray) -> KeypointSet:
        if phase.posture == "point":
            target = phase.target if phase.target is not None else g
            local = self._world_to_human(np.array([target[0], target[1], 0.0]))
            arm = "right" if local[1] <= 0 else "left"
            kp = pointing_posture(local, arm=arm)
        elif phase.posture == "wave":
            kp = posture_template("raise_right")
            dy = WAVE_AMPLITUDE * math.sin(2.0 * math.pi * WAVE_FREQ * t)
            wr = kp.wr_r.copy()
            wr[1] += dy
            kp = replace(kp, wr_r=wr)
        else:
            kp = posture_template(phase.posture)
        if self.style.posture_rotation:
            kp = kp.transform(0.0, 0.0, self.style.posture_rotation)
        return kp.transform(self.human_xy[0], self.human_xy[1], self.human_yaw)

    def _world_to_human(self, p: np.ndarray) -> np.ndarray:
        c, s = math.cos(self.human_yaw), math.sin(self.human_yaw)
        ox, oy = p[0] - self.human_xy[0], p[1] - self.human_xy[1]
        return np.array([c * ox + s * oy, -s * ox + c * oy, p[2]])

    def _goal(self, phase: _Phase, x: RobotState) -> np.ndarray:
        if phase.goal == "static":
            return phase.target.copy()
        if phase.goal == "robot":
            if phase.target is None:
                phase.target = np.array([x.pose.x, x.pose.y, 0.0])
            return phase.target.copy()
        if phase.goal == "beside_human":
            side = 1.0 if phase.arm == "left" else -1.0
            c, s = math.cos(self.human_yaw), math.sin(self.human_yaw)
            off = FOLLOW_OFFSET * np.array([-s, c]) * side
            return np.array([self.human_xy[0] + off[0],
                             self.human_xy[1] + off[1], 0.0])
        raise ValueError(phase.goal)

    def _advance_ready(self, phase: _Phase, x: RobotState, g: np.ndarray) -> bool:
        if self.ticks_in_phase * DT < phase.dwell:
            return False
        if phase.goal == "robot":
            return True
        if phase.human_waypoint is not None:
            if np.linalg.norm(self.human_xy - phase.human_waypoint) > 0.05:
                return False
        if math.hypot(x.pose.x - g[0], x.pose.y - g[1]) <= phase.reach:
            self._settled += 1
        else:
            self._settled = 0
        return self._settled > phase.settle

    def step(self, x: RobotState, t: float) -> tuple:
        """(world keypoints, verbal text, world goal) for one 10 Hz tick."""
        phase = self.phases[self.phase_idx]
        entry = self.ticks_in_phase == 0
        # walk toward the current leg waypoint (follow-me)
        if phase.human_waypoint is not None and not entry:
            d = phase.human_waypoint - self.human_xy
            n = np.linalg.norm(d)
            if n > 1e-9:
                step = min(HUMAN_WALK_SPEED * DT, n)
                self.human_xy = self.human_xy + d / n * step
                self.human_yaw = math.atan2(d[1], d[0])
        g = self._goal(phase, x)
        text = ""
        if entry and phase.command is not None:
            text = sample_paraphrase(phase.command, self.rng, table=self.style.table())
        kp = self._posture(phase, x, t, g)
        if KP_JITTER > 0:
            kp = KeypointSet.from_flat(
                kp.flat() + self.rng.normal(0.0, KP_JITTER, 18), kp.phi_h)
        self.ticks_in_phase += 1
        if self.phase_idx < len(self.phases) - 1 and self._advance_ready(phase, x, g):
            self.phase_idx += 1
            self.ticks_in_phase = 0
            self._settled = 0
        return kp, text, g

    def done(self, x: RobotState) -> bool:
        last = self.phase_idx == len(self.phases) - 1
        return last and self.ticks_in_phase * DT >= self.phases[-1].dwell


def synth_human_step(scenario: str, phase: int, x: RobotState, scene: Scene,
                     human_pose: Optional[Pose], rng: np.random.Generator,
                     style: UserStyle = DEFAULT_STYLE) -> tuple:
    """One-shot view of a scripted episode at a given phase index."""
    h = SyntheticHuman(scenario, scene, x, rng, style, human_pose=human_pose)
    if phase < 0 or phase >= len(h.phases):
        raise ScenarioSceneError(f"phase {phase} out of range for {scenario}")
    h.phase_idx = phase
    h.ticks_in_phase = 0
    return h.step(x, t=0.0)


COURSE_LEGS = ("zigzag", "stop", "jump_over", "go_there")


def collect_course_session(seed: int, subject: str = "",
                           style: UserStyle = DEFAULT_STYLE,
                           scene: Optional[Scene] = None) -> tuple:
    """One continuous session running the 4-leg obstacle course once:
    weave the tires, stop, jump the box, and return to the start."""
    scene = scene if scene is not None else make_scene("course", seed)
    rng = np.random.default_rng([seed, 77])
    x = session_start("zigzag", scene, rng)
    start_xy = np.array([x.pose.x, x.pose.y, 0.0])
    records = []
    tick = 0
    for leg in COURSE_LEGS:
        target = start_xy if leg == "go_there" else None
        human = SyntheticHuman(leg, scene, x, rng, style, target=target)
        while not human.done(x) and tick < 4000:
            t = tick * DT
            kp, text, g = human.step(x, t)
            records.append(InteractionRecord(
                t=t, x=x, keypoints=kp, verbal_text=text,
                g_star=g.copy(), scene_id=scene.id))
            v_com, phi_com = velocity_planner(g, x)
            for _ in range(world.SUBSTEPS):
                x = tracker_step(x, v_com, phi_com, world.DT_TRACKER, scene=scene)
            tick += 1
    return Demonstration(records=records, scenario="course", subject=subject), scene


def collect_session(scenario: str, scene: Scene, episodes: int, seed: int,
                    subject: str = "", style: UserStyle = DEFAULT_STYLE,
                    max_episode_s: float = 40.0) -> Demonstration:
    """Record a teaching session of several episodes at 10 Hz.

    The handler re-places the robot at a fresh start pose between episodes
    (the session clock keeps running), so every episode approaches its task
    from a scenario-typical configuration.
    """
    if episodes < 1:
        raise ValueError("need at least one episode")
    rng = np.random.default_rng([seed, SCENARIOS.index(scenario)])
    records = []
    tick = 0
    for _ in range(episodes):
        x = session_start(scenario, scene, rng)
        human = SyntheticHuman(scenario, scene, x, rng, style, brief_stop=True)
        ep_ticks = 0
        while not human.done(x) and ep_ticks < int(max_episode_s / DT):
            t = tick * DT
            kp, text, g = human.step(x, t)
            records.append(InteractionRecord(
                t=t, x=x, keypoints=kp, verbal_text=text,
                g_star=g.copy(), scene_id=scene.id))
            v_com, phi_com = velocity_planner(g, x)
            for _ in range(world.SUBSTEPS):
                x = tracker_step(x, v_com, phi_com, world.DT_TRACKER, scene=scene)
            tick += 1
            ep_ticks += 1
    return Demonstration(records=records, scenario=scenario, subject=subject)
