"""Session engine for the live teaching service.

One SessionState per websocket connection: a private world, a 10 Hz
command/record loop over 50 Hz tracker substeps, and mode-dependent control
(teach: the dragged rod is the goal and the local expert drives; deploy:
the loaded policy drives from synthesized commands).
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from .. import world
from ..data import DT, Demonstration, InteractionRecord, save as save_demos
from ..interaction import (KeypointSet, embed_verbal, encode_gesture,
                           pointing_posture, posture_names, posture_template)
from ..policy import (PolicyParams, assemble_observation, forward,
                      goal_to_world, local_expert)
from ..world import (NO_PUSH, Pose, RobotState, Scene, binarize, rasterize,
                     tracker_step, velocity_planner, wrap_angle)
from .models import (AckFrame, ClientFrame, ErrorFrame, HelloFrame, LureFrame,
                     ModeFrame, ObstacleOut, PointFrame, PostureFrame,
                     ResetFrame, RobotStateOut, SaveFrame, StateFrame,
                     VerbalFrame)

TRAIL_CAP = 600


class SessionState:
    def __init__(self, scene: Scene, model: Optional[PolicyParams] = None,
                 data_dir: str = "sessions", session_id: str = ""):
        self.scene = scene
        self.model = model
        self.data_dir = Path(data_dir)
        self.session_id = session_id or f"session-{int(time.time())}"
        self.mode = "teach"
        self.tick = 0
        self.start_pose = self._default_start()
        self.x = RobotState(pose=self.start_pose, standing=True)
        self.human_pose = self._default_human()
        self.posture = "neutral"
        self.point_target: Optional[np.ndarray] = None
        self.rod: Optional[np.ndarray] = None
        self.pending_text = ""
        self.verbal_embedding = np.zeros(64)
        self.trail: deque = deque(maxlen=TRAIL_CAP)
        self.records: list = []
        self.saved_paths: list = []

    def _default_start(self) -> Pose:
        return Pose(-self.scene.half() + 1.5, 0.0, 0.0, 0.0)

    def _default_human(self) -> Pose:
        y = self.scene.half() - 2.0
        return Pose(0.0, y, 0.0, -math.pi / 2)

    # ---- message handling ----

    def apply(self, frame: ClientFrame):
        if isinstance(frame, VerbalFrame):
            self.pending_text = frame.text
            self.verbal_embedding = embed_verbal(frame.text).embedding
            return AckFrame(of="verbal")
        if isinstance(frame, PointFrame):
            self.posture = "point"
            self.point_target = np.array([frame.target[0], frame.target[1], 0.0])
            return AckFrame(of="point")
        if isinstance(frame, PostureFrame):
            if frame.name != "point" and frame.name not in posture_names():
                return ErrorFrame(message=f"unknown posture {frame.name!r}")
            self.posture = frame.name
            return AckFrame(of="posture")
        if isinstance(frame, LureFrame):
            self.rod = np.array(frame.rod, dtype=float)
            return AckFrame(of="lure")
        if isinstance(frame, ModeFrame):
            if frame.value == "deploy" and self.model is None:
                return ErrorFrame(message="no model loaded; deploy unavailable")
            self.mode = frame.value
            return AckFrame(of="mode", detail=self.mode)
        if isinstance(frame, ResetFrame):
            self.flush_recording()
            self.x = RobotState(pose=self.start_pose, standing=True)
            self.tick = 0
            self.trail.clear()
            self.rod = None
            self.records = []
            return AckFrame(of="reset")
        if isinstance(frame, SaveFrame):
            path = self.save_recording()
            return AckFrame(of="save", detail=str(path) if path else "nothing to save")
        return ErrorFrame(message=f"unhandled frame {frame!r}")

    # ---- keypoint synthesis ----

    def _keypoints_world(self) -> KeypointSet:
        if self.posture == "point" and self.point_target is not None:
            c, s = math.cos(self.human_pose.yaw), math.sin(self.human_pose.yaw)
            ox = self.point_target[0] - self.human_pose.x
            oy = self.point_target[1] - self.human_pose.y
            local = np.array([c * ox + s * oy, -s * ox + c * oy, 0.0])
            kp = pointing_posture(local, arm="right" if local[1] <= 0 else "left")
        else:
            name = self.posture if self.posture != "point" else "neutral"
            kp = posture_template(name)
        return kp.transform(self.human_pose.x, self.human_pose.y,
                            self.human_pose.yaw)

    # ---- simulation ----

    def current_goal(self) -> Optional[np.ndarray]:
        if self.mode == "teach":
            return self.rod
        return None

    def tick_once(self) -> StateFrame:
        kp_world = self._keypoints_world()
        text = self.pending_text
        self.pending_text = ""
        if self.mode == "teach":
            goal = self.rod if self.rod is not None else np.array(
                [self.x.pose.x, self.x.pose.y, 0.0])
            self.records.append(InteractionRecord(
                t=self.tick * DT, x=self.x, keypoints=kp_world,
                verbal_text=text, g_star=goal.copy(), scene_id=self.scene.id))
            g_world = goal
        else:
            gesture = encode_gesture(kp_world.to_robot_frame(self.x.pose))
            bmap = binarize(rasterize(self.scene, self.x))
            obs = assemble_observation(gesture, self.verbal_embedding,
                                       bmap.grid, self.x)
            g_world = goal_to_world(self.x, forward(self.model, obs))
        v_com, phi_com = velocity_planner(g_world, self.x)
        for _ in range(world.SUBSTEPS):
            self.x = tracker_step(self.x, v_com, phi_com, world.DT_TRACKER,
                                  d=NO_PUSH, scene=self.scene)
        self.trail.append([self.x.pose.x, self.x.pose.y])
        self.tick += 1
        return self.state_frame(goal=g_world)

    def state_frame(self, goal=None) -> StateFrame:
        g = goal if goal is not None else self.current_goal()
        return StateFrame(
            t=self.tick * DT, tick=self.tick,
            robot=RobotStateOut(px=self.x.pose.x, py=self.x.pose.y,
                                pz=self.x.pose.z, yaw=self.x.pose.yaw,
                                speed=self.x.speed, standing=self.x.standing,
                                airborne=self.x.airborne),
            obstacles=[ObstacleOut(kind=o.kind, x=o.pose.x, y=o.pose.y,
                                   yaw=o.pose.yaw, dims=list(o.dims))
                       for o in self.scene.obstacles],
            goal=None if g is None else [float(v) for v in g],
            trail=[list(p) for p in self.trail],
            mode=self.mode, recording=self.mode == "teach")

    # ---- persistence ----

    def save_recording(self) -> Optional[Path]:
        if not self.records:
            return None
        self.data_dir.mkdir(parents=True, exist_ok=True)
        path = self.data_dir / f"{self.session_id}-{len(self.saved_paths)}.jsonl"
        demo = Demonstration(records=list(self.records), scenario="",
                             subject=self.session_id)
        save_demos(demo, path)
        self.saved_paths.append(path)
        self.records = []
        return path

    def flush_recording(self) -> None:
        if self.records:
            self.save_recording()
