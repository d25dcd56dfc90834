"""Recording, persistence and reconstruction of interaction sessions.

Files are JSON lines, one 10 Hz record per line, with global-frame
coordinates throughout. Scenes are stored separately by id and rasterized
on demand during replay.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .interaction import KeypointSet, canonical_command
from .world import Pose, RobotState, Scene, warp_point

DT = 0.1
_DT_TOL = 1e-6
_GAP_MIN = 0.5   # a jump this large starts a new session in the same file


class DatasetFormatError(ValueError):
    """Malformed record line; carries the 1-based line number."""

    def __init__(self, line_no: int, msg: str):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


class IntegrityError(ValueError):
    """Timestamps regress or break the 10 Hz spacing."""

    def __init__(self, line_no: int, msg: str):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


class UnknownSceneError(KeyError):
    pass


@dataclass(frozen=True)
class InteractionRecord:
    t: float
    x: RobotState
    keypoints: KeypointSet          # world frame
    verbal_text: str
    g_star: np.ndarray              # world frame, 3-vector
    scene_id: str

    def to_json(self, scenario: str = "", subject: str = "") -> str:
        x = self.x
        d = {
            "t": self.t,
            "x": {"px": x.pose.x, "py": x.pose.y, "pz": x.pose.z,
                  "yaw": x.pose.yaw, "speed": x.speed, "yaw_rate": x.yaw_rate,
                  "standing": x.standing, "airborne": x.airborne},
            "kp": [float(v) for v in self.keypoints.flat()],
            "phi_h": self.keypoints.phi_h,
            "verbal": self.verbal_text,
            "g_star": [float(v) for v in self.g_star],
            "scene_id": self.scene_id,
        }
        if scenario:
            d["scenario"] = scenario
        if subject:
            d["subject"] = subject
        return json.dumps(d)

    @classmethod
    def from_dict(cls, d: dict) -> "InteractionRecord":
        x = d["x"]
        state = RobotState(
            pose=Pose(float(x["px"]), float(x["py"]), float(x["pz"]), float(x["yaw"])),
            speed=float(x["speed"]), yaw_rate=float(x["yaw_rate"]),
            standing=bool(x["standing"]), airborne=bool(x["airborne"]))
        kp = d["kp"]
        if len(kp) != 18:
            raise ValueError("kp must hold 18 floats")
        g = d["g_star"]
        if len(g) != 3:
            raise ValueError("g_star must hold 3 floats")
        return cls(t=float(d["t"]), x=state,
                   keypoints=KeypointSet.from_flat(kp, float(d["phi_h"])),
                   verbal_text=str(d["verbal"]),
                   g_star=np.array([float(v) for v in g]),
                   scene_id=str(d["scene_id"]))


@dataclass
class Demonstration:
    records: list
    scenario: str = ""
    subject: str = ""

    def __post_init__(self):
        if not self.records:
            raise ValueError("demonstration must hold at least one record")
        ids = {r.scene_id for r in self.records}
        if len(ids) != 1:
            raise ValueError(f"mixed scene ids in one demonstration: {ids}")

    @property
    def scene_id(self) -> str:
        return self.records[0].scene_id

    def duration(self) -> float:
        return self.records[-1].t - self.records[0].t + DT


def save(demos, path) -> None:
    """Write demonstrations as JSON lines; t must not regress across them."""
    if isinstance(demos, Demonstration):
        demos = [demos]
    lines = []
    last_t = -math.inf
    for d in demos:
        for r in d.records:
            if r.t < last_t:
                raise IntegrityError(len(lines) + 1, "timestamp regression across demos")
            last_t = r.t
            lines.append(r.to_json(scenario=d.scenario, subject=d.subject))
    Path(path).write_text("".join(line + "\n" for line in lines))


def append_record(fh, record: InteractionRecord,
                  scenario: str = "", subject: str = "") -> None:
    fh.write(record.to_json(scenario=scenario, subject=subject) + "\n")
    fh.flush()


def load(path) -> list:
    """Parse a JSON-lines file into demonstrations.

    A new demonstration starts at a scene/scenario/subject change or a
    timestamp gap; within one, spacing must be 0.1 s and nondecreasing.
    """
    demos = []
    cur: list = []
    cur_meta = ("", "")
    prev_t: Optional[float] = None

    def flush():
        if cur:
            demos.append(Demonstration(records=list(cur),
                                       scenario=cur_meta[0], subject=cur_meta[1]))
            cur.clear()

    with open(path) as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                rec = InteractionRecord.from_dict(d)
            except (ValueError, KeyError, TypeError) as e:
                raise DatasetFormatError(line_no, str(e)) from e
            meta = (str(d.get("scenario", "")), str(d.get("subject", "")))
            if prev_t is not None and rec.t < prev_t - _DT_TOL:
                raise IntegrityError(line_no, f"timestamp regressed to {rec.t}")
            boundary = (
                not cur
                or rec.scene_id != cur[-1].scene_id
                or meta != cur_meta
                or rec.t - cur[-1].t >= _GAP_MIN
            )
            if boundary:
                flush()
                cur_meta = meta
            elif abs(rec.t - cur[-1].t - DT) > _DT_TOL:
                raise IntegrityError(line_no, f"spacing {rec.t - cur[-1].t:.6f} != 0.1")
            cur.append(rec)
            prev_t = rec.t
    flush()
    return demos


def infer_scenario(d: Demonstration) -> str:
    """Scenario id from the first recognizable non-stop command."""
    for r in d.records:
        if r.verbal_text:
            cmd = canonical_command(r.verbal_text)
            if cmd and cmd != "stop":
                return cmd
    return ""


def segment_episodes(d: Demonstration) -> list:
    """Split at records whose command canonicalizes to "stop"; each stop
    record closes the preceding segment."""
    segments = []
    start = 0
    for i, r in enumerate(d.records):
        if r.verbal_text and canonical_command(r.verbal_text) == "stop":
            seg = d.records[start:i + 1]
            if seg:
                segments.append(seg)
            start = i + 1
    if start < len(d.records):
        segments.append(d.records[start:])
    out = []
    for seg in segments:
        ep = Demonstration(records=seg, scenario=d.scenario, subject=d.subject)
        if not ep.scenario:
            ep.scenario = infer_scenario(ep)
        out.append(ep)
    return out


class SceneDB:
    """Scene lookup by id, backed by a directory of scene JSON files."""

    def __init__(self, scenes=()):
        self._scenes = {s.id: s for s in scenes}

    @classmethod
    def from_dir(cls, path) -> "SceneDB":
        db = cls()
        for p in sorted(Path(path).glob("*.json")):
            db.add(Scene.load(p))
        return db

    def add(self, scene: Scene) -> None:
        self._scenes[scene.id] = scene

    def __contains__(self, scene_id: str) -> bool:
        return scene_id in self._scenes

    def get(self, scene_id: str) -> Scene:
        if scene_id not in self._scenes:
            raise UnknownSceneError(scene_id)
        return self._scenes[scene_id]

    def ids(self) -> list:
        return sorted(self._scenes)


class ReplayHandle:
    """Per-record (keypoints, verbal, goal) access for the cue controller.

    When the scene carries non-identity tile factors, all recorded world
    points (keypoints, goals, base poses) are warped through them so the
    replay stays geometrically consistent with the randomized terrain.
    """

    def __init__(self, episode: Demonstration, scene: Scene):
        self.episode = episode
        self.scene = scene
        self._identity = all(abs(t - 1.0) < 1e-12 for t in scene.tiles)

    def __len__(self) -> int:
        return len(self.episode.records)

    def _warp_xy(self, x: float, y: float) -> tuple:
        if self._identity:
            return x, y
        return warp_point(self.scene, x, y)

    def keypoints(self, i: int) -> KeypointSet:
        kp = self.episode.records[i].keypoints
        if self._identity:
            return kp
        pts = []
        for p in kp.points():
            wx, wy = self._warp_xy(p[0], p[1])
            pts.append(np.array([wx, wy, p[2]]))
        return KeypointSet(*pts, phi_h=kp.phi_h)

    def verbal(self, i: int) -> str:
        return self.episode.records[i].verbal_text

    def goal(self, i: int) -> np.ndarray:
        g = self.episode.records[i].g_star
        wx, wy = self._warp_xy(float(g[0]), float(g[1]))
        return np.array([wx, wy, float(g[2])])

    def goals(self) -> list:
        return [self.goal(i) for i in range(len(self))]

    def base_xy(self, i: int) -> tuple:
        p = self.episode.records[i].x.pose
        return self._warp_xy(p.x, p.y)

    def initial_state(self) -> RobotState:
        x = self.episode.records[0].x
        wx, wy = self._warp_xy(x.pose.x, x.pose.y)
        return replace(x, pose=replace(x.pose, x=wx, y=wy, z=0.0),
                       airborne=False, jump=None)

    def __getitem__(self, i: int) -> tuple:
        return self.keypoints(i), self.verbal(i), self.goal(i)


def reconstruct_scene(d: Demonstration, scene_db) -> tuple:
    """Scene plus a replay handle for a recorded demonstration."""
    scene = scene_db.get(d.scene_id) if hasattr(scene_db, "get") else scene_db[d.scene_id]
    if scene is None:
        raise UnknownSceneError(d.scene_id)
    return scene, ReplayHandle(d, scene)
