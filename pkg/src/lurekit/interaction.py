"""Gesture and verbal command encoding, augmentation, and goal cueing."""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .world import Pose, RobotState, wrap_angle

GESTURE_DIM = 18
VERBAL_DIM = 64
REACH_RADIUS = 0.3

COMMAND_IDS = ("stop", "go_there", "come_here", "follow_me",
               "come_around", "jump_over", "zigzag")

_KP_NAMES = ("sh_r", "el_r", "wr_r", "sh_l", "el_l", "wr_l")


class DegenerateGestureError(ValueError):
    """Adjacent keypoints coincide; no direction can be extracted."""


class UnknownCommandError(KeyError):
    """Command id not present in the paraphrase table."""


@dataclass(frozen=True)
class KeypointSet:
    """Six upper-body keypoints plus the human's yaw.

    Coordinates are plain 3-vectors; whether they live in the world or the
    robot frame depends on where the set came from (datasets store world
    coordinates, the encoder expects robot-frame ones).
    """
    sh_r: np.ndarray
    el_r: np.ndarray
    wr_r: np.ndarray
    sh_l: np.ndarray
    el_l: np.ndarray
    wr_l: np.ndarray
    phi_h: float = 0.0

    def points(self) -> list:
        return [getattr(self, n) for n in _KP_NAMES]

    def flat(self) -> np.ndarray:
        return np.concatenate([np.asarray(p, dtype=float) for p in self.points()])

    @classmethod
    def from_flat(cls, v: Sequence[float], phi_h: float) -> "KeypointSet":
        a = np.asarray(v, dtype=float).reshape(6, 3)
        return cls(*(a[i].copy() for i in range(6)), phi_h=float(phi_h))

    def transform(self, dx: float, dy: float, dyaw: float) -> "KeypointSet":
        """Rotate xy by dyaw then translate; z and arm shapes ride along."""
        c, s = math.cos(dyaw), math.sin(dyaw)

        def tp(p):
            return np.array([c * p[0] - s * p[1] + dx,
                             s * p[0] + c * p[1] + dy, p[2]])

        pts = [tp(np.asarray(p, dtype=float)) for p in self.points()]
        return KeypointSet(*pts, phi_h=wrap_angle(self.phi_h + dyaw))

    def to_robot_frame(self, robot: Pose) -> "KeypointSet":
        """Express world-frame keypoints relative to the robot base."""
        c, s = math.cos(robot.yaw), math.sin(robot.yaw)

        def tp(p):
            ox, oy = p[0] - robot.x, p[1] - robot.y
            return np.array([c * ox + s * oy, -s * ox + c * oy, p[2]])

        pts = [tp(np.asarray(p, dtype=float)) for p in self.points()]
        return KeypointSet(*pts, phi_h=wrap_angle(self.phi_h - robot.yaw))

    def validate(self) -> None:
        flat = self.flat()
        if not np.all(np.isfinite(flat)) or not math.isfinite(self.phi_h):
            raise DegenerateGestureError("non-finite keypoints")
        for a, b in ((self.sh_r, self.el_r), (self.el_r, self.wr_r),
                     (self.sh_l, self.el_l), (self.el_l, self.wr_l)):
            if np.linalg.norm(np.asarray(a) - np.asarray(b)) <= 1e-6:
                raise DegenerateGestureError("coincident adjacent keypoints")


@dataclass(frozen=True)
class VerbalCommand:
    text: str
    embedding: np.ndarray


@dataclass
class CueState:
    record_index: int = 0
    hold_active: bool = False
    reach_radius: float = REACH_RADIUS


def encode_gesture(k: KeypointSet) -> np.ndarray:
    """18-dim gesture feature: five unit limb directions, shoulder midpoint
    ground projection, and the human yaw."""
    k.validate()
    pairs = ((k.sh_r, k.el_r), (k.el_r, k.wr_r),
             (k.sh_l, k.el_l), (k.el_l, k.wr_l), (k.sh_l, k.sh_r))
    dirs = []
    for a, b in pairs:
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        n = np.linalg.norm(d)
        if n <= 1e-6:
            raise DegenerateGestureError("coincident shoulders")
        dirs.append(d / n)
    mid = (np.asarray(k.sh_l, dtype=float) + np.asarray(k.sh_r, dtype=float))[:2] / 2.0
    return np.concatenate(dirs + [mid, [k.phi_h]])


def perturb_keypoints(k: KeypointSet, rng: np.random.Generator,
                      sigma: float = 0.1) -> KeypointSet:
    """Gaussian position noise on every coordinate; yaw untouched."""
    if sigma == 0.0:
        return k
    noise = rng.normal(0.0, sigma, size=18)
    return KeypointSet.from_flat(k.flat() + noise, k.phi_h)


_WORD_RE = re.compile(r"[^a-z0-9 ]+")


def _normalize_text(text: str) -> str:
    return " ".join(_WORD_RE.sub(" ", text.lower()).split())


def _trigram_bucket(tri: str) -> tuple:
    h = int.from_bytes(hashlib.blake2b(tri.encode("utf-8"), digest_size=8).digest(), "big")
    return h % VERBAL_DIM, 1.0 if (h >> 7) & 1 else -1.0


def embed_verbal(text: str) -> VerbalCommand:
    """Deterministic 64-dim embedding: signed character-trigram counts,
    L2-normalized. Empty text maps to the zero vector."""
    norm = _normalize_text(text)
    vec = np.zeros(VERBAL_DIM)
    if norm:
        padded = f" {norm} "
        for i in range(len(padded) - 2):
            b, sign = _trigram_bucket(padded[i:i + 3])
            vec[b] += sign
        n = np.linalg.norm(vec)
        if n > 0:
            vec /= n
    return VerbalCommand(text=text, embedding=vec)


def _load_asset(name: str) -> dict:
    with resources.files("lurekit.assets").joinpath(name).open() as f:
        return json.load(f)


_TABLES: dict = {}


def paraphrase_table(name: str = "paraphrases") -> dict:
    if name not in _TABLES:
        _TABLES[name] = _load_asset(f"{name}.json")
    return _TABLES[name]


def sample_paraphrase(canonical: str, rng: np.random.Generator,
                      table: Optional[dict] = None) -> str:
    table = table if table is not None else paraphrase_table()
    if canonical not in table:
        raise UnknownCommandError(canonical)
    options = table[canonical]
    return options[int(rng.integers(len(options)))]


_CANON: dict = {}


def canonical_command(text: str) -> Optional[str]:
    """Map any known paraphrase (either shipped table) to its command id."""
    if not _CANON:
        for name in ("paraphrases", "paraphrases_alt"):
            for cmd, phrases in paraphrase_table(name).items():
                for p in phrases:
                    _CANON[_normalize_text(p)] = cmd
    return _CANON.get(_normalize_text(text))


_POSTURES: dict = {}


def posture_template(name: str) -> KeypointSet:
    """Canonical keypoint template in the human-local frame."""
    if not _POSTURES:
        _POSTURES.update(_load_asset("postures.json"))
    if name not in _POSTURES:
        raise KeyError(f"unknown posture {name!r}")
    t = _POSTURES[name]
    return KeypointSet(*(np.array(t[n], dtype=float) for n in _KP_NAMES), phi_h=0.0)


def posture_names() -> list:
    posture_template("neutral")
    return sorted(_POSTURES)


def pointing_posture(target_local: Sequence[float], arm: str = "right") -> KeypointSet:
    """One arm extended from the shoulder through the target point.

    The pointed location is recoverable as the ground intersection of the
    shoulder-to-wrist ray.
    """
    base = posture_template("neutral")
    sh = base.sh_r if arm == "right" else base.sh_l
    d = np.asarray(target_local, dtype=float) - sh
    n = np.linalg.norm(d)
    if n <= 1e-6:
        raise DegenerateGestureError("pointing target at the shoulder")
    d = d / n
    el, wr = sh + 0.30 * d, sh + 0.58 * d
    if arm == "right":
        return replace(base, el_r=el, wr_r=wr)
    return replace(base, el_l=el, wr_l=wr)


def pointed_ground_target(k: KeypointSet, arm: str = "right") -> Optional[np.ndarray]:
    """Ground point the shoulder-to-wrist ray hits, if it points downhill."""
    sh = np.asarray(k.sh_r if arm == "right" else k.sh_l, dtype=float)
    wr = np.asarray(k.wr_r if arm == "right" else k.wr_l, dtype=float)
    d = wr - sh
    if d[2] >= -1e-6:
        return None
    t = -sh[2] / d[2]
    return (sh + t * d)[:2]


def _xy_dist(x: RobotState, g: Sequence[float]) -> float:
    return math.hypot(x.pose.x - float(g[0]), x.pose.y - float(g[1]))


def cue_step(cs: CueState, x: RobotState, goals, clock_index: int,
             rng: Optional[np.random.Generator], hold_prob: float) -> CueState:
    """Advance the active record index by clock or by goal progress.

    On every tick where the clock runs ahead, a Bernoulli(hold_prob) draw
    decides between cueing (hold the current command; advance one record
    once its goal is within reach) and letting the interaction advance one
    record on the clock's schedule regardless. The index therefore waits
    for a struggling robot about half the time at hold_prob 0.5, without
    ever stalling indefinitely; hold_prob == 1 holds until the goal is
    reached and hold_prob == 0 short-circuits to exact clock replay without
    consuming randomness.
    """
    if clock_index < cs.record_index:
        raise ValueError("clock behind the active record")
    if clock_index == cs.record_index:
        return replace(cs, hold_active=False)
    if hold_prob <= 0.0:
        return replace(cs, record_index=clock_index, hold_active=False)
    if hold_prob >= 1.0 or (rng is not None and rng.random() < hold_prob):
        g = goals[cs.record_index]
        if _xy_dist(x, g) <= cs.reach_radius:
            return replace(cs, record_index=cs.record_index + 1, hold_active=False)
        return replace(cs, hold_active=True)
    return replace(cs, record_index=min(cs.record_index + 1, clock_index),
                   hold_active=False)
