"""2.5-D deterministic world: scenes, heightmaps, velocity planner and tracker.

Fixed-step simulation at 50 Hz; navigation commands arrive at 10 Hz. All
randomness flows through explicit numpy Generators so runs are reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

# Tracker command ranges and rates.
V_MAX = 1.0                 # m/s
W_MAX = math.pi / 3.0       # rad/s
V_STAND = 0.1               # m/s, below this the robot stands
DT_TRACKER = 0.02           # 50 Hz integrator step
DT_RECORD = 0.1             # 10 Hz command/logging period
SUBSTEPS = 5                # tracker steps per command tick

# Planner defaults.
K_PLANNER = 1.0             # 1/s
K_PHI = 1.0                 # 1/s, rotation command to yaw rate

# Scripted jump proxy.
D_JUMP = 0.4                # m, trigger lookahead along heading
T_JUMP = 0.6                # s, ballistic segment duration
H_JUMP_MAX = 0.30           # m, max jumpable obstacle height
JUMP_APEX_CLEAR = 0.15      # m above obstacle top at apex
JUMP_LAND_MARGIN = 0.15     # m past the far edge at landing

# Heightmap window.
HMAP_WINDOW = 4.0           # m, square side, robot-centered
HMAP_RESOLUTION = 0.1       # m/cell
H_THRES = 0.05              # m, binary obstacle map threshold

# Domain randomization.
TILE_SCALE_LO = 0.75
TILE_SCALE_HI = 1.25
TILE_GRID = 3
PUSH_MEAN_INTERVAL = 3.0    # s
PUSH_MAG_MAX = 0.5          # m/s
PUSH_DURATION = 0.2         # s


class InvalidInputError(ValueError):
    """Non-finite or out-of-contract input to a world operation."""


class PlacementError(RuntimeError):
    """Free-space placement failed after the rejection-sample budget."""


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class Pose:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    yaw: float = 0.0

    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class JumpState:
    """Progress through a scripted ballistic segment."""
    t: float            # elapsed flight time
    duration: float
    vx: float
    vy: float
    apex: float


@dataclass(frozen=True)
class RobotState:
    pose: Pose = field(default_factory=Pose)
    speed: float = 0.0
    yaw_rate: float = 0.0
    standing: bool = True
    airborne: bool = False
    jump: Optional[JumpState] = None

    def replace_pose(self, **kw) -> "RobotState":
        return replace(self, pose=replace(self.pose, **kw))


OBSTACLE_KINDS = ("box", "tire", "distractor_square", "distractor_circle")
_RECT_KINDS = ("box", "distractor_square")


@dataclass(frozen=True)
class Obstacle:
    kind: str
    pose: Pose
    dims: tuple  # box/square: (w, l, h); tire/circle: (radius, h)

    def __post_init__(self):
        if self.kind not in OBSTACLE_KINDS:
            raise InvalidInputError(f"unknown obstacle kind {self.kind!r}")
        if any(d <= 0 for d in self.dims):
            raise InvalidInputError("obstacle dims must be positive")

    @property
    def height(self) -> float:
        return self.dims[-1]

    @property
    def is_rect(self) -> bool:
        return self.kind in _RECT_KINDS

    @property
    def jumpable(self) -> bool:
        return self.height <= H_JUMP_MAX

    @property
    def bound_radius(self) -> float:
        """Radius of the footprint's bounding circle."""
        if self.is_rect:
            return math.hypot(self.dims[0], self.dims[1]) / 2.0
        return self.dims[0]

    def contains_xy(self, x: float, y: float) -> bool:
        dx, dy = x - self.pose.x, y - self.pose.y
        if not self.is_rect:
            return math.hypot(dx, dy) < self.dims[0]
        c, s = math.cos(self.pose.yaw), math.sin(self.pose.yaw)
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        return abs(lx) < self.dims[0] / 2.0 and abs(ly) < self.dims[1] / 2.0

    def penetration_xy(self, x: float, y: float) -> float:
        """Depth of the point inside the footprint (0 when outside)."""
        dx, dy = x - self.pose.x, y - self.pose.y
        if not self.is_rect:
            return max(0.0, self.dims[0] - math.hypot(dx, dy))
        c, s = math.cos(self.pose.yaw), math.sin(self.pose.yaw)
        lx = c * dx + s * dy
        ly = -s * dx + c * dy
        px = self.dims[0] / 2.0 - abs(lx)
        py = self.dims[1] / 2.0 - abs(ly)
        if px <= 0.0 or py <= 0.0:
            return 0.0
        return min(px, py)


@dataclass
class Scene:
    id: str
    bounds: float                        # side of the square arena, centered at origin
    obstacles: list = field(default_factory=list)
    tiles: tuple = (1.0,) * (TILE_GRID * TILE_GRID)

    def half(self) -> float:
        return self.bounds / 2.0

    def task_obstacles(self) -> list:
        return [o for o in self.obstacles if not o.kind.startswith("distractor")]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "bounds_m": self.bounds,
            "obstacles": [
                {"kind": o.kind, "x": o.pose.x, "y": o.pose.y,
                 "yaw": o.pose.yaw, "dims": list(o.dims)}
                for o in self.obstacles
            ],
            "tiles": list(self.tiles),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        obstacles = [
            Obstacle(kind=o["kind"], pose=Pose(o["x"], o["y"], 0.0, o["yaw"]),
                     dims=tuple(o["dims"]))
            for o in d.get("obstacles", [])
        ]
        tiles = tuple(d.get("tiles", [1.0] * (TILE_GRID * TILE_GRID)))
        if len(tiles) != TILE_GRID * TILE_GRID:
            raise InvalidInputError("tiles must hold 9 scale factors")
        return cls(id=d["id"], bounds=float(d["bounds_m"]),
                   obstacles=obstacles, tiles=tiles)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "Scene":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Heightmap:
    origin: tuple        # (x0, y0) of the grid's lower-left corner, robot frame
    resolution: float
    grid: np.ndarray     # shape (H, W), grid[iy, ix], heights in meters


@dataclass(frozen=True)
class BinaryMap:
    origin: tuple
    resolution: float
    grid: np.ndarray     # same geometry as the source heightmap, values {0, 1}


@dataclass(frozen=True)
class Disturbance:
    push_velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    active: bool = False


NO_PUSH = Disturbance()


class PushSchedule:
    """Poisson push process: events every ~3 s, each held for 0.2 s.

    Event times, magnitudes and directions are drawn once from the supplied
    generator, in order, so a schedule is a pure function of its seed.
    """

    def __init__(self, rng: np.random.Generator,
                 mean_interval: float = PUSH_MEAN_INTERVAL,
                 mag_max: float = PUSH_MAG_MAX,
                 duration: float = PUSH_DURATION):
        self._rng = rng
        self._mean = mean_interval
        self._mag_max = mag_max
        self.duration = duration
        self._events: list = []   # (t_start, vx, vy)
        self._horizon = 0.0

    def _extend(self, t: float) -> None:
        while self._horizon <= t:
            gap = self._rng.exponential(self._mean)
            self._horizon += gap
            mag = self._rng.uniform(0.0, self._mag_max)
            ang = self._rng.uniform(0.0, 2.0 * math.pi)
            self._events.append((self._horizon, mag * math.cos(ang), mag * math.sin(ang)))

    def sample_push(self, t: float) -> Disturbance:
        self._extend(t)
        for t0, vx, vy in reversed(self._events):
            if t0 > t:
                continue
            if t < t0 + self.duration:
                return Disturbance(np.array([vx, vy]), True)
            break
        return NO_PUSH

    def events_until(self, t: float) -> list:
        self._extend(t)
        return [e for e in self._events if e[0] <= t]


def velocity_planner(goal: Sequence[float], x: RobotState,
                     k: float = K_PLANNER) -> tuple:
    """Heading velocity and rotation command toward a world-frame goal.

    v_com is the clamped proportional speed toward the goal's ground
    projection; phi_com is the goal bearing in the robot frame.
    """
    if k <= 0:
        raise InvalidInputError("planner gain must be positive")
    gx, gy = float(goal[0]), float(goal[1])
    vals = (gx, gy, x.pose.x, x.pose.y, x.pose.yaw)
    if not all(math.isfinite(v) for v in vals):
        raise InvalidInputError("non-finite planner input")
    dx, dy = gx - x.pose.x, gy - x.pose.y
    dist = math.hypot(dx, dy)
    v_com = min(k * dist, V_MAX)
    if dist == 0.0:
        return 0.0, 0.0
    c, s = math.cos(x.pose.yaw), math.sin(x.pose.yaw)
    phi_com = math.atan2(-s * dx + c * dy, c * dx + s * dy)
    if phi_com == -math.pi:
        phi_com = math.pi
    return v_com, phi_com


def _ray_footprint_span(obs: Obstacle, px: float, py: float,
                        hx: float, hy: float) -> Optional[tuple]:
    """(entry, exit) distances where the heading ray crosses the footprint."""
    if obs.is_rect:
        c, s = math.cos(obs.pose.yaw), math.sin(obs.pose.yaw)
        ox, oy = px - obs.pose.x, py - obs.pose.y
        lx, ly = c * ox + s * oy, -s * ox + c * oy
        ldx, ldy = c * hx + s * hy, -s * hx + c * hy
        tmin, tmax = -math.inf, math.inf
        for p0, d, half in ((lx, ldx, obs.dims[0] / 2.0), (ly, ldy, obs.dims[1] / 2.0)):
            if abs(d) < 1e-12:
                if abs(p0) > half:
                    return None
                continue
            t1, t2 = (-half - p0) / d, (half - p0) / d
            if t1 > t2:
                t1, t2 = t2, t1
            tmin, tmax = max(tmin, t1), min(tmax, t2)
        if tmin > tmax or tmax < 0.0:
            return None
        return max(tmin, 0.0), tmax
    ox, oy = obs.pose.x - px, obs.pose.y - py
    proj = ox * hx + oy * hy
    perp2 = ox * ox + oy * oy - proj * proj
    r2 = obs.dims[0] ** 2
    if perp2 >= r2:
        return None
    half_chord = math.sqrt(r2 - perp2)
    t1, t2 = proj - half_chord, proj + half_chord
    if t2 < 0.0:
        return None
    return max(t1, 0.0), t2


def _find_jump(x: RobotState, v_com: float, scene: Scene) -> Optional[tuple]:
    """Nearest jumpable obstacle ahead whose far edge the command reaches."""
    hx, hy = math.cos(x.pose.yaw), math.sin(x.pose.yaw)
    best = None
    for obs in scene.obstacles:
        span = _ray_footprint_span(obs, x.pose.x, x.pose.y, hx, hy)
        if span is None or span[0] > D_JUMP:
            continue
        if best is None or span[0] < best[1][0]:
            best = (obs, span)
    if best is None:
        return None
    obs, (near, far) = best
    if not obs.jumpable:
        return None
    # Proxy for "goal beyond the far edge": the commanded speed, in planner
    # units (K = 1), must reach at least that far.
    if v_com < far:
        return None
    length = far + JUMP_LAND_MARGIN
    for _ in range(10):
        land = (x.pose.x + hx * length, x.pose.y + hy * length)
        if not any(o.contains_xy(*land) for o in scene.obstacles):
            return obs, length
        length += 0.05
    return None


AVOID_LOOKAHEAD = 0.7      # m, steer around blockers inside this range
AVOID_MARGIN = 0.14        # m, clearance beyond the footprint


def _avoid_heading(x: RobotState, v_com: float, phi_com: float,
                   scene: Scene) -> float:
    """Steer the commanded bearing to the tangent of a blocking obstacle.

    Deterministic local negotiation: when the commanded ray meets a
    non-jumpable footprint before the goal, the bearing shifts to the nearer
    tangent of its clearance circle (ties break by which side of the ray the
    obstacle center lies on).
    """
    bearing = wrap_angle(x.pose.yaw + phi_com)
    hx, hy = math.cos(bearing), math.sin(bearing)
    best = None
    for obs in scene.obstacles:
        if obs.jumpable:
            continue
        span = _ray_footprint_span(obs, x.pose.x, x.pose.y, hx, hy)
        if span is None or span[0] > AVOID_LOOKAHEAD or span[0] <= 1e-9:
            continue
        if v_com <= span[0]:       # goal lies before the obstacle
            continue
        if best is None or span[0] < best[1]:
            best = (obs, span[0])
    if best is None:
        return phi_com
    obs = best[0]
    cx, cy = obs.pose.x - x.pose.x, obs.pose.y - x.pose.y
    d = math.hypot(cx, cy)
    r_eff = obs.bound_radius + AVOID_MARGIN
    if d <= r_eff:                 # already inside the clearance ring: slide
        return phi_com
    ang_c = math.atan2(cy, cx)
    spread = math.asin(min(r_eff / d, 1.0))
    side = -(hx * cy - hy * cx)    # steer away from the obstacle center
    if side == 0.0:
        side = 1.0
    tangent = ang_c + math.copysign(spread, side)
    return wrap_angle(tangent - x.pose.yaw)


def _resolve_collisions(px: float, py: float, z: float,
                        scene: Scene) -> tuple:
    """Push the base point out of any footprint it penetrates."""
    eps = 1e-7
    for _ in range(4):
        hit = None
        for obs in scene.obstacles:
            if z >= obs.height:
                continue
            if obs.contains_xy(px, py):
                hit = obs
                break
        if hit is None:
            break
        dx, dy = px - hit.pose.x, py - hit.pose.y
        if hit.is_rect:
            c, s = math.cos(hit.pose.yaw), math.sin(hit.pose.yaw)
            lx, ly = c * dx + s * dy, -s * dx + c * dy
            hw, hl = hit.dims[0] / 2.0, hit.dims[1] / 2.0
            if hw - abs(lx) <= hl - abs(ly):
                lx = math.copysign(hw + eps, lx if lx != 0.0 else 1.0)
            else:
                ly = math.copysign(hl + eps, ly if ly != 0.0 else 1.0)
            px = hit.pose.x + c * lx - s * ly
            py = hit.pose.y + s * lx + c * ly
        else:
            r = math.hypot(dx, dy)
            if r < 1e-12:
                dx, dy, r = 1.0, 0.0, 1.0
            scale = (hit.dims[0] + eps) / r
            px = hit.pose.x + dx * scale
            py = hit.pose.y + dy * scale
    return px, py


def tracker_step(x: RobotState, v_com: float, phi_com: float, dt: float,
                 d: Disturbance = NO_PUSH,
                 scene: Optional[Scene] = None) -> RobotState:
    """Advance the base one integrator step under a velocity command.

    Unicycle update with a stand threshold, a scripted ballistic jump over
    low obstacles ahead, and sliding (never penetrating) contact against
    everything else.
    """
    if dt <= 0:
        raise InvalidInputError("dt must be positive")
    scene = scene if scene is not None else Scene(id="", bounds=100.0)
    pose = x.pose
    push = d.push_velocity if d.active else np.zeros(2)

    if x.airborne and x.jump is not None:
        j = x.jump
        t_new = j.t + dt
        if t_new < j.duration - 1e-12:
            frac = t_new / j.duration
            z = 4.0 * j.apex * frac * (1.0 - frac)
            return replace(
                x,
                pose=Pose(pose.x + j.vx * dt, pose.y + j.vy * dt, z, pose.yaw),
                speed=min(math.hypot(j.vx, j.vy), V_MAX),
                yaw_rate=0.0, standing=False, airborne=True,
                jump=replace(j, t=t_new),
            )
        # touch down exactly at the segment end
        rem = j.duration - j.t
        px, py = pose.x + j.vx * rem, pose.y + j.vy * rem
        px, py = _resolve_collisions(px, py, 0.0, scene)
        return replace(
            x, pose=Pose(px, py, 0.0, pose.yaw),
            speed=min(math.hypot(j.vx, j.vy), V_MAX),
            yaw_rate=0.0, standing=False, airborne=False, jump=None,
        )

    v_com = min(max(v_com, 0.0), V_MAX)
    standing = v_com < V_STAND

    if standing:
        px = pose.x + push[0] * dt
        py = pose.y + push[1] * dt
        px, py = _resolve_collisions(px, py, 0.0, scene)
        return replace(x, pose=Pose(px, py, 0.0, pose.yaw),
                       speed=0.0, yaw_rate=0.0, standing=True,
                       airborne=False, jump=None)

    jump = _find_jump(x, v_com, scene)
    if jump is not None:
        # the leap centers its chord on the obstacle (mildly clamped around
        # the current heading), so launch alignment error does not carry
        # through the whole ballistic segment
        to_c = math.atan2(jump[0].pose.y - pose.y, jump[0].pose.x - pose.x)
        aim = wrap_angle(pose.yaw + max(-0.5, min(0.5, wrap_angle(to_c - pose.yaw))))
        hx, hy = math.cos(aim), math.sin(aim)
        span = _ray_footprint_span(jump[0], pose.x, pose.y, hx, hy)
        length = (span[1] if span is not None else jump[1] - JUMP_LAND_MARGIN) \
            + JUMP_LAND_MARGIN
        vj = length / T_JUMP
        apex = jump[0].height + JUMP_APEX_CLEAR
        frac = dt / T_JUMP
        z = 4.0 * apex * frac * (1.0 - frac)
        return replace(
            x,
            pose=Pose(pose.x + hx * vj * dt, pose.y + hy * vj * dt, z, aim),
            speed=min(vj, V_MAX), yaw_rate=0.0, standing=False, airborne=True,
            jump=JumpState(t=dt, duration=T_JUMP, vx=hx * vj, vy=hy * vj, apex=apex),
        )

    phi_steer = _avoid_heading(x, v_com, phi_com, scene)
    w = max(-W_MAX, min(W_MAX, K_PHI * phi_steer))
    yaw_new = wrap_angle(pose.yaw + w * dt)
    # Slow down to turn: forward speed scales with command alignment; while
    # skirting an obstacle keep walking pace instead of crawling the tangent.
    if phi_steer != phi_com:
        speed = v_com * max(math.cos(phi_steer), 0.5)
    else:
        speed = v_com * max(math.cos(phi_com), 0.0)
    hx, hy = math.cos(yaw_new), math.sin(yaw_new)
    dx = hx * speed * dt + push[0] * dt
    dy = hy * speed * dt + push[1] * dt
    px, py = _resolve_collisions(pose.x + dx, pose.y + dy, 0.0, scene)

    # Head-on contact leaves no tangential motion; nudge sideways so the
    # base walks around the obstacle instead of grinding in place.
    progress = math.hypot(px - pose.x, py - pose.y)
    intended = math.hypot(dx, dy)
    if intended > 1e-9 and progress < 0.25 * intended:
        nx, ny = (px - pose.x - dx), (py - pose.y - dy)
        nn = math.hypot(nx, ny)
        if nn > 1e-12:
            tx, ty = -ny / nn, nx / nn
            side = tx * dx + ty * dy
            sgn = 1.0 if side >= 0.0 else -1.0
            qx = pose.x + sgn * tx * intended
            qy = pose.y + sgn * ty * intended
            px, py = _resolve_collisions(qx, qy, 0.0, scene)

    return replace(x, pose=Pose(px, py, 0.0, yaw_new),
                   speed=speed, yaw_rate=w, standing=False,
                   airborne=False, jump=None)


def rasterize(scene: Scene, x: RobotState,
              window: float = HMAP_WINDOW,
              resolution: float = HMAP_RESOLUTION) -> Heightmap:
    """Robot-centered, yaw-aligned heightmap sampled at cell centers."""
    if window <= 0 or resolution <= 0:
        raise InvalidInputError("window and resolution must be positive")
    n = int(round(window / resolution))
    x0 = -window / 2.0
    centers = x0 + (np.arange(n) + 0.5) * resolution
    lx, ly = np.meshgrid(centers, centers)          # (n, n), [iy, ix]
    c, s = math.cos(x.pose.yaw), math.sin(x.pose.yaw)
    wx = x.pose.x + c * lx - s * ly
    wy = x.pose.y + s * lx + c * ly
    grid = np.zeros((n, n))
    for obs in scene.obstacles:
        dx, dy = wx - obs.pose.x, wy - obs.pose.y
        if obs.is_rect:
            oc, os = math.cos(obs.pose.yaw), math.sin(obs.pose.yaw)
            ax = oc * dx + os * dy
            ay = -os * dx + oc * dy
            inside = (np.abs(ax) < obs.dims[0] / 2.0) & (np.abs(ay) < obs.dims[1] / 2.0)
        else:
            inside = dx * dx + dy * dy < obs.dims[0] ** 2
        np.maximum(grid, np.where(inside, obs.height, 0.0), out=grid)
    return Heightmap(origin=(x0, x0), resolution=resolution, grid=grid)


def binarize(h: Heightmap, h_thres: float = H_THRES) -> BinaryMap:
    """1 wherever the height strictly exceeds the threshold."""
    if h_thres < 0:
        raise InvalidInputError("threshold must be nonnegative")
    return BinaryMap(origin=h.origin, resolution=h.resolution,
                     grid=(h.grid > h_thres).astype(np.float64))


def _tile_index(scene_half: float, v: float) -> int:
    tile = scene_half * 2.0 / TILE_GRID
    i = int((v + scene_half) // tile)
    return min(max(i, 0), TILE_GRID - 1)


def _tile_center(scene_half: float, i: int) -> float:
    tile = scene_half * 2.0 / TILE_GRID
    return -scene_half + (i + 0.5) * tile


def warp_point(scene: Scene, x: float, y: float) -> tuple:
    """Apply the scene's per-tile scale factors to a world point."""
    half = scene.half()
    ix, iy = _tile_index(half, x), _tile_index(half, y)
    s = scene.tiles[iy * TILE_GRID + ix]
    cx, cy = _tile_center(half, ix), _tile_center(half, iy)
    return cx + s * (x - cx), cy + s * (y - cy)


def randomize_terrain(scene: Scene, rng: np.random.Generator) -> Scene:
    """Rescale each terrain tile's contents about its center."""
    tiles = tuple(rng.uniform(TILE_SCALE_LO, TILE_SCALE_HI)
                  for _ in range(TILE_GRID * TILE_GRID))
    warped = Scene(id=scene.id, bounds=scene.bounds, tiles=tiles)
    for obs in scene.obstacles:
        nx, ny = warp_point(warped, obs.pose.x, obs.pose.y)
        warped.obstacles.append(
            Obstacle(obs.kind, Pose(nx, ny, obs.pose.z, obs.pose.yaw), obs.dims))
    return warped


def place_distractors(scene: Scene, rng: np.random.Generator, n: int,
                      robot_start: Optional[Pose] = None,
                      keepout: Iterable = (),
                      max_tries: int = 100) -> Scene:
    """Scatter square/circular distractors in free space.

    Placement keeps a clearance from every existing obstacle, the robot
    start, and any extra keepout points, so distractor footprints never
    overlap task obstacles.
    """
    if n < 0:
        raise InvalidInputError("distractor count must be nonnegative")
    out = Scene(id=scene.id, bounds=scene.bounds,
                obstacles=list(scene.obstacles), tiles=scene.tiles)
    margin = 0.4
    keepout = [np.asarray(k[:2], dtype=float) for k in keepout]
    for _ in range(n):
        placed = False
        for _ in range(max_tries):
            circular = rng.random() < 0.5
            if circular:
                r = rng.uniform(0.15, 0.3)
                h = rng.uniform(0.1, 0.45)
                cand = Obstacle("distractor_circle",
                                Pose(rng.uniform(-out.half() + margin, out.half() - margin),
                                     rng.uniform(-out.half() + margin, out.half() - margin),
                                     0.0, 0.0),
                                (r, h))
            else:
                w = rng.uniform(0.25, 0.6)
                l = rng.uniform(0.25, 0.6)
                h = rng.uniform(0.1, 0.45)
                yaw = wrap_angle(rng.uniform(-math.pi, math.pi))
                cand = Obstacle("distractor_square",
                                Pose(rng.uniform(-out.half() + margin, out.half() - margin),
                                     rng.uniform(-out.half() + margin, out.half() - margin),
                                     0.0, yaw),
                                (w, l, h))
            ok = True
            for obs in out.obstacles:
                gap = math.hypot(cand.pose.x - obs.pose.x, cand.pose.y - obs.pose.y)
                if gap < cand.bound_radius + obs.bound_radius + 0.1:
                    ok = False
                    break
            if ok and robot_start is not None:
                if math.hypot(cand.pose.x - robot_start.x,
                              cand.pose.y - robot_start.y) < cand.bound_radius + 0.5:
                    ok = False
            if ok:
                for k in keepout:
                    if math.hypot(cand.pose.x - k[0], cand.pose.y - k[1]) \
                            < cand.bound_radius + 0.5:
                        ok = False
                        break
            if ok:
                out.obstacles.append(cand)
                placed = True
                break
        if not placed:
            raise PlacementError(f"no free space for distractor after {max_tries} tries")
    return out
