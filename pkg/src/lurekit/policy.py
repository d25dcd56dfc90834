"""Navigation policy: observation layout, MLP with hand-rolled backprop,
the geometric local expert, and model file round-tripping."""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .world import RobotState

GESTURE_DIM = 18
VERBAL_DIM = 64
BMAP_SIDE = 16
BMAP_DIM = BMAP_SIDE * BMAP_SIDE
PROPRIO_DIM = 4
OBS_DIM = GESTURE_DIM + VERBAL_DIM + BMAP_DIM + PROPRIO_DIM  # 342

SLICE_GESTURE = slice(0, GESTURE_DIM)
SLICE_VERBAL = slice(GESTURE_DIM, GESTURE_DIM + VERBAL_DIM)
SLICE_BMAP = slice(GESTURE_DIM + VERBAL_DIM, GESTURE_DIM + VERBAL_DIM + BMAP_DIM)
SLICE_PROPRIO = slice(OBS_DIM - PROPRIO_DIM, OBS_DIM)

LAYER_SIZES = (OBS_DIM, 128, 128, 3)
GOAL_CLAMP = 10.0
MODEL_FORMAT_VERSION = 1


def downsample_bmap(grid: np.ndarray) -> np.ndarray:
    """40x40 binary grid -> center-crop 32x32 -> 2x2 max-pool -> 256 floats."""
    g = np.asarray(grid, dtype=float)
    n = g.shape[0]
    crop = 2 * BMAP_SIDE
    lo = (n - crop) // 2
    g = g[lo:lo + crop, lo:lo + crop]
    pooled = g.reshape(BMAP_SIDE, 2, BMAP_SIDE, 2).max(axis=(1, 3))
    return pooled.reshape(-1)


def proprio_vector(x: RobotState) -> np.ndarray:
    return np.array([x.speed, x.yaw_rate,
                     1.0 if x.standing else 0.0,
                     1.0 if x.airborne else 0.0])


# Keeps every observation dimension within roughly unit range: the shoulder
# midpoint spans meters and the yaw spans radians, everything else is
# already unit-scale.
_GESTURE_SCALE = np.ones(GESTURE_DIM)
_GESTURE_SCALE[15:17] = 0.25
_GESTURE_SCALE[17] = 1.0 / math.pi


def assemble_observation(gesture: np.ndarray, verbal: np.ndarray,
                         bmap_grid: np.ndarray, x: RobotState,
                         mask_gesture: bool = False,
                         mask_verbal: bool = False) -> np.ndarray:
    """Fixed-layout observation; masked modality slices are zeroed whole."""
    obs = np.zeros(OBS_DIM)
    if not mask_gesture:
        obs[SLICE_GESTURE] = gesture * _GESTURE_SCALE
    if not mask_verbal:
        obs[SLICE_VERBAL] = verbal
    obs[SLICE_BMAP] = downsample_bmap(bmap_grid)
    obs[SLICE_PROPRIO] = proprio_vector(x)
    return obs


@dataclass
class PolicyParams:
    weights: list                     # per layer, shape (out, in)
    biases: list                      # per layer, shape (out,)
    activation: str = "tanh"
    seed: int = 0

    @property
    def layer_sizes(self) -> list:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def flatten(self) -> np.ndarray:
        return np.concatenate([w.reshape(-1) for w in self.weights]
                              + [b for b in self.biases])

    def copy(self) -> "PolicyParams":
        return PolicyParams([w.copy() for w in self.weights],
                            [b.copy() for b in self.biases],
                            self.activation, self.seed)


def init_params(seed: int, layer_sizes: Sequence[int] = LAYER_SIZES) -> PolicyParams:
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.normal(0.0, math.sqrt(1.0 / fan_in), size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return PolicyParams(weights, biases, seed=seed)


def forward_raw(p: PolicyParams, obs: np.ndarray) -> np.ndarray:
    """Unclamped network output; obs may be (d,) or a batch (n, d)."""
    h = np.asarray(obs, dtype=float)
    squeeze = h.ndim == 1
    if squeeze:
        h = h[None, :]
    if h.shape[1] != p.weights[0].shape[1]:
        raise ValueError(f"observation dim {h.shape[1]} != {p.weights[0].shape[1]}")
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        h = h @ w.T + b
        if i < last:
            h = np.tanh(h)
    return h[0] if squeeze else h


def forward(p: PolicyParams, obs: np.ndarray) -> np.ndarray:
    """Robot-frame navigation goal with the xy components clamped."""
    g = forward_raw(p, obs)
    out = np.array(g, dtype=float)
    out[..., 0] = np.clip(out[..., 0], -GOAL_CLAMP, GOAL_CLAMP)
    out[..., 1] = np.clip(out[..., 1], -GOAL_CLAMP, GOAL_CLAMP)
    return out


def loss_and_grad(p: PolicyParams, obs: np.ndarray, targets: np.ndarray) -> tuple:
    """Mean squared goal error over the batch and its backprop gradient."""
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if obs.shape[0] == 0:
        raise ValueError("empty batch")
    n = obs.shape[0]
    acts = [obs]
    h = obs
    last = len(p.weights) - 1
    pre = []
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = h @ w.T + b
        pre.append(z)
        h = np.tanh(z) if i < last else z
        acts.append(h)
    diff = acts[-1] - targets
    loss = float(np.sum(diff * diff) / n)
    delta = 2.0 * diff / n
    grads_w = [None] * len(p.weights)
    grads_b = [None] * len(p.weights)
    for i in range(last, -1, -1):
        grads_w[i] = delta.T @ acts[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ p.weights[i]) * (1.0 - acts[i] ** 2)
    return loss, (grads_w, grads_b)


class Adam:
    """Adaptive-moment optimizer over PolicyParams."""

    def __init__(self, p: PolicyParams, lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m_w = [np.zeros_like(w) for w in p.weights]
        self.v_w = [np.zeros_like(w) for w in p.weights]
        self.m_b = [np.zeros_like(b) for b in p.biases]
        self.v_b = [np.zeros_like(b) for b in p.biases]

    def step(self, p: PolicyParams, grads: tuple) -> None:
        gw, gb = grads
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for i in range(len(p.weights)):
            for param, g, m, v in ((p.weights[i], gw[i], self.m_w[i], self.v_w[i]),
                                   (p.biases[i], gb[i], self.m_b[i], self.v_b[i])):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * g * g
                param -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def local_expert(x: RobotState, g_star: Sequence[float]) -> np.ndarray:
    """Recorded world goal re-expressed in the robot frame at any state."""
    g = np.asarray(g_star, dtype=float)
    dx, dy, dz = g[0] - x.pose.x, g[1] - x.pose.y, g[2] - x.pose.z
    c, s = math.cos(x.pose.yaw), math.sin(x.pose.yaw)
    return np.array([c * dx + s * dy, -s * dx + c * dy, dz])


def goal_to_world(x: RobotState, g_robot: Sequence[float]) -> np.ndarray:
    g = np.asarray(g_robot, dtype=float)
    c, s = math.cos(x.pose.yaw), math.sin(x.pose.yaw)
    return np.array([x.pose.x + c * g[0] - s * g[1],
                     x.pose.y + s * g[0] + c * g[1],
                     x.pose.z + g[2]])


def _b64(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _unb64(s: str, shape: tuple) -> np.ndarray:
    raw = base64.b64decode(s.encode("ascii"))
    return np.frombuffer(raw, dtype="<f8").reshape(shape).copy()


def save_model(p: PolicyParams, path) -> None:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "layers": p.layer_sizes,
        "activation": p.activation,
        "seed": p.seed,
        "weights": [{"w": _b64(w), "b": _b64(b)}
                    for w, b in zip(p.weights, p.biases)],
    }
    Path(path).write_text(json.dumps(doc))


def load_model(path) -> PolicyParams:
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('version')}")
    sizes = doc["layers"]
    weights, biases = [], []
    for i, blob in enumerate(doc["weights"]):
        weights.append(_unb64(blob["w"], (sizes[i + 1], sizes[i])))
        biases.append(_unb64(blob["b"], (sizes[i + 1],)))
    return PolicyParams(weights, biases, activation=doc["activation"],
                        seed=int(doc.get("seed", 0)))
