"""Training loops: behavior cloning, local-expert data aggregation, and
aggregation with progressive goal cueing, plus per-user fine-tuning.

Every pair stored in an aggregate carries the record indices its command
and its goal label came from, so cueing behavior can be audited after the
fact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import world
from .data import DT, Demonstration, ReplayHandle, segment_episodes
from .interaction import (CueState, canonical_command, cue_step, embed_verbal,
                          encode_gesture, perturb_keypoints, sample_paraphrase,
                          paraphrase_table)
from .policy import (Adam, PolicyParams, assemble_observation, forward,
                     goal_to_world, init_params, local_expert, loss_and_grad)
from .world import (PushSchedule, RobotState, Scene, binarize, place_distractors,
                    randomize_terrain, rasterize, tracker_step, velocity_planner)


@dataclass
class TrainConfig:
    learning_rate: float = 3e-3
    epochs: int = 120
    batch_size: int = 128
    dagger_iterations: int = 10
    rollouts_per_episode: int = 20
    hold_prob: float = 0.5
    mask_prob: float = 0.1
    seed: int = 0
    distractors: int = 2
    keypoint_sigma: float = 0.1
    reach_radius: float = 0.3
    pushes: bool = True
    finetune_lr_scale: float = 0.1


@dataclass
class Aggregate:
    """Growable (observation, expert goal) set with provenance indices."""
    obs: list = field(default_factory=list)
    goals: list = field(default_factory=list)
    cmd_idx: list = field(default_factory=list)    # record index behind the command
    goal_idx: list = field(default_factory=list)   # record index behind the label
    clock_idx: list = field(default_factory=list)  # replay clock at pair time
    episode_uid: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.obs)

    def add(self, obs, goal, cmd_i, goal_i, clock_i, uid) -> None:
        self.obs.append(obs)
        self.goals.append(goal)
        self.cmd_idx.append(cmd_i)
        self.goal_idx.append(goal_i)
        self.clock_idx.append(clock_i)
        self.episode_uid.append(uid)

    def extend(self, other: "Aggregate") -> None:
        self.obs.extend(other.obs)
        self.goals.extend(other.goals)
        self.cmd_idx.extend(other.cmd_idx)
        self.goal_idx.extend(other.goal_idx)
        self.clock_idx.extend(other.clock_idx)
        self.episode_uid.extend(other.episode_uid)

    def matrices(self) -> tuple:
        return np.array(self.obs), np.array(self.goals)


class _VerbalTracker:
    """Latest issued command context, optionally re-phrased for augmentation."""

    def __init__(self, rng: Optional[np.random.Generator] = None,
                 table: Optional[dict] = None):
        self.rng = rng
        self.table = table if table is not None else paraphrase_table()
        self.embedding = np.zeros(64)
        self._cache: dict = {}

    def update(self, text: str) -> None:
        if not text:
            return
        if self.rng is not None:
            cmd = canonical_command(text)
            if cmd is not None and cmd in self.table:
                text = sample_paraphrase(cmd, self.rng, table=self.table)
        if text not in self._cache:
            self._cache[text] = embed_verbal(text).embedding
        self.embedding = self._cache[text]


def _mask_draw(rng: Optional[np.random.Generator], prob: float) -> tuple:
    if rng is None or prob <= 0.0:
        return False, False
    return bool(rng.random() < prob), bool(rng.random() < prob)


def _masked_copy(obs: np.ndarray, mask_gesture: bool, mask_verbal: bool) -> np.ndarray:
    from .policy import SLICE_GESTURE, SLICE_VERBAL
    if not (mask_gesture or mask_verbal):
        return obs
    out = obs.copy()
    if mask_gesture:
        out[SLICE_GESTURE] = 0.0
    if mask_verbal:
        out[SLICE_VERBAL] = 0.0
    return out


def _tick_observation(replay: ReplayHandle, rec_i: int, x: RobotState,
                      scene: Scene, verbal: _VerbalTracker,
                      noise_rng: Optional[np.random.Generator],
                      sigma: float) -> np.ndarray:
    """Observation for one tick; gesture keypoints get fresh noise."""
    kp = replay.keypoints(rec_i)
    if noise_rng is not None and sigma > 0:
        kp = perturb_keypoints(kp, noise_rng, sigma)
    bmap = binarize(rasterize(scene, x))
    return assemble_observation(encode_gesture(kp.to_robot_frame(x.pose)),
                                verbal.embedding, bmap.grid, x)


def build_demo_pairs(demos, scene_db, cfg: TrainConfig,
                     rng: np.random.Generator,
                     table: Optional[dict] = None) -> Aggregate:
    """Supervised pairs straight off the recorded sessions."""
    agg = Aggregate()
    uid = 0
    for demo in demos:
        scene = scene_db.get(demo.scene_id)
        replay = ReplayHandle(demo, scene)
        verbal = _VerbalTracker(rng, table)
        for i, rec in enumerate(demo.records):
            verbal.update(rec.verbal_text)
            label = local_expert(rec.x, replay.goal(i))
            obs = _tick_observation(replay, i, rec.x, scene, verbal,
                                    rng, cfg.keypoint_sigma)
            mg, mv = _mask_draw(rng, cfg.mask_prob)
            agg.add(_masked_copy(obs, mg, mv), label, i, i, i, uid)
        uid += 1
    return agg


def _episodes_for_rollout(demos) -> list:
    eps = []
    for demo in demos:
        for seg in segment_episodes(demo):
            if len(seg.records) >= 10:
                eps.append(seg)
    return eps


def dagger_round(p: PolicyParams, demos, scene_db, cfg: TrainConfig,
                 cueing: bool, round_idx: int = 0,
                 table: Optional[dict] = None) -> Aggregate:
    """Roll out the current policy in randomized scenes and label every
    visited 10 Hz state with the local expert's goal for the active record."""
    agg = Aggregate()
    episodes = _episodes_for_rollout(demos)
    for uid, episode in enumerate(episodes):
        base_scene = scene_db.get(episode.scene_id)
        for k in range(cfg.rollouts_per_episode):
            tag = [cfg.seed, 7001, round_idx, uid, k]
            rng = np.random.default_rng(tag + [1])
            rng_cue = np.random.default_rng(tag + [2])
            scene = randomize_terrain(base_scene, rng)
            replay = ReplayHandle(episode, scene)
            x = replay.initial_state()
            if cfg.distractors > 0:
                keep = [replay.goal(i)[:2] for i in
                        range(0, len(replay), max(1, len(replay) // 12))]
                try:
                    scene = place_distractors(scene, rng, cfg.distractors,
                                              robot_start=x.pose, keepout=keep)
                except world.PlacementError:
                    pass
                replay = ReplayHandle(episode, scene)
            pushes = PushSchedule(rng) if cfg.pushes else None
            goals = replay.goals()
            verbal = _VerbalTracker(rng, table)
            cue = CueState(0, False, cfg.reach_radius)
            seen = -1
            n = len(replay)
            # a cueing teacher waits for the robot, so the session may run
            # past the recorded duration (bounded at twice the records)
            horizon = 2 * n if (cueing and cfg.hold_prob > 0.0) else n
            for t_idx in range(horizon):
                clock = min(t_idx, n - 1)
                if cueing and cfg.hold_prob > 0.0:
                    cue = cue_step(cue, x, goals, clock, rng_cue, cfg.hold_prob)
                    if cue.record_index >= n:
                        break
                else:
                    cue = replace(cue, record_index=clock)
                active = cue.record_index
                while seen < active:
                    seen += 1
                    verbal.update(replay.verbal(seen))
                label = local_expert(x, goals[active])
                obs = _tick_observation(replay, active, x, scene, verbal,
                                        rng, cfg.keypoint_sigma)
                mg, mv = _mask_draw(rng, cfg.mask_prob)
                agg.add(_masked_copy(obs, mg, mv), label,
                        active, active, t_idx, uid)
                g_world = goal_to_world(x, forward(p, obs))
                v_com, phi_com = velocity_planner(g_world, x)
                for s in range(world.SUBSTEPS):
                    t_sim = t_idx * DT + s * world.DT_TRACKER
                    d = pushes.sample_push(t_sim) if pushes else world.NO_PUSH
                    x = tracker_step(x, v_com, phi_com, world.DT_TRACKER,
                                     d=d, scene=scene)
    return agg


def train_on_aggregate(p: PolicyParams, agg: Aggregate, cfg: TrainConfig,
                       rng: np.random.Generator,
                       lr: Optional[float] = None) -> list:
    """Minibatch Adam with cosine decay; returns per-epoch mean losses."""
    if len(agg) == 0:
        raise ValueError("empty training set")
    obs, goals = agg.matrices()
    base_lr = lr if lr is not None else cfg.learning_rate
    opt = Adam(p, lr=base_lr)
    losses = []
    n = len(agg)
    for e in range(cfg.epochs):
        frac = e / max(cfg.epochs - 1, 1)
        opt.lr = base_lr * (0.1 + 0.45 * (1.0 + math.cos(math.pi * frac)))
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            loss, grads = loss_and_grad(p, obs[idx], goals[idx])
            opt.step(p, grads)
            total += loss * len(idx)
        losses.append(total / n)
    return losses


def train_bc(demos, scene_db, cfg: TrainConfig,
             table: Optional[dict] = None) -> tuple:
    """Behavior cloning on the recorded sessions alone."""
    if not demos:
        raise ValueError("no demonstrations")
    rng = np.random.default_rng([cfg.seed, 11])
    agg = build_demo_pairs(demos, scene_db, cfg, rng, table)
    p = init_params(cfg.seed)
    train_on_aggregate(p, agg, cfg, np.random.default_rng([cfg.seed, 13]))
    return p, agg


def _train_aggregating(demos, scene_db, cfg: TrainConfig, cueing: bool,
                       table: Optional[dict] = None) -> tuple:
    p, agg = train_bc(demos, scene_db, cfg, table)
    history = [len(agg)]
    for r in range(cfg.dagger_iterations):
        fresh = dagger_round(p, demos, scene_db, cfg, cueing,
                             round_idx=r, table=table)
        agg.extend(fresh)
        history.append(len(agg))
        train_on_aggregate(p, agg, cfg,
                           np.random.default_rng([cfg.seed, 17, r]))
    return p, agg, history


def train_dagger(demos, scene_db, cfg: TrainConfig,
                 table: Optional[dict] = None) -> tuple:
    """Aggregation with commands replayed strictly by the clock."""
    return _train_aggregating(demos, scene_db, cfg, cueing=False, table=table)


def train_lure(demos, scene_db, cfg: TrainConfig,
               table: Optional[dict] = None) -> tuple:
    """Aggregation with progressive goal cueing during rollouts."""
    return _train_aggregating(demos, scene_db, cfg, cueing=True, table=table)


def finetune(p: PolicyParams, new_demos, scene_db, cfg: TrainConfig,
             table: Optional[dict] = None) -> PolicyParams:
    """Continue training on a new user's sessions at a reduced rate."""
    if not new_demos:
        raise ValueError("no adaptation demonstrations")
    out = p.copy()
    if cfg.epochs == 0:
        return out
    rng = np.random.default_rng([cfg.seed, 23])
    agg = build_demo_pairs(new_demos, scene_db, cfg, rng, table)
    agg.extend(dagger_round(out, new_demos, scene_db, cfg, cueing=True,
                            round_idx=990, table=table))
    train_on_aggregate(out, agg, cfg, np.random.default_rng([cfg.seed, 29]),
                       lr=cfg.learning_rate * cfg.finetune_lr_scale)
    return out
