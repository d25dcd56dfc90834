"""Optimization-budget grid on the hardest decode scenario."""
import sys
import time

import numpy as np

from lurekit import scenarios as S, evaluation as E, training as T
from lurekit.data import SceneDB

db = SceneDB()
scene = S.make_scene("go_there", seed=3); db.add(scene)
demos = [S.collect_session("go_there", scene, episodes=5, seed=3)]

for epochs, lr, batch, rounds in [(150, 1e-3, 256, 3), (60, 3e-3, 256, 3),
                                  (150, 3e-3, 128, 3), (250, 2e-3, 128, 4)]:
    cfg = T.TrainConfig(epochs=epochs, learning_rate=lr, batch_size=batch,
                        dagger_iterations=rounds, rollouts_per_episode=4, seed=5)
    t0 = time.time()
    p, agg, hist = T.train_lure(demos, db, cfg)
    rep = E.evaluate(p, demos, db, E.EvalConfig(terrains=3, robots=5, seed=11))
    s = rep.summary()["go_there"]
    print(f"epochs={epochs} lr={lr} batch={batch} rounds={rounds}: "
          f"success={s['success_rate']:.2f} err={s['nav_error_m']:.2f} "
          f"({time.time()-t0:.0f}s, {len(agg)} pairs)", flush=True)
