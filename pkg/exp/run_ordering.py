"""Budget-tuning experiment for the baseline ordering margins."""
import argparse
import json
import time

import numpy as np

from lurekit import scenarios as S, evaluation as E, training as T
from lurekit.data import SceneDB

ap = argparse.ArgumentParser()
ap.add_argument("--episodes", type=int, default=5)
ap.add_argument("--epochs", type=int, default=120)
ap.add_argument("--rounds", type=int, default=5)
ap.add_argument("--rollouts", type=int, default=3)
ap.add_argument("--terrains", type=int, default=3)
ap.add_argument("--robots", type=int, default=5)
ap.add_argument("--seed", type=int, default=5)
ap.add_argument("--eval-seed", type=int, default=11)
ap.add_argument("--collect-seed", type=int, default=3)
ap.add_argument("--tag", default="run")
args = ap.parse_args()

t_all = time.time()
db = SceneDB()
demos = []
for scen in S.EVAL_SCENARIOS:
    scene = S.make_scene(scen, seed=args.collect_seed)
    db.add(scene)
    demos.append(S.collect_session(scen, scene, episodes=args.episodes,
                                   seed=args.collect_seed))
print(f"records={sum(len(d.records) for d in demos)}", flush=True)

cfg = T.TrainConfig(epochs=args.epochs, dagger_iterations=args.rounds,
                    rollouts_per_episode=args.rollouts, seed=args.seed)
out = {"args": vars(args)}
from lurekit.policy import save_model
t0 = time.time(); bc, _ = T.train_bc(demos, db, cfg)
print(f"bc {time.time()-t0:.0f}s", flush=True)
save_model(bc, f"exp/{args.tag}_bc.json")
t0 = time.time(); da, _, hist = T.train_dagger(demos, db, cfg)
print(f"dagger {time.time()-t0:.0f}s hist={hist}", flush=True)
save_model(da, f"exp/{args.tag}_dagger.json")
t0 = time.time(); lu, _, hist = T.train_lure(demos, db, cfg)
print(f"lure {time.time()-t0:.0f}s hist={hist}", flush=True)
save_model(lu, f"exp/{args.tag}_lure.json")

ecfg = E.EvalConfig(terrains=args.terrains, robots=args.robots, seed=args.eval_seed)
for name, p in (("bc", bc), ("dagger", da), ("lure", lu)):
    t0 = time.time()
    rep = E.evaluate(p, demos, db, ecfg)
    out[name] = {"avg_success": rep.average_success(),
                 "avg_err": rep.average_nav_error(),
                 "per": rep.summary()}
    print(f"{name:7s} success={rep.average_success():.3f} err={rep.average_nav_error():.3f}"
          f" ({time.time()-t0:.0f}s)", flush=True)
    print("   ", {sc: (round(v['success_rate'], 2), round(v['nav_error_m'], 2))
                  for sc, v in rep.summary().items()}, flush=True)
print(f"total {time.time()-t_all:.0f}s")
with open(f"exp/{args.tag}.json", "w") as f:
    json.dump(out, f, indent=1)
