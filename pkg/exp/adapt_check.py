"""Adaptation margin at acceptance scale, using a saved base policy."""
import math
import sys
import time

import numpy as np

from lurekit import scenarios as S, evaluation as E, training as T
from lurekit.data import SceneDB
from lurekit.policy import load_model

base = load_model(sys.argv[1] if len(sys.argv) > 1 else "exp/full8_lure.json")
db = SceneDB()
for scen in S.EVAL_SCENARIOS:
    db.add(S.make_scene(scen, seed=3))

style = S.UserStyle(posture_rotation=math.radians(20.0),
                    paraphrase_table="paraphrases_alt")
new_demos = [S.collect_session(scen, db.get(f"{scen}-3"), episodes=3,
                               seed=43, subject="novel", style=style)
             for scen in S.EVAL_SCENARIOS]
mins = sum(len(d.records) for d in new_demos) / 600.0
print(f"novel-user data: {mins:.1f} minutes", flush=True)

ecfg = E.EvalConfig(terrains=3, robots=5, seed=11)
before = E.evaluate(base, new_demos, db, ecfg)
print(f"unadapted: {before.average_success():.3f} "
      f"{ {k: round(v['success_rate'],2) for k,v in before.summary().items()} }", flush=True)

for epochs, rolls in [(40, 4), (80, 4), (120, 8)]:
    cfg = T.TrainConfig(epochs=epochs, rollouts_per_episode=rolls, seed=5)
    t0 = time.time()
    adapted = T.finetune(base, new_demos, db, cfg, table=style.table())
    rep = E.evaluate(adapted, new_demos, db, ecfg)
    gain = (rep.average_success() - before.average_success()) * 100
    print(f"epochs={epochs} rolls={rolls}: {rep.average_success():.3f} "
          f"(+{gain:.1f} pts, {time.time()-t0:.0f}s) "
          f"{ {k: round(v['success_rate'],2) for k,v in rep.summary().items()} }", flush=True)
