"""Command-line entry points for the collection, training, evaluation and
serving pipeline."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import data, evaluation, scenarios, training
from .data import SceneDB
from .policy import load_model, save_model
from .scenarios import UserStyle
from .training import TrainConfig
from .world import Scene


def _scene_db(args) -> SceneDB:
    d = Path(args.scene_dir)
    if not d.is_dir():
        raise FileNotFoundError(f"scene directory {d} not found")
    return SceneDB.from_dir(d)


def _load_demos(paths) -> list:
    demos = []
    for p in paths:
        demos.extend(data.load(p))
    if not demos:
        raise ValueError("no demonstrations in the given files")
    return demos


def _style(args) -> UserStyle:
    return UserStyle(posture_rotation=math.radians(args.style_rotation),
                     paraphrase_table=args.style_table)


def cmd_collect(args) -> int:
    Path(args.scene_dir).mkdir(parents=True, exist_ok=True)
    style = _style(args)
    if args.scenario == "course":
        demo, scene = scenarios.collect_course_session(
            seed=args.seed, subject=args.subject, style=style)
        demos = [demo]
    else:
        scene = scenarios.make_scene(args.scenario, seed=args.seed)
        demos = [scenarios.collect_session(
            args.scenario, scene, episodes=args.episodes, seed=args.seed,
            subject=args.subject, style=style)]
    scene.save(Path(args.scene_dir) / f"{scene.id}.json")
    data.save(demos, args.out)
    n = sum(len(d.records) for d in demos)
    print(f"wrote {n} records ({args.episodes} episodes) to {args.out}; "
          f"scene {scene.id} in {args.scene_dir}")
    return 0


def _train_config(args) -> TrainConfig:
    cfg = TrainConfig()
    if getattr(args, "config", None):
        doc = json.loads(Path(args.config).read_text())
        for k, v in doc.items():
            if not hasattr(cfg, k):
                raise ValueError(f"unknown config field {k!r}")
            setattr(cfg, k, v)
    for k in ("epochs", "seed", "hold_prob", "mask_prob",
              "dagger_iterations", "rollouts_per_episode"):
        v = getattr(args, k, None)
        if v is not None:
            setattr(cfg, k, v)
    return cfg


def cmd_train(args) -> int:
    demos = _load_demos(args.data)
    db = _scene_db(args)
    cfg = _train_config(args)
    if args.algo == "bc":
        p, agg = training.train_bc(demos, db, cfg)
        sizes = [len(agg)]
    elif args.algo == "dagger":
        p, agg, sizes = training.train_dagger(demos, db, cfg)
    elif args.algo == "lure":
        p, agg, sizes = training.train_lure(demos, db, cfg)
    else:
        raise ValueError(f"unknown algorithm {args.algo!r}")
    save_model(p, args.out)
    print(f"trained {args.algo} on {len(demos)} sessions; "
          f"aggregate sizes {sizes}; model -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    demos = _load_demos(args.data)
    db = _scene_db(args)
    p = load_model(args.model)
    cfg = evaluation.EvalConfig(terrains=args.terrains, robots=args.robots,
                                seed=args.seed)
    rep = evaluation.evaluate(p, demos, db, cfg)
    rep.to_csv(args.report)
    if args.runs_log:
        rep.runs_to_jsonl(args.runs_log)
    for sc, v in rep.summary().items():
        print(f"{sc:12s} success={v['success_rate']:.3f} "
              f"nav_error={v['nav_error_m']:.3f} m n={v['n_runs']}")
    print(f"average success {rep.average_success():.3f}; report -> {args.report}")
    return 0


def cmd_ablate(args) -> int:
    demos = _load_demos(args.data)
    db = _scene_db(args)
    p = load_model(args.model)
    cfg = evaluation.EvalConfig(terrains=args.terrains, robots=args.robots,
                                seed=args.seed)
    rep = evaluation.ablation_eval(p, args.modality, demos, db, cfg)
    rep.to_csv(args.report)
    for sc, v in rep.summary().items():
        print(f"{sc:12s} success={v['success_rate']:.3f} "
              f"nav_error={v['nav_error_m']:.3f} m")
    print(f"mode={args.modality} average success {rep.average_success():.3f}")
    return 0


def cmd_adapt(args) -> int:
    demos = _load_demos(args.data)
    db = _scene_db(args)
    p = load_model(args.model)
    cfg = _train_config(args)
    adapted = training.finetune(p, demos, db, cfg)
    save_model(adapted, args.out)
    print(f"fine-tuned on {len(demos)} sessions -> {args.out}")
    return 0


def cmd_course(args) -> int:
    doc = json.loads(Path(args.course_file).read_text())
    scene = Scene.load(doc["scene_file"])
    demos = _load_demos([doc["data_file"]])
    legs = evaluation.course_legs(demos[0], expected=tuple(doc.get(
        "legs", ("zigzag", "stop", "jump_over", "go_there"))))
    p = load_model(args.model)
    cfg = evaluation.EvalConfig(pushes=args.pushes, seed=args.seed)
    results = evaluation.run_course(p, legs, scene, cfg=cfg, repeats=args.repeats)
    ok = 0
    for r in results:
        line = " ".join(f"{l['scenario']}={'ok' if l['success'] else 'FAIL'}"
                        for l in r["legs"])
        print(f"rep {r['repetition']}: {line}")
        ok += r["all_legs_ok"]
    print(f"{ok}/{len(results)} repetitions fully successful")
    return 0


def cmd_serve(args) -> int:
    import uvicorn
    from .service.app import create_app
    app = create_app(scene_file=args.scene, model_file=args.model,
                     data_dir=args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lurekit",
                                 description="Teach a simulated robot navigation "
                                             "skills from gesture and verbal commands.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("collect", help="record synthetic teaching sessions")
    c.add_argument("--scenario", required=True,
                   choices=list(scenarios.SCENARIOS) + ["course"])
    c.add_argument("--episodes", type=int, default=5)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.add_argument("--scene-dir", default="scenes")
    c.add_argument("--subject", default="")
    c.add_argument("--style-rotation", type=float, default=0.0,
                   help="posture yaw bias in degrees")
    c.add_argument("--style-table", default="paraphrases")
    c.set_defaults(func=cmd_collect)

    t = sub.add_parser("train", help="train a navigation policy")
    t.add_argument("--algo", required=True, choices=("bc", "dagger", "lure"))
    t.add_argument("--data", action="append", required=True)
    t.add_argument("--config", default=None)
    t.add_argument("--out", required=True)
    t.add_argument("--scene-dir", default="scenes")
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--hold-prob", dest="hold_prob", type=float, default=None)
    t.add_argument("--mask-prob", dest="mask_prob", type=float, default=None)
    t.add_argument("--dagger-iterations", dest="dagger_iterations",
                   type=int, default=None)
    t.add_argument("--rollouts-per-episode", dest="rollouts_per_episode",
                   type=int, default=None)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="run the evaluation protocol")
    e.add_argument("--model", required=True)
    e.add_argument("--data", action="append", required=True)
    e.add_argument("--terrains", type=int, default=5)
    e.add_argument("--robots", type=int, default=20)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--report", required=True)
    e.add_argument("--runs-log", default=None)
    e.add_argument("--scene-dir", default="scenes")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("ablate", help="evaluate under partial modalities")
    a.add_argument("--model", required=True)
    a.add_argument("--data", action="append", required=True)
    a.add_argument("--modality", required=True, choices=evaluation.MODES)
    a.add_argument("--terrains", type=int, default=5)
    a.add_argument("--robots", type=int, default=20)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--report", required=True)
    a.add_argument("--scene-dir", default="scenes")
    a.set_defaults(func=cmd_ablate)

    d = sub.add_parser("adapt", help="fine-tune a policy on a new user")
    d.add_argument("--model", required=True)
    d.add_argument("--data", action="append", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--config", default=None)
    d.add_argument("--epochs", type=int, default=None)
    d.add_argument("--seed", type=int, default=None)
    d.add_argument("--scene-dir", default="scenes")
    d.set_defaults(func=cmd_adapt)

    r = sub.add_parser("course", help="run a chained multi-obstacle course")
    r.add_argument("--model", required=True)
    r.add_argument("--course-file", required=True)
    r.add_argument("--repeats", type=int, default=5)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--pushes", action="store_true")
    r.set_defaults(func=cmd_course)

    s = sub.add_parser("serve", help="serve the live teaching session API")
    s.add_argument("--port", type=int, default=8000)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--scene", default=None)
    s.add_argument("--model", default=None)
    s.add_argument("--data-dir", default="sessions")
    s.set_defaults(func=cmd_serve)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 1
    except Exception as e:   # runtime failures exit 1, usage errors exit 2 via argparse
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
