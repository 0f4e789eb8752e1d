"""Command line: generate scenes, run episodes, summarise logs.

    hoop gen --rooms 2 --objects 5 --seed 0 --count 10 --out scenes/
    hoop run --method hoop --scenes scenes/ --seed 0 --sims 1000 --depth 12 --out logs/
    hoop report --logs logs/ --format md

``--config FILE`` reads a JSON object of defaults; explicit flags win. The
worker count for ``run`` comes from ``--workers`` or the HOOP_WORKERS
environment variable.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

from .harness import METHODS, EpisodeLog, RunConfig, metrics, report, run_episode
from .planner import PlannerConfig
from .scenegen import GenConfig, generate_scene, load_scene, save_scene

log = logging.getLogger("hoop")


def _load_config(argv: list[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    return json.loads(Path(known.config).read_text())


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    defaults = defaults or {}
    p = argparse.ArgumentParser(prog="hoop", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate scene instances")
    g.add_argument("--rooms", type=int, default=2)
    g.add_argument("--objects", type=int, default=5)
    g.add_argument("--blocked-path", action="store_true")
    g.add_argument("--blocker-at-goal", action="store_true")
    g.add_argument("--blocked-goal", action="store_true")
    g.add_argument("--swap", action="store_true")
    g.add_argument("--room-size", type=int, default=16)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run episodes over a scene directory")
    r.add_argument("--method", choices=METHODS, default="hoop")
    r.add_argument("--scenes", required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--sims", type=int, default=1000)
    r.add_argument("--depth", type=int, default=12)
    r.add_argument("--c", type=float, default=100.0, dest="exploration_c")
    r.add_argument("--rollout", choices=("preferred", "uniform"), default="preferred")
    r.add_argument("--budget", type=int, default=3000)
    r.add_argument("--replan", choices=("subgoal", "step"), default="subgoal")
    r.add_argument("--p-manip", type=float, default=0.0)
    r.add_argument("--theta", type=float, default=0.7)
    r.add_argument("--workers", type=int, default=int(os.environ.get("HOOP_WORKERS", "1")))
    r.add_argument("--out", required=True)

    s = sub.add_parser("report", help="summarise episode logs")
    s.add_argument("--logs", required=True)
    s.add_argument("--format", choices=("csv", "md"), default="md")
    s.add_argument("--out", help="write the table here instead of stdout")

    for sp in (g, r, s):
        sp.set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})
    return p


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        cfg = GenConfig(
            n_rooms=args.rooms, n_objects=args.objects, blocked_path=args.blocked_path,
            blocked_goal=args.blocked_goal, swap=args.swap, seed=args.seed + k,
            room_size=args.room_size, blocker_at_goal=args.blocker_at_goal,
        )
        scene = generate_scene(cfg)
        save_scene(scene, out / f"{scene.scene_id}.json")
        log.info("wrote %s", scene.scene_id)
    return 0


def _run_one(job: tuple[str, dict]) -> str:
    path, cfg_dict = job
    planner = PlannerConfig(**cfg_dict.pop("planner"))
    cfg = RunConfig(planner=planner, **cfg_dict)
    return run_episode(load_scene(path), cfg).dumps()


def cmd_run(args) -> int:
    scenes = sorted(Path(args.scenes).glob("*.json"))
    if not scenes:
        log.error("no scenes in %s", args.scenes)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    planner = PlannerConfig(simulations=args.sims, depth=args.depth, exploration_c=args.exploration_c,
                            seed=args.seed, rollout_policy=args.rollout)
    base = RunConfig(method=args.method, planner=planner, step_budget=args.budget, seed=args.seed,
                     replan=args.replan, p_manip=args.p_manip, fhc_theta=args.theta)
    jobs = []
    for path in scenes:
        d = asdict(base)
        d.pop("scenes")
        d.pop("abstraction")
        jobs.append((str(path), d))
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            texts = list(pool.map(_run_one, jobs))
    else:
        texts = [_run_one(j) for j in jobs]
    for path, text in zip(scenes, texts):
        (out / f"{path.stem}.{args.method}.s{args.seed}.jsonl").write_text(text)
    logs = [EpisodeLog.loads(t) for t in texts]
    s = metrics(logs, dataset=Path(args.scenes).name)
    print(report([s], "md"), end="")
    return 0


def cmd_report(args) -> int:
    logs = [EpisodeLog.load(p) for p in sorted(Path(args.logs).glob("*.jsonl"))]
    if not logs:
        log.error("no logs in %s", args.logs)
        return 1
    groups: dict[str, list[EpisodeLog]] = {}
    for lg in logs:
        groups.setdefault(lg.method, []).append(lg)
    summaries = [metrics(groups[m], dataset=Path(args.logs).name) for m in sorted(groups)]
    text = report(summaries, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser(_load_config(argv)).parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return {"gen": cmd_gen, "run": cmd_run, "report": cmd_report}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
