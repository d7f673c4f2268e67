"""Command line entry point.

::

    iter-replay train  --config run.json --seed 0 --out runs/push_s0 [--set train.epochs=5 ...]
    iter-replay ablate --grid grid.json [--out dir] [--workers 2] [--no-resume]
    iter-replay eval   --checkpoint runs/push_s0/checkpoint.npz --episodes 100 [--seed 0]
    iter-replay plot   --csv runs/push_s0/progress.csv [--out fig.png]
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import load_config, normalize, parse_value, set_dotted


def _cmd_train(args) -> int:
    from .training import run_training

    cfg = load_config(args.config)
    for item in args.set or []:
        key, _, value = item.partition("=")
        if not _:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        cfg = set_dotted(cfg, key, parse_value(value))
    cfg = normalize(cfg)
    seed = args.seed if args.seed is not None else int(cfg["seeds"][0])
    records = run_training(cfg, seed=seed, out_dir=args.out)
    last = records[-1] if records else None
    if last is not None:
        print(f"epochs={len(records)} eval_success={last.eval_success:.3f} env_steps={last.env_steps}")
    return 0


def _cmd_ablate(args) -> int:
    from .ablation import load_grid, run_ablation

    grid = load_grid(args.grid)
    rows = run_ablation(grid, out_dir=args.out, resume=not args.no_resume, workers=args.workers)
    for r in rows:
        print(f"{r['cell']}: median_episodes={r['median_episodes']} solved={r['solved_seeds']}/{r['n_seeds']}")
    return 0


def _cmd_eval(args) -> int:
    from .agent import DDPGAgent
    from .envs import EnvConfig
    from .training import evaluate

    if args.episodes < 1:
        raise SystemExit("--episodes must be >= 1")
    meta = DDPGAgent.read_meta(args.checkpoint)
    env_dict = meta.get("extra", {}).get("env")
    if env_dict is None:
        raise SystemExit("checkpoint carries no environment description")
    agent = DDPGAgent.load(args.checkpoint)
    rate = evaluate(agent, EnvConfig.from_dict(env_dict), args.episodes, seed=args.seed)
    if args.json:
        print(json.dumps({"success_rate": rate, "episodes": args.episodes, "seed": args.seed}))
    else:
        print(f"success_rate={rate:.4f} episodes={args.episodes}")
    return 0


def _cmd_plot(args) -> int:
    from .plotting import plot_csv

    out = plot_csv(args.csv, args.out)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="iter-replay", description="Symmetry-augmented goal-conditioned replay on toy tasks.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one seed")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted-key override, e.g. ker.n_ker=4")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("ablate", help="run a grid of configurations x seeds")
    p.add_argument("--grid", required=True, help="JSON grid file")
    p.add_argument("--out", default=None, help="output directory (overrides the grid's 'out')")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-resume", action="store_true", help="rerun cells that already completed")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("eval", help="evaluate a checkpoint greedily")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("plot", help="render a progress or ablation CSV to PNG")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
