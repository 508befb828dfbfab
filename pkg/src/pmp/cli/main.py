"""Command-line entry points: train-gym, train, eval, dump-plots, validate-config.

Exit codes: 0 ok, 2 config error, 3 training divergence, 4 missing artifact.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from ..gym_hand import ExpertFileError, GraspGym, collect_expert_pairs
from ..sim import SimulationDiverged
from ..tasks import CartPullEnv, GraspHoldEnv, PointReachEnv, SplitWalkerEnv
from ..trainer import Trainer, TrainingDiverged, evaluate_nr, format_nr, load_policy
from .config import ConfigError, RunConfig, dump_config, load_config, resolve_output

log = logging.getLogger("pmp")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_MISSING = 0, 2, 3, 4

ENV_CLASSES = {
    "reach": PointReachEnv,
    "gym": GraspGym,
    "walker": SplitWalkerEnv,
    "cart": CartPullEnv,
    "grasp_hold": GraspHoldEnv,
}

METRICS_FILE = "metrics.csv"
EPISODES_FILE = "episodes.csv"
EVAL_FILE = "eval_episodes.csv"
PLOT_UPDATES_FILE = "plot_updates.csv"
PLOT_EPISODES_FILE = "plot_episodes.csv"
PLOT_COLUMNS = ["metric", "step", "value"]


def seed_streams(seed):
    """Independent generators for training, evaluation and expert collection."""
    ss = np.random.SeedSequence(seed).spawn(3)
    return [np.random.default_rng(s) for s in ss]


def build_env(cfg: RunConfig, n_envs=None):
    ecfg = cfg.env_config()
    if getattr(ecfg, "expert_path", None):
        ecfg.expert_path = str(resolve_output(ecfg.expert_path))
    env = ENV_CLASSES[cfg.task](n_envs or cfg.ppo_config().n_envs, ecfg)
    if hasattr(env, "kernel_gamma"):
        env.kernel_gamma = cfg.kernel_gamma
    return env


def build_trainer(cfg: RunConfig, use_prior=None):
    return Trainer(build_env(cfg), cfg.ppo_config(), cfg.reward_weights(), seed=cfg.seed,
                   blend_prob=cfg.blend_prob, use_prior=cfg.use_prior if use_prior is None else use_prior,
                   max_incidents=cfg.max_incidents)


def _train(cfg: RunConfig, trainer: Trainer, out: Path, updates: int):
    eval_env = build_env(cfg) if cfg.eval_every else None
    trainer.train(updates, metrics_path=out / METRICS_FILE, checkpoint_dir=out / "checkpoints",
                  checkpoint_every=cfg.checkpoint_every, eval_every=cfg.eval_every, eval_env=eval_env,
                  eval_episodes=cfg.eval_episodes, episodes_path=out / EPISODES_FILE,
                  callback=lambda tr, row, batch: log.info("update %d  task %.4f  style %.4f", row["update"],
                                                           row["task_reward_mean"], row["style_reward_mean"]))


# -- commands ----------------------------------------------------------------

def cmd_validate_config(args):
    cfg = load_config(args.config, args.set)
    print(f"ok: task={cfg.task} seed={cfg.seed} output={cfg.output_path()}")
    return EXIT_OK


def cmd_train_gym(args):
    cfg = load_config(args.config, args.set)
    if cfg.task != "gym":
        raise ConfigError(f"train-gym needs task 'gym' (got {cfg.task!r})")
    out = cfg.output_path()
    out.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config.yaml")
    updates = cfg.updates if args.updates is None else args.updates
    episodes = cfg.expert.episodes if args.episodes is None else args.episodes
    min_contacts = cfg.expert.min_contacts if args.min_contacts is None else args.min_contacts
    trainer = build_trainer(cfg, use_prior=False)
    _train(cfg, trainer, out, updates)
    trainer.save(out / "policy.npz")
    _, _, collect_rng = seed_streams(cfg.seed)
    path = out / cfg.expert.file
    pairs = collect_expert_pairs(trainer.policy, build_env(cfg), episodes, collect_rng, min_contacts, path)
    print(f"expert pairs: {len(pairs)} rows of width {pairs.shape[1]} -> {path}")
    return EXIT_OK


def cmd_train(args):
    cfg = load_config(args.config, args.set)
    out = cfg.output_path()
    out.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config.yaml")
    trainer = build_trainer(cfg)
    if args.resume:
        resume = Path(args.resume)
        if not resume.exists():
            raise FileNotFoundError(f"checkpoint {resume} does not exist")
        trainer.load(resume)
    updates = cfg.updates if args.updates is None else args.updates
    _train(cfg, trainer, out, updates)
    trainer.save(out / "final.npz")
    last = trainer.history[-1] if trainer.history else {}
    print(f"trained {trainer.updates} updates, {trainer.env_steps} env steps; "
          f"last task reward {last.get('task_reward_mean', float('nan')):.4f}")
    return EXIT_OK


def cmd_eval(args):
    cfg = load_config(args.config, args.set)
    out = cfg.output_path()
    ckpt = Path(args.checkpoint) if args.checkpoint else out / "final.npz"
    if not ckpt.exists():
        raise FileNotFoundError(f"checkpoint {ckpt} does not exist")
    policy = load_policy(ckpt)
    episodes = cfg.eval_episodes if args.episodes is None else args.episodes
    _, eval_rng, _ = seed_streams(cfg.seed)
    env = build_env(cfg, args.envs)
    nrs = evaluate_nr(policy, env, episodes, eval_rng, deterministic=not args.stochastic)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / EVAL_FILE, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "nr"])
        for i, v in enumerate(nrs, 1):
            w.writerow([i, repr(float(v))])
    print(f"NR {format_nr(nrs)} over {len(nrs)} episodes")
    return EXIT_OK


def _long_format(src: Path, dst: Path, step_col: str, skip):
    """Rewrite a wide CSV as (metric, step, value) rows; values are copied verbatim."""
    rows = 0
    with open(dst, "w", newline="") as fo:
        w = csv.writer(fo)
        w.writerow(PLOT_COLUMNS)
        if src.exists() and src.stat().st_size > 0:
            with open(src, newline="") as fi:
                for rec in csv.DictReader(fi):
                    rows += 1
                    for k, v in rec.items():
                        if k in skip or v in ("", None):
                            continue
                        w.writerow([k, rec[step_col], v])
    return rows


def cmd_dump_plots(args):
    run = Path(args.run_dir)
    if not run.is_dir():
        raise FileNotFoundError(f"run directory {run} does not exist")
    n_up = _long_format(run / METRICS_FILE, run / PLOT_UPDATES_FILE, "update", {"update"})
    n_ep = _long_format(run / EPISODES_FILE, run / PLOT_EPISODES_FILE, "episode", {"episode", "update"})
    print(f"{n_up} updates -> {run / PLOT_UPDATES_FILE}; {n_ep} episodes -> {run / PLOT_EPISODES_FILE}")
    return EXIT_OK


# -- entry point --------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="pmp", description="Part-wise motion prior training and evaluation.")
    p.add_argument("-v", "--verbose", action="store_true", help="log every update")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("config", help="YAML run configuration")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field, e.g. --set ppo.lr=1e-4 (repeatable)")
        return sp

    sp = with_config(sub.add_parser("validate-config", help="check a run configuration and exit"))
    sp.set_defaults(func=cmd_validate_config)

    sp = with_config(sub.add_parser("train-gym", help="train the grasping policy and export expert pairs"))
    sp.add_argument("--updates", type=int, help="training updates (overrides the config)")
    sp.add_argument("--episodes", type=int, help="expert-collection episodes")
    sp.add_argument("--min-contacts", type=int, help="hand links touching the rod for a pair to be kept")
    sp.set_defaults(func=cmd_train_gym)

    sp = with_config(sub.add_parser("train", help="train a policy on the configured task"))
    sp.add_argument("--updates", type=int, help="training updates (overrides the config)")
    sp.add_argument("--resume", help="checkpoint to resume from")
    sp.set_defaults(func=cmd_train)

    sp = with_config(sub.add_parser("eval", help="report NR of a checkpoint"))
    sp.add_argument("--checkpoint", help="checkpoint path (default: <output_dir>/final.npz)")
    sp.add_argument("--episodes", type=int, help="evaluation episodes")
    sp.add_argument("--envs", type=int, help="parallel evaluation worlds (default: ppo.n_envs)")
    sp.add_argument("--stochastic", action="store_true", help="sample actions instead of using the mean")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("dump-plots", help="write long-format plot CSVs for a run directory")
    sp.add_argument("run_dir")
    sp.set_defaults(func=cmd_dump_plots)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (TrainingDiverged, SimulationDiverged, FloatingPointError) as e:
        print(f"training diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except (FileNotFoundError, ExpertFileError) as e:
        print(f"missing artifact: {e}", file=sys.stderr)
        return EXIT_MISSING


if __name__ == "__main__":
    sys.exit(main())
