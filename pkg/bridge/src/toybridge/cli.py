"""toybridge CLI: train an overfit checkpoint, or serve as a completion
backend over the engine's subprocess protocol."""

from __future__ import annotations

import argparse
import sys

from .sampling import CFG_SCALE_RECORDED, ETA, SAMPLING_STEPS
from .training import TrainConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toybridge")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("train", help="overfit the denoiser on exported training pairs")
    sp.add_argument("--pairs", required=True, help="directory containing pairs.json")
    sp.add_argument("--out", required=True, help="checkpoint output path")
    sp.add_argument("--steps", type=int, default=TrainConfig.steps)
    sp.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    sp.add_argument("--lr", type=float, default=TrainConfig.lr)
    sp.add_argument("--seed", type=int, default=TrainConfig.seed)
    sp.add_argument("--drop-probability", type=float,
                    default=TrainConfig.condition_drop_probability)
    sp.add_argument("--log-every", type=int, default=100)

    sp = sub.add_parser("complete", help="completion backend (engine protocol)")
    sp.add_argument("manifest", help="input manifest path supplied by the engine")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--steps", type=int, default=SAMPLING_STEPS)
    sp.add_argument("--cfg", type=float, default=CFG_SCALE_RECORDED)
    sp.add_argument("--eta", type=float, default=ETA)
    sp.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0

    if args.command == "train":
        from .data import load_pairs_dataset
        from .training import save_checkpoint, train_overfit

        cfg = TrainConfig(
            steps=args.steps,
            batch_size=args.batch_size,
            lr=args.lr,
            seed=args.seed,
            condition_drop_probability=args.drop_probability,
        )
        samples = load_pairs_dataset(args.pairs)
        print(f"training on {len(samples)} views for {cfg.steps} steps", flush=True)
        model, sched, history = train_overfit(samples, cfg, log_every=args.log_every)
        save_checkpoint(args.out, model, sched, cfg)
        first = sum(history[:20]) / min(20, len(history))
        last = sum(history[-20:]) / min(20, len(history))
        print(f"initial 20-step loss {first:.4f} -> final 20-step loss {last:.4f}")
        return 0

    from .backend import run_backend

    return run_backend(
        args.manifest, args.checkpoint,
        steps=args.steps, cfg_scale=args.cfg, eta=args.eta, seed=args.seed,
    )


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
