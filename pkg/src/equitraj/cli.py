"""Operator entry point: synth, train, eval, predict, gradcheck, symcheck, report.

Exit codes: 0 success, 1 validation failure (bad arguments, bad files,
failed check), 2 runtime error. Every run logs its resolved config and
seed; the EQUITRAJ_LOG environment variable sets verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import Config, apply_overrides, load_config_file, serialize_config
from .data import (
    SynthConfig,
    Window,
    WindowSpec,
    load_trajectories,
    save_trajectories,
    synth_generate,
    window_split,
)
from .errors import EquitrajError, InputError, TrainingDiverged
from .evaluation import evaluate
from .model import forward_heads, init_params
from .numerics import grad_check
from .scene import SceneEmbedding, load_scene_embedding, save_scene_embedding
from .symmetry import random_scene, run_symmetry_suite
from .training import Sample, dataset_loss, fit, scene_loss, split_samples

log = logging.getLogger("equitraj")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="equitraj", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic corpus + embedding stub")
    synth.add_argument("--motif", default="mixed",
                       choices=["straight", "loop", "zigzag", "mixed"])
    synth.add_argument("--agents", type=int, default=3)
    synth.add_argument("--frames", type=int, default=40)
    synth.add_argument("--noise", type=float, default=0.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)
    synth.add_argument("--scene-out", default=None,
                       help="embedding stub path (default: <out>.scene.txt)")
    synth.add_argument("--emb-dim", type=int, default=16)
    synth.add_argument("--emb-mode", default="zero", choices=["zero", "random"])

    train = sub.add_parser("train", help="fit a model and write a checkpoint")
    _add_config_flags(train)
    train.add_argument("--data", required=True)
    train.add_argument("--scene", default=None, help="scene embedding file")
    train.add_argument("--out", required=True, help="checkpoint path")
    train.add_argument("--log", default=None, help="loss log CSV path")
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--batch", type=int, default=None)
    train.add_argument("--lr", type=float, default=None)
    train.add_argument("--weight-decay", type=float, default=None)
    train.add_argument("--checkpoint-every", type=int, default=None)
    train.add_argument("--split", default=None, help="train,val,test ratios")
    train.add_argument("--augment", action="store_true",
                       help="random rotation augmentation")

    ev = sub.add_parser("eval", help="score a checkpoint on a dataset")
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--scene", default=None)
    ev.add_argument("--mode", default=None, choices=["deterministic", "multi"])
    ev.add_argument("--split", default="all", choices=["all", "train", "val", "test"])
    ev.add_argument("--report", default=None, help="write the CSV report here")
    ev.add_argument("--single-best-head", action="store_true",
                    help="score both metrics from the head with the best ADE")

    pred = sub.add_parser("predict", help="emit predicted trajectories as TSV")
    pred.add_argument("--ckpt", required=True)
    pred.add_argument("--data", required=True)
    pred.add_argument("--scene", default=None)
    pred.add_argument("--out", required=True)

    grad = sub.add_parser("gradcheck", help="validate gradients by central differences")
    grad.add_argument("--seed", type=int, default=0)
    grad.add_argument("--step", type=float, default=1e-5)
    grad.add_argument("--tol", type=float, default=1e-4)

    sym = sub.add_parser("symcheck", help="run the equivariance/invariance suite")
    _add_config_flags(sym)
    sym.add_argument("--ckpt", default=None,
                     help="checkpoint to check (default: fresh untrained weights)")
    sym.add_argument("--trials", type=int, default=100)
    sym.add_argument("--tol-equi", type=float, default=1e-6)
    sym.add_argument("--tol-inv", type=float, default=1e-9)

    rep = sub.add_parser("report", help="render a metrics CSV as an aligned table")
    rep.add_argument("--csv", required=True)

    return parser


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", default=None, choices=["deterministic", "multi"])
    p.add_argument("--no-scene", action="store_true",
                   help="disable scene conditioning (learned constant token)")
    p.add_argument("--no-dct", action="store_true", help="disable the DCT basis")
    p.add_argument("--no-dropout", action="store_true", help="disable dropout")
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--frame-step", type=int, default=None)


def _resolve_config(args) -> Config:
    overrides: dict[str, str] = {}
    if getattr(args, "config", None):
        overrides.update(load_config_file(args.config))
    if getattr(args, "mode", None):
        overrides["model.heads"] = "1" if args.mode == "deterministic" else "20"
    for item in getattr(args, "set", []):
        if "=" not in item:
            raise InputError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()

    flag_map = {
        "epochs": "train.epochs",
        "batch": "train.batch_size",
        "lr": "train.lr",
        "weight_decay": "train.weight_decay",
        "seed": "train.seed",
        "checkpoint_every": "train.checkpoint_every",
        "stride": "window.stride",
        "frame_step": "window.frame_step",
    }
    for attr, key in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = str(value)
    if getattr(args, "no_scene", False):
        overrides["scene.enabled"] = "false"
    if getattr(args, "no_dct", False):
        overrides["regularization.dct"] = "false"
    if getattr(args, "no_dropout", False):
        overrides["regularization.dropout"] = "0.0"
    if getattr(args, "augment", False):
        overrides["train.rotation_augment"] = "true"
    if getattr(args, "split", None) and args.command == "train":
        parts = args.split.split(",")
        if len(parts) != 3:
            raise InputError("--split expects three comma-separated ratios")
        overrides["train.split_train"] = parts[0]
        overrides["train.split_val"] = parts[1]
        overrides["train.split_test"] = parts[2]

    config = apply_overrides(Config(), overrides)
    config.validate()
    return config


def _load_samples(args, config: Config) -> list[Sample]:
    records = load_trajectories(args.data)
    spec = WindowSpec(
        t_obs=config.model.t_obs,
        t_pred=config.model.t_pred,
        stride=config.window.stride,
        frame_step=config.window.frame_step,
    )
    windows = window_split(records, spec, scene_prefix=Path(args.data).stem)
    if not windows:
        raise InputError(
            f"{args.data}: no complete {spec.t_obs}+{spec.t_pred} windows found"
        )
    embedding = None
    if config.scene.enabled:
        scene_path = getattr(args, "scene", None)
        if scene_path is None:
            raise InputError(
                "scene conditioning is enabled: pass --scene <embedding file> "
                "or --no-scene"
            )
        embedding = load_scene_embedding(scene_path)
    return [(w, embedding) for w in windows]


def _echo_config(config: Config, seed: int) -> None:
    log.info("resolved seed: %d", seed)
    for line in serialize_config(config).splitlines():
        log.info("config: %s", line)


# -- subcommands ----------------------------------------------------------------


def _cmd_synth(args) -> int:
    cfg = SynthConfig(
        n_agents=args.agents,
        n_frames=args.frames,
        motif=args.motif,
        noise=args.noise,
        seed=args.seed,
        embedding_dim=args.emb_dim,
        embedding_mode=args.emb_mode,
    )
    records, embedding = synth_generate(cfg)
    save_trajectories(
        args.out, records,
        comment=f"synthetic corpus motif={cfg.motif} agents={cfg.n_agents} "
                f"frames={cfg.n_frames} noise={cfg.noise!r} seed={cfg.seed}",
    )
    scene_out = args.scene_out or f"{args.out}.scene.txt"
    save_scene_embedding(
        scene_out, embedding,
        comment=f"synthetic {cfg.embedding_mode} embedding seed={cfg.seed}",
    )
    log.info("wrote %s and %s", args.out, scene_out)
    return 0


def _cmd_train(args) -> int:
    config = _resolve_config(args)
    seed = config.train.seed
    samples = _load_samples(args, config)
    if samples[0][1] is not None:
        config = apply_overrides(
            config, {"scene.embedding_dim": str(samples[0][1].dim)}
        )
    _echo_config(config, seed)
    train_set, val_set, _ = split_samples(samples, config, seed)
    if not train_set:
        raise InputError("train split is empty; adjust --split")
    store = init_params(config, np.random.default_rng(seed))

    log_fh = open(args.log, "w", encoding="utf-8") if args.log else None
    if log_fh:
        log_fh.write("epoch,split,loss\n")

    every = config.train.checkpoint_every

    def on_epoch(epoch: int, train_loss: float) -> None:
        if log_fh:
            log_fh.write(f"{epoch},train,{train_loss!r}\n")
            if val_set:
                log_fh.write(f"{epoch},val,{dataset_loss(val_set, store, config)!r}\n")
            log_fh.flush()
        if every and (epoch + 1) % every == 0:
            save_checkpoint(f"{args.out}.epoch{epoch}", store, config, seed)

    try:
        rows = fit(train_set, val_set, store, config, on_epoch=on_epoch)
    finally:
        if log_fh:
            log_fh.close()
    save_checkpoint(args.out, store, config, seed)
    train_rows = [r for r in rows if r[1] == "train"]
    final = train_rows[-1][2] if train_rows else float("nan")
    log.info("trained %d epochs on %d windows; final train loss %.6f; wrote %s",
             config.train.epochs, len(train_set), final, args.out)
    return 0


def _select_split(samples: list[Sample], which: str, config: Config, seed: int):
    if which == "all":
        return samples
    train_set, val_set, test_set = split_samples(samples, config, seed)
    return {"train": train_set, "val": val_set, "test": test_set}[which]


def _cmd_eval(args) -> int:
    store, config, seed = load_checkpoint(args.ckpt)
    _echo_config(config, seed)
    samples = _load_samples(args, config)
    subset = _select_split(samples, args.split, config, seed)
    if not subset:
        raise InputError(f"split {args.split!r} selects no windows")
    report = evaluate(
        subset, store, config, mode=args.mode, single_best_head=args.single_best_head
    )
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        log.info("wrote %s", args.report)
    sys.stdout.write(report.to_table())
    return 0


def _cmd_predict(args) -> int:
    store, config, seed = load_checkpoint(args.ckpt)
    _echo_config(config, seed)
    samples = _load_samples(args, config)
    with store.frozen(), open(args.out, "w", encoding="utf-8") as fh:
        fh.write("# scene\tagent\thead\tframe\tx\ty\n")
        for window, embedding in samples:
            preds = forward_heads(window.scene, embedding, store, config, mode="eval")
            for head, pred in enumerate(preds):
                for a, agent in enumerate(window.scene.agent_ids):
                    for step, frame in enumerate(window.future_frames):
                        x, y = (float(v) for v in pred.data[a, step])
                        fh.write(
                            f"{window.scene.scene_id}\t{agent}\t{head}\t{frame}"
                            f"\t{x!r}\t{y!r}\n"
                        )
    log.info("wrote %s", args.out)
    return 0


def _cmd_gradcheck(args) -> int:
    # a reduced-width model keeps the probe count desk-scale while still
    # exercising every parameter group
    config = apply_overrides(Config(), {
        "model.pattern_width": "6",
        "model.message_width": "6",
        "model.token_width": "4",
        "model.t_channels": "4",
        "model.heads": "1",
        "scene.embedding_dim": "4",
        "regularization.dropout": "0.0",
    })
    config.validate()
    _echo_config(config, args.seed)
    rng = np.random.default_rng(args.seed)
    store = init_params(config, rng)
    scene = random_scene(rng, n_agents=2, t_obs=config.model.t_obs)
    embedding = SceneEmbedding(rng.normal(size=4), source="synthetic")
    future = scene.positions[:, -1:, :] + np.cumsum(
        rng.normal(0.0, 0.3, size=(scene.n_agents, config.model.t_pred, 2)), axis=1
    )
    window = Window(scene=scene, future=future,
                    future_frames=tuple(range(config.model.t_pred)))

    def f(s):
        return scene_loss(window, embedding, s, config, "eval", None)

    err = grad_check(f, store, h=args.step)
    print(f"max relative gradient error: {err:.6e} "
          f"({store.num_entries()} parameter entries, h={args.step:g})")
    if err > args.tol:
        print(f"FAIL: exceeds tolerance {args.tol:g}")
        return 1
    print(f"PASS: within tolerance {args.tol:g}")
    return 0


def _cmd_symcheck(args) -> int:
    if args.ckpt:
        store, config, seed = load_checkpoint(args.ckpt)
    else:
        config = _resolve_config(args)
        seed = config.train.seed
        store = init_params(config, np.random.default_rng(seed))
    _echo_config(config, seed)
    result = run_symmetry_suite(store, config, trials=args.trials, seed=seed)
    print(f"equivariance: max deviation {result.equivariance:.3e} "
          f"(tolerance {args.tol_equi:g})")
    print(f"invariance:   max deviation {result.invariance:.3e} "
          f"(tolerance {args.tol_inv:g})")
    if result.passed(args.tol_equi, args.tol_inv):
        print(f"PASS: {result.trials} random transform pairs")
        return 0
    print("FAIL")
    return 1


def _cmd_report(args) -> int:
    with open(args.csv, encoding="utf-8") as fh:
        lines = [l.strip() for l in fh if l.strip()]
    if not lines:
        raise InputError(f"{args.csv} is empty")
    table = [line.split(",") for line in lines]
    widths = [max(len(row[c]) for row in table if c < len(row))
              for c in range(max(len(r) for r in table))]
    for row in table:
        sys.stdout.write(
            "  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() + "\n"
        )
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
    "gradcheck": _cmd_gradcheck,
    "symcheck": _cmd_symcheck,
    "report": _cmd_report,
}


def run(argv: list[str]) -> int:
    logging.basicConfig(
        level=os.environ.get("EQUITRAJ_LOG", "INFO").upper(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except TrainingDiverged as exc:
        log.error("%s", exc)
        return 2
    except (EquitrajError, OSError) as exc:
        log.error("%s", exc)
        return 1
    except Exception as exc:  # pragma: no cover - unexpected
        log.error("unexpected error: %s", exc)
        return 2


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
