"""Command-line entry point: ``pushpull <synth|train|explore|trial|metrics|gradcheck>``.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import evaluation, synth, trial
from .controller import ExplorationError, explore_object, scenario_simulator
from .dgnn.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .dgnn.gradcheck import grad_check
from .dgnn.model import NumericalError
from .dgnn.train import TrainConfig, TrainingError, train
from .physics import SimulationDiverged
from .recordings import RecordingError

log = logging.getLogger("pushpull")

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

DOMAIN_ERRORS = (
    synth.SynthError,
    TrainingError,
    CheckpointError,
    NumericalError,
    RecordingError,
    ExplorationError,
    SimulationDiverged,
    trial.ScenarioError,
    trial.WatchdogTripped,
    evaluation.EvaluationError,
)


class UsageError(Exception):
    pass


def _read_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{p}: invalid JSON ({exc})") from exc


def _scenario(arg: str) -> tuple[trial.ScenarioSpec, Path | None]:
    """A scenario file, or the name of a bundled scenario."""
    p = Path(arg)
    if p.is_file():
        return trial.ScenarioSpec.from_dict(_read_json(p)), p
    if arg in trial.SCENARIOS:
        return trial.table_scenario(arg), None
    raise UsageError(f"no scenario file or bundled scenario named {arg!r}")


def cmd_synth(args) -> int:
    cfg = _read_json(args.config) if args.config else {}
    n_train = cfg.pop("n_train_recordings", 22)
    n_val = cfg.pop("n_val_recordings", 6)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if "target_label_mix" in cfg:
        cfg["target_label_mix"] = tuple(cfg["target_label_mix"])
    config = synth.SynthConfig(**cfg)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        manifest = synth.build_dataset(config, n_train, n_val, out)
    except OSError as exc:
        raise UsageError(f"cannot write dataset to {out}: {exc}") from exc
    mix = manifest["realized_mix"]
    print(f"{len(manifest['recordings'])} recordings, {manifest['n_actions']} pull/push actions")
    print(f"label mix idle {mix[0]:.3f}  pull {mix[1]:.3f}  push {mix[2]:.3f}")
    print(out / "manifest.json")
    return EXIT_OK


def cmd_train(args) -> int:
    if args.grad_check:
        return cmd_gradcheck(args)
    if not args.manifest or not Path(args.manifest).is_file():
        raise UsageError(f"manifest not found: {args.manifest}")
    cfg = _read_json(args.config) if args.config else {}
    if args.seed is not None:
        cfg["seed"] = args.seed
    config = TrainConfig.from_dict(cfg)

    def report(entry):
        print(
            f"epoch {entry['epoch']:2d}  loss {entry['train_loss']:.4f}  "
            f"train acc {entry['train_accuracy']:.3f}  val acc {entry['val_accuracy']:.3f}  "
            f"val bal acc {entry['val_balanced_accuracy']:.3f}",
            flush=True,
        )

    cp = train(args.manifest, config, on_epoch=report)
    for w in cp.warnings:
        print(f"warning: {w}", file=sys.stderr)
    out = save_checkpoint(cp, args.out)
    print(f"best epoch {cp.best_epoch}  val bal acc {cp.history[cp.best_epoch - 1]['val_balanced_accuracy']:.3f}")
    print(out)
    return EXIT_OK


def cmd_explore(args) -> int:
    spec, path = _scenario(args.scenario)
    f_com = explore_object(scenario_simulator(spec.mass, spec.mu_static))
    print(f"f_com {f_com:g} N")
    target = Path(args.out) if args.out else path
    if target is not None:
        trial.save_scenario(replace(spec, f_com=f_com), target)
        print(target)
    return EXIT_OK


def cmd_trial(args) -> int:
    spec, _ = _scenario(args.scenario)
    overrides = {}
    if args.condition:
        overrides["condition"] = args.condition
    if args.seed is not None:
        overrides["seed"] = args.seed
    spec = replace(spec, **overrides)
    checkpoint = None
    if spec.condition == "assisted":
        if not args.checkpoint:
            raise UsageError("assisted trials need --checkpoint")
        if not Path(args.checkpoint).is_file():
            raise UsageError(f"checkpoint not found: {args.checkpoint}")
        checkpoint = load_checkpoint(args.checkpoint)
    result = trial.run_trial(spec, checkpoint)
    out = evaluation.write_trial_log(result, args.out)
    n = len(evaluation.segment_actions(result))
    print(f"{spec.name} {spec.condition}: {n} actions, {len(result)} samples")
    print(out)
    return EXIT_OK


def cmd_metrics(args) -> int:
    logs = []
    for p in args.logs:
        if not Path(p).is_file():
            raise UsageError(f"log not found: {p}")
        tl = evaluation.read_trial_log(p)
        if len(tl) == 0:
            raise evaluation.EvaluationError(f"{p}: empty log")
        logs.append(tl)
    by_scenario: dict[str, dict[str, list]] = {}
    for tl in logs:
        by_scenario.setdefault(tl.scenario, {"dry": [], "assisted": []})[tl.condition].append(tl)
    warnings = []
    reports = {}
    for name, groups in sorted(by_scenario.items()):
        if not groups["dry"] or not groups["assisted"]:
            missing = "assisted" if groups["dry"] else "dry"
            warnings.append(f"scenario {name!r} has no {missing} log; no t-test")
        reports[name] = evaluation.compare_conditions(groups["dry"], groups["assisted"])
    if not reports:
        raise evaluation.EvaluationError("no logs")
    doc = {"scenarios": {k: r.to_dict() for k, r in reports.items()}, "warnings": warnings}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    table = out.with_name(out.stem + "_actions.csv")
    merged = evaluation.MetricsReport(
        {c: [r for rep in reports.values() for r in rep.actions[c]] for c in ("dry", "assisted")}, {}
    )
    evaluation.write_action_table(merged, table)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    for name, rep in reports.items():
        line = f"{name}: " + "  ".join(
            f"{c} {s.mean_force:.1f}±{s.mean_force_std:.1f} N" for c, s in rep.effort.items()
        )
        if rep.welch_mean is not None:
            line += f"  t {rep.welch_mean.t:.2f} p {rep.welch_mean.p:.2e}"
        print(line)
    print(out)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    seeds = [args.seed] if args.seed is not None else [0, 1, 2]
    worst = max(grad_check(s) for s in seeds)
    print(f"max relative error {worst:.3e} over seeds {seeds}")
    return EXIT_OK if worst < 1e-4 else EXIT_DOMAIN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pushpull", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic skeleton dataset")
    p.add_argument("--config", help="JSON with SynthConfig fields, n_train_recordings, n_val_recordings")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the intention network")
    p.add_argument("manifest", nargs="?")
    p.add_argument("--config", help="JSON with TrainConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="checkpoint.json")
    p.add_argument("--grad-check", action="store_true", help="only run the gradient check")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explore", help="find f_com for a scenario with the robot alone")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", help="write the updated scenario here (default: in place)")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("trial", help="run one dry or assisted trial")
    p.add_argument("--scenario", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--condition", choices=("dry", "assisted"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="trial CSV")
    p.set_defaults(func=cmd_trial)

    p = sub.add_parser("metrics", help="effort statistics and t-tests over trial logs")
    p.add_argument("logs", nargs="+")
    p.add_argument("--out", required=True, help="report JSON")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
