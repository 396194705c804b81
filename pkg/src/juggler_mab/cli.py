"""Command-line entry point: generate, simulate, sweep, report.

Run configuration is a JSON object::

    {
      "data": "data.jsonl",            # dataset path
      "out": "runs/rls_brand",         # output directory
      "seed": 7,
      "horizon_days": null,            # null = every day in the dataset
      "update_mode": "per_observation",  # or "daily_mean"
      "ndcg": {"cutoff": null, "gain": "exponential"},
      "arm_space": {"utility_values": [-0.3, 0.0, 0.3], "comp_values": [-0.2, 0.0, 0.2]},
      "policy": {"algorithm": "rls_thompson", "features": ["brand"]},
      "policies": [...],               # sweep only; omitted = the eleven-policy table
      "baseline": "runs/baseline/decisions.jsonl"   # optional comparison log
    }

Errors are reported on stderr as a single ``error: <kind>: <message>`` line
with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from .datagen import GenConfig, UnrealizableGapError, generate
from .domain import ArmSpace, Dataset, DataValidationError, load_dataset, write_dataset
from .metrics import (
    DeltaReport,
    compare_to_baseline,
    summarize,
    top_k_stats,
    write_comparison_csv,
    write_daily_csv,
    write_summary_csv,
    write_topk_delta_csv,
)
from .policies import ALGORITHMS, PolicyConfig, default_sweep
from .reward import NdcgConfig
from .simulator import (
    THREADS_ENV,
    SimulationConfig,
    counterfactual_table,
    read_decisions,
    resolve_threads,
    run,
    write_decisions,
)

RUN_FIELDS = {"data", "out", "seed", "horizon_days", "update_mode", "ndcg", "arm_space",
              "policy", "policies", "baseline"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    simulation: SimulationConfig
    data: Path | None = None
    out: Path | None = None
    baseline: Path | None = None
    policies: list[PolicyConfig] = field(default_factory=list)


def _read_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _policy(obj: Any, where: str) -> PolicyConfig:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    try:
        return PolicyConfig.from_json(obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_run_config(obj: Any, source: str = "config") -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError(f"{source}: top level must be an object")
    unknown = set(obj) - RUN_FIELDS
    if unknown:
        raise ConfigError(f"{source}: unknown fields {sorted(unknown)}")
    policy = _policy(obj.get("policy", {"algorithm": "baseline"}), f"{source}: field 'policy'")
    policies = []
    if "policies" in obj:
        if not isinstance(obj["policies"], list) or not obj["policies"]:
            raise ConfigError(f"{source}: field 'policies' must be a non-empty list")
        policies = [_policy(p, f"{source}: policies[{i}]") for i, p in enumerate(obj["policies"])]
    try:
        sim = SimulationConfig(
            seed=int(obj.get("seed", 0)),
            horizon_days=obj.get("horizon_days"),
            ndcg_config=NdcgConfig.from_json(obj.get("ndcg", {})),
            arm_space=ArmSpace.from_json(obj["arm_space"]) if "arm_space" in obj else ArmSpace(),
            policy_config=policy,
            update_mode=obj.get("update_mode", "per_observation"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None
    path = lambda key: Path(obj[key]) if obj.get(key) else None  # noqa: E731
    return RunConfig(sim, data=path("data"), out=path("out"), baseline=path("baseline"), policies=policies)


def _load_run_config(args) -> RunConfig:
    cfg = parse_run_config(_read_json(args.config), args.config) if args.config else parse_run_config({})
    sim = cfg.simulation
    if args.seed is not None:
        sim = replace(sim, seed=args.seed)
    if getattr(args, "policy", None):
        sim = replace(sim, policy_config=replace(sim.policy_config, algorithm=args.policy, name=None))
    cfg.simulation = sim
    if args.data:
        cfg.data = Path(args.data)
    if args.out:
        cfg.out = Path(args.out)
    if cfg.data is None or cfg.out is None:
        raise ConfigError("both a dataset (--data) and an output directory (--out) are required")
    if not cfg.data.exists():
        raise ConfigError(f"dataset {cfg.data} does not exist")
    if cfg.baseline is not None and not cfg.baseline.exists():
        raise ConfigError(f"baseline log {cfg.baseline} does not exist")
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg


def _simulate_one(dataset: Dataset, sim: SimulationConfig, out_dir: Path, rewards=None):
    result = run(dataset, sim, rewards=rewards)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_decisions(result.decisions, out_dir / "decisions.jsonl")
    (out_dir / "snapshot.json").write_text(json.dumps(result.snapshot, sort_keys=True) + "\n", encoding="utf-8")
    summary, daily = summarize(result.decisions, len(sim.arm_space))
    return result, summary, daily


def _baseline_deltas(cfg: RunConfig, rows) -> list[tuple[str, DeltaReport]]:
    if cfg.baseline is None:
        return []
    base, _ = summarize(read_decisions(cfg.baseline))
    return [(name, compare_to_baseline(s, base)) for name, s in rows]


def cmd_generate(args) -> int:
    obj = _read_json(args.config)
    if not isinstance(obj, dict):
        raise ConfigError(f"{args.config}: top level must be an object")
    if args.seed is not None:
        obj["seed"] = args.seed
    try:
        gen = GenConfig.from_json(obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{args.config}: {exc}") from None
    dataset = generate(gen)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(dataset, out)
    print(f"wrote {len(dataset.records)} searches over {gen.days} days to {out}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_run_config(args)
    dataset = load_dataset(cfg.data)
    sim = cfg.simulation
    name = sim.policy_config.display_name
    _, summary, daily = _simulate_one(dataset, sim, cfg.out)
    write_summary_csv(cfg.out / "summary.csv", [(name, summary)])
    write_daily_csv(cfg.out / "daily.csv", [(name, daily)], len(sim.arm_space))
    deltas = _baseline_deltas(cfg, [(name, summary)])
    if deltas:
        write_comparison_csv(cfg.out / "comparison.csv", deltas)
    print(f"{name}: avg_reward={summary.avg_reward:.4f} avg_regret={summary.avg_regret:.4f} "
          f"best_arm_pct={summary.best_arm_pct:.4f}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_run_config(args)
    dataset = load_dataset(cfg.data)
    sim = cfg.simulation
    policies = cfg.policies or default_sweep(sim.policy_config)
    names = [p.display_name for p in policies]
    if len(set(names)) != len(names):
        raise ConfigError("policy names in a sweep must be unique")
    rewards = counterfactual_table(dataset.records, sim.arm_space, sim.ndcg_config, resolve_threads())
    rows, curves = [], []
    for pc, name in zip(policies, names):
        _, summary, daily = _simulate_one(dataset, replace(sim, policy_config=pc), cfg.out / name, rewards)
        rows.append((name, summary))
        curves.append((name, daily))
        print(f"{name:24s} {summary.avg_reward:.4f} {summary.avg_regret:.4f} {summary.best_arm_pct:.4f}")
    write_summary_csv(cfg.out / "summary.csv", rows)
    write_daily_csv(cfg.out / "daily.csv", curves, len(sim.arm_space))
    deltas = _baseline_deltas(cfg, rows)
    if deltas:
        write_comparison_csv(cfg.out / "comparison.csv", deltas)
    return 0


def _run_name(path: Path) -> str:
    return path.parent.name if path.name == "decisions.jsonl" and path.parent.name else path.stem


def cmd_report(args) -> int:
    arm_space = ArmSpace()
    if args.config:
        arm_space = parse_run_config(_read_json(args.config), args.config).simulation.arm_space
    for p in [args.data, args.baseline, *args.logs]:
        if not Path(p).exists():
            raise ConfigError(f"{p} does not exist")
    dataset = load_dataset(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base_log = read_decisions(args.baseline)
    base_summary, _ = summarize(base_log)
    base_topk = top_k_stats(base_log, dataset, arm_space, args.k)
    summary_deltas, topk_deltas = [], []
    for log_path in map(Path, args.logs):
        log = read_decisions(log_path)
        name = _run_name(log_path)
        summary, _ = summarize(log)
        summary_deltas.append((name, compare_to_baseline(summary, base_summary)))
        topk_deltas.append((name, compare_to_baseline(top_k_stats(log, dataset, arm_space, args.k), base_topk)))
    write_topk_delta_csv(out / "topk_delta.csv", topk_deltas)
    write_comparison_csv(out / "comparison.csv", summary_deltas)
    print(f"{'run':24s} {'reward':>9s} {'regret':>9s} {'best arm':>9s}")
    for name, rep in summary_deltas:
        cells = [rep.format_relative(m) if m in rep.relative else "n/a"
                 for m in ("avg_reward", "avg_regret", "best_arm_pct")]
        print(f"{name:24s} " + " ".join(f"{c:>9s}" for c in cells))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="juggler-mab",
        description="Replay search logs under bandit weight corrections layered on Juggler predictions.",
        epilog=f"Set {THREADS_ENV} to cap within-day parallelism (0 = one thread per CPU; default 1).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic planted-structure dataset")
    g.add_argument("--config", required=True, help="generator config JSON")
    g.add_argument("--out", required=True, help="output dataset path (JSONL)")
    g.add_argument("--seed", type=int, help="override the config seed")
    g.set_defaults(func=cmd_generate)

    for name, func, text in (("simulate", cmd_simulate, "replay one policy"),
                             ("sweep", cmd_sweep, "replay several policies over one dataset")):
        s = sub.add_parser(name, help=text,
                           description="Defaults: seed 0, every dataset day, per_observation updates, "
                                       "exponential-gain NDCG without cutoff, 3x3 arm grid.")
        s.add_argument("--config", help="run config JSON")
        s.add_argument("--data", help="dataset path (overrides config)")
        s.add_argument("--out", help="output directory (overrides config)")
        s.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
        if name == "simulate":
            s.add_argument("--policy", choices=ALGORITHMS, help="override the policy algorithm")
        s.set_defaults(func=func)

    r = sub.add_parser("report", help="top-k item statistics and metric deltas against a baseline log")
    r.add_argument("--data", required=True, help="dataset the logs were produced from")
    r.add_argument("--logs", nargs="+", required=True, help="decision logs to compare")
    r.add_argument("--baseline", required=True, help="baseline decision log")
    r.add_argument("--k", type=int, default=10, help="top-k window (default 10)")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--config", help="run config JSON supplying a non-default arm space")
    r.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        kind, err = "config", exc
    except UnrealizableGapError as exc:
        kind, err = "generate", exc
    except DataValidationError as exc:
        kind, err = "data", exc
    except (ValueError, KeyError) as exc:
        kind, err = "invalid", exc
    except OSError as exc:
        kind, err = "io", exc
    message = " ".join(str(err).split())
    print(f"error: {kind}: {message}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
