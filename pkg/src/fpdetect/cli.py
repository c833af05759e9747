"""Batch pipeline wiring the library end to end.

Subcommands mirror the engine stages: ``simulate`` draws a labeled dataset,
``build-profile`` turns each entity's windowed history into a persisted tree,
``score`` matches new transactions against the stored profiles,
``accumulate`` folds suspicion into windowed alert values, ``evaluate``
produces the ROC/outcome/cost report, ``stats`` measures stored trees, and
``run-all`` chains the five stages.  Each stage writes a file the next one
consumes; with a fixed seed and config the whole pipeline is byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .accumulator import AlertState, ExpiringFunction, fire, slide
from .core import FRAUD, Transaction, window_select, with_amount_item
from .errors import ContractError, EngineError, ScoringError
from .evaluator import (
    FULL_AMOUNT,
    CostParams,
    missed_fraud_amounts,
    outcomes,
    roc,
    total_cost,
)
from .formats import (
    EngineConfig,
    format_alert,
    load_config,
    load_profile,
    read_alerts,
    read_labels,
    read_scores,
    read_transactions,
    save_profile,
    write_alerts,
    write_labels,
    write_scores,
    write_transactions,
)
from .fptree import build, tree_stats
from .matcher import CreditParams, score
from .simulator import builtin_profiles, generate

EXIT_CODES = {"config": 2, "format": 3, "contract": 4, "scoring": 5, "evaluation": 6}


# --------------------------------------------------------------------------
# Stage functions (also the run-all building blocks)
# --------------------------------------------------------------------------


def simulate_to_files(
    profile_name: str,
    n_legal: int,
    n_fraud: int,
    fraud_profile_name: str,
    seed: int,
    entity_id: str,
    data_path: Path,
    labels_path: Path | None,
) -> int:
    profiles = builtin_profiles()
    for name in (profile_name, fraud_profile_name):
        if name not in profiles:
            raise ScoringError(
                f"unknown builtin profile {name!r}; available: {sorted(profiles)}"
            )
    dataset = generate(
        profiles[profile_name], n_legal, n_fraud, profiles[fraud_profile_name], seed, entity_id
    )
    write_transactions(data_path, dataset.transactions)
    if labels_path is not None:
        write_labels(labels_path, dataset.labels)
    return len(dataset)


def build_profiles_to_dir(data_path: Path, config: EngineConfig, out_dir: Path) -> list[str]:
    result = read_transactions(data_path)
    if not result.transactions:
        raise ContractError(f"{data_path}: empty dataset, nothing to profile")
    by_entity: dict[str, list[Transaction]] = {}
    for txn in result.transactions:
        by_entity.setdefault(txn.entity_id, []).append(txn)
    out_dir.mkdir(parents=True, exist_ok=True)
    entities = sorted(by_entity)
    for entity in entities:
        txns = sorted(by_entity[entity], key=lambda t: t.timestamp)
        txns = [with_amount_item(t, config.granularity) for t in txns]
        now = txns[-1].timestamp
        window = window_select(txns, config.window, now)
        tree = build([t.items for t in window], config.min_sup)
        save_profile(out_dir / f"{entity}.json", tree, entity, built_at=now)
    return entities


def score_to_file(
    data_path: Path, profiles_dir: Path, config: EngineConfig, out_path: Path
) -> int:
    result = read_transactions(data_path)
    params = CreditParams(config.epsilon)
    trees = {}
    records = []
    for txn in result.transactions:
        if txn.entity_id not in trees:
            profile_path = profiles_dir / f"{txn.entity_id}.json"
            if not profile_path.exists():
                raise ScoringError(f"no profile for entity {txn.entity_id!r}")
            trees[txn.entity_id], _ = load_profile(profile_path)
        txn = with_amount_item(txn, config.granularity)
        records.append(score(txn, trees[txn.entity_id], config.weights, params))
    write_scores(out_path, records)
    return len(records)


def _initial_expiring(config: EngineConfig, t1: int) -> ExpiringFunction:
    return ExpiringFunction(config.expiring_kind, t1 - config.span, t1, config.degree)


def accumulate_to_file(
    scores_path: Path,
    config: EngineConfig,
    out_path: Path,
    labels_path: Path | None = None,
    profiles_dir: Path | None = None,
) -> int:
    records = read_scores(scores_path)
    labels = read_labels(labels_path) if labels_path is not None else None
    if labels is not None and len(labels) != len(records):
        raise ContractError(
            f"labels ({len(labels)}) do not parallel scores ({len(records)})"
        )
    label_of = {}
    by_entity: dict[str, list] = {}
    for index, record in enumerate(records):
        if labels is not None:
            label_of[id(record)] = labels[index]
        by_entity.setdefault(record.transaction.entity_id, []).append((record.scored_at, index, record))

    lines = []
    for entity in sorted(by_entity):
        updated_at = 0
        if config.anchor_mode == "since_update":
            if profiles_dir is None:
                raise ContractError("since_update anchoring needs --profiles for T0")
            _, meta = load_profile(profiles_dir / f"{entity}.json")
            updated_at = int(meta["built_at"])
        ordered = sorted(by_entity[entity])
        first_t = ordered[0][0]
        state = AlertState(
            records=[],
            expiring=_initial_expiring(config, first_t),
            thresholds=list(config.thresholds),
            profile_updated_at=updated_at,
            span=config.span,
            anchor_mode=config.anchor_mode,
        )
        for scored_at, _, record in ordered:
            state = slide(state, scored_at, [record])
            value, severity = fire(state)
            has_fraud = None
            if labels is not None:
                has_fraud = any(label_of[id(r)] == FRAUD for r in state.records)
            lines.append(
                format_alert(entity, scored_at, value, severity, len(state.records), has_fraud)
            )
    write_alerts(out_path, lines)
    return len(lines)


def evaluate_to_files(
    scores_path: Path,
    labels_path: Path,
    config: EngineConfig,
    out_dir: Path,
    alerts_path: Path | None = None,
) -> dict:
    records = read_scores(scores_path)
    labels = read_labels(labels_path)
    if len(labels) != len(records):
        raise ContractError(
            f"labels ({len(labels)}) do not parallel scores ({len(records)})"
        )
    suspicions = [r.suspicion for r in records]
    amounts = [r.transaction.amount for r in records]
    curve = roc(suspicions, labels)
    matrix = outcomes(suspicions, labels, config.decision_threshold)
    params = CostParams(config.challenge_cost, config.miss_cost_mode, config.fixed_miss_cost)
    missed = (
        missed_fraud_amounts(suspicions, labels, amounts, config.decision_threshold)
        if config.miss_cost_mode == FULL_AMOUNT
        else None
    )
    cost = total_cost(matrix, missed, params)

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "roc.csv", "w", encoding="utf-8") as handle:
        handle.write("threshold,fpr,tpr\n")
        for threshold, (fpr, tpr) in zip(curve.thresholds, curve.points):
            handle.write(f"{threshold!r},{fpr!r},{tpr!r}\n")

    summary = {
        "version": 1,
        "records": len(records),
        "auc": curve.auc,
        "decision_threshold": config.decision_threshold,
        "outcomes": matrix.as_dict(),
        "cost": cost,
    }
    if alerts_path is not None:
        rows = read_alerts(alerts_path)
        flagged = [(value, flag) for _, _, value, _, _, flag in rows if flag is not None]
        alert_level: dict = {"windows": len(flagged)}
        values = [v for v, _ in flagged]
        flags = [FRAUD if f else "legal" for _, f in flagged]
        if flagged and len(set(flags)) == 2:
            alert_level["auc"] = roc(values, flags).auc
        else:
            alert_level["auc"] = None
        summary["alert_level"] = alert_level
    with open(out_dir / "summary.json", "w", encoding="utf-8") as handle:
        json.dump(summary, handle, sort_keys=True, indent=2)
        handle.write("\n")
    return summary


def run_all_to_dir(args_profile: str, seed: int, config: EngineConfig, out: Path, counts) -> dict:
    train_legal, train_fraud, test_legal, test_fraud = counts
    out.mkdir(parents=True, exist_ok=True)
    simulate_to_files(
        args_profile, train_legal, train_fraud, "fraud", seed, "u1",
        out / "train.txt", out / "train-labels.txt",
    )
    simulate_to_files(
        args_profile, test_legal, test_fraud, "fraud", seed + 1, "u1",
        out / "test.txt", out / "test-labels.txt",
    )
    build_profiles_to_dir(out / "train.txt", config, out / "profiles")
    score_to_file(out / "test.txt", out / "profiles", config, out / "scores.txt")
    accumulate_to_file(
        out / "scores.txt", config, out / "alerts.txt",
        labels_path=out / "test-labels.txt", profiles_dir=out / "profiles",
    )
    return evaluate_to_files(
        out / "scores.txt", out / "test-labels.txt", config, out,
        alerts_path=out / "alerts.txt",
    )


# --------------------------------------------------------------------------
# Argument parsing and command wrappers
# --------------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, default=None, help="engine config JSON")
    sub.add_argument("--seed", type=int, default=0, help="random seed (where applicable)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpdetect", description="FP-tree behavioral anomaly detection pipeline"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="generate a labeled synthetic dataset")
    sim.add_argument("--profile", default="regular")
    sim.add_argument("--fraud-profile", default="fraud")
    sim.add_argument("--legal", type=int, required=True)
    sim.add_argument("--fraud", type=int, required=True)
    sim.add_argument("--entity", default="u1")
    sim.add_argument("--out", type=Path, required=True)
    sim.add_argument("--labels-out", type=Path, default=None)
    _add_common(sim)
    sim.set_defaults(func=_cmd_simulate)

    bld = commands.add_parser("build-profile", help="build per-entity FP-tree profiles")
    bld.add_argument("--data", type=Path, required=True)
    bld.add_argument("--out-dir", type=Path, required=True)
    _add_common(bld)
    bld.set_defaults(func=_cmd_build_profile)

    sc = commands.add_parser("score", help="score transactions against stored profiles")
    sc.add_argument("--data", type=Path, required=True)
    sc.add_argument("--profiles", type=Path, required=True)
    sc.add_argument("--out", type=Path, required=True)
    _add_common(sc)
    sc.set_defaults(func=_cmd_score)

    acc = commands.add_parser("accumulate", help="fold scores into windowed alert values")
    acc.add_argument("--scores", type=Path, required=True)
    acc.add_argument("--labels", type=Path, default=None)
    acc.add_argument("--profiles", type=Path, default=None)
    acc.add_argument("--out", type=Path, required=True)
    _add_common(acc)
    acc.set_defaults(func=_cmd_accumulate)

    ev = commands.add_parser("evaluate", help="ROC, outcome matrix and cost report")
    ev.add_argument("--scores", type=Path, required=True)
    ev.add_argument("--labels", type=Path, required=True)
    ev.add_argument("--alerts", type=Path, default=None)
    ev.add_argument("--out-dir", type=Path, required=True)
    _add_common(ev)
    ev.set_defaults(func=_cmd_evaluate)

    st = commands.add_parser("stats", help="measure stored profile trees")
    st.add_argument("--profile", type=Path, default=None, help="one profile file")
    st.add_argument("--profiles", type=Path, default=None, help="profile directory")
    _add_common(st)
    st.set_defaults(func=_cmd_stats)

    run = commands.add_parser("run-all", help="simulate, build, score, accumulate, evaluate")
    run.add_argument("--profile", default="regular")
    run.add_argument("--train-legal", type=int, default=3000)
    run.add_argument("--train-fraud", type=int, default=50)
    run.add_argument("--test-legal", type=int, default=3000)
    run.add_argument("--test-fraud", type=int, default=20)
    run.add_argument("--out-dir", type=Path, required=True)
    _add_common(run)
    run.set_defaults(func=_cmd_run_all)

    return parser


def _cmd_simulate(args) -> int:
    count = simulate_to_files(
        args.profile, args.legal, args.fraud, args.fraud_profile,
        args.seed, args.entity, args.out, args.labels_out,
    )
    print(f"wrote {count} transactions to {args.out}")
    return 0


def _cmd_build_profile(args) -> int:
    entities = build_profiles_to_dir(args.data, load_config(args.config), args.out_dir)
    print(f"built {len(entities)} profile(s) in {args.out_dir}")
    return 0


def _cmd_score(args) -> int:
    count = score_to_file(args.data, args.profiles, load_config(args.config), args.out)
    print(f"scored {count} transactions to {args.out}")
    return 0


def _cmd_accumulate(args) -> int:
    count = accumulate_to_file(
        args.scores, load_config(args.config), args.out,
        labels_path=args.labels, profiles_dir=args.profiles,
    )
    print(f"wrote {count} alert rows to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    summary = evaluate_to_files(
        args.scores, args.labels, load_config(args.config), args.out_dir,
        alerts_path=args.alerts,
    )
    print(
        f"auc={summary['auc']:.4f} outcomes={summary['outcomes']} cost={summary['cost']:.2f}"
    )
    return 0


def _cmd_stats(args) -> int:
    paths = []
    if args.profile is not None:
        paths.append(args.profile)
    if args.profiles is not None:
        paths.extend(sorted(args.profiles.glob("*.json")))
    if not paths:
        raise ContractError("stats needs --profile or --profiles")
    for path in paths:
        tree, meta = load_profile(path)
        stats = tree_stats(tree)
        print(
            f"{meta.get('entity_id') or path.stem} nodes={stats.node_count} "
            f"depth={stats.depth} header={stats.header_size} "
            f"transactions={tree.total_transactions}"
        )
    return 0


def _cmd_run_all(args) -> int:
    summary = run_all_to_dir(
        args.profile, args.seed, load_config(args.config), args.out_dir,
        (args.train_legal, args.train_fraud, args.test_legal, args.test_fraud),
    )
    print(f"auc={summary['auc']:.4f} artifacts in {args.out_dir}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EngineError as err:
        print(f"error[{err.category}]: {err}", file=sys.stderr)
        return EXIT_CODES.get(err.category, 1)
    except OSError as err:
        print(f"error[io]: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
