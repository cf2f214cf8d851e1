"""
scino-order command line.

    python main.py generate  --output-dir runs/data --d 5 --n 1000
    python main.py train     --data runs/data/dataset.csv --output-dir runs/model
    python main.py order     --data runs/data/dataset.csv [--checkpoint runs/model/model.json]
    python main.py prune     --data runs/data/dataset.csv --order runs/order/order.json
    python main.py eval      --truth runs/data/graph.json --order runs/order/order.json [--graph g.json]
    python main.py ensemble  --data runs/data/dataset.csv --members 8
    python main.py control   --data runs/data/dataset.csv --prior uniform
    python main.py acceptance [--only AC3 AC7] [--include-slow]

Exit codes: 0 success, 2 config, 3 data, 4 numeric, 5 remote provider.
"""

import argparse
import sys
import traceback
import warnings
from typing import List, Optional

import numpy as np
import pandas as pd

import acceptance.cases  # noqa: F401  registers the acceptance cases
from acceptance.harness import harness
from config.run_config import RunConfig, load_run_config
from context.role_context import load_variable_context, mask_variable_names, select_context_set
from database.run_store import RunStore
from datagen.generators import gen_physics, generate
from datagen.io import load_csv, load_graph_json, save_csv, save_graph_json
from diffusion.trainer import load_model, save_model, train, write_training_log
from ensemble.control import DegradedPriorWarning, control_order, write_posterior_log
from ensemble.evidence import ci_evidence, rank_evidence
from ensemble.members import build_members, stats_fn_for
from ensemble.priors import RemotePrior, make_prior
from ensemble.schema import EvidenceKind, PriorKind
from ensemble.stats import ensemble_sigmas
from errors import ConfigError, DataError, ScinoError
from logger_config import error_logger, log_error, main_logger
from metrics.graph_metrics import evaluate, order_divergence
from ordering.backends import evaluation_rows, make_backend
from ordering.ordering import order_all, random_order, write_step_log
from ordering.pruning import prune
from ordering.schema import CausalOrder
from utils.json_utils import load_json
from utils.seeding import substream

BASELINE_DRAWS = 100


# === SHARED HELPERS ===


def _effective_config(args) -> RunConfig:
    cfg = load_run_config(args.config)
    flags = {
        "seed": args.seed,
        "output_dir": args.output_dir,
        "overwrite": True if args.overwrite else None,
        "jobs": args.jobs,
    }
    for key in ("n_samples", "n_nodes", "mechanism", "epochs", "batch_size", "criterion", "strategy", "backend",
                "residue_sign", "max_eval_samples", "members", "ensemble_mode", "evidence", "tau", "prior", "alpha"):
        flags[key] = getattr(args, key, None)
    for override in args.set or []:
        if "=" not in override:
            raise ConfigError(f"--set expects section.field=value, got {override!r}")
        key, raw = override.split("=", 1)
        flags[key] = _parse_value(raw)
    return cfg.with_overrides(**flags)


def _parse_value(raw: str):
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    lowered = raw.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered in ("null", "none"):
        return None
    return raw


def _open_store(command: str, cfg: RunConfig) -> RunStore:
    return RunStore(cfg.output_dir, command, cfg.to_dict(), cfg.seed, overwrite=cfg.overwrite)


def _load_trained(path: str, dataset):
    model, names = load_model(path)
    if model.n_vars != dataset.n_vars:
        raise DataError(f"checkpoint expects {model.n_vars} variables, dataset has {dataset.n_vars}")
    if names and tuple(names) != tuple(dataset.names):
        raise DataError(f"checkpoint variables {list(names)} differ from dataset columns {list(dataset.names)}")
    return model


def _load_order(path: str, names) -> CausalOrder:
    return CausalOrder.from_dict(load_json(path), names)


# === COMMANDS ===


def cmd_generate(args, cfg: RunConfig) -> RunStore:
    store = _open_store("generate", cfg)
    if args.physics:
        dag, dataset = gen_physics(cfg.generate.n_samples, cfg.seed)
    else:
        dag, dataset = generate(cfg.generate)
    save_csv(store.artifact("dataset.csv"), dataset)
    save_graph_json(store.artifact("graph.json"), dag)
    store.set("n_edges", dag.n_edges)
    return store


def cmd_train(args, cfg: RunConfig) -> RunStore:
    dataset = load_csv(args.data)
    store = _open_store("train", cfg)
    model = train(dataset, cfg.hyperparams(dataset.n_vars), cfg.train)
    save_model(store.artifact("model.json"), model, dataset.names)
    write_training_log(store.artifact("training_log.csv"), model.loss_history)
    store.set("final_loss", model.loss_history[-1])
    return store


def cmd_order(args, cfg: RunConfig) -> RunStore:
    dataset = load_csv(args.data)
    model = _load_trained(args.checkpoint, dataset) if args.checkpoint else None
    store = _open_store("order", cfg)
    result = order_all(
        dataset,
        cfg.ordering,
        model=model,
        hp=cfg.hyperparams(dataset.n_vars),
        train_cfg=cfg.train,
        stein_cfg=cfg.stein,
    )
    store.save_artifact_json("order.json", result.order.to_dict())
    write_step_log(store.artifact("steps.csv"), result.tables, dataset.names)
    return store


def cmd_prune(args, cfg: RunConfig) -> RunStore:
    dataset = load_csv(args.data)
    order = _load_order(args.order, dataset.names)
    store = _open_store("prune", cfg)
    dag = prune(order, dataset, cfg.prune)
    save_graph_json(store.artifact("graph.json"), dag)
    store.set("n_edges", dag.n_edges)
    return store


def cmd_eval(args, cfg: RunConfig) -> RunStore:
    if not args.truth:
        raise DataError("eval needs --truth graph.json")
    truth = load_graph_json(args.truth)
    g_hat = load_graph_json(args.graph) if args.graph else None
    if args.order:
        order = _load_order(args.order, truth.names)
    elif g_hat is not None:
        order = CausalOrder.from_topological(g_hat.topological_order(), g_hat.names)
    else:
        raise DataError("eval needs --order or --graph")

    store = _open_store("eval", cfg)
    report = evaluate(order, truth, g_hat).to_dict()
    if args.baseline == "random":
        rng = substream(cfg.seed, "baseline")
        draws = [order_divergence(random_order(truth.n_nodes, rng, truth.names), truth) for _ in range(BASELINE_DRAWS)]
        report["baseline_random_od_mean"] = float(np.mean(draws))
        report["baseline_random_od_std"] = float(np.std(draws))
    store.save_artifact_json("report.json", report)
    main_logger.info(f"Evaluation: {report}")
    return store


def _members_for(dataset, cfg: RunConfig, checkpoint: Optional[str]):
    pretrained = _load_trained(checkpoint, dataset) if checkpoint else None
    x_eval = evaluation_rows(dataset.values, cfg.ordering.max_eval_samples, cfg.seed)
    return build_members(
        dataset,
        cfg.ensemble,
        x_eval,
        hp=cfg.hyperparams(dataset.n_vars),
        train_cfg=cfg.train,
        stein_cfg=cfg.stein,
        pretrained=pretrained,
        sign=cfg.ordering.residue_sign,
    )


def cmd_ensemble(args, cfg: RunConfig) -> RunStore:
    dataset = load_csv(args.data)
    store = _open_store("ensemble", cfg)
    members = _members_for(dataset, cfg, args.checkpoint)
    stats = ensemble_sigmas(members, range(dataset.n_vars), jobs=cfg.ensemble.jobs)
    frame = pd.DataFrame(stats.sigmas, columns=list(dataset.names))
    frame.to_csv(store.artifact("sigmas.csv"), index=False, float_format="%.17g")

    evidence = {"rank": dict(zip(dataset.names, rank_evidence(stats).tolist()))}
    if stats.n_members >= 2:
        evidence["ci"] = dict(zip(dataset.names, ci_evidence(stats, cfg.ensemble.confidence).tolist()))
    store.save_artifact_json("evidence.json", evidence)
    return store


def _context_setup(args, cfg: RunConfig, names):
    """(context set, variable context, aliases for masked names)"""
    context = load_variable_context(args.variables) if args.variables else None
    if cfg.control.context_set is not None:
        context_set = list(cfg.control.context_set)
    elif args.context_proportion is not None:
        context_set = select_context_set(names, args.context_proportion, substream(cfg.seed, "context"))
    else:
        context_set = list(names)

    aliases = {}
    if args.mask_names:
        masked = [n for n in names if n not in context_set]
        aliases = mask_variable_names(masked, substream(cfg.seed, "mask"))
    if context is not None:
        context = context.restricted_to(context_set)
    return context_set, context, aliases


def cmd_control(args, cfg: RunConfig) -> RunStore:
    dataset = load_csv(args.data)
    names = dataset.names
    truth = load_graph_json(args.truth) if args.truth else None
    context_set, context, aliases = _context_setup(args, cfg, names)
    prior = make_prior(
        cfg.control.prior,
        names,
        alpha=cfg.control.alpha,
        table_path=args.prior_table,
        truth=truth,
        context=context,
        aliases=aliases,
        replay_path=args.replay,
    )

    store = _open_store("control", cfg)
    stats_fn = None
    if cfg.control.evidence is not EvidenceKind.NONE:
        stats_fn = stats_fn_for(_members_for(dataset, cfg, args.checkpoint), cfg.ensemble.jobs)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegradedPriorWarning)
        result = control_order(names, context_set, prior, stats_fn, cfg.control, cfg.ensemble.confidence)
    for warning in caught:
        if issubclass(warning.category, DegradedPriorWarning):
            store.mark_degraded(str(warning.message))

    store.save_artifact_json("order.json", result.order.to_dict())
    write_posterior_log(store.artifact("posterior_log.csv"), result)
    if isinstance(prior, RemotePrior):
        store.save_provider_responses(prior.responses, aliases)
    return store


def cmd_acceptance(args, cfg: RunConfig) -> RunStore:
    store = _open_store("acceptance", cfg)
    try:
        summary = harness.run_suite(args.only, include_slow=args.include_slow)
    except KeyError as e:
        raise ConfigError(str(e)) from e
    report = harness.generate_report(summary)
    with open(store.artifact("acceptance_report.txt"), "w", encoding="utf-8") as f:
        f.write(report)
    store.save_artifact_json("acceptance_results.json", [r.to_dict() for r in summary["results"]])
    store.set("acceptance_passed", summary["passed"] == summary["total"])
    print(report)
    return store


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "order": cmd_order,
    "prune": cmd_prune,
    "eval": cmd_eval,
    "ensemble": cmd_ensemble,
    "control": cmd_control,
    "acceptance": cmd_acceptance,
}


# === PARSER ===


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="run config JSON file")
    parser.add_argument("--output-dir", dest="output_dir", help="output directory")
    parser.add_argument("--seed", type=int, help="root seed for every random substream")
    parser.add_argument("--overwrite", action="store_true", help="reuse a non-empty output directory")
    parser.add_argument("--jobs", type=int, help="parallel ensemble members (-1: all cores)")
    parser.add_argument("--set", action="append", metavar="SECTION.FIELD=VALUE", help="override any config field")


def _training(parser: argparse.ArgumentParser):
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)


def _ordering(parser: argparse.ArgumentParser):
    parser.add_argument("--criterion", choices=["min-variance", "max-mean"])
    parser.add_argument("--strategy", choices=["deciduous-residue", "drop-column"])
    parser.add_argument("--backend", choices=["diffusion", "stein", "probed"])
    parser.add_argument("--residue-sign", dest="residue_sign", choices=["paper", "corrected"])
    parser.add_argument("--max-eval-samples", dest="max_eval_samples", type=int)


def _ensemble(parser: argparse.ArgumentParser):
    parser.add_argument("--members", type=int, help="ensemble size M")
    parser.add_argument("--ensemble-mode", dest="ensemble_mode", choices=["probed", "independent"])
    parser.add_argument("--checkpoint", help="pretrained model.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scino-order", description="Score-based causal ordering with SciNO")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="seeded ER graph and samples")
    _common(p)
    p.add_argument("--n", dest="n_samples", type=int, help="number of samples")
    p.add_argument("--d", dest="n_nodes", type=int, help="number of variables")
    p.add_argument("--mechanism", choices=["gp", "linear", "mlp"])
    p.add_argument("--physics", action="store_true", help="water-evaporation graph instead of ER")

    p = sub.add_parser("train", help="fit a score network")
    _common(p)
    _training(p)
    p.add_argument("--data", required=True)

    p = sub.add_parser("order", help="causal order by leaf removal")
    _common(p)
    _training(p)
    _ordering(p)
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", help="pretrained model.json")

    p = sub.add_parser("prune", help="order to DAG")
    _common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--order", required=True)

    p = sub.add_parser("eval", help="OD / SHD / SID against a true graph")
    _common(p)
    p.add_argument("--truth")
    p.add_argument("--order")
    p.add_argument("--graph", help="estimated graph.json")
    p.add_argument("--baseline", choices=["random"])

    p = sub.add_parser("ensemble", help="ensemble spread and evidence for the first step")
    _common(p)
    _training(p)
    _ensemble(p)
    p.add_argument("--data", required=True)

    p = sub.add_parser("control", help="prior-controlled ordering")
    _common(p)
    _training(p)
    _ensemble(p)
    p.add_argument("--data", required=True)
    p.add_argument("--prior", choices=[k.value for k in PriorKind])
    p.add_argument("--prior-table", dest="prior_table", help="per-step prior weights JSON")
    p.add_argument("--replay", help="provider_responses.json from an earlier remote run")
    p.add_argument("--truth", help="graph.json for the oracle prior")
    p.add_argument("--variables", help="variable descriptions JSON")
    p.add_argument("--evidence", choices=[k.value for k in EvidenceKind])
    p.add_argument("--tau", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--context-proportion", dest="context_proportion", type=float)
    p.add_argument("--mask-names", dest="mask_names", action="store_true")

    p = sub.add_parser("acceptance", help="scaled-down acceptance checks")
    _common(p)
    p.add_argument("--only", nargs="+")
    p.add_argument("--include-slow", dest="include_slow", action="store_true")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _effective_config(args)
        main_logger.info(f"Command {args.command} seed={cfg.seed} output={cfg.output_dir}")
        store = COMMANDS[args.command](args, cfg)
        manifest = store.finalize()
    except ScinoError as e:
        log_error(type(e).__name__, str(e), function_name=f"cmd_{args.command}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        error_logger.error(f"Unexpected failure in {args.command}: {traceback.format_exc()}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1

    if manifest.get("degraded"):
        print("warning: run degraded (see manifest.json)", file=sys.stderr)
    if args.command == "acceptance" and not manifest.get("acceptance_passed", False):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
