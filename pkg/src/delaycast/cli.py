"""Single entry point: every pipeline stage is one subcommand.

All commands accept --config (JSON overrides, or $DELAYCAST_CONFIG) and
--seed, print the merged effective config to stderr for provenance, and
write machine-readable output via --out. Exit code 0 on success; failures
print a diagnostic and exit nonzero.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import __version__
from .checkpoint import checkpoint_id, load_checkpoint
from .config import (
    effective_config,
    generator_config,
    load_config,
    model_config,
    sdi_config,
    surrogate_config,
)
from .physics import DamageRule, LabelGrid, batch_labels, labels_to_tsv
from .recovery import DEFAULT_STAGE_GROUPS, default_stages, recovery_delay, stage_durations
from .scm import (
    causal_effect,
    do_vs_observe_gap,
    joint_query,
    mediated_total_effect,
    parse_ctg,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        print(f"# delaycast {__version__} effective-config {effective_config(cfg, args.seed)}", file=sys.stderr)
        return args.func(args, cfg)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delaycast", description=__doc__)
    parser.add_argument("--config", default=None, help="JSON config file overriding defaults")
    parser.add_argument("--seed", type=int, default=0, help="root seed for all randomness")
    parser.add_argument("--jobs", type=int, default=1, help="worker parallelism (advisory)")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen-data", help="generate a labeled scenario dataset")
    p.add_argument("--n", type=int, default=None, help="scenario count (default from config)")
    p.add_argument("--out", required=True, help="output dataset file (.jsonl)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("labels", help="emit the physics label grid as TSV")
    p.add_argument("--out", required=True, help="output labels file (.tsv)")
    p.set_defaults(func=cmd_labels)

    p = sub.add_parser("train-surrogate", help="train the damage surrogate on a label grid")
    p.add_argument("--labels", default=None, help="optional labels TSV (default: regenerate grid)")
    p.add_argument("--out", required=True, help="output checkpoint file")
    p.set_defaults(func=cmd_train_surrogate)

    p = sub.add_parser("train", help="train the delay model on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output checkpoint file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="train and compare full model vs baselines")
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gradcheck", help="finite-difference check of the full model loss")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("ctg", help="causal graph queries on a .ctg file")
    ctg_sub = p.add_subparsers(dest="ctg_command", required=True)
    q = ctg_sub.add_parser("query", help="P(target | evidence)")
    q.add_argument("--graph", required=True)
    q.add_argument("--target", required=True)
    q.add_argument("--evidence", nargs="*", default=[], metavar="NODE=STATE")
    q.set_defaults(func=cmd_ctg_query)
    e = ctg_sub.add_parser("effect", help="E[outcome|do(w1)] - E[outcome|do(w0)]")
    e.add_argument("--graph", required=True)
    e.add_argument("--treatment", required=True)
    e.add_argument("--w1", required=True)
    e.add_argument("--w0", required=True)
    e.add_argument("--outcome", required=True)
    e.set_defaults(func=cmd_ctg_effect)
    t = ctg_sub.add_parser("te", help="mediated total effect")
    t.add_argument("--graph", required=True)
    t.add_argument("--treatment", required=True)
    t.add_argument("--mediator", required=True)
    t.add_argument("--outcome", required=True)
    t.add_argument("--do", required=True, dest="do_state")
    t.set_defaults(func=cmd_ctg_te)
    g = ctg_sub.add_parser("gap", help="interventional vs observational expectation")
    g.add_argument("--graph", required=True)
    g.add_argument("--treatment", required=True)
    g.add_argument("--state", required=True)
    g.add_argument("--outcome", required=True)
    g.set_defaults(func=cmd_ctg_gap)

    p = sub.add_parser("sdi", help="per-scenario delay and SDI from a damage table")
    p.add_argument("--damage", required=True, help="TSV: scenario_id + rd_<module> columns")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sdi)

    p = sub.add_parser("grid", help="sensitivity grid around a reference scenario")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--index", type=int, default=0, help="reference scenario index in the dataset")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("recommend", help="rank candidate interventions for a scenario")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--candidates", default=None, help="JSON file [{id, w}, ...]; default: all weapons")
    p.add_argument("--objective", default="delay", choices=["delay", "sdi"])
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("serve", help="run the sandbox HTTP service")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--journal-dir", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def _write_out(args, payload: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_bytes(payload.encode())
    else:
        sys.stdout.write(payload)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gen_data(args, cfg) -> int:
    from .generator import dataset_to_jsonl, generate_dataset

    n = args.n if args.n is not None else int(cfg["dataset"]["n"])
    ds = generate_dataset(
        seed=args.seed,
        n=n,
        config=generator_config(cfg),
        splits=tuple(cfg["dataset"]["splits"]),
    )
    Path(args.out).write_bytes(dataset_to_jsonl(ds))
    print(f"wrote {n} scenarios to {args.out} (splits {dict((k, len(v)) for k, v in ds.splits.items())})")
    return 0


def cmd_labels(args, cfg) -> int:
    rule = DamageRule(k=cfg["physics"]["logistic_k"], e_half_mj=cfg["physics"]["logistic_e_half_mj"])
    rows = batch_labels(LabelGrid(rule=rule))
    Path(args.out).write_text(labels_to_tsv(rows))
    print(f"wrote {len(rows)} label rows to {args.out}")
    return 0


def cmd_train_surrogate(args, cfg) -> int:
    from .surrogate import surrogate_to_checkpoint, train_surrogate

    rule = DamageRule(k=cfg["physics"]["logistic_k"], e_half_mj=cfg["physics"]["logistic_e_half_mj"])
    rows = batch_labels(LabelGrid(rule=rule))
    model, history = train_surrogate(rows, surrogate_config(cfg, args.seed))
    data = surrogate_to_checkpoint(model, meta={"holdout_mae": history.holdout_mae})
    Path(args.out).write_bytes(data)
    print(f"surrogate checkpoint {checkpoint_id(data)} -> {args.out}; holdout MAE {history.holdout_mae:.4f}")
    return 0


def cmd_train(args, cfg) -> int:
    from .delaynet import model_to_checkpoint, train
    from .generator import dataset_from_jsonl

    ds = dataset_from_jsonl(Path(args.data).read_bytes())
    result = train(ds, model_config(cfg, args.seed))
    data = model_to_checkpoint(result.model, meta={"best_val_mae": result.best_val_mae, "history": result.history})
    Path(args.out).write_bytes(data)
    print(f"model checkpoint {checkpoint_id(data)} -> {args.out}; best val MAE {result.best_val_mae:.3f}")
    return 0


def _load_model(path: str):
    from .delaynet import model_from_checkpoint

    return model_from_checkpoint(load_checkpoint(Path(path).read_bytes(), expect_kind="delaynet"))


def cmd_eval(args, cfg) -> int:
    from .generator import dataset_from_jsonl
    from .harness import DelayNetPredictor, evaluate

    ds = dataset_from_jsonl(Path(args.data).read_bytes())
    model = _load_model(args.model)
    report = evaluate(
        DelayNetPredictor(model),
        ds.split_records(args.split),
        name="delaynet",
        split_hash=ds.split_hash(args.split),
    )
    payload = json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
    _write_out(args, payload)
    return 0


def cmd_ablate(args, cfg) -> int:
    from .generator import dataset_from_jsonl
    from .harness import run_ablations

    ds = dataset_from_jsonl(Path(args.data).read_bytes())
    table = run_ablations(ds, model_config(cfg, args.seed))
    print(table.format_table())
    if args.out:
        Path(args.out).write_text(json.dumps(table.as_dicts(), indent=2, sort_keys=True) + "\n")
    return 0


def cmd_gradcheck(args, cfg) -> int:
    from .testkit import full_model_gradcheck

    report = full_model_gradcheck(seed=args.seed)
    print(f"full-model gradcheck: max relative error {report.max_rel_error:.3e} (tol {report.tol:g})")
    return 0 if report.passed else 1


def _parse_assignment(items) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ValueError(f"expected NODE=STATE, got {item!r}")
        k, _, v = item.partition("=")
        out[k] = v
    return out


def cmd_ctg_query(args, cfg) -> int:
    g = parse_ctg(Path(args.graph).read_text())
    dist = joint_query(g, args.target, _parse_assignment(args.evidence))
    for state, p in dist.items():
        print(f"P({args.target}={state}) = {p:.6f}")
    return 0


def cmd_ctg_effect(args, cfg) -> int:
    g = parse_ctg(Path(args.graph).read_text())
    eff = causal_effect(g, args.treatment, args.w1, args.w0, args.outcome)
    print(f"{eff:.6f}")
    return 0


def cmd_ctg_te(args, cfg) -> int:
    g = parse_ctg(Path(args.graph).read_text())
    te = mediated_total_effect(g, args.treatment, args.mediator, args.outcome, args.do_state)
    print(f"{te:.6f}")
    return 0


def cmd_ctg_gap(args, cfg) -> int:
    g = parse_ctg(Path(args.graph).read_text())
    p_do, p_obs = do_vs_observe_gap(g, args.treatment, args.state, args.outcome)
    print(f"do: {p_do:.6f}")
    print(f"observe: {p_obs:.6f}")
    return 0


def cmd_sdi(args, cfg) -> int:
    from .recovery import sdi as sdi_score

    lines = Path(args.damage).read_text().splitlines()
    header = lines[0].split("\t")
    if header[0] != "scenario_id":
        raise ValueError("damage table must start with a scenario_id column")
    modules = [c.removeprefix("rd_") for c in header[1:]]
    out_lines = ["scenario_id\tdelay_days\tsdi"]
    scfg = sdi_config(cfg)
    for line in lines[1:]:
        if not line.strip():
            continue
        cells = line.split("\t")
        damage = {m: float(v) for m, v in zip(modules, cells[1:])}
        durations = stage_durations(damage)
        plan = recovery_delay(durations, {st.id: st.dependencies for st in default_stages()})
        score = sdi_score(durations, DEFAULT_STAGE_GROUPS, scfg)
        out_lines.append(f"{cells[0]}\t{plan.total_delay_days!r}\t{score!r}")
    _write_out(args, "\n".join(out_lines) + "\n")
    return 0


def cmd_grid(args, cfg) -> int:
    from .generator import dataset_from_jsonl
    from .harness import DelayNetPredictor, sensitivity_grid

    ds = dataset_from_jsonl(Path(args.data).read_bytes())
    model = _load_model(args.model)
    scenario = ds.records[args.index].scenario
    grid = sensitivity_grid(DelayNetPredictor(model), scenario)
    payload = json.dumps(grid.as_dict(), indent=2, sort_keys=True) + "\n"
    _write_out(args, payload)
    return 0


def cmd_recommend(args, cfg) -> int:
    from .generator import dataset_from_jsonl, w_from_obj
    from .harness import recommend

    ds = dataset_from_jsonl(Path(args.data).read_bytes())
    model = _load_model(args.model)
    scenario = ds.records[args.index].scenario
    if args.candidates:
        spec = json.loads(Path(args.candidates).read_text())
        candidates = [(c["id"], w_from_obj(c["w"])) for c in spec]
    else:
        w0 = scenario.intervention
        candidates = [
            (f"weapon-{m.name}", dataclasses.replace(w0, weapon_class=m.id))
            for m in scenario.registries.munitions
        ]
    rows = recommend(
        model, scenario, candidates, objective=args.objective, top_k=args.top_k,
        generator_config=generator_config(cfg),
    )
    payload = json.dumps([r.as_dict() for r in rows], indent=2, sort_keys=True) + "\n"
    _write_out(args, payload)
    return 0


def cmd_serve(args, cfg) -> int:
    import uvicorn

    from .service import SandboxEngine, create_app

    data = Path(args.model).read_bytes()
    model = _load_model(args.model)
    engine = SandboxEngine(model=model, model_id=checkpoint_id(data), generator_config=generator_config(cfg))
    app = create_app(engine, journal_dir=args.journal_dir or cfg["service"]["journal_dir"])
    host = args.host or cfg["service"]["host"]
    port = args.port if args.port is not None else int(cfg["service"]["port"])
    print(f"serving on http://{host}:{port} (model {checkpoint_id(data)})", file=sys.stderr)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
