"""Command-line entry point: ``photonic-qnn <subcommand> ...``.

Every subcommand accepts ``--seed``, ``--trials`` and ``--out``; experiment
subcommands also take ``--config`` pointing at a JSON or TOML file whose keys
mirror :class:`~photonic_qnn.harness.ExperimentConfig`. Flags given on the
command line override the file.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .data import gen_xor, load_iris
from .effdim import EDConfig
from .errors import CapabilityError, ConfigurationError, IngestionError
from .harness import (
    BACKEND_NAMES,
    EXPERIMENTS,
    THROUGHPUT_COLUMNS,
    ExperimentConfig,
    ExperimentReport,
    _handle,
    _write_csv,
    load_config_file,
    run_experiment,
    run_series,
    throughput_table,
    write_report,
)
from .models import MODEL_KINDS, ModelSpec
from .photonics import NoiseParams, net_shot_rate
from .training import Adam, Cobyla


def _common(p: argparse.ArgumentParser, trials_default=None):
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--trials", type=int, default=trials_default, help="independent seeded runs")
    p.add_argument("--out", default=None, help="output directory (default ./results)")
    p.add_argument("--config", default=None, help="JSON or TOML experiment config")


def _build_config(experiment: str, args, **overrides) -> ExperimentConfig:
    doc = load_config_file(args.config) if args.config else {}
    doc.setdefault("experiment", experiment)
    if doc["experiment"] != experiment:
        raise ConfigurationError(f"config is for {doc['experiment']!r}, not {experiment!r}")
    cfg = ExperimentConfig.from_dict(doc)
    for key in ("seed", "trials", "out"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    if "out" not in overrides and "out" not in doc:
        overrides["out"] = "results"
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides)


def cmd_gen_data(args) -> int:
    if args.kind == "xor":
        ds = gen_xor(args.n_per_cluster, args.sigma, args.seed if args.seed is not None else 1)
    else:
        ds = load_iris(args.iris_path, args.normalization)
    out = Path(args.out or f"{ds.name}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    ds.to_csv(out)
    a, b = ds.class_counts()
    print(f"wrote {out} ({len(ds)} rows, {a} class A / {b} class B)")
    return 0


def _train_overrides(args) -> dict:
    train_doc = {}
    if args.optimizer == "adam":
        train_doc["optimizer"] = Adam(lr=args.lr) if args.lr is not None else Adam()
    elif args.optimizer == "cobyla":
        train_doc["optimizer"] = Cobyla()
    if args.batch_size is not None:
        train_doc["batch_size"] = args.batch_size
    if args.iterations is not None:
        train_doc["max_iterations"] = args.iterations
    return train_doc


def cmd_train(args) -> int:
    cfg = _build_config("xor_compare", args, dataset=args.dataset, backend=args.backend, shots=args.shots,
                        depolarizing=args.depolarizing)
    cfg = replace(cfg, train=replace(cfg.train, **_train_overrides(args)))
    dataset = cfg.load_dataset()
    handle = _handle(cfg, args.model)
    res = run_series(args.model, handle, args.model, dataset, cfg, cfg.train)
    report = ExperimentReport("train", {args.model: res})
    if hasattr(handle, "jobs"):
        report.jobs = [{"job_id": j.job_id, "status": j.status, **j.payload} for j in handle.jobs]
    out = Path(cfg.out) / "train"
    write_report(report, out)
    if res.traces:
        backend = getattr(handle, "backend", None)
        specs = [ModelSpec(args.model, tr.final_params, backend).to_dict() if backend else
                 {"kind": args.model, "params": tr.final_params.tolist()} for tr in res.traces]
        (out / f"{args.model}_models.json").write_text(json.dumps(specs, indent=2) + "\n")
    if res.stats is None:
        print(f"{args.model}: all {cfg.trials} trials failed", file=sys.stderr)
        return 1
    s = res.stats
    print(f"{args.model} on {dataset.name} [{handle.name}]: final loss {float(s.final_loss.mean):.4f} "
          f"+- {float(s.final_loss.std):.4f}, accuracy {float(s.final_accuracy.mean):.3f} (n={s.n}); wrote {out}")
    return 0


def cmd_ed(args) -> int:
    ed_doc = {k: v for k, v in (("n", args.n), ("gamma", args.gamma), ("n_theta", args.n_theta),
                                ("n_data", args.n_data), ("inputs", args.inputs)) if v is not None}
    cfg = _build_config("ed_table", args, models=tuple(args.models) if args.models else None)
    cfg = replace(cfg, ed=replace(cfg.ed, **ed_doc))
    report = run_experiment(cfg)
    _, rows = report.tables["ed_table"]
    print("model  d  normalized_ed  seed")
    for r in rows:
        print(f"{r[0]:5s} {r[1]:2d}  {float(r[5]):.4f}        {r[6]}")
    print(f"wrote {Path(cfg.out) / cfg.experiment}")
    return 0


def cmd_sweep_shots(args) -> int:
    cfg = _build_config("shot_sweep", args, models=(args.model,) if args.model else None,
                        shot_counts=tuple(args.shots) if args.shots else None,
                        backend=args.backend)
    if args.iterations is not None:
        cfg = replace(cfg, train=replace(cfg.train, max_iterations=args.iterations))
    report = run_experiment(cfg)
    print("series              n  final_loss  std     accuracy")
    for res in report.series.values():
        if res.stats is None:
            print(f"{res.name:18s}  0  (all trials failed)")
            continue
        s = res.stats
        print(f"{res.name:18s} {s.n:2d}  {float(s.final_loss.mean):.4f}     {float(s.final_loss.std):.4f}  "
              f"{float(s.final_accuracy.mean):.3f}")
    print(f"wrote {Path(cfg.out) / cfg.experiment}")
    return 0


def cmd_throughput(args) -> int:
    if args.rep_rate is not None:
        rate = net_shot_rate(args.rep_rate, args.transmittance, args.gate_success, args.brightness)
        print(f"{rate:.1f} Hz")
        return 0
    rows = throughput_table(NoiseParams())
    for r in rows:
        print(f"{r[0]:34s} {float(r[-1]):>14.1f} Hz")
    if args.out:
        out = Path(args.out) / "throughput"
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(THROUGHPUT_COLUMNS, rows, out / "throughput.csv")
        print(f"wrote {out / 'throughput.csv'}")
    return 0


def cmd_reproduce(args) -> int:
    cfg = _build_config(args.experiment, args, workers=args.workers)
    report = run_experiment(cfg)
    for res in report.series.values():
        if res.stats is None:
            print(f"{res.name}: no completed trials")
        else:
            print(f"{res.name}: final loss {float(res.stats.final_loss.mean):.4f}, "
                  f"accuracy {float(res.stats.final_accuracy.mean):.3f} (n={res.stats.n})")
    for name, (_, rows) in report.tables.items():
        print(f"{name}: {len(rows)} rows")
    print(f"wrote {len(report.files)} files to {Path(cfg.out) / cfg.experiment}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photonic-qnn", description="Photonic and classical toy-classifier experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write the XOR or Iris dataset as x0,x1,label CSV")
    p.add_argument("kind", choices=("xor", "iris"))
    p.add_argument("--n-per-cluster", type=int, default=16)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--iris-path", default=None, help="standard 150-row Iris CSV (bundled copy by default)")
    p.add_argument("--normalization", choices=("max", "minmax"), default="max")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output CSV path")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one model over several seeded trials")
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument("--dataset", default="xor", help="xor, iris, or a x0,x1,label CSV path")
    p.add_argument("--backend", choices=BACKEND_NAMES, default=None)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--depolarizing", type=float, default=None)
    p.add_argument("--optimizer", choices=("cobyla", "adam"), default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ed", help="normalized effective dimension of the four models")
    p.add_argument("--models", nargs="+", choices=MODEL_KINDS, default=None)
    p.add_argument("--n", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--n-theta", type=int, default=None)
    p.add_argument("--n-data", type=int, default=None)
    p.add_argument("--inputs", choices=("iris", "uniform"), default=None)
    _common(p)
    p.set_defaults(func=cmd_ed)

    p = sub.add_parser("sweep-shots", help="final loss and accuracy against shots per evaluation")
    p.add_argument("--model", choices=("QNN2", "QNN6"), default=None)
    p.add_argument("--shots", type=int, nargs="+", default=None)
    p.add_argument("--backend", choices=("photonic", "sampled"), default=None)
    p.add_argument("--iterations", type=int, default=None)
    _common(p)
    p.set_defaults(func=cmd_sweep_shots)

    p = sub.add_parser("throughput", help="net accepted-shot rates")
    p.add_argument("--rep-rate", type=float, default=None, help="source repetition rate in Hz")
    p.add_argument("--transmittance", type=float, default=0.022)
    p.add_argument("--gate-success", type=float, default=1 / 9)
    p.add_argument("--brightness", type=float, default=None)
    _common(p)
    p.set_defaults(func=cmd_throughput)

    p = sub.add_parser("reproduce", help="run one experiment end to end and write its report")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--workers", type=int, default=None, help="parallel worker processes for trials")
    _common(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, CapabilityError, IngestionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
