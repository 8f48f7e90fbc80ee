"""Command-line front end: generate, train, evaluate, solve, inspect."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import fem, pipeline, surrogate
from .config import RunConfig, load_config
from .homogenize import EffectiveTensorField, HomogenizationError, effective_field, write_effective_csv
from .randfield import sample_field, write_field_csv
from .richards import picard_solve_steady, picard_solve_transient, write_solution_csv

log = logging.getLogger("richards_homog")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_FLAG_NAMES = {"batch_size": "--batch"}


def _flag(name: str) -> str:
    return _FLAG_NAMES.get(name, "--" + name.replace("_", "-"))


def _config_parent() -> argparse.ArgumentParser:
    defaults = RunConfig()
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration (flags override --config)")
    g.add_argument("--config", type=Path, default=None, help="INI file with a [run] section")
    for f in fields(RunConfig):
        default = getattr(defaults, f.name)
        flag = _flag(f.name)
        if f.type == "bool":
            g.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None,
                           help=f"(default: {default})")
        elif f.name == "record_steps":
            g.add_argument(flag, dest=f.name, type=int, nargs="*", default=None,
                           help=f"(default: {' '.join(map(str, default))})")
        else:
            conv = int if f.type == "int" else float
            g.add_argument(flag, dest=f.name, type=conv, default=None, help=f"(default: {default})")
    return p


def _resolve(args) -> RunConfig:
    over = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    if over.get("record_steps") is not None:
        over["record_steps"] = tuple(over["record_steps"])
    return load_config(args.config, **over)


def _dataset_config(ds: pipeline.Dataset, args) -> RunConfig:
    """Physics from the dataset header, training knobs from flags and config file."""
    cfg = _resolve(args)
    return ds.header.run_config(cfg)


def _require(path: Path, what: str) -> Path:
    if not Path(path).is_file():
        raise UsageError(f"{what} not found: {path}")
    return Path(path)


def _load_dataset(path) -> pipeline.Dataset:
    ds = pipeline.read_dataset(_require(path, "dataset"))
    if len(ds) == 0:
        raise UsageError(f"dataset {path} holds no samples")
    return ds


# commands ---------------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    cfg = _resolve(args)
    out = Path(args.out)
    ds = pipeline.generate_dataset(args.count, cfg.seed, cfg, out, workers=args.workers)
    if len(ds) == 0:
        log.error("every sample failed; nothing written")
        return EXIT_RUNTIME
    manifest = {
        "dataset": out.name,
        "requested": args.count,
        "written": len(ds),
        "skipped": ds.skipped,
        "base_seed": cfg.seed,
        "config": cfg.to_dict(),
    }
    mpath = Path(args.manifest) if args.manifest else out.with_name(out.name + ".manifest.json")
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(ds)} samples to {out}")
    return EXIT_OK


def _parse_step(raw):
    if raw is None or raw == "steady":
        return raw
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"--step must be an integer or 'steady', got {raw!r}") from None


def cmd_train(args) -> int:
    ds = _load_dataset(args.dataset)
    cfg = _dataset_config(ds, args)
    step = _parse_step(args.step)
    kind = args.target
    if kind == "kappa":
        step = None
    elif step is None:
        if kind == "matrix" and ds.header.has_steady and not ds.header.recorded_steps:
            step = "steady"
        else:
            raise UsageError(f"--step is required for {kind} targets on a transient dataset "
                             f"(recorded steps {list(ds.header.recorded_steps)})")
    elif step == "steady" and kind == "rhs":
        raise UsageError("rhs targets exist only for time steps")
    try:
        Y = ds.targets(kind, step)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    train_idx, _ = pipeline.split_indices(len(ds), cfg.test_fraction, cfg.split_seed)
    meta = {"target": kind, "step": step, "dataset_base_seed": ds.header.base_seed,
            "split_seed": cfg.split_seed, "test_fraction": cfg.test_fraction}
    model, report = surrogate.train_surrogate(
        ds.features[train_idx], Y[train_idx], kind, epochs=cfg.epochs, batch_size=cfg.batch_size,
        seed=cfg.seed, validation_fraction=cfg.validation_fraction, metadata=meta)
    out = Path(args.out)
    surrogate.save_model(model, out)
    curve = Path(args.curve) if args.curve else out.with_suffix(".curve.csv")
    with open(curve, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_rmse", "val_rmse"])
        for e, (a, b) in enumerate(zip(report.train_rmse, report.val_rmse), start=1):
            w.writerow([e, repr(a), repr(b)])
    print(f"wrote model {out} and curve {curve}")
    return EXIT_OK


def model_filename(kind: str, step=None) -> str:
    """File naming used inside a models directory."""
    if kind == "kappa":
        return "kappa.json"
    if step in (None, "steady"):
        return f"{kind}_steady.json"
    return f"{kind}_step{int(step)}.json"


def _model(ds, models_dir, kind, step, oracle):
    if oracle:
        return pipeline.TargetOracle(ds.features, ds.targets(kind, step))
    path = _require(Path(models_dir) / model_filename(kind, step), "model file")
    model = surrogate.load_model(path)
    dims = model.net.layer_dims
    want = (ds.features.shape[1], ds.targets(kind, step).shape[1])
    if (dims[0], dims[-1]) != want:
        raise UsageError(f"{path}: network maps {dims[0]} -> {dims[-1]}, dataset needs {want[0]} -> {want[1]}")
    return model


def cmd_evaluate(args) -> int:
    ds = _load_dataset(args.dataset)
    cfg = _dataset_config(ds, args)
    if args.models is None and not args.oracle:
        raise UsageError("give --models DIR or --oracle")
    ws = pipeline.build_workspace(cfg)
    _, test_idx = pipeline.split_indices(len(ds), cfg.test_fraction, cfg.split_seed)
    kappa = _model(ds, args.models, "kappa", None, args.oracle)
    if args.mode == "steady":
        if not ds.header.has_steady:
            raise UsageError("dataset has no steady targets")
        res = pipeline.run_steady_experiment(ds, kappa, _model(ds, args.models, "matrix", "steady", args.oracle),
                                             test_idx, ws)
        order = ["e_kappa", "e_matrix", "eE_L2", "eE_H1", "eA_L2", "eA_H1"]
    else:
        steps = args.steps or list(ds.header.recorded_steps)
        for k in steps:
            if k not in ds.header.recorded_steps:
                raise UsageError(f"step {k} not recorded in dataset")
        step_models = {k: (_model(ds, args.models, "matrix", k, args.oracle),
                           _model(ds, args.models, "rhs", k, args.oracle)) for k in steps}
        res = pipeline.run_transient_experiment(ds, kappa, step_models, test_idx, ws)
        order = (["e_kappa"] + [f"e_matrix_step{k}" for k in steps] + [f"e_b_step{k}" for k in steps]
                 + ["eE_L2", "eE_H1", "eA_L2", "eA_H1"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pipeline.write_rows_csv(out / f"errors_{args.mode}.csv", res.rows, order)
    pipeline.write_summary_csv(out / f"summary_{args.mode}.csv", res.reports)
    for name, p in res.solutions.items():
        write_solution_csv(out / f"solution_{args.mode}_{name}.csv", ws.coarse, p)
    for rep in res.reports.values():
        if rep.name in order:
            print(f"{rep.name:>10s}  min {rep.min:.4e}  mean {rep.mean:.4e}  max {rep.max:.4e}")
    if any(r.failures for r in res.reports.values()):
        log.error("some predicted systems could not be solved; see %s", out)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _resolve(args)
    ws = pipeline.build_workspace(cfg)
    fld = sample_field(ws.basis, cfg.seed, (cfg.kappa_min, cfg.kappa_max), ws.fine)
    if args.kappa_model:
        model = surrogate.load_model(_require(Path(args.kappa_model), "model file"))
        eff = EffectiveTensorField.from_vector(model.predict(fld.feature_vector[None])[0], cfg.coarse_side)
    else:
        eff = effective_field(fld, ws.fine, ws.coarse)
    if args.mode == "steady":
        p, trace = picard_solve_steady(ws.coarse, eff, pipeline.steady_source, ws.picard)
    else:
        p, trace = picard_solve_transient(ws.coarse, eff, pipeline.transient_source, ws.time, ws.picard)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_field_csv(out / "field.csv", fld, ws.fine)
    write_effective_csv(out / "effective.csv", eff)
    write_solution_csv(out / "solution.csv", ws.coarse, p)
    l2, h1 = fem.discrete_norms(ws.coarse, p)
    print(f"seed {cfg.seed}: |p|_L2 {l2:.6e}  |p|_H1 {h1:.6e}  "
          f"picard iterations {[s.iterations for s in trace.steps]}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    path = _require(Path(args.path), "file")
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == pipeline.MAGIC:
        with open(path, "rb") as fh:
            head = pipeline.DatasetHeader.unpack(fh)
        info = dict(vars(head))
        info["recorded_steps"] = list(head.recorded_steps)
        info["record_length"] = head.record_length
        info["kind"] = "dataset"
    else:
        m = surrogate.load_model(path)
        info = {"kind": "model", "layer_dims": m.net.layer_dims, "activations": m.net.activations,
                "seed": m.seed, "metadata": m.metadata}
    print(json.dumps(info, indent=2, sort_keys=True))
    return EXIT_OK


class _DefaultsFormatter(argparse.HelpFormatter):
    # show real defaults only; the run-config flags carry their own
    def _get_help_string(self, action):
        h = action.help or ""
        if "default" in h or action.default in (None, argparse.SUPPRESS) or not action.option_strings:
            return h
        return f"{h} (default: %(default)s)"


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    p = _Parser(prog="richards-homog", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = _DefaultsFormatter

    g = sub.add_parser("generate", parents=[parent], formatter_class=fmt,
                       help="sample fields and build a dataset file")
    g.add_argument("--count", type=int, required=True, help="number of samples")
    g.add_argument("--out", type=Path, required=True, help="dataset path")
    g.add_argument("--manifest", type=Path, default=None, help="manifest path (default: OUT.manifest.json)")
    g.add_argument("--workers", type=int, default=1, help="worker processes")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", parents=[parent], formatter_class=fmt, help="train one surrogate")
    t.add_argument("--dataset", type=Path, required=True)
    t.add_argument("--target", choices=["kappa", "matrix", "rhs"], required=True)
    t.add_argument("--step", default=None, help="time step, or 'steady' for the steady matrix")
    t.add_argument("--out", type=Path, required=True, help="model path")
    t.add_argument("--curve", type=Path, default=None, help="curve CSV (default: next to the model)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", parents=[parent], formatter_class=fmt,
                       help="compare surrogate-based solutions with references")
    e.add_argument("--dataset", type=Path, required=True)
    e.add_argument("--models", type=Path, default=None,
                   help="directory with kappa.json, matrix_steady.json, matrix_stepK.json, rhs_stepK.json")
    e.add_argument("--mode", choices=["steady", "transient"], default="steady")
    e.add_argument("--steps", type=int, nargs="*", default=None, help="time steps (default: all recorded)")
    e.add_argument("--oracle", action="store_true", help="use exact targets in place of networks")
    e.add_argument("--out", type=Path, required=True, help="report directory")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("solve", parents=[parent], formatter_class=fmt,
                       help="one field (from --seed) through homogenization and the coarse solver")
    s.add_argument("--mode", choices=["steady", "transient"], default="steady")
    s.add_argument("--kappa-model", type=Path, default=None, help="use a trained tensor network")
    s.add_argument("--out", type=Path, required=True, help="output directory")
    s.set_defaults(func=cmd_solve)

    i = sub.add_parser("inspect", formatter_class=fmt, help="print a dataset or model header")
    i.add_argument("path", type=Path)
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError, OSError) as exc:
        # includes config validation, bad datasets and malformed model files
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (fem.SolverError, HomogenizationError, FloatingPointError, ArithmeticError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
