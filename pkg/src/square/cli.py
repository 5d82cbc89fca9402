"""Command-line front end: ``square fit | predict | simulate | replicate``.

Exit codes: 0 on success, 2 for input or configuration errors, 3 for
numerical failures. Options may come from a JSON file (``--config``);
flags given on the command line take precedence.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from .baselines import fit_cc, fit_cc_jma, fit_imp_mma
from .block_data import ingest_csv, load_partition_config
from .core import fit_square
from .exceptions import ConfigError, CsvParseError, DataError, NumericalError, SquareError
from .persistence import load_model, save_model
from .sim.design import SimConfig
from .sim.monte_carlo import METHODS, run_monte_carlo
from .sim.replication import EXPERIMENTS
from .smoothers import LinearSmoother

log = logging.getLogger("square")

FITTERS = {"SQUARE": fit_square, "CC": fit_cc, "CC-JMA": fit_cc_jma, "IMP-MMA": fit_imp_mma}
SIM_FLAGS = ("structure", "case", "r2", "n0", "n1", "n_test", "n_grid", "B")


@dataclass
class RunConfig:
    """Validated options for one command."""

    command: str
    data: str | None = None
    partition: object = None
    model: str | None = None
    method: str = "SQUARE"
    smoothers: dict | None = None
    methods: list | None = None
    sim: dict = field(default_factory=dict)
    experiment: str | None = None
    reps: int = 1000
    out: str = "."
    seed: int | None = None
    jobs: int = 1
    verbose: int = 0

    ALLOWED = {
        "fit": {"data", "partition", "method", "smoothers", "out", "verbose"},
        "predict": {"data", "model", "out", "verbose"},
        "simulate": {"sim", "methods", "out", "seed", "jobs", "verbose"},
        "replicate": {"experiment", "reps", "out", "seed", "verbose"},
    }

    @classmethod
    def build(cls, command, file_cfg: dict, overrides: dict) -> "RunConfig":
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_cfg) - cls.ALLOWED[command]
        if unknown:
            raise ConfigError(f"unknown config keys for '{command}': {sorted(unknown)}")
        merged = dict(file_cfg)
        sim = dict(merged.get("sim", {}))
        for k, v in overrides.items():
            if v is None:
                continue
            if k in SIM_FLAGS:
                sim[k] = v
            else:
                merged[k] = v
        if sim:
            merged["sim"] = sim
        names = {f.name for f in fields(cls)}
        cfg = cls(command=command, **{k: v for k, v in merged.items() if k in names})
        cfg.validate()
        return cfg

    def validate(self):
        if self.seed is not None and not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.command in ("simulate", "replicate") and self.seed is None:
            raise ConfigError(f"--seed is required for '{self.command}'")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError("jobs must be a positive integer")
        if self.command == "fit":
            if not self.data or self.partition is None:
                raise ConfigError("fit needs --data and --partition")
            if self.method not in FITTERS:
                raise ConfigError(f"unknown method {self.method!r}; choose from {list(FITTERS)}")
            if self.smoothers is not None and self.method != "SQUARE":
                raise ConfigError("smoother specs apply to SQUARE only")
        elif self.command == "predict":
            if not self.data or not self.model:
                raise ConfigError("predict needs --data and --model")
        elif self.command == "simulate":
            unknown = [m for m in (self.methods or []) if m not in METHODS]
            if unknown:
                raise ConfigError(f"unknown methods {unknown}; choose from {list(METHODS)}")
            bad = set(self.sim) - {f.name for f in fields(SimConfig)}
            if bad:
                raise ConfigError(f"unknown simulation settings: {sorted(bad)}")
        elif self.command == "replicate":
            if self.experiment not in EXPERIMENTS:
                raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {list(EXPERIMENTS)}")
            if not isinstance(self.reps, int) or self.reps < 1:
                raise ConfigError("reps must be a positive integer")


def _smoothers_from_spec(spec):
    """``{"2": {"kind": "spline", "n_knots": 3}, ...}`` keyed by block id."""
    if spec is None:
        return None
    if not isinstance(spec, dict):
        raise ConfigError("smoothers must map block ids to smoother settings")
    out = {}
    allowed = set(LinearSmoother().get_params())
    for key, params in spec.items():
        try:
            block = int(key)
        except ValueError:
            raise ConfigError(f"smoother key {key!r} is not a block id") from None
        if not isinstance(params, dict) or set(params) - allowed:
            raise ConfigError(f"smoother for block {block}: settings must be a subset of {sorted(allowed)}")
        out[block] = LinearSmoother(**params)
    return out


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def cmd_fit(cfg: RunConfig) -> int:
    partition, response, na = load_partition_config(cfg.partition)
    dataset = ingest_csv(cfg.data, partition, response=response, na=na)
    log.info("read %d cases; group sizes %s", dataset.n, dataset.group_sizes)
    if cfg.method == "SQUARE":
        model = fit_square(dataset, _smoothers_from_spec(cfg.smoothers))
        summary = {
            "method": "SQUARE",
            "weights": model.weights.tolist(),
            "criterion": model.criterion,
            "block_ids": model.diagnostics["block_ids"],
            "group_sizes": list(dataset.group_sizes),
            "max_leverage": model.diagnostics["max_leverage"],
            "kkt_residual": model.diagnostics["kkt_residual"],
        }
    else:
        model = FITTERS[cfg.method](dataset)
        summary = {
            "method": cfg.method,
            "weights": model.weights.tolist(),
            "block_ids": [c.block_id for c in model.candidates],
            "group_sizes": list(dataset.group_sizes),
            "sigma2": model.sigma2,
        }
    os.makedirs(cfg.out, exist_ok=True)
    save_model(model, os.path.join(cfg.out, "model.json"))
    _write_json(os.path.join(cfg.out, "summary.json"), summary)
    print("weights: " + " ".join("%.6g" % w for w in model.weights))
    return 0


def read_covariates(path, names, na="NA") -> np.ndarray:
    """Covariate matrix in the order of ``names``; other columns are ignored, absent ones are all-missing."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    index = {h: j for j, h in enumerate(header)}
    X = np.full((len(rows) - 1, len(names)), np.nan)
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise CsvParseError(f"line {i + 2}: expected {len(header)} fields, got {len(row)}", line=i + 2)
        for k, name in enumerate(names):
            if name not in index:
                continue
            text = row[index[name]].strip()
            if text == na or text == "":
                continue
            try:
                X[i, k] = float(text)
            except ValueError:
                raise CsvParseError(f"line {i + 2}, column {name!r}: cannot parse {text!r} as a number",
                                    line=i + 2, column=name) from None
    return X


def cmd_predict(cfg: RunConfig) -> int:
    model = load_model(cfg.model)
    names = list(model.covariate_names) or [f"x{j}" for j in range(model.partition.p)]
    X = read_covariates(cfg.data, names)
    pred = model.predict(X)
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "predictions.csv"), "w", newline="") as fh:
        fh.write("pred\n")
        fh.writelines("%.17g\n" % v for v in pred)
    log.info("wrote %d predictions", len(pred))
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    sim = dict(cfg.sim)
    sim["seed"] = cfg.seed
    config = SimConfig(**sim)
    report = run_monte_carlo(config, cfg.methods, jobs=cfg.jobs)
    os.makedirs(cfg.out, exist_ok=True)
    report.to_json(os.path.join(cfg.out, "report.json"))
    report.to_csv(os.path.join(cfg.out, "results.csv"))
    print(report.table())
    return 0


def cmd_replicate(cfg: RunConfig) -> int:
    kwargs = {"seed": cfg.seed}
    if cfg.experiment == "illustrative":
        kwargs["reps"] = cfg.reps
    checks = EXPERIMENTS[cfg.experiment](**kwargs)
    for c in checks:
        print(c.line())
    if cfg.out and cfg.out != ".":
        os.makedirs(cfg.out, exist_ok=True)
        _write_json(os.path.join(cfg.out, f"{cfg.experiment}.json"), [
            {"name": c.name, "observed": np.asarray(c.observed).tolist(), "expected": c.expected, "passed": c.passed}
            for c in checks])
    return 0


COMMANDS = {"fit": cmd_fit, "predict": cmd_predict, "simulate": cmd_simulate, "replicate": cmd_replicate}


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="JSON file with options; flags override it")
    shared.add_argument("--out", help="output directory (default: current directory)")
    shared.add_argument("--seed", type=_u64, help="master seed (required for simulate and replicate)")
    shared.add_argument("--jobs", type=int, help="worker processes for simulate")
    shared.add_argument("-v", "--verbose", action="count", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="square", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[shared], help="fit a model to a block-wise observed CSV")
    p.add_argument("--data", help="training CSV")
    p.add_argument("--partition", help="partition JSON, e.g. {\"block_sizes\": [3, 5, 5]}")
    p.add_argument("--method", choices=list(FITTERS))
    p.add_argument("--smoothers", type=json.loads, help="JSON object: block id -> smoother settings")

    p = sub.add_parser("predict", parents=[shared], help="predict new cases with a saved model")
    p.add_argument("--model", help="model.json written by fit")
    p.add_argument("--data", help="CSV of new cases; columns matched by name")

    p = sub.add_parser("simulate", parents=[shared], help="Monte Carlo comparison on synthetic data")
    p.add_argument("--structure", help="I, II, or comma-separated block sizes")
    p.add_argument("--case", type=int)
    p.add_argument("--r2", type=float)
    p.add_argument("--n0", type=int)
    p.add_argument("--n1", type=int)
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("--n-grid", dest="n_grid", type=int)
    p.add_argument("--B", "--reps", dest="B", type=int, help="number of replicates")
    p.add_argument("--methods", type=lambda s: s.split(","), help="comma-separated subset of " + ",".join(METHODS))

    p = sub.add_parser("replicate", parents=[shared], help="run a canned replication experiment")
    p.add_argument("experiment", help=" | ".join(EXPERIMENTS))
    p.add_argument("--reps", type=int, help="replicates for the illustrative experiment (default 1000)")
    return parser


def _structure(value):
    if value is None or value in ("I", "II"):
        return value
    try:
        return [int(s) for s in str(value).split(",")]
    except ValueError:
        raise ConfigError(f"structure must be I, II or comma-separated sizes, got {value!r}") from None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_cfg = {}
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        if "structure" in overrides:
            overrides["structure"] = _structure(overrides["structure"])
        cfg = RunConfig.build(args.command, file_cfg, overrides)
        return COMMANDS[args.command](cfg)
    except NumericalError as e:
        print(f"square {args.command}: numerical error: {e}", file=sys.stderr)
        return 3
    except (SquareError, OSError, ValueError, TypeError) as e:
        # JSON decode errors, bad flag values and malformed configs land here
        print(f"square {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
