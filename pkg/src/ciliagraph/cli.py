"""Command-line entry point.

Every subcommand resolves a RunConfig from built-in defaults, then an
optional JSON config file (a run manifest is accepted too, its ``config``
entry is used), then explicit flags. Failures print one JSON line on stderr
and exit with the code of the error class: 2 input, 3 compatibility,
4 integrity, 5 internal.
"""

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from ciliagraph import __version__, aggregation
from ciliagraph.baselines import ablation_hyper_weight
from ciliagraph.classifier import ModelConfig, evaluate, load_model, save_model, train
from ciliagraph.datasets import SplitSpec, parse_tudataset, split, stats
from ciliagraph.encoder import (
    DEFAULT_LEVELS,
    epsilon_threshold,
    minimum_dimension,
    quasi_orthogonal_capacity,
)
from ciliagraph.errors import CiliaGraphError, InputError
from ciliagraph.experiments import ALL_VARIANTS, default_dim, run_seeds, seed_list

OUTPUT_SCHEMA_VERSION = 1
SEED_ENV = "CILIAGRAPH_SEED"
SWEEP_SEEDS = 10


@dataclass
class RunConfig:
    dataset_dir: str | None = None
    dataset_name: str | None = None
    dim: int | None = None  # None resolves per variant
    levels: int = DEFAULT_LEVELS
    seed: int = 0
    test_fraction: float = 0.1
    stratified: bool = True
    variant: str = "full"
    weight_mode: str = "hadamard"
    seeds: int | None = None
    output_path: str | None = None

    @property
    def resolved_dim(self) -> int:
        return default_dim(self.variant) if self.dim is None else self.dim

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dim"] = self.resolved_dim
        return d


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}
# flag dest -> RunConfig field
_FLAG_FIELDS = {
    "data": "dataset_dir",
    "dataset": "dataset_name",
    "dim": "dim",
    "levels": "levels",
    "seed": "seed",
    "test_fraction": "test_fraction",
    "variant": "variant",
    "weight_mode": "weight_mode",
    "seeds": "seeds",
    "out": "output_path",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _read_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"config file does not exist: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"config file {p} is not valid JSON: {exc}") from None
    if isinstance(doc, dict) and isinstance(doc.get("config"), dict):
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise InputError(f"config file {p} must hold a JSON object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise InputError(f"unknown config keys in {p}: {sorted(unknown)}")
    return doc


def resolve_config(args: argparse.Namespace, environ=None) -> RunConfig:
    """Defaults, then the environment seed, then a config file, then flags."""
    environ = os.environ if environ is None else environ
    cfg = RunConfig()
    if environ.get(SEED_ENV):
        try:
            cfg.seed = int(environ[SEED_ENV])
        except ValueError:
            raise InputError(f"{SEED_ENV} must be an integer, got {environ[SEED_ENV]!r}") from None
    if getattr(args, "config", None):
        cfg = replace(cfg, **_read_config_file(args.config))
    for flag, name in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "uniform_quant", False):
        cfg.variant = "uniform-quant"
    return cfg


def _load_dataset(cfg: RunConfig):
    if not cfg.dataset_dir or not cfg.dataset_name:
        raise InputError("both --data and --dataset are required")
    return parse_tudataset(cfg.dataset_dir, cfg.dataset_name)


def version_string() -> str:
    """Package version plus ``git describe`` of the source tree when available."""
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _write_json(doc: dict, path) -> None:
    if path is None or str(path) == "-":
        print(json.dumps(doc, indent=2))
        return
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _envelope(command: str, cfg: RunConfig, **body) -> dict:
    return {
        "schema_version": OUTPUT_SCHEMA_VERSION,
        "command": command,
        "version": version_string(),
        "config": cfg.to_dict(),
        **body,
    }


def manifest_path(model_path) -> Path:
    return Path(f"{model_path}.manifest.json")


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    if cfg.output_path is None:
        raise InputError("train needs --out for the model file")
    if cfg.variant == "graphhd":
        raise InputError("graphhd has no persisted model; use the baseline command")
    dataset = _load_dataset(cfg)
    spec = SplitSpec(mode="holdout", test_fraction=cfg.test_fraction, seed=cfg.seed, stratified=cfg.stratified)
    load_start = time.perf_counter()
    train_set, test_set = split(dataset, spec)
    config = ModelConfig(
        dim=cfg.resolved_dim,
        levels=cfg.levels,
        seed=cfg.seed,
        variant=cfg.variant,
        weight_mode=cfg.weight_mode,
        split=asdict(spec),
    )
    model = train(train_set, config)
    report = evaluate(model, test_set)
    save_model(model, cfg.output_path)
    model_bytes = Path(cfg.output_path).read_bytes()
    manifest = _envelope(
        "train",
        cfg,
        seed=cfg.seed,
        variant=cfg.variant,
        model_path=str(cfg.output_path),
        model_sha256=hashlib.sha256(model_bytes).hexdigest(),
        timings={
            "train_s": model.train_time_s,
            "infer_s": report.infer_time_s,
            "total_s": time.perf_counter() - load_start,
        },
        holdout_report=report.to_dict(),
    )
    _write_json(manifest, manifest_path(cfg.output_path))
    print(f"accuracy={report.accuracy:.4f} test_count={report.test_count} model={cfg.output_path}")
    return 0


def cmd_eval(args) -> int:
    cfg = resolve_config(args)
    model = load_model(args.model)
    dataset = _load_dataset(cfg)
    if model.config.split is not None:
        _, test_set = split(dataset, SplitSpec(**model.config.split))
    else:
        test_set = dataset
    report = evaluate(model, test_set)
    _write_json(report.to_dict(), cfg.output_path)
    print(f"accuracy={report.accuracy:.4f} test_count={report.test_count}", file=sys.stderr if cfg.output_path in (None, "-") else sys.stdout)
    return 0


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _sweep_rows(dataset, cfg: RunConfig, values, key: str):
    rows = []
    n = dataset.attr_count
    for value in values:
        dim = value if key == "dim" else cfg.resolved_dim
        levels = value if key == "levels" else cfg.levels
        summary = run_seeds(
            dataset,
            seed_list(cfg.seed, cfg.seeds or SWEEP_SEEDS),
            dim=dim,
            levels=levels,
            variant=cfg.variant,
            test_fraction=cfg.test_fraction,
            stratified=cfg.stratified,
            weight_mode=cfg.weight_mode,
        )
        d_min = minimum_dimension(levels, n)
        row = {"dim": dim, "levels": levels, "d_min": d_min, "below_d_min": dim < d_min}
        row.update(summary.to_dict())
        rows.append(row)
        print(f"{key}={value} mean={summary.mean:.4f} std={summary.std:.4f} d_min={d_min}", file=sys.stderr)
    return rows


def cmd_sweep_dim(args) -> int:
    cfg = resolve_config(args)
    if not args.dims:
        raise InputError("sweep-dim needs at least one dimension")
    dataset = _load_dataset(cfg)
    rows = _sweep_rows(dataset, cfg, args.dims, "dim")
    _write_json(_envelope("sweep-dim", cfg, sweep="dim", rows=rows), cfg.output_path)
    return 0


def cmd_sweep_levels(args) -> int:
    cfg = resolve_config(args)
    if not args.levels_list:
        raise InputError("sweep-levels needs at least one level count")
    bad = [m for m in args.levels_list if m <= 2]
    if bad:
        raise InputError(f"quantization levels must satisfy m > 2, got {bad}")
    dataset = _load_dataset(cfg)
    rows = _sweep_rows(dataset, cfg, args.levels_list, "levels")
    _write_json(_envelope("sweep-levels", cfg, sweep="levels", rows=rows), cfg.output_path)
    return 0


def _dense(m) -> list:
    return np.asarray(m.todense()).tolist()


def _dump_weights(cfg: RunConfig, dataset, path, limit: int) -> None:
    """Training-set hyper-weights of the first ``limit`` graphs, dense, as JSON."""
    spec = SplitSpec(mode="holdout", test_fraction=cfg.test_fraction, seed=cfg.seed, stratified=cfg.stratified)
    train_set, _ = split(dataset, spec)
    model = train(train_set, ModelConfig(cfg.resolved_dim, cfg.levels, cfg.seed, cfg.variant, cfg.weight_mode))
    graphs = []
    for g in train_set.graphs[:limit]:
        h = model.encoder.node_hvs(g)
        graphs.append(
            {
                "nodes": g.node_count,
                "edges": g.edges.tolist(),
                "W": _dense(aggregation.similarity_matrix(h, g)),
                "T": _dense(aggregation.transition_matrix(g)),
                "P": _dense(ablation_hyper_weight(g, h, cfg.variant, cfg.weight_mode)),
            }
        )
    _write_json({"schema_version": OUTPUT_SCHEMA_VERSION, "variant": cfg.variant, "graphs": graphs}, path)


def _run_summary(command: str, cfg: RunConfig) -> int:
    dataset = _load_dataset(cfg)
    summary = run_seeds(
        dataset,
        seed_list(cfg.seed, cfg.seeds or 1),
        dim=cfg.resolved_dim,
        levels=cfg.levels,
        variant=cfg.variant,
        test_fraction=cfg.test_fraction,
        stratified=cfg.stratified,
        weight_mode=cfg.weight_mode,
    )
    _write_json(_envelope(command, cfg, variant=cfg.variant, dim=cfg.resolved_dim, **summary.to_dict()), cfg.output_path)
    print(f"variant={cfg.variant} dim={cfg.resolved_dim} mean={summary.mean:.4f} std={summary.std:.4f}", file=sys.stderr)
    return 0


def cmd_ablate(args) -> int:
    cfg = resolve_config(args)
    if cfg.variant not in ("p1", "p2", "p3"):
        raise InputError(f"ablate needs --variant p1, p2 or p3, got {cfg.variant!r}")
    if args.dump_weights:
        _dump_weights(cfg, _load_dataset(cfg), args.dump_weights, args.dump_limit)
    return _run_summary("ablate", cfg)


def cmd_baseline(args) -> int:
    cfg = resolve_config(args)
    if cfg.variant not in ("graphhd", "record"):
        raise InputError(f"baseline needs --variant graphhd or record, got {cfg.variant!r}")
    return _run_summary("baseline", cfg)


def cmd_stats(args) -> int:
    cfg = resolve_config(args)
    dataset = _load_dataset(cfg)
    doc = {"schema_version": OUTPUT_SCHEMA_VERSION, "dataset": dataset.name, **stats(dataset).to_dict()}
    _write_json(doc, cfg.output_path)
    return 0


def cmd_dims(args) -> int:
    m = args.levels if args.levels is not None else DEFAULT_LEVELS
    n = args.attrs
    if m <= 2:
        raise InputError(f"quantization levels must satisfy m > 2, got {m}")
    if n < 1:
        raise InputError(f"attribute count must be positive, got {n}")
    d_min = minimum_dimension(m, n)
    eps = epsilon_threshold(m)
    doc = {
        "schema_version": OUTPUT_SCHEMA_VERSION,
        "levels": m,
        "attrs": n,
        "minimum_dimension": d_min,
        "epsilon": eps,
        "capacity_at_minimum": quasi_orthogonal_capacity(d_min, eps),
        "required_capacity": 2 * n,
    }
    _write_json(doc, args.out)
    return 0


def _add_common(p: argparse.ArgumentParser, dataset: bool = True) -> None:
    if dataset:
        p.add_argument("--data", help="directory holding the TUDataset files")
        p.add_argument("--dataset", help="dataset name, e.g. Letter-low")
    p.add_argument("--config", help="JSON config file or run manifest")
    p.add_argument("--dim", type=int, help="hypervector dimension (default 120, 10000 for graphhd)")
    p.add_argument("--levels", type=int, help="quantization levels m (default 8)")
    p.add_argument("--seed", type=int, help=f"base seed (default 0, or ${SEED_ENV})")
    p.add_argument("--test-fraction", type=float, help="holdout fraction (default 0.1)")
    p.add_argument("--weight-mode", choices=aggregation.WEIGHT_MODES)
    p.add_argument("--out", help="output path; JSON goes to stdout when omitted")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ciliagraph", description="Hyperdimensional graph classification")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model and write it with a run manifest")
    _add_common(p)
    p.add_argument("--variant", choices=[v for v in ALL_VARIANTS if v != "graphhd"])
    p.add_argument("--uniform-quant", action="store_true", help="equal-width quantization")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on its stored holdout split")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-dim", help="accuracy against hypervector dimension")
    _add_common(p)
    p.add_argument("--dims", type=_parse_int_list, default=[5, 30, 120, 500, 2000])
    p.add_argument("--seeds", type=int, help=f"trials per row (default {SWEEP_SEEDS})")
    p.add_argument("--variant", choices=ALL_VARIANTS)
    p.add_argument("--uniform-quant", action="store_true")
    p.set_defaults(func=cmd_sweep_dim)

    p = sub.add_parser("sweep-levels", help="accuracy against quantization levels")
    _add_common(p)
    p.add_argument("--levels-list", type=_parse_int_list, default=[4, 8, 16])
    p.add_argument("--seeds", type=int, help=f"trials per row (default {SWEEP_SEEDS})")
    p.add_argument("--variant", choices=ALL_VARIANTS)
    p.add_argument("--uniform-quant", action="store_true", help="equal-width quantization")
    p.set_defaults(func=cmd_sweep_levels)

    p = sub.add_parser("ablate", help="substitute the hyper-weight matrix")
    _add_common(p)
    p.add_argument("--variant", choices=("p1", "p2", "p3"), required=True)
    p.add_argument("--seeds", type=int, help="number of trials (default 1)")
    p.add_argument("--dump-weights", help="write dense W, T and P of training graphs to this JSON file")
    p.add_argument("--dump-limit", type=int, default=5)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("baseline", help="GraphHD or record-based encoding")
    _add_common(p)
    p.add_argument("--variant", choices=("graphhd", "record"), required=True)
    p.add_argument("--seeds", type=int, help="number of trials (default 1)")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("stats", help="dataset summary")
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("dims", help="minimum dimension and epsilon for m levels and n attributes")
    p.add_argument("--levels", type=int)
    p.add_argument("--attrs", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dims)
    return parser


def _fail(exc: BaseException, code: int) -> int:
    line = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(line), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CiliaGraphError as exc:
        return _fail(exc, exc.exit_code)
    except OSError as exc:
        return _fail(exc, 2)
    except Exception as exc:  # noqa: BLE001
        return _fail(exc, 5)


if __name__ == "__main__":
    sys.exit(main())
