"""Command line: ``regdec generate | fit-graph | fit-matrix | experiment | rerun``.

Every JSON written embeds the resolved run configuration and seed, so
``regdec rerun OUTPUT.json`` regenerates it byte for byte apart from the
``generated_at`` timestamp.

Exit codes: 0 success or PASS, 1 usage error, 2 data error, 3 experiment FAIL.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .blockmodels import (
    RNG_NAME,
    BlockModelSpec,
    Partition,
    PoissonBlockSpec,
    poisson_blowup,
    sample_graph,
    sample_poisson,
)
from .codelength import DEFAULT_PRECISION, FORMULA_VARIANTS
from .harness import EXPERIMENTS, partition_distance, run_experiment
from .io import (
    DataError,
    read_edge_list,
    read_matrix_csv,
    read_partition,
    write_edge_list,
    write_matrix_csv,
    write_partition,
)
from .optimizer import (
    MATRIX_STRATEGIES,
    SearchFailed,
    argmax_k,
    argmax_k1k2,
    greedy_two_part_mdl,
    matrix_mdl_search,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_FAIL = 0, 1, 2, 3
MODELS = ("sbm", "poisson", "bicluster")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    output: str | None = None
    n: int | None = None
    k: int | None = None
    k_range: list[int] | None = None
    k1: int | None = None
    k2: int | None = None
    k1_max: int | None = None
    k2_max: int | None = None
    restarts: int = 10
    max_iters: int = 200
    seed: int = 0
    units: str = "bits"
    formula_variant: str = "block-code"
    strategy: str = "diagonal-then-local"
    workers: int = 1
    early_stop: bool = False
    precision: float = DEFAULT_PRECISION
    truth: str | None = None
    experiment: str | None = None
    model: str | None = None
    params: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.restarts < 1:
            raise UsageError("--restarts must be at least 1")
        if self.max_iters < 1:
            raise UsageError("--max-iters must be at least 1")
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")
        if self.units not in ("nats", "bits"):
            raise UsageError("--units must be nats or bits")
        if self.formula_variant not in FORMULA_VARIANTS:
            raise UsageError(f"--variant must be one of {', '.join(FORMULA_VARIANTS)}")
        if self.strategy not in MATRIX_STRATEGIES:
            raise UsageError(f"--strategy must be one of {', '.join(MATRIX_STRATEGIES)}")
        if self.seed < 0:
            raise UsageError("--seed must be non-negative")
        for name in ("k", "k1", "k2", "k1_max", "k2_max", "n"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise UsageError(f"--{name.replace('_', '-')} must be at least 1")
        if self.k_range is not None:
            lo, hi = self.k_range
            if not 1 <= lo <= hi:
                raise UsageError("--k-range must be LO..HI with 1 <= LO <= HI")
        if self.command in ("fit-graph", "fit-matrix") and not self.input:
            raise UsageError(f"{self.command} needs --input")
        if self.command == "fit-graph" and self.k is not None and self.k_range is not None:
            raise UsageError("give either --k or --k-range, not both")
        if self.command == "fit-matrix" and (self.k1 is None) != (self.k2 is None):
            raise UsageError("--k1 and --k2 go together")
        if self.command == "experiment":
            if self.experiment not in EXPERIMENTS:
                raise UsageError(f"unknown experiment {self.experiment!r}; "
                                 f"registered: {', '.join(sorted(EXPERIMENTS))}")
        if self.command == "generate":
            if self.model not in MODELS:
                raise UsageError(f"--model must be one of {', '.join(MODELS)}")
            if not self.output:
                raise UsageError("generate needs --output")
        return self


def _parse_k_range(text: str) -> list[int]:
    for sep in ("..", ":", "-"):
        if sep in text:
            lo, hi = text.split(sep, 1)
            try:
                return [int(lo), int(hi)]
            except ValueError:
                break
    raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}")


def _parse_matrix(text: str) -> list[list[float]]:
    """'0.8,0.05;0.05,0.8' -> [[0.8, 0.05], [0.05, 0.8]]"""
    try:
        return [[float(x) for x in row.split(",")] for row in text.split(";")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected rows like '1,2;3,4', got {text!r}") from None


def _parse_vector(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_setting(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    try:
        return key.strip().replace("-", "_"), json.loads(value)
    except json.JSONDecodeError:
        return key.strip().replace("-", "_"), value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="regdec", description="Block-model compression of graphs and matrices.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--output", help="output path (prefix for generate)")
        sp.add_argument("--seed", type=int, help="random seed (default: $REGDEC_SEED or 0)")
        sp.add_argument("--units", choices=("nats", "bits"), default="bits",
                        help="units of the printed summary; JSON always has both")

    def search(sp):
        sp.add_argument("--restarts", type=int, default=10)
        sp.add_argument("--max-iters", type=int, default=200)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--variant", choices=FORMULA_VARIANTS, default="block-code",
                        help="partition-cost convention inside the objective")

    g = sub.add_parser("generate", help="sample a graph or matrix with its planted partition")
    common(g)
    g.add_argument("--model", choices=MODELS, required=True)
    g.add_argument("--n", type=int, help="number of nodes (sbm, poisson)")
    g.add_argument("--gammas", type=_parse_vector, help="relative block sizes, e.g. 0.5,0.5")
    g.add_argument("--densities", type=_parse_matrix, help="link probabilities, rows split by ';'")
    g.add_argument("--rates", type=_parse_matrix, help="Poisson rates, rows split by ';'")
    g.add_argument("--blowup", type=int, help="bicluster: rows/columns per block")

    f = sub.add_parser("fit-graph", help="fit a block model to an edge list")
    common(f)
    search(f)
    f.add_argument("--input", required=True, help="edge-list file")
    f.add_argument("--n", type=int, help="node count if not declared in the file")
    f.add_argument("--k", type=int, help="fit exactly this many blocks")
    f.add_argument("--k-range", type=_parse_k_range, help="select k in LO..HI (default 1..10)")
    f.add_argument("--early-stop", action="store_true",
                   help="stop the k scan at the first local minimum")
    f.add_argument("--truth", help="partition file to report the distance to")

    m = sub.add_parser("fit-matrix", help="bi-cluster a non-negative matrix")
    common(m)
    search(m)
    m.add_argument("--input", required=True, help="headerless CSV file")
    m.add_argument("--k1", type=int, help="row blocks (with --k2: fit exactly this pair)")
    m.add_argument("--k2", type=int, help="column blocks")
    m.add_argument("--k1-max", type=int, default=6)
    m.add_argument("--k2-max", type=int, default=6)
    m.add_argument("--strategy", choices=MATRIX_STRATEGIES, default="diagonal-then-local")
    m.add_argument("--precision", type=float, default=DEFAULT_PRECISION,
                   help="nats charged per block for the decimals of its sum")

    e = sub.add_parser("experiment", help="run a registered Monte Carlo experiment")
    common(e)
    e.add_argument("--experiment", required=True,
                   help=f"one of: {', '.join(sorted(EXPERIMENTS))}")
    e.add_argument("--set", dest="params", type=_parse_setting, action="append", default=[],
                   metavar="KEY=VALUE", help="override a parameter (value parsed as JSON)")
    e.add_argument("--csv", action="store_true", help="also write per-trial records as CSV")

    r = sub.add_parser("rerun", help="repeat the run recorded in an output JSON")
    r.add_argument("report", help="JSON written by a previous run")
    r.add_argument("--output", help="write here instead of the recorded output path")
    return p


def _resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get("REGDEC_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"REGDEC_SEED must be an integer, got {env!r}") from None


def config_from_args(ns) -> RunConfig:
    cfg = RunConfig(command=ns.command, output=ns.output, seed=_resolve_seed(ns.seed),
                    units=ns.units)
    if ns.command == "generate":
        cfg.model, cfg.n = ns.model, ns.n
        cfg.params = {k: getattr(ns, k) for k in ("gammas", "densities", "rates", "blowup")
                      if getattr(ns, k) is not None}
    if ns.command in ("fit-graph", "fit-matrix"):
        cfg.input = ns.input
        cfg.restarts, cfg.max_iters, cfg.workers = ns.restarts, ns.max_iters, ns.workers
        cfg.formula_variant = ns.variant
    if ns.command == "fit-graph":
        cfg.n, cfg.k, cfg.k_range = ns.n, ns.k, ns.k_range
        cfg.early_stop, cfg.truth = ns.early_stop, ns.truth
    if ns.command == "fit-matrix":
        cfg.k1, cfg.k2, cfg.k1_max, cfg.k2_max = ns.k1, ns.k2, ns.k1_max, ns.k2_max
        cfg.strategy, cfg.precision = ns.strategy, ns.precision
    if ns.command == "experiment":
        cfg.experiment = ns.experiment
        cfg.params = dict(ns.params)
        if ns.csv:
            cfg.params["_csv"] = True
    return cfg.validate()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_json(path, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _envelope(cfg: RunConfig, body: dict) -> dict:
    return {"config": asdict(cfg), "seed": cfg.seed, "rng": RNG_NAME,
            "version": __version__, "generated_at": _now(), **body}


def _stem(cfg: RunConfig, suffix: str) -> str | None:
    if not cfg.output:
        return None
    out = Path(cfg.output)
    base = out.with_suffix("") if out.suffix == ".json" else out
    return f"{base}{suffix}"


def _show(value_nats: float, units: str) -> str:
    if units == "bits":
        return f"{value_nats / math.log(2):.3f} bits"
    return f"{value_nats:.3f} nats"


def cmd_generate(cfg: RunConfig) -> int:
    p = cfg.params
    base = cfg.output[:-5] if cfg.output.endswith(".json") else cfg.output
    files = {}
    try:
        if cfg.model == "sbm":
            if cfg.n is None or "gammas" not in p or "densities" not in p:
                raise UsageError("sbm needs --n, --gammas and --densities")
            G, truth = sample_graph(BlockModelSpec(p["gammas"], p["densities"]), cfg.n, cfg.seed)
            files["graph"] = f"{base}.edges"
            write_edge_list(files["graph"], G)
            files["truth"] = f"{base}.truth"
            write_partition(files["truth"], truth)
        elif cfg.model == "poisson":
            if cfg.n is None or "gammas" not in p or "rates" not in p:
                raise UsageError("poisson needs --n, --gammas and --rates")
            E, truth = sample_poisson(PoissonBlockSpec(p["gammas"], p["rates"]), cfg.n, cfg.seed)
            files["matrix"] = f"{base}.csv"
            write_matrix_csv(files["matrix"], E.entries)
            files["truth"] = f"{base}.truth"
            write_partition(files["truth"], truth)
        else:
            if "rates" not in p or "blowup" not in p:
                raise UsageError("bicluster needs --rates and --blowup")
            A, rows, cols = poisson_blowup(p["rates"], p["blowup"], cfg.seed)
            files["matrix"] = f"{base}.csv"
            write_matrix_csv(files["matrix"], A)
            files["truth_rows"] = f"{base}.rows"
            write_partition(files["truth_rows"], rows)
            files["truth_cols"] = f"{base}.cols"
            write_partition(files["truth_cols"], cols)
    except ValueError as exc:
        raise UsageError(f"invalid model: {exc}") from None
    _write_json(f"{base}.json", _envelope(cfg, {"files": files}))
    print(f"wrote {', '.join(files.values())}")
    return EXIT_OK


def cmd_fit_graph(cfg: RunConfig) -> int:
    G = read_edge_list(cfg.input, cfg.n)
    try:
        if cfg.k is not None:
            if cfg.k > G.n:
                raise UsageError(f"--k {cfg.k} exceeds the {G.n} nodes")
            fit = argmax_k(G, cfg.k, cfg.restarts, cfg.seed, cfg.max_iters,
                           workers=cfg.workers, variant=cfg.formula_variant)
        else:
            lo, hi = cfg.k_range or (1, 10)
            hi = min(hi, G.n)
            if lo > hi:
                raise UsageError(f"--k-range starts above the {G.n} nodes")
            fit = greedy_two_part_mdl(G, range(lo, hi + 1), cfg.restarts, cfg.seed,
                                      cfg.max_iters, cfg.early_stop, workers=cfg.workers,
                                      variant=cfg.formula_variant)
    except SearchFailed as exc:
        raise DataError(str(exc)) from None
    body = fit.to_dict()
    part_file = _stem(cfg, ".partition")
    body["assignment_file"] = part_file
    if part_file:
        write_partition(part_file, fit.partition)
    if cfg.truth:
        body["distance_to_truth"] = partition_distance(fit.partition, read_partition(cfg.truth))
    body["restart_log"] = [r.to_dict() for r in fit.restarts]
    _write_json(cfg.output, _envelope(cfg, {"result": body}))
    if cfg.output:
        print(f"k = {fit.k}, code length {_show(fit.objective, cfg.units)}")
    return EXIT_OK


def cmd_fit_matrix(cfg: RunConfig) -> int:
    A = read_matrix_csv(cfg.input)
    try:
        if cfg.k1 is not None:
            if cfg.k1 > A.shape[0] or cfg.k2 > A.shape[1]:
                raise UsageError(f"(k1, k2) exceeds the {A.shape[0]} x {A.shape[1]} matrix")
            fit = argmax_k1k2(A, cfg.k1, cfg.k2, cfg.restarts, cfg.seed, cfg.max_iters,
                              workers=cfg.workers, precision=cfg.precision)
        else:
            fit = matrix_mdl_search(A, cfg.k1_max, cfg.k2_max, cfg.strategy, cfg.restarts,
                                    cfg.seed, cfg.max_iters, cfg.precision, workers=cfg.workers)
    except SearchFailed as exc:
        raise DataError(str(exc)) from None
    body = fit.to_dict()
    rows_file, cols_file = _stem(cfg, ".rows"), _stem(cfg, ".cols")
    body["assignment_file"] = [rows_file, cols_file]
    if rows_file:
        write_partition(rows_file, fit.partition)
        write_partition(cols_file, fit.col_partition)
    body["restart_log"] = [r.to_dict() for r in fit.restarts]
    _write_json(cfg.output, _envelope(cfg, {"result": body}))
    if cfg.output:
        print(f"(k1, k2) = {fit.k}, code length {_show(fit.objective, cfg.units)}")
    return EXIT_OK


def cmd_experiment(cfg: RunConfig) -> int:
    params = dict(cfg.params)
    want_csv = params.pop("_csv", False)
    try:
        report = run_experiment(cfg.experiment, seed=cfg.seed, **params)
    except TypeError as exc:
        raise UsageError(f"bad experiment parameter: {exc}") from None
    report.generated_at = _now()
    payload = report.to_dict()
    payload["config"] = asdict(cfg)
    payload["version"] = __version__
    _write_json(cfg.output, payload)
    if want_csv and cfg.output:
        Path(_stem(cfg, ".csv")).write_text(report.to_csv())
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{cfg.experiment}: {verdict}", file=sys.stderr if not cfg.output else sys.stdout)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_rerun(path: str, output: str | None) -> int:
    try:
        recorded = json.loads(Path(path).read_text())
        cfg = RunConfig(**recorded["config"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: not a report with an embedded config ({exc})") from None
    if output:
        cfg.output = output
    return COMMANDS[cfg.command](cfg.validate())


COMMANDS = {
    "generate": cmd_generate,
    "fit-graph": cmd_fit_graph,
    "fit-matrix": cmd_fit_matrix,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        if ns.command == "rerun":
            return cmd_rerun(ns.report, ns.output)
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"regdec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"regdec: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
