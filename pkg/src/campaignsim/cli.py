"""Command-line interface.

Subcommands: simulate, optimize, best-response, oracle, gadget-check,
fixtures.  Result files are written atomically (temp + rename) and contain
no wall-clock data, so a repeated run with the same seed and inputs is
byte-identical; the write timestamp goes to a sidecar <out>.meta.json.

Exit codes: 0 success, 2 configuration error, 3 input/output error,
4 infeasible optimization, 5 internal error.  Failures print a
machine-readable error JSON to stderr.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import json
import os
import sys

from . import __version__
from .channels import (
    PlanError,
    build_augmented,
    load_plans,
    plans_to_payload,
    save_augmented,
)
from .checks import gadget_property_check
from .estimator import activation_time_histogram, estimate_spread
from .feature_space import ProductError, load_products
from .fixtures import write_fixtures
from .network import NetworkError, ParseError, ValidationError, load_network
from .optimizer import (
    CEConfig,
    CostModel,
    InfeasiblePlanError,
    best_response_loop,
    ce_optimize,
)
from .oracle import EnumerationCapError, GridSpec, exact_spread_grid

WORKERS_ENV = "CAMPAIGNSIM_WORKERS"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4
EXIT_INTERNAL = 5


class ConfigError(Exception):
    pass


class CliError(Exception):
    def __init__(self, exit_code: int, message: str, kind: str):
        super().__init__(message)
        self.exit_code = exit_code
        self.kind = kind


def _atomic_write(path: str, data: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _write_result(path: str, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    meta = {"written_at": datetime.datetime.now(datetime.timezone.utc).isoformat()}
    _atomic_write(path + ".meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")


# output destinations and parallelism do not change results, so they stay
# out of the hash; a re-run to a different path must hash identically
_NON_RESULT_ARGS = {"func", "out", "node_probs", "trajectory", "dump_augmented", "trace", "workers"}


def _config_hash(args: argparse.Namespace) -> str:
    payload = {k: v for k, v in sorted(vars(args).items()) if k not in _NON_RESULT_ARGS}
    blob = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _envelope(command: str, args: argparse.Namespace, results: dict) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "config_hash": _config_hash(args),
        "results": results,
    }


def _resolve_workers(args) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return max(1, getattr(args, "workers", 1) or 1)


def parse_config_file(path: str) -> dict:
    """Flat key=value lines with # comments; values are int, float, or bare strings."""
    out: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            try:
                out[key] = int(value)
            except ValueError:
                try:
                    out[key] = float(value)
                except ValueError:
                    out[key] = value
    return out


_CE_KEYS = {
    "samples": ("n_samples", int),
    "elite_frac": ("elite_frac", float),
    "smoothing": ("smoothing", float),
    "max_iterations": ("max_iterations", int),
    "tol": ("tol", float),
    "replications": ("replications", int),
    "seed_retry_limit": ("seed_retry_limit", int),
    "best_response_tol": ("best_response_tol", float),
}
_COST_KEYS = {"seed_cost", "alpha_cost", "beta_cost"}


def _ce_setup(config_path: str | None, workers: int) -> tuple[CEConfig, CostModel]:
    raw = parse_config_file(config_path) if config_path else {}
    unknown = set(raw) - set(_CE_KEYS) - _COST_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kwargs = {}
    try:
        for key, (attr, cast) in _CE_KEYS.items():
            if key in raw:
                kwargs[attr] = cast(raw[key])
        cost = CostModel(
            seed_unit_cost=float(raw.get("seed_cost", 1.0)),
            alpha_unit_cost=float(raw.get("alpha_cost", 1.0)),
            beta_unit_cost=float(raw.get("beta_cost", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from None
    config = CEConfig(workers=workers, **kwargs)
    return config, cost


def _load_instance(args):
    net = load_network(args.net, args.sim)
    products = load_products(args.products)
    return net, products


# -- subcommands --------------------------------------------------------


def cmd_simulate(args) -> int:
    net, products = _load_instance(args)
    plans = load_plans(args.plans)
    aug = build_augmented(net, products, plans)
    workers = _resolve_workers(args)
    est = estimate_spread(
        aug, products, args.reps, args.seed,
        workers=workers, collect_node_counts=bool(args.node_probs),
    )
    if args.dump_augmented:
        os.makedirs(args.dump_augmented, exist_ok=True)
        save_augmented(
            aug,
            os.path.join(args.dump_augmented, "edges.txt"),
            os.path.join(args.dump_augmented, "similarity.txt"),
            os.path.join(args.dump_augmented, "pseudo.json"),
        )
    if args.node_probs:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["node"] + [f"product_{pid}" for pid in est.product_ids])
        for v in est.real_nodes:
            row = [int(v)] + [est.node_probability(int(v), pid) for pid in est.product_ids]
            writer.writerow(row)
        _atomic_write(args.node_probs, buf.getvalue())
    if args.trajectory:
        from .diffusion import run_diffusion, sample_thresholds
        from .rng import tile_rng

        chi = sample_thresholds(aug.net, tile_rng(args.seed, 0))
        out = run_diffusion(aug.net, products, aug.seed_assignment(), chi, tie_key=(args.seed, 0))
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["node", "activation_time", "product"])
        for v in range(aug.net.node_count):
            pidx = int(out.purchased[v])
            pid = est.product_ids[pidx] if pidx >= 0 else -1
            writer.writerow([v, int(out.activation_time[v]), pid])
        _atomic_write(args.trajectory, buf.getvalue())
    _write_result(args.out, _envelope("simulate", args, est.to_dict()))
    return EXIT_OK


def cmd_optimize(args) -> int:
    net, products = _load_instance(args)
    competitor_plans = load_plans(args.plans) if args.plans else []
    workers = _resolve_workers(args)
    config, cost = _ce_setup(args.config, workers)
    result = ce_optimize(
        net, products, args.focal, competitor_plans, cost, args.budget,
        config, args.seed, horizon=args.horizon,
    )
    if args.trace:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["iteration", "best_value", "iteration_best", "iteration_mean", "elite_threshold"])
        for row in result.trace:
            writer.writerow([
                row["iteration"], row["best_value"], row["iteration_best"],
                row["iteration_mean"], row["elite_threshold"],
            ])
        _atomic_write(args.trace, buf.getvalue())
    results = {
        "best_value": result.best_value,
        "evaluations": result.evaluations,
        "iterations": len(result.trace),
        "plan": plans_to_payload([result.best_plan])["plans"][0] | {"horizon": result.best_plan.horizon},
    }
    _write_result(args.out, _envelope("optimize", args, results))
    return EXIT_OK


def cmd_best_response(args) -> int:
    net, products = _load_instance(args)
    try:
        budgets = [float(b) for b in args.budget.split(",")]
    except ValueError:
        raise ConfigError(f"--budget must be a number or comma list, got {args.budget!r}") from None
    if len(budgets) == 1:
        budgets = budgets * len(products)
    if len(budgets) != len(products):
        raise ConfigError(f"{len(budgets)} budgets for {len(products)} products")
    workers = _resolve_workers(args)
    config, cost = _ce_setup(args.config, workers)
    result = best_response_loop(
        net, products, [cost] * len(products), budgets, args.rounds,
        config, args.seed, horizon=args.horizon,
    )
    results = {
        "rounds_run": result.rounds_run,
        "values": result.values,
        "plans": plans_to_payload(result.plans),
        "history": result.history,
    }
    _write_result(args.out, _envelope("best-response", args, results))
    return EXIT_OK


def cmd_oracle(args) -> int:
    net, products = _load_instance(args)
    plans = load_plans(args.plans)
    aug = build_augmented(net, products, plans)
    grid = GridSpec(resolution=args.resolution)
    exact = exact_spread_grid(aug, products, grid)
    workers = _resolve_workers(args)
    est = estimate_spread(aug, products, args.reps, args.seed, workers=workers)
    comparison = []
    for j, pid in enumerate(aug.product_ids):
        comparison.append(
            {
                "product": pid,
                "oracle_spread": float(exact.spread[j]),
                "engine_mean": float(est.means[j]),
                "engine_stderr": float(est.stderrs[j]),
                "difference": float(est.means[j] - exact.spread[j]),
            }
        )
    results = {
        "resolution": args.resolution,
        "tuples_evaluated": exact.tuples_evaluated,
        "replications": args.reps,
        "products": comparison,
    }
    _write_result(args.out, _envelope("oracle", args, results))
    return EXIT_OK


def cmd_gadget_check(args) -> int:
    report = gadget_property_check(args.trials, args.seed)
    _write_result(args.out, _envelope("gadget-check", args, report))
    if report["counterexamples"]:
        raise CliError(EXIT_INTERNAL, f"{report['counterexamples']} gadget counterexamples", "internal")
    return EXIT_OK


def cmd_fixtures(args) -> int:
    written = write_fixtures(args.out)
    sys.stdout.write("\n".join(written) + "\n")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="campaignsim",
        description="Competing multi-channel marketing campaigns: simulation and budget optimization",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_net(p):
        p.add_argument("--net", required=True, help="edge file <src> <dst> <weight>")
        p.add_argument("--sim", default=None, help="similarity file <u> <v> <h>")
        p.add_argument("--products", required=True, help="product file")

    p = sub.add_parser("simulate", help="Monte Carlo spread estimation")
    common_net(p)
    p.add_argument("--plans", required=True, help="channel plan JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--node-probs", default=None, help="per-node purchase probability CSV")
    p.add_argument("--trajectory", default=None, help="single-replication trajectory CSV")
    p.add_argument("--dump-augmented", default=None, help="directory for the augmented network dump")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="cross-entropy budget allocation for one product")
    common_net(p)
    p.add_argument("--plans", default=None, help="fixed competitor plan JSON")
    p.add_argument("--focal", type=int, required=True, help="focal product id")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--config", default=None, help="key=value optimizer configuration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", default=None, help="per-iteration trace CSV")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("best-response", help="round-robin re-optimization across products")
    common_net(p)
    p.add_argument("--budget", required=True, help="budget, or comma list per product")
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_best_response)

    p = sub.add_parser("oracle", help="exact grid enumeration vs the Monte Carlo engine")
    common_net(p)
    p.add_argument("--plans", required=True)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gadget-check", help="randomized relay-pseudonode verification")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gadget_check)

    p = sub.add_parser("fixtures", help="write the built-in demo instances")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fixtures)

    return parser


def _fail(kind: str, exit_code: int, message: str) -> int:
    error = {"error": {"type": kind, "message": message, "exit_code": exit_code}}
    sys.stderr.write(json.dumps(error, sort_keys=True) + "\n")
    return exit_code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail("config", EXIT_CONFIG, str(exc))
    except (ParseError, FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        return _fail("io", EXIT_IO, str(exc))
    except (ValidationError, NetworkError, ProductError, PlanError, json.JSONDecodeError) as exc:
        return _fail("io", EXIT_IO, str(exc))
    except InfeasiblePlanError as exc:
        return _fail("infeasible", EXIT_INFEASIBLE, str(exc))
    except CliError as exc:
        return _fail(exc.kind, exc.exit_code, str(exc))
    except EnumerationCapError as exc:
        return _fail("config", EXIT_CONFIG, str(exc))
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports everything
        return _fail("internal", EXIT_INTERNAL, f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
