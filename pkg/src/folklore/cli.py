"""Command-line benchmark driver.

Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical failure.
"""

import argparse
import json
import math
import sys
from pathlib import Path

from . import harness
from .errors import ConfigError, InvalidInputError, NumericalError
from .learner import log_regret_bound

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def build_parser():
    p = argparse.ArgumentParser(prog="folklore-bench",
                                description="Regret benchmarks for online multiclass logistic regression.")
    p.add_argument("--mode", choices=["regression", "bandit", "boosting", "diagnostics"],
                   default="regression")
    p.add_argument("--algo", choices=list(harness.ALGOS), default="folklore")
    p.add_argument("--d", type=int, default=5, help="input dimension")
    p.add_argument("--k", type=int, default=3, help="number of classes")
    p.add_argument("--b", type=float, default=1.0, help="comparator row-norm bound B")
    p.add_argument("--r", type=float, default=1.0, help="feature norm bound R")
    p.add_argument("--t", type=int, default=1000, help="rounds per episode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=1, help="episodes, seeded seed, seed+1, ...")
    p.add_argument("--eps", type=float, default=1e-12, help="solver tolerance")
    p.add_argument("--stream", choices=list(harness.MODES), default="realizable-soft")
    p.add_argument("--comparator", choices=["generator", "batch-fit"], default="generator")
    p.add_argument("--out", type=Path, help="output file; per-seed suffix when --seeds > 1")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--gamma", type=float, help="bandit exploration rate (default from the regret bound)")
    p.add_argument("--n-learners", type=int, default=10)
    p.add_argument("--edge", type=float, default=0.3)
    p.add_argument("--horizon", type=int, help="boosting horizon (default --t)")
    return p


def _out_path(args, seed, index):
    if args.out is None:
        return None
    if args.seeds == 1:
        return args.out
    return args.out.with_name(f"{args.out.stem}.seed{seed}{args.out.suffix}")


def _validate(args):
    if args.seeds < 1:
        raise ConfigError("--seeds must be at least 1")
    if args.seed < 0:
        raise ConfigError("--seed must be non-negative")
    if not (args.eps > 0 and math.isfinite(args.eps)):
        raise ConfigError("--eps must be positive")


def _run_one(args, seed):
    spec = harness.StreamSpec(d=args.d, K=args.k, B=args.b, R=args.r, T=args.t,
                              seed=seed, mode=args.stream)
    extra = {"run_mode": args.mode}
    if args.mode == "regression":
        records = harness.run_episode(args.algo, spec, comparator=args.comparator, eps=args.eps)
        extra["algo"] = args.algo
    elif args.mode == "bandit":
        records, info = harness.run_bandit_episode(spec, gamma=args.gamma, eps=args.eps)
        extra.update(algo="folklore", bandit=info)
    else:
        records = harness.run_boosting_episode(args.k, args.t, args.n_learners, args.edge,
                                               seed=seed, horizon=args.horizon, eps=args.eps)
        extra.update(algo="adaboost-olm", n_learners=args.n_learners, edge=args.edge)
    return spec, records, extra


def _diagnostics(args):
    lhs, hess = harness.hessian_dominance_counterexample(args.b, args.r)
    doc = {
        "counterexample_lhs": lhs,
        "counterexample_hessian": hess,
        "ratio": lhs / hess,
        "closed_form_ratio": (math.exp(args.b * args.r) + 2.0) / 2.0,
        "regret_bound": log_regret_bound(args.d, args.k, args.b, args.r, args.t),
    }
    text = json.dumps(doc, indent=1) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text, encoding="utf-8")
    return EXIT_OK


def run(args):
    _validate(args)
    if args.mode == "diagnostics":
        return _diagnostics(args)
    for index in range(args.seeds):
        seed = args.seed + index
        spec, records, extra = _run_one(args, seed)
        path = _out_path(args, seed, index)
        if path is not None:
            harness.export(records, path, args.format, spec=spec, seed=seed, **extra)
        final = records[-1].regret if records else 0.0
        cum = records[-1].cum_loss if records else 0.0
        print(f"seed={seed} T={len(records)} cum_loss={cum!r} regret={final!r}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (ConfigError, InvalidInputError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
