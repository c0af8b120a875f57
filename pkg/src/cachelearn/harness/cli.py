"""Command-line entry point: ``cachelearn {run,sweep,bounds,gen-trace,replay}``."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings

from ..workloads import ChangeSchedule, change_trace, sample_irm, save_trace, zipf_profile
from . import runner
from .config import POLICY_NAMES, SWEEPABLE, WORKLOADS, ConfigError, ExperimentConfig, parse_value, read_meta

log = logging.getLogger("cachelearn")


def _bool(text: str) -> bool:
    return parse_value("header", text)


def _add_config_flags(p: argparse.ArgumentParser, trace_required: bool = False) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="metadata sidecar (key=value) to start from")
    p.add_argument("--policy", choices=POLICY_NAMES, default=S)
    p.add_argument("--mode", choices=("full", "partial"), default=S,
                   help="observation model (default: the policy's own)")
    p.add_argument("--L", type=int, default=S, help="library size")
    p.add_argument("--C", type=int, default=S, help="cache size")
    p.add_argument("--beta", type=float, default=S, help="Zipf exponent")
    p.add_argument("--T", type=lambda s: int(float(s)), default=S, help="horizon (steps)")
    p.add_argument("--reps", dest="replications", type=int, default=S, help="replications")
    p.add_argument("--seed", type=int, default=S, help="master seed")
    p.add_argument("--w", type=int, default=S, help="window length (default ceil(C^2 ln L))")
    p.add_argument("--halve-every", dest="halve_every", type=lambda s: int(float(s)), default=S,
                   help="halve learned counts every P steps")
    p.add_argument("--max-components", dest="max_components", type=int, default=S)
    p.add_argument("--prior", type=float, default=S, help="Dirichlet prior for fps")
    p.add_argument("--si-source", dest="si_source", choices=("profile", "prefix", "given"), default=S)
    p.add_argument("--si-prefix", dest="si_prefix", type=float, default=S,
                   help="trace fraction used to estimate mu_C and delta")
    p.add_argument("--mu-C", dest="mu_C", type=float, default=S)
    p.add_argument("--delta", type=float, default=S)
    p.add_argument("--count-silent", dest="count_silent", type=_bool, default=S,
                   help="si: charge cached items on silent steps (true/false)")
    p.add_argument("--initial-cache", dest="initial_cache", choices=("ids", "random"), default=S)
    if not trace_required:
        p.add_argument("--workload", choices=WORKLOADS, default=S)
    p.add_argument("--change-period", dest="change_period", type=lambda s: int(float(s)), default=S)
    p.add_argument("--top-k", dest="top_k", type=int, default=S)
    p.add_argument("--shift", type=int, default=S)
    p.add_argument("--trace", default=S, required=trace_required, help="trace file path")
    p.add_argument("--header", action="store_true", default=S, help="trace has an 'item_id' header line")
    p.add_argument("--remap", action="store_true", default=S, help="renumber trace IDs densely")
    p.add_argument("--checkpoints", type=int, default=S, help="approximate checkpoint count")
    p.add_argument("--workers", type=int, default=S, help="parallel replication workers")
    p.add_argument("--out", default=S, help="CSV output path (default: stdout)")


def _config(args, **forced) -> ExperimentConfig:
    values = {}
    if args.config:
        meta = read_meta(args.config)
        values.update({k: parse_value(k, v) for k, v in meta.items()
                       if k not in ("build_id", "wall_time_s", "timestamp")})
    fields = {name for name, _ in ExperimentConfig().items()}
    values.update({k: v for k, v in vars(args).items() if k in fields})
    values.update(forced)
    return ExperimentConfig(**values)


def cmd_run(args, **forced) -> int:
    cfg = _config(args, **forced)
    table = runner.run(cfg)
    if cfg.out is None:
        sys.stdout.write(table.to_csv())
    return 0


def cmd_replay(args) -> int:
    return cmd_run(args, workload="trace")


def cmd_sweep(args) -> int:
    cfg = _config(args)
    values = [parse_value(args.axis, v) for v in args.values.split(",") if v.strip()] if args.values else []
    tables = runner.sweep(cfg, args.axis, values)
    for v, table in tables.items():
        last = len(table) - 1
        print(f"{args.axis}={v}\tR(T)={table.mean_regret[last]:.6g}\thit_rate={table.mean_hit_rate[last]:.6g}"
              f"\tbank={table.mean_bank_size[last]:.6g}\t{table.meta.get('out') or ''}")
    return 0


def cmd_bounds(args) -> int:
    cfg = _config(args)
    report = runner.bound_report(cfg)
    rows = [(k, v) for k, v in vars(report).items() if v is not None]
    paired = runner.APPLICABLE.get(cfg.policy)
    for k, v in rows:
        mark = "  <- applies to " + cfg.policy if k == paired else ""
        print(f"{k:<14}{v:.6g}{mark}" if isinstance(v, float) else f"{k:<14}{v}{mark}")
    if report.wlfu_lower is not None:
        print(f"{'wlfu_slope':<14}{report.wlfu_lower / report.T:.6g}")
    if not args.no_sim:
        res = runner.simulate(cfg, checkpoints=[report.T])
        lo, hi = res.regret_ci()
        print(f"{'observed_R(T)':<14}{res.mean_regret()[-1]:.6g}  95% CI [{lo[-1]:.6g}, {hi[-1]:.6g}]"
              f"  over {cfg.replications} replications")
        if paired in ("lfu", "lfulite", "si"):
            bound = getattr(report, paired)
            verdict = "within" if res.mean_regret()[-1] <= bound else "ABOVE"
            print(f"{'check':<14}observed {verdict} the {paired} bound")
    return 0


def cmd_gen_trace(args) -> int:
    cfg = _config(args)
    if not cfg.out:
        raise ConfigError("out", "gen-trace needs --out")
    base = zipf_profile(cfg.L, cfg.beta)
    if cfg.workload == "change":
        trace = change_trace(base, ChangeSchedule(cfg.change_period, cfg.top_k, cfg.shift), cfg.T, cfg.seed)
    elif cfg.workload == "zipf":
        trace = sample_irm(base, cfg.T, cfg.seed)
    else:
        raise ConfigError("workload", "gen-trace synthesizes 'zipf' or 'change' workloads")
    save_trace(trace, cfg.out, header=cfg.header)
    print(f"wrote {len(trace)} requests to {cfg.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cachelearn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="Monte Carlo regret run, CSV out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="trace-driven run")
    _add_config_flags(p, trace_required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("sweep", help="one run per value of a config field")
    _add_config_flags(p)
    p.add_argument("--axis", required=True, choices=SWEEPABLE)
    p.add_argument("--values", default="", help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="closed-form bounds next to observed regret")
    _add_config_flags(p)
    p.add_argument("--no-sim", action="store_true", help="skip the Monte Carlo pairing")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("gen-trace", help="write a synthetic trace file")
    _add_config_flags(p)
    p.set_defaults(func=cmd_gen_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("default")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
