"""Command-line interface.

Subcommands: `run` (single trial -> trace CSV), `sweep` (full grid ->
summary CSV/JSON plus sample traces), `check-theory` (drift-condition
report as JSON), `nash-oracle` (exhaustive band-vs-deviation cross
check). Exit codes: 0 success, 1 runtime failure, 2 usage.
"""

import argparse
import json
import sys

from .bounds import TheoremInputs, build_bound_report
from .config import SimConfig, load_config
from .errors import ConfigurationError, IntegrationError
from .game import band_oracle_mismatches, trial_statistics
from .harness import emit_outputs, resolve_workers, run_sweep
from .queueing import run_trial

DEFAULT_RHOS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_NETWORKS = ("all_positive", "all_negative")


def _load(args) -> SimConfig:
    return load_config(args.config) if args.config else SimConfig()


def _add_config_flag(parser):
    parser.add_argument("--config", help="JSON config file (defaults apply when omitted)")


def cmd_run(args) -> int:
    config = _load(args)
    overrides = {}
    if args.network is not None:
        overrides["network"] = args.network
    if args.rho is not None:
        overrides["rho"] = args.rho
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if overrides:
        config = config.with_overrides(**overrides)
    trace = run_trial(config, trial_index=args.trial_index)
    trace.to_csv(args.out)
    stats = trial_statistics(trace)
    tau = "never" if not stats.hit else f"{stats.hitting_time:g}"
    print(
        f"wrote {args.out}: {trace.epochs} epochs, hit={stats.hit} "
        f"(t={tau}), switches/agent={stats.switches_mean:g}"
    )
    if trace.clamp_count:
        print(f"warning: clamped {trace.clamp_count} opinion values", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    config = _load(args)
    if args.trials is not None:
        config = config.with_overrides(trials=args.trials)
    if args.seed is not None:
        config = config.with_overrides(master_seed=args.seed)
    networks = args.networks.split(",") if args.networks else list(DEFAULT_NETWORKS)
    rhos = [float(v) for v in args.rhos.split(",")] if args.rhos else list(DEFAULT_RHOS)
    workers = resolve_workers(args.workers)

    def progress(index, total, network, rho):
        print(f"[{index + 1}/{total}] network={network} rho={rho:g} "
              f"trials={config.trials}", flush=True)

    results = run_sweep(config, networks, rhos, workers=workers, progress=progress)
    paths = emit_outputs(results, args.out_dir)
    print(f"wrote {paths['summary_csv']} and {paths['summary_json']}")
    return 0


def cmd_check_theory(args) -> int:
    config = _load(args)
    report = build_bound_report(
        config.agent_params,
        config.social_network,
        config.dt_decision,
        margin_override=args.mbar,
        include_diagonal=args.include_diagonal,
    )
    payload = report.to_dict()
    if args.zeta is not None or args.psi is not None:
        if args.zeta is None or args.psi is None:
            raise ConfigurationError("--zeta and --psi must be given together")
        if report.opinion_floor is None or report.opinion_floor <= 0:
            raise ConfigurationError(
                "the hitting bound needs a positive opinion floor; "
                "supply --mbar or a config whose margin condition holds"
            )
        inputs = TheoremInputs(
            n=config.n,
            join_floor=args.zeta,
            expensive_cap=args.psi,
            opinion_floor=report.opinion_floor,
        )
        payload["join_floor"] = args.zeta
        payload["expensive_cap"] = args.psi
        payload["entry_prob_floor"] = inputs.entry_floor()
        payload["expected_epochs_bound"] = inputs.epoch_bound()
        payload["expected_time_bound"] = inputs.epoch_bound() * config.dt_decision
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_nash_oracle(args) -> int:
    mismatches = band_oracle_mismatches(args.n_max)
    if mismatches:
        print(f"equivalence FAILED for {len(mismatches)} profiles:")
        for n, profile in mismatches[:20]:
            print(f"  N={n} profile={profile}")
        return 1
    total = sum(2**n for n in range(2, args.n_max + 1))
    print(
        f"equivalence holds: band test matches the deviation oracle on all "
        f"{total} profiles for N=2..{args.n_max}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opinion-queues",
        description="Two-queue selection driven by nonlinear opinion dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single trial and write its trace CSV")
    _add_config_flag(p_run)
    p_run.add_argument("--seed", type=int, help="override the master seed")
    p_run.add_argument("--trial-index", type=int, default=0)
    p_run.add_argument("--network", choices=DEFAULT_NETWORKS)
    p_run.add_argument("--rho", type=float, help="masked fraction in [0, 1]")
    p_run.add_argument("--out", default="trace.csv", help="trace CSV path")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the full (network x rho) grid")
    _add_config_flag(p_sweep)
    p_sweep.add_argument("--trials", type=int, help="trials per cell")
    p_sweep.add_argument("--seed", type=int, help="override the master seed")
    p_sweep.add_argument("--out-dir", default="out", help="output directory")
    p_sweep.add_argument(
        "--workers", type=int, default=None,
        help="thread count (env OPINION_QUEUES_WORKERS overrides)",
    )
    p_sweep.add_argument("--networks", help="comma-separated network kinds")
    p_sweep.add_argument("--rhos", help="comma-separated masked fractions")
    p_sweep.set_defaults(func=cmd_sweep)

    p_check = sub.add_parser(
        "check-theory", help="emit the drift-condition report as JSON"
    )
    _add_config_flag(p_check)
    p_check.add_argument(
        "--mbar", type=float, default=None,
        help="hypothetical alignment margin to use instead of the computed one",
    )
    p_check.add_argument("--zeta", type=float, help="waiting-pool join floor in (0, 1]")
    p_check.add_argument("--psi", type=float, help="expensive-queue opinion cap in (0, 1)")
    p_check.add_argument(
        "--include-diagonal", action="store_true",
        help="use the full-row network infinity norm",
    )
    p_check.add_argument("--out", help="write the JSON here instead of stdout")
    p_check.set_defaults(func=cmd_check_theory)

    p_oracle = sub.add_parser(
        "nash-oracle",
        help="exhaustively cross-check the Nash band against unilateral deviations",
    )
    p_oracle.add_argument("--n-max", type=int, default=8)
    p_oracle.set_defaults(func=cmd_nash_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, IntegrationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
