"""Command-line front end: run the Monte Carlo benchmark and write CSVs."""

import argparse
import sys
from dataclasses import replace

from .harness import dump_links, run_monte_carlo, write_results
from .orchestrator import ALL_SCHEMES, parse_scheme
from .scenario import ExperimentConfig, desk_scale, load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfuav",
        description="Uplink max-min RRM benchmark for a cell-free massive "
                    "MIMO network serving UAVs.")
    parser.add_argument("--config", metavar="PATH",
                        help="key=value config file (defaults otherwise)")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="override master_seed")
    parser.add_argument("--trials", type=int, metavar="N",
                        help="override number of Monte Carlo trials")
    parser.add_argument("--uavs", metavar="LIST",
                        help="comma-separated UAV counts to sweep, e.g. 5,10,20")
    parser.add_argument("--schemes", metavar="LIST",
                        help="comma-separated scheme labels "
                             "(default: all six, e.g. BA+FP,PA+PP)")
    parser.add_argument("--out", metavar="PATH", default="results.csv",
                        help="per-trial results CSV (aggregate written next to it)")
    parser.add_argument("--desk-scale", action="store_true",
                        help="small preset: L=25, N=2, tau_p=5, 50 trials")
    parser.add_argument("--dump-links", action="store_true",
                        help="also dump per-link (beta, K-factor, LoS) for trial 0")
    parser.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="worker processes for trials (default 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else ExperimentConfig()
        if args.desk_scale:
            config = desk_scale(config)
        if args.seed is not None:
            config = replace(config, master_seed=args.seed)
        if args.trials is not None:
            config = replace(config, trials=args.trials)
        uav_counts = ([int(x) for x in args.uavs.split(",") if x.strip()]
                      if args.uavs else [config.num_uavs])
        schemes = ([parse_scheme(s) for s in args.schemes.split(",") if s.strip()]
                   if args.schemes else list(ALL_SCHEMES))

        records = []
        for k in uav_counts:
            cfg_k = replace(config, num_uavs=k)
            if args.dump_links:
                stem, dot, ext = args.out.rpartition(".")
                base = stem if dot else args.out
                dump_links(cfg_k, 0, f"{base}_links_K{k}.csv")
            records.extend(run_monte_carlo(cfg_k, schemes, n_jobs=args.jobs))
        path, agg_path = write_results(records, args.out)
        print(f"wrote {len(records)} records to {path} (aggregate: {agg_path})")
        return 0
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
