"""Command-line interface: ``mapnull test | simulate | mapper | oracle``.

Exit status 0 on success, 2 on a configuration or input error, 3 on a
numeric failure (the message names the pipeline stage).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import (MAPPER_GRAPH_SCHEMA, REPORT_SCHEMA, ConfigError, load_run_config,
                     load_scenarios, validate, write_csv)
from .errors import MapNullError, ReplicateError, StageError
from .nulltest import OBSERVED_KEY, default_workers, run_pipeline, run_structured_null_test, seed_sequence

SUMMARY_COLUMNS = ("K", "D_obs", "z_perm", "z_str", "p_hat")


def _dump_json(doc, path):
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _cell(x):
    if x is None:
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_communities(path, row_ids, point_community):
    write_csv(path, ["row_id", "community"],
              [[rid, "" if c < 0 else int(c)] for rid, c in zip(row_ids, point_community)])


def summary_row(report: dict, options: dict):
    """Header and the single summary row, read straight from the report document."""
    perm = report.get("permutation") or {}

    def z_perm(label):
        return perm.get(label, {}).get("z_perm")

    header = list(SUMMARY_COLUMNS)
    row = [report["observed"]["K"], report["D_obs"]["D"], z_perm("all"),
           report["z"]["D"], report["p_hat"]["D"]]
    if options.get("exclude_singletons", True):
        header += ["D_obs_excl_singletons", "z_perm_excl_singletons",
                   "z_str_excl_singletons", "p_hat_excl_singletons"]
        row += [report["D_obs"]["D_excl_singletons"], z_perm("excl_singletons"),
                report["z"]["D_excl_singletons"], report["p_hat"]["D_excl_singletons"]]
    if options.get("d_max", True):
        header += ["D_max_obs", "z_str_D_max", "p_hat_D_max"]
        row += [report["D_obs"]["D_max"], report["z"]["D_max"], report["p_hat"]["D_max"]]
    return header, [_cell(x) for x in row]


def cmd_test(args) -> int:
    data, config, options = load_run_config(args.config, seed_override=args.seed)
    out = _out_dir(args)
    result = run_structured_null_test(data, config, workers=args.workers)
    report = result.to_dict()
    if not options["null_modularity"]:
        report["diagnostics"].pop("null_modularity", None)
    report["input"] = {"file": Path(args.config).name, "n": data.n, "p": data.p,
                       "features": list(data.feature_names)}
    report["report_options"] = options
    validate(report, REPORT_SCHEMA, what="report")
    _dump_json(report, out / "report.json")
    header, row = summary_row(report, options)
    write_csv(out / "summary.csv", header, [row])
    _write_communities(out / "communities.csv", data.row_ids,
                       result.observed_run.communities.point_community)
    if options["plot"]:
        from .plotting import null_histogram

        null_histogram(result.null_samples["D"], result.D_obs["D"], out / "null_histogram.svg",
                       z=result.z["D"], p_hat=result.p_hat["D"])
    z = report["z"]["D"]
    print(f"K={report['observed']['K']} D_obs={report['D_obs']['D']:.4f} "
          f"z_str={'nan' if z is None else f'{z:.3f}'} p_hat={report['p_hat']['D']:.4f}")
    return 0


def cmd_mapper(args) -> int:
    data, config, options = load_run_config(args.config, seed_override=args.seed)
    out = _out_dir(args)
    run = run_pipeline(data, config, config.split_for(data.p),
                       seed_sequence(config.base_seed, OBSERVED_KEY))
    doc = run.graph.to_dict(list(data.row_ids))
    doc["communities"] = run.communities.to_dict()
    doc["config"] = config.mapper.to_dict()
    validate(doc, MAPPER_GRAPH_SCHEMA, what="mapper graph")
    _dump_json(doc, out / "mapper_graph.json")
    _write_communities(out / "communities.csv", data.row_ids, run.communities.point_community)
    if options["plot"]:
        from .plotting import mapper_graph_plot

        mapper_graph_plot(run.graph, run.communities.vertex_community, out / "mapper_graph.svg",
                          seed=config.base_seed)
    print(f"vertices={run.graph.n_vertices} edges={run.graph.n_edges} K={run.communities.K}")
    return 0


def cmd_simulate(args) -> int:
    from .simulation import TABLE_COLUMNS, format_table, run_scenario

    jobs, base_seed = load_scenarios(args.config)
    if args.seed is not None:
        base_seed = int(args.seed)
    out = _out_dir(args)
    results = []
    for spec, R, B, strategy in jobs:
        res = run_scenario(spec, R=R, B=B, base_seed=base_seed, workers=args.workers,
                           strategy=strategy)
        results.append(res)
        print(f"{spec.label} p={spec.p}: mean z={res.mean_z:.3f} "
              f"rejection rate={res.rejection_rate:.3f} ({res.runtime:.1f}s)", flush=True)
    write_csv(out / "scenario_results.csv", list(TABLE_COLUMNS),
              [[_cell(r.row()[c]) for c in TABLE_COLUMNS] for r in results])
    _dump_json({"base_seed": base_seed, "scenarios": [r.to_dict() for r in results]},
               out / "scenario_results.json")
    (out / "scenario_table.md").write_text(format_table(results), encoding="utf-8")
    if not args.no_plot:
        from .plotting import scenario_z_plot

        scenario_z_plot(results, out / "scenario_z.svg")
    return 0


def cmd_oracle(args) -> int:
    from .simulation import block_covariance
    from .teststat import FeatureSplit
    from .theory import (IntervalPartition, fpc_variance_check, permutation_decay_check,
                         population_dissociation_mc)

    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    print("covariance-driven dissociation (interval partition of the PC1 score)")
    print(f"{'Sigma':<24}{'breaks':<16}{'estimate':>10}{'bound':>10}{'SE':>10}  holds")
    cases = [
        ("diag(4,1)", np.diag([4.0, 1.0]), (0.0,), FeatureSplit((0,), (1,))),
        ("diag(4,1)", np.diag([4.0, 1.0]), (-1.0, 1.0), FeatureSplit((0,), (1,))),
        ("block p=9 rho=0.5", block_covariance(9, 0.5), (0.0,),
         FeatureSplit(tuple(range(0, 9, 2)), tuple(range(1, 9, 2)))),
    ]
    for name, S, breaks, split in cases:
        r = population_dissociation_mc(S, IntervalPartition(breaks), split, args.samples, rng)
        print(f"{name:<24}{str(breaks):<16}{r.estimate:>10.4f}{r.bound:>10.4f}"
              f"{r.standard_error:>10.4f}  {'yes' if r.holds else 'NO'}")
    print()
    print("label-permutation decay (K=3, pi=(0.5,0.3,0.2))")
    dec = permutation_decay_check((400, 1600, 6400), 3, (0.5, 0.3, 0.2), rng=rng,
                                  n_perm=args.n_perm)
    print(f"{'n':>8}{'median D':>12}")
    for n, m in zip(dec.n_grid, dec.medians):
        print(f"{n:>8}{m:>12.5f}")
    print(f"log-log slope {dec.slope:.3f} (target -0.5)")
    emp, formula = fpc_variance_check(rng.standard_normal(2000), 400, 4000, rng)
    print(f"finite-population variance: empirical {emp:.3e} formula {formula:.3e} "
          f"ratio {emp / formula:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mapnull",
        description="Covariance-preserving Gaussian null test for Mapper community structure.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON config file")
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--workers", type=int, default=default_workers(),
                       help="worker processes (default: available cores)")
        p.add_argument("--seed", type=int, default=None, help="override the base seed")

    p = sub.add_parser("test", help="run the structured null test on a CSV dataset")
    common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("mapper", help="build the Mapper graph and its communities only")
    common(p)
    p.set_defaults(func=cmd_mapper)

    p = sub.add_parser("simulate", help="rejection rates over simulated scenarios")
    common(p)
    p.add_argument("--no-plot", action="store_true", help="skip the z-score figure")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="print bound-vs-estimate tables for the theory checks")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--n-perm", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (StageError, ReplicateError) as exc:
        print(f"numeric failure in stage {exc.stage}: {exc}", file=sys.stderr)
        return 3
    except MapNullError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
