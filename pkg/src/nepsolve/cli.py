"""Command-line entry point: ``nepsolve solve|probe|report|bench``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path


from . import io
from .errors import NepError
from .probing import make_probe
from .rsrr import rsrr_solve, rsrr_two_stage
from .sampling import Interval, boundary_sampling, chebyshev_points, default_sampling
from .ss import ss_full, ss_ri

log = logging.getLogger("nepsolve")

EXIT_OK, EXIT_ERROR, EXIT_REJECTED = 0, 1, 2


def sampling_for(config: io.RunConfig, region):
    kind = config.sampling
    if kind == "default" and config.algorithm == "ss-ci":
        kind = "contour"
    if kind == "chebyshev":
        if not isinstance(region, Interval):
            raise io.ValidationError("sampling", "chebyshev points need an interval region")
        return chebyshev_points(region, config.N)
    if kind == "contour":
        return boundary_sampling(region, config.N)
    return default_sampling(region, config.N)


def execute(config: io.RunConfig, workers=None):
    """Run the configured solver and return ``(problem, result)``."""
    problem = io.build_problem(config)
    region = config.region_obj()
    sampling = sampling_for(config, region)
    alg = config.algorithm
    if alg in ("ss-ri", "ss-ci"):
        result = ss_ri(problem, sampling, config.L, config.K, config.seed, config.tol_gap, region, workers)
    elif alg == "ss-full":
        result = ss_full(problem, sampling, config.K, config.tol_gap, region, workers=workers)
    else:
        kw = dict(delta=config.delta, tol_gap=config.tol_gap, N_Q=config.inner["N_Q"], K_Q=config.inner["K_Q"],
                  contour_Q=config.inner["contour"], workers=workers)
        if alg == "rsrr-two-stage":
            result = rsrr_two_stage(problem, region, config.N, config.L, config.seed, sampling=sampling, **kw)
        else:
            scheme = "moment" if alg == "rsrr-moment" else "sampling"
            result = rsrr_solve(problem, region, config.N, config.L, config.seed, scheme=scheme, K=config.K,
                                sampling=sampling, raw_sigma=True, **kw)
    return problem, result


def _summary(result) -> str:
    lines = [f"{result.provenance.get('algorithm')}: {len(result)} eigenvalues, {result.n_inside} inside, "
             f"accepted={result.accepted}"]
    if result.gap is not None:
        lines.append(f"gap g_max={result.gap.g_max:.3e} count={result.gap.count}")
    if result.n_inside:
        lines.append(f"max inside residual {result.max_residual():.3e}")
    return "\n".join(lines)


def cmd_solve(args) -> int:
    config = io.load_config(args.config)
    if args.out:
        config.output["dir"] = args.out
    with warnings.catch_warnings():
        if not args.verbose:
            warnings.simplefilter("ignore")
        _, result = execute(config, args.threads)
    paths = io.write_results(result, config.output_dir(), config)
    print(_summary(result))
    print(f"results written to {paths['csv'].parent}")
    return EXIT_OK if result.accepted else EXIT_REJECTED


def cmd_probe(args) -> int:
    config = io.load_config(args.config)
    problem = io.build_problem(config)
    region = config.region_obj()
    sampling = sampling_for(config, region)
    table = make_probe(problem, sampling, config.L, config.seed, workers=args.threads)
    out = Path(args.out) if args.out else config.output_dir() / "probe.npz"
    out.parent.mkdir(parents=True, exist_ok=True)
    table.save(out)
    print(f"probe table ({table.N} points, L={table.L}, {int(table.ok.sum())} ok) written to {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    """Re-emit the tables of a finished run (directory or eigenpairs.json)."""
    src = Path(args.result)
    src_dir = src if src.is_dir() else src.parent
    rows = io.read_table(src_dir / "eigenpairs.json")
    meta = json.loads((src_dir / "metadata.json").read_text())
    out = Path(args.out) if args.out else src_dir
    out.mkdir(parents=True, exist_ok=True)
    inside = [r for r in rows if r["inside"]] if args.inside_only else rows
    io.write_csv(out / "report.csv", io.EIG_FIELDS,
                 [[r["index"], r["re"], r["im"], r["residual"],
                   "" if r["weighted_residual"] is None else r["weighted_residual"], int(r["inside"])]
                  for r in inside])
    print(f"{meta['provenance'].get('algorithm')}: {len(rows)} eigenvalues, {meta['n_inside']} inside, "
          f"accepted={meta['accepted']}")
    for r in inside:
        print(f"{r['index']:4d}  {r['re']: .12e} {r['im']:+.3e}i  res {r['residual']:.2e}")
    return EXIT_OK if meta["accepted"] else EXIT_REJECTED


def cmd_bench(args) -> int:
    from . import bench

    runners = {"fig2": bench.run_fig2, "fig3": bench.run_fig3, "fig4": bench.run_fig4,
               "oracles": bench.run_oracles, "two-stage": bench.run_two_stage}
    names = list(runners) if args.which == "all" else [args.which]
    ok = True
    for name in names:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = runners[name](out_dir=args.out)
        for v in report.verdicts:
            print(v.line())
        ok &= report.passed
    return EXIT_OK if ok else EXIT_REJECTED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nepsolve", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="show solver warnings")
    p.add_argument("--threads", type=int, default=None,
                   help="probe-solve threads (default: $NEPSOLVE_NUM_THREADS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the solver described by a config file")
    s.add_argument("config")
    s.add_argument("-o", "--out", help="override output directory")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("probe", help="compute and save the probe table only")
    s.add_argument("config")
    s.add_argument("-o", "--out", help="output .npz path")
    s.set_defaults(func=cmd_probe)

    s = sub.add_parser("report", help="re-emit tables of a finished run")
    s.add_argument("result", help="result directory or its eigenpairs.json")
    s.add_argument("-o", "--out")
    s.add_argument("--inside-only", action="store_true")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("bench", help="run the reproduction harness")
    s.add_argument("which", nargs="?", default="all", choices=["all", "fig2", "fig3", "fig4", "oracles", "two-stage"])
    s.add_argument("-o", "--out", default="bench_out")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (NepError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
