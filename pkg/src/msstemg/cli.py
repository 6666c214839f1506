"""Command-line entry point: ``msstemg <subcommand>``."""

import argparse
import logging
import os
import sys

from .config import ConfigError, load_config
from .dataio import DataError, ManifestEntry, save_trial, synth_trial, write_manifest
from .features import FEATURES, GESTURES, read_feature_csv, zscore_columns
from .pipeline import run_kwtest, run_pipeline
from .report import boxplot_svg
from .selftest import run_selftest
from .stats import Scenario, pairwise_kw, scenario_runner

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SELFTEST = 0, 1, 2, 3

log = logging.getLogger("msstemg")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_flags(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--manifest", help="trial manifest CSV (subject,gesture,repetition,path)")
    p.add_argument("--synthetic", action="store_true", default=None,
                   help="generate a synthetic cohort instead of reading a manifest")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--seed", type=int, help="random seed (unsigned 64-bit)")
    p.add_argument("--scenario", help="inter or intra:<k>")
    p.add_argument("--feature-mode", choices=("joint", "elementwise"))
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any configuration key")


def build_parser():
    parser = _Parser(prog="msstemg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pipeline", help="features, Kruskal-Wallis tests and figures")
    _add_run_flags(p)
    p = sub.add_parser("features", help="feature table only")
    _add_run_flags(p)

    p = sub.add_parser("kwtest", help="Kruskal-Wallis tests on an existing feature table")
    p.add_argument("features_csv")
    p.add_argument("--out", default="kwtest")
    p.add_argument("--scenario", default="inter")
    p.add_argument("--significance", type=float, default=0.001)

    p = sub.add_parser("boxplot", help="SVG box plot of one feature by gesture")
    p.add_argument("features_csv")
    p.add_argument("feature")
    p.add_argument("--out", help="SVG path (default: stdout)")
    p.add_argument("--zscore", action="store_true", help="z-score the feature columns first")

    p = sub.add_parser("synth", help="write a synthetic cohort as trial CSVs plus manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--subjects", type=int, default=2)
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--mode", choices=("null", "gesture"), default="null")
    p.add_argument("--duration", type=float, default=6.0)
    p.add_argument("--seed", type=int, default=0)

    sub.add_parser("selftest", help="run embedded analytic checks")
    return parser


def _config_from_args(args):
    overrides = {}
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = val
    for name in ("manifest", "synthetic", "out", "workers", "seed", "scenario", "feature_mode"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    return load_config(args.config, overrides)


def _cmd_run(args):
    cfg = _config_from_args(args)
    out = run_pipeline(cfg, command=args.command)
    print(out)
    return EXIT_OK


def _cmd_kwtest(args):
    table = read_feature_csv(args.features_csv)
    cfg = load_config(None, {"out": args.out, "scenario": args.scenario,
                             "significance": args.significance})
    print(run_kwtest(table, cfg))
    return EXIT_OK


def _cmd_boxplot(args):
    if args.feature not in FEATURES:
        print(f"unknown feature {args.feature!r}; valid: {', '.join(FEATURES)}", file=sys.stderr)
        return EXIT_USAGE
    table = read_feature_csv(args.features_csv)
    if args.zscore:
        table = zscore_columns(table)
    overall = None
    if len({r.gesture for r in table}) >= 2:
        overall = scenario_runner(table, Scenario("inter")).results[args.feature][0].p_value
        gestures, P, _ = pairwise_kw(table, args.feature)
        pairwise = (gestures, P)
    else:
        pairwise = None
    svg = boxplot_svg(table, args.feature, overall, pairwise)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(svg)
    else:
        sys.stdout.write(svg)
    return EXIT_OK


def _cmd_synth(args):
    trials = os.path.join(args.out, "trials")
    os.makedirs(trials, exist_ok=True)
    entries = []
    for s in range(1, args.subjects + 1):
        for g in GESTURES:
            for r in range(1, args.repetitions + 1):
                path = os.path.join(trials, f"s{s:02d}_{g}_r{r}.csv")
                save_trial(path, synth_trial(args.seed, s, g, r, args.mode, args.duration))
                entries.append(ManifestEntry(s, g, r, path))
    manifest = os.path.join(args.out, "manifest.csv")
    write_manifest(manifest, entries, relative_to=args.out)
    print(manifest)
    return EXIT_OK


def _cmd_selftest(args):
    return EXIT_OK if run_selftest() else EXIT_SELFTEST


COMMANDS = {
    "pipeline": _cmd_run,
    "features": _cmd_run,
    "kwtest": _cmd_kwtest,
    "boxplot": _cmd_boxplot,
    "synth": _cmd_synth,
    "selftest": _cmd_selftest,
}


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
