"""Command-line entry point: ``focklab run | presets | check``."""

from __future__ import annotations

import argparse
import logging
import sys

from threadpoolctl import threadpool_limits

from .checks import SUITES, run_checks, write_manifest
from .presets import list_presets
from .runner import ConfigError, load_config, run_batch, worker_count


def _cmd_run(args) -> int:
    try:
        configs = [load_config(p) for p in args.configs]
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        manifests = run_batch(configs, write=not args.dry_run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    ok = True
    for path, man in zip(args.configs, manifests):
        status = "PASS" if man["passed"] else "FAIL"
        print(f"{status}  {path}  kind={man['config']['kind']}  manifest={man['hash'][:16]}  "
              f"trust_radius={man['trust_radius']:.4f}  untrusted={man['untrusted_samples']}")
        for c in man["checks"]:
            print(f"    {'pass' if c['pass'] else 'FAIL'}  {c['name']}: {c['value']:.4e} {c['op']} {c['bound']:g}")
        ok &= man["passed"]
    return 0 if ok else 1


def _cmd_check(args) -> int:
    with threadpool_limits(limits=worker_count()):
        manifest = run_checks(args.suite or None, echo=None if args.quiet else print)
    path = write_manifest(manifest, args.output)
    n_fail = sum(not c["pass"] for c in manifest["checks"])
    print(f"{'PASS' if manifest['passed'] else 'FAIL'}  {len(manifest['checks']) - n_fail}/"
          f"{len(manifest['checks'])} invariants  manifest_hash={manifest['hash']}  ({path})")
    return 0 if manifest["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="focklab", description="Numerical experiments on Fock spaces.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one or more experiment configs (YAML)")
    p.add_argument("configs", nargs="+")
    p.add_argument("--dry-run", action="store_true", help="do not write output files")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("presets", help="list the built-in operators")
    p.set_defaults(func=lambda a: print(list_presets()) or 0)
    p = sub.add_parser("check", help="run the invariant suite")
    p.add_argument("--output", default="focklab_check")
    p.add_argument("--suite", action="append", choices=list(SUITES))
    p.add_argument("-q", "--quiet", action="store_true")
    p.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
