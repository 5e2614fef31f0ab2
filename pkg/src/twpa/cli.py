"""Command-line entry point: ``twpa <command> [--config PATH] [--out DIR] [--section.key value ...]``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__, commands, io
from .config import load_config
from .demo import DEFAULT_SEED, write_demo
from .errors import TwpaError

log = logging.getLogger("twpa")

COMMANDS = {
    "film-fit": "fit film-growth models to measured samples",
    "design": "dispersion, stopbands and S-parameters of the line",
    "gain": "pumped gain from the coupled-mode equations",
    "noise-fit": "noise temperature from a hot-resistor scan",
    "report": "combine the four artifact sets into report.md",
}


def _split_overrides(argv):
    """Pull ``--section.key value`` pairs out of argv."""
    rest, overrides = [], {}
    it = iter(argv)
    for tok in it:
        if tok.startswith("--") and "." in tok[2:].split("=", 1)[0]:
            key, eq, val = tok[2:].partition("=")
            if not eq:
                try:
                    val = next(it)
                except StopIteration:
                    raise SystemExit(f"twpa: --{key} needs a value") from None
            overrides[key] = val
        else:
            rest.append(tok)
    return rest, overrides


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twpa", description=__doc__)
    p.add_argument("--version", action="version", version=f"twpa {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in COMMANDS.items():
        c = sub.add_parser(name, help=help_)
        c.add_argument("--config", help="INI project file")
        c.add_argument("--out", help="output directory")
        if name == "noise-fit":
            c.add_argument("--scan", help="noise scan CSV (overrides noise.scan)")
        if name == "report":
            c.add_argument("--rebuild", action="store_true", help="run the four commands first")
    d = sub.add_parser("init-demo", help="write a synthetic demo project")
    d.add_argument("directory")
    d.add_argument("--seed", type=int, default=DEFAULT_SEED)
    d.add_argument("--noise", type=float, default=0.0, help="relative scatter added to demo data")
    return p


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    rest, overrides = _split_overrides(argv)
    args = build_parser().parse_args(rest)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "init-demo":
            d = write_demo(args.directory, seed=args.seed, noise=args.noise)
            print(f"demo project written to {d}; run: twpa report --rebuild --config {d / 'twpa.ini'}")
            return 0
        cfg = load_config(args.config, overrides)
        if args.command == "film-fit":
            res = commands.cmd_film_fit(cfg, args.out)
        elif args.command == "design":
            res = commands.cmd_design(cfg, args.out)
        elif args.command == "gain":
            res = commands.cmd_gain(cfg, args.out)
        elif args.command == "noise-fit":
            res = commands.cmd_noise_fit(cfg, args.out, args.scan)
        else:
            path = commands.cmd_report(cfg, args.out, rebuild=args.rebuild)
            print(f"report written to {path}")
            return 0
        for k, v in res.items():
            print(f"{k} = {io.fmt(v)}")
        return 0
    except TwpaError as exc:
        print(f"twpa {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
