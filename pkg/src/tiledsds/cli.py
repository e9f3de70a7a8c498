"""Command-line entry point: ``tiledsds <experiment> [--config PATH] [--key value]...``

Exit status is 0 when the experiment's check passes, 1 when it fails and 2 on
a configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, read_config_file, resolve_config
from .errors import ConfigError
from .experiments import run_experiment

log = logging.getLogger("tiledsds")


def _parse_overrides(extra: list[str]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    it = iter(extra)
    for token in it:
        if not token.startswith("--"):
            raise ConfigError(token, "expected --key value")
        key = token[2:].replace("-", "_")
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            value = next(it, None)
            if value is None:
                raise ConfigError(key, "missing value")
        overrides[key] = value
    return overrides


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="tiledsds", description=__doc__.splitlines()[0])
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("-v", "--verbose", action="store_true")
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    try:
        entries = read_config_file(args.config) if args.config else {}
        cfg = resolve_config(args.experiment, entries, _parse_overrides(extra))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    log.info("running %s into %s", cfg.experiment, cfg.output_dir)
    report = run_experiment(cfg)
    sys.stdout.write(report.text())
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
