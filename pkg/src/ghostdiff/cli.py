"""Command-line entry point: ``ghostdiff {pattern,validate,intensity} <config>``."""
from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional

from .config import ConfigError, RunConfig, build_setup, load_config
from .correlation import signal_intensity_profile, sweep_pattern
from .exceptions import GhostDiffError
from .validation import all_passed, format_report, run_validation

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("ghostdiff")


@contextlib.contextmanager
def atomic_output(path: Path):
    """Write through a temporary sibling file, renamed into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def run_pattern(cfg: RunConfig, out: Path, quiet: bool = False) -> int:
    setup = build_setup(cfg)
    det = cfg.detector
    pattern = sweep_pattern(setup, det.x_min, det.x_max, det.points)
    with atomic_output(out) as fh:
        pattern.to_csv(fh)
    if not quiet:
        print(f"wrote {out}")
        print(f"peak |g1|            {pattern.g1_abs.max():.6g}")
        print(f"first zero x         {pattern.first_zero():.6g} m")
        print(f"fringe spacing       {pattern.fringe_spacing():.6g} m")
        print(f"approximation_quality {pattern.approximation_quality:.6g}")
        print(f"max snap error       {pattern.max_snap_error:.6g} rad/m")
    return EXIT_OK


def run_intensity(cfg: RunConfig, out: Path, quiet: bool = False) -> int:
    setup = build_setup(cfg)
    intensity = signal_intensity_profile(setup)
    with atomic_output(out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("k_x", "intensity"))
        for k, v in zip(setup.grid.kx, intensity):
            w.writerow((repr(float(k)), repr(float(v))))
    if not quiet:
        print(f"wrote {out}")
    return EXIT_OK


def run_validate(cfg: RunConfig, out: Path, quiet: bool = False, kernel_hook=None) -> int:
    if not cfg.oracle.enabled:
        raise ConfigError(["validation requires oracle (set oracle.enabled: true)"])
    setup = build_setup(cfg)
    checks = run_validation(setup, cfg.oracle.n_samples, cfg.oracle.seed,
                            kernel_hook=kernel_hook, n_workers=cfg.oracle.workers)
    header = (f"# ghostdiff validation: rng=PCG64/SeedSequence seed={cfg.oracle.seed} "
              f"n_samples={cfg.oracle.n_samples}; idler phase convention: literal c = -t a, "
              f"Monte Carlo compared against -1 * closed-form <c^dag d>")
    report = format_report(checks, header)
    with atomic_output(out) as fh:
        fh.write(report)
    if not quiet:
        sys.stdout.write(report)
    return EXIT_OK if all_passed(checks) else EXIT_VALIDATION


_COMMANDS = {
    "pattern": (run_pattern, "pattern.csv"),
    "validate": (run_validate, "validation.txt"),
    "intensity": (run_intensity, "intensity.csv"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghostdiff",
        description="Ghost interference-diffraction with thermal light and a beam splitter.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "pattern": "sweep the idler detector and write the g1 pattern as CSV",
        "validate": "check closed forms against the matrix and Monte Carlo oracles",
        "intensity": "write the signal-arm intensity profile as CSV",
    }
    for name, (_, default_out) in _COMMANDS.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("config", type=Path, help="YAML run configuration")
        p.add_argument("--out", type=Path, default=Path(default_out),
                       help=f"output file (default: {default_out})")
        p.add_argument("--seed", type=int, default=None, help="override oracle.seed")
        p.add_argument("--quiet", action="store_true", help="suppress stdout summary")
    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s")
    func, _ = _COMMANDS[args.command]
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(["--seed: must be non-negative"])
            cfg = dataclasses.replace(cfg, oracle=dataclasses.replace(cfg.oracle, seed=args.seed))
        return func(cfg, args.out, args.quiet)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (GhostDiffError, OSError, MemoryError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
