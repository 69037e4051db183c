"""Command line entry point.

Examples::

    vsbdf2 convergence --problem heat1d --scheme vsbdf2 --grading 3 --start be
    vsbdf2 convergence --problem semilinear2d --scheme csbdf2 --start tf --format csv
    vsbdf2 stability --ratio 2.0,2.2,2.4 --N 50
    vsbdf2 evolution --scheme csbdf2,vsbdf2 --ratio 1.1 --N 50
    vsbdf2 convergence --config study.cfg --N 20,40

Settings may come from a flat ``key = value`` file (``--config``); flags
given on the command line take precedence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (
    StudyConfig,
    emit_series,
    emit_study,
    parse_config_text,
    run_convergence_study,
    run_error_evolution,
    run_stability_sweep,
)

log = logging.getLogger("vsbdf2")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vsbdf2", description="Variable step-size BDF2 experiments.")
    ap.add_argument("command", nargs="?", default="convergence", choices=["convergence", "stability", "evolution"])
    ap.add_argument("--config", help="flat key = value settings file")
    ap.add_argument("--problem", choices=["heat1d", "semilinear2d"])
    ap.add_argument("--M", type=int, help="spatial resolution")
    ap.add_argument("--b", type=float, help="reaction coefficient of heat1d")
    ap.add_argument("--epsilon", type=float, help="diffusion of semilinear2d")
    ap.add_argument("--T", type=float, help="final time")
    ap.add_argument("--scheme", help="csbdf2 or vsbdf2 (evolution accepts a comma list)")
    ap.add_argument("--grading", type=float, help="graded mesh exponent")
    ap.add_argument("--ratio", help="geometric step ratio (stability accepts a comma list)")
    ap.add_argument("--start", choices=["be", "tf"], help="starting step")
    ap.add_argument("--N", type=_ints, help="comma separated step counts")
    ap.add_argument("--format", choices=["csv", "md"])
    ap.add_argument("--out", help="output file (stdout if omitted)")
    ap.add_argument("--fp-tol", dest="fp_tol", type=float, help="fixed-point tolerance")
    ap.add_argument("--fp-maxit", dest="fp_maxit", type=int, help="fixed-point iteration cap")
    ap.add_argument("--tf-forcing", dest="tf_forcing", choices=["average", "midpoint"])
    ap.add_argument("--h1", choices=["spectral", "difference"], help="H1 seminorm of semilinear2d")
    ap.add_argument("--c1", type=float, help="constant of the step-size condition in the certificate")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


_FIELDS = ("problem", "M", "b", "epsilon", "T", "scheme", "grading", "ratio", "start",
           "N", "format", "out", "fp_tol", "fp_maxit", "tf_forcing", "h1", "c1")


def _settings(args):
    settings = {}
    if args.config:
        settings.update(parse_config_text(Path(args.config).read_text()))
    for name in _FIELDS:
        value = getattr(args, name)
        if value is not None:
            settings[name] = value
    return settings


def _write(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    settings = _settings(args)

    schemes = [s.strip() for s in str(settings.pop("scheme", "vsbdf2")).split(",") if s.strip()]
    ratio = settings.pop("ratio", None)
    ratios = _floats(ratio) if isinstance(ratio, str) else ([] if ratio is None else [float(ratio)])
    try:
        config = StudyConfig(scheme=schemes[0], ratio=ratios[0] if ratios else None, **settings)
    except (TypeError, ValueError) as exc:
        log.error("%s", exc)
        return 2

    if args.command == "convergence":
        result = run_convergence_study(config)
        _write(emit_study(result), config.out)
        for rec in result.runs:
            if rec.failure:
                log.error("N=%d failed: %s", rec.N, rec.failure)
        return 1 if result.failed else 0

    if args.command == "stability":
        N = config.N[-1] if "N" in settings else 50
        series, verdicts = run_stability_sweep(config, ratios or [2.4], N=N)
        _write(emit_series(series), config.out)
        for v in verdicts:
            print(f"# {v.series_id}: max|U^n|/|U^0| = {v.max_ratio:.4f}, "
                  f"final/initial = {v.final_ratio:.4e}, bounded = {v.bounded}", file=sys.stderr)
        return 1 if any(v.truncated for v in verdicts) else 0

    N = config.N[-1] if "N" in settings else 50
    configs = [replace(config, scheme=s) for s in schemes]
    series = run_error_evolution(configs, N)
    _write(emit_series(series), config.out)
    return 1 if any(s.truncated for s in series) else 0


if __name__ == "__main__":
    sys.exit(main())
