"""Command-line and config-file resolution into a validated ``RunConfig``."""

import argparse
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from dotenv import dotenv_values
from pydantic import ValidationError

from ..exceptions import UsageError
from ..schemas.dataset import SynthSpec
from ..schemas.geometry import GeometrySpec, ParameterOrder, SlidingPattern, SmallMode, integer_sqrt
from ..schemas.run_config import RunConfig, missing_fields

COMMON = [
    ("--config", dict(help="flat key = value file; flags override its values")),
    ("--out", dict(help="output directory (all side effects land here)")),
    ("--seed", dict(type=int)),
    ("--threads", dict(type=int, help="worker cap")),
    ("--log-level", dict(choices=["DEBUG", "INFO", "WARNING", "ERROR"])),
]
GEOMETRY = [
    ("--hmin", dict(type=int, help="smallest image height H_min")),
    ("--hmax", dict(type=int, help="largest image height H_max")),
    ("--m", dict(type=int, help="window count, a perfect square")),
    ("--alpha-min", dict(type=float)),
    ("--alpha-max", dict(type=float)),
]
PLAN = [("--order", dict(choices=[o.value for o in ParameterOrder]))]
TRANSFORM = [
    ("--h", dict(type=int, help="window height")),
    ("--gamma", dict(type=float, help="window aspect ratio w / h")),
    ("--pattern", dict(choices=[p.value for p in SlidingPattern])),
    ("--small-mode", dict(choices=[s.value for s in SmallMode])),
    ("--hmin-clamp", dict(type=int)),
    ("--hmax-clamp", dict(type=int)),
    ("--mode", dict(choices=["votcsw", "pad", "magnify", "shrink"])),
    ("--size", dict(type=int, help="side of the resize baselines")),
]
NETWORK = [
    ("--learning-rate", dict(type=float)),
    ("--batch-size", dict(type=int)),
    ("--epochs", dict(type=int)),
    ("--restarts", dict(type=int)),
    ("--val-ratio", dict(type=float, help="share of the train split held out for validation")),
    ("--degree", dict(type=int)),
    ("--depth", dict(type=int)),
    ("--first-channels", dict(type=int)),
    ("--inner-channels", dict(type=int)),
    ("--last-channels", dict(type=int)),
    ("--dense-units", dict(type=int)),
    ("--kernel", dict(type=int)),
]
DATASET = [
    ("--classes", dict(type=int)),
    ("--count", dict(type=int, help="images per class")),
    ("--size-min", dict(type=int)),
    ("--size-max", dict(type=int)),
    ("--channels", dict(type=int, choices=[1, 3])),
    ("--noise", dict(type=float)),
]
RESAMPLE = [("--train-ratio", dict(type=float)), ("--size-bins", dict(type=int))]
MODEL = [("--model", dict(help="model file"))]
REDUCE = [("--tolerance", dict(type=float, help="accepted drop below the baseline score"))]
REPORT = [("--reduction", dict(help="reduction plan file or directory"))]

SUBCOMMANDS = {
    "plan": ("report the feasible window height for a dataset", [GEOMETRY, PLAN]),
    "synth": ("generate a synthetic variable-size dataset", [DATASET]),
    "resample": ("distribution-matched train/test resplit", [RESAMPLE]),
    "transform": ("turn images into window stacks or resize baselines", [GEOMETRY, TRANSFORM]),
    "train": ("train a polynomial convolutional network", [NETWORK]),
    "reduce": ("layer-wise polynomial degree reduction", [MODEL, REDUCE]),
    "eval": ("evaluate a model on the test split", [MODEL]),
    "report": ("render the evaluation report", [REPORT]),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="votcsw")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, (description, groups) in SUBCOMMANDS.items():
        sub = subparsers.add_parser(name, help=description, argument_default=argparse.SUPPRESS)
        sub.add_argument("input", nargs="?", default=None, help="input directory, manifest or artifact")
        for flag, options in [opt for group in [COMMON] + groups for opt in group]:
            sub.add_argument(flag, **options)
    return parser


def normalise_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def read_config_file(path: Optional[str]) -> Dict[str, str]:
    """Flat ``key = value`` pairs with ``#`` comments; keys normalised to field names."""
    if path is None:
        return {}
    if not Path(path).is_file():
        raise UsageError(f"config file {path} not found")
    values = dotenv_values(path)
    return {normalise_key(k): v for k, v in values.items() if v is not None and v != ""}


def _violations(error: ValidationError) -> List[str]:
    return [
        f"{'.'.join(str(p) for p in e['loc']) or 'config'}: {e['msg']}" for e in error.errors()
    ]


def cross_check(config: RunConfig) -> List[str]:
    """Constraints spanning several fields, checked per subcommand."""
    violations = [f"{name}: required for {config.subcommand}" for name in missing_fields(config)]
    if config.alpha_min is not None and config.alpha_max is not None and config.alpha_min > config.alpha_max:
        violations.append(f"alpha_min ({config.alpha_min}) exceeds alpha_max ({config.alpha_max})")
    if config.m is not None and integer_sqrt(config.m) is None:
        violations.append(f"m: {config.m} is not a perfect square")
    if config.hmin is not None and config.hmax is not None and config.hmin > config.hmax:
        violations.append(f"hmin ({config.hmin}) exceeds hmax ({config.hmax})")

    if config.subcommand == "transform":
        if config.mode == "votcsw" or config.size is None:
            if config.h is None or config.m is None:
                violations.append("h, m: required for the window transform (or give --size with a baseline mode)")
            elif not violations:
                try:
                    geometry_spec(config)
                except ValidationError as e:
                    violations += [f"geometry: {v.split(': ', 1)[-1]}" for v in _violations(e)]
    if config.subcommand == "synth":
        try:
            SynthSpec(
                classes=config.classes, count=config.count, size_min=config.size_min,
                size_max=config.size_max, channels=config.channels, noise=config.noise, seed=config.seed,
            )
        except ValidationError as e:
            violations += _violations(e)
    return violations


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Resolve argv (plus an optional ``--config`` file) into a validated RunConfig.

    argparse usage failures raise SystemExit(2); every other violation is
    collected into one UsageError.
    """
    namespace = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(namespace).items() if v is not None}
    file_values = read_config_file(flags.pop("config", None))
    file_values.pop("subcommand", None)
    merged = {**file_values, **flags}
    try:
        config = RunConfig(**merged)
    except ValidationError as e:
        raise UsageError("invalid configuration", violations=_violations(e))
    violations = cross_check(config)
    if violations:
        raise UsageError("invalid configuration", violations=violations)
    return config


def geometry_spec(config: RunConfig) -> GeometrySpec:
    """Window geometry of a transform run; the alpha bounds only matter to ``plan``."""
    return GeometrySpec(
        m=config.m, h=config.h, gamma=config.gamma,
        h_min_clamp=config.hmin_clamp, h_max_clamp=config.hmax_clamp,
    )
