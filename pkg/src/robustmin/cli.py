"""Command line entry point: ``robustmin run ...``.

Settings come from an optional config file (flat ``key = value`` lines
using the flag names, plus ``[heuristic.<name>]`` sections of parameter
overrides); command line flags win over the file.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import logging
import sys

from .harness import (
    HEURISTICS,
    ConfigError,
    ExperimentConfig,
    emit_outputs,
    prepare_output_dir,
    run_experiment,
    summarise,
)
from .testbed import REGISTRY

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

# flat keys accepted in the config file, with the parser for each
_KEYS = {
    "problem": str, "dim": str, "heuristic": str, "runs": int, "budget": int,
    "inner_samples": int, "num_initial": int, "post_samples": int, "seed": int,
    "out": str, "workers": int, "trace": bool, "alpha": float,
}


def _parse_value(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _split(text: str) -> list[str]:
    return [t.strip() for t in str(text).split(",") if t.strip()]


def read_config(path: str) -> tuple[dict, dict[str, dict]]:
    """Parse a config file into (flat settings, per-heuristic params)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None

    flat = {}
    for key, raw in parser.items("run"):
        name = key.replace("-", "_")
        if name not in _KEYS:
            raise ConfigError(f"unknown config key {key!r} in {path}")
        kind = _KEYS[name]
        try:
            if kind is bool:
                flat[name] = parser.getboolean("run", key)
            else:
                flat[name] = kind(raw)
        except ValueError:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from None

    params: dict[str, dict] = {}
    for section in parser.sections():
        if section == "run":
            continue
        kind, _, name = section.partition(".")
        if kind != "heuristic" or not name:
            raise ConfigError(f"unknown config section [{section}]")
        params[name] = {k.replace("-", "_"): _parse_value(v) for k, v in parser.items(section)
                        if k not in parser.defaults()}
    return flat, params


def _parse_set(items: list[str]) -> dict[str, dict]:
    params: dict[str, dict] = {}
    for item in items:
        key, eq, value = item.partition("=")
        heuristic, dot, name = key.partition(".")
        if not eq or not dot or not name:
            raise ConfigError(f"--set expects HEURISTIC.PARAM=VALUE, got {item!r}")
        params.setdefault(heuristic.strip(), {})[name.strip().replace("-", "_")] = \
            _parse_value(value.strip())
    return params


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    flat, params = read_config(args.config) if args.config else ({}, {})
    for key in _KEYS:
        value = getattr(args, key, None)
        if value is not None:
            flat[key] = value
    for name, overrides in _parse_set(args.set or []).items():
        params.setdefault(name, {}).update(overrides)

    missing = [k for k in ("problem", "dim", "heuristic") if k not in flat]
    if missing:
        raise ConfigError("missing required setting(s): " + ", ".join(missing))
    try:
        dims = [int(d) for d in _split(flat["dim"])]
    except ValueError:
        raise ConfigError(f"bad dim list {flat['dim']!r}") from None
    names = _split(flat["problem"])
    # every problem at every dimension it supports
    problems = [(p, d) for p in names for d in dims if p not in REGISTRY or REGISTRY[p].supports(d)]
    if not problems:
        raise ConfigError(f"no problem in {names} supports dim(s) {dims}")

    cfg = ExperimentConfig(
        problems=problems,
        heuristics=_split(flat["heuristic"]),
        heuristic_params=params,
        output_dir=flat.get("out", "results"),
        base_seed=flat.get("seed", 0),
        trace=flat.get("trace", False),
    )
    for key in ("runs", "budget", "inner_samples", "num_initial", "post_samples", "workers",
                "alpha"):
        if key in flat:
            setattr(cfg, key, flat[key])
    cfg.validate()
    return cfg


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustmin",
                                     description="Robust min-max search experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment matrix and write CSV results")
    run.add_argument("--config", help="config file (flag names as keys)")
    run.add_argument("--problem", help="test problem name(s), comma separated: "
                     + ", ".join(sorted(REGISTRY)))
    run.add_argument("--dim", help="dimension(s), comma separated")
    run.add_argument("--heuristic", help="heuristic name(s), comma separated: "
                     + ", ".join(HEURISTICS))
    run.add_argument("--runs", type=int, help="runs per instance and heuristic (default 50)")
    run.add_argument("--budget", type=int, help="evaluations per run (default 10000)")
    run.add_argument("--inner-samples", dest="inner_samples", type=int,
                     help="ball samples per inner search (default 100)")
    run.add_argument("--num-initial", dest="num_initial", type=int,
                     help="initial random points for LEH searches (default 1)")
    run.add_argument("--post-samples", dest="post_samples", type=int,
                     help="samples for the post-processing re-estimate (default 100000)")
    run.add_argument("--seed", type=int, help="base seed, unsigned 64-bit (default 0)")
    run.add_argument("--out", help="output directory (default ./results)")
    run.add_argument("--workers", type=int, help="parallel worker processes (default 1)")
    run.add_argument("--trace", action="store_const", const=True,
                     help="write evaluated points and candidate paths (2-D only)")
    run.add_argument("--alpha", type=float, help="rank-sum significance level (default 0.05)")
    run.add_argument("--set", action="append", metavar="HEURISTIC.PARAM=VALUE",
                     help="heuristic parameter override, repeatable (e.g. ga.population=10)")
    run.add_argument("-v", "--verbose", action="store_true", help="log progress")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = build_config(args)
    except ConfigError as exc:
        print(f"robustmin: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        prepare_output_dir(config.output_dir)
        records = run_experiment(config)
        stats = summarise(records, config.alpha)
        written = emit_outputs(records, stats, config)
    except ConfigError as exc:
        print(f"robustmin: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"robustmin: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for s in stats:
        flag = "*" if s.best_flag else " "
        print(f"{s.instance:16s} {s.heuristic:5s}{flag} mean={s.mean:.4g} sd={s.sd:.3g} "
              f"evals={s.mean_evaluations:.0f}")
    print(f"wrote {len(written)} files to {config.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
