"""Command-line front end: one subcommand per experiment, a figure-recipe
runner, and the module selftest.

Exit codes: 0 success, 2 bad flags or configuration, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .harness import (
    ConfigError,
    ExperimentConfig,
    config_from_pairs,
    load_config,
    run,
    write_csv,
)
from .selftest import run_selftest

FIGURE_RANGE = range(3, 15)


def _add_shared(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file; flags override")
    p.add_argument("--m", type=int, help="transmit antennas (default 9)")
    p.add_argument("--nb", type=int, help="Bob antennas (default 4)")
    p.add_argument("--ne", type=int, help="Eve antennas (default 4)")
    p.add_argument("--l", type=int, help="RIS elements (default 9)")
    p.add_argument("--partial", type=float, help="marginal P(s=-1|u=+1) (default 0.5)")
    p.add_argument("--chi", type=float, help="marginal P(s=+1|u=-1) (default 0.5)")
    p.add_argument(
        "--phase-design",
        choices=("random", "optimal_known_x", "suboptimal_unknown_x"),
        help="Eve's RIS strategy (default optimal_known_x)",
    )
    p.add_argument("--snr", help="linear SNR grid, start:step:stop or comma list")
    p.add_argument("--frame-len", type=int, help="bits per frame (default 200)")
    p.add_argument("--target-frame-errors", type=int, help="stop rule (default 100)")
    p.add_argument("--max-frames", type=int, help="frame cap per point (default 400)")
    p.add_argument("--seed", type=int, help="master seed (default 42)")
    p.add_argument("--threads", type=int, help="worker threads (default 1)")
    p.add_argument("--out", required=True, help="output CSV path")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flipsec",
        description="Monte Carlo experiments for bit-flipping security "
        "against an RIS-assisted eavesdropper",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, kind in (("ber-eve", "ber_eve"), ("ber-bob", "ber_bob")):
        p = sub.add_parser(name, help=f"BER vs SNR at {name.split('-')[1].title()}")
        _add_shared(p)
        p.set_defaults(experiment=kind)

    p = sub.add_parser("ami", help="average mutual information at both receivers")
    _add_shared(p)
    p.add_argument("--vs-snr", action="store_true",
                   help="sweep SNR per flip sum instead of the flip sum alone")
    p.add_argument("--flip-sums", help="comma list of partial+chi targets")
    p.add_argument("--ami-snr", type=float, help="fixed SNR for the flip-sum sweep")
    p.add_argument("--samples", type=int, help="LLR samples per point (default 10000)")
    p.set_defaults(experiment="ami_sweep")

    p = sub.add_parser("power", help="Eve received power vs RIS size")
    _add_shared(p)
    p.add_argument("--l-values", help="comma list of RIS sizes (default 9..14)")
    p.add_argument("--realizations", type=int, help="draws per point (default 500)")
    p.set_defaults(experiment="power_vs_L")

    p = sub.add_parser("reproduce", help="run a stored figure recipe at desk scale")
    p.add_argument("figure", help="figN with N in 3..14, or 'all'")
    p.add_argument("--out-dir", default=".", help="directory for figN.csv")
    p.add_argument("--seed", type=int, help="override the recipe's master seed")
    p.add_argument("--threads", type=int, help="worker threads")

    sub.add_parser("selftest", help="oracle-backed invariant suite")
    return parser


def _flag_pairs(args: argparse.Namespace) -> dict:
    """Collect explicitly-set experiment flags as config key/value strings."""
    mapping = {
        "m": "m", "nb": "n_b", "ne": "n_e", "l": "l",
        "partial": "partial", "chi": "chi", "phase_design": "phase_design",
        "snr": "snr", "frame_len": "frame_len",
        "target_frame_errors": "target_frame_errors", "max_frames": "max_frames",
        "seed": "seed", "threads": "threads", "flip_sums": "flip_sums",
        "ami_snr": "ami_snr", "samples": "ami_samples",
        "l_values": "l_values", "realizations": "realizations",
    }
    pairs = {}
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            pairs[key] = str(value)
    return pairs


def _run_experiment(args: argparse.Namespace) -> int:
    base = ExperimentConfig(experiment=args.experiment)
    if args.config:
        base = load_config(args.config, base=base)
    pairs = _flag_pairs(args)
    if getattr(args, "vs_snr", False):
        pairs["experiment"] = "ami_vs_snr"
    elif args.experiment != base.experiment:
        pairs["experiment"] = args.experiment
    cfg = config_from_pairs(pairs, base=base)
    rows = run(cfg)
    write_csv(rows, args.out, meta={"experiment": cfg.experiment, "master_seed": cfg.seed})
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def recipe_path(figure: int):
    return resources.files("flipsec").joinpath(f"recipes/fig{figure}.cfg")


def figspec_path(figure: int):
    return resources.files("flipsec").joinpath(f"figspecs/fig{figure}.spec")


def _load_recipe(figure: int) -> tuple[dict, str, list[str]]:
    pairs = {}
    for lineno, raw in enumerate(
        recipe_path(figure).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"fig{figure}.cfg line {lineno}: not 'key = value'")
        key, _, value = line.partition("=")
        pairs[key.strip()] = value.strip()
    pairs.pop("figure", None)
    sweep_key = pairs.pop("sweep_key", "")
    sweep_values = [t.strip() for t in pairs.pop("sweep_values", "").split(",") if t.strip()]
    return pairs, sweep_key, sweep_values


def run_recipe(figure: int, out_dir, seed=None, threads=None) -> Path:
    """Execute a stored recipe; returns the CSV it wrote."""
    pairs, sweep_key, sweep_values = _load_recipe(figure)
    if seed is not None:
        pairs["seed"] = str(seed)
    if threads is not None:
        pairs["threads"] = str(threads)
    rows = []
    for value in sweep_values or [None]:
        sweep_pairs = dict(pairs)
        if value is not None:
            if sweep_key == "partial_chi":
                partial, _, chi = value.partition(":")
                sweep_pairs["partial"] = partial
                sweep_pairs["chi"] = chi
            elif sweep_key == "flip_sum":
                half = float(value) / 2.0
                sweep_pairs["partial"] = repr(half)
                sweep_pairs["chi"] = repr(half)
            else:
                sweep_pairs[sweep_key] = value
        cfg = config_from_pairs(sweep_pairs)
        rows.extend(run(cfg))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"fig{figure}.csv"
    write_csv(rows, out, meta={"figure": figure, "master_seed": pairs.get("seed", "42")})
    return out


def _run_reproduce(args: argparse.Namespace) -> int:
    name = args.figure.lower()
    if name == "all":
        figures = list(FIGURE_RANGE)
    else:
        if not name.startswith("fig"):
            raise ConfigError(f"expected figN or 'all', got {args.figure!r}")
        try:
            fig = int(name[3:])
        except ValueError:
            raise ConfigError(f"expected figN or 'all', got {args.figure!r}") from None
        if fig not in FIGURE_RANGE:
            raise ConfigError(f"figure id must be in 3..14, got {fig}")
        figures = [fig]
    for fig in figures:
        out = run_recipe(fig, args.out_dir, seed=args.seed, threads=args.threads)
        print(f"fig{fig}: wrote {out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "selftest":
            return 3 if run_selftest() else 0
        if args.command == "reproduce":
            return _run_reproduce(args)
        return _run_experiment(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
