"""Monte Carlo experiment engine: configs, runs, and CSV persistence.

Experiments are deterministic functions of their configuration. Every frame
derives its own random stream from (master seed, experiment code, point
index, frame index), so results are byte-identical regardless of how many
worker threads execute the frames.

SNR convention (also written into each CSV header): the noise variance per
complex entry is sigma^2 = 2 alpha^2 / snr, i.e. alpha^2/snr per real
dimension, where alpha is the precoder's power normalization. Bob's
matched-filter BER is then Q(sqrt(N_b * snr)) for every antenna count M.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .channel import SystemDims
from .flipcode import FlipPolicy
from .infotheory import estimate_ami
from . import simkernel

EXPERIMENTS = ("ber_eve", "ber_bob", "ami_sweep", "ami_vs_snr", "power_vs_L")
_EXP_CODE = {name: i + 1 for i, name in enumerate(EXPERIMENTS)}

CSV_HEADER = (
    "experiment,M,N_b,N_e,L,phase_design,partial,chi,snr_linear,"
    "metric,value,bits,errors,frames,seed"
)
SNR_NOTE = (
    "noise variance per complex entry is 2*alpha^2/snr "
    "(alpha^2/snr per real dimension); Bob's matched-filter BER is "
    "Q(sqrt(N_b*snr))"
)

PHASE_DESIGNS = ("random", "optimal_known_x", "suboptimal_unknown_x")


class ConfigError(ValueError):
    """Bad experiment configuration or config file."""


class CsvFormatError(ValueError):
    """Result file does not conform to the schema."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment, fully specified. Desk-scale defaults on the reference
    geometry (M=9, N_b=4, N_e=4, L=9, 200-bit frames)."""

    experiment: str = "ber_eve"
    n_tx: int = 9
    n_bob: int = 4
    n_eve: int = 4
    n_ris: int = 9
    partial: float = 0.5
    chi: float = 0.5
    phase_design: str = "optimal_known_x"
    snr_grid: tuple = tuple(round(0.1 * k, 10) for k in range(1, 11))
    frame_len: int = 200
    target_frame_errors: int = 100
    max_frames: int = 400
    seed: int = 42
    flip_sums: tuple = (0.6, 0.8, 1.0)
    l_values: tuple = tuple(range(9, 15))
    realizations: int = 500
    ami_samples: int = 10_000
    ami_snr: float = 2.0
    per_frame_channel: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.phase_design not in PHASE_DESIGNS:
            raise ConfigError(f"unknown phase design {self.phase_design!r}")
        try:
            dims = self.dims
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.snr_grid or any(
            b <= a for a, b in zip(self.snr_grid, self.snr_grid[1:])
        ):
            raise ConfigError("snr grid must be nonempty and strictly increasing")
        if min(self.snr_grid) <= 0:
            raise ConfigError("snr values must be positive")
        if self.frame_len < 1 or self.max_frames < 1 or self.target_frame_errors < 1:
            raise ConfigError("frame_len, max_frames, target_frame_errors must be >= 1")
        try:
            self.policy
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.experiment in ("ami_sweep", "ami_vs_snr"):
            for s in self.flip_sums:
                try:
                    self.policy_for_sum(s)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    @property
    def dims(self) -> SystemDims:
        return SystemDims(
            n_tx=self.n_tx, n_bob=self.n_bob, n_eve=self.n_eve, n_ris=self.n_ris
        )

    @property
    def policy(self) -> FlipPolicy:
        return FlipPolicy.from_marginals(
            self.dims.n_flip, self.n_tx, self.partial, self.chi
        )

    def policy_for_sum(self, flip_sum: float) -> FlipPolicy:
        """Symmetric allocation of a target marginal sum."""
        return FlipPolicy.from_marginals(
            self.dims.n_flip, self.n_tx, flip_sum / 2.0, flip_sum / 2.0
        )


@dataclass(frozen=True)
class RecordRow:
    """One CSV result row."""

    experiment: str
    n_tx: int
    n_bob: int
    n_eve: int
    n_ris: int
    phase_design: str
    partial: float
    chi: float
    snr_linear: float
    metric: str
    value: float
    bits: int
    errors: int
    frames: int
    seed: int

    def __post_init__(self):
        if self.errors > self.bits:
            raise ValueError("error count cannot exceed bit count")
        if not math.isfinite(self.value):
            raise ValueError("metric value must be finite")


def _stream(cfg: ExperimentConfig, point: int, frame: int) -> np.random.Generator:
    return np.random.default_rng(
        [cfg.seed, _EXP_CODE[cfg.experiment], point, frame]
    )


def _map_indexed(fn, indices, threads: int):
    """Evaluate fn over indices, possibly in parallel, yielding in order."""
    if threads <= 1:
        for i in indices:
            yield i, fn(i)
        return
    wave = threads * 2
    indices = list(indices)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for lo in range(0, len(indices), wave):
            batch = indices[lo : lo + wave]
            for i, res in zip(batch, pool.map(fn, batch)):
                yield i, res


def _simulate(cfg: ExperimentConfig, policy: FlipPolicy, snr: float,
              point: int, frame: int, receiver: str):
    return simkernel.simulate_frame(
        cfg.dims, policy, cfg.phase_design, snr, cfg.frame_len,
        _stream(cfg, point, frame), receiver=receiver,
        per_frame_channel=cfg.per_frame_channel,
    )


def run_ber(cfg: ExperimentConfig) -> list[RecordRow]:
    """BER vs SNR at the designated receiver, with frame-error stopping."""
    if cfg.experiment not in ("ber_eve", "ber_bob"):
        raise ConfigError("run_ber needs a ber_eve or ber_bob config")
    receiver = "eve" if cfg.experiment == "ber_eve" else "bob"
    key = "llr_eve" if receiver == "eve" else "llr_bob"
    rows = []
    for point, snr in enumerate(cfg.snr_grid):
        bits = errors = frames = frame_errors = 0

        def frame_fn(idx, _snr=snr, _point=point):
            out = _simulate(cfg, cfg.policy, _snr, _point, idx, receiver)
            dec = np.where(out[key] >= 0.0, 1, -1)
            wrong = int(np.sum(dec != out["u"]))
            return wrong, out["u"].shape[0]

        for idx, (wrong, n) in _map_indexed(
            frame_fn, range(cfg.max_frames), cfg.threads
        ):
            bits += n
            errors += wrong
            frames += 1
            frame_errors += wrong > 0
            if frame_errors >= cfg.target_frame_errors:
                break
        value = errors / bits
        if not math.isfinite(value):
            raise RuntimeError(f"non-finite BER at snr={snr}")
        rows.append(
            RecordRow(
                experiment=cfg.experiment, n_tx=cfg.n_tx, n_bob=cfg.n_bob,
                n_eve=cfg.n_eve, n_ris=cfg.n_ris, phase_design=cfg.phase_design,
                partial=cfg.partial, chi=cfg.chi, snr_linear=snr, metric="ber",
                value=value, bits=bits, errors=errors, frames=frames, seed=cfg.seed,
            )
        )
    return rows


def _ami_point(cfg: ExperimentConfig, policy: FlipPolicy, snr: float, point: int):
    """Collect (u, llr) at both receivers and estimate the two AMIs."""
    n_frames = max(1, math.ceil(cfg.ami_samples / cfg.frame_len))

    def frame_fn(idx):
        out = _simulate(cfg, policy, snr, point, idx, "both")
        return out["u"], out["llr_bob"], out["llr_eve"]

    us, bobs, eves = [], [], []
    for _, (u, lb, le) in _map_indexed(frame_fn, range(n_frames), cfg.threads):
        us.append(u)
        bobs.append(lb)
        eves.append(le)
    u = np.concatenate(us)
    est_bob = estimate_ami(zip(u, np.concatenate(bobs)))
    est_eve = estimate_ami(zip(u, np.concatenate(eves)))
    return est_bob, est_eve, u.shape[0], n_frames


def run_ami(cfg: ExperimentConfig) -> list[RecordRow]:
    """AMI at Bob and Eve, swept over flip sums (fixed SNR) or over SNR."""
    if cfg.experiment not in ("ami_sweep", "ami_vs_snr"):
        raise ConfigError("run_ami needs an ami_sweep or ami_vs_snr config")
    if cfg.experiment == "ami_sweep":
        points = [(s, cfg.ami_snr) for s in cfg.flip_sums]
    else:
        points = [(s, snr) for s in cfg.flip_sums for snr in cfg.snr_grid]
    rows = []
    for point, (flip_sum, snr) in enumerate(points):
        policy = cfg.policy_for_sum(flip_sum)
        partial, chi = flip_sum / 2.0, flip_sum / 2.0
        est_bob, est_eve, n, frames = _ami_point(cfg, policy, snr, point)
        for metric, est in (
            ("ami_bob", est_bob),
            ("ami_eve", est_eve),
            ("ami_bob_se", est_bob),
            ("ami_eve_se", est_eve),
        ):
            value = est.bits if not metric.endswith("_se") else (est.std_error or 0.0)
            rows.append(
                RecordRow(
                    experiment=cfg.experiment, n_tx=cfg.n_tx, n_bob=cfg.n_bob,
                    n_eve=cfg.n_eve, n_ris=cfg.n_ris, phase_design=cfg.phase_design,
                    partial=partial, chi=chi, snr_linear=snr, metric=metric,
                    value=value, bits=n, errors=0, frames=frames, seed=cfg.seed,
                )
            )
    return rows


def run_power(cfg: ExperimentConfig) -> list[RecordRow]:
    """Eve's mean received power per RIS size and phase design."""
    if cfg.experiment != "power_vs_L":
        raise ConfigError("run_power needs a power_vs_L config")
    rows = []
    batch_size = 250
    for l_idx, n_ris in enumerate(cfg.l_values):
        sub = replace(cfg, n_ris=int(n_ris))
        policy = sub.policy
        n_batches = max(1, math.ceil(cfg.realizations / batch_size))
        samples = {d: [] for d in PHASE_DESIGNS}
        for b in range(n_batches):
            n = min(batch_size, cfg.realizations - b * batch_size)
            rng = _stream(cfg, l_idx, b)
            out = simkernel.power_samples(sub.dims, policy, PHASE_DESIGNS, n, rng)
            for d in PHASE_DESIGNS:
                samples[d].append(out[d])
        for design in PHASE_DESIGNS:
            power = np.concatenate(samples[design])
            for metric, value in (
                ("power", float(power.mean())),
                ("power_per_antenna", float(power.mean() / cfg.n_eve)),
                ("power_se", float(power.std(ddof=1) / np.sqrt(power.size))),
            ):
                if not math.isfinite(value):
                    raise RuntimeError(f"non-finite power at L={n_ris}")
                rows.append(
                    RecordRow(
                        experiment=cfg.experiment, n_tx=cfg.n_tx, n_bob=cfg.n_bob,
                        n_eve=cfg.n_eve, n_ris=int(n_ris), phase_design=design,
                        partial=cfg.partial, chi=cfg.chi, snr_linear=0.0,
                        metric=metric, value=value, bits=int(power.size), errors=0,
                        frames=0, seed=cfg.seed,
                    )
                )
    return rows


def run(cfg: ExperimentConfig) -> list[RecordRow]:
    if cfg.experiment in ("ber_eve", "ber_bob"):
        return run_ber(cfg)
    if cfg.experiment in ("ami_sweep", "ami_vs_snr"):
        return run_ami(cfg)
    return run_power(cfg)


# ---------------------------------------------------------------- CSV I/O

def _fmt_float(x: float) -> str:
    return repr(float(x))


def write_csv(rows: Iterable[RecordRow], path, meta: Optional[dict] = None) -> None:
    """Write rows in the fixed schema; '#' metadata lines precede the header."""
    lines = []
    meta = {"snr_convention": SNR_NOTE, **(meta or {})}
    for k, v in meta.items():
        lines.append(f"# {k} = {v}")
    lines.append(CSV_HEADER)
    for r in rows:
        lines.append(
            ",".join(
                [
                    r.experiment, str(r.n_tx), str(r.n_bob), str(r.n_eve),
                    str(r.n_ris), r.phase_design, _fmt_float(r.partial),
                    _fmt_float(r.chi), _fmt_float(r.snr_linear), r.metric,
                    format(r.value, ".17g"), str(r.bits), str(r.errors),
                    str(r.frames), str(r.seed),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_csv(path) -> list[RecordRow]:
    """Parse a results file, naming the offending line on format errors."""
    rows = []
    header_seen = False
    for lineno, raw in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != CSV_HEADER:
                raise CsvFormatError(f"line {lineno}: unexpected header {line!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 15:
            raise CsvFormatError(f"line {lineno}: expected 15 fields, got {len(parts)}")
        try:
            rows.append(
                RecordRow(
                    experiment=parts[0], n_tx=int(parts[1]), n_bob=int(parts[2]),
                    n_eve=int(parts[3]), n_ris=int(parts[4]), phase_design=parts[5],
                    partial=float(parts[6]), chi=float(parts[7]),
                    snr_linear=float(parts[8]), metric=parts[9],
                    value=float(parts[10]), bits=int(parts[11]),
                    errors=int(parts[12]), frames=int(parts[13]), seed=int(parts[14]),
                )
            )
        except ValueError as exc:
            raise CsvFormatError(f"line {lineno}: {exc}") from None
    if not header_seen:
        raise CsvFormatError("line 1: missing header")
    return rows


# ------------------------------------------------------------- config files

_INT_KEYS = {
    "m": "n_tx", "n_b": "n_bob", "n_e": "n_eve", "l": "n_ris",
    "frame_len": "frame_len", "target_frame_errors": "target_frame_errors",
    "max_frames": "max_frames", "seed": "seed", "realizations": "realizations",
    "ami_samples": "ami_samples", "threads": "threads",
}
_FLOAT_KEYS = {"partial": "partial", "chi": "chi", "ami_snr": "ami_snr"}
_STR_KEYS = {"experiment": "experiment", "phase_design": "phase_design"}


def parse_snr_range(text: str) -> tuple:
    """start:step:stop (inclusive) or a comma list of linear SNR values."""
    text = text.strip()
    try:
        if ":" in text:
            start_s, step_s, stop_s = text.split(":")
            start, step, stop = float(start_s), float(step_s), float(stop_s)
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + k * step, 12) for k in range(n))
        return tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise ConfigError(f"bad SNR range {text!r}") from None


def config_from_pairs(pairs: dict, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Build a config from flat key/value strings; unknown keys are errors."""
    kwargs = {}
    for key, value in pairs.items():
        key = key.strip().lower()
        value = value.strip()
        if key in _INT_KEYS:
            try:
                kwargs[_INT_KEYS[key]] = int(value)
            except ValueError:
                raise ConfigError(f"key {key!r} needs an integer, got {value!r}")
        elif key in _FLOAT_KEYS:
            try:
                kwargs[_FLOAT_KEYS[key]] = float(value)
            except ValueError:
                raise ConfigError(f"key {key!r} needs a number, got {value!r}")
        elif key in _STR_KEYS:
            kwargs[_STR_KEYS[key]] = value
        elif key == "snr":
            kwargs["snr_grid"] = parse_snr_range(value)
        elif key == "flip_sums":
            kwargs["flip_sums"] = tuple(float(t) for t in value.split(","))
        elif key == "l_values":
            kwargs["l_values"] = tuple(int(t) for t in value.split(","))
        elif key == "per_frame_channel":
            kwargs["per_frame_channel"] = value.lower() in ("1", "true", "yes")
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if base is None:
        return ExperimentConfig(**kwargs)
    return replace(base, **kwargs)


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Read a flat `key = value` document."""
    pairs = {}
    for lineno, raw in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno} is not 'key = value'")
        key, _, value = line.partition("=")
        pairs[key.strip()] = value.strip()
    return config_from_pairs(pairs, base=base)
