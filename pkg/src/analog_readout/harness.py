"""End-to-end experiments: dataset, reservoir, training, readout, scoring."""

from __future__ import annotations

import csv
import math
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .channel import make_dataset
from .errors import InvalidParameterError
from .metrics import decide_symbols, symbol_error_rate
from .readout import (
    AnalogReadoutConfig,
    capacitance_from_tau,
    compute_eta,
    digital_output,
    ideal_analog_output,
    simulate_physical_readout,
)
from .reservoir import ReservoirParams, StateTrace, evolve, make_mask, run_reservoir
from .training import ridge_fit, train_readout

SEEDS_ENV = "ANALOG_READOUT_SEEDS"
MODES = ("digital", "ideal", "physical")
SWEEP_AXES = ("snr_db", "n_nodes", "tau_ratio")
SWEEP_COLUMNS = (
    "axis", "value", "mode", "mean_ser", "std_ser", "n_seeds", "alpha", "beta", "phase",
)
VALIDATION_FRACTION = 0.1
_TUNING_BATCH = 12

# Tags for deriving independent seeds from one experiment seed.
_MASK_TAG = 1
_READOUT_NOISE_TAG = 2


def default_seeds() -> tuple[int, ...]:
    """Seeds from ``$ANALOG_READOUT_SEEDS`` (comma separated), else 0..9."""
    raw = os.environ.get(SEEDS_ENV, "").strip()
    if not raw:
        return tuple(range(10))
    try:
        return tuple(int(s) for s in raw.replace(",", " ").split())
    except ValueError as exc:
        raise InvalidParameterError(f"${SEEDS_ENV} must list integers, got {raw!r}") from exc


def derive_seed(seed: int, tag: int) -> int:
    return int(np.random.SeedSequence([int(seed), tag]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    n_nodes: int = 64
    theta: float = 130e-9
    tau_ratio: float = 0.222
    snr_db: float = 28.0
    readout_mode: str = "ideal"
    lam: float = 1e-4
    seq_length: int = 9000
    train_fraction: float = 2.0 / 3.0
    washout: int = 50
    seeds: tuple[int, ...] = field(default_factory=default_seeds)
    tuning: bool = False
    alpha: float = 0.1
    beta: float = 0.8
    phase: float = 0.0
    desync_offset: int = 1
    alpha_grid: tuple[float, ...] = (0.05, 0.1, 0.2, 0.3)
    beta_grid: tuple[float, ...] = (0.5, 0.7, 0.8, 0.9, 0.95)
    phase_grid: tuple[float, ...] = (0.0, math.pi / 8, math.pi / 4)
    v_pi: float = 5.9
    gain: float = 1.0
    sample_rate: float = 2e8
    quantization_bits: Optional[int] = None
    noise_std: Optional[float] = None
    bandwidth_hz: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        for name in ("alpha_grid", "beta_grid", "phase_grid"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.readout_mode not in MODES:
            raise InvalidParameterError(
                f"readout_mode must be one of {MODES}, got {self.readout_mode!r}"
            )
        if not 0 < self.train_fraction < 1:
            raise InvalidParameterError("train_fraction must lie in (0, 1)")
        if not self.tau_ratio > 0:
            raise InvalidParameterError("tau_ratio must be positive")
        if self.seq_length < 100:
            raise InvalidParameterError("seq_length must be >= 100")
        if not self.seeds:
            raise InvalidParameterError("at least one seed is required")
        if self.n_nodes < 1 or not self.theta > 0:
            raise InvalidParameterError("n_nodes must be >= 1 and theta positive")
        if self.washout < 0:
            raise InvalidParameterError("washout must be non-negative")
        if self.tuning and not (self.alpha_grid and self.beta_grid and self.phase_grid):
            raise InvalidParameterError("tuning requires non-empty grids")
        n_train = self.n_train
        if n_train - self.washout < 2 or self.seq_length - n_train - self.washout < 1:
            raise InvalidParameterError("washout leaves no training or test steps")

    @property
    def n_train(self) -> int:
        return int(round(self.seq_length * self.train_fraction))

    @property
    def tau(self) -> float:
        return self.tau_ratio * self.theta * self.n_nodes

    @property
    def capacitance(self) -> float:
        """Capacitance implied by ``tau`` behind a 50 ohm matched cable."""
        return capacitance_from_tau(self.tau)

    def readout_config(self) -> AnalogReadoutConfig:
        return AnalogReadoutConfig(
            tau=self.tau,
            v_pi=self.v_pi,
            gain=self.gain,
            sample_rate=self.sample_rate,
            quantization_bits=self.quantization_bits,
            noise_std=self.noise_std,
            bandwidth_hz=self.bandwidth_hz,
        )


@dataclass(frozen=True)
class SeedOutcome:
    seed: int
    ser: dict
    params: tuple[float, float, float]


@dataclass(frozen=True)
class ExperimentResult:
    per_seed_ser: tuple[float, ...]
    mean_ser: float
    std_ser: float
    chosen: tuple[float, float, float]
    per_seed_params: tuple[tuple[float, float, float], ...]
    config: ExperimentConfig
    wall_time: float = field(default=0.0, compare=False)


def _segment_mask(length: int, start: int, stop: int, washout: int, valid) -> np.ndarray:
    keep = np.zeros(length, dtype=bool)
    keep[start + washout : stop] = True
    return keep & valid


def _tune(config: ExperimentConfig, mask: np.ndarray, u: np.ndarray, d: np.ndarray, valid):
    """Pick (alpha, beta, phase) by digital-readout SER on a validation slice.

    Ties on SER are broken by validation mean squared error, then grid order.
    """
    n_train = config.n_train
    n_fit = n_train - int(round(VALIDATION_FRACTION * n_train))
    fit = _segment_mask(n_train, 0, n_fit, config.washout, valid[:n_train])
    val = _segment_mask(n_train, n_fit, n_train, config.washout, valid[:n_train])
    if fit.sum() < 2 or val.sum() < 1:
        raise InvalidParameterError("training slice too short for a validation split")
    grid = [
        (a, b, p)
        for a in config.alpha_grid
        for b in config.beta_grid
        for p in config.phase_grid
    ]
    d = d[:n_train]
    x0 = np.zeros(config.n_nodes)
    best_key, best = None, None
    for start in range(0, len(grid), _TUNING_BATCH):
        chunk = np.array(grid[start : start + _TUNING_BATCH])
        states = evolve(chunk[:, 0], chunk[:, 1], chunk[:, 2], mask, u[:n_train], x0,
                        config.desync_offset)
        for j, combo in enumerate(chunk):
            X = states[j]
            w, b = ridge_fit(X[fit], d[fit], config.lam)
            y = X[val] @ w + b
            ser = symbol_error_rate(decide_symbols(y), d[val])
            key = (ser, float(np.mean((y - d[val]) ** 2)), start + j)
            if best_key is None or key < best_key:
                best_key, best = key, tuple(float(v) for v in combo)
    return best


def evaluate_seed(config: ExperimentConfig, seed: int, modes: Sequence[str]) -> SeedOutcome:
    """Run one seed and score every requested readout mode on the test slice."""
    for mode in modes:
        if mode not in MODES:
            raise InvalidParameterError(f"unknown readout mode {mode!r}")
    ds = make_dataset(config.seq_length, config.snr_db, seed)
    mask = make_mask(config.n_nodes, derive_seed(seed, _MASK_TAG))
    valid = ds.valid_mask()
    target = ds.d.astype(float)

    if config.tuning:
        alpha, beta, phase = _tune(config, mask, ds.u, target, valid)
    else:
        alpha, beta, phase = config.alpha, config.beta, config.phase

    params = ReservoirParams(
        n_nodes=config.n_nodes,
        mask=mask,
        theta=config.theta,
        input_gain=alpha,
        feedback_gain=beta,
        phase=phase,
        desync_offset=config.desync_offset,
    )
    trace = run_reservoir(params, ds.u, washout=config.washout)
    n_train = config.n_train
    L = config.seq_length
    train_rows = _segment_mask(L, 0, n_train, config.washout, valid)
    test_rows = _segment_mask(L, n_train, L, config.washout, valid)

    ser = {}
    analog = None
    if any(m != "digital" for m in modes):
        eta = compute_eta(config.theta, config.tau, config.n_nodes)
        train_trace = StateTrace(states=trace.states[:, train_rows])
        analog = train_readout(train_trace, eta, target[train_rows], config.lam,
                               washout=0, gain=config.gain)
    for mode in modes:
        if mode == "digital":
            w, b = ridge_fit(trace.design[train_rows], target[train_rows], config.lam)
            y = digital_output(trace, w, b)
        elif mode == "ideal":
            y = analog.calibrate(ideal_analog_output(trace, analog.eta, analog.omega, analog.bias))
        else:
            raw = simulate_physical_readout(
                trace, analog.eta, analog.omega, analog.bias, params,
                config.readout_config(), seed=derive_seed(seed, _READOUT_NOISE_TAG),
            )
            y = analog.calibrate(raw)
        ser[mode] = symbol_error_rate(decide_symbols(y), ds.d, test_rows)
    return SeedOutcome(seed=int(seed), ser=ser, params=(alpha, beta, phase))


def rounding_baseline_ser(config: ExperimentConfig, seed: int) -> float:
    """SER of deciding symbols straight from the receiver input, on the test slice."""
    ds = make_dataset(config.seq_length, config.snr_db, seed)
    L = config.seq_length
    test_rows = _segment_mask(L, config.n_train, L, config.washout, ds.valid_mask())
    return symbol_error_rate(decide_symbols(ds.u), ds.d, test_rows)


def _evaluate_task(task):
    config, seed, modes = task
    return evaluate_seed(config, seed, modes)


def _evaluate_many(tasks: list, workers: int) -> list:
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate_task, tasks))
    return [_evaluate_task(t) for t in tasks]


def _most_common(params: Iterable[tuple]) -> tuple:
    params = list(params)
    counts = Counter(params)
    top = max(counts.values())
    return next(p for p in params if counts[p] == top)


def _summarize(config: ExperimentConfig, outcomes: list, mode: str, wall: float):
    sers = tuple(o.ser[mode] for o in outcomes)
    per_params = tuple(o.params for o in outcomes)
    return ExperimentResult(
        per_seed_ser=sers,
        mean_ser=float(np.mean(sers)),
        std_ser=float(np.std(sers)),
        chosen=_most_common(per_params),
        per_seed_params=per_params,
        config=config,
        wall_time=wall,
    )


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Evaluate ``config.readout_mode`` over every seed."""
    t0 = time.perf_counter()
    tasks = [(config, s, (config.readout_mode,)) for s in config.seeds]
    outcomes = _evaluate_many(tasks, config.workers)
    return _summarize(config, outcomes, config.readout_mode, time.perf_counter() - t0)


def _axis_value(axis: str, value):
    if axis == "n_nodes":
        as_float = float(value)
        if not as_float.is_integer():
            raise InvalidParameterError(f"n_nodes must be an integer, got {value!r}")
        return int(as_float)
    return float(value)


def run_sweep(
    base: ExperimentConfig,
    axis: str,
    values: Sequence,
    modes: Optional[Sequence[str]] = None,
) -> list[dict]:
    """Sweep one axis; one row per (value, mode) with columns ``SWEEP_COLUMNS``.

    All modes at a sweep point share datasets, masks and reservoir runs.
    """
    if axis not in SWEEP_AXES:
        raise InvalidParameterError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")
    if not values:
        raise InvalidParameterError("sweep needs at least one value")
    modes = tuple(modes) if modes else (base.readout_mode,)
    for mode in modes:
        if mode not in MODES:
            raise InvalidParameterError(f"unknown readout mode {mode!r}")
    configs = [replace(base, **{axis: _axis_value(axis, v)}) for v in values]
    tasks = [(cfg, s, modes) for cfg in configs for s in cfg.seeds]
    outcomes = _evaluate_many(tasks, base.workers)

    rows = []
    pos = 0
    for cfg in configs:
        chunk = outcomes[pos : pos + len(cfg.seeds)]
        pos += len(cfg.seeds)
        for mode in modes:
            res = _summarize(cfg, chunk, mode, 0.0)
            alpha, beta, phase = res.chosen
            rows.append({
                "axis": axis,
                "value": getattr(cfg, axis),
                "mode": mode,
                "mean_ser": res.mean_ser,
                "std_ser": res.std_ser,
                "n_seeds": len(cfg.seeds),
                "alpha": alpha,
                "beta": beta,
                "phase": phase,
            })
    return rows


def write_rows(rows: Sequence[dict], stream: TextIO, columns: Sequence[str] = SWEEP_COLUMNS):
    writer = csv.DictWriter(stream, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _format(row[k]) for k in columns})


def _format(value):
    if isinstance(value, float):
        return repr(value)
    return value


# Config file handling -------------------------------------------------------

_LIST_KEYS = {"seeds", "alpha_grid", "beta_grid", "phase_grid"}
_OPTIONAL_KEYS = {"quantization_bits", "noise_std", "bandwidth_hz"}
_BOOL_WORDS = {"on": True, "true": True, "yes": True, "1": True,
               "off": False, "false": False, "no": False, "0": False}
_ALIASES = {"lambda": "lam", "mode": "readout_mode", "seed": "seeds"}


def _field_types() -> dict:
    defaults = ExperimentConfig.__dataclass_fields__
    out = {}
    for f in fields(ExperimentConfig):
        if f.name in _LIST_KEYS:
            out[f.name] = int if f.name == "seeds" else float
        elif f.name in _OPTIONAL_KEYS:
            out[f.name] = int if f.name == "quantization_bits" else float
        elif f.name == "readout_mode":
            out[f.name] = str
        elif f.name == "tuning":
            out[f.name] = bool
        else:
            out[f.name] = type(defaults[f.name].default)
    return out


def _convert(key: str, text: str, kind):
    text = text.strip()
    if key in _OPTIONAL_KEYS and text.lower() in ("", "none", "off"):
        return None
    try:
        if kind is bool:
            return _BOOL_WORDS[text.lower()]
        if kind is int:
            as_float = float(text)
            if not as_float.is_integer():
                raise ValueError(text)
            return int(as_float)
        return kind(text)
    except (KeyError, ValueError) as exc:
        raise InvalidParameterError(f"bad value {text!r} for {key}") from exc


def parse_settings(pairs: Iterable[tuple[str, str]]) -> dict:
    """Turn ``(key, value)`` pairs into ``ExperimentConfig`` keyword arguments.

    Repeating a list key appends to it; a single value may also hold a
    comma-separated list.
    """
    types = _field_types()
    out: dict = {}
    for raw_key, value in pairs:
        key = _ALIASES.get(raw_key.strip().replace("-", "_"), raw_key.strip().replace("-", "_"))
        if key not in types:
            raise InvalidParameterError(f"unknown setting {raw_key!r}")
        kind = types[key]
        if key in _LIST_KEYS:
            items = [v for v in value.split(",") if v.strip()]
            out.setdefault(key, []).extend(_convert(key, v, kind) for v in items)
        else:
            out[key] = _convert(key, value, kind)
    return out


def read_config_file(stream: TextIO) -> list[tuple[str, str]]:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    pairs = []
    for lineno, line in enumerate(stream, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def load_config(stream: Optional[TextIO] = None, overrides: Iterable[tuple[str, str]] = ()):
    """Build a config from an optional file, then apply overrides on top."""
    settings = parse_settings(read_config_file(stream)) if stream is not None else {}
    override = parse_settings(overrides)
    settings.update(override)
    try:
        return ExperimentConfig(**settings)
    except TypeError as exc:
        raise InvalidParameterError(str(exc)) from exc
