"""Monte Carlo runner for post-selection sweeps.

Verdicts of a deterministic decoder depend only on the syndrome, so each
distinct syndrome is decoded once per process and its outcome reused for
every later shot with the same syndrome. Shots are grouped into fixed blocks
and blocks are dealt to workers round-robin; workers return integer counts,
which are summed, so results do not depend on the worker count.
"""

from __future__ import annotations

import hashlib
import logging
import math
import multiprocessing as mp
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .decoders import DECODERS
from .decoders.base import DecodingError
from .error_model import DetectorErrorModel, format_dem
from .estimator import ArgumentReweighting
from .metrics import RateEstimate, suppression_factor
from .sampler import sample_batch
from .windowing import WindowLayout

__all__ = [
    "BLOCK_SIZE",
    "Experiment",
    "ShotOutcomes",
    "OutcomeCache",
    "build_experiment",
    "clear_caches",
    "prepare",
    "simulate",
    "count_shots",
    "run_experiment",
]

log = logging.getLogger(__name__)

BLOCK_SIZE = 1 << 16


def make_decoder(spec):
    if spec.name == "bposd":
        return DECODERS["bposd"](spec.max_iterations, spec.scaling_factor, spec.schedule)
    if spec.name == "mwpm":
        return DECODERS["mwpm"](spec.max_defects)
    return DECODERS["ml"]()


@dataclass
class Experiment:
    model: DetectorErrorModel
    baseline: ArgumentReweighting
    policies: list[ArgumentReweighting]
    z_values: tuple[float, ...]
    label: str = ""

    @property
    def windowed(self) -> bool:
        return self.baseline.window is not None


def build_experiment(model, decoder, criterion, rule, b_values, window=None, z_values=None, label="") -> Experiment:
    """Fit one post-selecting estimator per ``b`` on a shared model."""
    baseline = ArgumentReweighting(decoder, criterion, "ratio", 1.0, window).fit(model)
    policies = [ArgumentReweighting(decoder, criterion, rule, b, window).fit(model) for b in b_values]
    z = tuple(z_values) if z_values is not None else tuple(b - 1.0 for b in b_values)
    return Experiment(model, baseline, policies, z, label)


def prepare(config: ExperimentConfig, base_dir: Path | None = None) -> Experiment:
    model = config.model.build(base_dir)
    window = None
    if config.window is not None:
        window = WindowLayout(config.window.n_com, config.window.n_buf, max(model.num_rounds, 1), config.window.scope)
    z = config.policy.z_values()
    b = [1.0 + v for v in z]
    return build_experiment(
        model, make_decoder(config.decoder), config.policy.criterion, config.policy.rule, b,
        window, z, config.model.label(),
    )


class OutcomeCache:
    """Per-syndrome outcomes: baseline prediction, and acceptance, prediction and clamp count per policy."""

    def __init__(self, n_policies: int, logical_bytes: int):
        self.index: dict[bytes, int] = {}
        self.n_policies = n_policies
        self._cap = 1024
        self.base_pred = np.zeros((self._cap, logical_bytes), np.uint8)
        self.base_failed = np.zeros(self._cap, bool)
        self.accepted = np.zeros((self._cap, n_policies), bool)
        self.pred = np.zeros((self._cap, n_policies, logical_bytes), np.uint8)
        self.clamps = np.zeros((self._cap, n_policies), np.int64)

    def __len__(self) -> int:
        return len(self.index)

    def _grow(self, need: int) -> None:
        if need <= self._cap:
            return
        while self._cap < need:
            self._cap *= 2
        for name in ("base_pred", "base_failed", "accepted", "pred", "clamps"):
            old = getattr(self, name)
            new = np.zeros((self._cap,) + old.shape[1:], old.dtype)
            new[: len(old)] = old
            setattr(self, name, new)

    def add(self, key: bytes, base_pred, base_failed, verdicts) -> int:
        row = len(self.index)
        self._grow(row + 1)
        self.index[key] = row
        self.base_pred[row] = base_pred
        self.base_failed[row] = base_failed
        for j, (acc, pred, clamps) in enumerate(verdicts):
            self.accepted[row, j] = acc
            self.pred[row, j] = pred
            self.clamps[row, j] = clamps
        return row


def _pack(bits: np.ndarray) -> np.ndarray:
    return np.packbits(bits, axis=-1)


def _evaluate(exp: Experiment, syndrome: np.ndarray):
    n_obs = exp.model.num_observables
    zero = _pack(np.zeros(n_obs, np.uint8))
    first = None
    try:
        c = exp.baseline.baseline(syndrome)
        base_pred, failed = _pack(exp.baseline.logical(c)), False
        if not exp.windowed:
            first = c
    except DecodingError:
        base_pred, failed = zero, True
    verdicts = []
    for pol in exp.policies:
        if failed and not exp.windowed:
            verdicts.append((False, zero, 0))
            continue
        v = pol.decide(syndrome, first_correction=first)
        pred = _pack(pol.logical(v.correction)) if v.accepted else zero
        verdicts.append((v.accepted, pred, v.clamp_events))
    return base_pred, failed, verdicts


@dataclass
class ShotOutcomes:
    syndromes: np.ndarray
    logicals: np.ndarray
    baseline_error: np.ndarray  # (n,) bool; decoder failures count as errors
    baseline_failed: np.ndarray
    accepted: np.ndarray  # (n, P)
    logical_error: np.ndarray  # (n, P), only meaningful where accepted
    clamps: np.ndarray  # (n, P)


def simulate(exp: Experiment, seed: int, start: int, stop: int, cache: OutcomeCache | None = None) -> ShotOutcomes:
    """Per-shot outcomes for shots ``start..stop-1``."""
    if cache is None:
        cache = OutcomeCache(len(exp.policies), _pack(np.zeros(exp.model.num_observables, np.uint8)).size)
    _, synd, logical = sample_batch(exp.model, seed, start, stop)
    packed = _pack(synd)
    keys = np.ascontiguousarray(packed).view(np.dtype((np.void, max(packed.shape[1], 1)))).ravel()
    uniq, first_idx, inverse = np.unique(keys, return_index=True, return_inverse=True)
    rows = np.empty(len(uniq), np.int64)
    for u, (key, i) in enumerate(zip(uniq, first_idx)):
        kb = key.tobytes()
        row = cache.index.get(kb)
        if row is None:
            row = cache.add(kb, *_evaluate(exp, synd[i]))
        rows[u] = row
    shot_rows = rows[inverse.ravel()]
    true = _pack(logical)
    base_failed = cache.base_failed[shot_rows]
    base_err = (cache.base_pred[shot_rows] != true).any(axis=1) | base_failed
    acc = cache.accepted[shot_rows]
    err = (cache.pred[shot_rows] != true[:, None, :]).any(axis=2) & acc
    return ShotOutcomes(synd, logical, base_err, base_failed, acc, err, cache.clamps[shot_rows])


def _blocks(shots: int, worker: int, workers: int):
    nblocks = math.ceil(shots / BLOCK_SIZE)
    for b in range(worker, nblocks, workers):
        yield b * BLOCK_SIZE, min((b + 1) * BLOCK_SIZE, shots)


def count_shots(
    exp: Experiment, seed: int, shots: int, worker: int = 0, workers: int = 1, cache: OutcomeCache | None = None
) -> np.ndarray:
    """Integer counts for this worker's blocks.

    Row 0 is the baseline, row ``j + 1`` policy ``j``; columns are shots,
    accepted, logical errors, clamp events, decoder failures.
    """
    counts = np.zeros((len(exp.policies) + 1, 5), np.int64)
    if cache is None:
        cache = OutcomeCache(len(exp.policies), _pack(np.zeros(exp.model.num_observables, np.uint8)).size)
    for start, stop in _blocks(shots, worker, workers):
        out = simulate(exp, seed, start, stop, cache)
        n = stop - start
        counts[0] += (n, n, out.baseline_error.sum(), 0, out.baseline_failed.sum())
        counts[1:, 0] += n
        counts[1:, 1] += out.accepted.sum(axis=0)
        counts[1:, 2] += out.logical_error.sum(axis=0)
        counts[1:, 3] += out.clamps.sum(axis=0)
        counts[1:, 4] += (out.baseline_failed[:, None] & ~out.accepted).sum(axis=0)
    log.debug("worker %d decoded %d distinct syndromes", worker, len(cache))
    return counts


# Outcomes depend only on the syndrome and the experiment, so they may be
# kept for the life of the process; forked workers inherit the table.
_PROCESS_CACHES: dict[str, OutcomeCache] = {}


def experiment_key(config: ExperimentConfig, exp: Experiment) -> str:
    """Identity of everything a verdict depends on (not seed, shots or workers)."""
    parts = [model_id(exp.model), config.decoder.model_dump_json(), config.policy.model_dump_json(),
             "" if config.window is None else config.window.model_dump_json()]
    return hashlib.sha256("|".join(parts).encode()).hexdigest()


def _process_cache(config: ExperimentConfig, exp: Experiment) -> OutcomeCache:
    key = experiment_key(config, exp)
    if key not in _PROCESS_CACHES:
        _PROCESS_CACHES[key] = OutcomeCache(len(exp.policies), _pack(np.zeros(exp.model.num_observables, np.uint8)).size)
    return _PROCESS_CACHES[key]


def clear_caches() -> None:
    _PROCESS_CACHES.clear()


def _worker(args):
    config, base_dir, worker, workers, reuse = args
    exp = prepare(config, base_dir)
    cache = _process_cache(config, exp) if reuse else None
    return count_shots(exp, config.seed, config.shots, worker, workers, cache)


def model_id(model: DetectorErrorModel) -> str:
    return hashlib.sha256(format_dem(model).encode()).hexdigest()


def _finite(x: float):
    return None if isinstance(x, float) and not math.isfinite(x) else x


def run_experiment(config: ExperimentConfig, base_dir: Path | None = None, reuse_cache: bool = True) -> dict:
    """Run the baseline and every ``z`` of the sweep on one shared shot stream.

    With ``reuse_cache`` the per-syndrome outcomes decoded by earlier runs of
    the same experiment in this process are reused.
    """
    t0 = time.perf_counter()
    exp = prepare(config, base_dir)  # fails fast on decoder/model mismatch
    if config.workers == 1:
        cache = _process_cache(config, exp) if reuse_cache else None
        counts = count_shots(exp, config.seed, config.shots, cache=cache)
    else:
        jobs = [(config, base_dir, w, config.workers, reuse_cache) for w in range(config.workers)]
        with ProcessPoolExecutor(config.workers, mp_context=mp.get_context("fork")) as pool:
            counts = sum(pool.map(_worker, jobs))
    base = RateEstimate(*map(int, counts[0, :3]))
    rows = []
    for j, (z, pol) in enumerate(zip(exp.z_values, exp.policies)):
        est = RateEstimate(*map(int, counts[j + 1, :3]))
        f, fs = suppression_factor(base, est)
        rows.append({
            "z": z,
            "b": pol.b,
            "criterion": str(pol.criterion_),
            "rule": pol.rule,
            **est.as_dict(),
            "suppression_factor": _finite(f),
            "suppression_sigma": _finite(fs),
            "clamp_events": int(counts[j + 1, 3]),
            "decoder_failures": int(counts[j + 1, 4]),
        })
    log.info("run finished in %.1f s", time.perf_counter() - t0)
    return {
        "schema_version": 1,
        "config": config.model_dump(mode="json", exclude={"workers", "output"}),
        "model": {
            "id": model_id(exp.model),
            "label": exp.label,
            "num_mechanisms": exp.model.num_mechanisms,
            "num_detectors": exp.model.num_detectors,
            "num_observables": exp.model.num_observables,
        },
        "decoder": config.decoder.name,
        "window": None if config.window is None else config.window.model_dump(),
        "baseline": {**base.as_dict(), "decoder_failures": int(counts[0, 4])},
        "rows": rows,
        "runtime": {"software_version": __version__, "block_size": BLOCK_SIZE},
    }
