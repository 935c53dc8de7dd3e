"""Seeded Monte Carlo sampling of errors, syndromes and logical flips.

Every mechanism of every shot draws its own uniform from a Philox4x32-10
block keyed by the seed and addressed by ``(shot_index, mechanism // 2)``.
A shot therefore depends only on ``(seed, shot_index)``, never on how shots
are batched or split across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .error_model import DetectorErrorModel
from .validation import check_bit_vector

__all__ = [
    "Shot",
    "philox4x32",
    "uniforms",
    "sample_errors",
    "sample_shot",
    "sample_batch",
    "syndrome_of",
    "logical_of",
]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)


@nb.njit(cache=True)
def _philox(c0, c1, c2, c3, k0, k1):
    # arguments and results are uint32 held in uint64 lanes
    for _ in range(10):
        p0 = c0 * _M0
        p1 = c2 * _M1
        hi0 = p0 >> np.uint64(32)
        lo0 = p0 & _MASK32
        hi1 = p1 >> np.uint64(32)
        lo1 = p1 & _MASK32
        c0, c1, c2, c3 = (hi1 ^ c1 ^ k0) & _MASK32, lo1, (hi0 ^ c3 ^ k1) & _MASK32, lo0
        k0 = (k0 + np.uint64(_W0)) & _MASK32
        k1 = (k1 + np.uint64(_W1)) & _MASK32
    return c0, c1, c2, c3


def philox4x32(counter, key) -> tuple[int, int, int, int]:
    """One Philox4x32-10 block; ``counter`` is 4 words, ``key`` 2 words."""
    c = [np.uint64(int(x) & 0xFFFFFFFF) for x in counter]
    k = [np.uint64(int(x) & 0xFFFFFFFF) for x in key]
    return tuple(int(v) for v in _philox(c[0], c[1], c[2], c[3], k[0], k[1]))


@nb.njit(cache=True)
def _uniforms(seed_lo, seed_hi, start, count, width, out):
    inv = 1.0 / 9007199254740992.0  # 2**-53
    nblocks = (width + 1) // 2
    for i in range(count):
        shot = np.uint64(start + i)
        s_lo = shot & _MASK32
        s_hi = shot >> np.uint64(32)
        for b in range(nblocks):
            r0, r1, r2, r3 = _philox(np.uint64(b), np.uint64(0), s_lo, s_hi, seed_lo, seed_hi)
            q = 2 * b
            out[i, q] = ((r0 >> np.uint64(5)) * 67108864.0 + (r1 >> np.uint64(6))) * inv
            if q + 1 < width:
                out[i, q + 1] = ((r2 >> np.uint64(5)) * 67108864.0 + (r3 >> np.uint64(6))) * inv


def _split_seed(seed: int) -> tuple[np.uint64, np.uint64]:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32)


def uniforms(seed: int, start: int, stop: int, width: int) -> np.ndarray:
    """Uniforms in [0, 1) for shots ``start..stop-1`` and ``width`` mechanisms."""
    if not 0 <= start <= stop <= 2**64:
        raise ValueError(f"invalid shot range [{start}, {stop})")
    lo, hi = _split_seed(seed)
    out = np.empty((stop - start, width), dtype=np.float64)
    if width and stop > start:
        _uniforms(lo, hi, start, stop - start, width, out)
    return out


def sample_errors(model: DetectorErrorModel, seed: int, start: int, stop: int) -> np.ndarray:
    """Error bit matrix of shape ``(stop - start, num_mechanisms)``."""
    u = uniforms(seed, start, stop, model.num_mechanisms)
    return (u < model.priors).astype(np.uint8)


@dataclass(frozen=True)
class Shot:
    error: np.ndarray
    syndrome: np.ndarray
    logical: np.ndarray


def _gf2_rows(matrix, rows: np.ndarray) -> np.ndarray:
    # rows: (n, num_mechanisms) -> (n, matrix.shape[0]) over GF(2)
    prod = matrix @ rows.T.astype(np.int64)
    return (np.asarray(prod).T & 1).astype(np.uint8)


def sample_batch(model: DetectorErrorModel, seed: int, start: int, stop: int):
    """Errors, syndromes and logical flips for a contiguous range of shots."""
    errors = sample_errors(model, seed, start, stop)
    h, lo = model.matrices
    return errors, _gf2_rows(h, errors), _gf2_rows(lo, errors)


def sample_shot(model: DetectorErrorModel, seed: int, shot_index: int) -> Shot:
    errors, synd, logical = sample_batch(model, seed, shot_index, shot_index + 1)
    return Shot(errors[0], synd[0], logical[0])


def syndrome_of(model: DetectorErrorModel, error) -> np.ndarray:
    """Detectors flipped by ``error``: ``H e`` over GF(2)."""
    e = check_bit_vector(error, model.num_mechanisms, "error")
    return _gf2_rows(model.matrices[0], e[None, :])[0]


def logical_of(model: DetectorErrorModel, error) -> np.ndarray:
    """Observables flipped by ``error``."""
    e = check_bit_vector(error, model.num_mechanisms, "error")
    return _gf2_rows(model.matrices[1], e[None, :])[0]
