"""Detector error models: representation, text format, and small code builders.

A model is a list of independent error mechanisms. Each mechanism fires with
its own probability, flips a set of detectors, and flips a set of logical
observables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "DemSyntaxError",
    "ErrorMechanism",
    "DetectorErrorModel",
    "parse_dem",
    "format_dem",
    "canonicalize",
    "build_repetition_code",
    "build_surface_code_phenomenological",
    "check_matrices",
]


class DemSyntaxError(ValueError):
    """Malformed detector error model text."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class ErrorMechanism:
    probability: float
    detectors: tuple[int, ...] = ()
    observables: tuple[int, ...] = ()
    round: int = 0

    def __post_init__(self):
        p = float(self.probability)
        if not 0.0 < p < 1.0:
            raise ValueError(f"probability must lie in (0, 1), got {p}")
        dets = tuple(sorted(int(d) for d in self.detectors))
        obs = tuple(sorted(int(o) for o in self.observables))
        for name, idx in (("detector", dets), ("observable", obs)):
            if len(set(idx)) != len(idx):
                raise ValueError(f"duplicate {name} index in {idx}")
            if idx and idx[0] < 0:
                raise ValueError(f"negative {name} index {idx[0]}")
        if not dets and not obs:
            raise ValueError("mechanism flips neither a detector nor an observable")
        if self.round < 0:
            raise ValueError(f"round tag must be non-negative, got {self.round}")
        object.__setattr__(self, "probability", p)
        object.__setattr__(self, "detectors", dets)
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "round", int(self.round))

    @property
    def signature(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.detectors, self.observables


@dataclass(frozen=True)
class DetectorErrorModel:
    mechanisms: tuple[ErrorMechanism, ...] = ()
    num_detectors: int = 0
    num_observables: int = 0

    def __post_init__(self):
        mechs = tuple(self.mechanisms)
        object.__setattr__(self, "mechanisms", mechs)
        for q, m in enumerate(mechs):
            if m.detectors and m.detectors[-1] >= self.num_detectors:
                raise ValueError(
                    f"mechanism {q} references detector {m.detectors[-1]} "
                    f"but num_detectors={self.num_detectors}"
                )
            if m.observables and m.observables[-1] >= self.num_observables:
                raise ValueError(
                    f"mechanism {q} references observable {m.observables[-1]} "
                    f"but num_observables={self.num_observables}"
                )

    @classmethod
    def from_mechanisms(
        cls,
        mechanisms: Iterable[ErrorMechanism],
        num_detectors: int | None = None,
        num_observables: int | None = None,
    ) -> "DetectorErrorModel":
        """Build a model, inferring counts as one past the largest index used."""
        mechs = tuple(mechanisms)
        if num_detectors is None:
            num_detectors = 1 + max((m.detectors[-1] for m in mechs if m.detectors), default=-1)
        if num_observables is None:
            num_observables = 1 + max((m.observables[-1] for m in mechs if m.observables), default=-1)
        return cls(mechs, num_detectors, num_observables)

    def __len__(self) -> int:
        return len(self.mechanisms)

    @property
    def num_mechanisms(self) -> int:
        return len(self.mechanisms)

    @cached_property
    def priors(self) -> np.ndarray:
        p = np.array([m.probability for m in self.mechanisms], dtype=np.float64)
        p.flags.writeable = False
        return p

    @cached_property
    def rounds(self) -> np.ndarray:
        r = np.array([m.round for m in self.mechanisms], dtype=np.int64)
        r.flags.writeable = False
        return r

    @cached_property
    def detector_rounds(self) -> np.ndarray:
        """Round of each detector: the latest round of any mechanism touching it.

        Detectors touched by no mechanism get round 0.
        """
        out = np.zeros(self.num_detectors, dtype=np.int64)
        for m in self.mechanisms:
            for d in m.detectors:
                out[d] = max(out[d], m.round)
        out.flags.writeable = False
        return out

    @cached_property
    def num_rounds(self) -> int:
        return int(self.rounds.max()) + 1 if self.mechanisms else 0

    @cached_property
    def matrices(self) -> tuple[sp.csc_matrix, sp.csc_matrix]:
        return _build_matrices(self)

    @cached_property
    def dense_check_matrix(self) -> np.ndarray:
        h = self.matrices[0].toarray().astype(np.uint8)
        h.flags.writeable = False
        return h

    @cached_property
    def dense_observable_matrix(self) -> np.ndarray:
        lo = self.matrices[1].toarray().astype(np.uint8)
        lo.flags.writeable = False
        return lo

    def with_priors(self, priors: Sequence[float]) -> "DetectorErrorModel":
        """Same structure, new probabilities."""
        if len(priors) != len(self.mechanisms):
            raise ValueError(f"expected {len(self.mechanisms)} priors, got {len(priors)}")
        mechs = [
            ErrorMechanism(float(p), m.detectors, m.observables, m.round)
            for p, m in zip(priors, self.mechanisms)
        ]
        return DetectorErrorModel(tuple(mechs), self.num_detectors, self.num_observables)


def _build_matrices(model: DetectorErrorModel) -> tuple[sp.csc_matrix, sp.csc_matrix]:
    def build(rows: int, attr: str) -> sp.csc_matrix:
        indptr = [0]
        indices: list[int] = []
        for m in model.mechanisms:
            indices.extend(getattr(m, attr))
            indptr.append(len(indices))
        data = np.ones(len(indices), dtype=np.uint8)
        mat = sp.csc_matrix(
            (data, np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
            shape=(rows, model.num_mechanisms),
        )
        mat.has_sorted_indices = True
        return mat

    return build(model.num_detectors, "detectors"), build(model.num_observables, "observables")


def check_matrices(model: DetectorErrorModel) -> tuple[sp.csc_matrix, sp.csc_matrix]:
    """Return the detector check matrix H and the observable matrix.

    ``H[d, q] = 1`` iff mechanism ``q`` flips detector ``d``; the observable
    matrix is defined likewise. Both are compressed sparse columns of dtype
    uint8, so the syndrome of an error vector ``e`` is ``(H @ e) % 2``.
    """
    return model.matrices


# ---------------------------------------------------------------------------
# text format

_FLOAT = r"(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_ERROR_RE = re.compile(rf"error\(\s*({_FLOAT})\s*\)")
_TARGET_RE = re.compile(r"([DL])(\d+)$")
_ROUND_PRAGMA_RE = re.compile(r"#\s*round:\s*(\d+)\s*$")


def parse_dem(text: str) -> DetectorErrorModel:
    """Parse detector error model text.

    Supported lines are ``error(p) D.. L..``, ``detector_count N``,
    ``observable_count N``, ``#`` comments and blank lines. A comment of the
    form ``# round: N`` tags every following mechanism with round ``N``.
    Repeated targets on one line cancel in pairs.
    """
    mechanisms: list[ErrorMechanism] = []
    declared: dict[str, int] = {}
    current_round = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        col0 = len(raw) - len(raw.lstrip()) + 1
        if not line:
            continue
        if line.startswith("#"):
            pragma = _ROUND_PRAGMA_RE.match(line)
            if pragma:
                current_round = int(pragma.group(1))
            continue

        head, _, rest = line.partition(" ")
        if head in ("detector_count", "observable_count"):
            rest = rest.strip()
            if not rest.isdigit():
                raise DemSyntaxError(f"{head} expects a non-negative integer", lineno, col0 + len(head) + 1)
            if head in declared:
                raise DemSyntaxError(f"{head} declared twice", lineno, col0)
            declared[head] = int(rest)
            continue

        match = _ERROR_RE.match(line)
        if not match:
            word = re.match(r"[A-Za-z_]*", line).group(0) or line[:1]
            raise DemSyntaxError(f"unsupported instruction {word!r}", lineno, col0)
        p = float(match.group(1))
        if not 0.0 < p < 1.0:
            raise DemSyntaxError(f"probability {match.group(1)} outside (0, 1)", lineno, col0 + match.start(1))

        dets: set[int] = set()
        obs: set[int] = set()
        pos = match.end()
        targets = line[pos:]
        if not targets.strip():
            raise DemSyntaxError("error instruction without targets", lineno, col0 + pos)
        if targets[0] not in " \t":
            raise DemSyntaxError("expected whitespace after error(...)", lineno, col0 + pos)
        for tok in re.finditer(r"\S+", targets):
            col = col0 + pos + tok.start()
            t = _TARGET_RE.match(tok.group(0))
            if t is None:
                if tok.group(0).startswith(("D-", "L-")):
                    raise DemSyntaxError(f"negative index in target {tok.group(0)!r}", lineno, col)
                raise DemSyntaxError(f"unsupported target {tok.group(0)!r}", lineno, col)
            bucket = dets if t.group(1) == "D" else obs
            bucket.symmetric_difference_update({int(t.group(2))})
        if not dets and not obs:
            raise DemSyntaxError("error instruction cancels to no effect", lineno, col0)
        mechanisms.append(ErrorMechanism(p, tuple(dets), tuple(obs), current_round))

    inferred = DetectorErrorModel.from_mechanisms(mechanisms)
    n_det = declared.get("detector_count", inferred.num_detectors)
    n_obs = declared.get("observable_count", inferred.num_observables)
    if n_det < inferred.num_detectors or n_obs < inferred.num_observables:
        raise DemSyntaxError(
            f"declared counts ({n_det} detectors, {n_obs} observables) smaller than "
            f"referenced ({inferred.num_detectors}, {inferred.num_observables})",
            1,
        )
    return DetectorErrorModel(tuple(mechanisms), n_det, n_obs)


def format_dem(model: DetectorErrorModel) -> str:
    """Serialize to the text format accepted by :func:`parse_dem`."""
    lines = [f"detector_count {model.num_detectors}", f"observable_count {model.num_observables}"]
    current_round = 0
    for m in model.mechanisms:
        if m.round != current_round:
            lines.append(f"# round: {m.round}")
            current_round = m.round
        targets = [f"D{d}" for d in m.detectors] + [f"L{o}" for o in m.observables]
        lines.append(f"error({m.probability!r}) " + " ".join(targets))
    return "\n".join(lines) + "\n"


def canonicalize(model: DetectorErrorModel) -> DetectorErrorModel:
    """Merge mechanisms with identical detector and observable sets.

    Two independent mechanisms with the same effect fire jointly with XOR
    probability ``p1 (1 - p2) + p2 (1 - p1)``. The merged mechanism keeps the
    position and round tag of the first occurrence.
    """
    merged: dict[tuple, list] = {}
    order: list[tuple] = []
    for m in model.mechanisms:
        key = m.signature
        if key in merged:
            entry = merged[key]
            p1, p2 = entry[0], m.probability
            entry[0] = p1 * (1.0 - p2) + p2 * (1.0 - p1)
        else:
            merged[key] = [m.probability, m.round]
            order.append(key)
    mechs = []
    for key in order:
        p, rnd = merged[key]
        if p <= 0.0:
            continue
        mechs.append(ErrorMechanism(min(p, np.nextafter(1.0, 0.0)), key[0], key[1], rnd))
    return DetectorErrorModel(tuple(mechs), model.num_detectors, model.num_observables)


# ---------------------------------------------------------------------------
# builders


def _check_probability(name: str, p: float, allow_zero: bool = False) -> None:
    lo_ok = p >= 0.0 if allow_zero else p > 0.0
    if not (lo_ok and p < 0.5):
        bound = "[0, 0.5)" if allow_zero else "(0, 0.5)"
        raise ValueError(f"{name} must lie in {bound}, got {p}")


def _check_distance_rounds(distance: int, rounds: int) -> None:
    if distance < 3 or distance % 2 == 0:
        raise ValueError(f"distance must be an odd integer >= 3, got {distance}")
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")


def _phenomenological(
    qubit_checks: Sequence[Sequence[int]],
    logical_qubits: set[int],
    num_checks: int,
    rounds: int,
    p_data: float,
    p_meas: float,
) -> DetectorErrorModel:
    # detector t * num_checks + i compares check i between rounds t-1 and t;
    # the last round is read out noiselessly
    mechs: list[ErrorMechanism] = []
    for t in range(rounds):
        base = t * num_checks
        for q, checks in enumerate(qubit_checks):
            obs = (0,) if q in logical_qubits else ()
            mechs.append(ErrorMechanism(p_data, tuple(base + c for c in checks), obs, t))
        if t < rounds - 1 and p_meas > 0:
            for i in range(num_checks):
                mechs.append(ErrorMechanism(p_meas, (base + i, base + num_checks + i), (), t))
    return DetectorErrorModel(tuple(mechs), num_checks * rounds, 1)


def build_repetition_code(distance: int, rounds: int, p_data: float, p_meas: float) -> DetectorErrorModel:
    """Phenomenological bit-flip repetition code.

    Check ``i`` compares data qubits ``i`` and ``i + 1``. The logical
    observable is the value of data qubit 0. ``p_meas`` may be 0, in which
    case no measurement mechanisms are emitted.
    """
    _check_distance_rounds(distance, rounds)
    _check_probability("p_data", p_data)
    _check_probability("p_meas", p_meas, allow_zero=True)
    qubit_checks = [[i for i in (j - 1, j) if 0 <= i < distance - 1] for j in range(distance)]
    return _phenomenological(qubit_checks, {0}, distance - 1, rounds, p_data, p_meas)


def surface_code_z_checks(distance: int) -> list[list[tuple[int, int]]]:
    """Z-type plaquettes of the rotated surface code as lists of (row, col) qubits.

    Plaquette ``(i, j)`` covers qubits ``(i..i+1, j..j+1)`` clipped to the
    ``distance x distance`` grid. Z plaquettes are those with ``i + j`` even;
    weight-2 ones sit on the top and bottom edges.
    """
    d = distance
    checks = []
    for i in range(-1, d):
        for j in range(0, d - 1):
            if (i + j) % 2:
                continue
            if not (0 <= i <= d - 2 or i in (-1, d - 1)):
                continue
            cells = [(r, c) for r in (i, i + 1) for c in (j, j + 1) if 0 <= r < d and 0 <= c < d]
            checks.append(cells)
    return checks


def build_surface_code_phenomenological(distance: int, rounds: int, p: float) -> DetectorErrorModel:
    """X errors against the Z checks of a rotated surface code, phenomenological noise.

    Data flips and measurement flips both occur with probability ``p``. The
    observable is the logical Z operator supported on column 0.
    """
    _check_distance_rounds(distance, rounds)
    _check_probability("p", p)
    checks = surface_code_z_checks(distance)
    qubit_checks: list[list[int]] = [[] for _ in range(distance * distance)]
    for i, cells in enumerate(checks):
        for r, c in cells:
            qubit_checks[r * distance + c].append(i)
    logical = {r * distance for r in range(distance)}
    return _phenomenological(qubit_checks, logical, len(checks), rounds, p, p)
