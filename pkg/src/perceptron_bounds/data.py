"""Synthetic dataset generators and stream file formats.

Generators are pure functions of their ``GeneratorSpec``: the same spec always
yields the same stream, bit for bit, via numpy's PCG64 generator seeded with
the spec's 64-bit seed. Kinds:

* ``SEPARABLE_MARGIN``: a planted unit separator, points drawn uniformly from
  the radius ball and rejected until their unnormalized margin reaches the
  planted value; labels follow the separator's side.
* ``LABEL_NOISE``: the same draw, then each label flips independently with the
  given probability (flips are drawn after all points, so flip_prob=0
  reproduces SEPARABLE_MARGIN exactly).
* ``CONTRADICTORY``: one fixed point at radius times the first basis vector,
  labels alternating starting with +1. Forces an update every round.

File formats are lossless for dense float64 data: values are written with
``repr``, whose shortest round-trip decimals reparse to the identical float.
Parse failures raise DataParseError carrying the 1-based line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DataParseError, GenerationError
from .stream import Stream

MAX_CONSECUTIVE_REJECTIONS = 1_000_000


class GeneratorKind(str, Enum):
    SEPARABLE_MARGIN = "separable_margin"
    LABEL_NOISE = "label_noise"
    CONTRADICTORY = "contradictory"


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters fully determining a synthetic dataset."""

    kind: GeneratorKind
    dim: int
    count: int
    radius: float = 1.0
    planted_margin: float | None = None
    flip_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", GeneratorKind(self.kind))
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be an integer >= 1, got {self.dim!r}")
        if int(self.count) != self.count or self.count < 1:
            raise ValueError(f"count must be an integer >= 1, got {self.count!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "count", int(self.count))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"radius must be a positive real, got {self.radius!r}")
        if self.kind in (GeneratorKind.SEPARABLE_MARGIN, GeneratorKind.LABEL_NOISE):
            m = self.planted_margin
            if m is None or not (np.isfinite(m) and 0 < m):
                raise ValueError(f"planted_margin must be a positive real, got {m!r}")
            if not m < self.radius:
                raise ValueError(
                    f"planted_margin {m} must be smaller than radius {self.radius}; "
                    "the margin shell would be empty"
                )
        if self.kind is GeneratorKind.LABEL_NOISE:
            if not (np.isfinite(self.flip_prob) and 0.0 <= self.flip_prob < 1.0):
                raise ValueError(f"flip_prob must lie in [0, 1), got {self.flip_prob!r}")
        if not (-(2**63) <= int(self.seed) < 2**64):
            raise ValueError(f"seed must fit in 64 bits, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))


class GeneratedData(NamedTuple):
    stream: Stream
    planted: np.ndarray | None


def generate(spec: GeneratorSpec) -> GeneratedData:
    """Materialize the dataset a spec describes.

    Returns the stream and, for the planted-separator kinds, the unit
    separator itself (before any label noise).
    """
    if spec.kind is GeneratorKind.CONTRADICTORY:
        X = np.zeros((spec.count, spec.dim))
        X[:, 0] = spec.radius
        y = np.where(np.arange(spec.count) % 2 == 0, 1, -1)
        return GeneratedData(Stream(X, y), None)

    rng = np.random.default_rng(spec.seed)
    planted = rng.standard_normal(spec.dim)
    norm = np.linalg.norm(planted)
    while norm < 1e-12:  # pragma: no cover - probability zero draw
        planted = rng.standard_normal(spec.dim)
        norm = np.linalg.norm(planted)
    planted = planted / norm

    accepted = np.empty((spec.count, spec.dim))
    got = 0
    consecutive_rejections = 0
    batch = max(64, 2 * spec.count)
    while got < spec.count:
        dirs = rng.standard_normal((batch, spec.dim))
        dir_norms = np.linalg.norm(dirs, axis=1)
        dir_norms[dir_norms < 1e-300] = 1.0
        radii = spec.radius * rng.random(batch) ** (1.0 / spec.dim)
        points = dirs * (radii / dir_norms)[:, None]
        ok = np.abs(points @ planted) >= spec.planted_margin
        hits = np.nonzero(ok)[0]
        take = hits[: spec.count - got]

        # rejection runs seen before the last point we keep, carried across
        # batch boundaries; abort exactly when a run reaches the cap
        runs = [consecutive_rejections + int(hits[0])] if hits.size else []
        scan = take if take.size == spec.count - got else hits
        if scan.size > 1:
            runs.append(int((np.diff(scan) - 1).max()))
        if hits.size == 0:
            consecutive_rejections += batch
            runs.append(consecutive_rejections)
        elif take.size < spec.count - got:
            consecutive_rejections = batch - 1 - int(hits[-1])
            runs.append(consecutive_rejections)
        if runs and max(runs) >= MAX_CONSECUTIVE_REJECTIONS:
            raise GenerationError(
                f"rejection sampling stalled ({max(runs)} consecutive misses); the "
                f"margin shell |v.x| >= {spec.planted_margin} is too thin for "
                f"radius {spec.radius} in dimension {spec.dim}"
            )
        accepted[got : got + take.size] = points[take]
        got += take.size

    y = np.where(accepted @ planted > 0, 1, -1)
    if spec.kind is GeneratorKind.LABEL_NOISE:
        flips = rng.random(spec.count) < spec.flip_prob
        y = np.where(flips, -y, y)
    planted.flags.writeable = False
    return GeneratedData(Stream(accepted, y), planted)


class FileFormat(str, Enum):
    CSV = "csv"
    SPARSE = "sparse"


def _parse_label(token: str, path: str, line: int) -> int:
    try:
        value = float(token)
    except ValueError:
        raise DataParseError(f"label {token!r} is not a number", path, line) from None
    if value == 1.0:
        return 1
    if value in (-1.0, 0.0):
        return -1
    raise DataParseError(
        f"label must be -1, 0, or +1 (0 maps to -1), got {token!r}", path, line
    )


def _data_lines(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataParseError(f"cannot read file: {exc}", path) from exc
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def load(path: str, fmt: FileFormat) -> Stream:
    """Read a stream from disk in the given format."""
    fmt = FileFormat(fmt)
    return _load_csv(path) if fmt is FileFormat.CSV else _load_sparse(path)


def _load_csv(path: str) -> Stream:
    labels: list[int] = []
    rows: list[list[float]] = []
    dim = None
    for lineno, line in _data_lines(path):
        tokens = [t.strip() for t in line.split(",")]
        if len(tokens) < 2:
            raise DataParseError("expected 'label,f1,...' with at least one feature", path, lineno)
        labels.append(_parse_label(tokens[0], path, lineno))
        try:
            feats = [float(t) for t in tokens[1:]]
        except ValueError:
            raise DataParseError(f"malformed feature value in {line!r}", path, lineno) from None
        if not all(math.isfinite(v) for v in feats):
            raise DataParseError("features must be finite", path, lineno)
        if dim is None:
            dim = len(feats)
        elif len(feats) != dim:
            raise DataParseError(
                f"row has {len(feats)} features, earlier rows have {dim}", path, lineno
            )
        rows.append(feats)
    if not rows:
        raise DataParseError("no data rows", path)
    return Stream(np.array(rows), np.array(labels))


def _load_sparse(path: str) -> Stream:
    labels: list[int] = []
    entries: list[list[tuple[int, float]]] = []
    max_index = 0
    for lineno, line in _data_lines(path):
        tokens = line.split()
        labels.append(_parse_label(tokens[0], path, lineno))
        pairs: list[tuple[int, float]] = []
        prev = 0
        for token in tokens[1:]:
            idx_str, sep, val_str = token.partition(":")
            if not sep:
                raise DataParseError(f"expected index:value, got {token!r}", path, lineno)
            try:
                idx = int(idx_str)
                val = float(val_str)
            except ValueError:
                raise DataParseError(f"malformed index:value pair {token!r}", path, lineno) from None
            if idx < 1:
                raise DataParseError(f"indices are 1-based, got {idx}", path, lineno)
            if idx <= prev:
                raise DataParseError(
                    f"indices must be strictly ascending, got {idx} after {prev}", path, lineno
                )
            if not math.isfinite(val):
                raise DataParseError("values must be finite", path, lineno)
            prev = idx
            pairs.append((idx, val))
        max_index = max(max_index, prev)
        entries.append(pairs)
    if not entries:
        raise DataParseError("no data rows", path)
    if max_index == 0:
        raise DataParseError("no feature indices anywhere in the file", path)
    X = np.zeros((len(entries), max_index))
    for row, pairs in enumerate(entries):
        for idx, val in pairs:
            X[row, idx - 1] = val
    return Stream(X, np.array(labels))


def save(stream: Stream, path: str, fmt: FileFormat) -> None:
    """Write a stream to disk; loading the file back yields an equal stream.

    Floats are rendered with ``repr`` (shortest round-trip form). The sparse
    format writes every index, zeros included, so the dimension survives the
    round trip even when a trailing column is entirely zero.
    """
    fmt = FileFormat(fmt)
    lines = []
    for t in range(len(stream)):
        label = int(stream.y[t])
        feats = stream.X[t]
        if fmt is FileFormat.CSV:
            lines.append(f"{label}," + ",".join(repr(float(v)) for v in feats))
        else:
            pairs = " ".join(f"{i + 1}:{float(v)!r}" for i, v in enumerate(feats))
            lines.append(f"{label} {pairs}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
