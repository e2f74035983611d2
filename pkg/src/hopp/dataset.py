"""Loading, projecting, scaling, splitting, and binarizing the biopsy records.

The data file is the canonical comma-separated layout: an opaque id, a one-letter
diagnosis (M or B), then 30 decimal fields ordered as the ten per-nucleus
features' means, standard deviations, and worst (maximum) values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidViewError, WdbcParseError

#: The ten nuclear features, in data-file column order.
FEATURE_NAMES = (
    "radius",
    "texture",
    "perimeter",
    "area",
    "smoothness",
    "compactness",
    "concavity",
    "concave points",
    "symmetry",
    "fractal dimension",
)

STATISTICS = ("mean", "stddev", "worst")

#: All 30 column names, in data-file order.
COLUMNS = tuple(f"{stat} {name}" for stat in STATISTICS for name in FEATURE_NAMES)

MALIGNANT = "malignant"
BENIGN = "benign"

_DIAGNOSIS = {"M": MALIGNANT, "B": BENIGN}


@dataclass(frozen=True)
class BiopsyRecord:
    record_id: str
    diagnosis: str
    features: tuple  # 30 floats in COLUMNS order

    @property
    def is_malignant(self) -> bool:
        return self.diagnosis == MALIGNANT


def parse_wdbc(lines) -> list[BiopsyRecord]:
    """Parse the comma-separated data format; raises with the offending line number."""
    records = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.decode() if isinstance(raw, bytes) else raw
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 32:
            raise WdbcParseError(
                f"line {lineno}: expected 32 fields (id, diagnosis, 30 features), "
                f"got {len(fields)}",
                line_number=lineno,
            )
        diag = _DIAGNOSIS.get(fields[1])
        if diag is None:
            raise WdbcParseError(
                f"line {lineno}: unknown diagnosis code {fields[1]!r}", line_number=lineno
            )
        try:
            values = tuple(float(v) for v in fields[2:])
        except ValueError as exc:
            raise WdbcParseError(f"line {lineno}: {exc}", line_number=lineno) from exc
        if not all(np.isfinite(values)):
            raise WdbcParseError(f"line {lineno}: non-finite feature value", line_number=lineno)
        records.append(BiopsyRecord(fields[0], diag, values))
    return records


def load_wdbc(path) -> list[BiopsyRecord]:
    with open(path) as fh:
        return parse_wdbc(fh)


def serialize_wdbc(records) -> str:
    """Inverse of parse_wdbc, using repr floats so a round trip is exact."""
    letter = {MALIGNANT: "M", BENIGN: "B"}
    lines = []
    for rec in records:
        fields = [rec.record_id, letter[rec.diagnosis]]
        fields.extend(repr(v) for v in rec.features)
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FeatureView:
    """A named selection of data columns defining the model's input space."""

    name: str
    columns: tuple

    def __post_init__(self):
        if len(set(self.columns)) != len(self.columns):
            raise InvalidViewError(f"view {self.name!r} selects duplicate columns")
        for col in self.columns:
            if col not in COLUMNS:
                raise InvalidViewError(f"unknown column {col!r}")

    @property
    def K(self) -> int:
        return len(self.columns)

    @classmethod
    def all30(cls) -> "FeatureView":
        return cls("all30", COLUMNS)

    @classmethod
    def means(cls) -> "FeatureView":
        return cls("means", tuple(f"mean {n}" for n in FEATURE_NAMES))

    @classmethod
    def stddev(cls) -> "FeatureView":
        return cls("stddev", tuple(f"stddev {n}" for n in FEATURE_NAMES))

    @classmethod
    def worst(cls) -> "FeatureView":
        return cls("worst", tuple(f"worst {n}" for n in FEATURE_NAMES))

    @classmethod
    def named(cls, pairs, name="named") -> "FeatureView":
        """From (statistic, feature-name) pairs, e.g. ("worst", "area")."""
        cols = []
        for stat, feat in pairs:
            if stat not in STATISTICS:
                raise InvalidViewError(f"unknown statistic {stat!r}")
            cols.append(f"{stat} {feat}")
        return cls(name, tuple(cols))

    @classmethod
    def from_spec(cls, spec) -> "FeatureView":
        """From a configuration value: a preset name or a list of [stat, feature]."""
        if isinstance(spec, str):
            presets = {
                "all30": cls.all30,
                "means": cls.means,
                "stddev": cls.stddev,
                "worst": cls.worst,
            }
            if spec not in presets:
                raise InvalidViewError(f"unknown view preset {spec!r}")
            return presets[spec]()
        return cls.named([tuple(p) for p in spec])


def project(records, view: FeatureView):
    """Select the view's columns; returns (matrix, labels) with label 1 = malignant."""
    idx = [COLUMNS.index(c) for c in view.columns]
    matrix = np.array([[rec.features[i] for i in idx] for rec in records], dtype=float)
    labels = np.array([1 if rec.is_malignant else 0 for rec in records], dtype=int)
    return matrix, labels


@dataclass
class Scaler:
    """Per-column min-max map fitted on training data only."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, matrix) -> "Scaler":
        return cls(lo=matrix.min(axis=0), hi=matrix.max(axis=0))

    def transform(self, matrix) -> np.ndarray:
        span = self.hi - self.lo
        safe = np.where(span > 0, span, 1.0)
        out = (matrix - self.lo) / safe
        # constant training columns map to zero everywhere
        return np.where(span > 0, out, 0.0)


def fit_apply_scaler(train, test):
    """Fit min-max on the training matrix and apply to both; test is not clipped."""
    if train.shape[1] != test.shape[1]:
        raise InvalidInputError(
            f"column mismatch: train has {train.shape[1]}, test has {test.shape[1]}"
        )
    scaler = Scaler.fit(train)
    return scaler.transform(train), scaler.transform(test), scaler


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.9
    seed: int | None = None
    stratified: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidInputError(f"train_fraction must lie in (0,1), got {self.train_fraction}")


def split(n_or_labels, spec: SplitSpec, rng=None):
    """Random train/test index partition; deterministic for a given generator state.

    With ``spec.stratified`` the permutation-and-floor rule is applied within each
    label class separately; otherwise over all rows at once.
    """
    if rng is None:
        if spec.seed is None:
            raise InvalidInputError("split needs an rng or a seeded SplitSpec")
        rng = np.random.default_rng(spec.seed)
    labels = None
    if np.ndim(n_or_labels) > 0:
        labels = np.asarray(n_or_labels)
        n = len(labels)
    else:
        n = int(n_or_labels)
    if spec.stratified and labels is None:
        raise InvalidInputError("stratified split needs the label vector")

    def cut(indices):
        perm = indices[rng.permutation(len(indices))]
        k = int(np.floor(spec.train_fraction * len(indices)))
        return perm[:k], perm[k:]

    if spec.stratified:
        train_parts, test_parts = [], []
        for cls in np.unique(labels):
            tr, te = cut(np.flatnonzero(labels == cls))
            train_parts.append(tr)
            test_parts.append(te)
        train_idx = np.sort(np.concatenate(train_parts))
        test_idx = np.sort(np.concatenate(test_parts))
    else:
        train_idx, test_idx = cut(np.arange(n))
    if len(train_idx) == 0 or len(test_idx) == 0:
        raise InvalidInputError(
            f"degenerate split: {len(train_idx)} train / {len(test_idx)} test rows"
        )
    return train_idx, test_idx


# -- binarization -----------------------------------------------------------


def quantize(matrix, B: int) -> np.ndarray:
    """Quantization level per value: clip to [0,1], then floor(v * 2^B) capped at 2^B - 1."""
    if not 1 <= B <= 8:
        raise InvalidInputError(f"bit count B must lie in [1, 8], got {B}")
    clipped = np.clip(matrix, 0.0, 1.0)
    return np.minimum(np.floor(clipped * (1 << B)), (1 << B) - 1).astype(int)


def levels_to_bits(levels, B: int) -> np.ndarray:
    """Expand levels to B binary columns per input column, most-significant bit first."""
    levels = np.asarray(levels, dtype=int)
    rows, cols = levels.shape
    bits = np.zeros((rows, cols * B), dtype=float)
    for b in range(B):
        bits[:, b::B] = (levels >> (B - 1 - b)) & 1
    return bits


def bits_to_levels(bits, B: int) -> np.ndarray:
    """Inverse of levels_to_bits."""
    bits = np.asarray(bits, dtype=int)
    rows, wide = bits.shape
    levels = np.zeros((rows, wide // B), dtype=int)
    for b in range(B):
        levels = levels | (bits[:, b::B] << (B - 1 - b))
    return levels


def binarize(matrix, B: int) -> np.ndarray:
    """B-bit binary encoding of a matrix scaled to [0,1]; K columns become K*B."""
    return levels_to_bits(quantize(matrix, B), B)


def binarized_columns(columns, B: int) -> tuple:
    return tuple(f"{col} bit{b}" for col in columns for b in range(B))
