"""Exact embedding of Bayes' rule into a full-order network over binary inputs.

Given class priors and strictly positive class-conditional tables over all 2^K
bit patterns, the log-joint ln[p(x|class) * P(class)] has a unique multilinear
representation on {0,1}^K. Its coefficients, obtained by the subset
inclusion-exclusion (Moebius) transform, are exactly the network weights that
make the soft-max outputs reproduce the posterior at every pattern. Truncating
the weight orders recovers the usual approximation ladder, with order 1 the
Naive Bayes classifier.

Pattern indexing convention: bit i of the table index is the value of input
x_{i+1}, i.e. x_1 is the least significant bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, LogDomainError
from .model import HoppNetwork

_TOL = 1e-9


def pattern_index(x) -> int:
    """Table index of a bit pattern (x_1 least significant)."""
    idx = 0
    for i, bit in enumerate(x):
        if bit not in (0, 1):
            raise InvalidInputError(f"binary pattern expected, got component {bit!r}")
        idx |= int(bit) << i
    return idx


def index_pattern(idx: int, K: int) -> tuple:
    return tuple((idx >> i) & 1 for i in range(K))


def mask_key(mask: int) -> tuple:
    """Strictly increasing 1-based indices of the set bits."""
    return tuple(i + 1 for i in range(mask.bit_length()) if (mask >> i) & 1)


@dataclass
class ClassConditionalTable:
    """Priors P(class) and per-class probability tables over all 2^K patterns."""

    K: int
    priors: np.ndarray
    tables: np.ndarray  # (L, 2^K)

    def __post_init__(self):
        self.priors = np.asarray(self.priors, dtype=float)
        self.tables = np.asarray(self.tables, dtype=float)
        L = len(self.priors)
        if self.tables.shape != (L, 1 << self.K):
            raise InvalidInputError(
                f"tables shape {self.tables.shape} != ({L}, {1 << self.K})"
            )
        if np.any(self.priors < 0) or abs(self.priors.sum() - 1.0) > _TOL:
            raise InvalidInputError("priors must be non-negative and sum to 1")
        if np.any(self.tables < 0):
            raise InvalidInputError("class-conditional probabilities must be non-negative")
        if np.any(np.abs(self.tables.sum(axis=1) - 1.0) > _TOL):
            raise InvalidInputError("each class table must sum to 1")

    @property
    def L(self) -> int:
        return len(self.priors)

    @classmethod
    def random(cls, K: int, L: int = 2, rng=None, concentration: float = 1.0):
        """Strictly positive random table (Dirichlet rows, uniform-ish priors)."""
        rng = np.random.default_rng() if rng is None else rng
        priors = rng.dirichlet(np.full(L, 5.0))
        tables = rng.dirichlet(np.full(1 << K, concentration), size=L)
        tables = np.maximum(tables, 1e-12)
        tables /= tables.sum(axis=1, keepdims=True)
        return cls(K, priors, tables)

    @classmethod
    def product_form(cls, K: int, marginals, priors):
        """Independent-input table from per-class P(x_i = 1) marginals."""
        marginals = np.asarray(marginals, dtype=float)  # (L, K)
        L = marginals.shape[0]
        tables = np.empty((L, 1 << K))
        for idx in range(1 << K):
            bits = np.array(index_pattern(idx, K))
            tables[:, idx] = np.prod(
                np.where(bits == 1, marginals, 1.0 - marginals), axis=1
            )
        return cls(K, np.asarray(priors, dtype=float), tables)

    def laplace_smoothed(self, alpha: float = 1e-6) -> "ClassConditionalTable":
        """Mix each class table with the uniform distribution to clear zeros."""
        size = self.tables.shape[1]
        tables = (self.tables + alpha / size) / (1.0 + alpha)
        return ClassConditionalTable(self.K, self.priors.copy(), tables)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "bit_order": "x1_lsb",
            "priors": self.priors.tolist(),
            "tables": self.tables.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ClassConditionalTable":
        if doc.get("bit_order", "x1_lsb") != "x1_lsb":
            raise InvalidInputError(f"unsupported bit order {doc.get('bit_order')!r}")
        return cls(int(doc["K"]), np.array(doc["priors"]), np.array(doc["tables"]))

    @classmethod
    def load(cls, path) -> "ClassConditionalTable":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)


def exact_posterior(table: ClassConditionalTable, x) -> np.ndarray:
    """Posterior class probabilities for a bit pattern, by direct Bayes inversion."""
    idx = pattern_index(x)
    joint = table.tables[:, idx] * table.priors
    evidence = joint.sum()
    if evidence <= 0:
        raise InvalidInputError(f"pattern {tuple(x)} has zero evidence")
    return joint / evidence


def mobius_transform(values: np.ndarray) -> np.ndarray:
    """Subset inclusion-exclusion: out[S] = sum_{T subset of S} (-1)^|S\\T| in[T]."""
    out = np.array(values, dtype=float)
    K = out.size.bit_length() - 1
    if out.size != 1 << K:
        raise InvalidInputError(f"length {out.size} is not a power of two")
    for i in range(K):
        bit = 1 << i
        for mask in range(out.size):
            if mask & bit:
                out[mask] -= out[mask ^ bit]
    return out


def zeta_transform(values: np.ndarray) -> np.ndarray:
    """Subset sum (inverse of mobius_transform): out[S] = sum_{T subset of S} in[T]."""
    out = np.array(values, dtype=float)
    K = out.size.bit_length() - 1
    if out.size != 1 << K:
        raise InvalidInputError(f"length {out.size} is not a power of two")
    for i in range(K):
        bit = 1 << i
        for mask in range(out.size):
            if mask & bit:
                out[mask] += out[mask ^ bit]
    return out


def embed(table: ClassConditionalTable, smooth: bool = False) -> HoppNetwork:
    """Full-order network whose outputs equal the exact posterior on every pattern.

    Requires strictly positive tables (log domain); with ``smooth`` a light
    Laplace-style mix-in is applied first instead of rejecting zeros.
    """
    if smooth:
        table = table.laplace_smoothed()
    if np.any(table.tables <= 0) or np.any(table.priors <= 0):
        raise LogDomainError("embedding requires strictly positive priors and tables")
    K = table.K
    weights = {}
    for lam in range(1, table.L + 1):
        log_joint = np.log(table.tables[lam - 1]) + np.log(table.priors[lam - 1])
        coeffs = mobius_transform(log_joint)
        for mask in range(1 << K):
            weights[(lam, mask_key(mask))] = float(coeffs[mask])
    return HoppNetwork(K=K, L=table.L, N=K, weights=weights)


def truncate_embedding(net: HoppNetwork, max_order: int) -> HoppNetwork:
    """Drop all weights of order above max_order."""
    if max_order > net.K:
        raise InvalidInputError(f"max order {max_order} exceeds K={net.K}")
    weights = {slot: w for slot, w in net.weights.items() if len(slot[1]) <= max_order}
    return HoppNetwork(net.K, net.L, max(max_order, 0), weights, net.positive_output)


def max_posterior_deviation(table: ClassConditionalTable, net: HoppNetwork, patterns=None) -> float:
    """Largest |network posterior - Bayes posterior| over the given (or all) patterns."""
    if patterns is None:
        patterns = [index_pattern(idx, table.K) for idx in range(1 << table.K)]
    worst = 0.0
    for x in patterns:
        dev = np.abs(net.outputs(np.array(x, dtype=float)) - exact_posterior(table, x)).max()
        worst = max(worst, float(dev))
    return worst


def equivalence_check(n_tables: int = 50, max_k: int = 4, rng=None) -> float:
    """Random-table embedding audit; returns the max deviation seen (should be ~1e-12)."""
    rng = np.random.default_rng(0) if rng is None else rng
    worst = 0.0
    for _ in range(n_tables):
        K = int(rng.integers(1, max_k + 1))
        table = ClassConditionalTable.random(K, L=int(rng.integers(2, 4)), rng=rng)
        net = embed(table)
        worst = max(worst, max_posterior_deviation(table, net))
    return worst
