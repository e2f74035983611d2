"""Sparse two-layer perceptron whose stimulus expands in products of distinct inputs.

A term is identified by a ``TermKey``: a strictly increasing tuple of 1-based
input indices. The empty tuple is the bias term (a fictitious constant input
of 1). Weights are stored sparsely as a mapping ``(output, TermKey) -> float``;
anything absent from the mapping is zero and, during training, inactive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import (
    InvalidDimensionError,
    InvalidIndexError,
    InvalidInputError,
    NumericOverflowError,
)

TermKey = tuple[int, ...]

#: Canonical ordering of terms: bias first, then by order, lexicographic within.
def term_sort_key(key: TermKey):
    return (len(key), key)


def _check_dims(K: int, N: int) -> None:
    if K <= 0:
        raise InvalidDimensionError(f"input count K must be positive, got {K}")
    if N < 0 or N > K:
        raise InvalidDimensionError(f"max order N must satisfy 0 <= N <= K, got N={N}, K={K}")


def enumerate_terms(K: int, N: int) -> list[TermKey]:
    """All index subsets of {1..K} of size 0..N, bias first, then ascending order."""
    _check_dims(K, N)
    terms: list[TermKey] = [()]
    for n in range(1, N + 1):
        terms.extend(combinations(range(1, K + 1), n))
    return terms


def count_terms(K: int, N: int) -> int:
    """Number of terms of order 0..N, i.e. 1 + sum_{n=1..N} C(K, n)."""
    _check_dims(K, N)
    return 1 + sum(math.comb(K, n) for n in range(1, N + 1))


def term_at(K: int, N: int, rank: int) -> TermKey:
    """The term of the given rank in enumeration order, without materializing the list.

    Rank 0 is the bias; ranks then run through each order n in blocks of C(K, n),
    lexicographic within a block.
    """
    _check_dims(K, N)
    if rank < 0 or rank >= count_terms(K, N):
        raise InvalidIndexError(f"term rank {rank} out of range for K={K}, N={N}")
    if rank == 0:
        return ()
    r = rank - 1
    n = 1
    while True:
        block = math.comb(K, n)
        if r < block:
            break
        r -= block
        n += 1
    # unrank the r-th lexicographic n-combination of {1..K}
    out = []
    x = 1
    for remaining in range(n, 0, -1):
        while math.comb(K - x, remaining - 1) <= r:
            r -= math.comb(K - x, remaining - 1)
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def term_value(key: TermKey, x) -> float:
    """Product of the input components selected by the key; the bias key gives 1."""
    v = 1.0
    n = len(x)
    for i in key:
        if i < 1 or i > n:
            raise InvalidIndexError(f"term index {i} out of range for input of length {n}")
        v *= x[i - 1]
    return float(v)


@dataclass
class HoppNetwork:
    """Sparse network state: dimensions plus the active-weight mapping.

    Every output keeps its bias entry (possibly zero) so that the bias is always
    part of the active set. ``positive_output`` designates which output's
    probability is reported as the positive-class (malignancy) score.
    """

    K: int
    L: int
    N: int
    weights: dict = field(default_factory=dict)
    positive_output: int = 1

    def __post_init__(self):
        _check_dims(self.K, self.N)
        if self.L < 1:
            raise InvalidDimensionError(f"output count L must be >= 1, got {self.L}")
        if not 1 <= self.positive_output <= self.L:
            raise InvalidDimensionError(
                f"positive output {self.positive_output} not in [1, {self.L}]"
            )
        for (lam, key), w in self.weights.items():
            self._check_slot(lam, key)
        # biases are always present, and therefore always active
        for lam in range(1, self.L + 1):
            self.weights.setdefault((lam, ()), 0.0)

    def _check_slot(self, lam: int, key: TermKey) -> None:
        if not 1 <= lam <= self.L:
            raise InvalidDimensionError(f"output index {lam} not in [1, {self.L}]")
        if len(key) > self.N:
            raise InvalidDimensionError(f"term {key} exceeds max order N={self.N}")
        if any(b <= a for a, b in zip(key, key[1:])):
            raise InvalidIndexError(f"term {key} is not strictly increasing")
        if key and (key[0] < 1 or key[-1] > self.K):
            raise InvalidIndexError(f"term {key} out of range for K={self.K}")

    # -- evaluation ---------------------------------------------------------

    def stimulus(self, x) -> np.ndarray:
        """Un-normalized output of each processing unit for input x."""
        if len(x) != self.K:
            raise InvalidDimensionError(f"input length {len(x)} != K={self.K}")
        u = np.zeros(self.L)
        for (lam, key), w in self.weights.items():
            u[lam - 1] += w * term_value(key, x)
        return u

    def outputs(self, x) -> np.ndarray:
        """Soft-max probabilities over the L outputs, stabilized by max subtraction."""
        u = self.stimulus(x)
        if not np.all(np.isfinite(u)):
            raise NumericOverflowError(f"non-finite stimulus {u}")
        e = np.exp(u - u.max())
        return e / e.sum()

    def predict(self, x, threshold: float = 0.5) -> tuple[int, float]:
        """Binary decision against the positive-class probability.

        Returns ``(label, probability)`` with label 1 when the positive output's
        probability is at least the threshold, else 0.
        """
        if not 0.0 < threshold < 1.0:
            raise InvalidInputError(f"threshold must lie in (0,1), got {threshold}")
        p = float(self.outputs(x)[self.positive_output - 1])
        return (1 if p >= threshold else 0), p

    # -- bookkeeping --------------------------------------------------------

    def active_slots(self) -> list[tuple[int, TermKey]]:
        """Active (output, key) slots in deterministic order."""
        return sorted(self.weights, key=lambda s: (s[0], term_sort_key(s[1])))

    def active_keys(self) -> list[TermKey]:
        """Distinct keys active for any output, in canonical term order."""
        return sorted({key for _, key in self.weights}, key=term_sort_key)

    def copy(self) -> "HoppNetwork":
        return HoppNetwork(self.K, self.L, self.N, dict(self.weights), self.positive_output)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "L": self.L,
            "N": self.N,
            "positive_output": self.positive_output,
            "weights": [
                [lam, list(key), self.weights[(lam, key)]] for lam, key in self.active_slots()
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "HoppNetwork":
        weights = {(lam, tuple(key)): float(w) for lam, key, w in doc["weights"]}
        return cls(
            K=int(doc["K"]),
            L=int(doc["L"]),
            N=int(doc["N"]),
            weights=weights,
            positive_output=int(doc.get("positive_output", 1)),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "HoppNetwork":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))
