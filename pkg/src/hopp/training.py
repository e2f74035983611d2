"""Incremental gradient-descent training with momentum, random sparse
initialization, magnitude-based weight culling, and retraining.

The learning rule updates every active weight after each pattern presentation:

    delta_w = epsilon * (a - y) * dudw + mu * delta_w_previous

where ``dudw`` is the product of inputs selected by the weight's term key.
Inactive (unstored) weights are never touched. Epochs present the training set
in a freshly shuffled order each time, driven by the run's generator, so a run
is a pure function of (data, config, seed).

`train_epochs` runs on compact arrays (JIT-compiled when numba is available);
`update_step` is the direct sparse-mapping reference used by tests and
single-step callers. Both apply the identical arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DivergenceError, InvalidInputError, NumericOverflowError
from .model import HoppNetwork, count_terms, term_at, term_sort_key, term_value

CULL_MAGNITUDE = "magnitude"
CULL_NTH_ROOT = "nth-root-magnitude"


@dataclass(frozen=True)
class TrainingConfig:
    epsilon: float = 0.05
    mu: float = 0.5
    epochs_pre_cull: int = 500
    epochs_post_cull: int = 500
    init_active_weights: int = 500
    init_range: tuple = (-1.5, 1.5)
    w_max: int = 30
    cull_criterion: str = CULL_MAGNITUDE
    seed: int | None = None
    single_output: bool = False
    shared_keys: bool = False

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvalidInputError(f"learning rate must be positive, got {self.epsilon}")
        if self.epochs_pre_cull < 0 or self.epochs_post_cull < 0:
            raise InvalidInputError("epoch counts must be non-negative")
        if self.init_range[0] >= self.init_range[1]:
            raise InvalidInputError(f"bad init range {self.init_range}")
        if self.w_max < 1:
            raise InvalidInputError(f"weight budget must be >= 1, got {self.w_max}")
        if self.cull_criterion not in (CULL_MAGNITUDE, CULL_NTH_ROOT):
            raise InvalidInputError(f"unknown cull criterion {self.cull_criterion!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainingConfig":
        doc = dict(doc)
        if "init_range" in doc:
            doc["init_range"] = tuple(doc["init_range"])
        return cls(**doc)

    def with_overrides(self, **kwargs) -> "TrainingConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


@dataclass
class TrainingSet:
    inputs: np.ndarray  # (P, K)
    targets: np.ndarray  # (P, L) one-hot rows

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        if len(self.inputs) != len(self.targets):
            raise InvalidInputError(
                f"{len(self.inputs)} inputs vs {len(self.targets)} targets"
            )
        row_sums = self.targets.sum(axis=1)
        if len(self.targets) and not (
            np.all(row_sums == 1.0) and np.all((self.targets == 0) | (self.targets == 1))
        ):
            raise InvalidInputError("targets must be one-hot rows")

    @classmethod
    def from_labels(cls, matrix, labels, positive_output=1, L=2) -> "TrainingSet":
        """Binary labels (1 = positive class) to one-hot targets over L=2 outputs."""
        if L != 2:
            raise InvalidInputError("label-based construction supports L=2 only")
        labels = np.asarray(labels)
        targets = np.zeros((len(labels), L))
        pos = positive_output - 1
        targets[labels == 1, pos] = 1.0
        targets[labels != 1, 1 - pos] = 1.0
        return cls(np.asarray(matrix, dtype=float), targets)


@dataclass
class MomentumState:
    """Previous weight corrections, kept for exactly the trainable slots."""

    prev_delta: dict = field(default_factory=dict)

    @classmethod
    def zeros(cls, slots) -> "MomentumState":
        return cls({slot: 0.0 for slot in slots})


def _sample_without_replacement(total: int, count: int, rng) -> np.ndarray:
    if total <= 10_000_000:
        return rng.choice(total, size=count, replace=False)
    picked = set()
    out = []
    while len(out) < count:
        for v in rng.integers(0, total, size=count):
            if v not in picked:
                picked.add(v)
                out.append(v)
                if len(out) == count:
                    break
    return np.array(out)


def trainable_slots(net: HoppNetwork, config: TrainingConfig) -> list:
    """Active slots eligible for updates; single-output mode freezes the other biases."""
    slots = net.active_slots()
    if config.single_output:
        slots = [s for s in slots if s[0] == 1]
    return slots


def initialize(K, L, N, config: TrainingConfig, rng=None):
    """Random sparse network: biases always active, plus uniformly sampled slots.

    Samples min(config.init_active_weights, eligible) slots without replacement
    from outputs x terms of order 0..N, each drawn uniformly from init_range.
    In shared-key mode the sample is over term keys, activated for every output.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    total_terms = count_terms(K, N)
    lo, hi = config.init_range
    outputs = [1] if config.single_output else list(range(1, L + 1))

    drawn: list = []
    if config.shared_keys:
        n_sample = min(config.init_active_weights, total_terms)
        ranks = _sample_without_replacement(total_terms, n_sample, rng)
        for rank in ranks:
            key = term_at(K, N, int(rank))
            for lam in outputs:
                drawn.append(((lam, key), rng.uniform(lo, hi)))
    else:
        eligible = len(outputs) * total_terms
        n_sample = min(config.init_active_weights, eligible)
        slot_ids = _sample_without_replacement(eligible, n_sample, rng)
        for sid in slot_ids:
            lam = outputs[int(sid) // total_terms]
            key = term_at(K, N, int(sid) % total_terms)
            drawn.append(((lam, key), rng.uniform(lo, hi)))

    weights = {slot: w for slot, w in sorted(drawn, key=lambda t: (t[0][0], term_sort_key(t[0][1])))}
    for lam in outputs:
        weights.setdefault((lam, ()), 0.0)
    net = HoppNetwork(K=K, L=L, N=N, weights=weights)
    momentum = MomentumState.zeros(trainable_slots(net, config))
    return net, momentum


def update_step(net: HoppNetwork, momentum: MomentumState, x, target, config: TrainingConfig):
    """One pattern presentation applied to every trainable weight; returns the deltas."""
    try:
        y = net.outputs(x)
    except NumericOverflowError as exc:
        raise DivergenceError(
            f"stimulus overflowed during training (epsilon={config.epsilon})"
        ) from exc
    err = np.asarray(target, dtype=float) - y
    deltas = {}
    for (lam, key), prev in momentum.prev_delta.items():
        delta = config.epsilon * err[lam - 1] * term_value(key, x) + config.mu * prev
        if not np.isfinite(delta):
            raise DivergenceError(
                f"non-finite weight update at {(lam, key)} (epsilon={config.epsilon})"
            )
        net.weights[(lam, key)] += delta
        momentum.prev_delta[(lam, key)] = delta
        deltas[(lam, key)] = delta
    return deltas


# -- compact-array epoch engine ----------------------------------------------


def _epoch_loop_py(W, prev, mask, T, A, perms, eps, mu):
    maskf = mask.astype(float)
    for e in range(perms.shape[0]):
        for p in perms[e]:
            t = T[p]
            u = W @ t
            ey = np.exp(u - u.max())
            y = ey / ey.sum()
            delta = (eps * np.multiply.outer(A[p] - y, t) + mu * prev) * maskf
            W += delta
            prev[:] = delta


def _epoch_loop_loops(W, prev, mask, T, A, perms, eps, mu):
    L, M = W.shape
    u = np.empty(L)
    y = np.empty(L)
    for e in range(perms.shape[0]):
        for pi in range(perms.shape[1]):
            p = perms[e, pi]
            for l in range(L):
                s = 0.0
                for m in range(M):
                    s += W[l, m] * T[p, m]
                u[l] = s
            umax = u[0]
            for l in range(1, L):
                if u[l] > umax:
                    umax = u[l]
            tot = 0.0
            for l in range(L):
                y[l] = np.exp(u[l] - umax)
                tot += y[l]
            for l in range(L):
                y[l] /= tot
            for l in range(L):
                err = A[p, l] - y[l]
                for m in range(M):
                    if mask[l, m]:
                        d = eps * err * T[p, m] + mu * prev[l, m]
                        W[l, m] += d
                        prev[l, m] = d


try:
    from numba import njit

    _epoch_loop = njit(cache=True)(_epoch_loop_loops)
except ImportError:  # pragma: no cover - exercised only without numba
    _epoch_loop = _epoch_loop_py


class _ActiveArrays:
    """Dense view of the active slots for fast epoch loops."""

    def __init__(self, net: HoppNetwork, momentum: MomentumState, inputs: np.ndarray):
        self.keys = net.active_keys()
        self.col = {key: m for m, key in enumerate(self.keys)}
        L, M = net.L, len(self.keys)
        self.W = np.zeros((L, M))
        self.mask = np.zeros((L, M), dtype=bool)
        self.prev = np.zeros((L, M))
        for (lam, key), w in net.weights.items():
            self.W[lam - 1, self.col[key]] = w
        for (lam, key), d in momentum.prev_delta.items():
            self.mask[lam - 1, self.col[key]] = True
            self.prev[lam - 1, self.col[key]] = d
        P = len(inputs)
        self.T = np.empty((P, M))
        for key, m in self.col.items():
            if key:
                self.T[:, m] = np.prod(inputs[:, [i - 1 for i in key]], axis=1)
            else:
                self.T[:, m] = 1.0

    def write_back(self, net: HoppNetwork, momentum: MomentumState) -> None:
        for slot in net.weights:
            lam, key = slot
            net.weights[slot] = float(self.W[lam - 1, self.col[key]])
        for slot in momentum.prev_delta:
            lam, key = slot
            momentum.prev_delta[slot] = float(self.prev[lam - 1, self.col[key]])


def train_epochs(net, momentum, training_set, epochs, config, rng) -> HoppNetwork:
    """Shuffle-and-present for the given number of epochs; mutates net in place."""
    if epochs < 0:
        raise InvalidInputError(f"epoch count must be non-negative, got {epochs}")
    inputs = training_set.inputs
    if inputs.shape[1] != net.K:
        raise InvalidInputError(f"training inputs have {inputs.shape[1]} columns, net K={net.K}")
    if epochs == 0 or len(inputs) == 0:
        return net
    arrays = _ActiveArrays(net, momentum, inputs)
    P = len(inputs)
    perms = np.stack([rng.permutation(P) for _ in range(epochs)])
    _epoch_loop(
        arrays.W,
        arrays.prev,
        arrays.mask,
        arrays.T,
        training_set.targets,
        perms,
        config.epsilon,
        config.mu,
    )
    if not np.all(np.isfinite(arrays.W)):
        raise DivergenceError(f"weights diverged during training (epsilon={config.epsilon})")
    arrays.write_back(net, momentum)
    return net


def squared_error_cost(net: HoppNetwork, training_set: TrainingSet) -> float:
    """Mean over patterns of the summed squared output error (diagnostic only)."""
    total = 0.0
    for x, a in zip(training_set.inputs, training_set.targets):
        y = net.outputs(x)
        total += float(np.sum((y - a) ** 2))
    return total / max(len(training_set.inputs), 1)


def cull_score(key, w, criterion) -> float:
    if criterion == CULL_NTH_ROOT:
        return abs(w) ** (1.0 / len(key))
    return abs(w)


def cull(net: HoppNetwork, w_max: int, criterion: str = CULL_MAGNITUDE) -> HoppNetwork:
    """Keep the w_max highest-priority non-bias weights; biases always survive.

    Priority is the absolute magnitude, or its order-th root under the
    nth-root criterion. Ties fall back to canonical term order.
    """
    if w_max < 1:
        raise InvalidInputError(f"weight budget must be >= 1, got {w_max}")
    if criterion not in (CULL_MAGNITUDE, CULL_NTH_ROOT):
        raise InvalidInputError(f"unknown cull criterion {criterion!r}")
    candidates = [(slot, w) for slot, w in net.weights.items() if slot[1]]
    ranked = sorted(
        candidates,
        key=lambda item: (-cull_score(item[0][1], item[1], criterion),
                          term_sort_key(item[0][1]), item[0][0]),
    )
    kept = {slot for slot, _ in ranked[:w_max]}
    weights = {
        slot: w
        for slot, w in sorted(net.weights.items(), key=lambda t: (t[0][0], term_sort_key(t[0][1])))
        if slot in kept or not slot[1]
    }
    return HoppNetwork(net.K, net.L, net.N, weights, net.positive_output)


def train_protocol(training_set, K, L, N, config: TrainingConfig, rng=None, cost_log=None):
    """Initialize, train, cull to the weight budget, and retrain.

    Returns ``(net, surviving_keys)`` where the keys are the non-bias factors
    (merged over outputs) that survived the cull. When ``cost_log`` is a list,
    (phase, epoch, mean squared-error cost) rows are appended after each epoch.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    net, momentum = initialize(K, L, N, config, rng)

    def run_phase(phase, epochs):
        nonlocal net
        if cost_log is None:
            net = train_epochs(net, momentum, training_set, epochs, config, rng)
        else:
            for epoch in range(epochs):
                net = train_epochs(net, momentum, training_set, 1, config, rng)
                cost_log.append((phase, epoch, squared_error_cost(net, training_set)))

    run_phase("pre-cull", config.epochs_pre_cull)
    net = cull(net, config.w_max, config.cull_criterion)
    momentum = MomentumState.zeros(trainable_slots(net, config))
    run_phase("post-cull", config.epochs_post_cull)
    surviving = sorted({key for _, key in net.weights if key}, key=term_sort_key)
    return net, surviving
