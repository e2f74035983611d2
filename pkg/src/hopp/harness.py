"""Ensemble cross-validation experiments: repeated split/train/evaluate runs,
metric aggregation, factor appearance counts, histograms, and report emission.

Every member's random stream derives solely from (master seed, member index),
so reports are byte-identical across reruns and independent of scheduling.
A report directory contains summary.json, members.csv, survivors.csv,
appearance.csv, prob_hist.csv, feature_hist/*.csv, and the best network.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import FeatureView, SplitSpec, binarize, fit_apply_scaler, project, split
from .errors import DivergenceError, InvalidInputError
from .metrics import MEASURE_NAMES, MetricSummary, confusion, measures, summarize
from .model import HoppNetwork, term_sort_key
from .training import TrainingConfig, TrainingSet, train_protocol


@dataclass(frozen=True)
class ProcedureSpec:
    """One experiment: a feature view, model shape, weight budgets, and protocol."""

    name: str
    view: FeatureView
    N: int
    w_grid: tuple
    ensemble_size: int = 30
    B: int | None = None
    threshold: float = 0.5
    split: SplitSpec = field(default_factory=SplitSpec)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    checks: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise InvalidInputError("ensemble_size must be >= 1")
        if not self.w_grid or any(w < 1 for w in self.w_grid):
            raise InvalidInputError(f"bad weight budgets {self.w_grid}")
        if not 0.0 < self.threshold < 1.0:
            raise InvalidInputError(f"threshold must lie in (0,1), got {self.threshold}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ProcedureSpec":
        split_doc = doc.get("split", {})
        return cls(
            name=doc["name"],
            view=FeatureView.from_spec(doc["view"]),
            N=int(doc["N"]),
            w_grid=tuple(int(w) for w in doc["w_grid"]),
            ensemble_size=int(doc.get("ensemble_size", 30)),
            B=None if doc.get("B") is None else int(doc["B"]),
            threshold=float(doc.get("threshold", 0.5)),
            split=SplitSpec(
                train_fraction=float(split_doc.get("train_fraction", 0.9)),
                stratified=bool(split_doc.get("stratified", False)),
            ),
            training=TrainingConfig.from_dict(doc.get("training", {})),
            checks=dict(doc.get("checks", {})),
        )

    @classmethod
    def from_file(cls, path) -> "ProcedureSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        view_spec = self.view.name if self.view.name in (
            "all30", "means", "worst", "stddev") else [c.split(" ", 1) for c in self.view.columns]
        doc = {
            "name": self.name,
            "view": view_spec,
            "N": self.N,
            "w_grid": list(self.w_grid),
            "ensemble_size": self.ensemble_size,
            "B": self.B,
            "threshold": self.threshold,
            "split": {
                "train_fraction": self.split.train_fraction,
                "stratified": self.split.stratified,
            },
            "training": {
                "epsilon": self.training.epsilon,
                "mu": self.training.mu,
                "epochs_pre_cull": self.training.epochs_pre_cull,
                "epochs_post_cull": self.training.epochs_post_cull,
                "init_active_weights": self.training.init_active_weights,
                "init_range": list(self.training.init_range),
                "cull_criterion": self.training.cull_criterion,
                "single_output": self.training.single_output,
                "shared_keys": self.training.shared_keys,
            },
            "checks": self.checks,
        }
        return doc


@dataclass
class MemberRun:
    member: int
    w: int
    train: object  # Measures
    test: object  # Measures
    surviving: list  # TermKeys


@dataclass
class EnsembleReport:
    spec: ProcedureSpec
    master_seed: int
    members: list  # MemberRun rows, ordered (member, w)
    failures: list  # (member, w, reason)
    per_w: dict  # w -> {"train": MetricSummary, "test": MetricSummary}
    appearance: dict  # w -> list of (TermKey, count)
    best: tuple  # (w, member)
    best_network: HoppNetwork
    prob_hist: np.ndarray  # counts over [0,1], last bin closed
    prob_bins: int
    feature_hists: dict  # column -> (weights, edges)

    def factor_name(self, key) -> str:
        cols = self.input_columns()
        return "*".join(cols[i - 1] for i in key)

    def input_columns(self):
        from .dataset import binarized_columns

        cols = self.spec.view.columns
        return binarized_columns(cols, self.spec.B) if self.spec.B else cols

    def check_violations(self) -> list:
        """Evaluate the spec's acceptance thresholds against every W group."""
        out = []
        for w, groups in self.per_w.items():
            test = groups["test"]
            checks = self.spec.checks
            if "min_test_acc" in checks and (
                test.acc.mean is None or test.acc.mean < checks["min_test_acc"]
            ):
                out.append(f"W={w}: test ACC {test.acc.mean} < {checks['min_test_acc']}")
            if "min_test_mcc" in checks and (
                test.mcc.mean is None or test.mcc.mean < checks["min_test_mcc"]
            ):
                out.append(f"W={w}: test MCC {test.mcc.mean} < {checks['min_test_mcc']}")
            if "max_test_acc_std" in checks and (
                test.acc.std is None or test.acc.std > checks["max_test_acc_std"]
            ):
                out.append(f"W={w}: test ACC std {test.acc.std} > {checks['max_test_acc_std']}")
        return out


def _member_streams(master_seed: int, member: int, n_w: int):
    children = np.random.SeedSequence(master_seed, spawn_key=(member,)).spawn(n_w + 1)
    return children[0], children[1:]


def _prepare_member(records_matrix, labels, spec: ProcedureSpec, split_rng):
    """Split, scale on the training part, and optionally binarize."""
    source = labels if spec.split.stratified else len(labels)
    tr_idx, te_idx = split(source, spec.split, split_rng)
    train_raw, test_raw = records_matrix[tr_idx], records_matrix[te_idx]
    train_m, test_m, scaler = fit_apply_scaler(train_raw, test_raw)
    if spec.B:
        train_m, test_m = binarize(train_m, spec.B), binarize(test_m, spec.B)
    return tr_idx, te_idx, train_m, test_m, scaler


def _evaluate(net: HoppNetwork, matrix, labels, threshold: float):
    preds = [net.predict(x, threshold)[0] for x in matrix]
    return measures(confusion(preds, labels))


def run_procedure(
    records, spec: ProcedureSpec, master_seed: int, prob_bins: int = 10, progress=None
) -> EnsembleReport:
    """Train and evaluate the full ensemble described by the procedure spec."""
    matrix, labels = project(records, spec.view)
    members: list = []
    failures: list = []
    nets: dict = {}
    scalers: dict = {}

    for m in range(spec.ensemble_size):
        split_seed, w_seeds = _member_streams(master_seed, m, len(spec.w_grid))
        tr_idx, te_idx, train_m, test_m, scaler = _prepare_member(
            matrix, labels, spec, np.random.default_rng(split_seed)
        )
        scalers[m] = scaler
        data = TrainingSet.from_labels(train_m, labels[tr_idx])
        K_in = train_m.shape[1]
        for wi, w in enumerate(spec.w_grid):
            config = spec.training.with_overrides(w_max=w)
            rng = np.random.default_rng(w_seeds[wi])
            try:
                net, surviving = train_protocol(data, K_in, 2, spec.N, config, rng)
            except DivergenceError as exc:
                failures.append((m, w, str(exc)))
                continue
            nets[(m, w)] = net
            members.append(
                MemberRun(
                    member=m,
                    w=w,
                    train=_evaluate(net, train_m, labels[tr_idx], spec.threshold),
                    test=_evaluate(net, test_m, labels[te_idx], spec.threshold),
                    surviving=surviving,
                )
            )
        if progress:
            progress(m + 1, spec.ensemble_size)

    if not members:
        raise InvalidInputError("every ensemble member failed")

    per_w = {}
    for w in spec.w_grid:
        rows = [r for r in members if r.w == w]
        if rows:
            per_w[w] = {
                "train": summarize([r.train for r in rows]),
                "test": summarize([r.test for r in rows]),
            }

    appearance = {
        w: appearance_counts([r.surviving for r in members if r.w == w])
        for w in spec.w_grid
    }

    best_row = max(
        members,
        key=lambda r: (
            -1.0 if r.test.acc is None else r.test.acc,
            -1.0 if r.test.mcc is None else r.test.mcc,
            -r.w,
            -r.member,
        ),
    )
    best = (best_row.w, best_row.member)
    best_network = nets[(best_row.member, best_row.w)]

    full_scaled = scalers[best_row.member].transform(matrix)
    if spec.B:
        full_scaled = binarize(full_scaled, spec.B)
    prob_hist = probability_histogram(best_network, full_scaled, prob_bins)

    return EnsembleReport(
        spec=spec,
        master_seed=master_seed,
        members=members,
        failures=failures,
        per_w=per_w,
        appearance=appearance,
        best=best,
        best_network=best_network,
        prob_hist=prob_hist,
        prob_bins=prob_bins,
        feature_hists=feature_histograms(records, spec.view, prob_bins),
    )


def appearance_counts(survivor_lists) -> list:
    """Factor -> number of members whose culled network retains it (any output)."""
    counts: dict = {}
    for keys in survivor_lists:
        for key in set(keys):
            counts[key] = counts.get(key, 0) + 1
    return sorted(counts.items(), key=lambda item: (-item[1], term_sort_key(item[0])))


def probability_histogram(net: HoppNetwork, matrix, n_bins: int = 10) -> np.ndarray:
    """Histogram of positive-class probabilities; half-open bins, last closed."""
    if n_bins < 2:
        raise InvalidInputError(f"need at least 2 bins, got {n_bins}")
    counts = np.zeros(n_bins, dtype=int)
    for x in matrix:
        _, p = net.predict(x)
        counts[min(int(p * n_bins), n_bins - 1)] += 1
    return counts


def feature_histograms(records, view: FeatureView, n_bins: int = 10) -> dict:
    """Per-column normalized histograms (plot-ready approximate densities)."""
    if n_bins < 2:
        raise InvalidInputError(f"need at least 2 bins, got {n_bins}")
    matrix, _ = project(records, view)
    out = {}
    for j, col in enumerate(view.columns):
        values = matrix[:, j]
        lo, hi = float(values.min()), float(values.max())
        if hi <= lo:
            edges = np.linspace(lo, lo + 1.0, n_bins + 1)
            weights = np.zeros(n_bins)
            weights[0] = 1.0
        else:
            counts, edges = np.histogram(values, bins=n_bins, range=(lo, hi))
            weights = counts / counts.sum()
        out[col] = (weights, edges)
    return out


# -- report files -------------------------------------------------------------


def _measures_row(m):
    return ["" if getattr(m, name) is None else repr(getattr(m, name)) for name in MEASURE_NAMES]


def _summary_block(s: MetricSummary) -> dict:
    return s.as_dict()


def write_report(report: EnsembleReport, out_dir, training_log=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    summary = {
        "procedure": report.spec.to_dict(),
        "master_seed": report.master_seed,
        "n_members": report.spec.ensemble_size,
        "n_failures": len(report.failures),
        "failures": [[m, w, reason] for m, w, reason in report.failures],
        "best": {"w": report.best[0], "member": report.best[1]},
        "per_w": {
            str(w): {
                "train": _summary_block(groups["train"]),
                "test": _summary_block(groups["test"]),
            }
            for w, groups in report.per_w.items()
        },
        "prob_hist": {
            "bins": report.prob_bins,
            "counts": report.prob_hist.tolist(),
        },
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    with open(out / "members.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["member", "w", "subset", *(n.upper() for n in MEASURE_NAMES)])
        for row in report.members:
            writer.writerow([row.member, row.w, "train", *_measures_row(row.train)])
            writer.writerow([row.member, row.w, "test", *_measures_row(row.test)])

    with open(out / "survivors.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["member", "w", "factor"])
        for row in report.members:
            for key in row.surviving:
                writer.writerow([row.member, row.w, "+".join(map(str, key))])

    write_appearance_csv(
        out / "appearance.csv", report.appearance, report.factor_name
    )

    with open(out / "prob_hist.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low", "bin_high", "count"])
        n = report.prob_bins
        for i, count in enumerate(report.prob_hist):
            writer.writerow([repr(i / n), repr((i + 1) / n), int(count)])

    hist_dir = out / "feature_hist"
    hist_dir.mkdir(exist_ok=True)
    for col, (weights, edges) in report.feature_hists.items():
        fname = col.replace(" ", "_") + ".csv"
        with open(hist_dir / fname, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_low", "bin_high", "weight"])
            for i, weight in enumerate(weights):
                writer.writerow([repr(float(edges[i])), repr(float(edges[i + 1])), repr(float(weight))])

    report.best_network.save(out / "best_network.json")

    if training_log is not None:
        with open(out / "training_log.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["member", "w", "phase", "epoch", "cost"])
            for row in training_log:
                writer.writerow(list(row))

    return out


def write_appearance_csv(path, appearance: dict, factor_name) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["w", "factor", "name", "count"])
        for w in sorted(appearance):
            for key, count in appearance[w]:
                writer.writerow([w, "+".join(map(str, key)), factor_name(key), count])


def reaggregate_appearance(report_dirs) -> dict:
    """Recompute appearance counts from saved survivors.csv files."""
    survivors: dict = {}
    for d in report_dirs:
        with open(Path(d) / "survivors.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                w = int(row["w"])
                member_key = (str(d), int(row["member"]))
                key = tuple(int(i) for i in row["factor"].split("+"))
                survivors.setdefault(w, {}).setdefault(member_key, []).append(key)
    return {
        w: appearance_counts(list(by_member.values()))
        for w, by_member in survivors.items()
    }
