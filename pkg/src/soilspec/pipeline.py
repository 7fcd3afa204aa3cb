"""Five-fold cross-validation of the three texture-characterization strategies.

Strategy 1 classifies USDA texture classes directly; strategy 2 regresses
(clay, silt, sand); strategy 3 pushes strategy-2 predictions through the
texture triangle. Per fold, the scaler, the discriminant projection, the
oversampler, and the learner are fitted on the training split only; the
held-out fold is transformed with the frozen parameters.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import N_CLASSES, ObservationTable, TextureClass
from .cubeio import fmt_float
from .errors import IoFailure, OffSimplex, SpecimenOverlap
from .features import MinMaxScaler, composition_group_labels
from .lda import LdaModel, fit_lda, project, scatter
from .ml import (
    ClassificationReport,
    KnnClassifier,
    KnnRegressor,
    RandomForestClassifier,
    RandomForestRegressor,
    RegressionReport,
    classification_metrics,
    regression_metrics,
    smote,
)
from .ml.trees import DecisionTreeClassifier, DecisionTreeRegressor
from .seeding import derive_seed
from .triangle import classify_percentages, normalize_predictions

N_FOLDS = 5
MODEL_NAMES = ("knn", "rf", "dt")
STRATEGY_IDS = (1, 2, 3)

# Sub-seed tags for per-fold derived randomness.
_SEED_SMOTE = 1
_SEED_MODEL = 2


def _strategy_seed_tag(strategy: int) -> int:
    # Strategies 2 and 3 share one regression fit, so they share a seed path.
    return 1 if strategy == 1 else 2


@dataclass(frozen=True)
class CvPlan:
    """Fold assignment: observation index -> fold id in 1..n_folds."""

    n_folds: int
    seed: int
    granularity: str  # "block" | "specimen"
    assignment: np.ndarray  # (n,) int

    def train_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def test_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)


def make_folds(
    table: ObservationTable,
    seed: int,
    granularity: str = "block",
    n_folds: int = N_FOLDS,
    stratify: bool = False,
) -> CvPlan:
    """Partition rows into mutually exclusive, jointly exhaustive folds.

    Block granularity assigns rows independently (fold sizes differ by at
    most one); specimen granularity keeps all 100 blocks of a specimen in
    one fold. Stratified block assignment deals each texture class
    round-robin across folds.
    """
    n = len(table)
    if n == 0:
        raise ValueError("cannot fold an empty table")
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, 0)))
    assignment = np.empty(n, dtype=np.int64)
    if granularity == "block":
        if stratify:
            position = 0
            for code in np.unique(table.texture_codes):
                members = np.flatnonzero(table.texture_codes == code)
                members = rng.permutation(members)
                folds = (np.arange(position, position + members.size) % n_folds) + 1
                assignment[members] = folds
                position += members.size
        else:
            order = rng.permutation(n)
            sizes = np.full(n_folds, n // n_folds, dtype=np.int64)
            sizes[: n % n_folds] += 1
            start = 0
            for fold, size in enumerate(sizes, start=1):
                assignment[order[start : start + size]] = fold
                start += size
    elif granularity == "specimen":
        ids, first_pos = np.unique(table.specimen_ids.astype(str), return_index=True)
        ids = ids[np.argsort(first_pos, kind="stable")]  # first-appearance order
        order = rng.permutation(ids.size)
        sizes = np.full(n_folds, ids.size // n_folds, dtype=np.int64)
        sizes[: ids.size % n_folds] += 1
        specimen_fold = {}
        start = 0
        for fold, size in enumerate(sizes, start=1):
            for pos in order[start : start + size]:
                specimen_fold[ids[pos]] = fold
            start += size
        assignment = np.array(
            [specimen_fold[str(s)] for s in table.specimen_ids], dtype=np.int64
        )
    else:
        raise ValueError(f"unknown granularity {granularity!r}")
    return CvPlan(
        n_folds=n_folds, seed=seed, granularity=granularity, assignment=assignment
    )


@dataclass(frozen=True)
class ModelSpec:
    """Learner choice plus the hyperparameters exposed on the CLI."""

    name: str  # "knn" | "rf" | "dt"
    k: int = 5
    n_trees: int = 20
    max_depth: int | None = None
    min_leaf: int = 1
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.name not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.name!r}; choose from {MODEL_NAMES}")


def _make_classifier(spec: ModelSpec, seed: int):
    if spec.name == "knn":
        return KnnClassifier(k=spec.k, n_jobs=spec.n_jobs)
    if spec.name == "rf":
        return RandomForestClassifier(
            n_trees=spec.n_trees,
            max_depth=spec.max_depth,
            min_leaf=spec.min_leaf,
            seed=seed,
            n_jobs=spec.n_jobs,
            n_classes=N_CLASSES,
        )
    return DecisionTreeClassifier(
        max_depth=spec.max_depth, min_leaf=spec.min_leaf, n_classes=N_CLASSES
    )


class _PerComponentRegressor:
    """Three independent single-output regressors, one per composition part."""

    def __init__(self, makers):
        self.models = [maker() for maker in makers]

    def fit(self, features, targets):
        for i, model in enumerate(self.models):
            model.fit(features, targets[:, i])
        return self

    def predict(self, features):
        return np.column_stack([model.predict(features) for model in self.models])

    def params_digest(self) -> str:
        h = hashlib.sha256()
        for model in self.models:
            h.update(model.params_digest().encode())
        return h.hexdigest()


def _make_regressor(spec: ModelSpec, seed: int):
    # Tree-based models estimate each fraction independently, so predicted
    # triples drift off the 100% simplex. KNN is fit once on all three
    # targets: neighbor choice ignores targets, so the joint fit predicts
    # exactly what three per-component fits would.
    if spec.name == "knn":
        return KnnRegressor(k=spec.k, n_jobs=spec.n_jobs)
    if spec.name == "rf":
        return _PerComponentRegressor(
            [
                lambda i=i: RandomForestRegressor(
                    n_trees=spec.n_trees,
                    max_depth=spec.max_depth,
                    min_leaf=spec.min_leaf,
                    seed=derive_seed(seed, i),
                    n_jobs=spec.n_jobs,
                )
                for i in range(3)
            ]
        )
    return _PerComponentRegressor(
        [
            lambda: DecisionTreeRegressor(
                max_depth=spec.max_depth, min_leaf=spec.min_leaf
            )
            for _ in range(3)
        ]
    )


def _digest(*arrays) -> str:
    h = hashlib.sha256()
    for arr in arrays:
        arr = np.ascontiguousarray(arr)
        h.update(str(arr.dtype).encode())
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()


@dataclass
class FoldArtifacts:
    """Everything fitted on one fold's training split."""

    strategy: int
    scaler: MinMaxScaler
    lda_model: LdaModel
    learner: object
    smote_features: np.ndarray | None = None
    smote_labels: np.ndarray | None = None

    def digests(self) -> dict[str, str]:
        out = {
            "scaler": _digest(self.scaler.min_, self.scaler.max_),
            "lda": _digest(
                self.lda_model.projection,
                self.lda_model.eigenvalues,
                np.array([self.lda_model.k_selected]),
                np.array([self.lda_model.ridge]),
            ),
            "learner": self.learner.params_digest(),
        }
        if self.smote_features is not None:
            out["smote"] = _digest(self.smote_features, self.smote_labels)
        return out


def fit_fold(
    table: ObservationTable,
    train_index: np.ndarray,
    strategy: int,
    spec: ModelSpec,
    seed: int,
    scaler: MinMaxScaler | None = None,
) -> FoldArtifacts:
    """Fit scaler, discriminant projection, and learner on one training split.

    Strategy 1 supervises the projection with texture classes and balances
    the projected training set with SMOTE before fitting the classifier;
    strategies 2 and 3 supervise with composition-group labels (one group
    per distinct mixture triple in the training split) and fit regressors
    on the raw fractions. A pre-fitted scaler may be passed for pool-scoped
    scaling; by default the scaler is fitted on the training split.
    """
    train = table.select(train_index)
    if scaler is None:
        scaler = MinMaxScaler().fit(train.features)
    scaled = scaler.transform(train.features)
    if strategy == 1:
        supervision = train.texture_codes
    else:
        supervision, _ = composition_group_labels(train.compositions)
    lda_model = fit_lda(scatter(scaled, supervision))
    projected = project(lda_model, scaled)
    smote_features = smote_labels = None
    if strategy == 1:
        smote_features, smote_labels = smote(
            projected,
            train.texture_codes,
            seed=derive_seed(seed, _SEED_SMOTE),
        )
        learner = _make_classifier(spec, derive_seed(seed, _SEED_MODEL))
        learner.fit(smote_features, smote_labels)
    else:
        learner = _make_regressor(spec, derive_seed(seed, _SEED_MODEL))
        learner.fit(projected, train.compositions)
    return FoldArtifacts(
        strategy=strategy,
        scaler=scaler,
        lda_model=lda_model,
        learner=learner,
        smote_features=smote_features,
        smote_labels=smote_labels,
    )


def _regression_report(test: ObservationTable, predicted: np.ndarray):
    return regression_metrics(test.compositions, predicted)


def _triangle_report(test: ObservationTable, predicted: np.ndarray):
    """Strategy 3: renormalize predicted triples, map through the triangle."""
    normalized = normalize_predictions(predicted)
    codes = classify_percentages(normalized[:, 0], normalized[:, 1], normalized[:, 2])
    if np.any(codes < 0):
        raise OffSimplex("renormalized prediction matched no triangle region")
    return classification_metrics(test.texture_codes, codes, N_CLASSES)


def evaluate_fold(
    artifacts: FoldArtifacts,
    table: ObservationTable,
    test_index: np.ndarray,
    as_strategy: int | None = None,
):
    """Apply frozen fold transforms to the held-out rows and score them.

    `as_strategy` re-scores regression artifacts under another strategy's
    metric (strategies 2 and 3 share the same fitted pipeline).
    """
    strategy = as_strategy if as_strategy is not None else artifacts.strategy
    test = table.select(test_index)
    projected = project(artifacts.lda_model, artifacts.scaler.transform(test.features))
    predicted = artifacts.learner.predict(projected)
    if strategy == 1:
        return classification_metrics(test.texture_codes, predicted, N_CLASSES)
    if strategy == 2:
        return _regression_report(test, predicted)
    return _triangle_report(test, predicted)


@dataclass
class StrategyResult:
    """Per-fold reports plus mean/std aggregates for one (strategy, model)."""

    strategy: int
    model: str
    fold_reports: list = field(default_factory=list)

    def fold_metrics(self) -> list[dict[str, float]]:
        out = []
        for report in self.fold_reports:
            if isinstance(report, ClassificationReport):
                out.append(
                    {
                        "accuracy": report.accuracy,
                        "macro_f1": report.macro_f1,
                        "macro_recall": report.macro_recall,
                    }
                )
            else:
                out.append(report.metric_dict())
        return out

    def aggregates(self) -> dict[str, tuple[float, float]]:
        """Mean and population std (over the fold count) of every metric."""
        per_fold = self.fold_metrics()
        out = {}
        for metric in per_fold[0]:
            values = np.array([fold[metric] for fold in per_fold])
            out[metric] = (float(values.mean()), float(values.std()))
        return out

    def pooled_confusion(self) -> np.ndarray | None:
        """Fold-summed confusion counts, row-normalized (classification only)."""
        if not isinstance(self.fold_reports[0], ClassificationReport):
            return None
        counts = sum(report.confusion for report in self.fold_reports)
        support = counts.sum(axis=1)
        normalized = np.zeros_like(counts, dtype=np.float64)
        rows = support > 0
        normalized[rows] = counts[rows] / support[rows, np.newaxis]
        return normalized


def run_strategies(
    table: ObservationTable,
    plan: CvPlan,
    strategies: list[int],
    spec: ModelSpec,
    scaler_scope: str = "fold",
) -> dict[int, StrategyResult]:
    """Run several strategies over the same folds with one model spec.

    Strategies 2 and 3 share the regression fit and its test-fold
    predictions per fold; strategy 3 only adds the triangle mapping. Fold
    seeds depend on (plan seed, strategy family, fold), so results are
    identical whether strategies run together or separately.
    """
    for strategy in strategies:
        if strategy not in STRATEGY_IDS:
            raise ValueError(f"unknown strategy {strategy}")
    if scaler_scope not in ("fold", "pool"):
        raise ValueError(f"scaler scope must be fold or pool, got {scaler_scope!r}")
    pool_scaler = (
        MinMaxScaler().fit(table.features) if scaler_scope == "pool" else None
    )
    results = {s: StrategyResult(strategy=s, model=spec.name) for s in strategies}
    regression = [s for s in strategies if s != 1]
    for fold in range(1, plan.n_folds + 1):
        train_index = plan.train_index(fold)
        test_index = plan.test_index(fold)
        if 1 in results:
            artifacts = fit_fold(
                table, train_index, 1, spec,
                seed=derive_seed(plan.seed, _strategy_seed_tag(1), fold),
                scaler=pool_scaler,
            )
            results[1].fold_reports.append(
                evaluate_fold(artifacts, table, test_index)
            )
        if regression:
            artifacts = fit_fold(
                table, train_index, 2, spec,
                seed=derive_seed(plan.seed, _strategy_seed_tag(2), fold),
                scaler=pool_scaler,
            )
            test = table.select(test_index)
            projected = project(
                artifacts.lda_model, artifacts.scaler.transform(test.features)
            )
            predicted = artifacts.learner.predict(projected)
            if 2 in results:
                results[2].fold_reports.append(_regression_report(test, predicted))
            if 3 in results:
                results[3].fold_reports.append(_triangle_report(test, predicted))
    return results


def run_strategy(
    table: ObservationTable,
    plan: CvPlan,
    strategy: int,
    spec: ModelSpec,
    scaler_scope: str = "fold",
) -> StrategyResult:
    """Run one strategy across all folds of the plan."""
    return run_strategies(table, plan, [strategy], spec, scaler_scope)[strategy]


def run_strategy1(table, plan, spec, scaler_scope="fold") -> StrategyResult:
    return run_strategy(table, plan, 1, spec, scaler_scope)


def run_strategy2(table, plan, spec, scaler_scope="fold") -> StrategyResult:
    return run_strategy(table, plan, 2, spec, scaler_scope)


def run_strategy3(table, plan, spec, scaler_scope="fold") -> StrategyResult:
    return run_strategy(table, plan, 3, spec, scaler_scope)


def run_external_validation(
    train_table: ObservationTable,
    validation_table: ObservationTable,
    spec: ModelSpec,
    seed: int = 0,
) -> RegressionReport:
    """Fit scaler + projection + regressor on the full training table, then
    score the frozen transforms on the external validation table."""
    train_ids = set(map(str, train_table.specimen_ids))
    validation_ids = set(map(str, validation_table.specimen_ids))
    shared = train_ids & validation_ids
    if shared:
        raise SpecimenOverlap(f"specimen ids in both tables: {sorted(shared)[:5]}")
    artifacts = fit_fold(
        train_table,
        np.arange(len(train_table)),
        strategy=2,
        spec=spec,
        seed=derive_seed(seed, 4),
    )
    return evaluate_fold(artifacts, validation_table, np.arange(len(validation_table)))


# -- result serialization ------------------------------------------------------

RESULTS_HEADER = ["strategy", "model", "fold", "metric", "value"]
AGGREGATE_HEADER = ["strategy", "model", "metric", "mean", "std"]


def write_results_csv(results: list[StrategyResult], path: str | Path) -> None:
    import csv

    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RESULTS_HEADER)
            for result in results:
                for fold, metrics in enumerate(result.fold_metrics(), start=1):
                    for metric, value in metrics.items():
                        writer.writerow(
                            [
                                str(result.strategy),
                                result.model,
                                str(fold),
                                metric,
                                fmt_float(value),
                            ]
                        )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_aggregate_csv(results: list[StrategyResult], path: str | Path) -> None:
    import csv

    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(AGGREGATE_HEADER)
            for result in results:
                for metric, (mean, std) in result.aggregates().items():
                    writer.writerow(
                        [
                            str(result.strategy),
                            result.model,
                            metric,
                            fmt_float(mean),
                            fmt_float(std),
                        ]
                    )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_confusion_csv(result: StrategyResult, path: str | Path) -> None:
    import csv

    normalized = result.pooled_confusion()
    if normalized is None:
        raise ValueError("confusion output only applies to classification results")
    names = [c.value for c in TextureClass]
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["class"] + names)
            for name, row in zip(names, normalized):
                writer.writerow([name] + [fmt_float(v) for v in row])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_external_csv(
    reports: dict[str, RegressionReport], path: str | Path
) -> None:
    import csv

    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model", "metric", "value"])
            for model in sorted(reports):
                for metric, value in reports[model].metric_dict().items():
                    writer.writerow([model, metric, fmt_float(value)])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
