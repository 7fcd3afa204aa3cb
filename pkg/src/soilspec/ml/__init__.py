"""From-scratch learners and evaluation metrics.

KNN, CART decision trees, bootstrap random forests, SMOTE oversampling, and
the classification/regression reports used by the cross-validation harness.
"""

from .knn import KnnClassifier, KnnRegressor
from .metrics import (
    ClassificationReport,
    RegressionReport,
    classification_metrics,
    regression_metrics,
)
from .smote import smote
from .trees import (
    DecisionTreeClassifier,
    DecisionTreeRegressor,
    RandomForestClassifier,
    RandomForestRegressor,
)

__all__ = [
    "KnnClassifier",
    "KnnRegressor",
    "DecisionTreeClassifier",
    "DecisionTreeRegressor",
    "RandomForestClassifier",
    "RandomForestRegressor",
    "smote",
    "ClassificationReport",
    "RegressionReport",
    "classification_metrics",
    "regression_metrics",
]
