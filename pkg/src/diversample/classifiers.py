"""Four score-producing classifiers: logistic GLM, KNN, CART, random forest.

Every model exposes fit(X, y) and predict_score(X) -> P(label = 1) per row,
always finite and inside [0, 1], so PR curves downstream never collapse.
They are deliberately small, transparent implementations: leaf scores,
tie-breaking, and split rules are all pinned and unit-tested rather than
inherited from a library's defaults.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit
from sklearn.base import BaseEstimator

from ._validation import as_binary_labels, as_float_matrix, rng_from
from .data import Standardizer
from .exceptions import (
    DimensionMismatchError,
    KTooLargeError,
    SingleClassTrainingSetError,
)

KINDS = ("GLM", "KNN", "DT", "RF")


@dataclass(frozen=True)
class ModelSpec:
    """Classifier choice plus every hyperparameter, with pinned defaults."""

    kind: str = "GLM"
    max_iterations: int = 100
    tolerance: float = 1e-8
    l2_ridge: float = 1e-6
    k: int = 5
    max_depth: int = 10
    min_leaf: int = 5
    trees: int = 100
    features_per_split: int = None  # None means ceil(sqrt(d))
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("max_iterations", "k", "max_depth", "min_leaf", "trees"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.tolerance <= 0 or self.l2_ridge < 0:
            raise ValueError("tolerance must be > 0 and l2_ridge >= 0")


# -- logistic GLM -----------------------------------------------------------------


class LogisticModel(BaseEstimator):
    """L2-penalized logistic regression fit by Newton iterations.

    The ridge keeps the Hessian positive definite and the optimum finite
    even on linearly separable (e.g. freshly balanced) training sets. The
    penalty applies to the intercept as well; at 1e-6 the shrinkage is
    far below the coefficient scale anywhere near criterion tolerances.
    """

    def __init__(self, max_iterations=100, tolerance=1e-8, l2_ridge=1e-6):
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.l2_ridge = l2_ridge

    def fit(self, X, y):
        X = as_float_matrix(X, "X")
        y = as_binary_labels(y, "y")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y row counts differ")
        if len(np.unique(y)) < 2:
            raise SingleClassTrainingSetError(
                "logistic fit needs both classes in the training set"
            )
        Z = np.hstack([np.ones((X.shape[0], 1)), X])
        beta = np.zeros(Z.shape[1])
        lam = self.l2_ridge
        eye = np.eye(Z.shape[1])
        self.converged_ = False
        self.n_iter_ = 0
        for it in range(self.max_iterations):
            p = expit(Z @ beta)
            w = p * (1.0 - p)
            grad = Z.T @ (y - p) - lam * beta
            hess = (Z.T * w) @ Z + lam * eye
            step = np.linalg.solve(hess, grad)
            beta += step
            self.n_iter_ = it + 1
            if np.max(np.abs(step)) <= self.tolerance:
                self.converged_ = True
                break
        self.coef_ = beta
        self.n_features_ = X.shape[1]
        return self

    def predict_score(self, X):
        X = as_float_matrix(X, "X")
        if X.shape[1] != self.n_features_:
            raise DimensionMismatchError(
                f"model fit on {self.n_features_} features, got {X.shape[1]}"
            )
        return expit(self.coef_[0] + X @ self.coef_[1:])

    def penalized_loglik(self, X, y):
        """Objective being maximized; exposed for gradient checks."""
        X = as_float_matrix(X, "X")
        y = np.asarray(y, dtype=np.float64)
        eta = self.coef_[0] + X @ self.coef_[1:]
        # log-likelihood written flat in eta to stay finite for large |eta|
        ll = np.sum(y * eta - np.logaddexp(0.0, eta))
        return ll - 0.5 * self.l2_ridge * float(self.coef_ @ self.coef_)


def glm_export(model, feature_names):
    """Ordered name->value coefficient map, intercept under "(Intercept)"."""
    names = list(feature_names)
    if len(names) != model.n_features_:
        raise DimensionMismatchError(
            f"{len(names)} names for {model.n_features_} coefficients"
        )
    out = {"(Intercept)": float(model.coef_[0])}
    for name, value in zip(names, model.coef_[1:]):
        out[name] = float(value)
    return out


def glm_import(mapping, feature_names):
    """Rebuild a scoring-ready LogisticModel from an exported map."""
    names = list(feature_names)
    missing = [n for n in ["(Intercept)"] + names if n not in mapping]
    if missing:
        raise DimensionMismatchError(f"coefficient map missing {missing}")
    model = LogisticModel()
    model.coef_ = np.array(
        [float(mapping["(Intercept)"])] + [float(mapping[n]) for n in names]
    )
    model.n_features_ = len(names)
    model.converged_ = True
    model.n_iter_ = 0
    return model


# -- k-nearest neighbors ------------------------------------------------------------


class KnnClassifier(BaseEstimator):
    """Score = fraction of positives among the k nearest training rows.

    Distances are Euclidean on z-scored features (scaler fit on the
    training set); distance ties are broken toward the lower training row
    index, so scoring is fully deterministic.
    """

    def __init__(self, k=5, standardize=True):
        self.k = k
        self.standardize = standardize

    def fit(self, X, y):
        X = as_float_matrix(X, "X")
        y = as_binary_labels(y, "y")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y row counts differ")
        if self.k > X.shape[0]:
            raise KTooLargeError(
                f"k={self.k} exceeds the {X.shape[0]} training rows"
            )
        self.scaler_ = Standardizer().fit(X) if self.standardize else None
        self.train_X_ = self.scaler_.transform(X) if self.scaler_ else X
        self.train_y_ = y
        self.n_features_ = X.shape[1]
        return self

    def predict_score(self, X):
        X = as_float_matrix(X, "X")
        if X.shape[1] != self.n_features_:
            raise DimensionMismatchError(
                f"model fit on {self.n_features_} features, got {X.shape[1]}"
            )
        Q = self.scaler_.transform(X) if self.scaler_ else X
        dist = cdist(Q, self.train_X_)
        nearest = np.argsort(dist, axis=1, kind="stable")[:, : self.k]
        return self.train_y_[nearest].mean(axis=1)


# -- CART decision tree ----------------------------------------------------------------


class _Leaf:
    __slots__ = ("score",)

    def __init__(self, positives, count):
        self.score = (positives + 1.0) / (count + 2.0)  # Laplace smoothing


class _Split:
    __slots__ = ("feature", "threshold", "left", "right")

    def __init__(self, feature, threshold, left, right):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right


def _gini(positives, counts):
    """Gini impurity 1 - p^2 - (1-p)^2, vectorized, 0 when count is 0."""
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(counts > 0, positives / counts, 0.0)
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _best_split(X, y, feature_ids, min_leaf):
    """Best (gini decrease, feature, threshold) over candidate midpoints.

    Candidates are midpoints of consecutive distinct sorted values; a
    candidate is valid only when both children hold at least min_leaf
    rows. Returns None when no valid candidate improves impurity.
    """
    n = len(y)
    parent = _gini(float(y.sum()), float(n))
    best = None
    for f in feature_ids:
        order = np.argsort(X[:, f], kind="stable")
        v = X[order, f]
        pos = np.cumsum(y[order])
        # split after position i puts rows 0..i left
        i = np.arange(n - 1)
        valid = (v[i] < v[i + 1]) & (i + 1 >= min_leaf) & (n - i - 1 >= min_leaf)
        if not np.any(valid):
            continue
        i = i[valid]
        n_l = (i + 1).astype(float)
        n_r = n - n_l
        pos_l = pos[i].astype(float)
        pos_r = float(y.sum()) - pos_l
        decrease = parent - (n_l / n) * _gini(pos_l, n_l) - (n_r / n) * _gini(pos_r, n_r)
        j = int(np.argmax(decrease))
        if decrease[j] > 1e-15 and (best is None or decrease[j] > best[0]):
            threshold = 0.5 * (v[i[j]] + v[i[j] + 1])
            best = (float(decrease[j]), f, threshold)
    return best


def _grow(X, y, depth, max_depth, min_leaf, rng, m_features):
    positives = int(y.sum())
    n = len(y)
    if depth >= max_depth or positives == 0 or positives == n or n < 2 * min_leaf:
        return _Leaf(positives, n)
    d = X.shape[1]
    if rng is not None and m_features < d:
        feature_ids = np.sort(rng.choice(d, size=m_features, replace=False))
    else:
        feature_ids = range(d)
    best = _best_split(X, y, feature_ids, min_leaf)
    if best is None:
        return _Leaf(positives, n)
    _, f, t = best
    mask = X[:, f] <= t
    left = _grow(X[mask], y[mask], depth + 1, max_depth, min_leaf, rng, m_features)
    right = _grow(X[~mask], y[~mask], depth + 1, max_depth, min_leaf, rng, m_features)
    return _Split(f, t, left, right)


def _tree_scores(node, X, out, idx):
    if isinstance(node, _Leaf):
        out[idx] = node.score
        return
    mask = X[idx, node.feature] <= node.threshold
    _tree_scores(node.left, X, out, idx[mask])
    _tree_scores(node.right, X, out, idx[~mask])


def _tree_depth(node):
    if isinstance(node, _Leaf):
        return 0
    return 1 + max(_tree_depth(node.left), _tree_depth(node.right))


class CartClassifier(BaseEstimator):
    """CART with Gini splits and Laplace-smoothed leaf scores.

    Split thresholds are midpoints of consecutive distinct sorted values;
    both children of every split hold at least min_leaf rows; a node stops
    growing when pure, at max_depth, or when no impurity-reducing split
    exists. Leaf score = (positives + 1) / (rows + 2).
    """

    def __init__(self, max_depth=10, min_leaf=5):
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    def fit(self, X, y):
        X = as_float_matrix(X, "X")
        y = as_binary_labels(y, "y")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y row counts differ")
        self.root_ = _grow(X, y, 0, self.max_depth, self.min_leaf, None, X.shape[1])
        self.n_features_ = X.shape[1]
        return self

    def predict_score(self, X):
        X = as_float_matrix(X, "X")
        if X.shape[1] != self.n_features_:
            raise DimensionMismatchError(
                f"model fit on {self.n_features_} features, got {X.shape[1]}"
            )
        out = np.empty(X.shape[0])
        _tree_scores(self.root_, X, out, np.arange(X.shape[0]))
        return out

    @property
    def depth_(self):
        return _tree_depth(self.root_)


# -- random forest -------------------------------------------------------------------


class ForestClassifier(BaseEstimator):
    """Bagged CART trees with per-split random feature subsets.

    Each tree gets a bootstrap resample (when enabled) and an independent
    random stream derived from (seed, tree index), so the forest is
    identical no matter how or whether tree fitting is parallelized.
    Score = mean of the trees' leaf scores.
    """

    def __init__(
        self,
        trees=100,
        max_depth=10,
        min_leaf=5,
        features_per_split=None,
        bootstrap=True,
        random_state=0,
    ):
        self.trees = trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.features_per_split = features_per_split
        self.bootstrap = bootstrap
        self.random_state = random_state

    def fit(self, X, y):
        X = as_float_matrix(X, "X")
        y = as_binary_labels(y, "y")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y row counts differ")
        n, d = X.shape
        m = self.features_per_split or math.ceil(math.sqrt(d))
        m = min(m, d)
        self.roots_ = []
        for t in range(self.trees):
            rng = rng_from(self.random_state, "tree", t)
            if self.bootstrap:
                rows = rng.integers(n, size=n)
                Xt, yt = X[rows], y[rows]
            else:
                Xt, yt = X, y
            self.roots_.append(
                _grow(Xt, yt, 0, self.max_depth, self.min_leaf, rng, m)
            )
        self.n_features_ = d
        return self

    def predict_score(self, X):
        X = as_float_matrix(X, "X")
        if X.shape[1] != self.n_features_:
            raise DimensionMismatchError(
                f"model fit on {self.n_features_} features, got {X.shape[1]}"
            )
        total = np.zeros(X.shape[0])
        idx = np.arange(X.shape[0])
        buf = np.empty(X.shape[0])
        for root in self.roots_:
            _tree_scores(root, X, buf, idx)
            total += buf
        return total / len(self.roots_)


# -- spec plumbing ---------------------------------------------------------------------


def make_classifier(spec):
    """Estimator instance matching a ModelSpec."""
    if spec.kind == "GLM":
        return LogisticModel(
            max_iterations=spec.max_iterations,
            tolerance=spec.tolerance,
            l2_ridge=spec.l2_ridge,
        )
    if spec.kind == "KNN":
        return KnnClassifier(k=spec.k)
    if spec.kind == "DT":
        return CartClassifier(max_depth=spec.max_depth, min_leaf=spec.min_leaf)
    return ForestClassifier(
        trees=spec.trees,
        max_depth=spec.max_depth,
        min_leaf=spec.min_leaf,
        features_per_split=spec.features_per_split,
        bootstrap=spec.bootstrap,
        random_state=spec.seed,
    )


def fit_model(train, spec):
    """Fit the classifier a ModelSpec describes on a Dataset."""
    return make_classifier(spec).fit(train.features, train.labels)


def fit_glm(train, spec=None):
    return fit_model(train, spec or ModelSpec(kind="GLM"))


def fit_knn(train, spec=None):
    return fit_model(train, spec or ModelSpec(kind="KNN"))


def fit_tree(train, spec=None):
    return fit_model(train, spec or ModelSpec(kind="DT"))


def fit_forest(train, spec=None):
    return fit_model(train, spec or ModelSpec(kind="RF"))


def predict_scores(model, data):
    """One score in [0, 1] per row of `data` (Dataset or plain matrix)."""
    X = data.features if hasattr(data, "features") else data
    return model.predict_score(X)
