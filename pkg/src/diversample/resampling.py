"""Re-sampling strategies for imbalanced binary training sets.

Plain strategies: random over-sampling (ROS), random under-sampling (RUS),
SMOTE, and the two hybrids OSUS (ROS + RUS) and SMOTEUS (SMOTE + RUS).
Each has a diversity-based variant: instead of keeping whatever instances
chance produces, candidates are over-generated (or the removal order is
chosen) so that the survivors maximize Solow-Polasky diversity greedily.

All strategies are pure functions of (train, plan): identical inputs give
identical outputs regardless of thread scheduling.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator

from ._validation import (
    as_binary_labels,
    as_float_matrix,
    derive_seed,
    rng_from,
    round_half_up,
)
from .data import Dataset, Standardizer
from .diversity import greedy_select
from .exceptions import (
    MajorityTooSmallError,
    NoMinorityError,
    RatioInfeasibleError,
    TooFewMinorityForKError,
)

METHODS = ("ROS", "RUS", "SMOTE", "OSUS", "SMOTEUS")

ORIGINAL_MINORITY = "original-minority"
ORIGINAL_MAJORITY = "original-majority"
DUPLICATED = "duplicated"
SYNTHETIC = "synthetic"


@dataclass(frozen=True)
class ResamplePlan:
    """Everything needed to reproduce one re-sampling run.

    target_balance is the minority:majority count ratio to reach (1.0
    balances the classes). hybrid_size_ratio applies to OSUS/SMOTEUS only:
    the re-sampled set holds round(ratio * N_train) rows, split half and
    half. surplus_factor controls how many candidates diversity-based
    over-sampling generates per instance finally kept.
    """

    method: str = "ROS"
    diversity: bool = False
    target_balance: float = 1.0
    hybrid_size_ratio: float = 0.5
    smote_k: int = 5
    surplus_factor: float = 2.0
    theta: float = 1.0
    ridge: float = 1e-9
    seed: int = 0
    standardize: bool = True
    pool_includes_originals: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.smote_k < 1:
            raise ValueError(f"smote_k must be >= 1, got {self.smote_k}")
        if self.surplus_factor < 1.0:
            raise ValueError(f"surplus_factor must be >= 1, got {self.surplus_factor}")
        if not 0.0 < self.hybrid_size_ratio <= 1.0:
            raise ValueError(
                f"hybrid_size_ratio must be in (0, 1], got {self.hybrid_size_ratio}"
            )
        if self.target_balance <= 0.0:
            raise ValueError(
                f"target_balance must be > 0, got {self.target_balance}"
            )


@dataclass(frozen=True)
class ResampleOutcome:
    """Re-sampled dataset plus a per-row provenance tag and the plan used."""

    dataset: Dataset
    provenance: tuple
    plan_echo: ResamplePlan


def _scaled_space(train, plan):
    """Feature matrix used for distance computations (z-scored by default)."""
    if plan.standardize:
        return Standardizer().fit(train.features).transform(train.features)
    return np.array(train.features, dtype=np.float64)


def _assemble(train, keep_mask, extra_rows, extra_tags):
    """Surviving original rows (original order) plus appended generated rows."""
    kept = np.flatnonzero(keep_mask)
    tags = [
        ORIGINAL_MINORITY if train.labels[i] == 1 else ORIGINAL_MAJORITY
        for i in kept
    ]
    features = train.features[kept]
    labels = train.labels[kept]
    if len(extra_rows):
        features = np.vstack([features, extra_rows])
        labels = np.concatenate([labels, np.ones(len(extra_rows), dtype=np.int64)])
        tags += list(extra_tags)
    dataset = Dataset(
        features=features,
        labels=labels,
        feature_names=train.feature_names,
        source_name=train.source_name,
        label_name=train.label_name,
    )
    return dataset, tuple(tags)


def _minority_majority(train):
    minority = np.flatnonzero(train.labels == 1)
    majority = np.flatnonzero(train.labels == 0)
    return minority, majority


def smote_generate(train, n_synthetic, k=5, seed=0, standardize=True):
    """Synthetic minority rows by segment interpolation between neighbors.

    Each row is p + u * (q - p): p a uniformly chosen minority row, q a
    uniformly chosen member of p's k nearest minority neighbors (Euclidean
    on the standardized features, distance ties broken by lower row index),
    u drawn once per row from U(0, 1). Interpolation happens in the
    original feature space; standardization only steers neighbor choice.
    """
    minority, _ = _minority_majority(train)
    m = len(minority)
    if m < k + 1:
        raise TooFewMinorityForKError(
            f"SMOTE with k={k} needs at least {k + 1} minority rows, have {m}"
        )
    d = train.n_features
    if n_synthetic == 0:
        return np.empty((0, d))

    points = train.features[minority]
    if standardize:
        space = Standardizer().fit(train.features).transform(points)
    else:
        space = points
    dist = cdist(space, space)
    np.fill_diagonal(dist, np.inf)
    neighbors = np.argsort(dist, axis=1, kind="stable")[:, :k]

    rng = rng_from(seed)
    out = np.empty((n_synthetic, d))
    for t in range(n_synthetic):
        p = int(rng.integers(m))
        q = int(neighbors[p, rng.integers(k)])
        u = rng.random()
        out[t] = points[p] + u * (points[q] - points[p])
    return out


def _duplicate_candidates(train, count, seed):
    """`count` uniform with-replacement copies of minority rows."""
    minority, _ = _minority_majority(train)
    if len(minority) == 0:
        raise NoMinorityError("over-sampling needs at least one minority row")
    rng = rng_from(seed)
    picks = rng.integers(len(minority), size=count)
    return train.features[minority[picks]]


def _generate_candidates(train, count, base, plan, seed):
    if base == "SMOTE":
        rows = smote_generate(
            train, count, k=plan.smote_k, seed=seed, standardize=plan.standardize
        )
        return rows, SYNTHETIC
    return _duplicate_candidates(train, count, seed), DUPLICATED


def _oversample_goal(train, plan):
    """How many minority rows must be added to reach target_balance."""
    minority, majority = _minority_majority(train)
    if len(minority) == 0:
        raise NoMinorityError("over-sampling needs at least one minority row")
    target = round_half_up(plan.target_balance * len(majority))
    return max(0, target - len(minority))


def random_oversample(train, plan):
    """ROS: duplicate uniformly chosen minority rows until target_balance."""
    g = _oversample_goal(train, plan)
    rows = _duplicate_candidates(train, g, plan.seed) if g else np.empty((0, train.n_features))
    keep = np.ones(len(train), dtype=bool)
    dataset, tags = _assemble(train, keep, rows, [DUPLICATED] * g)
    return ResampleOutcome(dataset, tags, plan)


def smote_oversample(train, plan):
    """SMOTE: add interpolated synthetic minority rows until target_balance."""
    minority, _ = _minority_majority(train)
    if len(minority) == 0:
        raise NoMinorityError("over-sampling needs at least one minority row")
    g = _oversample_goal(train, plan)
    rows = smote_generate(
        train, g, k=plan.smote_k, seed=plan.seed, standardize=plan.standardize
    )
    keep = np.ones(len(train), dtype=bool)
    dataset, tags = _assemble(train, keep, rows, [SYNTHETIC] * g)
    return ResampleOutcome(dataset, tags, plan)


def _undersample_majority_indices(train, target, diversity, plan, seed):
    minority, majority = _minority_majority(train)
    if len(majority) < target:
        raise MajorityTooSmallError(
            f"cannot keep {target} of {len(majority)} majority rows"
        )
    if len(majority) == target:
        return majority
    if diversity:
        space = _scaled_space(train, plan)[majority]
        kept_local = greedy_select(
            space, target, theta=plan.theta, ridge=plan.ridge, seed=seed
        ).kept_indices
        return majority[kept_local]
    rng = rng_from(seed)
    return np.sort(rng.choice(majority, size=target, replace=False))


def random_undersample(train, plan):
    """RUS: drop uniformly chosen majority rows down to target_balance."""
    minority, majority = _minority_majority(train)
    if len(minority) == 0:
        raise NoMinorityError("under-sampling needs at least one minority row")
    target = round_half_up(len(minority) / plan.target_balance)
    kept = _undersample_majority_indices(train, target, False, plan, plan.seed)
    keep = np.zeros(len(train), dtype=bool)
    keep[minority] = True
    keep[kept] = True
    dataset, tags = _assemble(train, keep, np.empty((0, train.n_features)), [])
    return ResampleOutcome(dataset, tags, plan)


def diversity_undersample(train, plan):
    """D-RUS: greedy diversity selection decides which majority rows stay."""
    minority, majority = _minority_majority(train)
    if len(minority) == 0:
        raise NoMinorityError("under-sampling needs at least one minority row")
    target = round_half_up(len(minority) / plan.target_balance)
    kept = _undersample_majority_indices(train, target, True, plan, plan.seed)
    keep = np.zeros(len(train), dtype=bool)
    keep[minority] = True
    keep[kept] = True
    dataset, tags = _assemble(train, keep, np.empty((0, train.n_features)), [])
    return ResampleOutcome(dataset, tags, plan)


def diversity_oversample(train, plan, base=None):
    """D-ROS / D-SMOTE: over-generate candidates, keep the most diverse.

    With g rows needed, ceil(surplus_factor * g) candidates are generated
    by the base method under the plan's seed, then greedy selection keeps
    exactly g. Original minority rows are never discarded unless
    pool_includes_originals is set, in which case they compete with the
    candidates and the selection keeps (minority count + g) rows total.
    """
    if base is None:
        base = "SMOTE" if plan.method == "SMOTE" else "ROS"
    minority, _ = _minority_majority(train)
    g = _oversample_goal(train, plan)
    if base == "SMOTE" and len(minority) < plan.smote_k + 1:
        raise TooFewMinorityForKError(
            f"SMOTE with k={plan.smote_k} needs at least {plan.smote_k + 1} "
            f"minority rows, have {len(minority)}"
        )
    if g == 0:
        keep = np.ones(len(train), dtype=bool)
        dataset, tags = _assemble(train, keep, np.empty((0, train.n_features)), [])
        return ResampleOutcome(dataset, tags, plan)

    pool_size = math.ceil(plan.surplus_factor * g)
    candidates, tag = _generate_candidates(train, pool_size, base, plan, plan.seed)
    select_seed = derive_seed(plan.seed, "select")

    scaler = Standardizer().fit(train.features) if plan.standardize else None
    scale = scaler.transform if scaler is not None else (lambda rows: rows)

    if plan.pool_includes_originals:
        originals = train.features[minority]
        pool = np.vstack([originals, candidates])
        keep_count = len(minority) + g
        result = greedy_select(
            scale(pool), keep_count, theta=plan.theta, ridge=plan.ridge, seed=select_seed
        )
        kept = result.kept_indices
        keep = np.zeros(len(train), dtype=bool)
        keep[np.flatnonzero(train.labels == 0)] = True
        keep[minority[kept[kept < len(minority)]]] = True
        extra = candidates[kept[kept >= len(minority)] - len(minority)]
    else:
        result = greedy_select(
            scale(candidates), g, theta=plan.theta, ridge=plan.ridge, seed=select_seed
        )
        keep = np.ones(len(train), dtype=bool)
        extra = candidates[result.kept_indices]

    dataset, tags = _assemble(train, keep, extra, [tag] * len(extra))
    return ResampleOutcome(dataset, tags, plan)


def _minority_stage(train, target, base, plan, seed):
    """Hybrid minority half: over-sample up to target, or thin down to it.

    Returns (keep_mask over original rows, extra rows, extra tags).
    """
    minority, majority = _minority_majority(train)
    keep = np.zeros(len(train), dtype=bool)
    d = train.n_features
    if target >= len(minority):
        keep[minority] = True
        g = target - len(minority)
        if g == 0:
            return keep, np.empty((0, d)), []
        if plan.diversity:
            pool_size = math.ceil(plan.surplus_factor * g)
            candidates, tag = _generate_candidates(train, pool_size, base, plan, seed)
            space = candidates
            if plan.standardize:
                space = Standardizer().fit(train.features).transform(candidates)
            kept = greedy_select(
                space,
                g,
                theta=plan.theta,
                ridge=plan.ridge,
                seed=derive_seed(seed, "select"),
            ).kept_indices
            return keep, candidates[kept], [tag] * g
        rows, tag = _generate_candidates(train, g, base, plan, seed)
        return keep, rows, [tag] * g

    # target below the current count: thin the minority instead
    if plan.diversity:
        space = _scaled_space(train, plan)[minority]
        kept_local = greedy_select(
            space, target, theta=plan.theta, ridge=plan.ridge, seed=seed
        ).kept_indices
        keep[minority[kept_local]] = True
    else:
        rng = rng_from(seed)
        keep[rng.choice(minority, size=target, replace=False)] = True
    return keep, np.empty((0, d)), []


def hybrid_resample(train, plan, base=None):
    """OSUS / SMOTEUS: shrink the set to round(ratio * N), balanced halves.

    Total T = round(hybrid_size_ratio * N_train); the minority half gets
    ceil(T/2) rows (the scarce class takes the odd seat) and the majority
    floor(T/2). The majority is always under-sampled; the minority is
    over-sampled with the base generator, or thinned if it already exceeds
    its half. With plan.diversity set, both directions use greedy
    diversity selection. The two stages draw from decoupled seed streams.
    """
    if base is None:
        base = "SMOTE" if plan.method == "SMOTEUS" else "ROS"
    n = len(train)
    r = plan.hybrid_size_ratio
    if r * n < 4:
        raise RatioInfeasibleError(
            f"ratio {r} of {n} training rows leaves fewer than 4 instances"
        )
    total = round_half_up(r * n)
    minority_target = (total + 1) // 2
    majority_target = total // 2

    minority, majority = _minority_majority(train)
    if len(minority) == 0:
        raise NoMinorityError("hybrid re-sampling needs at least one minority row")
    if len(majority) < majority_target:
        raise RatioInfeasibleError(
            f"majority half needs {majority_target} rows, have {len(majority)}"
        )

    kept_majority = _undersample_majority_indices(
        train, majority_target, plan.diversity, plan, derive_seed(plan.seed, "under")
    )
    keep, extra, tags = _minority_stage(
        train, minority_target, base, plan, derive_seed(plan.seed, "over")
    )
    keep[kept_majority] = True
    dataset, all_tags = _assemble(train, keep, extra, tags)
    return ResampleOutcome(dataset, all_tags, plan)


def apply_plan(train, plan):
    """Dispatch a ResamplePlan to the matching strategy."""
    if plan.method == "ROS":
        return diversity_oversample(train, plan, "ROS") if plan.diversity else random_oversample(train, plan)
    if plan.method == "RUS":
        return diversity_undersample(train, plan) if plan.diversity else random_undersample(train, plan)
    if plan.method == "SMOTE":
        return diversity_oversample(train, plan, "SMOTE") if plan.diversity else smote_oversample(train, plan)
    if plan.method == "OSUS":
        return hybrid_resample(train, plan, "ROS")
    return hybrid_resample(train, plan, "SMOTE")


class _PlanEstimator(BaseEstimator):
    """Shared fit_resample plumbing for the re-sampler estimators."""

    def _plan(self):
        raise NotImplementedError

    def fit_resample(self, X, y):
        X = as_float_matrix(X, "X")
        y = as_binary_labels(y, "y")
        train = Dataset(
            features=X,
            labels=y,
            feature_names=tuple(f"x{i}" for i in range(X.shape[1])),
        )
        outcome = apply_plan(train, self._plan())
        self.outcome_ = outcome
        self.sample_provenance_ = outcome.provenance
        return outcome.dataset.features, outcome.dataset.labels


class RandomOverSampler(_PlanEstimator):
    """Duplicate minority rows until the classes reach `target_balance`."""

    def __init__(self, target_balance=1.0, random_state=0):
        self.target_balance = target_balance
        self.random_state = random_state

    def _plan(self):
        return ResamplePlan(
            method="ROS",
            target_balance=self.target_balance,
            seed=self.random_state,
        )


class RandomUnderSampler(_PlanEstimator):
    """Drop majority rows uniformly until the classes reach `target_balance`."""

    def __init__(self, target_balance=1.0, random_state=0):
        self.target_balance = target_balance
        self.random_state = random_state

    def _plan(self):
        return ResamplePlan(
            method="RUS",
            target_balance=self.target_balance,
            seed=self.random_state,
        )


class SmoteOverSampler(_PlanEstimator):
    """Add SMOTE-interpolated minority rows until `target_balance`."""

    def __init__(self, target_balance=1.0, k=5, standardize=True, random_state=0):
        self.target_balance = target_balance
        self.k = k
        self.standardize = standardize
        self.random_state = random_state

    def _plan(self):
        return ResamplePlan(
            method="SMOTE",
            target_balance=self.target_balance,
            smote_k=self.k,
            standardize=self.standardize,
            seed=self.random_state,
        )


class DiversityOverSampler(_PlanEstimator):
    """D-ROS / D-SMOTE: over-generate candidates, keep the most diverse."""

    def __init__(
        self,
        base="ros",
        target_balance=1.0,
        k=5,
        surplus_factor=2.0,
        theta=1.0,
        ridge=1e-9,
        standardize=True,
        include_originals=False,
        random_state=0,
    ):
        self.base = base
        self.target_balance = target_balance
        self.k = k
        self.surplus_factor = surplus_factor
        self.theta = theta
        self.ridge = ridge
        self.standardize = standardize
        self.include_originals = include_originals
        self.random_state = random_state

    def _plan(self):
        return ResamplePlan(
            method=self.base.upper(),
            diversity=True,
            target_balance=self.target_balance,
            smote_k=self.k,
            surplus_factor=self.surplus_factor,
            theta=self.theta,
            ridge=self.ridge,
            standardize=self.standardize,
            pool_includes_originals=self.include_originals,
            seed=self.random_state,
        )


class DiversityUnderSampler(_PlanEstimator):
    """D-RUS: greedy diversity selection picks the surviving majority rows."""

    def __init__(
        self, target_balance=1.0, theta=1.0, ridge=1e-9, standardize=True, random_state=0
    ):
        self.target_balance = target_balance
        self.theta = theta
        self.ridge = ridge
        self.standardize = standardize
        self.random_state = random_state

    def _plan(self):
        return ResamplePlan(
            method="RUS",
            diversity=True,
            target_balance=self.target_balance,
            theta=self.theta,
            ridge=self.ridge,
            standardize=self.standardize,
            seed=self.random_state,
        )


class HybridResampler(_PlanEstimator):
    """OSUS / SMOTEUS: balanced set of round(size_ratio * N) rows."""

    def __init__(
        self,
        base="ros",
        size_ratio=0.5,
        diversity=False,
        k=5,
        surplus_factor=2.0,
        theta=1.0,
        ridge=1e-9,
        standardize=True,
        random_state=0,
    ):
        self.base = base
        self.size_ratio = size_ratio
        self.diversity = diversity
        self.k = k
        self.surplus_factor = surplus_factor
        self.theta = theta
        self.ridge = ridge
        self.standardize = standardize
        self.random_state = random_state

    def _plan(self):
        method = "SMOTEUS" if self.base.lower() == "smote" else "OSUS"
        return ResamplePlan(
            method=method,
            diversity=self.diversity,
            hybrid_size_ratio=self.size_ratio,
            smote_k=self.k,
            surplus_factor=self.surplus_factor,
            theta=self.theta,
            ridge=self.ridge,
            standardize=self.standardize,
            seed=self.random_state,
        )
