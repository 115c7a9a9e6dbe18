"""PR metrics, the Wilcoxon signed-rank test, and the experiment runner.

PR-AUC is the step-wise average-precision sum over distinct score
thresholds; no linear interpolation is done between PR points. The
Wilcoxon p-value is exact (full sign-assignment distribution) up to 20
effective pairs, then a tie-corrected normal approximation with a 0.5
continuity correction. The experiment runner derives one seed per
(dataset, level, method, classifier, repetition) cell, deliberately
excluding the diversity flag so each diversity variant sees the same
splits as its baseline and the signed-rank pairing is meaningful.
"""

import csv
import io
import itertools
import math
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.stats import rankdata

from ._validation import as_binary_labels, check_equal_length, derive_seed
from .classifiers import ModelSpec, fit_model, predict_scores
from .data import (
    apply_imbalance_level,
    generate_synthetic,
    load_csv,
    standardize,
    stratified_split,
)
from .exceptions import (
    AllZeroDifferencesError,
    DiversampleError,
    ExperimentCellError,
    NoPositivesError,
)
from .resampling import METHODS, ResamplePlan, apply_plan

WILCOXON_EXACT_MAX = 20
SIGNIFICANCE_LEVEL = 0.05

Confusion = namedtuple("Confusion", ["tp", "fp", "fn", "tn"])
WilcoxonResult = namedtuple("WilcoxonResult", ["w", "p", "n_effective"])


def confusion_at(labels, scores, threshold):
    """Confusion counts predicting positive iff score >= threshold."""
    y = as_binary_labels(labels, "labels")
    s = np.asarray(scores, dtype=np.float64)
    check_equal_length(y, s, "labels and scores")
    pred = s >= threshold
    pos = y == 1
    return Confusion(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
        tn=int(np.sum(~pred & ~pos)),
    )


@dataclass(frozen=True)
class PRCurve:
    """(recall, precision) per distinct score threshold, recall ascending."""

    points: tuple
    positive_count: int


def pr_curve(labels, scores):
    y = as_binary_labels(labels, "labels")
    s = np.asarray(scores, dtype=np.float64)
    check_equal_length(y, s, "labels and scores")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores contain NaN or infinite values")
    positives = int(y.sum())
    if positives == 0:
        raise NoPositivesError("PR metrics need at least one positive label")
    order = np.argsort(-s, kind="stable")
    y_sorted = y[order]
    s_sorted = s[order]
    # one step per distinct score: index of the last row in each tie group
    ends = np.append(np.flatnonzero(np.diff(s_sorted) != 0), len(s_sorted) - 1)
    tp = np.cumsum(y_sorted)[ends]
    predicted = ends + 1
    recall = tp / positives
    precision = tp / predicted
    return PRCurve(
        points=tuple(zip(recall.tolist(), precision.tolist())),
        positive_count=positives,
    )


def pr_auc(labels, scores):
    """Average precision: sum of (R_k - R_{k-1}) * P_k with R_0 = 0."""
    curve = pr_curve(labels, scores)
    auc = 0.0
    prev_recall = 0.0
    for recall, precision in curve.points:
        auc += (recall - prev_recall) * precision
        prev_recall = recall
    return float(auc)


# -- Wilcoxon signed-rank --------------------------------------------------------


def _exact_p(w, ranks):
    """Two-sided p from the full sign-assignment distribution of W.

    Midranks are multiples of 1/2, so doubling makes every rank an
    integer and the distribution a small integer convolution (2^n total
    mass, exact in int64 for n <= 20).
    """
    scaled = np.rint(2.0 * np.asarray(ranks)).astype(np.int64)
    total = int(scaled.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in scaled:
        counts[r:] += counts[: total + 1 - r].copy()
    w2 = int(np.rint(2.0 * w))
    denom = float(2 ** len(scaled))
    p_le = counts[: w2 + 1].sum() / denom
    p_ge = counts[w2:].sum() / denom
    return float(min(1.0, 2.0 * min(p_le, p_ge)))


def _approx_p(w, ranks):
    """Normal approximation with tie-corrected variance and continuity 0.5."""
    n = len(ranks)
    mean = n * (n + 1) / 4.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(np.asarray(ranks), return_counts=True)
    variance -= float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    if variance <= 0.0:
        return 1.0
    magnitude = max(0.0, abs(w - mean) - 0.5)
    z = magnitude / math.sqrt(variance)
    return float(min(1.0, math.erfc(z / math.sqrt(2.0))))


def wilcoxon_signed_rank(a, b):
    """Paired two-sided signed-rank test on differences b - a.

    Zero differences are dropped; |d| ties get midranks; W is the rank
    sum of the positive differences. Exact p for up to 20 effective
    pairs, normal approximation beyond.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_equal_length(a, b, "paired samples")
    if len(a) < 3:
        raise ValueError(f"need at least 3 pairs, got {len(a)}")
    d = b - a
    d = d[d != 0.0]
    if len(d) == 0:
        raise AllZeroDifferencesError(
            "all paired differences are zero; the test is undefined"
        )
    ranks = rankdata(np.abs(d))
    w = float(np.sum(ranks[d > 0]))
    if len(d) <= WILCOXON_EXACT_MAX:
        p = _exact_p(w, ranks)
    else:
        p = _approx_p(w, ranks)
    return WilcoxonResult(w=w, p=p, n_effective=len(d))


# -- experiment configuration ---------------------------------------------------------


@dataclass(frozen=True)
class DatasetSpec:
    """One named data source: a CSV path or a synthetic recipe."""

    name: str
    path: str = None
    n_major: int = 0
    n_minor: int = 0
    d: int = 2
    separation: float = 3.0
    seed: int = 0
    label_column: str = "label"
    positive_value: str = "1"

    def __post_init__(self):
        if not self.name:
            raise ValueError("dataset name must be nonempty")
        synthetic = self.n_major > 0 and self.n_minor > 0
        if bool(self.path) == synthetic:
            raise ValueError(
                f"dataset {self.name!r} needs either a path or synthetic "
                "n_major/n_minor counts, not both"
            )

    def load(self):
        if self.path:
            loaded = load_csv(
                self.path,
                label_column=self.label_column,
                positive_value=self.positive_value,
            )
        else:
            loaded = generate_synthetic(
                self.n_major,
                self.n_minor,
                d=self.d,
                separation=self.separation,
                seed=self.seed,
            )
        return replace(loaded, source_name=self.name)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment grid, JSON-serializable."""

    datasets: tuple
    methods: tuple = (("ROS", False), ("ROS", True))
    classifiers: tuple = (ModelSpec(kind="GLM"),)
    imbalance_levels: tuple = ("original",)
    repetitions: int = 30
    train_fraction: float = 0.75
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(
            self, "methods", tuple((m, bool(f)) for m, f in self.methods)
        )
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        object.__setattr__(self, "imbalance_levels", tuple(self.imbalance_levels))


def validate_config(config):
    """Structural checks; raises ValueError on the first violation."""
    if not config.datasets:
        raise ValueError("config needs at least one dataset")
    names = [spec.name for spec in config.datasets]
    if len(set(names)) != len(names):
        raise ValueError("dataset names must be unique")
    if not config.methods:
        raise ValueError("config needs at least one (method, diversity) pair")
    for method, _ in config.methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if len(set(config.methods)) != len(config.methods):
        raise ValueError("duplicate (method, diversity) pair")
    if not config.classifiers:
        raise ValueError("config needs at least one classifier")
    kinds = [spec.kind for spec in config.classifiers]
    if len(set(kinds)) != len(kinds):
        raise ValueError("classifier kinds must be unique within one run")
    for level in config.imbalance_levels:
        if level == "original":
            continue
        if not isinstance(level, float) or not 0.0 < level < 1.0:
            raise ValueError(
                f"imbalance level must be 'original' or a fraction in (0, 1), "
                f"got {level!r}"
            )
    if len(set(config.imbalance_levels)) != len(config.imbalance_levels):
        raise ValueError("duplicate imbalance level")
    if config.repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if not 0.0 < config.train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")


def config_to_json(config):
    """Plain-JSON dict; round-trips through config_from_json."""
    return {
        "datasets": [asdict(spec) for spec in config.datasets],
        "methods": [[method, flag] for method, flag in config.methods],
        "classifiers": [asdict(spec) for spec in config.classifiers],
        "imbalance_levels": list(config.imbalance_levels),
        "repetitions": config.repetitions,
        "train_fraction": config.train_fraction,
        "master_seed": config.master_seed,
    }


def config_from_json(payload):
    known = {
        "datasets", "methods", "classifiers", "imbalance_levels",
        "repetitions", "train_fraction", "master_seed",
    }
    unknown = set(payload) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "datasets" not in payload:
        raise ValueError("config is missing 'datasets'")
    fields = {"datasets": tuple(DatasetSpec(**d) for d in payload["datasets"])}
    if "methods" in payload:
        fields["methods"] = tuple((m, bool(f)) for m, f in payload["methods"])
    if "classifiers" in payload:
        fields["classifiers"] = tuple(ModelSpec(**d) for d in payload["classifiers"])
    for key in ("imbalance_levels", "repetitions", "train_fraction", "master_seed"):
        if key in payload:
            fields[key] = payload[key]
    return ExperimentConfig(**fields)


# -- experiment runner ------------------------------------------------------------


@dataclass(frozen=True)
class CellKey:
    dataset: str
    level: object  # "original" or a float fraction
    method: str
    diversity: bool
    classifier: str

    @property
    def level_label(self):
        return self.level if isinstance(self.level, str) else str(self.level)


@dataclass
class ExperimentResult:
    """Per-cell PR-AUC samples, keyed by CellKey, plus the config echo."""

    config: ExperimentConfig
    samples: dict

    def rows(self):
        """Long-form (dataset, level, method, diversity, classifier, rep, pr_auc)."""
        for key in iter_cells(self.config):
            for rep, value in enumerate(self.samples[key]):
                yield (
                    key.dataset, key.level_label, key.method, key.diversity,
                    key.classifier, rep, float(value),
                )


def iter_cells(config):
    """Cell keys in deterministic config order."""
    for dataset, level, (method, diversity), clf in itertools.product(
        config.datasets, config.imbalance_levels, config.methods, config.classifiers
    ):
        yield CellKey(
            dataset=dataset.name,
            level=level,
            method=method,
            diversity=diversity,
            classifier=clf.kind,
        )


def cell_seed(master_seed, key, repetition):
    """Per-repetition seed; the diversity flag is deliberately excluded."""
    return derive_seed(
        master_seed, key.dataset, key.level, key.method, key.classifier, repetition
    )


def evaluate_once(data, spec, plan=None, level="original", train_fraction=0.75,
                  seed=0):
    """One level -> split -> standardize -> re-sample -> fit -> score pass.

    Returns (test_labels, test_scores). `plan` is a ResamplePlan template
    (or None for no re-sampling); its seed, like the level, split, and
    forest seeds, is derived from `seed` so one integer pins the pass.
    """
    if level != "original":
        data = apply_imbalance_level(data, level, derive_seed(seed, "level"))
    split = stratified_split(data, train_fraction, derive_seed(seed, "split"))
    _, (train, test) = standardize(split.train, [split.test])
    if plan is not None:
        plan = replace(plan, seed=derive_seed(seed, "resample"))
        train = apply_plan(train, plan).dataset
    if spec.kind == "RF":
        spec = replace(spec, seed=derive_seed(seed, "model"))
    model = fit_model(train, spec)
    return test.labels, predict_scores(model, test)


def _run_cell_rep(data, config, key, spec, repetition):
    labels, scores = evaluate_once(
        data,
        spec,
        plan=ResamplePlan(method=key.method, diversity=key.diversity),
        level=key.level,
        train_fraction=config.train_fraction,
        seed=cell_seed(config.master_seed, key, repetition),
    )
    return pr_auc(labels, scores)


def cell_curve(config, key, repetition=0):
    """PR curve of one cell repetition, replayed from its derived seed."""
    spec_by_kind = {spec.kind: spec for spec in config.classifiers}
    data = next(d for d in config.datasets if d.name == key.dataset).load()
    labels, scores = evaluate_once(
        data,
        spec_by_kind[key.classifier],
        plan=ResamplePlan(method=key.method, diversity=key.diversity),
        level=key.level,
        train_fraction=config.train_fraction,
        seed=cell_seed(config.master_seed, key, repetition),
    )
    return pr_curve(labels, scores)


def run_experiment(config, threads=1):
    """Run the full grid; returns per-cell PR-AUC samples.

    Cells x repetitions are independent tasks with derived seeds, so the
    result is identical whatever the thread count or completion order.
    Any failure is re-raised as ExperimentCellError naming the cell.
    """
    validate_config(config)
    data_cache = {spec.name: spec.load() for spec in config.datasets}
    spec_by_kind = {spec.kind: spec for spec in config.classifiers}
    keys = list(iter_cells(config))
    tasks = [(key, rep) for key in keys for rep in range(config.repetitions)]

    def run_one(task):
        key, rep = task
        try:
            return _run_cell_rep(
                data_cache[key.dataset], config, key, spec_by_kind[key.classifier], rep
            )
        except DiversampleError as exc:
            raise ExperimentCellError(
                f"{type(exc).__name__} in cell dataset={key.dataset} "
                f"level={key.level_label} method={key.method} "
                f"diversity={key.diversity} classifier={key.classifier} "
                f"repetition={rep}: {exc}"
            ) from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(run_one, tasks))
    else:
        values = [run_one(task) for task in tasks]

    by_task = dict(zip(tasks, values))
    samples = {
        key: np.array([by_task[(key, rep)] for rep in range(config.repetitions)])
        for key in keys
    }
    return ExperimentResult(config=config, samples=samples)


# -- summaries --------------------------------------------------------------------


@dataclass(frozen=True)
class SummaryRow:
    dataset: str
    level: str
    method: str
    diversity: bool
    classifier: str
    mean: float
    std: float
    wilcoxon_p: float = None  # None on rows with no baseline comparison
    significant: bool = None


def summarize(result):
    """Mean +/- std per cell; diversity rows get a Wilcoxon comparison.

    A diversity cell is significant when p < 0.05 AND its mean exceeds
    the baseline mean (one-directional marking, as in the comparison
    tables this mirrors). Identical base and diversity samples make the
    test undefined; that is reported as p = 1 (no evidence).
    """
    rows = []
    for key in iter_cells(result.config):
        samples = result.samples[key]
        mean = float(np.mean(samples))
        std = float(np.std(samples, ddof=1)) if len(samples) > 1 else 0.0
        p = None
        significant = None
        if key.diversity:
            base_key = replace(key, diversity=False)
            if base_key in result.samples:
                base = result.samples[base_key]
                try:
                    p = wilcoxon_signed_rank(base, samples).p
                except AllZeroDifferencesError:
                    p = 1.0
                significant = bool(
                    p < SIGNIFICANCE_LEVEL and mean > float(np.mean(base))
                )
        rows.append(
            SummaryRow(
                dataset=key.dataset, level=key.level_label, method=key.method,
                diversity=key.diversity, classifier=key.classifier,
                mean=mean, std=std, wilcoxon_p=p, significant=significant,
            )
        )
    return tuple(rows)


RESULT_COLUMNS = (
    "dataset", "level", "method", "diversity", "classifier", "repetition", "pr_auc"
)
SUMMARY_COLUMNS = (
    "dataset", "level", "method", "diversity", "classifier",
    "mean", "std", "wilcoxon_p", "significant",
)


def _bool_cell(flag):
    return "true" if flag else "false"


def render_results_csv(result):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for dataset, level, method, diversity, classifier, rep, value in result.rows():
        writer.writerow(
            [dataset, level, method, _bool_cell(diversity), classifier, rep,
             repr(value)]
        )
    return out.getvalue()


def render_summary_csv(rows):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow([
            row.dataset, row.level, row.method, _bool_cell(row.diversity),
            row.classifier, repr(row.mean), repr(row.std),
            "" if row.wilcoxon_p is None else repr(row.wilcoxon_p),
            "*" if row.significant else "",
        ])
    return out.getvalue()


def render_summary_text(rows):
    """Aligned comparison table; '*' marks significant diversity cells."""
    header = ("dataset", "level", "classifier", "method", "pr_auc")
    table = [header]
    for row in rows:
        method = ("D-" if row.diversity else "") + row.method
        cell = f"{row.mean:.3f}±{row.std:.3f}" + ("*" if row.significant else "")
        table.append((row.dataset, row.level, row.classifier, method, cell))
    widths = [max(len(line[i]) for line in table) for i in range(len(header))]
    lines = [
        "  ".join(field.ljust(width) for field, width in zip(line, widths)).rstrip()
        for line in table
    ]
    return "\n".join(lines) + "\n"
