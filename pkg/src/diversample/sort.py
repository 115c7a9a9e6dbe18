"""SORT surgical-mortality scoring and its re-sampling case study.

The scorer is a fixed-coefficient logistic model over ten dummy-coded
patient features (ASA-PS grade, emergency admission, operation severity,
malignancy, age group). Coefficients default to the published table and
can be swapped for a fitted set. A schema-compatible synthetic generator
drives pipeline tests; it samples patients from fixed marginals and
draws mortality labels from the scoring model itself, so a logistic fit
on its output must recover the generating coefficients.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from ._validation import derive_seed, rng_from
from .classifiers import LogisticModel, glm_import
from .data import Dataset, stratified_split
from .evaluation import pr_auc
from .exceptions import InvalidFieldError, MissingColumnError, NonNumericCellError
from .resampling import ResamplePlan, apply_plan

SEVERITIES = ("Minor", "Intermediate", "Major", "Xmajor/Complex")
AGE_GROUPS = ("base", "grp1", "grp2")

FEATURE_NAMES = (
    "ASAPS2",
    "ASAPS3",
    "ASAPS4",
    "Emergency",
    "Severity=Intermediate",
    "Severity=Major",
    "Severity=Xmajor/Complex",
    "Malignancy",
    "age_grp_1",
    "age_grp_2",
)

SORT_COEFFICIENTS = {
    "(Intercept)": -3.892,
    "ASAPS2": 1.902,
    "ASAPS3": 1.932,
    "ASAPS4": 3.637,
    "Emergency": 1.859,
    "Severity=Intermediate": 1.526,
    "Severity=Major": 0.841,
    "Severity=Xmajor/Complex": 0.899,
    "Malignancy": 0.275,
    "age_grp_1": 0.597,
    "age_grp_2": 0.764,
}

# marginals for the synthetic patient generator (low-risk-heavy mix)
_ASA_P = (0.55, 0.28, 0.10, 0.05, 0.02)
_EMERGENCY_RATE = 0.12
_SEVERITY_P = (0.50, 0.28, 0.14, 0.08)
_MALIGNANCY_P = (0.75, 0.12, 0.08, 0.05)  # over grades 0..3
_AGE_P = (0.55, 0.28, 0.17)


@dataclass(frozen=True)
class SortPatient:
    asa_ps: int
    emergency: bool = False
    severity: str = "Minor"
    malignancy: float = 0.0
    age_group: str = "base"

    def __post_init__(self):
        if not 1 <= int(self.asa_ps) <= 5:
            raise InvalidFieldError(f"asa_ps must be 1..5, got {self.asa_ps!r}")
        if self.severity not in SEVERITIES:
            raise InvalidFieldError(
                f"severity must be one of {SEVERITIES}, got {self.severity!r}"
            )
        if self.age_group not in AGE_GROUPS:
            raise InvalidFieldError(
                f"age_group must be one of {AGE_GROUPS}, got {self.age_group!r}"
            )
        if not math.isfinite(self.malignancy) or self.malignancy < 0:
            raise InvalidFieldError(
                f"malignancy must be a nonnegative number, got {self.malignancy!r}"
            )


def check_coefficients(coefficients):
    """Validate a coefficient map and return it in canonical order."""
    expected = ("(Intercept)",) + FEATURE_NAMES
    if set(coefficients) != set(expected):
        missing = sorted(set(expected) - set(coefficients))
        extra = sorted(set(coefficients) - set(expected))
        raise InvalidFieldError(
            f"coefficient names do not match: missing {missing}, extra {extra}"
        )
    values = {name: float(coefficients[name]) for name in expected}
    if not all(math.isfinite(v) for v in values.values()):
        raise InvalidFieldError("coefficients must be finite")
    return values


def cci_to_asa(cci):
    """Comorbidity index to ASA-PS grade: 0->1, 1->2, 2->3, 3->4, >=4 -> 5."""
    cci = int(cci)
    if cci < 0:
        raise ValueError(f"cci must be nonnegative, got {cci}")
    return min(cci + 1, 5)


def encode_sort_features(patient, clamp_asa5=True, malignancy_binary=False):
    """Ten-element dummy encoding in fixed feature order.

    Reference cell: ASA-PS 1, elective, Minor severity, base age group.
    The coefficient table has no ASAPS5 dummy, so grade 5 falls into the
    ASAPS4 dummy unless clamping is disabled, which makes grade 5 an
    error instead. Malignancy passes through as a numeric score;
    malignancy_binary collapses it to a 0/1 indicator.
    """
    x = np.zeros(len(FEATURE_NAMES))
    asa = int(patient.asa_ps)
    if asa == 5:
        if not clamp_asa5:
            raise InvalidFieldError(
                "asa_ps 5 has no dummy of its own; enable clamping to score it"
            )
        asa = 4
    if asa >= 2:
        x[asa - 2] = 1.0
    if patient.emergency:
        x[3] = 1.0
    if patient.severity != "Minor":
        x[4 + SEVERITIES.index(patient.severity) - 1] = 1.0
    if malignancy_binary:
        x[7] = 1.0 if patient.malignancy > 0 else 0.0
    else:
        x[7] = float(patient.malignancy)
    if patient.age_group != "base":
        x[8 + AGE_GROUPS.index(patient.age_group) - 1] = 1.0
    return x


def encode_sort_matrix(patients, clamp_asa5=True, malignancy_binary=False):
    return np.array([
        encode_sort_features(p, clamp_asa5=clamp_asa5,
                             malignancy_binary=malignancy_binary)
        for p in patients
    ]).reshape(len(patients), len(FEATURE_NAMES))


def fixed_sort_model(coefficients=None):
    """Scoring-ready logistic model with pinned coefficients (no fit step)."""
    values = check_coefficients(coefficients or SORT_COEFFICIENTS)
    return glm_import(values, FEATURE_NAMES)


def sort_score(patient, coefficients=None, clamp_asa5=True, malignancy_binary=False):
    """Mortality probability 1/(1 + exp(-(b0 + b . encode(patient))))."""
    model = fixed_sort_model(coefficients)
    x = encode_sort_features(
        patient, clamp_asa5=clamp_asa5, malignancy_binary=malignancy_binary
    )
    return float(model.predict_score(x.reshape(1, -1))[0])


def generate_sort_dataset(n, seed=0, coefficients=None):
    """Synthetic SORT-schema dataset with labels drawn from the score model.

    Patient attributes are sampled from fixed marginals, encoded, and a
    mortality label is drawn per row with probability equal to the
    model's score, so fitting a logistic model on a large sample must
    recover the generating coefficients.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    model = fixed_sort_model(coefficients)
    rng = rng_from(seed)
    asa = rng.choice(np.arange(1, 6), size=n, p=_ASA_P)
    emergency = rng.random(n) < _EMERGENCY_RATE
    severity = rng.choice(np.array(SEVERITIES), size=n, p=_SEVERITY_P)
    malignancy = rng.choice(np.arange(4.0), size=n, p=_MALIGNANCY_P)
    age = rng.choice(np.array(AGE_GROUPS), size=n, p=_AGE_P)
    patients = [
        SortPatient(
            asa_ps=int(asa[i]),
            emergency=bool(emergency[i]),
            severity=str(severity[i]),
            malignancy=float(malignancy[i]),
            age_group=str(age[i]),
        )
        for i in range(n)
    ]
    X = encode_sort_matrix(patients)
    labels = (rng.random(n) < model.predict_score(X)).astype(np.int64)
    return Dataset(
        features=X,
        labels=labels,
        feature_names=FEATURE_NAMES,
        source_name=f"sort-synthetic(n={n},seed={seed})",
    )


# -- patients CSV -----------------------------------------------------------------

_TRUE_WORDS = {"1", "true", "yes", "emergency"}
_FALSE_WORDS = {"0", "false", "no", "elective"}


def load_sort_patients(path):
    """Patients from a CSV with columns asa_ps|cci, emergency, severity,
    malignancy, age_group."""
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise MissingColumnError(f"{path}: no header row")
        fields = [name.strip() for name in reader.fieldnames]
        has_asa = "asa_ps" in fields
        has_cci = "cci" in fields
        if not has_asa and not has_cci:
            raise MissingColumnError("patients CSV needs an asa_ps or cci column")
        for column in ("emergency", "severity", "malignancy", "age_group"):
            if column not in fields:
                raise MissingColumnError(f"patients CSV is missing {column!r}")
        patients = []
        for i, row in enumerate(reader):
            row = {k.strip(): (v or "").strip() for k, v in row.items() if k}
            source = "asa_ps" if has_asa else "cci"
            try:
                graded = int(row[source])
            except ValueError:
                raise NonNumericCellError(i + 1, source, row[source]) from None
            asa = graded if has_asa else cci_to_asa(graded)
            flag = row["emergency"].lower()
            if flag in _TRUE_WORDS:
                emergency = True
            elif flag in _FALSE_WORDS:
                emergency = False
            else:
                raise InvalidFieldError(
                    f"row {i + 1}: emergency must be one of "
                    f"{sorted(_TRUE_WORDS | _FALSE_WORDS)}, got {row['emergency']!r}"
                )
            try:
                malignancy = float(row["malignancy"])
            except ValueError:
                raise NonNumericCellError(i + 1, "malignancy",
                                          row["malignancy"]) from None
            patients.append(
                SortPatient(
                    asa_ps=asa,
                    emergency=emergency,
                    severity=row["severity"],
                    malignancy=malignancy,
                    age_group=row["age_group"],
                )
            )
    return tuple(patients)


# -- case study -------------------------------------------------------------------

CASE_STUDY_RATIOS = (0.25, 0.5, 0.75)
TRAIN_FRACTION = 2.0 / 3.0


@dataclass(frozen=True)
class CaseStudyRow:
    method: str
    ratio: float  # None on the benchmark rows
    pr_auc: float


def default_case_plans(seed=0):
    """OSUS and D-OSUS at the three published re-sampling ratios."""
    return tuple(
        ResamplePlan(
            method="OSUS",
            diversity=diversity,
            hybrid_size_ratio=ratio,
            seed=derive_seed(seed, "plan", "OSUS", diversity, ratio),
        )
        for diversity in (False, True)
        for ratio in CASE_STUDY_RATIOS
    )


def run_case_study(data, plans=None, seed=0):
    """Score each re-sampling plan plus two benchmarks on a 2/3-1/3 split.

    Benchmarks: a logistic fit on the unmodified training set ("none")
    and the fixed-coefficient scorer ("UK-SORT"), which has no fit step
    and therefore cannot depend on the plans at all. Features must be the
    ten SORT-encoded columns so the fixed coefficients apply.
    """
    if plans is None:
        plans = default_case_plans(seed)
    split = stratified_split(data, TRAIN_FRACTION, derive_seed(seed, "split"))
    train, test = split.train, split.test

    def fitted_auc(dataset):
        model = LogisticModel().fit(dataset.features, dataset.labels)
        return pr_auc(test.labels, model.predict_score(test.features))

    rows = [CaseStudyRow("none", None, fitted_auc(train))]
    fixed = fixed_sort_model()
    rows.append(
        CaseStudyRow(
            "UK-SORT", None, pr_auc(test.labels, fixed.predict_score(test.features))
        )
    )
    for plan in plans:
        label = ("D-" if plan.diversity else "") + plan.method
        ratio = plan.hybrid_size_ratio if plan.method in ("OSUS", "SMOTEUS") else None
        resampled = apply_plan(train, plan).dataset
        rows.append(CaseStudyRow(label, ratio, fitted_auc(resampled)))
    return tuple(rows)


def render_case_study_csv(rows):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("method", "ratio", "pr_auc"))
    for row in rows:
        writer.writerow(
            (row.method, "" if row.ratio is None else repr(row.ratio),
             repr(row.pr_auc))
        )
    return out.getvalue()
