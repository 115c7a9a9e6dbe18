"""Deterministic command-line front end.

Exit codes: 0 success, 1 usage error, 2 data/validation error (the error
class name is printed verbatim). Every run writes its fully-resolved
configuration, defaults included, to a `<out>.config.json` sidecar, and
every output file is written atomically (temp file + rename) so an
interrupted run never leaves a truncated file behind.
"""

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from .classifiers import ModelSpec
from .data import Standardizer, generate_synthetic, load_csv
from .diversity import greedy_select
from .evaluation import (
    cell_curve,
    config_from_json,
    config_to_json,
    evaluate_once,
    iter_cells,
    pr_auc,
    pr_curve,
    render_results_csv,
    render_summary_csv,
    render_summary_text,
    run_experiment,
    summarize,
)
from .exceptions import (
    DiversampleError,
    EmptyFileError,
    NonNumericCellError,
)
from .resampling import METHODS, ResamplePlan, apply_plan
from .sort import (
    SORT_COEFFICIENTS,
    encode_sort_matrix,
    fixed_sort_model,
    load_sort_patients,
)

CLASSIFIER_CHOICES = ("glm", "knn", "dt", "rf")


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- small IO helpers -------------------------------------------------------------


def atomic_write(path, text):
    """Write text to path via a temp file in the same directory + rename."""
    path = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_sidecar(out_path, payload):
    atomic_write(
        out_path + ".config.json",
        json.dumps(payload, indent=2, sort_keys=True) + "\n",
    )


def resolved_flags(args, command):
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    flags["command"] = command
    return flags


def dataset_csv(dataset, provenance=None):
    """Dataset as CSV text: features, label, optional provenance column."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = list(dataset.feature_names) + [dataset.label_name]
    if provenance is not None:
        header.append("provenance")
    writer.writerow(header)
    for i, (x, y) in enumerate(zip(dataset.features, dataset.labels)):
        row = [repr(float(v)) for v in x] + [int(y)]
        if provenance is not None:
            row.append(provenance[i])
        writer.writerow(row)
    return out.getvalue()


def load_points_csv(path):
    """All-numeric CSV (header + float rows) as (matrix, header)."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        rows = [row for row in reader if row]
    if not rows:
        raise EmptyFileError(f"{path}: no header row")
    header = [name.strip() for name in rows[0]]
    if len(rows) == 1:
        raise EmptyFileError(f"{path}: no data rows")
    values = []
    for i, row in enumerate(rows[1:]):
        parsed = []
        for name, cell in zip(header, row):
            try:
                value = float(cell)
            except ValueError:
                raise NonNumericCellError(i + 1, name, cell) from None
            if not np.isfinite(value):
                raise NonNumericCellError(i + 1, name, cell)
            parsed.append(value)
        if len(parsed) != len(header):
            raise NonNumericCellError(i + 1, header[-1], "<missing>")
        values.append(parsed)
    return np.array(values), header


def _parse_level(text):
    if text == "original":
        return "original"
    return float(text)


def _method_name(text):
    """Method names are case-insensitive; 'none' stays literal."""
    return text if text == "none" else text.upper()


def _curve_csv(curve):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("recall", "precision"))
    for recall, precision in curve.points:
        writer.writerow((repr(recall), repr(precision)))
    return out.getvalue()


# -- subcommands ---------------------------------------------------------------------


def cmd_resample(args):
    data = load_csv(args.input, label_column=args.label_column,
                    positive_value=args.positive_value)
    plan = ResamplePlan(
        method=args.method,
        diversity=args.diversity,
        target_balance=args.balance,
        hybrid_size_ratio=args.size_ratio,
        smote_k=args.smote_k,
        surplus_factor=args.surplus,
        theta=args.theta,
        ridge=args.ridge,
        seed=args.seed,
        standardize=not args.no_standardize,
        pool_includes_originals=args.pool_includes_originals,
    )
    outcome = apply_plan(data, plan)
    atomic_write(args.out, dataset_csv(
        outcome.dataset,
        provenance=outcome.provenance if args.provenance else None,
    ))
    write_sidecar(args.out, resolved_flags(args, "resample"))
    print(f"{args.out}: {len(outcome.dataset)} rows "
          f"({int(outcome.dataset.labels.sum())} minority)")
    return 0


def cmd_diversity_select(args):
    points, header = load_points_csv(args.input)
    space = points
    if not args.no_standardize:
        space = Standardizer().fit(points).transform(points)
    selection = greedy_select(space, args.keep, theta=args.theta,
                              ridge=args.ridge, seed=args.seed)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in points[selection.kept_indices]:
        writer.writerow([repr(float(v)) for v in row])
    atomic_write(args.out, out.getvalue())
    if args.trace:
        trace = io.StringIO()
        writer = csv.writer(trace, lineterminator="\n")
        writer.writerow(("removed_row", "contribution", "step"))
        for step, (index, contribution) in enumerate(selection.removal_trace, 1):
            # removed_row counts data rows from 1, like the CSV error messages
            writer.writerow((index + 1, repr(float(contribution)), step))
        atomic_write(args.trace, trace.getvalue())
    write_sidecar(args.out, resolved_flags(args, "diversity-select"))
    print(f"{args.out}: kept {len(selection.kept_indices)} of {len(points)} rows, "
          f"diversity {selection.final_diversity:.6f}")
    return 0


def _model_spec(args):
    return ModelSpec(
        kind=args.classifier.upper(),
        max_iterations=args.max_iterations,
        tolerance=args.tolerance,
        l2_ridge=args.l2_ridge,
        k=args.k,
        max_depth=args.max_depth,
        min_leaf=args.min_leaf,
        trees=args.trees,
        features_per_split=args.features_per_split,
        bootstrap=not args.no_bootstrap,
        seed=args.seed,
    )


def cmd_evaluate(args):
    data = load_csv(args.input, label_column=args.label_column,
                    positive_value=args.positive_value)
    plan = None
    if args.method != "none":
        plan = ResamplePlan(method=args.method, diversity=args.diversity)
    labels, scores = evaluate_once(
        data,
        _model_spec(args),
        plan=plan,
        level=_parse_level(args.level),
        train_fraction=args.train_fraction,
        seed=args.seed,
    )
    value = pr_auc(labels, scores)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("metric", "value"))
    writer.writerow(("pr_auc", repr(value)))
    writer.writerow(("test_rows", len(labels)))
    writer.writerow(("test_positives", int(labels.sum())))
    atomic_write(args.out, out.getvalue())
    if args.curve:
        atomic_write(args.curve, _curve_csv(pr_curve(labels, scores)))
    write_sidecar(args.out, resolved_flags(args, "evaluate"))
    print(f"{args.out}: pr_auc {value:.6f}")
    return 0


def _curve_filename(key):
    method = ("D-" if key.diversity else "") + key.method
    return f"{key.dataset}_{key.level_label}_{method}_{key.classifier}.csv"


def cmd_experiment(args):
    with open(args.config, encoding="utf-8") as handle:
        config = config_from_json(json.load(handle))
    result = run_experiment(config, threads=args.threads)
    rows = summarize(result)
    atomic_write(args.out, render_results_csv(result))
    base, ext = os.path.splitext(args.out)
    summary_path = args.summary or f"{base}-summary{ext or '.csv'}"
    atomic_write(summary_path, render_summary_csv(rows))
    if args.tables:
        atomic_write(args.tables, render_summary_text(rows))
    if args.curves:
        os.makedirs(args.curves, exist_ok=True)
        for key in iter_cells(config):
            curve = cell_curve(config, key)
            atomic_write(os.path.join(args.curves, _curve_filename(key)),
                         _curve_csv(curve))
    write_sidecar(args.out, config_to_json(config))
    print(f"{args.out}: {sum(len(v) for v in result.samples.values())} "
          f"measurements across {len(result.samples)} cells")
    return 0


def cmd_sort_score(args):
    patients = load_sort_patients(args.patients)
    coefficients = SORT_COEFFICIENTS
    if args.coefficients:
        with open(args.coefficients, encoding="utf-8") as handle:
            coefficients = json.load(handle)
    model = fixed_sort_model(coefficients)
    X = encode_sort_matrix(
        patients,
        clamp_asa5=not args.no_clamp_asa5,
        malignancy_binary=args.binary_malignancy,
    )
    scores = model.predict_score(X)
    with open(args.patients, newline="", encoding="utf-8") as handle:
        raw = [row for row in csv.reader(handle) if row]
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(raw[0] + ["probability"])
    for row, score in zip(raw[1:], scores):
        writer.writerow(row + [repr(float(score))])
    atomic_write(args.out, out.getvalue())
    write_sidecar(args.out, resolved_flags(args, "sort-score"))
    print(f"{args.out}: scored {len(patients)} patients")
    return 0


def cmd_gen_synth(args):
    data = generate_synthetic(args.n_major, args.n_minor, d=args.dim,
                              separation=args.separation, seed=args.seed)
    atomic_write(args.out, dataset_csv(data))
    write_sidecar(args.out, resolved_flags(args, "gen-synth"))
    print(f"{args.out}: {len(data)} rows ({args.n_minor} minority)")
    return 0


# -- parser ---------------------------------------------------------------------------


def _add_common_input(parser):
    parser.add_argument("--input", required=True, help="input dataset CSV")
    parser.add_argument("--label-column", default="label")
    parser.add_argument("--positive-value", default="1")


def _add_plan_flags(parser):
    parser.add_argument("--method", type=_method_name, choices=METHODS,
                        default="ROS")
    parser.add_argument("--diversity", action="store_true",
                        help="use the diversity-maximizing variant")
    parser.add_argument("--balance", type=float, default=1.0,
                        help="target minority:majority ratio after re-sampling")
    parser.add_argument("--size-ratio", type=float, default=0.5,
                        help="hybrid re-sampled size as a fraction of the input")
    parser.add_argument("--smote-k", type=int, default=5)
    parser.add_argument("--surplus", type=float, default=2.0,
                        help="candidate pool size per kept instance")
    parser.add_argument("--theta", type=float, default=1.0)
    parser.add_argument("--ridge", type=float, default=1e-9)
    parser.add_argument("--pool-includes-originals", action="store_true")
    parser.add_argument("--no-standardize", action="store_true")


def build_parser():
    parser = _Parser(prog="diversample",
                     description="Diversity-preserving re-sampling toolkit")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("resample", help="re-sample a dataset CSV")
    _add_common_input(p)
    _add_plan_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--provenance", action="store_true",
                   help="append a per-row provenance column")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("diversity-select",
                       help="keep the most diverse subset of a points CSV")
    p.add_argument("--input", required=True, help="all-numeric points CSV")
    p.add_argument("--keep", type=int, required=True,
                   help="number of rows to keep")
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--ridge", type=float, default=1e-9)
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="also write the removal order CSV here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_diversity_select)

    p = sub.add_parser("evaluate",
                       help="single re-sample + fit + PR-AUC evaluation")
    _add_common_input(p)
    p.add_argument("--method", type=_method_name,
                   choices=METHODS + ("none",), default="none")
    p.add_argument("--diversity", action="store_true")
    p.add_argument("--level", default="original",
                   help="imbalance level to force ('original' or a fraction)")
    p.add_argument("--train-fraction", type=float, default=0.75)
    p.add_argument("--classifier", choices=CLASSIFIER_CHOICES, default="glm")
    p.add_argument("--max-iterations", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--l2-ridge", type=float, default=1e-6)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--max-depth", type=int, default=10)
    p.add_argument("--min-leaf", type=int, default=5)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--features-per-split", type=int, default=None)
    p.add_argument("--no-bootstrap", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--curve", help="also write the PR curve points CSV here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment",
                       help="full repeated-comparison experiment from JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="per-repetition results CSV")
    p.add_argument("--summary", help="summary CSV (default: <out>-summary.csv)")
    p.add_argument("--tables", help="aligned-text comparison tables")
    p.add_argument("--curves", help="directory for per-cell PR-curve CSVs")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sort-score",
                       help="append mortality probabilities to a patients CSV")
    p.add_argument("--patients", required=True)
    p.add_argument("--coefficients",
                   help="coefficients JSON (default: published values)")
    p.add_argument("--binary-malignancy", action="store_true")
    p.add_argument("--no-clamp-asa5", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sort_score)

    p = sub.add_parser("gen-synth", help="write a synthetic two-cluster CSV")
    p.add_argument("--n-major", type=int, required=True)
    p.add_argument("--n-minor", type=int, required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--separation", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synth)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (DiversampleError, ValueError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
