"""Re-sampling strategies: exact counts, provenance, diversity drop-ins."""

import numpy as np
import pytest

from diversample.data import Dataset, Standardizer
from diversample.diversity import diversity_of_points
from diversample.exceptions import (
    MajorityTooSmallError,
    NoMinorityError,
    RatioInfeasibleError,
    TooFewMinorityForKError,
)
from diversample.resampling import (
    DiversityOverSampler,
    DiversityUnderSampler,
    HybridResampler,
    RandomOverSampler,
    RandomUnderSampler,
    ResamplePlan,
    SmoteOverSampler,
    apply_plan,
    diversity_oversample,
    diversity_undersample,
    hybrid_resample,
    random_oversample,
    random_undersample,
    smote_generate,
    smote_oversample,
)


def make_train(n_major, n_minor, d=2, seed=0, spread=1.0):
    rng = np.random.default_rng(seed)
    X = np.vstack(
        [
            rng.normal(size=(n_major, d)) * spread,
            rng.normal(size=(n_minor, d)) * spread + 2.0,
        ]
    )
    y = np.array([0] * n_major + [1] * n_minor)
    return Dataset(features=X, labels=y, feature_names=tuple(f"x{i}" for i in range(d)))


def counts(ds):
    return ds.majority_count, ds.minority_count


# -- plan validation -----------------------------------------------------------


def test_plan_validation():
    with pytest.raises(ValueError):
        ResamplePlan(method="BOGUS")
    with pytest.raises(ValueError):
        ResamplePlan(smote_k=0)
    with pytest.raises(ValueError):
        ResamplePlan(surplus_factor=0.5)
    with pytest.raises(ValueError):
        ResamplePlan(hybrid_size_ratio=0.0)
    with pytest.raises(ValueError):
        ResamplePlan(target_balance=-1.0)


# -- random over-sampling ---------------------------------------------------------


def test_ros_balances_and_tags():
    train = make_train(10, 2, seed=1)
    out = random_oversample(train, ResamplePlan(method="ROS", seed=0))
    assert counts(out.dataset) == (10, 10)
    assert out.provenance.count("duplicated") == 8
    # originals come first, untouched and in order
    assert np.array_equal(out.dataset.features[: len(train)], train.features)


def test_ros_already_balanced_is_identity():
    train = make_train(5, 5, seed=2)
    out = random_oversample(train, ResamplePlan(method="ROS", seed=3))
    assert np.array_equal(out.dataset.features, train.features)
    assert "duplicated" not in out.provenance


def test_ros_duplicates_are_bitwise_members():
    train = make_train(12, 3, seed=3)
    minority_rows = {tuple(r) for r in train.features[train.labels == 1]}
    for seed in range(100):
        out = random_oversample(train, ResamplePlan(method="ROS", seed=seed))
        dup_rows = [
            tuple(out.dataset.features[i])
            for i, tag in enumerate(out.provenance)
            if tag == "duplicated"
        ]
        assert len(dup_rows) == 9
        assert all(row in minority_rows for row in dup_rows)


def test_ros_no_minority():
    X = np.zeros((4, 2))
    y = np.zeros(4, dtype=int)
    train = Dataset(features=X, labels=y, feature_names=("a", "b"))
    with pytest.raises(NoMinorityError):
        random_oversample(train, ResamplePlan(method="ROS"))


# -- random under-sampling -----------------------------------------------------------


def test_rus_counts_and_subset():
    train = make_train(100, 10, seed=4)
    out = random_undersample(train, ResamplePlan(method="RUS", seed=5))
    assert counts(out.dataset) == (10, 10)
    original = {tuple(r) for r in train.features[train.labels == 0]}
    kept = out.dataset.features[out.dataset.labels == 0]
    assert all(tuple(r) in original for r in kept)
    assert set(out.provenance) == {"original-majority", "original-minority"}


def test_rus_identity_when_balanced():
    train = make_train(10, 10, seed=6)
    out = random_undersample(train, ResamplePlan(method="RUS", seed=7))
    assert np.array_equal(out.dataset.features, train.features)


def test_rus_seed_changes_subset():
    train = make_train(60, 6, seed=8)
    a = random_undersample(train, ResamplePlan(method="RUS", seed=0))
    b = random_undersample(train, ResamplePlan(method="RUS", seed=1))
    assert not np.array_equal(a.dataset.features, b.dataset.features)
    assert counts(a.dataset) == counts(b.dataset) == (6, 6)


def test_rus_majority_too_small():
    train = make_train(5, 10, seed=9)
    with pytest.raises(MajorityTooSmallError):
        random_undersample(train, ResamplePlan(method="RUS"))


# -- SMOTE -------------------------------------------------------------------------


def test_smote_segment_geometry():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [5.0, -5.0], [6.0, -6.0], [7.0, -7.0]])
    y = np.array([1, 1, 0, 0, 0])
    train = Dataset(features=X, labels=y, feature_names=("a", "b"))
    rows = smote_generate(train, 50, k=1, seed=0)
    assert rows.shape == (50, 2)
    for x in rows:
        assert x[0] == pytest.approx(x[1], abs=1e-12)
        assert 0.0 <= x[0] <= 1.0


def test_smote_rows_lie_on_neighbor_segments():
    train = make_train(10, 8, seed=10)
    k = 3
    rows = smote_generate(train, 1000, k=k, seed=11)
    minority = train.features[train.labels == 1]
    scaled = Standardizer().fit(train.features).transform(minority)
    dist = np.linalg.norm(scaled[:, None, :] - scaled[None, :, :], axis=2)
    np.fill_diagonal(dist, np.inf)
    neighbor_sets = np.argsort(dist, axis=1, kind="stable")[:, :k]

    def on_some_segment(x):
        for p in range(len(minority)):
            for q in neighbor_sets[p]:
                a, b = minority[p], minority[q]
                span = b - a
                with np.errstate(divide="ignore", invalid="ignore"):
                    u = np.where(span != 0, (x - a) / span, 0.0)
                active = span != 0
                if not np.any(active):
                    continue
                u_ref = u[active][0]
                if not (-1e-9 <= u_ref <= 1 + 1e-9):
                    continue
                if np.allclose(u[active], u_ref, atol=1e-9) and np.allclose(
                    x[~active], a[~active], atol=1e-12
                ):
                    return True
        return False

    assert all(on_some_segment(x) for x in rows)


def test_smote_too_few_minority():
    train = make_train(10, 5, seed=12)
    with pytest.raises(TooFewMinorityForKError):
        smote_generate(train, 3, k=5, seed=0)
    with pytest.raises(TooFewMinorityForKError):
        smote_oversample(train, ResamplePlan(method="SMOTE", smote_k=5))


def test_smote_oversample_counts():
    train = make_train(30, 8, seed=13)
    out = smote_oversample(train, ResamplePlan(method="SMOTE", seed=1))
    assert counts(out.dataset) == (30, 30)
    assert out.provenance.count("synthetic") == 22


# -- diversity over-sampling --------------------------------------------------------


def test_diversity_surplus_one_is_base_method():
    train = make_train(14, 6, seed=14)
    for method in ("ROS", "SMOTE"):
        base_plan = ResamplePlan(method=method, seed=21)
        div_plan = ResamplePlan(method=method, diversity=True, surplus_factor=1.0, seed=21)
        base_out = apply_plan(train, base_plan)
        div_out = apply_plan(train, div_plan)
        assert np.array_equal(base_out.dataset.features, div_out.dataset.features)
        assert np.array_equal(base_out.dataset.labels, div_out.dataset.labels)
        assert base_out.provenance == div_out.provenance


def test_diversity_ros_keeps_one_copy_of_each_point():
    X = np.array(
        [[0.0, 0.0], [9.0, 9.0], [3.0, 0.0], [0.0, 3.0], [3.0, 3.0], [1.5, 1.5]]
    )
    y = np.array([1, 1, 0, 0, 0, 0])
    train = Dataset(features=X, labels=y, feature_names=("a", "b"))
    out = diversity_oversample(train, ResamplePlan(method="ROS", diversity=True, seed=0), "ROS")
    assert counts(out.dataset) == (4, 4)
    extra = out.dataset.features[len(train):]
    assert {tuple(r) for r in extra} == {(0.0, 0.0), (9.0, 9.0)}


def test_diversity_smote_beats_random_subsets_of_pool():
    train = make_train(28, 8, seed=15)
    plan = ResamplePlan(method="SMOTE", diversity=True, surplus_factor=2.0, seed=33)
    out = diversity_oversample(train, plan, "SMOTE")
    tags = np.array(out.provenance)
    synth = out.dataset.features[tags == "synthetic"]
    assert len(synth) == 20

    # rebuild the candidate pool the call drew from (same seed, same stream)
    pool = smote_generate(train, 40, k=5, seed=33)
    scaler = Standardizer().fit(train.features)
    kept_d = diversity_of_points(scaler.transform(synth), ridge=1e-9)
    rng = np.random.default_rng(99)
    random_ds = []
    for _ in range(100):
        subset = pool[rng.choice(40, size=20, replace=False)]
        random_ds.append(diversity_of_points(scaler.transform(subset), ridge=1e-9))
    assert kept_d >= float(np.mean(random_ds))
    # the kept rows really are pool members
    pool_rows = {tuple(r) for r in pool}
    assert all(tuple(r) in pool_rows for r in synth)


def test_diversity_never_changes_counts_only_rows():
    train = make_train(20, 6, seed=16)
    for method in ("ROS", "SMOTE", "RUS"):
        base = apply_plan(train, ResamplePlan(method=method, seed=5))
        div = apply_plan(train, ResamplePlan(method=method, diversity=True, seed=5))
        assert counts(base.dataset) == counts(div.dataset)


def test_diversity_pool_with_originals_can_drop_them():
    # a coincident minority pair: with the originals in the pool, one of the
    # two copies is a zero-contribution duplicate and is always discarded
    X = np.array(
        [
            [0.0, 0.0],
            [0.0, 0.0],
            [9.0, 9.0],
            [4.0, 0.0],
            [0.0, 4.0],
            [4.0, 4.0],
            [2.0, 2.0],
            [1.0, 3.0],
        ]
    )
    y = np.array([1, 1, 1, 0, 0, 0, 0, 0])
    train = Dataset(features=X, labels=y, feature_names=("a", "b"))
    for seed in range(10):
        plan = ResamplePlan(
            method="ROS", diversity=True, seed=seed, pool_includes_originals=True
        )
        out = diversity_oversample(train, plan, "ROS")
        assert counts(out.dataset) == (5, 5)
        assert out.provenance.count("original-minority") == 2
        assert out.provenance.count("duplicated") == 3


# -- diversity under-sampling ---------------------------------------------------------


def test_diversity_rus_colinear_example():
    X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0]])
    y = np.array([0, 0, 0, 1, 1])
    train = Dataset(features=X, labels=y, feature_names=("a",))
    out = diversity_undersample(train, ResamplePlan(method="RUS", diversity=True, seed=0))
    kept_major = sorted(out.dataset.features[out.dataset.labels == 0][:, 0])
    assert kept_major == [0.0, 2.0]
    assert counts(out.dataset) == (2, 2)


def test_diversity_rus_identity_at_full_count():
    train = make_train(3, 3, seed=17)
    out = diversity_undersample(train, ResamplePlan(method="RUS", diversity=True, seed=1))
    assert np.array_equal(out.dataset.features, train.features)


def test_diversity_rus_beats_random_on_diversity():
    train = make_train(40, 10, seed=18)
    scaler = Standardizer().fit(train.features)

    def kept_diversity(outcome):
        rows = outcome.dataset.features[outcome.dataset.labels == 0]
        return diversity_of_points(scaler.transform(rows), ridge=1e-9)

    wins = 0
    for seed in range(100):
        div = diversity_undersample(
            train, ResamplePlan(method="RUS", diversity=True, seed=seed)
        )
        rnd = random_undersample(train, ResamplePlan(method="RUS", seed=seed))
        if kept_diversity(div) >= kept_diversity(rnd):
            wins += 1
    assert wins >= 95


# -- hybrids -----------------------------------------------------------------------


def test_hybrid_quarter_ratio_counts():
    train = make_train(970, 30, seed=19)
    for method in ("OSUS", "SMOTEUS"):
        out = apply_plan(train, ResamplePlan(method=method, hybrid_size_ratio=0.25, seed=3))
        assert counts(out.dataset) == (125, 125)
        assert len(out.dataset) == 250


def test_hybrid_three_quarter_ratio_counts():
    train = make_train(970, 30, seed=20)
    out = hybrid_resample(train, ResamplePlan(method="OSUS", hybrid_size_ratio=0.75, seed=4))
    assert counts(out.dataset) == (375, 375)


def test_hybrid_odd_total_gives_minority_the_extra_row():
    train = make_train(40, 10, seed=21)  # N=50, r=0.5 -> T=25 -> 13 min / 12 maj
    out = hybrid_resample(train, ResamplePlan(method="OSUS", hybrid_size_ratio=0.5, seed=5))
    assert out.dataset.minority_count == 13
    assert out.dataset.majority_count == 12


def test_hybrid_thins_minority_when_above_target():
    train = make_train(60, 40, d=2, seed=22)  # r=0.5 -> T=50 -> 25/25
    out = hybrid_resample(train, ResamplePlan(method="OSUS", hybrid_size_ratio=0.5, seed=6))
    assert counts(out.dataset) == (25, 25)
    assert set(out.provenance) <= {"original-majority", "original-minority"}
    original_minority = {tuple(r) for r in train.features[train.labels == 1]}
    kept = out.dataset.features[out.dataset.labels == 1]
    assert all(tuple(r) in original_minority for r in kept)


def test_hybrid_diversity_applies_to_both_stages():
    train = make_train(30, 8, seed=23)
    plan = ResamplePlan(method="SMOTEUS", diversity=True, hybrid_size_ratio=0.5, seed=7)
    out = hybrid_resample(train, plan)
    assert counts(out.dataset) == (9, 10)  # T=19: 10 minority, 9 majority
    assert out.provenance.count("synthetic") == 2
    b = hybrid_resample(train, plan)
    assert np.array_equal(out.dataset.features, b.dataset.features)


def test_hybrid_infeasible_ratios():
    tiny = make_train(6, 4, seed=24)
    with pytest.raises(RatioInfeasibleError):
        hybrid_resample(tiny, ResamplePlan(method="OSUS", hybrid_size_ratio=0.3, seed=0))
    lopsided = make_train(30, 970, seed=25)
    with pytest.raises(RatioInfeasibleError):
        hybrid_resample(
            lopsided, ResamplePlan(method="OSUS", hybrid_size_ratio=0.25, seed=0)
        )


# -- property sweep over random plans ------------------------------------------------


def test_exact_counts_hold_for_many_random_plans():
    rng = np.random.default_rng(26)
    methods = ("ROS", "RUS", "SMOTE", "OSUS", "SMOTEUS")
    for trial in range(500):
        n_major = int(rng.integers(8, 30))
        n_minor = int(rng.integers(6, n_major + 1))
        train = make_train(n_major, n_minor, seed=trial + 1000)
        method = methods[int(rng.integers(len(methods)))]
        plan = ResamplePlan(
            method=method,
            diversity=bool(rng.integers(2)),
            hybrid_size_ratio=float(rng.choice([0.25, 0.5, 0.75])),
            surplus_factor=float(rng.choice([1.0, 1.5, 2.0])),
            seed=int(rng.integers(10_000)),
        )
        try:
            out = apply_plan(train, plan)
        except (RatioInfeasibleError, MajorityTooSmallError):
            continue
        maj, mino = counts(out.dataset)
        if method == "ROS" or method == "SMOTE":
            assert maj == n_major
            assert mino == max(n_minor, n_major)
        elif method == "RUS":
            assert mino == n_minor
            assert maj == n_minor
        else:
            total = int(np.floor(plan.hybrid_size_ratio * len(train) + 0.5))
            assert mino == (total + 1) // 2
            assert maj == total // 2
        assert len(out.provenance) == len(out.dataset)
        again = apply_plan(train, plan)
        assert np.array_equal(out.dataset.features, again.dataset.features)


# -- estimator wrappers ----------------------------------------------------------------


def test_estimator_wrappers_round_trip():
    train = make_train(20, 6, seed=27)
    X, y = train.features, train.labels

    ros_X, ros_y = RandomOverSampler(random_state=1).fit_resample(X, y)
    assert (ros_y == 1).sum() == (ros_y == 0).sum() == 20

    rus = RandomUnderSampler(random_state=2)
    rus_X, rus_y = rus.fit_resample(X, y)
    assert (rus_y == 1).sum() == (rus_y == 0).sum() == 6
    assert len(rus.sample_provenance_) == len(rus_y)

    sm_X, sm_y = SmoteOverSampler(random_state=3).fit_resample(X, y)
    assert (sm_y == 1).sum() == 20

    dov = DiversityOverSampler(base="smote", random_state=4)
    dov_X, dov_y = dov.fit_resample(X, y)
    assert (dov_y == 1).sum() == 20
    assert dov.get_params()["surplus_factor"] == 2.0

    dus_X, dus_y = DiversityUnderSampler(random_state=5).fit_resample(X, y)
    assert (dus_y == 0).sum() == 6

    hyb = HybridResampler(base="ros", size_ratio=0.5, diversity=True, random_state=6)
    hyb_X, hyb_y = hyb.fit_resample(X, y)
    assert len(hyb_y) == 13  # round(0.5 * 26) = 13 -> 7 min / 6 maj
    assert (hyb_y == 1).sum() == 7


def test_apply_plan_dispatch_matrix():
    train = make_train(16, 6, seed=28)
    for method in ("ROS", "RUS", "SMOTE", "OSUS", "SMOTEUS"):
        for diversity in (False, True):
            plan = ResamplePlan(method=method, diversity=diversity, seed=9)
            out = apply_plan(train, plan)
            assert len(out.dataset) >= 4
            assert out.plan_echo == plan
