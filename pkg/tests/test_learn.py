import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from mlslice.learn import (
    ALGORITHMS,
    ClassMissing,
    ClassTooSmall,
    DecisionTreeClassifier,
    DimensionMismatch,
    EvalConfig,
    KNeighborsClassifier,
    NotFittedError,
    QuadraticDiscriminantAnalysis,
    RandomForestClassifier,
    RidgeClassifier,
    SingularCovariance,
    SoftmaxRegression,
    evaluate,
    make_classifier,
    stratified_kfold,
)
from mlslice.telemetry import FlowScaler


def blobs(n_per=40, centers=((0, 0), (6, 6), (0, 6)), scale=0.5, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(c, scale, size=(n_per, len(c))) for c in centers])
    y = np.repeat(np.arange(len(centers)), n_per)
    return X, y


# ---- oracles ----------------------------------------------------------------

def brute_best_gini(X, y):
    """Lowest weighted Gini over every axis-aligned single split."""
    def gini(lab):
        if len(lab) == 0:
            return 0.0
        _, c = np.unique(lab, return_counts=True)
        p = c / len(lab)
        return 1.0 - float(np.sum(p * p))

    best = np.inf
    for f in range(X.shape[1]):
        for t in np.unique(X[:, f])[:-1]:
            left = y[X[:, f] <= t]
            right = y[X[:, f] > t]
            w = (len(left) * gini(left) + len(right) * gini(right)) / len(y)
            best = min(best, w)
    return best


def split_gini(model, X, y):
    leaves = model.apply(X)
    total = 0.0
    for leaf in np.unique(leaves):
        lab = y[leaves == leaf]
        _, c = np.unique(lab, return_counts=True)
        p = c / len(lab)
        total += len(lab) * (1.0 - float(np.sum(p * p)))
    return total / len(y)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(4, 16).flatmap(
        lambda n: st.tuples(
            st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=n, max_size=n),
            st.lists(st.integers(0, 2), min_size=n, max_size=n),
        )
    )
)
def test_depth1_tree_matches_exhaustive_split(data):
    pts, lab = data
    X = np.array(pts, dtype=float)
    y = np.array(lab)
    if len(np.unique(y)) < 2 or all(len(np.unique(X[:, f])) < 2 for f in range(2)):
        return
    model = DecisionTreeClassifier(max_depth=1).fit(X, y)
    assert split_gini(model, X, y) == pytest.approx(brute_best_gini(X, y), abs=1e-12)


def test_full_tree_fits_training_set():
    X, y = blobs(scale=2.0)
    assert (DecisionTreeClassifier().fit(X, y).predict(X) == y).all()


def test_min_samples_leaf_respected():
    X, y = blobs(scale=2.0)
    m = DecisionTreeClassifier(min_samples_leaf=7).fit(X, y)
    assert min(c for c in np.bincount(m.apply(X)) if c) >= 7


def test_single_tree_forest_equals_decision_tree():
    X, y = blobs(scale=2.5, seed=3)
    Xt, _ = blobs(scale=3.0, seed=4)
    dt = DecisionTreeClassifier(max_depth=4, seed=1).fit(X, y)
    rf = RandomForestClassifier(n_estimators=1, max_depth=4, bootstrap=False, max_features=None, seed=1).fit(X, y)
    assert (dt.predict(Xt) == rf.predict(Xt)).all()


def test_knn_1_memorises_training_set():
    X, y = blobs(scale=3.0)
    assert (KNeighborsClassifier(1).fit(X, y).predict(X) == y).all()


def test_knn_vote_tie_goes_to_lowest_class():
    X = np.array([[0.0], [2.0]])
    m = KNeighborsClassifier(2).fit(X, np.array([1, 0]))
    assert m.predict([[1.0]])[0] == 0


def test_ridge_normal_equation_residual():
    X, y = blobs(scale=1.5)
    m = RidgeClassifier(alpha=1.0).fit(X, y)
    A = np.hstack([X, np.ones((len(X), 1))])
    Y = np.eye(3)[y]
    resid = (A.T @ A + np.eye(A.shape[1])) @ m.coef_ - A.T @ Y
    assert np.linalg.norm(resid) < 1e-8


def test_qda_identity_covariance_is_nearest_mean():
    X, y = blobs(n_per=30, scale=2.0, seed=7)
    m = QuadraticDiscriminantAnalysis(reg_param=1.0, priors=[1 / 3] * 3).fit(X, y)
    Xt = np.random.default_rng(1).uniform(-3, 9, size=(300, 2))
    means = np.array([X[y == c].mean(axis=0) for c in range(3)])
    expect = np.array([np.argmin([np.sum((x - mu) ** 2) for mu in means]) for x in Xt])
    assert (m.predict(Xt) == expect).all()


def test_qda_errors():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [5.0, 5.0], [6.0, 6.0]])
    y = np.array([0, 0, 0, 1, 1])
    with pytest.raises(SingularCovariance):
        QuadraticDiscriminantAnalysis(reg_param=0.0).fit(X, y)
    QuadraticDiscriminantAnalysis().fit(X, y)
    with pytest.raises(ClassMissing) as e:
        QuadraticDiscriminantAnalysis(n_classes=3).fit(X, y)
    assert e.value.cls == 2


def test_softmax_probabilities_sum_to_one():
    X, y = blobs()
    p = SoftmaxRegression(epochs=5).fit(X, y).predict_proba(X)
    assert np.abs(p.sum(axis=1) - 1).max() < 1e-9


def test_softmax_split_training_matches_one_run():
    X, y = blobs(scale=2.0)
    full = SoftmaxRegression(epochs=6, seed=3).fit(X, y)
    part = SoftmaxRegression(n_classes=3, epochs=0, seed=3).fit(X, y)
    part.train_epochs(X, y, 2, start_epoch=0).train_epochs(X, y, 4, start_epoch=2)
    assert np.array_equal(full.coef_, part.coef_)
    assert np.array_equal(full.intercept_, part.intercept_)


def test_softmax_class_missing():
    X, y = blobs()
    with pytest.raises(ClassMissing):
        SoftmaxRegression(n_classes=4).fit(X, y)


@pytest.mark.parametrize("algo", sorted(ALGORITHMS))
def test_predict_contract(algo):
    X, y = blobs()
    m = make_classifier(algo, **({"n_estimators": 5} if algo in ("RandomForest", "ExtraTrees") else {}))
    with pytest.raises(NotFittedError):
        m.predict(X)
    m.fit(X, y)
    assert m.predict(np.empty((0, 2))).shape == (0,)
    with pytest.raises(DimensionMismatch):
        m.predict(np.zeros((3, 5)))
    assert (m.predict(X) == clone(m).fit(X, y).predict(X)).all()


def test_unknown_algorithm():
    with pytest.raises(ValueError, match="unknown algorithm"):
        make_classifier("XGBoost")


# ---- stratified k-fold -------------------------------------------------------

def test_kfold_balanced_example():
    y = np.repeat([0, 1], 50)
    for _, test in stratified_kfold(y, EvalConfig(10, seed=1)):
        assert np.bincount(y[test]).tolist() == [5, 5]


def test_kfold_101_samples_one_fold_larger():
    y = np.array([0] * 51 + [1] * 50)
    sizes = sorted(len(t) for _, t in stratified_kfold(y, EvalConfig(10)))
    assert sizes == [10] * 9 + [11]


def test_kfold_class_too_small():
    with pytest.raises(ClassTooSmall) as e:
        stratified_kfold(np.array([0] * 20 + [1] * 3), EvalConfig(5))
    assert e.value.cls == 1


def test_eval_config_rejects_one_fold():
    with pytest.raises(ValueError):
        EvalConfig(n_folds=1)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1), st.integers(0, 400))
def test_kfold_partition_and_proportionality(n_classes, seed, extra):
    rng = np.random.default_rng(seed)
    y = np.concatenate([np.arange(n_classes).repeat(10), rng.integers(0, n_classes, size=extra)])
    k = 10
    folds = stratified_kfold(y, EvalConfig(k, seed))
    tests = np.concatenate([t for _, t in folds])
    assert np.array_equal(np.sort(tests), np.arange(len(y)))
    for train, test in folds:
        assert np.intersect1d(train, test).size == 0 and len(train) + len(test) == len(y)
        for c in range(n_classes):
            ideal = np.sum(y == c) / k
            assert abs(np.sum(y[test] == c) - ideal) <= 1


def test_kfold_deterministic():
    y = np.random.default_rng(0).integers(0, 3, 200)
    a = stratified_kfold(y, EvalConfig(10, 5))
    b = stratified_kfold(y, EvalConfig(10, 5))
    assert all(np.array_equal(p[1], q[1]) for p, q in zip(a, b))


# ---- evaluate ------------------------------------------------------------------

@pytest.mark.parametrize("algo", sorted(ALGORITHMS))
def test_separable_blobs_perfect(algo):
    X, y = blobs(n_per=30, centers=((0, 0), (20, 20)), scale=0.5)
    hp = {"n_estimators": 10} if algo in ("RandomForest", "ExtraTrees") else {}
    r = evaluate(algo, hp, X, y, EvalConfig(5))
    assert r.mean_accuracy == 1.0


def test_shuffled_labels_near_chance():
    rng = np.random.default_rng(0)
    for seed in range(5):
        X = rng.normal(size=(200, 3))
        y = rng.permutation(np.repeat([0, 1], 100))
        r = evaluate("DecisionTree", {"max_depth": 1}, X, y, EvalConfig(10, seed))
        assert 0.35 <= r.mean_accuracy <= 0.65


def test_report_invariants():
    X, y = blobs(scale=2.5)
    r = evaluate("Knn", None, X, y, EvalConfig(4, 2))
    assert np.array(r.confusion).sum(axis=1).tolist() == np.bincount(y).tolist()
    assert abs(r.mean_accuracy - np.mean(r.per_fold_accuracy)) <= 1e-12
    assert r.ci95_halfwidth >= 0
    assert set(r.per_class_recall) == {0, 1, 2}
    assert r.to_csv().splitlines()[0] == "fold,accuracy"
    assert r.confusion_csv().count("\n") == 4


def test_evaluate_deterministic_bytes():
    X, y = blobs(scale=3.0)
    a = evaluate("RandomForest", {"n_estimators": 5}, X, y, EvalConfig(5, 9)).to_json()
    b = evaluate("RandomForest", {"n_estimators": 5}, X, y, EvalConfig(5, 9)).to_json()
    assert a == b


class SpyScaler(FlowScaler):
    seen: list = []

    def fit(self, X, y=None):
        SpyScaler.seen.append(np.array(X))
        return super().fit(X, y)


def test_scaler_fitted_on_training_rows_only():
    X, y = blobs(scale=2.0)
    X = X + np.arange(len(X))[:, None] * 1e-3  # make rows unique
    SpyScaler.seen = []
    cfg = EvalConfig(5, 0)
    evaluate("Knn", None, X, y, cfg, scaler_factory=SpyScaler)
    for (train, test), fitted in zip(stratified_kfold(y, cfg), SpyScaler.seen):
        assert np.array_equal(fitted, X[train])
        assert not any((fitted == row).all(axis=1).any() for row in X[test])


def test_leakage_probe_changes_results():
    # replacing test rows with copies of training rows must change the outcome
    X, y = blobs(scale=2.5, seed=11)
    cfg = EvalConfig(5, 0)
    base = evaluate("DecisionTree", None, X, y, cfg)
    Xp = X.copy()
    for train, test in stratified_kfold(y, cfg):
        Xp[test] = X[train[: len(test)]]
    probed = evaluate("DecisionTree", None, Xp, y, cfg)
    assert probed.per_fold_accuracy != base.per_fold_accuracy
