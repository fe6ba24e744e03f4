#!/usr/bin/env python
# coding: utf-8
"""Runtime models: linear, boosting, optimistic, Ernest, registry."""

# native
from dataclasses import replace
import sys

# lib
import numpy as np
import pytest

# pkg
from collabconf.dataset import Feature, FeatureMatrix, JobSchema, RuntimeRecord, TrainingSet
from collabconf.errors import (
    EmptyTrainingSet,
    InsufficientScaleOutVariation,
    PluginError,
    SchemaFingerprintMismatch,
    UnknownModel,
)
from collabconf.models import (
    MODELS,
    PLUGINS,
    candidate_order,
    fit_model,
    load_plugins,
    predict_records,
)
from collabconf.models.boosting import (
    GAIN_TOLERANCE,
    GbmParams,
    GradientBoosting,
    best_split,
    boost,
    fit_gbm,
)
from collabconf.models.ernest import ernest_features, fit_ernest, nnls
from collabconf.models.linear import fit_linear, solve_linear
from collabconf.models.optimistic import FlatSpeedup, fit_poly3_ssm, fit_optimistic
from collabconf.synth import get_profile, synth_generate

SORT = JobSchema("sort", (Feature("data_size"),))


def sort_set(rows):
    """Return a sort training set from `(scale_out, size, runtime)` rows."""
    return TrainingSet(SORT, [RuntimeRecord("m5.xlarge", s, (size,), t) for s, size, t in rows])


## linear


def test_linear_matches_normal_equations():
    """least squares agrees with the normal-equations solution"""
    rng = np.random.default_rng(3)
    values = rng.uniform(1, 10, size=(30, 3))
    y = values @ np.array([2.0, -1.0, 0.5]) + 7.0 + rng.normal(0, 0.1, size=30)

    A = np.column_stack([np.ones(30), values])
    theta = np.linalg.solve(A.T @ A, A.T @ y)
    queries = rng.uniform(1, 10, size=(5, 3))
    want = np.column_stack([np.ones(5), queries]) @ theta

    test = solve_linear(values, y).predict_values(queries)
    assert np.allclose(test, want, rtol=1e-9, atol=0)


def test_linear_single_point():
    """one training point predicts its runtime everywhere"""
    model = fit_linear([[5.0]], [100.0])
    assert model.predict([[42.0]]).tolist() == [100.0]


def test_linear_clamped():
    """negative extrapolations clamp to 1 ms"""
    model = fit_linear([[1.0], [2.0]], [100.0, 50.0])
    assert model.predict([[10.0]]).tolist() == [1.0]


## boosting


def oracle_tree(x, target, depth, params):
    """Grow a regression tree on one feature by trying every threshold."""
    value = float(np.mean(target))
    if depth >= params.max_depth or len(target) < 2 * params.min_leaf:
        return (value,)

    parent = float(np.sum((target - target.mean()) ** 2))
    tol = GAIN_TOLERANCE * max(parent, 1.0)
    options = []
    levels = sorted(set(x.tolist()))
    for lo, hi in zip(levels, levels[1:]):
        threshold = (lo + hi) / 2.0
        left, right = target[x <= threshold], target[x > threshold]
        if len(left) < params.min_leaf or len(right) < params.min_leaf:
            continue
        sse = np.sum((left - left.mean()) ** 2) + np.sum((right - right.mean()) ** 2)
        options.append((parent - sse, threshold))
    if not options:
        return (value,)

    top = max(gain for gain, _ in options)
    gain, threshold = next(o for o in options if o[0] >= top - tol)
    if top <= tol:
        return (value,)

    mask = x <= threshold
    return (
        value,
        threshold,
        oracle_tree(x[mask], target[mask], depth + 1, params),
        oracle_tree(x[~mask], target[~mask], depth + 1, params),
    )


def oracle_value(tree, x):
    """Return the leaf value for one input."""
    while len(tree) > 1:
        tree = tree[2] if x <= tree[1] else tree[3]
    return tree[0]


def oracle_boost(x, y, queries, params):
    """Boost brute-force trees and predict `queries`."""
    init = float(np.mean(y))
    current = np.full(len(y), init)
    out = np.full(len(queries), init)
    for _ in range(params.n_rounds):
        tree = oracle_tree(x, y - current, 0, params)
        if len(tree) == 1 and tree[0] == 0.0:
            break
        current = current + params.learning_rate * np.array([oracle_value(tree, v) for v in x])
        out = out + params.learning_rate * np.array([oracle_value(tree, v) for v in queries])
    return out


def test_gbm_matches_brute_force():
    """boosting on small 1-D sets equals an exhaustive-search oracle"""
    rng = np.random.default_rng(11)
    params = GbmParams(n_rounds=20, learning_rate=0.1, max_depth=3, min_leaf=1)
    for size in range(2, 9):
        x = rng.permutation(np.arange(size, dtype=float))
        y = rng.integers(1, 100, size=size).astype(float)
        queries = np.linspace(-1.0, size, 13)

        want = oracle_boost(x, y, queries, params)
        test = boost(x.reshape(-1, 1), y, params).predict_values(queries.reshape(-1, 1))
        assert np.allclose(test, want, rtol=1e-12, atol=1e-9)


def test_gbm_two_points():
    """a single full-rate stump interpolates two points"""
    model = fit_gbm([[0.0], [1.0]], [0.0, 10.0], GbmParams(1, 1.0, 1, 1))
    assert model.regressor.predict_values(np.array([[0.0], [1.0]])).tolist() == [0.0, 10.0]


def test_gbm_constant_target():
    """a constant target grows no trees"""
    ensemble = boost(np.array([[1.0], [2.0], [3.0]]), np.array([500.0, 500.0, 500.0]))
    assert ensemble.trees == ()
    assert ensemble.predict_values(np.array([[9.0]])).tolist() == [500.0]


def test_gbm_deterministic():
    """identical inputs give identical predictions"""
    rng = np.random.default_rng(5)
    values = rng.uniform(0, 10, size=(40, 2))
    y = values[:, 0] * 3 + values[:, 1] ** 2
    one = boost(values, y).predict_values(values)
    two = boost(values, y).predict_values(values)
    assert one.tolist() == two.tolist()


def test_gbm_loss_never_increases():
    """every added tree lowers (or keeps) the training error"""
    rng = np.random.default_rng(8)
    values = rng.uniform(0, 10, size=(40, 2))
    y = values[:, 0] * 3 + values[:, 1] ** 2 + rng.normal(0, 0.5, size=40)
    ensemble = boost(values, y)

    losses = []
    for t in range(len(ensemble.trees) + 1):
        prefix = GradientBoosting(ensemble.init, ensemble.learning_rate, ensemble.trees[:t])
        losses.append(float(np.mean((y - prefix.predict_values(values)) ** 2)))
    assert len(losses) > 1
    assert all(b <= a * (1 + 1e-12) for a, b in zip(losses, losses[1:]))


def test_gbm_no_rounds_predicts_mean():
    """zero rounds leave only the mean"""
    values = np.array([[1.0], [2.0], [3.0]])
    ensemble = boost(values, np.array([1.0, 2.0, 6.0]), GbmParams(n_rounds=0))
    assert ensemble.predict_values(np.array([[0.0], [9.0]])).tolist() == [3.0, 3.0]


def test_split_between_adjacent_floats():
    """a split between neighbouring floats keeps one row on each side"""
    low = np.nextafter(1.0, 2.0)
    values = np.array([[low], [np.nextafter(low, 2.0)]])
    gain, feature, threshold = best_split(values, np.array([0.0, 10.0]), 1)
    assert (gain, feature, threshold) == (50.0, 0, low)
    assert int(np.sum(values[:, 0] <= threshold)) == 1

    ensemble = boost(values, np.array([0.0, 10.0]), GbmParams(1, 1.0, 1, 1))
    assert ensemble.predict_values(values).tolist() == [0.0, 10.0]


## Ernest


def test_nnls_recovers_planted():
    """noise-free data recovers the planted non-negative coefficients"""
    sizes = np.repeat([10.0, 20.0, 30.0], 6)
    scale_outs = np.tile([1.0, 2.0, 4.0, 6.0, 8.0, 12.0], 3)
    planted = np.array([5000.0, 300.0, 0.0, 20.0])
    runtimes = ernest_features(sizes, scale_outs) @ planted

    theta = fit_ernest(sizes, scale_outs, runtimes).regressor.theta
    assert np.allclose(theta, planted, rtol=1e-6, atol=1e-6)


def test_nnls_optimality():
    """solutions satisfy the non-negativity optimality conditions"""
    rng = np.random.default_rng(2)
    for _ in range(20):
        A = rng.normal(size=(12, 4))
        b = rng.normal(size=12)
        x, resid = nnls(A, b)
        w = A.T @ (b - A @ x)
        assert (x >= 0).all()
        assert (w[x == 0] <= 1e-9).all()
        assert np.allclose(w[x > 0], 0.0, atol=1e-9)
        assert resid == pytest.approx(np.linalg.norm(A @ x - b))


def test_ernest_ignores_context():
    """Ernest sees only the dataset size and the scale-out"""
    ts = sort_set([(s, 10.0, 1000.0 / s) for s in (1, 2, 4, 8)])
    model = fit_model("ERNEST", ts)
    assert model.model_id == "ERNEST"
    assert (model.regressor.theta >= 0).all()


def test_ernest_constant_runtime():
    """a constant runtime is all intercept"""
    sizes = np.repeat([10.0, 20.0, 30.0], 4)
    scale_outs = np.tile([2.0, 4.0, 8.0, 12.0], 3)
    theta = fit_ernest(sizes, scale_outs, np.full(12, 5000.0)).regressor.theta
    assert np.allclose(theta, [5000.0, 0.0, 0.0, 0.0], rtol=1e-9, atol=1e-6)


## optimistic


def amdahl(s):
    """Return an Amdahl speedup curve with a 10% serial share."""
    return 0.1 + 1.0 / s


def test_bom_multiplicative_ground_truth():
    """BOM recovers runtime = inputs term x speedup term"""
    rows = [
        (s, size, (1000.0 + 50.0 * size) * amdahl(s))
        for size in (10.0, 20.0, 30.0)
        for s in (1, 2, 4, 6, 8)
    ]
    model = fit_model("BOM", sort_set(rows))

    queries = [RuntimeRecord("m5.xlarge", s, (25.0,), 1.0) for s in (3, 5, 7)]
    want = np.array([(1000.0 + 50.0 * 25.0) * amdahl(s) for s in (3, 5, 7)])
    test = predict_records(model, queries)
    assert np.mean(np.abs(test - want) / want) < 0.02


def staggered_rows():
    """Return Amdahl runtimes where every size is first seen at another scale-out."""
    starts = {10.0: 2, 20.0: 4, 30.0: 6, 40.0: 8, 50.0: 10, 60.0: 2, 70.0: 4}
    return [
        (s, size, size * amdahl(s)) for size, start in starts.items() for s in range(start, 13, 2)
    ]


def test_optimistic_staggered_scale_outs():
    """groups first seen at different scale-outs share one speedup curve"""
    rows = staggered_rows()
    ssm = fit_poly3_ssm([s for s, _, _ in rows], [t for _, _, t in rows], [x for _, x, _ in rows])
    assert ssm.factor([4.0])[0] == pytest.approx(amdahl(4.0) / amdahl(1.0), rel=1e-4)

    unseen = [(4, 50.0), (6, 50.0), (2, 40.0), (2, 30.0), (2, 20.0), (2, 70.0)]
    queries = [RuntimeRecord("m5.xlarge", s, (size,), 1.0) for s, size in unseen]
    want = np.array([size * amdahl(s) for s, size in unseen])
    for model_id in ("BOM", "OGB"):
        test = predict_records(fit_model(model_id, sort_set(rows)), queries)
        assert np.mean(np.abs(test - want) / want) < 0.02, model_id


def test_optimistic_scale_equivariant():
    """scaling every runtime scales every prediction"""
    ts = synth_generate(get_profile("kmeans"), 60, seed=2)
    scaled = ts.replace(replace(r, gross_runtime=r.gross_runtime * 3.5) for r in ts.records)
    queries = synth_generate(get_profile("kmeans"), 10, seed=9).records
    for model_id in ("BOM", "OGB"):
        base = predict_records(fit_model(model_id, ts), queries)
        test = predict_records(fit_model(model_id, scaled), queries)
        assert np.allclose(test, 3.5 * base, rtol=1e-6, atol=0), model_id


def test_speedup_is_one_at_one():
    """the speedup factor is normalized at scale-out 1"""
    ssm = fit_poly3_ssm([2, 4, 8, 2, 4, 8], [50.0, 30.0, 20.0, 100.0, 60.0, 40.0], [0, 0, 0, 1, 1, 1])
    assert ssm.factor([1.0])[0] == pytest.approx(1.0)


def test_bom_needs_scale_out_variation():
    """BOM cannot be trained when no context repeats across scale-outs"""
    ts = sort_set([(2, 10.0, 100.0), (4, 20.0, 120.0), (8, 30.0, 150.0)])
    with pytest.raises(InsufficientScaleOutVariation):
        fit_model("BOM", ts)


def test_ogb_flat_without_variation():
    """OGB falls back to a flat speedup curve"""
    ts = sort_set([(4, 10.0, 100.0), (4, 20.0, 200.0), (4, 30.0, 300.0)])
    model = fit_optimistic(ts, "gbm", "gbm")
    assert isinstance(model.ssm, FlatSpeedup)

    fitted = fit_model("OGB", ts)
    assert np.isfinite(fitted.predict(fitted.encode(ts.records))).all()


## registry


def test_unknown_model():
    """unregistered ids are errors"""
    with pytest.raises(UnknownModel):
        fit_model("NOPE", sort_set([(2, 10.0, 1.0)]))


def test_empty_training_set():
    """no model trains on zero records"""
    with pytest.raises(EmptyTrainingSet):
        fit_model("GBM", TrainingSet(SORT, []))


def test_fingerprint_mismatch():
    """matrices from another encoding are refused"""
    model = fit_model("GBM", sort_set([(2, 10.0, 100.0), (4, 10.0, 60.0)]))
    with pytest.raises(SchemaFingerprintMismatch):
        model.predict(FeatureMatrix.of([[2.0, 10.0]], scale_out=0))


def test_candidate_order():
    """built-in models come in a fixed order"""
    assert candidate_order() == ["GBM", "BOM", "OGB", "ERNEST"]
    assert candidate_order(["OGB", "GBM"]) == ["GBM", "OGB"]


def test_load_plugins(tmp_path):
    """a manifest registers custom models after the built-ins"""
    (tmp_path / "collabconf_mean_model.py").write_text(
        "import numpy as np\n"
        "from collabconf.models import FittedModel, register\n"
        "from collabconf.dataset import encode\n"
        "\n"
        "class Mean:\n"
        "    def __init__(self, value):\n"
        "        self.value = value\n"
        "    def predict(self, X):\n"
        "        return np.full(len(X), self.value)\n"
        "\n"
        "@register('MEAN')\n"
        "def mean(ts):\n"
        "    encoder, X, y = encode(ts)\n"
        "    return FittedModel('MEAN', Mean(float(y.mean())), encoder.fingerprint, encoder)\n"
    )
    manifest = tmp_path / "models.txt"
    manifest.write_text("# custom models\nMEAN = collabconf_mean_model\n")
    try:
        assert load_plugins(manifest) == ["MEAN"]
        assert candidate_order()[-1] == "MEAN"
        model = fit_model("MEAN", sort_set([(2, 10.0, 100.0), (4, 10.0, 300.0)]))
        assert model.predict(model.encode(RuntimeRecord("m5.xlarge", 8, (1.0,), 1.0))).tolist() == [
            200.0
        ]
    finally:
        MODELS.pop("MEAN", None)
        if "MEAN" in PLUGINS:
            PLUGINS.remove("MEAN")
        sys.modules.pop("collabconf_mean_model", None)


def test_plugin_must_register(tmp_path):
    """a module that does not register its id is an error"""
    (tmp_path / "collabconf_empty_plugin.py").write_text("VALUE = 1\n")
    manifest = tmp_path / "models.txt"
    manifest.write_text("EMPTY = collabconf_empty_plugin\n")
    try:
        with pytest.raises(PluginError):
            load_plugins(manifest)
    finally:
        sys.modules.pop("collabconf_empty_plugin", None)
