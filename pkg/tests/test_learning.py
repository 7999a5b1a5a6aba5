import numpy as np
import pytest

from cfair import (
    CausalModel,
    Dataset,
    DimensionMismatch,
    EmptyInputs,
    InvalidPath,
    LinearGaussian,
    McmcConfig,
    NormalPrior,
    Role,
    StructuralEquation,
    UnknownVariable,
    Variable,
    ancestral_sample,
    baseline_fit,
    fair_learning,
    fair_predict,
    level1_inputs,
    load_predictor,
    ols_fit,
    save_predictor,
    design_matrix,
)
from helpers import (high_crime, law_school, linear_predictor, manifest_for,
                     observed_only as _observed_only, red_car)


def _weight(predictor, label: str) -> float:
    return float(predictor.weights[predictor.labels.index(label)])


# ---------------------------------------------------------------------------
# admissible-input discovery


def test_level1_inputs_empty_when_everything_descends():
    for model in (law_school(n=1)[0], high_crime(n=1)[0]):
        manifest = level1_inputs(model)
        assert manifest.observable_inputs == frozenset()
        assert manifest.background_inputs == frozenset()
        assert not manifest.include_protected


def test_level1_inputs_pick_up_disconnected_observables():
    model = CausalModel(
        variables=(Variable("A", Role.PROTECTED, (0, 1)),
                   Variable("U", Role.BACKGROUND),
                   Variable("Z", Role.OBSERVED),
                   Variable("X", Role.OBSERVED),
                   Variable("Y", Role.OUTCOME)),
        equations=(StructuralEquation("X", ("A", "U"), LinearGaussian(0.0, (1.0, 1.0), 0.0)),
                   StructuralEquation("Y", ("X",), LinearGaussian(0.0, (1.0,), 0.0))),
        priors={"A": NormalPrior(0.0, 1.0), "U": NormalPrior(0.0, 1.0),
                "Z": NormalPrior(0.0, 1.0)})
    manifest = level1_inputs(model)
    assert manifest.observable_inputs == frozenset({"Z"})
    manifest.validate(model)


# ---------------------------------------------------------------------------
# latent-input training


def test_fair_learning_recovers_latent_weight_exactly():
    # zero structural noise plus an invertible mixing makes the posterior a
    # point mass, so the stacked fit is ordinary regression on the true latent
    model, data = red_car(n=2000, seed=5)
    manifest = manifest_for(model, backgrounds=("U",))
    predictor = fair_learning(data, model, manifest, config=McmcConfig(seed=1))
    assert abs(_weight(predictor, "U") - 1.0) <= 1e-6
    assert abs(_weight(predictor, "intercept")) <= 1e-6


def test_fair_learning_single_draw_equals_regression_on_true_latent():
    model, data = red_car(n=500, seed=9)
    manifest = manifest_for(model, backgrounds=("U",))
    predictor = fair_learning(data, model, manifest,
                              config=McmcConfig(chains=1, kept=1, seed=3))
    assert predictor.training["draws_per_record"] == 1
    design, _ = design_matrix(Dataset(("U",), {"U": data.column("U")}), ("U",))
    direct = ols_fit(design, data.numeric("Y"))
    assert np.allclose(predictor.weights, direct.weights, atol=1e-9)


def test_fair_predict_matches_deduced_latent_formula():
    alpha, beta = 1.5, 2.0
    model, data = red_car(n=400, seed=2, alpha=alpha, beta=beta)
    manifest = manifest_for(model, backgrounds=("U",))
    predictor = fair_learning(data, model, manifest, config=McmcConfig(seed=0))
    test = _observed_only(model, data).take(np.arange(50))
    got = fair_predict(predictor, model, test, config=McmcConfig(seed=4))
    u = (test.numeric("X") - alpha * test.numeric("A")) / beta
    want = _weight(predictor, "intercept") + _weight(predictor, "U") * u
    assert np.allclose(got, want, atol=1e-9)


def test_zero_weight_predictor_scores_zero():
    model, _ = red_car(n=1)
    manifest = manifest_for(model, backgrounds=("U",))
    predictor = linear_predictor(model, manifest, weights={})
    scores = predictor.score({"U": np.linspace(-3, 3, 7)})
    assert np.array_equal(scores, np.zeros(7))


def test_records_with_equal_deduced_latent_predict_equally():
    alpha, beta = 0.7, 1.3
    model, data = red_car(n=300, seed=6, alpha=alpha, beta=beta)
    manifest = manifest_for(model, backgrounds=("U",))
    predictor = fair_learning(data, model, manifest, config=McmcConfig(seed=0))
    # both records deduce U = 1 exactly despite different protected values
    test = Dataset(("A", "X"), {"A": np.array([-1.0, 1.0]),
                                "X": np.array([beta - alpha, beta + alpha])})
    got = fair_predict(predictor, model, test, config=McmcConfig(seed=8))
    assert abs(got[0] - got[1]) <= 1e-9


# ---------------------------------------------------------------------------
# baselines


def test_baseline_fits_match_population_values():
    model, data = red_car(n=1_000_000, seed=21)
    obs = _observed_only(model, data)
    unaware = baseline_fit(obs, "unaware", "Y", protected=("A",))
    assert abs(_weight(unaware, "X") - 0.5) <= 0.01
    full = baseline_fit(obs, "full", "Y", protected=("A",))
    assert abs(_weight(full, "X") - 1.0) <= 0.01
    assert abs(_weight(full, "A") + 1.0) <= 0.01


def test_baseline_kind_checked():
    _, data = red_car(n=10)
    with pytest.raises(DimensionMismatch):
        baseline_fit(data, "oracle", "Y")


# ---------------------------------------------------------------------------
# draw-count stability


def _noisy_latent_model() -> CausalModel:
    return CausalModel(
        variables=(Variable("A", Role.PROTECTED),
                   Variable("U", Role.BACKGROUND),
                   Variable("X", Role.OBSERVED),
                   Variable("Y", Role.OUTCOME)),
        equations=(StructuralEquation("X", ("A", "U"), LinearGaussian(0.0, (1.0, 1.0), 0.5)),
                   StructuralEquation("Y", ("U",), LinearGaussian(0.0, (1.0,), 0.5))),
        priors={"A": NormalPrior(0.0, 1.0), "U": NormalPrior(0.0, 1.0)})


def test_latent_weight_stable_in_draw_count():
    # posterior var(U | A, X) = 0.2, so the stacked regression slope tends to
    # var(E[U|ev]) / var(U) = 0.8 regardless of how many draws augment a record
    model = _noisy_latent_model()
    data = ancestral_sample(model, 4000, seed=13)
    manifest = manifest_for(model, backgrounds=("U",))
    slopes = {}
    for m in (10, 50, 200):
        cfg = McmcConfig(chains=1, kept=m, seed=7)
        slopes[m] = _weight(fair_learning(data, model, manifest, config=cfg), "U")
    for slope in slopes.values():
        assert abs(slope - 0.8) <= 0.1
    assert max(slopes.values()) - min(slopes.values()) <= 0.05


# ---------------------------------------------------------------------------
# persistence


def test_save_load_round_trip_is_bit_exact(tmp_path):
    model, data = red_car(n=800, seed=17)
    manifest = manifest_for(model, backgrounds=("U",))
    predictor = fair_learning(data, model, manifest, config=McmcConfig(seed=2))
    path = tmp_path / "predictor.json"
    save_predictor(predictor, path)
    loaded = load_predictor(path)
    assert loaded.labels == predictor.labels
    assert np.array_equal(loaded.weights, predictor.weights)
    cols = {"U": np.linspace(-2, 2, 9)}
    assert np.array_equal(loaded.score(cols), predictor.score(cols))
    assert loaded.training == predictor.training


# ---------------------------------------------------------------------------
# manifest validation


def test_manifest_rejects_descendant_observable():
    model, data = red_car(n=20)
    manifest = manifest_for(model, observables=("X",))
    with pytest.raises(InvalidPath):
        manifest.validate(model)
    with pytest.raises(InvalidPath):
        fair_learning(data, model, manifest)


def test_manifest_whitelist_overrides_descendant_check():
    model, _ = red_car(n=1)
    manifest = manifest_for(model, observables=("X",), whitelist=("X",))
    manifest.validate(model)


def test_manifest_rejects_non_background_as_background():
    model, _ = red_car(n=1)
    with pytest.raises(DimensionMismatch):
        manifest_for(model, backgrounds=("X",)).validate(model)


def test_manifest_rejects_protected_listed_as_observable():
    model, _ = red_car(n=1)
    with pytest.raises(DimensionMismatch):
        manifest_for(model, observables=("A",)).validate(model)


def test_manifest_rejects_unknown_names():
    model, _ = red_car(n=1)
    with pytest.raises(UnknownVariable):
        manifest_for(model, observables=("W",)).validate(model)


def test_empty_manifest_cannot_train():
    model, data = red_car(n=20)
    with pytest.raises(EmptyInputs):
        fair_learning(data, model, manifest_for(model))
