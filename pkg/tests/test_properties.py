"""Invariants checked over randomly built linear models."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from cfair import (
    CategoricalPrior,
    CausalModel,
    InvalidPath,
    LinearGaussian,
    McmcConfig,
    NormalPrior,
    Role,
    ScenarioParams,
    StructuralEquation,
    Variable,
    ancestral_sample,
    cf_fairness_test,
    descendants,
    intervene,
    ks_2sample,
    model_from_json,
    model_to_json,
    non_descendants,
    oracle,
    strict_cf_check,
)
from helpers import linear_predictor, manifest_for, model_signature

_WEIGHT = st.floats(min_value=-2.0, max_value=2.0,
                    allow_nan=False, allow_infinity=False)


@st.composite
def linear_models(draw) -> CausalModel:
    """Random acyclic linear model: protected A, latent U, mid layer, outcome Y.

    The first mid variable always takes A as a parent, so the model is
    guaranteed to contain a protected-descendant observable.
    """
    n_mid = draw(st.integers(min_value=1, max_value=3))
    mids = [f"X{i}" for i in range(n_mid)]
    variables = [Variable("A", Role.PROTECTED, (-1.0, 1.0)),
                 Variable("U", Role.BACKGROUND)]
    variables += [Variable(m, Role.OBSERVED) for m in mids]
    variables.append(Variable("Y", Role.OUTCOME))
    equations = []
    pool = ["U", "A"]
    for i, mid in enumerate(mids):
        if i == 0:
            parents = ["A"] + draw(st.lists(st.sampled_from(["U"]), max_size=1,
                                            unique=True))
        else:
            parents = draw(st.lists(st.sampled_from(pool), min_size=1,
                                    max_size=len(pool), unique=True))
        weights = tuple(draw(_WEIGHT) for _ in parents)
        noise = draw(st.sampled_from((0.0, 0.3)))
        equations.append(StructuralEquation(mid, tuple(parents),
                                            LinearGaussian(0.0, weights, noise)))
        pool.append(mid)
    y_parents = draw(st.lists(st.sampled_from(pool), min_size=1,
                              max_size=len(pool), unique=True))
    equations.append(StructuralEquation(
        "Y", tuple(y_parents),
        LinearGaussian(0.0, tuple(draw(_WEIGHT) for _ in y_parents), 0.0)))
    return CausalModel(tuple(variables), tuple(equations),
                       {"A": CategoricalPrior((-1.0, 1.0), (0.5, 0.5)),
                        "U": NormalPrior(0.0, 1.0)})


_TARGETS = st.one_of(
    st.tuples(st.just("A"), st.sampled_from((-1.0, 1.0))),  # respects the domain
    st.tuples(st.sampled_from(("X0", "Y")), st.floats(-2, 2, allow_nan=False)))


@given(linear_models(), _TARGETS)
def test_intervention_is_idempotent(model, target):
    name, value = target
    once = intervene(model, {name: value})
    twice = intervene(once, {name: value})
    assert model_signature(once) == model_signature(twice)


@given(linear_models(), st.sampled_from((-1.0, 1.0)),
       st.floats(-2, 2, allow_nan=False))
def test_interventions_commute(model, v1, v2):
    joint = intervene(model, {"A": v1, "X0": v2})
    one_way = intervene(intervene(model, {"A": v1}), {"X0": v2})
    other_way = intervene(intervene(model, {"X0": v2}), {"A": v1})
    assert model_signature(joint) == model_signature(one_way)
    assert model_signature(one_way) == model_signature(other_way)


@given(linear_models(), st.sets(st.sampled_from(["A", "U", "X0", "Y"]),
                                min_size=1, max_size=2))
def test_descendant_split_partitions_the_graph(model, seeds):
    down = descendants(model, seeds)
    up = non_descendants(model, seeds)
    names = {v.name for v in model.variables}
    assert down | up == names
    assert down & up == set()
    assert seeds <= down


@given(linear_models(), st.integers(min_value=0, max_value=2 ** 32))
def test_sampling_is_seed_deterministic(model, seed):
    first = ancestral_sample(model, 20, seed)
    second = ancestral_sample(model, 20, seed)
    assert first.columns == second.columns
    for c in first.columns:
        assert np.array_equal(first.column(c), second.column(c))


@given(linear_models(), st.floats(-2, 2, allow_nan=False))
def test_intervened_column_is_pinned(model, value):
    data = ancestral_sample(intervene(model, {"X0": value}), 25, seed=1)
    assert np.allclose(data.numeric("X0"), value)


@given(linear_models())
def test_serialization_round_trip(model):
    assert model_signature(model_from_json(model_to_json(model))) \
        == model_signature(model)


@given(st.lists(st.integers(0, 5), min_size=1, max_size=60),
       st.lists(st.integers(0, 5), min_size=1, max_size=60))
def test_ks_agrees_with_reference_implementation(xs, ys):
    x, y = np.array(xs, dtype=float), np.array(ys, dtype=float)
    assert ks_2sample(x, y) == pytest.approx(stats.ks_2samp(x, y).statistic,
                                             abs=1e-12)


@given(st.floats(0.25, 2.0), st.floats(0.25, 2.0), st.floats(-2.0, 2.0),
       st.floats(0.0, 1.5), st.floats(-1.5, 1.5), st.sampled_from((0, 1)))
def test_oracle_decomposition_identities(alpha, beta, gamma, theta, eta, pick):
    params = {"alpha": alpha, "beta": beta, "gamma": gamma}
    if pick == 0:
        kind = "high_crime"
        params["theta"] = theta
    else:
        kind = "university"
        params["eta"] = eta
    values = oracle(ScenarioParams(kind=kind, params=params)).values
    # substituting X = alpha a + beta U into the fitted heads must reproduce
    # the (U, a) coefficients reported alongside them
    assert values["full_coef_u"] == pytest.approx(
        values["full_weight_x"] * beta, rel=1e-9, abs=1e-9)
    assert values["full_coef_a"] == pytest.approx(
        values["full_weight_x"] * alpha + values["full_weight_a"],
        rel=1e-9, abs=1e-9)
    assert values["unaware_coef_u"] == pytest.approx(
        values["unaware_slope"] * beta, rel=1e-9, abs=1e-9)
    assert values["var_x"] > 0


@settings(max_examples=10)
@given(linear_models(), st.integers(0, 100))
def test_null_flip_never_registers(model, seed):
    data = ancestral_sample(model, 30, seed=seed)
    predictor = linear_predictor(
        model, manifest_for(model, observables=tuple(
            n for n in data.columns if n.startswith("X")),
            whitelist=tuple(n for n in data.columns if n.startswith("X"))),
        {n: 1.0 for n in data.columns if n.startswith("X")})
    report = cf_fairness_test(model, predictor, data, {"A": 1.0}, {"A": 1.0},
                              config=McmcConfig(seed=seed), draws=25,
                              max_records=6)
    assert report.aggregate == 0.0
    assert report.passed


@settings(max_examples=10)
@given(linear_models(), st.booleans())
def test_strict_pass_implies_distribution_pass(model, include_u):
    data = ancestral_sample(model, 30, seed=3)
    inputs = tuple(n for n in data.columns if n.startswith("X"))
    manifest = manifest_for(model,
                            backgrounds=("U",) if include_u else (),
                            observables=inputs, whitelist=inputs)
    predictor = linear_predictor(model, manifest,
                                 {n: 0.7 for n in manifest.input_order()})
    strict = strict_cf_check(model, predictor, data, {"A": 1.0}, {"A": -1.0},
                             config=McmcConfig(seed=1), draws=25, max_records=6)
    plain = cf_fairness_test(model, predictor, data, {"A": 1.0}, {"A": -1.0},
                             config=McmcConfig(seed=1), draws=25, max_records=6)
    if strict.passed:
        assert plain.passed


@given(linear_models())
def test_descendant_inputs_must_be_whitelisted(model):
    manifest = manifest_for(model, observables=("X0",))
    with pytest.raises(InvalidPath):
        manifest.validate(model)
