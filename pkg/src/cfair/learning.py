"""Training predictors whose inputs cannot transmit protected-attribute effects.

A predictor built only from non-descendants of the protected set is invariant
under protected-value interventions, draw by draw. The manifest records which
inputs a predictor is allowed to see; training over latent background inputs
integrates over their per-record posterior by augmenting each record with m
posterior draws and fitting on the stacked rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .counterfactual import McmcConfig, posterior_draw_matrix
from .dataset import Dataset
from .errors import DimensionMismatch, EmptyInputs, InvalidPath, UnknownVariable
from .estimators import LinearFit, design_matrix, logistic_fit, ols_fit
from .scm import CausalModel, Role, non_descendants


@dataclass(frozen=True)
class InputManifest:
    """Declares a predictor's allowed inputs against a causal model.

    background_inputs  latent variables, read through per-record posteriors
    observable_inputs  data columns fed in directly (never the protected set)
    include_protected  whether the protected columns themselves are inputs
    whitelisted        observables exempt from the non-descendant requirement
    """

    background_inputs: frozenset[str]
    observable_inputs: frozenset[str]
    include_protected: bool
    protected: tuple[str, ...]
    whitelisted: frozenset[str] = frozenset()

    def validate(self, model: CausalModel) -> None:
        known = set(model.variable_map)
        for name in self.background_inputs | self.observable_inputs | set(self.protected):
            if name not in known:
                raise UnknownVariable(name)
        bad = self.background_inputs - set(model.background)
        if bad:
            raise DimensionMismatch(f"not background variables: {sorted(bad)}")
        overlap = self.observable_inputs & set(self.protected)
        if overlap:
            raise DimensionMismatch(
                f"protected columns {sorted(overlap)} listed as observables; "
                "use include_protected instead")
        if not self.include_protected:
            safe = non_descendants(model, set(self.protected))
            leaking = self.observable_inputs - safe - self.whitelisted
            if leaking:
                raise InvalidPath(
                    f"observable inputs {sorted(leaking)} descend from the protected set "
                    "and are not whitelisted")

    def input_order(self) -> tuple[str, ...]:
        cols = sorted(self.background_inputs) + sorted(self.observable_inputs)
        if self.include_protected:
            cols += sorted(self.protected)
        return tuple(cols)

    def to_json(self) -> dict:
        return {"background_inputs": sorted(self.background_inputs),
                "observable_inputs": sorted(self.observable_inputs),
                "include_protected": self.include_protected,
                "protected": list(self.protected),
                "whitelisted": sorted(self.whitelisted)}

    @staticmethod
    def from_json(blob: dict) -> "InputManifest":
        return InputManifest(frozenset(blob["background_inputs"]),
                             frozenset(blob["observable_inputs"]),
                             bool(blob["include_protected"]),
                             tuple(blob["protected"]),
                             frozenset(blob.get("whitelisted", ())))


def level1_inputs(model: CausalModel) -> InputManifest:
    """Manifest using only the observable non-descendants of the protected set."""
    protected = model.protected
    safe = non_descendants(model, set(protected))
    observable = {v.name for v in model.variables
                  if v.role in (Role.OBSERVED,) and v.name in safe}
    return InputManifest(frozenset(), frozenset(observable), False, protected)


@dataclass
class FairPredictor:
    """Linear or logistic head over manifest inputs.

    For manifests with background inputs, prediction for a record averages the
    head over m posterior draws of those backgrounds given the record's
    observable evidence.
    """

    manifest: InputManifest
    head: str                       # "linear" | "logistic"
    labels: tuple[str, ...]
    weights: np.ndarray
    encoders: dict[str, tuple[str, ...]]
    training: dict
    diagnostics: dict = field(default_factory=dict)

    def design_from(self, columns: dict[str, np.ndarray]) -> np.ndarray:
        order = self.manifest.input_order()
        n = len(next(iter(columns.values()))) if columns else 0
        data = Dataset(tuple(order), {c: np.asarray(columns[c]) for c in order}, {})
        design, _ = design_matrix(data, order, encoders=self.encoders)
        if design.labels != self.labels:
            raise DimensionMismatch(
                f"design labels {design.labels} do not match fit labels {self.labels}")
        return design.matrix

    def score(self, columns: dict[str, np.ndarray]) -> np.ndarray:
        """Head output for fully specified input columns (one row per entry)."""
        eta = self.design_from(columns) @ self.weights
        return expit(eta) if self.head == "logistic" else eta

    def to_json(self) -> dict:
        return {"manifest": self.manifest.to_json(),
                "head": self.head,
                "labels": list(self.labels),
                "weights": [float(w) for w in self.weights],
                "encoders": {k: list(v) for k, v in sorted(self.encoders.items())},
                "training": self.training,
                "diagnostics": self.diagnostics}

    @staticmethod
    def from_json(blob: dict) -> "FairPredictor":
        return FairPredictor(InputManifest.from_json(blob["manifest"]),
                             blob["head"],
                             tuple(blob["labels"]),
                             np.array(blob["weights"], dtype=np.float64),
                             {k: tuple(v) for k, v in blob["encoders"].items()},
                             blob["training"],
                             blob.get("diagnostics", {}))


def save_predictor(predictor: FairPredictor, path) -> None:
    with open(path, "w") as fh:
        json.dump(predictor.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_predictor(path) -> FairPredictor:
    with open(path) as fh:
        return FairPredictor.from_json(json.load(fh))


def _evidence_for(model: CausalModel, data: Dataset) -> dict[str, np.ndarray]:
    """All observed/protected columns of the model present in the data."""
    names = set(model.protected) | set(model.names(Role.OBSERVED))
    return {name: data.column(name) for name in data.columns if name in names}


def _fit_head(head: str, design, y) -> LinearFit:
    if head == "logistic":
        return logistic_fit(design, y)
    if head == "linear":
        return ols_fit(design, y)
    raise DimensionMismatch(f"unknown head {head!r}")


def fair_learning(data: Dataset, model: CausalModel, manifest: InputManifest,
                  head: str = "linear", config: McmcConfig = McmcConfig(),
                  outcome: str | None = None) -> FairPredictor:
    """Fit a head on manifest inputs, integrating latent inputs over their posterior.

    Each record is expanded into m = chains * kept rows, one per posterior draw
    of the background inputs given that record's observable evidence; the head
    is then fit on the stacked design (squared loss for "linear", log loss for
    "logistic"). With no background inputs this reduces to a plain fit.
    Deterministic given (data, config.seed).
    """
    manifest.validate(model)
    if not manifest.background_inputs and not manifest.observable_inputs \
            and not manifest.include_protected:
        raise EmptyInputs("manifest selects no inputs")
    outcome = outcome or model.outcome[0]
    y = data.numeric(outcome)
    if data.n == 0:
        raise EmptyInputs("empty training data")

    backgrounds = sorted(manifest.background_inputs)
    if backgrounds:
        evidence = {k: v for k, v in _evidence_for(model, data).items() if k != outcome}
        draws = posterior_draw_matrix(model, evidence, config, names=tuple(backgrounds))
        m = draws.shape[1]
        columns: dict[str, np.ndarray] = {}
        for j, name in enumerate(backgrounds):
            columns[name] = draws[:, :, j].reshape(-1)
        for name in manifest.input_order():
            if name not in columns:
                columns[name] = np.repeat(data.column(name), m)
        y_fit = np.repeat(y, m)
    else:
        m = 1
        columns = {name: data.column(name) for name in manifest.input_order()}
        y_fit = y

    order = manifest.input_order()
    fit_data = Dataset(order, columns, dict(data.domains))
    design, encoders = design_matrix(fit_data, order)
    fit = _fit_head(head, design, y_fit)
    return FairPredictor(
        manifest=manifest, head=head, labels=fit.labels, weights=fit.weights,
        encoders=encoders,
        training={"outcome": outcome, "loss": "log" if head == "logistic" else "squared",
                  "draws_per_record": m, "seed": config.seed,
                  "chains": config.chains, "burn_in": config.burn_in,
                  "kept": config.kept, "thin": config.thin},
        diagnostics={"residual_std": fit.residual_std, "warning": fit.warning,
                     "n_records": data.n})


def fair_predict(predictor: FairPredictor, model: CausalModel, data: Dataset,
                 config: McmcConfig | None = None) -> np.ndarray:
    """Per-record predictions; latent inputs are posterior-averaged per record."""
    backgrounds = sorted(predictor.manifest.background_inputs)
    if not backgrounds:
        cols = {name: data.column(name) for name in predictor.manifest.input_order()}
        return predictor.score(cols)
    cfg = config or McmcConfig(seed=predictor.training.get("seed", 0))
    evidence = {k: v for k, v in _evidence_for(model, data).items()
                if k != predictor.training.get("outcome")}
    draws = posterior_draw_matrix(model, evidence, cfg, names=tuple(backgrounds))
    m = draws.shape[1]
    columns: dict[str, np.ndarray] = {}
    for j, name in enumerate(backgrounds):
        columns[name] = draws[:, :, j].reshape(-1)
    for name in predictor.manifest.input_order():
        if name not in columns:
            columns[name] = np.repeat(data.column(name), m)
    scores = predictor.score(columns).reshape(data.n, m)
    return scores.mean(axis=1)


def baseline_fit(data: Dataset, kind: str, outcome: str, head: str = "linear",
                 protected: tuple[str, ...] = ()) -> FairPredictor:
    """Fit a conventional baseline directly on data columns.

    kind "full" uses every column (protected included); kind "unaware" drops
    the protected columns but keeps their descendants, which is the point of
    auditing it. The returned manifest whitelists the observables so it can be
    validated against any model without claiming counterfactual safety.
    """
    if kind not in ("full", "unaware"):
        raise DimensionMismatch(f"unknown baseline kind {kind!r}")
    observables = [c for c in data.columns if c != outcome and c not in protected]
    if not observables and not (kind == "full" and protected):
        raise EmptyInputs("no input columns left")
    manifest = InputManifest(
        background_inputs=frozenset(),
        observable_inputs=frozenset(observables),
        include_protected=(kind == "full"),
        protected=tuple(protected),
        whitelisted=frozenset(observables))
    y = data.numeric(outcome)
    order = manifest.input_order()
    fit_data = Dataset(order, {c: data.column(c) for c in order}, dict(data.domains))
    design, encoders = design_matrix(fit_data, order)
    fit = _fit_head(head, design, y)
    return FairPredictor(
        manifest=manifest, head=head, labels=fit.labels, weights=fit.weights,
        encoders=encoders,
        training={"outcome": outcome, "loss": "log" if head == "logistic" else "squared",
                  "kind": kind, "draws_per_record": 1, "seed": 0},
        diagnostics={"residual_std": fit.residual_std, "warning": fit.warning,
                     "n_records": data.n})


def additive_fair_fit(data: Dataset, model: CausalModel, outcome: str) -> FairPredictor:
    """Fit on residuals of protected-descendant observables (additive correction).

    Each observable column that descends from the protected set is replaced by
    the residual from regressing it on the protected columns; a linear head is
    then fit on residualized observables plus untouched non-descendants. The
    residualization is folded back into affine weights over the raw columns
    plus the protected columns, so the returned predictor evaluates directly
    on raw records. Numeric columns only; valid for squared loss.
    """
    from .estimators import level3_residuals

    protected = model.protected
    observables = [c for c in data.columns
                   if c != outcome and c not in protected and c in model.variable_map]
    if not observables:
        raise EmptyInputs("no observable columns")
    safe = non_descendants(model, set(protected))
    touched = [c for c in observables if c not in safe]
    with_eps = level3_residuals(data, touched, list(protected)) if touched else data

    cols = [c if c in safe else f"eps_{c}" for c in observables]
    fit_data = Dataset(tuple(cols), {c: with_eps.column(c) for c in cols},
                       dict(data.domains))
    design, _ = design_matrix(fit_data, cols)
    fit = ols_fit(design, data.numeric(outcome))

    # eps_X = X - (c0 + c.P): substitute to get affine weights on raw columns.
    # Label order must match input_order() so design_from lines up at predict time.
    folded_labels = ["intercept"] + sorted(observables) + sorted(protected)
    folded = {lab: 0.0 for lab in folded_labels}
    try:
        folded["intercept"] = fit.coefficient("intercept")
        for c in observables:
            w = fit.coefficient(c if c in safe else f"eps_{c}")
            folded[c] = w
            if c in touched:
                sub_design, _ = design_matrix(data, list(protected))
                sub = ols_fit(sub_design, data.numeric(c))
                folded["intercept"] -= w * sub.coefficient("intercept")
                for p in protected:
                    folded[p] -= w * sub.coefficient(p)
    except ValueError as exc:  # one-hot label: a column was not numeric
        raise DimensionMismatch(
            "additive correction requires numeric observables and protected columns") from exc

    manifest = InputManifest(frozenset(), frozenset(observables), True,
                             tuple(protected), frozenset(observables))
    labels = tuple(folded_labels)
    weights = np.array([folded[lab] for lab in labels])
    return FairPredictor(
        manifest=manifest, head="linear", labels=labels, weights=weights,
        encoders={}, training={"outcome": outcome, "loss": "squared",
                               "kind": "fair_add", "draws_per_record": 1, "seed": 0},
        diagnostics={"residual_std": fit.residual_std, "warning": fit.warning,
                     "n_records": data.n, "residualized": touched})
