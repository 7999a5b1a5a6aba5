"""Structural causal models over a closed family of equation types.

A model is (variables, equations, priors): background variables carry priors,
every other variable carries exactly one structural equation, except that a
parentless root (a protected attribute, typically) may carry a prior instead,
mirroring the usual treatment of exogenous attributes. Equation families are
a closed enumeration so that validation, sampling, abduction and serialization
can each handle every case exactly:

* LinearGaussian      child = intercept + weights . parents + N(0, noise_std^2)
* PoissonLogLink      child ~ Poisson(exp(intercept + weights . parents))
* BernoulliLogit      child ~ Bernoulli(sigmoid(intercept + weights . parents))
* DeterministicTable  total lookup table over finite parent domains

Sampling is counter-keyed per (seed, variable, row); see rng.py.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Union

import numpy as np
import scipy.stats
from scipy.special import expit, ndtri

from . import rng
from .dataset import Dataset
from .errors import (
    InterveneOnBackground,
    ModelValidationError,
    NonFiniteDensity,
    UnattainableValue,
    UnknownVariable,
)

TWIN_FACTUAL = "@f"
TWIN_COUNTERFACTUAL = "@f'"

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(@f'?)?$")


class Role(str, Enum):
    PROTECTED = "protected"
    OBSERVED = "observed"
    OUTCOME = "outcome"
    BACKGROUND = "background"


@dataclass(frozen=True)
class Variable:
    name: str
    role: Role
    domain: tuple | None = None  # None means real-valued

    def __post_init__(self):
        if self.domain is not None:
            object.__setattr__(self, "domain", tuple(self.domain))


@dataclass(frozen=True)
class LinearGaussian:
    intercept: float
    weights: tuple[float, ...]
    noise_std: float

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))


@dataclass(frozen=True)
class PoissonLogLink:
    intercept: float
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))


@dataclass(frozen=True)
class BernoulliLogit:
    intercept: float
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))


@dataclass(frozen=True)
class DeterministicTable:
    """Total mapping from parent value tuples to a child value."""

    entries: tuple

    def __init__(self, entries):
        if isinstance(entries, dict):
            items = entries.items()
        else:
            items = entries
        norm = tuple(sorted(((tuple(k), v) for k, v in items), key=lambda e: repr(e[0])))
        object.__setattr__(self, "entries", norm)

    @property
    def mapping(self) -> dict:
        return dict(self.entries)


Family = Union[LinearGaussian, PoissonLogLink, BernoulliLogit, DeterministicTable]


@dataclass(frozen=True)
class StructuralEquation:
    child: str
    parents: tuple[str, ...]
    family: Family

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))


@dataclass(frozen=True)
class NormalPrior:
    mean: float = 0.0
    std: float = 1.0


@dataclass(frozen=True)
class CategoricalPrior:
    values: tuple
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))


Prior = Union[NormalPrior, CategoricalPrior]


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    issues: tuple[ValidationIssue, ...]
    topological_order: tuple[str, ...]

    def raise_if_invalid(self):
        if not self.ok:
            raise ModelValidationError(self.issues)


@dataclass(frozen=True)
class CausalModel:
    variables: tuple[Variable, ...]
    equations: tuple[StructuralEquation, ...]
    priors: tuple[tuple[str, Prior], ...]

    def __init__(self, variables, equations, priors):
        object.__setattr__(self, "variables", tuple(variables))
        object.__setattr__(self, "equations", tuple(equations))
        if isinstance(priors, dict):
            priors = priors.items()
        object.__setattr__(self, "priors", tuple(priors))

    # -- lookups ---------------------------------------------------------

    @property
    def variable_map(self) -> dict[str, Variable]:
        return {v.name: v for v in self.variables}

    @property
    def equation_map(self) -> dict[str, StructuralEquation]:
        return {e.child: e for e in self.equations}

    @property
    def prior_map(self) -> dict[str, Prior]:
        return dict(self.priors)

    def variable(self, name: str) -> Variable:
        try:
            return self.variable_map[name]
        except KeyError:
            raise UnknownVariable(f"no variable {name!r}") from None

    def names(self, role: Role | None = None) -> tuple[str, ...]:
        if role is None:
            return tuple(v.name for v in self.variables)
        return tuple(v.name for v in self.variables if v.role == role)

    @property
    def background(self) -> tuple[str, ...]:
        return self.names(Role.BACKGROUND)

    @property
    def protected(self) -> tuple[str, ...]:
        return self.names(Role.PROTECTED)

    @property
    def observed(self) -> tuple[str, ...]:
        return self.names(Role.OBSERVED)

    @property
    def outcome(self) -> tuple[str, ...]:
        return self.names(Role.OUTCOME)

    def parents_of(self, name: str) -> tuple[str, ...]:
        eq = self.equation_map.get(name)
        return eq.parents if eq else ()

    def children_map(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {v.name: [] for v in self.variables}
        for eq in self.equations:
            for p in eq.parents:
                if p in out:
                    out[p].append(eq.child)
        return out

    def value_in_domain(self, name: str, value) -> bool:
        var = self.variable(name)
        if var.domain is None:
            return isinstance(value, (int, float, np.integer, np.floating)) and math.isfinite(float(value))
        return any(value == d for d in var.domain)


# ---------------------------------------------------------------------------
# validation


def _check_family(model: CausalModel, eq: StructuralEquation, issues: list):
    fam = eq.family
    var_map = model.variable_map
    child_var = var_map.get(eq.child)
    if isinstance(fam, (LinearGaussian, PoissonLogLink, BernoulliLogit)):
        if len(fam.weights) != len(eq.parents):
            issues.append(ValidationIssue(
                "WeightArityMismatch",
                f"{eq.child}: {len(fam.weights)} weights for {len(eq.parents)} parents"))
        for p in eq.parents:
            pv = var_map.get(p)
            if pv is not None and pv.domain is not None:
                if not all(isinstance(v, (int, float, np.integer, np.floating)) for v in pv.domain):
                    issues.append(ValidationIssue(
                        "NonNumericParent",
                        f"{eq.child}: parent {p} has non-numeric finite domain"))
        if isinstance(fam, LinearGaussian):
            if not (fam.noise_std >= 0.0):
                issues.append(ValidationIssue("BadParam", f"{eq.child}: noise_std must be >= 0"))
            if child_var is not None and child_var.domain is not None:
                issues.append(ValidationIssue(
                    "BadDomain", f"{eq.child}: LinearGaussian child must be real-valued"))
        if isinstance(fam, PoissonLogLink) and child_var is not None and child_var.domain is not None:
            issues.append(ValidationIssue(
                "BadDomain", f"{eq.child}: PoissonLogLink child must be real-valued (counts)"))
        if isinstance(fam, BernoulliLogit) and child_var is not None:
            if child_var.domain is not None and set(child_var.domain) != {0, 1}:
                issues.append(ValidationIssue(
                    "BadDomain", f"{eq.child}: BernoulliLogit child domain must be {{0, 1}}"))
    elif isinstance(fam, DeterministicTable):
        domains = []
        for p in eq.parents:
            pv = var_map.get(p)
            if pv is None:
                return  # dangling parent reported elsewhere
            if pv.domain is None:
                issues.append(ValidationIssue(
                    "TableDomain", f"{eq.child}: table parent {p} must have a finite domain"))
                return
            domains.append(pv.domain)
        mapping = fam.mapping
        expected = set(product(*domains)) if domains else {()}
        got = set(mapping.keys())
        if got != expected:
            missing = sorted(expected - got, key=repr)[:3]
            extra = sorted(got - expected, key=repr)[:3]
            issues.append(ValidationIssue(
                "TableNotTotal",
                f"{eq.child}: table keys do not cover the parent domains "
                f"(missing {missing}, unexpected {extra})"))
        if child_var is not None and child_var.domain is not None:
            bad = [v for v in mapping.values() if not any(v == d for d in child_var.domain)]
            if bad:
                issues.append(ValidationIssue(
                    "BadTableValue", f"{eq.child}: table values {bad[:3]} outside child domain"))


def _check_prior(model: CausalModel, name: str, prior: Prior, issues: list):
    var = model.variable_map.get(name)
    if var is None:
        issues.append(ValidationIssue("UnknownVariable", f"prior on undeclared variable {name}"))
        return
    if isinstance(prior, NormalPrior):
        if var.domain is not None:
            issues.append(ValidationIssue(
                "BadPrior", f"{name}: normal prior requires a real-valued domain"))
        if not (prior.std >= 0.0):
            issues.append(ValidationIssue("BadPrior", f"{name}: prior std must be >= 0"))
    elif isinstance(prior, CategoricalPrior):
        if len(prior.values) != len(prior.probs) or not prior.values:
            issues.append(ValidationIssue("BadPrior", f"{name}: values/probs length mismatch"))
            return
        if any(p < 0 for p in prior.probs) or abs(sum(prior.probs) - 1.0) > 1e-9:
            issues.append(ValidationIssue("BadPrior", f"{name}: probs must be >= 0 and sum to 1"))
        if var.domain is None:
            issues.append(ValidationIssue(
                "BadPrior", f"{name}: categorical prior requires a finite domain"))
        elif any(not any(v == d for d in var.domain) for v in prior.values):
            issues.append(ValidationIssue(
                "BadPrior", f"{name}: prior values outside the declared domain"))


def validate_model(model: CausalModel) -> ValidationResult:
    """Check every structural invariant; returns all violations found.

    A topological order (backgrounds first, then declaration order among
    ready variables) is returned iff the model is valid.
    """
    issues: list[ValidationIssue] = []
    seen = set()
    for v in model.variables:
        if not _NAME_RE.match(v.name):
            issues.append(ValidationIssue("InvalidName", f"illegal variable name {v.name!r}"))
        if v.name in seen:
            issues.append(ValidationIssue("DuplicateVariable", f"variable {v.name} declared twice"))
        seen.add(v.name)
        if v.domain is not None and len(set(map(repr, v.domain))) != len(v.domain):
            issues.append(ValidationIssue("BadDomain", f"{v.name}: duplicate domain values"))

    var_map = model.variable_map
    eq_children = set()
    for eq in model.equations:
        if eq.child not in var_map:
            issues.append(ValidationIssue(
                "UnknownVariable", f"equation for undeclared variable {eq.child}"))
            continue
        if eq.child in eq_children:
            issues.append(ValidationIssue(
                "DuplicateEquation", f"{eq.child} has more than one equation"))
        eq_children.add(eq.child)
        if var_map[eq.child].role == Role.BACKGROUND:
            issues.append(ValidationIssue(
                "BackgroundHasParents",
                f"background variable {eq.child} must not have an equation"))
        for p in eq.parents:
            if p not in var_map:
                issues.append(ValidationIssue(
                    "DanglingParent", f"{eq.child}: parent {p} is not declared"))
        if len(set(eq.parents)) != len(eq.parents):
            issues.append(ValidationIssue(
                "DanglingParent", f"{eq.child}: repeated parent in {eq.parents}"))
        _check_family(model, eq, issues)

    prior_names = set()
    for name, prior in model.priors:
        if name in prior_names:
            issues.append(ValidationIssue("BadPrior", f"{name} has more than one prior"))
        prior_names.add(name)
        _check_prior(model, name, prior, issues)

    for v in model.variables:
        has_eq = v.name in eq_children
        has_prior = v.name in prior_names
        if v.role == Role.BACKGROUND:
            if not has_prior:
                issues.append(ValidationIssue(
                    "MissingPrior", f"background variable {v.name} has no prior"))
        else:
            if has_eq and has_prior:
                issues.append(ValidationIssue(
                    "EquationAndPrior", f"{v.name} has both an equation and a prior"))
            elif not has_eq and not has_prior:
                issues.append(ValidationIssue(
                    "MissingEquation", f"{v.name} has neither an equation nor a root prior"))

    # cycle check over the equation graph (declared variables only)
    order: list[str] = []
    if not issues:
        decl_index = {v.name: i for i, v in enumerate(model.variables)}
        indeg = {v.name: 0 for v in model.variables}
        children = model.children_map()
        for eq in model.equations:
            indeg[eq.child] = len(eq.parents)
        ready = [n for n, d in indeg.items() if d == 0]

        def rank(name):
            return (var_map[name].role != Role.BACKGROUND, decl_index[name])

        ready.sort(key=rank)
        while ready:
            node = ready.pop(0)
            order.append(node)
            changed = False
            for c in children[node]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
                    changed = True
            if changed:
                ready.sort(key=rank)
        if len(order) != len(model.variables):
            cyclic = sorted(n for n, d in indeg.items() if d > 0 and n not in order)
            issues.append(ValidationIssue(
                "CycleDetected", f"cycle through {cyclic}"))
            order = []

    return ValidationResult(ok=not issues, issues=tuple(issues),
                            topological_order=tuple(order))


def require_valid(model: CausalModel) -> tuple[str, ...]:
    result = validate_model(model)
    result.raise_if_invalid()
    return result.topological_order


# ---------------------------------------------------------------------------
# sampling


def _prior_column(prior: Prior, u: np.ndarray) -> np.ndarray:
    if isinstance(prior, NormalPrior):
        if prior.std == 0.0:
            return np.full(u.shape, prior.mean, dtype=np.float64)
        return prior.mean + prior.std * ndtri(u)
    cum = np.cumsum(prior.probs)
    cum[-1] = 1.0
    idx = np.searchsorted(cum, u, side="right")
    values = np.array(prior.values, dtype=object)
    col = values[idx]
    if all(isinstance(v, (int, np.integer)) for v in prior.values):
        return col.astype(np.int64)
    if all(isinstance(v, (int, float, np.integer, np.floating)) for v in prior.values):
        return col.astype(np.float64)
    return col


def _linear_predictor(eq, values: dict[str, np.ndarray]) -> np.ndarray:
    total = float(eq.family.intercept)
    if not eq.parents:
        return total
    eta = np.full(values[eq.parents[0]].shape, total, dtype=np.float64)
    for w, p in zip(eq.family.weights, eq.parents):
        eta += w * values[p].astype(np.float64)
    return eta


def _table_column(eq, values: dict[str, np.ndarray], n: int) -> np.ndarray:
    mapping = eq.family.mapping
    if not eq.parents:
        v = mapping[()]
        if isinstance(v, (int, np.integer)):
            return np.full(n, v, dtype=np.int64)
        if isinstance(v, (float, np.floating)):
            return np.full(n, v, dtype=np.float64)
        return np.full(n, v, dtype=object)
    cols = [values[p] for p in eq.parents]
    out = [mapping[key] for key in zip(*(c.tolist() for c in cols))]
    arr = np.array(out, dtype=object)
    if all(isinstance(v, (int, np.integer)) for v in mapping.values()):
        return arr.astype(np.int64)
    if all(isinstance(v, (int, float, np.integer, np.floating)) for v in mapping.values()):
        return arr.astype(np.float64)
    return arr


def evaluate_equation(eq: StructuralEquation, values: dict[str, np.ndarray],
                      u: np.ndarray | None, n: int) -> np.ndarray:
    """One column from one equation given parent columns and uniforms u."""
    fam = eq.family
    if isinstance(fam, DeterministicTable):
        return _table_column(eq, values, n)
    eta = _linear_predictor(eq, values)
    if isinstance(fam, LinearGaussian):
        if fam.noise_std == 0.0:
            out = np.full(n, eta, dtype=np.float64) if np.isscalar(eta) else eta
            return np.asarray(out, dtype=np.float64)
        return eta + fam.noise_std * ndtri(u)
    if isinstance(fam, BernoulliLogit):
        p = expit(eta)
        return (u < p).astype(np.int64)
    # PoissonLogLink
    lam = np.exp(np.broadcast_to(np.asarray(eta, dtype=np.float64), (n,)))
    if not np.all(np.isfinite(lam)):
        raise NonFiniteDensity(f"{eq.child}: Poisson rate overflowed")
    return scipy.stats.poisson.ppf(u, lam).astype(np.int64)


def forward_eval(model: CausalModel, given: dict[str, np.ndarray], n: int,
                 seed: int, salt: int = 0) -> dict[str, np.ndarray]:
    """Evaluate all equations forward, taking `given` columns as fixed.

    Noise is keyed by (seed, salt, variable name, row), so two calls with the
    same seed share draws variable-by-variable regardless of which equations
    were replaced in between. `given` must cover every prior-backed variable
    that feeds an equation, or the prior is drawn here.
    """
    order = require_valid(model)
    values: dict[str, np.ndarray] = {}
    rows = np.arange(n, dtype=np.uint64)
    eq_map = model.equation_map
    prior_map = model.prior_map
    for name in order:
        if name in given:
            col = np.asarray(given[name])
            if col.shape != (n,):
                col = np.broadcast_to(col, (n,)).copy()
            values[name] = col
            continue
        u = rng.uniforms(seed, salt, rng.name_key(name), rows)
        if name in eq_map:
            values[name] = evaluate_equation(eq_map[name], values, u, n)
        else:
            values[name] = _prior_column(prior_map[name], u)
    return values


def ancestral_sample(model: CausalModel, n: int, seed: int) -> Dataset:
    """Sample n rows in topological order; deterministic given seed."""
    order = require_valid(model)
    values = forward_eval(model, {}, n, seed)
    domains = {v.name: v.domain for v in model.variables if v.domain is not None}
    return Dataset(tuple(order), {k: values[k] for k in order}, domains)


# ---------------------------------------------------------------------------
# surgery


def constant_equation(model: CausalModel, name: str, value) -> StructuralEquation:
    var = model.variable(name)
    if var.domain is None:
        return StructuralEquation(name, (), LinearGaussian(float(value), (), 0.0))
    return StructuralEquation(name, (), DeterministicTable({(): value}))


def intervene(model: CausalModel, assignments: dict) -> CausalModel:
    """Replace each assigned variable's mechanism with the constant value."""
    for name, value in assignments.items():
        var = model.variable(name)
        if var.role == Role.BACKGROUND:
            raise InterveneOnBackground(f"cannot intervene on background variable {name}")
        if not model.value_in_domain(name, value):
            raise UnattainableValue(f"{name} cannot take value {value!r}")
    new_equations = [eq for eq in model.equations if eq.child not in assignments]
    new_equations += [constant_equation(model, name, value)
                      for name, value in assignments.items()]
    new_priors = [(n, p) for n, p in model.priors if n not in assignments]
    # keep equation order aligned with variable declaration for determinism
    decl = {v.name: i for i, v in enumerate(model.variables)}
    new_equations.sort(key=lambda e: decl[e.child])
    return CausalModel(model.variables, new_equations, new_priors)


def descendants(model: CausalModel, of) -> frozenset:
    """The intervened set itself plus everything reachable from it."""
    names = [of] if isinstance(of, str) else list(of)
    for name in names:
        model.variable(name)
    children = model.children_map()
    reached = set(names)
    frontier = list(names)
    while frontier:
        node = frontier.pop()
        for c in children[node]:
            if c not in reached:
                reached.add(c)
                frontier.append(c)
    return frozenset(reached)


def non_descendants(model: CausalModel, of) -> frozenset:
    """Variables with no directed path from the given set (the set excluded)."""
    reached = descendants(model, of)
    return frozenset(v.name for v in model.variables) - reached


def twin_network(model: CausalModel, factual: dict, counterfactual: dict) -> CausalModel:
    """Join the factual and counterfactual worlds in one model.

    Non-descendants of the assigned set are shared; the assigned variables and
    their descendants are duplicated with suffixes @f and @f', each branch
    intervened to its assignment. Background variables are shared by
    construction, so sampling the twin couples the branches through them.
    """
    if set(factual) != set(counterfactual):
        raise UnknownVariable("factual and counterfactual must assign the same variables")
    require_valid(model)
    for assignment in (factual, counterfactual):
        for name, value in assignment.items():
            var = model.variable(name)
            if var.role == Role.BACKGROUND:
                raise InterveneOnBackground(f"cannot intervene on background variable {name}")
            if not model.value_in_domain(name, value):
                raise UnattainableValue(f"{name} cannot take value {value!r}")
    dup = descendants(model, list(factual)) if factual else frozenset()
    variables: list[Variable] = []
    for v in model.variables:
        if v.name in dup:
            variables.append(Variable(v.name + TWIN_FACTUAL, v.role, v.domain))
            variables.append(Variable(v.name + TWIN_COUNTERFACTUAL, v.role, v.domain))
        else:
            variables.append(v)

    def branch_name(name: str, suffix: str) -> str:
        return name + suffix if name in dup else name

    equations: list[StructuralEquation] = []
    for eq in model.equations:
        if eq.child not in dup:
            equations.append(eq)
            continue
        if eq.child in factual:
            continue  # replaced by per-branch constants below
        for suffix in (TWIN_FACTUAL, TWIN_COUNTERFACTUAL):
            parents = tuple(branch_name(p, suffix) for p in eq.parents)
            equations.append(StructuralEquation(eq.child + suffix, parents, eq.family))
    priors = [(n, p) for n, p in model.priors if n not in dup]
    twin = CausalModel(variables, equations, priors)
    for name in factual:
        # assigned variables always end up duplicated (they are in `dup`)
        equations.append(constant_equation(twin, name + TWIN_FACTUAL, factual[name]))
        equations.append(constant_equation(twin, name + TWIN_COUNTERFACTUAL,
                                           counterfactual[name]))
    decl = {v.name: i for i, v in enumerate(variables)}
    equations.sort(key=lambda e: decl[e.child])
    return CausalModel(variables, equations, priors)


# ---------------------------------------------------------------------------
# JSON model spec


_FAMILY_TAGS = {
    LinearGaussian: "linear_gaussian",
    PoissonLogLink: "poisson_log_link",
    BernoulliLogit: "bernoulli_logit",
    DeterministicTable: "deterministic_table",
}


def _family_to_json(fam: Family) -> tuple[str, dict]:
    tag = _FAMILY_TAGS[type(fam)]
    if isinstance(fam, LinearGaussian):
        return tag, {"intercept": fam.intercept, "weights": list(fam.weights),
                     "noise_std": fam.noise_std}
    if isinstance(fam, (PoissonLogLink, BernoulliLogit)):
        return tag, {"intercept": fam.intercept, "weights": list(fam.weights)}
    return tag, {"entries": [{"key": list(k), "value": v} for k, v in fam.entries]}


def _family_from_json(tag: str, params: dict) -> Family:
    if tag == "linear_gaussian":
        return LinearGaussian(params["intercept"], tuple(params["weights"]),
                              params["noise_std"])
    if tag == "poisson_log_link":
        return PoissonLogLink(params["intercept"], tuple(params["weights"]))
    if tag == "bernoulli_logit":
        return BernoulliLogit(params["intercept"], tuple(params["weights"]))
    if tag == "deterministic_table":
        return DeterministicTable({tuple(e["key"]): e["value"] for e in params["entries"]})
    raise UnknownVariable(f"unknown equation family {tag!r}")


def model_to_json(model: CausalModel) -> dict:
    variables = [{"name": v.name, "role": v.role.value,
                  "domain": "real" if v.domain is None else list(v.domain)}
                 for v in model.variables]
    equations = []
    for eq in model.equations:
        tag, params = _family_to_json(eq.family)
        equations.append({"child": eq.child, "parents": list(eq.parents),
                          "family": tag, "params": params})
    priors = {}
    for name, prior in model.priors:
        if isinstance(prior, NormalPrior):
            priors[name] = {"dist": "normal", "mean": prior.mean, "std": prior.std}
        else:
            priors[name] = {"dist": "categorical", "values": list(prior.values),
                            "probs": list(prior.probs)}
    return {"variables": variables, "equations": equations, "priors": priors}


def model_from_json(spec: dict) -> CausalModel:
    variables = []
    for v in spec["variables"]:
        domain = None if v["domain"] == "real" else tuple(v["domain"])
        variables.append(Variable(v["name"], Role(v["role"]), domain))
    equations = [StructuralEquation(e["child"], tuple(e["parents"]),
                                    _family_from_json(e["family"], e["params"]))
                 for e in spec["equations"]]
    priors = []
    for name, p in spec["priors"].items():
        if p["dist"] == "normal":
            priors.append((name, NormalPrior(p["mean"], p["std"])))
        elif p["dist"] == "categorical":
            priors.append((name, CategoricalPrior(tuple(p["values"]), tuple(p["probs"]))))
        else:
            raise UnknownVariable(f"unknown prior dist {p['dist']!r}")
    return CausalModel(variables, equations, priors)


def save_model(model: CausalModel, path, fit_meta: dict | None = None) -> None:
    spec = model_to_json(model)
    if fit_meta is not None:
        spec["fit_meta"] = fit_meta
    with open(path, "w") as fh:
        json.dump(spec, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> CausalModel:
    with open(path) as fh:
        return model_from_json(json.load(fh))
