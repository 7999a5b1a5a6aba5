"""Abduction, action, prediction.

Abduction recovers the posterior over exogenous state (background variables
plus any unobserved prior-backed roots) given evidence on endogenous
variables. Two routes:

* abduct_exact: joint-normal conditioning when every equation on a path
  relevant to the evidence is LinearGaussian and the involved priors are
  normal. Observed prior-backed roots (a protected attribute, say) are plugged
  in as constants, so finite-domain protected variables do not break
  exactness. Degenerate directions (singular values below 1e-10) are treated
  as deterministic; jointly impossible evidence raises SingularConditioning.

* abduct_mcmc: random-walk Metropolis, vectorised across records. Continuous
  components move by Gaussian steps of size proposal_std; finite-domain
  components are re-proposed uniformly over their domain (symmetric, so no
  Hastings correction). Evidence on zero-noise LinearGaussian children whose
  dependence reaches only continuous normal priors is eliminated exactly
  before sampling, reducing the sampled dimension; evidence on deterministic
  tables becomes a hard indicator. Unobserved stochastic ancestors of the
  evidence join the state as auxiliary dimensions (their conditional densities
  multiply the target); unobserved Poisson ancestors are not supported.

Prediction (counterfactual_sample) replaces equations per the intervention
and evaluates forward once per posterior draw. Equation noise is redrawn,
keyed by (seed, draw, variable name), so runs that differ only in the
intervention share noise variable-by-variable: non-descendants of the
intervened set reproduce bit-identically across such runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.special import gammaln, log_expit, ndtri

from . import rng
from .dataset import Dataset
from .errors import (
    EvidenceOnBackground,
    NonFiniteDensity,
    NotLinearGaussian,
    SingularConditioning,
    UnattainableValue,
    ZeroPosteriorMass,
)
from .scm import (
    BernoulliLogit,
    CausalModel,
    DeterministicTable,
    LinearGaussian,
    NormalPrior,
    PoissonLogLink,
    Role,
    forward_eval,
    intervene,
    require_valid,
)

_SVD_CUTOFF = 1e-10
_CONSISTENCY_TOL = 1e-8

# stream tags so the counter-based keys of distinct passes never collide
_TAG_MH = 11
_TAG_INDEP = 12
_TAG_EXACT = 13
_TAG_PREDICT = 14


@dataclass(frozen=True)
class McmcConfig:
    chains: int = 2
    burn_in: int = 500
    kept: int = 100
    thin: int = 5
    proposal_std: float = 0.5
    seed: int = 0

    @property
    def draws(self) -> int:
        return self.chains * self.kept


def validate_evidence(model: CausalModel, evidence: dict) -> None:
    for name, value in evidence.items():
        var = model.variable(name)
        if var.role == Role.BACKGROUND:
            raise EvidenceOnBackground(f"evidence on background variable {name}")
        if not model.value_in_domain(name, value):
            raise UnattainableValue(f"{name} cannot take value {value!r}")


def _validate_evidence_cols(model: CausalModel, evidence_cols: dict[str, np.ndarray]) -> None:
    for name, col in evidence_cols.items():
        var = model.variable(name)
        if var.role == Role.BACKGROUND:
            raise EvidenceOnBackground(f"evidence on background variable {name}")
        col = np.asarray(col)
        if var.domain is None:
            vals = col.astype(np.float64)
            if not np.all(np.isfinite(vals)):
                raise UnattainableValue(f"{name}: evidence contains non-finite values")
        else:
            allowed = set(var.domain)
            bad = [v for v in dict.fromkeys(col.tolist()) if v not in allowed]
            if bad:
                raise UnattainableValue(f"{name} cannot take value {bad[0]!r}")


def _ancestor_closure(model: CausalModel, names) -> set:
    eq_map = model.equation_map
    seen = set()
    frontier = list(names)
    while frontier:
        node = frontier.pop()
        if node in seen:
            continue
        seen.add(node)
        eq = eq_map.get(node)
        if eq:
            frontier.extend(eq.parents)
    return seen


def _exogenous_names(model: CausalModel) -> tuple[str, ...]:
    """Backgrounds first, then prior-backed roots, in declaration order."""
    prior_names = set(model.prior_map)
    roots = [v.name for v in model.variables
             if v.role != Role.BACKGROUND and v.name in prior_names]
    return model.background + tuple(roots)


# ---------------------------------------------------------------------------
# exact route


@dataclass
class GaussianPosterior:
    """Joint normal over exogenous variables; zero-variance entries are point masses."""

    names: tuple[str, ...]
    mean: np.ndarray
    cov: np.ndarray

    def point_mass(self, tol: float = 1e-9) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None)) <= tol

    def sample(self, n: int, seed: int, salt: int = 0) -> np.ndarray:
        """(n, len(names)) draws, counter-keyed and deterministic."""
        d = len(self.names)
        w, v = np.linalg.eigh(self.cov)
        w = np.clip(w, 0.0, None)
        scale = v * np.sqrt(w)
        rows = np.arange(n, dtype=np.uint64)
        z = np.column_stack([rng.normals(seed, _TAG_EXACT, salt, k, rows)
                             for k in range(d)]) if d else np.zeros((n, 0))
        return self.mean + z @ scale.T


class _LinearSystem:
    """Representation of evidence as linear rows over standard-normal coords.

    Basis coordinates are one z per normal-prior exogenous variable plus one z
    per positive-noise LinearGaussian ancestor of the evidence. Representations
    carry per-record offsets so a whole Dataset of records shares one matrix.
    """

    def __init__(self, model: CausalModel, evidence_cols: dict[str, np.ndarray], n_records: int):
        order = require_valid(model)
        prior_map = model.prior_map
        eq_map = model.equation_map
        self.model = model
        self.n_records = n_records
        closure = _ancestor_closure(model, evidence_cols)
        exo = _exogenous_names(model)

        self.basis: list[str] = []
        index: dict[str, int] = {}
        for name in exo:
            if name in evidence_cols:
                continue  # plugged below
            prior = prior_map[name]
            if not isinstance(prior, NormalPrior):
                raise NotLinearGaussian(
                    f"{name}: categorical prior outside the evidence blocks exact abduction")
            index[name] = len(self.basis)
            self.basis.append(name)
        noise_index: dict[str, int] = {}
        for name in order:
            eq = eq_map.get(name)
            if (eq is not None and name in closure
                    and isinstance(eq.family, LinearGaussian) and eq.family.noise_std > 0):
                noise_index[name] = len(self.basis)
                self.basis.append(f"{name}::noise")

        dim = len(self.basis)
        zeros = np.zeros(dim)
        reps: dict[str, tuple[np.ndarray, np.ndarray]] = {}  # name -> (offset (R,), coeffs (dim,))
        for name in order:
            if name not in closure:
                continue
            if name in evidence_cols and name in prior_map:
                # observed exogenous root: independent of the z coords, plug the value
                try:
                    plugged = np.asarray(evidence_cols[name], dtype=np.float64)
                except (TypeError, ValueError):
                    continue  # non-numeric root; legal only if nothing linear consumes it
                reps[name] = (plugged, zeros)
                continue
            if name in prior_map:
                prior = prior_map[name]
                vec = np.zeros(dim)
                vec[index[name]] = prior.std
                reps[name] = (np.full(n_records, prior.mean), vec)
                continue
            eq = eq_map[name]
            if isinstance(eq.family, DeterministicTable) and not eq.parents:
                # constant assignment (e.g. a finite-domain intervention)
                value = eq.family.mapping[()]
                if not isinstance(value, (int, float, np.integer, np.floating)):
                    raise NotLinearGaussian(f"{name}: non-numeric constant")
                reps[name] = (np.full(n_records, float(value)), zeros)
                continue
            if not isinstance(eq.family, LinearGaussian):
                raise NotLinearGaussian(
                    f"{name}: {type(eq.family).__name__} on a path relevant to the evidence")
            offset = np.full(n_records, float(eq.family.intercept))
            vec = np.zeros(dim)
            for w, p in zip(eq.family.weights, eq.parents):
                if p not in reps:
                    raise NotLinearGaussian(f"{name}: parent {p} is not representable linearly")
                p_off, p_vec = reps[p]
                offset = offset + w * p_off
                vec = vec + w * p_vec
            if eq.family.noise_std > 0:
                vec[noise_index[name]] = eq.family.noise_std
            reps[name] = (offset, vec)

        rows, rhs = [], []
        for name, col in evidence_cols.items():
            if name in prior_map:
                continue  # plugged constant; consistency is domain membership
            offset, vec = reps[name]
            rows.append(vec)
            rhs.append(np.asarray(col, dtype=np.float64) - offset)
        self.matrix = np.array(rows) if rows else np.zeros((0, dim))
        self.rhs = np.array(rhs) if rhs else np.zeros((0, n_records))
        self.exo_index = index  # exogenous name -> basis position

    def condition(self) -> tuple[np.ndarray, np.ndarray]:
        """Posterior (means (R, dim), cov (dim, dim)) of the z coordinates."""
        dim = len(self.basis)
        if self.matrix.shape[0] == 0:
            return np.zeros((self.n_records, dim)), np.eye(dim)
        u, s, vt = np.linalg.svd(self.matrix, full_matrices=False)
        cutoff = _SVD_CUTOFF * max(1.0, s[0] if s.size else 1.0)
        keep = s > cutoff
        u, s, vt = u[:, keep], s[keep], vt[keep]
        pinv = vt.T / s @ u.T
        means = (pinv @ self.rhs).T  # (R, dim)
        residual = self.matrix @ means.T - self.rhs
        scale = 1.0 + np.abs(self.rhs).max(initial=0.0)
        bad = np.abs(residual).max(axis=0, initial=0.0) > _CONSISTENCY_TOL * scale
        if bad.any():
            raise SingularConditioning(
                f"evidence jointly impossible for record(s) {np.flatnonzero(bad)[:5].tolist()}")
        cov = np.eye(dim) - vt.T @ vt
        return means, cov


def _exact_posterior(model: CausalModel, evidence_cols: dict[str, np.ndarray],
                     n_records: int, names: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Per-record means and shared covariance for the named exogenous variables."""
    system = _LinearSystem(model, evidence_cols, n_records)
    z_means, z_cov = system.condition()
    prior_map = model.prior_map
    idx, scales, mean0 = [], [], []
    for name in names:
        if name in evidence_cols:
            raise EvidenceOnBackground(f"{name} is observed; it has no posterior")
        idx.append(system.exo_index[name])
        scales.append(prior_map[name].std)
        mean0.append(prior_map[name].mean)
    idx = np.array(idx, dtype=int)
    scales = np.array(scales)
    means = np.array(mean0) + scales * z_means[:, idx]
    cov = np.outer(scales, scales) * z_cov[np.ix_(idx, idx)]
    return means, cov


def abduct_exact(model: CausalModel, evidence: dict) -> GaussianPosterior:
    """Posterior over the background variables by joint-normal conditioning."""
    require_valid(model)
    validate_evidence(model, evidence)
    cols = {k: np.array([v], dtype=object) if isinstance(v, str) else np.array([float(v)])
            for k, v in evidence.items()}
    names = model.background
    means, cov = _exact_posterior(model, cols, 1, names)
    return GaussianPosterior(names, means[0], cov)


def exact_available(model: CausalModel, evidence) -> bool:
    try:
        cols = {k: np.asarray([v], dtype=np.float64 if not isinstance(v, str) else object)
                for k, v in dict(evidence).items()}
        _LinearSystem(model, cols, 1)
        return True
    except NotLinearGaussian:
        return False


# ---------------------------------------------------------------------------
# MCMC route


@dataclass
class PosteriorDraws:
    """Per-record posterior draws over exogenous variables.

    draws has shape (records, chains * kept, len(names)); acceptance holds the
    post-burn-in acceptance rate per (record, chain).
    """

    names: tuple[str, ...]
    draws: np.ndarray
    acceptance: np.ndarray

    def matrix(self, record: int = 0) -> np.ndarray:
        return self.draws[record]

    def column(self, name: str, record: int = 0) -> np.ndarray:
        return self.draws[record, :, self.names.index(name)]


class _Target:
    """Vectorised log-density of (state, evidence) across records."""

    def __init__(self, model: CausalModel, evidence_cols: dict[str, np.ndarray], n_records: int):
        self.model = model
        self.n = n_records
        self.evidence = {k: np.asarray(v) for k, v in evidence_cols.items()}
        order = require_valid(model)
        prior_map = model.prior_map
        eq_map = model.equation_map
        closure = _ancestor_closure(model, evidence_cols)

        self.cont_prior: list[str] = []    # normal-prior exogenous in the state
        self.disc_prior: list[str] = []    # categorical-prior exogenous in the state
        self.aux_cont: list[str] = []      # latent LinearGaussian (noise > 0)
        self.aux_disc: list[str] = []      # latent BernoulliLogit
        self.determined: list[str] = []    # latent zero-noise / table nodes, resolved
        self.lik_nodes: list[str] = []     # evidence with stochastic equations
        self.indicator_nodes: list[str] = []  # evidence equal to a resolved value
        self.eliminate_nodes: list[str] = []  # evidence on zero-noise linear chains

        for name in order:
            in_ev = name in self.evidence
            if name in prior_map:
                if in_ev or name not in closure:
                    continue
                if isinstance(prior_map[name], NormalPrior):
                    self.cont_prior.append(name)
                else:
                    self.disc_prior.append(name)
                continue
            if name not in closure and not in_ev:
                continue
            fam = eq_map[name].family
            if in_ev:
                if isinstance(fam, LinearGaussian) and fam.noise_std == 0.0:
                    self.eliminate_nodes.append(name)
                elif isinstance(fam, DeterministicTable):
                    # resolved forward and required to equal the observed value
                    self.indicator_nodes.append(name)
                    self.determined.append(name)
                else:
                    self.lik_nodes.append(name)
                continue
            # latent ancestor of the evidence
            if isinstance(fam, LinearGaussian) and fam.noise_std > 0:
                self.aux_cont.append(name)
            elif isinstance(fam, BernoulliLogit):
                self.aux_disc.append(name)
            elif isinstance(fam, PoissonLogLink):
                raise NonFiniteDensity(
                    f"{name}: latent Poisson ancestors of the evidence are not supported")
            else:
                self.determined.append(name)

        # linear elimination system over cont_prior coordinates
        self._build_elimination(prior_map, eq_map)

    def _linear_rep(self, name, eq_map, cache):
        """(offset (R,), coeffs over cont_prior values) or None when not eliminable.

        Coordinates are the cont_prior variables themselves; observed values
        (of any family) plug in as per-record constants.
        """
        if name in cache:
            return cache[name]
        if name in self.evidence:
            try:
                offset = np.asarray(self.evidence[name], dtype=np.float64)
                rep = (offset, np.zeros(len(self.cont_prior)))
            except (TypeError, ValueError):
                rep = None  # non-numeric observed value cannot feed a linear child
        elif name in self.cont_prior:
            vec = np.zeros(len(self.cont_prior))
            vec[self.cont_prior.index(name)] = 1.0
            rep = (np.zeros(self.n), vec)
        else:
            eq = eq_map.get(name)
            if eq is None or not isinstance(eq.family, LinearGaussian) or eq.family.noise_std != 0.0:
                rep = None
            else:
                rep = self._combine(eq, eq_map, cache)
        cache[name] = rep
        return rep

    def _combine(self, eq, eq_map, cache):
        offset = np.full(self.n, float(eq.family.intercept))
        vec = np.zeros(len(self.cont_prior))
        for w, p in zip(eq.family.weights, eq.parents):
            rep = self._linear_rep(p, eq_map, cache)
            if rep is None:
                return None
            offset = offset + w * rep[0]
            vec = vec + w * rep[1]
        return offset, vec

    def _build_elimination(self, prior_map, eq_map):
        cache: dict = {}
        rows, rhs = [], []
        for name in list(self.eliminate_nodes):
            # the node's own equation, not its plugged observed value
            rep = self._combine(eq_map[name], eq_map, cache)
            if rep is None:
                # resolvable through discrete state only? treat as indicator
                anc = _ancestor_closure(self.model, [name]) - {name}
                if anc & (set(self.cont_prior) | set(self.aux_cont)):
                    raise NonFiniteDensity(
                        f"{name}: zero-noise evidence child mixes continuous latents "
                        "and non-linear structure")
                self.eliminate_nodes.remove(name)
                self.indicator_nodes.append(name)
                self.determined.append(name)
                continue
            offset, vec = rep
            if not vec.any():
                self.eliminate_nodes.remove(name)
                self.indicator_nodes.append(name)
                self.determined.append(name)
                continue
            rows.append(vec)
            rhs.append(np.asarray(self.evidence[name], dtype=np.float64) - offset)
        self.determined = [n for n in _topo_subset(self.model, self.determined)]

        d = len(self.cont_prior)
        self.prior_mean = np.array([prior_map[n].mean for n in self.cont_prior])
        self.prior_std = np.array([max(prior_map[n].std, 0.0) for n in self.cont_prior])
        if rows:
            m = np.array(rows)
            r = np.array(rhs)  # (k, R)
            u, s, vt = np.linalg.svd(m, full_matrices=True)
            cutoff = _SVD_CUTOFF * max(1.0, s[0] if s.size else 1.0)
            rank = int((s > cutoff).sum())
            pinv = vt[:rank].T / s[:rank] @ u[:, :rank].T
            base = self.prior_mean[:, None] + pinv @ (r - m @ self.prior_mean[:, None])
            residual = m @ base - r
            bad = np.abs(residual).max(axis=0, initial=0.0) > _CONSISTENCY_TOL * (1.0 + np.abs(r).max(initial=0.0))
            if bad.any():
                raise ZeroPosteriorMass(
                    f"deterministic evidence impossible for record(s) {np.flatnonzero(bad)[:5].tolist()}")
            self.part_solution = base.T  # (R, d)
            self.null_basis = vt[rank:].T  # (d, f)
        else:
            self.part_solution = np.broadcast_to(self.prior_mean, (self.n, d)).copy()
            self.null_basis = np.eye(d)
        self.free_dim = self.null_basis.shape[1]

    # -- state handling --------------------------------------------------

    def cont_values(self, t: np.ndarray) -> np.ndarray:
        """Reconstruct cont_prior values (R, d) from free coordinates t (R, f)."""
        return self.part_solution + t @ self.null_basis.T

    def resolve(self, cont: np.ndarray, disc: dict[str, np.ndarray],
                aux_c: np.ndarray, aux_d: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        values: dict[str, np.ndarray] = dict(self.evidence)
        for j, name in enumerate(self.cont_prior):
            values[name] = cont[:, j]
        for name, col in disc.items():
            values[name] = col
        for j, name in enumerate(self.aux_cont):
            values[name] = aux_c[:, j]
        for name, col in aux_d.items():
            values[name] = col
        eq_map = self.model.equation_map
        for name in self.determined:
            eq = eq_map[name]
            if isinstance(eq.family, DeterministicTable):
                mapping = eq.family.mapping
                cols = [np.asarray(values[p]) for p in eq.parents]
                if cols:
                    values[name] = np.array(
                        [mapping[key] for key in zip(*(c.tolist() for c in cols))], dtype=object)
                else:
                    values[name] = np.full(self.n, mapping[()], dtype=object)
            else:
                eta = np.full(self.n, float(eq.family.intercept))
                for w, p in zip(eq.family.weights, eq.parents):
                    eta = eta + w * np.asarray(values[p], dtype=np.float64)
                values[name] = eta
        return values

    def log_density(self, t, disc, aux_c, aux_d) -> np.ndarray:
        cont = self.cont_values(t)
        values = self.resolve(cont, disc, aux_c, aux_d)
        logp = np.zeros(self.n)
        with np.errstate(divide="ignore", invalid="ignore"):
            for j, name in enumerate(self.cont_prior):
                std = self.prior_std[j]
                if std == 0.0:
                    logp = np.where(np.abs(cont[:, j] - self.prior_mean[j]) <= 1e-12, logp, -np.inf)
                else:
                    logp = logp - 0.5 * ((cont[:, j] - self.prior_mean[j]) / std) ** 2 - math.log(std)
            prior_map = self.model.prior_map
            for name in self.disc_prior:
                prior = prior_map[name]
                pmf = {v: p for v, p in zip(prior.values, prior.probs)}
                probs = np.array([pmf.get(v, 0.0) for v in disc[name].tolist()])
                logp = logp + np.log(probs)
            eq_map = self.model.equation_map
            for name in self.aux_cont:
                eq = eq_map[name]
                eta = self._eta(eq, values)
                sd = eq.family.noise_std
                logp = logp - 0.5 * ((np.asarray(values[name], dtype=np.float64) - eta) / sd) ** 2 - math.log(sd)
            for name in self.aux_disc:
                eq = eq_map[name]
                eta = self._eta(eq, values)
                y = np.asarray(values[name], dtype=np.float64)
                logp = logp + y * log_expit(eta) + (1.0 - y) * log_expit(-eta)
            for name in self.lik_nodes:
                eq = eq_map[name]
                eta = self._eta(eq, values)
                y = np.asarray(values[name], dtype=np.float64)
                fam = eq.family
                if isinstance(fam, LinearGaussian):
                    logp = logp - 0.5 * ((y - eta) / fam.noise_std) ** 2 - math.log(fam.noise_std)
                elif isinstance(fam, BernoulliLogit):
                    logp = logp + y * log_expit(eta) + (1.0 - y) * log_expit(-eta)
                else:  # PoissonLogLink
                    logp = logp + y * eta - np.exp(eta) - gammaln(y + 1.0)
            for name in self.indicator_nodes:
                want = self.evidence[name]
                got = values[name]
                ok = _loose_equal(got, want)
                logp = np.where(ok, logp, -np.inf)
        return np.where(np.isnan(logp), -np.inf, logp)

    def _eta(self, eq, values) -> np.ndarray:
        eta = np.full(self.n, float(eq.family.intercept))
        for w, p in zip(eq.family.weights, eq.parents):
            eta = eta + w * np.asarray(values[p], dtype=np.float64)
        return eta


def _loose_equal(got, want) -> np.ndarray:
    got = np.asarray(got)
    want = np.asarray(want)
    if got.dtype.kind in "fiub" and want.dtype.kind in "fiub":
        return np.abs(got.astype(np.float64) - want.astype(np.float64)) <= 1e-9
    return np.array([g == w for g, w in zip(got.tolist(), want.tolist())])


def _topo_subset(model: CausalModel, names) -> list[str]:
    wanted = set(names)
    return [n for n in require_valid(model) if n in wanted]


def _domain_of(model: CausalModel, name: str) -> tuple:
    var = model.variable(name)
    if var.domain is not None:
        return var.domain
    prior = model.prior_map.get(name)
    if prior is not None and hasattr(prior, "values"):
        return tuple(prior.values)
    return (0, 1)


def _disc_column(domain: tuple, u: np.ndarray) -> np.ndarray:
    idx = np.minimum((u * len(domain)).astype(int), len(domain) - 1)
    return np.array(list(domain), dtype=object)[idx]


def abduct_records(model: CausalModel, evidence_cols: dict[str, np.ndarray],
                   config: McmcConfig, names: tuple[str, ...] | None = None) -> PosteriorDraws:
    """Vectorised MH over records; the workhorse behind abduct_mcmc.

    evidence_cols maps variable name to a column of per-record values. Chains
    are keyed by (seed, record, chain): outputs are bit-identical however
    records are batched or scheduled. Returned names default to all exogenous
    variables not in the evidence (backgrounds first).
    """
    require_valid(model)
    n_records = len(next(iter(evidence_cols.values()))) if evidence_cols else 1
    _validate_evidence_cols(model, evidence_cols)
    target = _Target(model, evidence_cols, n_records)
    if names is None:
        names = tuple(n for n in _exogenous_names(model) if n not in evidence_cols)
    elif any(n in evidence_cols for n in names):
        raise EvidenceOnBackground("requested draws for a variable that is observed")
    prior_map = model.prior_map

    disc_names = list(target.disc_prior) + list(target.aux_disc)
    disc_domains = {n: _domain_of(model, n) for n in disc_names}
    rows = np.arange(n_records, dtype=np.uint64)

    # independent exogenous variables (posterior equals prior) are drawn directly
    covered = set(target.cont_prior) | set(target.disc_prior) | set(evidence_cols)
    independent = [n for n in names if n not in covered]

    kept_total = config.chains * config.kept
    out = np.zeros((n_records, kept_total, len(names)), dtype=object)
    acceptance = np.zeros((n_records, config.chains))
    ever_finite = np.zeros(n_records, dtype=bool)

    for chain in range(config.chains):
        t = np.zeros((n_records, target.free_dim))
        aux_c = _init_aux(target, model)
        disc = _init_disc(target, model, disc_names, disc_domains, n_records)
        logp = target.log_density(t, disc, aux_c, {n: disc[n] for n in target.aux_disc})
        if not np.all(np.isfinite(logp)):
            disc, logp = _feasible_init(target, model, disc_names, disc_domains,
                                        t, aux_c, disc, logp)
        ever_finite |= np.isfinite(logp)

        n_cont = target.free_dim + len(target.aux_cont)
        accepted = np.zeros(n_records)
        total_steps = config.burn_in + config.kept * config.thin
        kept_i = 0
        for step in range(total_steps):
            slot = 0
            t_new = t
            if target.free_dim:
                steps = np.column_stack([rng.normals(config.seed, _TAG_MH, rows, chain, step, slot + j)
                                         for j in range(target.free_dim)])
                t_new = t + config.proposal_std * steps
                slot += target.free_dim
            aux_new = aux_c
            if target.aux_cont:
                steps = np.column_stack([rng.normals(config.seed, _TAG_MH, rows, chain, step, slot + j)
                                         for j in range(len(target.aux_cont))])
                aux_new = aux_c + config.proposal_std * steps
                slot += len(target.aux_cont)
            disc_new = {}
            for name in disc_names:
                u = rng.uniforms(config.seed, _TAG_MH, rows, chain, step, slot)
                disc_new[name] = _disc_column(disc_domains[name], u)
                slot += 1
            logp_new = target.log_density(t_new, disc_new, aux_new,
                                          {n: disc_new[n] for n in target.aux_disc})
            u = rng.uniforms(config.seed, _TAG_MH, rows, chain, step, slot)
            with np.errstate(invalid="ignore"):
                take = np.log(u) < (logp_new - logp)
            take |= np.isfinite(logp_new) & ~np.isfinite(logp)
            if n_cont or disc_names:
                if target.free_dim:
                    t = np.where(take[:, None], t_new, t)
                if target.aux_cont:
                    aux_c = np.where(take[:, None], aux_new, aux_c)
                for name in disc_names:
                    disc[name] = np.where(take, disc_new[name], disc[name])
                logp = np.where(take, logp_new, logp)
            ever_finite |= np.isfinite(logp)
            if step >= config.burn_in:
                accepted += take.astype(float)
                if (step - config.burn_in + 1) % config.thin == 0:
                    _collect(out, kept_total, chain * config.kept + kept_i, names, target,
                             t, disc, independent, prior_map, model, config, rows, chain, kept_i)
                    kept_i += 1
        acceptance[:, chain] = accepted / max(1, config.kept * config.thin)

    if not ever_finite.all():
        raise ZeroPosteriorMass(
            f"no feasible background state for record(s) {np.flatnonzero(~ever_finite)[:5].tolist()}")

    draws = _finalize_dtype(out, names, model)
    return PosteriorDraws(tuple(names), draws, acceptance)


def _init_aux(target: _Target, model: CausalModel) -> np.ndarray:
    """Start auxiliary continuous nodes at their conditional means."""
    if not target.aux_cont:
        return np.zeros((target.n, 0))
    t = np.zeros((target.n, target.free_dim))
    cont = target.cont_values(t)
    disc = {n: np.array([_domain_of(model, n)[0]] * target.n, dtype=object)
            for n in target.disc_prior + target.aux_disc}
    cols = []
    values = target.resolve(cont, {n: disc[n] for n in target.disc_prior},
                            np.zeros((target.n, len(target.aux_cont))),
                            {n: disc[n] for n in target.aux_disc})
    eq_map = model.equation_map
    for name in target.aux_cont:
        eta = target._eta(eq_map[name], values)
        values[name] = eta
        cols.append(eta)
    return np.column_stack(cols)


def _init_disc(target, model, disc_names, disc_domains, n_records):
    disc = {}
    for name in disc_names:
        prior = model.prior_map.get(name)
        if prior is not None and hasattr(prior, "probs"):
            best = prior.values[int(np.argmax(prior.probs))]
        else:
            best = disc_domains[name][0]
        disc[name] = np.array([best] * n_records, dtype=object)
    return disc


def _feasible_init(target, model, disc_names, disc_domains, t, aux_c, disc, logp):
    """Scan small discrete supports for a per-record feasible assignment."""
    domains = [disc_domains[n] for n in disc_names]
    n_combo = int(np.prod([len(d) for d in domains])) if domains else 1
    if not disc_names or n_combo > 4096:
        return disc, logp
    best = {n: disc[n].copy() for n in disc_names}
    best_logp = logp.copy()
    for combo in product(*domains):
        trial = {n: np.array([v] * target.n, dtype=object) for n, v in zip(disc_names, combo)}
        lp = target.log_density(t, trial, aux_c, {n: trial[n] for n in target.aux_disc})
        upgrade = np.isfinite(lp) & ~np.isfinite(best_logp)
        if upgrade.any():
            for n in disc_names:
                best[n] = np.where(upgrade, trial[n], best[n])
            best_logp = np.where(upgrade, lp, best_logp)
    return best, best_logp


def _collect(out, kept_total, pos, names, target, t, disc, independent,
             prior_map, model, config, rows, chain, kept_i):
    cont = target.cont_values(t)
    for j, name in enumerate(names):
        if name in target.cont_prior:
            out[:, pos, j] = cont[:, target.cont_prior.index(name)]
        elif name in disc:
            out[:, pos, j] = disc[name]
        elif name in independent:
            u = rng.uniforms(config.seed, _TAG_INDEP, rows, chain, kept_i, j)
            prior = prior_map[name]
            if isinstance(prior, NormalPrior):
                out[:, pos, j] = prior.mean + prior.std * ndtri(u)
            else:
                cum = np.cumsum(prior.probs)
                cum[-1] = 1.0
                idx = np.searchsorted(cum, u, side="right")
                out[:, pos, j] = np.array(list(prior.values), dtype=object)[idx]


def _finalize_dtype(out: np.ndarray, names, model: CausalModel) -> np.ndarray:
    numeric = True
    for j, name in enumerate(names):
        sample = out[0, 0, j]
        if isinstance(sample, str):
            numeric = False
    return out.astype(np.float64) if numeric else out


def abduct_mcmc(model: CausalModel, evidence: dict, config: McmcConfig) -> PosteriorDraws:
    """Posterior draws over the background variables for one record."""
    validate_evidence(model, evidence)
    cols = {k: np.array([v]) if not isinstance(v, str) else np.array([v], dtype=object)
            for k, v in evidence.items()}
    result = abduct_records(model, cols, config,
                            names=tuple(n for n in model.background if n not in evidence))
    return result


# ---------------------------------------------------------------------------
# three-step counterfactual


def counterfactual_sample(model: CausalModel, evidence: dict, intervention: dict,
                          n_draws: int, config: McmcConfig) -> Dataset:
    """Abduct exogenous state from evidence, apply the intervention, predict.

    Returns a Dataset of n_draws rows over every variable of the intervened
    model. The exact Gaussian route is used when available, otherwise MCMC
    (draws cycled if n_draws exceeds chains * kept). Equation noise at the
    prediction step is keyed by (seed, draw, variable name) so that calls
    differing only in `intervention` share noise variable-by-variable.
    """
    require_valid(model)
    validate_evidence(model, evidence)
    modified = intervene(model, intervention)  # validates the intervention up front
    exo_draws = exogenous_draws(model, evidence, n_draws, config)
    given = {name: col for name, col in exo_draws.items() if name not in intervention}
    values = forward_eval(modified, given, n_draws,
                          rng.child_seed(config.seed, _TAG_PREDICT), salt=_TAG_PREDICT)
    order = require_valid(modified)
    domains = {v.name: v.domain for v in modified.variables if v.domain is not None}
    return Dataset(tuple(order), {k: values[k] for k in order}, domains)


def exogenous_draws(model: CausalModel, evidence: dict, n_draws: int,
                    config: McmcConfig) -> dict[str, np.ndarray]:
    """Draws of every exogenous variable given evidence, plus pinned observed roots."""
    exo = _exogenous_names(model)
    latent = tuple(n for n in exo if n not in evidence)
    out: dict[str, np.ndarray] = {}
    try:
        cols = {k: (np.array([v], dtype=object) if isinstance(v, str) else np.array([float(v)]))
                for k, v in evidence.items()}
        means, cov = _exact_posterior(model, cols, 1, latent)
        post = GaussianPosterior(latent, means[0], cov)
        draws = post.sample(n_draws, config.seed)
        for j, name in enumerate(latent):
            out[name] = draws[:, j]
    except NotLinearGaussian:
        cols = {k: (np.array([v], dtype=object) if isinstance(v, str) else np.array([v]))
                for k, v in evidence.items()}
        result = abduct_records(model, cols, config, names=latent)
        m = result.draws.shape[1]
        idx = np.arange(n_draws) % m
        for j, name in enumerate(latent):
            out[name] = result.draws[0, idx, j]
    for name in exo:
        if name in evidence:
            v = evidence[name]
            out[name] = (np.full(n_draws, v, dtype=object) if isinstance(v, str)
                         else np.full(n_draws, float(v)))
    return out


def posterior_draw_matrix(model: CausalModel, evidence_cols: dict[str, np.ndarray],
                          config: McmcConfig, names: tuple[str, ...]) -> np.ndarray:
    """(records, chains * kept, len(names)) posterior draws for every record.

    Takes the exact joint-normal route when the model supports it, otherwise
    the record-vectorised MH sampler. Draws are keyed by (seed, record, draw)
    so batching records differently leaves each record's draws untouched.
    """
    n_records = len(next(iter(evidence_cols.values())))
    m = config.draws
    try:
        means, cov = _exact_posterior(model, evidence_cols, n_records, names)
        d = len(names)
        w, v = np.linalg.eigh(cov) if d else (np.zeros(0), np.zeros((0, 0)))
        scale = v * np.sqrt(np.clip(w, 0.0, None))
        rows = np.arange(n_records, dtype=np.uint64)[:, None]
        draw_ids = np.arange(m, dtype=np.uint64)[None, :]
        z = np.stack([rng.normals(config.seed, _TAG_EXACT, 1, k, rows, draw_ids)
                      for k in range(d)], axis=-1) if d else np.zeros((n_records, m, 0))
        return means[:, None, :] + z @ scale.T
    except NotLinearGaussian:
        # dtype is object only when a categorical latent takes string values
        return abduct_records(model, evidence_cols, config, names=names).draws
