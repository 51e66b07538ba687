"""Joint prediction-update recursion with sampled truncation.

One scan step: allocate a sample budget over parent components
(multinomial in their weights), build each sampled parent's association
problem, generate candidate assignment vectors with the configured
solver, convert each distinct vector into a child component, merge
children with identical (label set, history fingerprint), normalize.

Tempered model parameters may steer WHICH children get sampled; child
weights are always computed from the untempered factors.
"""

import hashlib
import itertools
import math
import struct
import time
from dataclasses import dataclass

import numpy as np

from . import association, lap
from .core import (
    GlmbComponent,
    GlmbDensity,
    empty_density,
    estimate_state,
    log_sum_exp,
    normalized,
)
from .densities import GaussianBackend, LinearGaussianKit, ParticleBackend, SmcKit

WEIGHT_FLOOR = 1e-15          # post-merge prune threshold on normalized weights
BIRTH_PROB_CEIL = 1.0 - 1e-6  # tempered birth probability clamp

SOLVERS = ("gibbs", "murty", "exhaustive")
GIBBS_INITS = ("zeros", "optimal")


@dataclass(frozen=True)
class TrackingModels:
    motion: object
    measurement: object


@dataclass(frozen=True)
class FilterConfig:
    h_max: int
    temper_birth_factor: float = 1.0
    temper_ps_factor: float = 1.0
    temper_pd_factor: float = 1.0
    gibbs_init: str = "zeros"
    solver: str = "gibbs"        # 'exhaustive' exists for oracle comparisons
    rng_seed: int = 0

    def __post_init__(self):
        if self.h_max < 1:
            raise ValueError("h_max must be >= 1")
        if self.temper_birth_factor < 1.0:
            raise ValueError("birth tempering factor must be >= 1")
        if not (0.0 < self.temper_ps_factor <= 1.0 and 0.0 < self.temper_pd_factor <= 1.0):
            raise ValueError("survival/detection tempering factors must lie in (0,1]")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.gibbs_init not in GIBBS_INITS:
            raise ValueError(f"gibbs_init must be one of {GIBBS_INITS}")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be non-negative")


def default_backend(models):
    """Closed-form Gaussian backend straight from linear-Gaussian models."""
    kit = LinearGaussianKit(
        F=models.motion.transition.F,
        Q=models.motion.transition.Q,
        H=models.measurement.H,
        R_obs=models.measurement.R,
    )
    return GaussianBackend(
        kit,
        models.motion.constant_survival,
        models.measurement.constant_detection,
        models.measurement.kappa(),
    )


def particle_backend(models, particles_per_track):
    return ParticleBackend(models.motion, models.measurement, SmcKit(particles_per_track))


def child_fingerprint(parent_history, kept_pairs):
    """Rolling hash of the association history restricted to kept labels."""
    h = hashlib.blake2b(parent_history, digest_size=16)
    for label, j in kept_pairs:
        h.update(struct.pack("<qqq", label.birth_time, label.index, j))
    return h.digest()


@dataclass
class ComponentProblem:
    """Everything the step needs for one parent component."""

    problem: association.AssociationProblem   # tempered factors (drives sampling)
    log_eta_true: np.ndarray                  # untempered factors (weights)
    labels: tuple                             # row order: sorted survivors, then births
    tables: list                              # per-row measurement tables


class ScanContext:
    """Shared per-scan caches: predictions and measurement tables.

    Track densities are shared by reference between components whose
    histories coincide, so caching on object identity removes the
    dominant redundancy of per-component table building.
    """

    def __init__(self, measurements, models, config, backend, scan_time):
        z_dim = models.measurement.region.shape[0]
        self.Z = (
            np.atleast_2d(np.asarray(measurements, dtype=float))
            if len(measurements)
            else np.empty((0, z_dim))
        )
        self.models = models
        self.config = config
        self.backend = backend
        self.scan = scan_time + 1
        self.birth_sites = models.motion.birth_sites
        self.birth_labels = models.motion.birth_labels(self.scan)
        self._rng = np.random.default_rng((config.rng_seed, self.scan, 7))
        self._pred = {}
        self._tables = {}
        self._table_seq = itertools.count()
        self._birth_tables = {}

    def predict(self, density):
        key = id(density)
        hit = self._pred.get(key)
        if hit is None or hit[0] is not density:
            hit = (density, self.backend.predict_track(density, self._rng))
            self._pred[key] = hit
        return hit[1]

    def table(self, predicted):
        key = id(predicted)
        hit = self._tables.get(key)
        if hit is None or hit[0] is not predicted:
            seed = (self.config.rng_seed, self.scan, 11, next(self._table_seq))
            hit = (predicted, self.backend.meas_table(predicted, self.Z, seed=seed))
            self._tables[key] = hit
        return hit[1]

    def birth_table(self, site):
        if site.index not in self._birth_tables:
            born = self.backend.birth_track(site.density, self._rng)
            self._birth_tables[site.index] = self.table(born)
        return self._birth_tables[site.index]

    def component_problem(self, component):
        cfg = self.config
        n_surv = len(component.labels)
        n_rows = n_surv + len(self.birth_sites)
        m = self.Z.shape[0]
        log_true = np.empty((n_rows, m + 2))
        log_temp = np.empty((n_rows, m + 2))
        tables = []
        for i, label in enumerate(component.labels):
            pbar_s, predicted = self.predict(component.densities[label])
            tab = self.table(predicted)
            tables.append(tab)
            _fill_eta_rows(log_true[i], log_temp[i], pbar_s, cfg.temper_ps_factor, tab, cfg)
        for b, site in enumerate(self.birth_sites):
            tab = self.birth_table(site)
            tables.append(tab)
            r_temp = min(site.prob * cfg.temper_birth_factor, BIRTH_PROB_CEIL)
            _fill_eta_rows(
                log_true[n_surv + b], log_temp[n_surv + b], site.prob, None, tab, cfg, r_temp
            )
        labels = tuple(component.labels) + tuple(self.birth_labels)
        problem = association.AssociationProblem(log_temp, n_surv, labels)
        return ComponentProblem(problem, log_true, labels, tables)


def _fill_eta_rows(row_true, row_temp, a_true, ps_factor, table, cfg, a_temp=None):
    """One row of the (untempered, tempered) eta tables.

    Columns: j=-1 is 1-a (death / not born); j=0 is a * (1 - P_D-bar);
    j>=1 is a * <predicted, P_D g(z_j)/kappa>.
    """
    if a_temp is None:
        a_temp = a_true * ps_factor
    if not 0.0 < a_true < 1.0:
        raise ValueError("survival/birth mass must lie strictly inside (0,1)")
    row_true[0] = math.log1p(-a_true)
    row_true[1] = math.log(a_true) + table.log_psi_miss
    row_true[2:] = math.log(a_true) + table.log_q
    pd_temp = cfg.temper_pd_factor * table.pbar_d
    row_temp[0] = math.log1p(-a_temp)
    row_temp[1] = math.log(a_temp) + math.log1p(-pd_temp)
    row_temp[2:] = math.log(a_temp) + math.log(cfg.temper_pd_factor) + table.log_q


def predict_density(component, models, backend, scan, rng=None):
    """Survival-conditioned predicted densities plus birth priors.

    Returns (label -> predicted density including birth labels,
    label -> expected survival for the component's own labels).
    """
    rng = rng or np.random.default_rng(0)
    predicted, pbar_s = {}, {}
    for label in component.labels:
        ps, dens = backend.predict_track(component.densities[label], rng)
        predicted[label] = dens
        pbar_s[label] = ps
    for site, label in zip(models.motion.birth_sites, models.motion.birth_labels(scan)):
        predicted[label] = backend.birth_track(site.density, rng)
    return predicted, pbar_s


def build_problem(component, measurements, models, config, backend=None, scan_time=0):
    """Tempered association problem for one component (public surface)."""
    backend = backend or default_backend(models)
    ctx = ScanContext(measurements, models, config, backend, scan_time)
    return ctx.component_problem(component).problem


def _initial_gamma(problem, config):
    if config.gibbs_init == "zeros":
        return np.zeros(problem.P, dtype=int)
    cost = association.build_cost_matrix(problem)
    _, cols = lap.solve(cost)
    return association._gamma_from_cols(cols, problem.M)


def joint_step(density, measurements, models, config, backend=None, diag_sink=None):
    """Advance the filter state by one scan (prediction + update in one pass)."""
    backend = backend or default_backend(models)
    ctx = ScanContext(measurements, models, config, backend, density.scan_time)
    m = ctx.Z.shape[0]

    weights = np.exp([c.log_weight for c in density.components])
    weights = np.clip(weights, 0.0, None)
    weights /= weights.sum()
    rng_alloc = np.random.default_rng((config.rng_seed, ctx.scan, 3))
    counts = rng_alloc.multinomial(config.h_max, weights)

    child_logw = {}
    child_payload = {}
    solver_time = 0.0
    max_rows = 0
    for h, comp in enumerate(density.components):
        t_h = int(counts[h])
        if config.solver != "exhaustive" and t_h == 0:
            continue
        cp = ctx.component_problem(comp)
        problem = cp.problem
        max_rows = max(max_rows, problem.P)
        t0 = time.perf_counter()
        if config.solver == "gibbs":
            chain_rng = np.random.default_rng((config.rng_seed, ctx.scan, 13, h))
            samples = association.gibbs_sample(problem, _initial_gamma(problem, config), t_h, chain_rng)
            gammas = association.dedup_rank(samples, problem)
        elif config.solver == "murty":
            gammas = association.murty_ranked(problem, t_h)
        else:
            if (m + 2) ** problem.P > 2e6:
                raise ValueError("exhaustive solver limited to tiny problems")
            gammas = list(association.enumerate_assignments(problem.P, m))
        solver_time += time.perf_counter() - t0

        idx = np.arange(problem.P)
        for rank, gamma in enumerate(gammas):
            log_w = comp.log_weight + float(cp.log_eta_true[idx, gamma + 1].sum())
            kept = [(i, int(gamma[i])) for i in range(problem.P) if gamma[i] >= 0]
            kept_labels = tuple(cp.labels[i] for i, _ in kept)
            fp = child_fingerprint(comp.history, ((cp.labels[i], j) for i, j in kept))
            key = (kept_labels, fp)
            if key in child_logw:
                child_logw[key] = np.logaddexp(child_logw[key], log_w)
            else:
                child_logw[key] = log_w
                child_payload[key] = (cp, kept)

    if not child_logw:
        out = empty_density(ctx.scan)
        return GlmbDensity(out.components, ctx.scan, degenerate=True)

    total = log_sum_exp(list(child_logw.values()))
    keys = [k for k in child_logw if child_logw[k] - total >= math.log(WEIGHT_FLOOR)]
    if not keys:
        keys = [max(child_logw, key=child_logw.get)]

    components = []
    for key in keys:
        cp, kept = child_payload[key]
        labels, fp = key
        dens = {cp.labels[i]: cp.tables[i].posterior(j) for i, j in kept}
        components.append(GlmbComponent(labels, child_logw[key], dens, fp))
    out = normalized(components, ctx.scan)

    if diag_sink is not None:
        w = np.exp([c.log_weight for c in out.components])
        diag_sink.append(
            {
                "scan": ctx.scan,
                "parents": len(density.components),
                "children": len(out.components),
                "measurements": m,
                "max_p": max_rows,
                "solver_time_s": solver_time,
                "weight_ess": float(1.0 / np.sum(w**2)),
            }
        )
    return out


def _count_children(n_surv, n_birth, m):
    """Number of feasible assignment vectors for one parent."""
    p = n_surv + n_birth
    total = 0
    for k in range(0, min(p, m) + 1):
        total += math.comb(p, k) * math.perm(m, k) * 2 ** (p - k)
    return total


def two_stage_oracle(density, measurements, models, config=None, backend=None, limit=100_000):
    """Exact separate-prediction-then-update recursion (test oracle).

    Enumerates every (survivor subset, birth subset, association map)
    child with its exact weight; refuses instances whose enumeration
    exceeds `limit`.  Shares the single-track integrals with the joint
    path; the combinatorics and weight algebra are independent.
    """
    backend = backend or default_backend(models)
    config = config or FilterConfig(h_max=1)
    ctx = ScanContext(measurements, models, config, backend, density.scan_time)
    m = ctx.Z.shape[0]
    sites = ctx.birth_sites

    n_children = sum(
        _count_children(len(c.labels), len(sites), m) for c in density.components
    )
    if n_children > limit:
        raise ValueError(f"instance too large for exhaustive oracle ({n_children} children)")

    child_logw = {}
    child_payload = {}
    for comp in density.components:
        rows = {}
        for label in comp.labels:
            pbar_s, predicted = ctx.predict(comp.densities[label])
            rows[label] = (math.log(pbar_s), math.log1p(-pbar_s), ctx.table(predicted))
        for site, label in zip(sites, ctx.birth_labels):
            rows[label] = (
                math.log(site.prob),
                math.log1p(-site.prob),
                ctx.birth_table(site),
            )

        surv = list(comp.labels)
        births = list(ctx.birth_labels)
        for j_mask in itertools.product([False, True], repeat=len(surv)):
            kept_surv = [ell for ell, keep in zip(surv, j_mask) if keep]
            log_pred_s = sum(rows[ell][0] if keep else rows[ell][1] for ell, keep in zip(surv, j_mask))
            for b_mask in itertools.product([False, True], repeat=len(births)):
                kept_birth = [ell for ell, keep in zip(births, b_mask) if keep]
                log_pred = log_pred_s + sum(
                    rows[ell][0] if keep else rows[ell][1] for ell, keep in zip(births, b_mask)
                )
                kept = kept_surv + kept_birth            # already sorted (births later)
                for theta in itertools.product(range(0, m + 1), repeat=len(kept)):
                    positive = [t for t in theta if t > 0]
                    if len(set(positive)) != len(positive):
                        continue
                    log_w = comp.log_weight + log_pred
                    for ell, j in zip(kept, theta):
                        log_w += rows[ell][2].log_psi(j)
                    fp = child_fingerprint(comp.history, zip(kept, theta))
                    key = (tuple(kept), fp)
                    if key in child_logw:
                        child_logw[key] = np.logaddexp(child_logw[key], log_w)
                    else:
                        child_logw[key] = log_w
                        child_payload[key] = (rows, tuple(zip(kept, theta)))

    components = []
    for key, log_w in child_logw.items():
        rows, pairs = child_payload[key]
        dens = {ell: rows[ell][2].posterior(j) for ell, j in pairs}
        components.append(GlmbComponent(key[0], log_w, dens, key[1]))
    return normalized(components, ctx.scan)


@dataclass
class ScanRecord:
    scan: int
    estimates: list            # [(Label, state vector)]
    diagnostics: dict


def run_filter(measurements_by_scan, models, config, backend=None):
    """Drive the recursion over a scan sequence; returns per-scan records."""
    backend = backend or default_backend(models)
    density = empty_density(0)
    records = []
    for Z in measurements_by_scan:
        diag = []
        density = joint_step(density, Z, models, config, backend, diag_sink=diag)
        records.append(ScanRecord(density.scan_time, estimate_state(density), diag[0]))
    return records, density
