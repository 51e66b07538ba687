"""Labeled-RFS data model: track labels, mixture components, filter state.

The filter state is a finite mixture over label sets: each component
holds a set of track labels, a log weight and one track density per
label.  Weights live in log domain everywhere; normalization is done
with log-sum-exp.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, order=True)
class Label:
    """Track identity: (birth scan, index among same-scan births)."""

    birth_time: int
    index: int

    def __str__(self):
        return f"{self.birth_time}.{self.index}"


@dataclass(frozen=True)
class GaussianMixture:
    """Weighted Gaussian mixture track density; arrays are never mutated."""

    weights: np.ndarray       # (C,)
    means: np.ndarray         # (C, d)
    covariances: np.ndarray   # (C, d, d)

    def mean(self):
        return self.weights @ self.means

    def validate(self, tol=1e-9):
        w = self.weights
        if np.any(w < 0) or abs(w.sum() - 1.0) > tol:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        if self.means.shape[0] != w.shape[0] or self.covariances.shape[0] != w.shape[0]:
            raise ValueError("inconsistent mixture sizes")
        for P in self.covariances:
            if np.min(np.linalg.eigvalsh(0.5 * (P + P.T))) <= 0:
                raise ValueError("covariance not positive definite")


@dataclass(frozen=True)
class ParticleSet:
    """Weighted particle track density; arrays are never mutated."""

    weights: np.ndarray   # (N,)
    states: np.ndarray    # (N, d)

    def mean(self):
        return self.weights @ self.states

    def validate(self, tol=1e-9):
        w = self.weights
        if np.any(w < 0) or abs(w.sum() - 1.0) > tol:
            raise ValueError("particle weights must be non-negative and sum to 1")
        if self.states.shape[0] != w.shape[0]:
            raise ValueError("inconsistent particle count")


@dataclass(frozen=True)
class GlmbComponent:
    """One hypothesis: label set, log weight, per-label track densities.

    ``history`` is a rolling fingerprint of the association history; two
    components with equal labels and equal history hold identical track
    densities by construction and may be merged by summing weights.
    """

    labels: tuple          # sorted tuple of Label
    log_weight: float
    densities: dict        # Label -> GaussianMixture | ParticleSet
    history: bytes = b""

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate labels in component")
        if tuple(sorted(self.labels)) != tuple(self.labels):
            raise ValueError("component labels must be sorted")
        if set(self.densities) != set(self.labels):
            raise ValueError("densities must match label set exactly")


@dataclass(frozen=True)
class GlmbDensity:
    """Normalized finite mixture of GlmbComponent (the filter state)."""

    components: tuple
    scan_time: int = 0
    degenerate: bool = False


def log_sum_exp(values):
    values = np.asarray(values, dtype=float)
    m = np.max(values)
    if not np.isfinite(m):
        return m
    return m + np.log(np.sum(np.exp(values - m)))


def normalized(components, scan_time, degenerate=False):
    """Build a GlmbDensity with weights rescaled to sum to one."""
    if not components:
        raise ValueError("empty GLMB")
    total = log_sum_exp([c.log_weight for c in components])
    comps = tuple(
        GlmbComponent(c.labels, c.log_weight - total, c.densities, c.history)
        for c in components
    )
    return GlmbDensity(comps, scan_time, degenerate)


def empty_density(scan_time=0):
    """The 'no objects' state: one empty component with unit weight."""
    return GlmbDensity((GlmbComponent((), 0.0, {}),), scan_time)


def track_mean(density):
    """Mean state vector of a single-track density (either backend)."""
    return density.mean()


def cardinality_distribution(density):
    """Probability of each object count, summed over components."""
    if not density.components:
        raise ValueError("empty GLMB")
    dist = {}
    for c in density.components:
        n = len(c.labels)
        dist[n] = dist.get(n, 0.0) + np.exp(c.log_weight)
    return dict(sorted(dist.items()))


def estimate_state(density):
    """MAP-cardinality estimate: best component at the most probable count.

    Returns [(label, mean state)] from the highest-weight component whose
    label count attains the cardinality mode; ties keep the earliest
    component.
    """
    card = cardinality_distribution(density)
    n_star = max(card, key=lambda n: (card[n], -n))
    best = None
    for c in density.components:
        if len(c.labels) == n_star and (best is None or c.log_weight > best.log_weight):
            best = c
    return [(ell, track_mean(best.densities[ell])) for ell in best.labels]
