import numpy as np
import pytest

from glmbtrack.core import GaussianMixture, GlmbComponent, Label, normalized
from glmbtrack.filtering import TrackingModels
from glmbtrack.models import (
    BirthSite,
    LinearGaussianMeasurement,
    LinearGaussianTransition,
    MotionModel,
)


def single_gaussian(mean, cov):
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    return GaussianMixture(np.array([1.0]), mean[None, :], cov[None, :, :])


def tiny_models(rng, n_births=1, p_s=None, p_d=None, r_b=None):
    """Small 2-D constant-velocity model with scalar position sensing."""
    F = np.array([[1.0, 1.0], [0.0, 1.0]])
    Q = 0.5 * np.array([[0.25, 0.5], [0.5, 1.0]])
    sites = tuple(
        BirthSite(
            i + 1,
            r_b if r_b is not None else float(rng.uniform(0.02, 0.3)),
            single_gaussian([float(rng.uniform(-5, 5)), 0.0], [[25.0, 0.0], [0.0, 4.0]]),
        )
        for i in range(n_births)
    )
    motion = MotionModel(
        LinearGaussianTransition(F, Q),
        p_s if p_s is not None else float(rng.uniform(0.7, 0.99)),
        sites,
    )
    meas = LinearGaussianMeasurement(
        np.array([[1.0, 0.0]]),
        np.array([[1.0]]),
        p_d if p_d is not None else float(rng.uniform(0.5, 0.95)),
        0.01,
        np.array([[-50.0, 50.0]]),
    )
    return TrackingModels(motion, meas)


def tiny_density(rng, n_tracks, two_components=True):
    """One- or two-component state over fresh labels with random tracks."""
    labels = [Label(0, i + 1) for i in range(n_tracks)]
    dens = {
        l: single_gaussian(rng.normal(0, 5, 2), [[4.0, 0.0], [0.0, 1.0]]) for l in labels
    }
    comps = [GlmbComponent(tuple(sorted(labels)), 0.0, dens, b"a")]
    if two_components and n_tracks >= 1:
        sub = tuple(sorted(labels[:1]))
        comps.append(GlmbComponent(sub, -0.5, {l: dens[l] for l in sub}, b"b"))
    return normalized(comps, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
