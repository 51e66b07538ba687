"""Benchmark scenarios, ground-truth simulation and the OSPA metric.

Two standard setups are provided: a planar constant-velocity scenario
with position measurements, and a coordinated-turn scenario with
bearing-range measurements on a half disc.  Truth trajectories are
noiseless propagations of scripted spawn states (versioned fixture
data); randomness enters only through detection thinning, measurement
noise and clutter.  Units: meters, seconds, radians.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import lap
from .core import GaussianMixture, Label
from .models import (
    BearingRangeMeasurement,
    BirthSite,
    CoordinatedTurnTransition,
    LinearGaussianMeasurement,
    LinearGaussianTransition,
    MotionModel,
    gaussian_detection_profile,
)


@dataclass(frozen=True)
class OspaParams:
    cutoff: float = 100.0
    order: float = 1.0

    def __post_init__(self):
        if self.cutoff <= 0 or self.order < 1:
            raise ValueError("need cutoff > 0 and order >= 1")


@dataclass(frozen=True)
class TruthTrack:
    """Scripted object: alive on scans [spawn, death)."""

    label: Label
    spawn: int
    death: int
    x0: np.ndarray


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    duration: int
    motion: MotionModel
    measurement: object
    truth: tuple
    pos_idx: tuple = (0, 2)
    temper_birth_factor: float = 1.0
    temper_ps_factor: float = 1.0
    temper_pd_factor: float = 1.0


def _diag_sq(values):
    return np.diag(np.asarray(values, dtype=float) ** 2)


def linear_scenario():
    """Planar constant-velocity benchmark.

    4-D state [px, vx, py, vy], 1 s sampling, acceleration noise 5 m/s^2,
    survival 0.99; three single-Gaussian birth sites with r_B = 0.04;
    position observations with 10 m noise, detection 0.88, Poisson
    clutter 1.65e-5 m^-2 over [-1000, 1000]^2 (66 false alarms/scan).
    """
    dt, sigma_nu = 1.0, 5.0
    f1 = np.array([[1.0, dt], [0.0, 1.0]])
    g1 = np.array([[0.5 * dt * dt], [dt]])
    F = np.kron(np.eye(2), f1)
    Q = sigma_nu**2 * np.kron(np.eye(2), g1 @ g1.T)
    transition = LinearGaussianTransition(F, Q)

    P_B = _diag_sq([10.0, 10.0, 10.0, 10.0])
    birth_means = [
        [0.0, 0.0, 100.0, 0.0],
        [-100.0, 0.0, -100.0, 0.0],
        [100.0, 0.0, -100.0, 0.0],
    ]
    sites = tuple(
        BirthSite(i + 1, 0.04, GaussianMixture(np.array([1.0]), np.array([m]), P_B[None, :, :]))
        for i, m in enumerate(birth_means)
    )
    motion = MotionModel(transition, 0.99, sites)

    H = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
    R = _diag_sq([10.0, 10.0])
    region = np.array([[-1000.0, 1000.0], [-1000.0, 1000.0]])
    meas = LinearGaussianMeasurement(H, R, 0.88, 1.65e-5, region)

    truth = _linear_truth(birth_means)
    return ScenarioSpec(
        "linear",
        100,
        motion,
        meas,
        truth,
        temper_birth_factor=10.0,
        temper_ps_factor=0.95,
        temper_pd_factor=0.95,
    )


def _linear_truth(birth_means):
    # (spawn, death, site, vx, vy): scripted births/deaths with crossings,
    # up to 10 objects alive at once, all paths inside the region
    script = [
        (1, 101, 0, 6.0, -4.0),
        (5, 101, 1, 9.0, 7.0),
        (8, 101, 2, -8.0, 6.0),
        (12, 75, 0, -7.0, -7.0),
        (20, 90, 1, 2.0, 10.0),
        (25, 101, 2, -10.0, -3.0),
        (30, 85, 0, 8.0, 6.0),
        (40, 101, 1, 10.0, -6.0),
        (50, 101, 2, -6.0, 9.0),
        (60, 95, 0, 5.0, -9.0),
    ]
    truth = []
    for k, (spawn, death, site, vx, vy) in enumerate(script, start=1):
        x0 = np.array(birth_means[site], dtype=float)
        x0[1], x0[3] = vx, vy
        truth.append(TruthTrack(Label(spawn, k), spawn, death, x0))
    return tuple(truth)


def nonlinear_scenario():
    """Coordinated-turn benchmark with bearing-range sensing.

    5-D state [px, vx, py, vy, omega], 1 s sampling, noise 15 m/s^2 on
    acceleration and pi/180 rad/s on turn rate, survival 0.99; four
    birth sites with r_B = (0.02, 0.02, 0.03, 0.03); bearing-range
    observations (sigma = pi/180 rad, 5 m) on the half disc of radius
    2000 m, Gaussian detection profile 0.95 at the origin falling to
    0.88 at the edge, clutter 1.6e-2 (rad m)^-1 (100 false alarms/scan).
    """
    transition = CoordinatedTurnTransition(sigma_w=15.0, sigma_u=math.pi / 180.0)

    P_B = _diag_sq([50.0, 50.0, 50.0, 50.0, 6.0 * math.pi / 180.0])
    birth_means = [
        [-1500.0, 0.0, 250.0, 0.0, 0.0],
        [-250.0, 0.0, 1000.0, 0.0, 0.0],
        [250.0, 0.0, 750.0, 0.0, 0.0],
        [1000.0, 0.0, 1500.0, 0.0, 0.0],
    ]
    probs = [0.02, 0.02, 0.03, 0.03]
    sites = tuple(
        BirthSite(i + 1, r, GaussianMixture(np.array([1.0]), np.array([m]), P_B[None, :, :]))
        for i, (r, m) in enumerate(zip(probs, birth_means))
    )
    motion = MotionModel(transition, 0.99, sites)

    p_d = gaussian_detection_profile(peak=0.95, edge=0.88, radius=2000.0)
    meas = BearingRangeMeasurement(
        sigma_theta=math.pi / 180.0,
        sigma_r=5.0,
        detection_prob=p_d,
        clutter_rate=1.6e-2,
        radius=2000.0,
    )

    truth = _nonlinear_truth(birth_means)
    return ScenarioSpec(
        "nonlinear",
        100,
        motion,
        meas,
        truth,
        temper_birth_factor=20.0,
        temper_ps_factor=0.95,
        temper_pd_factor=0.95,
    )


def _nonlinear_truth(birth_means):
    deg = math.pi / 180.0
    # (spawn, death, site, vx, vy, omega): gentle turns keep every path on
    # the upper half disc for its whole lifetime
    script = [
        (1, 101, 0, 18.0, 8.0, deg / 4.0),
        (5, 101, 1, 12.0, 6.0, -deg / 3.0),
        (10, 101, 2, 12.0, 5.0, deg / 3.0),
        (15, 80, 3, -14.0, 4.0, -deg / 4.0),
        (20, 101, 0, 20.0, 4.0, -deg / 5.0),
        (25, 95, 1, -10.0, 8.0, deg / 4.0),
        (30, 101, 2, -12.0, 10.0, -deg / 4.0),
        (40, 101, 3, -16.0, 2.0, deg / 5.0),
        (50, 90, 0, 22.0, 6.0, 0.0),
        (55, 101, 1, 10.0, -4.0, deg / 6.0),
    ]
    truth = []
    for k, (spawn, death, site, vx, vy, omega) in enumerate(script, start=1):
        x0 = np.array(birth_means[site], dtype=float)
        x0[1], x0[3], x0[4] = vx, vy, omega
        truth.append(TruthTrack(Label(spawn, k), spawn, death, x0))
    return tuple(truth)


@dataclass
class Simulation:
    """Ground truth and one measurement realization of a scenario."""

    spec: ScenarioSpec
    truth_states: list      # per scan: list of (Label, state)
    measurements: list      # per scan: (M, z_dim) array, detections then clutter
    sources: list           # per scan: list of Label or None (clutter), aligned

    def true_positions(self, scan):
        idx = self.spec.pos_idx
        rows = [x[list(idx)] for _, x in self.truth_states[scan - 1]]
        return np.array(rows) if rows else np.empty((0, len(idx)))

    def true_count(self, scan):
        return len(self.truth_states[scan - 1])


def simulate(spec, seed):
    """Generate truth states and a seeded measurement realization."""
    rng = np.random.default_rng(seed)
    meas_model = spec.measurement

    truth_states = []
    states = {t.label: np.array(t.x0, dtype=float) for t in spec.truth}
    for scan in range(1, spec.duration + 1):
        alive = []
        for t in spec.truth:
            if t.spawn < scan:
                states[t.label] = spec.motion.transition.propagate(states[t.label][None, :])[0]
            if t.spawn <= scan < t.death:
                alive.append((t.label, states[t.label].copy()))
        truth_states.append(alive)

    measurements, sources = [], []
    for scan in range(1, spec.duration + 1):
        scan_z, scan_src = [], []
        for label, x in truth_states[scan - 1]:
            if rng.random() < float(meas_model.p_detect(x)[0]):
                scan_z.append(meas_model.sample_measurement(x, rng))
                scan_src.append(label)
        clutter = meas_model.sample_clutter(rng)
        for z in clutter:
            scan_z.append(z)
            scan_src.append(None)
        z_dim = meas_model.region.shape[0]
        measurements.append(np.array(scan_z) if scan_z else np.empty((0, z_dim)))
        sources.append(scan_src)
    return Simulation(spec, truth_states, measurements, sources)


def ospa_parts(X, Y, params=OspaParams()):
    """OSPA distance with its localization and cardinality terms.

    X, Y: (n, d) arrays of positions.  Uses Euclidean base distance
    saturated at the cutoff, optimal matching, order-p mean.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float)) if np.size(X) else np.empty((0, 1))
    Y = np.atleast_2d(np.asarray(Y, dtype=float)) if np.size(Y) else np.empty((0, 1))
    n, m = X.shape[0], Y.shape[0]
    c, p = params.cutoff, params.order
    if n == 0 and m == 0:
        return 0.0, 0.0, 0.0
    if n == 0 or m == 0:
        return c, 0.0, c
    if n > m:
        X, Y, n, m = Y, X, m, n
    d = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=2)
    d = np.minimum(d, c) ** p
    cost, _ = lap.solve(d)
    loc = (cost / m) ** (1.0 / p)
    card = (c**p * (m - n) / m) ** (1.0 / p)
    total = ((cost + c**p * (m - n)) / m) ** (1.0 / p)
    return float(total), float(loc), float(card)


def ospa(X, Y, params=OspaParams()):
    """Scalar OSPA distance between two position sets."""
    return ospa_parts(X, Y, params)[0]


def customize(spec, duration=None, detection_prob=None, survival_prob=None,
              clutter_rate=None, clutter_scale=None, birth_probs=None,
              birth_prob_scale=None):
    """Derived scenario with selected parameters overridden.

    Mirrors the custom-scenario file schema: every field is optional and
    missing ones keep the base scenario's values.
    """
    from dataclasses import replace

    from .models import BearingRangeMeasurement, BirthSite, MotionModel

    motion, meas = spec.motion, spec.measurement
    if survival_prob is not None or birth_prob_scale is not None or birth_probs is not None:
        sites = motion.birth_sites
        if birth_probs is not None:
            if len(birth_probs) != len(sites):
                raise ValueError("birth_probs length must match the birth-site count")
            sites = tuple(
                BirthSite(s.index, float(r), s.density) for s, r in zip(sites, birth_probs)
            )
        if birth_prob_scale is not None:
            sites = tuple(
                BirthSite(s.index, min(s.prob * birth_prob_scale, 1.0 - 1e-6), s.density)
                for s in sites
            )
        motion = MotionModel(
            motion.transition,
            survival_prob if survival_prob is not None else motion.survival_prob,
            sites,
        )
    if clutter_rate is not None or clutter_scale is not None or detection_prob is not None:
        p_d = detection_prob if detection_prob is not None else meas.detection_prob
        rate = meas.clutter_rate if clutter_rate is None else float(clutter_rate)
        rate *= clutter_scale if clutter_scale is not None else 1.0
        if isinstance(meas, BearingRangeMeasurement):
            meas = BearingRangeMeasurement(
                meas.sigma_theta, meas.sigma_r, p_d, rate, meas.radius, meas.pos_idx
            )
        else:
            meas = type(meas)(meas.H, meas.R, p_d, rate, meas.region)
    out = replace(spec, motion=motion, measurement=meas)
    if duration is not None:
        out = replace(out, duration=int(duration))
    return out


CUSTOM_SCENARIO_KEYS = {
    "schema", "base", "duration", "detection_prob", "survival_prob",
    "clutter_rate", "clutter_scale", "birth_probs", "birth_prob_scale",
}


def spec_to_custom_dict(spec, base):
    """Custom-scenario document reproducing `spec` from a base scenario."""
    doc = {"schema": 1, "base": base, "duration": spec.duration}
    if spec.measurement.constant_detection is not None:
        doc["detection_prob"] = spec.measurement.constant_detection
    if spec.motion.constant_survival is not None:
        doc["survival_prob"] = spec.motion.constant_survival
    doc["clutter_rate"] = spec.measurement.clutter_rate
    doc["birth_probs"] = [s.prob for s in spec.motion.birth_sites]
    return doc


def custom_scenario(doc):
    """Scenario from a custom-file document: a base name plus overrides."""
    base = doc.get("base", "linear")
    if base == "linear":
        spec = linear_scenario()
    elif base == "nonlinear":
        spec = nonlinear_scenario()
    else:
        raise ValueError(f"custom scenario base must be linear or nonlinear, got '{base}'")
    unknown = set(doc) - CUSTOM_SCENARIO_KEYS
    if unknown:
        raise ValueError(f"unknown custom-scenario keys: {sorted(unknown)}")
    kwargs = {k: doc[k] for k in doc if k not in ("schema", "base")}
    return customize(spec, **kwargs)
