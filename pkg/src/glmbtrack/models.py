"""Single-object motion and sensor models.

Units are meters, seconds and radians throughout.  Detection and
survival probabilities may be constants or state-dependent callables;
both are kept strictly inside (0, 1) so every association hypothesis
keeps positive mass.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import GaussianMixture, Label

LOG_2PI = math.log(2.0 * math.pi)


def _as_prob_fn(p):
    """Accept a probability as a constant or a callable on state batches."""
    if callable(p):
        return p
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError("probability must lie strictly inside (0,1)")
    return lambda X: np.full(np.shape(X)[0], p)


class LinearGaussianTransition:
    """x+ = F x + w with w ~ N(0, Q)."""

    def __init__(self, F, Q):
        self.F = np.asarray(F, dtype=float)
        self.Q = np.asarray(Q, dtype=float)
        # Q may be singular (e.g. no noise): use eigh-based square root
        vals, vecs = np.linalg.eigh(0.5 * (self.Q + self.Q.T))
        vals = np.clip(vals, 0.0, None)
        self._sqrtQ = vecs * np.sqrt(vals)

    def propagate(self, X):
        return X @ self.F.T

    def sample(self, X, rng):
        noise = rng.standard_normal(X.shape) @ self._sqrtQ.T
        return X @ self.F.T + noise


class CoordinatedTurnTransition:
    """Planar constant-turn model on [px, vx, py, vy, omega].

    Process noise enters as acceleration through G on the kinematic block
    and directly on the turn rate; the omega -> 0 limit reduces to the
    constant-velocity map.
    """

    dim = 5

    def __init__(self, sigma_w, sigma_u, dt=1.0):
        self.sigma_w = float(sigma_w)
        self.sigma_u = float(sigma_u)
        self.dt = float(dt)
        self.G = np.array([[0.5 * dt * dt, 0.0], [dt, 0.0], [0.0, 0.5 * dt * dt], [0.0, dt]])

    def matrix(self, omega):
        """Kinematic transition F(omega); analytic limit at omega = 0."""
        w = float(omega) * self.dt
        if abs(w) < 1e-10:
            s_ww, c_ww = self.dt, 0.0
        else:
            s_ww = math.sin(w) / float(omega)
            c_ww = (1.0 - math.cos(w)) / float(omega)
        sw, cw = math.sin(w), math.cos(w)
        return np.array(
            [
                [1.0, s_ww, 0.0, -c_ww, 0.0],
                [0.0, cw, 0.0, -sw, 0.0],
                [0.0, c_ww, 1.0, s_ww, 0.0],
                [0.0, sw, 0.0, cw, 0.0],
                [0.0, 0.0, 0.0, 0.0, 1.0],
            ]
        )

    def propagate(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty_like(X)
        w = X[:, 4] * self.dt
        small = np.abs(w) < 1e-10
        omega_safe = np.where(small, 1.0, X[:, 4])
        s_ww = np.where(small, self.dt, np.sin(w) / omega_safe)
        c_ww = np.where(small, 0.0, (1.0 - np.cos(w)) / omega_safe)
        sw, cw = np.sin(w), np.cos(w)
        out[:, 0] = X[:, 0] + s_ww * X[:, 1] - c_ww * X[:, 3]
        out[:, 1] = cw * X[:, 1] - sw * X[:, 3]
        out[:, 2] = c_ww * X[:, 1] + X[:, 2] + s_ww * X[:, 3]
        out[:, 3] = sw * X[:, 1] + cw * X[:, 3]
        out[:, 4] = X[:, 4]
        return out

    def sample(self, X, rng):
        out = self.propagate(X)
        acc = rng.standard_normal((out.shape[0], 2)) * self.sigma_w
        out[:, :4] += acc @ self.G.T
        out[:, 4] += rng.standard_normal(out.shape[0]) * self.sigma_u
        return out


@dataclass(frozen=True)
class BirthSite:
    """One candidate new track per scan: existence probability and prior."""

    index: int
    prob: float               # r_B, strictly inside (0,1)
    density: GaussianMixture

    def __post_init__(self):
        if not 0.0 < self.prob < 1.0:
            raise ValueError("birth probability must lie strictly inside (0,1)")


class MotionModel:
    """Survival + Markov transition + multi-Bernoulli birth."""

    def __init__(self, transition, survival_prob, birth_sites):
        self.transition = transition
        self.survival_prob = survival_prob
        self._p_s = _as_prob_fn(survival_prob)
        self.birth_sites = tuple(birth_sites)

    @property
    def constant_survival(self):
        return None if callable(self.survival_prob) else float(self.survival_prob)

    def p_survive(self, X):
        """Survival probabilities for a batch of states, shape (N,)."""
        return np.asarray(self._p_s(np.atleast_2d(X)), dtype=float)

    def birth_labels(self, scan):
        """Labels the birth model proposes for the given scan."""
        return tuple(Label(scan, s.index) for s in self.birth_sites)


class MeasurementModel:
    """Base sensor: detection profile, likelihood, Poisson clutter.

    Subclasses provide `_log_g_batch` (M x N log-likelihood table),
    `observe` (noiseless z = h(x)) and the observation region.
    """

    def __init__(self, detection_prob, clutter_rate, region):
        self.detection_prob = detection_prob
        self._p_d = _as_prob_fn(detection_prob)
        self.clutter_rate = float(clutter_rate)   # intensity per unit region measure
        self.region = np.asarray(region, dtype=float)   # (z_dim, 2) bounds

    @property
    def constant_detection(self):
        return None if callable(self.detection_prob) else float(self.detection_prob)

    @property
    def region_measure(self):
        return float(np.prod(self.region[:, 1] - self.region[:, 0]))

    @property
    def clutter_mean(self):
        return self.clutter_rate * self.region_measure

    def kappa(self, z=None):
        """Clutter intensity at z (uniform over the observation region)."""
        return self.clutter_rate

    def p_detect(self, X):
        return np.asarray(self._p_d(np.atleast_2d(X)), dtype=float)

    def log_likelihood(self, Z, X):
        """log g(z|x) table of shape (M, N) for Z (M, z_dim), X (N, d)."""
        return self._log_g_batch(np.atleast_2d(Z), np.atleast_2d(X))

    def psi(self, measurements, j, x, label=None):
        """Association factor for one track state.

        j = 0 means missed detection (returns 1 - P_D); j in 1..M returns
        P_D * g(z_j | x) / kappa(z_j).
        """
        measurements = np.atleast_2d(measurements) if len(measurements) else np.empty((0, self.region.shape[0]))
        m = measurements.shape[0]
        if not 0 <= j <= m:
            raise IndexError(f"psi index {j} outside 0..{m}")
        x = np.atleast_2d(x)
        p_d = float(self.p_detect(x)[0])
        if j == 0:
            return 1.0 - p_d
        z = measurements[j - 1]
        log_g = float(self.log_likelihood(z[None, :], x)[0, 0])
        return p_d * math.exp(log_g) / self.kappa(z)

    def sample_clutter(self, rng):
        count = rng.poisson(self.clutter_mean)
        lo, hi = self.region[:, 0], self.region[:, 1]
        return lo + rng.random((count, self.region.shape[0])) * (hi - lo)


class LinearGaussianMeasurement(MeasurementModel):
    """z = H x + e with e ~ N(0, R)."""

    def __init__(self, H, R, detection_prob, clutter_rate, region):
        super().__init__(detection_prob, clutter_rate, region)
        self.H = np.asarray(H, dtype=float)
        self.R = np.asarray(R, dtype=float)
        self._chol_R = np.linalg.cholesky(self.R)

    def observe(self, X):
        return np.atleast_2d(X) @ self.H.T

    def _log_g_batch(self, Z, X):
        mu = self.observe(X)                      # (N, z)
        diff = Z[:, None, :] - mu[None, :, :]     # (M, N, z)
        sol = np.linalg.solve(self._chol_R, diff.reshape(-1, diff.shape[-1]).T)
        quad = np.sum(sol * sol, axis=0).reshape(diff.shape[:2])
        log_det = 2.0 * np.sum(np.log(np.diag(self._chol_R)))
        return -0.5 * (quad + log_det + diff.shape[-1] * LOG_2PI)

    def sample_measurement(self, x, rng):
        return self.observe(x)[0] + self._chol_R @ rng.standard_normal(self.H.shape[0])


class BearingRangeMeasurement(MeasurementModel):
    """z = [theta, r] from the +x axis on the upper half plane.

    Bearing is atan2(py, px) in [0, pi]; clutter is uniform on the
    (theta, r) product region, matching an intensity given per rad*m.
    The detection profile, when not constant, is an unnormalized
    isotropic Gaussian in position.
    """

    def __init__(self, sigma_theta, sigma_r, detection_prob, clutter_rate, radius, pos_idx=(0, 2)):
        region = np.array([[0.0, math.pi], [0.0, float(radius)]])
        super().__init__(detection_prob, clutter_rate, region)
        self.sigma_theta = float(sigma_theta)
        self.sigma_r = float(sigma_r)
        self.radius = float(radius)
        self.pos_idx = tuple(pos_idx)

    def observe(self, X):
        X = np.atleast_2d(X)
        px, py = X[:, self.pos_idx[0]], X[:, self.pos_idx[1]]
        return np.stack([np.arctan2(py, px), np.hypot(px, py)], axis=1)

    def _log_g_batch(self, Z, X):
        mu = self.observe(X)
        d_theta = (Z[:, None, 0] - mu[None, :, 0]) / self.sigma_theta
        d_r = (Z[:, None, 1] - mu[None, :, 1]) / self.sigma_r
        log_norm = math.log(self.sigma_theta) + math.log(self.sigma_r) + LOG_2PI
        return -0.5 * (d_theta**2 + d_r**2) - log_norm

    def sample_measurement(self, x, rng):
        z = self.observe(x)[0]
        return z + rng.standard_normal(2) * np.array([self.sigma_theta, self.sigma_r])


def gaussian_detection_profile(peak, edge, radius, pos_idx=(0, 2)):
    """Isotropic position-dependent P_D with given values at r=0 and r=radius."""
    if not (0.0 < edge < peak < 1.0):
        raise ValueError("need 0 < edge < peak < 1")
    scale = -(radius**2) / (2.0 * math.log(edge / peak))

    def p_d(X):
        X = np.atleast_2d(X)
        r2 = X[:, pos_idx[0]] ** 2 + X[:, pos_idx[1]] ** 2
        return peak * np.exp(-r2 / (2.0 * scale))

    return p_d
