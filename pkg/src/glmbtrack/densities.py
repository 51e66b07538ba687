"""Single-track integral backends: Gaussian mixture and particle.

Both backends compute the three quantities the filter recursion needs
per track: the expected survival probability, the predicted density,
and for every measurement column the expected association factor along
with the conditioned posterior density.  All factors are produced in
log domain so that far-fetched associations keep finite log mass.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import GaussianMixture, ParticleSet, log_sum_exp

LOG_2PI = math.log(2.0 * math.pi)

# Gaussian-mixture management (standard practice values; growth is
# otherwise unbounded under repeated conditioning)
GM_PRUNE_WEIGHT = 1e-5
GM_MERGE_THRESHOLD = 4.0     # squared Mahalanobis distance
GM_MAX_COMPONENTS = 100


@dataclass(frozen=True)
class LinearGaussianKit:
    """Matrices of a linear-Gaussian state/observation pair."""

    F: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    R_obs: np.ndarray


@dataclass(frozen=True)
class SmcKit:
    """Particle budget and resampling policy for the particle backend."""

    particles_per_track: int = 1000
    resampler: str = "systematic"

    def __post_init__(self):
        if self.particles_per_track < 100:
            raise ValueError("need at least 100 particles per track")
        if self.resampler != "systematic":
            raise ValueError("only systematic resampling is implemented")


def _chol_with_jitter(S):
    """Cholesky with one jittered retry on failure."""
    S = 0.5 * (S + S.T)
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        jitter = 1e-9 * np.trace(S) / S.shape[0]
        return np.linalg.cholesky(S + jitter * np.eye(S.shape[0]))


def gm_predict(density, kit):
    """Push a mixture through x+ = F x + w: means Fm, covariances FPF' + Q."""
    F, Q = np.asarray(kit.F, float), np.asarray(kit.Q, float)
    if density.means.shape[1] != F.shape[1]:
        raise ValueError("state dimension mismatch")
    means = density.means @ F.T
    covs = F @ density.covariances @ F.T + Q
    covs = 0.5 * (covs + np.swapaxes(covs, 1, 2))
    return GaussianMixture(density.weights.copy(), means, covs)


def _gm_log_likelihoods(density, Z, kit):
    """Per-measurement, per-component log N(z; Hm, HPH'+R), plus update pieces."""
    H, R = np.asarray(kit.H, float), np.asarray(kit.R_obs, float)
    Z = np.atleast_2d(Z)
    n_comp = density.weights.shape[0]
    z_dim = H.shape[0]
    log_n = np.empty((Z.shape[0], n_comp))
    gains = np.empty((n_comp, density.means.shape[1], z_dim))
    upd_covs = np.empty_like(density.covariances)
    for c in range(n_comp):
        P = density.covariances[c]
        S = H @ P @ H.T + R
        L = _chol_with_jitter(S)
        mu = H @ density.means[c]
        diff = np.linalg.solve(L, (Z - mu).T)
        quad = np.sum(diff * diff, axis=0)
        log_det = 2.0 * np.sum(np.log(np.diag(L)))
        log_n[:, c] = -0.5 * (quad + log_det + z_dim * LOG_2PI)
        S_inv = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(z_dim)))
        K = P @ H.T @ S_inv
        gains[c] = K
        cov = (np.eye(P.shape[0]) - K @ H) @ P
        upd_covs[c] = 0.5 * (cov + cov.T)
    return log_n, gains, upd_covs


def gm_reduce(density):
    """Prune tiny weights, merge near-coincident components, cap the count."""
    w = density.weights
    keep = w > GM_PRUNE_WEIGHT
    if not np.any(keep):
        keep = w == w.max()
    w = w[keep] / w[keep].sum()
    means, covs = density.means[keep], density.covariances[keep]
    if len(w) > 1:
        order = list(np.argsort(-w))
        out_w, out_m, out_p = [], [], []
        while order:
            lead = order[0]
            inv = np.linalg.inv(covs[lead])
            group = [
                idx
                for idx in order
                if (means[idx] - means[lead]) @ inv @ (means[idx] - means[lead]) < GM_MERGE_THRESHOLD
            ]
            gw = w[group]
            total = gw.sum()
            m = gw @ means[group] / total
            spread = means[group] - m
            P = np.einsum("c,cij->ij", gw, covs[group]) / total + (spread.T * gw) @ spread / total
            out_w.append(total)
            out_m.append(m)
            out_p.append(0.5 * (P + P.T))
            order = [idx for idx in order if idx not in group]
        w = np.array(out_w)
        means, covs = np.array(out_m), np.array(out_p)
    if len(w) > GM_MAX_COMPONENTS:
        top = np.argsort(-w)[:GM_MAX_COMPONENTS]
        w, means, covs = w[top], means[top], covs[top]
    return GaussianMixture(w / w.sum(), means, covs)


def gm_psi_bar(density, z, kit, p_d, kappa):
    """Expected association factor and conditioned mixture for one column.

    z=None is the missed-detection case: factor 1 - P_D, density
    unchanged.  Otherwise the factor is (P_D/kappa) times the mixture
    evidence of z and the density is the reweighted Kalman update.
    """
    if z is None:
        return 1.0 - p_d, density
    log_n, gains, upd_covs = _gm_log_likelihoods(density, np.asarray(z)[None, :], kit)
    log_w = np.log(density.weights) + log_n[0]
    log_evidence = log_sum_exp(log_w)
    psi = math.exp(log_evidence) * p_d / kappa
    new_w = np.exp(log_w - log_evidence)
    H = np.asarray(kit.H, float)
    innov = np.asarray(z) - density.means @ H.T
    new_means = density.means + np.einsum("cij,cj->ci", gains, innov)
    posterior = gm_reduce(GaussianMixture(new_w, new_means, upd_covs))
    return psi, posterior


def systematic_resample(weights, rng):
    """Systematic resampling: indices drawn with a single uniform offset."""
    n = len(weights)
    positions = (np.arange(n) + rng.random()) / n
    return np.searchsorted(np.cumsum(weights), positions)


def effective_sample_size(weights):
    return 1.0 / float(np.sum(np.asarray(weights) ** 2))


def smc_predict(density, motion, rng):
    """Survival-conditioned particle prediction.

    Returns (expected survival, predicted set): weights are tilted by
    P_S(x)/P_S-bar, then states are propagated through the transition.
    """
    p_s = motion.p_survive(density.states)
    pbar_s = float(density.weights @ p_s)
    if pbar_s <= 0.0:
        raise ValueError("zero survival mass")
    weights = density.weights * p_s / pbar_s
    states = motion.transition.sample(density.states, rng)
    return pbar_s, ParticleSet(weights, states)


def smc_update(density, z, meas_model, rng=None):
    """Expected association factor and conditioned particle set for one column.

    z=None is the missed-detection case.  The posterior is resampled
    (systematic) when its effective sample size drops below half the
    particle count; rng=None skips resampling.
    """
    p_d = meas_model.p_detect(density.states)
    if z is None:
        mass = density.weights * (1.0 - p_d)
        psi = float(mass.sum())
        log_psi = math.log(psi) if psi > 0 else -math.inf
    else:
        log_g = meas_model.log_likelihood(np.asarray(z)[None, :], density.states)[0]
        log_mass = np.log(density.weights) + np.log(p_d) + log_g - math.log(meas_model.kappa(z))
        log_psi = log_sum_exp(log_mass)
        mass = np.exp(log_mass - np.max(log_mass))
        psi = math.exp(log_psi)
    total = mass.sum()
    if total <= 0.0 or not np.isfinite(total):
        raise ValueError("degenerate likelihood: no particle carries mass")
    weights = mass / total
    states = density.states
    if rng is not None and effective_sample_size(weights) < 0.5 * len(weights):
        idx = systematic_resample(weights, rng)
        states = states[idx]
        weights = np.full(len(idx), 1.0 / len(idx))
    return psi, ParticleSet(weights, states), log_psi


def smc_predict_update(density, z, motion, meas_model, rng):
    """Composed survival-prediction then measurement-conditioning step."""
    pbar_s, predicted = smc_predict(density, motion, rng)
    psi, posterior, _ = smc_update(predicted, z, meas_model, rng)
    return psi, posterior


class TrackTable:
    """Measurement-conditioning table of one predicted track.

    Holds the expected detection probability, log expected association
    factors for every column, and lazily materialized posteriors.
    """

    def __init__(self, predicted, pbar_d, log_q, make_posterior):
        self.predicted = predicted
        self.pbar_d = float(pbar_d)
        self.log_q = log_q                       # (M,) detection columns
        self.log_psi_miss = math.log1p(-self.pbar_d)
        self._make = make_posterior
        self._cache = {}

    def log_psi(self, j):
        return self.log_psi_miss if j == 0 else float(self.log_q[j - 1])

    def posterior(self, j):
        if j not in self._cache:
            self._cache[j] = self._make(j)
        return self._cache[j]


class GaussianBackend:
    """Closed-form backend; requires constant survival and detection."""

    name = "gm"

    def __init__(self, kit, p_survive, p_detect, kappa):
        if p_survive is None or p_detect is None:
            raise ValueError("the Gaussian backend needs constant P_S and P_D")
        self.kit = kit
        self.p_survive = float(p_survive)
        self.p_detect = float(p_detect)
        self.kappa = float(kappa)

    def predict_track(self, density, rng=None):
        return self.p_survive, gm_predict(density, self.kit)

    def birth_track(self, template, rng=None, seed=None):
        return template

    def meas_table(self, predicted, Z, seed=None):
        if len(Z):
            log_n, gains, upd_covs = _gm_log_likelihoods(predicted, Z, self.kit)
            log_w_base = np.log(predicted.weights)
            log_q = (
                math.log(self.p_detect)
                - math.log(self.kappa)
                + _log_sum_exp_rows(log_w_base + log_n)
            )
        else:
            log_n = gains = upd_covs = None
            log_q = np.empty(0)

        H = np.asarray(self.kit.H, float)

        def make_posterior(j):
            if j == 0:
                return predicted
            log_w = np.log(predicted.weights) + log_n[j - 1]
            new_w = np.exp(log_w - log_w.max())
            innov = Z[j - 1] - predicted.means @ H.T
            new_means = predicted.means + np.einsum("cij,cj->ci", gains, innov)
            return gm_reduce(GaussianMixture(new_w / new_w.sum(), new_means, upd_covs))

        return TrackTable(predicted, self.p_detect, log_q, make_posterior)


class ParticleBackend:
    """Sequential Monte Carlo backend; supports state-dependent P_S, P_D."""

    name = "smc"

    def __init__(self, motion, meas_model, kit=None):
        self.motion = motion
        self.meas = meas_model
        self.kit = kit or SmcKit()

    def predict_track(self, density, rng=None):
        return smc_predict(density, self.motion, rng)

    def birth_track(self, template, rng=None, seed=None):
        n = self.kit.particles_per_track
        comp = rng.choice(len(template.weights), size=n, p=template.weights)
        states = np.empty((n, template.means.shape[1]))
        for c in np.unique(comp):
            sel = comp == c
            L = _chol_with_jitter(template.covariances[c])
            states[sel] = template.means[c] + rng.standard_normal((sel.sum(), L.shape[0])) @ L.T
        return ParticleSet(np.full(n, 1.0 / n), states)

    def meas_table(self, predicted, Z, seed=None):
        p_d = self.meas.p_detect(predicted.states)
        pbar_d = float(predicted.weights @ p_d)
        log_w = np.log(predicted.weights)
        if len(Z):
            log_g = self.meas.log_likelihood(Z, predicted.states)     # (M, N)
            log_mass = log_w[None, :] + np.log(p_d)[None, :] + log_g - math.log(self.meas.kappa())
            log_q = _log_sum_exp_rows(log_mass)
        else:
            log_mass = None
            log_q = np.empty(0)

        def make_posterior(j):
            if j == 0:
                mass = predicted.weights * (1.0 - p_d)
            else:
                row = log_mass[j - 1]
                mass = np.exp(row - row.max())
            total = mass.sum()
            if total <= 0 or not np.isfinite(total):
                raise ValueError("degenerate likelihood: no particle carries mass")
            weights = mass / total
            states = predicted.states
            if effective_sample_size(weights) < 0.5 * len(weights):
                rng = np.random.default_rng((seed, j) if seed is not None else None)
                idx = systematic_resample(weights, rng)
                states = states[idx]
                weights = np.full(len(idx), 1.0 / len(idx))
            return ParticleSet(weights, states)

        return TrackTable(predicted, pbar_d, log_q, make_posterior)


def _log_sum_exp_rows(table):
    m = table.max(axis=1)
    return m + np.log(np.exp(table - m[:, None]).sum(axis=1))
