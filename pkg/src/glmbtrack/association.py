"""Per-component association problems and their two solvers.

A problem is a P x (M+2) table of positive hypothesis factors eta, rows
ordered surviving-tracks-then-births, columns ordered j = -1 (gone),
0 (missed), 1..M (measurement indices).  A solution is an assignment
vector gamma in {-1..M}^P in which no positive value repeats; its weight
is the row-wise product of the selected factors.

Two routes generate high-weight vectors: a Gibbs chain over the masked
per-row conditionals, and a deterministic ranked-assignment search
(Murty partition over the extended cost matrix).  Tables are handled in
log domain; the linear-domain view exists only for inspection.
"""

import heapq
import itertools

import numpy as np

from . import lap

try:  # compiled sweep kernel; the plain-Python path is semantically identical
    from numba import njit
except ImportError:  # pragma: no cover - accelerator absent
    njit = None


class AssociationProblem:
    """Immutable eta table with row split (surviving R, births P-R)."""

    def __init__(self, log_eta, n_survivors, labels=None):
        log_eta = np.asarray(log_eta, dtype=float)
        if log_eta.ndim != 2 or log_eta.shape[1] < 2:
            raise ValueError("eta table must be P x (M+2)")
        if not np.all(np.isfinite(log_eta)):
            raise ValueError("eta entries must be strictly positive (finite log)")
        if not 0 <= n_survivors <= log_eta.shape[0]:
            raise ValueError("survivor count out of range")
        self.log_eta = log_eta
        self.R = int(n_survivors)
        self.P = log_eta.shape[0]
        self.M = log_eta.shape[1] - 2
        self.label_order = tuple(labels) if labels is not None else None
        # per-row max-normalized linear masses for categorical draws
        self._row_table = np.exp(log_eta - log_eta.max(axis=1, keepdims=True))

    @classmethod
    def from_eta(cls, eta, n_survivors, labels=None):
        eta = np.asarray(eta, dtype=float)
        if np.any(eta <= 0):
            raise ValueError("eta entries must be strictly positive")
        return cls(np.log(eta), n_survivors, labels)

    @property
    def eta(self):
        return np.exp(self.log_eta)


def is_positive_one_one(gamma):
    """True when no positive entry of gamma repeats."""
    seen = set()
    for g in gamma:
        if g > 0:
            if g in seen:
                return False
            seen.add(g)
    return True


def enumerate_assignments(n_rows, n_meas):
    """All positive 1-1 vectors in {-1..M}^P, lexicographic order."""
    for gamma in itertools.product(range(-1, n_meas + 1), repeat=n_rows):
        if is_positive_one_one(gamma):
            yield np.array(gamma, dtype=int)


def recover(problem, gamma):
    """Map an assignment vector back to (kept labels, label -> column).

    Inverse of the encoding: entries >= 0 keep their row's label with the
    entry as its measurement index (0 = missed); -1 drops the label.
    """
    gamma = np.asarray(gamma, dtype=int)
    if gamma.shape != (problem.P,):
        raise ValueError("gamma length must equal row count")
    if not is_positive_one_one(gamma):
        raise ValueError("gamma is not positive 1-1")
    labels = problem.label_order or tuple(range(problem.P))
    kept = tuple(labels[i] for i in range(problem.P) if gamma[i] >= 0)
    assoc = {labels[i]: int(gamma[i]) for i in range(problem.P) if gamma[i] >= 0}
    return kept, assoc


def weight_of(problem, gamma):
    """Log weight sum_i log eta_i(gamma_i); -inf when gamma is infeasible."""
    gamma = np.asarray(gamma, dtype=int)
    if not is_positive_one_one(gamma):
        return -np.inf
    return float(problem.log_eta[np.arange(problem.P), gamma + 1].sum())


def gibbs_conditional(problem, n, gamma_others):
    """Conditional law of row n given the other P-1 entries.

    Returns probabilities over columns -1..M: the row's eta masked to
    zero on measurement indices already claimed by another row.
    """
    gamma_others = np.asarray(gamma_others, dtype=int)
    if gamma_others.shape != (problem.P - 1,):
        raise ValueError("expected the other P-1 entries")
    if not is_positive_one_one(gamma_others):
        raise ValueError("conditioning state is not positive 1-1")
    mass = problem._row_table[n].copy()
    for g in gamma_others:
        if g > 0:
            mass[g + 1] = 0.0
    return mass / mass.sum()


def _gibbs_sweeps(rows, gamma0, uniforms, out):
    """Chain kernel: coordinate sweeps over pre-drawn uniforms.

    For each sub-iteration, every measurement column's mass is masked by
    a full pass over the other coordinates (this linear scan per column
    is what makes a sweep cost O(P^2 M)), then the new entry is drawn by
    a linear CDF scan.
    """
    n_samples = uniforms.shape[0] + 1
    n_rows = rows.shape[0]
    n_meas = rows.shape[1] - 2
    g = gamma0.copy()
    out[0] = gamma0
    cum = np.empty(n_meas + 2)
    for t in range(1, n_samples):
        for n in range(n_rows):
            total = rows[n, 0]
            cum[0] = total
            total += rows[n, 1]
            cum[1] = total
            for j in range(1, n_meas + 1):
                w = rows[n, j + 1]
                for i in range(n_rows):
                    if g[i] == j and i != n:
                        w = 0.0
                total += w
                cum[j + 1] = total
            target = uniforms[t - 1, n] * total
            k = 0
            while cum[k] < target:
                k += 1
            g[n] = k - 1
        out[t] = g
    return out


_gibbs_kernel = njit(cache=True)(_gibbs_sweeps) if njit is not None else _gibbs_sweeps


def gibbs_sample(problem, gamma_init, n_samples, rng_seed):
    """Run the coordinate-wise chain and return all n_samples states.

    Sweeps rows in order, redrawing each entry from its conditional given
    the current values of every other row; the initial state is returned
    as the first sample.  Every state is positive 1-1.  Deterministic for
    a fixed seed (uniform variates are drawn up front, so the compiled
    and plain kernels produce identical chains).
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    gamma_init = np.asarray(gamma_init, dtype=np.int64)
    if gamma_init.shape != (problem.P,):
        raise ValueError("initial vector length must equal row count")
    if np.any(gamma_init < -1) or np.any(gamma_init > problem.M):
        raise ValueError("initial entries must lie in -1..M")
    if not is_positive_one_one(gamma_init):
        raise ValueError("initial vector is not positive 1-1")

    out = np.empty((n_samples, problem.P), dtype=np.int64)
    if n_samples == 1:
        out[0] = gamma_init
        return out
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    uniforms = rng.random((n_samples - 1, problem.P))
    _gibbs_kernel(problem._row_table, gamma_init, uniforms, out)
    return out


def build_cost_matrix(problem):
    """Extended P x (M+2P) cost matrix: -log eta, with private columns.

    Columns 0..M-1 carry the measurement costs; column M+i is row i's
    missed-detection cost and column M+P+i its not-present cost; all
    other cells hold the large sentinel.
    """
    P, M = problem.P, problem.M
    C = np.full((P, M + 2 * P), lap.BIG)
    C[:, :M] = -problem.log_eta[:, 2:]
    idx = np.arange(P)
    C[idx, M + idx] = -problem.log_eta[:, 1]
    C[idx, M + P + idx] = -problem.log_eta[:, 0]
    return C


def _gamma_from_cols(cols, n_meas):
    gamma = np.empty(len(cols), dtype=int)
    for i, c in enumerate(cols):
        gamma[i] = c + 1 if c < n_meas else (0 if c < n_meas + len(cols) else -1)
    return gamma


def murty_ranked(problem, n_best):
    """The up-to-n_best feasible vectors in non-increasing weight order.

    Murty partition: pop the cheapest pending subproblem, emit its
    optimum, and create one child per non-forced assignment with that
    cell banned and the preceding cells forced.  Forced pairs are fixed
    by deleting their rows and columns, so each child is an assignment
    solve on a shrunken masked matrix.
    """
    if n_best < 1:
        raise ValueError("need n_best >= 1")
    base = build_cost_matrix(problem)
    P, n_cols = base.shape

    def solve_node(forced, banned):
        rows = [r for r in range(P) if all(r != fr for fr, _ in forced)]
        cols = [c for c in range(n_cols) if all(c != fc for _, fc in forced)]
        sub = base[np.ix_(rows, cols)].copy()
        col_pos = {c: k for k, c in enumerate(cols)}
        row_pos = {r: k for k, r in enumerate(rows)}
        for (r, c) in banned:
            if r in row_pos and c in col_pos:
                sub[row_pos[r], col_pos[c]] = lap.BIG
        sub_total, sub_cols = lap.solve(sub)
        if sub_total >= lap.INFEASIBLE:
            return None
        full_cols = np.empty(P, dtype=int)
        for r, c in forced:
            full_cols[r] = c
        for k, r in enumerate(rows):
            full_cols[r] = cols[sub_cols[k]]
        total = sub_total + sum(base[r, c] for r, c in forced)
        return total, full_cols

    heap = []
    seq = itertools.count()
    first = solve_node((), ())
    if first is not None:
        heapq.heappush(heap, (first[0], next(seq), first[1], (), ()))

    ranked = []
    while heap and len(ranked) < n_best:
        cost, _, cols, forced, banned = heapq.heappop(heap)
        ranked.append(_gamma_from_cols(cols, problem.M))
        if len(ranked) == n_best:
            break
        forced_rows = {r for (r, _) in forced}
        free = [(r, int(cols[r])) for r in range(P) if r not in forced_rows]
        for q, pair in enumerate(free):
            child_forced = forced + tuple(free[:q])
            child_banned = banned + (pair,)
            sol = solve_node(child_forced, child_banned)
            if sol is not None:
                heapq.heappush(heap, (sol[0], next(seq), sol[1], child_forced, child_banned))
    return ranked


def dedup_rank(samples, problem):
    """Distinct vectors from samples, sorted by weight (desc), then lexicographic."""
    distinct = {}
    for gamma in samples:
        gamma = np.asarray(gamma, dtype=int)
        distinct.setdefault(gamma.tobytes(), gamma)
    return sorted(distinct.values(), key=lambda g: (-weight_of(problem, g), tuple(g)))
